//! Gamma-law closure: pressure, internal energy and the exponents derived
//! from the adiabatic index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pressure law `P = a rho^gamma` together with the viscosity-capillarity
/// scale. Derived exponents are computed on demand from `(a, gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    a: f64,
    gamma: f64,
    epsilon: f64,
}

impl FluidParams {
    pub fn new(a: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::Domain {
                what: "adiabatic exponent gamma (must exceed 1)",
                value: gamma,
            });
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain {
                what: "pressure coefficient a (must be positive)",
                value: a,
            });
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::Domain {
                what: "epsilon (must be non-negative)",
                value: epsilon,
            });
        }
        Ok(Self { a, gamma, epsilon })
    }

    /// Uses `a = (gamma - 1)^2 / (4 gamma)`, the normalization under which the
    /// entropy kernel `(rho^(gamma-1) - w^2)_+^lambda` and the invariants
    /// `v +- rho^theta` need no extra scaling (`b_inv == 1`).
    pub fn kinetic(gamma: f64, epsilon: f64) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::Domain {
                what: "adiabatic exponent gamma (must exceed 1)",
                value: gamma,
            });
        }
        Self::new(kinetic_a(gamma), gamma, epsilon)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.a, self.gamma, epsilon)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `(gamma - 1) / 2`
    pub fn theta(&self) -> f64 {
        0.5 * (self.gamma - 1.0)
    }

    /// `(3 - gamma) / (2 (gamma - 1))`, always greater than -1/2.
    pub fn lambda(&self) -> f64 {
        (3.0 - self.gamma) / (2.0 * (self.gamma - 1.0))
    }

    /// Coefficient of `rho^theta` in the Riemann invariants:
    /// `2 sqrt(a gamma) / (gamma - 1)`.
    pub fn b_inv(&self) -> f64 {
        2.0 * (self.a * self.gamma).sqrt() / (self.gamma - 1.0)
    }

    pub fn is_kinetic(&self) -> bool {
        ((self.a - kinetic_a(self.gamma)) / self.a).abs() < 1e-14
    }

    /// Sound speed `sqrt(P'(rho)) = sqrt(a gamma) rho^theta`.
    pub fn sound_speed(&self, rho: f64) -> f64 {
        (self.a * self.gamma).sqrt() * rho.powf(self.theta())
    }

    /// `P'(rho)`
    pub fn dpressure(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// `e''(rho) = a gamma rho^(gamma-2)`
    pub fn d2_internal_energy(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 2.0)
    }

    /// Unchecked `a rho^gamma` for hot loops where positivity is already known.
    #[inline]
    pub(crate) fn p(&self, rho: f64) -> f64 {
        self.a * rho.powf(self.gamma)
    }

    /// Unchecked `e(rho)`.
    #[inline]
    pub(crate) fn e(&self, rho: f64) -> f64 {
        self.a / (self.gamma - 1.0) * rho.powf(self.gamma)
    }

    /// Unchecked `e'(rho)`.
    #[inline]
    pub(crate) fn de(&self, rho: f64) -> f64 {
        self.a * self.gamma / (self.gamma - 1.0) * rho.powf(self.gamma - 1.0)
    }
}

pub fn kinetic_a(gamma: f64) -> f64 {
    (gamma - 1.0).powi(2) / (4.0 * gamma)
}

fn check_density(rho: f64) -> Result<()> {
    if rho >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "density",
            value: rho,
        })
    }
}

pub fn pressure(rho: f64, p: &FluidParams) -> Result<f64> {
    check_density(rho)?;
    Ok(p.p(rho))
}

/// Internal energy `e(rho) = a / (gamma - 1) rho^gamma`.
pub fn internal_energy(rho: f64, p: &FluidParams) -> Result<f64> {
    check_density(rho)?;
    Ok(p.e(rho))
}

/// Derivative `e'(rho) = a gamma / (gamma - 1) rho^(gamma - 1)`.
pub fn internal_energy_derivative(rho: f64, p: &FluidParams) -> Result<f64> {
    check_density(rho)?;
    Ok(p.de(rho))
}

/// Bregman divergence of the internal energy,
/// `e(rho) - e(rho_bar) - e'(rho_bar) (rho - rho_bar)`.
pub fn relative_energy(rho: f64, rho_bar: f64, p: &FluidParams) -> Result<f64> {
    check_density(rho)?;
    if !(rho_bar > 0.0) {
        return Err(Error::Domain {
            what: "reference density",
            value: rho_bar,
        });
    }
    Ok(relative_energy_unchecked(rho, rho_bar, p))
}

#[inline]
pub(crate) fn relative_energy_unchecked(rho: f64, rho_bar: f64, p: &FluidParams) -> f64 {
    let d = p.e(rho) - p.e(rho_bar) - p.de(rho_bar) * (rho - rho_bar);
    // convexity makes the exact value non-negative; cancellation can leave -ulp
    d.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit(gamma: f64) -> FluidParams {
        FluidParams::new(1.0, gamma, 0.0).unwrap()
    }

    #[test]
    fn pressure_values() {
        assert_eq!(pressure(3.0, &unit(2.0)).unwrap(), 9.0);
        assert_eq!(pressure(0.0, &unit(1.4)).unwrap(), 0.0);
        // 2^1.4 = exp(1.4 ln 2) = 2.6390158215457884
        assert_relative_eq!(
            pressure(2.0, &unit(1.4)).unwrap(),
            2.639_015_821_545_788_4,
            max_relative = 1e-15
        );
        assert!(matches!(pressure(-1.0, &unit(2.0)), Err(Error::Domain { .. })));
    }

    #[test]
    fn internal_energy_values() {
        let p = unit(2.0);
        assert_eq!(internal_energy(1.0, &p).unwrap(), 1.0);
        assert_eq!(internal_energy(0.0, &p).unwrap(), 0.0);
        assert_eq!(internal_energy(2.0, &p).unwrap(), 4.0);
        assert_eq!(internal_energy_derivative(2.0, &p).unwrap(), 4.0);
        assert!(internal_energy(-0.5, &p).is_err());
    }

    #[test]
    fn relative_energy_values() {
        let p = unit(2.0);
        assert_eq!(relative_energy(1.7, 1.7, &p).unwrap(), 0.0);
        assert_eq!(relative_energy(2.0, 1.0, &p).unwrap(), 1.0);
        assert_eq!(relative_energy(0.0, 1.0, &p).unwrap(), 1.0);
        assert!(relative_energy(1.0, 0.0, &p).is_err());
    }

    #[test]
    fn derived_exponents() {
        let p = FluidParams::kinetic(2.0, 0.1).unwrap();
        assert_eq!(p.theta(), 0.5);
        assert_eq!(p.lambda(), 0.5);
        assert_relative_eq!(p.b_inv(), 1.0, max_relative = 1e-15);
        assert!(p.is_kinetic());
        let p3 = FluidParams::kinetic(3.0, 0.0).unwrap();
        assert_eq!(p3.lambda(), 0.0);
        let g = FluidParams::new(0.7, 1.4, 0.0).unwrap();
        assert_relative_eq!(g.b_inv(), 2.0 * (0.7f64 * 1.4).sqrt() / 0.4, max_relative = 1e-14);
        assert!(!g.is_kinetic());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(FluidParams::new(1.0, 1.0, 0.0).is_err());
        assert!(FluidParams::new(0.0, 2.0, 0.0).is_err());
        assert!(FluidParams::new(1.0, 2.0, -1e-3).is_err());
        assert!(FluidParams::new(1.0, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn relative_energy_lower_bound_shape_gamma2() {
        // e*(rho, rb) >= c rho (rho^theta - rb^theta)^2 with c > 0 on a bounded sample
        let p = unit(2.0);
        let mut c_min = f64::INFINITY;
        for i in 1..60 {
            for j in 1..60 {
                let rho = 0.05 * i as f64;
                let rb = 0.05 * j as f64;
                if i == j {
                    continue;
                }
                let lhs = relative_energy(rho, rb, &p).unwrap();
                let shape = rho * (rho.sqrt() - rb.sqrt()).powi(2);
                c_min = c_min.min(lhs / shape);
            }
        }
        assert!(c_min > 0.0 && c_min.is_finite(), "c = {c_min}");
    }

    proptest! {
        #[test]
        fn monotone_and_midpoint_convex(gamma in 1.05f64..4.0, r1 in 0.0f64..5.0, r2 in 0.0f64..5.0) {
            let p = unit(gamma);
            let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
            prop_assume!(hi - lo > 1e-9);
            let mid = 0.5 * (lo + hi);
            for f in [pressure, internal_energy] {
                let (fl, fm, fh) = (f(lo, &p).unwrap(), f(mid, &p).unwrap(), f(hi, &p).unwrap());
                prop_assert!(fl < fh);
                prop_assert!(fm <= 0.5 * (fl + fh) * (1.0 + 1e-14));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn relative_energy_nonnegative(gamma in 1.05f64..5.0, rho in 0.0f64..10.0, rb in 1e-3f64..10.0) {
            let p = unit(gamma);
            prop_assert!(relative_energy(rho, rb, &p).unwrap() >= 0.0);
        }
    }
}
