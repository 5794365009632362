//! Field containers, far-field data and the change of variables between the
//! original velocity `u` and the effective velocity `v = u + eps d/dx ln rho`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{d1, Ghosts, Grid1D};
use crate::thermo::FluidParams;

/// Which velocity the momentum field carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// `mom = rho v`, the effective-velocity (parabolic) form.
    EffectiveV,
    /// `mom = rho u`, the original capillary form.
    OriginalU,
    /// `mom = rho u` for the inviscid limit system.
    Euler,
}

impl Formulation {
    pub fn name(&self) -> &'static str {
        match self {
            Formulation::EffectiveV => "effective",
            Formulation::OriginalU => "original",
            Formulation::Euler => "euler",
        }
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "effective" | "effective_v" | "v" => Ok(Formulation::EffectiveV),
            "original" | "original_u" | "u" => Ok(Formulation::OriginalU),
            "euler" => Ok(Formulation::Euler),
            other => Err(Error::Config(format!("unknown formulation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub rho: Vec<f64>,
    pub mom: Vec<f64>,
    pub formulation: Formulation,
    pub time: f64,
}

impl State {
    pub fn new(rho: Vec<f64>, mom: Vec<f64>, formulation: Formulation, time: f64) -> Result<Self> {
        if rho.len() != mom.len() {
            return Err(Error::Invalid(format!(
                "density has {} cells but momentum has {}",
                rho.len(),
                mom.len()
            )));
        }
        Ok(Self {
            rho,
            mom,
            formulation,
            time,
        })
    }

    pub fn from_velocity(rho: Vec<f64>, vel: &[f64], formulation: Formulation, time: f64) -> Result<Self> {
        let mom = rho.iter().zip(vel).map(|(r, w)| r * w).collect();
        Self::new(rho, mom, formulation, time)
    }

    pub fn uniform(n: usize, rho: f64, vel: f64, formulation: Formulation) -> Self {
        Self {
            rho: vec![rho; n],
            mom: vec![rho * vel; n],
            formulation,
            time: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Velocity carried by the momentum field (`v` or `u` depending on the tag).
    pub fn velocity(&self) -> Vec<f64> {
        self.rho
            .iter()
            .zip(&self.mom)
            .map(|(r, m)| if *r > 0.0 { m / r } else { 0.0 })
            .collect()
    }

    /// Errors on the first cell with non-positive or non-finite density.
    pub fn check(&self, grid: &Grid1D) -> Result<()> {
        if self.len() != grid.n() {
            return Err(Error::Invalid(format!(
                "state has {} cells, grid has {}",
                self.len(),
                grid.n()
            )));
        }
        for (i, (&r, &m)) in self.rho.iter().zip(&self.mom).enumerate() {
            if !r.is_finite() {
                return Err(Error::NonFinite {
                    field: "rho",
                    index: i,
                    time: self.time,
                });
            }
            if !m.is_finite() {
                return Err(Error::NonFinite {
                    field: "mom",
                    index: i,
                    time: self.time,
                });
            }
            if r <= 0.0 {
                return Err(Error::Vacuum {
                    index: i,
                    x: grid.x(i),
                    time: self.time,
                    rho: r,
                });
            }
        }
        Ok(())
    }

    pub fn total_mass(&self, grid: &Grid1D) -> f64 {
        crate::grid::integrate(grid, &self.rho)
    }

    /// Re-expresses the state in another formulation. Converting between
    /// `OriginalU` and `EffectiveV` applies the velocity transform with
    /// far-field ghost densities; `Euler` is treated as `u` with `eps = 0`.
    pub fn convert(&self, to: Formulation, p: &FluidParams, grid: &Grid1D, far: &FarField) -> Result<State> {
        use Formulation::*;
        let ghosts = far.density_ghosts();
        let vel = self.velocity();
        let out = match (self.formulation, to) {
            (a, b) if a == b => vel,
            (EffectiveV, OriginalU) | (EffectiveV, Euler) => {
                original_velocity(&self.rho, &vel, p.epsilon(), grid, ghosts)?
            }
            (OriginalU, EffectiveV) | (Euler, EffectiveV) => {
                effective_velocity(&self.rho, &vel, p.epsilon(), grid, ghosts)?
            }
            _ => vel,
        };
        State::from_velocity(self.rho.clone(), &out, to, self.time)
    }
}

/// Left/right end states and the half-width of the stationary reference profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarField {
    pub rho_minus: f64,
    pub u_minus: f64,
    pub rho_plus: f64,
    pub u_plus: f64,
    #[serde(rename = "L0")]
    pub l0: f64,
}

impl FarField {
    pub fn new(rho_minus: f64, u_minus: f64, rho_plus: f64, u_plus: f64, l0: f64) -> Result<Self> {
        if !(rho_minus > 0.0) || !(rho_plus > 0.0) {
            return Err(Error::Domain {
                what: "far-field density",
                value: rho_minus.min(rho_plus),
            });
        }
        if !(l0 > 0.0) {
            return Err(Error::Domain {
                what: "reference half-width L0",
                value: l0,
            });
        }
        Ok(Self {
            rho_minus,
            u_minus,
            rho_plus,
            u_plus,
            l0,
        })
    }

    pub fn left(&self) -> (f64, f64) {
        (self.rho_minus, self.u_minus)
    }

    pub fn right(&self) -> (f64, f64) {
        (self.rho_plus, self.u_plus)
    }

    pub fn density_ghosts(&self) -> Ghosts {
        Ghosts::new(self.rho_minus, self.rho_plus)
    }

    pub fn momentum_ghosts(&self) -> Ghosts {
        Ghosts::new(self.rho_minus * self.u_minus, self.rho_plus * self.u_plus)
    }

    pub fn is_uniform(&self) -> bool {
        self.rho_minus == self.rho_plus && self.u_minus == self.u_plus
    }

    /// Stationary reference pair `(rho_bar, v_bar)`: a smooth monotone step
    /// between the end states, exactly constant for `|x| >= L0`.
    pub fn reference(&self, grid: &Grid1D) -> (Vec<f64>, Vec<f64>) {
        self.step_profile(grid, self.l0)
    }

    /// Riemann data mollified by the same step over half-width `width`.
    pub fn step_profile(&self, grid: &Grid1D, width: f64) -> (Vec<f64>, Vec<f64>) {
        let xs = grid.centers();
        let rho = xs
            .iter()
            .map(|&x| lerp(self.rho_minus, self.rho_plus, smooth_step(x, width)))
            .collect();
        let vel = xs
            .iter()
            .map(|&x| lerp(self.u_minus, self.u_plus, smooth_step(x, width)))
            .collect();
        (rho, vel)
    }

    /// Initial state from Riemann data mollified over `width`, expressed in
    /// `formulation`. The mollified velocity is taken as `v`; the original
    /// velocity follows from `u = v - eps d/dx ln rho`.
    pub fn mollified_state(
        &self,
        grid: &Grid1D,
        p: &FluidParams,
        width: f64,
        formulation: Formulation,
    ) -> Result<State> {
        let (rho, v) = self.step_profile(grid, width);
        let vel = match formulation {
            Formulation::EffectiveV | Formulation::Euler => v,
            Formulation::OriginalU => original_velocity(&rho, &v, p.epsilon(), grid, self.density_ghosts())?,
        };
        State::from_velocity(rho, &vel, formulation, 0.0)
    }

    /// Sharp Riemann data: left state for `x < 0`, right state otherwise.
    pub fn riemann_state(&self, grid: &Grid1D, formulation: Formulation) -> State {
        let (rho, vel): (Vec<f64>, Vec<f64>) = grid
            .centers()
            .into_iter()
            .map(|x| if x < 0.0 { self.left() } else { self.right() })
            .unzip();
        State::from_velocity(rho, &vel, formulation, 0.0).expect("equal lengths")
    }
}

#[inline]
fn lerp(a: f64, b: f64, s: f64) -> f64 {
    a + (b - a) * s
}

/// C-infinity monotone step from 0 to 1, equal to 0 for `x <= -w` and 1 for
/// `x >= w`: `(1 + tanh(2 s / (1 - s^2))) / 2` with `s = x / w`.
pub fn smooth_step(x: f64, w: f64) -> f64 {
    let s = x / w;
    if s <= -1.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        0.5 * (1.0 + (2.0 * s / (1.0 - s * s)).tanh())
    }
}

fn log_density(rho: &[f64], ghosts: Ghosts) -> Result<(Vec<f64>, Ghosts)> {
    let mut out = Vec::with_capacity(rho.len());
    for (i, &r) in rho.iter().enumerate() {
        if !(r > 0.0) {
            return Err(Error::Vacuum {
                index: i,
                x: f64::NAN,
                time: f64::NAN,
                rho: r,
            });
        }
        out.push(r.ln());
    }
    if !(ghosts.left > 0.0 && ghosts.right > 0.0) {
        return Err(Error::Domain {
            what: "ghost density",
            value: ghosts.left.min(ghosts.right),
        });
    }
    Ok((out, Ghosts::new(ghosts.left.ln(), ghosts.right.ln())))
}

/// `eps d/dx ln rho` with the centred stencil.
pub fn log_density_gradient(rho: &[f64], epsilon: f64, grid: &Grid1D, rho_ghosts: Ghosts) -> Result<Vec<f64>> {
    let (ln, g) = log_density(rho, rho_ghosts)?;
    Ok(d1(&ln, g, grid.h()).into_iter().map(|d| epsilon * d).collect())
}

/// `v = u + eps d/dx ln rho`
pub fn effective_velocity(rho: &[f64], u: &[f64], epsilon: f64, grid: &Grid1D, rho_ghosts: Ghosts) -> Result<Vec<f64>> {
    if epsilon == 0.0 {
        return Ok(u.to_vec());
    }
    let corr = log_density_gradient(rho, epsilon, grid, rho_ghosts)?;
    Ok(u.iter().zip(corr).map(|(u, c)| u + c).collect())
}

/// `u = v - eps d/dx ln rho`, the inverse of [`effective_velocity`].
pub fn original_velocity(rho: &[f64], v: &[f64], epsilon: f64, grid: &Grid1D, rho_ghosts: Ghosts) -> Result<Vec<f64>> {
    if epsilon == 0.0 {
        return Ok(v.to_vec());
    }
    let corr = log_density_gradient(rho, epsilon, grid, rho_ghosts)?;
    Ok(v.iter().zip(corr).map(|(v, c)| v - c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_density_leaves_velocity_unchanged() {
        let g = Grid1D::new(-1.0, 1.0, 16).unwrap();
        let rho = vec![2.5; 16];
        let u: Vec<f64> = g.centers().iter().map(|x| x.sin()).collect();
        let v = effective_velocity(&rho, &u, 0.3, &g, Ghosts::new(2.5, 2.5)).unwrap();
        assert_eq!(u, v);
    }

    #[test]
    fn zero_epsilon_is_identity() {
        let g = Grid1D::new(-1.0, 1.0, 16).unwrap();
        let rho: Vec<f64> = g.centers().iter().map(|x| 1.0 + 0.5 * x * x).collect();
        let u: Vec<f64> = g.centers().iter().map(|x| x.cos()).collect();
        assert_eq!(effective_velocity(&rho, &u, 0.0, &g, Ghosts::new(1.0, 1.0)).unwrap(), u);
    }

    #[test]
    fn exponential_density_gives_unit_shift_second_order() {
        // rho = exp(x): d/dx ln rho = 1 exactly, so v - u = eps everywhere.
        let mut errs = Vec::new();
        for n in [32usize, 64, 128] {
            let g = Grid1D::new(-1.0, 1.0, n).unwrap();
            let rho: Vec<f64> = g.centers().iter().map(|x| x.exp()).collect();
            let u = vec![0.0; n];
            let h = g.h();
            let ghosts = Ghosts::new((-1.0 - 0.5 * h).exp(), (1.0 + 0.5 * h).exp());
            let v = effective_velocity(&rho, &u, 1.0, &g, ghosts).unwrap();
            let err = v.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
            errs.push(err);
        }
        // ln(exp(x)) is linear, so the centred stencil is exact up to roundoff
        // in the logarithm and the division by 2h.
        assert!(errs.iter().all(|e| *e < 1e-11), "{errs:?}");
    }

    #[test]
    fn second_order_on_non_linear_log_density() {
        // ln rho = sin(x): exact shift cos(x); stencil error ~ h^2/6.
        let mut errs = Vec::new();
        for n in [32usize, 64, 128] {
            let g = Grid1D::new(0.0, 2.0, n).unwrap();
            let h = g.h();
            let rho: Vec<f64> = g.centers().iter().map(|x| x.sin().exp()).collect();
            let ghosts = Ghosts::new((-0.5 * h).sin().exp(), (2.0 + 0.5 * h).sin().exp());
            let v = effective_velocity(&rho, &vec![0.0; n], 1.0, &g, ghosts).unwrap();
            let err = v
                .iter()
                .zip(g.centers())
                .map(|(v, x)| (v - x.cos()).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..2.2).contains(&order), "order {order}");
        }
    }

    #[test]
    fn nonpositive_density_is_rejected() {
        let g = Grid1D::new(0.0, 1.0, 4).unwrap();
        let err = effective_velocity(&[1.0, 0.0, 1.0, 1.0], &[0.0; 4], 0.1, &g, Ghosts::new(1.0, 1.0));
        assert!(matches!(err, Err(Error::Vacuum { index: 1, .. })));
    }

    #[test]
    fn smooth_step_is_exact_outside_half_width() {
        assert_eq!(smooth_step(-1.0, 1.0), 0.0);
        assert_eq!(smooth_step(-3.0, 1.0), 0.0);
        assert_eq!(smooth_step(1.0, 1.0), 1.0);
        assert_eq!(smooth_step(0.0, 1.0), 0.5);
        let xs: Vec<f64> = (0..=200).map(|i| -1.0 + 0.01 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| smooth_step(*x, 1.0)).collect();
        assert!(ys.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn mollified_original_state_round_trips_to_effective() {
        let g = Grid1D::new(-2.0, 2.0, 200).unwrap();
        let p = FluidParams::kinetic(2.0, 0.1).unwrap();
        let far = FarField::new(2.0, 0.0, 1.0, 0.0, 1.0).unwrap();
        let s_u = far.mollified_state(&g, &p, 0.2, Formulation::OriginalU).unwrap();
        let s_v = far.mollified_state(&g, &p, 0.2, Formulation::EffectiveV).unwrap();
        let back = s_u.convert(Formulation::EffectiveV, &p, &g, &far).unwrap();
        for (a, b) in back.velocity().iter().zip(s_v.velocity()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn transform_round_trip(seed in proptest::collection::vec((0.1f64..3.0, -2.0f64..2.0), 8..40),
                                eps in 0.0f64..0.5) {
            let n = seed.len();
            let g = Grid1D::new(-1.0, 1.0, n).unwrap();
            let rho: Vec<f64> = seed.iter().map(|s| s.0).collect();
            let u: Vec<f64> = seed.iter().map(|s| s.1).collect();
            let ghosts = Ghosts::new(rho[0], rho[n - 1]);
            let v = effective_velocity(&rho, &u, eps, &g, ghosts).unwrap();
            let back = original_velocity(&rho, &v, eps, &g, ghosts).unwrap();
            let corr = log_density_gradient(&rho, eps, &g, ghosts).unwrap();
            for i in 0..n {
                // (u + c) - c reproduces u up to the rounding of the addition
                let tol = f64::EPSILON * (u[i].abs() + corr[i].abs());
                prop_assert!((back[i] - u[i]).abs() <= tol);
            }
        }
    }
}
