//! Uniform cell-centred mesh and the second-order centred stencils used by
//! every solver in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::Invalid(format!("grid needs at least 4 cells, got {n}")));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Invalid(format!(
                "grid bounds [{x_min}, {x_max}] are not an interval"
            )));
        }
        Ok(Self { x_min, x_max, n })
    }

    /// Smallest grid on `[x_min, x_max]` whose spacing does not exceed `h_max`.
    pub fn with_max_spacing(x_min: f64, x_max: f64, h_max: f64) -> Result<Self> {
        if !(h_max > 0.0) {
            return Err(Error::Domain {
                what: "maximum grid spacing",
                value: h_max,
            });
        }
        let n = ((x_max - x_min) / h_max * (1.0 - 1e-12)).ceil() as usize;
        Self::new(x_min, x_max, n.max(4))
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.h()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Face `i` sits between cells `i - 1` and `i`; faces run `0..=n`.
    pub fn face(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h()
    }

    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n, ..*self }
    }
}

/// Values just outside the domain, used by the stencils in the boundary cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ghosts {
    pub left: f64,
    pub right: f64,
}

impl Ghosts {
    pub fn new(left: f64, right: f64) -> Self {
        Self { left, right }
    }

    /// Ghost cells copy the boundary values.
    pub fn extrapolate(f: &[f64]) -> Self {
        Self {
            left: f[0],
            right: f[f.len() - 1],
        }
    }
}

#[inline]
fn neighbours(f: &[f64], g: Ghosts, i: usize) -> (f64, f64) {
    let n = f.len();
    let l = if i == 0 { g.left } else { f[i - 1] };
    let r = if i + 1 == n { g.right } else { f[i + 1] };
    (l, r)
}

/// Centred first difference `(f[i+1] - f[i-1]) / 2h`.
pub fn d1(f: &[f64], g: Ghosts, h: f64) -> Vec<f64> {
    let inv = 0.5 / h;
    (0..f.len())
        .map(|i| {
            let (l, r) = neighbours(f, g, i);
            (r - l) * inv
        })
        .collect()
}

/// Centred second difference `(f[i+1] - 2 f[i] + f[i-1]) / h^2`.
pub fn d2(f: &[f64], g: Ghosts, h: f64) -> Vec<f64> {
    let inv = 1.0 / (h * h);
    (0..f.len())
        .map(|i| {
            let (l, r) = neighbours(f, g, i);
            (r - 2.0 * f[i] + l) * inv
        })
        .collect()
}

/// Midpoint-rule integral of cell values over the cells whose centres lie in
/// `[a, b]`.
pub fn integrate_window(grid: &Grid1D, f: &[f64], a: f64, b: f64) -> f64 {
    let h = grid.h();
    f.iter()
        .enumerate()
        .filter(|(i, _)| {
            let x = grid.x(*i);
            x >= a && x <= b
        })
        .map(|(_, v)| v * h)
        .sum()
}

pub fn integrate(grid: &Grid1D, f: &[f64]) -> f64 {
    grid.h() * f.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = Grid1D::new(-1.0, 1.0, 8).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.x(0), -0.875);
        assert_eq!(g.face(8), 1.0);
        let xs = g.centers();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        assert!(Grid1D::new(0.0, 1.0, 3).is_err());
        assert!(Grid1D::new(1.0, 1.0, 10).is_err());
        let s = Grid1D::with_max_spacing(-2.0, 2.0, 0.025).unwrap();
        assert_eq!(s.n(), 160);
        assert!(s.h() <= 0.025);
    }

    #[test]
    fn stencils_on_low_degree_polynomials() {
        let g = Grid1D::new(0.0, 1.0, 10).unwrap();
        let h = g.h();
        let xs = g.centers();

        let c = vec![3.0; 10];
        assert!(d1(&c, Ghosts::new(3.0, 3.0), h).iter().all(|v| *v == 0.0));
        assert!(d2(&c, Ghosts::new(3.0, 3.0), h).iter().all(|v| *v == 0.0));

        let ghosts = Ghosts::new(-0.5 * h, 1.0 + 0.5 * h);
        for v in d1(&xs, ghosts, h) {
            assert!((v - 1.0).abs() < 1e-12);
        }
        for v in d2(&xs, ghosts, h) {
            assert!(v.abs() < 1e-9);
        }

        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let gq = Ghosts::new((0.5 * h).powi(2), (1.0 + 0.5 * h).powi(2));
        for v in d2(&sq, gq, h) {
            assert!((v - 2.0).abs() < 1e-9);
        }
    }
}
