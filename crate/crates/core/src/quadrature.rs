//! Gauss-Jacobi rules for integrals with `(1 - x)^alpha (1 + x)^beta`
//! endpoint behaviour, built by the Golub-Welsch eigenvalue method.

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussJacobi {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl GaussJacobi {
    pub fn new(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Invalid("quadrature needs at least one node".into()));
        }
        if !(alpha > -1.0) || !(beta > -1.0) {
            return Err(Error::Domain {
                what: "Jacobi exponent (must exceed -1)",
                value: alpha.min(beta),
            });
        }
        let ab = alpha + beta;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let kf = k as f64;
            let diag = if k == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                let s = 2.0 * kf + ab;
                (beta * beta - alpha * alpha) / (s * (s + 2.0))
            };
            jac[(k, k)] = diag;
            if k + 1 < n {
                let m = kf + 1.0;
                let s = 2.0 * m + ab;
                let off = (4.0 * m * (m + alpha) * (m + beta) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0))).sqrt();
                jac[(k, k + 1)] = off;
                jac[(k + 1, k)] = off;
            }
        }
        // mu0 = int (1-x)^a (1+x)^b dx
        let ln_mu0 =
            (ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0) - ln_gamma(ab + 2.0);
        let mu0 = ln_mu0.exp();

        let eig = jac.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let v0 = eig.eigenvectors[(0, k)];
                (eig.eigenvalues[k], mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(Self {
            nodes,
            weights,
            alpha,
            beta,
        })
    }

    pub fn legendre(n: usize) -> Result<Self> {
        Self::new(n, 0.0, 0.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `int_{-1}^{1} (1-x)^alpha (1+x)^beta f(x) dx`
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// `int_{lo}^{hi} (hi - s)^alpha (s - lo)^beta f(s) ds` by the affine map
    /// onto `[-1, 1]`.
    pub fn integrate_on<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let scale = half.powf(self.alpha + self.beta + 1.0);
        scale * self.integrate(|x| f(mid + half * x))
    }
}
