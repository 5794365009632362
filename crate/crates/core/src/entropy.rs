//! Entropy pairs of the isentropic system: the kernel `chi`, weak entropies
//! generated by a test function, the mechanical energy, energy functionals
//! and the weak-form entropy residual of a trajectory.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::grid::{d1, Ghosts, Grid1D};
use crate::quadrature::GaussJacobi;
use crate::state::{log_density_gradient, FarField, Formulation, State};
use crate::thermo::{relative_energy_unchecked, FluidParams};
use crate::trajectory::Trajectory;

/// Default node count per quadrature piece.
pub const DEFAULT_NODES: usize = 64;

/// Generator `psi` of a weak entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    /// `psi = 1`
    Constant,
    /// `psi = s`
    Identity,
    /// `psi = s^2 / 2`
    HalfSquare,
    /// `psi = s |s| / 2`
    SignedHalfSquare,
    /// `(4 (s - a)(b - s) / (b - a)^2)^3` on `[a, b]`, zero outside; C^2.
    CompactBump { a: f64, b: f64 },
    /// Linear combination of generators.
    Combination(Vec<(f64, TestFunction)>),
}

impl TestFunction {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            TestFunction::Constant => 1.0,
            TestFunction::Identity => s,
            TestFunction::HalfSquare => 0.5 * s * s,
            TestFunction::SignedHalfSquare => 0.5 * s * s.abs(),
            TestFunction::CompactBump { a, b } => {
                if s <= *a || s >= *b {
                    0.0
                } else {
                    let q = 4.0 * (s - a) * (b - s) / ((b - a) * (b - a));
                    q * q * q
                }
            }
            TestFunction::Combination(parts) => parts.iter().map(|(c, f)| c * f.eval(s)).sum(),
        }
    }

    /// `psi''(s)` where it exists as a function (`None` if some component
    /// has no second derivative at `s`).
    pub fn second_derivative(&self, s: f64) -> Option<f64> {
        match self {
            TestFunction::Constant | TestFunction::Identity => Some(0.0),
            TestFunction::HalfSquare => Some(1.0),
            TestFunction::SignedHalfSquare => {
                if s == 0.0 {
                    None
                } else {
                    Some(s.signum())
                }
            }
            TestFunction::CompactBump { a, b } => {
                if s <= *a || s >= *b {
                    Some(0.0)
                } else {
                    // q = 4 (s-a)(b-s)/L^2, psi = q^3, psi'' = 6 q q'^2 + 3 q^2 q''
                    let l2 = (b - a) * (b - a);
                    let q = 4.0 * (s - a) * (b - s) / l2;
                    let dq = 4.0 * (a + b - 2.0 * s) / l2;
                    let d2q = -8.0 / l2;
                    Some(6.0 * q * dq * dq + 3.0 * q * q * d2q)
                }
            }
            TestFunction::Combination(parts) => parts.iter().map(|(c, f)| f.second_derivative(s).map(|v| c * v)).sum(),
        }
    }

    /// Points where `psi` is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match self {
            TestFunction::SignedHalfSquare => vec![0.0],
            TestFunction::CompactBump { a, b } => vec![*a, *b],
            TestFunction::Combination(parts) => parts.iter().flat_map(|(_, f)| f.breakpoints()).collect(),
            _ => Vec::new(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            TestFunction::CompactBump { a, b } => Some((*a, *b)),
            _ => None,
        }
    }
}

/// Value of an entropy and its flux at one state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EntropyPairValue {
    pub eta: f64,
    pub flux: f64,
}

/// `chi(rho, w) = (rho^(gamma-1) - w^2)_+^lambda`; for `lambda = 0` the
/// indicator of `|w| < rho^theta`.
pub fn chi(rho: f64, omega: f64, p: &FluidParams) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let t = rho.powf(p.gamma() - 1.0) - omega * omega;
    if t <= 0.0 {
        return 0.0;
    }
    let lam = p.lambda();
    if lam == 0.0 {
        1.0
    } else {
        t.powf(lam)
    }
}

/// `int_{-1}^{1} |s|^k (1 - s^2)^lambda ds = B((k+1)/2, lambda+1)`.
pub fn kernel_moment(k: u32, lambda: f64) -> f64 {
    let a = 0.5 * (k as f64 + 1.0);
    (ln_gamma(a) + ln_gamma(lambda + 1.0) - ln_gamma(a + lambda + 1.0)).exp()
}

/// Anything that maps a conservative state `(rho, m)` to an entropy pair.
pub trait EntropyPair {
    fn pair(&self, rho: f64, m: f64) -> Result<EntropyPairValue>;
}

/// Mechanical energy `eta* = m^2/(2 rho) + e(rho)`, `q* = m^3/(2 rho^2) + m e'(rho)`.
pub fn mechanical_energy_pair(rho: f64, m: f64, p: &FluidParams) -> Result<EntropyPairValue> {
    if rho < 0.0 || !rho.is_finite() {
        return Err(Error::Domain {
            what: "density",
            value: rho,
        });
    }
    if rho == 0.0 {
        if m == 0.0 {
            return Ok(EntropyPairValue::default());
        }
        return Err(Error::Domain {
            what: "momentum at vacuum",
            value: m,
        });
    }
    let u = m / rho;
    Ok(EntropyPairValue {
        eta: 0.5 * m * u + p.e(rho),
        flux: 0.5 * m * u * u + m * p.de(rho),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct MechanicalEnergy {
    pub params: FluidParams,
}

impl EntropyPair for MechanicalEnergy {
    fn pair(&self, rho: f64, m: f64) -> Result<EntropyPairValue> {
        mechanical_energy_pair(rho, m, &self.params)
    }
}

#[derive(Debug, Clone)]
struct Rules {
    symmetric: GaussJacobi,
    left_singular: GaussJacobi,
    right_singular: GaussJacobi,
    legendre: GaussJacobi,
}

impl Rules {
    fn new(n: usize, lam: f64) -> Result<Self> {
        Ok(Self {
            symmetric: GaussJacobi::new(n, lam, lam)?,
            // (hi - s)^alpha (s - lo)^beta: the piece [-1, c] is singular at lo
            left_singular: GaussJacobi::new(n, 0.0, lam)?,
            right_singular: GaussJacobi::new(n, lam, 0.0)?,
            legendre: GaussJacobi::legendre(n)?,
        })
    }
}

/// Weak entropy pair generated by `psi`:
/// `eta = int chi(rho, s - u) psi(s) ds`,
/// `H = int (theta s + (1 - theta) u) chi(rho, s - u) psi(s) ds`.
///
/// With `s = u + b rho^theta sigma` both become `rho` times an integral over
/// `sigma in [-1, 1]` against `(1 - sigma^2)^lambda`, evaluated with
/// Gauss-Jacobi rules split at the kinks of `psi`. `b = b_inv` which is 1 under
/// the kinetic normalization.
#[derive(Debug, Clone)]
pub struct WeakEntropy {
    params: FluidParams,
    psi: TestFunction,
    breaks: Vec<f64>,
    rules: Rules,
    fine: Rules,
}

impl WeakEntropy {
    pub fn new(psi: TestFunction, p: &FluidParams) -> Result<Self> {
        Self::with_nodes(psi, p, DEFAULT_NODES)
    }

    pub fn with_nodes(psi: TestFunction, p: &FluidParams, nodes: usize) -> Result<Self> {
        let lam = p.lambda();
        Ok(Self {
            params: *p,
            breaks: psi.breakpoints(),
            psi,
            rules: Rules::new(nodes, lam)?,
            fine: Rules::new(2 * nodes, lam)?,
        })
    }

    pub fn psi(&self) -> &TestFunction {
        &self.psi
    }

    fn integrate(&self, rules: &Rules, rho: f64, u: f64) -> EntropyPairValue {
        if rho <= 0.0 {
            return EntropyPairValue::default();
        }
        let p = &self.params;
        let lam = p.lambda();
        let width = p.b_inv() * rho.powf(p.theta());
        let theta = p.theta();
        let psi = &self.psi;
        let eval = |sigma: f64| {
            let s = u + width * sigma;
            let f = psi.eval(s);
            (f, (u + theta * width * sigma) * f)
        };

        let cuts: Vec<f64> = self
            .breaks
            .iter()
            .map(|s| (s - u) / width)
            .filter(|c| *c > -1.0 && *c < 1.0)
            .collect();

        let (mut ie, mut iq) = (0.0, 0.0);
        if cuts.is_empty() {
            for (x, w) in rules.symmetric.nodes().iter().zip(rules.symmetric.weights()) {
                let (e, q) = eval(*x);
                ie += w * e;
                iq += w * q;
            }
        } else {
            let edges = graded_edges(&cuts, lam);
            let last = edges.len() - 2;
            for (k, pair) in edges.windows(2).enumerate() {
                let (lo, hi) = (pair[0], pair[1]);
                if hi <= lo {
                    continue;
                }
                let (rule, extra): (&GaussJacobi, Box<dyn Fn(f64) -> f64>) = if k == 0 {
                    (&rules.left_singular, Box::new(move |x: f64| (1.0 - x).powf(lam)))
                } else if k == last {
                    (&rules.right_singular, Box::new(move |x: f64| (1.0 + x).powf(lam)))
                } else {
                    (&rules.legendre, Box::new(move |x: f64| (1.0 - x * x).powf(lam)))
                };
                let mut pe = 0.0;
                let mut pq = 0.0;
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                for (x, w) in rule.nodes().iter().zip(rule.weights()) {
                    let sigma = mid + half * x;
                    let g = extra(sigma);
                    let (e, q) = eval(sigma);
                    pe += w * g * e;
                    pq += w * g * q;
                }
                let scale = half.powf(rule.alpha() + rule.beta() + 1.0);
                ie += scale * pe;
                iq += scale * pq;
            }
        }
        EntropyPairValue {
            eta: rho * ie,
            flux: rho * iq,
        }
    }

    /// Pair in primitive variables `(rho, u)`.
    pub fn eval(&self, rho: f64, u: f64) -> EntropyPairValue {
        self.integrate(&self.rules, rho, u)
    }

    /// As [`WeakEntropy::eval`], but also evaluates with twice the nodes and
    /// errors if the two differ by more than `1e-6` relative.
    pub fn eval_checked(&self, rho: f64, u: f64) -> Result<EntropyPairValue> {
        if rho < 0.0 || !rho.is_finite() || !u.is_finite() {
            return Err(Error::Domain {
                what: "weak entropy state",
                value: rho,
            });
        }
        let coarse = self.integrate(&self.rules, rho, u);
        let fine = self.integrate(&self.fine, rho, u);
        let floor = 1e-14 * rho * (1.0 + u.abs() + rho.powf(self.params.theta())).powi(3);
        for (a, b) in [(coarse.eta, fine.eta), (coarse.flux, fine.flux)] {
            if (a - b).abs() > 1e-6 * b.abs() + floor {
                return Err(Error::Quadrature(format!(
                    "node doubling changed the value from {a:e} to {b:e} at rho = {rho}, u = {u}"
                )));
            }
        }
        Ok(fine)
    }
}

impl EntropyPair for WeakEntropy {
    fn pair(&self, rho: f64, m: f64) -> Result<EntropyPairValue> {
        if rho < 0.0 {
            return Err(Error::Domain {
                what: "density",
                value: rho,
            });
        }
        let u = if rho > 0.0 { m / rho } else { 0.0 };
        Ok(self.eval(rho, u))
    }
}

/// Piece boundaries on `[-1, 1]`: the kinks of `psi`, the midpoint, and a
/// geometric refinement towards `+-1` so that no interior piece is longer
/// than its distance to the nearest endpoint singularity of the weight.
fn graded_edges(cuts: &[f64], lam: f64) -> Vec<f64> {
    let mut base = Vec::with_capacity(cuts.len() + 3);
    base.push(-1.0);
    base.extend_from_slice(cuts);
    base.push(0.0);
    base.push(1.0);
    base.sort_by(f64::total_cmp);
    base.dedup();
    if lam == 0.0 {
        return base;
    }
    let mut out = vec![-1.0];
    for w in base.windows(2) {
        let (mut lo, hi) = (w[0], w[1]);
        if hi <= 0.0 && lo > -1.0 {
            while hi - lo > lo + 1.0 {
                lo = 2.0 * lo + 1.0;
                out.push(lo);
            }
        } else if lo >= 0.0 && hi < 1.0 {
            let mut right = Vec::new();
            let mut h = hi;
            while h - lo > 1.0 - h {
                h = 2.0 * h - 1.0;
                right.push(h);
            }
            out.extend(right.into_iter().rev());
        }
        out.push(hi);
    }
    out
}

/// One-shot weak entropy pair at `(rho, u)` with the node-doubling check.
pub fn weak_entropy_pair(psi: &TestFunction, rho: f64, u: f64, p: &FluidParams) -> Result<EntropyPairValue> {
    WeakEntropy::new(psi.clone(), p)?.eval_checked(rho, u)
}

fn velocity_of(state: &State, to: Formulation, p: &FluidParams, grid: &Grid1D, far: &FarField) -> Result<Vec<f64>> {
    if state.formulation == to || p.epsilon() == 0.0 {
        Ok(state.velocity())
    } else {
        Ok(state.convert(to, p, grid, far)?.velocity())
    }
}

/// `E2 = int 1/2 rho |v - v_bar|^2 + e*(rho, rho_bar)` by the midpoint rule.
pub fn total_energy_e2(state: &State, far: &FarField, p: &FluidParams, grid: &Grid1D) -> Result<f64> {
    state.check(grid)?;
    let v = velocity_of(state, Formulation::EffectiveV, p, grid, far)?;
    let (rb, vb) = far.reference(grid);
    let h = grid.h();
    Ok(state
        .rho
        .iter()
        .zip(&v)
        .zip(rb.iter().zip(&vb))
        .map(|((r, v), (rb, vb))| h * (0.5 * r * (v - vb).powi(2) + relative_energy_unchecked(*r, *rb, p)))
        .sum())
}

/// How `(d/dx sqrt(rho))^2` is discretised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapillaryRoute {
    /// Centred difference of `sqrt(rho)`.
    SqrtStencil,
    /// `(d/dx rho)^2 / (4 rho)` with the centred difference of `rho`.
    GradientRatio,
}

/// `eps^2 int (d/dx sqrt(rho))^2 dx`
pub fn capillary_energy(rho: &[f64], epsilon: f64, grid: &Grid1D, ghosts: Ghosts, route: CapillaryRoute) -> f64 {
    let h = grid.h();
    let dens: f64 = match route {
        CapillaryRoute::SqrtStencil => {
            let s: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
            d1(&s, Ghosts::new(ghosts.left.sqrt(), ghosts.right.sqrt()), h)
                .iter()
                .map(|d| d * d)
                .sum()
        }
        CapillaryRoute::GradientRatio => d1(rho, ghosts, h).iter().zip(rho).map(|(d, r)| d * d / (4.0 * r)).sum(),
    };
    epsilon * epsilon * h * dens
}

/// `E1 = int 1/2 rho |u - u_bar|^2 + e*(rho, rho_bar) + eps^2 (d/dx sqrt(rho))^2`
/// where `u_bar = v_bar - eps d/dx ln rho_bar`.
pub fn total_energy_e1(state: &State, far: &FarField, p: &FluidParams, grid: &Grid1D) -> Result<f64> {
    state.check(grid)?;
    let u = velocity_of(state, Formulation::OriginalU, p, grid, far)?;
    let (rb, vb) = far.reference(grid);
    let corr = log_density_gradient(&rb, p.epsilon(), grid, far.density_ghosts())?;
    let h = grid.h();
    let bulk: f64 = state
        .rho
        .iter()
        .zip(&u)
        .zip(rb.iter().zip(vb.iter().zip(&corr)))
        .map(|((r, u), (rb, (vb, c)))| {
            let ub = vb - c;
            h * (0.5 * r * (u - ub).powi(2) + relative_energy_unchecked(*r, *rb, p))
        })
        .sum();
    Ok(bulk
        + capillary_energy(
            &state.rho,
            p.epsilon(),
            grid,
            far.density_ghosts(),
            CapillaryRoute::SqrtStencil,
        ))
}

/// Discrete energy bookkeeping for runs with far-field ghost cells.
///
/// `balance = E2(t) + D_kin + D_int + X(t)` where the dissipation integrals
/// use the interface form that the centred diffusion operator actually
/// dissipates, and `X` collects the work exchanged with the stationary
/// reference profile and through the boundaries:
/// `X(t) = L(t) - L(0) - t (q*(U-) - q*(U+))`, `L = sum h eta*'(U_bar) . U`.
#[derive(Debug, Clone)]
pub struct EnergyMonitor {
    params: FluidParams,
    h: f64,
    rho_bar: Vec<f64>,
    v_bar: Vec<f64>,
    dual_rho: Vec<f64>,
    left: (f64, f64),
    right: (f64, f64),
    boundary_flux: f64,
}

impl EnergyMonitor {
    pub fn new(far: &FarField, p: &FluidParams, grid: &Grid1D) -> Result<Self> {
        let (rho_bar, v_bar) = far.reference(grid);
        let dual_rho = rho_bar
            .iter()
            .zip(&v_bar)
            .map(|(r, v)| p.de(*r) - 0.5 * v * v)
            .collect();
        let ql = mechanical_energy_pair(far.rho_minus, far.rho_minus * far.u_minus, p)?.flux;
        let qr = mechanical_energy_pair(far.rho_plus, far.rho_plus * far.u_plus, p)?.flux;
        Ok(Self {
            params: *p,
            h: grid.h(),
            rho_bar,
            v_bar,
            dual_rho,
            left: far.left(),
            right: far.right(),
            boundary_flux: ql - qr,
        })
    }

    /// `q*(U-) - q*(U+)`, the net energy flux entering through the far field.
    pub fn boundary_flux(&self) -> f64 {
        self.boundary_flux
    }

    /// Relative energy with `mom = rho v`.
    pub fn e2(&self, rho: &[f64], mom: &[f64]) -> f64 {
        let p = &self.params;
        rho.iter()
            .zip(mom)
            .zip(self.rho_bar.iter().zip(&self.v_bar))
            .map(|((r, m), (rb, vb))| {
                let v = m / r;
                self.h * (0.5 * r * (v - vb).powi(2) + relative_energy_unchecked(*r, *rb, p))
            })
            .sum()
    }

    /// `L = sum_i h (eta_rho(U_bar_i) rho_i + eta_m(U_bar_i) m_i)`
    pub fn linear_part(&self, rho: &[f64], mom: &[f64]) -> f64 {
        rho.iter()
            .zip(mom)
            .zip(self.dual_rho.iter().zip(&self.v_bar))
            .map(|((r, m), (a, b))| self.h * (a * r + b * m))
            .sum()
    }

    /// Instantaneous dissipation rates `(eps sum rho_f (dv)^2 / h, eps sum de' drho / h)`
    /// over all faces including the two ghost faces.
    pub fn dissipation_rates(&self, rho: &[f64], mom: &[f64]) -> (f64, f64) {
        let eps = self.params.epsilon();
        if eps == 0.0 {
            return (0.0, 0.0);
        }
        let n = rho.len();
        let p = &self.params;
        let cell = |i: usize| -> (f64, f64) {
            if i == 0 {
                (self.left.0, self.left.1)
            } else if i == n + 1 {
                (self.right.0, self.right.1)
            } else {
                (rho[i - 1], mom[i - 1] / rho[i - 1])
            }
        };
        let (mut dk, mut di) = (0.0, 0.0);
        let mut prev = cell(0);
        let mut prev_de = p.de(prev.0);
        for i in 1..=n + 1 {
            let cur = cell(i);
            let cur_de = p.de(cur.0);
            let rf = 0.5 * (cur.0 + prev.0);
            dk += rf * (cur.1 - prev.1).powi(2);
            di += (cur_de - prev_de) * (cur.0 - prev.0);
            prev = cur;
            prev_de = cur_de;
        }
        (eps * dk / self.h, eps * di / self.h)
    }
}

/// Fitted constants of the growth bounds for `psi = s|s|/2`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthBoundsReport {
    /// `max |eta| / (rho u^2 + rho^gamma)`
    pub eta_ratio_max: f64,
    /// `min H / (rho |u|^3 + rho^(gamma+theta))`
    pub flux_ratio_min: f64,
    /// `max |eta_m| / (rho |u| + rho^theta)`
    pub eta_m_ratio_max: f64,
    /// `max rho |eta_mm|`
    pub eta_mm_ratio_max: f64,
    pub pass: bool,
}

/// Entropy as a function of `(rho, m)` and its first two `m`-derivatives by
/// centred differences with step `1e-4 (1 + |m|)`.
fn m_derivatives(we: &WeakEntropy, rho: f64, m: f64) -> Result<(f64, f64)> {
    let d = 1e-4 * (1.0 + m.abs());
    let e = |mm: f64| we.eval_checked(rho, mm / rho).map(|v| v.eta);
    let (ep, e0, em) = (e(m + d)?, e(m)?, e(m - d)?);
    Ok(((ep - em) / (2.0 * d), (ep - 2.0 * e0 + em) / (d * d)))
}

pub fn growth_bounds_check(samples: &[(f64, f64)], p: &FluidParams) -> Result<GrowthBoundsReport> {
    let we = WeakEntropy::new(TestFunction::SignedHalfSquare, p)?;
    let (g, th) = (p.gamma(), p.theta());
    let mut rep = GrowthBoundsReport {
        eta_ratio_max: 0.0,
        flux_ratio_min: f64::INFINITY,
        eta_m_ratio_max: 0.0,
        eta_mm_ratio_max: 0.0,
        pass: false,
    };
    for &(rho, u) in samples {
        if !(rho > 0.0) {
            return Err(Error::Domain {
                what: "sample density",
                value: rho,
            });
        }
        let v = we.eval_checked(rho, u)?;
        let (em, emm) = m_derivatives(&we, rho, rho * u)?;
        rep.eta_ratio_max = rep.eta_ratio_max.max(v.eta.abs() / (rho * u * u + rho.powf(g)));
        rep.flux_ratio_min = rep
            .flux_ratio_min
            .min(v.flux / (rho * u.abs().powi(3) + rho.powf(g + th)));
        rep.eta_m_ratio_max = rep.eta_m_ratio_max.max(em.abs() / (rho * u.abs() + rho.powf(th)));
        rep.eta_mm_ratio_max = rep.eta_mm_ratio_max.max(rho * emm.abs());
    }
    rep.pass = [
        rep.eta_ratio_max,
        rep.flux_ratio_min,
        rep.eta_m_ratio_max,
        rep.eta_mm_ratio_max,
    ]
    .iter()
    .all(|v| v.is_finite())
        && rep.flux_ratio_min > 0.0;
    Ok(rep)
}

/// Fitted constants of the linear-growth bounds for a compactly supported
/// generator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CompactSupportReport {
    /// `max |eta| / rho`
    pub eta_const: f64,
    /// `max |q| / rho` for `gamma <= 3`, `max |q| / (rho + rho^(theta+1))` otherwise
    pub flux_const: f64,
    /// `max |eta_m| + rho |eta_mm|`
    pub derivative_const: f64,
    /// Samples outside the support strip whose entropy was not exactly zero.
    pub support_violations: usize,
    pub pass: bool,
}

pub fn compact_support_growth_check(
    psi: &TestFunction,
    samples: &[(f64, f64)],
    p: &FluidParams,
) -> Result<CompactSupportReport> {
    let Some((a, b)) = psi.support() else {
        return Err(Error::Invalid(
            "growth bounds need a compactly supported generator".into(),
        ));
    };
    let we = WeakEntropy::new(psi.clone(), p)?;
    let th = p.theta();
    let bw = p.b_inv();
    let mut rep = CompactSupportReport {
        eta_const: 0.0,
        flux_const: 0.0,
        derivative_const: 0.0,
        support_violations: 0,
        pass: false,
    };
    for &(rho, u) in samples {
        let v = we.eval_checked(rho, u)?;
        let width = bw * rho.powf(th);
        if (u + width < a || u - width > b) && (v.eta != 0.0 || v.flux != 0.0) {
            rep.support_violations += 1;
        }
        if rho > 0.0 {
            rep.eta_const = rep.eta_const.max(v.eta.abs() / rho);
            let denom = if p.gamma() <= 3.0 {
                rho
            } else {
                rho + rho.powf(th + 1.0)
            };
            rep.flux_const = rep.flux_const.max(v.flux.abs() / denom);
            let (em, emm) = m_derivatives(&we, rho, rho * u)?;
            rep.derivative_const = rep.derivative_const.max(em.abs() + rho * emm.abs());
        }
    }
    rep.pass = rep.eta_const.is_finite()
        && rep.flux_const.is_finite()
        && rep.derivative_const.is_finite()
        && rep.support_violations == 0;
    Ok(rep)
}

/// Space-time window and test-function layout for [`entropy_residual`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualWindow {
    pub x_a: f64,
    pub x_b: f64,
    /// Hats per window in space (half-width `(x_b - x_a) / spatial_hats`,
    /// centres spaced by half a width, supports inside the window).
    pub spatial_hats: usize,
    /// Hats per run in time (half-width `T / temporal_hats`).
    pub temporal_hats: usize,
}

impl ResidualWindow {
    /// Whole domain minus 10 cells at each end.
    pub fn for_grid(grid: &Grid1D) -> Self {
        let pad = 10.0 * grid.h();
        Self {
            x_a: grid.x_min() + pad,
            x_b: grid.x_max() - pad,
            spatial_hats: 8,
            temporal_hats: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `max_phi ( - int int (eta phi_t + q phi_x) )_+` over the hat family.
    pub max_positive: f64,
    /// Most negative value of the same functional (entropy dissipated).
    pub min_value: f64,
    /// `2 tau (eta_max - eta_min) / w`, the size of `int int eta phi_xx`.
    pub scale: f64,
    /// `(eps + h) * scale`
    pub tolerance: f64,
    pub test_functions: usize,
    pub pass: bool,
}

/// Exact integral of the unit hat centred at `c` with half-width `w` over `[lo, hi]`.
fn hat_integral(c: f64, w: f64, lo: f64, hi: f64) -> f64 {
    let anti = |x: f64| {
        let s = (x - c) / w;
        if s <= -1.0 {
            0.0
        } else if s <= 0.0 {
            0.5 * w * (1.0 + s) * (1.0 + s)
        } else if s < 1.0 {
            w * (1.0 - 0.5 * (1.0 - s) * (1.0 - s))
        } else {
            w
        }
    };
    anti(hi) - anti(lo)
}

fn hat(c: f64, w: f64, x: f64) -> f64 {
    (1.0 - ((x - c) / w).abs()).max(0.0)
}

/// Weights `a_k = int l_k T'` and `b_k = int l_k T` for the piecewise-linear
/// interpolant through the snapshot times and the time hat `T`.
fn time_weights(times: &[f64], c: f64, tau: f64) -> (Vec<f64>, Vec<f64>) {
    let k = times.len();
    let mut a = vec![0.0; k];
    let mut b = vec![0.0; k];
    let gauss = [-1.0 / 3f64.sqrt(), 1.0 / 3f64.sqrt()];
    let kinks = [c - tau, c, c + tau];
    for j in 0..k - 1 {
        let (t0, t1) = (times[j], times[j + 1]);
        let mut cuts = vec![t0];
        cuts.extend(kinks.iter().copied().filter(|x| *x > t0 && *x < t1));
        cuts.push(t1);
        for piece in cuts.windows(2) {
            let (lo, hi) = (piece[0], piece[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for g in gauss {
                let t = mid + half * g;
                let l1 = (t - t0) / (t1 - t0);
                let l0 = 1.0 - l1;
                let tv = hat(c, tau, t);
                let s = (t - c) / tau;
                let dt = if s.abs() >= 1.0 {
                    0.0
                } else if s < 0.0 {
                    1.0 / tau
                } else {
                    -1.0 / tau
                };
                a[j] += half * l0 * dt;
                a[j + 1] += half * l1 * dt;
                b[j] += half * l0 * tv;
                b[j + 1] += half * l1 * tv;
            }
        }
    }
    (a, b)
}

/// Discrete weak entropy residual of a trajectory against nonnegative
/// tensor-product hats `phi(x, t) = X(x) T(t)`. Space integrals are exact
/// for cellwise constant data; in time the data is interpolated linearly
/// between snapshots.
pub fn entropy_residual(traj: &Trajectory, pair: &dyn EntropyPair, window: ResidualWindow) -> Result<ResidualReport> {
    let k = traj.snapshots.len();
    if k < 3 {
        return Err(Error::Invalid(format!(
            "entropy residual needs at least 3 snapshots, got {k}"
        )));
    }
    if window.spatial_hats < 2 || window.temporal_hats < 2 || !(window.x_b > window.x_a) {
        return Err(Error::Invalid(
            "residual window needs x_a < x_b and at least 2 hats per direction".into(),
        ));
    }
    let grid = &traj.grid;
    let p = &traj.params;
    let n = grid.n();
    let times = traj.times();
    let t0 = times[0];
    let t_end = times[k - 1];
    let tau = (t_end - t0) / window.temporal_hats as f64;
    let t_centers: Vec<f64> = (0..=2 * window.temporal_hats - 4)
        .map(|j| t0 + tau + 0.5 * tau * j as f64)
        .collect();
    for &c in &t_centers {
        let inside = times.iter().filter(|t| **t > c - tau && **t < c + tau).count();
        if inside < 3 {
            return Err(Error::Invalid(format!(
                "snapshot spacing too coarse: {inside} snapshots inside the time support around t = {c}"
            )));
        }
    }

    let w = (window.x_b - window.x_a) / window.spatial_hats as f64;
    let x_centers: Vec<f64> = (0..=2 * window.spatial_hats - 4)
        .map(|j| window.x_a + w + 0.5 * w * j as f64)
        .collect();

    // entropy and flux per snapshot and cell, in terms of m = rho v
    let mut eta = vec![vec![0.0; n]; k];
    let mut q = vec![vec![0.0; n]; k];
    let (mut e_min, mut e_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (s, snap) in traj.snapshots.iter().enumerate() {
        let v = velocity_of(snap, Formulation::EffectiveV, p, grid, &traj.far)?;
        for i in 0..n {
            let val = pair.pair(snap.rho[i], snap.rho[i] * v[i])?;
            eta[s][i] = val.eta;
            q[s][i] = val.flux;
            let x = grid.x(i);
            if x >= window.x_a && x <= window.x_b {
                e_min = e_min.min(val.eta);
                e_max = e_max.max(val.eta);
            }
        }
    }

    let (mut max_val, mut min_val) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut count = 0;
    for &tc in &t_centers {
        let (a, b) = time_weights(&times, tc, tau);
        let ai: Vec<f64> = (0..n).map(|i| (0..k).map(|s| a[s] * eta[s][i]).sum()).collect();
        let bi: Vec<f64> = (0..n).map(|i| (0..k).map(|s| b[s] * q[s][i]).sum()).collect();
        for &xc in &x_centers {
            let mut acc = 0.0;
            for i in 0..n {
                let (fl, fr) = (grid.face(i), grid.face(i + 1));
                if fr <= xc - w || fl >= xc + w {
                    continue;
                }
                let xbar = hat_integral(xc, w, fl, fr);
                let dx = hat(xc, w, fr) - hat(xc, w, fl);
                acc += xbar * ai[i] + dx * bi[i];
            }
            let r = -acc;
            max_val = max_val.max(r);
            min_val = min_val.min(r);
            count += 1;
        }
    }
    let scale = 2.0 * tau * (e_max - e_min).max(0.0) / w;
    let tolerance = (p.epsilon() + grid.h()) * scale;
    let max_positive = max_val.max(0.0);
    Ok(ResidualReport {
        max_positive,
        min_value: min_val,
        scale,
        tolerance,
        test_functions: count,
        pass: max_positive <= tolerance,
    })
}
