//! Vanishing-viscosity experiments: per-run bound integrals, the
//! invariant-region monitor and epsilon sweeps against the exact Riemann
//! solution.

use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::entropy::{
    capillary_energy, entropy_residual, CapillaryRoute, MechanicalEnergy, ResidualReport, ResidualWindow,
};
use crate::error::{Error, Result};
use crate::grid::{integrate_window, Grid1D};
use crate::nsk::{run, SchemeConfig};
use crate::riemann::{solve_riemann, Primitive, RiemannSolution};
use crate::state::{log_density_gradient, FarField, Formulation, State};
use crate::thermo::{relative_energy_unchecked, FluidParams};
use crate::trajectory::Trajectory;

/// Caps for the three initial-data integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCaps {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for ConditionCaps {
    fn default() -> Self {
        Self {
            c0: 1e6,
            c1: 1e6,
            c2: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionH {
    /// `int rho |u - u_bar|`
    pub momentum_spread: f64,
    /// `int 1/2 rho |u - u_bar|^2 + e*(rho, rho_bar)`
    pub energy: f64,
    /// `eps^2 int (d/dx sqrt(rho))^2`
    pub capillary: f64,
    pub caps: ConditionCaps,
    pub pass: bool,
    pub diagnostic: Option<String>,
}

/// Integrals bounding admissible initial data, each compared with its cap.
pub fn initial_data_condition_h(
    state: &State,
    far: &FarField,
    p: &FluidParams,
    grid: &Grid1D,
    caps: ConditionCaps,
) -> ConditionH {
    let fail = |msg: String| ConditionH {
        momentum_spread: f64::NAN,
        energy: f64::NAN,
        capillary: f64::NAN,
        caps,
        pass: false,
        diagnostic: Some(msg),
    };
    if let Err(e) = state.check(grid) {
        return fail(e.to_string());
    }
    let u = match state.convert(Formulation::OriginalU, p, grid, far) {
        Ok(s) => s.velocity(),
        Err(e) => return fail(e.to_string()),
    };
    let (rb, vb) = far.reference(grid);
    let corr = match log_density_gradient(&rb, p.epsilon(), grid, far.density_ghosts()) {
        Ok(c) => c,
        Err(e) => return fail(e.to_string()),
    };
    let h = grid.h();
    let (mut spread, mut energy) = (0.0, 0.0);
    for i in 0..grid.n() {
        let (r, du) = (state.rho[i], u[i] - (vb[i] - corr[i]));
        spread += h * r * du.abs();
        energy += h * (0.5 * r * du * du + relative_energy_unchecked(r, rb[i], p));
    }
    let capillary = capillary_energy(
        &state.rho,
        p.epsilon(),
        grid,
        far.density_ghosts(),
        CapillaryRoute::SqrtStencil,
    );
    let mut over = Vec::new();
    for (name, v, cap) in [
        ("momentum spread", spread, caps.c0),
        ("energy", energy, caps.c1),
        ("capillary energy", capillary, caps.c2),
    ] {
        if !(v.is_finite() && v <= cap) {
            over.push(format!("{name} = {v:e} exceeds cap {cap:e}"));
        }
    }
    ConditionH {
        momentum_spread: spread,
        energy,
        capillary,
        caps,
        pass: over.is_empty(),
        diagnostic: if over.is_empty() { None } else { Some(over.join("; ")) },
    }
}

/// Extremes of `w- = v - b rho^theta` and `w+ = v + b rho^theta` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantExtremes {
    pub time: f64,
    pub w_minus_min: f64,
    pub w_plus_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub max_violation: f64,
    /// `max w+(0) - min w-(0)`
    pub initial_spread: f64,
    pub extremes: Vec<InvariantExtremes>,
}

fn effective_velocities(traj: &Trajectory, s: &State) -> Result<Vec<f64>> {
    if s.formulation == Formulation::OriginalU && traj.params.epsilon() > 0.0 {
        Ok(s.convert(Formulation::EffectiveV, &traj.params, &traj.grid, &traj.far)?
            .velocity())
    } else {
        Ok(s.velocity())
    }
}

fn extremes_of(traj: &Trajectory, s: &State) -> Result<InvariantExtremes> {
    let p = &traj.params;
    let v = effective_velocities(traj, s)?;
    let (b, th) = (p.b_inv(), p.theta());
    let mut e = InvariantExtremes {
        time: s.time,
        w_minus_min: f64::INFINITY,
        w_plus_max: f64::NEG_INFINITY,
    };
    for (r, v) in s.rho.iter().zip(&v) {
        let z = b * r.powf(th);
        e.w_minus_min = e.w_minus_min.min(v - z);
        e.w_plus_max = e.w_plus_max.max(v + z);
    }
    Ok(e)
}

/// Worst excursion of the Riemann invariants outside their initial range.
pub fn invariant_region_monitor(traj: &Trajectory) -> Result<InvariantReport> {
    let extremes = traj
        .snapshots
        .iter()
        .map(|s| extremes_of(traj, s))
        .collect::<Result<Vec<_>>>()?;
    let e0 = extremes[0];
    let max_violation = extremes
        .iter()
        .map(|e| {
            (e.w_plus_max - e0.w_plus_max)
                .max(e0.w_minus_min - e.w_minus_min)
                .max(0.0)
        })
        .fold(0.0, f64::max);
    Ok(InvariantReport {
        max_violation,
        initial_spread: e0.w_plus_max - e0.w_minus_min,
        extremes,
    })
}

/// One row of the energy series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyPoint {
    pub time: f64,
    pub e2: f64,
    pub dissipation: f64,
    pub balance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub window: (f64, f64),
    pub energy: Vec<EnergyPoint>,
    /// Largest increase of the energy balance over any time interval,
    /// divided by the interval length.
    pub energy_growth_rate: f64,
    /// `int_0^t int_a^b rho^(gamma+1)`
    pub i_high: f64,
    /// `int_0^t int_a^b rho^(gamma+theta) + rho |v|^3`
    pub i_cube: f64,
    pub invariant: InvariantReport,
    pub entropy_residuals: Vec<(String, ResidualReport)>,
    pub min_rho: f64,
    pub contamination: Option<String>,
}

/// Largest `(balance(t2) - balance(t1)) / (t2 - t1)` over `t2 > t1`; zero
/// for a non-increasing series. Every such quotient averages the rates of
/// consecutive records, so the consecutive maximum is the supremum.
pub fn energy_growth_rate(series: &[EnergyPoint]) -> f64 {
    series
        .windows(2)
        .filter(|w| w[1].time > w[0].time)
        .map(|w| (w[1].balance - w[0].balance) / (w[1].time - w[0].time))
        .fold(0.0, f64::max)
}

/// Largest `balance(t2) - balance(t1) - rate (t2 - t1)` over `t2 >= t1`;
/// zero exactly when the balance never grows faster than `rate`.
pub fn energy_excess(series: &[EnergyPoint], rate: f64) -> f64 {
    let mut lowest = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for pt in series {
        let g = pt.balance - rate * pt.time;
        lowest = lowest.min(g);
        worst = worst.max(g - lowest);
    }
    worst
}

fn time_trapezoid(times: &[f64], vals: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(vals.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Bound integrals, invariant extremes and entropy residuals of a run over
/// the spatial window `[a, b]`.
pub fn uniform_bounds(traj: &Trajectory, window: (f64, f64)) -> Result<BoundsReport> {
    let grid = &traj.grid;
    let p = &traj.params;
    let (a, b) = window;
    let pad = 10.0 * grid.h();
    if !(a < b && a >= grid.x_min() && b <= grid.x_max()) {
        return Err(Error::Invalid(format!(
            "window [{a}, {b}] is not inside the domain [{}, {}]",
            grid.x_min(),
            grid.x_max()
        )));
    }
    if let Some(msg) = &traj.contamination {
        return Err(Error::Contaminated(format!(
            "{msg}; use a larger domain before evaluating bounds"
        )));
    }
    let (g, th) = (p.gamma(), p.theta());
    let times = traj.times();
    let mut high = Vec::with_capacity(times.len());
    let mut cube = Vec::with_capacity(times.len());
    for s in &traj.snapshots {
        let v = effective_velocities(traj, s)?;
        let fh: Vec<f64> = s.rho.iter().map(|r| r.powf(g + 1.0)).collect();
        let fc: Vec<f64> = s
            .rho
            .iter()
            .zip(&v)
            .map(|(r, v)| r.powf(g + th) + r * v.abs().powi(3))
            .collect();
        high.push(integrate_window(grid, &fh, a, b));
        cube.push(integrate_window(grid, &fc, a, b));
    }
    let energy: Vec<EnergyPoint> = traj
        .series
        .iter()
        .map(|r| EnergyPoint {
            time: r.time,
            e2: r.e2,
            dissipation: r.dissipation_kinetic + r.dissipation_internal,
            balance: r.balance,
        })
        .collect();
    let mut entropy_residuals = Vec::new();
    if traj.snapshots.len() >= 9 {
        let w = ResidualWindow {
            x_a: a.max(grid.x_min() + pad),
            x_b: b.min(grid.x_max() - pad),
            ..ResidualWindow::for_grid(grid)
        };
        let r = entropy_residual(traj, &MechanicalEnergy { params: *p }, w)?;
        entropy_residuals.push(("mechanical_energy".to_string(), r));
    }
    let min_rho = traj
        .snapshots
        .iter()
        .flat_map(|s| s.rho.iter().copied())
        .fold(f64::INFINITY, f64::min);
    Ok(BoundsReport {
        window,
        energy_growth_rate: energy_growth_rate(&energy),
        energy,
        i_high: time_trapezoid(&times, &high),
        i_cube: time_trapezoid(&times, &cube),
        invariant: invariant_region_monitor(traj)?,
        entropy_residuals,
        min_rho,
        contamination: traj.contamination.clone(),
    })
}

/// How the jump in the Riemann data is smoothed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mollify {
    /// Half-width in cells of the run's grid.
    Cells(f64),
    /// Absolute half-width.
    Width(f64),
}

impl Mollify {
    pub fn width(&self, grid: &Grid1D) -> f64 {
        match self {
            Mollify::Cells(c) => c * grid.h(),
            Mollify::Width(w) => *w,
        }
    }
}

/// Everything needed to run one case or an epsilon sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub gamma: f64,
    /// `None` selects the kinetic normalization.
    pub a: Option<f64>,
    pub epsilon: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Fixed cell count; when absent `h <= epsilon / cells_per_epsilon`.
    pub n: Option<usize>,
    pub cells_per_epsilon: f64,
    pub far: FarField,
    pub scheme: SchemeConfig,
    /// Used when `scheme.snapshot_times` is empty.
    pub snapshot_count: usize,
    pub formulation: Formulation,
    pub mollify: Mollify,
    pub epsilons: Vec<f64>,
    pub window: Option<(f64, f64)>,
    pub caps: ConditionCaps,
}

impl CaseConfig {
    pub fn new(gamma: f64, far: FarField, x_min: f64, x_max: f64, t_end: f64) -> Self {
        Self {
            gamma,
            a: None,
            epsilon: 0.05,
            x_min,
            x_max,
            n: None,
            cells_per_epsilon: 4.0,
            far,
            scheme: SchemeConfig::new(t_end),
            snapshot_count: 16,
            formulation: Formulation::EffectiveV,
            mollify: Mollify::Cells(4.0),
            epsilons: Vec::new(),
            window: None,
            caps: ConditionCaps::default(),
        }
    }

    pub fn params(&self, epsilon: f64) -> Result<FluidParams> {
        match self.a {
            Some(a) => FluidParams::new(a, self.gamma, epsilon),
            None => FluidParams::kinetic(self.gamma, epsilon),
        }
    }

    pub fn grid(&self, epsilon: f64) -> Result<Grid1D> {
        match self.n {
            Some(n) => Grid1D::new(self.x_min, self.x_max, n),
            None => {
                if !(epsilon > 0.0) {
                    return Err(Error::Config("a cell count n is required when epsilon = 0".into()));
                }
                Grid1D::with_max_spacing(self.x_min, self.x_max, epsilon / self.cells_per_epsilon)
            }
        }
    }

    pub fn window(&self) -> (f64, f64) {
        self.window.unwrap_or_else(|| {
            let pad = 0.05 * (self.x_max - self.x_min);
            (self.x_min + pad, self.x_max - pad)
        })
    }

    pub fn scheme(&self) -> SchemeConfig {
        let mut s = self.scheme.clone();
        if s.snapshot_times.is_empty() {
            s = s.with_uniform_snapshots(self.snapshot_count.max(1));
        }
        s
    }

    pub fn initial_state(&self, grid: &Grid1D, p: &FluidParams) -> Result<State> {
        self.far
            .mollified_state(grid, p, self.mollify.width(grid), self.formulation)
    }

    /// Runs the configured case at `epsilon`.
    pub fn simulate(&self, epsilon: f64) -> Result<Trajectory> {
        let p = self.params(epsilon)?;
        let grid = self.grid(epsilon)?;
        let s0 = self.initial_state(&grid, &p)?;
        run(&s0, &self.far, &p, &grid, &self.scheme())
    }

    pub fn riemann(&self) -> Result<RiemannSolution> {
        let (l, r) = (self.far.left(), self.far.right());
        solve_riemann(Primitive::new(l.0, l.1), Primitive::new(r.0, r.1), &self.params(0.0)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub n: usize,
    pub l1_rho: Option<f64>,
    pub l1_mom: Option<f64>,
    pub runtime_seconds: f64,
    pub bounds: Option<BoundsReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub reference: String,
    pub window: (f64, f64),
    pub t_end: f64,
    pub rows: Vec<ConvergenceRow>,
    pub warnings: Vec<String>,
}

impl ConvergenceTable {
    /// True when every row succeeded and `l1_rho` strictly decreases.
    pub fn strictly_decreasing(&self) -> bool {
        let vals: Option<Vec<f64>> = self.rows.iter().map(|r| r.l1_rho).collect();
        match vals {
            Some(v) => v.windows(2).all(|w| w[1] < w[0]),
            None => false,
        }
    }
}

/// `L1` distances over `[a, b]` between cell data and the self-similar
/// solution at time `t`; the exact solution is cell-averaged with 8
/// sub-samples.
pub fn l1_distance_to_riemann(
    rho: &[f64],
    mom: &[f64],
    sol: &RiemannSolution,
    grid: &Grid1D,
    t: f64,
    window: (f64, f64),
) -> (f64, f64) {
    const SUB: usize = 8;
    let h = grid.h();
    let (mut er, mut em) = (0.0, 0.0);
    for i in 0..grid.n() {
        let x = grid.x(i);
        if x < window.0 || x > window.1 {
            continue;
        }
        let (mut ar, mut am) = (0.0, 0.0);
        for k in 0..SUB {
            let xs = grid.face(i) + h * (k as f64 + 0.5) / SUB as f64;
            let s = sol.sample(xs / t);
            ar += s.rho;
            am += s.momentum();
        }
        er += h * (rho[i] - ar / SUB as f64).abs();
        em += h * (mom[i] - am / SUB as f64).abs();
    }
    (er, em)
}

/// Runs the case for each `epsilon` and measures the distance of the final
/// density and momentum to the exact Riemann solution.
pub fn convergence_study(base: &CaseConfig, epsilons: &[f64]) -> Result<ConvergenceTable> {
    if epsilons.is_empty() || !epsilons.windows(2).all(|w| w[1] < w[0]) || epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Config(
            "epsilons must be positive and strictly decreasing".into(),
        ));
    }
    let mut warnings = Vec::new();
    if base.gamma <= 5.0 / 3.0 {
        let msg = format!(
            "gamma = {} <= 5/3: the vanishing-viscosity convergence theory assumes gamma > 5/3; monitors still run",
            base.gamma
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    let sol = base.riemann()?;
    let window = base.window();
    let t_end = base.scheme.t_end;
    if sol.middle.is_some() && sol.left != sol.right {
        let (lo, hi) = sol.speed_bounds();
        let extent = (hi.min(window.1 / t_end) - lo.max(window.0 / t_end)) * t_end;
        if extent < 0.25 * (window.1 - window.0) {
            return Err(Error::Config(format!(
                "waves cover {extent:.4} of a window of length {:.4} at t_end; need at least 25%",
                window.1 - window.0
            )));
        }
    }
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let start = Instant::now();
        let n = base.grid(eps).map(|g| g.n()).unwrap_or(0);
        let outcome = base.simulate(eps).and_then(|traj| {
            if let Some(msg) = &traj.contamination {
                return Err(Error::Contaminated(msg.clone()));
            }
            let last = traj.last();
            let mom = effective_velocities(&traj, last)
                .map(|v| last.rho.iter().zip(&v).map(|(r, v)| r * v).collect::<Vec<_>>())?;
            let (er, em) = l1_distance_to_riemann(&last.rho, &mom, &sol, &traj.grid, last.time, window);
            let bounds = uniform_bounds(&traj, window)?;
            Ok((er, em, bounds))
        });
        let runtime_seconds = start.elapsed().as_secs_f64();
        rows.push(match outcome {
            Ok((er, em, bounds)) => ConvergenceRow {
                epsilon: eps,
                n,
                l1_rho: Some(er),
                l1_mom: Some(em),
                runtime_seconds,
                bounds: Some(bounds),
                error: None,
            },
            Err(e) => {
                warn!("epsilon = {eps}: {e}");
                ConvergenceRow {
                    epsilon: eps,
                    n,
                    l1_rho: None,
                    l1_mom: None,
                    runtime_seconds,
                    bounds: None,
                    error: Some(e.to_string()),
                }
            }
        });
    }
    let (l, r) = (sol.left, sol.right);
    Ok(ConvergenceTable {
        reference: format!(
            "exact Riemann solution, left (rho, u) = ({}, {}), right (rho, u) = ({}, {})",
            l.rho, l.u, r.rho, r.u
        ),
        window,
        t_end,
        rows,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn constant_traj() -> Trajectory {
        let g = Grid1D::new(-2.0, 2.0, 40).unwrap();
        let p = FluidParams::new(1.0, 2.0, 0.0).unwrap();
        let far = FarField::new(1.0, 0.0, 1.0, 0.0, 0.5).unwrap();
        let mut t = Trajectory::new(State::uniform(40, 1.0, 0.0, Formulation::EffectiveV), g, far, p);
        for k in 1..=10 {
            let mut s = State::uniform(40, 1.0, 0.0, Formulation::EffectiveV);
            s.time = 0.1 * k as f64;
            t.push_snapshot(s);
        }
        t
    }

    #[test]
    fn constant_trajectory_integrals() {
        let rep = uniform_bounds(&constant_traj(), (-1.0, 1.0)).unwrap();
        assert_relative_eq!(rep.i_high, 2.0, max_relative = 1e-13);
        assert_relative_eq!(rep.i_cube, 2.0, max_relative = 1e-13);
        assert_eq!(rep.invariant.max_violation, 0.0);
        let res = &rep.entropy_residuals[0].1;
        assert!(res.max_positive.abs() < 1e-13);
    }

    #[test]
    fn contaminated_trajectory_is_rejected() {
        let mut t = constant_traj();
        t.contamination = Some("left".into());
        assert!(matches!(uniform_bounds(&t, (-1.0, 1.0)), Err(Error::Contaminated(_))));
    }

    #[test]
    fn condition_h_on_reference_profile() {
        let g = Grid1D::new(-2.0, 2.0, 100).unwrap();
        let p = FluidParams::kinetic(2.0, 0.1).unwrap();
        let far = FarField::new(1.0, 0.3, 1.0, 0.3, 0.5).unwrap();
        let s = State::uniform(100, 1.0, 0.3, Formulation::OriginalU);
        let c = initial_data_condition_h(&s, &far, &p, &g, ConditionCaps::default());
        assert!(c.pass);
        assert_eq!(c.capillary, 0.0);
        assert!(c.momentum_spread.abs() < 1e-15 && c.energy.abs() < 1e-15);
    }

    #[test]
    fn condition_h_rejects_nonpositive_density() {
        let g = Grid1D::new(-2.0, 2.0, 10).unwrap();
        let p = FluidParams::kinetic(2.0, 0.1).unwrap();
        let far = FarField::new(1.0, 0.0, 1.0, 0.0, 0.5).unwrap();
        let mut s = State::uniform(10, 1.0, 0.0, Formulation::OriginalU);
        s.rho[4] = -0.1;
        let c = initial_data_condition_h(&s, &far, &p, &g, ConditionCaps::default());
        assert!(!c.pass);
        assert!(c.diagnostic.is_some());
    }

    #[test]
    fn growth_rate_of_monotone_series_is_zero() {
        let pts: Vec<EnergyPoint> = (0..10)
            .map(|k| EnergyPoint {
                time: k as f64,
                e2: 0.0,
                dissipation: 0.0,
                balance: 10.0 - k as f64,
            })
            .collect();
        assert_eq!(energy_growth_rate(&pts), 0.0);
        let mut bumped = pts.clone();
        bumped[5].balance += 3.0;
        assert_relative_eq!(energy_growth_rate(&bumped), 2.0);
        assert_relative_eq!(energy_excess(&bumped, 0.5), 1.5);
        assert_eq!(energy_excess(&pts, 0.0), 0.0);
    }

    #[test]
    fn sweep_rejects_increasing_epsilons() {
        let far = FarField::new(1.0, 0.0, 1.0, 0.0, 0.5).unwrap();
        let c = CaseConfig::new(2.0, far, -1.0, 1.0, 0.1);
        assert!(convergence_study(&c, &[0.05, 0.1]).is_err());
    }

    #[test]
    fn equal_states_sweep_is_exact() {
        let far = FarField::new(1.0, 0.2, 1.0, 0.2, 0.5).unwrap();
        let mut c = CaseConfig::new(2.0, far, -1.0, 1.0, 0.1);
        c.snapshot_count = 10;
        let table = convergence_study(&c, &[0.2, 0.1]).unwrap();
        for r in &table.rows {
            assert!(r.error.is_none(), "{:?}", r.error);
            assert!(r.l1_rho.unwrap() <= 1e-10 && r.l1_mom.unwrap() <= 1e-10);
        }
    }
}
