//! Time series produced by the solvers.

use serde::{Deserialize, Serialize};

use crate::grid::Grid1D;
use crate::state::{FarField, State};
use crate::thermo::FluidParams;

/// Per-step scalars. The energy columns are cumulative where named so.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub time: f64,
    pub dt: f64,
    pub mass: f64,
    /// `mass(t) - mass(0) - int_0^t (boundary mass flux)`
    pub mass_balance_error: f64,
    /// Relative mechanical energy with respect to the reference profile.
    pub e2: f64,
    /// `eps int_0^t int rho v_x^2`
    pub dissipation_kinetic: f64,
    /// `eps int_0^t int e''(rho) rho_x^2`
    pub dissipation_internal: f64,
    /// Energy exchanged with the stationary reference profile and through
    /// the far-field boundaries since `t = 0`.
    pub exchange: f64,
    /// `e2 + dissipations + exchange`; non-increasing for an admissible run.
    pub balance: f64,
    pub min_rho: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<State>,
    pub series: Vec<StepRecord>,
    pub grid: Grid1D,
    pub far: FarField,
    pub params: FluidParams,
    /// Set when waves reached the last 10 cells before `t_end`.
    pub contamination: Option<String>,
}

impl Trajectory {
    pub fn new(initial: State, grid: Grid1D, far: FarField, params: FluidParams) -> Self {
        Self {
            snapshots: vec![initial],
            series: Vec::new(),
            grid,
            far,
            params,
            contamination: None,
        }
    }

    pub fn push_snapshot(&mut self, s: State) {
        if let Some(last) = self.snapshots.last() {
            if s.time <= last.time {
                return;
            }
        }
        self.snapshots.push(s);
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn initial(&self) -> &State {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &State {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn t_end(&self) -> f64 {
        self.last().time
    }

    /// Time-reversed copy `(rho, m)(x, T - t) -> (rho, -m)`: a weak solution
    /// of the inviscid system whenever the original is one.
    pub fn time_reversed(&self) -> Trajectory {
        let t_end = self.t_end();
        let t0 = self.initial().time;
        let snapshots = self
            .snapshots
            .iter()
            .rev()
            .map(|s| State {
                rho: s.rho.clone(),
                mom: s.mom.iter().map(|m| -m).collect(),
                formulation: s.formulation,
                time: t0 + (t_end - s.time),
            })
            .collect();
        let far = FarField {
            u_minus: -self.far.u_minus,
            u_plus: -self.far.u_plus,
            ..self.far
        };
        Trajectory {
            snapshots,
            series: Vec::new(),
            grid: self.grid,
            far,
            params: self.params,
            contamination: self.contamination.clone(),
        }
    }
}

/// Thresholds for the boundary-contamination test: the 10 cells next to
/// each boundary must match the far-field state to a relative tolerance.
#[derive(Debug, Clone, Copy)]
pub struct ContaminationTol {
    pub cells: usize,
    pub rel: f64,
}

impl Default for ContaminationTol {
    fn default() -> Self {
        Self { cells: 10, rel: 1e-6 }
    }
}

/// Returns a description of the first boundary zone that no longer matches
/// its far-field state, if any.
pub fn boundary_contamination(s: &State, far: &FarField, p: &FluidParams, tol: ContaminationTol) -> Option<String> {
    let n = s.len();
    let k = tol.cells.min(n / 2);
    let rho_scale = far.rho_minus.max(far.rho_plus);
    let speed = |r: f64, u: f64| u.abs() + p.sound_speed(r);
    let mom_scale = rho_scale * speed(far.rho_minus, far.u_minus).max(speed(far.rho_plus, far.u_plus));
    let zones = [
        ("left", 0..k, far.rho_minus, far.rho_minus * far.u_minus),
        ("right", n - k..n, far.rho_plus, far.rho_plus * far.u_plus),
    ];
    for (side, range, r0, m0) in zones {
        for i in range {
            let dr = (s.rho[i] - r0).abs();
            let dm = (s.mom[i] - m0).abs();
            if dr > tol.rel * rho_scale || dm > tol.rel * mom_scale {
                return Some(format!(
                    "{side} boundary zone disturbed at cell {i} (t = {}, |drho| = {dr:.3e}, |dm| = {dm:.3e})",
                    s.time
                ));
            }
        }
    }
    None
}
