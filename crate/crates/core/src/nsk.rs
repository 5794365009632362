//! Explicit finite-volume integrator for the Navier-Stokes-Korteweg system.
//!
//! Effective form, `m = rho v`:
//! `rho_t + m_x = eps rho_xx`, `m_t + (m^2/rho + P)_x = eps m_xx`.
//! Original form, `m = rho u`:
//! `rho_t + m_x = 0`, `m_t + (m^2/rho + P)_x = 2 eps (rho u_x)_x + eps^2 (rho (ln rho)_xx)_x`.
//! The two are related by `v = u + eps (ln rho)_x`.

use serde::{Deserialize, Serialize};

use crate::entropy::EnergyMonitor;
use crate::error::{Error, Result};
use crate::grid::{d1, d2, Ghosts, Grid1D};
use crate::state::{FarField, Formulation, State};
use crate::thermo::FluidParams;
use crate::trajectory::{boundary_contamination, ContaminationTol, StepRecord, Trajectory};

const GHOST: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxKind {
    /// Local Lax-Friedrichs with speed `max(|w| + c)` of the two neighbours.
    #[default]
    Rusanov,
    /// Global Lax-Friedrichs speed over the whole grid.
    LaxFriedrichs,
    /// Arithmetic mean of the physical fluxes, no numerical viscosity.
    Central,
}

impl std::str::FromStr for FluxKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rusanov" => Ok(FluxKind::Rusanov),
            "lax_friedrichs" | "laxfriedrichs" | "lf" => Ok(FluxKind::LaxFriedrichs),
            "central" => Ok(FluxKind::Central),
            other => Err(Error::Config(format!("unknown flux '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub cfl_hyp: f64,
    pub cfl_par: f64,
    pub flux: FluxKind,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            cfl_hyp: 0.4,
            cfl_par: 0.4,
            flux: FluxKind::Rusanov,
            t_end: 1.0,
            snapshot_times: Vec::new(),
        }
    }
}

impl SchemeConfig {
    pub fn new(t_end: f64) -> Self {
        Self {
            t_end,
            ..Self::default()
        }
    }

    /// `count` equally spaced snapshot times in `(0, t_end]`.
    pub fn with_uniform_snapshots(mut self, count: usize) -> Self {
        self.snapshot_times = (1..=count)
            .map(|k| {
                if k == count {
                    self.t_end
                } else {
                    self.t_end * k as f64 / count as f64
                }
            })
            .collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("cfl_hyp", self.cfl_hyp), ("cfl_par", self.cfl_par)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{what} = {v} must lie in (0, 1]")));
            }
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Config(format!("t_end = {} must be positive", self.t_end)));
        }
        let sorted = self.snapshot_times.windows(2).all(|w| w[0] < w[1]);
        let in_range = self.snapshot_times.iter().all(|t| *t > 0.0 && *t <= self.t_end);
        if !sorted || !in_range {
            return Err(Error::Config(
                "snapshot_times must be strictly increasing within (0, t_end]".into(),
            ));
        }
        Ok(())
    }
}

/// Time derivative of the conserved fields plus the mass flux entering
/// through the two boundary faces.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhs {
    pub rho: Vec<f64>,
    pub mom: Vec<f64>,
    pub boundary_mass_in: f64,
}

/// Ghosted copy of the density and velocity, `GHOST` layers each side.
struct Padded {
    rho: Vec<f64>,
    vel: Vec<f64>,
}

impl Padded {
    fn new(rho: &[f64], mom: &[f64], left: (f64, f64), right: (f64, f64)) -> Self {
        let n = rho.len();
        let mut r = Vec::with_capacity(n + 2 * GHOST);
        let mut v = Vec::with_capacity(n + 2 * GHOST);
        for _ in 0..GHOST {
            r.push(left.0);
            v.push(left.1);
        }
        for i in 0..n {
            r.push(rho[i]);
            v.push(mom[i] / rho[i]);
        }
        for _ in 0..GHOST {
            r.push(right.0);
            v.push(right.1);
        }
        Self { rho: r, vel: v }
    }

    fn interior(&self) -> usize {
        self.rho.len() - 2 * GHOST
    }
}

fn check_positive(rho: &[f64], grid: &Grid1D, time: f64) -> Result<()> {
    for (i, &r) in rho.iter().enumerate() {
        if !(r > 0.0) {
            if r.is_nan() {
                return Err(Error::NonFinite {
                    field: "rho",
                    index: i,
                    time,
                });
            }
            return Err(Error::Vacuum {
                index: i,
                x: grid.x(i),
                time,
                rho: r,
            });
        }
    }
    Ok(())
}

/// Flux divergence part shared by both formulations.
fn hyperbolic(pad: &Padded, p: &FluidParams, h: f64, kind: FluxKind) -> Rhs {
    let n = pad.interior();
    let speed = |j: usize| pad.vel[j].abs() + p.sound_speed(pad.rho[j]);
    let global = match kind {
        FluxKind::LaxFriedrichs => (0..pad.rho.len()).map(speed).fold(0.0, f64::max),
        _ => 0.0,
    };
    let phys = |j: usize| {
        let m = pad.rho[j] * pad.vel[j];
        [m, m * pad.vel[j] + p.p(pad.rho[j])]
    };
    // faces f = 0..=n sit between padded cells GHOST - 1 + f and GHOST + f
    let mut fl = vec![[0.0f64; 2]; n + 1];
    for (f, out) in fl.iter_mut().enumerate() {
        let (l, r) = (GHOST - 1 + f, GHOST + f);
        let (fa, fb) = (phys(l), phys(r));
        let s = match kind {
            FluxKind::Rusanov => speed(l).max(speed(r)),
            FluxKind::LaxFriedrichs => global,
            FluxKind::Central => 0.0,
        };
        let du = [
            pad.rho[r] - pad.rho[l],
            pad.rho[r] * pad.vel[r] - pad.rho[l] * pad.vel[l],
        ];
        for k in 0..2 {
            out[k] = 0.5 * (fa[k] + fb[k]) - 0.5 * s * du[k];
        }
    }
    let mut drho = vec![0.0; n];
    let mut dmom = vec![0.0; n];
    for i in 0..n {
        drho[i] = -(fl[i + 1][0] - fl[i][0]) / h;
        dmom[i] = -(fl[i + 1][1] - fl[i][1]) / h;
    }
    Rhs {
        rho: drho,
        mom: dmom,
        boundary_mass_in: fl[0][0] - fl[n][0],
    }
}

fn pad_state(state: &State, far: &FarField) -> Padded {
    Padded::new(&state.rho, &state.mom, far.left(), far.right())
}

fn effective_padded(pad: &Padded, p: &FluidParams, h: f64, kind: FluxKind) -> Rhs {
    let mut out = hyperbolic(pad, p, h, kind);
    let eps = p.epsilon();
    if eps > 0.0 {
        let n = pad.interior();
        let m: Vec<f64> = pad.rho.iter().zip(&pad.vel).map(|(r, v)| r * v).collect();
        let c = eps / (h * h);
        for i in 0..n {
            let j = i + GHOST;
            out.rho[i] += c * (pad.rho[j + 1] - 2.0 * pad.rho[j] + pad.rho[j - 1]);
            out.mom[i] += c * (m[j + 1] - 2.0 * m[j] + m[j - 1]);
        }
        out.boundary_mass_in +=
            eps / h * ((pad.rho[GHOST + n] - pad.rho[GHOST + n - 1]) - (pad.rho[GHOST] - pad.rho[GHOST - 1]));
    }
    out
}

/// Semi-discrete right-hand side of the effective form. `mom = rho v`; ghost
/// cells carry the far-field states.
pub fn rhs_effective(state: &State, far: &FarField, p: &FluidParams, grid: &Grid1D, kind: FluxKind) -> Result<Rhs> {
    check_positive(&state.rho, grid, state.time)?;
    Ok(effective_padded(&pad_state(state, far), p, grid.h(), kind))
}

fn original_padded(pad: &Padded, p: &FluidParams, h: f64, kind: FluxKind) -> Rhs {
    let n = pad.interior();
    let mut out = hyperbolic(pad, p, h, kind);
    let eps = p.epsilon();
    if eps > 0.0 {
        let ln: Vec<f64> = pad.rho.iter().map(|r| r.ln()).collect();
        // g = rho D2(ln rho) on interior cells and the first ghost layer
        let g = |j: usize| pad.rho[j] * (ln[j + 1] - 2.0 * ln[j] + ln[j - 1]) / (h * h);
        let visc = |jl: usize, jr: usize| 0.5 * (pad.rho[jl] + pad.rho[jr]) * (pad.vel[jr] - pad.vel[jl]) / h;
        for i in 0..n {
            let j = i + GHOST;
            let viscous = 2.0 * eps * (visc(j, j + 1) - visc(j - 1, j)) / h;
            let capillary = eps * eps * (g(j + 1) - g(j - 1)) / (2.0 * h);
            out.mom[i] += viscous + capillary;
        }
    }
    out
}

/// Semi-discrete right-hand side of the original capillary form, `mom = rho u`.
pub fn rhs_original(state: &State, far: &FarField, p: &FluidParams, grid: &Grid1D, kind: FluxKind) -> Result<Rhs> {
    check_positive(&state.rho, grid, state.time)?;
    Ok(original_padded(&pad_state(state, far), p, grid.h(), kind))
}

/// Korteweg stress `rho kappa rho_xx + (rho kappa' - kappa) rho_x^2 / 2` for a
/// general capillarity `kappa(rho)`, given as `(kappa, kappa')`.
pub fn korteweg_tensor_general<K>(rho: &[f64], ghosts: Ghosts, h: f64, kappa: K) -> Vec<f64>
where
    K: Fn(f64) -> (f64, f64),
{
    let dx = d1(rho, ghosts, h);
    let dxx = d2(rho, ghosts, h);
    rho.iter()
        .zip(dx.iter().zip(&dxx))
        .map(|(&r, (&rx, &rxx))| {
            let (k, dk) = kappa(r);
            r * k * rxx + 0.5 * (r * dk - k) * rx * rx
        })
        .collect()
}

/// The same stress for `kappa = eps^2 / rho`: `eps^2 (rho_xx - rho_x^2 / rho)`.
pub fn korteweg_tensor_reduced(rho: &[f64], ghosts: Ghosts, h: f64, epsilon: f64) -> Vec<f64> {
    let dx = d1(rho, ghosts, h);
    let dxx = d2(rho, ghosts, h);
    rho.iter()
        .zip(dx.iter().zip(&dxx))
        .map(|(&r, (&rx, &rxx))| epsilon * epsilon * (rxx - rx * rx / r))
        .collect()
}

/// `min(cfl_hyp h / max(|w| + c), cfl_par h^2 / (2 eps))`, the second term
/// only for `eps > 0`.
pub fn stable_dt(state: &State, p: &FluidParams, grid: &Grid1D, cfg: &SchemeConfig) -> Result<f64> {
    let smax = state
        .rho
        .iter()
        .zip(&state.mom)
        .map(|(r, m)| (m / r).abs() + p.sound_speed(*r))
        .fold(0.0, f64::max);
    let h = grid.h();
    let mut dt = if smax > 0.0 {
        cfg.cfl_hyp * h / smax
    } else {
        f64::INFINITY
    };
    let eps = effective_epsilon(state.formulation, p);
    if eps > 0.0 {
        dt = dt.min(cfg.cfl_par * h * h / (2.0 * eps));
    }
    if !(dt >= 1e-14) {
        return Err(Error::DtUnderflow { dt, time: state.time });
    }
    Ok(dt)
}

fn effective_epsilon(f: Formulation, p: &FluidParams) -> f64 {
    match f {
        Formulation::Euler => 0.0,
        _ => p.epsilon(),
    }
}

fn evaluate(
    formulation: Formulation,
    rho: &[f64],
    mom: &[f64],
    far: &FarField,
    p: &FluidParams,
    h: f64,
    kind: FluxKind,
) -> Rhs {
    let pad = Padded::new(rho, mom, far.left(), far.right());
    match formulation {
        Formulation::EffectiveV | Formulation::Euler => effective_padded(&pad, p, h, kind),
        Formulation::OriginalU => original_padded(&pad, p, h, kind),
    }
}

fn check_finite(field: &'static str, v: &[f64], time: f64) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { field, index, time }),
        None => Ok(()),
    }
}

fn check_boundary_consistency(initial: &State, far: &FarField) -> Result<()> {
    let n = initial.len();
    let vel = |i: usize| initial.mom[i] / initial.rho[i];
    let ends = [
        ("left", initial.rho[0], vel(0), far.left()),
        ("right", initial.rho[n - 1], vel(n - 1), far.right()),
    ];
    for (side, r, u, (rf, uf)) in ends {
        let scale = 1.0 + rf.abs() + uf.abs();
        if (r - rf).abs() > 1e-8 * scale || (u - uf).abs() > 1e-8 * scale {
            return Err(Error::Invalid(format!(
                "initial data differs from the {side} far-field state at the boundary: ({r}, {u}) vs ({rf}, {uf})"
            )));
        }
    }
    Ok(())
}

/// Integrates from `initial` (any formulation; `Euler` drops all `eps`
/// terms) with the two-stage SSP Runge-Kutta scheme. Snapshots are recorded
/// at `t = 0`, at each configured time and at `t_end`; the step series holds
/// mass and energy bookkeeping evaluated in effective variables.
pub fn run(initial: &State, far: &FarField, p: &FluidParams, grid: &Grid1D, cfg: &SchemeConfig) -> Result<Trajectory> {
    cfg.validate()?;
    initial.check(grid)?;
    if initial.len() != grid.n() {
        return Err(Error::Invalid(format!(
            "state has {} cells, grid has {}",
            initial.len(),
            grid.n()
        )));
    }
    check_boundary_consistency(initial, far)?;

    let formulation = initial.formulation;
    let pe = if formulation == Formulation::Euler {
        p.with_epsilon(0.0)?
    } else {
        *p
    };
    let h = grid.h();
    let n = grid.n();
    let monitor = EnergyMonitor::new(far, &pe, grid)?;

    let mut rho = initial.rho.clone();
    let mut mom = initial.mom.clone();
    let mut t = initial.time;
    let t0 = t;
    let mut targets: Vec<f64> = cfg.snapshot_times.iter().map(|s| t0 + s).collect();
    if targets.last().is_none_or(|last| *last < t0 + cfg.t_end) {
        targets.push(t0 + cfg.t_end);
    }

    let mut traj = Trajectory::new(initial.clone(), *grid, *far, *p);
    let mass0 = crate::grid::integrate(grid, &rho);
    let mut bflux = 0.0;

    let effective_fields = |rho: &[f64], mom: &[f64], time: f64| -> Result<Vec<f64>> {
        if formulation == Formulation::OriginalU && pe.epsilon() > 0.0 {
            let s = State::new(rho.to_vec(), mom.to_vec(), formulation, time)?;
            Ok(s.convert(Formulation::EffectiveV, &pe, grid, far)?.mom)
        } else {
            Ok(mom.to_vec())
        }
    };
    let mv0 = effective_fields(&rho, &mom, t)?;
    let l0 = monitor.linear_part(&rho, &mv0);
    let mut rates = monitor.dissipation_rates(&rho, &mv0);
    let (mut dkin, mut dint) = (0.0, 0.0);
    let e20 = monitor.e2(&rho, &mv0);
    traj.series.push(StepRecord {
        time: t,
        dt: 0.0,
        mass: mass0,
        mass_balance_error: 0.0,
        e2: e20,
        balance: e20,
        min_rho: rho.iter().copied().fold(f64::INFINITY, f64::min),
        ..StepRecord::default()
    });

    let mut rho1 = vec![0.0; n];
    let mut mom1 = vec![0.0; n];
    for &target in &targets {
        while t < target {
            let probe = State {
                rho: rho.clone(),
                mom: mom.clone(),
                formulation,
                time: t,
            };
            let mut dt = stable_dt(&probe, &pe, grid, cfg)?;
            let hit = t + dt >= target - 1e-14 * (1.0 + target.abs());
            if hit {
                dt = target - t;
            }
            if dt <= 0.0 {
                break;
            }
            let k1 = evaluate(formulation, &rho, &mom, far, &pe, h, cfg.flux);
            for i in 0..n {
                rho1[i] = rho[i] + dt * k1.rho[i];
                mom1[i] = mom[i] + dt * k1.mom[i];
            }
            check_positive(&rho1, grid, t + dt)?;
            check_finite("mom", &mom1, t + dt)?;
            let k2 = evaluate(formulation, &rho1, &mom1, far, &pe, h, cfg.flux);
            for i in 0..n {
                rho[i] = 0.5 * (rho[i] + rho1[i] + dt * k2.rho[i]);
                mom[i] = 0.5 * (mom[i] + mom1[i] + dt * k2.mom[i]);
            }
            bflux += 0.5 * dt * (k1.boundary_mass_in + k2.boundary_mass_in);
            t = if hit { target } else { t + dt };
            check_positive(&rho, grid, t)?;
            check_finite("mom", &mom, t)?;

            let mv = effective_fields(&rho, &mom, t)?;
            let new_rates = monitor.dissipation_rates(&rho, &mv);
            dkin += 0.5 * dt * (rates.0 + new_rates.0);
            dint += 0.5 * dt * (rates.1 + new_rates.1);
            rates = new_rates;
            let e2 = monitor.e2(&rho, &mv);
            let exchange = monitor.linear_part(&rho, &mv) - l0 - (t - t0) * monitor.boundary_flux();
            let mass = crate::grid::integrate(grid, &rho);
            traj.series.push(StepRecord {
                time: t,
                dt,
                mass,
                mass_balance_error: mass - mass0 - bflux,
                e2,
                dissipation_kinetic: dkin,
                dissipation_internal: dint,
                exchange,
                balance: e2 + dkin + dint + exchange,
                min_rho: rho.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
        traj.push_snapshot(State {
            rho: rho.clone(),
            mom: mom.clone(),
            formulation,
            time: t,
        });
    }
    traj.contamination = boundary_contamination(traj.last(), far, &pe, ContaminationTol::default());
    Ok(traj)
}
