//! Flat `key = value` configuration, CSV snapshots and JSON reports. Every
//! float is written with 17 significant digits so files round-trip exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::harness::{CaseConfig, ConditionCaps, ConvergenceTable, Mollify};
use crate::nsk::FluxKind;
use crate::state::{FarField, Formulation, State};
use crate::thermo::FluidParams;
use crate::trajectory::{StepRecord, Trajectory};

/// Environment variable that overrides every output directory.
pub const OUTPUT_DIR_ENV: &str = "NSK_OUTPUT_DIR";

/// `fallback` unless [`OUTPUT_DIR_ENV`] is set to a non-empty path.
pub fn output_dir(fallback: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => fallback.to_path_buf(),
    }
}

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected key = value", lineno + 1)));
        };
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
        }
    }
    Ok(out)
}

struct Keys(BTreeMap<String, String>);

impl Keys {
    fn take(&mut self, k: &str) -> Option<String> {
        self.0.remove(k)
    }

    fn num<T: FromStr>(&mut self, k: &str) -> Result<Option<T>> {
        self.take(k)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("{k}: cannot parse '{v}'")))
            })
            .transpose()
    }

    fn req(&mut self, k: &str) -> Result<f64> {
        self.num(k)?
            .ok_or_else(|| Error::Config(format!("missing required key '{k}'")))
    }

    fn list(&mut self, k: &str) -> Result<Option<Vec<f64>>> {
        self.take(k)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| Error::Config(format!("{k}: cannot parse '{s}'")))
                    })
                    .collect()
            })
            .transpose()
    }
}

/// Builds a case from configuration text. Required keys: `gamma`, `x_min`,
/// `x_max`, `rho_minus`, `u_minus`, `rho_plus`, `u_plus`, `t_end`.
pub fn parse_config(text: &str) -> Result<CaseConfig> {
    let mut k = Keys(parse_key_values(text)?);
    let gamma = k.req("gamma")?;
    let a = match k.take("a") {
        None => None,
        Some(v) if v.eq_ignore_ascii_case("kinetic") => None,
        Some(v) => Some(
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("a: expected a number or 'kinetic', got '{v}'")))?,
        ),
    };
    let (x_min, x_max) = (k.req("x_min")?, k.req("x_max")?);
    let far = FarField::new(
        k.req("rho_minus")?,
        k.req("u_minus")?,
        k.req("rho_plus")?,
        k.req("u_plus")?,
        k.num("L0")?.unwrap_or(0.25 * (x_max - x_min)),
    )
    .map_err(|e| Error::Config(e.to_string()))?;
    let t_end = k.req("t_end")?;
    let mut c = CaseConfig::new(gamma, far, x_min, x_max, t_end);
    c.a = a;
    if let Some(e) = k.num("epsilon")? {
        c.epsilon = e;
    }
    c.n = k.num("n")?;
    if let Some(v) = k.num("cells_per_epsilon")? {
        c.cells_per_epsilon = v;
    }
    if let Some(v) = k.list("snapshot_times")? {
        c.scheme.snapshot_times = v;
    }
    if let Some(v) = k.num("snapshot_count")? {
        c.snapshot_count = v;
    }
    if let Some(v) = k.take("flux") {
        c.scheme.flux = v.parse::<FluxKind>()?;
    }
    if let Some(v) = k.take("formulation") {
        c.formulation = v.parse::<Formulation>().map_err(|e| Error::Config(e.to_string()))?;
    }
    if let Some(v) = k.num("cfl_hyp")? {
        c.scheme.cfl_hyp = v;
    }
    if let Some(v) = k.num("cfl_par")? {
        c.scheme.cfl_par = v;
    }
    match (k.num::<f64>("mollify_width")?, k.num::<f64>("mollify_cells")?) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "set at most one of mollify_width and mollify_cells".into(),
            ))
        }
        (Some(w), None) => c.mollify = Mollify::Width(w),
        (None, Some(n)) => c.mollify = Mollify::Cells(n),
        (None, None) => {}
    }
    if let Some(v) = k.list("epsilons")? {
        c.epsilons = v;
    }
    if let Some(v) = k.list("window")? {
        if v.len() != 2 {
            return Err(Error::Config("window: expected 'a, b'".into()));
        }
        c.window = Some((v[0], v[1]));
    }
    let d = ConditionCaps::default();
    c.caps = ConditionCaps {
        c0: k.num("cap_c0")?.unwrap_or(d.c0),
        c1: k.num("cap_c1")?.unwrap_or(d.c1),
        c2: k.num("cap_c2")?.unwrap_or(d.c2),
    };
    if let Some(extra) = k.0.keys().next() {
        return Err(Error::Config(format!("unknown key '{extra}'")));
    }
    c.params(c.epsilon).map_err(|e| Error::Config(e.to_string()))?;
    c.scheme().validate()?;
    Ok(c)
}

pub fn load_config(path: &Path) -> Result<CaseConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Rewrites every float in a JSON tree with 17 significant digits.
fn fix_floats(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if !(n.is_i64() || n.is_u64()) {
                if let Some(f) = n.as_f64() {
                    if let Ok(m) = serde_json::Number::from_str(&fmt_f64(f)) {
                        *n = m;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(fix_floats),
        Value::Object(o) => o.values_mut().for_each(fix_floats),
        _ => {}
    }
}

/// Serializes `value` as pretty JSON with full-precision floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    fix_floats(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = to_json_string(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// CSV `x,rho,mom,v,u` of one state.
pub fn write_snapshot_csv<W: std::io::Write>(
    out: W,
    state: &State,
    grid: &Grid1D,
    far: &FarField,
    p: &FluidParams,
) -> Result<()> {
    let (v, u) = match state.formulation {
        Formulation::EffectiveV => {
            let v = state.velocity();
            let u = state.convert(Formulation::OriginalU, p, grid, far)?.velocity();
            (v, u)
        }
        Formulation::OriginalU => {
            let u = state.velocity();
            let v = state.convert(Formulation::EffectiveV, p, grid, far)?.velocity();
            (v, u)
        }
        Formulation::Euler => {
            let u = state.velocity();
            (u.clone(), u)
        }
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "rho", "mom", "v", "u"])?;
    for i in 0..state.len() {
        w.write_record([
            fmt_f64(grid.x(i)),
            fmt_f64(state.rho[i]),
            fmt_f64(state.mom[i]),
            fmt_f64(v[i]),
            fmt_f64(u[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `rho` and `mom` columns back from a snapshot CSV.
pub fn read_snapshot_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Invalid(format!("{}: missing column '{name}'", path.display())))
    };
    let (ir, im) = (col("rho")?, col("mom")?);
    let (mut rho, mut mom) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Invalid(format!("{}: bad number in row", path.display())))
        };
        rho.push(parse(ir)?);
        mom.push(parse(im)?);
    }
    Ok((rho, mom))
}

const SERIES_HEADER: [&str; 10] = [
    "time",
    "dt",
    "mass",
    "mass_balance_error",
    "e2",
    "dissipation_kinetic",
    "dissipation_internal",
    "exchange",
    "balance",
    "min_rho",
];

pub fn write_series_csv<W: std::io::Write>(out: W, series: &[StepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_HEADER)?;
    for r in series {
        w.write_record(
            [
                r.time,
                r.dt,
                r.mass,
                r.mass_balance_error,
                r.e2,
                r.dissipation_kinetic,
                r.dissipation_internal,
                r.exchange,
                r.balance,
                r.min_rho,
            ]
            .map(fmt_f64),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series_csv(path: &Path) -> Result<Vec<StepRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Invalid(format!("{}: bad number", path.display())))?;
        if v.len() != SERIES_HEADER.len() {
            return Err(Error::Invalid(format!("{}: wrong column count", path.display())));
        }
        out.push(StepRecord {
            time: v[0],
            dt: v[1],
            mass: v[2],
            mass_balance_error: v[3],
            e2: v[4],
            dissipation_kinetic: v[5],
            dissipation_internal: v[6],
            exchange: v[7],
            balance: v[8],
            min_rho: v[9],
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SnapshotEntry {
    index: usize,
    time: f64,
    file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ParamsEntry {
    a: f64,
    gamma: f64,
    epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridEntry {
    x_min: f64,
    x_max: f64,
    n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrajectoryManifest {
    params: ParamsEntry,
    grid: GridEntry,
    far_field: FarField,
    formulation: Formulation,
    contamination: Option<String>,
    snapshots: Vec<SnapshotEntry>,
    series: String,
}

/// Writes `trajectory.json`, `snapshot_NNNN.csv` and `series.csv` into `dir`.
pub fn write_trajectory_dir(dir: &Path, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut snaps = Vec::new();
    for (i, s) in traj.snapshots.iter().enumerate() {
        let file = format!("snapshot_{i:04}.csv");
        let f = fs::File::create(dir.join(&file))?;
        write_snapshot_csv(std::io::BufWriter::new(f), s, &traj.grid, &traj.far, &traj.params)?;
        snaps.push(SnapshotEntry {
            index: i,
            time: s.time,
            file,
        });
    }
    let f = fs::File::create(dir.join("series.csv"))?;
    write_series_csv(std::io::BufWriter::new(f), &traj.series)?;
    let p = &traj.params;
    let manifest = TrajectoryManifest {
        params: ParamsEntry {
            a: p.a(),
            gamma: p.gamma(),
            epsilon: p.epsilon(),
        },
        grid: GridEntry {
            x_min: traj.grid.x_min(),
            x_max: traj.grid.x_max(),
            n: traj.grid.n(),
        },
        far_field: traj.far,
        formulation: traj.initial().formulation,
        contamination: traj.contamination.clone(),
        snapshots: snaps,
        series: "series.csv".into(),
    };
    write_json(&dir.join("trajectory.json"), &manifest)
}

/// Inverse of [`write_trajectory_dir`].
pub fn read_trajectory_dir(dir: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(dir.join("trajectory.json"))?;
    let m: TrajectoryManifest = serde_json::from_str(&text)?;
    let params = FluidParams::new(m.params.a, m.params.gamma, m.params.epsilon)?;
    let grid = Grid1D::new(m.grid.x_min, m.grid.x_max, m.grid.n)?;
    let far = FarField::new(
        m.far_field.rho_minus,
        m.far_field.u_minus,
        m.far_field.rho_plus,
        m.far_field.u_plus,
        m.far_field.l0,
    )?;
    let mut states = Vec::with_capacity(m.snapshots.len());
    for e in &m.snapshots {
        let (rho, mom) = read_snapshot_csv(&dir.join(&e.file))?;
        let s = State::new(rho, mom, m.formulation, e.time)?;
        s.check(&grid)?;
        states.push(s);
    }
    let mut it = states.into_iter();
    let first = it
        .next()
        .ok_or_else(|| Error::Invalid(format!("{}: no snapshots", dir.display())))?;
    let mut traj = Trajectory::new(first, grid, far, params);
    for s in it {
        let t = s.time;
        let before = traj.snapshots.len();
        traj.push_snapshot(s);
        if traj.snapshots.len() == before {
            return Err(Error::Invalid(format!("snapshot times not increasing at t = {t}")));
        }
    }
    traj.series = read_series_csv(&dir.join(&m.series))?;
    traj.contamination = m.contamination;
    Ok(traj)
}

/// CSV `epsilon,n,l1_rho,l1_mom,error`; runtimes go to the JSON report only
/// so repeated runs write identical files.
pub fn write_convergence_csv<W: std::io::Write>(out: W, table: &ConvergenceTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epsilon", "n", "l1_rho", "l1_mom", "error"])?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for r in &table.rows {
        w.write_record([
            fmt_f64(r.epsilon),
            r.n.to_string(),
            opt(r.l1_rho),
            opt(r.l1_mom),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str =
        "gamma = 2\nx_min = -1\nx_max = 1\nrho_minus = 1\nu_minus = 0\nrho_plus = 0.5\nu_plus = 0\nt_end = 0.1\n";

    #[test]
    fn parses_minimal_config() {
        let c = parse_config(BASE).unwrap();
        assert_eq!(c.gamma, 2.0);
        assert!(c.a.is_none());
        assert_eq!(c.far.rho_plus, 0.5);
        assert_eq!(c.far.l0, 0.5);
    }

    #[test]
    fn parses_optional_keys() {
        let text = format!(
            "{BASE}a = 1.5 # coefficient\nepsilon = 0.02\nn = 200\nflux = lax_friedrichs\nformulation = original\nsnapshot_times = 0.05, 0.1\nepsilons = 0.1, 0.05\nwindow = -0.8, 0.8\nmollify_width = 0.1\n"
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(c.a, Some(1.5));
        assert_eq!(c.n, Some(200));
        assert_eq!(c.scheme.flux, FluxKind::LaxFriedrichs);
        assert_eq!(c.formulation, Formulation::OriginalU);
        assert_eq!(c.scheme.snapshot_times, vec![0.05, 0.1]);
        assert_eq!(c.epsilons, vec![0.1, 0.05]);
        assert_eq!(c.window, Some((-0.8, 0.8)));
        assert_eq!(c.mollify, Mollify::Width(0.1));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(parse_config("gamma = 2").is_err());
        assert!(parse_config(&format!("{BASE}bogus = 1\n")).is_err());
        assert!(parse_config(&format!("{BASE}gamma = 3\n")).is_err());
        assert!(parse_config(&format!("{BASE}a = lots\n")).is_err());
        assert!(parse_config(&BASE.replace("gamma = 2", "gamma = 0.5")).is_err());
        assert!(parse_config(&format!("{BASE}not a pair\n")).is_err());
    }

    #[test]
    fn floats_keep_17_digits() {
        let x = 0.1f64 + 0.2;
        let s = fmt_f64(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        let j = to_json_string(&vec![x]).unwrap();
        assert!(j.contains("3.0000000000000004e-1"));
    }

    #[test]
    fn trajectory_dir_round_trip() {
        let g = Grid1D::new(-1.0, 1.0, 16).unwrap();
        let p = FluidParams::kinetic(2.0, 0.05).unwrap();
        let far = FarField::new(1.0, 0.1, 1.0, 0.1, 0.5).unwrap();
        let mut t = Trajectory::new(State::uniform(16, 1.0, 0.1, Formulation::EffectiveV), g, far, p);
        let mut s = State::uniform(16, 1.0, 0.1, Formulation::EffectiveV);
        s.rho[3] = 1.0 / 3.0;
        s.time = 0.25;
        t.push_snapshot(s);
        t.series.push(StepRecord {
            time: 0.25,
            dt: 0.25,
            e2: std::f64::consts::PI,
            ..StepRecord::default()
        });
        let dir = tempfile::tempdir().unwrap();
        write_trajectory_dir(dir.path(), &t).unwrap();
        let back = read_trajectory_dir(dir.path()).unwrap();
        assert_eq!(back.snapshots, t.snapshots);
        assert_eq!(back.series, t.series);
        assert_eq!(back.params, t.params);
        assert_eq!(back.grid, t.grid);
    }
}
