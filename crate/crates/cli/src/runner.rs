//! Dispatch from a validated [`RunConfig`] to the solvers.

use std::fmt;
use std::path::Path;

use posflow_core::{
    bz_reaction_model, existence_horizon, run_splitting_with, solve_de, solve_picard, stability_limit,
    ubar, DeConfig, PicardOptions, Region, RegionChecker, StateVec, Trajectory,
};

use crate::config::{InitSpec, Mode, RunConfig};
use crate::csv_io::{self, PdeCsvWriter};
use crate::error::{CliError, Result};
use crate::profiles::initial_fields;

pub const UBAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// Initial data outside `(q, 1)^2`: only nonnegativity is guaranteed.
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::NotApplicable => "n/a",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub mode: Mode,
    pub steps: usize,
    /// `(name, min, max)` per field over everything that was computed.
    pub ranges: Vec<(String, f64, f64)>,
    pub region: Option<Verdict>,
    /// Extra `name = value` lines (analysis results, Picard diagnostics).
    pub notes: Vec<(String, f64)>,
}

impl RunReport {
    /// The one-line summary printed by the CLI.
    pub fn summary(&self) -> String {
        let mut line = format!("mode={} steps={}", self.mode, self.steps);
        for (name, lo, hi) in &self.ranges {
            line.push_str(&format!(" {name}=[{lo:e},{hi:e}]"));
        }
        if let Some(v) = self.region {
            line.push_str(&format!(" region={v}"));
        }
        for (name, value) in &self.notes {
            if value.fract() == 0.0 && value.abs() < 1e15 {
                line.push_str(&format!(" {name}={value}"));
            } else {
                line.push_str(&format!(" {name}={value:e}"));
            }
        }
        line
    }
}

struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn new() -> Self {
        Self {
            lo: f64::INFINITY,
            hi: f64::NEG_INFINITY,
        }
    }
    fn add(&mut self, xs: &[f64]) {
        for &x in xs {
            self.lo = self.lo.min(x);
            self.hi = self.hi.max(x);
        }
    }
}

fn ode_ranges(tr: &Trajectory) -> Vec<(String, f64, f64)> {
    (0..tr.dim())
        .map(|i| {
            let mut r = Range::new();
            for s in tr.states() {
                r.add(&s[i..=i]);
            }
            (format!("u_{}", i + 1), r.lo, r.hi)
        })
        .collect()
}

fn initial_pair(cfg: &RunConfig) -> Option<StateVec> {
    match cfg.init {
        InitSpec::Constant { u, v } => Some(vec![u, v].into()),
        _ => None,
    }
}

/// Runs the configured mode, writing CSV output when `cfg.output` is set.
///
/// In `pde_split` mode a region violation with initial data inside
/// `(q, 1)^2` is returned as [`CliError::RegionViolation`] after the output
/// file has been written.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    match cfg.mode {
        Mode::OdeDe => run_ode_de(cfg),
        Mode::OdePicard => run_ode_picard(cfg),
        Mode::PdeSplit => run_pde_split(cfg),
        Mode::Analyze => run_analyze(cfg),
    }
}

fn run_ode_de(cfg: &RunConfig) -> Result<RunReport> {
    let a = initial_pair(cfg).expect("validated: ODE modes use a constant pair");
    let model = bz_reaction_model(cfg.params);
    let de = DeConfig::new(
        cfg.dt.expect("validated: dt present"),
        cfg.n_steps.expect("validated: n_steps present"),
    )?;
    let tr = solve_de(&model, &a, de)?;
    if let Some(path) = &cfg.output {
        csv_io::write_ode_csv(path, &tr)?;
    }
    Ok(RunReport {
        mode: cfg.mode,
        steps: de.n_steps,
        ranges: ode_ranges(&tr),
        region: None,
        notes: Vec::new(),
    })
}

fn run_ode_picard(cfg: &RunConfig) -> Result<RunReport> {
    let a = initial_pair(cfg).expect("validated: ODE modes use a constant pair");
    let model = bz_reaction_model(cfg.params);
    let s = &cfg.picard;
    let t0 = if a.iter().any(|&x| x > 0.0) {
        Some(existence_horizon(&model, &a, s.samples_per_axis)?.t0)
    } else {
        None
    };
    let horizon = match (s.horizon, t0) {
        (Some(h), _) => h,
        (None, Some(t0)) if t0.is_finite() => t0,
        _ => 1.0,
    };
    let opts = PicardOptions {
        horizon,
        dt_fine: s.dt_fine.unwrap_or(horizon / 1000.0),
        tol: s.tol,
        max_iter: s.max_iter,
        samples_per_axis: s.samples_per_axis,
        allow_beyond_horizon: s.allow_beyond_horizon,
    };
    let sol = solve_picard(&model, &a, opts)?;
    if let Some(path) = &cfg.output {
        csv_io::write_ode_csv(path, &sol.trajectory)?;
    }
    let mut notes = vec![
        ("horizon".to_string(), horizon),
        ("iterations".to_string(), sol.iterations as f64),
        ("last_difference".to_string(), *sol.differences.last().unwrap_or(&0.0)),
    ];
    if let Some(t0) = t0 {
        notes.insert(0, ("T0".to_string(), t0));
    }
    Ok(RunReport {
        mode: cfg.mode,
        steps: sol.trajectory.grid().n_nodes() - 1,
        ranges: ode_ranges(&sol.trajectory),
        region: None,
        notes,
    })
}

fn run_pde_split(cfg: &RunConfig) -> Result<RunReport> {
    let grid = cfg.grid.expect("validated: grid present");
    let dt = cfg.dt.expect("validated: dt present");
    let n_steps = cfg.n_steps.expect("validated: n_steps present");
    let (u0, v0) = initial_fields(&cfg.init, &cfg.params, &grid)?;

    let mut writer = cfg
        .output
        .as_deref()
        .map(|p| PdeCsvWriter::create(p, grid))
        .transpose()?;
    let mut write_error = None;
    let mut checker = RegionChecker::new(Region::discrete_bz(&cfg.params))?;
    let (mut ur, mut vr) = (Range::new(), Range::new());
    let region = Region::discrete_bz(&cfg.params);
    let mut entered = None;
    let every = cfg.snapshot_every;

    // every macro step is region-checked; only scheduled snapshots are written
    let guaranteed = run_splitting_with(&cfg.params, &grid, u0, v0, dt, n_steps, 1, |s| {
        checker.observe(s);
        ur.add(&s.u);
        vr.add(&s.v);
        if entered.is_none() && s.u.iter().zip(s.v.iter()).all(|(&u, &v)| region.contains(&[u, v])) {
            entered = Some(s.k);
        }
        if s.k % every == 0 || s.k == n_steps {
            if let (Some(w), None) = (writer.as_mut(), &write_error) {
                if let Err(e) = w.write(s) {
                    write_error = Some(e);
                }
            }
        }
    })?;
    if let Some(e) = write_error {
        return Err(e);
    }
    if let Some(w) = writer {
        w.finish()?;
    }

    let report = checker.finish();
    let verdict = match (report.is_empty(), guaranteed) {
        (true, _) => Verdict::Pass,
        (false, true) => {
            let first = &report.violations()[0];
            return Err(CliError::RegionViolation(format!(
                "{} violation(s); first: {first}",
                report.len()
            )));
        }
        (false, false) => Verdict::NotApplicable,
    };
    let mut notes = vec![("dt".to_string(), dt)];
    if !guaranteed {
        // observation only: first step with every node inside (q, 1)^2
        notes.push((
            "first_entry_step".to_string(),
            entered.map_or(f64::NAN, |k| k as f64),
        ));
    }
    Ok(RunReport {
        mode: cfg.mode,
        steps: n_steps,
        ranges: vec![("u".into(), ur.lo, ur.hi), ("v".into(), vr.lo, vr.hi)],
        region: Some(verdict),
        notes,
    })
}

fn run_analyze(cfg: &RunConfig) -> Result<RunReport> {
    let p = &cfg.params;
    let mut notes = vec![
        ("h".to_string(), p.h()),
        ("ubar".to_string(), ubar(p, UBAR_TOL)?),
    ];
    if let Some(a) = initial_pair(cfg).filter(|a| a.iter().any(|&x| x > 0.0)) {
        let est = existence_horizon(&bz_reaction_model(*p), &a, cfg.picard.samples_per_axis)?;
        notes.push(("M_f".into(), est.m_f));
        notes.push(("M_g".into(), est.m_g));
        notes.push(("T0".into(), est.t0));
    }
    if let Some(grid) = cfg.grid {
        notes.push(("dx".into(), grid.dx()));
        notes.push(("dt_max".into(), stability_limit(p.d(), grid.dx())?));
    }
    if let Some(path) = &cfg.output {
        let rows: Vec<(&str, f64)> = notes.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        csv_io::write_key_values(path, &rows)?;
    }
    Ok(RunReport {
        mode: cfg.mode,
        steps: 0,
        ranges: Vec::new(),
        region: None,
        notes,
    })
}

/// Convenience used by tests: runs and returns the CSV path's contents.
pub fn run_to_string(cfg: &RunConfig, path: &Path) -> Result<(RunReport, Vec<u8>)> {
    let mut cfg = cfg.clone();
    cfg.output = Some(path.to_path_buf());
    let report = run(&cfg)?;
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((report, bytes))
}
