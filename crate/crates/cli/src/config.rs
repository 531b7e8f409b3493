//! Run configuration: a flat TOML document with one table per concern.
//!
//! ```toml
//! [run]     mode, output
//! [bz]      epsilon, q, d, rho
//! [grid]    L, J, bc = "neumann" | "periodic"
//! [time]    dt | cfl, n_steps, snapshot_every
//! [init]    profile = "constant" | "bump" | "random" | "csv", plus u, v,
//!           center, width, amplitude, seed, margin, path
//! [picard]  tol, max_iter, dt_fine, horizon, samples_per_axis, allow_beyond_horizon
//! ```
//!
//! Layers are merged key by key: preset, then config file, then `--set`
//! overrides. Unknown keys, duplicate keys and type mismatches are errors.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use posflow_core::{stability_limit, Boundary, BzParams, Grid1D};
use serde::Deserialize;
use toml::{Table, Value};

use crate::error::{CliError, Result};

pub const BZ_PRESET: &str = include_str!("../presets/bz_paper.toml");

pub const DEFAULT_MARGIN: f64 = 1e-3;
pub const DEFAULT_SNAPSHOT_EVERY: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    OdeDe,
    OdePicard,
    PdeSplit,
    Analyze,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::OdeDe => "ode_de",
            Mode::OdePicard => "ode_picard",
            Mode::PdeSplit => "pde_split",
            Mode::Analyze => "analyze",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ode_de" => Ok(Mode::OdeDe),
            "ode_picard" => Ok(Mode::OdePicard),
            "pde_split" => Ok(Mode::PdeSplit),
            "analyze" => Ok(Mode::Analyze),
            other => Err(CliError::Config(format!(
                "run.mode: expected one of ode_de, ode_picard, pde_split, analyze; got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Constant { u: f64, v: f64 },
    Bump { center: f64, width: f64, amplitude: f64, margin: f64 },
    Random { seed: u64, margin: f64 },
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub dt_fine: Option<f64>,
    pub horizon: Option<f64>,
    pub samples_per_axis: usize,
    pub allow_beyond_horizon: bool,
}

impl Default for PicardSettings {
    fn default() -> Self {
        Self {
            tol: posflow_core::picard::DEFAULT_TOL,
            max_iter: posflow_core::picard::DEFAULT_MAX_ITER,
            dt_fine: None,
            horizon: None,
            samples_per_axis: posflow_core::picard::DEFAULT_SAMPLES_PER_AXIS,
            allow_beyond_horizon: false,
        }
    }
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: BzParams,
    pub grid: Option<Grid1D>,
    /// Resolved step size (from `time.dt` or `time.cfl`).
    pub dt: Option<f64>,
    pub n_steps: Option<usize>,
    pub snapshot_every: usize,
    pub init: InitSpec,
    pub picard: PicardSettings,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    #[serde(default)]
    run: RawRun,
    bz: Option<RawBz>,
    grid: Option<RawGrid>,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    init: RawInit,
    #[serde(default)]
    picard: RawPicard,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    mode: Option<String>,
    output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBz {
    epsilon: f64,
    q: f64,
    d: f64,
    rho: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(rename = "L")]
    length: f64,
    #[serde(rename = "J")]
    cells: usize,
    bc: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: Option<f64>,
    cfl: Option<f64>,
    n_steps: Option<usize>,
    snapshot_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    profile: Option<String>,
    u: Option<f64>,
    v: Option<f64>,
    center: Option<f64>,
    width: Option<f64>,
    amplitude: Option<f64>,
    seed: Option<u64>,
    margin: Option<f64>,
    path: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPicard {
    tol: Option<f64>,
    max_iter: Option<usize>,
    dt_fine: Option<f64>,
    horizon: Option<f64>,
    samples_per_axis: Option<usize>,
    allow_beyond_horizon: Option<bool>,
}

/// Parses one TOML layer. Duplicate keys are rejected by the TOML parser.
pub fn parse_layer(text: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
}

/// Merges `top` into `base`, recursing into tables.
///
/// A layer that changes `init.profile` replaces the whole `[init]` table, so
/// keys of the previous profile do not leak into the new one. Likewise a
/// layer giving `time.dt` drops an inherited `time.cfl` and vice versa.
pub fn merge_layer(base: &mut Table, top: Table) {
    for (key, value) in top {
        if let Value::Table(src) = &value {
            if key == "init" {
                if let Some(profile) = src.get("profile") {
                    reset_init_on_profile_change(base, profile);
                }
            }
            if key == "time" {
                for step_key in ["dt", "cfl"] {
                    if src.contains_key(step_key) {
                        drop_other_step_key(base, step_key);
                    }
                }
            }
        }
        match (base.get_mut(&key), value) {
            (Some(Value::Table(dst)), Value::Table(src)) => merge_layer(dst, src),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

fn reset_init_on_profile_change(doc: &mut Table, profile: &Value) {
    if let Some(Value::Table(init)) = doc.get_mut("init") {
        if init.get("profile") != Some(profile) {
            init.clear();
        }
    }
}

/// `dt` and `cfl` are alternatives; a layer giving one replaces the other.
fn drop_other_step_key(doc: &mut Table, given: &str) {
    let other = if given == "dt" { "cfl" } else { "dt" };
    if let Some(Value::Table(time)) = doc.get_mut("time") {
        time.remove(other);
    }
}

/// Applies `section.key=value`. The value is read as a TOML literal, falling
/// back to a bare string.
pub fn apply_override(doc: &mut Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        CliError::Config(format!("--set expects section.key=value, got `{assignment}`"))
    })?;
    let (section, key) = path.trim().split_once('.').ok_or_else(|| {
        CliError::Config(format!("--set key must be section.key, got `{}`", path.trim()))
    })?;
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    if section == "init" && key == "profile" {
        reset_init_on_profile_change(doc, &value);
    }
    if section == "time" && (key == "dt" || key == "cfl") {
        drop_other_step_key(doc, key);
    }
    let table = doc
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    match table {
        Value::Table(t) => {
            t.insert(key.to_string(), value);
            Ok(())
        }
        _ => Err(CliError::Config(format!("`{section}` is not a table"))),
    }
}

/// Parses a single document (no layering).
pub fn parse_config(text: &str, mode: Option<Mode>) -> Result<RunConfig> {
    validate(parse_layer(text)?, mode)
}

/// Validates a merged document. `mode` (from the subcommand) must agree with
/// `run.mode` when both are present.
pub fn validate(doc: Table, mode: Option<Mode>) -> Result<RunConfig> {
    let raw: RawDoc = Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string().trim_end().to_string()))?;

    let file_mode = raw.run.mode.as_deref().map(Mode::from_str).transpose()?;
    let mode = match (mode, file_mode) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Config(format!(
                "run.mode = {b} conflicts with the `{a}` subcommand"
            )))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => {
            return Err(CliError::Config(
                "no mode: pass a subcommand or set run.mode".into(),
            ))
        }
    };

    let bz = raw.bz.ok_or_else(|| {
        CliError::Config("missing [bz] table (epsilon, q, d, rho); try --preset bz_paper".into())
    })?;
    let params = BzParams::new(bz.epsilon, bz.q, bz.d, bz.rho)
        .map_err(|e| CliError::Config(format!("bz: {e}")))?;

    let grid = raw
        .grid
        .map(|g| {
            let bc = match g.bc.as_str() {
                "neumann" => Boundary::Neumann,
                "periodic" => Boundary::Periodic,
                other => {
                    return Err(CliError::Config(format!(
                        "grid.bc: expected `neumann` or `periodic`, got `{other}`"
                    )))
                }
            };
            Grid1D::new(g.length, g.cells, bc).map_err(|e| CliError::Config(format!("grid: {e}")))
        })
        .transpose()?;

    let dt = resolve_dt(&raw.time, &params, grid.as_ref(), mode)?;
    let n_steps = raw.time.n_steps;
    if n_steps == Some(0) {
        return Err(CliError::Config("time.n_steps: must be a positive integer".into()));
    }
    let snapshot_every = raw.time.snapshot_every.unwrap_or(DEFAULT_SNAPSHOT_EVERY);
    if snapshot_every == 0 {
        return Err(CliError::Config(
            "time.snapshot_every: must be a positive integer".into(),
        ));
    }

    match mode {
        Mode::PdeSplit => {
            if grid.is_none() {
                return Err(CliError::Config("pde_split needs a [grid] table (L, J, bc)".into()));
            }
            require(dt.is_some(), "time.dt or time.cfl", mode)?;
            require(n_steps.is_some(), "time.n_steps", mode)?;
        }
        Mode::OdeDe => {
            require(dt.is_some(), "time.dt", mode)?;
            require(n_steps.is_some(), "time.n_steps", mode)?;
        }
        Mode::OdePicard | Mode::Analyze => {}
    }

    let init = resolve_init(&raw.init, mode)?;
    let picard = resolve_picard(&raw.picard)?;

    Ok(RunConfig {
        mode,
        params,
        grid,
        dt,
        n_steps,
        snapshot_every,
        init,
        picard,
        output: raw.run.output,
    })
}

fn require(ok: bool, key: &str, mode: Mode) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("{mode} needs {key}")))
    }
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!("{name}: must be a finite number > 0, got {x}")))
    }
}

fn resolve_dt(t: &RawTime, p: &BzParams, grid: Option<&Grid1D>, mode: Mode) -> Result<Option<f64>> {
    let dt = match (t.dt, t.cfl) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config("time: set either dt or cfl, not both".into()))
        }
        (Some(dt), None) => Some(positive("time.dt", dt)?),
        (None, Some(cfl)) => {
            let cfl = positive("time.cfl", cfl)?;
            let grid = grid.ok_or_else(|| {
                CliError::Config("time.cfl needs a [grid] table to fix dx".into())
            })?;
            let limit = stability_limit(p.d(), grid.dx()).map_err(|e| CliError::Config(e.to_string()))?;
            Some(cfl * limit)
        }
        (None, None) => None,
    };
    if let (Mode::PdeSplit, Some(dt), Some(grid)) = (mode, dt, grid) {
        let dx = grid.dx();
        let ratio = dt / (dx * dx);
        let bound = 1.0 / f64::max(2.0, 2.0 * p.d());
        if posflow_core::splitting::check_split_stability(p.d(), dt, grid).is_err() {
            return Err(CliError::Config(format!(
                "time.dt = {dt} violates the stability bound dt <= dx^2/max{{2,2d}}: \
                 dt/dx^2 = {ratio} > 1/max{{2,2d}} = {bound} (largest admissible dt is {})",
                dx * dx * bound
            )));
        }
    }
    Ok(dt)
}

fn resolve_init(i: &RawInit, mode: Mode) -> Result<InitSpec> {
    let profile = i.profile.as_deref().unwrap_or("constant");
    let margin = positive("init.margin", i.margin.unwrap_or(DEFAULT_MARGIN))?;
    let used: &[(&str, bool)] = &[
        ("u", i.u.is_some()),
        ("v", i.v.is_some()),
        ("center", i.center.is_some()),
        ("width", i.width.is_some()),
        ("amplitude", i.amplitude.is_some()),
        ("seed", i.seed.is_some()),
        ("margin", i.margin.is_some()),
        ("path", i.path.is_some()),
    ];
    let allowed: &[&str] = match profile {
        "constant" => &["u", "v"],
        "bump" => &["center", "width", "amplitude", "margin"],
        "random" => &["seed", "margin"],
        "csv" => &["path"],
        other => {
            return Err(CliError::Config(format!(
                "init.profile: expected constant, bump, random or csv; got `{other}`"
            )))
        }
    };
    if let Some((key, _)) = used.iter().find(|(k, set)| *set && !allowed.contains(k)) {
        return Err(CliError::Config(format!(
            "init.{key} does not apply to profile `{profile}`"
        )));
    }
    let spec = match profile {
        "constant" => InitSpec::Constant {
            u: i.u.unwrap_or(0.5),
            v: i.v.unwrap_or(0.5),
        },
        "bump" => InitSpec::Bump {
            center: i.center.unwrap_or(0.5),
            width: positive("init.width", i.width.unwrap_or(0.1))?,
            amplitude: i.amplitude.unwrap_or(0.5),
            margin,
        },
        "random" => InitSpec::Random {
            seed: i.seed.unwrap_or(0),
            margin,
        },
        _ => InitSpec::Csv {
            path: i.path.clone().ok_or_else(|| {
                CliError::Config("init.path is required for profile `csv`".into())
            })?,
        },
    };
    if let InitSpec::Constant { u, v } = spec {
        if !(u >= 0.0 && v >= 0.0 && u.is_finite() && v.is_finite()) {
            return Err(CliError::Config(format!(
                "init.u, init.v: must be finite and >= 0, got ({u}, {v})"
            )));
        }
    }
    if matches!(mode, Mode::OdeDe | Mode::OdePicard) && !matches!(spec, InitSpec::Constant { .. }) {
        return Err(CliError::Config(format!(
            "{mode} needs init.profile = \"constant\" (the initial pair u, v)"
        )));
    }
    Ok(spec)
}

fn resolve_picard(r: &RawPicard) -> Result<PicardSettings> {
    let d = PicardSettings::default();
    let s = PicardSettings {
        tol: positive("picard.tol", r.tol.unwrap_or(d.tol))?,
        max_iter: r.max_iter.unwrap_or(d.max_iter),
        dt_fine: r.dt_fine.map(|x| positive("picard.dt_fine", x)).transpose()?,
        horizon: r.horizon.map(|x| positive("picard.horizon", x)).transpose()?,
        samples_per_axis: r.samples_per_axis.unwrap_or(d.samples_per_axis),
        allow_beyond_horizon: r.allow_beyond_horizon.unwrap_or(false),
    };
    if s.max_iter == 0 {
        return Err(CliError::Config("picard.max_iter: must be positive".into()));
    }
    if s.samples_per_axis < 2 {
        return Err(CliError::Config("picard.samples_per_axis: must be >= 2".into()));
    }
    Ok(s)
}

/// Looks up a named preset.
pub fn preset(name: &str) -> Result<&'static str> {
    match name {
        "bz_paper" => Ok(BZ_PRESET),
        other => Err(CliError::Config(format!(
            "unknown preset `{other}` (available: bz_paper)"
        ))),
    }
}
