//! Lie splitting for the 1-D Keener-Tyson BZ reaction-diffusion system
//!
//! ```text
//! u_t = u_xx + u(1 - u)/eps - h v (u - q)/(u + q)
//! v_t = d v_xx - v + u
//! ```
//!
//! on `[0, L]` with homogeneous Neumann or periodic boundaries. One macro
//! step applies the pointwise semi-implicit reaction update, then an FTCS
//! diffusion step on `u` (diffusivity 1) and on `v` (diffusivity `d`, skipped
//! when `d = 0`).
//!
//! With `dt <= dx^2 / max(2, 2d)` both diffusion steps are convex
//! combinations of neighbouring values, and the reaction quotients map
//! `(q, 1)^2` into itself for any `dt`, so that box is invariant under the
//! full scheme.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::model::BzParams;
use crate::semi_implicit::de_quotient;

/// Roundoff allowance on `lambda <= 1/2` so that `dt = stability_limit(..)` is accepted.
const LAMBDA_SLACK: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Mirror ghost nodes: `f_{-1} = f_1`, `f_{J+1} = f_{J-1}`. Nodes `0..=J`.
    Neumann,
    /// Node `J` is node `0`. Nodes `0..J`.
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    length: f64,
    cells: usize,
    dx: f64,
    bc: Boundary,
}

impl Grid1D {
    pub fn new(length: f64, cells: usize, bc: Boundary) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidParameter {
                name: "L",
                reason: format!("must be finite and > 0, got {length}"),
            });
        }
        if cells < 3 {
            return Err(Error::InvalidParameter {
                name: "J",
                reason: format!("need at least 3 cells, got {cells}"),
            });
        }
        Ok(Self {
            length,
            cells,
            dx: length / cells as f64,
            bc,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn cells(&self) -> usize {
        self.cells
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn bc(&self) -> Boundary {
        self.bc
    }

    /// `J + 1` for Neumann, `J` for periodic.
    pub fn node_count(&self) -> usize {
        match self.bc {
            Boundary::Neumann => self.cells + 1,
            Boundary::Periodic => self.cells,
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.node_count() {
            return Err(Error::GridMismatch(format!(
                "{what} has {len} values, grid expects {}",
                self.node_count()
            )));
        }
        Ok(())
    }
}

/// Nodal values on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field1D(Vec<f64>);

impl Field1D {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn constant(grid: &Grid1D, c: f64) -> Self {
        Self(vec![c; grid.node_count()])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Deref for Field1D {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field1D {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Field1D {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// The pair `(u, v)` after `k` macro steps, at time `t = k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitState {
    pub u: Field1D,
    pub v: Field1D,
    pub k: usize,
    pub t: f64,
}

impl SplitState {
    pub fn initial(u: Field1D, v: Field1D) -> Self {
        Self { u, v, k: 0, t: 0.0 }
    }
}

/// Largest admissible step `dx^2 / max(2, 2d)`.
pub fn stability_limit(d: f64, dx: f64) -> Result<f64> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::InvalidParameter {
            name: "d",
            reason: format!("must be finite and >= 0, got {d}"),
        });
    }
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dx",
            reason: format!("must be finite and > 0, got {dx}"),
        });
    }
    Ok(dx * dx / f64::max(2.0, 2.0 * d))
}

/// Checks `dt <= dx^2 / max(2, 2d)` for a macro step.
pub fn check_split_stability(d: f64, dt: f64, grid: &Grid1D) -> Result<()> {
    let dt_max = stability_limit(d, grid.dx())?;
    let lambda = dt * f64::max(1.0, d) / (grid.dx() * grid.dx());
    if !(lambda <= 0.5 + LAMBDA_SLACK) {
        return Err(Error::Stability { lambda, dt_max });
    }
    Ok(())
}

/// Pointwise semi-implicit reaction update at every node, boundary nodes included.
///
/// The step counter and time of `s` are left unchanged.
pub fn reaction_substep(p: &BzParams, s: &SplitState, dt: f64) -> Result<SplitState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be finite and > 0, got {dt}"),
        });
    }
    if s.u.len() != s.v.len() {
        return Err(Error::GridMismatch(format!(
            "u has {} nodes, v has {}",
            s.u.len(),
            s.v.len()
        )));
    }
    let mut u = Vec::with_capacity(s.u.len());
    let mut v = Vec::with_capacity(s.v.len());
    for (j, (&uj, &vj)) in s.u.iter().zip(s.v.iter()).enumerate() {
        let (f, g) = p
            .rates(uj, vj)
            .map_err(|e| Error::Domain(format!("node {j}: {e}")))?;
        u.push(de_quotient(uj, f[0], g[0], dt));
        v.push(de_quotient(vj, f[1], g[1], dt));
    }
    Ok(SplitState {
        u: u.into(),
        v: v.into(),
        k: s.k,
        t: s.t,
    })
}

/// FTCS update `f_j + lambda (f_{j+1} - 2 f_j + f_{j-1})` without a stability guard.
///
/// Neumann fields use mirror ghosts; periodic fields wrap. Needs at least two
/// values.
pub fn ftcs_update(values: &[f64], lambda: f64, bc: Boundary) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 2, "FTCS needs at least two nodes");
    let stencil = |left: f64, mid: f64, right: f64| mid + lambda * (right - 2.0 * mid + left);
    let mut out = Vec::with_capacity(n);
    match bc {
        Boundary::Neumann => {
            out.push(stencil(values[1], values[0], values[1]));
            for w in values.windows(3) {
                out.push(stencil(w[0], w[1], w[2]));
            }
            out.push(stencil(values[n - 2], values[n - 1], values[n - 2]));
        }
        Boundary::Periodic => {
            for j in 0..n {
                let left = values[(j + n - 1) % n];
                let right = values[(j + 1) % n];
                out.push(stencil(left, values[j], right));
            }
        }
    }
    out
}

/// One guarded FTCS diffusion step; identity when `diffusivity == 0`.
pub fn diffusion_substep(
    field: &Field1D,
    diffusivity: f64,
    dt: f64,
    grid: &Grid1D,
) -> Result<Field1D> {
    grid.check_len(field.len(), "field")?;
    if !(diffusivity >= 0.0) || !diffusivity.is_finite() {
        return Err(Error::InvalidParameter {
            name: "diffusivity",
            reason: format!("must be finite and >= 0, got {diffusivity}"),
        });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be finite and > 0, got {dt}"),
        });
    }
    if diffusivity == 0.0 {
        return Ok(field.clone());
    }
    let lambda = diffusivity * dt / (grid.dx() * grid.dx());
    if !(lambda <= 0.5 + LAMBDA_SLACK) {
        return Err(Error::Stability {
            lambda,
            dt_max: grid.dx() * grid.dx() / (2.0 * diffusivity),
        });
    }
    Ok(ftcs_update(field, lambda, grid.bc()).into())
}

/// Cell averages of `func` over `[x_j - dx/2, x_j + dx/2]` clipped to `[0, L]`,
/// by three-point Simpson per cell.
pub fn cell_average(func: impl Fn(f64) -> f64, grid: &Grid1D) -> Field1D {
    let half = 0.5 * grid.dx();
    (0..grid.node_count())
        .map(|j| {
            let x = grid.x(j);
            let a = (x - half).max(0.0);
            let b = (x + half).min(grid.length());
            (func(a) + 4.0 * func(0.5 * (a + b)) + func(b)) / 6.0
        })
        .collect::<Vec<_>>()
        .into()
}

/// Reaction, then diffusion of `u`, then diffusion of `v` (skipped for `d = 0`).
///
/// Advances `k` by one. Does not check stability; see [`check_split_stability`].
pub fn macro_step(p: &BzParams, grid: &Grid1D, s: &SplitState, dt: f64) -> Result<SplitState> {
    let reacted = reaction_substep(p, s, dt)?;
    let u = diffusion_substep(&reacted.u, 1.0, dt, grid)?;
    let v = if p.d() == 0.0 {
        reacted.v
    } else {
        diffusion_substep(&reacted.v, p.d(), dt, grid)?
    };
    let k = s.k + 1;
    Ok(SplitState {
        u,
        v,
        k,
        t: k as f64 * dt,
    })
}

/// Output of [`run_splitting`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRun {
    pub snapshots: Vec<SplitState>,
    /// All initial values were in `(q, 1)`, so every snapshot must be too.
    /// Otherwise only nonnegativity is guaranteed.
    pub region_guaranteed: bool,
}

pub fn in_open_unit_region(p: &BzParams, f: &[f64]) -> bool {
    f.iter().all(|&x| x > p.q() && x < 1.0)
}

/// Runs `n_steps` macro steps, keeping the initial state, every
/// `snapshot_every`-th state and the final state.
pub fn run_splitting(
    p: &BzParams,
    grid: &Grid1D,
    u0: Field1D,
    v0: Field1D,
    dt: f64,
    n_steps: usize,
    snapshot_every: usize,
) -> Result<SplitRun> {
    let mut snapshots = Vec::new();
    let region_guaranteed = run_splitting_with(
        p,
        grid,
        u0,
        v0,
        dt,
        n_steps,
        snapshot_every,
        |s| snapshots.push(s.clone()),
    )?;
    Ok(SplitRun {
        snapshots,
        region_guaranteed,
    })
}

/// Streaming form of [`run_splitting`]: hands each snapshot to `on_snapshot`
/// instead of collecting them. Returns the region-guarantee flag.
#[allow(clippy::too_many_arguments)]
pub fn run_splitting_with(
    p: &BzParams,
    grid: &Grid1D,
    u0: Field1D,
    v0: Field1D,
    dt: f64,
    n_steps: usize,
    snapshot_every: usize,
    mut on_snapshot: impl FnMut(&SplitState),
) -> Result<bool> {
    grid.check_len(u0.len(), "u0")?;
    grid.check_len(v0.len(), "v0")?;
    if n_steps == 0 || snapshot_every == 0 {
        return Err(Error::InvalidParameter {
            name: if n_steps == 0 { "n_steps" } else { "snapshot_every" },
            reason: "must be positive".into(),
        });
    }
    check_split_stability(p.d(), dt, grid)?;
    let region_guaranteed = in_open_unit_region(p, &u0) && in_open_unit_region(p, &v0);

    let mut state = SplitState::initial(u0, v0);
    on_snapshot(&state);
    for k in 1..=n_steps {
        state = macro_step(p, grid, &state, dt)?;
        if k % snapshot_every == 0 || k == n_steps {
            on_snapshot(&state);
        }
    }
    Ok(region_guaranteed)
}
