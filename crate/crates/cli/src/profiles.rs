//! Initial nodal data for the split scheme.

use posflow_core::{cell_average, BzParams, Field1D, Grid1D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::InitSpec;
use crate::csv_io;
use crate::error::{CliError, Result};

/// Builds `(u0, v0)` on `grid`.
///
/// - constant: `(u, v)` at every node.
/// - bump: cell averages of `q + margin + amplitude exp(-((x - center)/width)^2)`
///   clipped to `[q + margin, 1 - margin]`, used for both fields.
/// - random: independent uniform draws in `(q + margin, 1 - margin)`, all of
///   `u` first, then `v`, from a ChaCha8 stream seeded with `seed`.
/// - csv: per-node values from a `j,u,v` file.
pub fn initial_fields(spec: &InitSpec, p: &BzParams, grid: &Grid1D) -> Result<(Field1D, Field1D)> {
    let n = grid.node_count();
    match spec {
        InitSpec::Constant { u, v } => Ok((Field1D::constant(grid, *u), Field1D::constant(grid, *v))),
        InitSpec::Bump {
            center,
            width,
            amplitude,
            margin,
        } => {
            let (lo, hi) = clip_bounds(p, *margin)?;
            let profile = |x: f64| {
                let z = (x - center) / width;
                (lo + amplitude * (-z * z).exp()).clamp(lo, hi)
            };
            let u = cell_average(profile, grid);
            Ok((u.clone(), u))
        }
        InitSpec::Random { seed, margin } => {
            let (lo, hi) = clip_bounds(p, *margin)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut draw = || -> Field1D {
                (0..n)
                    .map(|_| loop {
                        let x = rng.random_range(lo..hi);
                        if x > lo {
                            break x;
                        }
                    })
                    .collect::<Vec<_>>()
                    .into()
            };
            let u = draw();
            let v = draw();
            Ok((u, v))
        }
        InitSpec::Csv { path } => {
            let (u, v) = csv_io::read_initial_csv(path)?;
            if u.len() != n {
                return Err(CliError::Config(format!(
                    "{}: {} rows, grid has {n} nodes",
                    path.display(),
                    u.len()
                )));
            }
            Ok((u, v))
        }
    }
}

fn clip_bounds(p: &BzParams, margin: f64) -> Result<(f64, f64)> {
    let (lo, hi) = (p.q() + margin, 1.0 - margin);
    if !(lo < hi) {
        return Err(CliError::Config(format!(
            "init.margin = {margin} leaves no room inside (q, 1) = ({}, 1)",
            p.q()
        )));
    }
    Ok((lo, hi))
}
