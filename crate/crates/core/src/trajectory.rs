use crate::error::{Error, Result};
use crate::model::StateVec;

/// Uniform time grid `t_r = r * dt` for `r = 0..n_nodes`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    n_nodes: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_nodes: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("must be finite and > 0, got {dt}"),
            });
        }
        if n_nodes < 2 {
            return Err(Error::InvalidParameter {
                name: "n_nodes",
                reason: format!("need at least 2 nodes, got {n_nodes}"),
            });
        }
        Ok(Self { dt, n_nodes })
    }

    /// Grid on `[0, horizon]` whose spacing is the largest value `<= dt_max`
    /// that divides the horizon evenly.
    pub fn covering(horizon: f64, dt_max: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: format!("must be finite and > 0, got {horizon}"),
            });
        }
        if !(dt_max > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt_fine",
                reason: format!("must be > 0, got {dt_max}"),
            });
        }
        let intervals = ((horizon / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Self::new(horizon / intervals as f64, intervals + 1)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn time(&self, r: usize) -> f64 {
        r as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.n_nodes - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes).map(|r| self.time(r))
    }
}

/// States sampled on a [`TimeGrid`], one per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<StateVec>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, states: Vec<StateVec>) -> Result<Self> {
        if states.len() != grid.n_nodes() {
            return Err(Error::GridMismatch(format!(
                "{} states for {} grid nodes",
                states.len(),
                grid.n_nodes()
            )));
        }
        if let Some(first) = states.first() {
            let dim = first.len();
            if let Some(bad) = states.iter().find(|s| s.len() != dim) {
                return Err(Error::Dimension {
                    expected: dim,
                    got: bad.len(),
                });
            }
        }
        Ok(Self { grid, states })
    }

    /// Constant trajectory `u(t) = a`.
    pub fn constant(grid: TimeGrid, a: &StateVec) -> Self {
        Self {
            grid,
            states: vec![a.clone(); grid.n_nodes()],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn states(&self) -> &[StateVec] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn last(&self) -> &StateVec {
        self.states.last().expect("trajectory has at least two nodes")
    }

    /// Linear interpolation at time `t` in `[0, end]`.
    pub fn sample(&self, t: f64) -> Result<StateVec> {
        let end = self.grid.end();
        if !(t >= 0.0 && t <= end * (1.0 + 1e-12)) {
            return Err(Error::Precondition(format!(
                "sample time {t} outside [0, {end}]"
            )));
        }
        let x = (t / self.grid.dt()).min((self.grid.n_nodes() - 1) as f64);
        let r = (x.floor() as usize).min(self.grid.n_nodes() - 2);
        let w = x - r as f64;
        let (a, b) = (&self.states[r], &self.states[r + 1]);
        Ok(a.iter()
            .zip(b.iter())
            .map(|(&lo, &hi)| (1.0 - w) * lo + w * hi)
            .collect::<Vec<_>>()
            .into())
    }

    /// Sup over nodes of the max-norm difference to `other` on the same grid.
    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "trajectories live on different time grids".into(),
            ));
        }
        let mut sup = 0.0_f64;
        for (a, b) in self.states.iter().zip(&other.states) {
            if a.len() != b.len() {
                return Err(Error::Dimension {
                    expected: a.len(),
                    got: b.len(),
                });
            }
            for (x, y) in a.iter().zip(b.iter()) {
                sup = sup.max((x - y).abs());
            }
        }
        Ok(sup)
    }

    /// Largest max-norm over all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.states
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.states
            .iter()
            .flat_map(|s| s.iter())
            .fold(f64::INFINITY, |acc, &x| acc.min(x))
    }
}
