//! Successive approximation for `u' = -F(u) u + g(u)`, `u(0) = a`.
//!
//! Starting from the constant iterate `u^1 = a`, each new iterate solves the
//! linear problem
//!
//! ```text
//! (u^{l+1})' = -F(u^l) u^{l+1} + g(u^l),   u^{l+1}(0) = a
//! ```
//!
//! exactly through the integrating factor of the diagonal matrix `F(u^l)`:
//!
//! ```text
//! u_i^{l+1}(t) = e^{-Phi_i(t)} a_i + int_0^t e^{-(Phi_i(t) - Phi_i(s))} g_i(u^l(s)) ds,
//! Phi_i(t)     = int_0^t f_i(u^l(s)) ds.
//! ```
//!
//! Both integrals use the trapezoidal rule on a uniform fine grid. Every term
//! is a product of nonnegative factors, so iterates stay nonnegative. On
//! `[0, T0]` the iterates also stay in the ball of radius `2 ||a||`, where
//! `T0 = min(1/(3 M_f), ||a||/(3 M_g))` and `M_f`, `M_g` bound `||F||`, `||g||`
//! on that ball.

use crate::error::{Error, Result};
use crate::model::{max_norm, ModelSpec, StateVec};
use crate::trajectory::{TimeGrid, Trajectory};

pub const DEFAULT_SAMPLES_PER_AXIS: usize = 101;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Lattices larger than this are refused by [`existence_horizon`].
const MAX_LATTICE_POINTS: usize = 50_000_000;

/// Bounds on `F` and `g` over the ball `||v|| <= 2 ||a||` and the resulting horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExistenceEstimate {
    pub m_f: f64,
    pub m_g: f64,
    pub t0: f64,
    pub ball_radius: f64,
}

/// `min(1/(3 m_f), a_norm/(3 m_g))` with zero denominators read as `+inf`.
pub fn horizon_from_bounds(m_f: f64, m_g: f64, a_norm: f64) -> f64 {
    let term_f = if m_f > 0.0 { 1.0 / (3.0 * m_f) } else { f64::INFINITY };
    let term_g = if m_g > 0.0 { a_norm / (3.0 * m_g) } else { f64::INFINITY };
    term_f.min(term_g)
}

/// Estimates `M_f`, `M_g` and `T0` for initial value `a`.
///
/// The suprema are taken over a lattice with `samples_per_axis` points per
/// axis on the nonnegative box `[0, 2 ||a||]^m`. When the model carries a
/// Lipschitz hint `L`, both maxima are raised by `L * spacing / 2`, which
/// makes them true upper bounds on the box.
pub fn existence_horizon(
    model: &ModelSpec,
    a: &StateVec,
    samples_per_axis: usize,
) -> Result<ExistenceEstimate> {
    let m = model.dim();
    if a.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: a.len(),
        });
    }
    if !a.is_nonnegative() {
        return Err(Error::Precondition(
            "initial value must be componentwise nonnegative".into(),
        ));
    }
    let a_norm = max_norm(a)?;
    if a_norm == 0.0 {
        return Err(Error::Precondition(
            "existence horizon needs a nonzero initial value".into(),
        ));
    }
    if samples_per_axis < 2 {
        return Err(Error::InvalidParameter {
            name: "samples_per_axis",
            reason: format!("need at least 2, got {samples_per_axis}"),
        });
    }
    let total = u32::try_from(m)
        .ok()
        .and_then(|e| samples_per_axis.checked_pow(e))
        .filter(|&n| n <= MAX_LATTICE_POINTS)
        .ok_or_else(|| Error::InvalidParameter {
            name: "samples_per_axis",
            reason: format!("{samples_per_axis}^{m} lattice points is too many"),
        })?;

    let radius = 2.0 * a_norm;
    let spacing = radius / (samples_per_axis - 1) as f64;
    let mut idx = vec![0usize; m];
    let mut v = vec![0.0; m];
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; m];
    let (mut m_f, mut m_g) = (0.0_f64, 0.0_f64);
    for _ in 0..total {
        for (vi, &k) in v.iter_mut().zip(&idx) {
            *vi = k as f64 * spacing;
        }
        model.decay_into(&v, &mut f)?;
        model.source_into(&v, &mut g)?;
        m_f = m_f.max(max_norm(&f)?);
        m_g = m_g.max(max_norm(&g)?);
        // odometer increment
        for k in idx.iter_mut() {
            *k += 1;
            if *k < samples_per_axis {
                break;
            }
            *k = 0;
        }
    }
    if let Some(lip) = model.lipschitz_hint() {
        m_f += lip * spacing / 2.0;
        m_g += lip * spacing / 2.0;
    }
    Ok(ExistenceEstimate {
        m_f,
        m_g,
        t0: horizon_from_bounds(m_f, m_g, a_norm),
        ball_radius: radius,
    })
}

fn check_rates(kind: &str, r: usize, rates: &[f64]) -> Result<()> {
    match rates.iter().position(|&x| !(x >= 0.0) || !x.is_finite()) {
        Some(i) => Err(Error::Domain(format!(
            "{kind}_{} = {} at node {r}; rates must be finite and nonnegative",
            i + 1,
            rates[i]
        ))),
        None => Ok(()),
    }
}

/// Computes the next successive approximation from `prev`.
pub fn picard_step(model: &ModelSpec, prev: &Trajectory, a: &StateVec) -> Result<Trajectory> {
    let m = model.dim();
    if a.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: a.len(),
        });
    }
    if prev.dim() != m {
        return Err(Error::GridMismatch(format!(
            "previous iterate has dimension {}, model has {m}",
            prev.dim()
        )));
    }
    if !a.is_nonnegative() {
        return Err(Error::Precondition(
            "initial value must be componentwise nonnegative".into(),
        ));
    }
    let grid = *prev.grid();
    let half_dt = 0.5 * grid.dt();
    let n = grid.n_nodes();

    let mut f = vec![vec![0.0; m]; n];
    let mut g = vec![vec![0.0; m]; n];
    for (r, s) in prev.states().iter().enumerate() {
        model.decay_into(s, &mut f[r])?;
        model.source_into(s, &mut g[r])?;
        check_rates("f", r, &f[r])?;
        check_rates("g", r, &g[r])?;
    }

    // u(t_{r+1}) = e^{-dPhi} (u(t_r) + dt/2 g_r) + dt/2 g_{r+1}, with
    // dPhi = dt/2 (f_r + f_{r+1}); this unrolls to the composite trapezoid
    // rule applied to both integrals of the integrating-factor formula.
    let mut states = Vec::with_capacity(n);
    states.push(a.clone());
    let mut cur = a.to_vec();
    for r in 0..n - 1 {
        for i in 0..m {
            let damp = (-half_dt * (f[r][i] + f[r + 1][i])).exp();
            cur[i] = damp * (cur[i] + half_dt * g[r][i]) + half_dt * g[r + 1][i];
        }
        states.push(StateVec::new(cur.clone()));
    }
    Trajectory::new(grid, states)
}

/// Settings for [`solve_picard`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub horizon: f64,
    pub dt_fine: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub samples_per_axis: usize,
    /// Permit `horizon > T0`. The nonnegativity of iterates still holds,
    /// but the `2 ||a||` bound and convergence are no longer guaranteed.
    pub allow_beyond_horizon: bool,
}

impl PicardOptions {
    pub fn new(horizon: f64, dt_fine: f64) -> Self {
        Self {
            horizon,
            dt_fine,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            samples_per_axis: DEFAULT_SAMPLES_PER_AXIS,
            allow_beyond_horizon: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardSolution {
    pub trajectory: Trajectory,
    /// `differences[l]` is the sup-node distance between iterates `l + 2` and `l + 1`.
    pub differences: Vec<f64>,
    /// Number of [`picard_step`] calls performed.
    pub iterations: usize,
    /// `None` when `a = 0`, where no horizon estimate exists.
    pub estimate: Option<ExistenceEstimate>,
}

/// Iterates [`picard_step`] from `u^1 = a` until consecutive iterates differ
/// by less than `opts.tol` in the discrete sup norm.
pub fn solve_picard(model: &ModelSpec, a: &StateVec, opts: PicardOptions) -> Result<PicardSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be > 0, got {}", opts.tol),
        });
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidParameter {
            name: "max_iter",
            reason: "must be positive".into(),
        });
    }
    if !a.is_nonnegative() {
        return Err(Error::Precondition(
            "initial value must be componentwise nonnegative".into(),
        ));
    }
    let estimate = if max_norm(a)? > 0.0 {
        let est = existence_horizon(model, a, opts.samples_per_axis)?;
        if opts.horizon > est.t0 && !opts.allow_beyond_horizon {
            return Err(Error::Precondition(format!(
                "horizon {} exceeds the existence horizon T0 = {}",
                opts.horizon, est.t0
            )));
        }
        Some(est)
    } else {
        None
    };

    let grid = TimeGrid::covering(opts.horizon, opts.dt_fine)?;
    let mut current = Trajectory::constant(grid, a);
    let mut differences = Vec::new();
    for iter in 1..=opts.max_iter {
        let next = picard_step(model, &current, a)?;
        let diff = next.sup_distance(&current)?;
        differences.push(diff);
        current = next;
        if diff < opts.tol {
            return Ok(PicardSolution {
                trajectory: current,
                differences,
                iterations: iter,
                estimate,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        last_difference: *differences.last().expect("max_iter > 0"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bz_reaction_model, BzParams};
    use proptest::prelude::*;

    fn relax() -> ModelSpec {
        ModelSpec::constant(vec![1.0], vec![1.0]).unwrap()
    }

    #[test]
    fn horizon_constant_rates() {
        let est = existence_horizon(&relax(), &vec![1.0].into(), 11).unwrap();
        assert_eq!(est.m_f, 1.0);
        assert_eq!(est.m_g, 1.0);
        assert_eq!(est.t0, 1.0 / 3.0);
        assert_eq!(est.ball_radius, 2.0);
    }

    #[test]
    fn horizon_zero_source() {
        let m = ModelSpec::constant(vec![1.0], vec![0.0]).unwrap();
        let est = existence_horizon(&m, &vec![1.0].into(), 11).unwrap();
        assert_eq!(est.t0, 1.0 / 3.0);
        let none = ModelSpec::constant(vec![0.0], vec![0.0]).unwrap();
        assert_eq!(existence_horizon(&none, &vec![1.0].into(), 3).unwrap().t0, f64::INFINITY);
    }

    #[test]
    fn horizon_preconditions() {
        assert!(matches!(
            existence_horizon(&relax(), &vec![0.0].into(), 11),
            Err(Error::Precondition(_))
        ));
        assert!(existence_horizon(&relax(), &vec![-1.0].into(), 11).is_err());
        assert!(existence_horizon(&relax(), &vec![1.0].into(), 1).is_err());
    }

    #[test]
    fn bz_horizon_matches_brute_force() {
        let p = BzParams::classic();
        let est = existence_horizon(&bz_reaction_model(p), &vec![0.5, 0.5].into(), 101).unwrap();
        // independent maximization of the closed-form rates over the 101^2 lattice
        let (mut mf, mut mg) = (0.0_f64, 0.0_f64);
        for i in 0..101 {
            for j in 0..101 {
                let (u, v) = (i as f64 / 100.0, j as f64 / 100.0);
                let f1 = u / 0.032 + 15.625 * v / (u + 2e-4);
                let g1 = u / 0.032 + 15.625 * 2e-4 * v / (u + 2e-4);
                mf = mf.max(f1.max(1.0));
                mg = mg.max(g1.max(u));
            }
        }
        assert!((est.m_f - mf).abs() <= 1e-9 * mf);
        assert!((est.m_g - mg).abs() <= 1e-9 * mg);
        let t0 = (1.0 / (3.0 * mf)).min(0.5 / (3.0 * mg));
        assert!((est.t0 - t0).abs() <= 1e-12 * t0);
        assert!(est.t0 > 0.0 && est.t0.is_finite());
    }

    #[test]
    fn lipschitz_hint_inflates_bounds() {
        let m = ModelSpec::new(1, |s, o| { o[0] = s[0]; Ok(()) }, |_, o| { o[0] = 0.0; Ok(()) })
            .unwrap()
            .with_lipschitz_hint(1.0)
            .unwrap();
        let est = existence_horizon(&m, &vec![1.0].into(), 3).unwrap();
        assert_eq!(est.m_f, 2.5);
    }

    #[test]
    fn step_without_dynamics_is_identity() {
        let m = ModelSpec::constant(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let a: StateVec = vec![0.3, 0.7].into();
        let prev = Trajectory::constant(TimeGrid::new(0.1, 11).unwrap(), &a);
        let next = picard_step(&m, &prev, &a).unwrap();
        assert_eq!(next, prev);
    }

    fn relax_error(dt: f64) -> f64 {
        let a: StateVec = vec![0.0].into();
        let grid = TimeGrid::covering(1.0, dt).unwrap();
        let next = picard_step(&relax(), &Trajectory::constant(grid, &a), &a).unwrap();
        next.states()
            .iter()
            .zip(grid.times())
            .map(|(s, t)| (s[0] - (1.0 - (-t).exp())).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn trapezoid_is_second_order() {
        assert!(relax_error(0.01) < 1e-5);
        for dt in [0.1, 0.05, 0.02] {
            let ratio = relax_error(dt) / relax_error(dt / 2.0);
            assert!((3.5..=4.5).contains(&ratio), "dt={dt}: ratio {ratio}");
        }
    }

    #[test]
    fn constant_rates_converge_in_two() {
        let m = ModelSpec::constant(vec![2.0, 0.5], vec![1.0, 3.0]).unwrap();
        let a: StateVec = vec![1.0, 2.0].into();
        let sol = solve_picard(&m, &a, PicardOptions::new(0.05, 1e-3)).unwrap();
        assert_eq!(sol.iterations, 2);
        assert_eq!(sol.differences[1], 0.0);
    }

    #[test]
    fn zero_data_converges_immediately() {
        let m = bz_reaction_model(BzParams::classic());
        let sol = solve_picard(&m, &vec![0.0, 0.0].into(), PicardOptions::new(0.01, 1e-3)).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.estimate.is_none());
        assert_eq!(sol.trajectory.sup_norm(), 0.0);
    }

    #[test]
    fn horizon_guard() {
        let a: StateVec = vec![1.0].into();
        let err = solve_picard(&relax(), &a, PicardOptions::new(0.5, 1e-3)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let mut opts = PicardOptions::new(0.5, 1e-3);
        opts.allow_beyond_horizon = true;
        assert!(solve_picard(&relax(), &a, opts).is_ok());
    }

    #[test]
    fn reports_non_convergence() {
        let m = ModelSpec::new(1, |s, o| { o[0] = s[0] * s[0]; Ok(()) }, |s, o| { o[0] = 1.0 + s[0]; Ok(()) })
            .unwrap();
        let mut opts = PicardOptions::new(0.01, 1e-4);
        opts.max_iter = 2;
        opts.tol = 1e-300;
        match solve_picard(&m, &vec![1.0].into(), opts) {
            Err(Error::NonConvergence { iterations, last_difference }) => {
                assert_eq!(iterations, 2);
                assert!(last_difference > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn bz_contracts_and_stays_bounded() {
        let m = bz_reaction_model(BzParams::classic());
        let a: StateVec = vec![0.5, 0.5].into();
        let t0 = existence_horizon(&m, &a, 101).unwrap().t0;
        let sol = solve_picard(&m, &a, PicardOptions::new(t0, t0 / 200.0)).unwrap();
        assert!(sol.trajectory.min_value() >= 0.0);
        assert!(sol.trajectory.sup_norm() <= 1.0);
        for w in sol.differences[1..].windows(2) {
            assert!(w[1] <= 0.9 * w[0], "{:?}", sol.differences);
        }
    }

    #[test]
    fn nonlinear_contracts() {
        // f = u^2, g = 1 + u  (local Lipschitz, positive source)
        let m = ModelSpec::new(1, |s, o| { o[0] = s[0] * s[0]; Ok(()) }, |s, o| { o[0] = 1.0 + s[0]; Ok(()) })
            .unwrap();
        let a: StateVec = vec![1.0].into();
        let t0 = existence_horizon(&m, &a, 101).unwrap().t0;
        let sol = solve_picard(&m, &a, PicardOptions::new(t0, t0 / 500.0)).unwrap();
        assert!(sol.trajectory.sup_norm() <= 2.0);
        for w in sol.differences[1..].windows(2) {
            assert!(w[1] <= 0.9 * w[0], "{:?}", sol.differences);
        }
    }

    proptest! {
        #[test]
        fn step_output_nonnegative(
            vals in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 21),
            a in (0.0f64..1.0, 0.0f64..1.0),
            dt in 1e-4f64..1e-1,
        ) {
            let m = bz_reaction_model(BzParams::classic());
            let grid = TimeGrid::new(dt, vals.len()).unwrap();
            let prev = Trajectory::new(grid, vals.iter().map(|&(u, v)| vec![u, v].into()).collect()).unwrap();
            let next = picard_step(&m, &prev, &vec![a.0, a.1].into()).unwrap();
            prop_assert!(next.min_value() >= 0.0);
        }
    }
}
