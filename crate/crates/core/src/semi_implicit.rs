//! Semi-implicit Euler for `u' = -F(u) u + g(u)`.
//!
//! The decay term is taken at the new level and everything else at the old
//! one. For diagonal `F` the implicit equation has the closed form
//!
//! ```text
//! u_i^{k+1} = (u_i^k + g_i(u^k) dt) / (1 + f_i(u^k) dt)
//! ```
//!
//! which is a ratio of nonnegative quantities with denominator `>= 1`, so
//! the iterates stay nonnegative for every `dt > 0`.

use crate::error::{Error, Result};
use crate::model::{ModelSpec, StateVec};
use crate::trajectory::{TimeGrid, Trajectory};

/// Fixed step size and step count for [`solve_de`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeConfig {
    pub dt: f64,
    pub n_steps: usize,
}

impl DeConfig {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        check_dt(dt)?;
        if n_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "n_steps",
                reason: "must be positive".into(),
            });
        }
        Ok(Self { dt, n_steps })
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be finite and > 0, got {dt}"),
        });
    }
    Ok(())
}

/// `(x + g dt) / (1 + f dt)`: one component of the explicit update.
#[inline]
pub fn de_quotient(x: f64, f: f64, g: f64, dt: f64) -> f64 {
    (x + g * dt) / (1.0 + f * dt)
}

/// One step of the semi-implicit scheme.
pub fn de_step(model: &ModelSpec, u: &[f64], dt: f64) -> Result<StateVec> {
    check_dt(dt)?;
    if let Some((i, &x)) = u.iter().enumerate().find(|(_, &x)| !(x >= 0.0)) {
        return Err(Error::Precondition(format!(
            "de_step needs a nonnegative state, component {i} is {x}"
        )));
    }
    let f = model.decay(u)?;
    let g = model.source(u)?;
    Ok(u.iter()
        .zip(f.iter().zip(g.iter()))
        .map(|(&x, (&fi, &gi))| de_quotient(x, fi, gi, dt))
        .collect::<Vec<_>>()
        .into())
}

/// Runs `cfg.n_steps` steps from `a`, returning all `n_steps + 1` states.
pub fn solve_de(model: &ModelSpec, a: &StateVec, cfg: DeConfig) -> Result<Trajectory> {
    let grid = TimeGrid::new(cfg.dt, cfg.n_steps + 1)?;
    let mut states = Vec::with_capacity(cfg.n_steps + 1);
    states.push(a.clone());
    let mut u = a.clone();
    for _ in 0..cfg.n_steps {
        u = de_step(model, &u, cfg.dt)?;
        states.push(u.clone());
    }
    Trajectory::new(grid, states)
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
    fn fixed_point_any_dt() {
        for dt in [1e-6, 0.1, 1.0, 1e6] {
            assert_eq!(&*de_step(&relax(), &[1.0], dt).unwrap(), &[1.0]);
        }
    }

    #[test]
    fn pure_decay_halves() {
        let m = ModelSpec::constant(vec![1.0], vec![0.0]).unwrap();
        assert_eq!(&*de_step(&m, &[2.0], 1.0).unwrap(), &[1.0]);
    }

    #[test]
    fn bz_origin_is_fixed() {
        let m = bz_reaction_model(BzParams::classic());
        for dt in [1e-3, 1.0, 1e3] {
            assert_eq!(&*de_step(&m, &[0.0, 0.0], dt).unwrap(), &[0.0, 0.0]);
        }
    }

    #[test]
    fn rejects_negative_and_bad_dt() {
        assert!(matches!(
            de_step(&relax(), &[-1e-300], 0.1),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            de_step(&relax(), &[f64::NAN], 0.1),
            Err(Error::Precondition(_))
        ));
        assert!(de_step(&relax(), &[1.0], 0.0).is_err());
        assert!(de_step(&relax(), &[1.0], f64::INFINITY).is_err());
    }

    #[test]
    fn linear_recurrence_closed_form() {
        let tr = solve_de(&relax(), &vec![0.0].into(), DeConfig::new(0.1, 10).unwrap()).unwrap();
        for (k, s) in tr.states().iter().enumerate() {
            let exact = 1.0 - 1.1_f64.powi(-(k as i32));
            assert!((s[0] - exact).abs() < 1e-14, "k={k}: {} vs {exact}", s[0]);
        }
    }

    #[test]
    fn bz_huge_step_stays_positive() {
        let m = bz_reaction_model(BzParams::classic());
        let tr = solve_de(&m, &vec![0.5, 0.5].into(), DeConfig::new(10.0, 50).unwrap()).unwrap();
        for s in tr.states() {
            assert!(s.iter().all(|&x| x > 0.0 && x.is_finite()));
        }
    }

    #[test]
    fn first_order_error_ratio() {
        let err = |dt: f64| {
            let n = (1.0 / dt).round() as usize;
            let tr = solve_de(&relax(), &vec![0.0].into(), DeConfig::new(dt, n).unwrap()).unwrap();
            (tr.last()[0] - (1.0 - (-1.0_f64).exp())).abs()
        };
        for dt in [0.1, 0.05, 0.02] {
            let ratio = err(dt) / err(dt / 2.0);
            assert!((1.8..=2.2).contains(&ratio), "dt={dt}: ratio {ratio}");
        }
    }

    proptest! {
        #[test]
        fn unconditional_positivity(
            u in prop::collection::vec(0.0f64..1e3, 3),
            c in prop::collection::vec(0.0f64..10.0, 6),
            log_dt in -6.0f64..6.0,
        ) {
            let dt = 10f64.powf(log_dt);
            let (c1, c2) = (c.clone(), c);
            let m = ModelSpec::new(
                3,
                move |s, out| {
                    for i in 0..3 { out[i] = c1[i] * s[(i + 1) % 3] * s[(i + 1) % 3]; }
                    Ok(())
                },
                move |s, out| {
                    for i in 0..3 { out[i] = c2[i + 3] * s[(i + 2) % 3] / (1.0 + s[i]); }
                    Ok(())
                },
            ).unwrap();
            let next = de_step(&m, &u, dt).unwrap();
            prop_assert!(next.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn fixed_point_preserved(x in 0.0f64..100.0, f in 0.0f64..50.0, log_dt in -6.0f64..6.0) {
            let dt = 10f64.powf(log_dt);
            let g = f * x;
            let m = ModelSpec::constant(vec![f], vec![g]).unwrap();
            let next = de_step(&m, &[x], dt).unwrap()[0];
            prop_assert!((next - x).abs() <= 1e-12 * x.max(1.0));
        }

        #[test]
        fn pure_decay_is_monotone(x in prop::collection::vec(0.0f64..1e3, 2), log_dt in -6.0f64..6.0) {
            let dt = 10f64.powf(log_dt);
            let m = ModelSpec::new(2, |s, out| { out[0] = s[1]; out[1] = s[0] + 1.0; Ok(()) },
                                       |_, out| { out.fill(0.0); Ok(()) }).unwrap();
            let next = de_step(&m, &x, dt).unwrap();
            prop_assert!(next.iter().zip(&x).all(|(n, o)| n <= o));
        }
    }
}
