//! Diagnostics: invariant-region scans, the upper edge `ubar` of the
//! continuous invariant region, convergence-order fits and a forward-Euler
//! comparison step.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::BzParams;
use crate::splitting::{Grid1D, SplitState};

/// Open box `(lo_0, hi_0) x (lo_1, hi_1) x ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Dimension {
                expected: lo.len().max(1),
                got: hi.len(),
            });
        }
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] < hi[i])) {
            return Err(Error::InvalidParameter {
                name: "region",
                reason: format!("component {i}: need lo < hi, got ({}, {})", lo[i], hi[i]),
            });
        }
        Ok(Self { lo, hi })
    }

    /// `(q, 1)^2`, the invariant box of the split scheme.
    pub fn discrete_bz(p: &BzParams) -> Self {
        Self {
            lo: vec![p.q(); 2],
            hi: vec![1.0; 2],
        }
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&x, (&lo, &hi))| x > lo && x < hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub step: usize,
    pub node: usize,
    /// 0 for `u`, 1 for `v`.
    pub component: usize,
    pub value: f64,
    pub bound: Bound,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = ["u", "v"].get(self.component).copied().unwrap_or("?");
        let side = match self.bound {
            Bound::Lower => "lower",
            Bound::Upper => "upper",
        };
        write!(
            f,
            "step {} node {}: {name} = {} breaches the {side} bound",
            self.step, self.node, self.value
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ViolationReport {
    violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

/// Incremental form of [`check_region`] for streamed snapshots.
#[derive(Debug, Clone)]
pub struct RegionChecker {
    region: Region,
    report: ViolationReport,
}

impl RegionChecker {
    /// `region` must have two components (`u`, `v`).
    pub fn new(region: Region) -> Result<Self> {
        if region.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                got: region.dim(),
            });
        }
        Ok(Self {
            region,
            report: ViolationReport::default(),
        })
    }

    pub fn observe(&mut self, s: &SplitState) {
        for (component, field) in [&s.u, &s.v].into_iter().enumerate() {
            let (lo, hi) = (self.region.lo[component], self.region.hi[component]);
            for (node, &value) in field.iter().enumerate() {
                let bound = if !(value > lo) {
                    Bound::Lower
                } else if !(value < hi) {
                    Bound::Upper
                } else {
                    continue;
                };
                self.report.violations.push(Violation {
                    step: s.k,
                    node,
                    component,
                    value,
                    bound,
                });
            }
        }
    }

    pub fn finish(self) -> ViolationReport {
        self.report
    }
}

/// Every nodal value of every snapshot that is not strictly inside `r`.
pub fn check_region(snapshots: &[SplitState], r: &Region) -> Result<ViolationReport> {
    let mut checker = RegionChecker::new(r.clone())?;
    for s in snapshots {
        checker.observe(s);
    }
    Ok(checker.finish())
}

/// `phi(u) = u (1 - u)(u + q) - eps h q (u - q)`; its root in `(q, 1)` is `ubar`.
pub fn bz_cubic(p: &BzParams, u: f64) -> f64 {
    let q = p.q();
    u * (1.0 - u) * (u + q) - p.epsilon() * p.h() * q * (u - q)
}

const UBAR_MAX_BISECTIONS: usize = 2000;

/// Root of [`bz_cubic`] in `(q, 1)` by bisection, to interval width and
/// residual both below `tol`.
pub fn ubar(p: &BzParams, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be > 0, got {tol}"),
        });
    }
    let (mut lo, mut hi) = (p.q(), 1.0);
    let (f_lo, f_hi) = (bz_cubic(p, lo), bz_cubic(p, hi));
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::NoBracket { lo, hi, f_lo, f_hi });
    }
    for _ in 0..UBAR_MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let f_mid = bz_cubic(p, mid);
        if hi - lo <= tol && f_mid.abs() < tol && mid > p.q() && mid < 1.0 {
            return Ok(mid);
        }
        if mid <= lo || mid >= hi {
            // interval exhausted at floating-point resolution
            return Err(Error::NonConvergence {
                iterations: UBAR_MAX_BISECTIONS,
                last_difference: f_mid.abs(),
            });
        }
        if f_mid > 0.0 {
            lo = mid;
        } else if f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: UBAR_MAX_BISECTIONS,
        last_difference: bz_cubic(p, 0.5 * (lo + hi)).abs(),
    })
}

/// Least-squares slope of `ln(error)` against `ln(dt)`.
pub fn convergence_order(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 (dt, error) pairs, got {}",
            pairs.len()
        )));
    }
    if let Some(&(dt, err)) = pairs
        .iter()
        .find(|&&(dt, err)| !(dt > 0.0 && err > 0.0) || !dt.is_finite() || !err.is_finite())
    {
        return Err(Error::Degenerate(format!(
            "dt and error must be finite and positive, got ({dt}, {err})"
        )));
    }
    if pairs.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::Degenerate("dt must be strictly decreasing".into()));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// One explicit Euler step of the spatially uniform BZ reaction.
///
/// Carries no positivity guarantee; kept for comparison with the
/// semi-implicit step.
pub fn forward_euler_counterexample(p: &BzParams, state: (f64, f64), dt: f64) -> Result<(f64, f64)> {
    let (u, v) = state;
    if !(u + p.q() > 0.0) {
        return Err(Error::Domain(format!("u + q must be > 0, got u = {u}")));
    }
    let du = u * (1.0 - u) / p.epsilon() - p.h() * v * (u - p.q()) / (u + p.q());
    let dv = -v + u;
    Ok((u + dt * du, v + dt * dv))
}

/// First step at which every node of both fields is inside `r`, if any.
///
/// Used to probe for absorbing behaviour from initial data outside the
/// invariant box; this is an observation, not a guarantee.
pub fn first_entry_step(snapshots: &[SplitState], r: &Region) -> Option<usize> {
    snapshots.iter().find_map(|s| {
        let inside = s
            .u
            .iter()
            .zip(s.v.iter())
            .all(|(&u, &v)| r.contains(&[u, v]));
        inside.then_some(s.k)
    })
}

/// Nodal sup distance between two states on the same grid.
pub fn split_state_distance(a: &SplitState, b: &SplitState, grid: &Grid1D) -> Result<f64> {
    let n = grid.node_count();
    if [a.u.len(), a.v.len(), b.u.len(), b.v.len()].iter().any(|&l| l != n) {
        return Err(Error::GridMismatch("states do not match the grid".into()));
    }
    Ok(a.u
        .iter()
        .zip(b.u.iter())
        .chain(a.v.iter().zip(b.v.iter()))
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bz_reaction_model;
    use crate::semi_implicit::{de_step, solve_de, DeConfig};
    use crate::model::ModelSpec;
    use proptest::prelude::*;

    fn snap(k: usize, u: Vec<f64>, v: Vec<f64>) -> SplitState {
        SplitState {
            u: u.into(),
            v: v.into(),
            k,
            t: 0.0,
        }
    }

    #[test]
    fn region_examples() {
        let p = BzParams::classic();
        let r = Region::discrete_bz(&p);
        let ok = check_region(&[snap(0, vec![0.5; 3], vec![0.5; 3])], &r).unwrap();
        assert!(ok.is_empty());
        let bad = check_region(
            &[
                snap(0, vec![0.5, p.q(), 0.5], vec![0.5; 3]),
                snap(4, vec![0.5; 3], vec![1.0, 0.5, f64::NAN]),
            ],
            &r,
        )
        .unwrap();
        assert_eq!(bad.len(), 3);
        assert_eq!(
            bad.violations()[0],
            Violation { step: 0, node: 1, component: 0, value: p.q(), bound: Bound::Lower }
        );
        assert_eq!(bad.violations()[1].bound, Bound::Upper);
        assert_eq!(bad.violations()[1].step, 4);
        assert_eq!(bad.violations()[2].node, 2);
    }

    #[test]
    fn region_validation() {
        assert!(Region::new(vec![0.0], vec![0.0]).is_err());
        assert!(Region::new(vec![0.0, 1.0], vec![1.0]).is_err());
        let r = Region::new(vec![0.0], vec![1.0]).unwrap();
        assert!(check_region(&[], &r).is_err());
    }

    #[test]
    fn cubic_endpoint_values() {
        let p = BzParams::classic();
        let q = p.q();
        assert!((bz_cubic(&p, q) - 2.0 * q * q * (1.0 - q)).abs() < 1e-22);
        assert!((bz_cubic(&p, 1.0) + p.epsilon() * p.h() * q * (1.0 - q)).abs() < 1e-19);
    }

    #[test]
    fn ubar_classic_constants() {
        let p = BzParams::classic();
        let ub = ubar(&p, 1e-12).unwrap();
        assert!(bz_cubic(&p, ub).abs() < 1e-12);
        assert!(ub > 0.99 && ub < 1.0);
    }

    #[test]
    fn ubar_rejects_bad_tol() {
        assert!(ubar(&BzParams::classic(), 0.0).is_err());
    }

    #[test]
    fn order_examples() {
        assert!((convergence_order(&[(0.1, 0.1), (0.05, 0.05)]).unwrap() - 1.0).abs() < 1e-12);
        assert!((convergence_order(&[(0.1, 0.01), (0.05, 0.0025)]).unwrap() - 2.0).abs() < 1e-12);
        assert!(convergence_order(&[(0.1, 0.1)]).is_err());
        assert!(convergence_order(&[(0.1, 0.0), (0.05, 0.1)]).is_err());
        assert!(convergence_order(&[(0.05, 0.1), (0.1, 0.1)]).is_err());
    }

    #[test]
    fn de_order_on_relaxation() {
        let m = ModelSpec::constant(vec![1.0], vec![1.0]).unwrap();
        let exact = 1.0 - (-1.0_f64).exp();
        let pairs: Vec<(f64, f64)> = [0.1_f64, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&dt| {
                let n = (1.0 / dt).round() as usize;
                let tr = solve_de(&m, &vec![0.0].into(), DeConfig::new(dt, n).unwrap()).unwrap();
                (dt, (tr.last()[0] - exact).abs())
            })
            .collect();
        let order = convergence_order(&pairs).unwrap();
        assert!((0.9..=1.1).contains(&order), "order {order}");
    }

    #[test]
    fn euler_at_left_face() {
        let p = BzParams::classic();
        let q = p.q();
        let (u, _) = forward_euler_counterexample(&p, (q, 1.0), 1.0).unwrap();
        assert!((u - (q + q * (1.0 - q) / p.epsilon())).abs() < 1e-15);
        assert!(forward_euler_counterexample(&p, (-1.0, 0.5), 0.1).is_err());
    }

    #[test]
    fn euler_leaves_orthant_where_de_does_not() {
        let p = BzParams::classic();
        let m = bz_reaction_model(p);
        let state = (0.5, 0.999);
        let dt = std::iter::successors(Some(1.0_f64), |d| Some(d * 2.0))
            .take(30)
            .find(|&dt| forward_euler_counterexample(&p, state, dt).unwrap().0 < 0.0)
            .expect("sign flip on doubling grid");
        let de = de_step(&m, &[state.0, state.1], dt).unwrap();
        assert!(Region::discrete_bz(&p).contains(&de));
    }

    #[test]
    fn euler_and_de_agree_to_second_order() {
        let p = BzParams::classic();
        let m = bz_reaction_model(p);
        let gap = |dt: f64| {
            let (u, v) = forward_euler_counterexample(&p, (0.4, 0.6), dt).unwrap();
            let de = de_step(&m, &[0.4, 0.6], dt).unwrap();
            (u - de[0]).abs().max((v - de[1]).abs())
        };
        let ratio = gap(1e-4) / gap(1e-6);
        assert!((ratio / 1e4 - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn entry_step() {
        let r = Region::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let snaps = vec![snap(0, vec![2.0], vec![0.5]), snap(3, vec![0.5], vec![0.5])];
        assert_eq!(first_entry_step(&snaps, &r), Some(3));
        assert_eq!(first_entry_step(&snaps[..1], &r), None);
    }

    proptest! {
        #[test]
        fn ubar_randomized(eps in 1e-3f64..1.0, q in 1e-6f64..0.5, rho in 0.1f64..2.0) {
            let p = BzParams::new(eps, q, 0.0, rho).unwrap();
            let ub = ubar(&p, 1e-10).unwrap();
            prop_assert!(bz_cubic(&p, ub).abs() < 1e-10);
            prop_assert!(ub > q && ub < 1.0);
        }

        #[test]
        fn enlarging_region_never_adds_violations(
            vals in prop::collection::vec(-0.5f64..1.5, 2..20),
            grow in 0.0f64..0.5,
        ) {
            let n = vals.len() / 2;
            let s = snap(1, vals[..n].to_vec(), vals[n..2 * n].to_vec());
            let small = Region::new(vec![0.1, 0.1], vec![0.9, 0.9]).unwrap();
            let big = Region::new(vec![0.1 - grow, 0.1 - grow], vec![0.9 + grow, 0.9 + grow]).unwrap();
            let a = check_region(std::slice::from_ref(&s), &small).unwrap();
            let b = check_region(std::slice::from_ref(&s), &big).unwrap();
            prop_assert!(b.len() <= a.len());
        }

        #[test]
        fn order_recovers_exponent(c in 1e-3f64..1e3, k in 0.5f64..4.0) {
            let pairs: Vec<(f64, f64)> = [0.1_f64, 0.05, 0.025, 0.0125].iter().map(|&h| (h, c * h.powf(k))).collect();
            prop_assert!((convergence_order(&pairs).unwrap() - k).abs() < 1e-12);
        }
    }
}
