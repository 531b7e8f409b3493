//! Problem data for systems of the form `u' = -F(u) u + g(u)`.
//!
//! `F` is diagonal with entries `f_i(u) >= 0` (decay rates) and `g` has
//! entries `g_i(u) >= 0` (sources). Every solver in this crate consumes a
//! [`ModelSpec`]; the Keener-Tyson BZ reaction is the one shipped preset.

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Ordered state vector `(u_1, ..., u_m)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateVec(Vec<f64>);

impl StateVec {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&x| x >= 0.0)
    }
}

impl Deref for StateVec {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for StateVec {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for StateVec {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[f64; N]> for StateVec {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

/// Max norm `max_i |v_i|`.
pub fn max_norm(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Dimension {
            expected: 1,
            got: 0,
        });
    }
    Ok(v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())))
}

/// Componentwise rate evaluator: reads the full state, writes `m` values.
pub type Evaluator = dyn Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync;

/// The pair `(F, g)` together with the system dimension.
///
/// Both evaluators see the whole state vector since each `f_i`, `g_i` may
/// depend on every component. They must return nonnegative values on the
/// nonnegative part of their domain; the solvers rely on it.
#[derive(Clone)]
pub struct ModelSpec {
    dim: usize,
    decay: Arc<Evaluator>,
    source: Arc<Evaluator>,
    lipschitz_hint: Option<f64>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("dim", &self.dim)
            .field("lipschitz_hint", &self.lipschitz_hint)
            .finish_non_exhaustive()
    }
}

impl ModelSpec {
    pub fn new<F, G>(dim: usize, decay: F, source: G) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "must be positive".into(),
            });
        }
        Ok(Self {
            dim,
            decay: Arc::new(decay),
            source: Arc::new(source),
            lipschitz_hint: None,
        })
    }

    /// Model with state-independent `f` and `g`.
    pub fn constant(decay: Vec<f64>, source: Vec<f64>) -> Result<Self> {
        if decay.len() != source.len() {
            return Err(Error::Dimension {
                expected: decay.len(),
                got: source.len(),
            });
        }
        if decay.iter().chain(&source).any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rates",
                reason: "constant rates must be finite and nonnegative".into(),
            });
        }
        let dim = decay.len();
        Self::new(
            dim,
            move |_, out| {
                out.copy_from_slice(&decay);
                Ok(())
            },
            move |_, out| {
                out.copy_from_slice(&source);
                Ok(())
            },
        )
    }

    pub fn with_lipschitz_hint(mut self, bound: f64) -> Result<Self> {
        if !(bound >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lipschitz_hint",
                reason: format!("must be nonnegative, got {bound}"),
            });
        }
        self.lipschitz_hint = Some(bound);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: len,
            });
        }
        Ok(())
    }

    /// Writes `f(s)` into `out`.
    pub fn decay_into(&self, s: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_dim(s.len())?;
        self.check_dim(out.len())?;
        (self.decay)(s, out)
    }

    /// Writes `g(s)` into `out`.
    pub fn source_into(&self, s: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_dim(s.len())?;
        self.check_dim(out.len())?;
        (self.source)(s, out)
    }

    pub fn decay(&self, s: &[f64]) -> Result<StateVec> {
        let mut out = vec![0.0; self.dim];
        self.decay_into(s, &mut out)?;
        Ok(StateVec(out))
    }

    pub fn source(&self, s: &[f64]) -> Result<StateVec> {
        let mut out = vec![0.0; self.dim];
        self.source_into(s, &mut out)?;
        Ok(StateVec(out))
    }
}

/// Right-hand side `-f_i(s) s_i + g_i(s)`.
pub fn evaluate_rhs(model: &ModelSpec, s: &[f64]) -> Result<StateVec> {
    let f = model.decay(s)?;
    let g = model.source(s)?;
    Ok(StateVec(
        s.iter()
            .zip(f.iter().zip(g.iter()))
            .map(|(&x, (&fi, &gi))| -fi * x + gi)
            .collect(),
    ))
}

/// Constants of the Keener-Tyson BZ reaction term.
///
/// `h = rho / epsilon` is derived once at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BzParams {
    epsilon: f64,
    q: f64,
    d: f64,
    rho: f64,
    h: f64,
}

impl BzParams {
    pub const CLASSIC_EPSILON: f64 = 0.032;
    pub const CLASSIC_Q: f64 = 2.0e-4;
    pub const CLASSIC_D: f64 = 0.0192;
    pub const CLASSIC_RHO: f64 = 0.5;

    pub fn new(epsilon: f64, q: f64, d: f64, rho: f64) -> Result<Self> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return bad("epsilon", "must be finite and > 0");
        }
        if !(q > 0.0 && q < 1.0) {
            return bad("q", "must lie in (0, 1)");
        }
        if !(d >= 0.0) || !d.is_finite() {
            return bad("d", "must be finite and >= 0");
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return bad("rho", "must be finite and > 0");
        }
        Ok(Self {
            epsilon,
            q,
            d,
            rho,
            h: rho / epsilon,
        })
    }

    /// Classic Keener-Tyson constants: epsilon = 0.032, q = 2e-4,
    /// d = 0.6 epsilon = 0.0192, rho = 0.5.
    pub fn classic() -> Self {
        Self::new(
            Self::CLASSIC_EPSILON,
            Self::CLASSIC_Q,
            Self::CLASSIC_D,
            Self::CLASSIC_RHO,
        )
        .expect("classic constants are valid")
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Decay and source rates `([f_1, f_2], [g_1, g_2])` at `(u, v)`.
    ///
    /// Shared by [`bz_reaction_model`] and the pointwise reaction substep so
    /// both produce bit-identical updates.
    pub fn rates(&self, u: f64, v: f64) -> Result<([f64; 2], [f64; 2])> {
        let denom = u + self.q;
        if !(denom > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!(
                "BZ rates need u + q > 0 and finite v, got u = {u}, v = {v}"
            )));
        }
        let hv = self.h * v / denom;
        let u_eps = u / self.epsilon;
        let f1 = u_eps + hv;
        let g1 = u_eps + self.q * hv;
        Ok(([f1, 1.0], [g1, u]))
    }
}

/// Spatially uniform BZ reaction as a two-component `(F, g)` model on `(u, v)`.
pub fn bz_reaction_model(p: BzParams) -> ModelSpec {
    ModelSpec::new(
        2,
        move |s, out| {
            let (f, _) = p.rates(s[0], s[1])?;
            out.copy_from_slice(&f);
            Ok(())
        },
        move |s, out| {
            let (_, g) = p.rates(s[0], s[1])?;
            out.copy_from_slice(&g);
            Ok(())
        },
    )
    .expect("dimension 2 is positive")
}
