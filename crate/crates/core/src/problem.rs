//! Problem abstractions: the subgradient oracle for `f`, the simple term `h`,
//! affine cuts and composite evaluation of `φ = f + h`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("point is outside dom h (coordinate {index}: {value})")]
    InfeasiblePoint { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid box: lower[{index}] = {lower} > upper[{index}] = {upper}")]
    InvalidBox { index: usize, lower: f64, upper: f64 },
    #[error("dom h is unbounded; a box domain is required")]
    UnboundedDomain,
}

/// The simple term `h`. Indicator kinds are 0 on their domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SimpleTerm {
    Zero { dim: usize },
    NonnegOrthant { dim: usize },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl SimpleTerm {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ProblemError> {
        if lower.len() != upper.len() {
            return Err(ProblemError::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        for (index, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !(l <= u) {
                return Err(ProblemError::InvalidBox { index, lower: l, upper: u });
            }
        }
        Ok(SimpleTerm::Box { lower, upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            SimpleTerm::Zero { dim } | SimpleTerm::NonnegOrthant { dim } => *dim,
            SimpleTerm::Box { lower, .. } => lower.len(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, SimpleTerm::Box { .. })
    }

    /// `sup_{x,y ∈ dom h} ‖x − y‖`, infinite for the unbounded kinds.
    pub fn diameter(&self) -> f64 {
        match self {
            SimpleTerm::Box { lower, upper } => {
                lower.iter().zip(upper).map(|(l, u)| (u - l) * (u - l)).sum::<f64>().sqrt()
            }
            _ => f64::INFINITY,
        }
    }

    /// Coordinate bounds `(lo, hi)` of `dom h`.
    #[inline]
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        match self {
            SimpleTerm::Zero { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            SimpleTerm::NonnegOrthant { .. } => (0.0, f64::INFINITY),
            SimpleTerm::Box { lower, upper } => (lower[i], upper[i]),
        }
    }

    /// Projection of a single coordinate onto `dom h`.
    #[inline]
    pub fn clamp(&self, i: usize, v: f64) -> f64 {
        match self {
            SimpleTerm::Zero { .. } => v,
            SimpleTerm::NonnegOrthant { .. } => v.max(0.0),
            SimpleTerm::Box { lower, upper } => v.max(lower[i]).min(upper[i]),
        }
    }

    pub fn project(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = self.clamp(i, *v);
        }
    }

    pub fn check(&self, x: &[f64]) -> Result<(), ProblemError> {
        if x.len() != self.dim() {
            return Err(ProblemError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        for (index, &value) in x.iter().enumerate() {
            let (lo, hi) = self.bounds(index);
            if !(value >= lo && value <= hi) {
                return Err(ProblemError::InfeasiblePoint { index, value });
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.check(x).is_ok()
    }

    /// `h(x)`; off-domain points are an error rather than `+∞`.
    pub fn value(&self, x: &[f64]) -> Result<f64, ProblemError> {
        self.check(x).map(|_| 0.0)
    }

    /// Euclidean distance from `v` to the normal cone `N_{dom h}(x)`, i.e. how far
    /// `v ∈ ∂h(x)` is from holding. `x` is assumed feasible.
    pub fn normal_cone_residual(&self, x: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, (&xi, &vi)) in x.iter().zip(v).enumerate() {
            let (lo, hi) = self.bounds(i);
            let r = if lo == hi {
                0.0
            } else if xi <= lo {
                vi.max(0.0)
            } else if xi >= hi {
                vi.min(0.0)
            } else {
                vi
            };
            acc += r * r;
        }
        acc.sqrt()
    }
}

/// The componentwise sign function with `sign(0) = 0`.
pub fn sign(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// An affine minorant `u ↦ intercept + ⟨slope, u⟩` of `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub slope: Vec<f64>,
    pub intercept: f64,
    /// Iteration index of the point this cut linearizes at, if any.
    pub origin: Option<usize>,
}

impl Cut {
    pub fn new(slope: Vec<f64>, intercept: f64) -> Self {
        Self { slope, intercept, origin: None }
    }

    /// The linearization `f(x) + ⟨g, · − x⟩` stored in slope/intercept form.
    pub fn linearization(x: &[f64], fx: f64, g: Vec<f64>) -> Self {
        let intercept = fx - dot(&g, x);
        Self { slope: g, intercept, origin: None }
    }

    pub fn with_origin(mut self, origin: usize) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn dim(&self) -> usize {
        self.slope.len()
    }

    #[inline]
    pub fn value(&self, u: &[f64]) -> f64 {
        self.intercept + dot(&self.slope, u)
    }

    /// `θ·a + (1 − θ)·b` on slopes and intercepts.
    pub fn combine(theta: f64, a: &Cut, b: &Cut) -> Cut {
        let slope = a.slope.iter().zip(&b.slope).map(|(x, y)| theta * x + (1.0 - theta) * y).collect();
        Cut::new(slope, theta * a.intercept + (1.0 - theta) * b.intercept)
    }

    /// `Σ w_i c_i` for weights on the simplex.
    pub fn weighted(weights: &[f64], cuts: &[&Cut]) -> Cut {
        assert_eq!(weights.len(), cuts.len());
        assert!(!cuts.is_empty());
        let mut slope = vec![0.0; cuts[0].dim()];
        let mut intercept = 0.0;
        for (&w, c) in weights.iter().zip(cuts) {
            if w == 0.0 {
                continue;
            }
            for (s, g) in slope.iter_mut().zip(&c.slope) {
                *s += w * g;
            }
            intercept += w * c.intercept;
        }
        Cut::new(slope, intercept)
    }
}

/// Dimension-checked cut evaluation.
pub fn linearization_value(cut: &Cut, u: &[f64]) -> Result<f64, ProblemError> {
    if cut.dim() != u.len() {
        return Err(ProblemError::DimensionMismatch { expected: cut.dim(), got: u.len() });
    }
    Ok(cut.value(u))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderResult {
    pub value: f64,
    pub subgradient: Vec<f64>,
}

/// Value and subgradient oracle for `f`. Implementations are finite everywhere.
pub trait FirstOrderOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> FirstOrderResult;
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x).value
    }
}

/// `f(x) = ‖Ax − b‖₁` with subgradient `Aᵀ sign(Ax − b)`.
#[derive(Clone, Debug)]
pub struct L1Residual {
    pub a: Matrix,
    pub b: Vec<f64>,
}

impl L1Residual {
    pub fn new(a: Matrix, b: Vec<f64>) -> Self {
        assert_eq!(a.rows(), b.len(), "b must have one entry per row of A");
        Self { a, b }
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.a.rows()];
        self.a.mul_vec(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        r
    }
}

impl FirstOrderOracle for L1Residual {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn eval(&self, x: &[f64]) -> FirstOrderResult {
        let r = self.residual(x);
        let value = r.iter().map(|v| v.abs()).sum();
        let s = sign(&r);
        let mut g = vec![0.0; self.a.cols()];
        self.a.mul_t_vec(&s, &mut g);
        FirstOrderResult { value, subgradient: g }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.residual(x).iter().map(|v| v.abs()).sum()
    }
}

/// `φ = f + h`, optionally with a known optimal value `φ*`.
#[derive(Clone)]
pub struct CompositeObjective {
    pub f: Arc<dyn FirstOrderOracle>,
    pub h: Arc<SimpleTerm>,
    pub phi_star: Option<f64>,
}

impl std::fmt::Debug for CompositeObjective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompositeObjective")
            .field("dim", &self.dim())
            .field("h", &self.h)
            .field("phi_star", &self.phi_star)
            .finish()
    }
}

impl CompositeObjective {
    pub fn new(f: Arc<dyn FirstOrderOracle>, h: SimpleTerm, phi_star: Option<f64>) -> Self {
        assert_eq!(f.dim(), h.dim(), "f and h dimensions differ");
        Self { f, h: Arc::new(h), phi_star }
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn eval_phi(&self, x: &[f64]) -> Result<f64, ProblemError> {
        let hx = self.h.value(x)?;
        Ok(self.f.value(x) + hx)
    }

    /// `φ(x)` together with `f(x)` and `f'(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<(f64, FirstOrderResult), ProblemError> {
        let hx = self.h.value(x)?;
        let fo = self.f.eval(x);
        Ok((fo.value + hx, fo))
    }

    /// `φ(x)` and the cut `ℓ̃_f(·; x)`.
    pub fn linearize(&self, x: &[f64]) -> Result<(f64, Cut), ProblemError> {
        let (phi, fo) = self.eval(x)?;
        Ok((phi, Cut::linearization(x, fo.value, fo.subgradient)))
    }
}
