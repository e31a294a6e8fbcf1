//! Bundle models `Γ = (max of cuts) + h` and the bundle update step.
//!
//! An update takes the current model `Γ`, the subproblem solution `x` (with its
//! dual weights) and the new linearization `ℓ̃_f(·; x)`, and returns `Γ⁺` with
//! `Γ⁺ ≥ max{Γ̄, ℓ_φ(·; x)}` where `Γ̄` agrees with `Γ` at `x` and has the same
//! prox minimizer. The update also reports `Γ̄` so callers can audit it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{Cut, ProblemError, SimpleTerm};
use crate::proxsolver::{self, SubproblemSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BundleError {
    #[error("dual weight θ = {0} outside [0, 1]")]
    ThetaOutOfRange(f64),
    #[error("bundle capacity {max_size} cannot hold {needed} active cuts plus the new one")]
    CapacityTooSmall { max_size: usize, needed: usize },
    #[error("empty aggregation window")]
    EmptyWindow,
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BundleScheme {
    TwoCut,
    MultiCut,
}

/// `Γ = max{A_f, ℓ̃_f(·; x⁻)} + h`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoCutModel {
    pub aggregate: Cut,
    pub newest: Cut,
    pub h: Arc<SimpleTerm>,
}

impl TwoCutModel {
    /// A model with a single cut, stored in both slots.
    pub fn single(cut: Cut, h: Arc<SimpleTerm>) -> Self {
        Self { aggregate: cut.clone(), newest: cut, h }
    }

    pub fn cut_value(&self, u: &[f64]) -> f64 {
        self.aggregate.value(u).max(self.newest.value(u))
    }
}

/// Replaces the aggregate by `θ·A_f + (1 − θ)·ℓ̃_f(·; x⁻)` and the newest cut by
/// `new_cut`.
pub fn two_cut_update(model: &TwoCutModel, theta: f64, new_cut: Cut) -> Result<TwoCutModel, BundleError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(BundleError::ThetaOutOfRange(theta));
    }
    Ok(TwoCutModel {
        aggregate: Cut::combine(theta, &model.aggregate, &model.newest),
        newest: new_cut,
        h: Arc::clone(&model.h),
    })
}

/// `Γ(·; C) = max{ℓ̃_f(·; c) : c ∈ C} + h` over a capped, chronologically ordered cut list.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiCutModel {
    pub cuts: Vec<Cut>,
    pub h: Arc<SimpleTerm>,
    pub max_size: usize,
}

impl MultiCutModel {
    pub fn single(cut: Cut, h: Arc<SimpleTerm>, max_size: usize) -> Self {
        assert!(max_size >= 1);
        Self { cuts: vec![cut], h, max_size }
    }

    pub fn cut_value(&self, u: &[f64]) -> f64 {
        max_cut_value(&self.cuts, u)
    }

    /// Indices of the cuts attaining `Γ(x)` within `active_tol`.
    pub fn active_set(&self, x: &[f64], model_value_at_x: f64, active_tol: f64) -> Vec<usize> {
        self.cuts
            .iter()
            .enumerate()
            .filter(|(_, c)| c.value(x) >= model_value_at_x - active_tol)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn max_cut_value(cuts: &[Cut], u: &[f64]) -> f64 {
    cuts.iter().map(|c| c.value(u)).fold(f64::NEG_INFINITY, f64::max)
}

/// `C⁺ = C(x) ∪ {x}`: keeps the cuts active at `x` (in their original order)
/// followed by the new cut. Fails if that set does not fit in `max_size`.
pub fn multi_cut_update(
    model: &MultiCutModel,
    x: &[f64],
    new_cut: Cut,
    model_value_at_x: f64,
    active_tol: f64,
) -> Result<MultiCutModel, BundleError> {
    let active = model.active_set(x, model_value_at_x, active_tol);
    if active.len() + 1 > model.max_size {
        return Err(BundleError::CapacityTooSmall { max_size: model.max_size, needed: active.len() });
    }
    let mut cuts: Vec<Cut> = active.into_iter().map(|i| model.cuts[i].clone()).collect();
    cuts.push(new_cut);
    Ok(MultiCutModel { cuts, h: Arc::clone(&model.h), max_size: model.max_size })
}

#[derive(Clone, Debug, PartialEq)]
pub enum BundleModel {
    TwoCut(TwoCutModel),
    MultiCut(MultiCutModel),
}

/// Output of one bundle update: the new model and the f-part of `Γ̄`.
#[derive(Clone, Debug)]
pub struct BufOutput {
    pub model: BundleModel,
    pub bar: Vec<Cut>,
}

impl BundleModel {
    pub fn single(scheme: BundleScheme, cut: Cut, h: Arc<SimpleTerm>, max_size: usize) -> Self {
        match scheme {
            BundleScheme::TwoCut => BundleModel::TwoCut(TwoCutModel::single(cut, h)),
            BundleScheme::MultiCut => BundleModel::MultiCut(MultiCutModel::single(cut, h, max_size)),
        }
    }

    pub fn h(&self) -> &SimpleTerm {
        match self {
            BundleModel::TwoCut(m) => &m.h,
            BundleModel::MultiCut(m) => &m.h,
        }
    }

    pub fn cuts(&self) -> Vec<&Cut> {
        match self {
            BundleModel::TwoCut(m) => vec![&m.aggregate, &m.newest],
            BundleModel::MultiCut(m) => m.cuts.iter().collect(),
        }
    }

    /// Max of the cuts, without `h`.
    pub fn cut_value(&self, u: &[f64]) -> f64 {
        match self {
            BundleModel::TwoCut(m) => m.cut_value(u),
            BundleModel::MultiCut(m) => m.cut_value(u),
        }
    }

    pub fn value(&self, u: &[f64]) -> Result<f64, ProblemError> {
        let hu = self.h().value(u)?;
        Ok(self.cut_value(u) + hu)
    }

    /// Solves `min Γ(u) + ‖u − xc‖²/(2λ)`.
    pub fn solve(&self, xc: &[f64], lambda: f64) -> SubproblemSolution {
        match self {
            BundleModel::TwoCut(m) => {
                proxsolver::solve_two_cut(&m.h, &m.aggregate, &m.newest, xc, lambda, proxsolver::TWO_CUT_TOL)
            }
            BundleModel::MultiCut(m) => {
                proxsolver::solve_multi_cut(&m.h, &m.cuts, xc, lambda, proxsolver::MULTI_CUT_TOL)
            }
        }
    }

    /// The dual-weighted combination of the cuts at a subproblem solution. It
    /// minorizes `Γ` (hence `f`) and, for the two-cut scheme, is `Γ̄ − h`.
    pub fn aggregate_cut(&self, sol: &SubproblemSolution) -> Cut {
        match self {
            BundleModel::TwoCut(m) => Cut::combine(sol.theta(), &m.aggregate, &m.newest),
            BundleModel::MultiCut(m) => {
                let refs: Vec<&Cut> = m.cuts.iter().collect();
                Cut::weighted(&sol.weights, &refs)
            }
        }
    }

    /// One bundle update at the subproblem solution `sol` with `new_cut = ℓ̃_f(·; sol.x)`.
    pub fn update(&self, sol: &SubproblemSolution, new_cut: Cut) -> Result<BufOutput, BundleError> {
        match self {
            BundleModel::TwoCut(m) => {
                let next = two_cut_update(m, sol.theta(), new_cut)?;
                let bar = vec![next.aggregate.clone()];
                Ok(BufOutput { model: BundleModel::TwoCut(next), bar })
            }
            BundleModel::MultiCut(m) => {
                let gx = m.cut_value(&sol.x);
                let tol = (ACTIVE_TOL * (1.0 + gx.abs())).max(10.0 * sol.residual);
                match multi_cut_update(m, &sol.x, new_cut.clone(), gx, tol) {
                    Ok(next) => {
                        let bar = m.active_set(&sol.x, gx, tol).into_iter().map(|i| m.cuts[i].clone()).collect();
                        Ok(BufOutput { model: BundleModel::MultiCut(next), bar })
                    }
                    Err(BundleError::CapacityTooSmall { .. }) => {
                        // too many active cuts: collapse them into their dual aggregate
                        let agg = self.aggregate_cut(sol);
                        let next = MultiCutModel {
                            cuts: vec![agg.clone(), new_cut],
                            h: Arc::clone(&m.h),
                            max_size: m.max_size,
                        };
                        Ok(BufOutput { model: BundleModel::MultiCut(next), bar: vec![agg] })
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }
}

/// Relative activity tolerance for membership in `C(x)`.
pub const ACTIVE_TOL: f64 = 1e-10;

pub fn model_value(model: &BundleModel, u: &[f64]) -> Result<f64, ProblemError> {
    model.value(u)
}

/// Per-cycle record: the aggregate affine minorant and the cycle stepsize `λ̂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateCut {
    pub cut: Cut,
    pub stepsize: f64,
}

/// First cycle index `⌈k/2⌉` of the averaging window ending at cycle `k`.
pub fn window_start(k: usize) -> usize {
    k.div_ceil(2)
}

/// `λ̂`-weighted average of the cuts of cycles `⌈k/2⌉..=k`. `records[l − 1]`
/// belongs to cycle `l`.
pub fn window_aggregate(records: &[AggregateCut], k: usize) -> Result<Cut, BundleError> {
    if k == 0 || records.len() < k {
        return Err(BundleError::EmptyWindow);
    }
    let window = &records[window_start(k) - 1..k];
    let total: f64 = window.iter().map(|r| r.stepsize).sum();
    let weights: Vec<f64> = window.iter().map(|r| r.stepsize / total).collect();
    let cuts: Vec<&Cut> = window.iter().map(|r| &r.cut).collect();
    Ok(Cut::weighted(&weights, &cuts))
}
