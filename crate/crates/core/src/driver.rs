//! The adaptive proximal bundle loop and its variants.
//!
//! A run alternates prox bundle subproblems around a fixed prox center until
//! the cycle test `t_j ≤ β(φ(y_j) − n̂) + ε/4` accepts, then moves the center
//! (serious step). Within a cycle the stepsize is halved whenever the
//! observed decrease of `t_j` is too slow.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{window_aggregate, window_start, AggregateCut, BundleError, BundleModel, BundleScheme};
use crate::linalg::norm_sq;
use crate::problem::{CompositeObjective, Cut, ProblemError};
use crate::proxsolver::{self, SubproblemSolution};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("variant {0} needs the optimal value φ*")]
    MissingOptimalValue(Variant),
    #[error("zero subgradient at a point with φ(x) − φ* = {0} > 0")]
    DegenerateOracle(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    AdGpb,
    AdGpbStar,
    AdGpbStarStar,
    Gpb,
    PolGpb,
    PolAdGpbStar,
    PolSubgrad,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::AdGpb,
        Variant::AdGpbStar,
        Variant::AdGpbStarStar,
        Variant::Gpb,
        Variant::PolGpb,
        Variant::PolAdGpbStar,
        Variant::PolSubgrad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::AdGpb => "ad-gpb",
            Variant::AdGpbStar => "ad-gpb-star",
            Variant::AdGpbStarStar => "ad-gpb-star-star",
            Variant::Gpb => "gpb",
            Variant::PolGpb => "pol-gpb",
            Variant::PolAdGpbStar => "pol-ad-gpb-star",
            Variant::PolSubgrad => "pol-subgrad",
        }
    }

    /// Halves λ inside a cycle.
    pub fn is_adaptive(self) -> bool {
        matches!(self, Variant::AdGpb | Variant::AdGpbStar | Variant::AdGpbStarStar | Variant::PolAdGpbStar)
    }

    /// Uses `n̂ = φ*` and `β ≡ 1/2`.
    pub fn is_star(self) -> bool {
        matches!(self, Variant::AdGpbStar | Variant::AdGpbStarStar | Variant::PolAdGpbStar)
    }

    pub fn is_polyak_seeded(self) -> bool {
        matches!(self, Variant::PolGpb | Variant::PolAdGpbStar)
    }

    pub fn requires_phi_star(self) -> bool {
        self.is_star() || self.is_polyak_seeded() || self == Variant::PolSubgrad
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| format!("unknown solver '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub variant: Variant,
    pub lambda1: f64,
    pub tau: f64,
    pub beta0: f64,
    /// Absolute tolerance `ε`.
    pub epsilon: f64,
    pub scheme: BundleScheme,
    pub max_bundle_size: usize,
    pub warm_start: bool,
    pub max_iterations: u64,
    pub max_seconds: Option<f64>,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            variant: Variant::AdGpbStar,
            lambda1: 1.0,
            tau: 0.95,
            beta0: 0.5,
            epsilon: 1e-6,
            scheme: BundleScheme::TwoCut,
            max_bundle_size: 100,
            warm_start: true,
            max_iterations: 1_000_000,
            max_seconds: None,
            record_trace: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), DriverError> {
        let bad = |m: &str| Err(DriverError::InvalidConfig(m.to_string()));
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must lie in (0, 1)");
        }
        if !(0.0..=0.5).contains(&self.beta0) {
            return bad("beta0 must lie in [0, 1/2]");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.lambda1 > 0.0 && self.lambda1.is_finite()) {
            return bad("lambda1 must be positive and finite");
        }
        if self.scheme == BundleScheme::MultiCut && self.max_bundle_size < 2 {
            return bad("multi-cut bundles need max_bundle_size >= 2");
        }
        Ok(())
    }
}

/// `ε = ε̄·(φ(x₀) − φ*)`.
pub fn relative_epsilon(eps_bar: f64, phi_x0: f64, phi_star: f64) -> f64 {
    eps_bar * (phi_x0 - phi_star)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Event {
    NullKeep,
    NullHalve,
    Serious,
    Stop,
}

impl Event {
    pub fn name(self) -> &'static str {
        match self {
            Event::NullKeep => "null-keep",
            Event::NullHalve => "null-halve",
            Event::Serious => "serious",
            Event::Stop => "stop",
        }
    }
}

impl FromStr for Event {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Event::NullKeep, Event::NullHalve, Event::Serious, Event::Stop]
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown event '{s}'"))
    }
}

/// One line of the per-iteration trace. `lambda` is the stepsize used at `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub j: u64,
    pub k: u64,
    pub lambda: f64,
    pub t: f64,
    pub phi_best: f64,
    pub event: Event,
}

/// Summary of one completed cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub k: u64,
    pub first_j: u64,
    pub last_j: u64,
    pub lambda_start: f64,
    pub lambda_hat: f64,
    pub t_start: f64,
    pub bad: u64,
    pub beta_prev: f64,
    pub beta: f64,
    pub n_hat: f64,
    pub ell_hat: Option<f64>,
    pub phi_y_hat: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminatedBy {
    Tolerance,
    IterationCap,
    TimeCap,
}

impl TerminatedBy {
    pub fn name(self) -> &'static str {
        match self {
            TerminatedBy::Tolerance => "tolerance",
            TerminatedBy::IterationCap => "iteration-cap",
            TerminatedBy::TimeCap => "time-cap",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: Variant,
    pub lambda1: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub beta0: f64,
    pub phi_x0: f64,
    pub x_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub phi_y: f64,
    pub n_hat: f64,
    /// `φ(ŷ) − n̂`.
    pub gap_bound: f64,
    /// `ℓ̂₀ = min Γ₁` when lower bounds are tracked.
    pub ell_hat0: Option<f64>,
    pub iterations: u64,
    pub serious: u64,
    pub null: u64,
    pub bad: u64,
    pub cycles: u64,
    pub seconds: f64,
    pub terminated_by: TerminatedBy,
    pub unconverged_solves: u64,
    pub max_solver_residual: f64,
    pub trace: Vec<TraceRecord>,
    pub cycle_log: Vec<CycleRecord>,
}

/// Everything an auditor needs to check one bundle update.
pub struct BundleStep<'a> {
    pub j: u64,
    pub center: &'a [f64],
    pub lambda: f64,
    pub model: &'a BundleModel,
    pub solution: &'a SubproblemSolution,
    pub new_cut: &'a Cut,
    /// f-part of `Γ̄` (max of these cuts).
    pub bar: &'a [Cut],
    pub next_model: &'a BundleModel,
}

pub trait RunObserver {
    fn bundle_step(&mut self, _step: &BundleStep<'_>) {}
}

struct NoObserver;

impl RunObserver for NoObserver {}

/// `t ≤ β(φ(y) − n̂) + ε/4`.
pub fn cycle_stop_test(t: f64, beta_prev: f64, phi_y: f64, n_hat_prev: f64, epsilon: f64) -> bool {
    t <= beta_prev * (phi_y - n_hat_prev) + epsilon / 4.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepsizeAction {
    Keep,
    Halve,
}

/// Null-step stepsize decision.
#[allow(clippy::too_many_arguments)]
pub fn stepsize_rule(
    t: f64,
    t_prev: f64,
    beta_prev: f64,
    phi_y: f64,
    n_hat_prev: f64,
    epsilon: f64,
    tau: f64,
    is_first_of_cycle: bool,
) -> StepsizeAction {
    if is_first_of_cycle || t - tau * t_prev <= (1.0 - tau) * (beta_prev * (phi_y - n_hat_prev) / 2.0 + epsilon / 8.0) {
        StepsizeAction::Keep
    } else {
        StepsizeAction::Halve
    }
}

/// `λ_pol = (φ(x) − φ*)/‖g‖²`.
pub fn polyak_stepsize(phi_x: f64, phi_star: f64, g: &[f64]) -> Result<f64, DriverError> {
    let gap = phi_x - phi_star;
    if gap <= 0.0 {
        return Ok(0.0);
    }
    let g2 = norm_sq(g);
    if g2 == 0.0 {
        return Err(DriverError::DegenerateOracle(gap));
    }
    Ok(gap / g2)
}

/// Stepsize for the first iteration of cycle `k + 1`.
pub fn variant_seed(variant: Variant, lambda_hat: f64, all_cycles_good: bool, polyak_lambda: f64, lambda1: f64) -> f64 {
    match variant {
        Variant::AdGpb | Variant::AdGpbStar => lambda_hat,
        Variant::AdGpbStarStar if all_cycles_good => 2.0 * lambda_hat,
        Variant::AdGpbStarStar => lambda_hat,
        Variant::PolGpb | Variant::PolAdGpbStar => {
            if polyak_lambda > 0.0 {
                40.0 * polyak_lambda
            } else {
                lambda_hat
            }
        }
        Variant::Gpb | Variant::PolSubgrad => lambda1,
    }
}

pub fn run(obj: &CompositeObjective, config: &SolverConfig, x0: &[f64]) -> Result<RunReport, DriverError> {
    run_observed(obj, config, x0, &mut NoObserver)
}

enum LowerBound {
    Known(f64),
    Tracked { ell_hat: f64 },
}

struct CycleInput {
    lambda_hat: f64,
    phi_y_hat: f64,
    beta_prev: f64,
    n_hat_prev: f64,
}

pub fn run_observed(
    obj: &CompositeObjective,
    config: &SolverConfig,
    x0: &[f64],
    observer: &mut dyn RunObserver,
) -> Result<RunReport, DriverError> {
    if config.variant == Variant::PolSubgrad {
        return polyak_subgrad_run(obj, config, x0);
    }
    config.validate()?;
    let start = Instant::now();
    let variant = config.variant;
    obj.h.check(x0)?;
    if variant.requires_phi_star() && obj.phi_star.is_none() {
        return Err(DriverError::MissingOptimalValue(variant));
    }

    let (phi0, fo0) = obj.eval(x0)?;
    let cut0 = Cut::linearization(x0, fo0.value, fo0.subgradient.clone());
    let use_known = variant != Variant::AdGpb && obj.phi_star.is_some();
    let mut bound = if use_known {
        LowerBound::Known(obj.phi_star.unwrap_or_default())
    } else {
        LowerBound::Tracked { ell_hat: proxsolver::min_affine_plus_h(&obj.h, &cut0)? }
    };
    let ell_hat0 = match bound {
        LowerBound::Tracked { ell_hat } => Some(ell_hat),
        LowerBound::Known(_) => None,
    };
    let n_hat_of = |b: &LowerBound| match *b {
        LowerBound::Known(v) => v,
        LowerBound::Tracked { ell_hat } => ell_hat,
    };
    let eps = config.epsilon;
    let tau = config.tau;
    let beta0 = if variant.is_star() { 0.5 } else { config.beta0 };
    let mut beta = if variant.is_adaptive() { beta0 } else { 0.0 };

    let polyak = |phi: f64, g: &[f64]| -> Result<f64, DriverError> {
        match obj.phi_star {
            Some(ps) => polyak_stepsize(phi, ps, g),
            None => Ok(0.0),
        }
    };
    let lambda1 = if variant.is_polyak_seeded() {
        let lp = polyak(phi0, &fo0.subgradient)?;
        if lp > 0.0 {
            40.0 * lp
        } else {
            config.lambda1
        }
    } else {
        config.lambda1
    };

    let mut report = RunReport {
        variant,
        lambda1,
        epsilon: eps,
        tau,
        beta0,
        phi_x0: phi0,
        x_hat: x0.to_vec(),
        y_hat: x0.to_vec(),
        phi_y: phi0,
        n_hat: n_hat_of(&bound),
        gap_bound: phi0 - n_hat_of(&bound),
        ell_hat0,
        iterations: 0,
        serious: 0,
        null: 0,
        bad: 0,
        cycles: 0,
        seconds: 0.0,
        terminated_by: TerminatedBy::Tolerance,
        unconverged_solves: 0,
        max_solver_residual: 0.0,
        trace: Vec::new(),
        cycle_log: Vec::new(),
    };
    if phi0 - n_hat_of(&bound) <= eps {
        report.seconds = start.elapsed().as_secs_f64();
        return Ok(report);
    }

    let h = Arc::clone(&obj.h);
    let mut model = BundleModel::single(config.scheme, cut0, Arc::clone(&h), config.max_bundle_size);
    let mut center = x0.to_vec();
    let mut y = x0.to_vec();
    let mut phi_y = phi0;
    let mut lambda = lambda1;
    let mut t_prev = f64::NAN;
    let mut j: u64 = 1;
    let mut k: u64 = 1;
    let mut cycle_first_j: u64 = 1;
    let mut cycle_lambda_start = lambda1;
    let mut cycle_t_start = f64::NAN;
    let mut cycle_bad: u64 = 0;
    let mut all_cycles_good = true;
    let mut aggregates: Vec<AggregateCut> = Vec::new();
    let mut history: Vec<CycleInput> = Vec::new();

    loop {
        if j > config.max_iterations {
            report.terminated_by = TerminatedBy::IterationCap;
            break;
        }
        if let Some(cap) = config.max_seconds {
            if start.elapsed().as_secs_f64() > cap {
                report.terminated_by = TerminatedBy::TimeCap;
                break;
            }
        }
        let sol = model.solve(&center, lambda);
        if !sol.converged {
            report.unconverged_solves += 1;
        }
        report.max_solver_residual = report.max_solver_residual.max(sol.residual);
        let (phi_x, fo) = obj.eval(&sol.x)?;
        let new_cut = Cut::linearization(&sol.x, fo.value, fo.subgradient.clone()).with_origin(j as usize);
        if phi_x < phi_y {
            phi_y = phi_x;
            y.clone_from(&sol.x);
        }
        let t = phi_y - sol.m;
        let n_hat_prev = n_hat_of(&bound);
        let first_of_cycle = j == cycle_first_j;
        if first_of_cycle {
            cycle_t_start = t;
        }
        let accept =
            if variant.is_adaptive() { cycle_stop_test(t, beta, phi_y, n_hat_prev, eps) } else { t <= eps / 2.0 };
        report.iterations = j;

        if !accept {
            let action = if variant.is_adaptive() {
                stepsize_rule(t, t_prev, beta, phi_y, n_hat_prev, eps, tau, first_of_cycle)
            } else {
                StepsizeAction::Keep
            };
            let buf = model.update(&sol, new_cut.clone())?;
            observer.bundle_step(&BundleStep {
                j,
                center: &center,
                lambda,
                model: &model,
                solution: &sol,
                new_cut: &new_cut,
                bar: &buf.bar,
                next_model: &buf.model,
            });
            let event = match action {
                StepsizeAction::Keep => Event::NullKeep,
                StepsizeAction::Halve => Event::NullHalve,
            };
            push_trace(&mut report, config, j, k, lambda, t, phi_y, event);
            report.null += 1;
            if action == StepsizeAction::Halve {
                report.bad += 1;
                cycle_bad += 1;
                lambda /= 2.0;
            }
            model = buf.model;
            t_prev = t;
            j += 1;
            continue;
        }

        // serious step
        report.serious += 1;
        let lambda_hat = lambda;
        aggregates.push(AggregateCut { cut: model.aggregate_cut(&sol), stepsize: lambda_hat });
        history.push(CycleInput { lambda_hat, phi_y_hat: phi_y, beta_prev: beta, n_hat_prev });
        if let LowerBound::Tracked { ell_hat } = &mut bound {
            let agg = window_aggregate(&aggregates, k as usize)?;
            *ell_hat = ell_hat.max(proxsolver::min_affine_plus_h(&h, &agg)?);
        }
        let n_hat = n_hat_of(&bound);
        let ell_hat = match bound {
            LowerBound::Tracked { ell_hat } => Some(ell_hat),
            LowerBound::Known(_) => None,
        };
        let beta_prev = beta;
        let done = phi_y - n_hat <= eps;
        if !done && variant.is_adaptive() && beta_halves(&history, k as usize, n_hat) {
            beta /= 2.0;
        }
        report.cycle_log.push(CycleRecord {
            k,
            first_j: cycle_first_j,
            last_j: j,
            lambda_start: cycle_lambda_start,
            lambda_hat,
            t_start: cycle_t_start,
            bad: cycle_bad,
            beta_prev,
            beta,
            n_hat,
            ell_hat,
            phi_y_hat: phi_y,
        });
        report.cycles = k;
        report.x_hat.clone_from(&sol.x);
        report.y_hat.clone_from(&y);
        report.phi_y = phi_y;
        report.n_hat = n_hat;
        report.gap_bound = phi_y - n_hat;
        if done {
            push_trace(&mut report, config, j, k, lambda, t, phi_y, Event::Stop);
            report.terminated_by = TerminatedBy::Tolerance;
            report.seconds = start.elapsed().as_secs_f64();
            return Ok(report);
        }
        push_trace(&mut report, config, j, k, lambda, t, phi_y, Event::Serious);

        all_cycles_good &= cycle_bad == 0;
        let lp = if variant.is_polyak_seeded() { polyak(phi_x, &fo.subgradient)? } else { 0.0 };
        lambda = variant_seed(variant, lambda_hat, all_cycles_good, lp, lambda1);
        model = if config.warm_start {
            let buf = model.update(&sol, new_cut.clone())?;
            observer.bundle_step(&BundleStep {
                j,
                center: &center,
                lambda: lambda_hat,
                model: &model,
                solution: &sol,
                new_cut: &new_cut,
                bar: &buf.bar,
                next_model: &buf.model,
            });
            buf.model
        } else {
            BundleModel::single(config.scheme, new_cut, Arc::clone(&h), config.max_bundle_size)
        };
        center = sol.x;
        k += 1;
        j += 1;
        cycle_first_j = j;
        cycle_lambda_start = lambda;
        cycle_bad = 0;
        t_prev = f64::NAN;
    }

    // capped: report the best point found so far
    report.y_hat = y;
    report.phi_y = phi_y;
    report.n_hat = n_hat_of(&bound);
    report.gap_bound = phi_y - report.n_hat;
    report.x_hat = center;
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// `ĝ_k > (φ̂ᵃ_k − n̂_k)/2` over the window `⌈k/2⌉..=k`.
fn beta_halves(history: &[CycleInput], k: usize, n_hat: f64) -> bool {
    let window = &history[window_start(k) - 1..k];
    let total: f64 = window.iter().map(|c| c.lambda_hat).sum();
    let g: f64 = window.iter().map(|c| c.beta_prev * c.lambda_hat * (c.phi_y_hat - c.n_hat_prev)).sum::<f64>() / total;
    let rhs = window.iter().map(|c| c.lambda_hat * (c.phi_y_hat - n_hat)).sum::<f64>() / total / 2.0;
    g > rhs
}

#[allow(clippy::too_many_arguments)]
fn push_trace(
    report: &mut RunReport,
    config: &SolverConfig,
    j: u64,
    k: u64,
    lambda: f64,
    t: f64,
    phi_best: f64,
    event: Event,
) {
    if config.record_trace {
        report.trace.push(TraceRecord { j, k, lambda, t, phi_best, event });
    }
}

/// Prox-linear steps `x⁺ = argmin ℓ_φ(·; x) + ‖· − x‖²/(2λ_pol(x))` until
/// `φ(x) − φ* ≤ ε`.
pub fn polyak_subgrad_run(
    obj: &CompositeObjective,
    config: &SolverConfig,
    x0: &[f64],
) -> Result<RunReport, DriverError> {
    let start = Instant::now();
    if !(config.epsilon > 0.0) {
        return Err(DriverError::InvalidConfig("epsilon must be positive".into()));
    }
    obj.h.check(x0)?;
    let phi_star = obj.phi_star.ok_or(DriverError::MissingOptimalValue(Variant::PolSubgrad))?;
    let eps = config.epsilon;
    let (phi0, mut fo) = obj.eval(x0)?;
    let mut x = x0.to_vec();
    let mut phi = phi0;
    let mut y = x.clone();
    let mut phi_y = phi0;
    let mut report = RunReport {
        variant: Variant::PolSubgrad,
        lambda1: 0.0,
        epsilon: eps,
        tau: config.tau,
        beta0: 0.0,
        phi_x0: phi0,
        x_hat: x.clone(),
        y_hat: y.clone(),
        phi_y,
        n_hat: phi_star,
        gap_bound: phi0 - phi_star,
        ell_hat0: None,
        iterations: 0,
        serious: 0,
        null: 0,
        bad: 0,
        cycles: 0,
        seconds: 0.0,
        terminated_by: TerminatedBy::Tolerance,
        unconverged_solves: 0,
        max_solver_residual: 0.0,
        trace: Vec::new(),
        cycle_log: Vec::new(),
    };
    let mut j: u64 = 0;
    while phi_y - phi_star > eps {
        if j >= config.max_iterations {
            report.terminated_by = TerminatedBy::IterationCap;
            break;
        }
        if config.max_seconds.is_some_and(|cap| start.elapsed().as_secs_f64() > cap) {
            report.terminated_by = TerminatedBy::TimeCap;
            break;
        }
        let lambda = polyak_stepsize(phi, phi_star, &fo.subgradient)?;
        if j == 0 {
            report.lambda1 = lambda;
        }
        let cut = Cut::linearization(&x, fo.value, fo.subgradient.clone());
        let sol = proxsolver::solve_affine(&obj.h, &cut, &x, lambda);
        j += 1;
        x = sol.x;
        let (p, f) = obj.eval(&x)?;
        phi = p;
        fo = f;
        if phi < phi_y {
            phi_y = phi;
            y.clone_from(&x);
        }
        let event = if phi_y - phi_star <= eps { Event::Stop } else { Event::Serious };
        push_trace(&mut report, config, j, j, lambda, phi_y - phi_star, phi_y, event);
    }
    report.iterations = j;
    report.serious = j;
    report.cycles = j;
    report.x_hat = x;
    report.y_hat = y;
    report.phi_y = phi_y;
    report.gap_bound = phi_y - phi_star;
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
