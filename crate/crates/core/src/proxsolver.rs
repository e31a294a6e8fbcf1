//! Solvers for the prox bundle subproblem
//!
//! ```text
//! min_u  max_c c(u) + h(u) + ‖u − xc‖² / (2λ)
//! ```
//!
//! for one, two or many affine cuts, plus the bounded minimization of an
//! affine function over `dom h` used for lower bounds.
//!
//! All solvers work on the dual over the simplex of cut weights `θ`. For fixed
//! `θ` the inner minimizer is the projection `u(θ) = P_dom(xc − λ Σ θ_c g_c)`,
//! and `∂D/∂θ_c = c(u(θ))`.

use crate::linalg::{dist_sq, dot};
use crate::problem::{Cut, ProblemError, SimpleTerm};

/// Relative tolerance on the two-cut derivative surrogate.
pub const TWO_CUT_TOL: f64 = 1e-12;
/// Relative tolerance on the multi-cut primal-dual gap.
pub const MULTI_CUT_TOL: f64 = 1e-10;
pub const TWO_CUT_MAX_ITER: usize = 200;
pub const MULTI_CUT_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SubproblemSolution {
    pub x: Vec<f64>,
    /// Primal optimal value `Γ(x) + ‖x − xc‖²/(2λ)` evaluated at `x`.
    pub m: f64,
    /// Dual weights on the simplex, one per cut (`[θ, 1 − θ]` for two cuts).
    pub weights: Vec<f64>,
    /// Stationarity residual (two-cut) or primal-dual gap (multi-cut).
    pub residual: f64,
    pub converged: bool,
}

impl SubproblemSolution {
    /// The scalar `θ` of a two-cut solve (weight of the first cut).
    pub fn theta(&self) -> f64 {
        self.weights[0]
    }
}

fn prox_term(x: &[f64], xc: &[f64], lambda: f64) -> f64 {
    dist_sq(x, xc) / (2.0 * lambda)
}

/// `argmin_u cut(u) + h(u) + ‖u − xc‖²/(2λ)`, solved in closed form by clamping.
pub fn solve_affine(h: &SimpleTerm, cut: &Cut, xc: &[f64], lambda: f64) -> SubproblemSolution {
    assert!(lambda > 0.0, "stepsize must be positive");
    let x: Vec<f64> = xc.iter().zip(&cut.slope).enumerate().map(|(i, (c, g))| h.clamp(i, c - lambda * g)).collect();
    let m = cut.value(&x) + prox_term(&x, xc, lambda);
    SubproblemSolution { x, m, weights: vec![1.0], residual: 0.0, converged: true }
}

struct TwoCutDual<'a> {
    h: &'a SimpleTerm,
    c1: &'a Cut,
    c2: &'a Cut,
    xc: &'a [f64],
    lambda: f64,
}

impl TwoCutDual<'_> {
    fn point(&self, theta: f64) -> Vec<f64> {
        let g1 = &self.c1.slope;
        let g2 = &self.c2.slope;
        (0..self.xc.len())
            .map(|i| {
                let g = theta * g1[i] + (1.0 - theta) * g2[i];
                self.h.clamp(i, self.xc[i] - self.lambda * g)
            })
            .collect()
    }

    /// `(c1 − c2)(u(θ))` and the magnitude used to scale the tolerance.
    fn slope(&self, theta: f64) -> (f64, f64) {
        let g1 = &self.c1.slope;
        let g2 = &self.c2.slope;
        let (mut v1, mut v2) = (self.c1.intercept, self.c2.intercept);
        for i in 0..self.xc.len() {
            let g = theta * g1[i] + (1.0 - theta) * g2[i];
            let u = self.h.clamp(i, self.xc[i] - self.lambda * g);
            v1 += g1[i] * u;
            v2 += g2[i] * u;
        }
        (v1 - v2, 1.0 + v1.abs().max(v2.abs()))
    }
}

/// Two-cut subproblem via a safeguarded root search on the nonincreasing dual
/// derivative `g(θ) = c1(u(θ)) − c2(u(θ))` over `θ ∈ [0, 1]`.
///
/// Bisection guarantees the bracket halves at least every other step; the
/// interleaved false-position steps are exact whenever `g` is affine on the
/// bracket, which is the common case for zero and box terms.
pub fn solve_two_cut(h: &SimpleTerm, c1: &Cut, c2: &Cut, xc: &[f64], lambda: f64, tol: f64) -> SubproblemSolution {
    assert!(lambda > 0.0 && tol > 0.0);
    let dual = TwoCutDual { h, c1, c2, xc, lambda };

    let (g0, s0) = dual.slope(0.0);
    let (g1, s1) = dual.slope(1.0);
    let (theta, residual, converged) = if g0 <= 0.0 && g1 >= 0.0 {
        // g vanishes identically, e.g. coinciding cuts
        (0.5, 0.0, true)
    } else if g0 <= 0.0 {
        (0.0, 0.0, true)
    } else if g1 > 0.0 {
        (1.0, 0.0, true)
    } else if g0 <= tol * s0 {
        (0.0, g0.abs(), true)
    } else if g1 < 0.0 && -g1 <= tol * s1 {
        (1.0, g1.abs(), true)
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let (mut glo, mut ghi) = (g0, g1);
        let mut best = (0.5, f64::INFINITY);
        let mut converged = false;
        let mut use_secant = true;
        for _ in 0..TWO_CUT_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let mut cand = mid;
            if use_secant {
                let s = lo + glo * (hi - lo) / (glo - ghi);
                if s > lo && s < hi {
                    cand = s;
                }
            }
            let width = hi - lo;
            let (g, scale) = dual.slope(cand);
            if g.abs() < best.1 {
                best = (cand, g.abs());
            }
            if g.abs() <= tol * scale {
                converged = true;
                break;
            }
            if g > 0.0 {
                lo = cand;
                glo = g;
            } else {
                hi = cand;
                ghi = g;
            }
            // fall back to a plain bisection step if the bracket shrank by less than half
            use_secant = hi - lo <= 0.5 * width;
        }
        if !converged {
            // bracket collapsed to adjacent floats: g is as small as representable
            converged = hi - lo <= 4.0 * f64::EPSILON;
        }
        (best.0, best.1, converged)
    };

    let x = dual.point(theta);
    let m = c1.value(&x).max(c2.value(&x)) + prox_term(&x, xc, lambda);
    SubproblemSolution { x, m, weights: vec![theta, 1.0 - theta], residual, converged }
}

/// Euclidean projection onto the unit simplex (sort-and-threshold).
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty());
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - 1.0) / (i as f64 + 1.0);
        if s - t > 0.0 {
            threshold = t;
        }
    }
    v.iter().map(|&x| (x - threshold).max(0.0)).collect()
}

struct MultiCutDual<'a> {
    h: &'a SimpleTerm,
    cuts: &'a [Cut],
    xc: &'a [f64],
    lambda: f64,
}

struct DualEval {
    u: Vec<f64>,
    /// `c(u)` for each cut; also the dual gradient.
    values: Vec<f64>,
    dual: f64,
    primal: f64,
}

impl MultiCutDual<'_> {
    fn eval(&self, theta: &[f64]) -> DualEval {
        let n = self.xc.len();
        let mut agg = vec![0.0; n];
        for (&w, c) in theta.iter().zip(self.cuts) {
            if w != 0.0 {
                for (a, g) in agg.iter_mut().zip(&c.slope) {
                    *a += w * g;
                }
            }
        }
        let u: Vec<f64> = (0..n).map(|i| self.h.clamp(i, self.xc[i] - self.lambda * agg[i])).collect();
        let values: Vec<f64> = self.cuts.iter().map(|c| c.value(&u)).collect();
        let prox = prox_term(&u, self.xc, self.lambda);
        let dual = dot(theta, &values) + prox;
        let primal = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + prox;
        DualEval { u, values, dual, primal }
    }
}

/// Multi-cut subproblem by accelerated projected gradient ascent on the dual
/// over the simplex, with backtracking on the step and adaptive restart.
/// Returns `x = u(θ)` for the returned weights `θ`, so stationarity holds
/// exactly; stops once the gap between the two is below `tol·(1 + |primal|)`.
pub fn solve_multi_cut(h: &SimpleTerm, cuts: &[Cut], xc: &[f64], lambda: f64, tol: f64) -> SubproblemSolution {
    assert!(!cuts.is_empty(), "need at least one cut");
    assert!(lambda > 0.0 && tol > 0.0);
    if cuts.len() == 1 {
        return solve_affine(h, &cuts[0], xc, lambda);
    }
    let k = cuts.len();
    let dual = MultiCutDual { h, cuts, xc, lambda };

    let lip: f64 = lambda * cuts.iter().map(|c| dot(&c.slope, &c.slope)).sum::<f64>();
    if lip == 0.0 {
        // all slopes vanish: the dual is linear in θ
        let best = (0..k).max_by(|&a, &b| cuts[a].intercept.total_cmp(&cuts[b].intercept)).unwrap();
        let mut w = vec![0.0; k];
        w[best] = 1.0;
        let e = dual.eval(&w);
        return SubproblemSolution { x: e.u, m: e.primal, weights: w, residual: 0.0, converged: true };
    }

    // start at the cut that is largest at the centre
    let start = (0..k).max_by(|&a, &b| cuts[a].value(xc).total_cmp(&cuts[b].value(xc))).unwrap();
    let mut theta = vec![0.0; k];
    theta[start] = 1.0;
    let mut cur = dual.eval(&theta);
    // the iterate with the smallest gap between its own primal point u(θ) and θ
    let mut best = (cur.primal - cur.dual, theta.clone(), cur.u.clone(), cur.primal);

    let mut step = k as f64 / lip;
    let mut zeta = theta.clone();
    let mut zeta_eval = dual.eval(&zeta);
    let mut t_mom = 1.0f64;
    let mut converged = false;

    for _ in 0..MULTI_CUT_MAX_ITER {
        if best.0 <= tol * (1.0 + best.3.abs()) {
            converged = true;
            break;
        }
        // backtracking from the extrapolated point
        let (next, next_eval) = loop {
            let trial: Vec<f64> = zeta.iter().zip(&zeta_eval.values).map(|(z, g)| z + step * g).collect();
            let trial = simplex_project(&trial);
            let e = dual.eval(&trial);
            let diff: Vec<f64> = trial.iter().zip(&zeta).map(|(a, b)| a - b).collect();
            let model = zeta_eval.dual + dot(&zeta_eval.values, &diff) - dot(&diff, &diff) / (2.0 * step);
            if e.dual >= model - 1e-15 * (1.0 + model.abs()) || step < 1e-300 {
                break (trial, e);
            }
            step *= 0.5;
        };
        let gap = next_eval.primal - next_eval.dual;
        if gap < best.0 {
            best = (gap, next.clone(), next_eval.u.clone(), next_eval.primal);
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_mom * t_mom).sqrt());
        if next_eval.dual < cur.dual {
            // restart momentum when the ascent stalls
            t_mom = 1.0;
            zeta = next.clone();
            zeta_eval = dual.eval(&zeta);
        } else {
            let beta = (t_mom - 1.0) / t_next;
            zeta = next.iter().zip(&theta).map(|(a, b)| a + beta * (a - b)).collect();
            zeta = simplex_project(&zeta);
            zeta_eval = dual.eval(&zeta);
            t_mom = t_next;
        }
        theta = next;
        cur = next_eval;
        // let the step grow again so one bad backtrack does not stall progress
        step *= 1.25;
    }

    let (gap, weights, x, m) = best;
    SubproblemSolution { x, m, weights, residual: gap.max(0.0), converged }
}

/// `min_u cut(u) + h(u)` over a bounded `dom h`.
pub fn min_affine_plus_h(h: &SimpleTerm, cut: &Cut) -> Result<f64, ProblemError> {
    match h {
        SimpleTerm::Box { lower, upper } => Ok(cut.intercept
            + cut
                .slope
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&g, (&l, &u))| {
                    if g > 0.0 {
                        g * l
                    } else if g < 0.0 {
                        g * u
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()),
        _ => Err(ProblemError::UnboundedDomain),
    }
}
