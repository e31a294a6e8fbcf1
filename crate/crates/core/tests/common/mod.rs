#![allow(dead_code)]

use adgpb::bundle::BundleModel;
use adgpb::driver::{BundleStep, RunObserver};
use adgpb::instances::StreamSampler;
use adgpb::problem::{CompositeObjective, Cut, SimpleTerm};
use adgpb::theory::BoundInputs;

/// `max_c c(u) + ‖u − xc‖²/(2λ)` without `h` (u is assumed feasible).
pub fn prox_objective(cuts: &[Cut], xc: &[f64], lambda: f64, u: &[f64]) -> f64 {
    let cut = cuts.iter().map(|c| c.value(u)).fold(f64::NEG_INFINITY, f64::max);
    let d2: f64 = u.iter().zip(xc).map(|(a, b)| (a - b) * (a - b)).sum();
    cut + d2 / (2.0 * lambda)
}

/// Box `xc ± λ·max‖g‖` intersected with `dom h`; it contains the minimizer.
pub fn bounding_box(h: &SimpleTerm, cuts: &[Cut], xc: &[f64], lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let gmax = cuts.iter().map(|c| c.slope.iter().map(|g| g * g).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let radius = lambda * gmax + 1e-9;
    let lo = (0..xc.len()).map(|i| (xc[i] - radius).max(h.bounds(i).0)).collect();
    let hi = (0..xc.len()).map(|i| (xc[i] + radius).min(h.bounds(i).1)).collect();
    (lo, hi)
}

fn axis(lo: f64, hi: f64, spacing: f64) -> Vec<f64> {
    let steps = ((hi - lo) / spacing).ceil().max(1.0) as usize;
    (0..=steps).map(|i| (lo + spacing * i as f64).min(hi)).collect()
}

/// Exhaustive grid search at the given spacing over the bounding box (`n ≤ 2`).
pub fn grid_search(h: &SimpleTerm, cuts: &[Cut], xc: &[f64], lambda: f64, spacing: f64) -> f64 {
    let (lo, hi) = bounding_box(h, cuts, xc, lambda);
    let axes: Vec<Vec<f64>> = (0..xc.len()).map(|i| axis(lo[i], hi[i], spacing)).collect();
    let mut best = f64::INFINITY;
    match xc.len() {
        1 => {
            for &a in &axes[0] {
                best = best.min(prox_objective(cuts, xc, lambda, &[a]));
            }
        }
        2 => {
            let mut u = [0.0; 2];
            for &a in &axes[0] {
                u[0] = a;
                for &b in &axes[1] {
                    u[1] = b;
                    best = best.min(prox_objective(cuts, xc, lambda, &u));
                }
            }
        }
        n => panic!("grid search supports n ≤ 2, got {n}"),
    }
    best
}

/// Golden-section minimum of a convex function on `[lo, hi]`.
fn golden<F: FnMut(f64) -> f64>(lo: f64, hi: f64, mut f: F) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut best = f(a).min(f(b));
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 * (1.0 + a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        best = best.min(fc).min(fd);
    }
    best
}

/// Nested golden-section search over the bounding box. Partial minimization
/// of a jointly convex function is convex, so both levels are exact searches.
pub fn golden_search(h: &SimpleTerm, cuts: &[Cut], xc: &[f64], lambda: f64) -> f64 {
    let (lo, hi) = bounding_box(h, cuts, xc, lambda);
    match xc.len() {
        1 => golden(lo[0], hi[0], |a| prox_objective(cuts, xc, lambda, &[a])),
        2 => golden(lo[0], hi[0], |a| golden(lo[1], hi[1], |b| prox_objective(cuts, xc, lambda, &[a, b]))),
        n => panic!("golden search supports n ≤ 2, got {n}"),
    }
}

/// Brute-force optimal value: the better of a 1e−3 grid and a nested golden search.
pub fn grid_min(h: &SimpleTerm, cuts: &[Cut], xc: &[f64], lambda: f64) -> f64 {
    grid_search(h, cuts, xc, lambda, 1e-3).min(golden_search(h, cuts, xc, lambda))
}

pub struct RandomSubproblem {
    pub h: SimpleTerm,
    pub cuts: Vec<Cut>,
    pub xc: Vec<f64>,
    pub lambda: f64,
}

/// A random prox subproblem with `n ∈ {1, 2}` and `num_cuts` cuts.
pub fn random_subproblem(s: &mut StreamSampler, num_cuts: usize) -> RandomSubproblem {
    let n = 1 + s.below(2) as usize;
    let h = match s.below(3) {
        0 => SimpleTerm::Zero { dim: n },
        1 => SimpleTerm::NonnegOrthant { dim: n },
        _ => {
            let lower: Vec<f64> = (0..n).map(|_| -1.0 + s.uniform()).collect();
            let upper: Vec<f64> = lower.iter().map(|l| l + 0.1 + 1.5 * s.uniform()).collect();
            SimpleTerm::boxed(lower, upper).unwrap()
        }
    };
    let cuts = (0..num_cuts)
        .map(|_| Cut::new((0..n).map(|_| 2.0 * s.uniform() - 1.0).collect(), 2.0 * s.uniform() - 1.0))
        .collect();
    let mut xc: Vec<f64> = (0..n).map(|_| 2.0 * s.uniform() - 1.0).collect();
    h.project(&mut xc);
    let lambda = 0.05 + 0.5 * s.uniform();
    RandomSubproblem { h, cuts, xc, lambda }
}

/// Rounding scale of evaluating `c(u)`.
pub fn magnitude(c: &Cut, u: &[f64]) -> f64 {
    c.intercept.abs() + c.slope.iter().zip(u).map(|(g, x)| (g * x).abs()).sum::<f64>()
}

fn model_magnitude(cuts: &[&Cut], u: &[f64]) -> f64 {
    cuts.iter().map(|c| magnitude(c, u)).fold(0.0, f64::max)
}

/// Random point of `dom h` near `x`, mixing local and far perturbations.
pub fn sample_point(s: &mut StreamSampler, h: &SimpleTerm, x: &[f64], i: usize) -> Vec<f64> {
    let scale = [1e-3, 1e-1, 1.0, 10.0][i % 4];
    let mut u: Vec<f64> = x.iter().map(|v| v + scale * s.normal()).collect();
    h.project(&mut u);
    u
}

/// Samples the bundle-update contracts at a subset of iterations:
/// `Γ_j ≤ φ`, `Γ⁺ ≥ max{Γ̄, ℓ_φ(·; x_j)}` and `Γ̄(x_j) = Γ_j(x_j)`.
pub struct BundleAuditor<'a> {
    pub obj: &'a CompositeObjective,
    pub samples: usize,
    pub stride: u64,
    pub rel_slack: f64,
    pub sampler: StreamSampler,
    pub audited: u64,
    pub point_checks: u64,
    pub failures: Vec<String>,
}

impl<'a> BundleAuditor<'a> {
    pub fn new(obj: &'a CompositeObjective, stride: u64, seed: u64) -> Self {
        Self {
            obj,
            samples: 100,
            stride,
            rel_slack: 1e-9,
            sampler: StreamSampler::new(seed, 77),
            audited: 0,
            point_checks: 0,
            failures: Vec::new(),
        }
    }

    fn fail(&mut self, msg: String) {
        if self.failures.len() < 20 {
            self.failures.push(msg);
        }
    }
}

fn cut_refs(m: &BundleModel) -> Vec<&Cut> {
    m.cuts()
}

impl RunObserver for BundleAuditor<'_> {
    fn bundle_step(&mut self, step: &BundleStep<'_>) {
        if step.j > 20 && !step.j.is_multiple_of(self.stride) {
            return;
        }
        self.audited += 1;
        let x = &step.solution.x;
        let before = cut_refs(step.model);
        let after = cut_refs(step.next_model);
        let bar: Vec<&Cut> = step.bar.iter().collect();
        let max_of = |cs: &[&Cut], u: &[f64]| cs.iter().map(|c| c.value(u)).fold(f64::NEG_INFINITY, f64::max);

        let gx = max_of(&before, x);
        let gbx = max_of(&bar, x);
        let scale = 1.0 + model_magnitude(&before, x).max(model_magnitude(&bar, x));
        if (gx - gbx).abs() > self.rel_slack * scale {
            self.fail(format!("j={}: Γ̄(x)={gbx} vs Γ(x)={gx}", step.j));
        }
        let h = self.obj.h.clone();
        for i in 0..self.samples {
            let u = sample_point(&mut self.sampler, &h, x, i);
            let phi = self.obj.eval_phi(&u).expect("sample inside dom h");
            let g = max_of(&before, &u);
            let gp = max_of(&after, &u);
            let lower = max_of(&bar, &u).max(step.new_cut.value(&u));
            let mag = 1.0
                + model_magnitude(&before, &u)
                    .max(model_magnitude(&after, &u))
                    .max(model_magnitude(&bar, &u))
                    .max(magnitude(step.new_cut, &u))
                    .max(phi.abs());
            if g > phi + self.rel_slack * mag {
                self.fail(format!("j={}: Γ(u)={g} > φ(u)={phi}", step.j));
            }
            if gp < lower - self.rel_slack * mag {
                self.fail(format!("j={}: Γ⁺(u)={gp} < max(Γ̄, ℓ)={lower}", step.j));
            }
            self.point_checks += 1;
        }
    }
}

/// Bounds re-derived in expanded form, independent of the library's grouping.
pub struct ExpandedBounds {
    pub k_hat: f64,
    pub total_known: f64,
    pub k_bar_inner: f64,
    pub total_general_wo_kbar: (f64, f64),
}

pub fn expanded(inp: &BoundInputs) -> ExpandedBounds {
    let (eps, tau, m, l, lam) = (inp.epsilon, inp.tau, inp.m_const, inp.l_const, inp.lambda1);
    let q = 128.0 * (1.0 - tau) / tau;
    let k_hat = 2.0 * inp.d0.powi(2) * q * m * m / (eps * eps)
        + inp.d0.powi(2) * q * l / (8.0 * eps)
        + 2.0 * inp.d0.powi(2) / (eps * lam);
    let t = if inp.diameter.is_finite() {
        2.0 * m * inp.diameter + l * inp.diameter.powi(2) / 2.0
    } else {
        inp.t_start.expect("measured cycle-start gap when D is infinite")
    };
    let ln_pos = |x: f64| if x > 1.0 { x.ln() } else { 0.0 };
    let factor = ln_pos(8.0 * t / eps) * (1.0 + tau) / (1.0 - tau) + 2.0;
    let head = ln_pos(q * lam * (m * m / eps + l / 16.0)) / std::f64::consts::LN_2;
    let gap = inp.phi_x0_minus_n0.unwrap_or(0.0);
    let k_bar_inner = 2.0 * inp.diameter.powi(2) * q * (m * m / eps + l / 16.0) / eps
        + 2.0 * inp.diameter.powi(2) / (eps * lam)
        + ln_pos(inp.beta0 * gap / eps)
        + 1.0;
    ExpandedBounds {
        k_hat,
        total_known: head + factor * k_hat.ceil(),
        k_bar_inner,
        total_general_wo_kbar: (4.0 * factor, head),
    }
}
