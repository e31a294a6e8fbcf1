//! Experiment configuration, benchmark records, tables, trace files and
//! post-hoc verification of run traces against the complexity ceilings.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::BundleScheme;
use crate::driver::{
    self, DriverError, Event, RunObserver, RunReport, SolverConfig, TerminatedBy, TraceRecord, Variant,
};
use crate::instances::{self, Instance, InstanceConstants, InstanceError, InstanceKind};
use crate::problem::ProblemError;
use crate::proxsolver;
use crate::theory::{self, BoundInputs, TheoryError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed trace line {line}: {reason}")]
    Trace { line: usize, reason: String },
    #[error("invalid experiment: {0}")]
    Spec(String),
}

pub const RECORD_HEADER: &str = "instance_id,solver,alpha,eps_bar,iterations,cycles,serious,null,bad,seconds,rel_gap,terminated_by,bound_cycles,bound_iters,bounds_pass";
pub const TRACE_HEADER: &str = "j,k,lambda,t,phi_best,event";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    pub m: usize,
    pub n: usize,
    pub density: f64,
    pub seeds: Vec<u64>,
    pub box_radius: Option<f64>,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self { kind: InstanceKind::Dense, m: 200, n: 600, density: 1e-2, seeds: vec![1], box_radius: None }
    }
}

impl InstanceSpec {
    pub fn generate(&self, seed: u64) -> Result<Instance, InstanceError> {
        let inst = match self.kind {
            InstanceKind::Dense => instances::gen_dense(self.m, self.n, seed)?,
            InstanceKind::Sparse => instances::gen_sparse(self.m, self.n, self.density, seed)?,
        };
        match self.box_radius {
            Some(r) => inst.boxed_variant(r),
            None => Ok(inst),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub instance: InstanceSpec,
    /// Solver templates; `lambda1` and `epsilon` are set per cell.
    pub solvers: Vec<SolverConfig>,
    pub eps_bar: f64,
    /// `λ₁ = α·λ_pol(x₀)`.
    pub alphas: Vec<f64>,
    pub max_iterations: u64,
    pub max_seconds: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub write_traces: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            instance: InstanceSpec::default(),
            solvers: vec![SolverConfig::default()],
            eps_bar: 1e-5,
            alphas: vec![1.0],
            max_iterations: 1_000_000,
            max_seconds: None,
            output_dir: None,
            write_traces: false,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0)) {
            return Err(HarnessError::Spec("alphas must be a nonempty list of positive values".into()));
        }
        if self.solvers.is_empty() {
            return Err(HarnessError::Spec("at least one solver is required".into()));
        }
        if !(self.eps_bar > 0.0 && self.eps_bar < 1.0) {
            return Err(HarnessError::Spec("eps_bar must lie in (0, 1)".into()));
        }
        if self.instance.seeds.is_empty() {
            return Err(HarnessError::Spec("at least one seed is required".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance_id: String,
    pub solver: Variant,
    pub alpha: f64,
    pub eps_bar: f64,
    pub iterations: u64,
    pub cycles: u64,
    pub serious: u64,
    pub null: u64,
    pub bad: u64,
    pub seconds: f64,
    pub rel_gap: f64,
    pub terminated_by: TerminatedBy,
    pub bound_cycles: Option<u64>,
    pub bound_iters: Option<u64>,
    pub bounds_pass: Option<bool>,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{:.3},{:e},{},{},{},{}",
            self.instance_id,
            self.solver,
            self.alpha,
            self.eps_bar,
            self.iterations,
            self.cycles,
            self.serious,
            self.null,
            self.bad,
            self.seconds,
            self.rel_gap,
            self.terminated_by.name(),
            opt(&self.bound_cycles),
            opt(&self.bound_iters),
            opt(&self.bounds_pass),
        )
    }

    /// Iterations over seconds, e.g. `17.8K/26`; capped runs are `*/*`.
    pub fn table_cell(&self) -> String {
        format_cell(self.iterations, self.seconds, self.terminated_by != TerminatedBy::Tolerance)
    }
}

pub fn format_cell(iterations: u64, seconds: f64, capped: bool) -> String {
    if capped {
        return "*/*".to_string();
    }
    let iters = if iterations >= 1000 { format!("{:.1}K", iterations as f64 / 1000.0) } else { iterations.to_string() };
    format!("{iters}/{}", seconds.round() as u64)
}

pub fn write_records<W: Write>(w: &mut W, records: &[BenchRecord]) -> io::Result<()> {
    writeln!(w, "{RECORD_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// One line per instance, one column per `(solver, α)` pair.
pub fn render_table(records: &[BenchRecord]) -> String {
    let mut columns: Vec<(Variant, f64)> = Vec::new();
    let mut rows: Vec<String> = Vec::new();
    for r in records {
        if !columns.iter().any(|&(v, a)| v == r.solver && a == r.alpha) {
            columns.push((r.solver, r.alpha));
        }
        if !rows.contains(&r.instance_id) {
            rows.push(r.instance_id.clone());
        }
    }
    let mut out = String::new();
    let _ = write!(out, "{:<28}", "instance");
    for (v, a) in &columns {
        let _ = write!(out, " {:>22}", format!("{v}(α={a})"));
    }
    out.push('\n');
    for id in &rows {
        let _ = write!(out, "{id:<28}");
        for (v, a) in &columns {
            let cell = records
                .iter()
                .find(|r| &r.instance_id == id && r.solver == *v && r.alpha == *a)
                .map_or_else(|| "-".to_string(), BenchRecord::table_cell);
            let _ = write!(out, " {cell:>22}");
        }
        out.push('\n');
    }
    out
}

pub fn write_trace<W: Write>(w: &mut W, trace: &[TraceRecord]) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(w, "{},{},{},{},{},{}", r.j, r.k, r.lambda, r.t, r.phi_best, r.event.name())?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(r: R) -> Result<Vec<TraceRecord>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != TRACE_HEADER {
                return Err(HarnessError::Trace { line: 1, reason: "missing header".into() });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| HarnessError::Trace { line: i + 1, reason };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", f.len())));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|e| bad(e.to_string()));
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(e.to_string()));
        out.push(TraceRecord {
            j: int(f[0])?,
            k: int(f[1])?,
            lambda: real(f[2])?,
            t: real(f[3])?,
            phi_best: real(f[4])?,
            event: f[5].parse::<Event>().map_err(bad)?,
        });
    }
    Ok(out)
}

/// Complexity ceilings applicable to a finished run, if any.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ceilings {
    pub cycles: Option<u64>,
    pub iterations: Option<u64>,
}

/// The known-optimum ceilings for Ad-GPB* and the general ones for Ad-GPB on
/// a bounded domain; other variants have none.
pub fn ceilings(report: &RunReport, consts: &InstanceConstants) -> Result<Ceilings, HarnessError> {
    let t_start = report.cycle_log.iter().map(|c| c.t_start).fold(f64::NEG_INFINITY, f64::max);
    let inp = BoundInputs {
        epsilon: report.epsilon,
        tau: report.tau,
        beta0: report.beta0,
        lambda1: report.lambda1,
        m_const: consts.m_const,
        l_const: consts.l_const,
        diameter: consts.diameter,
        d0: consts.d0,
        t_start: t_start.is_finite().then_some(t_start.max(0.0)),
        phi_x0_minus_n0: report.ell_hat0.map(|l| report.phi_x0 - l),
    };
    Ok(match report.variant {
        Variant::AdGpbStar => {
            Ceilings { cycles: Some(theory::k_hat(&inp)?), iterations: Some(theory::total_iter_bound_known(&inp)?) }
        }
        Variant::AdGpb if consts.diameter.is_finite() => {
            Ceilings { cycles: Some(theory::k_bar(&inp)?), iterations: Some(theory::total_iter_bound_general(&inp)?) }
        }
        _ => Ceilings::default(),
    })
}

/// Everything persisted about one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance_id: String,
    pub config: SolverConfig,
    pub alpha: f64,
    pub eps_bar: f64,
    pub phi_star: f64,
    pub phi_x0: f64,
    pub constants: InstanceConstants,
    pub ceilings: Ceilings,
    pub record: BenchRecord,
    pub y_hat: Vec<f64>,
    pub x_hat: Vec<f64>,
}

pub struct CellOutcome {
    pub run: RunRecord,
    pub report: RunReport,
}

/// `λ_pol(x₀)` for an instance.
pub fn polyak_at_start(inst: &Instance) -> Result<f64, HarnessError> {
    let obj = inst.objective(true);
    let (phi0, fo) = obj.eval(&inst.x0)?;
    Ok(driver::polyak_stepsize(phi0, inst.phi_star, &fo.subgradient)?)
}

/// Runs one `(instance, solver, α)` cell with `λ₁ = α·λ_pol(x₀)` and
/// `ε = ε̄·(φ(x₀) − φ*)`.
pub fn run_cell(
    inst: &Instance,
    template: &SolverConfig,
    alpha: f64,
    eps_bar: f64,
) -> Result<CellOutcome, HarnessError> {
    run_cell_observed(inst, template, alpha, eps_bar, &mut NoObserver)
}

struct NoObserver;

impl RunObserver for NoObserver {}

/// [`run_cell`] with every bundle update reported to `observer`.
pub fn run_cell_observed(
    inst: &Instance,
    template: &SolverConfig,
    alpha: f64,
    eps_bar: f64,
    observer: &mut dyn RunObserver,
) -> Result<CellOutcome, HarnessError> {
    let known = template.variant != Variant::AdGpb;
    let obj = inst.objective(known);
    let phi0 = obj.eval_phi(&inst.x0)?;
    let lam_pol = polyak_at_start(inst)?;
    let mut config = template.clone();
    if lam_pol > 0.0 {
        config.lambda1 = alpha * lam_pol;
    }
    config.epsilon = driver::relative_epsilon(eps_bar, phi0, inst.phi_star);
    if !(config.epsilon > 0.0) {
        // started at an optimum; any positive tolerance stops immediately
        config.epsilon = f64::MIN_POSITIVE;
    }
    let report = driver::run_observed(&obj, &config, &inst.x0, observer)?;
    let consts = inst.constants();
    let ceil = ceilings(&report, &consts)?;
    let phi_y = inst.objective(true).eval_phi(&report.y_hat)?;
    let denom = phi0 - inst.phi_star;
    let rel_gap = if denom > 0.0 { (phi_y - inst.phi_star) / denom } else { 0.0 };
    let finished = report.terminated_by == TerminatedBy::Tolerance;
    let bounds_pass = match (ceil.cycles, ceil.iterations) {
        (Some(c), Some(i)) if finished => Some(report.cycles <= c && report.iterations <= i),
        _ => None,
    };
    let record = BenchRecord {
        instance_id: inst.id(),
        solver: config.variant,
        alpha,
        eps_bar,
        iterations: report.iterations,
        cycles: report.cycles,
        serious: report.serious,
        null: report.null,
        bad: report.bad,
        seconds: report.seconds,
        rel_gap,
        terminated_by: report.terminated_by,
        bound_cycles: ceil.cycles,
        bound_iters: ceil.iterations,
        bounds_pass,
    };
    let run = RunRecord {
        instance_id: inst.id(),
        config,
        alpha,
        eps_bar,
        phi_star: inst.phi_star,
        phi_x0: phi0,
        constants: consts,
        ceilings: ceil,
        record,
        y_hat: report.y_hat.clone(),
        x_hat: report.x_hat.clone(),
    };
    Ok(CellOutcome { run, report })
}

/// Runs the cross product of seeds × solvers × α. Output files go to
/// `spec.output_dir` when set.
pub fn bench(spec: &ExperimentSpec) -> Result<Vec<BenchRecord>, HarnessError> {
    spec.validate()?;
    let mut records = Vec::new();
    let out_dir = spec.output_dir.clone();
    if let Some(dir) = &out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("spec.resolved.json"), serde_json::to_string_pretty(spec)?)?;
    }
    for &seed in &spec.instance.seeds {
        let inst = spec.instance.generate(seed)?;
        for template in &spec.solvers {
            let mut cfg = template.clone();
            cfg.max_iterations = spec.max_iterations;
            cfg.max_seconds = spec.max_seconds;
            cfg.record_trace = spec.write_traces;
            for &alpha in &spec.alphas {
                let cell = run_cell(&inst, &cfg, alpha, spec.eps_bar)?;
                if let (Some(dir), true) = (&out_dir, spec.write_traces) {
                    let stem = format!("{}-{}-a{}", cell.run.instance_id, cfg.variant, alpha);
                    let mut w = io::BufWriter::new(fs::File::create(dir.join(format!("{stem}.trace.csv")))?);
                    write_trace(&mut w, &cell.report.trace)?;
                    w.flush()?;
                    fs::write(dir.join(format!("{stem}.run.json")), serde_json::to_string_pretty(&cell.run)?)?;
                }
                records.push(cell.run.record);
            }
        }
    }
    if let Some(dir) = &out_dir {
        let mut w = io::BufWriter::new(fs::File::create(dir.join("records.csv"))?);
        write_records(&mut w, &records)?;
        w.flush()?;
        fs::write(dir.join("table.txt"), render_table(&records))?;
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "detail")]
pub enum CheckStatus {
    Pass,
    Fail(String),
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| !matches!(c.status, CheckStatus::Fail(_)))
    }

    pub fn status(&self, name: &str) -> Option<&CheckStatus> {
        self.checks.iter().find(|c| c.name == name).map(|c| &c.status)
    }

    fn push(&mut self, name: &str, status: CheckStatus) {
        self.checks.push(CheckResult { name: name.to_string(), status });
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let line = match &c.status {
                CheckStatus::Pass => format!("PASS  {}", c.name),
                CheckStatus::Fail(d) => format!("FAIL  {}: {d}", c.name),
                CheckStatus::Skipped(d) => format!("SKIP  {}: {d}", c.name),
            };
            s.push_str(&line);
            s.push('\n');
        }
        s
    }
}

/// Inputs for checking one trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyInputs {
    pub variant: Variant,
    pub scheme: BundleScheme,
    pub tau: f64,
    pub epsilon: f64,
    pub lambda1: f64,
    pub constants: InstanceConstants,
    pub ceilings: Ceilings,
}

impl VerifyInputs {
    pub fn from_run(run: &RunRecord, lambda1: f64) -> Self {
        Self {
            variant: run.config.variant,
            scheme: run.config.scheme,
            tau: run.config.tau,
            epsilon: run.config.epsilon,
            lambda1,
            constants: run.constants,
            ceilings: run.ceilings,
        }
    }
}

struct CycleView<'a> {
    records: &'a [TraceRecord],
    complete: bool,
}

fn split_cycles(trace: &[TraceRecord]) -> Vec<CycleView<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < trace.len() {
        let k = trace[start].k;
        let mut end = start;
        while end < trace.len() && trace[end].k == k {
            end += 1;
        }
        let last = &trace[end - 1];
        out.push(CycleView {
            records: &trace[start..end],
            complete: matches!(last.event, Event::Serious | Event::Stop),
        });
        start = end;
    }
    out
}

/// Re-checks the per-iteration invariants of a bundle run from its trace.
pub fn verify_trace(trace: &[TraceRecord], inp: &VerifyInputs) -> VerifyReport {
    let mut rep = VerifyReport::default();
    let cycles = split_cycles(trace);
    let adaptive = inp.variant.is_adaptive();
    let lam_lower = theory::lambda_lower(inp.tau, inp.epsilon, inp.constants.m_const, inp.constants.l_const);
    let solver_tol = match inp.scheme {
        BundleScheme::TwoCut => proxsolver::TWO_CUT_TOL,
        BundleScheme::MultiCut => proxsolver::MULTI_CUT_TOL,
    };

    // bookkeeping
    let mut book = Vec::new();
    for (i, r) in trace.iter().enumerate() {
        if r.j != i as u64 + 1 {
            book.push(format!("iteration index {} at position {}", r.j, i + 1));
            break;
        }
    }
    rep.push("trace-bookkeeping", status_of(book));

    if inp.variant == Variant::PolSubgrad {
        for name in
            ["t-monotone", "lambda-floor", "bad-iteration-cap", "cycle-length", "t-start-bound", "bound-ceilings"]
        {
            rep.push(name, CheckStatus::Skipped("not a bundle method".into()));
        }
        rep.push("phi-best-monotone", phi_monotone(trace));
        return rep;
    }

    let mut fails = Vec::new();
    for c in &cycles {
        for w in c.records.windows(2) {
            let slack = 10.0 * solver_tol * w[0].t.abs().max(w[1].phi_best.abs()).max(1.0);
            if w[1].t > w[0].t + slack {
                fails.push(format!("j={}: t={} > t_prev={}", w[1].j, w[1].t, w[0].t));
            }
        }
    }
    rep.push("t-monotone", status_of(fails));

    if adaptive {
        let mut fails = Vec::new();
        for c in &cycles {
            let lam_start = c.records[0].lambda;
            let floor = 0.5 * lam_lower.min(lam_start);
            for r in c.records {
                if r.lambda < floor {
                    fails.push(format!("j={}: λ={} < {}", r.j, r.lambda, floor));
                }
            }
        }
        rep.push("lambda-floor", status_of(fails));
    } else {
        rep.push("lambda-floor", CheckStatus::Skipped("constant stepsize within cycles".into()));
    }

    if matches!(inp.variant, Variant::AdGpb | Variant::AdGpbStar) {
        let bad = trace.iter().filter(|r| r.event == Event::NullHalve).count() as u64;
        let cap = theory::bad_iter_bound(inp.lambda1, lam_lower);
        rep.push(
            "bad-iteration-cap",
            if bad <= cap { CheckStatus::Pass } else { CheckStatus::Fail(format!("{bad} bad iterations > {cap}")) },
        );
    } else {
        rep.push("bad-iteration-cap", CheckStatus::Skipped(format!("stepsize reseeding in {}", inp.variant)));
    }

    if adaptive {
        let mut fails = Vec::new();
        for c in cycles.iter().filter(|c| c.complete) {
            let s_k = c.records.iter().filter(|r| r.event == Event::NullHalve).count() as u64;
            let bound = theory::cycle_len_bound(c.records[0].t, inp.epsilon, inp.tau, s_k);
            if c.records.len() as u64 > bound {
                fails.push(format!("cycle {}: length {} > {}", c.records[0].k, c.records.len(), bound));
            }
        }
        rep.push("cycle-length", status_of(fails));
    } else {
        rep.push("cycle-length", CheckStatus::Skipped("cycle test is t ≤ ε/2".into()));
    }

    match theory::t_bar(inp.constants.m_const, inp.constants.l_const, inp.constants.diameter) {
        Ok(tb) => {
            let fails = cycles
                .iter()
                .filter(|c| c.records[0].t > tb * (1.0 + 1e-12))
                .map(|c| format!("cycle {}: t={} > t̄={}", c.records[0].k, c.records[0].t, tb))
                .collect();
            rep.push("t-start-bound", status_of(fails));
        }
        Err(_) => rep.push("t-start-bound", CheckStatus::Skipped("unbounded domain".into())),
    }

    let finished = trace.last().is_some_and(|r| r.event == Event::Stop);
    match (inp.ceilings.cycles, inp.ceilings.iterations) {
        (Some(cb), Some(ib)) if finished => {
            let n_cycles = cycles.len() as u64;
            let n_iters = trace.len() as u64;
            let mut fails = Vec::new();
            if n_cycles > cb {
                fails.push(format!("{n_cycles} cycles > {cb}"));
            }
            if n_iters > ib {
                fails.push(format!("{n_iters} iterations > {ib}"));
            }
            rep.push("bound-ceilings", status_of(fails));
        }
        (Some(_), Some(_)) => rep.push("bound-ceilings", CheckStatus::Skipped("run did not terminate".into())),
        _ => rep.push("bound-ceilings", CheckStatus::Skipped(format!("no ceiling for {}", inp.variant))),
    }

    rep.push("phi-best-monotone", phi_monotone(trace));
    rep
}

fn phi_monotone(trace: &[TraceRecord]) -> CheckStatus {
    let fails = trace
        .windows(2)
        .filter(|w| w[1].phi_best > w[0].phi_best)
        .map(|w| format!("j={}: φ(y) rose to {}", w[1].j, w[1].phi_best))
        .collect();
    status_of(fails)
}

fn status_of(fails: Vec<String>) -> CheckStatus {
    match fails.len() {
        0 => CheckStatus::Pass,
        1 => CheckStatus::Fail(fails[0].clone()),
        n => CheckStatus::Fail(format!("{} (and {} more)", fails[0], n - 1)),
    }
}

/// Verifies a persisted run: trace invariants plus the relative criterion
/// recomputed from the stored final iterate.
pub fn verify_run(inst: &Instance, run: &RunRecord, trace: &[TraceRecord]) -> Result<VerifyReport, HarnessError> {
    let lambda1 = trace.first().map_or(run.config.lambda1, |r| r.lambda);
    let lambda1 = if run.config.variant.is_polyak_seeded() || run.config.variant == Variant::PolSubgrad {
        lambda1
    } else {
        run.config.lambda1
    };
    let mut rep = verify_trace(trace, &VerifyInputs::from_run(run, lambda1));
    let count_ok = trace.len() as u64 == run.record.iterations;
    rep.push(
        "trace-length",
        if count_ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail(format!("{} trace lines vs {} iterations", trace.len(), run.record.iterations))
        },
    );
    if run.record.terminated_by == TerminatedBy::Tolerance {
        let phi_y = inst.objective(true).eval_phi(&run.y_hat)?;
        let ok = phi_y - run.phi_star <= run.eps_bar * (run.phi_x0 - run.phi_star);
        rep.push(
            "relative-criterion",
            if ok {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail(format!("φ(ŷ) − φ* = {}", phi_y - run.phi_star))
            },
        );
    } else {
        rep.push("relative-criterion", CheckStatus::Skipped("capped run".into()));
    }
    Ok(rep)
}
