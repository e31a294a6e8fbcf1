use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adgpb::bundle::BundleScheme;
use adgpb::driver::{SolverConfig, Variant};
use adgpb::harness::{self, ExperimentSpec, InstanceSpec, RunRecord};
use adgpb::instances::{Instance, InstanceKind};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "adgpb",
    version,
    about = "Adaptive proximal bundle methods: instances, runs, benchmarks, verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an ℓ₁ feasibility instance and print its constants.
    Gen(GenArgs),
    /// Solve one instance and write its record and trace.
    Run(RunArgs),
    /// Run a benchmark sweep described by a JSON experiment file.
    Bench(BenchArgs),
    /// Re-check a run's trace against the invariants and ceilings.
    Verify(VerifyArgs),
}

fn parse_kind(s: &str) -> Result<InstanceKind, String> {
    match s {
        "dense" => Ok(InstanceKind::Dense),
        "sparse" => Ok(InstanceKind::Sparse),
        _ => Err(format!("unknown instance kind '{s}' (dense|sparse)")),
    }
}

fn parse_scheme(s: &str) -> Result<BundleScheme, String> {
    match s {
        "two-cut" => Ok(BundleScheme::TwoCut),
        "multi-cut" => Ok(BundleScheme::MultiCut),
        _ => Err(format!("unknown bundle scheme '{s}' (two-cut|multi-cut)")),
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_kind, default_value = "dense")]
    kind: InstanceKind,
    #[arg(long, default_value_t = 200)]
    m: usize,
    #[arg(long, default_value_t = 600)]
    n: usize,
    #[arg(long, default_value_t = 1e-2)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Restrict the domain to the box [0, r]^n.
    #[arg(long)]
    box_radius: Option<f64>,
    #[arg(long, short)]
    out: PathBuf,
    /// Also export A in MatrixMarket format.
    #[arg(long)]
    mtx: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "ad-gpb-star")]
    solver: Variant,
    /// λ₁ = alpha·λ_pol(x₀).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-5)]
    eps_bar: f64,
    #[arg(long, default_value_t = 0.95)]
    tau: f64,
    #[arg(long, default_value_t = 0.5)]
    beta0: f64,
    #[arg(long, value_parser = parse_scheme, default_value = "two-cut")]
    scheme: BundleScheme,
    #[arg(long, default_value_t = 100)]
    max_bundle_size: usize,
    #[arg(long)]
    cold_start: bool,
    #[arg(long, default_value_t = 1_000_000)]
    max_iterations: u64,
    #[arg(long)]
    max_seconds: Option<f64>,
    #[arg(long, env = "ADGPB_RECORDS_DIR", default_value = "records")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Overrides the experiment file's output directory.
    #[arg(long, env = "ADGPB_RECORDS_DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Run record JSON written by `run`.
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    trace: PathBuf,
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let spec = InstanceSpec {
        kind: a.kind,
        m: a.m,
        n: a.n,
        density: a.density,
        seeds: vec![a.seed],
        box_radius: a.box_radius,
    };
    let inst = spec.generate(a.seed)?;
    inst.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(p) = &a.mtx {
        let mut w = io::BufWriter::new(fs::File::create(p)?);
        inst.write_matrix_market(&mut w)?;
        w.flush()?;
    }
    let c = inst.constants();
    println!("instance {} -> {}", inst.id(), a.out.display());
    println!("M = {:e}", c.m_const);
    println!("L = {}", c.l_const);
    println!("D = {}", c.diameter);
    println!("d0 = {:e}", c.d0);
    Ok(())
}

fn write_outputs(dir: &Path, outcome: &harness::CellOutcome) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let stem = format!("{}-{}-a{}", outcome.run.instance_id, outcome.run.config.variant, outcome.run.alpha);
    let mut w = io::BufWriter::new(fs::File::create(dir.join(format!("{stem}.trace.csv")))?);
    harness::write_trace(&mut w, &outcome.report.trace)?;
    w.flush()?;
    let run_path = dir.join(format!("{stem}.run.json"));
    fs::write(&run_path, serde_json::to_string_pretty(&outcome.run)?)?;
    Ok(run_path)
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let inst = Instance::load(&a.instance).with_context(|| format!("reading {}", a.instance.display()))?;
    let cfg = SolverConfig {
        variant: a.solver,
        tau: a.tau,
        beta0: a.beta0,
        scheme: a.scheme,
        max_bundle_size: a.max_bundle_size,
        warm_start: !a.cold_start,
        max_iterations: a.max_iterations,
        max_seconds: a.max_seconds,
        record_trace: true,
        ..SolverConfig::default()
    };
    let outcome = harness::run_cell(&inst, &cfg, a.alpha, a.eps_bar)?;
    let run_path = write_outputs(&a.out_dir, &outcome)?;
    println!("{}", harness::RECORD_HEADER);
    println!("{}", outcome.run.record.csv_row());
    println!("run record: {}", run_path.display());
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => ExperimentSpec::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentSpec::default(),
    };
    if a.out_dir.is_some() {
        spec.output_dir = a.out_dir;
    }
    let records = harness::bench(&spec)?;
    print!("{}", harness::render_table(&records));
    if let Some(dir) = &spec.output_dir {
        println!("records: {}", dir.join("records.csv").display());
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<bool> {
    let inst = Instance::load(&a.instance)?;
    let run: RunRecord = serde_json::from_str(&fs::read_to_string(&a.run)?)?;
    if run.instance_id != inst.id() {
        bail!("run record is for {}, instance file is {}", run.instance_id, inst.id());
    }
    let trace = harness::read_trace(BufReader::new(fs::File::open(&a.trace)?))?;
    let rep = harness::verify_run(&inst, &run, &trace)?;
    print!("{}", rep.render());
    Ok(rep.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a).map(|_| true),
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Bench(a) => cmd_bench(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
