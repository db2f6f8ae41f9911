//! `kprop` command-line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use kprop::io::{load_aux_graph, load_delta, load_graph, load_labels, save_graph, trace_to_string, write_atomic};
use kprop::*;

#[derive(Parser)]
#[command(name = "kprop", version, about = "Label inference on K-partite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run full inference and write a snapshot plus an iteration trace.
    Infer(InferArgs),
    /// Apply a delta to a snapshot with the incremental algorithm.
    Update(UpdateArgs),
    /// Score incremental update against full recompute for a delta.
    Decide(DecideArgs),
    /// Print accuracy, BER and the contingency matrix of a snapshot.
    Eval(EvalArgs),
    /// Generate a planted instance from a key=value spec file.
    Gen(GenArgs),
    /// Time inference iterations on planted graphs of growing edge count.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GraphArg {
    /// Graph prefix: reads PREFIX.vertices and PREFIX.edges.
    #[arg(long, value_name = "PREFIX")]
    graph: PathBuf,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Seed label file.
    #[arg(long)]
    labels: PathBuf,
    /// Keep only the top fraction of vertices by degree as seeds.
    #[arg(long)]
    seed_fraction: Option<f64>,
    /// Number of classes (default: largest label in the file plus one).
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long, default_value = "mult")]
    rule: UpdateRule,
    #[arg(long, default_value = "full")]
    b_mode: BMode,
    #[arg(long, default_value_t = 5.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Intra-type edges for the smoothness regularizer.
    #[arg(long)]
    aux_graph: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Snapshot output path.
    #[arg(long)]
    out: PathBuf,
    /// Trace output path (default: OUT.trace).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct IncrementalArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long)]
    delta: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 100)]
    max_rounds: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Refresh every propagation matrix once before re-solving rows.
    #[arg(long)]
    refresh_b: bool,
}

#[derive(Args)]
struct UpdateArgs {
    #[command(flatten)]
    inc: IncrementalArgs,
    /// Updated snapshot path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the updated graph as PREFIX.vertices / PREFIX.edges.
    #[arg(long, value_name = "PREFIX")]
    out_graph: Option<PathBuf>,
}

#[derive(Args)]
struct DecideArgs {
    #[command(flatten)]
    inc: IncrementalArgs,
    #[arg(long, default_value_t = 60.0)]
    us: f64,
    #[arg(long, default_value_t = 100.0)]
    ua: f64,
    #[arg(long, default_value_t = 200.0)]
    threshold: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long)]
    truth: PathBuf,
    /// Score seed vertices too.
    #[arg(long)]
    include_seeds: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Writes PREFIX.vertices, PREFIX.edges and PREFIX.labels.
    #[arg(long, value_name = "PREFIX")]
    out_prefix: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Vertices per type (three types).
    #[arg(long, default_value_t = 5000)]
    n_per_type: usize,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    /// Target edge counts.
    #[arg(long, value_delimiter = ',', default_value = "50000,100000,200000")]
    edges: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    iters: usize,
    /// Runs per size; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 11)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn read_graph(prefix: &Path) -> anyhow::Result<KPartiteGraph> {
    let (v, e) = (with_suffix(prefix, "vertices"), with_suffix(prefix, "edges"));
    load_graph(&v, &e).with_context(|| format!("loading graph {}", prefix.display()))
}

fn read_snapshot(path: &Path, graph: &KPartiteGraph) -> anyhow::Result<Snapshot> {
    let snap = Snapshot::load(path).with_context(|| format!("loading snapshot {}", path.display()))?;
    snap.labels.check_shape(graph).context("snapshot does not match the graph")?;
    Ok(snap)
}

fn infer(a: InferArgs) -> anyhow::Result<()> {
    let graph = read_graph(&a.graph.graph)?;
    let labels = load_labels(&graph, &a.labels, a.classes)?;
    let seeds = match a.seed_fraction {
        Some(f) => {
            let (seeds, skipped) = select_seeds(&graph, &labels, f)?;
            if skipped > 0 {
                log::warn!("{skipped} top-degree vertices have no label and were skipped");
            }
            seeds
        }
        None => labels,
    };
    let config = InferenceConfig {
        rule: a.rule,
        beta: a.beta,
        lambda: a.lambda,
        tol: a.tol,
        max_iter: a.max_iter,
        b_mode: a.b_mode,
        workers: a.workers,
        ..Default::default()
    };
    let aux = match &a.aux_graph {
        Some(p) => load_aux_graph(&graph, p)?,
        None => Vec::new(),
    };
    let out = run_inference(&graph, &seeds, &config, &aux)?;
    let snapshot = Snapshot {
        labels: out.labels,
        propagation: out.propagation,
        seeds,
        b_mode: a.b_mode,
        rule: a.rule,
        beta: a.beta,
    };
    snapshot.save(&a.out)?;
    let trace_path = a.trace.unwrap_or_else(|| with_suffix(&a.out, "trace"));
    write_atomic(&trace_path, &trace_to_string(&out.trace))?;
    let last = out.trace.objectives().last().copied().unwrap_or(f64::NAN);
    println!("ITERATIONS {}", out.trace.iterations);
    println!("STOP {}", out.trace.reason);
    println!("OBJECTIVE {}", kprop::io::fmt_decimal(last));
    Ok(())
}

fn incremental_config(a: &IncrementalArgs, snap: &Snapshot) -> IncrementalConfig {
    IncrementalConfig {
        theta: a.theta,
        max_rounds: a.max_rounds,
        tol: a.tol,
        refresh_b: a.refresh_b,
        inference: InferenceConfig { rule: snap.rule, beta: snap.beta, b_mode: snap.b_mode, ..Default::default() },
    }
}

fn update(a: UpdateArgs) -> anyhow::Result<()> {
    let graph = read_graph(&a.inc.graph.graph)?;
    let snap = read_snapshot(&a.inc.snapshot, &graph)?;
    let delta = load_delta(&a.inc.delta)?;
    let config = incremental_config(&a.inc, &snap);
    let upd = update_snapshot(&graph, &snap, &delta, &config)?;
    upd.snapshot(&snap).save(&a.out)?;
    if let Some(prefix) = &a.out_graph {
        let g = &upd.delta.graph;
        save_graph(g, &with_suffix(prefix, "vertices"), &with_suffix(prefix, "edges"))?;
    }
    let inc = &upd.incremental;
    println!("CHANGED {}", upd.delta.changed.len());
    println!("TOUCHED {}", inc.touched());
    println!("ROUNDS {}", inc.rounds.len());
    println!("CONVERGED {}", inc.converged);
    Ok(())
}

fn decide_cmd(a: DecideArgs) -> anyhow::Result<()> {
    let graph = read_graph(&a.inc.graph.graph)?;
    let snap = read_snapshot(&a.inc.snapshot, &graph)?;
    let delta = load_delta(&a.inc.delta)?;
    let config = incremental_config(&a.inc, &snap);
    let params = UtilityParams { u_s: a.us, u_a: a.ua, threshold: a.threshold };
    let (report, _) = decide(&graph, &snap, &delta, &config, &params)?;
    print!("{}", report.to_text());
    Ok(())
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let graph = read_graph(&a.graph.graph)?;
    let snap = read_snapshot(&a.snapshot, &graph)?;
    let truth = load_labels(&graph, &a.truth, Some(snap.labels.k()))?;
    let report = evaluate(&graph, &snap.labels, &truth, &snap.seeds, a.include_seeds)?;
    print!("{}", report.to_text());
    Ok(())
}

fn gen(a: GenArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&a.spec).with_context(|| format!("reading {}", a.spec.display()))?;
    let spec = PlantedSpec::parse(&text)?;
    let p = generate_planted(&spec)?;
    let prefix = &a.out_prefix;
    save_graph(&p.graph, &with_suffix(prefix, "vertices"), &with_suffix(prefix, "edges"))?;
    write_atomic(&with_suffix(prefix, "labels"), &kprop::io::labels_to_string(&p.graph, &p.truth))?;
    println!("VERTICES {}", p.graph.n());
    println!("EDGES {}", p.graph.m());
    Ok(())
}

fn bench(a: BenchArgs) -> anyhow::Result<()> {
    if a.edges.is_empty() || a.repeats == 0 {
        bail!(Error::InvalidConfig("bench needs at least one edge count and one repeat".into()));
    }
    let sizes = vec![a.n_per_type; 3];
    let n = (3 * a.n_per_type) as f64;
    let mut prev: Option<f64> = None;
    println!("edges\tms_per_iteration\tratio");
    for &target in &a.edges {
        let spec = PlantedSpec::new(sizes.clone(), a.classes, 2.0 * target as f64 / n, a.seed);
        let p = generate_planted(&spec)?;
        let (seeds, _) = select_seeds(&p.graph, &p.truth, 0.05)?;
        let config =
            InferenceConfig { tol: f64::MIN_POSITIVE, max_iter: a.iters, workers: a.workers, ..Default::default() };
        let start = Instant::now();
        let mut best = f64::INFINITY;
        for _ in 0..a.repeats {
            best = best.min(run_inference(&p.graph, &seeds, &config, &[])?.trace.mean_iteration_millis());
        }
        log::info!("{} edges timed in {:.2?}", p.graph.m(), start.elapsed());
        let ratio = prev.map(|q| format!("{:.3}", best / q)).unwrap_or_else(|| "-".into());
        println!("{}\t{best:.3}\t{ratio}", p.graph.m());
        prev = Some(best);
    }
    Ok(())
}

/// Exit status for a failure: 1 for bad parameters, 2 for bad data.
fn failure_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidConfig(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Infer(a) => infer(a),
        Command::Update(a) => update(a),
        Command::Decide(a) => decide_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Gen(a) => gen(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = String::new();
            for cause in e.chain().map(ToString::to_string) {
                if !msg.ends_with(&cause) {
                    msg += if msg.is_empty() { "" } else { ": " };
                    msg += &cause;
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(failure_code(&e))
        }
    }
}
