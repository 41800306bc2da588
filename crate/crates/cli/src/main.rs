//! Command-line front end: certify label streams, run the simulation
//! harness, produce bootstrap reports from recorded answer pools, and dump
//! step traces.
//!
//! Exit status: 0 = certified (or command succeeded), 1 = input exhausted
//! without certification, 2 = usage or input error.

mod manifest;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use modecert::certifier::{CertifierConfig, CiteCertifier, TopKCertifier, Verdict};
use modecert::config::FileConfig;
use modecert::grid::GridSpec;
use modecert::ingest::{load_pool, pool_report};
use modecert::label::LabelSpace;
use modecert::report;
use modecert::sim::{
    bottleneck_sweep, build_setting, run_trials, Method, RunConfig, SettingSpec, SweepVariable,
    TrialCase,
};
use modecert::trace::{verdict_str, TraceRecord};
use modecert::weighted::{EvalMode, WCiteCertifier, WeightedObservation};
use modecert::BudgetSplit;

use manifest::{IngestParams, ManifestCommand, RunManifest, SimulateParams, SweepParams};

#[derive(Parser)]
#[command(
    name = "modecert",
    version,
    about = "Anytime-valid unique-mode certification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a target label on a stream of labels (one per line).
    Certify(CertifyArgs),
    /// Run Monte-Carlo trials on one of the study settings.
    Simulate(SimulateArgs),
    /// Run bootstrap trials on a recorded answer pool.
    Ingest(IngestArgs),
    /// Sweep the component first-crossing times over p_r or the gap.
    Sweep(SweepArgs),
    /// Re-execute a previous run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Args)]
struct CertifyArgs {
    /// Target label to certify as the unique mode.
    #[arg(long)]
    target: Option<String>,
    /// Certification level (default 0.05 unless a config file sets it).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Certifier: cite, wcite (lines carry "label weight"), or topk.
    #[arg(long, default_value = "cite")]
    mode: String,
    /// Comma-separated target set for topk mode.
    #[arg(long)]
    targets: Option<String>,
    /// Geometric pairwise grid parameter.
    #[arg(long)]
    grid_delta0: Option<f64>,
    /// Configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input stream path, or "-" for standard input.
    #[arg(long, default_value = "-")]
    input: String,
    /// Write a per-step JSONL trace to this path.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Study setting id (1..=5).
    #[arg(long)]
    setting: u8,
    /// Comma-separated methods: cite, wcite, bonferroni, mmc.
    #[arg(long, default_value = "cite")]
    methods: String,
    /// Case A (target = mode) or B (target = runner-up).
    #[arg(long, default_value = "A")]
    case: String,
    /// Comma-separated sample budgets.
    #[arg(long, default_value = "64,128,256,512,1024,2048")]
    budgets: String,
    #[arg(long, default_value_t = 500)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    grid_delta0: Option<f64>,
    /// Rank-decay of the weight model attached to wcite runs.
    #[arg(long, default_value_t = 0.0)]
    weight_gamma: f64,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (defaults to $MODECERT_OUT or ".").
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// Answer-pool file (line-delimited JSON records).
    #[arg(long)]
    pool: PathBuf,
    #[arg(long, default_value = "cite")]
    methods: String,
    #[arg(long, default_value = "A")]
    case: String,
    #[arg(long, default_value = "64,128,256,512,1024")]
    budgets: String,
    #[arg(long, default_value_t = 500)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    grid_delta0: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    weight_gamma: f64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Variable to sweep: "pr" or "delta".
    #[arg(long)]
    vary: String,
    /// Comma-separated grid values.
    #[arg(long)]
    values: String,
    /// The fixed counterpart (gap for a pr sweep, p_r for a delta sweep).
    #[arg(long)]
    fixed: f64,
    #[arg(long, default_value_t = 400)]
    reps: u32,
    #[arg(long, default_value_t = 4000)]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RerunArgs {
    /// Manifest written by a previous simulate/ingest/sweep run.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Certify(args) => cmd_certify(&args),
        Command::Simulate(args) => {
            let params = simulate_params(&args)?;
            cmd_simulate(&params, &out_dir(args.out.clone()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Ingest(args) => {
            let params = ingest_params(&args)?;
            cmd_ingest(&params, &out_dir(args.out.clone()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(args) => {
            let params = sweep_params(&args)?;
            cmd_sweep(&params, &out_dir(args.out.clone()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Rerun(args) => {
            let manifest = RunManifest::load(&args.manifest)?;
            let out = args.out.unwrap_or_else(|| {
                args.manifest
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            match manifest.command {
                ManifestCommand::Simulate(p) => cmd_simulate(&p, &out)?,
                ManifestCommand::Ingest(p) => cmd_ingest(&p, &out)?,
                ManifestCommand::Sweep(p) => cmd_sweep(&p, &out)?,
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("MODECERT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Resolves epsilon/grid flags against an optional config file; explicit
/// flags win (an --epsilon override replaces the budget with the equal
/// split at that level).
fn resolve_certifier(
    config_path: Option<&PathBuf>,
    epsilon: Option<f64>,
    grid_delta0: Option<f64>,
) -> Result<CertifierConfig> {
    let mut cfg = match config_path {
        Some(p) => FileConfig::load(p)?.resolve()?,
        None => CertifierConfig::default_at(epsilon.unwrap_or(0.05))?,
    };
    if config_path.is_some() {
        if let Some(eps) = epsilon {
            cfg.budget = BudgetSplit::equal_split(eps)?;
        }
    }
    if let Some(d0) = grid_delta0 {
        cfg.pairwise_grid = GridSpec::geometric_pairwise(d0)?;
    }
    Ok(cfg)
}

fn parse_budgets(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|x| x.trim().parse::<u64>().context("budgets must be integers"))
        .collect()
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',')
        .map(|m| Method::parse(m.trim()).map_err(Into::into))
        .collect()
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct DecisionRecord {
    certified: bool,
    tau: Option<u64>,
    t_seen: u64,
    lcb: Option<f64>,
    unseen: Option<f64>,
    pw_log_e: Option<f64>,
    target: String,
    mode: String,
}

fn read_lines(input: &str) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    if input == "-" {
        for line in std::io::stdin().lock().lines() {
            lines.push(line?);
        }
    } else {
        for line in std::io::BufReader::new(
            std::fs::File::open(input).with_context(|| format!("open {input}"))?,
        )
        .lines()
        {
            lines.push(line?);
        }
    }
    Ok(lines)
}

fn cmd_certify(args: &CertifyArgs) -> Result<ExitCode> {
    let config = resolve_certifier(args.config.as_ref(), args.epsilon, args.grid_delta0)?;
    let lines = read_lines(&args.input)?;
    let mut trace_out: Option<Box<dyn Write>> = match &args.trace {
        Some(p) => Some(Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("create {}", p.display()))?,
        ))),
        None => None,
    };
    let mut space = LabelSpace::new();

    let record = match args.mode.as_str() {
        "cite" => {
            let target_name = args
                .target
                .clone()
                .context("--target is required for cite mode")?;
            let target = space.intern(&target_name);
            let mut c = CiteCertifier::new(target, config);
            for (i, line) in lines.iter().enumerate() {
                if line.is_empty() {
                    bail!("line {}: empty label", i + 1);
                }
                let label = space.intern(line);
                let v = c.step(label);
                if let Some(out) = trace_out.as_mut() {
                    let snap = c.snapshot().unwrap();
                    TraceRecord {
                        t: snap.t,
                        label: line.clone(),
                        weight: None,
                        pw_log_e: Some(snap.pw_log_e),
                        pw_vacuous: Some(snap.pw_vacuous),
                        lcb: Some(snap.lcb),
                        unseen: Some(snap.unseen),
                        tuple: None,
                        verdict: verdict_str(v.certified_at()),
                    }
                    .write_line(out)?;
                }
                if v != Verdict::Continue {
                    break;
                }
            }
            DecisionRecord {
                certified: c.verdict().certified_at().is_some(),
                tau: c.verdict().certified_at(),
                t_seen: c.t(),
                lcb: c.snapshot().map(|s| s.lcb),
                unseen: c.snapshot().map(|s| s.unseen),
                pw_log_e: c.snapshot().map(|s| s.pw_log_e),
                target: target_name,
                mode: "cite".into(),
            }
        }
        "wcite" => {
            let target_name = args
                .target
                .clone()
                .context("--target is required for wcite mode")?;
            let target = space.intern(&target_name);
            let mut c = WCiteCertifier::with_mode(target, config, EvalMode::Full);
            for (i, line) in lines.iter().enumerate() {
                let (label_str, weight) = split_weighted_line(line)
                    .with_context(|| format!("line {}: expected \"label weight\"", i + 1))?;
                let label = space.intern(label_str);
                let v = c
                    .step(WeightedObservation { label, weight })
                    .with_context(|| format!("line {}", i + 1))?;
                if let Some(out) = trace_out.as_mut() {
                    let snap = c.snapshot().unwrap();
                    TraceRecord {
                        t: snap.t,
                        label: label_str.to_owned(),
                        weight: Some(weight),
                        pw_log_e: Some(snap.pw_log_e),
                        pw_vacuous: Some(snap.pw_vacuous),
                        lcb: Some(snap.lcb),
                        unseen: Some(snap.unseen),
                        tuple: None,
                        verdict: verdict_str(v.certified_at()),
                    }
                    .write_line(out)?;
                }
                if v != Verdict::Continue {
                    break;
                }
            }
            DecisionRecord {
                certified: c.verdict().certified_at().is_some(),
                tau: c.verdict().certified_at(),
                t_seen: c.t(),
                lcb: c.snapshot().map(|s| s.lcb),
                unseen: c.snapshot().map(|s| s.unseen),
                pw_log_e: c.snapshot().map(|s| s.pw_log_e),
                target: target_name,
                mode: "wcite".into(),
            }
        }
        "topk" => {
            let set = args
                .targets
                .clone()
                .context("--targets is required for topk mode")?;
            let names: Vec<String> = set.split(',').map(|s| s.trim().to_owned()).collect();
            let targets = names.iter().map(|n| space.intern(n)).collect::<Vec<_>>();
            let mut c = TopKCertifier::new(targets, config)?;
            for (i, line) in lines.iter().enumerate() {
                if line.is_empty() {
                    bail!("line {}: empty label", i + 1);
                }
                let label = space.intern(line);
                let v = c.step(label);
                if let Some(out) = trace_out.as_mut() {
                    let snap = c.snapshot().unwrap();
                    TraceRecord {
                        t: snap.t,
                        label: line.clone(),
                        weight: None,
                        pw_log_e: Some(snap.pw_log_e),
                        pw_vacuous: Some(snap.pw_vacuous),
                        lcb: Some(snap.lcb),
                        unseen: Some(snap.unseen),
                        tuple: None,
                        verdict: verdict_str(v.certified_at()),
                    }
                    .write_line(out)?;
                }
                if v != Verdict::Continue {
                    break;
                }
            }
            let t_seen = c.snapshot().map_or(0, |s| s.t);
            DecisionRecord {
                certified: c.verdict().certified_at().is_some(),
                tau: c.verdict().certified_at(),
                t_seen,
                lcb: c.snapshot().map(|s| s.lcb),
                unseen: c.snapshot().map(|s| s.unseen),
                pw_log_e: c.snapshot().map(|s| s.pw_log_e),
                target: set,
                mode: "topk".into(),
            }
        }
        other => bail!("unknown mode {other:?} (expected cite, wcite, or topk)"),
    };

    if let Some(mut out) = trace_out {
        out.flush()?;
    }
    println!("{}", serde_json::to_string(&record)?);
    Ok(if record.certified {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Splits "label weight"; the weight is the final whitespace-separated
/// token so labels may contain internal spaces.
fn split_weighted_line(line: &str) -> Result<(&str, f64)> {
    let (label, weight) = line
        .rsplit_once(char::is_whitespace)
        .context("missing weight column")?;
    let label = label.trim_end();
    if label.is_empty() {
        bail!("empty label");
    }
    Ok((label, weight.parse::<f64>().context("unparsable weight")?))
}

// ---------------------------------------------------------------------------
// simulate / ingest / sweep
// ---------------------------------------------------------------------------

fn simulate_params(args: &SimulateArgs) -> Result<SimulateParams> {
    Ok(SimulateParams {
        setting: args.setting,
        methods: args
            .methods
            .split(',')
            .map(|s| s.trim().to_owned())
            .collect(),
        case: args.case.clone(),
        budgets: parse_budgets(&args.budgets)?,
        reps: args.reps,
        seed: args.seed,
        weight_gamma: args.weight_gamma,
        certifier: resolve_certifier(args.config.as_ref(), args.epsilon, args.grid_delta0)?,
    })
}

fn cmd_simulate(params: &SimulateParams, out: &Path) -> Result<()> {
    let started = std::time::Instant::now();
    let methods = parse_methods(&params.methods.join(","))?;
    let case = TrialCase::parse(&params.case)?;
    let spec = SettingSpec::preset(params.setting)?;
    let dist = build_setting(&spec)?;
    let cfg = RunConfig {
        budgets: params.budgets.clone(),
        reps: params.reps,
        seed: params.seed,
        certifier: params.certifier.clone(),
        weight_gamma: params.weight_gamma,
    };
    let mut rows = Vec::new();
    for method in methods {
        rows.extend(run_trials(&dist, &spec.name, method, case, &cfg)?);
    }
    std::fs::create_dir_all(out)?;
    let csv_path = out.join("reports.csv");
    let json_path = out.join("reports.json");
    report::write_csv(&csv_path, &rows)?;
    report::write_json(&json_path, &rows)?;
    RunManifest::new(
        ManifestCommand::Simulate(params.clone()),
        params.seed,
        vec![path_str(&csv_path), path_str(&json_path)],
        started.elapsed(),
    )
    .write(&out.join("manifest.json"))?;
    eprintln!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn ingest_params(args: &IngestArgs) -> Result<IngestParams> {
    Ok(IngestParams {
        pool: args.pool.display().to_string(),
        methods: args
            .methods
            .split(',')
            .map(|s| s.trim().to_owned())
            .collect(),
        case: args.case.clone(),
        budgets: parse_budgets(&args.budgets)?,
        reps: args.reps,
        seed: args.seed,
        weight_gamma: args.weight_gamma,
        certifier: resolve_certifier(args.config.as_ref(), args.epsilon, args.grid_delta0)?,
    })
}

#[derive(Serialize)]
struct IngestOutput<'a> {
    pool: PoolHeader<'a>,
    rows: &'a [modecert::report::TrialReport],
}

#[derive(Serialize)]
struct PoolHeader<'a> {
    problem_id: &'a str,
    case: &'a str,
    target: &'a str,
    mode_tie: bool,
}

fn cmd_ingest(params: &IngestParams, out: &Path) -> Result<()> {
    let started = std::time::Instant::now();
    let methods = parse_methods(&params.methods.join(","))?;
    let case = TrialCase::parse(&params.case)?;
    let pool = load_pool(Path::new(&params.pool))?;
    let cfg = RunConfig {
        budgets: params.budgets.clone(),
        reps: params.reps,
        seed: params.seed,
        certifier: params.certifier.clone(),
        weight_gamma: params.weight_gamma,
    };
    let report_out = pool_report(&pool, &methods, case, &cfg)?;
    if report_out.mode_tie {
        eprintln!(
            "warning: pool mode is tied; resolved to first-seen answer {:?}",
            report_out.target
        );
    }
    std::fs::create_dir_all(out)?;
    let csv_path = out.join("reports.csv");
    let json_path = out.join("reports.json");
    report::write_csv(&csv_path, &report_out.rows)?;
    let json = serde_json::to_string_pretty(&IngestOutput {
        pool: PoolHeader {
            problem_id: &report_out.problem_id,
            case: &report_out.case,
            target: &report_out.target,
            mode_tie: report_out.mode_tie,
        },
        rows: &report_out.rows,
    })?;
    std::fs::write(&json_path, json)?;
    RunManifest::new(
        ManifestCommand::Ingest(params.clone()),
        params.seed,
        vec![path_str(&csv_path), path_str(&json_path)],
        started.elapsed(),
    )
    .write(&out.join("manifest.json"))?;
    eprintln!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn sweep_params(args: &SweepArgs) -> Result<SweepParams> {
    let values = args
        .values
        .split(',')
        .map(|x| x.trim().parse::<f64>().context("values must be floats"))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepParams {
        vary: args.vary.clone(),
        values,
        fixed: args.fixed,
        reps: args.reps,
        horizon: args.horizon,
        seed: args.seed,
        certifier: resolve_certifier(args.config.as_ref(), args.epsilon, None)?,
    })
}

fn cmd_sweep(params: &SweepParams, out: &Path) -> Result<()> {
    let started = std::time::Instant::now();
    let variable = match params.vary.as_str() {
        "pr" | "p_r" => SweepVariable::TargetMass,
        "delta" => SweepVariable::Gap,
        other => bail!("--vary must be pr or delta, got {other:?}"),
    };
    let rows = bottleneck_sweep(
        variable,
        &params.values,
        params.fixed,
        params.reps,
        params.horizon,
        params.seed,
        &params.certifier,
    )?;
    std::fs::create_dir_all(out)?;
    let csv_path = out.join("sweep.csv");
    let mut csv = String::from("p_r,delta,reps,horizon,tau_pw_mean,tau_lu_mean\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.p_r,
            r.delta,
            r.reps,
            r.horizon,
            r.tau_pw_mean.map_or(String::new(), |x| format!("{x:.4}")),
            r.tau_lu_mean.map_or(String::new(), |x| format!("{x:.4}")),
        ));
    }
    std::fs::write(&csv_path, csv)?;
    RunManifest::new(
        ManifestCommand::Sweep(params.clone()),
        params.seed,
        vec![path_str(&csv_path)],
        started.elapsed(),
    )
    .write(&out.join("manifest.json"))?;
    eprintln!("wrote {}", csv_path.display());
    Ok(())
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}
