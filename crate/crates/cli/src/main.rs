use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use csca::config::KEYS;
use csca::imageio::{parse_manifest, save_disparity, DatasetEntry};
use csca::pipeline::BenchOutcome;
use csca::{run_benchmark, run_lambda_sweep, run_pipeline, Settings};

/// Cross-scale cost aggregation for stereo matching.
#[derive(Parser, Debug)]
#[command(name = "csca", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the pipeline on one stereo pair and print its report.
    Run(RunArgs),
    /// Run every manifest entry for each method and cross-scale setting.
    Bench(BenchArgs),
    /// Evaluate one method over a range of lambda values.
    SweepLambda(SweepArgs),
}

/// Options shared by every subcommand. Each one maps to a config key and
/// overrides the value from `--config`.
#[derive(Args, Debug, Default)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Matching cost: grad|census [default: grad].
    #[arg(long)]
    cost: Option<String>,
    /// Coarsest pyramid scale S [default: 4].
    #[arg(long)]
    scales: Option<String>,
    /// Inter-scale regularization lambda >= 0 [default: 0.3].
    #[arg(long)]
    lambda: Option<String>,
    /// Bad-pixel threshold [default: 1 for grad, 3 for census].
    #[arg(long)]
    threshold: Option<String>,
    /// Any other config key, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Aggregator: box|bf|gf|nl|st [default: nl].
    #[arg(long)]
    method: Option<String>,
    /// Fuse all scales (true) or use scale 0 only (false) [default: true].
    #[arg(long)]
    cross_scale: Option<String>,
    #[arg(long)]
    left: Option<String>,
    #[arg(long)]
    right: Option<String>,
    #[arg(long)]
    gt: Option<String>,
    #[arg(long)]
    mask: Option<String>,
    #[arg(long)]
    max_disparity: Option<String>,
    #[arg(long)]
    gt_scale: Option<String>,
    #[arg(long)]
    name: Option<String>,
    /// Write the disparity map to this PGM.
    #[arg(long)]
    out_disp: Option<String>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Comma-separated aggregators.
    #[arg(long, default_value = "box,nl,st,gf")]
    method: String,
    /// on, off or both.
    #[arg(long, default_value = "both")]
    cross_scale: String,
    /// Write each disparity map as <dir>/<name>_<method>.pgm.
    #[arg(long, value_name = "DIR")]
    out_disp: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Aggregator: box|bf|gf|nl|st.
    #[arg(long, default_value = "box")]
    method: String,
    /// Comma-separated lambda values.
    #[arg(long, default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
    lambdas: String,
}

fn settings(common: &Common, extra: &[(&str, &Option<String>)]) -> Result<Settings> {
    let mut s = match &common.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let mut flags = Settings::default();
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects key=value, got {kv:?}"))?;
        flags.set(k.trim(), v.trim())?;
    }
    let named = [
        ("cost", &common.cost),
        ("scales", &common.scales),
        ("lambda", &common.lambda),
        ("threshold", &common.threshold),
    ];
    for (k, v) in named.iter().chain(extra) {
        if let Some(v) = v {
            flags.set(k, v)?;
        }
    }
    s.merge(&flags);
    Ok(s)
}

fn manifest_entries(flag: &Option<PathBuf>, s: &Settings) -> Result<Vec<DatasetEntry>> {
    let path = flag
        .clone()
        .or_else(|| s.path("manifest"))
        .context("a manifest is required (--manifest or manifest = ...)")?;
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().map(PathBuf::from).unwrap_or_default();
    Ok(parse_manifest(&text, &base, &path)?)
}

fn report_failures(out: &BenchOutcome) -> ExitCode {
    for f in &out.failures {
        eprintln!("error: {} {}: {}", f.name, f.method, f.error);
    }
    if out.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let s = settings(
        &args.common,
        &[
            ("method", &args.method),
            ("cross_scale", &args.cross_scale),
            ("left", &args.left),
            ("right", &args.right),
            ("gt", &args.gt),
            ("mask", &args.mask),
            ("max_disparity", &args.max_disparity),
            ("gt_scale", &args.gt_scale),
            ("name", &args.name),
            ("out_disp", &args.out_disp),
        ],
    )?;
    let cfg = s.run_config()?;
    let (_, report) = run_pipeline(&cfg)?;
    println!("{}", report.to_json());
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let s = settings(&args.common, &[])?;
    let entries = manifest_entries(&args.manifest, &s)?;
    let flags = match args.cross_scale.as_str() {
        "on" | "true" => vec![true],
        "off" | "false" => vec![false],
        "both" => vec![false, true],
        other => bail!("--cross-scale expects on|off|both, got {other:?}"),
    };
    let mut methods = Vec::new();
    for name in args.method.split(',').map(str::trim).filter(|m| !m.is_empty()) {
        // pick up per-kernel keys from the config for each method
        let mut one = s.clone();
        one.set("method", name)?;
        methods.push(one.params()?.aggregator);
    }
    if methods.is_empty() {
        bail!("--method lists no aggregators");
    }
    let base = s.params()?;
    if let Some(dir) = &args.out_disp {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let scales: std::collections::HashMap<&str, f32> =
        entries.iter().map(|e| (e.name.as_str(), e.gt_scale)).collect();
    let mut write_errors = Vec::new();
    let out = run_benchmark(&entries, &methods, &flags, &base, |r, d| {
        println!("{}", r.to_json());
        if let Some(dir) = &args.out_disp {
            let path = dir.join(format!("{}_{}.pgm", r.name, r.method.replace('+', "")));
            if let Err(e) = save_disparity(d, scales[r.name.as_str()], &path) {
                write_errors.push(e);
            }
        }
    });
    if let Some(e) = write_errors.into_iter().next() {
        return Err(e.into());
    }
    for row in &out.summary {
        println!("{}", row.to_json());
    }
    Ok(report_failures(&out))
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let mut s = settings(&args.common, &[])?;
    s.set("method", &args.method)?;
    let entries = manifest_entries(&args.manifest, &s)?;
    let lambdas = args
        .lambdas
        .split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad lambda {v:?}")))
        .collect::<Result<Vec<_>>>()?;
    let base = s.params()?;
    let out = run_lambda_sweep(&entries, &base, &lambdas, |lambda, r| {
        let mut v = serde_json::to_value(r).expect("report serializes");
        v["lambda"] = lambda.into();
        println!("{v}");
    });
    for row in &out.summary {
        println!("{}", row.to_json());
    }
    Ok(report_failures(&out))
}

fn keys_help() -> String {
    let mut text = String::from("Config keys (file `key = value`, or --set key=value):\n");
    for (k, default, what) in KEYS {
        let d = if default.is_empty() { "required".to_string() } else { format!("default {default}") };
        text.push_str(&format!("  {k:<18} {what} ({d})\n"));
    }
    text.push_str("Flags override the config file.");
    text
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let help = keys_help();
    let cmd = Cli::command().mut_subcommands(|sc| sc.after_long_help(help.clone()));
    let cli = match Cli::from_arg_matches(&cmd.get_matches()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::SweepLambda(a) => sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
