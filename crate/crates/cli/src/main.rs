use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cgdpd_cli::{
    cmd_compare, cmd_oracle_check, cmd_paths, cmd_run, BackendChoice, HttpSettings, Method,
    RunConfig, SyntheticSpec,
};
use cgdpd_core::classifier::NegationStrategy;
use cgdpd_core::dataset::FieldMap;
use cgdpd_core::oracle::OracleConfig;

/// Negation-consistent decoding for three-way logical QA: run experiments,
/// compare runs, audit datasets against the exact oracle, and inspect the
/// decoder's reachable paths.
#[derive(Parser)]
#[command(name = "cgdpd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode a dataset with a chosen backend and method; write a report.
    Run(Box<RunArgs>),
    /// Paired bootstrap comparison of two saved reports.
    Compare(CompareArgs),
    /// Audit a dataset's gold labels against the exact oracle.
    OracleCheck(OracleCheckArgs),
    /// Emit the table of reachable decoder paths (stage and call counts).
    Paths(PathsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Single,
    Cgdpd,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Oracle,
    Noisy,
    Http,
}

#[derive(Clone, Copy, ValueEnum)]
enum NegatorArg {
    Formula,
    NotWrapper,
}

#[derive(Args)]
struct SourceArgs {
    /// Line-delimited JSON dataset with FOL fields.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Generate a synthetic dataset instead: N:FRAC (e.g. 500:0.5).
    #[arg(long)]
    synthetic: Option<SyntheticSpec>,
    /// Abort on the first malformed dataset line instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// JSON field holding the premise array.
    #[arg(long, default_value = "premises-FOL")]
    premises_field: String,
    /// JSON field holding the conclusion formula.
    #[arg(long, default_value = "conclusion-FOL")]
    conclusion_field: String,
    /// JSON field holding the gold label.
    #[arg(long, default_value = "label")]
    label_field: String,
    /// JSON field holding the example id (synthesized from the line number
    /// when absent).
    #[arg(long, default_value = "example_id")]
    id_field: String,
}

impl SourceArgs {
    fn field_map(&self) -> FieldMap {
        FieldMap {
            premises: self.premises_field.clone(),
            conclusion: self.conclusion_field.clone(),
            label: self.label_field.clone(),
            example_id: self.id_field.clone(),
        }
    }
}

#[derive(Args)]
struct OracleOpts {
    /// Distinct constants denote distinct individuals.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    unique_names: bool,
    #[arg(long, default_value_t = 20)]
    max_ground_atoms: usize,
    #[arg(long, default_value_t = 8)]
    max_domain_size: usize,
}

impl OracleOpts {
    fn config(&self) -> OracleConfig {
        OracleConfig {
            unique_names: self.unique_names,
            max_ground_atoms: self.max_ground_atoms,
            max_domain_size: self.max_domain_size,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,

    #[arg(long, value_enum, default_value_t = BackendArg::Oracle)]
    backend: BackendArg,

    /// Noisy backend: probability of replacing a decisive label with Unknown.
    #[arg(long, default_value_t = 0.0)]
    noise_u: f64,
    /// Noisy backend: probability of flipping decisive labels and probes.
    #[arg(long, default_value_t = 0.0)]
    noise_f: f64,
    /// Noisy backend: probability of deciding on a genuinely Unknown case.
    #[arg(long, default_value_t = 0.0)]
    noise_g: f64,

    /// HTTP backend endpoint URL.
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name sent in HTTP requests.
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the bearer token.
    #[arg(long)]
    token_env: Option<String>,
    #[arg(long, default_value_t = 30)]
    timeout_secs: u64,
    /// Retries after a malformed response.
    #[arg(long, default_value_t = 2)]
    retries: usize,
    /// Cap on concurrent in-flight HTTP requests.
    #[arg(long, default_value_t = 4)]
    max_inflight: usize,
    /// Directory holding classify.txt, fix_unknown.txt, entails.txt,
    /// adjudicate.txt prompt templates.
    #[arg(long)]
    template_dir: Option<PathBuf>,
    /// Disable response memoization for the HTTP backend.
    #[arg(long)]
    no_cache: bool,

    #[arg(long, value_enum, default_value_t = MethodArg::Cgdpd)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = NegatorArg::Formula)]
    negator: NegatorArg,
    /// Unknown-penalty rendered into the classify prompt.
    #[arg(long, default_value_t = 0.5)]
    unknown_penalty: f64,

    #[command(flatten)]
    oracle: OracleOpts,

    /// Upper bound on examples (truncates after loading).
    #[arg(long)]
    max_examples: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads decoding examples.
    #[arg(long, default_value_t = 1)]
    concurrency: usize,
    #[arg(long, default_value_t = 10_000)]
    bootstrap_samples: usize,

    /// Report output path.
    #[arg(long)]
    out: PathBuf,
    /// Optional flat CSV export of the per-example records.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Baseline report: embeds changed-prediction flags and bootstrap deltas.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Record per-example backend failures and continue instead of aborting.
    #[arg(long)]
    keep_going: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Baseline report (A).
    #[arg(long)]
    a: PathBuf,
    /// Method report (B); deltas are B minus A.
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    bootstrap_samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleCheckArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    oracle: OracleOpts,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PathsArgs {
    #[arg(long)]
    out: PathBuf,
}

fn run_config(args: &RunArgs) -> Result<RunConfig, String> {
    let mut config = RunConfig::new(args.out.clone());
    config.dataset = args.source.dataset.clone();
    config.synthetic = args.source.synthetic;
    config.backend = match args.backend {
        BackendArg::Oracle => BackendChoice::Oracle,
        BackendArg::Noisy => BackendChoice::Noisy {
            u: args.noise_u,
            f: args.noise_f,
            g: args.noise_g,
        },
        BackendArg::Http => {
            let endpoint = args
                .endpoint
                .clone()
                .ok_or("--backend http requires --endpoint")?;
            let model = args
                .model
                .clone()
                .ok_or("--backend http requires --model")?;
            BackendChoice::Http(HttpSettings {
                endpoint,
                model,
                token_env: args.token_env.clone(),
                timeout_secs: args.timeout_secs,
                retries: args.retries,
                max_in_flight: args.max_inflight,
                template_dir: args.template_dir.clone(),
            })
        }
    };
    config.method = match args.method {
        MethodArg::Single => Method::Single,
        MethodArg::Cgdpd => Method::Cgdpd,
    };
    config.negator = match args.negator {
        NegatorArg::Formula => NegationStrategy::FormulaLevel,
        NegatorArg::NotWrapper => NegationStrategy::NotWrapper,
    };
    config.unknown_penalty = args.unknown_penalty;
    config.oracle = args.oracle.config();
    config.max_examples = args.max_examples;
    config.seed = args.seed;
    config.concurrency = args.concurrency;
    config.bootstrap_samples = args.bootstrap_samples;
    config.csv = args.csv.clone();
    config.baseline = args.baseline.clone();
    config.keep_going = args.keep_going;
    config.strict = args.source.strict;
    config.no_cache = args.no_cache;
    config.field_map = args.source.field_map();
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => match run_config(&args) {
            Err(message) => {
                eprintln!("configuration error: {message}");
                return ExitCode::from(2);
            }
            Ok(config) => cmd_run(&config).map(|report| {
                let m = &report.metrics;
                println!(
                    "n={} accuracy={:.4} unknown_rate={:.4} epistemic_unknown={} mean_calls={:.2} failed={}",
                    report.n,
                    m.accuracy,
                    m.unknown_rate,
                    m.epistemic_unknown_rate
                        .map_or("n/a".to_string(), |v| format!("{v:.4}")),
                    m.mean_calls,
                    report.n_failed,
                );
                println!("report written to {}", config.out.display());
            }),
        },
        Command::Compare(args) => {
            cmd_compare(&args.a, &args.b, args.bootstrap_samples, args.seed, &args.out).map(
                |comparison| {
                    for ci in &comparison.deltas {
                        println!(
                            "{}: delta={:+.4} 95% CI [{:+.4}, {:+.4}]",
                            ci.statistic, ci.point_delta, ci.lo, ci.hi
                        );
                    }
                    println!(
                        "changed predictions: {}/{}; written to {}",
                        comparison.diff.n_changed,
                        comparison.n,
                        args.out.display()
                    );
                },
            )
        }
        Command::OracleCheck(args) => cmd_oracle_check(
            args.source.dataset.as_deref(),
            args.source.synthetic,
            &args.source.field_map(),
            args.source.strict,
            &args.oracle.config(),
            args.seed,
            &args.out,
        )
        .map(|stats| {
            println!(
                "n={} disagreements={} budget_exceeded={} parse_failures={}; written to {}",
                stats.n,
                stats.oracle_disagreements,
                stats.budget_exceeded,
                stats.parse_failures,
                args.out.display()
            );
        }),
        Command::Paths(args) => cmd_paths(&args.out).map(|rows| {
            println!("{:<60} {:<18} {:>5}  label", "signature", "stage", "calls");
            for row in &rows {
                println!(
                    "{:<60} {:<18} {:>5}  {}",
                    row.signature,
                    format!("{:?}", row.stage),
                    row.calls,
                    row.label
                );
            }
            println!("{} reachable paths; written to {}", rows.len(), args.out.display());
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_coherent() {
        Cli::command().debug_assert();
    }
}
