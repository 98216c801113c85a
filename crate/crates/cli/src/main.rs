use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use elasticity_core::emulator::{load_grid, read_trace_rows, write_trace_rows, Variation};
use elasticity_core::harness::{replay, run_comparison_with, score_rows, ExperimentConfig};
use elasticity_core::model::{parse_dump, validate_model, ClusterSize, MdpModel};
use elasticity_core::policy::{instantiate_model, PolicyKind};
use elasticity_core::query::ReachabilityQuery;
use elasticity_core::reward::{write_records, MeasurementRecord, UtilityConfig, UtilityKind};
use elasticity_core::solver::{decide, reachability_probability};

#[derive(Parser)]
#[command(name = "elasticity", version, about = "MDP-based elasticity decisions and policy emulation")]
struct Cli {
    /// Overrides the base seed of experiments and synthetic datasets.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (TOML); defaults are used when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,

    /// Measurement CSV replacing the configured dataset.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compare policies over several emulated runs.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated policy list, e.g. RE,RL_MB,MDP_EB.
        #[arg(long, value_delimiter = ',')]
        policies: Option<Vec<PolicyKind>>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        /// r1 or r2.
        #[arg(long)]
        utility: Option<UtilityKind>,
        /// LV1 or LV2.
        #[arg(long)]
        variation: Option<Variation>,
        #[arg(long)]
        benefit_threshold_pct: Option<f64>,
        #[arg(long)]
        smoothing_window: Option<usize>,
        #[arg(long)]
        add_limit: Option<u32>,
        #[arg(long)]
        rem_limit: Option<u32>,
    },
    /// Write the synthetic measurement dataset as CSV.
    GenDataset {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// File name inside the output directory.
        #[arg(long, default_value = "dataset.csv")]
        output: String,
    },
    /// Evaluate a reachability query such as "Pmax=? [ F latency<30 & vms_num=7 ]".
    Query {
        query: String,
        /// Model dump to query; without it a model is instantiated from the logs.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Model-based policy whose model shape is instantiated.
        #[arg(long, default_value = "MDP2")]
        policy: PolicyKind,
        /// Incoming load in req/s.
        #[arg(long, default_value_t = 20000.0)]
        load: f64,
        /// Current number of VMs; defaults to the initial size.
        #[arg(long)]
        current: Option<u32>,
        /// Write the instantiated model to <out-dir>/model.txt.
        #[arg(long)]
        save_dump: bool,
    },
    /// Check a configuration and, optionally, a model dump.
    Validate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Re-score a trace CSV under a different utility function.
    Replay {
        trace: PathBuf,
        /// r1 or r2.
        #[arg(long, default_value = "r1")]
        utility: UtilityKind,
        #[arg(long, default_value_t = 60.0)]
        latency_threshold_ms: f64,
    },
}

fn load_config(args: &ConfigArgs, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = &args.dataset {
        cfg.dataset_path = Some(d.clone());
    }
    if let Some(s) = seed {
        cfg.base_seed = s;
        cfg.synthetic.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            cfg,
            policies,
            runs,
            horizon,
            utility,
            variation,
            benefit_threshold_pct,
            smoothing_window,
            add_limit,
            rem_limit,
        } => {
            let mut cfg = load_config(&cfg, cli.seed)?;
            if let Some(p) = policies {
                cfg.policies = p;
            }
            if let Some(r) = runs {
                cfg.runs = r;
            }
            if let Some(h) = horizon {
                cfg.schedule.horizon = h;
            }
            if let Some(u) = utility {
                cfg.utility.kind = u;
            }
            if let Some(v) = variation {
                cfg.load.variation = v;
            }
            if let Some(b) = benefit_threshold_pct {
                cfg.post.benefit_threshold_pct = b;
            }
            if let Some(w) = smoothing_window {
                cfg.post.smoothing_window = w;
            }
            if let Some(a) = add_limit {
                cfg.model.add_limit = a;
            }
            if let Some(r) = rem_limit {
                cfg.model.rem_limit = r;
            }
            cfg.check()?;
            let store = cfg.load_store()?;
            let comparison = run_comparison_with(&cfg, &store);
            comparison
                .write_to(&cli.out_dir)
                .with_context(|| format!("writing results to {}", cli.out_dir.display()))?;
            std::fs::write(cli.out_dir.join("config.toml"), cfg.to_toml_string())?;
            print!("{}", comparison.summary.report());
            for t in comparison.traces.iter().filter(|t| !t.valid) {
                eprintln!(
                    "{} run {} stopped: {}",
                    t.policy,
                    t.run,
                    t.error.as_deref().unwrap_or("unknown error")
                );
            }
            Ok(comparison.all_valid())
        }
        Command::GenDataset { cfg, output } => {
            let cfg = load_config(&cfg, cli.seed)?;
            cfg.check()?;
            let loads = load_grid(cfg.load.lambda_min, cfg.load.lambda_max, cfg.clustering.load_bucket_width);
            let records = elasticity_core::emulator::gen_synthetic_dataset(
                &cfg.synthetic,
                cfg.model.min_vms..=cfg.model.max_vms,
                &loads,
            )?;
            std::fs::create_dir_all(&cli.out_dir)?;
            let path = cli.out_dir.join(output);
            write_records(BufWriter::new(File::create(&path)?), &records)?;
            println!("wrote {} records to {}", records.len(), path.display());
            Ok(true)
        }
        Command::Query {
            query,
            dump,
            cfg,
            policy,
            load,
            current,
            save_dump,
        } => {
            let query: ReachabilityQuery = query.parse()?;
            let model = match dump {
                Some(p) => read_dump(&p)?,
                None => {
                    let cfg = load_config(&cfg, cli.seed)?;
                    cfg.check()?;
                    live_model(&cfg, policy, load, current)?
                }
            };
            if query.predicate.needs_center() && model.states().iter().any(|s| s.center.is_none()) {
                bail!("the query reads latency or throughput but the model has no cluster centers");
            }
            if save_dump {
                std::fs::create_dir_all(&cli.out_dir)?;
                std::fs::write(cli.out_dir.join("model.txt"), model.dump())?;
            }
            println!("{}", reachability_probability(&model, &query));
            Ok(true)
        }
        Command::Validate { cfg, dump } => {
            let cfg = load_config(&cfg, cli.seed)?;
            cfg.check()?;
            println!("configuration ok");
            if let Some(p) = dump {
                let model = read_dump(&p)?;
                let report = validate_model(&model);
                if report.is_valid() {
                    println!("model ok: {} states, {} transitions", model.states().len(), model.transitions().len());
                    let d = decide(&model)?;
                    println!("decision: {} (target {})", d.action, d.target);
                } else {
                    print!("{report}");
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Command::Replay {
            trace,
            utility,
            latency_threshold_ms,
        } => {
            let utility = UtilityConfig {
                kind: utility,
                latency_threshold_ms,
            };
            utility.check()?;
            let file = File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
            let rows = replay(&read_trace_rows(file)?, &utility);
            let (mean, violations) = score_rows(&rows, &utility);
            std::fs::create_dir_all(&cli.out_dir)?;
            let name = trace.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
            let path = cli.out_dir.join(format!("{name}_{}.csv", utility.kind));
            write_trace_rows(BufWriter::new(File::create(&path)?), &rows)?;
            println!("mean utility {mean}");
            println!("violations {violations}");
            Ok(true)
        }
    }
}

fn read_dump(path: &Path) -> Result<MdpModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_dump(&text)?)
}

/// Model the given policy would build at `load`, observed through the mean
/// logged behaviour of the current size.
fn live_model(cfg: &ExperimentConfig, policy: PolicyKind, load: f64, current: Option<u32>) -> Result<MdpModel> {
    let store = cfg.load_store()?;
    let current = ClusterSize(current.unwrap_or(cfg.schedule.initial_vms));
    let sel = store.select_logs(current.0, load)?;
    let n = sel.records.len() as f64;
    let measurement = MeasurementRecord {
        time: 0,
        vms_num: current.0,
        load,
        latency_ms: sel.records.iter().map(|r| r.latency_ms).sum::<f64>() / n,
        throughput: sel.records.iter().map(|r| r.throughput).sum::<f64>() / n,
    };
    let (model, _) = instantiate_model(policy, &store, load, current, &measurement, &cfg.policy_settings())?;
    Ok(model)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
