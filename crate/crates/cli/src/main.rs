use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stoqease_cli::config::*;
use stoqease_cli::{experiments, resolve_threads, RunError};

#[derive(Parser)]
#[command(
    name = "stoqease",
    version,
    about = "Quantify and ease the QMC sign problem of real spin Hamiltonians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON experiment config; explicit flags override its fields.
    #[arg(long, global = false)]
    config: Option<PathBuf>,
    /// Master seed (grid points derive their own seeds from it).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV, plot data and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (falls back to STOQEASE_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Grid override, name=min:max:steps; repeatable.
    #[arg(long = "grid")]
    grid: Vec<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SweepModelArg {
    Jmodel,
    Ladder,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Non-stoquasticity nu_p of a dense matrix file.
    Measure {
        #[command(flatten)]
        common: Common,
        /// Whitespace-separated symmetric matrix, one row per line.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        p: Option<f64>,
        /// Report the raw entry sum instead of dividing by the dimension.
        #[arg(long)]
        raw_sum: bool,
    },
    /// Average sign of a dense Hamiltonian at (beta, m).
    Avgsign {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        m: Option<u32>,
    },
    /// Minimize the window measure of a two-site term over O(d).
    Optimize {
        #[command(flatten)]
        common: Common,
        /// d^2 x d^2 term matrix file.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        local_dim: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, value_enum)]
        init: Option<InitKind>,
    },
    /// Phase-diagram sweep of a ladder model.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: Option<SweepModelArg>,
        #[arg(long)]
        n_rungs: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Inverse average sign against nu_1 across random chains.
    SignStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_qubits: Option<usize>,
        #[arg(long)]
        n_seeds: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        m: Option<u32>,
    },
    /// Embed a MaxCut graph into a sign-easing Hamiltonian.
    EmbedMaxcut {
        #[command(flatten)]
        common: Common,
        /// Edge-list file, one "i j" pair per line.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Brute-force check of the MaxCut reduction on a small graph.
    VerifyReduction {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        clifford_cap: Option<usize>,
    },
    /// Recovery benchmark on random instances with a known stoquastic basis.
    BenchmarkRandom {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        local_dim: Option<usize>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

fn load_config(common: &Common) -> Result<Option<ExperimentConfig>, RunError> {
    match &common.config {
        None => Ok(None),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                RunError::Invalid(anyhow::anyhow!("reading {}: {e}", path.display()))
            })?;
            let cfg = ExperimentConfig::from_json(&text).map_err(RunError::Invalid)?;
            Ok(Some(cfg))
        }
    }
}

fn missing(flag: &str) -> RunError {
    RunError::Invalid(anyhow::anyhow!(
        "--{flag} is required (or provide it via --config)"
    ))
}

/// Build the resolved config for one subcommand: start from `--config` when
/// given (whose experiment kind must match), otherwise from defaults, then
/// let explicit flags win.
fn resolve(cli: Command) -> Result<(ExperimentConfig, Common), RunError> {
    let bad_kind = |have: &Experiment, want: &str| {
        RunError::Invalid(anyhow::anyhow!(
            "config is for experiment {:?}, but the subcommand expects {want}",
            have.name()
        ))
    };
    let (mut cfg, common) = match cli {
        Command::Measure {
            common,
            input,
            p,
            raw_sum,
        } => {
            let mut exp = match load_config(&common)? {
                Some(c) => match c.experiment {
                    Experiment::Measure(ref m) => (m.clone(), c.seed, c.out.clone(), c.threads),
                    ref other => return Err(bad_kind(other, "measure")),
                },
                None => (
                    MeasureCfg {
                        input: input.clone().ok_or_else(|| missing("input"))?,
                        p: 1.0,
                        raw_sum: false,
                    },
                    0,
                    PathBuf::from("out"),
                    None,
                ),
            };
            if let Some(v) = input {
                exp.0.input = v;
            }
            if let Some(v) = p {
                exp.0.p = v;
            }
            if raw_sum {
                exp.0.raw_sum = true;
            }
            (
                ExperimentConfig {
                    experiment: Experiment::Measure(exp.0),
                    seed: exp.1,
                    out: exp.2,
                    threads: exp.3,
                },
                common,
            )
        }
        Command::Avgsign {
            common,
            input,
            beta,
            m,
        } => {
            let mut exp = match load_config(&common)? {
                Some(c) => match c.experiment {
                    Experiment::Avgsign(ref a) => (a.clone(), c.seed, c.out.clone(), c.threads),
                    ref other => return Err(bad_kind(other, "avgsign")),
                },
                None => (
                    AvgsignCfg {
                        input: input.clone().ok_or_else(|| missing("input"))?,
                        beta: 1.0,
                        m: 100,
                    },
                    0,
                    PathBuf::from("out"),
                    None,
                ),
            };
            if let Some(v) = input {
                exp.0.input = v;
            }
            if let Some(v) = beta {
                exp.0.beta = v;
            }
            if let Some(v) = m {
                exp.0.m = v;
            }
            (
                ExperimentConfig {
                    experiment: Experiment::Avgsign(exp.0),
                    seed: exp.1,
                    out: exp.2,
                    threads: exp.3,
                },
                common,
            )
        }
        Command::Optimize {
            common,
            input,
            local_dim,
            alpha,
            restarts,
            init,
        } => {
            let mut exp = match load_config(&common)? {
                Some(c) => match c.experiment {
                    Experiment::Optimize(ref o) => (o.clone(), c.seed, c.out.clone(), c.threads),
                    ref other => return Err(bad_kind(other, "optimize")),
                },
                None => (
                    OptimizeCfg {
                        input: input.clone().ok_or_else(|| missing("input"))?,
                        local_dim: local_dim.ok_or_else(|| missing("local-dim"))?,
                        alpha: 50.0,
                        restarts: 1,
                        init: InitKind::PerturbedIdentity,
                    },
                    0,
                    PathBuf::from("out"),
                    None,
                ),
            };
            if let Some(v) = input {
                exp.0.input = v;
            }
            if let Some(v) = local_dim {
                exp.0.local_dim = v;
            }
            if let Some(v) = alpha {
                exp.0.alpha = v;
            }
            if let Some(v) = restarts {
                exp.0.restarts = v;
            }
            if let Some(v) = init {
                exp.0.init = v;
            }
            (
                ExperimentConfig {
                    experiment: Experiment::Optimize(exp.0),
                    seed: exp.1,
                    out: exp.2,
                    threads: exp.3,
                },
                common,
            )
        }
        Command::Sweep {
            common,
            model,
            n_rungs,
            beta,
            m,
            alpha,
            restarts,
        } => {
            let from_config = load_config(&common)?;
            let experiment = match (from_config, model) {
                (Some(c), sel) => {
                    match (&c.experiment, sel) {
                        (Experiment::JmodelSweep(_), None | Some(SweepModelArg::Jmodel))
                        | (Experiment::LadderSweep(_), None | Some(SweepModelArg::Ladder)) => {}
                        (other, _) => return Err(bad_kind(other, "the selected sweep model")),
                    }
                    let mut cfg = c;
                    override_sweep(&mut cfg.experiment, n_rungs, beta, m, alpha, restarts);
                    return finish_common(cfg, common);
                }
                (None, sel) => match sel.unwrap_or(SweepModelArg::Ladder) {
                    SweepModelArg::Jmodel => Experiment::JmodelSweep(
                        serde_json::from_str("{}").expect("all fields default"),
                    ),
                    SweepModelArg::Ladder => Experiment::LadderSweep(
                        serde_json::from_str("{}").expect("all fields default"),
                    ),
                },
            };
            let mut cfg = ExperimentConfig {
                experiment,
                seed: 0,
                out: PathBuf::from("out"),
                threads: None,
            };
            override_sweep(&mut cfg.experiment, n_rungs, beta, m, alpha, restarts);
            (cfg, common)
        }
        Command::SignStudy {
            common,
            n_qubits,
            n_seeds,
            beta,
            m,
        } => {
            let mut exp = match load_config(&common)? {
                Some(c) => match c.experiment {
                    Experiment::SignStudy(ref s) => (s.clone(), c.seed, c.out.clone(), c.threads),
                    ref other => return Err(bad_kind(other, "sign-study")),
                },
                None => (
                    serde_json::from_str::<SignStudyCfg>("{}").expect("all fields default"),
                    0,
                    PathBuf::from("out"),
                    None,
                ),
            };
            if let Some(v) = n_qubits {
                exp.0.n_qubits = v;
            }
            if let Some(v) = n_seeds {
                exp.0.n_seeds = v;
            }
            if let Some(v) = beta {
                exp.0.beta = v;
            }
            if let Some(v) = m {
                exp.0.m = v;
            }
            (
                ExperimentConfig {
                    experiment: Experiment::SignStudy(exp.0),
                    seed: exp.1,
                    out: exp.2,
                    threads: exp.3,
                },
                common,
            )
        }
        Command::EmbedMaxcut { common, graph } => {
            let mut exp = match load_config(&common)? {
                Some(c) => match c.experiment {
                    Experiment::EmbedMaxcut(ref g) => (g.clone(), c.seed, c.out.clone(), c.threads),
                    ref other => return Err(bad_kind(other, "embed-maxcut")),
                },
                None => (
                    EmbedMaxcutCfg {
                        graph: graph.clone().ok_or_else(|| missing("graph"))?,
                    },
                    0,
                    PathBuf::from("out"),
                    None,
                ),
            };
            if let Some(v) = graph {
                exp.0.graph = v;
            }
            (
                ExperimentConfig {
                    experiment: Experiment::EmbedMaxcut(exp.0),
                    seed: exp.1,
                    out: exp.2,
                    threads: exp.3,
                },
                common,
            )
        }
        Command::VerifyReduction {
            common,
            graph,
            clifford_cap,
        } => {
            let mut exp = match load_config(&common)? {
                Some(c) => match c.experiment {
                    Experiment::VerifyReduction(ref v) => {
                        (v.clone(), c.seed, c.out.clone(), c.threads)
                    }
                    ref other => return Err(bad_kind(other, "verify-reduction")),
                },
                None => (
                    VerifyReductionCfg {
                        graph: graph.clone().ok_or_else(|| missing("graph"))?,
                        clifford_cap: 8,
                    },
                    0,
                    PathBuf::from("out"),
                    None,
                ),
            };
            if let Some(v) = graph {
                exp.0.graph = v;
            }
            if let Some(v) = clifford_cap {
                exp.0.clifford_cap = v;
            }
            (
                ExperimentConfig {
                    experiment: Experiment::VerifyReduction(exp.0),
                    seed: exp.1,
                    out: exp.2,
                    threads: exp.3,
                },
                common,
            )
        }
        Command::BenchmarkRandom {
            common,
            local_dim,
            instances,
            alpha,
            threshold,
        } => {
            let mut exp = match load_config(&common)? {
                Some(c) => match c.experiment {
                    Experiment::BenchmarkRandom(ref b) => {
                        (b.clone(), c.seed, c.out.clone(), c.threads)
                    }
                    ref other => return Err(bad_kind(other, "benchmark-random")),
                },
                None => (
                    serde_json::from_str::<BenchmarkRandomCfg>("{}").expect("all fields default"),
                    0,
                    PathBuf::from("out"),
                    None,
                ),
            };
            if let Some(v) = local_dim {
                exp.0.local_dim = v;
            }
            if let Some(v) = instances {
                exp.0.instances = v;
            }
            if let Some(v) = alpha {
                exp.0.alpha = v;
            }
            if let Some(v) = threshold {
                exp.0.threshold = v;
            }
            (
                ExperimentConfig {
                    experiment: Experiment::BenchmarkRandom(exp.0),
                    seed: exp.1,
                    out: exp.2,
                    threads: exp.3,
                },
                common,
            )
        }
    };
    apply_common(&mut cfg, &common)?;
    Ok((cfg, common))
}

fn override_sweep(
    exp: &mut Experiment,
    n_rungs: Option<usize>,
    beta: Option<f64>,
    m: Option<u32>,
    alpha: Option<f64>,
    restarts: Option<usize>,
) {
    match exp {
        Experiment::JmodelSweep(c) => {
            if let Some(v) = n_rungs {
                c.n_rungs = v;
            }
            if let Some(v) = beta {
                c.beta = v;
            }
            if let Some(v) = m {
                c.m = v;
            }
            if let Some(v) = alpha {
                c.alpha = v;
            }
            if let Some(v) = restarts {
                c.restarts = v;
            }
        }
        Experiment::LadderSweep(c) => {
            if let Some(v) = n_rungs {
                c.n_rungs = v;
            }
            if let Some(v) = beta {
                c.beta = v;
            }
            if let Some(v) = m {
                c.m = v;
            }
            if let Some(v) = alpha {
                c.alpha = v;
            }
            if let Some(v) = restarts {
                c.restarts = v;
            }
        }
        _ => {}
    }
}

fn apply_common(cfg: &mut ExperimentConfig, common: &Common) -> Result<(), RunError> {
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(threads) = common.threads {
        cfg.threads = Some(threads);
    }
    for spec in &common.grid {
        cfg.apply_grid_override(spec).map_err(RunError::Invalid)?;
    }
    cfg.validate().map_err(RunError::Invalid)
}

fn finish_common(
    mut cfg: ExperimentConfig,
    common: Common,
) -> Result<(ExperimentConfig, Common), RunError> {
    apply_common(&mut cfg, &common)?;
    Ok((cfg, common))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, common) = match resolve(cli.command) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{}", e.message());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(n) = resolve_threads(common.threads, cfg.threads) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not configure {n} threads: {e}");
        }
    }
    match experiments::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
