use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use reelpack::experiment::{
    bias_csv, comparison_csv, elbow_csv, reports_csv, run_case_study, run_table6, run_verify_suite,
    verify_battery, Table6Options,
};
use reelpack::sim::{compare, elbow, simulate, sweep_reels};
use reelpack::solver::{solve_exact, solve_single_reel_for, DEFAULT_MAX_STATES};
use reelpack::{
    load_instance, Error, ExactOptions, Policy, ProblemInstance, RolloutParams, RviOptions,
    SimulationConfig,
};
use serde::Serialize;

const MAX_STATES_VAR: &str = "REELPACK_MAX_STATES";

#[derive(Parser)]
#[command(
    name = "reelpack",
    version,
    about = "Online reel assignment: policies, exact solvers and simulation"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Built-in case (case1..case4) or path to a JSON instance file.
    #[arg(long, global = true)]
    instance: Option<String>,
    /// Number of reels; overrides the instance's own value.
    #[arg(long, global = true)]
    reels: Option<usize>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for simulation replications (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyKind {
    Random,
    Ff,
    Bf,
    Index,
    Rollout,
    Exact,
}

#[derive(Args, Clone)]
struct SimArgs {
    /// Components per replication, including warm-up.
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Args, Clone)]
struct RolloutArgs {
    /// Continuations per candidate reel.
    #[arg(long, default_value_t = 16)]
    rollouts: usize,
    /// Components simulated per continuation.
    #[arg(long, default_value_t = 20)]
    rollout_horizon: usize,
    /// Policy followed inside the continuations.
    #[arg(long, value_enum, default_value_t = PolicyKind::Index)]
    rollout_base: PolicyKind,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the long-run waste per component of one policy.
    Simulate {
        #[arg(long, value_enum, default_value_t = PolicyKind::Index)]
        policy: PolicyKind,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        rollout: RolloutArgs,
    },
    /// Simulate several policies on shared component streams.
    Compare {
        #[arg(long, value_enum, value_delimiter = ',', default_values = ["random", "ff", "bf", "index"])]
        policies: Vec<PolicyKind>,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        rollout: RolloutArgs,
    },
    /// Waste as a function of the number of reels.
    Sweep {
        #[arg(long, value_enum, default_value_t = PolicyKind::Index)]
        policy: PolicyKind,
        #[arg(long, value_delimiter = ',', default_values = ["2", "3", "4", "5", "8"])]
        reel_counts: Vec<usize>,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        rollout: RolloutArgs,
    },
    /// Second differences of a waste curve.
    Elbow {
        /// CSV with columns `N` and `mean` (as written by `sweep`) or `N` and `f`.
        #[arg(long, conflicts_with = "points")]
        curve: Option<PathBuf>,
        /// Inline curve, e.g. `2:10,3:6,4:5`.
        #[arg(long, value_delimiter = ',')]
        points: Vec<String>,
    },
    /// Single-reel bias table.
    Bias,
    /// Optimal policy over the reachable state space.
    SolveExact {
        /// Enumerate every reel ordering instead of sorted configurations.
        #[arg(long)]
        no_symmetry: bool,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Check the single-reel decomposition and the index policy's
    /// improvement on small instances.
    Verify,
    /// Waste of every policy on the synthetic cases.
    Table6 {
        #[arg(long, value_delimiter = ',', default_values = ["1", "2", "3"])]
        cases: Vec<u8>,
        #[arg(long, value_delimiter = ',', default_values = ["2", "3", "4", "5", "8"])]
        reel_counts: Vec<usize>,
        #[arg(long, value_enum, value_delimiter = ',', default_values = ["random", "ff", "bf", "index", "exact"])]
        policies: Vec<PolicyKind>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Waste curves over N on the large case, with their elbow.
    CaseStudy {
        #[arg(long, value_delimiter = ',', default_values = ["2", "3", "4", "5", "8"])]
        reel_counts: Vec<usize>,
        #[arg(long, value_enum, value_delimiter = ',', default_values = ["ff", "bf", "index"])]
        policies: Vec<PolicyKind>,
        /// Where to write the elbow table (CSV mode only).
        #[arg(long)]
        elbow_out: Option<PathBuf>,
        #[command(flatten)]
        sim: SimArgs,
    },
}

enum Failure {
    Lib(Error),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(4)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::StateSpaceTooLarge { .. }
        | Error::NotConverged { .. }
        | Error::Enumeration(_)
        | Error::UnmappedState { .. } => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    if let Some(threads) = g.threads {
        if threads == 0 {
            return Err(Error::Input("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Input(e.to_string()))?;
    }
    let max_states = max_states()?;
    match &cli.command {
        Command::Simulate {
            policy,
            sim,
            rollout,
        } => {
            let instance = instance(g, "case1")?;
            let policy = build_policy(*policy, &instance, rollout, max_states)?;
            let report = simulate(&instance, &policy, &sim_config(g, sim, &instance))?;
            emit(g, || reports_csv(std::slice::from_ref(&report)), &report)
        }
        Command::Compare {
            policies,
            sim,
            rollout,
        } => {
            let instance = instance(g, "case1")?;
            let policies = policies
                .iter()
                .map(|&p| build_policy(p, &instance, rollout, max_states))
                .collect::<Result<Vec<_>, _>>()?;
            let cmp = compare(&instance, &policies, &sim_config(g, sim, &instance))?;
            emit(g, || comparison_csv(&cmp), &cmp)
        }
        Command::Sweep {
            policy,
            reel_counts,
            sim,
            rollout,
        } => {
            let template = instance(g, "case4")?;
            if *policy == PolicyKind::Exact {
                return Err(Error::Input(
                    "the exact policy is solved per reel count; use solve-exact".into(),
                )
                .into());
            }
            let policy = build_policy(*policy, &template, rollout, max_states)?;
            let reports = sweep_reels(
                &template,
                &policy,
                reel_counts,
                &sim_config(g, sim, &template),
            )?;
            emit(g, || reports_csv(&reports), &reports)
        }
        Command::Elbow { curve, points } => {
            let curve = match curve {
                Some(path) => read_curve(path)?,
                None => parse_points(points)?,
            };
            let report = elbow(&curve)?;
            #[derive(Serialize)]
            struct Out<'a> {
                curve: &'a [(usize, f64)],
                #[serde(flatten)]
                report: &'a reelpack::sim::ElbowReport,
            }
            emit(
                g,
                || elbow_csv(&curve, &report),
                &Out {
                    curve: &curve,
                    report: &report,
                },
            )
        }
        Command::Bias => {
            let instance = instance(g, "case1")?;
            let bias = solve_single_reel_for(&instance, &RviOptions::default())?;
            emit(g, || bias_csv(&bias), &bias)
        }
        Command::SolveExact {
            no_symmetry,
            tolerance,
        } => {
            let instance = instance(g, "case2")?;
            let opts = ExactOptions {
                rvi: RviOptions::default().with_tolerance(*tolerance),
                max_states,
                symmetric: !no_symmetry,
            };
            let summary = solve_exact(&instance, &opts)?.summary();
            emit(
                g,
                || {
                    Ok(format!(
                        "instance,N,gain,state_count,config_count,residual,iterations\n{},{},{:.3},{},{},{:.3e},{}\n",
                        instance.name,
                        instance.reels(),
                        summary.gain,
                        summary.state_count,
                        summary.config_count,
                        summary.residual,
                        summary.iterations
                    ))
                },
                &summary,
            )
        }
        Command::Verify => {
            let instances = match &g.instance {
                Some(_) => vec![instance(g, "case1")?],
                None => verify_battery(),
            };
            let report = run_verify_suite(&instances, max_states)?;
            emit(g, || report.to_csv(), &report)?;
            let failures: Vec<String> = report
                .failures()
                .map(|c| {
                    format!(
                        "{} on {} (value {:.3e} > {:.0e})",
                        c.check, c.instance, c.value, c.tolerance
                    )
                })
                .collect();
            if failures.is_empty() {
                eprintln!("all {} checks passed", report.checks.len());
                Ok(())
            } else {
                Err(Failure::Verification(failures.join("; ")))
            }
        }
        Command::Table6 {
            cases,
            reel_counts,
            policies,
            sim,
        } => {
            if policies.contains(&PolicyKind::Rollout) {
                return Err(Error::Input("rollout is not part of the table".into()).into());
            }
            let base = SimulationConfig::default();
            let opts = Table6Options {
                cases: cases.clone(),
                reel_counts: reel_counts.clone(),
                policies: policies
                    .iter()
                    .map(|&p| policy_name(p).to_string())
                    .collect(),
                sim: apply_sim_args(base, g, sim),
                exact: ExactOptions {
                    max_states,
                    ..Default::default()
                },
                rvi: RviOptions::default(),
            };
            let table = run_table6(&opts)?;
            emit(g, || table.to_csv(), &table)
        }
        Command::CaseStudy {
            reel_counts,
            policies,
            elbow_out,
            sim,
        } => {
            let template = instance(g, "case4")?;
            if policies.contains(&PolicyKind::Exact) {
                return Err(Error::Input(
                    "the exact policy is not available in the case study".into(),
                )
                .into());
            }
            let rollout = RolloutArgs {
                rollouts: 16,
                rollout_horizon: 20,
                rollout_base: PolicyKind::Index,
            };
            let policies = policies
                .iter()
                .map(|&p| build_policy(p, &template, &rollout, max_states))
                .collect::<Result<Vec<_>, _>>()?;
            let study = run_case_study(
                &template,
                &policies,
                reel_counts,
                &sim_config(g, sim, &template),
            )?;
            if let Some(notice) = &study.notice {
                eprintln!("{notice}");
            }
            if g.format == Format::Csv {
                if let (Some(path), Some(report), Some(name)) =
                    (elbow_out, &study.elbow, &study.elbow_policy)
                {
                    let curve: Vec<(usize, f64)> = study
                        .curves
                        .iter()
                        .filter(|r| &r.policy == name)
                        .map(|r| (r.reels, r.mean))
                        .collect();
                    std::fs::write(path, elbow_csv(&curve, report)?)?;
                }
            }
            emit(g, || reports_csv(&study.curves), &study)
        }
    }
}

fn max_states() -> Result<usize, Error> {
    match std::env::var(MAX_STATES_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                Error::Input(format!(
                    "{MAX_STATES_VAR} must be a positive integer, got '{v}'"
                ))
            }),
        Err(_) => Ok(DEFAULT_MAX_STATES),
    }
}

fn instance(g: &Global, default: &str) -> Result<ProblemInstance, Error> {
    let instance = load_instance(g.instance.as_deref().unwrap_or(default))?;
    match g.reels {
        Some(n) => instance.with_reels(n),
        None => Ok(instance),
    }
}

fn sim_config(g: &Global, sim: &SimArgs, instance: &ProblemInstance) -> SimulationConfig {
    apply_sim_args(SimulationConfig::for_instance(instance), g, sim)
}

fn apply_sim_args(mut config: SimulationConfig, g: &Global, sim: &SimArgs) -> SimulationConfig {
    config.seed = g.seed;
    if let Some(h) = sim.horizon {
        config.horizon = h;
    }
    if let Some(w) = sim.warmup {
        config.warmup = w;
    }
    if let Some(r) = sim.reps {
        config.replications = r;
    }
    config
}

fn policy_name(kind: PolicyKind) -> &'static str {
    match kind {
        PolicyKind::Random => "random",
        PolicyKind::Ff => "ff",
        PolicyKind::Bf => "bf",
        PolicyKind::Index => "index",
        PolicyKind::Rollout => "rollout",
        PolicyKind::Exact => "exact",
    }
}

fn build_policy(
    kind: PolicyKind,
    instance: &ProblemInstance,
    rollout: &RolloutArgs,
    max_states: usize,
) -> Result<Policy, Error> {
    Ok(match kind {
        PolicyKind::Random => Policy::Random,
        PolicyKind::Ff => Policy::FirstFit,
        PolicyKind::Bf => Policy::BestFit,
        PolicyKind::Index => Policy::Index(Arc::new(solve_single_reel_for(
            instance,
            &RviOptions::default(),
        )?)),
        PolicyKind::Exact => {
            let opts = ExactOptions {
                max_states,
                ..Default::default()
            };
            Policy::Tabular(solve_exact(instance, &opts)?.policy)
        }
        PolicyKind::Rollout => {
            if matches!(
                rollout.rollout_base,
                PolicyKind::Rollout | PolicyKind::Exact
            ) {
                return Err(Error::Input(
                    "rollout base must be random, ff, bf or index".into(),
                ));
            }
            Policy::Rollout {
                base: Box::new(build_policy(
                    rollout.rollout_base,
                    instance,
                    rollout,
                    max_states,
                )?),
                params: RolloutParams {
                    rollouts: rollout.rollouts,
                    horizon: rollout.rollout_horizon,
                },
            }
        }
    })
}

fn parse_points(points: &[String]) -> Result<Vec<(usize, f64)>, Error> {
    if points.is_empty() {
        return Err(Error::Input("give --curve or --points".into()));
    }
    points
        .iter()
        .map(|p| {
            let bad = || Error::Input(format!("bad point '{p}', expected N:f"));
            let (n, f) = p.split_once(':').ok_or_else(bad)?;
            Ok((
                n.trim().parse().map_err(|_| bad())?,
                f.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn read_curve(path: &PathBuf) -> Result<Vec<(usize, f64)>, Error> {
    let bad = |msg: String| Error::Input(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let n_col = col("N").ok_or_else(|| bad("no N column".into()))?;
    let f_col = col("mean")
        .or_else(|| col("f"))
        .ok_or_else(|| bad("needs a mean or f column".into()))?;
    reader
        .records()
        .map(|record| {
            let record = record.map_err(|e| bad(e.to_string()))?;
            let field = |i: usize| record.get(i).unwrap_or_default();
            let n = field(n_col)
                .parse()
                .map_err(|_| bad(format!("bad N '{}'", field(n_col))))?;
            let f = field(f_col)
                .parse()
                .map_err(|_| bad(format!("bad value '{}'", field(f_col))))?;
            Ok((n, f))
        })
        .collect()
}

fn emit<T: Serialize>(
    g: &Global,
    csv: impl FnOnce() -> Result<String, Error>,
    json: &T,
) -> Result<(), Failure> {
    let text = match g.format {
        Format::Csv => csv()?,
        Format::Json => {
            let mut s = serde_json::to_string_pretty(json).map_err(Error::from)?;
            s.push('\n');
            s
        }
    };
    match &g.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
