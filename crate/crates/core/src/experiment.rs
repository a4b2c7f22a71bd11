//! Batch experiments built from the simulator and solvers, plus their CSV
//! renderings. Tables print floats with three decimals; JSON keeps full
//! precision.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{builtin_case, ComponentDistribution, Grams, ProblemInstance};
use crate::policy::Policy;
use crate::sim::{
    elbow, simulate, sweep_reels, Comparison, ElbowReport, SimulationConfig, SimulationReport,
};
use crate::solver::{
    additive_naive_bias, bellman_error, evaluate_policy_exact, evaluate_random_naive,
    naive_random_residual, random_augmented_bias, solve_exact, solve_single_reel_for, BiasTable,
    ExactOptions, RviOptions, StateSpace,
};

pub const TABLE_REEL_COUNTS: [usize; 5] = [2, 3, 4, 5, 8];

/// How a table entry was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Simulated,
    /// Single-reel gain of the random policy.
    Analytic,
    Exact,
    /// Exact row whose state space exceeded the limit.
    Unavailable,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Simulated => "simulated",
            RowKind::Analytic => "analytic",
            RowKind::Exact => "exact",
            RowKind::Unavailable => "unavailable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub case: String,
    pub reels: usize,
    pub policy: String,
    pub kind: RowKind,
    /// Mean waste per component, or the solver gain.
    pub value: Option<f64>,
    pub std_error: Option<f64>,
    pub ci95: Option<f64>,
    pub horizon: Option<u64>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub state_count: Option<usize>,
}

impl ResultRow {
    fn simulated(case: &str, report: &SimulationReport) -> Self {
        Self {
            case: case.to_string(),
            reels: report.reels,
            policy: report.policy.clone(),
            kind: RowKind::Simulated,
            value: Some(report.mean),
            std_error: Some(report.std_error),
            ci95: Some(report.ci95),
            horizon: Some(report.horizon),
            replications: Some(report.replications),
            seed: Some(report.seed),
            state_count: None,
        }
    }

    fn deterministic(case: &str, reels: usize, policy: &str, kind: RowKind) -> Self {
        Self {
            case: case.to_string(),
            reels,
            policy: policy.to_string(),
            kind,
            value: None,
            std_error: None,
            ci95: None,
            horizon: None,
            replications: None,
            seed: None,
            state_count: None,
        }
    }
}

/// Rows keyed by `(case, N, policy)`, kept sorted by that key.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Inserts a row, replacing any row with the same key.
    pub fn insert(&mut self, row: ResultRow) {
        let key = |r: &ResultRow| (r.case.clone(), r.reels, r.policy.clone());
        match self.rows.binary_search_by_key(&key(&row), key) {
            Ok(i) => self.rows[i] = row,
            Err(i) => self.rows.insert(i, row),
        }
    }

    pub fn get(&self, case: &str, reels: usize, policy: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.case == case && r.reels == reels && r.policy == policy)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv_writer();
        w.write_record([
            "case", "N", "policy", "kind", "value", "stderr", "ci95", "horizon", "reps", "seed",
            "states",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.case.clone(),
                r.reels.to_string(),
                r.policy.clone(),
                r.kind.as_str().to_string(),
                opt_f3(r.value),
                opt_f3(r.std_error),
                opt_f3(r.ci95),
                opt(r.horizon),
                opt(r.replications),
                opt(r.seed),
                opt(r.state_count),
            ])
            .map_err(csv_err)?;
        }
        finish(w)
    }
}

#[derive(Debug, Clone)]
pub struct Table6Options {
    pub cases: Vec<u8>,
    pub reel_counts: Vec<usize>,
    /// Any of `random`, `ff`, `bf`, `index`, `exact`.
    pub policies: Vec<String>,
    pub sim: SimulationConfig,
    pub exact: ExactOptions,
    pub rvi: RviOptions,
}

impl Default for Table6Options {
    fn default() -> Self {
        Self {
            cases: vec![1, 2, 3],
            reel_counts: TABLE_REEL_COUNTS.to_vec(),
            policies: ["random", "ff", "bf", "index", "exact"]
                .map(String::from)
                .to_vec(),
            sim: SimulationConfig::default(),
            exact: ExactOptions::default(),
            rvi: RviOptions::default(),
        }
    }
}

/// Simulated heuristic rows, the analytic random gain (`random-g1`) and
/// exact gains where the state space fits.
pub fn run_table6(opts: &Table6Options) -> Result<ResultTable> {
    for p in &opts.policies {
        if !["random", "ff", "bf", "index", "exact"].contains(&p.as_str()) {
            return Err(Error::input(format!("unknown table policy '{p}'")));
        }
    }
    for &case in &opts.cases {
        if !(1..=3).contains(&case) {
            return Err(Error::input(format!("table cases are 1 to 3, got {case}")));
        }
    }
    let wants = |p: &str| opts.policies.iter().any(|q| q == p);
    let mut table = ResultTable::default();
    for &case in &opts.cases {
        let name = format!("case{case}");
        let template = builtin_case(case, 1)?;
        let bias = if wants("random") || wants("index") {
            Some(Arc::new(solve_single_reel_for(&template, &opts.rvi)?))
        } else {
            None
        };
        for &n in &opts.reel_counts {
            let instance = template.with_reels(n)?;
            let config = SimulationConfig {
                horizon: opts.sim.horizon.max(instance.replacement_horizon()),
                ..opts.sim.clone()
            };
            for p in &opts.policies {
                let policy = match p.as_str() {
                    "random" => Policy::Random,
                    "ff" => Policy::FirstFit,
                    "bf" => Policy::BestFit,
                    "index" => Policy::Index(bias.clone().expect("bias solved above")),
                    _ => continue,
                };
                table.insert(ResultRow::simulated(
                    &name,
                    &simulate(&instance, &policy, &config)?,
                ));
            }
            if let Some(bias) = bias.as_ref().filter(|_| wants("random")) {
                let mut row = ResultRow::deterministic(&name, n, "random-g1", RowKind::Analytic);
                row.value = Some(bias.gain);
                table.insert(row);
            }
            if wants("exact") {
                let row = match solve_exact(&instance, &opts.exact) {
                    Ok(sol) => {
                        let mut row = ResultRow::deterministic(&name, n, "exact", RowKind::Exact);
                        row.value = Some(sol.gain);
                        row.state_count = Some(sol.state_count());
                        row
                    }
                    Err(Error::StateSpaceTooLarge { .. }) => {
                        ResultRow::deterministic(&name, n, "exact", RowKind::Unavailable)
                    }
                    Err(e) => return Err(e),
                };
                table.insert(row);
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseStudy {
    pub curves: Vec<SimulationReport>,
    /// Policy whose curve the elbow was computed on.
    pub elbow_policy: Option<String>,
    pub elbow: Option<ElbowReport>,
    pub notice: Option<String>,
}

/// Waste curves over `reel_counts` for each policy on `instance` (Case 4 in
/// the CLI), with the elbow of the curve having the lowest total waste.
pub fn run_case_study(
    instance: &ProblemInstance,
    policies: &[Policy],
    reel_counts: &[usize],
    config: &SimulationConfig,
) -> Result<CaseStudy> {
    if policies.is_empty() {
        return Err(Error::input("no policies given"));
    }
    let mut curves = Vec::new();
    let mut best: Option<(f64, usize)> = None;
    for (i, policy) in policies.iter().enumerate() {
        let reports = sweep_reels(instance, policy, reel_counts, config)?;
        let total: f64 = reports.iter().map(|r| r.mean).sum();
        if best.is_none_or(|(b, _)| total < b) {
            best = Some((total, i));
        }
        curves.extend(reports);
    }
    let (_, best) = best.expect("at least one policy");
    let best_name = policies[best].name().to_string();
    let curve: Vec<(usize, f64)> = curves
        .iter()
        .filter(|r| r.policy == best_name)
        .map(|r| (r.reels, r.mean))
        .collect();
    let (elbow, notice) = if curve.len() < 3 {
        (
            None,
            Some(format!(
                "elbow skipped: {} reel counts given, need at least 3",
                curve.len()
            )),
        )
    } else {
        match elbow(&curve) {
            Ok(e) => (Some(e), None),
            Err(Error::Input(msg)) => (None, Some(format!("elbow skipped: {msg}"))),
            Err(e) => return Err(e),
        }
    };
    Ok(CaseStudy {
        curves,
        elbow_policy: elbow.as_ref().map(|_| best_name),
        elbow,
        notice,
    })
}

/// One named check on one battery instance.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyCheck {
    pub instance: String,
    pub reels: usize,
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, instance: &ProblemInstance, check: &str, value: f64, tolerance: f64) {
        self.checks.push(VerifyCheck {
            instance: describe(instance),
            reels: instance.reels(),
            check: check.to_string(),
            value,
            tolerance,
            passed: value <= tolerance,
        });
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv_writer();
        w.write_record(["instance", "N", "check", "value", "tolerance", "passed"])
            .map_err(csv_err)?;
        for c in &self.checks {
            w.write_record([
                c.instance.clone(),
                c.reels.to_string(),
                c.check.clone(),
                format!("{:.3e}", c.value),
                format!("{:.0e}", c.tolerance),
                c.passed.to_string(),
            ])
            .map_err(csv_err)?;
        }
        finish(w)
    }
}

/// `B=10 x={3,4} p={0.4,0.6} N=2`
pub fn describe(instance: &ProblemInstance) -> String {
    let list = |v: Vec<String>| v.join(",");
    format!(
        "B={} x={{{}}} p={{{}}} N={}",
        instance.capacity(),
        list(
            instance
                .dist()
                .weights()
                .iter()
                .map(|w| w.to_string())
                .collect()
        ),
        list(
            instance
                .dist()
                .probs()
                .iter()
                .map(|p| format!("{p}"))
                .collect()
        ),
        instance.reels()
    )
}

/// Small instances for [`run_verify_suite`]: capacities 8 to 15 with one to
/// three support weights, each at N = 1, 2, 3.
pub fn verify_battery() -> Vec<ProblemInstance> {
    let dists: [(Grams, &[Grams], &[f64]); 6] = [
        (8, &[2, 3], &[0.5, 0.5]),
        (10, &[3, 4], &[0.4, 0.6]),
        (10, &[3], &[1.0]),
        (12, &[3, 5, 7], &[0.3, 0.3, 0.4]),
        (12, &[5], &[1.0]),
        (15, &[4, 6, 9], &[0.5, 0.3, 0.2]),
    ];
    let mut out = Vec::new();
    for (capacity, weights, probs) in dists {
        let dist = ComponentDistribution::new(weights.to_vec(), probs.to_vec())
            .expect("battery distribution");
        for n in 1..=3 {
            out.push(
                ProblemInstance::new(format!("verify-b{capacity}"), capacity, n, dist.clone())
                    .expect("battery instance"),
            );
        }
    }
    out
}

pub const VERIFY_GAIN_TOL: f64 = 1e-8;
pub const VERIFY_RESIDUAL_TOL: f64 = 1e-8;
pub const VERIFY_IMPROVEMENT_TOL: f64 = 1e-9;
pub const VERIFY_THETAS: [f64; 3] = [0.0, 17.5, -3.0];

/// Runs the decomposition and improvement checks on `instances`.
pub fn run_verify_suite(instances: &[ProblemInstance], max_states: usize) -> Result<VerifyReport> {
    let opts = RviOptions::default().with_tolerance(1e-11);
    let mut report = VerifyReport::default();
    for instance in instances {
        let bias: Arc<BiasTable> = Arc::new(solve_single_reel_for(instance, &opts)?);
        report.push(
            instance,
            "single-reel-residual",
            bias.bellman_residual(),
            10.0 * opts.tolerance,
        );

        let space = StateSpace::enumerate(instance, false, max_states)?;
        let augmented = evaluate_policy_exact(instance, &Policy::Random, &space, &opts)?;
        let naive = evaluate_random_naive(instance, &space, &opts)?;
        report.push(
            instance,
            "random-augmented-equals-naive-gain",
            (augmented.gain - naive.gain).abs(),
            VERIFY_GAIN_TOL,
        );
        report.push(
            instance,
            "random-gain-equals-single-reel",
            (naive.gain - bias.gain).abs(),
            VERIFY_GAIN_TOL,
        );

        let additive = additive_naive_bias(&space, &bias);
        report.push(
            instance,
            "additive-naive-bias-residual",
            naive_random_residual(&space, bias.gain, &additive)?,
            VERIFY_RESIDUAL_TOL,
        );

        for theta in VERIFY_THETAS {
            let h = random_augmented_bias(&space, &bias, theta);
            let residual =
                bellman_error(instance, &space, &Policy::Random, bias.gain, &h)?.max_abs();
            report.push(
                instance,
                &format!("augmented-bias-residual(theta={theta})"),
                residual,
                VERIFY_RESIDUAL_TOL,
            );
        }

        let index = Policy::Index(bias.clone());
        let index_gain = evaluate_policy_exact(instance, &index, &space, &opts)?.gain;
        report.push(
            instance,
            "index-gain-minus-random-gain",
            index_gain - augmented.gain,
            VERIFY_IMPROVEMENT_TOL,
        );
        let h = random_augmented_bias(&space, &bias, 0.0);
        let err = bellman_error(instance, &space, &index, bias.gain, &h)?;
        report.push(
            instance,
            "index-bellman-error-max",
            err.max(),
            VERIFY_IMPROVEMENT_TOL,
        );
    }
    Ok(report)
}

/// `instance,N,policy,mean,stderr,ci95,horizon,reps,seed`
pub fn reports_csv(reports: &[SimulationReport]) -> Result<String> {
    let mut w = csv_writer();
    w.write_record([
        "instance", "N", "policy", "mean", "stderr", "ci95", "horizon", "reps", "seed",
    ])
    .map_err(csv_err)?;
    for r in reports {
        w.write_record([
            r.instance.clone(),
            r.reels.to_string(),
            r.policy.clone(),
            f3(r.mean),
            f3(r.std_error),
            f3(r.ci95),
            r.horizon.to_string(),
            r.replications.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn comparison_csv(cmp: &Comparison) -> Result<String> {
    let mut w = csv_writer();
    w.write_record([
        "instance",
        "N",
        "first",
        "second",
        "difference",
        "stderr",
        "ci95",
        "reps",
        "seed",
    ])
    .map_err(csv_err)?;
    let head = cmp
        .reports
        .first()
        .ok_or_else(|| Error::input("empty comparison"))?;
    for p in &cmp.pairs {
        w.write_record([
            head.instance.clone(),
            head.reels.to_string(),
            p.first.clone(),
            p.second.clone(),
            f3(p.mean_difference),
            f3(p.std_error),
            f3(p.ci95),
            head.replications.to_string(),
            head.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// `w,h1` for every weight `0..B`.
pub fn bias_csv(bias: &BiasTable) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(["w", "h1"]).map_err(csv_err)?;
    for (weight, h) in bias.h1.iter().enumerate() {
        w.write_record([weight.to_string(), f3(*h)])
            .map_err(csv_err)?;
    }
    finish(w)
}

/// `N,f,d2f` with `d2f` empty at the curve ends.
pub fn elbow_csv(curve: &[(usize, f64)], report: &ElbowReport) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(["N", "f", "d2f"]).map_err(csv_err)?;
    let mut points = curve.to_vec();
    points.sort_by_key(|&(n, _)| n);
    for (n, f) in points {
        let d2 = report
            .second_differences
            .iter()
            .find(|&&(m, _)| m == n)
            .map(|&(_, d)| f3(d))
            .unwrap_or_default();
        w.write_record([n.to_string(), f3(f), d2])
            .map_err(csv_err)?;
    }
    finish(w)
}

fn f3(v: f64) -> String {
    format!("{v:.3}")
}

fn opt_f3(v: Option<f64>) -> String {
    v.map(f3).unwrap_or_default()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}
