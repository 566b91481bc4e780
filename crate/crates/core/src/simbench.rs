//! Synthetic benchmark: random DAGs, linear-Gaussian SCMs and the replicate
//! loop that compares LCS with the exhaustive baseline.
//!
//! Every replicate draws from its own ChaCha8 stream (`seed`, stream = rep
//! index), so serial and parallel runs produce the same rows.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjustment::{ehs_baseline, gac_satisfied_backdoor, lcs, EhsConfig, LcsConfig, LcsOutcome, Verdict};
use crate::error::{LcsError, Result};
use crate::estimate::{estimate_effect_ols, population_effect, relative_error, true_effect, ScmSpec};
use crate::graph::{Edge, GraphKind, MixedGraph, NodeSet};
use crate::independence::{CiEngine, Dataset, DEFAULT_ALPHA};

/// Redraws allowed when the drawn target pair is unusable.
pub const PAIR_REDRAWS: usize = 100;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős-Rényi DAG: a random topological order, then each ordered pair gets
/// an edge with probability `d / (n - 1)`. Labels are `V1..Vn`.
pub fn gen_er_dag(n: usize, d: f64, seed: u64) -> Result<MixedGraph> {
    if n < 2 || d < 0.0 || d > (n - 1) as f64 {
        return Err(LcsError::Config(format!("need n >= 2 and 0 <= d <= n - 1, got n = {n}, d = {d}")));
    }
    let mut r = rng(seed);
    let p = d / (n - 1) as f64;
    let order = sample_indices(&mut r, n, n).into_vec();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen_bool(p) {
                edges.push(Edge::directed(order[i], order[j]));
            }
        }
    }
    let labels: Vec<String> = (1..=n).map(|i| format!("V{i}")).collect();
    MixedGraph::from_edges(GraphKind::Dag, &labels, &edges)
}

/// Weights i.i.d. Uniform[0.5, 1.5] in edge order, standard normal noise.
pub fn gen_linear_scm(dag: &MixedGraph, seed: u64) -> Result<ScmSpec> {
    let mut r = rng(seed);
    let u = Uniform::new_inclusive(0.5, 1.5);
    let weights: BTreeMap<(usize, usize), f64> = dag
        .edges()
        .iter()
        .map(|e| if dag.is_directed(e.a, e.b) { (e.a, e.b) } else { (e.b, e.a) })
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|k| (k, u.sample(&mut r)))
        .collect();
    ScmSpec::new(dag.clone(), weights, vec![1.0; dag.n()], NodeSet::new())
}

/// Uniform `k`-subset of the nodes with at least two children.
pub fn choose_latents(dag: &MixedGraph, k: usize, seed: u64) -> NodeSet {
    let eligible: Vec<usize> = (0..dag.n()).filter(|&v| dag.children(v).len() >= 2).collect();
    if eligible.len() < k {
        log::warn!("only {} nodes have two or more children, {k} latents requested", eligible.len());
        return eligible.into_iter().collect();
    }
    let mut r = rng(seed);
    sample_indices(&mut r, eligible.len(), k).into_iter().map(|i| eligible[i]).collect()
}

/// Ancestral sampling; latent columns are dropped.
pub fn sample(scm: &ScmSpec, n_samples: usize, seed: u64) -> Result<Dataset> {
    let g = scm.dag();
    let order = g.topological_order().ok_or_else(|| LcsError::InvalidGraph("cycle".into()))?;
    let mut r = rng(seed);
    let mut full = DMatrix::<f64>::zeros(n_samples, g.n());
    for i in 0..n_samples {
        for &v in &order {
            let noise: f64 = StandardNormal.sample(&mut r);
            let mean: f64 = g.parents(v).iter().map(|&p| scm.weight(p, v).unwrap_or(0.0) * full[(i, p)]).sum();
            full[(i, v)] = mean + scm.noise_sd()[v] * noise;
        }
    }
    let obs: Vec<usize> = scm.observed().into_iter().collect();
    let data = full.select_columns(obs.iter());
    Dataset::new(obs.iter().map(|&v| g.label(v).to_string()).collect(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lcs,
    Ehs,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Lcs => "lcs",
            Method::Ehs => "ehs",
        })
    }
}

impl FromStr for Method {
    type Err = LcsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lcs" => Ok(Method::Lcs),
            "ehs" => Ok(Method::Ehs),
            other => Err(LcsError::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_nodes: usize,
    pub avg_degree: f64,
    pub latent_fraction: f64,
    /// Zero switches every engine to the graph oracle.
    pub n_samples: usize,
    pub n_reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Pair cap for the exhaustive baseline.
    pub ehs_max_pairs: Option<u64>,
    /// Per-method test budget. A replicate that runs out is recorded with
    /// case `budget_exhausted` and `n_tests` equal to the budget, a lower
    /// bound on its true count.
    #[serde(default)]
    pub test_budget: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_nodes: 20,
            avg_degree: 3.0,
            latent_fraction: 0.1,
            n_samples: 0,
            n_reps: 10,
            alpha: DEFAULT_ALPHA,
            seed: 0,
            methods: vec![Method::Lcs],
            ehs_max_pairs: None,
            test_budget: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LcsError::Config(m));
        if self.n_nodes < 4 {
            return bad(format!("n_nodes must be at least 4, got {}", self.n_nodes));
        }
        if self.n_reps < 1 {
            return bad("n_reps must be at least 1".into());
        }
        if self.avg_degree < 1.0 || self.avg_degree > (self.n_nodes - 1) as f64 {
            return bad(format!("avg_degree must lie in [1, n - 1], got {}", self.avg_degree));
        }
        if !(0.0..=1.0).contains(&self.latent_fraction) {
            return bad(format!("latent_fraction must lie in [0, 1], got {}", self.latent_fraction));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        Ok(())
    }

    pub fn n_latents(&self) -> usize {
        (self.latent_fraction * self.n_nodes as f64).round() as usize
    }

    pub fn oracle_mode(&self) -> bool {
        self.n_samples == 0
    }
}

/// One method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepResult {
    pub rep: usize,
    pub method: Method,
    pub x: String,
    pub y: String,
    pub case: String,
    pub rule: String,
    pub adjustment: String,
    pub truth: f64,
    pub estimate: Option<f64>,
    /// Present iff the case is identifiable and the truth is non-zero.
    pub re: Option<f64>,
    /// Absolute error for identifiable cases with zero truth.
    pub abs_error: Option<f64>,
    /// Adjustment validity against the true DAG.
    pub valid: Option<bool>,
    pub n_tests: u64,
    pub runtime_ms: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub rows: usize,
    pub failures: usize,
    pub identifiable: usize,
    pub zero: usize,
    pub non_identifiable: usize,
    /// Rows that hit the test budget; their `n_tests` are lower bounds.
    pub budget_exhausted: usize,
    pub median_re: Option<f64>,
    pub mean_re: Option<f64>,
    pub mean_n_tests: f64,
    pub median_n_tests: f64,
    pub invalid_adjustments: usize,
    /// Zero verdicts where the truth is non-zero.
    pub false_zeros: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub methods: BTreeMap<Method, MethodSummary>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<RepResult>,
    pub summary: Summary,
    pub runlog: Vec<serde_json::Value>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[m] } else { (values[m - 1] + values[m]) / 2.0 })
}

fn summarize(rows: &[RepResult], method: Method) -> MethodSummary {
    let mine: Vec<&RepResult> = rows.iter().filter(|r| r.method == method).collect();
    let ok: Vec<&&RepResult> = mine.iter().filter(|r| r.error.is_none()).collect();
    let mut re: Vec<f64> = ok.iter().filter_map(|r| r.re).collect();
    let mut tests: Vec<f64> = ok.iter().map(|r| r.n_tests as f64).collect();
    let count = |c: &str| ok.iter().filter(|r| r.case == c).count();
    MethodSummary {
        rows: mine.len(),
        failures: mine.len() - ok.len(),
        identifiable: count("identifiable"),
        zero: count("zero"),
        non_identifiable: count("non_identifiable"),
        budget_exhausted: count("budget_exhausted"),
        mean_re: (!re.is_empty()).then(|| re.iter().sum::<f64>() / re.len() as f64),
        median_re: median(&mut re),
        mean_n_tests: if tests.is_empty() { 0.0 } else { tests.iter().sum::<f64>() / tests.len() as f64 },
        median_n_tests: median(&mut tests).unwrap_or(0.0),
        invalid_adjustments: ok.iter().filter(|r| r.valid == Some(false)).count(),
        false_zeros: ok.iter().filter(|r| r.case == "zero" && r.truth != 0.0).count(),
    }
}

/// Everything drawn for one replicate before any method runs.
#[derive(Debug, Clone)]
pub struct Instance {
    pub scm: ScmSpec,
    pub x: usize,
    pub y: usize,
    pub data: Option<Dataset>,
}

/// Draws graph, latents, weights, target pair and (unless in oracle mode)
/// data for replicate `rep`.
pub fn draw_instance(cfg: &ExperimentConfig, rep: usize) -> Result<Instance> {
    let mut r = rng(cfg.seed);
    r.set_stream(rep as u64);
    let dag = gen_er_dag(cfg.n_nodes, cfg.avg_degree, r.gen())?;
    let latents = choose_latents(&dag, cfg.n_latents(), r.gen());
    let scm = gen_linear_scm(&dag, r.gen())?.with_latents(latents)?;
    let n = cfg.n_nodes;
    let mut pair = None;
    for _ in 0..PAIR_REDRAWS {
        let (x, y) = (r.gen_range(0..n), r.gen_range(0..n));
        if x != y && !scm.latents().contains(&x) && !scm.latents().contains(&y) {
            pair = Some((x, y));
            break;
        }
    }
    let (x, y) = pair.ok_or_else(|| LcsError::Config(format!("no usable target pair after {PAIR_REDRAWS} draws")))?;
    let data_seed: u64 = r.gen();
    let data = if cfg.oracle_mode() { None } else { Some(sample(&scm, cfg.n_samples, data_seed)?) };
    Ok(Instance { scm, x, y, data })
}

/// Outcome, effect estimate and adjustment labels of one method.
type MethodRun = (LcsOutcome, Option<f64>, Vec<String>, serde_json::Value);

fn run_method(cfg: &ExperimentConfig, inst: &Instance, method: Method) -> Result<MethodRun> {
    let dag = inst.scm.dag();
    let (mut engine, x, y, observed) = match &inst.data {
        None => (CiEngine::oracle(dag.clone())?, inst.x, inst.y, inst.scm.observed()),
        Some(d) => {
            let e = CiEngine::fisher_z(d, cfg.alpha)?;
            let (x, y) = (d.column_index(dag.label(inst.x))?, d.column_index(dag.label(inst.y))?);
            (e, x, y, (0..d.columns().len()).collect())
        }
    };
    if let Some(b) = cfg.test_budget {
        engine = engine.with_budget(b);
    }
    let (outcome, extra) = match method {
        Method::Lcs => {
            engine = engine.with_cache();
            let run = lcs(&mut engine, x, y, &observed, &LcsConfig::default(), inst.data.as_ref())?;
            let extra = serde_json::json!({
                "mb": engine_labels(&engine, &run.local.mb),
                "processed": run.local.processed.iter().map(|&v| engine.labels()[v].clone()).collect::<Vec<_>>(),
            });
            (run.outcome, extra)
        }
        Method::Ehs => {
            let cfg = EhsConfig { max_pairs: cfg.ehs_max_pairs };
            let mut out = ehs_baseline(&mut engine, x, y, &observed, &cfg)?;
            if let (Some(d), Verdict::IdentifiableNonZero { adjustment, effect }) = (&inst.data, &mut out.verdict) {
                let zl = engine_labels(&engine, adjustment);
                *effect = Some(estimate_effect_ols(d, dag.label(inst.x), dag.label(inst.y), &zl)?);
            }
            let extra = serde_json::json!({ "cap_exceeded": out.cap_exceeded });
            (out, extra)
        }
    };
    let labels = outcome.verdict.adjustment().map(|z| engine_labels(&engine, z)).unwrap_or_default();
    // the adjustment set in DAG indices
    let dag_z = outcome
        .verdict
        .adjustment()
        .map(|_| labels.iter().map(|l| dag.index_of(l)).collect::<Result<NodeSet>>())
        .transpose()?;
    let estimate = match (&outcome.verdict, &dag_z) {
        (Verdict::IdentifiableNonZero { effect: Some(e), .. }, _) => Some(*e),
        (Verdict::IdentifiableNonZero { effect: None, .. }, Some(z)) => Some(population_effect(&inst.scm, inst.x, inst.y, z)?),
        (Verdict::Zero, _) => Some(0.0),
        _ => None,
    };
    Ok((outcome, estimate, labels, extra))
}

fn engine_labels(engine: &CiEngine, set: &NodeSet) -> Vec<String> {
    set.iter().map(|&v| engine.labels()[v].clone()).collect()
}

/// Runs every configured method on replicate `rep`.
pub fn run_rep(cfg: &ExperimentConfig, rep: usize) -> (Vec<RepResult>, Vec<serde_json::Value>) {
    let inst = match draw_instance(cfg, rep) {
        Ok(i) => i,
        Err(e) => {
            let rows = cfg
                .methods
                .iter()
                .map(|&m| failed_row(rep, m, "", "", 0.0, e.to_string()))
                .collect();
            return (rows, vec![serde_json::json!({ "rep": rep, "error": e.to_string() })]);
        }
    };
    let dag = inst.scm.dag();
    let (xl, yl) = (dag.label(inst.x).to_string(), dag.label(inst.y).to_string());
    let truth = true_effect(&inst.scm, inst.x, inst.y).expect("pair is in range");
    let mut rows = Vec::new();
    let mut log = Vec::new();
    for &method in &cfg.methods {
        let start = Instant::now();
        let res = run_method(cfg, &inst, method);
        let runtime_ms = start.elapsed().as_millis() as u64;
        match res {
            Ok((outcome, estimate, labels, extra)) => {
                let identifiable = matches!(outcome.verdict, Verdict::IdentifiableNonZero { .. });
                let valid = identifiable.then(|| {
                    let dz: NodeSet = labels.iter().map(|l| dag.index_of(l).expect("label")).collect();
                    gac_satisfied_backdoor(dag, inst.x, inst.y, &dz).unwrap_or(false)
                });
                let (re, abs_error) = match (identifiable, estimate) {
                    (true, Some(e)) if truth != 0.0 => (relative_error(e, truth).ok(), None),
                    (true, Some(e)) => (None, Some(e.abs())),
                    _ => (None, None),
                };
                log.push(serde_json::json!({
                    "rep": rep,
                    "method": method,
                    "x": xl,
                    "y": yl,
                    "latents": dag.labels_of(inst.scm.latents()),
                    "case": outcome.verdict.label(),
                    "rule": outcome.rule.as_str(),
                    "adjustment": labels,
                    "n_tests": outcome.n_tests,
                    "detail": extra,
                }));
                rows.push(RepResult {
                    rep,
                    method,
                    x: xl.clone(),
                    y: yl.clone(),
                    case: outcome.verdict.label().to_string(),
                    rule: outcome.rule.as_str().to_string(),
                    adjustment: labels.join(" "),
                    truth,
                    estimate,
                    re,
                    abs_error,
                    valid,
                    n_tests: outcome.n_tests,
                    runtime_ms,
                    error: None,
                });
            }
            Err(LcsError::BudgetExhausted(b)) => {
                log.push(serde_json::json!({ "rep": rep, "method": method, "case": "budget_exhausted", "n_tests": b }));
                let mut row = failed_row(rep, method, &xl, &yl, truth, String::new());
                row.case = "budget_exhausted".into();
                row.error = None;
                row.n_tests = b;
                row.runtime_ms = runtime_ms;
                rows.push(row);
            }
            Err(e) => {
                log.push(serde_json::json!({ "rep": rep, "method": method, "error": e.to_string() }));
                let mut row = failed_row(rep, method, &xl, &yl, truth, e.to_string());
                row.runtime_ms = runtime_ms;
                rows.push(row);
            }
        }
    }
    (rows, log)
}

fn failed_row(rep: usize, method: Method, x: &str, y: &str, truth: f64, error: String) -> RepResult {
    RepResult {
        rep,
        method,
        x: x.into(),
        y: y.into(),
        case: "failed".into(),
        rule: "none".into(),
        adjustment: String::new(),
        truth,
        estimate: None,
        re: None,
        abs_error: None,
        valid: None,
        n_tests: 0,
        runtime_ms: 0,
        error: Some(error),
    }
}

/// Runs all replicates on the rayon pool and aggregates per method.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let per_rep: Vec<_> = (0..cfg.n_reps).into_par_iter().map(|rep| run_rep(cfg, rep)).collect();
    let mut rows = Vec::new();
    let mut runlog = Vec::new();
    for (r, l) in per_rep {
        rows.extend(r);
        runlog.extend(l);
    }
    let methods = cfg.methods.iter().map(|&m| (m, summarize(&rows, m))).collect();
    Ok(ExperimentReport { rows, summary: Summary { config: cfg.clone(), methods }, runlog })
}

impl ExperimentReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wr.serialize(row).map_err(|e| LcsError::Format(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Writes `results.csv`, `summary.json` and `runlog.jsonl` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join("results.csv"))?)?;
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&self.summary)?)?;
        let mut lines = String::new();
        for entry in &self.runlog {
            lines.push_str(&serde_json::to_string(entry)?);
            lines.push('\n');
        }
        std::fs::write(dir.join("runlog.jsonl"), lines)?;
        Ok(())
    }
}
