use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use lcs_core::adjustment::{lcs, LcsConfig};
use lcs_core::graph::{GraphKind, MixedGraph, NodeSet};
use lcs_core::independence::{CiEngine, Dataset};
use lcs_core::simbench::{run_experiment, ExperimentConfig, Method};
use lcs_core::LcsError;

#[derive(Parser)]
#[command(name = "lcs", version, about = "Local covariate selection for causal effect estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select covariates and estimate the effect from a CSV data set.
    Run {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        treatment: String,
        #[arg(long)]
        outcome: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Answer independence queries from a known DAG or MAG instead of data.
    Oracle {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        treatment: String,
        #[arg(long)]
        outcome: String,
        /// Comma-separated latent nodes of a DAG.
        #[arg(long, value_delimiter = ',')]
        latents: Vec<String>,
    },
    /// Run the synthetic benchmark and write results.csv, summary.json and runlog.jsonl.
    Simulate {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        degree: f64,
        #[arg(long = "latent-frac")]
        latent_frac: f64,
        /// Zero runs every method against the graph oracle.
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "lcs")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        ehs_max_pairs: Option<u64>,
        #[arg(long)]
        test_budget: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// 2 for configuration problems, 3 for unusable input data.
fn exit_code(e: &LcsError) -> u8 {
    match e {
        LcsError::Config(_) | LcsError::InvalidArguments(_) | LcsError::UnknownNode(_) | LcsError::WrongKind { .. } => 2,
        LcsError::Format(_)
        | LcsError::DegenerateData(_)
        | LcsError::RankDeficient(_)
        | LcsError::Io(_)
        | LcsError::Json(_)
        | LcsError::InvalidGraph(_)
        | LcsError::DuplicateNode(_)
        | LcsError::SelfLoop(_)
        | LcsError::MultiEdge(..) => 3,
        _ => 1,
    }
}

fn run(data: PathBuf, treatment: &str, outcome: &str, alpha: f64) -> lcs_core::Result<serde_json::Value> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LcsError::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let data = Dataset::from_csv_path(&data)?;
    let start = Instant::now();
    let mut engine = CiEngine::fisher_z(&data, alpha)?.with_cache();
    let (x, y) = (data.column_index(treatment)?, data.column_index(outcome)?);
    let observed: NodeSet = (0..data.columns().len()).collect();
    let out = lcs(&mut engine, x, y, &observed, &LcsConfig::default(), Some(&data))?;
    Ok(out.outcome.to_json(data.columns(), start.elapsed().as_millis()))
}

fn oracle(graph: PathBuf, treatment: &str, outcome: &str, latents: &[String]) -> lcs_core::Result<serde_json::Value> {
    let g = MixedGraph::from_json_str(&std::fs::read_to_string(graph)?)?;
    let report = g.validate();
    if !report.is_valid() {
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(LcsError::InvalidGraph(msgs.join("; ")));
    }
    if g.kind() == GraphKind::Pag {
        return Err(LcsError::WrongKind { expected: "dag or mag".into(), found: "pag".into() });
    }
    if !latents.is_empty() && g.kind() != GraphKind::Dag {
        return Err(LcsError::Config("latents can only be declared on a DAG".into()));
    }
    let hidden = g.indices_of(latents)?;
    let (x, y) = (g.index_of(treatment)?, g.index_of(outcome)?);
    if hidden.contains(&x) || hidden.contains(&y) {
        return Err(LcsError::Config("treatment and outcome must be observed".into()));
    }
    let observed: NodeSet = (0..g.n()).filter(|v| !hidden.contains(v)).collect();
    let labels = g.labels().to_vec();
    let start = Instant::now();
    let mut engine = CiEngine::oracle(g)?.with_cache();
    let out = lcs(&mut engine, x, y, &observed, &LcsConfig::default(), None)?;
    Ok(out.outcome.to_json(&labels, start.elapsed().as_millis()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match Cli::parse().command {
        Command::Run { data, treatment, outcome, alpha } => run(data, &treatment, &outcome, alpha),
        Command::Oracle { graph, treatment, outcome, latents } => oracle(graph, &treatment, &outcome, &latents),
        Command::Simulate {
            nodes,
            degree,
            latent_frac,
            samples,
            reps,
            seed,
            methods,
            alpha,
            ehs_max_pairs,
            test_budget,
            out,
        } => {
            let cfg = ExperimentConfig {
                n_nodes: nodes,
                avg_degree: degree,
                latent_fraction: latent_frac,
                n_samples: samples,
                n_reps: reps,
                alpha,
                seed,
                methods,
                ehs_max_pairs,
                test_budget,
            };
            run_experiment(&cfg).and_then(|report| {
                report.write_outputs(&out)?;
                Ok(serde_json::to_value(&report.summary)?)
            })
        }
    };
    match result {
        Ok(json) => {
            println!("{}", serde_json::to_string_pretty(&json).expect("JSON values serialize"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
