//! Replicate execution, aggregation and output files.

use std::fs;
use std::path::Path;

use evill_core::experiment::{
    estimation_grid, run_estimation_replicate, run_replicate, EstimationPoint, ReplicateFailure,
    ReplicateOutcome,
};
use evill_core::stats::{mean, quartiles, standard_error};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EstimationConfig, RunPlan};
use crate::error::{CliError, Result};

/// Environment variable holding the worker count.
pub const WORKERS_VAR: &str = "EVILL_WORKERS";

/// Worker count from `EVILL_WORKERS`, defaulting to the available parallelism.
pub fn workers() -> Result<usize> {
    match std::env::var(WORKERS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Validation(format!(
                "{WORKERS_VAR} must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Validation(e.to_string()))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FailureRecord {
    pub replicate: u64,
    pub round: u64,
    pub message: String,
}

impl From<&ReplicateFailure> for FailureRecord {
    fn from(f: &ReplicateFailure) -> Self {
        FailureRecord {
            replicate: f.replicate,
            round: f.round,
            message: f.error.to_string(),
        }
    }
}

/// Final-regret statistics over the replicates that completed.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunSummary {
    pub instance: String,
    pub policy: String,
    pub a: f64,
    pub lambda: f64,
    pub phe_fisher_scaled: bool,
    pub warmup: String,
    pub warmup_b: f64,
    pub normalize_arms: bool,
    pub horizon: usize,
    pub replicates: u64,
    pub seed: u64,
    pub max_gap: f64,
    pub final_regret: Vec<f64>,
    pub tau: Vec<usize>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub mean: Option<f64>,
    pub standard_error: Option<f64>,
    pub failures: Vec<FailureRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub outcomes: Vec<ReplicateOutcome>,
    pub summary: RunSummary,
}

pub fn run(plan: &RunPlan, workers: usize) -> Result<RunOutput> {
    let c = &plan.config;
    let results: Vec<_> = pool(workers)?.install(|| {
        (0..c.replicates)
            .into_par_iter()
            .map(|r| {
                run_replicate(
                    &plan.instance,
                    &plan.spec,
                    &plan.warmup,
                    c.horizon,
                    c.seed,
                    r,
                )
            })
            .collect()
    });
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(f) => failures.push(FailureRecord::from(&f)),
        }
    }
    let finals: Vec<f64> = outcomes.iter().map(|o| o.trace.total()).collect();
    let q = quartiles(&finals);
    let summary = RunSummary {
        instance: c.instance.clone(),
        policy: plan.spec.kind.to_string(),
        a: plan.spec.a,
        lambda: plan.spec.lambda,
        phe_fisher_scaled: plan.spec.phe_fisher_scaled,
        warmup: plan.warmup.method.to_string(),
        warmup_b: plan.warmup.b,
        normalize_arms: c.normalize_arms,
        horizon: c.horizon,
        replicates: c.replicates,
        seed: c.seed,
        max_gap: plan.instance.max_gap(),
        tau: outcomes.iter().map(|o| o.tau).collect(),
        q1: q.map(|q| q.q1),
        median: q.map(|q| q.median),
        q3: q.map(|q| q.q3),
        mean: mean(&finals),
        standard_error: standard_error(&finals),
        final_regret: finals,
        failures,
    };
    Ok(RunOutput { outcomes, summary })
}

#[derive(Serialize)]
struct TraceRow {
    replicate: u64,
    t: usize,
    arm: usize,
    reward: f64,
    inst_regret: f64,
    cum_regret: f64,
}

pub const TRACE_HEADER: &str = "replicate,t,arm,reward,inst_regret,cum_regret";

/// Writes one trace in the CSV schema, header included.
pub fn write_trace<W: std::io::Write>(out: W, outcome: &ReplicateOutcome) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let tr = &outcome.trace;
    for i in 0..tr.len() {
        w.serialize(TraceRow {
            replicate: outcome.replicate,
            t: i + 1,
            arm: tr.chosen[i],
            reward: tr.rewards[i],
            inst_regret: tr.instantaneous[i],
            cum_regret: tr.cumulative[i],
        })?;
    }
    if tr.is_empty() {
        w.write_record(TRACE_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_file_name(replicate: u64) -> String {
    format!("trace_{replicate:04}.csv")
}

/// `trace_NNNN.csv` per completed replicate plus `summary.json`.
pub fn write_run(output: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for o in &output.outcomes {
        let f = fs::File::create(dir.join(trace_file_name(o.replicate)))?;
        write_trace(std::io::BufWriter::new(f), o)?;
    }
    let json = serde_json::to_string_pretty(&output.summary)?;
    fs::write(dir.join("summary.json"), json + "\n")?;
    Ok(())
}

/// Mean and standard error of each estimator's error at one sample size.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    pub mle_mean: f64,
    pub mle_se: f64,
    pub evill_mean: f64,
    pub evill_se: f64,
    pub phe_mean: f64,
    pub phe_se: f64,
}

#[derive(Debug, Clone)]
pub struct EstimationOutput {
    pub curve: Vec<CurvePoint>,
    pub failures: Vec<FailureRecord>,
}

pub fn run_estimation(config: &EstimationConfig, workers: usize) -> Result<EstimationOutput> {
    let instance = config.validate()?;
    let grid = estimation_grid(config.step, config.max_n);
    let results: Vec<_> = pool(workers)?.install(|| {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                run_estimation_replicate(&instance, config.a, config.lambda, &grid, config.seed, r)
            })
            .collect()
    });
    let mut reps: Vec<Vec<EstimationPoint>> = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(p) => reps.push(p),
            Err(f) => failures.push(FailureRecord::from(&f)),
        }
    }
    let curve = grid
        .iter()
        .enumerate()
        .filter(|_| !reps.is_empty())
        .map(|(i, &n)| {
            let col = |f: fn(&EstimationPoint) -> f64| -> Vec<f64> {
                reps.iter().map(|p| f(&p[i])).collect()
            };
            let (m, e, p) = (col(|p| p.mle), col(|p| p.evill), col(|p| p.phe));
            CurvePoint {
                n,
                mle_mean: mean(&m).unwrap_or(f64::NAN),
                mle_se: standard_error(&m).unwrap_or(f64::NAN),
                evill_mean: mean(&e).unwrap_or(f64::NAN),
                evill_se: standard_error(&e).unwrap_or(f64::NAN),
                phe_mean: mean(&p).unwrap_or(f64::NAN),
                phe_se: standard_error(&p).unwrap_or(f64::NAN),
            }
        })
        .collect();
    Ok(EstimationOutput { curve, failures })
}

/// `estimation.csv` with one row per sample size, plus `failures.json`.
pub fn write_estimation(output: &EstimationOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("estimation.csv"))?;
    for p in &output.curve {
        w.serialize(p)?;
    }
    w.flush()?;
    let json = serde_json::to_string_pretty(&output.failures)?;
    fs::write(dir.join("failures.json"), json + "\n")?;
    Ok(())
}
