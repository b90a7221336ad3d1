//! Replicate runners: warm-up followed by the policy loop, and the
//! estimation protocol where actions are fixed in advance.
//!
//! Every random draw comes from a stream keyed by `(seed, replicate, round,
//! kind)`, so a replicate's output depends only on its own key.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::design::{counts_to_pulls, design_to_counts, frank_wolfe_design, greedy_warmup};
use crate::env::{BanditInstance, RegretTrace};
use crate::error::{Error, Result};
use crate::history::History;
use crate::policy::{choose_arm, evill_step, fit_mle, phe_step, propose, PolicyKind, PolicySpec};
use crate::rng::{stream, StreamKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WarmupMethod {
    None,
    /// One pull of every arm, in shuffled order.
    UniformRandom,
    Greedy,
    KwDesign,
}

impl fmt::Display for WarmupMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WarmupMethod::None => "none",
            WarmupMethod::UniformRandom => "uniform-random",
            WarmupMethod::Greedy => "greedy",
            WarmupMethod::KwDesign => "kw-design",
        })
    }
}

impl FromStr for WarmupMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(WarmupMethod::None),
            "uniform-random" => Ok(WarmupMethod::UniformRandom),
            "greedy" => Ok(WarmupMethod::Greedy),
            "kw-design" => Ok(WarmupMethod::KwDesign),
            other => Err(Error::InvalidParameter(format!(
                "unknown warm-up `{other}`"
            ))),
        }
    }
}

/// Warm-up method plus the target `b` used by `greedy` and `kw-design`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmupSpec {
    pub method: WarmupMethod,
    pub b: f64,
}

impl WarmupSpec {
    pub fn none() -> Self {
        WarmupSpec {
            method: WarmupMethod::None,
            b: 1.0,
        }
    }

    pub fn uniform_random() -> Self {
        WarmupSpec {
            method: WarmupMethod::UniformRandom,
            b: 1.0,
        }
    }
}

/// Arm indices pulled during warm-up, in order.
pub fn warmup_pulls<R: Rng + ?Sized>(
    instance: &BanditInstance,
    warmup: &WarmupSpec,
    lambda: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    match warmup.method {
        WarmupMethod::None => Ok(Vec::new()),
        WarmupMethod::UniformRandom => {
            let mut order: Vec<usize> = (0..instance.arms.len()).collect();
            order.shuffle(rng);
            Ok(order)
        }
        WarmupMethod::Greedy => Ok(greedy_warmup(&instance.arms, lambda, warmup.b)?.chosen),
        WarmupMethod::KwDesign => {
            let design = frank_wolfe_design(&instance.arms, None, None)?;
            let counts = design_to_counts(&design.weights, warmup.b, instance.dim());
            Ok(counts_to_pulls(&counts))
        }
    }
}

/// Output of one bandit replicate. `trace` covers all `n` rounds, warm-up
/// included.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: u64,
    pub tau: usize,
    pub trace: RegretTrace,
}

/// A replicate aborted by an error; `round` is 1-based (0 for warm-up planning).
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFailure {
    pub replicate: u64,
    pub round: u64,
    pub error: Error,
}

impl fmt::Display for ReplicateFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "replicate {} failed at round {}: {}",
            self.replicate, self.round, self.error
        )
    }
}

impl std::error::Error for ReplicateFailure {}

/// Runs warm-up then the policy for rounds `tau + 1 ..= horizon`.
pub fn run_replicate(
    instance: &BanditInstance,
    spec: &PolicySpec,
    warmup: &WarmupSpec,
    horizon: usize,
    seed: u64,
    replicate: u64,
) -> std::result::Result<ReplicateOutcome, ReplicateFailure> {
    let fail = |round: u64| {
        move |error: Error| ReplicateFailure {
            replicate,
            round,
            error,
        }
    };
    spec.validate().map_err(fail(0))?;
    let mut warm_rng = stream(seed, replicate, 0, StreamKind::Warmup);
    let pulls = warmup_pulls(instance, warmup, spec.lambda, &mut warm_rng).map_err(fail(0))?;
    if pulls.len() > horizon {
        return Err(fail(0)(Error::InvalidParameter(format!(
            "warm-up length {} exceeds horizon {horizon}",
            pulls.len()
        ))));
    }
    let tau = pulls.len();
    let mut history = History::new(instance.dim());
    let mut trace = RegretTrace::new();
    for t in 1..=horizon as u64 {
        let arm = if (t as usize) <= tau {
            pulls[t as usize - 1]
        } else {
            let mut rng = stream(seed, replicate, t, StreamKind::Policy);
            let proposal = propose(&history, spec, &instance.family, &mut rng).map_err(fail(t))?;
            choose_arm(&instance.arms, &proposal, &instance.family).map_err(fail(t))?
        };
        let mut reward_rng = stream(seed, replicate, t, StreamKind::Reward);
        let reward = instance.play(arm, &mut reward_rng).map_err(fail(t))?;
        history
            .push(instance.arms[arm].clone(), reward)
            .map_err(fail(t))?;
        trace.record(instance, arm, reward).map_err(fail(t))?;
    }
    Ok(ReplicateOutcome {
        replicate,
        tau,
        trace,
    })
}

/// `100, 200, ..., max_n`.
pub fn estimation_grid(step: usize, max_n: usize) -> Vec<usize> {
    (1..=max_n / step).map(|k| k * step).collect()
}

/// `|theta - theta*|_2` of each estimator at one sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationPoint {
    pub n: usize,
    pub mle: f64,
    pub evill: f64,
    pub phe: f64,
}

/// Actions drawn uniformly from the arm set; at every grid size the MLE, one
/// EVILL draw and one PHE draw are computed on the same data.
pub fn run_estimation_replicate(
    instance: &BanditInstance,
    a: f64,
    lambda: f64,
    grid: &[usize],
    seed: u64,
    replicate: u64,
) -> std::result::Result<Vec<EstimationPoint>, ReplicateFailure> {
    let fail = |round: u64| {
        move |error: Error| ReplicateFailure {
            replicate,
            round,
            error,
        }
    };
    let evill = PolicySpec::new(PolicyKind::Evill, a, lambda).map_err(fail(0))?;
    let phe = PolicySpec::new(PolicyKind::Phe, a, lambda).map_err(fail(0))?;
    let family = &instance.family;
    let err = |theta: &DVector<f64>| (theta - &instance.theta_star).norm();
    let mut history = History::new(instance.dim());
    let mut out = Vec::with_capacity(grid.len());
    let mut next = 0;
    let max_n = grid.iter().copied().max().unwrap_or(0);
    for t in 1..=max_n as u64 {
        let mut rng = stream(seed, replicate, t, StreamKind::Data);
        let arm = rng.random_range(0..instance.arms.len());
        let reward = instance.play(arm, &mut rng).map_err(fail(t))?;
        history
            .push(instance.arms[arm].clone(), reward)
            .map_err(fail(t))?;
        while next < grid.len() && grid[next] == t as usize {
            let mle = fit_mle(&history, lambda, family).map_err(fail(t))?.theta;
            let mut prng = stream(seed, replicate, t, StreamKind::Policy);
            let ev = evill_step(&history, &evill, family, &mut prng).map_err(fail(t))?;
            let ph = phe_step(&history, &phe, family, &mut prng, false).map_err(fail(t))?;
            out.push(EstimationPoint {
                n: t as usize,
                mle: err(&mle),
                evill: err(&ev.theta),
                phe: err(&ph.theta),
            });
            next += 1;
        }
    }
    Ok(out)
}
