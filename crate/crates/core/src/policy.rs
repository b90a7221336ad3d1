//! Randomised arm-selection policies.
//!
//! Every policy proposes a parameter `theta_t` from the history and then acts
//! greedily with respect to it:
//!
//! * `Evill` minimises the loss plus a random linear term `W^T theta` whose
//!   covariance is `a^2 H(theta_hat)`.
//! * `Phe` and `Fpl` refit the loss on additively perturbed rewards. `Fpl`
//!   always uses unit-variance noise; `Phe` can optionally scale the noise by
//!   the Fisher information at the MLE.
//! * `Tsl` samples from the Laplace approximation `N(theta_hat, a^2 H^{-1})`.
//! * `Greedy` plays the MLE.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::family::RewardFamily;
use crate::history::History;
use crate::loss::{self, FitOptions, FitResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Evill,
    Phe,
    Fpl,
    Tsl,
    Greedy,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Evill,
        PolicyKind::Phe,
        PolicyKind::Fpl,
        PolicyKind::Tsl,
        PolicyKind::Greedy,
    ];
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Evill => "evill",
            PolicyKind::Phe => "phe",
            PolicyKind::Fpl => "fpl",
            PolicyKind::Tsl => "tsl",
            PolicyKind::Greedy => "greedy",
        })
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "evill" => Ok(PolicyKind::Evill),
            "phe" => Ok(PolicyKind::Phe),
            "fpl" => Ok(PolicyKind::Fpl),
            "tsl" | "ts" | "laplace" => Ok(PolicyKind::Tsl),
            "greedy" | "mle" => Ok(PolicyKind::Greedy),
            other => Err(Error::InvalidParameter(format!("unknown policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Perturbation scale `a`.
    pub a: f64,
    /// Ridge regulariser `lambda`.
    pub lambda: f64,
    /// For `Phe` only: scale reward noise by `I(x_i^T theta_hat)`.
    pub phe_fisher_scaled: bool,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind, a: f64, lambda: f64) -> Result<Self> {
        let spec = PolicySpec {
            kind,
            a,
            lambda,
            phe_fisher_scaled: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        let a_ok = if self.kind == PolicyKind::Greedy {
            self.a >= 0.0
        } else {
            self.a > 0.0
        };
        if !a_ok || !self.a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "perturbation scale a = {} is invalid for {}",
                self.a, self.kind
            )));
        }
        Ok(())
    }
}

/// The Gaussian draws `(Z_t, Z'_t)` used by one EVILL round.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationDraw {
    /// `d` draws for the regulariser term.
    pub z: DVector<f64>,
    /// One draw per past observation.
    pub z_prime: Vec<f64>,
}

impl PerturbationDraw {
    pub fn zeros(dim: usize, t: usize) -> Self {
        PerturbationDraw {
            z: DVector::zeros(dim),
            z_prime: vec![0.0; t],
        }
    }

    pub fn sample<R: Rng + ?Sized>(dim: usize, t: usize, rng: &mut R) -> Self {
        let z = DVector::from_fn(dim, |_, _| rng.sample(StandardNormal));
        let z_prime = (0..t).map(|_| rng.sample(StandardNormal)).collect();
        PerturbationDraw { z, z_prime }
    }
}

/// A sampled parameter together with the unperturbed MLE it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub theta: DVector<f64>,
    pub mle: DVector<f64>,
}

pub fn fit_mle(history: &History, lambda: f64, family: &RewardFamily) -> Result<FitResult> {
    loss::fit(history, lambda, family, None)
}

fn refit(
    history: &History,
    lambda: f64,
    family: &RewardFamily,
    linear: Option<&DVector<f64>>,
    start: &DVector<f64>,
) -> Result<FitResult> {
    loss::fit_from(
        history,
        lambda,
        family,
        linear,
        start.clone(),
        &FitOptions::default(),
    )
}

fn fisher_at(family: &RewardFamily, arm: &DVector<f64>, theta: &DVector<f64>) -> Result<f64> {
    let u = arm.dot(theta);
    family.fisher_info(u).map_err(|_| Error::Infeasible { u })
}

/// `W_t = a sqrt(lambda) Z_t + a sum_i I(x_i^T theta_hat)^{1/2} Z'_{t,i} x_i`.
pub fn evill_weight(
    history: &History,
    theta_hat: &DVector<f64>,
    spec: &PolicySpec,
    draw: &PerturbationDraw,
    family: &RewardFamily,
) -> Result<DVector<f64>> {
    let d = history.dim();
    if draw.z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: draw.z.len(),
        });
    }
    if draw.z_prime.len() != history.len() {
        return Err(Error::DimensionMismatch {
            expected: history.len(),
            got: draw.z_prime.len(),
        });
    }
    let mut w = &draw.z * (spec.a * spec.lambda.sqrt());
    for (x, zp) in history.arms().iter().zip(&draw.z_prime) {
        let scale = spec.a * fisher_at(family, x, theta_hat)?.sqrt() * zp;
        w.axpy(scale, x, 1.0);
    }
    Ok(w)
}

/// Samples `W_t` with the per-observation draws pooled by arm.
///
/// Observations at one arm share `I(x^T theta_hat)`, so their contribution
/// `sum_i Z'_i` is drawn as `sqrt(n_x) xi_x`; the law of `W_t` is unchanged.
pub fn sample_evill_weight<R: Rng + ?Sized>(
    history: &History,
    theta_hat: &DVector<f64>,
    spec: &PolicySpec,
    family: &RewardFamily,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let d = history.dim();
    let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut w = z * (spec.a * spec.lambda.sqrt());
    for g in history.groups() {
        let xi: f64 = rng.sample(StandardNormal);
        let scale = spec.a * (fisher_at(family, &g.arm, theta_hat)? * g.count as f64).sqrt() * xi;
        w.axpy(scale, &g.arm, 1.0);
    }
    Ok(w)
}

/// EVILL round with explicit draws.
pub fn evill_step_with_draw(
    history: &History,
    spec: &PolicySpec,
    family: &RewardFamily,
    draw: &PerturbationDraw,
) -> Result<Proposal> {
    let mle = fit_mle(history, spec.lambda, family)?.theta;
    let w = evill_weight(history, &mle, spec, draw, family)?;
    let theta = refit(history, spec.lambda, family, Some(&w), &mle)?.theta;
    Ok(Proposal { theta, mle })
}

pub fn evill_step<R: Rng + ?Sized>(
    history: &History,
    spec: &PolicySpec,
    family: &RewardFamily,
    rng: &mut R,
) -> Result<Proposal> {
    let mle = fit_mle(history, spec.lambda, family)?.theta;
    let w = sample_evill_weight(history, &mle, spec, family, rng)?;
    let theta = refit(history, spec.lambda, family, Some(&w), &mle)?.theta;
    Ok(Proposal { theta, mle })
}

/// Minimiser of the linearly extended loss on rewards `y_i + noise_i`.
pub fn phe_fit_with_noise(
    history: &History,
    lambda: f64,
    family: &RewardFamily,
    noise: &[f64],
    start: &DVector<f64>,
) -> Result<FitResult> {
    let perturbed = history.with_reward_noise(noise)?;
    refit(&perturbed, lambda, family, None, start)
}

/// Perturbed-history round.
///
/// Reward noise has variance `a^2 I(x_i^T theta_hat)` when `data_dependent`,
/// otherwise `a^2`. For families whose statistic is linear in `y` the noise
/// only enters through `- sum_i z_i x_i^T theta`, and is drawn pooled by arm.
pub fn phe_step<R: Rng + ?Sized>(
    history: &History,
    spec: &PolicySpec,
    family: &RewardFamily,
    rng: &mut R,
    data_dependent: bool,
) -> Result<Proposal> {
    let mle = fit_mle(history, spec.lambda, family)?.theta;
    let sd = |arm: &DVector<f64>| -> Result<f64> {
        Ok(if data_dependent {
            spec.a * fisher_at(family, arm, &mle)?.sqrt()
        } else {
            spec.a
        })
    };
    let theta = if family.statistic_is_linear() {
        let mut w = DVector::zeros(history.dim());
        for g in history.groups() {
            let xi: f64 = rng.sample(StandardNormal);
            let pooled = sd(&g.arm)? * (g.count as f64).sqrt() * xi;
            w.axpy(-pooled, &g.arm, 1.0);
        }
        refit(history, spec.lambda, family, Some(&w), &mle)?.theta
    } else {
        let mut noise = Vec::with_capacity(history.len());
        for x in history.arms() {
            let xi: f64 = rng.sample(StandardNormal);
            noise.push(sd(x)? * xi);
        }
        phe_fit_with_noise(history, spec.lambda, family, &noise, &mle)?.theta
    };
    Ok(Proposal { theta, mle })
}

/// `theta_hat + a L^{-T} xi` where `hessian = L L^T`.
pub fn laplace_sample(
    theta_hat: &DVector<f64>,
    hessian: &DMatrix<f64>,
    a: f64,
    xi: &DVector<f64>,
) -> Result<DVector<f64>> {
    let chol = hessian
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    let v = chol
        .l()
        .transpose()
        .solve_upper_triangular(xi)
        .ok_or(Error::NotPositiveDefinite)?;
    Ok(theta_hat + v * a)
}

pub fn tsl_step<R: Rng + ?Sized>(
    history: &History,
    spec: &PolicySpec,
    family: &RewardFamily,
    rng: &mut R,
) -> Result<Proposal> {
    let mle = fit_mle(history, spec.lambda, family)?.theta;
    let h = loss::hessian(&mle, history, spec.lambda, family)?;
    let xi = DVector::from_fn(history.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let theta = laplace_sample(&mle, &h, spec.a, &xi)?;
    Ok(Proposal { theta, mle })
}

pub fn greedy_step(
    history: &History,
    spec: &PolicySpec,
    family: &RewardFamily,
) -> Result<Proposal> {
    let mle = fit_mle(history, spec.lambda, family)?.theta;
    Ok(Proposal {
        theta: mle.clone(),
        mle,
    })
}

/// Dispatches on `spec.kind`.
pub fn propose<R: Rng + ?Sized>(
    history: &History,
    spec: &PolicySpec,
    family: &RewardFamily,
    rng: &mut R,
) -> Result<Proposal> {
    match spec.kind {
        PolicyKind::Evill => evill_step(history, spec, family, rng),
        PolicyKind::Phe => phe_step(history, spec, family, rng, spec.phe_fisher_scaled),
        PolicyKind::Fpl => phe_step(history, spec, family, rng, false),
        PolicyKind::Tsl => tsl_step(history, spec, family, rng),
        PolicyKind::Greedy => greedy_step(history, spec, family),
    }
}

/// Index of an arm maximising `mu(x^T theta)`; ties go to the lowest index.
///
/// The comparison is made on `x^T theta` directly (negated when `mu` is
/// decreasing), which is equivalent and immune to saturation of `mu`. Arms
/// outside the family domain are skipped.
pub fn select_arm(
    arms: &[DVector<f64>],
    theta: &DVector<f64>,
    family: &RewardFamily,
) -> Result<usize> {
    if arms.is_empty() {
        return Err(Error::EmptyArmSet);
    }
    let sign = if family.mean_is_increasing() {
        1.0
    } else {
        -1.0
    };
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in arms.iter().enumerate() {
        if x.len() != theta.len() {
            return Err(Error::DimensionMismatch {
                expected: theta.len(),
                got: x.len(),
            });
        }
        let u = x.dot(theta);
        if !family.is_feasible(u) {
            continue;
        }
        let score = sign * u;
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::AllInfeasible)
}

/// Arm choice for a proposal: falls back to the MLE when no arm is feasible
/// under the sampled parameter, and to index 0 when the MLE is also
/// infeasible everywhere (only possible before any data for Rayleigh).
pub fn choose_arm(
    arms: &[DVector<f64>],
    proposal: &Proposal,
    family: &RewardFamily,
) -> Result<usize> {
    match select_arm(arms, &proposal.theta, family) {
        Err(Error::AllInfeasible) => match select_arm(arms, &proposal.mle, family) {
            Err(Error::AllInfeasible) => Ok(0),
            other => other,
        },
        other => other,
    }
}
