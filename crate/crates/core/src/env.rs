//! Bandit instances and pseudo-regret accounting.

use itertools::Itertools;
use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::family::{sigmoid, RewardFamily};
use crate::policy::select_arm;

/// Finite-armed instance with a fixed true parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    pub name: String,
    pub arms: Vec<DVector<f64>>,
    pub theta_star: DVector<f64>,
    pub family: RewardFamily,
    pub optimal_index: usize,
    pub optimal_mean: f64,
    means: Vec<f64>,
}

impl BanditInstance {
    /// Builds an instance; every arm must be feasible at `theta_star`.
    ///
    /// Arm norms are not restricted to the unit ball: the experiment arm sets
    /// are used as given.
    pub fn new(
        name: impl Into<String>,
        arms: Vec<DVector<f64>>,
        theta_star: DVector<f64>,
        family: RewardFamily,
    ) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::EmptyArmSet);
        }
        let means = arms
            .iter()
            .map(|x| {
                if x.len() != theta_star.len() {
                    return Err(Error::DimensionMismatch {
                        expected: theta_star.len(),
                        got: x.len(),
                    });
                }
                family.mean(x.dot(&theta_star))
            })
            .collect::<Result<Vec<_>>>()?;
        let optimal_index = select_arm(&arms, &theta_star, &family)?;
        Ok(BanditInstance {
            name: name.into(),
            optimal_mean: means[optimal_index],
            means,
            arms,
            theta_star,
            family,
            optimal_index,
        })
    }

    /// Looks up one of the named experiment instances: `logistic-high`,
    /// `logistic-low`, `rayleigh-est`, `rayleigh-bandit`.
    pub fn by_name(name: &str, normalize_arms: bool) -> Result<Self> {
        match name {
            "logistic-high" | "logistic-low" => {
                let mut arms = combinatorial_arms(10, 3);
                if normalize_arms {
                    for x in &mut arms {
                        let n = x.norm();
                        *x /= n;
                    }
                }
                let target = if name == "logistic-high" {
                    HIGH_VARIANCE_TARGET
                } else {
                    LOW_VARIANCE_TARGET
                };
                let theta = logistic_theta_star(&arms, target, MIN_MEAN_TARGET)?;
                BanditInstance::new(name, arms, theta, RewardFamily::logistic())
            }
            "rayleigh-est" => Ok(rayleigh_instances().0),
            "rayleigh-bandit" => Ok(rayleigh_instances().1),
            other => Err(Error::InvalidParameter(format!(
                "unknown instance `{other}`"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn mean(&self, arm: usize) -> Result<f64> {
        self.means.get(arm).copied().ok_or(Error::IndexOutOfRange {
            index: arm,
            len: self.arms.len(),
        })
    }

    /// `mu(x* theta*) - mu(x theta*)`.
    pub fn gap(&self, arm: usize) -> Result<f64> {
        Ok(self.optimal_mean - self.mean(arm)?)
    }

    /// Largest per-step regret.
    pub fn max_gap(&self) -> f64 {
        (0..self.arms.len())
            .map(|i| self.optimal_mean - self.means[i])
            .fold(0.0, f64::max)
    }

    pub fn play<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<f64> {
        let x = self.arms.get(arm).ok_or(Error::IndexOutOfRange {
            index: arm,
            len: self.arms.len(),
        })?;
        self.family.sample_reward(x.dot(&self.theta_star), rng)
    }
}

pub const HIGH_VARIANCE_TARGET: f64 = 0.15;
pub const LOW_VARIANCE_TARGET: f64 = 0.02;
pub const MIN_MEAN_TARGET: f64 = 0.1;

/// All `{0,1}^d` vectors with exactly `k` ones, in lexicographic order of
/// the positions of their ones.
pub fn combinatorial_arms(d: usize, k: usize) -> Vec<DVector<f64>> {
    assert!(k > 0 && k <= d, "need 0 < k <= d");
    (0..d)
        .combinations(k)
        .map(|ones| {
            let mut x = DVector::zeros(d);
            for i in ones {
                x[i] = 1.0;
            }
            x
        })
        .collect()
}

fn inverse_poly(d: usize, c1: f64, c2: f64) -> DVector<f64> {
    DVector::from_fn(d, |i, _| {
        let r = 1.0 + (i + 1) as f64 + c2;
        c1 / (r * r)
    })
}

/// `theta_i = c1 / (1 + i + c2)^2` with `min_x x^T theta = min_mean` and
/// `mu_dot(x*^T theta) = variance_target` under the logistic link.
///
/// For fixed `c2` the min-mean constraint is linear in `c1`, so `c1` is
/// solved exactly; `c2` is then found by bisection, the optimal inner product
/// being decreasing in `c2` once the minimum is pinned.
pub fn logistic_theta_star(
    arms: &[DVector<f64>],
    variance_target: f64,
    min_mean: f64,
) -> Result<DVector<f64>> {
    if arms.is_empty() {
        return Err(Error::EmptyArmSet);
    }
    if !(variance_target > 0.0 && variance_target < 0.25) || !(min_mean > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "unreachable targets: variance {variance_target}, min mean {min_mean}"
        )));
    }
    let d = arms[0].len();
    // x*^T theta on the positive branch of sigma(1 - sigma) = v.
    let s = 0.5 * (1.0 + (1.0 - 4.0 * variance_target).sqrt());
    let u_target = (s / (1.0 - s)).ln();
    if u_target <= min_mean {
        return Err(Error::InvalidParameter(
            "variance target implies an optimal mean below the minimum".into(),
        ));
    }

    let theta_for = |c2: f64| -> (DVector<f64>, f64) {
        let base = inverse_poly(d, 1.0, c2);
        let lo = arms
            .iter()
            .map(|x| x.dot(&base))
            .fold(f64::INFINITY, f64::min);
        let theta = base * (min_mean / lo);
        let hi = arms
            .iter()
            .map(|x| x.dot(&theta))
            .fold(f64::NEG_INFINITY, f64::max);
        (theta, hi)
    };

    // hi(c2) decreases from +inf (c2 -> -2) towards min-mean * ratio as c2 grows.
    let mut lo_c2 = -2.0 + 1e-9;
    let mut hi_c2 = 1.0;
    while theta_for(hi_c2).1 > u_target {
        hi_c2 *= 2.0;
        if hi_c2 > 1e12 {
            return Err(Error::InvalidParameter(
                "root finder failed to bracket c2".into(),
            ));
        }
    }
    if theta_for(lo_c2).1 < u_target {
        return Err(Error::InvalidParameter(
            "root finder failed to bracket c2".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo_c2 + hi_c2);
        if theta_for(mid).1 > u_target {
            lo_c2 = mid;
        } else {
            hi_c2 = mid;
        }
    }
    let (theta, hi) = theta_for(0.5 * (lo_c2 + hi_c2));
    let achieved = sigmoid(hi) * sigmoid(-hi);
    if (achieved - variance_target).abs() > 1e-4 {
        return Err(Error::InvalidParameter(format!(
            "root finder did not converge: variance {achieved}"
        )));
    }
    Ok(theta)
}

/// The estimation and bandit instances of the Rayleigh experiment, both with
/// `theta* = (0.9, 0.85)`.
pub fn rayleigh_instances() -> (BanditInstance, BanditInstance) {
    let theta = DVector::from_row_slice(&[0.9, 0.85]);
    let fam = RewardFamily::rayleigh();
    let est = BanditInstance::new(
        "rayleigh-est",
        vec![
            DVector::from_row_slice(&[1.0, 0.0]),
            DVector::from_row_slice(&[0.0, 1.0]),
        ],
        theta.clone(),
        fam,
    )
    .expect("valid instance");
    let bandit = BanditInstance::new(
        "rayleigh-bandit",
        vec![
            DVector::from_row_slice(&[1.0, 0.99]),
            DVector::from_row_slice(&[0.1, 0.05]),
        ],
        theta,
        fam,
    )
    .expect("valid instance");
    (est, bandit)
}

/// Per-round pseudo-regret for one replicate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretTrace {
    pub chosen: Vec<usize>,
    pub rewards: Vec<f64>,
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, instance: &BanditInstance, arm: usize, reward: f64) -> Result<()> {
        let gap = instance.gap(arm)?.max(0.0);
        let total = self.total() + gap;
        self.chosen.push(arm);
        self.rewards.push(reward);
        self.instantaneous.push(gap);
        self.cumulative.push(total);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}
