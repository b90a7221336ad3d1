//! Single-parameter reward families.
//!
//! Every family here can be written in the exponential form
//!
//! ```text
//! -log p(y; u) = A(u) - T(y) u + c(y)
//! ```
//!
//! with log-partition `A`, sufficient statistic `T` and a base term `c` that
//! does not depend on `u`. Logistic and Gaussian are natural exponential
//! families (`T(y) = y`, `A'' = mu_dot = I`); Rayleigh has `T(y) = -y^2`,
//! `A(u) = -log u` and a decreasing mean map. The loss, gradient and Hessian
//! in [`crate::loss`] are written against this form so that observations at
//! the same arm can be pooled into sufficient statistics.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    Logistic,
    Gaussian,
    Rayleigh,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Logistic => "logistic",
            FamilyKind::Gaussian => "gaussian",
            FamilyKind::Rayleigh => "rayleigh",
        })
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logistic" | "bernoulli" => Ok(FamilyKind::Logistic),
            "gaussian" | "normal" => Ok(FamilyKind::Gaussian),
            "rayleigh" => Ok(FamilyKind::Rayleigh),
            other => Err(Error::InvalidParameter(format!("unknown family `{other}`"))),
        }
    }
}

/// A reward family `(P(.; u))_{u in U}` together with its analytic maps.
///
/// Immutable after construction; cheap to copy and share between replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardFamily {
    kind: FamilyKind,
    /// Lower end of the natural domain `U` (may be `-inf`).
    pub domain_lo: f64,
    /// Upper end of `U` (may be `+inf`).
    pub domain_hi: f64,
    /// Self-concordance constant `M`. Infinite when the family has none.
    pub self_concordance: f64,
    /// Upper bound `L` on `mu_dot`. Infinite when unbounded.
    pub variance_bound: f64,
}

impl RewardFamily {
    pub fn new(kind: FamilyKind) -> Self {
        match kind {
            FamilyKind::Logistic => RewardFamily {
                kind,
                domain_lo: f64::NEG_INFINITY,
                domain_hi: f64::INFINITY,
                self_concordance: 0.25,
                variance_bound: 0.5,
            },
            FamilyKind::Gaussian => RewardFamily {
                kind,
                domain_lo: f64::NEG_INFINITY,
                domain_hi: f64::INFINITY,
                self_concordance: 0.0,
                variance_bound: 1.0,
            },
            // Not self-concordant and with unbounded variance as u -> 0.
            FamilyKind::Rayleigh => RewardFamily {
                kind,
                domain_lo: 0.0,
                domain_hi: f64::INFINITY,
                self_concordance: f64::INFINITY,
                variance_bound: f64::INFINITY,
            },
        }
    }

    pub fn logistic() -> Self {
        Self::new(FamilyKind::Logistic)
    }

    pub fn gaussian() -> Self {
        Self::new(FamilyKind::Gaussian)
    }

    pub fn rayleigh() -> Self {
        Self::new(FamilyKind::Rayleigh)
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    /// Whether the family is a natural exponential family (`I = mu_dot`).
    pub fn is_nef(&self) -> bool {
        matches!(self.kind, FamilyKind::Logistic | FamilyKind::Gaussian)
    }

    /// `true` when `mu` is increasing on `U`.
    pub fn mean_is_increasing(&self) -> bool {
        self.is_nef()
    }

    /// Whether `u` lies in the interior of `U`.
    pub fn is_feasible(&self, u: f64) -> bool {
        u.is_finite() && u > self.domain_lo && u < self.domain_hi
    }

    fn check(&self, u: f64) -> Result<()> {
        if self.is_feasible(u) {
            Ok(())
        } else {
            Err(Error::Domain {
                family: self.kind,
                u,
            })
        }
    }

    /// Mean map `mu(u)`.
    pub fn mean(&self, u: f64) -> Result<f64> {
        self.check(u)?;
        Ok(match self.kind {
            FamilyKind::Logistic => sigmoid(u),
            FamilyKind::Gaussian => u,
            FamilyKind::Rayleigh => 0.5 * (PI / u).sqrt(),
        })
    }

    /// Derivative of the mean map, `mu_dot(u)`.
    pub fn mean_derivative(&self, u: f64) -> Result<f64> {
        self.check(u)?;
        Ok(match self.kind {
            FamilyKind::Logistic => sigmoid(u) * sigmoid(-u),
            FamilyKind::Gaussian => 1.0,
            FamilyKind::Rayleigh => -0.25 * PI.sqrt() * u.powf(-1.5),
        })
    }

    /// Fisher information map `I(u)`.
    ///
    /// For the natural exponential families this is the same code path as
    /// `mu_dot`; for Rayleigh it is `1/u^2`.
    pub fn fisher_info(&self, u: f64) -> Result<f64> {
        self.check(u)?;
        Ok(self.log_partition_d2(u))
    }

    /// `-log p(y; u)` extended linearly to every real `y`.
    ///
    /// Returns `+inf` when `u` is outside the domain so that line searches
    /// reject infeasible points. The Gaussian `log(2 pi)/2` constant is dropped.
    pub fn nll_term(&self, y: f64, u: f64) -> f64 {
        self.log_partition(u) - self.statistic(y) * u + self.base_term(y)
    }

    /// Draws a reward from `P(.; u)`.
    pub fn sample_reward<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> Result<f64> {
        self.check(u)?;
        Ok(match self.kind {
            FamilyKind::Logistic => {
                if rng.random::<f64>() < sigmoid(u) {
                    1.0
                } else {
                    0.0
                }
            }
            FamilyKind::Gaussian => u + rng.sample::<f64, _>(StandardNormal),
            FamilyKind::Rayleigh => {
                // Y^2 ~ Exp(u); 1 - U lies in (0, 1].
                let uniform = 1.0 - rng.random::<f64>();
                (-uniform.ln() / u).sqrt()
            }
        })
    }

    /// Cumulant-generating function `log E[exp(s Y)]` of `P(.; u)`.
    ///
    /// Only defined for the natural exponential families, where it equals
    /// `A(u + s) - A(u)`.
    pub fn cgf(&self, u: f64, s: f64) -> Result<f64> {
        if !self.is_nef() {
            return Err(Error::UnsupportedFamily {
                family: self.kind,
                op: "cgf",
            });
        }
        self.check(u)?;
        Ok(match self.kind {
            FamilyKind::Logistic => softplus(u + s) - softplus(u),
            _ => s * u + 0.5 * s * s,
        })
    }

    /// Log-partition `A(u)`; `+inf` outside the domain.
    pub(crate) fn log_partition(&self, u: f64) -> f64 {
        match self.kind {
            FamilyKind::Logistic => softplus(u),
            FamilyKind::Gaussian => 0.5 * u * u,
            FamilyKind::Rayleigh => {
                if u > 0.0 {
                    -u.ln()
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub(crate) fn log_partition_d1(&self, u: f64) -> f64 {
        match self.kind {
            FamilyKind::Logistic => sigmoid(u),
            FamilyKind::Gaussian => u,
            FamilyKind::Rayleigh => -1.0 / u,
        }
    }

    pub(crate) fn log_partition_d2(&self, u: f64) -> f64 {
        match self.kind {
            FamilyKind::Logistic => sigmoid(u) * sigmoid(-u),
            FamilyKind::Gaussian => 1.0,
            FamilyKind::Rayleigh => 1.0 / (u * u),
        }
    }

    /// Sufficient statistic `T(y)`.
    pub(crate) fn statistic(&self, y: f64) -> f64 {
        match self.kind {
            FamilyKind::Logistic | FamilyKind::Gaussian => y,
            FamilyKind::Rayleigh => -y * y,
        }
    }

    pub(crate) fn base_term(&self, y: f64) -> f64 {
        match self.kind {
            FamilyKind::Gaussian => 0.5 * y * y,
            _ => 0.0,
        }
    }

    /// `true` when `T` is affine in `y`, so additive reward noise only
    /// shifts `sum T` and can be pooled per arm.
    pub(crate) fn statistic_is_linear(&self) -> bool {
        self.is_nef()
    }
}

impl FromStr for RewardFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<FamilyKind>().map(RewardFamily::new)
    }
}

pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^u)` without overflow.
pub fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}
