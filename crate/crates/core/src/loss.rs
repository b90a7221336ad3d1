//! Regularised negative log-likelihood for linear localisation maps and its
//! Newton minimiser.
//!
//! The objective is
//!
//! ```text
//! L(theta) = lambda/2 |theta|^2 + sum_i nll(y_i; x_i^T theta) + W^T theta
//! ```
//!
//! where `W` is an optional linear perturbation (zero for the plain MLE).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::family::{FamilyKind, RewardFamily};
use crate::history::History;

const ARMIJO_SLOPE: f64 = 1e-4;
const ARMIJO_SHRINK: f64 = 0.5;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta: DVector<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value at `theta` (including the linear term).
    pub objective: f64,
    /// Objective after each accepted iterate; only filled when requested.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Gradient tolerance is `tol_scale * (1 + t)`.
    pub tol_scale: f64,
    pub trace: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iters: 200,
            tol_scale: 1e-8,
            trace: false,
        }
    }
}

impl FitOptions {
    pub fn tolerance(&self, t: usize) -> f64 {
        self.tol_scale * (1.0 + t as f64)
    }
}

/// Per-arm pooled terms: `count * A(u) - stat * u + base`.
struct Pooled {
    arm: Vec<f64>,
    count: f64,
    stat: f64,
    base: f64,
}

/// The (optionally perturbed) loss over one history.
pub struct Objective<'a> {
    family: &'a RewardFamily,
    lambda: f64,
    dim: usize,
    pooled: Vec<Pooled>,
    linear: Option<&'a DVector<f64>>,
}

impl<'a> Objective<'a> {
    pub fn new(
        history: &History,
        lambda: f64,
        family: &'a RewardFamily,
        linear: Option<&'a DVector<f64>>,
    ) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "regulariser must be finite and non-negative, got {lambda}"
            )));
        }
        if let Some(w) = linear {
            if w.len() != history.dim() {
                return Err(Error::DimensionMismatch {
                    expected: history.dim(),
                    got: w.len(),
                });
            }
        }
        let pooled = history
            .groups()
            .iter()
            .map(|g| {
                let (stat, base) = match family.kind() {
                    FamilyKind::Logistic => (g.sum_reward, 0.0),
                    FamilyKind::Gaussian => (g.sum_reward, 0.5 * g.sum_sq_reward),
                    FamilyKind::Rayleigh => (-g.sum_sq_reward, 0.0),
                };
                Pooled {
                    arm: g.arm.as_slice().to_vec(),
                    count: g.count as f64,
                    stat,
                    base,
                }
            })
            .collect();
        Ok(Objective {
            family,
            lambda,
            dim: history.dim(),
            pooled,
            linear,
        })
    }

    fn check_dim(&self, theta: &DVector<f64>) -> Result<()> {
        if theta.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got: theta.len(),
            })
        }
    }

    fn regulariser(&self, theta: &DVector<f64>) -> f64 {
        let mut v = 0.5 * self.lambda * theta.norm_squared();
        if let Some(w) = self.linear {
            v += w.dot(theta);
        }
        v
    }

    /// Objective value; `+inf` when some observed arm is infeasible.
    pub fn value(&self, theta: &DVector<f64>) -> Result<f64> {
        self.check_dim(theta)?;
        let th = theta.as_slice();
        let mut v = self.regulariser(theta);
        for p in &self.pooled {
            let u = dot(&p.arm, th);
            let a = self.family.log_partition(u);
            if !a.is_finite() {
                return Ok(f64::INFINITY);
            }
            v += p.count * a - p.stat * u + p.base;
        }
        Ok(v)
    }

    fn check_feasible(&self, u: f64) -> Result<()> {
        if self.family.is_feasible(u) {
            Ok(())
        } else {
            Err(Error::Infeasible { u })
        }
    }

    pub fn gradient(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(theta)?;
        let th = theta.as_slice();
        let mut g = theta * self.lambda;
        if let Some(w) = self.linear {
            g += w;
        }
        let gs = g.as_mut_slice();
        for p in &self.pooled {
            let u = dot(&p.arm, th);
            self.check_feasible(u)?;
            let c = p.count * self.family.log_partition_d1(u) - p.stat;
            for (gj, xj) in gs.iter_mut().zip(&p.arm) {
                *gj += c * xj;
            }
        }
        Ok(g)
    }

    pub fn hessian(&self, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(theta)?;
        let th = theta.as_slice();
        let d = self.dim;
        let mut h = DMatrix::<f64>::identity(d, d) * self.lambda;
        for p in &self.pooled {
            let u = dot(&p.arm, th);
            self.check_feasible(u)?;
            let w = p.count * self.family.log_partition_d2(u);
            for j in 0..d {
                let wj = w * p.arm[j];
                if wj == 0.0 {
                    continue;
                }
                for i in j..d {
                    h[(i, j)] += wj * p.arm[i];
                }
            }
        }
        for j in 0..d {
            for i in (j + 1)..d {
                h[(j, i)] = h[(i, j)];
            }
        }
        Ok(h)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn nll(
    theta: &DVector<f64>,
    history: &History,
    lambda: f64,
    family: &RewardFamily,
) -> Result<f64> {
    Objective::new(history, lambda, family, None)?.value(theta)
}

pub fn grad(
    theta: &DVector<f64>,
    history: &History,
    lambda: f64,
    family: &RewardFamily,
) -> Result<DVector<f64>> {
    Objective::new(history, lambda, family, None)?.gradient(theta)
}

pub fn hessian(
    theta: &DVector<f64>,
    history: &History,
    lambda: f64,
    family: &RewardFamily,
) -> Result<DMatrix<f64>> {
    Objective::new(history, lambda, family, None)?.hessian(theta)
}

/// Feasible starting point for the plain MLE.
///
/// Zero for the natural exponential families. For Rayleigh, `c * 1` with
/// `c = 0.5 / max_i sum_j x_ij` when that makes every observed arm feasible,
/// otherwise the minimum-norm solution of `x_i^T theta = 1`.
pub fn default_start(history: &History, family: &RewardFamily) -> Result<DVector<f64>> {
    let d = history.dim();
    if family.kind() != FamilyKind::Rayleigh || history.is_empty() {
        return Ok(DVector::zeros(d));
    }
    let groups = history.groups();
    let max_sum = groups
        .iter()
        .map(|g| g.arm.sum())
        .fold(f64::NEG_INFINITY, f64::max);
    if max_sum > 0.0 {
        let start = DVector::from_element(d, 0.5 / max_sum);
        if groups.iter().all(|g| g.arm.dot(&start) > 0.0) {
            return Ok(start);
        }
    }
    // min-norm solution of X theta = 1 via a lightly ridged normal system.
    let k = groups.len();
    let x = DMatrix::from_fn(k, d, |i, j| groups[i].arm[j]);
    let gram = &x * x.transpose() + DMatrix::identity(k, k) * 1e-10;
    let ones = DVector::from_element(k, 1.0);
    let alpha = gram
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?
        .solve(&ones);
    let start = x.transpose() * alpha;
    match groups.iter().map(|g| g.arm.dot(&start)).find(|&u| u <= 0.0) {
        Some(u) => Err(Error::Infeasible { u }),
        None => Ok(start),
    }
}

/// Minimises `L(theta) + W^T theta` from the default start.
pub fn fit(
    history: &History,
    lambda: f64,
    family: &RewardFamily,
    perturbation: Option<&DVector<f64>>,
) -> Result<FitResult> {
    let start = default_start(history, family)?;
    fit_from(
        history,
        lambda,
        family,
        perturbation,
        start,
        &FitOptions::default(),
    )
}

/// Damped Newton with Armijo backtracking from `start`.
pub fn fit_from(
    history: &History,
    lambda: f64,
    family: &RewardFamily,
    perturbation: Option<&DVector<f64>>,
    start: DVector<f64>,
    options: &FitOptions,
) -> Result<FitResult> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "regulariser must be positive, got {lambda}"
        )));
    }
    let obj = Objective::new(history, lambda, family, perturbation)?;
    let tol = options.tolerance(history.len());

    let mut theta = start;
    let mut f = obj.value(&theta)?;
    if !f.is_finite() {
        return Err(Error::InvalidParameter(
            "starting point is infeasible".into(),
        ));
    }
    let mut g = obj.gradient(&theta)?;
    let mut gnorm = g.norm();
    let mut trace = Vec::new();
    if options.trace {
        trace.push(f);
    }

    let mut iterations = 0;
    while iterations < options.max_iters {
        if gnorm <= tol {
            return Ok(FitResult {
                theta,
                grad_norm: gnorm,
                iterations,
                converged: true,
                objective: f,
                objective_trace: trace,
            });
        }
        iterations += 1;

        let h = obj.hessian(&theta)?;
        let mut step = match h.cholesky() {
            Some(ch) => -ch.solve(&g),
            None => -g.clone(),
        };
        let mut slope = g.dot(&step);
        if !(slope < 0.0) {
            step = -g.clone();
            slope = -gnorm * gnorm;
        }

        // Accept a full step that only loses to rounding in f if it still
        // shrinks the gradient.
        let rounding = 1e-12 * (1.0 + f.abs());
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &theta + &step * alpha;
            let ft = obj.value(&trial)?;
            if ft.is_finite() {
                if ft <= f + ARMIJO_SLOPE * alpha * slope {
                    accepted = Some((trial, ft, None));
                    break;
                }
                if alpha == 1.0 && ft <= f + rounding {
                    let gt = obj.gradient(&trial)?;
                    if gt.norm() < gnorm {
                        accepted = Some((trial, ft, Some(gt)));
                        break;
                    }
                }
            }
            alpha *= ARMIJO_SHRINK;
        }
        let Some((next, fnext, gnext)) = accepted else {
            break;
        };
        theta = next;
        f = fnext;
        g = match gnext {
            Some(gt) => gt,
            None => obj.gradient(&theta)?,
        };
        gnorm = g.norm();
        if options.trace {
            trace.push(f);
        }
    }

    if gnorm <= tol {
        return Ok(FitResult {
            theta,
            grad_norm: gnorm,
            iterations,
            converged: true,
            objective: f,
            objective_trace: trace,
        });
    }
    Err(Error::NonConvergence {
        theta,
        grad_norm: gnorm,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn e(d: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        v
    }

    fn random_unit_ball(d: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let r: f64 = rng.random::<f64>().powf(1.0 / d as f64);
        &v / v.norm() * r
    }

    /// Random history with rewards drawn from the family at `theta_star`.
    fn random_instance(
        fam: &RewardFamily,
        d: usize,
        t: usize,
        seed: u64,
    ) -> (History, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta_star = match fam.kind() {
            FamilyKind::Rayleigh => DVector::from_fn(d, |_, _| 0.5 + rng.random::<f64>()),
            _ => random_unit_ball(d, &mut rng),
        };
        let mut h = History::new(d);
        for _ in 0..t {
            let x = match fam.kind() {
                FamilyKind::Rayleigh => {
                    DVector::from_fn(d, |_, _| 0.1 + rng.random::<f64>()) / d as f64
                }
                _ => random_unit_ball(d, &mut rng),
            };
            let y = fam.sample_reward(x.dot(&theta_star), &mut rng).unwrap();
            h.push(x, y).unwrap();
        }
        (h, theta_star)
    }

    /// Closed-form ridge solution `(X^T X + lambda I)^{-1} (X^T y - w)`.
    fn ridge(h: &History, lambda: f64, w: &DVector<f64>) -> DVector<f64> {
        let d = h.dim();
        let mut v = DMatrix::identity(d, d) * lambda;
        let mut b = -w.clone();
        for (x, y) in h.arms().iter().zip(h.rewards()) {
            v += x * x.transpose();
            b += x * *y;
        }
        v.lu().solve(&b).unwrap()
    }

    #[test]
    fn nll_examples() {
        let empty = History::new(2);
        let theta = DVector::from_vec(vec![0.6, 0.8]);
        assert_abs_diff_eq!(
            nll(&theta, &empty, 2.0, &RewardFamily::logistic()).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let one = History::from_pairs(2, [(e(2, 0), 1.0)]).unwrap();
        assert_abs_diff_eq!(
            nll(&DVector::zeros(2), &one, 0.0, &RewardFamily::logistic()).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            nll(&e(2, 0), &one, 0.0, &RewardFamily::rayleigh()).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(
            nll(&(-e(2, 0)), &one, 0.0, &RewardFamily::rayleigh()).unwrap(),
            f64::INFINITY
        );
        assert!(matches!(
            nll(&DVector::zeros(3), &one, 1.0, &RewardFamily::logistic()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pooled_loss_matches_direct_sum() {
        for fam in [
            RewardFamily::logistic(),
            RewardFamily::gaussian(),
            RewardFamily::rayleigh(),
        ] {
            let (h, theta) = random_instance(&fam, 3, 40, 5);
            let direct: f64 = 0.5 * 0.7 * theta.norm_squared()
                + h.arms()
                    .iter()
                    .zip(h.rewards())
                    .map(|(x, y)| fam.nll_term(*y, x.dot(&theta)))
                    .sum::<f64>();
            assert_abs_diff_eq!(nll(&theta, &h, 0.7, &fam).unwrap(), direct, epsilon = 1e-10);
        }
    }

    #[test]
    fn gradient_of_regulariser_only() {
        let theta = DVector::from_vec(vec![0.3, -2.0, 1.0]);
        let g = grad(&theta, &History::new(3), 1.0, &RewardFamily::logistic()).unwrap();
        assert_eq!(g, theta);
    }

    #[test]
    fn hessian_examples() {
        let empty = History::new(2);
        let h = hessian(&DVector::zeros(2), &empty, 3.0, &RewardFamily::gaussian()).unwrap();
        assert_eq!(h, DMatrix::identity(2, 2) * 3.0);
        let one = History::from_pairs(2, [(e(2, 0), 1.0)]).unwrap();
        let h = hessian(&DVector::zeros(2), &one, 0.0, &RewardFamily::logistic()).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        for fam in [
            RewardFamily::logistic(),
            RewardFamily::gaussian(),
            RewardFamily::rayleigh(),
        ] {
            let (h, theta) = random_instance(&fam, 3, 20, 17);
            let lam = 1.0;
            let g = grad(&theta, &h, lam, &fam).unwrap();
            let hs = hessian(&theta, &h, lam, &fam).unwrap();
            let step = 1e-5;
            for j in 0..3 {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[j] += step;
                tm[j] -= step;
                let fd = (nll(&tp, &h, lam, &fam).unwrap() - nll(&tm, &h, lam, &fam).unwrap())
                    / (2.0 * step);
                assert!((fd - g[j]).abs() <= 1e-6, "{} grad {j}", fam.kind());
                let gfd = (grad(&tp, &h, lam, &fam).unwrap() - grad(&tm, &h, lam, &fam).unwrap())
                    / (2.0 * step);
                for i in 0..3 {
                    assert!((gfd[i] - hs[(i, j)]).abs() <= 1e-5, "{} hess", fam.kind());
                }
            }
        }
    }

    #[test]
    fn gaussian_gradient_vanishes_at_ridge_solution() {
        let fam = RewardFamily::gaussian();
        let (h, _) = random_instance(&fam, 4, 30, 3);
        let theta = ridge(&h, 0.5, &DVector::zeros(4));
        let g = grad(&theta, &h, 0.5, &fam).unwrap();
        assert!(g.norm() <= 1e-10, "{}", g.norm());
    }

    #[test]
    fn fisher_identity_in_hessian() {
        let fam = RewardFamily::logistic();
        let (h, theta_star) = random_instance(&fam, 3, 25, 8);
        let hs = hessian(&theta_star, &h, 1.0, &fam).unwrap();
        let mut expect = DMatrix::identity(3, 3);
        for x in h.arms() {
            expect += x * x.transpose() * fam.fisher_info(x.dot(&theta_star)).unwrap();
        }
        assert!((hs - expect).abs().max() <= 1e-12);
    }

    #[test]
    fn fit_gaussian_equals_ridge() {
        let fam = RewardFamily::gaussian();
        let (h, _) = random_instance(&fam, 3, 50, 21);
        let w = DVector::from_vec(vec![0.3, -1.2, 0.4]);
        let res = fit(&h, 1.0, &fam, Some(&w)).unwrap();
        assert!((res.theta - ridge(&h, 1.0, &w)).abs().max() <= 1e-8);
    }

    #[test]
    fn fit_trivial_cases() {
        let res = fit(&History::new(3), 2.0, &RewardFamily::logistic(), None).unwrap();
        assert_eq!(res.theta, DVector::zeros(3));
        assert!(res.converged);
        let w = DVector::from_element(1, -2.0);
        let res = fit(&History::new(1), 1.0, &RewardFamily::rayleigh(), Some(&w)).unwrap();
        assert_abs_diff_eq!(res.theta[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rejects_nonpositive_lambda() {
        assert!(fit(&History::new(1), 0.0, &RewardFamily::logistic(), None).is_err());
    }

    #[test]
    fn fit_reports_non_convergence() {
        let fam = RewardFamily::logistic();
        let (h, _) = random_instance(&fam, 3, 50, 2);
        let opts = FitOptions {
            max_iters: 1,
            ..Default::default()
        };
        let err = fit_from(&h, 1.0, &fam, None, DVector::zeros(3), &opts).unwrap_err();
        match err {
            Error::NonConvergence {
                theta, iterations, ..
            } => {
                assert_eq!(iterations, 1);
                assert_eq!(theta.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rayleigh_fit_stays_feasible() {
        let fam = RewardFamily::rayleigh();
        let (h, _) = random_instance(&fam, 2, 200, 4);
        let res = fit(&h, 1.0, &fam, None).unwrap();
        assert!(h.arms().iter().all(|x| x.dot(&res.theta) > 0.0));
        // A strong push towards the boundary is stopped by the sentinel.
        let w = DVector::from_vec(vec![40.0, 40.0]);
        let res = fit_from(&h, 1.0, &fam, Some(&w), res.theta, &FitOptions::default()).unwrap();
        assert!(h.arms().iter().all(|x| x.dot(&res.theta) > 0.0));
    }

    #[test]
    fn objective_is_monotone_and_gradient_small() {
        for fam in [RewardFamily::logistic(), RewardFamily::rayleigh()] {
            let (h, _) = random_instance(&fam, 4, 120, 99);
            let w = DVector::from_vec(vec![1.0, -0.5, 0.2, 0.0]);
            let opts = FitOptions {
                trace: true,
                ..Default::default()
            };
            let start = default_start(&h, &fam).unwrap();
            let res = fit_from(&h, 1.0, &fam, Some(&w), start, &opts).unwrap();
            for pair in res.objective_trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12 * (1.0 + pair[0].abs()));
            }
            let obj = Objective::new(&h, 1.0, &fam, Some(&w)).unwrap();
            let g = obj.gradient(&res.theta).unwrap();
            assert!(g.norm() <= 1e-8 * (1.0 + h.len() as f64));
        }
    }

    #[test]
    fn loss_is_midpoint_convex_on_segments() {
        let fam = RewardFamily::logistic();
        let (h, _) = random_instance(&fam, 3, 60, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let a = random_unit_ball(3, &mut rng) * 3.0;
            let b = random_unit_ball(3, &mut rng) * 3.0;
            let vals: Vec<f64> = (0..21)
                .map(|k| {
                    let s = k as f64 / 20.0;
                    nll(&(&a * (1.0 - s) + &b * s), &h, 1.0, &fam).unwrap()
                })
                .collect();
            for k in 1..20 {
                assert!(vals[k] <= 0.5 * (vals[k - 1] + vals[k + 1]) + 1e-9);
            }
        }
    }

    #[test]
    fn rayleigh_start_is_feasible() {
        let fam = RewardFamily::rayleigh();
        let h = History::from_pairs(
            2,
            [
                (DVector::from_vec(vec![1.0, -0.5]), 1.0),
                (DVector::from_vec(vec![-0.2, 1.0]), 1.0),
            ],
        )
        .unwrap();
        let s = default_start(&h, &fam).unwrap();
        assert!(h.arms().iter().all(|x| x.dot(&s) > 0.0));
    }
}
