//! Warm-up designs and the parameter calculator for the regret guarantee.
//!
//! A warm-up must leave `max_x |x|_{V^{-1}} <= b` with
//! `V = lambda I + sum_s x_s x_s^T`. Two ways to get there are provided: the
//! greedy elliptical-potential rule and an approximate G-optimal design
//! computed with Frank-Wolfe (Fedorov-Wynn steps), rounded to counts.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::family::{FamilyKind, RewardFamily};

fn cholesky(v: &DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    v.clone().cholesky().ok_or(Error::NotPositiveDefinite)
}

/// `|x|^2_{V^{-1}}` for every arm.
pub fn inverse_norms_sq(arms: &[DVector<f64>], v: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = cholesky(v)?;
    let l = chol.l();
    arms.iter()
        .map(|x| {
            let y = l
                .solve_lower_triangular(x)
                .ok_or(Error::NotPositiveDefinite)?;
            Ok(y.norm_squared())
        })
        .collect()
}

/// `(argmax, max)` of `|x|_{V^{-1}}` over the arm set; ties to the lowest index.
pub fn max_inverse_norm(arms: &[DVector<f64>], v: &DMatrix<f64>) -> Result<(usize, f64)> {
    if arms.is_empty() {
        return Err(Error::EmptyArmSet);
    }
    let norms = inverse_norms_sq(arms, v)?;
    let (i, best) =
        norms.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &n)| if n > acc.1 { (i, n) } else { acc },
        );
    Ok((i, best.sqrt()))
}

/// `lambda I + sum_s x_s x_s^T` over the chosen arm indices.
pub fn design_matrix(arms: &[DVector<f64>], chosen: &[usize], lambda: f64) -> DMatrix<f64> {
    let d = arms.first().map_or(0, |x| x.len());
    let mut v = DMatrix::identity(d, d) * lambda;
    for &i in chosen {
        v.ger(1.0, &arms[i], &arms[i], 1.0);
    }
    v
}

/// Greedy warm-up state.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignState {
    pub v: DMatrix<f64>,
    pub chosen: Vec<usize>,
    pub b_target: f64,
}

/// Number of rounds with `|a_t|_{V_{t-1}^{-1}} >= b` for any sequence with
/// `|a_t| <= l_norm`:
/// `3d / log(1+b^2) * log(1 + l_norm^2 / (lambda log(1+b^2)))`.
pub fn potential_bound(d: usize, lambda: f64, b: f64, l_norm: f64) -> f64 {
    let lb = (1.0 + b * b).ln();
    3.0 * d as f64 / lb * (1.0 + l_norm * l_norm / (lambda * lb)).ln()
}

/// Pulls `argmax_x |x|_{V_t^{-1}}` until every arm has `|x|_{V^{-1}} <= b_target`.
pub fn greedy_warmup(arms: &[DVector<f64>], lambda: f64, b_target: f64) -> Result<DesignState> {
    if arms.is_empty() {
        return Err(Error::EmptyArmSet);
    }
    if !(lambda > 0.0) || !(b_target > 0.0) {
        return Err(Error::InvalidParameter(
            "lambda and b must be positive".into(),
        ));
    }
    let d = arms[0].len();
    let l_norm = arms.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let budget = potential_bound(d, lambda, b_target, l_norm).ceil() as usize;
    let mut v = DMatrix::identity(d, d) * lambda;
    let mut chosen = Vec::new();
    loop {
        let (i, norm) = max_inverse_norm(arms, &v)?;
        if norm <= b_target {
            break;
        }
        if chosen.len() >= budget {
            return Err(Error::NonSpanning { dim: d });
        }
        v.ger(1.0, &arms[i], &arms[i], 1.0);
        chosen.push(i);
    }
    Ok(DesignState {
        v,
        chosen,
        b_target,
    })
}

/// A probability vector over the arm set.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub weights: Vec<f64>,
    /// `g(pi) = max_x |x|^2_{V(pi)^{-1}}`.
    pub g: f64,
    pub iterations: usize,
    pub initial_support: usize,
    /// Best `g` after each iteration (starting with the initial design).
    pub g_trace: Vec<f64>,
}

impl Design {
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights[i] > 0.0)
            .collect()
    }
}

fn weighted_gram(arms: &[DVector<f64>], weights: &[f64]) -> DMatrix<f64> {
    let d = arms[0].len();
    let mut v = DMatrix::zeros(d, d);
    for (x, &w) in arms.iter().zip(weights) {
        if w > 0.0 {
            v.ger(w, x, x, 1.0);
        }
    }
    v
}

/// `g(pi)` for a probability vector over `arms`.
pub fn g_value(arms: &[DVector<f64>], weights: &[f64]) -> Result<f64> {
    if arms.is_empty() {
        return Err(Error::EmptyArmSet);
    }
    let v = weighted_gram(arms, weights);
    let norms = inverse_norms_sq(arms, &v).map_err(|_| Error::NonSpanning { dim: v.nrows() })?;
    Ok(norms.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Indices of `d` linearly independent arms, chosen greedily by residual norm.
fn spanning_subset(arms: &[DVector<f64>]) -> Result<Vec<usize>> {
    let d = arms[0].len();
    let scale = arms.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(d);
    let mut picked = Vec::with_capacity(d);
    for _ in 0..d {
        let mut best = (usize::MAX, 0.0, DVector::zeros(d));
        for (i, x) in arms.iter().enumerate() {
            let mut r = x.clone();
            for q in &basis {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
            let n = r.norm();
            if n > best.1 {
                best = (i, n, r);
            }
        }
        if best.1 <= 1e-10 * scale.max(1.0) {
            return Err(Error::NonSpanning { dim: d });
        }
        picked.push(best.0);
        basis.push(best.2 / best.1);
    }
    Ok(picked)
}

/// `50 d ceil(log log (d + 2)) + 100`.
pub fn default_fw_iters(d: usize) -> usize {
    let ll = ((d as f64 + 2.0).ln()).ln().ceil().max(1.0) as usize;
    50 * d * ll + 100
}

/// Approximate G-optimal design with `g(pi) <= g_target` (default `2d`).
///
/// Starts from the uniform design over a spanning subset and moves mass
/// towards the current `g`-maximiser with the exact line-search step of the
/// log-det objective, `eta = (g/d - 1) / (g - 1)`. The best design seen is
/// returned, so `g_trace` is non-increasing.
pub fn frank_wolfe_design(
    arms: &[DVector<f64>],
    max_iters: Option<usize>,
    g_target: Option<f64>,
) -> Result<Design> {
    if arms.is_empty() {
        return Err(Error::EmptyArmSet);
    }
    let d = arms[0].len();
    let g_target = g_target.unwrap_or(2.0 * d as f64);
    if g_target < d as f64 {
        return Err(Error::InvalidParameter(format!(
            "g target {g_target} is below the optimum {d}"
        )));
    }
    let max_iters = max_iters.unwrap_or_else(|| default_fw_iters(d));
    let init = spanning_subset(arms)?;
    let mut weights = vec![0.0; arms.len()];
    for &i in &init {
        weights[i] = 1.0 / d as f64;
    }

    let evaluate = |w: &[f64]| -> Result<(usize, f64)> {
        let v = weighted_gram(arms, w);
        let norms = inverse_norms_sq(arms, &v)?;
        Ok(norms
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &n)| if n > acc.1 { (i, n) } else { acc },
            ))
    };

    let (mut arg, mut g) = evaluate(&weights)?;
    let mut best = (weights.clone(), g);
    let mut trace = vec![g];
    let mut iterations = 0;
    while best.1 > g_target && iterations < max_iters {
        // duality gap g - d
        if (g - d as f64) / (d as f64) < 1e-10 {
            break;
        }
        iterations += 1;
        let eta = (g / d as f64 - 1.0) / (g - 1.0);
        for w in weights.iter_mut() {
            *w *= 1.0 - eta;
        }
        weights[arg] += eta;
        (arg, g) = evaluate(&weights)?;
        if g < best.1 {
            best = (weights.clone(), g);
        }
        trace.push(best.1);
    }
    let design = Design {
        weights: best.0,
        g: best.1,
        iterations,
        initial_support: init.len(),
        g_trace: trace,
    };
    if design.g > g_target {
        return Err(Error::BudgetExhausted {
            budget: max_iters,
            reached: design.g,
            target: g_target,
        });
    }
    Ok(design)
}

/// Rounds a design to `ceil(n pi(y))` pulls per support point, `n = ceil(d / b^2)`.
pub fn design_to_counts(weights: &[f64], b_target: f64, d: usize) -> Vec<(usize, usize)> {
    let n = (d as f64 / (b_target * b_target) - 1e-9).ceil().max(0.0);
    weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (i, (n * w - 1e-9).ceil().max(1.0) as usize))
        .collect()
}

/// Expands `(arm, count)` pairs into a pull order.
pub fn counts_to_pulls(counts: &[(usize, usize)]) -> Vec<usize> {
    counts
        .iter()
        .flat_map(|&(i, c)| std::iter::repeat_n(i, c))
        .collect()
}

/// Inputs of the parameter calculator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryInputs {
    pub n: u64,
    pub d: usize,
    /// Bound `S` on `|theta*|`.
    pub s: f64,
    pub m: f64,
    pub l: f64,
    pub delta: f64,
}

impl TheoryInputs {
    pub fn for_family(family: &RewardFamily, n: u64, d: usize, s: f64, delta: f64) -> Self {
        TheoryInputs {
            n,
            d,
            s,
            m: family.self_concordance,
            l: family.variance_bound,
            delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub inputs: TheoryInputs,
    pub lambda_n: f64,
    pub gamma_n: f64,
    pub b: f64,
    pub kappa: f64,
    pub c_d: f64,
    pub xi: f64,
    pub d_hat_star: f64,
    pub delta_prime: f64,
}

/// `1 v max_{|u| <= S} 1/mu_dot(u)`: grid of 10^4 points plus golden-section
/// refinement around the best grid point.
pub fn kappa(family: &RewardFamily, s: f64) -> Result<f64> {
    if !family.is_nef() {
        return Err(Error::UnsupportedFamily {
            family: family.kind(),
            op: "kappa",
        });
    }
    let f = |u: f64| 1.0 / family.mean_derivative(u).unwrap_or(f64::NAN);
    let n = 10_000;
    let h = 2.0 * s / (n - 1) as f64;
    let (k, _) =
        (0..n)
            .map(|i| (i, f(-s + h * i as f64)))
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
    let mut lo = (-s + h * (k as f64 - 1.0)).max(-s);
    let mut hi = (-s + h * (k as f64 + 1.0)).min(s);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let a = hi - ratio * (hi - lo);
        let b = lo + ratio * (hi - lo);
        if f(a) > f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let refined = [lo, hi, 0.5 * (lo + hi), -s, s]
        .into_iter()
        .map(f)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(refined.max(1.0))
}

/// Regularisation, perturbation scale and warm-up accuracy prescribed by the
/// regret guarantee.
///
/// With `M = 0` (Gaussian) the formulas degenerate; the returned variant has
/// `lambda_n = 1`, `b = b_override` and infinite `gamma_n`, `xi`, `d_hat_star`.
pub fn theory_constants(
    inputs: &TheoryInputs,
    family: &RewardFamily,
    b_override: Option<f64>,
) -> Result<TheoryConstants> {
    let TheoryInputs {
        n,
        d,
        s,
        m,
        l,
        delta,
    } = *inputs;
    if n == 0 || d == 0 || !(s > 0.0) || !(l > 0.0) || !(delta > 0.0) || !(m >= 0.0) {
        return Err(Error::InvalidParameter(
            "n, d, S, L, delta must be positive and M non-negative".into(),
        ));
    }
    if !m.is_finite() || !l.is_finite() || family.kind() == FamilyKind::Rayleigh {
        return Err(Error::UnsupportedFamily {
            family: family.kind(),
            op: "theory_constants",
        });
    }
    let nf = n as f64;
    let df = d as f64;
    let delta_prime = (delta / nf).min(1.0 / 200.0);
    let c_d = df.sqrt() + (2.0 * (1.0 / delta_prime).ln()).sqrt();
    let kappa = kappa(family, s)?;

    if m == 0.0 {
        let b = b_override
            .ok_or_else(|| Error::InvalidParameter("M = 0 needs a configured b".into()))?;
        return Ok(TheoryConstants {
            inputs: *inputs,
            lambda_n: 1.0,
            gamma_n: f64::INFINITY,
            b,
            kappa,
            c_d,
            xi: f64::INFINITY,
            d_hat_star: f64::INFINITY,
            delta_prime,
        });
    }

    let log_term = (std::f64::consts::E * (1.0 + nf * l / df).sqrt())
        .max(1.0 / delta)
        .ln();
    let lambda_n = (2.0 * df * m / s * log_term).max(1.0);
    let gamma_n =
        lambda_n.sqrt() * (1.0 / (2.0 * m) + s) + 2.0 * df * m / lambda_n.sqrt() * log_term;
    let xi = 2f64.sqrt() * (1.0 / (2.0 * m) + 2.0 * s);
    let d_hat_star = xi + m * xi * xi;
    let c2 = c_d * c_d;
    let b = b_override
        .unwrap_or(1.0 / (22.0 * m * (1.0 + m * c2 * d_hat_star) * c2 * gamma_n * kappa.sqrt()));
    Ok(TheoryConstants {
        inputs: *inputs,
        lambda_n,
        gamma_n,
        b,
        kappa,
        c_d,
        xi,
        d_hat_star,
        delta_prime,
    })
}

/// Confidence width
/// `sqrt(lambda)(1/(2M) + S) + (2Md/sqrt(lambda))(1 + log(1 + tL/(lambda d))/2)
///  + (2M/sqrt(lambda)) log(1/delta)`.
pub fn gamma_t(t: u64, delta: f64, lambda: f64, d: usize, s: f64, m: f64, l: f64) -> Result<f64> {
    if !(delta > 0.0 && lambda > 0.0 && s > 0.0 && m > 0.0 && l > 0.0) || d == 0 {
        return Err(Error::InvalidParameter(
            "gamma_t needs positive delta, lambda, d, S, M, L".into(),
        ));
    }
    let df = d as f64;
    let sl = lambda.sqrt();
    Ok(sl * (1.0 / (2.0 * m) + s)
        + 2.0 * m * df / sl * (1.0 + 0.5 * (1.0 + t as f64 * l / (lambda * df)).ln())
        + 2.0 * m / sl * (1.0 / delta).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::combinatorial_arms;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn basis(d: usize) -> Vec<DVector<f64>> {
        (0..d)
            .map(|i| {
                let mut v = DVector::zeros(d);
                v[i] = 1.0;
                v
            })
            .collect()
    }

    fn random_unit(d: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        &v / v.norm()
    }

    #[test]
    fn greedy_examples() {
        let st = greedy_warmup(&basis(2), 1.0, 0.8).unwrap();
        assert_eq!(st.chosen.len(), 2);
        let (_, m) = max_inverse_norm(&basis(2), &st.v).unwrap();
        assert_abs_diff_eq!(m, 0.5f64.sqrt(), epsilon = 1e-12);
        assert!(greedy_warmup(&basis(3), 4.0, 0.5)
            .unwrap()
            .chosen
            .is_empty());
    }

    #[test]
    fn greedy_on_combinatorial_arms_meets_target() {
        let arms = combinatorial_arms(10, 3);
        let b = 0.5;
        let st = greedy_warmup(&arms, 1.0, b).unwrap();
        let v = design_matrix(&arms, &st.chosen, 1.0);
        assert!(max_inverse_norm(&arms, &v).unwrap().1 <= b);
        assert!(st.chosen.len() as f64 <= potential_bound(10, 1.0, b, 3f64.sqrt()));
    }

    #[test]
    fn potential_bound_examples() {
        let v = potential_bound(1, 1.0, 1.0, 1.0);
        let expect = 3.0 / 2f64.ln() * (1.0 + 1.0 / 2f64.ln()).ln();
        assert_abs_diff_eq!(v, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 3.866, epsilon = 1e-3);
        assert!(potential_bound(1, 1.0, 10.0, 1.0) < v);
    }

    #[test]
    fn potential_bound_holds_on_random_sequences() {
        let (d, lambda, b) = (5, 1.0, 0.5);
        let bound = potential_bound(d, lambda, b, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let mut v = DMatrix::identity(d, d) * lambda;
            let mut count = 0;
            for _ in 0..200 {
                let a = random_unit(d, &mut rng);
                let n = inverse_norms_sq(std::slice::from_ref(&a), &v).unwrap()[0].sqrt();
                if n >= b {
                    count += 1;
                }
                v.ger(1.0, &a, &a, 1.0);
            }
            assert!(count as f64 <= bound);
        }
    }

    #[test]
    fn fw_on_basis_is_uniform() {
        let d = 4;
        let des = frank_wolfe_design(&basis(d), None, Some(d as f64)).unwrap();
        assert_abs_diff_eq!(des.g, d as f64, epsilon = 1e-12);
        assert!(des.weights.iter().all(|&w| (w - 0.25).abs() < 1e-12));
    }

    #[test]
    fn fw_small_example() {
        let arms = vec![
            DVector::from_row_slice(&[1.0, 0.0]),
            DVector::from_row_slice(&[0.0, 1.0]),
            DVector::from_row_slice(&[0.5f64.sqrt(), 0.5f64.sqrt()]),
        ];
        let des = frank_wolfe_design(&arms, None, None).unwrap();
        let g = g_value(&arms, &des.weights).unwrap();
        assert!((2.0 - 1e-9..=4.0).contains(&g));
        assert_abs_diff_eq!(g, des.g, epsilon = 1e-9);
    }

    #[test]
    fn fw_on_combinatorial_arms() {
        let arms = combinatorial_arms(10, 3);
        let des = frank_wolfe_design(&arms, None, None).unwrap();
        assert!(des.g <= 20.0);
        assert!(des.g >= 10.0 - 1e-9);
        assert!(des.g_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(des.support().len() <= des.iterations + des.initial_support);
        let total: f64 = des.weights.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fw_tight_target_and_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let arms: Vec<_> = (0..40).map(|_| random_unit(4, &mut rng)).collect();
        let des = frank_wolfe_design(&arms, Some(10_000), Some(4.0 * 1.01)).unwrap();
        assert!(des.g <= 4.04);
        assert!(matches!(
            frank_wolfe_design(&arms, Some(0), Some(4.0)),
            Err(Error::BudgetExhausted { .. })
        ));
    }

    #[test]
    fn fw_rejects_non_spanning() {
        let arms = vec![
            DVector::from_row_slice(&[1.0, 1.0, 0.0]),
            DVector::from_row_slice(&[2.0, 2.0, 0.0]),
            DVector::from_row_slice(&[0.0, 0.0, 1.0]),
        ];
        assert!(matches!(
            frank_wolfe_design(&arms, None, None),
            Err(Error::NonSpanning { dim: 3 })
        ));
    }

    #[test]
    fn counts_examples() {
        let c = design_to_counts(&[0.25; 4], 1.0, 4);
        assert_eq!(c, vec![(0, 1), (1, 1), (2, 1), (3, 1)]);
        let c = design_to_counts(&[0.6, 0.4], 0.5, 2);
        assert_eq!(c, vec![(0, 5), (1, 4)]);
        assert_eq!(counts_to_pulls(&c).len(), 9);
    }

    #[test]
    fn rounded_design_meets_inflated_target() {
        let arms = combinatorial_arms(10, 3);
        let des = frank_wolfe_design(&arms, None, None).unwrap();
        let b = 0.5;
        let counts = design_to_counts(&des.weights, b, 10);
        let total: usize = counts.iter().map(|c| c.1).sum();
        assert!(total <= counts.len() + 40);
        let pulls = counts_to_pulls(&counts);
        let v = design_matrix(&arms, &pulls, 1.0);
        assert!(max_inverse_norm(&arms, &v).unwrap().1 <= 2f64.sqrt() * b);
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_t(0, 1.0, 1.0, 2, 1.0, 0.25, 0.5).unwrap();
        assert_abs_diff_eq!(g, 4.0, epsilon = 1e-12);
        let a = gamma_t(10, 0.1, 1.0, 2, 1.0, 0.25, 0.5).unwrap();
        let b = gamma_t(11, 0.1, 1.0, 2, 1.0, 0.25, 0.5).unwrap();
        assert!(b >= a);
        assert!(
            gamma_t(10, 0.01, 1.0, 2, 1.0, 0.25, 0.5).unwrap()
                > gamma_t(10, 0.1, 1.0, 2, 1.0, 0.25, 0.5).unwrap()
        );
        assert!(gamma_t(1, 0.1, 1.0, 2, 1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn kappa_logistic() {
        let k = kappa(&RewardFamily::logistic(), 1.0).unwrap();
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(k, (1.0 + e).powi(2) / e, epsilon = 1e-9);
        assert_eq!(kappa(&RewardFamily::gaussian(), 1.0).unwrap(), 1.0);
    }

    #[test]
    fn logistic_constants_reference_values() {
        // evaluated independently in double precision
        let fam = RewardFamily::logistic();
        let inp = TheoryInputs::for_family(&fam, 10_000, 10, 1.0, 0.05);
        let c = theory_constants(&inp, &fam, None).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs();
        assert_eq!(c.delta_prime, 5e-6);
        assert!(close(c.c_d, 8.103142492468525));
        assert!(close(c.lambda_n, 20.541515252712163));
        assert!(close(c.gamma_n, 18.129099372097738));
        assert!(close(c.xi, 4.0 * 2f64.sqrt()));
        assert!(close(c.d_hat_star, 13.656854249492383));
        assert!(close(c.kappa, 5.086161269630487));
        assert!(close(c.b, 3.007658228177052e-07));
        assert!(c.c_d >= 10f64.sqrt() && c.kappa >= 1.0 && c.b > 0.0);
    }

    #[test]
    fn gaussian_constants_need_override() {
        let g = RewardFamily::gaussian();
        let inp = TheoryInputs::for_family(&g, 100, 2, 1.0, 0.05);
        assert!(theory_constants(&inp, &g, None).is_err());
        let c = theory_constants(&inp, &g, Some(0.3)).unwrap();
        assert_eq!((c.lambda_n, c.b), (1.0, 0.3));
        let r = RewardFamily::rayleigh();
        let inp = TheoryInputs::for_family(&r, 100, 2, 1.0, 0.05);
        assert!(theory_constants(&inp, &r, None).is_err());
    }
}
