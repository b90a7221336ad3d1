//! Numerical property suites with pass/fail reports.
//!
//! Each suite is deterministic given its seed and returns the measured
//! statistics alongside the verdict.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::design::{
    design_matrix, frank_wolfe_design, g_value, gamma_t, greedy_warmup, inverse_norms_sq,
    max_inverse_norm, potential_bound,
};
use crate::env::{combinatorial_arms, BanditInstance};
use crate::error::{Error, Result};
use crate::family::{FamilyKind, RewardFamily};
use crate::history::History;
use crate::loss;
use crate::policy::{
    evill_step_with_draw, evill_weight, fit_mle, phe_fit_with_noise, PerturbationDraw, PolicyKind,
    PolicySpec,
};
use crate::rng::{stream, StreamKind, StreamRng};

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub name: &'static str,
    pub pass: bool,
    pub metrics: Vec<(String, f64)>,
}

impl Report {
    fn new(name: &'static str, pass: bool) -> Self {
        Report {
            name,
            pass,
            metrics: Vec::new(),
        }
    }

    fn metric(mut self, key: impl Into<String>, value: f64) -> Self {
        self.metrics.push((key.into(), value));
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

pub const SUITES: [&str; 8] = [
    "mgf",
    "selfconcordance",
    "coverage",
    "equivalence",
    "covariance",
    "potential",
    "design",
    "gradient",
];

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn rng_for(seed: u64, index: u64) -> StreamRng {
    stream(seed, index, 0, StreamKind::Diagnostic)
}

fn gaussian_vector(d: usize, rng: &mut StreamRng) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn unit_vector(d: usize, rng: &mut StreamRng) -> DVector<f64> {
    let v = gaussian_vector(d, rng);
    &v / v.norm()
}

fn unit_ball(d: usize, rng: &mut StreamRng) -> DVector<f64> {
    let r = rng.random::<f64>().powf(1.0 / d as f64);
    unit_vector(d, rng) * r
}

/// Grid points `(u, s)` where `cgf(u, s) > s mu(u) + s^2 mu_dot(u)`, with
/// `u` in `[-5, 5]` and `s` in `[-log 2 / m, log 2 / m]`.
pub fn mgf_violations(family: &RewardFamily, m: f64, points: usize) -> Result<(usize, f64)> {
    let smax = 2f64.ln() / m;
    let mut count = 0;
    let mut worst = f64::NEG_INFINITY;
    for u in linspace(-5.0, 5.0, points) {
        let mu = family.mean(u)?;
        let md = family.mean_derivative(u)?;
        for s in linspace(-smax, smax, points) {
            let excess = family.cgf(u, s)? - (s * mu + s * s * md);
            worst = worst.max(excess);
            if excess > 1e-12 {
                count += 1;
            }
        }
    }
    Ok((count, worst))
}

/// Pairs `(u, u')` on `[-5, 5]^2` where `mu_dot(u) > mu_dot(u') exp(m |u - u'|)`.
pub fn self_concordance_violations(family: &RewardFamily, m: f64, points: usize) -> Result<usize> {
    let grid = linspace(-5.0, 5.0, points);
    let md = grid
        .iter()
        .map(|&u| family.mean_derivative(u))
        .collect::<Result<Vec<_>>>()?;
    let mut count = 0;
    for (i, &u) in grid.iter().enumerate() {
        for (j, &v) in grid.iter().enumerate() {
            if md[i] > md[j] * (m * (u - v).abs()).exp() * (1.0 + 1e-12) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// MGF bound for the logistic family at its stated constant; the count at
/// `M = 1` is reported for reference.
pub fn mgf() -> Result<Report> {
    let fam = RewardFamily::logistic();
    let (count, worst) = mgf_violations(&fam, fam.self_concordance, 100)?;
    let (unit, _) = mgf_violations(&fam, 1.0, 100)?;
    Ok(Report::new("mgf", count == 0)
        .metric("m", fam.self_concordance)
        .metric("violations", count as f64)
        .metric("max_excess", worst)
        .metric("violations_at_m_1", unit as f64))
}

pub fn self_concordance() -> Result<Report> {
    let lg = RewardFamily::logistic();
    let ga = RewardFamily::gaussian();
    let l = self_concordance_violations(&lg, lg.self_concordance, 100)?;
    let g = self_concordance_violations(&ga, ga.self_concordance, 100)?;
    let unit = self_concordance_violations(&lg, 1.0, 100)?;
    Ok(Report::new("selfconcordance", l == 0 && g == 0)
        .metric("logistic_m", lg.self_concordance)
        .metric("logistic_violations", l as f64)
        .metric("gaussian_violations", g as f64)
        .metric("logistic_violations_at_m_1", unit as f64))
}

/// Fraction of logistic histories (`d = 2`, `t = 200`, fixed design,
/// `lambda = 1`) with `|g_t(theta_hat) - g_t(theta*)|_{H_t^{-1}} <= gamma_t`.
pub fn coverage(delta: f64, trials: usize, seed: u64) -> Result<Report> {
    let fam = RewardFamily::logistic();
    let (d, t, lambda, s) = (2, 200, 1.0, 1.0);
    let theta_star = DVector::from_row_slice(&[0.6, -0.4]);
    let mut design_rng = rng_for(seed, u64::MAX);
    let arms: Vec<_> = (0..t).map(|_| unit_ball(d, &mut design_rng)).collect();
    let g_map = |theta: &DVector<f64>| -> Result<DVector<f64>> {
        let mut g = theta * lambda;
        for x in &arms {
            g.axpy(fam.mean(x.dot(theta))?, x, 1.0);
        }
        Ok(g)
    };
    let mut h = DMatrix::identity(d, d) * lambda;
    for x in &arms {
        h.ger(fam.mean_derivative(x.dot(&theta_star))?, x, x, 1.0);
    }
    let g_star = g_map(&theta_star)?;
    let width = gamma_t(
        t as u64,
        delta,
        lambda,
        d,
        s,
        fam.self_concordance,
        fam.variance_bound,
    )?;
    let mut covered = 0;
    let mut largest = 0.0f64;
    for trial in 0..trials {
        let mut rng = rng_for(seed, trial as u64);
        let mut hist = History::new(d);
        for x in &arms {
            let y = fam.sample_reward(x.dot(&theta_star), &mut rng)?;
            hist.push(x.clone(), y)?;
        }
        let theta_hat = fit_mle(&hist, lambda, &fam)?.theta;
        let diff = g_map(&theta_hat)? - &g_star;
        let norm = inverse_norms_sq(std::slice::from_ref(&diff), &h)?[0].sqrt();
        largest = largest.max(norm);
        if norm <= width {
            covered += 1;
        }
    }
    let rate = covered as f64 / trials as f64;
    Ok(Report::new("coverage", rate >= 1.0 - delta)
        .metric("delta", delta)
        .metric("trials", trials as f64)
        .metric("coverage", rate)
        .metric("gamma_t", width)
        .metric("max_norm", largest))
}

fn random_history(
    fam: &RewardFamily,
    d: usize,
    t: usize,
    rng: &mut StreamRng,
) -> Result<(History, DVector<f64>)> {
    let theta_star = match fam.kind() {
        FamilyKind::Rayleigh => DVector::from_fn(d, |_, _| 0.5 + rng.random::<f64>()),
        _ => unit_ball(d, rng),
    };
    let mut h = History::new(d);
    for _ in 0..t {
        let x = match fam.kind() {
            FamilyKind::Rayleigh => {
                DVector::from_fn(d, |_, _| 0.1 + rng.random::<f64>()) / d as f64
            }
            _ => unit_ball(d, rng),
        };
        let y = fam.sample_reward(x.dot(&theta_star), rng)?;
        h.push(x, y)?;
    }
    Ok((h, theta_star))
}

/// EVILL with the regulariser draw zeroed against data-dependent PHE with
/// matched reward noise `-a I(x_i^T theta_hat)^{1/2} Z'_i`.
pub fn equivalence(instances: usize, seed: u64) -> Result<Report> {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (f, fam) in [RewardFamily::logistic(), RewardFamily::gaussian()]
        .iter()
        .enumerate()
    {
        for k in 0..instances {
            let mut rng = rng_for(seed, (f * instances + k) as u64);
            let d = rng.random_range(1..=5);
            let t = rng.random_range(1..=100);
            let (h, _) = random_history(fam, d, t, &mut rng)?;
            let spec = PolicySpec::new(PolicyKind::Evill, 0.5 + rng.random::<f64>(), 1.0)?;
            let mut draw = PerturbationDraw::sample(d, t, &mut rng);
            draw.z.fill(0.0);
            let p = evill_step_with_draw(&h, &spec, fam, &draw)?;
            let noise = h
                .arms()
                .iter()
                .zip(&draw.z_prime)
                .map(|(x, zp)| Ok(-spec.a * fam.fisher_info(x.dot(&p.mle))?.sqrt() * zp))
                .collect::<Result<Vec<_>>>()?;
            let phe = phe_fit_with_noise(&h, spec.lambda, fam, &noise, &p.mle)?.theta;
            worst = worst.max((p.theta - phe).norm());
            count += 1;
        }
    }
    Ok(Report::new("equivalence", worst <= 1e-6)
        .metric("instances", count as f64)
        .metric("max_distance", worst))
}

/// Empirical covariance of literal EVILL weights against `a^2 H(theta_hat)`
/// on a fixed logistic history (`d = 3`, `t = 50`).
pub fn covariance(draws: usize, seed: u64) -> Result<Report> {
    let fam = RewardFamily::logistic();
    let mut rng = rng_for(seed, u64::MAX);
    let (h, _) = random_history(&fam, 3, 50, &mut rng)?;
    let spec = PolicySpec::new(PolicyKind::Evill, 1.5, 1.0)?;
    let mle = fit_mle(&h, spec.lambda, &fam)?.theta;
    let target = loss::hessian(&mle, &h, spec.lambda, &fam)? * (spec.a * spec.a);
    let mut rng = rng_for(seed, 0);
    let mut sum = DVector::zeros(3);
    let mut outer = DMatrix::zeros(3, 3);
    for _ in 0..draws {
        let draw = PerturbationDraw::sample(3, h.len(), &mut rng);
        let w = evill_weight(&h, &mle, &spec, &draw, &fam)?;
        sum += &w;
        outer.ger(1.0, &w, &w, 1.0);
    }
    let n = draws as f64;
    let mean = &sum / n;
    let cov = (outer - &mean * mean.transpose() * n) / (n - 1.0);
    let rel = (&cov - &target).norm() / target.norm();
    Ok(Report::new("covariance", rel <= 0.05)
        .metric("draws", n)
        .metric("relative_frobenius_error", rel))
}

/// Rounds with `|a_t|_{V_{t-1}^{-1}} >= b` on random unit-vector sequences
/// (`d = 5`, `lambda = 1`, `b = 0.5`) never exceed the potential bound.
pub fn potential(sequences: usize, length: usize, seed: u64) -> Result<Report> {
    let (d, lambda, b) = (5, 1.0, 0.5);
    let bound = potential_bound(d, lambda, b, 1.0);
    let mut max_count = 0usize;
    let mut violations = 0;
    for k in 0..sequences {
        let mut rng = rng_for(seed, k as u64);
        let mut v = DMatrix::identity(d, d) * lambda;
        let mut count = 0;
        for _ in 0..length {
            let a = unit_vector(d, &mut rng);
            if inverse_norms_sq(std::slice::from_ref(&a), &v)?[0].sqrt() >= b {
                count += 1;
            }
            v.ger(1.0, &a, &a, 1.0);
        }
        max_count = max_count.max(count);
        if count as f64 > bound {
            violations += 1;
        }
    }
    Ok(Report::new("potential", violations == 0)
        .metric("sequences", sequences as f64)
        .metric("bound", bound)
        .metric("max_count", max_count as f64)
        .metric("violations", violations as f64))
}

/// Frank-Wolfe `g <= 2d` and greedy length `<= potential_bound` on the
/// combinatorial arm set (raw and normalised) and on random spanning sets.
pub fn design(random_sets: usize, seed: u64) -> Result<Report> {
    let (lambda, b) = (1.0, 0.5);
    let mut sets: Vec<Vec<DVector<f64>>> = vec![combinatorial_arms(10, 3)];
    sets.push(BanditInstance::by_name("logistic-high", true)?.arms);
    for k in 0..random_sets {
        let mut rng = rng_for(seed, k as u64);
        let d = rng.random_range(2..=10);
        let n = d + rng.random_range(0..=4 * d);
        sets.push((0..n).map(|_| unit_vector(d, &mut rng)).collect());
    }
    let mut worst_ratio = 0.0f64;
    let mut min_gap = f64::INFINITY;
    let mut greedy_ok = true;
    let mut greedy_slack = f64::INFINITY;
    for arms in &sets {
        let d = arms[0].len();
        let des = frank_wolfe_design(arms, None, None)?;
        let g = g_value(arms, &des.weights)?;
        worst_ratio = worst_ratio.max(g / d as f64);
        min_gap = min_gap.min(g - d as f64);
        let st = greedy_warmup(arms, lambda, b)?;
        let l_norm = arms.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let bound = potential_bound(d, lambda, b, l_norm);
        let v = design_matrix(arms, &st.chosen, lambda);
        let reached = max_inverse_norm(arms, &v)?.1 <= b;
        greedy_ok &= reached && st.chosen.len() as f64 <= bound;
        greedy_slack = greedy_slack.min(bound - st.chosen.len() as f64);
    }
    let pass = worst_ratio <= 2.0 && min_gap >= -1e-9 && greedy_ok;
    Ok(Report::new("design", pass)
        .metric("arm_sets", sets.len() as f64)
        .metric("max_g_over_d", worst_ratio)
        .metric("min_g_minus_d", min_gap)
        .metric("greedy_within_bound", if greedy_ok { 1.0 } else { 0.0 })
        .metric("min_greedy_slack", greedy_slack))
}

fn ridge(h: &History, lambda: f64) -> Result<DVector<f64>> {
    let d = h.dim();
    let mut m = DMatrix::identity(d, d) * lambda;
    let mut b = DVector::zeros(d);
    for (x, y) in h.arms().iter().zip(h.rewards()) {
        m.ger(1.0, x, x, 1.0);
        b.axpy(*y, x, 1.0);
    }
    m.lu().solve(&b).ok_or(Error::NotPositiveDefinite)
}

/// Central finite differences of the loss and gradient against the analytic
/// gradient and Hessian, and the Gaussian fit against closed-form ridge.
pub fn gradient(instances: usize, seed: u64) -> Result<Report> {
    let step = 1e-5;
    let mut grad_err = 0.0f64;
    let mut hess_err = 0.0f64;
    let mut ridge_err = 0.0f64;
    let families = [
        RewardFamily::logistic(),
        RewardFamily::gaussian(),
        RewardFamily::rayleigh(),
    ];
    for (f, fam) in families.iter().enumerate() {
        for k in 0..instances {
            let mut rng = rng_for(seed, (f * instances + k) as u64);
            let d = rng.random_range(1..=5);
            let t = rng.random_range(1..=50);
            let (h, theta) = random_history(fam, d, t, &mut rng)?;
            let lambda = 0.5 + rng.random::<f64>();
            let g = loss::grad(&theta, &h, lambda, fam)?;
            let hs = loss::hessian(&theta, &h, lambda, fam)?;
            for j in 0..d {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[j] += step;
                tm[j] -= step;
                let fd = (loss::nll(&tp, &h, lambda, fam)? - loss::nll(&tm, &h, lambda, fam)?)
                    / (2.0 * step);
                grad_err = grad_err.max((fd - g[j]).abs());
                let gfd = (loss::grad(&tp, &h, lambda, fam)? - loss::grad(&tm, &h, lambda, fam)?)
                    / (2.0 * step);
                for i in 0..d {
                    hess_err = hess_err.max((gfd[i] - hs[(i, j)]).abs());
                }
            }
            if fam.kind() == FamilyKind::Gaussian {
                let fit = fit_mle(&h, lambda, fam)?.theta;
                ridge_err = ridge_err.max((fit - ridge(&h, lambda)?).amax());
            }
        }
    }
    let pass = grad_err <= 1e-6 && hess_err <= 1e-5 && ridge_err <= 1e-8;
    Ok(Report::new("gradient", pass)
        .metric("instances_per_family", instances as f64)
        .metric("max_grad_error", grad_err)
        .metric("max_hessian_error", hess_err)
        .metric("max_ridge_error", ridge_err))
}

/// Runs a suite by name with its default sizes.
pub fn run_suite(name: &str, seed: u64, delta: f64) -> Result<Report> {
    match name {
        "mgf" => mgf(),
        "selfconcordance" => self_concordance(),
        "coverage" => coverage(delta, 2000, seed),
        "equivalence" => equivalence(50, seed),
        "covariance" => covariance(100_000, seed),
        "potential" => potential(1000, 200, seed),
        "design" => design(20, seed),
        "gradient" => gradient(100, seed),
        other => Err(Error::InvalidParameter(format!(
            "unknown diagnostic `{other}`"
        ))),
    }
}
