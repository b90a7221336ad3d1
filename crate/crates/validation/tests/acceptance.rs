//! Acceptance checks: one PASS/FAIL line per criterion.
//!
//! The logistic experiment runs with `EVILL_ACCEPTANCE_REPLICATES`
//! replicates (default 20; the full protocol uses 100).

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use evill_cli::config::{EstimationConfig, PolicyConfig, RunConfig, WarmupConfig};
use evill_cli::runner::{self, RunSummary};
use evill_core::diagnostics;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rayleigh_config(kind: &str, output: &Path) -> RunConfig {
    RunConfig {
        instance: "rayleigh-bandit".into(),
        horizon: 100,
        replicates: 100,
        seed: 2024,
        output: output.to_path_buf(),
        normalize_arms: false,
        policy: PolicyConfig {
            kind: kind.into(),
            a: 1.0,
            lambda: 1.0,
            phe_fisher_scaled: false,
        },
        warmup: WarmupConfig::default(),
    }
}

fn summary(config: &RunConfig) -> RunSummary {
    let plan = config.plan().expect("valid config");
    runner::run(&plan, runner::workers().unwrap())
        .expect("run")
        .summary
}

fn rayleigh_bandit() -> Outcome {
    let start = Instant::now();
    let dir = Path::new("unused");
    let ev = summary(&rayleigh_config("evill", dir));
    let ts = summary(&rayleigh_config("tsl", dir));
    let ph = summary(&rayleigh_config("phe", dir));
    let secs = start.elapsed().as_secs_f64();
    let linear = 0.6 * 100.0 * ph.max_gap;
    let (e, t, p) = (ev.mean.unwrap(), ts.mean.unwrap(), ph.mean.unwrap());
    let ok = ev.failures.is_empty() && ts.failures.is_empty() && ph.failures.is_empty();
    outcome(
        ok && e < 10.0 && t < 10.0 && p >= linear && secs < 60.0,
        format!(
            "mean regret evill {e:.3} (<10), tsl {t:.3} (<10), phe {p:.3} (>= {linear:.1}); {secs:.1}s (<60s)"
        ),
    )
}

fn rayleigh_estimation() -> Outcome {
    let start = Instant::now();
    let cfg = EstimationConfig {
        instance: "rayleigh-est".into(),
        replicates: 100,
        seed: 11,
        output: "unused".into(),
        step: 100,
        max_n: 10_000,
        a: 1.0,
        lambda: 1.0,
    };
    let out = runner::run_estimation(&cfg, runner::workers().unwrap()).expect("estimation");
    let secs = start.elapsed().as_secs_f64();
    let c = &out.curve;
    let (first, last) = (&c[0], &c[c.len() - 1]);
    let half = &c[c.len() / 2..];
    // consecutive drops larger than three combined standard errors
    let drops = half
        .windows(2)
        .filter(|w| {
            let se = (w[0].phe_se.powi(2) + w[1].phe_se.powi(2)).sqrt();
            w[1].phe_mean < w[0].phe_mean - 3.0 * se
        })
        .count();
    let phe_ok = last.phe_mean >= 0.1 && drops == 0;
    let evill_ok = last.evill_mean <= 2.0 * last.mle_mean;
    let mle_ok = last.mle_mean <= first.mle_mean / 3.0;
    outcome(
        out.failures.is_empty() && phe_ok && evill_ok && mle_ok && secs < 300.0,
        format!(
            "n=10000: phe {:.4} (>=0.1, {drops} drops beyond noise), evill {:.4} <= 2 x mle {:.4}; \
             mle n=100 {:.4} -> {:.4} (<= 1/3); {secs:.1}s (<300s)",
            last.phe_mean, last.evill_mean, last.mle_mean, first.mle_mean, last.mle_mean
        ),
    )
}

fn logistic_bandit() -> Outcome {
    let replicates: u64 = std::env::var("EVILL_ACCEPTANCE_REPLICATES")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(20);
    let start = Instant::now();
    let median = |instance: &str, kind: &str, a: f64| {
        let cfg = RunConfig {
            instance: instance.into(),
            horizon: 10_000,
            replicates,
            seed: 1,
            output: "unused".into(),
            normalize_arms: false,
            policy: PolicyConfig {
                kind: kind.into(),
                a,
                lambda: 1.0,
                phe_fisher_scaled: false,
            },
            warmup: WarmupConfig {
                method: "uniform-random".into(),
                b: 0.5,
            },
        };
        let s = summary(&cfg);
        assert!(s.failures.is_empty(), "{:?}", s.failures);
        assert!(s.tau.iter().all(|&t| t == 120));
        s.median.unwrap()
    };
    let lo = [
        median("logistic-low", "evill", 1.0),
        median("logistic-low", "tsl", 1.0),
        median("logistic-low", "fpl", 0.5),
    ];
    let hi = [
        median("logistic-high", "evill", 1.0),
        median("logistic-high", "tsl", 1.0),
        median("logistic-high", "fpl", 0.5),
    ];
    let secs = start.elapsed().as_secs_f64();
    let projected = secs * 100.0 / replicates as f64;
    let a = lo[0] <= 0.8 * lo[2] && lo[1] <= 0.8 * lo[2];
    let b = lo[0] < hi[0] && lo[1] < hi[1];
    outcome(
        a && b && projected < 1800.0,
        format!(
            "R={replicates}; median low evill {:.1} tsl {:.1} fpl {:.1}; high evill {:.1} tsl {:.1} fpl {:.1}; \
             {secs:.0}s (projected {projected:.0}s at R=100, <1800s)",
            lo[0], lo[1], lo[2], hi[0], hi[1], hi[2]
        ),
    )
}

fn report_line(r: &diagnostics::Report, keys: &[&str]) -> String {
    keys.iter()
        .map(|k| match r.get(k) {
            Some(v) if v.fract() == 0.0 && v.abs() < 1e9 => format!("{k}={v:.0}"),
            Some(v) => format!("{k}={v:.4e}"),
            None => format!("{k}=?"),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn equivalence() -> Outcome {
    let r = diagnostics::equivalence(50, 4).expect("suite");
    outcome(r.pass, report_line(&r, &["instances", "max_distance"]))
}

fn covariance() -> Outcome {
    let r = diagnostics::covariance(100_000, 5).expect("suite");
    outcome(
        r.pass,
        report_line(&r, &["draws", "relative_frobenius_error"]),
    )
}

fn concordance() -> Outcome {
    let m = diagnostics::mgf().expect("suite");
    let s = diagnostics::self_concordance().expect("suite");
    outcome(
        m.pass && s.pass,
        format!(
            "mgf {}; selfconcordance {}",
            report_line(&m, &["m", "violations", "violations_at_m_1"]),
            report_line(
                &s,
                &[
                    "logistic_violations",
                    "gaussian_violations",
                    "logistic_violations_at_m_1"
                ]
            )
        ),
    )
}

fn coverage() -> Outcome {
    let a = diagnostics::coverage(0.1, 2000, 7).expect("suite");
    let b = diagnostics::coverage(0.05, 2000, 7).expect("suite");
    let cb = b.get("coverage").unwrap();
    outcome(
        a.pass && cb >= 0.95,
        format!(
            "delta=0.1: {}; delta=0.05: {}",
            report_line(&a, &["coverage", "gamma_t", "max_norm"]),
            report_line(&b, &["coverage", "gamma_t"])
        ),
    )
}

fn gradients() -> Outcome {
    let r = diagnostics::gradient(100, 8).expect("suite");
    outcome(
        r.pass,
        report_line(
            &r,
            &["max_grad_error", "max_hessian_error", "max_ridge_error"],
        ),
    )
}

fn designs() -> Outcome {
    let d = diagnostics::design(20, 9).expect("suite");
    let p = diagnostics::potential(1000, 200, 9).expect("suite");
    outcome(
        d.pass && p.pass,
        format!(
            "design {}; potential {}",
            report_line(
                &d,
                &[
                    "arm_sets",
                    "max_g_over_d",
                    "min_g_minus_d",
                    "min_greedy_slack"
                ]
            ),
            report_line(&p, &["sequences", "bound", "max_count", "violations"])
        ),
    )
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut identical = 0;
    let mut compared = 0;
    for kind in ["evill", "tsl", "phe"] {
        let write = |name: &str, workers: usize| {
            let dir = tmp.path().join(format!("{kind}-{name}"));
            let plan = rayleigh_config(kind, &dir).plan().expect("valid");
            let out = runner::run(&plan, workers).expect("run");
            runner::write_run(&out, &dir).expect("write");
            dir
        };
        let a = write("a", 1);
        let b = write("b", 4);
        for r in 0..100 {
            let name = runner::trace_file_name(r);
            compared += 1;
            if fs::read(a.join(&name)).ok() == fs::read(b.join(&name)).ok() {
                identical += 1;
            }
        }
        compared += 1;
        if fs::read(a.join("summary.json")).ok() == fs::read(b.join("summary.json")).ok() {
            identical += 1;
        }
    }
    outcome(
        identical == compared,
        format!("{identical}/{compared} files byte-identical across runs with 1 and 4 workers"),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "rayleigh bandit regret", rayleigh_bandit),
        (2, "rayleigh estimation", rayleigh_estimation),
        (3, "logistic bandit orderings", logistic_bandit),
        (4, "evill/phe equivalence", equivalence),
        (5, "perturbation covariance", covariance),
        (6, "mgf and self-concordance", concordance),
        (7, "confidence width coverage", coverage),
        (8, "gradient and hessian", gradients),
        (9, "warm-up designs", designs),
        (10, "determinism", determinism),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {name}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
