//! WebAssembly bindings for the browser demo.
//!
//! Results are returned as flat `Float64Array`s; the page reshapes them.

use evill_core::env::rayleigh_instances;
use evill_core::experiment::{
    estimation_grid, run_estimation_replicate, run_replicate, WarmupSpec,
};
use evill_core::family::RewardFamily;
use evill_core::history::History;
use evill_core::loss;
use evill_core::policy::{evill_step, fit_mle, laplace_sample, phe_step, PolicyKind, PolicySpec};
use evill_core::rng::{stream, StreamKind};
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Mean cumulative regret per round of `policy` on the Rayleigh bandit.
#[wasm_bindgen]
pub fn rayleigh_regret(
    policy: &str,
    a: f64,
    horizon: u32,
    replicates: u32,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    let (_, inst) = rayleigh_instances();
    let kind: PolicyKind = policy.parse().map_err(js_err)?;
    let spec = PolicySpec::new(kind, a, 1.0).map_err(js_err)?;
    let mut curve = vec![0.0; horizon as usize];
    for r in 0..replicates {
        let out = run_replicate(
            &inst,
            &spec,
            &WarmupSpec::none(),
            horizon as usize,
            seed.into(),
            r.into(),
        )
        .map_err(js_err)?;
        for (c, v) in curve.iter_mut().zip(&out.trace.cumulative) {
            *c += v / replicates as f64;
        }
    }
    Ok(curve)
}

/// Rows `[n, mle, evill, phe]` of mean estimation error on the Rayleigh
/// estimation instance.
#[wasm_bindgen]
pub fn estimation_curve(
    max_n: u32,
    step: u32,
    a: f64,
    replicates: u32,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    if step == 0 || replicates == 0 {
        return Err(JsError::new("step and replicates must be positive"));
    }
    let (inst, _) = rayleigh_instances();
    let grid = estimation_grid(step as usize, max_n as usize);
    let mut acc = vec![0.0; grid.len() * 4];
    for r in 0..replicates {
        let pts = run_estimation_replicate(&inst, a, 1.0, &grid, seed.into(), r.into())
            .map_err(js_err)?;
        for (row, p) in acc.chunks_mut(4).zip(&pts) {
            row[0] = p.n as f64;
            row[1] += p.mle / replicates as f64;
            row[2] += p.evill / replicates as f64;
            row[3] += p.phe / replicates as f64;
        }
    }
    Ok(acc)
}

/// Parameter draws on a two-dimensional logistic history with `t` rounds.
///
/// Layout: the MLE (2 values), then `draws` pairs each for EVILL, Laplace
/// Thompson and data-independent PHE, in that order.
#[wasm_bindgen]
pub fn perturbation_cloud(a: f64, t: u32, draws: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    let fam = RewardFamily::logistic();
    let theta_star = DVector::from_row_slice(&[1.0, -0.5]);
    let mut data = stream(seed.into(), 0, 0, StreamKind::Data);
    let mut h = History::new(2);
    for _ in 0..t {
        let angle = data.random::<f64>() * std::f64::consts::TAU;
        let x = DVector::from_row_slice(&[angle.cos(), angle.sin()]);
        let y = fam
            .sample_reward(x.dot(&theta_star), &mut data)
            .map_err(js_err)?;
        h.push(x, y).map_err(js_err)?;
    }
    let evill = PolicySpec::new(PolicyKind::Evill, a, 1.0).map_err(js_err)?;
    let phe = PolicySpec::new(PolicyKind::Phe, a, 1.0).map_err(js_err)?;
    let mle = fit_mle(&h, 1.0, &fam).map_err(js_err)?.theta;
    let hess = loss::hessian(&mle, &h, 1.0, &fam).map_err(js_err)?;
    let mut out = vec![mle[0], mle[1]];
    let mut rng = stream(seed.into(), 0, 0, StreamKind::Policy);
    let mut ev = Vec::new();
    let mut ts = Vec::new();
    let mut ph = Vec::new();
    for _ in 0..draws {
        let p = evill_step(&h, &evill, &fam, &mut rng).map_err(js_err)?;
        ev.extend([p.theta[0], p.theta[1]]);
        let xi = DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = laplace_sample(&mle, &hess, a, &xi).map_err(js_err)?;
        ts.extend([s[0], s[1]]);
        let p = phe_step(&h, &phe, &fam, &mut rng, false).map_err(js_err)?;
        ph.extend([p.theta[0], p.theta[1]]);
    }
    out.extend(ev);
    out.extend(ts);
    out.extend(ph);
    Ok(out)
}
