//! JSON renderings of diagnostic reports and theory constants.

use evill_core::design::{theory_constants, TheoryConstants, TheoryInputs};
use evill_core::diagnostics::{run_suite, Report};
use evill_core::family::RewardFamily;
use serde_json::{json, Map, Value};

use crate::error::Result;

/// Non-finite values become `null`.
fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn report_json(r: &Report) -> Value {
    let metrics: Map<String, Value> = r
        .metrics
        .iter()
        .map(|(k, v)| (k.clone(), number(*v)))
        .collect();
    json!({ "suite": r.name, "pass": r.pass, "metrics": metrics })
}

pub fn diagnose(suite: &str, seed: u64, delta: f64) -> Result<Value> {
    Ok(report_json(&run_suite(suite, seed, delta)?))
}

pub fn constants_json(c: &TheoryConstants) -> Value {
    let i = &c.inputs;
    json!({
        "inputs": {
            "n": i.n, "d": i.d, "S": number(i.s), "M": number(i.m),
            "L": number(i.l), "delta": number(i.delta),
        },
        "lambda_n": number(c.lambda_n),
        "gamma_n": number(c.gamma_n),
        "b": number(c.b),
        "kappa": number(c.kappa),
        "C_d": number(c.c_d),
        "Xi": number(c.xi),
        "D_hat_star": number(c.d_hat_star),
        "delta_prime": number(c.delta_prime),
    })
}

pub fn constants(
    family: &RewardFamily,
    n: u64,
    d: usize,
    s: f64,
    delta: f64,
    b_override: Option<f64>,
) -> Result<Value> {
    let inputs = TheoryInputs::for_family(family, n, d, s, delta);
    Ok(constants_json(&theory_constants(
        &inputs, family, b_override,
    )?))
}
