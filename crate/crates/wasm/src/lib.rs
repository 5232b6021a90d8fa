//! Three interactive views over the `f64` backend, exported to JavaScript.
//! Each export is a thin wrapper over a plain function so the numerics can
//! be tested natively.

use cherry_core::bounds::{c_of_ell, synthetic_theta, BoundParams};
use cherry_core::cf::{convergents, ContinuedFraction};
use cherry_core::flatmap::{build_map, Lift};
use cherry_core::Result;
use wasm_bindgen::prelude::*;

/// `f64` maps still validate against the 64-bit floor; the backend rounds
/// to 53 bits.
const PREC: u32 = 64;

fn js_err(e: cherry_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn map(ell: f64, flat: f64, c: f64) -> Result<Lift<f64>> {
    build_map(ell, flat, c, PREC)
}

/// `[x0, F(x0), x1, F(x1), ...]` for `n` points of one period starting at `a`.
pub fn graph(ell: f64, flat: f64, c: f64, n: usize) -> Result<Vec<f64>> {
    let f = map(ell, flat, c)?;
    let a = *f.a();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let x = a + i as f64 / (n.max(2) - 1) as f64;
        out.push(x);
        out.push(f.eval(&x));
    }
    Ok(out)
}

/// `[c0, ρ(c0), c1, ρ(c1), ...]` over `c` in `[0, 1]`.
pub fn staircase(ell: f64, flat: f64, n_c: usize, n_iter: u64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * n_c);
    for i in 0..n_c {
        let c = i as f64 / (n_c.max(2) - 1) as f64;
        let rho = map(ell, flat, c)?.rotation_number(n_iter)?.estimate;
        out.push(c);
        out.push(rho);
    }
    Ok(out)
}

/// Rows `[n, ln θ_n, ln(K C^n q_{n+1})]` of the saturated recurrence, plus
/// `C` as the first entry.
pub fn theta(ell: f64, quotients: &[u64], n0: usize, n_last: usize, seeds: (f64, f64)) -> Result<Vec<f64>> {
    let mut q = quotients.to_vec();
    while q.len() < n_last + 2 {
        q.extend_from_within(..quotients.len());
    }
    let th = synthetic_theta(ell, &q, n0, seeds, n_last)?;
    let params = BoundParams::from_data(ell, &q, n0, &th)?;
    let table = convergents(&ContinuedFraction::prescribed(q)?);
    let mut out = vec![params.c];
    for n in n0..=n_last {
        let t = th.get(n as i64).unwrap_or(0.0);
        out.push(n as f64);
        out.push(t.ln());
        out.push(params.k.ln() + n as f64 * params.c.ln() + table.ln_q(n + 1).unwrap_or(f64::NAN));
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn map_graph(ell: f64, flat_length: f64, c: f64, n: usize) -> std::result::Result<Vec<f64>, JsError> {
    graph(ell, flat_length, c, n).map_err(js_err)
}

#[wasm_bindgen]
pub fn rotation_staircase(ell: f64, flat_length: f64, n_c: usize, n_iter: u32) -> std::result::Result<Vec<f64>, JsError> {
    staircase(ell, flat_length, n_c, n_iter as u64).map_err(js_err)
}

/// `quotients` is a comma-separated period, repeated as needed.
#[wasm_bindgen]
pub fn theta_bounds(ell: f64, quotients: &str, n0: usize, n_last: usize, seed: f64) -> std::result::Result<Vec<f64>, JsError> {
    let q: Vec<u64> = quotients
        .split(',')
        .map(|s| s.trim().parse::<u64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| JsError::new(&format!("quotients: {e}")))?;
    if q.is_empty() {
        return Err(JsError::new("quotients: empty"));
    }
    theta(ell, &q, n0, n_last, (seed, seed)).map_err(js_err)
}

/// `C(ℓ)` for one period of quotients.
#[wasm_bindgen]
pub fn c_constant(ell: f64, quotients: &str, n0: usize) -> std::result::Result<f64, JsError> {
    let q: Vec<u64> = quotients.split(',').filter_map(|s| s.trim().parse().ok()).collect();
    c_of_ell(ell, &q, n0).map_err(js_err)
}
