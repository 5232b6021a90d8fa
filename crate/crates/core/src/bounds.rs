//! The `θ` recurrence and the bounds built on it.
//!
//! With `θ_n = -ln α_n`, the gap inequality reads
//! `θ_n <= e1(a_{n+1}) θ_{n-1} + ℓ^{-a_n} θ_{n-2} - ln K1` where
//! `e1(a) = (1 - ℓ^{-a})/(ℓ - 1)`. Iterating its saturated form gives
//! `θ_n <= K C^n q_{n+1}`. Everything here runs in log space on `f64`:
//! `θ` is already a logarithm, and the quantities it is compared with
//! (`q_{n+1}`, `C^n`) are handled through their logarithms too.

use std::fmt::Write as _;

use num_bigint::BigUint;
use serde::Serialize;

use crate::cf::{ln_biguint, ConvergentTable};
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaOrigin {
    SyntheticRecurrence,
    MeasuredFromMap,
}

/// `θ_n` for `n = first, first + 1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaSequence {
    pub first: i64,
    pub theta: Vec<f64>,
    pub origin: ThetaOrigin,
}

impl ThetaSequence {
    pub fn measured(theta: Vec<f64>) -> Self {
        ThetaSequence {
            first: 0,
            theta,
            origin: ThetaOrigin::MeasuredFromMap,
        }
    }

    pub fn get(&self, n: i64) -> Option<f64> {
        let k = n - self.first;
        if k < 0 {
            return None;
        }
        self.theta.get(k as usize).copied()
    }

    pub fn last_index(&self) -> i64 {
        self.first + self.theta.len() as i64 - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    pub k: f64,
    pub c: f64,
    pub n0: usize,
    pub ell: f64,
}

fn check_ell(ell: f64) -> Result<()> {
    if !(ell > 1.0 && ell.is_finite()) {
        return Err(Error::Domain(format!("ell = {ell} must exceed 1")));
    }
    Ok(())
}

/// `ℓ^{-a}`.
pub fn ell_pow_neg(ell: f64, a: u64) -> f64 {
    (-(a as f64) * ell.ln()).exp()
}

/// `(1 - ℓ^{-a})/(ℓ - 1)`, the coefficient of `θ_{n-1}`.
pub fn e1(ell: f64, a: u64) -> f64 {
    -(-(a as f64) * (ell - 1.0).ln_1p()).exp_m1() / (ell - 1.0)
}

/// `(1 - ℓ^{-a})/((ℓ - 1) a)`; decreasing in `a`, equal to `1/ℓ` at `a = 1`.
pub fn base_quantity(ell: f64, a: u64) -> f64 {
    e1(ell, a) / a as f64
}

/// The same quantity at the precision of `ell`.
pub fn base_quantity_at<R: Real>(ell: &R, a: u64) -> R {
    let p = ell.prec();
    let pow = (ell.ln() * -(a as f64)).exp();
    (R::one(p) - &pow) / &((ell.clone() - 1.0) * a as f64)
}

/// `C(ℓ) = sup_a base(ℓ, a)^{1/n0}` over the supplied quotients.
pub fn c_of_ell(ell: f64, quotients: &[u64], n0: usize) -> Result<f64> {
    check_ell(ell)?;
    if quotients.is_empty() || quotients.contains(&0) {
        return Err(Error::param("quotients", "need at least one quotient, all >= 1"));
    }
    if n0 < 1 {
        return Err(Error::param("n0", "must be >= 1"));
    }
    let best = quotients
        .iter()
        .map(|&a| base_quantity(ell, a))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best.powf(1.0 / n0 as f64))
}

/// Saturated right-hand side of the `θ` recurrence.
pub fn theta_step(ell: f64, a_next: u64, a_cur: u64, theta_prev: f64, theta_prev2: f64) -> Result<f64> {
    check_ell(ell)?;
    if a_next < 1 || a_cur < 1 {
        return Err(Error::param("a", "quotients must be >= 1"));
    }
    if theta_prev < 0.0 || theta_prev2 < 0.0 {
        return Err(Error::param("theta", "must be >= 0"));
    }
    Ok(e1(ell, a_next) * theta_prev + ell_pow_neg(ell, a_cur) * theta_prev2)
}

/// Runs the saturated recurrence from seeds `(θ_{n0-2}, θ_{n0-1})` up to
/// `θ_{n_last}`. `quotients[i]` is `a_{i+1}`.
pub fn synthetic_theta(ell: f64, quotients: &[u64], n0: usize, seeds: (f64, f64), n_last: usize) -> Result<ThetaSequence> {
    if n0 < 1 {
        return Err(Error::param("n0", "must be >= 1"));
    }
    if quotients.len() < n_last + 1 {
        return Err(Error::Misaligned(format!(
            "θ_{n_last} needs a_{} but only {} quotients given",
            n_last + 1,
            quotients.len()
        )));
    }
    let a = |i: usize| quotients[i - 1];
    let mut theta = vec![seeds.0, seeds.1];
    for n in n0..=n_last {
        let k = theta.len();
        let next = theta_step(ell, a(n + 1), a(n), theta[k - 1], theta[k - 2])?;
        theta.push(next);
    }
    Ok(ThetaSequence {
        first: n0 as i64 - 2,
        theta,
        origin: ThetaOrigin::SyntheticRecurrence,
    })
}

impl BoundParams {
    /// `C = c_of_ell(ℓ, quotients, n0)`, `K = max(θ_{n0-2}, θ_{n0-1})`.
    pub fn from_data(ell: f64, quotients: &[u64], n0: usize, theta: &ThetaSequence) -> Result<Self> {
        let c = c_of_ell(ell, quotients, n0)?;
        let n0i = n0 as i64;
        let (Some(t2), Some(t1)) = (theta.get(n0i - 2), theta.get(n0i - 1)) else {
            return Err(Error::Misaligned(format!("θ_{} and θ_{} required", n0i - 2, n0i - 1)));
        };
        Ok(BoundParams {
            k: t1.max(t2),
            c,
            n0,
            ell,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropositionRow {
    pub n: usize,
    /// `q_{n+1}` as an exact decimal integer.
    pub qn1: String,
    pub theta: f64,
    /// `ln(θ_n / (q_{n+1} C^n))`.
    pub ln_ratio: f64,
    pub ratio: f64,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropositionReport {
    pub params: BoundParams,
    pub rows: Vec<PropositionRow>,
    pub verdict: bool,
    /// Smallest `K` that would make every row pass.
    pub k_fit: f64,
}

/// Checks `θ_n <= K C^n q_{n+1}` for `n = n0..`, as far as both the
/// sequence and the table reach.
pub fn verify_proposition(theta: &ThetaSequence, table: &ConvergentTable, params: &BoundParams) -> Result<PropositionReport> {
    let n0 = params.n0 as i64;
    if theta.first > n0 || theta.last_index() < n0 {
        return Err(Error::Misaligned(format!(
            "θ covers {}..={}, proposition starts at n0 = {n0}",
            theta.first,
            theta.last_index()
        )));
    }
    let last = theta.last_index().min(table.len() as i64 - 2);
    if last < n0 {
        return Err(Error::Misaligned(format!("convergent table too short for n0 = {n0}")));
    }
    let ln_c = params.c.ln();
    let ln_k = params.k.ln();
    let mut rows = Vec::new();
    let mut k_fit = 0f64;
    for n in n0..=last {
        let th = theta.get(n).unwrap();
        let q: &BigUint = table.q(n as usize + 1).unwrap();
        let ln_ratio = if th > 0.0 {
            th.ln() - ln_biguint(q) - n as f64 * ln_c
        } else {
            f64::NEG_INFINITY
        };
        let verdict = th <= 0.0 || ln_ratio <= ln_k;
        k_fit = k_fit.max(ln_ratio.exp());
        rows.push(PropositionRow {
            n: n as usize,
            qn1: q.to_string(),
            theta: th,
            ln_ratio,
            ratio: ln_ratio.exp(),
            verdict,
        });
    }
    let verdict = rows.iter().all(|r| r.verdict);
    Ok(PropositionReport {
        params: *params,
        rows,
        verdict,
        k_fit,
    })
}

impl PropositionReport {
    /// CSV with header `n,qn1,theta,ratio,verdict`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,qn1,theta,ratio,verdict\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:.16e},{:.16e},{}", r.n, r.qn1, r.theta, r.ratio, r.verdict);
        }
        out
    }
}

/// Result of the window trend test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Trend {
    pub window: usize,
    /// Least-squares slope of the log values against the index.
    pub slope: f64,
    /// The fitted line drops by more than a factor 2 across the window.
    pub decaying: bool,
}

/// Least-squares slope of the last `window` log-values; "decaying" when the
/// fitted line loses more than a factor of 2 across the window.
pub fn decay_trend(log_values: &[f64], window: usize) -> Result<Trend> {
    let w = window.min(log_values.len());
    if w < 3 {
        return Err(Error::InsufficientData(format!("trend needs 3 values, have {w}")));
    }
    let ys = &log_values[log_values.len() - w..];
    let mx = (w as f64 - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / w as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    Ok(Trend {
        window: w,
        slope,
        decaying: slope * (w as f64 - 1.0) < -std::f64::consts::LN_2,
    })
}

pub const TREND_WINDOW: usize = 6;

#[derive(Debug, Clone, Serialize)]
pub struct SenkRow {
    pub n: usize,
    pub qn: String,
    pub theta: f64,
    /// Largest `ln K1` the inequality allows at this `n`.
    pub log_k1: f64,
    /// The correction `ln(K1)/q_n` that the induction drops.
    pub log_k1_over_qn: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SenkReport {
    pub ell: f64,
    pub rows: Vec<SenkRow>,
    pub k1_min: f64,
    pub trend: Trend,
    pub uniform: bool,
}

/// Per-`n` minimal `K1` in `α_n >= K1 α_{n-1}^{e1(a_{n+1})} α_{n-2}^{ℓ^{-a_n}}`
/// from measured `θ`. `quotients[i]` is `a_{i+1}`.
pub fn verify_senk_empirical(theta: &ThetaSequence, table: &ConvergentTable, ell: f64, quotients: &[u64]) -> Result<SenkReport> {
    check_ell(ell)?;
    if theta.theta.len() < 4 {
        return Err(Error::InsufficientData(format!("{} α values, need at least 4", theta.theta.len())));
    }
    let start = (theta.first + 2).max(1);
    let mut rows = Vec::new();
    for n in start..=theta.last_index() {
        let nu = n as usize;
        let (Some(a_next), Some(a_cur)) = (quotients.get(nu), quotients.get(nu - 1)) else {
            return Err(Error::Misaligned(format!("a_{} needed for n = {n}", nu + 1)));
        };
        let Some(q) = table.q(nu) else {
            return Err(Error::Misaligned(format!("q_{n} missing from the table")));
        };
        let th = theta.get(n).unwrap();
        let log_k1 = -th + e1(ell, *a_next) * theta.get(n - 1).unwrap() + ell_pow_neg(ell, *a_cur) * theta.get(n - 2).unwrap();
        rows.push(SenkRow {
            n: nu,
            qn: q.to_string(),
            theta: th,
            log_k1,
            log_k1_over_qn: log_k1 / ln_biguint(q).exp(),
        });
    }
    let logs: Vec<f64> = rows.iter().map(|r| r.log_k1).collect();
    let trend = decay_trend(&logs, TREND_WINDOW)?;
    let min_log = logs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SenkReport {
        ell,
        k1_min: min_log.exp(),
        uniform: !trend.decaying && min_log.is_finite(),
        trend,
        rows,
    })
}

impl SenkReport {
    /// CSV with header `n,qn,theta,log_k1,log_k1_over_qn`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,qn,theta,log_k1,log_k1_over_qn\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e}",
                r.n, r.qn, r.theta, r.log_k1, r.log_k1_over_qn
            );
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub ln_r: f64,
    pub r: f64,
    pub running_inf: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub rows: Vec<RatioRow>,
    pub inf: f64,
    /// `α = sqrt(inf r_n)`.
    pub alpha: f64,
    /// Largest `C` with `|(0, q_n)| >= C α^n` on the data.
    pub c_fit: f64,
    pub trend: Option<Trend>,
}

/// `r_n = |(0,q_n)| / |(0,q_{n-2})|` from `(n, ln |(0,q_n)|)` pairs.
pub fn ratio_sequence(ln_dist: &[(usize, f64)]) -> Result<RatioReport> {
    let mut rows = Vec::new();
    let mut inf = f64::INFINITY;
    for &(n, ld) in ln_dist {
        let Some(&(_, prev)) = ln_dist.iter().find(|(m, _)| n >= 2 && *m == n - 2) else {
            continue;
        };
        let ln_r = ld - prev;
        let r = ln_r.exp();
        inf = inf.min(r);
        rows.push(RatioRow {
            n,
            ln_r,
            r,
            running_inf: inf,
        });
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("no pair (n, n-2) of forward distances".into()));
    }
    let alpha = inf.sqrt();
    let ln_alpha = alpha.ln();
    let ln_c = ln_dist
        .iter()
        .map(|&(n, ld)| ld - n as f64 * ln_alpha)
        .fold(f64::INFINITY, f64::min);
    let logs: Vec<f64> = rows.iter().map(|r| r.ln_r).collect();
    Ok(RatioReport {
        inf,
        alpha,
        c_fit: ln_c.exp(),
        trend: decay_trend(&logs, TREND_WINDOW).ok(),
        rows,
    })
}
