//! Choosing the critical value so the map has a prescribed rotation number.
//!
//! `ρ(f_c)` is continuous and non-decreasing in `c` with `ρ(f_{c+1}) =
//! ρ(f_c) + 1`, so bisection in `c` works once each midpoint can be placed
//! on one side of the target. The side test follows the critical orbit: if
//! `F^q(c) - c - p > 0` then `ρ >= p/q`, and if it is negative `ρ <= p/q`.
//! Walking the convergents of the target, the first convergent that falls
//! on the wrong side of `ρ(f_c)` decides; if none does up to the index
//! where consecutive convergents are within `tol`, then `ρ(f_c)` is within
//! `tol` of the target.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use super::{FlatMapParams, Lift, ProfileKernel};
use crate::cf::{ConvergentTable, RotationTarget};
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `ρ(f_c)` is below the target.
    Below,
    /// `ρ(f_c)` is above the target.
    Above,
    /// `ρ(f_c)` lies between all convergents checked.
    Inside,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneOptions {
    /// Precision of the first bisection steps and floor for all later ones.
    pub base_prec: u32,
    /// Ceiling for the adaptive precision; exceeding it is a plateau stall.
    pub max_prec: u32,
    pub max_steps: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            base_prec: 64,
            max_prec: 4096,
            max_steps: 4000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tuned<R: Real> {
    pub lift: Lift<R>,
    /// Convergent index up to which the side test was run.
    pub depth: usize,
    pub steps: usize,
    /// Precision at which `c` was accepted.
    pub prec: u32,
    /// Guaranteed bound on `|ρ - target|` from the convergent bracket.
    pub bracket_width: f64,
}

/// Smallest `n` with `q_n q_{n+1} >= 1/tol`.
fn depth_for_tol(t: &ConvergentTable, tol: f64) -> Option<usize> {
    let target = -tol.ln();
    (0..t.len().saturating_sub(1)).find(|&n| t.ln_q(n).unwrap() + t.ln_q(n + 1).unwrap() >= target)
}

struct KernelCache<R: Real> {
    ell: f64,
    kernels: HashMap<u32, Arc<ProfileKernel<R>>>,
}

impl<R: Real> KernelCache<R> {
    fn get(&mut self, prec: u32) -> Result<Arc<ProfileKernel<R>>> {
        let p = prec.min(R::MAX_PREC);
        if let Some(k) = self.kernels.get(&p) {
            return Ok(k.clone());
        }
        let k = Arc::new(ProfileKernel::new(self.ell, p)?);
        self.kernels.insert(p, k.clone());
        Ok(k)
    }
}

/// Side of `ρ(f_c)` relative to the target, following the critical orbit
/// through the convergents `0..=depth`. `None` when some displacement is
/// within the precision guard, so its sign cannot be trusted.
pub fn side_of_target<R: Real>(lift: &Lift<R>, table: &ConvergentTable, depth: usize) -> Result<Option<Side>> {
    let q_max = table
        .q_u64(depth)
        .ok_or_else(|| Error::InvalidTarget(format!("convergent {depth} does not fit in 64 bits")))?;
    let guard = lift.guard();
    let (x0, _) = lift.reduce(lift.c());
    let mut y = x0.clone();
    let mut carry: i64 = 0;
    let mut n = 0usize;
    let mut j: u64 = 0;
    while j < q_max {
        let (next, k) = lift.step(&y);
        y = next;
        carry += k;
        j += 1;
        while n <= depth && table.q_u64(n) == Some(j) {
            let p = table.p_u64(n).unwrap() as i64;
            let s = (y.clone() - &x0) + (carry - p) as f64;
            // Even-index convergents lie below the target, odd ones above.
            let conv_above = n % 2 == 1;
            // The orbit fell into the flat interval and closed up exactly:
            // ρ(f_c) = p_n/q_n, which lies on a known side of the target.
            if s.is_zero() {
                return Ok(Some(if conv_above { Side::Above } else { Side::Below }));
            }
            if s.clone().abs() <= guard {
                return Ok(None);
            }
            let positive = s > 0.0;
            if positive && conv_above {
                return Ok(Some(Side::Above));
            }
            if !positive && !conv_above {
                return Ok(Some(Side::Below));
            }
            n += 1;
        }
    }
    Ok(Some(Side::Inside))
}

fn round_up_64(bits: usize) -> u32 {
    (bits.div_ceil(64) * 64) as u32
}

/// Bisection in `c` for `ρ(f_c)` within `tol` of `target`.
pub fn tune<R: Real>(ell: f64, flat_length: f64, target: &RotationTarget<R>, tol: f64, opts: TuneOptions) -> Result<Tuned<R>> {
    if target.is_rational() {
        return Err(Error::InvalidTarget("rotation target is rational".into()));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::param("tol", "must lie in (0,1)"));
    }
    let table = target.convergents();
    let n_star = depth_for_tol(&table, tol).ok_or_else(|| {
        Error::InvalidTarget(format!(
            "continued fraction depth {} too small for tol {tol:e}",
            target.cf.depth()
        ))
    })?;
    let depth = n_star + 1;
    if depth >= table.len() {
        return Err(Error::InvalidTarget(format!(
            "continued fraction depth {} too small for tol {tol:e}; need {}",
            target.cf.depth(),
            depth
        )));
    }
    let bracket_width = (-(table.ln_q(n_star).unwrap() + table.ln_q(n_star + 1).unwrap())).exp();

    let base = opts.base_prec.max(super::MIN_PRECISION.min(R::MAX_PREC));
    let max_prec = opts.max_prec.min(R::MAX_PREC).max(base);
    let mut cache = KernelCache {
        ell,
        kernels: HashMap::new(),
    };
    let rho = target.value.to_f64();
    let mut lo = R::from_f64(rho - 2.0, max_prec);
    let mut hi = R::from_f64(rho + 2.0, max_prec);
    let mut floor_prec = base;

    let make = |cache: &mut KernelCache<R>, c: &R, p: u32| -> Result<Lift<R>> {
        let params = FlatMapParams::new(ell, flat_length, c.with_prec(p), p)?;
        Lift::with_kernel(params, cache.get(p)?)
    };

    let mut step = 0usize;
    while step < opts.max_steps {
        let p = floor_prec.max(round_up_64(step + 48)).min(max_prec);
        let mid = ((lo.with_prec(p + 2) + &hi.with_prec(p + 2)) / 2.0).with_prec(p);
        let width = hi.clone() - &lo;
        if width <= R::pow2(8 - p as i64, p) {
            if p >= max_prec {
                return Err(Error::PlateauStall { prec: p, steps: step });
            }
            floor_prec = (p * 2).min(max_prec);
            continue;
        }
        let lift = make(&mut cache, &mid, p)?;
        match side_of_target(&lift, &table, depth)? {
            None => {
                if p >= max_prec {
                    return Err(Error::PlateauStall { prec: p, steps: step });
                }
                floor_prec = (p + 64).min(max_prec);
                continue;
            }
            Some(Side::Below) => lo = mid.with_prec(max_prec),
            Some(Side::Above) => hi = mid.with_prec(max_prec),
            Some(Side::Inside) => {
                // Confirm with a wider margin before accepting.
                let check_prec = (p + 64).min(max_prec);
                let check = make(&mut cache, &mid, check_prec)?;
                match side_of_target(&check, &table, depth)? {
                    Some(Side::Inside) => {
                        return Ok(Tuned {
                            lift,
                            depth,
                            steps: step + 1,
                            prec: p,
                            bracket_width,
                        })
                    }
                    Some(Side::Below) => lo = mid.with_prec(max_prec),
                    Some(Side::Above) => hi = mid.with_prec(max_prec),
                    None => {}
                }
                floor_prec = check_prec;
            }
        }
        step += 1;
    }
    Err(Error::PlateauStall {
        prec: floor_prec,
        steps: step,
    })
}
