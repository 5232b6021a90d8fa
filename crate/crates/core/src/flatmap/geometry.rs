//! Preimages of the flat interval and the gaps they leave at the critical
//! value.
//!
//! `-1 = [a, b]` and `-(i+1) = g(-i)`; none of these intervals contains the
//! critical value, so `g` is continuous on each and maps endpoints to
//! endpoints. At the closest-return indices `q_n` we record the gap
//! `|(-q_n, 0)|` between `-q_n` and the critical value, the bracket
//! `|[-q_n, 0)| = |-q_n| + |(-q_n, 0)|`, and `α_n = gap / bracket`.

use std::fmt::Write as _;

use serde::Serialize;

use super::Lift;
use crate::cf::ConvergentTable;
use crate::error::{Error, Result};
use crate::real::{csv_digits, Real};

#[derive(Debug, Clone)]
pub struct PreimageInterval<R> {
    pub i: u64,
    pub left: R,
    pub right: R,
    /// Offset of `left` from the critical value, in `(0,1)`.
    pub(crate) offset: R,
    pub(crate) length: R,
}

impl<R: Real> PreimageInterval<R> {
    pub fn length(&self) -> &R {
        &self.length
    }

    /// Circle distance from the interval to the critical value.
    pub fn gap(&self) -> R {
        let right_gap = R::one(self.offset.prec()) - &self.offset - &self.length;
        self.offset.clone().min_of(right_gap)
    }
}

#[derive(Debug, Clone)]
pub struct GapRow<R> {
    pub n: usize,
    pub qn: u64,
    pub gap: R,
    pub bracket: R,
    pub alpha: R,
    /// `θ_n = -ln α_n`, computed as `ln(bracket) - ln(gap)`.
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct ForwardRow<R> {
    pub n: usize,
    pub qn: u64,
    /// `|(q_n, 0)|`, circle distance from `f^{q_n}(c)` to `c`.
    pub dist: R,
    /// Signed offset of `f^{q_n}(c)` from `c` in `[-1/2, 1/2)`.
    pub signed: R,
    pub ln_dist: f64,
}

#[derive(Debug, Clone)]
pub struct PreimageGeometry<R> {
    pub prec: u32,
    pub intervals: Vec<PreimageInterval<R>>,
    pub gaps: Vec<GapRow<R>>,
    pub forward: Vec<ForwardRow<R>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometrySummary {
    pub prec: u32,
    pub n_intervals: usize,
    pub n_gaps: usize,
    pub n_forward: usize,
    pub min_log2_gap: f64,
}

/// Builds `-1, ..., -q_{n_max}`, the gap rows for `n = 0..=n_max` and the
/// forward critical distances for `n = 0..=n_max + 2` (as far as the table
/// reaches).
pub fn preimage_geometry<R: Real>(lift: &Lift<R>, table: &ConvergentTable, n_max: usize) -> Result<PreimageGeometry<R>> {
    if n_max >= table.len() {
        return Err(Error::param("n_max", format!("table has only {} rows", table.len())));
    }
    let q_top = table
        .q_u64(n_max)
        .ok_or_else(|| Error::param("n_max", "q_{n_max} does not fit in 64 bits"))?;
    let p = lift.prec();
    let one = R::one(p);

    let mut intervals = Vec::with_capacity(q_top as usize);
    let a = lift.a().clone();
    let b = lift.b().clone();
    let mut cur = PreimageInterval {
        i: 1,
        offset: lift.offset_from_crit(&a),
        length: b.clone() - &a,
        left: a,
        right: b,
    };
    for i in 1..=q_top {
        let end = cur.offset.clone() + &cur.length;
        if cur.offset.is_zero() || end >= one {
            return Err(Error::Invariant(format!("interval -{i} contains the critical value")));
        }
        lift.check_guard(&cur.length)?;
        lift.check_guard(&cur.gap())?;
        if i == q_top {
            intervals.push(cur);
            break;
        }
        let left = lift.g_from_offset(&cur.offset);
        let right = lift.g_from_offset(&end);
        let next = PreimageInterval {
            i: i + 1,
            offset: lift.offset_from_crit(&left),
            length: right.clone() - &left,
            left,
            right,
        };
        intervals.push(std::mem::replace(&mut cur, next));
    }

    let mut gaps = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let qn = table.q_u64(n).unwrap();
        let iv = &intervals[(qn - 1) as usize];
        let gap = iv.gap();
        let bracket = iv.length.clone() + &gap;
        let theta = (bracket.ln() - &gap.ln()).to_f64();
        gaps.push(GapRow {
            n,
            qn,
            alpha: gap.clone() / &bracket,
            gap,
            bracket,
            theta,
        });
    }

    let n_fwd = (n_max + 2).min(table.len() - 1);
    let q_fwd = table.q_u64(n_fwd).ok_or_else(|| Error::param("n_max", "forward orbit length overflows"))?;
    let mut forward = Vec::with_capacity(n_fwd + 1);
    let (mut y, _) = lift.reduce(lift.c());
    let mut n = 0usize;
    for j in 1..=q_fwd {
        y = lift.step(&y).0;
        while n <= n_fwd && table.q_u64(n) == Some(j) {
            let signed = lift.signed_offset(&y);
            let dist = signed.clone().abs();
            lift.check_guard(&dist)?;
            forward.push(ForwardRow {
                n,
                qn: j,
                ln_dist: dist.ln().to_f64(),
                dist,
                signed,
            });
            n += 1;
        }
    }

    Ok(PreimageGeometry {
        prec: p,
        intervals,
        gaps,
        forward,
    })
}

impl<R: Real> PreimageGeometry<R> {
    /// `θ_n` for every gap row.
    pub fn thetas(&self) -> Vec<f64> {
        self.gaps.iter().map(|g| g.theta).collect()
    }

    pub fn forward_dist(&self, n: usize) -> Option<&ForwardRow<R>> {
        self.forward.iter().find(|f| f.n == n)
    }

    /// Pairwise disjointness of the stored intervals, by a sort of their
    /// offsets from the critical value.
    pub fn intervals_disjoint(&self) -> bool {
        let mut spans: Vec<(&R, R)> = self
            .intervals
            .iter()
            .map(|iv| (&iv.offset, iv.offset.clone() + &iv.length))
            .collect();
        spans.sort_by(|x, y| x.0.total_cmp(y.0));
        spans.windows(2).all(|w| w[0].1 <= *w[1].0)
            && spans.iter().all(|(lo, hi)| **lo > 0.0 && *hi < 1.0)
    }

    pub fn summary(&self) -> GeometrySummary {
        let min_log2_gap = self
            .gaps
            .iter()
            .map(|g| g.gap.exponent().map(|e| e as f64 - 1.0).unwrap_or(f64::NEG_INFINITY))
            .fold(f64::INFINITY, f64::min);
        GeometrySummary {
            prec: self.prec,
            n_intervals: self.intervals.len(),
            n_gaps: self.gaps.len(),
            n_forward: self.forward.len(),
            min_log2_gap,
        }
    }

    /// CSV with header `n,qn,gap,bracket,alpha_n,fwd_dist`.
    pub fn to_csv(&self) -> String {
        let d = csv_digits(self.prec);
        let mut out = String::from("n,qn,gap,bracket,alpha_n,fwd_dist\n");
        for g in &self.gaps {
            let fwd = self.forward_dist(g.n).map(|f| f.dist.to_sci(d)).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                g.n,
                g.qn,
                g.gap.to_sci(d),
                g.bracket.to_sci(d),
                g.alpha.to_sci(d),
                fwd
            );
        }
        out
    }
}
