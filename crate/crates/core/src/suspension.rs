//! The flow as a suspension over the section map `g` with a logarithmic
//! return time.
//!
//! A flow orbit starting on the section at `z` in `U` visits `z_1 = z`,
//! `z_{i+1} = g(z_i)` and spends `t_i = τ(z_i)` between consecutive visits.
//! Time averages of observables over `[0, t]` are assembled from these
//! passages. An observable is a section function together with a passage
//! profile saying how its mass is spread over one return: uniformly, or
//! concentrated in the stretch spent near the saddle.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cf::RotationTarget;
use crate::error::{Error, Result};
use crate::flatmap::orbit::order_of;
use crate::flatmap::{ForwardRow, Lift};
use crate::real::{csv_digits, Real};

/// `τ(z) = tau0 + kappa (-ln d(z, c))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReturnTimeModel {
    pub tau0: f64,
    pub kappa: f64,
    /// Radius on the section of the model neighbourhood of the saddle.
    pub epsilon_cut: f64,
}

impl ReturnTimeModel {
    /// `tau0 = 1`, `kappa = 1/lambda1`.
    pub fn for_lambda1(lambda1: f64, epsilon_cut: f64) -> Result<Self> {
        let m = ReturnTimeModel {
            tau0: 1.0,
            kappa: 1.0 / lambda1,
            epsilon_cut,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return Err(Error::param("tau0", "must be positive"));
        }
        // kappa = 0 is the constant-ceiling degenerate model.
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::param("kappa", "must be >= 0"));
        }
        if !(self.epsilon_cut > 0.0 && self.epsilon_cut < 0.5) {
            return Err(Error::param("epsilon_cut", "must lie in (0, 1/2)"));
        }
        Ok(())
    }

    /// Return time at a point with `ln d(z, c) = ln_dist`.
    pub fn tau(&self, ln_dist: f64) -> f64 {
        self.tau0 + self.kappa * -ln_dist
    }

    /// Near-saddle dwell `kappa * max(0, ln(eps / d))`.
    pub fn dwell(&self, ln_dist: f64) -> f64 {
        self.kappa * (self.epsilon_cut.ln() - ln_dist).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct SegmentPoint<R> {
    pub i: usize,
    pub z: R,
    /// Signed circle offset from the critical value, in `[-1/2, 1/2)`.
    pub offset: R,
    pub dist: R,
    pub ln_dist: f64,
    pub t: f64,
    pub dwell: f64,
}

/// Points `z_1..z_{N+1}` of one orbit with their return times.
#[derive(Debug, Clone)]
pub struct OrbitSegment<R> {
    pub prec: u32,
    pub model: ReturnTimeModel,
    pub points: Vec<SegmentPoint<R>>,
}

/// A cut of the segment at total time `t = t_1 + ... + t_N + t̃`,
/// `0 < t̃ <= t_{N+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeWindow {
    pub n: usize,
    pub remainder: f64,
    pub t: f64,
}

fn check_start<R: Real>(lift: &Lift<R>, z: &R) -> Result<R> {
    let z = z.with_prec(lift.prec());
    if !(z > *lift.a() && z < *lift.b()) {
        return Err(Error::param("z", "start point must lie strictly inside the flat interval"));
    }
    Ok(z)
}

fn make_point<R: Real>(lift: &Lift<R>, model: &ReturnTimeModel, i: usize, z: R) -> Result<SegmentPoint<R>> {
    let offset = lift.signed_offset(&z);
    let dist = offset.clone().abs();
    if dist <= lift.guard() {
        return Err(Error::DiscontinuityHit {
            index: i,
            prec: lift.prec(),
        });
    }
    let ln_dist = dist.ln().to_f64();
    Ok(SegmentPoint {
        i,
        z,
        offset,
        dist,
        ln_dist,
        t: model.tau(ln_dist),
        dwell: model.dwell(ln_dist),
    })
}

fn next_point<R: Real>(lift: &Lift<R>, model: &ReturnTimeModel, prev: &SegmentPoint<R>) -> Result<SegmentPoint<R>> {
    let y = lift.offset_from_crit(&prev.z);
    let z = lift.g_from_offset(&y);
    make_point(lift, model, prev.i + 1, z)
}

/// `N + 1` points `z_1 = z, z_{i+1} = g(z_i)`.
pub fn iterate_segment<R: Real>(lift: &Lift<R>, model: &ReturnTimeModel, z: &R, n: usize) -> Result<OrbitSegment<R>> {
    model.validate()?;
    let z = check_start(lift, z)?;
    let mut points = Vec::with_capacity(n + 1);
    points.push(make_point(lift, model, 1, z)?);
    for _ in 0..n {
        let next = next_point(lift, model, points.last().unwrap())?;
        points.push(next);
    }
    Ok(OrbitSegment {
        prec: lift.prec(),
        model: *model,
        points,
    })
}

/// Iterates until the accumulated time reaches `t_max` (or `n_cap` returns).
pub fn iterate_until<R: Real>(lift: &Lift<R>, model: &ReturnTimeModel, z: &R, t_max: f64, n_cap: usize) -> Result<OrbitSegment<R>> {
    model.validate()?;
    let z = check_start(lift, z)?;
    let mut points = vec![make_point(lift, model, 1, z)?];
    let mut acc = points[0].t;
    while acc < t_max && points.len() <= n_cap {
        let next = next_point(lift, model, points.last().unwrap())?;
        acc += next.t;
        points.push(next);
    }
    Ok(OrbitSegment {
        prec: lift.prec(),
        model: *model,
        points,
    })
}

/// How an observable's mass is spread over one passage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Evenly over the whole return time.
    Uniform,
    /// Only over the near-saddle dwell, which sits in the middle of the
    /// passage with the regular part split evenly before and after it.
    SaddleDwell,
}

impl<R: Real> OrbitSegment<R> {
    /// Number of complete returns `N` (points minus one).
    pub fn n(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    /// The default cut with `t̃ = t_{N+1}`.
    pub fn full_window(&self) -> TimeWindow {
        let n = self.n();
        let remainder = self.points.last().map(|p| p.t).unwrap_or(0.0);
        let mut w = TimeWindow { n, remainder, t: 0.0 };
        w.t = self.accumulate(&w, |_| 1.0, Profile::Uniform);
        w
    }

    /// Cut at time `t`.
    pub fn window(&self, t: f64) -> Result<TimeWindow> {
        if !(t > 0.0) {
            return Err(Error::param("t", "must be positive"));
        }
        let mut before = 0.0;
        for (k, p) in self.points.iter().enumerate() {
            if before + p.t >= t {
                let mut w = TimeWindow {
                    n: k,
                    remainder: t - before,
                    t: 0.0,
                };
                w.t = self.accumulate(&w, |_| 1.0, Profile::Uniform);
                return Ok(w);
            }
            before += p.t;
        }
        Err(Error::InsufficientData(format!("segment covers time {before}, asked for {t}")))
    }

    /// Sum of the passage contributions `χ(z_i)·(time share)` over
    /// `z_1..z_N` and the partial passage at `z_{N+1}`, in index order.
    fn accumulate(&self, w: &TimeWindow, chi: impl Fn(&SegmentPoint<R>) -> f64, profile: Profile) -> f64 {
        let mut sum = 0.0;
        for p in &self.points[..w.n] {
            let share = match profile {
                Profile::Uniform => p.t,
                Profile::SaddleDwell => p.dwell,
            };
            sum += chi(p) * share;
        }
        if let Some(p) = self.points.get(w.n) {
            let share = match profile {
                Profile::Uniform => w.remainder,
                Profile::SaddleDwell => {
                    let regular = p.t - p.dwell;
                    (w.remainder - regular / 2.0).clamp(0.0, p.dwell)
                }
            };
            sum += chi(p) * share;
        }
        sum
    }

    /// `(1/t) ∫_0^t α(φ_s(z)) ds` for `α` given by `(chi, profile)`.
    pub fn time_average(&self, w: &TimeWindow, chi: impl Fn(&SegmentPoint<R>) -> f64, profile: Profile) -> f64 {
        self.accumulate(w, chi, profile) / w.t
    }

    /// Fraction of `[0, t]` spent inside the model neighbourhood of the
    /// saddle.
    pub fn gamma_hat(&self, w: &TimeWindow) -> f64 {
        self.time_average(w, |_| 1.0, Profile::SaddleDwell)
    }

    /// Time spent in returns from the open section arc between signed
    /// offsets `e1` and `e2`, plus the number of complete returns from it.
    pub fn arc_occupation(&self, w: &TimeWindow, e1: &R, e2: &R) -> (f64, usize) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let inside = |p: &SegmentPoint<R>| p.offset > *lo && p.offset < *hi;
        let time = self.accumulate(w, |p| if inside(p) { 1.0 } else { 0.0 }, Profile::Uniform);
        let count = self.points[..w.n].iter().filter(|p| inside(p)).count();
        (time, count)
    }

    /// Circular order of `z_1..z_{N+1}` against `-1·ρ, ..., -(N+1)·ρ`.
    pub fn order_matches_rotation(&self, rho: &RotationTarget<R>) -> Result<bool> {
        let one = R::one(self.prec);
        let keys: Vec<R> = self
            .points
            .iter()
            .map(|p| if p.offset.is_sign_negative() { p.offset.clone() + &one } else { p.offset.clone() })
            .collect();
        let guard = R::pow2(32 - self.prec as i64, self.prec);
        let rot_keys: Vec<R> = self.points.iter().map(|p| rho.orbit_point(-(p.i as i64))).collect();
        let rot_guard = R::pow2(16 - rho.prec() as i64, rho.prec());
        Ok(order_of(&keys, &guard)? == order_of(&rot_keys, &rot_guard)?)
    }

    /// CSV with header `i,z_i,dist_to_crit,t_i`.
    pub fn to_csv(&self) -> String {
        let d = csv_digits(self.prec);
        let mut out = String::from("i,z_i,dist_to_crit,t_i\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{:.16e}", p.i, p.z.to_sci(d), p.dist.to_sci(d), p.t);
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BOccupation {
    pub l: usize,
    pub time: f64,
    pub count: usize,
}

/// Occupation of `A_{n0}` and of the arcs `B_l` over one window.
#[derive(Debug, Clone, Serialize)]
pub struct Occupation {
    pub n0: usize,
    pub n: usize,
    /// Time in returns from `(q_{n0}, q_{n0+1})`, the arc containing the
    /// critical value.
    pub t_a: f64,
    pub b: Vec<BOccupation>,
    /// `Σ_{l=n0}^{n-1} t_{B_l}`.
    pub sum_b: f64,
    /// Time in the central arc `(q_n, q_{n+1})` left uncovered by the `B_l`.
    pub t_core: f64,
    /// `Σ_l (-ln|(q_{l+2}, 0)|) / q_{l+1}` from measured distances.
    pub comparison: f64,
}

/// `t_{A_{n0}}`, the `t_{B_l}` for `l = n0..n-1` and the core arc.
pub fn occupation_times<R: Real>(seg: &OrbitSegment<R>, w: &TimeWindow, forward: &[ForwardRow<R>], n0: usize, n: usize) -> Result<Occupation> {
    if n < n0 {
        return Err(Error::param("n", "must be >= n0"));
    }
    let fwd = |k: usize| -> Result<&ForwardRow<R>> {
        forward
            .iter()
            .find(|r| r.n == k)
            .ok_or_else(|| Error::MissingGeometry(format!("forward distance for q_{k}")))
    };
    let (t_a, _) = seg.arc_occupation(w, &fwd(n0)?.signed, &fwd(n0 + 1)?.signed);
    let (t_core, _) = seg.arc_occupation(w, &fwd(n)?.signed, &fwd(n + 1)?.signed);
    let mut b = Vec::new();
    let mut comparison = 0.0;
    for l in n0..n {
        let (time, count) = seg.arc_occupation(w, &fwd(l)?.signed, &fwd(l + 2)?.signed);
        b.push(BOccupation { l, time, count });
        comparison += -fwd(l + 2)?.ln_dist / fwd(l + 1)?.qn as f64;
    }
    let sum_b = b.iter().map(|x| x.time).sum();
    Ok(Occupation {
        n0,
        n,
        t_a,
        b,
        sum_b,
        t_core,
        comparison,
    })
}

/// Number of `-iρ`, `1 <= i <= N`, in the open arc between `q_l ρ` and
/// `q_{l+2} ρ` (signed offsets from 0).
pub fn rotation_arc_count<R: Real>(rho: &RotationTarget<R>, ql: u64, ql2: u64, n: usize) -> usize {
    let signed = |x: R| if x >= 0.5 { x - 1.0 } else { x };
    let e1 = signed(rho.orbit_point(ql as i64));
    let e2 = signed(rho.orbit_point(ql2 as i64));
    let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
    (1..=n)
        .filter(|&i| {
            let y = signed(rho.orbit_point(-(i as i64)));
            y > lo && y < hi
        })
        .count()
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaRow {
    pub t: f64,
    pub n_returns: usize,
    pub gamma_hat: f64,
    pub t_a: f64,
    pub n0: usize,
    pub t_a_over_t: f64,
}

/// `gamma_hat` and `t_{A_{n0}}/t` along a grid of times.
pub fn gamma_series<R: Real>(seg: &OrbitSegment<R>, times: &[f64], forward: &[ForwardRow<R>], n0: usize) -> Result<Vec<GammaRow>> {
    if times.is_empty() {
        return Err(Error::param("t_grid", "empty"));
    }
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let w = seg.window(t)?;
        let occ = occupation_times(seg, &w, forward, n0, n0)?;
        rows.push(GammaRow {
            t: w.t,
            n_returns: w.n,
            gamma_hat: seg.gamma_hat(&w),
            t_a: occ.t_a,
            n0,
            t_a_over_t: occ.t_a / w.t,
        });
    }
    Ok(rows)
}

/// CSV with header `t,gamma_hat,tA,n0,tA_over_t`.
pub fn gamma_csv(rows: &[GammaRow]) -> String {
    let mut out = String::from("t,gamma_hat,tA,n0,tA_over_t\n");
    for r in rows {
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{},{:.16e}", r.t, r.gamma_hat, r.t_a, r.n0, r.t_a_over_t);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct TauMuEstimate {
    pub n: usize,
    pub estimate: f64,
    /// Depth `T` in nats: `-ln d` is capped at `T`.
    pub truncation_depth: f64,
    /// `(1/N) Σ kappa·max(0, -ln d_i - T)`, the mass removed by the cap.
    pub truncated_mass: f64,
    /// Points closer to the critical value than the precision guard; their
    /// distances are only known to be small.
    pub beyond_guard: usize,
    /// Running estimates at `N/2^k`, smallest first.
    pub partials: Vec<(usize, f64)>,
    /// Successive differences of `partials` shrink.
    pub cauchy_shrinking: bool,
}

/// Averages the capped return time over `f^i(c)`, `i = 1..=N`. `depth`
/// defaults to the guard depth `(prec - 32) ln 2`.
pub fn tau_mu_integral_estimate<R: Real>(lift: &Lift<R>, model: &ReturnTimeModel, n: usize, depth: Option<f64>) -> Result<TauMuEstimate> {
    model.validate()?;
    if n < 1 {
        return Err(Error::param("N", "must be >= 1"));
    }
    let guard_depth = (lift.prec() as f64 - 32.0) * std::f64::consts::LN_2;
    let depth = depth.unwrap_or(guard_depth).min(guard_depth);
    let guard = lift.guard();
    let (mut y, _) = lift.reduce(lift.c());
    let mut sum = 0.0;
    let mut cut = 0.0;
    let mut beyond_guard = 0;
    let mut checkpoints: Vec<usize> = (0..).map(|k| n >> k).take_while(|&m| m >= 16).collect();
    checkpoints.reverse();
    let mut partials = Vec::new();
    for i in 1..=n {
        y = lift.step(&y).0;
        let d = lift.dist_to_crit(&y);
        let neg_ln = if d <= guard {
            beyond_guard += 1;
            guard_depth
        } else {
            -d.ln().to_f64()
        };
        sum += model.tau0 + model.kappa * neg_ln.min(depth);
        cut += model.kappa * (neg_ln - depth).max(0.0);
        if checkpoints.first() == Some(&i) {
            checkpoints.remove(0);
            partials.push((i, sum / i as f64));
        }
    }
    let diffs: Vec<f64> = partials.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let cauchy_shrinking = diffs.len() >= 2 && diffs[diffs.len() - 1] <= diffs[0];
    Ok(TauMuEstimate {
        n,
        estimate: sum / n as f64,
        truncation_depth: depth,
        truncated_mass: cut / n as f64,
        beyond_guard,
        partials,
        cauchy_shrinking,
    })
}
