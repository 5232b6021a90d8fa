//! The subcommands. Each one adds CSV files and a JSON section to a [`Run`];
//! `main` writes them out.

use std::fmt::Write as _;

use cherry_core::bounds::{
    self, verify_proposition, verify_senk_empirical, BoundParams, PropositionReport, ThetaOrigin, ThetaSequence,
};
use cherry_core::cf::{ConvergentTable, RotationTarget};
use cherry_core::flatmap::{
    orbit_combinatorics, preimage_geometry, tune, with_ladder, FlatMapParams, Lift, PreimageGeometry, TuneOptions,
};
use cherry_core::real::csv_digits;
use cherry_core::suspension::{
    gamma_csv, gamma_series, iterate_segment, iterate_until, occupation_times, rotation_arc_count,
    tau_mu_integral_estimate, OrbitSegment, ReturnTimeModel,
};
use cherry_core::{Mp, Real};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ModelConfig, TargetConfig};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// How many extra indices past `n0` the occupation ledger covers.
const B_SPAN: usize = 4;

pub struct Run {
    pub cfg: ExperimentConfig,
    target: RotationTarget<Mp>,
    table: ConvergentTable,
    lift: Option<Lift<Mp>>,
    pub prec_used: u32,
    pub files: Vec<(String, String)>,
    pub results: serde_json::Map<String, Value>,
}

/// Bits needed to hold every digit of a decimal string.
fn decimal_bits(s: &str) -> u32 {
    let digits = s
        .split(['e', 'E'])
        .next()
        .unwrap_or("")
        .chars()
        .filter(|c| c.is_ascii_digit())
        .count();
    ((digits as f64) * std::f64::consts::LOG2_10).ceil() as u32 + 8
}

fn f64_json(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

impl Run {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let target = cfg.build_target()?;
        let table = target.convergents();
        Ok(Run {
            prec_used: cfg.map.precision_bits,
            cfg,
            target,
            table,
            lift: None,
            files: Vec::new(),
            results: serde_json::Map::new(),
        })
    }

    fn note_prec(&mut self, p: u32) {
        self.prec_used = self.prec_used.max(p);
    }

    fn ell(&self) -> f64 {
        let (l1, l2) = self.cfg.eigenvalues();
        l1 / -l2
    }

    fn params_for(&self, c: Mp, prec: u32) -> Result<FlatMapParams<Mp>> {
        let (l1, l2) = self.cfg.eigenvalues();
        if let Some(ell) = self.cfg.map.ell {
            if (ell - l1 / -l2).abs() > 1e-12 * ell.max(1.0) {
                return Err(CliError::config("map.ell", "must equal lambda1 / -lambda2"));
            }
        }
        Ok(FlatMapParams::with_eigenvalues(l1, l2, self.cfg.map.flat_length, c, prec)?)
    }

    /// The configured map, tuned to the target when no critical value is
    /// given.
    fn map(&mut self) -> Result<Lift<Mp>> {
        if let Some(l) = &self.lift {
            return Ok(l.clone());
        }
        let lift = match self.cfg.map.c.clone() {
            Some(s) => {
                let p = self.cfg.map.precision_bits.max(decimal_bits(&s)).min(self.cfg.max_precision());
                let c = Mp::parse(&s, p).ok_or_else(|| CliError::config("map.c", "not a decimal number"))?;
                Lift::new(self.params_for(c, p)?)?
            }
            None => self.tune_map()?,
        };
        self.note_prec(lift.prec());
        self.lift = Some(lift.clone());
        Ok(lift)
    }

    fn tune_map(&mut self) -> Result<Lift<Mp>> {
        let tol = self.cfg.tune.as_ref().map(|t| t.tol).unwrap_or(1e-8);
        let verify = self.cfg.tune.as_ref().map(|t| t.verify_iterations).unwrap_or(0);
        let opts = TuneOptions {
            base_prec: self.cfg.map.precision_bits,
            max_prec: self.cfg.max_precision(),
            ..TuneOptions::default()
        };
        let tuned = tune(self.ell(), self.cfg.map.flat_length, &self.target, tol, opts)?;
        let params = self.params_for(tuned.lift.c().clone(), tuned.lift.prec())?;
        let lift = Lift::with_kernel(params, tuned.lift.kernel().clone())?;
        let mut section = json!({
            "tol": tol,
            "steps": tuned.steps,
            "depth": tuned.depth,
            "precision_bits": tuned.prec,
            "bracket_width": tuned.bracket_width,
            "c": lift.c().to_decimal(),
        });
        if verify > 0 {
            let est = lift.rotation_number(verify)?;
            let diff = (est.estimate.clone() - &self.target.value).abs().to_f64();
            section["verify"] = json!({
                "n_iter": verify,
                "estimate": est.estimate.to_sci(csv_digits(lift.prec())),
                "abs_diff": diff,
                "error_bound": est.error_bound,
                "within": diff <= tol + est.error_bound,
            });
        }
        self.results.insert("tune".into(), section);
        Ok(lift)
    }

    fn geometry(&mut self, n_max: usize) -> Result<PreimageGeometry<Mp>> {
        let lift = self.map()?;
        let max = self.cfg.max_precision();
        let table = &self.table;
        let (g, p) = with_ladder(lift.prec(), max, |p| preimage_geometry(&lift.at_precision(p)?, table, n_max))?;
        self.note_prec(p);
        Ok(g)
    }

    fn model(&self) -> Result<ReturnTimeModel> {
        let m = self.cfg.model.clone().unwrap_or(ModelConfig {
            tau0: 1.0,
            kappa: None,
            epsilon_cut: 0.1,
        });
        let (l1, _) = self.cfg.eigenvalues();
        let model = ReturnTimeModel {
            tau0: m.tau0,
            kappa: m.kappa.unwrap_or(1.0 / l1),
            epsilon_cut: m.epsilon_cut,
        };
        model.validate()?;
        Ok(model)
    }

    /// Number of quotients the user actually prescribed, when the target is
    /// given by them.
    fn prescribed_depth(&self) -> Option<usize> {
        match &self.cfg.target {
            TargetConfig::Quotients { quotients } => Some(quotients.len()),
            _ => None,
        }
    }

    pub fn tune(&mut self) -> Result<()> {
        if self.cfg.map.c.is_some() {
            return Err(CliError::config("map.c", "tune computes the critical value; remove it from the config"));
        }
        let lift = self.map()?;
        let params = serde_json::to_string_pretty(&lift.params().to_json()).expect("params serialize");
        self.files.push(("params.json".into(), params + "\n"));
        Ok(())
    }

    pub fn alpha(&mut self) -> Result<()> {
        let n_max = self
            .cfg
            .geometry
            .as_ref()
            .ok_or_else(|| CliError::config("geometry", "alpha needs a `geometry` block"))?
            .n_max;
        let g = self.geometry(n_max)?;
        let ell = self.ell();
        let senk = if ell > 1.0 {
            let th = ThetaSequence::measured(g.thetas());
            Some(verify_senk_empirical(&th, &self.table, ell, self.target.cf.quotients())?)
        } else {
            None
        };

        let d = csv_digits(g.prec);
        let mut csv = String::from("n,qn,alpha_n,theta_n,log_k1,log_k1_over_qn\n");
        for r in &g.gaps {
            let row = senk.as_ref().and_then(|s| s.rows.iter().find(|x| x.n == r.n));
            let (lk, lkq) = match row {
                Some(x) => (format!("{:.16e}", x.log_k1), format!("{:.16e}", x.log_k1_over_qn)),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(csv, "{},{},{},{:.16e},{},{}", r.n, r.qn, r.alpha.to_sci(d), r.theta, lk, lkq);
        }
        self.files.push(("geometry.csv".into(), g.to_csv()));
        self.files.push(("alpha.csv".into(), csv));
        self.results.insert(
            "alpha".into(),
            json!({
                "precision_bits": g.prec,
                "geometry": g.summary(),
                "intervals_disjoint": g.intervals_disjoint(),
                "senk": senk.map(|s| json!({
                    "k1_min": f64_json(s.k1_min),
                    "trend": s.trend,
                    "uniform": s.uniform,
                })),
            }),
        );
        Ok(())
    }

    pub fn bounds(&mut self) -> Result<()> {
        let b = self
            .cfg
            .bounds
            .clone()
            .ok_or_else(|| CliError::config("bounds", "bounds needs a `bounds` block"))?;
        let ell = self.ell();
        let quotients = self.target.cf.quotients().to_vec();
        let with_k = |mut p: BoundParams| {
            if let Some(k) = b.k {
                p.k = k;
            }
            p
        };

        let mut theta = bounds::synthetic_theta(ell, &quotients, b.n0, (b.seeds[0], b.seeds[1]), b.n_last)?;
        if b.adversarial {
            for (k, t) in theta.theta.iter_mut().enumerate() {
                let n = theta.first + k as i64;
                if n >= 0 {
                    let ln_q = self.table.ln_q(n as usize + 1).unwrap_or(f64::INFINITY);
                    *t = ln_q.exp().min(f64::MAX);
                }
            }
        }
        let params = with_k(BoundParams::from_data(ell, &quotients, b.n0, &theta)?);
        let synthetic = verify_proposition(&theta, &self.table, &params)?;
        self.files.push(("proposition_synthetic.csv".into(), synthetic.to_csv()));
        let mut section = serde_json::Map::new();
        section.insert("c_of_ell".into(), json!(params.c));
        section.insert("synthetic".into(), proposition_json(&synthetic));

        if let Some(geo) = self.cfg.geometry.clone() {
            let g = self.geometry(geo.n_max)?;
            let measured = ThetaSequence::measured(g.thetas());
            let p = with_k(BoundParams::from_data(ell, &quotients, b.n0, &measured)?);
            let empirical = verify_proposition(&measured, &self.table, &p)?;
            self.files.push(("proposition_empirical.csv".into(), empirical.to_csv()));
            section.insert("empirical".into(), proposition_json(&empirical));

            let fwd = ThetaSequence {
                first: 0,
                theta: g.forward.iter().map(|f| -f.ln_dist).collect(),
                origin: ThetaOrigin::MeasuredFromMap,
            };
            let p = with_k(BoundParams::from_data(ell, &quotients, b.n0, &fwd)?);
            let corollary = verify_proposition(&fwd, &self.table, &p)?;
            self.files.push(("corollary.csv".into(), corollary.to_csv()));
            section.insert("corollary".into(), proposition_json(&corollary));

            let limit = self.prescribed_depth().unwrap_or(usize::MAX);
            let dists: Vec<(usize, f64)> = g
                .forward
                .iter()
                .filter(|f| f.n <= limit)
                .map(|f| (f.n, f.ln_dist))
                .collect();
            let ratio = bounds::ratio_sequence(&dists)?;
            let mut csv = String::from("n,ln_r,r,running_inf\n");
            for r in &ratio.rows {
                let _ = writeln!(csv, "{},{:.16e},{:.16e},{:.16e}", r.n, r.ln_r, r.r, r.running_inf);
            }
            self.files.push(("ratio.csv".into(), csv));
            section.insert(
                "ratio".into(),
                json!({
                    "max_n": dists.last().map(|d| d.0),
                    "inf": f64_json(ratio.inf),
                    "alpha": f64_json(ratio.alpha),
                    "c_fit": f64_json(ratio.c_fit),
                    "trend": ratio.trend,
                    "bounded_away": ratio.inf > 0.0 && !ratio.trend.map(|t| t.decaying).unwrap_or(true),
                }),
            );
        }
        self.results.insert("bounds".into(), Value::Object(section));
        Ok(())
    }

    pub fn gamma(&mut self) -> Result<()> {
        let gc = self
            .cfg
            .gamma
            .clone()
            .ok_or_else(|| CliError::config("gamma", "gamma needs a `gamma` block"))?;
        let model = self.model()?;
        let lift = self.map()?;
        let max = self.cfg.max_precision();
        let n_b = gc.n0 + B_SPAN;
        let t_max = *gc.t_grid.last().unwrap();
        let table = &self.table;
        let ((g, seg), p) = with_ladder(lift.prec(), max, |p| {
            let l = lift.at_precision(p)?;
            let g = preimage_geometry(&l, table, n_b)?;
            let z = (l.a().clone() + l.b()) / 2.0;
            let seg = iterate_until(&l, &model, &z, t_max, gc.n_cap)?;
            Ok((g, seg))
        })?;
        self.note_prec(p);
        let rows = gamma_series(&seg, &gc.t_grid, &g.forward, gc.n0)?;
        self.files.push(("gamma.csv".into(), gamma_csv(&rows)));

        let w = seg.window(t_max)?;
        let occ = occupation_times(&seg, &w, &g.forward, gc.n0, n_b)?;
        let b_rows: Vec<Value> = occ
            .b
            .iter()
            .map(|b| {
                let ql = self.table.q_u64(b.l).unwrap_or(0);
                let ql1 = self.table.q_u64(b.l + 1).unwrap_or(u64::MAX);
                let ql2 = self.table.q_u64(b.l + 2).unwrap_or(0);
                let rotation = rotation_arc_count(&self.target, ql, ql2, w.n);
                json!({
                    "l": b.l,
                    "t_b": b.time,
                    "count": b.count,
                    "rotation_count": rotation,
                    "count_bound_ok": (b.count as u128) * (ql1 as u128) <= (w.n as u128) + 2 * (ql1 as u128),
                })
            })
            .collect();
        let first = rows.first().unwrap();
        let last = rows.last().unwrap();
        self.results.insert(
            "gamma".into(),
            json!({
                "precision_bits": p,
                "model": model,
                "n_returns": seg.n(),
                "floor_ok": w.t >= model.tau0 * w.n as f64,
                "gamma_first": first.gamma_hat,
                "gamma_last": last.gamma_hat,
                "t_a_over_t_last": last.t_a_over_t,
                "occupation": {
                    "t": w.t,
                    "n0": occ.n0,
                    "n": occ.n,
                    "t_a": occ.t_a,
                    "sum_b": occ.sum_b,
                    "t_core": occ.t_core,
                    "comparison": occ.comparison,
                    "b": b_rows,
                },
            }),
        );
        Ok(())
    }

    pub fn orbit(&mut self) -> Result<()> {
        let oc = self
            .cfg
            .orbit
            .clone()
            .ok_or_else(|| CliError::config("orbit", "orbit needs an `orbit` block"))?;
        let model = self.model()?;
        let lift = self.map()?;
        let max = self.cfg.max_precision();
        let target = &self.target;
        let ((comb, seg, seg_order), p) = with_ladder(lift.prec(), max, |p| {
            let l = lift.at_precision(p)?;
            let comb = orbit_combinatorics(&l, target, oc.n)?;
            let z = (l.a().clone() + l.b()) / 2.0;
            let seg: OrbitSegment<Mp> = iterate_segment(&l, &model, &z, oc.segment_n)?;
            let order = seg.order_matches_rotation(target)?;
            Ok((comb, seg, order))
        })?;
        self.note_prec(p);
        self.files.push(("segment.csv".into(), seg.to_csv()));
        let w = seg.full_window();
        let mut section = json!({
            "precision_bits": p,
            "n": oc.n,
            "orders_match": comb.orders_match(),
            "segment_n": seg.n(),
            "segment_order_matches": seg_order,
            "segment_time": w.t,
            "floor_ok": w.t >= model.tau0 * seg.n() as f64,
        });
        if oc.tau_mu_n > 0 {
            let l = lift.at_precision(p)?;
            let est = tau_mu_integral_estimate(&l, &model, oc.tau_mu_n, None)?;
            section["tau_mu"] = serde_json::to_value(&est).expect("estimate serializes");
        }
        self.results.insert("orbit".into(), section);
        Ok(())
    }

    /// Every stage the config has a block for.
    pub fn report(&mut self) -> Result<()> {
        self.map()?;
        if let Some(l) = &self.lift {
            let params = serde_json::to_string_pretty(&l.params().to_json()).expect("params serialize");
            self.files.push(("params.json".into(), params + "\n"));
        }
        if self.cfg.geometry.is_some() {
            self.alpha()?;
        }
        if self.cfg.bounds.is_some() {
            self.bounds()?;
        }
        if self.cfg.gamma.is_some() {
            self.gamma()?;
        }
        if self.cfg.orbit.is_some() {
            self.orbit()?;
        }
        Ok(())
    }
}

fn proposition_json(r: &PropositionReport) -> Value {
    json!({
        "verdict": r.verdict,
        "k": r.params.k,
        "c": r.params.c,
        "n0": r.params.n0,
        "k_fit": f64_json(r.k_fit),
        "rows": r.rows.len(),
        "violations": r.rows.iter().filter(|x| !x.verdict).count(),
    })
}
