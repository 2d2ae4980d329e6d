//! One function per subcommand; each returns its output in memory.

use redem::limits::{critical_q, er_gamma, growth_rate, interpolation_rate, rem_free_energy, Alpha};
use redem::montecarlo::{self, ExperimentKind};
use redem::rates::psi;
use redem::{Error, ExperimentReport, ExtReal, RateFunction, RunOptions};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::Result;
use crate::table::{fmt_real, real_json, Cell, Table, TOOL, VERSION};

fn rates_of(cfg: &RunConfig) -> (RateFunction, RateFunction) {
    let tol = cfg.tol();
    (
        RateFunction::phi(cfg.energy_law).with_tolerance(tol),
        RateFunction::nu(cfg.length_law, cfg.energy_law).with_tolerance(tol),
    )
}

/// `OutOfRange` becomes `fallback`; every other error propagates.
fn or_out_of_range(r: redem::Result<f64>, fallback: f64) -> redem::Result<f64> {
    match r {
        Err(Error::OutOfRange(_)) => Ok(fallback),
        other => other,
    }
}

/// Columns `x, phi, psi, nu`, all evaluated at the same x.
pub fn rates(cfg: &RunConfig) -> Result<Table> {
    let (phi, nu) = rates_of(cfg);
    let mut t = Table::new("rates", cfg.emit()?, vec!["x", "phi", "psi", "nu"]);
    for x in cfg.x_grid()? {
        t.push(vec![
            x.into(),
            phi.eval(x)?.into(),
            psi(cfg.length_law, x)?.into(),
            nu.eval(x)?.into(),
        ]);
    }
    Ok(t)
}

/// Columns `q, growth_rate, free_energy, rem_f1, minimizer_x, constraint_active`.
pub fn limits(cfg: &RunConfig) -> Result<Table> {
    let beta = cfg.beta_positive()?;
    let (phi, nu) = rates_of(cfg);
    let tol = cfg.tol();
    let mut t = Table::new(
        "limits",
        cfg.emit()?,
        vec!["q", "growth_rate", "free_energy", "rem_f1", "minimizer_x", "constraint_active"],
    );
    for q in cfg.q_grid()? {
        let r = growth_rate(&nu, beta, q, tol)?;
        t.push(vec![
            q.into(),
            r.growth_rate.into(),
            r.free_energy.into(),
            rem_free_energy(&phi, q, tol)?.into(),
            r.minimizer_x.into(),
            r.constraint_active.into(),
        ]);
    }
    Ok(t)
}

/// Critical q for both φ and ν at the configured β; `inf` when the
/// constraint binds for every q.
pub fn critical(cfg: &RunConfig) -> Result<Table> {
    let beta = cfg.beta_positive()?;
    let (phi, nu) = rates_of(cfg);
    let tol = cfg.tol();
    let split = |rate: &RateFunction| -> redem::Result<(f64, f64)> {
        match critical_q(rate, beta, tol) {
            Err(Error::OutOfRange(_)) => Ok((f64::INFINITY, f64::INFINITY)),
            other => other,
        }
    };
    let (qp, xp) = split(&phi)?;
    let (qn, xn) = split(&nu)?;
    let mut t = Table::new(
        "critical-q",
        cfg.emit()?,
        vec!["beta", "q_cr_phi", "x0_phi", "q_cr_nu", "x0_nu"],
    );
    t.push(vec![beta.into(), qp.into(), xp.into(), qn.into(), xn.into()]);
    Ok(t)
}

/// Columns `q, gamma_bar, gamma_tilde`; `nan` where q exceeds the rate's
/// finite range.
pub fn er(cfg: &RunConfig) -> Result<Table> {
    let (phi, nu) = rates_of(cfg);
    let tol = cfg.tol();
    let mut t = Table::new("er-gamma", cfg.emit()?, vec!["q", "gamma_bar", "gamma_tilde"]);
    for q in cfg.q_grid()? {
        t.push(vec![
            q.into(),
            or_out_of_range(er_gamma(&phi, q, tol), f64::NAN)?.into(),
            or_out_of_range(er_gamma(&nu, q, tol), f64::NAN)?.into(),
        ]);
    }
    Ok(t)
}

/// Columns `alpha, beta, q, rate`, one row per configured α.
pub fn interpolate(cfg: &RunConfig) -> Result<Table> {
    let beta = cfg.beta_positive()?;
    let q = cfg.single_q()?;
    let (_, nu) = rates_of(cfg);
    let tol = cfg.tol();
    let mut t = Table::new("interpolate", cfg.emit()?, vec!["alpha", "beta", "q", "rate"]);
    for a in cfg.alpha_list()? {
        let v = interpolation_rate(&nu, beta, q, Alpha::from(a), tol)?;
        let alpha = if a.is_infinite() {
            Cell::Ext(ExtReal::PosInf)
        } else {
            Cell::Real(a)
        };
        t.push(vec![alpha, beta.into(), q.into(), v.into()]);
    }
    Ok(t)
}

/// A finished simulation: the per-replica table and its JSON summary.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub report: ExperimentReport,
    /// `Some(true)` when k = m and the run matched the free-energy run bit for bit.
    pub cross_check_alpha1: Option<bool>,
    pub table: Table,
}

pub fn simulate(cfg: &RunConfig, opts: &RunOptions) -> Result<Simulation> {
    let (kind, exp) = cfg.experiment()?;
    let report = montecarlo::run(kind, &exp, opts)?;
    let cross_check_alpha1 = match (kind, exp.k) {
        (ExperimentKind::Interpolation, Some(k)) if k == exp.m && exp.beta > 0.0 => {
            let fe = montecarlo::run_free_energy(&exp, opts)?;
            Some(
                fe.values.len() == report.values.len()
                    && fe.values.iter().zip(&report.values).all(|(a, b)| a.to_bits() == b.to_bits()),
            )
        }
        _ => None,
    };
    let mut table = Table::new("simulate", cfg.emit()?, vec!["replica", "value"]);
    for (i, v) in report.values.iter().enumerate() {
        table.push(vec![Cell::Int(i as u64), Cell::Real(*v)]);
    }
    Ok(Simulation {
        report,
        cross_check_alpha1,
        table,
    })
}

impl Simulation {
    /// Summary document; the only place wall time appears.
    pub fn summary_json(&self) -> String {
        let r = &self.report;
        let opt = |v: Option<f64>| v.map(real_json).unwrap_or(Value::Null);
        let mut doc = json!({
            "tool": TOOL,
            "version": VERSION,
            "command": "simulate",
            "config": self.table.config,
            "experiment": r.kind,
            "replicas": r.values.len(),
            "n_used": r.n_used,
            "mean": real_json(r.mean),
            "std_error": opt(r.std_error),
            "theory_value": real_json(r.theory_value),
            "abs_error": real_json(r.abs_error),
            "wall_time": r.wall_time,
            "values": r.values.iter().map(|v| fmt_real(*v)).collect::<Vec<_>>(),
        });
        if let Some(t) = &r.tail {
            doc["tail"] = json!({
                "x_probe": real_json(t.x_probe),
                "empirical_variance": real_json(t.empirical_variance),
                "exact_s": real_json(t.exact_s),
                "theoretical_variance": real_json(t.theoretical_variance),
                "empirical_rate": opt(t.empirical_rate),
                "tail_rate": opt(t.tail_rate),
            });
        }
        if let Some(ok) = self.cross_check_alpha1 {
            doc["cross_check_alpha1"] = json!(if ok { "pass" } else { "fail" });
        }
        let mut s = serde_json::to_string_pretty(&doc).expect("json encoding");
        s.push('\n');
        s
    }
}
