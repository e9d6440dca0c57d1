//! File formats: series CSV, snapshots, text report, log-log plot data and
//! the C* summary.

use std::fmt::Write as _;

use nlrd_core::evolution::RunRecord;
use nlrd_core::gns::GnsEstimate;
use nlrd_core::Field;
use serde::Serialize;

use crate::error::Result;
use crate::execute::AnalysisReport;

pub const CSV_VERSION: u32 = 1;
pub const JSON_VERSION: u32 = 1;
pub const SNAPSHOT_VERSION: u32 = 1;

fn norm_label(k: f64) -> String {
    format!("L{k}")
}

/// `t, m, int_u_alpha, dt, sup`, then one `L<k>` column per recorded norm.
pub fn series_columns(rec: &RunRecord) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "m", "int_u_alpha", "dt", "sup"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(rec.norms.iter().map(|s| norm_label(s.k)));
    cols
}

pub fn series_csv(rec: &RunRecord) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(series_columns(rec))?;
    for i in 0..rec.len() {
        let mut row = vec![
            rec.times[i].to_string(),
            rec.mass[i].to_string(),
            rec.reaction_integral[i].to_string(),
            rec.dt[i].to_string(),
            rec.sup[i].to_string(),
        ];
        row.extend(rec.norms.iter().map(|s| s.values[i].to_string()));
        w.write_record(&row)?;
    }
    Ok(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
}

pub fn snapshot(f: &Field, t: f64) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f.write_snapshot(&mut buf, t)?;
    Ok(buf)
}

/// `log10 t` against `log10` of sup and every norm, for `t > 0`.
pub fn loglog(rec: &RunRecord) -> String {
    let mut out = String::from("log10_t\tlog10_sup");
    for s in &rec.norms {
        let _ = write!(out, "\tlog10_{}", norm_label(s.k));
    }
    out.push('\n');
    let lg = |v: f64| if v > 0.0 { v.log10().to_string() } else { "nan".into() };
    for i in 0..rec.len() {
        let t = rec.times[i];
        if t <= 0.0 {
            continue;
        }
        let _ = write!(out, "{}\t{}", t.log10(), lg(rec.sup[i]));
        for s in &rec.norms {
            let _ = write!(out, "\t{}", lg(s.values[i]));
        }
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

pub fn text_report(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let row = |out: &mut String, k: &str, v: String| {
        let _ = writeln!(out, "  {k:<26} {v}");
    };
    let _ = writeln!(out, "scenario {}", r.scenario);
    row(&mut out, "dimension", r.dim.to_string());
    row(&mut out, "alpha", format!("{:.6}", r.alpha));
    row(&mut out, "M0", format!("{:.6}", r.m_cap));
    row(&mut out, "C*", opt(r.cstar));
    row(&mut out, "m0", format!("{:.6}", r.m0));
    row(&mut out, "outcome", r.outcome.label.clone());
    row(&mut out, "outcome time", opt(r.outcome.time));
    row(&mut out, "steps", r.steps.to_string());
    row(&mut out, "t final", format!("{:.6}", r.t_final));
    if let Some(m) = &r.mass {
        row(&mut out, "mass ode residual", opt(m.ode_residual));
        row(&mut out, "mass gap deviation", opt(m.gap_max_deviation));
        row(&mut out, "step tolerance", format!("{:.6}", m.tolerance));
    }
    for d in &r.decay {
        row(
            &mut out,
            &format!("L{} slope", d.k),
            format!("{:.6} (predicted {:.6})", d.slope, d.predicted_slope),
        );
    }
    if let Some(e) = &r.envelope {
        row(&mut out, "L2 envelope C", format!("{:.6e}", e.c));
    }
    if let Some(a) = &r.asymptotics {
        row(
            &mut out,
            "heat difference slope",
            format!("{} (bound {:.6})", opt(a.slope), a.predicted_exponent),
        );
        row(&mut out, "heat difference min", format!("{:.3e}", a.min_difference));
    }
    if let Some(c) = &r.contractivity {
        row(&mut out, "singular data", c.applicable.to_string());
        row(
            &mut out,
            "early sup slope",
            format!("{} (bound >= {:.6})", opt(c.early_slope), c.early_bound),
        );
        row(
            &mut out,
            "late sup slope",
            format!("{} (bound <= {:.6})", opt(c.late_slope), c.late_bound),
        );
    }
    if let Some(b) = &r.blowup {
        row(&mut out, "blow-up time", format!("{:.6}", b.t_star));
        row(&mut out, "refined blow-up time", format!("{:.6}", b.t_star_refined));
        row(&mut out, "refinement drift", format!("{:.3e}", b.refinement_drift));
    }
    if let Some(g) = &r.late_growth {
        row(&mut out, "late growth ratio", format!("{:.6}", g.ratio));
    }
    let _ = writeln!(out, "invariants");
    for i in &r.invariants {
        let mark = if i.holds { "ok" } else { "FAILED" };
        let _ = writeln!(out, "  {:<26} {:<7}{}", i.name, mark, i.detail);
    }
    out
}

#[derive(Serialize)]
struct SeedJson<'a> {
    seed: &'a str,
    cstar: f64,
    iterations: usize,
    converged: bool,
    trace: &'a [f64],
}

#[derive(Serialize)]
struct CstarJson<'a> {
    dim: usize,
    alpha: f64,
    cstar: f64,
    upper_bound: f64,
    m0_crit: f64,
    iterations: usize,
    converged: bool,
    best_seed: &'a str,
    grid_radius: f64,
    grid_count: usize,
    runs: Vec<SeedJson<'a>>,
}

pub fn cstar_json(est: &GnsEstimate) -> Result<Vec<u8>> {
    let grid = est.profile.grid();
    let doc = CstarJson {
        dim: est.dim,
        alpha: est.alpha,
        cstar: est.cstar,
        upper_bound: est.upper_bound,
        m0_crit: est.m0_crit,
        iterations: est.iterations,
        converged: est.converged,
        best_seed: est.best_seed.name(),
        grid_radius: grid.radius(),
        grid_count: grid.len(),
        runs: est
            .runs
            .iter()
            .map(|r| SeedJson {
                seed: r.seed.name(),
                cstar: r.cstar,
                iterations: r.iterations,
                converged: r.converged,
                trace: &r.trace,
            })
            .collect(),
    };
    Ok(serde_json::to_vec_pretty(&doc)?)
}
