//! One-parameter sweeps over a base scenario.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::execute::{execute, resolve_cstar, ExecOptions, Status};
use crate::manifest::{ArtifactWriter, RunManifest};
use crate::scenario::{AlphaSpec, CapSpec, Scenario};

pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    MCap,
    Alpha,
    Count,
    Radius,
    DtMax,
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "m_cap" | "M0" => Ok(Axis::MCap),
            "alpha" => Ok(Axis::Alpha),
            "count" | "N" => Ok(Axis::Count),
            "radius" | "R" => Ok(Axis::Radius),
            "dt_max" => Ok(Axis::DtMax),
            _ => Err(format!(
                "unknown axis {s:?}; expected one of m_cap, alpha, count, radius, dt_max"
            )),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::MCap => "m_cap",
            Axis::Alpha => "alpha",
            Axis::Count => "count",
            Axis::Radius => "radius",
            Axis::DtMax => "dt_max",
        })
    }
}

fn finite(text: &str) -> Result<f64> {
    match text.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(invalid("sweep.values", format!("{text:?} is not a finite number"))),
    }
}

/// `base` with one parameter replaced by `value`.
pub fn apply(base: &Scenario, axis: Axis, value: &str) -> Result<Scenario> {
    let mut s = base.clone();
    match axis {
        Axis::MCap => {
            s.equation.m_cap = CapSpec::parse(value).map_err(|m| invalid("sweep.values", m))?;
            let (CapSpec::Value(v) | CapSpec::Threshold(v)) = s.equation.m_cap;
            if !v.is_finite() {
                return Err(invalid("sweep.values", format!("{value:?} is not finite")));
            }
        }
        Axis::Alpha => s.equation.alpha = AlphaSpec::Value(finite(value)?),
        Axis::Count => {
            s.grid.count = value
                .trim()
                .parse()
                .map_err(|_| invalid("sweep.values", format!("{value:?} is not a node count")))?
        }
        Axis::Radius => s.grid.radius = finite(value)?,
        Axis::DtMax => s.solver.dt_max = finite(value)?,
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: String,
    pub dir: String,
    pub result: std::result::Result<RunManifest, String>,
}

impl SweepPoint {
    pub fn status(&self) -> Status {
        match &self.result {
            Ok(m) => m.status,
            Err(_) => Status::Error,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: Axis,
    pub points: Vec<SweepPoint>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs one scenario per value on a pool of `workers` threads; point `i`
/// writes to `out/point_<i>`. A failing point is recorded and the rest
/// proceed. C* is estimated once up front when the base needs it.
pub fn sweep(
    base: &Scenario,
    axis: Axis,
    values: &[String],
    out: &Path,
    workers: usize,
    opts: &ExecOptions,
) -> Result<SweepReport> {
    let mut writer = ArtifactWriter::new(out)?;
    let mut base = base.clone();
    let needs_cstar = values.iter().any(|v| {
        apply(&base, axis, v).map(|s| s.needs_cstar()).unwrap_or(false)
    });
    if needs_cstar {
        let probe = apply(&base, axis, &values[0])
            .ok()
            .filter(|s| s.needs_cstar())
            .unwrap_or_else(|| base.clone());
        if let Some(est) = resolve_cstar(&probe, opts)? {
            base.equation.cstar = Some(est.cstar);
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    let points: Vec<SweepPoint> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, v)| {
                let dir = format!("point_{i:03}");
                let result = apply(&base, axis, v)
                    .and_then(|s| execute(&s, &out.join(&dir), opts))
                    .map_err(|e| e.to_string());
                SweepPoint {
                    value: v.clone(),
                    dir,
                    result,
                }
            })
            .collect()
    });

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "axis", "value", "dir", "status", "exit_code", "outcome", "m_cap", "t_final",
        "final_mass", "max_sup", "l2_slope", "t_star", "violations", "error",
    ])?;
    for p in &points {
        let row = match &p.result {
            Ok(m) => vec![
                axis.to_string(),
                p.value.clone(),
                p.dir.clone(),
                m.status.label().to_string(),
                m.exit_code.to_string(),
                m.outcome.clone(),
                m.m_cap.to_string(),
                m.summary.t_final.to_string(),
                m.summary.final_mass.to_string(),
                m.summary.max_sup.to_string(),
                opt(m.summary.l2_slope),
                opt(m.summary.t_star),
                m.violations.join(";"),
                String::new(),
            ],
            Err(e) => {
                let mut row = vec![
                    axis.to_string(),
                    p.value.clone(),
                    p.dir.clone(),
                    Status::Error.label().to_string(),
                    Status::Error.exit_code().to_string(),
                ];
                row.extend(std::iter::repeat_n(String::new(), 8));
                row.push(e.clone());
                row
            }
        };
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    writer.write(SUMMARY_FILE, &bytes)?;
    Ok(SweepReport { axis, points })
}
