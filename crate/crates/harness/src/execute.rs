//! Runs one scenario: optional C* estimate, evolution, analyses, artifacts
//! and the manifest.

use std::path::Path;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nlrd_core::analysis::{
    blowup_summary, contractivity_report, fit_decay, heat_asymptotics, l2_decay_envelope,
    matched_heat_run, DecayFit, ASYMPTOTIC_SLOPE_TOLERANCE, BLOWUP_DRIFT_LIMIT,
    CONTRACTIVITY_SLOPE_TOLERANCE, DECAY_RELATIVE_TOLERANCE,
};
use nlrd_core::evolution::{mass_gap_identity, mass_ode_residual, Evolver, Outcome, RunRecord};
use nlrd_core::gns::{estimate_cstar, GnsEstimate, GnsSettings, SeedFamily};
use nlrd_core::{Field, RadialGrid};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::manifest::{Artifact, ArtifactWriter, Formats, RunManifest, RunSummary};
use crate::output;
use crate::scenario::{Analysis, Expect, Scenario};

/// Allowed `max sup / max sup over the first decade`.
pub const LATE_GROWTH_FACTOR: f64 = 1.05;
/// Rounding slack on `u − e^{tΔ}u₀ ≥ 0`, relative to the largest sup.
pub const DOMINATION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ExecOptions {
    /// Seed families for the C* optimizer.
    pub seeds: Vec<SeedFamily>,
    /// Radius and node count of the optimizer grid.
    pub cstar_grid: (f64, usize),
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            seeds: SeedFamily::ALL.to_vec(),
            cstar_grid: (2.5, 1001),
        }
    }
}

impl ExecOptions {
    pub fn gns_settings(&self) -> GnsSettings {
        GnsSettings {
            seeds: self.seeds.clone(),
            ..GnsSettings::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    BlowupAsExpected,
    ContractViolation,
    Error,
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Error => 1,
            Status::BlowupAsExpected => 2,
            Status::ContractViolation => 3,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::BlowupAsExpected => "blowup-as-expected",
            Status::ContractViolation => "contract-violation",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invariant {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Invariant {
    fn new(name: impl Into<String>, holds: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            holds,
            detail: detail.into(),
        }
    }

    fn failed(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self::new(name, false, format!("not computable: {err}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub label: String,
    pub time: Option<f64>,
    pub sup: Option<f64>,
    pub trigger: Option<String>,
}

impl From<&Outcome> for OutcomeReport {
    fn from(o: &Outcome) -> Self {
        let (time, sup, trigger) = match *o {
            Outcome::Completed => (None, None, None),
            Outcome::Blowup { time, sup, trigger } => {
                (Some(time), Some(sup), Some(format!("{trigger:?}")))
            }
            Outcome::Stalled { time } => (Some(time), None, None),
        };
        Self {
            label: o.label().to_string(),
            time,
            sup,
            trigger,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub tolerance: f64,
    pub ode_residual: Option<f64>,
    pub gap_max_deviation: Option<f64>,
    pub gap_strictly_decreasing: Option<bool>,
    pub max_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub k: f64,
    pub window: [f64; 2],
    pub slope: f64,
    pub predicted_slope: f64,
    pub relative_error: f64,
    pub r_squared: f64,
}

impl From<&DecayFit> for DecayReport {
    fn from(f: &DecayFit) -> Self {
        Self {
            k: f.k,
            window: [f.window.0, f.window.1],
            slope: f.slope,
            predicted_slope: f.predicted_slope,
            relative_error: f.relative_error(),
            r_squared: f.r_squared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub c: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub p: f64,
    pub r: f64,
    pub predicted_exponent: f64,
    pub min_difference: f64,
    pub exact_match: bool,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractivityJson {
    pub applicable: bool,
    pub informational: bool,
    pub early_bound: f64,
    pub late_bound: f64,
    pub early_slope: Option<f64>,
    pub late_slope: Option<f64>,
    pub lk: Vec<DecayReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub t_star: f64,
    pub sup_at_detect: f64,
    pub t_star_refined: f64,
    pub refinement_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LateGrowthReport {
    pub early_window_end: f64,
    pub early_max: f64,
    pub overall_max: f64,
    pub ratio: f64,
}

/// Contents of `analysis.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub scenario: String,
    pub dim: usize,
    pub alpha: f64,
    pub m_cap: f64,
    pub cstar: Option<f64>,
    pub m0: f64,
    pub outcome: OutcomeReport,
    pub steps: usize,
    pub t_final: f64,
    pub mass: Option<MassReport>,
    pub decay: Vec<DecayReport>,
    pub envelope: Option<EnvelopeReport>,
    pub asymptotics: Option<AsymptoticsReport>,
    pub contractivity: Option<ContractivityJson>,
    pub blowup: Option<BlowupReport>,
    pub late_growth: Option<LateGrowthReport>,
    pub invariants: Vec<Invariant>,
}

impl AnalysisReport {
    pub fn violations(&self) -> Vec<String> {
        self.invariants
            .iter()
            .filter(|i| !i.holds)
            .map(|i| i.name.clone())
            .collect()
    }
}

/// Runs the optimizer when the scenario's cap is threshold-relative and no
/// C* was supplied.
pub fn resolve_cstar(s: &Scenario, opts: &ExecOptions) -> Result<Option<GnsEstimate>> {
    if !s.needs_cstar() {
        return Ok(None);
    }
    let (radius, count) = opts.cstar_grid;
    let grid = Arc::new(RadialGrid::new(s.grid.n, radius, count)?);
    Ok(Some(estimate_cstar(grid, &opts.gns_settings())?))
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Executes `s`, writing every artifact under `out`. Analysis failures do
/// not abort the run; they surface as violated invariants.
pub fn execute(s: &Scenario, out: &Path, opts: &ExecOptions) -> Result<RunManifest> {
    let started = SystemTime::now();
    let clock = Instant::now();
    s.validate()?;
    let mut writer = ArtifactWriter::new(out)?;

    let estimate = resolve_cstar(s, opts)?;
    let mut scenario = s.clone();
    if let Some(est) = &estimate {
        scenario.equation.cstar = Some(est.cstar);
        writer.write("cstar.json", &output::cstar_json(est)?)?;
    }
    let m_cap = scenario.m_cap().expect("cap resolved once C* is known");
    let grid = scenario.build_grid()?;
    let u0 = scenario.initial_field(grid)?;
    scenario.check_initial_mass(u0.mass(), m_cap)?;
    let cfg = scenario.solver_config(m_cap);
    let rec = Evolver::new(u0.grid().clone(), cfg.clone())?.run(&u0)?;

    writer.write("series.csv", &output::series_csv(&rec)?)?;
    for (t, f) in &rec.snapshots {
        writer.write(&format!("snapshots/u_t{t}.txt"), &output::snapshot(f, *t)?)?;
    }

    let mut violations = Vec::new();
    if !scenario.diagnostics.analyses.is_empty() {
        let report = analyse(&scenario, m_cap, &u0, &rec)?;
        violations = report.violations();
        writer.write("analysis.json", &serde_json::to_vec_pretty(&report)?)?;
        writer.write("report.txt", output::text_report(&report).as_bytes())?;
        writer.write("loglog.tsv", output::loglog(&rec).as_bytes())?;
    }

    let status = if !violations.is_empty() {
        Status::ContractViolation
    } else if rec.outcome.is_blowup() {
        Status::BlowupAsExpected
    } else {
        Status::Ok
    };
    let finished = SystemTime::now();
    let manifest = RunManifest {
        format_version: crate::manifest::MANIFEST_VERSION,
        tool: env!("CARGO_PKG_NAME").to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: s.clone(),
        alpha: scenario.alpha(),
        m_cap,
        cstar: scenario.equation.cstar,
        m0: u0.mass(),
        started_unix: unix_seconds(started),
        finished_unix: unix_seconds(finished),
        wall_seconds: clock.elapsed().as_secs_f64(),
        outcome: rec.outcome.label().to_string(),
        status,
        exit_code: status.exit_code(),
        violations,
        summary: RunSummary::of(&rec),
        formats: Formats::current(&rec),
        artifacts: Vec::<Artifact>::new(),
    };
    writer.finish(manifest)
}

fn analyse(
    s: &Scenario,
    m_cap: f64,
    u0: &Field,
    rec: &RunRecord,
) -> Result<AnalysisReport> {
    let t_final = *rec.times.last().unwrap_or(&0.0);
    let mut inv = Vec::new();
    let expected = match s.diagnostics.expect {
        Expect::Global => rec.outcome == Outcome::Completed,
        Expect::Blowup => rec.outcome.is_blowup(),
        Expect::Any => true,
    };
    inv.push(Invariant::new(
        "expected-outcome",
        expected,
        format!("expected {:?}, got {}", s.diagnostics.expect, rec.outcome.label()),
    ));
    let negative = rec.final_field.values().iter().filter(|v| **v < 0.0).count();
    inv.push(Invariant::new(
        "non-negative",
        negative == 0,
        format!("{negative} negative nodes in the final field"),
    ));

    let mut report = AnalysisReport {
        scenario: s.name.clone(),
        dim: s.grid.n,
        alpha: rec.alpha,
        m_cap,
        cstar: s.equation.cstar,
        m0: u0.mass(),
        outcome: (&rec.outcome).into(),
        steps: rec.steps,
        t_final,
        mass: None,
        decay: Vec::new(),
        envelope: None,
        asymptotics: None,
        contractivity: None,
        blowup: None,
        late_growth: None,
        invariants: Vec::new(),
    };
    let window = s.diagnostics.window.map(|[a, b]| (a, b));

    for a in &s.diagnostics.analyses {
        match a {
            Analysis::Mass => {
                let eps = rec.ts_tolerance();
                let residual = mass_ode_residual(rec);
                let gap = mass_gap_identity(rec, rec.mass[0]);
                let max_mass = rec.mass.iter().cloned().fold(f64::MIN, f64::max);
                match &residual {
                    Ok(r) => inv.push(Invariant::new(
                        "mass-ode-residual",
                        *r <= eps,
                        format!("{r:.3e} against {eps:.3e}"),
                    )),
                    Err(e) => inv.push(Invariant::failed("mass-ode-residual", e)),
                }
                match &gap {
                    Ok(g) => {
                        inv.push(Invariant::new(
                            "mass-gap-identity",
                            g.max_deviation <= eps,
                            format!("{:.3e} against {eps:.3e}", g.max_deviation),
                        ));
                        inv.push(Invariant::new(
                            "mass-gap-decreasing",
                            g.strictly_decreasing,
                            "M0 - m(t) strictly decreasing",
                        ));
                    }
                    Err(e) => inv.push(Invariant::failed("mass-gap-identity", e)),
                }
                inv.push(Invariant::new(
                    "mass-below-cap",
                    max_mass <= m_cap + eps,
                    format!("max mass {max_mass} against M0 = {m_cap}"),
                ));
                report.mass = Some(MassReport {
                    tolerance: eps,
                    ode_residual: residual.ok(),
                    gap_max_deviation: gap.as_ref().ok().map(|g| g.max_deviation),
                    gap_strictly_decreasing: gap.as_ref().ok().map(|g| g.strictly_decreasing),
                    max_mass,
                });
            }
            Analysis::Decay => {
                for &k in &s.diagnostics.norms {
                    let name = format!("decay-L{k}");
                    match fit_decay(rec, k, window) {
                        Ok(f) => {
                            inv.push(Invariant::new(
                                name,
                                f.within(DECAY_RELATIVE_TOLERANCE),
                                format!(
                                    "slope {:.4} against {:.4} (relative error {:.3}, allowed {})",
                                    f.slope,
                                    f.predicted_slope,
                                    f.relative_error(),
                                    DECAY_RELATIVE_TOLERANCE
                                ),
                            ));
                            report.decay.push((&f).into());
                        }
                        Err(e) => inv.push(Invariant::failed(name, e)),
                    }
                }
            }
            Analysis::Envelope => match l2_decay_envelope(rec) {
                Ok(e) => {
                    inv.push(Invariant::new(
                        "l2-envelope",
                        e.max_violation == 0.0,
                        format!("C = {:.4e}, worst excess {:.3e}", e.c, e.max_violation),
                    ));
                    report.envelope = Some(EnvelopeReport {
                        c: e.c,
                        max_violation: e.max_violation,
                    });
                }
                Err(e) => inv.push(Invariant::failed("l2-envelope", e)),
            },
            Analysis::Asymptotics => {
                let [p, r] = s.asymptotic_parameters();
                let cfg = s.solver_config(m_cap);
                let heat = matched_heat_run(u0, rec, &cfg)?;
                match heat_asymptotics(rec, &heat, p, r, window) {
                    Ok(h) => {
                        let scale = rec.sup.iter().cloned().fold(0.0, f64::max);
                        let floor = -DOMINATION_SLACK * scale;
                        inv.push(Invariant::new(
                            "heat-domination",
                            h.min_difference >= floor,
                            format!("min of sup(u - heat) {:.3e}", h.min_difference),
                        ));
                        inv.push(Invariant::new(
                            "heat-rate",
                            h.rate_holds(ASYMPTOTIC_SLOPE_TOLERANCE),
                            match &h.fit {
                                Some(f) => format!(
                                    "slope {:.4} against {:.4} + {}",
                                    f.slope, h.predicted_exponent, ASYMPTOTIC_SLOPE_TOLERANCE
                                ),
                                None => "identical to the heat flow".to_string(),
                            },
                        ));
                        report.asymptotics = Some(AsymptoticsReport {
                            p,
                            r,
                            predicted_exponent: h.predicted_exponent,
                            min_difference: h.min_difference,
                            exact_match: h.exact_match(),
                            slope: h.fit.map(|f| f.slope),
                            r_squared: h.fit.map(|f| f.r_squared),
                        });
                    }
                    Err(e) => inv.push(Invariant::failed("heat-rate", e)),
                }
            }
            Analysis::Contractivity => {
                match contractivity_report(rec, &s.initial.profile(), None, window) {
                    Ok(c) => {
                        if c.applicable && !c.informational {
                            let tol = CONTRACTIVITY_SLOPE_TOLERANCE;
                            inv.push(Invariant::new(
                                "contractivity-early",
                                c.early_holds(tol).unwrap_or(false),
                                format!(
                                    "slope {:?} against >= {:.4} - {tol}",
                                    c.early.map(|f| f.slope),
                                    c.early_bound
                                ),
                            ));
                            inv.push(Invariant::new(
                                "contractivity-late",
                                c.late_holds(tol).unwrap_or(false),
                                format!(
                                    "slope {:?} against <= {:.4} + {tol}",
                                    c.late.map(|f| f.slope),
                                    c.late_bound
                                ),
                            ));
                        }
                        report.contractivity = Some(ContractivityJson {
                            applicable: c.applicable,
                            informational: c.informational,
                            early_bound: c.early_bound,
                            late_bound: c.late_bound,
                            early_slope: c.early.map(|f| f.slope),
                            late_slope: c.late.map(|f| f.slope),
                            lk: c.lk.iter().map(DecayReport::from).collect(),
                        });
                    }
                    Err(e) => inv.push(Invariant::failed("contractivity-late", e)),
                }
            }
            Analysis::Blowup => {
                let fine = refined_run(s, m_cap)?;
                match blowup_summary(rec, &fine) {
                    Ok(b) => {
                        inv.push(Invariant::new(
                            "blowup-refinement-drift",
                            b.refinement_drift <= BLOWUP_DRIFT_LIMIT,
                            format!(
                                "t* {:.5} vs {:.5}, drift {:.3e}",
                                b.t_star, b.t_star_refined, b.refinement_drift
                            ),
                        ));
                        report.blowup = Some(BlowupReport {
                            t_star: b.t_star,
                            sup_at_detect: b.sup_at_detect,
                            t_star_refined: b.t_star_refined,
                            refinement_drift: b.refinement_drift,
                        });
                    }
                    Err(e) => inv.push(Invariant::failed("blowup-refinement-drift", e)),
                }
            }
            Analysis::LateGrowth => {
                let cut = t_final / 10.0;
                let early_max = rec
                    .times
                    .iter()
                    .zip(&rec.sup)
                    .filter(|(t, _)| **t <= cut)
                    .map(|(_, v)| *v)
                    .fold(0.0, f64::max);
                let overall_max = rec.sup.iter().cloned().fold(0.0, f64::max);
                let ratio = if early_max > 0.0 { overall_max / early_max } else { 1.0 };
                inv.push(Invariant::new(
                    "no-late-growth",
                    ratio <= LATE_GROWTH_FACTOR,
                    format!("max sup / max sup on [0, {cut}] = {ratio:.4}"),
                ));
                report.late_growth = Some(LateGrowthReport {
                    early_window_end: cut,
                    early_max,
                    overall_max,
                    ratio,
                });
            }
        }
    }
    report.invariants = inv;
    Ok(report)
}

/// Same scenario with twice the nodes and half the step bounds.
fn refined_run(s: &Scenario, m_cap: f64) -> Result<RunRecord> {
    let mut fine = s.clone();
    fine.grid.count = 2 * s.grid.count;
    fine.solver.dt_max /= 2.0;
    fine.solver.safety /= 2.0;
    fine.output.snapshot_times.clear();
    let grid = fine.build_grid()?;
    let u0 = fine.initial_field(grid)?;
    Ok(Evolver::new(u0.grid().clone(), fine.solver_config(m_cap))?.run(&u0)?)
}
