//! Post-processing of run records: power-law fits, the L² envelope, the
//! heat-semigroup comparison, contractivity rates and blow-up summaries.

use crate::error::{Error, Result};
use crate::evolution::{Evolver, ReactionMode, RunRecord, SolverConfig};
use crate::field::{Field, InitialProfile};

pub const MIN_FIT_SAMPLES: usize = 10;

/// Slack on fitted exponents for the heat comparison.
pub const ASYMPTOTIC_SLOPE_TOLERANCE: f64 = 0.1;
/// Slack on the sup-norm exponents from singular data.
pub const CONTRACTIVITY_SLOPE_TOLERANCE: f64 = 0.3;
/// Relative band around a predicted `L^k` decay exponent.
pub const DECAY_RELATIVE_TOLERANCE: f64 = 0.15;
/// Largest relative change of the blow-up time under refinement.
pub const BLOWUP_DRIFT_LIMIT: f64 = 0.2;

/// `−(k−1)/(k(α−1))`; `k = ∞` gives `−1/(α−1)`.
pub fn predicted_decay_exponent(k: f64, alpha: f64) -> f64 {
    if k.is_infinite() {
        -1.0 / (alpha - 1.0)
    } else {
        -(k - 1.0) / (k * (alpha - 1.0))
    }
}

/// Last decade of simulated time.
pub fn default_window(t_end: f64) -> (f64, f64) {
    (t_end / 10.0, t_end)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub window: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least squares of `log y` against `log t` over samples with `lo ≤ t ≤ hi`.
pub fn fit_power_law(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<PowerFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Insufficient(format!("empty fit window [{lo}, {hi}]")));
    }
    let mut pts = Vec::new();
    for (&t, &y) in times.iter().zip(values) {
        if t < lo || t > hi {
            continue;
        }
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Insufficient(format!(
                "value {y} at t = {t} has no logarithm"
            )));
        }
        pts.push((t.ln(), y.ln()));
    }
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::Insufficient(format!(
            "window [{lo}, {hi}] holds {} samples, need {MIN_FIT_SAMPLES}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Insufficient("all samples share one time".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(PowerFit {
        window,
        slope,
        intercept: my - slope * mx,
        r_squared,
        samples: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub k: f64,
    pub window: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub predicted_slope: f64,
}

impl DecayFit {
    pub fn relative_error(&self) -> f64 {
        ((self.slope - self.predicted_slope) / self.predicted_slope).abs()
    }

    pub fn within(&self, rel_tol: f64) -> bool {
        self.relative_error() <= rel_tol
    }
}

fn series(rec: &RunRecord, k: f64) -> Result<&[f64]> {
    if k.is_infinite() {
        return Ok(&rec.sup);
    }
    if k == 1.0 {
        return Ok(&rec.mass);
    }
    rec.norm(k)
        .ok_or_else(|| Error::Insufficient(format!("L^{k} norm was not recorded")))
}

/// Log-log slope of `‖u‖_{L^k}` over `window` (default: the last decade).
pub fn fit_decay(rec: &RunRecord, k: f64, window: Option<(f64, f64)>) -> Result<DecayFit> {
    let values = series(rec, k)?;
    let t_end = *rec
        .times
        .last()
        .ok_or_else(|| Error::Insufficient("empty record".into()))?;
    let window = window.unwrap_or_else(|| default_window(t_end));
    let fit = fit_power_law(&rec.times, values, window)?;
    Ok(DecayFit {
        k,
        window,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        predicted_slope: predicted_decay_exponent(k, rec.alpha),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFit {
    /// Largest admissible rate constant; 0 when none is positive.
    pub c: f64,
    /// Worst relative excess of `∫u²` over the envelope at that constant.
    pub max_violation: f64,
}

/// Fits `∫u² ≤ (Y₀^{1−α} + (α−1)C t)^{−1/(α−1)}`, `Y₀ = ∫u₀²`, with the
/// largest `C` that leaves no violation. When every positive `C` is violated
/// the limit `C → 0⁺` is reported.
pub fn l2_decay_envelope(rec: &RunRecord) -> Result<EnvelopeFit> {
    let norm = series(rec, 2.0)?;
    if norm.is_empty() {
        return Err(Error::Insufficient("empty record".into()));
    }
    let a = rec.alpha;
    let y: Vec<f64> = norm.iter().map(|v| v * v).collect();
    let y0 = y[0];
    if y0 == 0.0 {
        let worst = y.iter().cloned().fold(0.0, f64::max);
        return Ok(EnvelopeFit {
            c: f64::INFINITY,
            max_violation: if worst > 0.0 { f64::INFINITY } else { 0.0 },
        });
    }
    let base = y0.powf(1.0 - a);
    let mut c = f64::INFINITY;
    for (&t, &yi) in rec.times.iter().zip(&y).skip(1) {
        if t <= 0.0 {
            continue;
        }
        let admissible = if yi > 0.0 {
            (yi.powf(1.0 - a) - base) / ((a - 1.0) * t)
        } else {
            f64::INFINITY
        };
        c = c.min(admissible);
    }
    if c > 0.0 {
        return Ok(EnvelopeFit {
            c,
            max_violation: 0.0,
        });
    }
    let worst = y.iter().map(|v| v / y0 - 1.0).fold(0.0, f64::max);
    Ok(EnvelopeFit {
        c: 0.0,
        max_violation: worst,
    })
}

/// Checks `1 < 2p/n < r < 2p/n + 1`, `nr/(2p) > 1`, `n(r−1)/(2p) < 1` and `n/(2p) < 1`.
pub fn check_asymptotic_parameters(dim: usize, p: f64, r: f64) -> Result<()> {
    let n = dim as f64;
    let q = 2.0 * p / n;
    let ok = q > 1.0 && q < r && r < q + 1.0 && n * r / (2.0 * p) > 1.0 && n * (r - 1.0) / (2.0 * p) < 1.0 && n / (2.0 * p) < 1.0;
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "parameters p = {p}, r = {r} lie outside the admissible window 1 < 2p/n < r < 2p/n + 1 for n = {dim}"
        )))
    }
}

/// `−(nr/(2p) − 1)`.
pub fn asymptotic_exponent(dim: usize, p: f64, r: f64) -> f64 {
    -(dim as f64 * r / (2.0 * p) - 1.0)
}

/// Midpoint of the admissible `r` window for `p = n`.
pub fn default_asymptotic_parameters(dim: usize) -> (f64, f64) {
    let p = dim as f64;
    let q = 2.0 * p / dim as f64;
    (p, q + 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatAsymptotics {
    pub p: f64,
    pub r: f64,
    pub predicted_exponent: f64,
    pub times: Vec<f64>,
    /// `‖u − e^{tΔ}u₀‖_∞` at each matched sample.
    pub difference: Vec<f64>,
    /// `min (u − e^{tΔ}u₀)` over all samples and nodes; non-negative under domination.
    pub min_difference: f64,
    /// `None` when the two runs agree exactly.
    pub fit: Option<PowerFit>,
}

impl HeatAsymptotics {
    pub fn exact_match(&self) -> bool {
        self.fit.is_none()
    }

    pub fn rate_holds(&self, tol: f64) -> bool {
        match &self.fit {
            None => true,
            Some(f) => f.slope <= self.predicted_exponent + tol,
        }
    }
}

/// Heat-only run on the same grid and sample times as `rec`, keeping fields.
pub fn matched_heat_run(u0: &Field, rec: &RunRecord, cfg: &SolverConfig) -> Result<RunRecord> {
    let mut heat = cfg.clone().with_mode(ReactionMode::HeatOnly);
    heat.keep_fields = true;
    heat.snapshot_times.clear();
    Evolver::new(u0.grid().clone(), heat)?.run_schedule(u0, &rec.times)
}

/// Compares a run with the heat flow of its initial data. Both records must
/// carry fields at identical times.
pub fn heat_asymptotics(
    rec: &RunRecord,
    heat: &RunRecord,
    p: f64,
    r: f64,
    window: Option<(f64, f64)>,
) -> Result<HeatAsymptotics> {
    check_asymptotic_parameters(rec.dim, p, r)?;
    if rec.times != heat.times {
        return Err(Error::Precondition("records are not on matched time grids".into()));
    }
    if rec.fields.len() != rec.len() || heat.fields.len() != heat.len() {
        return Err(Error::Precondition("both records need stored fields at every sample".into()));
    }
    if rec.final_field.grid() != heat.final_field.grid() {
        return Err(Error::Precondition("records live on different grids".into()));
    }
    let mut difference = Vec::with_capacity(rec.len());
    let mut min_difference = f64::INFINITY;
    for (u, v) in rec.fields.iter().zip(&heat.fields) {
        let mut sup = 0.0f64;
        for (a, b) in u.iter().zip(v) {
            let d = a - b;
            sup = sup.max(d.abs());
            min_difference = min_difference.min(d);
        }
        difference.push(sup);
    }
    let predicted_exponent = asymptotic_exponent(rec.dim, p, r);
    let fit = if difference.iter().all(|&d| d == 0.0) {
        None
    } else {
        let t_end = *rec.times.last().unwrap();
        Some(fit_power_law(&rec.times, &difference, window.unwrap_or_else(|| default_window(t_end)))?)
    };
    Ok(HeatAsymptotics {
        p,
        r,
        predicted_exponent,
        times: rec.times.clone(),
        difference,
        min_difference,
        fit,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractivityReport {
    /// False for bounded initial data; then no fits are attempted.
    pub applicable: bool,
    /// True for `n ≥ 5`, where the short-time exponent changes sign.
    pub informational: bool,
    /// `−α/(α−1) + n/2`.
    pub early_bound: f64,
    /// `−α/(α−1)`.
    pub late_bound: f64,
    pub early: Option<PowerFit>,
    pub late: Option<PowerFit>,
    /// Late-window fits of every recorded finite `L^k` norm.
    pub lk: Vec<DecayFit>,
}

impl ContractivityReport {
    /// Early sup-norm slope no steeper than the short-time bound.
    pub fn early_holds(&self, tol: f64) -> Option<bool> {
        self.early.map(|f| f.slope >= self.early_bound - tol)
    }

    /// Late sup-norm slope at least as steep as the long-time bound.
    pub fn late_holds(&self, tol: f64) -> Option<bool> {
        self.late.map(|f| f.slope <= self.late_bound + tol)
    }
}

/// Sup-norm rates on `(0, 1]` and `(1, t_end]` for singular initial data,
/// plus `L^k` rates on the late window.
pub fn contractivity_report(
    rec: &RunRecord,
    profile: &InitialProfile,
    early: Option<(f64, f64)>,
    late: Option<(f64, f64)>,
) -> Result<ContractivityReport> {
    let a = rec.alpha;
    let n = rec.dim as f64;
    let mut report = ContractivityReport {
        applicable: profile.is_singular(),
        informational: rec.dim >= 5,
        early_bound: -a / (a - 1.0) + n / 2.0,
        late_bound: -a / (a - 1.0),
        early: None,
        late: None,
        lk: Vec::new(),
    };
    if !report.applicable {
        return Ok(report);
    }
    let t_end = *rec
        .times
        .last()
        .ok_or_else(|| Error::Insufficient("empty record".into()))?;
    let first = rec.times.iter().copied().find(|&t| t > 0.0).unwrap_or(1.0);
    let early = early.unwrap_or((first, 1.0));
    let late = late.unwrap_or((1.0, t_end));
    report.early = Some(fit_power_law(&rec.times, &rec.sup, early)?);
    report.late = Some(fit_power_law(&rec.times, &rec.sup, late)?);
    for s in &rec.norms {
        report.lk.push(fit_decay(rec, s.k, Some(late))?);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupSummary {
    pub t_star: f64,
    pub sup_at_detect: f64,
    pub t_star_refined: f64,
    /// `|t*_fine − t*_coarse| / t*_fine`.
    pub refinement_drift: f64,
}

fn blowup_of(rec: &RunRecord) -> Result<(f64, f64)> {
    match rec.outcome {
        crate::evolution::Outcome::Blowup { time, sup, .. } => Ok((time, sup)),
        other => Err(Error::Precondition(format!(
            "run ended as {}, not in blow-up",
            other.label()
        ))),
    }
}

/// Blow-up time of `coarse` and its drift against the refined run `fine`.
pub fn blowup_summary(coarse: &RunRecord, fine: &RunRecord) -> Result<BlowupSummary> {
    let (t_star, sup_at_detect) = blowup_of(coarse)?;
    let (t_star_refined, _) = blowup_of(fine)?;
    Ok(BlowupSummary {
        t_star,
        sup_at_detect,
        t_star_refined,
        refinement_drift: (t_star_refined - t_star).abs() / t_star_refined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn powers(exp: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..50).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
        let y = t.iter().map(|t| 3.0 * t.powf(exp)).collect();
        (t, y)
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let (t, y) = powers(-0.75);
        let f = fit_power_law(&t, &y, (1.0, 1e5)).unwrap();
        assert!((f.slope + 0.75).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predicted_exponents() {
        let a = 5.0 / 3.0;
        assert!((predicted_decay_exponent(2.0, a) + 0.75).abs() < 1e-15);
        assert!((predicted_decay_exponent(4.0, a) + 1.125).abs() < 1e-15);
        assert!((predicted_decay_exponent(f64::INFINITY, a) + 1.5).abs() < 1e-15);
    }

    #[test]
    fn fit_rejects_thin_or_non_positive_windows() {
        let (t, y) = powers(-1.0);
        assert!(fit_power_law(&t, &y, (1.0, 2.0)).is_err());
        assert!(fit_power_law(&t, &y, (2.0, 1.0)).is_err());
        let z = vec![0.0; t.len()];
        assert!(fit_power_law(&t, &z, (1.0, 1e5)).is_err());
    }

    #[test]
    fn asymptotic_parameter_window() {
        assert!(check_asymptotic_parameters(3, 3.0, 2.5).is_ok());
        assert!((asymptotic_exponent(3, 3.0, 2.5) + 0.25).abs() < 1e-15);
        assert_eq!(default_asymptotic_parameters(3), (3.0, 2.5));
        assert!(check_asymptotic_parameters(3, 3.0, 2.0).is_err());
        assert!(check_asymptotic_parameters(3, 3.0, 3.0).is_err());
        assert!(check_asymptotic_parameters(3, 1.0, 1.0).is_err());
        // closer to 2p/n means a slower predicted rate
        assert!(asymptotic_exponent(3, 3.0, 2.1) > asymptotic_exponent(3, 3.0, 2.9));
    }
}
