//! Scenario files: sectioned TOML with `[grid]`, `[equation]`, `[initial]`,
//! `[solver]`, `[diagnostics]` and `[output]`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nlrd_core::evolution::{ReactionMode, SolverConfig};
use nlrd_core::gns::{critical_exponent, critical_mass_for};
use nlrd_core::{make_initial, Field, InitialProfile, RadialGrid};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, io_err, HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub grid: GridSpec,
    pub equation: EquationSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub diagnostics: Diagnostics,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub radius: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    pub alpha: AlphaSpec,
    pub m_cap: CapSpec,
    /// Known sharp constant; skips the optimizer for threshold-relative caps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cstar: Option<f64>,
    #[serde(default)]
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Damped,
    Undamped,
    Heat,
}

impl From<Mode> for ReactionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Damped => ReactionMode::Damped,
            Mode::Undamped => ReactionMode::Undamped,
            Mode::Heat => ReactionMode::HeatOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Num(f64),
    Text(String),
}

/// `alpha = 1.3` or `alpha = "critical"` for `1 + 2/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Scalar", into = "Scalar")]
pub enum AlphaSpec {
    Critical,
    Value(f64),
}

impl AlphaSpec {
    pub fn resolve(&self, dim: usize) -> f64 {
        match *self {
            AlphaSpec::Critical => critical_exponent(dim),
            AlphaSpec::Value(a) => a,
        }
    }
}

impl TryFrom<Scalar> for AlphaSpec {
    type Error = String;

    fn try_from(s: Scalar) -> std::result::Result<Self, String> {
        match s {
            Scalar::Num(a) => Ok(AlphaSpec::Value(a)),
            Scalar::Text(t) if t.trim() == "critical" => Ok(AlphaSpec::Critical),
            Scalar::Text(t) => Err(format!("alpha must be a number or \"critical\", got {t:?}")),
        }
    }
}

impl From<AlphaSpec> for Scalar {
    fn from(a: AlphaSpec) -> Self {
        match a {
            AlphaSpec::Critical => Scalar::Text("critical".into()),
            AlphaSpec::Value(v) => Scalar::Num(v),
        }
    }
}

/// `m_cap = 10` or `m_cap = "auto-threshold*0.8"`, a multiple of the
/// critical mass derived from C*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Scalar", into = "Scalar")]
pub enum CapSpec {
    Value(f64),
    Threshold(f64),
}

impl CapSpec {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let t = text.trim();
        if let Ok(v) = t.parse::<f64>() {
            return Ok(CapSpec::Value(v));
        }
        let rest = t
            .strip_prefix("auto-threshold")
            .ok_or_else(|| format!("expected a number or \"auto-threshold*<factor>\", got {text:?}"))?
            .trim();
        if rest.is_empty() {
            return Ok(CapSpec::Threshold(1.0));
        }
        let factor = rest
            .strip_prefix('*')
            .or_else(|| rest.strip_prefix('·'))
            .ok_or_else(|| format!("expected '*<factor>' after auto-threshold, got {rest:?}"))?;
        factor
            .trim()
            .parse::<f64>()
            .map(CapSpec::Threshold)
            .map_err(|_| format!("bad threshold factor {factor:?}"))
    }
}

impl fmt::Display for CapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapSpec::Value(v) => write!(f, "{v}"),
            CapSpec::Threshold(k) => write!(f, "auto-threshold*{k}"),
        }
    }
}

impl TryFrom<Scalar> for CapSpec {
    type Error = String;

    fn try_from(s: Scalar) -> std::result::Result<Self, String> {
        match s {
            Scalar::Num(v) => Ok(CapSpec::Value(v)),
            Scalar::Text(t) => CapSpec::parse(&t),
        }
    }
}

impl From<CapSpec> for Scalar {
    fn from(c: CapSpec) -> Self {
        match c {
            CapSpec::Value(v) => Scalar::Num(v),
            t => Scalar::Text(t.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Gaussian { mass: f64, sigma: f64 },
    Bump { height: f64, width: f64 },
    Singular { beta: f64, cutoff: f64, amplitude: f64 },
}

impl InitialSpec {
    pub fn profile(&self) -> InitialProfile {
        match *self {
            InitialSpec::Gaussian { mass, sigma } => InitialProfile::Gaussian { mass, sigma },
            InitialSpec::Bump { height, width } => InitialProfile::Bump { height, width },
            InitialSpec::Singular {
                beta,
                cutoff,
                amplitude,
            } => InitialProfile::Singular {
                beta,
                cutoff,
                amplitude,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub t_end: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub safety: f64,
    pub dt_growth: f64,
    pub blowup_sup: f64,
    pub record_every: usize,
    pub max_steps: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let c = SolverConfig::new(1.0, 2.0);
        Self {
            t_end: c.t_end,
            dt_init: c.dt_init,
            dt_min: c.dt_min,
            dt_max: c.dt_max,
            safety: c.safety,
            dt_growth: c.dt_growth,
            blowup_sup: c.blowup_sup,
            record_every: c.record_every,
            max_steps: c.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    /// Mass ODE residual and mass-gap identity.
    Mass,
    /// `L^k` decay exponents of every recorded norm.
    Decay,
    /// Envelope for `∫u²`.
    Envelope,
    /// Difference against the heat flow of the same data.
    Asymptotics,
    /// Sup-norm rates from singular data.
    Contractivity,
    /// Blow-up time and its drift under one refinement.
    Blowup,
    /// Sup over the whole run against the sup over the first decade.
    LateGrowth,
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Mass => "mass",
            Analysis::Decay => "decay",
            Analysis::Envelope => "envelope",
            Analysis::Asymptotics => "asymptotics",
            Analysis::Contractivity => "contractivity",
            Analysis::Blowup => "blowup",
            Analysis::LateGrowth => "late-growth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expect {
    #[default]
    Global,
    Blowup,
    Any,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Diagnostics {
    /// Finite `L^k` norms recorded alongside mass and sup.
    pub norms: Vec<f64>,
    pub analyses: Vec<Analysis>,
    pub expect: Expect,
    /// Fit window for decay exponents; default is the last decade.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// `[p, r]` for the heat comparison; default `[n, 5n/6]` in n = 3.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymptotic: Option<[f64; 2]>,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            norms: vec![2.0],
            analyses: Vec::new(),
            expect: Expect::Global,
            window: None,
            asymptotic: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub snapshot_times: Vec<f64>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl Scenario {
    /// Parses and validates scenario text; `origin` names it in errors.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| HarnessError::Parse {
            path: origin.to_string(),
            line: e.span().map(|r| line_of(text, r.start)).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn alpha(&self) -> f64 {
        self.equation.alpha.resolve(self.grid.n)
    }

    /// `M₀` when it does not depend on an unknown C*.
    pub fn m_cap(&self) -> Option<f64> {
        match self.equation.m_cap {
            CapSpec::Value(v) => Some(v),
            CapSpec::Threshold(f) => self
                .equation
                .cstar
                .and_then(|c| critical_mass_for(self.grid.n, c).ok())
                .map(|m| f * m),
        }
    }

    pub fn needs_cstar(&self) -> bool {
        self.m_cap().is_none()
    }

    pub fn build_grid(&self) -> Result<Arc<RadialGrid>> {
        Ok(Arc::new(RadialGrid::new(self.grid.n, self.grid.radius, self.grid.count)?))
    }

    pub fn initial_field(&self, grid: Arc<RadialGrid>) -> Result<Field> {
        Ok(make_initial(grid, &self.initial.profile())?)
    }

    /// Solver configuration at cap `m_cap`.
    pub fn solver_config(&self, m_cap: f64) -> SolverConfig {
        let s = &self.solver;
        let mut c = SolverConfig::new(m_cap, self.alpha());
        c.t_end = s.t_end;
        c.dt_init = s.dt_init;
        c.dt_min = s.dt_min;
        c.dt_max = s.dt_max;
        c.safety = s.safety;
        c.dt_growth = s.dt_growth;
        c.blowup_sup = s.blowup_sup;
        c.record_every = s.record_every;
        c.max_steps = s.max_steps;
        c.mode = self.equation.mode.into();
        c.norms = self.diagnostics.norms.clone();
        c.snapshot_times = self.output.snapshot_times.clone();
        c.keep_fields = self.has(Analysis::Asymptotics);
        c
    }

    pub fn has(&self, a: Analysis) -> bool {
        self.diagnostics.analyses.contains(&a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if self.grid.n < 3 {
            return Err(invalid(
                "grid.n",
                format!("the model is posed in dimension n >= 3, got n = {}", self.grid.n),
            ));
        }
        let alpha = self.alpha();
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(invalid("equation.alpha", format!("must exceed 1, got {alpha}")));
        }
        match self.equation.m_cap {
            CapSpec::Value(v) if !(v.is_finite() && v > 0.0) => {
                return Err(invalid("equation.m_cap", format!("must be positive, got {v}")));
            }
            CapSpec::Threshold(f) if !(f.is_finite() && f > 0.0) => {
                return Err(invalid(
                    "equation.m_cap",
                    format!("threshold factor must be positive, got {f}"),
                ));
            }
            _ => {}
        }
        if let Some(c) = self.equation.cstar {
            if !(c.is_finite() && c > 0.0) {
                return Err(invalid("equation.cstar", format!("must be positive, got {c}")));
            }
        }
        let d = &self.diagnostics;
        if let Some(k) = d.norms.iter().find(|k| !(k.is_finite() && **k >= 1.0)) {
            return Err(invalid("diagnostics.norms", format!("need finite k >= 1, got {k}")));
        }
        if let Some([lo, hi]) = d.window {
            if !(lo > 0.0 && hi > lo) {
                return Err(invalid("diagnostics.window", format!("need 0 < lo < hi, got [{lo}, {hi}]")));
            }
        }
        for a in &d.analyses {
            self.check_requirements(*a)?;
        }
        let t_end = self.solver.t_end;
        if let Some(t) = self
            .output
            .snapshot_times
            .iter()
            .find(|t| !(**t > 0.0 && **t <= t_end))
        {
            return Err(invalid(
                "output.snapshot_times",
                format!("{t} lies outside (0, t_end = {t_end}]"),
            ));
        }
        let grid = self.build_grid()?;
        let u0 = self.initial_field(grid)?;
        if let Some(m_cap) = self.m_cap() {
            self.check_initial_mass(u0.mass(), m_cap)?;
            let mut cfg = self.solver_config(m_cap);
            cfg.mode = ReactionMode::HeatOnly;
            cfg.validate()?;
        }
        Ok(())
    }

    /// The damped problem assumes the initial mass stays below the cap.
    pub fn check_initial_mass(&self, m0: f64, m_cap: f64) -> Result<()> {
        if self.equation.mode == Mode::Damped && m0 >= m_cap {
            return Err(invalid(
                "initial",
                format!(
                    "initial mass m0 = {m0} must satisfy m0 < M0 = {m_cap} \
                     (standing assumption on the initial mass for the damped problem)"
                ),
            ));
        }
        Ok(())
    }

    fn check_requirements(&self, a: Analysis) -> Result<()> {
        let d = &self.diagnostics;
        let field = format!("diagnostics.analyses.{}", a.name());
        let need = |ok: bool, why: &str| if ok { Ok(()) } else { Err(invalid(&field, why)) };
        match a {
            Analysis::Mass => need(self.equation.mode == Mode::Damped, "needs mode = \"damped\""),
            Analysis::Decay => need(!d.norms.is_empty(), "needs at least one entry in diagnostics.norms"),
            Analysis::Envelope => need(d.norms.contains(&2.0), "needs 2 in diagnostics.norms"),
            Analysis::Asymptotics => {
                need(self.equation.mode == Mode::Damped, "needs mode = \"damped\"")?;
                let [p, r] = self.asymptotic_parameters();
                nlrd_core::analysis::check_asymptotic_parameters(self.grid.n, p, r)
                    .map_err(|e| invalid(&field, e.to_string()))
            }
            Analysis::Contractivity => Ok(()),
            Analysis::Blowup => need(d.expect == Expect::Blowup, "needs expect = \"blowup\""),
            Analysis::LateGrowth => Ok(()),
        }
    }

    pub fn asymptotic_parameters(&self) -> [f64; 2] {
        self.diagnostics.asymptotic.unwrap_or_else(|| {
            let (p, r) = nlrd_core::analysis::default_asymptotic_parameters(self.grid.n);
            [p, r]
        })
    }
}

/// Reads a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Scenario::from_toml(&text, &path.display().to_string())
}
