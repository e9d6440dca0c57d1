//! Shipped scenarios.

use crate::error::{HarnessError, Result};
use crate::scenario::Scenario;

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "critical-below-threshold",
        summary: "critical exponent, cap at half the critical mass: global run, L^k decay rates",
        text: r#"name = "critical-below-threshold"

[grid]
n = 3
radius = 100.0
count = 512

[equation]
alpha = "critical"
m_cap = "auto-threshold*0.5"
mode = "damped"

[initial]
profile = "gaussian"
mass = 3.0
sigma = 1.0

[solver]
t_end = 100.0

[diagnostics]
norms = [2.0, 3.0]
analyses = ["mass", "decay", "envelope", "late-growth"]
expect = "global"

[output]
snapshot_times = [1.0, 10.0, 100.0]
"#,
    },
    Preset {
        name: "asymptotics",
        summary: "same data; distance to the heat flow and its rate",
        text: r#"name = "asymptotics"

[grid]
n = 3
radius = 100.0
count = 512

[equation]
alpha = "critical"
m_cap = "auto-threshold*0.5"
mode = "damped"

[initial]
profile = "gaussian"
mass = 3.0
sigma = 1.0

[solver]
t_end = 100.0

[diagnostics]
norms = [2.0]
analyses = ["mass", "asymptotics"]
asymptotic = [3.0, 2.5]
expect = "global"
"#,
    },
    Preset {
        name: "singular-data",
        summary: "r^-2.5 initial data near the origin: smoothing and sup-norm rates",
        text: r#"name = "singular-data"

[grid]
n = 3
radius = 100.0
count = 512

[equation]
alpha = "critical"
m_cap = "auto-threshold*0.5"
mode = "damped"

[initial]
profile = "singular"
beta = 2.5
cutoff = 1.0
amplitude = 0.1

[solver]
t_end = 100.0
dt_init = 1e-6

[diagnostics]
norms = [3.0]
analyses = ["mass", "contractivity"]
expect = "global"
"#,
    },
    Preset {
        name: "subcritical-n3",
        summary: "alpha = 1.3 below the critical exponent, M0 = 10: bounded sup norm",
        text: r#"name = "subcritical-n3"

[grid]
n = 3
radius = 100.0
count = 512

[equation]
alpha = 1.3
m_cap = 10.0
mode = "damped"

[initial]
profile = "gaussian"
mass = 1.0
sigma = 1.0

[solver]
t_end = 100.0

[diagnostics]
norms = [2.0]
analyses = ["mass", "late-growth"]
expect = "global"
"#,
    },
    Preset {
        name: "fujita-control",
        summary: "critical data without the mass damping: finite-time blow-up",
        text: r#"name = "fujita-control"

[grid]
n = 3
radius = 100.0
count = 512

[equation]
alpha = "critical"
m_cap = "auto-threshold*0.5"
mode = "undamped"

[initial]
profile = "gaussian"
mass = 3.0
sigma = 1.0

[solver]
t_end = 100.0

[diagnostics]
norms = []
analyses = ["blowup"]
expect = "blowup"
"#,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn preset(name: &str) -> Result<Scenario> {
    let p = find(name).ok_or_else(|| HarnessError::UnknownPreset(name.to_string()))?;
    Scenario::from_toml(p.text, &format!("preset {name}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{AlphaSpec, CapSpec};

    #[test]
    fn every_preset_parses() {
        for p in PRESETS {
            let s = preset(p.name).unwrap();
            assert_eq!(s.name, p.name);
        }
    }

    #[test]
    fn subcritical_preset_content() {
        let s = preset("subcritical-n3").unwrap();
        assert_eq!(s.equation.alpha, AlphaSpec::Value(1.3));
        assert_eq!(s.grid.n, 3);
        assert_eq!(s.equation.m_cap, CapSpec::Value(10.0));
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("nope"), Err(HarnessError::UnknownPreset(_))));
    }
}
