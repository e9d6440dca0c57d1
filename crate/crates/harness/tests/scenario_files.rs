use std::fs;

use nlrd_harness::presets::{preset, PRESETS};
use nlrd_harness::scenario::{AlphaSpec, CapSpec, Mode};
use nlrd_harness::{load_scenario, HarnessError};

const SMALL: &str = r#"name = "small"

[grid]
n = 3
radius = 30.0
count = 128

[equation]
alpha = "critical"
m_cap = 4.0

[initial]
profile = "gaussian"
mass = 1.0
sigma = 1.0

[solver]
t_end = 2.0
"#;

fn load(text: &str) -> Result<nlrd_harness::Scenario, HarnessError> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    fs::write(&path, text).unwrap();
    load_scenario(&path)
}

#[test]
fn file_loads_with_defaults() {
    let s = load(SMALL).unwrap();
    assert_eq!(s.equation.alpha, AlphaSpec::Critical);
    assert_eq!(s.equation.mode, Mode::Damped);
    assert_eq!(s.m_cap(), Some(4.0));
    assert!(s.diagnostics.analyses.is_empty());
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_scenario(std::path::Path::new("/nonexistent/s.toml")).unwrap_err();
    assert!(matches!(err, HarnessError::Io { .. }));
}

#[test]
fn unknown_keys_carry_location() {
    let text = SMALL.replace("[solver]\nt_end = 2.0", "[solver]\nt_end = 2.0\ntheta = 0.5");
    match load(&text) {
        Err(HarnessError::Parse { line, message, .. }) => {
            assert_eq!(line, 19);
            assert!(message.contains("theta"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let text = SMALL.replace("[output]", "").to_string() + "[plots]\nwidth = 3\n";
    assert!(matches!(load(&text), Err(HarnessError::Parse { line: 19, .. })));
}

#[test]
fn syntax_errors_carry_location() {
    let text = SMALL.replace("count = 128", "count = = 128");
    assert!(matches!(load(&text), Err(HarnessError::Parse { line: 6, .. })));
}

#[test]
fn initial_mass_above_cap_is_rejected() {
    let text = SMALL.replace("mass = 1.0", "mass = 5.0");
    let err = load(&text).unwrap_err().to_string();
    assert!(err.contains("m0") && err.contains("standing assumption"), "{err}");
    // the undamped problem has no such assumption
    let text = text.replace("m_cap = 4.0", "m_cap = 4.0\nmode = \"undamped\"");
    assert!(load(&text).is_ok());
}

#[test]
fn dimension_two_is_rejected() {
    let err = load(&SMALL.replace("n = 3", "n = 2")).unwrap_err();
    assert!(matches!(err, HarnessError::Invalid { ref field, .. } if field == "grid.n"), "{err}");
}

#[test]
fn bad_alpha_and_cap_strings() {
    assert!(load(&SMALL.replace("\"critical\"", "\"fujita\"")).is_err());
    assert!(load(&SMALL.replace("m_cap = 4.0", "m_cap = \"threshold\"")).is_err());
    assert!(load(&SMALL.replace("m_cap = 4.0", "m_cap = -1.0")).is_err());
    let s = load(&SMALL.replace("m_cap = 4.0", "m_cap = \"auto-threshold*0.8\"")).unwrap();
    assert_eq!(s.equation.m_cap, CapSpec::Threshold(0.8));
    assert!(s.needs_cstar());
}

#[test]
fn shipped_presets() {
    assert_eq!(PRESETS.len(), 5);
    let s = preset("subcritical-n3").unwrap();
    assert_eq!((s.grid.n, s.alpha(), s.m_cap()), (3, 1.3, Some(10.0)));
    let f = preset("fujita-control").unwrap();
    assert_eq!(f.equation.mode, Mode::Undamped);
    for p in PRESETS {
        assert_eq!(load(p.text).unwrap(), preset(p.name).unwrap());
    }
}
