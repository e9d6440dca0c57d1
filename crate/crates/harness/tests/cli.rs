use std::fs;
use std::process::Command;

fn nlrd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlrd"))
}

const CONFIG: &str = r#"name = "cli"
[grid]
n = 3
radius = 30.0
count = 96
[equation]
alpha = "critical"
m_cap = 4.0
[initial]
profile = "gaussian"
mass = 1.0
sigma = 1.0
[solver]
t_end = 2.0
[diagnostics]
analyses = ["mass"]
"#;

#[test]
fn run_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.toml");
    fs::write(&ok, CONFIG).unwrap();
    let out = dir.path().join("out");
    let st = nlrd().arg("run").arg(&ok).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(out.join("manifest.json").exists());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, CONFIG.replace("expect", "x").replace("analyses = [\"mass\"]", "analyses = [\"mass\"]\nexpect = \"blowup\"")).unwrap();
    let st = nlrd().arg("run").arg(&bad).arg("--out").arg(dir.path().join("o2")).status().unwrap();
    assert_eq!(st.code(), Some(3));

    let broken = dir.path().join("broken.toml");
    fs::write(&broken, CONFIG.replace("n = 3", "n = 2")).unwrap();
    let o = nlrd().arg("run").arg(&broken).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n >= 3"));

    let blow = dir.path().join("blow.toml");
    let text = CONFIG
        .replace("m_cap = 4.0", "m_cap = 5.0\nmode = \"undamped\"")
        .replace("mass = 1.0", "mass = 5.0")
        .replace("sigma = 1.0", "sigma = 0.5")
        .replace("t_end = 2.0", "t_end = 50.0\nblowup_sup = 1e6")
        .replace("analyses = [\"mass\"]", "analyses = []\nexpect = \"blowup\"");
    fs::write(&blow, text).unwrap();
    let st = nlrd().arg("run").arg(&blow).arg("--out").arg(dir.path().join("o3")).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn presets_listing_and_dump() {
    let o = nlrd().arg("presets").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["critical-below-threshold", "asymptotics", "singular-data", "subcritical-n3", "fujita-control"] {
        assert!(text.contains(name), "{name}");
    }
    let o = nlrd().args(["presets", "subcritical-n3"]).output().unwrap();
    assert!(String::from_utf8(o.stdout).unwrap().contains("alpha = 1.3"));
    assert_eq!(nlrd().args(["presets", "nope"]).status().unwrap().code(), Some(1));
}

#[test]
fn cstar_command() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlrd()
        .args(["cstar", "--n", "3", "--count", "401", "--seed-profile", "gaussian", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("C*") && text.contains("gaussian"), "{text}");
    let doc: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("cstar.json")).unwrap()).unwrap();
    assert_eq!(doc["runs"].as_array().unwrap().len(), 1);
    assert_eq!(nlrd().args(["cstar", "--n", "3", "--seed-profile", "cubic"]).status().unwrap().code(), Some(1));
    assert_eq!(nlrd().args(["cstar", "--n", "2"]).status().unwrap().code(), Some(1));
}

#[test]
fn sweep_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let st = nlrd()
        .arg("sweep")
        .arg(&cfg)
        .args(["--axis", "dt_max", "--values", "0.05,0.1", "--workers", "2", "--out"])
        .arg(dir.path().join("sw"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let summary = fs::read_to_string(dir.path().join("sw/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    let st = nlrd().arg("sweep").arg(&cfg).args(["--axis", "sigma", "--values", "1"]).status().unwrap();
    assert_ne!(st.code(), Some(0));
}
