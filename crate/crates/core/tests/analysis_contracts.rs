use std::sync::Arc;

use nlrd_core::analysis::{
    blowup_summary, contractivity_report, fit_decay, heat_asymptotics, l2_decay_envelope,
    matched_heat_run,
};
use nlrd_core::evolution::{heat_only_run, run, ReactionMode, SolverConfig};
use nlrd_core::{make_initial, Field, InitialProfile, RadialGrid};

const ALPHA: f64 = 5.0 / 3.0;

fn grid(radius: f64, count: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(3, radius, count).unwrap())
}

fn gaussian(g: &Arc<RadialGrid>, mass: f64) -> Field {
    make_initial(g.clone(), &InitialProfile::Gaussian { mass, sigma: 1.0 }).unwrap()
}

#[test]
fn zero_run_has_no_envelope_violation() {
    let g = grid(10.0, 64);
    let rec = run(&Field::zeros(g), &SolverConfig::new(1.0, ALPHA).with_t_end(1.0)).unwrap();
    assert_eq!(l2_decay_envelope(&rec).unwrap().max_violation, 0.0);
}

#[test]
fn heat_gaussian_l2_decay_matches_closed_form() {
    // ‖G_{1+t}‖₂ ∝ (1+t)^{−3/4}; on [20, 200] the local log-slope is close to −0.75
    let g = grid(200.0, 1001);
    let u0 = gaussian(&g, 1.0);
    let mut cfg = SolverConfig::new(1.0, ALPHA).with_t_end(200.0);
    cfg.dt_max = 0.1;
    let rec = heat_only_run(&u0, &cfg).unwrap();
    let fit = fit_decay(&rec, 2.0, Some((20.0, 200.0))).unwrap();
    let exact = {
        let f = |t: f64| (1.0f64 + t).powf(-0.75);
        (f(200.0).ln() - f(20.0).ln()) / (200f64.ln() - 20f64.ln())
    };
    assert!((fit.slope - exact).abs() < 0.01, "{} vs {exact}", fit.slope);
    assert!((fit.predicted_slope + 0.75).abs() < 1e-12);
    let env = l2_decay_envelope(&rec).unwrap();
    assert!(env.c > 0.0 && env.max_violation == 0.0);
}

#[test]
fn identical_runs_are_an_exact_match() {
    let g = grid(30.0, 200);
    let u0 = gaussian(&g, 1.0);
    let mut cfg = SolverConfig::new(1.0, ALPHA)
        .with_mode(ReactionMode::HeatOnly)
        .with_t_end(5.0);
    cfg.keep_fields = true;
    let rec = run(&u0, &cfg).unwrap();
    let same = heat_asymptotics(&rec, &rec, 3.0, 2.5, None).unwrap();
    assert!(same.exact_match());
    assert_eq!(same.min_difference, 0.0);
    // the rerun lands on the recorded times through clipped steps
    let heat = matched_heat_run(&u0, &rec, &cfg).unwrap();
    let out = heat_asymptotics(&rec, &heat, 3.0, 2.5, None).unwrap();
    let worst = out.difference.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    assert!(worst <= 1e-12 * u0.sup(), "{worst}");
}

#[test]
fn heat_comparison_rejects_bad_inputs() {
    let g = grid(30.0, 200);
    let u0 = gaussian(&g, 1.0);
    let mut cfg = SolverConfig::new(2.0, ALPHA).with_t_end(2.0);
    cfg.keep_fields = true;
    let rec = run(&u0, &cfg).unwrap();
    let heat = matched_heat_run(&u0, &rec, &cfg).unwrap();
    assert!(heat_asymptotics(&rec, &heat, 3.0, 2.0, None).is_err());
    let other = run(&u0, &cfg.clone().with_t_end(1.0)).unwrap();
    assert!(heat_asymptotics(&rec, &other, 3.0, 2.5, None).is_err());
    cfg.keep_fields = false;
    let bare = run(&u0, &cfg).unwrap();
    assert!(heat_asymptotics(&bare, &heat, 3.0, 2.5, None).is_err());
}

#[test]
fn damped_run_dominates_its_heat_flow() {
    let g = grid(40.0, 256);
    let u0 = gaussian(&g, 1.0);
    let mut cfg = SolverConfig::new(2.0, ALPHA).with_t_end(10.0);
    cfg.keep_fields = true;
    let rec = run(&u0, &cfg).unwrap();
    let heat = matched_heat_run(&u0, &rec, &cfg).unwrap();
    let out = heat_asymptotics(&rec, &heat, 3.0, 2.5, Some((1.0, 10.0))).unwrap();
    let scale = rec.sup.iter().cloned().fold(0.0, f64::max);
    assert!(out.min_difference >= -1e-12 * scale);
    assert!(out.fit.is_some());
}

#[test]
fn bounded_data_is_not_in_scope_for_contractivity() {
    let g = grid(20.0, 128);
    let profile = InitialProfile::Gaussian { mass: 1.0, sigma: 1.0 };
    let u0 = make_initial(g, &profile).unwrap();
    let rec = run(&u0, &SolverConfig::new(2.0, ALPHA).with_t_end(2.0)).unwrap();
    let rep = contractivity_report(&rec, &profile, None, None).unwrap();
    assert!(!rep.applicable);
    assert!(rep.early.is_none() && rep.late.is_none());
    assert_eq!(rep.early_bound, -1.0);
    assert_eq!(rep.late_bound, -2.5);
}

#[test]
fn blowup_summary_needs_blowups() {
    let g = grid(20.0, 128);
    let u0 = gaussian(&g, 1.0);
    let rec = run(&u0, &SolverConfig::new(2.0, ALPHA).with_t_end(1.0)).unwrap();
    assert!(blowup_summary(&rec, &rec).is_err());
}
