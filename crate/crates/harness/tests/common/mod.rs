//! Helpers shared by the integration tests: an adaptive RK4 oracle for
//! scalar ODEs and random radial fields.

#![allow(dead_code)]

use std::sync::Arc;

use nlrd_core::{Field, RadialGrid};
use rand::Rng;

/// Relative accuracy of [`rk4`].
pub const ODE_TOLERANCE: f64 = 1e-8;

fn rk4_step(f: &impl Fn(f64, f64) -> f64, t: f64, y: f64, h: f64) -> f64 {
    let k1 = f(t, y);
    let k2 = f(t + h / 2.0, y + h / 2.0 * k1);
    let k3 = f(t + h / 2.0, y + h / 2.0 * k2);
    let k4 = f(t + h, y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// `y′ = f(t, y)` from `(t0, y0)`, sampled at increasing `times`. Step
/// doubling keeps the local error below `tol · max(|y|, 1e-12)`.
pub fn rk4(f: impl Fn(f64, f64) -> f64, t0: f64, y0: f64, times: &[f64], tol: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut y) = (t0, y0);
    let mut h: f64 = 1e-6;
    for &target in times {
        while t < target {
            let step = h.min(target - t);
            let full = rk4_step(&f, t, y, step);
            let half = rk4_step(&f, t, y, step / 2.0);
            let two = rk4_step(&f, t + step / 2.0, half, step / 2.0);
            let err = (two - full).abs() / 15.0;
            if err <= tol * two.abs().max(1e-12) || step < 1e-14 {
                t += step;
                y = two + (two - full) / 15.0;
                if err < tol * two.abs().max(1e-12) / 64.0 {
                    h = step * 2.0;
                }
            } else {
                h = step / 2.0;
            }
        }
        out.push(y);
    }
    out
}

/// Gaussian bumps, optionally plus a cut-off bubble `(1 + (r/λ)²)^{−(n−2)/2}`,
/// with every length scale at least ten nodes wide.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub bumps: Vec<(f64, f64, f64)>,
    pub bubble: Option<(f64, f64)>,
}

impl FieldSpec {
    pub fn random(rng: &mut impl Rng) -> Self {
        let count = rng.random_range(1..=3);
        let bumps = (0..count)
            .map(|_| {
                (
                    rng.random_range(0.1..5.0),
                    rng.random_range(0.0..4.0),
                    rng.random_range(0.4..2.0),
                )
            })
            .collect();
        let bubble = rng
            .random_bool(0.5)
            .then(|| (rng.random_range(0.1..3.0), rng.random_range(0.3..1.5)));
        Self { bumps, bubble }
    }

    pub fn field(&self, grid: Arc<RadialGrid>) -> Field {
        let n = grid.dim() as f64;
        let big_r = grid.radius();
        let bubble = |r: f64, lam: f64| (1.0 + (r / lam).powi(2)).powf(-(n - 2.0) / 2.0);
        Field::from_fn(grid, |r| {
            let mut v: f64 = self
                .bumps
                .iter()
                .map(|(a, c, w)| a * (-((r - c) / w).powi(2)).exp())
                .sum();
            if let Some((a, lam)) = self.bubble {
                v += a * (bubble(r, lam) - bubble(big_r, lam)).max(0.0);
            }
            v
        })
        .unwrap()
    }
}

/// Smooth non-negative radial profile for evolution tests.
pub fn random_initial(rng: &mut impl Rng, grid: Arc<RadialGrid>, mass_scale: f64) -> Field {
    let spec = FieldSpec {
        bumps: (0..rng.random_range(1..=3))
            .map(|_| {
                (
                    rng.random_range(0.05..1.0) * mass_scale,
                    rng.random_range(0.0..3.0),
                    rng.random_range(0.5..2.0),
                )
            })
            .collect(),
        bubble: None,
    };
    spec.field(grid)
}
