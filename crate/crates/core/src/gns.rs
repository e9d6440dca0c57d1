//! Numerical estimate of the sharp constant
//! `C* = sup J(u)`, `J(u) = ‖u‖^{α+1}_{α+1} / (‖u‖^{α−1}_1 ‖∇u‖²_2)`, `α = 1 + 2/n`,
//! over radial, non-negative, non-increasing profiles.

use std::sync::Arc;

use crate::error::{param, Error, Result};
use crate::field::Field;
use crate::grid::{unit_ball_volume, RadialGrid, RadialLaplacian};
use crate::inequalities::{grid_tolerance, sobolev_constant};

pub fn critical_exponent(dim: usize) -> f64 {
    1.0 + 2.0 / dim as f64
}

struct Norms {
    top: f64,
    mass: f64,
    grad: f64,
}

fn norms(f: &Field, alpha: f64) -> Result<Norms> {
    let mass = f.mass();
    if mass <= 0.0 {
        return Err(Error::Degenerate("zero field"));
    }
    let grad = f.grad_l2_sq();
    if grad <= 0.0 {
        return Err(Error::Degenerate("zero gradient"));
    }
    Ok(Norms {
        top: f.power_integral(alpha + 1.0),
        mass,
        grad,
    })
}

pub fn j_functional(f: &Field) -> Result<f64> {
    let alpha = critical_exponent(f.grid().dim());
    let s = norms(f, alpha)?;
    Ok(s.top / (s.mass.powf(alpha - 1.0) * s.grad))
}

/// Derivative of the discrete `J` with respect to each nodal value. The last
/// node is pinned to zero, so its entry is zero.
pub fn first_variation(f: &Field) -> Result<Vec<f64>> {
    let alpha = critical_exponent(f.grid().dim());
    let s = norms(f, alpha)?;
    let j = s.top / (s.mass.powf(alpha - 1.0) * s.grad);
    let g = log_gradient(f, alpha, &s);
    Ok(g.into_iter().map(|v| v * j).collect())
}

/// `∂ log J / ∂u_i`.
fn log_gradient(f: &Field, alpha: f64, s: &Norms) -> Vec<f64> {
    let grid = f.grid();
    let w = grid.weights();
    let a = grid.faces();
    let u = f.values();
    let n = u.len();
    let mut g = vec![0.0; n];
    for i in 0..n - 1 {
        let mut dgrad = 0.0;
        if i > 0 {
            dgrad += 2.0 * a[i - 1] * (u[i] - u[i - 1]);
        }
        dgrad -= 2.0 * a[i] * (u[i + 1] - u[i]);
        let dtop = (alpha + 1.0) * w[i] * u[i].max(0.0).powf(alpha);
        g[i] = dtop / s.top - (alpha - 1.0) * w[i] / s.mass - dgrad / s.grad;
    }
    g
}

/// Measure-preserving decreasing rearrangement on the grid.
///
/// Nodal values are sorted in decreasing order and laid out along the
/// cumulative quadrature measure; each node receives the average of that step
/// function over its own measure cell. Mass is preserved exactly.
pub fn rearrange_decreasing(f: &Field) -> Field {
    if f.is_non_increasing() {
        return f.clone();
    }
    let grid = f.grid();
    let w = grid.weights();
    let mut order: Vec<usize> = (0..f.values().len()).collect();
    let u = f.values();
    order.sort_by(|&i, &j| u[j].total_cmp(&u[i]).then(i.cmp(&j)));

    let mut out = vec![0.0; u.len()];
    let mut src = order.iter().map(|&k| (w[k], u[k])).peekable();
    let (mut left, mut value) = src.next().unwrap();
    for (slot, &cell) in out.iter_mut().zip(w) {
        let mut need = cell;
        let mut acc = 0.0;
        while need > 0.0 {
            let take = left.min(need);
            acc += take * value;
            need -= take;
            left -= take;
            if left <= 0.0 {
                match src.next() {
                    Some((wk, vk)) => {
                        left = wk;
                        value = vk;
                    }
                    None => break,
                }
            }
        }
        *slot = if cell > 0.0 { acc / cell } else { 0.0 };
    }
    // Averages of a non-increasing step function are non-increasing, but
    // rounding can flip neighbours by an ulp.
    for i in 1..out.len() {
        if out[i] > out[i - 1] {
            out[i] = out[i - 1];
        }
    }
    let last = out.len() - 1;
    out[last] = 0.0;
    Field::from_parts_unchecked(grid.clone(), out)
}

/// Scaling `λ u(μ·)` with `μ = (‖u‖₁/‖u‖_{α+1})^{(α+1)/(nα)}`, `λ = μⁿ/‖u‖₁`,
/// which sends both `‖·‖₁` and `‖·‖_{α+1}` to one. The dilation is
/// resampled with a monotone cubic interpolant, always from the input
/// profile, and `μ` is corrected until the change is below `1e-12`.
pub fn normalize(f: &Field) -> Result<Field> {
    let grid = f.grid().clone();
    let n = grid.dim() as f64;
    let alpha = critical_exponent(grid.dim());
    if f.mass() <= 0.0 {
        return Err(Error::Degenerate("zero field"));
    }
    let slopes = pchip_slopes(grid.spacing(), f.values());
    let mut total = 1.0;
    let mut cur = f.clone();
    for _ in 0..8 {
        let l1 = cur.mass();
        if l1 <= 0.0 {
            return Err(Error::Degenerate("profile left the grid under dilation"));
        }
        let top = cur.lp_norm(alpha + 1.0)?;
        let mu = (l1 / top).powf((alpha + 1.0) / (n * alpha));
        if (mu - 1.0).abs() < 1e-12 {
            break;
        }
        total *= mu;
        let values = dilate(&grid, f.values(), &slopes, total);
        cur = Field::from_parts_unchecked(grid.clone(), values);
    }
    let l1 = cur.mass();
    if l1 <= 0.0 {
        return Err(Error::Degenerate("profile left the grid under dilation"));
    }
    cur.scaled(1.0 / l1)
}

/// Fritsch–Carlson slopes; the profile is even in `r`, so the slope at the
/// origin is zero.
fn pchip_slopes(h: f64, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let d: Vec<f64> = u.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] > 0.0 {
            m[i] = 2.0 / (1.0 / d[i - 1] + 1.0 / d[i]);
        }
    }
    m[n - 1] = d[n - 2];
    m
}

fn dilate(grid: &RadialGrid, values: &[f64], slopes: &[f64], mu: f64) -> Vec<f64> {
    let h = grid.spacing();
    let last = values.len() - 1;
    let mut out: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| {
            let x = mu * r;
            if x >= grid.radius() {
                return 0.0;
            }
            let i = ((x / h).floor() as usize).min(last - 1);
            let t = x / h - i as f64;
            let (t2, t3) = (t * t, t * t * t);
            let v = (2.0 * t3 - 3.0 * t2 + 1.0) * values[i]
                + (t3 - 2.0 * t2 + t) * h * slopes[i]
                + (-2.0 * t3 + 3.0 * t2) * values[i + 1]
                + (t3 - t2) * h * slopes[i + 1];
            v.max(0.0)
        })
        .collect();
    out[last] = 0.0;
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedFamily {
    Gaussian,
    Tent,
    /// `(1 + r²)^{−(n+1)/2}`.
    PolyDecay,
}

impl SeedFamily {
    pub const ALL: [SeedFamily; 3] = [SeedFamily::Gaussian, SeedFamily::Tent, SeedFamily::PolyDecay];

    pub fn name(&self) -> &'static str {
        match self {
            SeedFamily::Gaussian => "gaussian",
            SeedFamily::Tent => "tent",
            SeedFamily::PolyDecay => "poly",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Seed profile sized to a tenth of the domain.
    pub fn profile(&self, grid: Arc<RadialGrid>) -> Result<Field> {
        let scale = grid.radius() / 10.0;
        let n = grid.dim() as f64;
        match self {
            SeedFamily::Gaussian => Field::from_fn(grid, |r| (-(r / scale).powi(2)).exp()),
            SeedFamily::Tent => Field::from_fn(grid, |r| (1.0 - r / (3.0 * scale)).max(0.0)),
            SeedFamily::PolyDecay => {
                Field::from_fn(grid, |r| (1.0 + (r / scale).powi(2)).powf(-(n + 1.0) / 2.0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnsSettings {
    pub max_iterations: usize,
    /// Initial ascent step; adapted by backtracking.
    pub step: f64,
    /// Plateau tolerance on the relative change of `J`.
    pub tolerance: f64,
    /// Number of consecutive sub-tolerance iterations that count as converged.
    pub plateau: usize,
    /// Length scale `ℓ` of the `(I − ℓ²Δ)⁻¹` gradient smoother, as a fraction of `R`.
    pub smoothing: f64,
    pub seeds: Vec<SeedFamily>,
}

impl Default for GnsSettings {
    fn default() -> Self {
        Self {
            max_iterations: 4000,
            step: 0.5,
            tolerance: 1e-10,
            plateau: 10,
            smoothing: 0.05,
            seeds: SeedFamily::ALL.to_vec(),
        }
    }
}

impl GnsSettings {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(param("max_iterations", "must be at least 1"));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(param("step", format!("must be positive, got {}", self.step)));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(param("tolerance", format!("must be positive, got {}", self.tolerance)));
        }
        if self.plateau == 0 {
            return Err(param("plateau", "must be at least 1"));
        }
        if !(self.smoothing.is_finite() && self.smoothing >= 0.0) {
            return Err(param("smoothing", format!("must be >= 0, got {}", self.smoothing)));
        }
        if self.seeds.is_empty() {
            return Err(param("seeds", "need at least one seed family"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: SeedFamily,
    pub cstar: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `J` after every accepted iteration, starting with the projected seed.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnsEstimate {
    pub dim: usize,
    pub alpha: f64,
    pub cstar: f64,
    pub profile: Field,
    /// `1/S_n`.
    pub upper_bound: f64,
    pub m0_crit: f64,
    pub iterations: usize,
    pub converged: bool,
    pub best_seed: SeedFamily,
    pub runs: Vec<SeedRun>,
}

impl GnsEstimate {
    pub fn trace(&self) -> &[f64] {
        self.runs
            .iter()
            .find(|r| r.seed == self.best_seed)
            .map(|r| r.trace.as_slice())
            .unwrap_or(&[])
    }
}

/// Length of the prefix the ascent may move: the support plus the leading
/// zero nodes whose gradient points into the admissible cone.
fn active_len(u: &[f64], grad: &[f64]) -> usize {
    let n = u.len() - 1;
    let mut k = u[..n].iter().position(|&v| v <= 0.0).unwrap_or(n);
    while k < n && grad[k] > 0.0 {
        k += 1;
    }
    k
}

/// `(I − ℓ²Δ)⁻¹ g` on nodes `0..len` with a zero Dirichlet value at `len`;
/// zero beyond. The restricted operator stays self-adjoint and positive in
/// the quadrature inner product, so the result is still an ascent direction.
fn smooth_on_prefix(lap: &RadialLaplacian, ell2: f64, g: &[f64], len: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; g.len()];
    if len == 0 {
        return Ok(out);
    }
    if ell2 == 0.0 {
        out[..len].copy_from_slice(&g[..len]);
        return Ok(out);
    }
    let (lo, di, up) = (lap.lower(), lap.diag(), lap.upper());
    let mut c = vec![0.0; len];
    let mut d = vec![0.0; len];
    for i in 0..len {
        let a = if i > 0 { -ell2 * lo[i] } else { 0.0 };
        let (cp, dp) = if i > 0 { (c[i - 1], d[i - 1]) } else { (0.0, 0.0) };
        let m = 1.0 - ell2 * di[i] - a * cp;
        if m == 0.0 || !m.is_finite() {
            return Err(Error::Singular(i));
        }
        c[i] = -ell2 * up[i] / m;
        d[i] = (g[i] - a * dp) / m;
    }
    let mut next = 0.0;
    for i in (0..len).rev() {
        out[i] = d[i] - c[i] * next;
        next = out[i];
    }
    Ok(out)
}

fn project(f: &Field) -> Result<Field> {
    normalize(&rearrange_decreasing(f))
}

fn ascend(grid: &Arc<RadialGrid>, seed: SeedFamily, opt: &GnsSettings) -> Result<(SeedRun, Field)> {
    let alpha = critical_exponent(grid.dim());
    let lap = grid.laplacian();
    let ell = opt.smoothing * grid.radius();
    let w = grid.weights();

    let mut u = project(&seed.profile(grid.clone())?)?;
    let mut j = j_functional(&u)?;
    if !j.is_finite() {
        return Err(Error::NoFiniteSeed);
    }
    let mut trace = vec![j];
    let mut step = opt.step;
    let mut quiet = 0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opt.max_iterations {
        iterations += 1;
        let s = norms(&u, alpha)?;
        // L² gradient, then smoothed so the step acts on the profile shape
        // rather than on grid-scale noise.
        let raw = log_gradient(&u, alpha, &s);
        let l2: Vec<f64> = raw
            .iter()
            .zip(w)
            .map(|(g, wi)| if *wi > 0.0 { g / wi } else { 0.0 })
            .collect();
        let active = active_len(u.values(), &l2);
        let dir = smooth_on_prefix(&lap, ell * ell, &l2, active)?;
        let scale = u.sup();

        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = u
                .values()
                .iter()
                .zip(&dir)
                .map(|(v, d)| (v + step * scale * d).max(0.0))
                .collect();
            let cand = Field::from_parts_unchecked(grid.clone(), trial);
            if let Ok(cand) = project(&cand) {
                if let Ok(jc) = j_functional(&cand) {
                    if jc.is_finite() && jc >= j {
                        accepted = Some((cand, jc));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((cand, jc)) = accepted else {
            converged = true;
            break;
        };
        let rel = (jc - j) / j;
        u = cand;
        j = jc;
        trace.push(j);
        step = (step * 1.5).min(opt.step * 64.0);
        if rel < opt.tolerance {
            quiet += 1;
            if quiet >= opt.plateau {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }

    Ok((
        SeedRun {
            seed,
            cstar: j,
            iterations,
            converged,
            trace,
        },
        u,
    ))
}

/// Multi-start projected ascent on `J`; each iterate is clipped, rearranged
/// and normalised. Fails if the best value exceeds `1/S_n` beyond grid
/// tolerance.
pub fn estimate_cstar(grid: Arc<RadialGrid>, opt: &GnsSettings) -> Result<GnsEstimate> {
    opt.validate()?;
    let dim = grid.dim();
    let alpha = critical_exponent(dim);
    let bound = 1.0 / sobolev_constant(dim)?.value;

    let mut runs = Vec::new();
    let mut best: Option<(f64, Field, SeedFamily)> = None;
    for &seed in &opt.seeds {
        let Ok((run, profile)) = ascend(&grid, seed, opt) else {
            continue;
        };
        if best.as_ref().is_none_or(|(j, _, _)| run.cstar > *j) {
            best = Some((run.cstar, profile, seed));
        }
        runs.push(run);
    }
    let (cstar, profile, best_seed) = best.ok_or(Error::NoFiniteSeed)?;
    if cstar > bound * (1.0 + grid_tolerance(&grid)) {
        return Err(Error::Certificate { cstar, bound });
    }
    let best_run = runs.iter().find(|r| r.seed == best_seed).unwrap();
    Ok(GnsEstimate {
        dim,
        alpha,
        cstar,
        upper_bound: bound,
        m0_crit: critical_mass_for(dim, cstar)?,
        iterations: best_run.iterations,
        converged: best_run.converged,
        profile,
        best_seed,
        runs,
    })
}

/// `(α/(α−1))·((α−1)/C*)^{1/α}` with `α = 1 + 2/n`.
pub fn critical_mass_for(dim: usize, cstar: f64) -> Result<f64> {
    if !(cstar.is_finite() && cstar > 0.0) {
        return Err(param("cstar", format!("must be positive, got {cstar}")));
    }
    if dim < 3 {
        return Err(Error::Dimension(dim));
    }
    let a = critical_exponent(dim);
    Ok(a / (a - 1.0) * ((a - 1.0) / cstar).powf(1.0 / a))
}

pub fn critical_mass(est: &GnsEstimate) -> Result<f64> {
    critical_mass_for(est.dim, est.cstar)
}

/// `4(k−1)/k²`, the coercivity factor of `∫u^{k−1}Δu`; largest at `k = 2`.
pub fn energy_factor(k: f64) -> f64 {
    4.0 * (k - 1.0) / (k * k)
}

/// Pointwise bound for a radial non-increasing profile:
/// `u(r) ≤ min(‖u‖₁/(ω_n rⁿ), S_n^{−1/2} ‖∇u‖₂ (ω_n rⁿ)^{−(n−2)/(2n)})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    pub dim: usize,
    pub mass: f64,
    pub grad_norm: f64,
    pub sobolev: f64,
}

impl DecayEnvelope {
    pub fn of(f: &Field) -> Result<Self> {
        Ok(Self {
            dim: f.grid().dim(),
            mass: f.mass(),
            grad_norm: f.grad_l2_sq().sqrt(),
            sobolev: sobolev_constant(f.grid().dim())?.value,
        })
    }

    pub fn bound(&self, r: f64) -> f64 {
        let n = self.dim as f64;
        let vol = unit_ball_volume(self.dim) * r.powf(n);
        let by_mass = self.mass / vol;
        let by_grad = self.grad_norm / self.sobolev.sqrt() * vol.powf(-(n - 2.0) / (2.0 * n));
        by_mass.min(by_grad)
    }

    /// Largest `u(r_i)/bound(r_i) − 1` over nodes with `r > 0`; non-positive when the envelope holds.
    pub fn violation(&self, f: &Field) -> f64 {
        f.grid()
            .nodes()
            .iter()
            .zip(f.values())
            .skip(1)
            .map(|(&r, &u)| u / self.bound(r) - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
