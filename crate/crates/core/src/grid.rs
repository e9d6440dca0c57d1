//! Truncated radial representation of ℝⁿ.
//!
//! A radially symmetric function on ℝⁿ is sampled on the uniform nodes
//! `r_i = i·h`, `h = R/(N−1)`. Integrals over ℝⁿ become weighted sums with
//! trapezoid shell weights `s_n r_i^{n−1} h c_i`, except at the origin, where
//! the trapezoid weight vanishes and the node instead carries the volume of
//! the ball of radius `h/2`. The radial Laplacian is written in flux form so
//! that those same weights are exactly conserved by diffusion.

use std::f64::consts::PI;

use crate::error::{param, Error, Result};

pub const MIN_NODES: usize = 16;

/// Surface area `2π^{n/2}/Γ(n/2)` of the unit sphere in ℝⁿ.
pub fn unit_sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(n / 2.0) / libm::tgamma(n / 2.0)
}

/// Volume `π^{n/2}/Γ(n/2 + 1)` of the unit ball in ℝⁿ.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let n = dim as f64;
    PI.powf(n / 2.0) / libm::tgamma(n / 2.0 + 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    radius: f64,
    spacing: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Flux coefficients on the half-nodes `r_{i+1/2}`, `i = 0..N−2`.
    faces: Vec<f64>,
}

impl RadialGrid {
    pub fn new(dim: usize, radius: f64, count: usize) -> Result<Self> {
        if dim < 3 {
            return Err(Error::Dimension(dim));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(param("radius", format!("must be positive and finite, got {radius}")));
        }
        if count < MIN_NODES {
            return Err(param("count", format!("need at least {MIN_NODES} nodes, got {count}")));
        }

        let h = radius / (count - 1) as f64;
        let n = dim as f64;
        let sn = unit_sphere_area(dim);
        let nodes: Vec<f64> = (0..count)
            .map(|i| if i + 1 == count { radius } else { i as f64 * h })
            .collect();

        let mut weights: Vec<f64> = nodes.iter().map(|&r| sn * r.powi(dim as i32 - 1) * h).collect();
        weights[0] = sn * (0.5 * h).powi(dim as i32) / n;
        weights[count - 1] *= 0.5;

        // a_{i+1/2} = n·W_i/(h·r_{i+1/2}) with W_i the cumulative weight up to
        // node i. This makes Σ_i w_i (Δu)_i telescope and makes the operator
        // exact on r².
        let mut faces = Vec::with_capacity(count - 1);
        let mut cumulative = 0.0;
        for i in 0..count - 1 {
            cumulative += weights[i];
            let r_half = (i as f64 + 0.5) * h;
            faces.push(n * cumulative / (h * r_half));
        }

        Ok(Self {
            dim,
            radius,
            spacing: h,
            nodes,
            weights,
            faces,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn sphere_area(&self) -> f64 {
        unit_sphere_area(self.dim)
    }

    /// Quadrature `Σ w_i v_i ≈ ∫_{ℝⁿ} v(|x|) dx`.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        Ok(self.weights.iter().zip(values).map(|(w, v)| w * v).sum())
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Length {
                expected: self.len(),
                actual: len,
            });
        }
        Ok(())
    }

    pub fn laplacian(&self) -> RadialLaplacian {
        RadialLaplacian::new(self)
    }

    /// Linear interpolation of nodal values at radius `r`; zero beyond `R`.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        let x = (r.max(0.0)) / self.spacing;
        let i = (x.floor() as usize).min(self.len() - 2);
        let t = x - i as f64;
        values[i] * (1.0 - t) + values[i + 1] * t
    }
}

/// Tridiagonal discretisation of `Δu = u_rr + (n−1)/r·u_r`.
///
/// Row 0 reduces to the symmetry closure `2n(u_1 − u_0)/h²`; the last row is
/// the homogeneous Dirichlet condition and has no coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialLaplacian {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl RadialLaplacian {
    fn new(grid: &RadialGrid) -> Self {
        let n = grid.len();
        let w = grid.weights();
        let a = grid.faces();
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n - 1 {
            upper[i] = a[i] / w[i];
            if i > 0 {
                lower[i] = a[i - 1] / w[i];
            }
            diag[i] = -(upper[i] + lower[i]);
        }
        Self { lower, diag, upper }
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(u.len(), n, "laplacian applied to a field of the wrong length");
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * u[i];
                if i > 0 {
                    s += self.lower[i] * u[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * u[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `(I − dt·Δ) x = rhs` with `x_{N−1} = 0` by Thomas elimination.
    pub fn solve_implicit(&self, dt: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::Length {
                expected: n,
                actual: rhs.len(),
            });
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];

        let b0 = 1.0 - dt * self.diag[0];
        if b0 == 0.0 {
            return Err(Error::Singular(0));
        }
        c[0] = -dt * self.upper[0] / b0;
        d[0] = rhs[0] / b0;
        for i in 1..n - 1 {
            let a = -dt * self.lower[i];
            let m = (1.0 - dt * self.diag[i]) - a * c[i - 1];
            if m == 0.0 || !m.is_finite() {
                return Err(Error::Singular(i));
            }
            c[i] = -dt * self.upper[i] / m;
            d[i] = (rhs[i] - a * d[i - 1]) / m;
        }

        let mut x = vec![0.0; n];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        Ok(x)
    }
}
