//! Non-negative radial profiles and the norms every estimate is stated in.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{param, Error, Result};
use crate::grid::RadialGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl Field {
    /// Validates non-negativity, finiteness and the Dirichlet value at `R`.
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidValue { index, value });
        }
        if values[values.len() - 1] != 0.0 {
            return Err(Error::Precondition(format!(
                "field must vanish at r = R, got {}",
                values[values.len() - 1]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    /// Samples `profile` at the nodes and pins the last node to zero.
    pub fn from_fn(grid: Arc<RadialGrid>, profile: impl Fn(f64) -> f64) -> Result<Self> {
        let mut values: Vec<f64> = grid.nodes().iter().map(|&r| profile(r)).collect();
        let last = values.len() - 1;
        values[last] = 0.0;
        Self::new(grid, values)
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<RadialGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// `∫ u^p dx` for `p > 0`.
    pub fn power_integral(&self, p: f64) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, &u)| if u > 0.0 { w * u.powf(p) } else { 0.0 })
            .sum()
    }

    /// `‖u‖_{L^k}`; pass `f64::INFINITY` for the sup norm.
    pub fn lp_norm(&self, k: f64) -> Result<f64> {
        if k.is_nan() || k < 1.0 {
            return Err(param("k", format!("norm index must be >= 1, got {k}")));
        }
        if k.is_infinite() {
            return Ok(self.sup());
        }
        if k == 1.0 {
            return Ok(self.mass());
        }
        Ok(self.power_integral(k).powf(1.0 / k))
    }

    pub fn mass(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, u)| w * u)
            .sum()
    }

    /// `‖∇u‖²_{L²}` as the discrete Dirichlet form `Σ a_{i+1/2}(u_{i+1} − u_i)²`.
    ///
    /// Differences live on the half-nodes, so the form vanishes only on
    /// constants; node-centred differences would miss the odd-even mode.
    pub fn grad_l2_sq(&self) -> f64 {
        self.grid
            .faces()
            .iter()
            .zip(self.values.windows(2))
            .map(|(a, pair)| {
                let d = pair[1] - pair[0];
                a * d * d
            })
            .sum()
    }

    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }

    /// Pointwise `u ↦ u^q` for `q > 0`.
    pub fn powf(&self, q: f64) -> Field {
        let values = self.values.iter().map(|&u| if u > 0.0 { u.powf(q) } else { 0.0 }).collect();
        Self::from_parts_unchecked(self.grid.clone(), values)
    }

    pub fn scaled(&self, factor: f64) -> Result<Field> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(param("factor", format!("must be finite and >= 0, got {factor}")));
        }
        let values = self.values.iter().map(|u| u * factor).collect();
        Ok(Self::from_parts_unchecked(self.grid.clone(), values))
    }

    /// Two-column `(r, u)` text with a header naming `n, R, N, t`.
    pub fn write_snapshot<W: Write>(&self, mut out: W, t: f64) -> Result<()> {
        let mut text = String::with_capacity(self.values.len() * 48);
        let g = &self.grid;
        let _ = writeln!(
            text,
            "# radial-field n={} R={:e} N={} t={:e}",
            g.dim(),
            g.radius(),
            g.len(),
            t
        );
        for (r, u) in g.nodes().iter().zip(&self.values) {
            let _ = writeln!(text, "{r:e} {u:e}");
        }
        out.write_all(text.as_bytes())?;
        Ok(())
    }

    pub fn read_snapshot<R: BufRead>(input: R) -> Result<Snapshot> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Snapshot("empty input".into()))??;
        let rest = header
            .strip_prefix("# radial-field")
            .ok_or_else(|| Error::Snapshot(format!("unexpected header `{header}`")))?;

        let (mut dim, mut radius, mut count, mut time) = (None, None, None, None);
        for token in rest.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Snapshot(format!("bad header token `{token}`")))?;
            let bad = || Error::Snapshot(format!("bad value for `{key}`: `{value}`"));
            match key {
                "n" => dim = Some(value.parse::<usize>().map_err(|_| bad())?),
                "R" => radius = Some(value.parse::<f64>().map_err(|_| bad())?),
                "N" => count = Some(value.parse::<usize>().map_err(|_| bad())?),
                "t" => time = Some(value.parse::<f64>().map_err(|_| bad())?),
                _ => return Err(Error::Snapshot(format!("unknown header key `{key}`"))),
            }
        }
        let missing = |k: &str| Error::Snapshot(format!("header lacks `{k}`"));
        let grid = RadialGrid::new(
            dim.ok_or_else(|| missing("n"))?,
            radius.ok_or_else(|| missing("R"))?,
            count.ok_or_else(|| missing("N"))?,
        )?;

        let mut values = Vec::with_capacity(grid.len());
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let parse = |c: Option<&str>| -> Result<f64> {
                c.and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Snapshot(format!("line {}: expected `r u`", lineno + 2)))
            };
            let _r = parse(cols.next())?;
            values.push(parse(cols.next())?);
        }
        let field = Field::new(Arc::new(grid), values)?;
        Ok(Snapshot {
            field,
            t: time.ok_or_else(|| missing("t"))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: Field,
    pub t: f64,
}

/// Initial-data families.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    /// `m₀ (4πσ)^{−n/2} e^{−r²/(4σ)}`: the heat kernel at time σ, scaled to mass m₀.
    Gaussian { mass: f64, sigma: f64 },
    /// `height` on `r < width`, `height/2` at `r = width`, zero beyond.
    Bump { height: f64, width: f64 },
    /// `amplitude · min(h^{−β}, r^{−β})` on `r ≤ cutoff`; in L¹ but not L∞ as h → 0.
    Singular { beta: f64, cutoff: f64, amplitude: f64 },
}

impl InitialProfile {
    pub fn is_singular(&self) -> bool {
        matches!(self, InitialProfile::Singular { .. })
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(param(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            InitialProfile::Gaussian { mass, sigma } => {
                if !(mass.is_finite() && mass >= 0.0) {
                    return Err(param("mass", format!("must be >= 0, got {mass}")));
                }
                positive("sigma", sigma)
            }
            InitialProfile::Bump { height, width } => {
                if !(height.is_finite() && height >= 0.0) {
                    return Err(param("height", format!("must be >= 0, got {height}")));
                }
                positive("width", width)
            }
            InitialProfile::Singular {
                beta,
                cutoff,
                amplitude,
            } => {
                if !(beta > 0.0 && beta < dim as f64) {
                    return Err(param(
                        "beta",
                        format!("need 0 < beta < n = {dim} for an integrable profile, got {beta}"),
                    ));
                }
                positive("cutoff", cutoff)?;
                positive("amplitude", amplitude)
            }
        }
    }
}

pub fn make_initial(grid: Arc<RadialGrid>, profile: &InitialProfile) -> Result<Field> {
    profile.validate(grid.dim())?;
    let n = grid.dim() as f64;
    let h = grid.spacing();
    match *profile {
        InitialProfile::Gaussian { mass, sigma } => {
            let peak = mass * (4.0 * std::f64::consts::PI * sigma).powf(-n / 2.0);
            Field::from_fn(grid, |r| peak * (-r * r / (4.0 * sigma)).exp())
        }
        InitialProfile::Bump { height, width } => Field::from_fn(grid, |r| {
            if r < width {
                height
            } else if r == width {
                0.5 * height
            } else {
                0.0
            }
        }),
        InitialProfile::Singular {
            beta,
            cutoff,
            amplitude,
        } => {
            let floor = h.min(cutoff);
            Field::from_fn(grid, |r| {
                if r <= cutoff {
                    amplitude * r.max(floor).powf(-beta)
                } else {
                    0.0
                }
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(dim: usize, radius: f64, count: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(dim, radius, count).unwrap())
    }

    #[test]
    fn rejects_negative_and_nonzero_boundary() {
        let g = grid(3, 1.0, 16);
        let mut v = vec![0.0; 16];
        v[3] = -1e-3;
        assert!(matches!(Field::new(g.clone(), v), Err(Error::InvalidValue { index: 3, .. })));
        let mut v = vec![0.0; 16];
        v[15] = 1.0;
        assert!(Field::new(g.clone(), v).is_err());
        assert!(Field::new(g, vec![0.0; 4]).is_err());
    }

    #[test]
    fn zero_field_norms_vanish() {
        let f = Field::zeros(grid(3, 4.0, 32));
        for k in [1.0, 1.5, 2.0, 7.0, f64::INFINITY] {
            assert_eq!(f.lp_norm(k).unwrap(), 0.0);
        }
        assert_eq!(f.mass(), 0.0);
        assert_eq!(f.grad_l2_sq(), 0.0);
        assert!(f.lp_norm(0.5).is_err());
        assert!(f.lp_norm(f64::NAN).is_err());
    }

    #[test]
    fn heat_kernel_sup_norm() {
        let g = grid(3, 20.0, 401);
        let f = make_initial(g, &InitialProfile::Gaussian { mass: 1.0, sigma: 1.0 }).unwrap();
        let expected = (4.0 * PI).powf(-1.5);
        assert!((f.lp_norm(f64::INFINITY).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.0224483).abs() < 1e-6);
    }

    #[test]
    fn gaussian_mass_is_normalised() {
        let g = grid(3, 20.0, 1025);
        let f = make_initial(g, &InitialProfile::Gaussian { mass: 1.0, sigma: 1.0 }).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-6);
        assert_eq!(f.mass(), f.lp_norm(1.0).unwrap());
    }

    #[test]
    fn bump_mass_is_ball_volume() {
        let g = grid(3, 4.0, 801);
        let f = make_initial(g.clone(), &InitialProfile::Bump { height: 1.0, width: 1.0 }).unwrap();
        assert!((f.mass() - 4.0 * PI / 3.0).abs() < 1e-3);
        let z = make_initial(g, &InitialProfile::Bump { height: 0.0, width: 1.0 }).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn tent_gradient_energy() {
        let g = grid(3, 2.0, 801);
        let f = Field::from_fn(g, |r| (1.0 - r).max(0.0)).unwrap();
        assert!((f.grad_l2_sq() - 4.0 * PI / 3.0).abs() < 1e-3);
    }

    #[test]
    fn gradient_energy_vanishes_only_for_zero() {
        let g = grid(3, 1.0, 32);
        let mut v: Vec<f64> = (0..32).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect();
        v[31] = 0.0;
        let f = Field::new(g, v).unwrap();
        assert!(f.grad_l2_sq() > 0.0);
    }

    #[test]
    fn singular_profile_validation() {
        let g = grid(3, 2.0, 64);
        for beta in [0.0, -1.0, 3.0, 3.5] {
            let p = InitialProfile::Singular { beta, cutoff: 1.0, amplitude: 1.0 };
            assert!(make_initial(g.clone(), &p).is_err(), "beta = {beta}");
        }
        let p = InitialProfile::Gaussian { mass: 1.0, sigma: 0.0 };
        assert!(make_initial(g.clone(), &p).is_err());
        let p = InitialProfile::Bump { height: 1.0, width: -1.0 };
        assert!(make_initial(g, &p).is_err());
    }

    #[test]
    fn singular_profile_caps_at_grid_scale() {
        let g = grid(3, 2.0, 201);
        let h = g.spacing();
        let p = InitialProfile::Singular { beta: 2.5, cutoff: 1.0, amplitude: 1.0 };
        let f = make_initial(g, &p).unwrap();
        assert_eq!(f.values()[0], h.powf(-2.5));
        assert_eq!(f.values()[1], h.powf(-2.5));
        assert!(f.values()[2] < f.values()[1]);
    }

    #[test]
    fn snapshot_round_trip() {
        let g = grid(4, 3.0, 40);
        let f = make_initial(g, &InitialProfile::Gaussian { mass: 2.0, sigma: 0.3 }).unwrap();
        let mut buf = Vec::new();
        f.write_snapshot(&mut buf, 1.25).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# radial-field n=4 R=3e0 N=40 t=1.25e0\n"));
        let snap = Field::read_snapshot(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(snap.t, 1.25);
        assert_eq!(snap.field, f);
    }

    #[test]
    fn snapshot_rejects_garbage() {
        let text = "# radial-field n=3 R=1 N=16\n";
        assert!(Field::read_snapshot(std::io::Cursor::new(text)).is_err());
        let text = "hello\n";
        assert!(Field::read_snapshot(std::io::Cursor::new(text)).is_err());
    }
}
