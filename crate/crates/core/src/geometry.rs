//! Points, the singular metric, parabolic cubes and the weighted measure
//! `dμ = s^{ν−1} ds dy dt`.

use crate::error::{Error, Result};
use crate::fields::{Grid, MEMBERSHIP_EPS};

/// A point `(x, y, t)` of the half-space, `x ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: Vec<f64>,
    pub t: f64,
}

impl Point {
    pub fn new(x: f64, y: Vec<f64>, t: f64) -> Result<Self> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("x must be finite and nonnegative, got {x}")));
        }
        if y.is_empty() {
            return Err(Error::Domain("n >= 2 requires at least one tangential coordinate".into()));
        }
        Ok(Self { x, y, t })
    }

    /// Spatial dimension.
    pub fn n(&self) -> usize {
        self.y.len() + 1
    }

    pub fn to_s(&self) -> SPoint {
        SPoint { s: self.x.sqrt(), y: self.y.clone(), t: self.t }
    }
}

/// The same point in the coordinates `s = √x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SPoint {
    pub s: f64,
    pub y: Vec<f64>,
    pub t: f64,
}

impl SPoint {
    pub fn new(s: f64, y: Vec<f64>, t: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!("s must be finite and nonnegative, got {s}")));
        }
        if y.is_empty() {
            return Err(Error::Domain("n >= 2 requires at least one tangential coordinate".into()));
        }
        Ok(Self { s, y, t })
    }

    pub fn to_point(&self) -> Point {
        Point { x: self.s * self.s, y: self.y.clone(), t: self.t }
    }
}

fn check_pair(p: &Point, q: &Point) -> Result<()> {
    if p.x < 0.0 || q.x < 0.0 {
        return Err(Error::Domain(format!("negative x in distance ({}, {})", p.x, q.x)));
    }
    if p.y.len() != q.y.len() {
        return Err(Error::Domain("points of different dimension".into()));
    }
    Ok(())
}

fn y_dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// `d_γ² = (√x − √x₀)² + γ²|y − y₀|²`.
pub fn d_gamma(p: &Point, q: &Point, gamma: f64) -> Result<f64> {
    check_pair(p, q)?;
    let ds = p.x.sqrt() - q.x.sqrt();
    Ok((ds * ds + gamma * gamma * y_dist_sq(&p.y, &q.y)).sqrt())
}

/// `d̄_γ² = (x − x₀)²/(x + x₀) + γ²|y − y₀|²`; the first term is `0` when `x = x₀ = 0`.
pub fn d_bar(p: &Point, q: &Point, gamma: f64) -> Result<f64> {
    check_pair(p, q)?;
    Ok((d_bar_x_term(p.x, q.x) + gamma * gamma * y_dist_sq(&p.y, &q.y)).sqrt())
}

/// The x part `(x − x₀)²/(x + x₀)` of `d̄²`.
pub fn d_bar_x_term(x: f64, x0: f64) -> f64 {
    let sum = x + x0;
    if sum == 0.0 {
        0.0
    } else {
        (x - x0) * (x - x0) / sum
    }
}

/// `|√x₁ − √x₂| + |y₁ − y₂| + √|t₁ − t₂|`.
pub fn s_distance(p: &Point, q: &Point) -> Result<f64> {
    check_pair(p, q)?;
    Ok(s_distance_s(p.x.sqrt(), &p.y, p.t, q.x.sqrt(), &q.y, q.t))
}

/// [`s_distance`] for points already in s-coordinates.
pub fn s_distance_s(s1: f64, y1: &[f64], t1: f64, s2: f64, y2: &[f64], t2: f64) -> f64 {
    (s1 - s2).abs() + y_dist_sq(y1, y2).sqrt() + (t1 - t2).abs().sqrt()
}

/// `ρ_ν(s₀) = (s₀ + ρ)^{2−ν} − s₀^{2−ν}`.
pub fn rho_nu(s0: f64, rho: f64, nu: f64) -> f64 {
    (s0 + rho).powf(2.0 - nu) - s0.powf(2.0 - nu)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CubeKind {
    /// `|x − x₀| ≤ η²`, `|y − y₀| ≤ η`, time length `η²`.
    BEta,
    /// `|x − x₀| ≤ ρ`, `|y − y₀| ≤ ρ`, time length `ρ²`.
    CRho,
    /// `|√x − √x₀| ≤ ρ`, `|y − y₀| ≤ ρ`, time length `ρ²`.
    QRho,
    /// `|√x − √x₀| ≤ r`, `γ|y − y₀| ≤ r`, time length `r²`.
    BrGamma,
}

/// Which side of the base time the cube occupies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TimeOrientation {
    /// `t₀ − r² ≤ t ≤ t₀`.
    #[default]
    Backward,
    /// `t₀ ≤ t ≤ t₀ + r²`.
    Forward,
}

/// Norm used for `|y − y₀|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum YNorm {
    #[default]
    Euclidean,
    /// Box `max_i |y_i − y₀ᵢ|`.
    Max,
}

/// Closed parabolic cube, always intersected with `x ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParabolicCube {
    pub kind: CubeKind,
    pub base: Point,
    pub radius: f64,
    pub gamma: f64,
    pub orientation: TimeOrientation,
    pub y_norm: YNorm,
}

impl ParabolicCube {
    pub fn new(kind: CubeKind, base: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("cube radius must be positive, got {radius}")));
        }
        Ok(Self { kind, base, radius, gamma: 1.0, orientation: TimeOrientation::Backward, y_norm: YNorm::Euclidean })
    }

    /// `Q_ρ(s₀, y₀, t₀)`, backward in time.
    pub fn q_rho(s0: f64, y0: &[f64], t0: f64, rho: f64) -> Result<Self> {
        Self::new(CubeKind::QRho, Point::new(s0 * s0, y0.to_vec(), t0)?, rho)
    }

    pub fn b_r_gamma(base: Point, r: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
        }
        let mut cube = Self::new(CubeKind::BrGamma, base, r)?;
        cube.gamma = gamma;
        Ok(cube)
    }

    /// The box `{0 ≤ x ≤ r², |y_i| ≤ r, 1 − r² ≤ t ≤ 1}`.
    pub fn model_box(n: usize, r: f64) -> Result<Self> {
        Ok(Self::q_rho(0.0, &vec![0.0; n - 1], 1.0, r)?.with_y_norm(YNorm::Max))
    }

    pub fn with_orientation(mut self, orientation: TimeOrientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn with_y_norm(mut self, y_norm: YNorm) -> Self {
        self.y_norm = y_norm;
        self
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn s0(&self) -> f64 {
        self.base.x.sqrt()
    }

    /// Length of the time window.
    pub fn duration(&self) -> f64 {
        self.radius * self.radius
    }

    /// Radius of the tangential ball.
    pub fn y_radius(&self) -> f64 {
        match self.kind {
            CubeKind::BrGamma => self.radius / self.gamma,
            _ => self.radius,
        }
    }

    /// `[lo, hi]` in `s`.
    pub fn s_range(&self) -> (f64, f64) {
        let s0 = self.s0();
        let x0 = self.base.x;
        match self.kind {
            CubeKind::QRho | CubeKind::BrGamma => ((s0 - self.radius).max(0.0), s0 + self.radius),
            CubeKind::BEta => {
                let e2 = self.radius * self.radius;
                ((x0 - e2).max(0.0).sqrt(), (x0 + e2).sqrt())
            }
            CubeKind::CRho => ((x0 - self.radius).max(0.0).sqrt(), (x0 + self.radius).sqrt()),
        }
    }

    /// `[lo, hi]` in time.
    pub fn t_range(&self) -> (f64, f64) {
        let t0 = self.base.t;
        match self.orientation {
            TimeOrientation::Backward => (t0 - self.duration(), t0),
            TimeOrientation::Forward => (t0, t0 + self.duration()),
        }
    }

    /// `[lo, hi]` along tangential axis `i` (0-based).
    pub fn y_range(&self, i: usize) -> (f64, f64) {
        let r = self.y_radius();
        (self.base.y[i] - r, self.base.y[i] + r)
    }

    /// Membership of `[s, y_2, …, y_n, t]`.
    pub fn contains_s(&self, c: &[f64]) -> bool {
        let n = self.n();
        let (s, t) = (c[0], c[n]);
        if s < 0.0 {
            return false;
        }
        let (slo, shi) = self.s_range();
        let spatial_ok = match self.kind {
            CubeKind::QRho | CubeKind::BrGamma => s >= slo - MEMBERSHIP_EPS && s <= shi + MEMBERSHIP_EPS,
            CubeKind::BEta => (s * s - self.base.x).abs() <= self.radius * self.radius + MEMBERSHIP_EPS,
            CubeKind::CRho => (s * s - self.base.x).abs() <= self.radius + MEMBERSHIP_EPS,
        };
        if !spatial_ok {
            return false;
        }
        let r = self.y_radius();
        let y_ok = match self.y_norm {
            YNorm::Euclidean => y_dist_sq(&c[1..n], &self.base.y).sqrt() <= r + MEMBERSHIP_EPS,
            YNorm::Max => c[1..n].iter().zip(&self.base.y).all(|(a, b)| (a - b).abs() <= r + MEMBERSHIP_EPS),
        };
        let (tlo, thi) = self.t_range();
        y_ok && t >= tlo - MEMBERSHIP_EPS && t <= thi + MEMBERSHIP_EPS
    }

    pub fn contains(&self, p: &Point) -> bool {
        let mut c = Vec::with_capacity(p.y.len() + 2);
        c.push(p.x.sqrt());
        c.extend_from_slice(&p.y);
        c.push(p.t);
        self.contains_s(&c)
    }

    /// True when the point lies on the parabolic boundary: the bottom time
    /// slice or the lateral spatial boundary. The `s = 0` face is not part of it.
    pub fn on_parabolic_boundary_s(&self, c: &[f64], tol: f64) -> bool {
        let n = self.n();
        if !self.contains_s(c) {
            return false;
        }
        let (slo, shi) = self.s_range();
        let (tlo, _) = self.t_range();
        if (c[n] - tlo).abs() <= tol {
            return true;
        }
        if (c[0] - shi).abs() <= tol || (slo > 0.0 && (c[0] - slo).abs() <= tol) {
            return true;
        }
        let r = self.y_radius();
        match self.y_norm {
            YNorm::Euclidean => (y_dist_sq(&c[1..n], &self.base.y).sqrt() - r).abs() <= tol,
            YNorm::Max => c[1..n].iter().zip(&self.base.y).any(|(a, b)| ((a - b).abs() - r).abs() <= tol),
        }
    }
}

/// `dμ = s^{ν−1} ds dy dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedMeasure {
    nu: f64,
}

impl WeightedMeasure {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::Domain(format!("nu must lie in (0, 1), got {nu}")));
        }
        Ok(Self { nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn density(&self, s: f64) -> f64 {
        s.powf(self.nu - 1.0)
    }

    /// `∫_a^b s^{ν−1} ds`.
    pub fn s_integral(&self, a: f64, b: f64) -> f64 {
        (b.powf(self.nu) - a.powf(self.nu)) / self.nu
    }

    /// Weights of the two hat functions on `[a, b]` against `s^{ν−1} ds`,
    /// so that `∫_a^b f s^{ν−1} ds` is exact for `f` linear on the cell.
    pub fn hat_weights(&self, a: f64, b: f64) -> (f64, f64) {
        let nu = self.nu;
        let total = self.s_integral(a, b);
        let first_moment = (b.powf(nu + 1.0) - a.powf(nu + 1.0)) / (nu + 1.0);
        let upper = (first_moment - a * total) / (b - a);
        (total - upper, upper)
    }
}

/// Volume of the Euclidean ball of radius `r` in dimension `k`.
pub fn ball_volume(k: usize, r: f64) -> f64 {
    let unit = match k {
        0 => 1.0,
        1 => 2.0,
        _ => {
            let mut v = if k.is_multiple_of(2) { 1.0 } else { 2.0 };
            let mut d = if k.is_multiple_of(2) { 2 } else { 3 };
            while d <= k {
                v *= 2.0 * std::f64::consts::PI / d as f64;
                d += 2;
            }
            v
        }
    };
    unit * r.powi(k as i32)
}

fn require_q_rho(cube: &ParabolicCube) -> Result<()> {
    if cube.kind != CubeKind::QRho {
        return Err(Error::Domain(format!("closed-form measure needs a Q_rho cube, got {:?}", cube.kind)));
    }
    Ok(())
}

/// Normalized closed form `[(s₀ + ρ)^ν − s̄₀^ν] ρ^n`, `s̄₀ = max(s₀ − ρ, 0)`.
pub fn cube_measure(cube: &ParabolicCube, mu: &WeightedMeasure) -> Result<f64> {
    require_q_rho(cube)?;
    let (lo, hi) = cube.s_range();
    let nu = mu.nu();
    Ok((hi.powf(nu) - lo.powf(nu)) * cube.radius.powi(cube.n() as i32))
}

/// `∫_Q s^{ν−1} ds dy dt` over the cube, without normalization.
pub fn cube_measure_raw(cube: &ParabolicCube, mu: &WeightedMeasure) -> Result<f64> {
    require_q_rho(cube)?;
    let (lo, hi) = cube.s_range();
    let k = cube.n() - 1;
    let r = cube.y_radius();
    let y_vol = match cube.y_norm {
        YNorm::Euclidean => ball_volume(k, r),
        YNorm::Max => (2.0 * r).powi(k as i32),
    };
    Ok(mu.s_integral(lo, hi) * y_vol * cube.duration())
}

/// `cube_measure_raw / cube_measure`; depends only on `ρ`, `ν`, `n` and the y-norm.
pub fn measure_normalization(n: usize, rho: f64, nu: f64, y_norm: YNorm) -> f64 {
    let k = n - 1;
    let y_vol = match y_norm {
        YNorm::Euclidean => ball_volume(k, rho),
        YNorm::Max => (2.0 * rho).powi(k as i32),
    };
    y_vol * rho * rho / (nu * rho.powi(n as i32))
}

/// `∫ s^{ν−1} ds dy dt` over the grid cells whose midpoint satisfies
/// `indicator([s, y…, t])`. The weight is integrated exactly in `s` on each
/// cell; other axes contribute the cell width.
pub fn set_measure<F>(indicator: F, grid: &Grid, mu: &WeightedMeasure) -> Result<f64>
where
    F: Fn(&[f64]) -> bool,
{
    if grid.is_empty() {
        return Err(Error::Grid("empty grid".into()));
    }
    let s = grid.s_axis().nodes();
    let s_weights: Vec<f64> = s.windows(2).map(|w| mu.s_integral(w[0], w[1])).collect();
    let mut total = 0.0;
    grid.for_each_cell(|cell, mid| {
        if indicator(mid) {
            let mut w = s_weights[cell[0]];
            for k in 1..grid.num_axes() {
                let nodes = grid.axis(k).nodes();
                w *= nodes[cell[k] + 1] - nodes[cell[k]];
            }
            total += w;
        }
    });
    Ok(total)
}
