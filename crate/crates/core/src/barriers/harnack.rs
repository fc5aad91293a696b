//! The Gaussian-type barrier `v = e^{−mt} ω^l(·, t + τ₀) − M(τ₀)` with
//! `ω = (18 − d̄²) Λ` and `Λ = e^{−d̄²/t}/(4πt)`.

use std::f64::consts::PI;

use serde::Serialize;

use super::{richardson_d1, richardson_d2, Certificate, Margin, MinTracker};
use crate::error::{Error, Result};
use crate::geometry::{d_bar_x_term, ParabolicCube, Point};
use crate::operators::CoefficientField;

/// Number of `d̄²` levels used for `M(τ₀)`.
pub const M_LEVELS: usize = 129;

pub fn lambda_kernel(theta: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("Λ needs t > 0, got {t}")));
    }
    if theta < 0.0 {
        return Err(Error::Domain(format!("Λ needs θ ≥ 0, got {theta}")));
    }
    Ok((-theta / t).exp() / (4.0 * PI * t))
}

/// `ω(p) = (18 − d̄²(p, base)) Λ` at time `p.t`.
pub fn omega(p: &Point, base: &Point, gamma: f64) -> Result<f64> {
    let theta = theta_jet(p.x, &p.y, base, gamma)?.theta;
    Ok((18.0 - theta) * lambda_kernel(theta, p.t)?)
}

/// `θ = d̄²` and its derivatives in `(x, y₂, …)`; all mixed second derivatives vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaJet {
    pub theta: f64,
    pub d: Vec<f64>,
    pub dd: Vec<f64>,
}

pub fn theta_jet(x: f64, y: &[f64], base: &Point, gamma: f64) -> Result<ThetaJet> {
    if x < 0.0 {
        return Err(Error::Domain(format!("negative x = {x}")));
    }
    if y.len() != base.y.len() {
        return Err(Error::Domain("point and base differ in dimension".into()));
    }
    let x0 = base.x;
    let sum = x + x0;
    let g2 = gamma * gamma;
    let mut d = Vec::with_capacity(y.len() + 1);
    let mut dd = Vec::with_capacity(y.len() + 1);
    if sum == 0.0 {
        d.push(1.0);
        dd.push(0.0);
    } else {
        d.push((x + 3.0 * x0) * (x - x0) / (sum * sum));
        dd.push(8.0 * x0 * x0 / (sum * sum * sum));
    }
    let mut theta = d_bar_x_term(x, x0);
    for (yi, y0i) in y.iter().zip(&base.y) {
        let dy = yi - y0i;
        theta += g2 * dy * dy;
        d.push(2.0 * g2 * dy);
        dd.push(2.0 * g2);
    }
    Ok(ThetaJet { theta, d, dd })
}

fn pow_l(g: f64, l: f64) -> Result<f64> {
    if g >= 0.0 {
        Ok(g.powf(l))
    } else if l.fract() == 0.0 {
        Ok(g.powi(l as i32))
    } else {
        Err(Error::Domain(format!("ω = {g} < 0 raised to the non-integer power {l}")))
    }
}

/// `18 − θ`, with rounding noise at the lateral surface `θ = 18` snapped to zero.
fn gap(theta: f64) -> f64 {
    let q = 18.0 - theta;
    if q < 0.0 && q > -1e-12 * 18.0 {
        0.0
    } else {
        q
    }
}

/// `M(τ₀) = sup{ω^l(·, τ₀) : 1/4 ≤ d̄² ≤ 18}` over [`M_LEVELS`] equispaced levels.
pub fn sup_outer_omega_l(tau0: f64, l: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for k in 0..M_LEVELS {
        let theta = 0.25 + (18.0 - 0.25) * k as f64 / (M_LEVELS - 1) as f64;
        let g = (18.0 - theta) * lambda_kernel(theta, tau0)?;
        best = best.max(pow_l(g, l)?);
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnackBarrierParams {
    pub gamma: f64,
    pub tau0: f64,
    pub m: f64,
    pub l: f64,
    pub m_tau0: f64,
    #[serde(skip)]
    pub base: Point,
}

impl HarnackBarrierParams {
    pub fn new(gamma: f64, tau0: f64, m: f64, l: f64, base: Point) -> Result<Self> {
        if !(gamma >= 1.0 && gamma < 3f64.sqrt()) {
            return Err(Error::Domain(format!("gamma must lie in [1, √3), got {gamma}")));
        }
        if !(tau0 > 0.0 && tau0 < 1.0) || !(m > 1.0) || !(l > 1.0) {
            return Err(Error::Domain(format!("need 0 < τ₀ < 1, m > 1, l > 1 (τ₀ = {tau0}, m = {m}, l = {l})")));
        }
        let m_tau0 = sup_outer_omega_l(tau0, l)?;
        Ok(Self { gamma, tau0, m, l, m_tau0, base })
    }

    fn as_list(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("gamma".into(), self.gamma),
            ("tau0".into(), self.tau0),
            ("m".into(), self.m),
            ("l".into(), self.l),
            ("M_tau0".into(), self.m_tau0),
            ("x0".into(), self.base.x),
        ];
        for (i, y) in self.base.y.iter().enumerate() {
            out.push((format!("y0_{}", i + 2), *y));
        }
        out
    }
}

/// `v` at `p` (time `p.t`).
pub fn harnack_barrier_v(p: &Point, params: &HarnackBarrierParams) -> Result<f64> {
    harnack_barrier_v_rho(p, params, 1.0)
}

/// The rescaled barrier `v_ρ(d̄, t) = v(d̄/ρ, t/ρ²)`.
pub fn harnack_barrier_v_rho(p: &Point, params: &HarnackBarrierParams, rho: f64) -> Result<f64> {
    Ok(decaying_part(p, params, rho)? - params.m_tau0)
}

/// `e^{−mt/ρ²} ω^l` without the offset.
fn decaying_part(p: &Point, params: &HarnackBarrierParams, rho: f64) -> Result<f64> {
    let theta = theta_jet(p.x, &p.y, &params.base, params.gamma)?.theta / (rho * rho);
    let tt = p.t / (rho * rho);
    if tt + params.tau0 <= 0.0 {
        return Err(Error::Domain(format!("t + τ₀ must be positive, got {}", tt + params.tau0)));
    }
    let g = gap(theta) * lambda_kernel(theta, tt + params.tau0)?;
    Ok((-params.m * tt).exp() * pow_l(g, params.l)?)
}

/// Derivatives of `v_ρ` in `(x, y₂, …)` and `t`, plus the normalized
/// inequality bracket `K` with `Lv − v_t = e^{−mt/ρ²} l ω^{l−2} Λ² K`.
#[derive(Clone, Debug, PartialEq)]
pub struct VJet {
    pub v: f64,
    pub v_t: f64,
    pub d: Vec<f64>,
    /// Row-major `n × n`.
    pub dd: Vec<f64>,
    pub bracket: f64,
    /// `Lv − v_t` assembled from the derivatives above.
    pub l_minus_t: f64,
    /// Sum of the magnitudes of the terms in `l_minus_t`.
    pub l_scale: f64,
}

struct Frame<'a> {
    params: &'a HarnackBarrierParams,
    coeffs: &'a CoefficientField,
    rho: f64,
}

impl Frame<'_> {
    fn jet(&self, x: f64, y: &[f64], t: f64, a: &mut [f64], b: &mut [f64]) -> Result<VJet> {
        let p = self.params;
        let n = y.len() + 1;
        let r2 = self.rho * self.rho;
        let th = theta_jet(x, y, &p.base, p.gamma)?;
        let big_t = t / r2 + p.tau0;
        let theta = th.theta / r2;
        let dth: Vec<f64> = th.d.iter().map(|v| v / r2).collect();
        let ddth: Vec<f64> = th.dd.iter().map(|v| v / r2).collect();
        let lam = lambda_kernel(theta, big_t)?;
        let f = gap(theta) / big_t;
        let g = gap(theta) * lam;
        let g_th = -(f + 1.0) * lam;
        let g_thth = (f + 2.0) * lam / big_t;
        let g_t = gap(theta) * lam * (theta / (big_t * big_t) - 1.0 / big_t) / r2;
        let m_eff = p.m / r2;
        let e = (-p.m * t / r2).exp();
        let l = p.l;
        let gl = pow_l(g, l)?;
        let gl1 = pow_l(g, l - 1.0)?;
        let gl2 = pow_l(g, l - 2.0)?;
        let w1 = l * gl1 * g_th;
        let w2 = l * (l - 1.0) * gl2 * g_th * g_th + l * gl1 * g_thth;

        self.coeffs.eval_into(x, y, t, a, b);
        let sx = x.sqrt();
        let tilde = |i: usize, j: usize| -> f64 {
            let w = match (i, j) {
                (0, 0) => x,
                (0, _) | (_, 0) => sx,
                _ => 1.0,
            };
            w * a[i * n + j]
        };

        let mut d = vec![0.0; n];
        let mut dd = vec![0.0; n * n];
        for i in 0..n {
            d[i] = e * w1 * dth[i];
            for j in 0..n {
                let diag = if i == j { ddth[i] } else { 0.0 };
                dd[i * n + j] = e * (w2 * dth[i] * dth[j] + w1 * diag);
            }
        }
        let v_t = e * (-m_eff * gl + l * gl1 * g_t);

        let mut a_dd = 0.0;
        let mut a_grad = 0.0;
        let mut b_grad = 0.0;
        let mut l_minus_t = -v_t;
        let mut l_scale = v_t.abs();
        for i in 0..n {
            b_grad += b[i] * dth[i];
            a_dd += tilde(i, i) * ddth[i];
            l_minus_t += b[i] * d[i];
            l_scale += (b[i] * d[i]).abs();
            for j in 0..n {
                a_grad += tilde(i, j) * dth[i] * dth[j];
                l_minus_t += tilde(i, j) * dd[i * n + j];
                l_scale += (tilde(i, j) * dd[i * n + j]).abs();
            }
        }
        let q = gap(theta);
        let j = q * (q * (theta / (big_t * big_t) - 1.0 / big_t) / r2 + (f + 1.0) * a_dd + (f + 1.0) * b_grad
            - (f + 2.0) / big_t * a_grad)
            - (l - 1.0) * (f + 1.0) * (f + 1.0) * a_grad
            - m_eff / l * q * q;
        Ok(VJet { v: e * gl - p.m_tau0, v_t, d, dd, bracket: -j, l_minus_t, l_scale })
    }
}

/// Public form of the jet for tests and diagnostics.
impl HarnackBarrierParams {
    pub fn jet(&self, coeffs: &CoefficientField, rho: f64, p: &Point) -> Result<VJet> {
        let n = coeffs.n();
        let (mut a, mut b) = (vec![0.0; n * n], vec![0.0; n]);
        Frame { params: self, coeffs, rho }.jet(p.x, &p.y, p.t, &mut a, &mut b)
    }
}

/// Sample sets `K`, `Q¹`, `Q²` at scale `ρ`, `nodes` per axis.
#[derive(Clone, Debug)]
pub struct HarnackRegions {
    pub rho: f64,
    pub nodes: usize,
    pub q1: ParabolicCube,
    pub q2: ParabolicCube,
    /// `(x, y, t)` with `d̄² ≤ 18ρ²`, `0 ≤ t ≤ 18ρ²`.
    pub k_points: Vec<(f64, Vec<f64>, f64)>,
    pub q2_points: Vec<(f64, Vec<f64>, f64)>,
    /// Lateral surface `d̄² = 18ρ²`.
    pub lateral: Vec<(f64, Vec<f64>, f64)>,
}

fn tensor(ranges: &[(f64, f64)], nodes: usize, mut f: impl FnMut(&[f64])) {
    let k = ranges.len();
    let mut idx = vec![0usize; k];
    let mut c = vec![0.0; k];
    loop {
        for i in 0..k {
            let (lo, hi) = ranges[i];
            c[i] = lo + (hi - lo) * idx[i] as f64 / (nodes - 1) as f64;
        }
        f(&c);
        let mut d = 0;
        loop {
            if d == k {
                return;
            }
            idx[d] += 1;
            if idx[d] < nodes {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

impl HarnackRegions {
    pub fn new(params: &HarnackBarrierParams, rho: f64, nodes: usize) -> Result<Self> {
        if nodes < 3 || !(rho > 0.0) {
            return Err(Error::Grid(format!("need ρ > 0 and at least 3 nodes (ρ = {rho}, nodes = {nodes})")));
        }
        let base = &params.base;
        let k = base.y.len();
        let s0 = base.x.sqrt();
        let r = 3.0 * 2f64.sqrt() * rho;
        let r2 = rho * rho;
        let q1 = ParabolicCube::q_rho(s0, &base.y, r2 / 4.0, rho / 2.0)?;
        let q2 = ParabolicCube::q_rho(s0, &base.y, 10.0 * r2 / 4.0, 1.5 * rho)?;

        let mut ranges = vec![((s0 - r).max(0.0), s0 + r)];
        for y0 in &base.y {
            ranges.push((y0 - r / params.gamma, y0 + r / params.gamma));
        }
        ranges.push((0.0, 18.0 * r2));
        let mut k_points = Vec::new();
        let mut fail = None;
        tensor(&ranges, nodes, |c| {
            let (x, y, t) = (c[0] * c[0], &c[1..=k], c[k + 1]);
            match theta_jet(x, y, base, params.gamma) {
                Ok(th) if th.theta <= 18.0 * r2 => k_points.push((x, y.to_vec(), t)),
                Ok(_) => {}
                Err(e) => fail = Some(e),
            }
        });
        if let Some(e) = fail {
            return Err(e);
        }

        let mut q2_ranges = vec![q2.s_range()];
        for i in 0..k {
            q2_ranges.push(q2.y_range(i));
        }
        q2_ranges.push(q2.t_range());
        let mut q2_points = Vec::new();
        tensor(&q2_ranges, nodes, |c| {
            if q2.contains_s(c) {
                q2_points.push((c[0] * c[0], c[1..=k].to_vec(), c[k + 1]));
            }
        });

        let g2 = params.gamma * params.gamma;
        let mut lateral = Vec::new();
        let mut y_ranges: Vec<(f64, f64)> = ranges[1..=k].to_vec();
        y_ranges.push((0.0, 18.0 * r2));
        let x0 = base.x;
        tensor(&y_ranges, nodes, |c| {
            let y = &c[..k];
            let dy2: f64 = y.iter().zip(&base.y).map(|(a, b)| (a - b) * (a - b)).sum();
            let rem = 18.0 * r2 - g2 * dy2;
            if rem < 0.0 {
                return;
            }
            let disc = (rem * rem / 4.0 + 2.0 * rem * x0).sqrt();
            for x in [x0 + rem / 2.0 + disc, x0 + rem / 2.0 - disc] {
                if x >= 0.0 && (d_bar_x_term(x, x0) + g2 * dy2 - 18.0 * r2).abs() <= 1e-9 * r2 {
                    lateral.push((x, y.to_vec(), c[k]));
                }
            }
        });
        Ok(Self { rho, nodes, q1, q2, k_points, q2_points, lateral })
    }

    fn in_q1(&self, x: f64, y: &[f64], t: f64) -> bool {
        let mut c = Vec::with_capacity(y.len() + 2);
        c.push(x.sqrt());
        c.extend_from_slice(y);
        c.push(t);
        self.q1.contains_s(&c)
    }
}

fn coords(x: f64, y: &[f64], t: f64) -> Vec<f64> {
    let mut c = vec![x];
    c.extend_from_slice(y);
    c.push(t);
    c
}

/// Minimum of `ρ²K` over `K ∖ Q¹` (interior time levels, `d̄² < 18ρ²`), stopping
/// at the first negative value when `early_exit` is set.
fn ineq_margin(frame: &Frame, regions: &HarnackRegions, early_exit: bool) -> Result<MinTracker> {
    let n = frame.coeffs.n();
    let (mut a, mut b) = (vec![0.0; n * n], vec![0.0; n]);
    let r2 = frame.rho * frame.rho;
    let mut worst = MinTracker::new();
    for (x, y, t) in &regions.k_points {
        if *t <= 0.0 || regions.in_q1(*x, y, *t) {
            continue;
        }
        let jet = frame.jet(*x, y, *t, &mut a, &mut b)?;
        worst.push(jet.bracket * r2, || coords(*x, y, *t));
        if early_exit && worst.value < 0.0 {
            break;
        }
    }
    Ok(worst)
}

fn inf_q2(params: &HarnackBarrierParams, regions: &HarnackRegions) -> Result<f64> {
    let mut inf = f64::INFINITY;
    for (x, y, t) in &regions.q2_points {
        inf = inf.min(harnack_barrier_v_rho(&Point { x: *x, y: y.clone(), t: *t }, params, regions.rho)?);
    }
    if inf.is_infinite() {
        return Err(Error::EmptyRegion("no samples in Q²".into()));
    }
    Ok(inf)
}

/// Checks, with `φ = v_ρ / inf_{Q²} v_ρ`: `Lφ − φ_t ≥ 0` in `K ∖ Q¹` (normalized bracket),
/// `φ ≥ 1` on `Q²`, `φ ≤ 0` on `∂_pK ∖ Q¹`, and reports the metric `C^{1,1}` size
/// `max(|φ_t|, |xφ_xx|, |√x φ_xy|, |φ_yy|, |φ_x|)` raw and times `ρ²`. The closed-form
/// `Lv − v_t` is cross-checked against finite differences of `v` at up to 64 points.
pub fn certify_harnack_barrier(
    params: &HarnackBarrierParams,
    coeffs: &CoefficientField,
    rho: f64,
    nodes: usize,
) -> Result<Certificate> {
    if coeffs.n() != params.base.n() {
        return Err(Error::Domain("coefficients and base point differ in dimension".into()));
    }
    let regions = HarnackRegions::new(params, rho, nodes)?;
    let frame = Frame { params, coeffs, rho };
    let inf = inf_q2(params, &regions)?;
    if !(inf > 0.0) {
        return Err(Error::Precondition(format!(
            "inf over Q² of v is {inf:e} ≤ 0; the barrier parameters cannot be normalized"
        )));
    }
    let ineq = ineq_margin(&frame, &regions, false)?;

    let mut q2_margin = MinTracker::new();
    for (x, y, t) in &regions.q2_points {
        let v = harnack_barrier_v_rho(&Point { x: *x, y: y.clone(), t: *t }, params, rho)?;
        q2_margin.push(v / inf - 1.0, || coords(*x, y, *t));
    }

    let mut boundary = MinTracker::new();
    for (x, y, t) in regions.k_points.iter().filter(|p| p.2 == 0.0).chain(&regions.lateral) {
        if regions.in_q1(*x, y, *t) {
            continue;
        }
        let v = harnack_barrier_v_rho(&Point { x: *x, y: y.clone(), t: *t }, params, rho)?;
        boundary.push(-v / inf, || coords(*x, y, *t));
    }

    let n = coeffs.n();
    let (mut a, mut b) = (vec![0.0; n * n], vec![0.0; n]);
    let r2 = rho * rho;
    let mut c11: f64 = 0.0;
    let mut fd_dev: f64 = 0.0;
    let mut fd_count = 0;
    let stride = (regions.k_points.len() / 64).max(1);
    for (idx, (x, y, t)) in regions.k_points.iter().enumerate() {
        let th = theta_jet(*x, y, &params.base, params.gamma)?.theta;
        if th >= 18.0 * r2 {
            continue;
        }
        let jet = frame.jet(*x, y, *t, &mut a, &mut b)?;
        let sx = x.sqrt();
        let mut m = jet.v_t.abs().max((x * jet.dd[0]).abs()).max(jet.d[0].abs());
        for i in 1..n {
            m = m.max((sx * jet.dd[i]).abs());
            for j in 1..n {
                m = m.max(jet.dd[i * n + j].abs());
            }
        }
        c11 = c11.max(m / inf);

        let h2 = 1e-3 * r2;
        if idx % stride == 0 && *t >= 4.0 * h2 && *x >= 4.0 * h2 && th < 16.0 * r2 && jet.l_scale > 0.0 {
            let fd = fd_l_minus_t(params, coeffs, rho, *x, y, *t, &mut a, &mut b)?;
            fd_dev = fd_dev.max((fd - jet.l_minus_t).abs() / jet.l_scale);
            fd_count += 1;
        }
    }

    let margins = vec![
        ineq.into_margin("ineq2:phi-rho", |v| v >= 0.0),
        q2_margin.into_margin("phi>=1:Q2", |v| v >= -1e-12),
        boundary.into_margin("phi<=0:dpK", |v| v >= 0.0),
        Margin { name: "c11".into(), value: c11, ok: c11.is_finite(), worst: None },
        Margin { name: "c11*rho^2".into(), value: c11 * r2, ok: c11.is_finite(), worst: None },
        Margin { name: "fd_rel_dev".into(), value: fd_dev, ok: fd_dev <= 1e-5 && fd_count > 0, worst: None },
    ];
    let mut list = params.as_list();
    list.push(("rho".into(), rho));
    list.push(("inf_Q2_v".into(), inf));
    let grid = format!(
        "nodes={nodes} K_samples={} Q2_samples={} lateral_samples={}",
        regions.k_points.len(),
        regions.q2_points.len(),
        regions.lateral.len()
    );
    let total = regions.k_points.len() + regions.q2_points.len() + regions.lateral.len();
    Ok(Certificate::new(&format!("harnack-barrier[{}]", coeffs.label()), list, grid, margins, total))
}

/// `Lv − v_t` from central differences (Richardson) of `v_ρ + M(τ₀)`, coefficients at `(x, y, t)`.
/// Steps are `10⁻³ρ√T` in `y` and `10⁻³ρ²T` in `x` and `t`, with `T = t/ρ² + τ₀` capped at 1.
#[allow(clippy::too_many_arguments)]
fn fd_l_minus_t(
    params: &HarnackBarrierParams,
    coeffs: &CoefficientField,
    rho: f64,
    x: f64,
    y: &[f64],
    t: f64,
    a: &mut [f64],
    b: &mut [f64],
) -> Result<f64> {
    let n = y.len() + 1;
    let v = |x: f64, y: &[f64], t: f64| {
        decaying_part(&Point { x, y: y.to_vec(), t }, params, rho).unwrap_or(f64::NAN)
    };
    coeffs.eval_into(x, y, t, a, b);
    let big_t = t / (rho * rho) + params.tau0;
    let hx = 1e-3 * rho * rho * big_t.min(1.0);
    let h = 1e-3 * rho * big_t.min(1.0).sqrt();
    let shifted = |i: usize, z: f64| {
        let mut yy = y.to_vec();
        yy[i] = z;
        yy
    };
    let mut out = -richardson_d1(&|z| v(x, y, z), t, hx.min(t / 4.0));
    out += x * a[0] * richardson_d2(&|z| v(z, y, t), x, hx) + b[0] * richardson_d1(&|z| v(z, y, t), x, hx);
    for i in 1..n {
        let yi = y[i - 1];
        out += b[i] * richardson_d1(&|z| v(x, &shifted(i - 1, z), t), yi, h);
        for j in 1..n {
            if i == j {
                out += a[i * n + i] * richardson_d2(&|z| v(x, &shifted(i - 1, z), t), yi, h);
            } else {
                let mixed = |hh: f64| {
                    let f = |di: f64, dj: f64| {
                        let mut yy = y.to_vec();
                        yy[i - 1] += di;
                        yy[j - 1] += dj;
                        v(x, &yy, t)
                    };
                    (f(hh, hh) - f(hh, -hh) - f(-hh, hh) + f(-hh, -hh)) / (4.0 * hh * hh)
                };
                out += a[i * n + j] * (4.0 * mixed(h / 2.0) - mixed(h)) / 3.0;
            }
        }
        let mixed = |hh: f64, kk: f64| {
            let f = |dx: f64, dy: f64| v(x + dx, &shifted(i - 1, yi + dy), t);
            (f(hh, kk) - f(hh, -kk) - f(-hh, kk) + f(-hh, -kk)) / (4.0 * hh * kk)
        };
        let v_xy = (4.0 * mixed(hx / 2.0, h / 2.0) - mixed(hx, h)) / 3.0;
        out += 2.0 * x.sqrt() * a[i] * v_xy;
    }
    Ok(out)
}

/// Searches `l ∈ {2, …, 8}`, `τ₀ = 0.1·2^{−k}` and `m = l·2^j` for the first triple whose
/// bracket is nonnegative on `K ∖ Q¹` and whose `inf_{Q²} v` is positive, at `ρ = 1`.
pub fn find_harnack_params(
    coeffs: &CoefficientField,
    gamma: f64,
    base: Point,
    nodes: usize,
) -> Result<HarnackBarrierParams> {
    let mut iterations = 0;
    let mut last = String::from("no candidate evaluated");
    for l in 2..=8 {
        let l = l as f64;
        for k in 0..12 {
            let tau0 = 0.1 / 2f64.powi(k);
            let probe = HarnackBarrierParams::new(gamma, tau0, 2.0, l, base.clone())?;
            let regions = HarnackRegions::new(&probe, 1.0, nodes)?;
            for j in 0..12 {
                iterations += 1;
                let params = HarnackBarrierParams { m: l * 2f64.powi(j), ..probe.clone() };
                let frame = Frame { params: &params, coeffs, rho: 1.0 };
                let worst = ineq_margin(&frame, &regions, true)?;
                if worst.value < 0.0 {
                    last = format!("l = {l}, τ₀ = {tau0}, m = {}: bracket {:e} at {:?}", params.m, worst.value, worst.at);
                    continue;
                }
                if inf_q2(&params, &regions)? > 0.0 {
                    return Ok(params);
                }
                last = format!("l = {l}, τ₀ = {tau0}, m = {}: inf over Q² is not positive", params.m);
                break;
            }
        }
    }
    Err(Error::SearchExhausted { iterations, detail: last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{EllipticityParams, TransportVelocity};

    fn model(n: usize) -> CoefficientField {
        CoefficientField::model(n, TransportVelocity::new(1.0).unwrap(), EllipticityParams::new(0.5, 0.5).unwrap())
            .unwrap()
    }

    fn origin(n: usize) -> Point {
        Point::new(0.0, vec![0.0; n - 1], 0.0).unwrap()
    }

    #[test]
    fn kernel_values() {
        assert!((lambda_kernel(0.0, 1.0).unwrap() - 0.079577471545947).abs() < 1e-12);
        assert!((lambda_kernel(1.0, 1.0).unwrap() - (-1f64).exp() / (4.0 * PI)).abs() < 1e-15);
        assert!(lambda_kernel(1e4, 1.0).unwrap() < 1e-300);
        assert!(lambda_kernel(1.0, 0.0).is_err());
        assert!(lambda_kernel(1.0, -1.0).is_err());
    }

    #[test]
    fn omega_values_and_sign() {
        let base = Point::new(0.3, vec![0.1], 0.0).unwrap();
        let at = |x: f64, y: f64, t: f64| omega(&Point::new(x, vec![y], t).unwrap(), &base, 1.0).unwrap();
        assert!((at(0.3, 0.1, 2.0) - 18.0 / (8.0 * PI)).abs() < 1e-14);
        // θ = 18 exactly on the tangential line through the base.
        assert!(at(0.3, 0.1 + 18f64.sqrt(), 1.0).abs() < 1e-15);
        assert!(at(0.3, 5.0, 1.0) < 0.0);
    }

    #[test]
    fn theta_derivatives_match_fd() {
        let base = Point::new(0.4, vec![0.2], 0.0).unwrap();
        let th = |x: f64, y: f64| theta_jet(x, &[y], &base, 1.3).unwrap().theta;
        for (x, y) in [(0.1, 0.0), (1.5, -0.4), (0.4, 0.7)] {
            let j = theta_jet(x, &[y], &base, 1.3).unwrap();
            assert!((richardson_d1(&|z| th(z, y), x, 1e-3) - j.d[0]).abs() < 1e-9);
            assert!((richardson_d2(&|z| th(z, y), x, 1e-3) - j.dd[0]).abs() < 1e-7);
            assert!((richardson_d1(&|z| th(x, z), y, 1e-3) - j.d[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn v_limits() {
        let base = origin(2);
        let p = HarnackBarrierParams::new(1.0, 0.01, 20.0, 2.0, base).unwrap();
        // θ = 1/4 is the maximizing level since ω decreases in θ.
        let g = (18.0 - 0.25) * lambda_kernel(0.25, 0.01).unwrap();
        assert!((p.m_tau0 - g * g).abs() <= 1e-12 * g * g);
        let at = |x: f64, y: f64, t: f64| harnack_barrier_v(&Point::new(x, vec![y], t).unwrap(), &p).unwrap();
        for (x, y) in [(0.25, 0.0), (0.0, 0.5), (2.0, 1.0), (0.1, 0.6)] {
            assert!(at(x, y, 0.0) <= 0.0);
        }
        assert!((at(0.3, 0.2, 60.0) + p.m_tau0).abs() <= 1e-12 * p.m_tau0);
        assert!(at(0.0, 0.0, 0.0) > 0.0);
    }

    #[test]
    fn non_integer_power_of_negative_base_is_refused() {
        let p = HarnackBarrierParams::new(1.0, 0.01, 20.0, 2.5, origin(2)).unwrap();
        assert!(harnack_barrier_v(&Point::new(30.0, vec![0.0], 0.1).unwrap(), &p).is_err());
        let q = HarnackBarrierParams { l: 3.0, ..p };
        assert!(harnack_barrier_v(&Point::new(30.0, vec![0.0], 0.1).unwrap(), &q).is_ok());
    }

    #[test]
    fn scaling_is_an_evaluation_identity() {
        let p = HarnackBarrierParams::new(1.2, 0.02, 30.0, 3.0, origin(3)).unwrap();
        let rho = 0.37;
        for (x, y, t) in [(0.2, [0.1, -0.3], 0.4), (1.7, [0.0, 0.9], 2.0)] {
            let scaled = Point::new(x * rho * rho, vec![y[0] * rho, y[1] * rho], t * rho * rho).unwrap();
            let a = harnack_barrier_v_rho(&scaled, &p, rho).unwrap();
            let b = harnack_barrier_v(&Point::new(x, y.to_vec(), t).unwrap(), &p).unwrap();
            assert!((a - b).abs() <= 1e-13 * b.abs().max(p.m_tau0));
        }
    }

    #[test]
    fn jet_is_consistent_with_bracket_and_fd() {
        let coeffs = CoefficientField::random(3, 5, EllipticityParams::new(0.4, 0.3).unwrap()).unwrap();
        let p = HarnackBarrierParams::new(1.0, 0.05, 8.0, 3.0, Point::new(0.2, vec![0.1, -0.1], 0.0).unwrap()).unwrap();
        let (mut a, mut b) = (vec![0.0; 9], vec![0.0; 3]);
        for (x, y, t) in [(0.5, vec![0.3, 0.2], 0.7), (1.2, vec![-0.4, 0.6], 1.5)] {
            let jet = p.jet(&coeffs, 1.0, &Point::new(x, y.clone(), t).unwrap()).unwrap();
            let th = theta_jet(x, &y, &p.base, 1.0).unwrap().theta;
            let tt = t + p.tau0;
            let lam = lambda_kernel(th, tt).unwrap();
            let g = (18.0 - th) * lam;
            let factor = (-p.m * t).exp() * p.l * g.powf(p.l - 2.0) * lam * lam;
            assert!((factor * jet.bracket - jet.l_minus_t).abs() <= 1e-10 * jet.l_scale);
            let fd = fd_l_minus_t(&p, &coeffs, 1.0, x, &y, t, &mut a, &mut b).unwrap();
            assert!((fd - jet.l_minus_t).abs() <= 1e-6 * jet.l_scale, "{fd} vs {}", jet.l_minus_t);
        }
    }

    #[test]
    fn search_and_certify_model() {
        let coeffs = model(2);
        let p = find_harnack_params(&coeffs, 1.0, origin(2), 33).unwrap();
        let c1 = certify_harnack_barrier(&p, &coeffs, 1.0, 33).unwrap();
        assert!(c1.pass, "{}", c1.to_text());
        let c2 = certify_harnack_barrier(&p, &coeffs, 0.5, 33).unwrap();
        assert!(c2.pass, "{}", c2.to_text());
        let m1 = c1.margin("ineq2:phi-rho").unwrap().value;
        let m2 = c2.margin("ineq2:phi-rho").unwrap().value;
        assert!((m1 - m2).abs() <= 1e-9 * m1.abs().max(1.0));
        let ratio = c2.margin("c11").unwrap().value / c1.margin("c11").unwrap().value;
        assert!((ratio - 4.0).abs() < 1e-6, "ratio {ratio}");
    }

    #[test]
    fn tiny_m_fails_the_inequality() {
        let coeffs = model(2);
        let p = find_harnack_params(&coeffs, 1.0, origin(2), 17).unwrap();
        let weak = HarnackBarrierParams { m: 1.01, ..p };
        let c = certify_harnack_barrier(&weak, &coeffs, 1.0, 17).unwrap();
        assert!(!c.pass);
        assert!(c.margin("ineq2:phi-rho").unwrap().value < 0.0);
    }
}
