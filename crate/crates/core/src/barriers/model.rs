//! Rational barriers for the model operator `L₀`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{richardson_d1, richardson_d2, Certificate, Margin, MinTracker};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::operators::TransportVelocity;

/// Iteration cap shared by all stages of [`find_barrier_params`].
pub const SEARCH_CAP: usize = 60;

/// `(v, b, c, C)` for the inequality `φ_t > xφ_xx + Σφ_yy + vφ_x − Cxφ² + cφ^{3/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelBarrierParams {
    pub n: usize,
    pub v: f64,
    pub b: f64,
    pub c: f64,
    pub big_c: f64,
}

impl ModelBarrierParams {
    fn as_list(&self) -> Vec<(String, f64)> {
        vec![
            ("n".into(), self.n as f64),
            ("v".into(), self.v),
            ("b".into(), self.b),
            ("c".into(), self.c),
            ("C".into(), self.big_c),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum BarrierForm {
    /// `1/((x + bS)S)` with `S = Σy_i²`.
    Single,
    /// Sum of the single form at `1 − y` and `1 + y`.
    Translated,
    /// `1/(t(x + at)) + (1 + t)/(1 − x²)²` plus the translated form.
    Wall { a: f64 },
}

/// Value and first/second derivatives of a barrier (mixed terms are not needed).
#[derive(Clone, Debug, PartialEq)]
pub struct PhiJet {
    pub phi: f64,
    pub t: f64,
    pub x: f64,
    pub xx: f64,
    pub y: Vec<f64>,
    pub yy: Vec<f64>,
}

impl PhiJet {
    fn zero(k: usize) -> Self {
        Self { phi: 0.0, t: 0.0, x: 0.0, xx: 0.0, y: vec![0.0; k], yy: vec![0.0; k] }
    }

    fn add(&mut self, o: &PhiJet) {
        self.phi += o.phi;
        self.t += o.t;
        self.x += o.x;
        self.xx += o.xx;
        for i in 0..self.y.len() {
            self.y[i] += o.y[i];
            self.yy[i] += o.yy[i];
        }
    }
}

/// Single term at shifted tangential coordinates `w = σ(y − shift)`.
fn single_jet(b: f64, x: f64, y: &[f64], shift: f64, sigma: f64) -> Result<PhiJet> {
    let w: Vec<f64> = y.iter().map(|&yi| sigma * (yi - shift)).collect();
    let s: f64 = w.iter().map(|v| v * v).sum();
    if s == 0.0 {
        return Err(Error::Domain(format!("model barrier evaluated at its pole (x = {x}, y = {y:?})")));
    }
    let p = x + b * s;
    if !(p > 0.0) {
        return Err(Error::Domain(format!("model barrier denominator x + bS = {p} is not positive")));
    }
    let (p2, p3, s2, s3) = (p * p, p * p * p, s * s, s * s * s);
    let mut jet = PhiJet::zero(y.len());
    jet.phi = 1.0 / (p * s);
    jet.x = -1.0 / (p2 * s);
    jet.xx = 2.0 / (p3 * s);
    for (i, &wi) in w.iter().enumerate() {
        let w2 = wi * wi;
        jet.y[i] = sigma * (-2.0 * b * wi / (p2 * s) - 2.0 * wi / (p * s2));
        jet.yy[i] = 8.0 * b * b * w2 / (p3 * s) + 8.0 * b * w2 / (p2 * s2) - 2.0 * b / (p2 * s) - 2.0 / (p * s2)
            + 8.0 * w2 / (p * s3);
    }
    Ok(jet)
}

/// Closed-form jet of a barrier form at `point` (time is `point.t`).
pub fn model_barrier_jet(form: BarrierForm, b: f64, point: &Point) -> Result<PhiJet> {
    let (x, y, t) = (point.x, point.y.as_slice(), point.t);
    match form {
        BarrierForm::Single => single_jet(b, x, y, 0.0, 1.0),
        BarrierForm::Translated => {
            let mut jet = single_jet(b, x, y, 1.0, -1.0)?;
            jet.add(&single_jet(b, x, y, -1.0, 1.0)?);
            Ok(jet)
        }
        BarrierForm::Wall { a } => {
            if !(t > 0.0) || !(x + a * t > 0.0) {
                return Err(Error::Domain(format!("wall barrier needs t > 0 and x + at > 0 (x = {x}, t = {t})")));
            }
            if !(x < 1.0) {
                return Err(Error::Domain(format!("wall barrier needs x < 1, got {x}")));
            }
            let mut jet = model_barrier_jet(BarrierForm::Translated, b, point)?;
            let q = t * x + a * t * t;
            let r = 1.0 - x * x;
            let mut w = PhiJet::zero(y.len());
            w.phi = 1.0 / q + (1.0 + t) / (r * r);
            w.t = -(x + 2.0 * a * t) / (q * q) + 1.0 / (r * r);
            w.x = -t / (q * q) + (1.0 + t) * 4.0 * x / (r * r * r);
            w.xx = 2.0 * t * t / (q * q * q) + (1.0 + t) * (4.0 / (r * r * r) + 24.0 * x * x / (r * r * r * r));
            jet.add(&w);
            Ok(jet)
        }
    }
}

/// `φ = 1/((x + bΣy²)Σy²)`.
pub fn model_barrier_phi(b: f64, point: &Point) -> Result<f64> {
    Ok(model_barrier_jet(BarrierForm::Single, b, point)?.phi)
}

/// Residual `RHS − LHS` of the polynomial form of the barrier inequality, in `(x, S)`.
pub fn barrier_cond_residual(p: &ModelBarrierParams, x: f64, s: f64) -> f64 {
    let n = p.n as f64;
    let b = p.b;
    let alpha = 10.0 - 2.0 * n + p.c / b.sqrt();
    let beta = (10.0 - 2.0 * n) * b;
    let cx2 = p.big_c - alpha;
    let cxs = p.v + p.big_c * b - 2.0 - 2.0 * alpha * b - beta;
    let cs2 = b * (p.v - alpha * b - beta - 8.0 * b);
    cx2 * x * x + cxs * x * s + cs2 * s * s
}

/// Tensor sampling region: `x` on `[x_lo, x_hi]` including endpoints, each `y_i`
/// at cell midpoints of `[y_lo, y_hi]`, at the fixed time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierRegion {
    pub n: usize,
    pub nodes: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub t: f64,
}

impl BarrierRegion {
    /// `{0 ≤ x ≤ 4, 0 < y_i < 2}`.
    pub fn verification(n: usize, nodes: usize) -> Self {
        Self { n, nodes, x_lo: 0.0, x_hi: 4.0, y_lo: 0.0, y_hi: 2.0, t: 0.5 }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.nodes < 2 || !(self.x_hi > self.x_lo) || !(self.y_hi > self.y_lo) || self.x_lo < 0.0 {
            return Err(Error::Grid(format!("bad barrier region {self:?}")));
        }
        Ok(())
    }

    pub fn x_node(&self, k: usize) -> f64 {
        self.x_lo + (self.x_hi - self.x_lo) * k as f64 / (self.nodes - 1) as f64
    }

    pub fn y_node(&self, k: usize) -> f64 {
        self.y_lo + (self.y_hi - self.y_lo) * (k as f64 + 0.5) / self.nodes as f64
    }

    /// Visits every tangential node tuple.
    fn for_each_y(&self, mut f: impl FnMut(&[f64])) {
        let k = self.n - 1;
        let mut idx = vec![0usize; k];
        let mut y = vec![0.0; k];
        loop {
            for i in 0..k {
                y[i] = self.y_node(idx[i]);
            }
            f(&y);
            let mut d = 0;
            loop {
                if d == k {
                    return;
                }
                idx[d] += 1;
                if idx[d] < self.nodes {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }

    fn describe(&self) -> String {
        format!(
            "n={} nodes={} x=[{}, {}] y=({}, {}) t={}",
            self.n, self.nodes, self.x_lo, self.x_hi, self.y_lo, self.y_hi, self.t
        )
    }
}

fn min_cond_residual(p: &ModelBarrierParams, nodes: usize) -> MinTracker {
    let region = BarrierRegion::verification(p.n, nodes);
    let mut sums = Vec::new();
    region.for_each_y(|y| sums.push((y.iter().map(|v| v * v).sum::<f64>(), y.to_vec())));
    let mut worst = MinTracker::new();
    for k in 0..nodes {
        let x = region.x_node(k);
        for (s, y) in &sums {
            let r = barrier_cond_residual(p, x, *s);
            worst.push(r, || {
                let mut c = vec![x];
                c.extend_from_slice(y);
                c
            });
        }
    }
    worst
}

/// Certifies the polynomial inequality on the verification region at `nodes` per axis.
pub fn certify_barrier_cond(p: &ModelBarrierParams, nodes: usize) -> Certificate {
    let worst = min_cond_residual(p, nodes);
    let margin = worst.into_margin("cond", |v| v > 0.0);
    let region = BarrierRegion::verification(p.n, nodes);
    Certificate::new("model-barrier-cond", p.as_list(), region.describe(), vec![margin], nodes.pow(p.n as u32))
}

/// The residual is a quadratic form in `(x, S)`; true when it is positive on the open quadrant.
fn quadrant_positive(p: &ModelBarrierParams) -> bool {
    let r = |x: f64, s: f64| barrier_cond_residual(p, x, s);
    let cx2 = r(1.0, 0.0);
    let cs2 = r(0.0, 1.0);
    let cxs = r(1.0, 1.0) - cx2 - cs2;
    cx2 > 0.0 && cs2 > 0.0 && cxs > -2.0 * (cx2 * cs2).sqrt()
}

/// Backtracking search for `(b, c, C)`: `b` halves from `v/16`, then `c` halves,
/// then `C` doubles until the 64-per-axis verification grid passes and the
/// quadratic form is positive on the whole quadrant.
pub fn find_barrier_params(v: TransportVelocity, n: usize) -> Result<ModelBarrierParams> {
    if n < 2 {
        return Err(Error::Domain("the model barrier needs at least one tangential variable".into()));
    }
    let v = v.get();
    let nf = n as f64;
    let mut iterations = 0;
    let mut b = v / 16.0;
    while v - b * (28.0 - 4.0 * nf) <= 0.0 {
        b /= 2.0;
        iterations += 1;
        if iterations >= SEARCH_CAP {
            return Err(Error::SearchExhausted { iterations, detail: format!("b = {b} still too large") });
        }
    }
    let slack = v - b * (28.0 - 4.0 * nf);
    let mut c = 1.0;
    while c * b.sqrt() >= 0.5 * slack {
        c /= 2.0;
        iterations += 1;
        if iterations >= SEARCH_CAP {
            return Err(Error::SearchExhausted { iterations, detail: format!("c = {c} still too large") });
        }
    }
    let mut params = ModelBarrierParams { n, v, b, c, big_c: 1.0 };
    loop {
        let worst = min_cond_residual(&params, 64);
        if worst.value > 0.0 && quadrant_positive(&params) {
            return Ok(params);
        }
        iterations += 1;
        if iterations >= SEARCH_CAP {
            return Err(Error::SearchExhausted {
                iterations,
                detail: format!("residual {:e} at node {:?} with {params:?}", worst.value, worst.at),
            });
        }
        params.big_c *= 2.0;
    }
}

fn inequality_terms(jet: &PhiJet, x: f64, p: &ModelBarrierParams) -> (f64, f64) {
    let sum_yy: f64 = jet.yy.iter().sum();
    let parts = [
        x * jet.xx,
        sum_yy,
        p.v * jet.x,
        -p.big_c * x * jet.phi * jet.phi,
        p.c * jet.phi.powf(1.5),
    ];
    let rhs: f64 = parts.iter().sum();
    let scale = jet.t.abs() + parts.iter().map(|v| v.abs()).sum::<f64>();
    (jet.t - rhs, scale)
}

/// Samples `φ_t − (xφ_xx + Σφ_yy + vφ_x − Cxφ² + cφ^{3/2})` over the region and
/// cross-checks the closed-form derivatives against finite differences at 10³
/// seeded points with every `Σ(y ∓ shift)² ≥ 0.1`.
pub fn certify_barrier_inequality(form: BarrierForm, p: &ModelBarrierParams, region: &BarrierRegion) -> Result<Certificate> {
    region.validate()?;
    if region.n != p.n {
        return Err(Error::Domain(format!("region dimension {} differs from params {}", region.n, p.n)));
    }
    let mut raw = MinTracker::new();
    let mut rel = MinTracker::new();
    let mut count = 0;
    let mut failure = None;
    region.for_each_y(|y| {
        if failure.is_some() {
            return;
        }
        for k in 0..region.nodes {
            let x = region.x_node(k);
            let point = Point { x, y: y.to_vec(), t: region.t };
            let jet = match model_barrier_jet(form, p.b, &point) {
                Ok(j) => j,
                Err(e) => {
                    failure = Some(e);
                    return;
                }
            };
            let (m, scale) = inequality_terms(&jet, x, p);
            let at = || {
                let mut c = vec![x];
                c.extend_from_slice(y);
                c
            };
            raw.push(m, at);
            rel.push(m / scale, at);
            count += 1;
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let fd = fd_crosscheck(form, p.b, region, 1000, 0)?;
    let mut params = p.as_list();
    if let BarrierForm::Wall { a } = form {
        params.push(("a".into(), a));
    }
    let margins = vec![
        raw.into_margin("ineq:barrier", |v| v > 0.0),
        rel.into_margin("ineq:barrier:relative", |v| v > 0.0),
        Margin { name: "fd_max_rel_dev".into(), value: fd, ok: fd <= 1e-6, worst: None },
    ];
    Ok(Certificate::new(&format!("model-barrier-{form:?}"), params, region.describe(), margins, count))
}

fn pole_distance(form: BarrierForm, y: &[f64]) -> f64 {
    let ss = |shift: f64| y.iter().map(|v| (v - shift) * (v - shift)).sum::<f64>();
    match form {
        BarrierForm::Single => ss(0.0),
        _ => ss(1.0).min(ss(-1.0)),
    }
}

/// Largest deviation between closed-form and Richardson-extrapolated central differences,
/// relative to `max(|exact|, φ)`.
fn fd_crosscheck(form: BarrierForm, b: f64, region: &BarrierRegion, count: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = region.n - 1;
    let h = 1e-3;
    let x_lo = region.x_lo.max(1e-3);
    let x_hi = region.x_hi - 4.0 * h;
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut tries = 0;
    while done < count {
        tries += 1;
        if tries > 100 * count {
            return Err(Error::EmptyRegion("no pole-free sample points for the derivative cross-check".into()));
        }
        let x = rng.gen_range(x_lo..x_hi);
        let y: Vec<f64> = (0..k).map(|_| rng.gen_range(region.y_lo..region.y_hi)).collect();
        if pole_distance(form, &y) < 0.1 {
            continue;
        }
        let t = region.t;
        let at = |x: f64, y: &[f64], t: f64| -> f64 {
            model_barrier_jet(form, b, &Point { x, y: y.to_vec(), t }).map(|j| j.phi).unwrap_or(f64::NAN)
        };
        let exact = model_barrier_jet(form, b, &Point { x, y: y.clone(), t })?;
        let denom = |e: f64| e.abs().max(exact.phi);
        let mut dev = |fd: f64, e: f64| worst = worst.max((fd - e).abs() / denom(e));
        // φ varies in x on the scale x + bS, which is small near the wall.
        let hx = (h * (x + b * pole_distance(form, &y)).min(1.0)).min(x / 4.0);
        dev(richardson_d1(&|z| at(z, &y, t), x, hx), exact.x);
        dev(richardson_d2(&|z| at(z, &y, t), x, hx), exact.xx);
        if matches!(form, BarrierForm::Wall { .. }) {
            dev(richardson_d1(&|z| at(x, &y, z), t, h * t), exact.t);
        }
        for i in 0..k {
            let shifted = |z: f64| {
                let mut yy = y.clone();
                yy[i] = z;
                at(x, &yy, t)
            };
            dev(richardson_d1(&shifted, y[i], h), exact.y[i]);
            dev(richardson_d2(&shifted, y[i], h), exact.yy[i]);
        }
        done += 1;
    }
    Ok(worst)
}
