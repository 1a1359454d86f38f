//! Boundary curves of the refraction domain.
//!
//! A [`BoundaryCurve`] wraps an analytic [`CurveSpec`] (native parameter
//! `theta` in `[0, 2pi)`) together with an arc-length table, so every
//! downstream quantity can be evaluated at an arc-length parameter `xi` in
//! `[0, L)`. The curve is oriented counterclockwise, hence the outward normal
//! is the tangent rotated clockwise by a right angle.
//!
//! Arc length is tabulated by composite Gauss–Legendre quadrature of the
//! native speed over uniform `theta` panels; the inverse map `xi -> theta` is
//! a safeguarded Newton iteration inside the bracketing panel.

use std::f64::consts::{PI, TAU};
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{cross, refine_root, Vec2};

const PANELS: usize = 512;
const PANEL_NODES: usize = 16;
const INVERSE_TOL: f64 = 1e-15;
const SCAN_SAMPLES: usize = 4096;

/// Angular slack under which two directions count as anti-parallel.
pub const ANTIPODAL_TOL: f64 = 1e-9;
/// `|r''|` below this marks a central configuration as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Relative size of `|r'|` under which the whole curve is a critical plateau.
const PLATEAU_TOL: f64 = 1e-10;
/// Grazing tolerance for ray/curve intersections, relative to the curve size.
const TANGENCY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid curve parameter: {0}")]
    InvalidParameter(String),
    #[error("polar radius is non-positive near theta = {theta:.6}")]
    NonPositiveRadius { theta: f64 },
    #[error("the origin is not strictly inside the curve")]
    OriginOutside,
}

/// Analytic boundary family.
///
/// The ellipse may be translated and rotated; the polar Fourier radius
/// `rho(theta) = c0 + sum_k (cos[k-1] cos(k theta) + sin[k-1] sin(k theta))`
/// is measured from `center`. Offsets make it possible to build domains where
/// the origin sits off-center (focused ellipses, non star-shaped domains).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        rotation: f64,
    },
    PolarFourier {
        c0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
        #[serde(default)]
        center: [f64; 2],
    },
}

impl CurveSpec {
    pub fn ellipse(a: f64, b: f64) -> Self {
        CurveSpec::Ellipse { a, b, center: [0.0; 2], rotation: 0.0 }
    }

    pub fn circle(r: f64) -> Self {
        Self::ellipse(r, r)
    }

    /// Ellipse whose left focus sits at the origin.
    pub fn focused_ellipse(a: f64, b: f64) -> Self {
        let c = (a * a - b * b).sqrt();
        CurveSpec::Ellipse { a, b, center: [c, 0.0], rotation: 0.0 }
    }

    pub fn polar_fourier(c0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        CurveSpec::PolarFourier { c0, cos, sin, center: [0.0; 2] }
    }

    /// Native point and its first two `theta` derivatives.
    pub fn native(&self, theta: f64) -> [Vec2; 3] {
        match self {
            CurveSpec::Ellipse { a, b, center, rotation } => {
                let (s, c) = theta.sin_cos();
                let (rs, rc) = rotation.sin_cos();
                let rot = |x: f64, y: f64| Vec2::new(rc * x - rs * y, rs * x + rc * y);
                [
                    rot(a * c, b * s) + Vec2::new(center[0], center[1]),
                    rot(-a * s, b * c),
                    rot(-a * c, -b * s),
                ]
            }
            CurveSpec::PolarFourier { center, .. } => {
                let [r, r1, r2] = self.polar_radius(theta);
                let (s, c) = theta.sin_cos();
                let e = Vec2::new(c, s);
                let f = Vec2::new(-s, c);
                [
                    e * r + Vec2::new(center[0], center[1]),
                    e * r1 + f * r,
                    e * (r2 - r) + f * (2.0 * r1),
                ]
            }
        }
    }

    /// `rho`, `rho'`, `rho''` of the polar family (zeros for ellipses).
    fn polar_radius(&self, theta: f64) -> [f64; 3] {
        match self {
            CurveSpec::PolarFourier { c0, cos, sin, .. } => {
                let mut out = [*c0, 0.0, 0.0];
                let harmonics = cos.len().max(sin.len());
                for k in 1..=harmonics {
                    let ck = cos.get(k - 1).copied().unwrap_or(0.0);
                    let sk = sin.get(k - 1).copied().unwrap_or(0.0);
                    let kf = k as f64;
                    let (s, c) = (kf * theta).sin_cos();
                    out[0] += ck * c + sk * s;
                    out[1] += kf * (-ck * s + sk * c);
                    out[2] -= kf * kf * (ck * c + sk * s);
                }
                out
            }
            CurveSpec::Ellipse { .. } => [0.0; 3],
        }
    }

    /// Signed implicit function: negative inside, zero on the curve, positive
    /// outside.
    pub fn implicit(&self, z: &Vec2) -> f64 {
        match self {
            CurveSpec::Ellipse { a, b, center, rotation } => {
                let (rs, rc) = rotation.sin_cos();
                let d = z - Vec2::new(center[0], center[1]);
                let x = rc * d.x + rs * d.y;
                let y = -rs * d.x + rc * d.y;
                (x / a).powi(2) + (y / b).powi(2) - 1.0
            }
            CurveSpec::PolarFourier { center, .. } => {
                let d = z - Vec2::new(center[0], center[1]);
                d.norm() - self.polar_radius(d.y.atan2(d.x))[0]
            }
        }
    }

    /// Native parameter of a point lying on the curve.
    pub fn native_param_of(&self, z: &Vec2) -> f64 {
        let th = match self {
            CurveSpec::Ellipse { a, b, center, rotation } => {
                let (rs, rc) = rotation.sin_cos();
                let d = z - Vec2::new(center[0], center[1]);
                let x = rc * d.x + rs * d.y;
                let y = -rs * d.x + rc * d.y;
                (y / b).atan2(x / a)
            }
            CurveSpec::PolarFourier { center, .. } => {
                let d = z - Vec2::new(center[0], center[1]);
                d.y.atan2(d.x)
            }
        };
        th.rem_euclid(TAU)
    }

    fn validate(&self) -> Result<(), GeometryError> {
        match self {
            CurveSpec::Ellipse { a, b, center, rotation } => {
                let finite = [*a, *b, center[0], center[1], *rotation].iter().all(|v| v.is_finite());
                if !finite || *a <= 0.0 || *b <= 0.0 {
                    return Err(GeometryError::InvalidParameter(format!(
                        "ellipse semi-axes must be positive and finite (a = {a}, b = {b})"
                    )));
                }
            }
            CurveSpec::PolarFourier { c0, cos, sin, center } => {
                let finite = std::iter::once(c0)
                    .chain(cos.iter())
                    .chain(sin.iter())
                    .chain(center.iter())
                    .all(|v| v.is_finite());
                if !finite {
                    return Err(GeometryError::InvalidParameter(
                        "polar Fourier coefficients must be finite".into(),
                    ));
                }
                for k in 0..SCAN_SAMPLES {
                    let theta = TAU * k as f64 / SCAN_SAMPLES as f64;
                    if self.polar_radius(theta)[0] <= 0.0 {
                        return Err(GeometryError::NonPositiveRadius { theta });
                    }
                }
            }
        }
        if self.implicit(&Vec2::zeros()) >= 0.0 {
            return Err(GeometryError::OriginOutside);
        }
        Ok(())
    }
}

/// Point and orthonormal frame at an arc-length parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub point: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
    /// Second arc-length derivative of the curve (curvature vector).
    pub accel: Vec2,
}

impl Frame {
    /// `r`, `dr/dxi`, `d2r/dxi2` for `r = |gamma(xi)|`.
    pub fn radius_derivatives(&self) -> [f64; 3] {
        let r = self.point.norm();
        let r1 = self.point.dot(&self.tangent) / r;
        let r2 = (1.0 + self.point.dot(&self.accel)) / r - r1 * r1 / r;
        [r, r1, r2]
    }
}

/// Closed parameter interval `[lo, hi]`; bounds may exceed `[0, L)` and are
/// wrapped on evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ParamInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn around(center: f64, half_width: f64) -> Self {
        Self { lo: center - half_width, hi: center + half_width }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn samples(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let n = n.max(2);
        (0..n).map(move |k| self.lo + self.width() * k as f64 / (n - 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigKind {
    StrictMin,
    StrictMax,
    Degenerate,
}

/// Critical point of `|gamma(xi)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralConfiguration {
    pub xi_bar: f64,
    pub kind: ConfigKind,
    pub second_derivative: f64,
    pub lsc_ok: bool,
    /// Set when `r'` vanishes on a whole parameter range (e.g. a circle).
    pub plateau: Option<ParamInterval>,
}

/// Outcome of intersecting the ray from the origin through `gamma(xi)` with
/// the curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RayCrossings {
    pub count: usize,
    pub tangential: bool,
}

#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    spec: CurveSpec,
    length: f64,
    cumulative: Vec<f64>,
    rule: GaussLegendre,
}

impl BoundaryCurve {
    pub fn new(spec: CurveSpec) -> Result<Self, GeometryError> {
        spec.validate()?;
        let rule = GaussLegendre::new(NonZeroUsize::new(PANEL_NODES).unwrap());
        let dtheta = TAU / PANELS as f64;
        let mut cumulative = Vec::with_capacity(PANELS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..PANELS {
            let t0 = k as f64 * dtheta;
            acc += rule.integrate(t0, t0 + dtheta, |t| spec.native(t)[1].norm());
            cumulative.push(acc);
        }
        Ok(Self { spec, length: acc, cumulative, rule })
    }

    pub fn spec(&self) -> &CurveSpec {
        &self.spec
    }

    /// Total length `L`.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn wrap(&self, xi: f64) -> f64 {
        let w = xi.rem_euclid(self.length);
        if w >= self.length {
            0.0
        } else {
            w
        }
    }

    /// Signed parameter difference `b - a` reduced to `(-L/2, L/2]`.
    pub fn param_diff(&self, a: f64, b: f64) -> f64 {
        let d = (b - a).rem_euclid(self.length);
        if d > 0.5 * self.length {
            d - self.length
        } else {
            d
        }
    }

    fn speed(&self, theta: f64) -> f64 {
        self.spec.native(theta)[1].norm()
    }

    /// Arc length from `theta = 0` to `theta` (wrapped).
    pub fn xi_of_theta(&self, theta: f64) -> f64 {
        let th = theta.rem_euclid(TAU);
        let dtheta = TAU / PANELS as f64;
        let k = ((th / dtheta) as usize).min(PANELS - 1);
        let t0 = k as f64 * dtheta;
        let xi = self.cumulative[k] + self.rule.integrate(t0, th, |t| self.speed(t));
        self.wrap(xi)
    }

    /// Native parameter of arc-length `xi` (wrapped into `[0, L)`).
    pub fn theta_of(&self, xi: f64) -> f64 {
        let s = self.wrap(xi);
        let k = self.cumulative.partition_point(|&c| c <= s).clamp(1, PANELS) - 1;
        let dtheta = TAU / PANELS as f64;
        let (mut lo, mut hi) = (k as f64 * dtheta, (k + 1) as f64 * dtheta);
        let (c0, c1) = (self.cumulative[k], self.cumulative[k + 1]);
        let mut th = lo + (s - c0) / (c1 - c0) * dtheta;
        let t0 = lo;
        for _ in 0..40 {
            let g = c0 + self.rule.integrate(t0, th, |t| self.speed(t)) - s;
            if g > 0.0 {
                hi = th;
            } else {
                lo = th;
            }
            let mut next = th - g / self.speed(th);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - th).abs();
            th = next;
            if step < INVERSE_TOL || hi - lo < INVERSE_TOL {
                break;
            }
        }
        th
    }

    pub fn frame(&self, xi: f64) -> Frame {
        let th = self.theta_of(xi);
        let [p, d1, d2] = self.spec.native(th);
        let sigma = d1.norm();
        let tangent = d1 / sigma;
        let dsigma = d1.dot(&d2) / sigma;
        let accel = (d2 / sigma - d1 * (dsigma / (sigma * sigma))) / sigma;
        Frame { point: p, tangent, normal: Vec2::new(tangent.y, -tangent.x), accel }
    }

    pub fn point(&self, xi: f64) -> Vec2 {
        self.spec.native(self.theta_of(xi))[0]
    }

    /// `[r, r', r'']` of `r(xi) = |gamma(xi)|`.
    pub fn radius_derivatives(&self, xi: f64) -> [f64; 3] {
        self.frame(xi).radius_derivatives()
    }

    pub fn implicit(&self, z: &Vec2) -> f64 {
        self.spec.implicit(z)
    }

    pub fn contains(&self, z: &Vec2) -> bool {
        self.spec.implicit(z) < 0.0
    }

    /// Arc-length parameter of a point on the curve.
    pub fn xi_of_point(&self, z: &Vec2) -> f64 {
        self.xi_of_theta(self.spec.native_param_of(z))
    }

    /// Largest `|gamma|` over a dense sample.
    pub fn max_radius(&self) -> f64 {
        (0..SCAN_SAMPLES)
            .map(|k| self.spec.native(TAU * k as f64 / SCAN_SAMPLES as f64)[0].norm())
            .fold(0.0, f64::max)
    }

    pub fn polar_angle(&self, xi: f64) -> f64 {
        let p = self.point(xi);
        p.y.atan2(p.x)
    }

    /// Count intersections of the ray `{lambda gamma(xi), lambda >= 0}` with
    /// the curve, flagging grazing contacts.
    pub fn ray_crossings(&self, xi: f64) -> RayCrossings {
        let frame = self.frame(xi);
        let dir = frame.point.normalize();
        let scale = self.max_radius();
        let mut tangential = cross(&dir, &frame.tangent).abs() < TANGENCY_TOL;
        let n = SCAN_SAMPLES;
        let f: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let p = self.spec.native(TAU * k as f64 / n as f64)[0];
                (cross(&dir, &p), dir.dot(&p))
            })
            .collect();
        let mut count = 0;
        for k in 0..n {
            let (f0, g0) = f[k];
            let (f1, g1) = f[k + 1];
            if g0 > 0.0 && g1 > 0.0 && ((f0 > 0.0) != (f1 > 0.0)) {
                count += 1;
            }
        }
        // Grazing: a local minimum of |f| on the forward side, without a sign
        // change on either neighbouring cell.
        for k in 1..n {
            let (fm, gm) = f[k - 1];
            let (f0, g0) = f[k];
            let (fp, _) = f[k + 1];
            if g0 <= 0.0 || gm <= 0.0 {
                continue;
            }
            let same_sign = (fm > 0.0) == (f0 > 0.0) && (f0 > 0.0) == (fp > 0.0);
            if same_sign && f0.abs() <= fm.abs() && f0.abs() <= fp.abs() {
                // refine the minimum of |f| with a parabola through the three samples
                let denom = fm - 2.0 * f0 + fp;
                let fmin = if denom.abs() > 0.0 { f0 - (fp - fm).powi(2) / (8.0 * denom) } else { f0 };
                if fmin.abs() < TANGENCY_TOL * scale || fmin.signum() != f0.signum() {
                    tangential = true;
                }
            }
        }
        RayCrossings { count, tangential }
    }

    /// Local star-convexity at `xi`: the origin ray meets the curve once,
    /// transversally.
    pub fn is_lsc(&self, xi: f64) -> bool {
        let rc = self.ray_crossings(xi);
        rc.count == 1 && !rc.tangential
    }

    /// Whether the origin lies on the segment `[gamma(xi1), gamma(xi2)]`.
    pub fn are_antipodal(&self, xi1: f64, xi2: f64) -> bool {
        let p = self.point(xi1);
        let q = self.point(xi2);
        let angle = cross(&p, &q).abs().atan2(p.dot(&q));
        angle >= PI - ANTIPODAL_TOL
    }

    /// Unwrapped polar-angle range swept by `gamma` over an interval.
    fn angular_sweep(&self, iv: &ParamInterval) -> (f64, f64) {
        let mut prev = self.polar_angle(iv.lo);
        let (mut lo, mut hi) = (prev, prev);
        for xi in iv.samples(129).skip(1) {
            let d = prev + crate::numeric::wrap_angle(self.polar_angle(xi) - prev);
            prev = d;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }

    /// True iff no point of `i1` is antipodal to a point of `i2`, comparing
    /// the angular sweep of `gamma` over `i1` with the sweep of `-gamma` over
    /// `i2`.
    pub fn intervals_not_antipodal(&self, i1: &ParamInterval, i2: &ParamInterval) -> bool {
        let (a0, a1) = self.angular_sweep(i1);
        let (b0, b1) = self.angular_sweep(i2);
        let (b0, b1) = (b0 + PI, b1 + PI);
        let len_a = a1 - a0;
        let len_b = b1 - b0;
        if len_a + len_b >= TAU - 2.0 * ANTIPODAL_TOL {
            return false;
        }
        let d = (b0 - a0).rem_euclid(TAU);
        let overlaps = d <= len_a + ANTIPODAL_TOL || d + len_b >= TAU - ANTIPODAL_TOL;
        !overlaps
    }

    /// All critical points of `|gamma(xi)|`, sorted by `xi`, classified by
    /// the sign of `r''` and checked for local star-convexity.
    pub fn find_central_configurations(&self) -> Vec<CentralConfiguration> {
        let n = SCAN_SAMPLES;
        // sign of dr/dtheta equals sign of dr/dxi
        let slope = |theta: f64| {
            let [p, d1, _] = self.spec.native(theta);
            p.dot(&d1) / (p.norm() * d1.norm())
        };
        let mut values: Vec<f64> = (0..n).map(|k| slope(TAU * k as f64 / n as f64)).collect();
        values.push(values[0]);
        if values.iter().all(|v| v.abs() < PLATEAU_TOL) {
            let second = self.radius_derivatives(0.0)[2];
            return vec![CentralConfiguration {
                xi_bar: 0.0,
                kind: ConfigKind::Degenerate,
                second_derivative: second,
                lsc_ok: self.is_lsc(0.0),
                plateau: Some(ParamInterval::new(0.0, self.length)),
            }];
        }
        let mut out: Vec<CentralConfiguration> = Vec::new();
        for k in 0..n {
            let (v0, v1) = (values[k], values[k + 1]);
            let t0 = TAU * k as f64 / n as f64;
            let t1 = TAU * (k + 1) as f64 / n as f64;
            let theta = if v0 == 0.0 {
                t0
            } else if v1 != 0.0 && (v0 > 0.0) != (v1 > 0.0) {
                refine_root(t0, t1, slope, 1e-15)
            } else {
                continue;
            };
            let xi = self.xi_of_theta(theta);
            if out.iter().any(|c| self.param_diff(c.xi_bar, xi).abs() < 1e-9 * self.length) {
                continue;
            }
            let second = self.radius_derivatives(xi)[2];
            let kind = if second.abs() < DEGENERACY_TOL {
                ConfigKind::Degenerate
            } else if second > 0.0 {
                ConfigKind::StrictMin
            } else {
                ConfigKind::StrictMax
            };
            out.push(CentralConfiguration {
                xi_bar: xi,
                kind,
                second_derivative: second,
                lsc_ok: self.is_lsc(xi),
                plateau: None,
            });
        }
        out.sort_by(|a, b| a.xi_bar.total_cmp(&b.xi_bar));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ellipse21() -> BoundaryCurve {
        BoundaryCurve::new(CurveSpec::ellipse(2.0, 1.0)).unwrap()
    }

    #[test]
    fn unit_circle_length_and_frame() {
        let c = BoundaryCurve::new(CurveSpec::circle(1.0)).unwrap();
        assert_abs_diff_eq!(c.length(), TAU, epsilon = 1e-10);
        let f = c.frame(0.0);
        assert_abs_diff_eq!(f.point.x, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.tangent.y, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.normal.x, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn ellipse_vertex_normal() {
        let c = ellipse21();
        let f = c.frame(0.0);
        assert_abs_diff_eq!(f.normal.x, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.normal.y, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn normal_matches_implicit_gradient() {
        let c = ellipse21();
        for k in 0..37 {
            let xi = c.length() * k as f64 / 37.0 + 0.013;
            let f = c.frame(xi);
            let g = Vec2::new(f.point.x / 2.0, 2.0 * f.point.y).normalize();
            assert_abs_diff_eq!(f.normal.x, g.x, epsilon = 1e-10);
            assert_abs_diff_eq!(f.normal.y, g.y, epsilon = 1e-10);
        }
    }

    #[test]
    fn closed_curve_and_unit_speed() {
        let c = ellipse21();
        let l = c.length();
        let a = c.frame(0.0);
        let b = c.frame(l - 1e-300);
        assert!((a.point - b.point).norm() < 1e-10);
        assert!((a.tangent - b.tangent).norm() < 1e-10);
        // unit speed: finite differences of the point along xi
        for k in 0..50 {
            let xi = l * k as f64 / 50.0;
            let h = 1e-5;
            let d = (c.point(xi + h) - c.point(xi - h)) / (2.0 * h);
            assert!((d.norm() - 1.0).abs() < 1e-8, "speed {} at {}", d.norm(), xi);
        }
    }

    #[test]
    fn xi_theta_roundtrip() {
        let c = ellipse21();
        for k in 0..100 {
            let xi = c.length() * (k as f64 + 0.37) / 100.0;
            let back = c.xi_of_theta(c.theta_of(xi));
            assert!(c.param_diff(xi, back).abs() < 1e-12);
        }
    }

    #[test]
    fn polar_fourier_constant_equals_circle() {
        let a = BoundaryCurve::new(CurveSpec::circle(1.0)).unwrap();
        let b = BoundaryCurve::new(CurveSpec::polar_fourier(1.0, vec![0.0, 0.0], vec![0.0])).unwrap();
        for k in 0..20 {
            let xi = 0.31 * k as f64;
            let (fa, fb) = (a.frame(xi), b.frame(xi));
            assert!((fa.point - fb.point).norm() < 1e-9);
            assert!((fa.tangent - fb.tangent).norm() < 1e-9);
            assert!((fa.normal - fb.normal).norm() < 1e-9);
        }
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            BoundaryCurve::new(CurveSpec::polar_fourier(0.5, vec![0.0, 0.0, 0.8], vec![])),
            Err(GeometryError::NonPositiveRadius { .. })
        ));
        let off = CurveSpec::Ellipse { a: 1.0, b: 1.0, center: [3.0, 0.0], rotation: 0.0 };
        assert_eq!(BoundaryCurve::new(off).unwrap_err(), GeometryError::OriginOutside);
        assert!(matches!(
            BoundaryCurve::new(CurveSpec::ellipse(-1.0, 1.0)),
            Err(GeometryError::InvalidParameter(_))
        ));
    }

    #[test]
    fn antipodality() {
        let circ = BoundaryCurve::new(CurveSpec::circle(1.0)).unwrap();
        let l = circ.length();
        assert!(circ.are_antipodal(0.4, 0.4 + l / 2.0));
        assert!(!circ.are_antipodal(0.4, 0.4));
        let e = ellipse21();
        let q = e.length() / 4.0;
        assert!(!e.are_antipodal(0.0, q));
        assert!(e.are_antipodal(0.0, 2.0 * q));
    }

    #[test]
    fn interval_antipodality() {
        let e = ellipse21();
        let q = e.length() / 4.0;
        let w = 0.05 * e.length();
        let i1 = ParamInterval::around(0.0, w);
        let i2 = ParamInterval::around(q, w);
        let i3 = ParamInterval::around(2.0 * q, w);
        assert!(!e.intervals_not_antipodal(&i1, &i3));
        assert!(e.intervals_not_antipodal(&i1, &i2));
        assert!(e.intervals_not_antipodal(&i1, &i1));
    }

    #[test]
    fn lsc_on_star_shaped_and_failure_off_center() {
        let e = ellipse21();
        assert!((0..40).all(|k| e.is_lsc(e.length() * k as f64 / 40.0)));
        // three-lobed curve around an off-origin center: some rays from the
        // origin cross the boundary three times
        let spec = CurveSpec::PolarFourier { c0: 1.0, cos: vec![0.0, 0.0, 0.7], sin: vec![], center: [0.3, 0.0] };
        let c = BoundaryCurve::new(spec.clone()).unwrap();
        // oracle: ray against a fine polygon
        let poly: Vec<Vec2> = (0..20000).map(|k| spec.native(TAU * k as f64 / 20000.0)[0]).collect();
        let polygon_hits = |dir: Vec2| {
            (0..poly.len())
                .filter(|&k| {
                    let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
                    let (cp, cq) = (cross(&dir, &p), cross(&dir, &q));
                    if (cp > 0.0) == (cq > 0.0) {
                        return false;
                    }
                    let x = p + (q - p) * (cp / (cp - cq));
                    x.dot(&dir) > 0.0
                })
                .count()
        };
        let mut bad = 0;
        for k in 0..200 {
            let xi = c.length() * (k as f64 + 0.5) / 200.0;
            let expected = polygon_hits(c.point(xi).normalize()) == 1;
            assert_eq!(c.is_lsc(xi), expected, "xi = {xi}");
            bad += usize::from(!expected);
        }
        assert!(bad > 0);
    }

    #[test]
    fn ellipse_central_configurations() {
        let e = ellipse21();
        let ccs = e.find_central_configurations();
        assert_eq!(ccs.len(), 4);
        let kinds: Vec<_> = ccs.iter().map(|c| c.kind).collect();
        assert_eq!(
            kinds,
            vec![ConfigKind::StrictMax, ConfigKind::StrictMin, ConfigKind::StrictMax, ConfigKind::StrictMin]
        );
        for (k, c) in ccs.iter().enumerate() {
            assert_abs_diff_eq!(c.xi_bar, k as f64 * e.length() / 4.0, epsilon = 1e-9);
            assert!(c.lsc_ok);
            assert!(e.radius_derivatives(c.xi_bar)[1].abs() < 1e-10);
        }
    }

    #[test]
    fn circle_is_degenerate_plateau() {
        let c = BoundaryCurve::new(CurveSpec::circle(1.3)).unwrap();
        let ccs = c.find_central_configurations();
        assert_eq!(ccs.len(), 1);
        assert_eq!(ccs[0].kind, ConfigKind::Degenerate);
        assert!(ccs[0].plateau.is_some());
    }
}
