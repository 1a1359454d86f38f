//! Outer (harmonic) and inner (Keplerian) arcs.
//!
//! Outer arcs are pieces of the centred ellipse
//! `z(s) = z0 cos(omega s) + (v0 / omega) sin(omega s)`, so the two-point
//! problem reduces to one scalar equation in `theta = omega T`.
//!
//! Inner arcs are solved in Levi-Civita coordinates `z = w^2` with the
//! fictitious time `ds = sqrt(2 / E) |w|^2 dtau`, where `E = calE + h`. In
//! these variables the zero-energy Kepler motion becomes the linear repulsor
//! `w'' = w`, i.e. `w(tau) = A e^tau + B e^-tau`, and energy conservation
//! reads `E' = mu / (2E) = -2 A.B`. Lengths and times stay in physical units;
//! no rescaling to unit energy is performed.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoundaryCurve;
use crate::model::BilliardParams;
use crate::numeric::{cdot, chebyshev_nodes, refine_root, to_complex, to_vec, Vec2};

/// Samples of the outer-arc equation on `[0, 2 pi]`.
const OUTER_ROOT_SAMPLES: usize = 512;
const SIDE_SAMPLES: usize = 64;
const SIDE_DOUBLINGS: usize = 4;
/// Relative size of the normal velocity component below which an endpoint is
/// treated as tangential.
const TANGENCY_TOL: f64 = 1e-10;
/// Collision flag threshold on the minimum of `|w|`, relative to `|w0|`.
const COLLISION_REL_TOL: f64 = 1e-6;
/// Endpoint separation, relative to `|p0|`, below which an inner arc is the
/// radial collision-ejection arc.
const COINCIDENT_REL_TOL: f64 = 1e-9;
const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArcError {
    #[error("no exterior outer arc joins the endpoints")]
    NoExteriorRoot,
    #[error("arc is tangent to the boundary at an endpoint")]
    Tangency,
    #[error("inner arc endpoints are antipodal")]
    AntipodalEndpoints,
    #[error("arc endpoint at the origin")]
    ZeroEndpoint,
    #[error("initial state is off the energy shell (residual {0:e})")]
    EnergyMismatch(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Outer,
    Inner,
}

/// Homotopy class of an inner arc in the punctured plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomotopyClass {
    /// Topologically non-trivial: not homotopic to the chord.
    Tnt,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArcSample {
    pub s: f64,
    pub position: Vec2,
    pub velocity: Vec2,
    pub regime: Regime,
}

/// Write samples as CSV with columns `s,x,y,vx,vy,regime`.
pub fn write_samples_csv<W: Write>(samples: &[ArcSample], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "x", "y", "vx", "vy", "regime"])?;
    for p in samples {
        let regime = match p.regime {
            Regime::Outer => "outer",
            Regime::Inner => "inner",
        };
        w.write_record([
            format!("{:.16e}", p.s),
            format!("{:.16e}", p.position.x),
            format!("{:.16e}", p.position.y),
            format!("{:.16e}", p.velocity.x),
            format!("{:.16e}", p.velocity.y),
            regime.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Harmonic flow from an initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterFlow {
    pub z0: Vec2,
    pub v0: Vec2,
    pub omega: f64,
}

impl OuterFlow {
    pub fn position(&self, s: f64) -> Vec2 {
        let (sn, cs) = (self.omega * s).sin_cos();
        self.z0 * cs + self.v0 * (sn / self.omega)
    }

    pub fn velocity(&self, s: f64) -> Vec2 {
        let (sn, cs) = (self.omega * s).sin_cos();
        self.v0 * cs - self.z0 * (self.omega * sn)
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    /// `int_0^t |z(s)|^2 ds` in closed form.
    fn radius_sq_integral(&self, t: f64) -> f64 {
        let w = self.omega;
        let th = w * t;
        let (s2, _) = (2.0 * th).sin_cos();
        let cos2 = 0.5 * t + s2 / (4.0 * w);
        let sin2 = 0.5 * t - s2 / (4.0 * w);
        let mixed = th.sin().powi(2) / (2.0 * w);
        self.z0.norm_squared() * cos2
            + 2.0 * self.z0.dot(&self.v0) / w * mixed
            + self.v0.norm_squared() / (w * w) * sin2
    }
}

/// Start the harmonic flow from `(z0, v0)` on the outer energy shell.
pub fn propagate_outer(params: &BilliardParams, z0: Vec2, v0: Vec2) -> Result<OuterFlow, ArcError> {
    let residual = 0.5 * v0.norm_squared() - params.v_outer(&z0);
    if residual.abs() > ENERGY_TOL * params.cal_e.max(1.0) {
        return Err(ArcError::EnergyMismatch(residual));
    }
    Ok(OuterFlow { z0, v0, omega: params.omega() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterArc {
    pub flow: OuterFlow,
    pub z1: Vec2,
    pub v1: Vec2,
    pub duration: f64,
}

impl OuterArc {
    pub fn z0(&self) -> Vec2 {
        self.flow.z0
    }

    pub fn v0(&self) -> Vec2 {
        self.flow.v0
    }

    pub fn position(&self, s: f64) -> Vec2 {
        self.flow.position(s)
    }

    pub fn velocity(&self, s: f64) -> Vec2 {
        self.flow.velocity(s)
    }

    /// Jacobi length `int sqrt(2) V_E(z(s)) ds`, closed form.
    pub fn jacobi_length(&self, params: &BilliardParams) -> f64 {
        let t = self.duration;
        let integral = params.cal_e * t - 0.5 * params.omega2 * self.flow.radius_sq_integral(t);
        std::f64::consts::SQRT_2 * integral
    }

    pub fn samples(&self, n: usize, s_offset: f64) -> Vec<ArcSample> {
        let n = n.max(2);
        (0..n)
            .map(|k| {
                let s = self.duration * k as f64 / (n - 1) as f64;
                ArcSample { s: s + s_offset, position: self.position(s), velocity: self.velocity(s), regime: Regime::Outer }
            })
            .collect()
    }
}

/// Check the sign of the boundary implicit function along an arc at
/// Chebyshev nodes of `(0, t)`. `outside` selects the required side. The
/// sample count doubles while the smallest interior margin is small compared
/// with the largest one.
fn stays_on_side<F: Fn(f64) -> Vec2>(curve: &BoundaryCurve, pos: F, t: f64, outside: bool) -> bool {
    let mut n = SIDE_SAMPLES;
    for _ in 0..=SIDE_DOUBLINGS {
        let vals: Vec<f64> = chebyshev_nodes(0.0, t, n)
            .into_iter()
            .map(|s| {
                let f = curve.implicit(&pos(s));
                if outside {
                    f
                } else {
                    -f
                }
            })
            .collect();
        if vals.iter().any(|&f| f <= 0.0) {
            return false;
        }
        // interior local minima close to zero hint at a near-tangency that a
        // coarser grid could step over
        let peak = vals.iter().cloned().fold(0.0, f64::max);
        let grazing = (1..n - 1).any(|k| vals[k] <= vals[k - 1] && vals[k] <= vals[k + 1] && vals[k] < 1e-3 * peak);
        if !grazing {
            return true;
        }
        n *= 2;
    }
    true
}

/// Solve the outer fixed-ends problem between `gamma(xi1)` and `gamma(xi2)`.
///
/// The arc must leave `D` transversally at `xi1`, stay outside `D`, and
/// re-enter transversally at `xi2`. Among the admissible durations the
/// shortest one is returned.
pub fn solve_outer_arc(curve: &BoundaryCurve, params: &BilliardParams, xi1: f64, xi2: f64) -> Result<OuterArc, ArcError> {
    let f0 = curve.frame(xi1);
    let f1 = curve.frame(xi2);
    solve_outer_between(curve, params, f0.point, f0.normal, f1.point, f1.normal)
}

fn solve_outer_between(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    z0: Vec2,
    n0: Vec2,
    z1: Vec2,
    n1: Vec2,
) -> Result<OuterArc, ArcError> {
    let omega = params.omega();
    let twice_ve = 2.0 * params.v_outer(&z0);
    let g = |th: f64| {
        let (s, c) = th.sin_cos();
        params.omega2 * (z1 - z0 * c).norm_squared() - s * s * twice_ve
    };
    let mut prev_t = 0.0;
    let mut prev_g = g(0.0);
    let mut saw_tangent = false;
    for k in 1..=OUTER_ROOT_SAMPLES {
        let t = TAU * k as f64 / OUTER_ROOT_SAMPLES as f64;
        let gk = g(t);
        let bracket = (prev_g > 0.0) != (gk > 0.0);
        let (lo, hi) = (prev_t, t);
        prev_t = t;
        prev_g = gk;
        if !bracket {
            continue;
        }
        let theta = refine_root(lo, hi, g, 1e-15);
        let sn = theta.sin();
        if sn.abs() < 1e-14 || theta <= 0.0 {
            continue;
        }
        let v0 = (z1 - z0 * theta.cos()) * (omega / sn);
        let flow = OuterFlow { z0, v0, omega };
        let duration = theta / omega;
        let v1 = flow.velocity(duration);
        let speed = v0.norm().max(f64::MIN_POSITIVE);
        let (out0, in1) = (v0.dot(&n0) / speed, v1.dot(&n1) / speed);
        if out0.abs() < TANGENCY_TOL || in1.abs() < TANGENCY_TOL {
            saw_tangent = true;
            continue;
        }
        if out0 <= 0.0 || in1 >= 0.0 {
            continue;
        }
        if !stays_on_side(curve, |s| flow.position(s), duration, true) {
            continue;
        }
        return Ok(OuterArc { flow, z1, v1, duration });
    }
    if saw_tangent {
        Err(ArcError::Tangency)
    } else {
        Err(ArcError::NoExteriorRoot)
    }
}

/// Levi-Civita solution `w(tau) = A e^tau + B e^-tau` of the inner flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerFlow {
    pub a: Complex64,
    pub b: Complex64,
    /// Inner energy `calE + h`.
    pub energy: f64,
    pub mu: f64,
}

impl InnerFlow {
    pub fn w(&self, tau: f64) -> Complex64 {
        self.a * tau.exp() + self.b * (-tau).exp()
    }

    pub fn w_tau(&self, tau: f64) -> Complex64 {
        self.a * tau.exp() - self.b * (-tau).exp()
    }

    pub fn position_tau(&self, tau: f64) -> Vec2 {
        let w = self.w(tau);
        to_vec(w * w)
    }

    /// Physical velocity at fictitious time `tau`.
    pub fn velocity_tau(&self, tau: f64) -> Vec2 {
        let w = self.w(tau);
        to_vec(self.w_tau(tau) / w.conj() * (2.0 * self.energy).sqrt())
    }

    /// Physical time `s(tau)` with `s(0) = 0`.
    pub fn s_of_tau(&self, tau: f64) -> f64 {
        let a2 = self.a.norm_sqr();
        let b2 = self.b.norm_sqr();
        let ab = cdot(self.a, self.b);
        (2.0 / self.energy).sqrt() * (a2 * (2.0 * tau).exp_m1() / 2.0 - b2 * (-2.0 * tau).exp_m1() / 2.0 + 2.0 * ab * tau)
    }

    /// Inverse of the monotone time map.
    pub fn tau_of_s(&self, s: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        if s < 0.0 {
            std::mem::swap(&mut lo, &mut hi);
            lo = -1.0;
            hi = 0.0;
            while self.s_of_tau(lo) > s {
                lo *= 2.0;
            }
        } else {
            while self.s_of_tau(hi) < s {
                hi *= 2.0;
            }
        }
        let mut tau = 0.5 * (lo + hi);
        let scale = (2.0 / self.energy).sqrt();
        for _ in 0..200 {
            let r = self.s_of_tau(tau) - s;
            if r > 0.0 {
                hi = tau;
            } else {
                lo = tau;
            }
            let ds = scale * self.w(tau).norm_sqr();
            let mut next = tau - r / ds;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - tau).abs() <= 1e-15 * (1.0 + tau.abs()) || hi - lo <= 1e-15 * (1.0 + tau.abs()) {
                return next;
            }
            tau = next;
        }
        tau
    }

    pub fn position(&self, s: f64) -> Vec2 {
        self.position_tau(self.tau_of_s(s))
    }

    pub fn velocity(&self, s: f64) -> Vec2 {
        self.velocity_tau(self.tau_of_s(s))
    }

    /// `E' = mu / (2E)`.
    pub fn e_prime(&self) -> f64 {
        self.mu / (2.0 * self.energy)
    }

    /// Fictitious time of the closest approach to the origin and the
    /// distance `|w|` there. The closest approach may lie outside any
    /// particular time window.
    pub fn closest_approach(&self) -> (f64, f64) {
        let (na, nb) = (self.a.norm(), self.b.norm());
        if na == 0.0 || nb == 0.0 {
            return (if na == 0.0 { f64::INFINITY } else { f64::NEG_INFINITY }, 0.0);
        }
        let tau = 0.5 * (nb / na).ln();
        // |w(tau*)| = sqrt(|A||B|) |A/|A| + B/|B||, free of cancellation
        let wmin = (na * nb).sqrt() * (self.a / na + self.b / nb).norm();
        (tau, wmin)
    }
}

/// Start the regularized inner flow from `(z0, v0)` on the inner energy
/// shell. Passage through the origin is a reflection of the physical motion.
pub fn propagate_inner(params: &BilliardParams, z0: Vec2, v0: Vec2) -> Result<InnerFlow, ArcError> {
    if z0.norm() < crate::model::COLLISION_RADIUS {
        return Err(ArcError::ZeroEndpoint);
    }
    let vi = params.v_inner_unchecked(&z0);
    let residual = 0.5 * v0.norm_squared() - vi;
    if residual.abs() > ENERGY_TOL * vi.max(1.0) {
        return Err(ArcError::EnergyMismatch(residual));
    }
    let energy = params.inner_energy();
    let w0 = to_complex(z0).sqrt();
    let wt = to_complex(v0) * w0.conj() / (2.0 * energy).sqrt();
    Ok(InnerFlow { a: (w0 + wt) * 0.5, b: (w0 - wt) * 0.5, energy, mu: params.mu })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerArc {
    pub flow: InnerFlow,
    pub p0: Vec2,
    pub p1: Vec2,
    pub w0: Complex64,
    pub w1: Complex64,
    pub t_tilde: f64,
    pub duration: f64,
    pub v0: Vec2,
    pub v1: Vec2,
    pub collision: bool,
    pub class: HomotopyClass,
}

/// Jacobi length `2 int_0^r sqrt(E + mu / rho) d rho` of the radial
/// collision-ejection arc at distance `r`.
pub fn radial_jacobi_length(energy: f64, mu: f64, r: f64) -> f64 {
    2.0 * ((r * (energy * r + mu)).sqrt() + mu / energy.sqrt() * (energy * r / mu).sqrt().asinh())
}

/// Solve the inner fixed-ends problem between `p0` and `p1` in the given
/// homotopy class.
pub fn solve_inner_arc(params: &BilliardParams, p0: Vec2, p1: Vec2, class: HomotopyClass) -> Result<InnerArc, ArcError> {
    if p0.norm() < crate::model::COLLISION_RADIUS || p1.norm() < crate::model::COLLISION_RADIUS {
        return Err(ArcError::ZeroEndpoint);
    }
    let angle = crate::numeric::cross(&p0, &p1).abs().atan2(p0.dot(&p1));
    if angle >= PI - crate::geometry::ANTIPODAL_TOL {
        return Err(ArcError::AntipodalEndpoints);
    }
    let energy = params.inner_energy();
    let ep = params.mu / (2.0 * energy);
    let w0 = to_complex(p0).sqrt();
    let mut w1 = to_complex(p1).sqrt();
    let c_pos = cdot(w0, w1);
    let flip = match class {
        HomotopyClass::Tnt => c_pos >= 0.0,
        HomotopyClass::Direct => c_pos < 0.0,
    };
    if flip {
        w1 = -w1;
    }
    let c = cdot(w0, w1);
    let s = w0.norm_sqr() + w1.norm_sqr();
    let q = c / (2.0 * ep);
    let root = (s / (2.0 * ep) + q * q + 1.0).sqrt();
    let y = if q <= 0.0 { -q + root } else { (s / (2.0 * ep) + 1.0) / (q + root) };
    let t_tilde = y.acosh();
    let two_sinh = 2.0 * t_tilde.sinh();
    let a = (w1 - w0 * (-t_tilde).exp()) / two_sinh;
    let b = (w0 * t_tilde.exp() - w1) / two_sinh;
    let flow = InnerFlow { a, b, energy, mu: params.mu };
    let (tau_star, wmin) = flow.closest_approach();
    let collision = tau_star > 0.0 && tau_star < t_tilde && wmin <= COLLISION_REL_TOL * w0.norm();
    Ok(InnerArc {
        flow,
        p0,
        p1,
        w0,
        w1,
        t_tilde,
        duration: flow.s_of_tau(t_tilde),
        v0: flow.velocity_tau(0.0),
        v1: flow.velocity_tau(t_tilde),
        collision,
        class,
    })
}

impl InnerArc {
    pub fn e_prime(&self) -> f64 {
        self.flow.e_prime()
    }

    /// Residual of the identity `E' = -2 A.B`.
    pub fn energy_identity_residual(&self) -> f64 {
        self.e_prime() + 2.0 * cdot(self.flow.a, self.flow.b)
    }

    /// Jacobi length `int |z'| sqrt(V_I) ds`.
    ///
    /// Closed form in Levi-Civita variables; for (nearly) coincident
    /// endpoints the radial collision formula is used instead.
    pub fn jacobi_length(&self) -> f64 {
        let e = self.flow.energy;
        if (self.p1 - self.p0).norm() <= COINCIDENT_REL_TOL * self.p0.norm() {
            let r = 0.5 * (self.p0.norm() + self.p1.norm());
            return radial_jacobi_length(e, self.flow.mu, r);
        }
        let t = self.t_tilde;
        let s = self.w0.norm_sqr() + self.w1.norm_sqr();
        let c = cdot(self.w0, self.w1);
        2.0 * e.sqrt() * (0.5 * s / t.tanh() - c / t.sinh() + t * self.e_prime())
    }

    pub fn position_tau(&self, tau: f64) -> Vec2 {
        self.flow.position_tau(tau)
    }

    pub fn position(&self, s: f64) -> Vec2 {
        self.flow.position(s)
    }

    pub fn velocity(&self, s: f64) -> Vec2 {
        self.flow.velocity(s)
    }

    /// Whether the arc stays inside `D` between its endpoints.
    pub fn is_contained(&self, curve: &BoundaryCurve) -> bool {
        stays_on_side(curve, |tau| self.flow.position_tau(tau), self.t_tilde, false)
    }

    /// Samples equally spaced in fictitious time, which concentrates points
    /// near the pericentre.
    pub fn samples(&self, n: usize, s_offset: f64) -> Vec<ArcSample> {
        let n = n.max(2);
        (0..n)
            .map(|k| {
                let tau = self.t_tilde * k as f64 / (n - 1) as f64;
                ArcSample {
                    s: s_offset + self.flow.s_of_tau(tau),
                    position: self.flow.position_tau(tau),
                    velocity: self.flow.velocity_tau(tau),
                    regime: Regime::Inner,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveSpec;
    use approx::assert_relative_eq;

    fn default_setup() -> (BoundaryCurve, BilliardParams) {
        (BoundaryCurve::new(CurveSpec::ellipse(1.5, 1.0)).unwrap(), BilliardParams::default())
    }

    #[test]
    fn homothetic_outer_arc() {
        let (curve, params) = default_setup();
        let arc = solve_outer_arc(&curve, &params, 0.0, 0.0).unwrap();
        let r0: f64 = 1.5;
        let vr = (2.0 * params.cal_e - r0 * r0).sqrt();
        let phi = (vr / r0).atan();
        assert_relative_eq!(arc.duration, 2.0 * phi, epsilon = 1e-12);
        assert!(arc.v0().y.abs() < 1e-12 && arc.v0().x > 0.0);
    }

    #[test]
    fn outer_arc_hits_endpoints_with_energy() {
        let (curve, params) = default_setup();
        for (x1, x2) in [(0.1, 0.3), (2.0, 1.8), (4.0, 4.4), (1.0, 1.0)] {
            let arc = solve_outer_arc(&curve, &params, x1, x2).unwrap();
            assert!((arc.position(arc.duration) - curve.point(x2)).norm() < 1e-9);
            for k in 0..=20 {
                let s = arc.duration * k as f64 / 20.0;
                let e = 0.5 * arc.velocity(s).norm_squared() + 0.5 * arc.position(s).norm_squared();
                assert!((e - params.cal_e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn outer_period() {
        let params = BilliardParams::default();
        let f = propagate_outer(&params, Vec2::new(1.0, 0.2), Vec2::new(0.3, (2.0 * 2.0 - 1.04 - 0.09f64).sqrt())).unwrap();
        let t = f.period();
        assert!((f.position(t) - f.z0).norm() < 1e-12);
        assert!((f.velocity(t) - f.v0).norm() < 1e-12);
        assert!(matches!(propagate_outer(&params, Vec2::new(1.0, 0.0), Vec2::zeros()), Err(ArcError::EnergyMismatch(_))));
    }

    #[test]
    fn inner_arc_basic_identities() {
        let params = BilliardParams::new(1.0, 2.0, 0.5, 0.5).unwrap();
        let arc = solve_inner_arc(&params, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), HomotopyClass::Tnt).unwrap();
        assert!(cdot(arc.w0, arc.w1) < 0.0);
        assert!(arc.energy_identity_residual().abs() < 1e-10);
        assert!((arc.position_tau(0.0) - arc.p0).norm() < 1e-10);
        assert!((arc.position_tau(arc.t_tilde) - arc.p1).norm() < 1e-10);
        assert!((arc.position(arc.duration) - arc.p1).norm() < 1e-10);
        assert!(!arc.collision);
    }

    #[test]
    fn coincident_endpoints_collide() {
        let params = BilliardParams::default();
        let p = Vec2::new(0.8, 0.6);
        let arc = solve_inner_arc(&params, p, p, HomotopyClass::Tnt).unwrap();
        assert!(arc.collision);
        assert!(arc.v0.dot(&p) < 0.0 && crate::numeric::cross(&arc.v0, &p).abs() < 1e-9 * arc.v0.norm());
    }

    #[test]
    fn antipodal_refused() {
        let params = BilliardParams::default();
        let r = solve_inner_arc(&params, Vec2::new(1.0, 0.0), Vec2::new(-0.5, 0.0), HomotopyClass::Tnt);
        assert_eq!(r.unwrap_err(), ArcError::AntipodalEndpoints);
    }

    #[test]
    fn inner_reversibility() {
        let params = BilliardParams::default().with_h(7.0);
        let (p, q) = (Vec2::new(1.2, 0.3), Vec2::new(-0.2, 0.9));
        let f = solve_inner_arc(&params, p, q, HomotopyClass::Tnt).unwrap();
        let b = solve_inner_arc(&params, q, p, HomotopyClass::Tnt).unwrap();
        assert_relative_eq!(f.duration, b.duration, max_relative = 1e-12);
        assert!((f.v0 + b.v1).norm() < 1e-9);
        assert!((f.v1 + b.v0).norm() < 1e-9);
    }

    #[test]
    fn collision_passage_is_reflection() {
        let params = BilliardParams::default();
        let z0 = Vec2::new(0.6, 0.8);
        let speed = (2.0 * params.v_inner_unchecked(&z0)).sqrt();
        let flow = propagate_inner(&params, z0, -z0.normalize() * speed).unwrap();
        let (tau_c, wmin) = flow.closest_approach();
        assert!(wmin < 1e-12);
        let s_c = flow.s_of_tau(tau_c);
        for sigma in [0.01, 0.05, 0.1] {
            let before = flow.position(s_c - sigma);
            let after = flow.position(s_c + sigma);
            assert!((before - after).norm() < 1e-9);
            assert!((flow.velocity(s_c - sigma) + flow.velocity(s_c + sigma)).norm() < 1e-7);
        }
    }

    #[test]
    fn csv_export_header() {
        let (curve, params) = default_setup();
        let arc = solve_outer_arc(&curve, &params, 0.1, 0.2).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&arc.samples(3, 0.0), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,x,y,vx,vy,regime\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
