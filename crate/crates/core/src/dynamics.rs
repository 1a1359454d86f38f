//! Pointwise dynamics: refraction, the first-return map `F` on outward
//! boundary states, its inverse, and symbolic coding of traces.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arcs::{propagate_inner, propagate_outer, ArcError, ArcSample, InnerFlow, OuterFlow, Regime};
use crate::geometry::BoundaryCurve;
use crate::model::BilliardParams;
use crate::numeric::{refine_root, Vec2};
use crate::words::{IntervalSystem, WordWindow};

pub const ENERGY_TOL: f64 = 1e-9;
/// Outer re-entry scan step as a fraction of the harmonic period.
pub const OUTER_STEP_FRACTION: f64 = 0.01;
/// Crossings with `|v.n| / |v|` below this count as tangential grazing.
pub const GRAZING_TOL: f64 = 1e-10;
const CROSSING_XTOL: f64 = 1e-14;
const FIRST_STEP_SUBDIVISIONS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Outward,
    Inward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    OutwardToInner,
    InnerToOutward,
}

/// Boundary point with a velocity on the outer energy shell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceState {
    pub xi: f64,
    pub v: Vec2,
    pub orientation: Orientation,
}

impl SurfaceState {
    /// Outward state leaving `gamma(xi)` at angle `alpha` from the normal,
    /// positive towards the tangent.
    pub fn outward_at_angle(curve: &BoundaryCurve, params: &BilliardParams, xi: f64, alpha: f64) -> Self {
        let f = curve.frame(xi);
        let speed = (2.0 * params.v_outer(&f.point)).sqrt();
        Self { xi: curve.wrap(xi), v: (f.normal * alpha.cos() + f.tangent * alpha.sin()) * speed, orientation: Orientation::Outward }
    }

    /// Outward state with tangential velocity component `a`.
    pub fn outward_with_tangential(curve: &BoundaryCurve, params: &BilliardParams, xi: f64, a: f64) -> Result<Self, DynamicsErrorKind> {
        let f = curve.frame(xi);
        let b2 = 2.0 * params.v_outer(&f.point) - a * a;
        if b2 < 0.0 {
            return Err(DynamicsErrorKind::EnergyShellMismatch(b2));
        }
        Ok(Self { xi: curve.wrap(xi), v: f.tangent * a + f.normal * b2.sqrt(), orientation: Orientation::Outward })
    }

    /// Validate the energy shell and the orientation.
    pub fn checked(curve: &BoundaryCurve, params: &BilliardParams, xi: f64, v: Vec2) -> Result<Self, DynamicsErrorKind> {
        let f = curve.frame(xi);
        let res = 0.5 * v.norm_squared() - params.v_outer(&f.point);
        if res.abs() > ENERGY_TOL * params.cal_e.max(1.0) {
            return Err(DynamicsErrorKind::EnergyShellMismatch(res));
        }
        let bn = v.dot(&f.normal);
        if bn.abs() < GRAZING_TOL * v.norm() {
            return Err(DynamicsErrorKind::Grazing { xi });
        }
        let orientation = if bn > 0.0 { Orientation::Outward } else { Orientation::Inward };
        Ok(Self { xi: curve.wrap(xi), v, orientation })
    }

    pub fn tangential(&self, curve: &BoundaryCurve) -> f64 {
        self.v.dot(&curve.frame(self.xi).tangent)
    }

    /// Time reversal.
    pub fn reversed(&self) -> Self {
        let orientation = match self.orientation {
            Orientation::Outward => Orientation::Inward,
            Orientation::Inward => Orientation::Outward,
        };
        Self { xi: self.xi, v: -self.v, orientation }
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DynamicsErrorKind {
    #[error("velocity off the energy shell by {0:e}")]
    EnergyShellMismatch(f64),
    #[error("total internal reflection at xi = {xi}")]
    TotalInternalReflection { xi: f64 },
    #[error("tangential grazing at xi = {xi}")]
    Grazing { xi: f64 },
    #[error("outer arc does not re-enter the domain")]
    Escape,
    #[error("inner arc does not leave the domain")]
    NoExit,
    #[error("crossing at xi = {xi} outside the admissible windows")]
    WrongWindow { xi: f64 },
    #[error("exit at xi = {xi} fails the critical-angle condition")]
    CriticalAngleTrap { xi: f64 },
    #[error("wrong orientation for this step")]
    WrongOrientation,
    #[error("arc: {0}")]
    Arc(String),
}

impl From<ArcError> for DynamicsErrorKind {
    fn from(e: ArcError) -> Self {
        DynamicsErrorKind::Arc(e.to_string())
    }
}

/// Whatever was computed before a transit failed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PartialTransit {
    pub entry: Option<SurfaceState>,
    pub reentry_xi: Option<f64>,
    pub outer_duration: Option<f64>,
    pub exit_xi: Option<f64>,
    pub inner_duration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("{kind}")]
pub struct DynamicsError {
    pub kind: DynamicsErrorKind,
    pub partial: PartialTransit,
}

/// One application of `F` (or `F^-1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitRecord {
    pub entry: SurfaceState,
    pub exit: SurfaceState,
    /// Boundary parameter where the outer arc meets the boundary again.
    pub reentry_xi: f64,
    pub outer_duration: f64,
    pub inner_duration: f64,
    /// Inner-shell velocities just after entering and just before leaving.
    pub inner_entry_velocity: Vec2,
    pub inner_exit_velocity: Vec2,
    /// Interval symbols at entry, re-entry and exit.
    pub symbols: [Option<usize>; 3],
    pub collision: bool,
    /// A crossing fell outside the interval system (permissive mode only).
    pub outside_windows: bool,
    pub backward: bool,
    #[serde(skip)]
    pub outer_flow: Option<OuterFlow>,
    #[serde(skip)]
    pub inner_flow: Option<InnerFlow>,
    #[serde(skip)]
    pub inner_tau: f64,
}

impl TransitRecord {
    /// Samples of the transit in forward time, `per_arc` points per arc.
    /// Backward records are not sampled.
    pub fn samples(&self, per_arc: usize, s_offset: f64) -> Vec<ArcSample> {
        let (Some(of), Some(inf)) = (self.outer_flow, self.inner_flow) else {
            return Vec::new();
        };
        if self.backward {
            return Vec::new();
        }
        let n = per_arc.max(2);
        let mut out = Vec::with_capacity(2 * n);
        for k in 0..n {
            let s = self.outer_duration * k as f64 / (n - 1) as f64;
            out.push(ArcSample { s: s_offset + s, position: of.position(s), velocity: of.velocity(s), regime: Regime::Outer });
        }
        let t0 = s_offset + self.outer_duration;
        for k in 0..n {
            let tau = self.inner_tau * k as f64 / (n - 1) as f64;
            out.push(ArcSample {
                s: t0 + inf.s_of_tau(tau),
                position: inf.position_tau(tau),
                velocity: inf.velocity_tau(tau),
                regime: Regime::Inner,
            });
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DynamicsOptions {
    /// Keep going when a crossing falls outside the interval system.
    pub permissive: bool,
}

/// Refract a velocity across the boundary at `xi`, keeping the tangential
/// component and the sign of the normal component.
pub fn refract(
    params: &BilliardParams,
    curve: &BoundaryCurve,
    v: Vec2,
    xi: f64,
    direction: Direction,
) -> Result<Vec2, DynamicsErrorKind> {
    let f = curve.frame(xi);
    let ve = params.v_outer(&f.point);
    let vi = params.v_inner_unchecked(&f.point);
    let (from, to) = match direction {
        Direction::OutwardToInner => (ve, vi),
        Direction::InnerToOutward => (vi, ve),
    };
    let res = 0.5 * v.norm_squared() - from;
    if res.abs() > ENERGY_TOL * from.max(1.0) {
        return Err(DynamicsErrorKind::EnergyShellMismatch(res));
    }
    let a = v.dot(&f.tangent);
    let b = v.dot(&f.normal);
    let b2 = 2.0 * to - a * a;
    if b2 < 0.0 {
        return Err(DynamicsErrorKind::TotalInternalReflection { xi });
    }
    Ok(f.tangent * a + f.normal * (b.signum() * b2.sqrt()))
}

/// First `t > 0` where `g` changes from the departure side (sign of `g` just
/// after `0`, given by `leaving_positive`) to the other side.
fn first_crossing<G: Fn(f64) -> f64>(g: G, step: f64, limit: f64, leaving_positive: bool) -> Option<f64> {
    let arrived = |v: f64| if leaving_positive { v <= 0.0 } else { v >= 0.0 };
    let mut prev = 0.0;
    let mut t = step;
    let mut first = true;
    while t <= limit + step {
        let v = g(t);
        if arrived(v) {
            let mut lo = prev;
            if first {
                // the crossing at 0 itself must not be picked up
                let sub = step / FIRST_STEP_SUBDIVISIONS as f64;
                let k = (1..FIRST_STEP_SUBDIVISIONS).find(|&k| !arrived(g(k as f64 * sub)))?;
                let mut k_last = k;
                while k_last + 1 < FIRST_STEP_SUBDIVISIONS && !arrived(g((k_last + 1) as f64 * sub)) {
                    k_last += 1;
                }
                lo = k_last as f64 * sub;
                return Some(refine_root(lo, lo + sub, &g, CROSSING_XTOL));
            }
            return Some(refine_root(lo, t, &g, CROSSING_XTOL));
        }
        prev = t;
        t += step;
        first = false;
    }
    None
}

struct OuterLeg {
    flow: OuterFlow,
    duration: f64,
    xi: f64,
    v: Vec2,
}

/// Outward outer-shell state to the next boundary crossing (inward).
fn outer_leg(curve: &BoundaryCurve, params: &BilliardParams, state: &SurfaceState) -> Result<OuterLeg, DynamicsErrorKind> {
    let z0 = curve.point(state.xi);
    let flow = propagate_outer(params, z0, state.v)?;
    let period = flow.period();
    let s1 = first_crossing(|s| curve.implicit(&flow.position(s)), OUTER_STEP_FRACTION * period, period, true)
        .ok_or(DynamicsErrorKind::Escape)?;
    let z1 = flow.position(s1);
    let xi = curve.xi_of_point(&z1);
    let v = flow.velocity(s1);
    let n = curve.frame(xi).normal;
    if v.dot(&n).abs() < GRAZING_TOL * v.norm() {
        return Err(DynamicsErrorKind::Grazing { xi });
    }
    Ok(OuterLeg { flow, duration: s1, xi, v })
}

struct InnerLeg {
    flow: InnerFlow,
    tau: f64,
    duration: f64,
    entry_velocity: Vec2,
    exit_velocity: Vec2,
    xi: f64,
    v_out: Vec2,
    collision: bool,
}

/// Inward outer-shell state at `xi` through the inner arc to an outward
/// outer-shell state.
fn inner_leg(curve: &BoundaryCurve, params: &BilliardParams, xi: f64, v: Vec2) -> Result<InnerLeg, DynamicsErrorKind> {
    let p = curve.point(xi);
    let entry_velocity = refract(params, curve, v, xi, Direction::OutwardToInner)?;
    let flow = propagate_inner(params, p, entry_velocity)?;
    let (tau_star, _) = flow.closest_approach();
    let scale = if tau_star.is_finite() && tau_star > 0.0 { 2.0 * tau_star } else { 1.0 };
    let step = 0.01 * scale.max(1.0);
    let limit = 2.0 * scale + 40.0;
    let tau = first_crossing(|t| curve.implicit(&flow.position_tau(t)), step, limit, false).ok_or(DynamicsErrorKind::NoExit)?;
    let z2 = flow.position_tau(tau);
    let xi2 = curve.xi_of_point(&z2);
    let exit_velocity = flow.velocity_tau(tau);
    let n = curve.frame(xi2).normal;
    if exit_velocity.dot(&n).abs() < GRAZING_TOL * exit_velocity.norm() {
        return Err(DynamicsErrorKind::Grazing { xi: xi2 });
    }
    let v_out = refract(params, curve, exit_velocity, xi2, Direction::InnerToOutward).map_err(|e| match e {
        DynamicsErrorKind::TotalInternalReflection { xi } => DynamicsErrorKind::CriticalAngleTrap { xi },
        other => other,
    })?;
    let (_, wmin) = flow.closest_approach();
    let collision = tau_star > 0.0 && tau_star < tau && wmin <= 1e-6 * flow.w(0.0).norm();
    Ok(InnerLeg { flow, tau, duration: flow.s_of_tau(tau), entry_velocity, exit_velocity, xi: xi2, v_out, collision })
}

fn fail(kind: DynamicsErrorKind, partial: &PartialTransit) -> DynamicsError {
    DynamicsError { kind, partial: partial.clone() }
}

/// Symbol check for a crossing. With `allowed` set, the symbol must also be
/// one of those.
fn window(
    system: &IntervalSystem,
    curve: &BoundaryCurve,
    xi: f64,
    allowed: Option<&[usize]>,
    opts: &DynamicsOptions,
    outside: &mut bool,
) -> Result<Option<usize>, DynamicsErrorKind> {
    let sym = system.symbol_of(curve, xi);
    let ok = match (sym, allowed) {
        (None, _) => false,
        (Some(s), Some(a)) => a.contains(&s),
        (Some(_), None) => true,
    };
    if !ok {
        if opts.permissive {
            *outside = true;
        } else {
            return Err(DynamicsErrorKind::WrongWindow { xi });
        }
    }
    Ok(sym)
}

/// The first-return map `F`: outer arc, refraction, inner arc, refraction.
pub fn return_map(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    state: &SurfaceState,
    opts: &DynamicsOptions,
) -> Result<(SurfaceState, TransitRecord), DynamicsError> {
    let mut partial = PartialTransit { entry: Some(*state), ..Default::default() };
    if state.orientation != Orientation::Outward {
        return Err(fail(DynamicsErrorKind::WrongOrientation, &partial));
    }
    let mut outside = false;
    let s0 = window(system, curve, state.xi, None, opts, &mut outside).map_err(|k| fail(k, &partial))?;
    let outer = outer_leg(curve, params, state).map_err(|k| fail(k, &partial))?;
    partial.reentry_xi = Some(outer.xi);
    partial.outer_duration = Some(outer.duration);
    let s1 = window(system, curve, outer.xi, None, opts, &mut outside).map_err(|k| fail(k, &partial))?;
    let inner = inner_leg(curve, params, outer.xi, outer.v).map_err(|k| fail(k, &partial))?;
    partial.exit_xi = Some(inner.xi);
    partial.inner_duration = Some(inner.duration);
    let na = s1.map(|s| system.na(s).to_vec());
    let s2 = window(system, curve, inner.xi, na.as_deref(), opts, &mut outside).map_err(|k| fail(k, &partial))?;
    let exit = SurfaceState { xi: curve.wrap(inner.xi), v: inner.v_out, orientation: Orientation::Outward };
    let record = TransitRecord {
        entry: *state,
        exit,
        reentry_xi: curve.wrap(outer.xi),
        outer_duration: outer.duration,
        inner_duration: inner.duration,
        inner_entry_velocity: inner.entry_velocity,
        inner_exit_velocity: inner.exit_velocity,
        symbols: [s0, s1, s2],
        collision: inner.collision,
        outside_windows: outside,
        backward: false,
        outer_flow: Some(outer.flow),
        inner_flow: Some(inner.flow),
        inner_tau: inner.tau,
    };
    Ok((exit, record))
}

/// `F^-1` by time reversal: reverse the state, run the inner arc then the
/// outer arc, reverse the result.
pub fn inverse_return_map(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    state: &SurfaceState,
    opts: &DynamicsOptions,
) -> Result<(SurfaceState, TransitRecord), DynamicsError> {
    let mut partial = PartialTransit { entry: Some(*state), ..Default::default() };
    if state.orientation != Orientation::Outward {
        return Err(fail(DynamicsErrorKind::WrongOrientation, &partial));
    }
    let mut outside = false;
    let s2 = window(system, curve, state.xi, None, opts, &mut outside).map_err(|k| fail(k, &partial))?;
    let rev = state.reversed();
    let inner = inner_leg(curve, params, rev.xi, rev.v).map_err(|k| fail(k, &partial))?;
    partial.reentry_xi = Some(inner.xi);
    partial.inner_duration = Some(inner.duration);
    let na = s2.map(|s| system.na(s).to_vec());
    let s1 = window(system, curve, inner.xi, na.as_deref(), opts, &mut outside).map_err(|k| fail(k, &partial))?;
    let mid = SurfaceState { xi: inner.xi, v: inner.v_out, orientation: Orientation::Outward };
    let outer = outer_leg(curve, params, &mid).map_err(|k| fail(k, &partial))?;
    partial.exit_xi = Some(outer.xi);
    partial.outer_duration = Some(outer.duration);
    let s0 = window(system, curve, outer.xi, None, opts, &mut outside).map_err(|k| fail(k, &partial))?;
    let prev = SurfaceState { xi: curve.wrap(outer.xi), v: -outer.v, orientation: Orientation::Outward };
    let record = TransitRecord {
        entry: *state,
        exit: prev,
        reentry_xi: curve.wrap(inner.xi),
        outer_duration: outer.duration,
        inner_duration: inner.duration,
        inner_entry_velocity: -inner.exit_velocity,
        inner_exit_velocity: -inner.entry_velocity,
        symbols: [s0, s1, s2],
        collision: inner.collision,
        outside_windows: outside,
        backward: true,
        outer_flow: Some(outer.flow),
        inner_flow: Some(inner.flow),
        inner_tau: inner.tau,
    };
    Ok((prev, record))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFailure {
    pub step: usize,
    pub error: DynamicsError,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trace {
    /// `F^j(state)` for `j = 0..`, forward.
    pub forward: Vec<SurfaceState>,
    /// `F^-j(state)` for `j = 1..`, backward.
    pub backward: Vec<SurfaceState>,
    pub forward_records: Vec<TransitRecord>,
    pub backward_records: Vec<TransitRecord>,
    /// `chi(F^j(state))` for `j = -backward.len() ..= forward.len() - 1`.
    pub window: Vec<Option<usize>>,
    /// Index of `j = 0` in `window`.
    pub offset: usize,
    pub forward_failure: Option<StepFailure>,
    pub backward_failure: Option<StepFailure>,
    pub permissive: bool,
}

impl Trace {
    /// The coding as a word window, when every visited point has a symbol.
    pub fn word_window(&self) -> Option<WordWindow> {
        let symbols: Option<Vec<usize>> = self.window.iter().cloned().collect();
        symbols.map(|s| WordWindow::finite(s, self.offset))
    }

    pub fn samples(&self, per_arc: usize) -> Vec<ArcSample> {
        let mut out = Vec::new();
        let mut s = 0.0;
        for r in &self.forward_records {
            out.extend(r.samples(per_arc, s));
            s += r.outer_duration + r.inner_duration;
        }
        out
    }
}

/// Iterate `F` forward `n_forward` times and `F^-1` backward `n_backward`
/// times, stopping each direction at its first error.
pub fn trace(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    state: &SurfaceState,
    n_forward: usize,
    n_backward: usize,
    opts: &DynamicsOptions,
) -> Trace {
    let mut forward = vec![*state];
    let mut forward_records = Vec::new();
    let mut forward_failure = None;
    for step in 0..n_forward {
        match return_map(curve, params, system, forward.last().unwrap(), opts) {
            Ok((next, rec)) => {
                forward.push(next);
                forward_records.push(rec);
            }
            Err(error) => {
                forward_failure = Some(StepFailure { step, error });
                break;
            }
        }
    }
    let mut backward = Vec::new();
    let mut backward_records = Vec::new();
    let mut backward_failure = None;
    let mut cur = *state;
    for step in 0..n_backward {
        match inverse_return_map(curve, params, system, &cur, opts) {
            Ok((prev, rec)) => {
                backward.push(prev);
                backward_records.push(rec);
                cur = prev;
            }
            Err(error) => {
                backward_failure = Some(StepFailure { step, error });
                break;
            }
        }
    }
    let window: Vec<Option<usize>> = backward
        .iter()
        .rev()
        .chain(forward.iter())
        .map(|s| system.symbol_of(curve, s.xi))
        .collect();
    Trace {
        offset: backward.len(),
        forward,
        backward,
        forward_records,
        backward_records,
        window,
        forward_failure,
        backward_failure,
        permissive: opts.permissive,
    }
}

/// Trajectory CSV with a crossing marker on the first and last sample of
/// every arc.
pub fn write_trajectory_csv<W: Write>(samples: &[ArcSample], per_arc: usize, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "x", "y", "vx", "vy", "regime", "crossing"])?;
    let n = per_arc.max(2);
    for (k, p) in samples.iter().enumerate() {
        let regime = match p.regime {
            Regime::Outer => "outer",
            Regime::Inner => "inner",
        };
        let crossing = if k % n == 0 || k % n == n - 1 { "1" } else { "0" };
        w.write_record([
            format!("{:.16e}", p.s),
            format!("{:.16e}", p.position.x),
            format!("{:.16e}", p.position.y),
            format!("{:.16e}", p.velocity.x),
            format!("{:.16e}", p.velocity.y),
            regime.to_string(),
            crossing.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
