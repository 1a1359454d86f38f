//! Realization of admissible words as trajectories.
//!
//! A word `(l_0, ..., l_{n-1})` is realized by an alternating chain of outer
//! and inner arcs whose transition parameters satisfy
//! `xi_{2j}, xi_{2j+1} in I(l_j)`. The chain is a trajectory exactly when the
//! gradient of its total Jacobi length vanishes. The gradient component at
//! node `k` only involves nodes `k - 1`, `k`, `k + 1`, which keeps the
//! Miranda face sampling and the finite-difference Hessian local.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arcs::{ArcSample, InnerArc, OuterArc, Regime};
use crate::geometry::{BoundaryCurve, ConfigKind, ParamInterval};
use crate::jacobi::{arc_regime, inner_with_arc, outer_with_arc, s_regime, second_partials, JacobiError, JacobiValue, Mode};
use crate::model::BilliardParams;
use crate::words::{IntervalSystem, Word};

pub const GRADIENT_TOL: f64 = 1e-10;
pub const SNELL_TOL: f64 = 1e-8;
pub const MAX_NEWTON_ITERATIONS: usize = 50;
/// Finite-difference step of the Hessian, relative to `L`.
pub const JACOBIAN_STEP: f64 = 1e-6;
const MIRANDA_BASE_GRID: usize = 5;
const MIRANDA_MAX_DOUBLINGS: usize = 4;
const UNIQUENESS_GRID: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShootingError {
    #[error("word {0} is not admissible")]
    Inadmissible(String),
    #[error("fixed end point {0} lies outside its interval")]
    EndpointOutside(f64),
    #[error("fixed-ends realization needs a word of length at least 2")]
    WordTooShort,
    #[error(transparent)]
    Arc(#[from] JacobiError),
    #[error("no convergence: best gradient norm {best_gradient:e} after {iterations} iterations")]
    NoConvergence { best_gradient: f64, iterations: usize, best_nodes: Vec<f64> },
    #[error("realized chain fails validation: {0}")]
    Invalid(String),
    #[error("uniqueness check refused: {0}")]
    Refused(String),
}

/// A chain of arcs together with its word, one node per transition.
#[derive(Debug, Clone)]
pub struct Chain<'a> {
    pub curve: &'a BoundaryCurve,
    pub params: &'a BilliardParams,
    pub word: &'a Word,
    pub mode: Mode,
    /// All nodes, including pinned ones.
    pub nodes: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn build(
        curve: &'a BoundaryCurve,
        params: &'a BilliardParams,
        system: &IntervalSystem,
        word: &'a Word,
        mode: Mode,
        ends: Option<(f64, f64)>,
    ) -> Result<Self, ShootingError> {
        if !word.is_admissible(system) {
            return Err(ShootingError::Inadmissible(word.to_string()));
        }
        let n = word.len();
        let m = crate::jacobi::node_count(n, mode);
        let interval_of = |k: usize| -> ParamInterval { *system.interval(word.symbols[k / 2]) };
        let mut nodes: Vec<f64> = (0..m).map(|k| interval_of(k).center()).collect();
        if let Some((a, b)) = ends {
            for (idx, val) in [(0, a), (m - 1, b)] {
                let iv = interval_of(idx);
                let d = curve.param_diff(iv.center(), val);
                if d.abs() > 0.5 * iv.width() + 1e-12 {
                    return Err(ShootingError::EndpointOutside(val));
                }
                nodes[idx] = iv.center() + d;
            }
        }
        let lower = (0..m).map(|k| interval_of(k).lo).collect();
        let upper = (0..m).map(|k| interval_of(k).hi).collect();
        Ok(Self { curve, params, word, mode, nodes, lower, upper })
    }

    /// Indices of the free nodes.
    pub fn free(&self) -> std::ops::Range<usize> {
        match self.mode {
            Mode::Periodic => 0..self.nodes.len(),
            Mode::FixedEnds => 1..self.nodes.len() - 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.free().len()
    }

    pub fn arcs(&self) -> usize {
        crate::jacobi::arc_count(self.nodes.len(), self.mode)
    }

    fn free_values(&self) -> Vec<f64> {
        self.nodes[self.free()].to_vec()
    }

    fn set_free(&mut self, x: &[f64]) {
        let start = self.free().start;
        self.nodes[start..start + x.len()].copy_from_slice(x);
    }

    fn arc_value(&self, k: usize, nodes: &[f64]) -> Result<JacobiValue, JacobiError> {
        let m = nodes.len();
        let regime = arc_regime(k);
        s_regime(self.curve, self.params, regime, nodes[k], nodes[(k + 1) % m])
            .map_err(|source| JacobiError::Arc { index: k, regime, source })
    }

    fn values(&self, nodes: &[f64]) -> Result<Vec<JacobiValue>, JacobiError> {
        (0..self.arcs()).map(|k| self.arc_value(k, nodes)).collect()
    }

    fn gradient_from(&self, values: &[JacobiValue]) -> Vec<f64> {
        let arcs = values.len();
        self.free()
            .map(|i| match self.mode {
                Mode::Periodic => values[(i + arcs - 1) % arcs].d_b + values[i].d_a,
                Mode::FixedEnds => values[i - 1].d_b + values[i].d_a,
            })
            .collect()
    }

    /// Gradient at free variables `x`.
    pub fn gradient_at(&self, x: &[f64]) -> Result<Vec<f64>, JacobiError> {
        let mut nodes = self.nodes.clone();
        let start = self.free().start;
        nodes[start..start + x.len()].copy_from_slice(x);
        Ok(self.gradient_from(&self.values(&nodes)?))
    }

    /// Gradient component at node `i` given its neighbours.
    fn node_gradient(&self, i: usize, prev: f64, here: f64, next: f64) -> Result<f64, JacobiError> {
        let m = self.nodes.len();
        let before = (i + m - 1) % m;
        let r_before = arc_regime(before);
        let r_after = arc_regime(i);
        let a = s_regime(self.curve, self.params, r_before, prev, here)
            .map_err(|source| JacobiError::Arc { index: before, regime: r_before, source })?;
        let b = s_regime(self.curve, self.params, r_after, here, next)
            .map_err(|source| JacobiError::Arc { index: i, regime: r_after, source })?;
        Ok(a.d_b + b.d_a)
    }

    /// Finite-difference Hessian of the total length in the free variables.
    ///
    /// Perturbing node `j` only changes arcs `j - 1` and `j`, hence only the
    /// gradient at nodes `j - 1`, `j`, `j + 1`.
    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>, JacobiError> {
        let mut nodes = self.nodes.clone();
        let start = self.free().start;
        nodes[start..start + x.len()].copy_from_slice(x);
        let m = nodes.len();
        let d = x.len();
        let h = JACOBIAN_STEP * self.curve.length();
        let mut jac = DMatrix::zeros(d, d);
        let periodic = self.mode == Mode::Periodic;
        for (col, j) in self.free().enumerate() {
            let mut plus = nodes.clone();
            let mut minus = nodes.clone();
            plus[j] += h;
            minus[j] -= h;
            let before = (j + m - 1) % m;
            let (bp, bm) = (self.arc_value(before, &plus)?, self.arc_value(before, &minus)?);
            let (ap, am) = (self.arc_value(j, &plus)?, self.arc_value(j, &minus)?);
            let row_of = |node: usize| -> Option<usize> {
                if periodic {
                    Some(node % m)
                } else if node >= 1 && node + 1 < m {
                    Some(node - 1)
                } else {
                    None
                }
            };
            // node j-1 sees d_a of arc j-1
            if let Some(r) = row_of(if periodic { before } else { j.wrapping_sub(1) }) {
                jac[(r, col)] += (bp.d_a - bm.d_a) / (2.0 * h);
            }
            if let Some(r) = row_of(j) {
                jac[(r, col)] += (bp.d_b - bm.d_b + ap.d_a - am.d_a) / (2.0 * h);
            }
            // node j+1 sees d_b of arc j
            if let Some(r) = row_of(j + 1) {
                jac[(r, col)] += (ap.d_b - am.d_b) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    fn clip(&self, x: &mut [f64]) {
        let start = self.free().start;
        for (k, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[start + k], self.upper[start + k]);
        }
    }

    fn bounds(&self, k: usize) -> (f64, f64) {
        let i = self.free().start + k;
        (self.lower[i], self.upper[i])
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tolerance: GRADIENT_TOL, max_iterations: MAX_NEWTON_ITERATIONS }
    }
}

/// One sweep of coordinate-wise bisection (nonlinear Gauss-Seidel): each
/// gradient component is zeroed in its own coordinate with the others fixed.
fn gauss_seidel_sweep(chain: &Chain, x: &mut [f64]) -> Result<(), JacobiError> {
    let m = chain.nodes.len();
    let start = chain.free().start;
    let mut nodes = chain.nodes.clone();
    nodes[start..start + x.len()].copy_from_slice(x);
    for k in 0..x.len() {
        let i = start + k;
        let (prev, next) = (nodes[(i + m - 1) % m], nodes[(i + 1) % m]);
        let (lo, hi) = chain.bounds(k);
        let f = |t: f64| chain.node_gradient(i, prev, t, next);
        let (flo, fhi) = (f(lo)?, f(hi)?);
        if (flo > 0.0) == (fhi > 0.0) {
            continue;
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if (f(mid)? > 0.0) == (fhi > 0.0) {
                b = mid;
            } else {
                a = mid;
            }
        }
        nodes[i] = 0.5 * (a + b);
    }
    let n = x.len();
    x.copy_from_slice(&nodes[start..start + n]);
    Ok(())
}

/// Damped Newton on the gradient with line search on `|G|`, box clipping and
/// a Gauss-Seidel bisection fallback.
fn newton(chain: &Chain, x0: Vec<f64>, opts: &NewtonOptions) -> Result<(Vec<f64>, usize), ShootingError> {
    let mut x = x0;
    chain.clip(&mut x);
    let mut g = chain.gradient_at(&x)?;
    let mut best = (inf_norm(&g), x.clone());
    let mut stalled = 0;
    for it in 0..opts.max_iterations {
        if inf_norm(&g) < opts.tolerance {
            return Ok((x, it));
        }
        let mut accepted = false;
        if let Ok(jac) = chain.hessian(&x) {
            if let Some(step) = jac.lu().solve(&(-DVector::from_column_slice(&g))) {
                let phi = two_norm(&g);
                let mut alpha = 1.0;
                for _ in 0..30 {
                    let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + alpha * s).collect();
                    chain.clip(&mut trial);
                    if let Ok(gt) = chain.gradient_at(&trial) {
                        if two_norm(&gt) < (1.0 - 1e-4 * alpha) * phi {
                            x = trial;
                            g = gt;
                            accepted = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
            }
        }
        if !accepted {
            stalled += 1;
            gauss_seidel_sweep(chain, &mut x)?;
            g = chain.gradient_at(&x)?;
            if stalled > 10 {
                break;
            }
        }
        if inf_norm(&g) < best.0 {
            best = (inf_norm(&g), x.clone());
        }
    }
    if inf_norm(&g) < opts.tolerance {
        return Ok((x, opts.max_iterations));
    }
    let start = chain.free().start;
    let mut best_nodes = chain.nodes.clone();
    best_nodes[start..start + best.1.len()].copy_from_slice(&best.1);
    Err(ShootingError::NoConvergence { best_gradient: best.0, iterations: opts.max_iterations, best_nodes })
}

/// A realized (or candidate) alternating arc chain.
#[derive(Debug, Clone, Serialize)]
pub struct Concatenation {
    pub word: Word,
    pub mode: Mode,
    /// Transition parameters `xi_0, xi_1, ...`.
    pub nodes: Vec<f64>,
    #[serde(skip)]
    pub outer: Vec<OuterArc>,
    #[serde(skip)]
    pub inner: Vec<InnerArc>,
    /// Snell residual at every free junction, in node order.
    pub snell_residuals: Vec<f64>,
    pub max_snell_residual: f64,
    pub total_length: f64,
    pub collisions: Vec<bool>,
    /// Homothetic (radial) outer arcs.
    pub homothetic: Vec<bool>,
    pub inner_contained: Vec<bool>,
    pub outer_durations: Vec<f64>,
    pub inner_durations: Vec<f64>,
    /// Elapsed time at each node, starting from 0 at node 0.
    pub node_times: Vec<f64>,
    /// Some free node sits on a face of the box.
    pub boundary_critical: bool,
    pub iterations: usize,
}

impl Concatenation {
    fn assemble(chain: &Chain, iterations: usize) -> Result<Self, ShootingError> {
        let m = chain.nodes.len();
        let mut outer = Vec::new();
        let mut inner = Vec::new();
        let mut values = Vec::new();
        let mut node_times = vec![0.0];
        for k in 0..chain.arcs() {
            let (a, b) = (chain.nodes[k], chain.nodes[(k + 1) % m]);
            let wrap = |source| JacobiError::Arc { index: k, regime: arc_regime(k), source };
            let (value, duration) = match arc_regime(k) {
                Regime::Outer => {
                    let (arc, v) = outer_with_arc(chain.curve, chain.params, a, b).map_err(wrap)?;
                    outer.push(arc);
                    (v, arc.duration)
                }
                Regime::Inner => {
                    let (arc, v) = inner_with_arc(chain.curve, chain.params, a, b).map_err(wrap)?;
                    inner.push(arc);
                    (v, arc.duration)
                }
            };
            values.push(value);
            node_times.push(node_times.last().unwrap() + duration);
        }
        let snell = chain.gradient_from(&values);
        let scale = 1e-9 * chain.curve.length();
        let start = chain.free().start;
        let boundary_critical = chain.free().enumerate().any(|(k, i)| {
            let (lo, hi) = chain.bounds(k);
            let _ = start;
            chain.nodes[i] - lo < scale || hi - chain.nodes[i] < scale
        });
        let homothetic = (0..outer.len())
            .map(|j| {
                let (a, b) = (chain.nodes[2 * j], chain.nodes[(2 * j + 1) % m]);
                chain.curve.param_diff(a, b).abs() < 1e-6 * chain.curve.length()
            })
            .collect();
        Ok(Self {
            word: chain.word.clone(),
            mode: chain.mode,
            nodes: chain.nodes.iter().map(|&x| chain.curve.wrap(x)).collect(),
            collisions: inner.iter().map(|a| a.collision).collect(),
            homothetic,
            inner_contained: inner.iter().map(|a| a.is_contained(chain.curve)).collect(),
            outer_durations: outer.iter().map(|a| a.duration).collect(),
            inner_durations: inner.iter().map(|a| a.duration).collect(),
            outer,
            inner,
            max_snell_residual: inf_norm(&snell),
            snell_residuals: snell,
            total_length: values.iter().map(|v| v.value).sum(),
            node_times,
            boundary_critical,
            iterations,
        })
    }

    pub fn is_realized(&self) -> bool {
        self.max_snell_residual < SNELL_TOL && self.inner_contained.iter().all(|&c| c)
    }

    /// Number of radial arcs: collisional inner arcs plus homothetic outer
    /// arcs.
    pub fn radial_arcs(&self) -> usize {
        self.collisions.iter().filter(|&&c| c).count() + self.homothetic.iter().filter(|&&h| h).count()
    }

    pub fn period(&self) -> f64 {
        *self.node_times.last().unwrap()
    }

    /// Samples along the whole chain, `per_arc` points per arc.
    pub fn samples(&self, per_arc: usize) -> Vec<ArcSample> {
        let mut out = Vec::new();
        let (mut oi, mut ii) = (0, 0);
        for k in 0..self.outer.len() + self.inner.len() {
            let t0 = self.node_times[k];
            if k % 2 == 0 {
                out.extend(self.outer[oi].samples(per_arc, t0));
                oi += 1;
            } else {
                out.extend(self.inner[ii].samples(per_arc, t0));
                ii += 1;
            }
        }
        out
    }
}

fn finish(chain: &mut Chain, x: Vec<f64>, iterations: usize) -> Result<Concatenation, ShootingError> {
    chain.set_free(&x);
    let c = Concatenation::assemble(chain, iterations)?;
    if c.max_snell_residual >= SNELL_TOL {
        return Err(ShootingError::Invalid(format!("Snell residual {:e}", c.max_snell_residual)));
    }
    if let Some(k) = c.inner_contained.iter().position(|&ok| !ok) {
        return Err(ShootingError::Invalid(format!("inner arc {k} leaves the domain")));
    }
    Ok(c)
}

/// Realize a periodic word, starting Newton from the box centre.
pub fn realize_periodic(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    word: &Word,
) -> Result<Concatenation, ShootingError> {
    realize_periodic_from(curve, params, system, word, None, &NewtonOptions::default())
}

/// Realize a periodic word from an optional starting node vector.
pub fn realize_periodic_from(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    word: &Word,
    start: Option<&[f64]>,
    opts: &NewtonOptions,
) -> Result<Concatenation, ShootingError> {
    let mut chain = Chain::build(curve, params, system, word, Mode::Periodic, None)?;
    let x0 = match start {
        Some(s) => s.to_vec(),
        None => chain.free_values(),
    };
    let (x, it) = newton(&chain, x0, opts)?;
    finish(&mut chain, x, it)
}

/// Realize a word with pinned end points `xi_a in I(l_0)` and
/// `xi_b in I(l_{n-1})`; the `2n - 3` interior transitions are free.
pub fn realize_fixed_ends(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    word: &Word,
    xi_a: f64,
    xi_b: f64,
) -> Result<Concatenation, ShootingError> {
    realize_fixed_ends_from(curve, params, system, word, xi_a, xi_b, None, &NewtonOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn realize_fixed_ends_from(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    word: &Word,
    xi_a: f64,
    xi_b: f64,
    start: Option<&[f64]>,
    opts: &NewtonOptions,
) -> Result<Concatenation, ShootingError> {
    if word.len() < 2 {
        return Err(ShootingError::WordTooShort);
    }
    let finite = Word::finite(word.symbols.clone());
    let mut chain = Chain::build(curve, params, system, &finite, Mode::FixedEnds, Some((xi_a, xi_b)))?;
    let x0 = match start {
        Some(s) => s.to_vec(),
        None => chain.free_values(),
    };
    let (x, it) = newton(&chain, x0, opts)?;
    finish(&mut chain, x, it)
}

/// Sign summary of one gradient component on one face of the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceSigns {
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

impl FaceSigns {
    fn sign(&self) -> i8 {
        if self.min > 0.0 {
            1
        } else if self.max < 0.0 {
            -1
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateFaces {
    pub node: usize,
    pub lower_face: FaceSigns,
    pub upper_face: FaceSigns,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirandaReport {
    pub word: Word,
    pub mode: Mode,
    pub h: f64,
    pub coordinates: Vec<CoordinateFaces>,
    pub pass: bool,
    /// Arc failures met while sampling, as `(node, message)`.
    pub failures: Vec<(usize, String)>,
}

impl MirandaReport {
    /// Some face shows mixed signs (neither pass nor arc failure).
    pub fn inconclusive(&self) -> bool {
        !self.pass && self.failures.is_empty()
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn face_signs<F>(f: F, prev: &[f64], next: &[f64], tied: bool) -> Result<FaceSigns, JacobiError>
where
    F: Fn(f64, f64) -> Result<f64, JacobiError>,
{
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut samples = 0;
    let mut push = |v: f64| {
        min = min.min(v);
        max = max.max(v);
        samples += 1;
    };
    if tied {
        // both neighbours are the same variable (a word of length one)
        for &p in prev {
            push(f(p, p)?);
        }
    } else {
        for &p in prev {
            for &q in next {
                push(f(p, q)?);
            }
        }
    }
    Ok(FaceSigns { min, max, samples })
}

/// Everything a face report depends on: node parity, the three intervals
/// involved, and pinned neighbour values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct FaceKey {
    odd: bool,
    symbols: [usize; 3],
    tied: bool,
    pinned: [Option<u64>; 2],
}

type FaceEntry = Result<(FaceSigns, FaceSigns), String>;

/// Memo of face reports for one curve, parameter set and interval system.
/// Words sharing interval triples share their faces.
#[derive(Debug, Default)]
pub struct MirandaCache {
    faces: Mutex<HashMap<FaceKey, FaceEntry>>,
}

impl MirandaCache {
    pub fn new() -> Self {
        Self::default()
    }
}

fn node_faces(chain: &Chain, i: usize, tied: bool) -> FaceEntry {
    let m = chain.nodes.len();
    let (ip, inx) = ((i + m - 1) % m, (i + 1) % m);
    let free = chain.free();
    let mut n = MIRANDA_BASE_GRID;
    let mut out = None;
    for _ in 0..=MIRANDA_MAX_DOUBLINGS {
        let axis = |j: usize| if free.contains(&j) { grid(chain.lower[j], chain.upper[j], n) } else { vec![chain.nodes[j]] };
        let (prev, next) = (axis(ip), axis(inx));
        let face = |x: f64| face_signs(|p, q| chain.node_gradient(i, p, x, q), &prev, &next, tied).map_err(|e| e.to_string());
        let lower = face(chain.lower[i])?;
        let upper = face(chain.upper[i])?;
        let close = |f: &FaceSigns| f.min.abs().min(f.max.abs()) < 0.1 * (f.max - f.min);
        out = Some((lower, upper));
        if !(close(&lower) || close(&upper)) {
            break;
        }
        n = 2 * n - 1;
    }
    Ok(out.unwrap())
}

/// Poincaré–Miranda face check for the gradient of the total length.
///
/// Component `k` depends on nodes `k - 1`, `k`, `k + 1` only, so each face
/// `x_k = alpha_k` / `x_k = beta_k` is sampled over a grid of the two
/// neighbouring coordinates (pinned neighbours stay fixed). The grid doubles
/// while a face's smallest magnitude is below a tenth of its spread.
pub fn miranda_check(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    word: &Word,
    mode: Mode,
    ends: Option<(f64, f64)>,
) -> Result<MirandaReport, ShootingError> {
    miranda_check_cached(curve, params, system, word, mode, ends, &MirandaCache::new())
}

/// As [`miranda_check`], reusing faces from `cache`. The cache must only be
/// shared between calls with the same curve, parameters and system.
pub fn miranda_check_cached(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    word: &Word,
    mode: Mode,
    ends: Option<(f64, f64)>,
    cache: &MirandaCache,
) -> Result<MirandaReport, ShootingError> {
    let w = match mode {
        Mode::Periodic => word.clone(),
        Mode::FixedEnds => Word::finite(word.symbols.clone()),
    };
    let ends = match (mode, ends) {
        (Mode::FixedEnds, None) => Some((system.center(word.symbols[0]), system.center(*word.symbols.last().unwrap()))),
        (_, e) => e,
    };
    let chain = Chain::build(curve, params, system, &w, mode, ends)?;
    let m = chain.nodes.len();
    let free = chain.free();
    let results: Vec<(usize, FaceEntry)> = free
        .clone()
        .into_par_iter()
        .map(|i| {
            let (ip, inx) = ((i + m - 1) % m, (i + 1) % m);
            let tied = ip == inx;
            let pin = |j: usize| if free.contains(&j) { None } else { Some(chain.nodes[j].to_bits()) };
            let key = FaceKey {
                odd: i % 2 == 1,
                symbols: [w.symbols[ip / 2], w.symbols[i / 2], w.symbols[inx / 2]],
                tied,
                pinned: [pin(ip), pin(inx)],
            };
            if let Some(e) = cache.faces.lock().unwrap().get(&key) {
                return (i, e.clone());
            }
            let entry = node_faces(&chain, i, tied);
            cache.faces.lock().unwrap().insert(key, entry.clone());
            (i, entry)
        })
        .collect();
    let mut coordinates = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results {
        match r {
            Ok((lower, upper)) => {
                let pass = lower.sign() != 0 && upper.sign() != 0 && lower.sign() == -upper.sign();
                coordinates.push(CoordinateFaces { node: i, lower_face: lower, upper_face: upper, pass });
            }
            Err(msg) => failures.push((i, msg)),
        }
    }
    let pass = failures.is_empty() && coordinates.iter().all(|c| c.pass);
    Ok(MirandaReport { word: w, mode, h: params.h, coordinates, pass, failures })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeCurvature {
    pub node: usize,
    /// Extremes of `d^2 S_before / d b^2 + d^2 S_after / d a^2` over the
    /// sampled neighbourhood.
    pub min: f64,
    pub max: f64,
    pub constant_sign: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub word: Word,
    pub h: f64,
    pub radius_convexity_ok: bool,
    pub nodes: Vec<NodeCurvature>,
    pub unique: bool,
}

/// Check that every Miranda component is strictly monotone in its own
/// coordinate over the box, which makes the critical point unique.
pub fn uniqueness_check(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    word: &Word,
) -> Result<UniquenessReport, ShootingError> {
    if system.kinds.contains(&ConfigKind::Degenerate) {
        return Err(ShootingError::Refused("degenerate central configuration".into()));
    }
    let chain = Chain::build(curve, params, system, word, Mode::Periodic, None)?;
    // |gamma| strictly convex (minimum) or concave (maximum) on each interval
    let radius_convexity_ok = word.symbols.iter().all(|&s| {
        let iv = system.interval(s);
        let want = if system.kinds[s - 1] == ConfigKind::StrictMin { 1.0 } else { -1.0 };
        iv.samples(9).all(|xi| want * curve.radius_derivatives(xi)[2] > 0.0)
    });
    let m = chain.nodes.len();
    let nodes: Result<Vec<NodeCurvature>, ShootingError> = (0..m)
        .into_par_iter()
        .map(|i| {
            let (ip, inx) = ((i + m - 1) % m, (i + 1) % m);
            let g = |j: usize| grid(chain.lower[j], chain.upper[j], UNIQUENESS_GRID);
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for &p in &g(ip) {
                for &x in &g(i) {
                    for &q in &g(inx) {
                        let before = second_partials(curve, params, arc_regime(ip), p, x)
                            .map_err(|source| JacobiError::Arc { index: ip, regime: arc_regime(ip), source })?;
                        let after = second_partials(curve, params, arc_regime(i), x, q)
                            .map_err(|source| JacobiError::Arc { index: i, regime: arc_regime(i), source })?;
                        let v = before[2] + after[0];
                        min = min.min(v);
                        max = max.max(v);
                    }
                }
            }
            Ok(NodeCurvature { node: i, min, max, constant_sign: min > 0.0 || max < 0.0 })
        })
        .collect();
    let nodes = nodes?;
    let unique = radius_convexity_ok && nodes.iter().all(|n| n.constant_sign);
    Ok(UniquenessReport { word: word.clone(), h: params.h, radius_convexity_ok, nodes, unique })
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiStartReport {
    pub word: Word,
    pub converged: usize,
    pub attempts: usize,
    /// Largest distance (sup norm, modulo `L`) between any converged
    /// solution and the first one.
    pub spread: f64,
    pub solutions: Vec<Vec<f64>>,
}

/// Restart periodic realization from uniformly random interior seeds.
pub fn multi_start(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    word: &Word,
    seeds: usize,
    rng_seed: u64,
) -> Result<MultiStartReport, ShootingError> {
    let chain = Chain::build(curve, params, system, word, Mode::Periodic, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let starts: Vec<Vec<f64>> = (0..seeds)
        .map(|_| (0..chain.dim()).map(|k| {
            let (lo, hi) = chain.bounds(k);
            rng.gen_range(lo..hi)
        }).collect())
        .collect();
    let opts = NewtonOptions::default();
    let solutions: Vec<Vec<f64>> = starts
        .par_iter()
        .filter_map(|s| realize_periodic_from(curve, params, system, word, Some(s), &opts).ok())
        .map(|c| c.nodes)
        .collect();
    let spread = solutions
        .iter()
        .map(|s| {
            s.iter().zip(solutions[0].iter()).fold(0.0f64, |m, (a, b)| m.max(curve.param_diff(*a, *b).abs()))
        })
        .fold(0.0, f64::max);
    Ok(MultiStartReport { word: word.clone(), converged: solutions.len(), attempts: seeds, spread, solutions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveSpec;
    use crate::words::{build_interval_system, DEFAULT_HALF_WIDTH};

    fn setup() -> (BoundaryCurve, IntervalSystem) {
        let c = BoundaryCurve::new(CurveSpec::ellipse(1.5, 1.0)).unwrap();
        let s = build_interval_system(&c, &c.find_central_configurations(), DEFAULT_HALF_WIDTH).unwrap();
        (c, s)
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let (c, s) = setup();
        let p = BilliardParams::default().with_h(100.0);
        let w = Word::periodic(vec![1, 2]);
        let chain = Chain::build(&c, &p, &s, &w, Mode::Periodic, None).unwrap();
        let x: Vec<f64> = chain.free_values().iter().map(|v| v + 0.01).collect();
        let jac = chain.hessian(&x).unwrap();
        let h = 1e-6;
        for j in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let gp = chain.gradient_at(&xp).unwrap();
            let gm = chain.gradient_at(&xm).unwrap();
            for i in 0..x.len() {
                assert!((jac[(i, j)] - (gp[i] - gm[i]) / (2.0 * h)).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn single_symbol_is_homothetic() {
        let (c, s) = setup();
        let p = BilliardParams::default().with_h(100.0);
        let r = realize_periodic(&c, &p, &s, &Word::periodic(vec![2])).unwrap();
        assert!(c.param_diff(r.nodes[0], s.center(2)).abs() < 1e-8);
        assert!(c.param_diff(r.nodes[1], s.center(2)).abs() < 1e-8);
        assert_eq!(r.collisions, vec![true]);
        assert_eq!(r.homothetic, vec![true]);
    }

    #[test]
    fn inadmissible_word_rejected() {
        let (c, s) = setup();
        let p = BilliardParams::default();
        let e = realize_periodic(&c, &p, &s, &Word::periodic(vec![1, 3])).unwrap_err();
        assert!(matches!(e, ShootingError::Inadmissible(_)));
    }
}
