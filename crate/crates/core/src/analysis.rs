//! Experiments built on the solvers: saddle spectra of homothetic fixed
//! points, heteroclinic approximations, threshold scans and sensitivity.

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arcs::{solve_inner_arc, HomotopyClass};
use crate::dynamics::{return_map, DynamicsError, DynamicsOptions, SurfaceState};
use crate::geometry::{BoundaryCurve, ConfigKind};
use crate::jacobi::Mode;
use crate::model::BilliardParams;
use crate::shooting::{miranda_check_cached, realize_fixed_ends, MirandaCache, realize_periodic, Concatenation, ShootingError};
use crate::words::{word_distance, DistanceBounds, IntervalSystem, Word, WordKind, WordWindow};

pub const FIXED_POINT_TOL: f64 = 1e-6;
pub const SADDLE_STEPS: [f64; 2] = [1e-6, 1e-7];
const PARABOLIC_TOL: f64 = 1e-6;
pub const DETERMINANT_TOL: f64 = 5e-3;
const CONTAINMENT_GRID: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("central configuration {0} is degenerate")]
    Degenerate(usize),
    #[error("unknown central configuration {0}")]
    UnknownConfiguration(usize),
    #[error("return map moves the homothetic point by {0:e}")]
    FixedPointDrift(f64),
    #[error("return map failed: {0}")]
    Dynamics(String),
    #[error(transparent)]
    Shooting(#[from] ShootingError),
    #[error("{0}")]
    Invalid(String),
}

impl From<DynamicsError> for AnalysisError {
    fn from(e: DynamicsError) -> Self {
        AnalysisError::Dynamics(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Saddle,
    Elliptic,
    Parabolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleReport {
    pub cc_index: usize,
    pub xi_bar: f64,
    pub h: f64,
    /// Row-major Jacobian of `F` in `(xi, a)` with `a = v.t`.
    pub jacobian: [[f64; 2]; 2],
    pub determinant: f64,
    pub trace: f64,
    /// Real eigenvalues sorted by modulus (complex pairs give `None`).
    pub eigenvalues: Option<[f64; 2]>,
    /// Modulus of a complex pair.
    pub complex_modulus: Option<f64>,
    pub classification: Classification,
    pub fixed_point_drift: f64,
}

impl SaddleReport {
    /// Whether `det J = 1` holds within [`DETERMINANT_TOL`].
    pub fn area_preserving(&self) -> bool {
        (self.determinant - 1.0).abs() <= DETERMINANT_TOL
    }
}

impl SaddleReport {
    /// The expanding eigenvalue, for saddles.
    pub fn lambda(&self) -> Option<f64> {
        self.eigenvalues.map(|e| e[1])
    }
}

fn map_in_chart(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    xi: f64,
    a: f64,
) -> Result<(f64, f64), AnalysisError> {
    let st = SurfaceState::outward_with_tangential(curve, params, xi, a).map_err(|e| AnalysisError::Dynamics(e.to_string()))?;
    let (next, _) = return_map(curve, params, system, &st, &DynamicsOptions { permissive: true })?;
    // unwrap the parameter next to the input
    Ok((xi + curve.param_diff(xi, next.xi), next.tangential(curve)))
}

/// Linearization of the return map at the homothetic fixed point of
/// configuration `cc_index` (1-based, as the interval symbols).
pub fn saddle_spectrum(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    cc_index: usize,
) -> Result<SaddleReport, AnalysisError> {
    if cc_index == 0 || cc_index > system.len() {
        return Err(AnalysisError::UnknownConfiguration(cc_index));
    }
    if system.kinds[cc_index - 1] == ConfigKind::Degenerate {
        return Err(AnalysisError::Degenerate(cc_index));
    }
    let xi_bar = system.center(cc_index);
    let (x0, a0) = map_in_chart(curve, params, system, xi_bar, 0.0)?;
    let drift = (x0 - xi_bar).abs().max(a0.abs());
    if drift > FIXED_POINT_TOL {
        return Err(AnalysisError::FixedPointDrift(drift));
    }
    let jac_at = |d: f64| -> Result<Matrix2<f64>, AnalysisError> {
        let (xp, ap) = map_in_chart(curve, params, system, xi_bar + d, 0.0)?;
        let (xm, am) = map_in_chart(curve, params, system, xi_bar - d, 0.0)?;
        let (xq, aq) = map_in_chart(curve, params, system, xi_bar, d)?;
        let (xr, ar) = map_in_chart(curve, params, system, xi_bar, -d)?;
        Ok(Matrix2::new(
            (xp - xm) / (2.0 * d),
            (xq - xr) / (2.0 * d),
            (ap - am) / (2.0 * d),
            (aq - ar) / (2.0 * d),
        ))
    };
    let (h1, h2) = (SADDLE_STEPS[0], SADDLE_STEPS[1]);
    let r = (h1 / h2).powi(2);
    let j = (jac_at(h2)? * r - jac_at(h1)?) / (r - 1.0);
    let det = j.determinant();
    let tr = j.trace();
    let disc = tr * tr - 4.0 * det;
    let (eigenvalues, complex_modulus, classification) = if disc >= 0.0 {
        let sq = disc.sqrt();
        // the larger-modulus root first, the other from the product
        let big = if tr >= 0.0 { 0.5 * (tr + sq) } else { 0.5 * (tr - sq) };
        let small = if big != 0.0 { det / big } else { 0.5 * (tr - sq) };
        let class = if big.abs() > 1.0 + PARABOLIC_TOL && small.abs() < 1.0 {
            Classification::Saddle
        } else {
            Classification::Parabolic
        };
        (Some([small, big]), None, class)
    } else {
        (None, Some(det.abs().sqrt()), Classification::Elliptic)
    };
    Ok(SaddleReport {
        cc_index,
        xi_bar,
        h: params.h,
        jacobian: [[j[(0, 0)], j[(0, 1)]], [j[(1, 0)], j[(1, 1)]]],
        determinant: det,
        trace: tr,
        eigenvalues,
        complex_modulus,
        classification,
        fixed_point_drift: drift,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HeteroclinicReport {
    pub from: usize,
    pub to: usize,
    pub pad: usize,
    pub bridge: Vec<usize>,
    pub word: Word,
    pub concatenation: Concatenation,
    /// `|xi_{2k} - xi_bar_from|` for the leading padding symbols.
    pub leading_distances: Vec<f64>,
    /// `|xi_{2k} - xi_bar_to|` for the trailing padding symbols, in order
    /// away from the bridge.
    pub trailing_distances: Vec<f64>,
    /// Geometric mean per-symbol contraction of the trailing distances,
    /// away from the bridge and off the pinned end.
    pub trailing_rate: Option<f64>,
    /// Same for the leading block, towards the start.
    pub leading_rate: Option<f64>,
}

/// Geometric mean of successive ratios, skipping the last `skip_end` steps.
fn geometric_rate(d: &[f64], skip_end: usize) -> Option<f64> {
    if d.len() < 2 + skip_end {
        return None;
    }
    let used = &d[..d.len() - skip_end];
    let ratios: Vec<f64> = used.windows(2).filter(|w| w[0] > 0.0 && w[1] > 0.0).map(|w| (w[1] / w[0]).ln()).collect();
    if ratios.is_empty() {
        return None;
    }
    Some((ratios.iter().sum::<f64>() / ratios.len() as f64).exp())
}

/// Realize `i^pad ++ bridge ++ j^pad` with ends pinned at the two
/// configurations and measure how the padding shadows them.
pub fn heteroclinic_realize(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    i: usize,
    j: usize,
    pad: usize,
    bridge: &[usize],
) -> Result<HeteroclinicReport, AnalysisError> {
    if i == j {
        return Err(AnalysisError::Invalid("heteroclinic ends must differ".into()));
    }
    for &k in [i, j].iter() {
        if k == 0 || k > system.len() {
            return Err(AnalysisError::UnknownConfiguration(k));
        }
        if system.kinds[k - 1] == ConfigKind::Degenerate {
            return Err(AnalysisError::Degenerate(k));
        }
    }
    let mut symbols = vec![i; pad];
    symbols.extend_from_slice(bridge);
    symbols.extend(std::iter::repeat_n(j, pad));
    let word = Word::finite(symbols);
    let conc = realize_fixed_ends(curve, params, system, &word, system.center(i), system.center(j))?;
    let n = word.len();
    let (ci, cj) = (system.center(i), system.center(j));
    let leading: Vec<f64> = (0..pad).rev().map(|k| curve.param_diff(ci, conc.nodes[2 * k]).abs()).collect();
    let trailing: Vec<f64> = (n - pad..n).map(|k| curve.param_diff(cj, conc.nodes[2 * k]).abs()).collect();
    Ok(HeteroclinicReport {
        from: i,
        to: j,
        pad,
        bridge: bridge.to_vec(),
        trailing_rate: geometric_rate(&trailing, 2),
        leading_rate: geometric_rate(&leading, 2),
        leading_distances: leading,
        trailing_distances: trailing,
        word,
        concatenation: conc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Inner arcs between admissible windows stay inside the domain.
    Containment,
    /// Miranda face signs hold for every scanned word.
    Miranda,
    /// Every homothetic fixed point is a saddle.
    Saddle,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Containment, Criterion::Miranda, Criterion::Saddle];

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Containment => "containment",
            Criterion::Miranda => "miranda",
            Criterion::Saddle => "saddle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub h: f64,
    pub criterion: Criterion,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionThreshold {
    pub criterion: Criterion,
    /// Smallest grid value from which the criterion holds on the rest of the
    /// grid.
    pub threshold: Option<f64>,
    /// Grid values where the criterion holds but fails at some larger value.
    pub monotonicity_violations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub h_grid: Vec<f64>,
    pub words: Vec<Word>,
    /// The Euclidean change-sign property `r'(lo) r'(hi) < 0` on every
    /// interval, which does not depend on `h`.
    pub euclidean_change_sign: bool,
    pub rows: Vec<ScanRow>,
    pub thresholds: Vec<CriterionThreshold>,
}

impl ThresholdReport {
    pub fn threshold(&self, c: Criterion) -> Option<f64> {
        self.thresholds.iter().find(|t| t.criterion == c).and_then(|t| t.threshold)
    }

    pub fn passes(&self, h: f64, c: Criterion) -> Option<bool> {
        self.rows.iter().find(|r| r.h == h && r.criterion == c).map(|r| r.pass)
    }
}

pub fn euclidean_change_sign(curve: &BoundaryCurve, system: &IntervalSystem) -> bool {
    system.intervals.iter().all(|iv| curve.radius_derivatives(iv.lo)[1] * curve.radius_derivatives(iv.hi)[1] < 0.0)
}

/// All inner arcs between sampled endpoints of admissible interval pairs
/// stay inside the domain.
pub fn inner_containment(curve: &BoundaryCurve, params: &BilliardParams, system: &IntervalSystem) -> bool {
    (1..=system.len()).all(|i| {
        system.na(i).iter().all(|&j| {
            system.interval(i).samples(CONTAINMENT_GRID).all(|a| {
                system.interval(j).samples(CONTAINMENT_GRID).all(|b| {
                    solve_inner_arc(params, curve.point(a), curve.point(b), HomotopyClass::Tnt)
                        .map(|arc| arc.is_contained(curve))
                        .unwrap_or(false)
                })
            })
        })
    })
}

fn all_saddles(curve: &BoundaryCurve, params: &BilliardParams, system: &IntervalSystem) -> bool {
    (1..=system.len()).all(|k| {
        saddle_spectrum(curve, params, system, k).map(|r| r.classification == Classification::Saddle).unwrap_or(false)
    })
}

/// Evaluate the threshold criteria on a grid of `h` values.
pub fn threshold_scan(
    curve: &BoundaryCurve,
    params_base: &BilliardParams,
    system: &IntervalSystem,
    words: &[Word],
    h_grid: &[f64],
) -> ThresholdReport {
    let mut grid = h_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rows: Vec<ScanRow> = grid
        .par_iter()
        .flat_map_iter(|&h| {
            let p = params_base.with_h(h);
            let cache = MirandaCache::new();
            let miranda = words.iter().all(|w| {
                let mode = if w.kind == WordKind::Periodic { Mode::Periodic } else { Mode::FixedEnds };
                miranda_check_cached(curve, &p, system, w, mode, None, &cache).map(|r| r.pass).unwrap_or(false)
            });
            [
                ScanRow { h, criterion: Criterion::Containment, pass: inner_containment(curve, &p, system) },
                ScanRow { h, criterion: Criterion::Miranda, pass: miranda },
                ScanRow { h, criterion: Criterion::Saddle, pass: all_saddles(curve, &p, system) },
            ]
        })
        .collect();
    let thresholds = Criterion::ALL
        .iter()
        .map(|&c| {
            let passes: Vec<bool> = grid.iter().map(|&h| rows.iter().any(|r| r.h == h && r.criterion == c && r.pass)).collect();
            let start = (0..=passes.len()).rev().take_while(|&k| k == passes.len() || passes[k]).last().unwrap();
            let threshold = grid.get(start).copied();
            let monotonicity_violations = (0..start).filter(|&k| passes[k]).map(|k| grid[k]).collect();
            CriterionThreshold { criterion: c, threshold, monotonicity_violations }
        })
        .collect();
    ThresholdReport {
        h_grid: grid,
        words: words.to_vec(),
        euclidean_change_sign: euclidean_change_sign(curve, system),
        rows,
        thresholds,
    }
}

/// `n` points log-spaced from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub word1: Word,
    pub word2: Word,
    pub depth: usize,
    /// Largest `m` such that the windows agree on `|k| <= m` (`None` if they
    /// differ at `k = 0`).
    pub agreement: Option<usize>,
    pub distance: DistanceBounds,
    /// State at `k = 0` of each realization, as `(xi, a)`.
    pub state1: (f64, f64),
    pub state2: (f64, f64),
    pub xi_separation: f64,
    pub separation: f64,
}

fn window_around(word: &Word, depth: usize) -> (Vec<usize>, usize) {
    match word.kind {
        WordKind::Periodic => (word.symbols.clone(), 0),
        WordKind::Finite => {
            let c = word.len() / 2;
            let lo = c.saturating_sub(depth);
            let hi = (c + depth + 1).min(word.len());
            (word.symbols[lo..hi].to_vec(), c - lo)
        }
    }
}

fn realize_window(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    word: &Word,
    symbols: &[usize],
    center: usize,
) -> Result<(f64, f64), AnalysisError> {
    let conc = match word.kind {
        WordKind::Periodic => realize_periodic(curve, params, system, word)?,
        WordKind::Finite => {
            let w = Word::finite(symbols.to_vec());
            realize_fixed_ends(curve, params, system, &w, system.center(symbols[0]), system.center(*symbols.last().unwrap()))?
        }
    };
    let xi = conc.nodes[2 * center];
    let a = conc.outer[center].v0().dot(&curve.frame(xi).tangent);
    Ok((xi, a))
}

/// Realize two words and compare their states at `k = 0` against the word
/// distance. Finite words are centred at `len / 2` and truncated to `depth`
/// symbols on each side; periodic words are realized as such.
pub fn sensitivity_probe(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    system: &IntervalSystem,
    word1: &Word,
    word2: &Word,
    depth: usize,
) -> Result<SensitivityReport, AnalysisError> {
    let (s1, c1) = window_around(word1, depth);
    let (s2, c2) = window_around(word2, depth);
    let win = |w: &Word, s: &[usize], c: usize| match w.kind {
        WordKind::Periodic => WordWindow::periodic(w),
        WordKind::Finite => WordWindow::finite(s.to_vec(), c),
    };
    let (w1, w2) = (win(word1, &s1, c1), win(word2, &s2, c2));
    let agree_at = |k: i64| match (w1.symbol_at(k), w2.symbol_at(k)) {
        (Some(a), Some(b)) => a == b,
        _ => false,
    };
    let agreement = (0..=depth as i64).take_while(|&m| agree_at(m) && agree_at(-m)).last().map(|m| m as usize);
    let state1 = realize_window(curve, params, system, word1, &s1, c1)?;
    let state2 = realize_window(curve, params, system, word2, &s2, c2)?;
    let xi_separation = curve.param_diff(state1.0, state2.0).abs();
    Ok(SensitivityReport {
        word1: word1.clone(),
        word2: word2.clone(),
        depth,
        agreement,
        distance: word_distance(&w1, &w2),
        state1,
        state2,
        xi_separation,
        separation: xi_separation.max((state1.1 - state2.1).abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_of_geometric_sequence() {
        let d: Vec<f64> = (0..6).map(|k| 0.3f64.powi(k)).collect();
        assert!((geometric_rate(&d, 0).unwrap() - 0.3).abs() < 1e-12);
        assert!(geometric_rate(&d[..2], 1).is_none());
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1.0, 1000.0, 4);
        assert!((g[1] - 10.0).abs() < 1e-9 && (g[3] - 1000.0).abs() < 1e-9);
    }
}
