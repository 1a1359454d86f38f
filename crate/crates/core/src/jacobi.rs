//! Jacobi lengths of arcs and of alternating arc chains.
//!
//! For an arc `z` on the zero-energy shell of a potential `V`, the Jacobi
//! length is `int |z'| sqrt(V(z)) ds`. Its derivatives with respect to the
//! boundary parameters of the endpoints are directional derivatives:
//!
//! ```text
//! d_a S = -sqrt(V(p0)) (v0 / |v0|) . gamma'(xi1)
//! d_b S = +sqrt(V(p1)) (v1 / |v1|) . gamma'(xi2)
//! ```
//!
//! The gradient of the total length of a chain vanishes exactly when the
//! tangential component of `sqrt(V) v / |v|` is continuous at every
//! junction, i.e. when Snell's law holds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arcs::{solve_inner_arc, solve_outer_arc, ArcError, HomotopyClass, InnerArc, OuterArc, Regime};
use crate::geometry::BoundaryCurve;
use crate::model::BilliardParams;
use crate::numeric::Vec2;

/// Step of the second-derivative finite differences, relative to `L`.
pub const SECOND_DERIVATIVE_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiValue {
    pub value: f64,
    pub d_a: f64,
    pub d_b: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JacobiError {
    #[error("arc {index} ({regime:?}) failed: {source}")]
    Arc { index: usize, regime: Regime, source: ArcError },
    #[error("junction points differ by {0:e}")]
    EndpointMismatch(f64),
    #[error("transition vector has {got} entries, expected {expected}")]
    BadLength { got: usize, expected: usize },
}

/// Whether the chain closes up (periodic) or has pinned end points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Periodic,
    FixedEnds,
}

/// Tangential component of `sqrt(V) v / |v|` at a boundary parameter.
pub fn tangential_momentum(curve: &BoundaryCurve, params: &BilliardParams, xi: f64, v: &Vec2, regime: Regime) -> f64 {
    let f = curve.frame(xi);
    let pot = match regime {
        Regime::Outer => params.v_outer(&f.point),
        Regime::Inner => params.v_inner_unchecked(&f.point),
    };
    pot.sqrt() * v.dot(&f.tangent) / v.norm()
}

fn endpoint_partials(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    xi1: f64,
    xi2: f64,
    v0: &Vec2,
    v1: &Vec2,
    regime: Regime,
) -> (f64, f64) {
    (
        -tangential_momentum(curve, params, xi1, v0, regime),
        tangential_momentum(curve, params, xi2, v1, regime),
    )
}

pub fn outer_with_arc(curve: &BoundaryCurve, params: &BilliardParams, xi1: f64, xi2: f64) -> Result<(OuterArc, JacobiValue), ArcError> {
    let arc = solve_outer_arc(curve, params, xi1, xi2)?;
    let (d_a, d_b) = endpoint_partials(curve, params, xi1, xi2, &arc.v0(), &arc.v1, Regime::Outer);
    Ok((arc, JacobiValue { value: arc.jacobi_length(params), d_a, d_b }))
}

pub fn inner_with_arc(curve: &BoundaryCurve, params: &BilliardParams, xi1: f64, xi2: f64) -> Result<(InnerArc, JacobiValue), ArcError> {
    let arc = solve_inner_arc(params, curve.point(xi1), curve.point(xi2), HomotopyClass::Tnt)?;
    let (d_a, d_b) = endpoint_partials(curve, params, xi1, xi2, &arc.v0, &arc.v1, Regime::Inner);
    Ok((arc, JacobiValue { value: arc.jacobi_length(), d_a, d_b }))
}

/// Outer Jacobi distance between `gamma(xi1)` and `gamma(xi2)`.
pub fn s_outer(curve: &BoundaryCurve, params: &BilliardParams, xi1: f64, xi2: f64) -> Result<JacobiValue, ArcError> {
    outer_with_arc(curve, params, xi1, xi2).map(|(_, j)| j)
}

/// Inner (TnT) Jacobi distance between `gamma(xi1)` and `gamma(xi2)`.
pub fn s_inner(curve: &BoundaryCurve, params: &BilliardParams, xi1: f64, xi2: f64) -> Result<JacobiValue, ArcError> {
    inner_with_arc(curve, params, xi1, xi2).map(|(_, j)| j)
}

pub fn s_regime(curve: &BoundaryCurve, params: &BilliardParams, regime: Regime, xi1: f64, xi2: f64) -> Result<JacobiValue, ArcError> {
    match regime {
        Regime::Outer => s_outer(curve, params, xi1, xi2),
        Regime::Inner => s_inner(curve, params, xi1, xi2),
    }
}

/// Second partials `[d_aa, d_ab, d_bb]` by central differences of the
/// analytic first derivatives.
pub fn second_partials(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    regime: Regime,
    xi1: f64,
    xi2: f64,
) -> Result<[f64; 3], ArcError> {
    let h = SECOND_DERIVATIVE_STEP * curve.length();
    let ap = s_regime(curve, params, regime, xi1 + h, xi2)?;
    let am = s_regime(curve, params, regime, xi1 - h, xi2)?;
    let bp = s_regime(curve, params, regime, xi1, xi2 + h)?;
    let bm = s_regime(curve, params, regime, xi1, xi2 - h)?;
    Ok([
        (ap.d_a - am.d_a) / (2.0 * h),
        0.5 * ((bp.d_a - bm.d_a) + (ap.d_b - am.d_b)) / (2.0 * h),
        (bp.d_b - bm.d_b) / (2.0 * h),
    ])
}

/// Snell residual at the junction `gamma(xi)` where an outer arc ends and
/// an inner arc begins. Equals `d_b S_E + d_a S_I`.
pub fn snell_residual(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    outer: &OuterArc,
    inner: &InnerArc,
    xi: f64,
) -> Result<f64, JacobiError> {
    let p = curve.point(xi);
    let gap = (outer.z1 - p).norm().max((inner.p0 - p).norm());
    if gap > 1e-9 * p.norm().max(1.0) {
        return Err(JacobiError::EndpointMismatch(gap));
    }
    Ok(tangential_momentum(curve, params, xi, &outer.v1, Regime::Outer)
        - tangential_momentum(curve, params, xi, &inner.v0, Regime::Inner))
}

/// Regime of arc `k` in a chain: even arcs are outer, odd arcs inner.
pub fn arc_regime(k: usize) -> Regime {
    if k.is_multiple_of(2) {
        Regime::Outer
    } else {
        Regime::Inner
    }
}

/// Number of nodes in a chain for a word of length `n`.
pub fn node_count(n: usize, mode: Mode) -> usize {
    match mode {
        Mode::Periodic => 2 * n,
        Mode::FixedEnds => 2 * n - 1,
    }
}

/// Number of arcs in a chain through `nodes` nodes.
pub fn arc_count(nodes: usize, mode: Mode) -> usize {
    match mode {
        Mode::Periodic => nodes,
        Mode::FixedEnds => nodes - 1,
    }
}

/// Per-arc Jacobi values of the chain through `nodes`.
pub fn chain_values(curve: &BoundaryCurve, params: &BilliardParams, nodes: &[f64], mode: Mode) -> Result<Vec<JacobiValue>, JacobiError> {
    let m = nodes.len();
    (0..arc_count(m, mode))
        .map(|k| {
            let regime = arc_regime(k);
            s_regime(curve, params, regime, nodes[k], nodes[(k + 1) % m])
                .map_err(|source| JacobiError::Arc { index: k, regime, source })
        })
        .collect()
}

/// Gradient entry at node `i` from the values of the arcs ending and
/// starting there.
fn node_gradient(values: &[JacobiValue], i: usize, mode: Mode) -> f64 {
    let arcs = values.len();
    match mode {
        Mode::Periodic => values[(i + arcs - 1) % arcs].d_b + values[i].d_a,
        Mode::FixedEnds => {
            let before = if i > 0 { values[i - 1].d_b } else { 0.0 };
            let after = if i < arcs { values[i].d_a } else { 0.0 };
            before + after
        }
    }
}

/// Total Jacobi length of the alternating chain through the transition
/// parameters and its gradient with respect to the free parameters.
///
/// Periodic chains have `2n` nodes, all free. Fixed-ends chains have `2n - 1`
/// nodes whose first and last entries are pinned, so the gradient has
/// `2n - 3` entries.
pub fn total_length(
    curve: &BoundaryCurve,
    params: &BilliardParams,
    word_len: usize,
    nodes: &[f64],
    mode: Mode,
) -> Result<(f64, Vec<f64>), JacobiError> {
    let expected = node_count(word_len, mode);
    if nodes.len() != expected || (mode == Mode::FixedEnds && word_len < 2) {
        return Err(JacobiError::BadLength { got: nodes.len(), expected });
    }
    let values = chain_values(curve, params, nodes, mode)?;
    let total = values.iter().map(|v| v.value).sum();
    let grad = match mode {
        Mode::Periodic => (0..nodes.len()).map(|i| node_gradient(&values, i, mode)).collect(),
        Mode::FixedEnds => (1..nodes.len() - 1).map(|i| node_gradient(&values, i, mode)).collect(),
    };
    Ok((total, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveSpec;
    use approx::assert_abs_diff_eq;

    fn setup(h: f64) -> (BoundaryCurve, BilliardParams) {
        (BoundaryCurve::new(CurveSpec::ellipse(1.5, 1.0)).unwrap(), BilliardParams::default().with_h(h))
    }

    #[test]
    fn homothetic_partials_vanish() {
        let (c, p) = setup(10.0);
        let q = c.length() / 4.0;
        for xi in [0.0, q, 2.0 * q, 3.0 * q] {
            let o = s_outer(&c, &p, xi, xi).unwrap();
            assert_abs_diff_eq!(o.d_a, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(o.d_b, 0.0, epsilon = 1e-12);
            let i = s_inner(&c, &p, xi, xi).unwrap();
            assert_abs_diff_eq!(i.d_a + i.d_b, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn swap_symmetry() {
        let (c, p) = setup(10.0);
        let a = s_outer(&c, &p, 0.1, 0.25).unwrap();
        let b = s_outer(&c, &p, 0.25, 0.1).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-12);
        assert_abs_diff_eq!(a.d_a, b.d_b, epsilon = 1e-10);
        assert_abs_diff_eq!(a.d_b, b.d_a, epsilon = 1e-10);
        let a = s_inner(&c, &p, 0.2, 2.1).unwrap();
        let b = s_inner(&c, &p, 2.1, 0.2).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-11);
        assert_abs_diff_eq!(a.d_a, b.d_b, epsilon = 1e-10);
    }

    #[test]
    fn partials_match_finite_differences() {
        let (c, p) = setup(30.0);
        let h = 1e-6;
        for regime in [Regime::Outer, Regime::Inner] {
            let (x1, x2) = match regime {
                Regime::Outer => (0.05, 0.17),
                Regime::Inner => (0.1, 2.3),
            };
            let j = s_regime(&c, &p, regime, x1, x2).unwrap();
            let fa = (s_regime(&c, &p, regime, x1 + h, x2).unwrap().value - s_regime(&c, &p, regime, x1 - h, x2).unwrap().value) / (2.0 * h);
            let fb = (s_regime(&c, &p, regime, x1, x2 + h).unwrap().value - s_regime(&c, &p, regime, x1, x2 - h).unwrap().value) / (2.0 * h);
            assert_abs_diff_eq!(j.d_a, fa, epsilon = 1e-6);
            assert_abs_diff_eq!(j.d_b, fb, epsilon = 1e-6);
        }
    }

    #[test]
    fn snell_residual_is_partial_sum() {
        let (c, p) = setup(20.0);
        let (o, jo) = outer_with_arc(&c, &p, 0.1, 0.2).unwrap();
        let (i, ji) = inner_with_arc(&c, &p, 0.2, 2.5).unwrap();
        let r = snell_residual(&c, &p, &o, &i, 0.2).unwrap();
        assert_abs_diff_eq!(r, jo.d_b + ji.d_a, epsilon = 1e-14);
        assert!(matches!(snell_residual(&c, &p, &o, &i, 0.9), Err(JacobiError::EndpointMismatch(_))));
    }

    #[test]
    fn snell_residual_at_normal_incidence() {
        let (c, p) = setup(20.0);
        let (o, _) = outer_with_arc(&c, &p, 0.0, 0.0).unwrap();
        let (i, _) = inner_with_arc(&c, &p, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(snell_residual(&c, &p, &o, &i, 0.0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sine_law_gives_zero_momentum_jump() {
        // V_E = 1, V_I = 4 at |z| = 1, incidence pi/6 outside, asin(1/4) inside
        let c = BoundaryCurve::new(CurveSpec::circle(1.0)).unwrap();
        let p = BilliardParams::new(1.0, 1.0, 1.5, 1.5).unwrap();
        let f = c.frame(0.3);
        let ae = std::f64::consts::FRAC_PI_6;
        let ai = 0.25f64.asin();
        let ve = (-f.normal * ae.cos() + f.tangent * ae.sin()) * 2f64.sqrt();
        let vi = (-f.normal * ai.cos() + f.tangent * ai.sin()) * 8f64.sqrt();
        let jump = tangential_momentum(&c, &p, 0.3, &ve, Regime::Outer) - tangential_momentum(&c, &p, 0.3, &vi, Regime::Inner);
        assert!(jump.abs() < 1e-12);
    }

    #[test]
    fn length_one_word_is_critical_at_vertex() {
        let (c, p) = setup(10.0);
        let (_, g) = total_length(&c, &p, 1, &[0.0, 0.0], Mode::Periodic).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-12));
        assert!(matches!(total_length(&c, &p, 2, &[0.0, 0.0], Mode::Periodic), Err(JacobiError::BadLength { .. })));
    }
}
