use refrabill_core::jacobi::{s_inner, s_outer, Mode};
use refrabill_core::shooting::{miranda_check, realize_fixed_ends, realize_periodic, uniqueness_check, ShootingError};
use refrabill_core::words::{build_interval_system, IntervalSystem, Word, DEFAULT_HALF_WIDTH};
use refrabill_core::{BilliardParams, BoundaryCurve, CurveSpec};

fn setup() -> (BoundaryCurve, IntervalSystem, BilliardParams) {
    let curve = BoundaryCurve::new(CurveSpec::ellipse(1.5, 1.0)).unwrap();
    let system = build_interval_system(&curve, &curve.find_central_configurations(), DEFAULT_HALF_WIDTH).unwrap();
    (curve, system, BilliardParams::default().with_h(72.0))
}

/// Plain bisection on a bracketing sign change.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "no sign change");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) * flo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn one_free_node_matches_bisection() {
    let (curve, system, params) = setup();
    let word = Word::finite(vec![1, 2]);
    let (xa, xb) = (system.center(1) + 0.01, system.center(2) - 0.02);
    let g = |x: f64| s_outer(&curve, &params, xa, x).unwrap().d_b + s_inner(&curve, &params, x, xb).unwrap().d_a;
    let iv = system.interval(1);
    let root = bisect(g, iv.lo, iv.hi);

    let miranda = miranda_check(&curve, &params, &system, &word, Mode::FixedEnds, Some((xa, xb))).unwrap();
    assert!(miranda.pass);
    let c = realize_fixed_ends(&curve, &params, &system, &word, xa, xb).unwrap();
    assert_eq!(c.nodes.len(), 3);
    assert!(curve.param_diff(c.nodes[1], root).abs() < 1e-10, "{} vs {root}", c.nodes[1]);
    assert!(c.max_snell_residual < 1e-8);
}

#[test]
fn fixed_ends_recover_periodic_interior() {
    let (curve, system, params) = setup();
    let periodic = realize_periodic(&curve, &params, &system, &Word::periodic(vec![1, 2, 3, 4])).unwrap();
    let p = &periodic.nodes;
    // one lap, pinned at the periodic orbit's first node on both ends
    let lap = Word::finite(vec![1, 2, 3, 4, 1]);
    let c = realize_fixed_ends(&curve, &params, &system, &lap, p[0], p[0]).unwrap();
    assert_eq!(c.nodes.len(), 9);
    for k in 0..9 {
        assert!(curve.param_diff(c.nodes[k], p[k % 8]).abs() < 1e-8, "node {k}");
    }
    assert!((c.total_length - periodic.total_length).abs() < 1e-8 * periodic.total_length);
}

#[test]
fn periodic_realization_has_consistent_bookkeeping() {
    let (curve, system, params) = setup();
    let c = realize_periodic(&curve, &params, &system, &Word::periodic(vec![1, 2, 3, 4])).unwrap();
    assert!(c.is_realized());
    assert_eq!(c.nodes.len(), 8);
    assert_eq!(c.outer.len(), 4);
    assert_eq!(c.inner.len(), 4);
    for (k, &xi) in c.nodes.iter().enumerate() {
        assert_eq!(system.symbol_of(&curve, xi), Some(c.word.symbols[k / 2]));
    }
    let total: f64 = c.outer_durations.iter().chain(c.inner_durations.iter()).sum();
    assert!((c.period() - total).abs() < 1e-12 * total);
    // the chiral word has no collision
    assert!(c.collisions.iter().all(|&x| !x));
    assert!(!c.word.is_symmetric());
}

#[test]
fn symmetric_word_collides_twice() {
    let (curve, system, params) = setup();
    let c = realize_periodic(&curve, &params, &system, &Word::periodic(vec![1, 2, 2, 1])).unwrap();
    assert_eq!(c.collisions, vec![false, true, false, true]);
    assert_eq!(c.radial_arcs(), 2);
}

#[test]
fn uniqueness_witness_holds_at_working_energy() {
    let (curve, system, params) = setup();
    let r = uniqueness_check(&curve, &params, &system, &Word::periodic(vec![1, 2])).unwrap();
    assert!(r.radius_convexity_ok);
    assert!(r.unique);
}

#[test]
fn endpoint_outside_interval_rejected() {
    let (curve, system, params) = setup();
    let word = Word::finite(vec![1, 2]);
    let far = system.center(3);
    assert!(matches!(
        realize_fixed_ends(&curve, &params, &system, &word, far, system.center(2)),
        Err(ShootingError::EndpointOutside(_))
    ));
}

#[test]
fn too_short_fixed_ends_word() {
    let (curve, system, params) = setup();
    let word = Word::finite(vec![1]);
    assert!(realize_fixed_ends(&curve, &params, &system, &word, system.center(1), system.center(1)).is_err());
}
