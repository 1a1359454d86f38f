//! Small numerical helpers shared by the solvers: bracketed root refinement,
//! Chebyshev sample placement and planar vector conversions.

use nalgebra::Vector2;
use num_complex::Complex64;
use roots::{find_root_brent, Convergency};

pub type Vec2 = Vector2<f64>;

/// Convergence policy for Brent refinement: stops on an exact zero or when the
/// bracket shrinks to a few ulps of the abscissa.
struct BracketTolerance {
    xtol: f64,
    max_iter: usize,
}

impl Convergency<f64> for BracketTolerance {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }

    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() <= self.xtol + 4.0 * f64::EPSILON * x1.abs().max(x2.abs())
    }

    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= self.max_iter
    }
}

/// Refine a sign-changing bracket `[a, b]` of `f` to `xtol`.
///
/// Falls back to plain bisection if Brent's method gives up, so a valid
/// bracket always yields a point inside it.
pub fn refine_root<F>(a: f64, b: f64, mut f: F, xtol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let mut conv = BracketTolerance { xtol, max_iter: 200 };
    match find_root_brent(a, b, &mut f, &mut conv) {
        Ok(x) => x,
        Err(_) => bisect(a, b, f, xtol),
    }
}

/// Plain bisection on a bracket, driven by the sign of `f(b)` only, so a zero
/// at the left end (a crossing that starts on the surface) is skipped.
pub fn bisect<F>(mut a: f64, mut b: f64, mut f: F, xtol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let fb_pos = f(b) > 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b || (b - a).abs() <= xtol {
            break;
        }
        if (f(m) > 0.0) == fb_pos {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Chebyshev–Gauss nodes mapped to the open interval `(a, b)`, increasing.
pub fn chebyshev_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = -((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * t
        })
        .collect()
}

#[inline]
pub fn to_complex(v: Vec2) -> Complex64 {
    Complex64::new(v.x, v.y)
}

#[inline]
pub fn to_vec(c: Complex64) -> Vec2 {
    Vec2::new(c.re, c.im)
}

#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Real dot product of two complex numbers seen as planar vectors.
#[inline]
pub fn cdot(a: Complex64, b: Complex64) -> f64 {
    a.re * b.re + a.im * b.im
}

/// Signed angle from `a` to `b` in `(-pi, pi]`.
#[inline]
pub fn signed_angle(a: &Vec2, b: &Vec2) -> f64 {
    cross(a, b).atan2(a.dot(b))
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_root_finds_cosine_zero() {
        let x = refine_root(1.0, 2.0, f64::cos, 1e-15);
        assert!((x - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn bisect_handles_zero_at_left_end() {
        // f(0) = 0 must not capture the bisection
        let x = bisect(0.0, 3.0, |t| t * (2.0 - t), 1e-14);
        assert!((x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_nodes_are_interior_and_sorted() {
        let n = chebyshev_nodes(0.0, 1.0, 16);
        assert!(n.windows(2).all(|w| w[0] < w[1]));
        assert!(n[0] > 0.0 && n[15] < 1.0);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }
}
