//! Independent oracles shared by the integration tests: a high-order ODE
//! integrator for the physical (unregularized) equations of motion and an
//! adaptive quadrature for path integrals.

#![allow(dead_code)]

use ode_solvers::{Dop853, OutputType, System, Vector4};
use refrabill_core::Vec2;

#[derive(Clone)]
pub struct Kepler {
    pub mu: f64,
}

impl System<f64, Vector4<f64>> for Kepler {
    fn system(&self, _s: f64, y: &Vector4<f64>, dy: &mut Vector4<f64>) {
        let r3 = (y[0] * y[0] + y[1] * y[1]).powf(1.5);
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = -self.mu * y[0] / r3;
        dy[3] = -self.mu * y[1] / r3;
    }
}

#[derive(Clone)]
pub struct Harmonic {
    pub omega2: f64,
}

impl System<f64, Vector4<f64>> for Harmonic {
    fn system(&self, _s: f64, y: &Vector4<f64>, dy: &mut Vector4<f64>) {
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = -self.omega2 * y[0];
        dy[3] = -self.omega2 * y[1];
    }
}

/// Integrate segment by segment over `[0, t]` with output every `dt`
/// (plus the end point). Each segment restarts from the previous step-end
/// state with sparse output, so returned states are true step values rather
/// than dense interpolants.
fn run<S: System<f64, Vector4<f64>> + Clone>(sys: S, z0: Vec2, v0: Vec2, t: f64, dt: f64) -> (Vec<f64>, Vec<(Vec2, Vec2)>) {
    let n = ((t / dt).ceil() as usize).max(1);
    let mut y = Vector4::new(z0.x, z0.y, v0.x, v0.y);
    let mut times = vec![0.0];
    let mut states = vec![(z0, v0)];
    for k in 0..n {
        let (a, b) = (t * k as f64 / n as f64, t * (k + 1) as f64 / n as f64);
        let mut solver = Dop853::new(sys.clone(), a, b, b - a, y, 1e-14, 1e-16);
        solver.set_output(OutputType::Sparse);
        solver.integrate().expect("oracle integration failed");
        y = *solver.y_out().last().unwrap();
        times.push(b);
        states.push((Vec2::new(y[0], y[1]), Vec2::new(y[2], y[3])));
    }
    (times, states)
}

/// Integrate `z'' = -mu z / |z|^3` from `(z0, v0)` up to time `t`; returns
/// the dense output (times and states).
pub fn kepler_path(mu: f64, z0: Vec2, v0: Vec2, t: f64, dense: f64) -> (Vec<f64>, Vec<(Vec2, Vec2)>) {
    run(Kepler { mu }, z0, v0, t, dense)
}

pub fn kepler_end(mu: f64, z0: Vec2, v0: Vec2, t: f64) -> (Vec2, Vec2) {
    *kepler_path(mu, z0, v0, t, t).1.last().unwrap()
}

pub fn harmonic_path(omega2: f64, z0: Vec2, v0: Vec2, t: f64, dense: f64) -> (Vec<f64>, Vec<(Vec2, Vec2)>) {
    run(Harmonic { omega2 }, z0, v0, t, dense)
}

/// Adaptive (double-exponential) quadrature oracle.
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    quadrature::double_exponential::integrate(f, a, b, tol).integral
}

/// Composite trapezoid with Richardson refinement until successive values
/// agree to `tol`.
pub fn trapezoid_refined<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let mut n = 16usize;
    let trap = |n: usize| {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|k| f(a + h * k as f64)).sum();
        h * (0.5 * (f(a) + f(b)) + inner)
    };
    let mut prev = trap(n);
    let mut prev_r = f64::NAN;
    loop {
        n *= 2;
        let cur = trap(n);
        let r = (4.0 * cur - prev) / 3.0;
        if (r - prev_r).abs() < tol || n > 1 << 22 {
            return r;
        }
        prev = cur;
        prev_r = r;
    }
}
