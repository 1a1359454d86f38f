//! Physical constants and the discontinuous potential.
//!
//! Outside the domain the potential is `V_E(z) = E - omega2 |z|^2 / 2`, inside
//! it is `V_I(z) = E + h + mu / |z|`. Both arcs live on the zero-energy shell
//! `|z'|^2 / 2 = V(z)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoundaryCurve;
use crate::numeric::Vec2;

/// Radius below which the Kepler term is treated as a collision singularity.
pub const COLLISION_RADIUS: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter {name} must be positive and finite (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("boundary reaches radius {max_radius:.6}, outside the Hill disk of radius {hill_radius:.6}")]
    OutsideHillRegion { max_radius: f64, hill_radius: f64 },
    #[error("collision singularity: |z| = {0:e}")]
    CollisionSingularity(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilliardParams {
    pub omega2: f64,
    pub mu: f64,
    #[serde(rename = "calE")]
    pub cal_e: f64,
    pub h: f64,
}

impl Default for BilliardParams {
    fn default() -> Self {
        Self { omega2: 1.0, mu: 1.0, cal_e: 2.0, h: 10.0 }
    }
}

impl BilliardParams {
    pub fn new(omega2: f64, mu: f64, cal_e: f64, h: f64) -> Result<Self, ModelError> {
        let p = Self { omega2, mu, cal_e, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [("omega2", self.omega2), ("mu", self.mu), ("calE", self.cal_e), ("h", self.h)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    pub fn with_h(&self, h: f64) -> Self {
        Self { h, ..*self }
    }

    pub fn omega(&self) -> f64 {
        self.omega2.sqrt()
    }

    /// Inner energy `E + h`.
    pub fn inner_energy(&self) -> f64 {
        self.cal_e + self.h
    }

    pub fn hill_radius(&self) -> f64 {
        (2.0 * self.cal_e / self.omega2).sqrt()
    }

    /// Check that the curve lies strictly inside the Hill disk.
    pub fn check_curve(&self, curve: &BoundaryCurve) -> Result<(), ModelError> {
        self.validate()?;
        let max_radius = curve.max_radius();
        let hill_radius = self.hill_radius();
        if max_radius >= hill_radius {
            return Err(ModelError::OutsideHillRegion { max_radius, hill_radius });
        }
        Ok(())
    }

    pub fn v_outer(&self, z: &Vec2) -> f64 {
        self.cal_e - 0.5 * self.omega2 * z.norm_squared()
    }

    pub fn v_inner(&self, z: &Vec2) -> Result<f64, ModelError> {
        let r = z.norm();
        if r < COLLISION_RADIUS {
            return Err(ModelError::CollisionSingularity(r));
        }
        Ok(self.cal_e + self.h + self.mu / r)
    }

    /// Inner potential for points known to be away from the origin.
    pub fn v_inner_unchecked(&self, z: &Vec2) -> f64 {
        self.cal_e + self.h + self.mu / z.norm()
    }

    /// Critical refraction angle `asin(sqrt(V_E / V_I))` at a boundary point.
    pub fn alpha_crit_at(&self, z: &Vec2) -> f64 {
        (self.v_outer(z) / self.v_inner_unchecked(z)).sqrt().asin()
    }

    pub fn alpha_crit(&self, curve: &BoundaryCurve, xi: f64) -> f64 {
        self.alpha_crit_at(&curve.point(xi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveSpec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn outer_potential_values() {
        let p = BilliardParams::default();
        assert_eq!(p.v_outer(&Vec2::zeros()), 2.0);
        let r = p.hill_radius();
        assert!(p.v_outer(&Vec2::new(r, 0.0)).abs() < 1e-15);
        assert_relative_eq!(p.v_outer(&Vec2::new(1.0, 1.0)), 1.0);
    }

    #[test]
    fn inner_potential_values() {
        let p = BilliardParams::new(1.0, 2.0, 1.0, 3.0).unwrap();
        assert_relative_eq!(p.v_inner(&Vec2::new(1.0, 0.0)).unwrap(), 6.0);
        let far = p.v_inner(&Vec2::new(1e9, 0.0)).unwrap();
        assert_relative_eq!(far, 4.0, max_relative = 1e-8);
        assert!(matches!(p.v_inner(&Vec2::new(1e-15, 0.0)), Err(ModelError::CollisionSingularity(_))));
    }

    #[test]
    fn critical_angle() {
        let p = BilliardParams::default().with_h(10.0);
        assert_relative_eq!(p.alpha_crit_at(&Vec2::new(1.0, 0.0)), (1.5f64 / 13.0).sqrt().asin(), epsilon = 1e-15);
        // V_E = 1, V_I = 4
        let q = BilliardParams::new(1.0, 1.0, 1.5, 1.5).unwrap();
        assert_relative_eq!(q.alpha_crit_at(&Vec2::new(1.0, 0.0)), PI / 6.0, epsilon = 1e-14);
        let curve = BoundaryCurve::new(CurveSpec::ellipse(1.5, 1.0)).unwrap();
        let mut prev = PI;
        for h in [1.0, 10.0, 100.0, 1e3, 1e4] {
            let a = p.with_h(h).alpha_crit(&curve, 0.7);
            assert!(a > 0.0 && a < prev);
            prev = a;
        }
    }

    #[test]
    fn hill_check() {
        let p = BilliardParams::default();
        assert!(p.check_curve(&BoundaryCurve::new(CurveSpec::ellipse(1.5, 1.0)).unwrap()).is_ok());
        assert!(p.check_curve(&BoundaryCurve::new(CurveSpec::ellipse(2.5, 1.0)).unwrap()).is_err());
        assert!(BilliardParams::new(1.0, 1.0, 2.0, 0.0).is_err());
    }
}
