//! Quadrature over the perforated cell `Y \ D` for Λ-periodic integrands.
//!
//! A smooth partition of unity separates the integrand into pieces supported in annuli
//! around the inclusions (integrated in polar coordinates: Gauss–Legendre in the radius,
//! trapezoid in the angle) and a piece vanishing near the inclusions (integrated by the
//! periodic trapezoid rule on the whole cell). All pieces are smooth, so the rule converges
//! spectrally.

use std::f64::consts::PI;

use super::InclusionGeometry;
use crate::error::{invalid, Result};
use crate::lattice::{v2, Vec2};
use crate::special::gauss_legendre_on;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaRuleParams {
    /// Points per direction of the periodic cell grid.
    pub cell_points: usize,
    pub radial_points: usize,
    pub angular_points: usize,
}

impl AreaRuleParams {
    /// Resolution scaled by `level` (1 is the default; 2 doubles every count).
    pub fn level(level: usize) -> Self {
        let level = level.max(1);
        Self {
            cell_points: 128 * level,
            radial_points: 32 * level,
            angular_points: 128 * level,
        }
    }
}

impl Default for AreaRuleParams {
    fn default() -> Self {
        Self::level(1)
    }
}

#[derive(Debug, Clone)]
pub struct AreaRule {
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
}

/// `C^∞` step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

impl AreaRule {
    pub fn new(geom: &InclusionGeometry, params: AreaRuleParams) -> Result<Self> {
        let l = geom.lattice.constant;
        let r = geom.radius;
        // annuli must not overlap each other: centres are L/√3 apart
        let rho2 = 0.28 * l;
        let rho1 = (r + 0.01 * l).max(0.16 * l);
        if rho1 >= rho2 {
            return Err(invalid(format!(
                "inclusion radius {r} too large for the area rule"
            )));
        }
        if params.cell_points < 8 || params.radial_points < 2 || params.angular_points < 8 {
            return Err(invalid("area rule resolution too small"));
        }
        let chi = |x: Vec2, k: usize| -> f64 {
            let d = geom.distance_to_center(k, x);
            smooth_step((rho2 - d) / (rho2 - rho1))
        };
        let mut points = Vec::new();
        let mut weights = Vec::new();

        let n = params.cell_points;
        let cw = geom.lattice.cell_area / (n * n) as f64;
        for a in 0..n {
            for b in 0..n {
                let x = v2::comb(
                    a as f64 / n as f64,
                    geom.lattice.l1,
                    b as f64 / n as f64,
                    geom.lattice.l2,
                );
                let rest = 1.0 - chi(x, 0) - chi(x, 1);
                if rest > 0.0 {
                    points.push(x);
                    weights.push(cw * rest);
                }
            }
        }

        let (rs, rw) = gauss_legendre_on(params.radial_points, r, rho2);
        let na = params.angular_points;
        for (k, c) in geom.centers.iter().enumerate() {
            for (rho, wr) in rs.iter().zip(&rw) {
                for j in 0..na {
                    let t = 2.0 * PI * j as f64 / na as f64;
                    let x = v2::add(*c, [rho * t.cos(), rho * t.sin()]);
                    let w = wr * rho * 2.0 * PI / na as f64 * chi(x, k);
                    if w > 0.0 {
                        points.push(x);
                        weights.push(w);
                    }
                }
            }
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<T>(&self, values: &[T]) -> T
    where
        T: Copy + std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
    {
        values.iter().zip(&self.weights).map(|(v, w)| *v * *w).sum()
    }
}
