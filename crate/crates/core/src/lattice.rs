//! Equilateral triangular lattice, its dual, the honeycomb cell and its point symmetries.
//!
//! Conventions: `l1 = L(√3/2, 1/2)`, `l2 = L(√3/2, -1/2)`, dual vectors satisfy
//! `a_i · l_j = 2π δ_ij`. The unit cell `Y` is the parallelogram spanned by `l1, l2`,
//! and the Brillouin zone `Y*` the parallelogram spanned by `a1, a2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Plain 2-vectors.
pub type Vec2 = [f64; 2];

pub mod v2 {
    use super::Vec2;

    #[inline]
    pub fn add(a: Vec2, b: Vec2) -> Vec2 {
        [a[0] + b[0], a[1] + b[1]]
    }
    #[inline]
    pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
        [a[0] - b[0], a[1] - b[1]]
    }
    #[inline]
    pub fn scale(s: f64, a: Vec2) -> Vec2 {
        [s * a[0], s * a[1]]
    }
    #[inline]
    pub fn dot(a: Vec2, b: Vec2) -> f64 {
        a[0] * b[0] + a[1] * b[1]
    }
    #[inline]
    pub fn cross(a: Vec2, b: Vec2) -> f64 {
        a[0] * b[1] - a[1] * b[0]
    }
    #[inline]
    pub fn norm(a: Vec2) -> f64 {
        a[0].hypot(a[1])
    }
    #[inline]
    pub fn norm2(a: Vec2) -> f64 {
        a[0] * a[0] + a[1] * a[1]
    }
    #[inline]
    pub fn dist(a: Vec2, b: Vec2) -> f64 {
        norm(sub(a, b))
    }
    /// `m1 * u + m2 * v`.
    #[inline]
    pub fn comb(m1: f64, u: Vec2, m2: f64, v: Vec2) -> Vec2 {
        [m1 * u[0] + m2 * v[0], m1 * u[1] + m2 * v[1]]
    }
}

/// Lattice constant for which the Brillouin zone has unit area.
pub fn normalized_lattice_constant() -> f64 {
    // (2π/L)^2 * 2√3/3 = 1
    2.0 * PI * (2.0 * 3f64.sqrt() / 3.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub constant: f64,
    pub l1: Vec2,
    pub l2: Vec2,
    pub a1: Vec2,
    pub a2: Vec2,
    /// Cell center.
    pub x0: Vec2,
    /// Centers of the two sub-cells (honeycomb sites).
    pub x1: Vec2,
    pub x2: Vec2,
    pub cell_area: f64,
    pub dual_cell_area: f64,
}

impl Lattice {
    /// Builds the lattice; `None` selects the constant normalizing `|Y*| = 1`.
    pub fn new(constant: Option<f64>) -> Result<Self> {
        let l = match constant {
            None => normalized_lattice_constant(),
            Some(l) if l.is_finite() && l > 0.0 => l,
            Some(l) => return Err(invalid(format!("lattice constant must be positive, got {l}"))),
        };
        let s3 = 3f64.sqrt();
        let l1 = [l * s3 / 2.0, l / 2.0];
        let l2 = [l * s3 / 2.0, -l / 2.0];
        let k = 2.0 * PI / l;
        let a1 = [k * s3 / 3.0, k];
        let a2 = [k * s3 / 3.0, -k];
        let sum = v2::add(l1, l2);
        Ok(Self {
            constant: l,
            l1,
            l2,
            a1,
            a2,
            x0: v2::scale(0.5, sum),
            x1: v2::scale(1.0 / 3.0, sum),
            x2: v2::scale(2.0 / 3.0, sum),
            cell_area: v2::cross(l1, l2).abs(),
            dual_cell_area: v2::cross(a1, a2).abs(),
        })
    }

    /// The two Dirac points `((2a1+a2)/3, (a1+2a2)/3)`.
    pub fn dirac_points(&self) -> (Vec2, Vec2) {
        (
            v2::comb(2.0 / 3.0, self.a1, 1.0 / 3.0, self.a2),
            v2::comb(1.0 / 3.0, self.a1, 2.0 / 3.0, self.a2),
        )
    }

    /// The Dirac point used throughout (`α*_1`).
    pub fn dirac_point(&self) -> Vec2 {
        self.dirac_points().0
    }

    /// `m1 l1 + m2 l2`.
    pub fn point(&self, m1: i64, m2: i64) -> Vec2 {
        v2::comb(m1 as f64, self.l1, m2 as f64, self.l2)
    }

    /// `m1 a1 + m2 a2`.
    pub fn dual_point(&self, m1: i64, m2: i64) -> Vec2 {
        v2::comb(m1 as f64, self.a1, m2 as f64, self.a2)
    }

    /// Coordinates `(s, t)` with `x = s l1 + t l2`.
    pub fn cell_coords(&self, x: Vec2) -> Vec2 {
        [
            v2::dot(self.a1, x) / (2.0 * PI),
            v2::dot(self.a2, x) / (2.0 * PI),
        ]
    }

    /// Coordinates `(s, t)` with `α = s a1 + t a2`.
    pub fn dual_coords(&self, alpha: Vec2) -> Vec2 {
        [
            v2::dot(self.l1, alpha) / (2.0 * PI),
            v2::dot(self.l2, alpha) / (2.0 * PI),
        ]
    }

    /// Lattice vector nearest to `x` and its integer coordinates.
    pub fn nearest_point(&self, x: Vec2) -> ([i64; 2], Vec2) {
        let [s, t] = self.cell_coords(x);
        let (s0, t0) = (s.floor() as i64, t.floor() as i64);
        let mut best = ([s0, t0], self.point(s0, t0));
        let mut best_d = f64::INFINITY;
        for ds in 0..=1 {
            for dt in 0..=1 {
                let m = [s0 + ds, t0 + dt];
                let p = self.point(m[0], m[1]);
                let d = v2::norm2(v2::sub(x, p));
                if d < best_d {
                    best_d = d;
                    best = (m, p);
                }
            }
        }
        best
    }

    /// Distance from `x` to the lattice `Λ`.
    pub fn distance_to_lattice(&self, x: Vec2) -> f64 {
        let (_, p) = self.nearest_point(x);
        v2::dist(x, p)
    }

    /// Whether `α` lies in the fundamental parallelogram `{s a1 + t a2 : 0 ≤ s,t < 1}`.
    pub fn in_brillouin_zone(&self, alpha: Vec2) -> bool {
        let [s, t] = self.dual_coords(alpha);
        (0.0..1.0).contains(&s) && (0.0..1.0).contains(&t)
    }

    /// Distance from `α` to the dual lattice `Λ*`.
    pub fn distance_to_dual_lattice(&self, alpha: Vec2) -> f64 {
        let [s, t] = self.dual_coords(alpha);
        let (s0, t0) = (s.floor() as i64, t.floor() as i64);
        let mut best = f64::INFINITY;
        for ds in 0..=1 {
            for dt in 0..=1 {
                let q = self.dual_point(s0 + ds, t0 + dt);
                best = best.min(v2::dist(alpha, q));
            }
        }
        best
    }

    /// The six corners of the hexagonal Brillouin zone centered at the origin.
    pub fn brillouin_corners(&self) -> [Vec2; 6] {
        let (k1, k2) = self.dirac_points();
        let rot = SymmetryMap::rotation();
        let r1 = rot.apply(k1);
        let r2 = rot.apply(k2);
        [k1, k2, r1, r2, rot.apply(r1), rot.apply(r2)]
    }

    /// Honeycomb nearest-neighbour distance `|x2 - x1| = L/√3`.
    pub fn neighbour_distance(&self) -> f64 {
        v2::dist(self.x1, self.x2)
    }
}

/// The point symmetries of the honeycomb cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryKind {
    /// Clockwise rotation by 2π/3 about the origin.
    R,
    /// Rotation by π about the cell center `x0`.
    R0,
    /// Clockwise rotation by 2π/3 about `x1`: `x ↦ R x + l1`.
    R1,
    /// Clockwise rotation by 2π/3 about `x2`: `x ↦ R x + 2 l1`.
    R2,
    /// Reflection across the line `x0 + ℝ e2`.
    R3,
}

/// Affine map `x ↦ M x + b` of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryMap {
    pub kind: SymmetryKind,
    pub linear: [[f64; 2]; 2],
    pub shift: Vec2,
}

impl SymmetryMap {
    /// The bare rotation `R` (clockwise by 2π/3).
    pub fn rotation() -> Self {
        let (s, c) = (2.0 * PI / 3.0).sin_cos();
        Self {
            kind: SymmetryKind::R,
            linear: [[c, s], [-s, c]],
            shift: [0.0, 0.0],
        }
    }

    pub fn new(kind: SymmetryKind, lat: &Lattice) -> Self {
        let rot = Self::rotation();
        match kind {
            SymmetryKind::R => rot,
            SymmetryKind::R1 => Self {
                kind,
                shift: lat.l1,
                ..rot
            },
            SymmetryKind::R2 => Self {
                kind,
                shift: v2::scale(2.0, lat.l1),
                ..rot
            },
            SymmetryKind::R0 => Self {
                kind,
                linear: [[-1.0, 0.0], [0.0, -1.0]],
                shift: v2::scale(2.0, lat.x0),
            },
            SymmetryKind::R3 => Self {
                kind,
                linear: [[-1.0, 0.0], [0.0, 1.0]],
                shift: [2.0 * lat.x0[0], 0.0],
            },
        }
    }

    /// Image of a point.
    pub fn apply(&self, p: Vec2) -> Vec2 {
        v2::add(self.apply_linear(p), self.shift)
    }

    /// Image of a vector under the linear part only.
    pub fn apply_linear(&self, v: Vec2) -> Vec2 {
        let m = &self.linear;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }
}

/// Convenience wrapper over [`SymmetryMap::apply`].
pub fn apply_symmetry(map: &SymmetryMap, p: Vec2) -> Vec2 {
    map.apply(p)
}
