//! Single-layer potentials on the two inclusions of the honeycomb cell.
//!
//! The inclusions are disks centred at the honeycomb sites `x1`, `x2`. Densities are
//! discretized by the trapezoid rule on each circle; the logarithmic part of the kernel is
//! integrated with the periodic log-quadrature weights and the remainder with plain
//! trapezoid weights.

mod area;
mod capacitance;
mod coefficient;
mod density;
mod field;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{v2, Lattice, Vec2};

pub use area::{AreaRule, AreaRuleParams};
pub use capacitance::{capacitance, capacitance_from, CapacitanceResult};
pub use coefficient::{
    dirac_coefficient_c, grad_alpha_s_check, pairing_b, CoefficientReport, DiracPointModes,
};
pub use density::{solve_densities, DensitySolution, LayerSystem};
pub use field::{eval_s, FieldKernel, FieldPoint, FieldValues, LayerFields};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InclusionGeometry {
    pub lattice: Lattice,
    pub shape: Shape,
    pub radius: f64,
    pub centers: [Vec2; 2],
}

impl InclusionGeometry {
    /// Disks of the given radius centred at the honeycomb sites.
    pub fn disks(lattice: Lattice, radius: f64) -> Result<Self> {
        let bound = lattice.constant / (2.0 * 3f64.sqrt());
        if !(radius.is_finite() && radius > 0.0 && radius < bound) {
            return Err(invalid(format!(
                "disk radius must lie in (0, {bound}), got {radius}"
            )));
        }
        Ok(Self {
            lattice,
            shape: Shape::Disk,
            radius,
            centers: [lattice.x1, lattice.x2],
        })
    }

    /// Disks of radius `0.15 L`.
    pub fn default_disks(lattice: Lattice) -> Self {
        Self::disks(lattice, 0.15 * lattice.constant).expect("default radius is admissible")
    }

    /// Area `|D_1|` of one inclusion.
    pub fn inclusion_area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    /// Index of the inclusion (0 or 1) whose closure, or a lattice translate of it,
    /// contains `x`.
    pub fn inclusion_of(&self, x: Vec2) -> Option<usize> {
        (0..2).find(|&k| self.distance_to_center(k, x) <= self.radius)
    }

    /// Distance from `x` to the nearest lattice translate of the `k`-th centre.
    pub fn distance_to_center(&self, k: usize, x: Vec2) -> f64 {
        self.lattice.distance_to_lattice(v2::sub(x, self.centers[k]))
    }

    /// Distance from `x` to the nearest boundary circle (or lattice translate).
    pub fn distance_to_boundary(&self, x: Vec2) -> f64 {
        (0..2)
            .map(|k| (self.distance_to_center(k, x) - self.radius).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Trapezoid nodes on both circles. Nodes `0..N` lie on `∂D_1`, nodes `N..2N` on `∂D_2`,
/// both at angles `θ_j = 2πj/N` about their centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryQuadrature {
    pub nodes: Vec<Vec2>,
    pub normals: Vec<Vec2>,
    pub weights: Vec<f64>,
    pub angles: Vec<f64>,
    /// Inclusion index of each node: 0 for `D_1`, 1 for `D_2`.
    pub owner: Vec<usize>,
    pub n_per_boundary: usize,
    pub geometry: InclusionGeometry,
}

impl BoundaryQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node index range of inclusion `k`.
    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        k * self.n_per_boundary..(k + 1) * self.n_per_boundary
    }

    /// `∫_{∂D_k} f dσ` for nodal values `f`.
    pub fn integrate_on<T>(&self, k: usize, f: &[T]) -> T
    where
        T: Copy + std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
    {
        self.range(k).map(|i| f[i] * self.weights[i]).sum()
    }
}

pub fn discretize_boundary(geom: &InclusionGeometry, n: usize) -> Result<BoundaryQuadrature> {
    if n < 16 || n % 2 != 0 {
        return Err(invalid(format!(
            "nodes per boundary must be even and at least 16, got {n}"
        )));
    }
    let r = geom.radius;
    let w = 2.0 * PI * r / n as f64;
    let mut q = BoundaryQuadrature {
        nodes: Vec::with_capacity(2 * n),
        normals: Vec::with_capacity(2 * n),
        weights: vec![w; 2 * n],
        angles: Vec::with_capacity(2 * n),
        owner: Vec::with_capacity(2 * n),
        n_per_boundary: n,
        geometry: *geom,
    };
    for (k, c) in geom.centers.iter().enumerate() {
        for j in 0..n {
            let t = 2.0 * PI * j as f64 / n as f64;
            let nu = [t.cos(), t.sin()];
            q.nodes.push(v2::add(*c, v2::scale(r, nu)));
            q.normals.push(nu);
            q.angles.push(t);
            q.owner.push(k);
        }
    }
    Ok(q)
}
