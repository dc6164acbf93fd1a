use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BoundaryQuadrature;
use crate::error::{Error, Result};
use crate::lattice::{v2, Vec2};
use crate::quasigreen::{GreenParams, QuasiGreen};

/// Collocation residual above which a solve is rejected.
const SOLVE_TOL: f64 = 1e-8;

/// Periodic log-quadrature weights: `∫_0^{2π} log(4 sin²((s-t)/2)) f(t) dt ≈ Σ_j R[(i-j) mod N] f(t_j)`
/// for `s = t_i`.
fn log_weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    (0..n)
        .map(|d| {
            let t = 2.0 * PI * d as f64 / n as f64;
            let mut acc = 0.0;
            for m in 1..half {
                acc += (m as f64 * t).cos() / m as f64;
            }
            -4.0 * PI / n as f64 * acc - 4.0 * PI / (n * n) as f64 * (half as f64 * t).cos()
        })
        .collect()
}

/// Factored Nyström discretization of `S_D^{α,0}` on the collocation nodes.
#[derive(Debug, Clone)]
pub struct LayerSystem {
    alpha: Vec2,
    quad: BoundaryQuadrature,
    matrix: DMatrix<C64>,
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl LayerSystem {
    pub fn assemble(alpha: Vec2, quad: &BoundaryQuadrature, gp: &GreenParams) -> Result<Self> {
        let green = QuasiGreen::new(gp.with_alpha(alpha))?;
        let matrix = assemble_matrix(&green, quad)?;
        let lu = matrix.clone().lu();
        Ok(Self {
            alpha,
            quad: quad.clone(),
            matrix,
            lu,
        })
    }

    pub fn alpha(&self) -> Vec2 {
        self.alpha
    }

    pub fn quadrature(&self) -> &BoundaryQuadrature {
        &self.quad
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Solves `S_D[φ] = rhs` at the nodes; returns the density and the sup-norm residual.
    pub fn solve(&self, rhs: &[C64]) -> Result<(Vec<C64>, f64)> {
        let b = DVector::from_column_slice(rhs);
        let x = self.lu.solve(&b).ok_or_else(|| self.solver_error("singular LU factor"))?;
        let residual = (&self.matrix * &x - &b)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.norm()));
        if !residual.is_finite() || residual > SOLVE_TOL {
            return Err(self.solver_error(&format!("collocation residual {residual:e}")));
        }
        Ok((x.iter().copied().collect(), residual))
    }

    fn solver_error(&self, reason: &str) -> Error {
        let sv = self.matrix.clone().singular_values();
        let max = sv.max();
        let min = sv.min();
        Error::Solver {
            reason: reason.to_string(),
            condition: if min > 0.0 { max / min } else { f64::INFINITY },
        }
    }

    /// Right-hand side `g(y) 1_{∂D_k}(y)` at the nodes.
    pub fn indicator_rhs(&self, k: usize, g: impl Fn(Vec2) -> C64) -> Vec<C64> {
        (0..self.quad.len())
            .map(|i| {
                if self.quad.owner[i] == k {
                    g(self.quad.nodes[i])
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect()
    }
}

fn assemble_matrix(green: &QuasiGreen, quad: &BoundaryQuadrature) -> Result<DMatrix<C64>> {
    let n = quad.n_per_boundary;
    let m = quad.len();
    let r = quad.geometry.radius;
    let logw = log_weights(n);

    // dual part: Σ_q coef_q e^{ik_q·x_i} conj(e^{ik_q·y_j}), shared by all entries
    let dual = green.dual_terms();
    let e = DMatrix::from_fn(m, dual.len(), |i, q| {
        C64::from_polar(1.0, v2::dot(dual[q].k, quad.nodes[i]))
    });
    let ec = DMatrix::from_fn(m, dual.len(), |i, q| e[(i, q)] * dual[q].coef);
    let spectral = ec * e.adjoint();

    let rows: Vec<Vec<C64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(m);
            for j in 0..m {
                let same = quad.owner[i] == quad.owner[j];
                let d = v2::sub(quad.nodes[i], quad.nodes[j]);
                let w = quad.weights[j];
                let mut k = w * (spectral[(i, j)] + green.real_checked(d, same)?);
                if same {
                    let lag = (i + n - j) % n;
                    k += w * r.ln() / (2.0 * PI) + r / (4.0 * PI) * logw[lag];
                }
                row.push(k);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySolution {
    pub alpha: Vec2,
    pub psi1: Vec<C64>,
    pub psi2: Vec<C64>,
    pub residual: f64,
}

impl DensitySolution {
    pub fn psi(&self, j: usize) -> &[C64] {
        if j == 0 {
            &self.psi1
        } else {
            &self.psi2
        }
    }
}

impl LayerSystem {
    /// Densities `ψ_j` with `S_D[ψ_j] = 1_{∂D_j}`.
    pub fn densities(&self) -> Result<DensitySolution> {
        let one = |_| C64::new(1.0, 0.0);
        let (psi1, r1) = self.solve(&self.indicator_rhs(0, one))?;
        let (psi2, r2) = self.solve(&self.indicator_rhs(1, one))?;
        Ok(DensitySolution {
            alpha: self.alpha,
            psi1,
            psi2,
            residual: r1.max(r2),
        })
    }
}

pub fn solve_densities(
    alpha: Vec2,
    quad: &BoundaryQuadrature,
    gp: &GreenParams,
) -> Result<DensitySolution> {
    LayerSystem::assemble(alpha, quad, gp)?.densities()
}
