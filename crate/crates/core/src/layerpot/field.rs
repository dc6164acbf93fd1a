//! Evaluation of single-layer potentials `S_D[φ](x)` and their gradients anywhere in the plane.
//!
//! For each circle the evaluation point is moved to the lattice translate closest to that
//! circle's centre. The logarithmic part is then summed in closed form from the Fourier
//! coefficients of the density (exact for the trigonometric interpolant, hence accurate up
//! to and on the boundary), and the smooth remainder of the kernel by plain quadrature.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{BoundaryQuadrature, DensitySolution};
use crate::error::{invalid, Result};
use crate::lattice::{v2, Vec2};
use crate::quasigreen::{GreenParams, QuasiGreen};

/// Ewald splitting used for field evaluation, in units of `1/L`.
const FIELD_SPLIT: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldPoint {
    pub value: C64,
    pub grad: [C64; 2],
}

impl FieldPoint {
    pub fn normal_derivative(&self, nu: Vec2) -> C64 {
        self.grad[0] * nu[0] + self.grad[1] * nu[1]
    }
}

/// Green's function and quadrature shared by all densities at one quasimomentum.
#[derive(Debug, Clone)]
pub struct FieldKernel {
    green: QuasiGreen,
    quad: BoundaryQuadrature,
}

impl FieldKernel {
    pub fn new(alpha: Vec2, quad: &BoundaryQuadrature, gp: &GreenParams) -> Result<Self> {
        let l = quad.geometry.lattice.constant;
        let params = gp
            .with_alpha(alpha)
            .with_method(crate::quasigreen::GreenMethod::Ewald)
            .with_split(FIELD_SPLIT / l)
            .with_tol(gp.target_tol.min(1e-12));
        Ok(Self {
            green: QuasiGreen::new(params)?,
            quad: quad.clone(),
        })
    }

    pub fn alpha(&self) -> Vec2 {
        self.green.alpha()
    }

    pub fn quadrature(&self) -> &BoundaryQuadrature {
        &self.quad
    }

    /// Prepares evaluation of the potentials of several nodal densities.
    pub fn fields(&self, densities: &[&[C64]]) -> Result<LayerFields<'_>> {
        let m = self.quad.len();
        let modes = densities
            .iter()
            .map(|psi| {
                if psi.len() != m {
                    return Err(invalid(format!(
                        "density has {} values, quadrature has {m} nodes",
                        psi.len()
                    )));
                }
                Ok(DensityModes::new(&self.quad, &self.green, psi))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LayerFields { kernel: self, modes })
    }
}

#[derive(Debug, Clone)]
struct DensityModes {
    /// Fourier coefficients `ψ̂_m` on each circle for `m = 0..=N/2` and `m = -1..=-N/2`
    /// (the Nyquist mode is split evenly between `±N/2`).
    pos: [Vec<C64>; 2],
    neg: [Vec<C64>; 2],
    /// `Σ_y w ψ(y) e^{-i k_q·y}` per circle.
    dual_amp: [Vec<C64>; 2],
    weighted: Vec<C64>,
}

impl DensityModes {
    fn new(quad: &BoundaryQuadrature, green: &QuasiGreen, psi: &[C64]) -> Self {
        let n = quad.n_per_boundary;
        let half = n / 2;
        let weighted: Vec<C64> = psi.iter().zip(&quad.weights).map(|(p, w)| p * *w).collect();
        let mut pos: [Vec<C64>; 2] = Default::default();
        let mut neg: [Vec<C64>; 2] = Default::default();
        let mut dual_amp: [Vec<C64>; 2] = Default::default();
        for k in 0..2 {
            let rng = quad.range(k);
            let coef = |m: i64| -> C64 {
                rng.clone()
                    .map(|i| psi[i] * C64::from_polar(1.0, -(m as f64) * quad.angles[i]))
                    .sum::<C64>()
                    / n as f64
            };
            pos[k] = (0..=half as i64).map(coef).collect();
            neg[k] = (1..=half as i64).map(|m| coef(-m)).collect();
            pos[k][half] *= 0.5;
            neg[k][half - 1] = pos[k][half];
            dual_amp[k] = green
                .dual_terms()
                .iter()
                .map(|t| {
                    rng.clone()
                        .map(|i| weighted[i] * C64::from_polar(1.0, -v2::dot(t.k, quad.nodes[i])))
                        .sum()
                })
                .collect();
        }
        Self {
            pos,
            neg,
            dual_amp,
            weighted,
        }
    }

    /// Value and polar derivatives `(f, ∂_ρ f, ρ^{-1} ∂_φ f)` of the log part on circle `k`.
    fn log_part(&self, k: usize, r: f64, rho: f64, phi: f64) -> (C64, C64, C64) {
        let pos = &self.pos[k];
        let neg = &self.neg[k];
        let e = C64::from_polar(1.0, phi);
        let i = C64::i();
        if rho >= r {
            let z = e * (r / rho);
            let mut zp = C64::new(1.0, 0.0);
            let mut val = pos[0] * rho.ln();
            let mut drho = pos[0] / rho;
            let mut dphi = C64::new(0.0, 0.0);
            for m in 1..pos.len() {
                zp *= z;
                let zn = zp.conj();
                let (a, b) = (pos[m] * zp, neg[m - 1] * zn);
                let mf = m as f64;
                val -= (a + b) / (2.0 * mf);
                drho += (a + b) / (2.0 * rho);
                dphi -= i * (a - b) / (2.0 * rho);
            }
            (val * r, drho * r, dphi * r)
        } else {
            let t = rho / r;
            let mut val = pos[0] * (r * r.ln());
            let mut drho = C64::new(0.0, 0.0);
            let mut dphi = C64::new(0.0, 0.0);
            // (ρ/r)^{m-1} e^{±imφ}
            let mut zm1 = C64::new(1.0, 0.0);
            for m in 1..pos.len() {
                let zp = zm1 * e;
                let (a1, b1) = (pos[m] * zp, neg[m - 1] * zp.conj());
                let mf = m as f64;
                val -= (a1 + b1) * t / (2.0 * mf) * r;
                drho -= (a1 + b1) / 2.0;
                dphi -= i * (a1 - b1) / 2.0;
                zm1 *= e * t;
                if zm1.norm() < 1e-300 {
                    break;
                }
            }
            (val, drho, dphi)
        }
    }
}

/// Potentials of several densities sharing one [`FieldKernel`].
#[derive(Debug, Clone)]
pub struct LayerFields<'a> {
    kernel: &'a FieldKernel,
    modes: Vec<DensityModes>,
}

impl LayerFields<'_> {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Value and gradient of every potential at `x`.
    pub fn eval(&self, x: Vec2) -> Result<Vec<FieldPoint>> {
        let green = &self.kernel.green;
        let quad = &self.kernel.quad;
        let lat = green.lattice();
        let alpha = green.alpha();
        let r = quad.geometry.radius;
        let dual = green.dual_terms();
        let mut out = vec![FieldPoint::default(); self.modes.len()];
        let mut kr = Vec::with_capacity(quad.n_per_boundary);
        let mut ex = Vec::with_capacity(dual.len());
        for k in 0..2 {
            let c = quad.geometry.centers[k];
            let (_, l) = lat.nearest_point(v2::sub(x, c));
            let xp = v2::sub(x, l);
            let phase = C64::from_polar(1.0, v2::dot(alpha, l));
            let rel = v2::sub(xp, c);
            let rho = v2::norm(rel);
            let phi = rel[1].atan2(rel[0]);
            let (cs, sn) = (phi.cos(), phi.sin());

            kr.clear();
            for j in quad.range(k) {
                let d = v2::sub(xp, quad.nodes[j]);
                kr.push((green.real_checked(d, true)?, green.real_grad_checked(d, true)?));
            }
            ex.clear();
            ex.extend(dual.iter().map(|t| C64::from_polar(t.coef, v2::dot(t.k, xp))));

            for (fp, md) in out.iter_mut().zip(&self.modes) {
                let (lv, dr, dp) = md.log_part(k, r, rho, phi);
                let mut val = lv;
                let mut g = [dr * cs - dp * sn, dr * sn + dp * cs];
                for (q, t) in dual.iter().enumerate() {
                    let e = ex[q] * md.dual_amp[k][q];
                    val += e;
                    let ie = C64::i() * e;
                    g[0] += ie * t.k[0];
                    g[1] += ie * t.k[1];
                }
                for (jj, j) in quad.range(k).enumerate() {
                    let w = md.weighted[j];
                    val += w * kr[jj].0;
                    g[0] += w * kr[jj].1[0];
                    g[1] += w * kr[jj].1[1];
                }
                fp.value += phase * val;
                fp.grad[0] += phase * g[0];
                fp.grad[1] += phase * g[1];
            }
        }
        Ok(out)
    }

    /// [`LayerFields::eval`] over many points, in order.
    pub fn eval_many(&self, xs: &[Vec2]) -> Result<Vec<Vec<FieldPoint>>> {
        xs.par_iter().map(|&x| self.eval(x)).collect()
    }
}

/// Values of `S_j^α` on a point set together with a flag for points that lie within the
/// exclusion distance of `∂D` (where accuracy may degrade).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldValues {
    pub values: Vec<C64>,
    pub near_boundary: Vec<bool>,
}

/// `S_j^α` (`j ∈ {1, 2}`) at the given points.
pub fn eval_s(
    j: usize,
    alpha: Vec2,
    points: &[Vec2],
    quad: &BoundaryQuadrature,
    gp: &GreenParams,
) -> Result<FieldValues> {
    if !(j == 1 || j == 2) {
        return Err(invalid(format!("mode index must be 1 or 2, got {j}")));
    }
    let sol: DensitySolution = super::solve_densities(alpha, quad, gp)?;
    let kernel = FieldKernel::new(alpha, quad, gp)?;
    let fields = kernel.fields(&[sol.psi(j - 1)])?;
    let values = fields
        .eval_many(points)?
        .into_iter()
        .map(|v| v[0].value)
        .collect();
    let near_boundary = points
        .iter()
        .map(|&x| quad.geometry.distance_to_boundary(x) < gp.exclusion_radius)
        .collect();
    Ok(FieldValues {
        values,
        near_boundary,
    })
}
