//! Leading-order subwavelength bands `ω² = δ λ(C^α)/|D_1|`, the Dirac-cone fit and the
//! near-cone eigenvector expansion.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{v2, Lattice, Vec2};
use crate::layerpot::{capacitance, BoundaryQuadrature, CapacitanceResult};
use crate::quasigreen::GreenParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSample {
    pub alpha: Vec2,
    pub omega1: f64,
    pub omega2: f64,
    pub delta: f64,
}

/// The two subwavelength frequencies at `alpha`, ascending.
pub fn band_pair(
    alpha: Vec2,
    delta: f64,
    cap: &CapacitanceResult,
    d1_area: f64,
) -> Result<BandSample> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(invalid(format!("contrast δ must be positive, got {delta}")));
    }
    if !(d1_area.is_finite() && d1_area > 0.0) {
        return Err(invalid(format!("inclusion area must be positive, got {d1_area}")));
    }
    let [lo, hi] = cap.eigenvalues();
    if !(lo >= 0.0) {
        return Err(Error::Inconsistency(format!(
            "capacitance eigenvalue {lo} is negative at α = {alpha:?}"
        )));
    }
    Ok(BandSample {
        alpha,
        omega1: (delta * lo / d1_area).sqrt(),
        omega2: (delta * hi / d1_area).sqrt(),
        delta,
    })
}

/// Band pairs at many quasimomenta.
pub fn band_sweep(
    alphas: &[Vec2],
    delta: f64,
    quad: &BoundaryQuadrature,
    gp: &GreenParams,
) -> Result<Vec<BandSample>> {
    let area = quad.geometry.inclusion_area();
    alphas
        .par_iter()
        .map(|&a| band_pair(a, delta, &capacitance(a, quad, gp)?, area))
        .collect()
}

/// Radii and directions of `β = α - α*` sampled by [`cone_fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeWindow {
    pub radii: Vec<f64>,
    pub directions: Vec<Vec2>,
}

impl ConeWindow {
    /// `count` radii evenly spaced up to `fraction·|α*|`, and `n_dir` evenly spaced directions.
    pub fn new(lat: &Lattice, fraction: f64, count: usize, n_dir: usize) -> Result<Self> {
        if !(fraction.is_finite() && fraction > 0.0 && fraction < 1.0) {
            return Err(invalid(format!(
                "cone window fraction must lie in (0, 1), got {fraction}"
            )));
        }
        let rmax = fraction * v2::norm(lat.dirac_point());
        Ok(Self {
            radii: (1..=count).map(|k| rmax * k as f64 / count as f64).collect(),
            directions: (0..n_dir)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n_dir as f64;
                    [t.cos(), t.sin()]
                })
                .collect(),
        })
    }

    /// Five radii up to `0.05|α*|` in eight directions.
    pub fn default_for(lat: &Lattice) -> Self {
        Self::new(lat, 0.05, 5, 8).expect("default window is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeFit {
    pub delta: f64,
    /// Direction average of the fitted slopes of `(ω_2 - ω_1)/2` against `|β|`.
    pub lambda_fit: f64,
    /// `½ sqrt(1/(|D_1| c_1^{α*})) |c| √δ`.
    pub lambda_formula: f64,
    /// `sqrt(δ c_1^{α*}/|D_1|)`.
    pub omega_star: f64,
    /// Fitted value of `ω_{1,2}` at `β = 0`, averaged over bands and directions.
    pub intercept: f64,
    /// `max_d |λ_d - λ_fit| / λ_fit`.
    pub anisotropy: f64,
    /// Per-direction slopes.
    pub slopes: Vec<f64>,
    /// Largest RMS residual of the half-gap fit relative to `λ_fit · max radius`.
    pub fit_residual: f64,
    pub samples: Vec<BandSample>,
}

/// Relative fit residual above which the window is judged too wide for a cone.
const CONE_FIT_TOL: f64 = 1e-2;

/// Least-squares coefficients of `y ≈ Σ_k p_k r^{e_k}`.
fn poly_fit(r: &[f64], y: &[f64], exps: &[i32]) -> Result<(Vec<f64>, f64)> {
    let a = DMatrix::from_fn(r.len(), exps.len(), |i, k| r[i].powi(exps[k]));
    let b = DVector::from_column_slice(y);
    let p = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Solver {
            reason: format!("cone least squares: {e}"),
            condition: f64::INFINITY,
        })?;
    let res = (&a * &p - &b).norm() / (r.len() as f64).sqrt();
    Ok((p.iter().copied().collect(), res))
}

/// Samples the two bands around `α*` and fits the cone slope and vertex.
pub fn cone_fit(
    delta: f64,
    c: C64,
    quad: &BoundaryQuadrature,
    gp: &GreenParams,
    window: &ConeWindow,
) -> Result<ConeFit> {
    let lat = quad.geometry.lattice;
    let a = lat.dirac_point();
    if window.radii.len() < 3 || window.directions.len() < 4 {
        return Err(invalid("cone fit needs at least 3 radii and 4 directions"));
    }
    if window.radii.iter().any(|&r| !(r.is_finite() && r > 0.0)) {
        return Err(invalid("cone radii must be positive"));
    }
    if !(c.norm() > 0.0) {
        return Err(Error::DegenerateCone("coefficient c vanishes".into()));
    }
    let area = quad.geometry.inclusion_area();
    let c1_star = capacitance(a, quad, gp)?.c1;
    let omega_star = (delta * c1_star / area).sqrt();
    let lambda_formula = 0.5 * (1.0 / (area * c1_star)).sqrt() * c.norm() * delta.sqrt();

    let alphas: Vec<Vec2> = window
        .directions
        .iter()
        .flat_map(|d| {
            let d = v2::scale(1.0 / v2::norm(*d), *d);
            window.radii.iter().map(move |&r| v2::add(a, v2::scale(r, d)))
        })
        .collect();
    let samples = band_sweep(&alphas, delta, quad, gp)?;

    let nr = window.radii.len();
    let rmax = window.radii.iter().cloned().fold(0.0, f64::max);
    let mut slopes = Vec::new();
    let mut intercepts = Vec::new();
    let mut residuals = Vec::new();
    for chunk in samples.chunks(nr) {
        let half: Vec<f64> = chunk.iter().map(|s| 0.5 * (s.omega2 - s.omega1)).collect();
        let (p, res) = poly_fit(&window.radii, &half, &[1, 2])?;
        slopes.push(p[0]);
        residuals.push(res);
        for band in [0, 1] {
            let w: Vec<f64> = chunk
                .iter()
                .map(|s| if band == 0 { s.omega1 } else { s.omega2 })
                .collect();
            intercepts.push(poly_fit(&window.radii, &w, &[0, 1, 2])?.0[0]);
        }
    }
    let lambda_fit = slopes.iter().sum::<f64>() / slopes.len() as f64;
    if !(lambda_fit > 0.0) {
        return Err(Error::DegenerateCone(format!(
            "fitted cone slope {lambda_fit:e} is not positive"
        )));
    }
    let anisotropy = slopes
        .iter()
        .map(|s| (s - lambda_fit).abs() / lambda_fit)
        .fold(0.0, f64::max);
    let fit_residual = residuals.iter().cloned().fold(0.0, f64::max) / (lambda_fit * rmax);
    if fit_residual > CONE_FIT_TOL {
        return Err(Error::ConeWindow(format!(
            "relative fit residual {fit_residual:e} exceeds {CONE_FIT_TOL:e}; shrink the radii"
        )));
    }
    Ok(ConeFit {
        delta,
        lambda_fit,
        lambda_formula,
        omega_star,
        intercept: intercepts.iter().sum::<f64>() / intercepts.len() as f64,
        anisotropy,
        slopes,
        fit_residual,
        samples,
    })
}

/// `A(β) = (c/|c|)(β_1 - iβ_2)/|β|`.
pub fn predicted_phase(beta: Vec2, c: C64) -> Result<C64> {
    let b = v2::norm(beta);
    if !(b > 0.0) {
        return Err(Error::DegenerateInput("A(β) is undefined at β = 0".into()));
    }
    if !(c.norm() > 0.0) {
        return Err(Error::DegenerateCone("coefficient c vanishes".into()));
    }
    Ok(c / c.norm() * C64::new(beta[0], -beta[1]) / b)
}

/// Largest distance, modulo a global phase, between the normalized eigenvectors of
/// `C^{α*+β}` (ascending eigenvalues) and `(A(β)/√2, ∓1/√2)`.
pub fn eigvec_expansion_check(beta: Vec2, cap: &CapacitanceResult, c: C64) -> Result<f64> {
    let a = predicted_phase(beta, c)?;
    let m = cap.matrix;
    let h = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
    // symmetrize away quadrature-level non-Hermitian noise
    let h = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let gap = cap.c2.norm();
    if !(gap > 1e-12 * cap.c1.abs()) {
        return Err(Error::DegenerateInput(
            "capacitance eigenvalues coincide; eigenvectors are not determined".into(),
        ));
    }
    let eig = h.symmetric_eigen();
    let mut order = [0usize, 1];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let predicted = [[a * s, C64::new(-s, 0.0)], [a * s, C64::new(s, 0.0)]];
    let mut err: f64 = 0.0;
    for (p, &k) in predicted.iter().zip(&order) {
        let v = eig.eigenvectors.column(k);
        let v = v / C64::new(v.norm(), 0.0);
        let overlap = p[0].conj() * v[0] + p[1].conj() * v[1];
        err = err.max((2.0 - 2.0 * overlap.norm()).max(0.0).sqrt());
    }
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layerpot::{dirac_coefficient_c, discretize_boundary, InclusionGeometry};

    fn setup(n: usize) -> (InclusionGeometry, BoundaryQuadrature, GreenParams) {
        let lat = Lattice::new(None).unwrap();
        let g = InclusionGeometry::default_disks(lat);
        let q = discretize_boundary(&g, n).unwrap();
        (g, q.clone(), GreenParams::new(lat, lat.dirac_point()))
    }

    fn fake_cap(c1: f64, c2: C64) -> CapacitanceResult {
        CapacitanceResult {
            alpha: [0.0, 0.0],
            matrix: [[C64::new(c1, 0.0), c2], [c2.conj(), C64::new(c1, 0.0)]],
            c1,
            c2,
            hermitian_error: 0.0,
            diagonal_error: 0.0,
            residual: 0.0,
        }
    }

    #[test]
    fn band_pair_matches_direct_eigensolve_and_scales_with_delta() {
        let cap = fake_cap(5.0, C64::new(0.3, -0.4));
        let s = band_pair([0.1, 0.2], 1e-3, &cap, 2.0).unwrap();
        let h = Matrix2::new(
            cap.matrix[0][0],
            cap.matrix[0][1],
            cap.matrix[1][0],
            cap.matrix[1][1],
        );
        let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((s.omega1 - (1e-3 * ev[0] / 2.0).sqrt()).abs() < 1e-15);
        assert!((s.omega2 - (1e-3 * ev[1] / 2.0).sqrt()).abs() < 1e-15);
        let s4 = band_pair([0.1, 0.2], 4e-3, &cap, 2.0).unwrap();
        assert!((s4.omega1 - 2.0 * s.omega1).abs() < 1e-15);
        assert!((s4.omega2 - 2.0 * s.omega2).abs() < 1e-15);
        assert!((s.omega2.powi(2) - s.omega1.powi(2) - 2e-3 * 0.5 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn band_pair_rejects_bad_input() {
        let cap = fake_cap(1.0, C64::new(2.0, 0.0));
        assert!(matches!(
            band_pair([0.0, 0.0], 1.0, &cap, 1.0),
            Err(Error::Inconsistency(_))
        ));
        let cap = fake_cap(1.0, C64::new(0.0, 0.0));
        assert!(band_pair([0.0, 0.0], 0.0, &cap, 1.0).is_err());
        assert!(band_pair([0.0, 0.0], 1.0, &cap, -1.0).is_err());
    }

    #[test]
    fn predicted_phase_is_unimodular() {
        let c = C64::new(0.3, -2.0);
        for beta in [[1.0, 0.0], [0.3, -0.7], [-1e-6, 2e-6]] {
            assert!((predicted_phase(beta, c).unwrap().norm() - 1.0).abs() < 1e-15);
        }
        let a = predicted_phase([2.5, 0.0], c).unwrap();
        assert!((a - c / c.norm()).norm() < 1e-15);
        assert!(predicted_phase([0.0, 0.0], c).is_err());
    }

    #[test]
    fn eigvec_check_on_exact_linear_model_is_zero() {
        let c = C64::new(0.0, -6.0);
        for t in [0.0f64, 1.0, 2.5, 4.0] {
            let beta = [1e-3 * t.cos(), 1e-3 * t.sin()];
            let c2 = c * C64::new(beta[0], -beta[1]);
            let err = eigvec_expansion_check(beta, &fake_cap(5.0, c2), c).unwrap();
            assert!(err < 1e-12, "{err}");
        }
        assert!(matches!(
            eigvec_expansion_check([1e-3, 0.0], &fake_cap(5.0, C64::new(0.0, 0.0)), c),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn bands_touch_at_dirac_point_and_are_time_reversal_symmetric() {
        let (g, q, gp) = setup(64);
        let lat = g.lattice;
        let a = lat.dirac_point();
        let s = band_sweep(&[a], 1e-2, &q, &gp).unwrap()[0];
        assert!(s.omega2 - s.omega1 < 1e-6 * s.omega1);
        let alphas = [[0.3, -0.8], [1.1, 0.2]];
        let minus: Vec<Vec2> = alphas.iter().map(|x| v2::scale(-1.0, *x)).collect();
        let shifted: Vec<Vec2> = minus.iter().map(|x| v2::add(*x, lat.a1)).collect();
        let p = band_sweep(&alphas, 1e-2, &q, &gp).unwrap();
        for other in [minus, shifted] {
            let m = band_sweep(&other, 1e-2, &q, &gp).unwrap();
            for (x, y) in p.iter().zip(&m) {
                assert!((x.omega1 - y.omega1).abs() < 1e-8 * x.omega1);
                assert!((x.omega2 - y.omega2).abs() < 1e-8 * x.omega2);
                assert!(x.omega1 <= x.omega2);
            }
        }
    }

    #[test]
    fn cone_fit_matches_formula_and_shrinking_window_reduces_residual() {
        let (g, q, gp) = setup(64);
        let lat = g.lattice;
        let h = 1e-3 * v2::norm(lat.dirac_point());
        let c = dirac_coefficient_c(&g, &q, &gp, h).unwrap().c_fd;
        let wide = ConeWindow::new(&lat, 0.05, 4, 4).unwrap();
        let fit = cone_fit(1e-4, c, &q, &gp, &wide).unwrap();
        assert!((fit.lambda_fit / fit.lambda_formula - 1.0).abs() < 0.02, "{fit:?}");
        assert!(fit.anisotropy < 0.02);
        assert!((fit.intercept / fit.omega_star - 1.0).abs() < 1e-3);
        let narrow = ConeWindow::new(&lat, 0.025, 4, 4).unwrap();
        let fit2 = cone_fit(1e-4, c, &q, &gp, &narrow).unwrap();
        assert!(fit2.fit_residual < fit.fit_residual);

        let huge = ConeWindow::new(&lat, 0.9, 4, 4).unwrap();
        assert!(matches!(
            cone_fit(1e-4, c, &q, &gp, &huge),
            Err(Error::ConeWindow(_)) | Err(Error::Solver { .. })
        ));
    }
}
