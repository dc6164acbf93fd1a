//! The α-quasiperiodic Green's function of the Laplacian on the triangular lattice,
//!
//! ```text
//! G(x) = -(1/|Y|) Σ_{q∈Λ*} e^{i(α+q)·x} / |α+q|²,      ΔG = Σ_{l∈Λ} e^{iα·l} δ(x - l),
//! ```
//!
//! so that `G(x) = (1/2π) log|x| + smooth` near the origin.
//!
//! Two evaluation routes are provided:
//!
//! * [`GreenMethod::Ewald`]: the dual sum is damped by `e^{-|k|²/4η²}` and the remainder is
//!   summed in real space as `-(1/4π) Σ_l e^{iα·l} E1(η²|x-l|²)`.
//! * [`GreenMethod::SpectralCutoff`]: the dual sum alone, truncated at `cutoff_radius` with a
//!   heat-kernel damping `e^{-|k|²τ}` that makes it absolutely convergent. The neglected
//!   real-space part is bounded explicitly; evaluation fails when that bound exceeds the
//!   requested tolerance (points too close to the lattice for the given cutoff).

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{v2, Lattice, Vec2};
use crate::special::{e1, ein, EULER_GAMMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenMethod {
    SpectralCutoff,
    Ewald,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenParams {
    pub lattice: Lattice,
    pub alpha: Vec2,
    pub method: GreenMethod,
    /// Dual-space truncation radius of the spectral route.
    pub cutoff_radius: f64,
    /// Ewald splitting parameter η (inverse length).
    pub ewald_split: f64,
    pub target_tol: f64,
    /// Points closer than this to `Λ` are rejected.
    pub exclusion_radius: f64,
}

impl GreenParams {
    pub fn new(lattice: Lattice, alpha: Vec2) -> Self {
        let l = lattice.constant;
        Self {
            lattice,
            alpha,
            method: GreenMethod::Ewald,
            cutoff_radius: 40.0 * 2.0 * PI / l,
            ewald_split: PI.sqrt() / l,
            target_tol: 1e-12,
            exclusion_radius: 1e-10 * l,
        }
    }

    pub fn with_method(mut self, method: GreenMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.target_tol = tol;
        self
    }

    pub fn with_split(mut self, eta: f64) -> Self {
        self.ewald_split = eta;
        self
    }

    pub fn with_cutoff(mut self, radius: f64) -> Self {
        self.cutoff_radius = radius;
        self
    }

    pub fn with_alpha(mut self, alpha: Vec2) -> Self {
        self.alpha = alpha;
        self
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("cutoff_radius", self.cutoff_radius)?;
        positive("ewald_split", self.ewald_split)?;
        positive("target_tol", self.target_tol)?;
        positive("exclusion_radius", self.exclusion_radius)?;
        if !(self.alpha[0].is_finite() && self.alpha[1].is_finite()) {
            return Err(invalid("quasimomentum must be finite"));
        }
        let d = self.lattice.distance_to_dual_lattice(self.alpha);
        if d < 1e-9 * v2::norm(self.lattice.a1) {
            return Err(invalid(format!(
                "quasimomentum {:?} is congruent to 0 modulo the dual lattice",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DualTerm {
    pub k: Vec2,
    pub coef: f64,
}

#[derive(Debug, Clone, Copy)]
struct Image {
    l: Vec2,
    phase: C64,
    is_origin: bool,
}

/// Precomputed evaluator for `G^{α,0}` and its gradient.
#[derive(Debug, Clone)]
pub struct QuasiGreen {
    params: GreenParams,
    /// Screening parameter of the real-space part (`1/(2√τ)` for the spectral route).
    eta: f64,
    z_max: f64,
    dual: Vec<DualTerm>,
    images: Vec<Image>,
}

const MAX_TERMS: usize = 2_000_000;

impl QuasiGreen {
    pub fn new(params: GreenParams) -> Result<Self> {
        params.validate()?;
        let lat = &params.lattice;
        let z_max = (1.0 / params.target_tol).ln() + 6.0;
        let (eta, k_max) = match params.method {
            GreenMethod::Ewald => {
                let eta = params.ewald_split;
                (eta, 2.0 * eta * z_max.sqrt())
            }
            GreenMethod::SpectralCutoff => {
                let k = params.cutoff_radius;
                // e^{-k²τ} = e^{-z_max} at the cutoff
                let tau = z_max / (k * k);
                (0.5 / tau.sqrt(), k)
            }
        };
        let y_area = lat.cell_area;
        let dual = collect_dual(lat, params.alpha, k_max, |k2| {
            -(-k2 / (4.0 * eta * eta)).exp() / (y_area * k2)
        })?;
        // reduced points satisfy |x| ≤ L/√3
        let r_img = z_max.sqrt() / eta + lat.constant / 3f64.sqrt() + lat.constant;
        let images = collect_images(lat, params.alpha, r_img)?;
        Ok(Self {
            params,
            eta,
            z_max,
            dual,
            images,
        })
    }

    pub fn params(&self) -> &GreenParams {
        &self.params
    }

    pub fn alpha(&self) -> Vec2 {
        self.params.alpha
    }

    pub fn lattice(&self) -> &Lattice {
        &self.params.lattice
    }

    pub(crate) fn dual_terms(&self) -> &[DualTerm] {
        &self.dual
    }

    /// Number of dual and real-space terms in use.
    pub fn term_counts(&self) -> (usize, usize) {
        (self.dual.len(), self.images.len())
    }

    /// Splits `x = x_r + l` with `l ∈ Λ` nearest to `x`; returns `(x_r, e^{iα·l})`.
    pub fn reduce(&self, x: Vec2) -> (Vec2, C64) {
        let (_, l) = self.params.lattice.nearest_point(x);
        let phase = C64::from_polar(1.0, v2::dot(self.params.alpha, l));
        (v2::sub(x, l), phase)
    }

    fn check_point(&self, xr: Vec2, x: Vec2) -> Result<()> {
        let d = v2::norm(xr);
        if d < self.params.exclusion_radius || !d.is_finite() {
            return Err(Error::SingularEvaluation { point: x, distance: d });
        }
        Ok(())
    }

    /// `G^{α,0}(x)`.
    pub fn eval(&self, x: Vec2) -> Result<C64> {
        let (xr, phase) = self.reduce(x);
        self.check_point(xr, x)?;
        self.check_spectral(xr, false, false)?;
        Ok(phase * (self.spectral(xr) + self.real(xr, false)))
    }

    /// `∇_x G^{α,0}(x)`.
    pub fn grad(&self, x: Vec2) -> Result<[C64; 2]> {
        let (xr, phase) = self.reduce(x);
        self.check_point(xr, x)?;
        self.check_spectral(xr, true, false)?;
        let s = self.spectral_grad(xr);
        let r = self.real_grad(xr, false);
        Ok([phase * (s[0] + r[0]), phase * (s[1] + r[1])])
    }

    /// `G^{α,0}(x) - (1/2π) log|x|`, finite at `x = 0`.
    ///
    /// Intended for `|x|` below the lattice constant; `x` must stay away from `Λ \ {0}`.
    pub fn smooth(&self, x: Vec2) -> Result<C64> {
        let (xr, _) = self.reduce(x);
        if v2::norm2(v2::sub(x, xr)) == 0.0 {
            self.check_spectral(xr, false, true)?;
            Ok(self.spectral(xr) + self.real(xr, true))
        } else {
            Ok(self.eval(x)? - v2::norm(x).ln() / (2.0 * PI))
        }
    }

    /// Gradient of [`QuasiGreen::smooth`].
    pub fn smooth_grad(&self, x: Vec2) -> Result<[C64; 2]> {
        let (xr, _) = self.reduce(x);
        if v2::norm2(v2::sub(x, xr)) == 0.0 {
            self.check_spectral(xr, true, true)?;
            let s = self.spectral_grad(xr);
            let r = self.real_grad(xr, true);
            Ok([s[0] + r[0], s[1] + r[1]])
        } else {
            let g = self.grad(x)?;
            let r2 = v2::norm2(x);
            let c = 1.0 / (2.0 * PI * r2);
            Ok([g[0] - c * x[0], g[1] - c * x[1]])
        }
    }

    /// Evaluates `G` at many points.
    pub fn eval_many(&self, xs: &[Vec2]) -> Result<Vec<C64>> {
        xs.par_iter().map(|&x| self.eval(x)).collect()
    }

    /// Bound on the real-space part dropped by the spectral route at a reduced point.
    ///
    /// With `skip_origin` the origin image is excluded (it is carried analytically by the
    /// smooth-part evaluators).
    pub fn spectral_error_estimate(&self, xr: Vec2, gradient: bool, skip_origin: bool) -> f64 {
        let eta2 = self.eta * self.eta;
        let mut est = 0.0;
        for img in &self.images {
            if skip_origin && img.is_origin {
                continue;
            }
            let d = v2::sub(xr, img.l);
            let r2 = v2::norm2(d);
            let z = eta2 * r2;
            if z > self.z_max + 40.0 || r2 == 0.0 {
                continue;
            }
            est += if gradient {
                (-z).exp() / (2.0 * PI * r2.sqrt())
            } else {
                e1(z) / (4.0 * PI)
            };
        }
        est
    }

    fn check_spectral(&self, xr: Vec2, gradient: bool, smooth: bool) -> Result<()> {
        if self.params.method != GreenMethod::SpectralCutoff {
            return Ok(());
        }
        let est = self.spectral_error_estimate(xr, gradient, smooth);
        if est > self.params.target_tol {
            return Err(Error::Convergence {
                context: format!(
                    "spectral lattice sum at reduced point {xr:?} with cutoff {}",
                    self.params.cutoff_radius
                ),
                achieved: est,
                target: self.params.target_tol,
            });
        }
        Ok(())
    }

    /// Real-space part at a displacement within one cell diameter of the origin,
    /// with the spectral-route error bound enforced.
    pub(crate) fn real_checked(&self, d: Vec2, smooth: bool) -> Result<C64> {
        self.check_spectral(d, false, smooth)?;
        Ok(self.real(d, smooth))
    }

    pub(crate) fn real_grad_checked(&self, d: Vec2, smooth: bool) -> Result<[C64; 2]> {
        self.check_spectral(d, true, smooth)?;
        Ok(self.real_grad(d, smooth))
    }

    pub(crate) fn spectral(&self, x: Vec2) -> C64 {
        self.dual
            .iter()
            .map(|t| C64::from_polar(t.coef, v2::dot(t.k, x)))
            .sum()
    }

    pub(crate) fn spectral_grad(&self, x: Vec2) -> [C64; 2] {
        let mut g = [C64::new(0.0, 0.0); 2];
        for t in &self.dual {
            let e = C64::from_polar(t.coef, v2::dot(t.k, x)) * C64::i();
            g[0] += e * t.k[0];
            g[1] += e * t.k[1];
        }
        g
    }

    /// Real-space part at a reduced point; with `smooth` the origin image has its
    /// logarithm removed. The spectral route keeps only that origin image.
    pub(crate) fn real(&self, x: Vec2, smooth: bool) -> C64 {
        let eta2 = self.eta * self.eta;
        if self.params.method == GreenMethod::SpectralCutoff {
            return if smooth {
                C64::new(self.origin_smooth(eta2 * v2::norm2(x)), 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
        }
        let mut acc = C64::new(0.0, 0.0);
        for img in &self.images {
            let d = v2::sub(x, img.l);
            let z = eta2 * v2::norm2(d);
            if img.is_origin && smooth {
                acc += self.origin_smooth(z);
                continue;
            }
            if z > self.z_max {
                continue;
            }
            acc += img.phase * (-e1(z) / (4.0 * PI));
        }
        acc
    }

    /// `-(1/4π) E1(z) - (1/2π) log r` with `z = η² r²`.
    fn origin_smooth(&self, z: f64) -> f64 {
        (EULER_GAMMA - ein(z)) / (4.0 * PI) + self.eta.ln() / (2.0 * PI)
    }

    pub(crate) fn real_grad(&self, x: Vec2, smooth: bool) -> [C64; 2] {
        let eta2 = self.eta * self.eta;
        let spectral = self.params.method == GreenMethod::SpectralCutoff;
        let mut g = [C64::new(0.0, 0.0); 2];
        for img in &self.images {
            let d = v2::sub(x, img.l);
            let r2 = v2::norm2(d);
            let z = eta2 * r2;
            if img.is_origin && smooth {
                // (1/2π) x (e^{-z} - 1)/r², finite at r = 0
                let f = if z < 1e-8 {
                    -eta2 * (1.0 - 0.5 * z) / (2.0 * PI)
                } else {
                    (-z).exp_m1() / (2.0 * PI * r2)
                };
                g[0] += f * d[0];
                g[1] += f * d[1];
                continue;
            }
            if spectral || z > self.z_max {
                continue;
            }
            let f = img.phase * ((-z).exp() / (2.0 * PI * r2));
            g[0] += f * d[0];
            g[1] += f * d[1];
        }
        g
    }
}

fn collect_dual(
    lat: &Lattice,
    alpha: Vec2,
    k_max: f64,
    coef: impl Fn(f64) -> f64,
) -> Result<Vec<DualTerm>> {
    let n = (k_max / (lat.constant.recip() * 2.0 * PI * 0.5) + 2.0).ceil() as i64 + 1;
    if ((2 * n + 1) as usize).pow(2) > 20 * MAX_TERMS {
        return Err(Error::Convergence {
            context: format!("dual sum with radius {k_max} needs too many terms"),
            achieved: f64::INFINITY,
            target: 0.0,
        });
    }
    let mut out = Vec::new();
    for m1 in -n..=n {
        for m2 in -n..=n {
            let k = v2::add(alpha, lat.dual_point(m1, m2));
            let k2 = v2::norm2(k);
            if k2 <= k_max * k_max {
                let c = coef(k2);
                if c != 0.0 {
                    out.push(DualTerm { k, coef: c });
                }
            }
        }
    }
    if out.len() > MAX_TERMS {
        return Err(Error::Convergence {
            context: format!("dual sum with radius {k_max} needs {} terms", out.len()),
            achieved: f64::INFINITY,
            target: 0.0,
        });
    }
    Ok(out)
}

fn collect_images(lat: &Lattice, alpha: Vec2, radius: f64) -> Result<Vec<Image>> {
    // minimum distance between lattice lines is (√3/2) L
    let n = (radius / (lat.constant * 3f64.sqrt() / 2.0)).ceil() as i64 + 1;
    let mut out = Vec::new();
    for m1 in -n..=n {
        for m2 in -n..=n {
            let l = lat.point(m1, m2);
            if v2::norm(l) <= radius {
                out.push(Image {
                    l,
                    phase: C64::from_polar(1.0, v2::dot(alpha, l)),
                    is_origin: m1 == 0 && m2 == 0,
                });
            }
        }
    }
    if out.len() > MAX_TERMS {
        return Err(invalid("real-space image set too large"));
    }
    Ok(out)
}

/// `G^{α,0}(x)` for one point.
pub fn greens0(params: &GreenParams, x: Vec2) -> Result<C64> {
    QuasiGreen::new(*params)?.eval(x)
}

/// `∇G^{α,0}(x)` for one point.
pub fn grad_greens0(params: &GreenParams, x: Vec2) -> Result<[C64; 2]> {
    QuasiGreen::new(*params)?.grad(x)
}
