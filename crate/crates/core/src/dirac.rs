//! The effective Dirac system
//! `2iω* ∂_t (V_1, V_2) = (a(∂_1 + i∂_2) V_2, -ā(∂_1 - i∂_2) V_1)`
//! for wave-packet envelopes, solved exactly per Fourier mode on a periodic grid.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::Vec2;

/// Leading-order constants of the envelope equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiracParams {
    pub delta: f64,
    pub omega_star: f64,
    pub a_delta: C64,
    /// `η_# = i a_δ / (2ω*)`.
    pub eta_sharp: C64,
    /// Cone slope `½ sqrt(1/(|D_1| c_1^{α*})) |c| √δ`.
    pub lambda_delta: f64,
}

pub fn dirac_params(delta: f64, c: C64, d1_area: f64, c1_star: f64) -> Result<DiracParams> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(invalid(format!("contrast δ must be positive, got {delta}")));
    }
    if !(d1_area.is_finite() && d1_area > 0.0 && c1_star.is_finite() && c1_star > 0.0) {
        return Err(invalid("inclusion area and c1 must be positive"));
    }
    if !(c.norm() > 0.0 && c.norm().is_finite()) {
        return Err(Error::DegenerateCone(format!("coefficient c = {c} vanishes")));
    }
    let omega_star = (c1_star * delta / d1_area).sqrt();
    let a_delta = C64::i() * c * (delta / d1_area);
    Ok(DiracParams {
        delta,
        omega_star,
        a_delta,
        eta_sharp: C64::i() * a_delta / (2.0 * omega_star),
        lambda_delta: 0.5 * (1.0 / (d1_area * c1_star)).sqrt() * c.norm() * delta.sqrt(),
    })
}

pub type Mat2 = [[C64; 2]; 2];

/// `Ω(ξ) = [[0, η(ξ_1 + iξ_2)], [conj(η)(ξ_1 - iξ_2), 0]]`.
pub fn omega_symbol(xi: Vec2, p: &DiracParams) -> Mat2 {
    let z = C64::new(xi[0], xi[1]);
    let zero = C64::new(0.0, 0.0);
    [[zero, p.eta_sharp * z], [p.eta_sharp.conj() * z.conj(), zero]]
}

fn sgn(z: C64) -> C64 {
    if z.norm() == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        z / z.norm()
    }
}

/// `e^{-iΩ(ξ)t}` in closed form.
pub fn propagator(xi: Vec2, t: f64, p: &DiracParams) -> Mat2 {
    let eta = p.eta_sharp;
    let k = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    let th = eta.norm() * k * t;
    let (s, c) = th.sin_cos();
    let cc = C64::new(c, 0.0);
    [
        [cc, s * sgn(eta * C64::new(xi[1], -xi[0]))],
        [s * sgn(eta.conj() * C64::new(-xi[1], -xi[0])), cc],
    ]
}

/// Square periodic box `[-span/2, span/2)²` with `n` points per axis.
/// Arrays are stored with the `x_1` index major: entry `i*n + j` sits at `(x_i, x_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub span: f64,
}

impl Grid {
    pub fn new(n: usize, span: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(invalid(format!("grid size must be even and at least 4, got {n}")));
        }
        if !(span.is_finite() && span > 0.0) {
            return Err(invalid(format!("box side must be positive, got {span}")));
        }
        Ok(Self { n, span })
    }

    pub fn spacing(&self) -> f64 {
        self.span / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.span + i as f64 * self.spacing()
    }

    pub fn point(&self, idx: usize) -> Vec2 {
        [self.coord(idx / self.n), self.coord(idx % self.n)]
    }

    pub fn points(&self) -> Vec<Vec2> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Angular wavenumber of FFT bin `k`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        let k = if k < self.n / 2 { k as f64 } else { k as f64 - self.n as f64 };
        2.0 * PI * k / self.span
    }

    /// Wave vector of flat FFT index `idx`.
    pub fn xi(&self, idx: usize) -> Vec2 {
        [self.wavenumber(idx / self.n), self.wavenumber(idx % self.n)]
    }

    pub fn sample(&self, f: impl Fn(Vec2) -> C64 + Sync) -> Vec<C64> {
        (0..self.len()).into_par_iter().map(|i| f(self.point(i))).collect()
    }

    /// Discrete `L²` norm `sqrt(Σ|f|² h²)`.
    pub fn l2(&self, f: &[C64]) -> f64 {
        let h = self.spacing();
        (f.iter().map(|v| v.norm_sqr()).sum::<f64>() * h * h).sqrt()
    }
}

/// Two-dimensional FFT on a [`Grid`]; the inverse is normalized.
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n: grid.n,
            fwd: planner.plan_fft_forward(grid.n),
            inv: planner.plan_fft_inverse(grid.n),
        }
    }

    fn run(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        // along x_2 (contiguous), then along x_1 via a transpose
        data.par_chunks_mut(n).for_each(|row| plan.process(row));
        let mut t = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = data[i * n + j];
            }
        }
        t.par_chunks_mut(n).for_each(|row| plan.process(row));
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = t[j * n + i];
            }
        }
    }

    pub fn forward(&self, f: &[C64]) -> Vec<C64> {
        let mut d = f.to_vec();
        self.run(&mut d, &self.fwd);
        d
    }

    pub fn inverse(&self, f: &[C64]) -> Vec<C64> {
        let mut d = f.to_vec();
        self.run(&mut d, &self.inv);
        let s = 1.0 / (self.n * self.n) as f64;
        d.iter_mut().for_each(|v| *v *= s);
        d
    }
}

fn check_len(grid: &Grid, arrays: &[&[C64]]) -> Result<()> {
    for a in arrays {
        if a.len() != grid.len() {
            return Err(invalid(format!(
                "array of length {} does not match the {}² grid",
                a.len(),
                grid.n
            )));
        }
    }
    Ok(())
}

/// Applies `e^{-iΩ(ξ)t}` mode by mode to Fourier coefficients.
pub fn propagate_fourier(
    grid: &Grid,
    f1hat: &[C64],
    f2hat: &[C64],
    t: f64,
    p: &DiracParams,
) -> Result<(Vec<C64>, Vec<C64>)> {
    check_len(grid, &[f1hat, f2hat])?;
    if !t.is_finite() {
        return Err(invalid("time must be finite"));
    }
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| {
            let u = propagator(grid.xi(i), t, p);
            (
                u[0][0] * f1hat[i] + u[0][1] * f2hat[i],
                u[1][0] * f1hat[i] + u[1][1] * f2hat[i],
            )
        })
        .unzip())
}

/// Envelopes `(V_1, V_2)` on a grid at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeField {
    pub grid: Grid,
    pub v1: Vec<C64>,
    pub v2: Vec<C64>,
    pub time: f64,
    /// Largest modulus on the outermost grid ring divided by the peak modulus.
    pub edge_ratio: f64,
    /// Set when `edge_ratio` exceeds [`EDGE_TOL`], i.e. the box is too small for the
    /// periodic wrap to be negligible.
    pub wrap_warning: bool,
}

/// Edge-to-peak ratio above which the periodic box is flagged.
pub const EDGE_TOL: f64 = 1e-10;

impl EnvelopeField {
    pub fn new(grid: Grid, v1: Vec<C64>, v2: Vec<C64>, time: f64) -> Result<Self> {
        check_len(&grid, &[&v1, &v2])?;
        let n = grid.n;
        let peak = v1
            .iter()
            .chain(&v2)
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        let mut edge: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                    let k = i * n + j;
                    edge = edge.max(v1[k].norm()).max(v2[k].norm());
                }
            }
        }
        let edge_ratio = if peak > 0.0 { edge / peak } else { 0.0 };
        Ok(Self {
            grid,
            v1,
            v2,
            time,
            edge_ratio,
            wrap_warning: edge_ratio > EDGE_TOL,
        })
    }

    /// Discrete `‖V_1‖² + ‖V_2‖²`, square-rooted.
    pub fn l2(&self) -> f64 {
        self.grid.l2(&self.v1).hypot(self.grid.l2(&self.v2))
    }
}

/// Exact evolution of `initial` by time `t` (negative allowed).
pub fn evolve_real(initial: &EnvelopeField, t: f64, p: &DiracParams) -> Result<EnvelopeField> {
    let grid = initial.grid;
    let fft = Fft2::new(&grid);
    let (h1, h2) = propagate_fourier(
        &grid,
        &fft.forward(&initial.v1),
        &fft.forward(&initial.v2),
        t,
        p,
    )?;
    EnvelopeField::new(grid, fft.inverse(&h1), fft.inverse(&h2), initial.time + t)
}

/// Spectral `∂_1^{n_1} ∂_2^{n_2} f`.
pub fn spectral_derivative(grid: &Grid, f: &[C64], order: [u32; 2]) -> Result<Vec<C64>> {
    check_len(grid, &[f])?;
    let fft = Fft2::new(grid);
    let mut h = fft.forward(f);
    h.par_iter_mut().enumerate().for_each(|(i, v)| {
        let xi = grid.xi(i);
        *v *= C64::new(0.0, xi[0]).powu(order[0]) * C64::new(0.0, xi[1]).powu(order[1]);
    });
    Ok(fft.inverse(&h))
}

/// `(Θσ_1, Θσ_2)` with `Θ = diag(η, conj η)`.
pub fn theta_sigma(p: &DiracParams) -> (Mat2, Mat2) {
    let e = p.eta_sharp;
    let z = C64::new(0.0, 0.0);
    let i = C64::i();
    ([[z, e], [e.conj(), z]], [[z, -i * e], [i * e.conj(), z]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Grid sup-norm of `2iω*∂_t V - M(∂)V` with a central difference in time.
    pub dirac_residual: f64,
    /// Grid sup-norm over both components of `∂_t² V_j - |η|² ΔV_j`.
    pub wave_residual: f64,
}

/// Residuals at time `t` of the exact evolution of `initial`, with time derivatives by
/// central differences of step `dt` and space derivatives spectral.
pub fn residual_diagnostics(
    initial: &EnvelopeField,
    p: &DiracParams,
    t: f64,
    dt: f64,
) -> Result<ResidualReport> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    let grid = initial.grid;
    let fft = Fft2::new(&grid);
    let f1 = fft.forward(&initial.v1);
    let f2 = fft.forward(&initial.v2);
    let at = |s: f64| propagate_fourier(&grid, &f1, &f2, s, p);
    let (m1, m2) = at(t - dt)?;
    let (c1, c2) = at(t)?;
    let (p1, p2) = at(t + dt)?;
    let a = p.a_delta;
    let eta2 = p.eta_sharp.norm_sqr();
    let two_i_w = C64::new(0.0, 2.0 * p.omega_star);
    let n = grid.len();
    let mut d1 = vec![C64::new(0.0, 0.0); n];
    let mut d2 = d1.clone();
    let mut w1 = d1.clone();
    let mut w2 = d1.clone();
    for k in 0..n {
        let xi = grid.xi(k);
        let plus = C64::new(-xi[1], xi[0]); // i(ξ_1 + iξ_2)
        let minus = C64::new(xi[1], xi[0]); // i(ξ_1 - iξ_2)
        let k2 = xi[0] * xi[0] + xi[1] * xi[1];
        d1[k] = two_i_w * (p1[k] - m1[k]) / (2.0 * dt) - a * plus * c2[k];
        d2[k] = two_i_w * (p2[k] - m2[k]) / (2.0 * dt) + a.conj() * minus * c1[k];
        w1[k] = (p1[k] - 2.0 * c1[k] + m1[k]) / (dt * dt) + eta2 * k2 * c1[k];
        w2[k] = (p2[k] - 2.0 * c2[k] + m2[k]) / (dt * dt) + eta2 * k2 * c2[k];
    }
    let sup = |a: &[C64], b: &[C64]| {
        fft.inverse(a)
            .iter()
            .chain(fft.inverse(b).iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    };
    Ok(ResidualReport {
        dirac_residual: sup(&d1, &d2),
        wave_residual: sup(&w1, &w2),
    })
}

/// Gaussian profile `A exp(-|x - x_c|²/(2w²)) e^{ik·x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gaussian {
    pub center: Vec2,
    pub width: f64,
    pub amplitude: C64,
    #[serde(default)]
    pub wavevector: Vec2,
}

impl Gaussian {
    pub fn eval(&self, x: Vec2) -> C64 {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let r2 = d[0] * d[0] + d[1] * d[1];
        let ph = self.wavevector[0] * x[0] + self.wavevector[1] * x[1];
        self.amplitude * C64::from_polar((-r2 / (2.0 * self.width * self.width)).exp(), ph)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> DiracParams {
        dirac_params(1e-4, C64::new(0.0, -6.28), 3.22, 5.18).unwrap()
    }

    fn gaussian_field(n: usize) -> EnvelopeField {
        let grid = Grid::new(n, 40.0).unwrap();
        let g1 = Gaussian { center: [0.5, -0.3], width: 1.0, amplitude: C64::new(1.0, 0.0), wavevector: [0.0, 0.0] };
        let g2 = Gaussian { center: [-0.4, 0.2], width: 1.0, amplitude: C64::new(0.0, 0.5), wavevector: [0.7, 0.0] };
        EnvelopeField::new(grid, grid.sample(|x| g1.eval(x)), grid.sample(|x| g2.eval(x)), 0.0).unwrap()
    }

    #[test]
    fn params_satisfy_leading_order_identities() {
        let p = params();
        assert!((p.eta_sharp.norm() - p.a_delta.norm() / (2.0 * p.omega_star)).abs() < 1e-18);
        assert!((p.eta_sharp.norm() / p.lambda_delta - 1.0).abs() < 1e-12);
        let c = C64::new(0.0, -6.28);
        let ang = (p.a_delta.arg() - c.arg() - PI / 2.0).rem_euclid(2.0 * PI);
        assert!(ang < 1e-12 || (2.0 * PI - ang) < 1e-12);
        let q = dirac_params(3e-4, c, 3.22, 5.18).unwrap();
        assert!((q.a_delta / 3e-4 - p.a_delta / 1e-4).norm() < 1e-15);
        assert!(matches!(
            dirac_params(1e-4, C64::new(0.0, 0.0), 3.22, 5.18),
            Err(Error::DegenerateCone(_))
        ));
    }

    #[test]
    fn symbol_is_hermitian_with_cone_eigenvalues() {
        let p = params();
        let z = omega_symbol([0.0, 0.0], &p);
        assert!(z.iter().flatten().all(|v| v.norm() == 0.0));
        for xi in [[1.0, 0.0], [0.3, -2.0], [-5.0, 1.5]] {
            let m = omega_symbol(xi, &p);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((m[i][j] - m[j][i].conj()).norm() < 1e-15);
                }
            }
            // zero trace, so eigenvalues are ±sqrt(-det)
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let ev = (-det).sqrt();
            let k = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            assert!((ev.re - p.eta_sharp.norm() * k).abs() < 1e-15 && ev.im.abs() < 1e-15);
        }
    }

    #[test]
    fn propagator_matches_matrix_exponential() {
        let p = params();
        for xi in [[0.0, 0.0], [1.0, 0.0], [0.3, -2.0], [-7.0, 4.0]] {
            for t in [0.0, 1.0, -3.5, 200.0] {
                let m = omega_symbol(xi, &p);
                let a = nalgebra::Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]) * C64::new(0.0, -t);
                let e = a.exp();
                let u = propagator(xi, t, &p);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((u[i][j] - e[(i, j)]).norm() < 1e-12, "{xi:?} {t}");
                    }
                }
            }
        }
    }

    #[test]
    fn evolution_is_unitary_and_reversible() {
        let p = params();
        let f = gaussian_field(64);
        let same = evolve_real(&f, 0.0, &p).unwrap();
        for (a, b) in same.v1.iter().zip(&f.v1) {
            assert!((a - b).norm() < 1e-13);
        }
        let t = 300.0;
        let v = evolve_real(&f, t, &p).unwrap();
        assert!((v.l2() / f.l2() - 1.0).abs() < 1e-12);
        let back = evolve_real(&v, -t, &p).unwrap();
        for (a, b) in back.v1.iter().zip(&f.v1).chain(back.v2.iter().zip(&f.v2)) {
            assert!((a - b).norm() < 1e-11);
        }
        assert!(!f.wrap_warning);
        assert_eq!(v.time, t);
    }

    #[test]
    fn derivatives_commute_with_evolution_and_sobolev_norms_are_conserved() {
        let p = params();
        let f = gaussian_field(64);
        let g = f.grid;
        let t = 150.0;
        let v = evolve_real(&f, t, &p).unwrap();
        let df = EnvelopeField::new(
            g,
            spectral_derivative(&g, &f.v1, [1, 0]).unwrap(),
            spectral_derivative(&g, &f.v2, [1, 0]).unwrap(),
            0.0,
        )
        .unwrap();
        let vdf = evolve_real(&df, t, &p).unwrap();
        let dv1 = spectral_derivative(&g, &v.v1, [1, 0]).unwrap();
        for (a, b) in vdf.v1.iter().zip(&dv1) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((vdf.l2() / df.l2() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theta_sigma_anticommute() {
        let p = params();
        let (a, b) = theta_sigma(&p);
        let mul = |x: &Mat2, y: &Mat2| {
            let mut r = [[C64::new(0.0, 0.0); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        r[i][j] += x[i][k] * y[k][j];
                    }
                }
            }
            r
        };
        let e2 = p.eta_sharp.norm_sqr();
        let (ab, ba, aa, bb) = (mul(&a, &b), mul(&b, &a), mul(&a, &a), mul(&b, &b));
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { e2 } else { 0.0 };
                assert!((ab[i][j] + ba[i][j]).norm() < 1e-15);
                assert!((aa[i][j] - id).norm() < 1e-15);
                assert!((bb[i][j] - id).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn residuals_are_second_order_and_vanish_for_zero_data() {
        let p = params();
        let f = gaussian_field(64);
        let dt = 0.2 / p.eta_sharp.norm();
        let r1 = residual_diagnostics(&f, &p, 50.0, dt).unwrap();
        let r2 = residual_diagnostics(&f, &p, 50.0, dt / 2.0).unwrap();
        let ratio = r1.dirac_residual / r2.dirac_residual;
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
        let ratio = r1.wave_residual / r2.wave_residual;
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
        let zero = EnvelopeField::new(f.grid, vec![C64::new(0.0, 0.0); f.grid.len()], vec![C64::new(0.0, 0.0); f.grid.len()], 0.0).unwrap();
        let r = residual_diagnostics(&zero, &p, 1.0, dt).unwrap();
        assert_eq!(r.dirac_residual, 0.0);
        assert_eq!(r.wave_residual, 0.0);
    }

    #[test]
    fn single_mode_wave_residual_follows_exact_dispersion() {
        let p = params();
        let grid = Grid::new(32, 40.0).unwrap();
        let k = grid.wavenumber(3);
        let v1 = grid.sample(|x| C64::from_polar(1.0, k * x[0]));
        let f = EnvelopeField::new(grid, v1, vec![C64::new(0.0, 0.0); grid.len()], 0.0).unwrap();
        let w = p.eta_sharp.norm() * k;
        let dt = 0.1 / w;
        // second difference of cos/sin(ωt) is -ω² (sin(ωdt/2)/(ωdt/2))²
        let predicted = w * w * (1.0 - ((w * dt / 2.0).sin() / (w * dt / 2.0)).powi(2));
        let r = residual_diagnostics(&f, &p, 0.0, dt).unwrap();
        assert!((r.wave_residual / predicted - 1.0).abs() < 1e-6, "{} vs {predicted}", r.wave_residual);
    }

    #[test]
    fn decay_weighted_spectrum_is_time_independent() {
        let p = params();
        let f = gaussian_field(64);
        let fft = Fft2::new(&f.grid);
        let weighted = |fld: &EnvelopeField| {
            let (a, b) = (fft.forward(&fld.v1), fft.forward(&fld.v2));
            (0..f.grid.len())
                .map(|i| {
                    let xi = f.grid.xi(i);
                    (1.0 + (xi[0] * xi[0] + xi[1] * xi[1]).sqrt()).powi(4)
                        * (a[i].norm_sqr() + b[i].norm_sqr()).sqrt()
                })
                .fold(0.0, f64::max)
        };
        let w0 = weighted(&f);
        let wt = weighted(&evolve_real(&f, 400.0, &p).unwrap());
        assert!((w0 - wt).abs() < 1e-12 * w0);
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let p = params();
        let g = Grid::new(8, 1.0).unwrap();
        assert!(propagate_fourier(&g, &[C64::new(0.0, 0.0); 3], &[C64::new(0.0, 0.0); 64], 1.0, &p).is_err());
        assert!(Grid::new(7, 1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn propagator_is_unitary_and_a_group(
            x in -20.0f64..20.0, y in -20.0f64..20.0,
            s in -50.0f64..50.0, t in -50.0f64..50.0,
            er in -1.0f64..1.0, ei in -1.0f64..1.0,
        ) {
            proptest::prop_assume!(er.hypot(ei) > 1e-3);
            let p = DiracParams {
                delta: 1e-2,
                omega_star: 0.1,
                a_delta: C64::new(0.0, 0.0),
                eta_sharp: C64::new(er, ei),
                lambda_delta: C64::new(er, ei).norm(),
            };
            let u = propagator([x, y], s, &p);
            let v = propagator([x, y], t, &p);
            let w = propagator([x, y], s + t, &p);
            for r in 0..2 {
                for c in 0..2 {
                    let uu: C64 = (0..2).map(|k| u[k][r].conj() * u[k][c]).sum();
                    let id = if r == c { 1.0 } else { 0.0 };
                    proptest::prop_assert!((uu - id).norm() < 1e-12);
                    let uv: C64 = (0..2).map(|k| u[r][k] * v[k][c]).sum();
                    proptest::prop_assert!((uv - w[r][c]).norm() < 1e-11);
                }
            }
        }
    }
}
