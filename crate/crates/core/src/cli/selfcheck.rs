//! Fast invariant suites run by `honeycomb selfcheck`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Setup;
use crate::dirac::{dirac_params, evolve_real, propagator, EnvelopeField, Grid};
use crate::error::Result;
use crate::lattice::{v2, SymmetryMap, Vec2};
use crate::layerpot::{capacitance, DiracPointModes};
use crate::quasigreen::{GreenMethod, QuasiGreen};
use crate::wavepacket::{alpha_grid, plancherel_check, sigma_weight};

/// Dual cutoff of the spectral cross-check, in units of `2π/L`.
const SPECTRAL_CUTOFF: f64 = 150.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    /// Largest observed error.
    pub error: f64,
    pub tolerance: f64,
}

fn suite(name: &str, error: f64, tolerance: f64) -> SuiteResult {
    SuiteResult { name: name.into(), passed: error.is_finite() && error < tolerance, error, tolerance }
}

fn random_point(rng: &mut ChaCha8Rng, setup: &Setup) -> Vec2 {
    let lat = &setup.geom.lattice;
    v2::comb(rng.random(), lat.l1, rng.random(), lat.l2)
}

fn random_alpha(rng: &mut ChaCha8Rng, setup: &Setup) -> Vec2 {
    let lat = &setup.geom.lattice;
    v2::comb(rng.random(), lat.a1, rng.random(), lat.a2)
}

pub fn run_suites(setup: &Setup, points: usize, alphas: usize, seed: u64) -> Result<Vec<SuiteResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lat = setup.geom.lattice;
    let mut out = Vec::new();

    let mut dual: f64 = 0.0;
    for (i, a) in [lat.a1, lat.a2].iter().enumerate() {
        for (j, l) in [lat.l1, lat.l2].iter().enumerate() {
            let want = if i == j { 2.0 * PI } else { 0.0 };
            dual = dual.max((v2::dot(*a, *l) - want).abs());
        }
    }
    out.push(suite("lattice duality", dual, 1e-12));

    let (mut quasi, mut routes): (f64, f64) = (0.0, 0.0);
    for _ in 0..points {
        let alpha = random_alpha(&mut rng, setup);
        let x = random_point(&mut rng, setup);
        let gp = setup.gp.with_alpha(alpha);
        let ew = QuasiGreen::new(gp)?;
        let sp = QuasiGreen::new(
            gp.with_method(GreenMethod::SpectralCutoff)
                .with_cutoff(SPECTRAL_CUTOFF * 2.0 * PI / lat.constant)
                .with_tol(1e-9),
        )?;
        let g = ew.eval(x)?;
        let shifted = ew.eval(v2::add(x, lat.l1))?;
        quasi = quasi.max((shifted - C64::from_polar(1.0, v2::dot(alpha, lat.l1)) * g).norm());
        // compared at the reduced point, where both routes carry the source image analytically
        let (xr, _) = ew.reduce(x);
        routes = routes.max((ew.smooth(xr)? - sp.smooth(xr)?).norm());
    }
    out.push(suite("green quasi-periodicity", quasi, 1e-8));
    out.push(suite("green ewald vs spectral", routes, 1e-8));

    let mut herm: f64 = 0.0;
    for _ in 0..alphas {
        let cap = capacitance(random_alpha(&mut rng, setup), &setup.quad, &setup.gp)?;
        herm = herm.max(cap.hermitian_error).max(cap.diagonal_error);
    }
    out.push(suite("capacitance hermitian with equal diagonal", herm, 1e-8));
    let star = capacitance(lat.dirac_point(), &setup.quad, &setup.gp)?;
    out.push(suite("capacitance degenerate at dirac point", star.c2.norm() / star.c1, 1e-6));

    let modes = DiracPointModes::new(lat.dirac_point(), &setup.quad, &setup.gp)?;
    let fields = modes.fields()?;
    let rot = SymmetryMap::rotation();
    let tau = C64::from_polar(1.0, 2.0 * PI / 3.0);
    let mut sym: f64 = 0.0;
    for _ in 0..points {
        let x = random_point(&mut rng, setup);
        let v = fields.eval(x)?;
        let rv = fields.eval(rot.apply(x))?;
        let pv = fields.eval(v2::sub(v2::scale(2.0, lat.x0), x))?;
        sym = sym
            .max((rv[0].value - tau * v[0].value).norm())
            .max((pv[0].value.conj() - v[1].value).norm());
    }
    out.push(suite("dirac mode symmetries", sym, 1e-5));

    let p = dirac_params(1e-2, C64::new(0.0, -6.0), setup.geom.inclusion_area(), star.c1)?;
    let mut unit: f64 = 0.0;
    for _ in 0..points {
        let xi = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let u = propagator(xi, rng.random_range(0.0..50.0), &p);
        let f = [C64::new(rng.random(), rng.random()), C64::new(rng.random(), rng.random())];
        let v = [u[0][0] * f[0] + u[0][1] * f[1], u[1][0] * f[0] + u[1][1] * f[1]];
        unit = unit.max(((v[0].norm_sqr() + v[1].norm_sqr()).sqrt() - (f[0].norm_sqr() + f[1].norm_sqr()).sqrt()).abs());
    }
    out.push(suite("propagator unitarity", unit, 1e-13));
    let grid = Grid::new(64, 16.0)?;
    let env = EnvelopeField::new(
        grid,
        grid.sample(|x| C64::new((-v2::norm2(x)).exp(), 0.0)),
        grid.sample(|x| C64::new(0.0, (-v2::norm2(v2::sub(x, [1.0, 0.0]))).exp())),
        0.0,
    )?;
    let back = evolve_real(&evolve_real(&env, 30.0, &p)?, -30.0, &p)?;
    let trip = env
        .v1
        .iter()
        .zip(&back.v1)
        .chain(env.v2.iter().zip(&back.v2))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    out.push(suite("propagator round trip", trip, 1e-11));

    let width = 0.75 * lat.constant;
    let f = |x: Vec2| C64::new((-v2::norm2(v2::sub(x, lat.x0)) / (2.0 * width * width)).exp(), 0.0);
    let mut planch: f64 = 0.0;
    for delta in [1.0, 1e-2] {
        let w = sigma_weight(&setup.geom, delta)?;
        planch = planch.max(plancherel_check(&f, &lat, &alpha_grid(&lat, 8), 32, 12, &w)?.rel_gap);
    }
    out.push(suite("floquet plancherel", planch, 1e-5));
    Ok(out)
}
