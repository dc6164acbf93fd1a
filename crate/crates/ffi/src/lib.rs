//! C ABI for the honeycomb-dirac numerics.
//!
//! Objects are opaque handles created by `hc_*_new` and released by `hc_*_free`. Every
//! fallible call returns an [`HcStatus`]; on failure the message is kept per thread and can
//! be read with [`hc_last_error_message`]. Panics are caught at the boundary and reported
//! as [`HcStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use honeycomb_dirac::bands::band_pair;
use honeycomb_dirac::dirac::{dirac_params, evolve_real, DiracParams, EnvelopeField, Grid};
use honeycomb_dirac::lattice::{v2, Lattice};
use honeycomb_dirac::layerpot::{
    capacitance, dirac_coefficient_c, discretize_boundary, BoundaryQuadrature, InclusionGeometry,
};
use honeycomb_dirac::quasigreen::GreenParams;
use honeycomb_dirac::Error;
use num_complex::Complex64 as C64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SingularEvaluation = 3,
    Convergence = 4,
    Solver = 5,
    Inconsistency = 6,
    DegenerateCone = 7,
    ConeWindow = 8,
    DegenerateInput = 9,
    Config = 10,
    Io = 11,
    Panic = 12,
}

impl From<&Error> for HcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => HcStatus::InvalidArgument,
            Error::SingularEvaluation { .. } => HcStatus::SingularEvaluation,
            Error::Convergence { .. } => HcStatus::Convergence,
            Error::Solver { .. } => HcStatus::Solver,
            Error::Inconsistency(_) => HcStatus::Inconsistency,
            Error::DegenerateCone(_) => HcStatus::DegenerateCone,
            Error::ConeWindow(_) => HcStatus::ConeWindow,
            Error::DegenerateInput(_) => HcStatus::DegenerateInput,
            Error::Config { .. } => HcStatus::Config,
            Error::Io(_) => HcStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcComplex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for HcComplex {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<HcComplex> for C64 {
    fn from(z: HcComplex) -> Self {
        C64::new(z.re, z.im)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcCapacitance {
    pub c1: f64,
    pub c2: HcComplex,
    pub hermitian_error: f64,
    pub diagonal_error: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcCoefficient {
    /// Finite-difference value of the cone coefficient.
    pub c: HcComplex,
    /// Boundary-integral value.
    pub c_bi: HcComplex,
    pub rel_gap: f64,
    pub ratio_error: f64,
    pub c1_star: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcDiracParams {
    pub delta: f64,
    pub omega_star: f64,
    pub a_delta: HcComplex,
    pub eta_sharp: HcComplex,
    pub lambda_delta: f64,
}

impl From<DiracParams> for HcDiracParams {
    fn from(p: DiracParams) -> Self {
        Self {
            delta: p.delta,
            omega_star: p.omega_star,
            a_delta: p.a_delta.into(),
            eta_sharp: p.eta_sharp.into(),
            lambda_delta: p.lambda_delta,
        }
    }
}

impl From<HcDiracParams> for DiracParams {
    fn from(p: HcDiracParams) -> Self {
        Self {
            delta: p.delta,
            omega_star: p.omega_star,
            a_delta: p.a_delta.into(),
            eta_sharp: p.eta_sharp.into(),
            lambda_delta: p.lambda_delta,
        }
    }
}

/// Honeycomb crystal of two disks per cell with its boundary discretization.
pub struct HcCrystal {
    geom: InclusionGeometry,
    quad: BoundaryQuadrature,
    gp: GreenParams,
}

/// Two-component envelope on a square periodic grid.
pub struct HcEnvelope {
    field: EnvelopeField,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F>(f: F) -> HcStatus
where
    F: FnOnce() -> Result<(), (HcStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside honeycomb-dirac".into());
            HcStatus::Panic
        }
    }
}

fn lift(e: Error) -> (HcStatus, String) {
    (HcStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (HcStatus, String) {
    (HcStatus::NullPointer, format!("{what} is null"))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated, truncated to
/// `len`) and returns the full message length without the terminator; 0 if there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates a crystal. `lattice_constant <= 0` selects the constant with unit dual-cell area;
/// `radius_fraction` is the disk radius over the lattice constant.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_crystal_new(
    lattice_constant: f64,
    radius_fraction: f64,
    nodes_per_boundary: usize,
    out: *mut *mut HcCrystal,
) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let lat = Lattice::new((lattice_constant > 0.0).then_some(lattice_constant)).map_err(lift)?;
        let geom = InclusionGeometry::disks(lat, radius_fraction * lat.constant).map_err(lift)?;
        let quad = discretize_boundary(&geom, nodes_per_boundary).map_err(lift)?;
        let gp = GreenParams::new(lat, lat.dirac_point());
        *out = Box::into_raw(Box::new(HcCrystal { geom, quad, gp }));
        Ok(())
    })
}

/// # Safety
/// `crystal` must be null or a handle from [`hc_crystal_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_crystal_free(crystal: *mut HcCrystal) {
    if !crystal.is_null() {
        drop(Box::from_raw(crystal));
    }
}

/// Writes the Dirac point `α*` and the inclusion area `|D_1|`.
///
/// # Safety
/// `crystal` must be a live handle; `alpha_star` must hold 2 doubles; `area` one double.
#[no_mangle]
pub unsafe extern "C" fn hc_crystal_geometry(
    crystal: *const HcCrystal,
    alpha_star: *mut f64,
    area: *mut f64,
) -> HcStatus {
    guard(|| {
        let c = crystal.as_ref().ok_or_else(|| null("crystal"))?;
        if alpha_star.is_null() || area.is_null() {
            return Err(null("output"));
        }
        let a = c.geom.lattice.dirac_point();
        *alpha_star = a[0];
        *alpha_star.add(1) = a[1];
        *area = c.geom.inclusion_area();
        Ok(())
    })
}

/// Capacitance matrix entries at quasimomentum `(alpha_x, alpha_y)`.
///
/// # Safety
/// `crystal` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hc_crystal_capacitance(
    crystal: *const HcCrystal,
    alpha_x: f64,
    alpha_y: f64,
    out: *mut HcCapacitance,
) -> HcStatus {
    guard(|| {
        let c = crystal.as_ref().ok_or_else(|| null("crystal"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let cap = capacitance([alpha_x, alpha_y], &c.quad, &c.gp).map_err(lift)?;
        *out = HcCapacitance {
            c1: cap.c1,
            c2: cap.c2.into(),
            hermitian_error: cap.hermitian_error,
            diagonal_error: cap.diagonal_error,
        };
        Ok(())
    })
}

/// The two subwavelength frequencies at `count` quasimomenta stored as `(x, y)` pairs.
///
/// # Safety
/// `alphas` must hold `2·count` doubles; `omega1`, `omega2` `count` doubles each.
#[no_mangle]
pub unsafe extern "C" fn hc_crystal_bands(
    crystal: *const HcCrystal,
    alphas: *const f64,
    count: usize,
    delta: f64,
    omega1: *mut f64,
    omega2: *mut f64,
) -> HcStatus {
    guard(|| {
        let c = crystal.as_ref().ok_or_else(|| null("crystal"))?;
        if alphas.is_null() || omega1.is_null() || omega2.is_null() {
            return Err(null("array argument"));
        }
        let a = std::slice::from_raw_parts(alphas, 2 * count);
        for k in 0..count {
            let alpha = [a[2 * k], a[2 * k + 1]];
            let cap = capacitance(alpha, &c.quad, &c.gp).map_err(lift)?;
            let s = band_pair(alpha, delta, &cap, c.geom.inclusion_area()).map_err(lift)?;
            *omega1.add(k) = s.omega1;
            *omega2.add(k) = s.omega2;
        }
        Ok(())
    })
}

/// Cone coefficient `c` by finite differences and by the boundary integral.
///
/// # Safety
/// `crystal` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hc_crystal_coefficient(crystal: *const HcCrystal, out: *mut HcCoefficient) -> HcStatus {
    guard(|| {
        let c = crystal.as_ref().ok_or_else(|| null("crystal"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let h = 1e-3 * v2::norm(c.geom.lattice.dirac_point());
        let r = dirac_coefficient_c(&c.geom, &c.quad, &c.gp, h).map_err(lift)?;
        *out = HcCoefficient {
            c: r.c_fd.into(),
            c_bi: r.c_bi.into(),
            rel_gap: r.rel_gap,
            ratio_error: r.ratio_error,
            c1_star: r.c1_star,
        };
        Ok(())
    })
}

/// Constants of the effective Dirac system for contrast `delta`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hc_dirac_params(
    delta: f64,
    c: HcComplex,
    inclusion_area: f64,
    c1_star: f64,
    out: *mut HcDiracParams,
) -> HcStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = dirac_params(delta, c.into(), inclusion_area, c1_star).map_err(lift)?.into();
        Ok(())
    })
}

/// Envelope on the `n × n` grid of side `span` centred at the origin, from `n²` samples per
/// component in x-major order.
///
/// # Safety
/// `v1`, `v2` must hold `n·n` values; `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_envelope_new(
    n: usize,
    span: f64,
    v1: *const HcComplex,
    v2: *const HcComplex,
    out: *mut *mut HcEnvelope,
) -> HcStatus {
    guard(|| {
        if out.is_null() || v1.is_null() || v2.is_null() {
            return Err(null("argument"));
        }
        let grid = Grid::new(n, span).map_err(lift)?;
        let read = |p: *const HcComplex| -> Vec<C64> {
            std::slice::from_raw_parts(p, grid.len()).iter().map(|&z| z.into()).collect()
        };
        let field = EnvelopeField::new(grid, read(v1), read(v2), 0.0).map_err(lift)?;
        *out = Box::into_raw(Box::new(HcEnvelope { field }));
        Ok(())
    })
}

/// # Safety
/// `env` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_envelope_free(env: *mut HcEnvelope) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// New envelope holding the exact evolution of `env` by time `t`.
///
/// # Safety
/// `env` must be a live handle, `params` readable and `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_envelope_evolve(
    env: *const HcEnvelope,
    params: *const HcDiracParams,
    t: f64,
    out: *mut *mut HcEnvelope,
) -> HcStatus {
    guard(|| {
        let e = env.as_ref().ok_or_else(|| null("env"))?;
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let field = evolve_real(&e.field, t, &(*p).into()).map_err(lift)?;
        *out = Box::into_raw(Box::new(HcEnvelope { field }));
        Ok(())
    })
}

/// Grid `L²` norm of both components, and the envelope time.
///
/// # Safety
/// `env` must be a live handle; `l2` and `time` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hc_envelope_info(env: *const HcEnvelope, l2: *mut f64, time: *mut f64) -> HcStatus {
    guard(|| {
        let e = env.as_ref().ok_or_else(|| null("env"))?;
        let l2 = l2.as_mut().ok_or_else(|| null("l2"))?;
        let time = time.as_mut().ok_or_else(|| null("time"))?;
        *l2 = e.field.l2();
        *time = e.field.time;
        Ok(())
    })
}

/// Copies both components into caller buffers of `len` values each.
///
/// # Safety
/// `env` must be a live handle; `v1`, `v2` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn hc_envelope_copy(
    env: *const HcEnvelope,
    v1: *mut HcComplex,
    v2: *mut HcComplex,
    len: usize,
) -> HcStatus {
    guard(|| {
        let e = env.as_ref().ok_or_else(|| null("env"))?;
        if v1.is_null() || v2.is_null() {
            return Err(null("output buffer"));
        }
        if len != e.field.grid.len() {
            return Err((
                HcStatus::InvalidArgument,
                format!("buffer holds {len} values, the grid has {}", e.field.grid.len()),
            ));
        }
        for (i, (a, b)) in e.field.v1.iter().zip(&e.field.v2).enumerate() {
            *v1.add(i) = (*a).into();
            *v2.add(i) = (*b).into();
        }
        Ok(())
    })
}
