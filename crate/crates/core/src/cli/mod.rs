//! Command-line front end: configuration, orchestration and output.
//!
//! Exit codes: 0 success, 2 configuration or argument error, 3 numerical convergence
//! failure, 4 invariant violation.
//!
//! Time convention: envelope times (`evolve.time`, `packet.time`) are the macroscopic time
//! `t` of the ansatz `e^{iω* t/ε}(V_1(x,t) S_1(x/ε) + V_2(x,t) S_2(x/ε))`; the envelopes solve
//! `2iω* ∂_t V = M(∂) V` in that same `t`.

pub mod config;
pub mod output;
pub mod selfcheck;

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::bands::{band_sweep, cone_fit, ConeWindow};
use crate::dirac::{dirac_params, evolve_real, residual_diagnostics, DiracParams, EnvelopeField, Grid};
use crate::error::{Error, Result};
use crate::lattice::{v2, Lattice, Vec2};
use crate::layerpot::{
    dirac_coefficient_c, discretize_boundary, BoundaryQuadrature, CoefficientReport,
    DiracPointModes, InclusionGeometry,
};
use crate::quasigreen::GreenParams;
use crate::wavepacket::{ansatz_field, synthesize_initial, ModeTable};

pub use config::{GridFormat, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "honeycomb", version, about = "Dirac cones and envelope dynamics in bubbly honeycomb crystals")]
struct Cli {
    /// JSON configuration file; defaults apply to every key it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for sampled test points (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Override a configuration key, e.g. `--set cone.radii=7`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Band pair along Γ → K → M → Γ.
    Bands,
    /// Dirac-cone fit around the K point.
    Cone,
    /// Cone coefficient c, two ways.
    Coeff,
    /// Envelope evolution under the effective Dirac system.
    Evolve,
    /// Wave packet at t = 0 and the leading-order ansatz at `packet.time`.
    Packet,
    /// Fast invariant suites of every module.
    Selfcheck,
}

/// Output stream accepted by [`run_with`].
pub type Sink = dyn Write + Send;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidArgument(_) | Error::Io(_) => 2,
        Error::Convergence { .. }
        | Error::Solver { .. }
        | Error::ConeWindow(_)
        | Error::DegenerateCone(_)
        | Error::DegenerateInput(_)
        | Error::SingularEvaluation { .. } => 3,
        Error::Inconsistency(_) => 4,
    }
}

/// Runs the CLI on `args` (without the program name) and returns the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, S>(args: I, out: &mut Sink, err: &mut Sink) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv = std::iter::once("honeycomb".to_string()).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, out: &mut Sink, err: &mut Sink) -> Result<i32> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config {
            key: "--config".into(),
            message: format!("cannot read {}: {e}", p.display()),
        })?,
        None => "{}".to_string(),
    };
    let mut cfg = RunConfig::from_json(&text, &cli.overrides)?;
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::Config { key: "--threads".into(), message: e.to_string() })?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    pool.install(|| match cli.command {
        Command::Bands => cmd_bands(&cfg, out, err),
        Command::Cone => cmd_cone(&cfg, out, err),
        Command::Coeff => cmd_coeff(&cfg, out, err),
        Command::Evolve => cmd_evolve(&cfg, out, err),
        Command::Packet => cmd_packet(&cfg, out, err),
        Command::Selfcheck => cmd_selfcheck(&cfg, out, err),
    })
}

/// Geometry, boundary discretization and Green's-function parameters of a run.
pub struct Setup {
    pub geom: InclusionGeometry,
    pub quad: BoundaryQuadrature,
    pub gp: GreenParams,
}

impl Setup {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let lat = Lattice::new(cfg.lattice_constant)?;
        let geom = InclusionGeometry::disks(lat, cfg.radius_fraction * lat.constant)?;
        let quad = discretize_boundary(&geom, cfg.quadrature_n)?;
        let gp = GreenParams::new(lat, lat.dirac_point())
            .with_method(cfg.green.method)
            .with_tol(cfg.green.tol)
            .with_cutoff(cfg.green.cutoff * 2.0 * PI / lat.constant);
        Ok(Self { geom, quad, gp })
    }

    pub fn coefficient(&self) -> Result<CoefficientReport> {
        let h = 1e-3 * v2::norm(self.geom.lattice.dirac_point());
        dirac_coefficient_c(&self.geom, &self.quad, &self.gp, h)
    }

    pub fn dirac_params(&self, delta: f64) -> Result<(CoefficientReport, DiracParams)> {
        let rep = self.coefficient()?;
        let p = dirac_params(delta, rep.c_fd, self.geom.inclusion_area(), rep.c1_star)?;
        Ok((rep, p))
    }
}

/// Complex number as named parts for JSON summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Parts {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Parts {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Serialize)]
struct Constants {
    c: Parts,
    c1_star: f64,
    omega_star: f64,
    lambda_delta: f64,
    a_delta: Parts,
    eta_sharp: Parts,
}

impl Constants {
    fn new(rep: &CoefficientReport, p: &DiracParams) -> Self {
        Self {
            c: rep.c_fd.into(),
            c1_star: rep.c1_star,
            omega_star: p.omega_star,
            lambda_delta: p.lambda_delta,
            a_delta: p.a_delta.into(),
            eta_sharp: p.eta_sharp.into(),
        }
    }
}

fn emit<T: Serialize>(cfg: &RunConfig, name: &str, value: &T, out: &mut Sink, err: &mut Sink) -> Result<()> {
    let path = cfg.output_dir.join(name);
    output::write_json(&path, value)?;
    writeln!(out, "{}", serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?)?;
    note(err, &path);
    Ok(())
}

fn note(err: &mut Sink, path: &Path) {
    let _ = writeln!(err, "wrote {}", path.display());
}

/// Γ → K → M → Γ with `m` samples per segment, ending at Γ.
fn band_path(lat: &Lattice, m: usize) -> Vec<Vec2> {
    let corners = [[0.0, 0.0], lat.dirac_point(), v2::scale(0.5, lat.a1), [0.0, 0.0]];
    let mut out = Vec::new();
    for w in corners.windows(2) {
        for k in 0..m {
            let t = k as f64 / m as f64;
            out.push(v2::comb(1.0 - t, w[0], t, w[1]));
        }
    }
    out.push(corners[3]);
    out
}

#[derive(Debug, Serialize)]
struct BandsSummary {
    delta: f64,
    lattice_constant: f64,
    radius: f64,
    samples: usize,
    omega_star: f64,
    /// `ω_2 - ω_1` at K relative to `ω*`.
    relative_gap_at_k: f64,
    omega1_max: f64,
    omega2_min: f64,
}

fn cmd_bands(cfg: &RunConfig, out: &mut Sink, err: &mut Sink) -> Result<i32> {
    let s = Setup::new(cfg)?;
    let lat = s.geom.lattice;
    let alphas = band_path(&lat, cfg.bands.points_per_segment);
    // Γ itself is singular for the quasi-periodic kernel; sample just off it
    let eps = 1e-3 * v2::norm(lat.dirac_point());
    let alphas: Vec<Vec2> = alphas
        .into_iter()
        .map(|a| if v2::norm(a) < eps { v2::scale(eps / v2::norm(lat.a1), lat.a1) } else { a })
        .collect();
    let samples = band_sweep(&alphas, cfg.delta, &s.quad, &s.gp)?;
    let path = cfg.output_dir.join("bands.csv");
    output::write_bands_csv(&path, &samples)?;
    note(err, &path);
    let k = band_sweep(&[lat.dirac_point()], cfg.delta, &s.quad, &s.gp)?[0];
    let summary = BandsSummary {
        delta: cfg.delta,
        lattice_constant: lat.constant,
        radius: s.geom.radius,
        samples: samples.len(),
        omega_star: 0.5 * (k.omega1 + k.omega2),
        relative_gap_at_k: (k.omega2 - k.omega1) / (0.5 * (k.omega1 + k.omega2)),
        omega1_max: samples.iter().map(|b| b.omega1).fold(f64::MIN, f64::max),
        omega2_min: samples.iter().map(|b| b.omega2).fold(f64::MAX, f64::min),
    };
    emit(cfg, "bands.json", &summary, out, err)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct CoeffSummary {
    c_fd: Parts,
    c_bi: Parts,
    rel_gap: f64,
    phase_gap: f64,
    grad_c2: [Parts; 2],
    ratio_error: f64,
    c1_star: f64,
}

fn cmd_coeff(cfg: &RunConfig, out: &mut Sink, err: &mut Sink) -> Result<i32> {
    let rep = Setup::new(cfg)?.coefficient()?;
    let summary = CoeffSummary {
        c_fd: rep.c_fd.into(),
        c_bi: rep.c_bi.into(),
        rel_gap: rep.rel_gap,
        phase_gap: rep.phase_gap,
        grad_c2: [rep.grad_c2[0].into(), rep.grad_c2[1].into()],
        ratio_error: rep.ratio_error,
        c1_star: rep.c1_star,
    };
    emit(cfg, "coeff.json", &summary, out, err)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct ConeSummary {
    delta: f64,
    lambda_fit: f64,
    lambda_formula: f64,
    rel_gap: f64,
    anisotropy: f64,
    intercept: f64,
    intercept_rel_gap: f64,
    fit_residual: f64,
    slopes: Vec<f64>,
    constants: Constants,
}

fn cmd_cone(cfg: &RunConfig, out: &mut Sink, err: &mut Sink) -> Result<i32> {
    let s = Setup::new(cfg)?;
    let (rep, p) = s.dirac_params(cfg.delta)?;
    let lat = s.geom.lattice;
    let window = ConeWindow::new(&lat, cfg.cone.fraction, cfg.cone.radii, cfg.cone.directions)?;
    let fit = cone_fit(cfg.delta, rep.c_fd, &s.quad, &s.gp, &window)?;
    let path = cfg.output_dir.join("cone.csv");
    output::write_bands_csv(&path, &fit.samples)?;
    note(err, &path);
    let summary = ConeSummary {
        delta: cfg.delta,
        lambda_fit: fit.lambda_fit,
        lambda_formula: fit.lambda_formula,
        rel_gap: (fit.lambda_fit - fit.lambda_formula).abs() / fit.lambda_formula,
        anisotropy: fit.anisotropy,
        intercept: fit.intercept,
        intercept_rel_gap: (fit.intercept - fit.omega_star).abs() / fit.omega_star,
        fit_residual: fit.fit_residual,
        slopes: fit.slopes.clone(),
        constants: Constants::new(&rep, &p),
    };
    emit(cfg, "cone.json", &summary, out, err)?;
    Ok(0)
}

fn initial_envelope(cfg: &RunConfig) -> Result<EnvelopeField> {
    let grid = Grid::new(cfg.grid.n, cfg.grid.span)?;
    let sum = |gs: &[crate::dirac::Gaussian]| grid.sample(|x| gs.iter().map(|g| g.eval(x)).sum());
    EnvelopeField::new(grid, sum(&cfg.envelope.f1), sum(&cfg.envelope.f2), 0.0)
}

fn write_grid(cfg: &RunConfig, format: GridFormat, stem: &str, grid: &Grid, time: f64, names: &[&str], comps: &[&[C64]], err: &mut Sink) -> Result<String> {
    let name = match format {
        GridFormat::Csv => format!("{stem}.csv"),
        GridFormat::Binary => format!("{stem}.hcd"),
    };
    let path = cfg.output_dir.join(&name);
    match format {
        GridFormat::Csv => output::write_grid_csv(&path, grid, names, comps)?,
        GridFormat::Binary => output::write_grid_binary(&path, grid, time, comps)?,
    }
    note(err, &path);
    Ok(name)
}

#[derive(Debug, Serialize)]
struct Snapshot {
    time: f64,
    l2: f64,
    edge_ratio: f64,
    wrap_warning: bool,
    file: String,
}

#[derive(Debug, Serialize)]
struct Residuals {
    dt: f64,
    dirac_residual: f64,
    dirac_residual_half_step: f64,
    /// Ratio of the two residuals; about 4 for a second-order time difference.
    ratio: f64,
    wave_residual: f64,
}

#[derive(Debug, Serialize)]
struct EvolveSummary {
    delta: f64,
    constants: Constants,
    snapshots: Vec<Snapshot>,
    residuals: Residuals,
}

fn cmd_evolve(cfg: &RunConfig, out: &mut Sink, err: &mut Sink) -> Result<i32> {
    let s = Setup::new(cfg)?;
    let (rep, p) = s.dirac_params(cfg.delta)?;
    let init = initial_envelope(cfg)?;
    let mut snapshots = Vec::new();
    for k in 0..=cfg.evolve.snapshots {
        let t = cfg.evolve.time * k as f64 / cfg.evolve.snapshots as f64;
        let v = evolve_real(&init, t, &p)?;
        let file = write_grid(cfg, cfg.evolve.format, &format!("envelope_{k:03}"), &v.grid, t, &["v1", "v2"], &[&v.v1, &v.v2], err)?;
        snapshots.push(Snapshot { time: t, l2: v.l2(), edge_ratio: v.edge_ratio, wrap_warning: v.wrap_warning, file });
    }
    let dt = cfg.evolve.residual_step / p.eta_sharp.norm();
    let r1 = residual_diagnostics(&init, &p, cfg.evolve.time, dt)?;
    let r2 = residual_diagnostics(&init, &p, cfg.evolve.time, 0.5 * dt)?;
    let summary = EvolveSummary {
        delta: cfg.delta,
        constants: Constants::new(&rep, &p),
        snapshots,
        residuals: Residuals {
            dt,
            dirac_residual: r1.dirac_residual,
            dirac_residual_half_step: r2.dirac_residual,
            ratio: r1.dirac_residual / r2.dirac_residual,
            wave_residual: r1.wave_residual,
        },
    };
    emit(cfg, "evolve.json", &summary, out, err)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct PacketSummary {
    delta: f64,
    epsilon: f64,
    time: f64,
    points_per_cell: f64,
    l2_initial: f64,
    l2_ansatz: f64,
    l2_rel_change: f64,
    files: [String; 2],
    constants: Constants,
}

fn cmd_packet(cfg: &RunConfig, out: &mut Sink, err: &mut Sink) -> Result<i32> {
    let s = Setup::new(cfg)?;
    let (rep, p) = s.dirac_params(cfg.delta)?;
    let init = initial_envelope(cfg)?;
    let modes = DiracPointModes::new(s.geom.lattice.dirac_point(), &s.quad, &s.gp)?;
    let table = ModeTable::new(init.grid, cfg.epsilon, &modes)?;
    let w0 = synthesize_initial(&init, &table)?;
    let wt = ansatz_field(&init, &p, cfg.packet.time, &table)?;
    let f0 = write_grid(cfg, cfg.packet.format, "packet_initial", &w0.grid, 0.0, &["w"], &[&w0.values], err)?;
    let ft = write_grid(cfg, cfg.packet.format, "packet_ansatz", &wt.grid, wt.time, &["w"], &[&wt.values], err)?;
    let summary = PacketSummary {
        delta: cfg.delta,
        epsilon: cfg.epsilon,
        time: cfg.packet.time,
        points_per_cell: cfg.epsilon * s.geom.lattice.constant / init.grid.spacing(),
        l2_initial: w0.l2(),
        l2_ansatz: wt.l2(),
        l2_rel_change: (wt.l2() - w0.l2()).abs() / w0.l2().max(f64::MIN_POSITIVE),
        files: [f0, ft],
        constants: Constants::new(&rep, &p),
    };
    emit(cfg, "packet.json", &summary, out, err)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct SelfcheckSummary {
    seed: u64,
    passed: bool,
    suites: Vec<selfcheck::SuiteResult>,
}

fn cmd_selfcheck(cfg: &RunConfig, out: &mut Sink, err: &mut Sink) -> Result<i32> {
    let s = Setup::new(cfg)?;
    let suites = selfcheck::run_suites(&s, cfg.selfcheck.points, cfg.selfcheck.alphas, cfg.seed)?;
    for r in &suites {
        writeln!(
            out,
            "{} {:<45} error {:.3e} (tolerance {:.0e})",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.error,
            r.tolerance
        )?;
    }
    let passed = suites.iter().all(|r| r.passed);
    let summary = SelfcheckSummary { seed: cfg.seed, passed, suites };
    let path = cfg.output_dir.join("selfcheck.json");
    output::write_json(&path, &summary)?;
    note(err, &path);
    Ok(if passed { 0 } else { 4 })
}
