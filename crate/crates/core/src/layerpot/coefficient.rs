//! The Dirac-cone coefficient `c = ∂c_2/∂α_1 |_{α*}` by finite differences and by the
//! boundary-integral formula, the pairing vector `b`, and the `α`-derivative identity for
//! `S_j`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::capacitance::{capacitance_from, check_structure, energy_form};
use super::{
    AreaRule, AreaRuleParams, BoundaryQuadrature, CapacitanceResult, DensitySolution,
    FieldKernel, FieldPoint, InclusionGeometry, LayerFields, LayerSystem,
};
use crate::error::{invalid, Error, Result};
use crate::lattice::{v2, Vec2};
use crate::quasigreen::GreenParams;
use crate::special::gauss_legendre_on;

/// Densities, capacitance and field kernel of `S_1, S_2` at one quasimomentum.
#[derive(Debug, Clone)]
pub struct DiracPointModes {
    pub system: LayerSystem,
    pub densities: DensitySolution,
    pub capacitance: CapacitanceResult,
    pub kernel: FieldKernel,
}

impl DiracPointModes {
    pub fn new(alpha: Vec2, quad: &BoundaryQuadrature, gp: &GreenParams) -> Result<Self> {
        let system = LayerSystem::assemble(alpha, quad, gp)?;
        let densities = system.densities()?;
        let capacitance = capacitance_from(&densities, quad);
        check_structure(&capacitance)?;
        let kernel = FieldKernel::new(alpha, quad, gp)?;
        Ok(Self {
            system,
            densities,
            capacitance,
            kernel,
        })
    }

    pub fn alpha(&self) -> Vec2 {
        self.system.alpha()
    }

    /// Fields of `(S_1, S_2)`.
    pub fn fields(&self) -> Result<LayerFields<'_>> {
        self.kernel
            .fields(&[&self.densities.psi1, &self.densities.psi2])
    }

    /// Capacitance matrix in the energy form `∫_{Y∖D} conj(∇S_i)·∇S_j`.
    pub fn energy_capacitance(&self, rule: &AreaRule) -> Result<[[C64; 2]; 2]> {
        energy_form(&self.fields()?, rule)
    }

    /// `(i√3 L/2) ∫_{γ1 ∪ γ2} conj(S_1) ∂_ν S_2 - conj(∂_ν S_1) S_2` over the two left edges
    /// `γ_i = {t l_i}` of the cell, `ν` the outward normal of `Y`.
    pub fn boundary_coefficient(&self, panels: usize, order: usize) -> Result<C64> {
        let lat = &self.system.quadrature().geometry.lattice;
        let fields = self.fields()?;
        let s3 = 3f64.sqrt();
        let edges = [(lat.l1, [-0.5, 0.5 * s3]), (lat.l2, [-0.5, -0.5 * s3])];
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut normals = Vec::new();
        for (dir, nu) in edges {
            let len = v2::norm(dir);
            for p in 0..panels {
                let (ts, ws) = gauss_legendre_on(
                    order,
                    p as f64 / panels as f64,
                    (p + 1) as f64 / panels as f64,
                );
                for (t, w) in ts.iter().zip(&ws) {
                    points.push(v2::scale(*t, dir));
                    weights.push(w * len);
                    normals.push(nu);
                }
            }
        }
        let vals = fields.eval_many(&points)?;
        let mut acc = C64::new(0.0, 0.0);
        for ((v, w), nu) in vals.iter().zip(&weights).zip(&normals) {
            let (s1, s2) = (v[0].value, v[1].value);
            let (d1, d2) = (v[0].normal_derivative(*nu), v[1].normal_derivative(*nu));
            acc += (s1.conj() * d2 - d1.conj() * s2) * *w;
        }
        Ok(C64::new(0.0, s3 * lat.constant / 2.0) * acc)
    }

    /// `b = ∫_{Y∖D} ∇S_2 conj(S_1) - S_2 conj(∇S_1)`.
    pub fn pairing(&self, rule: &AreaRule) -> Result<[C64; 2]> {
        let vals = self.fields()?.eval_many(&rule.points)?;
        let mut b = [C64::new(0.0, 0.0); 2];
        for (d, bd) in b.iter_mut().enumerate() {
            let f: Vec<C64> = vals
                .iter()
                .map(|v: &Vec<FieldPoint>| {
                    v[1].grad[d] * v[0].value.conj() - v[1].value * v[0].grad[d].conj()
                })
                .collect();
            *bd = rule.integrate(&f);
        }
        Ok(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    /// Central difference of `c_2` in `α_1`.
    pub c_fd: C64,
    /// Boundary-integral value.
    pub c_bi: C64,
    pub rel_gap: f64,
    /// Phase difference between `c_fd` and `c_bi` in radians.
    pub phase_gap: f64,
    /// Central-difference gradient of `c_2`.
    pub grad_c2: [C64; 2],
    /// Central-difference gradient of `c_1`.
    pub grad_c1: [f64; 2],
    /// `|∂_2 c_2 / ∂_1 c_2 + i|`.
    pub ratio_error: f64,
    /// `c_1` at the Dirac point.
    pub c1_star: f64,
}

/// Boundary-integral panels and Gauss order used for `c_bi`.
const EDGE_PANELS: usize = 4;
const EDGE_ORDER: usize = 32;

pub fn dirac_coefficient_c(
    geom: &InclusionGeometry,
    quad: &BoundaryQuadrature,
    gp: &GreenParams,
    fd_step: f64,
) -> Result<CoefficientReport> {
    let lat = &geom.lattice;
    let a = lat.dirac_point();
    if !(fd_step.is_finite() && fd_step > 0.0) || fd_step > 0.1 * v2::norm(a) {
        return Err(invalid(format!(
            "finite-difference step must lie in (0, 0.1|α*|], got {fd_step}"
        )));
    }
    let at = |alpha: Vec2| -> Result<CapacitanceResult> {
        let sol = super::solve_densities(alpha, quad, gp)?;
        Ok(capacitance_from(&sol, quad))
    };
    let mut grad_c2 = [C64::new(0.0, 0.0); 2];
    let mut grad_c1 = [0.0; 2];
    for d in 0..2 {
        let mut e = [0.0; 2];
        e[d] = fd_step;
        let p = at(v2::add(a, e))?;
        let m = at(v2::sub(a, e))?;
        grad_c2[d] = (p.c2 - m.c2) / (2.0 * fd_step);
        grad_c1[d] = (p.c1 - m.c1) / (2.0 * fd_step);
    }
    let modes = DiracPointModes::new(a, quad, gp)?;
    let c1_star = modes.capacitance.c1;
    let c_fd = grad_c2[0];
    // quadrature noise in c_2 is far below 1e-9 c_1; its difference quotient bounds |c| from below
    let floor = 1e-9 * c1_star / fd_step;
    if c_fd.norm() < 100.0 * floor {
        return Err(Error::DegenerateCone(format!(
            "|∂c_2/∂α_1| = {:e} is below the noise floor {:e}",
            c_fd.norm(),
            floor
        )));
    }
    let c_bi = modes.boundary_coefficient(EDGE_PANELS, EDGE_ORDER)?;
    let ratio = grad_c2[1] / grad_c2[0];
    Ok(CoefficientReport {
        c_fd,
        c_bi,
        rel_gap: (c_fd - c_bi).norm() / c_fd.norm(),
        phase_gap: (c_bi / c_fd).arg().abs(),
        grad_c2,
        grad_c1,
        ratio_error: (ratio + C64::i()).norm(),
        c1_star,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingResult {
    pub b: [C64; 2],
    /// Relative change of `b` between the requested resolution and the next coarser one.
    pub rel_change: f64,
}

/// Relative change in `b` across resolutions above which the quadrature is rejected.
const PAIRING_TOL: f64 = 1e-3;

/// `b` at area-rule resolution `level` (≥ 2), validated against `level - 1`.
pub fn pairing_b(
    geom: &InclusionGeometry,
    quad: &BoundaryQuadrature,
    gp: &GreenParams,
    level: usize,
) -> Result<PairingResult> {
    if level < 2 {
        return Err(invalid("area resolution level must be at least 2"));
    }
    let modes = DiracPointModes::new(geom.lattice.dirac_point(), quad, gp)?;
    let fine = modes.pairing(&AreaRule::new(geom, AreaRuleParams::level(level))?)?;
    let coarse = modes.pairing(&AreaRule::new(geom, AreaRuleParams::level(level - 1))?)?;
    let norm = |v: [C64; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let rel_change = norm([fine[0] - coarse[0], fine[1] - coarse[1]]) / norm(fine);
    if !(rel_change < PAIRING_TOL) {
        return Err(Error::Convergence {
            context: "area quadrature for the pairing vector b".into(),
            achieved: rel_change,
            target: PAIRING_TOL,
        });
    }
    Ok(PairingResult {
        b: fine,
        rel_change,
    })
}

/// Maximum over `points` of `|∇_α S_j^α|_{α*} - i(x S_j - W_j)|`, with the left side by
/// central differences of step `fd_step` and `W_j` from the auxiliary solve with data
/// `y 1_{∂D_j}`. `j ∈ {1, 2}`.
pub fn grad_alpha_s_check(
    j: usize,
    fd_step: f64,
    points: &[Vec2],
    quad: &BoundaryQuadrature,
    gp: &GreenParams,
) -> Result<f64> {
    if !(j == 1 || j == 2) {
        return Err(invalid(format!("mode index must be 1 or 2, got {j}")));
    }
    if !(fd_step.is_finite() && fd_step > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let k = j - 1;
    let a = quad.geometry.lattice.dirac_point();
    let values_at = |alpha: Vec2| -> Result<Vec<C64>> {
        let sol = super::solve_densities(alpha, quad, gp)?;
        let kernel = FieldKernel::new(alpha, quad, gp)?;
        let f = kernel.fields(&[sol.psi(k)])?;
        Ok(f.eval_many(points)?.into_iter().map(|v| v[0].value).collect())
    };

    let sys = LayerSystem::assemble(a, quad, gp)?;
    let sol = sys.densities()?;
    let (w1, _) = sys.solve(&sys.indicator_rhs(k, |y| C64::new(y[0], 0.0)))?;
    let (w2, _) = sys.solve(&sys.indicator_rhs(k, |y| C64::new(y[1], 0.0)))?;
    let kernel = FieldKernel::new(a, quad, gp)?;
    let f = kernel.fields(&[sol.psi(k), &w1, &w2])?;
    let base = f.eval_many(points)?;

    let mut err: f64 = 0.0;
    let mut fd = Vec::new();
    for d in 0..2 {
        let mut e = [0.0; 2];
        e[d] = fd_step;
        let p = values_at(v2::add(a, e))?;
        let m = values_at(v2::sub(a, e))?;
        fd.push(
            p.iter()
                .zip(&m)
                .map(|(p, m)| (p - m) / (2.0 * fd_step))
                .collect::<Vec<_>>(),
        );
    }
    for (i, x) in points.iter().enumerate() {
        let s = base[i][0].value;
        for d in 0..2 {
            let w = base[i][1 + d].value;
            let want = C64::i() * (x[d] * s - w);
            err = err.max((fd[d][i] - want).norm());
        }
    }
    Ok(err)
}
#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::layerpot::discretize_boundary;
    use crate::lattice::{Lattice, SymmetryMap};

    fn setup(n: usize) -> (InclusionGeometry, BoundaryQuadrature, GreenParams) {
        let lat = Lattice::new(None).unwrap();
        let g = InclusionGeometry::default_disks(lat);
        let q = discretize_boundary(&g, n).unwrap();
        let gp = GreenParams::new(lat, lat.dirac_point());
        (g, q, gp)
    }

    fn tau() -> C64 {
        C64::from_polar(1.0, 2.0 * PI / 3.0)
    }

    #[test]
    fn coefficient_two_ways_and_gradient_direction() {
        let (g, q, gp) = setup(128);
        let a = g.lattice.dirac_point();
        let rep = dirac_coefficient_c(&g, &q, &gp, 1e-3 * v2::norm(a)).unwrap();
        assert!(rep.rel_gap < 1e-4, "{rep:?}");
        assert!(rep.phase_gap < 1e-2);
        assert!(rep.ratio_error < 1e-3);
        assert!(rep.grad_c1[0].abs().max(rep.grad_c1[1].abs()) < 1e-4 * rep.c1_star);
    }

    #[test]
    fn coefficient_is_stable_in_boundary_resolution() {
        let (g, q64, gp) = setup(64);
        let q128 = discretize_boundary(&g, 128).unwrap();
        let a = g.lattice.dirac_point();
        let h = 1e-3 * v2::norm(a);
        let c64 = dirac_coefficient_c(&g, &q64, &gp, h).unwrap().c_fd;
        let c128 = dirac_coefficient_c(&g, &q128, &gp, h).unwrap().c_fd;
        assert!((c64 - c128).norm() < 1e-4 * c128.norm());
    }

    #[test]
    fn rejects_bad_step() {
        let (g, q, gp) = setup(32);
        assert!(dirac_coefficient_c(&g, &q, &gp, 0.0).is_err());
        assert!(dirac_coefficient_c(&g, &q, &gp, 10.0).is_err());
        assert!(pairing_b(&g, &q, &gp, 1).is_err());
    }

    #[test]
    fn dirac_modes_have_rotation_and_parity_symmetry() {
        let (g, q, gp) = setup(128);
        let lat = g.lattice;
        let m = DiracPointModes::new(lat.dirac_point(), &q, &gp).unwrap();
        let f = m.fields().unwrap();
        let r = SymmetryMap::rotation();
        let pts = [[1.0, 0.5], [4.3, -1.2], lat.x0, [2.0, 2.5], [6.0, 0.7]];
        for x in pts {
            let v = f.eval(x).unwrap();
            let rv = f.eval(r.apply(x)).unwrap();
            let pv = f.eval(v2::sub(v2::scale(2.0, lat.x0), x)).unwrap();
            assert!((rv[0].value - tau() * v[0].value).norm() < 1e-8);
            assert!((rv[1].value - tau().conj() * v[1].value).norm() < 1e-8);
            assert!((v[1].value - pv[0].value.conj()).norm() < 1e-8);
        }
    }

    /// `b` from the divergence theorem: the outer-cell term plus the inclusion terms,
    /// which reduce to first moments of the densities because `∂_ν S_j|_+ = ψ_j` on `∂D`.
    fn pairing_by_boundary(m: &DiracPointModes) -> [C64; 2] {
        let q = m.system.quadrature();
        let lat = q.geometry.lattice;
        let f = m.fields().unwrap();
        let s3 = 3f64.sqrt();
        let edges = [
            (lat.l1, [0.0, 0.0], [-0.5, 0.5 * s3]),
            (lat.l2, [0.0, 0.0], [-0.5, -0.5 * s3]),
            (lat.l1, lat.l2, [0.5, -0.5 * s3]),
            (lat.l2, lat.l1, [0.5, 0.5 * s3]),
        ];
        let mut b = [C64::new(0.0, 0.0); 2];
        let (ts, ws) = gauss_legendre_on(128, 0.0, 1.0);
        for (dir, off, nu) in edges {
            let pts: Vec<Vec2> = ts.iter().map(|t| v2::add(off, v2::scale(*t, dir))).collect();
            for ((v, w), x) in f.eval_many(&pts).unwrap().iter().zip(&ws).zip(&pts) {
                let (s1, s2) = (v[0].value, v[1].value);
                let (d1, d2) = (v[0].normal_derivative(nu), v[1].normal_derivative(nu));
                for d in 0..2 {
                    b[d] += x[d] * (d2 * s1.conj() - s2 * d1.conj()) * (w * v2::norm(dir));
                }
            }
        }
        let psi = &m.densities;
        for (d, bd) in b.iter_mut().enumerate() {
            for i in q.range(0) {
                *bd -= q.nodes[i][d] * psi.psi2[i] * q.weights[i];
            }
            for i in q.range(1) {
                *bd += q.nodes[i][d] * psi.psi1[i].conj() * q.weights[i];
            }
        }
        b
    }

    #[test]
    fn pairing_matches_boundary_formula_and_rotates_by_conjugate_tau() {
        let (g, q, gp) = setup(128);
        let m = DiracPointModes::new(g.lattice.dirac_point(), &q, &gp).unwrap();
        let b = m
            .pairing(&AreaRule::new(&g, AreaRuleParams::default()).unwrap())
            .unwrap();
        let oracle = pairing_by_boundary(&m);
        let scale = b[0].norm();
        for d in 0..2 {
            assert!((b[d] - oracle[d]).norm() < 1e-6 * scale, "{b:?} vs {oracle:?}");
        }
        // change of variables x = R y with S_1(Rx) = τ S_1(x), S_2(Rx) = τ̄ S_2(x) gives R b = τ̄ b
        let r = SymmetryMap::rotation().linear;
        let rb = [
            b[0] * r[0][0] + b[1] * r[0][1],
            b[0] * r[1][0] + b[1] * r[1][1],
        ];
        for d in 0..2 {
            assert!((rb[d] - tau().conj() * b[d]).norm() < 1e-6 * scale);
        }
    }

    /// `H[ψ](x)` for the kernel `H^α(z) = ∇_α G^α(z) - i z G^α(z)
    /// = (2/|Y|) Σ_q e^{i(α+q)·z} (α+q)/|α+q|⁴`, truncated at `|α+q| ≤ kmax`.
    fn h_layer(
        alpha: Vec2,
        q: &BoundaryQuadrature,
        psi: &[C64],
        xs: &[Vec2],
        kmax: f64,
    ) -> Vec<[C64; 2]> {
        let lat = q.geometry.lattice;
        let m = (kmax / v2::norm(lat.a1)).ceil() as i64 + 2;
        let mut terms = Vec::new();
        for m1 in -m..=m {
            for m2 in -m..=m {
                let k = v2::add(alpha, lat.dual_point(m1, m2));
                let kn = v2::norm(k);
                if kn > kmax {
                    continue;
                }
                let amp: C64 = (0..q.len())
                    .map(|j| C64::from_polar(q.weights[j], -v2::dot(k, q.nodes[j])) * psi[j])
                    .sum();
                terms.push((k, amp * (2.0 / lat.cell_area / kn.powi(4))));
            }
        }
        xs.iter()
            .map(|&x| {
                let mut h = [C64::new(0.0, 0.0); 2];
                for (k, amp) in &terms {
                    let e = C64::from_polar(1.0, v2::dot(*k, x)) * amp;
                    h[0] += e * k[0];
                    h[1] += e * k[1];
                }
                h
            })
            .collect()
    }

    #[test]
    fn alpha_gradient_identity_holds_in_inclusions_and_misses_a_smooth_term_outside() {
        let (g, q, gp) = setup(128);
        let lat = g.lattice;
        let a = lat.dirac_point();
        let h = 1e-3 * v2::norm(a);
        let inside = [lat.x1, v2::add(lat.x1, [0.3, 0.2]), lat.x2];
        for j in 1..=2 {
            assert!(grad_alpha_s_check(j, h, &inside, &q, &gp).unwrap() < 1e-8);
        }

        // W_j equals y on D_j and vanishes on the other inclusion
        let sys = LayerSystem::assemble(a, &q, &gp).unwrap();
        let kernel = FieldKernel::new(a, &q, &gp).unwrap();
        for k in 0..2 {
            let (w1, _) = sys.solve(&sys.indicator_rhs(k, |y| C64::new(y[0], 0.0))).unwrap();
            let (w2, _) = sys.solve(&sys.indicator_rhs(k, |y| C64::new(y[1], 0.0))).unwrap();
            let f = kernel.fields(&[&w1, &w2]).unwrap();
            for (i, c) in g.centers.iter().enumerate() {
                let v = f.eval(*c).unwrap();
                let want = if i == k { *c } else { [0.0, 0.0] };
                assert!((v[0].value - want[0]).norm() < 1e-8);
                assert!((v[1].value - want[1]).norm() < 1e-8);
            }
        }

        // Outside D the exact derivative carries V = H[ψ] - S[(S|_∂D)^{-1} H[ψ]|_∂D], which
        // vanishes on the inclusions but not in the background.
        let outside = [lat.x0, [1.0, 0.5], [5.0, -1.0]];
        let sol = sys.densities().unwrap();
        let psi = sol.psi(0);
        let hb = h_layer(a, &q, psi, &q.nodes, 120.0);
        let hx = h_layer(a, &q, psi, &outside, 120.0);
        let mut v = vec![[C64::new(0.0, 0.0); 2]; outside.len()];
        for d in 0..2 {
            let rhs: Vec<C64> = hb.iter().map(|h| h[d]).collect();
            let (phi, _) = sys.solve(&rhs).unwrap();
            let f = kernel.fields(&[&phi]).unwrap();
            for (i, x) in outside.iter().enumerate() {
                v[i][d] = hx[i][d] - f.eval(*x).unwrap()[0].value;
            }
        }
        let (w1, _) = sys.solve(&sys.indicator_rhs(0, |y| C64::new(y[0], 0.0))).unwrap();
        let (w2, _) = sys.solve(&sys.indicator_rhs(0, |y| C64::new(y[1], 0.0))).unwrap();
        let base = kernel.fields(&[psi, &w1, &w2]).unwrap();
        let value_at = |alpha: Vec2| -> Vec<C64> {
            let sol = crate::layerpot::solve_densities(alpha, &q, &gp).unwrap();
            let f = FieldKernel::new(alpha, &q, &gp).unwrap();
            let f = f.fields(&[sol.psi(0)]).unwrap();
            outside.iter().map(|x| f.eval(*x).unwrap()[0].value).collect()
        };
        let mut lemma_gap: f64 = 0.0;
        for d in 0..2 {
            let mut e = [0.0; 2];
            e[d] = h;
            let (p, m) = (value_at(v2::add(a, e)), value_at(v2::sub(a, e)));
            for (i, x) in outside.iter().enumerate() {
                let fd = (p[i] - m[i]) / (2.0 * h);
                let b = base.eval(*x).unwrap();
                let lemma = C64::i() * (x[d] * b[0].value - b[1 + d].value);
                lemma_gap = lemma_gap.max((fd - lemma).norm());
                assert!((fd - lemma - v[i][d]).norm() < 1e-3, "{x:?} d={d}: {fd} {lemma} {}", v[i][d]);
            }
        }
        assert!(lemma_gap > 0.1);
    }
}
