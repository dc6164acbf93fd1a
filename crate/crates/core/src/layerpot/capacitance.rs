use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{AreaRule, BoundaryQuadrature, DensitySolution, LayerFields};
use crate::error::{Error, Result};
use crate::lattice::Vec2;
use crate::quasigreen::GreenParams;

/// Relative tolerance for the Hermitian / equal-diagonal structure.
const STRUCTURE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitanceResult {
    pub alpha: Vec2,
    /// Row-major `C_ij = -∫_{∂D_i} ψ_j`.
    pub matrix: [[C64; 2]; 2],
    pub c1: f64,
    pub c2: C64,
    /// `max(|C_21 - conj C_12|, |Im C_11|, |Im C_22|) / c1`.
    pub hermitian_error: f64,
    /// `|C_11 - C_22| / c1`.
    pub diagonal_error: f64,
    pub residual: f64,
}

impl CapacitanceResult {
    /// Eigenvalues `c1 ∓ |c2|` in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.c2.norm();
        [self.c1 - a, self.c1 + a]
    }
}

/// Builds the capacitance matrix from solved densities without enforcing structure.
pub fn capacitance_from(sol: &DensitySolution, quad: &BoundaryQuadrature) -> CapacitanceResult {
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = -quad.integrate_on(i, sol.psi(j));
        }
    }
    let c1 = 0.5 * (m[0][0].re + m[1][1].re);
    let herm = (m[1][0] - m[0][1].conj())
        .norm()
        .max(m[0][0].im.abs())
        .max(m[1][1].im.abs());
    CapacitanceResult {
        alpha: sol.alpha,
        matrix: m,
        c1,
        c2: 0.5 * (m[0][1] + m[1][0].conj()),
        hermitian_error: herm / c1.abs(),
        diagonal_error: (m[0][0] - m[1][1]).norm() / c1.abs(),
        residual: sol.residual,
    }
}

/// Capacitance matrix at `alpha`; fails if the Hermitian equal-diagonal structure is violated.
pub fn capacitance(
    alpha: Vec2,
    quad: &BoundaryQuadrature,
    gp: &GreenParams,
) -> Result<CapacitanceResult> {
    let sol = super::solve_densities(alpha, quad, gp)?;
    let c = capacitance_from(&sol, quad);
    check_structure(&c)?;
    Ok(c)
}

pub(crate) fn check_structure(c: &CapacitanceResult) -> Result<()> {
    if !(c.c1 > 0.0) {
        return Err(Error::Inconsistency(format!(
            "capacitance diagonal {} is not positive",
            c.c1
        )));
    }
    if c.hermitian_error > STRUCTURE_TOL || c.diagonal_error > STRUCTURE_TOL {
        return Err(Error::Inconsistency(format!(
            "capacitance structure violated at α = {:?}: hermitian error {:e}, diagonal error {:e}",
            c.alpha, c.hermitian_error, c.diagonal_error
        )));
    }
    Ok(())
}

/// Energy form `∫_{Y∖D} conj(∇S_i) · ∇S_j` from fields of `(S_1, S_2)`.
pub(crate) fn energy_form(fields: &LayerFields<'_>, rule: &AreaRule) -> Result<[[C64; 2]; 2]> {
    let vals = fields.eval_many(&rule.points)?;
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            let f: Vec<C64> = vals
                .iter()
                .map(|v| v[i].grad[0].conj() * v[j].grad[0] + v[i].grad[1].conj() * v[j].grad[1])
                .collect();
            *e = rule.integrate(&f);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layerpot::{discretize_boundary, AreaRuleParams, FieldKernel, InclusionGeometry};
    use crate::lattice::Lattice;

    #[test]
    fn dirac_point_capacitance_is_scalar() {
        let lat = Lattice::new(None).unwrap();
        let g = InclusionGeometry::default_disks(lat);
        let q = discretize_boundary(&g, 128).unwrap();
        let a = lat.dirac_point();
        let c = capacitance(a, &q, &GreenParams::new(lat, a)).unwrap();
        assert!(c.c1 > 0.0);
        assert!(c.c2.norm() < 1e-6 * c.c1, "{}", c.c2);
    }

    #[test]
    fn self_convergence_in_boundary_resolution() {
        let lat = Lattice::new(None).unwrap();
        let g = InclusionGeometry::default_disks(lat);
        let alpha = [0.4, 0.9];
        let gp = GreenParams::new(lat, alpha);
        let c64 = capacitance(alpha, &discretize_boundary(&g, 64).unwrap(), &gp).unwrap();
        let c128 = capacitance(alpha, &discretize_boundary(&g, 128).unwrap(), &gp).unwrap();
        assert!((c64.c1 - c128.c1).abs() < 1e-6 * c128.c1);
        assert!((c64.c2 - c128.c2).norm() < 1e-6 * c128.c1);
    }

    #[test]
    fn charge_and_energy_forms_agree() {
        let lat = Lattice::new(None).unwrap();
        let g = InclusionGeometry::default_disks(lat);
        let q = discretize_boundary(&g, 128).unwrap();
        let alpha = [0.7, -0.3];
        let gp = GreenParams::new(lat, alpha);
        let sol = crate::layerpot::solve_densities(alpha, &q, &gp).unwrap();
        let c = capacitance_from(&sol, &q);
        let k = FieldKernel::new(alpha, &q, &gp).unwrap();
        let f = k.fields(&[&sol.psi1, &sol.psi2]).unwrap();
        let rule = AreaRule::new(&g, AreaRuleParams::default()).unwrap();
        let e = energy_form(&f, &rule).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (e[i][j] - c.matrix[i][j]).norm() < 1e-6 * c.c1,
                    "({i},{j}): {} vs {}",
                    e[i][j],
                    c.matrix[i][j]
                );
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(12))]
        #[test]
        fn hermitian_with_equal_diagonal_at_any_alpha(s in 0.02f64..0.98, t in 0.02f64..0.98) {
            let lat = crate::lattice::Lattice::new(None).unwrap();
            let g = InclusionGeometry::default_disks(lat);
            let q = discretize_boundary(&g, 64).unwrap();
            let a = crate::lattice::v2::comb(s, lat.a1, t, lat.a2);
            let c = capacitance(a, &q, &GreenParams::new(lat, a)).unwrap();
            proptest::prop_assert!(c.hermitian_error < 1e-8 && c.diagonal_error < 1e-8);
            let [lo, hi] = c.eigenvalues();
            proptest::prop_assert!(lo > 0.0 && hi >= lo);
        }
    }
}
