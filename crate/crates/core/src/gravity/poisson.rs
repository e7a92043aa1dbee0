//! Discrete Poisson residual ΔΦ − 4πGρ in the (r, ζ) chart.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::field::{AxiField, Chart};
use crate::numerics::diff::{lagrange_diff_matrix, FdOperator};

/// Residual of (1/r²)∂_r(r²∂_rΦ) + (1/r²)∂_ζ((1 − ζ²)∂_ζΦ) = 4πGρ with
/// fourth-order differences in r and the Gauss–Legendre differentiation
/// matrix in ζ. At a node r = 0 the regular-field limit
/// 3∂²_rΦ + ½∂_ζ((1 − ζ²)∂_ζ ∂²_rΦ) is used. Needs at least 6 radial nodes.
pub fn poisson_residual(phi: &AxiField, rho: &AxiField, g: f64) -> Result<AxiField> {
    phi.grid.require_same(&rho.grid)?;
    if phi.grid.chart != Chart::RZeta {
        return domain("poisson_residual works in the (r, zeta) chart");
    }
    let r = phi.r_nodes();
    if r.len() < 6 {
        return domain("poisson_residual needs at least 6 radial nodes");
    }
    let (nr, nz) = (phi.nr(), phi.nz());
    let zeta = phi.zeta_nodes();
    let d1 = FdOperator::fourth_order(r, 1);
    let d2 = FdOperator::fourth_order(r, 2);
    let dz = lagrange_diff_matrix(zeta);
    let mut out = vec![0.0; nr * nz];
    // ∂_ζ((1 − ζ²)∂_ζ f) for one row of samples.
    let angular = |f: &[f64]| -> Vec<f64> {
        let flux: Vec<f64> =
            (0..nz).map(|k| (1.0 - zeta[k] * zeta[k]) * (0..nz).map(|l| dz[k][l] * f[l]).sum::<f64>()).collect();
        (0..nz).map(|j| (0..nz).map(|k| dz[j][k] * flux[k]).sum()).collect()
    };
    for i in 0..nr {
        let prr: Vec<f64> = (0..nz).map(|j| d2.apply_at(i, |m| phi.get(m, j))).collect();
        let lap: Vec<f64> = if r[i] == 0.0 {
            let ang = angular(&prr);
            (0..nz).map(|j| 3.0 * prr[j] + 0.5 * ang[j]).collect()
        } else {
            let ang = angular(phi.row(i));
            (0..nz)
                .map(|j| prr[j] + 2.0 * d1.apply_at(i, |m| phi.get(m, j)) / r[i] + ang[j] / (r[i] * r[i]))
                .collect()
        };
        for j in 0..nz {
            out[i * nz + j] = lap[j] - 4.0 * PI * g * rho.get(i, j);
        }
    }
    AxiField::new(phi.grid.clone(), out, f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AxiGrid;

    #[test]
    fn harmonic_exterior() {
        let r: Vec<f64> = (0..200).map(|i| 2.0 + i as f64 / 199.0).collect();
        let grid = AxiGrid::rzeta(r, 8).unwrap();
        let phi = AxiField::from_fn(grid.clone(), f64::INFINITY, |r, _| -1.0 / r).unwrap();
        let rho = AxiField::zeros(grid);
        let res = poisson_residual(&phi, &rho, 1.0).unwrap();
        assert!(res.max_abs() <= 1e-8, "{}", res.max_abs());
    }

    #[test]
    fn solid_harmonic_is_annihilated() {
        let err = |n: usize| {
            let r: Vec<f64> = (0..n).map(|i| 0.5 + i as f64 / (n - 1) as f64).collect();
            let grid = AxiGrid::rzeta(r, 6).unwrap();
            let phi = AxiField::from_fn(grid.clone(), f64::INFINITY, |r, z| r * r * (3.0 * z * z - 1.0)).unwrap();
            poisson_residual(&phi, &AxiField::zeros(grid), 1.0).unwrap().max_abs()
        };
        assert!(err(10) < 1e-10);
        assert!(err(40) < 1e-10);
    }

    #[test]
    fn uniform_sphere_interior() {
        let r = AxiGrid::cell_centred(30, 0.9);
        let grid = AxiGrid::rzeta(r, 6).unwrap();
        let phi = AxiField::from_fn(grid.clone(), f64::INFINITY, |r, _| -2.0 * PI * (1.0 - r * r / 3.0)).unwrap();
        let rho = AxiField::from_fn(grid, 1.0, |_, _| 1.0).unwrap();
        assert!(poisson_residual(&phi, &rho, 1.0).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn regular_limit_at_origin() {
        let grid = AxiGrid::rzeta(AxiGrid::uniform(12, 1.0), 6).unwrap();
        // Δ(r² + r²P₂ + r⁴) = 6 + 20r².
        let phi = AxiField::from_fn(grid.clone(), f64::INFINITY, |r, z| r * r * (1.5 * z * z + 0.5) + r.powi(4)).unwrap();
        let rho = AxiField::from_fn(grid, f64::INFINITY, |r, _| (6.0 + 20.0 * r * r) / (4.0 * PI)).unwrap();
        assert!(poisson_residual(&phi, &rho, 1.0).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn grid_mismatch() {
        let a = AxiGrid::rzeta(AxiGrid::cell_centred(8, 1.0), 4).unwrap();
        let b = AxiGrid::rzeta(AxiGrid::cell_centred(8, 1.0), 6).unwrap();
        let phi = AxiField::zeros(a);
        let rho = AxiField::zeros(b);
        assert!(matches!(poisson_residual(&phi, &rho, 1.0), Err(crate::Error::GridMismatch(_))));
    }
}
