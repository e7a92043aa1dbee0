//! Lagrangian perturbations of stationary axisymmetric states.
//!
//! A displacement is stored on an (r, ζ) grid in one of two charts:
//! - `Cartesian`: the components (ξ¹, ξ², ξ³) of an axisymmetric vector field
//!   sampled on the meridional half-plane x² = 0, where they coincide with
//!   the cylindrical components (ξ_ϖ, ξ_φ, ξ_z);
//! - `Axisymmetric`: (η¹, η², η³), the displacements of (r, ζ, φ), so that a
//!   fluid element at (r, ζ) sits at (r + η¹, ζ + η²).
//!
//! The operators follow the linearized system about a background at rest in
//! the frame rotating with Ω̄. The potential operator is 4πG𝔎f = −Φ[f], with
//! Φ[f] the Newton potential of f from [`crate::gravity`].

mod lagrangian;
mod modes;
mod operators;

pub use lagrangian::*;
pub use modes::*;
pub use operators::*;

use serde::{Deserialize, Serialize};

use crate::eos::GasLaw;
use crate::error::{domain, Error, Result};
use crate::field::{AxiField, AxiGrid, Chart};
use crate::numerics::diff::{lagrange_diff_matrix, FdOperator};
use crate::polytrope::{stationary_residuals, Equilibrium, Rotation};

/// Default bound on the relative stationary residual of a background.
pub const STATIONARY_TOL: f64 = 1e-6;

/// Stationary state about which perturbations are taken.
#[derive(Debug, Clone)]
pub struct Background {
    pub rho: AxiField,
    pub u: AxiField,
    pub phi: AxiField,
    /// dP/dρ at ρ̄.
    pub dpdrho: AxiField,
    pub omega_bar: f64,
    pub law: GasLaw,
    pub g: f64,
    /// Radius of a ball containing the support 𝒟 of ρ̄.
    pub support_radius: f64,
    /// Relative stationary residual measured at construction.
    pub stationary_residual: f64,
}

impl Background {
    /// Validates the fields and the stationary balance ∇(ū + Φ̄) = Ω̄²ϖ e_ϖ on
    /// {ū > 0}, refusing backgrounds whose relative residual exceeds `tol`.
    pub fn new(rho: AxiField, u: AxiField, phi: AxiField, omega_bar: f64, law: GasLaw, g: f64, tol: f64) -> Result<Self> {
        if rho.grid.chart != Chart::RZeta {
            return domain("perturbation backgrounds use the (r, zeta) chart");
        }
        rho.grid.require_same(&u.grid)?;
        rho.grid.require_same(&phi.grid)?;
        if !omega_bar.is_finite() || !(g > 0.0) {
            return domain("background needs finite omega_bar and positive G");
        }
        if !rho.support_radius.is_finite() {
            return domain("background density must have compact support");
        }
        let dpdrho = rho.values.iter().map(|&r| law.dpdrho(r)).collect::<Result<Vec<_>>>()?;
        let dpdrho = AxiField::new(rho.grid.clone(), dpdrho, rho.support_radius)?;
        let res = stationary_residuals(&u, &phi, &Rotation::Solid(omega_bar))?;
        let (rad, vert) = res.max_where(|_, _| true);
        let big = |f: &AxiField| {
            f.values.iter().zip(&rho.values).filter(|(_, r)| **r > 0.0).fold(0.0f64, |m, (v, _)| m.max(v.abs()))
        };
        let scale = (big(&u) + big(&phi)).max(f64::MIN_POSITIVE);
        let rel = (rad * rho.support_radius).max(vert) / scale;
        if !(rel <= tol) {
            return domain(format!("background is not stationary: relative residual {rel:e} exceeds {tol:e}"));
        }
        let support_radius = rho.support_radius;
        Ok(Self { rho, u, phi, dpdrho, omega_bar, law, g, support_radius, stationary_residual: rel })
    }

    /// Non-rotating polytrope sampled on `grid`.
    pub fn from_equilibrium(eq: &Equilibrium, grid: &AxiGrid) -> Result<Self> {
        Self::new(eq.rho_field(grid)?, eq.u_field(grid)?, eq.phi_field(grid)?, 0.0, eq.law.clone(), eq.g, STATIONARY_TOL)
    }

    pub fn grid(&self) -> &AxiGrid {
        &self.rho.grid
    }

    pub fn is_equatorially_symmetric(&self) -> bool {
        [&self.rho, &self.u, &self.phi].iter().all(|f| f.asymmetry(false).is_ok_and(|a| a <= 1e-12 * f.max_abs().max(1.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisplacementChart {
    Cartesian,
    Axisymmetric,
}

/// Displacement field with optional time derivatives.
#[derive(Debug, Clone)]
pub struct Displacement {
    pub chart: DisplacementChart,
    pub components: [AxiField; 3],
    pub rates: Option<[AxiField; 3]>,
}

impl Displacement {
    pub fn new(chart: DisplacementChart, components: [AxiField; 3], rates: Option<[AxiField; 3]>) -> Result<Self> {
        let grid = &components[0].grid;
        if grid.chart != Chart::RZeta {
            return domain("displacements are sampled on an (r, zeta) grid");
        }
        for f in components.iter().chain(rates.iter().flatten()) {
            grid.require_same(&f.grid)?;
        }
        Ok(Self { chart, components, rates })
    }

    pub fn zeros(chart: DisplacementChart, grid: &AxiGrid) -> Self {
        let z = AxiField::zeros(grid.clone());
        Self { chart, components: [z.clone(), z.clone(), z], rates: None }
    }

    pub fn grid(&self) -> &AxiGrid {
        &self.components[0].grid
    }

    /// Cartesian displacement from (ξ_ϖ, ξ_φ, ξ_z)(r, ζ).
    pub fn cartesian_from_fn(grid: &AxiGrid, f: impl Fn(f64, f64) -> [f64; 3]) -> Result<Self> {
        Self::from_fn(DisplacementChart::Cartesian, grid, f)
    }

    /// Axisymmetric displacement from (η¹, η², η³)(r, ζ).
    pub fn axisymmetric_from_fn(grid: &AxiGrid, f: impl Fn(f64, f64) -> [f64; 3]) -> Result<Self> {
        Self::from_fn(DisplacementChart::Axisymmetric, grid, f)
    }

    fn from_fn(chart: DisplacementChart, grid: &AxiGrid, f: impl Fn(f64, f64) -> [f64; 3]) -> Result<Self> {
        let vals: Vec<[f64; 3]> = grid.points().into_iter().map(|[r, z]| f(r, z)).collect();
        let comp = |k: usize| AxiField::new(grid.clone(), vals.iter().map(|v| v[k]).collect(), f64::INFINITY);
        Self::new(chart, [comp(0)?, comp(1)?, comp(2)?], None)
    }

    /// The same first-order displacement in the other chart:
    /// η¹ = sξ_ϖ + ζξ_z, η² = (−ζsξ_ϖ + (1 − ζ²)ξ_z)/r, η³ = ξ_φ/ϖ, with
    /// s = √(1 − ζ²).
    pub fn to_chart(&self, chart: DisplacementChart) -> Result<Self> {
        if chart == self.chart {
            return Ok(self.clone());
        }
        let grid = self.grid();
        check_open_grid(grid)?;
        let map = |c: &[AxiField; 3]| -> Result<[AxiField; 3]> {
            let mut out = [Vec::new(), Vec::new(), Vec::new()];
            for (k, [r, z]) in grid.points().into_iter().enumerate() {
                let s = (1.0 - z * z).sqrt();
                let (a, b, c3) = (c[0].values[k], c[1].values[k], c[2].values[k]);
                let v = match chart {
                    DisplacementChart::Axisymmetric => [s * a + z * c3, (-z * s * a + (1.0 - z * z) * c3) / r, b / (r * s)],
                    DisplacementChart::Cartesian => [s * a - z * r * b / s, r * s * c3, z * a + r * b],
                };
                for m in 0..3 {
                    out[m].push(v[m]);
                }
            }
            let [x, y, w] = out;
            Ok([
                AxiField::new(grid.clone(), x, f64::INFINITY)?,
                AxiField::new(grid.clone(), y, f64::INFINITY)?,
                AxiField::new(grid.clone(), w, f64::INFINITY)?,
            ])
        };
        let rates = self.rates.as_ref().map(map).transpose()?;
        Self::new(chart, map(&self.components)?, rates)
    }
}

/// Forcing data of the general linearized system: q̊ = (ρ̊ − ρ̄)/ρ̄ and ω̊.
#[derive(Debug, Clone, Default)]
pub struct Forcing {
    pub q_init: Option<AxiField>,
    pub omega_init: Option<AxiField>,
}

pub(crate) fn check_open_grid(grid: &AxiGrid) -> Result<()> {
    if grid.chart != Chart::RZeta {
        return domain("perturbation operators use the (r, zeta) chart");
    }
    if grid.radial[0] <= 0.0 {
        return Err(Error::Singularity("perturbation operators need radial nodes with r > 0".into()));
    }
    if grid.vertical.iter().any(|z| z.abs() >= 1.0) {
        return Err(Error::Singularity("perturbation operators need |zeta| < 1 on every node".into()));
    }
    Ok(())
}

/// Behaviour of a field under the reflection (r, ζ) → (−r, −ζ) through the
/// origin: scalars and Cartesian ξ_z are even; η¹, η², ξ_ϖ and ξ_φ are odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Parity {
    Even,
    Odd,
}

/// Ghost nodes at −r used by the radial stencils next to the origin.
const GHOSTS: usize = 2;

/// Fourth-order differences in r and Gauss–Legendre differentiation in ζ for
/// row-major fields on one grid. On ζ grids symmetric about 0 the radial
/// stencils at the innermost nodes are centred, with ghost values at −r taken
/// from the reflected node (r, −ζ) and the field's parity.
#[derive(Debug, Clone)]
pub(crate) struct GridDiff {
    pub r: Vec<f64>,
    pub zeta: Vec<f64>,
    pub nr: usize,
    pub nz: usize,
    d1: FdOperator,
    ghosts: usize,
    dz: Vec<Vec<f64>>,
}

impl GridDiff {
    pub fn new(grid: &AxiGrid) -> Result<Self> {
        if grid.nr() < 6 {
            return domain("perturbation operators need at least 6 radial nodes");
        }
        let ghosts = if grid.is_vertically_symmetric() && grid.radial[0] > 0.0 { GHOSTS } else { 0 };
        let ext: Vec<f64> = grid.radial[..ghosts].iter().rev().map(|r| -r).chain(grid.radial.iter().copied()).collect();
        Ok(Self {
            r: grid.radial.clone(),
            zeta: grid.vertical.clone(),
            nr: grid.nr(),
            nz: grid.nz(),
            d1: FdOperator::fourth_order(&ext, 1),
            ghosts,
            dz: lagrange_diff_matrix(&grid.vertical),
        })
    }

    pub fn d_r(&self, f: &[f64], parity: Parity) -> Vec<f64> {
        let (nz, g) = (self.nz, self.ghosts);
        let sign = if parity == Parity::Even { 1.0 } else { -1.0 };
        let value = |m: usize, j: usize| {
            if m >= g {
                f[(m - g) * nz + j]
            } else {
                sign * f[(g - 1 - m) * nz + (nz - 1 - j)]
            }
        };
        let mut out = vec![0.0; f.len()];
        for i in 0..self.nr {
            for j in 0..nz {
                out[i * nz + j] = self.d1.apply_at(i + g, |m| value(m, j));
            }
        }
        out
    }

    pub fn d_zeta(&self, f: &[f64]) -> Vec<f64> {
        let nz = self.nz;
        let mut out = vec![0.0; f.len()];
        for i in 0..self.nr {
            let row = &f[i * nz..(i + 1) * nz];
            for j in 0..nz {
                out[i * nz + j] = self.dz[j].iter().zip(row).map(|(a, b)| a * b).sum();
            }
        }
        out
    }

    /// ∂_ζf for f = (1 − ζ²)h, as (1 − ζ²)∂_ζh − 2ζh with h interpolated at
    /// the nodes, so that f vanishes at the poles.
    pub fn d_zeta_pole(&self, f: &[f64]) -> Vec<f64> {
        let h: Vec<f64> = (0..f.len()).map(|k| f[k] / (1.0 - self.node(k).1.powi(2))).collect();
        let dh = self.d_zeta(&h);
        (0..f.len())
            .map(|k| {
                let z = self.node(k).1;
                (1.0 - z * z) * dh[k] - 2.0 * z * h[k]
            })
            .collect()
    }

    pub fn node(&self, k: usize) -> (f64, f64) {
        (self.r[k / self.nz], self.zeta[k % self.nz])
    }

    /// (∂_ϖ f, ∂_z f) of an even field from its (r, ζ) derivatives.
    pub fn cyl_grad(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (fr, fz) = (self.d_r(f, Parity::Even), self.d_zeta(f));
        self.cyl_from_polar(&fr, &fz)
    }

    pub fn cyl_from_polar(&self, fr: &[f64], fz: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = fr.len();
        let (mut dw, mut dz) = (vec![0.0; n], vec![0.0; n]);
        for k in 0..n {
            let (r, z) = self.node(k);
            let s = (1.0 - z * z).sqrt();
            dw[k] = s * fr[k] - z * s / r * fz[k];
            dz[k] = z * fr[k] + (1.0 - z * z) / r * fz[k];
        }
        (dw, dz)
    }

    /// (∂_ϖF, ∂_zF, F/ϖ) for a component F that is odd under ϖ → −ϖ, computed
    /// through the regular quotient G = F/√(1 − ζ²).
    pub fn axial_derivs(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = f.len();
        let gq: Vec<f64> = (0..n).map(|k| f[k] / (1.0 - self.node(k).1.powi(2)).sqrt()).collect();
        let (gr, gz) = (self.d_r(&gq, Parity::Odd), self.d_zeta(&gq));
        let (mut dw, mut dz, mut over) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for k in 0..n {
            let (r, z) = self.node(k);
            let c = 1.0 - z * z;
            let s = c.sqrt();
            dw[k] = c * gr[k] - z * c * gz[k] / r + z * z * gq[k] / r;
            dz[k] = s * (z * gr[k] + c * gz[k] / r - z * gq[k] / r);
            over[k] = gq[k] / r;
        }
        (dw, dz, over)
    }
}
