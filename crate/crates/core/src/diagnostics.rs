//! Conserved integrals (mass, energy, angular momentum) and equatorial
//! symmetry checks for axisymmetric states.
//!
//! Volume integrals use Gauss–Legendre weights in ζ (or the grid's z
//! weights) and composite Simpson in r, falling back to the trapezoid rule
//! on non-uniform radial grids. In the (r, ζ) chart dV = 2π r² dr dζ and
//! ϖ³ dϖ dz = r⁴(1 − ζ²) dr dζ. The transverse components J¹ and J² of an
//! axisymmetric state vanish identically and are not computed.

use serde::Serialize;

use crate::coords::{speed_squared, RZetaVelocity};
use crate::eos::GasLaw;
use crate::error::{domain, Error, Result};
use crate::field::{AxiField, AxiGrid, Chart};
use crate::gravity::{potential, PotentialOptions};
use crate::numerics::radial_weights;
use crate::numerics::sum::KahanSum;

/// Velocity components on the state grid: (V, W, Ω) in the cylindrical
/// chart or (v, w, Ω) = (dr/dt, dζ/dt, Ω) in the (r, ζ) chart.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityFields {
    pub radial: AxiField,
    pub vertical: AxiField,
    pub omega: AxiField,
}

#[derive(Debug, Clone)]
pub struct AxiState {
    pub t: f64,
    pub rho: AxiField,
    /// `None` for a static state.
    pub vel: Option<VelocityFields>,
    /// Recomputed from ρ when absent.
    pub phi: Option<AxiField>,
    pub law: GasLaw,
    /// Gravitational constant.
    pub g: f64,
}

impl AxiState {
    pub fn new(t: f64, rho: AxiField, vel: Option<VelocityFields>, phi: Option<AxiField>, law: GasLaw, g: f64) -> Result<Self> {
        let grid = &rho.grid;
        if let Some(v) = &vel {
            for f in [&v.radial, &v.vertical, &v.omega] {
                grid.require_same(&f.grid)?;
            }
        }
        if let Some(p) = &phi {
            grid.require_same(&p.grid)?;
        }
        if let Some(bad) = rho.values.iter().find(|v| !(**v >= 0.0)) {
            return domain(format!("density must be non-negative, got {bad}"));
        }
        if !rho.support_radius.is_finite() {
            return domain("density must have compact support");
        }
        if !(g > 0.0) {
            return domain("gravitational constant must be positive");
        }
        Ok(Self { t, rho, vel, phi, law, g })
    }

    pub fn chart(&self) -> Chart {
        self.rho.grid.chart
    }

    pub fn grid(&self) -> &AxiGrid {
        &self.rho.grid
    }

    /// Φ as stored, or from the kernel quadrature on the state grid.
    pub fn potential(&self) -> Result<AxiField> {
        match &self.phi {
            Some(p) => Ok(p.clone()),
            None => potential(&self.rho, self.grid(), &PotentialOptions { g: self.g, ..Default::default() }),
        }
    }
}

/// Node weights w[i·nz + j] with Σ w f ≈ ∫ f dV.
pub fn volume_weights(grid: &AxiGrid) -> Vec<f64> {
    let wr = radial_weights(&grid.radial);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = Vec::with_capacity(grid.len());
    for (i, &a) in grid.radial.iter().enumerate() {
        let jac = match grid.chart {
            Chart::RZeta => a * a,
            Chart::Cylindrical => a,
        };
        for &wz in &grid.vertical_weights {
            w.push(two_pi * jac * wr[i] * wz);
        }
    }
    w
}

/// ∫ f dV for point values f on the grid.
pub fn volume_integral(grid: &AxiGrid, values: &[f64]) -> f64 {
    let mut s = KahanSum::new();
    for (w, v) in volume_weights(grid).iter().zip(values) {
        s.add(w * v);
    }
    s.value()
}

fn cyl_radius_sq(grid: &AxiGrid, k: usize) -> f64 {
    let nz = grid.nz();
    let a = grid.radial[k / nz];
    match grid.chart {
        Chart::Cylindrical => a * a,
        Chart::RZeta => {
            let z = grid.vertical[k % nz];
            a * a * (1.0 - z * z)
        }
    }
}

pub fn total_mass(state: &AxiState) -> f64 {
    volume_integral(state.grid(), &state.rho.values)
}

/// |v|² at every node.
fn speed_sq(state: &AxiState) -> Result<Vec<f64>> {
    let grid = state.grid();
    let Some(v) = &state.vel else {
        return Ok(vec![0.0; grid.len()]);
    };
    let nz = grid.nz();
    (0..grid.len())
        .map(|k| {
            let (a, b, om) = (v.radial.values[k], v.vertical.values[k], v.omega.values[k]);
            match grid.chart {
                Chart::Cylindrical => Ok(a * a + b * b + cyl_radius_sq(grid, k) * om * om),
                Chart::RZeta => {
                    let (r, zeta) = (grid.radial[k / nz], grid.vertical[k % nz]);
                    if r == 0.0 {
                        // Only dr/dt survives at the origin.
                        return Ok(a * a);
                    }
                    speed_squared(RZetaVelocity { v: a, w: b, Omega: om }, r, zeta)
                }
            }
        })
        .collect()
}

/// Contributions to E = ∫(½ρ|v|² + Ψ(ρ) + ½ρΦ) dV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub internal: f64,
    pub gravitational: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.internal + self.gravitational
    }
}

pub fn energy_parts(state: &AxiState) -> Result<EnergyParts> {
    let grid = state.grid();
    let rho = &state.rho.values;
    let v2 = speed_sq(state)?;
    let phi = state.potential()?;
    let kin: Vec<f64> = rho.iter().zip(&v2).map(|(r, v)| 0.5 * r * v).collect();
    let int = rho.iter().map(|&r| state.law.psi(r)).collect::<Result<Vec<f64>>>()?;
    let grav: Vec<f64> = rho.iter().zip(&phi.values).map(|(r, p)| 0.5 * r * p).collect();
    Ok(EnergyParts {
        kinetic: volume_integral(grid, &kin),
        internal: volume_integral(grid, &int),
        gravitational: volume_integral(grid, &grav),
    })
}

pub fn total_energy(state: &AxiState) -> Result<f64> {
    Ok(energy_parts(state)?.total())
}

/// J = 2π ∫∫ ρ Ω ϖ³ dϖ dz, the axial component.
pub fn angular_momentum(state: &AxiState) -> f64 {
    let Some(v) = &state.vel else {
        return 0.0;
    };
    let grid = state.grid();
    let f: Vec<f64> = (0..grid.len()).map(|k| state.rho.values[k] * v.omega.values[k] * cyl_radius_sq(grid, k)).collect();
    volume_integral(grid, &f)
}

/// Largest violation of equatorial symmetry per field (W and w are odd).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub rho: f64,
    pub radial_velocity: f64,
    pub omega: f64,
    pub vertical_velocity: f64,
    pub phi: f64,
}

impl SymmetryReport {
    pub fn max(&self) -> f64 {
        [self.rho, self.radial_velocity, self.omega, self.vertical_velocity, self.phi].into_iter().fold(0.0, f64::max)
    }
}

pub fn symmetry_check(state: &AxiState) -> Result<SymmetryReport> {
    if !state.grid().is_vertically_symmetric() {
        return domain("symmetry check needs a grid symmetric under reflection");
    }
    let (radial_velocity, omega, vertical_velocity) = match &state.vel {
        Some(v) => (v.radial.asymmetry(false)?, v.omega.asymmetry(false)?, v.vertical.asymmetry(true)?),
        None => (0.0, 0.0, 0.0),
    };
    Ok(SymmetryReport {
        rho: state.rho.asymmetry(false)?,
        radial_velocity,
        omega,
        vertical_velocity,
        phi: state.potential()?.asymmetry(false)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conserved {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub angular_momentum: f64,
}

pub fn conserved(state: &AxiState) -> Result<Conserved> {
    Ok(Conserved { t: state.t, mass: total_mass(state), energy: total_energy(state)?, angular_momentum: angular_momentum(state) })
}

/// Largest |Q(t) − Q(t₀)|/|Q(t₀)| over the sequence (absolute when Q(t₀) = 0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub series: Vec<Conserved>,
    pub mass: f64,
    pub energy: f64,
    pub angular_momentum: f64,
}

fn drift(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut it = values.clone();
    let q0 = it.next().unwrap_or(0.0);
    let scale = if q0 == 0.0 { 1.0 } else { q0.abs() };
    values.fold(0.0, |m, q| m.max((q - q0).abs() / scale))
}

pub fn drift_from_series(series: Vec<Conserved>) -> Result<DriftReport> {
    if series.len() < 2 {
        return domain("drift report needs at least two states");
    }
    Ok(DriftReport {
        mass: drift(series.iter().map(|c| c.mass)),
        energy: drift(series.iter().map(|c| c.energy)),
        angular_momentum: drift(series.iter().map(|c| c.angular_momentum)),
        series,
    })
}

pub fn drift_report(states: &[AxiState]) -> Result<DriftReport> {
    if states.len() < 2 {
        return domain("drift report needs at least two states");
    }
    if let Some(s) = states.iter().find(|s| s.chart() != states[0].chart()) {
        return Err(Error::GridMismatch(format!("state at t = {} uses a different chart", s.t)));
    }
    drift_from_series(states.iter().map(conserved).collect::<Result<Vec<_>>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sphere(nr: usize, nz: usize) -> AxiField {
        AxiField::from_fn(AxiGrid::rzeta(AxiGrid::uniform(nr, 1.0), nz).unwrap(), 1.0, |_, _| 1.0).unwrap()
    }

    fn law() -> GasLaw {
        GasLaw::new(1.0, 2.0).unwrap()
    }

    fn rotating(rho: AxiField, omega: f64) -> AxiState {
        let grid = rho.grid.clone();
        let vel = VelocityFields {
            radial: AxiField::zeros(grid.clone()),
            vertical: AxiField::zeros(grid.clone()),
            omega: AxiField::from_fn(grid.clone(), f64::INFINITY, |_, _| omega).unwrap(),
        };
        let phi = AxiField::zeros(grid);
        AxiState::new(0.0, rho, Some(vel), Some(phi), law(), 1.0).unwrap()
    }

    #[test]
    fn uniform_sphere_mass_and_vacuum() {
        let s = AxiState::new(0.0, sphere(41, 4), None, Some(AxiField::zeros(sphere(41, 4).grid)), law(), 1.0).unwrap();
        assert!((total_mass(&s) - 4.0 * PI / 3.0).abs() <= 1e-8);
        let empty = AxiField::zeros(sphere(41, 4).grid).with_values(vec![0.0; 41 * 4]).unwrap();
        let mut z = AxiState::new(0.0, empty, None, None, law(), 1.0).unwrap();
        z.rho.support_radius = 1.0;
        assert_eq!(total_mass(&z), 0.0);
        assert_eq!(total_energy(&z).unwrap(), 0.0);
        assert_eq!(angular_momentum(&z), 0.0);
    }

    #[test]
    fn solid_rotation_moment_of_inertia() {
        let s = rotating(sphere(41, 6), 0.7);
        let m = total_mass(&s);
        let j = angular_momentum(&s);
        assert!((j - 0.4 * m * 0.7).abs() <= 1e-6 * j);
        let e = energy_parts(&s).unwrap();
        assert!((e.kinetic - 0.5 * 0.4 * m * 0.49).abs() <= 1e-6 * e.kinetic);
    }

    #[test]
    fn symmetry_report() {
        let grid = AxiGrid::rzeta(AxiGrid::uniform(9, 1.0), 6).unwrap();
        let odd = AxiField::from_fn(grid.clone(), 1.0, |r, z| z * (1.0 - r * r)).unwrap();
        let even = AxiField::from_fn(grid.clone(), 1.0, |r, z| (1.0 - r * r) * (1.0 + z * z)).unwrap();
        let vel = VelocityFields { radial: even.clone(), vertical: odd.clone(), omega: even.clone() };
        let s = AxiState::new(0.0, even.clone(), Some(vel), Some(even.clone()), law(), 1.0).unwrap();
        assert_eq!(symmetry_check(&s).unwrap().max(), 0.0);
        let bump = AxiField::from_fn(grid.clone(), 1.0, |r, z| (1.0 + z) * (1.0 - r * r)).unwrap();
        let s = AxiState::new(0.0, bump, None, Some(even), law(), 1.0).unwrap();
        let rep = symmetry_check(&s).unwrap();
        assert!((rep.rho - 2.0 * odd.max_abs()).abs() <= 1e-15);
    }

    #[test]
    fn drift_of_manufactured_sequence() {
        let base = rotating(sphere(21, 4), 0.3);
        let mut scaled = base.clone();
        scaled.rho = base.rho.with_values(base.rho.values.iter().map(|v| v * (1.0 + 3e-4)).collect()).unwrap();
        scaled.t = 1.0;
        let rep = drift_report(&[base.clone(), scaled]).unwrap();
        assert!((rep.mass - 3e-4).abs() <= 1e-10);
        assert!((rep.angular_momentum - 3e-4).abs() <= 1e-10);
        let same = drift_report(&[base.clone(), base.clone()]).unwrap();
        assert_eq!((same.mass, same.energy, same.angular_momentum), (0.0, 0.0, 0.0));
        assert!(drift_report(&[base]).is_err());
    }
}
