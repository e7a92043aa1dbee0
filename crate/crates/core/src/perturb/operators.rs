//! Linearized oscillation operators about a background at rest in the frame
//! rotating with Ω̄.

use super::{check_open_grid, Background, Displacement, DisplacementChart, Forcing, GridDiff, Parity};
use crate::error::{domain, Result};
use crate::field::AxiField;
use crate::frames::Vec3;
use crate::gravity::{PotentialOperator, PotentialOptions};
use crate::numerics::diff::{barycentric_weights, lagrange_basis};

/// −2Ω̄ e_z × ξ̇, the Coriolis part of the acceleration.
pub fn coriolis_acceleration(omega_bar: f64, rate: Vec3) -> Vec3 {
    [2.0 * omega_bar * rate[1], -2.0 * omega_bar * rate[0], 0.0]
}

/// g = div(ρ̄ξ) on the displacement's grid.
pub fn g_divergence(rho_bar: &AxiField, disp: &Displacement) -> Result<AxiField> {
    rho_bar.grid.require_same(disp.grid())?;
    let d = GridDiff::new(disp.grid())?;
    let values = g_values(&d, &rho_bar.values, disp);
    AxiField::new(rho_bar.grid.clone(), values, rho_bar.support_radius)
}

fn g_values(d: &GridDiff, rho: &[f64], disp: &Displacement) -> Vec<f64> {
    let n = rho.len();
    let times = |c: &AxiField| -> Vec<f64> { c.values.iter().zip(rho).map(|(a, b)| a * b).collect() };
    let [c0, c1, c2] = &disp.components;
    match disp.chart {
        DisplacementChart::Axisymmetric => {
            let (f1, f2) = (times(c0), times(c1));
            let (f1r, f2z) = (d.d_r(&f1, Parity::Odd), d.d_zeta_pole(&f2));
            (0..n).map(|k| f1r[k] + 2.0 * f1[k] / d.node(k).0 + f2z[k]).collect()
        }
        DisplacementChart::Cartesian => {
            let (fw, _, f_over) = d.axial_derivs(&times(c0));
            let (_, fz) = d.cyl_grad(&times(c2));
            (0..n).map(|k| fw[k] + f_over[k] + fz[k]).collect()
        }
    }
}

/// Q = −(c̄²/ρ̄)g − Φ[g] split into its pressure and potential parts, with
/// (r, ζ) gradients. The pressure part is zero where ρ̄ = 0.
#[derive(Debug, Clone)]
pub struct QField {
    pub pressure: Vec<f64>,
    pub potential: Vec<f64>,
    pub pressure_grad: [Vec<f64>; 2],
    pub potential_grad: [Vec<f64>; 2],
}

impl QField {
    pub fn values(&self) -> Vec<f64> {
        self.pressure.iter().zip(&self.potential).map(|(a, b)| a + b).collect()
    }

    /// (∂_rQ, ∂_ζQ).
    pub fn grad(&self) -> [Vec<f64>; 2] {
        let sum = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        [sum(&self.pressure_grad[0], &self.potential_grad[0]), sum(&self.pressure_grad[1], &self.potential_grad[1])]
    }
}

/// Background with its differentiation and potential operators prepared for
/// repeated application.
#[derive(Debug, Clone)]
pub struct PerturbOperator {
    bg: Background,
    diff: GridDiff,
    pot: PotentialOperator,
    /// c̄²/ρ̄ on the grid, 0 where ρ̄ = 0.
    c2_over_rho: Vec<f64>,
}

impl PerturbOperator {
    pub fn new(bg: Background) -> Result<Self> {
        Self::with_options(bg, &PotentialOptions::default())
    }

    /// As [`PerturbOperator::new`]; the gravitational constant is taken from
    /// the background regardless of `opts.g`.
    pub fn with_options(bg: Background, opts: &PotentialOptions) -> Result<Self> {
        let grid = bg.grid().clone();
        check_open_grid(&grid)?;
        let diff = GridDiff::new(&grid)?;
        let opts = PotentialOptions { g: bg.g, kernel: opts.kernel.clone() };
        let pot = PotentialOperator::new(&grid, bg.support_radius, &grid.points(), &opts, true)?;
        let c2_over_rho = bg
            .rho
            .values
            .iter()
            .map(|&r| if r > 0.0 { bg.law.dpdrho_over_rho(r) } else { Ok(0.0) })
            .collect::<Result<_>>()?;
        Ok(Self { bg, diff, pot, c2_over_rho })
    }

    pub fn background(&self) -> &Background {
        &self.bg
    }

    pub(crate) fn diff(&self) -> &GridDiff {
        &self.diff
    }

    pub fn g_divergence(&self, disp: &Displacement) -> Result<AxiField> {
        self.bg.grid().require_same(disp.grid())?;
        AxiField::new(self.bg.grid().clone(), g_values(&self.diff, &self.bg.rho.values, disp), self.bg.support_radius)
    }

    /// Q for a density perturbation δρ = −g: pressure part −(c̄²/ρ̄)g and
    /// potential part −Φ[g].
    pub fn perturbation_q(&self, g: &AxiField) -> Result<QField> {
        self.bg.grid().require_same(&g.grid)?;
        let pressure: Vec<f64> = g.values.iter().zip(&self.c2_over_rho).map(|(a, c)| -c * a).collect();
        let mut potential = self.pot.potential(&g.values)?;
        let (mut pr, mut pz) = self.pot.gradient(&g.values)?;
        for v in potential.iter_mut().chain(pr.iter_mut()).chain(pz.iter_mut()) {
            *v = -*v;
        }
        let pressure_grad = [self.diff.d_r(&pressure, Parity::Even), self.diff.d_zeta(&pressure)];
        Ok(QField { pressure, potential, pressure_grad, potential_grad: [pr, pz] })
    }

    /// (ξ̈_ϖ, ξ̈_φ, ξ̈_z) = (2Ω̄ξ̇_φ − ∂_ϖQ, −2Ω̄ξ̇_ϖ, −∂_zQ) for a Cartesian
    /// displacement; missing rates are taken as zero.
    pub fn acceleration_cartesian(&self, disp: &Displacement) -> Result<[AxiField; 3]> {
        if disp.chart != DisplacementChart::Cartesian {
            return domain("acceleration_cartesian needs a Cartesian displacement");
        }
        let g = self.g_divergence(disp)?;
        let [qr, qz] = self.perturbation_q(&g)?.grad();
        let (qw, qzz) = self.diff.cyl_from_polar(&qr, &qz);
        let n = qw.len();
        let (rw, rphi) = match &disp.rates {
            Some([a, b, _]) => (a.values.clone(), b.values.clone()),
            None => (vec![0.0; n], vec![0.0; n]),
        };
        let om = self.bg.omega_bar;
        let grid = self.bg.grid();
        Ok([
            AxiField::new(grid.clone(), (0..n).map(|k| 2.0 * om * rphi[k] - qw[k]).collect(), f64::INFINITY)?,
            AxiField::new(grid.clone(), (0..n).map(|k| -2.0 * om * rw[k]).collect(), f64::INFINITY)?,
            AxiField::new(grid.clone(), qzz.iter().map(|v| -v).collect(), f64::INFINITY)?,
        ])
    }

    /// (η̈¹, η̈²) of the closed axisymmetric system after eliminating η³
    /// through the conserved angular momentum:
    /// η̈¹ = −4Ω̄²((1−ζ²)η¹ − rζη²) + 2r(1−ζ²)Ω̄ω̊ − ∂_rQ,
    /// η̈² = −4Ω̄²(ζ²η² − ζ(1−ζ²)η¹/r) − 2ζ(1−ζ²)Ω̄ω̊ − ((1−ζ²)/r²)∂_ζQ,
    /// with Q built from δρ = ρ̄q̊ − g.
    pub fn acceleration_axisymmetric(&self, eta1: &AxiField, eta2: &AxiField, forcing: &Forcing) -> Result<[AxiField; 2]> {
        self.check_axisymmetric(eta1, eta2)?;
        self.acceleration_unchecked(eta1, eta2, forcing)
    }

    /// Grid and pole checks of an axisymmetric displacement.
    pub fn check_axisymmetric(&self, eta1: &AxiField, eta2: &AxiField) -> Result<()> {
        let grid = self.bg.grid();
        grid.require_same(&eta1.grid)?;
        grid.require_same(&eta2.grid)?;
        let radial = eta1.values.iter().zip(grid.points()).fold(0.0f64, |m, (v, [r, _])| m.max(v.abs() / r));
        check_pole_condition(eta2, radial)
    }

    pub(crate) fn acceleration_unchecked(&self, eta1: &AxiField, eta2: &AxiField, forcing: &Forcing) -> Result<[AxiField; 2]> {
        let grid = self.bg.grid();
        if let Some(w) = &forcing.omega_init {
            grid.require_same(&w.grid)?;
        }
        let zero = AxiField::zeros(grid.clone());
        let disp = Displacement::new(DisplacementChart::Axisymmetric, [eta1.clone(), eta2.clone(), zero], None)?;
        let mut g = self.g_divergence(&disp)?;
        if let Some(q) = &forcing.q_init {
            grid.require_same(&q.grid)?;
            for ((gv, qv), r) in g.values.iter_mut().zip(&q.values).zip(&self.bg.rho.values) {
                *gv -= r * qv;
            }
        }
        let [qr, qz] = self.perturbation_q(&g)?.grad();
        let om = self.bg.omega_bar;
        let n = grid.len();
        let (mut a1, mut a2) = (vec![0.0; n], vec![0.0; n]);
        for k in 0..n {
            let (r, z) = self.diff.node(k);
            let c = 1.0 - z * z;
            let (e1, e2) = (eta1.values[k], eta2.values[k]);
            let w = forcing.omega_init.as_ref().map_or(0.0, |f| f.values[k]);
            a1[k] = -4.0 * om * om * (c * e1 - r * z * e2) + 2.0 * r * c * om * w - qr[k];
            a2[k] = -4.0 * om * om * (z * z * e2 - z * c * e1 / r) - 2.0 * z * c * om * w - c / (r * r) * qz[k];
        }
        Ok([AxiField::new(grid.clone(), a1, f64::INFINITY)?, AxiField::new(grid.clone(), a2, f64::INFINITY)?])
    }
}

/// Rejects η² fields whose polynomial extension in ζ does not vanish at
/// ζ = ±1, relative to max(max|η²|, `scale`).
pub fn check_pole_condition(eta2: &AxiField, scale: f64) -> Result<()> {
    let zeta = &eta2.grid.vertical;
    let bw = barycentric_weights(zeta);
    let nz = zeta.len();
    let (mut lo, mut hi) = (vec![0.0; nz], vec![0.0; nz]);
    lagrange_basis(zeta, &bw, -1.0, &mut lo);
    lagrange_basis(zeta, &bw, 1.0, &mut hi);
    let scale = eta2.max_abs().max(scale);
    for i in 0..eta2.nr() {
        let row = eta2.row(i);
        for (pole, basis) in [(-1.0, &lo), (1.0, &hi)] {
            let v: f64 = basis.iter().zip(row).map(|(a, b)| a * b).sum();
            if v.abs() > 1e-6 * scale.max(f64::MIN_POSITIVE) {
                return domain(format!(
                    "eta2 must vanish at zeta = {pole}; its extension is {v:e} at r = {}",
                    eta2.grid.radial[i]
                ));
            }
        }
    }
    Ok(())
}

/// ∂η³/∂t = ω̊ − (2Ω̄/r)η¹ + (2ζΩ̄/(1 − ζ²))η².
pub fn omega_restore(eta1: &AxiField, eta2: &AxiField, omega_bar: f64, omega_init: Option<&AxiField>) -> Result<AxiField> {
    let grid = &eta1.grid;
    check_open_grid(grid)?;
    grid.require_same(&eta2.grid)?;
    if let Some(w) = omega_init {
        grid.require_same(&w.grid)?;
    }
    let values = grid
        .points()
        .into_iter()
        .enumerate()
        .map(|(k, [r, z])| {
            let w = omega_init.map_or(0.0, |f| f.values[k]);
            w - 2.0 * omega_bar / r * eta1.values[k] + 2.0 * z * omega_bar / (1.0 - z * z) * eta2.values[k]
        })
        .collect();
    AxiField::new(grid.clone(), values, f64::INFINITY)
}
