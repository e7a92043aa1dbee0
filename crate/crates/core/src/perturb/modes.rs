//! Radial pulsation eigenproblem of a static polytrope and explicit time
//! stepping of the axisymmetric system.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_open_grid, Forcing, PerturbOperator};
use crate::eos::GasLaw;
use crate::error::{domain, Error, Result};
use crate::field::AxiField;
use crate::numerics::gauss::GaussLegendre;
use crate::numerics::roots::bisect;
use crate::numerics::sum::compensated_sum;
use crate::polytrope::{build_equilibrium, Equilibrium};

/// Relative change of the lowest ω² (in units of 4πGρ_c) under halving of the
/// element count above which the discretization is reported as too coarse.
pub const MODE_CONVERGENCE_TOL: f64 = 1e-3;

/// Radial modes η(r) of a static polytrope, from the weak form
/// ω² ∫ρ̄ηψ r² = ∫(c̄²/ρ̄) g_η g_ψ r² − 4πG ∫ρ̄² ηψ r², g_η = (r²ρ̄η)′/r²,
/// with η(0) = 0 and a free surface.
#[derive(Debug, Clone)]
pub struct RadialModes {
    /// ω² in ascending order.
    pub omega2: Vec<f64>,
    /// FEM nodes 0 = r₀ < … < r_N = R.
    pub nodes: Vec<f64>,
    /// Nodal values of each eigenfunction, normalized to ∫ρ̄η²r² dr = 1 with
    /// η(R) ≥ 0.
    pub eigenfunctions: Vec<Vec<f64>>,
    /// Lowest ω² with half the elements.
    pub omega2_coarse: f64,
}

impl RadialModes {
    /// Piecewise-linear eigenfunction k at radius r (zero beyond R).
    pub fn eigenfunction(&self, k: usize, r: f64) -> f64 {
        let (x, v) = (&self.nodes, &self.eigenfunctions[k]);
        if r <= 0.0 || r > *x.last().unwrap() {
            return 0.0;
        }
        let i = x.partition_point(|&p| p < r).clamp(1, x.len() - 1);
        let s = (r - x[i - 1]) / (x[i] - x[i - 1]);
        (1.0 - s) * v[i - 1] + s * v[i]
    }
}

fn assemble(eq: &Equilibrium, n: usize) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<f64>)> {
    let radius = eq.radius;
    let nodes: Vec<f64> = (0..=n).map(|i| radius * i as f64 / n as f64).collect();
    let nu = eq.law.nu();
    let gauss = GaussLegendre::new(6);
    let mut k = DMatrix::zeros(n + 1, n + 1);
    let mut m = DMatrix::zeros(n + 1, n + 1);
    for e in 0..n {
        let (a, b) = (nodes[e], nodes[e + 1]);
        let h = b - a;
        for (r, w) in gauss.on_interval(a, b) {
            let [theta, dtheta] = eq.lane_emden.eval(r / eq.a)?;
            let theta = theta.max(0.0);
            let rho = eq.rho_c * theta.powf(nu);
            if rho <= 0.0 {
                continue;
            }
            let drho = eq.rho_c * nu * theta.powf(nu - 1.0) * dtheta / eq.a;
            let c2 = eq.law.dpdrho_over_rho(rho)?;
            let phi = [(b - r) / h, (r - a) / h];
            let dphi = [-1.0 / h, 1.0 / h];
            let g = [0, 1].map(|l| rho * dphi[l] + (2.0 * rho / r + drho) * phi[l]);
            for p in 0..2 {
                for q in 0..2 {
                    let (i, j) = (e + p, e + q);
                    k[(i, j)] += w * r * r * (c2 * g[p] * g[q] - 4.0 * PI * eq.g * rho * rho * phi[p] * phi[q]);
                    m[(i, j)] += w * r * r * rho * phi[p] * phi[q];
                }
            }
        }
    }
    Ok((k, m, nodes))
}

fn solve_modes(eq: &Equilibrium, n: usize, n_modes: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    let (k, m, nodes) = assemble(eq, n)?;
    // η(0) = 0 removes the first node.
    let k = k.view((1, 1), (n, n)).into_owned();
    let m = m.view((1, 1), (n, n)).into_owned();
    let chol = m.cholesky().ok_or_else(|| Error::Numeric("radial mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let a = &linv * k * linv.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let take = n_modes.min(n);
    let mut omega2 = Vec::with_capacity(take);
    let mut funcs = Vec::with_capacity(take);
    for &i in order.iter().take(take) {
        omega2.push(eig.eigenvalues[i]);
        let v = linv.transpose() * eig.eigenvectors.column(i);
        let mut f: Vec<f64> = std::iter::once(0.0).chain(v.iter().copied()).collect();
        if f[n] < 0.0 {
            f.iter_mut().for_each(|x| *x = -*x);
        }
        funcs.push(f);
    }
    Ok((omega2, nodes, funcs))
}

/// Lowest `n_modes` radial modes with `n_elements` linear elements on [0, R].
/// The lowest ω² is recomputed with half the elements and a relative change
/// above [`MODE_CONVERGENCE_TOL`] (scale 4πGρ_c) is an error.
pub fn radial_mode_eigen(eq: &Equilibrium, n_elements: usize, n_modes: usize) -> Result<RadialModes> {
    if n_elements < 8 || n_modes == 0 {
        return domain("radial_mode_eigen needs at least 8 elements and one mode");
    }
    if !eq.radius.is_finite() {
        return domain("radial modes need a polytrope of finite radius");
    }
    let (omega2, nodes, eigenfunctions) = solve_modes(eq, n_elements, n_modes)?;
    let (coarse, _, _) = solve_modes(eq, n_elements / 2, 1)?;
    let scale = 4.0 * PI * eq.g * eq.rho_c;
    let change = (omega2[0] - coarse[0]).abs() / scale;
    if change > MODE_CONVERGENCE_TOL {
        return Err(Error::Numeric(format!(
            "lowest radial eigenvalue not converged: {} with {} elements, {} with {} (relative change {change:e})",
            omega2[0],
            n_elements,
            coarse[0],
            n_elements / 2
        )));
    }
    Ok(RadialModes { omega2, nodes, eigenfunctions, omega2_coarse: coarse[0] })
}

/// Lowest radial ω² of the polytrope P = Aρ^γ with central density ρ_c.
pub fn lowest_radial_omega2(a: f64, gamma: f64, rho_c: f64, g: f64, n_elements: usize) -> Result<f64> {
    let eq = build_equilibrium(&GasLaw::new(a, gamma)?, rho_c, g)?;
    Ok(radial_mode_eigen(&eq, n_elements, 1)?.omega2[0])
}

/// γ at which the lowest radial ω² changes sign, by bisection on [lo, hi].
pub fn stability_crossing(rho_c: f64, lo: f64, hi: f64, n_elements: usize, tol: f64) -> Result<f64> {
    let mut failure = None;
    let root = bisect(
        |gm| match lowest_radial_omega2(1.0, gm, rho_c, 1.0, n_elements) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    root
}

/// State of the axisymmetric system: (η¹, η²) and their time derivatives.
#[derive(Debug, Clone)]
pub struct ModeState {
    pub t: f64,
    pub eta1: AxiField,
    pub eta2: AxiField,
    pub rate1: AxiField,
    pub rate2: AxiField,
}

impl ModeState {
    pub fn at_rest(t: f64, eta1: AxiField, eta2: AxiField) -> Result<Self> {
        eta1.grid.require_same(&eta2.grid)?;
        let z = AxiField::zeros(eta1.grid.clone());
        Ok(Self { t, eta1, eta2, rate1: z.clone(), rate2: z })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepOptions {
    pub dt: f64,
    pub n_steps: usize,
    /// Abort once the energy norm exceeds this multiple of its initial value.
    pub growth_limit: f64,
}

/// Per-step diagnostics of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub t: f64,
    /// max over the grid of the physical displacement length.
    pub max_displacement: f64,
    /// √∫ρ̄(|η|² + τ²|η̇|²) dV with τ = (4πGρ̄_max)^{−1/2}.
    pub energy_norm: f64,
}

/// Largest admissible step: half the shortest grid spacing (radial, or arc
/// between neighbouring ζ nodes on the innermost shell) over max √(dP/dρ).
pub fn max_stable_dt(op: &PerturbOperator) -> f64 {
    let bg = op.background();
    let grid = bg.grid();
    let c_max = bg.dpdrho.values.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt();
    let dr = grid.radial.windows(2).map(|w| w[1] - w[0]).fold(grid.radial[0], f64::min);
    let theta: Vec<f64> = grid.vertical.iter().map(|z| z.acos()).collect();
    let dth = theta.windows(2).map(|w| (w[0] - w[1]).abs()).fold(f64::INFINITY, f64::min);
    let h = dr.min(grid.radial[0] * dth);
    if c_max > 0.0 {
        0.5 * h / c_max
    } else {
        f64::INFINITY
    }
}

fn report(op: &PerturbOperator, s: &ModeState, weights: &[f64], tau: f64) -> StepReport {
    let d = op.diff();
    let (mut maxd, mut parts) = (0.0f64, Vec::with_capacity(weights.len()));
    for (k, w) in weights.iter().enumerate() {
        let (r, z) = d.node(k);
        let metric = r * r / (1.0 - z * z);
        let len2 = s.eta1.values[k].powi(2) + metric * s.eta2.values[k].powi(2);
        let rate2 = s.rate1.values[k].powi(2) + metric * s.rate2.values[k].powi(2);
        maxd = maxd.max(len2.sqrt());
        parts.push(w * op.background().rho.values[k] * (len2 + tau * tau * rate2));
    }
    StepReport { t: s.t, max_displacement: maxd, energy_norm: compensated_sum(parts).max(0.0).sqrt() }
}

/// Velocity-Verlet (kick–drift–kick) integration of the axisymmetric system,
/// calling `observe` after every step.
pub fn mode_timestep(
    op: &PerturbOperator,
    state: ModeState,
    forcing: &Forcing,
    opts: &StepOptions,
    mut observe: impl FnMut(&ModeState),
) -> Result<(ModeState, Vec<StepReport>)> {
    let grid = op.background().grid().clone();
    check_open_grid(&grid)?;
    for f in [&state.eta1, &state.eta2, &state.rate1, &state.rate2] {
        grid.require_same(&f.grid)?;
    }
    let limit = max_stable_dt(op);
    if !(opts.dt > 0.0 && opts.dt <= limit) {
        return domain(format!("time step {} outside (0, {limit}] allowed by the grid and sound speed", opts.dt));
    }
    let weights = crate::diagnostics::volume_weights(&grid);
    let rho_max = op.background().rho.max_abs();
    let tau = 1.0 / (4.0 * PI * op.background().g * rho_max).sqrt();
    let mut s = state;
    let mut reports = vec![report(op, &s, &weights, tau)];
    let initial = reports[0].energy_norm;
    // The pole condition is checked on the initial data; the (1 − ζ²) factor of
    // the η² acceleration preserves it.
    let [mut a1, mut a2] = op.acceleration_axisymmetric(&s.eta1, &s.eta2, forcing)?;
    let h = opts.dt;
    for step in 0..opts.n_steps {
        let axpy = |x: &mut AxiField, y: &AxiField, c: f64| x.values.iter_mut().zip(&y.values).for_each(|(a, b)| *a += c * b);
        axpy(&mut s.rate1, &a1, 0.5 * h);
        axpy(&mut s.rate2, &a2, 0.5 * h);
        axpy(&mut s.eta1, &s.rate1.clone(), h);
        axpy(&mut s.eta2, &s.rate2.clone(), h);
        [a1, a2] = op.acceleration_unchecked(&s.eta1, &s.eta2, forcing)?;
        axpy(&mut s.rate1, &a1, 0.5 * h);
        axpy(&mut s.rate2, &a2, 0.5 * h);
        s.t += h;
        let rep = report(op, &s, &weights, tau);
        reports.push(rep);
        let grown = if initial > 0.0 { rep.energy_norm / initial } else if rep.energy_norm > 0.0 { f64::INFINITY } else { 0.0 };
        if !rep.energy_norm.is_finite() || grown > opts.growth_limit {
            return Err(Error::Trace {
                t: s.t,
                state: vec![rep.energy_norm, rep.max_displacement],
                msg: format!(
                    "energy norm grew by a factor {grown:e} after {} steps (limit {:e})",
                    step + 1,
                    opts.growth_limit
                ),
            });
        }
        observe(&s);
    }
    Ok((s, reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stability_signs() {
        let stable = lowest_radial_omega2(1.0, 1.40, 1.0, 1.0, 200).unwrap();
        let unstable = lowest_radial_omega2(1.0, 1.30, 1.0, 1.0, 200).unwrap();
        assert!(stable > 0.0 && unstable < 0.0, "{stable} {unstable}");
    }

    #[test]
    fn eigenfunctions_are_normalized() {
        let eq = build_equilibrium(&GasLaw::new(1.0, 2.0).unwrap(), 1.0, 1.0).unwrap();
        let modes = radial_mode_eigen(&eq, 120, 3).unwrap();
        assert!(modes.omega2.windows(2).all(|w| w[0] <= w[1]));
        assert!(modes.omega2[0] > 0.0);
        assert_eq!(modes.eigenfunction(0, 0.0), 0.0);
        assert!(modes.eigenfunction(0, eq.radius) > 0.0);
    }
}
