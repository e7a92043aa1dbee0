//! Lebovitz displacement, the Lagrangian change Δ and Eulerian difference δ,
//! and numerical checks of their calculus on analytic 3-D Cartesian data.
//!
//! With ū and u the unperturbed and perturbed velocities and φ̄, φ their flow
//! maps, ξ(t, x) = φ(t; t₀, φ̄(t₀; t, x)) − x and
//! ΔQ(t, x) = Q(t, x + ξ(t, x)) − Q̄(t, x).

use super::{check_open_grid, Displacement, DisplacementChart, Parity};
use crate::error::{domain, Result};
use crate::field::AxiField;
use crate::frames::{det3, Mat3, Vec3};
use crate::numerics::ode::{solve, OdeOptions};
use crate::numerics::quad::{integrate, QuadOptions};

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn unit(k: usize, h: f64) -> Vec3 {
    let mut e = [0.0; 3];
    e[k] = h;
    e
}

/// φ(t; s, y): position at time t of the element that sits at y at time s.
pub fn flow_map(u: &dyn Fn(f64, Vec3) -> Vec3, s: f64, y: Vec3, t: f64, tol: f64) -> Result<Vec3> {
    solve(|tau, x: &Vec3| u(tau, *x), s, y, t, OdeOptions::new(tol, tol * 1e-2))
}

/// ξ(t, x) = φ(t; t₀, φ̄(t₀; t, x)) − x; exactly zero at t = t₀.
pub fn lebovitz_displacement(
    u: &dyn Fn(f64, Vec3) -> Vec3,
    u_bar: &dyn Fn(f64, Vec3) -> Vec3,
    t0: f64,
    t: f64,
    x: Vec3,
    tol: f64,
) -> Result<Vec3> {
    if t == t0 {
        return Ok([0.0; 3]);
    }
    let label = flow_map(u_bar, t, x, t0, tol)?;
    Ok(sub(flow_map(u, t0, label, t, tol)?, x))
}

/// ΔQ = Q(x + ξ) − Q̄(x).
pub fn lagrangian_change(q: &dyn Fn(Vec3) -> f64, q_bar: &dyn Fn(Vec3) -> f64, xi: Vec3, x: Vec3) -> f64 {
    q(add(x, xi)) - q_bar(x)
}

/// δQ = Q(x) − Q̄(x).
pub fn eulerian_difference(q: &dyn Fn(Vec3) -> f64, q_bar: &dyn Fn(Vec3) -> f64, x: Vec3) -> f64 {
    q(x) - q_bar(x)
}

/// ΔQ − δQ − (ξ|∇)Q at x, which is O(|ξ|²) for smooth Q.
pub fn ll1_defect(
    q: &dyn Fn(Vec3) -> f64,
    q_bar: &dyn Fn(Vec3) -> f64,
    grad_q: &dyn Fn(Vec3) -> Vec3,
    xi: Vec3,
    x: Vec3,
) -> f64 {
    let g = grad_q(x);
    lagrangian_change(q, q_bar, xi, x) - eulerian_difference(q, q_bar, x) - (xi[0] * g[0] + xi[1] * g[1] + xi[2] * g[2])
}

/// Both sides of a commutation identity and their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityResidual {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, residual: (lhs - rhs).abs() }
    }
}

/// Flows and quantities entering the commutation of Δ with D/Dt.
pub struct Formula1Data<'a> {
    pub u: &'a dyn Fn(f64, Vec3) -> Vec3,
    pub u_bar: &'a dyn Fn(f64, Vec3) -> Vec3,
    pub q: &'a dyn Fn(f64, Vec3) -> f64,
    pub q_bar: &'a dyn Fn(f64, Vec3) -> f64,
    pub t0: f64,
    /// Tolerance of the flow-map integrations.
    pub tol: f64,
}

/// Δ(DQ/Dt) − (D̄/Dt)(ΔQ) at (t, x), with every derivative a central
/// difference of step h.
pub fn check_formula1(d: &Formula1Data, t: f64, x: Vec3, h: f64) -> Result<IdentityResidual> {
    let material = |q: &dyn Fn(f64, Vec3) -> f64, vel: Vec3, t: f64, y: Vec3| {
        let dt = (q(t + h, y) - q(t - h, y)) / (2.0 * h);
        dt + (0..3).map(|k| vel[k] * (q(t, add(y, unit(k, h))) - q(t, sub(y, unit(k, h)))) / (2.0 * h)).sum::<f64>()
    };
    let xi = |t: f64, y: Vec3| lebovitz_displacement(d.u, d.u_bar, d.t0, t, y, d.tol);
    let delta_q = |t: f64, y: Vec3| -> Result<f64> {
        let e = xi(t, y)?;
        Ok((d.q)(t, add(y, e)) - (d.q_bar)(t, y))
    };
    let moved = add(x, xi(t, x)?);
    let lhs = material(d.q, (d.u)(t, moved), t, moved) - material(d.q_bar, (d.u_bar)(t, x), t, x);
    let ub = (d.u_bar)(t, x);
    let mut rhs = (delta_q(t + h, x)? - delta_q(t - h, x)?) / (2.0 * h);
    for k in 0..3 {
        rhs += ub[k] * (delta_q(t, add(x, unit(k, h)))? - delta_q(t, sub(x, unit(k, h)))?) / (2.0 * h);
    }
    Ok(IdentityResidual::new(lhs, rhs))
}

fn fd_grad(f: &dyn Fn(Vec3) -> f64, x: Vec3, h: f64) -> Vec3 {
    let mut g = [0.0; 3];
    for (k, gk) in g.iter_mut().enumerate() {
        *gk = (f(add(x, unit(k, h))) - f(sub(x, unit(k, h)))) / (2.0 * h);
    }
    g
}

/// Residual of dΔQ = (ΔdQ)J + dQ̄(J − I), J_j^k = δ_j^k + ∂ξ^k/∂x^j, per
/// component j, with central differences of step h.
pub fn check_formula2(
    xi: &dyn Fn(Vec3) -> Vec3,
    q: &dyn Fn(Vec3) -> f64,
    q_bar: &dyn Fn(Vec3) -> f64,
    x: Vec3,
    h: f64,
) -> Vec3 {
    let delta_q = |y: Vec3| q(add(y, xi(y))) - q_bar(y);
    let d_delta = fd_grad(&delta_q, x, h);
    let moved = add(x, xi(x));
    let dq_moved = fd_grad(q, moved, h);
    let dq_bar = fd_grad(q_bar, x, h);
    // jac[j][k] = ∂ξ^k/∂x^j.
    let mut jac: Mat3 = [[0.0; 3]; 3];
    for (j, row) in jac.iter_mut().enumerate() {
        let (p, m) = (xi(add(x, unit(j, h))), xi(sub(x, unit(j, h))));
        for k in 0..3 {
            row[k] = (p[k] - m[k]) / (2.0 * h);
        }
    }
    let mut res = [0.0; 3];
    for j in 0..3 {
        let mut rhs = 0.0;
        for k in 0..3 {
            let jjk = jac[j][k] + if j == k { 1.0 } else { 0.0 };
            rhs += (dq_moved[k] - dq_bar[k]) * jjk + dq_bar[k] * jac[j][k];
        }
        res[j] = (d_delta[j] - rhs).abs();
    }
    res
}

/// Δ(Q₁Q₂) against (ΔQ₁)Q̄₂ + (Q̄₁ + ΔQ₁)ΔQ₂ at x.
pub fn check_formula3(
    q1: &dyn Fn(Vec3) -> f64,
    q1_bar: &dyn Fn(Vec3) -> f64,
    q2: &dyn Fn(Vec3) -> f64,
    q2_bar: &dyn Fn(Vec3) -> f64,
    xi: Vec3,
    x: Vec3,
) -> IdentityResidual {
    let prod = |y: Vec3| q1(y) * q2(y);
    let prod_bar = |y: Vec3| q1_bar(y) * q2_bar(y);
    let lhs = lagrangian_change(&prod, &prod_bar, xi, x);
    let (d1, d2) = (lagrangian_change(q1, q1_bar, xi, x), lagrangian_change(q2, q2_bar, xi, x));
    let rhs = d1 * q2_bar(x) + (q1_bar(x) + d1) * d2;
    IdentityResidual::new(lhs, rhs)
}

/// ΔF(Q) against (∫₀¹ F′(Q̄ + θΔQ) dθ)·ΔQ at x.
pub fn check_formula4(
    f: &dyn Fn(f64) -> f64,
    df: &dyn Fn(f64) -> f64,
    q: &dyn Fn(Vec3) -> f64,
    q_bar: &dyn Fn(Vec3) -> f64,
    xi: Vec3,
    x: Vec3,
) -> Result<IdentityResidual> {
    let fq = |y: Vec3| f(q(y));
    let fq_bar = |y: Vec3| f(q_bar(y));
    let lhs = lagrangian_change(&fq, &fq_bar, xi, x);
    let (qb, dq) = (q_bar(x), lagrangian_change(q, q_bar, xi, x));
    let mean = integrate(|th| df(qb + th * dq), 0.0, 1.0, QuadOptions::new(1e-15, 1e-14))?;
    Ok(IdentityResidual::new(lhs, mean * dq))
}

/// δQ = Q − Q̄ on a shared grid.
pub fn eulerian_difference_field(q: &AxiField, q_bar: &AxiField) -> Result<AxiField> {
    q.grid.require_same(&q_bar.grid)?;
    q.with_values(q.values.iter().zip(&q_bar.values).map(|(a, b)| a - b).collect())
}

/// ΔQ(r, ζ) = Q(x + ξ) − Q̄(x) for axisymmetric fields, with Q interpolated
/// by tensor splines; displaced points outside Q's grid are an error.
pub fn lagrangian_change_field(q: &AxiField, q_bar: &AxiField, disp: &Displacement) -> Result<AxiField> {
    q_bar.grid.require_same(disp.grid())?;
    let interp = q.interpolator();
    let [c0, c1, c2] = &disp.components;
    let mut out = Vec::with_capacity(q_bar.values.len());
    for (k, [r, z]) in q_bar.grid.points().into_iter().enumerate() {
        let (rs, zs) = match disp.chart {
            DisplacementChart::Axisymmetric => (r + c0.values[k], z + c1.values[k]),
            DisplacementChart::Cartesian => {
                let w = r * (1.0 - z * z).sqrt() + c0.values[k];
                let zz = r * z + c2.values[k];
                let rr = (w * w + c1.values[k].powi(2) + zz * zz).sqrt();
                (rr, if rr > 0.0 { zz / rr } else { 0.0 })
            }
        };
        out.push(interp.eval(rs, zs)? - q_bar.values[k]);
    }
    q_bar.with_values(out)
}

/// ρ(t, x + ξ) from ρ̊ by the exact continuity integral: ρ̊/det J for a
/// Cartesian displacement, ρ̊ (r/(r + η¹))²/det 𝒥 for an axisymmetric one.
pub fn lagrangian_continuity(rho_init: &AxiField, disp: &Displacement) -> Result<AxiField> {
    rho_init.grid.require_same(disp.grid())?;
    let det = jacobian_determinant(disp)?;
    let mut out = Vec::with_capacity(det.len());
    for (k, d) in det.iter().enumerate() {
        if !(*d > 0.0) {
            let (r, z) = (rho_init.grid.radial[k / rho_init.nz()], rho_init.grid.vertical[k % rho_init.nz()]);
            return domain(format!("displacement folds the flow at (r, zeta) = ({r}, {z}): det J = {d:e}"));
        }
        out.push(rho_init.values[k] / d);
    }
    rho_init.with_values(out)
}

/// Volume ratio dV(x + ξ)/dV(x) at every node: det J for a Cartesian
/// displacement and ((r + η¹)/r)² det 𝒥 for an axisymmetric one.
pub fn jacobian_determinant(disp: &Displacement) -> Result<Vec<f64>> {
    let grid = disp.grid();
    check_open_grid(grid)?;
    let d = super::GridDiff::new(grid)?;
    let [c0, c1, c2] = &disp.components;
    let n = grid.len();
    Ok(match disp.chart {
        DisplacementChart::Axisymmetric => {
            let (e1r, e1z) = (d.d_r(&c0.values, Parity::Odd), d.d_zeta(&c0.values));
            let (e2r, e2z) = (d.d_r(&c1.values, Parity::Odd), d.d_zeta_pole(&c1.values));
            (0..n)
                .map(|k| {
                    let (r, _) = d.node(k);
                    let det = (1.0 + e1r[k]) * (1.0 + e2z[k]) - e1z[k] * e2r[k];
                    ((r + c0.values[k]) / r).powi(2) * det
                })
                .collect()
        }
        DisplacementChart::Cartesian => {
            let (aw, az, a_over) = d.axial_derivs(&c0.values);
            let (bw, bz, b_over) = d.axial_derivs(&c1.values);
            let (cw, cz) = d.cyl_grad(&c2.values);
            (0..n)
                .map(|k| {
                    let m = [
                        [1.0 + aw[k], -b_over[k], az[k]],
                        [bw[k], 1.0 + a_over[k], bz[k]],
                        [cw[k], 0.0, 1.0 + cz[k]],
                    ];
                    det3(&m)
                })
                .collect()
        }
    })
}

/// div ξ: ∂_ϖξ_ϖ + ξ_ϖ/ϖ + ∂_zξ_z, or ∂_rη¹ + 2η¹/r + ∂_ζη².
pub fn displacement_divergence(disp: &Displacement) -> Result<Vec<f64>> {
    let grid = disp.grid();
    check_open_grid(grid)?;
    let d = super::GridDiff::new(grid)?;
    let [c0, c1, c2] = &disp.components;
    Ok(match disp.chart {
        DisplacementChart::Axisymmetric => {
            let (e1r, e2z) = (d.d_r(&c0.values, Parity::Odd), d.d_zeta_pole(&c1.values));
            (0..grid.len()).map(|k| e1r[k] + 2.0 * c0.values[k] / d.node(k).0 + e2z[k]).collect()
        }
        DisplacementChart::Cartesian => {
            let (aw, _, a_over) = d.axial_derivs(&c0.values);
            let (_, cz) = d.cyl_grad(&c2.values);
            (0..grid.len()).map(|k| aw[k] + a_over[k] + cz[k]).collect()
        }
    })
}

/// Linearized continuity: Δρ ≈ Δρ(t₀) − ρ̄ div ξ.
pub fn linearized_delta_rho(disp: &Displacement, rho_bar: &AxiField, delta_rho_init: Option<&AxiField>) -> Result<AxiField> {
    rho_bar.grid.require_same(disp.grid())?;
    let div = displacement_divergence(disp)?;
    let mut out: Vec<f64> = rho_bar.values.iter().zip(&div).map(|(r, d)| -r * d).collect();
    if let Some(init) = delta_rho_init {
        init.grid.require_same(&rho_bar.grid)?;
        for (o, v) in out.iter_mut().zip(&init.values) {
            *o += v;
        }
    }
    rho_bar.with_values(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn displacement_vanishes_at_initial_time() {
        let u = |_: f64, x: Vec3| [x[1], -x[0], 0.3];
        let ub = |_: f64, _: Vec3| [0.0; 3];
        assert_eq!(lebovitz_displacement(&u, &ub, 1.0, 1.0, [0.3, 0.2, 0.1], 1e-12).unwrap(), [0.0; 3]);
        let same = lebovitz_displacement(&u, &u, 0.0, 2.0, [0.3, 0.2, 0.1], 1e-12).unwrap();
        assert!(same.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn straight_line_flow() {
        let c = [0.2, -0.1, 0.4];
        let u = move |_: f64, _: Vec3| c;
        let ub = |_: f64, _: Vec3| [0.0; 3];
        let xi = lebovitz_displacement(&u, &ub, 0.5, 2.0, [1.0, 2.0, 3.0], 1e-12).unwrap();
        for k in 0..3 {
            assert!((xi[k] - 1.5 * c[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn formula3_and_4_are_exact() {
        let q1 = |x: Vec3| x[0].sin() + x[1] * x[2];
        let q1b = |x: Vec3| x[0].cos();
        let q2 = |x: Vec3| (x[2] * 0.5).exp();
        let q2b = |x: Vec3| 1.0 + x[0] * x[1];
        let (xi, x) = ([0.1, -0.2, 0.05], [0.3, 0.7, -0.4]);
        let r3 = check_formula3(&q1, &q1b, &q2, &q2b, xi, x);
        assert!(r3.residual <= 1e-14 * r3.lhs.abs().max(1.0));
        let r4 = check_formula4(&|s: f64| s.exp(), &|s: f64| s.exp(), &q1, &q1b, xi, x).unwrap();
        assert!(r4.residual <= 1e-12 * r4.lhs.abs().max(1.0), "{r4:?}");
        let sq = check_formula4(&|s: f64| s * s, &|s: f64| 2.0 * s, &q1, &q1b, xi, x).unwrap();
        let r3sq = check_formula3(&q1, &q1b, &q1, &q1b, xi, x);
        assert!((sq.lhs - r3sq.lhs).abs() <= 1e-14 && sq.residual <= 1e-12);
    }

    #[test]
    fn formula2_polynomial_case() {
        let xi = |x: Vec3| [0.1 * x[1], 0.05 * x[0] - 0.02 * x[2], 0.03 * x[2] + 0.01];
        let q = |x: Vec3| x[0] * x[0] + 2.0 * x[1] * x[2] - x[2];
        let qb = |x: Vec3| 0.5 * x[1] * x[1] + x[0];
        let res = check_formula2(&xi, &q, &qb, [0.4, -0.3, 0.8], 1e-3);
        assert!(res.iter().all(|r| *r <= 1e-10), "{res:?}");
        let zero = |_: Vec3| [0.0; 3];
        assert!(check_formula2(&zero, &q, &qb, [0.4, -0.3, 0.8], 1e-3).iter().all(|r| *r <= 1e-10));
    }

    #[test]
    fn formula1_closed_form() {
        let u = |_: f64, _: Vec3| [0.7, 0.0, 0.0];
        let ub = |_: f64, _: Vec3| [0.0; 3];
        let q = |_: f64, x: Vec3| x[0];
        let d = Formula1Data { u: &u, u_bar: &ub, q: &q, q_bar: &q, t0: 0.0, tol: 1e-12 };
        let r = check_formula1(&d, 1.3, [0.2, 0.1, -0.5], 1e-3).unwrap();
        assert!((r.lhs - 0.7).abs() <= 1e-10 && r.residual <= 1e-10, "{r:?}");
    }
}
