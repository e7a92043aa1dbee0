//! Frame rotating about the x³-axis with constant angular velocity Ω̄:
//! coordinate and velocity transforms, Coriolis and centrifugal terms, and
//! checks of the identities relating the two frames.
//!
//! Conventions: x are inertial coordinates, y rotating ones, x = R(t) y with
//! R(t) the rotation by Ω̄t about axis 3.

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn transpose(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
    }
    out
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Ω̄ × (Ω̄ × x) for an arbitrary rotation vector.
pub fn centrifugal_general(omega: Vec3, x: Vec3) -> Vec3 {
    cross(omega, cross(omega, x))
}

/// |Ω̄ × x|² and its analytic gradient for an arbitrary rotation vector.
pub fn rotation_speed_squared(omega: Vec3, x: Vec3) -> (f64, Vec3) {
    let c = cross(omega, x);
    // ∇|Ω̄×x|² = 2(|Ω̄|²x − (Ω̄·x)Ω̄).
    let o2 = dot(omega, omega);
    let ox = dot(omega, x);
    (dot(c, c), [2.0 * (o2 * x[0] - ox * omega[0]), 2.0 * (o2 * x[1] - ox * omega[1]), 2.0 * (o2 * x[2] - ox * omega[2])])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingFrame {
    pub omega_bar: f64,
}

impl RotatingFrame {
    pub fn new(omega_bar: f64) -> Result<Self> {
        if !omega_bar.is_finite() {
            return Err(Error::Domain(format!("angular velocity must be finite, got {omega_bar}")));
        }
        Ok(Self { omega_bar })
    }

    pub fn omega_vector(&self) -> Vec3 {
        [0.0, 0.0, self.omega_bar]
    }

    /// R(t) with x = R(t) y; also the Jacobian ∂x/∂y.
    pub fn rotation(&self, t: f64) -> Mat3 {
        let (s, c) = (self.omega_bar * t).sin_cos();
        [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    }

    /// dR/dt.
    pub fn rotation_rate(&self, t: f64) -> Mat3 {
        let (s, c) = (self.omega_bar * t).sin_cos();
        let o = self.omega_bar;
        [[-o * s, -o * c, 0.0], [o * c, -o * s, 0.0], [0.0, 0.0, 0.0]]
    }

    pub fn to_rotating(&self, t: f64, x: Vec3) -> Vec3 {
        let (s, c) = (self.omega_bar * t).sin_cos();
        [c * x[0] + s * x[1], -s * x[0] + c * x[1], x[2]]
    }

    pub fn to_inertial(&self, t: f64, y: Vec3) -> Vec3 {
        let (s, c) = (self.omega_bar * t).sin_cos();
        [c * y[0] - s * y[1], s * y[0] + c * y[1], y[2]]
    }

    /// Inertial velocity v = R(t)u + Ω̄ × x of a rotating-frame velocity u at y.
    pub fn velocity_to_inertial(&self, t: f64, u: Vec3, y: Vec3) -> Vec3 {
        let x = self.to_inertial(t, y);
        let (s, c) = (self.omega_bar * t).sin_cos();
        let o = self.omega_bar;
        [c * u[0] - s * u[1] - o * x[1], s * u[0] + c * u[1] + o * x[0], u[2]]
    }

    /// Inverse of [`Self::velocity_to_inertial`].
    pub fn velocity_to_rotating(&self, t: f64, v: Vec3, x: Vec3) -> Vec3 {
        let w = cross(self.omega_vector(), x);
        self.to_rotating(t, [v[0] - w[0], v[1] - w[1], v[2] - w[2]])
    }

    /// ∂v/∂x from ∂u/∂y: R (∂u/∂y) Rᵀ + [Ω̄×].
    pub fn velocity_jacobian_to_inertial(&self, t: f64, du_dy: &Mat3) -> Mat3 {
        let r = self.rotation(t);
        let mut m = mat_mul(&mat_mul(&r, du_dy), &transpose(&r));
        m[0][1] -= self.omega_bar;
        m[1][0] += self.omega_bar;
        m
    }

    pub fn coriolis(&self, u: Vec3) -> Vec3 {
        let c = cross(self.omega_vector(), u);
        [2.0 * c[0], 2.0 * c[1], 2.0 * c[2]]
    }

    /// Ω̄ × (Ω̄ × x) = (−Ω̄²x¹, −Ω̄²x², 0).
    pub fn centrifugal(&self, x: Vec3) -> Vec3 {
        let o2 = self.omega_bar * self.omega_bar;
        [-o2 * x[0], -o2 * x[1], 0.0]
    }

    /// −½|Ω̄ × x|².
    pub fn centrifugal_potential(&self, x: Vec3) -> f64 {
        -0.5 * self.omega_bar * self.omega_bar * (x[0] * x[0] + x[1] * x[1])
    }
}

/// Pointwise ρ[Du/Dt + 2Ω̄×u + Ω̄×(Ω̄×x)] + ∇P + ρ∇Φ at rotating-frame points.
pub fn rotating_momentum_residual(
    frame: &RotatingFrame,
    points: &[Vec3],
    rho: &[f64],
    u: &[Vec3],
    du_dt: &[Vec3],
    grad_p: &[Vec3],
    grad_phi: &[Vec3],
) -> Result<Vec<Vec3>> {
    let n = points.len();
    if [rho.len(), u.len(), du_dt.len(), grad_p.len(), grad_phi.len()].iter().any(|&l| l != n) {
        return Err(Error::GridMismatch("momentum residual inputs differ in length".into()));
    }
    Ok((0..n)
        .map(|k| {
            let cor = frame.coriolis(u[k]);
            let cen = frame.centrifugal(points[k]);
            let mut out = [0.0; 3];
            for i in 0..3 {
                out[i] = rho[k] * (du_dt[k][i] + cor[i] + cen[i]) + grad_p[k][i] + rho[k] * grad_phi[k][i];
            }
            out
        })
        .collect())
}

/// Rotating-frame velocity field sampled with its Jacobian ∂u/∂y.
pub trait RotatingVelocity {
    fn eval(&self, t: f64, y: Vec3) -> (Vec3, Mat3);
}

impl<F: Fn(f64, Vec3) -> (Vec3, Mat3)> RotatingVelocity for F {
    fn eval(&self, t: f64, y: Vec3) -> (Vec3, Mat3) {
        self(t, y)
    }
}

/// |∇_x·v − ∇_y·u| at (t, x) with the analytic Jacobian transform.
pub fn divergence_gap_analytic(frame: &RotatingFrame, field: &impl RotatingVelocity, t: f64, x: Vec3) -> f64 {
    let y = frame.to_rotating(t, x);
    let (_, du) = field.eval(t, y);
    let dv = frame.velocity_jacobian_to_inertial(t, &du);
    let div_v = dv[0][0] + dv[1][1] + dv[2][2];
    let div_u = du[0][0] + du[1][1] + du[2][2];
    (div_v - div_u).abs()
}

/// Same gap with ∇_x·v from central differences of the composed inertial
/// velocity x ↦ v(t, x) at step h.
pub fn divergence_gap_fd(frame: &RotatingFrame, field: &impl RotatingVelocity, t: f64, x: Vec3, h: f64) -> f64 {
    let v = |p: Vec3| {
        let y = frame.to_rotating(t, p);
        frame.velocity_to_inertial(t, field.eval(t, y).0, y)
    };
    let mut div_v = 0.0;
    for j in 0..3 {
        let mut a = x;
        let mut b = x;
        a[j] += h;
        b[j] -= h;
        div_v += (v(a)[j] - v(b)[j]) / (2.0 * h);
    }
    let (_, du) = field.eval(t, frame.to_rotating(t, x));
    (div_v - (du[0][0] + du[1][1] + du[2][2])).abs()
}

/// Max componentwise |Ω̄×(Ω̄×x) + ½∇|Ω̄×x|²| with the gradient by central
/// differences of step h.
pub fn centrifugal_gradient_gap(omega: Vec3, x: Vec3, h: f64) -> f64 {
    let c = centrifugal_general(omega, x);
    let mut worst = 0.0f64;
    for j in 0..3 {
        let mut a = x;
        let mut b = x;
        a[j] += h;
        b[j] -= h;
        let g = (rotation_speed_squared(omega, a).0 - rotation_speed_squared(omega, b).0) / (2.0 * h);
        worst = worst.max((c[j] + 0.5 * g).abs());
    }
    worst
}

/// Residual of dX/dt = R(dY/dt) + Ω̄ × X for X = R(t)Y(t), with dX/dt from the
/// product rule on the analytic R and Y.
pub fn frame_derivative_gap(frame: &RotatingFrame, t: f64, y: Vec3, dy: Vec3) -> f64 {
    let r = frame.rotation(t);
    let x = mat_vec(&r, y);
    let dr = mat_vec(&frame.rotation_rate(t), y);
    let ry = mat_vec(&r, dy);
    let w = cross(frame.omega_vector(), x);
    (0..3).map(|i| ((dr[i] + ry[i]) - (ry[i] + w[i])).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() <= tol)
    }

    /// u = (y² − y₁y₃, t·y₁ + y₂², y₁y₂ − 2y₃), polynomial with exact Jacobian.
    fn poly_field(t: f64, y: Vec3) -> (Vec3, Mat3) {
        let u = [y[1] * y[1] - y[0] * y[2], t * y[0] + y[1] * y[1], y[0] * y[1] - 2.0 * y[2]];
        let du = [[-y[2], 2.0 * y[1], -y[0]], [t, 2.0 * y[1], 0.0], [y[1], y[0], -2.0]];
        (u, du)
    }

    #[test]
    fn transform_examples() {
        let f = RotatingFrame::new(1.0).unwrap();
        assert_eq!(f.to_rotating(0.0, [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0]);
        assert!(close(f.to_rotating(PI / 2.0, [1.0, 0.0, 0.0]), [0.0, -1.0, 0.0], 1e-15));
        let f = RotatingFrame::new(0.7).unwrap();
        assert!(close(f.velocity_to_inertial(0.0, [0.0; 3], [1.0, 0.0, 0.0]), [0.0, 0.7, 0.0], 1e-15));
        let u = [0.3, -1.0, 2.0];
        let y = [1.0, 2.0, -0.5];
        let v = f.velocity_to_inertial(0.0, u, y);
        let w = cross(f.omega_vector(), y);
        assert!(close(v, [u[0] + w[0], u[1] + w[1], u[2] + w[2]], 1e-15));
        assert!(close(f.velocity_to_rotating(1.3, f.velocity_to_inertial(1.3, u, y), f.to_inertial(1.3, y)), u, 1e-14));
    }

    #[test]
    fn cross_product_terms() {
        let f = RotatingFrame::new(2.0).unwrap();
        assert_eq!(f.coriolis([0.0, 0.0, 5.0]), [0.0; 3]);
        assert_eq!(f.centrifugal([1.0, 0.0, 0.0]), [-4.0, 0.0, 0.0]);
        assert_eq!(f.centrifugal_potential([0.0, 0.0, 3.0]), 0.0);
        assert_eq!(RotatingFrame::new(1.0).unwrap().centrifugal_potential([3.0, 4.0, 0.0]), -12.5);
        assert!(RotatingFrame::new(f64::NAN).is_err());
    }

    #[test]
    fn momentum_residual_cases() {
        let f = RotatingFrame::new(0.5).unwrap();
        let pts = [[1.0, 2.0, 0.5], [0.0, -1.0, 1.0]];
        let z = [[0.0; 3]; 2];
        let res = rotating_momentum_residual(&f, &pts, &[0.0, 0.0], &z, &z, &z, &z).unwrap();
        assert_eq!(res, vec![[0.0; 3]; 2]);
        // Manufactured: choose every term, add a forcing through ∇P and recover it.
        let rho = [1.5, 0.4];
        let u = [[0.1, 0.2, -0.3], [1.0, -1.0, 0.5]];
        let dudt = [[0.3, 0.0, 1.0], [-0.2, 0.4, 0.1]];
        let gphi = [[0.5, -0.1, 0.2], [0.0, 0.3, -0.6]];
        let forcing = [[1.0, -2.0, 0.5], [0.25, 0.125, -1.0]];
        let mut gp = [[0.0; 3]; 2];
        for k in 0..2 {
            let c = f.coriolis(u[k]);
            let e = f.centrifugal(pts[k]);
            for i in 0..3 {
                gp[k][i] = forcing[k][i] - rho[k] * (dudt[k][i] + c[i] + e[i] + gphi[k][i]);
            }
        }
        let res = rotating_momentum_residual(&f, &pts, &rho, &u, &dudt, &gp, &gphi).unwrap();
        for k in 0..2 {
            assert!(close(res[k], forcing[k], 1e-14));
        }
        assert!(rotating_momentum_residual(&f, &pts, &rho[..1], &u, &dudt, &gp, &gphi).is_err());
    }

    #[test]
    fn divergence_invariance_polynomial() {
        let f = RotatingFrame::new(1.7).unwrap();
        for (t, x) in [(0.0, [0.3, -0.2, 1.0]), (0.8, [1.0, 2.0, -1.0]), (-2.5, [-0.7, 0.1, 0.4])] {
            assert!(divergence_gap_analytic(&f, &poly_field, t, x) <= 1e-12);
            assert!(divergence_gap_fd(&f, &poly_field, t, x, 1e-4) <= 1e-6);
        }
    }

    proptest! {
        #[test]
        fn norm_and_round_trip(om in -3.0..3.0f64, t in -10.0..10.0f64, x in prop::array::uniform3(-5.0..5.0f64)) {
            let f = RotatingFrame::new(om).unwrap();
            let y = f.to_rotating(t, x);
            let nx = dot(x, x).sqrt();
            prop_assert!((dot(y, y).sqrt() - nx).abs() <= 1e-14 * nx.max(1.0));
            prop_assert!(close(f.to_inertial(t, y), x, 1e-14 * nx.max(1.0)));
            prop_assert!((det3(&f.rotation(t)) - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn coriolis_is_orthogonal(om in -3.0..3.0f64, u in prop::array::uniform3(-5.0..5.0f64)) {
            let f = RotatingFrame::new(om).unwrap();
            prop_assert!(dot(f.coriolis(u), u).abs() <= 1e-12);
        }

        #[test]
        fn centrifugal_gradient_identity(o in prop::array::uniform3(-2.0..2.0f64), x in prop::array::uniform3(-3.0..3.0f64)) {
            prop_assert!(centrifugal_gradient_gap(o, x, 1e-4) <= 1e-8);
            let (_, g) = rotation_speed_squared(o, x);
            let c = centrifugal_general(o, x);
            prop_assert!(close(c, [-0.5 * g[0], -0.5 * g[1], -0.5 * g[2]], 1e-12));
        }

        #[test]
        fn frame_derivative_formula(om in -3.0..3.0f64, t in -5.0..5.0f64, y in prop::array::uniform3(-3.0..3.0f64), dy in prop::array::uniform3(-3.0..3.0f64)) {
            let f = RotatingFrame::new(om).unwrap();
            prop_assert!(frame_derivative_gap(&f, t, y, dy) <= 1e-10);
        }
    }
}
