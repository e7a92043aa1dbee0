//! Cartesian, cylindrical (ϖ, φ, z) and (r, ζ, φ) charts, with ζ = cos θ.
//!
//! Velocity component maps follow the axisymmetric forms
//! v = (V/ϖ)x¹ − Ωx², (V/ϖ)x² + Ωx¹, W in the cylindrical chart and
//! v = (v/r − ζw/(1−ζ²))x¹ − Ωx², …, ζv + rw in the (r, ζ) chart.
//! Both are singular on the axis, and the maps report that instead of
//! extending across it.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartPoint {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CylPoint {
    pub w: f64,
    pub phi: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RZetaPoint {
    pub r: f64,
    pub zeta: f64,
    pub phi: f64,
}

/// Cylindrical components (V, Ω, W) = (dϖ/dt, dφ/dt, dz/dt).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct CylVelocity {
    pub V: f64,
    pub Omega: f64,
    pub W: f64,
}

/// (r, ζ) components (v, w, Ω) = (dr/dt, dζ/dt, dφ/dt).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct RZetaVelocity {
    pub v: f64,
    pub w: f64,
    pub Omega: f64,
}

impl CartPoint {
    pub fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { x1: a[0], x2: a[1], x3: a[2] }
    }

    pub fn norm(self) -> f64 {
        (self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3).sqrt()
    }
}

impl CylPoint {
    pub fn new(w: f64, phi: f64, z: f64) -> Self {
        Self { w, phi, z }
    }
}

impl RZetaPoint {
    pub fn new(r: f64, zeta: f64, phi: f64) -> Self {
        Self { r, zeta, phi }
    }

    /// Cylindrical radius ϖ = r√(1−ζ²).
    pub fn cyl_radius(&self) -> f64 {
        self.r * (1.0 - self.zeta * self.zeta).max(0.0).sqrt()
    }
}

fn normalize_azimuth(phi: f64) -> f64 {
    let p = phi.rem_euclid(TAU);
    if p >= TAU {
        0.0
    } else {
        p
    }
}

pub fn cart_from_cyl(p: CylPoint) -> CartPoint {
    let (s, c) = p.phi.sin_cos();
    CartPoint { x1: p.w * c, x2: p.w * s, x3: p.z }
}

/// Inverse map; φ ∈ [0, 2π) and φ = 0 on the axis.
pub fn cyl_from_cart(p: CartPoint) -> CylPoint {
    let w = p.x1.hypot(p.x2);
    let phi = if w == 0.0 { 0.0 } else { normalize_azimuth(p.x2.atan2(p.x1)) };
    CylPoint { w, phi, z: p.x3 }
}

pub fn cart_from_rzeta(p: RZetaPoint) -> CartPoint {
    let w = p.cyl_radius();
    let (s, c) = p.phi.sin_cos();
    CartPoint { x1: w * c, x2: w * s, x3: p.r * p.zeta }
}

/// Inverse map; ζ = 0 at the origin and φ = 0 on the axis.
pub fn rzeta_from_cart(p: CartPoint) -> RZetaPoint {
    let r = p.norm();
    if r == 0.0 {
        return RZetaPoint { r: 0.0, zeta: 0.0, phi: 0.0 };
    }
    let w = p.x1.hypot(p.x2);
    let zeta = (p.x3 / r).clamp(-1.0, 1.0);
    let phi = if w == 0.0 { 0.0 } else { normalize_azimuth(p.x2.atan2(p.x1)) };
    RZetaPoint { r, zeta, phi }
}

pub fn cyl_from_rzeta(p: RZetaPoint) -> CylPoint {
    CylPoint { w: p.cyl_radius(), phi: p.phi, z: p.r * p.zeta }
}

pub fn rzeta_from_cyl(p: CylPoint) -> RZetaPoint {
    let r = p.w.hypot(p.z);
    let zeta = if r == 0.0 { 0.0 } else { (p.z / r).clamp(-1.0, 1.0) };
    RZetaPoint { r, zeta, phi: p.phi }
}

pub fn velocity_cart_from_cyl(vel: CylVelocity, p: CylPoint) -> Result<[f64; 3]> {
    if !(p.w > 0.0) {
        return Err(Error::Singularity("cylindrical velocity components are singular on the axis (w = 0)".into()));
    }
    let x = cart_from_cyl(p);
    let radial = vel.V / p.w;
    Ok([radial * x.x1 - vel.Omega * x.x2, radial * x.x2 + vel.Omega * x.x1, vel.W])
}

fn check_rzeta(r: f64, zeta: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::Singularity("(r, zeta) velocity components are singular at r = 0".into()));
    }
    if !(zeta.abs() < 1.0) {
        return Err(Error::Singularity(format!("(r, zeta) velocity components are singular at |zeta| = 1 (zeta = {zeta})")));
    }
    Ok(())
}

pub fn velocity_cart_from_rzeta(vel: RZetaVelocity, p: RZetaPoint) -> Result<[f64; 3]> {
    check_rzeta(p.r, p.zeta)?;
    let x = cart_from_rzeta(p);
    let radial = vel.v / p.r - p.zeta * vel.w / (1.0 - p.zeta * p.zeta);
    Ok([
        radial * x.x1 - vel.Omega * x.x2,
        radial * x.x2 + vel.Omega * x.x1,
        p.zeta * vel.v + p.r * vel.w,
    ])
}

/// |v|² = v² + r²w²/(1−ζ²) + r²(1−ζ²)Ω².
pub fn speed_squared(vel: RZetaVelocity, r: f64, zeta: f64) -> Result<f64> {
    if !(zeta.abs() < 1.0) {
        return Err(Error::Singularity(format!("speed_squared is singular at |zeta| = 1 (zeta = {zeta})")));
    }
    let s = 1.0 - zeta * zeta;
    Ok(vel.v * vel.v + r * r * vel.w * vel.w / s + r * r * s * vel.Omega * vel.Omega)
}

/// (V, Ω, W) describing the same motion as (v, w, Ω); composed through the
/// Cartesian components, which gives V = ϖ(v/r − ζw/(1−ζ²)), W = ζv + rw.
pub fn cyl_components_from_rzeta(vel: RZetaVelocity, p: RZetaPoint) -> Result<CylVelocity> {
    check_rzeta(p.r, p.zeta)?;
    let s = 1.0 - p.zeta * p.zeta;
    let w = p.r * s.sqrt();
    let radial = vel.v / p.r - p.zeta * vel.w / s;
    Ok(CylVelocity { V: w * radial, Omega: vel.Omega, W: p.zeta * vel.v + p.r * vel.w })
}

/// Inverse of [`cyl_components_from_rzeta`]: v = (ϖV + zW)/r, w = ((1−ζ²)W − ζϖV/r)/r.
pub fn rzeta_components_from_cyl(vel: CylVelocity, p: CylPoint) -> Result<RZetaVelocity> {
    let q = rzeta_from_cyl(p);
    check_rzeta(q.r, q.zeta)?;
    let r = q.r;
    let v = (p.w * vel.V + p.z * vel.W) / r;
    let w = (p.w * p.w * vel.W - p.z * p.w * vel.V) / (r * r * r);
    Ok(RZetaVelocity { v, w, Omega: vel.Omega })
}

/// Mirror image under z → −z.
pub fn reflect_cyl_point(p: CylPoint) -> CylPoint {
    CylPoint { z: -p.z, ..p }
}

pub fn reflect_rzeta_point(p: RZetaPoint) -> RZetaPoint {
    RZetaPoint { zeta: -p.zeta, ..p }
}

/// Velocity of the mirrored flow at the mirrored point: V, Ω even, W odd.
pub fn reflect_cyl_velocity(vel: CylVelocity) -> CylVelocity {
    CylVelocity { W: -vel.W, ..vel }
}

/// (r, ζ) counterpart of [`reflect_cyl_velocity`]: v, Ω even, w odd.
pub fn reflect_rzeta_velocity(vel: RZetaVelocity) -> RZetaVelocity {
    RZetaVelocity { w: -vel.w, ..vel }
}

/// Reflects a field sampled on nodes symmetric under ζ → −ζ (values row-major
/// with `nz` entries per radial node). `odd` flips the sign for w/W-like fields.
pub fn reflect_field(values: &[f64], nz: usize, odd: bool) -> Vec<f64> {
    let sign = if odd { -1.0 } else { 1.0 };
    let mut out = vec![0.0; values.len()];
    for (row_in, row_out) in values.chunks(nz).zip(out.chunks_mut(nz)) {
        for j in 0..nz {
            row_out[j] = sign * row_in[nz - 1 - j];
        }
    }
    out
}
