//! Newton-potential kernels and potential operators on axisymmetric fields.
//!
//! For cylindrical radii ϖ, ϖ′ and vertical offset Δz = z − z′ put
//! d² = (ϖ − ϖ′)² + Δz² and c² = 4ϖϖ′. The ring kernel is
//!
//! ```text
//! K_I = (1/π) ∫₀^{π/2} da / √(d² + c² sin²a)
//! ```
//!
//! and K_II is K_I evaluated at the cylindrical coordinates of two (r, ζ)
//! points. The integrand peaks at a = 0 with width ε = d/c. When the points are
//! close (d/√(d² + c²) below the split threshold) the range [0, π/4] is mapped
//! by a = ε·sinh τ, which flattens the peak, and integrated panel by panel; the
//! rest of the range is smooth and uses plain Gauss–Legendre.

mod poisson;
mod potential;

pub use poisson::poisson_residual;
pub use potential::{
    potential, potential_at, potential_expansion, potential_expansion_at, potential_gradient, potential_gradient_at,
    PotentialOperator, PotentialOptions,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{domain, Error, Result};
use crate::numerics::gauss::GaussLegendre;

/// Azimuthal quadrature parameters for the ring kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelQuadSpec {
    /// Gauss–Legendre points over the azimuthal range.
    pub n_beta: usize,
    /// Below this value of d/√(d² + c²) the near-singular scheme is used.
    pub split_threshold: f64,
    /// Points spent on the graded range next to the singular angle.
    pub n_split: usize,
}

impl Default for KernelQuadSpec {
    fn default() -> Self {
        Self { n_beta: 32, split_threshold: 0.5, n_split: 64 }
    }
}

impl KernelQuadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_beta < 16 {
            return domain("n_beta must be at least 16");
        }
        if self.n_split < self.n_beta {
            return domain("n_split must be at least n_beta");
        }
        if !(self.split_threshold > 0.0 && self.split_threshold < 1.0) {
            return domain("split_threshold must lie in (0, 1)");
        }
        Ok(())
    }

    /// Precomputes the quadrature rules.
    pub fn prepare(&self) -> Result<KernelQuad> {
        self.validate()?;
        let full = GaussLegendre::new(self.n_beta);
        let outer = GaussLegendre::new(self.n_beta / 2);
        Ok(KernelQuad {
            spec: *self,
            plain: full.on_interval(0.0, FRAC_PI_2).collect(),
            outer: outer.on_interval(FRAC_PI_4, FRAC_PI_2).collect(),
            panel: GaussLegendre::new((self.n_split / 4).max(12)),
        })
    }
}

/// Prepared kernel quadrature; cheap to share between threads.
#[derive(Debug, Clone)]
pub struct KernelQuad {
    spec: KernelQuadSpec,
    plain: Vec<(f64, f64)>,
    outer: Vec<(f64, f64)>,
    panel: GaussLegendre,
}

/// Largest τ-panel length for the graded rule.
const PANEL_WIDTH: f64 = 3.0;

impl Default for KernelQuad {
    fn default() -> Self {
        KernelQuadSpec::default().prepare().expect("default spec is valid")
    }
}

impl KernelQuad {
    pub fn spec(&self) -> &KernelQuadSpec {
        &self.spec
    }

    /// Ring integrals at evaluation point (ϖ, z) for source (ϖ′, z − Δz):
    /// `[K, ∂K/∂ϖ, ∂K/∂z]`, derivatives only when `derivs` is set.
    pub fn ring(&self, w: f64, wp: f64, dz: f64, derivs: bool) -> Result<[f64; 3]> {
        let d2 = (w - wp) * (w - wp) + dz * dz;
        let c2 = 4.0 * w * wp;
        if d2 == 0.0 {
            return Err(Error::Singularity(format!(
                "kernel evaluated at coincident points (w={w}, w'={wp}, dz={dz})"
            )));
        }
        if !(d2.is_finite() && c2.is_finite()) || w < 0.0 || wp < 0.0 {
            return domain(format!("invalid kernel arguments (w={w}, w'={wp}, dz={dz})"));
        }
        let mut acc = [0.0; 3];
        let mut add = |a: f64, wt: f64| {
            let s = a.sin();
            let s2 = s * s;
            let inv = (d2 + c2 * s2).sqrt().recip();
            acc[0] += wt * inv;
            if derivs {
                let inv3 = inv * inv * inv;
                acc[1] -= wt * ((w - wp) + 2.0 * wp * s2) * inv3;
                acc[2] -= wt * dz * inv3;
            }
        };
        if (d2 / (d2 + c2)).sqrt() >= self.spec.split_threshold {
            for &(a, wt) in &self.plain {
                add(a, wt);
            }
        } else {
            let eps = (d2 / c2).sqrt();
            let tmax = (FRAC_PI_4 / eps).asinh();
            let panels = (tmax / PANEL_WIDTH).ceil().max(1.0);
            let h = tmax / panels;
            for k in 0..panels as usize {
                let t0 = k as f64 * h;
                for (x, wt) in self.panel.nodes.iter().zip(&self.panel.weights) {
                    let tau = t0 + 0.5 * h * (x + 1.0);
                    add(eps * tau.sinh(), wt * 0.5 * h * eps * tau.cosh());
                }
            }
            for &(a, wt) in &self.outer {
                add(a, wt);
            }
        }
        Ok(acc.map(|v| v / PI))
    }

    /// K_II and its derivatives with respect to the evaluation point:
    /// `[K, ∂K/∂r, ∂K/∂ζ]`.
    pub fn kii_grad(&self, r: f64, zeta: f64, rp: f64, zetap: f64) -> Result<[f64; 3]> {
        check_rzeta(r, zeta)?;
        check_rzeta(rp, zetap)?;
        let s = (1.0 - zeta * zeta).max(0.0).sqrt();
        let sp = (1.0 - zetap * zetap).max(0.0).sqrt();
        let [k, kw, kz] = self.ring(r * s, rp * sp, r * zeta - rp * zetap, true)?;
        let dr = s * kw + zeta * kz;
        let dzeta = if s > 0.0 { -r * zeta / s * kw + r * kz } else { r * kz };
        Ok([k, dr, dzeta])
    }
}

fn check_rzeta(r: f64, zeta: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) || !(-1.0..=1.0).contains(&zeta) {
        return domain(format!("invalid (r, zeta) point ({r}, {zeta})"));
    }
    Ok(())
}

/// Ring kernel K_I(ϖ, ϖ′, z − z′).
pub fn kernel_ki(w: f64, wp: f64, dz: f64, quad: &KernelQuad) -> Result<f64> {
    quad.ring(w, wp, dz, false).map(|v| v[0])
}

/// Kernel K_II(r, ζ, r′, ζ′) = (1/4π) ∫₀^{2π} dβ / |x − x′|.
pub fn kernel_kii(r: f64, zeta: f64, rp: f64, zetap: f64, quad: &KernelQuad) -> Result<f64> {
    check_rzeta(r, zeta)?;
    check_rzeta(rp, zetap)?;
    if r == rp && (zeta == zetap || r == 0.0) {
        return Err(Error::Singularity(format!("K_II at coincident points r={r}, zeta={zeta}")));
    }
    let s = (1.0 - zeta * zeta).max(0.0).sqrt();
    let sp = (1.0 - zetap * zetap).max(0.0).sqrt();
    kernel_ki(r * s, rp * sp, r * zeta - rp * zetap, quad)
}

/// Spherical kernel K_III(r, r′) = min(1/r, 1/r′); r = 0 gives 1/r′.
pub fn kernel_kiii(r: f64, rp: f64) -> Result<f64> {
    legendre_f(0, r, rp)
}

/// Legendre expansion coefficient f_n(r, r′): (1/r)(r′/r)ⁿ for r′ ≤ r and
/// (1/r′)(r/r′)ⁿ otherwise.
pub fn legendre_f(n: usize, r: f64, rp: f64) -> Result<f64> {
    if r < 0.0 || rp < 0.0 || r.is_nan() || rp.is_nan() {
        return domain("radii must be non-negative");
    }
    if r == 0.0 && rp == 0.0 {
        return domain("f_n undefined at r = r' = 0");
    }
    let (lo, hi) = if rp <= r { (rp, r) } else { (r, rp) };
    Ok((lo / hi).powi(n as i32) / hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::{integrate, integrate_with_breaks, QuadOptions};
    use proptest::prelude::*;

    /// K_I through the arithmetic–geometric mean: K_I = 1/(2·AGM(d, √(d² + c²))).
    fn ki_agm(w: f64, wp: f64, dz: f64) -> f64 {
        let d = ((w - wp).powi(2) + dz * dz).sqrt();
        let mut a = (d * d + 4.0 * w * wp).sqrt();
        let mut b = d;
        for _ in 0..60 {
            let (an, bn) = (0.5 * (a + b), (a * b).sqrt());
            a = an;
            b = bn;
        }
        0.5 / a
    }

    #[test]
    fn degenerate_values() {
        let q = KernelQuad::default();
        assert!((kernel_ki(3.0, 0.0, 4.0, &q).unwrap() - 0.1).abs() < 1e-15);
        assert!((kernel_ki(0.0, 0.0, 1.0, &q).unwrap() - 0.5).abs() < 1e-15);
        assert!((kernel_kii(2.0, 0.3, 0.0, -0.7, &q).unwrap() - 0.25).abs() < 1e-15);
        assert!((kernel_kii(1.0, 1.0, 1.0, -1.0, &q).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(kernel_ki(1.0, 1.0, 0.0, &q), Err(Error::Singularity(_))));
        assert!(matches!(kernel_kii(1.0, 0.2, 1.0, 0.2, &q), Err(Error::Singularity(_))));
    }

    #[test]
    fn ki_against_adaptive_oracle() {
        let q = KernelQuad::default();
        let opts = QuadOptions::new(1e-15, 1e-13);
        let oracle = integrate(
            |a| (1.0 + 8.0 * a.sin().powi(2)).sqrt().recip() / PI,
            0.0,
            FRAC_PI_2,
            opts,
        )
        .unwrap();
        let v = kernel_ki(1.0, 2.0, 0.0, &q).unwrap();
        assert!(((v - oracle) / oracle).abs() < 1e-12, "{v} vs {oracle}");
        assert!(((v - ki_agm(1.0, 2.0, 0.0)) / v).abs() < 1e-12);
    }

    #[test]
    fn ki_accurate_near_diagonal() {
        let q = KernelQuad::default();
        for &(w, wp, dz) in &[
            (1.0, 1.0 + 1e-9, 0.0),
            (1.0, 1.0, 1e-6),
            (0.5, 0.52, 0.01),
            (2.0, 1.9, -0.05),
            (1.0, 1.3, 0.2),
            (1e-3, 2e-3, 1e-4),
        ] {
            let v = kernel_ki(w, wp, dz, &q).unwrap();
            let e = ki_agm(w, wp, dz);
            assert!(((v - e) / e).abs() < 1e-10, "({w},{wp},{dz}): {v} vs {e}");
        }
    }

    #[test]
    fn derivative_kernels_match_differences() {
        let q = KernelQuad::default();
        for &(r, z, rp, zp) in &[(1.0, 0.3, 0.7, -0.2), (0.8, 0.1, 0.82, 0.12), (0.5, 0.9, 1.2, 0.95)] {
            let [_, dr, dz] = q.kii_grad(r, z, rp, zp).unwrap();
            let h = 1e-5;
            let k = |a: f64, b: f64| ki_agm(a * (1.0 - b * b).sqrt(), rp * (1.0 - zp * zp).sqrt(), a * b - rp * zp);
            let fr = (k(r + h, z) - k(r - h, z)) / (2.0 * h);
            let fz = (k(r, z + h) - k(r, z - h)) / (2.0 * h);
            assert!((dr - fr).abs() < 1e-6 * fr.abs().max(1.0), "{dr} vs {fr}");
            assert!((dz - fz).abs() < 1e-6 * fz.abs().max(1.0), "{dz} vs {fz}");
        }
    }

    #[test]
    fn kiii_and_legendre_f() {
        assert_eq!(kernel_kiii(2.0, 1.0).unwrap(), 0.5);
        assert_eq!(kernel_kiii(1.0, 2.0).unwrap(), 0.5);
        assert!((kernel_kiii(0.0, 3.0).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!(kernel_kiii(0.0, 0.0).is_err());
        assert_eq!(legendre_f(0, 2.0, 1.0).unwrap(), 0.5);
        assert_eq!(legendre_f(2, 1.0, 2.0).unwrap(), 0.125);
        assert!(legendre_f(3, 0.0, 0.0).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(KernelQuadSpec { n_beta: 8, ..Default::default() }.prepare().is_err());
        assert!(KernelQuadSpec { n_split: 20, ..Default::default() }.prepare().is_err());
        assert!(KernelQuadSpec { split_threshold: 1.5, ..Default::default() }.prepare().is_err());
    }

    #[test]
    fn spherical_reduction_against_adaptive_oracle() {
        let q = KernelQuad::default();
        let opts = QuadOptions::new(1e-13, 1e-12);
        for &(r, z, rp) in &[(1.0, 0.3, 0.6), (0.4, -0.8, 1.1), (2.0, 0.0, 1.5)] {
            let v = integrate_with_breaks(|t| kernel_kii(r, z, rp, t, &q).unwrap(), -1.0, 1.0, &[z], opts).unwrap();
            assert!((v - kernel_kiii(r, rp).unwrap()).abs() < 1e-9, "r={r} rp={rp}: {v}");
        }
    }

    proptest! {
        #[test]
        fn legendre_f_continuous(n in 0usize..12, r in 0.01f64..10.0) {
            let below = legendre_f(n, r, r * (1.0 - 1e-12)).unwrap();
            let above = legendre_f(n, r, r * (1.0 + 1e-12)).unwrap();
            prop_assert!((below - 1.0 / r).abs() < 1e-10 / r);
            prop_assert!((above - 1.0 / r).abs() < 1e-10 / r);
        }

        #[test]
        fn kii_symmetries(r in 0.05f64..3.0, z in -1.0f64..1.0, rp in 0.05f64..3.0, zp in -1.0f64..1.0) {
            prop_assume!((r - rp).abs() + (z - zp).abs() > 1e-3);
            let q = KernelQuad::default();
            let k = kernel_kii(r, z, rp, zp, &q).unwrap();
            let swapped = kernel_kii(rp, zp, r, z, &q).unwrap();
            let mirrored = kernel_kii(r, -z, rp, -zp, &q).unwrap();
            prop_assert!((k - swapped).abs() <= 1e-12 * k);
            prop_assert!((k - mirrored).abs() <= 1e-12 * k);
        }
    }
}
