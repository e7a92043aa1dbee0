//! Barotropic pressure law P = A ρ^γ (1 + Λ(A ρ^{γ−1})) with its enthalpy
//! u = ∫ dP/ρ and pressure potential Ψ = ∫ u dρ.
//!
//! All state functions vanish at ρ = 0, and density recovered from enthalpy is
//! truncated to vacuum for u ≤ 0.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::quad::{integrate, QuadOptions};
use crate::numerics::roots::newton_bracketed;

/// Correction Λ(s) with Λ(0) = 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Lambda {
    #[default]
    None,
    /// Λ(s) = Σ_k c_k s^k for k = 1, 2, ...; `coeffs[0]` multiplies s.
    Polynomial(Vec<f64>),
}

impl Lambda {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            Lambda::None => 0.0,
            Lambda::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| (acc + ck) * s),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            Lambda::None => 0.0,
            Lambda::Polynomial(c) => {
                let mut acc = 0.0;
                for (k, &ck) in c.iter().enumerate().rev() {
                    acc = acc * s + (k + 1) as f64 * ck;
                }
                acc
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Lambda::None => true,
            Lambda::Polynomial(c) => c.iter().all(|&v| v == 0.0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum LambdaRepr {
    Name(String),
    Coeffs(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GasLawRepr {
    #[serde(rename = "A")]
    a: f64,
    gamma: f64,
    #[serde(default = "default_lambda")]
    lambda: LambdaRepr,
}

fn default_lambda() -> LambdaRepr {
    LambdaRepr::Name("none".into())
}

/// Barotropic gas law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GasLawRepr", into = "GasLawRepr")]
pub struct GasLaw {
    a: f64,
    gamma: f64,
    lambda: Lambda,
}

impl TryFrom<GasLawRepr> for GasLaw {
    type Error = Error;

    fn try_from(r: GasLawRepr) -> Result<Self> {
        let lambda = match r.lambda {
            LambdaRepr::Name(n) if n == "none" => Lambda::None,
            LambdaRepr::Name(n) => return domain(format!("unknown lambda '{n}' (use \"none\" or a coefficient list)")),
            LambdaRepr::Coeffs(c) => Lambda::Polynomial(c),
        };
        GasLaw::with_lambda(r.a, r.gamma, lambda)
    }
}

impl From<GasLaw> for GasLawRepr {
    fn from(g: GasLaw) -> Self {
        let lambda = match g.lambda {
            Lambda::None => LambdaRepr::Name("none".into()),
            Lambda::Polynomial(c) => LambdaRepr::Coeffs(c),
        };
        GasLawRepr { a: g.a, gamma: g.gamma, lambda }
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions::new(1e-14, 1e-10)
}

impl GasLaw {
    /// Pure power law P = A ρ^γ.
    pub fn new(a: f64, gamma: f64) -> Result<Self> {
        Self::with_lambda(a, gamma, Lambda::None)
    }

    pub fn with_lambda(a: f64, gamma: f64, lambda: Lambda) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return domain(format!("pressure constant A must be positive, got {a}"));
        }
        if !(gamma > 1.0 && gamma <= 2.0) {
            return domain(format!("gamma must lie in (1, 2], got {gamma}"));
        }
        if gamma == 2.0 {
            log::warn!("gamma = 2 is the boundary of the admissible range (1, 2)");
        }
        if let Lambda::Polynomial(c) = &lambda {
            if c.iter().any(|v| !v.is_finite()) {
                return domain("lambda coefficients must be finite");
            }
        }
        let law = Self { a, gamma, lambda };
        if !law.lambda.is_zero() {
            for k in 0..=240 {
                let rho = 10f64.powf(-8.0 + 16.0 * k as f64 / 240.0);
                let d = law.dpdrho_unchecked(rho);
                if !(d > 0.0) {
                    return domain(format!("dP/drho = {d} is not positive at rho = {rho:e}"));
                }
            }
        }
        Ok(law)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> &Lambda {
        &self.lambda
    }

    /// Polytropic index ν = 1/(γ − 1).
    pub fn nu(&self) -> f64 {
        1.0 / (self.gamma - 1.0)
    }

    pub fn is_pure_power(&self) -> bool {
        self.lambda.is_zero()
    }

    fn check(rho: f64) -> Result<()> {
        if rho < 0.0 || rho.is_nan() {
            return domain(format!("density must be non-negative, got {rho}"));
        }
        Ok(())
    }

    fn s_of(&self, rho: f64) -> f64 {
        self.a * rho.powf(self.gamma - 1.0)
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        Self::check(rho)?;
        if rho == 0.0 {
            return Ok(0.0);
        }
        Ok(self.a * rho.powf(self.gamma) * (1.0 + self.lambda.value(self.s_of(rho))))
    }

    fn dpdrho_unchecked(&self, rho: f64) -> f64 {
        let g = self.gamma;
        let s = self.s_of(rho);
        self.a * rho.powf(g - 1.0) * (g * (1.0 + self.lambda.value(s)) + (g - 1.0) * s * self.lambda.derivative(s))
    }

    /// dP/dρ, the squared sound speed.
    pub fn dpdrho(&self, rho: f64) -> Result<f64> {
        Self::check(rho)?;
        if rho == 0.0 {
            return Ok(0.0);
        }
        Ok(self.dpdrho_unchecked(rho))
    }

    /// (1/ρ) dP/dρ; finite at ρ = 0 only for γ = 2.
    pub fn dpdrho_over_rho(&self, rho: f64) -> Result<f64> {
        Self::check(rho)?;
        let g = self.gamma;
        if rho == 0.0 && g < 2.0 {
            return domain("(1/rho) dP/drho is unbounded at vacuum for gamma < 2");
        }
        let s = self.s_of(rho);
        Ok(self.a * rho.powf(g - 2.0) * (g * (1.0 + self.lambda.value(s)) + (g - 1.0) * s * self.lambda.derivative(s)))
    }

    /// Integrand of u in the variable t = ρ^{γ−1}, where dP/ρ = (…) dt.
    fn enthalpy_integrand(&self, t: f64) -> f64 {
        let g = self.gamma;
        let s = self.a * t;
        self.a * (g * (1.0 + self.lambda.value(s)) + (g - 1.0) * s * self.lambda.derivative(s)) / (g - 1.0)
    }

    pub fn enthalpy(&self, rho: f64) -> Result<f64> {
        Self::check(rho)?;
        if rho == 0.0 {
            return Ok(0.0);
        }
        let g = self.gamma;
        let tmax = rho.powf(g - 1.0);
        if self.is_pure_power() {
            return Ok(self.a * g / (g - 1.0) * tmax);
        }
        integrate(|t| self.enthalpy_integrand(t), 0.0, tmax, quad_opts())
    }

    pub fn psi(&self, rho: f64) -> Result<f64> {
        Self::check(rho)?;
        if rho == 0.0 {
            return Ok(0.0);
        }
        if self.is_pure_power() {
            return Ok(self.pressure(rho)? / (self.gamma - 1.0));
        }
        // Ψ = ∫ u dρ with ρ = t^ν, dρ = ν t^{ν−1} dt.
        let nu = self.nu();
        let tmax = rho.powf(self.gamma - 1.0);
        let mut failure = None;
        let val = integrate(
            |t| {
                if t == 0.0 {
                    return 0.0;
                }
                match integrate(|x| self.enthalpy_integrand(x), 0.0, t, quad_opts()) {
                    Ok(u) => u * nu * t.powf(nu - 1.0),
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            },
            0.0,
            tmax,
            quad_opts(),
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(val),
        }
    }

    /// Inverse of `enthalpy`, with vacuum for u ≤ 0.
    pub fn density_from_enthalpy(&self, u: f64) -> Result<f64> {
        if u.is_nan() {
            return domain("enthalpy is NaN");
        }
        if u <= 0.0 {
            return Ok(0.0);
        }
        let g = self.gamma;
        let guess = ((g - 1.0) * u / (self.a * g)).powf(1.0 / (g - 1.0));
        if self.is_pure_power() {
            return Ok(guess);
        }
        let mut hi = guess.max(1e-300);
        let mut iters = 0;
        while self.enthalpy(hi)? < u {
            hi *= 2.0;
            iters += 1;
            if iters > 2000 || !hi.is_finite() {
                return Err(Error::Numeric(format!("could not bracket density for enthalpy {u}")));
            }
        }
        newton_bracketed(
            |rho| {
                let val = self.enthalpy(rho).unwrap_or(f64::NAN) - u;
                let d = if rho > 0.0 { self.dpdrho_unchecked(rho) / rho } else { f64::INFINITY };
                (val, d)
            },
            0.0,
            hi,
            guess.min(hi),
            1e-14,
        )
        .map_err(|e| Error::Numeric(format!("density_from_enthalpy(u={u}) failed: {e}")))
    }
}
