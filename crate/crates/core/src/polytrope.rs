//! Spherical polytropes: Lane–Emden solutions, dimensional equilibria, their
//! mass, radius and energy, the normalized rotating equation restricted to
//! spherical profiles, and residuals of the stationary balance.
//!
//! The energy uses the prefactor (4 − 3γ)/(γ − 1) in
//! E = (4 − 3γ)/(γ − 1) ∫ P dV, which follows from the virial argument
//! ½∫ρΦ dV = −3∫P dV.

use std::f64::consts::PI;

use crate::eos::GasLaw;
use crate::error::{domain, Error, Result};
use crate::field::{AxiField, Chart};
use crate::numerics::diff::{lagrange_diff_matrix, FdOperator};
use crate::numerics::ode::{solve, DensePath, Dopri5, OdeOptions};
use crate::numerics::quad::{integrate, QuadOptions};
use crate::numerics::roots::bisect;

/// Start of the numerical integration; the series covers [0, ξ₀].
pub const SERIES_START: f64 = 1e-3;
/// Point at which the ν = 5 solution is sampled for the μ₁ limit.
pub const NU5_XI_END: f64 = 1e4;

fn ode_options() -> OdeOptions {
    OdeOptions::new(1e-12, 1e-14)
}

fn quad_options() -> QuadOptions {
    QuadOptions::new(1e-14, 1e-12)
}

/// θ^ν with the vacuum truncation θ ∨ 0.
fn power(theta: f64, nu: f64) -> f64 {
    if nu == 0.0 {
        1.0
    } else {
        theta.max(0.0).powf(nu)
    }
}

/// Solution of −ξ⁻²(ξ²θ′)′ = θ^ν − b with θ(0) = 1, θ′(0) = 0.
#[derive(Debug, Clone)]
struct EmdenPath {
    nu: f64,
    b: f64,
    path: DensePath<2>,
    zero: Option<f64>,
}

impl EmdenPath {
    fn rhs(nu: f64, b: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + Copy {
        move |x, y| [y[1], -(power(y[0], nu) - b) - 2.0 * y[1] / x]
    }

    fn series(nu: f64, b: f64, x: f64) -> [f64; 2] {
        let a2 = -(1.0 - b) / 6.0;
        let a4 = nu * (1.0 - b) / 120.0;
        [1.0 + a2 * x * x + a4 * x.powi(4), 2.0 * a2 * x + 4.0 * a4 * x.powi(3)]
    }

    /// Integrates up to the first zero (located to `tol`) or to `xi_end`.
    fn integrate(nu: f64, b: f64, tol: f64, xi_end: f64, opts: OdeOptions) -> Result<Self> {
        let f = Self::rhs(nu, b);
        let y0 = Self::series(nu, b, SERIES_START);
        let mut st = Dopri5::new(f, SERIES_START, y0, xi_end, opts)?;
        let mut segments = Vec::new();
        while !st.finished() {
            let seg = st.step()?;
            segments.push(seg);
            if seg.y1[0] <= 0.0 {
                let mut x = bisect(|t| seg.eval(t)[0], seg.t0, seg.t1, 0.1 * tol)?;
                // Polish against the integrator itself rather than the interpolant.
                for _ in 0..8 {
                    let y = solve(f, seg.t0, seg.y0, x, opts)?;
                    let dx = y[0] / y[1];
                    x -= dx;
                    if dx.abs() <= 0.1 * tol {
                        break;
                    }
                }
                return Ok(Self { nu, b, path: DensePath { segments }, zero: Some(x) });
            }
        }
        Ok(Self { nu, b, path: DensePath { segments }, zero: None })
    }

    fn eval(&self, x: f64) -> Result<[f64; 2]> {
        if !(0.0..=self.path.t_end()).contains(&x) {
            return domain(format!("xi = {x} lies outside the integrated range [0, {}]", self.path.t_end()));
        }
        if x <= SERIES_START {
            return Ok(Self::series(self.nu, self.b, x));
        }
        self.path.eval(x).ok_or_else(|| Error::Numeric(format!("no dense output at xi = {x}")))
    }

    /// ∫ₐᵇ θ^p ξ^k dξ by adaptive quadrature of the dense output.
    fn moment(&self, p: f64, k: i32, a: f64, b: f64) -> Result<f64> {
        let mut failure = None;
        let v = integrate(
            |x| match self.eval(x) {
                Ok(y) => power(y[0], p) * x.powi(k),
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            },
            a,
            b,
            quad_options(),
        )?;
        failure.map_or(Ok(v), Err)
    }
}

/// Lane–Emden function θ(ξ; ν) with its first zero ξ₁ and μ₁ = −ξ₁²θ′(ξ₁).
#[derive(Debug, Clone)]
pub struct LaneEmdenSolution {
    pub nu: f64,
    /// Accepted integration steps, starting at 0.
    pub xi_nodes: Vec<f64>,
    pub theta: Vec<f64>,
    pub dtheta: Vec<f64>,
    /// First zero; +∞ for ν = 5.
    pub xi1: f64,
    /// −ξ²θ′ at ξ₁ (at [`NU5_XI_END`] for ν = 5).
    pub mu1: f64,
    /// ∫₀^{ξ₁} θ^ν ξ² dξ computed by quadrature.
    pub mu1_quadrature: f64,
    inner: EmdenPath,
}

impl LaneEmdenSolution {
    /// (θ, θ′) at ξ, inside the integrated range.
    pub fn eval(&self, xi: f64) -> Result<[f64; 2]> {
        self.inner.eval(xi)
    }

    pub fn theta_at(&self, xi: f64) -> Result<f64> {
        Ok(self.eval(xi)?[0])
    }

    /// ∫₀^ξ θ^p ξ′² dξ′.
    pub fn moment(&self, p: f64, xi: f64) -> Result<f64> {
        self.inner.moment(p, 2, 0.0, xi)
    }

    pub fn has_finite_radius(&self) -> bool {
        self.xi1.is_finite()
    }
}

/// Lane–Emden solution of index ν ∈ [0, 5] with ξ₁ located to `tol`.
pub fn solve_lane_emden(nu: f64, tol: f64) -> Result<LaneEmdenSolution> {
    if !(0.0..=5.0).contains(&nu) {
        return domain(format!("Lane-Emden index must lie in [0, 5], got {nu}"));
    }
    if !(tol > 0.0) {
        return domain("root tolerance must be positive");
    }
    let xi_end = if nu == 5.0 { NU5_XI_END } else { 1e6 };
    let inner = EmdenPath::integrate(nu, 0.0, tol, xi_end, ode_options())?;
    let (xi1, end) = match inner.zero {
        Some(z) => (z, z),
        None if nu == 5.0 => (f64::INFINITY, xi_end),
        None => return Err(Error::Numeric(format!("no zero of theta found below xi = {xi_end} for nu = {nu}"))),
    };
    let d_end = if inner.zero.is_some() {
        let seg = inner.path.segments.last().unwrap();
        solve(EmdenPath::rhs(nu, 0.0), seg.t0, seg.y0, end, ode_options())?[1]
    } else {
        inner.path.segments.last().unwrap().y1[1]
    };
    let mu1 = -end * end * d_end;
    let mu1_quadrature = inner.moment(nu, 2, 0.0, end)?;
    let mut xi_nodes = vec![0.0];
    let mut theta = vec![1.0];
    let mut dtheta = vec![0.0];
    for s in &inner.path.segments {
        xi_nodes.push(s.t0);
        theta.push(s.y0[0]);
        dtheta.push(s.y0[1]);
    }
    xi_nodes.push(end);
    let y_end = inner.eval(end)?;
    theta.push(if inner.zero.is_some() { 0.0 } else { y_end[0] });
    dtheta.push(d_end);
    Ok(LaneEmdenSolution { nu, xi_nodes, theta, dtheta, xi1, mu1, mu1_quadrature, inner })
}

/// Piecewise cubic Hermite profile of one radial function.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    /// First zero of the profiled function, when it has one.
    pub first_zero: Option<f64>,
}

impl RadialProfile {
    pub fn new(r: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>, first_zero: Option<f64>) -> Result<Self> {
        if r.len() < 2 || r.len() != values.len() || r.len() != slopes.len() {
            return Err(Error::GridMismatch("profile arrays must share a length of at least 2".into()));
        }
        if r.windows(2).any(|w| w[0] >= w[1]) {
            return domain("profile radii must be strictly increasing");
        }
        Ok(Self { r, values, slopes, first_zero })
    }

    fn locate(&self, x: f64) -> Result<(usize, f64, f64)> {
        let n = self.r.len();
        if !(x >= self.r[0] && x <= self.r[n - 1]) {
            return domain(format!("r = {x} outside the profile range [{}, {}]", self.r[0], self.r[n - 1]));
        }
        let k = self.r.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let h = self.r[k + 1] - self.r[k];
        Ok((k, h, (x - self.r[k]) / h))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (k, h, s) = self.locate(x)?;
        let (h00, h10, h01, h11) =
            ((1.0 + 2.0 * s) * (1.0 - s).powi(2), s * (1.0 - s).powi(2), s * s * (3.0 - 2.0 * s), s * s * (s - 1.0));
        Ok(h00 * self.values[k] + h * h10 * self.slopes[k] + h01 * self.values[k + 1] + h * h11 * self.slopes[k + 1])
    }

    pub fn slope(&self, x: f64) -> Result<f64> {
        let (k, h, s) = self.locate(x)?;
        let (d00, d10, d01, d11) = (6.0 * s * (s - 1.0), (1.0 - s) * (1.0 - 3.0 * s), -6.0 * s * (s - 1.0), s * (3.0 * s - 2.0));
        Ok((d00 * self.values[k] + d01 * self.values[k + 1]) / h + d10 * self.slopes[k] + d11 * self.slopes[k + 1])
    }
}

/// √(Aγ/(4πG(γ − 1))), the factor shared by the length, mass and radius scales.
fn scale_factor(law: &GasLaw, g: f64) -> f64 {
    let gm = law.gamma();
    (law.a() * gm / (4.0 * PI * g * (gm - 1.0))).sqrt()
}

fn check_polytrope(law: &GasLaw, rho_c: f64, g: f64) -> Result<()> {
    if !law.is_pure_power() {
        return domain("polytropes need the pure power law (lambda = 0)");
    }
    if !(rho_c > 0.0 && rho_c.is_finite()) {
        return domain(format!("central density must be positive, got {rho_c}"));
    }
    if !(g > 0.0 && g.is_finite()) {
        return domain(format!("G must be positive, got {g}"));
    }
    Ok(())
}

/// Length scale 𝖺 = √(Aγ/(4πG(γ−1)))·ρ_c^{−(2−γ)/2}.
pub fn length_scale(law: &GasLaw, rho_c: f64, g: f64) -> Result<f64> {
    check_polytrope(law, rho_c, g)?;
    Ok(scale_factor(law, g) * rho_c.powf(-(2.0 - law.gamma()) / 2.0))
}

/// M = 4π(Aγ/(4πG(γ−1)))^{3/2} ρ_c^{(3γ−4)/2} μ₁(ν).
pub fn mass_formula(law: &GasLaw, rho_c: f64, g: f64, le: &LaneEmdenSolution) -> Result<f64> {
    check_polytrope(law, rho_c, g)?;
    Ok(4.0 * PI * scale_factor(law, g).powi(3) * rho_c.powf((3.0 * law.gamma() - 4.0) / 2.0) * le.mu1)
}

/// R = √(Aγ/(4πG(γ−1))) ρ_c^{−(2−γ)/2} ξ₁(ν).
pub fn radius_formula(law: &GasLaw, rho_c: f64, g: f64, le: &LaneEmdenSolution) -> Result<f64> {
    Ok(length_scale(law, rho_c, g)? * le.xi1)
}

/// Number of profile intervals of a built equilibrium.
pub const PROFILE_INTERVALS: usize = 512;

/// Static polytrope of central density ρ_c: ρ = ρ_c θ(r/𝖺)^ν.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub law: GasLaw,
    pub rho_c: f64,
    pub g: f64,
    pub a: f64,
    pub radius: f64,
    pub mass: f64,
    pub lane_emden: LaneEmdenSolution,
    pub rho: RadialProfile,
    pub u: RadialProfile,
    pub phi: RadialProfile,
}

/// Builds the equilibrium with Φ from the K_III quadrature
/// Φ(r) = −4πG ∫ min(1/r, 1/r′) ρ r′² dr′.
pub fn build_equilibrium(law: &GasLaw, rho_c: f64, g: f64) -> Result<Equilibrium> {
    check_polytrope(law, rho_c, g)?;
    let gm = law.gamma();
    if gm <= 6.0 / 5.0 {
        return domain(format!("gamma = {gm} <= 6/5 gives an equilibrium of infinite radius"));
    }
    let nu = law.nu();
    let le = solve_lane_emden(nu, 1e-12)?;
    let a = length_scale(law, rho_c, g)?;
    let xi1 = le.xi1;
    let n = PROFILE_INTERVALS;
    let xi: Vec<f64> = (0..=n).map(|i| xi1 * i as f64 / n as f64).collect();
    // Cumulative ∫₀^ξ θ^ν ξ′² and ∫_ξ^{ξ₁} θ^ν ξ′.
    let mut inner = vec![0.0; n + 1];
    let mut outer = vec![0.0; n + 1];
    for i in 0..n {
        inner[i + 1] = inner[i] + le.inner.moment(nu, 2, xi[i], xi[i + 1])?;
    }
    for i in (0..n).rev() {
        outer[i] = outer[i + 1] + le.inner.moment(nu, 1, xi[i], xi[i + 1])?;
    }
    let r: Vec<f64> = xi.iter().map(|x| a * x).collect();
    let beta = law.a() * gm / (gm - 1.0) * rho_c.powf(gm - 1.0);
    let mut rho = Vec::with_capacity(n + 1);
    let mut drho = Vec::with_capacity(n + 1);
    let mut u = Vec::with_capacity(n + 1);
    let mut du = Vec::with_capacity(n + 1);
    let mut phi = Vec::with_capacity(n + 1);
    let mut dphi = Vec::with_capacity(n + 1);
    let c = 4.0 * PI * g * rho_c * a * a;
    for i in 0..=n {
        let [t, dt] = if i == n { [0.0, le.dtheta[le.dtheta.len() - 1]] } else { le.eval(xi[i])? };
        let t = t.max(0.0);
        rho.push(rho_c * power(t, nu));
        drho.push(if nu == 1.0 || t > 0.0 { rho_c * nu * power(t, nu - 1.0) * dt / a } else { 0.0 });
        u.push(beta * t);
        du.push(beta * dt / a);
        if i == 0 {
            phi.push(-c * outer[0]);
            dphi.push(0.0);
        } else {
            phi.push(-c * (inner[i] / xi[i] + outer[i]));
            dphi.push(c * inner[i] / (xi[i] * xi[i] * a));
        }
    }
    let mass = mass_formula(law, rho_c, g, &le)?;
    let radius = a * xi1;
    Ok(Equilibrium {
        law: law.clone(),
        rho_c,
        g,
        a,
        radius,
        mass,
        rho: RadialProfile::new(r.clone(), rho, drho, Some(radius))?,
        u: RadialProfile::new(r.clone(), u, du, Some(radius))?,
        phi: RadialProfile::new(r, phi, dphi, None)?,
        lane_emden: le,
    })
}

impl Equilibrium {
    pub fn density(&self, r: f64) -> Result<f64> {
        if r >= self.radius {
            return Ok(0.0);
        }
        Ok(self.rho.eval(r)?.max(0.0))
    }

    /// Enthalpy truncated to zero outside the star.
    pub fn enthalpy(&self, r: f64) -> Result<f64> {
        if r >= self.radius {
            return Ok(0.0);
        }
        Ok(self.u.eval(r)?.max(0.0))
    }

    /// Φ(r), equal to −GM/r outside the star.
    pub fn potential(&self, r: f64) -> Result<f64> {
        if r >= self.radius {
            return Ok(-self.g * self.mass / r);
        }
        self.phi.eval(r)
    }

    pub fn potential_slope(&self, r: f64) -> Result<f64> {
        if r >= self.radius {
            return Ok(self.g * self.mass / (r * r));
        }
        self.phi.slope(r)
    }

    /// ρ sampled on a grid of either chart.
    pub fn rho_field(&self, grid: &crate::field::AxiGrid) -> Result<AxiField> {
        self.sample(grid, self.radius, |s, r| s.density(r))
    }

    pub fn u_field(&self, grid: &crate::field::AxiGrid) -> Result<AxiField> {
        self.sample(grid, self.radius, |s, r| s.enthalpy(r))
    }

    pub fn phi_field(&self, grid: &crate::field::AxiGrid) -> Result<AxiField> {
        self.sample(grid, f64::INFINITY, |s, r| s.potential(r))
    }

    fn sample(
        &self,
        grid: &crate::field::AxiGrid,
        support: f64,
        f: impl Fn(&Self, f64) -> Result<f64>,
    ) -> Result<AxiField> {
        let values = grid
            .points()
            .into_iter()
            .map(|[p, q]| f(self, if grid.chart == Chart::RZeta { p } else { p.hypot(q) }))
            .collect::<Result<Vec<_>>>()?;
        let field = AxiField::new(grid.clone(), values, support)?;
        if grid.is_vertically_symmetric() {
            field.mark_symmetric()
        } else {
            Ok(field)
        }
    }
}

/// The two evaluations of the total energy of a polytrope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolytropeEnergy {
    /// ∫Ψ dV.
    pub internal: f64,
    /// ½∫ρΦ dV.
    pub gravitational: f64,
    /// internal + gravitational.
    pub direct: f64,
    /// (4 − 3γ)/(γ − 1) ∫P dV.
    pub closed_form: f64,
    /// ∫P dV.
    pub pressure_integral: f64,
}

impl PolytropeEnergy {
    pub fn relative_gap(&self) -> f64 {
        (self.direct - self.closed_form).abs() / self.direct.abs().max(self.closed_form.abs())
    }
}

pub fn polytrope_energy(eq: &Equilibrium) -> Result<PolytropeEnergy> {
    let law = &eq.law;
    let gm = law.gamma();
    let le = &eq.lane_emden;
    let nu = le.nu;
    let vol = 4.0 * PI * eq.a.powi(3);
    let rho_of = |t: f64| eq.rho_c * power(t, nu);
    let mut failure: Option<Error> = None;
    let mut integral = |f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        let v = integrate(
            |x| match f(x) {
                Ok(v) => v * x * x,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            le.xi1,
            quad_options(),
        )?;
        match failure.take() {
            Some(e) => Err(e),
            None => Ok(vol * v),
        }
    };
    let internal = integral(&|x| law.psi(rho_of(le.theta_at(x)?)))?;
    let pressure_integral = integral(&|x| law.pressure(rho_of(le.theta_at(x)?)))?;
    let gravitational = 0.5 * integral(&|x| Ok(rho_of(le.theta_at(x)?) * eq.potential(eq.a * x)?))?;
    let closed_form = (4.0 - 3.0 * gm) / (gm - 1.0) * pressure_integral;
    Ok(PolytropeEnergy { internal, gravitational, direct: internal + gravitational, closed_form, pressure_integral })
}

/// Options for [`solve_rotating_spherical`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingOptions {
    /// Integrator tolerance, also used for the zero.
    pub tol: f64,
    /// Search cap for the first zero.
    pub xi_max: f64,
    /// Samples of the returned profile.
    pub samples: usize,
}

impl Default for RotatingOptions {
    fn default() -> Self {
        Self { tol: 1e-11, xi_max: 50.0, samples: 400 }
    }
}

/// Spherical solution U of −(1/r²)(r²U′)′ = U^ν − 𝖻 with U = 1 + O(r²),
/// profiled up to its first zero R(𝖻).
pub fn solve_rotating_spherical(nu: f64, b: f64, opts: &RotatingOptions) -> Result<RadialProfile> {
    if !(nu > 0.0 && nu < 5.0) {
        return domain(format!("index must lie in (0, 5), got {nu}"));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return domain(format!("b must be non-negative, got {b}"));
    }
    if !(opts.tol > 0.0) || opts.samples < 2 || !(opts.xi_max > SERIES_START) {
        return domain("invalid rotating-profile options");
    }
    let ode = OdeOptions::new(opts.tol, opts.tol * 1e-2);
    let path = EmdenPath::integrate(nu, b, opts.tol, opts.xi_max, ode)?;
    let zero = path.zero.ok_or_else(|| {
        Error::Numeric(format!("U has no zero below r = {} for nu = {nu}, b = {b}", opts.xi_max))
    })?;
    let n = opts.samples;
    let r: Vec<f64> = (0..n).map(|i| zero * i as f64 / (n - 1) as f64).collect();
    let mut values = Vec::with_capacity(n);
    let mut slopes = Vec::with_capacity(n);
    for (i, &x) in r.iter().enumerate() {
        let y = if i == n - 1 {
            let seg = path.path.segments.last().unwrap();
            solve(EmdenPath::rhs(nu, b), seg.t0, seg.y0, zero, ode)?
        } else {
            path.eval(x)?
        };
        values.push(if i == n - 1 { 0.0 } else { y[0] });
        slopes.push(y[1]);
    }
    RadialProfile::new(r, values, slopes, Some(zero))
}

/// Normalization r = 𝖺r̄, u = βū, Φ = βΦ̄ of the rotating stationary problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedParams {
    pub a: f64,
    pub beta: f64,
    pub b: f64,
    pub nu: f64,
    gamma: f64,
    big_a: f64,
    g: f64,
}

impl NormalizedParams {
    /// 4πG((γ−1)/(Aγ))^ν 𝖺² β^{(2−γ)/(γ−1)} − 1, zero by construction.
    pub fn constraint_residual(&self) -> f64 {
        let gm = self.gamma;
        let lhs = 4.0 * PI * self.g * ((gm - 1.0) / (self.big_a * gm)).powf(self.nu) * self.a * self.a
            * self.beta.powf((2.0 - gm) / (gm - 1.0));
        lhs - 1.0
    }
}

/// β = Aγ/(γ−1) ρ_c^{γ−1}, 𝖺 = √(Aγ/(4πG(γ−1))) ρ_c^{(γ−2)/2},
/// 𝖻 = Ω̄²/(2πGρ_c) and ν = 1/(γ − 1).
pub fn normalized_params(law: &GasLaw, rho_c: f64, omega_bar: f64, g: f64) -> Result<NormalizedParams> {
    check_polytrope(law, rho_c, g)?;
    let gm = law.gamma();
    Ok(NormalizedParams {
        a: length_scale(law, rho_c, g)?,
        beta: law.a() * gm / (gm - 1.0) * rho_c.powf(gm - 1.0),
        b: omega_bar * omega_bar / (2.0 * PI * g * rho_c),
        nu: law.nu(),
        gamma: gm,
        big_a: law.a(),
        g,
    })
}

/// Rotation law of a stationary state.
pub enum Rotation<'a> {
    /// Constant Ω̄.
    Solid(f64),
    /// Ω(ϖ).
    Differential(&'a dyn Fn(f64) -> f64),
}

impl Rotation<'_> {
    fn omega(&self, w: f64) -> f64 {
        match self {
            Rotation::Solid(o) => *o,
            Rotation::Differential(f) => f(w),
        }
    }
}

/// Residuals of the stationary momentum balance in enthalpy form.
#[derive(Debug, Clone)]
pub struct StationaryResiduals {
    /// −(1−ζ²)rΩ² + ∂_r u + ∂_rΦ, or −ϖΩ² + ∂_ϖ u + ∂_ϖΦ; zero where u ≤ 0.
    pub radial: AxiField,
    /// ζr²Ω² + ∂_ζ u + ∂_ζΦ, or ∂_z u + ∂_zΦ; zero where u ≤ 0.
    pub vertical: AxiField,
    /// For solid rotation, max |C − mean C| of C = u + Φ − ½ϖ²Ω̄² over u > 0.
    pub first_integral_deviation: Option<f64>,
}

impl StationaryResiduals {
    /// Largest |residual| over nodes with `keep(a, b)`.
    pub fn max_where(&self, keep: impl Fn(f64, f64) -> bool) -> (f64, f64) {
        let pts = self.radial.grid.points();
        let mut out = (0.0f64, 0.0f64);
        for (k, [a, b]) in pts.into_iter().enumerate() {
            if keep(a, b) {
                out.0 = out.0.max(self.radial.values[k].abs());
                out.1 = out.1.max(self.vertical.values[k].abs());
            }
        }
        out
    }
}

/// Pointwise residuals with fourth-order differences across the first axis and
/// the Lagrange differentiation matrix of the vertical nodes.
pub fn stationary_residuals(u: &AxiField, phi: &AxiField, rotation: &Rotation) -> Result<StationaryResiduals> {
    u.grid.require_same(&phi.grid)?;
    let grid = &u.grid;
    if grid.nr() < 5 || grid.nz() < 2 {
        return domain("stationary_residuals needs at least 5 radial and 2 vertical nodes");
    }
    let (nr, nz) = (grid.nr(), grid.nz());
    let d1 = FdOperator::fourth_order(&grid.radial, 1);
    let dz = lagrange_diff_matrix(&grid.vertical);
    let mut radial = vec![0.0; nr * nz];
    let mut vertical = vec![0.0; nr * nz];
    let mut consts = Vec::new();
    for i in 0..nr {
        let a = grid.radial[i];
        for j in 0..nz {
            let k = i * nz + j;
            if u.values[k] <= 0.0 {
                continue;
            }
            let b = grid.vertical[j];
            let s_r = d1.apply_at(i, |m| u.get(m, j) + phi.get(m, j));
            let s_z: f64 = (0..nz).map(|l| dz[j][l] * (u.get(i, l) + phi.get(i, l))).sum();
            let w = match grid.chart {
                Chart::RZeta => a * (1.0 - b * b).max(0.0).sqrt(),
                Chart::Cylindrical => a,
            };
            let om2 = rotation.omega(w).powi(2);
            match grid.chart {
                Chart::RZeta => {
                    radial[k] = -(1.0 - b * b) * a * om2 + s_r;
                    vertical[k] = b * a * a * om2 + s_z;
                }
                Chart::Cylindrical => {
                    radial[k] = -a * om2 + s_r;
                    vertical[k] = s_z;
                }
            }
            if let Rotation::Solid(o) = rotation {
                consts.push(u.values[k] + phi.values[k] - 0.5 * w * w * o * o);
            }
        }
    }
    let first_integral_deviation = match rotation {
        Rotation::Solid(_) if !consts.is_empty() => {
            let mean = consts.iter().sum::<f64>() / consts.len() as f64;
            Some(consts.iter().fold(0.0f64, |m, c| m.max((c - mean).abs())))
        }
        Rotation::Solid(_) => Some(0.0),
        Rotation::Differential(_) => None,
    };
    Ok(StationaryResiduals {
        radial: AxiField::new(grid.clone(), radial, f64::INFINITY)?,
        vertical: AxiField::new(grid.clone(), vertical, f64::INFINITY)?,
        first_integral_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AxiGrid;

    #[test]
    fn index_one_is_sinc() {
        let le = solve_lane_emden(1.0, 1e-12).unwrap();
        assert!((le.xi1 - PI).abs() <= 1e-10, "{}", le.xi1 - PI);
        assert!((le.mu1 - PI).abs() <= 1e-9);
        let mut worst = 0.0f64;
        for k in 0..=1000 {
            let x = PI * k as f64 / 1000.0;
            let exact = if x == 0.0 { 1.0 } else { x.sin() / x };
            worst = worst.max((le.theta_at(x).unwrap() - exact).abs());
        }
        assert!(worst <= 1e-8, "{worst:e}");
    }

    #[test]
    fn index_zero_and_five_closed_forms() {
        let le = solve_lane_emden(0.0, 1e-12).unwrap();
        assert!((le.xi1 - 6f64.sqrt()).abs() < 1e-10);
        let le = solve_lane_emden(5.0, 1e-12).unwrap();
        assert!(le.xi1.is_infinite());
        assert!((le.mu1 - 3f64.sqrt()).abs() < 1e-4);
        for k in 0..=300 {
            let x = 0.1 * k as f64;
            assert!((le.theta_at(x).unwrap() - (1.0 + x * x / 3.0).powf(-0.5)).abs() < 1e-8);
        }
    }

    #[test]
    fn mu1_two_ways() {
        for nu in [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5] {
            let le = solve_lane_emden(nu, 1e-12).unwrap();
            assert!(((le.mu1 - le.mu1_quadrature) / le.mu1).abs() < 1e-8, "nu {nu}");
            assert!(le.theta.iter().take(le.theta.len() - 1).all(|&t| t > 0.0));
        }
    }

    #[test]
    fn index_out_of_range() {
        assert!(solve_lane_emden(5.5, 1e-12).is_err());
        assert!(solve_lane_emden(-0.1, 1e-12).is_err());
    }

    #[test]
    fn hermite_profile_is_cubic_exact() {
        let r: Vec<f64> = (0..5).map(|i| i as f64 * 0.3).collect();
        let f = |x: f64| 1.0 - 2.0 * x + x.powi(3);
        let df = |x: f64| -2.0 + 3.0 * x * x;
        let p = RadialProfile::new(r.clone(), r.iter().map(|&x| f(x)).collect(), r.iter().map(|&x| df(x)).collect(), None)
            .unwrap();
        for x in [0.05, 0.4, 1.17] {
            assert!((p.eval(x).unwrap() - f(x)).abs() < 1e-14);
            assert!((p.slope(x).unwrap() - df(x)).abs() < 1e-13);
        }
        assert!(p.eval(1.3).is_err());
    }

    #[test]
    fn gamma_two_equilibrium() {
        let law = GasLaw::new(1.0, 2.0).unwrap();
        let eq = build_equilibrium(&law, 1.0, 1.0).unwrap();
        assert!((eq.a - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-14);
        assert!((eq.radius - PI / (2.0 * PI).sqrt()).abs() < 1e-10);
        assert!((eq.enthalpy(0.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(eq.enthalpy(eq.radius).unwrap(), 0.0);
        let inside = eq.phi.values.last().unwrap();
        assert!((inside + eq.g * eq.mass / eq.radius).abs() <= 1e-8 * inside.abs());
        assert!(eq.rho.values.windows(2).all(|w| w[1] <= w[0]));
        // Analytic: ρ = sin(ξ)/ξ, Φ = u(R) − u = −GM/R − 2θ + … at the centre Φ(0) = −GM/R − 2.
        assert!((eq.potential(0.0).unwrap() - (-eq.g * eq.mass / eq.radius - 2.0)).abs() < 1e-9);
    }

    #[test]
    fn mass_scaling() {
        let le = solve_lane_emden(3.0, 1e-12).unwrap();
        let law = GasLaw::new(1.0, 4.0 / 3.0).unwrap();
        let m1 = mass_formula(&law, 1.0, 1.0, &le).unwrap();
        let m10 = mass_formula(&law, 10.0, 1.0, &le).unwrap();
        assert!(((m1 - m10) / m1).abs() <= 1e-10);
        let law = GasLaw::new(0.7, 1.6).unwrap();
        let le = solve_lane_emden(law.nu(), 1e-12).unwrap();
        let slope = (mass_formula(&law, 3.0, 1.0, &le).unwrap() / mass_formula(&law, 1.5, 1.0, &le).unwrap()).ln()
            / 2f64.ln();
        assert!((slope - (3.0 * 1.6 - 4.0) / 2.0).abs() < 1e-8);
    }

    #[test]
    fn energy_identity_and_signs() {
        for gamma in [1.5, 5.0 / 3.0, 2.0] {
            let eq = build_equilibrium(&GasLaw::new(1.0, gamma).unwrap(), 1.0, 1.0).unwrap();
            let e = polytrope_energy(&eq).unwrap();
            assert!(e.relative_gap() <= 1e-6, "gamma {gamma}: {e:?}");
            assert!(e.direct < 0.0);
        }
        let eq = build_equilibrium(&GasLaw::new(1.0, 4.0 / 3.0).unwrap(), 2.0, 1.0).unwrap();
        let e = polytrope_energy(&eq).unwrap();
        assert!(e.direct.abs() <= 1e-6 * e.pressure_integral, "{e:?}");
        let eq = build_equilibrium(&GasLaw::new(1.0, 1.25).unwrap(), 1.0, 1.0).unwrap();
        assert!(polytrope_energy(&eq).unwrap().direct > 0.0);
        assert!(build_equilibrium(&GasLaw::new(1.0, 1.2).unwrap(), 1.0, 1.0).is_err());
    }

    #[test]
    fn rotating_profile() {
        let opts = RotatingOptions::default();
        let p = solve_rotating_spherical(1.0, 0.0, &opts).unwrap();
        assert!((p.first_zero.unwrap() - PI).abs() < 1e-9);
        let p = solve_rotating_spherical(1.5, 0.01, &opts).unwrap();
        let le = solve_lane_emden(1.5, 1e-12).unwrap();
        assert!(p.first_zero.unwrap() > le.xi1);
        // Independent integration of the same equation to a few radii.
        let f = EmdenPath::rhs(1.5, 0.01);
        for x in [0.5, 1.7, 3.0] {
            let y = solve(f, SERIES_START, EmdenPath::series(1.5, 0.01, SERIES_START), x, OdeOptions::new(1e-13, 1e-15))
                .unwrap();
            assert!((p.eval(x).unwrap() - y[0]).abs() < 1e-9);
        }
        assert!(solve_rotating_spherical(1.5, 0.6, &opts).is_err());
    }

    #[test]
    fn normalization_examples() {
        let law = GasLaw::new(1.3, 2.0).unwrap();
        let rho_c = 0.8;
        let p = normalized_params(&law, rho_c, (2.0 * PI * rho_c).sqrt(), 1.0).unwrap();
        assert!((p.b - 1.0).abs() < 1e-14);
        assert_eq!(p.nu, 1.0);
        assert!(p.constraint_residual().abs() < 1e-12);
    }

    #[test]
    fn constant_fields_balance() {
        let grid = AxiGrid::rzeta(AxiGrid::cell_centred(10, 1.0), 6).unwrap();
        let u = AxiField::from_fn(grid.clone(), 1.0, |_, _| 1.0).unwrap();
        let phi = AxiField::from_fn(grid, f64::INFINITY, |_, _| -3.0).unwrap();
        let res = stationary_residuals(&u, &phi, &Rotation::Solid(0.0)).unwrap();
        assert!(res.radial.max_abs() < 1e-12 && res.vertical.max_abs() < 1e-12);
        assert!(res.first_integral_deviation.unwrap() < 1e-15);
    }

    #[test]
    fn equilibrium_is_stationary() {
        let eq = build_equilibrium(&GasLaw::new(1.0, 2.0).unwrap(), 1.0, 1.0).unwrap();
        let err = |n: usize| {
            let grid = AxiGrid::rzeta(AxiGrid::cell_centred(n, eq.radius), 8).unwrap();
            let res = stationary_residuals(&eq.u_field(&grid).unwrap(), &eq.phi_field(&grid).unwrap(), &Rotation::Solid(0.0))
                .unwrap();
            res.max_where(|r, _| r < 0.8 * eq.radius)
        };
        // u + Φ is constant to quadrature accuracy, so the differences cancel.
        for n in [20, 40] {
            let (r, z) = err(n);
            assert!(r < 1e-9 && z < 1e-10, "{r:e} {z:e}");
        }
    }

    #[test]
    fn spherical_rotating_profile_fails_vertical_balance() {
        let b = 0.02;
        let nu = 1.5;
        let p = solve_rotating_spherical(nu, b, &RotatingOptions::default()).unwrap();
        let rz = p.first_zero.unwrap();
        let grid = AxiGrid::rzeta(AxiGrid::cell_centred(60, rz), 8).unwrap();
        let u = AxiField::from_fn(grid.clone(), rz, |r, _| p.eval(r).unwrap().max(0.0)).unwrap();
        // Spherical potential of U^ν in normalized units (ΔΦ̄ = U^ν).
        let phi = AxiField::from_fn(grid.clone(), f64::INFINITY, |r, _| {
            let o = QuadOptions::new(1e-13, 1e-12);
            let f = |s: f64| p.eval(s).unwrap().max(0.0).powf(nu);
            let inner = integrate(|s| f(s) * s * s, 0.0, r, o).unwrap();
            let outer = integrate(|s| f(s) * s, r, rz, o).unwrap();
            -(inner / r + outer)
        })
        .unwrap();
        // Ω̄²𝖺²/β = 𝖻/2 in normalized units.
        let res = stationary_residuals(&u, &phi, &Rotation::Solid((b / 2.0).sqrt())).unwrap();
        let (_, vert) = res.max_where(|r, _| r < 0.8 * rz);
        assert!(vert > 1e-3, "{vert:e}");
    }
}
