//! Run configuration: per-command parameter records shared by the flags and
//! the TOML config file.
//!
//! The file has an optional `[global]` table (`format`, `output`, `seed`) and
//! one table per subcommand named as on the command line, e.g.
//!
//! ```toml
//! [global]
//! format = "json"
//!
//! [modes]
//! gamma = 1.4
//! elements = 200
//! ```
//!
//! Keys are the long flag names. Unknown tables or keys are rejected, and a
//! flag given on the command line overrides the file value.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::Deserialize;

use crate::output::Format;

macro_rules! params {
    ($(#[$meta:meta])* $name:ident { $($(#[$fm:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, clap::Args, Deserialize)]
        #[serde(deny_unknown_fields, rename_all = "kebab-case")]
        pub struct $name {
            $($(#[$fm])* #[arg(long)] pub $field: Option<$ty>,)*
        }

        impl $name {
            pub fn merged(self, file: Self) -> Self {
                Self { $($field: self.$field.or(file.$field),)* }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    /// ρ = 1 inside the unit ball.
    UniformSphere,
    /// ρ = (1 − r²)₊(1 + 0.1 P₂(ζ)).
    Oblate,
    /// Static polytrope of the given γ.
    Polytrope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialMethod {
    /// Direct ring-kernel quadrature.
    Quadrature,
    /// Legendre series truncated at `m-max`.
    Expansion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    None,
    Radial,
    Vortex,
    Swirl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Omega0Kind {
    /// Ω⁰ = c.
    Uniform,
    /// Ω⁰ = c/ϖ².
    InverseSquare,
    /// Ω⁰ = c/(1 + ϖ²).
    Lorentzian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartKind {
    /// Components (ξ_ϖ, ξ_φ, ξ_z).
    Cartesian,
    /// Displacements (η¹, η², η³) of (r, ζ, φ).
    Axisymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisplacementKind {
    /// Uniform shift along the axis.
    Translation,
    /// Homologous expansion ξ = εx.
    Dilation,
    /// Lowest radial eigenmode.
    Mode,
}

params! {
    LaneEmdenParams {
        /// Polytropic index ν in [0, 5].
        nu: f64,
        /// Emit (ν, ξ₁, μ₁) for the classical indices instead of a profile.
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        table: bool,
        /// Profile samples.
        points: usize,
        /// End of the sampled range; defaults to ξ₁ (20 for ν = 5).
        xi_max: f64,
        /// Root tolerance for ξ₁.
        tol: f64,
    }
}

params! {
    EquilibriumParams {
        /// Pressure constant A of P = Aρ^γ.
        #[arg(alias = "A")]
        a: f64,
        gamma: f64,
        /// Central density.
        rho_c: f64,
        /// Gravitational constant.
        #[arg(alias = "G")]
        g: f64,
        /// Radial samples on [0, R].
        points: usize,
    }
}

params! {
    PotentialParams {
        /// Built-in density, ignored when `input` is given.
        #[arg(value_enum)]
        density: DensityKind,
        /// Density field file (AXIF binary or text).
        input: PathBuf,
        /// γ of the polytrope density.
        gamma: f64,
        /// Radial cells of the built-in density grid.
        nr: usize,
        /// Gauss–Legendre ζ nodes of the built-in density grid.
        nz: usize,
        #[arg(value_enum)]
        method: PotentialMethod,
        /// Highest Legendre order of the expansion.
        m_max: usize,
        /// Gravitational constant.
        #[arg(alias = "G")]
        g: f64,
        /// Also write Φ as an AXIF binary field here.
        field_out: PathBuf,
    }
}

params! {
    KernelsParams {
        r: f64,
        zeta: f64,
        rp: f64,
        zetap: f64,
        /// Gauss–Legendre points of the azimuthal rule.
        n_beta: usize,
    }
}

params! {
    AdvectParams {
        #[arg(value_enum)]
        flow: FlowKind,
        /// Rate of the radial flow V = αϖ.
        alpha: f64,
        /// Circulation rate of the vortex flow.
        kappa: f64,
        /// Swirl amplitude of V = aϖ cos t.
        swirl_a: f64,
        /// Swirl amplitude of W = b sin t.
        swirl_b: f64,
        #[arg(value_enum)]
        omega0: Omega0Kind,
        /// Initial Ω⁰ as a field file (AXIF binary or text), in either chart.
        omega0_file: PathBuf,
        /// Constant of the initial profile.
        c: f64,
        /// Evaluation time.
        t: f64,
        /// Cylindrical radius samples on (0, w-max].
        nw: usize,
        /// Height samples on [−z-max, z-max].
        nz: usize,
        w_max: f64,
        z_max: f64,
        /// Tracer tolerance.
        tol: f64,
    }
}

params! {
    DiagnosticsParams {
        /// Density field files (AXIF binary or text) of successive states,
        /// instead of a polytrope; several files add a drift report.
        state: Vec<PathBuf>,
        gamma: f64,
        a: f64,
        rho_c: f64,
        /// Gravitational constant.
        #[arg(alias = "G")]
        g: f64,
        nr: usize,
        nz: usize,
        /// Uniform angular velocity of the state.
        omega: f64,
    }
}

params! {
    PerturbApplyParams {
        /// Background density file (AXIF, (r, ζ) chart) instead of a polytrope;
        /// its enthalpy and potential follow from the pressure law.
        background: PathBuf,
        /// γ of the background pressure law.
        gamma: f64,
        /// Pressure constant A of the background law.
        a: f64,
        /// Relative stationary residual accepted for the background.
        stationary_tol: f64,
        nr: usize,
        nz: usize,
        #[arg(value_enum)]
        displacement: DisplacementKind,
        /// Three component files (AXIF) of a displacement on the background
        /// grid, in the chart given by `chart`; overrides `displacement`.
        displacement_file: Vec<PathBuf>,
        #[arg(value_enum)]
        chart: ChartKind,
        amplitude: f64,
        /// Radial elements of the eigensolver for `mode`.
        elements: usize,
    }
}

params! {
    ModesParams {
        gamma: f64,
        /// Number of modes reported.
        n: usize,
        /// Radial finite elements.
        elements: usize,
        rho_c: f64,
        /// Emit the eigenfunctions on the element nodes instead of the ω² list.
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        eigenfunctions: bool,
        /// Also bisect for the γ where the lowest ω² changes sign on [1.30, 1.36].
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        find_crossing: bool,
    }
}

params! {
    CheckParams {
        /// Fewer samples and coarser refinement ladders.
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        quick: bool,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalConfig {
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "kebab-case")]
pub struct RunConfig {
    pub global: GlobalConfig,
    pub lane_emden: LaneEmdenParams,
    pub equilibrium: EquilibriumParams,
    pub potential: PotentialParams,
    pub kernels: KernelsParams,
    pub advect: AdvectParams,
    pub diagnostics: DiagnosticsParams,
    pub perturb_apply: PerturbApplyParams,
    pub modes: ModesParams,
    pub frames_check: CheckParams,
    pub formulas_check: CheckParams,
    pub verify_all: CheckParams,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}
