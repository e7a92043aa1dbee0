//! Subcommand implementations; each returns the table to write.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use rayon::prelude::*;

use eulerpoisson::diagnostics::{conserved, drift_report, energy_parts, symmetry_check, AxiState, VelocityFields};
use eulerpoisson::eos::GasLaw;
use eulerpoisson::field::io::{read_binary, read_text, write_binary, MAGIC};
use eulerpoisson::field::{AxiField, AxiGrid, Chart, FieldInterp};
use eulerpoisson::gravity::{
    kernel_kii, kernel_kiii, potential, potential_expansion, KernelQuadSpec, PotentialOptions,
};
use eulerpoisson::numerics::gauss::legendre;
use eulerpoisson::numerics::quad::{integrate_with_breaks, QuadOptions};
use eulerpoisson::perturb::{
    radial_mode_eigen, stability_crossing, Background, Displacement, DisplacementChart, Forcing, PerturbOperator,
};
use eulerpoisson::polytrope::{build_equilibrium, polytrope_energy, solve_lane_emden};
use eulerpoisson::transport::{advect_omega_cyl, BuiltinFlow, InitialOmega};
use eulerpoisson::verify::{run_all, run_criterion, CriterionResult, VerifyOptions, CLASSICAL_TABLE, NU5_MU_LIMIT};

use crate::config::*;
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

/// Table plus an optional failure reported after it is written.
pub struct Outcome {
    pub table: Table,
    pub failure: Option<String>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Self { table, failure: None }
    }
}

fn read_field(path: &Path) -> CliResult<AxiField> {
    let bytes = fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let field = if bytes.starts_with(MAGIC) { read_binary(&bytes[..])? } else { read_text(BufReader::new(&bytes[..]))? };
    Ok(field)
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{name} must be positive and finite, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> CliResult<usize> {
    if v >= min {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{name} must be at least {min}, got {v}")))
    }
}

pub fn lane_emden(p: LaneEmdenParams) -> CliResult<Outcome> {
    let tol = positive("tol", p.tol.unwrap_or(1e-12))?;
    if p.table.unwrap_or(false) {
        let mut t = Table::new(&["nu", "xi1", "mu1", "xi1_reference", "mu1_reference"]);
        for (nu, xi1, mu1) in CLASSICAL_TABLE.into_iter().chain([(5.0, f64::INFINITY, NU5_MU_LIMIT)]) {
            let le = solve_lane_emden(nu, tol)?;
            t.push(vec![nu.into(), le.xi1.into(), le.mu1.into(), xi1.into(), mu1.into()]);
        }
        return Ok(t.into());
    }
    let nu = p.nu.ok_or_else(|| CliError::Usage("lane-emden needs --nu or --table".into()))?;
    let le = solve_lane_emden(nu, tol)?;
    let points = at_least("points", p.points.unwrap_or(101), 2)?;
    let xi_max = match p.xi_max {
        Some(x) => positive("xi-max", x)?,
        None if le.has_finite_radius() => le.xi1,
        None => 20.0,
    };
    let mut t = Table::new(&["xi", "theta", "dtheta"]).meta("nu", nu).meta("xi1", le.xi1).meta("mu1", le.mu1);
    for k in 0..points {
        let xi = xi_max * k as f64 / (points - 1) as f64;
        let [th, dth] = le.eval(xi)?;
        t.push(vec![xi.into(), th.into(), dth.into()]);
    }
    Ok(t.into())
}

pub fn equilibrium(p: EquilibriumParams) -> CliResult<Outcome> {
    let law = GasLaw::new(p.a.unwrap_or(1.0), p.gamma.unwrap_or(5.0 / 3.0))?;
    let eq = build_equilibrium(&law, p.rho_c.unwrap_or(1.0), p.g.unwrap_or(1.0))?;
    let en = polytrope_energy(&eq)?;
    let points = at_least("points", p.points.unwrap_or(101), 2)?;
    let mut t = Table::new(&["r", "rho", "enthalpy", "phi", "dphi_dr"])
        .meta("radius", eq.radius)
        .meta("mass", eq.mass)
        .meta("length_scale", eq.a)
        .meta("energy", en.direct)
        .meta("energy_closed_form", en.closed_form);
    for k in 0..points {
        let r = eq.radius * k as f64 / (points - 1) as f64;
        t.push(vec![
            r.into(),
            eq.density(r)?.into(),
            eq.enthalpy(r)?.into(),
            eq.potential(r)?.into(),
            eq.potential_slope(r)?.into(),
        ]);
    }
    Ok(t.into())
}

pub fn potential_cmd(p: PotentialParams) -> CliResult<Outcome> {
    let nr = at_least("nr", p.nr.unwrap_or(64), 2)?;
    let nz = at_least("nz", p.nz.unwrap_or(16), 1)?;
    let g = positive("g", p.g.unwrap_or(1.0))?;
    let method = p.method.unwrap_or(PotentialMethod::Quadrature);
    let rho = match &p.input {
        Some(path) => read_field(path)?,
        None => match p.density.unwrap_or(DensityKind::UniformSphere) {
            DensityKind::UniformSphere => {
                let grid = AxiGrid::rzeta(AxiGrid::cell_centred(nr, 1.0), nz)?;
                AxiField::from_fn(grid, 1.0, |_, _| 1.0)?.mark_symmetric()?
            }
            DensityKind::Oblate => {
                let grid = AxiGrid::rzeta(AxiGrid::cell_centred(nr, 1.0), nz)?;
                AxiField::from_fn(grid, 1.0, |r, z| (1.0 - r * r).max(0.0) * (1.0 + 0.1 * legendre(2, z)))?
                    .mark_symmetric()?
            }
            DensityKind::Polytrope => {
                let eq = build_equilibrium(&GasLaw::new(1.0, p.gamma.unwrap_or(2.0))?, 1.0, g)?;
                eq.rho_field(&AxiGrid::rzeta(AxiGrid::cell_centred(nr, eq.radius), nz)?)?
            }
        },
    };
    let phi = match method {
        PotentialMethod::Quadrature => potential(&rho, &rho.grid, &PotentialOptions { g, ..Default::default() })?,
        PotentialMethod::Expansion => potential_expansion(&rho, p.m_max.unwrap_or(8), &rho.grid, g)?,
    };
    if let Some(path) = &p.field_out {
        let file = fs::File::create(path).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?;
        write_binary(&phi, std::io::BufWriter::new(file))?;
    }
    let mut t = Table::new(&["r", "zeta", "rho", "phi"]).meta("nr", rho.nr()).meta("nz", rho.nz());
    for (k, [a, b]) in rho.grid.points().into_iter().enumerate() {
        t.push(vec![a.into(), b.into(), rho.values[k].into(), phi.values[k].into()]);
    }
    Ok(t.into())
}

pub fn kernels(p: KernelsParams) -> CliResult<Outcome> {
    let spec = KernelQuadSpec { n_beta: p.n_beta.unwrap_or(KernelQuadSpec::default().n_beta), ..Default::default() };
    let quad = spec.prepare()?;
    let (r, z, rp, zp) = (p.r.unwrap_or(1.0), p.zeta.unwrap_or(0.3), p.rp.unwrap_or(0.6), p.zetap.unwrap_or(-0.2));
    let kii = kernel_kii(r, z, rp, zp, &quad)?;
    let kiii = kernel_kiii(r, rp)?;
    let mut failure = None;
    let reduced = integrate_with_breaks(
        |s| {
            kernel_kii(r, z, rp, s, &quad).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                0.0
            })
        },
        -1.0,
        1.0,
        &[z],
        QuadOptions::new(1e-13, 1e-12),
    )?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let mut t = Table::new(&["r", "zeta", "rp", "zetap", "k_ii", "k_iii", "k_ii_zeta_integral"]);
    t.push(vec![r.into(), z.into(), rp.into(), zp.into(), kii.into(), kiii.into(), reduced.into()]);
    Ok(t.into())
}

/// Ω⁰ in cylindrical coordinates, from a built-in profile or a field file.
enum InitialProfile {
    Builtin(Omega0Kind, f64),
    Field(FieldInterp),
}

impl InitialOmega for InitialProfile {
    fn eval(&self, w: f64, z: f64) -> eulerpoisson::Result<f64> {
        match self {
            InitialProfile::Builtin(kind, c) => Ok(match kind {
                Omega0Kind::Uniform => *c,
                Omega0Kind::InverseSquare => c / (w * w),
                Omega0Kind::Lorentzian => c / (1.0 + w * w),
            }),
            InitialProfile::Field(f) if f.chart() == Chart::RZeta => {
                let r = w.hypot(z);
                f.eval(r, if r > 0.0 { z / r } else { 0.0 })
            }
            InitialProfile::Field(f) => f.eval(w, z),
        }
    }
}

pub fn advect(p: AdvectParams) -> CliResult<Outcome> {
    let flow = match p.flow.unwrap_or(FlowKind::Swirl) {
        FlowKind::None => BuiltinFlow::None,
        FlowKind::Radial => BuiltinFlow::Radial { alpha: p.alpha.unwrap_or(0.4) },
        FlowKind::Vortex => BuiltinFlow::Vortex { kappa: p.kappa.unwrap_or(0.5) },
        FlowKind::Swirl => BuiltinFlow::Swirl { a: p.swirl_a.unwrap_or(0.3), b: p.swirl_b.unwrap_or(0.1) },
    }
    .flow();
    let c = p.c.unwrap_or(1.0);
    let kind = p.omega0.unwrap_or(Omega0Kind::Lorentzian);
    let omega0 = match &p.omega0_file {
        Some(path) => InitialProfile::Field(read_field(path)?.interpolator()),
        None => InitialProfile::Builtin(kind, c),
    };
    let (nw, nz) = (at_least("nw", p.nw.unwrap_or(8), 1)?, at_least("nz", p.nz.unwrap_or(9), 1)?);
    let (w_max, z_max) = (positive("w-max", p.w_max.unwrap_or(2.0))?, p.z_max.unwrap_or(1.0).abs());
    let (t, tol) = (p.t.unwrap_or(1.0), positive("tol", p.tol.unwrap_or(1e-10))?);
    let points: Vec<[f64; 2]> = (0..nw)
        .flat_map(|i| {
            (0..nz).map(move |j| {
                let z = if nz == 1 { 0.0 } else { -z_max + 2.0 * z_max * j as f64 / (nz - 1) as f64 };
                [w_max * (i + 1) as f64 / nw as f64, z]
            })
        })
        .collect();
    let omega = points
        .par_iter()
        .map(|&[w, z]| Ok([advect_omega_cyl(&flow, &omega0, t, w, z, tol)?, omega0.eval(w, z)?]))
        .collect::<eulerpoisson::Result<Vec<[f64; 2]>>>()?;
    let mut table = Table::new(&["w", "z", "omega", "omega0"]).meta("t", t);
    for ([w, z], [om, om0]) in points.iter().zip(omega) {
        table.push(vec![(*w).into(), (*z).into(), om.into(), om0.into()]);
    }
    Ok(table.into())
}

pub fn diagnostics(p: DiagnosticsParams) -> CliResult<Outcome> {
    let law = GasLaw::new(p.a.unwrap_or(1.0), p.gamma.unwrap_or(5.0 / 3.0))?;
    let g = positive("g", p.g.unwrap_or(1.0))?;
    let mut table = Table::new(&[
        "mass",
        "kinetic",
        "internal",
        "gravitational",
        "energy",
        "angular_momentum",
        "max_asymmetry",
    ]);
    let omega = p.omega.unwrap_or(0.0);
    let make_state = |t: f64, rho: AxiField| -> CliResult<AxiState> {
        let vel = if omega != 0.0 {
            let zero = AxiField::zeros(rho.grid.clone());
            let spin = AxiField::from_fn(rho.grid.clone(), f64::INFINITY, |_, _| omega)?;
            Some(VelocityFields { radial: zero.clone(), vertical: zero, omega: spin })
        } else {
            None
        };
        Ok(AxiState::new(t, rho, vel, None, law.clone(), g)?)
    };
    let states = match p.state.as_deref() {
        Some([]) | None => {
            let eq = build_equilibrium(&law, p.rho_c.unwrap_or(1.0), g)?;
            let grid = AxiGrid::rzeta(
                AxiGrid::cell_centred(at_least("nr", p.nr.unwrap_or(48), 2)?, eq.radius),
                at_least("nz", p.nz.unwrap_or(16), 1)?,
            )?;
            table = table.meta("reference_mass", eq.mass);
            vec![make_state(0.0, eq.rho_field(&grid)?)?]
        }
        Some(paths) => {
            paths.iter().enumerate().map(|(k, path)| make_state(k as f64, read_field(path)?)).collect::<CliResult<_>>()?
        }
    };
    if states.len() > 1 {
        let d = drift_report(&states)?;
        table = table
            .meta("drift_mass", d.mass)
            .meta("drift_energy", d.energy)
            .meta("drift_angular_momentum", d.angular_momentum);
    }
    for state in &states {
        let c = conserved(state)?;
        let parts = energy_parts(state)?;
        let asym = if state.grid().is_vertically_symmetric() { symmetry_check(state)?.max() } else { f64::NAN };
        table.push(vec![
            c.mass.into(),
            parts.kinetic.into(),
            parts.internal.into(),
            parts.gravitational.into(),
            c.energy.into(),
            c.angular_momentum.into(),
            asym.into(),
        ]);
    }
    Ok(table.into())
}

fn chart_name(chart: DisplacementChart) -> &'static str {
    match chart {
        DisplacementChart::Cartesian => "cartesian",
        DisplacementChart::Axisymmetric => "axisymmetric",
    }
}

/// Non-rotating background from a sampled density: ū is the enthalpy of ρ̄
/// and Φ̄ its potential on the same grid.
fn file_background(rho: AxiField, law: GasLaw, tol: f64) -> CliResult<Background> {
    let u = rho.values.iter().map(|&r| law.enthalpy(r)).collect::<eulerpoisson::Result<Vec<_>>>()?;
    let u = AxiField::new(rho.grid.clone(), u, rho.support_radius)?;
    let phi = potential(&rho, &rho.grid, &PotentialOptions::default())?;
    Ok(Background::new(rho, u, phi, 0.0, law, 1.0, tol)?)
}

pub fn perturb_apply(p: PerturbApplyParams) -> CliResult<Outcome> {
    let law = GasLaw::new(p.a.unwrap_or(1.0), p.gamma.unwrap_or(2.0))?;
    let eq = build_equilibrium(&law, 1.0, 1.0)?;
    let background = match &p.background {
        Some(path) => file_background(read_field(path)?, law, positive("stationary-tol", p.stationary_tol.unwrap_or(1e-3))?)?,
        None => {
            let nr = at_least("nr", p.nr.unwrap_or(48), 4)?;
            let grid = AxiGrid::rzeta(AxiGrid::cell_centred(nr, eq.radius), at_least("nz", p.nz.unwrap_or(8), 2)?)?;
            Background::from_equilibrium(&eq, &grid)?
        }
    };
    let grid = background.grid().clone();
    let mut table = Table::new(&["r", "zeta", "xi1", "xi2", "xi3", "g", "acc1", "acc2", "acc3"])
        .meta("stationary_residual", background.stationary_residual);
    let op = PerturbOperator::new(background)?;
    let amp = p.amplitude.unwrap_or(1e-3);
    let kind = p.displacement.unwrap_or(DisplacementKind::Translation);
    let from_files = match p.displacement_file.as_deref() {
        None | Some([]) => None,
        Some(paths) if paths.len() == 3 => {
            let [a, b, c] = [&paths[0], &paths[1], &paths[2]].map(|path| read_field(path));
            let chart = match p.chart.unwrap_or(ChartKind::Cartesian) {
                ChartKind::Cartesian => DisplacementChart::Cartesian,
                ChartKind::Axisymmetric => DisplacementChart::Axisymmetric,
            };
            let disp = Displacement::new(chart, [a?, b?, c?], None)?;
            grid.require_same(disp.grid())?;
            Some(disp)
        }
        Some(paths) => {
            return Err(CliError::Usage(format!("displacement-file needs 3 component files, got {}", paths.len())))
        }
    };
    let (disp, acc) = match (from_files, kind) {
        (Some(disp), _) => {
            let acc = match disp.chart {
                DisplacementChart::Cartesian => op.acceleration_cartesian(&disp)?,
                DisplacementChart::Axisymmetric => {
                    let [a1, a2] = op.acceleration_axisymmetric(
                        &disp.components[0],
                        &disp.components[1],
                        &Forcing::default(),
                    )?;
                    [a1, a2, AxiField::zeros(grid.clone())]
                }
            };
            table = table.meta("chart", chart_name(disp.chart));
            (disp, acc)
        }
        (None, DisplacementKind::Translation | DisplacementKind::Dilation) => {
            let disp = Displacement::cartesian_from_fn(&grid, |r, z| match kind {
                DisplacementKind::Translation => [0.0, 0.0, amp],
                _ => [amp * r * (1.0 - z * z).sqrt(), 0.0, amp * r * z],
            })?;
            let acc = op.acceleration_cartesian(&disp)?;
            table = table.meta("chart", "cartesian");
            (disp, acc)
        }
        (None, DisplacementKind::Mode) => {
            let modes = radial_mode_eigen(&eq, at_least("elements", p.elements.unwrap_or(200), 4)?, 1)?;
            let disp = Displacement::axisymmetric_from_fn(&grid, |r, _| [amp * modes.eigenfunction(0, r), 0.0, 0.0])?;
            let [a1, a2] = op.acceleration_axisymmetric(&disp.components[0], &disp.components[1], &Forcing::default())?;
            let w2 = modes.omega2[0];
            let target: Vec<f64> = disp.components[0].values.iter().map(|v| -w2 * v).collect();
            let scale = target.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let gap = a1.values.iter().zip(&target).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            table = table.meta("chart", "axisymmetric").meta("omega2", w2).meta("mode_residual", gap / scale);
            let zero = AxiField::zeros(grid.clone());
            (disp, [a1, a2, zero])
        }
    };
    let g = op.g_divergence(&disp)?;
    for (k, [r, z]) in grid.points().into_iter().enumerate() {
        let mut row: Vec<Cell> = vec![r.into(), z.into()];
        row.extend(disp.components.iter().map(|f| f.values[k].into()));
        row.push(g.values[k].into());
        row.extend(acc.iter().map(|f| f.values[k].into()));
        table.push(row);
    }
    Ok(table.into())
}

pub fn modes(p: ModesParams) -> CliResult<Outcome> {
    let gamma = p.gamma.unwrap_or(5.0 / 3.0);
    let rho_c = positive("rho-c", p.rho_c.unwrap_or(1.0))?;
    let elements = at_least("elements", p.elements.unwrap_or(200), 4)?;
    let n = at_least("n", p.n.unwrap_or(3), 1)?;
    let eq = build_equilibrium(&GasLaw::new(1.0, gamma)?, rho_c, 1.0)?;
    let m = radial_mode_eigen(&eq, elements, n)?;
    let mut table = if p.eigenfunctions.unwrap_or(false) {
        let names: Vec<String> = std::iter::once("r".to_string()).chain((0..m.omega2.len()).map(|k| format!("eta_{k}"))).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut table = Table::new(&names);
        for (k, w2) in m.omega2.iter().enumerate() {
            table = table.meta(&format!("omega2_{k}"), *w2);
        }
        for (i, &r) in m.nodes.iter().enumerate() {
            let mut row: Vec<Cell> = vec![r.into()];
            row.extend(m.eigenfunctions.iter().map(|v| v[i].into()));
            table.push(row);
        }
        table
    } else {
        let mut table = Table::new(&["k", "omega2"]);
        for (k, w2) in m.omega2.iter().enumerate() {
            table.push(vec![k.into(), (*w2).into()]);
        }
        table
    };
    table = table.meta("gamma", gamma).meta("omega2_coarse", m.omega2_coarse);
    if p.find_crossing.unwrap_or(false) {
        table = table.meta("gamma_crossing", stability_crossing(rho_c, 1.30, 1.36, elements, 1e-6)?);
    }
    Ok(table.into())
}

fn checks(results: Vec<CriterionResult>) -> Outcome {
    let mut table = Table::new(&["id", "name", "passed", "detail"]);
    for r in &results {
        eprintln!("{r}");
        table.push(vec![r.id.into(), r.name.into(), r.passed.into(), r.detail.clone().into()]);
    }
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    let failure = (!failed.is_empty()).then(|| format!("criteria failed: {}", failed.join(", ")));
    Outcome { table, failure }
}

pub fn check(ids: &[usize], p: CheckParams, seed: Option<u64>) -> CliResult<Outcome> {
    let opts = VerifyOptions { quick: p.quick.unwrap_or(false), seed: seed.unwrap_or(VerifyOptions::default().seed) };
    let results = if ids.is_empty() {
        run_all(&opts)
    } else {
        ids.iter().filter_map(|&id| run_criterion(id, &opts)).collect()
    };
    Ok(checks(results))
}
