use std::f64::consts::PI;

use eulerpoisson::diagnostics::{
    angular_momentum, drift_report, energy_parts, total_energy, total_mass, AxiState, VelocityFields,
};
use eulerpoisson::eos::GasLaw;
use eulerpoisson::field::{AxiField, AxiGrid, Chart};
use eulerpoisson::polytrope::{build_equilibrium, polytrope_energy};
use eulerpoisson::transport::{advect_omega_cyl, trace_characteristic, MeridionalFlow};

#[test]
fn uniform_sphere_energy_with_kernel_potential() {
    let law = GasLaw::new(1.0, 2.0).unwrap();
    let grid = AxiGrid::rzeta(AxiGrid::uniform(65, 1.0), 4).unwrap();
    let rho = AxiField::from_fn(grid, 1.0, |_, _| 1.0).unwrap();
    let s = AxiState::new(0.0, rho, None, None, law, 1.0).unwrap();
    let m = 4.0 * PI / 3.0;
    let e = energy_parts(&s).unwrap();
    assert!((e.internal - m).abs() <= 1e-10);
    assert!((e.gravitational + 0.6 * m * m).abs() <= 1e-5 * 0.6 * m * m, "{}", e.gravitational);
    assert!((e.total() - (m - 0.6 * m * m)).abs() <= 1e-5 * (m - 0.6 * m * m).abs());
}

#[test]
fn polytrope_integrals_match_closed_forms() {
    let law = GasLaw::new(1.0, 2.0).unwrap();
    let eq = build_equilibrium(&law, 1.0, 1.0).unwrap();
    let grid = AxiGrid::rzeta(AxiGrid::uniform(401, eq.radius), 2).unwrap();
    let s = AxiState::new(0.0, eq.rho_field(&grid).unwrap(), None, Some(eq.phi_field(&grid).unwrap()), law, 1.0).unwrap();
    assert!((total_mass(&s) - eq.mass).abs() <= 1e-6 * eq.mass);
    let reference = polytrope_energy(&eq).unwrap();
    let e = total_energy(&s).unwrap();
    assert!((e - reference.closed_form).abs() <= 1e-5 * reference.closed_form.abs(), "{e} {}", reference.closed_form);
}

fn gaussian_state(chart: Chart) -> AxiState {
    let law = GasLaw::new(1.0, 5.0 / 3.0).unwrap();
    let rho = |w: f64, z: f64| (-(w * w + 2.0 * z * z)).exp();
    let omega = |w: f64, z: f64| 0.5 + 0.2 * w * w - 0.1 * z * z;
    let grid = match chart {
        Chart::Cylindrical => AxiGrid::cylindrical(AxiGrid::uniform(801, 7.0), 64, 7.0).unwrap(),
        Chart::RZeta => AxiGrid::rzeta(AxiGrid::uniform(801, 7.0), 64).unwrap(),
    };
    let cyl = move |a: f64, b: f64| match chart {
        Chart::Cylindrical => (a, b),
        Chart::RZeta => (a * (1.0 - b * b).sqrt(), a * b),
    };
    let f = |g: &dyn Fn(f64, f64) -> f64| {
        AxiField::from_fn(grid.clone(), 7.0, |a, b| {
            let (w, z) = cyl(a, b);
            g(w, z)
        })
        .unwrap()
    };
    let vel = VelocityFields {
        radial: AxiField::zeros(grid.clone()),
        vertical: AxiField::zeros(grid.clone()),
        omega: f(&omega),
    };
    AxiState::new(0.0, f(&rho), Some(vel), Some(AxiField::zeros(grid.clone())), law, 1.0).unwrap()
}

#[test]
fn charts_agree() {
    let (c, s) = (gaussian_state(Chart::Cylindrical), gaussian_state(Chart::RZeta));
    let (mc, ms) = (total_mass(&c), total_mass(&s));
    let exact = PI.powf(1.5) / 2f64.sqrt();
    assert!((mc - exact).abs() <= 1e-8 * exact && (ms - exact).abs() <= 1e-8 * exact, "{mc} {ms} {exact}");
    let (jc, js) = (angular_momentum(&c), angular_momentum(&s));
    assert!((jc - js).abs() <= 1e-8 * jc.abs(), "{jc} {js}");
    let (ec, es) = (energy_parts(&c).unwrap(), energy_parts(&s).unwrap());
    assert!((ec.kinetic - es.kinetic).abs() <= 1e-8 * ec.kinetic);
}

#[test]
fn angular_momentum_is_conserved_under_incompressible_flow() {
    // V = −(1/ϖ) ∂ψ/∂z, W = (1/ϖ) ∂ψ/∂ϖ with ψ = ϖ² e^{−(ϖ² + z²)}.
    let flow = MeridionalFlow::new(Chart::Cylindrical, true, |_, w, z| {
        let e = (-(w * w + z * z)).exp();
        [2.0 * w * z * e, (2.0 - 2.0 * w * w) * e]
    });
    let rho0 = |w: f64, z: f64| (-4.0 * ((w - 0.8).powi(2) + z * z)).exp();
    let omega0 = |w: f64, _: f64| 1.0 / (1.0 + w * w);
    let grid = AxiGrid::cylindrical(AxiGrid::uniform(241, 3.0), 64, 3.0).unwrap();
    let law = GasLaw::new(1.0, 5.0 / 3.0).unwrap();
    let states: Vec<AxiState> = [0.0, 0.5, 1.0]
        .into_iter()
        .map(|t| {
            let rho: Vec<f64> = grid
                .points()
                .iter()
                .map(|&p| {
                    let [w0, z0] = trace_characteristic(&flow, t, p, 0.0, 1e-11).unwrap();
                    rho0(w0, z0)
                })
                .collect();
            let rho = AxiField::new(grid.clone(), rho, 3.0).unwrap();
            // Ω on the axis carries zero weight in J and in the kinetic energy.
            let omega: Vec<f64> = grid
                .points()
                .iter()
                .map(|&[w, z]| if w == 0.0 { 0.0 } else { advect_omega_cyl(&flow, &omega0, t, w, z, 1e-11).unwrap() })
                .collect();
            let omega = AxiField::new(grid.clone(), omega, f64::INFINITY).unwrap();
            let zeros = AxiField::zeros(grid.clone());
            let vel = VelocityFields { radial: zeros.clone(), vertical: zeros.clone(), omega };
            AxiState::new(t, rho, Some(vel), Some(zeros), law.clone(), 1.0).unwrap()
        })
        .collect();
    let rep = drift_report(&states).unwrap();
    assert!(rep.angular_momentum <= 1e-6, "J drift {}", rep.angular_momentum);
}
