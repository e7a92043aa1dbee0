use std::f64::consts::PI;

use eulerpoisson::eos::GasLaw;
use eulerpoisson::field::{AxiField, AxiGrid};
use eulerpoisson::frames::Vec3;
use eulerpoisson::perturb::{
    check_formula1, lagrangian_change, lagrangian_continuity, lebovitz_displacement, linearized_delta_rho, ll1_defect,
    mode_timestep, radial_mode_eigen, Background, Displacement, DisplacementChart, Forcing, Formula1Data, ModeState,
    PerturbOperator, StepOptions, STATIONARY_TOL,
};
use eulerpoisson::polytrope::{build_equilibrium, Equilibrium};
use proptest::prelude::*;

fn gamma2() -> Equilibrium {
    build_equilibrium(&GasLaw::new(1.0, 2.0).unwrap(), 1.0, 1.0).unwrap()
}

fn operator(eq: &Equilibrium, nr: usize, nz: usize) -> PerturbOperator {
    let grid = AxiGrid::rzeta(AxiGrid::cell_centred(nr, eq.radius), nz).unwrap();
    PerturbOperator::new(Background::from_equilibrium(eq, &grid).unwrap()).unwrap()
}

fn max_norm(a: &[AxiField]) -> f64 {
    (0..a[0].values.len()).map(|k| a.iter().map(|f| f.values[k].powi(2)).sum::<f64>().sqrt()).fold(0.0, f64::max)
}

#[test]
fn translation_is_neutral_and_converges() {
    let eq = gamma2();
    let mut prev: Option<f64> = None;
    for nr in [24, 48, 96] {
        let op = operator(&eq, nr, 4);
        let disp = Displacement::cartesian_from_fn(op.background().grid(), |_, _| [0.0, 0.0, 1.0]).unwrap();
        let acc = max_norm(&op.acceleration_cartesian(&disp).unwrap());
        let axi = disp.to_chart(DisplacementChart::Axisymmetric).unwrap();
        let [a1, a2] = op.acceleration_axisymmetric(&axi.components[0], &axi.components[1], &Forcing::default()).unwrap();
        let back = Displacement::new(DisplacementChart::Axisymmetric, [a1, a2, AxiField::zeros(axi.grid().clone())], None)
            .unwrap()
            .to_chart(DisplacementChart::Cartesian)
            .unwrap();
        assert!(max_norm(&back.components) <= 2.0 * acc + 1e-12, "{} {acc}", max_norm(&back.components));
        if let Some(p) = prev {
            assert!((p / acc).log2() >= 1.5, "order {} at nr = {nr}", (p / acc).log2());
        }
        prev = Some(acc);
    }
    assert!(prev.unwrap() <= 1e-4);
}

#[test]
fn charts_agree_without_rotation() {
    let eq = gamma2();
    let op = operator(&eq, 40, 8);
    let grid = op.background().grid().clone();
    let disp = Displacement::cartesian_from_fn(&grid, |r, z| {
        let w = r * (1.0 - z * z).sqrt();
        [0.05 * w * (1.0 + r * r), 0.0, 0.02 * (1.0 + r * z) + 0.03 * r * r]
    })
    .unwrap();
    let cart = op.acceleration_cartesian(&disp).unwrap();
    let axi = disp.to_chart(DisplacementChart::Axisymmetric).unwrap();
    let [a1, a2] = op.acceleration_axisymmetric(&axi.components[0], &axi.components[1], &Forcing::default()).unwrap();
    let mapped = Displacement::new(DisplacementChart::Axisymmetric, [a1, a2, AxiField::zeros(grid.clone())], None)
        .unwrap()
        .to_chart(DisplacementChart::Cartesian)
        .unwrap();
    let scale = max_norm(&cart);
    for m in [0, 2] {
        for k in 0..grid.len() {
            let d = (mapped.components[m].values[k] - cart[m].values[k]).abs();
            assert!(d <= 1e-6 * scale, "component {m} node {k}: {d:e} vs scale {scale:e}");
        }
    }
}

#[test]
fn equatorial_parity_is_preserved() {
    let eq = gamma2();
    let op = operator(&eq, 24, 8);
    let grid = op.background().grid().clone();
    let eta1 = AxiField::from_fn(grid.clone(), f64::INFINITY, |r, z| 0.01 * r * (1.0 + z * z)).unwrap();
    let eta2 = AxiField::from_fn(grid.clone(), f64::INFINITY, |r, z| 0.01 * z * (1.0 - z * z) * (1.0 + r)).unwrap();
    let [a1, a2] = op.acceleration_axisymmetric(&eta1, &eta2, &Forcing::default()).unwrap();
    assert!(a1.asymmetry(false).unwrap() <= 1e-10 * a1.max_abs());
    assert!(a2.asymmetry(true).unwrap() <= 1e-10 * a2.max_abs());
}

#[test]
fn zero_displacement_has_zero_acceleration() {
    let eq = gamma2();
    let op = operator(&eq, 12, 4);
    let zero = Displacement::zeros(DisplacementChart::Cartesian, op.background().grid());
    assert_eq!(max_norm(&op.acceleration_cartesian(&zero).unwrap()), 0.0);
    let z = AxiField::zeros(op.background().grid().clone());
    let state = ModeState::at_rest(0.0, z.clone(), z).unwrap();
    let opts = StepOptions { dt: 1e-3, n_steps: 20, growth_limit: 10.0 };
    let (end, reports) = mode_timestep(&op, state, &Forcing::default(), &opts, |_| {}).unwrap();
    assert!(end.eta1.values.iter().chain(&end.rate2.values).all(|v| *v == 0.0));
    assert!(reports.iter().all(|r| r.energy_norm == 0.0));
}

#[test]
fn pole_violation_is_rejected() {
    let eq = gamma2();
    let op = operator(&eq, 12, 4);
    let grid = op.background().grid().clone();
    let eta2 = AxiField::from_fn(grid.clone(), f64::INFINITY, |_, _| 0.1).unwrap();
    assert!(op.acceleration_axisymmetric(&AxiField::zeros(grid), &eta2, &Forcing::default()).is_err());
}

/// Polytrope with ū = ū_static + Ω̄²ϖ²/2, which satisfies the rotating
/// stationary balance with the static potential.
fn rotating_background(eq: &Equilibrium, omega: f64, nr: usize) -> Background {
    let grid = AxiGrid::rzeta(AxiGrid::cell_centred(nr, eq.radius), 4).unwrap();
    let u = eq.u_field(&grid).unwrap();
    let spin: Vec<f64> =
        grid.points().iter().zip(&u.values).map(|([r, z], u)| u + 0.5 * omega * omega * r * r * (1.0 - z * z)).collect();
    let u = u.with_values(spin).unwrap();
    Background::new(eq.rho_field(&grid).unwrap(), u, eq.phi_field(&grid).unwrap(), omega, eq.law.clone(), eq.g, STATIONARY_TOL)
        .unwrap()
}

#[test]
fn pure_coriolis_response() {
    let eq = gamma2();
    let om = 0.3;
    let op = PerturbOperator::new(rotating_background(&eq, om, 12)).unwrap();
    let grid = op.background().grid().clone();
    let mut disp = Displacement::zeros(DisplacementChart::Cartesian, &grid);
    let one = AxiField::from_fn(grid.clone(), f64::INFINITY, |_, _| 1.0).unwrap();
    let z = AxiField::zeros(grid.clone());
    disp.rates = Some([one, z.clone(), z]);
    let a = op.acceleration_cartesian(&disp).unwrap();
    for k in 0..grid.len() {
        assert_eq!([a[0].values[k], a[1].values[k], a[2].values[k]], [0.0, -2.0 * om, 0.0]);
    }
    let spun = op.background().u.clone();
    let wrong = Background::new(eq.rho_field(&grid).unwrap(), spun, eq.phi_field(&grid).unwrap(), 0.0, eq.law.clone(), 1.0, STATIONARY_TOL);
    assert!(wrong.is_err());
}

#[test]
fn angular_momentum_forcing_enters_as_stated() {
    let eq = gamma2();
    let om = 0.3;
    let op = PerturbOperator::new(rotating_background(&eq, om, 12)).unwrap();
    let grid = op.background().grid().clone();
    let z = AxiField::zeros(grid.clone());
    let w = AxiField::from_fn(grid.clone(), f64::INFINITY, |_, _| 0.5).unwrap();
    let forcing = Forcing { q_init: None, omega_init: Some(w) };
    let [a1, a2] = op.acceleration_axisymmetric(&z, &z, &forcing).unwrap();
    for (k, [r, zeta]) in grid.points().into_iter().enumerate() {
        let c = 1.0 - zeta * zeta;
        assert!((a1.values[k] - 2.0 * r * c * om * 0.5).abs() <= 1e-15);
        assert!((a2.values[k] + 2.0 * zeta * c * om * 0.5).abs() <= 1e-15);
    }
}

#[test]
fn radial_pulse_oscillates_at_the_fundamental_frequency() {
    let eq = gamma2();
    let modes = radial_mode_eigen(&eq, 200, 1).unwrap();
    let omega = modes.omega2[0].sqrt();
    let op = operator(&eq, 40, 2);
    let grid = op.background().grid().clone();
    let eta1 = AxiField::from_fn(grid.clone(), f64::INFINITY, |r, _| 1e-3 * modes.eigenfunction(0, r)).unwrap();
    let state = ModeState::at_rest(0.0, eta1, AxiField::zeros(grid.clone())).unwrap();
    let dt = 0.5 * eulerpoisson::perturb::max_stable_dt(&op);
    let period = 2.0 * PI / omega;
    let n_steps = (2.5 * period / dt).ceil() as usize;
    let probe = grid.nr() * grid.nz() - 1;
    let mut series = vec![(0.0, state.eta1.values[probe])];
    let opts = StepOptions { dt, n_steps, growth_limit: 100.0 };
    mode_timestep(&op, state, &Forcing::default(), &opts, |s| series.push((s.t, s.eta1.values[probe]))).unwrap();
    let crossings: Vec<f64> = series
        .windows(2)
        .filter(|w| w[0].1 > 0.0 && w[1].1 <= 0.0 || w[0].1 < 0.0 && w[1].1 >= 0.0)
        .map(|w| w[0].0 + (w[1].0 - w[0].0) * w[0].1 / (w[0].1 - w[1].1))
        .collect();
    assert!(crossings.len() >= 4, "{crossings:?}");
    let measured = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64 * 2.0;
    assert!((measured - period).abs() <= 0.05 * period, "period {measured} vs {period}");
}

#[test]
fn translation_trajectory_drifts_without_blowup() {
    let eq = gamma2();
    let op = operator(&eq, 24, 4);
    let disp = Displacement::cartesian_from_fn(op.background().grid(), |_, _| [0.0, 0.0, 0.01]).unwrap();
    let axi = disp.to_chart(DisplacementChart::Axisymmetric).unwrap();
    let [e1, e2, _] = axi.components;
    let state = ModeState::at_rest(0.0, e1, e2).unwrap();
    let dt = eulerpoisson::perturb::max_stable_dt(&op);
    let opts = StepOptions { dt, n_steps: 400, growth_limit: 10.0 };
    let (_, reports) = mode_timestep(&op, state, &Forcing::default(), &opts, |_| {}).unwrap();
    let d0 = reports[0].max_displacement;
    assert!(reports.iter().all(|r| (r.max_displacement - d0).abs() <= 0.05 * d0), "{:?}", reports.last());
}

#[test]
fn continuity_examples() {
    let grid = AxiGrid::rzeta(AxiGrid::cell_centred(16, 1.0), 6).unwrap();
    let rho = AxiField::from_fn(grid.clone(), 1.0, |r, z| (1.0 - r * r) * (1.0 + 0.2 * z * z)).unwrap();
    let zero = Displacement::zeros(DisplacementChart::Cartesian, &grid);
    assert_eq!(lagrangian_continuity(&rho, &zero).unwrap().values, rho.values);
    let eps = 0.05;
    let dil = Displacement::cartesian_from_fn(&grid, |r, z| [eps * r * (1.0 - z * z).sqrt(), 0.0, eps * r * z]).unwrap();
    let axi = Displacement::axisymmetric_from_fn(&grid, |r, _| [eps * r, 0.0, 0.0]).unwrap();
    let (c, a) = (lagrangian_continuity(&rho, &dil).unwrap(), lagrangian_continuity(&rho, &axi).unwrap());
    for k in 0..grid.len() {
        let exact = rho.values[k] / (1.0 + eps).powi(3);
        assert!((c.values[k] - exact).abs() <= 1e-12 && (a.values[k] - exact).abs() <= 1e-12);
    }
    let fold = Displacement::axisymmetric_from_fn(&grid, |r, _| [-2.0 * r, 0.0, 0.0]).unwrap();
    assert!(lagrangian_continuity(&rho, &fold).is_err());
}

#[test]
fn linearized_continuity_is_second_order_accurate() {
    let grid = AxiGrid::rzeta(AxiGrid::cell_centred(32, 1.0), 8).unwrap();
    let rho = AxiField::from_fn(grid.clone(), 1.0, |r, _| 1.0 - r * r).unwrap();
    let shape = |r: f64, z: f64| [0.3 * r * (1.0 + z * z), 0.2 * z * (1.0 - z * z), 0.0];
    let errs: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&eps| {
            let d = Displacement::axisymmetric_from_fn(&grid, |r, z| shape(r, z).map(|v| eps * v)).unwrap();
            let exact = lagrangian_continuity(&rho, &d).unwrap();
            let lin = linearized_delta_rho(&d, &rho, None).unwrap();
            (0..grid.len()).map(|k| (exact.values[k] - rho.values[k] - lin.values[k]).abs()).fold(0.0, f64::max)
        })
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
    }
    let zero = Displacement::zeros(DisplacementChart::Axisymmetric, &grid);
    let init = AxiField::from_fn(grid.clone(), 1.0, |r, z| r * z).unwrap();
    assert_eq!(linearized_delta_rho(&zero, &rho, Some(&init)).unwrap().values, init.values);
}

#[test]
fn lebovitz_displacement_of_a_linear_flow() {
    // A = [[0, 1, 0], [−1, 0, 0], [0, 0, 0.5]]: e^{At} rotates the (x¹, x²) plane
    // and stretches x³.
    let u = |_: f64, x: Vec3| [x[1], -x[0], 0.5 * x[2]];
    let ub = |_: f64, _: Vec3| [0.0; 3];
    let (t0, t, x): (f64, f64, Vec3) = (0.2, 1.7, [0.3, -0.4, 0.9]);
    let s = t - t0;
    let exp = [x[0] * s.cos() + x[1] * s.sin(), -x[0] * s.sin() + x[1] * s.cos(), x[2] * (0.5 * s).exp()];
    let xi = lebovitz_displacement(&u, &ub, t0, t, x, 1e-12).unwrap();
    for k in 0..3 {
        assert!((xi[k] - (exp[k] - x[k])).abs() <= 1e-8, "{xi:?}");
    }
}

#[test]
fn ll1_defect_is_quadratic_in_amplitude() {
    let q = |x: Vec3| (x[0] + 0.5 * x[1]).sin() * (0.3 * x[2]).exp();
    let qb = |x: Vec3| x[0] * x[1];
    let grad = |x: Vec3| {
        let (s, c, e) = ((x[0] + 0.5 * x[1]).sin(), (x[0] + 0.5 * x[1]).cos(), (0.3 * x[2]).exp());
        [c * e, 0.5 * c * e, 0.3 * s * e]
    };
    let x = [0.2, 0.4, -0.3];
    assert_eq!(lagrangian_change(&q, &qb, [0.0; 3], x), q(x) - qb(x));
    let d: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&e| ll1_defect(&q, &qb, &grad, [e, -0.5 * e, 0.8 * e], x).abs()).collect();
    for w in d.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.9, "{d:?}");
    }
}

#[test]
fn formula1_converges_for_rotation_plus_radial_flow() {
    let ub = |_: f64, x: Vec3| [-x[1], x[0], 0.0];
    let u = |_: f64, x: Vec3| [-x[1] + 0.1 * x[0], x[0] + 0.1 * x[1], 0.1 * x[2]];
    let q = |_: f64, x: Vec3| x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let d = Formula1Data { u: &u, u_bar: &ub, q: &q, q_bar: &q, t0: 0.0, tol: 1e-13 };
    let res: Vec<f64> =
        [0.04, 0.02, 0.01].iter().map(|&h| check_formula1(&d, 0.8, [0.5, 0.2, 0.3], h).unwrap().residual).collect();
    for w in res.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.9, "{res:?}");
    }
    let same = Formula1Data { u: &ub, u_bar: &ub, q: &q, q_bar: &q, t0: 0.0, tol: 1e-12 };
    let r = check_formula1(&same, 0.8, [0.5, 0.2, 0.3], 1e-3).unwrap();
    assert!(r.lhs.abs() <= 1e-9 && r.rhs.abs() <= 1e-9, "{r:?}");
}

proptest! {
    #[test]
    fn product_and_chain_rules(a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64,
                               x0 in -1.0..1.0f64, x1 in -1.0..1.0f64, x2 in -1.0..1.0f64) {
        use eulerpoisson::perturb::{check_formula3, check_formula4};
        let q1 = move |x: Vec3| (a * x[0]).sin() + b * x[1] * x[2];
        let q1b = move |x: Vec3| (c * x[2]).cos();
        let q2 = move |x: Vec3| (0.5 * a * x[1]).exp();
        let q2b = move |x: Vec3| 1.0 + c * x[0];
        let (xi, x) = ([0.1 * a, 0.2 * b, -0.1 * c], [x0, x1, x2]);
        let r3 = check_formula3(&q1, &q1b, &q2, &q2b, xi, x);
        prop_assert!(r3.residual <= 1e-10);
        let r4 = check_formula4(&|s: f64| s.exp(), &|s: f64| s.exp(), &q1, &q1b, xi, x).unwrap();
        prop_assert!(r4.residual <= 1e-10);
    }

    #[test]
    fn chart_round_trip(a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64) {
        let grid = AxiGrid::rzeta(AxiGrid::cell_centred(6, 1.0), 4).unwrap();
        let d = Displacement::cartesian_from_fn(&grid, |r, z| [a * r, b * z, c * r * z]).unwrap();
        let back = d.to_chart(DisplacementChart::Axisymmetric).unwrap().to_chart(DisplacementChart::Cartesian).unwrap();
        for m in 0..3 {
            for k in 0..grid.len() {
                prop_assert!((back.components[m].values[k] - d.components[m].values[k]).abs() <= 1e-14);
            }
        }
    }
}
