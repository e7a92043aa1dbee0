//! Angular-momentum transport along characteristics of a meridional flow.
//!
//! Given (V, W) in the cylindrical chart, D(ϖ²Ω)/Dt = 0 integrates to
//! Ω(t, ϖ, z) = φ(0)²/ϖ² · Ω⁰(φ(0), ψ(0)), where (φ, ψ)(τ) is the
//! characteristic through (ϖ, z) at τ = t. In the (r, ζ) chart with
//! (v, w) = (dr/dt, dζ/dt) the invariant is r²(1−ζ²)Ω.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coords::{cyl_components_from_rzeta, rzeta_components_from_cyl, CylPoint, CylVelocity, RZetaPoint, RZetaVelocity};
use crate::error::{Error, Result};
use crate::field::{AxiField, AxiGrid, Chart, FieldInterp};
use crate::numerics::ode::{DensePath, Dopri5, OdeOptions};

type Components = dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync;

/// Meridional velocity: (V, W)(t, ϖ, z) in the cylindrical chart or
/// (v, w)(t, r, ζ) in the (r, ζ) chart.
#[derive(Clone)]
pub struct MeridionalFlow {
    pub chart: Chart,
    components: Arc<Components>,
    /// Whether the components are known to be bounded on the whole domain.
    pub bounded: bool,
}

impl std::fmt::Debug for MeridionalFlow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeridionalFlow").field("chart", &self.chart).field("bounded", &self.bounded).finish()
    }
}

impl MeridionalFlow {
    pub fn new(chart: Chart, bounded: bool, f: impl Fn(f64, f64, f64) -> [f64; 2] + Send + Sync + 'static) -> Self {
        Self { chart, components: Arc::new(f), bounded }
    }

    pub fn eval(&self, t: f64, a: f64, b: f64) -> [f64; 2] {
        (self.components)(t, a, b)
    }

    /// The same physical flow expressed in `chart`.
    pub fn in_chart(&self, chart: Chart) -> Self {
        if chart == self.chart {
            return self.clone();
        }
        let inner = self.clone();
        let f: Box<Components> = match chart {
            Chart::RZeta => Box::new(move |t, r, zeta| {
                let p = RZetaPoint::new(r, zeta, 0.0);
                let c = crate::coords::cyl_from_rzeta(p);
                let [vv, ww] = inner.eval(t, c.w, c.z);
                rzeta_components_from_cyl(CylVelocity { V: vv, Omega: 0.0, W: ww }, c)
                    .map_or([f64::NAN; 2], |q| [q.v, q.w])
            }),
            Chart::Cylindrical => Box::new(move |t, w, z| {
                let p = crate::coords::rzeta_from_cyl(CylPoint::new(w, 0.0, z));
                let [v, ww] = inner.eval(t, p.r, p.zeta);
                cyl_components_from_rzeta(RZetaVelocity { v, w: ww, Omega: 0.0 }, p).map_or([f64::NAN; 2], |q| [q.V, q.W])
            }),
        };
        Self { chart, components: Arc::from(f), bounded: self.bounded }
    }
}

/// Built-in cylindrical flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BuiltinFlow {
    /// V = W = 0.
    None,
    /// V = αϖ, W = 0, with characteristics φ(τ) = ϖ e^{α(τ−t)}.
    Radial { alpha: f64 },
    /// V = −κz, W = κ(ϖ − 1): rigid circulation about (ϖ, z) = (1, 0).
    Vortex { kappa: f64 },
    /// V = aϖ cos t, W = b sin t, with φ(τ) = ϖ e^{a(sin τ − sin t)} and
    /// ψ(τ) = z − b(cos τ − cos t).
    Swirl { a: f64, b: f64 },
}

impl BuiltinFlow {
    pub fn flow(self) -> MeridionalFlow {
        match self {
            BuiltinFlow::None => MeridionalFlow::new(Chart::Cylindrical, true, |_, _, _| [0.0, 0.0]),
            BuiltinFlow::Radial { alpha } => MeridionalFlow::new(Chart::Cylindrical, false, move |_, w, _| [alpha * w, 0.0]),
            BuiltinFlow::Vortex { kappa } => {
                MeridionalFlow::new(Chart::Cylindrical, false, move |_, w, z| [-kappa * z, kappa * (w - 1.0)])
            }
            BuiltinFlow::Swirl { a, b } => {
                MeridionalFlow::new(Chart::Cylindrical, false, move |t, w, _| [a * w * t.cos(), b * t.sin()])
            }
        }
    }

    /// Closed-form characteristic (φ, ψ)(τ; t, ϖ, z) where one is known.
    pub fn exact_characteristic(self, t: f64, p: [f64; 2], tau: f64) -> Option<[f64; 2]> {
        match self {
            BuiltinFlow::None => Some(p),
            BuiltinFlow::Radial { alpha } => Some([p[0] * (alpha * (tau - t)).exp(), p[1]]),
            BuiltinFlow::Vortex { kappa } => {
                let (s, c) = (kappa * (tau - t)).sin_cos();
                let (dw, dz) = (p[0] - 1.0, p[1]);
                Some([1.0 + c * dw - s * dz, s * dw + c * dz])
            }
            BuiltinFlow::Swirl { a, b } => Some([p[0] * (a * (tau.sin() - t.sin())).exp(), p[1] - b * (tau.cos() - t.cos())]),
        }
    }
}

/// Initial angular velocity Ω⁰ as a function of the chart coordinates.
pub trait InitialOmega: Sync {
    fn eval(&self, a: f64, b: f64) -> Result<f64>;
}

impl<F: Fn(f64, f64) -> f64 + Sync> InitialOmega for F {
    fn eval(&self, a: f64, b: f64) -> Result<f64> {
        Ok(self(a, b))
    }
}

impl InitialOmega for FieldInterp {
    fn eval(&self, a: f64, b: f64) -> Result<f64> {
        FieldInterp::eval(self, a, b)
    }
}

/// Local tolerance of the tracer; rtol = tol, atol = tol/100.
pub fn trace_options(tol: f64) -> OdeOptions {
    OdeOptions::new(tol, tol * 1e-2)
}

fn check_state(chart: Chart, t: f64, y: &[f64; 2], tol: f64) -> Result<()> {
    let bad = |msg: String| Err(Error::Trace { t, state: y.to_vec(), msg });
    if !y.iter().all(|v| v.is_finite()) {
        return bad("characteristic became non-finite".into());
    }
    match chart {
        Chart::Cylindrical if y[0] < 0.0 => bad("characteristic crossed the axis".into()),
        Chart::RZeta if y[0] < 0.0 => bad("characteristic crossed the origin".into()),
        Chart::RZeta if y[1].abs() > 1.0 + 10.0 * tol => bad(format!("zeta left [-1, 1] (zeta = {})", y[1])),
        _ => Ok(()),
    }
}

/// Characteristic through `point` at time t, integrated to t_target with dense output.
pub fn trace_dense(flow: &MeridionalFlow, t: f64, point: [f64; 2], t_target: f64, tol: f64) -> Result<DensePath<2>> {
    if !(tol > 0.0) {
        return Err(Error::Domain("trace tolerance must be positive".into()));
    }
    check_state(flow.chart, t, &point, tol)?;
    let chart = flow.chart;
    let rhs = |tau: f64, y: &[f64; 2]| {
        let b = if chart == Chart::RZeta { y[1].clamp(-1.0, 1.0) } else { y[1] };
        flow.eval(tau, y[0], b)
    };
    let mut segments = Vec::new();
    if t != t_target {
        let mut st = Dopri5::new(rhs, t, point, t_target, trace_options(tol))?;
        while !st.finished() {
            let seg = st.step()?;
            check_state(chart, seg.t1, &seg.y1, tol)?;
            segments.push(seg);
        }
    }
    Ok(DensePath { segments })
}

/// Endpoint (φ, ψ)(t_target) of the characteristic through `point` at time t.
pub fn trace_characteristic(flow: &MeridionalFlow, t: f64, point: [f64; 2], t_target: f64, tol: f64) -> Result<[f64; 2]> {
    let path = trace_dense(flow, t, point, t_target, tol)?;
    let mut end = path.segments.last().map_or(point, |s| s.y1);
    if flow.chart == Chart::RZeta {
        end[1] = end[1].clamp(-1.0, 1.0);
    }
    Ok(end)
}

/// Ω(t, ϖ, z) = φ(0)²/ϖ² Ω⁰(φ(0), ψ(0)).
pub fn advect_omega_cyl(
    flow: &MeridionalFlow,
    omega0: &impl InitialOmega,
    t: f64,
    w: f64,
    z: f64,
    tol: f64,
) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::Singularity(format!("advected angular velocity is singular on the axis (w = {w})")));
    }
    let flow = flow.in_chart(Chart::Cylindrical);
    let [w0, z0] = trace_characteristic(&flow, t, [w, z], 0.0, tol)?;
    Ok(w0 * w0 / (w * w) * omega0.eval(w0, z0)?)
}

/// Ω(t, r, ζ) = φ(0)²(1 − ψ(0)²)/(r²(1 − ζ²)) Ω⁰(φ(0), ψ(0)).
pub fn advect_omega_rzeta(
    flow: &MeridionalFlow,
    omega0: &impl InitialOmega,
    t: f64,
    r: f64,
    zeta: f64,
    tol: f64,
) -> Result<f64> {
    if !(r > 0.0 && zeta.abs() < 1.0) {
        return Err(Error::Singularity(format!("advected angular velocity is singular at (r, zeta) = ({r}, {zeta})")));
    }
    let flow = flow.in_chart(Chart::RZeta);
    let [r0, z0] = trace_characteristic(&flow, t, [r, zeta], 0.0, tol)?;
    Ok(r0 * r0 * (1.0 - z0 * z0) / (r * r * (1.0 - zeta * zeta)) * omega0.eval(r0, z0)?)
}

/// Advected Ω on every node of `grid`, in the grid's chart.
pub fn advect_omega_grid(
    flow: &MeridionalFlow,
    omega0: &impl InitialOmega,
    t: f64,
    grid: &AxiGrid,
    tol: f64,
) -> Result<AxiField> {
    let flow = flow.in_chart(grid.chart);
    let values = grid
        .points()
        .par_iter()
        .map(|&[a, b]| match grid.chart {
            Chart::Cylindrical => advect_omega_cyl(&flow, omega0, t, a, b, tol),
            Chart::RZeta => advect_omega_rzeta(&flow, omega0, t, a, b, tol),
        })
        .collect::<Result<Vec<_>>>()?;
    AxiField::new(grid.clone(), values, f64::INFINITY)
}

/// Specific angular momentum ϖ²Ω, in either chart.
fn invariant(chart: Chart, p: [f64; 2], omega: f64) -> f64 {
    match chart {
        Chart::Cylindrical => p[0] * p[0] * omega,
        Chart::RZeta => p[0] * p[0] * (1.0 - p[1] * p[1]) * omega,
    }
}

/// Largest relative change of the specific angular momentum along the
/// characteristic leaving `start` at τ = 0, sampled at `times`, with Ω at
/// each sample from the advection formula.
pub fn conservation_drift(
    flow: &MeridionalFlow,
    omega0: &impl InitialOmega,
    start: [f64; 2],
    times: &[f64],
    tol: f64,
) -> Result<f64> {
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    let path = trace_dense(flow, 0.0, start, t_end, tol)?;
    let q0 = invariant(flow.chart, start, omega0.eval(start[0], start[1])?);
    let mut worst = 0.0f64;
    for &t in times {
        let p = if t == 0.0 {
            start
        } else {
            path.eval(t).ok_or_else(|| Error::Numeric(format!("no dense output at t = {t}")))?
        };
        let om = match flow.chart {
            Chart::Cylindrical => advect_omega_cyl(flow, omega0, t, p[0], p[1], tol)?,
            Chart::RZeta => advect_omega_rzeta(flow, omega0, t, p[0], p[1], tol)?,
        };
        let q = invariant(flow.chart, p, om);
        let scale = if q0 == 0.0 { 1.0 } else { q0.abs() };
        worst = worst.max((q - q0).abs() / scale);
    }
    Ok(worst)
}
