//! Axisymmetric scalar fields on tensor grids.
//!
//! In the (r, ζ) chart the second axis carries Gauss–Legendre nodes in ζ with
//! their weights; in the cylindrical chart it carries z nodes with any
//! quadrature weights. Values are stored row-major: `values[i * nz + j]` is
//! the sample at radial node i and vertical node j.

pub mod io;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::gauss::GaussLegendre;
use crate::numerics::interp::TensorSpline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    /// (r, ζ) with ζ = cos θ.
    RZeta,
    /// (ϖ, z).
    Cylindrical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiGrid {
    pub chart: Chart,
    /// r (or ϖ) nodes, strictly increasing and non-negative.
    pub radial: Vec<f64>,
    /// ζ (or z) nodes, strictly increasing.
    pub vertical: Vec<f64>,
    pub vertical_weights: Vec<f64>,
}

impl AxiGrid {
    /// (r, ζ) grid with an `nz`-point Gauss–Legendre rule in ζ.
    pub fn rzeta(radial: Vec<f64>, nz: usize) -> Result<Self> {
        let gl = GaussLegendre::new(nz);
        Self::new(Chart::RZeta, radial, gl.nodes, gl.weights)
    }

    /// Cylindrical grid with a Gauss–Legendre rule mapped onto z ∈ [−zmax, zmax].
    pub fn cylindrical(radial: Vec<f64>, nz: usize, zmax: f64) -> Result<Self> {
        let gl = GaussLegendre::new(nz);
        let z = gl.nodes.iter().map(|x| x * zmax).collect();
        let w = gl.weights.iter().map(|x| x * zmax).collect();
        Self::new(Chart::Cylindrical, radial, z, w)
    }

    pub fn new(chart: Chart, radial: Vec<f64>, vertical: Vec<f64>, vertical_weights: Vec<f64>) -> Result<Self> {
        if radial.is_empty() || vertical.is_empty() {
            return domain("grid axes must be non-empty");
        }
        if vertical.len() != vertical_weights.len() {
            return Err(Error::GridMismatch("vertical nodes and weights differ in length".into()));
        }
        if radial[0] < 0.0 || radial.iter().any(|v| !v.is_finite()) {
            return domain("radial nodes must be finite and non-negative");
        }
        if radial.windows(2).any(|w| w[0] >= w[1]) || vertical.windows(2).any(|w| w[0] >= w[1]) {
            return domain("grid nodes must be strictly increasing");
        }
        if chart == Chart::RZeta && (vertical[0] <= -1.0 || *vertical.last().unwrap() >= 1.0) {
            return domain("zeta nodes must lie strictly inside (-1, 1)");
        }
        Ok(Self { chart, radial, vertical, vertical_weights })
    }

    /// Uniform cell-centred radii (i + 1/2)·R/n.
    pub fn cell_centred(n: usize, outer: f64) -> Vec<f64> {
        (0..n).map(|i| (i as f64 + 0.5) * outer / n as f64).collect()
    }

    /// Uniform radii i·R/(n−1) including both ends.
    pub fn uniform(n: usize, outer: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * outer / (n - 1) as f64).collect()
    }

    pub fn nr(&self) -> usize {
        self.radial.len()
    }

    pub fn nz(&self) -> usize {
        self.vertical.len()
    }

    pub fn len(&self) -> usize {
        self.nr() * self.nz()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.len());
        for &r in &self.radial {
            for &z in &self.vertical {
                out.push([r, z]);
            }
        }
        out
    }

    /// Whether the vertical nodes are mirror-symmetric about zero.
    pub fn is_vertically_symmetric(&self) -> bool {
        let n = self.nz();
        let scale = self.vertical.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        (0..n).all(|j| (self.vertical[j] + self.vertical[n - 1 - j]).abs() <= 1e-14 * scale)
    }

    pub fn same_as(&self, other: &AxiGrid) -> bool {
        self == other
    }

    pub fn require_same(&self, other: &AxiGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields live on different grids".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiField {
    pub grid: AxiGrid,
    pub values: Vec<f64>,
    /// Smallest radius beyond which the field vanishes (may be +∞).
    pub support_radius: f64,
    equatorially_symmetric: bool,
}

impl AxiField {
    pub fn new(grid: AxiGrid, values: Vec<f64>, support_radius: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values for a {}x{} grid, got {}",
                grid.len(),
                grid.nr(),
                grid.nz(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("field values must be finite");
        }
        if support_radius.is_nan() || support_radius < 0.0 {
            return domain("support radius must be non-negative");
        }
        Ok(Self { grid, values, support_radius, equatorially_symmetric: false })
    }

    pub fn from_fn(grid: AxiGrid, support_radius: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = grid.points().into_iter().map(|[a, b]| f(a, b)).collect();
        Self::new(grid, values, support_radius)
    }

    pub fn zeros(grid: AxiGrid) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n], support_radius: 0.0, equatorially_symmetric: true }
    }

    /// Same grid and support, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.support_radius)
    }

    pub fn nr(&self) -> usize {
        self.grid.nr()
    }

    pub fn nz(&self) -> usize {
        self.grid.nz()
    }

    pub fn r_nodes(&self) -> &[f64] {
        &self.grid.radial
    }

    pub fn zeta_nodes(&self) -> &[f64] {
        &self.grid.vertical
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nz() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nz = self.nz();
        &self.values[i * nz..(i + 1) * nz]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_equatorially_symmetric(&self) -> bool {
        self.equatorially_symmetric
    }

    /// Largest |F(·, ζ) − F(·, −ζ)| (or |F + F(−ζ)| for `odd`) over the grid.
    pub fn asymmetry(&self, odd: bool) -> Result<f64> {
        if !self.grid.is_vertically_symmetric() {
            return domain("vertical nodes are not symmetric under reflection");
        }
        let nz = self.nz();
        let sign = if odd { 1.0 } else { -1.0 };
        let mut worst = 0.0f64;
        for i in 0..self.nr() {
            for j in 0..nz {
                worst = worst.max((self.get(i, j) + sign * self.get(i, nz - 1 - j)).abs());
            }
        }
        Ok(worst)
    }

    /// Flags the field as equatorially symmetric after checking it to 1e-12.
    pub fn mark_symmetric(mut self) -> Result<Self> {
        let asym = self.asymmetry(false)?;
        let tol = 1e-12 * self.max_abs().max(1.0);
        if asym > tol {
            return domain(format!("field is not equatorially symmetric (asymmetry {asym:e})"));
        }
        self.equatorially_symmetric = true;
        Ok(self)
    }

    pub fn interpolator(&self) -> FieldInterp {
        FieldInterp {
            spline: TensorSpline::new(&self.grid.radial, &self.grid.vertical, &self.values),
            chart: self.grid.chart,
            r_max: *self.grid.radial.last().unwrap(),
            support: self.support_radius,
            zero_outside_support: false,
        }
    }
}

/// Tensor cubic-spline interpolant of an [`AxiField`].
#[derive(Debug, Clone)]
pub struct FieldInterp {
    spline: TensorSpline,
    chart: Chart,
    r_max: f64,
    support: f64,
    zero_outside_support: bool,
}

impl FieldInterp {
    /// Treat the field as zero beyond its support radius (for ρ-like fields).
    pub fn zero_extended(mut self) -> Self {
        self.zero_outside_support = true;
        self
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    /// Value at (r, ζ) (or (ϖ, z)). In the (r, ζ) chart the end cubics are
    /// extended to ζ = ±1 and towards r = 0; points beyond the last radial node
    /// are an error unless zero extension applies.
    pub fn eval(&self, a: f64, b: f64) -> Result<f64> {
        if self.zero_outside_support && a >= self.support {
            return Ok(0.0);
        }
        let (rlo, _) = self.spline.x_range();
        let (zlo, zhi) = self.spline.y_range();
        let span = self.r_max - rlo;
        let tol = 1e-12 * span.max(1.0);
        let inside_r = a >= rlo.min(0.0) - tol && a <= self.r_max + tol;
        let inside_z = match self.chart {
            Chart::RZeta => (-1.0 - 1e-12..=1.0 + 1e-12).contains(&b),
            Chart::Cylindrical => b >= zlo - tol && b <= zhi + tol,
        };
        if !inside_r || !inside_z || !a.is_finite() || !b.is_finite() {
            return domain(format!("point ({a}, {b}) lies outside the interpolation domain (extrapolation refused)"));
        }
        Ok(self.spline.eval(a, b))
    }
}
