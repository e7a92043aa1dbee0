//! Potential, potential gradient and Legendre-expansion operators.
//!
//! The potential of a density sampled on an (r, ζ) grid is
//! Φ(r, ζ) = −4πG Σ_k W_k r_k² S_k(r, ζ) with S_k = ∫ K_II(r, ζ, r_k, ζ′) ρ̃_k(ζ′) dζ′,
//! where ρ̃_k is the polynomial through the Gauss–Legendre samples of row k.
//!
//! The radial integrand has a kink at r′ = r (the jump of its slope is ρ̃(r, ζ)
//! itself), so the radial nodes are split at the evaluation radius and each
//! side is integrated with a composite local-cubic rule: for r′ < r the
//! integrand is r′² times an interpolated S, for r′ > r it is r′ times an
//! interpolated r′S, which matches how S behaves on either side. When r is not a grid radius a row is interpolated there. The
//! node set is clamped to the support [0, R]: rows at r = 0 and at R are added
//! by cubic extrapolation when the grid lacks them.
//!
//! Each ζ′ integral is done with a Gauss–Legendre rule of M points and the
//! density polynomial resampled on it, where M is the smallest available order
//! with M·|r − r′|/max(r, r′) ≥ 15. Rows closer than the largest rule can
//! resolve are integrated adaptively over the basis polynomials with a
//! breakpoint at the evaluation angle, which covers the logarithmic diagonal
//! singularity. Evaluation on the source grid itself therefore needs no
//! special treatment.
//!
//! For the gradient the ζ′ integrand is written as ∂K·(ρ̃(ζ′) − ρ̃(ζ)), which is
//! bounded on the diagonal, and ρ̃(ζ)·∫∂K dζ′ is added back in closed form. The
//! ∂/∂r part of that term, ρ̃·∂_r min(1/r, 1/r′), is −ρ̃/r² for r′ < r and
//! zero beyond, so it reduces to the inner half of the split radial rule. The
//! ∂/∂ζ part vanishes.
//!
//! The even-Legendre expansion uses 1/|x − x′| averaged over azimuth,
//! Σ f_n(r, r′) P_n(ζ) P_n(ζ′), so that
//! Φ = −4πG ∫₀^∞ ∫₀¹ Σ_m f_{2m} P_{2m}(ζ) P_{2m}(ζ′) ρ r′² dζ′ dr′
//! for equatorially symmetric ρ. The factor 4π over the upper half range of ζ′
//! is the normalization confirmed against the quadrature potential.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{legendre_f, KernelQuad, KernelQuadSpec};
use crate::error::{domain, Error, Result};
use crate::field::{AxiField, AxiGrid, Chart};
use crate::numerics::diff::{barycentric_weights, fornberg_weights, lagrange_basis};
use crate::numerics::gauss::{legendre_all, GaussLegendre};
use crate::numerics::quad::{integrate_vec, QuadOptions};
use crate::numerics::local_cubic_weights;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialOptions {
    /// Gravitational constant.
    pub g: f64,
    pub kernel: KernelQuadSpec,
}

impl Default for PotentialOptions {
    fn default() -> Self {
        Self { g: 1.0, kernel: KernelQuadSpec::default() }
    }
}

/// Rule resolution: M·δ at which a fixed M-point rule is trusted.
const DIRECT_RESOLUTION: f64 = 15.0;
const RULE_ORDERS: [usize; 9] = [16, 24, 32, 48, 64, 96, 128, 192, 256];

struct Rule {
    m: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Basis values ℓ_j(t_m), row-major m × nz.
    interp: Vec<f64>,
}

struct Node {
    r: f64,
    /// Row as a combination of grid rows; empty for the zero row at r = 0.
    parts: Vec<(usize, f64)>,
}

/// Radial quadrature for one evaluation radius r: Σ_k weights_k S_k
/// approximates ∫ r′² S dr′. The nodes are split at r and each side gets its
/// own composite rule; `inner` holds the weights of the part r′ ≤ r alone.
struct RadialRule {
    nodes: Vec<Node>,
    weights: Vec<f64>,
    inner: Vec<f64>,
}

/// Radial and angular quadrature data for one source grid.
struct Sources {
    nz: usize,
    nfield: usize,
    zeta: Vec<f64>,
    bw: Vec<f64>,
    zeta_weights: Vec<f64>,
    /// Grid rows inside the support followed by the row at the support radius.
    data: Vec<Node>,
    /// Row at r = 0 when the grid does not have one.
    origin: Option<Node>,
    rules: Vec<Rule>,
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Value,
    /// Value plus both gradient components.
    All,
}

fn check_source(grid: &AxiGrid, support: f64) -> Result<()> {
    if grid.chart != Chart::RZeta {
        return domain("potential operators need a density on an (r, zeta) grid");
    }
    if !support.is_finite() {
        return domain("density must have bounded support (finite support_radius)");
    }
    Ok(())
}

fn check_zero_outside(rho: &AxiField) -> Result<()> {
    let scale = rho.max_abs();
    for i in 0..rho.nr() {
        if rho.r_nodes()[i] > rho.support_radius && rho.row(i).iter().any(|v| v.abs() > 1e-12 * scale) {
            return domain(format!(
                "density is non-zero at r = {} beyond its support radius {}",
                rho.r_nodes()[i],
                rho.support_radius
            ));
        }
    }
    Ok(())
}

/// Cubic (or lower) Lagrange combination of `nodes` at radius x, using the
/// four nodes nearest to x.
fn interpolate_row(nodes: &[Node], x: f64) -> Vec<(usize, f64)> {
    let n = nodes.len();
    let m = n.min(4);
    let p = nodes.partition_point(|v| v.r < x);
    let s = p.saturating_sub(2).min(n - m);
    let radii: Vec<f64> = nodes[s..s + m].iter().map(|v| v.r).collect();
    let w = &fornberg_weights(x, &radii, 0)[0];
    let mut parts = Vec::new();
    for (k, wk) in w.iter().enumerate() {
        parts.extend(nodes[s + k].parts.iter().map(|&(i, c)| (i, c * wk)));
    }
    parts
}

/// Weights for ∫ r′² S dr′ split at node `split`: below it S itself is
/// interpolated (it behaves like 1/r there), above it r′S is (S behaves like
/// 1/r′). Returns the total weights and those of the inner part alone.
fn split_weights(radii: &[f64], split: usize) -> (Vec<f64>, Vec<f64>) {
    let n = radii.len();
    let mut inner = local_cubic_weights(&radii[..=split], 2);
    inner.resize(n, 0.0);
    let outer = local_cubic_weights(&radii[split..], 1);
    let mut total = inner.clone();
    for (k, w) in outer.into_iter().enumerate() {
        total[split + k] += w * radii[split + k];
    }
    (total, inner)
}

impl Sources {
    fn new(grid: &AxiGrid, support: f64) -> Result<Self> {
        check_source(grid, support)?;
        let nz = grid.nz();
        let r = &grid.radial;
        let mut data: Vec<Node> =
            (0..grid.nr()).filter(|&i| r[i] < support).map(|i| Node { r: r[i], parts: vec![(i, 1.0)] }).collect();
        if support > 0.0 {
            let end = if let Some(i) = (0..grid.nr()).find(|&i| r[i] == support) {
                vec![(i, 1.0)]
            } else if data.is_empty() {
                (0..grid.nr()).find(|&i| r[i] > support).map(|i| vec![(i, 1.0)]).unwrap_or_default()
            } else {
                let tail = data.len().saturating_sub(4);
                interpolate_row(&data[tail..], support)
            };
            data.push(Node { r: support, parts: end });
        }
        let origin = match data.first() {
            Some(v) if v.r > 0.0 => Some(Node { r: 0.0, parts: interpolate_row(&data[..data.len().min(4)], 0.0) }),
            _ => None,
        };

        let zeta = grid.vertical.clone();
        let bw = barycentric_weights(&zeta);
        let mut orders = vec![nz];
        orders.extend(RULE_ORDERS.iter().copied().filter(|&m| m > nz));
        let rules = orders
            .into_iter()
            .map(|m| {
                let (nodes, weights) = if m == nz {
                    (zeta.clone(), grid.vertical_weights.clone())
                } else {
                    let gl = GaussLegendre::new(m);
                    (gl.nodes, gl.weights)
                };
                let mut interp = vec![0.0; m * nz];
                for (k, &t) in nodes.iter().enumerate() {
                    lagrange_basis(&zeta, &bw, t, &mut interp[k * nz..(k + 1) * nz]);
                }
                Rule { m, nodes, weights, interp }
            })
            .collect();
        Ok(Self { nz, nfield: grid.len(), zeta, bw, zeta_weights: grid.vertical_weights.clone(), data, origin, rules })
    }

    fn radial_rule(&self, r: f64) -> RadialRule {
        let mut nodes: Vec<Node> = Vec::with_capacity(self.data.len() + 2);
        if let Some(o) = &self.origin {
            nodes.push(Node { r: 0.0, parts: o.parts.clone() });
        }
        nodes.extend(self.data.iter().map(|v| Node { r: v.r, parts: v.parts.clone() }));
        if nodes.is_empty() {
            return RadialRule { nodes, weights: Vec::new(), inner: Vec::new() };
        }
        if r <= 0.0 {
            // S(0, r′) ∝ 1/r′: integrate the interpolated r′²S, which vanishes at
            // the origin.
            let radii: Vec<f64> = nodes.iter().map(|v| v.r).collect();
            let weights = local_cubic_weights(&radii, 0).iter().zip(&radii).map(|(w, x)| w * x * x).collect();
            let inner = vec![0.0; nodes.len()];
            return RadialRule { nodes, weights, inner };
        }
        let last = nodes.len() - 1;
        let split = if r >= nodes[last].r {
            last
        } else if let Some(k) = nodes.iter().position(|v| v.r == r) {
            k
        } else {
            let p = nodes.partition_point(|v| v.r < r);
            nodes.insert(p, Node { r, parts: interpolate_row(&self.data, r) });
            // A neighbour much closer than the local spacing would make the
            // interpolating cubics on the adjacent panels ill-conditioned.
            let mut split = p;
            if p + 2 < nodes.len() && nodes[p + 1].r - r < 0.3 * (nodes[p + 2].r - nodes[p + 1].r) {
                nodes.remove(p + 1);
            } else if p >= 2 && r - nodes[p - 1].r < 0.3 * (nodes[p - 1].r - nodes[p - 2].r) {
                nodes.remove(p - 1);
                split = p - 1;
            }
            split
        };
        let radii: Vec<f64> = nodes.iter().map(|v| v.r).collect();
        let (weights, inner) = split_weights(&radii, split);
        RadialRule { nodes, weights, inner }
    }

    fn dim(&self, mode: Mode) -> usize {
        match mode {
            Mode::Value => self.nz,
            Mode::All => 3 * self.nz,
        }
    }

    /// Angular weights for one source row: blocks [∫K ℓ_j, ∫∂_rK (ℓ_j − ℓ_j(ζ)),
    /// ∫∂_ζK (ℓ_j − ℓ_j(ζ))].
    #[allow(clippy::too_many_arguments)]
    fn row_weights(
        &self,
        quad: &KernelQuad,
        r: f64,
        zeta: f64,
        rp: f64,
        ell: &[f64],
        mode: Mode,
        out: &mut [f64],
    ) -> Result<()> {
        let nz = self.nz;
        let delta = (r - rp).abs() / r.max(rp);
        let put = |t: f64, lrow: &[f64], wt: f64, out: &mut [f64]| -> Result<()> {
            match mode {
                Mode::Value => {
                    let k = super::kernel_kii(r, zeta, rp, t, quad)?;
                    for j in 0..nz {
                        out[j] += wt * k * lrow[j];
                    }
                }
                Mode::All => {
                    let [k, kr, kz] = quad.kii_grad(r, zeta, rp, t)?;
                    for j in 0..nz {
                        let dl = lrow[j] - ell[j];
                        out[j] += wt * k * lrow[j];
                        out[nz + j] += wt * kr * dl;
                        out[2 * nz + j] += wt * kz * dl;
                    }
                }
            }
            Ok(())
        };
        out.iter_mut().for_each(|v| *v = 0.0);
        if let Some(rule) = self.rules.iter().find(|q| q.m as f64 * delta >= DIRECT_RESOLUTION) {
            for k in 0..rule.m {
                put(rule.nodes[k], &rule.interp[k * nz..(k + 1) * nz], rule.weights[k], out)?;
            }
            return Ok(());
        }
        let mut basis = vec![0.0; nz];
        let mut failure = None;
        let opts = QuadOptions::new(1e-13 / r.max(rp), 1e-11);
        let breaks = [zeta];
        let v = integrate_vec(
            |t, buf| {
                buf.iter_mut().for_each(|v| *v = 0.0);
                lagrange_basis(&self.zeta, &self.bw, t, &mut basis);
                if let Err(e) = put(t, &basis, 1.0, buf) {
                    failure.get_or_insert(e);
                    buf.iter_mut().for_each(|v| *v = f64::NAN);
                }
            },
            out.len(),
            -1.0,
            1.0,
            &breaks,
            opts,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        out.copy_from_slice(&v?);
        Ok(())
    }

    /// Dense coefficients of (Φ, ∂_rΦ, ∂_ζΦ) at one point, divided by −4πG.
    fn point_coeffs(&self, quad: &KernelQuad, r: f64, zeta: f64, mode: Mode) -> Result<Vec<f64>> {
        check_point(r, zeta)?;
        let (nz, nf) = (self.nz, self.nfield);
        let blocks = if mode == Mode::Value { 1 } else { 3 };
        let mut out = vec![0.0; blocks * nf];
        let mut ell = vec![0.0; nz];
        lagrange_basis(&self.zeta, &self.bw, zeta, &mut ell);
        let mut row = vec![0.0; self.dim(mode)];
        let rule = self.radial_rule(r);
        for (node, &s) in rule.nodes.iter().zip(&rule.weights) {
            if s == 0.0 || node.parts.is_empty() {
                continue;
            }
            self.row_weights(quad, r, zeta, node.r, &ell, mode, &mut row)?;
            for &(i, c) in &node.parts {
                for b in 0..blocks {
                    for j in 0..nz {
                        out[b * nf + i * nz + j] += s * c * row[b * nz + j];
                    }
                }
            }
        }
        if mode == Mode::All && r > 0.0 {
            // ρ̃(ζ)·∂_r min(1/r, 1/r′) = −ρ̃(ζ)/r² integrated over r′ < r.
            for (node, w) in rule.nodes.iter().zip(&rule.inner) {
                let s = -w / (r * r);
                for &(i, c) in &node.parts {
                    for j in 0..nz {
                        out[nf + i * nz + j] += s * c * ell[j];
                    }
                }
            }
        }
        Ok(out)
    }

    fn evaluate(&self, quad: &KernelQuad, points: &[[f64; 2]], mode: Mode, values: &[f64]) -> Result<Vec<[f64; 3]>> {
        let nf = self.nfield;
        points
            .par_iter()
            .map(|&[r, z]| {
                let c = self.point_coeffs(quad, r, z, mode)?;
                let mut v = [0.0; 3];
                for (b, slot) in v.iter_mut().enumerate().take(c.len() / nf) {
                    *slot = c[b * nf..(b + 1) * nf].iter().zip(values).map(|(a, b)| a * b).sum();
                }
                Ok(v)
            })
            .collect()
    }
}

fn check_point(r: f64, zeta: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) || !(-1.0..=1.0).contains(&zeta) {
        return domain(format!("invalid evaluation point ({r}, {zeta})"));
    }
    Ok(())
}

fn check_eval_grid(grid: &AxiGrid) -> Result<()> {
    if grid.chart != Chart::RZeta {
        return domain("evaluation grid must use the (r, zeta) chart");
    }
    Ok(())
}

/// Newton potential Φ of ρ at arbitrary (r, ζ) points.
pub fn potential_at(rho: &AxiField, points: &[[f64; 2]], opts: &PotentialOptions) -> Result<Vec<f64>> {
    check_zero_outside(rho)?;
    let src = Sources::new(&rho.grid, rho.support_radius)?;
    let quad = opts.kernel.prepare()?;
    let scale = -4.0 * PI * opts.g;
    Ok(src.evaluate(&quad, points, Mode::Value, &rho.values)?.into_iter().map(|v| scale * v[0]).collect())
}

/// Newton potential Φ of ρ on an evaluation grid (which may be ρ's own grid).
pub fn potential(rho: &AxiField, eval: &AxiGrid, opts: &PotentialOptions) -> Result<AxiField> {
    check_eval_grid(eval)?;
    let values = potential_at(rho, &eval.points(), opts)?;
    AxiField::new(eval.clone(), values, f64::INFINITY)
}

/// (∂Φ/∂r, ∂Φ/∂ζ) at arbitrary points by differentiated-kernel quadrature.
pub fn potential_gradient_at(
    rho: &AxiField,
    points: &[[f64; 2]],
    opts: &PotentialOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_zero_outside(rho)?;
    let src = Sources::new(&rho.grid, rho.support_radius)?;
    let quad = opts.kernel.prepare()?;
    let scale = -4.0 * PI * opts.g;
    let v = src.evaluate(&quad, points, Mode::All, &rho.values)?;
    Ok((v.iter().map(|x| scale * x[1]).collect(), v.iter().map(|x| scale * x[2]).collect()))
}

pub fn potential_gradient(rho: &AxiField, eval: &AxiGrid, opts: &PotentialOptions) -> Result<(AxiField, AxiField)> {
    check_eval_grid(eval)?;
    let (dr, dz) = potential_gradient_at(rho, &eval.points(), opts)?;
    Ok((
        AxiField::new(eval.clone(), dr, f64::INFINITY)?,
        AxiField::new(eval.clone(), dz, f64::INFINITY)?,
    ))
}

/// Truncated even-Legendre series of the potential (orders 0, 2, …, 2·m_max).
/// Φ = −4πG ∫₀^∞∫₀¹ Σₘ f₂ₘ(r, r′) P₂ₘ(ζ) P₂ₘ(ζ′) ρ(r′, ζ′) r′² dζ′ dr′, the
/// half-range form of −2πG ∫∫₋₁¹ Σₙ fₙ Pₙ(ζ) Pₙ(ζ′) ρ r′².
pub fn potential_expansion_at(rho: &AxiField, m_max: usize, points: &[[f64; 2]], g: f64) -> Result<Vec<f64>> {
    if !rho.is_equatorially_symmetric() {
        return domain("potential_expansion needs a density validated as equatorially symmetric");
    }
    check_zero_outside(rho)?;
    let src = Sources::new(&rho.grid, rho.support_radius)?;
    let nz = src.nz;
    let nmax = 2 * m_max;
    let p_nodes: Vec<Vec<f64>> = src.zeta.iter().map(|&z| legendre_all(nmax, z)).collect();
    // Half-range moments ∫₀¹ P_n ρ̃_i dζ′ of every grid row. The row polynomial
    // has degree nz − 1, so orders n ≥ nz vanish; the nz-point rule is exact
    // below that.
    let moments: Vec<Vec<f64>> = (0..rho.nr())
        .map(|i| {
            (0..=m_max)
                .map(|m| {
                    if 2 * m >= nz {
                        return 0.0;
                    }
                    0.5 * (0..nz).map(|j| src.zeta_weights[j] * p_nodes[j][2 * m] * rho.get(i, j)).sum::<f64>()
                })
                .collect()
        })
        .collect();
    points
        .par_iter()
        .map(|&[r, z]| {
            check_point(r, z)?;
            let p = legendre_all(nmax, z);
            let rule = src.radial_rule(r);
            let mut total = 0.0;
            for (node, &w) in rule.nodes.iter().zip(&rule.weights) {
                if w == 0.0 || node.parts.is_empty() {
                    continue;
                }
                let mut s = 0.0;
                for m in 0..=m_max {
                    let mom: f64 = node.parts.iter().map(|&(i, c)| c * moments[i][m]).sum();
                    s += legendre_f(2 * m, r, node.r)? * p[2 * m] * mom;
                }
                total += w * s;
            }
            Ok(-4.0 * PI * g * total)
        })
        .collect()
}

pub fn potential_expansion(rho: &AxiField, m_max: usize, eval: &AxiGrid, g: f64) -> Result<AxiField> {
    check_eval_grid(eval)?;
    let values = potential_expansion_at(rho, m_max, &eval.points(), g)?;
    AxiField::new(eval.clone(), values, f64::INFINITY)
}

/// Precomputed linear map from density samples to Φ (and optionally its
/// gradient) at fixed points, for repeated application to fields on one grid.
#[derive(Debug, Clone)]
pub struct PotentialOperator {
    source: AxiGrid,
    nfield: usize,
    npoints: usize,
    value: Vec<f64>,
    gradient: Option<(Vec<f64>, Vec<f64>)>,
}

impl PotentialOperator {
    pub fn new(
        source: &AxiGrid,
        support: f64,
        points: &[[f64; 2]],
        opts: &PotentialOptions,
        with_gradient: bool,
    ) -> Result<Self> {
        let src = Sources::new(source, support)?;
        let quad = opts.kernel.prepare()?;
        let mode = if with_gradient { Mode::All } else { Mode::Value };
        let scale = -4.0 * PI * opts.g;
        let nf = src.nfield;
        let rows: Vec<Vec<f64>> =
            points.par_iter().map(|&[r, z]| src.point_coeffs(&quad, r, z, mode)).collect::<Result<_>>()?;
        let mut value = Vec::with_capacity(points.len() * nf);
        let mut d_r = Vec::new();
        let mut d_z = Vec::new();
        for row in &rows {
            value.extend(row[..nf].iter().map(|c| scale * c));
            if with_gradient {
                d_r.extend(row[nf..2 * nf].iter().map(|c| scale * c));
                d_z.extend(row[2 * nf..].iter().map(|c| scale * c));
            }
        }
        Ok(Self {
            source: source.clone(),
            nfield: nf,
            npoints: points.len(),
            value,
            gradient: with_gradient.then_some((d_r, d_z)),
        })
    }

    pub fn source_grid(&self) -> &AxiGrid {
        &self.source
    }

    fn apply_matrix(&self, m: &[f64], values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.nfield {
            return Err(Error::GridMismatch(format!("expected {} samples, got {}", self.nfield, values.len())));
        }
        Ok((0..self.npoints)
            .map(|p| m[p * self.nfield..(p + 1) * self.nfield].iter().zip(values).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn potential(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.apply_matrix(&self.value, values)
    }

    pub fn gradient(&self, values: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (dr, dz) = self
            .gradient
            .as_ref()
            .ok_or_else(|| Error::Domain("operator was built without gradient rows".into()))?;
        Ok((self.apply_matrix(dr, values)?, self.apply_matrix(dz, values)?))
    }
}
