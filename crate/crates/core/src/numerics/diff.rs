//! Finite-difference weights on arbitrary nodes and polynomial differentiation matrices.

/// Fornberg's algorithm: weights for derivatives 0..=m at `x0` from the given
/// nodes. Returns `w[k][j]` for derivative order k and node j.
pub fn fornberg_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Sparse finite-difference operator on a 1-D grid: one stencil per node.
#[derive(Debug, Clone)]
pub struct FdOperator {
    pub start: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
}

impl FdOperator {
    /// Fourth-order accurate derivative of order `order` (1 or 2) on `x`.
    /// Interior nodes use centred 5-point stencils; edges use one-sided
    /// stencils of 5 (first derivative) or 6 (second derivative) points.
    pub fn fourth_order(x: &[f64], order: usize) -> Self {
        assert!(order == 1 || order == 2);
        let n = x.len();
        assert!(n >= 6, "fourth-order differences need at least 6 nodes");
        let mut start = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let (s, len) = if i >= 2 && i + 2 < n {
                (i - 2, 5)
            } else {
                let len = if order == 1 { 5 } else { 6 };
                let s = if i < 2 { 0 } else { n - len };
                (s, len)
            };
            let w = fornberg_weights(x[i], &x[s..s + len], order);
            start.push(s);
            weights.push(w[order].clone());
        }
        Self { start, weights }
    }

    pub fn apply_at(&self, i: usize, f: impl Fn(usize) -> f64) -> f64 {
        let s = self.start[i];
        self.weights[i].iter().enumerate().map(|(k, w)| w * f(s + k)).sum()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..f.len()).map(|i| self.apply_at(i, |j| f[j])).collect()
    }
}

/// Barycentric weights of the nodes.
pub fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|j| {
            let mut p = 1.0;
            for k in 0..n {
                if k != j {
                    p *= x[j] - x[k];
                }
            }
            1.0 / p
        })
        .collect()
}

/// Differentiation matrix of the interpolating polynomial through `x`
/// (row-major, `d[i][j]`): (Df)_i = Σ_j d[i][j] f_j.
pub fn lagrange_diff_matrix(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let w = barycentric_weights(x);
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (x[i] - x[j]);
                d[i][j] = v;
                diag -= v;
            }
        }
        d[i][i] = diag;
    }
    d
}

/// Values of the Lagrange basis polynomials ℓ_j(t) for nodes `x`.
pub fn lagrange_basis(x: &[f64], bw: &[f64], t: f64, out: &mut [f64]) {
    let n = x.len();
    for j in 0..n {
        if t == x[j] {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[j] = 1.0;
            return;
        }
    }
    let mut denom = 0.0;
    for j in 0..n {
        let v = bw[j] / (t - x[j]);
        out[j] = v;
        denom += v;
    }
    for v in out.iter_mut() {
        *v /= denom;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_central_second_derivative() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[2][0] - 1.0).abs() < 1e-14);
        assert!((w[2][1] + 2.0).abs() < 1e-14);
        assert!((w[1][2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fourth_order_exact_on_quartics() {
        let x: Vec<f64> = (0..12).map(|i| 0.3 + 0.1 * i as f64 + 0.01 * (i as f64).sin()).collect();
        let f: Vec<f64> = x.iter().map(|t| t.powi(4) - 2.0 * t * t + 1.0).collect();
        let d1 = FdOperator::fourth_order(&x, 1).apply(&f);
        let d2 = FdOperator::fourth_order(&x, 2).apply(&f);
        for i in 0..x.len() {
            let t = x[i];
            assert!((d1[i] - (4.0 * t.powi(3) - 4.0 * t)).abs() < 1e-9);
            assert!((d2[i] - (12.0 * t * t - 4.0)).abs() < 1e-7);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |n: usize| {
            let x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / (n - 1) as f64).collect();
            let f: Vec<f64> = x.iter().map(|t| t.sin()).collect();
            let d = FdOperator::fourth_order(&x, 1).apply(&f);
            x.iter().zip(&d).map(|(t, v)| (v - t.cos()).abs()).fold(0.0, f64::max)
        };
        let order = (err(41) / err(81)).log2();
        assert!(order > 3.7, "order {order}");
    }

    #[test]
    fn lagrange_matrix_exact_for_polynomials() {
        let gl = crate::numerics::gauss::GaussLegendre::new(8);
        let d = lagrange_diff_matrix(&gl.nodes);
        for i in 0..8 {
            let s: f64 = (0..8).map(|j| d[i][j] * gl.nodes[j].powi(7)).sum();
            assert!((s - 7.0 * gl.nodes[i].powi(6)).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_partition_of_unity() {
        let x = [-0.9, -0.2, 0.4, 0.8];
        let bw = barycentric_weights(&x);
        let mut out = [0.0; 4];
        lagrange_basis(&x, &bw, 0.1, &mut out);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let interp: f64 = out.iter().zip(&x).map(|(l, xi)| l * xi.powi(3)).sum();
        assert!((interp - 0.001).abs() < 1e-14);
    }
}
