//! Numerical building blocks: quadrature, ODE integration, interpolation,
//! differentiation and root finding.

pub mod diff;
pub mod gauss;
pub mod interp;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod sum;

/// Composite radial weights: Simpson on uniform grids with an even number of
/// intervals, trapezoid otherwise.
pub fn radial_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    if n < 2 {
        return w;
    }
    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    let uniform = x.windows(2).all(|p| ((p[1] - p[0]) - h).abs() <= 1e-12 * h.abs());
    if uniform && n >= 3 && (n - 1) % 2 == 0 {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = if i == 0 || i == n - 1 {
                h / 3.0
            } else if i % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
        }
    } else {
        for i in 0..n - 1 {
            let d = 0.5 * (x[i + 1] - x[i]);
            w[i] += d;
            w[i + 1] += d;
        }
    }
    w
}

/// Trapezoid weights on arbitrary nodes.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let d = 0.5 * (x[i + 1] - x[i]);
        w[i] += d;
        w[i + 1] += d;
    }
    w
}

/// Weights of the composite rule for ∫ x^p f(x) dx that integrates, on each
/// interval, the cubic through the four surrounding nodes (all nodes when
/// there are fewer than four). Fourth order on any node distribution.
pub fn local_cubic_weights(x: &[f64], p: i32) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    if n < 2 {
        return w;
    }
    let m = n.min(4);
    // Three Gauss points integrate x^p·cubic exactly for p ≤ 2.
    let g = [(-0.6f64.sqrt(), 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.6f64.sqrt(), 5.0 / 9.0)];
    for k in 0..n - 1 {
        let s = k.saturating_sub(1).min(n - m);
        let h = x[k + 1] - x[k];
        let mid = 0.5 * (x[k] + x[k + 1]);
        for (t, gw) in g {
            let xq = mid + 0.5 * h * t;
            let l = &diff::fornberg_weights(xq, &x[s..s + m], 0)[0];
            let scale = 0.5 * h * gw * xq.powi(p);
            for j in 0..m {
                w[s + j] += scale * l[j];
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_for_cubics() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let w = radial_weights(&x);
        let s: f64 = x.iter().zip(&w).map(|(t, wi)| wi * t.powi(3)).sum();
        assert!((s - 0.25).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_fallback_on_nonuniform() {
        let x = [0.0, 0.1, 0.3, 1.0];
        let w = radial_weights(&x);
        let s: f64 = x.iter().zip(&w).map(|(t, wi)| wi * t).sum();
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn local_cubic_exact_and_fourth_order() {
        let x = [0.0, 0.05, 0.3, 0.35, 0.7, 0.71, 1.0];
        let w = local_cubic_weights(&x, 0);
        let s: f64 = x.iter().zip(&w).map(|(t, wi)| wi * (t.powi(3) - t)).sum();
        assert!((s + 0.25).abs() < 1e-14);
        let w = local_cubic_weights(&x, 2);
        let s: f64 = x.iter().zip(&w).map(|(t, wi)| wi * (t.powi(3) - 1.0)).sum();
        assert!((s - (1.0 / 6.0 - 1.0 / 3.0)).abs() < 1e-14);
        let err = |n: usize| {
            let x: Vec<f64> = (0..n).map(|i| (i as f64 / (n - 1) as f64).powf(1.5)).collect();
            let w = local_cubic_weights(&x, 0);
            (x.iter().zip(&w).map(|(t, wi)| wi * t.exp()).sum::<f64>() - (1f64.exp() - 1.0)).abs()
        };
        assert!((err(40) / err(80)).log2() > 3.7);
        assert_eq!(local_cubic_weights(&[0.0, 2.0], 0), vec![1.0, 1.0]);
    }
}
