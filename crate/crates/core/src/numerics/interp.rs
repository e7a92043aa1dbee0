//! Cubic splines in one dimension and their tensor product on a 2-D grid.

use super::diff::fornberg_weights;

/// Cubic spline through (x_i, y_i) with end slopes taken from one-sided
/// fourth-order differences (plain natural ends for fewer than 5 nodes).
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

fn end_slopes(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 5 {
        return None;
    }
    let wl = fornberg_weights(x[0], &x[..5], 1);
    let wr = fornberg_weights(x[n - 1], &x[n - 5..], 1);
    let sl = (0..5).map(|k| wl[1][k] * y[k]).sum();
    let sr = (0..5).map(|k| wr[1][k] * y[n - 5 + k]).sum();
    Some((sl, sr))
}

/// Solves the spline moment system for second derivatives.
fn moments(x: &[f64], y: &[f64], slopes: Option<(f64, f64)>) -> Vec<f64> {
    let n = x.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        a[i] = h0 / 6.0;
        b[i] = (h0 + h1) / 3.0;
        c[i] = h1 / 6.0;
        d[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    match slopes {
        Some((sl, sr)) => {
            let h0 = x[1] - x[0];
            b[0] = h0 / 3.0;
            c[0] = h0 / 6.0;
            d[0] = (y[1] - y[0]) / h0 - sl;
            let hn = x[n - 1] - x[n - 2];
            a[n - 1] = hn / 6.0;
            b[n - 1] = hn / 3.0;
            d[n - 1] = sr - (y[n - 1] - y[n - 2]) / hn;
        }
        None => {
            b[0] = 1.0;
            b[n - 1] = 1.0;
        }
    }
    // Thomas algorithm.
    for i in 1..n {
        let w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    let mut m = vec![0.0; n];
    m[n - 1] = d[n - 1] / b[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
    }
    m
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2, "spline needs two nodes");
        debug_assert!(x.windows(2).all(|w| w[0] < w[1]));
        let m = moments(&x, &y, end_slopes(&x, &y));
        Self { x, y, m }
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        let i = self.x.partition_point(|&v| v <= t);
        i.saturating_sub(1).min(n - 2)
    }

    /// Value at t; outside the node range the end cubic is extended.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + (-(3.0 * a * a - 1.0) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0
    }
}

/// Tensor-product cubic spline of a field sampled on an `x` × `y` grid
/// (row-major values, `values[i * ny + j]`).
#[derive(Debug, Clone)]
pub struct TensorSpline {
    x: Vec<f64>,
    rows: Vec<CubicSpline>,
}

impl TensorSpline {
    pub fn new(x: &[f64], y: &[f64], values: &[f64]) -> Self {
        let ny = y.len();
        assert_eq!(values.len(), x.len() * ny);
        let rows = (0..x.len())
            .map(|i| CubicSpline::new(y.to_vec(), values[i * ny..(i + 1) * ny].to_vec()))
            .collect();
        Self { x: x.to_vec(), rows }
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.rows[0].x_min(), self.rows[0].x_max())
    }

    pub fn eval(&self, xq: f64, yq: f64) -> f64 {
        let col: Vec<f64> = self.rows.iter().map(|s| s.eval(yq)).collect();
        CubicSpline::new(self.x.clone(), col).eval(xq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics() {
        let x: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).powf(1.3)).collect();
        let y: Vec<f64> = x.iter().map(|t| t * t * t - t).collect();
        let s = CubicSpline::new(x, y);
        for k in 0..50 {
            let t = 0.05 * k as f64;
            if t > s.x_max() {
                break;
            }
            assert!((s.eval(t) - (t * t * t - t)).abs() < 1e-9, "t={t}");
            assert!((s.derivative(t) - (3.0 * t * t - 1.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |n: usize| {
            let x: Vec<f64> = (0..n).map(|i| 3.0 * i as f64 / (n - 1) as f64).collect();
            let y = x.iter().map(|t| t.sin()).collect();
            let s = CubicSpline::new(x, y);
            (0..997).map(|k| 3.0 * k as f64 / 996.0).map(|t| (s.eval(t) - t.sin()).abs()).fold(0.0, f64::max)
        };
        let order = (err(21) / err(41)).log2();
        assert!(order > 3.5, "order {order}");
    }

    #[test]
    fn tensor_spline_bicubic_exact() {
        let x: Vec<f64> = (0..8).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = (0..7).map(|j| -1.0 + j as f64 / 3.0).collect();
        let f = |a: f64, b: f64| a * a * b - b * b * b + 2.0 * a;
        let v: Vec<f64> = x.iter().flat_map(|&a| y.iter().map(move |&b| f(a, b))).collect();
        let s = TensorSpline::new(&x, &y, &v);
        assert!((s.eval(0.73, 0.11) - f(0.73, 0.11)).abs() < 1e-10);
    }
}
