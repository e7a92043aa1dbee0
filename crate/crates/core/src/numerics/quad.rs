//! Globally adaptive Gauss–Kronrod (7/15) quadrature, scalar and vector valued.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-10, max_intervals: 2000 }
    }
}

impl QuadOptions {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

struct Panel {
    a: f64,
    b: f64,
    val: Vec<f64>,
    err: f64,
}

fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> (Vec<f64>, f64)
where
    F: FnMut(f64, &mut [f64]),
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for (j, &x) in XGK.iter().enumerate() {
        let pts: &[f64] = if j == 7 { &[0.0] } else { &[-1.0, 1.0] };
        for &s in pts {
            f(c + s * h * x, buf);
            for d in 0..dim {
                k[d] += WGK[j] * buf[d];
                if j % 2 == 1 {
                    g[d] += WG[j / 2] * buf[d];
                }
            }
        }
    }
    let mut err = 0.0f64;
    for d in 0..dim {
        k[d] *= h;
        g[d] *= h;
        err = err.max((k[d] - g[d]).abs());
    }
    (k, err)
}

/// Integrates a vector-valued function over [a, b] (optionally split at interior
/// breakpoints) until the max-norm error estimate meets `abs_tol + rel_tol·|I|`.
pub fn integrate_vec<F>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &mut [f64]),
{
    let mut total = vec![0.0; dim];
    if a == b {
        return Ok(total);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    inner.dedup();
    cuts.extend(inner);
    cuts.push(hi);

    let mut buf = vec![0.0; dim];
    let mut panels: Vec<Panel> = Vec::new();
    for w in cuts.windows(2) {
        let (val, err) = gk15(&mut f, w[0], w[1], dim, &mut buf);
        panels.push(Panel { a: w[0], b: w[1], val, err });
    }
    loop {
        let mut sum = vec![0.0; dim];
        let mut err = 0.0;
        for p in &panels {
            for d in 0..dim {
                sum[d] += p.val[d];
            }
            err += p.err;
        }
        let norm = sum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if err <= opts.abs_tol.max(opts.rel_tol * norm) {
            total = sum;
            break;
        }
        if panels.len() >= opts.max_intervals {
            if !err.is_finite() {
                return Err(Error::Numeric(format!(
                    "quadrature on [{lo}, {hi}] produced non-finite values"
                )));
            }
            if err > 1e3 * opts.abs_tol.max(opts.rel_tol * norm) {
                return Err(Error::Numeric(format!(
                    "quadrature on [{lo}, {hi}] did not converge: error estimate {err:e}"
                )));
            }
            total = sum;
            break;
        }
        let (imax, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| if p.err > be { (i, p.err) } else { (bi, be) });
        let p = panels.swap_remove(imax);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Interval can no longer be split in floating point.
            panels.push(Panel { err: 0.0, ..p });
            continue;
        }
        let (v1, e1) = gk15(&mut f, p.a, m, dim, &mut buf);
        let (v2, e2) = gk15(&mut f, m, p.b, dim, &mut buf);
        panels.push(Panel { a: p.a, b: m, val: v1, err: e1 });
        panels.push(Panel { a: m, b: p.b, val: v2, err: e2 });
    }
    for t in &mut total {
        *t *= sign;
    }
    Ok(total)
}

/// Scalar adaptive integral of `f` over [a, b].
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_vec(|x, out| out[0] = f(x), 1, a, b, &[], opts).map(|v| v[0])
}

/// Scalar adaptive integral with interior breakpoints.
pub fn integrate_with_breaks<F>(mut f: F, a: f64, b: f64, breaks: &[f64], opts: QuadOptions) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_vec(|x, out| out[0] = f(x), 1, a, b, breaks, opts).map(|v| v[0])
}
