//! Dormand–Prince 5(4) integrator with step-size control and the standard
//! fourth-order continuous extension.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when zero.
    pub h0: f64,
    pub hmax: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h0: 0.0, hmax: f64::INFINITY, max_steps: 1_000_000 }
    }
}

impl OdeOptions {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its dense-output coefficients.
#[derive(Debug, Clone, Copy)]
pub struct Segment<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rcont: [[f64; N]; 5],
}

impl<const N: usize> Segment<N> {
    /// Interpolated state at `t` (intended for t within the step).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s1 = 1.0 - s;
        let r = &self.rcont;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        }
        out
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.t0 <= self.t1 { (self.t0, self.t1) } else { (self.t1, self.t0) };
        t >= lo && t <= hi
    }
}

/// Stepper advancing y' = f(t, y) from `t` towards `t_end` one accepted step at a time.
pub struct Dopri5<const N: usize, F> {
    f: F,
    pub t: f64,
    pub y: [f64; N],
    t_end: f64,
    dir: f64,
    h: f64,
    k1: [f64; N],
    opts: OdeOptions,
    steps: usize,
    pub n_rejected: usize,
    last_ratio: f64,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] += h * s;
    }
    out
}

impl<const N: usize, F> Dopri5<N, F>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(mut f: F, t0: f64, y0: [f64; N], t_end: f64, opts: OdeOptions) -> Result<Self> {
        if !t0.is_finite() || !t_end.is_finite() || y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite initial data for ODE".into()));
        }
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let k1 = f(t0, &y0);
        let mut s = Self {
            f,
            t: t0,
            y: y0,
            t_end,
            dir,
            h: 0.0,
            k1,
            opts,
            steps: 0,
            n_rejected: 0,
            last_ratio: 1e-4,
        };
        s.h = if opts.h0 > 0.0 { opts.h0 } else { s.initial_step() };
        Ok(s)
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self) -> f64 {
        let span = (self.t_end - self.t).abs();
        if span == 0.0 {
            return 0.0;
        }
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..N {
            let sc = self.scale(self.y[i], self.y[i]);
            d0 += (self.y[i] / sc).powi(2);
            d1 += (self.k1[i] / sc).powi(2);
        }
        d0 = (d0 / N as f64).sqrt();
        d1 = (d1 / N as f64).sqrt();
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(span);
        let y1 = axpy(&self.y, self.dir * h0, &[(1.0, &self.k1)]);
        let k2 = (self.f)(self.t + self.dir * h0, &y1);
        let mut d2 = 0.0;
        for i in 0..N {
            let sc = self.scale(self.y[i], self.y[i]);
            d2 += ((k2[i] - self.k1[i]) / sc).powi(2);
        }
        d2 = (d2 / N as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).min(self.opts.hmax)
    }

    pub fn finished(&self) -> bool {
        self.t == self.t_end
    }

    /// Takes one accepted step (never stepping past `t_end`).
    pub fn step(&mut self) -> Result<Segment<N>> {
        if self.finished() {
            return Err(Error::Numeric("integration already reached its end point".into()));
        }
        loop {
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(Error::Trace {
                    t: self.t,
                    state: self.y.to_vec(),
                    msg: "maximum number of steps exceeded".into(),
                });
            }
            let remaining = (self.t_end - self.t).abs();
            let mut h = self.h.min(self.opts.hmax);
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            let hs = self.dir * h;
            if self.t + hs == self.t {
                return Err(Error::Trace {
                    t: self.t,
                    state: self.y.to_vec(),
                    msg: format!("step size underflow (h={h:e})"),
                });
            }
            let t = self.t;
            let y = self.y;
            let k1 = self.k1;
            let f = &mut self.f;
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + hs,
                &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t_new = if last { self.t_end } else { t + hs };
            let k7 = f(t_new, &y_new);

            let mut err = 0.0;
            let mut finite = true;
            for i in 0..N {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc).powi(2);
                finite &= y_new[i].is_finite();
            }
            err = (err / N as f64).sqrt();
            if !finite || !err.is_finite() {
                self.n_rejected += 1;
                self.h *= 0.25;
                continue;
            }
            if err <= 1.0 {
                // PI step control.
                let fac = 0.9 * err.max(1e-10).powf(-0.17) * self.last_ratio.powf(0.08);
                self.last_ratio = err.max(1e-4);
                self.h = h * fac.clamp(0.2, 10.0);
                let mut rcont = [[0.0; N]; 5];
                for i in 0..N {
                    let dy = y_new[i] - y[i];
                    let bspl = hs * k1[i] - dy;
                    rcont[0][i] = y[i];
                    rcont[1][i] = dy;
                    rcont[2][i] = bspl;
                    rcont[3][i] = dy - hs * k7[i] - bspl;
                    rcont[4][i] =
                        hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                self.t = t_new;
                self.y = y_new;
                self.k1 = k7;
                return Ok(Segment { t0: t, t1: t_new, y0: y, y1: y_new, rcont });
            }
            self.n_rejected += 1;
            self.h = h * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
}

/// Accepted steps of a completed integration, usable as a dense path.
#[derive(Debug, Clone)]
pub struct DensePath<const N: usize> {
    pub segments: Vec<Segment<N>>,
}

impl<const N: usize> DensePath<N> {
    pub fn t_start(&self) -> f64 {
        self.segments.first().map_or(f64::NAN, |s| s.t0)
    }

    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(f64::NAN, |s| s.t1)
    }

    /// State at `t`, or None outside the integrated span.
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        if self.segments.is_empty() {
            return None;
        }
        let forward = self.t_end() >= self.t_start();
        let idx = self.segments.partition_point(|s| if forward { s.t1 < t } else { s.t1 > t });
        let seg = self.segments.get(idx)?;
        if seg.contains(t) {
            Some(seg.eval(t))
        } else {
            None
        }
    }
}

/// Integrates from t0 to t1 and returns the final state.
pub fn solve<const N: usize, F>(f: F, t0: f64, y0: [f64; N], t1: f64, opts: OdeOptions) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    if t0 == t1 {
        return Ok(y0);
    }
    let mut st = Dopri5::new(f, t0, y0, t1, opts)?;
    while !st.finished() {
        st.step()?;
    }
    Ok(st.y)
}

/// Integrates from t0 to t1 keeping every step for dense output.
pub fn solve_dense<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: OdeOptions,
) -> Result<DensePath<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut segments = Vec::new();
    if t0 != t1 {
        let mut st = Dopri5::new(f, t0, y0, t1, opts)?;
        while !st.finished() {
            segments.push(st.step()?);
        }
    }
    Ok(DensePath { segments })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = solve(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, OdeOptions::new(1e-12, 1e-14)).unwrap();
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let y = solve(f, 3.0, [3.0f64.sin(), 3.0f64.cos()], 0.0, OdeOptions::new(1e-12, 1e-14)).unwrap();
        assert!(y[0].abs() < 1e-10 && (y[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dense_output_is_accurate() {
        let path = solve_dense(|t, _y: &[f64; 1]| [t.cos()], 0.0, [0.0], 10.0, OdeOptions::new(1e-11, 1e-13)).unwrap();
        let mut worst = 0.0f64;
        for k in 0..=1000 {
            let t = 10.0 * k as f64 / 1000.0;
            let y = path.eval(t).unwrap();
            worst = worst.max((y[0] - t.sin()).abs());
        }
        assert!(worst < 1e-9, "dense error {worst}");
        assert!(path.eval(10.5).is_none());
    }

    #[test]
    fn dense_output_backward() {
        let path = solve_dense(|_t, y: &[f64; 1]| [y[0]], 1.0, [1.0f64.exp()], -1.0, OdeOptions::new(1e-11, 1e-13)).unwrap();
        for k in 0..=100 {
            let t = 1.0 - 2.0 * k as f64 / 100.0;
            let y = path.eval(t).unwrap();
            assert!((y[0] - t.exp()).abs() < 1e-9);
        }
    }
}
