//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket down to |b − a| ≤ tol.
pub fn bisect<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Numeric(format!("no sign change on [{a}, {b}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Safeguarded Newton iteration for an increasing function on [lo, hi].
pub fn newton_bracketed<F>(mut f: F, mut lo: f64, mut hi: f64, x0: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut x = x0.clamp(lo, hi);
    for _ in 0..200 {
        let (v, d) = f(x);
        if v == 0.0 {
            return Ok(x);
        }
        if v > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - v / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= tol * x.abs().max(1e-300) || hi - lo <= tol * hi.abs() {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Numeric(format!("Newton iteration did not converge; bracket [{lo:e}, {hi:e}]")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-10).is_err());
    }

    #[test]
    fn newton_finds_cube_root() {
        let r = newton_bracketed(|x| (x * x * x - 5.0, 3.0 * x * x), 0.0, 5.0, 1.0, 1e-15).unwrap();
        assert!((r - 5f64.cbrt()).abs() < 1e-14);
    }
}
