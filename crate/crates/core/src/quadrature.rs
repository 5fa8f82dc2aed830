//! Double-exponential quadrature.
//!
//! Both rules hand the integrand abscissae computed from the distance to the
//! nearest endpoint, so integrands with logarithmic or power singularities at
//! an endpoint can be written in terms of that distance without cancellation.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

const MAX_LEVEL: usize = 12;
const MIN_LEVEL: usize = 3;

/// Integrate `f` over `[a, b]` with the tanh-sinh rule until two successive
/// levels agree to `abs_tol` (or to 1e-15 relative).
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return tanh_sinh(f, b, a, abs_tol).map(|v| -v);
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    // Contribution of the node pair at parameter t (t > 0), or of the centre.
    let pair = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let e = (2.0 * u).exp();
        // distance from the endpoint, relative to the half-width
        let delta = 2.0 / (e + 1.0);
        let cu = u.cosh();
        let w = half * FRAC_PI_2 * t.cosh() / (cu * cu);
        if delta == 0.0 || !w.is_finite() || w < 1e-300 {
            return 0.0;
        }
        let off = half * delta;
        if off == 0.0 {
            return 0.0;
        }
        w * (f(a + off) + f(b - off))
    };
    let t_max = 6.0;
    let mut h = 1.0;
    let mut sum = half * FRAC_PI_2 * f(mid);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        sum += pair(k as f64 * h);
        k += 1;
    }
    let mut estimate = sum * h;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            add += pair(k as f64 * h);
            k += 2;
        }
        sum += add;
        let next = sum * h;
        let err = (next - estimate).abs();
        estimate = next;
        if level >= MIN_LEVEL && (err <= abs_tol || err <= 1e-15 * next.abs()) {
            return Ok(next);
        }
    }
    Err(Error::NonConvergence {
        what: "tanh-sinh quadrature",
        estimate: (sum * h - estimate).abs(),
    })
}

/// Integrate `f` over `[a, inf)` with the exp-sinh rule. `f` receives the
/// offset `x - a`, which is resolved down to subnormal scales near `a`.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, abs_tol: f64) -> Result<f64> {
    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let x = u.exp();
        let w = FRAC_PI_2 * t.cosh() * x;
        if x == 0.0 || !x.is_finite() || !w.is_finite() {
            return 0.0;
        }
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            w * v
        }
    };
    let t_lo = -6.0;
    let t_hi = 4.5;
    let mut h = 0.5;
    let mut sum = 0.0;
    let mut t = t_lo;
    while t <= t_hi {
        sum += node(t);
        t += h;
    }
    let mut estimate = sum * h;
    for level in 1..=MAX_LEVEL {
        let mut add = 0.0;
        let mut t = t_lo + 0.5 * h;
        while t <= t_hi {
            add += node(t);
            t += h;
        }
        h *= 0.5;
        sum += add;
        let next = sum * h;
        let err = (next - estimate).abs();
        estimate = next;
        if level >= MIN_LEVEL && (err <= abs_tol || err <= 1e-15 * next.abs()) {
            return Ok(next);
        }
    }
    Err(Error::NonConvergence {
        what: "exp-sinh quadrature",
        estimate: abs_tol,
    })
}
