//! Gamma, Riemann zeta, Bessel K and divisor sums on the real line.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments, rejecting the poles at `0, -1, -2, ...`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("gamma of non-finite argument {x}")));
    }
    if x <= 0.0 && x == x.round() {
        return Err(Error::Pole { function: "gamma", arg: x });
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    if x == x.round() && x <= 171.0 {
        // exact factorials
        return (1..x as u64).fold(1.0, |acc, k| acc * k as f64);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// `2^x pi^(x-1) sin(pi x / 2) Gamma(1-x)`, so that `zeta(x) = chi(x) zeta(1-x)`.
pub fn zeta_functional_factor(x: f64) -> Result<f64> {
    Ok(2f64.powf(x) * PI.powf(x - 1.0) * (0.5 * PI * x).sin() * gamma_fn(1.0 - x)?)
}

const BORWEIN_N: usize = 40;

fn borwein_weights() -> [f64; BORWEIN_N + 1] {
    let n = BORWEIN_N as f64;
    let mut d = [0.0; BORWEIN_N + 1];
    let mut term = 1.0;
    let mut acc = 1.0;
    d[0] = acc;
    for i in 0..BORWEIN_N {
        let fi = i as f64;
        term *= 4.0 * (n + fi) * (n - fi) / ((2.0 * fi + 1.0) * (2.0 * fi + 2.0));
        acc += term;
        d[i + 1] = acc;
    }
    d
}

/// Dirichlet eta function for `x > 0`.
fn eta(x: f64) -> f64 {
    let d = borwein_weights();
    let dn = d[BORWEIN_N];
    let mut sum = 0.0;
    for k in 0..BORWEIN_N {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (d[k] - dn) / ((k + 1) as f64).powf(x);
    }
    -sum / dn
}

/// Riemann zeta on the real line. Arguments within `1e-3` of the pole are
/// rejected.
pub fn riemann_zeta(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("zeta of non-finite argument {x}")));
    }
    if (x - 1.0).abs() < 1e-3 {
        return Err(Error::Pole { function: "zeta", arg: x });
    }
    if x == 0.0 {
        return Ok(-0.5);
    }
    if x > 0.0 {
        if x > 60.0 {
            return Ok(1.0 + 2f64.powf(-x) + 3f64.powf(-x));
        }
        return Ok(eta(x) / (1.0 - 2f64.powf(1.0 - x)));
    }
    if x == x.round() && (x as i64) % 2 == 0 {
        return Ok(0.0);
    }
    Ok(zeta_functional_factor(x)? * riemann_zeta(1.0 - x)?)
}

// Stieltjes constants gamma_1..gamma_3
const STIELTJES: [f64; 3] = [
    -0.072_815_845_483_676_72,
    -0.009_690_363_192_872_318,
    0.002_053_834_420_303_346,
];

/// Zeta without the exclusion zone around the pole: within `1e-3` of it the
/// Laurent expansion is used.
pub(crate) fn zeta_any(x: f64) -> Result<f64> {
    let e = x - 1.0;
    if e == 0.0 {
        return Err(Error::Pole { function: "zeta", arg: x });
    }
    if e.abs() < 1e-3 {
        return Ok(zeta_laurent(x));
    }
    riemann_zeta(x)
}

fn zeta_laurent(x: f64) -> f64 {
    let e = x - 1.0;
    let mut v = 1.0 / e + EULER_GAMMA;
    let mut p = 1.0;
    let mut fact = 1.0;
    for (k, g) in STIELTJES.iter().enumerate() {
        p *= -e;
        fact *= (k + 1) as f64;
        v += g * p / fact;
    }
    v
}

/// `e^z K_nu(z)`, by trapezoidal quadrature of
/// `int_0^inf exp(-z (cosh t - 1)) cosh(nu t) dt`.
pub fn bessel_k_scaled(nu: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::invalid(format!("bessel_k needs z > 0, got {z}")));
    }
    let nu = nu.abs();
    let f = |t: f64| -> f64 {
        let sh = (0.5 * t).sinh();
        let e = -2.0 * z * sh * sh + nu * t;
        0.5 * (e.exp() + (e - 2.0 * nu * t).exp())
    };
    // crude upper limit: the exponent is below -60 beyond it
    let mut t_max: f64 = 1.0;
    while 2.0 * z * (0.5 * t_max).sinh().powi(2) - nu * t_max < 60.0 + (1.0 + nu).ln() {
        t_max *= 1.5;
    }
    let mut h = 0.5;
    let mut sum = 0.5 * f(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        sum += f(k as f64 * h);
        k += 1;
    }
    let mut prev = sum * h;
    for _ in 0..12 {
        let mut add = 0.0;
        let mut k = 1;
        while k as f64 * h * 0.5 <= t_max {
            add += f(k as f64 * h * 0.5);
            k += 2;
        }
        sum += add;
        h *= 0.5;
        let next = sum * h;
        if (next - prev).abs() <= 1e-15 * next {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence {
        what: "bessel_k quadrature",
        estimate: (sum * h - prev).abs(),
    })
}

/// Modified Bessel function of the second kind `K_nu(z)`, `z > 0`.
pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    Ok(bessel_k_scaled(nu, z)? * (-z).exp())
}

/// `sum_{d | r} d^beta`.
pub fn sigma_div(beta: f64, r: u64) -> Result<f64> {
    if r == 0 {
        return Err(Error::invalid("sigma_div needs r >= 1"));
    }
    let mut total = 0.0;
    let mut d = 1u64;
    while d * d <= r {
        if r % d == 0 {
            total += (d as f64).powf(beta);
            let e = r / d;
            if e != d {
                total += (e as f64).powf(beta);
            }
        }
        d += 1;
    }
    Ok(total)
}
