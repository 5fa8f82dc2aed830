//! Interaction kernels and their extension parameters.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::specfun::gamma_fn;

/// Which interaction is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelCase {
    /// `|x|^-s` with `max(0, d-2) < s < d`.
    Riesz,
    /// `-log|x|` on the line.
    Log1d,
    /// `-log|x|` in the plane.
    Log2d,
    /// `|x|^{2-d}` for `d >= 3`.
    Coulomb,
}

impl std::str::FromStr for KernelCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "riesz" => Ok(KernelCase::Riesz),
            "log1d" => Ok(KernelCase::Log1d),
            "log2d" => Ok(KernelCase::Log2d),
            "coulomb" => Ok(KernelCase::Coulomb),
            other => Err(Error::invalid(format!("unknown kernel case '{other}'"))),
        }
    }
}

/// A fully resolved kernel: the case, the exponent and the parameters of the
/// weighted extension `-div(|y|^gamma grad g) = c_ds delta` in `R^{d+k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub case: KernelCase,
    pub d: usize,
    /// Zero in the logarithmic cases.
    pub s: f64,
    pub k: u8,
    pub gamma: f64,
    pub c_ds: f64,
    pub alpha: f64,
}

impl KernelSpec {
    pub fn new(case: KernelCase, d: usize, s: f64) -> Result<Self> {
        if d < 1 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !s.is_finite() {
            return Err(Error::invalid("exponent must be finite"));
        }
        let df = d as f64;
        let (k, c_ds) = match case {
            KernelCase::Riesz => {
                let lo = (df - 2.0).max(0.0);
                if !(s > lo && s < df) {
                    return Err(Error::invalid(format!(
                        "riesz exponent s={s} outside ({lo}, {df}) for d={d}"
                    )));
                }
                let c = 2.0 * s * 2.0 * PI.powf(df / 2.0) * gamma_fn((s + 2.0 - df) / 2.0)?
                    / gamma_fn((s + 2.0) / 2.0)?;
                (1, c)
            }
            KernelCase::Coulomb => {
                if d < 3 || s != df - 2.0 {
                    return Err(Error::invalid(format!(
                        "coulomb kernel needs d >= 3 and s = d - 2, got d={d}, s={s}"
                    )));
                }
                let c = (df - 2.0) * 2.0 * PI.powf(df / 2.0) / gamma_fn(df / 2.0)?;
                (0, c)
            }
            KernelCase::Log1d | KernelCase::Log2d => {
                let want = if case == KernelCase::Log1d { 1 } else { 2 };
                if d != want {
                    return Err(Error::invalid(format!("{case:?} requires d = {want}")));
                }
                if s != 0.0 {
                    return Err(Error::invalid("logarithmic kernels use s = 0"));
                }
                (if d == 1 { 1 } else { 0 }, 2.0 * PI)
            }
        };
        let gamma = s - df + 2.0 - k as f64;
        Ok(KernelSpec {
            case,
            d,
            s,
            k,
            gamma,
            c_ds,
            alpha: (df - s) / 2.0,
        })
    }

    pub fn riesz(d: usize, s: f64) -> Result<Self> {
        Self::new(KernelCase::Riesz, d, s)
    }

    pub fn log1d() -> Self {
        Self::new(KernelCase::Log1d, 1, 0.0).expect("log1d is admissible")
    }

    pub fn log2d() -> Self {
        Self::new(KernelCase::Log2d, 2, 0.0).expect("log2d is admissible")
    }

    pub fn coulomb(d: usize) -> Result<Self> {
        Self::new(KernelCase::Coulomb, d, d as f64 - 2.0)
    }

    /// The kernel for dimension `d` and exponent `s`, picking the log case
    /// when `s == 0` and Coulomb when `s == d - 2 >= 1`.
    pub fn for_exponent(d: usize, s: f64) -> Result<Self> {
        match (d, s) {
            (1, s) if s == 0.0 => Ok(Self::log1d()),
            (2, s) if s == 0.0 => Ok(Self::log2d()),
            (d, s) if d >= 3 && s == d as f64 - 2.0 => Self::coulomb(d),
            _ => Self::riesz(d, s),
        }
    }

    pub fn is_log(&self) -> bool {
        matches!(self.case, KernelCase::Log1d | KernelCase::Log2d)
    }

    /// `g(r)`, with `g(0) = +inf`.
    #[inline]
    pub fn g(&self, r: f64) -> f64 {
        if self.is_log() {
            -r.ln()
        } else {
            r.powf(-self.s)
        }
    }

    /// `g'(r)`.
    #[inline]
    pub fn dg(&self, r: f64) -> f64 {
        if self.is_log() {
            -1.0 / r
        } else {
            -self.s * r.powf(-self.s - 1.0)
        }
    }
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("distance must be positive and finite, got {r}")))
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("truncation radius must lie in (0, 1), got {eta}")))
    }
}

pub fn make_kernel(case: KernelCase, d: usize, s: f64) -> Result<KernelSpec> {
    KernelSpec::new(case, d, s)
}

pub fn g_eval(spec: &KernelSpec, r: f64) -> Result<f64> {
    check_r(r)?;
    Ok(spec.g(r))
}

/// `min(g(r), g(eta))`.
pub fn g_truncated(spec: &KernelSpec, r: f64, eta: f64) -> Result<f64> {
    check_r(r)?;
    check_eta(eta)?;
    Ok(spec.g(r.max(eta)))
}

/// `(g(r) - g(eta))_+`.
pub fn f_eta(spec: &KernelSpec, r: f64, eta: f64) -> Result<f64> {
    check_r(r)?;
    check_eta(eta)?;
    if r >= eta {
        return Ok(0.0);
    }
    let v = if spec.is_log() {
        (eta / r).ln()
    } else {
        // r^-s - eta^-s = r^-s (1 - (r/eta)^s)
        -spec.g(r) * (spec.s * (r / eta).ln()).exp_m1()
    };
    Ok(v)
}
