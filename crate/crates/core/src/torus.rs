//! Periodic configurations on the one-dimensional torus of length `N`:
//! Green functions, the renormalized energy `W`, its truncated version and
//! scaling laws.

use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::{KernelCase, KernelSpec};
use crate::quadrature::exp_sinh;
use crate::specfun::gamma_fn;

const GREEN_TOL: f64 = 1e-13;
const SERIES_ORDER: usize = 4;
const COINCIDENT: f64 = 1e-12;

/// The 1D kernel whose torus Green function has exponent `alpha`:
/// `-log` for `alpha = 1/2`, `|x|^{-(1 - 2 alpha)}` for `alpha < 1/2`.
pub fn kernel_for_alpha(alpha: f64) -> Result<KernelSpec> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::invalid(format!(
            "1D torus Green functions need alpha in (0, 1/2], got {alpha}"
        )));
    }
    if alpha == 0.5 {
        Ok(KernelSpec::log1d())
    } else {
        KernelSpec::riesz(1, 1.0 - 2.0 * alpha)
    }
}

fn check_1d(spec: &KernelSpec) -> Result<()> {
    match spec.case {
        KernelCase::Log1d | KernelCase::Riesz if spec.d == 1 => Ok(()),
        _ => Err(Error::invalid(format!(
            "expected a 1D kernel, got {:?} in d={}",
            spec.case, spec.d
        ))),
    }
}

/// Factor between the Fourier-series Green function with coefficients
/// `(2 pi |m| / N)^{-2 alpha}` and the one whose singularity is `g / c_ds`.
pub fn green_normalization(spec: &KernelSpec) -> Result<f64> {
    check_1d(spec)?;
    if spec.is_log() {
        return Ok(0.5);
    }
    let s = spec.s;
    Ok(PI / (spec.c_ds * gamma_fn(s)? * (0.5 * PI * s).cos()))
}

/// `2 N^{2a-1} / (2 pi)^{2a}`, the prefactor of the cosine series.
fn series_prefactor(n_cell: f64, alpha: f64) -> f64 {
    2.0 * n_cell.powf(2.0 * alpha - 1.0) / (2.0 * PI).powf(2.0 * alpha)
}

fn reduce(n_cell: usize, x: f64) -> Result<f64> {
    if n_cell == 0 {
        return Err(Error::invalid("torus length must be at least 1"));
    }
    if !x.is_finite() {
        return Err(Error::invalid("position must be finite"));
    }
    let n = n_cell as f64;
    let r = x.rem_euclid(n);
    if r.min(n - r) < COINCIDENT {
        return Err(Error::invalid(format!(
            "Green function is singular at x = {x} (multiple of {n_cell})"
        )));
    }
    Ok(r)
}

/// `int_0^inf t^{a-1} (u cos y - u^2) / ((1-u)^2 + 4u sin^2(y/2)) dt`, `u = e^{-t}`,
/// which equals `Gamma(a) sum_k cos(k y) / k^a`.
fn cosine_integral(a: f64, y: f64) -> Result<f64> {
    let s2 = (0.5 * y).sin().powi(2);
    exp_sinh(
        |t| {
            let u = (-t).exp();
            let om = -(-t).exp_m1();
            // u cos y - u^2 = u ((1 - u) - 2 sin^2(y/2))
            let num = u * (om - 2.0 * s2);
            let den = om * om + 4.0 * u * s2;
            t.powf(a - 1.0) * num / den
        },
        GREEN_TOL,
    )
}

/// `y`-derivative of [`cosine_integral`].
fn cosine_integral_dy(a: f64, y: f64) -> Result<f64> {
    let s2 = (0.5 * y).sin().powi(2);
    let sy = y.sin();
    exp_sinh(
        |t| {
            let u = (-t).exp();
            let om = -(-t).exp_m1();
            let den = om * om + 4.0 * u * s2;
            -t.powf(a - 1.0) * sy * u * om * (1.0 + u) / (den * den)
        },
        GREEN_TOL,
    )
}

/// Torus Green function by quadrature of its integral representation.
pub fn green_1d_integral(n_cell: usize, alpha: f64, x: f64) -> Result<f64> {
    let spec = kernel_for_alpha(alpha)?;
    let x = reduce(n_cell, x)?;
    let n = n_cell as f64;
    let a = 2.0 * alpha;
    let y = 2.0 * PI * x / n;
    Ok(green_normalization(&spec)? * series_prefactor(n, alpha) / gamma_fn(a)? * cosine_integral(a, y)?)
}

/// Derivative `G'(x)` of the torus Green function.
pub fn green_1d_derivative(n_cell: usize, alpha: f64, x: f64) -> Result<f64> {
    let spec = kernel_for_alpha(alpha)?;
    let x = reduce(n_cell, x)?;
    let n = n_cell as f64;
    let a = 2.0 * alpha;
    let y = 2.0 * PI * x / n;
    Ok(green_normalization(&spec)? * series_prefactor(n, alpha) / gamma_fn(a)?
        * (2.0 * PI / n)
        * cosine_integral_dy(a, y)?)
}

/// Torus Green function from the cosine series, summed after multiplying by
/// `(1 - e^{iy})^4` so the coefficients become fourth differences of
/// `k^{-2 alpha}` and the series converges absolutely.
pub fn green_1d_series(n_cell: usize, alpha: f64, x: f64) -> Result<f64> {
    let spec = kernel_for_alpha(alpha)?;
    let x = reduce(n_cell, x)?;
    let n = n_cell as f64;
    let a = 2.0 * alpha;
    let y = 2.0 * PI * x / n;
    let m = SERIES_ORDER;
    let sin_half = (0.5 * y).sin();
    let scale = (2.0 * sin_half).powi(m as i32);
    // tail of sum |Delta^m a_k| beyond K is about prod(a+j) K^{1-a-m} / (a+m-1)
    let rising: f64 = (0..m).map(|j| a + j as f64).product();
    let p = a + m as f64 - 1.0;
    let want = 1e-13 * scale;
    let k_max = ((rising / (p * want)).powf(1.0 / p).ceil() as usize).clamp(64, 4_000_000);

    let binom = [1.0, -4.0, 6.0, -4.0, 1.0];
    let coef = |k: usize| -> f64 {
        let mut b = 0.0;
        for (j, c) in binom.iter().enumerate() {
            if k > j {
                b += c * ((k - j) as f64).powf(-a);
            }
        }
        b
    };
    let (mut re, mut im) = (0.0, 0.0);
    // sum from the small tail end first
    for k in (1..=k_max).rev() {
        let b = coef(k);
        let ky = k as f64 * y;
        re += b * ky.cos();
        im += b * ky.sin();
    }
    // divide by (1 - z)^m = (2 sin(y/2))^m e^{i m (y - pi)/2}
    let phase = -(m as f64) * 0.5 * (y - PI);
    let value = (re * phase.cos() - im * phase.sin()) / scale;
    Ok(green_normalization(&spec)? * series_prefactor(n, alpha) * value)
}

/// Default evaluation path.
pub fn green_1d(n_cell: usize, alpha: f64, x: f64) -> Result<f64> {
    green_1d_integral(n_cell, alpha, x)
}

/// `c_ds^2 lim_{x -> 0} (G(x) - g(x) / c_ds)` by Richardson extrapolation in
/// `x^2` over `x_j = N 2^{-j-2}`.
pub fn renormalized_self_energy_1d(n_cell: usize, spec: &KernelSpec) -> Result<f64> {
    check_1d(spec)?;
    let alpha = spec.alpha;
    let n = n_cell as f64;
    let f = |x: f64| -> Result<f64> { Ok(green_1d_integral(n_cell, alpha, x)? - spec.g(x) / spec.c_ds) };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut last_diff = f64::INFINITY;
    for j in 0..14 {
        let x = n * 2f64.powi(-(j as i32) - 2);
        let mut row = vec![f(x)?];
        for k in 1..=j {
            let fac = 4f64.powi(k as i32) - 1.0;
            let v = row[k - 1] + (row[k - 1] - rows[j - 1][k - 1]) / fac;
            row.push(v);
        }
        if j > 0 {
            let diff = (row[j] - rows[j - 1][j - 1]).abs();
            if diff < 1e-8 && j >= 3 {
                return Ok(spec.c_ds * spec.c_ds * row[j]);
            }
            last_diff = diff;
        }
        rows.push(row);
    }
    Err(Error::NonConvergence {
        what: "renormalized self-energy extrapolation",
        estimate: last_diff,
    })
}

/// Points on a periodic cell of volume `N` equal to the number of points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusConfig {
    pub d: usize,
    pub length: f64,
    pub points: Vec<f64>,
}

impl TorusConfig {
    /// `N` points on the circle of length `N`, reduced into `[0, N)`.
    pub fn new_1d(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("torus configuration needs at least one point"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("torus points must be finite"));
        }
        let n = points.len() as f64;
        Ok(TorusConfig {
            d: 1,
            length: n,
            points: points.into_iter().map(|p| p.rem_euclid(n)).collect(),
        })
    }

    pub fn lattice_1d(n: usize) -> Self {
        Self::new_1d((0..n).map(|i| i as f64).collect()).expect("nonempty")
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Distance on the circle.
    pub fn gap(&self, a: f64, b: f64) -> f64 {
        let r = (a - b).rem_euclid(self.length);
        r.min(self.length - r)
    }

    pub fn min_spacing(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                best = best.min(self.gap(self.points[i], self.points[j]));
            }
        }
        best
    }

    /// Whether consecutive gaps are all equal to 1 within `tol`.
    pub fn is_equally_spaced(&self, tol: f64) -> bool {
        let mut p = self.points.clone();
        p.sort_by(f64::total_cmp);
        let n = p.len();
        (0..n).all(|i| {
            let next = if i + 1 < n { p[i + 1] } else { p[0] + self.length };
            (next - p[i] - 1.0).abs() <= tol
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeEnergyReport {
    #[serde(rename = "W_value")]
    pub w_value: f64,
    pub pair_term: f64,
    pub self_term: f64,
    pub eta: Option<f64>,
    pub xi: Option<f64>,
}

fn check_torus(config: &TorusConfig, spec: &KernelSpec) -> Result<()> {
    if config.d != 1 {
        return Err(Error::Unsupported(
            "planar periodic energies are only available for Bravais lattices (relative_lattice_w)".into(),
        ));
    }
    check_1d(spec)?;
    if (config.length - config.n() as f64).abs() > 1e-12 {
        return Err(Error::invalid("torus length must equal the number of points"));
    }
    Ok(())
}

/// `(c^2/N) sum_{i != j} G(a_i - a_j)`, or `None` if two points coincide.
fn pair_sum(config: &TorusConfig, spec: &KernelSpec) -> Result<Option<f64>> {
    let n = config.n();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            if config.gap(config.points[i], config.points[j]) < COINCIDENT {
                return Ok(None);
            }
            acc += 2.0 * green_1d(n, spec.alpha, config.points[i] - config.points[j])?;
        }
    }
    Ok(Some(spec.c_ds * spec.c_ds / n as f64 * acc))
}

/// Renormalized energy of an `N`-point configuration on the torus of length `N`.
pub fn periodic_w(config: &TorusConfig, spec: &KernelSpec) -> Result<LatticeEnergyReport> {
    check_torus(config, spec)?;
    let self_term = renormalized_self_energy_1d(config.n(), spec)?;
    let Some(pair_term) = pair_sum(config, spec)? else {
        return Ok(LatticeEnergyReport {
            w_value: f64::INFINITY,
            pair_term: f64::INFINITY,
            self_term,
            eta: None,
            xi: None,
        });
    };
    let w = pair_term + self_term;
    let xi = config.is_equally_spaced(1e-12).then(|| w / spec.c_ds);
    Ok(LatticeEnergyReport {
        w_value: w,
        pair_term,
        self_term,
        eta: None,
        xi,
    })
}

/// `xi = W(Z) / c_ds` for a 1D kernel.
pub fn xi_1d(spec: &KernelSpec) -> Result<f64> {
    Ok(renormalized_self_energy_1d(1, spec)? / spec.c_ds)
}

const CIRCLE_NODES: usize = 64;

/// Average over the circle of radius `eta` in the extended plane.
fn circle_average<F: Fn(f64, f64) -> f64>(eta: f64, f: F) -> f64 {
    let mut acc = 0.0;
    for k in 0..CIRCLE_NODES {
        let th = 2.0 * PI * (k as f64 + 0.5) / CIRCLE_NODES as f64;
        acc += f(eta * th.cos(), eta * th.sin());
    }
    acc / CIRCLE_NODES as f64
}

/// Truncated energy `W_eta` of a log-gas torus configuration, with the point
/// charges smeared on circles of radius `eta` in the extended plane.
pub fn truncated_periodic_energy(config: &TorusConfig, spec: &KernelSpec, eta: f64) -> Result<LatticeEnergyReport> {
    check_torus(config, spec)?;
    if spec.case != KernelCase::Log1d {
        return Err(Error::Unsupported(
            "truncated torus energy is implemented for the 1D log kernel only".into(),
        ));
    }
    let n = config.n();
    let nf = n as f64;
    let half_min = 0.5 * config.min_spacing();
    if !(eta > 0.0 && eta < half_min.min(1.0)) {
        return Err(Error::invalid(format!(
            "eta = {eta} must lie in (0, {}) (half the minimal spacing)",
            half_min.min(1.0)
        )));
    }
    let c = spec.c_ds;
    // |y| averages to 2 eta / pi on the circle
    let y_avg = 2.0 * eta / PI;
    // extended Green function without its |y| / (2N) part
    let gbar_log = |x: f64, y: f64| {
        let sh = (PI * y / nf).sinh();
        let sn = (PI * x / nf).sin();
        -(4.0 * sh * sh + 4.0 * sn * sn).ln() / (4.0 * PI)
    };
    // c Gbar - g near the origin
    let regular = circle_average(eta, |x, y| {
        let sh = (PI * y / nf).sinh();
        let sn = (PI * x / nf).sin();
        -0.5 * ((4.0 * sh * sh + 4.0 * sn * sn) / (x * x + y * y)).ln()
    }) + c * y_avg / (2.0 * nf);
    let self_term = c * regular + 2.0 * c * eta;
    let mut pair = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let shift = config.points[j] - config.points[i];
            pair += circle_average(eta, |x, y| gbar_log(x + shift, y)) + y_avg / (2.0 * nf);
        }
    }
    let pair_term = c * c / nf * pair;
    Ok(LatticeEnergyReport {
        w_value: pair_term + self_term,
        pair_term,
        self_term,
        eta: Some(eta),
        xi: None,
    })
}

/// Result of rescaling a renormalized energy from density 1 to density `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledEnergy {
    pub value: f64,
    /// Truncation radius at which the unit-density energy is evaluated.
    pub eta: Option<f64>,
}

fn check_m(m: f64) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("density must be positive, got {m}")))
    }
}

/// `W` at density `m` from the unit-density value: `m^{1+s/d} W` for Riesz
/// kernels, `m (W - (2 pi / d) log m)` for log kernels.
pub fn scale_w(value: f64, m: f64, spec: &KernelSpec, eta: Option<f64>) -> Result<ScaledEnergy> {
    check_m(m)?;
    let d = spec.d as f64;
    let v = if spec.is_log() {
        m * (value - 2.0 * PI / d * m.ln())
    } else {
        m.powf(1.0 + spec.s / d) * value
    };
    Ok(ScaledEnergy {
        value: v,
        eta: eta.map(|e| e * m.powf(1.0 / d)),
    })
}

/// Inverse of [`scale_w`].
pub fn unscale_w(value: f64, m: f64, spec: &KernelSpec, eta: Option<f64>) -> Result<ScaledEnergy> {
    check_m(m)?;
    let d = spec.d as f64;
    let v = if spec.is_log() {
        value / m + 2.0 * PI / d * m.ln()
    } else {
        value / m.powf(1.0 + spec.s / d)
    };
    Ok(ScaledEnergy {
        value: v,
        eta: eta.map(|e| e / m.powf(1.0 / d)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_log(n: f64, x: f64) -> f64 {
        -(2.0 * (PI * x / n).sin()).ln() / (2.0 * PI)
    }

    #[test]
    fn frozen_green_values() {
        let cases = [
            (1, 0.5, 0.1, 0.076_587_240_632_508_281),
            (1, 0.5, 0.25, -0.055_158_900_038_162_898),
            (1, 0.25, 0.1, 0.052_516_376_956_942_054),
            (1, 0.25, 0.25, -0.178_496_606_780_077_797),
            (1, 0.25, 0.4, -0.242_386_935_315_489_300),
            (4, 0.5, 1.7, -0.105_858_442_439_723_070),
            (3, 0.35, 0.1, 0.220_019_913_248_973_348),
            (3, 0.35, 1.7, -0.093_031_235_583_637_722),
        ];
        for (n, a, x, want) in cases {
            let i = green_1d_integral(n, a, x).unwrap();
            let s = green_1d_series(n, a, x).unwrap();
            assert!((i - want).abs() < 1e-10, "integral {n} {a} {x}: {i}");
            assert!((s - want).abs() < 1e-9, "series {n} {a} {x}: {s}");
        }
    }

    #[test]
    fn log_case_closed_form_and_symmetry() {
        let v = green_1d(1, 0.5, 0.5).unwrap();
        assert!((v + 2f64.ln() / (2.0 * PI)).abs() < 1e-12);
        for x in [0.05, 0.3, 0.77] {
            assert!((green_1d(1, 0.5, x).unwrap() - closed_log(1.0, x)).abs() < 1e-11);
        }
        for (n, a, x) in [(1, 0.25, 0.1), (3, 0.35, 0.4)] {
            let l = green_1d(n, a, x).unwrap();
            let r = green_1d(n, a, n as f64 - x).unwrap();
            assert!((l - r).abs() < 1e-12);
        }
        assert!(green_1d(2, 0.5, 2.0).is_err());
        assert!(green_1d(1, 0.7, 0.3).is_err());
    }

    #[test]
    fn derivative_matches_difference() {
        for (n, a, x) in [(1, 0.5, 0.2), (4, 0.5, 1.3), (3, 0.35, 0.7)] {
            let h = 1e-5;
            let fd = (green_1d(n, a, x + h).unwrap() - green_1d(n, a, x - h).unwrap()) / (2.0 * h);
            let d = green_1d_derivative(n, a, x).unwrap();
            assert!((d - fd).abs() < 1e-7 * (1.0 + d.abs()), "{d} vs {fd}");
        }
    }

    #[test]
    fn self_energy_oracles() {
        let log = KernelSpec::log1d();
        let c2 = log.c_ds * log.c_ds;
        let v = renormalized_self_energy_1d(1, &log).unwrap();
        assert!((v + 2.0 * PI * (2.0 * PI).ln()).abs() < 1e-6);
        let v4 = renormalized_self_energy_1d(4, &log).unwrap();
        assert!((v4 / c2 + 0.071_871_619_761_627_332).abs() < 1e-8);
        let r = kernel_for_alpha(0.25).unwrap();
        let v = renormalized_self_energy_1d(1, &r).unwrap();
        assert!((v / (r.c_ds * r.c_ds) + 0.609_425_535_706_118_965).abs() < 1e-8);
        let r = kernel_for_alpha(0.35).unwrap();
        let v = renormalized_self_energy_1d(3, &r).unwrap();
        assert!((v / (r.c_ds * r.c_ds) + 0.412_182_583_148_460_991).abs() < 1e-8);
        assert!((xi_1d(&log).unwrap() + (2.0 * PI).ln()).abs() < 1e-7);
    }

    #[test]
    fn lattice_energy_is_density_independent() {
        let log = KernelSpec::log1d();
        let w1 = periodic_w(&TorusConfig::lattice_1d(1), &log).unwrap();
        assert_eq!(w1.pair_term, 0.0);
        for n in [2, 4, 5] {
            let w = periodic_w(&TorusConfig::lattice_1d(n), &log).unwrap();
            assert!((w.w_value - w1.w_value).abs() < 1e-6, "N={n}: {}", w.w_value);
            assert!(w.xi.is_some());
        }
    }

    #[test]
    fn coincident_points_have_infinite_energy() {
        let log = KernelSpec::log1d();
        let c = TorusConfig::new_1d(vec![0.3, 0.3, 1.5]).unwrap();
        assert_eq!(periodic_w(&c, &log).unwrap().w_value, f64::INFINITY);
        let even = periodic_w(&TorusConfig::new_1d(vec![0.0, 1.0]).unwrap(), &log).unwrap();
        let clustered = periodic_w(&TorusConfig::new_1d(vec![0.0, 0.3]).unwrap(), &log).unwrap();
        assert!(even.w_value < clustered.w_value);
    }

    #[test]
    fn truncated_energy_offset_is_linear() {
        let log = KernelSpec::log1d();
        let cfg = TorusConfig::new_1d(vec![0.1, 0.9, 2.2, 3.4]).unwrap();
        let w = periodic_w(&cfg, &log).unwrap().w_value;
        for eta in [0.2, 0.05, 0.01] {
            let we = truncated_periodic_energy(&cfg, &log, eta).unwrap().w_value;
            assert!((we - w - 8.0 * PI * eta).abs() < 1e-7, "eta {eta}: {}", we - w);
        }
        assert!(truncated_periodic_energy(&cfg, &log, 0.4).is_err());
    }

    #[test]
    fn scaling_round_trip() {
        let log = KernelSpec::log1d();
        let v = scale_w(0.0, std::f64::consts::E, &log, None).unwrap().value;
        assert!((v + 2.0 * PI * std::f64::consts::E).abs() < 1e-12);
        assert_eq!(scale_w(1.7, 1.0, &log, None).unwrap().value, 1.7);
        let r = KernelSpec::riesz(2, 0.8).unwrap();
        let s = scale_w(-2.5, 10.0, &r, Some(0.1)).unwrap();
        let back = unscale_w(s.value, 10.0, &r, s.eta).unwrap();
        assert!((back.value + 2.5).abs() < 1e-12);
        assert!((back.eta.unwrap() - 0.1).abs() < 1e-15);
    }
}
