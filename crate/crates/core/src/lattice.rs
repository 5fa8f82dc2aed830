//! Two-dimensional Bravais lattices: Epstein zeta functions and relative
//! lattice energies.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::{KernelCase, KernelSpec};
use crate::quadrature::tanh_sinh;
use crate::specfun::{bessel_k, gamma_fn, sigma_div, zeta_any, EULER_GAMMA};

/// Unit-covolume lattice `y^{-1/2}((x, y) Z + (1, 0) Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lattice2D {
    pub x: f64,
    pub y: f64,
}

impl Lattice2D {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::invalid(format!("tau = {x} + {y}i is not in the upper half plane")));
        }
        Ok(Lattice2D { x, y })
    }

    pub fn square() -> Self {
        Lattice2D { x: 0.0, y: 1.0 }
    }

    pub fn triangular() -> Self {
        Lattice2D {
            x: 0.5,
            y: 0.75f64.sqrt(),
        }
    }

    /// Equivalent lattice with `|x| <= 1/2` and `|tau| >= 1`.
    pub fn canonical(&self) -> Self {
        let (mut x, mut y) = (self.x, self.y);
        for _ in 0..200 {
            x -= x.round();
            let m = x * x + y * y;
            if m >= 1.0 - 1e-15 {
                break;
            }
            // tau -> -1/tau
            x = -x / m;
            y /= m;
        }
        Lattice2D { x, y }
    }

    /// Whether this lattice is the triangular one, up to equivalence.
    pub fn is_triangular(&self, tol: f64) -> bool {
        let c = self.canonical();
        (c.x.abs() - 0.5).abs() < tol && (c.y - 0.75f64.sqrt()).abs() < tol
    }
}

fn check_alpha_direct(alpha: f64) -> Result<()> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!(
            "direct Epstein summation needs alpha > 1, got {alpha}"
        )));
    }
    Ok(())
}

/// Smoothed lattice sum `sum chi(|q|) |q|^{-2 alpha}` plus the integral of the
/// complementary part, with `chi(r) = erfc((r - R)/sigma)/2`.
fn epstein_smoothed(lat: &Lattice2D, alpha: f64, big_r: f64) -> Result<f64> {
    let sigma = big_r / 10.0;
    let t = big_r + 8.0 * sigma;
    let sy = lat.y.sqrt();
    let m_max = (t / sy).ceil() as i64;
    let mut sum = 0.0;
    for m in -m_max..=m_max {
        let mf = m as f64;
        let centre = -mf * lat.x;
        let half = t * sy;
        let lo = (centre - half).floor() as i64;
        let hi = (centre + half).ceil() as i64;
        for n in lo..=hi {
            if m == 0 && n == 0 {
                continue;
            }
            let u = mf * lat.x + n as f64;
            let r2 = (u * u + mf * mf * lat.y * lat.y) / lat.y;
            let r = r2.sqrt();
            if r >= t {
                continue;
            }
            let chi = 0.5 * libm::erfc((r - big_r) / sigma);
            sum += chi * r2.powf(-alpha);
        }
    }
    let band = tanh_sinh(
        |s| 0.5 * libm::erfc((big_r - s) / sigma) * s.powf(1.0 - 2.0 * alpha),
        big_r - 8.0 * sigma,
        t,
        1e-15,
    )?;
    let tail = t.powf(2.0 - 2.0 * alpha) / (2.0 * alpha - 2.0);
    Ok(sum + 2.0 * PI * (band + tail))
}

/// `Z_tau(alpha) = sum_{q != 0} |q|^{-2 alpha}` by direct summation, `alpha > 1`.
pub fn epstein_zeta_direct(lat: &Lattice2D, alpha: f64) -> Result<f64> {
    check_alpha_direct(alpha)?;
    let lat = lat.canonical();
    let mut r = 12.0;
    let mut prev = epstein_smoothed(&lat, alpha, r)?;
    for _ in 0..8 {
        r *= 1.5;
        let next = epstein_smoothed(&lat, alpha, r)?;
        if (next - prev).abs() <= 1e-12 * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence {
        what: "direct Epstein sum",
        estimate: (prev - epstein_smoothed(&lat, alpha, r / 1.5)?).abs(),
    })
}

/// The Bessel series `sum_r r^{alpha-1/2} sigma_{1-2alpha}(r) K_{alpha-1/2}(2 pi r y) cos(2 pi r x)`.
fn bessel_series(x: f64, y: f64, alpha: f64) -> Result<f64> {
    let nu = alpha - 0.5;
    let mut total = 0.0;
    for r in 1..10_000u64 {
        let rf = r as f64;
        let mag = rf.powf(nu) * sigma_div(1.0 - 2.0 * alpha, r)? * bessel_k(nu, 2.0 * PI * rf * y)?;
        total += mag * (2.0 * PI * rf * x).cos();
        if mag < 1e-18 * total.abs().max(1.0) {
            return Ok(total);
        }
    }
    Err(Error::NonConvergence {
        what: "Chowla-Selberg Bessel series",
        estimate: f64::NAN,
    })
}

/// `Q(x, y, alpha)`.
pub fn chowla_selberg_q(x: f64, y: f64, alpha: f64) -> Result<f64> {
    Ok(8.0 * PI.powf(alpha) * y.sqrt() / gamma_fn(alpha)? * bessel_series(x, y, alpha)?)
}

const HALF_TOL: f64 = 1e-9;

/// Analytic continuation of `Z_tau(alpha)` via the Chowla-Selberg formula.
///
/// At `alpha = 1/2` the two zeta terms have cancelling poles and the limit is
/// used; `alpha = 1` is the pole of `Z` itself and is rejected.
pub fn epstein_zeta_cs(lat: &Lattice2D, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if (alpha - 1.0).abs() < HALF_TOL {
        return Err(Error::invalid(
            "Z_tau has a pole at alpha = 1; use epstein_zeta_finite_part",
        ));
    }
    let Lattice2D { x, y } = lat.canonical();
    if (alpha - 0.5).abs() < HALF_TOL {
        let head = 2.0 * y.sqrt() * (y.ln() + EULER_GAMMA - (4.0 * PI).ln());
        return Ok(head + chowla_selberg_q(x, y, 0.5)?);
    }
    let a = 2.0 * y.powf(alpha) * zeta_any(2.0 * alpha)?;
    let b = 2.0 * y.powf(1.0 - alpha) * zeta_any(2.0 * alpha - 1.0)? * PI.sqrt() * gamma_fn(alpha - 0.5)?
        / gamma_fn(alpha)?;
    Ok(a + b + chowla_selberg_q(x, y, alpha)?)
}

/// Constant term of the Laurent expansion of `Z_tau` at `alpha = 1`. The
/// residue (`pi`) does not depend on `tau`, so differences of finite parts are
/// the continuous extension of differences of `Z` across the pole.
pub fn epstein_zeta_finite_part(lat: &Lattice2D) -> Result<f64> {
    let Lattice2D { x, y } = lat.canonical();
    Ok(PI * PI * y / 3.0 + PI * (2.0 * EULER_GAMMA - y.ln() - 2.0 * 2f64.ln()) + chowla_selberg_q(x, y, 1.0)?)
}

fn lattice_value(lat: &Lattice2D, alpha: f64) -> Result<f64> {
    if (alpha - 1.0).abs() < HALF_TOL {
        epstein_zeta_finite_part(lat)
    } else {
        epstein_zeta_cs(lat, alpha)
    }
}

fn check_planar(spec: &KernelSpec) -> Result<()> {
    match (spec.case, spec.d) {
        (KernelCase::Riesz, 2) | (KernelCase::Log2d, 2) => Ok(()),
        _ => Err(Error::invalid(format!(
            "lattice energies need a planar Riesz or log kernel, got {:?} in d={}",
            spec.case, spec.d
        ))),
    }
}

/// `W(Lambda_tau) - W(Lambda_tri) = c^2 / (2 pi)^{2 alpha} (Z_tau - Z_tri)`.
pub fn relative_lattice_w(lat: &Lattice2D, spec: &KernelSpec) -> Result<f64> {
    check_planar(spec)?;
    let tri = lattice_value(&Lattice2D::triangular(), spec.alpha)?;
    relative_with_reference(lat, spec, tri)
}

fn relative_with_reference(lat: &Lattice2D, spec: &KernelSpec, tri: f64) -> Result<f64> {
    if lat.is_triangular(1e-13) {
        return Ok(0.0);
    }
    let z = lattice_value(lat, spec.alpha)?;
    Ok(spec.c_ds * spec.c_ds / (2.0 * PI).powf(2.0 * spec.alpha) * (z - tri))
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub x: f64,
    pub y: f64,
    pub relative_w: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    /// Reduced representative of the minimizing cell.
    pub argmin: (f64, f64),
    pub min_value: f64,
    pub grid: Vec<ScanPoint>,
}

impl ScanResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,relative_W\n");
        for p in &self.grid {
            out.push_str(&format!("{:.12},{:.12},{:.15e}\n", p.x, p.y, p.relative_w));
        }
        out
    }
}

/// Evaluate the relative lattice energy on a `resolution x resolution` grid
/// over `|x| <= 1/2, sqrt(1 - x^2) <= y <= 3`.
pub fn scan_fundamental_domain(spec: &KernelSpec, resolution: usize) -> Result<ScanResult> {
    check_planar(spec)?;
    if resolution < 16 {
        return Err(Error::invalid("scan resolution must be at least 16"));
    }
    let tri = lattice_value(&Lattice2D::triangular(), spec.alpha)?;
    let step = 1.0 / (resolution - 1) as f64;
    let cells: Vec<(f64, f64)> = (0..resolution)
        .flat_map(|i| {
            let x = -0.5 + i as f64 * step;
            let lo = (1.0 - x * x).sqrt();
            (0..resolution).map(move |j| (x, lo + (3.0 - lo) * j as f64 * step))
        })
        .collect();
    let grid = cells
        .par_iter()
        .map(|&(x, y)| {
            let w = relative_with_reference(&Lattice2D { x, y }, spec, tri)?;
            Ok(ScanPoint { x, y, relative_w: w })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = grid
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.relative_w.total_cmp(&b.relative_w).then(i.cmp(j)))
        .map(|(_, p)| p)
        .expect("grid is nonempty");
    let rep = Lattice2D { x: best.x, y: best.y }.canonical();
    Ok(ScanResult {
        argmin: (rep.x, rep.y),
        min_value: best.relative_w,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQ: [(f64, f64); 4] = [
        (1.2, 18.363_225_187_617_979_785),
        (1.3, 13.160_278_487_044_914_803),
        (1.5, 9.033_621_683_100_950_306),
        (2.0, 6.026_812_039_691_940_124),
    ];

    fn t3() -> Lattice2D {
        Lattice2D::new(0.3, 1.2).unwrap()
    }

    #[test]
    fn direct_sum_matches_square_factorization() {
        for (a, want) in SQ {
            let got = epstein_zeta_direct(&Lattice2D::square(), a).unwrap();
            assert!((got - want).abs() < 1e-9, "alpha {a}: {got} vs {want}");
        }
        assert!(epstein_zeta_direct(&Lattice2D::square(), 1.0).is_err());
    }

    #[test]
    fn direct_sum_symmetric_in_x() {
        let a = epstein_zeta_direct(&Lattice2D::new(0.3, 1.1).unwrap(), 1.4).unwrap();
        let b = epstein_zeta_direct(&Lattice2D::new(0.7, 1.1).unwrap(), 1.4).unwrap();
        assert!((a - b).abs() < 1e-11);
    }

    #[test]
    fn continuation_frozen_values() {
        let cases = [
            (Lattice2D::square(), 0.75, -10.077_559_478_793_152_101),
            (Lattice2D::square(), 0.25, -1.921_689_221_179_930_118),
            (Lattice2D::square(), 0.5, -3.900_264_921_214_251_792),
            (Lattice2D::triangular(), 2.0, 5.783_359_299_678_672_313),
            (Lattice2D::triangular(), 0.75, -10.117_741_276_555_848_648),
            (Lattice2D::triangular(), 0.5, -3.921_031_579_858_533_988),
            (t3(), 1.5, 9.162_403_801_681_018_456),
            (t3(), 0.25, -1.914_857_928_679_140_907),
            (t3(), 0.5, -3.881_781_686_580_955_582),
        ];
        for (lat, a, want) in cases {
            let got = epstein_zeta_cs(&lat, a).unwrap();
            assert!((got - want).abs() < 1e-8, "{lat:?} alpha {a}: {got} vs {want}");
        }
        let fp = [
            (Lattice2D::square(), 2.584_981_759_579_253_210),
            (Lattice2D::triangular(), 2.518_477_368_883_596_623),
            (t3(), 2.644_574_293_906_854_937),
        ];
        for (lat, want) in fp {
            assert!((epstein_zeta_finite_part(&lat).unwrap() - want).abs() < 1e-8);
        }
        assert!(epstein_zeta_cs(&Lattice2D::square(), 1.0).is_err());
    }

    #[test]
    fn triangular_below_square_at_three_quarters() {
        let d = epstein_zeta_cs(&Lattice2D::square(), 0.75).unwrap()
            - epstein_zeta_cs(&Lattice2D::triangular(), 0.75).unwrap();
        assert!(d > 0.0);
    }

    #[test]
    fn bessel_series_terms_decay_fast() {
        // terms at x = 0.25, y = 2, alpha = 0.75 drop below 1e-16 by r = 10
        let nu = 0.25;
        let r: f64 = 10.0;
        let term = r.powf(nu) * sigma_div(-0.5, 10).unwrap() * bessel_k(nu, 2.0 * PI * r * 2.0).unwrap();
        assert!(term < 1e-16);
        assert!(chowla_selberg_q(0.25, 2.0, 0.75).unwrap().is_finite());
    }

    #[test]
    fn relative_energy_properties() {
        let spec = KernelSpec::riesz(2, 1.0).unwrap();
        assert_eq!(relative_lattice_w(&Lattice2D::triangular(), &spec).unwrap(), 0.0);
        let sq = relative_lattice_w(&Lattice2D::square(), &spec).unwrap();
        assert!(sq > 0.0);
        let moved = Lattice2D::new(1.0, 1.0).unwrap();
        assert!((relative_lattice_w(&moved, &spec).unwrap() - sq).abs() < 1e-12);
        let inverted = Lattice2D::new(0.2, 1.3).unwrap();
        let m = 0.2f64 * 0.2 + 1.3 * 1.3;
        let image = Lattice2D::new(-0.2 / m, 1.3 / m).unwrap();
        let a = relative_lattice_w(&inverted, &spec).unwrap();
        let b = relative_lattice_w(&image, &spec).unwrap();
        assert!((a - b).abs() < 1e-12);
        let log = KernelSpec::log2d();
        assert!(relative_lattice_w(&Lattice2D::square(), &log).unwrap() > 0.0);
        assert!(relative_lattice_w(&Lattice2D::square(), &KernelSpec::log1d()).is_err());
    }

    #[test]
    fn canonicalization() {
        let c = Lattice2D::new(2.3, 0.4).unwrap().canonical();
        assert!(c.x.abs() <= 0.5 && c.x * c.x + c.y * c.y >= 1.0 - 1e-12);
        assert!(Lattice2D::new(-0.5, 0.75f64.sqrt()).unwrap().is_triangular(1e-12));
        assert!(!Lattice2D::square().is_triangular(1e-6));
    }
}
