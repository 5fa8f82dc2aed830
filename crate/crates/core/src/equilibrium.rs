//! Confining potentials with explicit equilibrium measures.

use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::quadrature::tanh_sinh;

const QUAD_TOL: f64 = 1e-13;
const CDF_TABLE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// `V = x^2 / 2` with the log kernel on the line.
    Semicircle,
    /// `V = |x|^2` with the log kernel in the plane.
    CircularLaw,
}

/// A confining potential together with its equilibrium measure. Both models
/// are supported on a centred interval or disk of radius `support_radius`.
#[derive(Debug, Clone)]
pub struct EquilibriumModel {
    pub kind: ModelKind,
    pub spec: KernelSpec,
    pub support_radius: f64,
    pub robin_c: f64,
    pub energy_e: f64,
    pub m_bar: f64,
    /// Set to false to drop `V` entirely (used to check translation invariance).
    pub confined: bool,
    cdf: Vec<(f64, f64)>,
}

pub fn semicircle_model() -> EquilibriumModel {
    EquilibriumModel::new(ModelKind::Semicircle)
}

pub fn circular_law_model() -> EquilibriumModel {
    EquilibriumModel::new(ModelKind::CircularLaw)
}

fn semicircle_cdf(x: f64) -> f64 {
    let x = x.clamp(-2.0, 2.0);
    0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (0.5 * x).asin() / PI
}

impl EquilibriumModel {
    pub fn new(kind: ModelKind) -> Self {
        let (spec, radius) = match kind {
            ModelKind::Semicircle => (KernelSpec::log1d(), 2.0),
            ModelKind::CircularLaw => (KernelSpec::log2d(), 1.0),
        };
        // radial (2D) or signed (1D) CDF table used for sampling
        let cdf = (0..CDF_TABLE)
            .map(|i| {
                let t = i as f64 / (CDF_TABLE - 1) as f64;
                match kind {
                    ModelKind::Semicircle => {
                        let x = -2.0 + 4.0 * t;
                        (x, semicircle_cdf(x))
                    }
                    ModelKind::CircularLaw => (t, t * t),
                }
            })
            .collect();
        EquilibriumModel {
            kind,
            spec,
            support_radius: radius,
            robin_c: 0.5,
            energy_e: 0.75,
            m_bar: 1.0 / PI,
            confined: true,
            cdf,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "semicircle" => Ok(semicircle_model()),
            "circular-law" | "circular" => Ok(circular_law_model()),
            other => Err(Error::invalid(format!("unknown model '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::Semicircle => "semicircle",
            ModelKind::CircularLaw => "circular-law",
        }
    }

    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn without_confinement(&self) -> Self {
        EquilibriumModel {
            confined: false,
            ..self.clone()
        }
    }

    #[inline]
    fn norm2(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[inline]
    pub fn v(&self, x: &[f64]) -> f64 {
        if !self.confined {
            return 0.0;
        }
        match self.kind {
            ModelKind::Semicircle => 0.5 * x[0] * x[0],
            ModelKind::CircularLaw => Self::norm2(x),
        }
    }

    #[inline]
    pub fn grad_v(&self, x: &[f64], out: &mut [f64]) {
        let f = match (self.confined, self.kind) {
            (false, _) => 0.0,
            (true, ModelKind::Semicircle) => 1.0,
            (true, ModelKind::CircularLaw) => 2.0,
        };
        for (o, xi) in out.iter_mut().zip(x) {
            *o = f * xi;
        }
    }

    /// `int V dmu_V`.
    pub fn mean_v(&self) -> f64 {
        match self.kind {
            ModelKind::Semicircle => 0.5,
            ModelKind::CircularLaw => 0.5,
        }
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        match self.kind {
            ModelKind::Semicircle => (4.0 - x[0] * x[0]).max(0.0).sqrt() / (2.0 * PI),
            ModelKind::CircularLaw => {
                if Self::norm2(x) <= 1.0 {
                    1.0 / PI
                } else {
                    0.0
                }
            }
        }
    }

    pub fn in_support(&self, x: &[f64]) -> bool {
        Self::norm2(x).sqrt() <= self.support_radius
    }

    /// `h^mu(x)`, using the Frostman identity on the support.
    pub fn potential(&self, x: &[f64]) -> Result<f64> {
        if self.in_support(x) {
            return Ok(self.robin_c - self.v(x) / 2.0);
        }
        match self.kind {
            ModelKind::Semicircle => self.potential_quadrature(x),
            ModelKind::CircularLaw => Ok(-Self::norm2(x).sqrt().ln()),
        }
    }

    /// `h^mu(x)` by quadrature everywhere, never using the Frostman identity.
    ///
    /// In 1D the integral is taken in the angle `y = 2 cos(theta)`, split at
    /// the singular angle. In 2D the angular integral is done with Newton's
    /// theorem and the radial one by quadrature.
    pub fn potential_quadrature(&self, x: &[f64]) -> Result<f64> {
        match self.kind {
            ModelKind::Semicircle => semicircle_h(x[0]),
            ModelKind::CircularLaw => {
                let rho = Self::norm2(x).sqrt();
                let radial = |r: f64| if r == 0.0 { 0.0 } else { -2.0 * r * r.max(rho).ln() };
                if rho >= 1.0 {
                    tanh_sinh(radial, 0.0, 1.0, QUAD_TOL)
                } else {
                    Ok(tanh_sinh(radial, 0.0, rho, QUAD_TOL)? + tanh_sinh(radial, rho, 1.0, QUAD_TOL)?)
                }
            }
        }
    }

    /// Full two-dimensional quadrature of the disk potential (2D models only),
    /// used as an independent check of [`Self::potential_quadrature`].
    pub fn potential_quadrature_2d(&self, x: &[f64]) -> Result<f64> {
        if self.kind != ModelKind::CircularLaw {
            return Err(Error::Unsupported("2D quadrature on a 1D model".into()));
        }
        let rho = Self::norm2(x).sqrt();
        // inner: int_0^pi -log|x - r e^{i theta}| dtheta, doubled; singular at
        // theta = 0 when r = rho
        let inner = |r: f64| -> Result<f64> {
            let f = |th: f64| {
                let s = (0.5 * th).sin();
                -(rho - r).hypot(2.0 * rho.sqrt() * r.sqrt() * s).ln()
            };
            Ok(2.0 * tanh_sinh(f, 0.0, PI, QUAD_TOL)?)
        };
        let outer = |a: f64, b: f64| -> Result<f64> {
            let err = std::cell::RefCell::new(None);
            let v = tanh_sinh(
                |r| match inner(r) {
                    Ok(v) => r * v / PI,
                    Err(e) => {
                        *err.borrow_mut() = Some(e);
                        0.0
                    }
                },
                a,
                b,
                1e-11,
            )?;
            match err.into_inner() {
                Some(e) => Err(e),
                None => Ok(v),
            }
        };
        if rho >= 1.0 || rho == 0.0 {
            outer(0.0, 1.0)
        } else {
            Ok(outer(0.0, rho)? + outer(rho, 1.0)?)
        }
    }

    /// `zeta(x) = h^mu(x) + V(x)/2 - c`, exactly zero on the support.
    pub fn zeta(&self, x: &[f64]) -> Result<f64> {
        if self.in_support(x) {
            return Ok(0.0);
        }
        let z = self.potential(x)? + self.v(x) / 2.0 - self.robin_c;
        Ok(z.max(0.0))
    }

    /// Max violation of the Frostman conditions over `grid`, by quadrature only.
    pub fn frostman_residual(&self, grid: &[Vec<f64>]) -> Result<f64> {
        if grid.is_empty() {
            return Err(Error::invalid("frostman_residual needs a nonempty grid"));
        }
        let mut worst: f64 = 0.0;
        for x in grid {
            let h = match self.kind {
                ModelKind::Semicircle => self.potential_quadrature(x)?,
                ModelKind::CircularLaw => self.potential_quadrature_2d(x)?,
            };
            let r = h + self.v(x) / 2.0 - self.robin_c;
            let viol = if self.in_support(x) { r.abs() } else { (-r).max(0.0) };
            worst = worst.max(viol);
        }
        Ok(worst)
    }

    /// `int F(mu_V(x)) dx` over the support, by quadrature.
    pub fn integrate_density<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        match self.kind {
            ModelKind::Semicircle => {
                // x = 2 cos(theta), dx = 2 sin(theta) dtheta, symmetric halves
                let g = |th: f64| {
                    let s = th.sin();
                    4.0 * s * f(s / PI)
                };
                tanh_sinh(g, 0.0, FRAC_PI_2, 1e-12)
            }
            ModelKind::CircularLaw => tanh_sinh(|r| 2.0 * PI * r * f(1.0 / PI), 0.0, 1.0, 1e-12),
        }
    }

    /// Predicted limit of the scaled next-order energy: `xi int mu^{1+s/d}`
    /// (Riesz) or `xi - (1/d) int mu log mu` (log cases).
    pub fn predicted_next_order_constant(&self, xi: f64) -> Result<f64> {
        let d = self.d() as f64;
        if self.spec.is_log() {
            let ent = self.integrate_density(|m| if m > 0.0 { m * m.ln() } else { 0.0 })?;
            Ok(xi - ent / d)
        } else {
            let p = 1.0 + self.spec.s / d;
            Ok(xi * self.integrate_density(|m| m.powf(p))?)
        }
    }

    /// CDF of the law (1D) or of the radius (2D).
    pub fn cdf(&self, t: f64) -> f64 {
        match self.kind {
            ModelKind::Semicircle => semicircle_cdf(t),
            ModelKind::CircularLaw => t.clamp(0.0, 1.0).powi(2),
        }
    }

    /// Inverse of the tabulated CDF, linear between table nodes.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let idx = self.cdf.partition_point(|&(_, c)| c < u);
        if idx == 0 {
            return self.cdf[0].0;
        }
        if idx >= self.cdf.len() {
            return self.cdf[self.cdf.len() - 1].0;
        }
        let (x0, c0) = self.cdf[idx - 1];
        let (x1, c1) = self.cdf[idx];
        if c1 == c0 {
            x0
        } else {
            x0 + (x1 - x0) * (u - c0) / (c1 - c0)
        }
    }
}

/// Semicircle potential by quadrature in the angle variable.
fn semicircle_h(x: f64) -> Result<f64> {
    let x = x.abs();
    let w = |th: f64| 2.0 / PI * th.sin().powi(2);
    if x >= 2.0 {
        // |x - 2cos t| = (x - 2) + 4 sin^2(t/2)
        let f = |t: f64| {
            let s = (0.5 * t).sin();
            let wt = w(t);
            if wt == 0.0 {
                return 0.0;
            }
            -((x - 2.0) + 4.0 * s * s).ln() * wt
        };
        return tanh_sinh(f, 0.0, PI, QUAD_TOL);
    }
    let t0 = (0.5 * x).acos();
    // |2cos(t0) - 2cos(t)| = 4 |sin((t+t0)/2) sin((t-t0)/2)|, with t = t0 -/+ u
    let left = |u: f64| {
        let t = t0 - u;
        -(4.0 * (0.5 * (t + t0)).sin().abs() * (0.5 * u).sin()).ln() * w(t)
    };
    let right = |u: f64| {
        let t = t0 + u;
        -(4.0 * (0.5 * (t + t0)).sin().abs() * (0.5 * u).sin()).ln() * w(t)
    };
    let mut v = 0.0;
    if t0 > 0.0 {
        v += tanh_sinh(left, 0.0, t0, QUAD_TOL)?;
    }
    if t0 < PI {
        v += tanh_sinh(right, 0.0, PI - t0, QUAD_TOL)?;
    }
    Ok(v)
}
