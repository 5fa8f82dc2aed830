//! The n-point energy `H_n`, its gradient and the splitting decomposition.

use serde::Serialize;
use std::f64::consts::PI;

use crate::equilibrium::EquilibriumModel;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::specfun::gamma_fn;

/// `n` labelled points in `R^d`, stored contiguously.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Configuration {
    pub d: usize,
    pub coords: Vec<f64>,
}

impl Configuration {
    pub fn new(d: usize, coords: Vec<f64>) -> Result<Self> {
        if d == 0 || coords.len() % d != 0 {
            return Err(Error::invalid(format!(
                "{} coordinates do not split into points of dimension {d}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate {bad}")));
        }
        Ok(Configuration { d, coords })
    }

    pub fn from_points(d: usize, points: &[Vec<f64>]) -> Result<Self> {
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::invalid(format!("every point must have {d} coordinates")));
        }
        Self::new(d, points.iter().flatten().copied().collect())
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.d
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d)
    }

    pub fn to_points(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `g` as a function of the squared distance.
#[inline]
pub(crate) fn g_of_r2(spec: &KernelSpec, r2: f64) -> f64 {
    if spec.is_log() {
        -0.5 * r2.ln()
    } else {
        r2.powf(-0.5 * spec.s)
    }
}

/// Interaction of one point with all the others, `sum_{j != i} g(x_i - x_j)`.
pub(crate) fn interaction_with(spec: &KernelSpec, config: &Configuration, i: usize, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (j, p) in config.points().enumerate() {
        if j == i {
            continue;
        }
        let r2 = dist2(x, p);
        if r2 == 0.0 {
            return f64::INFINITY;
        }
        acc += g_of_r2(spec, r2);
    }
    acc
}

/// Ordered-pair interaction `sum_{i != j} g(x_i - x_j)`; `+inf` on collision.
pub fn pair_energy(spec: &KernelSpec, config: &Configuration) -> f64 {
    let n = config.n();
    let mut acc = 0.0;
    for i in 0..n {
        let xi = config.point(i);
        for j in (i + 1)..n {
            let r2 = dist2(xi, config.point(j));
            if r2 == 0.0 {
                return f64::INFINITY;
            }
            acc += g_of_r2(spec, r2);
        }
    }
    2.0 * acc
}

/// `H_n = sum_{i != j} g(x_i - x_j) + n sum_i V(x_i)`, `+inf` on collision.
pub fn hamiltonian(model: &EquilibriumModel, config: &Configuration) -> f64 {
    let pair = pair_energy(&model.spec, config);
    if pair.is_infinite() {
        return f64::INFINITY;
    }
    let n = config.n() as f64;
    pair + n * config.points().map(|p| model.v(p)).sum::<f64>()
}

/// Gradient of `H_n`, flattened like the coordinates.
pub fn gradient(model: &EquilibriumModel, config: &Configuration) -> Result<Vec<f64>> {
    let d = config.d;
    let n = config.n();
    let spec = &model.spec;
    let mut grad = vec![0.0; n * d];
    let mut gv = vec![0.0; d];
    for i in 0..n {
        let xi = config.point(i);
        for j in (i + 1)..n {
            let xj = config.point(j);
            let r2 = dist2(xi, xj);
            if r2 == 0.0 {
                return Err(Error::Collision { i, j });
            }
            let r = r2.sqrt();
            // 2 g'(r) / r times (x_i - x_j)
            let f = 2.0 * spec.dg(r) / r;
            for k in 0..d {
                let c = f * (xi[k] - xj[k]);
                grad[i * d + k] += c;
                grad[j * d + k] -= c;
            }
        }
        model.grad_v(xi, &mut gv);
        for k in 0..d {
            grad[i * d + k] += n as f64 * gv[k];
        }
    }
    Ok(grad)
}

/// Decomposition of `H_n` into mean-field, confinement and next-order parts,
/// with the next-order part computed two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitReport {
    #[serde(rename = "H")]
    pub h: f64,
    pub mean_field: f64,
    pub zeta_term: f64,
    pub log_correction: f64,
    pub next_order_direct: f64,
    pub next_order_potential_route: f64,
    pub route_gap: f64,
}

pub fn split(model: &EquilibriumModel, config: &Configuration) -> Result<SplitReport> {
    let n = config.n();
    let nf = n as f64;
    let pair = pair_energy(&model.spec, config);
    if pair.is_infinite() {
        // locate the offending pair for the error report
        for i in 0..n {
            for j in (i + 1)..n {
                if dist2(config.point(i), config.point(j)) == 0.0 {
                    return Err(Error::Collision { i, j });
                }
            }
        }
    }
    let h = hamiltonian(model, config);
    let mean_field = nf * nf * model.energy_e;
    let mut zeta_sum = 0.0;
    let mut h_sum = 0.0;
    for p in config.points() {
        zeta_sum += model.zeta(p)?;
        h_sum += model.potential_quadrature(p)?;
    }
    let zeta_term = 2.0 * nf * zeta_sum;
    let next_order_direct = h - mean_field - zeta_term;
    let next_order_potential_route =
        pair - 2.0 * nf * h_sum + nf * nf * (model.energy_e - model.mean_v());
    let log_correction = if model.spec.is_log() {
        nf * nf.ln() / model.d() as f64
    } else {
        0.0
    };
    Ok(SplitReport {
        h,
        mean_field,
        zeta_term,
        log_correction,
        next_order_direct,
        next_order_potential_route,
        route_gap: next_order_direct - next_order_potential_route,
    })
}

/// `(H - n^2 E)/n^{1+s/d}` for Riesz kernels, `(H - n^2 E + (n/d) log n)/n`
/// for log kernels.
pub fn next_order_scaled(model: &EquilibriumModel, config: &Configuration) -> f64 {
    next_order_scaled_value(model, config.n(), hamiltonian(model, config))
}

pub fn next_order_scaled_value(model: &EquilibriumModel, n: usize, h: f64) -> f64 {
    let nf = n as f64;
    let d = model.d() as f64;
    let excess = h - nf * nf * model.energy_e;
    if model.spec.is_log() {
        (excess + nf * nf.ln() / d) / nf
    } else {
        excess / nf.powf(1.0 + model.spec.s / d)
    }
}

/// Volume of the ball of radius `l` in `R^d`.
pub fn ball_volume(d: usize, l: f64) -> f64 {
    match d {
        1 => return 2.0 * l,
        2 => return PI * l * l,
        3 => return 4.0 / 3.0 * PI * l * l * l,
        _ => {}
    }
    let df = d as f64;
    PI.powf(df / 2.0) / gamma_fn(df / 2.0 + 1.0).expect("positive argument") * l.powf(df)
}

/// Points in the open ball `B_L(a)` minus `m |B_L(a)|`.
pub fn discrepancy(config: &Configuration, a: &[f64], l: f64, m: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::invalid("discrepancy radius must be positive"));
    }
    if a.len() != config.d {
        return Err(Error::invalid("centre has the wrong dimension"));
    }
    let inside = config.points().filter(|p| dist2(p, a) < l * l).count();
    Ok(inside as f64 - m * ball_volume(config.d, l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{circular_law_model, semicircle_model};
    use approx::assert_abs_diff_eq;

    fn cfg1(xs: &[f64]) -> Configuration {
        Configuration::new(1, xs.to_vec()).unwrap()
    }

    #[test]
    fn hand_computed_energies() {
        let m = semicircle_model();
        let h = hamiltonian(&m, &cfg1(&[-1.0, 1.0]));
        assert_abs_diff_eq!(h, 2.0 - 2.0 * 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(hamiltonian(&m, &cfg1(&[0.7])), 0.245, epsilon = 1e-15);
        let c = circular_law_model();
        let two = Configuration::new(2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(hamiltonian(&c, &two), 2.0, epsilon = 1e-15);
        assert_eq!(hamiltonian(&m, &cfg1(&[0.3, 0.3])), f64::INFINITY);
    }

    #[test]
    fn gradient_hand_value_and_symmetry() {
        let m = semicircle_model();
        let g = gradient(&m, &cfg1(&[-1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(g[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 1.0, epsilon = 1e-15);
        assert!(matches!(
            gradient(&m, &cfg1(&[0.2, 0.5, 0.2])),
            Err(Error::Collision { i: 0, j: 2 })
        ));
    }

    #[test]
    fn split_examples() {
        let m = semicircle_model();
        let r = split(&m, &cfg1(&[-1.5, -0.2, 0.4, 1.9])).unwrap();
        assert_eq!(r.zeta_term, 0.0);
        assert!(r.route_gap.abs() <= 1e-9 * (1.0 + r.h.abs()));
        let one = split(&m, &cfg1(&[0.6])).unwrap();
        assert_abs_diff_eq!(one.next_order_direct, 0.18 - 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(one.next_order_potential_route, 0.18 - 0.75, epsilon = 1e-12);
        let out = split(&m, &cfg1(&[-0.5, 3.0])).unwrap();
        assert!(out.zeta_term > 0.0);
        assert!(out.route_gap.abs() <= 1e-9 * (1.0 + out.h.abs()));
    }

    #[test]
    fn scaled_next_order_for_one_point() {
        let m = semicircle_model();
        assert_abs_diff_eq!(next_order_scaled(&m, &cfg1(&[0.0])), -0.75, epsilon = 1e-15);
    }

    #[test]
    fn discrepancy_examples() {
        let single = cfg1(&[0.3]);
        assert_eq!(discrepancy(&single, &[0.3], 0.7, 0.0).unwrap(), 1.0);
        let empty = cfg1(&[]);
        assert_abs_diff_eq!(discrepancy(&empty, &[0.0], 1.0, 1.0).unwrap(), -2.0, epsilon = 1e-15);
        let lattice = cfg1(&(-30..=30).map(f64::from).collect::<Vec<_>>());
        assert_abs_diff_eq!(discrepancy(&lattice, &[0.0], 10.5, 1.0).unwrap(), 0.0, epsilon = 1e-12);
        let planar = Configuration::new(2, vec![0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(discrepancy(&planar, &[0.0, 0.0], 1.0, 1.0).unwrap(), 1.0 - PI, epsilon = 1e-14);
    }
}
