//! Gradient descent for `H_n` and for torus energies, multistart, and the
//! regression fit of the large-`n` expansion.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{EquilibriumModel, ModelKind};
use crate::error::{Error, Result};
use crate::hamiltonian::{dist2, gradient, hamiltonian, Configuration};
use crate::kernel::KernelSpec;
use crate::torus::{green_1d, green_1d_derivative, renormalized_self_energy_1d, TorusConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Stop once the max-norm of the gradient is below `gradient_tolerance * n`.
    pub gradient_tolerance: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub seed: u64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            max_iterations: 5000,
            gradient_tolerance: 1e-8,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            seed: 0,
        }
    }
}

impl MinimizeOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.max_iterations > 0
            && self.gradient_tolerance > 0.0
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0
            && self.backtrack_factor > 0.0
            && self.backtrack_factor < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid minimizer options {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizeResult {
    pub config: Configuration,
    pub value: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub gradient_norm: f64,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Descent {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
    termination: Termination,
    gradient_norm: f64,
    trace: Vec<f64>,
}

/// Steepest descent with Armijo backtracking. Trial steps start from the
/// Barzilai-Borwein length; infeasible points (`+inf` energy) are simply
/// rejected by the sufficient-decrease test.
fn descend<E, G>(x0: Vec<f64>, energy: E, grad: G, tol: f64, opts: &MinimizeOptions) -> Result<Descent>
where
    E: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x0;
    let mut f = energy(&x)?;
    if !f.is_finite() {
        return Err(Error::invalid("initial configuration has infinite energy"));
    }
    let mut g = grad(&x)?;
    let mut trace = vec![f];
    let mut step = 1e-2 / max_norm(&g).max(1e-300);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for it in 0..opts.max_iterations {
        let gn = max_norm(&g);
        if gn <= tol {
            return Ok(Descent { x, value: f, iterations: it, termination: Termination::Converged, gradient_norm: gn, trace });
        }
        if let Some((px, pg)) = &prev {
            let mut sy = 0.0;
            let mut yy = 0.0;
            let mut ss = 0.0;
            for k in 0..x.len() {
                let s = x[k] - px[k];
                let y = g[k] - pg[k];
                sy += s * y;
                yy += y * y;
                ss += s * s;
            }
            if sy > 0.0 && yy > 0.0 {
                // alternate the two Barzilai-Borwein lengths
                step = if it % 2 == 0 { ss / sy } else { sy / yy };
            }
        }
        let g2: f64 = g.iter().map(|v| v * v).sum();
        let mut t = step;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            let ft = energy(&trial)?;
            if ft.is_finite() && ft <= f - opts.armijo_c * t * g2 {
                break Some((trial, ft));
            }
            t *= opts.backtrack_factor;
            if t * gn < 1e-18 * (1.0 + max_norm(&x)) {
                break None;
            }
        };
        let Some((nx, nf)) = accepted else {
            return Ok(Descent { x, value: f, iterations: it, termination: Termination::LineSearchFailed, gradient_norm: gn, trace });
        };
        let ng = grad(&nx)?;
        prev = Some((std::mem::replace(&mut x, nx), std::mem::replace(&mut g, ng)));
        f = nf;
        trace.push(f);
    }
    let gn = max_norm(&g);
    let termination = if gn <= tol { Termination::Converged } else { Termination::MaxIterations };
    Ok(Descent { x, value: f, iterations: opts.max_iterations, termination, gradient_norm: gn, trace })
}

/// Local minimization of `H_n` from `init`.
pub fn minimize_local(model: &EquilibriumModel, init: &Configuration, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    minimize_local_traced(model, init, opts).map(|(r, _)| r)
}

/// As [`minimize_local`], also returning the energy after every accepted step.
pub fn minimize_local_traced(
    model: &EquilibriumModel,
    init: &Configuration,
    opts: &MinimizeOptions,
) -> Result<(MinimizeResult, Vec<f64>)> {
    opts.validate()?;
    if init.d != model.d() {
        return Err(Error::invalid("configuration dimension does not match the model"));
    }
    let d = init.d;
    let wrap = |x: &[f64]| Configuration { d, coords: x.to_vec() };
    let tol = opts.gradient_tolerance * init.n() as f64;
    let run = descend(
        init.coords.clone(),
        |x| Ok(hamiltonian(model, &wrap(x))),
        |x| gradient(model, &wrap(x)),
        tol,
        opts,
    )?;
    Ok((
        MinimizeResult {
            config: wrap(&run.x),
            value: run.value,
            iterations: run.iterations,
            termination: run.termination,
            gradient_norm: run.gradient_norm,
        },
        run.trace,
    ))
}

/// Random stream for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `n` i.i.d. draws from the equilibrium measure.
pub fn sample_initial(model: &EquilibriumModel, n: usize, seed: u64) -> Configuration {
    sample_initial_with(model, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_initial_with<R: Rng>(model: &EquilibriumModel, n: usize, rng: &mut R) -> Configuration {
    let coords = match model.kind {
        ModelKind::Semicircle => (0..n).map(|_| model.quantile(rng.random::<f64>())).collect(),
        ModelKind::CircularLaw => {
            let mut out = Vec::with_capacity(2 * n);
            while out.len() < 2 * n {
                let x = rng.random_range(-1.0..1.0);
                let y = rng.random_range(-1.0..1.0);
                if x * x + y * y <= 1.0 {
                    out.push(x);
                    out.push(y);
                }
            }
            out
        }
    };
    Configuration { d: model.d(), coords }
}

/// Best of `trials` local minimizations from independent draws. Trial `t`
/// uses stream `t` of the seed, so results for a prefix of trials agree.
pub fn multistart(model: &EquilibriumModel, n: usize, trials: usize, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    if trials == 0 {
        return Err(Error::invalid("multistart needs at least one trial"));
    }
    let runs = (0..trials)
        .into_par_iter()
        .map(|t| {
            let init = sample_initial_with(model, n, &mut trial_rng(opts.seed, t as u64));
            minimize_local(model, &init, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(i.cmp(j)))
        .map(|(_, r)| r)
        .expect("at least one trial");
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationReport {
    pub min_spacing: f64,
    pub scaled_spacing: f64,
    pub max_zeta: f64,
    pub all_in_support: bool,
}

pub fn separation_report(model: &EquilibriumModel, config: &Configuration) -> Result<SeparationReport> {
    let n = config.n();
    let mut min2 = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            min2 = min2.min(dist2(config.point(i), config.point(j)));
        }
    }
    let min_spacing = min2.sqrt();
    let mut max_zeta: f64 = 0.0;
    for p in config.points() {
        max_zeta = max_zeta.max(model.zeta(p)?);
    }
    Ok(SeparationReport {
        min_spacing,
        scaled_spacing: min_spacing * (n as f64 * model.m_bar).powf(1.0 / model.d() as f64),
        max_zeta,
        all_in_support: config.points().all(|p| model.in_support(p)),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicMinimum {
    pub config: TorusConfig,
    pub value: f64,
    pub iterations: usize,
    pub termination: Termination,
}

/// Gradient descent of the torus energy over the positions of `n_points`
/// points on the circle of length `torus_length = n_points`, starting from a
/// seeded random configuration.
pub fn minimize_periodic(spec: &KernelSpec, n_points: usize, torus_length: f64, opts: &MinimizeOptions) -> Result<PeriodicMinimum> {
    opts.validate()?;
    if spec.d != 1 {
        return Err(Error::invalid("periodic minimization is one-dimensional"));
    }
    if n_points < 2 {
        return Err(Error::invalid("periodic minimization needs at least 2 points"));
    }
    if (torus_length - n_points as f64).abs() > 1e-12 {
        return Err(Error::invalid("torus length must equal the number of points"));
    }
    let alpha = spec.alpha;
    let c2n = spec.c_ds * spec.c_ds / n_points as f64;
    let self_term = renormalized_self_energy_1d(n_points, spec)?;
    let energy = |x: &[f64]| -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..x.len() {
            for j in (i + 1)..x.len() {
                let r = (x[i] - x[j]).rem_euclid(torus_length);
                if r.min(torus_length - r) < 1e-12 {
                    return Ok(f64::INFINITY);
                }
                acc += 2.0 * green_1d(n_points, alpha, r)?;
            }
        }
        Ok(c2n * acc + self_term)
    };
    let grad = |x: &[f64]| -> Result<Vec<f64>> {
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() {
            for j in (i + 1)..x.len() {
                let dg = 2.0 * c2n * green_1d_derivative(n_points, alpha, x[i] - x[j])?;
                g[i] += dg;
                g[j] -= dg;
            }
        }
        Ok(g)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x0: Vec<f64> = (0..n_points).map(|_| rng.random_range(0.0..torus_length)).collect();
    x0.sort_by(f64::total_cmp);
    let run = descend(x0, energy, grad, opts.gradient_tolerance * n_points as f64, opts)?;
    Ok(PeriodicMinimum {
        config: TorusConfig::new_1d(run.x)?,
        value: run.value,
        iterations: run.iterations,
        termination: run.termination,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionFit {
    pub e_hat: f64,
    pub next_order_hat: f64,
    pub intercept: Option<f64>,
    pub residuals: Vec<f64>,
}

/// Least-squares fit of minimal energies against the large-`n` expansion.
///
/// Riesz kernels: `H = E n^2 + C n^{1+s/d} (+ b)`. Log kernels:
/// `H + (n/d) log n = E n^2 + C n (+ b)`, the `n log n` coefficient being
/// fixed at `-1/d`. The optional constant `b` absorbs the lower-order
/// correction that is visible at moderate `n`.
pub fn fit_expansion_with(spec: &KernelSpec, data: &[(usize, f64)], intercept: bool) -> Result<ExpansionFit> {
    let cols = if intercept { 3 } else { 2 };
    if data.len() < cols.max(3) {
        return Err(Error::invalid(format!("fit needs at least {} data points", cols.max(3))));
    }
    let mut ns: Vec<usize> = data.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() != data.len() || ns[0] == 0 {
        return Err(Error::invalid("fit needs distinct positive n"));
    }
    let d = spec.d as f64;
    let rows = data.len();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut b = DVector::<f64>::zeros(rows);
    for (r, &(n, h)) in data.iter().enumerate() {
        let nf = n as f64;
        a[(r, 0)] = nf * nf;
        if spec.is_log() {
            a[(r, 1)] = nf;
            b[r] = h + nf * nf.ln() / d;
        } else {
            a[(r, 1)] = nf.powf(1.0 + spec.s / d);
            b[r] = h;
        }
        if intercept {
            a[(r, 2)] = 1.0;
        }
    }
    // equilibrate columns before solving
    let scales: Vec<f64> = (0..cols).map(|c| a.column(c).norm()).collect();
    let mut scaled = a.clone();
    for (c, s) in scales.iter().enumerate() {
        scaled.column_mut(c).scale_mut(1.0 / s);
    }
    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::RankDeficient);
    }
    let coef = svd.solve(&b, 0.0).map_err(|_| Error::RankDeficient)?;
    let coef: Vec<f64> = coef.iter().zip(&scales).map(|(c, s)| c / s).collect();
    let fitted = &a * DVector::from_vec(coef.clone());
    let residuals = (0..rows).map(|r| b[r] - fitted[r]).collect();
    Ok(ExpansionFit {
        e_hat: coef[0],
        next_order_hat: coef[1],
        intercept: intercept.then(|| coef[2]),
        residuals,
    })
}

/// [`fit_expansion_with`] for the model's kernel, with the constant term.
pub fn fit_expansion(model: &EquilibriumModel, data: &[(usize, f64)]) -> Result<ExpansionFit> {
    fit_expansion_with(&model.spec, data, true)
}
