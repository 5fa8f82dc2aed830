//! Metropolis sampling of the Gibbs measure `exp(-beta H_n)` and simulated
//! annealing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{EquilibriumModel, ModelKind};
use crate::error::{Error, Result};
use crate::hamiltonian::{hamiltonian, interaction_with, next_order_scaled_value, Configuration};
use crate::minimizer::sample_initial_with;

const AUDIT_EVERY: u64 = 1000;
const ADAPT_BATCH: u64 = 200;
const TARGET_ACCEPTANCE: f64 = 0.35;
const TRACE_POINTS: u64 = 2000;

/// Metropolis rule: accept when `u < exp(-beta delta)`.
#[inline]
pub fn metropolis_accept(delta: f64, beta: f64, u: f64) -> bool {
    if delta.is_nan() || delta == f64::INFINITY {
        return false;
    }
    u < (-beta * delta).exp()
}

pub struct ChainState {
    pub config: Configuration,
    /// Cached `H_n(config)`.
    pub energy: f64,
    pub rng: ChaCha8Rng,
    pub proposal_sigma: f64,
    pub accepted: u64,
    pub proposed: u64,
    pub max_audit_deviation: f64,
}

impl ChainState {
    pub fn new(model: &EquilibriumModel, config: Configuration, seed: u64, proposal_sigma: f64) -> Result<Self> {
        if !(proposal_sigma > 0.0) {
            return Err(Error::invalid("proposal width must be positive"));
        }
        let energy = hamiltonian(model, &config);
        if !energy.is_finite() {
            return Err(Error::invalid("initial configuration has infinite energy"));
        }
        Ok(ChainState {
            config,
            energy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            proposal_sigma,
            accepted: 0,
            proposed: 0,
            max_audit_deviation: 0.0,
        })
    }

    /// Recompute `H_n` from scratch and record the drift of the cached value.
    pub fn audit(&mut self, model: &EquilibriumModel) -> f64 {
        let fresh = hamiltonian(model, &self.config);
        let dev = (fresh - self.energy).abs() / (1.0 + fresh.abs());
        self.max_audit_deviation = self.max_audit_deviation.max(dev);
        self.energy = fresh;
        dev
    }
}

/// Energy change when point `i` moves to `x`.
pub fn delta_energy(model: &EquilibriumModel, config: &Configuration, i: usize, x: &[f64]) -> f64 {
    let old = config.point(i);
    let new_pair = interaction_with(&model.spec, config, i, x);
    if new_pair.is_infinite() {
        return f64::INFINITY;
    }
    let old_pair = interaction_with(&model.spec, config, i, old);
    let n = config.n() as f64;
    2.0 * (new_pair - old_pair) + n * (model.v(x) - model.v(old))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepOutcome {
    pub site: usize,
    pub delta: f64,
    pub accepted: bool,
}

/// One single-site Gaussian Metropolis step.
pub fn mh_step(state: &mut ChainState, model: &EquilibriumModel, beta: f64) -> StepOutcome {
    let n = state.config.n();
    let d = state.config.d;
    let i = state.rng.random_range(0..n);
    let mut x = state.config.point(i).to_vec();
    for v in x.iter_mut() {
        let z: f64 = state.rng.sample(StandardNormal);
        *v += state.proposal_sigma * z;
    }
    let delta = delta_energy(model, &state.config, i, &x);
    let u: f64 = state.rng.random();
    let accepted = metropolis_accept(delta, beta, u);
    state.proposed += 1;
    if accepted {
        state.config.coords[i * d..(i + 1) * d].copy_from_slice(&x);
        state.energy += delta;
        state.accepted += 1;
    }
    StepOutcome { site: i, delta, accepted }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub step: u64,
    pub energy: f64,
    pub next_order_scaled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplerStats {
    pub steps: u64,
    pub burn_in: u64,
    pub acceptance_rate: f64,
    pub proposal_sigma: f64,
    pub energy_trace: Vec<TracePoint>,
    pub w1_to_equilibrium: f64,
    /// Mean over snapshots of the distance between one configuration's
    /// empirical measure and the equilibrium measure.
    pub mean_snapshot_w1: f64,
    pub mean_energy: f64,
    pub mean_next_order: f64,
    /// Variance of a single coordinate, pooled over sites (after burn-in).
    pub coordinate_variance: f64,
    pub max_audit_deviation: f64,
}

impl SamplerStats {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("step,energy,next_order_scaled\n");
        for t in &self.energy_trace {
            out.push_str(&format!("{},{:.15e},{:.15e}\n", t.step, t.energy, t.next_order_scaled));
        }
        out
    }
}

/// Wasserstein-1 distance between the pooled samples and the equilibrium
/// measure, computed from sorted samples against the quantile function. In 2D
/// the radial marginals are compared.
pub fn w1_to_equilibrium(model: &EquilibriumModel, samples: &[f64]) -> f64 {
    let mut v: Vec<f64> = match model.kind {
        ModelKind::Semicircle => samples.to_vec(),
        ModelKind::CircularLaw => samples.chunks_exact(2).map(|p| p[0].hypot(p[1])).collect(),
    };
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, x)| (x - model.quantile((i as f64 + 0.5) / m)).abs())
        .sum::<f64>()
        / m
}

fn initial_sigma(model: &EquilibriumModel, n: usize) -> f64 {
    (n as f64 * model.m_bar).powf(-1.0 / model.d() as f64)
}

/// Run one chain from a draw of the equilibrium measure. The proposal width
/// adapts towards 35% acceptance during burn-in and is frozen afterwards.
pub fn run_chain(model: &EquilibriumModel, n: usize, beta: f64, steps: u64, burn_in: u64, seed: u64) -> Result<SamplerStats> {
    if !(beta > 0.0) {
        return Err(Error::invalid("beta must be positive"));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one particle"));
    }
    if steps <= burn_in {
        return Err(Error::invalid("steps must exceed burn_in"));
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    init_rng.set_stream(1);
    let init = sample_initial_with(model, n, &mut init_rng);
    let mut state = ChainState::new(model, init, seed, initial_sigma(model, n))?;

    let mut batch_acc = 0u64;
    let mut batch_len = 0u64;
    let kept = steps - burn_in;
    let thin = (kept / TRACE_POINTS).max(1);
    let snapshot_every = n as u64;
    let mut trace = Vec::new();
    let mut samples = Vec::new();
    let (mut snap_w1, mut snaps) = (0.0, 0u64);
    let (mut e_sum, mut no_sum) = (0.0, 0.0);
    let (mut x_sum, mut x2_sum, mut x_count) = (0.0, 0.0, 0u64);
    let (mut post_acc, mut post_prop) = (0u64, 0u64);

    for step in 0..steps {
        let out = mh_step(&mut state, model, beta);
        if step < burn_in {
            batch_len += 1;
            batch_acc += out.accepted as u64;
            if batch_len == ADAPT_BATCH {
                let rate = batch_acc as f64 / batch_len as f64;
                state.proposal_sigma *= (2.0 * (rate - TARGET_ACCEPTANCE)).exp();
                batch_len = 0;
                batch_acc = 0;
            }
        } else {
            post_prop += 1;
            post_acc += out.accepted as u64;
            let no = next_order_scaled_value(model, n, state.energy);
            e_sum += state.energy;
            no_sum += no;
            let k = step - burn_in;
            if k % thin == 0 {
                trace.push(TracePoint { step, energy: state.energy, next_order_scaled: no });
            }
            if k % snapshot_every == 0 {
                samples.extend_from_slice(&state.config.coords);
                snap_w1 += w1_to_equilibrium(model, &state.config.coords);
                snaps += 1;
                for v in &state.config.coords {
                    x_sum += v;
                    x2_sum += v * v;
                    x_count += 1;
                }
            }
        }
        if (step + 1) % AUDIT_EVERY == 0 {
            state.audit(model);
        }
    }
    state.audit(model);
    let kf = kept as f64;
    let xm = x_sum / x_count as f64;
    Ok(SamplerStats {
        steps,
        burn_in,
        acceptance_rate: post_acc as f64 / post_prop as f64,
        proposal_sigma: state.proposal_sigma,
        energy_trace: trace,
        w1_to_equilibrium: w1_to_equilibrium(model, &samples),
        mean_snapshot_w1: snap_w1 / snaps as f64,
        mean_energy: e_sum / kf,
        mean_next_order: no_sum / kf,
        coordinate_variance: x2_sum / x_count as f64 - xm * xm,
        max_audit_deviation: state.max_audit_deviation,
    })
}

/// Independent chains for several seeds, returned in seed order.
pub fn run_chains(model: &EquilibriumModel, n: usize, beta: f64, steps: u64, burn_in: u64, seeds: &[u64]) -> Result<Vec<SamplerStats>> {
    seeds
        .par_iter()
        .map(|&s| run_chain(model, n, beta, steps, burn_in, s))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnealResult {
    pub config: Configuration,
    pub energy: f64,
    /// Mean energy over each stage.
    pub stage_energies: Vec<f64>,
}

/// Simulated annealing over an increasing inverse-temperature schedule. The
/// returned configuration is the lowest-energy state visited in the last stage.
pub fn anneal(model: &EquilibriumModel, n: usize, beta_schedule: &[f64], steps_per_stage: u64, seed: u64) -> Result<AnnealResult> {
    if beta_schedule.is_empty() {
        return Err(Error::invalid("annealing schedule is empty"));
    }
    if beta_schedule.windows(2).any(|w| w[1] <= w[0]) || beta_schedule[0] <= 0.0 {
        return Err(Error::invalid("annealing schedule must be positive and increasing"));
    }
    if steps_per_stage == 0 {
        return Err(Error::invalid("steps_per_stage must be positive"));
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    init_rng.set_stream(1);
    let init = sample_initial_with(model, n, &mut init_rng);
    let mut state = ChainState::new(model, init, seed, initial_sigma(model, n))?;
    let adapt = steps_per_stage / 5;
    let mut stage_energies = Vec::with_capacity(beta_schedule.len());
    let mut best = (state.energy, state.config.clone());
    for (stage, &beta) in beta_schedule.iter().enumerate() {
        let last = stage + 1 == beta_schedule.len();
        if last {
            best = (state.energy, state.config.clone());
        }
        let (mut acc, mut len) = (0u64, 0u64);
        let mut sum = 0.0;
        for step in 0..steps_per_stage {
            let out = mh_step(&mut state, model, beta);
            if step < adapt {
                len += 1;
                acc += out.accepted as u64;
                if len == ADAPT_BATCH {
                    state.proposal_sigma *= (2.0 * (acc as f64 / len as f64 - TARGET_ACCEPTANCE)).exp();
                    acc = 0;
                    len = 0;
                }
            }
            if (step + 1) % AUDIT_EVERY == 0 {
                state.audit(model);
            }
            sum += state.energy;
            if last && state.energy < best.0 {
                best = (state.energy, state.config.clone());
            }
        }
        stage_energies.push(sum / steps_per_stage as f64);
    }
    let energy = hamiltonian(model, &best.1);
    Ok(AnnealResult { config: best.1, energy, stage_energies })
}

#[derive(Debug, Clone, Serialize)]
pub struct DetailedBalanceReport {
    pub stationary: Vec<f64>,
    /// Largest `|N_ij - N_ji|` in units of its standard error.
    pub max_z: f64,
    pub transitions: u64,
}

/// Run the Metropolis rule on one particle restricted to five sites of the
/// line with energy `V` and check the flux balance `pi_i P_ij = pi_j P_ji`
/// from transition counts.
pub fn detailed_balance_audit(model: &EquilibriumModel, beta: f64, steps: u64, seed: u64) -> DetailedBalanceReport {
    let sites = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let energy: Vec<f64> = sites
        .iter()
        .map(|&x| {
            let mut p = vec![0.0; model.d()];
            p[0] = x;
            model.v(&p)
        })
        .collect();
    let z: f64 = energy.iter().map(|e| (-beta * e).exp()).sum();
    let stationary: Vec<f64> = energy.iter().map(|e| (-beta * e).exp() / z).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [[0u64; 5]; 5];
    let mut cur = 0usize;
    for _ in 0..steps {
        // symmetric proposal: uniform over the other four sites
        let mut j = rng.random_range(0..4);
        if j >= cur {
            j += 1;
        }
        let u: f64 = rng.random();
        let next = if metropolis_accept(energy[j] - energy[cur], beta, u) { j } else { cur };
        counts[cur][next] += 1;
        cur = next;
    }
    let mut max_z: f64 = 0.0;
    for i in 0..5 {
        for j in (i + 1)..5 {
            let (a, b) = (counts[i][j] as f64, counts[j][i] as f64);
            let se = (a + b).sqrt().max(1.0);
            max_z = max_z.max((a - b).abs() / se);
        }
    }
    DetailedBalanceReport { stationary, max_z, transitions: steps }
}
