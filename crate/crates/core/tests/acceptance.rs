//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riesz_core::equilibrium::{circular_law_model, semicircle_model, EquilibriumModel};
use riesz_core::gibbs::run_chains;
use riesz_core::gibbs::run_chain;
use riesz_core::hamiltonian::{next_order_scaled, split, Configuration};
use riesz_core::kernel::KernelSpec;
use riesz_core::lattice::{
    epstein_zeta_cs, epstein_zeta_direct, scan_fundamental_domain, Lattice2D,
};
use riesz_core::minimizer::{
    fit_expansion, minimize_periodic, multistart, sample_initial, separation_report,
    MinimizeOptions, MinimizeResult,
};
use riesz_core::torus::{
    green_1d, green_1d_integral, green_1d_series, periodic_w, renormalized_self_energy_1d,
    scale_w, truncated_periodic_energy, unscale_w, xi_1d, TorusConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_config(model: &EquilibriumModel, n: usize, seed: u64) -> Configuration {
    if seed % 2 == 0 {
        return sample_initial(model, n, seed);
    }
    // spread beyond the support so that the zeta term is exercised
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 1.5 * model.support_radius;
    let coords = (0..n * model.d()).map(|_| rng.random_range(-half..half)).collect();
    Configuration::new(model.d(), coords).unwrap()
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for model in [semicircle_model(), circular_law_model()] {
        for n in [8, 32, 64] {
            for k in 0..50u64 {
                let c = random_config(&model, n, 1000 * n as u64 + k);
                let r = split(&model, &c).unwrap();
                worst = worst.max(r.route_gap.abs() / (1.0 + r.h.abs()));
                count += 1;
            }
        }
    }
    outcome(worst <= 1e-9, format!("{count} configurations, max |route_gap|/(1+|H|) = {worst:.2e}"))
}

const SQUARE_ORACLE: [(f64, f64); 3] = [
    (1.2, 18.363_225_187_617_979_785),
    (1.5, 9.033_621_683_100_950_306),
    (2.0, 6.026_812_039_691_940_124),
];

fn criterion_2() -> Outcome {
    let lattices = [
        Lattice2D::square(),
        Lattice2D::triangular(),
        Lattice2D::new(0.3, 1.2).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for lat in &lattices {
        for a in [1.2, 1.5, 2.0] {
            let cs = epstein_zeta_cs(lat, a).unwrap();
            let direct = epstein_zeta_direct(lat, a).unwrap();
            worst = worst.max((cs - direct).abs());
        }
    }
    let mut worst_sq: f64 = 0.0;
    for (a, want) in SQUARE_ORACLE {
        let sq = Lattice2D::square();
        worst_sq = worst_sq
            .max((epstein_zeta_cs(&sq, a).unwrap() - want).abs())
            .max((epstein_zeta_direct(&sq, a).unwrap() - want).abs());
    }
    outcome(
        worst <= 1e-8 && worst_sq <= 1e-9,
        format!("max |cs - direct| = {worst:.2e}, max square-lattice error = {worst_sq:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let res = 64;
    let step = 1.0 / (res - 1) as f64;
    let tri_y = 0.75f64.sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for s in [0.5, 1.0, 1.5] {
        let spec = KernelSpec::riesz(2, s).unwrap();
        let scan = scan_fundamental_domain(&spec, res).unwrap();
        let (x, y) = scan.argmin;
        let in_cell = (x - 0.5).abs() <= step && (y - tri_y).abs() <= 2.5 * step;
        let others_min = scan
            .grid
            .iter()
            .filter(|p| !Lattice2D { x: p.x, y: p.y }.is_triangular(1e-13))
            .map(|p| p.relative_w)
            .fold(f64::INFINITY, f64::min);
        pass &= in_cell && others_min > 0.0;
        parts.push(format!("s={s}: argmin ({x:.4}, {y:.4}), min over other cells {others_min:.3e}"));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    for (n, a) in [(1usize, 0.5), (1, 0.25), (4, 0.5)] {
        for x in [0.1, 0.25, 0.4] {
            let i = green_1d_integral(n, a, x).unwrap();
            let s = green_1d_series(n, a, x).unwrap();
            worst = worst.max((i - s).abs());
        }
    }
    let mut worst_closed: f64 = 0.0;
    for x in [0.1, 0.25, 0.4] {
        let want = -(2.0 * (PI * x).sin()).ln() / (2.0 * PI);
        worst_closed = worst_closed.max((green_1d(1, 0.5, x).unwrap() - want).abs());
    }
    outcome(
        worst <= 1e-6 && worst_closed <= 1e-8,
        format!("max |integral - series| = {worst:.2e}, log closed form error = {worst_closed:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let spec = KernelSpec::log1d();
    let want = -2.0 * PI * (2.0 * PI).ln();
    let got = renormalized_self_energy_1d(1, &spec);
    let xi = xi_1d(&spec);
    let riesz = renormalized_self_energy_1d(1, &KernelSpec::riesz(1, 0.5).unwrap());
    match (got, xi, riesz) {
        (Ok(v), Ok(xi), Ok(r)) => {
            let err = (v - want).abs();
            let xi_err = (xi + (2.0 * PI).ln()).abs();
            outcome(
                err <= 1e-6 && xi_err <= 1e-6,
                format!("self-energy {v:.12} (error {err:.2e}), xi = {xi:.12}, Riesz s=1/2 value {r:.10}"),
            )
        }
        (a, b, c) => outcome(false, format!("extrapolation failed: {a:?} {b:?} {c:?}")),
    }
}

const FIT_NS: [usize; 7] = [16, 24, 32, 48, 64, 96, 128];

fn minimizers(model: &EquilibriumModel) -> Vec<(usize, MinimizeResult)> {
    let opts = MinimizeOptions { max_iterations: 20_000, seed: 2024, ..Default::default() };
    FIT_NS
        .iter()
        .map(|&n| (n, multistart(model, n, 8, &opts).unwrap()))
        .collect()
}

fn criterion_6(model: &EquilibriumModel, runs: &[(usize, MinimizeResult)]) -> Outcome {
    let data: Vec<(usize, f64)> = runs.iter().map(|(n, r)| (*n, r.value)).collect();
    let fit = fit_expansion(model, &data).unwrap();
    let xi = xi_1d(&model.spec).unwrap();
    let predicted = model.predicted_next_order_constant(xi).unwrap();
    let rel = ((fit.next_order_hat - predicted) / predicted).abs();
    let scaled: Vec<f64> = runs.iter().map(|(_, r)| next_order_scaled(model, &r.config)).collect();
    let cauchy = scaled
        .windows(2)
        .map(|w| ((w[1] - w[0]) / w[0]).abs())
        .fold(0.0, f64::max);
    let terms: Vec<String> = runs.iter().map(|(_, r)| format!("{:?}", r.termination)).collect();
    outcome(
        rel <= 0.02 && cauchy <= 0.02,
        format!(
            "fitted constant {:.6} vs predicted {predicted:.6} (rel {rel:.2e}); scaled values {:?}; max successive change {cauchy:.2e}; terminations {}",
            fit.next_order_hat,
            scaled.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>(),
            terms.join(",")
        ),
    )
}

fn criterion_7(model: &EquilibriumModel, runs: &[(usize, MinimizeResult)]) -> Outcome {
    let mut inside = true;
    let mut spacings = Vec::new();
    for (n, r) in runs.iter().filter(|(n, _)| [32, 64, 128].contains(n)) {
        inside &= r.config.coords.iter().all(|x| x.abs() <= 2.0 + 1e-6);
        spacings.push((*n, separation_report(model, &r.config).unwrap().scaled_spacing));
    }
    let lo = spacings.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = spacings.iter().map(|p| p.1).fold(0.0, f64::max);
    outcome(
        inside && lo > 0.0 && hi / lo <= 1.2,
        format!("points in support: {inside}; scaled spacings {spacings:?}; ratio {:.4}", hi / lo),
    )
}

fn criterion_8() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for spec in [KernelSpec::log1d(), KernelSpec::riesz(1, 0.5).unwrap()] {
        let opts = MinimizeOptions { seed: 11, ..Default::default() };
        let r = minimize_periodic(&spec, 4, 4.0, &opts).unwrap();
        let eq = r.config.is_equally_spaced(1e-6);
        let gap = r.config.min_spacing();
        pass &= eq && gap >= 0.9;
        parts.push(format!("{:?}: equally spaced {eq}, min spacing {gap:.9}", spec.case));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let spec = KernelSpec::log1d();
    let config = TorusConfig::lattice_1d(4);
    let w = periodic_w(&config, &spec).unwrap().w_value;
    let etas = [0.2, 0.1, 0.05, 0.02];
    let gaps: Vec<f64> = etas
        .iter()
        .map(|&e| truncated_periodic_energy(&config, &spec, e).unwrap().w_value - w)
        .collect();
    let ratios: Vec<f64> = etas.iter().zip(&gaps).map(|(e, g)| g.abs() / e.sqrt()).collect();
    let c = ratios.iter().cloned().fold(0.0, f64::max);
    let c_min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let residual = (c - c_min) / c;
    let converging = gaps.windows(2).all(|p| p[1].abs() < p[0].abs());
    let mut monotone = true;
    for (i, &eta) in etas.iter().enumerate() {
        for (j, &alpha) in etas.iter().enumerate() {
            if alpha < eta {
                let w_eta = gaps[i] + w;
                let w_alpha = gaps[j] + w;
                monotone &= w_eta <= w_alpha + c * eta.sqrt();
            }
        }
    }
    outcome(
        converging && monotone && residual < 0.2,
        format!(
            "W = {w:.10}; W_eta - W = {:?}; C = {c:.4}; fit residual {:.1}%; converging {converging}; W_eta <= W_alpha + C eta^(1/2): {monotone}",
            gaps.iter().map(|g| format!("{g:.6}")).collect::<Vec<_>>(),
            100.0 * residual
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn criterion_10(model: &EquilibriumModel, runs: &[(usize, MinimizeResult)]) -> Outcome {
    let n = 32;
    let min_value = runs
        .iter()
        .find(|(m, _)| *m == n)
        .map(|(_, r)| next_order_scaled(model, &r.config))
        .unwrap();
    let seeds = [1, 2, 3, 4, 5];
    let mut gaps = Vec::new();
    let mut w1 = Vec::new();
    let mut audit: f64 = 0.0;
    for beta in [1.0, 10.0, 100.0] {
        let stats = run_chains(model, n, beta, 600_000, 100_000, &seeds).unwrap();
        gaps.push(median(stats.iter().map(|s| s.mean_next_order - min_value).collect()));
        w1.push(median(stats.iter().map(|s| s.w1_to_equilibrium).collect()));
        audit = stats.iter().map(|s| s.max_audit_deviation).fold(audit, f64::max);
    }
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let single = run_chain(model, 1, 4.0, 400_000, 20_000, 8).unwrap();
    let var_err = (single.coordinate_variance - 0.25).abs() / 0.25;
    outcome(
        decreasing && var_err <= 0.1 && audit <= 1e-9,
        format!(
            "median gaps over beta=1,10,100: {:?}; median W1 {:?}; n=1 variance {:.5} (rel err {:.2e}); max audit deviation {audit:.1e}",
            gaps.iter().map(|g| format!("{g:.5}")).collect::<Vec<_>>(),
            w1.iter().map(|g| format!("{g:.5}")).collect::<Vec<_>>(),
            single.coordinate_variance,
            var_err
        ),
    )
}

fn criterion_11() -> Outcome {
    let specs = [
        KernelSpec::riesz(1, 0.5).unwrap(),
        KernelSpec::riesz(2, 1.0).unwrap(),
        KernelSpec::log1d(),
        KernelSpec::log2d(),
    ];
    let mut worst: f64 = 0.0;
    for spec in &specs {
        for m in [0.1, 1.0, std::f64::consts::E, 10.0] {
            for w in [-3.7, 0.0, 1.25, 42.0] {
                let up = scale_w(w, m, spec, Some(0.05)).unwrap();
                let back = unscale_w(up.value, m, spec, up.eta).unwrap();
                worst = worst
                    .max((back.value - w).abs() / w.abs().max(1.0))
                    .max((back.eta.unwrap() - 0.05).abs() / 0.05);
            }
        }
    }
    outcome(worst <= 1e-12, format!("max relative round-trip error {worst:.2e}"))
}

fn main() {
    let model = semicircle_model();
    let mut failures = 0;
    let mut report = |k: usize, budget: Duration, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let out = f();
        let el = t.elapsed();
        let in_time = el <= budget;
        let pass = out.pass && in_time;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {k}: {} ({:.1} s of {} s) {}",
            if pass { "PASS" } else { "FAIL" },
            el.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    };
    report(1, Duration::from_secs(10), &mut criterion_1);
    report(2, Duration::from_secs(5), &mut criterion_2);
    report(3, Duration::from_secs(60), &mut criterion_3);
    report(4, Duration::from_secs(5), &mut criterion_4);
    report(5, Duration::from_secs(2), &mut criterion_5);
    let mut runs = Vec::new();
    report(6, Duration::from_secs(900), &mut || {
        runs = minimizers(&model);
        criterion_6(&model, &runs)
    });
    report(7, Duration::from_secs(1), &mut || criterion_7(&model, &runs));
    report(8, Duration::from_secs(30), &mut criterion_8);
    report(9, Duration::from_secs(30), &mut criterion_9);
    report(10, Duration::from_secs(600), &mut || criterion_10(&model, &runs));
    report(11, Duration::from_secs(1), &mut criterion_11);
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
