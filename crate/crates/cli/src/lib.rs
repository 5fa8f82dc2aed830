//! `riesz-lab`: command-line driver for the riesz-core experiments.
//!
//! Exit codes: 0 on success, 1 on usage or domain errors, 2 on numeric
//! failures and I/O errors while writing results.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use riesz_core::equilibrium::EquilibriumModel;
use riesz_core::gibbs::run_chain;
use riesz_core::hamiltonian::{next_order_scaled, split};
use riesz_core::kernel::KernelSpec;
use riesz_core::lattice::scan_fundamental_domain;
use riesz_core::minimizer::{
    fit_expansion_with, multistart, sample_initial, separation_report, MinimizeOptions,
};
use riesz_core::specfun::riemann_zeta;
use riesz_core::torus::{green_1d_integral, green_1d_series, kernel_for_alpha, periodic_w, xi_1d, TorusConfig};

#[derive(Parser, Debug)]
#[command(name = "riesz-lab", version, about = "Riesz and log-gas energy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// File of `key = value` lines supplying defaults for flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Leave the timestamp out of JSON reports.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Multistart minimization of H_n.
    Minimize {
        #[arg(long, default_value = "semicircle")]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        trials: usize,
        #[arg(long, default_value_t = 5000)]
        max_iterations: usize,
        /// Append a `n,value` row to this CSV file.
        #[arg(long)]
        append_csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Splitting report for random configurations, one CSV row each.
    SplitCheck {
        #[arg(long, default_value = "semicircle")]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        configs: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Fit minimal energies read from a `n,value` CSV file.
    Fit {
        #[arg(long, default_value = "semicircle")]
        model: String,
        #[arg(long)]
        data: PathBuf,
        /// Fit without the constant term.
        #[arg(long)]
        no_intercept: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Relative lattice energy over the fundamental domain (CSV).
    LatticeScan {
        /// Riesz exponent in the plane; 0 selects the log kernel.
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Riemann zeta function.
    Zeta {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Periodic Green function on the circle of length N, both evaluation paths.
    Green1d {
        #[arg(long = "N", alias = "n-cell")]
        n_cell: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Renormalized energy of points on the circle of length N (one per line).
    PeriodicW {
        #[arg(long)]
        points: PathBuf,
        /// Riesz exponent; omit for the log kernel.
        #[arg(long)]
        s: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Metropolis sampling of the Gibbs measure; trace CSV to --out.
    Sample {
        #[arg(long, default_value = "semicircle")]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 200_000)]
        steps: u64,
        /// Defaults to a fifth of the steps.
        #[arg(long)]
        burn_in: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Minimize { common, .. }
            | Command::SplitCheck { common, .. }
            | Command::Fit { common, .. }
            | Command::LatticeScan { common, .. }
            | Command::Zeta { common, .. }
            | Command::Green1d { common, .. }
            | Command::PeriodicW { common, .. }
            | Command::Sample { common, .. } => common,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numeric(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<riesz_core::Error> for Failure {
    fn from(e: riesz_core::Error) -> Self {
        if e.is_input_error() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parse a `key = value` file. Blank lines and `#` comments are skipped.
fn read_config(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Failure::Usage(format!("{}:{}: expected key = value", path.display(), no + 1)));
        };
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Append config-file entries as flags unless the flag is already given.
fn merge_config(mut argv: Vec<String>) -> CliResult<Vec<String>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let given: BTreeSet<String> = argv
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for (k, v) in read_config(&path)? {
        if given.contains(&k) || k == "config" {
            continue;
        }
        match v.as_str() {
            "true" if k == "no-timestamp" || k == "no-intercept" => argv.push(format!("--{k}")),
            "false" if k == "no-timestamp" || k == "no-intercept" => {}
            _ => {
                argv.push(format!("--{k}"));
                argv.push(v);
            }
        }
    }
    Ok(argv)
}

fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure::Numeric(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn model_json(model: &EquilibriumModel) -> Value {
    let r = model.support_radius;
    json!({
        "name": model.name(),
        "d": model.d(),
        "robin_c": model.robin_c,
        "energy_E": model.energy_e,
        "m_bar": model.m_bar,
        "support": if model.d() == 1 { json!([-r, r]) } else { json!({ "center": [0.0, 0.0], "radius": r }) },
    })
}

struct Report {
    body: Value,
}

impl Report {
    fn new(command: &str, resolved: Value, kernel: &KernelSpec, common: &Common) -> Self {
        let mut body = json!({
            "command": command,
            "config": resolved,
            "kernel": to_value(kernel),
            "seed": common.seed,
        });
        if !common.no_timestamp {
            body["timestamp"] = json!(chrono::Utc::now().to_rfc3339());
        }
        Report { body }
    }

    fn set(&mut self, key: &str, v: Value) {
        self.body[key] = v;
    }

    fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.body).expect("json");
        s.push('\n');
        s
    }
}

/// Where the main output goes: `--out` if given, otherwise stdout.
fn emit(common: &Common, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match &common.out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Numeric(format!("cannot write output: {e}"))),
    }
}

fn print(stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Failure::Numeric(format!("cannot write output: {e}")))
}

fn read_csv_pairs(path: &Path) -> CliResult<Vec<(usize, f64)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("n,") {
            continue;
        }
        let bad = || Failure::Usage(format!("{}:{}: expected n,value", path.display(), no + 1));
        let (a, b) = line.split_once(',').ok_or_else(bad)?;
        let n = a.trim().parse().map_err(|_| bad())?;
        let v = b.trim().parse().map_err(|_| bad())?;
        out.push((n, v));
    }
    Ok(out)
}

fn read_points(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| Failure::Usage(format!("{}: '{l}' is not a number", path.display())))
        })
        .collect()
}

fn append_row(path: &Path, n: usize, value: f64) -> CliResult<()> {
    let mut text = fs::read_to_string(path).unwrap_or_default();
    if text.is_empty() {
        text.push_str("n,value\n");
    } else if !text.ends_with('\n') {
        text.push('\n');
    }
    text.push_str(&format!("{n},{value:.17e}\n"));
    write_atomic(path, text.as_bytes())
}

fn execute(cmd: &Command, stdout: &mut dyn Write) -> CliResult<()> {
    let common = cmd.common();
    match cmd {
        Command::Minimize { model, n, trials, max_iterations, append_csv, .. } => {
            let m = EquilibriumModel::by_name(model)?;
            let opts = MinimizeOptions {
                max_iterations: *max_iterations,
                seed: common.seed,
                ..Default::default()
            };
            let r = multistart(&m, *n, *trials, &opts)?;
            let sep = separation_report(&m, &r.config)?;
            let mut rep = Report::new(
                "minimize",
                json!({ "model": model, "n": n, "trials": trials, "max_iterations": max_iterations, "seed": common.seed }),
                &m.spec,
                common,
            );
            rep.set("model", model_json(&m));
            rep.set("points", json!(r.config.to_points()));
            rep.set("value", json!(r.value));
            rep.set("next_order_scaled", json!(next_order_scaled(&m, &r.config)));
            rep.set("iterations", json!(r.iterations));
            rep.set("termination", to_value(&r.termination));
            rep.set("gradient_norm", json!(r.gradient_norm));
            rep.set("separation", to_value(&sep));
            emit(common, &rep.render(), stdout)?;
            if let Some(p) = append_csv {
                append_row(p, *n, r.value)?;
            }
        }
        Command::SplitCheck { model, n, configs, .. } => {
            let m = EquilibriumModel::by_name(model)?;
            let mut csv = String::from(
                "index,H,mean_field,zeta_term,log_correction,next_order_direct,next_order_potential_route,route_gap\n",
            );
            for k in 0..*configs {
                let c = sample_initial(&m, *n, common.seed.wrapping_add(k as u64));
                let r = split(&m, &c)?;
                csv.push_str(&format!(
                    "{k},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.3e}\n",
                    r.h, r.mean_field, r.zeta_term, r.log_correction, r.next_order_direct,
                    r.next_order_potential_route, r.route_gap
                ));
            }
            emit(common, &csv, stdout)?;
        }
        Command::Fit { model, data, no_intercept, .. } => {
            let m = EquilibriumModel::by_name(model)?;
            let pairs = read_csv_pairs(data)?;
            let fit = fit_expansion_with(&m.spec, &pairs, !no_intercept)?;
            let mut rep = Report::new(
                "fit",
                json!({ "model": model, "data": data, "intercept": !no_intercept, "seed": common.seed }),
                &m.spec,
                common,
            );
            rep.set("model", model_json(&m));
            rep.set("fit", to_value(&fit));
            let predicted = if m.d() == 1 {
                let xi = xi_1d(&m.spec)?;
                json!({ "xi": xi, "next_order_constant": m.predicted_next_order_constant(xi)? })
            } else {
                Value::Null
            };
            rep.set("predicted", predicted);
            emit(common, &rep.render(), stdout)?;
        }
        Command::LatticeScan { s, resolution, .. } => {
            let spec = KernelSpec::for_exponent(2, *s)?;
            let scan = scan_fundamental_domain(&spec, *resolution)?;
            match &common.out {
                Some(p) => {
                    write_atomic(p, scan.to_csv().as_bytes())?;
                    let mut rep = Report::new(
                        "lattice-scan",
                        json!({ "s": s, "resolution": resolution, "out": p, "seed": common.seed }),
                        &spec,
                        common,
                    );
                    rep.set("argmin", json!([scan.argmin.0, scan.argmin.1]));
                    rep.set("min_value", json!(scan.min_value));
                    print(stdout, &rep.render())?;
                }
                None => print(stdout, &scan.to_csv())?,
            }
        }
        Command::Zeta { x, .. } => {
            let v = riemann_zeta(*x)?;
            emit(common, &format!("{v:.16}\n"), stdout)?;
        }
        Command::Green1d { n_cell, alpha, x, .. } => {
            let spec = kernel_for_alpha(*alpha)?;
            let a = green_1d_integral(*n_cell, *alpha, *x)?;
            let b = green_1d_series(*n_cell, *alpha, *x)?;
            let mut rep = Report::new(
                "green1d",
                json!({ "N": n_cell, "alpha": alpha, "x": x, "seed": common.seed }),
                &spec,
                common,
            );
            rep.set("integral", json!(a));
            rep.set("series", json!(b));
            rep.set("difference", json!((a - b).abs()));
            emit(common, &rep.render(), stdout)?;
        }
        Command::PeriodicW { points, s, .. } => {
            let spec = match s {
                Some(s) => KernelSpec::riesz(1, *s)?,
                None => KernelSpec::log1d(),
            };
            let config = TorusConfig::new_1d(read_points(points)?)?;
            let r = periodic_w(&config, &spec)?;
            let mut rep = Report::new(
                "periodic-w",
                json!({ "points": points, "s": s, "seed": common.seed }),
                &spec,
                common,
            );
            rep.set("N", json!(config.n()));
            rep.set("result", to_value(&r));
            emit(common, &rep.render(), stdout)?;
        }
        Command::Sample { model, n, beta, steps, burn_in, .. } => {
            let m = EquilibriumModel::by_name(model)?;
            let burn = burn_in.unwrap_or(steps / 5);
            let stats = run_chain(&m, *n, *beta, *steps, burn, common.seed)?;
            let mut summary = to_value(&stats);
            if let Value::Object(map) = &mut summary {
                map.remove("energy_trace");
            }
            let mut rep = Report::new(
                "sample",
                json!({ "model": model, "n": n, "beta": beta, "steps": steps, "burn_in": burn, "seed": common.seed, "out": common.out }),
                &m.spec,
                common,
            );
            rep.set("model", model_json(&m));
            rep.set("stats", summary);
            if let Some(p) = &common.out {
                write_atomic(p, stats.trace_csv().as_bytes())?;
            }
            print(stdout, &rep.render())?;
        }
    }
    Ok(())
}

fn run_parsed(cmd: &Command, stdout: &mut dyn Write) -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cmd.common().threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Failure::Numeric(format!("cannot start worker pool: {e}")))?;
    let mut buf: Vec<u8> = Vec::new();
    let result = pool.install(|| execute(cmd, &mut buf));
    print(stdout, &String::from_utf8_lossy(&buf))?;
    result
}

/// Run with explicit output streams; returns the exit code.
pub fn run_with<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "riesz-lab: {e}");
            return e.code();
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    return 0;
                }
                _ => 1,
            };
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    match run_parsed(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "riesz-lab: {e}");
            e.code()
        }
    }
}

/// Run against the process's stdout and stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run_with(argv, &mut out, &mut err)
}
