//! Command-line driver for the levy-edge library.
//!
//! Subcommands: stable-check | rde | edge | lambda | transfer | pwit |
//! matrix | sweep. Flags are flat key=value pairs (also loadable from a
//! config file via --config); every output row carries the config hash and
//! the seed. Runs are bit-reproducible for a fixed config and seed
//! regardless of worker count; LEVY_EDGE_THREADS caps parallelism.

mod config;
mod output;

use config::{ConfigError, RunConfig};
use levy_edge::edge::{
    self, mobility_edge, solve_energy, EdgeError, ScanOptions, SolveOptions,
};
use levy_edge::matrix::{phase_diagnostic, PhaseOptions};
use levy_edge::pwit::{phi_batch, Boundary};
use levy_edge::rde::ResolventPopulation;
use levy_edge::stable::{neg_fractional_moment, tv_estimate, StableParams};
use levy_edge::transfer::{build_kernel, perron_grid, perron_rank2};
use num_complex::Complex64;
use output::{fmt_f64, fmt_usize, Format, Table};
use rayon::prelude::*;
use std::io::Write;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(()) => {}
        Err(e) => {
            let (code, kind) = match &e {
                CliError::Config(_) => (2, "usage"),
                CliError::Runtime(_) | CliError::Io(_) => (1, "runtime"),
            };
            // Machine-readable error record on stderr.
            eprintln!("{{\"error\":\"{}\",\"kind\":\"{kind}\",\"exit\":{code}}}", e);
            std::process::exit(code);
        }
    }
}

#[derive(Debug)]
enum CliError {
    Config(ConfigError),
    Runtime(String),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{}", escape(&e.to_string())),
            CliError::Runtime(s) => write!(f, "{}", escape(s)),
            CliError::Io(e) => write!(f, "{}", escape(&e.to_string())),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}
impl From<EdgeError> for CliError {
    fn from(e: EdgeError) -> Self {
        CliError::Runtime(e.to_string())
    }
}
impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

const USAGE: &str = "\
levy-edge <subcommand> [--flag value]...

Subcommands:
  stable-check  stable-law oracle battery (Laplace, moments, Gumbel TV)
  rde           population dynamics pool snapshot at z = E + i eta
  edge          mobility edge root scan for one alpha
  lambda        lambda(E, alpha) along an energy grid
  transfer      transfer-operator Perron eigenvalue at (alpha, s, E)
  pwit          fractional-moment sums Phi_L on truncated trees
  matrix        finite-matrix localization diagnostic
  sweep         mobility edge across an alpha grid

Common flags: --alpha --s --E --E-grid a,b,c --eta-ladder a,b,c --N --pool
  --trees --depth --omega --seed --tol --out path --format csv|json
  --config file (key=value lines). LEVY_EDGE_THREADS caps parallelism.";

fn run(args: &[String]) -> Result<(), CliError> {
    if args.is_empty() || args[0] == "--help" || args[0] == "help" {
        println!("{USAGE}");
        return Ok(());
    }
    if let Ok(threads) = std::env::var("LEVY_EDGE_THREADS") {
        if let Ok(t) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    }
    let cfg = RunConfig::parse(args)?;
    let format = match cfg.get("format").unwrap_or("csv") {
        "csv" => Format::Csv,
        "json" => Format::Json,
        other => {
            return Err(ConfigError::Invalid(format!("--format '{other}' not in {{csv,json}}"))
                .into())
        }
    };
    let table = match cfg.subcommand.as_str() {
        "stable-check" => cmd_stable_check(&cfg)?,
        "rde" => cmd_rde(&cfg)?,
        "edge" => cmd_edge(&cfg)?,
        "lambda" => cmd_lambda(&cfg)?,
        "transfer" => cmd_transfer(&cfg)?,
        "pwit" => cmd_pwit(&cfg)?,
        "matrix" => cmd_matrix(&cfg)?,
        "sweep" => cmd_sweep(&cfg)?,
        other => {
            return Err(ConfigError::Usage(format!(
                "unknown subcommand '{other}'; run with --help"
            ))
            .into())
        }
    };
    match cfg.get("out") {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            table.write(format, &mut f)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write(format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn meta(cfg: &RunConfig, seed: u64) -> (String, String) {
    (format!("{:016x}", cfg.hash()), seed.to_string())
}

fn alpha_of(cfg: &RunConfig) -> Result<f64, CliError> {
    let alpha = cfg.f64_required("alpha")?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ConfigError::Invalid(format!("--alpha {alpha} outside (0,1)")).into());
    }
    Ok(alpha)
}

fn cmd_stable_check(cfg: &RunConfig) -> Result<Table, CliError> {
    let alpha = alpha_of(cfg)?;
    let seed = cfg.u64_required("seed")?;
    let n = cfg.usize_or("samples", 1_000_000)?;
    let (hash, seed_s) = meta(cfg, seed);
    let mut t = Table::new(vec![
        "cfg_hash", "seed", "check", "parameter", "observed", "expected", "tolerance", "pass",
    ]);
    let mut push = |check: &str, param: f64, got: f64, expected: f64, tol: f64| {
        let pass = (got - expected).abs() <= tol;
        t.push(vec![
            hash.clone(),
            seed_s.clone(),
            check.to_string(),
            fmt_f64(param),
            fmt_f64(got),
            fmt_f64(expected),
            fmt_f64(tol),
            pass.to_string(),
        ]);
    };
    // Laplace transform of the one-sided law at three t values.
    let one = StableParams::new(alpha / 2.0, 1.0, 1.0)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let xs = one.sample(n, seed);
    for &tv in &[0.5f64, 1.0, 2.0] {
        let vals: Vec<f64> = xs.iter().map(|&x| (-tv * x).exp()).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var =
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        push("laplace", tv, mean, one.laplace(tv), 3.0 * se);
    }
    // Negative fractional moment.
    let k = 1.0;
    let mc = xs.iter().map(|&x| x.powf(-k * alpha / 2.0)).sum::<f64>() / n as f64;
    let closed = neg_fractional_moment(alpha, k).map_err(|e| CliError::Runtime(e.to_string()))?;
    push("neg_moment", k, mc, closed, 0.01 * closed);
    // Gumbel TV estimates.
    for &a in &[alpha, alpha / 2.0] {
        if a < 1.0 {
            let cmp = tv_estimate(a, 10_000, seed).map_err(|e| CliError::Runtime(e.to_string()))?;
            push("gumbel_tv", a, cmp.tv_estimate, 0.0, 1.0);
        }
    }
    Ok(t)
}

fn cmd_rde(cfg: &RunConfig) -> Result<Table, CliError> {
    let alpha = alpha_of(cfg)?;
    let seed = cfg.u64_required("seed")?;
    let energy = cfg.f64_or("E", 0.0)?;
    let eta = cfg.f64_or("eta", 1e-2)?;
    let pool_size = cfg.usize_or("pool", 100_000)?;
    let omega = cfg.f64_or("omega", 1e-4)?;
    let burn_in = cfg.usize_or("burnin", 50)? as u32;
    let z = Complex64::new(energy, eta);
    let mut pop = ResolventPopulation::new(z, alpha, pool_size, omega)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for g in 0..burn_in {
        pop.update(seed ^ g as u64, 10_000_000)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let (hash, seed_s) = meta(cfg, seed);
    let mut t = Table::new(vec!["cfg_hash", "seed", "re", "im"]);
    for r in &pop.pool {
        t.push(vec![hash.clone(), seed_s.clone(), fmt_f64(r.re), fmt_f64(r.im)]);
    }
    Ok(t)
}

fn edge_solution_row(
    hash: &str,
    seed_s: &str,
    sol: &edge::EdgeSolution,
    alpha: f64,
) -> Vec<String> {
    vec![
        hash.to_string(),
        seed_s.to_string(),
        fmt_f64(alpha),
        fmt_f64(sol.energy),
        fmt_f64(sol.a),
        fmt_f64(sol.b),
        fmt_f64(sol.ell.re),
        fmt_f64(sol.ell.im),
        fmt_f64(sol.lambda),
        fmt_f64(sol.residual),
        sol.method.to_string(),
    ]
}

fn cmd_edge(cfg: &RunConfig) -> Result<Table, CliError> {
    let alpha = alpha_of(cfg)?;
    let seed = cfg.u64_or("seed", 0)?;
    let scan = ScanOptions {
        root_tol: cfg.f64_or("tol", 1e-6)?,
        ..ScanOptions::default()
    };
    let me = mobility_edge(alpha, &scan)?;
    let (hash, seed_s) = meta(cfg, seed);
    let mut t = Table::new(vec![
        "cfg_hash", "seed", "alpha", "E", "a", "b", "re_ell", "im_ell", "lambda", "residual",
        "method", "e_mob", "bracket_lo", "bracket_hi",
    ]);
    let s = cfg.f64_or("s", 1.0)?;
    for &root in &me.all_roots {
        let sol = if me.method == edge::EdgeMethod::SmallAlpha {
            small_alpha_solution(root, alpha)?
        } else {
            solve_energy(root, alpha, s, &SolveOptions::default())?
        };
        let mut row = edge_solution_row(&hash, &seed_s, &sol, alpha);
        row.push(fmt_f64(me.e_mob));
        row.push(fmt_f64(me.bracket.0));
        row.push(fmt_f64(me.bracket.1));
        t.push(row);
    }
    Ok(t)
}

fn small_alpha_solution(energy: f64, alpha: f64) -> Result<edge::EdgeSolution, CliError> {
    let u = energy.powf(alpha / 2.0);
    let (lam, a, b) = edge::lambda_tilde(u, alpha)?;
    Ok(edge::EdgeSolution {
        energy,
        a,
        b,
        residual: 0.0,
        ell: Complex64::new(f64::NAN, f64::NAN),
        lambda_s: lam,
        lambda: lam,
        method: edge::EdgeMethod::SmallAlpha,
    })
}

fn cmd_lambda(cfg: &RunConfig) -> Result<Table, CliError> {
    let alpha = alpha_of(cfg)?;
    let seed = cfg.u64_or("seed", 0)?;
    let energies = match cfg.get("E-grid") {
        Some(_) => cfg.list_required("E-grid")?,
        None => vec![cfg.f64_required("E")?],
    };
    let s = cfg.f64_or("s", 1.0)?;
    let (hash, seed_s) = meta(cfg, seed);
    let mut t = Table::new(vec![
        "cfg_hash", "seed", "alpha", "E", "a", "b", "re_ell", "im_ell", "lambda", "residual",
        "method",
    ]);
    for &e in &energies {
        let sol = solve_energy(e, alpha, s, &SolveOptions::default())?;
        t.push(edge_solution_row(&hash, &seed_s, &sol, alpha));
    }
    Ok(t)
}

fn cmd_transfer(cfg: &RunConfig) -> Result<Table, CliError> {
    let alpha = alpha_of(cfg)?;
    let seed = cfg.u64_or("seed", 0)?;
    let s = cfg.f64_required("s")?;
    let energy = cfg.f64_required("E")?;
    let sol = edge::solve_ab(energy, alpha, &SolveOptions::default())?;
    let kernel = build_kernel(energy, s, alpha, &sol.pair)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let (lambda0, _) = perron_rank2(&kernel);
    let power = perron_grid(&kernel, 50).map_err(|e| CliError::Runtime(e.to_string()))?;
    let (hash, seed_s) = meta(cfg, seed);
    let mut t = Table::new(vec![
        "cfg_hash", "seed", "alpha", "s", "E", "lambda0_rank2", "lambda0_power",
        "power_residual", "x", "f_e",
    ]);
    for (i, &x) in kernel.grid.iter().enumerate() {
        t.push(vec![
            hash.clone(),
            seed_s.clone(),
            fmt_f64(alpha),
            fmt_f64(s),
            fmt_f64(energy),
            fmt_f64(lambda0),
            fmt_f64(power.lambda),
            fmt_f64(power.residual),
            fmt_f64(x),
            fmt_f64(power.eigenfunction[i]),
        ]);
    }
    Ok(t)
}

fn cmd_pwit(cfg: &RunConfig) -> Result<Table, CliError> {
    let alpha = alpha_of(cfg)?;
    let seed = cfg.u64_required("seed")?;
    let s = cfg.f64_or("s", (alpha + 1.0) / 2.0)?;
    let energy = cfg.f64_or("E", 1.0)?;
    let eta = cfg.f64_or("eta", 1e-2)?;
    let depth = cfg.usize_or("depth", 8)?;
    let omega = cfg.f64_or("omega", 0.1)?;
    let n_trees = cfg.usize_or("trees", 400)?;
    let budget = cfg.usize_or("budget", 3_000_000)?;
    let z = Complex64::new(energy, eta);
    let (hash, seed_s) = meta(cfg, seed);
    let mut t = Table::new(vec![
        "cfg_hash", "seed", "alpha", "s", "re_z", "im_z", "L", "phi_L", "phi_rate", "std_err",
        "omega", "n_trees",
    ]);
    for depth_l in (2..=depth).step_by(2) {
        let est = phi_batch(
            alpha,
            s,
            z,
            depth_l,
            omega,
            budget,
            n_trees,
            Boundary::Dirichlet,
            seed,
        )
        .map_err(|e| CliError::Runtime(e.to_string()))?;
        t.push(vec![
            hash.clone(),
            seed_s.clone(),
            fmt_f64(alpha),
            fmt_f64(s),
            fmt_f64(energy),
            fmt_f64(eta),
            fmt_usize(depth_l),
            fmt_f64(est.phi),
            fmt_f64(est.rate),
            fmt_f64(est.std_err),
            fmt_f64(omega),
            fmt_usize(n_trees),
        ]);
    }
    Ok(t)
}

fn cmd_matrix(cfg: &RunConfig) -> Result<Table, CliError> {
    let alpha = alpha_of(cfg)?;
    let seed = cfg.u64_required("seed")?;
    let energies = cfg.list_required("E-grid")?;
    let etas = cfg.list_or("eta-ladder", &[1e-1, 1e-2, 1e-3])?;
    let n = cfg.usize_or("N", 800)?;
    let reps = cfg.usize_or("reps", 2)?;
    let opts = PhaseOptions {
        n,
        reps: 1,
        interval_width: cfg.f64_or("interval-width", 0.4)?,
        s: cfg.f64_or("s", 0.5)?,
        probes: cfg.usize_or("probes", 24)?,
    };
    let (hash, seed_s) = meta(cfg, seed);
    let mut t = Table::new(vec![
        "cfg_hash", "seed", "alpha", "E", "eta", "N", "rep", "med_im_g", "spread", "q2",
        "qhalf_s", "class",
    ]);
    let mut etas_desc = etas.clone();
    etas_desc.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for rep in 0..reps {
        let rows = phase_diagnostic(alpha, &energies, &etas, &opts, seed ^ ((rep as u64) << 40))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        for row in rows {
            for (k, &eta) in etas_desc.iter().enumerate() {
                t.push(vec![
                    hash.clone(),
                    seed_s.clone(),
                    fmt_f64(alpha),
                    fmt_f64(row.energy),
                    fmt_f64(eta),
                    fmt_usize(n),
                    fmt_usize(rep),
                    fmt_f64(row.med_im_g[k]),
                    fmt_f64(row.spread),
                    fmt_f64(row.q2_wide),
                    fmt_f64(row.q_half_s),
                    row.class.to_string(),
                ]);
            }
        }
    }
    Ok(t)
}

fn cmd_sweep(cfg: &RunConfig) -> Result<Table, CliError> {
    let alphas = cfg.list_required("alpha")?;
    let seed = cfg.u64_or("seed", 0)?;
    for &a in &alphas {
        if !(a > 0.0 && a < 1.0) {
            return Err(ConfigError::Invalid(format!("alpha {a} outside (0,1)")).into());
        }
    }
    let tol = cfg.f64_or("tol", 1e-6)?;
    let rows: Vec<(f64, Result<(f64, usize, String, f64), String>)> = alphas
        .par_iter()
        .map(|&alpha| {
            let started = Instant::now();
            let scan = ScanOptions {
                root_tol: tol,
                ..ScanOptions::default()
            };
            let out = mobility_edge(alpha, &scan)
                .map(|me| {
                    (
                        me.e_mob,
                        me.all_roots.len(),
                        me.method.to_string(),
                        started.elapsed().as_secs_f64(),
                    )
                })
                .map_err(|e| e.to_string());
            (alpha, out)
        })
        .collect();
    let (hash, seed_s) = meta(cfg, seed);
    let mut t = Table::new(vec![
        "cfg_hash", "seed", "alpha", "e_mob", "scale_near_one", "scale_near_zero", "n_roots",
        "method", "runtime_s", "error",
    ]);
    for (alpha, out) in rows {
        match out {
            Ok((e_mob, n_roots, method, secs)) => {
                let near_one = (1.0 - alpha) * e_mob;
                let near_zero = e_mob.powf(alpha / 2.0) * alpha.ln().abs();
                t.push(vec![
                    hash.clone(),
                    seed_s.clone(),
                    fmt_f64(alpha),
                    fmt_f64(e_mob),
                    fmt_f64(near_one),
                    fmt_f64(near_zero),
                    fmt_usize(n_roots),
                    method,
                    fmt_f64(secs),
                    String::new(),
                ]);
            }
            Err(e) => {
                t.push(vec![
                    hash.clone(),
                    seed_s.clone(),
                    fmt_f64(alpha),
                    "nan".into(),
                    "nan".into(),
                    "nan".into(),
                    "0".into(),
                    String::new(),
                    "nan".into(),
                    e,
                ]);
            }
        }
    }
    Ok(t)
}
