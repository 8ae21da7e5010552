//! Command-line front end: parse model files, run solvers, checks, gap
//! sweeps and simulations, and emit machine-readable results with run
//! manifests.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 mathematical failure
//! (assumption or convergence), 3 numeric instability.

mod io;
mod manifest;

use clap::{Args, Parser, Subcommand};
use deeplq::equilibrium::{self, NsStrategyKind};
use deeplq::gap;
use deeplq::model::{
    model_from_json, validate_model, CovarianceSpec, GameModel, MeanSpec, NoiseCovSpec,
    NoiseModel, WeightProfile,
};
use deeplq::riccati::{self, HorizonSpec};
use deeplq::sim::{self, ProfileSpec, SimConfig};
use manifest::{manifest_path, ManifestBuilder};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "deeplq",
    version,
    about = "Solvers, checks and simulators for linear-quadratic deep structured games"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for equilibrium gains and value matrices.
    Solve(SolveArgs),
    /// Check the solvability assumptions and write a report.
    Check(CheckArgs),
    /// Exact (and optionally Monte Carlo) performance gaps over a
    /// population sweep.
    Gap(GapArgs),
    /// Monte Carlo simulation under a chosen strategy profile.
    Simulate(SimulateArgs),
}

#[derive(Args, Serialize)]
struct SolveArgs {
    /// Model file (JSON).
    model: PathBuf,
    /// Homogeneous population size (weight 1/n).
    #[arg(long, conflicts_with_all = ["alpha", "infinite", "social"])]
    n: Option<usize>,
    /// Explicit weight in (−1, 1).
    #[arg(long, conflicts_with_all = ["infinite", "social"])]
    alpha: Option<f64>,
    /// Infinite-population weight (0).
    #[arg(long, conflicts_with = "social")]
    infinite: bool,
    /// Social-cost specialization (weight-independent gains).
    #[arg(long)]
    social: bool,
    /// Finite horizon (defaults to the model's).
    #[arg(long)]
    horizon: Option<usize>,
    /// Discount factor for the stationary solve (defaults to the model's).
    #[arg(long)]
    discount: Option<f64>,
    /// Output path for the gains document.
    #[arg(short, long, default_value = "gains.json")]
    output: PathBuf,
}

#[derive(Args, Serialize)]
struct CheckArgs {
    model: PathBuf,
    /// Grid size for the vanishing-weight interval check.
    #[arg(long)]
    grid: Option<usize>,
    /// Homogeneous population size (overrides the model's weights).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    discount: Option<f64>,
    #[arg(short, long, default_value = "check.json")]
    output: PathBuf,
}

#[derive(Args, Serialize)]
struct GapArgs {
    model: PathBuf,
    /// Population sizes, e.g. 10,20,50,100.
    #[arg(long, value_delimiter = ',', required = true)]
    sweep_n: Vec<usize>,
    /// sapde | swmfe | both
    #[arg(long, default_value = "both")]
    strategy: String,
    /// Monte Carlo replications for the cross-check column (0 = skip).
    #[arg(long, default_value_t = 0)]
    mc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Switch stages, e.g. 1,10,25.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    t0: Vec<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Discounted stationary gap instead of the finite-horizon one.
    #[arg(long)]
    discount: Option<f64>,
    #[arg(short, long, default_value = "gap.csv")]
    output: PathBuf,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    model: PathBuf,
    #[arg(long, required = true)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// spne | sapde | swmfe | zero
    #[arg(long, default_value = "spne")]
    profile: String,
    /// gaussian | uniform (variance-matched draws either way)
    #[arg(long, default_value = "gaussian")]
    sampler: String,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    t0: Vec<usize>,
    #[arg(short, long, default_value = "sim.json")]
    output: PathBuf,
    /// Also dump sampled trajectories to this CSV file.
    #[arg(long)]
    trajectories: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Math(String),
    Unstable(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Math(_) => 2,
            CliError::Unstable(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Math(m) | CliError::Unstable(m) => m,
        }
    }
}

impl From<deeplq::Error> for CliError {
    fn from(e: deeplq::Error) -> Self {
        use deeplq::Error::*;
        match e {
            Dimension { .. } | InvalidModel(_) | InvalidWeights(_) | NotExchangeable(_)
            | MissingData(_) => CliError::Usage(e.to_string()),
            Unstable(_) => CliError::Unstable(e.to_string()),
            _ => CliError::Math(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

struct Loaded {
    model: GameModel,
    weights: Option<WeightProfile>,
    noise: Option<NoiseModel>,
    raw: Vec<u8>,
}

fn load_model(path: &Path) -> Result<Loaded, CliError> {
    let raw = std::fs::read(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(raw.clone())
        .map_err(|_| CliError::Usage(format!("{} is not UTF-8", path.display())))?;
    let (model, weights, noise) = model_from_json(&text)?;
    if let (Some(w), Some(ns)) = (&weights, &noise) {
        let report = validate_model(&model, w, ns);
        if !report.is_valid() {
            let mut msg = String::from("model file fails validation:");
            for v in &report.violations {
                msg.push_str(&format!("\n  {}: {}", v.location, v.message));
            }
            return Err(CliError::Usage(msg));
        }
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(Loaded {
        model,
        weights,
        noise,
        raw,
    })
}

/// Rebuild the noise model for a different population size. Works when all
/// per-player statistics are shared; otherwise the population is pinned.
fn noise_for_n(noise: &NoiseModel, n: usize) -> Result<NoiseModel, CliError> {
    if noise.n() == n {
        return Ok(noise.clone());
    }
    let mean = match &noise.mean {
        MeanSpec::Shared(m) => MeanSpec::Shared(m.clone()),
        MeanSpec::PerPlayer(_) => {
            return Err(CliError::Usage(format!(
                "model noise pins the population to n={}, cannot sweep to n={n}",
                noise.n()
            )))
        }
    };
    let shared_only = |c: &CovarianceSpec| match c {
        CovarianceSpec::Shared(m) => Ok(CovarianceSpec::Shared(m.clone())),
        _ => Err(CliError::Usage(format!(
            "model noise pins the population to n={}, cannot sweep to n={n}",
            noise.n()
        ))),
    };
    let initial = shared_only(&noise.initial)?;
    let cov = match &noise.noise {
        NoiseCovSpec::Constant(c) => NoiseCovSpec::Constant(shared_only(c)?),
        NoiseCovSpec::PerStep(cs) => NoiseCovSpec::PerStep(
            cs.iter().map(shared_only).collect::<Result<Vec<_>, _>>()?,
        ),
    };
    Ok(NoiseModel::new(n, noise.d_x(), mean, initial, cov, noise.iid))
}

fn resolve_horizon(model: &GameModel, flag: Option<usize>) -> Result<usize, CliError> {
    flag.or(model.finite_horizon()).ok_or_else(|| {
        CliError::Usage("stationary model: pass --horizon for finite-horizon operations".into())
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            use clap::error::ErrorKind;
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let body = || match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Check(args) => cmd_check(args),
        Command::Gap(args) => cmd_gap(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    let result = match cli.threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(body),
            Err(e) => Err(CliError::Usage(format!("cannot build thread pool: {e}"))),
        },
        None => body(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let loaded = load_model(&args.model)?;
    let model = &loaded.model;
    let mut mf = ManifestBuilder::new("solve");
    mf.config(args);
    mf.input_bytes(&loaded.raw);

    let discount = args.discount.or(model.discount());
    let stationary_mode = args.horizon.is_none() && model.is_stationary();

    enum Mode {
        Weight(f64, String),
        Infinite,
        Social,
    }
    let mode = if args.social {
        Mode::Social
    } else if args.infinite {
        Mode::Infinite
    } else if let Some(alpha) = args.alpha {
        Mode::Weight(alpha, format!("weight {alpha}"))
    } else if let Some(n) = args.n {
        Mode::Weight(1.0 / n as f64, format!("homogeneous n={n}"))
    } else {
        match &loaded.weights {
            Some(WeightProfile::Homogeneous { n }) => {
                Mode::Weight(1.0 / *n as f64, format!("homogeneous n={n}"))
            }
            Some(WeightProfile::Vanishing { .. }) => Mode::Infinite,
            Some(WeightProfile::Positive { .. }) => Mode::Social,
            None => {
                return Err(CliError::Usage(
                    "no weights in the model file: pass --n, --alpha, --infinite or --social"
                        .into(),
                ))
            }
        }
    };

    let doc = match mode {
        Mode::Weight(alpha, ref label) => {
            let sol = if stationary_mode {
                let gamma = discount.ok_or_else(|| {
                    CliError::Usage("stationary solve needs --discount (or model discount)".into())
                })?;
                riccati::solve_algebraic(
                    model,
                    alpha,
                    gamma,
                    riccati::ALGEBRAIC_TOL,
                    riccati::ALGEBRAIC_MAX_ITER,
                )
            } else {
                let horizon = resolve_horizon(model, args.horizon)?;
                riccati::solve_finite(model, alpha, horizon)
            };
            let sol = match sol {
                Ok(sol) => sol,
                Err(e) => return Err(solve_failure(model, &loaded, args, e)),
            };
            // Degenerate costless stages (all factors zero) are trivially
            // solvable and exempt from the positivity gate.
            let bad = sol.stages.iter().position(|st| {
                st.min_eig_combo <= 0.0
                    && !(st.f.amax() == 0.0
                        && st.f_bar.amax() == 0.0
                        && st.k.amax() == 0.0
                        && st.k_bar.amax() == 0.0)
            });
            if let Some(bad) = bad {
                let e = deeplq::Error::AssumptionFailed {
                    id: "A2/A3".into(),
                    detail: format!(
                        "(1−α)F+αF̄ not positive definite at t={} for {label}",
                        bad + 1
                    ),
                };
                return Err(solve_failure(model, &loaded, args, e));
            }
            io::gains_doc(&sol, model.d_x(), model.d_u(), label)
        }
        Mode::Infinite => {
            if stationary_mode {
                let gamma = discount.ok_or_else(|| {
                    CliError::Usage("stationary solve needs --discount (or model discount)".into())
                })?;
                match riccati::solve_algebraic(
                    model,
                    0.0,
                    gamma,
                    riccati::ALGEBRAIC_TOL,
                    riccati::ALGEBRAIC_MAX_ITER,
                ) {
                    Ok(sol) => io::gains_doc(&sol, model.d_x(), model.d_u(), "infinite-population"),
                    Err(e) => return Err(solve_failure(model, &loaded, args, e)),
                }
            } else {
                let horizon = resolve_horizon(model, args.horizon)?;
                match riccati::solve_finite(model, 0.0, horizon) {
                    Ok(sol) => io::gains_doc(&sol, model.d_x(), model.d_u(), "infinite-population"),
                    Err(e) => {
                        // Pure social-cost models: weight-independent gains.
                        match riccati::solve_social(model, HorizonSpec::Finite(horizon)) {
                            Ok(sol) => io::gains_doc_decoupled(
                                &sol,
                                model.d_x(),
                                model.d_u(),
                                "infinite-population (social)",
                                None,
                            ),
                            Err(_) => return Err(solve_failure(model, &loaded, args, e)),
                        }
                    }
                }
            }
        }
        Mode::Social => {
            let spec = if stationary_mode {
                HorizonSpec::Discounted {
                    gamma: discount.ok_or_else(|| {
                        CliError::Usage(
                            "stationary solve needs --discount (or model discount)".into(),
                        )
                    })?,
                }
            } else {
                HorizonSpec::Finite(resolve_horizon(model, args.horizon)?)
            };
            match riccati::solve_social(model, spec) {
                Ok(sol) => io::gains_doc_decoupled(
                    &sol,
                    model.d_x(),
                    model.d_u(),
                    "social",
                    match spec {
                        HorizonSpec::Discounted { gamma } => Some(gamma),
                        HorizonSpec::Finite(_) => None,
                    },
                ),
                Err(e) => return Err(solve_failure(model, &loaded, args, e)),
            }
        }
    };

    write_json(&args.output, &doc)?;
    mf.output(&args.output);
    mf.write(&manifest_path(&args.output))?;
    println!("wrote {}", args.output.display());
    Ok(())
}

/// On a mathematical failure, print the assumption report before exiting
/// with code 2.
fn solve_failure(
    model: &GameModel,
    loaded: &Loaded,
    args: &SolveArgs,
    e: deeplq::Error,
) -> CliError {
    let profile = match (args.n, &loaded.weights) {
        (Some(n), _) => WeightProfile::Homogeneous { n },
        (None, Some(w)) => w.clone(),
        (None, None) => WeightProfile::Homogeneous { n: 2 },
    };
    let spec = match (args.horizon, args.discount.or(model.discount())) {
        (Some(t), _) => HorizonSpec::Finite(t),
        (None, Some(gamma)) if model.is_stationary() => HorizonSpec::Discounted { gamma },
        _ => HorizonSpec::Finite(model.finite_horizon().unwrap_or(50)),
    };
    let report = riccati::check_assumptions(model, &profile, spec, None);
    #[derive(Serialize)]
    struct CheckDoc<'a> {
        schema: &'a str,
        report: &'a riccati::AssumptionReport,
    }
    if let Ok(text) = serde_json::to_string_pretty(&CheckDoc {
        schema: io::CHECK_SCHEMA,
        report: &report,
    }) {
        println!("{text}");
    }
    CliError::Math(e.to_string())
}

fn cmd_check(args: &CheckArgs) -> Result<(), CliError> {
    let loaded = load_model(&args.model)?;
    let model = &loaded.model;
    let mut mf = ManifestBuilder::new("check");
    mf.config(args);
    mf.input_bytes(&loaded.raw);

    let profile = match (args.n, &loaded.weights) {
        (Some(n), _) => WeightProfile::Homogeneous { n },
        (None, Some(w)) => w.clone(),
        (None, None) => {
            return Err(CliError::Usage(
                "no weights in the model file: pass --n".into(),
            ))
        }
    };
    let spec = match (args.horizon, args.discount.or(model.discount())) {
        (Some(t), _) => HorizonSpec::Finite(t),
        (None, Some(gamma)) if model.is_stationary() => HorizonSpec::Discounted { gamma },
        (None, _) => HorizonSpec::Finite(resolve_horizon(model, None)?),
    };
    let report = riccati::check_assumptions(model, &profile, spec, args.grid);

    #[derive(Serialize)]
    struct CheckDoc {
        schema: String,
        report: riccati::AssumptionReport,
    }
    write_json(
        &args.output,
        &CheckDoc {
            schema: io::CHECK_SCHEMA.into(),
            report: report.clone(),
        },
    )?;
    for entry in &report.entries {
        println!("{:<4} {:?}: {}", entry.id, entry.status, entry.summary);
    }
    mf.output(&args.output);
    mf.write(&manifest_path(&args.output))?;
    Ok(())
}

fn parse_strategies(s: &str) -> Result<Vec<NsStrategyKind>, CliError> {
    match s {
        "sapde" => Ok(vec![NsStrategyKind::Sapde]),
        "swmfe" => Ok(vec![NsStrategyKind::Swmfe]),
        "both" => Ok(vec![NsStrategyKind::Sapde, NsStrategyKind::Swmfe]),
        other => Err(CliError::Usage(format!(
            "unknown strategy {other:?} (expected sapde, swmfe or both)"
        ))),
    }
}

fn cmd_gap(args: &GapArgs) -> Result<(), CliError> {
    let loaded = load_model(&args.model)?;
    let model = &loaded.model;
    let strategies = parse_strategies(&args.strategy)?;
    let noise_base = loaded.noise.as_ref().ok_or_else(|| {
        CliError::Usage("gap computation needs a noise section in the model file".into())
    })?;
    if let Some(WeightProfile::Positive { .. } | WeightProfile::Vanishing { .. }) = &loaded.weights
    {
        return Err(CliError::Usage(
            "gap sweeps require homogeneous weights (the sweep sets n)".into(),
        ));
    }
    let mut mf = ManifestBuilder::new("gap");
    mf.config(args);
    mf.input_bytes(&loaded.raw);
    mf.seed(args.seed);

    let discounted = args.discount.or_else(|| {
        if model.is_stationary() && args.horizon.is_none() {
            model.discount()
        } else {
            None
        }
    });
    if discounted.is_some() && args.mc > 0 {
        return Err(CliError::Usage(
            "--mc applies to the finite-horizon gap only".into(),
        ));
    }

    use rayon::prelude::*;
    struct Cell {
        n: usize,
        strategy: NsStrategyKind,
        result: Result<(Vec<gap::GapAtT0>, Vec<Option<sim::GapEstimate>>), String>,
    }
    let jobs: Vec<(usize, NsStrategyKind)> = args
        .sweep_n
        .iter()
        .flat_map(|&n| strategies.iter().map(move |&s| (n, s)))
        .collect();
    let cells: Vec<Cell> = jobs
        .par_iter()
        .map(|&(n, strategy)| {
            let run = || -> Result<_, deeplq::Error> {
                let noise = match noise_for_n(noise_base, n) {
                    Ok(ns) => ns,
                    Err(e) => {
                        return Err(deeplq::Error::Precondition(e.message().to_string()))
                    }
                };
                let report = match discounted {
                    Some(gamma) => gap::performance_gap_discounted(
                        model, &noise, n, strategy, gamma, &args.t0,
                    )?,
                    None => {
                        let horizon = args.horizon.or(model.finite_horizon()).ok_or(
                            deeplq::Error::Precondition(
                                "finite-horizon gap needs --horizon".into(),
                            ),
                        )?;
                        gap::performance_gap(model, &noise, n, strategy, &args.t0, horizon)?
                    }
                };
                let mc = if args.mc > 0 {
                    let horizon = args
                        .horizon
                        .or(model.finite_horizon())
                        .expect("checked by the finite-horizon branch above");
                    let hat = match strategy {
                        NsStrategyKind::Sapde => {
                            equilibrium::sapde(model, &noise, n, horizon)?
                        }
                        NsStrategyKind::Swmfe => equilibrium::swmfe(
                            model,
                            &noise,
                            &WeightProfile::Homogeneous { n },
                            horizon,
                        )?,
                    };
                    let star = match strategy {
                        NsStrategyKind::Sapde => equilibrium::spne(
                            model,
                            &WeightProfile::Homogeneous { n },
                            horizon,
                        )?,
                        NsStrategyKind::Swmfe => equilibrium::spne_infinite(model, horizon)?,
                    };
                    let est = sim::empirical_performance_gap(
                        model,
                        &noise,
                        n,
                        &ProfileSpec::Shared(hat),
                        &ProfileSpec::Shared(star),
                        args.mc,
                        args.seed,
                        &args.t0,
                        horizon,
                    )?;
                    est.into_iter().map(Some).collect()
                } else {
                    vec![None; args.t0.len()]
                };
                Ok((report.per_t0, mc))
            };
            Cell {
                n,
                strategy,
                result: run().map_err(|e| e.to_string()),
            }
        })
        .collect();

    let mut rows = Vec::new();
    let mut any_failed = false;
    for cell in &cells {
        match &cell.result {
            Ok((per_t0, mc)) => {
                for (k, g) in per_t0.iter().enumerate() {
                    rows.push(io::GapCsvRow {
                        n: cell.n,
                        strategy: cell.strategy.to_string(),
                        t0: g.t0,
                        gap_lyapunov: Some(g.gap),
                        gap_mc: mc[k].as_ref().map(|e| e.estimate.abs()),
                        mc_stderr: mc[k].as_ref().map(|e| e.std_error),
                        status: "ok".into(),
                    });
                }
            }
            Err(msg) => {
                any_failed = true;
                for &t0 in &args.t0 {
                    rows.push(io::GapCsvRow {
                        n: cell.n,
                        strategy: cell.strategy.to_string(),
                        t0,
                        gap_lyapunov: None,
                        gap_mc: None,
                        mc_stderr: None,
                        status: format!("error: {}", msg.replace(',', ";")),
                    });
                }
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.n, &a.strategy, a.t0)
            .partial_cmp(&(b.n, &b.strategy, b.t0))
            .unwrap()
    });

    std::fs::write(&args.output, io::gap_csv(&rows))?;
    mf.output(&args.output);
    mf.write(&manifest_path(&args.output))?;
    println!("wrote {}", args.output.display());
    if any_failed {
        return Err(CliError::Math("one or more sweep cells failed".into()));
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let loaded = load_model(&args.model)?;
    let model = &loaded.model;
    let noise_base = loaded.noise.as_ref().ok_or_else(|| {
        CliError::Usage("simulation needs a noise section in the model file".into())
    })?;
    let noise = noise_for_n(noise_base, args.n)?;
    let horizon = resolve_horizon(model, args.horizon)?;
    let mut mf = ManifestBuilder::new("simulate");
    mf.config(args);
    mf.input_bytes(&loaded.raw);
    mf.seed(args.seed);

    let profile = match args.profile.as_str() {
        "spne" => ProfileSpec::Shared(equilibrium::spne(
            model,
            &WeightProfile::Homogeneous { n: args.n },
            horizon,
        )?),
        "sapde" => ProfileSpec::Shared(equilibrium::sapde(model, &noise, args.n, horizon)?),
        "swmfe" => ProfileSpec::Shared(equilibrium::swmfe(
            model,
            &noise,
            &WeightProfile::Homogeneous { n: args.n },
            horizon,
        )?),
        "zero" => ProfileSpec::Shared(equilibrium::Strategy::zero(model.d_x(), model.d_u())),
        other => {
            return Err(CliError::Usage(format!(
                "unknown profile {other:?} (expected spne, sapde, swmfe or zero)"
            )))
        }
    };

    let mut config = SimConfig::new(args.n, horizon, args.reps, args.seed);
    config.t0s = args.t0.clone();
    config.store_trajectories = args.trajectories.is_some();
    config.sampler = match args.sampler.as_str() {
        "gaussian" => sim::SamplerKind::Gaussian,
        "uniform" => sim::SamplerKind::Uniform,
        other => {
            return Err(CliError::Usage(format!(
                "unknown sampler {other:?} (expected gaussian or uniform)"
            )))
        }
    };
    let result = sim::simulate(model, &noise, &config, &profile)?;

    write_json(&args.output, &io::sim_doc(&result))?;
    mf.output(&args.output);
    if let Some(path) = &args.trajectories {
        std::fs::write(path, io::trajectory_csv(&result, model.d_x(), model.d_u()))?;
        mf.output(path);
    }
    mf.write(&manifest_path(&args.output))?;
    println!(
        "wrote {} ({} replications, {} excluded)",
        args.output.display(),
        result.replications,
        result.excluded
    );
    Ok(())
}
