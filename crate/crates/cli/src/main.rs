//! `projclust` command-line front end.
//!
//! Exit codes: 0 success (or target error achieved), 2 budget exhausted
//! without reaching the target, 1 usage or I/O error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::{json, Value};

use projclust::bounds::{
    bayes_error_lower_bound, error_gap_bound, expected_projections_nonspherical_geometry,
    expected_projections_spherical, hd_bayes_error_bound, kgmm_failure_bound,
    kgmm_projection_bound, nonspherical_direction_prob_geometry, optimize_rank_params,
    optimize_tau, sample_size_required, spherical_direction_prob, sublog_regime_check,
    NonsphericalGeometry, RankMode,
};
use projclust::clusterer::{
    classify, cluster_gmm, clustering_error, projections_budget_default, ClusterConfig,
};
use projclust::datagen::{
    make_rank_spec, make_simplex_spec, make_spherical_spec, sample_dataset,
    sample_nongaussian_dataset, Shape,
};
use projclust::experiment::{run_experiment, ExperimentConfig, ExperimentKind};
use projclust::io::{read_dataset, read_header, write_csv, write_dataset};
use projclust::learner1d::Method;
use projclust::{Error, RngStream};

const EXIT_EXHAUSTED: u8 = 2;
const EXIT_USAGE: u8 = 1;
const THREADS_ENV: &str = "PROJCLUST_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "projclust",
    version,
    about = "Cluster two-component mixtures through random 1-D projections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a labelled synthetic mixture and write `<out>.bin` plus `<out>.json`.
    Gen(GenArgs),
    /// Scan random projections of a dataset until the estimated error drops below --error.
    Cluster(ClusterArgs),
    /// Evaluate a theoretical bound and print it as JSON.
    Bounds {
        #[command(subcommand)]
        bound: BoundCommand,
    },
    /// Run a Monte Carlo experiment and write its CSV table.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: usize,
    /// Separation of every pair of components.
    #[arg(long)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Weight of the first component (two-component specs only).
    #[arg(long)]
    w: Option<f64>,
    /// Number of components; more than two places them on a simplex.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Build a low-rank covariance pair with blocks of ceil(zeta p) coordinates.
    #[arg(long)]
    zeta: Option<f64>,
    /// Coordinate distribution: gaussian, uniform, laplace or rademacher.
    #[arg(long, default_value = "gaussian")]
    shape: Shape,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Base path of the output files.
    #[arg(long)]
    out: PathBuf,
    /// Also write the points as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    /// Dataset base path (or its .bin/.json file).
    #[arg(long = "in")]
    input: PathBuf,
    /// Target clustering error.
    #[arg(long, default_value_t = 0.1)]
    error: f64,
    /// Number of directions to try; defaults to 3 ceil(ln p).
    #[arg(long)]
    budget: Option<usize>,
    /// 1-D learner: mom, em or mom+em.
    #[arg(long, default_value = "mom+em")]
    learner: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum BoundCommand {
    /// Upper bound on the optimal error in p dimensions.
    HdError {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        p: usize,
    },
    /// Lower bound on the probability that a random direction is gamma-separable.
    DirectionProb {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        p: usize,
        /// Free parameter; optimized over a grid when omitted.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Expected number of projections until a gamma-separable direction.
    Projections {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        c: f64,
        #[arg(long, required_unless_present = "asymptotic")]
        p: Option<usize>,
        /// Large-p limit, which does not depend on p.
        #[arg(long)]
        asymptotic: bool,
    },
    /// Pairwise failure probability for k components, or the projection count with --alpha.
    Kgmm {
        #[arg(long)]
        c_min: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, required_unless_present = "alpha")]
        gamma_min: Option<f64>,
        #[arg(long, required_unless_present = "alpha")]
        p: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Projection count for general covariances from the covariance geometry.
    Rank {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        p: usize,
        /// Rank of the covariance sum.
        #[arg(long)]
        r: usize,
        /// Largest eigenvalue of the covariance sum.
        #[arg(long)]
        lambda_max_sum: f64,
        /// Squared distance between the means.
        #[arg(long)]
        mean_gap_sq: f64,
        #[arg(long, requires = "tau2")]
        tau1: Option<f64>,
        #[arg(long, requires = "tau1")]
        tau2: Option<f64>,
        /// Use the full-rank form instead of the rank form.
        #[arg(long, conflicts_with_all = ["tau1", "tau2"])]
        full: bool,
        #[arg(long)]
        asymptotic: bool,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
    },
    /// Samples needed for accurate 1-D estimates.
    SampleSize {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        gamma_min: f64,
    },
    /// Gap between the estimated and optimal error under relative parameter error eps.
    ErrorGap {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        gamma_max: f64,
        #[arg(long)]
        w_min: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Lower bound on the optimal 1-D error.
    BayesLower {
        #[arg(long)]
        w: f64,
        #[arg(long)]
        gamma: f64,
    },
    /// Whether gamma / c lies in the o(ln p) or o(p) projection regime.
    Regime {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
    },
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// One of acc-vs-sep, proj-vs-sep, err-vs-proj, rank-acc, rank-proj, gamma-cdf.
    name: ExperimentKind,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<usize>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<f64>>,
    #[arg(long)]
    error: Option<f64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    zeta: Option<Vec<f64>>,
    /// Directions sampled by gamma-cdf.
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    learner: Option<Method>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn experiment_help() -> String {
    let mut s = String::from("Experiments and their CSV columns:\n");
    for k in ExperimentKind::ALL {
        s.push_str(&format!("  {k}: {}\n", k.columns()));
    }
    s
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Error> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn gen(args: GenArgs) -> Result<ExitCode, Error> {
    if args.k > 2 && (args.w.is_some() || args.zeta.is_some()) {
        return Err(Error::Domain(
            "--w and --zeta apply to two-component specs only".into(),
        ));
    }
    let mut meta = json!({
        "p": args.p, "n": args.n, "c": args.c, "sigma": args.sigma, "k": args.k,
        "shape": args.shape.to_string(), "seed": args.seed,
    });
    let spec = match (args.zeta, args.k) {
        (Some(zeta), _) => {
            if args.w.is_some() || args.sigma != 1.0 {
                return Err(Error::Domain(
                    "--zeta fixes w = 0.5 and unit variances".into(),
                ));
            }
            let rs = make_rank_spec(args.p, args.c, zeta, &RngStream::new(args.seed, 1))?;
            meta["zeta"] = json!(zeta);
            meta["r"] = json!(rs.r);
            meta["block"] = json!(rs.block);
            meta["disjoint"] = json!(rs.disjoint);
            rs.spec
        }
        (None, 2) => {
            let w = args.w.unwrap_or(0.5);
            meta["w"] = json!(w);
            make_spherical_spec(args.p, args.c, args.sigma, w)?
        }
        (None, k) => make_simplex_spec(args.p, k, args.c, args.sigma)?,
    };
    let stream = RngStream::new(args.seed, 0);
    let data = match args.shape {
        Shape::Gaussian => sample_dataset(&spec, args.n, &stream)?,
        shape => sample_nongaussian_dataset(&spec, shape, args.n, &stream)?,
    };
    write_dataset(&data, &args.out, meta)?;
    if let Some(csv) = &args.csv {
        write_csv(&data, csv)?;
    }
    print_json(&read_header(&args.out)?.metadata)?;
    Ok(ExitCode::SUCCESS)
}

fn cluster(args: ClusterArgs) -> Result<ExitCode, Error> {
    let data = read_dataset(&args.input)?;
    let budget = match args.budget {
        Some(m) => m,
        None => projections_budget_default(data.p, false, args.error, None)?,
    };
    let cfg = ClusterConfig {
        learner: args.learner,
        seed: args.seed,
        ..ClusterConfig::new(args.error, budget)
    };
    let outcome = cluster_gmm(&data, &cfg)?;
    let mut value = serde_json::to_value(&outcome)?;
    if let Some(labels) = &data.labels {
        let predicted = classify(&data, &outcome.boundary)?;
        value["clustering_error"] = json!(clustering_error(&predicted, labels)?);
    }
    print_json(&value)?;
    Ok(if outcome.achieved {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_EXHAUSTED)
    })
}

fn bounds(cmd: BoundCommand) -> Result<ExitCode, Error> {
    let value: Value = match cmd {
        BoundCommand::HdError { c, p } => serde_json::to_value(hd_bayes_error_bound(c, p)?)?,
        BoundCommand::DirectionProb { gamma, c, p, tau } => {
            let report = match tau {
                Some(tau) => spherical_direction_prob(gamma, c, p, tau)?,
                None => optimize_tau(|tau| spherical_direction_prob(gamma, c, p, tau))?.1,
            };
            serde_json::to_value(report)?
        }
        BoundCommand::Projections {
            gamma,
            c,
            p,
            asymptotic,
        } => serde_json::to_value(expected_projections_spherical(
            gamma,
            c,
            if asymptotic { None } else { p },
        )?)?,
        BoundCommand::Kgmm {
            c_min,
            k,
            gamma_min,
            p,
            alpha,
        } => match (alpha, gamma_min, p) {
            (Some(alpha), _, _) => serde_json::to_value(kgmm_projection_bound(c_min, k, alpha)?)?,
            (None, Some(g), Some(p)) => serde_json::to_value(kgmm_failure_bound(g, c_min, k, p)?)?,
            _ => unreachable!("clap requires --gamma-min and --p without --alpha"),
        },
        BoundCommand::Rank {
            gamma,
            p,
            r,
            lambda_max_sum,
            mean_gap_sq,
            tau1,
            tau2,
            full,
            asymptotic,
            eta,
        } => {
            let geom = NonsphericalGeometry {
                p,
                r,
                lambda_max_sum,
                mean_gap_sq,
            };
            let mode = match (full, tau1, tau2) {
                (true, _, _) => RankMode::Full,
                (false, Some(tau1), Some(tau2)) => RankMode::RankR { tau1, tau2 },
                _ => {
                    let (tau1, tau2, _) = optimize_rank_params(&geom, gamma)?;
                    RankMode::RankR { tau1, tau2 }
                }
            };
            let count =
                expected_projections_nonspherical_geometry(&geom, gamma, mode, asymptotic, eta)?;
            let (tau, prob) =
                optimize_tau(|tau| nonspherical_direction_prob_geometry(&geom, gamma, tau, mode))?;
            json!({ "count": count, "direction_prob": prob, "tau": tau, "mode": mode })
        }
        BoundCommand::SampleSize {
            eps,
            delta,
            gamma_min,
        } => json!({
            "value": sample_size_required(eps, delta, gamma_min)?,
            "kind": "count_upper",
            "inputs": { "epsilon": eps, "delta": delta, "gamma_min": gamma_min },
        }),
        BoundCommand::ErrorGap {
            gamma,
            gamma_max,
            w_min,
            eps,
        } => serde_json::to_value(error_gap_bound(gamma, gamma_max, w_min, eps)?)?,
        BoundCommand::BayesLower { w, gamma } => {
            serde_json::to_value(bayes_error_lower_bound(w, gamma)?)?
        }
        BoundCommand::Regime { gamma, c, p, eta } => {
            serde_json::to_value(sublog_regime_check(gamma, c, p, eta)?)?
        }
    };
    print_json(&value)?;
    Ok(ExitCode::SUCCESS)
}

fn experiment(args: ExperimentArgs) -> Result<ExitCode, Error> {
    let d = ExperimentConfig::defaults(args.name);
    let cfg = ExperimentConfig {
        p: args.p.unwrap_or(d.p),
        n: args.n.unwrap_or(d.n),
        c: args.c.unwrap_or(d.c),
        error: args.error.unwrap_or(d.error),
        budget: args.budget.unwrap_or(d.budget),
        repeats: args.repeats.unwrap_or(d.repeats),
        seed: args.seed.unwrap_or(d.seed),
        zeta: args.zeta.unwrap_or(d.zeta),
        directions: args.directions.unwrap_or(d.directions),
        learner: args.learner.unwrap_or(d.learner),
        ..d
    };
    match &args.out {
        Some(path) => run_experiment(args.name, &cfg, BufWriter::new(File::create(path)?))?,
        None => run_experiment(args.name, &cfg, io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn init_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|t| *t >= 1).ok_or_else(|| {
        Error::Domain(format!(
            "{THREADS_ENV} must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Domain(e.to_string()))
}

fn main() -> ExitCode {
    let mut command = Cli::command();
    command = command.mut_subcommand("experiment", |sc| sc.after_help(experiment_help()));
    let cli = match command
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = init_threads().and_then(|()| match cli.command {
        Command::Gen(args) => gen(args),
        Command::Cluster(args) => cluster(args),
        Command::Bounds { bound } => bounds(bound),
        Command::Experiment(args) => experiment(args),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
