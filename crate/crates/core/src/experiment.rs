//! Monte Carlo experiments that emit one CSV table each.
//!
//! Every row carries the master seed and repetition index. Repetition
//! `rep` of parameter cell `cell` draws its data from stream
//! `(seed, cell << 32 | rep)` and its directions from a seed derived from
//! the same pair, so reruns are byte-identical.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    expected_projections_nonspherical_geometry, expected_projections_spherical,
    hd_bayes_error_bound, optimize_tau, spherical_direction_prob, NonsphericalGeometry, RankMode,
};
use crate::clusterer::{evaluate_direction, ClusterConfig, ProjectionTrial};
use crate::datagen::{make_rank_spec, make_spherical_spec, sample_dataset};
use crate::error::{domain, Error, Result};
use crate::learner1d::Method;
use crate::mathkit::{q, q_inverse, splitmix64, RngStream};
use crate::model::{Dataset, MixtureSpec};
use crate::projection::{projected_mixture, sample_direction, separability_1d};

/// Free parameters of the rank bound reported by the rank experiments.
pub const RANK_TAU1: f64 = 0.2;
pub const RANK_TAU2: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    AccVsSep,
    ProjVsSep,
    ErrVsProj,
    RankAcc,
    RankProj,
    GammaCdf,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::AccVsSep,
        ExperimentKind::ProjVsSep,
        ExperimentKind::ErrVsProj,
        ExperimentKind::RankAcc,
        ExperimentKind::RankProj,
        ExperimentKind::GammaCdf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::AccVsSep => "acc-vs-sep",
            ExperimentKind::ProjVsSep => "proj-vs-sep",
            ExperimentKind::ErrVsProj => "err-vs-proj",
            ExperimentKind::RankAcc => "rank-acc",
            ExperimentKind::RankProj => "rank-proj",
            ExperimentKind::GammaCdf => "gamma-cdf",
        }
    }

    /// One-line description of the table and its columns.
    pub fn columns(self) -> &'static str {
        match self {
            ExperimentKind::AccVsSep => {
                "clustering error of the best of --budget directions per (p, c). Columns: seed, rep, p, c, n, \
                 budget, estimated_error, true_error, gamma_hat, c_hat, hd_error_bound = Q(c sqrt(p)/2), \
                 one_d_error_bound = Q(c)"
            }
            ExperimentKind::ProjVsSep => {
                "directions scanned until both estimated and true error are below --error. Columns: seed, rep, \
                 p, c, n, error, budget, projections, censored, estimated_error, true_error, bound_finite_p, \
                 bound_asymptotic"
            }
            ExperimentKind::ErrVsProj => {
                "running minimum over the first i directions. Columns: seed, rep, p, c, n, projection, \
                 estimated_error, true_error, min_estimated_error, selected_true_error, min_true_error, \
                 hd_error_bound"
            }
            ExperimentKind::RankAcc => {
                "clustering error of the best of --budget directions per zeta. Columns: seed, rep, p, zeta, r, \
                 r_over_p, c, n, budget, estimated_error, true_error, gamma_hat, hd_error_bound"
            }
            ExperimentKind::RankProj => {
                "directions scanned until both errors are below --error per zeta. Columns: seed, rep, p, zeta, \
                 r, r_over_p, c, n, error, budget, projections, censored, bound_rank (tau1 = 0.2, tau2 = 0.5), \
                 bound_full_rank"
            }
            ExperimentKind::GammaCdf => {
                "empirical CDF of the exact projected separability over --directions directions. Columns: seed, \
                 p, c, directions, gamma, empirical_cdf, empirical_tail, tail_lower_bound"
            }
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown experiment '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub p: Vec<usize>,
    pub n: usize,
    pub c: Vec<f64>,
    pub error: f64,
    pub budget: usize,
    pub repeats: usize,
    pub seed: u64,
    pub zeta: Vec<f64>,
    pub directions: usize,
    pub learner: Method,
    pub sigma: f64,
    pub w: f64,
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            p: vec![100],
            n: 10_000,
            c: vec![1.0],
            error: 0.2,
            budget: 50,
            repeats: 10,
            seed: 1,
            zeta: vec![1.0 / 30.0, 0.1, 1.0],
            directions: 100_000,
            learner: Method::MomEm,
            sigma: 1.0,
            w: 0.5,
        };
        match kind {
            ExperimentKind::AccVsSep => Self {
                p: vec![3, 100],
                c: vec![0.5, 1.0, 1.5, 2.0],
                ..base
            },
            ExperimentKind::ProjVsSep => Self {
                c: vec![0.6, 0.8, 1.0, 1.5],
                budget: 200,
                repeats: 30,
                ..base
            },
            ExperimentKind::ErrVsProj => Self {
                c: vec![2.0],
                ..base
            },
            ExperimentKind::RankAcc => Self {
                p: vec![200],
                n: 5000,
                c: vec![0.5],
                error: 0.04,
                repeats: 20,
                ..base
            },
            ExperimentKind::RankProj => Self {
                p: vec![200],
                n: 5000,
                c: vec![0.5],
                error: 0.04,
                budget: 200,
                repeats: 20,
                ..base
            },
            ExperimentKind::GammaCdf => Self {
                p: vec![1000],
                repeats: 1,
                ..base
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.c.is_empty() {
            return domain("experiment needs at least one p and one c");
        }
        if self.repeats == 0 || self.budget == 0 || self.n == 0 {
            return domain("repeats, budget and n must be >= 1");
        }
        if !(self.error > 0.0 && self.error < 0.5) {
            return domain(format!("requires 0 < error < 0.5, got {}", self.error));
        }
        Ok(())
    }
}

/// Data stream and direction seed for repetition `rep` of cell `cell`.
pub fn rep_streams(seed: u64, cell: usize, rep: usize) -> (RngStream, u64) {
    let index = ((cell as u64) << 32) | rep as u64;
    (
        RngStream::new(seed, index),
        splitmix64(seed ^ splitmix64(index)),
    )
}

fn cluster_cfg(cfg: &ExperimentConfig, direction_seed: u64, error: f64) -> ClusterConfig {
    ClusterConfig {
        seed: direction_seed,
        learner: cfg.learner,
        ..ClusterConfig::new(error, cfg.budget)
    }
}

/// Evaluate directions in order until `stop` accepts one or the budget is
/// spent. Returns every evaluated trial.
pub fn scan_until<F>(data: &Dataset, cc: &ClusterConfig, stop: F) -> Result<Vec<ProjectionTrial>>
where
    F: Fn(&ProjectionTrial) -> bool,
{
    let mut out = Vec::new();
    let mut start = 0;
    while start < cc.budget {
        let end = (start + cc.parallel_batch).min(cc.budget);
        let batch: Vec<ProjectionTrial> = (start..end)
            .into_par_iter()
            .map(|i| evaluate_direction(data, cc.seed, i, cc.learner))
            .collect::<Result<_>>()?;
        for t in batch {
            let done = stop(&t);
            out.push(t);
            if done {
                return Ok(out);
            }
        }
        start = end;
    }
    Ok(out)
}

fn best_estimated(trials: &[ProjectionTrial]) -> &ProjectionTrial {
    let mut best = &trials[0];
    for t in &trials[1..] {
        if t.estimated_error < best.estimated_error {
            best = t;
        }
    }
    best
}

fn c_hat_of(trials: &[ProjectionTrial]) -> f64 {
    (trials
        .iter()
        .map(|t| t.gamma_hat * t.gamma_hat)
        .sum::<f64>()
        / trials.len() as f64)
        .sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccRow {
    pub seed: u64,
    pub rep: usize,
    pub p: usize,
    pub c: f64,
    pub n: usize,
    pub budget: usize,
    pub estimated_error: f64,
    pub true_error: f64,
    pub gamma_hat: f64,
    pub c_hat: f64,
    pub hd_error_bound: f64,
    pub one_d_error_bound: f64,
}

pub fn acc_vs_sep(cfg: &ExperimentConfig) -> Result<Vec<AccRow>> {
    cfg.validate()?;
    let cells: Vec<(usize, f64)> = cfg
        .p
        .iter()
        .flat_map(|&p| cfg.c.iter().map(move |&c| (p, c)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|i| (0..cfg.repeats).map(move |r| (i, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(cell, rep)| {
            let (p, c) = cells[cell];
            let (data_stream, dir_seed) = rep_streams(cfg.seed, cell, rep);
            let spec = make_spherical_spec(p, c, cfg.sigma, cfg.w)?;
            let data = sample_dataset(&spec, cfg.n, &data_stream)?;
            let trials = scan_until(&data, &cluster_cfg(cfg, dir_seed, cfg.error), |_| false)?;
            let best = best_estimated(&trials);
            Ok(AccRow {
                seed: cfg.seed,
                rep,
                p,
                c,
                n: cfg.n,
                budget: cfg.budget,
                estimated_error: best.estimated_error,
                true_error: best.true_error.expect("generated data is labelled"),
                gamma_hat: best.gamma_hat,
                c_hat: c_hat_of(&trials),
                hd_error_bound: hd_bayes_error_bound(c, p)?.value,
                one_d_error_bound: q(c),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjRow {
    pub seed: u64,
    pub rep: usize,
    pub p: usize,
    pub c: f64,
    pub n: usize,
    pub error: f64,
    pub budget: usize,
    pub projections: usize,
    pub censored: bool,
    pub estimated_error: f64,
    pub true_error: f64,
    pub bound_finite_p: f64,
    pub bound_asymptotic: f64,
}

fn both_below(e: f64) -> impl Fn(&ProjectionTrial) -> bool {
    move |t| t.estimated_error < e && t.true_error.is_some_and(|x| x < e)
}

pub fn proj_vs_sep(cfg: &ExperimentConfig) -> Result<Vec<ProjRow>> {
    cfg.validate()?;
    let gamma = q_inverse(cfg.error)?;
    let cells: Vec<(usize, f64)> = cfg
        .p
        .iter()
        .flat_map(|&p| cfg.c.iter().map(move |&c| (p, c)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|i| (0..cfg.repeats).map(move |r| (i, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(cell, rep)| {
            let (p, c) = cells[cell];
            let (data_stream, dir_seed) = rep_streams(cfg.seed, cell, rep);
            let spec = make_spherical_spec(p, c, cfg.sigma, cfg.w)?;
            let data = sample_dataset(&spec, cfg.n, &data_stream)?;
            let trials = scan_until(
                &data,
                &cluster_cfg(cfg, dir_seed, cfg.error),
                both_below(cfg.error),
            )?;
            let last = trials.last().expect("budget >= 1");
            let censored = !both_below(cfg.error)(last);
            Ok(ProjRow {
                seed: cfg.seed,
                rep,
                p,
                c,
                n: cfg.n,
                error: cfg.error,
                budget: cfg.budget,
                projections: trials.len(),
                censored,
                estimated_error: last.estimated_error,
                true_error: last.true_error.expect("generated data is labelled"),
                bound_finite_p: expected_projections_spherical(gamma, c, Some(p))?.value,
                bound_asymptotic: expected_projections_spherical(gamma, c, None)?.value,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrRow {
    pub seed: u64,
    pub rep: usize,
    pub p: usize,
    pub c: f64,
    pub n: usize,
    pub projection: usize,
    pub estimated_error: f64,
    pub true_error: f64,
    pub min_estimated_error: f64,
    pub selected_true_error: f64,
    pub min_true_error: f64,
    pub hd_error_bound: f64,
}

pub fn err_vs_proj(cfg: &ExperimentConfig) -> Result<Vec<ErrRow>> {
    cfg.validate()?;
    let cells: Vec<(usize, f64)> = cfg
        .p
        .iter()
        .flat_map(|&p| cfg.c.iter().map(move |&c| (p, c)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|i| (0..cfg.repeats).map(move |r| (i, r)))
        .collect();
    let per_job: Vec<Vec<ErrRow>> = jobs
        .into_par_iter()
        .map(|(cell, rep)| {
            let (p, c) = cells[cell];
            let (data_stream, dir_seed) = rep_streams(cfg.seed, cell, rep);
            let spec = make_spherical_spec(p, c, cfg.sigma, cfg.w)?;
            let data = sample_dataset(&spec, cfg.n, &data_stream)?;
            let trials = scan_until(&data, &cluster_cfg(cfg, dir_seed, cfg.error), |_| false)?;
            let bound = hd_bayes_error_bound(c, p)?.value;
            let mut rows = Vec::with_capacity(trials.len());
            let (mut min_est, mut selected, mut min_true) =
                (f64::INFINITY, f64::NAN, f64::INFINITY);
            for (i, t) in trials.iter().enumerate() {
                let te = t.true_error.expect("generated data is labelled");
                if t.estimated_error < min_est {
                    min_est = t.estimated_error;
                    selected = te;
                }
                min_true = min_true.min(te);
                rows.push(ErrRow {
                    seed: cfg.seed,
                    rep,
                    p,
                    c,
                    n: cfg.n,
                    projection: i + 1,
                    estimated_error: t.estimated_error,
                    true_error: te,
                    min_estimated_error: min_est,
                    selected_true_error: selected,
                    min_true_error: min_true,
                    hd_error_bound: bound,
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

fn rank_cells(cfg: &ExperimentConfig) -> Vec<(usize, f64, f64)> {
    cfg.p
        .iter()
        .flat_map(|&p| {
            cfg.c
                .iter()
                .flat_map(move |&c| cfg.zeta.iter().map(move |&z| (p, c, z)))
        })
        .collect()
}

/// The rank spec of a cell is drawn once from the cell's repetition-0
/// stream offset by `u32::MAX`, so every repetition shares one geometry.
fn rank_spec_for(
    cfg: &ExperimentConfig,
    cell: usize,
    p: usize,
    c: f64,
    zeta: f64,
) -> Result<(MixtureSpec, usize)> {
    let (stream, _) = rep_streams(cfg.seed, cell, u32::MAX as usize);
    let rs = make_rank_spec(p, c, zeta, &stream)?;
    Ok((rs.spec, rs.r))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankAccRow {
    pub seed: u64,
    pub rep: usize,
    pub p: usize,
    pub zeta: f64,
    pub r: usize,
    pub r_over_p: f64,
    pub c: f64,
    pub n: usize,
    pub budget: usize,
    pub estimated_error: f64,
    pub true_error: f64,
    pub gamma_hat: f64,
    pub hd_error_bound: f64,
}

pub fn rank_acc(cfg: &ExperimentConfig) -> Result<Vec<RankAccRow>> {
    cfg.validate()?;
    let cells = rank_cells(cfg);
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|i| (0..cfg.repeats).map(move |r| (i, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(cell, rep)| {
            let (p, c, zeta) = cells[cell];
            let (spec, r) = rank_spec_for(cfg, cell, p, c, zeta)?;
            let (data_stream, dir_seed) = rep_streams(cfg.seed, cell, rep);
            let data = sample_dataset(&spec, cfg.n, &data_stream)?;
            let trials = scan_until(&data, &cluster_cfg(cfg, dir_seed, cfg.error), |_| false)?;
            let best = best_estimated(&trials);
            Ok(RankAccRow {
                seed: cfg.seed,
                rep,
                p,
                zeta,
                r,
                r_over_p: r as f64 / p as f64,
                c,
                n: cfg.n,
                budget: cfg.budget,
                estimated_error: best.estimated_error,
                true_error: best.true_error.expect("generated data is labelled"),
                gamma_hat: best.gamma_hat,
                hd_error_bound: hd_bayes_error_bound(c, p)?.value,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankProjRow {
    pub seed: u64,
    pub rep: usize,
    pub p: usize,
    pub zeta: f64,
    pub r: usize,
    pub r_over_p: f64,
    pub c: f64,
    pub n: usize,
    pub error: f64,
    pub budget: usize,
    pub projections: usize,
    pub censored: bool,
    pub bound_rank: f64,
    pub bound_full_rank: f64,
}

pub fn rank_proj(cfg: &ExperimentConfig) -> Result<Vec<RankProjRow>> {
    cfg.validate()?;
    let gamma = q_inverse(cfg.error)?;
    let cells = rank_cells(cfg);
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|i| (0..cfg.repeats).map(move |r| (i, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(cell, rep)| {
            let (p, c, zeta) = cells[cell];
            let (spec, r) = rank_spec_for(cfg, cell, p, c, zeta)?;
            let geom = NonsphericalGeometry::from_spec(&spec)?;
            let (data_stream, dir_seed) = rep_streams(cfg.seed, cell, rep);
            let data = sample_dataset(&spec, cfg.n, &data_stream)?;
            let trials = scan_until(
                &data,
                &cluster_cfg(cfg, dir_seed, cfg.error),
                both_below(cfg.error),
            )?;
            let censored = !both_below(cfg.error)(trials.last().expect("budget >= 1"));
            let mode = RankMode::RankR {
                tau1: RANK_TAU1,
                tau2: RANK_TAU2,
            };
            Ok(RankProjRow {
                seed: cfg.seed,
                rep,
                p,
                zeta,
                r,
                r_over_p: r as f64 / p as f64,
                c,
                n: cfg.n,
                error: cfg.error,
                budget: cfg.budget,
                projections: trials.len(),
                censored,
                bound_rank: expected_projections_nonspherical_geometry(
                    &geom, gamma, mode, false, 0.0,
                )?
                .value,
                bound_full_rank: expected_projections_nonspherical_geometry(
                    &geom,
                    gamma,
                    RankMode::Full,
                    false,
                    0.0,
                )?
                .value,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdfRow {
    pub seed: u64,
    pub p: usize,
    pub c: f64,
    pub directions: usize,
    pub gamma: f64,
    pub empirical_cdf: f64,
    pub empirical_tail: f64,
    pub tail_lower_bound: f64,
}

/// Exact separability of `count` random directions for `spec`, direction
/// `i` drawn from stream `(seed, i)`.
pub fn direction_separabilities(spec: &MixtureSpec, seed: u64, count: usize) -> Result<Vec<f64>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let a = sample_direction(spec.p, &RngStream::new(seed, i as u64))?;
            Ok(separability_1d(&projected_mixture(spec, &a, 0, 1)?))
        })
        .collect()
}

/// Points of the `gamma` grid: 0 to `3c` in steps of `c / 20`.
const CDF_STEPS: usize = 60;

pub fn gamma_cdf(cfg: &ExperimentConfig) -> Result<Vec<CdfRow>> {
    cfg.validate()?;
    if cfg.directions == 0 {
        return domain("requires directions >= 1");
    }
    let mut rows = Vec::new();
    for (cell, (&p, &c)) in cfg
        .p
        .iter()
        .flat_map(|p| cfg.c.iter().map(move |c| (p, c)))
        .enumerate()
    {
        let spec = make_spherical_spec(p, c, cfg.sigma, cfg.w)?;
        let (_, dir_seed) = rep_streams(cfg.seed, cell, 0);
        let mut gammas = direction_separabilities(&spec, dir_seed, cfg.directions)?;
        gammas.sort_by(f64::total_cmp);
        for step in 0..=CDF_STEPS {
            let g = 3.0 * c * step as f64 / CDF_STEPS as f64;
            let below = gammas.partition_point(|x| *x <= g);
            let cdf = below as f64 / gammas.len() as f64;
            let bound = if p >= 2 && c > 0.0 {
                optimize_tau(|tau| spherical_direction_prob(g, c, p, tau))?
                    .1
                    .value
            } else {
                0.0
            };
            rows.push(CdfRow {
                seed: cfg.seed,
                p,
                c,
                directions: cfg.directions,
                gamma: g,
                empirical_cdf: cdf,
                empirical_tail: 1.0 - cdf,
                tail_lower_bound: bound,
            });
        }
    }
    Ok(rows)
}

/// Write serializable rows as CSV with a header line.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Run an experiment and write its table.
pub fn run_experiment<W: Write>(
    kind: ExperimentKind,
    cfg: &ExperimentConfig,
    out: W,
) -> Result<()> {
    match kind {
        ExperimentKind::AccVsSep => write_rows(&acc_vs_sep(cfg)?, out),
        ExperimentKind::ProjVsSep => write_rows(&proj_vs_sep(cfg)?, out),
        ExperimentKind::ErrVsProj => write_rows(&err_vs_proj(cfg)?, out),
        ExperimentKind::RankAcc => write_rows(&rank_acc(cfg)?, out),
        ExperimentKind::RankProj => write_rows(&rank_proj(cfg)?, out),
        ExperimentKind::GammaCdf => write_rows(&gamma_cdf(cfg)?, out),
    }
}
