//! Clustering by scanning random 1-D projections.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::expected_projections_spherical;
use crate::error::{domain, Error, Result};
use crate::learner1d::{self, bayes_error, bayes_thresholds, DecisionRule, Method};
use crate::mathkit::{q_inverse, RngStream};
use crate::model::{Boundary1D, ClusterOutcome, Dataset, Mixture1D, Orientation};
use crate::projection::{dot, norm, project, sample_direction, separability_1d};

/// Safety factor on `ceil(ln p)` for the default budget when the shape of
/// the mixture is unknown.
pub const BUDGET_SAFETY: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub target_error: f64,
    pub budget: usize,
    pub learner: Method,
    pub seed: u64,
    /// Directions evaluated concurrently per batch.
    pub parallel_batch: usize,
    pub estimate_c: bool,
}

impl ClusterConfig {
    pub fn new(target_error: f64, budget: usize) -> Self {
        Self {
            target_error,
            budget,
            learner: Method::MomEm,
            seed: 0,
            parallel_batch: rayon::current_num_threads().max(1),
            estimate_c: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_error > 0.0 && self.target_error < 0.5) {
            return domain(format!("requires 0 < e < 0.5, got {}", self.target_error));
        }
        if self.budget == 0 {
            return domain("requires a projection budget M >= 1");
        }
        if self.parallel_batch == 0 {
            return domain("requires parallel_batch >= 1");
        }
        Ok(())
    }
}

/// Everything learned from one random direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionTrial {
    /// Zero-based direction index; the direction comes from stream `index`.
    pub index: usize,
    pub boundary: Boundary1D,
    pub fitted: Mixture1D,
    pub estimated_error: f64,
    pub gamma_hat: f64,
    /// Clustering error against the dataset's labels, when it has them.
    pub true_error: Option<f64>,
}

fn no_separator(values: &[f64]) -> DecisionRule {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    DecisionRule {
        thresholds: vec![mean],
        orientation: Orientation::FirstOnLeft,
    }
}

/// Project onto direction `index`, fit, and score the plug-in Bayes rule.
///
/// Fits that collapse to one component, or whose weighted densities never
/// cross, carry no separator: they get `e_hat = 0.5` and a threshold at the
/// projected mean.
pub fn evaluate_direction(
    data: &Dataset,
    seed: u64,
    index: usize,
    learner: Method,
) -> Result<ProjectionTrial> {
    let mut direction = sample_direction(data.p, &RngStream::new(seed, index as u64))?;
    let a_norm = norm(&direction);
    direction.iter_mut().for_each(|x| *x /= a_norm);
    let values = project(data, &direction)?.values;
    let fit = learner1d::fit(&values, learner)?;
    let fitted = fit.fitted;
    let (rule, estimated_error) = match bayes_thresholds(&fitted) {
        Ok(rule) if !fit.single_component && !rule.thresholds.is_empty() => {
            let e = bayes_error(&fitted);
            (rule, e)
        }
        _ => (no_separator(&values), 0.5),
    };
    let true_error = match &data.labels {
        Some(labels) => {
            let predicted: Vec<usize> = values.iter().map(|v| rule.label_of(*v)).collect();
            Some(clustering_error(&predicted, labels)?)
        }
        None => None,
    };
    Ok(ProjectionTrial {
        index,
        boundary: Boundary1D {
            direction,
            thresholds: rule.thresholds,
            orientation: rule.orientation,
        },
        fitted,
        estimated_error,
        gamma_hat: separability_1d(&fitted),
        true_error,
    })
}

fn evaluate_batch(
    data: &Dataset,
    cfg: &ClusterConfig,
    range: std::ops::Range<usize>,
) -> Result<Vec<ProjectionTrial>> {
    range
        .into_par_iter()
        .map(|i| evaluate_direction(data, cfg.seed, i, cfg.learner))
        .collect()
}

/// Evaluate all `cfg.budget` directions without stopping early.
pub fn scan_projections(data: &Dataset, cfg: &ClusterConfig) -> Result<Vec<ProjectionTrial>> {
    cfg.validate()?;
    if data.n == 0 {
        return domain("dataset is empty");
    }
    let mut out = Vec::with_capacity(cfg.budget);
    let mut start = 0;
    while start < cfg.budget {
        let end = (start + cfg.parallel_batch).min(cfg.budget);
        out.extend(evaluate_batch(data, cfg, start..end)?);
        start = end;
    }
    Ok(out)
}

fn outcome_from(
    trial: &ProjectionTrial,
    used: usize,
    c_hat: Option<f64>,
    achieved: bool,
) -> ClusterOutcome {
    ClusterOutcome {
        boundary: trial.boundary.clone(),
        fitted: trial.fitted,
        estimated_error: trial.estimated_error,
        gamma_hat: trial.gamma_hat,
        projections_used: used,
        c_hat,
        achieved,
    }
}

/// Scan random directions until the plug-in error drops below
/// `cfg.target_error`.
///
/// Directions are evaluated in batches of `cfg.parallel_batch` but accepted
/// in index order, so the result does not depend on the batch size. When
/// the budget runs out, the direction with the lowest estimated error
/// (lowest index on ties) is returned with `achieved = false`.
pub fn cluster_gmm(data: &Dataset, cfg: &ClusterConfig) -> Result<ClusterOutcome> {
    cfg.validate()?;
    if data.n == 0 {
        return domain("dataset is empty");
    }
    let mut gammas = Vec::with_capacity(cfg.budget);
    let mut best: Option<ProjectionTrial> = None;
    let mut start = 0;
    while start < cfg.budget {
        let end = (start + cfg.parallel_batch).min(cfg.budget);
        for trial in evaluate_batch(data, cfg, start..end)? {
            gammas.push(trial.gamma_hat);
            let c_hat = if cfg.estimate_c {
                Some(estimate_c_hat(&gammas)?)
            } else {
                None
            };
            if trial.estimated_error < cfg.target_error {
                return Ok(outcome_from(&trial, trial.index + 1, c_hat, true));
            }
            if best
                .as_ref()
                .is_none_or(|b| trial.estimated_error < b.estimated_error)
            {
                best = Some(trial);
            }
        }
        start = end;
    }
    let c_hat = if cfg.estimate_c {
        Some(estimate_c_hat(&gammas)?)
    } else {
        None
    };
    let best = best.expect("budget >= 1");
    Ok(outcome_from(&best, cfg.budget, c_hat, false))
}

/// `sqrt(mean(gamma_hat^2))`.
pub fn estimate_c_hat(gamma_hats: &[f64]) -> Result<f64> {
    if gamma_hats.is_empty() {
        return domain("estimate_c_hat needs at least one value");
    }
    Ok((gamma_hats.iter().map(|g| g * g).sum::<f64>() / gamma_hats.len() as f64).sqrt())
}

/// Default projection budget: `3 ceil(ln p)` when the shape is unknown, or
/// twice the finite-`p` spherical count bound at `gamma = Q^{-1}(e)` when the
/// mixture is known to be spherical and `c_hat` is available.
pub fn projections_budget_default(
    p: usize,
    spherical_known: bool,
    e: f64,
    c_hat: Option<f64>,
) -> Result<usize> {
    if p < 2 {
        return domain(format!("requires p >= 2, got {p}"));
    }
    let unknown = BUDGET_SAFETY * (p as f64).ln().ceil() as usize;
    match (spherical_known, c_hat) {
        (true, Some(c)) if c > 0.0 => {
            if !(e > 0.0 && e < 1.0) {
                return domain(format!("requires 0 < e < 1, got {e}"));
            }
            let gamma = q_inverse(e)?.max(0.0);
            let d = expected_projections_spherical(gamma, c, Some(p))?;
            if d.value.is_finite() {
                Ok((2.0 * d.value).ceil() as usize)
            } else {
                Ok(unknown)
            }
        }
        _ => Ok(unknown),
    }
}

/// Label every point by the boundary's interval rule.
pub fn classify(data: &Dataset, boundary: &Boundary1D) -> Result<Vec<usize>> {
    if boundary.direction.len() != data.p {
        return Err(Error::DimensionMismatch {
            expected: data.p,
            got: boundary.direction.len(),
        });
    }
    Ok((0..data.n)
        .map(|j| boundary.label_of(dot(data.points.row(j), &boundary.direction)))
        .collect())
}

/// Fraction of mismatched labels, minimized over the two labelings.
pub fn clustering_error(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return domain("clustering_error needs at least one label");
    }
    if predicted.iter().chain(truth).any(|l| *l > 1) {
        return domain("clustering_error expects labels 0 and 1");
    }
    let wrong = predicted.iter().zip(truth).filter(|(a, b)| a != b).count();
    let n = predicted.len();
    Ok(wrong.min(n - wrong) as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{make_spherical_spec, sample_dataset};
    use crate::model::{Matrix, Provenance};
    use rand::Rng;

    fn labelled(points: Vec<f64>, p: usize) -> Dataset {
        let n = points.len() / p;
        Dataset::new(
            Matrix::from_row_major(n, p, points).unwrap(),
            None,
            Provenance {
                seed: 0,
                generator: "test".into(),
                k: 2,
            },
        )
        .unwrap()
    }

    #[test]
    fn c_hat_examples() {
        assert_eq!(estimate_c_hat(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!((estimate_c_hat(&[0.0, 2.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(estimate_c_hat(&[]).is_err());
    }

    #[test]
    fn budget_examples() {
        assert_eq!(
            projections_budget_default(10_000, false, 0.1, None).unwrap(),
            30
        );
        let m = projections_budget_default(10_000, true, 0.0681, Some(1.0)).unwrap();
        assert!(m <= 19, "{m}");
        assert!(projections_budget_default(10_000, true, 0.4999, Some(1.0)).unwrap() <= 3);
        assert!(projections_budget_default(1, false, 0.1, None).is_err());
    }

    #[test]
    fn clustering_error_examples() {
        let truth = vec![0, 1, 1, 0, 1];
        assert_eq!(clustering_error(&truth, &truth).unwrap(), 0.0);
        let flipped: Vec<usize> = truth.iter().map(|l| 1 - l).collect();
        assert_eq!(clustering_error(&flipped, &truth).unwrap(), 0.0);
        assert!(clustering_error(&truth[..3], &truth).is_err());
        let mut rng = RngStream::new(4, 0).rng();
        let n = 10_000;
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let e = clustering_error(&a, &b).unwrap();
        assert!((e - 0.5).abs() <= 0.02, "{e}");
    }

    #[test]
    fn classify_examples() {
        let data = labelled(vec![-1.0, 0.0, 1.0, 0.5, 3.0], 1);
        let single = Boundary1D {
            direction: vec![1.0],
            thresholds: vec![0.0],
            orientation: Orientation::FirstOnLeft,
        };
        assert_eq!(classify(&data, &single).unwrap(), vec![0, 1, 1, 1, 1]);
        let double = Boundary1D {
            direction: vec![1.0],
            thresholds: vec![0.2, 2.0],
            orientation: Orientation::SecondOnLeft,
        };
        assert_eq!(classify(&data, &double).unwrap(), vec![1, 1, 0, 0, 1]);
        assert!(classify(
            &data,
            &Boundary1D {
                direction: vec![1.0, 0.0],
                ..single
            }
        )
        .is_err());
    }

    #[test]
    fn winner_does_not_depend_on_batch_size() {
        let spec = make_spherical_spec(20, 1.0, 1.0, 0.5).unwrap();
        let data = sample_dataset(&spec, 2000, &RngStream::new(1, 0)).unwrap();
        let mut cfg = ClusterConfig::new(0.05, 12);
        cfg.seed = 77;
        let outcomes: Vec<_> = [1, 3, 12]
            .iter()
            .map(|b| {
                cfg.parallel_batch = *b;
                serde_json::to_string(&cluster_gmm(&data, &cfg).unwrap()).unwrap()
            })
            .collect();
        assert_eq!(outcomes[0], outcomes[1]);
        assert_eq!(outcomes[0], outcomes[2]);
    }

    #[test]
    fn near_vacuous_target_succeeds_first() {
        // projections that look Gaussian report e_hat = 0.5, so the first
        // direction must show some separation
        let spec = make_spherical_spec(10, 3.0, 1.0, 0.5).unwrap();
        let data = sample_dataset(&spec, 2000, &RngStream::new(2, 0)).unwrap();
        let out = cluster_gmm(&data, &ClusterConfig::new(0.4999, 5)).unwrap();
        assert!(out.achieved);
        assert_eq!(out.projections_used, 1);
    }

    #[test]
    fn infeasible_target_exhausts_budget() {
        let spec = make_spherical_spec(100, 0.1, 1.0, 0.5).unwrap();
        let data = sample_dataset(&spec, 5000, &RngStream::new(3, 0)).unwrap();
        let out = cluster_gmm(&data, &ClusterConfig::new(0.01, 10)).unwrap();
        assert!(!out.achieved);
        assert_eq!(out.projections_used, 10);
        assert!(out.estimated_error <= 0.5);
    }

    #[test]
    fn config_validation() {
        let data = labelled(vec![0.0; 32], 2);
        assert!(cluster_gmm(&data, &ClusterConfig::new(0.5, 5)).is_err());
        assert!(cluster_gmm(&data, &ClusterConfig::new(0.1, 0)).is_err());
    }
}
