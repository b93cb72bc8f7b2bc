//! Random Gaussian directions and 1-D projections.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mathkit::RngStream;
use crate::model::{Dataset, Mixture1D, MixtureSpec, SIGMA_FLOOR_REL};

/// Above this length dot products switch to compensated summation.
pub const COMPENSATED_DOT_MIN_LEN: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection1D {
    /// Unnormalized direction with i.i.d. standard normal coordinates.
    pub direction: Vec<f64>,
    pub values: Vec<f64>,
    pub direction_norm: f64,
}

/// `p` i.i.d. standard normal coordinates drawn from `stream`.
pub fn sample_direction(p: usize, stream: &RngStream) -> Result<Vec<f64>> {
    if p == 0 {
        return domain("sample_direction requires p >= 1");
    }
    let mut rng = stream.rng();
    Ok(StandardNormal.sample_iter(&mut rng).take(p).collect())
}

/// Dot product with eight independent partial sums, or Neumaier-compensated
/// summation for very long vectors.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() > COMPENSATED_DOT_MIN_LEN {
        return dot_compensated(a, b);
    }
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let x = &a[c * 8..c * 8 + 8];
        let y = &b[c * 8..c * 8 + 8];
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for k in chunks * 8..a.len() {
        tail += a[k] * b[k];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

fn dot_compensated(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let term = x * y;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Project every point onto `direction` (not normalized).
pub fn project(data: &Dataset, direction: &[f64]) -> Result<Projection1D> {
    if direction.len() != data.p {
        return Err(Error::DimensionMismatch {
            expected: data.p,
            got: direction.len(),
        });
    }
    let values = (0..data.n)
        .map(|j| dot(data.points.row(j), direction))
        .collect();
    Ok(Projection1D {
        direction: direction.to_vec(),
        values,
        direction_norm: norm(direction),
    })
}

/// Exact distribution of components `i` and `j` along `direction`, scaled
/// by `1/||a||`. The weight is renormalized over the pair.
pub fn projected_mixture(
    spec: &MixtureSpec,
    direction: &[f64],
    i: usize,
    j: usize,
) -> Result<Mixture1D> {
    if i == j || i >= spec.k || j >= spec.k {
        return domain(format!(
            "invalid component pair ({i}, {j}) for k = {}",
            spec.k
        ));
    }
    if direction.len() != spec.p {
        return Err(Error::DimensionMismatch {
            expected: spec.p,
            got: direction.len(),
        });
    }
    let a_norm = norm(direction);
    if !(a_norm > 0.0) {
        return domain("projection direction must be nonzero");
    }
    let mu1 = dot(&spec.means[i], direction) / a_norm;
    let mu2 = dot(&spec.means[j], direction) / a_norm;
    let var1 = spec.covs[i].quad_form(direction) / (a_norm * a_norm);
    let var2 = spec.covs[j].quad_form(direction) / (a_norm * a_norm);
    let floor = SIGMA_FLOOR_REL * mu1.abs().max(mu2.abs()).max(1.0);
    Ok(Mixture1D {
        mu1,
        mu2,
        sigma1: var1.max(0.0).sqrt().max(floor),
        sigma2: var2.max(0.0).sqrt().max(floor),
        w: spec.weights[i] / (spec.weights[i] + spec.weights[j]),
    })
}

/// `|mu1 - mu2| / (sigma1 + sigma2)`.
#[inline]
pub fn separability_1d(mix: &Mixture1D) -> f64 {
    (mix.mu1 - mix.mu2).abs() / (mix.sigma1 + mix.sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CovarianceSpec, Matrix, Provenance};

    fn tiny_dataset() -> Dataset {
        Dataset::new(
            Matrix::from_row_major(1, 2, vec![1.0, 2.0]).unwrap(),
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
    fn project_examples() {
        let d = tiny_dataset();
        assert_eq!(project(&d, &[1.0, 0.0]).unwrap().values, vec![1.0]);
        assert_eq!(project(&d, &[0.0, 1.0]).unwrap().values, vec![2.0]);
        assert!(project(&d, &[1.0]).is_err());
    }

    #[test]
    fn direction_is_reproducible() {
        let s = RngStream::new(42, 0);
        assert_eq!(
            sample_direction(3, &s).unwrap(),
            sample_direction(3, &s).unwrap()
        );
        assert_ne!(
            sample_direction(3, &s).unwrap(),
            sample_direction(3, &RngStream::new(42, 1)).unwrap()
        );
        assert!(sample_direction(0, &s).is_err());
    }

    #[test]
    fn direction_norm_concentrates() {
        let p = 10_000;
        let mean: f64 = (0..100)
            .map(|i| {
                let a = sample_direction(p, &RngStream::new(3, i)).unwrap();
                dot(&a, &a) / p as f64
            })
            .sum::<f64>()
            / 100.0;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn dot_matches_naive_and_compensated() {
        let a: Vec<f64> = (0..1003).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..1003).map(|i| (i as f64 * 0.11).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
        assert!((dot_compensated(&a, &b) - naive).abs() < 1e-12);
        // 1e16 + 1 - 1e16 is lost by naive summation
        assert_eq!(dot_compensated(&[1e16, 1.0, -1e16], &[1.0, 1.0, 1.0]), 1.0);
    }

    #[test]
    fn separability_examples() {
        let m = |a, b, s1, s2| Mixture1D {
            mu1: a,
            mu2: b,
            sigma1: s1,
            sigma2: s2,
            w: 0.5,
        };
        assert_eq!(separability_1d(&m(0.0, 2.0, 1.0, 1.0)), 1.0);
        assert_eq!(separability_1d(&m(5.0, 5.0, 0.3, 0.3)), 0.0);
        assert_eq!(separability_1d(&m(0.0, 3.0, 1.0, 2.0)), 1.0);
    }

    #[test]
    fn projected_mixture_examples() {
        let p = 25;
        let c: f64 = 0.7;
        let mut m2 = vec![0.0; p];
        m2[0] = 2.0 * c * (p as f64).sqrt();
        let spec = MixtureSpec::new(
            vec![vec![0.0; p], m2],
            vec![CovarianceSpec::spherical(1.0); 2],
            vec![0.3, 0.7],
        )
        .unwrap();
        let mut a = vec![0.0; p];
        a[0] = 2.5;
        let along = projected_mixture(&spec, &a, 0, 1).unwrap();
        assert!((separability_1d(&along) - c * (p as f64).sqrt()).abs() < 1e-12);
        assert!((along.sigma1 - 1.0).abs() < 1e-15);
        assert!((along.w - 0.3).abs() < 1e-15);
        let mut b = vec![0.0; p];
        b[3] = 1.0;
        let ortho = projected_mixture(&spec, &b, 0, 1).unwrap();
        assert_eq!(ortho.mu1, ortho.mu2);
        assert!(projected_mixture(&spec, &vec![0.0; p], 0, 1).is_err());
        assert!(projected_mixture(&spec, &a, 0, 0).is_err());
    }
}
