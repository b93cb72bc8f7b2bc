//! Synthetic mixtures with prescribed separability, and samplers.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mathkit::RngStream;
use crate::model::{CovarianceSpec, Dataset, Matrix, MixtureSpec, Provenance};

/// Rows generated per random substream.
pub const ROWS_PER_CHUNK: usize = 1024;

/// Coordinate distribution used by the samplers. Every shape has zero mean
/// and unit variance before scaling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Gaussian,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    Uniform,
    /// Laplace with scale `1/sqrt(2)`.
    Laplace,
    /// `+1` or `-1` with equal probability.
    Rademacher,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Gaussian => "gaussian",
            Shape::Uniform => "uniform",
            Shape::Laplace => "laplace",
            Shape::Rademacher => "rademacher",
        })
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Shape::Gaussian),
            "uniform" => Ok(Shape::Uniform),
            "laplace" => Ok(Shape::Laplace),
            "rademacher" => Ok(Shape::Rademacher),
            _ => domain(format!(
                "unknown shape '{s}' (expected gaussian, uniform, laplace or rademacher)"
            )),
        }
    }
}

impl Shape {
    #[inline]
    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Shape::Gaussian => StandardNormal.sample(rng),
            Shape::Uniform => (2.0 * rng.random::<f64>() - 1.0) * 3f64.sqrt(),
            Shape::Laplace => {
                let u: f64 = rng.random::<f64>() - 0.5;
                -std::f64::consts::FRAC_1_SQRT_2 * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            Shape::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// Two spherical components `N(0, sigma^2 I)` and `N(2 c sqrt(p) sigma e_1, sigma^2 I)`.
pub fn make_spherical_spec(p: usize, c: f64, sigma: f64, w: f64) -> Result<MixtureSpec> {
    if p == 0 {
        return domain("requires p >= 1");
    }
    if !(c >= 0.0 && c.is_finite()) {
        return domain(format!("requires c >= 0, got {c}"));
    }
    let mut m2 = vec![0.0; p];
    m2[0] = 2.0 * c * (p as f64).sqrt() * sigma;
    MixtureSpec::new(
        vec![vec![0.0; p], m2],
        vec![CovarianceSpec::spherical(sigma * sigma); 2],
        vec![w, 1.0 - w],
    )
}

/// `k` spherical components at `s e_i` with `s = c sigma sqrt(2p)`, so
/// every pair is exactly `c`-separable. Equal weights.
pub fn make_simplex_spec(p: usize, k: usize, c: f64, sigma: f64) -> Result<MixtureSpec> {
    if k < 2 || k > p {
        return domain(format!("requires 2 <= k <= p, got k = {k}, p = {p}"));
    }
    let s = c * sigma * (2.0 * p as f64).sqrt();
    let means = (0..k)
        .map(|i| {
            let mut m = vec![0.0; p];
            m[i] = s;
            m
        })
        .collect();
    MixtureSpec::new(
        means,
        vec![CovarianceSpec::spherical(sigma * sigma); k],
        vec![1.0 / k as f64; k],
    )
}

/// A rank-controlled two-component spec and the exact rank of `Sigma_1 + Sigma_2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSpec {
    pub spec: MixtureSpec,
    pub r: usize,
    /// Size of each populated block, `ceil(zeta p)`.
    pub block: usize,
    /// True when the per-component blocks could be drawn disjointly.
    pub disjoint: bool,
}

/// Low-rank construction with axis-aligned eigen covariances.
///
/// Both components get unit variance on a shared block of the first
/// `ceil(zeta p)` coordinates. Each then gets unit variance on its own
/// block of `ceil(zeta p)` coordinates drawn uniformly from the rest:
/// disjoint when the rest holds at least two blocks, otherwise drawn
/// independently. The means differ along coordinate 0 by `2 c sqrt(p)`.
pub fn make_rank_spec(p: usize, c: f64, zeta: f64, stream: &RngStream) -> Result<RankSpec> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return domain(format!("requires 0 < zeta <= 1, got {zeta}"));
    }
    if zeta * (p as f64) < 1.0 {
        return domain(format!("requires zeta p >= 1, got {}", zeta * p as f64));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return domain(format!("requires c >= 0, got {c}"));
    }
    let block = ((zeta * p as f64).ceil() as usize).min(p);
    let rest = p - block;
    let mut rng = stream.rng();
    let (own1, own2, disjoint) = if rest >= 2 * block {
        let picks = index::sample(&mut rng, rest, 2 * block).into_vec();
        (picks[..block].to_vec(), picks[block..].to_vec(), true)
    } else {
        let take = block.min(rest);
        let a = index::sample(&mut rng, rest, take).into_vec();
        let b = index::sample(&mut rng, rest, take).into_vec();
        (a, b, false)
    };
    let mut eig1 = vec![0.0; p];
    let mut eig2 = vec![0.0; p];
    for i in 0..block {
        eig1[i] = 1.0;
        eig2[i] = 1.0;
    }
    for &i in &own1 {
        eig1[block + i] = 1.0;
    }
    for &i in &own2 {
        eig2[block + i] = 1.0;
    }
    let r = eig1
        .iter()
        .zip(&eig2)
        .filter(|(a, b)| **a > 0.0 || **b > 0.0)
        .count();
    let mut m2 = vec![0.0; p];
    m2[0] = 2.0 * c * (p as f64).sqrt();
    let spec = MixtureSpec::new(
        vec![vec![0.0; p], m2],
        vec![
            CovarianceSpec::diagonal(eig1),
            CovarianceSpec::diagonal(eig2),
        ],
        vec![0.5, 0.5],
    )?;
    Ok(RankSpec {
        spec,
        r,
        block,
        disjoint,
    })
}

struct ComponentSampler {
    mean: Vec<f64>,
    scales: Vec<f64>,
    basis: Option<Matrix>,
}

impl ComponentSampler {
    fn fill<R: Rng + ?Sized>(&self, shape: Shape, rng: &mut R, z: &mut [f64], out: &mut [f64]) {
        for (zi, s) in z.iter_mut().zip(&self.scales) {
            *zi = s * shape.draw(rng);
        }
        match &self.basis {
            None => {
                for ((o, m), zi) in out.iter_mut().zip(&self.mean).zip(z.iter()) {
                    *o = m + zi;
                }
            }
            Some(b) => {
                for (r, (o, m)) in out.iter_mut().zip(&self.mean).enumerate() {
                    *o = m + b
                        .row(r)
                        .iter()
                        .zip(z.iter())
                        .map(|(x, y)| x * y)
                        .sum::<f64>();
                }
            }
        }
    }
}

fn sample_with_shape(
    spec: &MixtureSpec,
    n: usize,
    shape: Shape,
    stream: &RngStream,
) -> Result<Dataset> {
    spec.validate()?;
    if n == 0 {
        return domain("requires n >= 1");
    }
    let p = spec.p;
    let samplers: Vec<ComponentSampler> = spec
        .means
        .iter()
        .zip(&spec.covs)
        .map(|(m, cov)| {
            let (values, basis) = cov.eigen_decomposition(p);
            ComponentSampler {
                mean: m.clone(),
                scales: values.iter().map(|v| v.sqrt()).collect(),
                basis,
            }
        })
        .collect();
    let mut cumulative: Vec<f64> = spec
        .weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    *cumulative.last_mut().expect("k >= 2") = f64::INFINITY;

    let mut points = Matrix::zeros(n, p);
    let mut labels = vec![0usize; n];
    points
        .as_mut_slice()
        .par_chunks_mut(ROWS_PER_CHUNK * p)
        .zip(labels.par_chunks_mut(ROWS_PER_CHUNK))
        .enumerate()
        .for_each(|(chunk, (rows, labs))| {
            let mut rng = stream.substream(chunk as u64).rng();
            let mut z = vec![0.0; p];
            for (row, lab) in rows.chunks_mut(p).zip(labs.iter_mut()) {
                let u: f64 = rng.random();
                let k = cumulative
                    .iter()
                    .position(|c| u < *c)
                    .expect("last bound is infinite");
                *lab = k;
                samplers[k].fill(shape, &mut rng, &mut z, row);
            }
        });
    Dataset::new(
        points,
        Some(labels),
        Provenance {
            seed: stream.master_seed,
            generator: shape.to_string(),
            k: spec.k,
        },
    )
}

/// `n` labelled draws from a Gaussian mixture. Rows are generated in
/// chunks of [`ROWS_PER_CHUNK`], chunk `i` using substream `i`, so the
/// output does not depend on thread scheduling.
pub fn sample_dataset(spec: &MixtureSpec, n: usize, stream: &RngStream) -> Result<Dataset> {
    sample_with_shape(spec, n, Shape::Gaussian, stream)
}

/// Like [`sample_dataset`] but with coordinates of the given shape in the
/// eigenbasis, matching the spec's means and covariances exactly.
pub fn sample_nongaussian_dataset(
    spec: &MixtureSpec,
    shape: Shape,
    n: usize,
    stream: &RngStream,
) -> Result<Dataset> {
    if spec
        .covs
        .iter()
        .any(|c| matches!(c, CovarianceSpec::Full { .. }))
    {
        return Err(Error::Unsupported(format!(
            "{shape} coordinates need a spherical or eigen covariance, not a full matrix"
        )));
    }
    sample_with_shape(spec, n, shape, stream)
}
