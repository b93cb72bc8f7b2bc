//! Domain types shared by every module.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Above this dimension `lambda_max` of a dense covariance switches from a
/// full symmetric eigensolve to power iteration.
pub const EIGENSOLVER_MAX_DIM: usize = 512;
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;

/// Weights of fitted 1-D mixtures are clamped into `[W_FLOOR, 1 - W_FLOOR]`.
pub const W_FLOOR: f64 = 1e-4;
/// Fitted standard deviations are floored at `SIGMA_FLOOR_REL * scale`.
pub const SIGMA_FLOOR_REL: f64 = 1e-9;

/// Dense row-major matrix. Serializes as an array of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self^T * v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate().take(self.rows) {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * vr;
            }
        }
        out
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                out.set(r, c, m[(r, c)]);
            }
        }
        out
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = String;

    fn try_from(rows: Vec<Vec<f64>>) -> std::result::Result<Self, String> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err("ragged matrix rows".into());
        }
        let n = rows.len();
        Ok(Self {
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.data
            .chunks(m.cols.max(1))
            .map(<[f64]>::to_vec)
            .take(m.rows)
            .collect()
    }
}

/// Covariance of one mixture component.
///
/// The `eigen` form stores `Sigma = B diag(eigenvalues) B^T` with the
/// eigenvectors as the columns of `basis`; a missing basis means the
/// standard basis, which keeps axis-aligned low-rank covariances cheap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceSpec {
    Spherical {
        variance: f64,
    },
    Eigen {
        eigenvalues: Vec<f64>,
        #[serde(default)]
        basis: Option<Matrix>,
    },
    Full {
        matrix: Matrix,
    },
}

impl CovarianceSpec {
    pub fn spherical(variance: f64) -> Self {
        Self::Spherical { variance }
    }

    pub fn diagonal(eigenvalues: Vec<f64>) -> Self {
        Self::Eigen {
            eigenvalues,
            basis: None,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        match self {
            Self::Spherical { variance } => {
                if !(*variance > 0.0) || !variance.is_finite() {
                    return domain(format!("spherical variance must be > 0, got {variance}"));
                }
            }
            Self::Eigen { eigenvalues, basis } => {
                if eigenvalues.len() != p {
                    return Err(Error::DimensionMismatch {
                        expected: p,
                        got: eigenvalues.len(),
                    });
                }
                if let Some(v) = eigenvalues.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                    return domain(format!("eigenvalues must be finite and >= 0, found {v}"));
                }
                if let Some(b) = basis {
                    if b.rows() != p || b.cols() != p {
                        return Err(Error::DimensionMismatch {
                            expected: p,
                            got: b.rows(),
                        });
                    }
                    let gram = b.to_nalgebra().transpose() * b.to_nalgebra();
                    let dev = (gram - DMatrix::<f64>::identity(p, p)).amax();
                    if dev > 1e-9 {
                        return domain(format!(
                            "basis is not orthogonal (max |B^T B - I| = {dev:e})"
                        ));
                    }
                }
            }
            Self::Full { matrix } => {
                if matrix.rows() != p || matrix.cols() != p {
                    return Err(Error::DimensionMismatch {
                        expected: p,
                        got: matrix.rows(),
                    });
                }
                for r in 0..p {
                    for c in 0..r {
                        if (matrix.get(r, c) - matrix.get(c, r)).abs() > 1e-9 {
                            return domain(format!("covariance not symmetric at ({r},{c})"));
                        }
                    }
                }
                let eig = SymmetricEigen::new(matrix.to_nalgebra());
                let min = eig.eigenvalues.min();
                if min < -1e-9 {
                    return domain(format!("covariance not PSD (min eigenvalue {min:e})"));
                }
            }
        }
        Ok(())
    }

    /// `a^T Sigma a`.
    pub fn quad_form(&self, a: &[f64]) -> f64 {
        match self {
            Self::Spherical { variance } => variance * a.iter().map(|x| x * x).sum::<f64>(),
            Self::Eigen {
                eigenvalues,
                basis: None,
            } => eigenvalues.iter().zip(a).map(|(l, x)| l * x * x).sum(),
            Self::Eigen {
                eigenvalues,
                basis: Some(b),
            } => {
                let proj = b.tr_mul_vec(a);
                eigenvalues.iter().zip(&proj).map(|(l, x)| l * x * x).sum()
            }
            Self::Full { matrix } => {
                let sa = matrix.mul_vec(a);
                sa.iter().zip(a).map(|(x, y)| x * y).sum()
            }
        }
    }

    /// Eigenvalues and eigenvector basis (`None` = standard basis), used by
    /// samplers. Dense matrices are decomposed; negative round-off is
    /// clipped to zero.
    pub fn eigen_decomposition(&self, p: usize) -> (Vec<f64>, Option<Matrix>) {
        match self {
            Self::Spherical { variance } => (vec![*variance; p], None),
            Self::Eigen { eigenvalues, basis } => (eigenvalues.clone(), basis.clone()),
            Self::Full { matrix } => {
                let eig = SymmetricEigen::new(matrix.to_nalgebra());
                let values = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
                (values, Some(Matrix::from_nalgebra(&eig.eigenvectors)))
            }
        }
    }

    fn dense(&self, p: usize) -> Matrix {
        match self {
            Self::Full { matrix } => matrix.clone(),
            _ => {
                let (values, basis) = self.eigen_decomposition(p);
                let mut out = Matrix::zeros(p, p);
                match basis {
                    None => {
                        for (i, v) in values.iter().enumerate() {
                            out.set(i, i, *v);
                        }
                    }
                    Some(b) => {
                        for r in 0..p {
                            for c in 0..p {
                                let s: f64 =
                                    (0..p).map(|k| b.get(r, k) * values[k] * b.get(c, k)).sum();
                                out.set(r, c, s);
                            }
                        }
                    }
                }
                out
            }
        }
    }

    /// `Sigma_a + Sigma_b`, kept in the cheapest representation that is exact.
    pub fn sum(&self, other: &Self, p: usize) -> Self {
        use CovarianceSpec::*;
        match (self, other) {
            (Spherical { variance: a }, Spherical { variance: b }) => Spherical { variance: a + b },
            (Spherical { variance }, Eigen { eigenvalues, basis })
            | (Eigen { eigenvalues, basis }, Spherical { variance }) => Eigen {
                eigenvalues: eigenvalues.iter().map(|l| l + variance).collect(),
                basis: basis.clone(),
            },
            (
                Eigen {
                    eigenvalues: la,
                    basis: ba,
                },
                Eigen {
                    eigenvalues: lb,
                    basis: bb,
                },
            ) if ba == bb => Eigen {
                eigenvalues: la.iter().zip(lb).map(|(x, y)| x + y).collect(),
                basis: ba.clone(),
            },
            _ => {
                let a = self.dense(p);
                let b = other.dense(p);
                let data = a
                    .as_slice()
                    .iter()
                    .zip(b.as_slice())
                    .map(|(x, y)| x + y)
                    .collect();
                Full {
                    matrix: Matrix::from_row_major(p, p, data).expect("square"),
                }
            }
        }
    }

    /// Rank, counting eigenvalues above `1e-9 * lambda_max`.
    pub fn rank(&self, p: usize) -> usize {
        let values = match self {
            Self::Spherical { .. } => return p,
            Self::Eigen { eigenvalues, .. } => eigenvalues.clone(),
            Self::Full { matrix } => SymmetricEigen::new(matrix.to_nalgebra())
                .eigenvalues
                .as_slice()
                .to_vec(),
        };
        let max = values.iter().cloned().fold(0.0, f64::max);
        if max <= 0.0 {
            return 0;
        }
        values.iter().filter(|v| **v > 1e-9 * max).count()
    }
}

/// Largest eigenvalue of a covariance.
///
/// Exact for the spherical and eigen forms. Dense matrices use a symmetric
/// eigensolver up to [`EIGENSOLVER_MAX_DIM`] and power iteration above it.
pub fn lambda_max(cov: &CovarianceSpec) -> Result<f64> {
    match cov {
        CovarianceSpec::Spherical { variance } => Ok(*variance),
        CovarianceSpec::Eigen { eigenvalues, .. } => {
            Ok(eigenvalues.iter().cloned().fold(0.0, f64::max))
        }
        CovarianceSpec::Full { matrix } => {
            let p = matrix.rows();
            if p <= EIGENSOLVER_MAX_DIM {
                let eig = SymmetricEigen::new(matrix.to_nalgebra());
                Ok(eig.eigenvalues.max().max(0.0))
            } else {
                power_iteration(matrix)
            }
        }
    }
}

fn power_iteration(m: &Matrix) -> Result<f64> {
    let p = m.rows();
    let mut v: Vec<f64> = (0..p).map(|i| 1.0 + (i as f64 + 1.0) / p as f64).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut estimate = 0.0;
    for it in 0..POWER_MAX_ITER {
        let w = m.mul_vec(&v);
        let rayleigh: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w.into_iter().map(|x| x / norm).collect();
        if it > 0
            && (rayleigh - estimate).abs() <= POWER_TOL * rayleigh.abs().max(f64::MIN_POSITIVE)
        {
            return Ok(rayleigh);
        }
        estimate = rayleigh;
    }
    Err(Error::Numeric {
        iterations: POWER_MAX_ITER,
        message: "power iteration for lambda_max did not converge".into(),
    })
}

/// Ground-truth mixture in `R^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub p: usize,
    pub k: usize,
    pub means: Vec<Vec<f64>>,
    pub covs: Vec<CovarianceSpec>,
    pub weights: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(means: Vec<Vec<f64>>, covs: Vec<CovarianceSpec>, weights: Vec<f64>) -> Result<Self> {
        let p = means.first().map_or(0, Vec::len);
        let spec = Self {
            p,
            k: means.len(),
            means,
            covs,
            weights,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return domain("mixture dimension must be >= 1");
        }
        if self.k < 2 {
            return domain(format!("mixture needs k >= 2 components, got {}", self.k));
        }
        if self.means.len() != self.k || self.covs.len() != self.k || self.weights.len() != self.k {
            return domain("means, covs and weights must each have k entries");
        }
        for m in &self.means {
            if m.len() != self.p {
                return Err(Error::DimensionMismatch {
                    expected: self.p,
                    got: m.len(),
                });
            }
        }
        for c in &self.covs {
            c.validate(self.p)?;
        }
        if self.weights.iter().any(|w| !(*w > 0.0 && *w < 1.0)) {
            return domain("every weight must lie in (0, 1)");
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return domain(format!("weights sum to {total}, expected 1"));
        }
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        if i == j {
            return domain("component indices must differ");
        }
        if i >= self.k || j >= self.k {
            return domain(format!("component index out of range for k = {}", self.k));
        }
        Ok(())
    }

    /// `||m_i - m_j||`.
    pub fn mean_gap(&self, i: usize, j: usize) -> f64 {
        self.means[i]
            .iter()
            .zip(&self.means[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// High-dimensional separability
/// `||m_i - m_j|| / (sqrt(p) (sqrt(lmax_i) + sqrt(lmax_j)))`.
pub fn c_separability(spec: &MixtureSpec, i: usize, j: usize) -> Result<f64> {
    spec.check_pair(i, j)?;
    let li = lambda_max(&spec.covs[i])?;
    let lj = lambda_max(&spec.covs[j])?;
    let denom = (spec.p as f64).sqrt() * (li.sqrt() + lj.sqrt());
    if denom == 0.0 {
        return Err(Error::DegenerateMixture(
            "both covariances have zero largest eigenvalue".into(),
        ));
    }
    Ok(spec.mean_gap(i, j) / denom)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub generator: String,
    /// Number of generating components.
    pub k: usize,
}

/// `n` points in `R^p`, optionally labelled with their generating component.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub p: usize,
    pub points: Matrix,
    pub labels: Option<Vec<usize>>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(points: Matrix, labels: Option<Vec<usize>>, provenance: Provenance) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != points.rows() {
                return Err(Error::DimensionMismatch {
                    expected: points.rows(),
                    got: l.len(),
                });
            }
            if let Some(bad) = l.iter().find(|x| **x >= provenance.k) {
                return domain(format!("label {bad} outside [0, {})", provenance.k));
            }
        }
        Ok(Self {
            n: points.rows(),
            p: points.cols(),
            points,
            labels,
            provenance,
        })
    }
}

/// A projected two-component mixture `w N(mu1, sigma1^2) + (1-w) N(mu2, sigma2^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mixture1D {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub w: f64,
}

impl Mixture1D {
    pub fn new(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64, w: f64) -> Result<Self> {
        if ![mu1, mu2, sigma1, sigma2, w].iter().all(|v| v.is_finite()) {
            return domain("mixture parameters must be finite");
        }
        if !(sigma1 > 0.0 && sigma2 > 0.0) {
            return domain(format!(
                "standard deviations must be > 0, got {sigma1}, {sigma2}"
            ));
        }
        if !(w > 0.0 && w < 1.0) {
            return domain(format!("weight must lie in (0, 1), got {w}"));
        }
        Ok(Self {
            mu1,
            mu2,
            sigma1,
            sigma2,
            w,
        })
    }

    /// Apply the model floors for data of the given scale.
    pub fn clamped(mut self, scale: f64) -> Self {
        let floor = SIGMA_FLOOR_REL * scale;
        self.sigma1 = self.sigma1.max(floor);
        self.sigma2 = self.sigma2.max(floor);
        self.w = self.w.clamp(W_FLOOR, 1.0 - W_FLOOR);
        self
    }

    /// Relabel the components.
    pub fn swapped(self) -> Self {
        Self {
            mu1: self.mu2,
            mu2: self.mu1,
            sigma1: self.sigma2,
            sigma2: self.sigma1,
            w: 1.0 - self.w,
        }
    }

    pub fn has_equal_variances(&self) -> bool {
        (self.sigma1 - self.sigma2).abs() <= 1e-12 * self.sigma1.max(self.sigma2)
    }
}

/// Which component owns the leftmost interval `(-inf, t_1)`. Intervals
/// alternate between components from there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    FirstOnLeft,
    SecondOnLeft,
}

/// A 1-D decision rule: a unit direction, sorted thresholds and orientation.
/// A projected value exactly equal to a threshold falls in the interval to
/// its right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundary1D {
    pub direction: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub orientation: Orientation,
}

impl Boundary1D {
    /// Component index (0 or 1) for a projected value `t`, where the
    /// projection uses this boundary's unit direction.
    #[inline]
    pub fn label_of(&self, t: f64) -> usize {
        let crossed = self.thresholds.iter().filter(|th| t >= **th).count();
        let left = match self.orientation {
            Orientation::FirstOnLeft => 0,
            Orientation::SecondOnLeft => 1,
        };
        (left + crossed) % 2
    }
}

/// Result of a projection scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutcome {
    pub boundary: Boundary1D,
    pub fitted: Mixture1D,
    pub estimated_error: f64,
    pub gamma_hat: f64,
    pub projections_used: usize,
    pub c_hat: Option<f64>,
    /// False when the budget ran out before the target error was met; the
    /// outcome is then the lowest estimated error seen.
    pub achieved: bool,
}
