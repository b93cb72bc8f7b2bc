//! Closed-form error, probability and projection-count bounds.
//!
//! Each calculator returns a [`BoundReport`] carrying its inputs and a
//! citation tag. Values pushed outside their valid range by the algebra
//! are clamped and the clamp is recorded in `flags`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mathkit::{chi2_lower_tail_exponent, chi2_upper_tail_exponent, q};
use crate::model::{lambda_max, MixtureSpec};

/// Constant in the `C / eps^2 ln(1/delta)` sample-size bound.
pub const SAMPLE_SIZE_C: f64 = 64.0;
pub const TAU_GRID_LEN: usize = 64;
pub const TAU_GRID_MIN: f64 = 1e-4;
pub const TAU_GRID_MAX: f64 = 10.0;
const RANK_GRID_LEN: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    ProbabilityLower,
    ProbabilityUpper,
    CountUpper,
    ErrorUpper,
    ErrorLower,
    GapUpper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFlag {
    ClampedLow,
    ClampedHigh,
    /// The probability bound is zero, so the count bound is infinite.
    Unbounded,
    /// `gamma^2 / c^2` (or `beta`) reached `p`; the probability bound is 0.
    OutsideDomain,
    SublogRegime,
    SublinearRegime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub value: f64,
    pub kind: BoundKind,
    pub inputs: BTreeMap<String, f64>,
    pub citation: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<BoundFlag>,
}

impl BoundReport {
    fn new(kind: BoundKind, citation: &str, inputs: &[(&str, f64)]) -> Self {
        Self {
            value: f64::NAN,
            kind,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            citation: citation.to_string(),
            flags: Vec::new(),
        }
    }

    fn with_value(mut self, value: f64) -> Self {
        self.value = value;
        self
    }

    fn input(mut self, name: &str, value: f64) -> Self {
        self.inputs.insert(name.to_string(), value);
        self
    }

    fn flag(&mut self, f: BoundFlag) {
        if !self.flags.contains(&f) {
            self.flags.push(f);
        }
    }

    pub fn has_flag(&self, f: BoundFlag) -> bool {
        self.flags.contains(&f)
    }

    /// Clamp into `[lo, hi]`, flagging any change.
    fn clamped(mut self, lo: f64, hi: f64) -> Self {
        if self.value < lo {
            self.value = lo;
            self.flag(BoundFlag::ClampedLow);
        } else if self.value > hi {
            self.value = hi;
            self.flag(BoundFlag::ClampedHigh);
        }
        self
    }

    /// `1 / probability`, infinite and flagged when the probability is 0;
    /// never below 1.
    fn inverse_count(prob: &BoundReport, citation: &str) -> Self {
        let mut out = BoundReport {
            value: f64::NAN,
            kind: BoundKind::CountUpper,
            inputs: prob.inputs.clone(),
            citation: citation.to_string(),
            flags: prob.flags.clone(),
        };
        if prob.value > 0.0 {
            out.value = 1.0 / prob.value;
        } else {
            out.value = f64::INFINITY;
            out.flag(BoundFlag::Unbounded);
        }
        out.input("probability", prob.value)
            .clamped(1.0, f64::INFINITY)
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        domain(msg())
    }
}

/// `Q(c sqrt(p) / 2)`: Bayes error upper bound for a `c`-separable pair.
pub fn hd_bayes_error_bound(c: f64, p: usize) -> Result<BoundReport> {
    require(c >= 0.0 && c.is_finite(), || {
        format!("requires c >= 0, got {c}")
    })?;
    require(p >= 1, || "requires p >= 1".into())?;
    let value = q(c * (p as f64).sqrt() / 2.0);
    Ok(BoundReport::new(
        BoundKind::ErrorUpper,
        "hd-bayes-error",
        &[("c", c), ("p", p as f64)],
    )
    .with_value(value)
    .clamped(0.0, 0.5))
}

/// `2 Q(sqrt(a (1 - 1/p) / (1 - a/p) (1 + tau))) (1 - e^{-(p-1)/2 (tau - ln(1+tau))})`.
fn projected_tail_prob(a: f64, p: usize, tau: f64) -> Result<(f64, bool)> {
    let pf = p as f64;
    if a >= pf {
        return Ok((0.0, true));
    }
    let arg = (a * (1.0 - 1.0 / pf) / (1.0 - a / pf) * (1.0 + tau)).sqrt();
    Ok((
        2.0 * q(arg) * (1.0 - chi2_upper_tail_exponent((p - 1) as u64, tau)?),
        false,
    ))
}

/// Lower bound on the probability that a random Gaussian direction keeps a
/// spherical `c`-separable pair `gamma`-separable.
pub fn spherical_direction_prob(gamma: f64, c: f64, p: usize, tau: f64) -> Result<BoundReport> {
    require(gamma >= 0.0 && gamma.is_finite(), || {
        format!("requires gamma >= 0, got {gamma}")
    })?;
    require(c > 0.0 && c.is_finite(), || {
        format!("requires c > 0, got {c}")
    })?;
    require(p >= 2, || format!("requires p >= 2, got {p}"))?;
    require(tau > 0.0 && tau.is_finite(), || {
        format!("requires tau > 0, got {tau}")
    })?;
    let alpha = gamma * gamma / (c * c);
    let (value, outside) = projected_tail_prob(alpha, p, tau)?;
    let mut r = BoundReport::new(
        BoundKind::ProbabilityLower,
        "spherical-direction-prob",
        &[
            ("gamma", gamma),
            ("c", c),
            ("p", p as f64),
            ("tau", tau),
            ("alpha", alpha),
        ],
    )
    .with_value(value);
    if outside {
        r.flag(BoundFlag::OutsideDomain);
    }
    Ok(r.clamped(0.0, 1.0))
}

/// The fixed logarithmic grid of `TAU_GRID_LEN` points on `[1e-4, 10]`.
pub fn tau_grid() -> Vec<f64> {
    let (lo, hi) = (TAU_GRID_MIN.ln(), TAU_GRID_MAX.ln());
    (0..TAU_GRID_LEN)
        .map(|i| (lo + (hi - lo) * i as f64 / (TAU_GRID_LEN - 1) as f64).exp())
        .collect()
}

/// Maximize a `tau`-indexed probability bound over [`tau_grid`]. Ties keep
/// the smallest `tau`.
pub fn optimize_tau<F>(prob_fn: F) -> Result<(f64, BoundReport)>
where
    F: Fn(f64) -> Result<BoundReport>,
{
    let mut best: Option<(f64, BoundReport)> = None;
    for tau in tau_grid() {
        let r = prob_fn(tau)?;
        if best.as_ref().is_none_or(|(_, b)| r.value > b.value) {
            best = Some((tau, r));
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// Upper bound on the mean number of projections needed to reach
/// separability `gamma`. `p = None` gives the large-`p` limit
/// `1 / (2 Q(gamma / c))`; a finite `p` inverts the direction probability at
/// the grid-optimal `tau`.
pub fn expected_projections_spherical(gamma: f64, c: f64, p: Option<usize>) -> Result<BoundReport> {
    require(gamma >= 0.0 && gamma.is_finite(), || {
        format!("requires gamma >= 0, got {gamma}")
    })?;
    require(c > 0.0 && c.is_finite(), || {
        format!("requires c > 0, got {c}")
    })?;
    match p {
        None => {
            let prob = BoundReport::new(
                BoundKind::ProbabilityLower,
                "",
                &[("gamma", gamma), ("c", c)],
            )
            .with_value(2.0 * q(gamma / c));
            Ok(BoundReport::inverse_count(
                &prob,
                "spherical-projections-asymptotic",
            ))
        }
        Some(p) => {
            let (_, prob) = optimize_tau(|tau| spherical_direction_prob(gamma, c, p, tau))?;
            Ok(BoundReport::inverse_count(
                &prob,
                "spherical-projections-finite-p",
            ))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// `gamma / c <= (ln ln p)^((1 - eta) / 2)`: `d(gamma) = o(ln p)`.
    pub sublog: bool,
    /// `gamma / c <= (ln p)^((1 - eta) / 2)`: `d(gamma) = o(p)`.
    pub sublinear: bool,
    pub count: BoundReport,
}

pub fn sublog_regime_check(gamma: f64, c: f64, p: usize, eta: f64) -> Result<RegimeReport> {
    require(eta > 0.0 && eta.is_finite(), || {
        format!("requires eta > 0, got {eta}")
    })?;
    let pf = p as f64;
    require(pf > std::f64::consts::E, || {
        format!("requires p > e so that ln ln p > 0, got {p}")
    })?;
    let ratio = gamma / c;
    let sublog_edge = pf.ln().ln().powf((1.0 - eta) / 2.0);
    let sublinear_edge = pf.ln().powf((1.0 - eta) / 2.0);
    let sublog = ratio <= sublog_edge;
    let sublinear = ratio <= sublinear_edge;
    let mut count = expected_projections_spherical(gamma, c, Some(p))?
        .input("eta", eta)
        .input("sublog_edge", sublog_edge)
        .input("sublinear_edge", sublinear_edge);
    count.citation = "spherical-regime".into();
    if sublog {
        count.flag(BoundFlag::SublogRegime);
    }
    if sublinear {
        count.flag(BoundFlag::SublinearRegime);
    }
    Ok(RegimeReport {
        sublog,
        sublinear,
        count,
    })
}

/// Upper bound on the probability that some pair of a `k`-component
/// mixture falls below separability `gamma_min` along a random direction.
pub fn kgmm_failure_bound(gamma_min: f64, c_min: f64, k: usize, p: usize) -> Result<BoundReport> {
    require(gamma_min >= 0.0 && gamma_min.is_finite(), || {
        format!("requires gamma_min >= 0, got {gamma_min}")
    })?;
    require(c_min > 0.0 && c_min.is_finite(), || {
        format!("requires c_min > 0, got {c_min}")
    })?;
    require(k >= 2, || format!("requires k >= 2, got {k}"))?;
    require(p >= 1, || "requires p >= 1".into())?;
    let g = gamma_min / c_min;
    let pf = p as f64;
    require(g * g < pf, || {
        format!("requires gamma_min^2 / c_min^2 < p, got {} >= {p}", g * g)
    })?;
    let kf = k as f64;
    let inner = 2.0 * q(g * (1.1 / (1.0 - g * g / pf)).sqrt()) * (1.0 - (-0.002 * pf).exp());
    Ok(BoundReport::new(
        BoundKind::ProbabilityUpper,
        "kgmm-pairwise-failure",
        &[
            ("gamma_min", gamma_min),
            ("c_min", c_min),
            ("k", kf),
            ("p", pf),
        ],
    )
    .with_value(kf * kf / 2.0 * (1.0 - inner))
    .clamped(0.0, 1.0))
}

/// Large-`p` projection count `1/alpha` for a `k`-component mixture,
/// valid while `gamma_min <= (1 - alpha) sqrt(2 pi / 1.1) c_min / k^2`. The
/// threshold is reported as input `gamma_min_threshold`.
pub fn kgmm_projection_bound(c_min: f64, k: usize, alpha: f64) -> Result<BoundReport> {
    require(alpha > 0.0 && alpha < 1.0, || {
        format!("requires 0 < alpha < 1, got {alpha}")
    })?;
    require(c_min > 0.0 && c_min.is_finite(), || {
        format!("requires c_min > 0, got {c_min}")
    })?;
    require(k >= 2, || format!("requires k >= 2, got {k}"))?;
    let kf = k as f64;
    let threshold = (1.0 - alpha) * (2.0 * std::f64::consts::PI / 1.1).sqrt() * c_min / (kf * kf);
    Ok(BoundReport::new(
        BoundKind::CountUpper,
        "kgmm-projections-asymptotic",
        &[
            ("c_min", c_min),
            ("k", kf),
            ("alpha", alpha),
            ("gamma_min_threshold", threshold),
        ],
    )
    .with_value(1.0 / alpha))
}

/// Covariance geometry of a two-component mixture that the non-spherical
/// bounds depend on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonsphericalGeometry {
    pub p: usize,
    /// Rank of `Sigma_1 + Sigma_2`.
    pub r: usize,
    /// Largest eigenvalue of `Sigma_1 + Sigma_2`.
    pub lambda_max_sum: f64,
    /// `||m_1 - m_2||^2`.
    pub mean_gap_sq: f64,
}

impl NonsphericalGeometry {
    pub fn from_spec(spec: &MixtureSpec) -> Result<Self> {
        if spec.k != 2 {
            return domain(format!(
                "requires a two-component mixture, got k = {}",
                spec.k
            ));
        }
        let sum = spec.covs[0].sum(&spec.covs[1], spec.p);
        let gap = spec.mean_gap(0, 1);
        Ok(Self {
            p: spec.p,
            r: sum.rank(spec.p),
            lambda_max_sum: lambda_max(&sum)?,
            mean_gap_sq: gap * gap,
        })
    }

    fn validate(&self) -> Result<()> {
        require(self.p >= 2, || format!("requires p >= 2, got {}", self.p))?;
        require(self.r >= 1 && self.r <= self.p, || {
            format!("requires 1 <= r <= p, got r = {}", self.r)
        })?;
        require(self.lambda_max_sum > 0.0, || {
            "requires lambda_max(Sigma_1 + Sigma_2) > 0".into()
        })?;
        require(self.mean_gap_sq >= 0.0, || {
            "requires ||m_1 - m_2||^2 >= 0".into()
        })
    }

    /// `2 gamma^2 lambda_max p / ||m_1 - m_2||^2`; infinite for equal means.
    pub fn beta_full_rank(&self, gamma: f64) -> f64 {
        if gamma == 0.0 {
            return 0.0;
        }
        if self.mean_gap_sq == 0.0 {
            return f64::INFINITY;
        }
        2.0 * gamma * gamma * self.lambda_max_sum * self.p as f64 / self.mean_gap_sq
    }

    /// `2 (1 + tau2) gamma^2 lambda_max r / ((1 - tau1) ||m_1 - m_2||^2)`.
    pub fn beta_rank(&self, gamma: f64, tau1: f64, tau2: f64) -> f64 {
        if gamma == 0.0 {
            return 0.0;
        }
        if self.mean_gap_sq == 0.0 {
            return f64::INFINITY;
        }
        2.0 * (1.0 + tau2) * gamma * gamma * self.lambda_max_sum * self.r as f64
            / ((1.0 - tau1) * self.mean_gap_sq)
    }
}

/// `beta` for the full-rank bound, from a two-component spec.
pub fn beta_full_rank(spec: &MixtureSpec, gamma: f64) -> Result<f64> {
    require(gamma >= 0.0 && gamma.is_finite(), || {
        format!("requires gamma >= 0, got {gamma}")
    })?;
    Ok(NonsphericalGeometry::from_spec(spec)?.beta_full_rank(gamma))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RankMode {
    Full,
    RankR { tau1: f64, tau2: f64 },
}

/// Lower bound on the probability that a random direction keeps a general
/// two-component pair `gamma`-separable.
pub fn nonspherical_direction_prob_geometry(
    geom: &NonsphericalGeometry,
    gamma: f64,
    tau: f64,
    mode: RankMode,
) -> Result<BoundReport> {
    geom.validate()?;
    require(gamma >= 0.0 && gamma.is_finite(), || {
        format!("requires gamma >= 0, got {gamma}")
    })?;
    require(tau > 0.0 && tau.is_finite(), || {
        format!("requires tau > 0, got {tau}")
    })?;
    let base = [
        ("gamma", gamma),
        ("p", geom.p as f64),
        ("r", geom.r as f64),
        ("lambda_max", geom.lambda_max_sum),
        ("mean_gap_sq", geom.mean_gap_sq),
        ("tau", tau),
    ];
    match mode {
        RankMode::Full => {
            let beta = geom.beta_full_rank(gamma);
            let (value, outside) = projected_tail_prob(beta, geom.p, tau)?;
            let mut r = BoundReport::new(
                BoundKind::ProbabilityLower,
                "nonspherical-direction-prob-full",
                &base,
            )
            .input("beta", beta)
            .with_value(value);
            if outside {
                r.flag(BoundFlag::OutsideDomain);
            }
            Ok(r.clamped(0.0, 1.0))
        }
        RankMode::RankR { tau1, tau2 } => {
            require(tau1 > 0.0 && tau1 < 1.0, || {
                format!("requires 0 < tau1 < 1, got {tau1}")
            })?;
            require(tau2 > 0.0 && tau2.is_finite(), || {
                format!("requires tau2 > 0, got {tau2}")
            })?;
            let beta = geom.beta_rank(gamma, tau1, tau2);
            let (head, outside) = projected_tail_prob(beta, geom.p, tau)?;
            let value = head
                - chi2_lower_tail_exponent(geom.p as u64, tau1)?
                - chi2_upper_tail_exponent(geom.r as u64, tau2)?;
            let mut r = BoundReport::new(
                BoundKind::ProbabilityLower,
                "nonspherical-direction-prob-rank",
                &base,
            )
            .input("tau1", tau1)
            .input("tau2", tau2)
            .input("beta", beta)
            .with_value(value);
            if outside {
                r.flag(BoundFlag::OutsideDomain);
            }
            Ok(r.clamped(0.0, 1.0))
        }
    }
}

pub fn nonspherical_direction_prob(
    spec: &MixtureSpec,
    gamma: f64,
    tau: f64,
    mode: RankMode,
) -> Result<BoundReport> {
    nonspherical_direction_prob_geometry(&NonsphericalGeometry::from_spec(spec)?, gamma, tau, mode)
}

/// Best rank-mode probability over fixed grids of `tau1`, `tau2` and
/// `tau`. Returns `(tau1, tau2, report)`.
pub fn optimize_rank_params(
    geom: &NonsphericalGeometry,
    gamma: f64,
) -> Result<(f64, f64, BoundReport)> {
    let grid = |lo: f64, hi: f64| -> Vec<f64> {
        (0..RANK_GRID_LEN)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (RANK_GRID_LEN - 1) as f64).exp())
            .collect()
    };
    let mut best: Option<(f64, f64, BoundReport)> = None;
    for &tau1 in &grid(1e-3, 0.99) {
        for &tau2 in &grid(1e-3, 10.0) {
            let (_, r) = optimize_tau(|tau| {
                nonspherical_direction_prob_geometry(
                    geom,
                    gamma,
                    tau,
                    RankMode::RankR { tau1, tau2 },
                )
            })?;
            if best.as_ref().is_none_or(|(_, _, b)| r.value > b.value) {
                best = Some((tau1, tau2, r));
            }
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// Count bound for the general case. `asymptotic` gives `1 / (2 Q(sqrt(beta)))`
/// with the full-rank `beta`; otherwise the direction probability is inverted
/// at the grid-optimal `tau` (and `tau1`, `tau2` when `optimize_rank` is set
/// in rank mode). The sublog flag uses `sqrt(beta) <= (ln ln p)^((1-eta)/2)`.
pub fn expected_projections_nonspherical_geometry(
    geom: &NonsphericalGeometry,
    gamma: f64,
    mode: RankMode,
    asymptotic: bool,
    eta: f64,
) -> Result<BoundReport> {
    geom.validate()?;
    require(gamma >= 0.0 && gamma.is_finite(), || {
        format!("requires gamma >= 0, got {gamma}")
    })?;
    let beta = geom.beta_full_rank(gamma);
    let mut out = if asymptotic {
        let prob = BoundReport::new(
            BoundKind::ProbabilityLower,
            "",
            &[("gamma", gamma), ("p", geom.p as f64), ("beta", beta)],
        )
        .with_value(2.0 * q(beta.sqrt()));
        BoundReport::inverse_count(&prob, "nonspherical-projections-asymptotic")
    } else {
        let (_, prob) =
            optimize_tau(|tau| nonspherical_direction_prob_geometry(geom, gamma, tau, mode))?;
        BoundReport::inverse_count(&prob, "nonspherical-projections-finite-p")
    };
    let pf = geom.p as f64;
    if eta > 0.0 && pf > std::f64::consts::E && beta.sqrt() <= pf.ln().ln().powf((1.0 - eta) / 2.0)
    {
        out.flag(BoundFlag::SublogRegime);
    }
    Ok(out.input("eta", eta))
}

pub fn expected_projections_nonspherical(
    spec: &MixtureSpec,
    gamma: f64,
    mode: RankMode,
    asymptotic: bool,
    eta: f64,
) -> Result<BoundReport> {
    expected_projections_nonspherical_geometry(
        &NonsphericalGeometry::from_spec(spec)?,
        gamma,
        mode,
        asymptotic,
        eta,
    )
}

/// `max(ceil(C / eps^2 ln(1/delta)), ceil(1 / (2 gamma_min)^12))` with `C = 64`.
pub fn sample_size_required(epsilon: f64, delta: f64, gamma_min: f64) -> Result<u64> {
    sample_size_required_with(SAMPLE_SIZE_C, epsilon, delta, gamma_min)
}

pub fn sample_size_required_with(
    constant: f64,
    epsilon: f64,
    delta: f64,
    gamma_min: f64,
) -> Result<u64> {
    require(epsilon > 0.0 && epsilon < 1.0, || {
        format!("requires 0 < epsilon < 1, got {epsilon}")
    })?;
    require(delta > 0.0 && delta < 1.0, || {
        format!("requires 0 < delta < 1, got {delta}")
    })?;
    require(gamma_min > 0.0 && gamma_min.is_finite(), || {
        format!("requires gamma_min > 0, got {gamma_min}")
    })?;
    let accuracy = (constant / (epsilon * epsilon) * (1.0 / delta).ln()).ceil();
    let separation = (1.0 / (2.0 * gamma_min).powi(12)).ceil();
    let n = accuracy.max(separation);
    if n >= u64::MAX as f64 {
        return Err(Error::Domain(format!("sample size {n:e} overflows")));
    }
    Ok(n as u64)
}

/// Leading term of the bound on `|e_hat - e_opt|` when every parameter is
/// estimated to relative accuracy `epsilon`.
pub fn error_gap_bound(
    gamma: f64,
    gamma_max: f64,
    w_min: f64,
    epsilon: f64,
) -> Result<BoundReport> {
    require(gamma > 0.0 && gamma.is_finite(), || {
        format!("requires gamma > 0, got {gamma}")
    })?;
    require(gamma_max >= gamma && gamma_max.is_finite(), || {
        format!("requires gamma_max >= gamma, got {gamma_max} < {gamma}")
    })?;
    require(w_min > 0.0 && w_min <= 0.5, || {
        format!("requires 0 < w_min <= 1/2, got {w_min}")
    })?;
    require(epsilon > 0.0 && epsilon.is_finite(), || {
        format!("requires epsilon > 0, got {epsilon}")
    })?;
    let l = ((1.0 - w_min) / w_min).ln();
    let lhs =
        (16.0 * gamma_max * gamma_max + 8.0 * gamma_max * l + 2.0 * gamma_max * epsilon) * epsilon;
    require(lhs < 0.5, || {
        format!("requires (16 gamma_max^2 + 8 gamma_max ln((1-w_min)/w_min) + 2 gamma_max eps) eps < 1/2, got {lhs}")
    })?;
    let coef = 2.0 * gamma
        + 1.0 / (w_min * gamma)
        + (1.0 / gamma + 2.0 * gamma) * l
        + 8.0 * gamma_max * gamma_max / gamma
        + 2.0 * gamma * (4.0 * gamma + 2.0 * l).powi(2);
    let value = coef * epsilon + q(1.0 / (4.0 * gamma * epsilon));
    Ok(BoundReport::new(
        BoundKind::GapUpper,
        "error-gap-leading-term",
        &[
            ("gamma", gamma),
            ("gamma_max", gamma_max),
            ("w_min", w_min),
            ("epsilon", epsilon),
        ],
    )
    .with_value(value))
}

/// Lower bound on the Bayes error of an equal-variance pair with smaller
/// weight `w <= 1/2` and separability `gamma`: `w Q(gamma - 1/gamma)` for
/// `w <= 0.1`, `w Q(gamma)` above.
pub fn bayes_error_lower_bound(w: f64, gamma: f64) -> Result<BoundReport> {
    require(w > 0.0 && w <= 0.5, || {
        format!("requires 0 < w <= 1/2, got {w}")
    })?;
    require(gamma > 0.0 && gamma.is_finite(), || {
        format!("requires gamma > 0, got {gamma}")
    })?;
    let value = if w <= 0.1 {
        w * q(gamma - 1.0 / gamma)
    } else {
        w * q(gamma)
    };
    Ok(BoundReport::new(
        BoundKind::ErrorLower,
        "bayes-error-lower",
        &[("w", w), ("gamma", gamma)],
    )
    .with_value(value))
}
