//! Fitting 1-D two-component Gaussian mixtures, Bayes thresholds and errors.
//!
//! The moment fit matches mean, variance and the third and fourth cumulants
//! of an equal-variance mixture. Writing `x = w (1 - w) d^2` with
//! `d = mu2 - mu1`, the cumulant equations reduce to the cubic
//! `2 x^3 + k4 x - k3^2 = 0`; the fifth cumulant picks between real roots.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mathkit::{ln_normal_pdf, q};
use crate::model::{Mixture1D, Orientation, W_FLOOR};

pub const MOM_MIN_SAMPLES: usize = 16;
pub const EM_MIN_SAMPLES: usize = 2;
pub const EM_MAX_ITER: usize = 200;
pub const EM_TOL: f64 = 1e-8;
/// 0.999 quantile of chi-square with 2 degrees of freedom. Samples whose
/// Jarque-Bera statistic stays below it are fitted as a single Gaussian.
pub const NORMALITY_CRITICAL: f64 = 13.815_510_557_964_274;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "mom")]
    Mom,
    #[serde(rename = "em")]
    Em,
    #[serde(rename = "mom+em")]
    MomEm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mom => "mom",
            Method::Em => "em",
            Method::MomEm => "mom+em",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mom" => Ok(Method::Mom),
            "em" => Ok(Method::Em),
            "mom+em" => Ok(Method::MomEm),
            _ => domain(format!(
                "unknown learner '{s}' (expected mom, em or mom+em)"
            )),
        }
    }
}

/// Sample mean and central moments of orders 2 to 6 (divisor `n`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub n: usize,
    pub mean: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    pub m6: f64,
}

impl SampleMoments {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let nf = n as f64;
        let mean = samples.iter().sum::<f64>() / nf;
        let mut acc = [0.0f64; 5];
        for &x in samples {
            let y = x - mean;
            let y2 = y * y;
            let y3 = y2 * y;
            acc[0] += y2;
            acc[1] += y3;
            acc[2] += y2 * y2;
            acc[3] += y3 * y2;
            acc[4] += y3 * y3;
        }
        Self {
            n,
            mean,
            m2: acc[0] / nf,
            m3: acc[1] / nf,
            m4: acc[2] / nf,
            m5: acc[3] / nf,
            m6: acc[4] / nf,
        }
    }

    pub fn sd(&self) -> f64 {
        self.m2.sqrt()
    }

    /// Jarque-Bera statistic `n (S^2 / 6 + K^2 / 24)`.
    pub fn jarque_bera(&self) -> f64 {
        if self.m2 <= 0.0 {
            return 0.0;
        }
        let s = self.m3 / self.m2.powf(1.5);
        let k = self.m4 / (self.m2 * self.m2) - 3.0;
        self.n as f64 * (s * s / 6.0 + k * k / 24.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fitted: Mixture1D,
    pub method: Method,
    pub iterations: usize,
    pub sample_moments: SampleMoments,
    /// True when the fit degenerated to a single Gaussian.
    pub single_component: bool,
    /// EM log-likelihood before each update (empty for moment fits).
    pub log_likelihood: Vec<f64>,
}

fn data_scale(m: &SampleMoments) -> f64 {
    let sd = m.sd();
    if sd > 0.0 {
        sd
    } else if m.mean != 0.0 {
        m.mean.abs()
    } else {
        1.0
    }
}

fn single_gaussian(m: &SampleMoments) -> Mixture1D {
    let sd = m.sd();
    Mixture1D {
        mu1: m.mean,
        mu2: m.mean,
        sigma1: sd,
        sigma2: sd,
        w: 0.5,
    }
    .clamped(data_scale(m))
}

/// Real roots of `x^3 + a x + b`, Newton-polished.
fn depressed_cubic_roots(a: f64, b: f64) -> Vec<f64> {
    let mut roots = Vec::with_capacity(3);
    if a == 0.0 {
        roots.push((-b).cbrt());
    } else {
        let disc = (b / 2.0).powi(2) + (a / 3.0).powi(3);
        if disc > 0.0 {
            let s = disc.sqrt();
            roots.push((-b / 2.0 + s).cbrt() + (-b / 2.0 - s).cbrt());
        } else {
            let r = 2.0 * (-a / 3.0).sqrt();
            let arg = ((3.0 * b) / (a * r)).clamp(-1.0, 1.0);
            let theta = arg.acos() / 3.0;
            for k in 0..3 {
                roots.push(r * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos());
            }
        }
    }
    for x in roots.iter_mut() {
        for _ in 0..4 {
            let f = *x * *x * *x + a * *x + b;
            let df = 3.0 * *x * *x + a;
            if df == 0.0 {
                break;
            }
            *x -= f / df;
        }
    }
    roots
}

/// Equal-variance moment solution, or `None` when no admissible root exists.
pub fn fit_mom_from_moments(m: &SampleMoments) -> Option<Mixture1D> {
    if !(m.m2 > 0.0) {
        return None;
    }
    let sd = m.sd();
    // standardized cumulants
    let k3 = m.m3 / (m.m2 * sd);
    let k4 = m.m4 / (m.m2 * m.m2) - 3.0;
    let k5 = (m.m5 - 10.0 * m.m3 * m.m2) / (m.m2 * m.m2 * sd);

    let mut best: Option<(f64, Mixture1D)> = None;
    for x in depressed_cubic_roots(k4 / 2.0, -k3 * k3 / 2.0) {
        let denom = k4 + 6.0 * x * x;
        if !(x > 0.0 && x < 1.0 && denom > 0.0) {
            continue;
        }
        let u = (x * x / denom).min(0.25);
        let d2 = denom / x;
        let d = d2.sqrt();
        let skew = k3.signum() * (1.0 - 4.0 * u).max(0.0).sqrt();
        let q2 = 0.5 * (1.0 - skew);
        let w = 1.0 - q2;
        if !(W_FLOOR..=1.0 - W_FLOOR).contains(&w) {
            continue;
        }
        let sigma = (1.0 - x).sqrt();
        let k5_model = u * skew * (1.0 - 12.0 * u) * d2 * d2 * d;
        let mismatch = (k5_model - k5).abs();
        let mix = Mixture1D {
            mu1: m.mean - sd * q2 * d,
            mu2: m.mean + sd * w * d,
            sigma1: sd * sigma,
            sigma2: sd * sigma,
            w,
        };
        if best.as_ref().is_none_or(|(b, _)| mismatch < *b) {
            best = Some((mismatch, mix));
        }
    }
    best.map(|(_, mix)| mix.clamped(data_scale(m)))
}

/// Method-of-moments fit with equal variances.
///
/// Falls back to a single Gaussian (`mu1 = mu2`, `w = 0.5`) when the sample
/// is consistent with normality or the moment system has no admissible
/// real solution.
pub fn fit_mom(samples: &[f64]) -> Result<FitReport> {
    if samples.len() < MOM_MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MOM_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let moments = SampleMoments::from_samples(samples);
    let solved = if moments.jarque_bera() < NORMALITY_CRITICAL {
        None
    } else {
        fit_mom_from_moments(&moments)
    };
    Ok(FitReport {
        single_component: solved.is_none(),
        fitted: solved.unwrap_or_else(|| single_gaussian(&moments)),
        method: Method::Mom,
        iterations: 0,
        sample_moments: moments,
        log_likelihood: Vec::new(),
    })
}

/// Two-component EM with free variances, started from `init`.
///
/// Stops when the per-sample log-likelihood gain drops below `tol` or
/// after `max_iter` updates.
pub fn fit_em(samples: &[f64], init: Mixture1D, max_iter: usize, tol: f64) -> Result<FitReport> {
    if samples.len() < EM_MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: EM_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let moments = SampleMoments::from_samples(samples);
    let scale = data_scale(&moments);
    let center = moments.mean;
    let nf = samples.len() as f64;
    let sum_y: f64 = samples.iter().map(|x| x - center).sum();
    let sum_y2: f64 = samples.iter().map(|x| (x - center) * (x - center)).sum();

    // parameters in centered coordinates
    let mut cur = Mixture1D {
        mu1: init.mu1 - center,
        mu2: init.mu2 - center,
        ..init
    }
    .clamped(scale);
    let mut trace = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter {
        let lw1 = cur.w.ln();
        let lw2 = (1.0 - cur.w).ln();
        let (mut ll, mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0, 0.0);
        for &x in samples {
            let y = x - center;
            let a = lw1 + ln_normal_pdf(y, cur.mu1, cur.sigma1);
            let b = lw2 + ln_normal_pdf(y, cur.mu2, cur.sigma2);
            let e = (-(a - b).abs()).exp();
            ll += a.max(b) + e.ln_1p();
            let r = if a >= b {
                1.0 / (1.0 + e)
            } else {
                e / (1.0 + e)
            };
            s0 += r;
            s1 += r * y;
            s2 += r * y * y;
        }
        trace.push(ll);
        iterations += 1;

        let t0 = nf - s0;
        let t1 = sum_y - s1;
        let t2 = sum_y2 - s2;
        let mut next = cur;
        if s0 > 0.0 {
            next.mu1 = s1 / s0;
            next.sigma1 = (s2 / s0 - next.mu1 * next.mu1).max(0.0).sqrt();
        }
        if t0 > 0.0 {
            next.mu2 = t1 / t0;
            next.sigma2 = (t2 / t0 - next.mu2 * next.mu2).max(0.0).sqrt();
        }
        next.w = s0 / nf;
        cur = next.clamped(scale);

        if trace.len() >= 2 {
            let prev = trace[trace.len() - 2];
            if ll - prev < tol * nf {
                break;
            }
        }
    }
    Ok(FitReport {
        fitted: Mixture1D {
            mu1: cur.mu1 + center,
            mu2: cur.mu2 + center,
            ..cur
        },
        method: Method::Em,
        iterations,
        single_component: false,
        sample_moments: moments,
        log_likelihood: trace,
    })
}

/// Fit with the given method and default EM settings. EM alone starts
/// from `mean -/+ sd` with both standard deviations equal to `sd`.
pub fn fit(samples: &[f64], method: Method) -> Result<FitReport> {
    match method {
        Method::Mom => fit_mom(samples),
        Method::Em => {
            let m = SampleMoments::from_samples(samples);
            let sd = data_scale(&m);
            let init = Mixture1D {
                mu1: m.mean - sd,
                mu2: m.mean + sd,
                sigma1: sd,
                sigma2: sd,
                w: 0.5,
            };
            fit_em(samples, init, EM_MAX_ITER, EM_TOL)
        }
        Method::MomEm => {
            let mom = fit_mom(samples)?;
            if mom.single_component {
                return Ok(FitReport {
                    method: Method::MomEm,
                    ..mom
                });
            }
            let em = fit_em(samples, mom.fitted, EM_MAX_ITER, EM_TOL)?;
            Ok(FitReport {
                method: Method::MomEm,
                ..em
            })
        }
    }
}

/// Thresholds and orientation of a 1-D decision rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub thresholds: Vec<f64>,
    pub orientation: Orientation,
}

impl DecisionRule {
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

/// `ln(w phi_1(t)) - ln((1 - w) phi_2(t))`.
fn log_density_gap(mix: &Mixture1D, t: f64) -> f64 {
    mix.w.ln() + ln_normal_pdf(t, mix.mu1, mix.sigma1)
        - (1.0 - mix.w).ln()
        - ln_normal_pdf(t, mix.mu2, mix.sigma2)
}

fn polish(mix: &Mixture1D, mut t: f64) -> f64 {
    let (v1, v2) = (mix.sigma1 * mix.sigma1, mix.sigma2 * mix.sigma2);
    for _ in 0..3 {
        let g = log_density_gap(mix, t);
        let dg = -(t - mix.mu1) / v1 + (t - mix.mu2) / v2;
        if dg == 0.0 || !dg.is_finite() {
            break;
        }
        let step = g / dg;
        if !step.is_finite() {
            break;
        }
        t -= step;
    }
    t
}

/// Points where `w phi_1 = (1 - w) phi_2`, with the label of the leftmost
/// interval. Unequal variances give two thresholds, or none when one
/// weighted density dominates everywhere.
pub fn bayes_thresholds(mix: &Mixture1D) -> Result<DecisionRule> {
    if mix.has_equal_variances() {
        if mix.mu1 == mix.mu2 {
            return Err(Error::NoBoundary(
                "components have equal means and variances".into(),
            ));
        }
        let s2 = mix.sigma1 * mix.sigma1;
        let t = 0.5 * (mix.mu1 + mix.mu2) - s2 / (mix.mu1 - mix.mu2) * (mix.w / (1.0 - mix.w)).ln();
        let orientation = if mix.mu1 < mix.mu2 {
            Orientation::FirstOnLeft
        } else {
            Orientation::SecondOnLeft
        };
        return Ok(DecisionRule {
            thresholds: vec![t],
            orientation,
        });
    }

    let (v1, v2) = (mix.sigma1 * mix.sigma1, mix.sigma2 * mix.sigma2);
    let a = 1.0 / v2 - 1.0 / v1;
    let b = 2.0 * mix.mu1 / v1 - 2.0 * mix.mu2 / v2;
    let c = mix.mu2 * mix.mu2 / v2 - mix.mu1 * mix.mu1 / v1
        + 2.0 * (mix.w * mix.sigma2 / ((1.0 - mix.w) * mix.sigma1)).ln();
    let disc = b * b - 4.0 * a * c;
    let mut thresholds = Vec::new();
    if disc > 0.0 {
        let qq = -0.5 * (b + b.signum() * disc.sqrt());
        for r in [qq / a, c / qq] {
            if r.is_finite() {
                thresholds.push(polish(mix, r));
            }
        }
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();
    }
    let probe = match thresholds.first() {
        Some(t) => t - 1.0 - mix.sigma1.max(mix.sigma2),
        None => 0.5 * (mix.mu1 + mix.mu2),
    };
    let orientation = if log_density_gap(mix, probe) >= 0.0 {
        Orientation::FirstOnLeft
    } else {
        Orientation::SecondOnLeft
    };
    Ok(DecisionRule {
        thresholds,
        orientation,
    })
}

/// `P(a < N(mu, sigma^2) < b)` through upper-tail differences.
fn interval_mass(a: f64, b: f64, mu: f64, sigma: f64) -> f64 {
    let za = (a - mu) / sigma;
    let zb = (b - mu) / sigma;
    if za > 0.0 {
        q(za) - q(zb)
    } else {
        q(-zb) - q(-za)
    }
}

/// Probability that the rule mislabels a draw from `mix`.
pub fn rule_error(mix: &Mixture1D, rule: &DecisionRule) -> f64 {
    let mut edges = Vec::with_capacity(rule.thresholds.len() + 2);
    edges.push(f64::NEG_INFINITY);
    edges.extend_from_slice(&rule.thresholds);
    edges.push(f64::INFINITY);
    let mut err = 0.0;
    for win in edges.windows(2) {
        let label = rule.label_of(if win[0].is_finite() {
            win[0]
        } else {
            win[1] - 1.0
        });
        err += if label == 0 {
            (1.0 - mix.w) * interval_mass(win[0], win[1], mix.mu2, mix.sigma2)
        } else {
            mix.w * interval_mass(win[0], win[1], mix.mu1, mix.sigma1)
        };
    }
    err
}

/// Minimum achievable classification error for a known 1-D mixture.
pub fn bayes_error(mix: &Mixture1D) -> f64 {
    let e = if mix.has_equal_variances() {
        let gamma = (mix.mu1 - mix.mu2).abs() / (2.0 * mix.sigma1);
        if gamma == 0.0 {
            mix.w.min(1.0 - mix.w)
        } else {
            let l = (mix.w / (1.0 - mix.w)).ln() / (2.0 * gamma);
            mix.w * q(gamma + l) + (1.0 - mix.w) * q(gamma - l)
        }
    } else {
        match bayes_thresholds(mix) {
            Ok(rule) => rule_error(mix, &rule),
            Err(_) => mix.w.min(1.0 - mix.w),
        }
    };
    e.clamp(0.0, 0.5)
}

/// `(3 gamma + eps) / (1 - 2 sqrt(gamma^2 + eps))`.
pub fn estimated_separability_bound(gamma: f64, epsilon: f64) -> Result<f64> {
    if !(gamma >= 0.0 && epsilon >= 0.0) {
        return domain(format!(
            "gamma and epsilon must be >= 0, got {gamma}, {epsilon}"
        ));
    }
    if !(gamma < 0.5) {
        return domain(format!("requires gamma < 1/2, got {gamma}"));
    }
    if !(gamma * gamma + epsilon < 0.25) {
        return domain(format!(
            "requires gamma^2 + epsilon < 1/4, got {}",
            gamma * gamma + epsilon
        ));
    }
    Ok((3.0 * gamma + epsilon) / (1.0 - 2.0 * (gamma * gamma + epsilon).sqrt()))
}
