//! Acceptance criteria. Each test prints one `[PASS]` or `[FAIL]` line.
//!
//! Run with `cargo test -p projclust-core --test acceptance -- --nocapture`.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use projclust::bounds::{
    bayes_error_lower_bound, expected_projections_spherical, kgmm_failure_bound, optimize_tau,
    spherical_direction_prob,
};
use projclust::clusterer::{scan_projections, ClusterConfig, ProjectionTrial};
use projclust::datagen::{
    make_simplex_spec, make_spherical_spec, sample_dataset, sample_nongaussian_dataset, Shape,
};
use projclust::experiment::{
    acc_vs_sep, direction_separabilities, proj_vs_sep, rank_proj, ExperimentConfig, ExperimentKind,
};
use projclust::learner1d::{bayes_error, fit, Method};
use projclust::mathkit::{normal_pdf, q_function};
use projclust::projection::{projected_mixture, sample_direction, separability_1d};
use projclust::{Mixture1D, RngStream};

static SERIAL: Mutex<()> = Mutex::new(());

fn report(id: &str, pass: bool, detail: String) {
    println!("[{}] {id} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id} failed: {detail}");
}

fn q(x: f64) -> f64 {
    q_function(x).unwrap()
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs
        .into_iter()
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn sample_mixture(mix: &Mixture1D, n: usize, stream: &RngStream) -> Vec<f64> {
    let mut rng = stream.rng();
    let a = Normal::new(mix.mu1, mix.sigma1).unwrap();
    let b = Normal::new(mix.mu2, mix.sigma2).unwrap();
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < mix.w {
                a.sample(&mut rng)
            } else {
                b.sample(&mut rng)
            }
        })
        .collect()
}

#[test]
fn c01_mean_squared_projected_separability() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let spec = make_spherical_spec(1000, 1.0, 1.0, 0.5).unwrap();
    let gammas = direction_separabilities(&spec, 101, 100_000).unwrap();
    let m = mean(gammas.iter().map(|g| g * g));
    report(
        "C1",
        (0.98..=1.02).contains(&m),
        format!(
            "mean gamma^2 = {m:.4} over 1e5 directions (p=1000, c=1) in {:.1?}",
            t.elapsed()
        ),
    );
}

#[test]
fn c02_direction_probability_lower_bound() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for p in [100usize, 1000] {
        let spec = make_spherical_spec(p, 1.0, 1.0, 0.5).unwrap();
        let gammas = direction_separabilities(&spec, 202 + p as u64, 100_000).unwrap();
        let n = gammas.len() as f64;
        for ratio in [0.25, 0.5, 1.0, 1.5, 2.0] {
            let emp = gammas.iter().filter(|g| **g >= ratio).count() as f64 / n;
            let se = (emp * (1.0 - emp) / n).sqrt();
            let (tau, bound) =
                optimize_tau(|tau| spherical_direction_prob(ratio, 1.0, p, tau)).unwrap();
            let margin = emp - (bound.value - 3.0 * se);
            worst = worst.min(margin);
            if margin < 0.0 {
                failures.push(format!(
                    "p={p} g/c={ratio}: emp {emp:.4} < bound {:.4} (tau {tau:.3})",
                    bound.value
                ));
            }
        }
    }
    report(
        "C2",
        failures.is_empty(),
        format!(
            "10 cells, min margin {worst:.4} {failures:?} in {:.1?}",
            t.elapsed()
        ),
    );
}

#[test]
fn c03_worked_example_projection_count() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let (p, c, gamma) = (10_000usize, 1.0, 1.49);
    let spec = make_spherical_spec(p, c, 1.0, 0.5).unwrap();
    let counts: Vec<f64> = (0..500u64)
        .map(|trial| {
            let mut k = 0u64;
            loop {
                k += 1;
                let a = sample_direction(p, &RngStream::new(303, (trial << 32) | k)).unwrap();
                if separability_1d(&projected_mixture(&spec, &a, 0, 1).unwrap()) >= gamma {
                    return k as f64;
                }
            }
        })
        .collect();
    let m = mean(counts.iter().copied());
    let sd =
        (counts.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (counts.len() - 1) as f64).sqrt();
    let se = sd / (counts.len() as f64).sqrt();
    let finite = expected_projections_spherical(gamma, c, Some(p))
        .unwrap()
        .value;
    let asym = expected_projections_spherical(gamma, c, None)
        .unwrap()
        .value;
    let pass = m <= 9.24 && (m - asym).abs() <= 3.0 * se && (asym - 7.34).abs() < 0.01;
    report(
        "C3",
        pass,
        format!(
            "mean {m:.3} (se {se:.3}) over 500 trials; finite-p bound {finite:.3}, asymptotic {asym:.3} in {:.1?}",
            t.elapsed()
        ),
    );
}

#[test]
fn c04_accuracy_with_fixed_budget() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let cfg = ExperimentConfig {
        p: vec![3, 100],
        n: 10_000,
        c: vec![0.5, 1.0, 1.5, 2.0],
        budget: 50,
        repeats: 10,
        seed: 404,
        w: 0.5,
        ..ExperimentConfig::defaults(ExperimentKind::AccVsSep)
    };
    let rows = acc_vs_sep(&cfg).unwrap();
    let mut cells: BTreeMap<(usize, u64), Vec<f64>> = BTreeMap::new();
    for r in &rows {
        cells
            .entry((r.p, r.c.to_bits()))
            .or_default()
            .push(r.true_error);
    }
    let mut lines = Vec::new();
    let mut pass = true;
    for ((p, cb), errs) in &cells {
        let c = f64::from_bits(*cb);
        let m = mean(errs.iter().copied());
        let hi = q(c) + 0.02;
        let lo = q(c * (*p as f64).sqrt() / 2.0) - 0.005;
        let ok = m <= hi && m >= lo;
        pass &= ok;
        lines.push(format!(
            "p={p} c={c}: {m:.4} in [{lo:.4}, {hi:.4}] {}",
            if ok { "ok" } else { "out" }
        ));
    }
    report(
        "C4",
        pass,
        format!("{} in {:.1?}", lines.join("; "), t.elapsed()),
    );
}

#[test]
fn c05_projections_to_target_error() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let cfg = ExperimentConfig {
        p: vec![100],
        n: 10_000,
        c: vec![0.6, 0.8, 1.0, 1.5],
        error: 0.2,
        repeats: 30,
        seed: 505,
        ..ExperimentConfig::defaults(ExperimentKind::ProjVsSep)
    };
    let rows = proj_vs_sep(&cfg).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for &c in &cfg.c {
        let cell: Vec<_> = rows.iter().filter(|r| r.c == c).collect();
        let m = mean(cell.iter().map(|r| r.projections as f64));
        let censored = cell.iter().filter(|r| r.censored).count();
        let bound = cell[0].bound_finite_p;
        pass &= m <= bound;
        lines.push(format!(
            "c={c}: mean {m:.2} <= {bound:.2} ({censored} censored)"
        ));
    }
    report(
        "C5",
        pass,
        format!("{} in {:.1?}", lines.join("; "), t.elapsed()),
    );
}

#[test]
fn c06_rank_controlled_projection_count() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let cfg = ExperimentConfig {
        p: vec![200],
        n: 5000,
        c: vec![0.5],
        error: 0.04,
        repeats: 20,
        seed: 606,
        zeta: vec![1.0 / 30.0, 0.1, 1.0],
        ..ExperimentConfig::defaults(ExperimentKind::RankProj)
    };
    let rows = rank_proj(&cfg).unwrap();
    let mut means = Vec::new();
    let mut pass = true;
    let mut lines = Vec::new();
    for &z in &cfg.zeta {
        let cell: Vec<_> = rows.iter().filter(|r| r.zeta == z).collect();
        let m = mean(cell.iter().map(|r| r.projections as f64));
        let bound = cell[0].bound_rank;
        pass &= m <= bound;
        means.push(m);
        lines.push(format!(
            "r/p={:.3}: mean {m:.2} <= {bound:.2} ({} censored)",
            cell[0].r_over_p,
            cell.iter().filter(|r| r.censored).count()
        ));
    }
    let decreasing = means.windows(2).all(|w| w[0] < w[1]);
    report(
        "C6",
        pass && decreasing,
        format!(
            "{}; ordered by r: {decreasing} in {:.1?}",
            lines.join("; "),
            t.elapsed()
        ),
    );
}

#[test]
fn c07_kgmm_pairwise_failure() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let (p, k, c) = (1000usize, 3usize, 1.0);
    let spec = make_simplex_spec(p, k, c, 1.0).unwrap();
    let gamma_min = 0.1 * c;
    let trials = 100_000u64;
    let failures = (0..trials)
        .filter(|&i| {
            let a = sample_direction(p, &RngStream::new(707, i)).unwrap();
            (0..k).any(|x| {
                (x + 1..k).any(|y| {
                    separability_1d(&projected_mixture(&spec, &a, x, y).unwrap()) < gamma_min
                })
            })
        })
        .count();
    let emp = failures as f64 / trials as f64;
    let se = (emp * (1.0 - emp) / trials as f64).sqrt();
    let bound = kgmm_failure_bound(gamma_min, c, k, p).unwrap().value;
    report(
        "C7",
        emp <= bound + 3.0 * se,
        format!(
            "empirical {emp:.4} (se {se:.4}) vs bound {bound:.4} in {:.1?}",
            t.elapsed()
        ),
    );
}

fn quadrature_bayes_error(mix: &Mixture1D) -> f64 {
    let lo = mix.mu1.min(mix.mu2) - 12.0 * mix.sigma1.max(mix.sigma2);
    let hi = mix.mu1.max(mix.mu2) + 12.0 * mix.sigma1.max(mix.sigma2);
    let steps = 200_000;
    let h = (hi - lo) / steps as f64;
    let f = |x: f64| {
        let a = mix.w * normal_pdf((x - mix.mu1) / mix.sigma1) / mix.sigma1;
        let b = (1.0 - mix.w) * normal_pdf((x - mix.mu2) / mix.sigma2) / mix.sigma2;
        a.min(b)
    };
    (0..steps)
        .map(|i| f(lo + (i as f64 + 0.5) * h))
        .sum::<f64>()
        * h
}

#[test]
fn c08_small_sample_suite() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();

    let mut lower_ok = true;
    let mut min_slack = f64::INFINITY;
    for w in [0.05, 0.1, 0.2, 0.3, 0.5] {
        for gamma in [0.25, 0.5, 1.0, 2.0] {
            let mix = Mixture1D::new(0.0, 2.0 * gamma, 1.0, 1.0, w).unwrap();
            let e_opt = bayes_error(&mix);
            assert!(
                (e_opt - quadrature_bayes_error(&mix)).abs() < 1e-7,
                "w={w} gamma={gamma}"
            );
            let lb = bayes_error_lower_bound(w, gamma).unwrap().value;
            lower_ok &= e_opt >= lb;
            min_slack = min_slack.min(e_opt - lb);
        }
    }

    let discard_trials = 200u64;
    let discarded = (0..discard_trials)
        .filter(|&i| {
            let mix = Mixture1D::new(0.0, 0.2, 1.0, 1.0, 0.5).unwrap();
            let xs = sample_mixture(&mix, 10_000, &RngStream::new(808, i));
            separability_1d(&fit(&xs, Method::Mom).unwrap().fitted) < 0.5
        })
        .count();
    let discard_rate = discarded as f64 / discard_trials as f64;

    let truth = Mixture1D::new(0.0, 2.0, 1.0, 1.0, 0.5).unwrap();
    let gap = (truth.mu2 - truth.mu1).abs();
    let eps = 0.05;
    let accurate = (0..100u64)
        .filter(|&i| {
            let xs = sample_mixture(&truth, 10_000, &RngStream::new(809, i));
            let f = fit(&xs, Method::Mom).unwrap().fitted;
            let f = if f.mu1 <= f.mu2 { f } else { f.swapped() };
            (f.mu1 - truth.mu1).abs() <= eps * gap
                && (f.mu2 - truth.mu2).abs() <= eps * gap
                && (f.sigma1.powi(2) - truth.sigma1.powi(2)).abs() <= eps * gap * gap
                && (f.sigma2.powi(2) - truth.sigma2.powi(2)).abs() <= eps * gap * gap
                && (f.w - truth.w).abs() <= eps
        })
        .count();
    let accuracy_rate = accurate as f64 / 100.0;

    report(
        "C8",
        lower_ok && discard_rate >= 0.95 && accuracy_rate >= 0.95,
        format!(
            "(a) lower bounds hold: {lower_ok} (min slack {min_slack:.2e}); (b) discarded {discard_rate:.3}; \
             (c) accurate fits {accuracy_rate:.2} in {:.1?}",
            t.elapsed()
        ),
    );
}

fn best_true_error(trials: &[ProjectionTrial]) -> f64 {
    trials
        .iter()
        .min_by(|a, b| a.estimated_error.total_cmp(&b.estimated_error))
        .and_then(|t| t.true_error)
        .unwrap()
}

#[test]
fn c09_non_gaussian_components() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let spec = make_spherical_spec(1000, 1.0, 1.0, 0.5).unwrap();
    let mut uniform = Vec::new();
    let mut gaussian = Vec::new();
    for rep in 0..10u64 {
        let cfg = ClusterConfig {
            seed: 9000 + rep,
            ..ClusterConfig::new(0.2, 50)
        };
        let u =
            sample_nongaussian_dataset(&spec, Shape::Uniform, 10_000, &RngStream::new(909, rep))
                .unwrap();
        uniform.push(best_true_error(&scan_projections(&u, &cfg).unwrap()));
        drop(u);
        let g = sample_dataset(&spec, 10_000, &RngStream::new(910, rep)).unwrap();
        gaussian.push(best_true_error(&scan_projections(&g, &cfg).unwrap()));
    }
    let (mu, mg) = (mean(uniform), mean(gaussian));
    report(
        "C9",
        (mu - mg).abs() <= 0.02,
        format!("uniform {mu:.4} vs gaussian {mg:.4} in {:.1?}", t.elapsed()),
    );
}

fn time_scan(n: usize, p: usize, seed: u64) -> Duration {
    let spec = make_spherical_spec(p, 1.0, 1.0, 0.5).unwrap();
    let data = sample_dataset(&spec, n, &RngStream::new(seed, 0)).unwrap();
    let cfg = ClusterConfig {
        learner: Method::Mom,
        seed,
        ..ClusterConfig::new(0.01, 20)
    };
    (0..3)
        .map(|_| {
            let t = Instant::now();
            scan_projections(&data, &cfg).unwrap();
            t.elapsed()
        })
        .min()
        .unwrap()
}

#[test]
fn c10_linear_cost_in_n_and_p() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let (n, p) = (100_000, 1000);
    let base = time_scan(n, p, 1010).as_secs_f64();
    let double_n = time_scan(2 * n, p, 1011).as_secs_f64() / base;
    let double_p = time_scan(n, 2 * p, 1012).as_secs_f64() / base;
    let ok = |r: f64| (1.7..=2.3).contains(&r);
    report(
        "C10",
        ok(double_n) && ok(double_p),
        format!(
            "base {base:.3}s, 2n ratio {double_n:.2}, 2p ratio {double_p:.2} in {:.1?}",
            t.elapsed()
        ),
    );
}
