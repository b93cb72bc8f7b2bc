use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Normal, StandardNormal};

use projclust::bounds::{
    expected_projections_spherical, kgmm_failure_bound, optimize_tau, spherical_direction_prob,
};
use projclust::datagen::make_spherical_spec;
use projclust::experiment::direction_separabilities;
use projclust::learner1d::{bayes_error, fit, Method};
use projclust::mathkit::{
    chi2_lower_tail_exponent, chi2_upper_tail_exponent, q_function, q_lower_bound,
};
use projclust::projection::{projected_mixture, separability_1d};
use projclust::{
    c_separability, lambda_max, CovarianceSpec, Matrix, Mixture1D, MixtureSpec, RngStream,
};

fn orthogonal(p: usize, stream: &RngStream) -> DMatrix<f64> {
    let mut rng = stream.rng();
    let g = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

fn random_spec(p: usize, stream: &RngStream) -> MixtureSpec {
    let mut rng = stream.rng();
    let means = (0..2)
        .map(|_| {
            (0..p)
                .map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0)
                .collect()
        })
        .collect();
    let covs = (0..2)
        .map(|i| CovarianceSpec::Eigen {
            eigenvalues: (0..p).map(|_| rng.random_range(0.1..4.0)).collect(),
            basis: Some(Matrix::from_nalgebra(&orthogonal(
                p,
                &stream.substream(10 + i),
            ))),
        })
        .collect();
    MixtureSpec::new(means, covs, vec![0.4, 0.6]).unwrap()
}

fn rotate(spec: &MixtureSpec, r: &DMatrix<f64>) -> MixtureSpec {
    let means = spec
        .means
        .iter()
        .map(|m| {
            (r * nalgebra::DVector::from_column_slice(m))
                .as_slice()
                .to_vec()
        })
        .collect();
    let covs = spec
        .covs
        .iter()
        .map(|c| match c {
            CovarianceSpec::Eigen {
                eigenvalues,
                basis: Some(b),
            } => CovarianceSpec::Eigen {
                eigenvalues: eigenvalues.clone(),
                basis: Some(Matrix::from_nalgebra(&(r * b.to_nalgebra()))),
            },
            _ => unreachable!(),
        })
        .collect();
    MixtureSpec::new(means, covs, spec.weights.clone()).unwrap()
}

fn dense(cov: &CovarianceSpec) -> CovarianceSpec {
    match cov {
        CovarianceSpec::Eigen {
            eigenvalues,
            basis: Some(b),
        } => {
            let b = b.to_nalgebra();
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(eigenvalues));
            let full = &b * d * b.transpose();
            CovarianceSpec::Full {
                matrix: Matrix::from_nalgebra(&((&full + full.transpose()) * 0.5)),
            }
        }
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn separability_is_symmetric_and_rotation_invariant(seed in any::<u64>(), p in 2usize..9) {
        let spec = random_spec(p, &RngStream::new(seed, 0));
        let rotated = rotate(&spec, &orthogonal(p, &RngStream::new(seed, 1)));
        let c = c_separability(&spec, 0, 1).unwrap();
        prop_assert_eq!(c, c_separability(&spec, 1, 0).unwrap());
        prop_assert!((c - c_separability(&rotated, 0, 1).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn lambda_max_agrees_between_dense_and_eigen_forms(seed in any::<u64>(), p in 1usize..12) {
        let spec = random_spec(p, &RngStream::new(seed, 0));
        for cov in &spec.covs {
            let a = lambda_max(cov).unwrap();
            let b = lambda_max(&dense(cov)).unwrap();
            prop_assert!((a - b).abs() <= 1e-8 * a.max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn projected_separability_is_rotation_and_scale_invariant(seed in any::<u64>(), p in 2usize..9, scale in -50.0f64..50.0) {
        prop_assume!(scale.abs() > 1e-3);
        let spec = random_spec(p, &RngStream::new(seed, 0));
        let r = orthogonal(p, &RngStream::new(seed, 1));
        let rotated = rotate(&spec, &r);
        let a: Vec<f64> = {
            let mut rng = RngStream::new(seed, 2).rng();
            (0..p).map(|_| rng.sample(StandardNormal)).collect()
        };
        let ra = (&r * nalgebra::DVector::from_column_slice(&a)).as_slice().to_vec();
        let scaled: Vec<f64> = a.iter().map(|x| x * scale).collect();
        let g = separability_1d(&projected_mixture(&spec, &a, 0, 1).unwrap());
        let g_rot = separability_1d(&projected_mixture(&rotated, &ra, 0, 1).unwrap());
        let g_scaled = separability_1d(&projected_mixture(&spec, &scaled, 0, 1).unwrap());
        prop_assert!((g - g_rot).abs() <= 1e-9 * g.max(1.0));
        prop_assert!((g - g_scaled).abs() <= 1e-12 * g.max(1.0));
    }

    #[test]
    fn q_lower_bound_stays_below_q(x in 1e-6f64..10.0) {
        prop_assert!(q_lower_bound(x).unwrap() < q_function(x).unwrap());
    }
}

#[test]
fn chi_square_tails_respect_exponential_bounds() {
    let draws = 1_000_000;
    for (k, dof) in [10u64, 100, 1000].into_iter().enumerate() {
        let dist = ChiSquared::new(dof as f64).unwrap();
        let mut rng = RngStream::new(31, k as u64).rng();
        let ratios: Vec<f64> = (0..draws)
            .map(|_| dist.sample(&mut rng) / dof as f64)
            .collect();
        for tau in [0.05, 0.1, 0.5] {
            let upper = ratios.iter().filter(|r| **r >= 1.0 + tau).count() as f64 / draws as f64;
            let lower = ratios.iter().filter(|r| **r <= 1.0 - tau).count() as f64 / draws as f64;
            let ub = chi2_upper_tail_exponent(dof, tau).unwrap();
            let lb = chi2_lower_tail_exponent(dof, tau).unwrap();
            assert!(upper <= ub, "dof {dof} tau {tau}: upper {upper} > {ub}");
            assert!(lower <= lb, "dof {dof} tau {tau}: lower {lower} > {lb}");
        }
    }
}

#[test]
fn separable_direction_fraction_near_one_c() {
    let spec = make_spherical_spec(1000, 1.0, 1.0, 0.5).unwrap();
    let gammas = direction_separabilities(&spec, 41, 100_000).unwrap();
    let emp = gammas.iter().filter(|g| **g > 1.0).count() as f64 / gammas.len() as f64;
    let (_, bound) = optimize_tau(|tau| spherical_direction_prob(1.0, 1.0, 1000, tau)).unwrap();
    assert!(emp > 0.25 && emp < 0.45, "{emp}");
    assert!(emp >= bound.value, "{emp} < {}", bound.value);
}

#[test]
fn two_component_failure_bound_holds_on_grid() {
    for p in [100usize, 1000] {
        let spec = make_spherical_spec(p, 1.0, 1.0, 0.5).unwrap();
        let gammas = direction_separabilities(&spec, 43 + p as u64, 100_000).unwrap();
        let n = gammas.len() as f64;
        for ratio in [0.25, 0.5, 1.0, 1.5, 2.0] {
            let emp = gammas.iter().filter(|g| **g < ratio).count() as f64 / n;
            let se = (emp * (1.0 - emp) / n).sqrt();
            let bound = kgmm_failure_bound(ratio, 1.0, 2, p).unwrap().value;
            assert!(
                emp <= bound + 3.0 * se,
                "p {p} ratio {ratio}: {emp} > {bound}"
            );
        }
    }
}

#[test]
fn asymptotic_projection_count_increases_with_gamma() {
    let counts: Vec<f64> = (1..=40)
        .map(|i| {
            expected_projections_spherical(0.1 * i as f64, 1.0, None)
                .unwrap()
                .value
        })
        .collect();
    assert!(counts.windows(2).all(|w| w[1] > w[0]));
    assert!(counts.iter().all(|c| *c >= 1.0));
}

fn draw(mix: &Mixture1D, n: usize, stream: &RngStream) -> Vec<f64> {
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

fn rel_close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-6 * scale
}

#[test]
fn fits_are_shift_and_scale_equivariant() {
    let truth = Mixture1D::new(-1.0, 2.5, 0.8, 0.8, 0.35).unwrap();
    let xs = draw(&truth, 100_000, &RngStream::new(51, 0));
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 7.0).collect();
    for method in [Method::Mom, Method::Em, Method::MomEm] {
        let f = fit(&xs, method).unwrap().fitted;
        let g = fit(&ys, method).unwrap().fitted;
        let s = 3.0 * f.sigma1.max(f.sigma2);
        assert!(
            rel_close(g.mu1, 3.0 * f.mu1 - 7.0, s),
            "{method}: {f:?} {g:?}"
        );
        assert!(rel_close(g.mu2, 3.0 * f.mu2 - 7.0, s), "{method}");
        assert!(rel_close(g.sigma1, 3.0 * f.sigma1, s), "{method}");
        assert!(rel_close(g.sigma2, 3.0 * f.sigma2, s), "{method}");
        assert!(rel_close(g.w, f.w, 1.0), "{method}");
        assert!(
            rel_close(
                separability_1d(&g),
                separability_1d(&f),
                separability_1d(&f)
            ),
            "{method}"
        );
        assert!(
            rel_close(bayes_error(&g), bayes_error(&f), bayes_error(&f)),
            "{method}"
        );
    }
}

#[test]
fn moment_fit_error_shrinks_like_inverse_root_n() {
    let truth = Mixture1D::new(0.0, 3.0, 1.0, 1.0, 0.5).unwrap();
    let mean_error = |n: usize, tag: u64| {
        (0..50u64)
            .map(|i| {
                let f = fit(&draw(&truth, n, &RngStream::new(61 + tag, i)), Method::Mom)
                    .unwrap()
                    .fitted;
                let f = if f.mu1 <= f.mu2 { f } else { f.swapped() };
                (f.mu1 - truth.mu1).abs() + (f.mu2 - truth.mu2).abs()
            })
            .sum::<f64>()
            / 50.0
    };
    let ratio = mean_error(10_000, 0) / mean_error(40_000, 1);
    assert!((1.0..=4.0).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn chi_square_bounds_dominate_exact_tails() {
    use statrs::distribution::{ChiSquared as ExactChiSquared, ContinuousCDF};
    for dof in [1u64, 2, 10, 100, 1000, 10_000] {
        let exact = ExactChiSquared::new(dof as f64).unwrap();
        for tau in [0.01, 0.05, 0.1, 0.3, 0.5, 0.9] {
            let d = dof as f64;
            let upper = exact.sf(d * (1.0 + tau));
            let lower = exact.cdf(d * (1.0 - tau));
            assert!(
                upper <= chi2_upper_tail_exponent(dof, tau).unwrap(),
                "dof {dof} tau {tau}"
            );
            assert!(
                lower <= chi2_lower_tail_exponent(dof, tau).unwrap(),
                "dof {dof} tau {tau}"
            );
        }
    }
}
