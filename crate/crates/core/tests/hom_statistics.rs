use sfwm::hom::{
    bootstrap_sigmas, default_thetas, expected_counts, fit_purity, normalize_dataset, simulate_counts, HomDataset,
    HomModelParams, SimulationRates,
};

const DURATION_S: f64 = 100.0;
const REP_RATE_HZ: f64 = 76e6;

fn rates() -> SimulationRates {
    SimulationRates {
        two_fold_means: [1.2e7, 1.1e7, 1.0e7, 1.3e7],
        four_fold_scale: 1.0,
    }
}

fn thetas() -> Vec<f64> {
    default_thetas(13)
}

#[test]
fn simulated_counts_average_to_their_means() {
    let truth = HomModelParams::new(0.86, 0.05).unwrap();
    let mean = expected_counts(&truth, &thetas(), &rates(), DURATION_S, REP_RATE_HZ).unwrap();
    let n = 400;
    let mut sums = vec![[0.0; 5]; mean.rows.len()];
    for seed in 0..n {
        let d = simulate_counts(&truth, &thetas(), &rates(), DURATION_S, REP_RATE_HZ, seed).unwrap();
        for (s, r) in sums.iter_mut().zip(&d.rows) {
            for (k, v) in [r.four_fold, r.ab, r.cd, r.ad, r.bc].into_iter().enumerate() {
                s[k] += v;
            }
        }
    }
    for (s, r) in sums.iter().zip(&mean.rows) {
        for (k, mu) in [r.four_fold, r.ab, r.cd, r.ad, r.bc].into_iter().enumerate() {
            let avg = s[k] / n as f64;
            // Poisson: the sample mean has standard error sqrt(mu / n)
            assert!((avg - mu).abs() < 5.0 * (mu / n as f64).sqrt(), "column {k}: {avg} vs {mu}");
        }
    }
}

#[test]
fn refit_of_fitted_model_is_self_consistent() {
    let truth = HomModelParams::new(0.821, 0.2).unwrap();
    let data = simulate_counts(&truth, &thetas(), &rates(), DURATION_S, REP_RATE_HZ, 3).unwrap();
    let fit = fit_purity(&data).unwrap();
    let model = HomModelParams::new(fit.p, fit.chi).unwrap();
    let again = fit_purity(&expected_counts(&model, &thetas(), &rates(), DURATION_S, REP_RATE_HZ).unwrap()).unwrap();
    assert!((again.p - fit.p).abs() < fit.sigma_p);
    assert!((again.chi - fit.chi).abs() < fit.sigma_chi.unwrap());
    assert!((again.p - fit.p).abs() < 1e-6);
}

#[test]
fn normalized_points_scatter_like_their_sigmas() {
    let truth = HomModelParams::new(0.821, 0.1).unwrap();
    let mut chi2 = 0.0;
    let mut n = 0;
    for seed in 0..50 {
        let d = simulate_counts(&truth, &thetas(), &rates(), DURATION_S, REP_RATE_HZ, seed).unwrap();
        for pt in normalize_dataset(&d, truth.chi).points {
            let model = sfwm::hom::four_fold_probability(pt.theta_rad, &truth);
            chi2 += ((pt.p4 - model) / pt.sigma).powi(2);
            n += 1;
        }
    }
    let per_point = chi2 / n as f64;
    assert!((per_point - 1.0).abs() < 0.15, "{per_point}");
}

#[test]
fn bootstrap_agrees_with_curvature_sigma() {
    let truth = HomModelParams::new(0.821, 0.2).unwrap();
    let data = simulate_counts(&truth, &thetas(), &rates(), DURATION_S, REP_RATE_HZ, 9).unwrap();
    let fit = fit_purity(&data).unwrap();
    let (sp, _) = bootstrap_sigmas(&data, 200, 1).unwrap();
    let ratio = sp / fit.sigma_p;
    assert!((0.75..1.33).contains(&ratio), "bootstrap {sp} vs {}", fit.sigma_p);
    assert_eq!(bootstrap_sigmas(&data, 20, 5).unwrap(), bootstrap_sigmas(&data, 20, 5).unwrap());
}

#[test]
fn csv_file_round_trip_preserves_fit() {
    let truth = HomModelParams::new(0.9, 0.15).unwrap();
    let data = simulate_counts(&truth, &thetas(), &rates(), DURATION_S, REP_RATE_HZ, 21).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hom.csv");
    std::fs::write(&path, data.to_csv_string().unwrap()).unwrap();
    let back = HomDataset::read_csv(&path, REP_RATE_HZ).unwrap();
    let (a, b) = (fit_purity(&data).unwrap(), fit_purity(&back).unwrap());
    assert!((a.p - b.p).abs() < 1e-9 && (a.chi - b.chi).abs() < 1e-9);
}
