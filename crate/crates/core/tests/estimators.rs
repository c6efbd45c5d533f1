use num_complex::Complex;
use ofdmest_core::channel::{
    draw_realization, freq_correlation, freq_response, time_correlation, ChannelModel, Fading, Tap,
};
use ofdmest_core::estimators::{
    apply_filter, lmmse_full, lmmse_precompute, lowrank_precompute, ls_estimate, mmse_estimate, FilterKind,
};
use ofdmest_core::modem::{Constellation, ConstellationKind, OfdmConfig};
use ofdmest_core::numerics::{gaussian_pair_stream, HermitianMatrix, Matrix, SeededStream};
use ofdmest_core::reference::{dense_mmse, gauss_jordan_inverse};
use ofdmest_core::scalar::{max_abs_diff, norm_sqr};
use ofdmest_core::simkit::{
    EstimatorKind, FrameScheme, NoiseSpec, PilotMode, PreparedEstimator, SimOptions, Simulator,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex<f64>;

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    (0..n)
        .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize, cols: usize) -> HermitianMatrix<f64> {
    let a = Matrix::from_fn(n, cols, |_, _| {
        C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    HermitianMatrix::new(a.matmul(&a.adjoint()).unwrap()).unwrap()
}

fn random_points(rng: &mut ChaCha8Rng, c: &Constellation<f64>, n: usize) -> Vec<C> {
    (0..n)
        .map(|_| c.points()[rng.random_range(0..c.points().len())])
        .collect()
}

fn random_model(rng: &mut ChaCha8Rng, taps: usize, max_delay: usize) -> ChannelModel<f64> {
    let mut delays: Vec<usize> = (0..=max_delay).collect();
    for i in (1..delays.len()).rev() {
        delays.swap(i, rng.random_range(0..=i));
    }
    let mut delays: Vec<usize> = delays[..taps].to_vec();
    delays.sort_unstable();
    let taps = delays
        .into_iter()
        .map(|d| Tap {
            delay: d,
            power: rng.random_range(0.1..1.0),
            doppler: 0.0,
        })
        .collect();
    ChannelModel::normalized(taps, Fading::Rayleigh).unwrap()
}

#[test]
fn ls_error_is_noise_over_pilot() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = Constellation::<f64>::qam16();
    let h = random_vec(&mut rng, 32);
    let x = random_points(&mut rng, &c, 32);
    let w = random_vec(&mut rng, 32);
    let y: Vec<C> = (0..32).map(|k| h[k] * x[k] + w[k]).collect();
    let est = ls_estimate(&y, &x).unwrap();
    let err: Vec<C> = est.iter().zip(&h).map(|(a, b)| a - b).collect();
    let expect: Vec<C> = w.iter().zip(&x).map(|(a, b)| a / b).collect();
    assert!(max_abs_diff(&err, &expect) < 1e-12);
    let noiseless: Vec<C> = (0..32).map(|k| h[k] * x[k]).collect();
    assert!(max_abs_diff(&ls_estimate(&noiseless, &x).unwrap(), &h) < 1e-10);
}

#[test]
fn full_lmmse_on_flat_correlation_averages() {
    // R = 11ᵀ, |X| = 1: R(R + σ²I)^{-1}h = (Σh/(N + σ²))·1
    let n = 4;
    let r = HermitianMatrix::<f64>::from_upper_fn(n, |_, _| C::new(1.0, 0.0));
    let h = vec![C::new(1.0, 0.5), C::new(-0.2, 0.1), C::new(0.7, -0.9), C::new(0.3, 0.3)];
    let x = vec![C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(-1.0, 0.0), C::new(0.6, -0.8)];
    let sigma2 = 0.5;
    let out = lmmse_full(&h, &r, sigma2, &x).unwrap();
    let avg = h.iter().sum::<C>() / (n as f64 + sigma2);
    assert!(max_abs_diff(&out, &vec![avg; n]) < 1e-12);
}

#[test]
fn full_equals_simplified_for_constant_modulus_pilots() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 16;
    let r = freq_correlation(&random_model(&mut rng, 4, 6), n);
    let x: Vec<C> = (0..n)
        .map(|_| Complex::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    for sigma2 in [1.0, 0.1, 1e-3] {
        let h = random_vec(&mut rng, n);
        let full = lmmse_full(&h, &r, sigma2, &x).unwrap();
        let simple = apply_filter(&lmmse_precompute(&r, 1.0 / sigma2, 1.0).unwrap(), &h).unwrap();
        assert!(max_abs_diff(&full, &simple) < 1e-10, "sigma2={sigma2}");
    }
}

#[test]
fn simplified_filter_defining_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = random_psd(&mut rng, 8, 8);
    let (snr, beta) = (10.0, 17.0 / 9.0);
    let f = lmmse_precompute(&r, snr, beta).unwrap();
    let lhs = f.to_matrix().matmul(r.shifted(beta / snr).as_matrix()).unwrap();
    assert!(lhs.sub(r.as_matrix()).unwrap().max_abs() < 1e-9);
}

#[test]
fn simplified_filter_tends_to_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let r = random_psd(&mut rng, 6, 6).shifted(0.5);
    let f = lmmse_precompute(&r, 1e12, 1.0).unwrap();
    assert!(f.to_matrix().sub(&Matrix::identity(6)).unwrap().max_abs() < 1e-6);
    let h = random_vec(&mut rng, 6);
    let lr = lowrank_precompute(&r, 1e12, 1.0, 6).unwrap();
    assert!(max_abs_diff(&apply_filter(&lr, &h).unwrap(), &h) < 1e-6);
}

#[test]
fn zero_snr_limit_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r = random_psd(&mut rng, 6, 3);
    let h = random_vec(&mut rng, 6);
    for f in [
        lmmse_precompute(&r, 1e-30, 1.0).unwrap(),
        lowrank_precompute(&r, 1e-30, 1.0, 4).unwrap(),
    ] {
        assert!(norm_sqr(&apply_filter(&f, &h).unwrap()).sqrt() < 1e-20);
    }
}

#[test]
fn full_rank_lowrank_equals_simplified() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (n, model) in [
        (32usize, random_model(&mut rng, 4, 7)),
        (16, random_model(&mut rng, 16, 15)),
    ] {
        let r = freq_correlation(&model, n);
        let dense = lmmse_precompute(&r, 31.6, 17.0 / 9.0).unwrap();
        let factored = lowrank_precompute(&r, 31.6, 17.0 / 9.0, n).unwrap();
        for _ in 0..5 {
            let h = random_vec(&mut rng, n);
            let d = max_abs_diff(
                &apply_filter(&dense, &h).unwrap(),
                &apply_filter(&factored, &h).unwrap(),
            );
            assert!(d < 1e-8, "n={n} diff={d}");
        }
    }
}

#[test]
fn rank_one_truncation_is_exact() {
    let r = HermitianMatrix::<f64>::from_upper_fn(8, |_, _| C::new(1.0, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = random_vec(&mut rng, 8);
    let one = apply_filter(&lowrank_precompute(&r, 5.0, 1.0, 1).unwrap(), &h).unwrap();
    let all = apply_filter(&lowrank_precompute(&r, 5.0, 1.0, 8).unwrap(), &h).unwrap();
    assert!(max_abs_diff(&one, &all) < 1e-12);
}

#[test]
fn factored_application_matches_explicit_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let r = random_psd(&mut rng, 12, 12);
    let f = lowrank_precompute(&r, 3.0, 17.0 / 9.0, 5).unwrap();
    let FilterKind::LowRank { basis, weights, .. } = f.kind() else {
        panic!("expected factored filter")
    };
    // D_p · diag(δ) · D_p^H built explicitly
    let delta = Matrix::from_diagonal(&weights.iter().map(|&d| C::new(d, 0.0)).collect::<Vec<_>>());
    let explicit = basis.matmul(&delta).unwrap().matmul(&basis.adjoint()).unwrap();
    for _ in 0..10 {
        let h = random_vec(&mut rng, 12);
        let d = max_abs_diff(&apply_filter(&f, &h).unwrap(), &explicit.mul_vec(&h).unwrap());
        assert!(d < 1e-10);
    }
}

#[test]
fn delta_formula_and_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let r = random_psd(&mut rng, 10, 4);
    let (snr, beta) = (7.0, 17.0 / 9.0);
    let f = lowrank_precompute(&r, snr, beta, 10).unwrap();
    let FilterKind::LowRank {
        weights, eigenvalues, ..
    } = f.kind()
    else {
        panic!()
    };
    for (d, l) in weights.iter().zip(eigenvalues) {
        let l = l.max(0.0);
        assert!((d * (l + beta / snr) - l).abs() < 1e-12);
        assert!((0.0..1.0).contains(d));
    }
    assert!(weights.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn lowrank_near_lossless_beyond_delay_spread() {
    // 4 taps, N = 64, Ng = 16: rank Ng+1 captures all channel energy
    let n = 64;
    let guard = 16;
    let model = ChannelModel::<f64>::reference(0.0);
    let r = freq_correlation(&model, n);
    let x = random_points(&mut ChaCha8Rng::seed_from_u64(10), &Constellation::qam16(), n);
    let beta = 17.0 / 9.0;
    for snr_db in [5.0f64, 20.0] {
        let snr = 10f64.powf(snr_db / 10.0);
        let full = lmmse_precompute(&r, snr, beta).unwrap();
        let lr = lowrank_precompute(&r, snr, beta, guard + 1).unwrap();
        let (mut mse_full, mut mse_lr) = (0.0, 0.0);
        for t in 0..2000u64 {
            let h = freq_response(&draw_realization(&model, SeededStream::new(11, t)), n);
            let w = gaussian_pair_stream::<f64>(SeededStream::new(12, t), n, 1.0 / snr).unwrap();
            let y: Vec<C> = (0..n).map(|k| h[k] * x[k] + w[k]).collect();
            let ls = ls_estimate(&y, &x).unwrap();
            let e1 = apply_filter(&full, &ls).unwrap();
            let e2 = apply_filter(&lr, &ls).unwrap();
            mse_full += e1.iter().zip(&h).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
            mse_lr += e2.iter().zip(&h).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        }
        let rel = (mse_lr - mse_full).abs() / mse_full;
        assert!(rel < 1e-6, "snr {snr_db} dB: relative MSE gap {rel}");
    }
}

#[test]
fn rank_monotone_mse() {
    let n = 32;
    let model = ChannelModel::<f64>::normalized(
        (0..12)
            .map(|d| Tap {
                delay: d,
                power: (-(d as f64) / 3.0).exp(),
                doppler: 0.0,
            })
            .collect(),
        Fading::Rayleigh,
    )
    .unwrap();
    let r = freq_correlation(&model, n);
    let snr = 10.0;
    let filters: Vec<_> = (1..=n).map(|p| lowrank_precompute(&r, snr, 1.0, p).unwrap()).collect();
    let mut mse = vec![0.0; n];
    let trials = 10_000u64;
    for t in 0..trials {
        let h = freq_response(&draw_realization(&model, SeededStream::new(13, t)), n);
        let w = gaussian_pair_stream::<f64>(SeededStream::new(14, t), n, 1.0 / snr).unwrap();
        let ls: Vec<C> = h.iter().zip(&w).map(|(a, b)| a + b).collect();
        for (p, f) in filters.iter().enumerate() {
            let e = apply_filter(f, &ls).unwrap();
            mse[p] += e.iter().zip(&h).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / (n as u64 * trials) as f64;
        }
    }
    for p in 1..n {
        assert!(
            mse[p] <= mse[p - 1] * (1.0 + 1e-3),
            "rank {} -> {}: {} > {}",
            p,
            p + 1,
            mse[p],
            mse[p - 1]
        );
    }
    assert!(mse[n - 1] < 0.5 * mse[0]);
}

#[test]
fn mmse_zero_noise_collapses_to_ls() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let n = 16;
    let diag: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.2)).collect();
    let r = HermitianMatrix::from_real_diagonal(&diag);
    let x = random_points(&mut rng, &Constellation::qam16(), n);
    let y = random_vec(&mut rng, n);
    let out = mmse_estimate(&y, &x, &r, 0.0).unwrap();
    assert!(max_abs_diff(&out, &ls_estimate(&y, &x).unwrap()) < 1e-8);
}

#[test]
fn mmse_matches_dense_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let n = 16;
    for _ in 0..5 {
        let model = random_model(&mut rng, 4, 7);
        let r = time_correlation(&model, n).unwrap();
        let x = random_points(&mut rng, &Constellation::qam16(), n);
        let h = freq_response(&draw_realization(&model, SeededStream::new(17, rng.random())), n);
        let w = gaussian_pair_stream::<f64>(SeededStream::new(18, rng.random()), n, 0.1).unwrap();
        let y: Vec<C> = (0..n).map(|k| h[k] * x[k] + w[k]).collect();
        let fast = mmse_estimate(&y, &x, &r, 0.1).unwrap();
        let dense = dense_mmse(&y, &x, r.as_matrix(), 0.1).unwrap();
        assert!(max_abs_diff(&fast, &dense) < 1e-9);
    }
}

#[test]
fn mmse_scaled_covariance_equals_full_lmmse() {
    // with the CIR covariance scaled by N², F·R·F^H is R_HH and the two
    // formulas coincide
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let n = 16;
    let model = random_model(&mut rng, 4, 7);
    let r = time_correlation(&model, n).unwrap().scale_real((n * n) as f64);
    let x = random_points(&mut rng, &Constellation::qam16(), n);
    let y = random_vec(&mut rng, n);
    let mmse = mmse_estimate(&y, &x, &r, 0.05).unwrap();
    let full = lmmse_full(&ls_estimate(&y, &x).unwrap(), &freq_correlation(&model, n), 0.05, &x).unwrap();
    assert!(max_abs_diff(&mmse, &full) < 1e-9);
}

#[test]
fn gauss_jordan_oracle_inverts() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let a = random_psd(&mut rng, 6, 6).shifted(0.2);
    let inv = gauss_jordan_inverse(a.as_matrix()).unwrap();
    assert!(
        a.as_matrix()
            .matmul(&inv)
            .unwrap()
            .sub(&Matrix::identity(6))
            .unwrap()
            .max_abs()
            < 1e-10
    );
}

#[test]
fn simplified_filter_independent_of_pilots() {
    let cfg = OfdmConfig::new(32, 4, 2, ConstellationKind::Qam16).unwrap();
    let model = ChannelModel::<f64>::normalized(
        vec![
            Tap {
                delay: 0,
                power: 1.0,
                doppler: 0.0,
            },
            Tap {
                delay: 3,
                power: 0.5,
                doppler: 0.0,
            },
        ],
        Fading::Rayleigh,
    )
    .unwrap();
    let noise = NoiseSpec::from_snr_db(12.0).unwrap();
    let mut filters = Vec::new();
    for seed in [1u64, 2, 3] {
        let scheme = FrameScheme::new(&cfg, seed, PilotMode::Constellation);
        let sim = Simulator::new(cfg.clone(), scheme, model.clone(), SimOptions::default()).unwrap();
        for est in [EstimatorKind::Lmmse, EstimatorKind::LrLmmse] {
            match sim.prepare(est, &noise).unwrap() {
                PreparedEstimator::Filter(f) => filters.push((est, f)),
                _ => panic!(),
            }
        }
    }
    for pair in filters.chunks(2).collect::<Vec<_>>().windows(2) {
        assert_eq!(pair[0][0].1, pair[1][0].1);
        assert_eq!(pair[0][1].1, pair[1][1].1);
    }
}

proptest! {
    #[test]
    fn filters_shrink(seed in 0u64..500, n in 2usize..10, cols in 1usize..10, snr_db in -10.0f64..40.0, p in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_psd(&mut rng, n, cols);
        let h = random_vec(&mut rng, n);
        let snr = 10f64.powf(snr_db / 10.0);
        let bound = norm_sqr(&h).sqrt() * (1.0 + 1e-12);
        let dense = apply_filter(&lmmse_precompute(&r, snr, 17.0 / 9.0).unwrap(), &h).unwrap();
        prop_assert!(norm_sqr(&dense).sqrt() <= bound);
        let lr = apply_filter(&lowrank_precompute(&r, snr, 17.0 / 9.0, p.min(n)).unwrap(), &h).unwrap();
        prop_assert!(norm_sqr(&lr).sqrt() <= bound);
    }
}
