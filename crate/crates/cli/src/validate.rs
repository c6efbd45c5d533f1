//! Self-test: the library's oracle checks at reduced sizes, driven by a run
//! configuration.

use num_complex::Complex;
use ofdmest_core::channel::{
    apply_channel, draw_realization, freq_correlation, freq_response, ici_term, time_correlation, ChannelModel,
};
use ofdmest_core::estimators::{apply_filter, lmmse_precompute, lowrank_precompute, ls_estimate, mmse_estimate};
use ofdmest_core::modem::{ofdm_demodulate, ofdm_modulate, Constellation};
use ofdmest_core::numerics::{dft, eig_hermitian, gaussian_pair_stream, idft, SeededStream};
use ofdmest_core::reference::{dense_mmse, direct_dft};
use ofdmest_core::scalar::max_abs_diff;
use ofdmest_core::simkit::PilotMode;

use crate::config::RunConfig;

type C = Complex<f64>;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn from(name: &'static str, r: Result<String, String>) -> Self {
        match r {
            Ok(detail) => Check {
                name,
                passed: true,
                detail,
            },
            Err(detail) => Check {
                name,
                passed: false,
                detail,
            },
        }
    }
}

fn random_vec(seed: u64, stream: u64, n: usize) -> Vec<C> {
    gaussian_pair_stream(SeededStream::new(seed, stream), n, 1.0).expect("unit variance")
}

fn rel_inf(a: &[C], b: &[C]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    max_abs_diff(a, b) / scale
}

fn within(what: &str, err: f64, tol: f64) -> Result<String, String> {
    if err <= tol {
        Ok(format!("{what} {err:.3e} <= {tol:.0e}"))
    } else {
        Err(format!("{what} {err:.3e} > {tol:.0e}"))
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Runs every check; none of them stops the others.
pub fn run_checks(cfg: &RunConfig) -> Vec<Check> {
    vec![
        Check::from("no-isi-precondition", no_isi(cfg)),
        Check::from("dft-vs-direct-sum", dft_oracle(cfg)),
        Check::from("perfect-chain", perfect_chain(cfg)),
        Check::from("beta-consistency", beta_consistency(cfg)),
        Check::from("eigen-reconstruction", eigen_reconstruction(cfg)),
        Check::from("rank-concentration", rank_concentration(cfg)),
        Check::from("ls-exactness", ls_exact(cfg)),
        Check::from("full-rank-lowrank-equivalence", full_rank_equivalence(cfg)),
        Check::from("mmse-dense-oracle", mmse_oracle(cfg)),
        Check::from("ici-decomposition", ici_decomposition(cfg)),
    ]
}

fn no_isi(cfg: &RunConfig) -> Result<String, String> {
    let model = cfg.model().map_err(e2s)?;
    match model.check_guard(cfg.guard) {
        Ok(()) => Ok(format!("max delay {} <= guard {}", model.max_delay(), cfg.guard)),
        Err(e) => Err(format!("no-ISI precondition violated: {e}")),
    }
}

fn dft_oracle(cfg: &RunConfig) -> Result<String, String> {
    let x = random_vec(cfg.seed, 1, cfg.fft_size);
    let fwd = rel_inf(&dft(&x).map_err(e2s)?, &direct_dft(&x, false));
    let inv = rel_inf(&idft(&x).map_err(e2s)?, &direct_dft(&x, true));
    within("relative error", fwd.max(inv), 1e-9)
}

fn perfect_chain(cfg: &RunConfig) -> Result<String, String> {
    let c = Constellation::<f64>::new(cfg.constellation);
    let n = cfg.fft_size;
    let bits: Vec<u8> = random_vec(cfg.seed, 2, n * c.bits_per_symbol())
        .iter()
        .map(|z| (z.re > 0.0) as u8)
        .collect();
    let tx = c.map_bits(&bits).map_err(e2s)?;
    let rx = ofdm_demodulate(&ofdm_modulate(&tx, cfg.guard).map_err(e2s)?, n, cfg.guard).map_err(e2s)?;
    let errors = bits.iter().zip(c.demap_symbols(&rx)).filter(|(a, b)| **a != *b).count();
    if errors == 0 {
        Ok(format!("{} bits reproduced", bits.len()))
    } else {
        Err(format!("{errors} bit errors on an ideal link"))
    }
}

fn beta_consistency(cfg: &RunConfig) -> Result<String, String> {
    let c = Constellation::<f64>::new(cfg.constellation);
    let expected = match cfg.pilot_mode {
        PilotMode::Constellation => {
            let exact = cfg.constellation.beta_exact();
            let exact = *exact.numer() as f64 / *exact.denom() as f64;
            if (c.beta_from_points() - exact).abs() > 1e-12 {
                return Err(format!(
                    "alphabet gives {} but the exact value is {exact}",
                    c.beta_from_points()
                ));
            }
            exact
        }
        PilotMode::ConstantModulus => 1.0,
    };
    let used = cfg.beta_override.unwrap_or(cfg.scheme().map_err(e2s)?.pilot_beta);
    if (used - expected).abs() <= 1e-12 {
        Ok(format!("beta {used}"))
    } else {
        Err(format!("filters use beta {used}, pilot alphabet has {expected}"))
    }
}

fn eigen_reconstruction(cfg: &RunConfig) -> Result<String, String> {
    let r = freq_correlation(&cfg.model().map_err(e2s)?, cfg.fft_size);
    let eig = eig_hermitian(&r).map_err(e2s)?;
    let err = eig.reconstruct().sub(r.as_matrix()).map_err(e2s)?.max_abs() / r.as_matrix().max_abs();
    within("relative residual", err, 1e-9)
}

fn rank_concentration(cfg: &RunConfig) -> Result<String, String> {
    let model = cfg.model().map_err(e2s)?;
    let eig = eig_hermitian(&freq_correlation(&model, cfg.fft_size)).map_err(e2s)?;
    let rank = eig.numerical_rank(1e-10);
    let taps = model.taps().len();
    let energy = eig.cumulative_energy()[taps.min(cfg.fft_size) - 1];
    if rank == taps && energy >= 1.0 - 1e-10 {
        Ok(format!(
            "{rank} significant eigenvalues, energy {energy:.12} at k={taps}"
        ))
    } else {
        Err(format!(
            "{rank} significant eigenvalues for {taps} taps, energy {energy:.12}"
        ))
    }
}

fn static_model(cfg: &RunConfig) -> Result<ChannelModel<f64>, String> {
    Ok(cfg.model().map_err(e2s)?.with_doppler(0.0))
}

fn ls_exact(cfg: &RunConfig) -> Result<String, String> {
    let n = cfg.fft_size;
    let model = static_model(cfg)?;
    let pilots = cfg.scheme().map_err(e2s)?.pilots;
    let ofdm = cfg.ofdm().map_err(e2s)?;
    let mut worst: f64 = 0.0;
    for t in 0..8 {
        let c = draw_realization(&model, SeededStream::new(cfg.seed, 100 + t)).at(cfg.guard as u64);
        let tx = ofdm_modulate(&pilots, cfg.guard).map_err(e2s)?;
        let rx = ofdm_demodulate(&apply_channel(&tx, &c, cfg.guard).map_err(e2s)?, n, cfg.guard).map_err(e2s)?;
        let pick = |v: &[C]| ofdm.active.iter().map(|&k| v[k]).collect::<Vec<_>>();
        let est = ls_estimate(&pick(&rx), &pick(&pilots)).map_err(e2s)?;
        worst = worst.max(max_abs_diff(&est, &pick(&freq_response(&c, n))));
    }
    within("max error", worst, 1e-9)
}

fn full_rank_equivalence(cfg: &RunConfig) -> Result<String, String> {
    let active = cfg.ofdm().map_err(e2s)?.active;
    let r = &freq_correlation(&cfg.model().map_err(e2s)?, cfg.fft_size).principal_submatrix(&active);
    let n = r.dim();
    let beta = cfg.beta_override.unwrap_or(cfg.scheme().map_err(e2s)?.pilot_beta);
    let mut worst: f64 = 0.0;
    for (i, snr) in [1.0, 31.6, 1000.0].into_iter().enumerate() {
        let dense = lmmse_precompute(r, snr, beta).map_err(e2s)?;
        let factored = lowrank_precompute(r, snr, beta, n).map_err(e2s)?;
        let h = random_vec(cfg.seed, 200 + i as u64, n);
        let a = apply_filter(&dense, &h).map_err(e2s)?;
        let b = apply_filter(&factored, &h).map_err(e2s)?;
        worst = worst.max(max_abs_diff(&a, &b));
    }
    within("max difference", worst, 1e-8)
}

fn mmse_oracle(cfg: &RunConfig) -> Result<String, String> {
    let n = 16;
    let model = ChannelModel::<f64>::reference(0.0);
    let r = time_correlation(&model, n).map_err(e2s)?;
    let c = Constellation::<f64>::new(cfg.constellation);
    let x: Vec<C> = random_vec(cfg.seed, 300, n)
        .iter()
        .map(|z| c.points()[c.nearest(*z)])
        .collect();
    let y = random_vec(cfg.seed, 301, n);
    let fast = mmse_estimate(&y, &x, &r, 0.1).map_err(e2s)?;
    let dense = dense_mmse(&y, &x, r.as_matrix(), 0.1).ok_or("dense oracle is singular")?;
    within("max difference", max_abs_diff(&fast, &dense), 1e-9)
}

fn ici_decomposition(cfg: &RunConfig) -> Result<String, String> {
    let n = cfg.fft_size;
    let doppler = cfg.doppler.filter(|d| *d != 0.0).unwrap_or(0.05);
    let model = cfg.model().map_err(e2s)?.with_doppler(doppler);
    model.check_guard(cfg.guard).map_err(e2s)?;
    let mut worst: f64 = 0.0;
    for t in 0..4u64 {
        let start = cfg.guard as u64 + t * (n + cfg.guard) as u64;
        let c = draw_realization(&model, SeededStream::new(cfg.seed, 400 + t)).at(start);
        let x = random_vec(cfg.seed, 500 + t, n);
        let tx = ofdm_modulate(&x, cfg.guard).map_err(e2s)?;
        let y = ofdm_demodulate(&apply_channel(&tx, &c, cfg.guard).map_err(e2s)?, n, cfg.guard).map_err(e2s)?;
        let h = freq_response(&c, n);
        let ici = ici_term(&c, &x, n).map_err(e2s)?;
        let predicted: Vec<C> = (0..n).map(|k| h[k] * x[k] + ici[k]).collect();
        worst = worst.max(rel_inf(&predicted, &y));
    }
    within(&format!("relative error at f_D·T = {doppler}"), worst, 1e-9)
}
