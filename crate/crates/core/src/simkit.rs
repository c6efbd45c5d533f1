//! Block-pilot frame simulation and Monte Carlo measurement.
//!
//! A block is one all-pilot OFDM symbol followed by `B − 1` data symbols. The
//! channel gains are drawn once per block; the estimate obtained from the
//! pilot symbol is held for every data symbol of the block.
//!
//! Random streams are keyed by `(seed, snr index, trial index)` and shared by
//! every estimator in a sweep, so estimators are compared on identical
//! channels, bits and noise. Per-trial outcomes are reduced in trial order,
//! which makes every accumulated number independent of thread scheduling.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{
    add_awgn, apply_channel, draw_realization, empirical_freq_correlation, freq_correlation, freq_response,
    time_correlation, time_to_freq_covariance, ChannelModel,
};
use crate::error::{Error, Result};
use crate::estimators::{apply_filter, lmmse_precompute, lowrank_precompute, ls_estimate, FullLmmse, Mmse};
use crate::modem::{equalize, ofdm_demodulate, ofdm_modulate, Constellation, OfdmConfig};
use crate::numerics::{mix, HermitianMatrix, SeededStream};
use crate::{Filter64, C64};

/// Cap on the SNR handed to the estimators; a noise-free run uses this value.
pub const MAX_FILTER_SNR: f64 = 1e12;

const TAG_CHANNEL: u64 = 1;
const TAG_BITS: u64 = 2;
const TAG_NOISE: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Ls,
    Lmmse,
    LmmseFull,
    LrLmmse,
    Mmse,
    /// True channel response of every symbol; a reference, not an estimator.
    Genie,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::Ls,
        EstimatorKind::Lmmse,
        EstimatorKind::LmmseFull,
        EstimatorKind::LrLmmse,
        EstimatorKind::Mmse,
        EstimatorKind::Genie,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Ls => "ls",
            EstimatorKind::Lmmse => "lmmse",
            EstimatorKind::LmmseFull => "lmmse-full",
            EstimatorKind::LrLmmse => "lr-lmmse",
            EstimatorKind::Mmse => "mmse",
            EstimatorKind::Genie => "genie",
        }
    }

    /// Parses a comma-separated list.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|e| e.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownEstimator(s.to_string()))
    }
}

/// Alphabet the pilot symbols are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PilotMode {
    /// Points of the data constellation.
    #[default]
    Constellation,
    /// Unit-modulus QPSK points `e^{j(π/4 + mπ/2)}`.
    ConstantModulus,
}

impl PilotMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PilotMode::Constellation => "constellation",
            PilotMode::ConstantModulus => "constant-modulus",
        }
    }
}

impl FromStr for PilotMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "constellation" => Ok(PilotMode::Constellation),
            "constant-modulus" | "cm" => Ok(PilotMode::ConstantModulus),
            other => Err(Error::InvalidParameter(format!("unknown pilot mode {other:?}"))),
        }
    }
}

/// Pilot layout shared by transmitter and receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameScheme {
    pub block_len: usize,
    /// Length-`N` pilot symbol; zero on inactive carriers.
    pub pilots: Vec<C64>,
    pub pilot_seed: u64,
    pub mode: PilotMode,
    /// β of the pilot alphabet as stored for the regularizer.
    pub pilot_beta: f64,
}

impl FrameScheme {
    pub fn new(cfg: &OfdmConfig, pilot_seed: u64, mode: PilotMode) -> Self {
        let constellation = Constellation::<f64>::new(cfg.constellation);
        let (alphabet, pilot_beta) = match mode {
            PilotMode::Constellation => (constellation.points().to_vec(), constellation.beta()),
            PilotMode::ConstantModulus => (
                (0..4)
                    .map(|m| {
                        Complex::from_polar(
                            1.0,
                            std::f64::consts::FRAC_PI_4 + m as f64 * std::f64::consts::FRAC_PI_2,
                        )
                    })
                    .collect(),
                1.0,
            ),
        };
        let mut rng = SeededStream::new(pilot_seed, 0).rng();
        let mut pilots = vec![C64::new(0.0, 0.0); cfg.fft_size];
        for &k in &cfg.active {
            pilots[k] = alphabet[rng.random_range(0..alphabet.len())];
        }
        Self {
            block_len: cfg.block_len,
            pilots,
            pilot_seed,
            mode,
            pilot_beta,
        }
    }
}

/// Channel noise level: `σ_n² = 10^(−snr_db/10)` per carrier, for unit-energy symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub snr: f64,
    pub sigma2: f64,
}

impl NoiseSpec {
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(format!("SNR {snr_db} dB is not usable")));
        }
        let snr = 10f64.powf(snr_db / 10.0);
        Ok(Self {
            snr_db,
            snr,
            sigma2: 1.0 / snr,
        })
    }

    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
            snr: f64::INFINITY,
            sigma2: 0.0,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma2 == 0.0
    }
}

/// Where the estimators' `R_HH` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationSource {
    /// Exact matrix from the tap profile.
    #[default]
    Analytic,
    /// Sample average over this many zero-Doppler realizations.
    Empirical { realizations: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimOptions {
    /// Low-rank filter rank; `Ng + 1` when unset (capped at the active count).
    pub rank: Option<usize>,
    /// SNR assumed by the estimators; the true channel SNR when unset.
    pub estimator_snr_db: Option<f64>,
    /// β used by the simplified filters; the pilot alphabet's β when unset.
    pub beta: Option<f64>,
    pub correlation: CorrelationSource,
    pub correlation_seed: u64,
}

/// Per-block measurement.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockOutcome {
    pub bit_errors: u64,
    pub data_bits: u64,
    /// `Σ_k |Ĥ(k) − H(k)|²` over active carriers of the pilot symbol.
    pub sq_error: f64,
    /// `Σ_k |H(k)|²` over the same carriers.
    pub channel_energy: f64,
    pub carriers: u64,
}

/// An estimator with everything that depends only on the cell precomputed.
#[derive(Debug, Clone)]
pub enum PreparedEstimator {
    Ls,
    Filter(Filter64),
    Full(FullLmmse<f64>),
    Mmse(Mmse<f64>),
    Genie,
}

/// A validated link setup with the correlation matrices restricted to the
/// active carriers.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: OfdmConfig,
    scheme: FrameScheme,
    model: ChannelModel<f64>,
    options: SimOptions,
    constellation: Constellation<f64>,
    pilots_active: Vec<C64>,
    correlation: HermitianMatrix<f64>,
    mmse_covariance: HermitianMatrix<f64>,
    rank: usize,
}

impl Simulator {
    pub fn new(cfg: OfdmConfig, scheme: FrameScheme, model: ChannelModel<f64>, options: SimOptions) -> Result<Self> {
        cfg.validate()?;
        model.check_guard(cfg.guard)?;
        if model.max_delay() >= cfg.fft_size {
            return Err(Error::InvalidModel("tap delay must be below the FFT size".into()));
        }
        if scheme.pilots.len() != cfg.fft_size || scheme.block_len != cfg.block_len {
            return Err(Error::InvalidConfig(
                "frame scheme does not match the OFDM configuration".into(),
            ));
        }
        let n = cfg.fft_size;
        let full_corr = match options.correlation {
            CorrelationSource::Analytic => freq_correlation(&model, n),
            CorrelationSource::Empirical { realizations } => empirical_freq_correlation(
                &model,
                n,
                realizations,
                SeededStream::new(options.correlation_seed, u64::MAX),
            )?,
        };
        // MMSE covariance of the CIR in the scaled-DFT convention: the CIR
        // vector seen through F is N·g, so its covariance is N²·R_gg.
        let time_cov = time_correlation(&model, n)?.scale_real((n * n) as f64);
        let full_mmse = time_to_freq_covariance(&time_cov)?;
        let correlation = full_corr.principal_submatrix(&cfg.active);
        let mmse_covariance = full_mmse.principal_submatrix(&cfg.active);
        let pilots_active: Vec<C64> = cfg.active.iter().map(|&k| scheme.pilots[k]).collect();
        let rank = options.rank.unwrap_or(cfg.guard + 1).min(cfg.active.len());
        if rank == 0 || rank > cfg.active.len() {
            return Err(Error::RankOutOfRange {
                rank,
                dim: cfg.active.len(),
            });
        }
        Ok(Self {
            constellation: Constellation::new(cfg.constellation),
            cfg,
            scheme,
            model,
            options,
            pilots_active,
            correlation,
            mmse_covariance,
            rank,
        })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.cfg
    }

    pub fn scheme(&self) -> &FrameScheme {
        &self.scheme
    }

    pub fn model(&self) -> &ChannelModel<f64> {
        &self.model
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `R_HH` restricted to the active carriers.
    pub fn correlation(&self) -> &HermitianMatrix<f64> {
        &self.correlation
    }

    pub fn beta(&self) -> f64 {
        self.options.beta.unwrap_or(self.scheme.pilot_beta)
    }

    /// Linear SNR handed to the estimators, capped at [`MAX_FILTER_SNR`].
    pub fn filter_snr(&self, noise: &NoiseSpec) -> f64 {
        let snr = match self.options.estimator_snr_db {
            Some(db) => 10f64.powf(db / 10.0),
            None => noise.snr,
        };
        snr.min(MAX_FILTER_SNR)
    }

    pub fn prepare(&self, estimator: EstimatorKind, noise: &NoiseSpec) -> Result<PreparedEstimator> {
        let snr = self.filter_snr(noise);
        Ok(match estimator {
            EstimatorKind::Ls => PreparedEstimator::Ls,
            EstimatorKind::Genie => PreparedEstimator::Genie,
            EstimatorKind::Lmmse => PreparedEstimator::Filter(lmmse_precompute(&self.correlation, snr, self.beta())?),
            EstimatorKind::LrLmmse => {
                PreparedEstimator::Filter(lowrank_precompute(&self.correlation, snr, self.beta(), self.rank)?)
            }
            EstimatorKind::LmmseFull => {
                PreparedEstimator::Full(FullLmmse::new(&self.correlation, 1.0 / snr, &self.pilots_active)?)
            }
            EstimatorKind::Mmse => PreparedEstimator::Mmse(Mmse::from_freq_covariance(
                &self.mmse_covariance,
                &self.pilots_active,
                1.0 / snr,
            )?),
        })
    }

    fn estimate(&self, prepared: &PreparedEstimator, received: &[C64]) -> Result<Vec<C64>> {
        match prepared {
            PreparedEstimator::Ls | PreparedEstimator::Genie => ls_estimate(received, &self.pilots_active),
            PreparedEstimator::Filter(f) => apply_filter(f, &ls_estimate(received, &self.pilots_active)?),
            PreparedEstimator::Full(f) => f.apply(&ls_estimate(received, &self.pilots_active)?),
            PreparedEstimator::Mmse(m) => m.apply(received),
        }
    }

    fn active(&self, v: &[C64]) -> Vec<C64> {
        self.cfg.active.iter().map(|&k| v[k]).collect()
    }

    /// Simulates one block and measures it.
    pub fn run_block(
        &self,
        prepared: &PreparedEstimator,
        noise: &NoiseSpec,
        stream: SeededStream,
    ) -> Result<BlockOutcome> {
        let n = self.cfg.fft_size;
        let guard = self.cfg.guard;
        let symbol_len = (n + guard) as u64;
        let bps = self.constellation.bits_per_symbol();
        let realization = draw_realization(&self.model, stream.child(TAG_CHANNEL));
        let mut bit_rng = stream.child(TAG_BITS).rng();

        let mut outcome = BlockOutcome {
            carriers: self.cfg.active.len() as u64,
            ..BlockOutcome::default()
        };
        let mut estimate: Vec<C64> = Vec::new();

        for s in 0..self.cfg.block_len {
            let start = guard as u64 + s as u64 * symbol_len;
            let channel = realization.at(start);
            let mut freq = vec![C64::new(0.0, 0.0); n];
            let mut bits = Vec::new();
            if s == 0 {
                freq.copy_from_slice(&self.scheme.pilots);
            } else {
                bits = (0..self.cfg.active.len() * bps)
                    .map(|_| bit_rng.random::<bool>() as u8)
                    .collect();
                for (&k, sym) in self.cfg.active.iter().zip(self.constellation.map_bits(&bits)?) {
                    freq[k] = sym;
                }
            }
            let framed = ofdm_modulate(&freq, guard)?;
            let faded = apply_channel(&framed, &channel, guard)?;
            let (noisy, _) = add_awgn(&faded, noise.snr_db, n as f64, stream.child(TAG_NOISE + s as u64))?;
            let received = self.active(&ofdm_demodulate(&noisy, n, guard)?);

            if s == 0 {
                let truth = self.active(&freq_response(&channel, n));
                estimate = match prepared {
                    PreparedEstimator::Genie => truth.clone(),
                    _ => self.estimate(prepared, &received)?,
                };
                for (e, h) in estimate.iter().zip(&truth) {
                    outcome.sq_error += (e - h).norm_sqr();
                    outcome.channel_energy += h.norm_sqr();
                }
            } else {
                let eq_with = match prepared {
                    PreparedEstimator::Genie if !self.model.is_static_in_time() => {
                        self.active(&freq_response(&channel, n))
                    }
                    _ => estimate.clone(),
                };
                let decided = self.constellation.demap_symbols(&equalize(&received, &eq_with)?);
                outcome.data_bits += bits.len() as u64;
                outcome.bit_errors += bits.iter().zip(&decided).filter(|(a, b)| a != b).count() as u64;
            }
        }
        Ok(outcome)
    }

    /// Runs `trials` blocks of one cell in parallel; results are in trial order.
    pub fn cell_outcomes(
        &self,
        estimator: EstimatorKind,
        noise: &NoiseSpec,
        snr_index: usize,
        trials: usize,
        seed: u64,
    ) -> Result<Vec<BlockOutcome>> {
        let prepared = self.prepare(estimator, noise)?;
        (0..trials)
            .into_par_iter()
            .map(|t| self.run_block(&prepared, noise, trial_stream(seed, snr_index, t)))
            .collect()
    }
}

/// Stream of one trial: a function of the seed, the SNR index and the trial index.
pub fn trial_stream(seed: u64, snr_index: usize, trial: usize) -> SeededStream {
    SeededStream::new(seed, mix(mix(snr_index as u64) ^ trial as u64))
}

/// One-off block simulation.
pub fn run_block(
    cfg: &OfdmConfig,
    scheme: &FrameScheme,
    model: &ChannelModel<f64>,
    estimator: EstimatorKind,
    noise: &NoiseSpec,
    stream: SeededStream,
) -> Result<BlockOutcome> {
    let sim = Simulator::new(cfg.clone(), scheme.clone(), model.clone(), SimOptions::default())?;
    sim.run_block(&sim.prepare(estimator, noise)?, noise, stream)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub estimators: Vec<EstimatorKind>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// Accumulated counts of one (estimator, SNR) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub estimator: EstimatorKind,
    pub snr_db: f64,
    pub trials: u64,
    pub data_bits: u64,
    pub bit_errors: u64,
    pub mse_sum: f64,
    pub mse_count: u64,
}

impl SweepRow {
    pub fn empty(estimator: EstimatorKind, snr_db: f64) -> Self {
        Self {
            estimator,
            snr_db,
            trials: 0,
            data_bits: 0,
            bit_errors: 0,
            mse_sum: 0.0,
            mse_count: 0,
        }
    }

    pub fn accumulate(&mut self, o: &BlockOutcome) {
        self.trials += 1;
        self.data_bits += o.data_bits;
        self.bit_errors += o.bit_errors;
        self.mse_sum += o.sq_error;
        self.mse_count += o.carriers;
    }

    /// Bit error rate; NaN when the cell carried no data bits.
    pub fn ber(&self) -> f64 {
        if self.data_bits == 0 {
            f64::NAN
        } else {
            self.bit_errors as f64 / self.data_bits as f64
        }
    }

    /// Mean per-carrier squared channel error.
    pub fn mse(&self) -> Result<f64> {
        mse_of(self)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, estimator: EstimatorKind, snr_db: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.snr_db == snr_db)
    }

    /// Rows of one estimator in ascending SNR.
    pub fn series(&self, estimator: EstimatorKind) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.estimator == estimator).collect()
    }
}

/// `mse_sum / mse_count`.
pub fn mse_of(row: &SweepRow) -> Result<f64> {
    if row.mse_count == 0 {
        return Err(Error::EmptyCell);
    }
    Ok(row.mse_sum / row.mse_count as f64)
}

/// Runs every (estimator, SNR) cell. Rows come back sorted by estimator name,
/// then SNR.
pub fn sweep(sim: &Simulator, plan: &SweepPlan) -> Result<SweepResult> {
    if plan.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut cells = Vec::new();
    for &est in &plan.estimators {
        for (si, &snr_db) in plan.snr_db.iter().enumerate() {
            let noise = NoiseSpec::from_snr_db(snr_db)?;
            let prepared = sim.prepare(est, &noise).map_err(|e| in_cell(est, snr_db, e))?;
            cells.push((est, si, snr_db, noise, prepared));
        }
    }
    let trials = plan.trials;
    let outcomes: Vec<BlockOutcome> = (0..cells.len() * trials)
        .into_par_iter()
        .map(|job| {
            let (est, si, snr_db, noise, prepared) = &cells[job / trials];
            sim.run_block(prepared, noise, trial_stream(plan.seed, *si, job % trials))
                .map_err(|e| in_cell(*est, *snr_db, e))
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<SweepRow> = cells
        .iter()
        .enumerate()
        .map(|(c, (est, _, snr_db, _, _))| {
            let mut row = SweepRow::empty(*est, *snr_db);
            for o in &outcomes[c * trials..(c + 1) * trials] {
                row.accumulate(o);
            }
            row
        })
        .collect();
    rows.sort_by(|a, b| {
        a.estimator
            .as_str()
            .cmp(b.estimator.as_str())
            .then(a.snr_db.total_cmp(&b.snr_db))
    });
    Ok(SweepResult { rows })
}

fn in_cell(est: EstimatorKind, snr_db: f64, e: Error) -> Error {
    Error::InCell {
        cell: format!("estimator {est} at {snr_db} dB"),
        source: Box::new(e),
    }
}
