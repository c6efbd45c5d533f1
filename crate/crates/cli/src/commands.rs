//! Subcommands. Each returns the text it produced so callers and tests can
//! inspect it; files named in the config are written here.

use std::fs;
use std::io::Write;
use std::path::Path;

use ofdmest_core::channel::freq_correlation;
use ofdmest_core::numerics::eig_hermitian;
use ofdmest_core::simkit::{sweep, SweepResult};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::csv::{self, format_float, CsvRow};
use crate::svg::render_svg;
use crate::validate::run_checks;

/// Environment variable capping the worker count; `0` or unset means automatic.
pub const THREADS_ENV: &str = "OFDMEST_THREADS";

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ExitCode {
    Success = 0,
    Config = 2,
    Runtime = 3,
    Validation = 4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
    #[error("{0} check(s) failed")]
    Validation(usize),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::Config,
            CliError::Runtime(_) => ExitCode::Runtime,
            CliError::Validation(_) => ExitCode::Validation,
        }
    }
}

impl From<ofdmest_core::Error> for CliError {
    fn from(e: ofdmest_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Worker pool sized by [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            CliError::Config(ConfigError::Invalid {
                at: crate::config::Source::Default,
                key: THREADS_ENV.into(),
                message: format!("{v:?} is not a thread count"),
            })
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Validates the config and runs the sweep it describes.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepResult, CliError> {
    cfg.check_runnable()?;
    let sim = cfg.simulator().map_err(|e| {
        CliError::Config(ConfigError::Invalid {
            at: crate::config::Source::Default,
            key: "config".into(),
            message: e.to_string(),
        })
    })?;
    Ok(sweep(&sim, &cfg.plan())?)
}

/// Runs the sweep and returns the CSV; writes `out` and `svg` when configured.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<String, CliError> {
    let result = run_sweep(cfg)?;
    let text = csv::render(&result);
    if let Some(path) = &cfg.out {
        write_file(path, &text)?;
    }
    if let Some(path) = &cfg.svg {
        let rows: Vec<CsvRow> = result.rows.iter().map(CsvRow::from_sweep).collect();
        let svg = render_svg(&rows, cfg.svg_metric).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_file(path, &svg)?;
    }
    Ok(text)
}

/// Eigenvalues of `R_HH` over the active carriers with the cumulative energy fraction.
pub fn cmd_singvals(cfg: &RunConfig) -> Result<String, CliError> {
    let active = cfg.ofdm()?.active;
    let r = freq_correlation(&cfg.model()?, cfg.fft_size).principal_submatrix(&active);
    let eig = eig_hermitian(&r)?;
    let mut text = String::from("k,lambda,cumulative_energy_fraction\n");
    for (k, (l, e)) in eig.values().iter().zip(eig.cumulative_energy()).enumerate() {
        text.push_str(&format!("{k},{},{}\n", format_float(*l), format_float(e)));
    }
    if let Some(path) = &cfg.out {
        write_file(path, &text)?;
    }
    Ok(text)
}

/// Runs the self-checks, printing one line per check to `log`.
pub fn cmd_validate(cfg: &RunConfig, log: &mut dyn Write) -> Result<(), CliError> {
    let checks = run_checks(cfg);
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        writeln!(log, "{status} {}: {}", c.name, c.detail).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match checks.iter().filter(|c| !c.passed).count() {
        0 => Ok(()),
        n => Err(CliError::Validation(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn small(extra: &str) -> RunConfig {
        parse_config(
            &format!("fft_size = 32\nguard = 10\nblock = 3\ntrials = 4\n{extra}"),
            &[],
        )
        .unwrap()
    }

    #[test]
    fn one_cell_gives_two_lines() {
        let mut cfg = small("estimators = ls\nsnr = 10\n");
        cfg.trials = 1;
        let text = cmd_sweep(&cfg).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with(csv::HEADER));
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn row_count_matches_grid() {
        let cfg = small("estimators = ls,lmmse,mmse\nsnr = 0:20:5\n");
        let text = cmd_sweep(&cfg).unwrap();
        assert_eq!(text.lines().count(), 3 * 5 + 1);
        assert_eq!(text, cmd_sweep(&cfg).unwrap());
    }

    #[test]
    fn csv_parses_back_exactly() {
        let cfg = small("estimators = ls,lr-lmmse\nsnr = 0:30:7.5\n");
        let result = run_sweep(&cfg).unwrap();
        let parsed = csv::parse(&csv::render(&result)).unwrap();
        assert_eq!(parsed.len(), result.rows.len());
        for (p, r) in parsed.iter().zip(&result.rows) {
            assert!(p.same_as(&CsvRow::from_sweep(r)));
            assert_eq!(p.mse.to_bits(), (r.mse_sum / r.mse_count as f64).to_bits());
        }
    }

    #[test]
    fn rows_sorted_by_estimator_then_snr() {
        let text = cmd_sweep(&small("estimators = mmse,ls,lmmse\nsnr = 0:10:5\n")).unwrap();
        let rows = csv::parse(&text).unwrap();
        let keys: Vec<(String, f64)> = rows.iter().map(|r| (r.estimator.clone(), r.snr_db)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        assert_eq!(keys, sorted);
    }

    #[test]
    fn guard_violation_is_a_config_error() {
        let cfg = parse_config("guard = 2\n", &[]).unwrap();
        assert_eq!(cmd_sweep(&cfg).unwrap_err().exit_code(), ExitCode::Config);
    }

    #[test]
    fn singvals_single_tap_is_all_ones() {
        let text = cmd_singvals(&parse_config("fft_size = 32\ntap = 0,1,0\n", &[]).unwrap()).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 32);
        assert!((rows[0][1] - 32.0).abs() < 1e-10);
        assert!(rows[1..].iter().all(|r| r[1].abs() < 1e-10 * 32.0));
    }

    #[test]
    fn singvals_four_taps() {
        let text = cmd_singvals(&RunConfig::default()).unwrap();
        assert!(text.starts_with("k,lambda,cumulative_energy_fraction\n"));
        let rows: Vec<Vec<f64>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
            .collect();
        let l0 = rows[0][1];
        assert_eq!(rows.iter().filter(|r| r[1] > 1e-10 * l0).count(), 4);
        assert!(rows[3][2] >= 1.0 - 1e-10);
    }

    #[test]
    fn validate_reports_each_check() {
        let mut log = Vec::new();
        cmd_validate(&RunConfig::default(), &mut log).unwrap();
        let log = String::from_utf8(log).unwrap();
        assert_eq!(log.lines().count(), 10);
        assert!(log.lines().all(|l| l.starts_with("PASS ")));

        let mut log = Vec::new();
        let bad = parse_config("beta_override = 2.5\n", &[]).unwrap();
        let err = cmd_validate(&bad, &mut log).unwrap_err();
        assert_eq!(err.exit_code(), ExitCode::Validation);
        assert!(String::from_utf8(log).unwrap().contains("FAIL beta-consistency"));
    }
}
