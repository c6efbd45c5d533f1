use std::io::Write;
use std::path::PathBuf;
use std::process;

use clap::{Args, Parser, Subcommand};
use ofdmest::commands::{thread_pool, CliError};
use ofdmest::{cmd_singvals, cmd_sweep, cmd_validate, parse_config, ConfigError, ExitCode, RunConfig};

#[derive(Parser)]
#[command(name = "ofdmest", version, about = "OFDM block-pilot channel estimation sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER/MSE sweep over estimators and SNR; writes CSV.
    Sweep(Settings),
    /// Eigenvalues of the channel frequency correlation matrix.
    Singvals(Settings),
    /// Run the built-in oracle checks.
    Validate(Settings),
}

/// Every config key as a flag; flags win over the file.
#[derive(Args, Default)]
struct Settings {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// FFT size N.
    #[arg(long)]
    fft_size: Option<String>,
    /// Cyclic-prefix length in samples; N/8 by default.
    #[arg(long)]
    guard: Option<String>,
    /// OFDM symbols per pilot block.
    #[arg(long)]
    block: Option<String>,
    /// bpsk or qam16.
    #[arg(long)]
    constellation: Option<String>,
    /// Comma-separated: ls, lmmse, lmmse-full, lr-lmmse, mmse, genie.
    #[arg(long)]
    estimators: Option<String>,
    /// start:stop:step in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    /// Pilot blocks simulated per (estimator, SNR) cell.
    #[arg(long)]
    trials: Option<String>,
    /// Seed of the Monte Carlo streams.
    #[arg(long)]
    seed: Option<String>,
    /// Low-rank filter order; guard + 1 by default.
    #[arg(long)]
    rank: Option<String>,
    /// Normalized Doppler f_D·T applied to every tap.
    #[arg(long, allow_hyphen_values = true)]
    doppler: Option<String>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// Also draw the sweep as an SVG chart.
    #[arg(long)]
    svg: Option<String>,
    /// ber or mse.
    #[arg(long)]
    svg_metric: Option<String>,
    /// Permit FFT sizes above 512.
    #[arg(long)]
    allow_large: bool,
    /// Number of used carriers centred on DC; all by default.
    #[arg(long)]
    active_carriers: Option<String>,
    /// constellation or constant-modulus.
    #[arg(long)]
    pilot_mode: Option<String>,
    /// Seed of the pilot symbol.
    #[arg(long)]
    pilot_seed: Option<String>,
    /// rayleigh or static.
    #[arg(long)]
    fading: Option<String>,
    /// analytic or empirical:COUNT.
    #[arg(long)]
    correlation: Option<String>,
    /// SNR assumed by the filters instead of the true one.
    #[arg(long, allow_hyphen_values = true)]
    estimator_snr_db: Option<String>,
    /// Replace the filters' beta (test hook).
    #[arg(long)]
    beta_override: Option<String>,
    /// delay,power,doppler; repeat for each path.
    #[arg(long)]
    tap: Vec<String>,
}

impl Settings {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let fields = [
            ("fft_size", &self.fft_size),
            ("guard", &self.guard),
            ("block", &self.block),
            ("constellation", &self.constellation),
            ("estimators", &self.estimators),
            ("snr", &self.snr),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("rank", &self.rank),
            ("doppler", &self.doppler),
            ("out", &self.out),
            ("svg", &self.svg),
            ("svg_metric", &self.svg_metric),
            ("active_carriers", &self.active_carriers),
            ("pilot_mode", &self.pilot_mode),
            ("pilot_seed", &self.pilot_seed),
            ("fading", &self.fading),
            ("correlation", &self.correlation),
            ("estimator_snr_db", &self.estimator_snr_db),
            ("beta_override", &self.beta_override),
        ];
        for (key, value) in fields {
            if let Some(v) = value {
                out.push((key.to_string(), v.clone()));
            }
        }
        if self.allow_large {
            out.push(("allow_large".into(), "true".into()));
        }
        out.extend(self.tap.iter().map(|t| ("tap".to_string(), t.clone())));
        out
    }

    fn load(&self) -> Result<RunConfig, CliError> {
        let text = match &self.config {
            Some(path) => std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?,
            None => String::new(),
        };
        Ok(parse_config(&text, &self.overrides())?)
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let pool = thread_pool()?;
    let mut stdout = std::io::stdout().lock();
    let print = |out: &mut dyn Write, text: &str| {
        out.write_all(text.as_bytes())
            .map_err(|e| CliError::Runtime(format!("cannot write output: {e}")))
    };
    match command {
        Command::Sweep(s) => {
            let cfg = s.load()?;
            let text = pool.install(|| cmd_sweep(&cfg))?;
            if cfg.out.is_none() {
                print(&mut stdout, &text)?;
            }
        }
        Command::Singvals(s) => {
            let cfg = s.load()?;
            let text = cmd_singvals(&cfg)?;
            if cfg.out.is_none() {
                print(&mut stdout, &text)?;
            }
        }
        Command::Validate(s) => {
            let cfg = s.load()?;
            let mut log = Vec::new();
            let result = pool.install(|| cmd_validate(&cfg, &mut log));
            print(&mut stdout, &String::from_utf8_lossy(&log))?;
            result?;
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("ofdmest: {e}");
        process::exit(e.exit_code() as i32);
    }
    process::exit(ExitCode::Success as i32);
}
