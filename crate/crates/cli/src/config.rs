//! Plain-text run configuration: `key = value` lines, `#` comments and
//! repeated `tap = delay,power,doppler` lines. Flags override the file, the
//! file overrides the defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ofdmest_core::channel::{ChannelModel, Fading, Tap};
use ofdmest_core::modem::{ConstellationKind, OfdmConfig};
use ofdmest_core::simkit::{
    CorrelationSource, EstimatorKind, FrameScheme, PilotMode, SimOptions, Simulator, SweepPlan,
};
use thiserror::Error;

/// FFT sizes above this need `allow_large`.
pub const LARGE_FFT: usize = 512;

pub const KEYS: [&str; 22] = [
    "fft_size",
    "guard",
    "block",
    "constellation",
    "estimators",
    "snr",
    "trials",
    "seed",
    "rank",
    "doppler",
    "out",
    "svg",
    "svg_metric",
    "allow_large",
    "active_carriers",
    "pilot_mode",
    "pilot_seed",
    "fading",
    "correlation",
    "estimator_snr_db",
    "beta_override",
    "tap",
];

/// Where a setting came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Line(usize),
    Flag(String),
    Default,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Line(n) => write!(f, "line {n}"),
            Source::Flag(key) => write!(f, "flag --{}", key.replace('_', "-")),
            Source::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{at}: unknown key `{key}`")]
    UnknownKey { at: Source, key: String },
    #[error("{at}: `{key}` given more than once")]
    DuplicateKey { at: Source, key: String },
    #[error("{at}: expected `key = value`")]
    Syntax { at: Source },
    #[error("{at}: invalid `{key}`: {message}")]
    Invalid { at: Source, key: String, message: String },
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
}

/// Chart metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Ber,
    Mse,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Ber => "ber",
            Metric::Mse => "mse",
        }
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ber" => Ok(Metric::Ber),
            "mse" => Ok(Metric::Mse),
            other => Err(format!("unknown metric {other:?} (expected ber or mse)")),
        }
    }
}

/// `start:stop:step` in dB, stop included when it falls on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrGrid {
    pub fn points(&self) -> Vec<f64> {
        let span = (self.stop - self.start) / self.step;
        let count = (span + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl FromStr for SnrGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |p: &str| p.parse::<f64>().map_err(|_| format!("{p:?} is not a number"));
        let grid = match parts.as_slice() {
            [v] => SnrGrid {
                start: num(v)?,
                stop: num(v)?,
                step: 1.0,
            },
            [a, b, c] => SnrGrid {
                start: num(a)?,
                stop: num(b)?,
                step: num(c)?,
            },
            _ => return Err("expected start:stop:step or a single value".into()),
        };
        if !(grid.start.is_finite() && grid.stop.is_finite() && grid.step.is_finite()) {
            return Err("grid values must be finite".into());
        }
        if grid.step <= 0.0 {
            return Err("step must be positive".into());
        }
        if grid.stop < grid.start {
            return Err("stop is below start".into());
        }
        if grid.points().len() > 10_000 {
            return Err("more than 10000 grid points".into());
        }
        Ok(grid)
    }
}

impl fmt::Display for SnrGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub fft_size: usize,
    pub guard: usize,
    pub block: usize,
    pub constellation: ConstellationKind,
    pub estimators: Vec<EstimatorKind>,
    pub snr: SnrGrid,
    pub trials: usize,
    pub seed: u64,
    pub rank: Option<usize>,
    /// Common `f_D·T` replacing every tap's own value.
    pub doppler: Option<f64>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub svg_metric: Metric,
    pub allow_large: bool,
    /// Number of carriers centred on DC; all when unset.
    pub active_carriers: Option<usize>,
    pub pilot_mode: PilotMode,
    pub pilot_seed: u64,
    pub fading: Fading,
    pub correlation: CorrelationSource,
    pub estimator_snr_db: Option<f64>,
    /// Replaces the filters' β; a test hook for the consistency check.
    pub beta_override: Option<f64>,
    /// Tap powers as written; normalized when the model is built.
    pub taps: Vec<Tap<f64>>,
    tap_sources: TapSources,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("", &[]).expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn ofdm(&self) -> ofdmest_core::Result<OfdmConfig> {
        let cfg = OfdmConfig::new(self.fft_size, self.guard, self.block, self.constellation)?;
        match self.active_carriers {
            Some(count) => cfg.with_active(OfdmConfig::centered_active(self.fft_size, count)),
            None => Ok(cfg),
        }
    }

    pub fn model(&self) -> ofdmest_core::Result<ChannelModel<f64>> {
        let taps = self
            .taps
            .iter()
            .map(|t| Tap {
                doppler: self.doppler.unwrap_or(t.doppler),
                ..*t
            })
            .collect();
        ChannelModel::normalized(taps, self.fading)
    }

    pub fn scheme(&self) -> ofdmest_core::Result<FrameScheme> {
        Ok(FrameScheme::new(&self.ofdm()?, self.pilot_seed, self.pilot_mode))
    }

    pub fn options(&self) -> SimOptions {
        SimOptions {
            rank: self.rank,
            estimator_snr_db: self.estimator_snr_db,
            beta: self.beta_override,
            correlation: self.correlation,
            correlation_seed: self.seed,
        }
    }

    pub fn simulator(&self) -> ofdmest_core::Result<Simulator> {
        let cfg = self.ofdm()?;
        let scheme = FrameScheme::new(&cfg, self.pilot_seed, self.pilot_mode);
        Simulator::new(cfg, scheme, self.model()?, self.options())
    }

    pub fn plan(&self) -> SweepPlan {
        SweepPlan {
            estimators: self.estimators.clone(),
            snr_db: self.snr.points(),
            trials: self.trials,
            seed: self.seed,
        }
    }

    /// Checks the conditions a simulation needs beyond what parsing enforces:
    /// the no-ISI guard condition.
    pub fn check_runnable(&self) -> Result<(), ConfigError> {
        let max = self.taps.iter().map(|t| t.delay).max().unwrap_or(0);
        if max > self.guard {
            let i = self.taps.iter().position(|t| t.delay == max).unwrap_or(0);
            return Err(ConfigError::Invalid {
                at: self.tap_sources.0.get(i).cloned().unwrap_or(Source::Default),
                key: "tap".into(),
                message: format!("delay {max} exceeds the guard interval {} (ISI)", self.guard),
            });
        }
        Ok(())
    }

    /// Renders the configuration in the file syntax.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("fft_size", self.fft_size.to_string());
        put("guard", self.guard.to_string());
        put("block", self.block.to_string());
        put("constellation", self.constellation.as_str().into());
        put(
            "estimators",
            self.estimators.iter().map(|e| e.as_str()).collect::<Vec<_>>().join(","),
        );
        put("snr", self.snr.to_string());
        put("trials", self.trials.to_string());
        put("seed", self.seed.to_string());
        if let Some(r) = self.rank {
            put("rank", r.to_string());
        }
        if let Some(d) = self.doppler {
            put("doppler", d.to_string());
        }
        if let Some(p) = &self.out {
            put("out", p.display().to_string());
        }
        if let Some(p) = &self.svg {
            put("svg", p.display().to_string());
        }
        put("svg_metric", self.svg_metric.as_str().into());
        put("allow_large", self.allow_large.to_string());
        if let Some(a) = self.active_carriers {
            put("active_carriers", a.to_string());
        }
        put("pilot_mode", self.pilot_mode.as_str().into());
        put("pilot_seed", self.pilot_seed.to_string());
        put("fading", fading_str(self.fading).into());
        put("correlation", correlation_str(self.correlation));
        if let Some(s) = self.estimator_snr_db {
            put("estimator_snr_db", s.to_string());
        }
        if let Some(b) = self.beta_override {
            put("beta_override", b.to_string());
        }
        for t in &self.taps {
            put("tap", format!("{},{},{}", t.delay, t.power, t.doppler));
        }
        out
    }
}

/// Origin of each tap line; not part of a configuration's value.
#[derive(Debug, Clone, Default)]
struct TapSources(Vec<Source>);

impl PartialEq for TapSources {
    fn eq(&self, _: &TapSources) -> bool {
        true
    }
}

fn fading_str(f: Fading) -> &'static str {
    match f {
        Fading::Rayleigh => "rayleigh",
        Fading::Static => "static",
    }
}

fn correlation_str(c: CorrelationSource) -> String {
    match c {
        CorrelationSource::Analytic => "analytic".into(),
        CorrelationSource::Empirical { realizations } => format!("empirical:{realizations}"),
    }
}

fn parse_fading(s: &str) -> Result<Fading, String> {
    match s {
        "rayleigh" => Ok(Fading::Rayleigh),
        "static" => Ok(Fading::Static),
        other => Err(format!("unknown fading {other:?} (expected rayleigh or static)")),
    }
}

fn parse_correlation(s: &str) -> Result<CorrelationSource, String> {
    if s == "analytic" {
        return Ok(CorrelationSource::Analytic);
    }
    match s.strip_prefix("empirical:").map(|m| m.trim().parse::<usize>()) {
        Some(Ok(m)) if m > 0 => Ok(CorrelationSource::Empirical { realizations: m }),
        _ => Err(format!("expected analytic or empirical:COUNT, got {s:?}")),
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("{other:?} is not a boolean")),
    }
}

fn parse_tap(s: &str) -> Result<Tap<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [d, p, f] = parts.as_slice() else {
        return Err("expected delay,power,doppler".into());
    };
    let delay = d
        .parse::<usize>()
        .map_err(|_| format!("delay {d:?} is not a sample count"))?;
    let power = p.parse::<f64>().map_err(|_| format!("power {p:?} is not a number"))?;
    let doppler = f.parse::<f64>().map_err(|_| format!("doppler {f:?} is not a number"))?;
    if !(power > 0.0 && power.is_finite()) {
        return Err("power must be positive and finite".into());
    }
    if !doppler.is_finite() {
        return Err("doppler must be finite".into());
    }
    Ok(Tap { delay, power, doppler })
}

fn default_taps() -> Vec<Tap<f64>> {
    [0usize, 2, 5, 9]
        .iter()
        .map(|&d| Tap {
            delay: d,
            power: (-(d as f64) / 5.0).exp(),
            doppler: 0.0,
        })
        .collect()
}

struct Entries {
    values: BTreeMap<String, (String, Source)>,
    taps: Vec<(String, Source)>,
}

impl Entries {
    fn get<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<(T, Source)>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some((raw, at)) => parse(raw)
                .map(|v| Some((v, at.clone())))
                .map_err(|message| ConfigError::Invalid {
                    at: at.clone(),
                    key: key.into(),
                    message,
                }),
        }
    }

    fn value<T>(
        &self,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<(T, Source), ConfigError> {
        Ok(self.get(key, parse)?.unwrap_or((default, Source::Default)))
    }
}

fn from_str<T: FromStr>(what: &'static str) -> impl Fn(&str) -> Result<T, String> {
    move |s| s.parse::<T>().map_err(|_| format!("{s:?} is not {what}"))
}

fn invalid(at: &Source, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        at: at.clone(),
        key: key.into(),
        message: message.into(),
    }
}

/// Parses a config file and applies `overrides` (`key`, `value`) on top.
/// Repeated `tap` overrides replace the file's taps.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let mut entries = Entries {
        values: BTreeMap::new(),
        taps: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let at = Source::Line(i + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { at });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { at, key: key.into() });
        }
        if key == "tap" {
            entries.taps.push((value.into(), at));
        } else if entries.values.insert(key.into(), (value.into(), at.clone())).is_some() {
            return Err(ConfigError::DuplicateKey { at, key: key.into() });
        }
    }
    let mut flag_taps = Vec::new();
    for (key, value) in overrides {
        let at = Source::Flag(key.clone());
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { at, key: key.clone() });
        }
        if key == "tap" {
            flag_taps.push((value.clone(), at));
        } else {
            entries.values.insert(key.clone(), (value.clone(), at));
        }
    }
    if !flag_taps.is_empty() {
        entries.taps = flag_taps;
    }
    build(&entries)
}

fn build(e: &Entries) -> Result<RunConfig, ConfigError> {
    let (fft_size, fft_at) = e.value("fft_size", 128, from_str::<usize>("a size"))?;
    let (allow_large, _) = e.value("allow_large", false, parse_bool)?;
    if fft_size == 0 {
        return Err(invalid(&fft_at, "fft_size", "must be at least 1"));
    }
    if fft_size > LARGE_FFT && !allow_large {
        return Err(invalid(
            &fft_at,
            "fft_size",
            format!("{fft_size} exceeds {LARGE_FFT}; pass --allow-large for full-size runs"),
        ));
    }
    let (guard, guard_at) = e.value("guard", fft_size / 8, from_str::<usize>("a sample count"))?;
    if guard > fft_size {
        return Err(invalid(
            &guard_at,
            "guard",
            format!("{guard} is longer than the FFT size {fft_size}"),
        ));
    }
    let (block, block_at) = e.value("block", 8, from_str::<usize>("a symbol count"))?;
    if block == 0 {
        return Err(invalid(&block_at, "block", "must be at least 1"));
    }
    let (constellation, _) = e.value("constellation", ConstellationKind::Qam16, |s| {
        s.parse::<ConstellationKind>().map_err(|err| err.to_string())
    })?;
    let (estimators, est_at) = e.value(
        "estimators",
        vec![
            EstimatorKind::Ls,
            EstimatorKind::Lmmse,
            EstimatorKind::LrLmmse,
            EstimatorKind::Mmse,
        ],
        |s| EstimatorKind::parse_list(s).map_err(|err| err.to_string()),
    )?;
    if estimators.is_empty() {
        return Err(invalid(&est_at, "estimators", "list is empty"));
    }
    let mut seen = estimators.clone();
    seen.sort_by_key(|k| k.as_str());
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid(&est_at, "estimators", "an estimator is listed twice"));
    }
    let (snr, _) = e.value(
        "snr",
        SnrGrid {
            start: 0.0,
            stop: 40.0,
            step: 5.0,
        },
        |s| s.parse(),
    )?;
    let (trials, trials_at) = e.value("trials", 10_000, from_str::<usize>("a count"))?;
    if trials == 0 {
        return Err(invalid(&trials_at, "trials", "must be at least 1"));
    }
    let (seed, _) = e.value("seed", 1, from_str::<u64>("an unsigned integer"))?;
    let rank = e.get("rank", from_str::<usize>("a rank"))?;
    let doppler = e.get("doppler", from_str::<f64>("a number"))?;
    if let Some((d, at)) = &doppler {
        if !d.is_finite() {
            return Err(invalid(at, "doppler", "must be finite"));
        }
    }
    let out = e.get("out", |s| Ok(PathBuf::from(s)))?.map(|v| v.0);
    let svg = e.get("svg", |s| Ok(PathBuf::from(s)))?.map(|v| v.0);
    let (svg_metric, _) = e.value("svg_metric", Metric::Ber, |s| s.parse())?;
    let active = e.get("active_carriers", from_str::<usize>("a carrier count"))?;
    if let Some((a, at)) = &active {
        if *a == 0 || *a > fft_size {
            return Err(invalid(at, "active_carriers", format!("must be in 1..={fft_size}")));
        }
    }
    let active_count = active.as_ref().map_or(fft_size, |a| a.0);
    if let Some((r, at)) = &rank {
        if *r == 0 || *r > active_count {
            return Err(invalid(at, "rank", format!("must be in 1..={active_count}")));
        }
    }
    let (pilot_mode, _) = e.value("pilot_mode", PilotMode::Constellation, |s| {
        s.parse::<PilotMode>().map_err(|err| err.to_string())
    })?;
    let (pilot_seed, _) = e.value("pilot_seed", 7, from_str::<u64>("an unsigned integer"))?;
    let (fading, _) = e.value("fading", Fading::Rayleigh, parse_fading)?;
    let (correlation, _) = e.value("correlation", CorrelationSource::Analytic, parse_correlation)?;
    let estimator_snr_db = e.get("estimator_snr_db", from_str::<f64>("a number"))?;
    if let Some((s, at)) = &estimator_snr_db {
        if !s.is_finite() {
            return Err(invalid(at, "estimator_snr_db", "must be finite"));
        }
    }
    let beta_override = e.get("beta_override", from_str::<f64>("a number"))?;
    if let Some((b, at)) = &beta_override {
        if !(*b > 0.0 && b.is_finite()) {
            return Err(invalid(at, "beta_override", "must be positive and finite"));
        }
    }

    let (taps, tap_sources): (Vec<Tap<f64>>, Vec<Source>) = if e.taps.is_empty() {
        let taps = default_taps();
        let n = taps.len();
        (taps, vec![Source::Default; n])
    } else {
        let mut taps = Vec::new();
        let mut sources = Vec::new();
        for (raw, at) in &e.taps {
            let tap = parse_tap(raw).map_err(|m| invalid(at, "tap", m))?;
            if let Some(prev) = taps.last() {
                let prev: &Tap<f64> = prev;
                if tap.delay <= prev.delay {
                    return Err(invalid(at, "tap", "delays must be strictly increasing"));
                }
            }
            if tap.delay >= fft_size {
                return Err(invalid(
                    at,
                    "tap",
                    format!("delay {} is not below the FFT size", tap.delay),
                ));
            }
            taps.push(tap);
            sources.push(at.clone());
        }
        (taps, sources)
    };

    Ok(RunConfig {
        fft_size,
        guard,
        block,
        constellation,
        estimators,
        snr,
        trials,
        seed,
        rank: rank.map(|r| r.0),
        doppler: doppler.map(|d| d.0),
        out,
        svg,
        svg_metric,
        allow_large,
        active_carriers: active.map(|a| a.0),
        pilot_mode,
        pilot_seed,
        fading,
        correlation,
        estimator_snr_db: estimator_snr_db.map(|s| s.0),
        beta_override: beta_override.map(|b| b.0),
        taps,
        tap_sources: TapSources(tap_sources),
    })
}
