//! Sweep results as CSV: fixed header, one row per (estimator, SNR) cell,
//! floating-point fields in 17 significant digits, LF line endings.

use std::fmt::Write as _;

use ofdmest_core::simkit::{SweepResult, SweepRow};
use thiserror::Error;

pub const HEADER: &str = "estimator,snr_db,trials,bits,bit_errors,ber,mse";

#[derive(Debug, Error, PartialEq)]
pub enum CsvError {
    #[error("missing or unexpected header")]
    Header,
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub estimator: String,
    pub snr_db: f64,
    pub trials: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub mse: f64,
}

impl CsvRow {
    pub fn from_sweep(row: &SweepRow) -> Self {
        Self {
            estimator: row.estimator.as_str().into(),
            snr_db: row.snr_db,
            trials: row.trials,
            bits: row.data_bits,
            bit_errors: row.bit_errors,
            ber: row.ber(),
            mse: row.mse().unwrap_or(f64::NAN),
        }
    }

    /// Field-wise equality with NaN equal to NaN.
    pub fn same_as(&self, other: &CsvRow) -> bool {
        let eq = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        self.estimator == other.estimator
            && eq(self.snr_db, other.snr_db)
            && self.trials == other.trials
            && self.bits == other.bits
            && self.bit_errors == other.bit_errors
            && eq(self.ber, other.ber)
            && eq(self.mse, other.mse)
    }
}

/// Scientific notation with 17 significant digits; parses back to the same bits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_float(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

pub fn render(result: &SweepResult) -> String {
    render_rows(&result.rows.iter().map(CsvRow::from_sweep).collect::<Vec<_>>())
}

pub fn render_rows(rows: &[CsvRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.estimator,
            format_float(r.snr_db),
            r.trials,
            r.bits,
            r.bit_errors,
            format_float(r.ber),
            format_float(r.mse)
        );
    }
    out
}

pub fn parse(text: &str) -> Result<Vec<CsvRow>, CsvError> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(CsvError::Header);
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let err = |message: &str| CsvError::Row {
            line: line_no,
            message: message.into(),
        };
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(err("expected 7 fields"));
        }
        let float = |s: &str, what: &str| parse_float(s).ok_or_else(|| err(&format!("bad {what}")));
        let int = |s: &str, what: &str| s.parse::<u64>().map_err(|_| err(&format!("bad {what}")));
        rows.push(CsvRow {
            estimator: f[0].into(),
            snr_db: float(f[1], "snr_db")?,
            trials: int(f[2], "trials")?,
            bits: int(f[3], "bits")?,
            bit_errors: int(f[4], "bit_errors")?,
            ber: float(f[5], "ber")?,
            mse: float(f[6], "mse")?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(format_float(0.0), "0.0000000000000000e0");
        assert_eq!(format_float(f64::NAN), "nan");
    }

    #[test]
    fn rejects_foreign_header() {
        assert_eq!(parse("a,b\n"), Err(CsvError::Header));
        assert!(matches!(
            parse(&format!("{HEADER}\nls,1,2\n")),
            Err(CsvError::Row { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn floats_round_trip(x in any::<f64>()) {
            let back = parse_float(&format_float(x)).unwrap();
            prop_assert!(back.to_bits() == x.to_bits() || (x.is_nan() && back.is_nan()));
        }
    }
}
