use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "trial,snr_db,p1,M,algorithm,mse,ber,cpu_micros,support_recovered,failed";

/// Outcome of one algorithm on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub snr_db: f64,
    pub p1: f64,
    /// Pilot count `M`.
    pub pilots: usize,
    pub algorithm: String,
    /// `NaN` when the algorithm failed.
    pub mse: f64,
    /// `NaN` outside BER mode.
    pub ber: f64,
    pub cpu_micros: u64,
    /// The estimated MAP support equals the true support.
    pub support_recovered: bool,
    pub failed: bool,
}

impl TrialRecord {
    /// Equality ignoring the timing column, with `NaN == NaN`.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let eq = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        self.trial == other.trial
            && eq(self.snr_db, other.snr_db)
            && eq(self.p1, other.p1)
            && self.pilots == other.pilots
            && self.algorithm == other.algorithm
            && eq(self.mse, other.mse)
            && eq(self.ber, other.ber)
            && self.support_recovered == other.support_recovered
            && self.failed == other.failed
    }
}

/// 17 significant digits: enough to round-trip every `f64`.
fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_results(records: &[TrialRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_error(path))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{CSV_HEADER}").map_err(io_error(path))?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for r in records {
        writer
            .write_record([
                r.trial.to_string(),
                float(r.snr_db),
                float(r.p1),
                r.pilots.to_string(),
                r.algorithm.clone(),
                float(r.mse),
                float(r.ber),
                r.cpu_micros.to_string(),
                r.support_recovered.to_string(),
                r.failed.to_string(),
            ])
            .map_err(|e| Error::Format {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
    }
    writer.flush().map_err(io_error(path))
}

pub fn read_results(path: &Path) -> Result<Vec<TrialRecord>> {
    let format_error = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path).map_err(io_error(path))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = reader.headers().map_err(|e| format_error(e.to_string()))?;
    let header: Vec<&str> = header.iter().collect();
    if header.join(",") != CSV_HEADER {
        return Err(format_error(format!("unexpected header '{}'", header.join(","))));
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| format_error(e.to_string()))?;
        let field = |j: usize| row.get(j).unwrap_or("");
        let parse_err = |j: usize| format_error(format!("row {}: bad value '{}' in column {j}", i + 1, field(j)));
        let num = |j: usize| field(j).parse::<f64>().map_err(|_| parse_err(j));
        let int = |j: usize| field(j).parse::<u64>().map_err(|_| parse_err(j));
        let flag = |j: usize| field(j).parse::<bool>().map_err(|_| parse_err(j));
        records.push(TrialRecord {
            trial: int(0)? as usize,
            snr_db: num(1)?,
            p1: num(2)?,
            pilots: int(3)? as usize,
            algorithm: field(4).to_string(),
            mse: num(5)?,
            ber: num(6)?,
            cpu_micros: int(7)?,
            support_recovered: flag(8)?,
            failed: flag(9)?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> TrialRecord {
        TrialRecord {
            trial: 3,
            snr_db: 20.0,
            p1: 0.1,
            pilots: 40,
            algorithm: "bmp".into(),
            mse: 0.012345678901234567,
            ber: f64::NAN,
            cpu_micros: 812,
            support_recovered: true,
            failed: false,
        }
    }

    #[test]
    fn empty_list_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_results(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{CSV_HEADER}\n"));
        assert!(read_results(&path).unwrap().is_empty());
    }

    #[test]
    fn single_record_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        let rec = record();
        write_results(std::slice::from_ref(&rec), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("1.2345678901234567e-2"));
        let back = read_results(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert!(back[0].same_outcome(&rec));
        assert_eq!(back[0].cpu_micros, 812);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_results(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn missing_directory_reports_path() {
        let err = write_results(&[], Path::new("/nonexistent/dir/out.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/out.csv"));
    }
}
