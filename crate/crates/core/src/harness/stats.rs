use std::collections::BTreeMap;

use super::results::TrialRecord;

/// Mean and standard error of the MSE/BER at one grid point for one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub snr_db: f64,
    pub p1: f64,
    pub pilots: usize,
    pub algorithm: String,
    /// Successful trials.
    pub count: usize,
    pub failed: usize,
    pub mean_mse: f64,
    pub se_mse: f64,
    pub mean_ber: f64,
    pub se_ber: f64,
    pub mean_micros: f64,
    pub sd_micros: f64,
    pub support_rate: f64,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let (m, sd) = mean_sd(values);
    (m, sd / (values.len().max(1) as f64).sqrt())
}

type PointKey = (u64, u64, usize, String);

fn key(r: &TrialRecord) -> PointKey {
    (r.snr_db.to_bits(), r.p1.to_bits(), r.pilots, r.algorithm.clone())
}

/// Per-(grid point, algorithm) summaries in first-appearance order.
/// Failed trials are counted but excluded from the means.
pub fn summarize(records: &[TrialRecord]) -> Vec<PointSummary> {
    let mut order: Vec<PointKey> = Vec::new();
    let mut groups: BTreeMap<PointKey, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        let k = key(r);
        if !groups.contains_key(&k) {
            order.push(k.clone());
        }
        groups.entry(k).or_default().push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let rows = &groups[&k];
            let ok: Vec<&&TrialRecord> = rows.iter().filter(|r| !r.failed).collect();
            let mse: Vec<f64> = ok.iter().map(|r| r.mse).collect();
            let ber: Vec<f64> = ok.iter().map(|r| r.ber).filter(|b| !b.is_nan()).collect();
            let micros: Vec<f64> = ok.iter().map(|r| r.cpu_micros as f64).collect();
            let (mean_mse, se_mse) = mean_se(&mse);
            let (mean_ber, se_ber) = mean_se(&ber);
            let (mean_micros, sd_micros) = mean_sd(&micros);
            let first = rows[0];
            PointSummary {
                snr_db: first.snr_db,
                p1: first.p1,
                pilots: first.pilots,
                algorithm: first.algorithm.clone(),
                count: ok.len(),
                failed: rows.len() - ok.len(),
                mean_mse,
                se_mse,
                mean_ber,
                se_ber,
                mean_micros,
                sd_micros,
                support_rate: ok.iter().filter(|r| r.support_recovered).count() as f64 / ok.len().max(1) as f64,
            }
        })
        .collect()
}

/// Mean and standard deviation of the estimator time per algorithm over all grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingSummary {
    pub algorithm: String,
    pub runs: usize,
    pub mean_micros: f64,
    pub sd_micros: f64,
}

pub fn timing_summary(records: &[TrialRecord]) -> Vec<TimingSummary> {
    let mut order: Vec<&str> = Vec::new();
    let mut times: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.failed) {
        if !times.contains_key(r.algorithm.as_str()) {
            order.push(&r.algorithm);
        }
        times.entry(&r.algorithm).or_default().push(r.cpu_micros as f64);
    }
    order
        .into_iter()
        .map(|a| {
            let (mean_micros, sd_micros) = mean_sd(&times[a]);
            TimingSummary {
                algorithm: a.to_string(),
                runs: times[a].len(),
                mean_micros,
                sd_micros,
            }
        })
        .collect()
}

/// Trial-paired difference `metric(a) - metric(b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedDifference {
    pub mean: f64,
    /// Standard error of the mean difference.
    pub se: f64,
    pub pairs: usize,
}

/// Pairs the records of algorithms `a` and `b` on identical (grid point,
/// trial) and summarizes `metric(a) - metric(b)`. Pairs where either side
/// failed or the metric is `NaN` are skipped.
pub fn paired_difference(
    records: &[TrialRecord],
    a: &str,
    b: &str,
    metric: impl Fn(&TrialRecord) -> f64,
) -> PairedDifference {
    let index = |name: &str| -> BTreeMap<(u64, u64, usize, usize), f64> {
        records
            .iter()
            .filter(|r| r.algorithm == name && !r.failed)
            .map(|r| ((r.snr_db.to_bits(), r.p1.to_bits(), r.pilots, r.trial), metric(r)))
            .filter(|(_, v)| !v.is_nan())
            .collect()
    };
    let (left, right) = (index(a), index(b));
    let diffs: Vec<f64> = left
        .iter()
        .filter_map(|(k, va)| right.get(k).map(|vb| va - vb))
        .collect();
    let (mean, se) = mean_se(&diffs);
    PairedDifference {
        mean,
        se,
        pairs: diffs.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(trial: usize, algorithm: &str, mse: f64, micros: u64) -> TrialRecord {
        TrialRecord {
            trial,
            snr_db: 10.0,
            p1: 0.1,
            pilots: 40,
            algorithm: algorithm.into(),
            mse,
            ber: f64::NAN,
            cpu_micros: micros,
            support_recovered: false,
            failed: false,
        }
    }

    #[test]
    fn summary_means_and_errors() {
        let recs = vec![rec(0, "a", 1.0, 10), rec(1, "a", 3.0, 30), rec(0, "b", 2.0, 5)];
        let s = summarize(&recs);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].algorithm, "a");
        assert_eq!(s[0].mean_mse, 2.0);
        // sample sd sqrt(2), se = sqrt(2)/sqrt(2)
        assert!((s[0].se_mse - 1.0).abs() < 1e-15);
        assert!(s[0].mean_ber.is_nan());
        assert_eq!(s[1].se_mse, 0.0);
    }

    #[test]
    fn failed_rows_are_excluded_from_means() {
        let mut bad = rec(2, "a", f64::NAN, 0);
        bad.failed = true;
        let s = summarize(&[rec(0, "a", 1.0, 10), bad]);
        assert_eq!((s[0].count, s[0].failed), (1, 1));
        assert_eq!(s[0].mean_mse, 1.0);
    }

    #[test]
    fn paired_difference_uses_matching_trials() {
        let recs = vec![
            rec(0, "a", 1.0, 1),
            rec(1, "a", 2.0, 1),
            rec(2, "a", 9.0, 1),
            rec(0, "b", 0.5, 1),
            rec(1, "b", 1.0, 1),
        ];
        let d = paired_difference(&recs, "a", "b", |r| r.mse);
        assert_eq!(d.pairs, 2);
        assert!((d.mean - 0.75).abs() < 1e-15);
    }

    #[test]
    fn timing_summary_per_algorithm() {
        let t = timing_summary(&[rec(0, "x", 0.0, 10), rec(1, "x", 0.0, 20), rec(0, "y", 0.0, 7)]);
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].mean_micros, 15.0);
        assert_eq!(t[1].runs, 1);
    }
}
