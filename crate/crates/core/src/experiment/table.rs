use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::analytic::classical_limit;
use crate::error::{Error, Result};

/// Raw per-size counts as recorded by the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountsRow {
    #[serde(rename = "L")]
    pub input_size: u64,
    /// Per-pulse intensity.
    pub mu: f64,
    pub total_coupons: u64,
    pub detection_events: u64,
    pub single_clicks: u64,
    pub correct_clicks: u64,
}

/// A counts row with every derived column filled in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    #[serde(rename = "L")]
    pub input_size: u64,
    pub mu: f64,
    pub total_coupons: u64,
    pub detection_events: u64,
    pub single_clicks: u64,
    pub correct_clicks: u64,
    /// `None` when no single-click period was recorded.
    pub correct_prob: Option<f64>,
    pub efficiency: f64,
    pub success_prob: f64,
    /// `(L−1)·ln(L−1)`, the m = 1 classical cost.
    pub classical_samples: f64,
    /// `L·μ / success_prob`; `None` (printed `inf`) without correct clicks.
    pub quantum_samples: Option<f64>,
}

impl TableRow {
    pub fn from_counts(c: &CountsRow) -> Self {
        let total = c.total_coupons as f64;
        let success_prob = c.correct_clicks as f64 / total;
        Self {
            input_size: c.input_size,
            mu: c.mu,
            total_coupons: c.total_coupons,
            detection_events: c.detection_events,
            single_clicks: c.single_clicks,
            correct_clicks: c.correct_clicks,
            correct_prob: (c.single_clicks > 0).then(|| c.correct_clicks as f64 / c.single_clicks as f64),
            efficiency: c.single_clicks as f64 / total,
            success_prob,
            classical_samples: classical_limit(c.input_size.saturating_sub(1)),
            quantum_samples: (c.correct_clicks > 0).then(|| c.input_size as f64 * c.mu / success_prob),
        }
    }

    /// Derived columns at print precision: percentages to one decimal,
    /// sample counts to three significant figures.
    pub fn printed(&self) -> PrintedRow {
        PrintedRow {
            correct_prob: self.correct_prob.map_or_else(|| "n/a".into(), percent_1dp),
            efficiency: percent_1dp(self.efficiency),
            success_prob: percent_1dp(self.success_prob),
            classical_samples: sci_3sf(self.classical_samples),
            quantum_samples: self.quantum_samples.map_or_else(|| "inf".into(), sci_3sf),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrintedRow {
    pub correct_prob: String,
    pub efficiency: String,
    pub success_prob: String,
    pub classical_samples: String,
    pub quantum_samples: String,
}

pub fn percent_1dp(p: f64) -> String {
    format!("{:.1}%", 100.0 * p)
}

/// `3.18e3` style, three significant figures.
pub fn sci_3sf(x: f64) -> String {
    if x == 0.0 {
        return "0.00e0".into();
    }
    let s = format!("{x:.2e}");
    s.replace("e+", "e")
}

pub fn table_report(rows: &[CountsRow]) -> Result<Vec<TableRow>> {
    rows.iter()
        .map(|c| {
            if c.total_coupons == 0 || c.single_clicks > c.total_coupons || c.correct_clicks > c.single_clicks {
                return Err(Error::InvalidParameter {
                    name: "counts",
                    reason: format!("inconsistent counts for L={}", c.input_size),
                });
            }
            Ok(TableRow::from_counts(c))
        })
        .collect()
}

/// Reads `L,mu,total_coupons,detection_events,single_clicks,correct_clicks`.
pub fn read_counts<R: Read>(reader: R) -> Result<Vec<CountsRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Parse {
                line: e.position().map_or(i + 2, |p| p.line() as usize),
                reason: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(l: u64, mu: f64, total: u64, single: u64, correct: u64) -> CountsRow {
        CountsRow {
            input_size: l,
            mu,
            total_coupons: total,
            detection_events: 0,
            single_clicks: single,
            correct_clicks: correct,
        }
    }

    #[test]
    fn first_row() {
        let r = TableRow::from_counts(&row(2000, 1.0, 781_250, 525_445, 490_824));
        let p = r.printed();
        assert_eq!(p.correct_prob, "93.4%");
        assert_eq!(p.success_prob, "62.8%");
        assert_eq!(p.classical_samples, "1.52e4");
        assert_eq!(p.quantum_samples, "3.18e3");
        // printed efficiency is 67.2 while the counts give 67.257
        assert!((r.efficiency - 0.672_57).abs() < 1e-5);
    }

    #[test]
    fn quantum_above_classical_row() {
        let r = TableRow::from_counts(&row(16_000, 6.0, 97_656, 64_554, 59_817));
        let p = r.printed();
        assert_eq!(p.efficiency, "66.1%");
        assert_eq!(p.classical_samples, "1.55e5");
        assert_eq!(p.quantum_samples, "1.57e5");
        assert!(r.quantum_samples.unwrap() > r.classical_samples);
    }

    #[test]
    fn zero_correct_is_infinite() {
        let r = TableRow::from_counts(&row(100, 1.0, 10, 3, 0));
        assert_eq!(r.quantum_samples, None);
        assert_eq!(r.printed().quantum_samples, "inf");
        let r = TableRow::from_counts(&row(100, 1.0, 10, 0, 0));
        assert_eq!(r.printed().correct_prob, "n/a");
    }

    #[test]
    fn inconsistent_rejected() {
        assert!(table_report(&[row(10, 1.0, 0, 0, 0)]).is_err());
        assert!(table_report(&[row(10, 1.0, 5, 6, 0)]).is_err());
        assert!(table_report(&[row(10, 1.0, 5, 3, 4)]).is_err());
    }

    #[test]
    fn reads_csv() {
        let text = "L,mu,total_coupons,detection_events,single_clicks,correct_clicks\n2000,1,781250,763766,525445,490824\n";
        let rows = read_counts(text.as_bytes()).unwrap();
        assert_eq!(rows[0].detection_events, 763_766);
        let bad = "L,mu,total_coupons,detection_events,single_clicks,correct_clicks\n2000,x,1,1,1,1\n";
        assert!(matches!(read_counts(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn sci_format() {
        assert_eq!(sci_3sf(203_654.0), "2.04e5");
        assert_eq!(sci_3sf(0.00123), "1.23e-3");
    }
}
