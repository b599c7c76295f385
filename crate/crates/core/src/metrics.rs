//! Per-episode metrics, summary statistics and CSV export.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed CSV column order.
pub const CSV_HEADER: [&str; 7] = [
    "episode",
    "phase",
    "reward",
    "detection_rate",
    "mean_sinr_db",
    "mean_effort",
    "override_count",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    /// Identifier of the scenario stream the episode was drawn from.
    pub scenario_id: u64,
    pub phase: String,
    /// Cumulative reward; `None` for the baseline, which is not scored.
    pub reward: Option<f64>,
    /// Fraction of steps flagged as detections.
    pub detection_rate: f64,
    pub mean_sinr_db: f64,
    pub mean_effort: f64,
    pub override_count: usize,
}

impl EpisodeMetrics {
    /// Episode-level binary outcome: at least one detection.
    pub fn detected(&self) -> bool {
        self.detection_rate > 0.0
    }
}

/// Table-style statistics of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("summary of an empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite("summary sample"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        Ok(Self {
            count: values.len(),
            mean,
            std: var.sqrt(),
            median,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

/// Fraction of bootstrap resamples in which the mean of `diffs` is positive.
pub fn bootstrap_positive_fraction<R: Rng + ?Sized>(diffs: &[f64], resamples: usize, rng: &mut R) -> f64 {
    if diffs.is_empty() || resamples == 0 {
        return 0.0;
    }
    let n = diffs.len();
    let mut positive = 0usize;
    for _ in 0..resamples {
        let s: f64 = (0..n).map(|_| diffs[rng.random_range(0..n)]).sum();
        if s > 0.0 {
            positive += 1;
        }
    }
    positive as f64 / resamples as f64
}

/// Writes the provenance comment line and the header row.
pub fn write_csv_preamble<W: Write>(out: &mut W, seed: u64, config_hash: u64) -> Result<()> {
    writeln!(out, "# seed={seed} config_hash={config_hash:016x}").map_err(|e| Error::io("<csv>", e))?;
    writeln!(out, "{}", CSV_HEADER.join(",")).map_err(|e| Error::io("<csv>", e))
}

pub fn csv_row(m: &EpisodeMetrics) -> String {
    let reward = m.reward.map(|r| r.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{}",
        m.episode, m.phase, reward, m.detection_rate, m.mean_sinr_db, m.mean_effort, m.override_count
    )
}

/// Streams metric rows after the preamble.
pub struct MetricsWriter<W: Write> {
    out: W,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(mut out: W, seed: u64, config_hash: u64) -> Result<Self> {
        write_csv_preamble(&mut out, seed, config_hash)?;
        Ok(Self { out })
    }

    pub fn write(&mut self, m: &EpisodeMetrics) -> Result<()> {
        writeln!(self.out, "{}", csv_row(m)).map_err(|e| Error::io("<csv>", e))?;
        self.out.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Parses a metrics CSV (comment lines skipped) back into rows.
pub fn read_metrics_csv(text: &str) -> Result<Vec<EpisodeMetrics>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::InvalidInput(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("column {}: {e}", CSV_HEADER[i])))
        };
        rows.push(EpisodeMetrics {
            episode: num(0)? as usize,
            scenario_id: 0,
            phase: rec[1].to_owned(),
            reward: if rec[2].is_empty() { None } else { Some(num(2)?) },
            detection_rate: num(3)?,
            mean_sinr_db: num(4)?,
            mean_effort: num(5)?,
            override_count: num(6)? as usize,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn summary_of_known_sample() {
        let s = SummaryStats::from_values(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.max), (2.5, 2.5, 1.0, 4.0));
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-15);
        let odd = SummaryStats::from_values(&[5.0, 1.0, 3.0]).unwrap();
        assert_eq!(odd.median, 3.0);
        assert!(SummaryStats::from_values(&[]).is_err());
    }

    #[test]
    fn bootstrap_confidence() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(bootstrap_positive_fraction(&[1.0; 20], 100, &mut rng), 1.0);
        assert_eq!(bootstrap_positive_fraction(&[-1.0; 20], 100, &mut rng), 0.0);
        let mixed: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let f = bootstrap_positive_fraction(&mixed, 2000, &mut rng);
        assert!((0.3..0.7).contains(&f), "{f}");
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            EpisodeMetrics {
                episode: 0,
                scenario_id: 0,
                phase: "phase1".into(),
                reward: Some(812.5),
                detection_rate: 0.1,
                mean_sinr_db: 21.25,
                mean_effort: 0.75,
                override_count: 5,
            },
            EpisodeMetrics {
                episode: 1,
                scenario_id: 0,
                phase: "off".into(),
                reward: None,
                detection_rate: 1.0,
                mean_sinr_db: -3.5,
                mean_effort: 0.0,
                override_count: 0,
            },
        ];
        let mut w = MetricsWriter::new(Vec::new(), 3, 0xABC).unwrap();
        for r in &rows {
            w.write(r).unwrap();
        }
        let text = String::from_utf8(w.into_inner()).unwrap();
        assert!(text.starts_with("# seed=3 config_hash=0000000000000abc\nepisode,phase,reward,"));
        assert_eq!(read_metrics_csv(&text).unwrap(), rows);
    }
}
