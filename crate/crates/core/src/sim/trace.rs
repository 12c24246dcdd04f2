use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Statistics of the cumulative regret after episode `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretRow {
    pub k: u64,
    pub mean: f64,
    pub std: Option<f64>,
    pub ci95: Option<f64>,
    /// `mean / ln k`; `None` for `k = 1`.
    pub over_logk: Option<f64>,
}

/// Provenance and side statistics of a trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceMeta {
    pub policy: String,
    pub config_hash: String,
    pub seed: u64,
    pub runs: u64,
    pub estimator: String,
    /// Episodes cut at the step cap (learner and genie episodes).
    pub truncations: u64,
    pub total_episodes: u64,
    pub total_steps: u64,
}

impl TraceMeta {
    pub fn mean_episode_length(&self) -> f64 {
        if self.total_episodes == 0 {
            0.0
        } else {
            self.total_steps as f64 / self.total_episodes as f64
        }
    }
}

/// Mean cumulative regret curve over episodes `1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub rows: Vec<RegretRow>,
    pub meta: TraceMeta,
}

pub const CSV_HEADER: [&str; 5] = ["k", "mean_regret", "std", "ci95", "regret_over_logk"];

/// Fills the `regret / ln k` column.
pub fn normalize_by_logk(mut trace: RegretTrace) -> RegretTrace {
    for row in &mut trace.rows {
        row.over_logk = (row.k >= 2).then(|| row.mean / (row.k as f64).ln());
    }
    trace
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_opt(field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        field
            .parse()
            .map(Some)
            .map_err(|_| Error::Io(format!("bad number {field:?}")))
    }
}

impl RegretTrace {
    pub fn final_row(&self) -> Option<&RegretRow> {
        self.rows.last()
    }

    pub fn row(&self, k: u64) -> Option<&RegretRow> {
        self.rows
            .get(usize::try_from(k).ok()?.checked_sub(1)?)
            .filter(|r| r.k == k)
    }

    /// Writes `# key=value` metadata lines followed by the CSV table. Missing
    /// values are empty fields; numbers use shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let m = &self.meta;
        writeln!(out, "# config_hash={}", m.config_hash)?;
        writeln!(out, "# seed={}", m.seed)?;
        writeln!(out, "# policy={}", m.policy)?;
        writeln!(out, "# runs={}", m.runs)?;
        writeln!(out, "# estimator={}", m.estimator)?;
        writeln!(out, "# truncations={}", m.truncations)?;
        writeln!(out, "# total_episodes={}", m.total_episodes)?;
        writeln!(out, "# total_steps={}", m.total_steps)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                r.mean.to_string(),
                opt(r.std),
                opt(r.ci95),
                opt(r.over_logk),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        text.parse()
    }
}

impl FromStr for RegretTrace {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut meta = TraceMeta::default();
        let num = |v: &str| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| Error::Io(format!("bad metadata value {v:?}")))
        };
        for line in text.lines().filter_map(|l| l.strip_prefix('#')) {
            let Some((key, value)) = line.trim().split_once('=') else {
                continue;
            };
            match key.trim() {
                "config_hash" => meta.config_hash = value.trim().to_string(),
                "seed" => meta.seed = num(value)?,
                "policy" => meta.policy = value.trim().to_string(),
                "runs" => meta.runs = num(value)?,
                "estimator" => meta.estimator = value.trim().to_string(),
                "truncations" => meta.truncations = num(value)?,
                "total_episodes" => meta.total_episodes = num(value)?,
                "total_steps" => meta.total_steps = num(value)?,
                _ => {}
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::Io(format!("unexpected trace header {:?}", header)));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let k = record[0]
                .parse()
                .map_err(|_| Error::Io(format!("bad episode index {:?}", &record[0])))?;
            let mean = parse_opt(&record[1])?.ok_or_else(|| Error::Io("missing mean_regret".into()))?;
            rows.push(RegretRow {
                k,
                mean,
                std: parse_opt(&record[2])?,
                ci95: parse_opt(&record[3])?,
                over_logk: parse_opt(&record[4])?,
            });
        }
        Ok(RegretTrace { rows, meta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RegretTrace {
        let rows = (1..=5)
            .map(|k| RegretRow {
                k,
                mean: 3.0 * (k as f64).ln() + 0.1,
                std: Some(0.3),
                ci95: None,
                over_logk: None,
            })
            .collect();
        let meta = TraceMeta {
            policy: "ULCB".into(),
            config_hash: "abc".into(),
            seed: 9,
            runs: 1,
            ..Default::default()
        };
        normalize_by_logk(RegretTrace { rows, meta })
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        let text = t.to_csv_string().unwrap();
        assert!(text.starts_with("# config_hash=abc\n# seed=9\n"));
        assert!(text.contains("k,mean_regret,std,ci95,regret_over_logk\n1,0.1,0.3,,\n"));
        let back: RegretTrace = text.parse().unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn normalization() {
        let t = sample();
        assert_eq!(t.rows[0].over_logk, None);
        let r = t.row(4).unwrap();
        assert!((r.over_logk.unwrap() - (3.0 + 0.1 / 4f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_header() {
        assert!("a,b\n1,2\n".parse::<RegretTrace>().is_err());
    }
}
