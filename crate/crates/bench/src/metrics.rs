//! Per-epoch metrics and their CSV form.
//!
//! The three headline metrics: `J_r` is the mean undiscounted return of the
//! epoch's completed episodes, `M_c` the mean episodic cost sum, and
//! `rho_c` the cumulative cost divided by cumulative environment steps
//! since training start.

use std::path::Path;

use anyhow::{bail, Context, Result};
use saferl_core::algos::UpdateReport;

pub const CSV_HEADER: &str = "epoch,steps,J_r,M_c,rho_c,kl,multiplier";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub epoch: u32,
    /// Cumulative environment steps at the end of this epoch.
    pub steps: u64,
    pub j_r: f64,
    pub m_c: f64,
    pub rho_c: f64,
    pub kl: f64,
    pub multiplier: f64,
}

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.epoch, self.steps, self.j_r, self.m_c, self.rho_c, self.kl, self.multiplier
        )
    }

    pub fn parse_csv_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            bail!("expected 7 CSV fields, got {}: '{line}'", fields.len());
        }
        Ok(MetricsRow {
            epoch: fields[0].parse().context("epoch")?,
            steps: fields[1].parse().context("steps")?,
            j_r: fields[2].parse().context("J_r")?,
            m_c: fields[3].parse().context("M_c")?,
            rho_c: fields[4].parse().context("rho_c")?,
            kl: fields[5].parse().context("kl")?,
            multiplier: fields[6].parse().context("multiplier")?,
        })
    }
}

/// Build the row for one epoch. When the epoch completed no episode the
/// previous episodic metrics are carried forward (zero at the start).
pub fn compute_metrics(
    epoch: u32,
    episodes: &[(f64, f64)],
    previous: Option<&MetricsRow>,
    cumulative_cost: f64,
    cumulative_steps: u64,
    report: &UpdateReport,
) -> MetricsRow {
    let (j_r, m_c) = if episodes.is_empty() {
        previous.map_or((0.0, 0.0), |p| (p.j_r, p.m_c))
    } else {
        let n = episodes.len() as f64;
        (
            episodes.iter().map(|(r, _)| r).sum::<f64>() / n,
            episodes.iter().map(|(_, c)| c).sum::<f64>() / n,
        )
    };
    MetricsRow {
        epoch,
        steps: cumulative_steps,
        j_r,
        m_c,
        rho_c: cumulative_cost / cumulative_steps as f64,
        kl: report.kl_after,
        multiplier: report.multiplier,
    }
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => bail!("bad CSV header in {}: {:?}", path.display(), other),
    }
    lines.map(MetricsRow::parse_csv_line).collect()
}

/// Final-epoch metrics averaged across seeds, one line per algorithm:
/// `algorithm,J_r,M_c,rho_c`.
pub fn summary_csv(entries: &[(String, Vec<MetricsRow>)]) -> Result<String> {
    let mut out = String::from("algorithm,J_r,M_c,rho_c\n");
    for (algorithm, finals) in entries {
        if finals.is_empty() {
            bail!("no completed seeds for algorithm {algorithm}");
        }
        let n = finals.len() as f64;
        let j_r = finals.iter().map(|r| r.j_r).sum::<f64>() / n;
        let m_c = finals.iter().map(|r| r.m_c).sum::<f64>() / n;
        let rho_c = finals.iter().map(|r| r.rho_c).sum::<f64>() / n;
        out.push_str(&format!("{algorithm},{j_r},{m_c},{rho_c}\n"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> UpdateReport {
        UpdateReport {
            kl_after: 0.01,
            surrogate_before: 0.0,
            surrogate_after: 0.1,
            constraint_estimate: 0.0,
            accepted_exponent: Some(0),
            multiplier: 0.5,
            warning: None,
        }
    }

    #[test]
    fn means_over_episodes() {
        let row = compute_metrics(3, &[(1.0, 0.0), (3.0, 4.0)], None, 10.0, 1000, &report());
        assert_eq!(row.j_r, 2.0);
        assert_eq!(row.m_c, 2.0);
        assert_eq!(row.rho_c, 0.01);
    }

    #[test]
    fn empty_epoch_carries_forward() {
        let prev = compute_metrics(0, &[(5.0, 1.0)], None, 1.0, 100, &report());
        let row = compute_metrics(1, &[], Some(&prev), 2.0, 200, &report());
        assert_eq!(row.j_r, 5.0);
        assert_eq!(row.m_c, 1.0);
        assert_eq!(row.rho_c, 0.01);
    }

    #[test]
    fn csv_roundtrip_preserves_values_exactly() {
        let row = MetricsRow {
            epoch: 7,
            steps: 28_000,
            j_r: 1.2345678901234567,
            m_c: 0.1,
            rho_c: 3.3e-4,
            kl: 0.019999999,
            multiplier: 2.5,
        };
        let parsed = MetricsRow::parse_csv_line(&row.csv_line()).unwrap();
        assert_eq!(parsed, row);
    }

    #[test]
    fn summary_is_the_arithmetic_mean_of_final_rows() {
        let a = MetricsRow {
            epoch: 9,
            steps: 100,
            j_r: 1.0,
            m_c: 0.0,
            rho_c: 0.5,
            kl: 0.0,
            multiplier: 0.0,
        };
        let b = MetricsRow { j_r: 3.0, m_c: 4.0, rho_c: 0.7, ..a };
        let csv = summary_csv(&[("trpo".into(), vec![a, b])]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "algorithm,J_r,M_c,rho_c");
        let parts: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(parts[0], "trpo");
        assert_eq!(parts[1].parse::<f64>().unwrap(), 2.0);
        assert_eq!(parts[2].parse::<f64>().unwrap(), 2.0);
        assert!((parts[3].parse::<f64>().unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn single_seed_summary_equals_that_row() {
        let a = MetricsRow {
            epoch: 9,
            steps: 100,
            j_r: 1.5,
            m_c: 0.25,
            rho_c: 0.125,
            kl: 0.0,
            multiplier: 0.0,
        };
        let csv = summary_csv(&[("cpo".into(), vec![a])]).unwrap();
        assert!(csv.contains("cpo,1.5,0.25,0.125"));
    }
}
