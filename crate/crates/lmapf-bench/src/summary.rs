//! Per-group means and confidence intervals over result rows.

use std::path::Path;

use anyhow::Context;
use lmapf::mapgen::Family;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::runner::ResultRow;

pub const SUMMARY_HEADER: &str =
    "family,n_agents,solver,runs,mean_throughput,ci95_throughput,mean_decision_ms";

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub family: Family,
    pub n_agents: usize,
    pub solver: String,
    pub runs: usize,
    pub mean_throughput: f64,
    /// 95% confidence half-width over the group's runs; 0 when the group
    /// holds a single run.
    pub ci95_throughput: f64,
    pub mean_decision_ms: f64,
}

impl SummaryRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{:.3}",
            self.family,
            self.n_agents,
            self.solver,
            self.runs,
            self.mean_throughput,
            self.ci95_throughput,
            self.mean_decision_ms
        )
    }
}

/// 95% half-width via Student-t over the values: `t(0.975, n-1) * s / sqrt(n)`
/// with `s` the population standard deviation of the observed values.
pub fn ci95_half_width(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 || values.iter().all(|v| *v == values[0]) {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return 0.0;
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid t distribution")
        .inverse_cdf(0.975);
    t * var.sqrt() / (n as f64).sqrt()
}

/// Group rows by (family, n_agents, solver) and reduce each group to its
/// mean throughput, 95% CI, and mean decision time. Failed rows are
/// excluded with a warning; empty groups are omitted.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: std::collections::BTreeMap<(String, usize, String), Vec<&ResultRow>> =
        std::collections::BTreeMap::new();
    for row in rows {
        if row.status != "ok" {
            log::warn!(
                "excluding failed run {} {} {} seed {}: {}",
                row.map_id,
                row.n_agents,
                row.solver,
                row.seed,
                row.status
            );
            continue;
        }
        groups
            .entry((row.family.to_string(), row.n_agents, row.solver.clone()))
            .or_default()
            .push(row);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((family, n_agents, solver), members) in groups {
        if members.len() < 2 {
            log::warn!(
                "group {family}/{n_agents}/{solver} has {} run(s); no confidence interval",
                members.len()
            );
        }
        let throughputs: Vec<f64> = members.iter().map(|r| r.throughput).collect();
        let mean = throughputs.iter().sum::<f64>() / throughputs.len() as f64;
        out.push(SummaryRow {
            family: family.parse().expect("family round-trips"),
            n_agents,
            solver,
            runs: members.len(),
            mean_throughput: mean,
            ci95_throughput: ci95_half_width(&throughputs),
            mean_decision_ms: members.iter().map(|r| r.decision_ms).sum::<f64>()
                / members.len() as f64,
        });
    }
    out
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> anyhow::Result<()> {
    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for row in rows {
        text.push_str(&row.to_csv());
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing summary {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(solver: &str, n_agents: usize, seed: u64, throughput: f64) -> ResultRow {
        ResultRow {
            map_id: "m".into(),
            family: Family::Maze,
            n_agents,
            solver: solver.into(),
            seed,
            throughput,
            goals: 0,
            decision_ms: 1.0,
            wall_s: 0.1,
            status: "ok".into(),
        }
    }

    #[test]
    fn identical_rows_have_zero_width() {
        assert_eq!(ci95_half_width(&[0.4, 0.4, 0.4]), 0.0);
    }

    #[test]
    fn two_point_interval_matches_hand_value() {
        // t(0.975, 1) = 12.706; s = 0.1; half-width = 12.706 * 0.1 / sqrt(2).
        let ci = ci95_half_width(&[0.4, 0.6]);
        let t = StudentsT::new(0.0, 1.0, 1.0).unwrap().inverse_cdf(0.975);
        assert!((ci - t * 0.1 / 2f64.sqrt()).abs() < 1e-12);
        assert!((ci - 0.898).abs() < 1e-3);
    }

    #[test]
    fn groups_respect_solver_labels() {
        let rows = vec![
            row("mats-lp", 8, 0, 0.5),
            row("mats-lp", 8, 1, 0.7),
            row("bare-policy", 8, 0, 0.2),
            row("mats-lp", 16, 0, 0.9),
        ];
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 3);
        let mats8 = summary
            .iter()
            .find(|s| s.solver == "mats-lp" && s.n_agents == 8)
            .unwrap();
        assert_eq!(mats8.runs, 2);
        assert!((mats8.mean_throughput - 0.6).abs() < 1e-12);
    }

    #[test]
    fn failed_rows_are_excluded() {
        let mut bad = row("mats-lp", 8, 2, 123.0);
        bad.status = "error: boom".into();
        let rows = vec![row("mats-lp", 8, 0, 0.4), row("mats-lp", 8, 1, 0.6), bad];
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 1);
        assert_eq!(summary[0].runs, 2);
        assert!((summary[0].mean_throughput - 0.5).abs() < 1e-12);
    }
}
