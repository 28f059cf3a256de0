//! CSV output.
//!
//! Every file opens with one comment line carrying the schema name and
//! version, the resolved-config hash and the seed, followed by a header row:
//!
//! ```text
//! # schema=isac-sim/curve v1 config_sha256=<hex> seed=7
//! step,episode,reward,...
//! ```
//!
//! Floats use the shortest round-trip representation, so identical inputs
//! give identical bytes.

use std::fmt::Display;
use std::path::Path;

use crate::baselines::{relative_gap, BaselineKind, EvalSummary};
use crate::env::SlotRecord;
use crate::error::{Error, Result};
use crate::semantics::{heatmap_rows, RiskHeatmap};
use crate::training::StepLog;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub schema: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

fn cell(v: impl Display) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(cell).unwrap_or_default()
}

impl CsvTable {
    pub fn new(schema: &'static str, columns: Vec<&'static str>) -> Self {
        Self {
            schema,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, config_hash: &str, seed: u64) -> String {
        let mut out = format!(
            "# schema=isac-sim/{} v{SCHEMA_VERSION} config_sha256={config_hash} seed={seed}\n",
            self.schema
        );
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>, config_hash: &str, seed: u64) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.render(config_hash, seed)).map_err(|e| Error::io(path, e))
    }
}

pub fn curve_table(curve: &[StepLog]) -> CsvTable {
    let mut t = CsvTable::new(
        "curve",
        vec!["step", "episode", "reward", "energy_efficiency", "pe_range", "pe_velocity", "objective", "penalties", "critic_loss"],
    );
    for s in curve {
        t.push(vec![
            cell(s.step),
            cell(s.episode),
            cell(s.reward),
            cell(s.energy_efficiency),
            cell(s.pe_range),
            cell(s.pe_velocity),
            cell(s.objective),
            cell(s.penalties),
            opt(s.critic_loss),
        ]);
    }
    t
}

/// Mean reward of `kind` for `seed`, if present.
fn reward_of(rows: &[EvalSummary], kind: BaselineKind, seed: u64) -> Option<f64> {
    rows.iter().find(|r| r.kind == kind && r.seed == seed).map(|r| r.mean_reward)
}

/// One row per `(kind, seed)`; the gap is against RawImage on the same seed.
pub fn eval_table(rows: &[EvalSummary]) -> CsvTable {
    let mut t = CsvTable::new(
        "eval",
        vec![
            "kind",
            "seed",
            "mean_reward",
            "std_reward",
            "energy_efficiency",
            "pe_range",
            "pe_velocity",
            "objective",
            "penalty_rate",
            "gap_pct",
        ],
    );
    for r in rows {
        let gap = reward_of(rows, BaselineKind::RawImage, r.seed).and_then(|raw| relative_gap(raw, r.mean_reward).ok());
        t.push(vec![
            cell(r.kind),
            cell(r.seed),
            cell(r.mean_reward),
            cell(r.std_reward),
            cell(r.energy_efficiency),
            cell(r.pe_range),
            cell(r.pe_velocity),
            cell(r.objective),
            cell(r.penalty_rate),
            opt(gap),
        ]);
    }
    t
}

/// Across-seed statistics for one group of evaluation rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    /// Standard error of the mean.
    pub se: f64,
}

pub fn group_stats(values: &[f64]) -> GroupStats {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    GroupStats {
        n,
        mean,
        std,
        se: std / (n as f64).sqrt(),
    }
}

/// One row per kind: across-seed mean, std, standard error, gap and rank.
pub fn eval_summary_table(rows: &[EvalSummary]) -> CsvTable {
    let mut kinds: Vec<BaselineKind> = Vec::new();
    for r in rows {
        if !kinds.contains(&r.kind) {
            kinds.push(r.kind);
        }
    }
    let stats: Vec<(BaselineKind, GroupStats)> = kinds
        .iter()
        .map(|k| {
            let v: Vec<f64> = rows.iter().filter(|r| r.kind == *k).map(|r| r.mean_reward).collect();
            (*k, group_stats(&v))
        })
        .collect();
    let raw = stats.iter().find(|(k, _)| *k == BaselineKind::RawImage).map(|(_, s)| s.mean);
    let mut order: Vec<usize> = (0..stats.len()).collect();
    order.sort_by(|a, b| stats[*b].1.mean.total_cmp(&stats[*a].1.mean).then(a.cmp(b)));
    let mut t = CsvTable::new("eval_summary", vec!["kind", "n_seeds", "mean_reward", "std_reward", "se_reward", "gap_pct", "rank"]);
    for (i, (k, s)) in stats.iter().enumerate() {
        let rank = order.iter().position(|j| *j == i).expect("index present") + 1;
        t.push(vec![
            cell(k),
            cell(s.n),
            cell(s.mean),
            cell(s.std),
            cell(s.se),
            opt(raw.and_then(|r| relative_gap(r, s.mean).ok())),
            cell(rank),
        ]);
    }
    t
}

pub fn trace_table(records: &[SlotRecord]) -> CsvTable {
    let mut t = CsvTable::new(
        "trace",
        vec![
            "slot", "agent", "rat", "power", "beam", "sinr", "rate", "ee_term", "pe_term", "sr_term", "penalty", "reward", "risk", "priority",
        ],
    );
    for r in records {
        t.push(vec![
            cell(r.slot),
            cell(r.agent),
            cell(r.rat.as_str()),
            cell(r.power),
            cell(r.beam),
            cell(r.sinr),
            cell(r.rate),
            cell(r.reward.ee_term),
            cell(r.reward.pe_term),
            cell(r.reward.sr_term),
            cell(u8::from(r.reward.penalty)),
            cell(r.reward.total),
            cell(r.risk),
            cell(r.priority),
        ]);
    }
    t
}

pub fn heatmap_table(map: &RiskHeatmap) -> CsvTable {
    let mut t = CsvTable::new("heatmap", vec!["ix", "iy", "x", "y", "risk"]);
    for (ix, iy, x, y, v) in heatmap_rows(map) {
        t.push(vec![cell(ix), cell(iy), cell(x), cell(y), cell(v)]);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub value: String,
    pub summary: EvalSummary,
}

pub fn sweep_table(rows: &[SweepRow]) -> CsvTable {
    let mut t = CsvTable::new(
        "sweep",
        vec!["param", "value", "kind", "seed", "mean_reward", "std_reward", "energy_efficiency", "objective", "penalty_rate"],
    );
    for r in rows {
        let s = &r.summary;
        t.push(vec![
            r.param.clone(),
            r.value.clone(),
            cell(s.kind),
            cell(s.seed),
            cell(s.mean_reward),
            cell(s.std_reward),
            cell(s.energy_efficiency),
            cell(s.objective),
            cell(s.penalty_rate),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(kind: BaselineKind, seed: u64, r: f64) -> EvalSummary {
        EvalSummary {
            kind,
            seed,
            slots: 100,
            mean_reward: r,
            std_reward: 0.1,
            energy_efficiency: 1.0,
            pe_range: 2.0,
            pe_velocity: 3.0,
            objective: 2.0,
            penalty_rate: 0.0,
        }
    }

    #[test]
    fn header_and_rows() {
        let mut t = CsvTable::new("x", vec!["a", "b"]);
        t.push(vec!["1".into(), "0.1".into()]);
        assert_eq!(t.render("abc", 5), "# schema=isac-sim/x v1 config_sha256=abc seed=5\na,b\n1,0.1\n");
    }

    #[test]
    fn raw_gap_to_itself_is_zero() {
        let rows = vec![
            summary(BaselineKind::RawImage, 0, 0.5),
            summary(BaselineKind::Random, 0, -3.0),
            summary(BaselineKind::RawImage, 1, 0.4),
            summary(BaselineKind::Random, 1, -2.0),
        ];
        let t = eval_table(&rows);
        assert_eq!(t.rows[0][9], "0");
        assert_eq!(t.rows[1][9], "700");
        let s = eval_summary_table(&rows);
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.rows[0][0], "raw_image");
        assert_eq!(s.rows[0][6], "1");
        assert_eq!(s.rows[1][6], "2");
    }

    #[test]
    fn group_stats_by_hand() {
        let g = group_stats(&[1.0, 3.0]);
        assert_eq!(g.mean, 2.0);
        assert!((g.std - 2f64.sqrt()).abs() < 1e-15);
        assert!((g.se - 1.0).abs() < 1e-15);
    }
}
