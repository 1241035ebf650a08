use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::score::{score_replicate, ReplicateScore};
use crate::error::Result;
use crate::mediation::{run_medzisc, run_naive, MediationConfig, Method};
use crate::simulation::{generate_replicate, ScenarioConfig};

/// Grid coordinates of a benchmark cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub n: usize,
    pub cells: usize,
    pub genes: usize,
}

impl CellKey {
    fn of(config: &ScenarioConfig) -> Self {
        Self {
            n: config.n,
            cells: config.cells,
            genes: config.genes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    /// Position of the cell in the grid.
    pub cell_index: usize,
    pub cell: CellKey,
    pub method: Method,
    pub replicate: u64,
    pub score: Option<ReplicateScore>,
    pub error: Option<String>,
}

/// Means over the successful replicates of one (cell, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub cell: CellKey,
    pub method: Method,
    pub replicates: usize,
    pub failed: usize,
    pub power_m: Option<f64>,
    pub power_f: Option<f64>,
    pub fdr_m: Option<f64>,
    pub fdr_f: Option<f64>,
    pub mean_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchmarkRow>,
    pub replicates: Vec<ReplicateRecord>,
}

/// Optional bounds on the table means for one method.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodThresholds {
    pub min_power_m: Option<f64>,
    pub min_power_f: Option<f64>,
    pub max_fdr_m: Option<f64>,
    pub max_fdr_f: Option<f64>,
    pub min_fdr_m: Option<f64>,
    pub min_fdr_f: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub medzisc: Option<MethodThresholds>,
    pub naive: Option<MethodThresholds>,
}

impl Thresholds {
    /// Human-readable description of every violated bound. A missing mean
    /// violates any bound placed on it.
    pub fn violations(&self, table: &BenchmarkTable) -> Vec<String> {
        let mut out = Vec::new();
        for row in &table.rows {
            let t = match row.method {
                Method::Medzisc => &self.medzisc,
                Method::Naive => &self.naive,
            };
            let Some(t) = t else { continue };
            let checks = [
                ("power_m", row.power_m, t.min_power_m, true),
                ("power_f", row.power_f, t.min_power_f, true),
                ("fdr_m", row.fdr_m, t.min_fdr_m, true),
                ("fdr_f", row.fdr_f, t.min_fdr_f, true),
                ("fdr_m", row.fdr_m, t.max_fdr_m, false),
                ("fdr_f", row.fdr_f, t.max_fdr_f, false),
            ];
            for (name, value, bound, is_min) in checks {
                let Some(bound) = bound else { continue };
                let ok = value.is_some_and(|v| if is_min { v >= bound } else { v <= bound });
                if !ok {
                    let c = row.cell;
                    out.push(format!(
                        "n={} c={} g={} {}: {name} = {} violates {} {bound}",
                        c.n,
                        c.cells,
                        c.genes,
                        row.method.as_str(),
                        fmt_opt(value),
                        if is_min { ">=" } else { "<=" },
                    ));
                }
            }
        }
        out
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

fn run_one(cell_index: usize, config: &ScenarioConfig, replicate: u64, methods: &[Method], mediation: &MediationConfig) -> Vec<ReplicateRecord> {
    let cell = CellKey::of(config);
    let failed = |method, e: String| ReplicateRecord {
        cell_index,
        cell,
        method,
        replicate,
        score: None,
        error: Some(e),
    };
    let data = generate_replicate(config, replicate).and_then(|sim| Ok((sim.pseudobulk()?.0, sim.truth)));
    let (dataset, truth) = match data {
        Ok(d) => d,
        Err(e) => return methods.iter().map(|&m| failed(m, e.to_string())).collect(),
    };
    let cfg = MediationConfig {
        seed: mediation.seed.wrapping_add(replicate),
        ..mediation.clone()
    };
    methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let report = match method {
                Method::Medzisc => run_medzisc(&dataset, &cfg),
                Method::Naive => run_naive(&dataset, &cfg),
            };
            match report {
                Ok(r) => {
                    let mut score = score_replicate(&r, &truth);
                    score.replicate = replicate;
                    score.seconds = start.elapsed().as_secs_f64();
                    log::info!(
                        "n={} c={} g={} replicate {replicate} {}: {} M / {} F discoveries",
                        cell.n,
                        cell.cells,
                        cell.genes,
                        method.as_str(),
                        score.m.discoveries,
                        score.f.discoveries
                    );
                    ReplicateRecord {
                        cell_index,
                        cell,
                        method,
                        replicate,
                        score: Some(score),
                        error: None,
                    }
                }
                Err(e) => {
                    log::warn!("replicate {replicate} {} failed: {e}", method.as_str());
                    failed(method, e.to_string())
                }
            }
        })
        .collect()
}

/// Generate, analyze and score every replicate of every grid cell.
///
/// Replicates run in parallel; records and means are assembled in
/// (cell, replicate, method) order so the result does not depend on scheduling.
pub fn run_benchmark(grid: &[ScenarioConfig], methods: &[Method], mediation: &MediationConfig) -> Result<BenchmarkTable> {
    for c in grid {
        c.validate()?;
    }
    mediation.validate()?;
    let jobs: Vec<(usize, u64)> = grid
        .iter()
        .enumerate()
        .flat_map(|(i, c)| (0..c.replicates as u64).map(move |r| (i, r)))
        .collect();
    let replicates: Vec<ReplicateRecord> = jobs
        .par_iter()
        .map(|&(i, r)| run_one(i, &grid[i], r, methods, mediation))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let mut rows = Vec::new();
    for (i, config) in grid.iter().enumerate() {
        let cell = CellKey::of(config);
        for &method in methods {
            let recs: Vec<&ReplicateRecord> = replicates
                .iter()
                .filter(|r| r.cell_index == i && r.method == method)
                .collect();
            let ok: Vec<&ReplicateScore> = recs.iter().filter_map(|r| r.score.as_ref()).collect();
            rows.push(BenchmarkRow {
                cell,
                method,
                replicates: ok.len(),
                failed: recs.len() - ok.len(),
                power_m: mean(ok.iter().filter_map(|s| s.m.power)),
                power_f: mean(ok.iter().filter_map(|s| s.f.power)),
                fdr_m: mean(ok.iter().map(|s| s.m.fdr)),
                fdr_f: mean(ok.iter().map(|s| s.f.fdr)),
                mean_seconds: mean(ok.iter().map(|s| s.seconds)),
            });
        }
    }
    Ok(BenchmarkTable { rows, replicates })
}

impl BenchmarkTable {
    pub fn row(&self, cell: CellKey, method: Method) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.cell == cell && r.method == method)
    }

    /// Power and FDR means. Timing lives in [`Self::timing_tsv`] so this table
    /// is reproducible byte for byte.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("n\tc\tg\tmethod\treplicates\tfailed\tpower_m\tpower_f\tfdr_m\tfdr_f\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.cell.n,
                r.cell.cells,
                r.cell.genes,
                r.method.as_str(),
                r.replicates,
                r.failed,
                fmt_opt(r.power_m),
                fmt_opt(r.power_f),
                fmt_opt(r.fdr_m),
                fmt_opt(r.fdr_f)
            );
        }
        out
    }

    pub fn timing_tsv(&self) -> String {
        let mut out = String::from("n\tc\tg\tmethod\tmean_seconds\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.cell.n,
                r.cell.cells,
                r.cell.genes,
                r.method.as_str(),
                fmt_opt(r.mean_seconds)
            );
        }
        out
    }

    /// Per-replicate scores without timing.
    pub fn replicates_csv(&self) -> String {
        let mut out = String::from(
            "n,c,g,method,replicate,power_m,power_f,fdr_m,fdr_f,discoveries_m,true_positives_m,discoveries_f,true_positives_f,error\n",
        );
        for r in &self.replicates {
            let c = r.cell;
            let _ = write!(out, "{},{},{},{},{},", c.n, c.cells, c.genes, r.method.as_str(), r.replicate);
            match &r.score {
                Some(s) => {
                    let _ = writeln!(
                        out,
                        "{},{},{:.6},{:.6},{},{},{},{},",
                        fmt_opt(s.m.power),
                        fmt_opt(s.f.power),
                        s.m.fdr,
                        s.f.fdr,
                        s.m.discoveries,
                        s.m.true_positives,
                        s.f.discoveries,
                        s.f.true_positives
                    );
                }
                None => {
                    let msg = r.error.as_deref().unwrap_or("").replace(['"', '\n'], " ");
                    let _ = writeln!(out, "NA,NA,NA,NA,NA,NA,NA,NA,\"{msg}\"");
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}
