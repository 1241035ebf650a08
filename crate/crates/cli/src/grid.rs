//! Benchmark grid files: a scenario TOML whose `n`, `cells` and `genes` may be
//! lists, plus optional `methods`, `[mediation]` and `[thresholds.*]` tables.

use medzisc::evaluation::Thresholds;
use medzisc::mediation::{MediationConfig, Method};
use medzisc::simulation::ScenarioConfig;
use serde::Serialize;
use toml::{Table, Value};

#[derive(Debug, Clone, Serialize)]
pub struct Grid {
    pub cells: Vec<ScenarioConfig>,
    pub methods: Vec<Method>,
    pub mediation: MediationConfig,
    pub thresholds: Thresholds,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> anyhow::Error {
    anyhow::anyhow!("invalid grid field `{field}`: {msg}")
}

fn sizes(table: &mut Table, key: &str) -> anyhow::Result<Option<Vec<i64>>> {
    match table.remove(key) {
        None => Ok(None),
        Some(Value::Integer(v)) => Ok(Some(vec![v])),
        Some(Value::Array(items)) if !items.is_empty() => items
            .into_iter()
            .map(|v| v.as_integer().ok_or_else(|| invalid(key, "list entries must be integers")))
            .collect::<anyhow::Result<_>>()
            .map(Some),
        Some(_) => Err(invalid(key, "expected an integer or a non-empty list of integers")),
    }
}

pub fn parse(text: &str) -> anyhow::Result<Grid> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| anyhow::anyhow!("{}", e.to_string().trim()))?;

    let methods = match table.remove("methods") {
        None => vec![Method::Medzisc, Method::Naive],
        Some(Value::Array(items)) => items
            .into_iter()
            .map(|v| {
                v.as_str()
                    .ok_or_else(|| invalid("methods", "entries must be strings"))?
                    .parse::<Method>()
                    .map_err(|e| invalid("methods", e))
            })
            .collect::<anyhow::Result<_>>()?,
        Some(_) => return Err(invalid("methods", "expected a list")),
    };
    let mediation: MediationConfig = match table.remove("mediation") {
        None => MediationConfig::default(),
        Some(v) => v.try_into().map_err(|e: toml::de::Error| invalid("mediation", e.to_string().trim()))?,
    };
    mediation.validate()?;
    let thresholds: Thresholds = match table.remove("thresholds") {
        None => Thresholds::default(),
        Some(v) => v.try_into().map_err(|e: toml::de::Error| invalid("thresholds", e.to_string().trim()))?,
    };

    let ns = sizes(&mut table, "n")?;
    let cs = sizes(&mut table, "cells")?;
    let gs = sizes(&mut table, "genes")?;
    let base: ScenarioConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| anyhow::anyhow!("{}", e.to_string().trim()))?;
    let as_usize = |key: &str, v: i64| usize::try_from(v).map_err(|_| invalid(key, format!("{v} is negative")));

    let mut cells = Vec::new();
    for &n in ns.as_deref().unwrap_or(&[base.n as i64]) {
        for &c in cs.as_deref().unwrap_or(&[base.cells as i64]) {
            for &g in gs.as_deref().unwrap_or(&[base.genes as i64]) {
                let cfg = ScenarioConfig {
                    n: as_usize("n", n)?,
                    cells: as_usize("cells", c)?,
                    genes: as_usize("genes", g)?,
                    ..base.clone()
                };
                cfg.validate()?;
                cells.push(ScenarioConfig {
                    n_true: Some(cfg.n_true()),
                    ..cfg
                });
            }
        }
    }
    Ok(Grid {
        cells,
        methods,
        mediation,
        thresholds,
    })
}
