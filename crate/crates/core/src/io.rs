//! Tab-separated readers and writers for every on-disk artifact.
//!
//! Readers accept plain or gzip-compressed files (detected from the magic
//! bytes); writers compress when the path ends in `.gz`. Every table has a
//! header row and columns are located by name.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use nalgebra::DMatrix;

use crate::data::{CellCountMatrix, PseudobulkDataset, Subject, SubjectTable};
use crate::error::{Error, Result};
use crate::simulation::SimulationTruth;

pub const SUBJECT_ID: &str = "subject_id";
pub const EXPOSURE: &str = "X";
pub const OUTCOME: &str = "Y";

/// Shortest round-trip representation, switching to exponent form for very
/// small or large magnitudes.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = String::new();
        MultiGzDecoder::new(bytes.as_slice())
            .read_to_string(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        String::from_utf8(bytes).map_err(|_| Error::Parse {
            source_name: path.display().to_string(),
            line: 0,
            message: "file is not UTF-8 text".into(),
        })
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let gz = path.extension().is_some_and(|e| e == "gz");
    let bytes = if gz {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
        enc.finish().map_err(|e| Error::io(path, e))?
    } else {
        text.as_bytes().to_vec()
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// A parsed TSV: header plus rows, each row tagged with its 1-based line number.
#[derive(Debug, Clone)]
pub struct Table {
    pub source: String,
    pub header: Vec<String>,
    pub rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    pub fn parse(source: &str, text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (_, head) = lines.next().ok_or_else(|| Error::Parse {
            source_name: source.into(),
            line: 0,
            message: "empty file, expected a header row".into(),
        })?;
        let header: Vec<String> = head.split('\t').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (line, l) in lines {
            let fields: Vec<String> = l.split('\t').map(|s| s.trim().to_string()).collect();
            if fields.len() != header.len() {
                return Err(Error::Parse {
                    source_name: source.into(),
                    line,
                    message: format!("{} fields, header has {}", fields.len(), header.len()),
                });
            }
            rows.push((line, fields));
        }
        Ok(Self {
            source: source.into(),
            header,
            rows,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&path.display().to_string(), &read_text(path)?)
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            source_name: self.source.clone(),
            line: 1,
            message: format!("missing required column `{name}`"),
        })
    }

    fn number(&self, line: usize, column: &str, field: &str) -> Result<f64> {
        let v: f64 = field.parse().map_err(|_| Error::Parse {
            source_name: self.source.clone(),
            line,
            message: format!("column `{column}`: `{field}` is not a number"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                source_name: self.source.clone(),
                line,
                message: format!("column `{column}`: value {v} is not finite"),
            });
        }
        Ok(v)
    }
}

/// Subject metadata: `subject_id`, `X`, optional `Y`; every other column is a covariate.
pub fn read_metadata(path: &Path) -> Result<SubjectTable> {
    let t = Table::read(path)?;
    let id = t.column(SUBJECT_ID)?;
    let x = t.column(EXPOSURE)?;
    let y = t.header.iter().position(|h| h == OUTCOME);
    let cov: Vec<usize> = (0..t.header.len()).filter(|&k| k != id && k != x && Some(k) != y).collect();
    let mut subjects = Vec::with_capacity(t.rows.len());
    for (line, r) in &t.rows {
        let covariates = cov
            .iter()
            .map(|&k| t.number(*line, &t.header[k], &r[k]))
            .collect::<Result<_>>()?;
        let outcome = match y {
            Some(k) if !r[k].is_empty() && r[k] != "NA" => Some(t.number(*line, OUTCOME, &r[k])?),
            _ => None,
        };
        subjects.push(Subject {
            id: r[id].clone(),
            exposure: t.number(*line, EXPOSURE, &r[x])?,
            covariates,
            outcome,
        });
    }
    SubjectTable::new(cov.iter().map(|&k| t.header[k].clone()).collect(), subjects)
}

/// Like [`read_metadata`] but requires an outcome for every subject.
pub fn read_metadata_with_outcome(path: &Path) -> Result<SubjectTable> {
    let table = read_metadata(path)?;
    let t = Table::read(path)?;
    t.column(OUTCOME)?;
    table.outcomes()?;
    Ok(table)
}

pub fn metadata_tsv(subjects: &SubjectTable) -> String {
    let mut out = format!("{SUBJECT_ID}\t{EXPOSURE}");
    for c in subjects.covariate_names() {
        out.push('\t');
        out.push_str(c);
    }
    let has_y = subjects.subjects().iter().any(|s| s.outcome.is_some());
    if has_y {
        let _ = write!(out, "\t{OUTCOME}");
    }
    out.push('\n');
    for s in subjects.subjects() {
        let _ = write!(out, "{}\t{}", s.id, format_number(s.exposure));
        for v in &s.covariates {
            let _ = write!(out, "\t{}", format_number(*v));
        }
        if has_y {
            match s.outcome {
                Some(y) => {
                    let _ = write!(out, "\t{}", format_number(y));
                }
                None => out.push_str("\tNA"),
            }
        }
        out.push('\n');
    }
    out
}

/// Error listing identifiers present on one side only.
pub fn check_subject_alignment<'a>(
    expected: impl IntoIterator<Item = &'a str>,
    found: impl IntoIterator<Item = &'a str>,
    what: &str,
) -> Result<()> {
    let expected: Vec<&str> = expected.into_iter().collect();
    let found: Vec<&str> = found.into_iter().collect();
    let e: HashSet<&str> = expected.iter().copied().collect();
    let f: HashSet<&str> = found.iter().copied().collect();
    let missing: Vec<&str> = expected.iter().copied().filter(|s| !f.contains(s)).collect();
    let extra: Vec<&str> = found.iter().copied().filter(|s| !e.contains(s)).collect();
    if missing.is_empty() && extra.is_empty() {
        return Ok(());
    }
    let mut msg = format!("subjects in metadata and {what} do not match");
    if !missing.is_empty() {
        let _ = write!(msg, "; missing from {what}: {}", missing.join(", "));
    }
    if !extra.is_empty() {
        let _ = write!(msg, "; not in metadata: {}", extra.join(", "));
    }
    Err(Error::Structural(msg))
}

/// Subjects × genes matrix with a `subject_id` column, rows reordered to `subjects`.
pub fn read_matrix(path: &Path, subjects: &SubjectTable) -> Result<(Vec<String>, DMatrix<f64>)> {
    let t = Table::read(path)?;
    let id = t.column(SUBJECT_ID)?;
    let genes: Vec<String> = t.header.iter().enumerate().filter(|(k, _)| *k != id).map(|(_, h)| h.clone()).collect();
    check_subject_alignment(subjects.ids(), t.rows.iter().map(|(_, r)| r[id].as_str()), &t.source)?;
    let by_id: HashMap<&str, &(usize, Vec<String>)> = t.rows.iter().map(|row| (row.1[id].as_str(), row)).collect();
    let mut m = DMatrix::zeros(subjects.len(), genes.len());
    for (i, sid) in subjects.ids().enumerate() {
        let (line, r) = by_id[sid];
        let mut j = 0;
        for (k, field) in r.iter().enumerate() {
            if k == id {
                continue;
            }
            m[(i, j)] = t.number(*line, &t.header[k], field)?;
            j += 1;
        }
    }
    Ok((genes, m))
}

pub fn matrix_tsv(subjects: &SubjectTable, genes: &[String], m: &DMatrix<f64>) -> String {
    let mut out = String::from(SUBJECT_ID);
    for g in genes {
        out.push('\t');
        out.push_str(g);
    }
    out.push('\n');
    for (i, sid) in subjects.ids().enumerate() {
        out.push_str(sid);
        for j in 0..genes.len() {
            let _ = write!(out, "\t{}", format_number(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Dataset from metadata plus precomputed `M` and raw `F` matrices.
pub fn read_pseudobulk(metadata: &Path, m_path: &Path, f_path: &Path) -> Result<PseudobulkDataset> {
    let subjects = read_metadata(metadata)?;
    let (genes_m, m) = read_matrix(m_path, &subjects)?;
    let (genes_f, f) = read_matrix(f_path, &subjects)?;
    if genes_m != genes_f {
        return Err(Error::Structural(format!(
            "gene columns of {} and {} differ",
            m_path.display(),
            f_path.display()
        )));
    }
    PseudobulkDataset::from_matrices(subjects, genes_m, m, f)
}

fn count(t: &Table, line: usize, column: &str, field: &str) -> Result<f64> {
    let v = t.number(line, column, field)?;
    if v < 0.0 {
        return Err(Error::Parse {
            source_name: t.source.clone(),
            line,
            message: format!("column `{column}`: negative count {v}"),
        });
    }
    Ok(v)
}

/// Long-format counts (`subject_id`, `cell_id`, `gene`, `count`).
///
/// Absent (cell, gene) pairs are zeros. Genes and cells keep their order of
/// first appearance.
pub fn read_long_counts(path: &Path) -> Result<Vec<CellCountMatrix>> {
    let t = Table::read(path)?;
    let (sid, cid, gid, vid) = (t.column(SUBJECT_ID)?, t.column("cell_id")?, t.column("gene")?, t.column("count")?);
    let mut genes: Vec<String> = Vec::new();
    let mut gene_index: HashMap<String, usize> = HashMap::new();
    let mut subjects: Vec<(String, Vec<String>, HashMap<String, usize>, Vec<(usize, usize, f64)>)> = Vec::new();
    let mut subject_index: HashMap<String, usize> = HashMap::new();
    for (line, r) in &t.rows {
        let g = *gene_index.entry(r[gid].clone()).or_insert_with(|| {
            genes.push(r[gid].clone());
            genes.len() - 1
        });
        let s = *subject_index.entry(r[sid].clone()).or_insert_with(|| {
            subjects.push((r[sid].clone(), Vec::new(), HashMap::new(), Vec::new()));
            subjects.len() - 1
        });
        let entry = &mut subjects[s];
        let c = *entry.2.entry(r[cid].clone()).or_insert_with(|| {
            entry.1.push(r[cid].clone());
            entry.1.len() - 1
        });
        entry.3.push((c, g, count(&t, *line, "count", &r[vid])?));
    }
    let ng = genes.len();
    subjects
        .into_iter()
        .map(|(id, cells, _, entries)| {
            let mut values = vec![0.0; cells.len() * ng];
            for (c, g, v) in entries {
                values[c * ng + g] += v;
            }
            CellCountMatrix::new(id, genes.clone(), cells.len(), values)
        })
        .collect()
}

/// Every (cell, gene) entry including zeros, so the reader recovers the exact layout.
pub fn long_counts_tsv(cells: &[CellCountMatrix]) -> String {
    let mut out = format!("{SUBJECT_ID}\tcell_id\tgene\tcount\n");
    for mat in cells {
        for c in 0..mat.n_cells() {
            for (g, v) in mat.gene_names().iter().zip(mat.cell(c)) {
                let _ = writeln!(out, "{}\tcell{c}\t{g}\t{v}", mat.subject_id());
            }
        }
    }
    out
}

/// One cells × genes table (`cell_id` then gene columns).
pub fn read_subject_counts(subject_id: &str, path: &Path) -> Result<CellCountMatrix> {
    let t = Table::read(path)?;
    let cid = t.column("cell_id")?;
    let genes: Vec<String> = t.header.iter().enumerate().filter(|(k, _)| *k != cid).map(|(_, h)| h.clone()).collect();
    let mut values = Vec::with_capacity(t.rows.len() * genes.len());
    for (line, r) in &t.rows {
        for (k, field) in r.iter().enumerate() {
            if k != cid {
                values.push(count(&t, *line, &t.header[k], field)?);
            }
        }
    }
    CellCountMatrix::new(subject_id, genes, t.rows.len(), values)
}

pub fn subject_counts_tsv(mat: &CellCountMatrix) -> String {
    let mut out = String::from("cell_id");
    for g in mat.gene_names() {
        out.push('\t');
        out.push_str(g);
    }
    out.push('\n');
    for c in 0..mat.n_cells() {
        let _ = write!(out, "cell{c}");
        for v in mat.cell(c) {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

/// Per-subject count files named `<subject_id>.tsv` or `<subject_id>.tsv.gz`.
pub fn read_subject_count_dir(dir: &Path, subjects: &SubjectTable) -> Result<Vec<CellCountMatrix>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(id) = name.strip_suffix(".tsv.gz").or_else(|| name.strip_suffix(".tsv")) {
            found.push((id.to_string(), path.clone()));
        }
    }
    found.sort();
    check_subject_alignment(subjects.ids(), found.iter().map(|(id, _)| id.as_str()), &dir.display().to_string())?;
    found.iter().map(|(id, p)| read_subject_counts(id, p)).collect()
}

pub fn subject_count_path(dir: &Path, subject_id: &str) -> PathBuf {
    dir.join(format!("{subject_id}.tsv"))
}

pub fn truth_tsv(truth: &SimulationTruth) -> String {
    let mut out = String::from("gene\ttype\talpha_x\tgamma_x\tbeta_m\tbeta_f\tdispersion\n");
    for j in 0..truth.gene_names.len() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            truth.gene_names[j],
            truth.mediator_type[j].as_str(),
            format_number(truth.alpha_x[j]),
            format_number(truth.gamma_x[j]),
            format_number(truth.beta_m[j]),
            format_number(truth.beta_f[j]),
            format_number(truth.dispersion[j])
        );
    }
    out
}
