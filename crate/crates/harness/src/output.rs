//! Result tables, run identity and atomic emission.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Bumped whenever the layout of any emitted table changes.
pub const ARTIFACT_VERSION: &str = concat!("phygital-", env!("CARGO_PKG_VERSION"), "/1");

#[derive(Debug, Clone, PartialEq)]
pub enum TableData {
    Csv { header: Vec<String>, rows: Vec<Vec<String>> },
    Json(serde_json::Value),
}

/// One output file. `name` is a relative path such as `point_003/trajectory.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub data: TableData,
}

impl Table {
    pub fn csv<S: Into<String>>(name: impl Into<String>, header: impl IntoIterator<Item = S>, rows: Vec<Vec<String>>) -> Self {
        Self {
            name: name.into(),
            data: TableData::Csv { header: header.into_iter().map(Into::into).collect(), rows },
        }
    }

    pub fn json(name: impl Into<String>, value: &impl Serialize) -> Self {
        Self {
            name: name.into(),
            data: TableData::Json(serde_json::to_value(value).expect("result types serialize")),
        }
    }

    /// Rows for CSV; for JSON, array length or 1.
    pub fn rows(&self) -> usize {
        match &self.data {
            TableData::Csv { rows, .. } => rows.len(),
            TableData::Json(serde_json::Value::Array(a)) => a.len(),
            TableData::Json(_) => 1,
        }
    }

    pub fn render(&self) -> String {
        match &self.data {
            TableData::Csv { header, rows } => {
                let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
                for r in std::iter::once(header).chain(rows) {
                    w.write_record(r).expect("writing to memory cannot fail");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("records are UTF-8")
            }
            TableData::Json(v) => {
                let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
                s.push('\n');
                s
            }
        }
    }

    pub fn prefixed(mut self, dir: &str) -> Self {
        self.name = format!("{dir}/{}", self.name);
        self
    }
}

/// Shortest round-trip form, in exponent notation for very small or very
/// large magnitudes; infinities and NaN spelled out.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        let a = x.abs();
        if a != 0.0 && !(1e-5..1e16).contains(&a) {
            format!("{x:e}")
        } else {
            format!("{x}")
        }
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn nums(xs: &[f64]) -> impl Iterator<Item = String> + '_ {
    xs.iter().map(|x| num(*x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub experiment: String,
    pub run_id: String,
    pub config_hash: String,
    pub seed: u64,
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
    /// Reported on the console only; kept out of the manifest so output
    /// trees stay byte-identical.
    pub wall_time: Duration,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `sha256(config_hash ‖ ":" ‖ seed)`.
pub fn run_id(config_hash: &str, seed: u64) -> String {
    sha256_hex(format!("{config_hash}:{seed}").as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub file: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub run_id: String,
    pub config_hash: String,
    pub seed: u64,
    pub artifact_version: String,
    pub experiment: String,
    pub tables: Vec<ManifestEntry>,
    pub warnings: Vec<String>,
}

fn table_stem(name: &str) -> String {
    let file = name.rsplit('/').next().unwrap_or(name);
    let stem = file.rsplit_once('.').map_or(file, |(s, _)| s);
    match name.rsplit_once('/') {
        Some((dir, _)) => format!("{dir}/{stem}"),
        None => stem.to_string(),
    }
}

fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(path.parent().unwrap_or(Path::new(".")))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes every table plus `manifest.json` into `dir`.
///
/// Writability is probed before any table is written, so an unwritable
/// target fails without leaving partial output. Each file is written to a
/// temporary sibling and renamed into place.
pub fn emit_results(res: &RunResult, dir: &Path) -> std::io::Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut subdirs: Vec<PathBuf> = res
        .tables
        .iter()
        .filter_map(|t| Path::new(&t.name).parent().map(|p| dir.join(p)))
        .collect();
    subdirs.sort();
    subdirs.dedup();
    for d in &subdirs {
        fs::create_dir_all(d)?;
    }
    for d in std::iter::once(&dir.to_path_buf()).chain(&subdirs) {
        tempfile::tempfile_in(d)?;
    }

    let mut entries = Vec::with_capacity(res.tables.len());
    for t in &res.tables {
        write_atomic(&dir.join(&t.name), t.render().as_bytes())?;
        entries.push(ManifestEntry { name: table_stem(&t.name), file: t.name.clone(), rows: t.rows() });
    }
    let manifest = Manifest {
        run_id: res.run_id.clone(),
        config_hash: res.config_hash.clone(),
        seed: res.seed,
        artifact_version: ARTIFACT_VERSION.to_string(),
        experiment: res.experiment.clone(),
        tables: entries,
        warnings: res.warnings.clone(),
    };
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    body.push('\n');
    write_atomic(&dir.join("manifest.json"), body.as_bytes())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e21, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn stems_keep_directories() {
        assert_eq!(table_stem("point_001/trajectory.csv"), "point_001/trajectory");
        assert_eq!(table_stem("summary.json"), "summary");
    }
}
