//! Config-driven experiment runner for the phygital laboratory.
//!
//! A run is `parse_config` → [`run_experiment`] → [`output::emit_results`].
//! Identical config text and seed give an identical run id and
//! byte-identical output files.

pub mod config;
mod experiments;
pub mod output;
pub mod seed;

use std::path::{Path, PathBuf};
use std::thread;
use std::time::Instant;

pub use config::{parse_config, ConfigErrors, ExperimentKind, SimConfig};
pub use output::{emit_results, Manifest, RunResult, Table};

use experiments::Output;
use output::{run_id, sha256_hex};
use seed::Seeder;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error("experiment `{experiment}`{}: {source}", point.map_or(String::new(), |p| format!(" (sweep point {p})")))]
    Runtime {
        experiment: &'static str,
        point: Option<usize>,
        #[source]
        source: phygital_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code: 1 config, 2 runtime, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Runtime { .. } => 2,
            Error::Io { .. } => 3,
        }
    }
}

pub fn load_config(path: &Path) -> Result<SimConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(parse_config(&text)?)
}

/// Hash of the canonical JSON form of the config. Seed and output
/// directory are not part of it.
pub fn config_hash(cfg: &SimConfig) -> String {
    sha256_hex(serde_json::to_string(cfg).expect("configs serialize").as_bytes())
}

pub fn list_experiments() -> Vec<(&'static str, &'static str)> {
    ExperimentKind::ALL.iter().map(|k| (k.name(), k.summary())).collect()
}

pub fn run_experiment(cfg: &SimConfig) -> Result<RunResult, Error> {
    let started = Instant::now();
    let seeder = Seeder::new(cfg.seed);
    let layout = cfg.layout();
    let experiment = cfg.experiment.name();
    let fail = |point| move |source| Error::Runtime { experiment, point, source };
    let mut tables = Vec::new();
    let mut warnings = cfg.warnings.clone();
    match &cfg.sweep {
        None => {
            let out = experiments::run(&cfg.body, layout, &seeder).map_err(fail(None))?;
            tables = out.tables;
            warnings.extend(out.warnings);
        }
        Some(sweep) => {
            // Points are isolated runs; results are collected in point order.
            let results: Vec<Result<Output, phygital_core::Error>> = thread::scope(|s| {
                let handles: Vec<_> = sweep
                    .points
                    .iter()
                    .map(|p| {
                        let seeder = &seeder;
                        s.spawn(move || experiments::run(&p.body, layout, seeder))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
            });
            let mut index = Vec::with_capacity(results.len());
            for (i, (r, p)) in results.into_iter().zip(&sweep.points).enumerate() {
                let out = r.map_err(fail(Some(i)))?;
                let dir = format!("point_{i:03}");
                index.push(vec![i.to_string(), sweep.param.clone(), p.value.clone(), dir.clone()]);
                warnings.extend(out.warnings.into_iter().map(|w| format!("{dir}: {w}")));
                tables.extend(out.tables.into_iter().map(|t| t.prefixed(&dir)));
            }
            tables.push(Table::csv("sweep.csv", ["point", "param", "value", "dir"], index));
        }
    }
    let config_hash = config_hash(cfg);
    Ok(RunResult {
        experiment: experiment.to_string(),
        run_id: run_id(&config_hash, cfg.seed),
        config_hash,
        seed: cfg.seed,
        tables,
        warnings,
        wall_time: started.elapsed(),
    })
}

/// Runs and writes everything into `dir`.
pub fn run_to_dir(cfg: &SimConfig, dir: &Path) -> Result<(RunResult, Manifest), Error> {
    let res = run_experiment(cfg)?;
    let manifest = emit_results(&res, dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    Ok((res, manifest))
}
