use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Version of every JSON document written by the runner.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// Output directory that remembers what was written into it.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
    started: Instant,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(OutputDir { root: root.to_path_buf(), files: Vec::new(), started: Instant::now() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(self.root.join(name))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(&Versioned { schema_version: SCHEMA_VERSION, body })?;
        std::fs::write(self.root.join(name), text + "\n")?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json`: config echo, seed, versions, thread count, wall time.
    pub fn finish(mut self, command: &str, config: &ExperimentConfig) -> Result<PathBuf, CliError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            config: &'a ExperimentConfig,
            seed: u64,
            version: &'a str,
            threads: usize,
            wall_time_seconds: f64,
            outputs: &'a [String],
        }
        let manifest = Manifest {
            command,
            config,
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION"),
            threads: rayon::current_num_threads(),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: &self.files.clone(),
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(self.root)
    }
}
