//! Document loading and output writing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sectorflow::{Instance, Schedule, ScheduleDocument};

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_instance(path: &Path) -> CliResult<Instance> {
    Instance::from_json(&read_text(path)?)
        .map_err(|e| CliError::Document { context: path.display().to_string(), message: e.to_string() })
}

pub fn read_schedule(path: &Path, inst: &Instance) -> CliResult<Schedule> {
    ScheduleDocument::from_json(&read_text(path)?, inst)
        .map_err(|e| CliError::Document { context: path.display().to_string(), message: e.to_string() })
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    write_text(path, &text)
}

/// CSV writer with a one-line header.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Table {
    pub fn create(path: PathBuf, header: &[&str]) -> CliResult<Self> {
        let mut writer = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        writer.write_record(header).map_err(|e| csv_error(&path, e))?;
        Ok(Self { path, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| csv_error(&self.path, e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Document { context: path.display().to_string(), message: format!("{other:?}") },
    }
}

/// Reproducibility record written once into every output directory.
#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: String,
    pub instance: Option<PathBuf>,
    pub config: C,
    pub seed: u64,
    pub version: String,
    pub timestamp: u64,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(command: &str, instance: Option<&Path>, config: C, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            instance: instance.map(Path::to_path_buf),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}
