//! Output directory handling, the run manifest and report files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use cbp_core::diagnostics::DiagnosticReport;

use crate::config::{ExperimentConfig, Format};
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub seed: u64,
    pub preset: Option<String>,
    pub parameters: &'a ExperimentConfig,
    pub version: &'static str,
    pub command_line: Vec<String>,
}

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Buffered writer for `name`; the closure fills it.
    pub fn write_with<F>(&self, name: &str, fill: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.path(name);
        let mut out = BufWriter::new(File::create(&path)?);
        fill(&mut out)?;
        out.flush()?;
        Ok(path)
    }

    pub fn write_manifest(&self, cfg: &ExperimentConfig, seed: u64, command_line: Vec<String>) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            seed,
            preset: cfg
                .preset
                .map(|p| serde_json::to_value(p).expect("enum serialises").as_str().unwrap_or_default().to_owned()),
            parameters: cfg,
            version: env!("CARGO_PKG_VERSION"),
            command_line,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        self.write_with("manifest.json", |out| writeln!(out, "{text}"))
    }

    /// `report.json`, `report.txt` and, when the report has a KS table,
    /// `convergence.csv`, filtered by the configured formats.
    pub fn write_report(&self, report: &DiagnosticReport, formats: &[Format]) -> Result<Vec<PathBuf>, CliError> {
        let mut written = Vec::new();
        if formats.contains(&Format::Json) {
            let text = report.to_json().expect("report serialises");
            written.push(self.write_with("report.json", |out| writeln!(out, "{text}"))?);
        }
        if formats.contains(&Format::Text) {
            let text = report.to_text();
            written.push(self.write_with("report.txt", |out| out.write_all(text.as_bytes()))?);
        }
        if formats.contains(&Format::Csv) && !report.ks_rows.is_empty() {
            written.push(self.write_with("convergence.csv", |out| report.write_ks_csv(out))?);
        }
        Ok(written)
    }
}
