//! Run outputs: surface files, summary JSON and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{RunOutput, SecondLifeReport};
use crate::error::Result;
use crate::io::config::Config;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SURFACE_FILE: &str = "surface.csv";
pub const MARGINAL_COST_FILE: &str = "marginal_cost.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SECOND_LIFE_FILE: &str = "second_life.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub days: usize,
    pub samples: usize,
    pub total_seconds: f64,
    pub stage_seconds: Vec<f64>,
    pub surface_violations: usize,
    pub shape_adjustments: usize,
    pub units: BTreeMap<String, String>,
}

fn units() -> BTreeMap<String, String> {
    [
        ("value", "USD"),
        ("energy", "MWh"),
        ("power", "MW"),
        ("marginal_cost", "USD per MWh of capacity"),
        ("capacity_loss", "fraction of rated capacity"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

impl RunSummary {
    pub fn new(command: &str, config: &Config, out: &RunOutput) -> Self {
        Self {
            version: VERSION.to_string(),
            command: command.to_string(),
            config: config.to_map(),
            days: out.surface.days(),
            samples: out.surface.grid().len(),
            total_seconds: out.total_seconds,
            stage_seconds: out.stage_seconds.clone(),
            surface_violations: out.surface.violations(1e-6).len(),
            shape_adjustments: out.shape_adjustments,
            units: units(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn digest_file(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path)?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub status: String,
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    /// Records the inputs and writes the manifest with status `running`.
    pub fn begin(dir: &Path, config: &Config, inputs: &[PathBuf]) -> Result<Self> {
        let m = Self {
            version: VERSION.to_string(),
            status: "running".into(),
            config: config.to_map(),
            inputs: inputs.iter().map(|p| digest_file(p)).collect::<Result<_>>()?,
            outputs: Vec::new(),
        };
        m.write(dir)?;
        Ok(m)
    }

    /// Digests the outputs and rewrites the manifest with status `complete`.
    pub fn finish(mut self, dir: &Path, outputs: &[PathBuf]) -> Result<Self> {
        self.outputs = outputs.iter().map(|p| digest_file(p)).collect::<Result<_>>()?;
        self.status = "complete".into();
        self.write(dir)?;
        Ok(self)
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let f = fs::File::create(dir.join(MANIFEST_FILE))?;
        serde_json::to_writer_pretty(BufWriter::new(f), self)?;
        Ok(())
    }
}

/// Writes surface, marginal-cost and summary files; returns their paths.
pub fn write_run(dir: &Path, command: &str, config: &Config, out: &RunOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let surface = dir.join(SURFACE_FILE);
    let mut w = BufWriter::new(fs::File::create(&surface)?);
    out.surface.write_csv(&mut w)?;
    w.flush()?;
    let mc = dir.join(MARGINAL_COST_FILE);
    let mut w = BufWriter::new(fs::File::create(&mc)?);
    out.surface.write_marginal_cost_csv(&mut w)?;
    w.flush()?;
    let summary = dir.join(SUMMARY_FILE);
    let f = fs::File::create(&summary)?;
    serde_json::to_writer_pretty(BufWriter::new(f), &RunSummary::new(command, config, out))?;
    Ok(vec![surface, mc, summary])
}

/// Per-day ratio CSV; undefined ratios are left empty.
pub fn write_second_life_csv<W: Write>(mut w: W, report: &SecondLifeReport) -> Result<()> {
    writeln!(w, "day,ratio,weighted_new_usd,weighted_second_life_usd")?;
    for (n, r) in report.ratios.iter().enumerate() {
        let ratio = r.map(|x| format!("{x:.6}")).unwrap_or_default();
        writeln!(
            w,
            "{},{},{:.6},{:.6}",
            n + 1,
            ratio,
            report.weighted_new[n],
            report.weighted_second[n]
        )?;
    }
    Ok(())
}
