//! Per-iteration training metrics as JSON lines.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub agent: String,
    pub policy_loss: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iteration: u64,
    pub wall_seconds: f64,
    pub alpha: f64,
    pub mean_r_total: f64,
    pub mean_r_catch: f64,
    pub mean_r_throw: f64,
    pub agents: Vec<AgentMetrics>,
    pub value_loss: f64,
    pub mean_episode_length: f64,
    pub failure_rate: f64,
    pub mean_thrower_action: f64,
    pub update_order: Vec<String>,
}

impl MetricsRecord {
    pub fn check_finite(&self) -> Result<()> {
        let mut fields = vec![
            ("wall_seconds", self.wall_seconds),
            ("alpha", self.alpha),
            ("mean_r_total", self.mean_r_total),
            ("mean_r_catch", self.mean_r_catch),
            ("mean_r_throw", self.mean_r_throw),
            ("value_loss", self.value_loss),
            ("mean_episode_length", self.mean_episode_length),
            ("failure_rate", self.failure_rate),
            ("mean_thrower_action", self.mean_thrower_action),
        ];
        for a in &self.agents {
            fields.push(("policy_loss", a.policy_loss));
            fields.push(("clip_fraction", a.clip_fraction));
            fields.push(("approx_kl", a.approx_kl));
        }
        match fields.into_iter().find(|(_, v)| !v.is_finite()) {
            Some((name, v)) => Err(Error::NonFinite(format!("metric `{name}` = {v} at iteration {}", self.iteration))),
            None => Ok(()),
        }
    }
}

/// Single appending writer; each record is flushed as one line.
#[derive(Debug)]
pub struct MetricsWriter {
    file: File,
}

impl MetricsWriter {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(MetricsWriter { file })
    }

    pub fn append(&mut self, record: &MetricsRecord) -> Result<()> {
        record.check_finite()?;
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}

pub fn append_metrics(path: &Path, record: &MetricsRecord) -> Result<()> {
    MetricsWriter::open(path)?.append(record)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
