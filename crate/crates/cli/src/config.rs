//! Optional `key=value` config file and the pipe settings it can override.
//!
//! Recognized keys: `queue_limit`, `buffer_limit`, `poll_interval_s`,
//! `sample_size`, `modality`. Precedence is flag > config file > default.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::Args;
use synthseg_core::sampler::Modality;

use crate::commands::CmdError;

const ALLOWED_KEYS: &[&str] = &[
    "queue_limit",
    "buffer_limit",
    "poll_interval_s",
    "sample_size",
    "modality",
];

#[derive(Debug, Default)]
pub struct FileConfig {
    values: std::collections::BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, CmdError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::Data(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = std::collections::BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CmdError::usage(format!(
                    "{}:{}: expected key=value, got '{line}'",
                    path.display(),
                    lineno + 1
                )));
            };
            let key = key.trim();
            if !ALLOWED_KEYS.contains(&key) {
                return Err(CmdError::usage(format!(
                    "{}:{}: unknown config key '{key}' (allowed: {})",
                    path.display(),
                    lineno + 1,
                    ALLOWED_KEYS.join(", ")
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CmdError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CmdError::usage(format!("config key '{key}' has invalid value '{raw}'"))
            }),
        }
    }
}

/// Flags shared by every subcommand that runs the batch pipe.
#[derive(Debug, Args)]
pub struct PipeArgs {
    /// Max batches waiting in the ready queue
    #[arg(long)]
    pub queue_limit: Option<usize>,
    /// Max batches in the producer's staging buffer
    #[arg(long)]
    pub buffer_limit: Option<usize>,
    /// Producer poll interval in seconds
    #[arg(long)]
    pub poll_interval_s: Option<f64>,
    /// Points per training batch
    #[arg(long)]
    pub sample_size: Option<usize>,
    /// Point channels: rgbd or d
    #[arg(long)]
    pub modality: Option<String>,
    /// key=value config file (queue_limit, buffer_limit, poll_interval_s, sample_size, modality)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Effective pipe settings after flag/file/default resolution.
#[derive(Debug, Clone, Copy)]
pub struct PipeSettings {
    pub queue_limit: usize,
    pub buffer_limit: usize,
    pub poll_interval: Duration,
    pub sample_size: usize,
    pub modality: Modality,
}

impl PipeArgs {
    pub fn resolve(&self) -> Result<PipeSettings, CmdError> {
        let file = FileConfig::load(self.config.as_deref())?;
        let queue_limit = self
            .queue_limit
            .or(file.parse::<usize>("queue_limit")?)
            .unwrap_or(4);
        let buffer_limit = self
            .buffer_limit
            .or(file.parse::<usize>("buffer_limit")?)
            .unwrap_or(2);
        let poll_s = self
            .poll_interval_s
            .or(file.parse::<f64>("poll_interval_s")?)
            .unwrap_or(0.01);
        let sample_size = self
            .sample_size
            .or(file.parse::<usize>("sample_size")?)
            .unwrap_or(8192);
        let modality_raw = self
            .modality
            .clone()
            .or(file.values.get("modality").cloned())
            .unwrap_or_else(|| "rgbd".to_string());
        let modality = modality_raw
            .parse::<Modality>()
            .map_err(CmdError::Usage)?;
        if !(poll_s > 0.0) {
            return Err(CmdError::usage("poll_interval_s must be positive"));
        }
        if queue_limit < 1 || buffer_limit < 1 {
            return Err(CmdError::usage("queue_limit and buffer_limit must be >= 1"));
        }
        if sample_size < 1 {
            return Err(CmdError::usage("sample_size must be >= 1"));
        }
        Ok(PipeSettings {
            queue_limit,
            buffer_limit,
            poll_interval: Duration::from_secs_f64(poll_s),
            sample_size,
            modality,
        })
    }
}
