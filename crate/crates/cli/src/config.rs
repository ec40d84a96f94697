//! Filter configuration resolution: command-line flag > config file >
//! built-in default.

use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use ctxfilter::{AccumulationPolicy, Error, FilterConfig, PhoneId};

#[derive(Args, Clone, Debug, Default)]
pub struct FilterArgs {
    /// TOML config file with a [filter] table; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub psc_threshold: Option<f64>,
    #[arg(long)]
    pub soc_threshold: Option<f64>,
    #[arg(long)]
    pub window_chunks: Option<usize>,
    #[arg(long)]
    pub chunk_frames: Option<usize>,
    /// Survivor accumulation across windows: union | final
    #[arg(long)]
    pub accumulation: Option<AccumulationPolicy>,
    /// Blank phone id, if the inventory has one
    #[arg(long)]
    pub blank_id: Option<u32>,
    /// Drop blank-dominated frames before buffering (true/false)
    #[arg(long)]
    pub drop_blank_frames: Option<bool>,
    #[arg(long)]
    pub blank_dominance_threshold: Option<f64>,
}

/// The `[filter]` table of a config file; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterTable {
    psc_threshold: Option<f64>,
    soc_threshold: Option<f64>,
    window_chunks: Option<usize>,
    chunk_frames: Option<usize>,
    accumulation: Option<AccumulationPolicy>,
    blank_id: Option<u32>,
    drop_blank_frames: Option<bool>,
    blank_dominance_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    filter: Option<FilterTable>,
}

impl FilterArgs {
    /// Builds the effective config and validates it.
    pub fn resolve(&self) -> Result<FilterConfig, Error> {
        let mut config = FilterConfig::default();

        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let file: ConfigFile = toml::from_str(&text).map_err(|e| Error::InvalidConfig {
                detail: format!("{}: {e}", path.display()),
            })?;
            if let Some(table) = file.filter {
                apply(&mut config, &table);
            }
        }

        let flags = FilterTable {
            psc_threshold: self.psc_threshold,
            soc_threshold: self.soc_threshold,
            window_chunks: self.window_chunks,
            chunk_frames: self.chunk_frames,
            accumulation: self.accumulation,
            blank_id: self.blank_id,
            drop_blank_frames: self.drop_blank_frames,
            blank_dominance_threshold: self.blank_dominance_threshold,
        };
        apply(&mut config, &flags);

        config.validate()?;
        Ok(config)
    }
}

fn apply(config: &mut FilterConfig, overrides: &FilterTable) {
    if let Some(v) = overrides.psc_threshold {
        config.psc_threshold = v;
    }
    if let Some(v) = overrides.soc_threshold {
        config.soc_threshold = v;
    }
    if let Some(v) = overrides.window_chunks {
        config.window_chunks = v;
    }
    if let Some(v) = overrides.chunk_frames {
        config.chunk_frames = v;
    }
    if let Some(v) = overrides.accumulation {
        config.accumulation = v;
    }
    if let Some(v) = overrides.blank_id {
        config.blank_id = Some(PhoneId(v));
    }
    if let Some(v) = overrides.drop_blank_frames {
        config.drop_blank_frames = v;
    }
    if let Some(v) = overrides.blank_dominance_threshold {
        config.blank_dominance_threshold = v;
    }
}
