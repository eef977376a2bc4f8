//! Runtime configuration: typed parameters, `key = value` file parsing,
//! command-line overrides, and a canonical content hash.
//!
//! Every tunable has a default matching the detector descriptions in the
//! module docs. A configuration's identity is the SHA-256 of its canonical
//! line rendering (sorted keys, normalized values) plus any run context the
//! caller appends (detector, geometry, seed); output files embed that hash so
//! results can be traced back to their exact parameters.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::esusan::GeometricThresholds;
use crate::harris::{default_threshold, HarrisParams};
use crate::normalize::{AED_DEFAULT_MAX_RATIO, AED_DEFAULT_RESOLUTION, AED_DEFAULT_TAU};
use crate::pipeline::{DetectorKind, PipelineConfig, SurfaceChoice};
use crate::surface::PolarityMode;
use crate::tgf::TgfConfig;

/// All tunable parameters of the toolkit.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tgf: TgfConfig,
    /// 0 disables the refractory filter.
    pub refractory_period_us: u64,
    pub aed_tau: f64,
    pub aed_table_resolution: usize,
    pub aed_max_ratio: f64,
    pub esusan: GeometricThresholds,
    pub harris_sobel_size: usize,
    /// `None` selects the default for the kernel size.
    pub harris_threshold: Option<f64>,
    pub harris_k: f64,
    pub harris_sigma: f64,
    pub harris_binary_n: usize,
    pub polarity_mode: PolarityMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        let harris = HarrisParams::default();
        RunConfig {
            tgf: TgfConfig::default(),
            refractory_period_us: 0,
            aed_tau: AED_DEFAULT_TAU,
            aed_table_resolution: AED_DEFAULT_RESOLUTION,
            aed_max_ratio: AED_DEFAULT_MAX_RATIO,
            esusan: GeometricThresholds::default(),
            harris_sobel_size: harris.sobel_size,
            harris_threshold: None,
            harris_k: harris.k,
            harris_sigma: harris.gaussian_sigma,
            harris_binary_n: 25,
            polarity_mode: PolarityMode::Split,
        }
    }
}

fn parse_triple(value: &str) -> Result<[u32; 3]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "expected three comma-separated values, got {value:?}"
        )));
    }
    let mut out = [0u32; 3];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part
            .parse()
            .map_err(|_| Error::Config(format!("bad count {part:?}")))?;
    }
    Ok(out)
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("bad {what} value {value:?}"));
        match key {
            "tgf.td_us" => self.tgf.td_us = value.parse().map_err(|_| bad(key))?,
            "tgf.lambda" => self.tgf.lambda = value.parse().map_err(|_| bad(key))?,
            "tgf.s" => self.tgf.s = value.parse().map_err(|_| bad(key))?,
            "refractory.period_us" => {
                self.refractory_period_us = value.parse().map_err(|_| bad(key))?
            }
            "aed.tau" => self.aed_tau = value.parse().map_err(|_| bad(key))?,
            "aed.table_resolution" => {
                self.aed_table_resolution = value.parse().map_err(|_| bad(key))?
            }
            "aed.max_ratio" => self.aed_max_ratio = value.parse().map_err(|_| bad(key))?,
            "esusan.g" => self.esusan.g = parse_triple(value)?,
            "esusan.g_noise" => self.esusan.g_noise = parse_triple(value)?,
            "harris.sobel_size" => {
                self.harris_sobel_size = value.parse().map_err(|_| bad(key))?
            }
            "harris.threshold" => {
                self.harris_threshold = if value == "auto" {
                    None
                } else {
                    Some(value.parse().map_err(|_| bad(key))?)
                }
            }
            "harris.k" => self.harris_k = value.parse().map_err(|_| bad(key))?,
            "harris.sigma" => self.harris_sigma = value.parse().map_err(|_| bad(key))?,
            "harris.binary_n" => self.harris_binary_n = value.parse().map_err(|_| bad(key))?,
            "sae.polarity_mode" => {
                self.polarity_mode = match value {
                    "split" => PolarityMode::Split,
                    "merged" => PolarityMode::Merged,
                    other => {
                        return Err(Error::Config(format!(
                            "bad sae.polarity_mode {other:?} (want split or merged)"
                        )))
                    }
                }
            }
            other => return Err(Error::Config(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Parses a configuration file: one `key = value` per line, `#` comments
    /// and blank lines ignored, unknown keys rejected with their line number.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value, got {line:?}", i + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a `key=value` override string (the command-line form).
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            Error::Config(format!("expected key=value override, got {assignment:?}"))
        })?;
        self.set(key.trim(), value.trim())
    }

    /// Harris threshold after resolving the kernel-size default.
    pub fn resolved_harris_threshold(&self) -> f64 {
        self.harris_threshold
            .unwrap_or_else(|| default_threshold(self.harris_sobel_size))
    }

    pub fn harris_params(&self) -> HarrisParams {
        HarrisParams {
            sobel_size: self.harris_sobel_size,
            score_threshold: self.resolved_harris_threshold(),
            k: self.harris_k,
            gaussian_sigma: self.harris_sigma,
            ..HarrisParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tgf.validate()?;
        self.esusan.validate()?;
        self.harris_params().validate()?;
        if self.aed_table_resolution < crate::normalize::AED_MIN_RESOLUTION {
            return Err(Error::Config(format!(
                "aed.table_resolution must be at least {}",
                crate::normalize::AED_MIN_RESOLUTION
            )));
        }
        if !(self.aed_tau > 0.0) || !(self.aed_max_ratio > 0.0) {
            return Err(Error::Config(
                "aed.tau and aed.max_ratio must be positive".into(),
            ));
        }
        if self.harris_binary_n == 0 {
            return Err(Error::Config("harris.binary_n must be positive".into()));
        }
        Ok(())
    }

    /// Canonical `key = value` rendering, sorted by key. Two configurations
    /// with equal canonical lines behave identically.
    pub fn canonical_lines(&self) -> Vec<String> {
        let threshold = match self.harris_threshold {
            Some(v) => format!("{v}"),
            None => "auto".into(),
        };
        let polarity = match self.polarity_mode {
            PolarityMode::Split => "split",
            PolarityMode::Merged => "merged",
        };
        let mut lines = vec![
            format!("aed.max_ratio = {}", self.aed_max_ratio),
            format!("aed.table_resolution = {}", self.aed_table_resolution),
            format!("aed.tau = {}", self.aed_tau),
            format!(
                "esusan.g = {},{},{}",
                self.esusan.g[0], self.esusan.g[1], self.esusan.g[2]
            ),
            format!(
                "esusan.g_noise = {},{},{}",
                self.esusan.g_noise[0], self.esusan.g_noise[1], self.esusan.g_noise[2]
            ),
            format!("harris.binary_n = {}", self.harris_binary_n),
            format!("harris.k = {}", self.harris_k),
            format!("harris.sigma = {}", self.harris_sigma),
            format!("harris.sobel_size = {}", self.harris_sobel_size),
            format!("harris.threshold = {threshold}"),
            format!("refractory.period_us = {}", self.refractory_period_us),
            format!("sae.polarity_mode = {polarity}"),
            format!("tgf.lambda = {}", self.tgf.lambda),
            format!("tgf.s = {}", self.tgf.s),
            format!("tgf.td_us = {}", self.tgf.td_us),
        ];
        lines.sort();
        lines
    }

    /// SHA-256 hex digest over the canonical lines plus caller-supplied run
    /// context (`key = value` pairs, also sorted).
    pub fn content_hash(&self, context: &[(&str, String)]) -> String {
        let mut lines = self.canonical_lines();
        for (k, v) in context {
            lines.push(format!("{k} = {v}"));
        }
        lines.sort();
        let mut hasher = Sha256::new();
        for line in &lines {
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            let _ = write!(out, "{byte:02x}");
        }
        out
    }

    /// Builds the pipeline configuration for a detector and surface choice.
    pub fn pipeline_config(&self, detector: DetectorKind, surface: SurfaceChoice) -> PipelineConfig {
        PipelineConfig {
            detector,
            surface,
            polarity_mode: self.polarity_mode,
            tgf: self.tgf,
            refractory_period_us: self.refractory_period_us,
            aed_tau: self.aed_tau,
            aed_table_resolution: self.aed_table_resolution,
            aed_max_ratio: self.aed_max_ratio,
            esusan: self.esusan,
            harris: self.harris_params(),
            binary_n: self.harris_binary_n,
        }
    }
}
