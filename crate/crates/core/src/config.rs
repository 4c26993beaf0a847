//! Run configuration: every tunable constant of the pipeline in one record.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ita::ItaConfig;
use crate::kpca::KpcaConfig;
use crate::nmf::NmfOptions;
use crate::roi::RoiConfig;
use crate::rsr::RsrConfig;
use crate::skinseg::SegConfig;
use crate::synth::RenderConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub roi: RoiConfig,
    pub ita: ItaConfig,
    pub segmentation: SegConfig,
    pub rsr: RsrConfig,
    pub nmf: NmfOptions,
    pub kpca: KpcaConfig,
    /// Seed for every subsampling step and the synthetic generator.
    pub seed: u64,
    pub histogram_bins: usize,
    pub render: RenderConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            roi: RoiConfig::default(),
            ita: ItaConfig::default(),
            segmentation: SegConfig::default(),
            rsr: RsrConfig::default(),
            nmf: NmfOptions::default(),
            kpca: KpcaConfig::default(),
            seed: 0,
            histogram_bins: 20,
            render: RenderConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.roi.validate()?;
        self.ita.validate()?;
        self.segmentation.validate()?;
        self.nmf.validate()?;
        self.kpca.validate()?;
        if self.rsr.max_fit_pixels < crate::rsr::MIN_FIT_PIXELS || self.histogram_bins == 0 {
            return Err(Error::InvalidConfig(
                "rsr.max_fit_pixels must be >= 1000 and histogram_bins >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Reads a JSON config; absent fields take their defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Short digest of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        content_id(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn content_id(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    hex::encode(&digest[..8])
}
