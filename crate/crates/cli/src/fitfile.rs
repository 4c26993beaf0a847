//! Saved dataset-level fits. The fit id is the content hash of the model
//! JSON, so identical fits share an id.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sreds_core::config::content_id;
use sreds_core::kpca::KpcaFit;
use sreds_core::rsr::{RsrFit, RsrVariant};
use sreds_core::Metric;

use crate::{Failure, Outcome, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FitModel {
    Rsr(RsrFit),
    Kpca(KpcaFit),
}

impl FitModel {
    pub fn serves(&self, metric: Metric) -> bool {
        match (self, metric) {
            (FitModel::Rsr(f), Metric::Rsr) => f.variant == RsrVariant::Rsr,
            (FitModel::Rsr(f), Metric::RsrStar) => f.variant == RsrVariant::RsrStar,
            (FitModel::Kpca(_), Metric::Sreds) => true,
            _ => false,
        }
    }

    pub fn id(&self) -> String {
        content_id(&serde_json::to_vec(self).expect("fit serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFile {
    pub tool_version: String,
    pub config_hash: String,
    pub metric: Metric,
    pub dataset_id: String,
    pub fit_id: String,
    pub model: FitModel,
}

impl FitFile {
    pub fn new(prov: &Provenance, metric: Metric, dataset_id: &str, model: FitModel) -> Self {
        FitFile {
            tool_version: prov.version.clone(),
            config_hash: prov.config_hash.clone(),
            metric,
            dataset_id: dataset_id.to_string(),
            fit_id: model.id(),
            model,
        }
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        crate::write_file(path, text)
    }

    /// Loads a fit for `metric`; a config-hash mismatch is refused unless `force`.
    pub fn load_for(path: &Path, metric: Metric, prov: &Provenance, force: bool) -> Outcome<Self> {
        let load = || -> anyhow::Result<FitFile> {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading fit {}", path.display()))?;
            let fit: FitFile = serde_json::from_str(&text).with_context(|| format!("parsing fit {}", path.display()))?;
            if fit.metric != metric || !fit.model.serves(metric) {
                bail!("fit {} was made for {}, not {metric}", path.display(), fit.metric);
            }
            if fit.model.id() != fit.fit_id {
                bail!("fit {} does not match its fit_id", path.display());
            }
            Ok(fit)
        };
        let fit = load().map_err(Failure::usage)?;
        if fit.config_hash != prov.config_hash {
            let msg = format!(
                "fit {} was made under config {}, current config is {}",
                path.display(),
                fit.config_hash,
                prov.config_hash
            );
            if !force {
                return Err(Failure::usage(anyhow::anyhow!("{msg} (use --force to accept)")));
            }
            eprintln!("warning: {msg}");
        }
        Ok(fit)
    }
}
