use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::roi::Region;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "ita")]
    Ita,
    #[serde(rename = "rsr")]
    Rsr,
    #[serde(rename = "rsr-star")]
    RsrStar,
    #[serde(rename = "sreds")]
    Sreds,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Ita, Metric::Rsr, Metric::RsrStar, Metric::Sreds];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Ita => "ita",
            Metric::Rsr => "rsr",
            Metric::RsrStar => "rsr-star",
            Metric::Sreds => "sreds",
        }
    }

    /// Metrics that need a dataset-level fit.
    pub fn is_data_driven(self) -> bool {
        !matches!(self, Metric::Ita)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown metric {s:?}")))
    }
}

/// One per-image metric value with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub image_id: String,
    pub subject_id: String,
    pub metric: Metric,
    pub value: f64,
    #[serde(default)]
    pub region_values: BTreeMap<Region, f64>,
    #[serde(default)]
    pub fit_id: Option<String>,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl MetricRecord {
    pub fn new(image_id: impl Into<String>, subject_id: impl Into<String>, metric: Metric, value: f64) -> Self {
        MetricRecord {
            image_id: image_id.into(),
            subject_id: subject_id.into(),
            metric,
            value,
            region_values: BTreeMap::new(),
            fit_id: None,
            flags: Vec::new(),
        }
    }

    /// Flags joined with `;` for the CSV column.
    pub fn flags_field(&self) -> String {
        self.flags.join(";")
    }
}
