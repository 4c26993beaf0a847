//! Batch front end for the skin-tone metrics: `compute` per-image metric
//! CSVs from a manifest, `eval` them against the manifest's subjects and
//! labels, and `synth` a rendered dataset in the same on-disk layout.
//!
//! Exit codes: 0 on success, 2 for usage and IO errors, 3 when a command
//! produces no result.

use std::fmt;
use std::path::{Path, PathBuf};

use sreds_core::RunConfig;

pub mod args;
pub mod compute;
pub mod eval;
pub mod fitfile;
pub mod manifest;
pub mod metrics_csv;
pub mod synth;

pub use args::{Cli, Command};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_EMPTY: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: EXIT_USAGE, error: error.into() }
    }

    pub fn empty(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: EXIT_EMPTY, error: error.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

/// Anything not classified otherwise is an IO-level failure.
impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure::usage(error)
    }
}

pub type Outcome<T> = Result<T, Failure>;

/// Tool version and config hash stamped into every artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn current(cfg: &RunConfig) -> Self {
        Provenance {
            version: VERSION.to_string(),
            config_hash: cfg.hash(),
        }
    }

    pub fn comment_line(&self) -> String {
        format!("# sreds {} config={}", self.version, self.config_hash)
    }

    /// Inverse of [`Provenance::comment_line`].
    pub fn parse_comment(line: &str) -> Option<Self> {
        let rest = line.strip_prefix("# sreds ")?;
        let (version, hash) = rest.trim_end().split_once(" config=")?;
        Some(Provenance {
            version: version.to_string(),
            config_hash: hash.to_string(),
        })
    }
}

/// Loads the config (defaults when absent) and applies a `--seed` override.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Outcome<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p).map_err(Failure::usage)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub(crate) fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> anyhow::Result<()> {
    use anyhow::Context;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// `dir/name.ext` becomes `dir/name.<suffix>.ext`.
pub(crate) fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{suffix}"),
    };
    path.with_file_name(name)
}

pub fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Compute(a) => compute::run(&a),
        Command::Eval(a) => eval::run(&a),
        Command::Synth(a) => synth::run(&a),
    }
}
