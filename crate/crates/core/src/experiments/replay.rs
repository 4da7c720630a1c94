//! Rerun a recorded experiment and compare its outputs byte for byte.

use std::path::{Path, PathBuf};

use super::output::Manifest;
use super::run::{run_in, RunOutcome};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct ReplayOutcome {
    pub run: RunOutcome,
    /// Files whose bytes differ from the recorded run (or are missing from either).
    pub differing: Vec<String>,
    pub version_mismatch: Option<String>,
}

impl ReplayOutcome {
    pub fn identical(&self) -> bool {
        self.differing.is_empty()
    }
}

/// Reruns the manifest's configuration into `out_dir` (default `<manifest dir>/replay`).
pub fn replay(
    manifest_path: &Path,
    out_dir: Option<&Path>,
    workers: Option<usize>,
) -> Result<ReplayOutcome> {
    let manifest = Manifest::load(manifest_path)?;
    manifest.config.validate()?;
    let recorded_dir = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let version_mismatch = (manifest.version != env!("CARGO_PKG_VERSION")).then(|| {
        let msg = format!(
            "manifest written by version {}, replaying with {}",
            manifest.version,
            env!("CARGO_PKG_VERSION")
        );
        log::warn!("{msg}");
        msg
    });
    let target = out_dir.map_or_else(|| recorded_dir.join("replay"), Path::to_path_buf);
    if target == recorded_dir {
        return Err(Error::ConfigInvalid(
            "replay output must differ from the recorded run".into(),
        ));
    }
    let run = run_in(&manifest.config, &target, workers)?;
    let mut names: Vec<&String> = manifest.files.iter().collect();
    for f in &run.files {
        if !manifest.files.contains(f) {
            names.push(f);
        }
    }
    let mut differing = Vec::new();
    for name in names {
        let a = std::fs::read(recorded_dir.join(name)).ok();
        let b = std::fs::read(target.join(name)).ok();
        if a.is_none() || a != b {
            differing.push(name.clone());
        }
    }
    for d in &differing {
        log::warn!("replay differs: {d}");
    }
    Ok(ReplayOutcome {
        run,
        differing,
        version_mismatch,
    })
}
