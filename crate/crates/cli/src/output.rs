//! Output locations and file helpers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use korteweg::config::RunConfig;
use serde::Serialize;

use crate::error::CliResult;

/// Environment variable overriding the run output directory.
pub const OUTPUT_DIR_ENV: &str = "KORTEWEG_OUTPUT_DIR";

/// Run directory: `--out`, then the environment override, then `[output] dir`
/// (relative to the config file), then `runs/<config stem>`.
pub fn run_dir(out: Option<&Path>, cfg: &RunConfig, config_path: &Path) -> PathBuf {
    if let Some(p) = out {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    if let Some(dir) = &cfg.output.dir {
        if dir.is_relative() {
            if let Some(parent) = config_path.parent() {
                return parent.join(dir);
            }
        }
        return dir.clone();
    }
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    PathBuf::from("runs").join(stem)
}

/// Write pretty JSON through a temporary file and a rename.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Write pretty JSON to `path`, or to stdout without a path.
pub fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            write_json_atomic(p, value)
        }
        None => {
            let text = serde_json::to_string_pretty(value)?;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}
