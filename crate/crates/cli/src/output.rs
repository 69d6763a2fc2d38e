//! Outputs are written to a temporary sibling and renamed into place, so a
//! failed run never leaves a partial file behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

fn parent(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Runs `write` against a temporary path next to `path`, then renames it.
pub fn atomic_file<E>(path: &Path, write: impl FnOnce(&Path) -> Result<(), E>) -> Result<(), CliError>
where
    CliError: From<E>,
{
    let dir = parent(path);
    let tmp = tempfile::Builder::new()
        .prefix(".xlchat-")
        .tempfile_in(&dir)
        .map_err(|e| CliError::io(&dir, e))?;
    write(tmp.path())?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    atomic_file(path, |tmp| {
        std::fs::File::create(tmp)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .map_err(|e| CliError::io(path, e))
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_text(path, &text)
}

/// Like [`atomic_file`] for a directory. An existing `path` is replaced only
/// when it is empty or holds a previous artifact marked by `marker`.
pub fn atomic_dir<E>(path: &Path, marker: &str, write: impl FnOnce(&Path) -> Result<(), E>) -> Result<(), CliError>
where
    CliError: From<E>,
{
    if path.exists() {
        let empty = std::fs::read_dir(path)
            .map_err(|e| CliError::io(path, e))?
            .next()
            .is_none();
        if !empty && !path.join(marker).exists() {
            return Err(CliError::Validation(format!(
                "{} exists and is not a previous output; refusing to replace it",
                path.display()
            )));
        }
    }
    let dir = parent(path);
    let tmp = tempfile::Builder::new()
        .prefix(".xlchat-")
        .tempdir_in(&dir)
        .map_err(|e| CliError::io(&dir, e))?;
    write(tmp.path())?;
    if path.exists() {
        std::fs::remove_dir_all(path).map_err(|e| CliError::io(path, e))?;
    }
    let tmp = tmp.keep();
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_dir_all(&tmp);
        CliError::io(path, e)
    })
}
