//! Running the external detector, or reading its precomputed output.
//!
//! Contract: the command gets an image path and an output directory and, on
//! success, exits 0 having written `<stem>.txt` in the box file format.

use std::path::{Component, Path, PathBuf};

use serde_json::json;
use spineplan_core::{parse_bbox_file, BBox};

use crate::config::Config;
use crate::error::ApiError;

const STDERR_TAIL: usize = 2000;

/// Resolves an image reference against the fixture root.
pub fn image_path(config: &Config, image_ref: &str) -> PathBuf {
    let p = Path::new(image_ref);
    match &config.fixture_root {
        Some(root) if p.is_relative() => root.join(p),
        _ => p.to_path_buf(),
    }
}

fn stem(image_ref: &str) -> Result<String, ApiError> {
    Path::new(image_ref)
        .file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| ApiError::detector_failed(format!("image reference '{image_ref}' has no file stem"), json!({ "image_ref": image_ref })))
}

/// Splits a command template into argv, substituting the placeholders.
pub fn expand_template(template: &str, image: &Path, outdir: &Path) -> Result<Vec<String>, String> {
    let words = shell_words::split(template).map_err(|e| format!("bad detector command: {e}"))?;
    if words.is_empty() {
        return Err("detector command is empty".into());
    }
    Ok(words
        .into_iter()
        .map(|w| {
            w.replace("{image}", &image.to_string_lossy())
                .replace("{outdir}", &outdir.to_string_lossy())
        })
        .collect())
}

async fn read_boxes(file: &Path) -> Result<Vec<BBox>, ApiError> {
    let shown = file.display().to_string();
    let text = tokio::fs::read_to_string(file).await.map_err(|e| {
        ApiError::detector_failed(format!("cannot read {shown}: {e}"), json!({ "file": shown }))
    })?;
    parse_bbox_file(&text).map_err(|e| ApiError::detector_parse(&shown, &e))
}

async fn run_command(template: &str, image: &Path, stem: &str) -> Result<Vec<BBox>, ApiError> {
    let outdir = tempfile::tempdir()
        .map_err(|e| ApiError::detector_failed(format!("cannot create output directory: {e}"), serde_json::Value::Null))?;
    let argv = expand_template(template, image, outdir.path())
        .map_err(|m| ApiError::detector_failed(m, json!({ "command": template })))?;
    let output = tokio::process::Command::new(&argv[0])
        .args(&argv[1..])
        .kill_on_drop(true)
        .output()
        .await
        .map_err(|e| ApiError::detector_failed(format!("cannot start '{}': {e}", argv[0]), json!({ "command": argv })))?;
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        let tail = &stderr[stderr.len().saturating_sub(STDERR_TAIL)..];
        return Err(ApiError::detector_failed(
            format!("detector exited with {}", output.status),
            json!({ "exit_status": output.status.code(), "stderr": tail }),
        ));
    }
    read_boxes(&outdir.path().join(format!("{stem}.txt"))).await
}

/// Boxes for one image, from whichever detector source is configured.
/// A command template takes precedence over a precomputed directory.
pub async fn detect(config: &Config, image_ref: &str) -> Result<Vec<BBox>, ApiError> {
    let stem = stem(image_ref)?;
    if let Some(template) = &config.detector_command {
        run_command(template, &image_path(config, image_ref), &stem).await
    } else if let Some(dir) = &config.precomputed_dir {
        read_boxes(&dir.join(format!("{stem}.txt"))).await
    } else {
        Err(ApiError::detector_failed("no detector is configured", serde_json::Value::Null))
    }
}

/// `rel` as a path under `root`, refusing anything that could escape it.
pub fn contained(root: &Path, rel: &str) -> Option<PathBuf> {
    let rel = Path::new(rel);
    let safe = rel.components().all(|c| matches!(c, Component::Normal(_)));
    (safe && rel.components().next().is_some()).then(|| root.join(rel))
}
