//! Files emitted by scenario runs and the JSON-lines manifest listing them.

use crate::error::{Error, Result};
use crate::pgm;
use crate::raster::{GrayImage, Image};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const MANIFEST_NAME: &str = "manifest.jsonl";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub role: String,
    pub scenario: String,
    /// SHA-256 of the file contents.
    pub hash: String,
}

/// Writes files under one directory and records each in the manifest.
#[derive(Debug)]
pub struct OutputSink {
    dir: PathBuf,
    scenario: String,
    entries: Vec<ManifestEntry>,
}

impl OutputSink {
    pub fn new(dir: impl Into<PathBuf>, scenario: &str) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            scenario: scenario.to_string(),
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn write_bytes(&mut self, name: &str, role: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            role: role.to_string(),
            scenario: self.scenario.clone(),
            hash: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, role: &str, text: &str) -> Result<()> {
        self.write_bytes(name, role, text.as_bytes())
    }

    pub fn write_mask(&mut self, name: &str, mask: &GrayImage) -> Result<()> {
        self.write_bytes(name, "mask", &pgm::encode_gray8(mask))
    }

    /// 16-bit PGM plus a `<name>.txt` sidecar with `key = value` metadata,
    /// including the counts-per-level scale applied on quantization.
    pub fn write_image16(&mut self, name: &str, role: &str, image: &Image, meta: &[(&str, String)]) -> Result<()> {
        let (samples, scale) = pgm::quantize16(image);
        self.write_bytes(name, role, &pgm::encode_gray16(image.width(), image.height(), &samples))?;
        let mut side = String::new();
        let _ = writeln!(side, "image = {name}");
        let _ = writeln!(side, "width = {}", image.width());
        let _ = writeln!(side, "height = {}", image.height());
        let _ = writeln!(side, "counts_per_level = {scale}");
        for (k, v) in meta {
            let _ = writeln!(side, "{k} = {v}");
        }
        self.write_text(&format!("{name}.txt"), "sidecar", &side)
    }

    /// Comma-separated table with a header row.
    pub fn write_csv(&mut self, name: &str, role: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::invalid(name, e.to_string());
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(name, e.to_string()))?;
        self.write_bytes(name, role, &bytes)
    }

    /// Writes `manifest.jsonl` (not listed in itself) and returns the entries.
    pub fn finish(self) -> Result<Vec<ManifestEntry>> {
        let mut text = String::new();
        for e in &self.entries {
            text.push_str(&serde_json::to_string(e).expect("manifest entry serializes"));
            text.push('\n');
        }
        let path = self.dir.join(MANIFEST_NAME);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(self.entries)
    }
}

/// Formats an optional number for a CSV cell; missing values are empty.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
