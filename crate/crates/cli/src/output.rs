//! Run directory: data files, reports and the manifest that ties them to inputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use ecolab_core::Ecology;

#[derive(Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// Written as `manifest.json` next to every run's outputs. Contains no
/// timestamps, so identical inputs give an identical manifest.
#[derive(Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_hash: String,
    pub inputs: Vec<InputHash>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct Run {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    pub fn new(dir: &Path, subcommand: &str, args: &impl Serialize) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        let canonical = serde_json::to_vec(args)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                subcommand: subcommand.into(),
                config_hash: sha256_hex(&canonical),
                inputs: Vec::new(),
                seed: None,
                tool_version: env!("CARGO_PKG_VERSION").into(),
                outputs: Vec::new(),
            },
        })
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.manifest.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn read_string(&mut self, path: &Path) -> Result<String> {
        String::from_utf8(self.read(path)?).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    pub fn ecology(&mut self, path: &Path) -> Result<Ecology> {
        let text = self.read_string(path)?;
        Ok(Ecology::from_json_str(&text)?)
    }

    fn record(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(name.into());
        Ok(())
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<()> {
        self.record(name, text.as_bytes())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.record(name, text.as_bytes())
    }

    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.record(name, &bytes)
    }

    /// Square matrix with world ids as the header row and first column.
    pub fn matrix(&mut self, name: &str, ids: &[String], m: &[Vec<f64>]) -> Result<()> {
        let mut header = vec!["world"];
        header.extend(ids.iter().map(String::as_str));
        let rows = ids.iter().zip(m).map(|(id, row)| {
            std::iter::once(id.clone())
                .chain(row.iter().map(|x| x.to_string()))
                .collect::<Vec<_>>()
        });
        self.csv(name, &header, rows)
    }

    pub fn finish(mut self) -> Result<()> {
        self.manifest.outputs.push("manifest.json".into());
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
