use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{Context, Ecology};
use crate::error::{Error, Result};

/// On-disk ecology schema, version 1.
///
/// ```json
/// {"version": 1,
///  "worlds": [{"id": "w1", "prior": 0.5}, ...],
///  "vocab": ["a", "b"],
///  "contexts": [{"id": "c0", "mass": 1.0}],
///  "cond": {"w1": {"c0": [1.0, 0.0]}, ...}}
/// ```
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EcologyFile {
    pub version: u32,
    pub worlds: Vec<WorldEntry>,
    pub vocab: Vec<String>,
    pub contexts: Vec<Context>,
    pub cond: IndexMap<String, IndexMap<String, Vec<f64>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldEntry {
    pub id: String,
    pub prior: f64,
}

impl EcologyFile {
    pub fn into_ecology(self) -> Result<Ecology> {
        if self.version != 1 {
            return Err(Error::Validation(format!(
                "unsupported ecology file version {}",
                self.version
            )));
        }
        let worlds: Vec<String> = self.worlds.iter().map(|w| w.id.clone()).collect();
        let prior = self.worlds.iter().map(|w| w.prior).collect();
        let mut cond = Vec::with_capacity(worlds.len());
        for w in &worlds {
            let per_ctx = self
                .cond
                .get(w)
                .ok_or_else(|| Error::Validation(format!("cond has no entry for world `{w}`")))?;
            let mut rows = Vec::with_capacity(self.contexts.len());
            for c in &self.contexts {
                let row = per_ctx.get(&c.id).ok_or_else(|| {
                    Error::Validation(format!(
                        "cond has no row for world `{w}`, context `{}`",
                        c.id
                    ))
                })?;
                rows.push(row.clone());
            }
            if per_ctx.len() != self.contexts.len() {
                let extra = per_ctx
                    .keys()
                    .find(|k| !self.contexts.iter().any(|c| &c.id == *k))
                    .cloned()
                    .unwrap_or_default();
                return Err(Error::Validation(format!(
                    "cond for world `{w}` names unknown context `{extra}`"
                )));
            }
            cond.push(rows);
        }
        if let Some(extra) = self.cond.keys().find(|k| !worlds.contains(k)) {
            return Err(Error::Validation(format!("cond names unknown world `{extra}`")));
        }
        Ecology::new(worlds, prior, self.vocab, self.contexts, cond)
    }

    pub fn from_ecology(e: &Ecology) -> Self {
        let worlds = e
            .worlds()
            .iter()
            .zip(e.prior())
            .map(|(id, &prior)| WorldEntry {
                id: id.clone(),
                prior,
            })
            .collect();
        let cond = e
            .worlds()
            .iter()
            .enumerate()
            .map(|(w, wid)| {
                let rows = e
                    .contexts()
                    .iter()
                    .enumerate()
                    .map(|(c, ctx)| (ctx.id.clone(), e.row(w, c).to_vec()))
                    .collect();
                (wid.clone(), rows)
            })
            .collect();
        Self {
            version: 1,
            worlds,
            vocab: e.vocab().to_vec(),
            contexts: e.contexts().to_vec(),
            cond,
        }
    }
}

impl Ecology {
    pub fn from_json_str(s: &str) -> Result<Ecology> {
        let file: EcologyFile =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("ecology JSON: {e}")))?;
        file.into_ecology()
    }

    /// Reads and validates an ecology file.
    pub fn load(path: impl AsRef<Path>) -> Result<Ecology> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ecology::from_json_str(&text)
    }

    /// Pretty JSON in the version-1 schema, insertion-ordered.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&EcologyFile::from_ecology(self))
            .expect("ecology serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string() + "\n").map_err(|e| Error::io(path, e))
    }
}
