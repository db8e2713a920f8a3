//! Finite ecologies: worlds with a prior, a vocabulary, a weighted context set,
//! and a world-conditioned next-token table `P_w(·|c)`.

mod analysis;
mod io;

pub use analysis::{
    CellExcess, DecompositionReport, PairDistance, SeparationStructure,
};
pub use io::{EcologyFile, WorldEntry};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for sums that must equal one on input.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A context record: an opaque id and its `D_C` mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub id: String,
    pub mass: f64,
}

/// An immutable, validated finite ecology.
#[derive(Clone, Debug, PartialEq)]
pub struct Ecology {
    worlds: Vec<String>,
    prior: Vec<f64>,
    vocab: Vec<String>,
    contexts: Vec<Context>,
    // row-major (world, context, token)
    cond: Vec<f64>,
}

impl Ecology {
    /// Validates and builds an ecology; `cond[w][c]` is the row `P_w(·|c)`.
    ///
    /// Sums are checked to [`SIMPLEX_TOL`] and then renormalized exactly.
    pub fn new(
        worlds: Vec<String>,
        prior: Vec<f64>,
        vocab: Vec<String>,
        contexts: Vec<Context>,
        cond: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if cond.len() != worlds.len() {
            return Err(Error::Validation(format!(
                "conditional table has {} worlds, expected {}",
                cond.len(),
                worlds.len()
            )));
        }
        let mut flat = Vec::with_capacity(worlds.len() * contexts.len() * vocab.len());
        for (w, per_ctx) in cond.into_iter().enumerate() {
            if per_ctx.len() != contexts.len() {
                return Err(Error::Validation(format!(
                    "world `{}` has {} context rows, expected {}",
                    worlds[w],
                    per_ctx.len(),
                    contexts.len()
                )));
            }
            for (c, row) in per_ctx.into_iter().enumerate() {
                if row.len() != vocab.len() {
                    return Err(Error::Validation(format!(
                        "row for world `{}`, context `{}` has {} entries, expected {}",
                        worlds[w],
                        contexts[c].id,
                        row.len(),
                        vocab.len()
                    )));
                }
                flat.extend(row);
            }
        }
        Self::from_flat(worlds, prior, vocab, contexts, flat)
    }

    /// Like [`Ecology::new`] with a row-major `(world, context, token)` table.
    pub fn from_flat(
        worlds: Vec<String>,
        mut prior: Vec<f64>,
        vocab: Vec<String>,
        mut contexts: Vec<Context>,
        mut cond: Vec<f64>,
    ) -> Result<Self> {
        if worlds.is_empty() {
            return Err(Error::Validation("ecology needs at least one world".into()));
        }
        if vocab.is_empty() {
            return Err(Error::Validation("vocabulary must be nonempty".into()));
        }
        if contexts.is_empty() {
            return Err(Error::Validation("context set must be nonempty".into()));
        }
        unique("world", worlds.iter())?;
        unique("token", vocab.iter())?;
        unique("context", contexts.iter().map(|c| &c.id))?;
        if prior.len() != worlds.len() {
            return Err(Error::Validation(format!(
                "prior has {} entries for {} worlds",
                prior.len(),
                worlds.len()
            )));
        }
        if let Some(i) = prior.iter().position(|&p| !(p.is_finite() && p > 0.0)) {
            return Err(Error::Validation(format!(
                "prior must be strictly positive (world `{}` has {})",
                worlds[i], prior[i]
            )));
        }
        normalize_checked(&mut prior, || "prior".to_string())?;

        if let Some(c) = contexts.iter().find(|c| !(c.mass.is_finite() && c.mass >= 0.0)) {
            return Err(Error::Validation(format!(
                "context mass must be nonnegative (context `{}` has {})",
                c.id, c.mass
            )));
        }
        let mut masses: Vec<f64> = contexts.iter().map(|c| c.mass).collect();
        normalize_checked(&mut masses, || "context masses".to_string())?;
        for (c, m) in contexts.iter_mut().zip(masses) {
            c.mass = m;
        }

        let (n_c, n_v) = (contexts.len(), vocab.len());
        if cond.len() != worlds.len() * n_c * n_v {
            return Err(Error::Validation(format!(
                "conditional table has {} entries, expected {}",
                cond.len(),
                worlds.len() * n_c * n_v
            )));
        }
        for (r, row) in cond.chunks_mut(n_v).enumerate() {
            let (w, c) = (r / n_c, r % n_c);
            if let Some(v) = row.iter().position(|&x| !(x.is_finite() && x >= 0.0)) {
                return Err(Error::Validation(format!(
                    "conditional row for world `{}`, context `{}` has invalid entry {} at token `{}`",
                    worlds[w], contexts[c].id, row[v], vocab[v]
                )));
            }
            normalize_checked(row, || {
                format!(
                    "conditional row for world `{}`, context `{}`",
                    worlds[w], contexts[c].id
                )
            })?;
        }

        Ok(Self {
            worlds,
            prior,
            vocab,
            contexts,
            cond,
        })
    }

    pub fn n_worlds(&self) -> usize {
        self.worlds.len()
    }

    pub fn n_contexts(&self) -> usize {
        self.contexts.len()
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn mass(&self, c: usize) -> f64 {
        self.contexts[c].mass
    }

    /// Row `P_w(·|c)` by indices.
    pub fn row(&self, w: usize, c: usize) -> &[f64] {
        let n_v = self.vocab.len();
        let start = (w * self.contexts.len() + c) * n_v;
        &self.cond[start..start + n_v]
    }

    /// Row-major `(world, context, token)` table.
    pub fn table(&self) -> &[f64] {
        &self.cond
    }

    pub fn world_index(&self, id: &str) -> Result<usize> {
        self.worlds
            .iter()
            .position(|w| w == id)
            .ok_or_else(|| Error::UnknownWorld(id.to_string()))
    }

    pub fn context_index(&self, id: &str) -> Option<usize> {
        self.contexts.iter().position(|c| c.id == id)
    }

    /// True when both ecologies have the same worlds, prior and vocabulary.
    pub fn shares_structure(&self, other: &Ecology) -> bool {
        self.worlds == other.worlds
            && self.vocab == other.vocab
            && self
                .prior
                .iter()
                .zip(&other.prior)
                .all(|(a, b)| (a - b).abs() <= SIMPLEX_TOL)
    }

    pub(crate) fn require_shared(&self, other: &Ecology, what: &str) -> Result<()> {
        if self.shares_structure(other) {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "{what}: ecologies must share worlds, prior and vocabulary"
            )))
        }
    }

    /// The sub-ecology on the listed worlds, with the prior renormalized.
    pub fn restrict_worlds(&self, keep: &[usize]) -> Result<Ecology> {
        let worlds = keep
            .iter()
            .map(|&w| {
                self.worlds
                    .get(w)
                    .cloned()
                    .ok_or_else(|| Error::Dimension(format!("world index {w} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut prior: Vec<f64> = keep.iter().map(|&w| self.prior[w]).collect();
        let total: f64 = prior.iter().sum();
        prior.iter_mut().for_each(|p| *p /= total);
        let cond = keep
            .iter()
            .flat_map(|&w| (0..self.n_contexts()).flat_map(move |c| self.row(w, c).to_vec()))
            .collect();
        Ecology::from_flat(worlds, prior, self.vocab.clone(), self.contexts.clone(), cond)
    }

    /// Same ecology with a different (validated) prior.
    pub fn with_prior(&self, prior: Vec<f64>) -> Result<Ecology> {
        Ecology::from_flat(
            self.worlds.clone(),
            prior,
            self.vocab.clone(),
            self.contexts.clone(),
            self.cond.clone(),
        )
    }
}

fn unique<'a>(what: &str, ids: impl Iterator<Item = &'a String>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::Validation(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

fn normalize_checked(xs: &mut [f64], what: impl FnOnce() -> String) -> Result<()> {
    let s: f64 = xs.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Validation(format!("{} sums to {s}, expected 1", what())));
    }
    for x in xs.iter_mut() {
        *x /= s;
    }
    Ok(())
}
