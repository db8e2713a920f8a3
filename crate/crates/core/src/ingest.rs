//! Text corpora to empirical ecologies: one world per language (or any text
//! source), contexts are the preceding `L` characters, tokens are characters.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::off_ecology_bound;
use crate::ecology::{Context, Ecology};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum VocabMode {
    /// Space plus `a`–`z`.
    #[default]
    #[serde(rename = "ascii-lower-printable")]
    AsciiLower,
    #[serde(rename = "explicit")]
    Explicit(Vec<char>),
}

impl VocabMode {
    pub fn symbols(&self) -> Vec<char> {
        match self {
            VocabMode::AsciiLower => std::iter::once(' ').chain('a'..='z').collect(),
            VocabMode::Explicit(v) => {
                let mut v = v.clone();
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub context_length: usize,
    pub max_contexts: usize,
    pub smoothing: f64,
    pub vocab_mode: VocabMode,
    /// Fraction of each world's text kept as the held-out span the ecology
    /// is built from; zero uses the whole text.
    pub holdout_fraction: f64,
    pub seed: u64,
    /// Accept a world none of whose retained contexts occur (needs `smoothing > 0`).
    pub allow_unseen_worlds: bool,
    /// World prior; uniform when absent.
    pub prior: Option<Vec<f64>>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            context_length: 2,
            max_contexts: 64,
            smoothing: 0.0,
            vocab_mode: VocabMode::AsciiLower,
            holdout_fraction: 0.0,
            seed: 0,
            allow_unseen_worlds: false,
            prior: None,
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_contexts == 0 {
            return Err(Error::Validation("max_contexts must be positive".into()));
        }
        if !(self.smoothing.is_finite() && self.smoothing >= 0.0) {
            return Err(Error::Validation("smoothing must be finite and nonnegative".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::Validation("holdout_fraction must lie in [0, 1)".into()));
        }
        if self.vocab_mode.symbols().is_empty() {
            return Err(Error::Validation("vocabulary is empty".into()));
        }
        Ok(())
    }
}

/// Drops IVTFF comment lines and `<…>` / `{…}` markup.
fn strip_markup(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for (i, line) in raw.split('\n').enumerate() {
        if line.starts_with('#') {
            continue;
        }
        if i > 0 {
            out.push('\n');
        }
        let mut close = None;
        for ch in line.chars() {
            match (close, ch) {
                (None, '<') => close = Some('>'),
                (None, '{') => close = Some('}'),
                (Some(end), c) if c == end => {
                    close = None;
                    out.push(' ');
                }
                (Some(_), _) => {}
                (None, c) => out.push(c),
            }
        }
    }
    out
}

/// Lowercases, transliterates to ASCII, maps characters outside the
/// vocabulary to a space (or drops them if space is not in the vocabulary)
/// and collapses runs of spaces.
pub fn normalize_text(raw: &[u8], vocab: &VocabMode) -> String {
    let text = String::from_utf8_lossy(raw);
    let ascii = deunicode::deunicode(&strip_markup(&text)).to_lowercase();
    let symbols = vocab.symbols();
    let has_space = symbols.contains(&' ');
    let mut out = String::with_capacity(ascii.len());
    for ch in ascii.chars() {
        let mapped = if symbols.binary_search(&ch).is_ok() {
            ch
        } else if has_space {
            ' '
        } else {
            continue;
        };
        if mapped == ' ' && out.ends_with(' ') {
            continue;
        }
        out.push(mapped);
    }
    out
}

/// A world's source text, either inline or read from files.
#[derive(Clone, Debug)]
pub enum Source {
    Text(String),
    Files(Vec<PathBuf>),
}

#[derive(Clone, Debug)]
pub struct WorldSource {
    pub id: String,
    pub source: Source,
}

impl WorldSource {
    pub fn text(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            source: Source::Text(text.into()),
        }
    }

    pub fn files(id: impl Into<String>, files: Vec<PathBuf>) -> Self {
        Self {
            id: id.into(),
            source: Source::Files(files),
        }
    }

    fn read(&self) -> Result<Vec<u8>> {
        match &self.source {
            Source::Text(t) => Ok(t.as_bytes().to_vec()),
            Source::Files(files) => {
                let mut buf = Vec::new();
                for path in files {
                    buf.extend(std::fs::read(path).map_err(|e| Error::io(path, e))?);
                    buf.push(b'\n');
                }
                Ok(buf)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorldProvenance {
    pub id: String,
    pub sources: Vec<String>,
    /// Length of the normalized text, in characters.
    pub normalized_chars: usize,
    /// Held-out span `[start, end)` the counts come from.
    pub span: (usize, usize),
    /// Transitions counted within the span.
    pub tokens: u64,
    /// Transitions whose context was retained.
    pub retained_tokens: u64,
    /// Retained contexts this world never visits; their rows are pure smoothing
    /// (uniform when smoothing is zero).
    pub unseen_contexts: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TruncationReport {
    pub distinct_contexts: usize,
    pub retained: usize,
    /// Share of pooled transitions whose context was retained.
    pub retained_mass: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub config: IngestConfig,
    pub worlds: Vec<WorldProvenance>,
    /// Pooled count per retained context, in context order.
    pub context_counts: Vec<u64>,
    /// `counts[w][c][v]`: transitions `c → v` in world `w`.
    pub counts: Vec<Vec<Vec<u64>>>,
    pub truncation: TruncationReport,
}

#[derive(Clone, Debug)]
pub struct EmpiricalEcology {
    pub ecology: Ecology,
    pub provenance: Provenance,
}

struct Counted {
    chars: Vec<char>,
    span: (usize, usize),
    // context -> next-symbol counts
    table: HashMap<String, Vec<u64>>,
    tokens: u64,
}

fn heldout_span(len: usize, fraction: f64, seed: u64, stream: u64) -> (usize, usize) {
    if fraction == 0.0 {
        return (0, len);
    }
    let width = ((len as f64) * fraction).round() as usize;
    let width = width.clamp(1.min(len), len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let start = rng.random_range(0..=len - width);
    (start, start + width)
}

fn count(chars: &[char], span: (usize, usize), l: usize, index: &HashMap<char, usize>) -> (HashMap<String, Vec<u64>>, u64) {
    let mut table: HashMap<String, Vec<u64>> = HashMap::new();
    let mut tokens = 0;
    let (start, end) = span;
    for i in start + l..end {
        let ctx: String = chars[i - l..i].iter().collect();
        let v = index[&chars[i]];
        table.entry(ctx).or_insert_with(|| vec![0; index.len()])[v] += 1;
        tokens += 1;
    }
    (table, tokens)
}

fn smoothed_row(counts: &[u64], delta: f64) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let denom = total as f64 + delta * counts.len() as f64;
    if denom == 0.0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    counts.iter().map(|&n| (n as f64 + delta) / denom).collect()
}

fn source_names(w: &WorldSource) -> Vec<String> {
    match &w.source {
        Source::Text(_) => vec!["<inline>".into()],
        Source::Files(f) => f.iter().map(|p| p.display().to_string()).collect(),
    }
}

fn vocab_index(symbols: &[char]) -> HashMap<char, usize> {
    symbols.iter().enumerate().map(|(i, &c)| (c, i)).collect()
}

pub fn ingest(worlds: &[WorldSource], cfg: &IngestConfig) -> Result<EmpiricalEcology> {
    cfg.validate()?;
    if worlds.is_empty() {
        return Err(Error::Precondition("at least one world is required".into()));
    }
    let symbols = cfg.vocab_mode.symbols();
    let index = vocab_index(&symbols);
    let l = cfg.context_length;

    let mut counted = Vec::with_capacity(worlds.len());
    for (k, w) in worlds.iter().enumerate() {
        let chars: Vec<char> = normalize_text(&w.read()?, &cfg.vocab_mode).chars().collect();
        if chars.iter().all(|&c| c == ' ') {
            return Err(Error::Precondition(format!(
                "world `{}` has no text after normalization",
                w.id
            )));
        }
        let span = heldout_span(chars.len(), cfg.holdout_fraction, cfg.seed, k as u64);
        let (table, tokens) = count(&chars, span, l, &index);
        counted.push(Counted {
            chars,
            span,
            table,
            tokens,
        });
    }

    let mut pooled: BTreeMap<&str, u64> = BTreeMap::new();
    for c in &counted {
        for (ctx, row) in &c.table {
            *pooled.entry(ctx).or_default() += row.iter().sum::<u64>();
        }
    }
    let total: u64 = pooled.values().sum();
    let mut ranked: Vec<(&str, u64)> = pooled.iter().map(|(k, &v)| (*k, v)).collect();
    // BTreeMap order breaks ties by id; the sort is stable.
    ranked.sort_by_key(|r| std::cmp::Reverse(r.1));
    let distinct = ranked.len();
    ranked.truncate(cfg.max_contexts);
    if ranked.is_empty() {
        return Err(Error::Precondition("context set is empty after truncation".into()));
    }
    let kept: u64 = ranked.iter().map(|r| r.1).sum();

    let zero = vec![0u64; symbols.len()];
    let mut counts = Vec::with_capacity(worlds.len());
    let mut cond = Vec::with_capacity(worlds.len());
    let mut provenance = Vec::with_capacity(worlds.len());
    for (w, c) in worlds.iter().zip(&counted) {
        let rows: Vec<Vec<u64>> = ranked
            .iter()
            .map(|(ctx, _)| c.table.get(*ctx).unwrap_or(&zero).clone())
            .collect();
        let retained_tokens: u64 = rows.iter().flatten().sum();
        if retained_tokens == 0 && !(cfg.smoothing > 0.0 && cfg.allow_unseen_worlds) {
            return Err(Error::Precondition(format!(
                "world `{}` has no occurrences of any retained context",
                w.id
            )));
        }
        let unseen_contexts = ranked
            .iter()
            .zip(&rows)
            .filter(|(_, r)| r.iter().all(|&n| n == 0))
            .map(|((ctx, _), _)| ctx.to_string())
            .collect();
        cond.push(rows.iter().map(|r| smoothed_row(r, cfg.smoothing)).collect::<Vec<_>>());
        counts.push(rows);
        provenance.push(WorldProvenance {
            id: w.id.clone(),
            sources: source_names(w),
            normalized_chars: c.chars.len(),
            span: c.span,
            tokens: c.tokens,
            retained_tokens,
            unseen_contexts,
        });
    }

    let n = worlds.len();
    let prior = cfg.prior.clone().unwrap_or_else(|| vec![1.0 / n as f64; n]);
    let contexts = ranked
        .iter()
        .map(|(ctx, k)| Context {
            id: ctx.to_string(),
            mass: *k as f64 / kept as f64,
        })
        .collect();
    let ecology = Ecology::new(
        worlds.iter().map(|w| w.id.clone()).collect(),
        prior,
        symbols.iter().map(|c| c.to_string()).collect(),
        contexts,
        cond,
    )?;
    Ok(EmpiricalEcology {
        ecology,
        provenance: Provenance {
            config: cfg.clone(),
            worlds: provenance,
            context_counts: ranked.iter().map(|r| r.1).collect(),
            counts,
            truncation: TruncationReport {
                distinct_contexts: distinct,
                retained: ranked.len(),
                retained_mass: kept as f64 / total.max(1) as f64,
            },
        },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub probe: String,
    /// Training world whose code the probe falls into.
    pub nearest: String,
    pub sigma2: f64,
    pub bound: f64,
    /// Excess of the training encoding on the probe ecology.
    pub actual: f64,
    pub holds: bool,
    /// Probe transitions whose context is in the training scheme.
    pub overlap_tokens: u64,
}

/// Evaluates each probe world against a trained ecology. The probe joins
/// the training worlds on the training contexts; an encoding fitted to the
/// training worlds has no code of its own for it, so it shares the code of
/// its nearest training world (smallest task distance). The report gives the
/// excess that merge costs on the probe ecology and the pairwise lower bound.
pub fn off_ecology_probe(
    train: &EmpiricalEcology,
    probes: &[WorldSource],
    cfg: &IngestConfig,
) -> Result<Vec<ProbeReport>> {
    cfg.validate()?;
    let base = &train.ecology;
    let tcfg = &train.provenance.config;
    if cfg.vocab_mode != tcfg.vocab_mode || cfg.context_length != tcfg.context_length {
        return Err(Error::Precondition(
            "probe must use the training vocabulary and context length".into(),
        ));
    }
    let symbols = cfg.vocab_mode.symbols();
    let index = vocab_index(&symbols);
    let n = base.n_worlds();
    let train_rows: Vec<Vec<Vec<f64>>> = train
        .provenance
        .counts
        .iter()
        .map(|w| w.iter().map(|r| smoothed_row(r, cfg.smoothing)).collect())
        .collect();

    let mut reports = Vec::with_capacity(probes.len());
    for probe in probes {
        if base.worlds().contains(&probe.id) {
            return Err(Error::InvalidArgument(format!(
                "probe id `{}` collides with a training world",
                probe.id
            )));
        }
        let chars: Vec<char> = normalize_text(&probe.read()?, &cfg.vocab_mode).chars().collect();
        let (table, _) = count(&chars, (0, chars.len()), cfg.context_length, &index);
        let zero = vec![0u64; symbols.len()];
        let rows: Vec<Vec<u64>> = base
            .contexts()
            .iter()
            .map(|c| table.get(&c.id).unwrap_or(&zero).clone())
            .collect();
        let overlap_tokens: u64 = rows.iter().flatten().sum();
        if overlap_tokens == 0 {
            return Err(Error::Precondition(format!(
                "probe `{}` shares no contexts with the training scheme",
                probe.id
            )));
        }
        let probe_row: Vec<Vec<f64>> = rows.iter().map(|r| smoothed_row(r, cfg.smoothing)).collect();

        let mut worlds = base.worlds().to_vec();
        worlds.push(probe.id.clone());
        let prior = vec![1.0 / (n + 1) as f64; n + 1];
        let build = |last: Vec<Vec<f64>>| {
            let mut cond = train_rows.clone();
            cond.push(last);
            Ecology::new(worlds.clone(), prior.clone(), base.vocab().to_vec(), base.contexts().to_vec(), cond)
        };
        let probe_eco = build(probe_row)?;
        let (nearest, sigma2) = (0..n)
            .map(|w| (w, probe_eco.task_distance_idx(w, n)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one training world");
        let nearest_id = base.worlds()[nearest].clone();
        let (bound, actual, holds) = if sigma2 > 0.0 {
            let seen = build(train_rows[nearest].clone())?;
            let r = off_ecology_bound(&seen, &probe_eco, (&nearest_id, &probe.id))?;
            (r.bound, r.actual, r.holds)
        } else {
            (0.0, 0.0, true)
        };
        reports.push(ProbeReport {
            probe: probe.id.clone(),
            nearest: nearest_id,
            sigma2,
            bound,
            actual,
            holds,
            overlap_tokens,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EN: &str = "the cat sat on the mat and the dog sat on the log while the sun set over the hill";
    const FR: &str = "le chat est sur le tapis et le chien est sur la buche pendant que le soleil se couche";

    #[test]
    fn normalization_examples() {
        let v = VocabMode::AsciiLower;
        assert_eq!(normalize_text("Élan  vital!".as_bytes(), &v), "elan vital ");
        assert_eq!(normalize_text(b"plain words here", &v), "plain words here");
        let eva = "<f1r.P1.1;H>      fachys.ykal.ar.ataiin.shol.shory.{cto}res.y.kor.sholdy-";
        let out = normalize_text(eva.as_bytes(), &v);
        assert!(out.chars().all(|c| c == ' ' || c.is_ascii_lowercase()));
        assert!(out.contains("fachys ykal ar ataiin"));
        assert!(!out.contains("cto"));
    }

    #[test]
    fn explicit_vocab_without_space_drops() {
        let v = VocabMode::Explicit(vec!['b', 'a']);
        assert_eq!(normalize_text(b"a b-c\xffab", &v), "abab");
    }

    #[test]
    fn identical_worlds_merge() {
        let cfg = IngestConfig::default();
        let e = ingest(&[WorldSource::text("x", EN), WorldSource::text("y", EN)], &cfg).unwrap();
        assert_eq!(e.ecology.quotient_partition(0.0).unwrap().cell_count(), 1);
    }

    #[test]
    fn empty_context_gives_unigrams() {
        let cfg = IngestConfig {
            context_length: 0,
            ..Default::default()
        };
        let e = ingest(&[WorldSource::text("x", "abba")], &cfg).unwrap();
        assert_eq!(e.ecology.n_contexts(), 1);
        assert_eq!(e.ecology.contexts()[0].id, "");
        let row = e.ecology.row(0, 0);
        assert_eq!(row[1], 0.5);
        assert_eq!(row[2], 0.5);
    }

    #[test]
    fn counts_match_probabilities() {
        let cfg = IngestConfig {
            smoothing: 0.5,
            max_contexts: 10,
            ..Default::default()
        };
        let e = ingest(&[WorldSource::text("en", EN), WorldSource::text("fr", FR)], &cfg).unwrap();
        let v = e.ecology.vocab_len() as f64;
        for (w, rows) in e.provenance.counts.iter().enumerate() {
            for (c, r) in rows.iter().enumerate() {
                let tot: u64 = r.iter().sum();
                for (k, &n) in r.iter().enumerate() {
                    let p = (n as f64 + 0.5) / (tot as f64 + 0.5 * v);
                    assert!((e.ecology.row(w, c)[k] - p).abs() < 1e-12);
                }
            }
        }
        assert_eq!(e.provenance.truncation.retained, 10);
        let pooled: u64 = e.provenance.context_counts.iter().sum();
        assert!((e.ecology.mass(0) - e.provenance.context_counts[0] as f64 / pooled as f64).abs() < 1e-15);
    }

    #[test]
    fn holdout_span_is_seeded_and_sized() {
        let cfg = IngestConfig {
            holdout_fraction: 0.5,
            seed: 9,
            ..Default::default()
        };
        let a = ingest(&[WorldSource::text("en", EN)], &cfg).unwrap();
        let b = ingest(&[WorldSource::text("en", EN)], &cfg).unwrap();
        assert_eq!(a.ecology, b.ecology);
        let p = &a.provenance.worlds[0];
        assert_eq!(p.span.1 - p.span.0, (p.normalized_chars as f64 * 0.5).round() as usize);
    }

    #[test]
    fn errors() {
        let cfg = IngestConfig::default();
        assert!(ingest(&[], &cfg).is_err());
        assert!(ingest(&[WorldSource::text("x", "!!!")], &cfg).is_err());
        let cfg1 = IngestConfig {
            max_contexts: 1,
            ..Default::default()
        };
        // The top context never occurs in the second world.
        assert!(ingest(&[WorldSource::text("x", "aaaaaaa"), WorldSource::text("y", "bcbcb")], &cfg1).is_err());
    }

    #[test]
    fn probe_self_is_zero_and_foreign_is_positive() {
        let cfg = IngestConfig::default();
        let train = ingest(&[WorldSource::text("en", EN), WorldSource::text("fr", FR)], &cfg).unwrap();
        let r = off_ecology_probe(
            &train,
            &[WorldSource::text("en2", EN), WorldSource::text("xx", "zzq zqz qqz zzz qzq the")],
            &cfg,
        )
        .unwrap();
        assert_eq!(r[0].nearest, "en");
        assert_eq!(r[0].actual, 0.0);
        assert!(r[1].actual > 0.0 && r[1].holds);
        assert!(off_ecology_probe(&train, &[WorldSource::text("en", EN)], &cfg).is_err());
        assert!(off_ecology_probe(&train, &[WorldSource::text("q", "qqqqq")], &cfg).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn ingest_is_deterministic_and_rows_normalized(texts in prop::collection::vec("[a-e ]{5,60}", 1..4), seed in any::<u64>()) {
            let worlds: Vec<WorldSource> = texts.iter().enumerate()
                .map(|(i, t)| WorldSource::text(format!("w{i}"), format!("{t}ab")))
                .collect();
            let cfg = IngestConfig { smoothing: 0.1, allow_unseen_worlds: true, holdout_fraction: 0.0, seed, ..Default::default() };
            let a = ingest(&worlds, &cfg).unwrap();
            let b = ingest(&worlds, &cfg).unwrap();
            prop_assert_eq!(a.ecology.to_json_string(), b.ecology.to_json_string());
            for r in a.ecology.table().chunks(a.ecology.vocab_len()) {
                prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn adding_worlds_never_shrinks_quotient(texts in prop::collection::vec("[ab ]{20,80}", 2..5)) {
            let worlds: Vec<WorldSource> = texts.iter().enumerate()
                .map(|(i, t)| WorldSource::text(format!("w{i}"), format!("ab {t}")))
                .collect();
            let cfg = IngestConfig { context_length: 1, ..Default::default() };
            let mut last = 0;
            for k in 1..=worlds.len() {
                let e = ingest(&worlds[..k], &cfg).unwrap();
                let size = e.ecology.quotient_partition(0.0).unwrap().cell_count();
                prop_assert!(size >= last);
                last = size;
            }
        }

        #[test]
        fn heldout_span_in_bounds(len in 1usize..500, f in 0.0f64..0.99, seed in any::<u64>()) {
            let (s, e) = heldout_span(len, f, seed, 0);
            prop_assert!(s <= e && e <= len);
        }
    }
}
