//! Set partitions of the world set in restricted-growth canonical form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::entropy;

/// Largest `n` accepted by [`enumerate_partitions`] without forcing.
pub const ENUMERATION_LIMIT: usize = 14;

/// Hard ceiling for forced enumeration; subset tables are indexed by `u64` masks.
pub const FORCED_ENUMERATION_LIMIT: usize = 24;

/// An encoding of `n` worlds into cells, stored as a restricted-growth string.
///
/// `labels[0] == 0` and every label is at most one more than the maximum of
/// the labels before it, so each set partition has exactly one representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    labels: Vec<usize>,
    cell_count: usize,
}

impl Partition {
    /// Accepts labels that are already canonical; otherwise reports the canonical form.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Validation("partition must cover at least one world".into()));
        }
        let mut next = 0usize;
        for &l in &labels {
            if l > next {
                let canonical = Self::canonicalize(&labels);
                return Err(Error::Validation(format!(
                    "partition `{}` is not in restricted-growth form; canonical form is `{}`",
                    join(&labels),
                    canonical
                )));
            }
            if l == next {
                next += 1;
            }
        }
        Ok(Self {
            labels,
            cell_count: next,
        })
    }

    /// Relabels arbitrary cell ids into restricted-growth form.
    pub fn canonicalize(raw: &[usize]) -> Self {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let labels = raw
            .iter()
            .map(|&r| match map.iter().find(|(k, _)| *k == r) {
                Some(&(_, v)) => v,
                None => {
                    let v = map.len();
                    map.push((r, v));
                    v
                }
            })
            .collect();
        Self {
            labels,
            cell_count: map.len(),
        }
    }

    /// Every world in its own cell.
    pub fn identity(n: usize) -> Self {
        Self {
            labels: (0..n).collect(),
            cell_count: n,
        }
    }

    /// A single cell holding every world.
    pub fn all_merged(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            cell_count: usize::from(n > 0),
        }
    }

    /// Builds a partition from explicit cells of world indices.
    pub fn from_cells(n: usize, cells: &[Vec<usize>]) -> Result<Self> {
        let mut raw = vec![usize::MAX; n];
        for (ci, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::Validation(format!("cell {ci} is empty")));
            }
            for &w in cell {
                if w >= n {
                    return Err(Error::Dimension(format!("world index {w} out of range for {n} worlds")));
                }
                if raw[w] != usize::MAX {
                    return Err(Error::Validation(format!("world {w} appears in two cells")));
                }
                raw[w] = ci;
            }
        }
        if let Some(w) = raw.iter().position(|&r| r == usize::MAX) {
            return Err(Error::Validation(format!("world {w} is in no cell")));
        }
        Ok(Self::canonicalize(&raw))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cell_count(&self) -> usize {
        self.cell_count
    }

    /// Members of each cell, in cell order, each ascending.
    pub fn cells(&self) -> Vec<Vec<usize>> {
        let mut cells = vec![Vec::new(); self.cell_count];
        for (w, &l) in self.labels.iter().enumerate() {
            cells[l].push(w);
        }
        cells
    }

    /// Bit mask of each cell (world `w` is bit `w`).
    pub fn cell_masks(&self) -> Vec<u64> {
        let mut masks = vec![0u64; self.cell_count];
        for (w, &l) in self.labels.iter().enumerate() {
            masks[l] |= 1u64 << w;
        }
        masks
    }

    /// True when every cell of `self` lies inside a cell of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.len() != coarser.len() {
            return false;
        }
        let mut image = vec![usize::MAX; self.cell_count];
        for (&fine, &coarse) in self.labels.iter().zip(&coarser.labels) {
            if image[fine] == usize::MAX {
                image[fine] = coarse;
            } else if image[fine] != coarse {
                return false;
            }
        }
        true
    }

    /// Replaces `cell` by the two subcells `subset` and `cell \ subset`.
    pub fn split(&self, cell: usize, subset: &[usize]) -> Result<Partition> {
        if cell >= self.cell_count {
            return Err(Error::InvalidSubset(format!("cell {cell} does not exist")));
        }
        let members: Vec<usize> = self.cells().swap_remove(cell);
        if subset.is_empty() || subset.len() >= members.len() {
            return Err(Error::InvalidSubset(format!(
                "subset must be a nonempty proper subset of cell {cell}"
            )));
        }
        let mut seen = vec![false; self.len()];
        for &w in subset {
            if !members.contains(&w) {
                return Err(Error::InvalidSubset(format!("world {w} is not in cell {cell}")));
            }
            if std::mem::replace(&mut seen[w], true) {
                return Err(Error::InvalidSubset(format!("world {w} listed twice")));
            }
        }
        let fresh = self.cell_count;
        let raw: Vec<usize> = self
            .labels
            .iter()
            .enumerate()
            .map(|(w, &l)| if seen[w] { fresh } else { l })
            .collect();
        Ok(Self::canonicalize(&raw))
    }

    /// Joins cells `a` and `b`.
    pub fn merge(&self, a: usize, b: usize) -> Result<Partition> {
        if a >= self.cell_count || b >= self.cell_count || a == b {
            return Err(Error::InvalidArgument(format!("cannot merge cells {a} and {b}")));
        }
        let raw: Vec<usize> = self
            .labels
            .iter()
            .map(|&l| if l == b { a } else { l })
            .collect();
        Ok(Self::canonicalize(&raw))
    }

    /// All partitions reachable by one split of one cell into two nonempty parts.
    pub fn split_neighbors(&self) -> Vec<Partition> {
        let mut out = Vec::new();
        for (ci, members) in self.cells().iter().enumerate() {
            for subset in bipartitions(members) {
                out.push(self.split(ci, &subset).expect("bipartition is a proper subset"));
            }
        }
        out
    }

    /// All partitions reachable by merging two distinct cells.
    pub fn merge_neighbors(&self) -> Vec<Partition> {
        let mut out = Vec::new();
        for a in 0..self.cell_count {
            for b in a + 1..self.cell_count {
                out.push(self.merge(a, b).expect("distinct cells"));
            }
        }
        out
    }
}

/// The "A" sides of every nontrivial bipartition `A ⊔ B` of `members`.
///
/// Each unordered bipartition appears once; `A` always contains `members[0]`.
pub fn bipartitions(members: &[usize]) -> Vec<Vec<usize>> {
    let m = members.len();
    if m < 2 {
        return Vec::new();
    }
    let rest = m - 1;
    let count = (1u64 << rest) - 1;
    (0..count)
        .map(|bits| {
            let mut a = vec![members[0]];
            for (i, &w) in members[1..].iter().enumerate() {
                if bits >> i & 1 == 1 {
                    a.push(w);
                }
            }
            a
        })
        .collect()
}

fn join(labels: &[usize]) -> String {
    labels
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join(&self.labels))
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let labels = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("partition label `{t}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::from_labels(labels)
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Partition::from_labels(v)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.labels
    }
}

/// Bell number `B(n)`, the count of set partitions of an `n`-set.
pub fn bell_number(n: usize) -> u128 {
    // Bell triangle.
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().expect("nonempty"));
        for &x in &row {
            let last = *next.last().expect("nonempty");
            next.push(last + x);
        }
        row = next;
    }
    row[0]
}

/// Lexicographic generator of restricted-growth strings.
#[derive(Debug, Clone)]
pub struct PartitionIter {
    labels: Vec<usize>,
    // prefix_max[i] = max(labels[0..=i])
    prefix_max: Vec<usize>,
    done: bool,
}

impl PartitionIter {
    fn new(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            prefix_max: vec![0; n],
            done: n == 0,
        }
    }

    fn advance(&mut self) {
        let n = self.labels.len();
        let mut i = n;
        while i > 1 {
            i -= 1;
            if self.labels[i] <= self.prefix_max[i - 1] {
                self.labels[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.labels[i]);
                for j in i + 1..n {
                    self.labels[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let out = Partition {
            labels: self.labels.clone(),
            cell_count: self.prefix_max.last().map_or(0, |m| m + 1),
        };
        self.advance();
        Some(out)
    }
}

/// Every partition of `n` worlds exactly once, in restricted-growth lexicographic order.
///
/// Rejects `n` outside `1..=14`; see [`enumerate_partitions_forced`].
pub fn enumerate_partitions(n: usize) -> Result<PartitionIter> {
    check_enumerable(n, false)?;
    Ok(PartitionIter::new(n))
}

/// Like [`enumerate_partitions`] but allows `n` up to [`FORCED_ENUMERATION_LIMIT`].
pub fn enumerate_partitions_forced(n: usize) -> Result<PartitionIter> {
    check_enumerable(n, true)?;
    Ok(PartitionIter::new(n))
}

pub(crate) fn check_enumerable(n: usize, force: bool) -> Result<()> {
    let limit = if force {
        FORCED_ENUMERATION_LIMIT
    } else {
        ENUMERATION_LIMIT
    };
    if n == 0 || n > limit {
        return Err(Error::OutOfRange(format!(
            "n = {n} is outside 1..={limit} (Bell({n}) = {})",
            bell_number(n)
        )));
    }
    Ok(())
}

/// Representational complexity `H(p(W))` in nats.
pub fn complexity(p: &Partition, prior: &[f64]) -> Result<f64> {
    if p.len() != prior.len() {
        return Err(Error::Dimension(format!(
            "partition covers {} worlds but prior has {}",
            p.len(),
            prior.len()
        )));
    }
    let mut masses = vec![0.0; p.cell_count()];
    for (&l, &w) in p.labels().iter().zip(prior) {
        masses[l] += w;
    }
    Ok(entropy(&masses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::collections::HashSet;

    /// Oracle: assign each element to any existing block or a new one, recursively.
    fn brute_force_count(n: usize) -> usize {
        fn rec(i: usize, n: usize, blocks: usize) -> usize {
            if i == n {
                return 1;
            }
            (0..=blocks).map(|b| rec(i + 1, n, blocks.max(b + 1))).sum()
        }
        if n == 0 { 0 } else { rec(1, n, 1) }
    }

    #[test]
    fn counts_match_exhaustive_oracle() {
        assert_eq!(brute_force_count(3), 5);
        assert_eq!(brute_force_count(4), 15);
        for n in 1..=8 {
            let got = enumerate_partitions(n).unwrap().count();
            assert_eq!(got, brute_force_count(n), "n = {n}");
            assert_eq!(got as u128, bell_number(n));
        }
    }

    #[test]
    fn enumeration_is_lexicographic_and_unique() {
        let all: Vec<_> = enumerate_partitions(5).unwrap().collect();
        for w in all.windows(2) {
            assert!(w[0].labels() < w[1].labels());
        }
        let set: HashSet<_> = all.iter().collect();
        assert_eq!(set.len(), all.len());
        assert_eq!(all.first().unwrap(), &Partition::all_merged(5));
        assert_eq!(all.last().unwrap(), &Partition::identity(5));
    }

    #[test]
    fn guard_rejects_out_of_range() {
        assert!(matches!(enumerate_partitions(0), Err(Error::OutOfRange(_))));
        assert!(matches!(enumerate_partitions(15), Err(Error::OutOfRange(_))));
        assert!(matches!(enumerate_partitions(20), Err(Error::OutOfRange(_))));
        assert!(enumerate_partitions_forced(15).is_ok());
        // B(20) ≈ 5.2e13
        let b20 = bell_number(20) as f64;
        assert!((b20 / 5.2e13 - 1.0).abs() < 0.01, "{b20}");
    }

    #[test]
    fn noncanonical_labels_suggest_canonical_form() {
        let err = Partition::from_labels(vec![1, 0, 1]).unwrap_err();
        assert!(err.to_string().contains("canonical form is `0,1,0`"), "{err}");
        assert!("0,2,1".parse::<Partition>().is_err());
        assert_eq!("0,0,1".parse::<Partition>().unwrap().cell_count(), 2);
    }

    #[test]
    fn complexity_examples() {
        let u3 = [1.0 / 3.0; 3];
        assert_abs_diff_eq!(complexity(&Partition::identity(3), &u3).unwrap(), 3f64.ln(), epsilon = 1e-12);
        assert_eq!(complexity(&Partition::all_merged(3), &u3).unwrap(), 0.0);
        // H(2/3, 1/3) by direct summation
        let oracle = -(2.0 / 3.0) * (2.0f64 / 3.0).ln() - (1.0 / 3.0) * (1.0f64 / 3.0).ln();
        let p = Partition::from_labels(vec![0, 0, 1]).unwrap();
        assert_abs_diff_eq!(complexity(&p, &u3).unwrap(), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle, 0.636514, epsilon = 1e-6);
    }

    #[test]
    fn refinement_and_moves() {
        let fine = Partition::from_labels(vec![0, 1, 2, 2]).unwrap();
        let coarse = Partition::from_labels(vec![0, 0, 1, 1]).unwrap();
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
        assert!(Partition::identity(4).refines(&coarse));
        assert_eq!(coarse.split(0, &[1]).unwrap(), Partition::from_labels(vec![0, 1, 2, 2]).unwrap());
        assert_eq!(coarse.merge(0, 1).unwrap(), Partition::all_merged(4));
        assert!(coarse.split(0, &[0, 1]).is_err());
        assert!(coarse.split(0, &[2]).is_err());
        // 4-cell merge count and split count of a 3-cell
        assert_eq!(Partition::identity(4).merge_neighbors().len(), 6);
        assert_eq!(Partition::all_merged(3).split_neighbors().len(), 3);
    }

    #[test]
    fn serde_rejects_noncanonical() {
        let p: Partition = serde_json::from_str("[0,1,0]").unwrap();
        assert_eq!(p.cell_count(), 2);
        assert!(serde_json::from_str::<Partition>("[1,0]").is_err());
    }
}
