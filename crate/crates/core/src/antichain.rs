//! Antichains over source indices.
//!
//! An antichain is a set of pairwise non-nested, non-empty index sets over
//! the sources `{1..n}`. Each antichain names one node of the redundancy
//! lattice and hence one decomposition quantity: `{1}{2}` is the redundancy
//! between sources 1 and 2, `{1,2}` their joint (synergistic) information,
//! and so on. The textual form drops the outer braces of the set of sets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A canonical antichain: sets sorted by (size, lexicographic), indices
/// within each set ascending, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Antichain {
    n: u8,
    sets: Vec<Vec<u8>>,
}

impl Antichain {
    /// Builds an antichain over `{1..n}` from the given index sets.
    ///
    /// Duplicate indices and duplicate sets are collapsed; the listed order
    /// of sets never matters. Returns an error if any set is empty, any
    /// index falls outside `1..=n`, or one set is nested inside another.
    pub fn new<I, S>(n: usize, sets: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = usize>,
    {
        if n == 0 || n > 4 {
            return Err(Error::UnsupportedOrder(n));
        }
        let mut canon: Vec<Vec<u8>> = Vec::new();
        for set in sets {
            let mut indices: Vec<u8> = Vec::new();
            for index in set {
                if index == 0 || index > n {
                    return Err(Error::SourceIndexOutOfRange { index, n });
                }
                indices.push(index as u8);
            }
            if indices.is_empty() {
                return Err(Error::EmptySet);
            }
            indices.sort_unstable();
            indices.dedup();
            canon.push(indices);
        }
        if canon.is_empty() {
            return Err(Error::EmptySet);
        }
        canon.sort_unstable_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
        canon.dedup();
        for (i, a) in canon.iter().enumerate() {
            for b in canon.iter().skip(i + 1) {
                if is_subset(a, b) || is_subset(b, a) {
                    let nested = if is_subset(a, b) { a } else { b };
                    return Err(Error::NestedSets(join_indices(nested)));
                }
            }
        }
        Ok(Antichain {
            n: n as u8,
            sets: canon,
        })
    }

    /// Parses the canonical string form, e.g. `"{1}{2,3}"`.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let trimmed = text.trim();
        if !trimmed.starts_with('{') || !trimmed.ends_with('}') {
            return Err(Error::ParseAntichain(text.to_string()));
        }
        let mut sets: Vec<Vec<usize>> = Vec::new();
        for chunk in trimmed[1..trimmed.len() - 1].split("}{") {
            let mut indices = Vec::new();
            for token in chunk.split(',') {
                let index: usize = token
                    .trim()
                    .parse()
                    .map_err(|_| Error::ParseAntichain(text.to_string()))?;
                indices.push(index);
            }
            sets.push(indices);
        }
        Antichain::new(n, sets)
    }

    /// Number of sources the antichain ranges over.
    pub fn n_sources(&self) -> usize {
        self.n as usize
    }

    /// The index sets, canonically ordered, indices 1-based.
    pub fn sets(&self) -> &[Vec<u8>] {
        &self.sets
    }

    /// True when the antichain consists of a single set, in which case its
    /// redundancy is the classical mutual information with that set
    /// (self-redundancy).
    pub fn is_singleton(&self) -> bool {
        self.sets.len() == 1
    }

    /// The bottom lattice element `{1}{2}..{n}` (full redundancy).
    pub fn bottom(n: usize) -> Result<Self> {
        Antichain::new(n, (1..=n).map(|i| [i]))
    }

    /// The top lattice element `{1,..,n}` (joint mutual information).
    pub fn top(n: usize) -> Result<Self> {
        Antichain::new(n, [1..=n])
    }
}

impl fmt::Display for Antichain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for set in &self.sets {
            write!(f, "{{{}}}", join_indices(set))?;
        }
        Ok(())
    }
}

fn join_indices(set: &[u8]) -> String {
    let parts: Vec<String> = set.iter().map(|i| i.to_string()).collect();
    parts.join(",")
}

fn is_subset(a: &[u8], b: &[u8]) -> bool {
    a.iter().all(|x| b.contains(x))
}

/// PID partial order on antichains: `beta` is below `alpha` iff every set of
/// `alpha` contains some set of `beta`. Reflexive.
pub fn below(beta: &Antichain, alpha: &Antichain) -> Result<bool> {
    if beta.n != alpha.n {
        return Err(Error::MismatchedSources(
            beta.n_sources(),
            alpha.n_sources(),
        ));
    }
    Ok(alpha
        .sets
        .iter()
        .all(|a| beta.sets.iter().any(|b| is_subset(b, a))))
}

/// Enumerates all antichains over the non-empty subsets of `{1..n}`, in
/// canonical order. Sizes are 4, 18 and 166 for n = 2, 3, 4 (the Dedekind
/// counts minus the two constant functions); n is capped at 4.
pub fn enumerate_antichains(n: usize) -> Result<Vec<Antichain>> {
    if n == 0 || n > 4 {
        return Err(Error::UnsupportedOrder(n));
    }
    let subsets: Vec<u32> = (1..(1u32 << n)).collect();
    let mut result = Vec::new();
    // Families of non-empty subsets, kept when pairwise incomparable.
    'family: for family in 1u32..(1 << subsets.len()) {
        let chosen: Vec<u32> = subsets
            .iter()
            .enumerate()
            .filter(|(bit, _)| family >> bit & 1 == 1)
            .map(|(_, &mask)| mask)
            .collect();
        for (i, &a) in chosen.iter().enumerate() {
            for &b in chosen.iter().skip(i + 1) {
                if a & b == a || a & b == b {
                    continue 'family;
                }
            }
        }
        let sets = chosen
            .iter()
            .map(|&mask| (0..n).filter(move |bit| mask >> bit & 1 == 1).map(|b| b + 1));
        result.push(Antichain::new(n, sets)?);
    }
    result.sort_unstable_by(|a, b| (a.sets.len(), &a.sets).cmp(&(b.sets.len(), &b.sets)));
    Ok(result)
}
