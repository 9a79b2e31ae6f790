use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A subset of share (or coordinate) indices `{1..universe}`, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShareSet {
    universe: usize,
    members: Vec<usize>,
}

impl ShareSet {
    /// Members are 1-based; duplicates and out-of-range indices are rejected.
    pub fn new(members: impl IntoIterator<Item = usize>, universe: usize) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Domain(format!("share {} listed twice", w[0])));
        }
        if let Some(&bad) = members.iter().find(|&&i| i == 0 || i > universe) {
            return Err(Error::Domain(format!(
                "share index {bad} outside 1..={universe}"
            )));
        }
        Ok(ShareSet { universe, members })
    }

    pub fn empty(universe: usize) -> Self {
        ShareSet {
            universe,
            members: Vec::new(),
        }
    }

    pub fn full(universe: usize) -> Self {
        ShareSet {
            universe,
            members: (1..=universe).collect(),
        }
    }

    /// Bit `i` of `mask` selects share `i + 1`.
    pub fn from_mask(mask: u64, universe: usize) -> Self {
        ShareSet {
            universe,
            members: (0..universe)
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| i + 1)
                .collect(),
        }
    }

    /// Parses a comma-separated list such as `"1,3"`; blank input is the empty set.
    pub fn parse(text: &str, universe: usize) -> Result<Self> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Ok(ShareSet::empty(universe));
        }
        let members = trimmed
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Domain(format!("not a share index: {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        ShareSet::new(members, universe)
    }

    /// Every subset of `{1..universe}`, ordered by size and then lexicographically.
    pub fn all_subsets(universe: usize) -> Vec<ShareSet> {
        assert!(universe < 64, "subset enumeration needs universe < 64");
        let mut all: Vec<ShareSet> = (0..1u64 << universe)
            .map(|m| ShareSet::from_mask(m, universe))
            .collect();
        all.sort_by(|a, b| {
            a.len()
                .cmp(&b.len())
                .then_with(|| a.members.cmp(&b.members))
        });
        all
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Zero-based positions of the members.
    pub fn positions(&self) -> Vec<usize> {
        self.members.iter().map(|&i| i - 1).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn is_subset(&self, other: &ShareSet) -> bool {
        self.members.iter().all(|&i| other.contains(i))
    }

    pub fn complement(&self) -> ShareSet {
        ShareSet {
            universe: self.universe,
            members: (1..=self.universe).filter(|&i| !self.contains(i)).collect(),
        }
    }

    pub fn mask(&self) -> u64 {
        self.members.iter().fold(0, |m, &i| m | 1 << (i - 1))
    }
}

impl fmt::Display for ShareSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}
