// SPDX-License-Identifier: Apache-2.0

//! Exhaustive enumeration of owner subsets, disjoint pairs and set
//! partitions, in the deterministic orders the checkers rely on.

use crate::resource::OwnerSet;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Upper bounds on owner counts for the brute-force checkers. Exceeding a
/// bound is an error; nothing is ever sampled instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Subset scans, `2^n` work (cost efficiency).
    pub subsets: usize,
    /// Disjoint-pair scans, `3^n` work (reward axioms, economies of scale).
    pub pairs: usize,
    /// Coalition and partition scans, Bell-number work (strong Nash).
    pub coalitions: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            subsets: 20,
            pairs: 14,
            coalitions: 10,
        }
    }
}

impl Limits {
    /// The same bound for every scan.
    pub fn uniform(owners: usize) -> Self {
        Limits {
            subsets: owners,
            pairs: owners,
            coalitions: owners,
        }
    }

    pub(crate) fn check(limit: usize, owners: usize) -> Result<()> {
        if owners > limit {
            Err(Error::EnumerationLimitExceeded { owners, limit })
        } else {
            Ok(())
        }
    }
}

/// Nonempty subsets of a set in lexicographic order of member lists.
#[derive(Debug, Clone)]
pub struct LexSubsets {
    pool: Vec<u64>,
    chosen: Vec<usize>,
    current: u64,
    done: bool,
}

pub fn lex_subsets(set: OwnerSet) -> LexSubsets {
    LexSubsets {
        pool: set.iter().map(|o| 1u64 << o.0).collect(),
        chosen: Vec::new(),
        current: 0,
        done: set.is_empty(),
    }
}

impl Iterator for LexSubsets {
    type Item = OwnerSet;

    fn next(&mut self) -> Option<OwnerSet> {
        if self.done {
            return None;
        }
        let last = self.pool.len() - 1;
        match self.chosen.last().copied() {
            None => {
                self.chosen.push(0);
                self.current = self.pool[0];
            }
            Some(top) if top < last => {
                self.chosen.push(top + 1);
                self.current |= self.pool[top + 1];
            }
            Some(top) => {
                self.chosen.pop();
                self.current &= !self.pool[top];
                match self.chosen.last_mut() {
                    None => {
                        self.done = true;
                        return None;
                    }
                    Some(prev) => {
                        self.current &= !self.pool[*prev];
                        *prev += 1;
                        self.current |= self.pool[*prev];
                    }
                }
            }
        }
        Some(OwnerSet::from_bits(self.current))
    }
}

/// Unordered pairs `(a, b)` of disjoint nonempty subsets of `set` with
/// `a < b`, in lexicographic pair order.
pub fn disjoint_pairs(set: OwnerSet) -> impl Iterator<Item = (OwnerSet, OwnerSet)> {
    lex_subsets(set).flat_map(move |a| {
        lex_subsets(set.difference(a))
            .filter(move |b| a < *b)
            .map(move |b| (a, b))
    })
}

/// Set partitions of `m` labelled elements as restricted-growth strings:
/// `labels[0] = 0` and `labels[i] <= 1 + max(labels[..i])`. Strings come in
/// lexicographic order, starting from the single-block partition.
#[derive(Debug, Clone)]
pub struct RestrictedGrowth {
    labels: Vec<usize>,
    prefix_max: Vec<usize>,
    started: bool,
}

impl RestrictedGrowth {
    pub fn new(elements: usize) -> Self {
        RestrictedGrowth {
            labels: vec![0; elements],
            prefix_max: vec![0; elements],
            started: false,
        }
    }

    /// Advances to the next partition and returns its labels.
    pub fn advance(&mut self) -> Option<&[usize]> {
        if !self.started {
            self.started = true;
            return if self.labels.is_empty() {
                None
            } else {
                Some(&self.labels)
            };
        }
        let m = self.labels.len();
        for i in (1..m).rev() {
            if self.labels[i] <= self.prefix_max[i - 1] {
                self.labels[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.labels[i]);
                for j in i + 1..m {
                    self.labels[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return Some(&self.labels);
            }
        }
        None
    }

    /// Number of blocks in the current partition.
    pub fn blocks(&self) -> usize {
        self.prefix_max.last().map_or(0, |&top| top + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resource::OwnerId;

    fn set(members: &[usize]) -> OwnerSet {
        members.iter().map(|&m| OwnerId(m)).collect()
    }

    #[test]
    fn lex_subsets_of_three() {
        let got: Vec<_> = lex_subsets(set(&[0, 1, 2])).collect();
        assert_eq!(
            got,
            vec![
                set(&[0]),
                set(&[0, 1]),
                set(&[0, 1, 2]),
                set(&[0, 2]),
                set(&[1]),
                set(&[1, 2]),
                set(&[2])
            ]
        );
        assert_eq!(lex_subsets(OwnerSet::EMPTY).count(), 0);
    }

    #[test]
    fn lex_subsets_of_sparse_set_are_sorted_and_complete() {
        let base = set(&[1, 4, 5, 9]);
        let got: Vec<_> = lex_subsets(base).collect();
        assert_eq!(got.len(), 15);
        assert!(got.windows(2).all(|w| w[0] < w[1]));
        assert!(got.iter().all(|s| s.is_subset(base) && !s.is_empty()));
    }

    #[test]
    fn disjoint_pair_count() {
        // (3^n - 2^(n+1) + 1) / 2 unordered pairs of disjoint nonempty sets
        for n in 1..7usize {
            let expected = (3usize.pow(n as u32) + 1 - 2usize.pow(n as u32 + 1)) / 2;
            assert_eq!(disjoint_pairs(OwnerSet::first_n(n)).count(), expected);
        }
    }

    #[test]
    fn partition_counts_are_bell_numbers() {
        // Bell numbers from the triangle recurrence, independent of the generator.
        let mut bell = vec![1usize];
        let mut row = vec![1usize];
        for _ in 0..9 {
            let mut next = vec![*row.last().unwrap()];
            for value in &row {
                let last = *next.last().unwrap();
                next.push(last + value);
            }
            bell.push(next[0]);
            row = next;
        }
        for (m, &expected) in bell.iter().enumerate().skip(1) {
            let mut gen = RestrictedGrowth::new(m);
            let mut count = 0;
            while gen.advance().is_some() {
                count += 1;
            }
            assert_eq!(count, expected, "m = {m}");
        }
        assert!(RestrictedGrowth::new(0).advance().is_none());
    }

    #[test]
    fn restricted_growth_order() {
        let mut gen = RestrictedGrowth::new(3);
        let mut seen = Vec::new();
        while let Some(labels) = gen.advance() {
            seen.push(labels.to_vec());
        }
        assert_eq!(
            seen,
            vec![
                vec![0, 0, 0],
                vec![0, 0, 1],
                vec![0, 1, 0],
                vec![0, 1, 1],
                vec![0, 1, 2]
            ]
        );
    }
}
