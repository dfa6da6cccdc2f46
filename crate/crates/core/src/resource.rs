// SPDX-License-Identifier: Apache-2.0

//! The resource universe at owner granularity, its measure, and pooling
//! configurations.
//!
//! Each owner is a single element of the universe carrying its exact share
//! of all resources. Sets of owners ("owner joins") are the only sets on
//! which costs and rewards are ever evaluated.

use crate::reward::SplittingStrategy;
use crate::{rational, Error, Rational, Result};
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// Owner sets are bitmasks, which bounds the universe size.
pub const MAX_OWNERS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OwnerId(pub usize);

impl fmt::Display for OwnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A set of owners, used for pools, coalitions and subsets alike.
///
/// Ordering is lexicographic on the ascending member lists, so
/// `{0} < {0,1} < {0,1,2} < {0,2} < {1}`. Every "first" or "smallest"
/// witness in this crate refers to this order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct OwnerSet(u64);

impl OwnerSet {
    pub const EMPTY: OwnerSet = OwnerSet(0);

    pub fn from_bits(bits: u64) -> Self {
        OwnerSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(owner: OwnerId) -> Self {
        assert!(owner.0 < MAX_OWNERS, "owner {owner} out of range");
        OwnerSet(1 << owner.0)
    }

    /// The set `{0, …, n-1}`.
    pub fn first_n(n: usize) -> Self {
        assert!(n <= MAX_OWNERS);
        if n == MAX_OWNERS {
            OwnerSet(u64::MAX)
        } else {
            OwnerSet((1u64 << n) - 1)
        }
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, owner: OwnerId) -> bool {
        owner.0 < MAX_OWNERS && self.0 & (1 << owner.0) != 0
    }

    pub fn insert(&mut self, owner: OwnerId) {
        *self = self.union(OwnerSet::singleton(owner));
    }

    pub fn remove(&mut self, owner: OwnerId) {
        if owner.0 < MAX_OWNERS {
            self.0 &= !(1 << owner.0);
        }
    }

    pub fn union(self, other: OwnerSet) -> OwnerSet {
        OwnerSet(self.0 | other.0)
    }

    pub fn intersection(self, other: OwnerSet) -> OwnerSet {
        OwnerSet(self.0 & other.0)
    }

    pub fn difference(self, other: OwnerSet) -> OwnerSet {
        OwnerSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: OwnerSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: OwnerSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = OwnerId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let next = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(OwnerId(next))
        })
    }

    pub fn members(self) -> Vec<OwnerId> {
        self.iter().collect()
    }
}

impl FromIterator<OwnerId> for OwnerSet {
    fn from_iter<I: IntoIterator<Item = OwnerId>>(iter: I) -> Self {
        iter.into_iter()
            .fold(OwnerSet::EMPTY, |set, owner| set.union(OwnerSet::singleton(owner)))
    }
}

impl Ord for OwnerSet {
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = self.0 ^ other.0;
        if diff == 0 {
            return Ordering::Equal;
        }
        // Below the lowest differing owner both lists agree. The set holding
        // that owner is smaller unless the other list ends there.
        let pivot = diff.trailing_zeros();
        let self_holds = self.0 & (1 << pivot) != 0;
        let lacking = if self_holds { other.0 } else { self.0 };
        let lacking_continues = pivot < 63 && lacking >> (pivot + 1) != 0;
        if self_holds == lacking_continues {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

impl PartialOrd for OwnerSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for OwnerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for OwnerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, owner) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{owner}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for OwnerSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for OwnerSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let owners = Vec::<usize>::deserialize(deserializer)?;
        let mut set = OwnerSet::EMPTY;
        for owner in owners {
            if owner >= MAX_OWNERS {
                return Err(D::Error::custom(format!("owner {owner} out of range")));
            }
            if set.contains(OwnerId(owner)) {
                return Err(D::Error::custom(format!("owner {owner} listed twice")));
            }
            set.insert(OwnerId(owner));
        }
        Ok(set)
    }
}

/// Owners with their exact resource shares. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceUniverse {
    weights: Vec<Rational>,
}

impl ResourceUniverse {
    /// Weights must be positive and sum to exactly one; nothing is normalized.
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        if weights.len() > MAX_OWNERS {
            return Err(Error::TooManyOwners(weights.len()));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_positive()) {
            return Err(Error::NonPositiveWeight(rational::format(bad)));
        }
        let total: Rational = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::WeightsDoNotSumToOne(rational::format(&total)));
        }
        Ok(ResourceUniverse { weights })
    }

    /// `n` owners holding `1/n` each.
    pub fn uniform(n: usize) -> Result<Self> {
        let share = Rational::new(1.into(), n.max(1).into());
        Self::new(vec![share; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, owner: OwnerId) -> Result<&Rational> {
        self.weights.get(owner.0).ok_or(Error::UnknownOwner(owner))
    }

    pub fn owners(&self) -> impl Iterator<Item = OwnerId> {
        (0..self.len()).map(OwnerId)
    }

    pub fn all(&self) -> OwnerSet {
        OwnerSet::first_n(self.len())
    }

    pub fn check_members(&self, set: OwnerSet) -> Result<()> {
        match set.difference(self.all()).iter().next() {
            Some(stray) => Err(Error::UnknownOwner(stray)),
            None => Ok(()),
        }
    }

    /// The measure σ of an owner join: the sum of member weights.
    pub fn measure(&self, set: OwnerSet) -> Result<Rational> {
        self.check_members(set)?;
        Ok(set.iter().map(|o| &self.weights[o.0]).sum())
    }

    /// Measure of every subset of the universe, indexed by bitmask. Only
    /// sensible for small universes.
    pub(crate) fn measure_table(&self) -> Vec<Rational> {
        let n = self.len();
        let mut table = vec![Rational::zero(); 1 << n];
        for mask in 1usize..1 << n {
            let low = mask.trailing_zeros() as usize;
            table[mask] = &table[mask & (mask - 1)] + &self.weights[low];
        }
        table
    }
}

/// One pool: a nonempty owner set and how its profit is shared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pool {
    pub members: OwnerSet,
    #[serde(default)]
    pub splitting: SplittingStrategy,
}

impl Pool {
    pub fn fair(members: OwnerSet) -> Self {
        Pool {
            members,
            splitting: SplittingStrategy::FairShare,
        }
    }
}

/// Mutually disjoint pools. Owners outside every pool are inactive.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolingConfiguration {
    pub pools: Vec<Pool>,
}

impl PoolingConfiguration {
    pub fn new(pools: Vec<Pool>) -> Self {
        PoolingConfiguration { pools }
    }

    /// Every owner in one fair-share pool.
    pub fn centralized(universe: &ResourceUniverse) -> Self {
        Self::new(vec![Pool::fair(universe.all())])
    }

    /// Every owner alone in a fair-share pool.
    pub fn solo(universe: &ResourceUniverse) -> Self {
        Self::new(universe.owners().map(|o| Pool::fair(OwnerSet::singleton(o))).collect())
    }

    pub fn from_sets(sets: impl IntoIterator<Item = OwnerSet>) -> Self {
        Self::new(sets.into_iter().map(Pool::fair).collect())
    }

    pub fn pool_of(&self, owner: OwnerId) -> Option<usize> {
        self.pools.iter().position(|p| p.members.contains(owner))
    }

    pub fn active(&self) -> OwnerSet {
        self.pools.iter().fold(OwnerSet::EMPTY, |acc, p| acc.union(p.members))
    }

    pub fn len(&self) -> usize {
        self.pools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }

    /// Pools must be nonempty, pairwise disjoint and drawn from the universe.
    /// Splitting strategies must also fit their pool.
    pub fn validate(&self, universe: &ResourceUniverse) -> Result<()> {
        for (index, pool) in self.pools.iter().enumerate() {
            if pool.members.is_empty() {
                return Err(Error::EmptyPool(index));
            }
            universe.check_members(pool.members)?;
            pool.splitting.validate(pool.members)?;
        }
        for (second, pool) in self.pools.iter().enumerate() {
            for (first, earlier) in self.pools[..second].iter().enumerate() {
                if let Some(owner) = earlier.members.intersection(pool.members).iter().next() {
                    return Err(Error::OverlappingPools { owner, first, second });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn set(members: &[usize]) -> OwnerSet {
        members.iter().map(|&m| OwnerId(m)).collect()
    }

    fn worked() -> ResourceUniverse {
        ResourceUniverse::new(vec![ratio(1, 2), ratio(1, 3), ratio(1, 6)]).unwrap()
    }

    #[test]
    fn builds_universes() {
        assert_eq!(worked().len(), 3);
        let single = ResourceUniverse::new(vec![int(1)]).unwrap();
        assert_eq!(single.measure(single.all()).unwrap(), int(1));
    }

    #[test]
    fn rejects_bad_weights() {
        assert_eq!(
            ResourceUniverse::new(vec![ratio(1, 2); 3]),
            Err(Error::WeightsDoNotSumToOne("3/2".into()))
        );
        assert!(matches!(
            ResourceUniverse::new(vec![int(0), int(1)]),
            Err(Error::NonPositiveWeight(_))
        ));
        assert!(matches!(
            ResourceUniverse::new(vec![ratio(3, 2), ratio(-1, 2)]),
            Err(Error::NonPositiveWeight(_))
        ));
        assert_eq!(ResourceUniverse::new(vec![]), Err(Error::EmptyUniverse));
    }

    #[test]
    fn measures_owner_joins() {
        let u = worked();
        assert_eq!(u.measure(set(&[0, 1])).unwrap(), ratio(5, 6));
        assert_eq!(u.measure(OwnerSet::EMPTY).unwrap(), int(0));
        assert_eq!(u.measure(set(&[0, 1, 2])).unwrap(), int(1));
        assert_eq!(u.measure(set(&[3])), Err(Error::UnknownOwner(OwnerId(3))));
    }

    #[test]
    fn validates_configurations() {
        let u = worked();
        assert!(PoolingConfiguration::from_sets([set(&[0]), set(&[1, 2])])
            .validate(&u)
            .is_ok());
        assert_eq!(
            PoolingConfiguration::from_sets([set(&[0, 1]), set(&[1, 2])]).validate(&u),
            Err(Error::OverlappingPools {
                owner: OwnerId(1),
                first: 0,
                second: 1
            })
        );
        assert!(PoolingConfiguration::centralized(&u).validate(&u).is_ok());
        assert_eq!(
            PoolingConfiguration::from_sets([set(&[0]), OwnerSet::EMPTY]).validate(&u),
            Err(Error::EmptyPool(1))
        );
        assert_eq!(
            PoolingConfiguration::from_sets([set(&[0, 5])]).validate(&u),
            Err(Error::UnknownOwner(OwnerId(5)))
        );
        // partial coverage leaves owner 2 inactive
        assert!(PoolingConfiguration::from_sets([set(&[0, 1])]).validate(&u).is_ok());
    }

    #[test]
    fn lexicographic_order() {
        let mut sets = vec![
            set(&[2]),
            set(&[1, 2]),
            set(&[0, 2]),
            set(&[1]),
            set(&[0, 1, 2]),
            set(&[0, 1]),
            set(&[0]),
        ];
        sets.sort();
        assert_eq!(
            sets,
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
        assert!(OwnerSet::EMPTY < set(&[0]));
    }

    #[test]
    fn measure_table_matches_direct_sums() {
        let u = worked();
        let table = u.measure_table();
        for mask in 0..8u64 {
            assert_eq!(table[mask as usize], u.measure(OwnerSet::from_bits(mask)).unwrap());
        }
    }

    fn universe_strategy() -> impl Strategy<Value = ResourceUniverse> {
        prop::collection::vec(1i64..20, 1..8).prop_map(|parts| {
            let total: i64 = parts.iter().sum();
            ResourceUniverse::new(parts.iter().map(|&p| ratio(p, total)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn measure_is_modular_and_monotone(u in universe_strategy(), a in any::<u64>(), b in any::<u64>()) {
            let all = u.all().bits();
            let (s, t) = (OwnerSet::from_bits(a & all), OwnerSet::from_bits(b & all));
            let m = |x| u.measure(x).unwrap();
            prop_assert_eq!(m(s.union(t)), m(s) + m(t) - m(s.intersection(t)));
            prop_assert!(m(s.intersection(t)) <= m(s));
            prop_assert!(m(s) <= m(s.union(t)));
        }

        #[test]
        fn order_matches_member_lists(a in 0u64..256, b in 0u64..256) {
            let (s, t) = (OwnerSet::from_bits(a), OwnerSet::from_bits(b));
            prop_assert_eq!(s.cmp(&t), s.members().cmp(&t.members()));
        }
    }
}
