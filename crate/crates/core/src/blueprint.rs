// SPDX-License-Identifier: Apache-2.0

//! Epoch simulator for a stake-based service: each epoch a committee of
//! pools is sampled by stake, and the epoch pot is paid to committee pools
//! in proportion to stake, scaled by each pool's performance factor.
//!
//! Committee sampling uses weighted sampling without replacement by random
//! keys: pool `i` with weight `w_i > 0` draws `u_i` uniform on `(0, 1]` and
//! gets key `u_i^(1/w_i)`; the `k` largest keys win. Keys are compared
//! through `ln(u_i) / w_i`, which orders identically. The generator is
//! ChaCha8 seeded with [`rand_chacha::ChaCha8Rng::seed_from_u64`], drawing one
//! `f64` per pool in input order. Floating point is confined to the keys;
//! every amount stays rational.

use crate::equilibrium::Instance;
use crate::resource::{OwnerId, PoolingConfiguration};
use crate::reward::split_profit;
use crate::tokenomics::{epoch_pot, EmissionSchedule, EpochPot};
use crate::{rational, Error, Rational, Result};
use num::{One, Signed, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub instance: Instance,
    pub configuration: PoolingConfiguration,
    /// Committee size.
    pub k: usize,
    pub epochs: u64,
    pub schedule: EmissionSchedule,
    pub treasury_rate: Rational,
    pub fees_per_epoch: Rational,
    /// Factor in `[0, 1]` per pool index; pools not listed perform fully.
    pub performance: BTreeMap<usize, Rational>,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.configuration.validate(&self.instance.universe)?;
        let pools = self.configuration.len();
        if self.k == 0 || self.k > pools {
            return Err(Error::InvalidScenario(format!(
                "committee size {} must lie in 1..={pools}",
                self.k
            )));
        }
        for (&pool, factor) in &self.performance {
            if pool >= pools {
                return Err(Error::InvalidScenario(format!(
                    "performance given for unknown pool {pool}"
                )));
            }
            if !rational::in_unit_interval(factor) {
                return Err(Error::InvalidScenario(format!(
                    "performance factor {} of pool {pool} outside [0, 1]",
                    rational::format(factor)
                )));
            }
        }
        if !rational::in_unit_interval(&self.treasury_rate) {
            return Err(Error::RateOutOfRange(rational::format(&self.treasury_rate)));
        }
        if self.fees_per_epoch.is_negative() {
            return Err(Error::NegativeAmount(rational::format(&self.fees_per_epoch)));
        }
        self.schedule.validate()
    }

    pub fn performance_of(&self, pool: usize) -> Rational {
        self.performance.get(&pool).cloned().unwrap_or_else(Rational::one)
    }

    /// Stake of every pool, by index.
    pub fn stakes(&self) -> Result<Vec<(usize, Rational)>> {
        self.configuration
            .pools
            .iter()
            .enumerate()
            .map(|(i, p)| Ok((i, self.instance.universe.measure(p.members)?)))
            .collect()
    }
}

/// Picks `k` distinct pools, favouring stake. Winners come back in
/// descending key order.
pub fn select_committee(stakes: &[(usize, Rational)], k: usize, seed: u64) -> Result<Vec<usize>> {
    let available = stakes.iter().filter(|(_, w)| w.is_positive()).count();
    if k > available {
        return Err(Error::KTooLarge { k, available });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keyed: Vec<(f64, usize, usize)> = Vec::with_capacity(available);
    for (position, (pool, weight)) in stakes.iter().enumerate() {
        let u = 1.0 - rng.gen::<f64>();
        if weight.is_positive() {
            keyed.push((u.ln() / rational::to_f64(weight), position, *pool));
        }
    }
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().take(k).map(|(_, _, pool)| pool).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochRecord {
    pub epoch: u64,
    pub committee: Vec<usize>,
    pub pot: EpochPot,
    /// Reward paid to each committee pool before costs.
    pub pool_rewards: BTreeMap<usize, Rational>,
    /// Withheld from underperforming pools; goes to the treasury.
    pub shortfall: Rational,
    /// Net payoff of every owner this epoch.
    pub owner_rewards: BTreeMap<OwnerId, Rational>,
}

impl EpochRecord {
    pub fn treasury_total(&self) -> Rational {
        &self.pot.treasury_cut + &self.shortfall
    }
}

/// Pays one epoch. Committee pools share the distributable pot by stake
/// relative to the committee, scaled by performance; each then covers its
/// cost and splits the remainder by its own strategy. Pools outside the
/// committee neither earn nor pay anything this epoch.
pub fn distribute_epoch(scenario: &Scenario, epoch: u64, committee: &[usize]) -> Result<EpochRecord> {
    let universe = &scenario.instance.universe;
    let pools = &scenario.configuration.pools;
    let mut seen = BTreeSet::new();
    for &index in committee {
        if index >= pools.len() || !seen.insert(index) {
            return Err(Error::InvalidScenario(format!("invalid committee {committee:?}")));
        }
    }
    if committee.is_empty() {
        return Err(Error::InvalidScenario("empty committee".into()));
    }

    let emission = scenario.schedule.emission(epoch)?;
    let pot = epoch_pot(&emission, &scenario.fees_per_epoch, &scenario.treasury_rate)?;
    let stakes: Vec<Rational> = committee
        .iter()
        .map(|&i| universe.measure(pools[i].members))
        .collect::<Result<_>>()?;
    let committee_stake: Rational = stakes.iter().sum();

    let mut pool_rewards = BTreeMap::new();
    let mut shortfall = Rational::zero();
    let mut owner_rewards: BTreeMap<OwnerId, Rational> = universe.owners().map(|o| (o, Rational::zero())).collect();
    for (&index, stake) in committee.iter().zip(&stakes) {
        let baseline = &pot.distributable * stake / &committee_stake;
        let reward = &baseline * scenario.performance_of(index);
        shortfall += &baseline - &reward;
        let pool = &pools[index];
        let profit = &reward - scenario.instance.cost.cost(universe, pool.members)?;
        owner_rewards.extend(split_profit(pool.members, &pool.splitting, universe, &profit)?);
        pool_rewards.insert(index, reward);
    }
    Ok(EpochRecord {
        epoch,
        committee: committee.to_vec(),
        pot,
        pool_rewards,
        shortfall,
        owner_rewards,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationRun {
    pub records: Vec<EpochRecord>,
    pub cumulative_owner_rewards: BTreeMap<OwnerId, Rational>,
}

/// Runs every epoch in order. Epoch `e` samples its committee with the
/// `e`-th output of a ChaCha8 stream seeded by the scenario seed.
pub fn run(scenario: &Scenario) -> Result<SimulationRun> {
    scenario.validate()?;
    let stakes = scenario.stakes()?;
    let mut seeds = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut cumulative: BTreeMap<OwnerId, Rational> = scenario
        .instance
        .universe
        .owners()
        .map(|o| (o, Rational::zero()))
        .collect();
    let mut records = Vec::new();
    for epoch in 0..scenario.epochs {
        let committee = select_committee(&stakes, scenario.k, seeds.next_u64())?;
        let record = distribute_epoch(scenario, epoch, &committee)?;
        for (owner, amount) in &record.owner_rewards {
            *cumulative.get_mut(owner).expect("known owner") += amount;
        }
        records.push(record);
    }
    Ok(SimulationRun {
        records,
        cumulative_owner_rewards: cumulative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::OperatorLinearCost;
    use crate::rational::{int, ratio};
    use crate::resource::{OwnerSet, ResourceUniverse};
    use crate::reward::RewardModel;

    fn scenario(pools: usize, k: usize) -> Scenario {
        let universe = ResourceUniverse::uniform(pools).unwrap();
        let configuration = PoolingConfiguration::solo(&universe);
        Scenario {
            instance: Instance::new(
                universe,
                OperatorLinearCost::free(pools).into(),
                RewardModel::linear(int(1)).unwrap(),
            )
            .unwrap(),
            configuration,
            k,
            epochs: 10,
            schedule: EmissionSchedule::Halving {
                initial: int(50),
                interval: 10,
            },
            treasury_rate: int(0),
            fees_per_epoch: int(0),
            performance: BTreeMap::new(),
            seed: 11,
        }
    }

    fn stakes(weights: &[Rational]) -> Vec<(usize, Rational)> {
        weights.iter().cloned().enumerate().collect()
    }

    #[test]
    fn full_committee_takes_everyone() {
        let s = stakes(&[ratio(1, 2), ratio(3, 10), ratio(1, 5)]);
        for seed in 0..20 {
            let mut got = select_committee(&s, 3, seed).unwrap();
            got.sort();
            assert_eq!(got, vec![0, 1, 2]);
        }
    }

    #[test]
    fn zero_stake_is_never_selected() {
        let s = stakes(&[ratio(1, 2), int(0), ratio(1, 2)]);
        for seed in 0..500 {
            assert!(!select_committee(&s, 2, seed).unwrap().contains(&1));
        }
        assert_eq!(select_committee(&s, 3, 0), Err(Error::KTooLarge { k: 3, available: 2 }));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let s = stakes(&[ratio(1, 4), ratio(1, 4), ratio(1, 2)]);
        assert_eq!(
            select_committee(&s, 2, 99).unwrap(),
            select_committee(&s, 2, 99).unwrap()
        );
    }

    #[test]
    fn single_pool_takes_the_whole_pot() {
        let mut sc = scenario(1, 1);
        sc.fees_per_epoch = int(20);
        let record = distribute_epoch(&sc, 0, &[0]).unwrap();
        assert_eq!(record.pool_rewards[&0], int(70));
        assert_eq!(record.owner_rewards[&OwnerId(0)], int(70));
    }

    #[test]
    fn performance_scales_rewards() {
        let mut sc = scenario(2, 2);
        sc.schedule = EmissionSchedule::Constant { rate: int(100) };
        sc.performance.insert(1, ratio(1, 2));
        let record = distribute_epoch(&sc, 0, &[0, 1]).unwrap();
        assert_eq!(record.pool_rewards[&0], int(50));
        assert_eq!(record.pool_rewards[&1], int(25));
        assert_eq!(record.shortfall, int(25));
        assert_eq!(record.treasury_total(), int(25));

        sc.performance.insert(1, int(0));
        let idle = distribute_epoch(&sc, 0, &[0, 1]).unwrap();
        assert_eq!(idle.pool_rewards[&1], int(0));
        assert_eq!(idle.shortfall, int(50));
    }

    #[test]
    fn costs_come_out_of_pool_rewards() {
        let universe = ResourceUniverse::uniform(2).unwrap();
        let mut sc = scenario(2, 1);
        sc.instance.cost = OperatorLinearCost::new(vec![int(3), int(5)], vec![int(0), int(0)])
            .unwrap()
            .into();
        sc.configuration = PoolingConfiguration::from_sets([universe.all()]);
        sc.schedule = EmissionSchedule::Constant { rate: int(10) };
        let record = distribute_epoch(&sc, 0, &[0]).unwrap();
        // profit 10 - 3 split evenly
        assert_eq!(record.owner_rewards[&OwnerId(1)], ratio(7, 2));
    }

    #[test]
    fn rejects_bad_committees() {
        let sc = scenario(3, 1);
        assert!(distribute_epoch(&sc, 0, &[0, 0]).is_err());
        assert!(distribute_epoch(&sc, 0, &[7]).is_err());
        assert!(distribute_epoch(&sc, 0, &[]).is_err());
    }

    #[test]
    fn runs() {
        let mut sc = scenario(3, 2);
        sc.epochs = 0;
        assert!(run(&sc).unwrap().records.is_empty());

        sc.epochs = 10;
        let first = run(&sc).unwrap();
        assert_eq!(first.records.len(), 10);
        assert!(first.records.iter().all(|r| r.pot.emission == int(50)));
        assert_eq!(first, run(&sc).unwrap());
        let total: Rational = first.cumulative_owner_rewards.values().sum();
        assert_eq!(total, int(500));
    }

    #[test]
    fn scenario_validation() {
        let mut sc = scenario(2, 3);
        assert!(sc.validate().is_err());
        sc.k = 1;
        sc.performance.insert(0, ratio(3, 2));
        assert!(sc.validate().is_err());
        sc.performance.clear();
        sc.performance.insert(5, int(1));
        assert!(sc.validate().is_err());
        sc.performance.clear();
        sc.configuration = PoolingConfiguration::from_sets([OwnerSet::singleton(OwnerId(0))]);
        sc.k = 1;
        assert!(sc.validate().is_ok());
    }
}
