// SPDX-License-Identifier: Apache-2.0

//! Member utilities, strong Nash verification by exhaustive coalition
//! deviation, and best-response dynamics.
//!
//! A deviation is modelled as exit-and-regroup: a coalition of owners leaves
//! its current pools and re-forms as any set partition of itself, with some
//! members possibly going inactive. Rewards depend on measure only, so the
//! pools left behind cannot affect what the deviators earn. New pools split
//! their profit fairly.
//!
//! Coalitions are visited in lexicographic order and, for each, partitions
//! in restricted-growth order, so the reported certificate is always the
//! same one regardless of how the scan is parallelized.

mod dynamics;

pub use dynamics::{best_response_dynamics, DynamicsStep, DynamicsTrace, Move, MoveRules};

use crate::cost::CostModel;
use crate::enumerate::{lex_subsets, Limits, RestrictedGrowth};
use crate::resource::{OwnerId, OwnerSet, PoolingConfiguration, ResourceUniverse};
use crate::reward::{split_rewards, RewardModel};
use crate::{Error, Rational, Result};
use num::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A universe with its cost and reward functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub universe: ResourceUniverse,
    pub cost: CostModel,
    pub reward: RewardModel,
}

impl Instance {
    pub fn new(universe: ResourceUniverse, cost: CostModel, reward: RewardModel) -> Result<Self> {
        if let Some(model) = cost.as_operator_linear() {
            if model.len() != universe.len() {
                return Err(Error::InvalidCostModel(format!(
                    "cost parameters for {} owners, universe has {}",
                    model.len(),
                    universe.len()
                )));
            }
        }
        Ok(Instance { universe, cost, reward })
    }

    /// Reward minus cost of a nonempty pool.
    pub fn profit(&self, pool: OwnerSet) -> Result<Rational> {
        let measure = self.universe.measure(pool)?;
        Ok(self.reward.evaluate(&measure)? - self.cost.cost(&self.universe, pool)?)
    }
}

/// Which coalition deviations count as profitable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ImprovementMode {
    /// Every coalition member gains strictly.
    #[default]
    #[serde(rename = "strict")]
    AllStrictlyBetter,
    /// Nobody loses and somebody gains.
    #[serde(rename = "pareto")]
    ParetoImprovement,
}

impl ImprovementMode {
    pub fn improves<'a>(self, pairs: impl IntoIterator<Item = (&'a Rational, &'a Rational)>) -> bool {
        let mut any_gain = false;
        for (old, new) in pairs {
            match self {
                ImprovementMode::AllStrictlyBetter if new <= old => return false,
                ImprovementMode::ParetoImprovement if new < old => return false,
                _ => any_gain |= new > old,
            }
        }
        any_gain
    }
}

/// Payoff of every owner under `cfg`; inactive owners get zero.
pub fn participant_utilities(inst: &Instance, cfg: &PoolingConfiguration) -> Result<BTreeMap<OwnerId, Rational>> {
    cfg.validate(&inst.universe)?;
    let mut utilities: BTreeMap<OwnerId, Rational> = inst.universe.owners().map(|o| (o, Rational::zero())).collect();
    for pool in &cfg.pools {
        let shares = split_rewards(pool.members, &pool.splitting, &inst.universe, &inst.cost, &inst.reward)?;
        utilities.extend(shares);
    }
    Ok(utilities)
}

/// A profitable deviation: `coalition` leaves its pools and re-forms as
/// `partition`, with `inactive` members dropping out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationCertificate {
    pub coalition: OwnerSet,
    pub partition: Vec<OwnerSet>,
    pub inactive: OwnerSet,
    pub old_utilities: BTreeMap<OwnerId, Rational>,
    pub new_utilities: BTreeMap<OwnerId, Rational>,
}

impl DeviationCertificate {
    /// The configuration the deviators end up in, with everybody else kept
    /// in their remaining pools.
    pub fn apply(&self, cfg: &PoolingConfiguration) -> PoolingConfiguration {
        let mut pools: Vec<_> = cfg
            .pools
            .iter()
            .filter_map(|pool| {
                let members = pool.members.difference(self.coalition);
                if members.is_empty() {
                    return None;
                }
                let mut kept = pool.clone();
                if kept.splitting.validate(members).is_err() {
                    kept.splitting = Default::default();
                }
                kept.members = members;
                Some(kept)
            })
            .collect();
        pools.extend(self.partition.iter().copied().map(crate::resource::Pool::fair));
        PoolingConfiguration::new(pools)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    StrongNash,
    NotStrongNash(Box<DeviationCertificate>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumReport {
    pub verdict: Verdict,
    /// Coalitions examined up to and including the witness, or all of them.
    pub coalitions_checked: u64,
    pub mode: ImprovementMode,
}

impl EquilibriumReport {
    pub fn is_strong_nash(&self) -> bool {
        matches!(self.verdict, Verdict::StrongNash)
    }

    pub fn certificate(&self) -> Option<&DeviationCertificate> {
        match &self.verdict {
            Verdict::StrongNash => None,
            Verdict::NotStrongNash(cert) => Some(cert),
        }
    }
}

/// Result of scanning one coalition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalitionOutcome {
    pub coalition: OwnerSet,
    pub partitions_checked: u64,
    pub certificate: Option<DeviationCertificate>,
}

struct DeviationSearch<'a> {
    weights: &'a [Rational],
    /// Profit per unit of measure of every owner join, by bitmask.
    unit_profit: Vec<Rational>,
    old: BTreeMap<OwnerId, Rational>,
    mode: ImprovementMode,
}

impl<'a> DeviationSearch<'a> {
    fn new(inst: &'a Instance, cfg: &PoolingConfiguration, mode: ImprovementMode, limits: &Limits) -> Result<Self> {
        Limits::check(limits.coalitions, inst.universe.len())?;
        let old = participant_utilities(inst, cfg)?;
        let measures = inst.universe.measure_table();
        let mut unit_profit = vec![Rational::zero(); measures.len()];
        for pool in lex_subsets(inst.universe.all()) {
            let index = pool.bits() as usize;
            unit_profit[index] = inst.profit(pool)? / &measures[index];
        }
        Ok(DeviationSearch {
            weights: inst.universe.weights(),
            unit_profit,
            old,
            mode,
        })
    }

    fn coalitions(&self) -> Vec<OwnerSet> {
        lex_subsets(OwnerSet::first_n(self.weights.len())).collect()
    }

    /// Every way `coalition` can regroup. Element 0 of each restricted-growth
    /// string is a marker for inactivity: members labelled like it drop out.
    fn scan(&self, coalition: OwnerSet) -> CoalitionOutcome {
        let members = coalition.members();
        let old: Vec<&Rational> = members.iter().map(|o| &self.old[o]).collect();
        let mut new = vec![Rational::zero(); members.len()];
        let mut blocks = vec![OwnerSet::EMPTY; members.len() + 1];
        let mut partitions = RestrictedGrowth::new(members.len() + 1);
        let mut checked = 0u64;
        while let Some(labels) = partitions.advance() {
            checked += 1;
            blocks.iter_mut().for_each(|b| *b = OwnerSet::EMPTY);
            for (member, &label) in members.iter().zip(&labels[1..]) {
                blocks[label].insert(*member);
            }
            for (slot, (member, &label)) in members.iter().zip(&labels[1..]).enumerate() {
                new[slot] = if label == 0 {
                    Rational::zero()
                } else {
                    &self.unit_profit[blocks[label].bits() as usize] * &self.weights[member.0]
                };
            }
            if self.mode.improves(old.iter().copied().zip(&new)) {
                let used = labels.iter().max().copied().unwrap_or(0);
                let certificate = DeviationCertificate {
                    coalition,
                    partition: blocks[1..=used].to_vec(),
                    inactive: blocks[0],
                    old_utilities: members.iter().zip(&old).map(|(m, v)| (*m, (*v).clone())).collect(),
                    new_utilities: members.iter().copied().zip(new.iter().cloned()).collect(),
                };
                return CoalitionOutcome {
                    coalition,
                    partitions_checked: checked,
                    certificate: Some(certificate),
                };
            }
        }
        CoalitionOutcome {
            coalition,
            partitions_checked: checked,
            certificate: None,
        }
    }
}

/// The first profitable coalition deviation from `cfg`, if any.
pub fn find_profitable_deviation(
    inst: &Instance,
    cfg: &PoolingConfiguration,
    mode: ImprovementMode,
    limits: &Limits,
) -> Result<Option<DeviationCertificate>> {
    Ok(is_strong_nash(inst, cfg, mode, limits)?.certificate().cloned())
}

pub fn is_strong_nash(
    inst: &Instance,
    cfg: &PoolingConfiguration,
    mode: ImprovementMode,
    limits: &Limits,
) -> Result<EquilibriumReport> {
    let search = DeviationSearch::new(inst, cfg, mode, limits)?;
    let coalitions = search.coalitions();
    let found = first_certificate(&search, &coalitions);
    let (verdict, coalitions_checked) = match found {
        Some((index, cert)) => (Verdict::NotStrongNash(Box::new(cert)), index as u64 + 1),
        None => (Verdict::StrongNash, coalitions.len() as u64),
    };
    Ok(EquilibriumReport {
        verdict,
        coalitions_checked,
        mode,
    })
}

#[cfg(feature = "parallel")]
fn first_certificate(search: &DeviationSearch<'_>, coalitions: &[OwnerSet]) -> Option<(usize, DeviationCertificate)> {
    use rayon::prelude::*;
    coalitions
        .par_iter()
        .enumerate()
        .find_map_first(|(i, c)| search.scan(*c).certificate.map(|cert| (i, cert)))
}

#[cfg(not(feature = "parallel"))]
fn first_certificate(search: &DeviationSearch<'_>, coalitions: &[OwnerSet]) -> Option<(usize, DeviationCertificate)> {
    coalitions
        .iter()
        .enumerate()
        .find_map(|(i, c)| search.scan(*c).certificate.map(|cert| (i, cert)))
}

/// Scans every coalition without stopping at the first witness.
pub fn scan_coalitions(
    inst: &Instance,
    cfg: &PoolingConfiguration,
    mode: ImprovementMode,
    limits: &Limits,
) -> Result<Vec<CoalitionOutcome>> {
    let search = DeviationSearch::new(inst, cfg, mode, limits)?;
    let coalitions = search.coalitions();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok(coalitions.par_iter().map(|c| search.scan(*c)).collect())
    }
    #[cfg(not(feature = "parallel"))]
    Ok(coalitions.iter().map(|c| search.scan(*c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{OperatorLinearCost, TabulatedCost};
    use crate::rational::{int, ratio};
    use crate::resource::Pool;

    fn set(members: &[usize]) -> OwnerSet {
        members.iter().map(|&m| OwnerId(m)).collect()
    }

    fn ints(values: &[i64]) -> Vec<Rational> {
        values.iter().map(|&v| int(v)).collect()
    }

    fn instance(weights: Vec<Rational>, fixed: &[i64], marginal: &[i64], gamma: i64) -> Instance {
        let u = ResourceUniverse::new(weights).unwrap();
        let c = OperatorLinearCost::new(ints(fixed), ints(marginal)).unwrap();
        Instance::new(u, c.into(), RewardModel::linear(int(gamma)).unwrap()).unwrap()
    }

    fn worked(gamma: i64) -> Instance {
        instance(
            vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)],
            &[5, 3, 4],
            &[1, 2, 1],
            gamma,
        )
    }

    fn counterexample() -> Instance {
        instance(vec![ratio(1, 2), ratio(1, 2)], &[1, 1], &[0, 5], 8)
    }

    #[test]
    fn utilities_of_worked_instance() {
        let inst = worked(10);
        let central = participant_utilities(&inst, &PoolingConfiguration::centralized(&inst.universe)).unwrap();
        assert_eq!(
            central.values().cloned().collect::<Vec<_>>(),
            vec![ratio(23, 8), ratio(23, 16), ratio(23, 16)]
        );

        let partial = PoolingConfiguration::from_sets([set(&[0, 1])]);
        assert_eq!(participant_utilities(&inst, &partial).unwrap()[&OwnerId(2)], int(0));

        let solo = participant_utilities(&inst, &PoolingConfiguration::solo(&inst.universe)).unwrap();
        assert_eq!(solo[&OwnerId(0)], ratio(-1, 2));
    }

    #[test]
    fn improvement_modes() {
        let (a, b, c) = (int(1), int(2), int(1));
        let strict = ImprovementMode::AllStrictlyBetter;
        let pareto = ImprovementMode::ParetoImprovement;
        assert!(strict.improves([(&a, &b)]));
        assert!(!strict.improves([(&a, &b), (&a, &c)]));
        assert!(pareto.improves([(&a, &b), (&a, &c)]));
        assert!(!pareto.improves([(&a, &c)]));
        assert!(!pareto.improves([(&b, &a), (&a, &b)]));
    }

    #[test]
    fn worked_instance_is_strong_nash() {
        let inst = worked(10);
        let cfg = PoolingConfiguration::centralized(&inst.universe);
        for mode in [ImprovementMode::AllStrictlyBetter, ImprovementMode::ParetoImprovement] {
            let report = is_strong_nash(&inst, &cfg, mode, &Limits::default()).unwrap();
            assert!(report.is_strong_nash(), "{mode:?}");
            assert_eq!(report.coalitions_checked, 7);
        }
    }

    #[test]
    fn counterexample_certificate() {
        let inst = counterexample();
        let cfg = PoolingConfiguration::centralized(&inst.universe);
        let cert = find_profitable_deviation(&inst, &cfg, ImprovementMode::AllStrictlyBetter, &Limits::default())
            .unwrap()
            .unwrap();
        assert_eq!(cert.coalition, set(&[0]));
        assert_eq!(cert.partition, vec![set(&[0])]);
        assert_eq!(cert.inactive, OwnerSet::EMPTY);
        assert_eq!(cert.old_utilities[&OwnerId(0)], ratio(9, 4));
        assert_eq!(cert.new_utilities[&OwnerId(0)], int(3));
    }

    #[test]
    fn certificates_replay_against_utilities() {
        let inst = counterexample();
        let cfg = PoolingConfiguration::centralized(&inst.universe);
        let cert = find_profitable_deviation(&inst, &cfg, ImprovementMode::AllStrictlyBetter, &Limits::default())
            .unwrap()
            .unwrap();
        let before = participant_utilities(&inst, &cfg).unwrap();
        let after = participant_utilities(&inst, &cert.apply(&cfg)).unwrap();
        for (owner, value) in &cert.old_utilities {
            assert_eq!(&before[owner], value);
        }
        for (owner, value) in &cert.new_utilities {
            assert_eq!(&after[owner], value);
        }
    }

    #[test]
    fn single_owner_universe_is_stable() {
        let inst = instance(vec![int(1)], &[1], &[0], 3);
        let cfg = PoolingConfiguration::centralized(&inst.universe);
        let report = is_strong_nash(&inst, &cfg, ImprovementMode::AllStrictlyBetter, &Limits::default()).unwrap();
        assert!(report.is_strong_nash());
        assert_eq!(report.coalitions_checked, 1);
    }

    #[test]
    fn non_viable_centralization_dissolves() {
        let inst = worked(4);
        let cfg = PoolingConfiguration::centralized(&inst.universe);
        let report = is_strong_nash(&inst, &cfg, ImprovementMode::ParetoImprovement, &Limits::default()).unwrap();
        let cert = report.certificate().expect("negative payoffs invite exit");
        assert_eq!(cert.coalition, set(&[0]));
        assert_eq!(cert.inactive, set(&[0]));
        assert!(cert.partition.is_empty());
    }

    #[test]
    fn symmetric_pos_instance_is_stable() {
        let inst = instance(vec![ratio(1, 2), ratio(1, 2)], &[1, 1], &[0, 0], 10);
        let cfg = PoolingConfiguration::centralized(&inst.universe);
        assert!(
            is_strong_nash(&inst, &cfg, ImprovementMode::AllStrictlyBetter, &Limits::default())
                .unwrap()
                .is_strong_nash()
        );
    }

    #[test]
    fn solo_pools_can_merge_profitably() {
        // two owners each paying a fixed cost of 1; joining halves it
        let inst = instance(vec![ratio(1, 2), ratio(1, 2)], &[1, 1], &[0, 0], 10);
        let cfg = PoolingConfiguration::solo(&inst.universe);
        let cert = find_profitable_deviation(&inst, &cfg, ImprovementMode::AllStrictlyBetter, &Limits::default())
            .unwrap()
            .unwrap();
        assert_eq!(cert.coalition, set(&[0, 1]));
        assert_eq!(cert.partition, vec![set(&[0, 1])]);
    }

    #[test]
    fn enumeration_limit() {
        let inst = Instance::new(
            ResourceUniverse::uniform(11).unwrap(),
            OperatorLinearCost::free(11).into(),
            RewardModel::linear(int(1)).unwrap(),
        )
        .unwrap();
        let cfg = PoolingConfiguration::centralized(&inst.universe);
        assert_eq!(
            is_strong_nash(&inst, &cfg, ImprovementMode::AllStrictlyBetter, &Limits::default()),
            Err(Error::EnumerationLimitExceeded { owners: 11, limit: 10 })
        );
    }

    #[test]
    fn scan_matches_first_certificate() {
        let inst = counterexample();
        let cfg = PoolingConfiguration::centralized(&inst.universe);
        let outcomes = scan_coalitions(&inst, &cfg, ImprovementMode::AllStrictlyBetter, &Limits::default()).unwrap();
        assert_eq!(outcomes.len(), 3);
        let first = outcomes.iter().find_map(|o| o.certificate.clone()).unwrap();
        let direct = find_profitable_deviation(&inst, &cfg, ImprovementMode::AllStrictlyBetter, &Limits::default())
            .unwrap()
            .unwrap();
        assert_eq!(first, direct);
        // Bell(2) + Bell(3) ways to regroup {0} and {0,1} with inactivity
        assert_eq!(outcomes[1].partitions_checked, 5);
    }

    #[test]
    fn tabulated_costs_with_operator_margin() {
        let u = ResourceUniverse::uniform(2).unwrap();
        let table = [(set(&[0]), int(1)), (set(&[1]), int(1)), (set(&[0, 1]), int(1))]
            .into_iter()
            .collect();
        let inst = Instance::new(
            u,
            TabulatedCost::new(table).unwrap().into(),
            RewardModel::linear(int(4)).unwrap(),
        )
        .unwrap();
        // profit 3, operator 1 takes 2/3 of it: utilities 1/2 and 5/2
        let cfg = PoolingConfiguration::new(vec![Pool {
            members: set(&[0, 1]),
            splitting: crate::reward::SplittingStrategy::OperatorMargin {
                operator: OwnerId(1),
                margin: ratio(2, 3),
            },
        }]);
        let utilities = participant_utilities(&inst, &cfg).unwrap();
        assert_eq!(utilities[&OwnerId(0)], ratio(1, 2));
        // owner 0 alone earns 2 - 1 = 1 > 1/2
        let cert = find_profitable_deviation(&inst, &cfg, ImprovementMode::AllStrictlyBetter, &Limits::default())
            .unwrap()
            .unwrap();
        assert_eq!(cert.coalition, set(&[0]));
        assert_eq!(cert.new_utilities[&OwnerId(0)], int(1));
    }
}
