// SPDX-License-Identifier: Apache-2.0

//! Rewards as functions of pool measure, the reward axioms, and how a pool
//! shares its profit among members.
//!
//! Every reward model here is a function of measure alone, so two pools of
//! equal measure always earn the same reward. The axiom checkers therefore
//! only need the measures of owner joins, which lets them share work between
//! joins of equal measure.

use crate::enumerate::{disjoint_pairs, Limits};
use crate::resource::{OwnerId, OwnerSet, ResourceUniverse};
use crate::{cost::CostModel, rational, Error, Rational, Result};
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RewardFamily {
    /// `γ·x`
    Linear { gamma: Rational },
    /// `γ·min(x, β)`: rewards stop growing once a pool saturates at `β`.
    Capped { gamma: Rational, beta: Rational },
    /// `γ·x^e`
    PowerConvex { gamma: Rational, exponent: u32 },
    /// Exact values at listed measures; undefined in between.
    Tabulated { grid: Vec<(Rational, Rational)> },
}

/// A validated reward function of measure with `ρ(0) = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewardModel {
    family: RewardFamily,
}

impl RewardModel {
    pub fn new(family: RewardFamily) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidRewardModel(msg));
        match &family {
            RewardFamily::Linear { gamma }
            | RewardFamily::Capped { gamma, .. }
            | RewardFamily::PowerConvex { gamma, .. }
                if gamma.is_negative() =>
            {
                return invalid(format!("gamma {} is negative", rational::format(gamma)));
            }
            RewardFamily::Capped { beta, .. } if !beta.is_positive() || *beta > Rational::one() => {
                return invalid(format!("beta {} outside (0, 1]", rational::format(beta)));
            }
            RewardFamily::PowerConvex { exponent, .. } if *exponent < 2 => {
                return invalid(format!("exponent {exponent} is below 2"));
            }
            RewardFamily::Tabulated { grid } => {
                match grid.first() {
                    Some((x, v)) if x.is_zero() && v.is_zero() => {}
                    _ => return invalid("table must start at measure 0 with value 0".into()),
                }
                if grid.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return invalid("table measures must be strictly increasing".into());
                }
                if grid.last().is_some_and(|(x, _)| *x > Rational::one()) {
                    return invalid("table measures must lie in [0, 1]".into());
                }
            }
            _ => {}
        }
        Ok(RewardModel { family })
    }

    pub fn linear(gamma: Rational) -> Result<Self> {
        Self::new(RewardFamily::Linear { gamma })
    }

    pub fn capped(gamma: Rational, beta: Rational) -> Result<Self> {
        Self::new(RewardFamily::Capped { gamma, beta })
    }

    pub fn power_convex(gamma: Rational, exponent: u32) -> Result<Self> {
        Self::new(RewardFamily::PowerConvex { gamma, exponent })
    }

    pub fn tabulated(grid: Vec<(Rational, Rational)>) -> Result<Self> {
        Self::new(RewardFamily::Tabulated { grid })
    }

    pub fn family(&self) -> &RewardFamily {
        &self.family
    }

    /// Reward of any pool with measure `x`.
    pub fn evaluate(&self, x: &Rational) -> Result<Rational> {
        if !rational::in_unit_interval(x) {
            return Err(Error::MeasureOutOfRange(rational::format(x)));
        }
        Ok(match &self.family {
            RewardFamily::Linear { gamma } => gamma * x,
            RewardFamily::Capped { gamma, beta } => gamma * rational::min(x, beta),
            RewardFamily::PowerConvex { gamma, exponent } => gamma * num::pow(x.clone(), *exponent as usize),
            RewardFamily::Tabulated { grid } => match grid.binary_search_by(|(m, _)| m.cmp(x)) {
                Ok(i) => grid[i].1.clone(),
                Err(_) => return Err(Error::NotOnGrid(rational::format(x))),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axiom {
    SybilResilience,
    Egalitarianism,
}

/// A concrete violation of a reward axiom.
///
/// For Sybil resilience `sets = [A, B]` and the violated inequality is
/// `ρ(A ∪ B) >= ρ(A) + ρ(B)`. For egalitarianism `sets = [A ∪ B, A, B]` and
/// the violated inequality is `ρ(A ∪ B) <= ρ(A) + ρ(B)`. Either way `lhs`
/// is the joint reward and `rhs` the separate sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomWitness {
    pub axiom: Axiom,
    pub sets: Vec<OwnerSet>,
    pub measures: Vec<Rational>,
    pub lhs: Rational,
    pub rhs: Rational,
}

pub fn check_sybil_resilience(
    model: &RewardModel,
    universe: &ResourceUniverse,
    limits: &Limits,
) -> Result<Option<AxiomWitness>> {
    scan_disjoint_joins(model, universe, limits, Axiom::SybilResilience)
}

/// Fungibility reduces the three-set statement to `ρ(A ∪ B) <= ρ(A) + ρ(B)`
/// over disjoint joins `A`, `B`: any pool of the same measure as `A ∪ B`
/// earns exactly `ρ(A ∪ B)`.
pub fn check_egalitarianism(
    model: &RewardModel,
    universe: &ResourceUniverse,
    limits: &Limits,
) -> Result<Option<AxiomWitness>> {
    scan_disjoint_joins(model, universe, limits, Axiom::Egalitarianism)
}

fn scan_disjoint_joins(
    model: &RewardModel,
    universe: &ResourceUniverse,
    limits: &Limits,
    axiom: Axiom,
) -> Result<Option<AxiomWitness>> {
    Limits::check(limits.pairs, universe.len())?;
    let measures = universe.measure_table();

    // One reward evaluation per distinct measure.
    let mut class_of_measure: HashMap<&Rational, usize> = HashMap::new();
    let mut rewards: Vec<Rational> = Vec::new();
    let mut class = Vec::with_capacity(measures.len());
    for measure in &measures {
        let next = rewards.len();
        let id = *class_of_measure.entry(measure).or_insert(next);
        if id == next {
            rewards.push(model.evaluate(measure)?);
        }
        class.push(id);
    }

    let mut verdicts: HashMap<(usize, usize), bool> = HashMap::new();
    for (a, b) in disjoint_pairs(universe.all()) {
        let (ca, cb) = (class[a.bits() as usize], class[b.bits() as usize]);
        let cu = class[a.union(b).bits() as usize];
        let holds = *verdicts.entry((ca.min(cb), ca.max(cb))).or_insert_with(|| {
            let separate = &rewards[ca] + &rewards[cb];
            match axiom {
                Axiom::SybilResilience => rewards[cu] >= separate,
                Axiom::Egalitarianism => rewards[cu] <= separate,
            }
        });
        if !holds {
            let joined = a.union(b);
            let sets = match axiom {
                Axiom::SybilResilience => vec![a, b],
                Axiom::Egalitarianism => vec![joined, a, b],
            };
            let measures = sets.iter().map(|s| measures[s.bits() as usize].clone()).collect();
            return Ok(Some(AxiomWitness {
                axiom,
                sets,
                measures,
                lhs: rewards[cu].clone(),
                rhs: &rewards[ca] + &rewards[cb],
            }));
        }
    }
    Ok(None)
}

/// First grid point where `ρ(k/N) != k·ρ(1/N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CauchyWitness {
    pub k: u64,
    pub value: Rational,
    pub expected: Rational,
}

/// Checks additivity along the grid `k/N`, `k = 0..=N`. Any reward that is
/// both super- and subadditive must pass.
pub fn check_cauchy_linearity(model: &RewardModel, denominator: u64) -> Result<Option<CauchyWitness>> {
    if denominator == 0 {
        return Err(Error::InvalidRewardModel("grid denominator must be positive".into()));
    }
    let n = Rational::from_integer(denominator.into());
    let unit = model.evaluate(&(Rational::one() / &n))?;
    for k in 0..=denominator {
        let step = Rational::from_integer(k.into());
        let value = model.evaluate(&(&step / &n))?;
        let expected = &step * &unit;
        if value != expected {
            return Ok(Some(CauchyWitness { k, value, expected }));
        }
    }
    Ok(None)
}

/// How a pool divides its profit `ρ(P) - c(P)` among members.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SplittingStrategy {
    /// Each member receives profit in proportion to its measure.
    #[default]
    FairShare,
    /// The operator takes `margin` of the profit first; the rest is shared
    /// fairly among all members, operator included.
    OperatorMargin {
        operator: OwnerId,
        #[serde(with = "rational::serde_text")]
        margin: Rational,
    },
}

impl SplittingStrategy {
    pub fn validate(&self, pool: OwnerSet) -> Result<()> {
        match self {
            SplittingStrategy::FairShare => Ok(()),
            SplittingStrategy::OperatorMargin { operator, margin } => {
                if !rational::in_unit_interval(margin) {
                    return Err(Error::InvalidSplitting(format!(
                        "margin {} outside [0, 1]",
                        rational::format(margin)
                    )));
                }
                if !pool.contains(*operator) {
                    return Err(Error::InvalidSplitting(format!(
                        "operator {operator} is not a member of pool {pool}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Splits a (possibly negative) profit among the members of `pool`.
/// Shares always sum to `profit` exactly.
pub fn split_profit(
    pool: OwnerSet,
    strategy: &SplittingStrategy,
    universe: &ResourceUniverse,
    profit: &Rational,
) -> Result<BTreeMap<OwnerId, Rational>> {
    if pool.is_empty() {
        return Err(Error::EmptySet);
    }
    strategy.validate(pool)?;
    let pool_measure = universe.measure(pool)?;
    let (operator_cut, shared) = match strategy {
        SplittingStrategy::FairShare => (None, profit.clone()),
        SplittingStrategy::OperatorMargin { operator, margin } => {
            let cut = margin * profit;
            let rest = profit - &cut;
            (Some((*operator, cut)), rest)
        }
    };
    let per_unit = shared / pool_measure;
    let mut shares: BTreeMap<OwnerId, Rational> =
        pool.iter().map(|o| (o, &per_unit * &universe.weights()[o.0])).collect();
    if let Some((operator, cut)) = operator_cut {
        *shares.get_mut(&operator).expect("operator is a member") += cut;
    }
    Ok(shares)
}

/// Member payoffs of `pool`: its reward minus its cost, split by `strategy`.
pub fn split_rewards(
    pool: OwnerSet,
    strategy: &SplittingStrategy,
    universe: &ResourceUniverse,
    cost: &CostModel,
    reward: &RewardModel,
) -> Result<BTreeMap<OwnerId, Rational>> {
    if pool.is_empty() {
        return Err(Error::EmptySet);
    }
    let profit = reward.evaluate(&universe.measure(pool)?)? - cost.cost(universe, pool)?;
    split_profit(pool, strategy, universe, &profit)
}
