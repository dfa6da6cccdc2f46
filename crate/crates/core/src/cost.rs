// SPDX-License-Identifier: Apache-2.0

//! Costs of owner joins.
//!
//! A cost is only defined on nonempty unions of whole owners. The
//! operator-linear family charges every member its marginal cost per unit
//! of measure and the pool a single fixed cost, paid by its cheapest
//! operator:
//!
//! ```text
//! c(P) = Σ_{i ∈ P} d_i · x_i + min_{i ∈ P} c_i
//! ```

use crate::enumerate::{disjoint_pairs, lex_subsets, Limits};
use crate::resource::{OwnerId, OwnerSet, ResourceUniverse};
use crate::reward::RewardModel;
use crate::{rational, Error, Rational, Result};
use num::{Signed, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorLinearCost {
    fixed: Vec<Rational>,
    marginal: Vec<Rational>,
}

impl OperatorLinearCost {
    pub fn new(fixed: Vec<Rational>, marginal: Vec<Rational>) -> Result<Self> {
        if fixed.len() != marginal.len() {
            return Err(Error::InvalidCostModel(format!(
                "{} fixed costs but {} marginal costs",
                fixed.len(),
                marginal.len()
            )));
        }
        if fixed.is_empty() {
            return Err(Error::InvalidCostModel("no owners".into()));
        }
        if let Some(bad) = fixed.iter().chain(&marginal).find(|v| v.is_negative()) {
            return Err(Error::InvalidCostModel(format!(
                "negative cost parameter {}",
                rational::format(bad)
            )));
        }
        Ok(OperatorLinearCost { fixed, marginal })
    }

    /// All-zero costs for `n` owners.
    pub fn free(n: usize) -> Self {
        OperatorLinearCost {
            fixed: vec![Rational::zero(); n],
            marginal: vec![Rational::zero(); n],
        }
    }

    pub fn fixed(&self) -> &[Rational] {
        &self.fixed
    }

    pub fn marginal(&self) -> &[Rational] {
        &self.marginal
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    /// Largest spread of marginal costs, `max d_i - min d_i`.
    pub fn delta(&self) -> Rational {
        let max = self.marginal.iter().max().expect("nonempty");
        let min = self.marginal.iter().min().expect("nonempty");
        max - min
    }

    /// Sufficient condition for the whole universe to be cost efficient:
    /// the marginal-cost spread does not exceed the cheapest fixed cost.
    pub fn satisfies_prop1_condition(&self) -> bool {
        self.delta() <= *self.fixed.iter().min().expect("nonempty")
    }

    /// The member that pays the fixed cost of `pool`: the lowest-index
    /// owner with the smallest fixed cost. Reporting only.
    pub fn operator_of(&self, pool: OwnerSet) -> Option<OwnerId> {
        pool.iter()
            .filter(|o| o.0 < self.len())
            .min_by(|a, b| self.fixed[a.0].cmp(&self.fixed[b.0]).then(a.cmp(b)))
    }

    fn evaluate(&self, universe: &ResourceUniverse, pool: OwnerSet) -> Result<Rational> {
        if pool.is_empty() {
            return Err(Error::EmptySet);
        }
        universe.check_members(pool)?;
        if self.len() != universe.len() {
            return Err(Error::InvalidCostModel(format!(
                "cost parameters for {} owners, universe has {}",
                self.len(),
                universe.len()
            )));
        }
        let weights = universe.weights();
        let variable: Rational = pool.iter().map(|o| &self.marginal[o.0] * &weights[o.0]).sum();
        let fixed = pool.iter().map(|o| &self.fixed[o.0]).min().expect("nonempty");
        Ok(variable + fixed)
    }
}

/// Explicit costs per owner join. Missing joins have no defined cost.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TabulatedCost {
    table: BTreeMap<OwnerSet, Rational>,
}

impl TabulatedCost {
    pub fn new(table: BTreeMap<OwnerSet, Rational>) -> Result<Self> {
        if table.contains_key(&OwnerSet::EMPTY) {
            return Err(Error::InvalidCostModel("cost of the empty set".into()));
        }
        Ok(TabulatedCost { table })
    }

    /// Zero cost on every join of `n` owners.
    pub fn zero(n: usize) -> Self {
        let table = lex_subsets(OwnerSet::first_n(n))
            .map(|s| (s, Rational::zero()))
            .collect();
        TabulatedCost { table }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&OwnerSet, &Rational)> {
        self.table.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CostModel {
    OperatorLinear(OperatorLinearCost),
    Tabulated(TabulatedCost),
}

impl From<OperatorLinearCost> for CostModel {
    fn from(model: OperatorLinearCost) -> Self {
        CostModel::OperatorLinear(model)
    }
}

impl From<TabulatedCost> for CostModel {
    fn from(model: TabulatedCost) -> Self {
        CostModel::Tabulated(model)
    }
}

impl CostModel {
    /// Cost of a nonempty owner join.
    pub fn cost(&self, universe: &ResourceUniverse, pool: OwnerSet) -> Result<Rational> {
        match self {
            CostModel::OperatorLinear(model) => model.evaluate(universe, pool),
            CostModel::Tabulated(model) => {
                if pool.is_empty() {
                    return Err(Error::EmptySet);
                }
                universe.check_members(pool)?;
                model
                    .table
                    .get(&pool)
                    .cloned()
                    .ok_or_else(|| Error::UndefinedCost(pool.to_string()))
            }
        }
    }

    pub fn as_operator_linear(&self) -> Option<&OperatorLinearCost> {
        match self {
            CostModel::OperatorLinear(model) => Some(model),
            CostModel::Tabulated(_) => None,
        }
    }
}

/// A pool is viable when its reward covers its cost.
pub fn is_viable(pool: OwnerSet, cost: &CostModel, reward: &RewardModel, universe: &ResourceUniverse) -> Result<bool> {
    let measure = universe.measure(pool)?;
    let cost = cost.cost(universe, pool)?;
    Ok(reward.evaluate(&measure)? >= cost)
}

/// Outcome of a cost-efficiency scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CostEfficiency {
    Efficient,
    /// The lexicographically first subset with a strictly lower cost per
    /// unit of measure.
    Violated(OwnerSet),
}

impl CostEfficiency {
    pub fn is_efficient(&self) -> bool {
        matches!(self, CostEfficiency::Efficient)
    }
}

/// Checks `c(P)/σ(P) <= c(S)/σ(S)` for every nonempty `S ⊆ P` by full
/// enumeration. Never short-circuits on any sufficient condition.
pub fn is_cost_efficient(
    pool: OwnerSet,
    cost: &CostModel,
    universe: &ResourceUniverse,
    limits: &Limits,
) -> Result<CostEfficiency> {
    if pool.is_empty() {
        return Err(Error::EmptySet);
    }
    Limits::check(limits.subsets, pool.len())?;
    let pool_cost = cost.cost(universe, pool)?;
    let pool_measure = universe.measure(pool)?;
    for subset in lex_subsets(pool) {
        let sub_cost = cost.cost(universe, subset)?;
        let sub_measure = universe.measure(subset)?;
        // cross-multiplied: both measures are positive
        if &pool_cost * &sub_measure > &sub_cost * &pool_measure {
            return Ok(CostEfficiency::Violated(subset));
        }
    }
    Ok(CostEfficiency::Efficient)
}

/// Checks `c(A ∪ B) <= c(A) + c(B)` for all disjoint nonempty joins and
/// returns the first violating pair.
pub fn check_economies_of_scale(
    cost: &CostModel,
    universe: &ResourceUniverse,
    limits: &Limits,
) -> Result<Option<(OwnerSet, OwnerSet)>> {
    Limits::check(limits.pairs, universe.len())?;
    let mut memo: BTreeMap<OwnerSet, Rational> = BTreeMap::new();
    let mut lookup = |set: OwnerSet| -> Result<Rational> {
        if let Some(v) = memo.get(&set) {
            return Ok(v.clone());
        }
        let v = cost.cost(universe, set)?;
        memo.insert(set, v.clone());
        Ok(v)
    };
    for (a, b) in disjoint_pairs(universe.all()) {
        let joined = lookup(a.union(b))?;
        if joined > lookup(a)? + lookup(b)? {
            return Ok(Some((a, b)));
        }
    }
    Ok(None)
}
