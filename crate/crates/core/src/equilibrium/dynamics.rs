// SPDX-License-Identifier: Apache-2.0

//! Round-robin best-response dynamics over pooling configurations.

use super::Instance;
use crate::resource::{OwnerId, OwnerSet, Pool, PoolingConfiguration};
use crate::reward::{split_rewards, SplittingStrategy};
use crate::{Error, Rational, Result};
use num::Zero;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Which unilateral moves owners may make.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoveRules {
    pub join: bool,
    pub leave: bool,
    pub create: bool,
}

impl Default for MoveRules {
    fn default() -> Self {
        MoveRules {
            join: true,
            leave: true,
            create: true,
        }
    }
}

/// Pool indices refer to the configuration before the move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    CreateSoloPool,
    JoinPool(usize),
    LeavePool,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::CreateSoloPool => f.write_str("create"),
            Move::JoinPool(pool) => write!(f, "join:{pool}"),
            Move::LeavePool => f.write_str("leave"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicsStep {
    /// 1-based round in which the move happened.
    pub iteration: usize,
    pub mover: OwnerId,
    pub mv: Move,
    pub utility_before: Rational,
    pub utility_after: Rational,
    /// Configuration after the move.
    pub configuration: PoolingConfiguration,
    pub utilities: BTreeMap<OwnerId, Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicsTrace {
    /// Scan order of owners within each round.
    pub order: Vec<OwnerId>,
    pub steps: Vec<DynamicsStep>,
    pub converged: bool,
    /// Rounds executed.
    pub iterations: usize,
    pub final_configuration: PoolingConfiguration,
}

fn pool_payoff(inst: &Instance, pool: &Pool, owner: OwnerId) -> Result<Rational> {
    let shares = split_rewards(pool.members, &pool.splitting, &inst.universe, &inst.cost, &inst.reward)?;
    Ok(shares[&owner].clone())
}

fn owner_utility(inst: &Instance, cfg: &PoolingConfiguration, owner: OwnerId) -> Result<Rational> {
    match cfg.pool_of(owner) {
        Some(index) => pool_payoff(inst, &cfg.pools[index], owner),
        None => Ok(Rational::zero()),
    }
}

fn apply_move(cfg: &PoolingConfiguration, owner: OwnerId, mv: Move) -> PoolingConfiguration {
    let mut pools = cfg.pools.clone();
    if let Some(current) = cfg.pool_of(owner) {
        let pool = &mut pools[current];
        pool.members.remove(owner);
        // an operator walking away takes its margin along
        if matches!(pool.splitting, SplittingStrategy::OperatorMargin { operator, .. } if operator == owner) {
            pool.splitting = SplittingStrategy::FairShare;
        }
    }
    match mv {
        Move::CreateSoloPool => pools.push(Pool::fair(OwnerSet::singleton(owner))),
        Move::JoinPool(index) => pools[index].members.insert(owner),
        Move::LeavePool => {}
    }
    pools.retain(|p| !p.members.is_empty());
    PoolingConfiguration::new(pools)
}

/// Candidate moves in tie-break order: create, joins by pool index, leave.
fn candidate_moves(cfg: &PoolingConfiguration, owner: OwnerId, rules: &MoveRules) -> Vec<Move> {
    let current = cfg.pool_of(owner);
    let mut moves = Vec::new();
    let already_solo = current.is_some_and(|i| cfg.pools[i].members == OwnerSet::singleton(owner));
    if rules.create && !already_solo {
        moves.push(Move::CreateSoloPool);
    }
    if rules.join {
        moves.extend((0..cfg.len()).filter(|&i| Some(i) != current).map(Move::JoinPool));
    }
    if rules.leave && current.is_some() {
        moves.push(Move::LeavePool);
    }
    moves
}

/// Owners take turns in a fixed order (a seeded shuffle of the owners).
/// On its turn an owner makes the move that maximizes its own utility,
/// provided it strictly beats staying put; equal best moves resolve in
/// candidate order. The run has converged once a full round passes without
/// any move.
pub fn best_response_dynamics(
    inst: &Instance,
    initial: &PoolingConfiguration,
    rules: &MoveRules,
    max_iter: usize,
    seed: u64,
) -> Result<DynamicsTrace> {
    if max_iter == 0 {
        return Err(Error::InvalidScenario("dynamics need at least one iteration".into()));
    }
    initial.validate(&inst.universe)?;

    let mut order: Vec<OwnerId> = inst.universe.owners().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut cfg = initial.clone();
    let mut steps = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut moved = false;
        for &owner in &order {
            let before = owner_utility(inst, &cfg, owner)?;
            let mut best: Option<(Move, PoolingConfiguration, Rational)> = None;
            for mv in candidate_moves(&cfg, owner, rules) {
                let next = apply_move(&cfg, owner, mv);
                let value = owner_utility(inst, &next, owner)?;
                if value > before && best.as_ref().is_none_or(|(_, _, top)| value > *top) {
                    best = Some((mv, next, value));
                }
            }
            if let Some((mv, next, after)) = best {
                cfg = next;
                moved = true;
                steps.push(DynamicsStep {
                    iteration: iterations,
                    mover: owner,
                    mv,
                    utility_before: before,
                    utility_after: after,
                    configuration: cfg.clone(),
                    utilities: super::participant_utilities(inst, &cfg)?,
                });
            }
        }
        if !moved {
            converged = true;
            break;
        }
    }
    Ok(DynamicsTrace {
        order,
        steps,
        converged,
        iterations,
        final_configuration: cfg,
    })
}
