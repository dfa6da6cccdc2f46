// SPDX-License-Identifier: Apache-2.0

//! Browser bindings for the playground page in `www/`.
//!
//! Every entry point takes plain strings and numbers and returns a JSON
//! document. Failures come back as `{"error": "..."}` so the page never has
//! to catch exceptions.

use pooling_core::blueprint::select_committee;
use pooling_core::cost::{is_viable, OperatorLinearCost};
use pooling_core::enumerate::Limits;
use pooling_core::equilibrium::{best_response_dynamics, is_strong_nash, ImprovementMode, Instance, MoveRules};
use pooling_core::resource::{OwnerSet, PoolingConfiguration, ResourceUniverse};
use pooling_core::reward::RewardModel;
use pooling_core::scenario::ScenarioFile;
use pooling_core::{rational, Rational};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Demo scans stay small enough for a browser tab.
const MAX_OWNERS: usize = 10;

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(value) => value.to_string(),
        Err(message) => json!({ "error": message }).to_string(),
    }
}

fn parse_list(text: &str) -> Result<Vec<Rational>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| rational::parse(s).map_err(|e| e.to_string()))
        .collect()
}

fn set_json(set: OwnerSet) -> Value {
    json!(set.iter().map(|o| o.0).collect::<Vec<_>>())
}

fn pools_json(cfg: &PoolingConfiguration) -> Value {
    json!(cfg.pools.iter().map(|p| set_json(p.members)).collect::<Vec<_>>())
}

/// Strong Nash check of a scenario document's configuration.
#[wasm_bindgen]
pub fn check_equilibrium(scenario: &str, pareto: bool) -> String {
    respond(equilibrium(scenario, pareto))
}

fn equilibrium(scenario: &str, pareto: bool) -> Result<Value, String> {
    let file = ScenarioFile::parse(scenario).map_err(|e| e.to_string())?;
    let inst = file.instance().map_err(|e| e.to_string())?;
    let cfg = file.configuration().map_err(|e| e.to_string())?;
    let mode = if pareto {
        ImprovementMode::ParetoImprovement
    } else {
        ImprovementMode::AllStrictlyBetter
    };
    let report = is_strong_nash(&inst, &cfg, mode, &Limits::uniform(MAX_OWNERS)).map_err(|e| e.to_string())?;

    let mut pools = Vec::new();
    for pool in &cfg.pools {
        let measure = inst.universe.measure(pool.members).map_err(|e| e.to_string())?;
        pools.push(json!({
            "members": set_json(pool.members),
            "measure": rational::format(&measure),
            "profit": rational::format(&inst.profit(pool.members).map_err(|e| e.to_string())?),
            "viable": is_viable(pool.members, &inst.cost, &inst.reward, &inst.universe).map_err(|e| e.to_string())?,
        }));
    }
    let certificate = report.certificate().map(|cert| {
        json!({
            "coalition": set_json(cert.coalition),
            "partition": cert.partition.iter().map(|s| set_json(*s)).collect::<Vec<_>>(),
            "inactive": set_json(cert.inactive),
            "old": cert.old_utilities.values().map(rational::format).collect::<Vec<_>>(),
            "new": cert.new_utilities.values().map(rational::format).collect::<Vec<_>>(),
        })
    });
    Ok(json!({
        "strong_nash": report.is_strong_nash(),
        "coalitions_checked": report.coalitions_checked,
        "pools": pools,
        "certificate": certificate,
    }))
}

/// Best-response dynamics from all-solo under a capped reward, with the same
/// fixed cost for every owner and no marginal cost.
#[wasm_bindgen]
pub fn run_dynamics(weights: &str, fixed_cost: &str, gamma: &str, beta: &str, max_iter: u32, seed: u32) -> String {
    respond(dynamics(weights, fixed_cost, gamma, beta, max_iter, seed))
}

fn dynamics(
    weights: &str,
    fixed_cost: &str,
    gamma: &str,
    beta: &str,
    max_iter: u32,
    seed: u32,
) -> Result<Value, String> {
    let parse = |s: &str| rational::parse(s.trim()).map_err(|e| e.to_string());
    let universe = ResourceUniverse::new(parse_list(weights)?).map_err(|e| e.to_string())?;
    let n = universe.len();
    let cost = OperatorLinearCost::new(vec![parse(fixed_cost)?; n], vec![Rational::from_integer(0.into()); n])
        .map_err(|e| e.to_string())?;
    let reward = RewardModel::capped(parse(gamma)?, parse(beta)?).map_err(|e| e.to_string())?;
    let inst = Instance::new(universe, cost.into(), reward).map_err(|e| e.to_string())?;
    let solo = PoolingConfiguration::solo(&inst.universe);
    let trace = best_response_dynamics(&inst, &solo, &MoveRules::default(), max_iter as usize, seed.into())
        .map_err(|e| e.to_string())?;

    let steps: Vec<Value> = trace
        .steps
        .iter()
        .map(|step| {
            json!({
                "iteration": step.iteration,
                "mover": step.mover.0,
                "move": step.mv.to_string(),
                "before": rational::format(&step.utility_before),
                "after": rational::format(&step.utility_after),
                "pools": pools_json(&step.configuration),
            })
        })
        .collect();
    Ok(json!({
        "order": trace.order.iter().map(|o| o.0).collect::<Vec<_>>(),
        "steps": steps,
        "converged": trace.converged,
        "iterations": trace.iterations,
        "final": pools_json(&trace.final_configuration),
    }))
}

/// Empirical inclusion frequency of each pool over `trials` committee draws
/// with seeds `seed, seed + 1, ...`.
#[wasm_bindgen]
pub fn sample_committee(weights: &str, k: u32, trials: u32, seed: u32) -> String {
    respond(committee(weights, k, trials, seed))
}

fn committee(weights: &str, k: u32, trials: u32, seed: u32) -> Result<Value, String> {
    if trials == 0 {
        return Err("need at least one trial".into());
    }
    let stakes: Vec<(usize, Rational)> = parse_list(weights)?.into_iter().enumerate().collect();
    if stakes.is_empty() {
        return Err("no weights given".into());
    }
    let total: Rational = stakes.iter().map(|(_, w)| w.clone()).sum();
    let mut hits = vec![0u32; stakes.len()];
    for trial in 0..trials {
        let chosen =
            select_committee(&stakes, k as usize, u64::from(seed) + u64::from(trial)).map_err(|e| e.to_string())?;
        for pool in chosen {
            hits[pool] += 1;
        }
    }
    Ok(json!({
        "share": stakes.iter().map(|(_, w)| rational::to_f64(&(w / &total))).collect::<Vec<_>>(),
        "inclusion": hits.iter().map(|&h| f64::from(h) / f64::from(trials)).collect::<Vec<_>>(),
    }))
}
