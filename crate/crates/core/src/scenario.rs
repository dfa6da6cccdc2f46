// SPDX-License-Identifier: Apache-2.0

//! The scenario document: a JSON file describing a universe, its cost and
//! reward models, and optional configuration, emission, simulation and
//! dynamics settings.
//!
//! Every rational is written as a `"p/q"` or integer string. Unknown fields
//! are rejected.
//!
//! ```json
//! {
//!   "universe": ["1/2", "1/4", "1/4"],
//!   "cost": { "kind": "operator_linear", "fixed": ["5", "3", "4"], "marginal": ["1", "2", "1"] },
//!   "reward": { "kind": "linear", "gamma": "10" },
//!   "configuration": { "pools": [ { "members": [0, 1, 2] } ] },
//!   "mode": "strict"
//! }
//! ```

use crate::blueprint::Scenario;
use crate::cost::{CostModel, OperatorLinearCost, TabulatedCost};
use crate::equilibrium::{ImprovementMode, Instance, MoveRules};
use crate::rational::{self, serde_text};
use crate::resource::{OwnerSet, PoolingConfiguration, ResourceUniverse};
use crate::reward::{RewardFamily, RewardModel};
use crate::tokenomics::EmissionSchedule;
use crate::{Error, Rational, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostEntry {
    pub set: OwnerSet,
    #[serde(with = "serde_text")]
    pub cost: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    /// No cost for any pool.
    Zero,
    OperatorLinear {
        #[serde(with = "serde_text::vec")]
        fixed: Vec<Rational>,
        #[serde(with = "serde_text::vec")]
        marginal: Vec<Rational>,
    },
    Tabulated {
        table: Vec<CostEntry>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    #[serde(with = "serde_text")]
    pub measure: Rational,
    #[serde(with = "serde_text")]
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardSpec {
    Linear {
        #[serde(with = "serde_text")]
        gamma: Rational,
    },
    Capped {
        #[serde(with = "serde_text")]
        gamma: Rational,
        #[serde(with = "serde_text")]
        beta: Rational,
    },
    PowerConvex {
        #[serde(with = "serde_text")]
        gamma: Rational,
        exponent: u32,
    },
    Tabulated {
        grid: Vec<GridPoint>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlueprintSpec {
    pub k: usize,
    pub epochs: u64,
    #[serde(with = "serde_text")]
    pub treasury_rate: Rational,
    #[serde(with = "serde_text")]
    pub fees_per_epoch: Rational,
    #[serde(default, with = "serde_text::map", skip_serializing_if = "BTreeMap::is_empty")]
    pub performance: BTreeMap<usize, Rational>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub moves: MoveRules,
    /// Starting configuration; defaults to the scenario configuration, or
    /// every owner solo when there is none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<PoolingConfiguration>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(with = "serde_text::vec")]
    pub universe: Vec<Rational>,
    pub cost: CostSpec,
    pub reward: RewardSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub configuration: Option<PoolingConfiguration>,
    #[serde(default)]
    pub mode: ImprovementMode,
    /// Grid for the additivity check; defaults to the least common
    /// denominator of the universe weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cauchy_denominator: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<EmissionSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blueprint: Option<BlueprintSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSpec>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn universe(&self) -> Result<ResourceUniverse> {
        ResourceUniverse::new(self.universe.clone())
    }

    pub fn cost_model(&self) -> Result<CostModel> {
        Ok(match &self.cost {
            CostSpec::Zero => OperatorLinearCost::free(self.universe.len()).into(),
            CostSpec::OperatorLinear { fixed, marginal } => {
                OperatorLinearCost::new(fixed.clone(), marginal.clone())?.into()
            }
            CostSpec::Tabulated { table } => {
                let mut entries = BTreeMap::new();
                for entry in table {
                    if entries.insert(entry.set, entry.cost.clone()).is_some() {
                        return Err(Error::InvalidCostModel(format!(
                            "owner set {} tabulated twice",
                            entry.set
                        )));
                    }
                }
                TabulatedCost::new(entries)?.into()
            }
        })
    }

    pub fn reward_model(&self) -> Result<RewardModel> {
        RewardModel::new(match &self.reward {
            RewardSpec::Linear { gamma } => RewardFamily::Linear { gamma: gamma.clone() },
            RewardSpec::Capped { gamma, beta } => RewardFamily::Capped {
                gamma: gamma.clone(),
                beta: beta.clone(),
            },
            RewardSpec::PowerConvex { gamma, exponent } => RewardFamily::PowerConvex {
                gamma: gamma.clone(),
                exponent: *exponent,
            },
            RewardSpec::Tabulated { grid } => RewardFamily::Tabulated {
                grid: grid.iter().map(|p| (p.measure.clone(), p.value.clone())).collect(),
            },
        })
    }

    pub fn instance(&self) -> Result<Instance> {
        Instance::new(self.universe()?, self.cost_model()?, self.reward_model()?)
    }

    pub fn configuration(&self) -> Result<PoolingConfiguration> {
        let cfg = self
            .configuration
            .clone()
            .ok_or_else(|| Error::InvalidScenario("no configuration given".into()))?;
        cfg.validate(&self.universe()?)?;
        Ok(cfg)
    }

    pub fn cauchy_denominator(&self) -> Result<u64> {
        match self.cauchy_denominator {
            Some(0) => Err(Error::InvalidScenario("cauchy_denominator must be positive".into())),
            Some(n) => Ok(n),
            None => u64::try_from(rational::lcm_of_denominators(&self.universe))
                .map_err(|_| Error::InvalidScenario("weight denominators too large for a grid".into())),
        }
    }

    pub fn schedule(&self) -> Result<EmissionSchedule> {
        let schedule = self
            .schedule
            .clone()
            .ok_or_else(|| Error::InvalidScenario("no emission schedule given".into()))?;
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn blueprint(&self) -> Result<Scenario> {
        let spec = self
            .blueprint
            .as_ref()
            .ok_or_else(|| Error::InvalidScenario("no blueprint section given".into()))?;
        let scenario = Scenario {
            instance: self.instance()?,
            configuration: self.configuration()?,
            k: spec.k,
            epochs: spec.epochs,
            schedule: self.schedule()?,
            treasury_rate: spec.treasury_rate.clone(),
            fees_per_epoch: spec.fees_per_epoch.clone(),
            performance: spec.performance.clone(),
            seed: spec.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn dynamics(&self) -> Result<&DynamicsSpec> {
        self.dynamics
            .as_ref()
            .ok_or_else(|| Error::InvalidScenario("no dynamics section given".into()))
    }

    pub fn dynamics_start(&self) -> Result<PoolingConfiguration> {
        let universe = self.universe()?;
        let start = match (self.dynamics()?.initial.clone(), &self.configuration) {
            (Some(cfg), _) => cfg,
            (None, Some(cfg)) => cfg.clone(),
            (None, None) => PoolingConfiguration::solo(&universe),
        };
        start.validate(&universe)?;
        Ok(start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::resource::OwnerId;
    use proptest::prelude::*;

    const WORKED: &str = r#"{
        "universe": ["1/2", "1/4", "2/8"],
        "cost": {"kind": "operator_linear", "fixed": ["5", "3", "4"], "marginal": ["1", "2", "1"]},
        "reward": {"kind": "linear", "gamma": "10"},
        "configuration": {"pools": [{"members": [0, 1, 2]}]},
        "mode": "pareto",
        "schedule": {"kind": "halving", "initial": "50", "interval": 10},
        "blueprint": {"k": 1, "epochs": 10, "treasury_rate": "1/5", "fees_per_epoch": "20", "performance": {"0": "9/10"}, "seed": 4},
        "dynamics": {"max_iter": 20, "seed": 1, "moves": {"leave": false}}
    }"#;

    #[test]
    fn parses_the_full_document() {
        let file = ScenarioFile::parse(WORKED).unwrap();
        assert_eq!(file.universe[2], ratio(1, 4));
        assert_eq!(file.mode, ImprovementMode::ParetoImprovement);
        let inst = file.instance().unwrap();
        assert_eq!(
            inst.cost.cost(&inst.universe, inst.universe.all()).unwrap(),
            ratio(17, 4)
        );
        let bp = file.blueprint().unwrap();
        assert_eq!(bp.performance_of(0), ratio(9, 10));
        assert_eq!(bp.treasury_rate, ratio(1, 5));
        let dyn_spec = file.dynamics().unwrap();
        assert!(!dyn_spec.moves.leave && dyn_spec.moves.join);
        assert_eq!(file.cauchy_denominator().unwrap(), 4);
        assert_eq!(file.dynamics_start().unwrap(), file.configuration().unwrap());
    }

    #[test]
    fn round_trips_exactly() {
        let file = ScenarioFile::parse(WORKED).unwrap();
        let again = ScenarioFile::parse(&file.to_json()).unwrap();
        assert_eq!(file, again);
        assert!(file.to_json().contains("\"1/4\""));
    }

    #[test]
    fn rejects_unknown_fields_and_bad_rationals() {
        let extra = WORKED.replacen("\"mode\"", "\"colour\": 1, \"mode\"", 1);
        assert!(matches!(ScenarioFile::parse(&extra), Err(Error::InvalidScenario(_))));
        let zero_denominator = WORKED.replacen("\"1/2\"", "\"1/0\"", 1);
        assert!(ScenarioFile::parse(&zero_denominator).is_err());
        let decimal = WORKED.replacen("\"1/2\"", "\"0.5\"", 1);
        assert!(ScenarioFile::parse(&decimal).is_err());
        let float = WORKED.replacen("\"1/2\"", "0.5", 1);
        assert!(ScenarioFile::parse(&float).is_err());
    }

    #[test]
    fn minimal_document_and_missing_sections() {
        let file = ScenarioFile::parse(r#"{"universe": ["1"], "cost": {"kind": "zero"}, "reward": {"kind": "capped", "gamma": "2", "beta": "1/2"}}"#).unwrap();
        assert_eq!(file.mode, ImprovementMode::AllStrictlyBetter);
        assert!(file.configuration().is_err());
        assert!(file.schedule().is_err());
        assert!(file.blueprint().is_err());
        assert!(file.dynamics().is_err());
        assert_eq!(file.instance().unwrap().reward.evaluate(&int(1)).unwrap(), int(1));
    }

    #[test]
    fn tabulated_models() {
        let text = r#"{"universe": ["1/2", "1/2"],
            "cost": {"kind": "tabulated", "table": [{"set": [0], "cost": "1"}, {"set": [1], "cost": "1"}, {"set": [0, 1], "cost": "3"}]},
            "reward": {"kind": "tabulated", "grid": [{"measure": "0", "value": "0"}, {"measure": "1/2", "value": "3"}, {"measure": "1", "value": "6"}]}}"#;
        let inst = ScenarioFile::parse(text).unwrap().instance().unwrap();
        assert_eq!(
            inst.cost.cost(&inst.universe, OwnerSet::singleton(OwnerId(1))).unwrap(),
            int(1)
        );
        assert_eq!(inst.reward.evaluate(&ratio(1, 2)).unwrap(), int(3));

        let duplicate = text.replacen(r#"{"set": [1], "cost": "1"}"#, r#"{"set": [0], "cost": "2"}"#, 1);
        assert!(ScenarioFile::parse(&duplicate).unwrap().cost_model().is_err());
    }

    #[test]
    fn semantic_validation_happens_on_conversion() {
        let file = ScenarioFile::parse(&WORKED.replacen("\"2/8\"", "\"1/2\"", 1)).unwrap();
        assert!(matches!(file.universe(), Err(Error::WeightsDoNotSumToOne(_))));
        let overlap = WORKED.replacen(
            "[{\"members\": [0, 1, 2]}]",
            "[{\"members\": [0, 1]}, {\"members\": [1]}]",
            1,
        );
        assert!(matches!(
            ScenarioFile::parse(&overlap).unwrap().configuration(),
            Err(Error::OverlappingPools { .. })
        ));
    }

    proptest! {
        #[test]
        fn rationals_survive_the_file_boundary(parts in prop::collection::vec((1i64..1000, 1i64..1000), 1..6), gamma in (0i64..10_000, 1i64..10_000)) {
            let file = ScenarioFile {
                universe: parts.iter().map(|&(p, q)| ratio(p, q)).collect(),
                cost: CostSpec::Zero,
                reward: RewardSpec::Linear { gamma: ratio(gamma.0, gamma.1) },
                configuration: None,
                mode: ImprovementMode::default(),
                cauchy_denominator: None,
                schedule: None,
                blueprint: None,
                dynamics: None,
            };
            prop_assert_eq!(ScenarioFile::parse(&file.to_json()).unwrap(), file);
        }
    }
}
