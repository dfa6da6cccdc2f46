// SPDX-License-Identifier: Apache-2.0

use crate::resource::OwnerId;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("owner weight {0} is not positive")]
    NonPositiveWeight(String),
    #[error("owner weights sum to {0}, expected exactly 1")]
    WeightsDoNotSumToOne(String),
    #[error("a universe needs at least one owner")]
    EmptyUniverse,
    #[error("{0} owners exceed the supported maximum of {max}", max = crate::resource::MAX_OWNERS)]
    TooManyOwners(usize),
    #[error("unknown owner {0}")]
    UnknownOwner(OwnerId),
    #[error("owner {owner} appears in pools {first} and {second}")]
    OverlappingPools {
        owner: OwnerId,
        first: usize,
        second: usize,
    },
    #[error("pool {0} is empty")]
    EmptyPool(usize),
    #[error("cost of the empty set is undefined")]
    EmptySet,
    #[error("no cost is tabulated for owner set {0}")]
    UndefinedCost(String),
    #[error("invalid cost model: {0}")]
    InvalidCostModel(String),
    #[error("invalid reward model: {0}")]
    InvalidRewardModel(String),
    #[error("invalid splitting strategy: {0}")]
    InvalidSplitting(String),
    #[error("measure {0} lies outside [0, 1]")]
    MeasureOutOfRange(String),
    #[error("measure {0} is not a point of the reward table")]
    NotOnGrid(String),
    #[error("enumeration over {owners} owners exceeds the configured limit of {limit}")]
    EnumerationLimitExceeded { owners: usize, limit: usize },
    #[error("epoch {0} is not covered by the custom emission table")]
    EpochOutOfCustomRange(u64),
    #[error("invalid emission schedule: {0}")]
    InvalidSchedule(String),
    #[error("rate {0} lies outside [0, 1]")]
    RateOutOfRange(String),
    #[error("negative amount {0}")]
    NegativeAmount(String),
    #[error("committee size {k} exceeds the {available} pools with positive stake")]
    KTooLarge { k: usize, available: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("malformed rational {0:?}")]
    ParseRational(String),
}
