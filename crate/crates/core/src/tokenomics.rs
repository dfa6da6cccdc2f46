// SPDX-License-Identifier: Apache-2.0

//! Emission schedules and per-epoch reward pots.
//!
//! All amounts are exact rationals in coin units; no ledger-level rounding
//! is modelled.

use crate::{rational, Error, Rational, Result};
use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

/// One rate over the inclusive epoch range `start..=end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionRange {
    pub start: u64,
    pub end: u64,
    #[serde(with = "rational::serde_text")]
    pub rate: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmissionSchedule {
    Constant {
        #[serde(with = "rational::serde_text")]
        rate: Rational,
    },
    /// `initial` per epoch, halved every `interval` epochs.
    Halving {
        #[serde(with = "rational::serde_text")]
        initial: Rational,
        interval: u64,
    },
    /// Contiguous ranges starting at epoch 0. Epochs past the last range
    /// have no defined emission.
    Custom { ranges: Vec<EmissionRange> },
}

impl EmissionSchedule {
    pub fn validate(&self) -> Result<()> {
        let negative = |v: &Rational| Err(Error::InvalidSchedule(format!("negative rate {}", rational::format(v))));
        match self {
            EmissionSchedule::Constant { rate } if rate.is_negative() => negative(rate),
            EmissionSchedule::Halving { initial, .. } if initial.is_negative() => negative(initial),
            EmissionSchedule::Halving { interval: 0, .. } => {
                Err(Error::InvalidSchedule("halving interval must be at least 1".into()))
            }
            EmissionSchedule::Custom { ranges } => {
                let mut next = 0u64;
                for range in ranges {
                    if range.start != next || range.end < range.start {
                        return Err(Error::InvalidSchedule(format!(
                            "range {}..={} does not continue from epoch {next}",
                            range.start, range.end
                        )));
                    }
                    if range.rate.is_negative() {
                        return negative(&range.rate);
                    }
                    next = range
                        .end
                        .checked_add(1)
                        .ok_or_else(|| Error::InvalidSchedule("range reaches past the last epoch".into()))?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Coins made available in `epoch`.
    pub fn emission(&self, epoch: u64) -> Result<Rational> {
        self.validate()?;
        match self {
            EmissionSchedule::Constant { rate } => Ok(rate.clone()),
            EmissionSchedule::Halving { initial, interval } => Ok(initial / rational::pow2(epoch / interval)),
            EmissionSchedule::Custom { ranges } => ranges
                .iter()
                .find(|r| r.start <= epoch && epoch <= r.end)
                .map(|r| r.rate.clone())
                .ok_or(Error::EpochOutOfCustomRange(epoch)),
        }
    }

    /// Total emission over epochs `0..=through_epoch`.
    pub fn cumulative_emission(&self, through_epoch: u64) -> Result<Rational> {
        self.validate()?;
        let epochs = Rational::from_integer((u128::from(through_epoch) + 1).into());
        match self {
            EmissionSchedule::Constant { rate } => Ok(rate * epochs),
            EmissionSchedule::Halving { initial, interval } => {
                // whole halving periods form a geometric series, plus a tail
                let count = u128::from(through_epoch) + 1;
                let interval = u128::from(*interval);
                let periods = u64::try_from(count / interval).expect("period count fits");
                let tail = Rational::from_integer((count % interval).into());
                let scale = rational::pow2(periods);
                let supremum = initial * Rational::from_integer((2 * interval).into());
                let full = &supremum - &supremum / &scale;
                Ok(full + tail * initial / scale)
            }
            EmissionSchedule::Custom { ranges } => {
                if ranges.last().is_none_or(|r| r.end < through_epoch) {
                    let past = ranges.last().map_or(0, |r| r.end + 1);
                    return Err(Error::EpochOutOfCustomRange(past));
                }
                let mut total = Rational::zero();
                for range in ranges {
                    if range.start > through_epoch {
                        break;
                    }
                    let last = range.end.min(through_epoch);
                    let span = u128::from(last - range.start) + 1;
                    total += &range.rate * Rational::from_integer(span.into());
                }
                Ok(total)
            }
        }
    }

    /// Supremum of all partial sums, when finite.
    pub fn total_supply(&self) -> Option<Rational> {
        match self {
            EmissionSchedule::Halving { initial, interval } => {
                Some(initial * Rational::from_integer((2 * u128::from(*interval)).into()))
            }
            EmissionSchedule::Constant { rate } if rate.is_zero() => Some(Rational::zero()),
            EmissionSchedule::Constant { .. } => None,
            // past its last range a custom table emits nothing further
            EmissionSchedule::Custom { ranges } => ranges
                .last()
                .map(|r| self.cumulative_emission(r.end).unwrap_or_else(|_| Rational::zero())),
        }
    }
}

/// What one epoch has to hand out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochPot {
    pub emission: Rational,
    pub fees: Rational,
    pub treasury_cut: Rational,
    pub distributable: Rational,
}

/// The treasury takes `treasury_rate` of emission and fees combined.
pub fn epoch_pot(emission: &Rational, fees: &Rational, treasury_rate: &Rational) -> Result<EpochPot> {
    if !rational::in_unit_interval(treasury_rate) {
        return Err(Error::RateOutOfRange(rational::format(treasury_rate)));
    }
    if let Some(bad) = [emission, fees].into_iter().find(|v| v.is_negative()) {
        return Err(Error::NegativeAmount(rational::format(bad)));
    }
    let gross = emission + fees;
    let treasury_cut = treasury_rate * &gross;
    let distributable = &gross - &treasury_cut;
    Ok(EpochPot {
        emission: emission.clone(),
        fees: fees.clone(),
        treasury_cut,
        distributable,
    })
}
