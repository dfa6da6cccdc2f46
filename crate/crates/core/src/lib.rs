// SPDX-License-Identifier: Apache-2.0

//! Pooling games over a resource universe.
//!
//! Owners hold normalized shares of a finite resource universe and may join
//! their resources into pools. This crate evaluates such pooling
//! configurations with exact rational arithmetic:
//!
//! - [`resource`]: the universe, its measure, owner sets and configurations.
//! - [`cost`]: cost functions on owner joins, including the operator-linear
//!   family, and brute-force checks for cost efficiency and economies of scale.
//! - [`reward`]: reward functions of measure, reward axiom checkers and
//!   in-pool splitting of profit.
//! - [`equilibrium`]: member utilities, exhaustive strong Nash verification
//!   and best-response dynamics.
//! - [`tokenomics`]: emission schedules and per-epoch reward pots.
//! - [`blueprint`]: stake-weighted committee sampling and an epoch simulator.
//! - [`scenario`]: the JSON scenario document shared by the CLI and the demo.

pub mod blueprint;
pub mod cost;
pub mod enumerate;
pub mod equilibrium;
mod error;
pub mod rational;
pub mod resource;
pub mod reward;
pub mod scenario;
pub mod tokenomics;

pub use error::{Error, Result};
pub use rational::Rational;
