//! Monitoring and repair of classical plans through causal-link opportunities.
//!
//! A plan's causal links record which step supplies which fact to which later
//! step. Facts that appear in live links are *opportunities*: if the world makes
//! one true on its own, the steps that would have produced it can be dropped
//! without search.

pub mod benchgen;
pub mod clo;
pub mod examples;
pub mod experiment;
pub mod executive;
pub mod fact;
pub mod ground;
pub mod pddl;
pub mod planner;
pub mod repair;
pub mod task;
pub mod worldsim;

pub use fact::{Fact, FactId, FactTable, State};
pub use task::{ActionId, GroundAction, GroundTask, Plan};
