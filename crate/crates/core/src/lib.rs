//! Argumentative agent-based model of scientific inquiry.
//!
//! Agents explore a landscape of competing theories, each a tree of
//! arguments connected by cross-theory attacks, share what they find within
//! and across collaborative networks, and periodically switch to the theory
//! that looks most defensible to them.

pub mod agent;
pub mod cli;
pub mod engine;
pub mod experiment;
pub mod knowledge;
pub mod landscape;
pub mod social;

pub use agent::{Action, Agent, BehaviorConfig};
pub use engine::{run_simulation, Observer, RunResult, Simulation, SimulationConfig, SimulationError};
pub use knowledge::{ExplorationDegree, SubjectiveKnowledge};
pub use landscape::{ArgumentId, Landscape, LandscapeConfig, LandscapeError};
pub use social::{Composition, Direction, SharingConfig};
