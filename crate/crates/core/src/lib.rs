//! Interpretable reinforcement-learning policies as oblique decision trees.
//!
//! Tree structure is searched with grammatical evolution; leaf Q-values are
//! learned in two phases per generation. In the collaborative phase the whole
//! population acts on one shared environment, choosing each executed action
//! by a random vote over the agents' proposals, and every agent learns from
//! the resulting transition. In the individual phase each agent keeps
//! learning alone and its mean return becomes its fitness.

pub mod actionmap;
pub mod analysis;
pub mod config;
pub mod dtree;
pub mod envs;
pub mod error;
pub mod evolution;
pub mod fixtures;
pub mod grammar;
pub mod seeds;
pub mod social;

pub use actionmap::DiscretizedActionMap;
pub use dtree::{DecisionTree, QLearnParams, Transition};
pub use envs::{Action, EnvSpec, Environment, Step};
pub use error::{Error, Result};
pub use grammar::{Genotype, Grammar, TranslationResult};
