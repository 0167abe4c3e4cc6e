//! Hand-written trees bundled with the crate, in canonical text form.
//!
//! Each leaf holds a one-hot Q-vector so the greedy action is the leaf's
//! published action. Action indices for continuous-control trees follow the
//! channel-major layout of [`crate::actionmap`].

use crate::dtree::{parse, DecisionTree};

pub const INVERTED_PENDULUM: &str = include_str!("../fixtures/inverted_pendulum.tree");
pub const LUNAR_LANDER: &str = include_str!("../fixtures/lunar_lander.tree");
pub const SWIMMER: &str = include_str!("../fixtures/swimmer.tree");
pub const REACHER: &str = include_str!("../fixtures/reacher.tree");
pub const HOPPER: &str = include_str!("../fixtures/hopper.tree");
pub const WALKER2D: &str = include_str!("../fixtures/walker2d.tree");

/// `(name, text)` for every bundled tree.
pub const ALL: [(&str, &str); 6] = [
    ("inverted_pendulum", INVERTED_PENDULUM),
    ("lunar_lander", LUNAR_LANDER),
    ("swimmer", SWIMMER),
    ("reacher", REACHER),
    ("hopper", HOPPER),
    ("walker2d", WALKER2D),
];

fn load(text: &str) -> DecisionTree {
    parse(text).expect("bundled fixture parses")
}

/// Four inputs `(x, theta, v, omega)`, seven actions (one force channel).
pub fn inverted_pendulum() -> DecisionTree {
    load(INVERTED_PENDULUM)
}

pub fn lunar_lander() -> DecisionTree {
    load(LUNAR_LANDER)
}

pub fn swimmer() -> DecisionTree {
    load(SWIMMER)
}

pub fn reacher() -> DecisionTree {
    load(REACHER)
}

pub fn hopper() -> DecisionTree {
    load(HOPPER)
}

pub fn walker2d() -> DecisionTree {
    load(WALKER2D)
}

/// Looks up a bundled tree by name.
pub fn by_name(name: &str) -> Option<DecisionTree> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| load(t))
}
