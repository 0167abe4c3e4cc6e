//! Counter-based derivation of independent random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the tuple
//! `(master, domain, a, b)` written little-endian into the 32-byte key, so a
//! stream depends only on its coordinates and never on the order in which
//! other streams were created or consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. The discriminant is part of the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    /// Initial population and genetic operators; `a` = generation.
    Population = 1,
    /// Leaf Q-value initialization; `a` = generation, `b` = individual.
    QInit = 2,
    /// Collaborative worker (env resets and action sampling); `a` = generation, `b` = worker.
    Collaborative = 3,
    /// Individual phase; `a` = generation, `b` = individual.
    Individual = 4,
    /// Greedy evaluation episodes; `a` = episode.
    Evaluation = 5,
    /// Free-form streams for tests and tools.
    Aux = 6,
}

pub type Rng = ChaCha8Rng;

pub fn stream(master: u64, domain: Domain, a: u64, b: u64) -> Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Seed for episode `episode` of a stream, used for `Environment::reset`.
pub fn episode_seed(master: u64, domain: Domain, a: u64, b: u64, episode: u64) -> u64 {
    use rand::RngCore;
    let mut rng = stream(master, domain, a, b);
    rng.set_word_pos(episode as u128 * 2);
    rng.next_u64()
}
