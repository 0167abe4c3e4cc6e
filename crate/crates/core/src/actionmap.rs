//! Discrete tree actions to continuous control vectors.
//!
//! Layout is channel-major: index `a` drives channel `a / bins` with bin
//! `a % bins`, and bin `k` maps to `2k / (bins - 1) - 1`. Every other channel
//! stays at zero.

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscretizedActionMap {
    n_a: usize,
    bins: usize,
}

impl DiscretizedActionMap {
    pub fn new(n_a: usize, bins: usize) -> Result<Self> {
        if n_a == 0 {
            return Err(Error::InvalidDimension("action map needs at least one channel".into()));
        }
        if bins < 2 {
            return Err(Error::InvalidDimension(format!("need at least 2 bins, got {bins}")));
        }
        Ok(DiscretizedActionMap { n_a, bins })
    }

    pub fn n_channels(&self) -> usize {
        self.n_a
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn total_actions(&self) -> usize {
        self.bins * self.n_a
    }

    /// `(channel, bin)` for a discrete index.
    pub fn decompose(&self, a_dt: usize) -> Result<(usize, usize)> {
        if a_dt >= self.total_actions() {
            return Err(Error::InvalidAction {
                action: a_dt,
                limit: self.total_actions(),
            });
        }
        Ok((a_dt / self.bins, a_dt % self.bins))
    }

    pub fn bin_value(&self, bin: usize) -> f64 {
        2.0 * bin as f64 / (self.bins - 1) as f64 - 1.0
    }

    pub fn to_continuous(&self, a_dt: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_a];
        self.write_continuous(a_dt, &mut out)?;
        Ok(out)
    }

    /// Like [`Self::to_continuous`] but reuses `out`, which must have `n_a` entries.
    pub fn write_continuous(&self, a_dt: usize, out: &mut [f64]) -> Result<()> {
        let (channel, bin) = self.decompose(a_dt)?;
        if out.len() != self.n_a {
            return Err(Error::LengthMismatch {
                left: out.len(),
                right: self.n_a,
            });
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        out[channel] = self.bin_value(bin);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn single_channel_values() {
        let m = DiscretizedActionMap::new(1, 7).unwrap();
        assert_eq!(m.to_continuous(0).unwrap(), vec![-1.0]);
        assert_eq!(m.to_continuous(3).unwrap(), vec![0.0]);
        assert_eq!(m.to_continuous(6).unwrap(), vec![1.0]);
    }

    #[test]
    fn second_channel_top_bin() {
        let m = DiscretizedActionMap::new(2, 7).unwrap();
        assert_eq!(m.to_continuous(13).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn seven_bin_grid() {
        let m = DiscretizedActionMap::new(1, 7).unwrap();
        let expected = [-1.0, -2.0 / 3.0, -1.0 / 3.0, 0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (bin, e) in expected.iter().enumerate() {
            assert!((m.bin_value(bin) - e).abs() < 1e-15);
        }
        // leaf labels of the published trees are these values rounded
        assert_eq!(format!("{:.2}", m.bin_value(5)), "0.67");
        assert_eq!(format!("{:.2}", m.bin_value(2)), "-0.33");
    }

    #[test]
    fn total_actions() {
        assert_eq!(DiscretizedActionMap::new(1, 7).unwrap().total_actions(), 7);
        assert_eq!(DiscretizedActionMap::new(2, 7).unwrap().total_actions(), 14);
        assert_eq!(DiscretizedActionMap::new(6, 7).unwrap().total_actions(), 42);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(DiscretizedActionMap::new(0, 7).is_err());
        assert!(DiscretizedActionMap::new(1, 1).is_err());
        let m = DiscretizedActionMap::new(2, 7).unwrap();
        assert!(matches!(m.to_continuous(14), Err(Error::InvalidAction { action: 14, limit: 14 })));
    }

    proptest! {
        #[test]
        fn bijection_and_range(n_a in 1usize..8, bins in 2usize..12) {
            let m = DiscretizedActionMap::new(n_a, bins).unwrap();
            let mut seen = HashSet::new();
            for a in 0..m.total_actions() {
                let (c, b) = m.decompose(a).unwrap();
                prop_assert!(c < n_a && b < bins);
                prop_assert!(seen.insert((c, b)));
                let v = m.to_continuous(a).unwrap();
                prop_assert!(v.iter().all(|x| (-1.0..=1.0).contains(x)));
                prop_assert_eq!(v.iter().enumerate().filter(|(i, x)| *i != c && **x != 0.0).count(), 0);
            }
            prop_assert_eq!(seen.len(), n_a * bins);
            if bins % 2 == 1 {
                for b in 0..bins {
                    prop_assert!((m.bin_value(b) + m.bin_value(bins - 1 - b)).abs() < 1e-12);
                }
            }
        }
    }
}
