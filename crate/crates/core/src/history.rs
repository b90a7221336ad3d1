//! Observation history with per-arm sufficient statistics.

use std::collections::HashMap;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Observations sharing one arm vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmGroup {
    pub arm: DVector<f64>,
    pub count: usize,
    pub sum_reward: f64,
    pub sum_sq_reward: f64,
}

/// Ordered list of `(arm, reward)` pairs.
///
/// Alongside the raw list the history pools observations by arm (keyed by
/// the exact bit pattern of the vector), which is all the loss needs for the
/// families in this crate. With a finite arm set this keeps the cost of a
/// loss evaluation independent of `t`.
#[derive(Debug, Clone, Default)]
pub struct History {
    dim: usize,
    arms: Vec<DVector<f64>>,
    rewards: Vec<f64>,
    group_of: Vec<usize>,
    groups: Vec<ArmGroup>,
    lookup: HashMap<Vec<u64>, usize>,
}

impl History {
    pub fn new(dim: usize) -> Self {
        History {
            dim,
            ..Default::default()
        }
    }

    pub fn from_pairs<I>(dim: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (DVector<f64>, f64)>,
    {
        let mut h = History::new(dim);
        for (x, y) in pairs {
            h.push(x, y)?;
        }
        Ok(h)
    }

    pub fn push(&mut self, arm: DVector<f64>, reward: f64) -> Result<()> {
        if arm.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: arm.len(),
            });
        }
        let key: Vec<u64> = arm.iter().map(|v| v.to_bits()).collect();
        let next = self.groups.len();
        let gi = *self.lookup.entry(key).or_insert(next);
        if gi == next {
            self.groups.push(ArmGroup {
                arm: arm.clone(),
                count: 0,
                sum_reward: 0.0,
                sum_sq_reward: 0.0,
            });
        }
        let g = &mut self.groups[gi];
        g.count += 1;
        g.sum_reward += reward;
        g.sum_sq_reward += reward * reward;
        self.arms.push(arm);
        self.rewards.push(reward);
        self.group_of.push(gi);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn arms(&self) -> &[DVector<f64>] {
        &self.arms
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn groups(&self) -> &[ArmGroup] {
        &self.groups
    }

    /// Group index of observation `i`.
    pub fn group_of(&self, i: usize) -> usize {
        self.group_of[i]
    }

    /// First `t` observations as a new history.
    pub fn prefix(&self, t: usize) -> History {
        let mut h = History::new(self.dim);
        for i in 0..t.min(self.len()) {
            h.push(self.arms[i].clone(), self.rewards[i])
                .expect("arms already validated");
        }
        h
    }

    /// Same arms with every reward shifted by `noise[i]`.
    pub fn with_reward_noise(&self, noise: &[f64]) -> Result<History> {
        if noise.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: noise.len(),
            });
        }
        let mut h = History::new(self.dim);
        for ((x, y), z) in self.arms.iter().zip(&self.rewards).zip(noise) {
            h.push(x.clone(), y + z)?;
        }
        Ok(h)
    }

    /// Largest Euclidean arm norm seen (0 when empty).
    pub fn max_arm_norm(&self) -> f64 {
        self.groups.iter().map(|g| g.arm.norm()).fold(0.0, f64::max)
    }
}
