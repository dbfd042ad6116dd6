//! Trajectories and padding.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::env::EnvId;
use crate::error::{invalid, Result};
use crate::features::CostFeatures;

/// One episode: `n` states, `n − 1` actions and one feature vector per state.
///
/// Control cost is attached to the state in which the action is taken, so the
/// terminal state carries zero control cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub env_id: EnvId,
    pub task_id: u32,
    pub seed: u64,
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub step_features: Vec<CostFeatures>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprobs: Option<Vec<f64>>,
    pub true_return: f64,
}

impl Trajectory {
    /// Checks the length relations between states, actions, features and log-probabilities.
    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(invalid!("trajectory has no states"));
        }
        if self.actions.len() + 1 != self.states.len() {
            return Err(invalid!(
                "trajectory has {} states but {} actions",
                self.states.len(),
                self.actions.len()
            ));
        }
        if self.step_features.len() < self.states.len() {
            return Err(invalid!(
                "trajectory has {} feature rows for {} states",
                self.step_features.len(),
                self.states.len()
            ));
        }
        if let Some(lp) = &self.logprobs {
            if lp.len() != self.actions.len() {
                return Err(invalid!("one log-probability per action expected"));
            }
        }
        if let Some(first) = self.step_features.first() {
            if self.step_features.iter().any(|f| f.dim() != first.dim()) {
                return Err(invalid!("inconsistent feature dimensions inside trajectory"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.step_features.first().map_or(0, CostFeatures::dim)
    }

    /// Element-wise sum of the per-step features.
    pub fn feature_total(&self) -> Result<CostFeatures> {
        CostFeatures::total(&self.step_features)
    }
}

/// Pads short feature sequences up to a horizon with a fixed cost vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddingConfig {
    pub horizon: usize,
    pub pad_features: CostFeatures,
}

impl PaddingConfig {
    pub fn new(horizon: usize, pad_features: CostFeatures) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid!("padding horizon must be positive"));
        }
        Ok(PaddingConfig { horizon, pad_features })
    }

    /// Pads a bare feature sequence.
    pub fn pad_steps(&self, steps: &mut Vec<CostFeatures>) {
        while steps.len() < self.horizon {
            steps.push(self.pad_features.clone());
        }
    }
}

/// Appends copies of the padding vector until the feature sequence reaches the
/// horizon. States and actions are left untouched.
pub fn pad_trajectory(traj: &Trajectory, cfg: &PaddingConfig) -> Trajectory {
    let mut out = traj.clone();
    cfg.pad_steps(&mut out.step_features);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn traj(features: &[f64]) -> Trajectory {
        let n = features.len();
        Trajectory {
            env_id: EnvId::CartPole,
            task_id: 0,
            seed: 0,
            states: vec![vec![0.0; 4]; n],
            actions: vec![0; n - 1],
            step_features: features.iter().map(|f| CostFeatures::new(vec![*f]).unwrap()).collect(),
            logprobs: None,
            true_return: 0.0,
        }
    }

    #[test]
    fn pads_to_horizon() {
        let t = traj(&[1.0, 2.0, 3.0]);
        let cfg = PaddingConfig::new(5, CostFeatures::new(vec![10.0]).unwrap()).unwrap();
        let p = pad_trajectory(&t, &cfg);
        assert_eq!(p.step_features.len(), 5);
        assert_eq!(p.step_features[4].as_slice(), &[10.0]);
        assert_eq!(p.feature_total().unwrap()[0], t.feature_total().unwrap()[0] + 20.0);
        assert_eq!(p.states, t.states);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn full_length_is_untouched() {
        let t = traj(&[1.0; 5]);
        let cfg = PaddingConfig::new(5, CostFeatures::new(vec![10.0]).unwrap()).unwrap();
        assert_eq!(pad_trajectory(&t, &cfg), t);
    }

    #[test]
    fn zero_padding_keeps_totals() {
        let t = traj(&[1.0, 2.0]);
        let cfg = PaddingConfig::new(6, CostFeatures::zeros(1)).unwrap();
        let p = pad_trajectory(&t, &cfg);
        assert_eq!(p.step_features.len(), 6);
        assert_eq!(p.feature_total().unwrap(), t.feature_total().unwrap());
    }
}
