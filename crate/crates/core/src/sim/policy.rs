//! Scripted and randomized action sources driven through the filter.
//!
//! Policies are deterministic functions of (spec, seed, step index, state).
//! Noise comes from a counter-based generator keyed on `(seed, step)`, so a
//! step's sample does not depend on how many draws earlier steps made.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::filter::ActionCommand;
use crate::kinematics::{forward_kinematics, JointConfig, KinematicChain};
use crate::DOF;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    /// Same Cartesian delta every action.
    ConstantDelta {
        translation: [f64; 3],
        #[serde(default)]
        rotation: [f64; 3],
    },
    /// Proportional pull of the flange toward a fixed position.
    WaypointApproach {
        target_position: [f64; 3],
        gain: f64,
    },
    /// A base policy corrupted by per-axis Gaussian translation noise and a
    /// constant translation bias, modeling out-of-distribution drift.
    NoisyHallucination {
        base: Box<PolicySpec>,
        noise_std: [f64; 3],
        #[serde(default)]
        ood_bias: [f64; 3],
    },
    /// Explicit per-step action list.
    Scripted { actions: Vec<ActionCommand> },
}

impl PolicySpec {
    /// Structural validation; `steps` is the episode length the policy must cover.
    pub fn validate(&self, steps: usize) -> Result<(), String> {
        match self {
            PolicySpec::ConstantDelta {
                translation,
                rotation,
            } => {
                let cmd = ActionCommand {
                    translation: *translation,
                    rotation: *rotation,
                    gripper: false,
                };
                cmd.validate().map_err(|e| format!("policy: {e}"))
            }
            PolicySpec::WaypointApproach {
                target_position,
                gain,
            } => {
                if !target_position.iter().all(|v| v.is_finite()) {
                    return Err("policy: target_position must be finite".into());
                }
                if !(gain.is_finite() && *gain > 0.0 && *gain <= 1.0) {
                    return Err(format!("policy: gain must be in (0, 1], got {gain}"));
                }
                Ok(())
            }
            PolicySpec::NoisyHallucination {
                base,
                noise_std,
                ood_bias,
            } => {
                if noise_std.iter().any(|&s| !s.is_finite() || s < 0.0) {
                    return Err("policy: noise_std must be finite and >= 0".into());
                }
                if !ood_bias.iter().all(|v| v.is_finite()) {
                    return Err("policy: ood_bias must be finite".into());
                }
                base.validate(steps)
            }
            PolicySpec::Scripted { actions } => {
                if actions.len() < steps {
                    return Err(format!(
                        "policy: scripted list has {} actions but the episode needs {steps}",
                        actions.len()
                    ));
                }
                for (i, a) in actions.iter().enumerate() {
                    a.validate().map_err(|e| format!("policy: actions[{i}]: {e}"))?;
                }
                Ok(())
            }
        }
    }

    /// The action for `step`, given the current state.
    pub fn action(
        &self,
        step: usize,
        seed: u64,
        chain: &KinematicChain,
        q: &JointConfig,
    ) -> ActionCommand {
        match self {
            PolicySpec::ConstantDelta {
                translation,
                rotation,
            } => ActionCommand {
                translation: *translation,
                rotation: *rotation,
                gripper: false,
            },
            PolicySpec::WaypointApproach {
                target_position,
                gain,
            } => {
                let flange = forward_kinematics(chain, q)[DOF].translation;
                let mut translation = [0.0; 3];
                for i in 0..3 {
                    translation[i] = gain * (target_position[i] - flange[i]);
                }
                ActionCommand {
                    translation,
                    rotation: [0.0; 3],
                    gripper: false,
                }
            }
            PolicySpec::NoisyHallucination {
                base,
                noise_std,
                ood_bias,
            } => {
                let mut action = base.action(step, seed, chain, q);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(step as u64);
                for i in 0..3 {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    action.translation[i] += noise_std[i] * n + ood_bias[i];
                }
                action
            }
            PolicySpec::Scripted { actions } => actions[step],
        }
    }
}
