//! Deterministic kinematic rollout harness.
//!
//! An episode replays `steps` policy actions through the safety filter: each
//! action's Cartesian delta is split evenly across `substeps_per_action`
//! filter calls and integrated as `q <- q + dq`. With the filter disabled the
//! raw damped-least-squares step is applied instead, with no constraints —
//! that is the unprotected baseline the comparisons quantify.
//!
//! Everything is position-level: the filter decides displacements, so no
//! rigid-body dynamics enter. Identical config and seed reproduce the log
//! byte for byte.

pub mod fixtures;
pub mod log;
pub mod policy;

pub use fixtures::{make_scenario_fixtures, noisy_variant, scenario_iii_traces, ScenarioFixture};
pub use log::{compare_runs, ComparisonReport, EpisodeLog, EpisodeSummary, StepRecord};
pub use policy::PolicySpec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{evaluate_barrier, validate_scene, CollisionScene, SceneError};
use crate::filter::{dls_step, FilterError, FilterParams, FilterWorkspace};
use crate::kinematics::{
    forward_kinematics, load_chain_path, JointConfig, KinematicChain, KinematicsError,
};
use crate::DOF;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("failed to read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario file parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("scenario invalid: {0}")]
    Validation(String),
    #[error("{0}")]
    ConfigMismatch(String),
    #[error("malformed log: {0}")]
    Malformed(String),
}

/// Scenario file contents. `chain_path` and `scene_path` are resolved
/// relative to the scenario file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub chain_path: String,
    pub scene_path: String,
    pub initial_q: [f64; DOF],
    pub steps: usize,
    pub substeps_per_action: usize,
    pub filter_enabled: bool,
    pub seed: u64,
    pub policy: PolicySpec,
    pub filter: FilterParams,
}

/// A scenario with its chain and scene loaded and validated.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub chain: KinematicChain,
    pub scene: CollisionScene,
}

impl ResolvedScenario {
    /// Loads a scenario file and everything it references.
    pub fn load(path: &std::path::Path) -> Result<Self, SimError> {
        let config: ScenarioConfig = toml::from_str(&std::fs::read_to_string(path)?)?;
        let dir = path.parent().unwrap_or(std::path::Path::new("."));
        let chain = load_chain_path(&dir.join(&config.chain_path))?;
        let scene = crate::collision::load_scene_path(&dir.join(&config.scene_path))?;
        Self::assemble(config, chain, scene)
    }

    /// Validates an already-loaded configuration.
    pub fn assemble(
        config: ScenarioConfig,
        chain: KinematicChain,
        scene: CollisionScene,
    ) -> Result<Self, SimError> {
        validate_scene(&scene)?;
        if config.steps < 1 {
            return Err(SimError::Validation("steps must be >= 1".into()));
        }
        if config.substeps_per_action < 1 {
            return Err(SimError::Validation(
                "substeps_per_action must be >= 1".into(),
            ));
        }
        config
            .filter
            .validate()
            .map_err(|e| SimError::Validation(e.to_string()))?;
        config
            .policy
            .validate(config.steps)
            .map_err(SimError::Validation)?;
        let q0 = JointConfig::new(config.initial_q)?;
        if !chain.limits.contains(&q0, 0.0) {
            return Err(SimError::Validation(
                "initial_q violates the chain's joint limits".into(),
            ));
        }
        let h0 = evaluate_barrier(&chain, &q0, &scene)?;
        if h0.value < 0.0 {
            return Err(SimError::Validation(format!(
                "initial state is unsafe: h = {:.6} for pair {:?}",
                h0.value, h0.active_pair
            )));
        }
        Ok(Self {
            config,
            chain,
            scene,
        })
    }

    pub fn run(&self) -> Result<EpisodeLog, SimError> {
        run_episode(self)
    }
}

/// Rolls the configured policy through the (optionally disabled) filter.
pub fn run_episode(scenario: &ResolvedScenario) -> Result<EpisodeLog, SimError> {
    let ResolvedScenario {
        config,
        chain,
        scene,
    } = scenario;
    let substeps = config.substeps_per_action;
    let mut q = JointConfig::new(config.initial_q)?;
    let mut workspace = FilterWorkspace::new();
    let mut records = Vec::with_capacity(config.steps * substeps);

    for step in 0..config.steps {
        let action = config.policy.action(step, config.seed, chain, &q);
        let sub_action = action.scaled(1.0 / substeps as f64);

        for substep in 0..substeps {
            let index = step * substeps + substep;
            let mut fault = None;
            let mut intervened = false;
            let tracking_error;

            if config.filter_enabled {
                match workspace.filter(chain, scene, &q, &sub_action, &config.filter) {
                    Ok(result) => {
                        q = JointConfig::from_vector(&(q.as_vector() + result.dq_safe))?;
                        intervened = result.intervened;
                        tracking_error = result.tracking_error;
                    }
                    Err(err) => {
                        // Keep the episode alive with a zero step.
                        fault = Some(err.to_string());
                        tracking_error = sub_action.spatial().norm();
                    }
                }
            } else {
                match dls_step(chain, &q, &sub_action, config.filter.lambda) {
                    Ok(dq) => {
                        let frames = forward_kinematics(chain, &q);
                        let jac =
                            crate::kinematics::geometric_jacobian_from_frames(chain, &frames);
                        tracking_error = (jac.entries * dq - sub_action.spatial()).norm();
                        q = JointConfig::from_vector(&(q.as_vector() + dq))?;
                    }
                    Err(err) => {
                        fault = Some(err.to_string());
                        tracking_error = sub_action.spatial().norm();
                    }
                }
            }

            let barrier = evaluate_barrier(chain, &q, scene)?;
            records.push(StepRecord {
                step: index,
                q: *q.angles(),
                barrier: barrier.value,
                active_pair: barrier.active_pair,
                intervened,
                tracking_error,
                gripper: sub_action.gripper,
                fault,
            });
        }
    }

    let final_ee = forward_kinematics(chain, &q)[DOF].translation;
    let summary = log::summarize(&records, [final_ee.x, final_ee.y, final_ee.z]);
    Ok(EpisodeLog {
        schema_version: log::LOG_SCHEMA_VERSION,
        scenario: config.clone(),
        summary,
        records,
    })
}
