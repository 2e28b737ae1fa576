//! Shipped scenario fixtures.
//!
//! Three rollout scenarios exercise the filter against the failure geometries
//! the harness is built to reproduce, plus two free-space scripted traces used
//! to check command integration:
//!
//! 1. `s1-approach` — tabletop plus an upright heated cylinder beside the
//!    approach path; the policy homes in on a grasp point next to it.
//! 2. `s2-dig` — an open-top litter box modeled as five half-spaces (floor
//!    and four walls); the dig target is offset into a wall so the raw
//!    approach clips it while the filtered one stalls at the boundary. Only
//!    the distal spheres participate: the box walls are modeled with infinite
//!    vertical extent, which is meaningful only for the parts of the arm that
//!    actually enter the box column.
//! 3. `s3-backward-ood` — a virtual wall 5 cm behind the initial flange
//!    position; the policy pushes backward into it with Gaussian noise,
//!    modeling out-of-distribution backward drift.
//!
//! Obstacle dimensions are plausible desk-scale choices fixed here, not
//! measured values; adjust the emitted files to match a real setup.

use std::path::{Path, PathBuf};

use super::{ResolvedScenario, ScenarioConfig, SimError};
use crate::collision::{CollisionScene, CollisionSphere, Obstacle, ObstacleShape};
use crate::filter::{ActionCommand, FilterParams};
use crate::kinematics::{forward_kinematics, load_chain, JointConfig};
use crate::sim::PolicySpec;
use crate::DOF;

/// The chain description every fixture uses.
pub const PANDA_CHAIN_TOML: &str = include_str!("../../../../configs/panda.toml");

/// Standard ready pose: elbow folded, flange pointing down in front.
pub fn ready_pose() -> [f64; DOF] {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    [
        0.0,
        -FRAC_PI_4,
        0.0,
        -3.0 * FRAC_PI_4,
        0.0,
        FRAC_PI_2,
        FRAC_PI_4,
    ]
}

/// Start pose for the dig scenario: flange at (0.50, 0.00, 0.50), pointing
/// down, inside the box column.
pub fn dig_pose() -> [f64; DOF] {
    [
        0.0,
        -0.1795,
        0.0,
        -2.0889,
        0.0,
        1.8875,
        std::f64::consts::FRAC_PI_4,
    ]
}

fn sphere(id: &str, link: usize, center: [f64; 3], radius: f64) -> CollisionSphere {
    CollisionSphere {
        id: id.into(),
        link,
        center,
        radius,
    }
}

fn half_space(id: &str, normal: [f64; 3], offset: f64) -> Obstacle {
    Obstacle {
        id: id.into(),
        shape: ObstacleShape::HalfSpace { normal, offset },
    }
}

/// Ten-sphere whole-arm layout: one per proximal link, two per distal link.
pub fn full_sphere_layout() -> Vec<CollisionSphere> {
    vec![
        sphere("base-column", 0, [0.0, 0.0, -0.15], 0.09),
        sphere("shoulder", 1, [0.0, 0.0, 0.0], 0.09),
        sphere("upper-arm", 2, [0.0, 0.0, -0.16], 0.075),
        sphere("elbow", 3, [0.0, 0.0, 0.0], 0.075),
        sphere("forearm", 4, [0.04, 0.0, -0.19], 0.06),
        sphere("wrist-root", 4, [0.0, 0.0, 0.0], 0.06),
        sphere("wrist-a", 5, [0.04, 0.0, 0.0], 0.055),
        sphere("wrist-b", 5, [0.088, 0.0, 0.0], 0.055),
        sphere("hand", 6, [0.0, 0.0, 0.05], 0.05),
        sphere("flange", 7, [0.0, 0.0, 0.0], 0.05),
    ]
}

/// Wrist/hand subset used where only the arm's distal end enters the
/// constrained region.
pub fn distal_sphere_layout() -> Vec<CollisionSphere> {
    full_sphere_layout()
        .into_iter()
        .filter(|s| matches!(s.id.as_str(), "wrist-a" | "wrist-b" | "hand" | "flange"))
        .collect()
}

/// A scenario plus everything needed to run or emit it.
#[derive(Debug, Clone)]
pub struct ScenarioFixture {
    pub scene_file: String,
    pub scene: CollisionScene,
    pub config: ScenarioConfig,
}

impl ScenarioFixture {
    pub fn name(&self) -> &str {
        &self.config.name
    }

    /// In-memory resolution (no files involved).
    pub fn resolve(&self) -> Result<ResolvedScenario, SimError> {
        let chain = load_chain(PANDA_CHAIN_TOML)?;
        ResolvedScenario::assemble(self.config.clone(), chain, self.scene.clone())
    }
}

fn base_config(name: &str, scene_file: &str, fixture_seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: 1,
        name: name.into(),
        chain_path: "../panda.toml".into(),
        scene_path: format!("../scenes/{scene_file}.toml"),
        initial_q: ready_pose(),
        steps: 1,
        substeps_per_action: 10,
        filter_enabled: true,
        seed: fixture_seed,
        policy: PolicySpec::ConstantDelta {
            translation: [0.0; 3],
            rotation: [0.0; 3],
        },
        filter: FilterParams::default(),
    }
}

/// Flange x at the ready pose; anchors the rear wall of scenario 3.
fn ready_flange_x() -> f64 {
    let chain = load_chain(PANDA_CHAIN_TOML).expect("bundled chain parses");
    let q = JointConfig::new(ready_pose()).expect("ready pose is finite");
    forward_kinematics(&chain, &q)[DOF].translation.x
}

fn fixture_s1() -> ScenarioFixture {
    let scene = CollisionScene {
        schema_version: 1,
        name: "s1-tabletop-cylinder".into(),
        margin: 0.01,
        spheres: full_sphere_layout(),
        obstacles: vec![
            half_space("table", [0.0, 0.0, 1.0], 0.0),
            Obstacle {
                id: "heat-cylinder".into(),
                shape: ObstacleShape::VerticalCylinder {
                    axis_point: [0.44, 0.0, 0.18],
                    radius: 0.04,
                    half_height: 0.18,
                },
            },
        ],
    };
    let mut config = base_config("s1-approach", "s1_tabletop_cylinder", 11);
    config.steps = 60;
    config.policy = PolicySpec::WaypointApproach {
        target_position: [0.48, 0.12, 0.22],
        gain: 0.12,
    };
    ScenarioFixture {
        scene_file: "s1_tabletop_cylinder".into(),
        scene,
        config,
    }
}

fn fixture_s2() -> ScenarioFixture {
    // Box footprint x in [0.30, 0.70], y in [-0.20, 0.20], floor at z = 0.02.
    // Each wall's allowed side faces the interior.
    let scene = CollisionScene {
        schema_version: 1,
        name: "s2-litter-box".into(),
        margin: 0.01,
        spheres: distal_sphere_layout(),
        obstacles: vec![
            half_space("box-floor", [0.0, 0.0, 1.0], 0.02),
            half_space("box-wall-near", [1.0, 0.0, 0.0], 0.30),
            half_space("box-wall-far", [-1.0, 0.0, 0.0], -0.70),
            half_space("box-wall-left", [0.0, 1.0, 0.0], -0.20),
            half_space("box-wall-right", [0.0, -1.0, 0.0], -0.20),
        ],
    };
    let mut config = base_config("s2-dig", "s2_litter_box", 22);
    config.initial_q = dig_pose();
    config.steps = 80;
    // Target sits 3 cm inside the right wall's clearance band: the raw
    // approach must clip the wall, the filtered one stalls at the boundary.
    config.policy = PolicySpec::WaypointApproach {
        target_position: [0.55, 0.17, 0.10],
        gain: 0.10,
    };
    ScenarioFixture {
        scene_file: "s2_litter_box".into(),
        scene,
        config,
    }
}

fn fixture_s3() -> ScenarioFixture {
    // Virtual wall 5 cm behind the initial flange position, solid toward -x.
    let wall_x = ready_flange_x() - 0.05;
    let scene = CollisionScene {
        schema_version: 1,
        name: "s3-rear-wall".into(),
        margin: 0.01,
        spheres: vec![sphere("flange", 7, [0.0, 0.0, 0.0], 0.03)],
        obstacles: vec![
            half_space("table", [0.0, 0.0, 1.0], 0.0),
            half_space("rear-wall", [1.0, 0.0, 0.0], wall_x),
        ],
    };
    let mut config = base_config("s3-backward-ood", "s3_rear_wall", 33);
    config.steps = 40;
    config.policy = PolicySpec::NoisyHallucination {
        base: Box::new(PolicySpec::ConstantDelta {
            translation: [-0.01, 0.0, 0.0],
            rotation: [0.0; 3],
        }),
        noise_std: [0.002, 0.002, 0.002],
        ood_bias: [0.0; 3],
    };
    ScenarioFixture {
        scene_file: "s3_rear_wall".into(),
        scene,
        config,
    }
}

/// The three shipped scenario fixtures.
pub fn make_scenario_fixtures() -> [ScenarioFixture; 3] {
    [fixture_s1(), fixture_s2(), fixture_s3()]
}

/// Free-space scripted traces: 20 actions of 1 cm, forward (+x) and downward
/// (-z), totalling 20 cm of commanded travel each.
pub fn scenario_iii_traces() -> [ScenarioFixture; 2] {
    let scene = CollisionScene {
        schema_version: 1,
        name: "s3-free-space".into(),
        margin: 0.01,
        spheres: vec![sphere("flange", 7, [0.0, 0.0, 0.0], 0.03)],
        // A floor far below keeps the scene well-formed without ever
        // activating a constraint.
        obstacles: vec![half_space("far-floor", [0.0, 0.0, 1.0], -10.0)],
    };
    let trace = |name: &str, seed: u64, delta: [f64; 3]| {
        let mut config = base_config(name, "s3_free_space", seed);
        config.steps = 20;
        config.policy = PolicySpec::Scripted {
            actions: vec![
                ActionCommand {
                    translation: delta,
                    rotation: [0.0; 3],
                    gripper: false,
                };
                20
            ],
        };
        ScenarioFixture {
            scene_file: "s3_free_space".into(),
            scene: scene.clone(),
            config,
        }
    };
    [
        trace("s3-forward-trace", 44, [0.01, 0.0, 0.0]),
        trace("s3-downward-trace", 55, [0.0, 0.0, -0.01]),
    ]
}

/// All shipped fixtures, traces included.
pub fn all_fixtures() -> Vec<ScenarioFixture> {
    let mut out: Vec<ScenarioFixture> = make_scenario_fixtures().into();
    out.extend(scenario_iii_traces());
    out
}

/// Re-seeds a scenario and, if it is not already noise-driven, wraps its
/// policy in translation noise. Used to fan a fixture out into randomized
/// variants.
pub fn noisy_variant(config: &ScenarioConfig, seed: u64, noise_std: [f64; 3]) -> ScenarioConfig {
    let mut out = config.clone();
    out.seed = seed;
    out.name = format!("{}-noisy-{seed}", config.name);
    if !matches!(out.policy, PolicySpec::NoisyHallucination { .. }) {
        out.policy = PolicySpec::NoisyHallucination {
            base: Box::new(out.policy),
            noise_std,
            ood_bias: [0.0; 3],
        };
    }
    out
}

/// Writes chain, scenes, and scenario files for every fixture under `dir`:
/// `panda.toml`, `scenes/*.toml`, `scenarios/*.toml`. Returns the scenario
/// file paths.
pub fn emit_fixtures(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir.join("scenes"))?;
    std::fs::create_dir_all(dir.join("scenarios"))?;
    std::fs::write(dir.join("panda.toml"), PANDA_CHAIN_TOML)?;

    let mut paths = Vec::new();
    for fixture in all_fixtures() {
        let scene_path = dir.join("scenes").join(format!("{}.toml", fixture.scene_file));
        let scene_text = toml::to_string_pretty(&fixture.scene).expect("scene serializes");
        std::fs::write(&scene_path, scene_text)?;

        let scenario_path = dir
            .join("scenarios")
            .join(format!("{}.toml", fixture.config.name.replace('-', "_")));
        let scenario_text =
            toml::to_string_pretty(&fixture.config).expect("scenario serializes");
        std::fs::write(&scenario_path, scenario_text)?;
        paths.push(scenario_path);
    }
    Ok(paths)
}
