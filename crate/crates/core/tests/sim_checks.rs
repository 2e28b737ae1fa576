//! End-to-end rollout checks on the shipped fixtures.

use aegis_core::kinematics::{forward_kinematics, geometric_jacobian, JointConfig};
use aegis_core::sim::{
    compare_runs, make_scenario_fixtures, run_episode, scenario_iii_traces, ResolvedScenario,
};
use aegis_core::{JointVector, SpatialVector, DOF};

fn resolve_no_filter(fixture: &aegis_core::sim::ScenarioFixture) -> ResolvedScenario {
    let mut config = fixture.config.clone();
    config.filter_enabled = false;
    let resolved = fixture.resolve().unwrap();
    ResolvedScenario::assemble(config, resolved.chain, resolved.scene).unwrap()
}

#[test]
fn backward_ood_fixture_with_filter_stays_safe_and_intervenes() {
    let fixture = &make_scenario_fixtures()[2];
    let log = fixture.resolve().unwrap().run().unwrap();
    assert!(
        log.summary.min_barrier >= -1e-3,
        "min barrier {} under the filter",
        log.summary.min_barrier
    );
    assert_eq!(log.summary.violation_count, 0);
    assert!(
        log.summary.intervention_rate > 0.0,
        "the backward push must trigger interventions"
    );
}

#[test]
fn backward_ood_fixture_without_filter_penetrates_the_wall() {
    let fixture = &make_scenario_fixtures()[2];
    let log = run_episode(&resolve_no_filter(fixture)).unwrap();
    assert!(
        log.summary.min_barrier < -0.05,
        "unfiltered run only reached {}",
        log.summary.min_barrier
    );
    assert!(log.summary.violation_count > 0);
}

#[test]
fn filtered_runs_never_violate_more_than_unfiltered_ones() {
    for fixture in make_scenario_fixtures() {
        let with = fixture.resolve().unwrap().run().unwrap();
        let without = run_episode(&resolve_no_filter(&fixture)).unwrap();
        assert!(
            with.summary.violation_count <= without.summary.violation_count,
            "{}: filter made things worse ({} vs {})",
            fixture.name(),
            with.summary.violation_count,
            without.summary.violation_count
        );
        let report = compare_runs(&with, &without).unwrap();
        assert_eq!(report.a.violation_count, with.summary.violation_count);
        // Human-readable rendering stays available.
        let text = format!("{report}");
        assert!(text.contains("min barrier"));
    }
}

#[test]
fn substep_displacements_sum_to_the_commanded_delta() {
    // Forward trace in free space: no constraint ever activates.
    let fixture = &scenario_iii_traces()[0];
    let resolved = fixture.resolve().unwrap();
    let log = resolved.run().unwrap();
    let substeps = resolved.config.substeps_per_action;
    let commanded = SpatialVector::from([0.01, 0.0, 0.0, 0.0, 0.0, 0.0]);

    let mut q_prev = JointConfig::new(resolved.config.initial_q).unwrap();
    for action_index in 0..resolved.config.steps {
        let mut achieved = SpatialVector::zeros();
        for sub in 0..substeps {
            let record = &log.records[action_index * substeps + sub];
            let q_next = JointConfig::new(record.q).unwrap();
            let dq: JointVector = q_next.as_vector() - q_prev.as_vector();
            let jac = geometric_jacobian(&resolved.chain, &q_prev);
            achieved += jac.entries * dq;
            q_prev = q_next;
        }
        let rel = (achieved - commanded).norm() / commanded.norm();
        assert!(
            rel < 1e-2,
            "action {action_index}: relative tracking error {rel:.3e}"
        );
    }
}

#[test]
fn free_space_traces_do_not_intervene() {
    for fixture in scenario_iii_traces() {
        let log = fixture.resolve().unwrap().run().unwrap();
        assert_eq!(log.summary.violation_count, 0);
        assert_eq!(log.summary.intervention_rate, 0.0, "{}", fixture.name());
        assert!(log.records.iter().all(|r| r.fault.is_none()));
    }
}

#[test]
fn csv_rendering_has_one_row_per_substep() {
    let fixture = &scenario_iii_traces()[1];
    let log = fixture.resolve().unwrap().run().unwrap();
    let csv = log.to_csv();
    let lines: Vec<&str> = csv.trim_end().lines().collect();
    assert_eq!(lines.len(), 1 + log.records.len());
    assert!(lines[0].starts_with("schema_version,step,q0"));
    let cols = lines[1].split(',').count();
    assert_eq!(cols, 16);
}

#[test]
fn json_roundtrip_preserves_the_log() {
    let fixture = &make_scenario_fixtures()[2];
    let log = fixture.resolve().unwrap().run().unwrap();
    let text = log.to_json();
    let back = aegis_core::sim::EpisodeLog::from_json(&text).unwrap();
    assert_eq!(back, log);
}

#[test]
fn final_ee_position_matches_final_record_state() {
    let fixture = &make_scenario_fixtures()[0];
    let resolved = fixture.resolve().unwrap();
    let log = resolved.run().unwrap();
    let q_final = JointConfig::new(log.records.last().unwrap().q).unwrap();
    let flange = forward_kinematics(&resolved.chain, &q_final)[DOF].translation;
    for i in 0..3 {
        assert_eq!(log.summary.final_ee_position[i], flange[i]);
    }
}
