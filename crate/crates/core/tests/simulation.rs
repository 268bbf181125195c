use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use nwmm::model::forward_kinematics;
use nwmm::sim::{run_scenario, step, Scenario, Target};
use nwmm::{ActuatedVelocity, GeneralizedState};

fn scenario(name: &str) -> Scenario {
    let path: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/scenarios")
        .join(name);
    Scenario::load(path).unwrap()
}

fn hold_start(s: &mut Scenario) {
    s.target = Target::Offset {
        translation: Vector3::zeros(),
        rpy: [0.0; 3],
    };
}

#[test]
fn target_at_start_pose_holds_still() {
    let mut s = scenario("pruning_approach.json");
    hold_start(&mut s);
    s.tasks.enable_manipulability = false;
    s.tasks.enable_joint_limits = false;
    let sum = run_scenario(&s).unwrap().summary().unwrap();
    assert!(sum.final_position_error < 1e-9);
    assert!(sum.final_orientation_error < 1e-9);
    assert!(sum.base_travel < 1e-9);
}

#[test]
fn self_motion_keeps_end_effector_near_start() {
    let mut s = scenario("pruning_approach.json");
    hold_start(&mut s);
    let log = run_scenario(&s).unwrap();
    let sum = log.summary().unwrap();
    // null-space motion is only first-order invisible, feedback removes the drift
    assert!(
        sum.final_position_error < 1e-6,
        "{}",
        sum.final_position_error
    );
    assert!(sum.base_travel < 0.1);
    let first = log.rows.first().unwrap().omega;
    let last = log.rows.last().unwrap().omega;
    assert!(last > first, "manipulability {first} -> {last}");
}

/// Open-loop rollout of a fixed rate profile.
fn rollout(dt: f64) -> GeneralizedState {
    let s = scenario("pruning_approach.json");
    let mut q = s.initial_state.clone();
    let steps = (2.0 / dt).round() as usize;
    // piecewise constant over 0.1 s blocks so both step sizes see the same profile
    let per_block = (0.1 / dt).round() as usize;
    for k in 0..steps {
        let tk = (k / per_block) as f64 * 0.1;
        let arm: Vec<f64> = (0..7).map(|i| 0.3 * (tk + i as f64).sin()).collect();
        let xi = ActuatedVelocity::from_parts([2.0 + tk.cos(), 1.0 - tk], &arm);
        q = step(&q, &xi, dt, &s.geometry);
    }
    q
}

#[test]
fn halving_dt_barely_changes_final_pose() {
    let g = scenario("pruning_approach.json").geometry;
    let a = forward_kinematics(&rollout(0.02), &g);
    let b = forward_kinematics(&rollout(0.01), &g);
    let dp = (a.position - b.position).norm();
    assert!(dp < 1e-6, "{dp:e}");
    assert!(a.orientation.angle_to(&b.orientation) < 1e-6);
}

#[test]
fn split_rate_controller_reaches_target() {
    let s = scenario("pruning_approach_split_rate.json");
    let log = run_scenario(&s).unwrap();
    let sum = log.summary().unwrap();
    assert!(sum.final_position_error < 5e-3);
    assert!(sum.final_pitch_error.to_degrees().abs() < 0.5);
    assert_eq!(sum.joint_limit_violations, 0);
    // wheel commands only change on base ticks (every 20 steps)
    for (k, pair) in log.rows.windows(2).enumerate() {
        if (k + 1) % 20 != 0 {
            assert_eq!(
                pair[0].xi_dot_cmd[..2],
                pair[1].xi_dot_cmd[..2],
                "row {}",
                k + 1
            );
        }
    }
}

#[test]
fn log_spans_phases_plus_settle() {
    let s = scenario("pruning_approach.json");
    let log = run_scenario(&s).unwrap();
    assert_eq!(log.rows.len(), 501);
    assert_eq!(log.rows[0].t, 0.0);
    assert!((log.rows.last().unwrap().t - 10.0).abs() < 1e-9);
    assert_eq!(log.segments.len(), 2);
}

#[test]
fn shipped_scenarios_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/scenarios");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let s = Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        s.validate().unwrap();
    }
}
