//! Closed-loop kinematic simulation of the approach task.
//!
//! Each tick samples the planned Cartesian reference, evaluates the secondary
//! tasks, resolves actuated rates and integrates `q_dot = S(q) xi_dot` with
//! RK4, holding the command constant over the tick.

mod check;
mod output;
mod plots;
mod scenario;

pub use check::{check_geometry, CheckItem, CheckReport};
pub use output::{csv_header, emit_csv, format_sig9, write_csv};
pub use plots::emit_plots;
pub use scenario::{Scenario, Target, DEFAULT_SETTLE, MAX_DT};

use log::{debug, info};
use nalgebra::DVector;

use crate::controller::{resolve_arm_rates, resolve_rates};
use crate::model::{
    forward_kinematics, lateral_residual, nullspace_basis, ActuatedVelocity, GeneralizedState,
    Pose, RobotGeometry,
};
use crate::tasks::secondary_velocity;
use crate::trajectory::{plan_approach, sample_plan, QuinticSegment};
use crate::Result;

/// Advances `q` by `dt` under constant actuated rates (classical RK4 on
/// `q_dot = S(q) xi_dot`).
pub fn step(
    q: &GeneralizedState,
    xi_dot: &ActuatedVelocity,
    dt: f64,
    g: &RobotGeometry,
) -> GeneralizedState {
    let f = |v: &DVector<f64>| {
        let s = GeneralizedState::from_vector(v).expect("state vector has base entries");
        nullspace_basis(&s, g) * &xi_dot.0
    };
    let q0 = q.to_vector();
    let k1 = f(&q0);
    let k2 = f(&(&q0 + &k1 * (0.5 * dt)));
    let k3 = f(&(&q0 + &k2 * (0.5 * dt)));
    let k4 = f(&(&q0 + &k3 * dt));
    let q1 = q0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    GeneralizedState::from_vector(&q1).expect("state vector has base entries")
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub state: GeneralizedState,
    pub xi_dot_cmd: Vec<f64>,
    pub ee_pose: Pose,
    pub tracking_error: [f64; 6],
    pub omega: f64,
    /// Lateral no-slip residual of `S(q) xi_dot_cmd`.
    pub constraint_residual: f64,
    pub damping_active: bool,
}

/// Time-indexed record of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimLog {
    pub arm_dof: usize,
    pub joint_limits: Vec<(f64, f64)>,
    pub target: Pose,
    pub segments: Vec<QuinticSegment>,
    pub rows: Vec<LogRow>,
}

impl SimLog {
    pub fn empty(arm_dof: usize, joint_limits: Vec<(f64, f64)>) -> Self {
        SimLog {
            arm_dof,
            joint_limits,
            target: Pose::identity(),
            segments: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn summary(&self) -> Option<RunSummary> {
        let last = self.rows.last()?;
        let pos_err = (self.target.position - last.ee_pose.position).norm();
        let ori_err = self.target.orientation.angle_to(&last.ee_pose.orientation);
        let pitch_err = {
            let d = self.target.rpy()[1] - last.ee_pose.rpy()[1];
            (d + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI
        }
        .abs();
        let mut violations = 0;
        let mut min_margin = f64::INFINITY;
        for row in &self.rows {
            for (&a, &(lo, hi)) in row.state.q_n.iter().zip(&self.joint_limits) {
                if a < lo || a > hi {
                    violations += 1;
                }
                min_margin = min_margin.min((a - lo).min(hi - a));
            }
        }
        Some(RunSummary {
            final_position_error: pos_err,
            final_orientation_error: ori_err,
            final_pitch_error: pitch_err,
            max_constraint_residual: self
                .rows
                .iter()
                .map(|r| r.constraint_residual)
                .fold(0.0, f64::max),
            joint_limit_violations: violations,
            min_limit_margin: min_margin,
            base_travel: ((last.state.x_m - self.rows[0].state.x_m).powi(2)
                + (last.state.y_m - self.rows[0].state.y_m).powi(2))
            .sqrt(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    /// Euclidean distance between final end-effector and target positions (m).
    pub final_position_error: f64,
    /// Angle of the relative rotation between final and target orientation (rad).
    pub final_orientation_error: f64,
    pub final_pitch_error: f64,
    pub max_constraint_residual: f64,
    /// Number of logged joint samples outside their limits.
    pub joint_limit_violations: usize,
    /// Smallest distance of any logged joint angle to its limits (negative when violated).
    pub min_limit_margin: f64,
    pub base_travel: f64,
}

/// Plans the approach and runs the closed loop until the phases plus the
/// settle margin have elapsed. Bit-deterministic for a given scenario.
pub fn run_scenario(s: &Scenario) -> Result<SimLog> {
    s.validate()?;
    let g = &s.geometry;
    let (start, target) = s.endpoints();
    let segments = plan_approach(&start, &target, s.t_translate, s.t_rotate)?;
    let steps = (s.duration() / s.dt).round() as usize;
    let base_ticks = s
        .controller
        .base_period
        .map(|p| (p / s.dt).round() as usize);
    info!(
        "running {} steps of {} s towards ({:.4}, {:.4}, {:.4})",
        steps, s.dt, target.position.x, target.position.y, target.position.z
    );

    let mut q = s.initial_state.clone();
    let mut rows = Vec::with_capacity(steps + 1);
    let mut held_wheels = [0.0; 2];
    for k in 0..=steps {
        let t = k as f64 * s.dt;
        let reference = sample_plan(&segments, t).expect("plan has segments");
        let xi0 = secondary_velocity(&q, g, &s.tasks);
        let out = match base_ticks {
            Some(every) if k % every != 0 => resolve_arm_rates(
                &q,
                g,
                &reference.pose,
                &reference.twist,
                &xi0,
                held_wheels,
                &s.controller,
            ),
            _ => resolve_rates(
                &q,
                g,
                &reference.pose,
                &reference.twist,
                &xi0,
                &s.controller,
            ),
        };
        held_wheels = out.xi_dot_cmd.wheels();
        let q_dot = nullspace_basis(&q, g) * &out.xi_dot_cmd.0;
        let d = &out.diagnostics;
        if d.damping_active {
            debug!("t={t:.3}: damping active, omega={:.3e}", d.manipulability);
        }
        rows.push(LogRow {
            t,
            state: q.clone(),
            xi_dot_cmd: out.xi_dot_cmd.0.iter().copied().collect(),
            ee_pose: forward_kinematics(&q, g),
            tracking_error: d.tracking_error.into(),
            omega: d.manipulability,
            constraint_residual: lateral_residual(q.phi, &q_dot, g.rho),
            damping_active: d.damping_active,
        });
        if k < steps {
            q = step(&q, &out.xi_dot_cmd, s.dt, g);
        }
    }
    Ok(SimLog {
        arm_dof: g.arm_dof(),
        joint_limits: g.joint_limits.clone(),
        target,
        segments,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArmChain, ManipulabilityRows};
    use approx::assert_abs_diff_eq;

    fn base_only(rho: f64) -> RobotGeometry {
        RobotGeometry::new(
            0.25,
            rho,
            0.125,
            ArmChain::planar(&[0.5]),
            vec![(-3.0, 3.0)],
            ManipulabilityRows::Full,
        )
        .unwrap()
    }

    #[test]
    fn zero_rates_hold_state() {
        let g = base_only(0.1);
        let q = GeneralizedState::new([0.3, 0.4, 1.0], [0.2, 0.1], vec![0.5]);
        assert_eq!(step(&q, &ActuatedVelocity::zeros(1), 0.02, &g), q);
    }

    #[test]
    fn straight_drive() {
        let g = base_only(0.0);
        let q = GeneralizedState::with_arm(vec![0.0]);
        let q1 = step(
            &q,
            &ActuatedVelocity::from_parts([1.0, 1.0], &[0.0]),
            1.0,
            &g,
        );
        assert_abs_diff_eq!(q1.x_m, 0.125, epsilon = 1e-15);
        assert_eq!(q1.y_m, 0.0);
        assert_eq!(q1.phi, 0.0);
        assert_eq!((q1.theta_l, q1.theta_r), (1.0, 1.0));
    }

    #[test]
    fn spin_in_place() {
        let g = base_only(0.0);
        let q = GeneralizedState::with_arm(vec![0.0]);
        let q1 = step(
            &q,
            &ActuatedVelocity::from_parts([1.0, -1.0], &[0.0]),
            1.0,
            &g,
        );
        assert_abs_diff_eq!(q1.x_m, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q1.y_m, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q1.phi, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn arc_matches_closed_form() {
        // constant wheel rates trace a circular arc of the reference point
        let g = base_only(0.0);
        let q = GeneralizedState::with_arm(vec![0.0]);
        let xi = ActuatedVelocity::from_parts([2.0, 1.0], &[0.0]);
        let mut s = q.clone();
        for _ in 0..100 {
            s = step(&s, &xi, 0.01, &g);
        }
        let c = g.wheel_ratio();
        let w = c * (2.0 - 1.0);
        let v = c * g.mu * (2.0 + 1.0);
        assert_abs_diff_eq!(s.phi, w, epsilon = 1e-14);
        assert_abs_diff_eq!(s.x_m, v / w * w.sin(), epsilon = 1e-10);
        assert_abs_diff_eq!(s.y_m, v / w * (1.0 - w.cos()), epsilon = 1e-10);
    }
}
