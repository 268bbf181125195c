//! Secondary joint-space tasks, executed in the null space of the
//! end-effector task: manipulability ascent and joint-limit repulsion.
//! Both act on arm joints only; wheel components are always zero.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::model::{arm_manipulability, GeneralizedState, RobotGeometry};
use crate::{Error, Result};

/// Magnitude profile of the joint-limit repulsion inside the active band.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepulsionProfile {
    /// `k_i d_i^2`; grows with distance from the limit and drops to zero at
    /// `d_i = gamma_start`.
    #[default]
    Quadratic,
    /// `k_i (1/d_i - 1/gamma_start)^2`; continuous, grows towards the limit.
    Inverse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintTaskParams {
    /// Manipulability gradient gain.
    pub k0: f64,
    /// Per-joint repulsion gains. A single entry is broadcast to every joint.
    pub k_joint: Vec<f64>,
    /// Activation distance to the nearest limit (rad).
    pub gamma_start: f64,
    /// Central-difference step for the manipulability gradient (rad).
    pub fd_step: f64,
    pub profile: RepulsionProfile,
    /// Upper bound on the repulsion magnitude of a single joint (rad/s).
    pub repulsion_cap: f64,
    pub manipulability_weight: f64,
    pub joint_limit_weight: f64,
    pub enable_manipulability: bool,
    pub enable_joint_limits: bool,
}

impl Default for ConstraintTaskParams {
    fn default() -> Self {
        ConstraintTaskParams {
            k0: 1.0,
            k_joint: vec![1.0],
            gamma_start: 0.2,
            fd_step: 1e-5,
            profile: RepulsionProfile::Quadratic,
            repulsion_cap: 100.0,
            manipulability_weight: 1.0,
            joint_limit_weight: 1.0,
            enable_manipulability: true,
            enable_joint_limits: true,
        }
    }
}

impl ConstraintTaskParams {
    pub fn validate(&self, arm_dof: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.k0 > 0.0) {
            return bad(format!("k0 must be > 0, got {}", self.k0));
        }
        if self.k_joint.len() != 1 && self.k_joint.len() != arm_dof {
            return bad(format!(
                "k_joint needs 1 or {arm_dof} entries, got {}",
                self.k_joint.len()
            ));
        }
        if self.k_joint.iter().any(|&k| !(k >= 0.0)) {
            return bad("k_joint entries must be >= 0".into());
        }
        if !(self.gamma_start > 0.0) {
            return bad(format!("gamma_start must be > 0, got {}", self.gamma_start));
        }
        if !(self.fd_step > 0.0 && self.fd_step < 1e-2) {
            return bad(format!(
                "fd_step must be in (0, 1e-2), got {}",
                self.fd_step
            ));
        }
        if !(self.repulsion_cap > 0.0) {
            return bad("repulsion_cap must be > 0".into());
        }
        Ok(())
    }

    pub fn joint_gain(&self, i: usize) -> f64 {
        if self.k_joint.len() == 1 {
            self.k_joint[0]
        } else {
            self.k_joint[i]
        }
    }
}

/// Secondary joint-space velocity `xi_dot_0` (2 + n, wheels first).
#[derive(Clone, Debug, PartialEq)]
pub struct SecondaryVelocity(pub DVector<f64>);

impl SecondaryVelocity {
    pub fn zeros(arm_dof: usize) -> Self {
        SecondaryVelocity(DVector::zeros(2 + arm_dof))
    }
}

/// `k0 (d omega / d q_n)^T` by central differences of the arm manipulability.
pub fn manipulability_task(
    q: &GeneralizedState,
    g: &RobotGeometry,
    params: &ConstraintTaskParams,
) -> SecondaryVelocity {
    let grad = manipulability_gradient(&q.q_n, g, params.fd_step);
    let mut out = SecondaryVelocity::zeros(q.q_n.len());
    for (i, d) in grad.iter().enumerate() {
        out.0[2 + i] = params.k0 * d;
    }
    out
}

pub fn manipulability_gradient(q_n: &[f64], g: &RobotGeometry, step: f64) -> Vec<f64> {
    let mut probe = q_n.to_vec();
    (0..q_n.len())
        .map(|i| {
            probe[i] = q_n[i] + step;
            let up = arm_manipulability(&probe, g);
            probe[i] = q_n[i] - step;
            let down = arm_manipulability(&probe, g);
            probe[i] = q_n[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Distance from a joint angle to its nearer limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitDistance {
    pub distance: f64,
    /// The angle lies outside `[lower, upper]`; `distance` is then zero.
    pub violated: bool,
}

pub fn joint_limit_distance(angle: f64, limits: (f64, f64)) -> LimitDistance {
    let (lo, hi) = limits;
    if angle < lo || angle > hi {
        return LimitDistance {
            distance: 0.0,
            violated: true,
        };
    }
    LimitDistance {
        distance: (angle - lo).abs().min((angle - hi).abs()),
        violated: false,
    }
}

fn repulsion_magnitude(d: f64, gain: f64, params: &ConstraintTaskParams) -> f64 {
    if d > params.gamma_start {
        return 0.0;
    }
    let m = match params.profile {
        RepulsionProfile::Quadratic => gain * d * d,
        RepulsionProfile::Inverse => {
            if d <= 0.0 {
                f64::INFINITY
            } else {
                let r = 1.0 / d - 1.0 / params.gamma_start;
                gain * r * r
            }
        }
    };
    m.min(params.repulsion_cap)
}

/// Repulsive velocity pushing each arm joint towards the middle of its range
/// once it is within `gamma_start` of a limit.
pub fn joint_limit_task(
    q: &GeneralizedState,
    g: &RobotGeometry,
    params: &ConstraintTaskParams,
) -> SecondaryVelocity {
    let mut out = SecondaryVelocity::zeros(q.q_n.len());
    for (i, (&angle, &limits)) in q.q_n.iter().zip(&g.joint_limits).enumerate() {
        let d = joint_limit_distance(angle, limits).distance;
        let mid = 0.5 * (limits.0 + limits.1);
        let dir = sign(mid - angle);
        if dir != 0.0 {
            out.0[2 + i] = dir * repulsion_magnitude(d, params.joint_gain(i), params);
        }
    }
    out
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Weighted sum of secondary velocities. Missing weights default to 1.
pub fn combine_secondary(
    tasks: &[SecondaryVelocity],
    weights: &[f64],
) -> Result<SecondaryVelocity> {
    let Some(first) = tasks.first() else {
        return Err(Error::InvalidParameter(
            "no secondary tasks to combine".into(),
        ));
    };
    if weights.len() > tasks.len() {
        return Err(Error::dim(
            "secondary task weights",
            tasks.len(),
            weights.len(),
        ));
    }
    let dim = first.0.len();
    let mut sum = DVector::zeros(dim);
    for (i, t) in tasks.iter().enumerate() {
        if t.0.len() != dim {
            return Err(Error::dim("secondary task", dim, t.0.len()));
        }
        let w = weights.get(i).copied().unwrap_or(1.0);
        sum.axpy(w, &t.0, 1.0);
    }
    Ok(SecondaryVelocity(sum))
}

/// Secondary velocity assembled from the enabled tasks in `params`.
pub fn secondary_velocity(
    q: &GeneralizedState,
    g: &RobotGeometry,
    params: &ConstraintTaskParams,
) -> SecondaryVelocity {
    let mut tasks = Vec::with_capacity(2);
    let mut weights = Vec::with_capacity(2);
    if params.enable_manipulability {
        tasks.push(manipulability_task(q, g, params));
        weights.push(params.manipulability_weight);
    }
    if params.enable_joint_limits {
        tasks.push(joint_limit_task(q, g, params));
        weights.push(params.joint_limit_weight);
    }
    if tasks.is_empty() {
        return SecondaryVelocity::zeros(q.q_n.len());
    }
    combine_secondary(&tasks, &weights).expect("tasks share the state dimension")
}
