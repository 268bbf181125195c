//! Resolved-rate whole-body controller.
//!
//! The end-effector task is solved through the (damped) pseudoinverse of the
//! whole-body Jacobian, and the secondary velocity is projected through
//! `I - J^+ J` built from the undamped pseudoinverse, so it produces no
//! end-effector motion.

use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::model::{
    arm_manipulability, forward_kinematics, whole_body_jacobian, ActuatedVelocity,
    GeneralizedState, Pose, RobotGeometry,
};
use crate::tasks::SecondaryVelocity;
use crate::{Error, Result};

/// Singular values at or below this are treated as zero by the undamped inverse.
pub const SVD_TRUNCATION: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlParams {
    /// Position feedback gain (1/s).
    pub kp_pos: f64,
    /// Orientation feedback gain (1/s).
    pub kp_ori: f64,
    pub damping_lambda: f64,
    /// Singular values below this are inverted with damping.
    pub sigma_min_threshold: f64,
    /// Per-actuator rate limits (rad/s), wheels first. One entry is broadcast.
    pub rate_limits: Vec<f64>,
    /// When set, wheel commands are refreshed only every `base_period`
    /// seconds and held in between, while the arm is re-solved every tick.
    pub base_period: Option<f64>,
}

impl Default for ControlParams {
    fn default() -> Self {
        ControlParams {
            kp_pos: 2.0,
            kp_ori: 2.0,
            damping_lambda: 0.05,
            sigma_min_threshold: 0.02,
            rate_limits: vec![10.0],
            base_period: None,
        }
    }
}

impl ControlParams {
    pub fn validate(&self, actuated_dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.kp_pos >= 0.0 && self.kp_ori >= 0.0) {
            return bad("feedback gains must be >= 0".into());
        }
        if !(self.damping_lambda >= 0.0) || !(self.sigma_min_threshold >= 0.0) {
            return bad("damping_lambda and sigma_min_threshold must be >= 0".into());
        }
        if self.rate_limits.len() != 1 && self.rate_limits.len() != actuated_dim {
            return bad(format!(
                "rate_limits needs 1 or {actuated_dim} entries, got {}",
                self.rate_limits.len()
            ));
        }
        if self.rate_limits.iter().any(|&r| !(r > 0.0)) {
            return bad("rate_limits must be > 0".into());
        }
        if let Some(p) = self.base_period {
            if !(p > 0.0) {
                return bad(format!("base_period must be > 0, got {p}"));
            }
        }
        Ok(())
    }

    pub fn rate_limit(&self, i: usize) -> f64 {
        if self.rate_limits.len() == 1 {
            self.rate_limits[0]
        } else {
            self.rate_limits[i]
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub manipulability: f64,
    /// Position error over rotation-vector orientation error.
    pub tracking_error: Vector6<f64>,
    /// Norm of the projected secondary velocity.
    pub null_space_norm: f64,
    pub damping_active: bool,
    /// Factor (<= 1) applied by rate saturation.
    pub saturation_scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlOutput {
    pub xi_dot_cmd: ActuatedVelocity,
    pub diagnostics: Diagnostics,
}

/// Pseudoinverse together with the conditioning information used to build it.
#[derive(Clone, Debug)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    pub sigma_min: f64,
    pub damped: bool,
}

/// SVD pseudoinverse; singular values below `threshold` are inverted as
/// `s / (s^2 + lambda^2)`.
pub fn damped_pseudoinverse(j: &DMatrix<f64>, lambda: f64, threshold: f64) -> PseudoInverse {
    let (rows, cols) = j.shape();
    if rows == 0 || cols == 0 {
        return PseudoInverse {
            matrix: DMatrix::zeros(cols, rows),
            sigma_min: 0.0,
            damped: false,
        };
    }
    let svd = j.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut sigma_min = f64::INFINITY;
    let mut damped = false;
    let mut inv = DVector::zeros(svd.singular_values.len());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        sigma_min = sigma_min.min(s);
        inv[k] = if s < threshold {
            damped = true;
            let den = s * s + lambda * lambda;
            if lambda == 0.0 && s <= SVD_TRUNCATION || den == 0.0 {
                0.0
            } else {
                s / den
            }
        } else if s <= SVD_TRUNCATION {
            0.0
        } else {
            1.0 / s
        };
    }
    // V diag(inv) U^T
    let mut vs = v_t.transpose();
    for (k, mut col) in vs.column_iter_mut().enumerate() {
        col *= inv[k];
    }
    PseudoInverse {
        matrix: vs * u.transpose(),
        sigma_min,
        damped: damped && lambda > 0.0,
    }
}

pub fn pseudoinverse(j: &DMatrix<f64>, params: &ControlParams) -> DMatrix<f64> {
    damped_pseudoinverse(j, params.damping_lambda, params.sigma_min_threshold).matrix
}

/// Moore-Penrose pseudoinverse without damping (singular values at or below
/// [`SVD_TRUNCATION`] are dropped).
pub fn exact_pseudoinverse(j: &DMatrix<f64>) -> DMatrix<f64> {
    damped_pseudoinverse(j, 0.0, 0.0).matrix
}

/// Orthogonal projector `I - J^+ J` onto the null space of `j`.
pub fn null_projector(j: &DMatrix<f64>) -> DMatrix<f64> {
    let n = j.ncols();
    DMatrix::identity(n, n) - exact_pseudoinverse(j) * j
}

/// Position difference over the rotation vector of `R_des R_cur^T`.
pub fn pose_error(desired: &Pose, current: &Pose) -> Vector6<f64> {
    let dp = desired.position - current.position;
    let rot: Vector3<f64> = (desired.orientation * current.orientation.inverse()).scaled_axis();
    Vector6::new(dp.x, dp.y, dp.z, rot.x, rot.y, rot.z)
}

fn feedback_twist(
    error: &Vector6<f64>,
    v_des: &Vector6<f64>,
    params: &ControlParams,
) -> DVector<f64> {
    let mut x = DVector::zeros(6);
    for i in 0..3 {
        x[i] = v_des[i] + params.kp_pos * error[i];
        x[3 + i] = v_des[3 + i] + params.kp_ori * error[3 + i];
    }
    x
}

/// Uniformly scales `v` so no entry exceeds its limit; returns the factor.
fn saturate(v: &mut DVector<f64>, limit: impl Fn(usize) -> f64) -> f64 {
    let worst = v
        .iter()
        .enumerate()
        .map(|(i, x)| x.abs() / limit(i))
        .fold(0.0, f64::max);
    if worst > 1.0 {
        *v /= worst;
        1.0 / worst
    } else {
        1.0
    }
}

/// Actuated rates tracking `(x_des, v_des)` with `xi_dot_0` in the null space.
pub fn resolve_rates(
    q: &GeneralizedState,
    g: &RobotGeometry,
    x_des: &Pose,
    v_des: &Vector6<f64>,
    xi_dot_0: &SecondaryVelocity,
    params: &ControlParams,
) -> ControlOutput {
    let current = forward_kinematics(q, g);
    let error = pose_error(x_des, &current);
    let x_cmd = feedback_twist(&error, v_des, params);
    let j = whole_body_jacobian(q, g);
    let pinv = damped_pseudoinverse(&j, params.damping_lambda, params.sigma_min_threshold);
    let null_part = null_projector(&j) * &xi_dot_0.0;
    let mut xi = &pinv.matrix * x_cmd + &null_part;
    let scale = saturate(&mut xi, |i| params.rate_limit(i));
    ControlOutput {
        xi_dot_cmd: ActuatedVelocity(xi),
        diagnostics: Diagnostics {
            manipulability: arm_manipulability(&q.q_n, g),
            tracking_error: error,
            null_space_norm: null_part.norm(),
            damping_active: pinv.damped,
            saturation_scale: scale,
        },
    }
}

/// Arm-only resolution while the wheels are held at `wheels`: the wheel
/// contribution is removed from the task and the arm solves the remainder,
/// with the arm part of `xi_dot_0` projected into the arm Jacobian null space.
pub fn resolve_arm_rates(
    q: &GeneralizedState,
    g: &RobotGeometry,
    x_des: &Pose,
    v_des: &Vector6<f64>,
    xi_dot_0: &SecondaryVelocity,
    wheels: [f64; 2],
    params: &ControlParams,
) -> ControlOutput {
    let current = forward_kinematics(q, g);
    let error = pose_error(x_des, &current);
    let x_cmd = feedback_twist(&error, v_des, params);
    let j = whole_body_jacobian(q, g);
    let j_wheels = j.columns(0, 2);
    let j_arm = j.columns(2, g.arm_dof()).into_owned();
    let residual = x_cmd - j_wheels * DVector::from_column_slice(&wheels);
    let pinv = damped_pseudoinverse(&j_arm, params.damping_lambda, params.sigma_min_threshold);
    let secondary = xi_dot_0.0.rows(2, g.arm_dof()).into_owned();
    let null_part = null_projector(&j_arm) * secondary;
    let mut arm = &pinv.matrix * residual + &null_part;
    let scale = saturate(&mut arm, |i| params.rate_limit(i + 2));
    ControlOutput {
        xi_dot_cmd: ActuatedVelocity::from_parts(wheels, arm.as_slice()),
        diagnostics: Diagnostics {
            manipulability: arm_manipulability(&q.q_n, g),
            tracking_error: error,
            null_space_norm: null_part.norm(),
            damping_active: pinv.damped,
            saturation_scale: scale,
        },
    }
}
