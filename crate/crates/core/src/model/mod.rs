//! Constrained kinematics of the wheeled mobile manipulator.
//!
//! Generalized coordinates are ordered `(x_m, y_m, phi, theta_l, theta_r,
//! q_1..q_n)`; actuated rates are `(theta_l_dot, theta_r_dot, q_1_dot..)`.
//! Under this labeling the heading rate is `phi_dot = c (theta_l_dot -
//! theta_r_dot)` with `c = R / (2 mu)`.

mod geometry;
mod state;

pub use geometry::{
    ArmChain, ChainFrames, GeometryDoc, JointDoc, ManipulabilityRows, OriginDoc, RevoluteJoint,
    RobotGeometry,
};
pub use state::{ActuatedVelocity, GeneralizedState, Pose, PoseDoc};

use nalgebra::{DMatrix, DVector, Isometry3, Translation3, Vector3};

use crate::{Error, Result};

impl ArmChain {
    /// Planar chain of z-axis revolute joints with links along x.
    pub fn planar(link_lengths: &[f64]) -> Self {
        let mut joints = Vec::with_capacity(link_lengths.len());
        let mut offset = 0.0;
        for (i, &l) in link_lengths.iter().enumerate() {
            let origin = Isometry3::translation(offset, 0.0, 0.0);
            joints.push(RevoluteJoint::new(
                format!("joint{}", i + 1),
                origin,
                Vector3::z(),
            ));
            offset = l;
        }
        ArmChain {
            mount: Isometry3::identity(),
            joints,
            tool: Isometry3::from_parts(Translation3::new(offset, 0.0, 0.0), Default::default()),
        }
    }
}

fn check_arm(q: &GeneralizedState, g: &RobotGeometry) {
    assert_eq!(
        q.q_n.len(),
        g.arm_dof(),
        "state has {} arm joints, geometry has {}",
        q.q_n.len(),
        g.arm_dof()
    );
}

/// Constraint matrix `A(q)` (3 x (5+n)) with `A(q) q_dot = 0`.
///
/// Row 0 is the lateral no-slip constraint, rows 1 and 2 the rolling
/// constraints of the left and right wheel.
pub fn constraint_matrix(q: &GeneralizedState, g: &RobotGeometry) -> DMatrix<f64> {
    let (s, c) = q.phi.sin_cos();
    let (mu, rho, r) = (g.mu, g.rho, g.wheel_radius);
    let mut a = DMatrix::zeros(3, g.config_dim());
    a[(0, 0)] = -s;
    a[(0, 1)] = c;
    a[(0, 2)] = -rho;
    a[(1, 0)] = -c;
    a[(1, 1)] = -s;
    a[(1, 2)] = -mu;
    a[(1, 3)] = r;
    a[(2, 0)] = -c;
    a[(2, 1)] = -s;
    a[(2, 2)] = mu;
    a[(2, 4)] = r;
    a
}

/// Null-space basis `S(q)` ((5+n) x (2+n)) mapping actuated rates to
/// generalized velocities; `A(q) S(q) = 0`.
pub fn nullspace_basis(q: &GeneralizedState, g: &RobotGeometry) -> DMatrix<f64> {
    let (s, c) = q.phi.sin_cos();
    let (mu, rho) = (g.mu, g.rho);
    let k = g.wheel_ratio();
    let n = g.arm_dof();
    let mut m = DMatrix::zeros(5 + n, 2 + n);
    m[(0, 0)] = k * (mu * c - rho * s);
    m[(0, 1)] = k * (mu * c + rho * s);
    m[(1, 0)] = k * (mu * s + rho * c);
    m[(1, 1)] = k * (mu * s - rho * c);
    m[(2, 0)] = k;
    m[(2, 1)] = -k;
    m[(3, 0)] = 1.0;
    m[(4, 1)] = 1.0;
    for i in 0..n {
        m[(5 + i, 2 + i)] = 1.0;
    }
    m
}

/// Generalized velocity `q_dot = S(q) xi_dot`.
pub fn lift_velocity(
    q: &GeneralizedState,
    xi_dot: &ActuatedVelocity,
    g: &RobotGeometry,
) -> Result<DVector<f64>> {
    if q.arm_dof() != g.arm_dof() {
        return Err(Error::dim("arm joints in state", g.arm_dof(), q.arm_dof()));
    }
    if xi_dot.len() != g.actuated_dim() {
        return Err(Error::dim(
            "actuated velocity",
            g.actuated_dim(),
            xi_dot.len(),
        ));
    }
    Ok(nullspace_basis(q, g) * &xi_dot.0)
}

/// Residual of the lateral no-slip constraint for a generalized velocity.
pub fn lateral_residual(phi: f64, q_dot: &DVector<f64>, rho: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    (-q_dot[0] * s + q_dot[1] * c - rho * q_dot[2]).abs()
}

/// End-effector pose in the world frame.
pub fn forward_kinematics(q: &GeneralizedState, g: &RobotGeometry) -> Pose {
    check_arm(q, g);
    let frames = g.arm.frames(&q.base_isometry(), &q.q_n);
    Pose::from_isometry(&frames.tip)
}

/// Geometric Jacobian of the end effector with respect to all generalized
/// coordinates (6 x (5+n)), linear velocity over angular velocity, world frame.
pub fn configuration_jacobian(q: &GeneralizedState, g: &RobotGeometry) -> DMatrix<f64> {
    check_arm(q, g);
    let frames = g.arm.frames(&q.base_isometry(), &q.q_n);
    let tip = frames.tip.translation.vector;
    let n = g.arm_dof();
    let mut j = DMatrix::zeros(6, 5 + n);
    j[(0, 0)] = 1.0;
    j[(1, 1)] = 1.0;
    // heading: rotation about world z through the base reference point
    let lever = tip - Vector3::new(q.x_m, q.y_m, 0.0);
    j[(0, 2)] = -lever.y;
    j[(1, 2)] = lever.x;
    j[(5, 2)] = 1.0;
    // wheel columns (3, 4) stay zero
    for (i, (axis, origin)) in frames.axes.iter().zip(&frames.origins).enumerate() {
        let lin = axis.cross(&(tip - origin));
        j.fixed_view_mut::<3, 1>(0, 5 + i).copy_from(&lin);
        j.fixed_view_mut::<3, 1>(3, 5 + i).copy_from(axis);
    }
    j
}

/// Whole-body Jacobian `J_xi = J_q S` (6 x (2+n)) from actuated rates to the
/// end-effector twist.
pub fn whole_body_jacobian(q: &GeneralizedState, g: &RobotGeometry) -> DMatrix<f64> {
    configuration_jacobian(q, g) * nullspace_basis(q, g)
}

/// Arm-only geometric Jacobian (6 x n) expressed in the mobile base frame.
pub fn arm_jacobian(q_n: &[f64], g: &RobotGeometry) -> DMatrix<f64> {
    assert_eq!(q_n.len(), g.arm_dof(), "arm joint count mismatch");
    let frames = g.arm.frames(&Isometry3::identity(), q_n);
    let tip = frames.tip.translation.vector;
    let mut j = DMatrix::zeros(6, q_n.len());
    for (i, (axis, origin)) in frames.axes.iter().zip(&frames.origins).enumerate() {
        j.fixed_view_mut::<3, 1>(0, i)
            .copy_from(&axis.cross(&(tip - origin)));
        j.fixed_view_mut::<3, 1>(3, i).copy_from(axis);
    }
    j
}

/// Manipulability `sqrt(det(J J^T))` of the arm Jacobian restricted to the
/// geometry's manipulability rows.
///
/// Computed as the product of singular values; zero when the selected
/// Jacobian has more rows than columns.
pub fn arm_manipulability(q_n: &[f64], g: &RobotGeometry) -> f64 {
    let full = arm_jacobian(q_n, g);
    let rows = g.manipulability_rows.indices();
    if rows.len() > full.ncols() {
        return 0.0;
    }
    let j = full.select_rows(rows);
    j.singular_values().iter().product::<f64>().abs()
}
