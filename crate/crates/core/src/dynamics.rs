//! Dynamics of the constrained system reduced onto actuated coordinates.
//!
//! With `q_dot = S(q) xi_dot`, the constraint forces drop out after
//! premultiplying by `S^T`:
//!
//! ```text
//! M_xi = S^T M S,   V_xi = S^T (M S_dot + V S),   G_xi = S^T G,   u = S^T B tau
//! ```
//!
//! This module is for model verification; the controller is velocity based.
//! Disturbance torques are taken as zero.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::model::{nullspace_basis, GeneralizedState, RobotGeometry};
use crate::{Error, Result};

/// Diagonal regularization added to the sample model's inertia.
pub const MASS_REGULARIZATION: f64 = 1e-9;
/// Step of the directional central difference used for `S_dot` and `J_dot`.
pub const RATE_FD_STEP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct FullSpaceDynamics {
    pub inertia: DMatrix<f64>,
    pub coriolis: DMatrix<f64>,
    pub gravity: DVector<f64>,
    pub input_map: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedDynamics {
    pub inertia_xi: DMatrix<f64>,
    pub coriolis_xi: DMatrix<f64>,
    pub gravity_xi: DVector<f64>,
}

impl ReducedDynamics {
    pub fn kinetic_energy(&self, xi_dot: &DVector<f64>) -> f64 {
        0.5 * xi_dot.dot(&(&self.inertia_xi * xi_dot))
    }
}

fn is_symmetric_pd(m: &DMatrix<f64>) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-10 * scale {
        return false;
    }
    m.clone().cholesky().is_some()
}

fn perturbed(q: &GeneralizedState, q_dot: &DVector<f64>, h: f64) -> Result<GeneralizedState> {
    GeneralizedState::from_vector(&(q.to_vector() + q_dot * h))
}

/// `S_dot` by a central difference of `S` along `q_dot`.
pub fn nullspace_basis_rate(
    q: &GeneralizedState,
    q_dot: &DVector<f64>,
    g: &RobotGeometry,
) -> Result<DMatrix<f64>> {
    if q_dot.len() != g.config_dim() {
        return Err(Error::dim(
            "generalized velocity",
            g.config_dim(),
            q_dot.len(),
        ));
    }
    let h = RATE_FD_STEP;
    let up = nullspace_basis(&perturbed(q, q_dot, h)?, g);
    let down = nullspace_basis(&perturbed(q, q_dot, -h)?, g);
    Ok((up - down) / (2.0 * h))
}

/// Projects full-space dynamics onto actuated coordinates.
pub fn reduce_dynamics(
    q: &GeneralizedState,
    q_dot: &DVector<f64>,
    full: &FullSpaceDynamics,
    g: &RobotGeometry,
) -> Result<ReducedDynamics> {
    let dim = g.config_dim();
    if full.inertia.shape() != (dim, dim) {
        return Err(Error::dim("inertia rows", dim, full.inertia.nrows()));
    }
    if full.coriolis.shape() != (dim, dim) {
        return Err(Error::dim("coriolis rows", dim, full.coriolis.nrows()));
    }
    if full.gravity.len() != dim {
        return Err(Error::dim("gravity vector", dim, full.gravity.len()));
    }
    if !is_symmetric_pd(&full.inertia) {
        return Err(Error::NotPositiveDefinite);
    }
    let s = nullspace_basis(q, g);
    let s_dot = nullspace_basis_rate(q, q_dot, g)?;
    let st = s.transpose();
    Ok(ReducedDynamics {
        inertia_xi: &st * &full.inertia * &s,
        coriolis_xi: &st * (&full.inertia * s_dot + &full.coriolis * &s),
        gravity_xi: &st * &full.gravity,
    })
}

/// Actuator torques mapped onto actuated coordinates, `u = S^T B tau`.
pub fn reduced_input(
    q: &GeneralizedState,
    full: &FullSpaceDynamics,
    tau: &DVector<f64>,
    g: &RobotGeometry,
) -> Result<DVector<f64>> {
    if tau.len() != full.input_map.ncols() {
        return Err(Error::dim(
            "torque vector",
            full.input_map.ncols(),
            tau.len(),
        ));
    }
    Ok(nullspace_basis(q, g).transpose() * (&full.input_map * tau))
}

/// Parameters of the sample model: a planar rigid base with its mass at
/// `(x_m, y_m)`, spinning wheels, and one point mass per arm link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidBodyParams {
    pub base_mass: f64,
    /// Yaw inertia of the base (kg m^2).
    pub base_inertia: f64,
    /// Spin inertia of each wheel (kg m^2).
    pub wheel_inertia: f64,
    /// Point mass at the distal end of each arm link (kg).
    pub link_masses: Vec<f64>,
    /// Gravitational acceleration along -z (m/s^2).
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

fn default_gravity() -> f64 {
    9.81
}

impl RigidBodyParams {
    pub fn validate(&self, arm_dof: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.base_mass > 0.0 && self.base_inertia > 0.0 && self.wheel_inertia > 0.0) {
            return bad("base mass, base inertia and wheel inertia must be > 0".into());
        }
        if self.link_masses.len() != arm_dof {
            return bad(format!(
                "{} link masses for {arm_dof} arm joints",
                self.link_masses.len()
            ));
        }
        if self.link_masses.iter().any(|&m| !(m >= 0.0)) {
            return bad("link masses must be >= 0".into());
        }
        if !self.gravity.is_finite() {
            return bad("gravity must be finite".into());
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        RigidBodyParams {
            base_mass: self.base_mass * factor,
            base_inertia: self.base_inertia * factor,
            wheel_inertia: self.wheel_inertia * factor,
            link_masses: self.link_masses.iter().map(|m| m * factor).collect(),
            gravity: self.gravity,
        }
    }
}

/// Positions of the link point masses and their 3 x (5+n) Jacobians.
fn point_mass_jacobians(q: &GeneralizedState, g: &RobotGeometry) -> Vec<DMatrix<f64>> {
    let frames = g.arm.frames(&q.base_isometry(), &q.q_n);
    let n = g.arm_dof();
    let base = Vector3::new(q.x_m, q.y_m, 0.0);
    (0..n)
        .map(|i| {
            let p = if i + 1 < n {
                frames.origins[i + 1]
            } else {
                frames.tip.translation.vector
            };
            let mut j = DMatrix::zeros(3, 5 + n);
            j[(0, 0)] = 1.0;
            j[(1, 1)] = 1.0;
            let lever = p - base;
            j[(0, 2)] = -lever.y;
            j[(1, 2)] = lever.x;
            for k in 0..=i {
                let col = frames.axes[k].cross(&(p - frames.origins[k]));
                j.fixed_view_mut::<3, 1>(0, 5 + k).copy_from(&col);
            }
            j
        })
        .collect()
}

/// Sample full-space model. Inertia is `sum m_i J_i^T J_i` plus the base and
/// wheel terms; the Coriolis matrix `sum m_i J_i^T J_i_dot` makes
/// `M_dot - 2V` skew-symmetric, so free motion conserves kinetic energy.
pub fn sample_rigid_body_model(
    q: &GeneralizedState,
    q_dot: &DVector<f64>,
    g: &RobotGeometry,
    params: &RigidBodyParams,
) -> Result<FullSpaceDynamics> {
    params.validate(g.arm_dof())?;
    let dim = g.config_dim();
    if q.arm_dof() != g.arm_dof() {
        return Err(Error::dim("arm joints in state", g.arm_dof(), q.arm_dof()));
    }
    if q_dot.len() != dim {
        return Err(Error::dim("generalized velocity", dim, q_dot.len()));
    }
    let jac = point_mass_jacobians(q, g);
    let h = RATE_FD_STEP;
    let jac_up = point_mass_jacobians(&perturbed(q, q_dot, h)?, g);
    let jac_down = point_mass_jacobians(&perturbed(q, q_dot, -h)?, g);

    let mut inertia = DMatrix::identity(dim, dim) * MASS_REGULARIZATION;
    inertia[(0, 0)] += params.base_mass;
    inertia[(1, 1)] += params.base_mass;
    inertia[(2, 2)] += params.base_inertia;
    inertia[(3, 3)] += params.wheel_inertia;
    inertia[(4, 4)] += params.wheel_inertia;
    let mut coriolis = DMatrix::zeros(dim, dim);
    let mut gravity = DVector::zeros(dim);
    for (i, &m) in params.link_masses.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let jt = jac[i].transpose();
        inertia += &jt * &jac[i] * m;
        let j_dot = (&jac_up[i] - &jac_down[i]) / (2.0 * h);
        coriolis += &jt * j_dot * m;
        gravity += jac[i].row(2).transpose() * (m * params.gravity);
    }
    // symmetrize away rounding in the outer products
    let inertia = (&inertia + inertia.transpose()) * 0.5;
    let mut input_map = DMatrix::zeros(dim, 2 + g.arm_dof());
    input_map
        .view_mut((3, 0), (2 + g.arm_dof(), 2 + g.arm_dof()))
        .fill_with_identity();
    Ok(FullSpaceDynamics {
        inertia,
        coriolis,
        gravity,
        input_map,
    })
}

/// `xi_ddot = M_xi^-1 (u - V_xi xi_dot - G_xi)` for the sample model.
pub fn reduced_acceleration(
    q: &GeneralizedState,
    xi_dot: &DVector<f64>,
    tau: &DVector<f64>,
    g: &RobotGeometry,
    params: &RigidBodyParams,
) -> Result<DVector<f64>> {
    let s = nullspace_basis(q, g);
    let q_dot = &s * xi_dot;
    let full = sample_rigid_body_model(q, &q_dot, g, params)?;
    let red = reduce_dynamics(q, &q_dot, &full, g)?;
    let u = reduced_input(q, &full, tau, g)?;
    let rhs = u - &red.coriolis_xi * xi_dot - &red.gravity_xi;
    red.inertia_xi
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(Error::NotPositiveDefinite)
}

/// State of a reduced-dynamics rollout.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicState {
    pub q: GeneralizedState,
    pub xi_dot: DVector<f64>,
}

/// One RK4 step of `q_dot = S xi_dot`, `xi_ddot` from [`reduced_acceleration`],
/// with constant torque `tau`.
pub fn rollout_step(
    state: &DynamicState,
    tau: &DVector<f64>,
    dt: f64,
    g: &RobotGeometry,
    params: &RigidBodyParams,
) -> Result<DynamicState> {
    let deriv = |q: &DVector<f64>, v: &DVector<f64>| -> Result<(DVector<f64>, DVector<f64>)> {
        let qs = GeneralizedState::from_vector(q)?;
        Ok((
            nullspace_basis(&qs, g) * v,
            reduced_acceleration(&qs, v, tau, g, params)?,
        ))
    };
    let q0 = state.q.to_vector();
    let v0 = &state.xi_dot;
    let (k1q, k1v) = deriv(&q0, v0)?;
    let (k2q, k2v) = deriv(&(&q0 + &k1q * (0.5 * dt)), &(v0 + &k1v * (0.5 * dt)))?;
    let (k3q, k3v) = deriv(&(&q0 + &k2q * (0.5 * dt)), &(v0 + &k2v * (0.5 * dt)))?;
    let (k4q, k4v) = deriv(&(&q0 + &k3q * dt), &(v0 + &k3v * dt))?;
    let q1 = &q0 + (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (dt / 6.0);
    let v1 = v0 + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
    Ok(DynamicState {
        q: GeneralizedState::from_vector(&q1)?,
        xi_dot: v1,
    })
}

/// Kinetic energy `0.5 xi_dot^T M_xi xi_dot` of the sample model.
pub fn kinetic_energy(
    state: &DynamicState,
    g: &RobotGeometry,
    params: &RigidBodyParams,
) -> Result<f64> {
    let q_dot = nullspace_basis(&state.q, g) * &state.xi_dot;
    let full = sample_rigid_body_model(&state.q, &q_dot, g, params)?;
    let red = reduce_dynamics(&state.q, &q_dot, &full, g)?;
    Ok(red.kinetic_energy(&state.xi_dot))
}
