use nalgebra::{Isometry3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rows of the arm Jacobian used by the manipulability measure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManipulabilityRows {
    /// Linear and angular velocity (6 rows).
    #[default]
    Full,
    /// Linear velocity only (3 rows).
    Position,
    /// Planar x/y linear velocity (2 rows), for planar test chains.
    PlanarXy,
}

impl ManipulabilityRows {
    pub fn indices(self) -> &'static [usize] {
        match self {
            ManipulabilityRows::Full => &[0, 1, 2, 3, 4, 5],
            ManipulabilityRows::Position => &[0, 1, 2],
            ManipulabilityRows::PlanarXy => &[0, 1],
        }
    }
}

/// One revolute joint: a fixed offset from the previous frame followed by a
/// rotation about `axis` (expressed in the offset frame).
#[derive(Clone, Debug, PartialEq)]
pub struct RevoluteJoint {
    pub name: String,
    pub origin: Isometry3<f64>,
    pub axis: Unit<Vector3<f64>>,
}

impl RevoluteJoint {
    pub fn new(name: impl Into<String>, origin: Isometry3<f64>, axis: Vector3<f64>) -> Self {
        RevoluteJoint {
            name: name.into(),
            origin,
            axis: Unit::new_normalize(axis),
        }
    }

    pub fn motion(&self, angle: f64) -> UnitQuaternion<f64> {
        UnitQuaternion::from_axis_angle(&self.axis, angle)
    }
}

/// Serial revolute chain mounted at a fixed pose on the mobile base.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmChain {
    /// Arm base frame relative to the mobile base frame.
    pub mount: Isometry3<f64>,
    pub joints: Vec<RevoluteJoint>,
    /// End-effector frame relative to the last joint frame.
    pub tool: Isometry3<f64>,
}

/// Frames of a chain evaluated at one configuration, all expressed in the
/// frame the chain was evaluated from.
#[derive(Clone, Debug)]
pub struct ChainFrames {
    /// Joint axes (unit vectors).
    pub axes: Vec<Vector3<f64>>,
    /// Points on each joint axis.
    pub origins: Vec<Vector3<f64>>,
    /// Frame attached to each joint after its rotation.
    pub links: Vec<Isometry3<f64>>,
    pub tip: Isometry3<f64>,
}

impl ArmChain {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    /// Walks the chain starting from `root` (the frame the mount is relative to).
    pub fn frames(&self, root: &Isometry3<f64>, q_n: &[f64]) -> ChainFrames {
        debug_assert_eq!(q_n.len(), self.joints.len());
        let n = self.joints.len();
        let mut axes = Vec::with_capacity(n);
        let mut origins = Vec::with_capacity(n);
        let mut links = Vec::with_capacity(n);
        let mut frame = root * self.mount;
        for (joint, &angle) in self.joints.iter().zip(q_n) {
            frame *= joint.origin;
            axes.push(frame.rotation * joint.axis.into_inner());
            origins.push(frame.translation.vector);
            frame *= Isometry3::from_parts(Translation3::identity(), joint.motion(angle));
            links.push(frame);
        }
        ChainFrames {
            axes,
            origins,
            links,
            tip: frame * self.tool,
        }
    }
}

/// Kinematic parameters of the differential-drive base and the arm.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(try_from = "GeometryDoc")]
pub struct RobotGeometry {
    /// Half wheel track (m).
    pub mu: f64,
    /// Offset between the base reference point and the wheel axle midpoint (m).
    pub rho: f64,
    pub wheel_radius: f64,
    pub arm: ArmChain,
    /// Per-joint (lower, upper) limits in radians.
    pub joint_limits: Vec<(f64, f64)>,
    pub manipulability_rows: ManipulabilityRows,
}

impl RobotGeometry {
    pub fn new(
        mu: f64,
        rho: f64,
        wheel_radius: f64,
        arm: ArmChain,
        joint_limits: Vec<(f64, f64)>,
        manipulability_rows: ManipulabilityRows,
    ) -> Result<Self> {
        let g = RobotGeometry {
            mu,
            rho,
            wheel_radius,
            arm,
            joint_limits,
            manipulability_rows,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "mu must be > 0, got {}",
                self.mu
            )));
        }
        if !(self.wheel_radius > 0.0 && self.wheel_radius.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "wheel_radius must be > 0, got {}",
                self.wheel_radius
            )));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "rho must be >= 0, got {}",
                self.rho
            )));
        }
        if self.joint_limits.len() != self.arm.dof() {
            return Err(Error::InvalidGeometry(format!(
                "{} joint limits for {} arm joints",
                self.joint_limits.len(),
                self.arm.dof()
            )));
        }
        for (i, &(lo, hi)) in self.joint_limits.iter().enumerate() {
            if !(lo < hi) {
                return Err(Error::InvalidGeometry(format!(
                    "joint {} limits must satisfy lower < upper, got ({lo}, {hi})",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn arm_dof(&self) -> usize {
        self.arm.dof()
    }

    /// Dimension of the generalized configuration, 5 + n.
    pub fn config_dim(&self) -> usize {
        5 + self.arm.dof()
    }

    /// Dimension of the actuated velocity, 2 + n.
    pub fn actuated_dim(&self) -> usize {
        2 + self.arm.dof()
    }

    /// R / (2 mu).
    pub fn wheel_ratio(&self) -> f64 {
        self.wheel_radius / (2.0 * self.mu)
    }
}

// ---- JSON document form ----

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OriginDoc {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rpy: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rpy_deg: Option<[f64; 3]>,
}

impl OriginDoc {
    pub fn to_isometry(&self) -> std::result::Result<Isometry3<f64>, String> {
        let rpy = match (self.rpy, self.rpy_deg) {
            (Some(_), Some(_)) => return Err("both rpy and rpy_deg given".into()),
            (Some(r), None) => r,
            (None, Some(d)) => d.map(f64::to_radians),
            (None, None) => [0.0; 3],
        };
        Ok(Isometry3::from_parts(
            Translation3::new(self.xyz[0], self.xyz[1], self.xyz[2]),
            UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]),
        ))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointDoc {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub origin: OriginDoc,
    pub axis: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryDoc {
    pub mu: f64,
    pub rho: f64,
    pub wheel_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm_dof: Option<usize>,
    #[serde(default)]
    pub arm_mount: OriginDoc,
    pub arm_chain: Vec<JointDoc>,
    #[serde(default)]
    pub tool: OriginDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_limits: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_limits_deg: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub manipulability_rows: ManipulabilityRows,
}

impl TryFrom<GeometryDoc> for RobotGeometry {
    type Error = Error;

    fn try_from(doc: GeometryDoc) -> Result<Self> {
        let bad = Error::InvalidGeometry;
        let mut joints = Vec::with_capacity(doc.arm_chain.len());
        for (i, j) in doc.arm_chain.iter().enumerate() {
            let axis = Vector3::from(j.axis);
            if axis.norm() < 1e-12 {
                return Err(bad(format!("joint {} has a zero axis", i + 1)));
            }
            let name = if j.name.is_empty() {
                format!("joint{}", i + 1)
            } else {
                j.name.clone()
            };
            joints.push(RevoluteJoint::new(
                name,
                j.origin.to_isometry().map_err(bad)?,
                axis,
            ));
        }
        if let Some(n) = doc.arm_dof {
            if n != joints.len() {
                return Err(bad(format!(
                    "arm_dof is {n} but arm_chain has {} joints",
                    joints.len()
                )));
            }
        }
        let limits: Vec<(f64, f64)> = match (doc.joint_limits, doc.joint_limits_deg) {
            (Some(_), Some(_)) => {
                return Err(bad("both joint_limits and joint_limits_deg given".into()))
            }
            (Some(l), None) => l.into_iter().map(|[a, b]| (a, b)).collect(),
            (None, Some(l)) => l
                .into_iter()
                .map(|[a, b]| (a.to_radians(), b.to_radians()))
                .collect(),
            (None, None) => return Err(bad("joint_limits missing".into())),
        };
        let arm = ArmChain {
            mount: doc.arm_mount.to_isometry().map_err(bad)?,
            joints,
            tool: doc.tool.to_isometry().map_err(bad)?,
        };
        RobotGeometry::new(
            doc.mu,
            doc.rho,
            doc.wheel_radius,
            arm,
            limits,
            doc.manipulability_rows,
        )
    }
}
