use nalgebra::{DVector, Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Full configuration `q = (q_m, q_w, q_n)`: base pose, wheel spin angles and
/// arm joint angles. `phi` is kept unwrapped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedState {
    pub x_m: f64,
    pub y_m: f64,
    pub phi: f64,
    pub theta_l: f64,
    pub theta_r: f64,
    pub q_n: Vec<f64>,
}

impl GeneralizedState {
    pub fn new(base: [f64; 3], wheels: [f64; 2], q_n: Vec<f64>) -> Self {
        GeneralizedState {
            x_m: base[0],
            y_m: base[1],
            phi: base[2],
            theta_l: wheels[0],
            theta_r: wheels[1],
            q_n,
        }
    }

    /// Base at the origin, wheels at zero, arm at `q_n`.
    pub fn with_arm(q_n: Vec<f64>) -> Self {
        Self::new([0.0; 3], [0.0; 2], q_n)
    }

    pub fn arm_dof(&self) -> usize {
        self.q_n.len()
    }

    pub fn dim(&self) -> usize {
        5 + self.q_n.len()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[0] = self.x_m;
        v[1] = self.y_m;
        v[2] = self.phi;
        v[3] = self.theta_l;
        v[4] = self.theta_r;
        for (i, &a) in self.q_n.iter().enumerate() {
            v[5 + i] = a;
        }
        v
    }

    pub fn from_vector(v: &DVector<f64>) -> Result<Self> {
        if v.len() < 5 {
            return Err(Error::dim("generalized state", 5, v.len()));
        }
        Ok(GeneralizedState {
            x_m: v[0],
            y_m: v[1],
            phi: v[2],
            theta_l: v[3],
            theta_r: v[4],
            q_n: v.iter().skip(5).copied().collect(),
        })
    }

    /// Planar base pose as a 3D isometry (rotation about world z).
    pub fn base_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::new(self.x_m, self.y_m, 0.0),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), self.phi),
        )
    }
}

/// Actuated velocity `(theta_l_dot, theta_r_dot, q_n_dot)` in rad/s.
#[derive(Clone, Debug, PartialEq)]
pub struct ActuatedVelocity(pub DVector<f64>);

impl ActuatedVelocity {
    pub fn zeros(arm_dof: usize) -> Self {
        ActuatedVelocity(DVector::zeros(2 + arm_dof))
    }

    pub fn from_parts(wheels: [f64; 2], arm: &[f64]) -> Self {
        let mut v = DVector::zeros(2 + arm.len());
        v[0] = wheels[0];
        v[1] = wheels[1];
        for (i, &a) in arm.iter().enumerate() {
            v[2 + i] = a;
        }
        ActuatedVelocity(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn wheels(&self) -> [f64; 2] {
        [self.0[0], self.0[1]]
    }

    pub fn arm(&self) -> &[f64] {
        &self.0.as_slice()[2..]
    }
}

/// End-effector pose in the world frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseDoc", into = "PoseDoc")]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Pose {
            position,
            orientation,
        }
    }

    pub fn from_rpy(position: Vector3<f64>, rpy: [f64; 3]) -> Self {
        Pose::new(
            position,
            UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]),
        )
    }

    pub fn identity() -> Self {
        Pose::new(Vector3::zeros(), UnitQuaternion::identity())
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        Pose::new(iso.translation.vector, iso.rotation)
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position), self.orientation)
    }

    /// Fixed-axis roll, pitch, yaw (`R = Rz(yaw) Ry(pitch) Rx(roll)`).
    pub fn rpy(&self) -> [f64; 3] {
        let (r, p, y) = self.orientation.euler_angles();
        [r, p, y]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseDoc {
    pub position: [f64; 3],
    /// (w, x, y, z)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quaternion: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rpy: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rpy_deg: Option<[f64; 3]>,
}

impl TryFrom<PoseDoc> for Pose {
    type Error = String;

    fn try_from(doc: PoseDoc) -> std::result::Result<Self, String> {
        let position = Vector3::from(doc.position);
        match (doc.quaternion, doc.rpy, doc.rpy_deg) {
            (Some([w, x, y, z]), None, None) => {
                let q = Quaternion::new(w, x, y, z);
                if (q.norm() - 1.0).abs() > 1e-6 {
                    return Err(format!("quaternion norm {} is not 1", q.norm()));
                }
                Ok(Pose::new(position, UnitQuaternion::new_normalize(q)))
            }
            (None, Some(rpy), None) => Ok(Pose::from_rpy(position, rpy)),
            (None, None, Some(d)) => Ok(Pose::from_rpy(position, d.map(f64::to_radians))),
            (None, None, None) => Ok(Pose::new(position, UnitQuaternion::identity())),
            _ => Err("give exactly one of quaternion, rpy, rpy_deg".into()),
        }
    }
}

impl From<Pose> for PoseDoc {
    fn from(p: Pose) -> Self {
        let q = p.orientation.quaternion();
        PoseDoc {
            position: [p.position.x, p.position.y, p.position.z],
            quaternion: Some([q.w, q.i, q.j, q.k]),
            rpy: None,
            rpy_deg: None,
        }
    }
}
