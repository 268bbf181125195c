use std::path::{Path, PathBuf};

use nalgebra::{UnitQuaternion, Vector3};
use serde::Deserialize;

use crate::controller::ControlParams;
use crate::dynamics::RigidBodyParams;
use crate::model::{forward_kinematics, GeneralizedState, Pose, RobotGeometry};
use crate::tasks::ConstraintTaskParams;
use crate::{Error, Result};

/// Largest accepted integration step (one 50 Hz base tick).
pub const MAX_DT: f64 = 0.02;
/// Time appended after the last segment before the run ends.
pub const DEFAULT_SETTLE: f64 = 0.5;

/// Where the end effector should go.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    /// Pose in the world frame.
    Absolute(Pose),
    /// World-frame translation and per-axis roll/pitch/yaw increments applied
    /// to the initial end-effector pose.
    Offset {
        translation: Vector3<f64>,
        rpy: [f64; 3],
    },
}

impl Target {
    pub fn resolve(&self, start: &Pose) -> Pose {
        match self {
            Target::Absolute(p) => *p,
            Target::Offset { translation, rpy } => {
                let r0 = start.rpy();
                Pose::new(
                    start.position + translation,
                    UnitQuaternion::from_euler_angles(
                        r0[0] + rpy[0],
                        r0[1] + rpy[1],
                        r0[2] + rpy[2],
                    ),
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub geometry: RobotGeometry,
    pub initial_state: GeneralizedState,
    pub target: Target,
    pub t_translate: f64,
    pub t_rotate: f64,
    pub settle: f64,
    pub dt: f64,
    pub controller: ControlParams,
    pub tasks: ConstraintTaskParams,
    pub dynamics: Option<RigidBodyParams>,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        let g = &self.geometry;
        g.validate()?;
        if self.initial_state.arm_dof() != g.arm_dof() {
            return bad(format!(
                "initial_state has {} arm joints, geometry has {}",
                self.initial_state.arm_dof(),
                g.arm_dof()
            ));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return bad(format!("dt must be in (0, {MAX_DT}], got {}", self.dt));
        }
        if !(self.t_translate > 0.0 && self.t_rotate > 0.0) {
            return bad("phase durations must be > 0".into());
        }
        if !(self.settle >= 0.0 && self.settle.is_finite()) {
            return bad("settle must be >= 0".into());
        }
        self.controller.validate(g.actuated_dim())?;
        if let Some(p) = self.controller.base_period {
            let ticks = p / self.dt;
            if (ticks - ticks.round()).abs() > 1e-9 || ticks.round() < 1.0 {
                return bad(format!(
                    "base_period {p} is not a multiple of dt {}",
                    self.dt
                ));
            }
        }
        self.tasks.validate(g.arm_dof())?;
        if let Some(d) = &self.dynamics {
            d.validate(g.arm_dof())?;
        }
        Ok(())
    }

    /// Initial end-effector pose and the resolved target pose.
    pub fn endpoints(&self) -> (Pose, Pose) {
        let start = forward_kinematics(&self.initial_state, &self.geometry);
        let target = self.target.resolve(&start);
        (start, target)
    }

    pub fn duration(&self) -> f64 {
        self.t_translate + self.t_rotate + self.settle
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &dir).map_err(|e| match e {
            Error::Parse { source, .. } => Error::Parse {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    /// Parses a scenario document; relative geometry paths resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let parse_err = |source| Error::Parse {
            path: PathBuf::from("<scenario>"),
            source,
        };
        let doc: ScenarioDoc = serde_json::from_str(text).map_err(parse_err)?;
        let geometry = match doc.geometry {
            serde_json::Value::String(rel) => {
                let path = base_dir.join(rel);
                let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                serde_json::from_str(&text).map_err(|source| Error::Parse { path, source })?
            }
            inline => serde_json::from_value(inline).map_err(parse_err)?,
        };
        let initial_state = doc.initial_state.into_state()?;
        let target = match (doc.pruning_point, doc.pruning_offset) {
            (Some(p), None) => Target::Absolute(p),
            (None, Some(o)) => o.into_target()?,
            _ => {
                return Err(Error::InvalidScenario(
                    "give exactly one of pruning_point or pruning_offset".into(),
                ))
            }
        };
        let s = Scenario {
            geometry,
            initial_state,
            target,
            t_translate: doc.phase_durations.t_translate,
            t_rotate: doc.phase_durations.t_rotate,
            settle: doc.settle.unwrap_or(DEFAULT_SETTLE),
            dt: doc.dt,
            controller: doc.controller,
            tasks: doc.tasks,
            dynamics: doc.dynamics,
            seed: doc.seed,
        };
        s.validate()?;
        Ok(s)
    }
}

fn pick<T>(
    name: &str,
    rad: Option<T>,
    deg: Option<T>,
    to_rad: impl Fn(T) -> T,
) -> Result<Option<T>> {
    match (rad, deg) {
        (Some(_), Some(_)) => Err(Error::InvalidScenario(format!(
            "both {name} and {name}_deg given"
        ))),
        (Some(r), None) => Ok(Some(r)),
        (None, Some(d)) => Ok(Some(to_rad(d))),
        (None, None) => Ok(None),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    #[serde(default)]
    x_m: f64,
    #[serde(default)]
    y_m: f64,
    phi: Option<f64>,
    phi_deg: Option<f64>,
    #[serde(default)]
    theta_l: f64,
    #[serde(default)]
    theta_r: f64,
    q_n: Option<Vec<f64>>,
    q_n_deg: Option<Vec<f64>>,
}

impl StateDoc {
    fn into_state(self) -> Result<GeneralizedState> {
        let phi = pick("phi", self.phi, self.phi_deg, f64::to_radians)?.unwrap_or(0.0);
        let q_n = pick("q_n", self.q_n, self.q_n_deg, |v| {
            v.into_iter().map(f64::to_radians).collect()
        })?
        .ok_or_else(|| Error::InvalidScenario("initial_state.q_n missing".into()))?;
        Ok(GeneralizedState::new(
            [self.x_m, self.y_m, phi],
            [self.theta_l, self.theta_r],
            q_n,
        ))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OffsetDoc {
    #[serde(default)]
    translation: [f64; 3],
    rpy: Option<[f64; 3]>,
    rpy_deg: Option<[f64; 3]>,
}

impl OffsetDoc {
    fn into_target(self) -> Result<Target> {
        let rpy =
            pick("rpy", self.rpy, self.rpy_deg, |d| d.map(f64::to_radians))?.unwrap_or([0.0; 3]);
        Ok(Target::Offset {
            translation: Vector3::from(self.translation),
            rpy,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseDoc {
    t_translate: f64,
    t_rotate: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    /// File path (relative to the scenario) or inline geometry document.
    geometry: serde_json::Value,
    initial_state: StateDoc,
    pruning_point: Option<Pose>,
    pruning_offset: Option<OffsetDoc>,
    phase_durations: PhaseDoc,
    dt: f64,
    settle: Option<f64>,
    #[serde(default)]
    controller: ControlParams,
    #[serde(default)]
    tasks: ConstraintTaskParams,
    dynamics: Option<RigidBodyParams>,
    #[serde(default)]
    seed: u64,
}
