//! Whole-body motion control for a non-holonomic wheeled mobile manipulator.
//!
//! The crate models a two-wheel differential-drive base carrying a serial
//! revolute arm. Base motion is restricted by a lateral no-slip constraint and
//! two pure-rolling constraints; feasible generalized velocities are produced
//! from actuated (wheel + arm joint) rates through the null-space basis of the
//! constraint matrix. On top of that model sit
//!
//! * [`trajectory`]: quintic Cartesian segments for the end-effector,
//! * [`controller`]: a resolved-rate whole-body controller that projects
//!   secondary joint velocities into the null space of the end-effector task,
//! * [`tasks`]: the secondary tasks (manipulability ascent, joint-limit
//!   repulsion),
//! * [`dynamics`]: reduction of full-space dynamics onto actuated coordinates,
//! * [`sim`]: a deterministic closed-loop kinematic simulator with CSV/SVG
//!   output, used by the `nwmm` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod dynamics;
mod error;
pub mod model;
pub mod sim;
pub mod tasks;
pub mod trajectory;

pub use error::{Error, Result};
pub use model::{ActuatedVelocity, ArmChain, GeneralizedState, Pose, RobotGeometry};
