//! Quintic-polynomial Cartesian trajectories for the end effector.
//!
//! Each axis of a segment is `p(t) = c0 + c1 s + c2 s^2 + c3 s^3 + c4 s^4 + c5 s^5`
//! with local time `s = t - t_start`, so coefficients do not degrade with the
//! absolute start time. Orientation is interpolated per axis on fixed-axis
//! roll/pitch/yaw angles; this is only meaningful away from pitch = ±pi/2.

use nalgebra::{UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::model::Pose;
use crate::{Error, Result};

pub const AXIS_LABELS: [&str; 6] = ["x", "y", "z", "roll", "pitch", "yaw"];

/// Shortest span accepted by [`solve_quintic`].
pub const MIN_SPAN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConditions {
    pub x_s: f64,
    pub v_s: f64,
    pub a_s: f64,
    pub x_e: f64,
    pub v_e: f64,
    pub a_e: f64,
}

impl BoundaryConditions {
    /// Start and end at rest.
    pub fn rest_to_rest(x_s: f64, x_e: f64) -> Self {
        BoundaryConditions {
            x_s,
            x_e,
            ..Default::default()
        }
    }
}

/// Position, velocity and acceleration of one axis.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AxisSample {
    pub pos: f64,
    pub vel: f64,
    pub acc: f64,
}

/// Coefficients of the quintic matching `bc` over `[t_s, t_e]`, in local time
/// `t - t_s`.
pub fn solve_quintic(bc: &BoundaryConditions, t_s: f64, t_e: f64) -> Result<[f64; 6]> {
    if !(t_e > t_s) || !t_s.is_finite() || !t_e.is_finite() {
        return Err(Error::InvalidInterval {
            t_start: t_s,
            t_end: t_e,
        });
    }
    let span = t_e - t_s;
    if span < MIN_SPAN {
        return Err(Error::IllConditioned { span });
    }
    let t = span;
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let h = bc.x_e - bc.x_s;
    let c3 =
        (20.0 * h - (8.0 * bc.v_e + 12.0 * bc.v_s) * t - (3.0 * bc.a_s - bc.a_e) * t2) / (2.0 * t3);
    let c4 = (-30.0 * h + (14.0 * bc.v_e + 16.0 * bc.v_s) * t + (3.0 * bc.a_s - 2.0 * bc.a_e) * t2)
        / (2.0 * t4);
    let c5 = (12.0 * h - 6.0 * (bc.v_e + bc.v_s) * t + (bc.a_e - bc.a_s) * t2) / (2.0 * t5);
    Ok([bc.x_s, bc.v_s, 0.5 * bc.a_s, c3, c4, c5])
}

/// Evaluates a local-time quintic and its first two derivatives.
pub fn eval_poly(c: &[f64; 6], s: f64) -> AxisSample {
    let pos = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
    let vel = c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * (4.0 * c[4] + s * 5.0 * c[5])));
    let acc = 2.0 * c[2] + s * (6.0 * c[3] + s * (12.0 * c[4] + s * 20.0 * c[5]));
    AxisSample { pos, vel, acc }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisQuintic {
    pub label: String,
    pub coeffs: [f64; 6],
    pub boundary: BoundaryConditions,
}

/// Six-axis quintic segment `(x, y, z, roll, pitch, yaw)` over a time window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuinticSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub axes: Vec<AxisQuintic>,
}

impl QuinticSegment {
    pub fn new(boundary: [BoundaryConditions; 6], t_start: f64, t_end: f64) -> Result<Self> {
        let axes = boundary
            .iter()
            .zip(AXIS_LABELS)
            .map(|(bc, label)| {
                Ok(AxisQuintic {
                    label: label.to_string(),
                    coeffs: solve_quintic(bc, t_start, t_end)?,
                    boundary: *bc,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(QuinticSegment {
            t_start,
            t_end,
            axes,
        })
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Samples every axis at `t`. Outside the window the stored boundary values
/// are returned, so a finished segment holds its goal.
pub fn eval_quintic(seg: &QuinticSegment, t: f64) -> Vec<AxisSample> {
    seg.axes
        .iter()
        .map(|ax| {
            let bc = &ax.boundary;
            if t <= seg.t_start {
                AxisSample {
                    pos: bc.x_s,
                    vel: bc.v_s,
                    acc: bc.a_s,
                }
            } else if t >= seg.t_end {
                AxisSample {
                    pos: bc.x_e,
                    vel: bc.v_e,
                    acc: bc.a_e,
                }
            } else {
                eval_poly(&ax.coeffs, t - seg.t_start)
            }
        })
        .collect()
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    // keep +pi rather than -pi for an exact half turn
    if w == -std::f64::consts::PI && a > 0.0 {
        std::f64::consts::PI
    } else {
        w
    }
}

/// Two-phase approach: translate to the target position holding the start
/// orientation, then rotate to the target orientation holding the position.
/// Target angles are unwrapped to lie within pi of the start angles.
pub fn plan_approach(
    start: &Pose,
    target: &Pose,
    t_translate: f64,
    t_rotate: f64,
) -> Result<Vec<QuinticSegment>> {
    let p0 = start.position;
    let p1 = target.position;
    let r0 = start.rpy();
    let r1_raw = target.rpy();
    let mut r1 = [0.0; 3];
    for i in 0..3 {
        r1[i] = r0[i] + wrap_angle(r1_raw[i] - r0[i]);
    }
    let translate = [
        BoundaryConditions::rest_to_rest(p0.x, p1.x),
        BoundaryConditions::rest_to_rest(p0.y, p1.y),
        BoundaryConditions::rest_to_rest(p0.z, p1.z),
        BoundaryConditions::rest_to_rest(r0[0], r0[0]),
        BoundaryConditions::rest_to_rest(r0[1], r0[1]),
        BoundaryConditions::rest_to_rest(r0[2], r0[2]),
    ];
    let rotate = [
        BoundaryConditions::rest_to_rest(p1.x, p1.x),
        BoundaryConditions::rest_to_rest(p1.y, p1.y),
        BoundaryConditions::rest_to_rest(p1.z, p1.z),
        BoundaryConditions::rest_to_rest(r0[0], r1[0]),
        BoundaryConditions::rest_to_rest(r0[1], r1[1]),
        BoundaryConditions::rest_to_rest(r0[2], r1[2]),
    ];
    Ok(vec![
        QuinticSegment::new(translate, 0.0, t_translate)?,
        QuinticSegment::new(rotate, t_translate, t_translate + t_rotate)?,
    ])
}

/// Reference pose and twist (linear over angular, world frame).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartesianReference {
    pub pose: Pose,
    pub twist: Vector6<f64>,
}

/// World-frame angular velocity for fixed-axis roll/pitch/yaw rates.
pub fn rpy_rates_to_angular_velocity(rpy: [f64; 3], rates: [f64; 3]) -> Vector3<f64> {
    let [_, p, y] = rpy;
    let [dr, dp, dy] = rates;
    let (sp, cp) = p.sin_cos();
    let (sy, cy) = y.sin_cos();
    Vector3::new(
        dr * cp * cy - dp * sy,
        dr * cp * sy + dp * cy,
        -dr * sp + dy,
    )
}

/// Samples a sequence of segments: the first segment whose window has not
/// closed is used, and the last one holds after the end.
pub fn sample_plan(segments: &[QuinticSegment], t: f64) -> Option<CartesianReference> {
    let seg = segments
        .iter()
        .find(|s| t < s.t_end)
        .or_else(|| segments.last())?;
    let s = eval_quintic(seg, t);
    let rpy = [s[3].pos, s[4].pos, s[5].pos];
    let w = rpy_rates_to_angular_velocity(rpy, [s[3].vel, s[4].vel, s[5].vel]);
    Some(CartesianReference {
        pose: Pose::new(
            Vector3::new(s[0].pos, s[1].pos, s[2].pos),
            UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]),
        ),
        twist: Vector6::new(s[0].vel, s[1].vel, s[2].vel, w.x, w.y, w.z),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn min_jerk() -> QuinticSegment {
        let mut bc = [BoundaryConditions::default(); 6];
        bc[0] = BoundaryConditions::rest_to_rest(0.0, 1.0);
        QuinticSegment::new(bc, 0.0, 1.0).unwrap()
    }

    #[test]
    fn constant_boundary_gives_constant() {
        let c = solve_quintic(&BoundaryConditions::rest_to_rest(5.0, 5.0), 0.0, 3.0).unwrap();
        assert_eq!(c, [5.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn unit_min_jerk_coefficients() {
        let c = solve_quintic(&BoundaryConditions::rest_to_rest(0.0, 1.0), 0.0, 1.0).unwrap();
        assert_eq!(c, [0.0, 0.0, 0.0, 10.0, -15.0, 6.0]);
    }

    #[test]
    fn shifted_window_keeps_shape() {
        let bc = BoundaryConditions::rest_to_rest(0.0, 1.0);
        assert_eq!(
            solve_quintic(&bc, 2.0, 3.0).unwrap(),
            solve_quintic(&bc, 0.0, 1.0).unwrap()
        );
    }

    #[test]
    fn general_boundary_conditions_are_met() {
        let bc = BoundaryConditions {
            x_s: 0.3,
            v_s: -0.7,
            a_s: 0.9,
            x_e: -0.4,
            v_e: 0.5,
            a_e: -0.2,
        };
        let c = solve_quintic(&bc, 4.0, 6.5).unwrap();
        let end = eval_poly(&c, 2.5);
        assert_abs_diff_eq!(end.pos, bc.x_e, epsilon = 1e-12);
        assert_abs_diff_eq!(end.vel, bc.v_e, epsilon = 1e-12);
        assert_abs_diff_eq!(end.acc, bc.a_e, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_windows() {
        let bc = BoundaryConditions::rest_to_rest(0.0, 1.0);
        assert!(matches!(
            solve_quintic(&bc, 1.0, 1.0),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(matches!(
            solve_quintic(&bc, 2.0, 1.0),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(matches!(
            solve_quintic(&bc, 0.0, 1e-7),
            Err(Error::IllConditioned { .. })
        ));
        assert!(solve_quintic(&bc, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn min_jerk_midpoint() {
        let s = eval_quintic(&min_jerk(), 0.5)[0];
        assert_abs_diff_eq!(s.pos, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.vel, 1.875, epsilon = 1e-14);
        assert_abs_diff_eq!(s.acc, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn clamps_outside_window() {
        let mut bc = [BoundaryConditions::default(); 6];
        bc[0] = BoundaryConditions {
            x_s: 1.0,
            v_s: 0.2,
            a_s: -0.1,
            x_e: 2.0,
            v_e: 0.3,
            a_e: 0.4,
        };
        let seg = QuinticSegment::new(bc, 1.0, 2.0).unwrap();
        let after = eval_quintic(&seg, 5.0)[0];
        assert_eq!((after.pos, after.vel, after.acc), (2.0, 0.3, 0.4));
        let before = eval_quintic(&seg, -1.0)[0];
        assert_eq!((before.pos, before.vel, before.acc), (1.0, 0.2, -0.1));
    }

    #[test]
    fn approach_with_identical_poses_is_constant() {
        let p = Pose::from_rpy(Vector3::new(0.3, -0.2, 0.8), [PI, 0.1, -0.4]);
        let segs = plan_approach(&p, &p, 2.0, 1.0).unwrap();
        assert_eq!(segs.len(), 2);
        for seg in &segs {
            for ax in &seg.axes {
                assert_eq!(ax.coeffs[1..], [0.0; 5]);
            }
        }
    }

    #[test]
    fn approach_decouples_axes() {
        let start = Pose::from_rpy(Vector3::new(0.5, 0.0, 0.6), [PI, 0.0, 0.0]);
        let target = Pose::from_rpy(Vector3::new(0.9, 0.0, 0.6), [PI, PI / 6.0, 0.0]);
        let segs = plan_approach(&start, &target, 2.0, 1.0).unwrap();
        let s1 = eval_quintic(&segs[0], 1.0);
        assert_abs_diff_eq!(s1[0].pos, 0.7, epsilon = 1e-12);
        for ax in 1..6 {
            assert_eq!(segs[0].axes[ax].coeffs[1..], [0.0; 5]);
        }
        let s2 = eval_quintic(&segs[1], 2.5);
        assert_abs_diff_eq!(s2[4].pos, PI / 12.0, epsilon = 1e-12);
        // roll stays at +pi even if the target decomposes to -pi
        assert_abs_diff_eq!(s2[3].pos.abs(), PI, epsilon = 1e-12);
        assert_eq!(s2[3].vel, 0.0);
        assert!(plan_approach(&start, &target, 0.0, 1.0).is_err());
        assert!(plan_approach(&start, &target, 1.0, 0.0).is_err());
    }

    #[test]
    fn angular_velocity_matches_orientation_derivative() {
        let rpy = |t: f64| [0.3 + 0.5 * t, -0.2 + 0.7 * t, 1.1 - 0.4 * t];
        let t = 0.37;
        let h = 1e-6;
        let rot = |t: f64| {
            let a = rpy(t);
            UnitQuaternion::from_euler_angles(a[0], a[1], a[2])
        };
        let fd = (rot(t + h) * rot(t - h).inverse()).scaled_axis() / (2.0 * h);
        let w = rpy_rates_to_angular_velocity(rpy(t), [0.5, 0.7, -0.4]);
        assert_abs_diff_eq!(w, fd, epsilon = 1e-8);
    }

    #[test]
    fn segments_serialize() {
        let json = serde_json::to_string(&min_jerk()).unwrap();
        let back: QuinticSegment = serde_json::from_str(&json).unwrap();
        assert_eq!(back, min_jerk());
    }
}
