use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::SimLog;
use crate::{Error, Result};

const SIZE: (u32, u32) = (900, 600);

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    color: RGBColor,
    width: u32,
}

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo > hi {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    let pad = if span < 1e-12 {
        0.1 * lo.abs().max(1.0)
    } else {
        0.05 * span
    };
    (lo - pad, hi + pad)
}

fn line_chart(
    path: &Path,
    caption: &str,
    x_desc: &str,
    y_desc: &str,
    series: &[Series],
) -> std::result::Result<(), String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| &p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| &p.1)));
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(caption, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(45)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| err(&e))?;
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc(y_desc)
        .draw()
        .map_err(|e| err(&e))?;
    let mut labelled = false;
    for s in series {
        let style = s.color.stroke_width(s.width);
        let drawn = chart
            .draw_series(LineSeries::new(s.points.iter().copied(), style))
            .map_err(|e| err(&e))?;
        if !s.label.is_empty() {
            let c = s.color;
            drawn.label(s.label.as_str()).legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 18, y)], c.stroke_width(2))
            });
            labelled = true;
        }
    }
    if labelled {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .position(SeriesLabelPosition::UpperRight)
            .draw()
            .map_err(|e| err(&e))?;
    }
    root.present().map_err(|e| err(&e))
}

/// Writes `base_path.svg`, `tracking_error.svg`, `manipulability.svg` and
/// `joint_angles.svg` into `dir`, returning the written paths.
pub fn emit_plots(log: &SimLog, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let t: Vec<f64> = log.rows.iter().map(|r| r.t).collect();
    let along = |f: &dyn Fn(&super::LogRow) -> f64| -> Vec<(f64, f64)> {
        log.rows.iter().map(|r| (r.t, f(r))).collect()
    };
    let mut written = Vec::new();
    let mut emit = |name: &str, caption: &str, x: &str, y: &str, series: Vec<Series>| {
        let path = dir.join(name);
        line_chart(&path, caption, x, y, &series).map_err(|message| Error::Plot {
            path: path.clone(),
            message,
        })?;
        written.push(path);
        Ok::<_, Error>(())
    };

    emit(
        "base_path.svg",
        "Mobile base path",
        "x_m [m]",
        "y_m [m]",
        vec![Series {
            label: String::new(),
            points: log
                .rows
                .iter()
                .map(|r| (r.state.x_m, r.state.y_m))
                .collect(),
            color: PALETTE[0],
            width: 2,
        }],
    )?;

    let norm3 = |e: &[f64]| (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
    emit(
        "tracking_error.svg",
        "End-effector tracking error",
        "t [s]",
        "error [m | rad]",
        vec![
            Series {
                label: "position [m]".into(),
                points: along(&|r| norm3(&r.tracking_error[..3])),
                color: PALETTE[0],
                width: 2,
            },
            Series {
                label: "orientation [rad]".into(),
                points: along(&|r| norm3(&r.tracking_error[3..])),
                color: PALETTE[3],
                width: 2,
            },
        ],
    )?;

    emit(
        "manipulability.svg",
        "Arm manipulability",
        "t [s]",
        "omega [-]",
        vec![Series {
            label: String::new(),
            points: along(&|r| r.omega),
            color: PALETTE[2],
            width: 2,
        }],
    )?;

    let (t0, t1) = match (t.first(), t.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0.0, 1.0),
    };
    let mut joints = Vec::new();
    for i in 0..log.arm_dof {
        let color = PALETTE[i % PALETTE.len()];
        joints.push(Series {
            label: format!("q{}", i + 1),
            points: along(&|r| r.state.q_n[i]),
            color,
            width: 2,
        });
        if let Some(&(lo, hi)) = log.joint_limits.get(i) {
            for bound in [lo, hi] {
                joints.push(Series {
                    label: String::new(),
                    points: vec![(t0, bound), (t1, bound)],
                    color: color.mix(0.4).to_rgba().rgb_color(),
                    width: 1,
                });
            }
        }
    }
    emit(
        "joint_angles.svg",
        "Arm joint angles and limits",
        "t [s]",
        "angle [rad]",
        joints,
    )?;
    Ok(written)
}

trait RgbOf {
    fn rgb_color(&self) -> RGBColor;
}

impl RgbOf for RGBAColor {
    fn rgb_color(&self) -> RGBColor {
        // blend towards white according to alpha
        let blend = |c: u8| (c as f64 * self.3 + 255.0 * (1.0 - self.3)).round() as u8;
        RGBColor(blend(self.0), blend(self.1), blend(self.2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeneralizedState, Pose};
    use crate::sim::LogRow;

    fn row(t: f64, q: f64) -> LogRow {
        LogRow {
            t,
            state: GeneralizedState::with_arm(vec![q]),
            xi_dot_cmd: vec![0.0; 3],
            ee_pose: Pose::identity(),
            tracking_error: [0.0; 6],
            omega: 0.5,
            constraint_residual: 0.0,
            damping_active: false,
        }
    }

    #[test]
    fn empty_log_gives_valid_svgs() {
        let dir = tempfile::tempdir().unwrap();
        let log = SimLog::empty(1, vec![(-1.0, 1.0)]);
        let files = emit_plots(&log, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        for f in files {
            let text = std::fs::read_to_string(f).unwrap();
            assert!(text.starts_with("<svg"));
            assert!(text.trim_end().ends_with("</svg>"));
        }
    }

    #[test]
    fn labels_carry_units() {
        let dir = tempfile::tempdir().unwrap();
        let mut log = SimLog::empty(1, vec![(-1.0, 1.0)]);
        log.rows = (0..5).map(|k| row(k as f64 * 0.1, 0.3)).collect();
        emit_plots(&log, dir.path()).unwrap();
        let base = std::fs::read_to_string(dir.path().join("base_path.svg")).unwrap();
        assert!(base.contains("x_m [m]") && base.contains("y_m [m]"));
        let joints = std::fs::read_to_string(dir.path().join("joint_angles.svg")).unwrap();
        assert!(joints.contains("angle [rad]") && joints.contains("t [s]"));
        let omega = std::fs::read_to_string(dir.path().join("manipulability.svg")).unwrap();
        // constant signal: a single polyline with equal y coordinates
        let line = omega
            .lines()
            .find(|l| l.contains("<polyline") && l.contains("stroke=\"#2CA02C\""))
            .expect("omega polyline");
        let pts = line
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        let ys: Vec<&str> = pts
            .split_whitespace()
            .map(|p| p.split(',').nth(1).unwrap())
            .collect();
        assert!(ys.len() == 5 && ys.iter().all(|y| *y == ys[0]));
    }
}
