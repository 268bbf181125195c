use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::SimLog;
use crate::{Error, Result};

/// Formats `x` with 9 significant digits using `%.9g` rules: fixed notation
/// for exponents in `[-4, 9)`, scientific otherwise, trailing zeros trimmed.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp) as usize;
    trim_fraction(&format!("{x:.decimals$}")).to_string()
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Column names for an arm with `n` joints.
pub fn csv_header(n: usize) -> String {
    let mut cols: Vec<String> = ["t", "x_m", "y_m", "phi", "theta_l", "theta_r"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend((1..=n).map(|i| format!("q{i}")));
    cols.push("xi_dot_theta_l".into());
    cols.push("xi_dot_theta_r".into());
    cols.extend((1..=n).map(|i| format!("xi_dot_q{i}")));
    for c in [
        "ee_x",
        "ee_y",
        "ee_z",
        "ee_qw",
        "ee_qx",
        "ee_qy",
        "ee_qz",
        "err_x",
        "err_y",
        "err_z",
        "err_rx",
        "err_ry",
        "err_rz",
        "omega",
        "constraint_residual",
    ] {
        cols.push(c.into());
    }
    cols.join(",")
}

pub fn write_csv<W: Write>(log: &SimLog, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", csv_header(log.arm_dof))?;
    let mut fields = Vec::new();
    for row in &log.rows {
        fields.clear();
        let s = &row.state;
        fields.extend([row.t, s.x_m, s.y_m, s.phi, s.theta_l, s.theta_r]);
        fields.extend(&s.q_n);
        fields.extend(&row.xi_dot_cmd);
        let p = row.ee_pose.position;
        let q = row.ee_pose.orientation.quaternion();
        fields.extend([p.x, p.y, p.z, q.w, q.i, q.j, q.k]);
        fields.extend(row.tracking_error);
        fields.extend([row.omega, row.constraint_residual]);
        let line: Vec<String> = fields.iter().map(|&v| format_sig9(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()
}

/// Writes the log as CSV to `path`.
pub fn emit_csv(log: &SimLog, path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_csv(log, BufWriter::new(file)).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeneralizedState, Pose};
    use crate::sim::LogRow;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(-0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.125), "0.125");
        assert_eq!(format_sig9(-2.5), "-2.5");
        assert_eq!(format_sig9(std::f64::consts::PI), "3.14159265");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1234567890.0), "1.23456789e+09");
        assert_eq!(format_sig9(1.5e-5), "1.5e-05");
        assert_eq!(format_sig9(0.0001), "0.0001");
        assert_eq!(format_sig9(3.3e-17), "3.3e-17");
        assert_eq!(format_sig9(0.99999999999), "1");
    }

    #[test]
    fn header_for_seven_joints() {
        assert_eq!(
            csv_header(7),
            "t,x_m,y_m,phi,theta_l,theta_r,q1,q2,q3,q4,q5,q6,q7,\
             xi_dot_theta_l,xi_dot_theta_r,xi_dot_q1,xi_dot_q2,xi_dot_q3,xi_dot_q4,\
             xi_dot_q5,xi_dot_q6,xi_dot_q7,ee_x,ee_y,ee_z,ee_qw,ee_qx,ee_qy,ee_qz,\
             err_x,err_y,err_z,err_rx,err_ry,err_rz,omega,constraint_residual"
        );
    }

    #[test]
    fn empty_log_is_header_only() {
        let log = SimLog::empty(2, vec![(-1.0, 1.0); 2]);
        let mut buf = Vec::new();
        write_csv(&log, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("{}\n", csv_header(2)));
    }

    #[test]
    fn one_row_log_is_two_lines() {
        let mut log = SimLog::empty(1, vec![(-1.0, 1.0)]);
        log.rows.push(LogRow {
            t: 0.0,
            state: GeneralizedState::with_arm(vec![0.5]),
            xi_dot_cmd: vec![0.0, 0.0, 0.1],
            ee_pose: Pose::identity(),
            tracking_error: [0.0; 6],
            omega: 0.25,
            constraint_residual: 0.0,
            damping_active: false,
        });
        let mut buf = Vec::new();
        write_csv(&log, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(text.ends_with('\n'));
        assert_eq!(
            lines[1],
            "0,0,0,0,0,0,0.5,0,0,0.1,0,0,0,1,0,0,0,0,0,0,0,0,0,0.25,0"
        );
        assert_eq!(lines[1].split(',').count(), lines[0].split(',').count());
    }

    #[test]
    fn io_error_names_path() {
        let log = SimLog::empty(1, vec![(-1.0, 1.0)]);
        let err = emit_csv(&log, Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
