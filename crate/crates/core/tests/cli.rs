use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/scenarios")
        .join(name)
}

fn nwmm(args: &[&std::ffi::OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nwmm"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn simulate_writes_csv_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("pruning_approach.json");
    let out = nwmm(&[
        "simulate".as_ref(),
        s.as_os_str(),
        "--out".as_ref(),
        dir.path().as_os_str(),
        "--plots".as_ref(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("sim_log.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), nwmm::sim::csv_header(7));
    // 10 s at dt = 0.02 plus the initial sample
    assert_eq!(lines.count(), 501);
    for f in [
        "base_path.svg",
        "tracking_error.svg",
        "manipulability.svg",
        "joint_angles.svg",
    ] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("joint limit violations: 0"));
}

#[test]
fn plan_prints_two_segments() {
    let s = scenario("pruning_approach.json");
    let out = nwmm(&["plan".as_ref(), s.as_os_str()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let segs = v.as_array().unwrap();
    assert_eq!(segs.len(), 2);
    assert_eq!(segs[0]["t_start"], 0.0);
    assert_eq!(segs[0]["t_end"], 7.0);
    assert_eq!(segs[1]["t_end"], 9.5);
    assert_eq!(segs[0]["axes"].as_array().unwrap().len(), 6);
}

#[test]
fn check_passes_on_nominal_geometry() {
    let s = scenario("pruning_approach.json");
    let out = nwmm(&["check".as_ref(), s.as_os_str()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn check_fails_on_badly_scaled_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let geometry =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/geometry/mobile_panda.json");
    let mut g: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(geometry).unwrap()).unwrap();
    for joint in g["arm_chain"].as_array_mut().unwrap() {
        for v in joint["origin"]["xyz"].as_array_mut().unwrap() {
            *v = (v.as_f64().unwrap() * 1e9).into();
        }
    }
    let mut s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(scenario("pruning_approach.json")).unwrap())
            .unwrap();
    s["geometry"] = g;
    let path = dir.path().join("scaled.json");
    std::fs::write(&path, s.to_string()).unwrap();
    let out = nwmm(&["check".as_ref(), path.as_os_str()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn invalid_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(
        nwmm(&["plan".as_ref(), missing.as_os_str()]).status.code(),
        Some(1)
    );

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(
        nwmm(&["simulate".as_ref(), garbage.as_os_str()])
            .status
            .code(),
        Some(1)
    );

    let mut s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(scenario("pruning_approach.json")).unwrap())
            .unwrap();
    s["geometry"] = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/geometry/mobile_panda.json")
        .to_string_lossy()
        .into_owned()
        .into();
    s["dt"] = 0.5.into();
    let coarse = dir.path().join("coarse.json");
    std::fs::write(&coarse, s.to_string()).unwrap();
    let out = nwmm(&[
        "simulate".as_ref(),
        coarse.as_os_str(),
        "--out".as_ref(),
        dir.path().as_os_str(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
}
