use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn toptag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toptag")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("toptag-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn blank_image_prints_nothing() {
    let dir = scratch("blank");
    let img = dir.join("blank.pgm");
    let mut bytes = b"P5\n320 240\n255\n".to_vec();
    bytes.resize(bytes.len() + 320 * 240, 128);
    std::fs::write(&img, bytes).unwrap();
    let o = toptag(&["detect", s(&img)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn three_corners_is_a_runtime_failure() {
    let dir = scratch("three");
    let det = dir.join("det.txt");
    std::fs::write(&det, "0 400.5 300.25 430.0 301.0 431.0 330.0\n").unwrap();
    let o = toptag(&["estimate", s(&det), "--solvers", "bas"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("degenerate configuration"), "{}", stderr(&o));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = scratch("cfg");
    let out = dir.join("out");
    for args in [
        vec!["bench", "--out", s(&out), "--set", "no_such_key=1"],
        vec!["bench", "--out", s(&out), "--set", "rsu_pitch_down_deg=95"],
        vec!["bench", "--out", s(&out), "--mode", "photographic"],
        vec!["bench", "--out", s(&out), "--solvers", "bas,zz"],
        vec!["bench", "--out", s(&out), "--config", "/nonexistent/scenario.txt"],
    ] {
        let o = toptag(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    assert!(!out.join("stats.csv").exists());
}

#[test]
fn render_detect_estimate_pipeline() {
    let dir = scratch("pipeline");
    let cfg = dir.join("scenario.txt");
    std::fs::write(&cfg, "# closer sector\nsector_radius_max = 12\nseed = 4\n").unwrap();
    let o = toptag(&["render", "--config", s(&cfg), "--out", s(&dir), "--indices", "2,3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let truth = std::fs::read_to_string(dir.join("truth.csv")).unwrap();
    for (k, line) in truth.lines().skip(1).enumerate() {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let frame = dir.join(format!("frame_{:06}.pgm", 2 + k));
        let o = toptag(&["detect", s(&frame)]);
        assert_eq!(o.status.code(), Some(0));
        let dets = String::from_utf8(o.stdout).unwrap();
        assert!(dets.lines().count() >= 1);
        let det = dir.join("det.txt");
        std::fs::write(&det, &dets).unwrap();
        let o = toptag(&[
            "estimate",
            s(&det),
            "--camera",
            s(&dir.join("camera.txt")),
            "--config",
            s(&cfg),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let lines = String::from_utf8(o.stdout).unwrap();
        assert_eq!(lines.lines().count(), 3);
        for l in lines.lines() {
            let v: Vec<&str> = l.split(' ').collect();
            let (x, y): (f64, f64) = (v[1].parse().unwrap(), v[2].parse().unwrap());
            assert!((x - f[1]).hypot(y - f[2]) < 0.3, "{l} vs {line}");
        }
    }
}

#[test]
fn bench_is_reproducible_and_report_matches() {
    let dir = scratch("bench");
    let (a, b, r) = (dir.join("a"), dir.join("b"), dir.join("r"));
    for out in [&a, &b] {
        let o = toptag(&[
            "bench",
            "--out",
            s(out),
            "--mode",
            "analytic",
            "--trials",
            "3000",
            "--seed",
            "7",
            "--set",
            "height_disturbance_max=0.1",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let stats = std::fs::read(a.join("stats.csv")).unwrap();
    assert_eq!(stats, std::fs::read(b.join("stats.csv")).unwrap());
    assert!(stats.starts_with(b"dist_m,solver,count,pos_rms_m,pos_max_m,ang_rms_deg\n"));
    for f in ["pos_rms.svg", "ang_rms.svg", "trials.csv", "scenario.txt"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let o = toptag(&["report", s(&a.join("trials.csv")), "--out", s(&r)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(r.join("stats.csv")).unwrap(), stats);
    assert_eq!(
        std::fs::read(r.join("pos_rms.svg")).unwrap(),
        std::fs::read(a.join("pos_rms.svg")).unwrap()
    );
}

#[test]
fn rendered_bench_reports_detection_audit() {
    let dir = scratch("rendered");
    let o = toptag(&["bench", "--out", s(&dir), "--trials", "40", "--solvers", "bas,sopt"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("0 false positives"), "{}", stderr(&o));
    let stats = std::fs::read_to_string(dir.join("stats.csv")).unwrap();
    assert!(stats
        .lines()
        .skip(1)
        .all(|l| l.contains(",bas,") || l.contains(",sopt,")));
}
