use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dsd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn final_populations(text: &str) -> [f64; 3] {
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix("# final_populations = "))
        .expect("final populations line");
    let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
    [v[0], v[1], v[2]]
}

#[test]
fn resonant_dsd_transfer_is_complete() {
    let o = dsd(&["transfer"]);
    assert_eq!(code(&o), 0);
    let p = final_populations(&String::from_utf8(o.stdout).unwrap());
    assert!(p[2] >= 0.99, "{p:?}");
}

#[test]
fn zero_amplitude_leaves_population_in_level_one() {
    let o = dsd(&["transfer", "--set", "amplitude=0", "--set", "delta1=0.7", "--set", "delta2=-1.3"]);
    assert_eq!(code(&o), 0);
    let p = final_populations(&String::from_utf8(o.stdout).unwrap());
    assert!((p[0] - 1.0).abs() < 1e-9 && p[1] < 1e-12 && p[2] < 1e-12, "{p:?}");
}

#[test]
fn configuration_errors_exit_2() {
    for args in [
        &["cut", "--set", "colour=1"][..],
        &["sweep", "--set", "grid_n=1"],
        &["sensor", "mass", "--set", "x_min=-1e-20", "--set", "calibrate=false"],
        &["sensor", "mass", "--set", "x_min=-1e-20"],
        &["cut", "--set", "scheme=fast"],
        &["calibrate", "field", "--set", "measured_p3=1.5"],
        &["transfer", "--gnuplot"],
        &["nonsense"],
    ] {
        let o = dsd(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn unreachable_threshold_exits_3() {
    let o = dsd(&["calibrate", "mass", "--set", "threshold=10", "--set", "cut_n=41"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_with_unknown_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "tau_over_taum = 2\nwidth = 3\n").unwrap();
    let o = dsd(&["cut", "--config", path_str(&cfg)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<Vec<u8>> = ["1", "4", "1"]
        .iter()
        .enumerate()
        .map(|(i, threads)| {
            let out = dir.path().join(format!("map{i}.csv"));
            let o = dsd(&[
                "sweep", "--set", "grid_n=9", "--set", "tau_over_taum=2",
                "--parallel", threads, "--out", path_str(&out),
            ]);
            assert_eq!(code(&o), 0);
            fs::read(&out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], outs[2]);
}

#[test]
fn rerun_from_echo_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("cut.csv");
    let second = dir.path().join("again.csv");
    let o = dsd(&[
        "cut", "--set", "axis=nondegenerate", "--set", "cut_n=31",
        "--set", "tau_over_taum=5", "--out", path_str(&first),
    ]);
    assert_eq!(code(&o), 0);
    let o = dsd(&["cut", "--config", path_str(&first), "--out", path_str(&second)]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn gnuplot_script_written_next_to_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let o = dsd(&["transfer", "--out", path_str(&out), "--gnuplot"]);
    assert_eq!(code(&o), 0);
    let script = fs::read_to_string(dir.path().join("traj.csv.gp")).unwrap();
    assert!(script.contains("traj.csv") && script.contains("plot"));
}

#[test]
fn sensor_curve_records_calibration() {
    let o = dsd(&["sensor", "field", "--set", "x_n=11", "--set", "cut_n=41"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# calibration.round = "));
    let rows: Vec<&str> = text.lines().skip_while(|l| *l != "b_gauss,p3").collect();
    assert_eq!(rows.len(), 12);
}

#[test]
fn shipped_recipes_run() {
    let recipes = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes");
    let mut seen = 0;
    for entry in fs::read_dir(&recipes).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let stem = path.file_stem().unwrap().to_str().unwrap();
        let command: &[&str] = match stem.split('_').next().unwrap() {
            "sweep" => &["sweep"],
            "cut" => &["cut"],
            "transfer" => &["transfer"],
            "calibrate" => &["calibrate", "mass"],
            "sensor" if stem.ends_with("mass") => &["sensor", "mass"],
            "sensor" => &["sensor", "field"],
            other => panic!("unrecognised recipe {other}"),
        };
        let mut args = command.to_vec();
        args.extend(["--config", path_str(&path)]);
        for small in ["grid_n=3", "cut_n=41", "x_n=3", "trajectory_samples=2"] {
            args.extend(["--set", small]);
        }
        let o = dsd(&args);
        assert_eq!(code(&o), 0, "{stem}: {}", String::from_utf8_lossy(&o.stderr));
        seen += 1;
    }
    assert!(seen > 0);
}
