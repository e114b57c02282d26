use std::process::{Command, Output};

fn swimkit(args: &[&str], out_dir: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swimkit"))
        .args(args)
        .env("SWIMKIT_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_scenarios_names_every_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let o = swimkit(&["list-scenarios"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["scallop_free_lowre", "scallop_free_highre", "scallop_obstacle", "damped_stroke", "winding_stroke", "reparam_demo"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{name}\t"))), "{name} missing from:\n{text}");
    }
}

#[test]
fn verdict_on_periodic_and_winding_series() {
    let dir = tempfile::tempdir().unwrap();
    let periodic = dir.path().join("periodic.csv");
    let winding = dir.path().join("winding.csv");
    let (mut p, mut w) = (String::from("t,s\n"), String::from("t,phi\n"));
    for i in 0..=2000 {
        let t = i as f64 * 0.01;
        p.push_str(&format!("{t},{}\n", t.cos()));
        w.push_str(&format!("{t},{}\n", (t % std::f64::consts::TAU) - std::f64::consts::PI));
    }
    std::fs::write(&periodic, p).unwrap();
    std::fs::write(&winding, w).unwrap();

    let o = swimkit(&["verdict", periodic.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("verdict: FiniteLiftLength"), "{}", stdout(&o));

    let o = swimkit(&["verdict", "--circle", winding.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("verdict: GrowingLift"), "{}", stdout(&o));
}

#[test]
fn export_mesh_prints_panels() {
    let dir = tempfile::tempdir().unwrap();
    let o = swimkit(&["export-mesh", "scallop_free_highre", "--stroke", "-0.5"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("x0,y0,x1,y1,nx,ny\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 64);
    let with_obstacle = stdout(&swimkit(&["export-mesh", "scallop_obstacle"], dir.path()));
    assert_eq!(with_obstacle.lines().count(), 1 + 2 * 32 + 48);
}

#[test]
fn run_writes_outputs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = swimkit(&["run", "damped_stroke", "reparam_demo"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for stem in ["damped_stroke", "reparam_demo"] {
        for ext in ["csv", "verdict.txt", "summary.json"] {
            assert!(dir.path().join(format!("{stem}.{ext}")).is_file(), "{stem}.{ext}");
        }
    }
}

#[test]
fn collision_stop_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("close.toml");
    std::fs::write(
        &cfg,
        r#"name = "close"
model = "highre-obstacle"
step = 0.04
horizon = 12.0
[stroke]
waveform = "cosine"
amplitude = "pi/3"
[initial]
theta = "pi/2"
[geometry]
panel_count = 16
[obstacle]
center = [-3.05, 1.2]
width = 1.0
height = 4.0
panels = 24
"#,
    )
    .unwrap();
    let o = swimkit(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("collision stop"));
}

#[test]
fn bad_config_lists_every_error_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "name = \"bad\"\nmodel = \"lowre\"\nstep = -1.0\nhorizon = \"long\"\n[stroke]\nwaveform = \"square\"\n").unwrap();
    let o = swimkit(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    for key in ["step", "horizon", "stroke.waveform"] {
        assert!(err.contains(key), "{key} not reported in:\n{err}");
    }
    let o = swimkit(&["run", "no_such_scenario"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
