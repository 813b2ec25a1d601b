use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastic-bie"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect()
}

#[test]
fn solve_output_is_stable_and_echoes_config() {
    let a = run(&["solve", "--geometry", "ellipse", "--panels", "24"]);
    let b = run(&["solve", "--geometry", "ellipse", "--panels", "24"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("# geometry = ellipse\n") && text.contains("# panels = 24\n"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    let err1: f64 = rows[0].split(',').nth(7).unwrap().parse().unwrap();
    assert!(err1 < 1e-12);
}

#[test]
fn config_file_then_flags_then_overrides() {
    let dir = std::env::temp_dir().join(format!("elastic-bie-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "# study\ngeometry = circle\npanels = 8, 12\nomega = 2\nside = exterior\n",
    )
    .unwrap();
    let out = dir.join("table.csv");
    let o = run(&[
        "convergence",
        "--config",
        cfg.to_str().unwrap(),
        "--omega",
        "3",
        "--set",
        "panels=12",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("# omega = 3\n") && text.contains("# panels = 12\n"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 2, "{text}");
    assert!(rows[0].starts_with("circle,dnd,exterior,3,12,0,"));
    assert!(rows[1].starts_with("circle,snn,exterior,3,12,0,"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn configuration_errors_exit_with_two() {
    for args in [
        vec!["rcip-sweep", "--geometry", "circle"],
        vec!["solve", "--set", "colour=blue"],
        vec!["convergence", "--panels", ""],
        vec!["solve", "--omega", "-3"],
        vec!["solve", "--geometry", "hexagon"],
        vec!["solve", "--config", "/nonexistent/run.cfg"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn sweep_rows_follow_configuration_order() {
    let o = run(&[
        "rcip-sweep",
        "--formulation",
        "dnd",
        "--side",
        "exterior",
        "--panels",
        "12",
        "--nsub",
        "0..8:4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let nsub: Vec<&str> = data_rows(&text)
        .iter()
        .map(|r| r.split(',').nth(5).unwrap())
        .collect();
    assert_eq!(nsub, ["0", "4", "8"]);
}

#[test]
fn asymptotics_reports_roots() {
    let o = run(&[
        "asymptotics",
        "--side",
        "exterior",
        "--panels",
        "8",
        "--nsub",
        "20",
        "--set",
        "window=6,15",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.contains(",nu1,nu2,")));
    let row = data_rows(&text)[0];
    let f: Vec<&str> = row.split(',').collect();
    assert_eq!(f[14], "0.61049131527757");
    assert_eq!(f[15], "0.54448373678246");
    let alpha: f64 = f[12].parse().unwrap();
    assert!((alpha - 0.5408).abs() < 0.01, "{alpha}");
}

#[test]
fn plane_wave_solve_reports_field_values() {
    let o = run(&[
        "solve",
        "--set",
        "incident=shear",
        "--set",
        "angle=0.5",
        "--set",
        "targets=12.1,5.2;-4,0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(data_rows(&text).len(), 2);
    let o = run(&["convergence", "--set", "incident=shear"]);
    assert_eq!(o.status.code(), Some(2));
}
