use std::path::Path;
use std::process::Command;

fn lab(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_burgers-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn residual_of_singular_burgers_is_small() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["residual", "--mu", "2", "--set", "residual.times=[0.5]"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(dir.path());
    let r = m["results"]["values"]["max_residual"].as_f64().unwrap();
    assert!(r < 1e-5, "{r}");
    assert_eq!(m["command"], "residual");
    assert!(m["wall_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["config"]["strain"]["mu"], 2.0);
}

#[test]
fn zero_circulation_spectrum_tops_at_minus_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["spectrum", "--set", "spectrum.mus=[2.0]", "--set", "spectrum.alphas=[0.0]", "--set", "spectrum.modes=12"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let first = text.lines().nth(1).unwrap();
    let cells: Vec<&str> = first.split(',').collect();
    assert_eq!(cells[0], "horizontal");
    let re: f64 = cells[5].parse().unwrap();
    assert!((re + 3.0).abs() < 1e-6, "{re}");
}

#[test]
fn evolve2d_d1g_decays_at_half_rate() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(
        &["evolve2d", "--preset", "d1g", "--set", "grid.n=96", "--set", "grid.radius=10", "--set", "time.tau_end=4", "--set", "time.dt=0.1", "--set", "evolve.fit_window=[2, 4]"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(dir.path());
    let rate = m["results"]["values"]["decay"]["exponent"].as_f64().unwrap();
    assert!((rate + 0.5).abs() < 0.05, "{rate}");
    let history = std::fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert!(history.starts_with("tau,norm,"));
}

#[test]
fn identical_configs_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["evolve2d", "--set", "grid.n=64", "--set", "grid.radius=10", "--set", "time.tau_end=2", "--set", "time.dt=0.1", "--set", "time.record_every=1", "--set", "evolve.fit_window=[0.5, 2]", "--seed", "3"];
    for d in [&a, &b] {
        assert_eq!(lab(&args, d.path()).status.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("history.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn fields_dump_round_trips_through_evolve_input() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["fields", "--preset", "d1g", "--set", "grid.n=32", "--set", "grid.radius=10"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dump = dir.path().join("field.bin");
    let csv = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 32 * 32);
    let run = tempfile::tempdir().unwrap();
    let data = format!("initial.data=\"{}\"", dump.display());
    let o = lab(&["evolve2d", "--set", &data, "--set", "time.tau_end=2", "--set", "time.dt=0.1", "--set", "time.record_every=1", "--set", "evolve.fit_window=[0.5, 2]"], run.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_config_exits_with_two_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["evolve2d", "--mu", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("strain.mu"));
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[grid]\nn = 64\nwidth = 3.0\n").unwrap();
    let o = lab(&["evolve2d", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.width"));
}

#[test]
fn failed_tolerance_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["residual", "--set", "tolerances.residual=1e-30", "--set", "residual.times=[0.0]", "--set", "grid.n=32"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(manifest(dir.path())["results"]["passed"], false);
}
