use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn geqw(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geqw"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn surface_writes_csv_and_sidecar_then_replays() {
    let dir = tempfile::tempdir().unwrap();
    let o = geqw(
        &[
            "surface",
            "--theta-grid",
            "0:45:90",
            "--omega-grid",
            "30,90",
            "--steps",
            "40",
            "--ensemble",
            "3",
            "--out",
            "s.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("seed 42"));

    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "q,sigma2,theta_deg,omega_deg,beta_deg,entropy_mean,entropy_std,runs"
    );
    assert_eq!(lines.count(), 3 * 2);

    let json = fs::read_to_string(dir.path().join("s.json")).unwrap();
    assert!(json.contains("\"seed\": 42"));
    assert!(json.contains("\"ensemble\": 3"));
    assert!(json.contains("\"window_fraction\": 0.5"));

    let o = geqw(&["replay", "s.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("identical"));

    fs::write(
        dir.path().join("s.csv"),
        csv.replace("inf,0,0,", "inf,0,1,"),
    )
    .unwrap();
    let o = geqw(&["replay", "s.json"], dir.path());
    assert!(!o.status.success());
    assert!(stdout(&o).contains("DIFFERS"));
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "q = [0.5, \"inf\"]\nsteps = 25\nensemble = 2\nseed = 5\nout = \"from-file.csv\"\n",
    )
    .unwrap();
    let o = geqw(
        &["entropy-vs-q", "--config", "run.toml", "--seed", "9"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("seed 9"));
    let meta = fs::read_to_string(dir.path().join("from-file.json")).unwrap();
    assert!(meta.contains("\"seed\": 9"));
    assert!(meta.contains("\"steps\": 25"));
    let rows = fs::read_to_string(dir.path().join("from-file.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "steps = \"ten\"\n").unwrap();
    let o = geqw(&["series", "--config", "bad.toml"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("`steps`"), "{}", stderr(&o));

    fs::write(dir.path().join("bad.toml"), "colour = 1\n").unwrap();
    let o = geqw(&["series", "--config", "bad.toml"], dir.path());
    assert!(stderr(&o).contains("`colour`"), "{}", stderr(&o));
}

#[test]
fn angles_are_degrees() {
    let dir = tempfile::tempdir().unwrap();
    let o = geqw(
        &["series", "--theta-grid", "91", "--steps", "5"],
        dir.path(),
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains("theta-grid"), "{}", stderr(&o));

    let o = geqw(
        &[
            "series",
            "--theta-grid",
            "90",
            "--omega-grid",
            "180",
            "--steps",
            "5",
            "--out",
            "x.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn trace_distance_writes_fit_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = geqw(
        &[
            "trace-distance",
            "--q",
            "0.5,inf",
            "--sigma2",
            "0",
            "--steps",
            "150",
            "--ensemble",
            "2",
            "--out",
            "td/out.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let fits = fs::read_to_string(dir.path().join("td/out.fits.csv")).unwrap();
    assert!(fits.starts_with("q,sigma2,theta_deg,omega_deg,beta_deg,beta,"));
    assert_eq!(fits.lines().count(), 3);
    assert_eq!(
        fs::read_to_string(dir.path().join("td/out.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 2 * 151
    );
}

#[test]
fn hadamard_rejects_a_theta_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = geqw(
        &["surface", "--coin", "hadamard", "--theta-grid", "0,45"],
        dir.path(),
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains("theta-grid"));
}
