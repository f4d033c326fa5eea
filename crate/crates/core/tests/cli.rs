//! End-to-end tests of the `semiheat` binary: exit codes, flag handling,
//! file outputs, and the verify/report workflows.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_semiheat")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("semiheat-cli-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn out_args(dir: &Path) -> Vec<String> {
    vec![
        "--out-report".into(),
        dir.join("report.csv").display().to_string(),
        "--out-windows".into(),
        dir.join("windows.csv").display().to_string(),
    ]
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let extra = out_args(dir);
    Command::new(bin())
        .args(args)
        .args(&extra)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn zero_data_solve_exits_zero_with_all_zero_report() {
    let dir = tmp_dir("zero");
    let out = run_in(&dir, &["solve", "--rho", "1", "--t-max", "0.5", "--n", "8"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("completed"));
    let report = fs::read_to_string(dir.join("report.csv")).unwrap();
    let mut rows = 0;
    for line in report.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        // every functional column (all but t and window_index) is zero
        for f in &fields[1..5] {
            assert_eq!(f.parse::<f64>().unwrap(), 0.0, "row: {line}");
        }
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn homogeneous_solve_reports_the_closed_form_sup() {
    let dir = tmp_dir("homog");
    let out = run_in(
        &dir,
        &[
            "solve",
            "--rho", "2",
            "--t-max", "1",
            "--n", "4",
            "--initial-data", "constant(1.0)",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let sup: f64 = text
        .split("final_sup=")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(
        (sup - 0.577_350_269_189_625_8).abs() <= 1e-4,
        "final sup {sup} out of tolerance; stdout: {text}"
    );
}

#[test]
fn forced_blowup_cap_exits_two() {
    let dir = tmp_dir("blowup");
    let out = run_in(
        &dir,
        &[
            "solve",
            "--rho", "1",
            "--t-max", "0.5",
            "--n", "8",
            "--blowup-factor", "1e-30",
            "--initial-data", "gaussian_bump(1.0, 0.55)",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "stdout: {}", stdout_of(&out));
    assert!(stdout_of(&out).contains("blowup_suspected"));
    assert!(stdout_of(&out).contains("exceeded cap"));
}

#[test]
fn degenerate_schedule_exits_two_with_window_diagnosis() {
    let dir = tmp_dir("tinyq");
    let out = run_in(
        &dir,
        &[
            "solve",
            "--rho", "1",
            "--t-max", "0.5",
            "--n", "8",
            "--q", "1e-15",
            "--initial-data", "gaussian_bump(1.0, 0.55)",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout_of(&out).contains("fell below floor"));
}

#[test]
fn nonconvergence_exits_three() {
    let dir = tmp_dir("noconv");
    let out = run_in(
        &dir,
        &[
            "solve",
            "--rho", "1",
            "--t-max", "0.5",
            "--n", "8",
            "--max-iter", "1",
            "--initial-data", "gaussian_bump(1.0, 0.55)",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout_of(&out).contains("nonconvergence"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tmp_dir("override");
    let cfg_path = dir.join("run.cfg");
    fs::write(
        &cfg_path,
        "# a small run\nrho = 2\nt_max = 1\nn = 4\ninitial_data = constant(1.0)\n",
    )
    .unwrap();
    // the flag shortens the horizon; the summary must land on it
    let out = run_in(
        &dir,
        &[
            "solve",
            "--config",
            cfg_path.to_str().unwrap(),
            "--t-max",
            "0.25",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(
        stdout_of(&out).contains("final_time=2.5000000000000000e-1"),
        "stdout: {}",
        stdout_of(&out)
    );
}

#[test]
fn config_errors_exit_64_with_locations() {
    let dir = tmp_dir("cfgerr");
    let cfg_path = dir.join("bad.cfg");
    fs::write(&cfg_path, "rho = 1\nturbo = yes\n").unwrap();
    let out = run(&["solve", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
    let err = stderr_of(&out);
    assert!(err.contains("unknown key"), "stderr: {err}");
    assert!(err.contains(":2"), "location missing: {err}");

    let out = run(&["solve", "--rho", "-1", "--t-max", "1"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(stderr_of(&out).contains("positive"));

    let out = run(&["solve", "--rho", "1", "--t-max", "1", "--q", "1.0"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(stderr_of(&out).contains("(0, 1)"));

    let out = run(&["solve", "--rho", "1"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(stderr_of(&out).contains("t_max"));
}

#[test]
fn verify_passes_on_the_reference_cases() {
    let dir = tmp_dir("verify");
    // pure heat
    let out = run_in(
        &dir,
        &[
            "verify",
            "--rho", "2",
            "--t-max", "1",
            "--n", "8",
            "--m", "16",
            "--nonlinearity", "off",
            "--initial-data", "sine(0, 1, 1.0)",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stdout: {}", stdout_of(&out));
    assert!(stdout_of(&out).contains("all checks passed"));
    // homogeneous
    let out = run_in(
        &dir,
        &[
            "verify",
            "--rho", "2",
            "--t-max", "1",
            "--n", "4",
            "--initial-data", "constant(1.0)",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_flags_a_tampered_report() {
    let dir = tmp_dir("tamper");
    let out = run_in(
        &dir,
        &[
            "solve",
            "--rho", "1",
            "--t-max", "0.25",
            "--n", "8",
            "--initial-data", "gaussian_bump(1.0, 0.55)",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let path = dir.join("report.csv");
    let text = fs::read_to_string(&path).unwrap();
    // inflate N_u on a mid-series row
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let data_start = lines
        .iter()
        .position(|l| !l.starts_with('#') && l.starts_with('t'))
        .unwrap()
        + 1;
    let mid = data_start + (lines.len() - data_start) / 2;
    let mut fields: Vec<String> = lines[mid].split(',').map(String::from).collect();
    let bumped: f64 = fields[1].parse::<f64>().unwrap() * 10.0 + 1.0;
    fields[1] = format!("{bumped:.16e}");
    lines[mid] = fields.join(",");
    fs::write(&path, lines.join("\n")).unwrap();

    let out = run(&["verify", "--from-report", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "stdout: {}", stdout_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("violation"), "stdout: {text}");
    assert!(text.contains("N_u"), "stdout: {text}");
}

#[test]
fn sup_check_downgrade_tolerates_a_bounded_wiggle() {
    // a sup series that dips and partially recovers violates the
    // monotone check but stays within the boundedness check
    let dir = tmp_dir("supcheck");
    let out = run_in(
        &dir,
        &[
            "solve",
            "--rho", "1",
            "--t-max", "0.25",
            "--n", "8",
            "--initial-data", "gaussian_bump(1.0, 0.55)",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let path = dir.join("report.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let last = lines.len() - 1;
    let mut fields: Vec<String> = lines[last].split(',').map(String::from).collect();
    // raise the final sup above its predecessor but below sup(u0)
    let wiggled: f64 = fields[4].parse::<f64>().unwrap() * 1.5;
    fields[4] = format!("{wiggled:.16e}");
    lines[last] = fields.join(",");
    fs::write(&path, lines.join("\n")).unwrap();

    let out = run(&["verify", "--from-report", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "monotone check must flag the wiggle");
    assert!(stdout_of(&out).contains("sup norm increased"));

    // downgrade the check in the echoed header and re-verify
    let text = fs::read_to_string(&path).unwrap();
    let text = text.replace("# sup_check = monotone", "# sup_check = bounded");
    fs::write(&path, text).unwrap();
    let out = run(&["verify", "--from-report", path.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "bounded check must accept it: {}",
        stdout_of(&out)
    );
}

#[test]
fn verify_from_report_accepts_untouched_output() {
    let dir = tmp_dir("verify-clean");
    let out = run_in(
        &dir,
        &[
            "solve",
            "--rho", "2",
            "--t-max", "0.5",
            "--n", "4",
            "--initial-data", "constant(1.0)",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let path = dir.join("report.csv");
    let out = run(&["verify", "--from-report", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stdout: {}", stdout_of(&out));
}

#[test]
fn oracle_compare_reports_the_difference() {
    let dir = tmp_dir("oracle");
    let out = run_in(
        &dir,
        &[
            "oracle-compare",
            "--rho", "1",
            "--t-max", "0.1",
            "--n", "8",
            "--initial-data", "gaussian_bump(1.0, 0.55)",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let diff: f64 = text
        .split("sup_diff=")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    // N = 8 is deliberately coarse; the two routes still agree loosely
    assert!(diff < 0.05, "sup_diff {diff}; stdout: {text}");
}

#[test]
fn energy_report_recomputes_from_a_snapshot() {
    let dir = tmp_dir("energy");
    let snap = dir.join("final.snap");
    let out = Command::new(bin())
        .args([
            "solve",
            "--rho", "2",
            "--t-max", "1",
            "--n", "4",
            "--initial-data", "constant(1.0)",
            "--out-snapshot", snap.to_str().unwrap(),
        ])
        .args(out_args(&dir))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    let out = run(&["energy-report", "--rho", "2", snap.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.starts_with("file,N_u,N_grad,L_rho2,sup"));

    // cross-check against the library on the same snapshot
    let mut file = fs::File::open(&snap).unwrap();
    let field = semiheat::grid::RealField::read_snapshot(&mut file).unwrap();
    let e = semiheat::diagnostics::energy_functionals(&field, 2.0);
    let row = text.lines().nth(1).unwrap();
    assert!(row.contains(&format!("{:.16e}", e.n_u)), "row: {row}");
    assert!(row.contains(&format!("{:.16e}", e.sup)), "row: {row}");

    // missing file is an i/o failure
    let out = run(&["energy-report", "--rho", "2", "no-such-file.snap"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn repeated_cli_runs_are_byte_identical() {
    let dir = tmp_dir("determinism");
    let args = [
        "solve",
        "--rho", "1",
        "--t-max", "0.25",
        "--n", "8",
        "--initial-data", "gaussian_bump(1.0, 0.55)",
    ];
    let out = run_in(&dir, &args);
    assert_eq!(out.status.code(), Some(0));
    let report_a = fs::read(dir.join("report.csv")).unwrap();
    let windows_a = fs::read(dir.join("windows.csv")).unwrap();
    let out = run_in(&dir, &args);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report_a, fs::read(dir.join("report.csv")).unwrap());
    assert_eq!(windows_a, fs::read(dir.join("windows.csv")).unwrap());
}

#[test]
fn report_header_echo_reparses_identically() {
    let dir = tmp_dir("echo");
    let out = run_in(
        &dir,
        &[
            "solve",
            "--rho", "1.5",
            "--t-max", "0.25",
            "--n", "8",
            "--q", "0.3",
            "--initial-data", "gaussian_bump(0.8, 0.5)",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.join("report.csv")).unwrap();
    let header: String = text
        .lines()
        .filter_map(|l| l.strip_prefix('#'))
        .map(|l| format!("{}\n", l.trim()))
        .collect();
    let (cfg, _) = semiheat::config::parse_config(&header).unwrap();
    assert_eq!(cfg.rho, 1.5);
    assert_eq!(cfg.q, 0.3);
    // the re-echo matches the header up to trailing whitespace
    let echo = cfg.echo();
    let echoed: Vec<&str> = echo.lines().map(str::trim_end).collect();
    let original: Vec<&str> = header.lines().map(str::trim_end).collect();
    assert_eq!(echoed, original);
}

#[test]
fn unknown_subcommand_and_help() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains("oracle-compare"));
}
