//! Subcommand drivers: solve, verify, oracle-compare, energy-report.
//!
//! Each driver writes its human-readable lines to the supplied sink and
//! returns a process exit code:
//! 0 success, 1 verification violations, 2 suspected blow-up,
//! 3 non-convergence, 4 i/o failure, 64 configuration errors.

use crate::config::{RunConfig, SupCheck};
use crate::continuation::{global_solve, RunStatus, SolveOutcome};
use crate::diagnostics::{apriori_check, energy_functionals, require_nodes, EnergyReport};
use crate::fd::{fd_solve, fd_solve_linear, FdConfig};
use crate::grid::RealField;
use crate::report::{
    fmt_f64, read_report_csv, report_from_nodes, write_report_csv, write_windows_csv,
};
use std::fs::File;
use std::io::{BufWriter, Write};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_BLOWUP: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

/// Per-window balance gate: `max(1e-6, BALANCE_C / M^2)`, covering the
/// trapezoid error of both the solution and the report integral. The
/// residual scales with the fourth power of the data's spectral width,
/// so the constant is calibrated against the widest-spectrum case in the
/// desk-scale verification family (Gaussian bump, rho = 0.5, natural
/// schedule: 1.4e-2 at M = 8), not the pure-heat case alone (3.5e-6 at
/// M = 32). Runs needing the strict 1e-6 level must resolve their
/// windows via `t_cap`, as the acceptance reference runs do.
pub const BALANCE_C: f64 = 3.0;

/// Relative tolerance of the a-priori bound checks.
pub const APRIORI_TOL: f64 = 1e-8;
/// Per-step relative tolerance of the energy monotonicity check.
pub const MONOTONE_TOL: f64 = 1e-10;
/// Relative slack of the sup-norm boundedness check.
pub const SUP_TOL: f64 = 1e-8;

fn boundary_shell_sup(f: &RealField) -> f64 {
    let grid = f.grid();
    let n = grid.points_per_axis();
    let mut m = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            m = m.max(f.at(0, i, j).abs());
            m = m.max(f.at(i, 0, j).abs());
            m = m.max(f.at(i, j, 0).abs());
        }
    }
    m
}

fn emit_warnings(
    warnings: &[String],
    u0: &RealField,
    out: &mut impl Write,
) -> std::io::Result<()> {
    for w in warnings {
        writeln!(out, "warning: {w}")?;
    }
    let shell = boundary_shell_sup(u0);
    if shell > 1e-6 * u0.sup_norm() {
        writeln!(
            out,
            "warning: |u0| on the boundary shell is {} (sup {}); the periodic box is a \
             poor stand-in for decaying data here",
            fmt_f64(shell),
            fmt_f64(u0.sup_norm())
        )?;
    }
    Ok(())
}

fn write_outputs(cfg: &RunConfig, outcome: &SolveOutcome) -> std::io::Result<()> {
    let mut report = BufWriter::new(File::create(&cfg.out_report)?);
    write_report_csv(&mut report, cfg, &outcome.report)?;
    report.flush()?;
    let mut windows = BufWriter::new(File::create(&cfg.out_windows)?);
    write_windows_csv(&mut windows, cfg, &outcome.run, &outcome.report)?;
    windows.flush()?;
    if let Some(path) = &cfg.out_snapshot {
        let mut snap = BufWriter::new(File::create(path)?);
        outcome
            .final_field
            .write_snapshot(&mut snap)
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        snap.flush()?;
    }
    Ok(())
}

fn status_summary(outcome: &SolveOutcome, out: &mut impl Write) -> i32 {
    let word = match &outcome.run.status {
        RunStatus::Completed => "completed",
        RunStatus::BlowupSuspected(_) => "blowup_suspected",
        RunStatus::Nonconvergence { .. } => "nonconvergence",
    };
    let _ = writeln!(
        out,
        "{word} final_time={} final_sup={} max_balance_residual={}",
        fmt_f64(outcome.run.final_time),
        fmt_f64(outcome.final_field.sup_norm()),
        fmt_f64(outcome.report.max_window_balance_residual()),
    );
    match &outcome.run.status {
        RunStatus::Completed => EXIT_OK,
        RunStatus::BlowupSuspected(diag) => {
            let _ = writeln!(out, "blow-up diagnosis: {diag}");
            EXIT_BLOWUP
        }
        RunStatus::Nonconvergence {
            t0,
            max_iter,
            last_diff,
        } => {
            let _ = writeln!(
                out,
                "window at t0 = {t0} did not converge within {max_iter} iterations \
                 (last distance {last_diff:e})"
            );
            EXIT_NONCONVERGENCE
        }
    }
}

fn solve_common(
    cfg: &RunConfig,
    warnings: &[String],
    out: &mut impl Write,
) -> Result<SolveOutcome, i32> {
    let grid = match cfg.grid() {
        Ok(g) => g,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return Err(EXIT_USAGE);
        }
    };
    let u0 = match cfg.initial_data.realize(grid) {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return Err(EXIT_USAGE);
        }
    };
    if emit_warnings(warnings, &u0, out).is_err() {
        return Err(EXIT_IO);
    }
    let outcome = match global_solve(&u0, &cfg.solve_params()) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return Err(EXIT_USAGE);
        }
    };
    if let Err(e) = write_outputs(cfg, &outcome) {
        let _ = writeln!(out, "i/o error: {e}");
        return Err(EXIT_IO);
    }
    Ok(outcome)
}

/// Run the solver, write the report and window CSVs (plus the optional
/// snapshot), and print a one-line summary.
pub fn run_solve(cfg: &RunConfig, warnings: &[String], out: &mut impl Write) -> i32 {
    match solve_common(cfg, warnings, out) {
        Ok(outcome) => status_summary(&outcome, out),
        Err(code) => code,
    }
}

/// The checks applied by `verify`, shared with the from-report path.
fn collect_violations(
    cfg: &RunConfig,
    report: &EnergyReport,
    check_balance: bool,
) -> Vec<String> {
    let mut violations: Vec<String> = Vec::new();
    for v in apriori_check(report, APRIORI_TOL) {
        violations.push(v.to_string());
    }
    for v in report.monotonicity_violations(MONOTONE_TOL) {
        violations.push(v.to_string());
    }
    if check_balance {
        let gate = 1e-6_f64.max(BALANCE_C / (cfg.intervals as f64).powi(2));
        let worst = report.max_window_balance_residual();
        if worst > gate {
            violations.push(format!(
                "energy balance defect {} exceeds gate {}",
                fmt_f64(worst),
                fmt_f64(gate)
            ));
        }
    }
    if !report.nodes.is_empty() {
        let sup0 = report.nodes[0].sup;
        let bound = sup0 * (1.0 + SUP_TOL);
        match cfg.sup_check {
            SupCheck::Bounded => {
                let max = report.max_sup();
                if max > bound {
                    violations.push(format!(
                        "sup norm {} exceeds the initial sup {} beyond tolerance",
                        fmt_f64(max),
                        fmt_f64(sup0)
                    ));
                }
            }
            SupCheck::Monotone => {
                for w in report.nodes.windows(2) {
                    if w[1].sup > w[0].sup * (1.0 + SUP_TOL) {
                        violations.push(format!(
                            "sup norm increased at t = {}: {} -> {}",
                            w[1].t,
                            fmt_f64(w[0].sup),
                            fmt_f64(w[1].sup)
                        ));
                    }
                }
            }
        }
    }
    violations
}

/// Solve, then assert every runtime estimate; exit 0 only when all hold.
pub fn run_verify(cfg: &RunConfig, warnings: &[String], out: &mut impl Write) -> i32 {
    let outcome = match solve_common(cfg, warnings, out) {
        Ok(o) => o,
        Err(code) => return code,
    };
    let code = status_summary(&outcome, out);
    if code != EXIT_OK {
        return code;
    }
    let violations = collect_violations(cfg, &outcome.report, true);
    report_violations(&violations, out)
}

fn report_violations(violations: &[String], out: &mut impl Write) -> i32 {
    if violations.is_empty() {
        let _ = writeln!(out, "verify: all checks passed");
        EXIT_OK
    } else {
        let _ = writeln!(out, "verify: {} violation(s)", violations.len());
        for v in violations {
            let _ = writeln!(out, "violation: {v}");
        }
        EXIT_VIOLATIONS
    }
}

/// Re-check a previously written report file (no solve). The balance gate
/// is skipped because per-window rows live in the windows file; the
/// a-priori, monotonicity, and sup checks all run.
pub fn run_verify_report(path: &str, out: &mut impl Write) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(out, "i/o error: {e}");
            return EXIT_IO;
        }
    };
    let (cfg, nodes) = match read_report_csv(&text) {
        Ok(pair) => pair,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return EXIT_IO;
        }
    };
    let report = report_from_nodes(&cfg, nodes);
    if let Err(e) = require_nodes(&report) {
        let _ = writeln!(out, "error: {e}");
        return EXIT_IO;
    }
    let violations = collect_violations(&cfg, &report, false);
    report_violations(&violations, out)
}

/// Solve with both the spectral path and the explicit stencil oracle and
/// report the sup difference at the horizon.
pub fn run_oracle_compare(cfg: &RunConfig, warnings: &[String], out: &mut impl Write) -> i32 {
    let outcome = match solve_common(cfg, warnings, out) {
        Ok(o) => o,
        Err(code) => return code,
    };
    let code = status_summary(&outcome, out);
    if code != EXIT_OK {
        return code;
    }
    let grid = cfg.grid().expect("validated");
    let u0 = cfg.initial_data.realize(grid).expect("validated");
    let dt = cfg.fd_step_size().expect("validated");
    let fd_cfg = match FdConfig::new(grid, dt, cfg.t_max) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let fd_final = if cfg.nonlinearity {
        fd_solve(&u0, cfg.t_max, &fd_cfg, cfg.rho)
    } else {
        fd_solve_linear(&u0, cfg.t_max, &fd_cfg)
    };
    let fd_final = match fd_final {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let diff = outcome
        .final_field
        .sup_distance(&fd_final)
        .expect("same grid");
    let _ = writeln!(
        out,
        "oracle_compare fd_dt={} fd_steps={} sup_diff={} spectral_sup={} fd_sup={}",
        fmt_f64(fd_cfg.dt),
        fd_cfg.steps,
        fmt_f64(diff),
        fmt_f64(outcome.final_field.sup_norm()),
        fmt_f64(fd_final.sup_norm()),
    );
    EXIT_OK
}

/// Recompute the energy functionals from snapshot files.
pub fn run_energy_report(rho: f64, paths: &[String], out: &mut impl Write) -> i32 {
    let _ = writeln!(out, "file,N_u,N_grad,L_rho2,sup");
    for path in paths {
        let mut file = match File::open(path) {
            Ok(f) => f,
            Err(e) => {
                let _ = writeln!(out, "i/o error: {path}: {e}");
                return EXIT_IO;
            }
        };
        let field = match RealField::read_snapshot(&mut file) {
            Ok(f) => f,
            Err(e) => {
                let _ = writeln!(out, "error: {path}: {e}");
                return EXIT_IO;
            }
        };
        let e = energy_functionals(&field, rho);
        let _ = writeln!(
            out,
            "{path},{},{},{},{}",
            fmt_f64(e.n_u),
            fmt_f64(e.n_grad),
            fmt_f64(e.l_rho2),
            fmt_f64(e.sup)
        );
    }
    EXIT_OK
}
