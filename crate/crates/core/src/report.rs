//! Bit-exact CSV output and re-loading.
//!
//! Every file opens with the complete effective configuration echoed as
//! `# key = value` lines, so any output reproduces its run. Reals are
//! printed with 17 significant digits, which round-trips f64 exactly;
//! identical configurations therefore produce byte-identical files.

use crate::config::{parse_config, ConfigError, RunConfig};
use crate::continuation::GlobalRun;
use crate::diagnostics::{EnergyReport, NodeSample};
use std::io::{self, Write};

/// 17 significant digits: exact f64 round-trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const NODE_HEADER: &str = "t,N_u,N_grad,L_rho2,sup,window_index";
pub const WINDOW_HEADER: &str = "window_index,t0,T,R,q_target,M,iterations,\
                                 measured_q,converged,balance_residual,holder_lhs,\
                                 holder_factor1,holder_factor2_status";

fn write_config_header(w: &mut impl Write, cfg: &RunConfig) -> io::Result<()> {
    for line in cfg.echo().lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

/// Per-node time series of the energy functionals.
pub fn write_report_csv(
    w: &mut impl Write,
    cfg: &RunConfig,
    report: &EnergyReport,
) -> io::Result<()> {
    write_config_header(w, cfg)?;
    writeln!(w, "{NODE_HEADER}")?;
    for n in &report.nodes {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(n.t),
            fmt_f64(n.n_u),
            fmt_f64(n.n_grad),
            fmt_f64(n.l_rho2),
            fmt_f64(n.sup),
            n.window_index
        )?;
    }
    Ok(())
}

/// One row per window: schedule, convergence record, and the per-window
/// diagnostics.
pub fn write_windows_csv(
    w: &mut impl Write,
    cfg: &RunConfig,
    run: &GlobalRun,
    report: &EnergyReport,
) -> io::Result<()> {
    write_config_header(w, cfg)?;
    writeln!(w, "{WINDOW_HEADER}")?;
    for (record, diag) in run.windows.iter().zip(&report.windows) {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            diag.window_index,
            fmt_f64(record.t0),
            fmt_f64(record.plan.window),
            fmt_f64(record.plan.radius),
            fmt_f64(record.plan.q),
            record.plan.intervals,
            record.report.iterations,
            fmt_f64(record.report.measured_q),
            record.report.converged,
            fmt_f64(diag.balance_residual),
            fmt_f64(diag.holder.lhs),
            fmt_f64(diag.holder.factor1),
            diag.holder.factor2
        )?;
    }
    Ok(())
}

/// Error from re-loading a report file.
#[derive(Debug)]
pub enum ReadError {
    Io(io::Error),
    Config(ConfigError),
    Format { line: usize, message: String },
}

impl std::fmt::Display for ReadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReadError::Io(e) => write!(f, "i/o: {e}"),
            ReadError::Config(e) => write!(f, "{e}"),
            ReadError::Format { line, message } => {
                write!(f, "report format error at line {line}: {message}")
            }
        }
    }
}

impl std::error::Error for ReadError {}

impl From<io::Error> for ReadError {
    fn from(e: io::Error) -> Self {
        ReadError::Io(e)
    }
}

/// Re-load a node CSV: the echoed configuration plus the time series.
pub fn read_report_csv(text: &str) -> Result<(RunConfig, Vec<NodeSample>), ReadError> {
    let mut config_text = String::new();
    let mut nodes = Vec::new();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            config_text.push_str(rest.trim());
            config_text.push('\n');
            continue;
        }
        if !seen_header {
            if line != NODE_HEADER {
                return Err(ReadError::Format {
                    line: idx + 1,
                    message: format!("expected column header `{NODE_HEADER}`"),
                });
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(ReadError::Format {
                line: idx + 1,
                message: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let num = |s: &str| -> Result<f64, ReadError> {
            s.parse::<f64>().map_err(|_| ReadError::Format {
                line: idx + 1,
                message: format!("bad real `{s}`"),
            })
        };
        nodes.push(NodeSample {
            t: num(fields[0])?,
            n_u: num(fields[1])?,
            n_grad: num(fields[2])?,
            l_rho2: num(fields[3])?,
            sup: num(fields[4])?,
            window_index: fields[5].parse().map_err(|_| ReadError::Format {
                line: idx + 1,
                message: format!("bad index `{}`", fields[5]),
            })?,
        });
    }
    let (cfg, _) = parse_config(&config_text).map_err(ReadError::Config)?;
    Ok((cfg, nodes))
}

/// Rebuild an [`EnergyReport`] skeleton from re-loaded nodes (window
/// diagnostics are not reconstructed).
pub fn report_from_nodes(cfg: &RunConfig, nodes: Vec<NodeSample>) -> EnergyReport {
    let mut report = EnergyReport::new(cfg.rho, cfg.nonlinearity);
    report.nodes = nodes;
    report
}
