//! Window scheduling and global continuation.
//!
//! Each window is sized so the fixed-point map is a contraction on a ball:
//! with `F_bound` the sup norm of the window's initial data (a valid bound
//! for the propagated data since the heat flow contracts the sup norm),
//! the scheduler picks `R = 2 * F_bound` and the largest `T` satisfying
//! both `T R^(rho+1) + F_bound <= R` (the ball maps into itself) and
//! `T (rho+1) R^rho <= q < 1` (the map contracts). Doubling `F_bound`
//! makes the self-map slack equal to `F_bound` itself, so the schedule is
//! never degenerate and `q` stays the only tuning knob.
//!
//! Chaining windows, each seeded with the previous endpoint field,
//! extends the solution to any horizon. A guard watches for the two
//! events a valid run can never produce: the sup norm escaping past a cap
//! or the schedule collapsing to zero-length windows. Either one is
//! reported as a suspected blow-up with full context, not swallowed.

use crate::diagnostics::EnergyReport;
use crate::error::{Error, Result};
use crate::grid::RealField;
use crate::picard::{solve_window, PicardReport, WindowOperator, WindowState};

/// Floor for the ball radius so zero initial data still schedules.
const RADIUS_FLOOR: f64 = 1e-8;

/// A scheduled window: ball radius, length, contraction target, and node
/// count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPlan {
    /// Ball radius `R`.
    pub radius: f64,
    /// Window length `T`.
    pub window: f64,
    /// Contraction target `q` in `(0, 1)`.
    pub q: f64,
    /// Quadrature intervals `M` per window.
    pub intervals: usize,
}

/// Size one window from a bound on the propagated initial data.
///
/// Both scheduling inequalities hold by construction and `T > 0` always;
/// the radius floor handles the zero-data case.
pub fn plan_window(
    f_bound: f64,
    rho: f64,
    q: f64,
    t_cap: f64,
    intervals: usize,
) -> Result<WindowPlan> {
    if !(f_bound >= 0.0) || !f_bound.is_finite() {
        return Err(Error::InvalidParameter {
            name: "f_bound",
            requirement: ">= 0 and finite",
            value: f_bound,
        });
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rho",
            requirement: "> 0",
            value: rho,
        });
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter {
            name: "q",
            requirement: "in (0, 1)",
            value: q,
        });
    }
    if !(t_cap > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_cap",
            requirement: "> 0",
            value: t_cap,
        });
    }
    let radius = 2.0 * f_bound.max(RADIUS_FLOOR);
    let t_ball = (radius - f_bound) / radius.powf(rho + 1.0);
    let t_contract = q / ((rho + 1.0) * radius.powf(rho));
    let window = t_ball.min(t_contract).min(t_cap);
    Ok(WindowPlan {
        radius,
        window,
        q,
        intervals,
    })
}

/// Diagnosis attached to a suspected blow-up event.
///
/// The continuation loop monitors for two degeneracies that a well-posed
/// run must never exhibit: the solution sup norm escaping past a cap, or
/// the scheduled window length collapsing below a floor. Either one means
/// the numerical contract was violated upstream, so the diagnosis carries
/// the time, the sup-norm history at the window junctions, and the last
/// window plan.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupDiagnosis {
    /// Time at which the event was detected.
    pub t: f64,
    /// Sup-norm history at window junctions up to the event.
    pub sup_history: Vec<f64>,
    /// The plan in force when the detector fired (the offending schedule
    /// or the just-completed window).
    pub last_plan: Option<WindowPlan>,
    /// Why the detector fired.
    pub reason: BlowupReason,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlowupReason {
    /// Solution sup norm exceeded the configured cap.
    SupNormCap { sup: f64, cap: f64 },
    /// Scheduled window length fell below the configured floor.
    WindowTooSmall { window: f64, floor: f64 },
}

impl std::fmt::Display for BlowupDiagnosis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.reason {
            BlowupReason::SupNormCap { sup, cap } => {
                write!(f, "sup norm {sup:e} exceeded cap {cap:e} at t = {}", self.t)?;
            }
            BlowupReason::WindowTooSmall { window, floor } => {
                write!(
                    f,
                    "scheduled window {window:e} fell below floor {floor:e} at t = {}",
                    self.t
                )?;
            }
        }
        if let Some(plan) = &self.last_plan {
            write!(
                f,
                " (last plan: R = {}, T = {}, q = {}, M = {})",
                plan.radius, plan.window, plan.q, plan.intervals
            )?;
        }
        Ok(())
    }
}

/// Monitors a run in progress for the two impossible events.
#[derive(Debug, Clone, Copy)]
pub struct BlowupGuard {
    /// Sup-norm cap, `blowup_factor * sup(u0)`.
    pub sup_cap: f64,
    /// Smallest admissible scheduled window.
    pub t_min: f64,
}

impl BlowupGuard {
    /// Check the state after a window (`sup_now`) and the next schedule
    /// (`scheduled_window`). Returns a diagnosis if either bound is
    /// violated; by the global existence result this must never happen
    /// for valid inputs, so a firing indicates a numerical-contract
    /// violation upstream.
    pub fn check(
        &self,
        t: f64,
        sup_now: f64,
        scheduled_window: f64,
        sup_history: &[f64],
        last_plan: Option<WindowPlan>,
    ) -> Option<BlowupDiagnosis> {
        if sup_now > self.sup_cap {
            return Some(BlowupDiagnosis {
                t,
                sup_history: sup_history.to_vec(),
                last_plan,
                reason: BlowupReason::SupNormCap {
                    sup: sup_now,
                    cap: self.sup_cap,
                },
            });
        }
        if scheduled_window < self.t_min {
            return Some(BlowupDiagnosis {
                t,
                sup_history: sup_history.to_vec(),
                last_plan,
                reason: BlowupReason::WindowTooSmall {
                    window: scheduled_window,
                    floor: self.t_min,
                },
            });
        }
        None
    }
}

/// Terminal state of a continuation run.
#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    BlowupSuspected(BlowupDiagnosis),
    Nonconvergence {
        t0: f64,
        max_iter: usize,
        last_diff: f64,
    },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

/// One completed window of a run.
#[derive(Debug, Clone)]
pub struct WindowRecord {
    pub t0: f64,
    pub plan: WindowPlan,
    pub report: PicardReport,
}

/// The chained-window record of a whole run.
#[derive(Debug, Clone)]
pub struct GlobalRun {
    pub windows: Vec<WindowRecord>,
    pub final_time: f64,
    pub status: RunStatus,
}

/// Everything `global_solve` needs beyond the initial data.
#[derive(Debug, Clone, Copy)]
pub struct SolveParams {
    pub rho: f64,
    pub t_max: f64,
    /// Contraction target per window.
    pub q: f64,
    /// Fixed-point stopping tolerance in the window norm.
    pub tol: f64,
    /// Quadrature intervals per window.
    pub intervals: usize,
    pub max_iter: usize,
    /// Upper bound on the scheduled window length.
    pub t_cap: f64,
    /// Sup-norm cap factor relative to `sup(u0)`.
    pub blowup_factor: f64,
    /// Floor for scheduled windows.
    pub t_min: f64,
    /// When false the absorption term is dropped and each window is the
    /// pure heat flow (the schedule is kept unchanged so the node layout
    /// stays comparable).
    pub nonlinear: bool,
}

impl SolveParams {
    pub fn new(rho: f64, t_max: f64) -> Self {
        Self {
            rho,
            t_max,
            q: 0.5,
            tol: 1e-10,
            intervals: 8,
            max_iter: 400,
            t_cap: f64::INFINITY,
            blowup_factor: 1e12,
            t_min: 1e-12,
            nonlinear: true,
        }
    }
}

/// Full outcome of a run: the window log, the diagnostics series, and the
/// field at `final_time`.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub run: GlobalRun,
    pub report: EnergyReport,
    pub final_field: RealField,
}

/// Advance window by window to the horizon, seeding each window with the
/// previous endpoint field (shared bitwise) and shortening the last
/// window to land exactly on `t_max`.
pub fn global_solve(u0: &RealField, params: &SolveParams) -> Result<SolveOutcome> {
    global_solve_with(u0, params, |_| {})
}

/// [`global_solve`] with an observer called on each completed window
/// state, in time order.
pub fn global_solve_with(
    u0: &RealField,
    params: &SolveParams,
    mut on_window: impl FnMut(&WindowState),
) -> Result<SolveOutcome> {
    if !u0.is_finite() {
        return Err(Error::NonFinite {
            context: "initial data",
        });
    }
    if !(params.t_max > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_max",
            requirement: "> 0",
            value: params.t_max,
        });
    }
    let guard = BlowupGuard {
        sup_cap: params.blowup_factor * u0.sup_norm(),
        t_min: params.t_min,
    };
    let mut report = EnergyReport::new(params.rho, params.nonlinear);
    let mut windows = Vec::new();
    let mut sup_history = vec![u0.sup_norm()];
    let mut u = u0.clone();
    let mut t = 0.0_f64;
    let mut status = RunStatus::Completed;

    while t < params.t_max {
        let scheduled = plan_window(
            u.sup_norm(),
            params.rho,
            params.q,
            params.t_cap,
            params.intervals,
        )?;
        if let Some(diag) = guard.check(
            t,
            u.sup_norm(),
            scheduled.window,
            &sup_history,
            Some(scheduled),
        ) {
            status = RunStatus::BlowupSuspected(diag);
            break;
        }
        // land exactly on the horizon; the relative slack absorbs the
        // rounding drift of repeated `t + T` so no sliver window is
        // scheduled when t_cap divides the horizon
        let remaining = params.t_max - t;
        let (window, is_last) = if scheduled.window >= remaining * (1.0 - 1e-9) {
            (remaining, true)
        } else {
            (scheduled.window, false)
        };
        let plan = WindowPlan {
            window,
            ..scheduled
        };

        let solved = if params.nonlinear {
            solve_window(&u, t, &plan, params.rho, params.tol, params.max_iter)
        } else {
            // pure heat flow: the map has no integral term, so its fixed
            // point is the propagated data itself
            WindowOperator::new(u.clone(), t, plan.window, plan.intervals, params.rho).map(
                |op| {
                    (
                        op.initial_guess(),
                        PicardReport {
                            iterations: 1,
                            successive_diffs: vec![0.0],
                            measured_q: 0.0,
                            converged: true,
                        },
                    )
                },
            )
        };
        let (state, picard) = match solved {
            Ok(pair) => pair,
            Err(Error::NonConvergence {
                max_iter,
                last_diff,
                ..
            }) => {
                status = RunStatus::Nonconvergence {
                    t0: t,
                    max_iter,
                    last_diff,
                };
                break;
            }
            Err(e) => return Err(e),
        };

        report.append_window(&state, windows.len())?;
        on_window(&state);
        u = state.final_field().clone();
        sup_history.push(u.sup_norm());
        windows.push(WindowRecord {
            t0: t,
            plan,
            report: picard,
        });

        if let Some(diag) = guard.check(
            t + plan.window,
            u.sup_norm(),
            f64::INFINITY,
            &sup_history,
            Some(plan),
        ) {
            status = RunStatus::BlowupSuspected(diag);
            t += plan.window;
            break;
        }
        t = if is_last { params.t_max } else { t + plan.window };
    }

    Ok(SolveOutcome {
        run: GlobalRun {
            windows,
            final_time: t,
            status,
        },
        report,
        final_field: u,
    })
}
