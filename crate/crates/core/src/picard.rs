//! Fixed-point iteration of the windowed integral map.
//!
//! On one time window `[t0, t0 + T]` the solution satisfies
//! `u = Q(u) = F - D(u)`, where `F` propagates the window's initial data
//! by the heat flow and `D(u)` is the time integral of semigroup-propagated
//! nonlinearity. `Q` contracts on a ball when the window is sized by the
//! scheduler, so iterating it from `Q(0) = F` converges geometrically; the
//! iteration records its empirical contraction factor so runs can check it
//! against the scheduled target.
//!
//! Discretization: `M + 1` equally spaced nodes per window, the integral
//! over `[t0, t_j]` by the composite trapezoid rule with the semigroup
//! applied node-to-node. The semigroup factor is bounded by 1 and the
//! integrand is smooth in time, so no endpoint treatment is needed and
//! the quadrature is plain second order.

use crate::continuation::WindowPlan;
use crate::error::{Error, Result};
use crate::grid::RealField;
use crate::semigroup::SemigroupMultiplier;
use crate::spectral::{from_spectral, to_spectral, SpectralField};

/// Pointwise `|f|^rho * f`. Odd in `f`, sign preserving, with
/// `|output| = |f|^(rho + 1)`.
pub fn nonlinearity(f: &RealField, rho: f64) -> Result<RealField> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rho",
            requirement: "> 0",
            value: rho,
        });
    }
    // exact fast paths for the common exponents
    if rho == 1.0 {
        f.map(|v| v * v.abs())
    } else if rho == 2.0 {
        f.map(|v| v * v * v)
    } else {
        f.map(|v| v.abs().powf(rho) * v)
    }
}

/// Discrete trajectory on one time window: fields at the `M + 1` nodes
/// `t0 + j T / M`.
///
/// States produced by the solver keep `trajectory[0]` bitwise equal to the
/// window's initial data. Hand-built states (tests, perturbation studies)
/// may put anything at node 0; the map restores the invariant on output.
#[derive(Debug, Clone)]
pub struct WindowState {
    t0: f64,
    window: f64,
    trajectory: Vec<RealField>,
}

impl WindowState {
    pub fn new(t0: f64, window: f64, trajectory: Vec<RealField>) -> Result<Self> {
        if trajectory.len() < 3 {
            return Err(Error::InvalidParameter {
                name: "node_count",
                requirement: ">= 2 intervals (3 nodes)",
                value: trajectory.len() as f64,
            });
        }
        if !(window > 0.0) {
            return Err(Error::InvalidParameter {
                name: "window",
                requirement: "> 0",
                value: window,
            });
        }
        for f in &trajectory {
            if !f.is_finite() {
                return Err(Error::NonFinite {
                    context: "window trajectory",
                });
            }
        }
        Ok(Self {
            t0,
            window,
            trajectory,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Window length `T`.
    pub fn window(&self) -> f64 {
        self.window
    }

    /// Number of intervals `M`.
    pub fn intervals(&self) -> usize {
        self.trajectory.len() - 1
    }

    pub fn node_time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.window / self.intervals() as f64
    }

    pub fn trajectory(&self) -> &[RealField] {
        &self.trajectory
    }

    pub fn node(&self, j: usize) -> &RealField {
        &self.trajectory[j]
    }

    pub fn final_field(&self) -> &RealField {
        self.trajectory.last().unwrap()
    }

    /// Discrete window norm: max over nodes of the per-slice sup norm.
    pub fn window_sup(&self) -> f64 {
        self.trajectory
            .iter()
            .fold(0.0_f64, |m, f| m.max(f.sup_norm()))
    }
}

/// Max over nodes of the sup distance; the metric of the window space.
pub fn window_distance(a: &WindowState, b: &WindowState) -> Result<f64> {
    if a.trajectory.len() != b.trajectory.len() {
        return Err(Error::GridMismatch {
            context: "window distance on different node counts",
        });
    }
    let mut d = 0.0_f64;
    for (fa, fb) in a.trajectory.iter().zip(&b.trajectory) {
        d = d.max(fa.sup_distance(fb)?);
    }
    Ok(d)
}

/// Convergence record of one window's fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub iterations: usize,
    /// Window-norm distance between successive iterates.
    pub successive_diffs: Vec<f64>,
    /// Geometric mean of the last few diff ratios; the empirical
    /// contraction factor to compare against the scheduled target.
    pub measured_q: f64,
    pub converged: bool,
}

impl PicardReport {
    fn from_diffs(diffs: Vec<f64>, converged: bool) -> Self {
        // geometric mean of the last min(3, count-1) ratios; the first
        // ratio is often transient so a small tail is more robust
        let ratios: Vec<f64> = diffs
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect();
        let take = ratios.len().min(3);
        let measured_q = if take == 0 {
            0.0
        } else {
            let tail = &ratios[ratios.len() - take..];
            if tail.contains(&0.0) {
                0.0
            } else {
                let log_sum: f64 = tail.iter().map(|r| r.ln()).sum();
                (log_sum / take as f64).exp()
            }
        };
        Self {
            iterations: diffs.len(),
            successive_diffs: diffs,
            measured_q,
            converged,
        }
    }
}

/// The map `Q` for one window, with the semigroup tables and the
/// propagated initial data precomputed once and shared by all iterations.
pub struct WindowOperator {
    t0: f64,
    window: f64,
    rho: f64,
    u_init: RealField,
    /// `exp(-|k|^2 (d T / M))` for node distances `d = 0..=M`.
    multipliers: Vec<SemigroupMultiplier>,
    /// Real-space `F_j`, the initial data propagated to node `j`.
    f_traj: Vec<RealField>,
    /// Spectral `F_j` for `j >= 1`, reused as the accumulator seed.
    f_spec: Vec<SpectralField>,
}

impl WindowOperator {
    pub fn new(u_init: RealField, t0: f64, window: f64, m: usize, rho: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter {
                name: "intervals",
                requirement: ">= 2",
                value: m as f64,
            });
        }
        if !(window > 0.0) || !window.is_finite() {
            return Err(Error::InvalidParameter {
                name: "window",
                requirement: "> 0 and finite",
                value: window,
            });
        }
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter {
                name: "rho",
                requirement: "> 0",
                value: rho,
            });
        }
        let grid = u_init.grid();
        let dtau = window / m as f64;
        let mut multipliers = Vec::with_capacity(m + 1);
        for d in 0..=m {
            multipliers.push(SemigroupMultiplier::new(grid, d as f64 * dtau)?);
        }
        let u_spec = to_spectral(&u_init);
        let mut f_traj = Vec::with_capacity(m + 1);
        let mut f_spec = Vec::with_capacity(m + 1);
        f_traj.push(u_init.clone());
        f_spec.push(u_spec.clone());
        for mult in multipliers.iter().skip(1) {
            let mut s = u_spec.clone();
            s.mul_table(mult.table());
            f_traj.push(from_spectral(&s)?);
            f_spec.push(s);
        }
        Ok(Self {
            t0,
            window,
            rho,
            u_init,
            multipliers,
            f_traj,
            f_spec,
        })
    }

    pub fn f_trajectory(&self) -> &[RealField] {
        &self.f_traj
    }

    /// The natural first iterate `Q(0) = F`.
    pub fn initial_guess(&self) -> WindowState {
        WindowState {
            t0: self.t0,
            window: self.window,
            trajectory: self.f_traj.clone(),
        }
    }

    /// One application of the map: `v_j = F_j - D_j(u)` with the
    /// trapezoid-in-time, semigroup-propagated quadrature, and
    /// `v_0 = F_0` bitwise.
    pub fn apply(&self, w: &WindowState) -> Result<WindowState> {
        let m = self.multipliers.len() - 1;
        if w.trajectory.len() != m + 1 {
            return Err(Error::GridMismatch {
                context: "trajectory node count does not match operator",
            });
        }
        let dtau = self.window / m as f64;
        let mut nonlin_spec = Vec::with_capacity(m + 1);
        for u in &w.trajectory {
            nonlin_spec.push(to_spectral(&nonlinearity(u, self.rho)?));
        }
        let mut trajectory = Vec::with_capacity(m + 1);
        trajectory.push(self.u_init.clone());
        for j in 1..=m {
            let mut acc = self.f_spec[j].clone();
            for (i, g) in nonlin_spec.iter().enumerate().take(j + 1) {
                let weight = if i == 0 || i == j { 0.5 * dtau } else { dtau };
                acc.accumulate_scaled(-weight, self.multipliers[j - i].table(), g);
            }
            let v = from_spectral(&acc).map_err(|_| Error::NonFinite {
                context: "fixed-point iterate (window may be mis-sized)",
            })?;
            trajectory.push(v);
        }
        Ok(WindowState {
            t0: self.t0,
            window: self.window,
            trajectory,
        })
    }
}

/// Iterate the window map from `Q(0) = F` until successive iterates are
/// closer than `tol` in the window norm.
pub fn solve_window(
    u_init: &RealField,
    t0: f64,
    plan: &WindowPlan,
    rho: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(WindowState, PicardReport)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            requirement: "> 0",
            value: tol,
        });
    }
    let op = WindowOperator::new(u_init.clone(), t0, plan.window, plan.intervals, rho)?;
    let mut state = op.initial_guess();
    let mut diffs = Vec::new();
    for _ in 0..max_iter {
        let next = op.apply(&state)?;
        let d = window_distance(&state, &next)?;
        diffs.push(d);
        state = next;
        if d < tol {
            return Ok((state, PicardReport::from_diffs(diffs, true)));
        }
    }
    let last_diff = diffs.last().copied().unwrap_or(f64::NAN);
    Err(Error::NonConvergence {
        max_iter,
        last_diff,
        diffs,
    })
}

/// Window-norm distance between a state and its image under the map;
/// zero exactly at a discrete fixed point.
pub fn window_residual(w: &WindowState, rho: f64) -> Result<f64> {
    let m = w.intervals();
    let op = WindowOperator::new(w.trajectory[0].clone(), w.t0, w.window, m, rho)?;
    window_distance(w, &op.apply(w)?)
}
