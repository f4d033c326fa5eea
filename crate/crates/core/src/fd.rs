//! Independent ground truth: an explicit finite-difference integrator and
//! closed-form reference solutions.
//!
//! Used by tests and the `oracle-compare` subcommand, never by the
//! spectral path. Forward Euler with the 7-point periodic stencil is
//! deliberately the simplest possible scheme, trusted by inspection; the
//! stability bound `dt <= h^2 / 6` is enforced at configuration time.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField};
use crate::picard::nonlinearity;

/// Largest stable explicit step for the 7-point stencil: `h^2 / 6`.
pub fn stability_bound(grid: &GridSpec) -> f64 {
    let h = grid.spacing();
    h * h / 6.0
}

/// Eigenvalue of the negative 7-point periodic stencil on the mode with
/// axis indices `m`: `(4 / h^2) * sum_i sin^2(pi m_i / N)`.
pub fn stencil_eigenvalue(grid: &GridSpec, m: [usize; 3]) -> f64 {
    let n = grid.points_per_axis() as f64;
    let h = grid.spacing();
    let s = m
        .iter()
        .map(|&mi| (std::f64::consts::PI * mi as f64 / n).sin().powi(2))
        .sum::<f64>();
    4.0 / (h * h) * s
}

/// Explicit time-stepping configuration; construction enforces the
/// stability bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub grid: GridSpec,
    pub dt: f64,
    /// Total step count to the horizon, including the shortened last step.
    pub steps: usize,
}

impl FdConfig {
    pub fn new(grid: GridSpec, dt: f64, t_max: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt",
                requirement: "> 0 and finite",
                value: dt,
            });
        }
        let bound = stability_bound(&grid);
        if dt > bound {
            return Err(Error::UnstableStep { dt, bound });
        }
        if !(t_max > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_max",
                requirement: "> 0",
                value: t_max,
            });
        }
        let full = (t_max / dt).floor() as usize;
        let remainder = t_max - full as f64 * dt;
        Ok(Self {
            grid,
            dt,
            steps: full + usize::from(remainder > 0.0),
        })
    }
}

/// 7-point periodic Laplacian.
pub fn laplacian(f: &RealField) -> RealField {
    let grid = f.grid();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let v = f.values();
    let mut out = vec![0.0; grid.len()];
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        for j in 0..n {
            let jp = (j + 1) % n;
            let jm = (j + n - 1) % n;
            for k in 0..n {
                let kp = (k + 1) % n;
                let km = (k + n - 1) % n;
                let idx = grid.index(i, j, k);
                out[idx] = (v[grid.index(ip, j, k)]
                    + v[grid.index(im, j, k)]
                    + v[grid.index(i, jp, k)]
                    + v[grid.index(i, jm, k)]
                    + v[grid.index(i, j, kp)]
                    + v[grid.index(i, j, km)]
                    - 6.0 * v[idx])
                    * inv_h2;
            }
        }
    }
    // stencil of a finite field is finite
    RealField::from_values(grid, out).expect("finite stencil output")
}

/// One forward-Euler step `f + dt * (lap f - |f|^rho f)`.
pub fn fd_step(f: &RealField, dt: f64, rho: f64) -> Result<RealField> {
    let lap = laplacian(f);
    let nl = nonlinearity(f, rho)?;
    let stepped: Vec<f64> = f
        .values()
        .iter()
        .zip(lap.values())
        .zip(nl.values())
        .map(|((&u, &l), &g)| u + dt * (l - g))
        .collect();
    RealField::from_values(f.grid(), stepped).map_err(|_| Error::NonFinite {
        context: "explicit step output (stability violated upstream)",
    })
}

/// Linear-only step `f + dt * lap f`, for pure-heat references.
pub fn fd_step_linear(f: &RealField, dt: f64) -> Result<RealField> {
    let lap = laplacian(f);
    let stepped: Vec<f64> = f
        .values()
        .iter()
        .zip(lap.values())
        .map(|(&u, &l)| u + dt * l)
        .collect();
    RealField::from_values(f.grid(), stepped).map_err(|_| Error::NonFinite {
        context: "explicit step output (stability violated upstream)",
    })
}

fn fd_run(
    u0: &RealField,
    t_max: f64,
    cfg: &FdConfig,
    step: impl Fn(&RealField) -> Result<RealField>,
    shortened: impl Fn(&RealField, f64) -> Result<RealField>,
) -> Result<RealField> {
    if u0.grid() != cfg.grid {
        return Err(Error::GridMismatch {
            context: "initial data grid does not match configuration",
        });
    }
    let full = (t_max / cfg.dt).floor() as usize;
    let remainder = t_max - full as f64 * cfg.dt;
    let mut u = u0.clone();
    for _ in 0..full {
        u = step(&u)?;
    }
    if remainder > 0.0 {
        u = shortened(&u, remainder)?;
    }
    Ok(u)
}

/// Integrate to `t_max`, shortening the last step to land exactly.
pub fn fd_solve(u0: &RealField, t_max: f64, cfg: &FdConfig, rho: f64) -> Result<RealField> {
    fd_run(
        u0,
        t_max,
        cfg,
        |u| fd_step(u, cfg.dt, rho),
        |u, dt| fd_step(u, dt, rho),
    )
}

/// Pure-heat integration to `t_max`.
pub fn fd_solve_linear(u0: &RealField, t_max: f64, cfg: &FdConfig) -> Result<RealField> {
    fd_run(
        u0,
        t_max,
        cfg,
        |u| fd_step_linear(u, cfg.dt),
        fd_step_linear,
    )
}

/// Exact solution of the space-free reduction `u' = -|u|^rho u`:
/// `sign(u0) |u0| (1 + rho |u0|^rho t)^(-1/rho)`. Odd in `u0` and
/// nonincreasing in `t` for positive data.
pub fn homogeneous_exact(u0: f64, rho: f64, t: f64) -> f64 {
    if u0 == 0.0 {
        return 0.0;
    }
    let a = u0.abs();
    u0.signum() * a * (1.0 + rho * a.powf(rho) * t).powf(-1.0 / rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn config_enforces_the_stability_bound() {
        let grid = GridSpec::new(8, 2.0 * PI).unwrap();
        let bound = stability_bound(&grid);
        assert!(FdConfig::new(grid, bound * 1.01, 1.0).is_err());
        let cfg = FdConfig::new(grid, bound * 0.9, 1.0).unwrap();
        assert_eq!(cfg.steps, (1.0 / (bound * 0.9)).ceil() as usize);
    }

    #[test]
    fn step_of_a_constant_only_sees_the_nonlinearity() {
        let grid = GridSpec::new(4, 1.0).unwrap();
        let one = RealField::constant(grid, 1.0).unwrap();
        let stepped = fd_step(&one, 1e-3, 2.0).unwrap();
        let expected = 1.0 - 1e-3;
        assert_eq!(stepped.values()[0], expected);
        assert!((stepped.values()[0] - 0.999).abs() < 1e-15);
    }

    #[test]
    fn step_of_zero_is_zero() {
        let grid = GridSpec::new(4, 1.0).unwrap();
        let zero = RealField::zeros(grid);
        assert_eq!(fd_step(&zero, 1e-3, 1.0).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn stencil_acts_on_a_sine_mode_by_its_eigenvalue() {
        let grid = GridSpec::new(16, 2.0 * PI).unwrap();
        let l = grid.box_length();
        for m in [1usize, 2, 3] {
            let f = RealField::from_fn(grid, |x, _, _| {
                (2.0 * PI * m as f64 * x / l).sin()
            })
            .unwrap();
            let lam = stencil_eigenvalue(&grid, [m, 0, 0]);
            let lap = laplacian(&f);
            let expected = f.map(|v| -lam * v).unwrap();
            let err = lap.sup_distance(&expected).unwrap();
            assert!(err <= 1e-10 * lam, "stencil eigenvalue defect {err} at m={m}");
        }
    }

    #[test]
    fn homogeneous_exact_values() {
        let exact = homogeneous_exact(1.0, 2.0, 1.0);
        assert!((exact - 0.577_350_3).abs() < 1e-7);
        assert!((exact - 3.0_f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(homogeneous_exact(0.0, 1.0, 5.0), 0.0);
        assert_eq!(
            homogeneous_exact(-1.0, 2.0, 1.0),
            -homogeneous_exact(1.0, 2.0, 1.0)
        );
        // nonincreasing in t
        assert!(homogeneous_exact(1.0, 2.0, 2.0) < exact);
    }

    #[test]
    fn homogeneous_solve_matches_closed_form() {
        let grid = GridSpec::new(4, 1.0).unwrap();
        let one = RealField::constant(grid, 1.0).unwrap();
        let cfg = FdConfig::new(grid, 1e-4, 1.0).unwrap();
        let u = fd_solve(&one, 1.0, &cfg, 2.0).unwrap();
        let exact = homogeneous_exact(1.0, 2.0, 1.0);
        assert!(
            (u.values()[0] - exact).abs() <= 5e-4,
            "fd {} vs exact {exact}",
            u.values()[0]
        );
    }

    #[test]
    fn linear_sine_decay_within_discretization_error() {
        let grid = GridSpec::new(16, 2.0 * PI).unwrap();
        let l = grid.box_length();
        let u0 = RealField::from_fn(grid, |x, _, _| (2.0 * PI * x / l).sin()).unwrap();
        let dt = 1e-3;
        let t_max = 1.0;
        let cfg = FdConfig::new(grid, dt, t_max).unwrap();
        let u = fd_solve_linear(&u0, t_max, &cfg).unwrap();
        let exact = u0.map(|v| (-t_max).exp() * v).unwrap();
        let err = u.sup_distance(&exact).unwrap();
        // O(dt) + O(h^2): eigenvalue defect ~ k^4 h^2 / 12 plus Euler bias
        let h = grid.spacing();
        let bound = 2.0 * t_max * (h * h / 12.0 + dt / 2.0);
        assert!(err <= bound, "decay error {err} exceeds bound {bound}");
        assert!(err > 1e-6, "error implausibly small for this resolution");
    }

    #[test]
    fn homogeneous_error_shrinks_linearly_in_dt() {
        let grid = GridSpec::new(4, 1.0).unwrap();
        let one = RealField::constant(grid, 1.0).unwrap();
        let t_max = 0.5;
        let exact = homogeneous_exact(1.0, 2.0, t_max);
        let errs: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
            .iter()
            .map(|&dt| {
                let cfg = FdConfig::new(grid, dt, t_max).unwrap();
                let u = fd_solve(&one, t_max, &cfg, 2.0).unwrap();
                (u.values()[0] - exact).abs()
            })
            .collect();
        let s1 = (errs[0] / errs[1]).ln() / 2.0_f64.ln();
        let s2 = (errs[1] / errs[2]).ln() / 2.0_f64.ln();
        for s in [s1, s2] {
            assert!((0.9..=1.1).contains(&s), "dt-order {s} outside [0.9, 1.1]");
        }
    }
}
