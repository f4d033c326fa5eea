//! Run configuration: plain `key = value` text, `#` comments, unknown
//! keys rejected, every error carrying its source location. The full
//! effective configuration (defaults materialized) is echoed into every
//! output header, and the echo reparses to an identical configuration.

use crate::continuation::SolveParams;
use crate::error::Result;
use crate::fd;
use crate::grid::{GridSpec, RealField};
use std::f64::consts::PI;
use std::fmt;

/// A configuration error with the line or flag it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub location: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at {}: {}", self.location, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Which sup-norm check `verify` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupCheck {
    Monotone,
    Bounded,
}

impl fmt::Display for SupCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupCheck::Monotone => write!(f, "monotone"),
            SupCheck::Bounded => write!(f, "bounded"),
        }
    }
}

/// Initial-data generators.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zero,
    Constant(f64),
    Sine {
        axis: usize,
        mode: usize,
        amplitude: f64,
    },
    GaussianBump {
        amplitude: f64,
        width: f64,
    },
}

impl InitialData {
    /// Sample the generator on a grid.
    pub fn realize(&self, grid: GridSpec) -> Result<RealField> {
        let l = grid.box_length();
        match *self {
            InitialData::Zero => Ok(RealField::zeros(grid)),
            InitialData::Constant(a) => RealField::constant(grid, a),
            InitialData::Sine {
                axis,
                mode,
                amplitude,
            } => RealField::from_fn(grid, |x, y, z| {
                let coord = [x, y, z][axis];
                amplitude * (2.0 * PI * mode as f64 * coord / l).sin()
            }),
            InitialData::GaussianBump { amplitude, width } => {
                let c = l / 2.0;
                RealField::from_fn(grid, |x, y, z| {
                    let r2 = (x - c).powi(2) + (y - c).powi(2) + (z - c).powi(2);
                    amplitude * (-r2 / (2.0 * width * width)).exp()
                })
            }
        }
    }
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Zero => write!(f, "zero"),
            InitialData::Constant(a) => write!(f, "constant({a})"),
            InitialData::Sine {
                axis,
                mode,
                amplitude,
            } => write!(f, "sine({axis}, {mode}, {amplitude})"),
            InitialData::GaussianBump { amplitude, width } => {
                write!(f, "gaussian_bump({amplitude}, {width})")
            }
        }
    }
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rho: f64,
    pub t_max: f64,
    pub q: f64,
    pub box_length: f64,
    pub points_per_axis: usize,
    pub intervals: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub t_cap: f64,
    pub t_min: f64,
    pub blowup_factor: f64,
    pub nonlinearity: bool,
    /// `monotone` additionally requires the sup norm to be nonincreasing
    /// node to node (a strengthening that holds for this sign of
    /// absorption); `bounded` checks only that it never exceeds the
    /// initial sup.
    pub sup_check: SupCheck,
    pub initial_data: InitialData,
    /// Reserved for randomized test-data generation; echoed verbatim.
    pub seed: u64,
    pub fd_dt: Option<f64>,
    pub out_report: String,
    pub out_windows: String,
    pub out_snapshot: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rho: f64::NAN,
            t_max: f64::NAN,
            q: 0.5,
            box_length: 2.0 * PI,
            points_per_axis: 32,
            intervals: 8,
            tol: 1e-10,
            max_iter: 400,
            t_cap: f64::INFINITY,
            t_min: 1e-12,
            blowup_factor: 1e12,
            nonlinearity: true,
            sup_check: SupCheck::Monotone,
            initial_data: InitialData::Zero,
            seed: 0,
            fd_dt: None,
            out_report: "report.csv".into(),
            out_windows: "windows.csv".into(),
            out_snapshot: None,
        }
    }
}

fn err(location: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        location: location.to_string(),
        message: message.into(),
    }
}

fn parse_f64(location: &str, key: &str, value: &str) -> std::result::Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .map_err(|_| err(location, format!("{key} expects a real number, got `{value}`")))
}

fn parse_usize(location: &str, key: &str, value: &str) -> std::result::Result<usize, ConfigError> {
    value
        .parse::<usize>()
        .map_err(|_| err(location, format!("{key} expects an integer, got `{value}`")))
}

/// Split `name(a, b, ...)` into name and argument list.
fn parse_call<'a>(
    location: &str,
    value: &'a str,
) -> std::result::Result<(&'a str, Vec<&'a str>), ConfigError> {
    match value.find('(') {
        None => Ok((value.trim(), Vec::new())),
        Some(open) => {
            let name = value[..open].trim();
            let rest = value[open + 1..].trim_end();
            let inner = rest.strip_suffix(')').ok_or_else(|| {
                err(location, format!("missing closing parenthesis in `{value}`"))
            })?;
            Ok((name, inner.split(',').map(str::trim).collect()))
        }
    }
}

fn parse_initial_data(
    location: &str,
    value: &str,
) -> std::result::Result<InitialData, ConfigError> {
    let (name, args) = parse_call(location, value)?;
    let want = |n: usize| -> std::result::Result<(), ConfigError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(err(
                location,
                format!("{name} expects {n} argument(s), got {}", args.len()),
            ))
        }
    };
    match name {
        "zero" => {
            want(0)?;
            Ok(InitialData::Zero)
        }
        "constant" => {
            want(1)?;
            Ok(InitialData::Constant(parse_f64(location, "constant", args[0])?))
        }
        "sine" => {
            want(3)?;
            Ok(InitialData::Sine {
                axis: parse_usize(location, "sine axis", args[0])?,
                mode: parse_usize(location, "sine mode", args[1])?,
                amplitude: parse_f64(location, "sine amplitude", args[2])?,
            })
        }
        "gaussian_bump" => {
            want(2)?;
            Ok(InitialData::GaussianBump {
                amplitude: parse_f64(location, "gaussian_bump amplitude", args[0])?,
                width: parse_f64(location, "gaussian_bump width", args[1])?,
            })
        }
        other => Err(err(
            location,
            format!(
                "unknown initial_data `{other}` (expected zero, constant, sine, \
                 or gaussian_bump)"
            ),
        )),
    }
}

impl RunConfig {
    /// Apply one `key = value` assignment. `location` names the source
    /// (`line N` or `flag --key`) for error messages.
    pub fn apply(
        &mut self,
        key: &str,
        value: &str,
        location: &str,
    ) -> std::result::Result<(), ConfigError> {
        match key {
            "rho" => {
                let v = parse_f64(location, key, value)?;
                if !(v > 0.0) || !v.is_finite() {
                    return Err(err(location, "rho must be positive (the absorption exponent)"));
                }
                self.rho = v;
            }
            "t_max" => {
                let v = parse_f64(location, key, value)?;
                if !(v > 0.0) || !v.is_finite() {
                    return Err(err(location, "t_max must be positive"));
                }
                self.t_max = v;
            }
            "q" => {
                let v = parse_f64(location, key, value)?;
                if !(v > 0.0 && v < 1.0) {
                    return Err(err(
                        location,
                        "q must lie strictly inside (0, 1); the window map contracts \
                         only for q < 1",
                    ));
                }
                self.q = v;
            }
            "l" => {
                let v = parse_f64(location, key, value)?;
                if !(v > 0.0) || !v.is_finite() {
                    return Err(err(location, "l must be positive"));
                }
                self.box_length = v;
            }
            "n" => {
                let v = parse_usize(location, key, value)?;
                if v < 4 || v % 2 != 0 {
                    return Err(err(location, "n must be an even integer >= 4"));
                }
                self.points_per_axis = v;
            }
            "m" => {
                let v = parse_usize(location, key, value)?;
                if v < 2 {
                    return Err(err(location, "m must be >= 2"));
                }
                self.intervals = v;
            }
            "tol" => {
                let v = parse_f64(location, key, value)?;
                if !(v > 0.0) {
                    return Err(err(location, "tol must be positive"));
                }
                self.tol = v;
            }
            "max_iter" => {
                let v = parse_usize(location, key, value)?;
                if v == 0 {
                    return Err(err(location, "max_iter must be >= 1"));
                }
                self.max_iter = v;
            }
            "t_cap" => {
                let v = parse_f64(location, key, value)?;
                if !(v > 0.0) {
                    return Err(err(location, "t_cap must be positive"));
                }
                self.t_cap = v;
            }
            "t_min" => {
                let v = parse_f64(location, key, value)?;
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(err(location, "t_min must be >= 0 and finite"));
                }
                self.t_min = v;
            }
            "blowup_factor" => {
                let v = parse_f64(location, key, value)?;
                if !(v > 0.0) {
                    return Err(err(location, "blowup_factor must be positive"));
                }
                self.blowup_factor = v;
            }
            "nonlinearity" => {
                self.nonlinearity = match value {
                    "on" => true,
                    "off" => false,
                    other => {
                        return Err(err(
                            location,
                            format!("nonlinearity expects on or off, got `{other}`"),
                        ))
                    }
                };
            }
            "sup_check" => {
                self.sup_check = match value {
                    "monotone" => SupCheck::Monotone,
                    "bounded" => SupCheck::Bounded,
                    other => {
                        return Err(err(
                            location,
                            format!("sup_check expects monotone or bounded, got `{other}`"),
                        ))
                    }
                };
            }
            "initial_data" => {
                self.initial_data = parse_initial_data(location, value)?;
            }
            "seed" => {
                self.seed = value.parse::<u64>().map_err(|_| {
                    err(location, format!("seed expects an unsigned integer, got `{value}`"))
                })?;
            }
            "fd_dt" => {
                if value.is_empty() || value == "auto" {
                    self.fd_dt = None;
                } else {
                    let v = parse_f64(location, key, value)?;
                    if !(v > 0.0) {
                        return Err(err(location, "fd_dt must be positive or auto"));
                    }
                    self.fd_dt = Some(v);
                }
            }
            "out_report" => self.out_report = value.to_string(),
            "out_windows" => self.out_windows = value.to_string(),
            "out_snapshot" => {
                self.out_snapshot = if value.is_empty() {
                    None
                } else {
                    Some(value.to_string())
                };
            }
            other => {
                return Err(err(location, format!("unknown key `{other}`")));
            }
        }
        Ok(())
    }

    /// Cross-field validation; returns the validated config and any
    /// non-fatal warnings.
    pub fn finalize(self) -> std::result::Result<(RunConfig, Vec<String>), ConfigError> {
        if self.rho.is_nan() {
            return Err(err("end of config", "missing required key `rho`"));
        }
        if self.t_max.is_nan() {
            return Err(err("end of config", "missing required key `t_max`"));
        }
        if let InitialData::Sine { axis, mode, .. } = self.initial_data {
            if axis > 2 {
                return Err(err("initial_data", "sine axis must be 0, 1, or 2"));
            }
            if mode == 0 || 2 * mode >= self.points_per_axis {
                return Err(err(
                    "initial_data",
                    "sine mode must satisfy 1 <= mode < n/2 for faithful sampling",
                ));
            }
        }
        if let InitialData::GaussianBump { width, .. } = self.initial_data {
            if !(width > 0.0) {
                return Err(err("initial_data", "gaussian_bump width must be positive"));
            }
        }
        let mut warnings = Vec::new();
        if let InitialData::GaussianBump { width, .. } = self.initial_data {
            if width >= self.box_length / 6.0 {
                warnings.push(format!(
                    "gaussian_bump width {width} is >= L/6 = {}; the data may not decay \
                     at the box boundary and periodic truncation becomes visible",
                    self.box_length / 6.0
                ));
            }
        }
        Ok((self, warnings))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.points_per_axis, self.box_length)
    }

    pub fn solve_params(&self) -> SolveParams {
        SolveParams {
            rho: self.rho,
            t_max: self.t_max,
            q: self.q,
            tol: self.tol,
            intervals: self.intervals,
            max_iter: self.max_iter,
            t_cap: self.t_cap,
            blowup_factor: self.blowup_factor,
            t_min: self.t_min,
            nonlinear: self.nonlinearity,
        }
    }

    /// Explicit-oracle step: configured, or half the stability bound.
    pub fn fd_step_size(&self) -> Result<f64> {
        let grid = self.grid()?;
        Ok(self
            .fd_dt
            .unwrap_or_else(|| 0.5 * fd::stability_bound(&grid)))
    }

    /// Canonical echo of the complete effective configuration; reparsing
    /// the echo yields an identical configuration.
    pub fn echo(&self) -> String {
        let fd_dt = match self.fd_dt {
            Some(v) => v.to_string(),
            None => "auto".to_string(),
        };
        format!(
            "rho = {}\nt_max = {}\nq = {}\nl = {}\nn = {}\nm = {}\ntol = {}\n\
             max_iter = {}\nt_cap = {}\nt_min = {}\nblowup_factor = {}\n\
             nonlinearity = {}\nsup_check = {}\ninitial_data = {}\nseed = {}\n\
             fd_dt = {}\nout_report = {}\nout_windows = {}\nout_snapshot = {}\n",
            self.rho,
            self.t_max,
            self.q,
            self.box_length,
            self.points_per_axis,
            self.intervals,
            self.tol,
            self.max_iter,
            self.t_cap,
            self.t_min,
            self.blowup_factor,
            if self.nonlinearity { "on" } else { "off" },
            self.sup_check,
            self.initial_data,
            self.seed,
            fd_dt,
            self.out_report,
            self.out_windows,
            self.out_snapshot.as_deref().unwrap_or(""),
        )
    }
}

/// Parse `key = value` text into a validated configuration plus warnings.
pub fn parse_config(text: &str) -> std::result::Result<(RunConfig, Vec<String>), ConfigError> {
    let mut cfg = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let location = format!("line {}", idx + 1);
        let (key, value) = line.split_once('=').ok_or_else(|| {
            err(&location, format!("expected `key = value`, got `{line}`"))
        })?;
        cfg.apply(key.trim(), value.trim(), &location)?;
    }
    cfg.finalize()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_all_defaults() {
        let (cfg, warnings) = parse_config("rho = 1.0\nt_max = 0.5").unwrap();
        assert_eq!(cfg.rho, 1.0);
        assert_eq!(cfg.t_max, 0.5);
        assert_eq!(cfg.q, 0.5);
        assert_eq!(cfg.points_per_axis, 32);
        assert_eq!(cfg.box_length, 2.0 * PI);
        assert_eq!(cfg.intervals, 8);
        assert_eq!(cfg.tol, 1e-10);
        assert_eq!(cfg.initial_data, InitialData::Zero);
        assert!(cfg.nonlinearity);
        assert!(warnings.is_empty());
    }

    #[test]
    fn negative_rho_is_rejected_with_line_number() {
        let e = parse_config("rho = -1\nt_max = 1").unwrap_err();
        assert_eq!(e.location, "line 1");
        assert!(e.message.contains("positive"), "message: {}", e.message);
    }

    #[test]
    fn q_at_the_boundary_is_rejected() {
        let e = parse_config("rho = 1\nt_max = 1\nq = 1.0").unwrap_err();
        assert_eq!(e.location, "line 3");
        assert!(e.message.contains("(0, 1)"));
        assert!(parse_config("rho = 1\nt_max = 1\nq = 0.999").is_ok());
    }

    #[test]
    fn unknown_keys_and_malformed_lines_are_rejected() {
        let e = parse_config("rho = 1\nwhatever = 3\nt_max = 1").unwrap_err();
        assert_eq!(e.location, "line 2");
        assert!(e.message.contains("unknown key"));
        let e = parse_config("rho 1").unwrap_err();
        assert!(e.message.contains("key = value"));
    }

    #[test]
    fn missing_required_keys_are_reported() {
        let e = parse_config("rho = 1").unwrap_err();
        assert!(e.message.contains("t_max"));
        let e = parse_config("t_max = 1").unwrap_err();
        assert!(e.message.contains("rho"));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# a run\n\nrho = 2.0\n  # indented comment\nt_max = 1.0\n";
        let (cfg, _) = parse_config(text).unwrap();
        assert_eq!(cfg.rho, 2.0);
    }

    #[test]
    fn initial_data_variants_parse() {
        let parse = |s: &str| {
            parse_config(&format!("rho = 1\nt_max = 1\ninitial_data = {s}"))
                .map(|(c, _)| c.initial_data)
        };
        assert_eq!(parse("zero").unwrap(), InitialData::Zero);
        assert_eq!(parse("constant(2.5)").unwrap(), InitialData::Constant(2.5));
        assert_eq!(
            parse("sine(0, 2, 1.5)").unwrap(),
            InitialData::Sine {
                axis: 0,
                mode: 2,
                amplitude: 1.5
            }
        );
        assert_eq!(
            parse("gaussian_bump(1.0, 0.6)").unwrap(),
            InitialData::GaussianBump {
                amplitude: 1.0,
                width: 0.6
            }
        );
        assert!(parse("vortex(1)").is_err());
        assert!(parse("sine(5, 1, 1.0)").is_err());
        assert!(parse("sine(0, 16, 1.0)").is_err());
        assert!(parse("sine(0, 0, 1.0)").is_err());
    }

    #[test]
    fn wide_bump_warns_about_boundary_decay() {
        let (_, warnings) = parse_config(
            "rho = 1\nt_max = 1\ninitial_data = gaussian_bump(1.0, 2.0)",
        )
        .unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("boundary"));
    }

    #[test]
    fn echo_round_trips_to_an_identical_config() {
        let texts = [
            "rho = 1.0\nt_max = 0.5".to_string(),
            "rho = 2\nt_max = 1\nq = 0.25\nn = 16\nl = 3.5\nm = 12\ntol = 1e-8\n\
             initial_data = gaussian_bump(1.25, 0.55)\nseed = 42\nfd_dt = 0.0001\n\
             nonlinearity = off\nout_snapshot = final.snap"
                .to_string(),
        ];
        for text in texts {
            let (cfg, _) = parse_config(&text).unwrap();
            let (again, _) = parse_config(&cfg.echo()).unwrap();
            assert_eq!(cfg, again);
            // and the echo is a fixed point
            assert_eq!(cfg.echo(), again.echo());
        }
    }

    #[test]
    fn bump_realization_peaks_at_the_center() {
        let (cfg, _) = parse_config(
            "rho = 1\nt_max = 1\nn = 16\ninitial_data = gaussian_bump(2.0, 0.6)",
        )
        .unwrap();
        let u0 = cfg.initial_data.realize(cfg.grid().unwrap()).unwrap();
        assert_eq!(u0.sup_norm(), 2.0);
        assert_eq!(u0.at(8, 8, 8), 2.0);
    }

    #[test]
    fn sine_realization_matches_the_axis() {
        let (cfg, _) = parse_config(
            "rho = 1\nt_max = 1\nn = 16\ninitial_data = sine(1, 2, 1.0)",
        )
        .unwrap();
        let u0 = cfg.initial_data.realize(cfg.grid().unwrap()).unwrap();
        let l = cfg.box_length;
        let g = cfg.grid().unwrap();
        for j in 0..16 {
            let expect = (2.0 * PI * 2.0 * g.coord(j) / l).sin();
            assert!((u0.at(3, j, 5) - expect).abs() < 1e-12);
        }
    }
}
