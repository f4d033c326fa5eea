//! Command-line front end.
//!
//! Subcommands: `solve`, `verify`, `oracle-compare`, `energy-report`.
//! Configuration comes from an optional `--config FILE` in `key = value`
//! form; any config key is also available as a flag (`--t-max 1.0`
//! overrides `t_max` from the file).

use semiheat::config::RunConfig;
use semiheat::run;
use std::io::Write;
use std::process::ExitCode;

const USAGE: &str = "\
usage: semiheat <subcommand> [options]

subcommands:
  solve            run the solver, write report/window CSVs (+ snapshot)
  verify           solve, then check every runtime estimate
  oracle-compare   solve with both the spectral path and the explicit
                   stencil oracle; report the sup difference
  energy-report    recompute the energy functionals from snapshot files

options:
  --config FILE    read `key = value` configuration from FILE
  --KEY VALUE      override any config key (e.g. --rho 2 --t-max 1
                   --initial-data 'gaussian_bump(1.0, 0.6)')
  --from-report F  (verify) re-check a previously written report CSV
  energy-report takes snapshot paths as positional arguments and
  requires --rho

exit codes: 0 ok, 1 verification violations, 2 suspected blow-up,
3 non-convergence, 4 i/o failure, 64 usage or configuration errors
";

struct Cli {
    subcommand: String,
    config_path: Option<String>,
    from_report: Option<String>,
    overrides: Vec<(String, String)>,
    positional: Vec<String>,
}

fn parse_args(args: &[String]) -> Result<Cli, String> {
    let subcommand = args
        .first()
        .cloned()
        .ok_or_else(|| "missing subcommand".to_string())?;
    let mut cli = Cli {
        subcommand,
        config_path: None,
        from_report: None,
        overrides: Vec::new(),
        positional: Vec::new(),
    };
    let mut it = args[1..].iter().peekable();
    while let Some(arg) = it.next() {
        if let Some(flag) = arg.strip_prefix("--") {
            let (name, value) = match flag.split_once('=') {
                Some((n, v)) => (n.to_string(), v.to_string()),
                None => {
                    let v = it
                        .next()
                        .ok_or_else(|| format!("flag --{flag} expects a value"))?;
                    (flag.to_string(), v.clone())
                }
            };
            match name.as_str() {
                "config" => cli.config_path = Some(value),
                "from-report" => cli.from_report = Some(value),
                _ => cli.overrides.push((name.replace('-', "_"), value)),
            }
        } else {
            cli.positional.push(arg.clone());
        }
    }
    Ok(cli)
}

fn build_config(cli: &Cli, default_t_max: Option<f64>) -> Result<(RunConfig, Vec<String>), i32> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config_path {
        let text = std::fs::read_to_string(path).map_err(|e| {
            eprintln!("i/o error: {path}: {e}");
            run::EXIT_IO
        })?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let location = format!("{path}:{}", idx + 1);
            let Some((key, value)) = line.split_once('=') else {
                eprintln!("config error at {location}: expected `key = value`, got `{line}`");
                return Err(run::EXIT_USAGE);
            };
            if let Err(e) = cfg.apply(key.trim(), value.trim(), &location) {
                eprintln!("{e}");
                return Err(run::EXIT_USAGE);
            }
        }
    }
    for (key, value) in &cli.overrides {
        let location = format!("flag --{}", key.replace('_', "-"));
        if let Err(e) = cfg.apply(key, value, &location) {
            eprintln!("{e}");
            return Err(run::EXIT_USAGE);
        }
    }
    if cfg.t_max.is_nan() {
        if let Some(t) = default_t_max {
            cfg.t_max = t;
        }
    }
    cfg.finalize().map_err(|e| {
        eprintln!("{e}");
        run::EXIT_USAGE
    })
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.first().map(String::as_str) == Some("help")
        || args.iter().any(|a| a == "--help" || a == "-h")
    {
        print!("{USAGE}");
        return ExitCode::SUCCESS;
    }
    let cli = match parse_args(&args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            eprint!("{USAGE}");
            return ExitCode::from(run::EXIT_USAGE as u8);
        }
    };
    let mut stdout = std::io::stdout().lock();
    let code = match cli.subcommand.as_str() {
        "solve" => match build_config(&cli, None) {
            Ok((cfg, warnings)) => run::run_solve(&cfg, &warnings, &mut stdout),
            Err(code) => code,
        },
        "verify" => {
            if let Some(path) = &cli.from_report {
                run::run_verify_report(path, &mut stdout)
            } else {
                match build_config(&cli, None) {
                    Ok((cfg, warnings)) => run::run_verify(&cfg, &warnings, &mut stdout),
                    Err(code) => code,
                }
            }
        }
        "oracle-compare" => match build_config(&cli, None) {
            Ok((cfg, warnings)) => run::run_oracle_compare(&cfg, &warnings, &mut stdout),
            Err(code) => code,
        },
        "energy-report" => {
            // t_max is unused by this subcommand; default it so a bare
            // --rho suffices
            match build_config(&cli, Some(1.0)) {
                Ok((cfg, _)) => run::run_energy_report(cfg.rho, &cli.positional, &mut stdout),
                Err(code) => code,
            }
        }
        other => {
            eprintln!("error: unknown subcommand `{other}`");
            eprint!("{USAGE}");
            run::EXIT_USAGE
        }
    };
    let _ = stdout.flush();
    ExitCode::from(code as u8)
}
