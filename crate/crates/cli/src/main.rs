//! `heatlab`: experiments on Dirichlet heat kernels and semilinear heat
//! equations with singular data.
//!
//! Exit codes: 0 success, 1 violation or misclassification, 2 invalid
//! configuration, 3 numerical failure.

mod commands;
mod config;
mod output;
mod svg;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Arg, ArgAction, ArgMatches, Command};

use commands::Status;
use config::{Config, Key};

type Runner = fn(&Config) -> Result<Status>;

const COMMANDS: &[(&str, &str, &[Key], Runner)] = &[
    ("kernel", "tabulate an interval kernel against its short-time lower bound", config::KERNEL, commands::kernel),
    ("bounds-sweep", "check a kernel lower bound over a grid", config::SWEEP, commands::bounds_sweep),
    ("prop-ball", "largeness certificate and scaling exponents", config::PROP_BALL, commands::prop_ball),
    ("blowup", "semilinear cap ladder with singular data", config::BLOWUP, commands::blowup),
    ("osgood", "bad Osgood construction table and ODE witness", config::OSGOOD, commands::osgood),
    ("verify-all", "run the acceptance criteria", config::VERIFY, commands::verify_all),
];

fn key_arg(k: &Key) -> Arg {
    let help = match k.default {
        Some(d) => format!("{} [default: {d}]", k.help),
        None => k.help.to_string(),
    };
    let arg = Arg::new(k.name).long(k.name).value_name("VALUE").help(help);
    if k.switch {
        arg.num_args(0..=1).default_missing_value("true")
    } else {
        arg
    }
}

fn cli() -> Command {
    let mut cmd = Command::new("heatlab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Heat kernel bounds, singular data and blow-up experiments")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for &(name, about, keys, _) in COMMANDS {
        let mut sub = Command::new(name).about(about).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .action(ArgAction::Set)
                .help("flat key = value file; flags override it"),
        );
        for k in config::COMMON.iter().chain(keys.iter()) {
            sub = sub.arg(key_arg(k));
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn explicit_flags(m: &ArgMatches, keys: &[Key]) -> BTreeMap<String, String> {
    config::COMMON
        .iter()
        .chain(keys.iter())
        .filter_map(|k| m.get_one::<String>(k.name).map(|v| (k.name.to_string(), v.clone())))
        .collect()
}

/// 3 for numerical failures inside the library, 2 for everything else.
fn error_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<heatlab::Error>() {
        Some(err) if err.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let &(_, _, keys, run) = COMMANDS.iter().find(|c| c.0 == name).expect("registered subcommand");
    let flags = explicit_flags(sub, keys);
    let outcome = Config::resolve(name, &[config::COMMON, keys], sub.get_one::<PathBuf>("config").map(|p| p.as_path()), &flags)
        .and_then(|cfg| run(&cfg));
    match outcome {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violation) => ExitCode::from(1),
        Ok(Status::NumericalFailure) => ExitCode::from(3),
        Err(e) => {
            eprintln!("heatlab {name}: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_table_is_consistent() {
        cli().debug_assert();
    }

    #[test]
    fn switches_accept_bare_flags() {
        let m = cli().try_get_matches_from(["heatlab", "kernel", "--plot", "--y", "0.3"]).unwrap();
        let (_, sub) = m.subcommand().unwrap();
        let flags = explicit_flags(sub, config::KERNEL);
        assert_eq!(flags.get("plot").map(String::as_str), Some("true"));
        assert_eq!(flags.get("y").map(String::as_str), Some("0.3"));
        assert!(!flags.contains_key("t"));
    }

    #[test]
    fn numerical_errors_map_to_three() {
        let e = anyhow::Error::new(heatlab::Error::Stiffness { t: 1.0, dt: 1e-16 });
        assert_eq!(error_code(&e), 3);
        let e = anyhow::Error::new(heatlab::Error::InvalidArgument("x".into()));
        assert_eq!(error_code(&e), 2);
        assert_eq!(error_code(&anyhow::anyhow!("bad flag")), 2);
    }
}
