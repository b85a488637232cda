//! Command-line driver for the false alarm reduction pipeline.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::config::{RunConfig, CONFIG_ENV, KEYS};
use crate::error::CliError;

pub use crate::config::ModelKind;

fn command() -> Command {
    let mut cmd = Command::new("firealarm")
        .about("SMOTE, eight baseline classifiers and a density-weighted KNN/GBT ensemble for fire alarm data")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .global(true)
                .value_name("PATH")
                .value_parser(clap::value_parser!(PathBuf))
                .help(format!("config file (default: ${CONFIG_ENV} when set)")),
        )
        .arg(
            Arg::new("synthetic")
                .long("synthetic")
                .global(true)
                .action(ArgAction::SetTrue)
                .help("use generated data instead of data.path"),
        );
    for key in KEYS {
        cmd = cmd.arg(
            Arg::new(*key)
                .long(*key)
                .global(true)
                .value_name("VALUE")
                .allow_hyphen_values(true)
                .hide(*key != "models" && *key != "data.path" && *key != "output.dir")
                .help(format!("override config key {key}")),
        );
    }
    let count = |name: &'static str| {
        Arg::new(name)
            .long(name)
            .required(true)
            .allow_negative_numbers(true)
            .value_parser(clap::value_parser!(i64))
    };
    cmd.subcommand(Command::new("inspect").about("class counts before and after SMOTE, feature and split sizes"))
        .subcommand(
            Command::new("correlations")
                .about("feature/target Pearson correlations, sorted by |r|")
                .arg(Arg::new("bars").long("bars").action(ArgAction::SetTrue).help("print a text bar chart")),
        )
        .subcommand(Command::new("compare").about("fit and evaluate every configured model"))
        .subcommand(Command::new("ensemble").about("fit and evaluate the weighted ensemble only"))
        .subcommand(
            Command::new("metrics")
                .about("metrics for a hand-entered confusion matrix")
                .arg(count("tp"))
                .arg(count("fp"))
                .arg(count("fn"))
                .arg(count("tn"))
                .arg(Arg::new("json").long("json").action(ArgAction::SetTrue)),
        )
        .subcommand(Command::new("config").about("print the effective configuration"))
}

/// Config file (flag, else environment), then `--<key>` overrides, then `--synthetic`.
pub fn resolve_config(m: &ArgMatches) -> Result<RunConfig, CliError> {
    let path = m
        .get_one::<PathBuf>("config")
        .cloned()
        .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
    let mut cfg = RunConfig::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_text(&text)
            .map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message)))?;
    }
    for key in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    if m.get_flag("synthetic") {
        cfg.data_synthetic = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args` and runs one subcommand, writing human output to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) if !e.use_stderr() => {
            write!(out, "{e}").map_err(|e| CliError::data("writing to stdout", e))?;
            return Ok(());
        }
        Err(e) => {
            let text = e.render().to_string();
            let text = text.trim_end();
            return Err(CliError::config(text.strip_prefix("error: ").unwrap_or(text)));
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    if name == "metrics" {
        let get = |k: &str| *sub.get_one::<i64>(k).expect("required");
        commands::metrics(get("tp"), get("fp"), get("fn"), get("tn"), sub.get_flag("json"), out)?;
        return Ok(());
    }
    let cfg = resolve_config(sub)?;
    match name {
        "inspect" => commands::inspect(&cfg, out).map(drop),
        "correlations" => commands::correlations(&cfg, sub.get_flag("bars"), out).map(drop),
        "compare" => commands::compare(&cfg, out).map(drop),
        "ensemble" => commands::ensemble(&cfg, out).map(drop),
        "config" => out
            .write_all(cfg.to_text().as_bytes())
            .map_err(|e| CliError::data("writing to stdout", e)),
        other => unreachable!("unhandled subcommand {other}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_is_well_formed() {
        command().debug_assert();
    }

    #[test]
    fn flags_override_config_values() {
        let m = command()
            .try_get_matches_from(["firealarm", "config", "--split.seed", "9", "--models", "knn,gbt", "--synthetic"])
            .unwrap();
        let cfg = resolve_config(m.subcommand().unwrap().1).unwrap();
        assert_eq!(cfg.split_seed, 9);
        assert_eq!(cfg.models, vec![ModelKind::Knn, ModelKind::Gbt]);
        assert!(cfg.data_synthetic);
    }
}
