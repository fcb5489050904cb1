mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};

use commands::CliError;
use config::{Raw, Settings, KEYS};

fn shared_args() -> Vec<Arg> {
    let mut args = vec![Arg::new("config")
        .long("config")
        .short('c')
        .value_name("FILE")
        .value_parser(value_parser!(PathBuf))
        .help("TOML file of dotted keys, e.g. rsa.iterations = 2")];
    for key in KEYS {
        let mut arg = Arg::new(key.name)
            .long(key.name)
            .value_name("VALUE")
            .action(ArgAction::Set);
        if let Some(alias) = key.alias {
            arg = arg.visible_alias(alias);
        }
        if key.switch {
            arg = arg.num_args(0..=1).default_missing_value("true");
        }
        args.push(arg);
    }
    args
}

fn cli() -> Command {
    let shared = shared_args();
    Command::new("glimpse")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Discriminative multi-document summaries with Rational Speech Act scoring")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("score")
                .about("Write <id>.matrix.tsv and <id>.rsa.json for every submission")
                .args(shared.clone()),
        )
        .subcommand(
            Command::new("summarize")
                .about("Write <id>.summary.json and <id>.highlights.html for every submission")
                .args(shared.clone()),
        )
        .subcommand(
            Command::new("eval")
                .about("Write eval_report.json and eval_report.csv and print the aggregate")
                .args(shared.clone()),
        )
        .subcommand(
            Command::new("demo")
                .about("Run the built-in two-review example and print the result")
                .args(shared),
        )
}

fn settings(m: &ArgMatches) -> Result<Settings, CliError> {
    let mut s = match m.get_one::<PathBuf>("config") {
        Some(path) => Settings::load(path).map_err(CliError::Config)?,
        None => Settings::default(),
    };
    for key in KEYS {
        if let Some(v) = m.get_one::<String>(key.name) {
            s.set(key.name, Raw::Flag(v)).map_err(CliError::Config)?;
        }
    }
    Ok(s)
}

fn run(name: &str, m: &ArgMatches) -> Result<(), CliError> {
    let s = settings(m)?;
    s.validate(name != "demo").map_err(CliError::Config)?;
    match name {
        "score" => commands::score(&s),
        "summarize" => commands::summarize_cmd(&s),
        "eval" => commands::eval(&s),
        "demo" => commands::demo(&s),
        other => Err(CliError::Internal(format!("unhandled subcommand {other}"))),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let Some((name, sub)) = matches.subcommand() else {
        return ExitCode::from(1);
    };
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(name, sub))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(3),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, "rsa.iterations = 5\ncomposer.variant = \"unique\"\n").unwrap();
        let m = cli()
            .try_get_matches_from([
                "glimpse",
                "score",
                "-c",
                cfg.to_str().unwrap(),
                "--rsa.iterations",
                "1",
                "--random-baseline",
            ])
            .unwrap();
        let s = settings(m.subcommand_matches("score").unwrap()).unwrap();
        assert_eq!(s.pipeline.rsa.iterations, 1);
        assert_eq!(
            s.pipeline.composer.variant,
            glimpse_core::VariantChoice::Unique
        );
        assert!(s.random_baseline);
    }
}
