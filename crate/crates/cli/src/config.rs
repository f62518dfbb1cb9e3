//! `key = value` manifests. Keys are long flag names (`-` or `_`). Keys
//! before any `[section]` apply to every subcommand that has the flag; keys
//! under `[train]`, `[eval]` and so on apply to that subcommand only.
//! `#` starts a comment line.

use std::collections::HashSet;
use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, Command};

use crate::error::{CliResult, Failure};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub section: Option<String>,
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str, path: &Path) -> CliResult<Vec<Entry>> {
    let mut section = None;
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let n = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(name.trim().to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::usage(format!("{}:{n}: expected key = value", path.display())));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"').to_string();
        if key.is_empty() {
            return Err(Failure::usage(format!("{}:{n}: empty key", path.display())));
        }
        if !seen.insert((section.clone(), key.clone())) {
            return Err(Failure::usage(format!("{}:{n}: duplicate key {key}", path.display())));
        }
        entries.push(Entry {
            section: section.clone(),
            key,
            value,
            line: n,
        });
    }
    Ok(entries)
}

struct Flag {
    id: String,
    switch: bool,
}

fn flag_of(cmd: &Command, long: &str) -> Option<Flag> {
    cmd.get_arguments().find(|a| a.get_long() == Some(long)).map(|a| Flag {
        id: a.get_id().to_string(),
        switch: matches!(a.get_action(), ArgAction::SetTrue),
    })
}

fn parse_switch(value: &str) -> Option<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn on_command_line(matches: &[&ArgMatches], id: &str) -> bool {
    matches
        .iter()
        .any(|m| m.try_contains_id(id).unwrap_or(false) && m.value_source(id) == Some(ValueSource::CommandLine))
}

/// Extra argv entries for config keys whose flags were not given on the
/// command line. Appending them after the user's arguments is safe because
/// no subcommand takes positional arguments.
pub fn injected_args(root: &Command, matches: &ArgMatches, entries: &[Entry], path: &Path) -> CliResult<Vec<OsString>> {
    let Some((sub_name, sub_matches)) = matches.subcommand() else {
        return Ok(Vec::new());
    };
    let sub = root
        .find_subcommand(sub_name)
        .ok_or_else(|| Failure::internal(format!("unknown subcommand {sub_name}")))?;
    let known_sections: Vec<&str> = root.get_subcommands().map(|c| c.get_name()).collect();
    let reserved = ["config", "help", "version"];

    let mut out = Vec::new();
    for e in entries {
        let at = |msg: String| Failure::usage(format!("{}:{}: {msg}", path.display(), e.line));
        if reserved.contains(&e.key.as_str()) {
            return Err(at(format!("{} cannot be set from a config file", e.key)));
        }
        let flag = flag_of(sub, &e.key).or_else(|| flag_of(root, &e.key));
        match &e.section {
            Some(s) if !known_sections.contains(&s.as_str()) => {
                return Err(at(format!("unknown section [{s}]")));
            }
            Some(s) if s != sub_name => continue,
            Some(s) if flag.is_none() => {
                return Err(at(format!("{s} has no flag --{}", e.key)));
            }
            None if flag.is_none() => {
                let elsewhere = root.get_subcommands().any(|c| flag_of(c, &e.key).is_some());
                if elsewhere {
                    continue;
                }
                return Err(at(format!("no subcommand has a flag --{}", e.key)));
            }
            _ => {}
        }
        let flag = flag.expect("checked above");
        if on_command_line(&[matches, sub_matches], &flag.id) {
            continue;
        }
        if flag.switch {
            match parse_switch(&e.value) {
                Some(true) => out.push(OsString::from(format!("--{}", e.key))),
                Some(false) => {}
                None => return Err(at(format!("--{} expects true or false, got {:?}", e.key, e.value))),
            }
        } else {
            out.push(OsString::from(format!("--{}={}", e.key, e.value)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::Cli;
    use clap::CommandFactory;

    fn merged(argv: &[&str], config: &str) -> CliResult<Vec<String>> {
        let root = Cli::command();
        let matches = root.clone().try_get_matches_from(argv).unwrap();
        let entries = parse(config, Path::new("test.conf"))?;
        Ok(injected_args(&root, &matches, &entries, Path::new("test.conf"))?
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect())
    }

    #[test]
    fn parses_sections_comments_and_underscores() {
        let entries = parse("# c\nseed = 7\n\n[train]\nparams_out = \"p.bin\"\n", Path::new("x")).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].section, None);
        assert_eq!(entries[1].section.as_deref(), Some("train"));
        assert_eq!(entries[1].key, "params-out");
        assert_eq!(entries[1].value, "p.bin");
        assert!(parse("seed 7", Path::new("x")).is_err());
        assert!(parse("seed = 1\nseed = 2", Path::new("x")).is_err());
    }

    #[test]
    fn command_line_wins_over_file() {
        let argv = [
            "humordet",
            "train",
            "--store",
            "s",
            "--labels",
            "l",
            "--params-out",
            "p",
            "--epochs",
            "9",
        ];
        let got = merged(&argv, "epochs = 3\nlr = 0.01\nseed = 5\n").unwrap();
        assert_eq!(got, vec!["--lr=0.01", "--seed=5"]);
    }

    #[test]
    fn sections_scope_keys() {
        let argv = ["humordet", "stats", "--data", "d"];
        let got = merged(&argv, "[train]\nepochs = 3\n[stats]\nformat = json\n").unwrap();
        assert_eq!(got, vec!["--format=json"]);
        // a flag of another subcommand is ignored at top level
        assert_eq!(merged(&argv, "epochs = 3\n").unwrap(), Vec::<String>::new());
        assert!(merged(&argv, "epoch = 3\n").is_err());
        assert!(merged(&argv, "[stats]\nepochs = 3\n").is_err());
        assert!(merged(&argv, "[nope]\nx = 1\n").is_err());
    }

    #[test]
    fn switches() {
        let argv = ["humordet", "stats", "--data", "d"];
        assert_eq!(merged(&argv, "quiet = true").unwrap(), vec!["--quiet"]);
        assert!(merged(&argv, "quiet = false").unwrap().is_empty());
        assert!(merged(&argv, "quiet = maybe").is_err());
        assert!(merged(&argv, "config = other").is_err());
    }
}
