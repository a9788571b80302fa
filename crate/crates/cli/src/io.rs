//! File helpers, config-file expansion and the resolved-config header that
//! every artifact starts with.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use clap::{ArgMatches, Command};
use labelfuse::kv::KvDoc;
use labelfuse::{CorrelationSet, Error};

use crate::error::{CliError, Result};

pub fn read_file<T>(
    path: &Path,
    parse: impl FnOnce(BufReader<File>) -> labelfuse::Result<T>,
) -> Result<T> {
    let wrap = |source| CliError::File {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(|e| wrap(Error::Io(e)))?;
    parse(BufReader::new(file)).map_err(wrap)
}

pub fn write_file(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> labelfuse::Result<()>,
) -> Result<()> {
    let wrap = |source| CliError::File {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(|e| wrap(Error::Io(e)))?;
    let mut w = BufWriter::new(file);
    write(&mut w).map_err(wrap)?;
    w.flush().map_err(|e| wrap(Error::Io(e)))
}

/// Write `text` to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, |w| Ok(w.write_all(text.as_bytes())?)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Core(Error::Io(e)))
        }
    }
}

const UNRECORDED: [&str; 5] = ["out", "out_dir", "config", "help", "version"];

/// The fully resolved command line (explicit flags, config-file values and
/// defaults), minus output locations, as `key=value` comment lines.
#[derive(Debug, Clone, Default)]
pub struct Header {
    lines: Vec<String>,
}

impl Header {
    pub fn from_matches(root: &Command, matches: &ArgMatches) -> Self {
        let mut lines = vec![format!("labelfuse {}", env!("CARGO_PKG_VERSION"))];
        if let Some((name, sub)) = matches.subcommand() {
            lines.push(format!("command={name}"));
            if let Some(cmd) = root.find_subcommand(name) {
                for arg in cmd.get_arguments() {
                    let id = arg.get_id().as_str();
                    if UNRECORDED.contains(&id) {
                        continue;
                    }
                    let Ok(Some(raw)) = sub.try_get_raw(id) else {
                        continue;
                    };
                    let value = raw
                        .map(|v| v.to_string_lossy().into_owned())
                        .collect::<Vec<_>>()
                        .join(",");
                    let key = arg.get_long().unwrap_or(id);
                    lines.push(format!("{key}={value}"));
                }
            }
        }
        Header { lines }
    }

    /// Record a value the command derived from its arguments.
    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key}={value}"));
    }

    pub fn write<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        for line in &self.lines {
            writeln!(w, "# {line}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("header is UTF-8")
    }

    pub fn add_to(&self, doc: &mut KvDoc) {
        for line in &self.lines {
            doc.comment(line.clone());
        }
    }
}

/// Append `--key=value` arguments for every entry of the `--config` file
/// whose flag the subcommand accepts and the command line does not already
/// set. Keys that no subcommand knows are a usage error.
pub fn expand_config(root: &Command, argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let Some(sub) = argv
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| !a.starts_with('-'))
        .and_then(|name| root.find_subcommand(name))
    else {
        return Ok(argv);
    };
    let doc = read_file(Path::new(&path), KvDoc::read)?;
    let mut out = argv.clone();
    for (key, value) in doc.entries() {
        let long = key.replace('_', "-");
        if long == "config" {
            continue;
        }
        let Some(arg) = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(long.as_str()))
        else {
            let known = root.get_subcommands().any(|c| {
                c.get_arguments()
                    .any(|a| a.get_long() == Some(long.as_str()))
            });
            if known {
                continue;
            }
            return Err(CliError::usage(format!(
                "{}: unknown config key '{key}'",
                Path::new(&path).display()
            )));
        };
        let flag = format!("--{long}");
        let already = argv.iter().filter_map(|a| a.to_str()).any(|a| {
            a == flag
                || a.strip_prefix(flag.as_str())
                    .is_some_and(|rest| rest.starts_with('='))
        });
        if already {
            continue;
        }
        if arg.get_action().takes_values() {
            out.push(format!("{flag}={value}").into());
        } else {
            match value {
                "true" => out.push(flag.into()),
                "false" => {}
                other => {
                    return Err(CliError::usage(format!(
                        "config key '{key}' is a switch; expected true or false, found '{other}'"
                    )))
                }
            }
        }
    }
    Ok(out)
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut iter = argv.iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// `index,p_positive` lines after the header.
pub fn write_probabilities<W: Write>(
    w: &mut W,
    header: &Header,
    probs: &[f64],
) -> labelfuse::Result<()> {
    header.write(w)?;
    writeln!(w, "index,p_positive")?;
    for (i, p) in probs.iter().enumerate() {
        writeln!(w, "{i},{p}")?;
    }
    Ok(())
}

pub fn read_probabilities<R: BufRead>(reader: R) -> labelfuse::Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with("index") {
            continue;
        }
        let bad = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let (i, p) = t
            .split_once(',')
            .ok_or_else(|| bad("expected 'index,probability'".into()))?;
        let i: usize = i
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad index '{}'", i.trim())))?;
        if i != out.len() {
            return Err(bad(format!("expected index {}, found {i}", out.len())));
        }
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad probability '{}'", p.trim())))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(bad(format!("probability {p} outside [0, 1]")));
        }
        out.push(p);
    }
    Ok(out)
}

/// `j,k,weight` lines; the weight column is optional when reading.
pub fn write_pairs<W: Write>(
    w: &mut W,
    header: &Header,
    pairs: &[(usize, usize, f64)],
) -> labelfuse::Result<()> {
    header.write(w)?;
    for (j, k, weight) in pairs {
        writeln!(w, "{j},{k},{weight}")?;
    }
    Ok(())
}

pub fn read_pairs<R: BufRead>(reader: R, m: usize) -> labelfuse::Result<CorrelationSet> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split(',').map(str::trim).collect();
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("bad source index '{s}'"),
            })
        };
        if !(2..=3).contains(&fields.len()) {
            return Err(Error::Parse {
                line: idx + 1,
                message: "expected 'j,k' or 'j,k,weight'".into(),
            });
        }
        pairs.push((parse(fields[0])?, parse(fields[1])?));
    }
    CorrelationSet::new(m, pairs)
}
