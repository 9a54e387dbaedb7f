//! Report envelopes and output plumbing.
//!
//! JSON reports carry the invocation and the shared flags inline. CSV tables
//! keep their fixed headers, so a written CSV gets a `<file>.meta.json`
//! sidecar holding the same envelope.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use omegasym::Error;
use serde::Serialize;

use crate::Common;

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let io = match &e {
            Error::Io(_) => true,
            Error::Csv(c) => c.is_io_error(),
            Error::Json(j) => j.is_io(),
            _ => false,
        };
        if io {
            Failure::Io(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub invocation: Vec<String>,
    pub flags: &'a Common,
    /// Discretization pitch of the input measure, when there is one.
    pub h: Option<f64>,
    pub report: T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(flags: &'a Common, h: Option<f64>, report: T) -> Self {
        Self {
            invocation: std::env::args().collect(),
            flags,
            h,
            report,
        }
    }
}

/// A file or standard output.
pub fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Failure> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes a CSV table through `fill` and, for files, the envelope next to it.
pub fn write_table<T: Serialize>(
    out: Option<&Path>,
    envelope: &Envelope<'_, T>,
    fill: impl FnOnce(&mut dyn Write) -> omegasym::Result<()>,
) -> Result<(), Failure> {
    let mut w = sink(out)?;
    fill(&mut w)?;
    w.flush()?;
    if let Some(p) = out {
        write_json(Some(&sidecar(p)), envelope)?;
    }
    Ok(())
}
