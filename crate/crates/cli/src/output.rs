use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use gbrw_core::laws::Model;
use serde::Serialize;
use serde_json::{json, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] gbrw_core::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
}

impl CliError {
    /// Infeasible parameter searches are a failed check, everything else is
    /// a configuration problem.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(gbrw_core::Error::Infeasible { .. }) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Standard envelope: tool version, command, resolved model config and
/// options, overall verdict, then the command's own sections.
pub fn envelope(
    command: &str,
    model: Option<&Model>,
    options: &impl Serialize,
    pass: bool,
    body: Value,
) -> Value {
    let mut v = json!({
        "tool": "gbrw",
        "version": VERSION,
        "command": command,
        "config": model.map(|m| &m.config),
        "options": options,
        "pass": pass,
    });
    if let (Some(obj), Value::Object(extra)) = (v.as_object_mut(), body) {
        obj.extend(extra);
    }
    v
}

/// Run `f` against the file at `path`, or standard output.
pub fn emit(
    path: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> CliResult<()> {
    let wrap = |source, path: &str| CliError::Write {
        path: path.to_string(),
        source,
    };
    match path {
        Some(p) => {
            let name = p.display().to_string();
            let file = File::create(p).map_err(|e| wrap(e, &name))?;
            let mut w = BufWriter::new(file);
            f(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| wrap(e, &name))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| wrap(e, "<stdout>"))
        }
    }
}

pub fn emit_json(path: Option<&Path>, value: &Value) -> CliResult<()> {
    emit(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}
