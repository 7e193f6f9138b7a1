//! Output helpers: 12-significant-digit CSV cells and file-or-stdout
//! emission, deterministic byte for byte.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Formats with 12 significant digits, plain decimal notation, '.' as the
/// decimal mark. Infinities print as `inf`/`-inf`.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// One CSV document: header row plus formatted records.
pub struct Csv {
    lines: Vec<String>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            lines: vec![header.join(",")],
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.lines.push(cells.join(","));
    }

    pub fn into_string(self) -> String {
        let mut text = self.lines.join("\n");
        text.push('\n');
        text
    }
}

/// Writes to `--out FILE` when given, stdout otherwise.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|err| CliError::io(format!("cannot write {}: {err}", path.display()))),
        None => {
            let stdout = std::io::stdout();
            let mut handle = stdout.lock();
            handle
                .write_all(text.as_bytes())
                .map_err(|err| CliError::io(format!("cannot write to stdout: {err}")))
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|err| CliError::io(format!("serialization failed: {err}")))?;
    text.push('\n');
    emit(out, &text)
}
