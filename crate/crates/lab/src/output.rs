//! CSV and JSON emitters. Every file starts with the tool, its version, the
//! schema version and the canonical command that reproduces it.

use std::io::Write;

use serde::Serialize;

use crate::error::LabError;

pub const TOOL: &str = "bondperc";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Bumped whenever a CSV column set or JSON layout changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// `# bondperc 0.1.0 schema=1 command: <command>`
pub fn metadata_line(command: &str) -> String {
    format!("# {TOOL} {VERSION} schema={SCHEMA_VERSION} command: {command}")
}

/// The metadata comment line, a header row and one line per row.
pub fn write_csv<W: Write, R: Serialize>(mut out: W, command: &str, rows: &[R]) -> Result<(), LabError> {
    writeln!(out, "{}", metadata_line(command))?;
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    schema: u32,
    command: &'a str,
    result: &'a T,
}

pub fn write_json<W: Write, T: Serialize>(mut out: W, command: &str, result: &T) -> Result<(), LabError> {
    let envelope = Envelope {
        tool: TOOL,
        version: VERSION,
        schema: SCHEMA_VERSION,
        command,
        result,
    };
    serde_json::to_writer_pretty(&mut out, &envelope)?;
    writeln!(out)?;
    Ok(())
}

/// Writes rows as CSV or, for JSON, the full `detail` value.
pub fn emit<W: Write, R: Serialize, T: Serialize>(
    out: W,
    format: Format,
    command: &str,
    rows: &[R],
    detail: &T,
) -> Result<(), LabError> {
    match format {
        Format::Csv => write_csv(out, command, rows),
        Format::Json => write_json(out, command, detail),
    }
}
