//! Subject CSV files: `id,pd_time,pd_status,os_time,os_status`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use idm::{OsStatus, PdStatus, SubjectRecord};

use crate::error::CliError;

pub const COLUMNS: [&str; 5] = ["id", "pd_time", "pd_status", "os_time", "os_status"];

fn invalid(line: u64, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("line {line}: {reason}"))
}

fn parse_time(line: u64, name: &str, s: &str) -> Result<f64, CliError> {
    s.parse::<f64>().map_err(|_| invalid(line, format!("{name} '{s}' is not a number")))
}

fn parse_flag(line: u64, name: &str, s: &str) -> Result<bool, CliError> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(invalid(line, format!("{name} must be 0 or 1, got '{s}'"))),
    }
}

/// Reads and validates subject records. Diagnostics cite the file line.
pub fn read_subjects<R: Read>(input: R) -> Result<Vec<SubjectRecord>, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && &headers[0] == "") {
        return Err(CliError::Validation("no subjects".into()));
    }
    if headers.iter().ne(COLUMNS) {
        return Err(invalid(1, format!("header must be {}, got {}", COLUMNS.join(","), headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut seen: HashMap<String, u64> = HashMap::new();
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            invalid(line, format!("malformed row: {e}"))
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let id = row[0].to_string();
        if id.is_empty() {
            return Err(invalid(line, "empty id"));
        }
        if let Some(first) = seen.insert(id.clone(), line) {
            return Err(invalid(line, format!("duplicate id '{id}' (first on line {first})")));
        }
        let pd_time = match &row[1] {
            "" => None,
            s => Some(parse_time(line, "pd_time", s)?),
        };
        let pd_status = match (parse_flag(line, "pd_status", &row[2])?, pd_time) {
            (true, None) => return Err(invalid(line, "pd_status 1 requires pd_time")),
            (true, Some(_)) => PdStatus::Event,
            (false, Some(_)) => PdStatus::Censored,
            (false, None) => PdStatus::None,
        };
        let os_time = parse_time(line, "os_time", &row[3])?;
        let os_status = if parse_flag(line, "os_status", &row[4])? { OsStatus::Event } else { OsStatus::Censored };
        let record = SubjectRecord { id, pd_time, pd_status, os_time, os_status };
        record.path().map_err(|e| invalid(line, e))?;
        out.push(record);
    }
    if out.is_empty() {
        return Err(CliError::Validation("no subjects".into()));
    }
    Ok(out)
}

pub fn ingest_csv(path: &Path) -> Result<Vec<SubjectRecord>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
    read_subjects(file).map_err(|e| match e {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Writes records in the ingestion schema. Times use the shortest
/// representation that parses back to the same value.
pub fn write_subjects<W: Write>(out: W, records: &[SubjectRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        let pd_time = r.pd_time.map(|t| t.to_string()).unwrap_or_default();
        let pd_status = if r.pd_status == PdStatus::Event { "1" } else { "0" };
        let os_status = if r.os_status == OsStatus::Event { "1" } else { "0" };
        w.write_record([r.id.as_str(), &pd_time, pd_status, &r.os_time.to_string(), os_status])?;
    }
    w.flush()?;
    Ok(())
}
