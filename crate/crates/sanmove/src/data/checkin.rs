use std::io::BufRead;

use chrono::DateTime;

use super::DataError;

/// One raw check-in record.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckIn {
    pub user_id: String,
    pub location_id: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub tz_offset_min: i32,
    pub lat: f64,
    pub lon: f64,
}

/// Supported raw input layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InputFormat {
    /// Eight tab-separated columns: user, venue, category id, category name,
    /// latitude, longitude, timezone offset in minutes, UTC time string
    /// (`Tue Apr 03 18:00:09 +0000 2012`).
    #[default]
    FoursquareTsv,
}

/// A line that could not be turned into a [`CheckIn`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reject {
    /// 1-based line number in the input.
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParseReport {
    pub checkins: Vec<CheckIn>,
    pub rejects: Vec<Reject>,
}

impl ParseReport {
    /// Rejects report, one `line<TAB>reason` entry per rejected line.
    pub fn rejects_text(&self) -> String {
        self.rejects
            .iter()
            .map(|r| format!("{}\t{}\n", r.line, r.reason))
            .collect()
    }
}

const TIME_FORMAT: &str = "%a %b %d %H:%M:%S %z %Y";

/// Parses a check-in stream. Malformed lines are collected in the report
/// instead of aborting; only I/O failures are errors.
pub fn parse_checkins<R: BufRead>(source: R, format: InputFormat) -> Result<ParseReport, DataError> {
    let mut report = ParseReport::default();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            continue;
        }
        match format {
            InputFormat::FoursquareTsv => match parse_foursquare_line(trimmed) {
                Ok(c) => report.checkins.push(c),
                Err(reason) => report.rejects.push(Reject {
                    line: line_no,
                    reason,
                }),
            },
        }
    }
    Ok(report)
}

fn parse_foursquare_line(line: &str) -> Result<CheckIn, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 8 {
        return Err(format!("expected 8 fields, got {}", fields.len()));
    }
    let user_id = fields[0].trim();
    let location_id = fields[1].trim();
    if user_id.is_empty() {
        return Err("empty user id".into());
    }
    if location_id.is_empty() {
        return Err("empty location id".into());
    }
    let lat: f64 = fields[4].trim().parse().map_err(|_| "bad latitude".to_string())?;
    let lon: f64 = fields[5].trim().parse().map_err(|_| "bad longitude".to_string())?;
    if !(-90.0..=90.0).contains(&lat) {
        return Err("lat out of range".into());
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err("lon out of range".into());
    }
    let tz_offset_min: i32 = fields[6]
        .trim()
        .parse()
        .map_err(|_| "bad timezone offset".to_string())?;
    let timestamp = DateTime::parse_from_str(fields[7].trim(), TIME_FORMAT)
        .map_err(|_| "bad timestamp".to_string())?
        .timestamp();
    if timestamp <= 0 {
        return Err("timestamp not positive".into());
    }
    Ok(CheckIn {
        user_id: user_id.to_string(),
        location_id: location_id.to_string(),
        timestamp,
        tz_offset_min,
        lat,
        lon,
    })
}
