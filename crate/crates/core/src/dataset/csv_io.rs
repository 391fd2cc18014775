use std::io::{self, Write};

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};

use super::{ClampBounds, DatasetError, DatasetVersion, TimeSeriesDataset, TimestampFormat};

const TIMESTAMP_HEADER: &str = "timestamp";
const ISO_OUT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Replace empty cells with the mean of the present values in that
    /// series instead of rejecting the file.
    pub fill_missing: bool,
    pub unit_label: String,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            fill_missing: false,
            unit_label: "W".to_string(),
        }
    }
}

/// Parses, clamps and wraps an upload as root version 0.
pub fn ingest_csv(raw: &[u8], bounds: ClampBounds) -> Result<DatasetVersion, DatasetError> {
    ingest_csv_with(raw, bounds, &IngestOptions::default())
}

pub fn ingest_csv_with(
    raw: &[u8],
    bounds: ClampBounds,
    options: &IngestOptions,
) -> Result<DatasetVersion, DatasetError> {
    let parsed = parse_csv(raw, options)?;
    Ok(DatasetVersion::root(parsed.clamped(&bounds)))
}

/// Parses the wire format without clamping.
pub fn parse_csv(raw: &[u8], options: &IngestOptions) -> Result<TimeSeriesDataset, DatasetError> {
    let text = std::str::from_utf8(raw)
        .map_err(|e| DatasetError::MalformedCsv(format!("not valid UTF-8: {e}")))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| DatasetError::MalformedCsv(e.to_string()))?
        .clone();
    match headers.get(0) {
        Some(h) if h.trim_start_matches('\u{feff}') == TIMESTAMP_HEADER => {}
        Some(h) => {
            return Err(DatasetError::MalformedCsv(format!(
                "first header must be `{TIMESTAMP_HEADER}`, found `{h}`"
            )))
        }
        None => return Err(DatasetError::MalformedCsv("missing header row".into())),
    }
    let series_ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if series_ids.is_empty() {
        return Err(DatasetError::EmptyDataset("no series columns".into()));
    }
    if let Some(blank) = series_ids.iter().position(String::is_empty) {
        return Err(DatasetError::MalformedCsv(format!(
            "empty series id in header column {}",
            blank + 2
        )));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = series_ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(DatasetError::MalformedCsv(format!("duplicate series id `{dup}`")));
    }

    let mut timestamps = Vec::new();
    let mut format = None;
    // column-major while reading; transposed at the end
    let mut columns: Vec<Vec<Option<f64>>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        // header is line 1
        let line = idx + 2;
        let record = record.map_err(|e| DatasetError::MalformedCsv(e.to_string()))?;
        let (ts, fmt) = parse_timestamp(record.get(0).unwrap_or(""))
            .ok_or_else(|| DatasetError::MalformedCsv(format!("bad timestamp on line {line}")))?;
        format.get_or_insert(fmt);
        timestamps.push(ts);
        let mut column = Vec::with_capacity(series_ids.len());
        for (j, cell) in record.iter().skip(1).enumerate() {
            if cell.is_empty() {
                if !options.fill_missing {
                    return Err(DatasetError::MissingValue {
                        series: series_ids[j].clone(),
                        row: line,
                    });
                }
                column.push(None);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                DatasetError::MalformedCsv(format!(
                    "non-numeric value `{cell}` on line {line}, column {}",
                    j + 2
                ))
            })?;
            if !v.is_finite() {
                return Err(DatasetError::MalformedCsv(format!(
                    "non-finite value `{cell}` on line {line}"
                )));
            }
            column.push(Some(v));
        }
        columns.push(column);
    }
    if timestamps.is_empty() {
        return Err(DatasetError::EmptyDataset("no data rows".into()));
    }

    let mut values = Vec::with_capacity(series_ids.len());
    for (j, id) in series_ids.iter().enumerate() {
        let row: Vec<Option<f64>> = columns.iter().map(|c| c[j]).collect();
        let present: Vec<f64> = row.iter().flatten().copied().collect();
        if present.is_empty() {
            return Err(DatasetError::MissingValue {
                series: id.clone(),
                row: 2,
            });
        }
        let mean = present.iter().sum::<f64>() / present.len() as f64;
        values.push(row.into_iter().map(|v| v.unwrap_or(mean)).collect());
    }

    // dataset rows are 1-based data rows; report file lines (header is line 1)
    TimeSeriesDataset::new(
        series_ids,
        timestamps,
        values,
        options.unit_label.clone(),
        format.unwrap_or_default(),
    )
    .map_err(|e| match e {
        DatasetError::NonMonotonicTimestamps { row } => {
            DatasetError::NonMonotonicTimestamps { row: row + 1 }
        }
        DatasetError::IrregularStep {
            row,
            expected,
            found,
        } => DatasetError::IrregularStep {
            row: row + 1,
            expected,
            found,
        },
        other => other,
    })
}

fn parse_timestamp(raw: &str) -> Option<(i64, TimestampFormat)> {
    if let Ok(secs) = raw.parse::<i64>() {
        return Some((secs, TimestampFormat::EpochSeconds));
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some((dt.timestamp(), TimestampFormat::Iso8601));
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
        .map(|naive| (naive.and_utc().timestamp(), TimestampFormat::Iso8601))
}

fn format_timestamp(ts: i64, format: TimestampFormat) -> String {
    match format {
        TimestampFormat::EpochSeconds => ts.to_string(),
        TimestampFormat::Iso8601 => Utc
            .timestamp_opt(ts, 0)
            .single()
            .map(|dt| dt.format(ISO_OUT).to_string())
            .unwrap_or_else(|| ts.to_string()),
    }
}

impl TimeSeriesDataset {
    /// Writes the dataset in the upload format (timestamp rows, series
    /// columns). Values use the shortest representation that round-trips.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = Vec::with_capacity(self.series_ids().len() + 1);
        header.push(TIMESTAMP_HEADER.to_string());
        header.extend(self.series_ids().iter().cloned());
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for (t, ts) in self.timestamps().iter().enumerate() {
            row.clear();
            row.push(format_timestamp(*ts, self.timestamp_format()));
            row.extend(self.values().iter().map(|series| series[t].to_string()));
            w.write_record(&row)?;
        }
        w.flush()
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing csv into memory cannot fail");
        buf
    }
}
