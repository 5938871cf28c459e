//! Incident CSV parsing and cleaning.
//!
//! Cleaning drops, in this order of precedence:
//! 1. rows whose latitude or longitude is missing or `NA`;
//! 2. rows with an unparseable coordinate, district or dispatch time, an
//!    out-of-range coordinate, or a blank block address;
//! 3. rows in a removed district.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

/// Districts dropped by default: each has a single record across the whole
/// OpenDataPhilly extract.
pub const DEFAULT_REMOVED_DISTRICTS: [u32; 2] = [4, 23];

/// Column names for the fields the pipeline reads. Defaults follow the
/// OpenDataPhilly incidents export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnSchema {
    pub dispatch_time: String,
    pub lat: String,
    pub lon: String,
    pub block_address: String,
    pub district: String,
    /// Optional stable id column. When present its values become record ids;
    /// otherwise the zero-based data row ordinal is used.
    pub id: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            dispatch_time: "dispatch_date_time".into(),
            lat: "lat".into(),
            lon: "lng".into(),
            block_address: "location_block".into(),
            district: "dc_dist".into(),
            id: "id".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ColumnIndex {
    dispatch_time: usize,
    lat: usize,
    lon: usize,
    block_address: usize,
    district: usize,
    id: Option<usize>,
}

/// One unvalidated data line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRow {
    pub ordinal: u64,
    pub fields: Vec<String>,
}

/// Parsed CSV with its header and the resolved schema columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<RawRow>,
    cols: ColumnIndex,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn field<'a>(&self, row: &'a RawRow, col: usize) -> &'a str {
        row.fields.get(col).map(String::as_str).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrimeRecord {
    pub id: u64,
    pub dispatch_time: NaiveDateTime,
    pub location: GeoPoint,
    pub district: u32,
    pub block_address: String,
}

impl CrimeRecord {
    pub fn year(&self) -> i32 {
        self.dispatch_time.year()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub input_rows: u64,
    pub dropped_na_location: u64,
    pub dropped_invalid_fields: u64,
    pub dropped_removed_districts: u64,
    pub kept: u64,
}

impl CleanReport {
    pub fn dropped(&self) -> u64 {
        self.dropped_na_location + self.dropped_invalid_fields + self.dropped_removed_districts
    }

    pub fn reconciles(&self) -> bool {
        self.kept + self.dropped() == self.input_rows
    }
}

pub fn parse_crime_csv(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_crime_csv_reader(file, schema)
}

pub fn parse_crime_csv_reader(reader: impl Read, schema: &ColumnSchema) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| find(name).ok_or_else(|| Error::MissingColumn { column: name.to_string() });
    let cols = ColumnIndex {
        dispatch_time: require(&schema.dispatch_time)?,
        lat: require(&schema.lat)?,
        lon: require(&schema.lon)?,
        block_address: require(&schema.block_address)?,
        district: require(&schema.district)?,
        id: find(&schema.id),
    };
    let mut rows = Vec::new();
    for (ordinal, record) in rdr.records().enumerate() {
        let record = record?;
        rows.push(RawRow { ordinal: ordinal as u64, fields: record.iter().map(str::to_string).collect() });
    }
    Ok(RawTable { headers, rows, cols })
}

enum RowFate {
    Kept(CrimeRecord),
    NaLocation,
    Invalid,
    RemovedDistrict,
}

fn is_na(s: &str) -> bool {
    let s = s.trim();
    s.is_empty() || ["na", "n/a", "nan", "null", "none"].contains(&s.to_ascii_lowercase().as_str())
}

/// Parse a dispatch timestamp. Offsets are dropped; the civil local time is
/// kept.
pub fn parse_dispatch_time(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_local());
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%#z", "%Y-%m-%dT%H:%M:%S%#z", "%Y-%m-%d %H:%M:%S%.f%#z"] {
        if let Ok(dt) = DateTime::parse_from_str(s, fmt) {
            return Some(dt.naive_local());
        }
    }
    for fmt in [
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M",
        "%m/%d/%Y %H:%M:%S",
        "%m/%d/%Y %I:%M:%S %p",
        "%m/%d/%Y %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt);
        }
    }
    for fmt in ["%Y-%m-%d", "%m/%d/%Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(s, fmt) {
            return d.and_hms_opt(0, 0, 0);
        }
    }
    None
}

fn classify_row(table: &RawTable, row: &RawRow, removed: &BTreeSet<u32>) -> RowFate {
    let c = &table.cols;
    let (lat_s, lon_s) = (table.field(row, c.lat), table.field(row, c.lon));
    if is_na(lat_s) || is_na(lon_s) {
        return RowFate::NaLocation;
    }
    let location = match (lat_s.trim().parse::<f64>(), lon_s.trim().parse::<f64>()) {
        (Ok(lat), Ok(lon)) => match GeoPoint::checked(lat, lon) {
            Ok(p) => p,
            Err(_) => return RowFate::Invalid,
        },
        _ => return RowFate::Invalid,
    };
    let Some(dispatch_time) = parse_dispatch_time(table.field(row, c.dispatch_time)) else {
        return RowFate::Invalid;
    };
    let block_address = table.field(row, c.block_address).trim();
    if block_address.is_empty() {
        return RowFate::Invalid;
    }
    let Ok(district) = table.field(row, c.district).trim().parse::<u32>() else {
        return RowFate::Invalid;
    };
    let id = match c.id {
        Some(col) => match table.field(row, col).trim().parse::<u64>() {
            Ok(id) => id,
            Err(_) => return RowFate::Invalid,
        },
        None => row.ordinal,
    };
    if removed.contains(&district) {
        return RowFate::RemovedDistrict;
    }
    RowFate::Kept(CrimeRecord { id, dispatch_time, location, district, block_address: block_address.to_string() })
}

/// Validate and convert raw rows. Never fails; rejected rows are counted in
/// the report.
pub fn clean(table: &RawTable, removed_districts: &BTreeSet<u32>) -> (Vec<CrimeRecord>, CleanReport) {
    let mut records = Vec::new();
    let mut report = CleanReport { input_rows: table.rows.len() as u64, ..Default::default() };
    for row in &table.rows {
        match classify_row(table, row, removed_districts) {
            RowFate::Kept(r) => records.push(r),
            RowFate::NaLocation => report.dropped_na_location += 1,
            RowFate::Invalid => report.dropped_invalid_fields += 1,
            RowFate::RemovedDistrict => report.dropped_removed_districts += 1,
        }
    }
    report.kept = records.len() as u64;
    (records, report)
}

/// Write the kept rows with their original columns plus an `id` column (the
/// existing id column is reused when the input had one).
pub fn write_cleaned_csv(table: &RawTable, records: &[CrimeRecord], schema: &ColumnSchema, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut headers = table.headers.clone();
    if table.cols.id.is_none() {
        headers.push(schema.id.clone());
    }
    w.write_record(&headers)?;
    // Records come out of `clean` in row order, so a single forward pass
    // pairs each record with its source row.
    let mut rows = table.rows.iter();
    for rec in records {
        let row = rows
            .by_ref()
            .find(|r| match table.cols.id {
                Some(col) => table.field(r, col).trim().parse::<u64>().ok() == Some(rec.id),
                None => r.ordinal == rec.id,
            })
            .ok_or_else(|| Error::InvalidParameter(format!("record {} not found in source table", rec.id)))?;
        let mut fields: Vec<&str> = (0..table.headers.len()).map(|i| table.field(row, i)).collect();
        let id = rec.id.to_string();
        if table.cols.id.is_none() {
            fields.push(&id);
        }
        w.write_record(&fields)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
