#![allow(dead_code)]

use std::collections::BTreeSet;

use hotspot_core::ingest::{clean, parse_crime_csv_reader, ColumnSchema, CrimeRecord};
use hotspot_core::synth::{write_crime_csv, SynthIncident};

/// Push synthetic incidents through the CSV writer, parser and cleaner,
/// keeping every district.
pub fn to_records(incidents: &[SynthIncident]) -> Vec<CrimeRecord> {
    let mut buf = Vec::new();
    write_crime_csv(incidents, &mut buf).unwrap();
    let table = parse_crime_csv_reader(buf.as_slice(), &ColumnSchema::default()).unwrap();
    let (records, report) = clean(&table, &BTreeSet::new());
    assert_eq!(report.kept as usize, incidents.len());
    records
}
