//! CSV, JSON and GeoJSON writers for pipeline outputs. Every writer is
//! deterministic: rows follow the input order, floats use shortest
//! round-trip formatting.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::nsi::DistanceMatrix;
use crate::pipeline::{format_key_part, ClusterRun, DistrictHopkins, DistrictYearShare, GridCounts, NsiReport, RedlineReport};

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

/// Create `path` (and its parent directories) and hand a buffered writer to `f`.
pub fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, out: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    out.write_all(b"\n").map_err(|e| Error::io("<json output>", e))
}

pub fn write_heatmap_csv(rows: &[DistrictYearShare], out: impl Write) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["district", "year", "count", "percent"])?;
    for r in rows {
        w.write_record([r.district.to_string(), r.year.to_string(), r.count.to_string(), r.percent.to_string()])?;
    }
    finish(w)
}

pub fn write_grid_csv(grid: &GridCounts, out: impl Write) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["row", "col", "min_lat", "max_lat", "min_lon", "max_lon", "count"])?;
    for (i, row) in grid.counts.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            let b = grid.cell_bounds(i, j);
            w.write_record([
                i.to_string(),
                j.to_string(),
                b.min_lat.to_string(),
                b.max_lat.to_string(),
                b.min_lon.to_string(),
                b.max_lon.to_string(),
                c.to_string(),
            ])?;
        }
    }
    finish(w)
}

/// One row per clustered point: cluster id is -1 for noise.
pub fn write_labels_csv(runs: &[ClusterRun], out: impl Write) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["district", "year", "point_id", "lat", "lon", "cluster_id", "role"])?;
    for run in runs {
        let d = format_key_part(run.district);
        let y = format_key_part(run.year);
        for (i, (a, role)) in run.labeling.assignment().iter().zip(run.labeling.roles()).enumerate() {
            let p = run.points[i];
            w.write_record([
                d.clone(),
                y.clone(),
                run.record_ids[i].to_string(),
                p.lat.to_string(),
                p.lon.to_string(),
                a.map_or_else(|| "-1".to_string(), |c| c.to_string()),
                role.as_str().to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn write_eps_log_csv(runs: &[ClusterRun], out: impl Write) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["district", "year", "n_points", "eps", "eps_source", "n_clusters", "n_noise"])?;
    for run in runs {
        w.write_record([
            format_key_part(run.district),
            format_key_part(run.year),
            run.points.len().to_string(),
            run.eps.to_string(),
            run.eps_source.as_str().to_string(),
            run.labeling.n_clusters().to_string(),
            run.labeling.n_noise().to_string(),
        ])?;
    }
    finish(w)
}

fn position(p: &GeoPoint) -> Value {
    json!([p.lon, p.lat])
}

/// Representatives as Point features and cluster members as MultiPoint
/// features, tagged with district, year and cluster id.
pub fn clusters_geojson(runs: &[ClusterRun]) -> Value {
    let mut features = Vec::new();
    for run in runs {
        for (c, rep) in run.clusters.iter().zip(&run.representatives) {
            let props = |kind: &str| {
                json!({
                    "kind": kind,
                    "district": run.district,
                    "year": run.year,
                    "cluster_id": c.id,
                    "members": c.members.len(),
                    "core_members": c.core_members.len(),
                })
            };
            features.push(json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": position(rep) },
                "properties": props("representative"),
            }));
            let coords: Vec<Value> = c.members.iter().map(|&i| position(&run.points[i])).collect();
            features.push(json!({
                "type": "Feature",
                "geometry": { "type": "MultiPoint", "coordinates": coords },
                "properties": props("members"),
            }));
        }
    }
    json!({ "type": "FeatureCollection", "features": features })
}

pub fn write_hopkins_csv(rows: &[DistrictHopkins], out: impl Write) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["district", "n_points", "sample_size", "trials", "mean", "std"])?;
    for r in rows {
        w.write_record([
            r.district.to_string(),
            r.n_points.to_string(),
            r.summary.sample_size.to_string(),
            r.summary.trials.to_string(),
            r.summary.mean.to_string(),
            r.summary.std.to_string(),
        ])?;
    }
    finish(w)
}

fn join<T: ToString>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_nsi_csv(report: &NsiReport, out: impl Write) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["rank", "district", "nsi", "classification", "threshold", "years_used", "clusters_per_year"])?;
    for (rank, r) in report.ranked.iter().enumerate() {
        w.write_record([
            (rank + 1).to_string(),
            r.district.to_string(),
            r.value.to_string(),
            r.classification.as_str().to_string(),
            r.threshold.to_string(),
            join(&r.years_used),
            join(r.clusters_per_year.iter().map(|(y, c)| format!("{y}:{c}"))),
        ])?;
    }
    finish(w)
}

/// Square matrix with year labels on both axes.
pub fn write_matrix_csv(m: &DistanceMatrix, out: impl Write) -> Result<()> {
    let mut w = csv_writer(out);
    let mut header = vec!["year".to_string()];
    header.extend(m.years.iter().map(|y| y.to_string()));
    w.write_record(&header)?;
    for (i, y) in m.years.iter().enumerate() {
        let mut row = vec![y.to_string()];
        row.extend((0..m.len()).map(|j| m.get(i, j).to_string()));
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn write_redline_text(report: &RedlineReport, out: &mut dyn Write) -> Result<()> {
    out.write_all(report.render_text().as_bytes()).map_err(|e| Error::io("<text output>", e))
}
