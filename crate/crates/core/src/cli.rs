//! Command-line front end. Exit codes: 0 success, 1 usage or config
//! error, 2 data error. Failures print a one-line JSON object on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geo::{Bounds, GeoPoint};
use crate::ingest::{clean, parse_crime_csv, write_cleaned_csv, CleanReport, CrimeRecord};
use crate::nsi::ThresholdMode;
use crate::pipeline::{self, grid_counts};
use crate::polygon::{load_polygon_layer, DistrictLayer, HolcLayer};
use crate::report::{self, write_file};
use crate::synth::{self, RedlineKind, ScenarioMode, ScenarioSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hotspot", version, about = "Crime hotspot clustering and stability analysis")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override keys of the TOML config.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Crime CSV (raw export or output of `clean`).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// HOLC polygon GeoJSON.
    #[arg(long, global = true)]
    pub holc: Option<PathBuf>,
    #[arg(long, global = true)]
    pub holc_grade_property: Option<String>,
    /// Police district polygon GeoJSON; records are re-tagged by containment.
    #[arg(long, global = true)]
    pub district_geojson: Option<PathBuf>,
    #[arg(long, global = true)]
    pub district_property: Option<String>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub year_start: Option<i32>,
    #[arg(long, global = true)]
    pub year_end: Option<i32>,
    #[arg(long, global = true)]
    pub min_pts: Option<usize>,
    /// Fixed DBSCAN radius in degrees; disables knee selection.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// NSI cut-off: a number, or `median` for the median of the run.
    #[arg(long, global = true, value_parser = parse_threshold)]
    pub threshold: Option<ThresholdMode>,
    /// Comma-separated district ids to drop; pass "" to keep every district.
    #[arg(long, global = true, value_parser = parse_district_list)]
    pub removed_districts: Option<DistrictList>,
    #[arg(long, global = true)]
    pub hopkins_sample_size: Option<usize>,
    #[arg(long, global = true)]
    pub hopkins_trials: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub grid_size: Option<usize>,
    /// Pool all districts per year when clustering.
    #[arg(long, global = true)]
    pub citywide: bool,
    #[arg(long, global = true)]
    pub col_dispatch_time: Option<String>,
    #[arg(long, global = true)]
    pub col_lat: Option<String>,
    #[arg(long, global = true)]
    pub col_lon: Option<String>,
    #[arg(long, global = true)]
    pub col_block_address: Option<String>,
    #[arg(long, global = true)]
    pub col_district: Option<String>,
    #[arg(long, global = true)]
    pub col_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistrictList(pub Vec<u32>);

fn parse_district_list(s: &str) -> std::result::Result<DistrictList, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u32>().map_err(|e| format!("bad district id `{t}`: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(DistrictList)
}

fn parse_threshold(s: &str) -> std::result::Result<ThresholdMode, String> {
    if s.eq_ignore_ascii_case("median") {
        return Ok(ThresholdMode::RunMedian);
    }
    s.parse::<f64>().map(ThresholdMode::Fixed).map_err(|e| format!("expected a number or `median`: {e}"))
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((a.parse().map_err(|e| format!("{e}"))?, b.parse().map_err(|e| format!("{e}"))?)),
        _ => Err(format!("expected `a,b`, got `{s}`")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centers(pub Vec<GeoPoint>);

fn parse_centers(s: &str) -> std::result::Result<Centers, String> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_pair(t).map(|(lat, lon)| GeoPoint::new(lat, lon)))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Centers)
}

fn parse_bounds(s: &str) -> std::result::Result<Bounds, String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{e}"))).collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [a, b, c, d] => Bounds::new(*a, *b, *c, *d).map_err(|e| e.to_string()),
        _ => Err("expected `min_lat,max_lat,min_lon,max_lon`".into()),
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drop unusable rows and write a cleaned CSV with stable record ids.
    Clean {
        /// Cleaned CSV path; defaults to <output-dir>/cleaned.csv.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Share of each year's incidents per district, plus a citywide count grid.
    Heatmap,
    /// Select eps and run DBSCAN per district and year.
    Cluster,
    /// Mean Hopkins statistic per district.
    Hopkins,
    /// Rank districts by non-systemic index.
    Nsi,
    /// HOLC grade versus cluster membership chi-square test for one district.
    Redline {
        #[arg(long)]
        district: u32,
    },
    /// Write a synthetic crime CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    City,
    Scenario,
    RedlineBiased,
    RedlineUniform,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    /// CSV path; defaults to <output-dir>/synth.csv.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// HOLC layer path for redline kinds; defaults to <output-dir>/holc.geojson.
    #[arg(long)]
    pub holc_output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "drifting")]
    pub mode: ModeArg,
    /// District id written for scenario incidents.
    #[arg(long, default_value_t = 1)]
    pub district: u32,
    /// Cluster centers as `lat,lon;lat,lon;...`.
    #[arg(long, value_parser = parse_centers, default_value = "39.95,-75.16;39.96,-75.14")]
    pub centers: Centers,
    #[arg(long, default_value_t = 0.001)]
    pub sigma: f64,
    #[arg(long, default_value_t = 50)]
    pub points_per_cluster: usize,
    /// Per-year displacement as `dlat,dlon`.
    #[arg(long, value_parser = parse_pair, default_value = "0.0,0.002")]
    pub drift: (f64, f64),
    #[arg(long, default_value_t = 0.1)]
    pub background_fraction: f64,
    /// `min_lat,max_lat,min_lon,max_lon`.
    #[arg(long, value_parser = parse_bounds, default_value = "39.90,40.00,-75.25,-75.05")]
    pub bounds: Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Stationary,
    Drifting,
}

impl Overrides {
    /// Load the config file (if any) and apply every flag that was given.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:expr),* $(,)?) => {
                $(if let Some(v) = &self.$flag { $field = v.clone().into(); })*
            };
        }
        set!(
            input => c.crime_csv,
            holc => c.holc_geojson,
            holc_grade_property => c.holc_grade_property,
            district_geojson => c.district_geojson,
            district_property => c.district_property,
            output_dir => c.output_dir,
            year_start => c.year_start,
            year_end => c.year_end,
            min_pts => c.min_pts,
            eps => c.eps,
            threshold => c.threshold,
            hopkins_sample_size => c.hopkins_sample_size,
            hopkins_trials => c.hopkins_trials,
            seed => c.seed,
            grid_size => c.grid_size,
            col_dispatch_time => c.columns.dispatch_time,
            col_lat => c.columns.lat,
            col_lon => c.columns.lon,
            col_block_address => c.columns.block_address,
            col_district => c.columns.district,
            col_id => c.columns.id,
        );
        if let Some(DistrictList(v)) = &self.removed_districts {
            c.removed_districts = v.clone();
        }
        c.citywide |= self.citywide;
        c.validate()?;
        Ok(c)
    }
}

/// Parse, run and map the outcome to an exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            if code != EXIT_OK {
                emit_error("usage", &e.kind().to_string(), code);
            }
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = if e.is_usage() { EXIT_USAGE } else { EXIT_DATA };
            emit_error(e.kind(), &e.to_string(), code);
            code
        }
    }
}

fn emit_error(kind: &str, message: &str, code: i32) {
    let line = json!({ "error": kind, "message": message, "exit_code": code });
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn require_input(cfg: &RunConfig) -> Result<&Path> {
    cfg.crime_csv.as_deref().ok_or_else(|| Error::Config("no crime CSV given (--input or crime_csv)".into()))
}

fn load_records(cfg: &RunConfig) -> Result<(Vec<CrimeRecord>, CleanReport)> {
    let table = parse_crime_csv(require_input(cfg)?, &cfg.columns)?;
    let (mut records, rep) = clean(&table, &cfg.removed_set());
    log::info!(
        "{} rows read, {} kept ({} missing location, {} invalid, {} in removed districts)",
        rep.input_rows,
        rep.kept,
        rep.dropped_na_location,
        rep.dropped_invalid_fields,
        rep.dropped_removed_districts
    );
    if let Some(path) = &cfg.district_geojson {
        let layer: DistrictLayer = load_polygon_layer(path, &cfg.district_property)?;
        pipeline::retag_districts(&mut records, &layer);
    }
    Ok((records, rep))
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.overrides.resolve()?;
    let out = cfg.output_dir.clone();
    let years = cfg.years();
    match &cli.command {
        Command::Clean { output } => {
            let table = parse_crime_csv(require_input(&cfg)?, &cfg.columns)?;
            let (records, rep) = clean(&table, &cfg.removed_set());
            let path = output.clone().unwrap_or_else(|| out.join("cleaned.csv"));
            write_file(&path, |w| write_cleaned_csv(&table, &records, &cfg.columns, w))?;
            write_file(&out.join("clean_report.json"), |w| report::write_json(&rep, w))?;
            println!(
                "input {} kept {} dropped: missing location {}, invalid {}, removed districts {}",
                rep.input_rows, rep.kept, rep.dropped_na_location, rep.dropped_invalid_fields, rep.dropped_removed_districts
            );
        }
        Command::Heatmap => {
            let (records, _) = load_records(&cfg)?;
            let shares = pipeline::district_year_percentages(&records, &years)?;
            write_file(&out.join("heatmap.csv"), |w| report::write_heatmap_csv(&shares, w))?;
            let points: Vec<GeoPoint> = records.iter().filter(|r| years.contains(&r.year())).map(|r| r.location).collect();
            let grid = grid_counts(&points, cfg.grid_size)?;
            write_file(&out.join("grid.csv"), |w| report::write_grid_csv(&grid, w))?;
        }
        Command::Cluster => {
            let (records, _) = load_records(&cfg)?;
            let (runs, skips) = pipeline::run_clustering(&records, &years, &cfg.cluster_options(), cfg.citywide);
            write_file(&out.join("labels.csv"), |w| report::write_labels_csv(&runs, w))?;
            write_file(&out.join("eps_log.csv"), |w| report::write_eps_log_csv(&runs, w))?;
            write_file(&out.join("clusters.geojson"), |w| report::write_json(&report::clusters_geojson(&runs), w))?;
            println!("{} partitions clustered, {} skipped", runs.len(), skips.len());
        }
        Command::Hopkins => {
            let (records, _) = load_records(&cfg)?;
            let rows = pipeline::district_hopkins(&records, &years, &cfg.hopkins());
            write_file(&out.join("hopkins.csv"), |w| report::write_hopkins_csv(&rows, w))?;
        }
        Command::Nsi => {
            let (records, _) = load_records(&cfg)?;
            let rep = pipeline::compute_nsi(&records, &years, &cfg.cluster_options(), cfg.threshold)?;
            write_file(&out.join("nsi.csv"), |w| report::write_nsi_csv(&rep, w))?;
            write_file(&out.join("nsi.json"), |w| report::write_json(&rep, w))?;
            for (d, m) in &rep.matrices {
                write_file(&out.join("matrices").join(format!("district_{d}.csv")), |w| report::write_matrix_csv(m, w))?;
            }
            for (rank, r) in rep.ranked.iter().enumerate() {
                println!("{:>3} district {:>3} nsi {:.6} {}", rank + 1, r.district, r.value, r.classification.as_str());
            }
        }
        Command::Redline { district } => {
            let (records, _) = load_records(&cfg)?;
            let holc = cfg.holc_geojson.as_deref().ok_or_else(|| Error::Config("no HOLC layer given (--holc or holc_geojson)".into()))?;
            let layer: HolcLayer = load_polygon_layer(holc, &cfg.holc_grade_property)?;
            let rep = pipeline::redline(&records, *district, &years, &layer, &cfg.cluster_options())?;
            write_file(&out.join(format!("redline_{district}.json")), |w| report::write_json(&rep, w))?;
            write_file(&out.join(format!("redline_{district}.txt")), |w| report::write_redline_text(&rep, w))?;
            print!("{}", rep.render_text());
        }
        Command::Synth(args) => run_synth(args, &cfg)?,
    }
    Ok(())
}

fn run_synth(args: &SynthArgs, cfg: &RunConfig) -> Result<()> {
    let out = &cfg.output_dir;
    let csv_path = args.output.clone().unwrap_or_else(|| out.join("synth.csv"));
    let holc_path = args.holc_output.clone().unwrap_or_else(|| out.join("holc.geojson"));
    let (incidents, layer) = match args.kind {
        SynthKind::City => (synth::city_incidents(cfg.seed)?, None),
        SynthKind::Scenario => {
            let spec = ScenarioSpec {
                mode: match args.mode {
                    ModeArg::Stationary => ScenarioMode::Stationary,
                    ModeArg::Drifting => ScenarioMode::Drifting,
                },
                years: cfg.years().collect(),
                centers: args.centers.0.clone(),
                sigma: args.sigma,
                points_per_cluster: args.points_per_cluster,
                drift_per_year: args.drift,
                background_fraction: args.background_fraction,
                bounds: args.bounds,
                seed: cfg.seed,
            };
            spec.validate(cfg.min_pts)?;
            (synth::incidents_from_scenario(args.district, &synth::gen_scenario(&spec)?), None)
        }
        SynthKind::RedlineBiased | SynthKind::RedlineUniform => {
            let kind = if args.kind == SynthKind::RedlineBiased { RedlineKind::Biased } else { RedlineKind::Uniform };
            let (inc, layer) = synth::redline_fixture(kind, cfg.seed)?;
            (inc, Some(layer))
        }
    };
    write_file(&csv_path, |w| synth::write_crime_csv(&incidents, w))?;
    if let Some(layer) = layer {
        write_file(&holc_path, |w| report::write_json(&layer.to_geojson(&cfg.holc_grade_property), w))?;
    }
    println!("wrote {} incidents to {}", incidents.len(), csv_path.display());
    Ok(())
}
