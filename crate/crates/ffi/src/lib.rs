//! C ABI over `hotspot_core`.
//!
//! Every fallible function returns a [`HotspotStatus`]; on failure a
//! message is kept per thread and can be read with
//! [`hotspot_last_error_message`]. Point sets and HOLC layers are opaque
//! handles owned by the caller and released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hotspot_core::clustering::{dbscan, select_epsilon, Role};
use hotspot_core::nsi::{distance_matrix, nsi, RepresentativeSet};
use hotspot_core::polygon::{assign_grade, load_polygon_layer, HolcLayer};
use hotspot_core::stats::{chi_square, chi_square_sf, ContingencyTable};
use hotspot_core::tendency::{hopkins_mean, HopkinsConfig};
use hotspot_core::{set_distance, DbscanParams, Error, GeoPoint};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HotspotStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    TooFewPoints = 3,
    BufferTooSmall = 4,
    Io = 5,
    Parse = 6,
    NoClusters = 7,
    DegenerateTable = 8,
    Panic = 99,
}

/// Grade code returned by [`hotspot_assign_grade`] for points outside every polygon.
pub const HOTSPOT_UNGRADED: i32 = -1;

/// Cluster label written for noise points.
pub const HOTSPOT_NOISE: i64 = -1;

pub const HOTSPOT_ROLE_CORE: u8 = 0;
pub const HOTSPOT_ROLE_BORDER: u8 = 1;
pub const HOTSPOT_ROLE_NOISE: u8 = 2;

/// Opaque set of (lat, lon) points.
pub struct HotspotPoints {
    points: Vec<GeoPoint>,
}

/// Opaque HOLC polygon layer.
pub struct HotspotHolcLayer {
    layer: HolcLayer,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> HotspotStatus {
    match e {
        Error::Io { .. } => HotspotStatus::Io,
        Error::Csv(_)
        | Error::Json(_)
        | Error::GeoJson(_)
        | Error::MissingColumn { .. }
        | Error::MissingProperty { .. }
        | Error::InvalidGrade { .. }
        | Error::InvalidRing(_) => HotspotStatus::Parse,
        Error::TooFewPoints { .. } | Error::KOutOfRange { .. } | Error::TooFewYears(_) | Error::EmptyInput(_) => {
            HotspotStatus::TooFewPoints
        }
        Error::NoClusters | Error::EmptyCoreSet(_) => HotspotStatus::NoClusters,
        Error::EmptyTable { .. } | Error::ZeroColumnTotal(_) | Error::TableTooSmall { .. } => HotspotStatus::DegenerateTable,
        _ => HotspotStatus::InvalidArgument,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (HotspotStatus, String)>) -> HotspotStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HotspotStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HotspotStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (HotspotStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (HotspotStatus, String) {
    (HotspotStatus::NullPointer, format!("`{name}` is null"))
}

fn invalid(msg: impl Into<String>) -> (HotspotStatus, String) {
    (HotspotStatus::InvalidArgument, msg.into())
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (HotspotStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], (HotspotStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (HotspotStatus, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (HotspotStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("`{name}` is not valid UTF-8")))
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to fit). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hotspot_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Build a point set from parallel latitude and longitude arrays.
///
/// # Safety
/// `lat` and `lon` must each point to `n` readable doubles (or be null when
/// `n` is 0); `out_points` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hotspot_points_new(
    lat: *const f64,
    lon: *const f64,
    n: usize,
    out_points: *mut *mut HotspotPoints,
) -> HotspotStatus {
    guard(|| {
        let o = out(out_points, "out_points")?;
        *o = ptr::null_mut();
        let lat = slice(lat, n, "lat")?;
        let lon = slice(lon, n, "lon")?;
        let points = lat.iter().zip(lon).map(|(&la, &lo)| GeoPoint::checked(la, lo)).collect::<Result<Vec<_>, _>>().map_err(core_err)?;
        *o = Box::into_raw(Box::new(HotspotPoints { points }));
        Ok(())
    })
}

/// # Safety
/// `points` must be null or a handle from [`hotspot_points_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hotspot_points_free(points: *mut HotspotPoints) {
    if !points.is_null() {
        drop(Box::from_raw(points));
    }
}

/// Number of points in the set; 0 for a null handle.
///
/// # Safety
/// `points` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hotspot_points_len(points: *const HotspotPoints) -> usize {
    points.as_ref().map_or(0, |p| p.points.len())
}

/// Radius at the knee of the sorted k-distance curve.
///
/// # Safety
/// `points` must be a live handle and `out_eps` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hotspot_select_epsilon(points: *const HotspotPoints, k: usize, out_eps: *mut f64) -> HotspotStatus {
    guard(|| {
        let p = deref(points, "points")?;
        let o = out(out_eps, "out_eps")?;
        *o = select_epsilon(&p.points, k).map_err(core_err)?;
        Ok(())
    })
}

/// DBSCAN. Writes one cluster label (or `HOTSPOT_NOISE`) and one role code
/// per point; `len` must be at least the number of points. `roles` may be null.
///
/// # Safety
/// `labels` must point to `len` writable `int64_t`, `roles` (if not null) to
/// `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hotspot_dbscan(
    points: *const HotspotPoints,
    eps: f64,
    min_pts: usize,
    labels: *mut i64,
    roles: *mut u8,
    len: usize,
    out_n_clusters: *mut usize,
) -> HotspotStatus {
    guard(|| {
        let p = deref(points, "points")?;
        let n = p.points.len();
        if len < n {
            return Err((HotspotStatus::BufferTooSmall, format!("buffers hold {len} entries, need {n}")));
        }
        if n > 0 && labels.is_null() {
            return Err(null("labels"));
        }
        let params = DbscanParams::new(eps, min_pts).map_err(core_err)?;
        let labeling = dbscan(&p.points, params).map_err(core_err)?;
        for (i, (a, r)) in labeling.assignment().iter().zip(labeling.roles()).enumerate() {
            *labels.add(i) = a.map_or(HOTSPOT_NOISE, |c| c as i64);
            if !roles.is_null() {
                *roles.add(i) = match r {
                    Role::Core => HOTSPOT_ROLE_CORE,
                    Role::Border => HOTSPOT_ROLE_BORDER,
                    Role::Noise => HOTSPOT_ROLE_NOISE,
                };
            }
        }
        if let Some(o) = out_n_clusters.as_mut() {
            *o = labeling.n_clusters();
        }
        Ok(())
    })
}

/// Trial-averaged Hopkins statistic. `sample_size` 0 picks the default.
///
/// # Safety
/// `points` must be a live handle; `out_mean` must be valid; `out_std` may be null.
#[no_mangle]
pub unsafe extern "C" fn hotspot_hopkins(
    points: *const HotspotPoints,
    sample_size: usize,
    trials: usize,
    seed: u64,
    out_mean: *mut f64,
    out_std: *mut f64,
) -> HotspotStatus {
    guard(|| {
        let p = deref(points, "points")?;
        let m = out(out_mean, "out_mean")?;
        let cfg = HopkinsConfig { sample_size: (sample_size > 0).then_some(sample_size), trials, seed, bounds: None };
        let s = hopkins_mean(&p.points, &cfg).map_err(core_err)?;
        *m = s.mean;
        if let Some(o) = out_std.as_mut() {
            *o = s.std;
        }
        Ok(())
    })
}

/// Average-of-minimum-distances between two non-empty point sets, summed
/// over both directions.
///
/// # Safety
/// `a` and `b` must be live handles and `out_distance` valid.
#[no_mangle]
pub unsafe extern "C" fn hotspot_set_distance(a: *const HotspotPoints, b: *const HotspotPoints, out_distance: *mut f64) -> HotspotStatus {
    guard(|| {
        let a = deref(a, "a")?;
        let b = deref(b, "b")?;
        let o = out(out_distance, "out_distance")?;
        *o = set_distance(&a.points, &b.points).map_err(core_err)?;
        Ok(())
    })
}

/// Non-systemic index over yearly representative sets, given in year order.
/// Empty sets are skipped; at least two must be non-empty.
///
/// # Safety
/// `sets` must point to `n_sets` live handles.
#[no_mangle]
pub unsafe extern "C" fn hotspot_nsi(sets: *const *const HotspotPoints, n_sets: usize, out_nsi: *mut f64) -> HotspotStatus {
    guard(|| {
        let handles = slice(sets, n_sets, "sets")?;
        let o = out(out_nsi, "out_nsi")?;
        let reps = handles
            .iter()
            .enumerate()
            .map(|(i, &h)| Ok(RepresentativeSet { year: i as i32, reps: deref(h, "sets[i]")?.points.clone() }))
            .collect::<Result<Vec<_>, _>>()?;
        *o = nsi(&distance_matrix(&reps).map_err(core_err)?);
        Ok(())
    })
}

/// Upper tail of the chi-square distribution. NaN when `df` is 0 or `x` is NaN.
#[no_mangle]
pub extern "C" fn hotspot_chi_square_sf(x: f64, df: u32) -> f64 {
    if df == 0 || x.is_nan() {
        return f64::NAN;
    }
    chi_square_sf(x, df)
}

/// Pearson chi-square test on a row-major `rows x cols` count table.
/// All-zero rows and columns are dropped before computing degrees of freedom.
///
/// # Safety
/// `counts` must point to `rows * cols` readable values; outputs must be valid
/// (`out_df` may be null).
#[no_mangle]
pub unsafe extern "C" fn hotspot_chi_square(
    counts: *const u64,
    rows: usize,
    cols: usize,
    out_statistic: *mut f64,
    out_df: *mut u32,
    out_p_value: *mut f64,
) -> HotspotStatus {
    guard(|| {
        let cells = rows.checked_mul(cols).ok_or_else(|| invalid("table size overflows"))?;
        let counts = slice(counts, cells, "counts")?;
        let s = out(out_statistic, "out_statistic")?;
        let p = out(out_p_value, "out_p_value")?;
        let table = ContingencyTable::new(
            (0..rows).map(|i| format!("row {i}")).collect(),
            (0..cols).map(|j| format!("col {j}")).collect(),
            counts.chunks(cols.max(1)).take(rows).map(<[u64]>::to_vec).collect(),
        )
        .map_err(core_err)?;
        let r = chi_square(&table).map_err(core_err)?;
        *s = r.statistic;
        *p = r.p_value;
        if let Some(d) = out_df.as_mut() {
            *d = r.df;
        }
        Ok(())
    })
}

/// Load a HOLC GeoJSON FeatureCollection; `grade_property` names the
/// feature property holding A, B, C or D.
///
/// # Safety
/// `path` and `grade_property` must be NUL-terminated strings; `out_layer` valid.
#[no_mangle]
pub unsafe extern "C" fn hotspot_holc_layer_load(
    path: *const c_char,
    grade_property: *const c_char,
    out_layer: *mut *mut HotspotHolcLayer,
) -> HotspotStatus {
    guard(|| {
        let o = out(out_layer, "out_layer")?;
        *o = ptr::null_mut();
        let path = c_str(path, "path")?;
        let prop = c_str(grade_property, "grade_property")?;
        let layer = load_polygon_layer(path, prop).map_err(core_err)?;
        *o = Box::into_raw(Box::new(HotspotHolcLayer { layer }));
        Ok(())
    })
}

/// # Safety
/// `layer` must be null or a handle from [`hotspot_holc_layer_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hotspot_holc_layer_free(layer: *mut HotspotHolcLayer) {
    if !layer.is_null() {
        drop(Box::from_raw(layer));
    }
}

/// Grade of the first polygon containing the point: 0..=3 for A..D, or
/// `HOTSPOT_UNGRADED`.
///
/// # Safety
/// `layer` must be a live handle and `out_grade` valid.
#[no_mangle]
pub unsafe extern "C" fn hotspot_assign_grade(layer: *const HotspotHolcLayer, lat: f64, lon: f64, out_grade: *mut i32) -> HotspotStatus {
    guard(|| {
        let l = deref(layer, "layer")?;
        let o = out(out_grade, "out_grade")?;
        let p = GeoPoint::checked(lat, lon).map_err(core_err)?;
        *o = assign_grade(&p, &l.layer).map_or(HOTSPOT_UNGRADED, |g| g.index() as i32);
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hotspot_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
