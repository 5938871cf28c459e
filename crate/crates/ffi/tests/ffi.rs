use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use hotspot_ffi::*;

unsafe fn points(lat: &[f64], lon: &[f64]) -> *mut HotspotPoints {
    let mut h = ptr::null_mut();
    assert_eq!(hotspot_points_new(lat.as_ptr(), lon.as_ptr(), lat.len(), &mut h), HotspotStatus::Ok);
    h
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 512];
    unsafe {
        hotspot_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn dbscan_two_squares() {
    unsafe {
        let lat = [0.0, 0.0, 0.001, 0.001, 1.0, 1.0, 1.001, 1.001, 5.0];
        let lon = [0.0, 0.001, 0.0, 0.001, 1.0, 1.001, 1.0, 1.001, 5.0];
        let h = points(&lat, &lon);
        assert_eq!(hotspot_points_len(h), 9);
        let mut labels = [0i64; 9];
        let mut roles = [0u8; 9];
        let mut k = 0usize;
        assert_eq!(hotspot_dbscan(h, 0.01, 4, labels.as_mut_ptr(), roles.as_mut_ptr(), 9, &mut k), HotspotStatus::Ok);
        assert_eq!(k, 2);
        assert_eq!(labels, [0, 0, 0, 0, 1, 1, 1, 1, HOTSPOT_NOISE]);
        assert_eq!(roles[8], HOTSPOT_ROLE_NOISE);
        assert_eq!(roles[0], HOTSPOT_ROLE_CORE);

        assert_eq!(hotspot_dbscan(h, 0.01, 4, labels.as_mut_ptr(), ptr::null_mut(), 3, ptr::null_mut()), HotspotStatus::BufferTooSmall);
        assert!(last_error().contains("need 9"));
        assert_eq!(hotspot_dbscan(h, -1.0, 4, labels.as_mut_ptr(), ptr::null_mut(), 9, ptr::null_mut()), HotspotStatus::InvalidArgument);
        hotspot_points_free(h);
    }
}

#[test]
fn null_handles_are_reported() {
    unsafe {
        let mut eps = 0.0;
        assert_eq!(hotspot_select_epsilon(ptr::null(), 4, &mut eps), HotspotStatus::NullPointer);
        assert!(last_error().contains("points"));
        let mut h = ptr::null_mut();
        assert_eq!(hotspot_points_new(ptr::null(), ptr::null(), 3, &mut h), HotspotStatus::NullPointer);
        assert!(h.is_null());
        assert_eq!(hotspot_points_new(ptr::null(), ptr::null(), 0, ptr::null_mut()), HotspotStatus::NullPointer);
        hotspot_points_free(ptr::null_mut());
        assert_eq!(hotspot_points_len(ptr::null()), 0);
    }
}

#[test]
fn non_finite_coordinates_rejected() {
    unsafe {
        let mut h = ptr::null_mut();
        let lat = [f64::NAN];
        let lon = [0.0];
        assert_eq!(hotspot_points_new(lat.as_ptr(), lon.as_ptr(), 1, &mut h), HotspotStatus::InvalidArgument);
        assert!(h.is_null());
    }
}

#[test]
fn epsilon_and_hopkins() {
    unsafe {
        let n = 200;
        let lat: Vec<f64> = (0..n).map(|i| (i % 20) as f64 * 0.01).collect();
        let lon: Vec<f64> = (0..n).map(|i| (i / 20) as f64 * 0.01).collect();
        let h = points(&lat, &lon);
        let mut eps = 0.0;
        assert_eq!(hotspot_select_epsilon(h, 4, &mut eps), HotspotStatus::Ok);
        assert!(eps > 0.0);
        assert_eq!(hotspot_select_epsilon(h, 500, &mut eps), HotspotStatus::TooFewPoints);

        let (mut m1, mut s1, mut m2) = (0.0, 0.0, 0.0);
        assert_eq!(hotspot_hopkins(h, 0, 10, 7, &mut m1, &mut s1), HotspotStatus::Ok);
        assert_eq!(hotspot_hopkins(h, 0, 10, 7, &mut m2, ptr::null_mut()), HotspotStatus::Ok);
        assert_eq!(m1, m2);
        assert!((0.0..=1.0).contains(&m1) && s1 >= 0.0);
        assert_eq!(hotspot_hopkins(h, 0, 0, 7, &mut m1, ptr::null_mut()), HotspotStatus::InvalidArgument);
        hotspot_points_free(h);
    }
}

#[test]
fn set_distance_and_nsi() {
    unsafe {
        let a = points(&[0.0], &[0.0]);
        let b = points(&[3.0], &[4.0]);
        let empty = points(&[], &[]);
        let mut d = 0.0;
        assert_eq!(hotspot_set_distance(a, b, &mut d), HotspotStatus::Ok);
        assert_eq!(d, 10.0);
        assert_eq!(hotspot_set_distance(a, empty, &mut d), HotspotStatus::TooFewPoints);

        let c = points(&[0.0], &[1.0]);
        let sets = [a as *const HotspotPoints, empty, c];
        let mut v = 0.0;
        assert_eq!(hotspot_nsi(sets.as_ptr(), 3, &mut v), HotspotStatus::Ok);
        assert!((v - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(hotspot_nsi(sets.as_ptr(), 2, &mut v), HotspotStatus::TooFewPoints);
        for h in [a, b, c, empty] {
            hotspot_points_free(h);
        }
    }
}

#[test]
fn chi_square_entry_points() {
    assert!((hotspot_chi_square_sf(59.0, 2) - (-29.5f64).exp()).abs() < 1e-25);
    assert!(hotspot_chi_square_sf(1.0, 0).is_nan());
    assert_eq!(hotspot_chi_square_sf(0.0, 3), 1.0);
    unsafe {
        let counts = [10u64, 20, 20, 10];
        let (mut s, mut df, mut p) = (0.0, 0u32, 0.0);
        assert_eq!(hotspot_chi_square(counts.as_ptr(), 2, 2, &mut s, &mut df, &mut p), HotspotStatus::Ok);
        assert_eq!(df, 1);
        assert!((s - 20.0 / 3.0).abs() < 1e-12);
        assert!((p - 0.009823274507519246).abs() < 1e-12);

        // A zero row is pruned, leaving 3x2.
        let counts = [0u64, 0, 5, 9, 7, 2, 4, 4];
        assert_eq!(hotspot_chi_square(counts.as_ptr(), 4, 2, &mut s, &mut df, &mut p), HotspotStatus::Ok);
        assert_eq!(df, 2);

        let counts = [3u64, 4];
        assert_eq!(hotspot_chi_square(counts.as_ptr(), 1, 2, &mut s, &mut df, &mut p), HotspotStatus::DegenerateTable);
    }
}

#[test]
fn holc_layer_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("holc.geojson");
    std::fs::write(
        &path,
        r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"holc_grade":"D"},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}]}"#,
    )
    .unwrap();
    unsafe {
        let p = CString::new(path.to_str().unwrap()).unwrap();
        let prop = CString::new("holc_grade").unwrap();
        let mut layer = ptr::null_mut();
        assert_eq!(hotspot_holc_layer_load(p.as_ptr(), prop.as_ptr(), &mut layer), HotspotStatus::Ok);
        let mut g = 0;
        assert_eq!(hotspot_assign_grade(layer, 0.5, 0.5, &mut g), HotspotStatus::Ok);
        assert_eq!(g, 3);
        assert_eq!(hotspot_assign_grade(layer, 2.0, 0.5, &mut g), HotspotStatus::Ok);
        assert_eq!(g, HOTSPOT_UNGRADED);
        hotspot_holc_layer_free(layer);

        let missing = CString::new(dir.path().join("nope.geojson").to_str().unwrap()).unwrap();
        assert_eq!(hotspot_holc_layer_load(missing.as_ptr(), prop.as_ptr(), &mut layer), HotspotStatus::Io);
        assert!(layer.is_null());
        let wrong = CString::new("grade").unwrap();
        assert_eq!(hotspot_holc_layer_load(p.as_ptr(), wrong.as_ptr(), &mut layer), HotspotStatus::Parse);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(hotspot_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn error_message_truncates() {
    unsafe {
        let mut eps = 0.0;
        hotspot_select_epsilon(ptr::null(), 4, &mut eps);
        let full = hotspot_last_error_message(ptr::null_mut(), 0);
        let mut buf = [1 as c_char; 4];
        assert_eq!(hotspot_last_error_message(buf.as_mut_ptr(), 4), full);
        assert_eq!(buf[3], 0);
    }
}

/// Compile the C smoke program against the generated header and static library.
#[test]
fn c_smoke_program() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = target_dir.join("libhotspot_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("hotspot_smoke");
    let status = Command::new("cc")
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler `cc` not available");
    assert!(status.success(), "compiling smoke.c failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke program failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
