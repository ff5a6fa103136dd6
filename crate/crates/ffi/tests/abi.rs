//! Exercises the C ABI through the Rust rlib.

use std::ffi::CStr;
use std::ptr;

use conformal_ris_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    let n = unsafe { cris_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn geometry(rows: usize, cols: usize, radius: f64) -> *mut CrisGeometry {
    let d = cris_wavelength(28.0) / 4.0;
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { cris_geometry_new(rows, cols, radius, d, d, &mut g) }, CrisStatus::Ok);
    g
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(cris_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn geometry_round_trip() {
    let g = geometry(4, 3, 2.0);
    assert_eq!(unsafe { cris_geometry_len(g) }, 12);
    let mut area = 0.0;
    assert_eq!(unsafe { cris_geometry_surface_area(g, &mut area) }, CrisStatus::Ok);
    let d = cris_wavelength(28.0) / 4.0;
    assert!((area - 12.0 * d * d).abs() < 1e-9);

    let mut xyz = vec![0.0; 36];
    assert_eq!(unsafe { cris_geometry_positions(g, xyz.as_mut_ptr(), xyz.len()) }, CrisStatus::Ok);
    // reference element m = 0, n = 0 sits at the origin
    let l = 2 * 3;
    assert_eq!(&xyz[3 * l..3 * l + 3], &[0.0, 0.0, 0.0]);

    assert_eq!(unsafe { cris_geometry_positions(g, xyz.as_mut_ptr(), 10) }, CrisStatus::BufferTooSmall);
    assert!(last_error().contains("needed"));
    unsafe { cris_geometry_free(g) };
}

#[test]
fn invalid_geometry_reports_error() {
    let mut g = ptr::null_mut();
    let s = unsafe { cris_geometry_new(3, 2, 2.0, 0.001, 0.001, &mut g) };
    assert_eq!(s, CrisStatus::Geometry);
    assert!(g.is_null());
    assert!(last_error().contains("even"));
    let s = unsafe { cris_geometry_new(4, 2, 2.0, 0.001, 0.001, ptr::null_mut()) };
    assert_eq!(s, CrisStatus::NullPointer);
}

#[test]
fn perpendicular_profile_restores_broadside_gain() {
    let g = geometry(20, 8, 2.0);
    let lambda = cris_wavelength(28.0);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { cris_phase_perpendicular(g, lambda, &mut p) }, CrisStatus::Ok);
    let mut db = 0.0;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let s = unsafe { cris_normalized_gain_db(g, p, 0.0, half_pi, 0.0, half_pi, lambda, 0.0, &mut db) };
    assert_eq!(s, CrisStatus::Ok);
    assert!((db - 10.0 * 160f64.log10()).abs() < 1e-9, "{db}");

    let mut phases = vec![0.0; 160];
    assert_eq!(unsafe { cris_phase_values(p, phases.as_mut_ptr(), phases.len()) }, CrisStatus::Ok);
    assert!(phases.iter().all(|v| (0.0..std::f64::consts::TAU).contains(v)));
    unsafe {
        cris_phase_free(p);
        cris_geometry_free(g);
    }
}

#[test]
fn design_angle_is_validated() {
    let g = geometry(4, 2, 2.0);
    let mut p = ptr::null_mut();
    let s = unsafe { cris_phase_preconfigured(g, 2.0, cris_wavelength(28.0), &mut p) };
    assert_eq!(s, CrisStatus::Phase);
    assert!(p.is_null());
    unsafe { cris_geometry_free(g) };
}

#[test]
fn pathloss_and_blockage() {
    let expected = 32.4 + 20.0 * 50f64.log10() + 20.0 * 28f64.log10();
    assert!((cris_los_pathloss_db(50.0, 28.0) - expected).abs() < 1e-12);
    let (mut direct, mut ris) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            cris_blockage_probability(30.0, 100.0, 200, 1, CrisBlockageMode::Direct, &mut direct),
            CrisStatus::Ok
        );
        assert_eq!(cris_blockage_probability(30.0, 100.0, 200, 1, CrisBlockageMode::WithRis, &mut ris), CrisStatus::Ok);
    }
    assert!((0.0..=1.0).contains(&direct) && ris <= direct);
    let s = unsafe { cris_blockage_probability(-1.0, 100.0, 10, 1, CrisBlockageMode::Direct, &mut direct) };
    assert_eq!(s, CrisStatus::Simulation);
}
