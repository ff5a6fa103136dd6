//! C ABI for the conformal metasurface simulator.
//!
//! Objects are opaque handles created by `cris_*_new` style calls and released
//! with the matching `*_free`. Every fallible call returns a [`CrisStatus`];
//! on failure the message is available from [`cris_last_error_message`] on the
//! same thread. Angles are radians, lengths meters, frequencies GHz.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use conformal_ris::channel::{gain_to_db, los_pathloss_db, normalized_gain, ChannelError};
use conformal_ris::config::SimConfig;
use conformal_ris::experiments::{blockage_counts, ExperimentError};
use conformal_ris::geometry::{AnglePair, CirsGeometry as Geometry, GeometryError, Pose};
use conformal_ris::phase::{synthesize, PhaseError, PhaseKind, PhaseProfile};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Geometry = 4,
    Phase = 5,
    Channel = 6,
    Simulation = 7,
    Panic = 8,
}

/// Relay mode for [`cris_blockage_probability`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrisBlockageMode {
    Direct = 0,
    WithIrs = 1,
    WithRis = 2,
}

/// Opaque cylindrical metasurface layout.
pub struct CrisGeometry(Geometry);

/// Opaque per-element phase profile.
pub struct CrisPhaseProfile(PhaseProfile);

// ============================================================================
// Errors
// ============================================================================

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl ToString) {
    let c = CString::new(msg.to_string().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CrisStatus, msg: impl ToString) -> CrisStatus {
    set_error(msg);
    status
}

impl From<GeometryError> for CrisStatus {
    fn from(e: GeometryError) -> Self {
        fail(CrisStatus::Geometry, e)
    }
}

impl From<PhaseError> for CrisStatus {
    fn from(e: PhaseError) -> Self {
        fail(CrisStatus::Phase, e)
    }
}

impl From<ChannelError> for CrisStatus {
    fn from(e: ChannelError) -> Self {
        fail(CrisStatus::Channel, e)
    }
}

impl From<ExperimentError> for CrisStatus {
    fn from(e: ExperimentError) -> Self {
        fail(CrisStatus::Simulation, e)
    }
}

/// Runs `f`, converting panics into [`CrisStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), CrisStatus>) -> CrisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CrisStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(CrisStatus::Panic, "internal panic"),
    }
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, CrisStatus> {
    // SAFETY: callers pass handles obtained from this library; null is rejected.
    unsafe { p.as_ref() }.ok_or_else(|| fail(CrisStatus::NullPointer, format!("{what} is null")))
}

fn out_slot<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, CrisStatus> {
    // SAFETY: as above, for caller-owned output locations.
    unsafe { p.as_mut() }.ok_or_else(|| fail(CrisStatus::NullPointer, format!("{what} is null")))
}

fn out_buffer<'a>(p: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], CrisStatus> {
    if p.is_null() {
        return Err(fail(CrisStatus::NullPointer, "output buffer is null"));
    }
    if len < needed {
        return Err(fail(CrisStatus::BufferTooSmall, format!("buffer holds {len} values, {needed} needed")));
    }
    // SAFETY: caller guarantees `p` points to at least `len` writable doubles.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, needed) })
}

/// Copies the last error message of this thread into `buf` (nul-terminated,
/// truncated to `len`). Returns the full message length without the nul,
/// or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cris_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: `buf` has room for `len` bytes and `n < len`.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn cris_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ============================================================================
// Geometry
// ============================================================================

/// Free-space wavelength in meters.
#[no_mangle]
pub extern "C" fn cris_wavelength(frequency_ghz: f64) -> f64 {
    conformal_ris::wavelength(frequency_ghz)
}

/// Builds an `rows x cols` cylindrical layout of radius `radius` (use
/// `INFINITY` for a flat surface) in its own door frame.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn cris_geometry_new(
    rows: usize,
    cols: usize,
    radius: f64,
    d_m: f64,
    d_n: f64,
    out: *mut *mut CrisGeometry,
) -> CrisStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let g = Geometry::new(rows, cols, radius, d_m, d_n, Pose::IDENTITY)?;
        *slot = Box::into_raw(Box::new(CrisGeometry(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle from [`cris_geometry_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cris_geometry_free(g: *mut CrisGeometry) {
    if !g.is_null() {
        // SAFETY: the handle was created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(g) });
    }
}

/// Number of elements, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live geometry handle.
#[no_mangle]
pub unsafe extern "C" fn cris_geometry_len(g: *const CrisGeometry) -> usize {
    unsafe { g.as_ref() }.map_or(0, |g| g.0.len())
}

/// Surface area in square meters.
///
/// # Safety
/// `g` must be a live geometry handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cris_geometry_surface_area(g: *const CrisGeometry, out: *mut f64) -> CrisStatus {
    guard(|| {
        let g = non_null(g, "geometry")?;
        *out_slot(out, "out")? = g.0.surface_area();
        Ok(())
    })
}

/// Writes element positions as `x, y, z` triples in flat-index order.
/// `len` is the buffer length in doubles and must be at least `3 * len(g)`.
///
/// # Safety
/// `g` must be a live geometry handle; `xyz` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cris_geometry_positions(g: *const CrisGeometry, xyz: *mut f64, len: usize) -> CrisStatus {
    guard(|| {
        let g = non_null(g, "geometry")?;
        let buf = out_buffer(xyz, len, 3 * g.0.len())?;
        for (chunk, e) in buf.chunks_exact_mut(3).zip(g.0.elements()) {
            chunk.copy_from_slice(&[e.position.x, e.position.y, e.position.z]);
        }
        Ok(())
    })
}

// ============================================================================
// Phase profiles
// ============================================================================

fn make_profile(
    g: *const CrisGeometry,
    kind: PhaseKind,
    wavelength: f64,
    out: *mut *mut CrisPhaseProfile,
) -> CrisStatus {
    guard(|| {
        let g = non_null(g, "geometry")?;
        let slot = out_slot(out, "out")?;
        let p = synthesize(&g.0, &kind, wavelength)?;
        *slot = Box::into_raw(Box::new(CrisPhaseProfile(p)));
        Ok(())
    })
}

/// Reconfigurable profile steering `(theta_i, phi_i)` to `(theta_o, phi_o)`,
/// both directions pointing away from the surface in the door frame.
///
/// # Safety
/// `g` must be a live geometry handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cris_phase_optimal(
    g: *const CrisGeometry,
    theta_i: f64,
    phi_i: f64,
    theta_o: f64,
    phi_o: f64,
    wavelength: f64,
    out: *mut *mut CrisPhaseProfile,
) -> CrisStatus {
    let kind =
        PhaseKind::Optimal { incidence: AnglePair::new(theta_i, phi_i), reflection: AnglePair::new(theta_o, phi_o) };
    make_profile(g, kind, wavelength, out)
}

/// Shape compensation that makes the cylinder behave as a flat mirror.
///
/// # Safety
/// As for [`cris_phase_optimal`].
#[no_mangle]
pub unsafe extern "C" fn cris_phase_perpendicular(
    g: *const CrisGeometry,
    wavelength: f64,
    out: *mut *mut CrisPhaseProfile,
) -> CrisStatus {
    make_profile(g, PhaseKind::Perpendicular, wavelength, out)
}

/// Fixed profile for specular reflection at design azimuth `theta_bar` in `[0, pi/2]`.
///
/// # Safety
/// As for [`cris_phase_optimal`].
#[no_mangle]
pub unsafe extern "C" fn cris_phase_preconfigured(
    g: *const CrisGeometry,
    theta_bar: f64,
    wavelength: f64,
    out: *mut *mut CrisPhaseProfile,
) -> CrisStatus {
    make_profile(g, PhaseKind::Preconfigured { theta_bar }, wavelength, out)
}

/// # Safety
/// `p` must be null or a live profile handle.
#[no_mangle]
pub unsafe extern "C" fn cris_phase_free(p: *mut CrisPhaseProfile) {
    if !p.is_null() {
        // SAFETY: the handle was created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Copies the wrapped phases (radians in `[0, 2pi)`) into `phases`.
///
/// # Safety
/// `p` must be a live profile handle; `phases` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cris_phase_values(p: *const CrisPhaseProfile, phases: *mut f64, len: usize) -> CrisStatus {
    guard(|| {
        let p = non_null(p, "profile")?;
        out_buffer(phases, len, p.0.len())?.copy_from_slice(p.0.phases());
        Ok(())
    })
}

// ============================================================================
// Figures of merit
// ============================================================================

/// Normalized far-field gain in dB; a fully coherent surface with an isotropic
/// pattern (`q = 0`) scores `10 log10(M N)`.
///
/// # Safety
/// `g` and `p` must be live handles; `out_db` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cris_normalized_gain_db(
    g: *const CrisGeometry,
    p: *const CrisPhaseProfile,
    theta_i: f64,
    phi_i: f64,
    theta_o: f64,
    phi_o: f64,
    wavelength: f64,
    q: f64,
    out_db: *mut f64,
) -> CrisStatus {
    guard(|| {
        let (g, p) = (non_null(g, "geometry")?, non_null(p, "profile")?);
        let out = out_slot(out_db, "out_db")?;
        if !(wavelength > 0.0 && wavelength.is_finite() && q >= 0.0) {
            return Err(fail(CrisStatus::InvalidArgument, "wavelength must be positive and q non-negative"));
        }
        let gain =
            normalized_gain(&g.0, &p.0, AnglePair::new(theta_i, phi_i), AnglePair::new(theta_o, phi_o), wavelength, q)?;
        *out = gain_to_db(gain);
        Ok(())
    })
}

/// Mean line-of-sight path loss in dB.
#[no_mangle]
pub extern "C" fn cris_los_pathloss_db(distance_m: f64, frequency_ghz: f64) -> f64 {
    los_pathloss_db(distance_m, frequency_ghz)
}

/// Monte-Carlo blockage probability on the default highway for `trials`
/// scenes with traffic density `rho` (cars/km/lane) and TxV-RxV distance `r_d`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cris_blockage_probability(
    rho: f64,
    r_d: f64,
    trials: u64,
    seed: u64,
    mode: CrisBlockageMode,
    out: *mut f64,
) -> CrisStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        if trials == 0 {
            return Err(fail(CrisStatus::InvalidArgument, "trials must be positive"));
        }
        let cfg = SimConfig { trials, seed, ..SimConfig::default() };
        let counts = blockage_counts(&cfg.blockage_spec(), rho, r_d)?;
        *out = counts[mode as usize] as f64 / trials as f64;
        Ok(())
    })
}
