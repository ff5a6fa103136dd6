//! Phase-profile synthesis for cylindrical metasurfaces.
//!
//! All profiles derive from the surface phase field `Phi(r) = s * (k - k_bar) . r`
//! evaluated at each element's displacement from the reference element. The
//! global sign `s` is [`PHASE_SIGN`]; with reflection coefficients
//! `beta * exp(+j Phi)` it makes every element contribution add in phase at the
//! design angles.
//!
//! `*_raw` functions return unwrapped phases in the geometry's flat element
//! order; the [`PhaseProfile`] wrappers store them wrapped to `[0, 2pi)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{AnglePair, CirsGeometry, Vec3};

/// Global sign applied to the generalized-reflection phase field.
pub const PHASE_SIGN: f64 = 1.0;

/// Arguments this close outside `[-1, 1]` are clamped instead of flagged evanescent.
pub const ARCCOS_CLAMP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("wavelength must be positive, got {0}")]
    InvalidWavelength(f64),
    #[error("design azimuth {0} rad outside [0, pi/2]")]
    DesignAngleOutOfRange(f64),
    #[error("profile has {got} values, geometry needs {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Per-element reflection amplitude and wrapped phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseProfile {
    rows: usize,
    cols: usize,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

pub fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl PhaseProfile {
    /// Unit amplitudes, phases wrapped from `raw`.
    pub fn from_raw(rows: usize, cols: usize, raw: &[f64]) -> Result<Self, PhaseError> {
        if raw.len() != rows * cols {
            return Err(PhaseError::LengthMismatch { expected: rows * cols, got: raw.len() });
        }
        Ok(PhaseProfile {
            rows,
            cols,
            amplitudes: vec![1.0; raw.len()],
            phases: raw.iter().map(|&p| wrap_phase(p)).collect(),
        })
    }

    /// All phases zero: a bare (uncompensated) surface.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        PhaseProfile { rows, cols, amplitudes: vec![1.0; rows * cols], phases: vec![0.0; rows * cols] }
    }

    pub fn with_amplitudes(mut self, amplitudes: Vec<f64>) -> Result<Self, PhaseError> {
        if amplitudes.len() != self.phases.len() {
            return Err(PhaseError::LengthMismatch { expected: self.phases.len(), got: amplitudes.len() });
        }
        self.amplitudes = amplitudes.into_iter().map(|a| a.clamp(0.0, 1.0)).collect();
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn matches(&self, geometry: &CirsGeometry) -> bool {
        self.rows == geometry.rows() && self.cols == geometry.cols()
    }
}

// ============================================================================
// Wavevectors
// ============================================================================

/// A wavevector in rad/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavevector(pub Vec3);

impl Wavevector {
    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }
}

/// Incoming plane wave arriving from direction `angles`: `k = -(2pi/lambda) u(angles)`.
pub fn incident_wavevector(angles: AnglePair, wavelength: f64) -> Wavevector {
    Wavevector(angles.unit_vector() * (-TAU / wavelength))
}

/// Outgoing plane wave leaving toward `angles`: `k_bar = (2pi/lambda) u(angles)`.
pub fn reflected_wavevector(angles: AnglePair, wavelength: f64) -> Wavevector {
    Wavevector(angles.unit_vector() * (TAU / wavelength))
}

/// The phase field `(k_bar - k) . r` at a point, before the global sign.
pub fn generalized_phase_at(point: Vec3, k: Wavevector, k_bar: Wavevector) -> f64 {
    (k_bar.0 - k.0).dot(point)
}

// ============================================================================
// Profile synthesis
// ============================================================================

/// Phase profile families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseKind {
    /// Uncompensated surface.
    Bare,
    /// Reconfigurable profile for arbitrary incidence/reflection directions.
    Optimal { incidence: AnglePair, reflection: AnglePair },
    /// The planar-surface profile on a flat grid with the same spacings.
    Planar { incidence: AnglePair, reflection: AnglePair },
    /// Elevation-plane profile (`theta_i = theta_o = 0`).
    Elevation { phi_i: f64, phi_o: f64 },
    /// Shape-only compensation making the cylinder act as a flat mirror.
    Perpendicular,
    /// Fixed profile tuned for specular reflection at azimuth `theta_bar`.
    Preconfigured { theta_bar: f64 },
    /// Azimuth-plane profile (`phi_i = phi_o = pi/2`).
    Azimuth { theta_i: f64, theta_o: f64 },
}

/// Raw (unwrapped) phases for `kind` on `geometry`.
pub fn raw_phases(geometry: &CirsGeometry, kind: &PhaseKind, wavelength: f64) -> Result<Vec<f64>, PhaseError> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(PhaseError::InvalidWavelength(wavelength));
    }
    Ok(match *kind {
        PhaseKind::Bare => vec![0.0; geometry.len()],
        PhaseKind::Optimal { incidence, reflection } => optimal_phase_raw(geometry, incidence, reflection, wavelength),
        PhaseKind::Planar { incidence, reflection } => planar_phase_raw(
            geometry.rows(),
            geometry.cols(),
            geometry.row_spacing(),
            geometry.col_spacing(),
            incidence,
            reflection,
            wavelength,
        ),
        PhaseKind::Elevation { phi_i, phi_o } => elevation_phase_raw(geometry, phi_i, phi_o, wavelength),
        PhaseKind::Perpendicular => perpendicular_phase_raw(geometry, wavelength),
        PhaseKind::Preconfigured { theta_bar } => {
            check_design_angle(theta_bar)?;
            preconfigured_phase_raw(geometry, theta_bar, wavelength)
        }
        PhaseKind::Azimuth { theta_i, theta_o } => azimuth_phase_raw(geometry, theta_i, theta_o, wavelength),
    })
}

/// Wrapped profile for `kind` on `geometry`.
pub fn synthesize(geometry: &CirsGeometry, kind: &PhaseKind, wavelength: f64) -> Result<PhaseProfile, PhaseError> {
    let raw = raw_phases(geometry, kind, wavelength)?;
    PhaseProfile::from_raw(geometry.rows(), geometry.cols(), &raw)
}

fn check_design_angle(theta_bar: f64) -> Result<(), PhaseError> {
    if (0.0..=PI / 2.0).contains(&theta_bar) {
        Ok(())
    } else {
        Err(PhaseError::DesignAngleOutOfRange(theta_bar))
    }
}

/// Optimal phases with an explicit global sign; `sign = PHASE_SIGN` is the coherent one.
pub fn optimal_phase_raw_signed(
    geometry: &CirsGeometry,
    incidence: AnglePair,
    reflection: AnglePair,
    wavelength: f64,
    sign: f64,
) -> Vec<f64> {
    let c = incidence.unit_vector() + reflection.unit_vector();
    let k0 = TAU / wavelength;
    geometry.elements().iter().map(|e| -sign * k0 * c.dot(e.local)).collect()
}

/// Phase that makes every element add in phase for the given directions:
///
/// ```text
/// Phi_mn = -(2pi/lambda) [x (cos th_o sin ph_o + cos th_i sin ph_i)
///                       + y (sin th_o sin ph_o + sin th_i sin ph_i)
///                       + z (cos ph_o + cos ph_i)]
/// ```
///
/// Angles are in the door frame.
pub fn optimal_phase_raw(
    geometry: &CirsGeometry,
    incidence: AnglePair,
    reflection: AnglePair,
    wavelength: f64,
) -> Vec<f64> {
    optimal_phase_raw_signed(geometry, incidence, reflection, wavelength, PHASE_SIGN)
}

pub fn optimal_phase(
    geometry: &CirsGeometry,
    incidence: AnglePair,
    reflection: AnglePair,
    wavelength: f64,
) -> PhaseProfile {
    let raw = optimal_phase_raw(geometry, incidence, reflection, wavelength);
    PhaseProfile::from_raw(geometry.rows(), geometry.cols(), &raw).expect("sized from geometry")
}

/// Planar-grid phases: element `(m, n)` at `y = n d_n`, `z = m d_m`, `x = 0`.
pub fn planar_phase_raw(
    rows: usize,
    cols: usize,
    d_m: f64,
    d_n: f64,
    incidence: AnglePair,
    reflection: AnglePair,
    wavelength: f64,
) -> Vec<f64> {
    let c = incidence.unit_vector() + reflection.unit_vector();
    let k0 = TAU / wavelength;
    let half = (rows / 2) as i64;
    let mut out = Vec::with_capacity(rows * cols);
    for m in -half..(rows as i64 - half) {
        for n in 0..cols {
            let y = d_n * n as f64;
            let z = d_m * m as f64;
            out.push(-PHASE_SIGN * k0 * (c.y * y + c.z * z));
        }
    }
    out
}

pub fn planar_phase(
    rows: usize,
    cols: usize,
    d_m: f64,
    d_n: f64,
    incidence: AnglePair,
    reflection: AnglePair,
    wavelength: f64,
) -> PhaseProfile {
    let raw = planar_phase_raw(rows, cols, d_m, d_n, incidence, reflection, wavelength);
    PhaseProfile::from_raw(rows, cols, &raw).expect("sized from dimensions")
}

/// Elevation-plane specialization of [`optimal_phase_raw`].
pub fn elevation_phase_raw(geometry: &CirsGeometry, phi_i: f64, phi_o: f64, wavelength: f64) -> Vec<f64> {
    optimal_phase_raw(geometry, AnglePair::new(0.0, phi_i), AnglePair::new(0.0, phi_o), wavelength)
}

pub fn elevation_phase(geometry: &CirsGeometry, phi_i: f64, phi_o: f64, wavelength: f64) -> PhaseProfile {
    let raw = elevation_phase_raw(geometry, phi_i, phi_o, wavelength);
    PhaseProfile::from_raw(geometry.rows(), geometry.cols(), &raw).expect("sized from geometry")
}

/// Row-wise factor `cos(psi_m) - 1` (zero for a flat surface).
fn bend(geometry: &CirsGeometry) -> impl Iterator<Item = f64> + '_ {
    let r = geometry.radius();
    geometry.elements().iter().map(move |e| if r.is_infinite() { 0.0 } else { e.psi.cos() - 1.0 })
}

/// `Phi_m = -(4 pi R / lambda)(cos psi_m - 1)`, constant along each row.
pub fn perpendicular_phase_raw(geometry: &CirsGeometry, wavelength: f64) -> Vec<f64> {
    let scale = -2.0 * TAU * geometry.radius() / wavelength;
    bend(geometry).map(|b| if b == 0.0 { 0.0 } else { scale * b }).collect()
}

pub fn perpendicular_phase(geometry: &CirsGeometry, wavelength: f64) -> PhaseProfile {
    let raw = perpendicular_phase_raw(geometry, wavelength);
    PhaseProfile::from_raw(geometry.rows(), geometry.cols(), &raw).expect("sized from geometry")
}

/// Perpendicular profile scaled by `cos(theta_bar)`.
pub fn preconfigured_phase_raw(geometry: &CirsGeometry, theta_bar: f64, wavelength: f64) -> Vec<f64> {
    let c = theta_bar.cos();
    perpendicular_phase_raw(geometry, wavelength).into_iter().map(|p| p * c).collect()
}

pub fn preconfigured_phase(
    geometry: &CirsGeometry,
    theta_bar: f64,
    wavelength: f64,
) -> Result<PhaseProfile, PhaseError> {
    check_design_angle(theta_bar)?;
    let raw = preconfigured_phase_raw(geometry, theta_bar, wavelength);
    PhaseProfile::from_raw(geometry.rows(), geometry.cols(), &raw)
}

/// `-(4pi/lambda) cos((th_o - th_i)/2) [R (cos psi - 1) cos((th_o + th_i)/2) + y_n sin((th_o + th_i)/2)]`.
pub fn azimuth_phase_raw(geometry: &CirsGeometry, theta_i: f64, theta_o: f64, wavelength: f64) -> Vec<f64> {
    let half_diff = ((theta_o - theta_i) / 2.0).cos();
    let (s, c) = ((theta_o + theta_i) / 2.0).sin_cos();
    let scale = -PHASE_SIGN * 2.0 * TAU / wavelength * half_diff;
    geometry.elements().iter().map(|e| scale * (e.local.x * c + e.local.y * s)).collect()
}

pub fn azimuth_phase(geometry: &CirsGeometry, theta_i: f64, theta_o: f64, wavelength: f64) -> PhaseProfile {
    let raw = azimuth_phase_raw(geometry, theta_i, theta_o, wavelength);
    PhaseProfile::from_raw(geometry.rows(), geometry.cols(), &raw).expect("sized from geometry")
}

// ============================================================================
// Reflected elevation under the perpendicular profile
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReflectedElevation {
    Propagating(f64),
    Evanescent,
}

impl ReflectedElevation {
    pub fn angle(self) -> Option<f64> {
        match self {
            ReflectedElevation::Propagating(a) => Some(a),
            ReflectedElevation::Evanescent => None,
        }
    }
}

fn reflection_argument(phi_i: f64, psi: f64) -> f64 {
    -2.0 * (psi / 2.0).sin() - (phi_i + psi / 2.0).cos()
}

/// Whether the reflected wave at row angle `psi` is evanescent for incidence elevation `phi_i`.
pub fn is_evanescent(phi_i: f64, psi: f64) -> bool {
    reflection_argument(phi_i, psi).abs() > 1.0 + ARCCOS_CLAMP
}

/// Reflected elevation `phi_o = acos(-2 sin(psi/2) - cos(phi_i + psi/2)) - psi/2`
/// for an element at row angle `psi` carrying the perpendicular profile.
pub fn reflected_elevation(phi_i: f64, psi: f64) -> ReflectedElevation {
    if is_evanescent(phi_i, psi) {
        return ReflectedElevation::Evanescent;
    }
    let a = reflection_argument(phi_i, psi).clamp(-1.0, 1.0);
    ReflectedElevation::Propagating(a.acos() - psi / 2.0)
}

// ============================================================================
// Generalized Snell law check
// ============================================================================

/// Unit normal of the surface `y = f(x, z)` given its partial derivatives.
pub fn surface_normal(df_dx: f64, df_dz: f64) -> Vec3 {
    Vec3::new(-df_dx, 1.0, -df_dz).normalized()
}

/// Tangential gradient of a surface phase from its derivatives along the
/// parameter lines of `y = f(x, z)`.
///
/// `dphi_dx`, `dphi_dz` are derivatives of `Phi(x, f(x, z), z)`; the result is
/// the unique vector in the tangent plane reproducing both.
pub fn surface_phase_gradient(df_dx: f64, df_dz: f64, dphi_dx: f64, dphi_dz: f64) -> Vec3 {
    let tx = Vec3::new(1.0, df_dx, 0.0);
    let tz = Vec3::new(0.0, df_dz, 1.0);
    let (a, b, c) = (tx.dot(tx), tx.dot(tz), tz.dot(tz));
    let det = a * c - b * b;
    let alpha = (c * dphi_dx - b * dphi_dz) / det;
    let beta = (a * dphi_dz - b * dphi_dx) / det;
    tx * alpha + tz * beta
}

/// Magnitude of the tangential part of `k_bar - k - grad_phi` on the surface
/// `y = f(x, z)`; zero when the generalized reflection law holds.
pub fn snell_residual(df_dx: f64, df_dz: f64, grad_phi: Vec3, k: Wavevector, k_bar: Wavevector) -> f64 {
    let u = surface_normal(df_dx, df_dz);
    let v = k_bar.0 - k.0 - grad_phi;
    (v - u * v.dot(u)).norm()
}
