//! Direct and cascaded channels, path loss and normalized metasurface gains.
//!
//! Antenna arrays are half-wavelength ULAs lying along the global `x` axis
//! (broadside `+-y`, the travel direction). Steering angles are plan-view
//! azimuths measured from `+x`, so a target straight ahead sits at
//! `theta = pi/2` and needs no phase progression.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{AnglePair, CirsGeometry, Vec3};
use crate::phase::PhaseProfile;
use crate::units::db_to_amplitude;

/// Element-antenna distances below this many wavelengths are outside the model.
pub const MIN_DISTANCE_WAVELENGTHS: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
    #[error("distance {distance:.4} m below the {min:.4} m validity guard")]
    TooClose { distance: f64, min: f64 },
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

// ============================================================================
// Dense complex matrices
// ============================================================================

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// `a b^H` for column vectors `a` and `b`.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Self {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        ComplexMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn add(&self, o: &ComplexMatrix) -> Result<Self, ChannelError> {
        if self.shape() != o.shape() {
            return Err(shape_error(self.shape(), o.shape()));
        }
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect();
        Ok(ComplexMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn matmul(&self, o: &ComplexMatrix) -> Result<Self, ChannelError> {
        if self.cols != o.rows {
            return Err(shape_error((self.cols, o.cols), (o.rows, o.cols)));
        }
        let mut out = Self::zeros(self.rows, o.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (dst, b) in out.data[r * o.cols..(r + 1) * o.cols].iter_mut().zip(o.row(k)) {
                    *dst += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>, ChannelError> {
        if v.len() != self.cols {
            return Err(shape_error((self.cols, 1), (v.len(), 1)));
        }
        Ok((0..self.rows).map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    /// `w^H A f`.
    pub fn bilinear(&self, w: &[Complex64], f: &[Complex64]) -> Result<Complex64, ChannelError> {
        if w.len() != self.rows {
            return Err(shape_error((self.rows, 1), (w.len(), 1)));
        }
        let af = self.mul_vec(f)?;
        Ok(w.iter().zip(&af).map(|(a, b)| a.conj() * b).sum())
    }
}

fn shape_error(expected: (usize, usize), got: (usize, usize)) -> ChannelError {
    ChannelError::DimensionMismatch {
        expected: format!("{}x{}", expected.0, expected.1),
        got: format!("{}x{}", got.0, got.1),
    }
}

/// Diagonal reflection matrix `diag(beta_l exp(+j Phi_l))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionMatrix {
    diag: Vec<Complex64>,
}

impl ReflectionMatrix {
    pub fn from_profile(profile: &PhaseProfile, geometry: &CirsGeometry) -> Result<Self, ChannelError> {
        if !profile.matches(geometry) {
            return Err(shape_error((geometry.rows(), geometry.cols()), (profile.rows(), profile.cols())));
        }
        Ok(Self::from_parts(profile.amplitudes(), profile.phases()))
    }

    pub fn from_parts(amplitudes: &[f64], phases: &[f64]) -> Self {
        let diag = amplitudes.iter().zip(phases).map(|(&b, &p)| Complex64::from_polar(b, p)).collect();
        ReflectionMatrix { diag }
    }

    pub fn identity(n: usize) -> Self {
        ReflectionMatrix { diag: vec![Complex64::new(1.0, 0.0); n] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diagonal(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn compose(&self, o: &ReflectionMatrix) -> Result<Self, ChannelError> {
        if self.len() != o.len() {
            return Err(shape_error((self.len(), self.len()), (o.len(), o.len())));
        }
        Ok(ReflectionMatrix { diag: self.diag.iter().zip(&o.diag).map(|(a, b)| a * b).collect() })
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let n = self.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, &d) in self.diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }
}

// ============================================================================
// Arrays and patterns
// ============================================================================

/// Unit-norm ULA response `a_k = exp(-j pi (k-1) cos(theta)) / sqrt(K)`.
pub fn array_response(k: usize, theta: f64) -> Vec<Complex64> {
    let s = 1.0 / (k as f64).sqrt();
    steering_vector(k, theta).into_iter().map(|z| z * s).collect()
}

/// Unnormalized beam `exp(-j pi (k-1) cos(theta))` with unit-modulus entries.
pub fn steering_vector(k: usize, theta: f64) -> Vec<Complex64> {
    let c = theta.cos();
    (0..k).map(|i| Complex64::from_polar(1.0, -PI * i as f64 * c)).collect()
}

/// Positions of a `K`-element half-wavelength ULA centered on `center`, along `x`.
pub fn antenna_positions(center: Vec3, k: usize, wavelength: f64) -> Vec<Vec3> {
    let half = (k as f64 - 1.0) / 2.0;
    (0..k).map(|i| center + Vec3::new((i as f64 - half) * wavelength / 2.0, 0.0, 0.0)).collect()
}

/// Peak of the element pattern, `sqrt(2(2q+1))`.
pub fn pattern_peak(q: f64) -> f64 {
    (2.0 * (2.0 * q + 1.0)).sqrt()
}

/// Pattern from the cosine between a direction and the boresight; zero behind.
pub fn pattern_from_cos(c: f64, q: f64) -> f64 {
    if c <= 0.0 {
        0.0
    } else {
        pattern_peak(q) * c.min(1.0).powf(q)
    }
}

/// `rho = sqrt(2(2q+1)) cos^q(pi/2 - asin(cos(theta) sin(phi)))` in local angles.
pub fn element_pattern(local: AnglePair, q: f64) -> f64 {
    // cos(pi/2 - asin(c)) = c
    pattern_from_cos(local.theta.cos() * local.phi.sin(), q)
}

/// Endpoint antenna pattern toward `dir`, with boresight along the travel axis.
pub fn antenna_pattern(dir: Vec3, q: f64) -> f64 {
    pattern_from_cos(dir.normalized().y.abs(), q)
}

/// Plan-view azimuth of `to - from`, measured from `+x`.
pub fn plan_azimuth(from: Vec3, to: Vec3) -> f64 {
    (to.y - from.y).atan2(to.x - from.x)
}

// ============================================================================
// Path loss
// ============================================================================

/// Line-of-sight mean loss `32.4 + 20 log10(r) + 20 log10(f_GHz)` in dB.
pub fn los_pathloss_db(distance: f64, frequency_ghz: f64) -> f64 {
    32.4 + 20.0 * distance.log10() + 20.0 * frequency_ghz.log10()
}

/// Shadowing and blocker statistics, all in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub shadowing_sigma: f64,
    /// Mean attenuation of a single blocker.
    pub blockage_first: f64,
    /// Extra mean attenuation per additional blocker.
    pub blockage_step: f64,
    pub blockage_sigma: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        PathLossModel { shadowing_sigma: 3.0, blockage_first: 15.0, blockage_step: 6.0, blockage_sigma: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossSample {
    pub loss_db: f64,
    pub blockers: u32,
    pub shadowing_db: f64,
    pub blockage_db: f64,
}

impl PathLossModel {
    /// `mu_b(b) = mu_1 + delta (b - 1)` for `b >= 1`, zero otherwise.
    pub fn blockage_mean(&self, blockers: u32) -> f64 {
        if blockers == 0 {
            0.0
        } else {
            self.blockage_first + self.blockage_step * (blockers - 1) as f64
        }
    }

    /// Mean and standard deviation of the total loss.
    pub fn moments(&self, distance: f64, frequency_ghz: f64, blockers: u32) -> (f64, f64) {
        let mean = los_pathloss_db(distance, frequency_ghz) + self.blockage_mean(blockers);
        let var = if blockers == 0 {
            self.shadowing_sigma.powi(2)
        } else {
            self.shadowing_sigma.powi(2) + self.blockage_sigma.powi(2)
        };
        (mean, var.sqrt())
    }

    /// Draw one loss. Always consumes two normal variates so callers see a
    /// fixed stream layout regardless of `blockers`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        distance: f64,
        frequency_ghz: f64,
        blockers: u32,
        rng: &mut R,
    ) -> PathLossSample {
        let z_sh: f64 = StandardNormal.sample(rng);
        let z_b: f64 = StandardNormal.sample(rng);
        let shadowing_db = self.shadowing_sigma * z_sh;
        let blockage_db = if blockers == 0 { 0.0 } else { self.blockage_mean(blockers) + self.blockage_sigma * z_b };
        PathLossSample {
            loss_db: los_pathloss_db(distance, frequency_ghz) + blockage_db + shadowing_db,
            blockers,
            shadowing_db,
            blockage_db,
        }
    }
}

// ============================================================================
// Direct channel
// ============================================================================

/// `H_d = alpha rho_r rho_t a_r(theta) a_t(theta)^H` for the line of sight
/// `p_t -> p_r`, with `|alpha| = 10^(-PL/20)` and a uniform random phase.
pub fn direct_channel<R: Rng + ?Sized>(
    p_t: Vec3,
    p_r: Vec3,
    k: usize,
    pathloss_db: f64,
    q: f64,
    rng: &mut R,
) -> ComplexMatrix {
    let xi: f64 = rng.random_range(0.0..TAU);
    let dir = p_r - p_t;
    let gain = antenna_pattern(dir, q) * antenna_pattern(-dir, q);
    let alpha = Complex64::from_polar(db_to_amplitude(-pathloss_db) * gain, xi);
    let theta = plan_azimuth(p_t, p_r);
    let a = array_response(k, theta);
    ComplexMatrix::outer(&a, &a).scaled(alpha)
}

// ============================================================================
// Cascaded channel
// ============================================================================

/// Amplitude factor shared by both segments: `(d_m d_n lambda^2 / 64 pi^3)^(1/4)`.
pub fn segment_amplitude_factor(d_m: f64, d_n: f64, wavelength: f64) -> f64 {
    (d_m * d_n * wavelength * wavelength / (64.0 * PI.powi(3))).powf(0.25)
}

/// One antenna-element hop: amplitude `factor / r`, both patterns, phase `-k0 r + xi`.
#[inline]
#[allow(clippy::too_many_arguments)]
fn hop(
    antenna: Vec3,
    element: Vec3,
    normal: Vec3,
    factor: f64,
    k0: f64,
    xi: f64,
    q: f64,
    min_r: f64,
) -> Result<Complex64, ChannelError> {
    let d = element - antenna;
    let r = d.norm();
    if r <= min_r {
        return Err(ChannelError::TooClose { distance: r, min: min_r });
    }
    let u = d * (1.0 / r);
    let rho = antenna_pattern(u, q) * pattern_from_cos(-u.dot(normal), q);
    Ok(Complex64::from_polar(factor * rho / r, xi - k0 * r))
}

/// Cascaded factors of one metasurface: `H_tc` (`MN x K`) and `H_cr` (`K x MN`).
#[derive(Debug, Clone, PartialEq)]
pub struct CascadedChannel {
    pub h_tc: ComplexMatrix,
    pub h_cr: ComplexMatrix,
}

/// Segment phases `xi_t`, `xi_r`, drawn in that order.
pub fn draw_segment_phases<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU))
}

/// Exact spherical-wave cascaded channel between the arrays at `p_t`, `p_r`
/// and every element of `geometry`.
pub fn cascaded_channels<R: Rng + ?Sized>(
    geometry: &CirsGeometry,
    p_t: Vec3,
    p_r: Vec3,
    k: usize,
    wavelength: f64,
    q: f64,
    rng: &mut R,
) -> Result<CascadedChannel, ChannelError> {
    let (xi_t, xi_r) = draw_segment_phases(rng);
    cascaded_channels_with_phases(geometry, p_t, p_r, k, wavelength, q, xi_t, xi_r)
}

#[allow(clippy::too_many_arguments)]
pub fn cascaded_channels_with_phases(
    geometry: &CirsGeometry,
    p_t: Vec3,
    p_r: Vec3,
    k: usize,
    wavelength: f64,
    q: f64,
    xi_t: f64,
    xi_r: f64,
) -> Result<CascadedChannel, ChannelError> {
    let factor = segment_amplitude_factor(geometry.row_spacing(), geometry.col_spacing(), wavelength);
    let k0 = TAU / wavelength;
    let min_r = MIN_DISTANCE_WAVELENGTHS * wavelength;
    let tx = antenna_positions(p_t, k, wavelength);
    let rx = antenna_positions(p_r, k, wavelength);
    let n = geometry.len();
    let mut h_tc = ComplexMatrix::zeros(n, k);
    let mut h_cr = ComplexMatrix::zeros(k, n);
    for (l, e) in geometry.elements().iter().enumerate() {
        for (a, &pos) in tx.iter().enumerate() {
            h_tc.set(l, a, hop(pos, e.position, e.normal, factor, k0, xi_t, q, min_r)?);
        }
        for (u, &pos) in rx.iter().enumerate() {
            h_cr.set(u, l, hop(pos, e.position, e.normal, factor, k0, xi_r, q, min_r)?);
        }
    }
    Ok(CascadedChannel { h_tc, h_cr })
}

/// Beamformed cascaded factors: `t = H_tc f` and `c = (w^H H_cr)^T`, so that
/// `w^H H_cr Phi H_tc f = sum_l c_l Phi_l t_l`. Avoids materializing `MN x K`
/// matrices for large surfaces.
#[allow(clippy::too_many_arguments)]
pub fn beamformed_cascade(
    geometry: &CirsGeometry,
    p_t: Vec3,
    p_r: Vec3,
    f: &[Complex64],
    w: &[Complex64],
    wavelength: f64,
    q: f64,
    xi_t: f64,
    xi_r: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>), ChannelError> {
    let factor = segment_amplitude_factor(geometry.row_spacing(), geometry.col_spacing(), wavelength);
    let k0 = TAU / wavelength;
    let min_r = MIN_DISTANCE_WAVELENGTHS * wavelength;
    let tx = antenna_positions(p_t, f.len(), wavelength);
    let rx = antenna_positions(p_r, w.len(), wavelength);
    let mut t = Vec::with_capacity(geometry.len());
    let mut c = Vec::with_capacity(geometry.len());
    for e in geometry.elements() {
        let mut acc_t = Complex64::new(0.0, 0.0);
        for (&pos, fk) in tx.iter().zip(f) {
            acc_t += hop(pos, e.position, e.normal, factor, k0, xi_t, q, min_r)? * fk;
        }
        let mut acc_c = Complex64::new(0.0, 0.0);
        for (&pos, wu) in rx.iter().zip(w) {
            acc_c += wu.conj() * hop(pos, e.position, e.normal, factor, k0, xi_r, q, min_r)?;
        }
        t.push(acc_t);
        c.push(acc_c);
    }
    Ok((t, c))
}

/// `H_cr Phi H_tc` exploiting the diagonal reflection matrix.
pub fn cascade(
    h_cr: &ComplexMatrix,
    reflection: &ReflectionMatrix,
    h_tc: &ComplexMatrix,
) -> Result<ComplexMatrix, ChannelError> {
    let n = reflection.len();
    if h_cr.cols() != n || h_tc.rows() != n {
        return Err(shape_error((h_cr.rows(), n), (h_cr.cols(), h_tc.rows())));
    }
    let phi = reflection.diagonal();
    Ok(ComplexMatrix::from_fn(h_cr.rows(), h_tc.cols(), |u, k| {
        (0..n).map(|l| h_cr.get(u, l) * phi[l] * h_tc.get(l, k)).sum()
    }))
}

/// One relay's factors for [`total_channel`].
pub struct RelayChannel<'a> {
    pub h_cr: &'a ComplexMatrix,
    pub reflection: &'a ReflectionMatrix,
    pub h_tc: &'a ComplexMatrix,
}

/// `H = H_d + sum_c H_cr,c Phi_c H_tc,c`.
pub fn total_channel(h_d: &ComplexMatrix, relays: &[RelayChannel<'_>]) -> Result<ComplexMatrix, ChannelError> {
    let mut h = h_d.clone();
    for r in relays {
        h = h.add(&cascade(r.h_cr, r.reflection, r.h_tc)?)?;
    }
    Ok(h)
}

// ============================================================================
// Normalized far-field gain
// ============================================================================

/// Normalized far-field gain of `profile` on `geometry` for plane waves
/// arriving from `incidence` and leaving toward `reflection` (door frame).
///
/// Builds the rank-one far-field factors, rescales `H_tc`, `H_cr` and the
/// reflection matrix to unit Frobenius norm, and returns
/// `(MN)^2 tr(H_cr Phi H_tc H_tc^H Phi^H H_cr^H)`, so a fully coherent
/// surface with uniform patterns scores `MN`. Linear scale.
pub fn normalized_gain(
    geometry: &CirsGeometry,
    profile: &PhaseProfile,
    incidence: AnglePair,
    reflection: AnglePair,
    wavelength: f64,
    q: f64,
) -> Result<f64, ChannelError> {
    let table = GainTable::new(geometry, profile)?;
    Ok(table.gain(incidence, reflection, wavelength, q))
}

/// Precomputed element phasors for repeated gain evaluations on one surface.
pub struct GainTable {
    rows: usize,
    cols: usize,
    psi: Vec<f64>,
    /// Door-frame `(x, z)` of each row.
    row_xz: Vec<(f64, f64)>,
    /// Door-frame `y` of each column.
    col_y: Vec<f64>,
    weights: Weights,
    weight_energy: f64,
}

/// `beta exp(j Phi)` per element (row-major) or per row for profiles that
/// do not vary along the cylinder axis.
enum Weights {
    Full(Vec<Complex64>),
    PerRow(Vec<Complex64>),
}

impl GainTable {
    pub fn new(geometry: &CirsGeometry, profile: &PhaseProfile) -> Result<Self, ChannelError> {
        let weights = ReflectionMatrix::from_profile(profile, geometry)?.diag;
        let weight_energy = weights.iter().map(|w| w.norm_sqr()).sum();
        let cols = geometry.cols();
        let el = geometry.elements();
        Ok(GainTable {
            rows: geometry.rows(),
            cols,
            psi: el.iter().step_by(cols).map(|e| e.psi).collect(),
            row_xz: el.iter().step_by(cols).map(|e| (e.local.x, e.local.z)).collect(),
            col_y: el[..cols].iter().map(|e| e.local.y).collect(),
            weights: Weights::Full(weights),
            weight_energy,
        })
    }

    /// Table for a single-column `geometry` and `profile` repeated over `cols`
    /// columns at the geometry's column spacing. Avoids building multi-million
    /// element layouts for axially uniform profiles.
    pub fn extruded(geometry: &CirsGeometry, profile: &PhaseProfile, cols: usize) -> Result<Self, ChannelError> {
        if geometry.cols() != 1 || cols == 0 {
            return Err(shape_error((geometry.rows(), 1), (geometry.rows(), geometry.cols())));
        }
        let row_weights = ReflectionMatrix::from_profile(profile, geometry)?.diag;
        let weight_energy = cols as f64 * row_weights.iter().map(|w| w.norm_sqr()).sum::<f64>();
        let el = geometry.elements();
        Ok(GainTable {
            rows: geometry.rows(),
            cols,
            psi: el.iter().map(|e| e.psi).collect(),
            row_xz: el.iter().map(|e| (e.local.x, e.local.z)).collect(),
            col_y: (0..cols).map(|n| n as f64 * geometry.col_spacing()).collect(),
            weights: Weights::PerRow(row_weights),
            weight_energy,
        })
    }

    pub fn gain(&self, incidence: AnglePair, reflection: AnglePair, wavelength: f64, q: f64) -> f64 {
        let k0 = TAU / wavelength;
        let ui = incidence.unit_vector();
        let uo = reflection.unit_vector();
        let s = ui + uo;

        // Patterns depend on the row only; propagation phases separate into
        // a row term (x, z) and a column term (y).
        let mut energy_i = 0.0;
        let mut energy_o = 0.0;
        let row_terms: Vec<Complex64> = self
            .psi
            .iter()
            .zip(&self.row_xz)
            .map(|(&psi, &(x, z))| {
                let gi = pattern_from_cos(CirsGeometry::cos_to_row_normal(ui, psi), q);
                let go = pattern_from_cos(CirsGeometry::cos_to_row_normal(uo, psi), q);
                energy_i += gi * gi;
                energy_o += go * go;
                Complex64::from_polar(gi * go, k0 * (s.x * x + s.z * z))
            })
            .collect();
        let col_terms: Vec<Complex64> = self.col_y.iter().map(|&y| Complex64::from_polar(1.0, k0 * s.y * y)).collect();

        let mut total = Complex64::new(0.0, 0.0);
        match &self.weights {
            Weights::Full(w) => {
                for (m, a) in row_terms.iter().enumerate() {
                    if a.norm_sqr() == 0.0 {
                        continue;
                    }
                    let row = &w[m * self.cols..(m + 1) * self.cols];
                    let inner: Complex64 = row.iter().zip(&col_terms).map(|(w, b)| w * b).sum();
                    total += a * inner;
                }
            }
            Weights::PerRow(w) => {
                let col_sum: Complex64 = col_terms.iter().sum();
                let row_sum: Complex64 = row_terms.iter().zip(w).map(|(a, w)| a * w).sum();
                total = row_sum * col_sum;
            }
        }
        let n = self.cols as f64;
        let denom = energy_i * n * energy_o * n * self.weight_energy;
        if denom == 0.0 {
            return 0.0;
        }
        let mn = (self.rows * self.cols) as f64;
        mn * mn * total.norm_sqr() / denom
    }
}

/// Floor applied before converting gains to dB.
pub const GAIN_FLOOR_DB: f64 = -300.0;

pub fn gain_to_db(g: f64) -> f64 {
    if g > 0.0 {
        (10.0 * g.log10()).max(GAIN_FLOOR_DB)
    } else {
        GAIN_FLOOR_DB
    }
}

/// Elevation-plane gain (`theta_i = theta_o = 0`) in dB.
pub fn channel_gain_elevation(
    geometry: &CirsGeometry,
    profile: &PhaseProfile,
    phi_i: f64,
    phi_o: f64,
    wavelength: f64,
    q: f64,
) -> Result<f64, ChannelError> {
    normalized_gain(geometry, profile, AnglePair::new(0.0, phi_i), AnglePair::new(0.0, phi_o), wavelength, q)
        .map(gain_to_db)
}

/// Azimuth-plane gain for specular pairs `theta_o = -theta_i`, `phi = pi/2`, in dB.
pub fn channel_gain_azimuth(
    geometry: &CirsGeometry,
    profile: &PhaseProfile,
    theta_i: f64,
    wavelength: f64,
    q: f64,
) -> Result<f64, ChannelError> {
    normalized_gain(
        geometry,
        profile,
        AnglePair::new(theta_i, PI / 2.0),
        AnglePair::new(-theta_i, PI / 2.0),
        wavelength,
        q,
    )
    .map(gain_to_db)
}
