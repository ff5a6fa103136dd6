//! Monte-Carlo and sweep drivers.
//!
//! Every stochastic draw comes from a substream keyed by the master seed, a
//! purpose tag and the trial index (plus the relay key where relevant), so
//! results do not depend on thread count or evaluation order. Trial `t` sees
//! the same traffic for every density, distance, radius and relay mode
//! (common random numbers).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{
    beamformed_cascade, direct_channel, draw_segment_phases, gain_to_db, pattern_peak, segment_amplitude_factor,
    ChannelError, GainTable, PathLossModel,
};
use crate::geometry::{AnglePair, CirsGeometry, DoorSpec, GeometryError, Pose, RoadConfig, VehicleShape};
use crate::link::{build_codebooks, snr_db_from_power, LinkBudget};
use crate::phase::{optimal_phase, perpendicular_phase, preconfigured_phase, PhaseError, PhaseProfile};
use crate::rng::{nested_substream, substream};
use crate::scenario::{generate_traffic, BlockageMode, RelayCandidate, Scenario, ScenarioError, TrafficConfig};
use crate::units::db_to_amplitude;
use crate::wavelength;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
}

// ============================================================================
// Statistics
// ============================================================================

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Empirical distribution of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    values: Vec<f64>,
}

impl Ecdf {
    /// NaN samples are dropped.
    pub fn new(mut values: Vec<f64>) -> Self {
        values.retain(|v| !v.is_nan());
        values.sort_by(f64::total_cmp);
        Ecdf { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    /// Smallest sample `x` with `eval(x) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.values.len();
        if n == 0 {
            return f64::NAN;
        }
        let idx = ((p.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.values[idx]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

/// Percentile bootstrap interval (95%) of the median.
pub fn bootstrap_median_ci<R: Rng + ?Sized>(values: &[f64], resamples: usize, rng: &mut R) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len();
    let mut buf = vec![0.0; n];
    let medians: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = values[rng.random_range(0..n)];
            }
            buf.sort_by(f64::total_cmp);
            Ecdf { values: buf.clone() }.median()
        })
        .collect();
    let e = Ecdf::new(medians);
    (e.quantile(0.025), e.quantile(0.975))
}

/// Fixed-width histogram over `[lo, hi)`; out-of-range samples are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Histogram { lo, hi, counts: vec![0; bins] }
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn add(&mut self, x: f64) {
        if x >= self.lo && x < self.hi {
            let last = self.counts.len() - 1;
            let i = ((x - self.lo) / self.bin_width()) as usize;
            self.counts[i.min(last)] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..self.counts.len()).map(|i| self.lo + (i as f64 + 0.5) * w).collect()
    }

    /// Probability density per bin (integrates to one when non-empty).
    pub fn density(&self) -> Vec<f64> {
        let total = self.total() as f64;
        let w = self.bin_width();
        self.counts.iter().map(|&c| if total > 0.0 { c as f64 / (total * w) } else { 0.0 }).collect()
    }
}

// ============================================================================
// Normalized gain sweeps
// ============================================================================

/// Fixed-area surface used by the gain sweeps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainSweepSpec {
    pub frequency_ghz: f64,
    pub radius: f64,
    pub area_m2: f64,
    /// Element spacing in wavelengths (both axes).
    pub spacing_wl: f64,
    pub q: f64,
    /// Sweep grid, degrees.
    pub angles_deg: Vec<f64>,
    /// Design azimuth for the pre-configured azimuth profile, radians.
    pub theta_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub angle_deg: f64,
    pub cirs_db: f64,
    pub flat_db: f64,
    pub bare_db: f64,
}

/// Elements per axis covering `sqrt(area)` at the given spacing, rounded up to even.
pub fn elements_per_axis(area_m2: f64, frequency_ghz: f64, spacing_wl: f64) -> usize {
    let n = (area_m2.sqrt() / (spacing_wl * wavelength(frequency_ghz))).ceil() as usize;
    n + n % 2
}

/// Evenly spaced grid `start, start + step, ..., <= stop`.
pub fn angle_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

struct SweepSurfaces {
    cirs: GainTable,
    flat: GainTable,
    bare: GainTable,
    wavelength: f64,
}

fn sweep_surfaces(
    spec: &GainSweepSpec,
    cirs_profile: impl Fn(&CirsGeometry, f64) -> Result<PhaseProfile, PhaseError>,
) -> Result<SweepSurfaces, ExperimentError> {
    if spec.angles_deg.is_empty() {
        return Err(ExperimentError::InvalidSpec("empty angle grid".into()));
    }
    let lam = wavelength(spec.frequency_ghz);
    let d = spec.spacing_wl * lam;
    let n = elements_per_axis(spec.area_m2, spec.frequency_ghz, spec.spacing_wl);
    // Every sweep profile is uniform along the cylinder axis.
    let curved = CirsGeometry::new(n, 1, spec.radius, d, d, Pose::IDENTITY)?;
    let flat = CirsGeometry::new(n, 1, f64::INFINITY, d, d, Pose::IDENTITY)?;
    let bare = PhaseProfile::zeros(n, 1);
    Ok(SweepSurfaces {
        cirs: GainTable::extruded(&curved, &cirs_profile(&curved, lam)?, n)?,
        flat: GainTable::extruded(&flat, &bare, n)?,
        bare: GainTable::extruded(&curved, &bare, n)?,
        wavelength: lam,
    })
}

fn sweep_rows(
    spec: &GainSweepSpec,
    surfaces: &SweepSurfaces,
    directions: impl Fn(f64) -> (AnglePair, AnglePair) + Sync,
) -> Vec<GainRow> {
    spec.angles_deg
        .par_iter()
        .map(|&deg| {
            let (inc, refl) = directions(deg.to_radians());
            let g = |t: &GainTable| gain_to_db(t.gain(inc, refl, surfaces.wavelength, spec.q));
            GainRow {
                angle_deg: deg,
                cirs_db: g(&surfaces.cirs),
                flat_db: g(&surfaces.flat),
                bare_db: g(&surfaces.bare),
            }
        })
        .collect()
}

/// Elevation sweep with specular reflection `phi_o = pi - phi_i`, `theta = 0`:
/// perpendicular-profile C-IRS, flat IRS and bare cylinder.
pub fn run_gain_elevation(spec: &GainSweepSpec) -> Result<Vec<GainRow>, ExperimentError> {
    let surfaces = sweep_surfaces(spec, |g, lam| Ok(perpendicular_phase(g, lam)))?;
    Ok(sweep_rows(spec, &surfaces, |phi| (AnglePair::new(0.0, phi), AnglePair::new(0.0, PI - phi))))
}

/// Azimuth sweep with specular reflection `theta_o = -theta_i`, `phi = pi/2`,
/// for the pre-configured profile designed at `theta_bar`.
pub fn run_gain_azimuth(spec: &GainSweepSpec) -> Result<Vec<GainRow>, ExperimentError> {
    let theta_bar = spec.theta_bar;
    let surfaces = sweep_surfaces(spec, move |g, lam| preconfigured_phase(g, theta_bar, lam))?;
    Ok(sweep_rows(spec, &surfaces, |th| (AnglePair::new(th, PI / 2.0), AnglePair::new(-th, PI / 2.0))))
}

/// Width of the `drop_db` interval around the local maximum reached by
/// climbing from the grid point nearest `near`. Crossings are linearly
/// interpolated; an interval running off the grid is clipped at its edge.
pub fn angular_width(angles: &[f64], gains: &[f64], near: f64, drop_db: f64) -> Option<f64> {
    if angles.len() != gains.len() || angles.is_empty() {
        return None;
    }
    let mut i = angles.iter().enumerate().min_by(|a, b| (a.1 - near).abs().total_cmp(&(b.1 - near).abs()))?.0;
    loop {
        if i > 0 && gains[i - 1] > gains[i] {
            i -= 1;
        } else if i + 1 < gains.len() && gains[i + 1] > gains[i] {
            i += 1;
        } else {
            break;
        }
    }
    let level = gains[i] - drop_db;
    let crossing = |a: usize, b: usize| {
        let t = (gains[a] - level) / (gains[a] - gains[b]);
        angles[a] + t * (angles[b] - angles[a])
    };
    let mut l = i;
    while l > 0 && gains[l - 1] >= level {
        l -= 1;
    }
    let left = if l == 0 { angles[0] } else { crossing(l, l - 1) };
    let mut r = i;
    while r + 1 < gains.len() && gains[r + 1] >= level {
        r += 1;
    }
    let right = if r + 1 == gains.len() { angles[r] } else { crossing(r, r + 1) };
    Some(right - left)
}

/// One curve of the frequency sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencyCurve {
    pub frequency_ghz: f64,
    pub elements_per_axis: usize,
    pub peak_db: f64,
    pub width_deg: f64,
    pub rows: Vec<GainRow>,
}

/// Elevation sweep repeated per frequency at fixed area and spacing in wavelengths.
pub fn run_gain_frequency(
    spec: &GainSweepSpec,
    frequencies_ghz: &[f64],
) -> Result<Vec<FrequencyCurve>, ExperimentError> {
    if frequencies_ghz.is_empty() {
        return Err(ExperimentError::InvalidSpec("empty frequency list".into()));
    }
    frequencies_ghz
        .iter()
        .map(|&f| {
            let s = GainSweepSpec { frequency_ghz: f, ..spec.clone() };
            let rows = run_gain_elevation(&s)?;
            let angles: Vec<f64> = rows.iter().map(|r| r.angle_deg).collect();
            let gains: Vec<f64> = rows.iter().map(|r| r.cirs_db).collect();
            Ok(FrequencyCurve {
                frequency_ghz: f,
                elements_per_axis: elements_per_axis(s.area_m2, f, s.spacing_wl),
                peak_db: gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                width_deg: angular_width(&angles, &gains, 90.0, 3.0).unwrap_or(f64::NAN),
                rows,
            })
        })
        .collect()
}

// ============================================================================
// Blockage sweep
// ============================================================================

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockageSpec {
    pub road: RoadConfig,
    pub vehicle: VehicleShape,
    pub rhos: Vec<f64>,
    pub r_ds: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    /// Door length of the full-size surface, sets the specular area.
    pub door_length: f64,
    pub door_height: f64,
    pub max_range: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockageRow {
    pub rho: f64,
    pub r_d: f64,
    pub mode: BlockageMode,
    pub p_block: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

fn check_grid(name: &str, grid: &[f64]) -> Result<(), ExperimentError> {
    if grid.is_empty() {
        Err(ExperimentError::InvalidSpec(format!("empty {name} grid")))
    } else {
        Ok(())
    }
}

/// Blockage counts `[direct, with_irs, with_ris]` over all trials of one grid point.
pub fn blockage_counts(spec: &BlockageSpec, rho: f64, r_d: f64) -> Result<[u64; 3], ExperimentError> {
    let cfg = TrafficConfig { road: spec.road, vehicle: spec.vehicle, rho, r_d };
    (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let s = generate_traffic(&cfg, &mut substream(spec.seed, "traffic", t))?;
            let report = s.blockage_report(spec.door_length, spec.door_height, spec.max_range);
            Ok(BlockageMode::ALL.map(|m| report.blocked(m) as u64))
        })
        .try_reduce(|| [0; 3], |a, b| Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2]]))
}

pub fn run_blockage_sweep(spec: &BlockageSpec) -> Result<Vec<BlockageRow>, ExperimentError> {
    check_grid("rho", &spec.rhos)?;
    check_grid("r_d", &spec.r_ds)?;
    if spec.trials == 0 {
        return Err(ExperimentError::InvalidSpec("trials must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &r_d in &spec.r_ds {
        for &rho in &spec.rhos {
            let counts = blockage_counts(spec, rho, r_d)?;
            for (mode, &c) in BlockageMode::ALL.iter().zip(&counts) {
                let (lo, hi) = wilson_interval(c, spec.trials);
                rows.push(BlockageRow {
                    rho,
                    r_d,
                    mode: *mode,
                    p_block: c as f64 / spec.trials as f64,
                    ci_low: lo,
                    ci_high: hi,
                    trials: spec.trials,
                });
            }
        }
    }
    Ok(rows)
}

// ============================================================================
// Incidence angle statistics
// ============================================================================

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnglePdfSpec {
    pub traffic: TrafficConfig,
    pub door: DoorSpec,
    pub trials: u64,
    pub seed: u64,
    pub max_range: f64,
    pub bins: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnglePdf {
    /// Incidence elevation at the relay door, degrees over `[0, 180)`.
    pub elevation: Histogram,
    /// Incidence azimuth at the relay door, degrees over `[-90, 90)`.
    pub azimuth: Histogram,
    pub elevation_mean_deg: f64,
    pub elevation_std_deg: f64,
    pub samples: u64,
}

/// Door-frame direction from the door of `c` toward `target`.
pub fn door_frame_angles(
    scenario: &Scenario,
    door: &DoorSpec,
    c: RelayCandidate,
    target: crate::geometry::Vec3,
) -> AnglePair {
    let pose = door.pose_on(&scenario.vehicles[c.vehicle], c.side);
    let center = scenario.vehicles[c.vehicle].door_center(c.side, door.center_height);
    AnglePair::from_vector(pose.rotate_to_local(target - center))
}

/// Incidence angles (from the TxV) at every C-RIS candidate door over random scenes.
pub fn run_angle_pdf(spec: &AnglePdfSpec) -> Result<AnglePdf, ExperimentError> {
    if spec.trials == 0 || spec.bins == 0 {
        return Err(ExperimentError::InvalidSpec("trials and bins must be positive".into()));
    }
    let per_trial: Vec<Vec<AnglePair>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let s = generate_traffic(&spec.traffic, &mut substream(spec.seed, "traffic", t))?;
            Ok(s.candidate_relays_ris(spec.max_range, spec.door.center_height)
                .into_iter()
                .map(|c| door_frame_angles(&s, &spec.door, c, s.p_t()))
                .collect())
        })
        .collect::<Result<_, ExperimentError>>()?;
    let mut elevation = Histogram::new(0.0, 180.0, spec.bins);
    let mut azimuth = Histogram::new(-90.0, 90.0, spec.bins);
    let (mut sum, mut sum_sq, mut n) = (0.0, 0.0, 0u64);
    for a in per_trial.iter().flatten() {
        let (el, az) = (a.phi.to_degrees(), a.theta.to_degrees());
        elevation.add(el);
        azimuth.add(az);
        sum += el;
        sum_sq += el * el;
        n += 1;
    }
    let mean = if n > 0 { sum / n as f64 } else { f64::NAN };
    let var = if n > 1 { (sum_sq - n as f64 * mean * mean) / (n as f64 - 1.0) } else { f64::NAN };
    Ok(AnglePdf { elevation, azimuth, elevation_mean_deg: mean, elevation_std_deg: var.max(0.0).sqrt(), samples: n })
}

// ============================================================================
// SNR experiment
// ============================================================================

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnrSpec {
    pub frequency_ghz: f64,
    pub antennas: usize,
    /// Full-size door; sets the specular area and the reduced-mode correction.
    pub door: DoorSpec,
    /// Simulated `(rows, cols)` when running reduced; `None` simulates the full door.
    pub reduced: Option<(usize, usize)>,
    pub pathloss: PathLossModel,
    pub budget: LinkBudget,
    pub q: f64,
    /// Design azimuth of the pre-configured C-IRS, radians.
    pub theta_bar: f64,
    pub max_range: f64,
    pub road: RoadConfig,
    pub vehicle: VehicleShape,
    pub trials: u64,
    pub seed: u64,
    pub rhos: Vec<f64>,
    pub r_ds: Vec<f64>,
    pub radii: Vec<f64>,
    /// Bootstrap resamples for the median intervals.
    pub bootstrap: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnrCurve {
    pub mode: BlockageMode,
    pub radius: f64,
    pub rho: f64,
    pub r_d: f64,
    pub ecdf: Ecdf,
    pub median_db: f64,
    pub median_ci: (f64, f64),
}

impl SnrSpec {
    fn simulated_door(&self, radius: f64) -> DoorSpec {
        let (rows, cols) = self.reduced.unwrap_or((self.door.rows, self.door.cols));
        DoorSpec { rows, cols, radius, ..self.door }
    }

    /// Amplitude factor restoring full-size coherent power in reduced mode:
    /// coherent cascaded power grows as `(MN)^2`.
    pub fn amplitude_correction(&self) -> f64 {
        match self.reduced {
            Some((r, c)) => (self.door.rows * self.door.cols) as f64 / (r * c) as f64,
            None => 1.0,
        }
    }
}

/// Received powers for one scene: `|w^H H f|^2` of the direct entry and the
/// best relay entry of each relay family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialPowers {
    pub direct: f64,
    pub with_irs: f64,
    pub with_ris: f64,
}

/// Best entry power among `direct` and the relays of one family. Relays are
/// visited in decreasing order of an upper bound on their cascaded amplitude
/// and the scan stops once no remaining relay can win; the result equals the
/// exhaustive maximum.
#[allow(clippy::too_many_arguments)]
fn best_entry_power(
    spec: &SnrSpec,
    scenario: &Scenario,
    radius: f64,
    trial: u64,
    h_d: &crate::channel::ComplexMatrix,
    direct_power: f64,
    relays: &[(RelayCandidate, u32, u32)],
    preconfigured: bool,
) -> Result<f64, ExperimentError> {
    let lam = wavelength(spec.frequency_ghz);
    let door = spec.simulated_door(radius);
    let (p_t, p_r) = (scenario.p_t(), scenario.p_r());
    let k = spec.antennas;
    let factor = segment_amplitude_factor(door.d_m, door.d_n, lam);
    let correction = spec.amplitude_correction();
    let elements = (door.rows * door.cols) as f64;
    let peak = pattern_peak(spec.q);
    let reach =
        0.5 * ((door.rows as f64 + 2.0) * door.d_m).hypot((door.cols as f64 + 2.0) * door.d_n) + k as f64 * lam / 4.0;
    let centers: Vec<_> =
        relays.iter().map(|(c, _, _)| scenario.vehicles[c.vehicle].door_center(c.side, door.center_height)).collect();
    let codebook = build_codebooks(p_t, p_r, &centers, k);

    struct Pending {
        index: usize,
        bound: f64,
        direct_term: Complex64,
        attenuation: f64,
        xi: (f64, f64),
    }
    let mut pending: Vec<Pending> = relays
        .iter()
        .enumerate()
        .map(|(i, &(c, b1, b2))| {
            let mut rng = nested_substream(spec.seed, "relay", trial, c.key());
            let xi = draw_segment_phases(&mut rng);
            // Shadowing and blockage per hop; distance loss lives in the cascade.
            let s1 = spec.pathloss.sample(1.0, 1.0, b1, &mut rng);
            let s2 = spec.pathloss.sample(1.0, 1.0, b2, &mut rng);
            let attenuation = db_to_amplitude(-(s1.shadowing_db + s1.blockage_db + s2.shadowing_db + s2.blockage_db));
            let entry = &codebook.entries[i + 1];
            let direct_term = h_d.bilinear(&entry.w, &entry.f)?;
            let r_t = (centers[i].distance(p_t) - reach).max(lam);
            let r_r = (centers[i].distance(p_r) - reach).max(lam);
            let cascade_bound =
                correction * attenuation * elements * (k as f64 * factor * peak * peak).powi(2) / (r_t * r_r);
            Ok(Pending { index: i, bound: direct_term.norm() + cascade_bound, direct_term, attenuation, xi })
        })
        .collect::<Result<_, ExperimentError>>()?;
    pending.sort_by(|a, b| b.bound.total_cmp(&a.bound).then(a.index.cmp(&b.index)));

    let mut best = (direct_power, 0usize);
    for p in pending {
        if p.bound * p.bound < best.0 {
            break;
        }
        let (c, _, _) = relays[p.index];
        let vehicle = &scenario.vehicles[c.vehicle];
        let geometry = door.build_on(vehicle, c.side)?;
        let profile = if preconfigured {
            preconfigured_phase(&geometry, spec.theta_bar, lam)?
        } else {
            let center = vehicle.door_center(c.side, door.center_height);
            let inc = geometry.to_door_frame(AnglePair::from_vector(p_t - center));
            let refl = geometry.to_door_frame(AnglePair::from_vector(p_r - center));
            optimal_phase(&geometry, inc, refl, lam)
        };
        let entry = &codebook.entries[p.index + 1];
        let (t, cr) = beamformed_cascade(&geometry, p_t, p_r, &entry.f, &entry.w, lam, spec.q, p.xi.0, p.xi.1)?;
        let cascade: Complex64 = t
            .iter()
            .zip(&cr)
            .zip(profile.amplitudes().iter().zip(profile.phases()))
            .map(|((t, c), (&b, &ph))| c * Complex64::from_polar(b, ph) * t)
            .sum();
        let power = (p.direct_term + cascade * (correction * p.attenuation)).norm_sqr();
        let label = p.index + 1;
        if power > best.0 || (power == best.0 && label < best.1) {
            best = (power, label);
        }
    }
    Ok(best.0)
}

/// Powers of the three link modes for trial `trial` at one grid point.
pub fn snr_trial(spec: &SnrSpec, rho: f64, r_d: f64, radius: f64, trial: u64) -> Result<TrialPowers, ExperimentError> {
    let cfg = TrafficConfig { road: spec.road, vehicle: spec.vehicle, rho, r_d };
    let scenario = generate_traffic(&cfg, &mut substream(spec.seed, "traffic", trial))?;
    let report = scenario.blockage_report(spec.door.length(), spec.door.center_height, spec.max_range);
    let (p_t, p_r) = (scenario.p_t(), scenario.p_r());

    let mut rng = substream(spec.seed, "direct", trial);
    let pl = spec.pathloss.sample(p_t.distance(p_r), spec.frequency_ghz, report.direct, &mut rng);
    let h_d = direct_channel(p_t, p_r, spec.antennas, pl.loss_db, spec.q, &mut rng);
    let direct_entry = build_codebooks(p_t, p_r, &[], spec.antennas).entries.remove(0);
    let direct = h_d.bilinear(&direct_entry.w, &direct_entry.f)?.norm_sqr();

    Ok(TrialPowers {
        direct,
        with_irs: best_entry_power(spec, &scenario, radius, trial, &h_d, direct, &report.irs, true)?,
        with_ris: best_entry_power(spec, &scenario, radius, trial, &h_d, direct, &report.ris, false)?,
    })
}

pub fn run_snr_ecdf(spec: &SnrSpec) -> Result<Vec<SnrCurve>, ExperimentError> {
    check_grid("rho", &spec.rhos)?;
    check_grid("r_d", &spec.r_ds)?;
    check_grid("radius", &spec.radii)?;
    if spec.trials == 0 || spec.antennas == 0 {
        return Err(ExperimentError::InvalidSpec("trials and antennas must be positive".into()));
    }
    let k = spec.antennas;
    let mut curves = Vec::new();
    for &radius in &spec.radii {
        for &r_d in &spec.r_ds {
            for &rho in &spec.rhos {
                let powers: Vec<TrialPowers> = (0..spec.trials)
                    .into_par_iter()
                    .map(|t| snr_trial(spec, rho, r_d, radius, t))
                    .collect::<Result<_, _>>()?;
                for mode in BlockageMode::ALL {
                    let snr: Vec<f64> = powers
                        .iter()
                        .map(|p| {
                            let power = match mode {
                                BlockageMode::Direct => p.direct,
                                BlockageMode::WithIrs => p.with_irs,
                                BlockageMode::WithRis => p.with_ris,
                            };
                            snr_db_from_power(power, &spec.budget, k)
                        })
                        .collect();
                    let mut rng = substream(spec.seed, "bootstrap", curves.len() as u64);
                    let median_ci = bootstrap_median_ci(&snr, spec.bootstrap, &mut rng);
                    let ecdf = Ecdf::new(snr);
                    curves.push(SnrCurve { mode, radius, rho, r_d, median_db: ecdf.median(), median_ci, ecdf });
                }
            }
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3, "{lo} {hi}");
    }

    #[test]
    fn ecdf_quantiles() {
        let e = Ecdf::new(vec![3.0, 1.0, 2.0, 4.0]);
        assert_eq!(e.values(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.quantile(0.0), 1.0);
        assert_eq!(e.quantile(0.5), 2.0);
        assert_eq!(e.quantile(0.51), 3.0);
        assert_eq!(e.quantile(1.0), 4.0);
        assert_eq!(e.eval(2.5), 0.5);
    }

    #[test]
    fn histogram_density_integrates_to_one() {
        let mut h = Histogram::new(0.0, 10.0, 7);
        for i in 0..100 {
            h.add(i as f64 * 0.099);
        }
        h.add(-1.0);
        let integral: f64 = h.density().iter().map(|d| d * h.bin_width()).sum();
        assert!((integral - 1.0).abs() < 1e-12);
    }

    #[test]
    fn element_count_for_area() {
        assert_eq!(elements_per_axis(1.0, 28.0, 0.25), 374);
        assert_eq!(elements_per_axis(1.0, 60.0, 0.25), 802);
        assert_eq!(elements_per_axis(1.0, 120.0, 0.25), 1602);
    }

    #[test]
    fn width_of_triangle() {
        let angles = angle_grid(0.0, 10.0, 1.0);
        let gains: Vec<f64> = angles.iter().map(|a| -(a - 5.0_f64).abs()).collect();
        let w = angular_width(&angles, &gains, 4.0, 3.0).unwrap();
        assert!((w - 6.0).abs() < 1e-12);
        // Runs off the grid on the left.
        let w = angular_width(&angles, &gains.iter().map(|g| g * 0.1).collect::<Vec<_>>(), 5.0, 3.0).unwrap();
        assert!((w - 10.0).abs() < 1e-12);
    }
}
