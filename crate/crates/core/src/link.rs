//! Position-based beam codebooks, beam selection and end-to-end SNR.
//!
//! Beams use the unnormalized steering form (unit-modulus entries); the SNR
//! divides by `K` to absorb the array scaling.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{plan_azimuth, steering_vector, ChannelError, ComplexMatrix};
use crate::geometry::Vec3;
use crate::units::linear_to_db;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryLabel {
    Direct,
    /// Index into the candidate list the codebook was built from.
    Relay(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookEntry {
    pub label: EntryLabel,
    pub f: Vec<Complex64>,
    pub w: Vec<Complex64>,
}

/// One direct entry followed by one entry per candidate relay.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub entries: Vec<CodebookEntry>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Transmit and receive steering azimuths for a hop through `p_c`.
pub fn relay_angles(p_t: Vec3, p_c: Vec3, p_r: Vec3) -> (f64, f64) {
    (plan_azimuth(p_t, p_c), plan_azimuth(p_c, p_r))
}

pub fn build_codebooks(p_t: Vec3, p_r: Vec3, candidates: &[Vec3], k: usize) -> Codebook {
    let theta_d = plan_azimuth(p_t, p_r);
    let mut entries = vec![CodebookEntry {
        label: EntryLabel::Direct,
        f: steering_vector(k, theta_d),
        w: steering_vector(k, theta_d),
    }];
    for (i, &p_c) in candidates.iter().enumerate() {
        let (theta_t, theta_r) = relay_angles(p_t, p_c, p_r);
        entries.push(CodebookEntry {
            label: EntryLabel::Relay(i),
            f: steering_vector(k, theta_t),
            w: steering_vector(k, theta_r),
        });
    }
    Codebook { entries }
}

/// Transmit and noise powers in linear milliwatts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub tx_power_mw: f64,
    pub noise_power_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkResult {
    pub selected: EntryLabel,
    pub snr_db: f64,
    pub blocked: bool,
    /// `|w^H H f|^2` for every codebook entry, in codebook order.
    pub powers: Vec<f64>,
}

/// Index of the largest power; the earliest index wins ties, so the direct
/// entry (index 0) is preferred, then the lowest relay index.
pub fn argmax_power(powers: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in powers.iter().enumerate().skip(1) {
        if p > powers[best] {
            best = i;
        }
    }
    best
}

/// `SNR = sigma_s^2 |w^H H f|^2 / (K sigma_n^2)` from the beamformed power, in dB.
pub fn snr_db_from_power(power: f64, budget: &LinkBudget, k: usize) -> f64 {
    linear_to_db(budget.tx_power_mw * power / (k as f64 * budget.noise_power_mw))
}

pub fn compute_snr(
    h: &ComplexMatrix,
    f: &[Complex64],
    w: &[Complex64],
    budget: &LinkBudget,
) -> Result<f64, ChannelError> {
    let power = h.bilinear(w, f)?.norm_sqr();
    Ok(snr_db_from_power(power, budget, f.len()))
}

/// Pick the entry maximizing `|w^H H f|^2` (noise-free) and report its SNR.
pub fn select_beams(codebook: &Codebook, h: &ComplexMatrix, budget: &LinkBudget) -> Result<LinkResult, ChannelError> {
    let powers =
        codebook.entries.iter().map(|e| h.bilinear(&e.w, &e.f).map(|z| z.norm_sqr())).collect::<Result<Vec<_>, _>>()?;
    Ok(result_from_powers(codebook, powers, budget))
}

pub fn result_from_powers(codebook: &Codebook, powers: Vec<f64>, budget: &LinkBudget) -> LinkResult {
    let best = argmax_power(&powers);
    let k = codebook.entries[best].f.len();
    LinkResult {
        selected: codebook.entries[best].label,
        snr_db: snr_db_from_power(powers[best], budget, k),
        blocked: false,
        powers,
    }
}
