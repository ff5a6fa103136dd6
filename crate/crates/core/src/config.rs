//! Simulation configuration: defaults, JSON files, environment and flag overrides.
//!
//! Resolution order, lowest to highest priority: built-in defaults, the JSON
//! config file, `CRIS_<FIELD>` environment variables, command-line flags.
//! Unknown keys are rejected at every layer.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::channel::PathLossModel;
use crate::experiments::{AnglePdfSpec, BlockageSpec, GainSweepSpec, SnrSpec};
use crate::geometry::{DoorSpec, RoadConfig, VehicleShape};
use crate::link::LinkBudget;
use crate::scenario::TrafficConfig;
use crate::units::{Db, Dbm};
use crate::wavelength;

/// Prefix of environment overrides, e.g. `CRIS_RHO=40`.
pub const ENV_PREFIX: &str = "CRIS_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config {origin}: {source}")]
    Parse { origin: String, source: serde_json::Error },
    #[error("config {origin}: unknown key `{key}`")]
    UnknownKey { origin: String, key: String },
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

/// Accepts either a single number or a list in files and flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub frequency_ghz: f64,
    /// Antennas per ULA, `K`.
    pub antennas: usize,
    /// Door metasurface rows (curved direction), `M`.
    pub elements_m: usize,
    /// Door metasurface columns (cylinder axis), `N`.
    pub elements_n: usize,
    /// Element spacing `d_m = d_n` in wavelengths.
    pub element_spacing_wl: f64,
    #[serde(deserialize_with = "one_or_many")]
    pub radii_m: Vec<f64>,
    /// Design azimuth of the pre-configured C-IRS used in link experiments.
    pub theta_bar_deg: f64,
    pub tx_power: Dbm,
    pub noise_power: Dbm,
    pub vehicle_length_m: f64,
    pub vehicle_width_m: f64,
    pub vehicle_height_m: f64,
    pub road_length_m: f64,
    pub lanes: usize,
    pub lane_width_m: f64,
    /// Traffic densities, cars/km per lane.
    #[serde(deserialize_with = "one_or_many")]
    pub rho: Vec<f64>,
    /// TxV-RxV distances, m.
    #[serde(deserialize_with = "one_or_many")]
    pub r_d: Vec<f64>,
    /// Element pattern exponent.
    pub q: f64,
    pub shadowing_sigma: Db,
    pub blockage_first: Db,
    pub blockage_step: Db,
    pub blockage_sigma: Db,
    /// C-RIS candidate range, m.
    pub max_range_m: f64,
    /// Blockage Monte-Carlo trials per grid point.
    pub trials: u64,
    /// Full-channel trials per SNR configuration.
    pub snr_trials: u64,
    /// Scenes for the incidence-angle statistics.
    pub angle_trials: u64,
    pub seed: u64,
    /// Simulate doors with this many rows and columns in SNR runs, rescaling
    /// the coherent cascaded power to the full size.
    pub reduced_elements: Option<usize>,
    /// Height of the door reference row above ground, m.
    pub door_height_m: f64,
    pub sweep_step_deg: f64,
    /// Metasurface area for gain sweeps, m^2.
    pub area_m2: f64,
    #[serde(deserialize_with = "one_or_many")]
    pub frequencies_ghz: Vec<f64>,
    /// Design azimuth for the azimuth gain sweep.
    pub design_theta_deg: f64,
    pub bootstrap_resamples: usize,
    pub angle_bins: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            frequency_ghz: 28.0,
            antennas: 8,
            elements_m: 400,
            elements_n: 400,
            element_spacing_wl: 0.25,
            radii_m: vec![2.0, 8.0],
            theta_bar_deg: 75.0,
            tx_power: Dbm(10.0),
            noise_power: Dbm(-88.0),
            vehicle_length_m: 5.0,
            vehicle_width_m: 1.8,
            vehicle_height_m: 1.5,
            road_length_m: 500.0,
            lanes: 5,
            lane_width_m: 5.0,
            rho: vec![10.0, 20.0, 30.0, 40.0],
            r_d: vec![50.0, 100.0],
            q: 0.285,
            shadowing_sigma: Db(3.0),
            blockage_first: Db(15.0),
            blockage_step: Db(6.0),
            blockage_sigma: Db(4.0),
            max_range_m: 150.0,
            trials: 10_000,
            snr_trials: 200,
            angle_trials: 1_000,
            seed: 1,
            reduced_elements: None,
            door_height_m: 0.75,
            sweep_step_deg: 0.25,
            area_m2: 1.0,
            frequencies_ghz: vec![28.0, 60.0, 120.0],
            design_theta_deg: 60.0,
            bootstrap_resamples: 1_000,
            angle_bins: 90,
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), reason: reason.into() }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn positive_list(field: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.is_empty() {
        return Err(invalid(field, "must not be empty"));
    }
    v.iter().try_for_each(|&x| positive(field, x))
}

fn nonzero(field: &str, v: u64) -> Result<(), ConfigError> {
    if v == 0 {
        Err(invalid(field, "must be at least 1"))
    } else {
        Ok(())
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("frequency_ghz", self.frequency_ghz)?;
        nonzero("antennas", self.antennas as u64)?;
        if self.elements_m < 2 || !self.elements_m.is_multiple_of(2) {
            return Err(invalid("elements_m", format!("must be even and at least 2, got {}", self.elements_m)));
        }
        nonzero("elements_n", self.elements_n as u64)?;
        positive("element_spacing_wl", self.element_spacing_wl)?;
        if self.radii_m.is_empty() || self.radii_m.iter().any(|r| r.is_nan() || *r <= 0.0) {
            return Err(invalid("radii_m", "radii must be positive"));
        }
        if !(0.0..=90.0).contains(&self.theta_bar_deg) {
            return Err(invalid("theta_bar_deg", "must lie in [0, 90]"));
        }
        positive("vehicle_length_m", self.vehicle_length_m)?;
        positive("vehicle_width_m", self.vehicle_width_m)?;
        positive("vehicle_height_m", self.vehicle_height_m)?;
        positive("road_length_m", self.road_length_m)?;
        nonzero("lanes", self.lanes as u64)?;
        positive("lane_width_m", self.lane_width_m)?;
        if self.vehicle_width_m > self.lane_width_m {
            return Err(invalid("vehicle_width_m", "vehicle wider than its lane"));
        }
        if self.rho.is_empty() || self.rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(invalid("rho", "densities must be finite and non-negative"));
        }
        positive_list("r_d", &self.r_d)?;
        if self.r_d.iter().any(|&r| r <= self.vehicle_length_m || r >= self.road_length_m) {
            return Err(invalid("r_d", "must exceed the vehicle length and fit on the road"));
        }
        positive("q", self.q)?;
        for (name, v) in [
            ("shadowing_sigma", self.shadowing_sigma.0),
            ("blockage_sigma", self.blockage_sigma.0),
            ("blockage_first", self.blockage_first.0),
            ("blockage_step", self.blockage_step.0),
        ] {
            if v < 0.0 {
                return Err(invalid(name, "must be non-negative"));
            }
        }
        positive("max_range_m", self.max_range_m)?;
        nonzero("trials", self.trials)?;
        nonzero("snr_trials", self.snr_trials)?;
        nonzero("angle_trials", self.angle_trials)?;
        if let Some(n) = self.reduced_elements {
            if n < 2 || n % 2 != 0 {
                return Err(invalid("reduced_elements", "must be even and at least 2"));
            }
        }
        positive("door_height_m", self.door_height_m)?;
        positive("sweep_step_deg", self.sweep_step_deg)?;
        positive("area_m2", self.area_m2)?;
        positive_list("frequencies_ghz", &self.frequencies_ghz)?;
        if !(0.0..=90.0).contains(&self.design_theta_deg) {
            return Err(invalid("design_theta_deg", "must lie in [0, 90]"));
        }
        nonzero("angle_bins", self.angle_bins as u64)?;
        Ok(())
    }

    /// Names of every configuration key, in declaration order.
    pub fn keys() -> Vec<String> {
        match serde_json::to_value(SimConfig::default()) {
            Ok(Value::Object(m)) => m.keys().cloned().collect(),
            _ => unreachable!("config serializes to an object"),
        }
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.frequency_ghz)
    }

    pub fn element_spacing(&self) -> f64 {
        self.element_spacing_wl * self.wavelength()
    }

    pub fn road(&self) -> RoadConfig {
        RoadConfig { length: self.road_length_m, lanes: self.lanes, lane_width: self.lane_width_m }
    }

    pub fn vehicle(&self) -> VehicleShape {
        VehicleShape { length: self.vehicle_length_m, width: self.vehicle_width_m, height: self.vehicle_height_m }
    }

    pub fn door(&self, radius: f64) -> DoorSpec {
        let d = self.element_spacing();
        DoorSpec {
            rows: self.elements_m,
            cols: self.elements_n,
            radius,
            d_m: d,
            d_n: d,
            center_height: self.door_height_m,
        }
    }

    pub fn pathloss(&self) -> PathLossModel {
        PathLossModel {
            shadowing_sigma: self.shadowing_sigma.0,
            blockage_first: self.blockage_first.0,
            blockage_step: self.blockage_step.0,
            blockage_sigma: self.blockage_sigma.0,
        }
    }

    pub fn budget(&self) -> LinkBudget {
        LinkBudget { tx_power_mw: self.tx_power.milliwatts(), noise_power_mw: self.noise_power.milliwatts() }
    }

    pub fn gain_sweep(&self, radius: f64, angles_deg: Vec<f64>) -> GainSweepSpec {
        GainSweepSpec {
            frequency_ghz: self.frequency_ghz,
            radius,
            area_m2: self.area_m2,
            spacing_wl: self.element_spacing_wl,
            q: self.q,
            angles_deg,
            theta_bar: self.design_theta_deg.to_radians(),
        }
    }

    pub fn blockage_spec(&self) -> BlockageSpec {
        BlockageSpec {
            road: self.road(),
            vehicle: self.vehicle(),
            rhos: self.rho.clone(),
            r_ds: self.r_d.clone(),
            trials: self.trials,
            seed: self.seed,
            door_length: self.door(self.radii_m[0]).length(),
            door_height: self.door_height_m,
            max_range: self.max_range_m,
        }
    }

    pub fn snr_spec(&self) -> SnrSpec {
        SnrSpec {
            frequency_ghz: self.frequency_ghz,
            antennas: self.antennas,
            door: self.door(self.radii_m[0]),
            reduced: self.reduced_elements.map(|n| (n, n)),
            pathloss: self.pathloss(),
            budget: self.budget(),
            q: self.q,
            theta_bar: self.theta_bar_deg.to_radians(),
            max_range: self.max_range_m,
            road: self.road(),
            vehicle: self.vehicle(),
            trials: self.snr_trials,
            seed: self.seed,
            rhos: self.rho.clone(),
            r_ds: self.r_d.clone(),
            radii: self.radii_m.clone(),
            bootstrap: self.bootstrap_resamples,
        }
    }

    pub fn angle_pdf_spec(&self) -> AnglePdfSpec {
        AnglePdfSpec {
            traffic: TrafficConfig { road: self.road(), vehicle: self.vehicle(), rho: self.rho[0], r_d: self.r_d[0] },
            door: self.door(self.radii_m[0]),
            trials: self.angle_trials,
            seed: self.seed,
            max_range: self.max_range_m,
            bins: self.angle_bins,
        }
    }
}

// ============================================================================
// Layered resolution
// ============================================================================

/// Raw override value from the environment or a flag.
///
/// JSON literals are taken as-is (`40`, `[10, 40]`, `null`); anything else is
/// a string (`10 dBm`). Comma lists fill list-valued keys (`--rho 10,40`).
pub fn parse_override(key: &str, raw: &str) -> Value {
    let defaults = serde_json::to_value(SimConfig::default()).expect("config serializes");
    let is_list = matches!(defaults.get(key), Some(Value::Array(_)));
    if is_list && !raw.trim_start().starts_with('[') {
        return Value::Array(raw.split(',').map(|p| scalar(p.trim())).collect());
    }
    scalar(raw)
}

fn scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn merge(base: &mut Map<String, Value>, layer: Map<String, Value>, origin: &str) -> Result<(), ConfigError> {
    for (k, v) in layer {
        if !base.contains_key(&k) {
            return Err(ConfigError::UnknownKey { origin: origin.to_string(), key: k });
        }
        base.insert(k, v);
    }
    Ok(())
}

/// Environment overrides among `vars`, keyed by config field.
pub fn env_overrides(vars: impl IntoIterator<Item = (String, String)>) -> BTreeMap<String, Value> {
    let keys = SimConfig::keys();
    vars.into_iter()
        .filter_map(|(name, raw)| {
            let field = name.strip_prefix(ENV_PREFIX)?.to_ascii_lowercase();
            keys.contains(&field).then(|| {
                let v = parse_override(&field, &raw);
                (field, v)
            })
        })
        .collect()
}

/// Resolve a configuration from its layers (each may be empty).
pub fn resolve_config(
    file: Option<&Path>,
    env: &BTreeMap<String, Value>,
    flags: &BTreeMap<String, Value>,
) -> Result<SimConfig, ConfigError> {
    let Value::Object(mut merged) = serde_json::to_value(SimConfig::default()).expect("config serializes") else {
        unreachable!("config serializes to an object")
    };
    if let Some(path) = file {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: origin.clone(), source })?;
        let value: Value =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse { origin: origin.clone(), source })?;
        let Value::Object(layer) = value else {
            return Err(invalid("<root>", format!("{origin} must hold a JSON object")));
        };
        // Type-check the file on its own so errors name the file.
        serde_json::from_value::<SimConfig>(Value::Object(layer.clone()))
            .map_err(|source| ConfigError::Parse { origin: origin.clone(), source })?;
        merge(&mut merged, layer, &origin)?;
    }
    merge(&mut merged, env.clone().into_iter().collect(), "environment")?;
    merge(&mut merged, flags.clone().into_iter().collect(), "flags")?;
    let config: SimConfig = serde_json::from_value(Value::Object(merged))
        .map_err(|source| ConfigError::Parse { origin: "overrides".into(), source })?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn flags(pairs: &[(&str, &str)]) -> BTreeMap<String, Value> {
        pairs.iter().map(|(k, v)| (k.to_string(), parse_override(k, v))).collect()
    }

    #[test]
    fn defaults_are_valid_and_match_table() {
        let c = resolve_config(None, &BTreeMap::new(), &BTreeMap::new()).unwrap();
        assert_eq!(c, SimConfig::default());
        assert_eq!(c.antennas, 8);
        assert_eq!((c.elements_m, c.elements_n), (400, 400));
        assert_eq!(c.theta_bar_deg, 75.0);
        assert_eq!(c.tx_power, Dbm(10.0));
        assert_eq!(c.noise_power, Dbm(-88.0));
    }

    #[test]
    fn flag_beats_env_beats_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"rho": 10, "seed": 5, "q": 0.5}}"#).unwrap();
        let env = env_overrides([("CRIS_SEED".to_string(), "6".to_string()), ("CRIS_Q".into(), "0.4".into())]);
        let c = resolve_config(Some(f.path()), &env, &flags(&[("rho", "40"), ("q", "0.3")])).unwrap();
        assert_eq!(c.rho, vec![40.0]);
        assert_eq!(c.seed, 6);
        assert_eq!(c.q, 0.3);
        let c = resolve_config(Some(f.path()), &BTreeMap::new(), &BTreeMap::new()).unwrap();
        assert_eq!((c.rho.clone(), c.seed), (vec![10.0], 5));
    }

    #[test]
    fn unknown_and_invalid_keys_fail() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"Mx": -1}}"#).unwrap();
        let e = resolve_config(Some(f.path()), &BTreeMap::new(), &BTreeMap::new()).unwrap_err();
        assert!(e.to_string().contains("Mx"), "{e}");
        let e = resolve_config(None, &BTreeMap::new(), &flags(&[("elements_m", "-1")])).unwrap_err();
        assert!(e.to_string().contains("elements_m") || matches!(e, ConfigError::Parse { .. }), "{e}");
        let e = resolve_config(None, &BTreeMap::new(), &flags(&[("elements_m", "3")])).unwrap_err();
        assert!(e.to_string().contains("elements_m"), "{e}");
    }

    #[test]
    fn decibel_fields_need_units() {
        let e = resolve_config(None, &BTreeMap::new(), &flags(&[("tx_power", "10")]));
        assert!(e.is_err());
        let c = resolve_config(None, &BTreeMap::new(), &flags(&[("tx_power", "20 dBm"), ("shadowing_sigma", "0 dB")]))
            .unwrap();
        assert_eq!(c.tx_power, Dbm(20.0));
        assert_eq!(c.shadowing_sigma, Db(0.0));
    }

    #[test]
    fn list_overrides() {
        let c = resolve_config(None, &BTreeMap::new(), &flags(&[("rho", "10,40"), ("radii_m", "[2, 8]")])).unwrap();
        assert_eq!(c.rho, vec![10.0, 40.0]);
        assert_eq!(c.radii_m, vec![2.0, 8.0]);
        let c = resolve_config(None, &BTreeMap::new(), &flags(&[("reduced_elements", "100")])).unwrap();
        assert_eq!(c.reduced_elements, Some(100));
    }
}
