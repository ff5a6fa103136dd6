//! Random highway scenes, plan-view blockage and relay candidates.
//!
//! The transmitting vehicle (TxV) sits at the start of the road in the center
//! lane with its rear bumper at `y = 0`; the receiving vehicle (RxV) is
//! `r_d` meters ahead in the same lane. Other vehicles arrive per lane as a
//! Poisson process of density `rho` (cars per km per lane).

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{specular_area, RoadConfig, Side, Vec3, Vehicle, VehicleShape};

/// Placement attempts per vehicle before the density is declared saturated.
pub const MAX_PLACEMENT_RETRIES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("density {rho} cars/km saturates lane {lane}: no free slot after {retries} attempts")]
    Saturated { rho: f64, lane: usize, retries: usize },
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// Everything needed to draw a scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficConfig {
    pub road: RoadConfig,
    pub vehicle: VehicleShape,
    /// Cars per km per lane.
    pub rho: f64,
    /// TxV-RxV distance, m.
    pub r_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub road: RoadConfig,
    pub vehicles: Vec<Vehicle>,
    pub txv: usize,
    pub rxv: usize,
}

/// A door that can act as a relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelayCandidate {
    pub vehicle: usize,
    pub side: Side,
}

impl RelayCandidate {
    /// Stable integer key, used to derive per-relay random streams.
    pub fn key(&self) -> u64 {
        2 * self.vehicle as u64 + matches!(self.side, Side::Right) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockageMode {
    Direct,
    WithIrs,
    WithRis,
}

impl BlockageMode {
    pub const ALL: [BlockageMode; 3] = [BlockageMode::Direct, BlockageMode::WithIrs, BlockageMode::WithRis];

    pub fn label(self) -> &'static str {
        match self {
            BlockageMode::Direct => "direct",
            BlockageMode::WithIrs => "with_irs",
            BlockageMode::WithRis => "with_ris",
        }
    }
}

/// Blocker counts on the direct path and on both hops of each candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockageReport {
    pub direct: u32,
    pub irs: Vec<(RelayCandidate, u32, u32)>,
    pub ris: Vec<(RelayCandidate, u32, u32)>,
}

impl BlockageReport {
    pub fn blocked(&self, mode: BlockageMode) -> bool {
        let all_relays_blocked = |c: &[(RelayCandidate, u32, u32)]| c.iter().all(|&(_, a, b)| a + b > 0);
        match mode {
            BlockageMode::Direct => self.direct > 0,
            BlockageMode::WithIrs => self.direct > 0 && all_relays_blocked(&self.irs),
            BlockageMode::WithRis => self.direct > 0 && all_relays_blocked(&self.ris),
        }
    }
}

// ============================================================================
// Traffic generation
// ============================================================================

/// Scene with only the TxV and RxV.
pub fn endpoints_only(config: &TrafficConfig) -> Scenario {
    let lane = config.road.center_lane();
    let x = config.road.lane_center(lane);
    let y_t = config.vehicle.length / 2.0;
    let mk = |y| Vehicle { lane, x, y, shape: config.vehicle };
    Scenario { road: config.road, vehicles: vec![mk(y_t), mk(y_t + config.r_d)], txv: 0, rxv: 1 }
}

/// Draw a scene: Poisson counts per lane, uniform positions, overlapping
/// placements redrawn.
pub fn generate_traffic<R: Rng + ?Sized>(config: &TrafficConfig, rng: &mut R) -> Result<Scenario, ScenarioError> {
    if !(config.rho >= 0.0 && config.rho.is_finite()) {
        return Err(ScenarioError::InvalidParameter { name: "rho", value: config.rho });
    }
    if config.r_d.is_nan() || config.r_d <= config.vehicle.length {
        return Err(ScenarioError::InvalidParameter { name: "r_d", value: config.r_d });
    }
    let mut scenario = endpoints_only(config);
    let len = config.road.length;
    let half = config.vehicle.length / 2.0;
    if len <= config.vehicle.length {
        return Err(ScenarioError::InvalidParameter { name: "road length", value: len });
    }
    let mean = config.rho * len / 1000.0;
    for lane in 0..config.road.lanes {
        let count = if mean > 0.0 { Poisson::new(mean).expect("positive mean").sample(rng) as usize } else { 0 };
        let x = config.road.lane_center(lane);
        for _ in 0..count {
            let mut placed = false;
            for _ in 0..MAX_PLACEMENT_RETRIES {
                let y = rng.random_range(half..=len - half);
                let v = Vehicle { lane, x, y, shape: config.vehicle };
                let fp = v.footprint();
                if scenario.vehicles.iter().all(|o| !o.footprint().overlaps(&fp)) {
                    scenario.vehicles.push(v);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(ScenarioError::Saturated { rho: config.rho, lane, retries: MAX_PLACEMENT_RETRIES });
            }
        }
    }
    Ok(scenario)
}

// ============================================================================
// Blockage and candidates
// ============================================================================

impl Scenario {
    pub fn p_t(&self) -> Vec3 {
        self.vehicles[self.txv].array_position()
    }

    pub fn p_r(&self) -> Vec3 {
        self.vehicles[self.rxv].array_position()
    }

    /// Same scene with the TxV and RxV roles exchanged.
    pub fn swapped(&self) -> Scenario {
        Scenario { txv: self.rxv, rxv: self.txv, ..self.clone() }
    }

    /// Vehicles other than the endpoints and `excluded` whose footprint meets
    /// the open plan-view segment `from -> to`.
    pub fn count_blockers(&self, from: Vec3, to: Vec3, excluded: &[usize]) -> u32 {
        let (a, b) = ((from.x, from.y), (to.x, to.y));
        self.vehicles
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.txv && *i != self.rxv && !excluded.contains(i))
            .filter(|(_, v)| v.footprint().intersects_segment(a, b))
            .count() as u32
    }

    fn door_point(&self, c: RelayCandidate, door_height: f64) -> Vec3 {
        self.vehicles[c.vehicle].door_center(c.side, door_height)
    }

    /// Whether both endpoints lie on the outward side of the candidate door.
    pub fn faces_endpoints(&self, c: RelayCandidate) -> bool {
        let v = &self.vehicles[c.vehicle];
        let door_x = v.x + c.side.outward() * v.shape.width / 2.0;
        [self.p_t(), self.p_r()].iter().all(|p| (p.x - door_x) * c.side.outward() > 0.0)
    }

    fn doors(&self) -> impl Iterator<Item = RelayCandidate> + '_ {
        (0..self.vehicles.len())
            .filter(move |&i| i != self.txv && i != self.rxv)
            .flat_map(|vehicle| Side::BOTH.into_iter().map(move |side| RelayCandidate { vehicle, side }))
            .filter(move |&c| self.faces_endpoints(c))
    }

    /// Doors inside the specular area that face both endpoints.
    pub fn candidate_relays_irs(&self, door_length: f64, door_height: f64) -> Vec<RelayCandidate> {
        let area = specular_area(self.p_t(), self.p_r(), &self.road, door_length);
        self.doors().filter(|&c| area.contains(self.door_point(c, door_height))).collect()
    }

    /// Doors within `max_range` of both endpoints that face both.
    pub fn candidate_relays_ris(&self, max_range: f64, door_height: f64) -> Vec<RelayCandidate> {
        let (p_t, p_r) = (self.p_t(), self.p_r());
        self.doors()
            .filter(|&c| {
                let d = self.door_point(c, door_height);
                d.distance(p_t) <= max_range && d.distance(p_r) <= max_range
            })
            .collect()
    }

    /// Blockers on the two hops through candidate `c`.
    pub fn relay_blockers(&self, c: RelayCandidate, door_height: f64) -> (u32, u32) {
        let d = self.door_point(c, door_height);
        (self.count_blockers(self.p_t(), d, &[c.vehicle]), self.count_blockers(d, self.p_r(), &[c.vehicle]))
    }

    pub fn blockage_report(&self, door_length: f64, door_height: f64, max_range: f64) -> BlockageReport {
        let with_counts = |cands: Vec<RelayCandidate>| {
            cands
                .into_iter()
                .map(|c| {
                    let (a, b) = self.relay_blockers(c, door_height);
                    (c, a, b)
                })
                .collect()
        };
        BlockageReport {
            direct: self.count_blockers(self.p_t(), self.p_r(), &[]),
            irs: with_counts(self.candidate_relays_irs(door_length, door_height)),
            ris: with_counts(self.candidate_relays_ris(max_range, door_height)),
        }
    }

    pub fn blockage_event(&self, mode: BlockageMode, door_length: f64, door_height: f64, max_range: f64) -> bool {
        self.blockage_report(door_length, door_height, max_range).blocked(mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const DOOR_LEN: f64 = 1.0707;
    const DOOR_H: f64 = 0.75;

    fn config(rho: f64) -> TrafficConfig {
        TrafficConfig { road: RoadConfig::default(), vehicle: VehicleShape::default(), rho, r_d: 100.0 }
    }

    fn with_vehicle(s: &mut Scenario, lane: usize, y: f64) -> usize {
        let x = s.road.lane_center(lane);
        s.vehicles.push(Vehicle { lane, x, y, shape: VehicleShape::default() });
        s.vehicles.len() - 1
    }

    #[test]
    fn zero_density_leaves_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = generate_traffic(&config(0.0), &mut rng).unwrap();
        assert_eq!(s.vehicles.len(), 2);
        for mode in BlockageMode::ALL {
            assert!(!s.blockage_event(mode, DOOR_LEN, DOOR_H, 150.0));
        }
    }

    #[test]
    fn same_seed_same_scene() {
        let a = generate_traffic(&config(30.0), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = generate_traffic(&config(30.0), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn footprints_never_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let s = generate_traffic(&config(60.0), &mut rng).unwrap();
            for (i, a) in s.vehicles.iter().enumerate() {
                for b in &s.vehicles[i + 1..] {
                    assert!(!a.footprint().overlaps(&b.footprint()));
                }
            }
        }
    }

    #[test]
    fn absurd_density_saturates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = generate_traffic(&config(1000.0), &mut rng);
        assert!(matches!(r, Err(ScenarioError::Saturated { .. })));
    }

    #[test]
    fn midpoint_vehicle_blocks_direct() {
        let mut s = endpoints_only(&config(0.0));
        assert_eq!(s.count_blockers(s.p_t(), s.p_r(), &[]), 0);
        let mid = (s.p_t().y + s.p_r().y) / 2.0;
        let lane = s.road.center_lane();
        with_vehicle(&mut s, lane, mid);
        assert_eq!(s.count_blockers(s.p_t(), s.p_r(), &[]), 1);
        assert!(s.blockage_event(BlockageMode::Direct, DOOR_LEN, DOOR_H, 150.0));
        // No relay available either.
        assert!(s.blockage_event(BlockageMode::WithIrs, DOOR_LEN, DOOR_H, 150.0));
    }

    #[test]
    fn adjacent_lane_midpoint_door_is_irs_candidate_and_saves_link() {
        let mut s = endpoints_only(&config(0.0));
        let mid = (s.p_t().y + s.p_r().y) / 2.0;
        let lane = s.road.center_lane();
        with_vehicle(&mut s, lane, mid);
        let relay = with_vehicle(&mut s, lane + 1, mid);
        let irs = s.candidate_relays_irs(DOOR_LEN, DOOR_H);
        assert_eq!(irs, vec![RelayCandidate { vehicle: relay, side: Side::Left }]);
        assert!(!s.blockage_event(BlockageMode::WithIrs, DOOR_LEN, DOOR_H, 150.0));
        assert!(!s.blockage_event(BlockageMode::WithRis, DOOR_LEN, DOOR_H, 150.0));
    }

    #[test]
    fn door_beyond_specular_length_is_excluded() {
        let mut s = endpoints_only(&config(0.0));
        let mid = (s.p_t().y + s.p_r().y) / 2.0;
        let lane = s.road.center_lane() + 1;
        with_vehicle(&mut s, lane, mid + DOOR_LEN + 3.0);
        assert!(s.candidate_relays_irs(DOOR_LEN, DOOR_H).is_empty());
        assert_eq!(s.candidate_relays_ris(150.0, DOOR_H).len(), 1);
    }

    #[test]
    fn irs_candidates_are_ris_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let s = generate_traffic(&config(40.0), &mut rng).unwrap();
            let ris = s.candidate_relays_ris(150.0, DOOR_H);
            for c in s.candidate_relays_irs(DOOR_LEN, DOOR_H) {
                assert!(ris.contains(&c));
            }
        }
    }

    #[test]
    fn blockage_symmetric_under_endpoint_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = generate_traffic(&config(30.0), &mut rng).unwrap();
            let w = s.swapped();
            for mode in BlockageMode::ALL {
                assert_eq!(
                    s.blockage_event(mode, DOOR_LEN, DOOR_H, 150.0),
                    w.blockage_event(mode, DOOR_LEN, DOOR_H, 150.0)
                );
            }
        }
    }
}
