//! Property tests for geometry, phase design, channel and scenario invariants.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use conformal_ris::channel::{array_response, los_pathloss_db, PathLossModel};
use conformal_ris::experiments::Ecdf;
use conformal_ris::geometry::{specular_area, AnglePair, CirsGeometry, Pose, RoadConfig, Side, Vec3};
use conformal_ris::output::fmt_g;
use conformal_ris::phase::{optimal_phase_raw, planar_phase_raw, reflected_elevation, wrap_phase, PhaseProfile};
use conformal_ris::rng::substream;
use conformal_ris::scenario::{generate_traffic, BlockageMode, TrafficConfig};
use conformal_ris::{wavelength, Complex64};
use proptest::prelude::*;

fn geometry(rows_half: usize, cols: usize, radius: f64, f_ghz: f64) -> CirsGeometry {
    let d = wavelength(f_ghz) / 4.0;
    CirsGeometry::new(2 * rows_half, cols, radius, d, d, Pose::IDENTITY).unwrap()
}

proptest! {
    #[test]
    fn wrapped_phase_is_in_range_and_congruent(p in -1e4f64..1e4) {
        let w = wrap_phase(p);
        prop_assert!((0.0..TAU).contains(&w));
        let turns = (p - w) / TAU;
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn row_angles_are_antisymmetric(h in 1usize..60, radius in 0.5f64..20.0) {
        let g = geometry(h, 1, radius, 28.0);
        let psi = g.row_angles();
        // rows run m = -h..h-1, so psi_{-j} sits at index h - j
        for j in 1..h {
            prop_assert!((psi[h - j] + psi[h + j]).abs() < 1e-12);
        }
        prop_assert!(psi.iter().all(|p| p.abs() <= g.half_sector() + 1e-12));
    }

    #[test]
    fn adjacent_rows_are_one_spacing_apart(h in 1usize..40, radius in 0.2f64..50.0) {
        let g = geometry(h, 1, radius, 28.0);
        let d = g.row_spacing();
        for w in g.elements().windows(2) {
            prop_assert!((w[0].position.distance(w[1].position) - d).abs() < 1e-12);
        }
    }

    #[test]
    fn normals_are_unit_and_face_outward(h in 1usize..20, radius in 0.5f64..10.0, yaw in -0.5f64..0.5, left in any::<bool>()) {
        let side = if left { Side::Left } else { Side::Right };
        let d = wavelength(28.0) / 4.0;
        let g = CirsGeometry::new(2 * h, 2, radius, d, d, Pose::new(Vec3::new(1.0, 2.0, 0.7), side, yaw)).unwrap();
        for e in g.elements() {
            prop_assert!((e.normal.norm() - 1.0).abs() < 1e-12);
            let axis_point = g.pose().point_to_global(Vec3::new(-radius, e.local.y, 0.0));
            let radial = (e.position - axis_point).normalized();
            prop_assert!((radial.dot(e.normal) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn huge_radius_matches_planar_design(theta_i in -1.2f64..1.2, phi_i in 0.3f64..2.8, theta_o in -1.2f64..1.2, phi_o in 0.3f64..2.8) {
        let g = geometry(20, 30, 1e6, 28.0);
        let (inc, refl) = (AnglePair::new(theta_i, phi_i), AnglePair::new(theta_o, phi_o));
        let lambda = wavelength(28.0);
        let a = optimal_phase_raw(&g, inc, refl, lambda);
        let b = planar_phase_raw(40, 30, g.row_spacing(), g.col_spacing(), inc, refl, lambda);
        let sup = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(sup < 1e-5, "sup {sup}");
    }

    #[test]
    fn flat_element_reflects_specularly(phi_i in 0.01f64..(PI - 0.01)) {
        let phi_o = reflected_elevation(phi_i, 0.0).angle().unwrap();
        prop_assert!((phi_o - (PI - phi_i)).abs() < 1e-9);
    }

    #[test]
    fn array_response_has_unit_norm(k in 1usize..64, theta in -PI..PI) {
        let n: f64 = array_response(k, theta).iter().map(Complex64::norm_sqr).sum();
        prop_assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn specular_area_is_swap_invariant(yt in 0.0f64..400.0, gap in 6.0f64..200.0, lane_t in 0usize..5, lane_r in 0usize..5) {
        let road = RoadConfig::default();
        let p_t = Vec3::new(road.lane_center(lane_t), yt, 1.5);
        let p_r = Vec3::new(road.lane_center(lane_r), yt + gap, 1.5);
        let a = specular_area(p_t, p_r, &road, 1.0);
        let b = specular_area(p_r, p_t, &road, 1.0);
        prop_assert!((a.center.y - b.center.y).abs() < 1e-9 && a.width == b.width && a.length == b.length);
        prop_assert!(a.contains(Vec3::new(0.0, (yt + yt + gap) / 2.0, 0.0)));
    }

    #[test]
    fn pathloss_without_blockers_has_los_mean_floor(r in 1.0f64..500.0, f in 1.0f64..300.0, seed in any::<u64>()) {
        let model = PathLossModel::default();
        let s = model.sample(r, f, 0, &mut substream(seed, "pl", 0));
        prop_assert_eq!(s.blockage_db, 0.0);
        prop_assert!((s.loss_db - los_pathloss_db(r, f) - s.shadowing_db).abs() < 1e-9);
    }

    #[test]
    fn blockage_is_swap_invariant(seed in any::<u64>(), rho in 5.0f64..40.0, r_d in 20.0f64..150.0) {
        let cfg = TrafficConfig { road: RoadConfig::default(), vehicle: Default::default(), rho, r_d };
        let s = generate_traffic(&cfg, &mut substream(seed, "traffic", 0)).unwrap();
        let t = s.swapped();
        for mode in BlockageMode::ALL {
            prop_assert_eq!(s.blockage_event(mode, 1.07, 0.75, 150.0), t.blockage_event(mode, 1.07, 0.75, 150.0));
        }
    }

    #[test]
    fn ecdf_quantiles_are_monotone(values in prop::collection::vec(-100.0f64..100.0, 1..200)) {
        let e = Ecdf::new(values);
        let qs: Vec<f64> = (0..=20).map(|i| e.quantile(i as f64 / 20.0)).collect();
        prop_assert!(qs.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(e.eval(e.quantile(0.5)) >= 0.5);
    }

    #[test]
    fn formatted_numbers_round_trip(x in prop::num::f64::NORMAL) {
        let y: f64 = fmt_g(x).parse().unwrap();
        prop_assert!(((y - x) / x).abs() < 1e-8);
    }
}

#[test]
fn wrapped_profile_keeps_phasors() {
    let g = geometry(4, 3, 2.0, 28.0);
    let lambda = wavelength(28.0);
    let raw = optimal_phase_raw(&g, AnglePair::new(0.4, 1.1), AnglePair::new(-0.2, FRAC_PI_2), lambda);
    let p = PhaseProfile::from_raw(8, 3, &raw).unwrap();
    for (r, w) in raw.iter().zip(p.phases()) {
        let (a, b) = (Complex64::from_polar(1.0, *r), Complex64::from_polar(1.0, *w));
        assert!((a - b).norm() < 1e-9);
    }
}
