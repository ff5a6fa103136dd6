//! Scene geometry: vectors and directions, cylindrical metasurface layouts,
//! road/vehicle boxes and the specular relay area.
//!
//! Global frame: `y` is the travel direction, `x` the cross-motion axis and
//! `z` the vertical. A door metasurface has its own frame where `x` is the
//! outward normal of the reference element, `y` runs along the cylinder axis
//! and `z` follows the curved (vertical) coordinate.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("row count M must be even and at least 2, got {0}")]
    InvalidRows(usize),
    #[error("column count N must be at least 1")]
    NoColumns,
    #[error("curvature radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("element spacings must be positive (d_m = {d_m}, d_n = {d_n})")]
    InvalidSpacing { d_m: f64, d_n: f64 },
    #[error("row spacing {d_m} m does not fit on a cylinder of radius {radius} m (needs d_m < 2R)")]
    SpacingExceedsDiameter { d_m: f64, radius: f64 },
    #[error("element index {index} out of range for {count} elements")]
    IndexOutOfRange { index: usize, count: usize },
}

// ============================================================================
// Vectors and directions
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction. The zero vector is returned unchanged.
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Rotation about the vertical axis by `angle` radians (counter-clockwise seen from +z).
    pub fn rotate_z(self, angle: f64) -> Vec3 {
        let (s, c) = angle.sin_cos();
        Vec3::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }

    /// Rotation about the `y` axis that maps the unit vector `(cos a, 0, sin a)` onto `+x`.
    fn unbend(self, a: f64) -> Vec3 {
        let (s, c) = a.sin_cos();
        Vec3::new(c * self.x + s * self.z, self.y, -s * self.x + c * self.z)
    }

    fn bend(self, a: f64) -> Vec3 {
        self.unbend(-a)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A direction as (azimuth `theta` measured from `+x` toward `+y`, elevation
/// `phi` measured from `+z`), both in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglePair {
    pub theta: f64,
    pub phi: f64,
}

impl AnglePair {
    pub const fn new(theta: f64, phi: f64) -> Self {
        AnglePair { theta, phi }
    }

    /// Broadside of a surface whose normal is `+x`.
    pub const BROADSIDE: AnglePair = AnglePair { theta: 0.0, phi: PI / 2.0 };

    /// Direction angles of a (not necessarily unit) vector.
    pub fn from_vector(v: Vec3) -> Self {
        let u = v.normalized();
        let phi = u.z.clamp(-1.0, 1.0).acos();
        let mut theta = u.y.atan2(u.x);
        if theta <= -PI {
            theta += 2.0 * PI;
        }
        AnglePair { theta, phi }
    }

    /// Unit vector `[sin(phi)cos(theta), sin(phi)sin(theta), cos(phi)]`.
    pub fn unit_vector(self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vec3::new(sp * ct, sp * st, cp)
    }
}

// ============================================================================
// Cylindrical metasurface
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Outward normal along global `-x`.
    Left,
    /// Outward normal along global `+x`.
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn outward(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

/// Mounting pose of a door metasurface: position of the reference element
/// `p_c`, the vehicle side and an extra yaw about `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub origin: Vec3,
    pub side: Side,
    pub yaw: f64,
}

impl Pose {
    /// Reference element at the origin, door frame aligned with the global frame.
    pub const IDENTITY: Pose = Pose { origin: Vec3::ZERO, side: Side::Right, yaw: 0.0 };

    pub fn new(origin: Vec3, side: Side, yaw: f64) -> Self {
        Pose { origin, side, yaw }
    }

    fn rotation(&self) -> f64 {
        match self.side {
            Side::Right => self.yaw,
            Side::Left => self.yaw + PI,
        }
    }

    /// Door-frame vector expressed in the global frame.
    pub fn rotate_to_global(&self, v: Vec3) -> Vec3 {
        v.rotate_z(self.rotation())
    }

    /// Global vector expressed in the door frame.
    pub fn rotate_to_local(&self, v: Vec3) -> Vec3 {
        v.rotate_z(-self.rotation())
    }

    pub fn point_to_global(&self, v: Vec3) -> Vec3 {
        self.origin + self.rotate_to_global(v)
    }
}

/// One metasurface element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    /// Signed row index, `-M/2 ..= M/2 - 1`.
    pub m: i64,
    /// Column index, `0 ..= N - 1`.
    pub n: usize,
    /// Angular position on the cylinder, radians.
    pub psi: f64,
    /// Displacement from the reference element in the door frame.
    pub local: Vec3,
    pub position: Vec3,
    /// Outward unit normal in the global frame.
    pub normal: Vec3,
}

/// Layout of an `M x N` cylindrical metasurface.
///
/// Elements are stored row-major with flat index `l = (m + M/2) * N + n`.
/// An infinite radius gives the planar surface.
#[derive(Debug, Clone, PartialEq)]
pub struct CirsGeometry {
    rows: usize,
    cols: usize,
    radius: f64,
    d_m: f64,
    d_n: f64,
    pose: Pose,
    elements: Vec<Element>,
}

/// Angular step between adjacent rows, `2 asin(d_m / 2R)`; zero for a flat surface.
pub fn row_angle_step(radius: f64, d_m: f64) -> f64 {
    if radius.is_infinite() {
        0.0
    } else {
        2.0 * (d_m / (2.0 * radius)).asin()
    }
}

/// Surface area `L * 2R * psi_M` with `psi_M = M asin(d_m / 2R)` and `L = N d_n`.
pub fn surface_area_for(rows: usize, cols: usize, radius: f64, d_m: f64, d_n: f64) -> f64 {
    let length = cols as f64 * d_n;
    if radius.is_infinite() {
        return rows as f64 * d_m * length;
    }
    let sector = rows as f64 * (d_m / (2.0 * radius)).asin();
    length * 2.0 * radius * sector
}

impl CirsGeometry {
    pub fn new(rows: usize, cols: usize, radius: f64, d_m: f64, d_n: f64, pose: Pose) -> Result<Self, GeometryError> {
        if rows < 2 || !rows.is_multiple_of(2) {
            return Err(GeometryError::InvalidRows(rows));
        }
        if cols == 0 {
            return Err(GeometryError::NoColumns);
        }
        if radius.is_nan() || radius <= 0.0 {
            return Err(GeometryError::InvalidRadius(radius));
        }
        if !(d_m > 0.0 && d_n > 0.0 && d_m.is_finite() && d_n.is_finite()) {
            return Err(GeometryError::InvalidSpacing { d_m, d_n });
        }
        if d_m >= 2.0 * radius {
            return Err(GeometryError::SpacingExceedsDiameter { d_m, radius });
        }

        let step = row_angle_step(radius, d_m);
        let half = (rows / 2) as i64;
        let mut elements = Vec::with_capacity(rows * cols);
        for m in -half..half {
            let psi = m as f64 * step;
            let (x, z) = if radius.is_infinite() {
                (0.0, m as f64 * d_m)
            } else {
                (radius * (psi.cos() - 1.0), radius * psi.sin())
            };
            let normal = pose.rotate_to_global(Vec3::new(psi.cos(), 0.0, psi.sin()));
            for n in 0..cols {
                let local = Vec3::new(x, d_n * n as f64, z);
                elements.push(Element { m, n, psi, local, position: pose.point_to_global(local), normal });
            }
        }
        Ok(CirsGeometry { rows, cols, radius, d_m, d_n, pose, elements })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn row_spacing(&self) -> f64 {
        self.d_m
    }

    pub fn col_spacing(&self) -> f64 {
        self.d_n
    }

    pub fn pose(&self) -> &Pose {
        &self.pose
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, index: usize) -> Result<&Element, GeometryError> {
        self.elements.get(index).ok_or(GeometryError::IndexOutOfRange { index, count: self.elements.len() })
    }

    /// Flat index of element `(m, n)` with signed row index `m`.
    pub fn flat_index(&self, m: i64, n: usize) -> usize {
        (m + (self.rows / 2) as i64) as usize * self.cols + n
    }

    /// Angular position of each row, `psi_m`, in row order.
    pub fn row_angles(&self) -> Vec<f64> {
        self.elements.iter().step_by(self.cols).map(|e| e.psi).collect()
    }

    /// Half of the angular sector, `psi_M = M asin(d_m / 2R)`.
    pub fn half_sector(&self) -> f64 {
        0.5 * self.rows as f64 * row_angle_step(self.radius, self.d_m)
    }

    pub fn surface_area(&self) -> f64 {
        surface_area_for(self.rows, self.cols, self.radius, self.d_m, self.d_n)
    }

    /// Length of the surface along the cylinder axis, `N d_n`.
    pub fn length(&self) -> f64 {
        self.cols as f64 * self.d_n
    }

    /// Geometric center of the element cloud, global frame.
    pub fn center(&self) -> Vec3 {
        let sum = self.elements.iter().fold(Vec3::ZERO, |acc, e| acc + e.position);
        sum * (1.0 / self.elements.len() as f64)
    }

    /// Express a global direction in the door frame (pose only, no bending).
    pub fn to_door_frame(&self, global: AnglePair) -> AnglePair {
        AnglePair::from_vector(self.pose.rotate_to_local(global.unit_vector()))
    }

    pub fn from_door_frame(&self, door: AnglePair) -> AnglePair {
        AnglePair::from_vector(self.pose.rotate_to_global(door.unit_vector()))
    }

    /// Direction relative to element `index`: the element normal maps to
    /// `(theta = 0, phi = pi/2)`.
    pub fn global_to_local_angles(&self, index: usize, global: AnglePair) -> Result<AnglePair, GeometryError> {
        let psi = self.element(index)?.psi;
        let door = self.pose.rotate_to_local(global.unit_vector());
        Ok(AnglePair::from_vector(door.unbend(psi)))
    }

    pub fn local_to_global_angles(&self, index: usize, local: AnglePair) -> Result<AnglePair, GeometryError> {
        let psi = self.element(index)?.psi;
        let door = local.unit_vector().bend(psi);
        Ok(AnglePair::from_vector(self.pose.rotate_to_global(door)))
    }

    /// Cosine between a global direction and the normal of row `psi`, in the door frame.
    pub(crate) fn cos_to_row_normal(door_dir: Vec3, psi: f64) -> f64 {
        door_dir.x * psi.cos() + door_dir.z * psi.sin()
    }
}

// ============================================================================
// Road, vehicles, doors
// ============================================================================

/// Straight multi-lane road along `+y`, lanes centered laterally on `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadConfig {
    pub length: f64,
    pub lanes: usize,
    pub lane_width: f64,
}

impl Default for RoadConfig {
    fn default() -> Self {
        RoadConfig { length: 500.0, lanes: 5, lane_width: 5.0 }
    }
}

impl RoadConfig {
    pub fn width(&self) -> f64 {
        self.lanes as f64 * self.lane_width
    }

    pub fn lane_center(&self, lane: usize) -> f64 {
        (lane as f64 - (self.lanes as f64 - 1.0) / 2.0) * self.lane_width
    }

    pub fn center_lane(&self) -> usize {
        self.lanes / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleShape {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for VehicleShape {
    fn default() -> Self {
        VehicleShape { length: 5.0, width: 1.8, height: 1.5 }
    }
}

/// Axis-aligned rectangle in plan view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x_min < o.x_max && o.x_min < self.x_max && self.y_min < o.y_max && o.y_min < self.y_max
    }

    /// Whether the open segment `a -> b` (plan view) meets the closed rectangle.
    ///
    /// Liang-Barsky clipping of the parameter interval.
    pub fn intersects_segment(&self, a: (f64, f64), b: (f64, f64)) -> bool {
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        let checks = [(-dx, a.0 - self.x_min), (dx, self.x_max - a.0), (-dy, a.1 - self.y_min), (dy, self.y_max - a.1)];
        for (p, q) in checks {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let t = q / p;
                if p < 0.0 {
                    t0 = t0.max(t);
                } else {
                    t1 = t1.min(t);
                }
            }
        }
        t0 <= t1 && t0 < 1.0 && t1 > 0.0
    }
}

/// A box-shaped vehicle centered laterally in its lane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub lane: usize,
    /// Lateral center, m.
    pub x: f64,
    /// Longitudinal center, m.
    pub y: f64,
    pub shape: VehicleShape,
}

impl Vehicle {
    pub fn footprint(&self) -> Rect {
        Rect {
            x_min: self.x - self.shape.width / 2.0,
            x_max: self.x + self.shape.width / 2.0,
            y_min: self.y - self.shape.length / 2.0,
            y_max: self.y + self.shape.length / 2.0,
        }
    }

    /// Antenna array at the roof center.
    pub fn array_position(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.shape.height)
    }

    /// Center of the door on `side` at the given height.
    pub fn door_center(&self, side: Side, height: f64) -> Vec3 {
        Vec3::new(self.x + side.outward() * self.shape.width / 2.0, self.y, height)
    }
}

/// Door metasurface design shared by every vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoorSpec {
    pub rows: usize,
    pub cols: usize,
    pub radius: f64,
    pub d_m: f64,
    pub d_n: f64,
    /// Height of the reference row above ground, m.
    pub center_height: f64,
}

impl DoorSpec {
    /// Door length `L = N d_n`.
    pub fn length(&self) -> f64 {
        self.cols as f64 * self.d_n
    }

    /// Pose putting the door midway along the vehicle side, reference row at `center_height`.
    pub fn pose_on(&self, vehicle: &Vehicle, side: Side) -> Pose {
        let c = vehicle.door_center(side, self.center_height);
        let half_span = (self.cols as f64 - 1.0) * self.d_n / 2.0;
        // Right doors run local +y along global +y; left doors are rotated by pi.
        let origin = Vec3::new(c.x, c.y - side.outward() * half_span, c.z);
        Pose::new(origin, side, 0.0)
    }

    pub fn build_on(&self, vehicle: &Vehicle, side: Side) -> Result<CirsGeometry, GeometryError> {
        CirsGeometry::new(self.rows, self.cols, self.radius, self.d_m, self.d_n, self.pose_on(vehicle, side))
    }
}

/// Rectangle midway between TxV and RxV where a specular relay is useful.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecularArea {
    pub center: Vec3,
    /// Lateral extent `W_s = N_l w_l`.
    pub width: f64,
    /// Longitudinal extent `L_s = 2 L`.
    pub length: f64,
}

impl SpecularArea {
    pub fn contains(&self, p: Vec3) -> bool {
        (p.x - self.center.x).abs() <= self.width / 2.0 && (p.y - self.center.y).abs() <= self.length / 2.0
    }
}

/// Specular area for the pair `(p_t, p_r)`: longitudinally centered at their
/// midpoint, laterally spanning every lane of `road`.
pub fn specular_area(p_t: Vec3, p_r: Vec3, road: &RoadConfig, door_length: f64) -> SpecularArea {
    let mid = (p_t + p_r) * 0.5;
    SpecularArea { center: Vec3::new(0.0, mid.y, mid.z), width: road.width(), length: 2.0 * door_length }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelength;

    fn door(rows: usize, cols: usize, radius: f64, d: f64) -> CirsGeometry {
        CirsGeometry::new(rows, cols, radius, d, d, Pose::IDENTITY).unwrap()
    }

    #[test]
    fn reference_element_sits_at_origin() {
        let g = door(2, 1, 2.0, 0.003);
        let e = g.element(g.flat_index(0, 0)).unwrap();
        assert_eq!(e.psi, 0.0);
        assert!(e.local.norm() < 1e-15);
    }

    #[test]
    fn first_row_angle_at_28ghz() {
        let d = wavelength(28.0) / 4.0;
        let g = door(4, 1, 2.0, d);
        let psi1 = g.element(g.flat_index(1, 0)).unwrap().psi;
        // 2 asin(0.0026768 / 4)
        assert!((psi1 - 1.3384e-3).abs() < 1e-7, "{psi1}");
    }

    #[test]
    fn huge_radius_is_planar() {
        let d = wavelength(28.0) / 4.0;
        let g = door(400, 2, 1e6, d);
        for e in g.elements() {
            assert!(e.local.x.abs() < 1e-6);
            assert!((e.local.z - d * e.m as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn chord_between_rows_equals_spacing() {
        let g = door(40, 1, 0.5, 0.01);
        let els = g.elements();
        for w in els.windows(2) {
            let chord = w[0].local.distance(w[1].local);
            assert!((chord - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_spacing_beyond_diameter() {
        let err = CirsGeometry::new(2, 1, 0.1, 0.2, 0.01, Pose::IDENTITY).unwrap_err();
        assert!(matches!(err, GeometryError::SpacingExceedsDiameter { .. }));
        assert!(CirsGeometry::new(3, 1, 1.0, 0.01, 0.01, Pose::IDENTITY).is_err());
        assert!(CirsGeometry::new(2, 0, 1.0, 0.01, 0.01, Pose::IDENTITY).is_err());
    }

    #[test]
    fn area_matches_arc_length() {
        let d = wavelength(28.0) / 4.0;
        let curved = surface_area_for(400, 1, 2.0, d, 1.0);
        let flat = surface_area_for(400, 1, f64::INFINITY, d, 1.0);
        assert!((curved - 1.0707).abs() < 1e-3, "{curved}");
        assert!((flat - 400.0 * d).abs() < 1e-12);
        assert_eq!(surface_area_for(0, 1, 2.0, d, 1.0), 0.0);
    }

    #[test]
    fn normals_point_away_from_axis() {
        let pose = Pose::new(Vec3::new(3.0, 1.0, 0.7), Side::Left, 0.0);
        let g = CirsGeometry::new(8, 2, 0.5, 0.05, 0.05, pose).unwrap();
        let axis_x = 3.0 + 0.5; // left door: cylinder axis sits at +R inside the car
        for e in g.elements() {
            let radial = Vec3::new(e.position.x - axis_x, 0.0, e.position.z - 0.7);
            assert!((radial.normalized().dot(e.normal) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn broadside_and_tilted_local_angles() {
        let g = door(2, 1, 1.0, 0.01);
        let idx = g.flat_index(0, 0);
        let local = g.global_to_local_angles(idx, AnglePair::BROADSIDE).unwrap();
        assert!(local.theta.abs() < 1e-12);
        assert!((local.phi - PI / 2.0).abs() < 1e-12);

        // Rows on a cylinder with step pi/6.
        let r = 1.0;
        let d = 2.0 * r * (PI / 12.0).sin();
        let g = door(4, 1, r, d);
        let e = g.element(g.flat_index(1, 0)).unwrap();
        assert!((e.psi - PI / 6.0).abs() < 1e-12);
        let local = g.global_to_local_angles(g.flat_index(1, 0), AnglePair::BROADSIDE).unwrap();
        assert!((local.phi - (PI / 2.0 + PI / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn specular_area_example() {
        let road = RoadConfig::default();
        let a = specular_area(Vec3::new(0.0, 0.0, 1.5), Vec3::new(0.0, 100.0, 1.5), &road, 1.0);
        assert_eq!(a.center.y, 50.0);
        assert_eq!(a.center.x, 0.0);
        assert_eq!(a.width, 25.0);
        assert_eq!(a.length, 2.0);
        assert!(a.contains(Vec3::new(12.0, 50.0, 0.0)));
        assert!(!a.contains(Vec3::new(0.0, 53.0, 0.0)));
        let b = specular_area(Vec3::new(0.0, 100.0, 1.5), Vec3::new(0.0, 0.0, 1.5), &road, 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn segment_rectangle_cases() {
        let r = Rect { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 };
        assert!(r.intersects_segment((-5.0, 0.0), (5.0, 0.0)));
        assert!(!r.intersects_segment((-5.0, 2.0), (5.0, 2.0)));
        assert!(r.intersects_segment((0.0, 0.0), (0.2, 0.1)));
        assert!(!r.intersects_segment((2.0, 0.0), (5.0, 0.0)));
        assert!(r.intersects_segment((-3.0, -3.0), (3.0, 3.0)));
        assert!(!r.intersects_segment((-3.0, 0.0), (0.0, 3.0)));
    }

    #[test]
    fn door_pose_centers_door_on_vehicle() {
        let v = Vehicle { lane: 0, x: -10.0, y: 40.0, shape: VehicleShape::default() };
        let spec = DoorSpec { rows: 4, cols: 11, radius: 2.0, d_m: 0.01, d_n: 0.1, center_height: 0.75 };
        for side in Side::BOTH {
            let g = spec.build_on(&v, side).unwrap();
            let c = g.center();
            assert!((c.y - 40.0).abs() < 1e-9, "{side:?} {c:?}");
            assert!((c.x - (v.x + side.outward() * 0.9)).abs() < 1e-3);
            let n = g.element(g.flat_index(0, 0)).unwrap().normal;
            assert!((n.x - side.outward()).abs() < 1e-12);
        }
    }
}
