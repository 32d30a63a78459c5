//! Penetrate-drag-scoop (PDS) trajectories and the swivel, twist and dive
//! variations layered on top of them.
//!
//! The scoop's pitch is an elevation angle of its cutting direction:
//! negative is nose-down. The tool x-axis of every planned pose points along
//! the cutting direction, so a planned rotation is
//! `compose_euler(yaw, -pitch, roll)`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{compose_euler, Pose};

/// Entries in the chord-length table used to walk the Bézier at constant speed.
const CHORD_TABLE_POINTS: usize = 20;

/// Shape and timing of a dig, independent of where it starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdsSettings {
    /// Yaw of the dig plane about z, radians.
    pub heading: f64,
    /// Attack angle, radians in `[π/2, π)`; the tip descends at `π - attack_angle`
    /// below the heading direction.
    pub attack_angle: f64,
    /// Meters below the surface at the end of penetration.
    pub depth: f64,
    pub drag_length: f64,
    /// Final pitch after the scooping rotation, radians (elevation).
    pub closing_angle: f64,
    /// Height above the start surface at the end of the ascent, meters.
    pub lift_height: f64,
    /// Tip speed along the penetrate, drag and ascent segments, m/s.
    pub tip_speed: f64,
    /// Duration of the in-place scooping rotation, seconds.
    pub rotation_time: f64,
    pub sample_dt: f64,
}

impl Default for PdsSettings {
    fn default() -> Self {
        Self {
            heading: 0.0,
            attack_angle: 5.0 * PI / 6.0,
            depth: 0.07,
            drag_length: 0.25,
            closing_angle: PI / 3.0,
            lift_height: 0.10,
            tip_speed: 0.05,
            rotation_time: 1.5,
            sample_dt: 0.008,
        }
    }
}

impl PdsSettings {
    pub fn validate(&self) -> Result<()> {
        check_finite("pds.heading", self.heading)?;
        if !(self.attack_angle >= PI / 2.0 && self.attack_angle < PI) {
            return Err(Error::invalid(
                "pds.attack_angle",
                format!("{} is outside [π/2, π)", self.attack_angle),
            ));
        }
        check_positive("pds.depth", self.depth)?;
        if !(self.drag_length >= 0.0) || !self.drag_length.is_finite() {
            return Err(Error::invalid("pds.drag_length", "must be >= 0"));
        }
        if !(self.closing_angle.abs() < PI / 2.0) {
            return Err(Error::invalid(
                "pds.closing_angle",
                format!("{} is outside (-π/2, π/2)", self.closing_angle),
            ));
        }
        if !(self.lift_height >= 0.0) || !self.lift_height.is_finite() {
            return Err(Error::invalid("pds.lift_height", "must be >= 0"));
        }
        check_positive("pds.tip_speed", self.tip_speed)?;
        check_positive("pds.rotation_time", self.rotation_time)?;
        check_positive("pds.sample_dt", self.sample_dt)?;
        Ok(())
    }
}

/// A fully timed dig starting at a surface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdsParams {
    /// Penetration point on the surface.
    pub start: Vector3<f64>,
    pub heading: f64,
    pub attack_angle: f64,
    pub depth: f64,
    pub drag_length: f64,
    pub closing_angle: f64,
    pub lift_height: f64,
    /// End of penetration.
    pub t1: f64,
    /// End of drag.
    pub t2: f64,
    /// End of the scoop phase.
    pub t3: f64,
    /// Portion of the scoop phase spent rotating about the tip.
    pub rotation_time: f64,
    pub sample_dt: f64,
}

impl PdsParams {
    /// Derives phase times from the settings' tip speed.
    pub fn new(start: Vector3<f64>, settings: &PdsSettings) -> Result<Self> {
        settings.validate()?;
        let descent = PI - settings.attack_angle;
        let penetration_length = settings.depth / descent.sin();
        let t1 = penetration_length / settings.tip_speed;
        let t2 = t1 + settings.drag_length / settings.tip_speed;
        let ascent = settings.depth + settings.lift_height;
        let t3 = t2 + settings.rotation_time + ascent / settings.tip_speed;
        let params = Self {
            start,
            heading: settings.heading,
            attack_angle: settings.attack_angle,
            depth: settings.depth,
            drag_length: settings.drag_length,
            closing_angle: settings.closing_angle,
            lift_height: settings.lift_height,
            t1,
            t2,
            t3,
            rotation_time: settings.rotation_time,
            sample_dt: settings.sample_dt,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.start.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("pds.start", "non-finite component"));
        }
        check_positive("pds.depth", self.depth)?;
        if !(self.drag_length >= 0.0) {
            return Err(Error::invalid("pds.drag_length", "must be >= 0"));
        }
        if !(self.attack_angle >= PI / 2.0 && self.attack_angle < PI) {
            return Err(Error::invalid("pds.attack_angle", "outside [π/2, π)"));
        }
        // A zero-length drag collapses t1 onto t2.
        if !(0.0 < self.t1 && self.t1 <= self.t2 && self.t2 < self.t3) {
            return Err(Error::invalid(
                "pds.phase_times",
                format!(
                    "need 0 < t1 <= t2 < t3, got {}, {}, {}",
                    self.t1, self.t2, self.t3
                ),
            ));
        }
        if !(self.rotation_time > 0.0 && self.rotation_time < self.t3 - self.t2) {
            return Err(Error::invalid(
                "pds.rotation_time",
                "must be positive and shorter than the scoop phase",
            ));
        }
        check_positive("pds.sample_dt", self.sample_dt)
    }

    pub fn heading_direction(&self) -> Vector3<f64> {
        Vector3::new(self.heading.cos(), self.heading.sin(), 0.0)
    }

    /// Unit direction of the straight penetration segment.
    pub fn penetration_direction(&self) -> Vector3<f64> {
        let descent = PI - self.attack_angle;
        self.heading_direction() * descent.cos() - Vector3::z() * descent.sin()
    }

    pub fn penetration_length(&self) -> f64 {
        self.depth / (PI - self.attack_angle).sin()
    }

    /// Where the straight penetration reaches `depth`.
    pub fn drag_start(&self) -> Vector3<f64> {
        self.start + self.penetration_direction() * self.penetration_length()
    }

    pub fn drag_end(&self) -> Vector3<f64> {
        self.drag_start() + self.heading_direction() * self.drag_length
    }

    /// Pitch held through penetration and drag by the plain PDS.
    pub fn attack_pitch(&self) -> f64 {
        self.attack_angle - PI
    }
}

/// Oscillation and dive settings. Frequencies are angular, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrimitiveParams {
    pub swivel_amplitude: f64,
    pub swivel_frequency: f64,
    pub twist_amplitude: f64,
    pub twist_frequency: f64,
    /// Dive curve factor in `[0, 1]`.
    pub dive: f64,
}

impl PrimitiveParams {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("primitives.swivel_amplitude", self.swivel_amplitude),
            ("primitives.swivel_frequency", self.swivel_frequency),
            ("primitives.twist_amplitude", self.twist_amplitude),
            ("primitives.twist_frequency", self.twist_frequency),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::invalid(field, format!("{value} must be >= 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.dive) {
            return Err(Error::invalid(
                "primitives.dive",
                format!("{} is outside the valid interval [0, 1]", self.dive),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Penetrate,
    Drag,
    Scoop,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Penetrate => "penetrate",
            Phase::Drag => "drag",
            Phase::Scoop => "scoop",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanSample {
    pub t: f64,
    pub phase: Phase,
    pub pose: Pose,
    pub yaw: f64,
    /// Elevation of the cutting direction.
    pub pitch: f64,
    pub roll: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPlan {
    pub samples: Vec<PlanSample>,
    pub sample_dt: f64,
}

impl TrajectoryPlan {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of controller steps the plan spans.
    pub fn steps(&self) -> usize {
        self.samples.len().saturating_sub(1)
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }
}

/// `A·sin(ω·t)`, yaw added to the heading during penetrate and drag.
pub fn swivel_angle(t: f64, amplitude: f64, frequency: f64) -> f64 {
    amplitude * (frequency * t).sin()
}

/// `A·sin(ω·t)`, roll about the scoop's longitudinal axis.
pub fn twist_angle(t: f64, amplitude: f64, frequency: f64) -> f64 {
    amplitude * (frequency * t).sin()
}

pub fn bezier_quadratic(
    p0: &Vector3<f64>,
    p1: &Vector3<f64>,
    p2: &Vector3<f64>,
    u: f64,
) -> Result<Vector3<f64>> {
    check_unit_interval("u", u)?;
    Ok(bezier_point(p0, p1, p2, u))
}

fn bezier_point(p0: &Vector3<f64>, p1: &Vector3<f64>, p2: &Vector3<f64>, u: f64) -> Vector3<f64> {
    let w = 1.0 - u;
    p0 * (w * w) + p1 * (2.0 * u * w) + p2 * (u * u)
}

fn bezier_tangent(p0: &Vector3<f64>, p1: &Vector3<f64>, p2: &Vector3<f64>, u: f64) -> Vector3<f64> {
    (p1 - p0) * (2.0 * (1.0 - u)) + (p2 - p1) * (2.0 * u)
}

/// Pitch keeping the cutting edge tangent to a path with the given
/// derivative: `atan2(vertical rate, horizontal speed)`.
pub fn dive_pitch(derivative: &Vector3<f64>) -> Result<f64> {
    let horizontal = derivative.x.hypot(derivative.y);
    if horizontal == 0.0 && derivative.z == 0.0 || !derivative.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid(
            "path_derivative",
            "zero or non-finite velocity has no tangent pitch",
        ));
    }
    Ok(derivative.z.atan2(horizontal))
}

/// Tip position at normalized progress `u` through penetrate+drag with dive
/// factor `dive`.
pub fn dive_position(u: f64, dive: f64, pds: &PdsParams) -> Result<Vector3<f64>> {
    check_unit_interval("u", u)?;
    check_unit_interval("dive", dive)?;
    Ok(DivePath::new(pds, dive).position(u))
}

/// Penetrate+drag path blended between the straight PDS polyline and the
/// quadratic Bézier through the penetration point, the drag start and the
/// drag end. Both curves are walked at constant speed in `u`.
#[derive(Debug, Clone)]
pub struct DivePath {
    start: Vector3<f64>,
    drag_start: Vector3<f64>,
    drag_end: Vector3<f64>,
    penetration_dir: Vector3<f64>,
    heading_dir: Vector3<f64>,
    penetration_length: f64,
    polyline_length: f64,
    dive: f64,
    /// Cumulative chord lengths at `j / (CHORD_TABLE_POINTS - 1)`.
    chords: [f64; CHORD_TABLE_POINTS],
}

impl DivePath {
    pub fn new(pds: &PdsParams, dive: f64) -> Self {
        let start = pds.start;
        let drag_start = pds.drag_start();
        let drag_end = pds.drag_end();
        let mut chords = [0.0; CHORD_TABLE_POINTS];
        let step = 1.0 / (CHORD_TABLE_POINTS - 1) as f64;
        let mut prev = start;
        for (j, c) in chords.iter_mut().enumerate().skip(1) {
            let p = bezier_point(&start, &drag_start, &drag_end, j as f64 * step);
            *c = (p - prev).norm();
            prev = p;
        }
        for j in 1..CHORD_TABLE_POINTS {
            chords[j] += chords[j - 1];
        }
        let penetration_length = pds.penetration_length();
        Self {
            start,
            drag_start,
            drag_end,
            penetration_dir: pds.penetration_direction(),
            heading_dir: pds.heading_direction(),
            penetration_length,
            polyline_length: penetration_length + pds.drag_length,
            dive,
            chords,
        }
    }

    fn polyline(&self, u: f64) -> (Vector3<f64>, Vector3<f64>) {
        let s = u * self.polyline_length;
        if s < self.penetration_length {
            (
                self.start + self.penetration_dir * s,
                self.penetration_dir * self.polyline_length,
            )
        } else {
            (
                self.drag_start + self.heading_dir * (s - self.penetration_length),
                self.heading_dir * self.polyline_length,
            )
        }
    }

    /// Bézier parameter at arc fraction `u`, and its derivative.
    fn bezier_parameter(&self, u: f64) -> (f64, f64) {
        let total = self.chords[CHORD_TABLE_POINTS - 1];
        if total == 0.0 {
            return (u, 1.0);
        }
        let target = u * total;
        let j = self.chords[1..]
            .partition_point(|&c| c < target)
            .min(CHORD_TABLE_POINTS - 2);
        let step = 1.0 / (CHORD_TABLE_POINTS - 1) as f64;
        let seg = self.chords[j + 1] - self.chords[j];
        let frac = if seg > 0.0 {
            (target - self.chords[j]) / seg
        } else {
            0.0
        };
        let dv_du = if seg > 0.0 { total / seg * step } else { 0.0 };
        ((j as f64 + frac) * step, dv_du)
    }

    fn bezier(&self, u: f64) -> (Vector3<f64>, Vector3<f64>) {
        let (v, dv_du) = self.bezier_parameter(u);
        (
            bezier_point(&self.start, &self.drag_start, &self.drag_end, v),
            bezier_tangent(&self.start, &self.drag_start, &self.drag_end, v) * dv_du,
        )
    }

    pub fn position(&self, u: f64) -> Vector3<f64> {
        if self.dive == 0.0 {
            return self.polyline(u).0;
        }
        let (a, _) = self.polyline(u);
        let (b, _) = self.bezier(u);
        a * (1.0 - self.dive) + b * self.dive
    }

    /// Derivative of [`position`](Self::position) with respect to `u`.
    pub fn derivative(&self, u: f64) -> Vector3<f64> {
        let (_, da) = self.polyline(u);
        if self.dive == 0.0 {
            return da;
        }
        let (_, db) = self.bezier(u);
        da * (1.0 - self.dive) + db * self.dive
    }
}

/// Samples the full loading cycle with the primitives applied.
pub fn generate_plan(pds: &PdsParams, prim: &PrimitiveParams) -> Result<TrajectoryPlan> {
    pds.validate()?;
    prim.validate()?;

    let path = DivePath::new(pds, prim.dive);
    let dt = pds.sample_dt;
    let steps = (pds.t3 / dt - 1e-9).ceil().max(1.0) as usize;
    let attack = pds.attack_pitch();

    let pitch_at = |u: f64| -> f64 {
        if prim.dive == 0.0 {
            attack
        } else {
            // A vanishing tangent only happens at the end of a zero-length drag.
            dive_pitch(&path.derivative(u)).unwrap_or(attack)
        }
    };
    let swivel_end = swivel_angle(pds.t2, prim.swivel_amplitude, prim.swivel_frequency);
    let twist_end = twist_angle(pds.t2, prim.twist_amplitude, prim.twist_frequency);
    let pitch_end = pitch_at(1.0);
    let scoop_duration = pds.t3 - pds.t2;
    let lift_speed = (pds.depth + pds.lift_height) / (scoop_duration - pds.rotation_time);
    let lift_top = pds.start.z + pds.lift_height;

    let mut samples = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let tau = t.min(pds.t3);
        let (phase, position, yaw_offset, pitch, roll) = if tau <= pds.t2 {
            let u = if pds.t2 > 0.0 { tau / pds.t2 } else { 1.0 };
            let phase = if tau < pds.t1 {
                Phase::Penetrate
            } else {
                Phase::Drag
            };
            (
                phase,
                path.position(u),
                swivel_angle(tau, prim.swivel_amplitude, prim.swivel_frequency),
                pitch_at(u),
                twist_angle(tau, prim.twist_amplitude, prim.twist_frequency),
            )
        } else {
            let elapsed = tau - pds.t2;
            let fade = 1.0 - elapsed / scoop_duration;
            let pitch = if elapsed < pds.rotation_time {
                pitch_end + (pds.closing_angle - pitch_end) * (elapsed / pds.rotation_time)
            } else {
                pds.closing_angle
            };
            let mut position = path.position(1.0);
            if elapsed > pds.rotation_time {
                position.z =
                    (position.z + (elapsed - pds.rotation_time) * lift_speed).min(lift_top);
            }
            if tau == pds.t3 {
                position.z = lift_top;
            }
            (
                Phase::Scoop,
                position,
                swivel_end * fade,
                pitch,
                twist_end * fade,
            )
        };
        let yaw = pds.heading + yaw_offset;
        samples.push(PlanSample {
            t,
            phase,
            pose: Pose {
                rotation: compose_euler(yaw, -pitch, roll),
                position,
            },
            yaw,
            pitch,
            roll,
        });
    }
    Ok(TrajectoryPlan {
        samples,
        sample_dt: dt,
    })
}

fn check_finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be finite"))
    }
}

fn check_positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} must be > 0")))
    }
}

fn check_unit_interval(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} is outside [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

    use approx::assert_abs_diff_eq;
    use nalgebra::{Matrix3, Vector2};
    use proptest::prelude::*;

    use super::*;
    use crate::geometry::{orthonormality_error, pose_difference};

    fn default_pds() -> PdsParams {
        PdsParams::new(Vector3::new(0.2, 0.3, 0.0), &PdsSettings::default()).unwrap()
    }

    #[test]
    fn swivel_and_twist_values() {
        assert_eq!(swivel_angle(0.0, 0.7, 3.0), 0.0);
        assert_abs_diff_eq!(swivel_angle(0.5, FRAC_PI_8, PI), FRAC_PI_8, epsilon = 1e-15);
        assert_eq!(twist_angle(0.0, PI / 6.0, 2.0 * PI), 0.0);
        // ω·t = 3π/2
        assert_abs_diff_eq!(
            twist_angle(0.75, PI / 12.0, 2.0 * PI),
            -PI / 12.0,
            epsilon = 1e-15
        );
        for t in [0.0, 0.3, 10.0] {
            assert_eq!(twist_angle(t, 0.0, 4.0 * PI), 0.0);
        }
    }

    #[test]
    fn bezier_endpoints_and_midpoint() {
        let p0 = Vector3::new(0.0, 0.0, 0.0);
        let p1 = Vector3::new(1.0, 0.0, 0.0);
        let p2 = Vector3::new(1.0, 0.0, 1.0);
        assert_eq!(bezier_quadratic(&p0, &p1, &p2, 0.0).unwrap(), p0);
        assert_eq!(bezier_quadratic(&p0, &p1, &p2, 1.0).unwrap(), p2);
        assert_abs_diff_eq!(
            bezier_quadratic(&p0, &p1, &p2, 0.5).unwrap(),
            Vector3::new(0.75, 0.0, 0.25),
            epsilon = 1e-15
        );
        assert!(bezier_quadratic(&p0, &p1, &p2, 1.2).is_err());
        assert!(bezier_quadratic(&p0, &p1, &p2, -0.1).is_err());
    }

    /// Barycentric-coordinate oracle for membership in the triangle hull.
    fn in_hull(q: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> bool {
        let e1 = b - a;
        let e2 = c - a;
        let gram = nalgebra::Matrix2::new(e1.dot(&e1), e1.dot(&e2), e1.dot(&e2), e2.dot(&e2));
        let rhs = Vector2::new(e1.dot(&(q - a)), e2.dot(&(q - a)));
        let Some(inv) = gram.try_inverse() else {
            return true;
        };
        let w = inv * rhs;
        let residual = (a + e1 * w.x + e2 * w.y - q).norm();
        let tol = 1e-9;
        w.x >= -tol && w.y >= -tol && w.x + w.y <= 1.0 + tol && residual < 1e-9
    }

    proptest! {
        #[test]
        fn bezier_midpoint_in_convex_hull(
            a in prop::array::uniform3(-1.0f64..1.0),
            b in prop::array::uniform3(-1.0f64..1.0),
            c in prop::array::uniform3(-1.0f64..1.0),
        ) {
            let (a, b, c) = (Vector3::from(a), Vector3::from(b), Vector3::from(c));
            let m = bezier_quadratic(&a, &b, &c, 0.5).unwrap();
            prop_assert!(in_hull(&m, &a, &b, &c));
        }
    }

    #[test]
    fn dive_pitch_values() {
        assert_eq!(dive_pitch(&Vector3::new(1.0, 0.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            dive_pitch(&Vector3::new(1.0, 0.0, -1.0)).unwrap(),
            -FRAC_PI_4,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            dive_pitch(&Vector3::new(0.0, 0.0, -1.0)).unwrap(),
            -FRAC_PI_2,
            epsilon = 1e-15
        );
        assert!(dive_pitch(&Vector3::zeros()).is_err());
    }

    #[test]
    fn dive_zero_is_the_pds_polyline() {
        let pds = default_pds();
        let l_pen = pds.penetration_length();
        let total = l_pen + pds.drag_length;
        for i in 0..=50 {
            let u = i as f64 / 50.0;
            let s = u * total;
            let expect = if s < l_pen {
                pds.start + pds.penetration_direction() * s
            } else {
                pds.drag_start() + pds.heading_direction() * (s - l_pen)
            };
            assert_abs_diff_eq!(
                dive_position(u, 0.0, &pds).unwrap(),
                expect,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn dive_endpoints_shared_for_all_blends() {
        let pds = default_pds();
        for s in [0.0, 0.5, 1.0] {
            assert_abs_diff_eq!(
                dive_position(0.0, s, &pds).unwrap(),
                pds.start,
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(
                dive_position(1.0, s, &pds).unwrap(),
                pds.drag_end(),
                epsilon = 1e-12
            );
        }
        assert!(dive_position(0.5, 1.5, &pds).is_err());
    }

    #[test]
    fn full_dive_is_c1_through_the_former_corner() {
        let pds = default_pds();
        let path = DivePath::new(&pds, 1.0);
        let mut prev: Option<Vector3<f64>> = None;
        for i in 0..=400 {
            let u = i as f64 / 400.0;
            let tangent = path.derivative(u).normalize();
            if let Some(p) = prev {
                // Direction changes smoothly: no jump larger than the curvature allows.
                assert!(p.dot(&tangent) > (0.02f64).cos(), "kink at u = {u}");
            }
            prev = Some(tangent);
        }
    }

    #[test]
    fn default_dig_reaches_depth_along_attack_direction() {
        let pds = default_pds();
        let end = pds.drag_start();
        assert_abs_diff_eq!(end.z, pds.start.z - 0.07, epsilon = 1e-15);
        let dir = (end - pds.start).normalize();
        assert_abs_diff_eq!(dir, pds.penetration_direction(), epsilon = 1e-15);
        // 5π/6 attack: 30° descent.
        assert_abs_diff_eq!(dir.z, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn plan_times_uniform_and_terminal_pose() {
        let pds = default_pds();
        let prim = PrimitiveParams {
            swivel_amplitude: FRAC_PI_8,
            swivel_frequency: PI,
            twist_amplitude: PI / 12.0,
            twist_frequency: 2.0 * PI,
            dive: 0.5,
        };
        let plan = generate_plan(&pds, &prim).unwrap();
        for w in plan.samples.windows(2) {
            assert_abs_diff_eq!(w[1].t - w[0].t, pds.sample_dt, epsilon = 1e-12);
            let d = pose_difference(&w[1].pose, &w[0].pose).unwrap();
            assert!(d.rotational.amax() < FRAC_PI_2);
        }
        let last = plan.samples.last().unwrap();
        assert_eq!(last.roll, 0.0);
        assert_eq!(last.yaw, pds.heading);
        assert_eq!(last.pitch, pds.closing_angle);
        assert_abs_diff_eq!(
            last.pose.position.z,
            pds.start.z + pds.lift_height,
            epsilon = 1e-15
        );
        assert_eq!(last.phase, Phase::Scoop);
        assert_eq!(plan.samples[0].phase, Phase::Penetrate);
        assert!(plan.samples.iter().any(|s| s.phase == Phase::Drag));
    }

    #[test]
    fn plan_rotations_are_proper() {
        let pds = default_pds();
        let prim = PrimitiveParams {
            swivel_amplitude: 3.0 * PI / 16.0,
            swivel_frequency: 4.0 * PI,
            twist_amplitude: FRAC_PI_4,
            twist_frequency: 4.0 * PI,
            dive: 1.0,
        };
        let plan = generate_plan(&pds, &prim).unwrap();
        for s in &plan.samples {
            assert!(orthonormality_error(&s.pose.rotation) < 1e-12);
            assert!(s.pose.rotation.determinant() > 0.0);
        }
    }

    #[test]
    fn swivel_and_twist_bounded_during_penetrate_and_drag() {
        let pds = default_pds();
        let prim = PrimitiveParams {
            swivel_amplitude: FRAC_PI_8,
            swivel_frequency: 2.0 * PI,
            twist_amplitude: PI / 6.0,
            twist_frequency: PI,
            dive: 0.0,
        };
        let plan = generate_plan(&pds, &prim).unwrap();
        for s in plan.samples.iter().filter(|s| s.phase != Phase::Scoop) {
            assert!((s.yaw - pds.heading).abs() <= prim.swivel_amplitude);
            assert!(s.roll.abs() <= prim.twist_amplitude);
        }
    }

    #[test]
    fn tool_axis_follows_pitch_and_yaw() {
        let pds = default_pds();
        let plan = generate_plan(&pds, &PrimitiveParams::none()).unwrap();
        let s = &plan.samples[10];
        let fwd = s.pose.forward();
        assert_abs_diff_eq!(fwd, pds.penetration_direction(), epsilon = 1e-15);
        let expected: Matrix3<f64> = compose_euler(s.yaw, -s.pitch, s.roll);
        assert_eq!(s.pose.rotation, expected);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let pds = default_pds();
        let bad = PrimitiveParams {
            dive: 1.5,
            ..PrimitiveParams::none()
        };
        let err = generate_plan(&pds, &bad).unwrap_err().to_string();
        assert!(err.contains("primitives.dive"), "{err}");
        assert!(err.contains("[0, 1]"), "{err}");
        let settings = PdsSettings {
            depth: 0.0,
            ..PdsSettings::default()
        };
        assert!(PdsParams::new(Vector3::zeros(), &settings).is_err());
    }
}
