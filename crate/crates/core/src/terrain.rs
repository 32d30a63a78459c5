//! Simulated terrain: the plant the controllers dig against.
//!
//! The model is deliberately small. A penetration spring pushes the scoop
//! up, rate friction resists horizontal motion, seeded jam sites anchor a
//! stiff spring against the drag until enough transverse rotation (swivel or
//! twist) breaks them, and rigid obstacles add penalty contact with Coulomb
//! friction. A heightmap records removed material for the volume metric.
//!
//! Wrenches are reactions on the scoop tip, world frame. [`terrain_wrench`]
//! is a pure function of the state; all randomness is drawn when the state
//! is built or advanced.

use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, PoseDelta, Wrench};

/// Heightmap cell edge, meters.
pub const CELL_SIZE: f64 = 0.005;
/// Terrain box extent along x and y, meters, with its corner at the origin.
pub const BOX_SIZE: [f64; 2] = [0.9, 0.6];
/// Scoop mouth width across the cutting edge, meters.
pub const SCOOP_WIDTH: f64 = 0.10;
/// Scoop body length behind the cutting edge, meters.
pub const SCOOP_LENGTH: f64 = 0.12;
/// The heightmap is probed this far ahead of the edge, before it is carved.
pub const PROBE_AHEAD: f64 = 0.005;
/// Samples across the cutting edge.
pub const EDGE_SAMPLES: usize = 11;
/// Mean edge depth above which the scoop counts as embedded.
pub const EMBED_DEPTH: f64 = 0.01;
/// Noise draws are clipped to this many standard deviations.
const NOISE_CLIP: f64 = 3.0;

/// Constants of one material. Preset values are calibration artifacts of the
/// simulated plant, not measured material properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrainModel {
    pub name: String,
    /// Initial flat surface, meters.
    pub surface_height: f64,
    /// Vertical resistance per meter of mean edge depth, N/m.
    pub resistance_stiffness: f64,
    /// Horizontal friction per meter of depth per m/s, N·s/m².
    pub drag_friction: f64,
    /// Rotational drag per meter of depth per rad/s, N·m·s/(rad·m).
    pub rotational_drag: f64,
    /// Expected jam sites per meter of embedded horizontal travel.
    pub jam_density: f64,
    /// Horizontal force needed to arm a jam at a site, N.
    pub jam_onset_threshold: f64,
    pub jam_stiffness: f64,
    /// Accumulated |Δyaw| + |Δroll| that breaks a jam, radians.
    pub jam_release_travel: f64,
    /// Fraction of removed material that ends up in the scoop, (0, 1].
    pub capture_efficiency: f64,
    /// Beyond this |roll| capture efficiency halves, radians.
    pub spill_roll_threshold: f64,
    /// Relative standard deviation of multiplicative force noise.
    pub force_noise: f64,
}

impl TerrainModel {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("terrain.resistance_stiffness", self.resistance_stiffness),
            ("terrain.drag_friction", self.drag_friction),
            ("terrain.rotational_drag", self.rotational_drag),
            ("terrain.jam_onset_threshold", self.jam_onset_threshold),
            ("terrain.jam_stiffness", self.jam_stiffness),
            ("terrain.spill_roll_threshold", self.spill_roll_threshold),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(field, format!("{v} must be > 0")));
            }
        }
        for (field, v) in [
            ("terrain.jam_density", self.jam_density),
            ("terrain.jam_release_travel", self.jam_release_travel),
            ("terrain.force_noise", self.force_noise),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(field, format!("{v} must be >= 0")));
            }
        }
        if !(self.capture_efficiency > 0.0 && self.capture_efficiency <= 1.0) {
            return Err(Error::invalid(
                "terrain.capture_efficiency",
                format!(
                    "{} is outside the valid interval (0, 1]",
                    self.capture_efficiency
                ),
            ));
        }
        if !self.surface_height.is_finite() {
            return Err(Error::invalid("terrain.surface_height", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[serde(alias = "Pebbles", alias = "PEBBLES")]
    Pebbles,
    #[serde(alias = "Gravel", alias = "GRAVEL")]
    Gravel,
    #[serde(alias = "Slate", alias = "SLATE")]
    Slate,
    #[serde(alias = "Mulch", alias = "MULCH")]
    Mulch,
    #[serde(alias = "Soil", alias = "SOIL")]
    Soil,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Pebbles,
        Preset::Gravel,
        Preset::Slate,
        Preset::Mulch,
        Preset::Soil,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Pebbles => "pebbles",
            Preset::Gravel => "gravel",
            Preset::Slate => "slate",
            Preset::Mulch => "mulch",
            Preset::Soil => "soil",
        }
    }

    fn source(self) -> &'static str {
        match self {
            Preset::Pebbles => include_str!("../presets/pebbles.toml"),
            Preset::Gravel => include_str!("../presets/gravel.toml"),
            Preset::Slate => include_str!("../presets/slate.toml"),
            Preset::Mulch => include_str!("../presets/mulch.toml"),
            Preset::Soil => include_str!("../presets/soil.toml"),
        }
    }

    /// The preset's frozen constants.
    pub fn model(self) -> TerrainModel {
        static MODELS: OnceLock<Vec<TerrainModel>> = OnceLock::new();
        let models = MODELS.get_or_init(|| {
            Preset::ALL
                .iter()
                .map(|p| {
                    let m: TerrainModel = toml::from_str(p.source())
                        .unwrap_or_else(|e| panic!("preset {} is malformed: {e}", p.name()));
                    m.validate()
                        .unwrap_or_else(|e| panic!("preset {} is invalid: {e}", p.name()));
                    m
                })
                .collect()
        });
        models[self as usize].clone()
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::invalid(
                    "terrain",
                    format!(
                        "unknown preset `{s}` (expected pebbles, gravel, slate, mulch or soil)"
                    ),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleKind {
    /// Solid where `normal · p < offset` and `z < top`; `normal` points out
    /// of the solid.
    RigidSlope {
        normal: [f64; 3],
        offset: f64,
        top: f64,
    },
    BuriedRock {
        center: [f64; 3],
        radius: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleModel {
    pub shape: ObstacleKind,
    /// Penalty stiffness, N/m; also the stiffness of the stick spring.
    pub contact_stiffness: f64,
    /// Coulomb coefficient.
    #[serde(default = "default_obstacle_friction")]
    pub friction: f64,
}

fn default_obstacle_friction() -> f64 {
    0.8
}

impl ObstacleModel {
    pub fn validate(&self, terrain: &TerrainModel) -> Result<()> {
        if !(self.contact_stiffness >= 100.0 * terrain.resistance_stiffness) {
            return Err(Error::invalid(
                "obstacles.contact_stiffness",
                format!(
                    "{} must be at least 100 x terrain stiffness ({})",
                    self.contact_stiffness,
                    100.0 * terrain.resistance_stiffness
                ),
            ));
        }
        if !(self.friction >= 0.0) || !self.friction.is_finite() {
            return Err(Error::invalid("obstacles.friction", "must be >= 0"));
        }
        match self.shape {
            ObstacleKind::RigidSlope { normal, .. } => {
                if !(Vector3::from(normal).norm() > 0.0) {
                    return Err(Error::invalid("obstacles.normal", "must be nonzero"));
                }
            }
            ObstacleKind::BuriedRock { radius, .. } => {
                if !(radius > 0.0) {
                    return Err(Error::invalid("obstacles.radius", "must be > 0"));
                }
            }
        }
        Ok(())
    }

    /// Penetration depth and outward unit normal at `p`, if in contact.
    pub fn contact(&self, p: &Vector3<f64>) -> Option<(f64, Vector3<f64>)> {
        match self.shape {
            ObstacleKind::RigidSlope {
                normal,
                offset,
                top,
            } => {
                let n = Vector3::from(normal).normalize();
                let pen = offset - n.dot(p);
                (pen > 0.0 && p.z < top).then_some((pen, n))
            }
            ObstacleKind::BuriedRock { center, radius } => {
                let r = p - Vector3::from(center);
                let d = r.norm();
                (d < radius && d > 0.0).then(|| (radius - d, r / d))
            }
        }
    }
}

/// Surface heights on a regular grid over the terrain box.
#[derive(Debug, Clone, PartialEq)]
pub struct Heightmap {
    pub nx: usize,
    pub ny: usize,
    pub cell: f64,
    /// Height outside the grid and initial height of every cell.
    pub surface: f64,
    /// Row-major, `heights[iy * nx + ix]`.
    pub heights: Vec<f64>,
}

impl Heightmap {
    pub fn flat(surface: f64) -> Self {
        let nx = (BOX_SIZE[0] / CELL_SIZE).round() as usize;
        let ny = (BOX_SIZE[1] / CELL_SIZE).round() as usize;
        Self {
            nx,
            ny,
            cell: CELL_SIZE,
            surface,
            heights: vec![surface; nx * ny],
        }
    }

    fn index(&self, x: f64, y: f64) -> Option<usize> {
        let ix = (x / self.cell).floor();
        let iy = (y / self.cell).floor();
        if ix < 0.0 || iy < 0.0 || ix >= self.nx as f64 || iy >= self.ny as f64 {
            return None;
        }
        Some(iy as usize * self.nx + ix as usize)
    }

    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        self.index(x, y).map_or(self.surface, |i| self.heights[i])
    }

    /// Center of cell `(ix, iy)`.
    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        ((ix as f64 + 0.5) * self.cell, (iy as f64 + 0.5) * self.cell)
    }

    /// Material removed below the initial surface, m³.
    pub fn removed_volume(&self) -> f64 {
        let area = self.cell * self.cell;
        self.heights
            .iter()
            .map(|h| (self.surface - h).max(0.0) * area)
            .sum()
    }
}

/// An active jam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jam {
    pub anchor: Pose,
    /// Horizontal unit direction the jam resists.
    pub heading: Vector3<f64>,
    /// |Δyaw| + |Δroll| accumulated since the jam formed.
    pub transverse_travel: f64,
}

#[derive(Debug, Clone)]
pub struct TerrainState {
    pub heightmap: Heightmap,
    pub jam: Option<Jam>,
    /// cm³, non-decreasing.
    pub captured_volume: f64,
    /// cm³, material cut from the heightmap.
    pub removed_volume: f64,
    pub jams_formed: usize,
    embedded_travel: f64,
    next_jam_site: f64,
    contact_anchors: Vec<Option<Vector3<f64>>>,
    noise: Vec<f64>,
    step: usize,
    rng: ChaCha8Rng,
}

impl TerrainState {
    /// Fresh terrain for a run of `steps` control steps.
    pub fn new(model: &TerrainModel, obstacles: &[ObstacleModel], seed: u64, steps: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = (0..=steps)
            .map(|_| {
                let n: f64 = StandardNormal.sample(&mut rng);
                1.0 + model.force_noise * n.clamp(-NOISE_CLIP, NOISE_CLIP)
            })
            .collect();
        let mut state = Self {
            heightmap: Heightmap::flat(model.surface_height),
            jam: None,
            captured_volume: 0.0,
            removed_volume: 0.0,
            jams_formed: 0,
            embedded_travel: 0.0,
            next_jam_site: f64::INFINITY,
            contact_anchors: vec![None; obstacles.len()],
            noise,
            step: 0,
            rng,
        };
        state.next_jam_site = state.draw_jam_gap(model.jam_density);
        state
    }

    fn draw_jam_gap(&mut self, density: f64) -> f64 {
        match Exp::new(density) {
            Ok(exp) if density > 0.0 => exp.sample(&mut self.rng),
            _ => f64::INFINITY,
        }
    }

    /// Multiplicative noise factor applied at the current step.
    pub fn noise_factor(&self) -> f64 {
        self.noise.get(self.step).copied().unwrap_or(1.0)
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Mean depth of the cutting edge below the uncut surface just ahead of it.
    pub fn edge_depth(&self, pose: &Pose) -> f64 {
        let forward = pose.forward();
        let ahead = horizontal_unit(&forward).unwrap_or_else(Vector3::zeros) * PROBE_AHEAD;
        let lateral = pose.lateral();
        let mut sum = 0.0;
        for j in 0..EDGE_SAMPLES {
            let w = SCOOP_WIDTH * (j as f64 / (EDGE_SAMPLES - 1) as f64 - 0.5);
            let edge = pose.position + lateral * w;
            let probe = edge + ahead;
            sum += (self.heightmap.height_at(probe.x, probe.y) - edge.z).max(0.0);
        }
        sum / EDGE_SAMPLES as f64
    }

    pub fn is_embedded(&self, pose: &Pose) -> bool {
        self.edge_depth(pose) >= EMBED_DEPTH
    }

    /// Jam, excavation and contact bookkeeping after the scoop moved from
    /// `previous` to `current` while sensing `wrench`.
    pub fn advance(
        &mut self,
        previous: &Pose,
        current: &Pose,
        wrench: &Wrench,
        model: &TerrainModel,
        obstacles: &[ObstacleModel],
    ) {
        jam_update(self, previous, current, wrench, model);
        excavate_update(self, current, current.euler_zyx().2, model);
        self.update_contact_anchors(current, obstacles);
        self.step += 1;
    }

    fn update_contact_anchors(&mut self, pose: &Pose, obstacles: &[ObstacleModel]) {
        let p = pose.position;
        for (anchor, obstacle) in self.contact_anchors.iter_mut().zip(obstacles) {
            *anchor = match (obstacle.contact(&p), *anchor) {
                (None, _) => None,
                (Some(_), None) => Some(p),
                (Some((pen, n)), Some(a)) => {
                    let slip = tangential(&(p - a), &n);
                    let limit = obstacle.friction * pen;
                    let norm = slip.norm();
                    if norm > limit {
                        Some(p - slip * (limit / norm))
                    } else {
                        Some(a)
                    }
                }
            };
        }
    }
}

fn horizontal_unit(v: &Vector3<f64>) -> Option<Vector3<f64>> {
    let h = Vector3::new(v.x, v.y, 0.0);
    let n = h.norm();
    (n > 1e-9).then(|| h / n)
}

fn tangential(v: &Vector3<f64>, n: &Vector3<f64>) -> Vector3<f64> {
    v - n * n.dot(v)
}

/// Reaction wrench on the scoop tip.
pub fn terrain_wrench(
    state: &TerrainState,
    pose: &Pose,
    velocity: &PoseDelta,
    model: &TerrainModel,
    obstacles: &[ObstacleModel],
) -> Wrench {
    let depth = state.edge_depth(pose);
    let mut force = Vector3::zeros();
    let mut torque = Vector3::zeros();
    if depth > 0.0 {
        force.z += model.resistance_stiffness * depth;
        let v = velocity.translational;
        force -= Vector3::new(v.x, v.y, 0.0) * (model.drag_friction * depth);
        torque -= velocity.rotational * (model.rotational_drag * depth);
    }
    if let Some(jam) = &state.jam {
        force -= jam.heading * (model.jam_stiffness * jam_displacement(jam, pose));
    }
    let k = state.noise_factor();
    let mut wrench = Wrench::new(force * k, torque * k);
    for (obstacle, anchor) in obstacles.iter().zip(&state.contact_anchors) {
        wrench += obstacle_wrench(obstacle, anchor.as_ref(), &pose.position);
    }
    wrench
}

/// Displacement past the jam anchor along the jammed heading, clipped at 0.
pub fn jam_displacement(jam: &Jam, pose: &Pose) -> f64 {
    (pose.position - jam.anchor.position)
        .dot(&jam.heading)
        .max(0.0)
}

fn obstacle_wrench(
    obstacle: &ObstacleModel,
    anchor: Option<&Vector3<f64>>,
    p: &Vector3<f64>,
) -> Wrench {
    let Some((pen, n)) = obstacle.contact(p) else {
        return Wrench::zero();
    };
    let k = obstacle.contact_stiffness;
    let normal = n * (k * pen);
    let mut friction = anchor.map_or_else(Vector3::zeros, |a| tangential(&(p - a), &n) * -k);
    let limit = obstacle.friction * k * pen;
    let mag = friction.norm();
    if mag > limit {
        friction *= limit / mag;
    }
    Wrench::new(normal + friction, Vector3::zeros())
}

/// Forms, tracks and releases jams.
///
/// Embedded horizontal travel passes seeded jam sites; a site arms when the
/// sensed horizontal force has reached the onset threshold. A jam releases
/// once the scoop has rotated through the release travel in yaw plus roll,
/// or when it is no longer embedded.
pub fn jam_update(
    state: &mut TerrainState,
    previous: &Pose,
    current: &Pose,
    wrench: &Wrench,
    model: &TerrainModel,
) {
    let embedded = state.is_embedded(current);
    if let Some(jam) = state.jam.as_mut() {
        let (y0, _, r0) = previous.euler_zyx();
        let (y1, _, r1) = current.euler_zyx();
        jam.transverse_travel += angle_step(y1, y0).abs() + angle_step(r1, r0).abs();
        if jam.transverse_travel >= model.jam_release_travel || !embedded {
            state.jam = None;
        }
    }
    if !embedded {
        return;
    }
    let step = current.position - previous.position;
    state.embedded_travel += step.x.hypot(step.y);
    while state.embedded_travel >= state.next_jam_site {
        let gap = state.draw_jam_gap(model.jam_density);
        state.next_jam_site += gap;
        let horizontal_force = wrench.force.x.hypot(wrench.force.y);
        if state.jam.is_none()
            && horizontal_force >= model.jam_onset_threshold
            && model.jam_release_travel > 0.0
        {
            let heading = horizontal_unit(&step)
                .or_else(|| horizontal_unit(&current.forward()))
                .unwrap_or_else(Vector3::x);
            state.jam = Some(Jam {
                anchor: *current,
                heading,
                transverse_travel: 0.0,
            });
            state.jams_formed += 1;
        }
    }
}

fn angle_step(a: f64, b: f64) -> f64 {
    let d = a - b;
    d.sin().atan2(d.cos())
}

/// Lowers heightmap cells under the scoop body to its bottom and credits
/// the removed volume. Returns the volume removed this step, cm³.
pub fn excavate_update(
    state: &mut TerrainState,
    pose: &Pose,
    roll: f64,
    model: &TerrainModel,
) -> f64 {
    let forward = pose.forward();
    let Some(ahead) = horizontal_unit(&forward) else {
        return 0.0;
    };
    let across = Vector3::new(-ahead.y, ahead.x, 0.0);
    // Rise of the scoop body per horizontal meter behind the edge.
    let rise = -forward.z / forward.x.hypot(forward.y);
    let tip = pose.position;
    let map = &mut state.heightmap;

    let half = SCOOP_WIDTH / 2.0;
    let corners = [
        tip + across * half,
        tip - across * half,
        tip - ahead * SCOOP_LENGTH + across * half,
        tip - ahead * SCOOP_LENGTH - across * half,
    ];
    let (lo_x, hi_x) = min_max(corners.iter().map(|c| c.x));
    let (lo_y, hi_y) = min_max(corners.iter().map(|c| c.y));
    let ix0 = ((lo_x / map.cell).floor().max(0.0)) as usize;
    let iy0 = ((lo_y / map.cell).floor().max(0.0)) as usize;
    let ix1 = ((hi_x / map.cell).ceil().max(0.0) as usize).min(map.nx);
    let iy1 = ((hi_y / map.cell).ceil().max(0.0) as usize).min(map.ny);

    let area = map.cell * map.cell;
    let mut removed = 0.0;
    for iy in iy0..iy1 {
        for ix in ix0..ix1 {
            let (cx, cy) = map.cell_center(ix, iy);
            let rel = Vector3::new(cx - tip.x, cy - tip.y, 0.0);
            let behind = -rel.dot(&ahead);
            if !(0.0..=SCOOP_LENGTH).contains(&behind) || rel.dot(&across).abs() > half {
                continue;
            }
            let bottom = tip.z.max(tip.z + behind * rise);
            let h = &mut map.heights[iy * map.nx + ix];
            if bottom < *h {
                removed += (*h - bottom) * area;
                *h = bottom;
            }
        }
    }
    let removed_cm3 = removed * 1e6;
    let efficiency = if roll.abs() > model.spill_roll_threshold {
        model.capture_efficiency / 2.0
    } else {
        model.capture_efficiency
    };
    state.removed_volume += removed_cm3;
    state.captured_volume += removed_cm3 * efficiency;
    removed_cm3
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}
