//! Closed-loop runs: scenarios, primitive sweeps, the controller/trajectory
//! ablation and the hidden-obstacle demos.
//!
//! Every repetition is a pure function of its configuration and seed
//! (`base_seed + r`), so grids can run in any order and merge by key.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::controllers::{
    Controller, ControllerKind, ImpedanceGains, ImpedanceSettings, RaicGains,
};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Wrench};
use crate::parallel::{self, Execution};
use crate::terrain::{
    terrain_wrench, Heightmap, ObstacleKind, ObstacleModel, Preset, TerrainModel, TerrainState,
};
use crate::trajectory::{
    generate_plan, PdsParams, PdsSettings, Phase, PrimitiveParams, TrajectoryPlan,
};

/// Protective-stop limits on the sensed wrench.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Limits {
    /// N
    pub force_max: f64,
    /// N·m
    pub torque_max: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            force_max: 60.0,
            torque_max: 10.0,
        }
    }
}

/// True iff `|f| ≥ F_max` or `|τ| ≥ T_max`.
pub fn pstop_check(wrench: &Wrench, limits: &Limits) -> bool {
    wrench.force.norm() >= limits.force_max || wrench.torque.norm() >= limits.torque_max
}

/// Penetration points alternated across repetitions, `(x, y)` on the surface.
pub const DEFAULT_SITES: [[f64; 2]; 2] = [[0.2, 0.18], [0.2, 0.42]];

fn default_sites() -> Vec<[f64; 2]> {
    DEFAULT_SITES.to_vec()
}

fn default_repetitions() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub terrain: Preset,
    pub controller: ControllerKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub pds: PdsSettings,
    #[serde(default)]
    pub primitives: PrimitiveParams,
    #[serde(default)]
    pub impedance: ImpedanceSettings,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default = "default_sites")]
    pub sites: Vec<[f64; 2]>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleModel>,
}

impl ScenarioConfig {
    pub fn new(terrain: Preset, controller: ControllerKind) -> Self {
        Self {
            terrain,
            controller,
            seed: 0,
            repetitions: 1,
            pds: PdsSettings::default(),
            primitives: PrimitiveParams::default(),
            impedance: ImpedanceSettings::default(),
            limits: Limits::default(),
            sites: default_sites(),
            obstacles: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(Error::invalid("repetitions", "must be >= 1"));
        }
        if self.sites.is_empty() {
            return Err(Error::invalid(
                "sites",
                "at least one penetration site is required",
            ));
        }
        self.pds.validate()?;
        self.primitives.validate()?;
        self.impedance.validate()?;
        RaicGains::from_limits(self.limits.force_max, self.limits.torque_max)?;
        let model = self.terrain.model();
        for o in &self.obstacles {
            o.validate(&model)?;
        }
        Ok(())
    }

    pub fn seed_for(&self, repetition: usize) -> u64 {
        self.seed.wrapping_add(repetition as u64)
    }

    pub fn site_for(&self, repetition: usize) -> [f64; 2] {
        self.sites[repetition % self.sites.len()]
    }

    /// Reference plan starting on the surface of `model` at `site`.
    pub fn plan_at(&self, site: [f64; 2], model: &TerrainModel) -> Result<TrajectoryPlan> {
        let start = Vector3::new(site[0], site[1], model.surface_height);
        generate_plan(&PdsParams::new(start, &self.pds)?, &self.primitives)
    }
}

/// One logged control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub end_effector: Pose,
    pub attractor: Pose,
    pub plan: Pose,
    /// Wrench sensed at the start of the step.
    pub wrench: Wrench,
    pub ff_gains: [f64; 6],
    pub fb_gains: [f64; 6],
    pub phase: Phase,
    pub pstop: bool,
    pub obstacle_contact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub records: Vec<StepRecord>,
    /// The reference plan the run followed.
    pub plan: TrajectoryPlan,
    /// Terrain surface when the run ended.
    pub heightmap: Option<Heightmap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionOutcome {
    pub repetition: usize,
    pub seed: u64,
    pub site: [f64; 2],
    pub pstop: bool,
    /// Percent of plan steps executed.
    pub completion: f64,
    /// Captured volume, cm³; 0 after a P-stop.
    pub volume: f64,
    pub steps_executed: usize,
    pub total_steps: usize,
    pub peak_force: f64,
    pub peak_torque: f64,
    pub jams: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub terrain: Preset,
    pub controller: ControllerKind,
    pub volume_mean: f64,
    pub volume_std: f64,
    /// Percent of repetitions ending in a P-stop.
    pub pstop_rate: f64,
    pub completion_mean: f64,
    pub completion_std: f64,
    pub repetitions: Vec<RepetitionOutcome>,
}

impl ScenarioResult {
    pub fn from_outcomes(config: &ScenarioConfig, repetitions: Vec<RepetitionOutcome>) -> Self {
        let volumes: Vec<f64> = repetitions.iter().map(|r| r.volume).collect();
        let completions: Vec<f64> = repetitions.iter().map(|r| r.completion).collect();
        let stops = repetitions.iter().filter(|r| r.pstop).count();
        let (volume_mean, volume_std) = mean_std(&volumes);
        let (completion_mean, completion_std) = mean_std(&completions);
        Self {
            terrain: config.terrain,
            controller: config.controller,
            volume_mean,
            volume_std,
            pstop_rate: 100.0 * stops as f64 / repetitions.len().max(1) as f64,
            completion_mean,
            completion_std,
            repetitions,
        }
    }
}

/// Mean and sample standard deviation; the deviation of one value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Runs repetition `repetition` of `config`, optionally logging every step.
pub fn run_repetition(
    config: &ScenarioConfig,
    repetition: usize,
    log: bool,
) -> Result<(RepetitionOutcome, Option<RunLog>)> {
    let model = config.terrain.model();
    run_repetition_with(config, &model, repetition, log)
}

/// As [`run_repetition`], against an explicit terrain model.
pub fn run_repetition_with(
    config: &ScenarioConfig,
    model: &TerrainModel,
    repetition: usize,
    log: bool,
) -> Result<(RepetitionOutcome, Option<RunLog>)> {
    let seed = config.seed_for(repetition);
    let site = config.site_for(repetition);
    let plan = config.plan_at(site, model)?;
    let total = plan.steps();
    let dt = plan.sample_dt;

    let gains = ImpedanceGains::isotropic(&config.impedance)?;
    let raic = RaicGains::from_limits(config.limits.force_max, config.limits.torque_max)?;
    let obstacles = &config.obstacles;
    let mut terrain = TerrainState::new(model, obstacles, seed, total);
    let mut controller = Controller::new(config.controller, gains, raic, plan.samples[0].pose);
    let mut records = log.then(|| Vec::with_capacity(total + 1));

    let mut pstop_at = None;
    let mut peak_force: f64 = 0.0;
    let mut peak_torque: f64 = 0.0;
    for k in 0..total {
        let state = controller.state;
        let wrench = terrain_wrench(
            &terrain,
            &state.end_effector,
            &state.velocity,
            model,
            obstacles,
        );
        peak_force = peak_force.max(wrench.force.norm());
        peak_torque = peak_torque.max(wrench.torque.norm());
        let contact = obstacles
            .iter()
            .any(|o| o.contact(&state.end_effector.position).is_some());
        if pstop_check(&wrench, &config.limits) {
            if let Some(r) = records.as_mut() {
                r.push(StepRecord {
                    t: plan.samples[k].t,
                    end_effector: state.end_effector,
                    attractor: state.attractor,
                    plan: plan.samples[k].pose,
                    wrench,
                    ff_gains: [f64::NAN; 6],
                    fb_gains: [f64::NAN; 6],
                    phase: plan.samples[k].phase,
                    pstop: true,
                    obstacle_contact: contact,
                });
            }
            pstop_at = Some(k);
            break;
        }
        let out = controller.step(
            &plan.samples[k].pose,
            &plan.samples[k + 1].pose,
            &wrench,
            dt,
        )?;
        terrain.advance(
            &state.end_effector,
            &out.end_effector,
            &wrench,
            model,
            obstacles,
        );
        if let Some(r) = records.as_mut() {
            r.push(StepRecord {
                t: plan.samples[k + 1].t,
                end_effector: out.end_effector,
                attractor: out.attractor,
                plan: plan.samples[k + 1].pose,
                wrench,
                ff_gains: out.ff_gains,
                fb_gains: out.fb_gains,
                phase: plan.samples[k + 1].phase,
                pstop: false,
                obstacle_contact: contact,
            });
        }
    }

    let (completion, volume, executed) = match pstop_at {
        Some(k) => (100.0 * k as f64 / total as f64, 0.0, k),
        None => (100.0, terrain.captured_volume, total),
    };
    log::debug!(
        "{} {} rep {repetition} seed {seed}: pstop={} completion={completion:.1} volume={volume:.1}",
        config.terrain,
        config.controller,
        pstop_at.is_some(),
    );
    let outcome = RepetitionOutcome {
        repetition,
        seed,
        site,
        pstop: pstop_at.is_some(),
        completion,
        volume,
        steps_executed: executed,
        total_steps: total,
        peak_force,
        peak_torque,
        jams: terrain.jams_formed,
    };
    let log = records.map(|records| RunLog {
        records,
        plan,
        heightmap: Some(terrain.heightmap),
    });
    Ok((outcome, log))
}

/// All repetitions of a scenario, aggregated.
pub fn run_scenario(config: &ScenarioConfig, execution: Execution) -> Result<ScenarioResult> {
    config.validate()?;
    let reps: Vec<usize> = (0..config.repetitions).collect();
    let outcomes = parallel::map(execution, &reps, |&r| {
        run_repetition(config, r, false).map(|(o, _)| o)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioResult::from_outcomes(config, outcomes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    SwivelAmplitude,
    SwivelFrequency,
    TwistAmplitude,
    TwistFrequency,
    Dive,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 5] = [
        SweepParameter::SwivelAmplitude,
        SweepParameter::SwivelFrequency,
        SweepParameter::TwistAmplitude,
        SweepParameter::TwistFrequency,
        SweepParameter::Dive,
    ];

    /// Swept value at `level`.
    pub fn value(self, level: Level) -> f64 {
        let i = match level {
            Level::Zero => return 0.0,
            Level::Low => 0,
            Level::Medium => 1,
            Level::High => 2,
        };
        let grid = match self {
            SweepParameter::SwivelAmplitude => [PI / 16.0, PI / 8.0, 3.0 * PI / 16.0],
            SweepParameter::TwistAmplitude => [PI / 12.0, PI / 6.0, PI / 4.0],
            SweepParameter::SwivelFrequency | SweepParameter::TwistFrequency => {
                [PI, 2.0 * PI, 4.0 * PI]
            }
            SweepParameter::Dive => [0.33, 0.66, 1.0],
        };
        grid[i]
    }

    /// Primitives of one sweep cell: the swept parameter at `level`, its
    /// partner (amplitude or frequency) at Low, everything else zero. The
    /// Zero level is plain PDS.
    pub fn primitives(self, level: Level) -> PrimitiveParams {
        let mut p = PrimitiveParams::none();
        if level == Level::Zero {
            return p;
        }
        let v = self.value(level);
        match self {
            SweepParameter::SwivelAmplitude => {
                p.swivel_amplitude = v;
                p.swivel_frequency = SweepParameter::SwivelFrequency.value(Level::Low);
            }
            SweepParameter::SwivelFrequency => {
                p.swivel_frequency = v;
                p.swivel_amplitude = SweepParameter::SwivelAmplitude.value(Level::Low);
            }
            SweepParameter::TwistAmplitude => {
                p.twist_amplitude = v;
                p.twist_frequency = SweepParameter::TwistFrequency.value(Level::Low);
            }
            SweepParameter::TwistFrequency => {
                p.twist_frequency = v;
                p.twist_amplitude = SweepParameter::TwistAmplitude.value(Level::Low);
            }
            SweepParameter::Dive => p.dive = v,
        }
        p
    }
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepParameter::SwivelAmplitude => "swivel_amplitude",
            SweepParameter::SwivelFrequency => "swivel_frequency",
            SweepParameter::TwistAmplitude => "twist_amplitude",
            SweepParameter::TwistFrequency => "twist_frequency",
            SweepParameter::Dive => "dive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Zero,
    Low,
    Medium,
    High,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Zero, Level::Low, Level::Medium, Level::High];
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Level::Zero => "zero",
            Level::Low => "low",
            Level::Medium => "medium",
            Level::High => "high",
        })
    }
}

/// Default sweep repetitions: 6 scoops, 12 on slate.
pub fn default_sweep_repetitions(terrain: Preset) -> usize {
    if terrain == Preset::Slate {
        12
    } else {
        6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: SweepParameter,
    pub level: Level,
    pub value: f64,
    pub volume_mean: f64,
    pub volume_std: f64,
    pub pstop_rate: f64,
    pub completion_mean: f64,
}

/// One scenario per (parameter, level) built on `base`, whose primitives are
/// replaced by the sweep cell's.
pub fn run_sweep(
    base: &ScenarioConfig,
    parameters: &[SweepParameter],
    execution: Execution,
) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let cells: Vec<(SweepParameter, Level, usize)> = parameters
        .iter()
        .flat_map(|&p| Level::ALL.into_iter().map(move |l| (p, l)))
        .flat_map(|(p, l)| (0..base.repetitions).map(move |r| (p, l, r)))
        .collect();
    let outcomes = parallel::map(execution, &cells, |&(p, l, r)| {
        let config = ScenarioConfig {
            primitives: p.primitives(l),
            ..base.clone()
        };
        run_repetition(&config, r, false).map(|(o, _)| o)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (i, chunk) in outcomes.chunks(base.repetitions).enumerate() {
        let (p, l, _) = cells[i * base.repetitions];
        let summary = ScenarioResult::from_outcomes(base, chunk.to_vec());
        rows.push(SweepRow {
            parameter: p,
            level: l,
            value: p.value(l),
            volume_mean: summary.volume_mean,
            volume_std: summary.volume_std,
            pstop_rate: summary.pstop_rate,
            completion_mean: summary.completion_mean,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trajectory {
    Pds,
    Primitives,
}

impl std::fmt::Display for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Trajectory::Pds => "pds",
            Trajectory::Primitives => "primitives",
        })
    }
}

/// Controller × trajectory cell of the ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub controller: ControllerKind,
    pub trajectory: Trajectory,
}

impl Condition {
    /// From the baseline to the full method.
    pub const ALL: [Condition; 4] = [
        Condition {
            controller: ControllerKind::Impedance,
            trajectory: Trajectory::Pds,
        },
        Condition {
            controller: ControllerKind::Impedance,
            trajectory: Trajectory::Primitives,
        },
        Condition {
            controller: ControllerKind::Raic,
            trajectory: Trajectory::Pds,
        },
        Condition {
            controller: ControllerKind::Raic,
            trajectory: Trajectory::Primitives,
        },
    ];
}

/// Swivel π/8 at π rad/s, twist π/12 at π rad/s, dive 0.5.
pub fn ablation_primitives() -> PrimitiveParams {
    PrimitiveParams {
        swivel_amplitude: PI / 8.0,
        swivel_frequency: PI,
        twist_amplitude: PI / 12.0,
        twist_frequency: PI,
        dive: 0.5,
    }
}

fn default_ablation_terrains() -> Vec<Preset> {
    vec![
        Preset::Pebbles,
        Preset::Gravel,
        Preset::Slate,
        Preset::Mulch,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSpec {
    #[serde(default = "default_ablation_terrains")]
    pub terrains: Vec<Preset>,
    #[serde(default)]
    pub seed: u64,
    /// Repetitions per cell; unset means 12, or 30 on slate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    #[serde(default)]
    pub pds: PdsSettings,
    #[serde(default = "ablation_primitives")]
    pub primitives: PrimitiveParams,
    #[serde(default)]
    pub impedance: ImpedanceSettings,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default = "default_sites")]
    pub sites: Vec<[f64; 2]>,
}

impl Default for AblationSpec {
    fn default() -> Self {
        Self {
            terrains: default_ablation_terrains(),
            seed: 0,
            repetitions: None,
            pds: PdsSettings::default(),
            primitives: ablation_primitives(),
            impedance: ImpedanceSettings::default(),
            limits: Limits::default(),
            sites: default_sites(),
        }
    }
}

impl AblationSpec {
    pub fn repetitions_for(&self, terrain: Preset) -> usize {
        self.repetitions
            .unwrap_or(if terrain == Preset::Slate { 30 } else { 12 })
    }

    pub fn scenario(&self, terrain: Preset, condition: Condition) -> ScenarioConfig {
        ScenarioConfig {
            terrain,
            controller: condition.controller,
            seed: self.seed,
            repetitions: self.repetitions_for(terrain),
            pds: self.pds,
            primitives: match condition.trajectory {
                Trajectory::Pds => PrimitiveParams::none(),
                Trajectory::Primitives => self.primitives,
            },
            impedance: self.impedance,
            limits: self.limits,
            sites: self.sites.clone(),
            obstacles: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.terrains.is_empty() {
            return Err(Error::invalid(
                "terrains",
                "at least one terrain is required",
            ));
        }
        if self.repetitions == Some(0) {
            return Err(Error::invalid("repetitions", "must be >= 1"));
        }
        for &t in &self.terrains {
            for c in Condition::ALL {
                self.scenario(t, c).validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub terrain: Preset,
    pub controller: ControllerKind,
    pub trajectory: Trajectory,
    pub repetitions: usize,
    pub volume_mean: f64,
    pub volume_std: f64,
    pub pstop_rate: f64,
    pub completion_mean: f64,
    pub completion_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub seed: u64,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, terrain: Preset, condition: Condition) -> Option<&AblationRow> {
        self.rows.iter().find(|r| {
            r.terrain == terrain
                && r.controller == condition.controller
                && r.trajectory == condition.trajectory
        })
    }
}

/// The terrain × condition grid, ordered by terrain then condition.
pub fn run_ablation(spec: &AblationSpec, execution: Execution) -> Result<AblationTable> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for (cell, &terrain) in spec.terrains.iter().enumerate() {
        for (ci, condition) in Condition::ALL.into_iter().enumerate() {
            let config = spec.scenario(terrain, condition);
            for r in 0..config.repetitions {
                jobs.push((cell * Condition::ALL.len() + ci, config.clone(), r));
            }
        }
    }
    let outcomes = parallel::map(execution, &jobs, |(_, config, r)| {
        run_repetition(config, *r, false).map(|(o, _)| o)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut i = 0;
    while i < jobs.len() {
        let cell = jobs[i].0;
        let config = &jobs[i].1;
        let n = config.repetitions;
        let summary = ScenarioResult::from_outcomes(config, outcomes[i..i + n].to_vec());
        let condition = Condition::ALL[cell % Condition::ALL.len()];
        rows.push(AblationRow {
            terrain: config.terrain,
            controller: condition.controller,
            trajectory: condition.trajectory,
            repetitions: n,
            volume_mean: summary.volume_mean,
            volume_std: summary.volume_std,
            pstop_rate: summary.pstop_rate,
            completion_mean: summary.completion_mean,
            completion_std: summary.completion_std,
        });
        i += n;
    }
    Ok(AblationTable {
        seed: spec.seed,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleDemo {
    Slope,
    Rock,
}

impl std::fmt::Display for ObstacleDemo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ObstacleDemo::Slope => "slope",
            ObstacleDemo::Rock => "rock",
        })
    }
}

impl std::str::FromStr for ObstacleDemo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "slope" => Ok(ObstacleDemo::Slope),
            "rock" => Ok(ObstacleDemo::Rock),
            other => Err(Error::invalid(
                "kind",
                format!("unknown demo `{other}` (expected slope or rock)"),
            )),
        }
    }
}

/// Slope face angle from horizontal.
const SLOPE_ANGLE: f64 = 70.0 * PI / 180.0;
/// Horizontal distance from the dig site to where the slope meets the drag depth.
const SLOPE_DISTANCE: f64 = 0.22;
const ROCK_RADIUS: f64 = 0.05;
/// Rock center relative to the dig site: ahead, and below the surface.
const ROCK_OFFSET: [f64; 2] = [0.27, -0.07];
const OBSTACLE_STIFFNESS: f64 = 40_000.0;

/// Scenario of a hidden-obstacle demo for `controller`.
///
/// Slope: a rigid face rising through the drag path under gravel, dug with
/// depth 0.06 m, drag 0.35 m, high swivel amplitude at low frequency and dive
/// 0.5. Rock: a buried boulder in soft soil ahead of the drag, dug with the
/// ablation primitives.
pub fn obstacle_demo_config(kind: ObstacleDemo, controller: ControllerKind) -> ScenarioConfig {
    let site = DEFAULT_SITES[0];
    match kind {
        ObstacleDemo::Slope => {
            let mut config = ScenarioConfig::new(Preset::Gravel, controller);
            config.pds.depth = 0.06;
            config.pds.drag_length = 0.35;
            config.primitives = PrimitiveParams {
                swivel_amplitude: SweepParameter::SwivelAmplitude.value(Level::High),
                swivel_frequency: SweepParameter::SwivelFrequency.value(Level::Low),
                dive: 0.5,
                ..PrimitiveParams::none()
            };
            let (s, c) = SLOPE_ANGLE.sin_cos();
            let normal = [-s, 0.0, c];
            let foot = [site[0] + SLOPE_DISTANCE, -config.pds.depth];
            config.obstacles = vec![ObstacleModel {
                shape: ObstacleKind::RigidSlope {
                    normal,
                    offset: normal[0] * foot[0] + normal[2] * foot[1],
                    top: 0.0,
                },
                contact_stiffness: OBSTACLE_STIFFNESS,
                friction: 0.8,
            }];
            config
        }
        ObstacleDemo::Rock => {
            let mut config = ScenarioConfig::new(Preset::Soil, controller);
            config.primitives = ablation_primitives();
            config.obstacles = vec![ObstacleModel {
                shape: ObstacleKind::BuriedRock {
                    center: [site[0] + ROCK_OFFSET[0], site[1], ROCK_OFFSET[1]],
                    radius: ROCK_RADIUS,
                },
                contact_stiffness: OBSTACLE_STIFFNESS,
                friction: 0.8,
            }];
            config
        }
    }
}

/// Single logged repetition of an obstacle demo.
pub fn run_obstacle_demo(
    kind: ObstacleDemo,
    controller: ControllerKind,
) -> Result<(ScenarioResult, RunLog)> {
    let config = obstacle_demo_config(kind, controller);
    config.validate()?;
    let (outcome, log) = run_repetition(&config, 0, true)?;
    Ok((
        ScenarioResult::from_outcomes(&config, vec![outcome]),
        log.expect("logging was requested"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pstop_limits() {
        let l = Limits::default();
        let w = |f: f64, t: f64| Wrench::new(Vector3::new(f, 0.0, 0.0), Vector3::new(0.0, 0.0, t));
        assert!(!pstop_check(&w(59.9, 9.9), &l));
        assert!(pstop_check(&w(60.0, 0.0), &l));
        assert!(pstop_check(&w(0.0, 10.0), &l));
        assert!(pstop_check(&w(0.0, -10.0), &l));
    }

    #[test]
    fn mean_std_sample() {
        assert_eq!(mean_std(&[]), (0.0, 0.0));
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sweep_levels_follow_grid() {
        let amps: Vec<f64> = Level::ALL
            .iter()
            .map(|&l| SweepParameter::SwivelAmplitude.value(l))
            .collect();
        assert_eq!(amps, vec![0.0, PI / 16.0, PI / 8.0, 3.0 * PI / 16.0]);
        let dives: Vec<f64> = Level::ALL
            .iter()
            .map(|&l| SweepParameter::Dive.value(l))
            .collect();
        assert_eq!(dives, vec![0.0, 0.33, 0.66, 1.0]);
        let p = SweepParameter::TwistFrequency.primitives(Level::High);
        assert_eq!(p.twist_frequency, 4.0 * PI);
        assert_eq!(p.twist_amplitude, PI / 12.0);
        assert_eq!(p.swivel_amplitude, 0.0);
        for s in SweepParameter::ALL {
            assert_eq!(s.primitives(Level::Zero), PrimitiveParams::none());
        }
    }

    #[test]
    fn ablation_repetition_defaults() {
        let spec = AblationSpec::default();
        assert_eq!(spec.repetitions_for(Preset::Slate), 30);
        assert_eq!(spec.repetitions_for(Preset::Gravel), 12);
        assert_eq!(default_sweep_repetitions(Preset::Slate), 12);
        assert_eq!(default_sweep_repetitions(Preset::Mulch), 6);
    }
}
