//! Oscillatory scooping primitives and reactive-attractor impedance control,
//! run closed-loop against a deterministic simulated terrain.
//!
//! Layers, bottom up: [`geometry`] (SE(3) difference and integration),
//! [`trajectory`] (penetrate-drag-scoop plans with swivel, twist and dive),
//! [`controllers`] (impedance and RAIC), [`terrain`] (the plant),
//! [`harness`] (scenarios, sweeps, ablations), [`config`] and [`export`].

// Range checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod controllers;
pub mod error;
pub mod export;
pub mod geometry;
pub mod harness;
pub mod parallel;
pub mod terrain;
pub mod trajectory;

pub use config::{parse_config, render_config, ConfigError, ExperimentConfig, SweepConfig};
pub use controllers::{Controller, ControllerKind, ImpedanceGains, RaicGains};
pub use error::{Error, Result};
pub use geometry::{pose_difference, pose_integrate, Pose, PoseDelta, Wrench};
pub use harness::{
    run_ablation, run_obstacle_demo, run_scenario, run_sweep, AblationSpec, ObstacleDemo,
    ScenarioConfig, ScenarioResult,
};
pub use parallel::Execution;
pub use terrain::{Preset, TerrainModel};
pub use trajectory::{generate_plan, PdsParams, PdsSettings, PrimitiveParams, TrajectoryPlan};
