//! Cartesian impedance control and the reactive-attractor variant (RAIC).
//!
//! Both controllers drive the same virtual spring-damper between the end
//! effector and a target pose. Plain impedance control targets the plan
//! directly; RAIC targets an attractor that advances along the plan at a
//! rate damped by the sensed wrench.
//!
//! Per-axis quantities use wrench order: force / translation x, y, z first,
//! then torque / rotation x, y, z.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pose_difference, pose_integrate, Pose, PoseDelta, Wrench};

/// Diagonal mass, damping and stiffness of the virtual spring-damper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceGains {
    pub mass: [f64; 6],
    pub damping: [f64; 6],
    pub stiffness: [f64; 6],
}

impl ImpedanceGains {
    /// Isotropic within the translational and within the rotational block.
    pub fn isotropic(settings: &ImpedanceSettings) -> Result<Self> {
        settings.validate()?;
        let s = settings;
        Ok(Self {
            mass: [
                s.mass_lin, s.mass_lin, s.mass_lin, s.mass_rot, s.mass_rot, s.mass_rot,
            ],
            damping: [s.b_lin, s.b_lin, s.b_lin, s.b_rot, s.b_rot, s.b_rot],
            stiffness: [s.k_lin, s.k_lin, s.k_lin, s.k_rot, s.k_rot, s.k_rot],
        })
    }

    /// `ζ = B / (2 √(K M))` on one axis.
    pub fn damping_ratio(&self, axis: usize) -> f64 {
        self.damping[axis] / (2.0 * (self.stiffness[axis] * self.mass[axis]).sqrt())
    }
}

impl Default for ImpedanceGains {
    fn default() -> Self {
        Self::isotropic(&ImpedanceSettings::default()).expect("default gains are valid")
    }
}

/// Serializable form of [`ImpedanceGains`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImpedanceSettings {
    /// N/m
    pub k_lin: f64,
    /// N·m/rad
    pub k_rot: f64,
    /// N·s/m
    pub b_lin: f64,
    /// N·m·s/rad
    pub b_rot: f64,
    pub mass_lin: f64,
    pub mass_rot: f64,
}

impl Default for ImpedanceSettings {
    fn default() -> Self {
        Self {
            k_lin: 750.0,
            k_rot: 80.0,
            b_lin: 330.0,
            b_rot: 12.0,
            mass_lin: 1.0,
            mass_rot: 1.0,
        }
    }
}

impl ImpedanceSettings {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("impedance.k_lin", self.k_lin),
            ("impedance.k_rot", self.k_rot),
            ("impedance.b_lin", self.b_lin),
            ("impedance.b_rot", self.b_rot),
            ("impedance.mass_lin", self.mass_lin),
            ("impedance.mass_rot", self.mass_rot),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(field, format!("{v} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Feedforward and feedback damping schedules of the RAIC attractor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaicGains {
    pub ff_cutoff: [f64; 6],
    pub ff_scale: [f64; 6],
    pub fb_cutoff: [f64; 6],
    pub fb_scale: [f64; 6],
    pub force_max: f64,
    pub torque_max: f64,
}

impl RaicGains {
    /// Schedules derived from the protective-stop limits: feedforward decays
    /// between 25% and 75% of the limit, feedback between 0 and 25%.
    pub fn from_limits(force_max: f64, torque_max: f64) -> Result<Self> {
        for (field, v) in [
            ("raic.force_max", force_max),
            ("raic.torque_max", torque_max),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(field, format!("{v} must be > 0")));
            }
        }
        let per_axis = |lin: f64, rot: f64| [lin, lin, lin, rot, rot, rot];
        Ok(Self {
            ff_cutoff: per_axis(0.25 * force_max, 0.25 * torque_max),
            ff_scale: per_axis(1.0 / (0.5 * force_max), 1.0 / (0.5 * torque_max)),
            fb_cutoff: [0.0; 6],
            fb_scale: per_axis(1.0 / (0.25 * force_max), 1.0 / (0.25 * torque_max)),
            force_max,
            torque_max,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..6 {
            if !(self.ff_scale[i] > 0.0 && self.fb_scale[i] > 0.0) {
                return Err(Error::invalid("raic.scale", "scales must be > 0"));
            }
            if !(self.ff_cutoff[i] >= 0.0 && self.fb_cutoff[i] >= 0.0) {
                return Err(Error::invalid("raic.cutoff", "cutoffs must be >= 0"));
            }
        }
        Ok(())
    }
}

impl Default for RaicGains {
    fn default() -> Self {
        Self::from_limits(60.0, 10.0).expect("default limits are valid")
    }
}

/// Piecewise-linear damping: 1 up to the cutoff, then decreasing with slope
/// `scale` in force magnitude, saturating at 0.
pub fn damping_phi(force: f64, scale: f64, cutoff: f64) -> f64 {
    (1.0 - scale * (force.abs() - cutoff).max(0.0)).clamp(0.0, 1.0)
}

/// `max(0, tanh(f·e))`: rises toward 1 when the attractor-to-plan gap points
/// along the sensed force.
pub fn exit_damping(force: f64, gap: f64) -> f64 {
    (force * gap).tanh().max(0.0)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Gaps at or below this (m or rad) count as zero in the feedforward gate.
/// An attractor on the plan carries round-off gaps whose sign is noise.
pub const GATE_DEADBAND: f64 = 1e-12;

/// Drops feedforward components that would close the plan-attractor gap:
/// `d_i · min(1 + sign(d_i e_i), 1)`.
pub fn gate_feedforward(d: &PoseDelta, e: &PoseDelta) -> PoseDelta {
    let d_axes = d.axes();
    let e_axes = e.axes();
    let mut out = [0.0; 6];
    for i in 0..6 {
        let e_i = if e_axes[i].abs() <= GATE_DEADBAND {
            0.0
        } else {
            e_axes[i]
        };
        out[i] = d_axes[i] * (1.0 + sign(d_axes[i] * e_i)).min(1.0);
    }
    PoseDelta::from_axes(out)
}

/// Diagonals of the feedforward matrix `D` and feedback matrix `F`.
pub fn raic_gain_diagonals(
    wrench: &Wrench,
    e: &PoseDelta,
    gains: &RaicGains,
) -> ([f64; 6], [f64; 6]) {
    let f = wrench.axes();
    let e = e.axes();
    let mut ff = [0.0; 6];
    let mut fb = [0.0; 6];
    for i in 0..6 {
        let exit = exit_damping(f[i], e[i]);
        ff[i] = damping_phi(f[i], gains.ff_scale[i], gains.ff_cutoff[i]).max(exit);
        fb[i] = damping_phi(f[i], gains.fb_scale[i], gains.fb_cutoff[i]).max(exit);
    }
    (ff, fb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorUpdate {
    pub attractor: Pose,
    pub ff_gains: [f64; 6],
    pub fb_gains: [f64; 6],
}

/// Advances the attractor one plan step:
/// `T_att ← int(T_att, D(f,e) d′ + F(f,e) e)` with
/// `d = d(T_plan[t+1], T_plan[t])` and `e = d(T_plan[t], T_att)`.
pub fn raic_attractor_step(
    attractor: &Pose,
    plan_now: &Pose,
    plan_next: &Pose,
    wrench: &Wrench,
    gains: &RaicGains,
) -> Result<AttractorUpdate> {
    let d = pose_difference(plan_next, plan_now)?;
    let e = pose_difference(plan_now, attractor)?;
    let gated = gate_feedforward(&d, &e).axes();
    let (ff, fb) = raic_gain_diagonals(wrench, &e, gains);
    let e_axes = e.axes();
    let mut step = [0.0; 6];
    for i in 0..6 {
        step[i] = ff[i] * gated[i] + fb[i] * e_axes[i];
    }
    Ok(AttractorUpdate {
        attractor: pose_integrate(attractor, &PoseDelta::from_axes(step)),
        ff_gains: ff,
        fb_gains: fb,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub attractor: Pose,
    pub end_effector: Pose,
    /// Per second.
    pub velocity: PoseDelta,
    pub plan_index: usize,
}

impl ControllerState {
    /// At rest with the attractor on the end effector.
    pub fn at_rest(pose: Pose) -> Self {
        Self {
            attractor: pose,
            end_effector: pose,
            velocity: PoseDelta::zero(),
            plan_index: 0,
        }
    }
}

/// One step of `M ẍ + B ẋ + K e = f` with `e = d(T, T_att)`, the end effector
/// relative to its target. Velocity is updated implicitly in damping and
/// stiffness, then the displacement `v·dt` is applied to the pose.
pub fn spring_damper_step(
    state: &ControllerState,
    target: &Pose,
    wrench: &Wrench,
    gains: &ImpedanceGains,
    dt: f64,
) -> Result<(Pose, PoseDelta)> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("{dt} must be > 0")));
    }
    let e = pose_difference(&state.end_effector, target)?.axes();
    let v = state.velocity.axes();
    let f = wrench.axes();
    let mut v_next = [0.0; 6];
    for i in 0..6 {
        let m = gains.mass[i];
        let b = gains.damping[i];
        let k = gains.stiffness[i];
        v_next[i] = (v[i] + dt / m * (f[i] - k * e[i])) / (1.0 + dt * b / m + dt * dt * k / m);
    }
    let velocity = PoseDelta::from_axes(v_next);
    let end_effector = pose_integrate(&state.end_effector, &velocity.scale(dt));
    Ok((end_effector, velocity))
}

/// Impedance control: the spring-damper pulls directly toward the plan.
pub fn impedance_step(
    state: &ControllerState,
    plan_pose: &Pose,
    wrench: &Wrench,
    gains: &ImpedanceGains,
    dt: f64,
) -> Result<(Pose, PoseDelta)> {
    spring_damper_step(state, plan_pose, wrench, gains, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    #[serde(alias = "Impedance", alias = "IMPEDANCE")]
    Impedance,
    #[serde(alias = "RAIC", alias = "Raic")]
    Raic,
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ControllerKind::Impedance => "impedance",
            ControllerKind::Raic => "raic",
        })
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "impedance" => Ok(ControllerKind::Impedance),
            "raic" => Ok(ControllerKind::Raic),
            other => Err(Error::invalid(
                "controller",
                format!("unknown controller `{other}` (expected impedance or raic)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub end_effector: Pose,
    pub attractor: Pose,
    pub ff_gains: [f64; 6],
    pub fb_gains: [f64; 6],
}

/// A controller instance advancing along a plan.
#[derive(Debug, Clone)]
pub struct Controller {
    pub kind: ControllerKind,
    pub impedance: ImpedanceGains,
    pub raic: RaicGains,
    pub state: ControllerState,
}

impl Controller {
    pub fn new(
        kind: ControllerKind,
        impedance: ImpedanceGains,
        raic: RaicGains,
        start: Pose,
    ) -> Self {
        Self {
            kind,
            impedance,
            raic,
            state: ControllerState::at_rest(start),
        }
    }

    /// Moves from plan sample `plan_now` toward `plan_next` under `wrench`.
    pub fn step(
        &mut self,
        plan_now: &Pose,
        plan_next: &Pose,
        wrench: &Wrench,
        dt: f64,
    ) -> Result<StepOutput> {
        let (target, ff, fb) = match self.kind {
            ControllerKind::Impedance => (*plan_next, [1.0; 6], [1.0; 6]),
            ControllerKind::Raic => {
                let u = raic_attractor_step(
                    &self.state.attractor,
                    plan_now,
                    plan_next,
                    wrench,
                    &self.raic,
                )?;
                (u.attractor, u.ff_gains, u.fb_gains)
            }
        };
        let (end_effector, velocity) =
            spring_damper_step(&self.state, &target, wrench, &self.impedance, dt)?;
        self.state = ControllerState {
            attractor: target,
            end_effector,
            velocity,
            plan_index: self.state.plan_index + 1,
        };
        Ok(StepOutput {
            end_effector,
            attractor: target,
            ff_gains: ff,
            fb_gains: fb,
        })
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    use super::*;
    use crate::geometry::compose_euler;

    #[test]
    fn phi_goldens_at_default_force_axis() {
        let g = RaicGains::default();
        let (s, c) = (g.ff_scale[0], g.ff_cutoff[0]);
        assert_abs_diff_eq!(c, 15.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s, 1.0 / 30.0, epsilon = 1e-12);
        assert_eq!(damping_phi(0.0, s, c), 1.0);
        assert_eq!(damping_phi(-15.0, s, c), 1.0);
        assert_abs_diff_eq!(damping_phi(30.0, s, c), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(damping_phi(-30.0, s, c), 0.5, epsilon = 1e-12);
        assert_eq!(damping_phi(45.0, s, c), 0.0);
        assert_eq!(damping_phi(200.0, s, c), 0.0);
    }

    #[test]
    fn default_schedules_follow_limits() {
        let g = RaicGains::default();
        assert_abs_diff_eq!(g.fb_scale[0], 1.0 / 15.0, epsilon = 1e-15);
        assert_eq!(g.fb_cutoff, [0.0; 6]);
        assert_abs_diff_eq!(g.ff_cutoff[3], 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.ff_scale[5], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn exit_damping_values() {
        assert_eq!(exit_damping(0.0, 0.3), 0.0);
        assert_eq!(exit_damping(12.0, 0.0), 0.0);
        assert_eq!(exit_damping(-2.0, 0.5), 0.0);
        assert_abs_diff_eq!(
            exit_damping(1.0, 1.0),
            0.761_594_155_955_764_9,
            epsilon = 1e-12
        );
        assert!(exit_damping(50.0, 0.1) > 0.9999);
    }

    #[test]
    fn gate_keeps_same_sign_and_drops_opposing() {
        let d = PoseDelta::from_axes([0.01, 0.01, -0.02, 0.0, 0.3, -0.1]);
        let e = PoseDelta::from_axes([0.02, -0.02, -0.01, 0.5, 0.0, 0.2]);
        let g = gate_feedforward(&d, &e).axes();
        assert_eq!(g, [0.01, 0.0, -0.02, 0.0, 0.3, 0.0]);
        assert_eq!(gate_feedforward(&d, &PoseDelta::zero()), d);
        let noise = PoseDelta::from_axes([-1e-17, 1e-17, 1e-17, 0.0, -1e-13, 1e-16]);
        assert_eq!(gate_feedforward(&d, &noise), d);
    }

    fn pose(x: f64, yaw: f64) -> Pose {
        Pose {
            rotation: compose_euler(yaw, 0.2, 0.0),
            position: Vector3::new(x, 0.1, -0.05),
        }
    }

    #[test]
    fn attractor_on_plan_follows_plan_exactly() {
        let now = pose(0.0, 0.1);
        let next = pose(0.0004, 0.11);
        let u =
            raic_attractor_step(&now, &now, &next, &Wrench::zero(), &RaicGains::default()).unwrap();
        assert_eq!(u.ff_gains, [1.0; 6]);
        assert_eq!(u.fb_gains, [1.0; 6]);
        assert_abs_diff_eq!(u.attractor.position, next.position, epsilon = 1e-15);
        assert_abs_diff_eq!(u.attractor.rotation, next.rotation, epsilon = 1e-15);
    }

    #[test]
    fn lagging_attractor_catches_up_in_one_step() {
        // Translation-only lag: D = F = I gives att + d + e = plan[t+1].
        let now = pose(0.10, 0.0);
        let next = pose(0.1004, 0.0);
        let att = pose(0.07, 0.0);
        let u =
            raic_attractor_step(&att, &now, &next, &Wrench::zero(), &RaicGains::default()).unwrap();
        assert_abs_diff_eq!(u.attractor.position, next.position, epsilon = 1e-15);
    }

    #[test]
    fn saturated_opposing_force_freezes_axis() {
        // Plan moves +x, attractor lags (e_x > 0), terrain pushes back at 50 N.
        let now = pose(0.10, 0.0);
        let next = pose(0.1004, 0.0);
        let att = pose(0.08, 0.0);
        let wrench = Wrench::new(Vector3::new(-50.0, 0.0, 0.0), Vector3::zeros());
        let u = raic_attractor_step(&att, &now, &next, &wrench, &RaicGains::default()).unwrap();
        assert_eq!(u.ff_gains[0], 0.0);
        assert_eq!(u.fb_gains[0], 0.0);
        assert_eq!(u.attractor.position.x, att.position.x);
        // Other axes are untouched by the x force.
        assert_eq!(u.ff_gains[1], 1.0);
    }

    #[test]
    fn static_balance_and_equilibrium() {
        let gains = ImpedanceGains::default();
        let target = pose(0.0, 0.0);
        let state = ControllerState::at_rest(target);
        let (ee, v) = spring_damper_step(&state, &target, &Wrench::zero(), &gains, 0.008).unwrap();
        assert_eq!(ee, target);
        assert_eq!(v, PoseDelta::zero());

        // End effector displaced by e; f = K e holds it there.
        let offset = PoseDelta::from_axes([0.01, -0.02, 0.005, 0.0, 0.0, 0.05]);
        let state = ControllerState {
            end_effector: pose_integrate(&target, &offset),
            ..ControllerState::at_rest(target)
        };
        let e = pose_difference(&state.end_effector, &target)
            .unwrap()
            .axes();
        let mut f = [0.0; 6];
        for i in 0..6 {
            f[i] = gains.stiffness[i] * e[i];
        }
        let (_, v) =
            spring_damper_step(&state, &target, &Wrench::from_axes(f), &gains, 0.008).unwrap();
        for a in v.axes() {
            assert_abs_diff_eq!(a, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn default_translation_is_overdamped() {
        let g = ImpedanceGains::default();
        assert_abs_diff_eq!(
            g.damping_ratio(0),
            330.0 / (2.0 * 750f64.sqrt()),
            epsilon = 1e-12
        );
        assert!(g.damping_ratio(0) > 5.9);
    }

    #[test]
    fn zero_dt_rejected() {
        let s = ControllerState::at_rest(Pose::identity());
        assert!(spring_damper_step(
            &s,
            &Pose::identity(),
            &Wrench::zero(),
            &ImpedanceGains::default(),
            0.0
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn gain_diagonals_in_unit_interval(
            f in prop::array::uniform6(-500.0f64..500.0),
            e in prop::array::uniform6(-1.0f64..1.0),
        ) {
            let (ff, fb) = raic_gain_diagonals(&Wrench::from_axes(f), &PoseDelta::from_axes(e), &RaicGains::default());
            for i in 0..6 {
                prop_assert!((0.0..=1.0).contains(&ff[i]));
                prop_assert!((0.0..=1.0).contains(&fb[i]));
            }
        }

        #[test]
        fn phi_non_increasing_in_force_magnitude(a in 0.0f64..200.0, b in 0.0f64..200.0) {
            let g = RaicGains::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(damping_phi(hi, g.ff_scale[0], g.ff_cutoff[0]) <= damping_phi(lo, g.ff_scale[0], g.ff_cutoff[0]));
            prop_assert!(damping_phi(-hi, g.fb_scale[0], g.fb_cutoff[0]) <= damping_phi(-lo, g.fb_scale[0], g.fb_cutoff[0]));
        }

        #[test]
        fn exit_release_when_force_aligns_with_gap(f in 10.0f64..200.0, e in 0.5f64..2.0, sgn in prop::bool::ANY) {
            let s = if sgn { 1.0 } else { -1.0 };
            let mut fa = [0.0; 6];
            let mut ea = [0.0; 6];
            fa[2] = s * f;
            ea[2] = s * e;
            let (ff, fb) = raic_gain_diagonals(&Wrench::from_axes(fa), &PoseDelta::from_axes(ea), &RaicGains::default());
            prop_assert!(ff[2] > 0.99);
            prop_assert!(fb[2] > 0.99);
        }
    }
}
