//! Rigid poses of the scoop tip and the difference / integration operators
//! the planner and both controllers are built on.
//!
//! World frame: z up, gravity along -z, heading is yaw about z.
//!
//! Rotational displacements are rotation vectors (matrix logarithm, axis times
//! angle) expressed in the world frame. `pose_difference(a, b)` is the
//! displacement that carries `b` onto `a`, so that
//! `pose_integrate(b, pose_difference(a, b)) == a`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Angles closer than this to pi are rejected by [`rotation_displacements`].
pub const NEAR_PI_TOLERANCE: f64 = 1e-6;

/// Frobenius tolerance on `R Rᵀ - I` for a matrix to count as a rotation.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-9;

/// Rigid transform of the scoop tip in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            position: Vector3::zeros(),
        }
    }

    /// Checked constructor; rejects matrices that are not proper rotations.
    pub fn new(rotation: Matrix3<f64>, position: Vector3<f64>) -> Result<Self> {
        let error = orthonormality_error(&rotation);
        if !(error <= ORTHONORMAL_TOLERANCE) || rotation.determinant() <= 0.0 {
            return Err(Error::NotARotation { error });
        }
        if !position.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("position", "non-finite component"));
        }
        Ok(Self { rotation, position })
    }

    pub fn from_translation(position: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            position,
        }
    }

    /// Z·Y·X Euler angles `(yaw, pitch, roll)` of the rotation, the inverse of
    /// [`compose_euler`] away from gimbal lock.
    pub fn euler_zyx(&self) -> (f64, f64, f64) {
        euler_zyx(&self.rotation)
    }

    /// Tool x-axis in the world frame (the scoop's cutting direction).
    pub fn forward(&self) -> Vector3<f64> {
        self.rotation.column(0).into_owned()
    }

    /// Tool y-axis in the world frame (across the scoop mouth).
    pub fn lateral(&self) -> Vector3<f64> {
        self.rotation.column(1).into_owned()
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

/// Difference between two poses, or a pose velocity when divided by time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseDelta {
    /// Rotation vector, radians, world frame.
    pub rotational: Vector3<f64>,
    /// Meters, world frame.
    pub translational: Vector3<f64>,
}

impl PoseDelta {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(rotational: Vector3<f64>, translational: Vector3<f64>) -> Self {
        Self {
            rotational,
            translational,
        }
    }

    /// Components in wrench order: translation x, y, z then rotation x, y, z.
    /// Index `i` pairs with component `i` of [`Wrench::axes`].
    pub fn axes(&self) -> [f64; 6] {
        let t = &self.translational;
        let r = &self.rotational;
        [t.x, t.y, t.z, r.x, r.y, r.z]
    }

    pub fn from_axes(a: [f64; 6]) -> Self {
        Self {
            translational: Vector3::new(a[0], a[1], a[2]),
            rotational: Vector3::new(a[3], a[4], a[5]),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            rotational: self.rotational * k,
            translational: self.translational * k,
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn is_finite(&self) -> bool {
        self.axes().iter().all(|v| v.is_finite())
    }
}

/// Force and torque acting on the scoop, world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    /// Newtons.
    pub force: Vector3<f64>,
    /// Newton-meters.
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Self { force, torque }
    }

    /// `[fx, fy, fz, tx, ty, tz]`.
    pub fn axes(&self) -> [f64; 6] {
        let f = &self.force;
        let t = &self.torque;
        [f.x, f.y, f.z, t.x, t.y, t.z]
    }

    pub fn from_axes(a: [f64; 6]) -> Self {
        Self {
            force: Vector3::new(a[0], a[1], a[2]),
            torque: Vector3::new(a[3], a[4], a[5]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.axes().iter().all(|v| v.is_finite())
    }
}

impl std::ops::Add for Wrench {
    type Output = Wrench;

    fn add(self, rhs: Wrench) -> Wrench {
        Wrench {
            force: self.force + rhs.force,
            torque: self.torque + rhs.torque,
        }
    }
}

impl std::ops::AddAssign for Wrench {
    fn add_assign(&mut self, rhs: Wrench) {
        self.force += rhs.force;
        self.torque += rhs.torque;
    }
}

/// Frobenius norm of `R Rᵀ - I`.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r * r.transpose() - Matrix3::identity()).norm()
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation displacements of `r` about the x, y and z axes: the rotation
/// vector `θ·axis` of the matrix logarithm.
///
/// Fails when the rotation angle is within [`NEAR_PI_TOLERANCE`] of pi, where
/// the axis sign is ambiguous.
pub fn rotation_displacements(r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    // sin(θ)·axis from the skew part, cos(θ) from the trace.
    let v = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    ) * 0.5;
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let sin = v.norm();
    let angle = sin.atan2(cos);
    if std::f64::consts::PI - angle < NEAR_PI_TOLERANCE {
        return Err(Error::RotationNearPi {
            angle,
            tolerance: NEAR_PI_TOLERANCE,
        });
    }
    if sin < 1e-12 {
        // θ ≈ sin θ to well below machine precision here.
        return Ok(v);
    }
    Ok(v * (angle / sin))
}

/// Rodrigues exponential of a rotation vector.
pub fn rotation_exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let angle_sq = w.norm_squared();
    let k = skew(w);
    let k2 = k * k;
    if angle_sq < 1e-16 {
        return Matrix3::identity() + k + k2 * 0.5;
    }
    let angle = angle_sq.sqrt();
    Matrix3::identity() + k * (angle.sin() / angle) + k2 * ((1.0 - angle.cos()) / angle_sq)
}

/// Displacement carrying `b` onto `a`: rotational part `ω(R_a R_bᵀ)`,
/// translational part `p_a - p_b`.
pub fn pose_difference(a: &Pose, b: &Pose) -> Result<PoseDelta> {
    let rotational = rotation_displacements(&(a.rotation * b.rotation.transpose()))?;
    Ok(PoseDelta {
        rotational,
        translational: a.position - b.position,
    })
}

/// Applies `delta` to `base`; the inverse of [`pose_difference`].
pub fn pose_integrate(base: &Pose, delta: &PoseDelta) -> Pose {
    Pose {
        rotation: rotation_exp(&delta.rotational) * base.rotation,
        position: base.position + delta.translational,
    }
}

pub fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `R_z(yaw) · R_y(pitch) · R_x(roll)`.
pub fn compose_euler(yaw: f64, pitch: f64, roll: f64) -> Matrix3<f64> {
    rot_z(yaw) * rot_y(pitch) * rot_x(roll)
}

/// Inverse of [`compose_euler`] for `|pitch| < π/2`.
pub fn euler_zyx(r: &Matrix3<f64>) -> (f64, f64, f64) {
    let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    (yaw, pitch, roll)
}
