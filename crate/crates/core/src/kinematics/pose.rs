use nalgebra::{DVector, Isometry3, Rotation3, Translation3, Unit, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::so3;
use super::TaskSpace;

/// End-effector pose: position plus canonical axis-angle orientation.
///
/// The angle is kept in `[0, pi]`; the antipodal pair `(-axis, 2pi - angle)`
/// is never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr", into = "PoseRepr")]
pub struct PoseSE3 {
    position: Vector3<f64>,
    axis: Unit<Vector3<f64>>,
    angle: f64,
}

impl PoseSE3 {
    /// Builds a pose from a rotation matrix (the orientation is re-derived
    /// through the matrix logarithm, so the result is canonical).
    pub fn from_rotation(position: Vector3<f64>, rotation: &Rotation3<f64>) -> Self {
        let (axis, angle) = so3::log(rotation);
        Self {
            position,
            axis,
            angle,
        }
    }

    /// Any axis-angle pair; normalized onto `[0, pi]`.
    pub fn from_axis_angle(position: Vector3<f64>, axis: Vector3<f64>, angle: f64) -> Self {
        let norm = axis.norm();
        if norm == 0.0 || angle == 0.0 {
            return Self::from_position(position);
        }
        let r = so3::exp(&Unit::new_unchecked(axis / norm), angle);
        let mut pose = Self::from_rotation(position, &r);
        // exp/log round trip can leave the tie-break to rounding at exactly pi.
        if (pose.angle - PI).abs() < 1e-15 {
            pose.axis = Unit::new_normalize(so3::canonicalize_pi_axis(&pose.axis));
        }
        pose
    }

    pub fn from_position(position: Vector3<f64>) -> Self {
        Self {
            position,
            axis: Vector3::z_axis(),
            angle: 0.0,
        }
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        Self::from_rotation(iso.translation.vector, &iso.rotation.to_rotation_matrix())
    }

    pub fn position(&self) -> &Vector3<f64> {
        &self.position
    }

    pub fn axis(&self) -> &Unit<Vector3<f64>> {
        &self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// `theta * h`
    pub fn rotation_vector(&self) -> Vector3<f64> {
        self.axis.into_inner() * self.angle
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        so3::exp(&self.axis, self.angle)
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::from(self.position),
            UnitQuaternion::from_rotation_matrix(&self.rotation()),
        )
    }

    pub fn with_position(&self, position: Vector3<f64>) -> Self {
        Self { position, ..*self }
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    position: [f64; 3],
    /// `[ax, ay, az, theta]`
    axis_angle: [f64; 4],
}

impl TryFrom<PoseRepr> for PoseSE3 {
    type Error = String;
    fn try_from(r: PoseRepr) -> Result<Self, String> {
        if r.position.iter().chain(r.axis_angle.iter()).any(|v| !v.is_finite()) {
            return Err("pose contains non-finite values".into());
        }
        let [ax, ay, az, theta] = r.axis_angle;
        Ok(PoseSE3::from_axis_angle(
            Vector3::from(r.position),
            Vector3::new(ax, ay, az),
            theta,
        ))
    }
}

impl From<PoseSE3> for PoseRepr {
    fn from(p: PoseSE3) -> Self {
        PoseRepr {
            position: p.position.into(),
            axis_angle: [p.axis.x, p.axis.y, p.axis.z, p.angle],
        }
    }
}

/// Stacked linear and angular velocity, restricted to the task rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Twist(pub DVector<f64>);

impl Twist {
    pub fn zeros(m: usize) -> Self {
        Twist(DVector::zeros(m))
    }

    pub fn from_full(full: &Vector6<f64>, space: TaskSpace) -> Self {
        Twist(space.select(full))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Weighted pose error vector (position block followed by orientation block).
#[derive(Debug, Clone, PartialEq)]
pub struct TaskError(pub DVector<f64>);

impl TaskError {
    /// Keeps only the rows of the given task space.
    pub fn restrict(&self, space: TaskSpace) -> TaskError {
        debug_assert_eq!(self.0.len(), 6);
        let full = Vector6::from_iterator(self.0.iter().copied());
        TaskError(space.select(&full))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Six-vector error `[k_pos (x_des - x); k_ori theta h]` where `theta h` is the
/// logarithm of `R_des R^T`.
pub fn pose_error(desired: &PoseSE3, current: &PoseSE3, k_pos: f64, k_ori: f64) -> TaskError {
    let dp = (desired.position - current.position) * k_pos;
    let rel = desired.rotation() * current.rotation().inverse();
    let dr = so3::log_vec(&rel) * k_ori;
    TaskError(DVector::from_vec(vec![dp.x, dp.y, dp.z, dr.x, dr.y, dr.z]))
}

/// Unweighted position and orientation error norms.
pub fn error_norms(desired: &PoseSE3, current: &PoseSE3) -> (f64, f64) {
    let e = pose_error(desired, current, 1.0, 1.0).0;
    (e.rows(0, 3).norm(), e.rows(3, 3).norm())
}
