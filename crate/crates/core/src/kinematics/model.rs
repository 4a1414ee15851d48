use nalgebra::{
    DMatrix, DVector, Isometry3, Translation3, Unit, UnitQuaternion, Vector3, Vector6,
};
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::pose::PoseSE3;
use crate::error::{Error, Result};

const AXIS_UNIT_TOL: f64 = 1e-12;

/// Task-space dimension and the twist rows it keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum TaskSpace {
    /// `[vx, vy]`
    Planar2,
    /// `[vx, vy, wz]`
    Planar3,
    /// `[vx, vy, vz, wx, wy, wz]`
    Spatial6,
}

impl TaskSpace {
    pub fn dim(self) -> usize {
        self.rows().len()
    }

    /// Indices into the full `[v; w]` six-vector.
    pub fn rows(self) -> &'static [usize] {
        match self {
            TaskSpace::Planar2 => &[0, 1],
            TaskSpace::Planar3 => &[0, 1, 5],
            TaskSpace::Spatial6 => &[0, 1, 2, 3, 4, 5],
        }
    }

    pub fn select(self, full: &Vector6<f64>) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.rows().iter().map(|&r| full[r]))
    }

    /// Number of leading rows that are linear velocity.
    pub fn linear_rows(self) -> usize {
        match self {
            TaskSpace::Planar2 | TaskSpace::Planar3 => 2,
            TaskSpace::Spatial6 => 3,
        }
    }
}

impl TryFrom<usize> for TaskSpace {
    type Error = String;
    fn try_from(m: usize) -> std::result::Result<Self, String> {
        match m {
            2 => Ok(TaskSpace::Planar2),
            3 => Ok(TaskSpace::Planar3),
            6 => Ok(TaskSpace::Spatial6),
            _ => Err(format!("task_dim must be 2, 3 or 6, got {m}")),
        }
    }
}

impl From<TaskSpace> for usize {
    fn from(s: TaskSpace) -> usize {
        s.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub kind: JointKind,
    /// Motion axis in the joint frame.
    pub axis: Unit<Vector3<f64>>,
    /// Pose of the joint frame in the parent frame, at zero displacement.
    pub origin: Isometry3<f64>,
}

impl Joint {
    pub fn revolute(axis: Vector3<f64>, origin: Isometry3<f64>) -> Self {
        Self {
            kind: JointKind::Revolute,
            axis: Unit::new_normalize(axis),
            origin,
        }
    }

    pub fn prismatic(axis: Vector3<f64>, origin: Isometry3<f64>) -> Self {
        Self {
            kind: JointKind::Prismatic,
            axis: Unit::new_normalize(axis),
            origin,
        }
    }

    fn motion(&self, q: f64) -> Isometry3<f64> {
        match self.kind {
            JointKind::Revolute => Isometry3::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_axis_angle(&self.axis, q),
            ),
            JointKind::Prismatic => Isometry3::from_parts(
                Translation3::from(self.axis.into_inner() * q),
                UnitQuaternion::identity(),
            ),
        }
    }
}

/// Joint positions, one entry per joint (rad or m).
#[derive(Debug, Clone, PartialEq)]
pub struct JointState(pub DVector<f64>);

impl JointState {
    pub fn new(q: impl Into<Vec<f64>>) -> Self {
        JointState(DVector::from_vec(q.into()))
    }

    pub fn zeros(n: usize) -> Self {
        JointState(DVector::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Standard Denavit-Hartenberg row: `Rz(theta + q) Tz(d + q) Tx(a) Rx(alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhRow {
    pub kind: JointKind,
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta: f64,
}

/// Serial chain as a product of rigid transforms and joint motions.
#[derive(Debug, Clone, PartialEq)]
pub struct ManipulatorModel {
    pub name: String,
    pub task_space: TaskSpace,
    pub joints: Vec<Joint>,
    pub end_effector_offset: Isometry3<f64>,
}

impl ManipulatorModel {
    pub fn new(
        name: impl Into<String>,
        task_space: TaskSpace,
        joints: Vec<Joint>,
        end_effector_offset: Isometry3<f64>,
    ) -> Result<Self> {
        let model = Self {
            name: name.into(),
            task_space,
            joints,
            end_effector_offset,
        };
        model.validate()?;
        Ok(model)
    }

    /// Builds a model from standard DH rows plus a tool transform.
    pub fn from_dh(
        name: impl Into<String>,
        task_space: TaskSpace,
        rows: &[DhRow],
        tool: Isometry3<f64>,
    ) -> Result<Self> {
        let mut joints = Vec::with_capacity(rows.len());
        let mut tail = Isometry3::identity();
        for row in rows {
            let origin = tail * rot_z(row.theta);
            joints.push(Joint {
                kind: row.kind,
                axis: Vector3::z_axis(),
                origin,
            });
            tail = trans(0.0, 0.0, row.d) * trans(row.a, 0.0, 0.0) * rot_x(row.alpha);
        }
        Self::new(name, task_space, joints, tail * tool)
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn task_dim(&self) -> usize {
        self.task_space.dim()
    }

    /// More task rows than joints: the Jacobian is rank-deficient everywhere.
    pub fn is_over_constrained(&self) -> bool {
        self.task_dim() > self.dof()
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(Error::InvalidModel("model has no joints".into()));
        }
        for (i, j) in self.joints.iter().enumerate() {
            if (j.axis.norm() - 1.0).abs() > AXIS_UNIT_TOL {
                return Err(Error::InvalidModel(format!("joint {i} axis is not unit length")));
            }
            let finite = j.axis.iter().all(|v| v.is_finite())
                && j.origin.translation.vector.iter().all(|v| v.is_finite())
                && j.origin.rotation.coords.iter().all(|v| v.is_finite());
            if !finite {
                return Err(Error::InvalidModel(format!("joint {i} has non-finite geometry")));
            }
        }
        Ok(())
    }

    fn check_q(&self, q: &JointState) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::DimensionMismatch {
                context: "joint state",
                expected: self.dof(),
                actual: q.len(),
            });
        }
        if q.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("joint state"));
        }
        Ok(())
    }

    pub fn end_effector_isometry(&self, q: &JointState) -> Result<Isometry3<f64>> {
        self.check_q(q)?;
        let mut t = Isometry3::identity();
        for (joint, &qi) in self.joints.iter().zip(q.0.iter()) {
            t = t * joint.origin * joint.motion(qi);
        }
        Ok(t * self.end_effector_offset)
    }

    pub fn forward_kinematics(&self, q: &JointState) -> Result<PoseSE3> {
        Ok(PoseSE3::from_isometry(&self.end_effector_isometry(q)?))
    }

    /// World-frame joint axes and positions, plus the end-effector isometry.
    pub fn joint_frames(&self, q: &JointState) -> Result<(Vec<(Vector3<f64>, Vector3<f64>)>, Isometry3<f64>)> {
        self.check_q(q)?;
        let mut t = Isometry3::identity();
        let mut frames = Vec::with_capacity(self.dof());
        for (joint, &qi) in self.joints.iter().zip(q.0.iter()) {
            t *= joint.origin;
            frames.push((t.rotation * joint.axis.into_inner(), t.translation.vector));
            t *= joint.motion(qi);
        }
        Ok((frames, t * self.end_effector_offset))
    }

    /// Full 6 x n geometric Jacobian, rows `[v; w]`.
    pub fn full_jacobian(&self, q: &JointState) -> Result<DMatrix<f64>> {
        let (frames, ee) = self.joint_frames(q)?;
        let p_ee = ee.translation.vector;
        let mut j = DMatrix::zeros(6, self.dof());
        for (i, ((z, p), joint)) in frames.iter().zip(&self.joints).enumerate() {
            let (v, w) = match joint.kind {
                JointKind::Revolute => (z.cross(&(p_ee - p)), *z),
                JointKind::Prismatic => (*z, Vector3::zeros()),
            };
            j.fixed_view_mut::<3, 1>(0, i).copy_from(&v);
            j.fixed_view_mut::<3, 1>(3, i).copy_from(&w);
        }
        Ok(j)
    }

    /// Geometric Jacobian restricted to the task rows, `t = J q_dot`.
    pub fn geometric_jacobian(&self, q: &JointState) -> Result<DMatrix<f64>> {
        let full = self.full_jacobian(q)?;
        let rows = self.task_space.rows();
        Ok(DMatrix::from_fn(rows.len(), self.dof(), |r, c| full[(rows[r], c)]))
    }

    /// Lower bound on sigma_max over all configurations: the twist produced
    /// by the last joint alone, whose norm does not depend on `q`.
    pub fn sigma_max_floor(&self) -> Result<f64> {
        let j = self.geometric_jacobian(&JointState::zeros(self.dof()))?;
        Ok(j.column(self.dof() - 1).norm())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        file.into_model()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json_str(&s)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }
}

fn trans(x: f64, y: f64, z: f64) -> Isometry3<f64> {
    Isometry3::translation(x, y, z)
}

fn rot_x(a: f64) -> Isometry3<f64> {
    Isometry3::from_parts(Translation3::identity(), UnitQuaternion::from_axis_angle(&Vector3::x_axis(), a))
}

fn rot_z(a: f64) -> Isometry3<f64> {
    Isometry3::from_parts(Translation3::identity(), UnitQuaternion::from_axis_angle(&Vector3::z_axis(), a))
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformFile {
    #[serde(default)]
    pub translation: [f64; 3],
    /// `[ax, ay, az, theta]`; the axis may be zero when theta is zero.
    #[serde(default = "identity_axis_angle")]
    pub rotation_axis_angle: [f64; 4],
}

fn identity_axis_angle() -> [f64; 4] {
    [0.0, 0.0, 1.0, 0.0]
}

impl Default for TransformFile {
    fn default() -> Self {
        Self {
            translation: [0.0; 3],
            rotation_axis_angle: identity_axis_angle(),
        }
    }
}

impl TransformFile {
    fn to_isometry(&self, what: &str) -> Result<Isometry3<f64>> {
        let [ax, ay, az, theta] = self.rotation_axis_angle;
        let all = self.translation.iter().chain(self.rotation_axis_angle.iter());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(format!("{what}: non-finite transform")));
        }
        let axis = Vector3::new(ax, ay, az);
        let rot = if theta == 0.0 {
            UnitQuaternion::identity()
        } else {
            if (axis.norm() - 1.0).abs() > AXIS_UNIT_TOL {
                return Err(Error::InvalidModel(format!("{what}: rotation axis is not unit length")));
            }
            UnitQuaternion::from_axis_angle(&Unit::new_unchecked(axis), theta)
        };
        Ok(Isometry3::from_parts(Translation3::from(Vector3::from(self.translation)), rot))
    }

    fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let pose = PoseSE3::from_isometry(iso);
        let a = pose.axis();
        Self {
            translation: iso.translation.vector.into(),
            rotation_axis_angle: [a.x, a.y, a.z, pose.angle()],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointFile {
    pub kind: JointKind,
    pub axis: [f64; 3],
    #[serde(default)]
    pub origin: TransformFile,
}

/// On-disk manipulator description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub name: String,
    pub task_dim: usize,
    pub joints: Vec<JointFile>,
    #[serde(default)]
    pub end_effector_offset: TransformFile,
}

impl ModelFile {
    pub fn into_model(self) -> Result<ManipulatorModel> {
        let task_space = TaskSpace::try_from(self.task_dim).map_err(Error::InvalidModel)?;
        let mut joints = Vec::with_capacity(self.joints.len());
        for (i, j) in self.joints.iter().enumerate() {
            let axis = Vector3::from(j.axis);
            if !axis.iter().all(|v| v.is_finite()) || (axis.norm() - 1.0).abs() > AXIS_UNIT_TOL {
                return Err(Error::InvalidModel(format!("joint {i} axis is not unit length")));
            }
            joints.push(Joint {
                kind: j.kind,
                axis: Unit::new_normalize(axis),
                origin: j.origin.to_isometry(&format!("joint {i} origin"))?,
            });
        }
        let ee = self.end_effector_offset.to_isometry("end_effector_offset")?;
        ManipulatorModel::new(self.name, task_space, joints, ee)
    }
}

impl From<&ManipulatorModel> for ModelFile {
    fn from(m: &ManipulatorModel) -> Self {
        ModelFile {
            name: m.name.clone(),
            task_dim: m.task_dim(),
            joints: m
                .joints
                .iter()
                .map(|j| JointFile {
                    kind: j.kind,
                    axis: j.axis.into_inner().into(),
                    origin: TransformFile::from_isometry(&j.origin),
                })
                .collect(),
            end_effector_offset: TransformFile::from_isometry(&m.end_effector_offset),
        }
    }
}
