//! Builtin kinematic models.
//!
//! `synthetic7` and `wrist6r` are stand-ins for commercial arms whose
//! parameters are not published with the algorithm; they are sized so the
//! desk-scale keypoint and tracking scenarios land on both sides of the
//! workspace boundary and cross wrist singularities.

use nalgebra::{Isometry3, Vector3};

use super::model::{Joint, ManipulatorModel, TaskSpace};
use crate::error::{Error, Result};

pub const BUILTIN_MODELS: &[&str] = &["planar2r", "planar3r", "synthetic7", "wrist6r"];

/// Synthetic 7R link lengths: shoulder height, upper arm, forearm, tool.
pub const SYNTH7_SHOULDER: f64 = 0.5;
pub const SYNTH7_UPPER: f64 = 0.49;
pub const SYNTH7_FORE: f64 = 0.31;
pub const SYNTH7_TOOL: f64 = 0.1;

/// Wrist-partitioned 6R dimensions. The elbow sits `WRIST6R_SETBACK` behind
/// the shoulder along x, so the flange at `q = 0` is at
/// `(FORE - SETBACK + TOOL, 0, SHOULDER + UPPER)`.
pub const WRIST6R_SHOULDER: f64 = 0.66;
pub const WRIST6R_UPPER: f64 = 0.445;
pub const WRIST6R_SETBACK: f64 = 0.2;
pub const WRIST6R_FORE: f64 = 0.532;
pub const WRIST6R_TOOL: f64 = 0.1;

pub fn builtin_model(name: &str) -> Result<ManipulatorModel> {
    match name {
        "planar2r" => planar(name, &[1.0, 1.0], TaskSpace::Planar2),
        "planar3r" => planar(name, &[1.0, 0.8, 0.5], TaskSpace::Planar3),
        "synthetic7" => synthetic7(),
        "wrist6r" => wrist6r(),
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

fn at(x: f64, y: f64, z: f64) -> Isometry3<f64> {
    Isometry3::translation(x, y, z)
}

/// Planar chain of revolute z joints with links along x.
pub fn planar(name: &str, links: &[f64], task_space: TaskSpace) -> Result<ManipulatorModel> {
    let mut joints = Vec::with_capacity(links.len());
    let mut prev = 0.0;
    for &l in links {
        joints.push(Joint::revolute(Vector3::z(), at(prev, 0.0, 0.0)));
        prev = l;
    }
    ManipulatorModel::new(name, task_space, joints, at(prev, 0.0, 0.0))
}

/// Base yaw, shoulder pitch, upper-arm roll, elbow pitch, forearm roll,
/// wrist pitch, flange roll. The tool points along the last z axis.
fn synthetic7() -> Result<ManipulatorModel> {
    let z = Vector3::z();
    let y = Vector3::y();
    let joints = vec![
        Joint::revolute(z, at(0.0, 0.0, 0.0)),
        Joint::revolute(y, at(0.0, 0.0, SYNTH7_SHOULDER)),
        Joint::revolute(z, at(0.0, 0.0, 0.0)),
        Joint::revolute(y, at(0.0, 0.0, SYNTH7_UPPER)),
        Joint::revolute(z, at(0.0, 0.0, 0.0)),
        Joint::revolute(y, at(0.0, 0.0, SYNTH7_FORE)),
        Joint::revolute(z, at(0.0, 0.0, 0.0)),
    ];
    ManipulatorModel::new("synthetic7", TaskSpace::Spatial6, joints, at(0.0, 0.0, SYNTH7_TOOL))
}

/// PUMA-like layout: yaw, two pitches, then a roll-pitch-roll wrist whose
/// axes intersect at the wrist center. At `q = 0` the two roll axes are
/// collinear.
fn wrist6r() -> Result<ManipulatorModel> {
    let x = Vector3::x();
    let y = Vector3::y();
    let z = Vector3::z();
    let joints = vec![
        Joint::revolute(z, at(0.0, 0.0, 0.0)),
        Joint::revolute(y, at(0.0, 0.0, WRIST6R_SHOULDER)),
        Joint::revolute(y, at(-WRIST6R_SETBACK, 0.0, WRIST6R_UPPER)),
        Joint::revolute(x, at(WRIST6R_FORE, 0.0, 0.0)),
        Joint::revolute(y, at(0.0, 0.0, 0.0)),
        Joint::revolute(x, at(0.0, 0.0, 0.0)),
    ];
    ManipulatorModel::new("wrist6r", TaskSpace::Spatial6, joints, at(WRIST6R_TOOL, 0.0, 0.0))
}
