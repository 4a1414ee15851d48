//! Builtin scenarios.
//!
//! Spatial keypoints carry a fixed tool-down orientation. Reachability on
//! `synthetic7` follows from the wrist-center distance to the shoulder
//! (reach 0.80 m, inner void 0.18 m):
//!
//! | set   | point | position           | reachable |
//! |-------|-------|--------------------|-----------|
//! | line  | A     | (1.00, 0, 0.50)    | no        |
//! | line  | B     | (0.50, 0, 0.50)    | yes       |
//! | line  | C     | (0.00, 0, 0.50)    | no        |
//! | line  | D     | (0.50, 0, 0.50)    | yes       |
//! | plane | A     | (0.55, 0, 0.30)    | yes       |
//! | plane | B     | (0.40, 0.80, 0.30) | no        |
//! | plane | C     | (0.25, 0, 0.30)    | yes       |
//! | plane | D     | (0.40, -0.80, 0.30)| no        |

use nalgebra::Vector3;
use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

use super::{Coordinate, GoalSchedule, Scenario};
use crate::controller::ControllerGains;
use crate::error::{Error, Result};
use crate::kinematics::{PoseSE3, TaskSpace};
use crate::resolvers::{NullspaceObjective, ResolverConfig};

pub const BUILTIN_SCENARIOS: &[&str] = &[
    "2r_reach_in",
    "2r_reach_out",
    "line_keypoints",
    "plane_keypoints",
    "sinusoid_gimbal",
    "table1_sweep",
];

pub const KEYPOINT_DWELL_S: f64 = 20.0;
pub const GIMBAL_PERIOD_S: f64 = 20.0;

/// Baseline parameterizations on the planar 2R plus three J-PARSE
/// thresholds.
pub fn table1_resolvers() -> Vec<ResolverConfig> {
    vec![
        ResolverConfig::dls(0.22),
        ResolverConfig::dls(0.17),
        ResolverConfig::dls(0.10),
        ResolverConfig::adls(0.17, 0.5),
        ResolverConfig::adls(0.17, 0.25),
        ResolverConfig::adls(0.17, 0.1),
        ResolverConfig::edls(0.0, 0.3, 0.02),
        ResolverConfig::jparse(0.1),
        ResolverConfig::jparse(0.06),
        ResolverConfig::jparse(0.03),
    ]
}

fn planar_goal(x: f64, y: f64) -> PoseSE3 {
    PoseSE3::from_position(Vector3::new(x, y, 0.0))
}

fn tool_down(x: f64, y: f64, z: f64) -> PoseSE3 {
    PoseSE3::from_axis_angle(Vector3::new(x, y, z), Vector3::y(), PI)
}

fn two_r(name: &str, q0: [f64; 2], goal: PoseSE3, duration_s: f64) -> Scenario {
    Scenario {
        name: name.into(),
        model: "planar2r".into(),
        initial_q: q0.to_vec(),
        goal_schedule: GoalSchedule::FixedGoal { pose: goal },
        gains: ControllerGains::uniform(2, 0.1, 0.01),
        resolver: ResolverConfig::jparse(0.1),
        nullspace: None,
        duration_s,
        seed: 0,
        initial_q_noise: 0.0,
    }
}

fn keypoints(name: &str, pts: &[[f64; 3]]) -> Scenario {
    Scenario {
        name: name.into(),
        model: "synthetic7".into(),
        initial_q: vec![0.0, 0.2, 0.0, 1.6, 0.0, PI - 1.8, 0.0],
        goal_schedule: GoalSchedule::KeypointList {
            poses: pts.iter().map(|p| tool_down(p[0], p[1], p[2])).collect(),
            dwell_s: KEYPOINT_DWELL_S,
        },
        gains: ControllerGains::pos_ori(TaskSpace::Spatial6, 10.0, 10.0, 0.02).with_cap(1.0),
        resolver: ResolverConfig::jparse(0.1),
        nullspace: Some(NullspaceObjective::new(2.0, 0.6)),
        duration_s: KEYPOINT_DWELL_S * pts.len() as f64,
        seed: 0,
        initial_q_noise: 0.0,
    }
}

pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    Ok(match name {
        "2r_reach_in" | "table1_sweep" => {
            let mut s = two_r(name, [-FRAC_PI_4, FRAC_PI_4], planar_goal(1.1 * SQRT_2, 1.1 * SQRT_2), 50.0);
            s.name = name.into();
            s
        }
        "2r_reach_out" => two_r(name, [FRAC_PI_4, 1e-10], planar_goal(0.5 * SQRT_2, 0.5 * SQRT_2), 150.0),
        "line_keypoints" => keypoints(
            name,
            &[[1.0, 0.0, 0.5], [0.5, 0.0, 0.5], [0.0, 0.0, 0.5], [0.5, 0.0, 0.5]],
        ),
        "plane_keypoints" => keypoints(
            name,
            &[[0.55, 0.0, 0.30], [0.40, 0.80, 0.30], [0.25, 0.0, 0.30], [0.40, -0.80, 0.30]],
        ),
        "sinusoid_gimbal" => Scenario {
            name: name.into(),
            model: "wrist6r".into(),
            initial_q: vec![0.0; 6],
            goal_schedule: GoalSchedule::SinusoidTrack {
                fixed: PoseSE3::from_position(Vector3::new(0.432, 0.0, 1.105)),
                axis: Coordinate::Y,
                amplitude: 0.3,
                period_s: GIMBAL_PERIOD_S,
            },
            gains: ControllerGains::uniform(6, 50.0, 0.02),
            resolver: ResolverConfig::jparse(0.1),
            nullspace: None,
            duration_s: 3.0 * GIMBAL_PERIOD_S,
            seed: 0,
            initial_q_noise: 0.0,
        },
        other => return Err(Error::UnknownBuiltin(other.to_string())),
    })
}

pub fn builtin_scenarios() -> Vec<Scenario> {
    BUILTIN_SCENARIOS
        .iter()
        .map(|n| builtin_scenario(n).expect("builtin names are valid"))
        .collect()
}
