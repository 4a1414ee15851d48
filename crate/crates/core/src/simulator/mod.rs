//! Scenario definitions and the kinematic simulation loop.

mod log;
mod scenarios;
mod summary;

pub use log::{LogRow, TrajectoryLog};
pub use scenarios::{builtin_scenario, builtin_scenarios, table1_resolvers, BUILTIN_SCENARIOS};
pub use summary::{summarize, SummaryStats, LYAPUNOV_INCREASE_TOL, MIN_SUMMARY_ROWS};

use nalgebra::{DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::Path;

use crate::controller::{self, ControllerGains};
use crate::error::{Error, Result};
use crate::kinematics::{load_model, JointState, ManipulatorModel, PoseSE3};
use crate::resolvers::{NullspaceObjective, ResolverConfig};

/// Slack added before flooring `t / dwell`, so a keypoint switch lands on
/// the row whose nominal time is a multiple of the dwell.
const SCHEDULE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinate {
    X,
    Y,
    Z,
}

impl Coordinate {
    fn index(self) -> usize {
        match self {
            Coordinate::X => 0,
            Coordinate::Y => 1,
            Coordinate::Z => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoalSchedule {
    /// Each pose is held for `dwell_s`; the last one is held thereafter.
    KeypointList { poses: Vec<PoseSE3>, dwell_s: f64 },
    /// `fixed` with one coordinate offset by `amplitude sin(2 pi t / period_s)`.
    SinusoidTrack {
        fixed: PoseSE3,
        axis: Coordinate,
        amplitude: f64,
        period_s: f64,
    },
    FixedGoal { pose: PoseSE3 },
}

impl GoalSchedule {
    pub fn goal_at(&self, t: f64) -> PoseSE3 {
        match self {
            GoalSchedule::KeypointList { poses, dwell_s } => {
                let idx = ((t / dwell_s) + SCHEDULE_EPS).floor().max(0.0) as usize;
                poses[idx.min(poses.len() - 1)]
            }
            GoalSchedule::SinusoidTrack {
                fixed,
                axis,
                amplitude,
                period_s,
            } => {
                let mut p: Vector3<f64> = *fixed.position();
                p[axis.index()] += amplitude * (TAU * t / period_s).sin();
                fixed.with_position(p)
            }
            GoalSchedule::FixedGoal { pose } => *pose,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GoalSchedule::KeypointList { poses, dwell_s } => {
                if poses.is_empty() {
                    return Err(Error::param("poses", "keypoint list is empty"));
                }
                if !(dwell_s.is_finite() && *dwell_s > 0.0) {
                    return Err(Error::param("dwell_s", "must be > 0"));
                }
            }
            GoalSchedule::SinusoidTrack {
                amplitude, period_s, ..
            } => {
                if !(amplitude.is_finite() && *amplitude > 0.0) {
                    return Err(Error::param("amplitude", "must be > 0"));
                }
                if !(period_s.is_finite() && *period_s > 0.0) {
                    return Err(Error::param("period_s", "must be > 0"));
                }
            }
            GoalSchedule::FixedGoal { .. } => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Builtin model name or path to a model JSON file.
    pub model: String,
    pub initial_q: Vec<f64>,
    pub goal_schedule: GoalSchedule,
    pub gains: ControllerGains,
    pub resolver: ResolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nullspace: Option<NullspaceObjective>,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    /// Half-width of a uniform perturbation added to `initial_q`, drawn from
    /// `seed`. Zero leaves the start exact.
    #[serde(default)]
    pub initial_q_noise: f64,
}

impl Scenario {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn with_resolver(&self, resolver: ResolverConfig) -> Self {
        Self {
            resolver,
            ..self.clone()
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration_s / self.gains.dt).round() as usize
    }

    pub fn validate(&self, model: &ManipulatorModel) -> Result<()> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::param("duration_s", "must be > 0"));
        }
        if self.initial_q.len() != model.dof() {
            return Err(Error::DimensionMismatch {
                context: "initial_q",
                expected: model.dof(),
                actual: self.initial_q.len(),
            });
        }
        if !(self.initial_q_noise.is_finite() && self.initial_q_noise >= 0.0) {
            return Err(Error::param("initial_q_noise", "must be >= 0"));
        }
        self.goal_schedule.validate()?;
        self.gains.validate(model.task_dim())?;
        self.resolver.validate()?;
        if let Some(ns) = &self.nullspace {
            ns.validate(model.dof())?;
        }
        Ok(())
    }

    /// Start configuration after the seeded perturbation.
    pub fn start_q(&self) -> JointState {
        let mut q = DVector::from_column_slice(&self.initial_q);
        if self.initial_q_noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for v in q.iter_mut() {
                *v += rng.random_range(-self.initial_q_noise..=self.initial_q_noise);
            }
        }
        JointState(q)
    }
}

pub fn run_scenario(s: &Scenario) -> Result<TrajectoryLog> {
    let model = load_model(&s.model)?;
    run_scenario_with_model(&model, s)
}

/// Runs `s` on an already loaded model; `s.model` is ignored.
pub fn run_scenario_with_model(model: &ManipulatorModel, s: &Scenario) -> Result<TrajectoryLog> {
    s.validate(model)?;
    let dt = s.gains.dt;
    let steps = s.steps();
    let mut q = s.start_q();
    let mut rows = Vec::with_capacity(steps);
    let mut max_ratio: Option<f64> = None;
    for k in 0..steps {
        let t = k as f64 * dt;
        let goal = s.goal_schedule.goal_at(t);
        let r = controller::step(model, &q, &goal, &s.gains, &s.resolver, s.nullspace.as_ref())?;
        if let Some(bound) = r.speed_bound {
            let speed = r.q_dot.norm();
            let ratio = if bound > 0.0 { speed / bound } else if speed == 0.0 { 0.0 } else { f64::INFINITY };
            max_ratio = Some(max_ratio.map_or(ratio, |m: f64| m.max(ratio)));
        }
        let a = r.pose.axis();
        rows.push(LogRow {
            t,
            q: q.0.iter().copied().collect(),
            q_dot: r.q_dot.iter().copied().collect(),
            position: (*r.pose.position()).into(),
            axis: [a.x, a.y, a.z],
            angle: r.pose.angle(),
            pos_err: r.pos_err,
            ori_err: r.ori_err,
            sigma: r.sigma.iter().copied().collect(),
            inv_cond: r.inv_cond,
            lyapunov: r.lyapunov,
            flags: r.flags,
        });
        q = r.q_next;
    }
    Ok(TrajectoryLog {
        dt,
        rows,
        max_speed_ratio: max_ratio,
    })
}
