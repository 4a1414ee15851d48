//! Session state and its pure transitions. The server owns one
//! `SessionState` inside the tick loop; everything here is deterministic.

use std::sync::Arc;

use jparse_core::controller::{command_twist, flag_gamma, stability_report, task_error, ControllerGains};
use jparse_core::kinematics::{JointState, ManipulatorModel, PoseSE3, Twist};
use jparse_core::resolvers::{ellipsoid_axes, resolve_factors, singularity_metrics, svd, ResolverConfig};
use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{ErrorCode, StatePayload};

/// Direct twists older than this (simulated seconds) are treated as zero.
pub const STALE_TWIST_S: f64 = 0.5;

/// Relative slack on the per-tick speed-bound check.
const SPEED_BOUND_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    GoalFollow,
    DirectTwist,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalRequest {
    pub position: [f64; 3],
    /// `[ax, ay, az, theta]`; `None` keeps the current end-effector
    /// orientation.
    pub axis_angle: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainsUpdate {
    /// One value for all task rows, or one per row.
    pub k: Vec<f64>,
    pub twist_cap: Option<f64>,
    pub linear_cap: Option<f64>,
    pub angular_cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    SetGoal(GoalRequest),
    SetTwist(Vec<f64>),
    SetResolver(ResolverConfig),
    SetGains(GainsUpdate),
    Reset,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Rejected(String),
}

impl CommandError {
    pub fn code(&self) -> ErrorCode {
        match self {
            CommandError::Invalid(_) => ErrorCode::BadPayload,
            CommandError::Rejected(_) => ErrorCode::Rejected,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub model: ManipulatorModel,
    pub initial_q: Vec<f64>,
    pub gains: ControllerGains,
    pub resolver: ResolverConfig,
}

impl SessionConfig {
    /// Uniform unit gains, twist norm capped at 1, J-PARSE with gamma 0.1 and
    /// every joint at 0.3 rad.
    pub fn with_defaults(model: ManipulatorModel, tick_hz: f64) -> Self {
        let m = model.task_dim();
        let n = model.dof();
        Self {
            model,
            initial_q: vec![0.3; n],
            gains: ControllerGains::uniform(m, 1.0, 1.0 / tick_hz).with_cap(1.0),
            resolver: ResolverConfig::jparse(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub model: Arc<ManipulatorModel>,
    pub initial_q: Vec<f64>,
    pub q: Vec<f64>,
    pub resolver: ResolverConfig,
    pub gains: ControllerGains,
    pub goal: Option<PoseSE3>,
    pub mode: Mode,
    pub twist: Vec<f64>,
    /// Simulated time at which `twist` was received.
    pub twist_t: f64,
    /// Simulated time of the last accepted command.
    pub last_command_t: f64,
    pub tick: u64,
}

fn invalid(msg: impl Into<String>) -> CommandError {
    CommandError::Invalid(msg.into())
}

impl SessionState {
    pub fn new(cfg: SessionConfig) -> Result<Self, CommandError> {
        let m = cfg.model.task_dim();
        if cfg.initial_q.len() != cfg.model.dof() {
            return Err(invalid(format!(
                "initial_q has {} entries, model has {} joints",
                cfg.initial_q.len(),
                cfg.model.dof()
            )));
        }
        cfg.gains.validate(m).map_err(|e| invalid(e.to_string()))?;
        cfg.resolver.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(Self {
            model: Arc::new(cfg.model),
            q: cfg.initial_q.clone(),
            initial_q: cfg.initial_q,
            resolver: cfg.resolver,
            gains: cfg.gains,
            goal: None,
            mode: Mode::GoalFollow,
            twist: vec![0.0; m],
            twist_t: 0.0,
            last_command_t: 0.0,
            tick: 0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.gains.dt
    }

    /// Simulated time at the start of the next tick.
    pub fn time(&self) -> f64 {
        self.tick as f64 * self.dt()
    }

    pub fn pose(&self) -> PoseSE3 {
        self.model
            .forward_kinematics(&JointState::new(self.q.clone()))
            .expect("q length is checked on construction")
    }

    fn twist_is_stale(&self) -> bool {
        self.time() - self.twist_t > STALE_TWIST_S
    }
}

/// Pure transition. The input state is untouched; a rejected command
/// leaves no trace.
pub fn apply_command(state: &SessionState, cmd: &Command) -> Result<SessionState, CommandError> {
    let m = state.model.task_dim();
    let mut next = state.clone();
    match cmd {
        Command::SetGoal(g) => {
            let finite = g.position.iter().chain(g.axis_angle.iter().flatten()).all(|v| v.is_finite());
            if !finite {
                return Err(invalid("goal contains non-finite values"));
            }
            let position = Vector3::from(g.position);
            next.goal = Some(match g.axis_angle {
                Some([ax, ay, az, theta]) => {
                    if theta != 0.0 && Vector3::new(ax, ay, az).norm() == 0.0 {
                        return Err(invalid("goal axis is zero"));
                    }
                    PoseSE3::from_axis_angle(position, Vector3::new(ax, ay, az), theta)
                }
                None => state.pose().with_position(position),
            });
            next.mode = Mode::GoalFollow;
            next.twist = vec![0.0; m];
        }
        Command::SetTwist(t) => {
            if t.len() != m {
                return Err(invalid(format!("twist has {} entries, task space has {m}", t.len())));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(invalid("twist contains non-finite values"));
            }
            next.twist = t.clone();
            next.twist_t = state.time();
            next.mode = Mode::DirectTwist;
            next.goal = None;
        }
        Command::SetResolver(cfg) => {
            cfg.validate().map_err(|e| invalid(e.to_string()))?;
            next.resolver = *cfg;
        }
        Command::SetGains(u) => {
            let k = match u.k.len() {
                1 => vec![u.k[0]; m],
                len if len == m => u.k.clone(),
                len => return Err(invalid(format!("k has {len} entries, expected 1 or {m}"))),
            };
            let gains = ControllerGains {
                k,
                dt: state.gains.dt,
                twist_cap: u.twist_cap.unwrap_or(state.gains.twist_cap),
                linear_cap: u.linear_cap.unwrap_or(state.gains.linear_cap),
                angular_cap: u.angular_cap.unwrap_or(state.gains.angular_cap),
            };
            gains.validate(m).map_err(|e| invalid(e.to_string()))?;
            let report = stability_report(&gains, m, None, None);
            if !report.passes_simple {
                return Err(CommandError::Rejected(format!(
                    "k*dt = {} exceeds the discrete stability bound k*dt <= {}",
                    report.k_dt, report.simple_bound
                )));
            }
            next.gains = gains;
        }
        Command::Reset => {
            next.q = state.initial_q.clone();
            next.goal = None;
            next.mode = Mode::GoalFollow;
            next.twist = vec![0.0; m];
        }
    }
    next.last_command_t = state.time();
    Ok(next)
}

fn cap_norm(v: &mut DVector<f64>, cap: f64) {
    if cap > 0.0 {
        let n = v.norm();
        if n > cap {
            *v *= cap / n;
        }
    }
}

/// Advances one tick and returns the new state with the snapshot taken at
/// the start of the tick.
pub fn tick(state: &SessionState) -> jparse_core::Result<(SessionState, StatePayload)> {
    let model = &state.model;
    let space = model.task_space;
    let m = space.dim();
    let q = JointState::new(state.q.clone());
    let pose = model.forward_kinematics(&q)?;
    let f = svd(&model.geometric_jacobian(&q)?)?;

    let twist = match state.mode {
        Mode::GoalFollow => match &state.goal {
            Some(goal) => command_twist(&task_error(goal, &pose, space), &state.gains, space),
            None => Twist::zeros(m),
        },
        Mode::DirectTwist if state.twist_is_stale() => Twist::zeros(m),
        Mode::DirectTwist => {
            let mut t = DVector::from_column_slice(&state.twist);
            cap_norm(&mut t, state.gains.twist_cap);
            Twist(t)
        }
    };
    let q_dot = resolve_factors(&f, &twist, &state.resolver, None, &q)?;
    let gamma = flag_gamma(&state.resolver);
    let metrics = singularity_metrics(&f, gamma);
    let speed_bound = match state.resolver {
        ResolverConfig::Jparse { gamma, .. } if f.sigma_max() > 0.0 => Some(twist.norm() / (gamma * f.sigma_max())),
        _ => None,
    };
    let speed_bound_ok = speed_bound.map(|b| q_dot.norm() <= b * (1.0 + SPEED_BOUND_RTOL) + f64::MIN_POSITIVE);

    let (frames, ee) = model.joint_frames(&q)?;
    let mut joint_positions: Vec<[f64; 3]> = frames.iter().map(|(_, p)| [p.x, p.y, p.z]).collect();
    let e = ee.translation.vector;
    joint_positions.push([e.x, e.y, e.z]);

    let snapshot = StatePayload {
        tick: state.tick,
        t: state.time(),
        mode: state.mode,
        resolver: state.resolver.to_string(),
        gamma,
        q: state.q.clone(),
        q_dot: q_dot.iter().copied().collect(),
        pose,
        goal: state.goal,
        twist: twist.0.iter().copied().collect(),
        sigma: f.sigma.iter().copied().collect(),
        inv_cond: metrics.inverse_condition_number,
        manipulability: metrics.manipulability,
        flags: metrics.singular_flags,
        ellipse_axes: ellipsoid_axes(&f).iter().map(|a| a.iter().copied().collect()).collect(),
        joint_positions,
        speed_bound,
        speed_bound_ok,
    };

    let mut next = state.clone();
    next.q = (&q.0 + &q_dot * state.dt()).iter().copied().collect();
    next.tick += 1;
    Ok((next, snapshot))
}

/// One scripted client message: applied before tick `at_tick` runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedCommand {
    pub at_tick: u64,
    pub seq: u64,
    pub command: Command,
}

/// Result of applying one scripted command.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutcome {
    pub seq: u64,
    pub at_tick: u64,
    pub error: Option<CommandError>,
}

/// Replays a script for `ticks` ticks, the way the server tick loop does.
pub fn replay(
    initial: &SessionState,
    script: &[ScriptedCommand],
    ticks: u64,
) -> jparse_core::Result<(Vec<StatePayload>, Vec<CommandOutcome>)> {
    let mut state = initial.clone();
    let mut states = Vec::with_capacity(ticks as usize);
    let mut outcomes = Vec::new();
    let mut pending = script.iter().peekable();
    for _ in 0..ticks {
        while let Some(c) = pending.next_if(|c| c.at_tick <= state.tick) {
            let error = match apply_command(&state, &c.command) {
                Ok(s) => {
                    state = s;
                    None
                }
                Err(e) => Some(e),
            };
            outcomes.push(CommandOutcome {
                seq: c.seq,
                at_tick: state.tick,
                error,
            });
        }
        let (next, snap) = tick(&state)?;
        states.push(snap);
        state = next;
    }
    Ok((states, outcomes))
}
