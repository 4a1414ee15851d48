//! Wire format: every frame is a JSON text message
//! `{"type": ..., "seq": ..., "payload": ...}`.

use jparse_core::kinematics::PoseSE3;
use jparse_core::resolvers::ResolverConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::session::{Command, GainsUpdate, GoalRequest, Mode};

pub const CLIENT_TYPES: &[&str] = &["set_goal", "set_twist", "set_resolver", "set_gains", "reset"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(rename = "type")]
    pub kind: String,
    pub seq: u64,
    #[serde(default)]
    pub payload: Value,
}

impl Envelope {
    pub fn new(kind: &str, seq: u64, payload: impl Serialize) -> Self {
        Self {
            kind: kind.to_string(),
            seq,
            payload: serde_json::to_value(payload).expect("payload serializes"),
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("envelope serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Not JSON or not an envelope.
    Malformed,
    /// `seq` did not increase.
    BadSeq,
    UnknownType,
    /// Payload does not parse or has the wrong shape.
    BadPayload,
    /// Well-formed but refused, e.g. gains beyond the stability bound.
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: ErrorCode,
    pub message: String,
    /// Client `seq` of the offending message, when it could be read.
    pub in_reply_to: Option<u64>,
}

/// One broadcast per tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePayload {
    pub tick: u64,
    /// Simulated time at the start of the tick.
    pub t: f64,
    pub mode: Mode,
    pub resolver: String,
    /// Threshold used for `flags`.
    pub gamma: f64,
    pub q: Vec<f64>,
    /// Velocity applied during this tick.
    pub q_dot: Vec<f64>,
    pub pose: PoseSE3,
    pub goal: Option<PoseSE3>,
    /// Twist resolved this tick (zero while holding or after a stale twist).
    pub twist: Vec<f64>,
    pub sigma: Vec<f64>,
    pub inv_cond: f64,
    pub manipulability: f64,
    pub flags: Vec<bool>,
    /// `U_i sigma_i`, one task-space vector per singular value.
    pub ellipse_axes: Vec<Vec<f64>>,
    /// Joint origins in the world frame followed by the end-effector
    /// position.
    pub joint_positions: Vec<[f64; 3]>,
    /// `|t| / (gamma sigma_max)` when the resolver guarantees it.
    pub speed_bound: Option<f64>,
    pub speed_bound_ok: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetGoalPayload {
    position: [f64; 3],
    #[serde(default)]
    axis_angle: Option<[f64; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetTwistPayload {
    twist: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ResolverPayload {
    Spec { spec: String },
    Config(ResolverConfig),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GainValue {
    Uniform(f64),
    PerRow(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetGainsPayload {
    k: GainValue,
    #[serde(default)]
    twist_cap: Option<f64>,
    #[serde(default)]
    linear_cap: Option<f64>,
    #[serde(default)]
    angular_cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolError {
    pub code: ErrorCode,
    pub message: String,
}

impl ProtocolError {
    fn payload(e: serde_json::Error) -> Self {
        Self {
            code: ErrorCode::BadPayload,
            message: e.to_string(),
        }
    }
}

fn from_payload<T: serde::de::DeserializeOwned>(v: &Value) -> Result<T, ProtocolError> {
    serde_json::from_value(v.clone()).map_err(ProtocolError::payload)
}

/// Decodes a client envelope into a session command. Shape checks only;
/// dimension and stability checks happen in `apply_command`.
pub fn parse_command(env: &Envelope) -> Result<Command, ProtocolError> {
    match env.kind.as_str() {
        "set_goal" => {
            let p: SetGoalPayload = from_payload(&env.payload)?;
            Ok(Command::SetGoal(GoalRequest {
                position: p.position,
                axis_angle: p.axis_angle,
            }))
        }
        "set_twist" => Ok(Command::SetTwist(from_payload::<SetTwistPayload>(&env.payload)?.twist)),
        "set_resolver" => {
            let cfg = match from_payload::<ResolverPayload>(&env.payload)? {
                ResolverPayload::Spec { spec } => spec.parse().map_err(|e: jparse_core::Error| ProtocolError {
                    code: ErrorCode::BadPayload,
                    message: e.to_string(),
                })?,
                ResolverPayload::Config(c) => c,
            };
            Ok(Command::SetResolver(cfg))
        }
        "set_gains" => {
            let p: SetGainsPayload = from_payload(&env.payload)?;
            Ok(Command::SetGains(GainsUpdate {
                k: match p.k {
                    GainValue::Uniform(k) => vec![k],
                    GainValue::PerRow(k) => k,
                },
                twist_cap: p.twist_cap,
                linear_cap: p.linear_cap,
                angular_cap: p.angular_cap,
            }))
        }
        "reset" => Ok(Command::Reset),
        "state" | "error" => Err(ProtocolError {
            code: ErrorCode::UnknownType,
            message: format!("`{}` is sent by the server only", env.kind),
        }),
        other => Err(ProtocolError {
            code: ErrorCode::UnknownType,
            message: format!("unknown message type `{other}`; expected one of {}", CLIENT_TYPES.join(", ")),
        }),
    }
}

/// Per-connection check that client `seq` values strictly increase.
#[derive(Debug, Default, Clone)]
pub struct SeqGuard {
    last: Option<u64>,
}

impl SeqGuard {
    pub fn accept(&mut self, seq: u64) -> Result<(), ProtocolError> {
        if let Some(last) = self.last {
            if seq <= last {
                return Err(ProtocolError {
                    code: ErrorCode::BadSeq,
                    message: format!("seq {seq} does not exceed previous {last}"),
                });
            }
        }
        self.last = Some(seq);
        Ok(())
    }
}

/// Parses raw text into an envelope, checks its sequence number and decodes
/// the command. On failure the reply payload is returned instead.
pub fn decode_client_text(text: &str, guard: &mut SeqGuard) -> Result<(u64, Command), ErrorPayload> {
    let env: Envelope = serde_json::from_str(text).map_err(|e| ErrorPayload {
        code: ErrorCode::Malformed,
        message: e.to_string(),
        in_reply_to: None,
    })?;
    let reply = |e: ProtocolError| ErrorPayload {
        code: e.code,
        message: e.message,
        in_reply_to: Some(env.seq),
    };
    guard.accept(env.seq).map_err(reply)?;
    let cmd = parse_command(&env).map_err(reply)?;
    Ok((env.seq, cmd))
}
