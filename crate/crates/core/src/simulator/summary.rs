use serde::{Deserialize, Serialize};

use super::log::TrajectoryLog;
use crate::error::{Error, Result};

/// Rise in V between consecutive rows that counts as an increase event.
pub const LYAPUNOV_INCREASE_TOL: f64 = 1e-9;

pub const MIN_SUMMARY_ROWS: usize = 3;

/// Post-processed statistics. Every field depends only on the CSV columns,
/// with `dt` taken from the time stamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub rows: usize,
    pub dt: f64,
    /// Per-joint peak `|q_dot|`.
    pub peak_qdot: Vec<f64>,
    /// Per-joint peak `|q_ddot|` from first differences over `dt`.
    pub peak_qddot: Vec<f64>,
    /// Per-joint peak jerk from second differences over `dt^2`.
    pub peak_jerk: Vec<f64>,
    pub peak_qdot_max: f64,
    pub peak_qddot_max: f64,
    pub peak_jerk_max: f64,
    /// Peak Euclidean norm of `q_dot` over rows.
    pub peak_qdot_norm: f64,
    /// Mean errors over the final 10% of rows.
    pub steady_pos_err: f64,
    pub steady_ori_err: f64,
    pub final_pos_err: f64,
    pub final_ori_err: f64,
    pub min_inv_cond: f64,
    pub lyapunov_increase_events: usize,
}

fn max_abs(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |a, b| a.max(b.abs()))
}

pub fn summarize(log: &TrajectoryLog) -> Result<SummaryStats> {
    let rows = &log.rows;
    if rows.len() < MIN_SUMMARY_ROWS {
        return Err(Error::LogTooShort {
            rows: rows.len(),
            min: MIN_SUMMARY_ROWS,
        });
    }
    let dt = rows[1].t - rows[0].t;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Parse("time stamps must be strictly increasing".into()));
    }
    let n = rows[0].q_dot.len();
    let qd = |k: usize, j: usize| rows[k].q_dot[j];

    let peak_qdot: Vec<f64> = (0..n).map(|j| max_abs((0..rows.len()).map(|k| qd(k, j)))).collect();
    let peak_qddot: Vec<f64> = (0..n)
        .map(|j| max_abs((1..rows.len()).map(|k| (qd(k, j) - qd(k - 1, j)) / dt)))
        .collect();
    let peak_jerk: Vec<f64> = (0..n)
        .map(|j| max_abs((2..rows.len()).map(|k| (qd(k, j) - 2.0 * qd(k - 1, j) + qd(k - 2, j)) / (dt * dt))))
        .collect();
    let peak_qdot_norm = rows
        .iter()
        .map(|r| r.q_dot.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);

    let tail = rows.len().div_ceil(10).max(1);
    let tail_rows = &rows[rows.len() - tail..];
    let steady_pos_err = tail_rows.iter().map(|r| r.pos_err).sum::<f64>() / tail as f64;
    let steady_ori_err = tail_rows.iter().map(|r| r.ori_err).sum::<f64>() / tail as f64;
    let last = rows.last().expect("non-empty");

    let lyapunov_increase_events = rows
        .windows(2)
        .filter(|w| w[1].lyapunov - w[0].lyapunov > LYAPUNOV_INCREASE_TOL)
        .count();

    let peak_all = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(SummaryStats {
        rows: rows.len(),
        dt,
        peak_qdot_max: peak_all(&peak_qdot),
        peak_qddot_max: peak_all(&peak_qddot),
        peak_jerk_max: peak_all(&peak_jerk),
        peak_qdot,
        peak_qddot,
        peak_jerk,
        peak_qdot_norm,
        steady_pos_err,
        steady_ori_err,
        final_pos_err: last.pos_err,
        final_ori_err: last.ori_err,
        min_inv_cond: rows.iter().map(|r| r.inv_cond).fold(f64::INFINITY, f64::min),
        lyapunov_increase_events,
    })
}
