//! Discrete proportional task-space velocity controller.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{pose_error, JointState, ManipulatorModel, PoseSE3, TaskError, TaskSpace, Twist};
use crate::resolvers::{self, NullspaceObjective, ResolverConfig};

/// Threshold used for singular-flag reporting when the resolver has no
/// gamma of its own.
pub const DEFAULT_FLAG_GAMMA: f64 = 0.1;

/// Smallest eigenvalue of Theta that still counts as positive semi-definite.
pub const THETA_PSD_TOL: f64 = 1e-10;

/// Relative slack when comparing `k dt` against a bound, so that decimal
/// inputs such as `k = 200, dt = 0.01` sit on the boundary.
const BOUND_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    /// Per-axis proportional gains (1/s), one per task row.
    pub k: Vec<f64>,
    /// Control period (s).
    pub dt: f64,
    /// Cap on the full twist norm; 0 disables.
    #[serde(default)]
    pub twist_cap: f64,
    /// Optional cap on the linear block norm; 0 disables.
    #[serde(default)]
    pub linear_cap: f64,
    /// Optional cap on the angular block norm; 0 disables.
    #[serde(default)]
    pub angular_cap: f64,
}

impl ControllerGains {
    pub fn uniform(m: usize, k: f64, dt: f64) -> Self {
        Self {
            k: vec![k; m],
            dt,
            twist_cap: 0.0,
            linear_cap: 0.0,
            angular_cap: 0.0,
        }
    }

    /// `k_pos` on the linear rows and `k_ori` on the angular rows.
    pub fn pos_ori(space: TaskSpace, k_pos: f64, k_ori: f64, dt: f64) -> Self {
        let lin = space.linear_rows();
        let k = (0..space.dim()).map(|i| if i < lin { k_pos } else { k_ori }).collect();
        Self {
            k,
            dt,
            twist_cap: 0.0,
            linear_cap: 0.0,
            angular_cap: 0.0,
        }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.twist_cap = cap;
        self
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn k_max(&self) -> f64 {
        self.k.iter().copied().fold(0.0, f64::max)
    }

    pub fn k_pos(&self) -> f64 {
        self.k.first().copied().unwrap_or(0.0)
    }

    pub fn k_ori(&self) -> f64 {
        self.k.last().copied().unwrap_or(0.0)
    }

    pub fn is_uniform(&self) -> bool {
        self.k.windows(2).all(|w| w[0] == w[1])
    }

    pub fn k_dt(&self) -> f64 {
        self.k_max() * self.dt
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.k.len() != m {
            return Err(Error::DimensionMismatch {
                context: "gain vector",
                expected: m,
                actual: self.k.len(),
            });
        }
        if self.k.iter().any(|&k| !(k.is_finite() && k > 0.0)) {
            return Err(Error::param("k", "all gains must be positive"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        for (name, c) in [
            ("twist_cap", self.twist_cap),
            ("linear_cap", self.linear_cap),
            ("angular_cap", self.angular_cap),
        ] {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::param(name, "must be >= 0"));
            }
        }
        Ok(())
    }
}

fn cap_norm(v: &mut [f64], cap: f64) {
    if cap <= 0.0 {
        return;
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > cap {
        let s = cap / n;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

/// `t = K p` with optional block caps followed by the full-norm cap.
///
/// `error` is the unweighted task error `p`; the gains enter only here.
pub fn command_twist(error: &TaskError, gains: &ControllerGains, space: TaskSpace) -> Twist {
    let mut t: Vec<f64> = error.0.iter().zip(&gains.k).map(|(e, k)| e * k).collect();
    let lin = space.linear_rows().min(t.len());
    let (a, b) = t.split_at_mut(lin);
    cap_norm(a, gains.linear_cap);
    cap_norm(b, gains.angular_cap);
    cap_norm(&mut t, gains.twist_cap);
    Twist(DVector::from_vec(t))
}

/// `V = 1/2 e^T K^{-1} e` for the gain-weighted error `e = K p`.
pub fn lyapunov_value(error: &TaskError, gains: &ControllerGains) -> f64 {
    0.5 * error.0.iter().zip(&gains.k).map(|(e, k)| e * e / k).sum::<f64>()
}

/// Unweighted task-space error of `current` relative to `goal`.
pub fn task_error(goal: &PoseSE3, current: &PoseSE3, space: TaskSpace) -> TaskError {
    pose_error(goal, current, 1.0, 1.0).restrict(space)
}

fn weighted(p: &TaskError, gains: &ControllerGains) -> TaskError {
    TaskError(DVector::from_iterator(p.dim(), p.0.iter().zip(&gains.k).map(|(e, k)| e * k)))
}

/// Everything observed during one control period.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub q_next: JointState,
    pub q_dot: DVector<f64>,
    /// Pose at the start of the step.
    pub pose: PoseSE3,
    pub twist: Twist,
    pub pos_err: f64,
    pub ori_err: f64,
    pub sigma: DVector<f64>,
    pub inv_cond: f64,
    pub manipulability: f64,
    pub lyapunov: f64,
    pub flags: Vec<bool>,
    /// `|t| / (gamma sigma_max)` for J-PARSE without a nullspace term.
    pub speed_bound: Option<f64>,
}

pub fn flag_gamma(cfg: &ResolverConfig) -> f64 {
    match cfg {
        ResolverConfig::Jparse { gamma, .. } => *gamma,
        _ => DEFAULT_FLAG_GAMMA,
    }
}

/// One explicit-Euler control step, `q_next = q + dt * q_dot`.
pub fn step(
    model: &ManipulatorModel,
    q: &JointState,
    goal: &PoseSE3,
    gains: &ControllerGains,
    cfg: &ResolverConfig,
    nullspace: Option<&NullspaceObjective>,
) -> Result<StepResult> {
    let space = model.task_space;
    gains.validate(space.dim())?;
    let pose = model.forward_kinematics(q)?;
    let j = model.geometric_jacobian(q)?;
    let f = resolvers::svd(&j)?;

    let full = pose_error(goal, &pose, 1.0, 1.0).0;
    let pos_err = full.rows(0, 3).norm();
    let ori_err = full.rows(3, 3).norm();
    let p = task_error(goal, &pose, space);
    let twist = command_twist(&p, gains, space);
    let lyapunov = lyapunov_value(&weighted(&p, gains), gains);

    let q_dot = resolvers::resolve_factors(&f, &twist, cfg, nullspace, q)?;
    let metrics = resolvers::singularity_metrics(&f, flag_gamma(cfg));
    let speed_bound = match (cfg, nullspace) {
        (ResolverConfig::Jparse { gamma, .. }, None) => Some(twist.norm() / (gamma * f.sigma_max())),
        _ => None,
    };
    let q_next = JointState(&q.0 + &q_dot * gains.dt);
    Ok(StepResult {
        q_next,
        q_dot,
        pose,
        twist,
        pos_err,
        ori_err,
        sigma: f.sigma,
        inv_cond: metrics.inverse_condition_number,
        manipulability: metrics.manipulability,
        lyapunov,
        flags: metrics.singular_flags,
        speed_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub k_dt: f64,
    pub simple_bound: f64,
    pub conservative_bound: f64,
    /// `k dt <= 2`
    pub passes_simple: bool,
    /// `k dt <= 2 / (m (m - 1) + 1)`
    pub passes_conservative: bool,
    pub theta_psd: Option<bool>,
    pub theta_min_eigenvalue: Option<f64>,
}

pub fn conservative_bound(m: usize) -> f64 {
    2.0 / ((m * m.saturating_sub(1)) as f64 + 1.0)
}

fn within(x: f64, bound: f64) -> bool {
    x <= bound * (1.0 + BOUND_REL_TOL)
}

/// `Theta = Q - (dt/2) Q U^T K U Q`.
pub fn theta_matrix(u: &DMatrix<f64>, q_diag: &DVector<f64>, k: &[f64], dt: f64) -> DMatrix<f64> {
    let kmat = DMatrix::from_diagonal(&DVector::from_column_slice(k));
    let q = DMatrix::from_diagonal(q_diag);
    let inner = u.transpose() * kmat * u;
    let theta = &q - (&q * inner * &q) * (0.5 * dt);
    (&theta + theta.transpose()) * 0.5
}

pub fn min_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(sym.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Evaluates both discrete bounds with `k = max(K)`, and when `U` and the
/// diagonal of `Q` are supplied also tests Theta for positive
/// semi-definiteness.
pub fn stability_report(
    gains: &ControllerGains,
    m: usize,
    u: Option<&DMatrix<f64>>,
    q_diag: Option<&DVector<f64>>,
) -> StabilityReport {
    let k_dt = gains.k_dt();
    let conservative = conservative_bound(m);
    let theta_min = match (u, q_diag) {
        (Some(u), Some(qd)) if u.nrows() == m && qd.len() == m && gains.k.len() == m => {
            Some(min_eigenvalue(&theta_matrix(u, qd, &gains.k, gains.dt)))
        }
        _ => None,
    };
    StabilityReport {
        k_dt,
        simple_bound: 2.0,
        conservative_bound: conservative,
        passes_simple: within(k_dt, 2.0),
        passes_conservative: within(k_dt, conservative),
        theta_psd: theta_min.map(|e| e >= -THETA_PSD_TOL),
        theta_min_eigenvalue: theta_min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::builtin_model;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn te(v: &[f64]) -> TaskError {
        TaskError(DVector::from_vec(v.to_vec()))
    }

    #[test]
    fn zero_error_zero_twist() {
        let g = ControllerGains::uniform(6, 10.0, 0.01).with_cap(1.0);
        assert_eq!(command_twist(&te(&[0.0; 6]), &g, TaskSpace::Spatial6).norm(), 0.0);
    }

    #[test]
    fn twist_cap_rescales() {
        let g = ControllerGains::uniform(6, 1.0, 0.01).with_cap(1.0);
        let t = command_twist(&te(&[3.0, 4.0, 0.0, 0.0, 0.0, 0.0]), &g, TaskSpace::Spatial6);
        assert_relative_eq!(t.0, DVector::from_vec(vec![0.6, 0.8, 0.0, 0.0, 0.0, 0.0]), epsilon = 1e-15);
    }

    #[test]
    fn block_caps() {
        let mut g = ControllerGains::pos_ori(TaskSpace::Spatial6, 10.0, 10.0, 0.02);
        g.linear_cap = 0.5;
        g.angular_cap = 0.1;
        let t = command_twist(&te(&[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]), &g, TaskSpace::Spatial6);
        assert_relative_eq!(t.0.rows(0, 3).norm(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(t.0.rows(3, 3).norm(), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov_value(&te(&[0.0, 0.0]), &ControllerGains::uniform(2, 1.0, 0.01)), 0.0);
        assert_relative_eq!(lyapunov_value(&te(&[1.0, 1.0]), &ControllerGains::uniform(2, 1.0, 0.01)), 1.0);
        assert_relative_eq!(lyapunov_value(&te(&[2.0, 0.0]), &ControllerGains::uniform(2, 2.0, 0.01)), 1.0);
    }

    #[test]
    fn bounds() {
        assert_relative_eq!(conservative_bound(6) / 0.01, 200.0 / 31.0, epsilon = 1e-12);
        assert!((conservative_bound(6) / 0.01 - 6.45).abs() < 0.01);
        let r = stability_report(&ControllerGains::uniform(6, 6.0, 0.01), 6, None, None);
        assert!(r.passes_conservative && r.passes_simple);
        let r = stability_report(&ControllerGains::uniform(6, 200.0, 0.01), 6, None, None);
        assert!(r.passes_simple && !r.passes_conservative);
        let r = stability_report(&ControllerGains::uniform(6, 250.0, 0.01), 6, None, None);
        assert!(!r.passes_simple);
        let r = stability_report(&ControllerGains::uniform(6, 10.0, 0.02), 6, None, None);
        assert_relative_eq!(r.k_dt, 0.2, epsilon = 1e-15);
        assert!(r.passes_simple);
    }

    #[test]
    fn uniform_gain_theta_is_diagonal() {
        let u = crate::resolvers::svd(&DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.3, -1.0, 0.5, 0.0, 0.2, 2.0]))
            .unwrap()
            .u;
        let q = DVector::from_vec(vec![1.0, 0.4, 0.0]);
        let (k, dt) = (150.0, 0.01);
        let theta = theta_matrix(&u, &q, &[k; 3], dt);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { q[i] - 0.5 * k * dt * q[i] * q[i] } else { 0.0 };
                assert_relative_eq!(theta[(i, j)], expect, epsilon = 1e-12);
            }
        }
        assert_eq!(stability_report(&ControllerGains::uniform(3, k, dt), 3, Some(&u), Some(&q)).theta_psd, Some(true));
    }

    #[test]
    fn at_goal_is_fixed_point() {
        let m = builtin_model("synthetic7").unwrap();
        let q = JointState::new([0.1, 0.3, -0.2, 1.2, 0.1, 0.4, 0.0]);
        let goal = m.forward_kinematics(&q).unwrap();
        let g = ControllerGains::uniform(6, 10.0, 0.02).with_cap(1.0);
        for cfg in [ResolverConfig::pinv(), ResolverConfig::dls(0.1), ResolverConfig::jparse(0.1)] {
            let r = step(&m, &q, &goal, &g, &cfg, None).unwrap();
            assert!(r.q_dot.iter().all(|&v| v == 0.0));
            assert_eq!(r.q_next, q);
        }
        let ns = NullspaceObjective::new(2.0, 0.6);
        let r = step(&m, &q, &goal, &g, &ResolverConfig::jparse(0.1), Some(&ns)).unwrap();
        let f = crate::resolvers::svd(&m.geometric_jacobian(&q).unwrap()).unwrap();
        let js = crate::resolvers::safety_jacobian(&f, 0.1).unwrap();
        assert!(r.q_dot.norm() > 1e-3);
        assert!((js * &r.q_dot).norm() < 1e-10);
    }

    #[test]
    fn planar_step_moves_toward_goal() {
        let m = builtin_model("planar2r").unwrap();
        let q = JointState::new([-std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4]);
        let goal = PoseSE3::from_position(Vector3::new(1.5, 0.2, 0.0));
        let g = ControllerGains::uniform(2, 1.0, 0.01);
        let r0 = step(&m, &q, &goal, &g, &ResolverConfig::jparse(0.1), None).unwrap();
        let r1 = step(&m, &r0.q_next, &goal, &g, &ResolverConfig::jparse(0.1), None).unwrap();
        assert!(r1.pos_err < r0.pos_err);
        assert!(r0.q_dot.norm() <= r0.speed_bound.unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn gains_validation() {
        assert!(ControllerGains::uniform(2, 1.0, 0.01).validate(3).is_err());
        assert!(ControllerGains::uniform(2, -1.0, 0.01).validate(2).is_err());
        assert!(ControllerGains::uniform(2, 1.0, 0.0).validate(2).is_err());
        assert!(ControllerGains::pos_ori(TaskSpace::Planar3, 2.0, 3.0, 0.1).k == vec![2.0, 2.0, 3.0]);
    }

    proptest! {
        #[test]
        fn conservative_implies_simple(k in 0.01..500.0f64, dt in 1e-4..0.1f64, m in 1usize..8) {
            let r = stability_report(&ControllerGains::uniform(m, k, dt), m, None, None);
            prop_assert!(!r.passes_conservative || r.passes_simple);
        }

        #[test]
        fn capped_twist_preserves_direction(e in prop::collection::vec(-5.0..5.0f64, 6), cap in 0.01..2.0f64) {
            let g = ControllerGains::uniform(6, 3.0, 0.01).with_cap(cap);
            let p = TaskError(DVector::from_vec(e));
            let t = command_twist(&p, &g, TaskSpace::Spatial6);
            prop_assert!(t.norm() <= cap * (1.0 + 1e-12));
            let raw = &p.0 * 3.0;
            if raw.norm() > 1e-9 {
                prop_assert!((t.0.normalize() - raw.normalize()).norm() < 1e-9);
            }
        }
    }
}
