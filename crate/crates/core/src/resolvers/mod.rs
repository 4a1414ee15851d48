//! Twist-to-joint-velocity resolution: pseudoinverse, damped least squares
//! and its adaptive and exponential variants, and J-PARSE.

mod config;
mod jparse;
mod metrics;
mod profiles;
mod svd;

pub use config::{ResolverConfig, RESOLVER_NAMES};
pub use jparse::{
    jparse_gain_matrix, jparse_inverse, jparse_inverse_from_factors, jparse_profile, phi_matrix,
    projection_basis, safety_jacobian, safety_sigma, shaped_gain, singular_flags, threshold,
    ProjectionBasis,
};
pub use metrics::{
    ellipsoid_axes, gamma_lower_bound, inverse_condition_number, q_diagonal, singularity_metrics,
    SingularityMetrics,
};
pub use profiles::{
    adls_lambda, adls_velocities, dls_gain, dls_velocities, edls_gain, edls_limit_at_zero,
    edls_velocities, manipulability, pinv_gain, pinv_tolerance, pinv_velocities,
};
pub use svd::{svd, SvdFactors};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointState, Twist};

/// Per-slot inverse singular-value profile `S'_i` for a resolver.
pub fn profile(f: &SvdFactors, cfg: &ResolverConfig) -> Result<Vec<f64>> {
    let s = &f.sigma;
    Ok(match *cfg {
        ResolverConfig::Pinv {} => {
            let tol = pinv_tolerance(f);
            s.iter().map(|&x| pinv_gain(x, tol)).collect()
        }
        ResolverConfig::Dls { lambda } => s.iter().map(|&x| dls_gain(x, lambda)).collect(),
        ResolverConfig::Adls { lambda0, w0 } => {
            let lambda = adls_lambda(manipulability(s), lambda0, w0);
            s.iter().map(|&x| dls_gain(x, lambda)).collect()
        }
        ResolverConfig::Edls {
            sigma_minus,
            sigma_plus,
            beta,
        } => s
            .iter()
            .map(|&x| edls_gain(x, sigma_minus, sigma_plus, beta))
            .collect(),
        ResolverConfig::Jparse { gamma, a } => jparse_profile(s, gamma, a)?,
    })
}

/// The resolver's inverse as an explicit n x m matrix.
pub fn inverse_matrix(f: &SvdFactors, cfg: &ResolverConfig) -> Result<DMatrix<f64>> {
    Ok(f.profile_matrix(&profile(f, cfg)?))
}

/// Diagonal weights `h_i` of the nullspace projector `I - V diag(h) V^T`.
///
/// Pinv uses `I - J^+ J`, the damped family uses `I - A^+ J` with `A^+`
/// its own inverse, and J-PARSE projects onto the nullspace of the safety
/// Jacobian, `I - J_s^+ J_s`.
fn nullspace_weights(f: &SvdFactors, cfg: &ResolverConfig, gains: &[f64]) -> Vec<f64> {
    let k = f.rank_slots();
    match cfg {
        ResolverConfig::Pinv {} => {
            let tol = pinv_tolerance(f);
            (0..k).map(|i| if f.sigma[i] > tol { 1.0 } else { 0.0 }).collect()
        }
        ResolverConfig::Jparse { .. } => vec![1.0; k],
        _ => (0..k).map(|i| f.sigma[i] * gains[i]).collect(),
    }
}

/// Projector onto the secondary-task subspace for this resolver, n x n.
pub fn nullspace_projector(f: &SvdFactors, cfg: &ResolverConfig) -> Result<DMatrix<f64>> {
    let g = profile(f, cfg)?;
    let h = nullspace_weights(f, cfg, &g);
    let mut p = DMatrix::identity(f.dof(), f.dof());
    for (i, &hi) in h.iter().enumerate() {
        p -= f.v.column(i) * f.v.column(i).transpose() * hi;
    }
    Ok(p)
}

/// Joint-space attraction toward a nominal configuration,
/// `v_q = clamp(-k_n (q - nominal), -cap, cap)` entrywise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullspaceObjective {
    pub k_n: f64,
    pub cap: f64,
    /// Defaults to the zero configuration when absent.
    #[serde(default)]
    pub nominal: Option<Vec<f64>>,
}

impl NullspaceObjective {
    pub fn new(k_n: f64, cap: f64) -> Self {
        Self {
            k_n,
            cap,
            nominal: None,
        }
    }

    pub fn validate(&self, dof: usize) -> Result<()> {
        if !(self.k_n.is_finite() && self.k_n >= 0.0) {
            return Err(Error::param("k_n", "must be >= 0"));
        }
        if !(self.cap.is_finite() && self.cap > 0.0) {
            return Err(Error::param("cap", "must be > 0"));
        }
        if let Some(n) = &self.nominal {
            if n.len() != dof {
                return Err(Error::DimensionMismatch {
                    context: "nullspace nominal",
                    expected: dof,
                    actual: n.len(),
                });
            }
        }
        Ok(())
    }

    pub fn velocity(&self, q: &JointState) -> DVector<f64> {
        DVector::from_fn(q.len(), |i, _| {
            let nom = self.nominal.as_ref().map_or(0.0, |n| n[i]);
            (-self.k_n * (q.0[i] - nom)).clamp(-self.cap, self.cap)
        })
    }
}

/// `q_dot = A^+ t + (I - B^+ B) v_q` from precomputed factors.
pub fn resolve_factors(
    f: &SvdFactors,
    t: &Twist,
    cfg: &ResolverConfig,
    nullspace: Option<&NullspaceObjective>,
    q: &JointState,
) -> Result<DVector<f64>> {
    if t.dim() != f.task_dim() {
        return Err(Error::DimensionMismatch {
            context: "twist",
            expected: f.task_dim(),
            actual: t.dim(),
        });
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("twist"));
    }
    let g = profile(f, cfg)?;
    let mut qd = f.apply_profile(&g, &t.0);
    if let Some(ns) = nullspace {
        if q.len() != f.dof() {
            return Err(Error::DimensionMismatch {
                context: "joint state",
                expected: f.dof(),
                actual: q.len(),
            });
        }
        ns.validate(f.dof())?;
        let vq = ns.velocity(q);
        let h = nullspace_weights(f, cfg, &g);
        qd += &vq;
        for (i, &hi) in h.iter().enumerate() {
            if hi != 0.0 {
                let c = f.v.column(i).dot(&vq) * hi;
                qd.axpy(-c, &f.v.column(i), 1.0);
            }
        }
    }
    Ok(qd)
}

pub fn resolve(
    j: &DMatrix<f64>,
    t: &Twist,
    cfg: &ResolverConfig,
    nullspace: Option<&NullspaceObjective>,
    q: &JointState,
) -> Result<DVector<f64>> {
    resolve_factors(&svd(j)?, t, cfg, nullspace, q)
}
