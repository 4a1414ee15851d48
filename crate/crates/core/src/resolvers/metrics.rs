use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::config::ResolverConfig;
use super::jparse::singular_flags;
use super::profiles;
use super::svd::SvdFactors;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityMetrics {
    /// Product of the singular values.
    pub manipulability: f64,
    /// `sigma_min / sigma_max`, zero for an all-zero spectrum.
    pub inverse_condition_number: f64,
    /// `sigma_i < gamma * sigma_max`, one entry per task row.
    pub singular_flags: Vec<bool>,
}

pub fn singularity_metrics(f: &SvdFactors, gamma: f64) -> SingularityMetrics {
    SingularityMetrics {
        manipulability: profiles::manipulability(&f.sigma),
        inverse_condition_number: inverse_condition_number(&f.sigma),
        singular_flags: singular_flags(&f.sigma, gamma),
    }
}

pub fn inverse_condition_number(sigma: &DVector<f64>) -> f64 {
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0.0;
    }
    sigma.iter().copied().fold(f64::INFINITY, f64::min) / smax
}

/// Principal axes of the manipulability ellipsoid, `U_i sigma_i`.
pub fn ellipsoid_axes(f: &SvdFactors) -> Vec<DVector<f64>> {
    (0..f.task_dim())
        .map(|i| f.u.column(i) * f.sigma[i])
        .collect()
}

/// Diagonal of `Q = U^T J A^+ U`, i.e. `sigma_i S'_i` for the chosen
/// resolver. For J-PARSE with `a = 0` this is one for unflagged directions
/// and `(sigma_i / (gamma sigma_max))^2` for flagged ones.
pub fn q_diagonal(f: &SvdFactors, cfg: &ResolverConfig) -> Result<DVector<f64>> {
    let g = super::profile(f, cfg)?;
    Ok(DVector::from_fn(f.task_dim(), |i, _| {
        if i < f.rank_slots() {
            f.sigma[i] * g[i]
        } else {
            0.0
        }
    }))
}

/// Smallest threshold that keeps `|q_dot| <= qdot_max` for `|t| <= v_max`
/// when `sigma_max` never falls below `sigma_max_floor`.
pub fn gamma_lower_bound(v_max: f64, qdot_max: f64, sigma_max_floor: f64) -> Result<f64> {
    for (name, v) in [("v_max", v_max), ("qdot_max", qdot_max), ("sigma_max_floor", sigma_max_floor)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(name, "must be a positive number"));
        }
    }
    let gamma = v_max / (sigma_max_floor * qdot_max);
    if gamma > 1.0 {
        return Err(Error::InfeasibleGamma { required: gamma });
    }
    Ok(gamma)
}
