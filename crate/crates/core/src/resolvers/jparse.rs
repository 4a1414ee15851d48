//! J-PARSE constructions: safety Jacobian, projection basis, singular
//! projections and the combined inverse.

use nalgebra::{DMatrix, DVector};

use super::svd::{svd, SvdFactors};
use crate::error::{Error, Result};

/// Threshold `b = gamma * sigma_max`; errors when the spectrum is all zero.
pub fn threshold(sigma: &DVector<f64>, gamma: f64) -> Result<f64> {
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    if smax <= 0.0 {
        return Err(Error::DegenerateJacobian);
    }
    Ok(gamma * smax)
}

/// `sigma_i < gamma * sigma_max` (strict).
pub fn singular_flags(sigma: &DVector<f64>, gamma: f64) -> Vec<bool> {
    let b = gamma * sigma.iter().copied().fold(0.0, f64::max);
    sigma.iter().map(|&s| s < b).collect()
}

/// Singular values floored at `gamma * sigma_max`.
pub fn safety_sigma(sigma: &DVector<f64>, gamma: f64) -> Result<DVector<f64>> {
    let b = threshold(sigma, gamma)?;
    Ok(sigma.map(|s| if s < b { b } else { s }))
}

/// `J_s = U Sigma_s V^T`, full rank by construction.
pub fn safety_jacobian(f: &SvdFactors, gamma: f64) -> Result<DMatrix<f64>> {
    let ss = safety_sigma(&f.sigma, gamma)?;
    let g: Vec<f64> = ss.iter().copied().collect();
    let mut j = DMatrix::zeros(f.task_dim(), f.dof());
    for (i, &s) in g.iter().enumerate().take(f.rank_slots()) {
        j += f.u.column(i) * f.v.column(i).transpose() * s;
    }
    Ok(j)
}

/// Left singular vectors split by flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBasis {
    /// Non-singular directions, m x (m - k).
    pub u_p: DMatrix<f64>,
    /// Singular directions, m x k.
    pub u_tilde: DMatrix<f64>,
}

pub fn projection_basis(u: &DMatrix<f64>, flags: &[bool]) -> ProjectionBasis {
    let m = u.nrows();
    let pick = |want: bool| {
        let cols: Vec<_> = (0..u.ncols())
            .filter(|&i| flags.get(i).copied().unwrap_or(false) == want)
            .map(|i| u.column(i).into_owned())
            .collect();
        if cols.is_empty() {
            DMatrix::zeros(m, 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    };
    ProjectionBasis {
        u_p: pick(false),
        u_tilde: pick(true),
    }
}

/// Diagonal `sigma_i / (gamma * sigma_max)` over the flagged directions.
pub fn phi_matrix(sigma: &DVector<f64>, gamma: f64, flags: &[bool]) -> Result<DMatrix<f64>> {
    let b = threshold(sigma, gamma)?;
    let vals: Vec<f64> = sigma
        .iter()
        .zip(flags)
        .filter(|(_, &f)| f)
        .map(|(&s, _)| s / b)
        .collect();
    Ok(DMatrix::from_diagonal(&DVector::from_vec(vals)))
}

/// Shaped scaling `xi (1 + a) / (1 + a xi)` on `xi` in `[0, 1]`.
pub fn shaped_gain(xi: f64, a: f64) -> f64 {
    xi * (1.0 + a) / (1.0 + a * xi)
}

/// Diagonal of `S`: one for unflagged directions, the shaped gain of
/// `sigma_i / (gamma sigma_max)` for flagged ones.
pub fn jparse_gain_matrix(sigma: &DVector<f64>, gamma: f64, a: f64) -> Result<DVector<f64>> {
    let b = threshold(sigma, gamma)?;
    Ok(sigma.map(|s| if s < b { shaped_gain(s / b, a) } else { 1.0 }))
}

/// Per-slot inverse profile: `S_i / b` below the threshold, `1/sigma_i`
/// above. With `a = 0` the lower branch is `sigma_i / b^2`.
pub fn jparse_profile(sigma: &DVector<f64>, gamma: f64, a: f64) -> Result<Vec<f64>> {
    let b = threshold(sigma, gamma)?;
    Ok(sigma
        .iter()
        .map(|&s| if s < b { shaped_gain(s / b, a) / b } else { 1.0 / s })
        .collect())
}

pub fn jparse_inverse_from_factors(f: &SvdFactors, gamma: f64, a: f64) -> Result<DMatrix<f64>> {
    let g = jparse_profile(&f.sigma, gamma, a)?;
    Ok(f.profile_matrix(&g))
}

/// `V Sigma_s^+ S U^T`.
pub fn jparse_inverse(j: &DMatrix<f64>, gamma: f64, a: f64) -> Result<DMatrix<f64>> {
    jparse_inverse_from_factors(&svd(j)?, gamma, a)
}
