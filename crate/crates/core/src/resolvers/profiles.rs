//! Inverse singular-value profiles `S'(sigma)` for the baseline resolvers.
//! Every resolver here acts as `q_dot = V diag(S') U^T t`.

use nalgebra::DVector;

use super::svd::SvdFactors;

/// Relative rank cutoff for the plain pseudoinverse: singular values at or
/// below `max(m, n) * eps * sigma_max` count as zero.
pub fn pinv_tolerance(f: &SvdFactors) -> f64 {
    f.task_dim().max(f.dof()) as f64 * f64::EPSILON * f.sigma_max()
}

pub fn pinv_gain(sigma: f64, tol: f64) -> f64 {
    if sigma <= tol {
        0.0
    } else {
        1.0 / sigma
    }
}

/// `sigma / (sigma^2 + lambda^2)`, zero at `sigma = 0`.
pub fn dls_gain(sigma: f64, lambda: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    sigma / (sigma * sigma + lambda * lambda)
}

/// Damping that grows linearly as manipulability `w` falls below `w0`.
pub fn adls_lambda(w: f64, lambda0: f64, w0: f64) -> f64 {
    if w < w0 {
        lambda0 * (1.0 - w / w0)
    } else {
        0.0
    }
}

/// Exponentially blended profile:
/// `1/sigma` above `sigma_plus`, `(1 - beta^x)/sigma` in between with
/// `x = (sigma - sigma_minus)/(sigma_plus - sigma_minus)`, zero at or below
/// `sigma_minus`.
///
/// With `sigma_minus = 0` the blend does not vanish as `sigma -> 0`; its
/// limit is `-ln(beta)/sigma_plus`, and that limit is returned at
/// `sigma = 0` instead of zero.
pub fn edls_gain(sigma: f64, sigma_minus: f64, sigma_plus: f64, beta: f64) -> f64 {
    if sigma >= sigma_plus {
        return 1.0 / sigma;
    }
    if sigma == 0.0 && sigma_minus == 0.0 {
        return edls_limit_at_zero(sigma_plus, beta);
    }
    if sigma <= sigma_minus {
        return 0.0;
    }
    let x = (sigma - sigma_minus) / (sigma_plus - sigma_minus);
    -(x * beta.ln()).exp_m1() / sigma
}

pub fn edls_limit_at_zero(sigma_plus: f64, beta: f64) -> f64 {
    -beta.ln() / sigma_plus
}

/// Product of all task-space singular values.
pub fn manipulability(sigma: &DVector<f64>) -> f64 {
    sigma.iter().product()
}

pub fn pinv_velocities(f: &SvdFactors, t: &DVector<f64>) -> DVector<f64> {
    let tol = pinv_tolerance(f);
    let g: Vec<f64> = f.sigma.iter().map(|&s| pinv_gain(s, tol)).collect();
    f.apply_profile(&g, t)
}

pub fn dls_velocities(f: &SvdFactors, t: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let g: Vec<f64> = f.sigma.iter().map(|&s| dls_gain(s, lambda)).collect();
    f.apply_profile(&g, t)
}

pub fn adls_velocities(f: &SvdFactors, t: &DVector<f64>, lambda0: f64, w0: f64) -> DVector<f64> {
    dls_velocities(f, t, adls_lambda(manipulability(&f.sigma), lambda0, w0))
}

pub fn edls_velocities(
    f: &SvdFactors,
    t: &DVector<f64>,
    sigma_minus: f64,
    sigma_plus: f64,
    beta: f64,
) -> DVector<f64> {
    let g: Vec<f64> = f
        .sigma
        .iter()
        .map(|&s| edls_gain(s, sigma_minus, sigma_plus, beta))
        .collect();
    f.apply_profile(&g, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolvers::svd::svd;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn pinv_identity() {
        let f = svd(&DMatrix::identity(2, 2)).unwrap();
        let qd = pinv_velocities(&f, &DVector::from_vec(vec![1.0, 0.0]));
        assert_relative_eq!(qd, DVector::from_vec(vec![1.0, 0.0]), epsilon = 1e-15);
    }

    #[test]
    fn pinv_square_exact() {
        let j = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0, 0.2, 0.0, 1.0]);
        let t = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        let qd = pinv_velocities(&svd(&j).unwrap(), &t);
        assert!((&j * qd - t).norm() < 1e-10);
    }

    #[test]
    fn pinv_rank_one_least_squares() {
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 1.0]);
        let f = svd(&j).unwrap();
        // t in the column space.
        let t_in = DVector::from_vec(vec![0.0, 1.5]);
        let qd = pinv_velocities(&f, &t_in);
        assert!((&j * &qd - &t_in).norm() < 1e-12);
        // Minimum-norm solution of J^T J x = J^T t restricted to the row space:
        // x = J^T (J J^T)^+ t, and on this instance J J^T = diag(0, 5).
        let expect = DVector::from_vec(vec![2.0, 1.0]) * (1.5 / 5.0);
        assert_relative_eq!(qd, expect, epsilon = 1e-14);
        // Normal equations hold.
        assert!((j.transpose() * (&j * &qd - &t_in)).norm() < 1e-12);
        // t orthogonal to the column space.
        let t_out = DVector::from_vec(vec![1.0, 0.0]);
        assert!(pinv_velocities(&f, &t_out).norm() < 1e-15);
    }

    #[test]
    fn dls_without_damping_is_pinv() {
        let j = DMatrix::from_row_slice(2, 3, &[1.0, 0.4, -0.2, 0.1, 2.0, 0.7]);
        let f = svd(&j).unwrap();
        let t = DVector::from_vec(vec![0.5, -0.25]);
        assert_relative_eq!(dls_velocities(&f, &t, 0.0), pinv_velocities(&f, &t), epsilon = 1e-12);
    }

    #[test]
    fn dls_peak_at_lambda() {
        let lambda = 0.17;
        let peak = dls_gain(lambda, lambda);
        assert_relative_eq!(peak, 1.0 / (2.0 * lambda), epsilon = 1e-15);
        let mut best = (0.0, 0.0);
        for i in 1..=100_000 {
            let s = i as f64 * 1e-5;
            let g = dls_gain(s, lambda);
            if g > best.1 {
                best = (s, g);
            }
        }
        assert!((best.0 - lambda).abs() <= 1e-5);
        assert!(best.1 <= peak);
        assert_eq!(dls_gain(0.0, lambda), 0.0);
    }

    #[test]
    fn adls_lambda_rule() {
        assert_eq!(adls_lambda(0.0, 0.17, 0.25), 0.17);
        assert_eq!(adls_lambda(0.25, 0.17, 0.25), 0.0);
        assert_eq!(adls_lambda(1.0, 0.17, 0.25), 0.0);
        assert_relative_eq!(adls_lambda(0.125, 0.17, 0.25), 0.085, epsilon = 1e-15);
    }

    #[test]
    fn edls_near_upper_knee() {
        let (sp, beta) = (0.3, 1e-6);
        let g = edls_gain(sp * (1.0 - 1e-12), 0.0, sp, beta);
        assert_relative_eq!(g, (1.0 - beta) / sp, epsilon = 1e-9);
        assert!((g - 1.0 / sp).abs() <= 2.0 * beta / sp);
    }

    #[test]
    fn edls_limit_matches_lhopital() {
        // (1 - beta^x)/x -> -ln(beta) as x -> 0; with x = sigma/sigma_plus this
        // gives -ln(beta)/sigma_plus for the profile (1 - beta^x)/sigma.
        let (sp, beta) = (0.3, 0.02);
        let oracle = -(0.02f64).ln() / 0.3;
        assert_relative_eq!(edls_gain(0.0, 0.0, sp, beta), oracle, epsilon = 1e-12);
        assert_relative_eq!(edls_gain(1e-13, 0.0, sp, beta), oracle, epsilon = 1e-9);
        assert!(oracle > 13.0);
    }

    #[test]
    fn edls_zero_below_positive_minus() {
        assert_eq!(edls_gain(0.05, 0.1, 0.3, 0.02), 0.0);
        assert_eq!(edls_gain(0.0, 0.1, 0.3, 0.02), 0.0);
        assert_relative_eq!(edls_gain(0.5, 0.1, 0.3, 0.02), 2.0);
    }

    proptest! {
        #[test]
        fn dls_gain_bounded_by_peak(s in 0.0..10.0f64, lambda in 1e-3..1.0f64) {
            prop_assert!(dls_gain(s, lambda) <= 1.0 / (2.0 * lambda) * (1.0 + 1e-12));
        }

        #[test]
        fn dls_gain_vanishes_in_tails(lambda in 1e-2..1.0f64) {
            prop_assert!(dls_gain(1e-12, lambda) < 1e-6);
            prop_assert!(dls_gain(1e9, lambda) < 1e-8);
        }

        #[test]
        fn edls_gain_finite_nonnegative(s in 0.0..2.0f64, sm in 0.0..0.2f64, gap in 1e-3..1.0f64, beta in 1e-4..0.999f64) {
            let g = edls_gain(s, sm, sm + gap, beta);
            prop_assert!(g.is_finite() && g >= 0.0);
        }
    }
}
