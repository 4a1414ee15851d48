//! Rotation helpers: hat/vee maps, the exponential map and a matrix
//! logarithm with explicit small-angle and near-pi branches.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use std::f64::consts::PI;

/// Below this angle the logarithm uses the first-order series; within this
/// distance of pi it switches to the symmetric-part extraction.
pub const LOG_SWITCH_ANGLE: f64 = 1e-4;

/// Components with magnitude below this are treated as zero when choosing
/// the axis sign at angle pi.
const AXIS_SIGN_EPS: f64 = 1e-12;

pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rodrigues' formula for `exp(hat(axis * angle))`.
pub fn exp(axis: &Unit<Vector3<f64>>, angle: f64) -> Rotation3<f64> {
    let k = hat(axis.as_ref());
    let m = Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos());
    Rotation3::from_matrix_unchecked(m)
}

/// Canonical axis-angle of a rotation: angle in `[0, pi]`, unit axis.
///
/// At angle zero the axis is `+z`. At angle pi, where `h` and `-h` describe
/// the same rotation, the axis is oriented so its first nonzero component is
/// positive.
pub fn log(r: &Rotation3<f64>) -> (Unit<Vector3<f64>>, f64) {
    let m = r.matrix();
    // sin(theta) * h
    let s = vee(&(m - m.transpose())) * 0.5;
    let cos_theta = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = s.norm().atan2(cos_theta);

    if theta < LOG_SWITCH_ANGLE {
        // First-order series: theta * h ~= s.
        let n = s.norm();
        if n == 0.0 {
            return (Vector3::z_axis(), 0.0);
        }
        return (Unit::new_unchecked(s / n), theta);
    }

    if PI - theta >= LOG_SWITCH_ANGLE {
        let axis = Unit::new_normalize(s);
        return (axis, theta);
    }

    // Near pi: h h^T = (sym(R) - cos I) / (1 - cos).
    let sym = (m + m.transpose()) * 0.5;
    let hh = (sym - Matrix3::identity() * cos_theta) / (1.0 - cos_theta);
    let mut best = 0;
    for i in 1..3 {
        if hh[(i, i)] > hh[(best, best)] {
            best = i;
        }
    }
    let mut h: Vector3<f64> = hh.column(best).into_owned();
    h /= h.norm();

    let along = h.dot(&s);
    if along.abs() > AXIS_SIGN_EPS {
        if along < 0.0 {
            h = -h;
        }
    } else {
        canonical_sign(&mut h);
    }
    (Unit::new_normalize(h), theta)
}

/// Rotation vector `theta * h` from [`log`].
pub fn log_vec(r: &Rotation3<f64>) -> Vector3<f64> {
    let (axis, angle) = log(r);
    axis.into_inner() * angle
}

fn canonical_sign(h: &mut Vector3<f64>) {
    for i in 0..3 {
        if h[i].abs() > AXIS_SIGN_EPS {
            if h[i] < 0.0 {
                *h = -*h;
            }
            return;
        }
    }
}

/// Signed-axis tie-break used at angle pi, exposed for pose canonicalization.
pub(crate) fn canonicalize_pi_axis(h: &Vector3<f64>) -> Vector3<f64> {
    let mut h = *h;
    canonical_sign(&mut h);
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn log_of_quarter_turn_about_z() {
        // Explicit matrix, not built through exp().
        let r = Rotation3::from_matrix_unchecked(Matrix3::new(
            0.0, -1.0, 0.0, //
            1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0,
        ));
        let v = log_vec(&r);
        assert_relative_eq!(v, Vector3::new(0.0, 0.0, FRAC_PI_2), epsilon = 1e-15);
    }

    #[test]
    fn log_identity_is_zero() {
        let (axis, angle) = log(&Rotation3::identity());
        assert_eq!(angle, 0.0);
        assert_relative_eq!(axis.norm(), 1.0);
    }

    #[test]
    fn exp_log_round_trip_across_branches() {
        let axis = Unit::new_normalize(Vector3::new(0.3, -0.5, 0.8));
        for &angle in &[0.0, 1e-9, 5e-5, 2e-4, 0.7, 2.5, PI - 2e-4, PI - 5e-5, PI - 1e-9] {
            let r = exp(&axis, angle);
            let (a, t) = log(&r);
            assert_relative_eq!(t, angle, epsilon = 1e-9);
            if angle > 1e-9 {
                let back = exp(&a, t);
                assert_relative_eq!(back.matrix(), r.matrix(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn pi_rotation_gets_positive_leading_component() {
        let r = exp(&Unit::new_normalize(Vector3::new(-1.0, 2.0, 0.0)), PI);
        let (axis, angle) = log(&r);
        assert_relative_eq!(angle, PI, epsilon = 1e-12);
        assert!(axis.x > 0.0);
        let r2 = exp(&Unit::new_normalize(Vector3::new(0.0, -1.0, 0.0)), PI);
        let (axis2, _) = log(&r2);
        assert_relative_eq!(axis2.into_inner(), Vector3::y(), epsilon = 1e-12);
    }

    #[test]
    fn hat_vee_inverse() {
        let w = Vector3::new(1.0, -2.0, 3.0);
        assert_eq!(vee(&hat(&w)), w);
        assert_relative_eq!(hat(&w) * w, Vector3::zeros());
    }

    proptest::proptest! {
        #[test]
        fn log_angle_in_range_and_round_trips(
            x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64, angle in -10.0..10.0f64,
        ) {
            let v = Vector3::new(x, y, z);
            proptest::prop_assume!(v.norm() > 1e-3);
            let r = exp(&Unit::new_normalize(v), angle);
            let (a, t) = log(&r);
            proptest::prop_assert!((0.0..=PI).contains(&t));
            proptest::prop_assert!((exp(&a, t).matrix() - r.matrix()).norm() < 1e-9);
        }
    }
}
