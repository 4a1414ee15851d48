//! Manipulator models, forward kinematics, geometric Jacobians and SE(3)
//! pose-error arithmetic.

mod builtin;
mod model;
mod pose;
pub mod so3;

pub use builtin::{
    builtin_model, planar, BUILTIN_MODELS, SYNTH7_FORE, SYNTH7_SHOULDER, SYNTH7_TOOL, SYNTH7_UPPER,
    WRIST6R_FORE, WRIST6R_SETBACK, WRIST6R_SHOULDER, WRIST6R_TOOL, WRIST6R_UPPER,
};
pub use model::{
    DhRow, Joint, JointFile, JointKind, JointState, ManipulatorModel, ModelFile, TaskSpace,
    TransformFile,
};
pub use pose::{error_norms, pose_error, PoseSE3, TaskError, Twist};

use crate::error::Result;

/// Loads a model from a builtin name or, failing that, a JSON file path.
pub fn load_model(model_ref: &str) -> Result<ManipulatorModel> {
    if BUILTIN_MODELS.contains(&model_ref) {
        builtin_model(model_ref)
    } else {
        ManipulatorModel::load(model_ref)
    }
}

pub fn forward_kinematics(model: &ManipulatorModel, q: &JointState) -> Result<PoseSE3> {
    model.forward_kinematics(q)
}

pub fn geometric_jacobian(model: &ManipulatorModel, q: &JointState) -> Result<nalgebra::DMatrix<f64>> {
    model.geometric_jacobian(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, Isometry3, Vector3};
    use std::f64::consts::{FRAC_PI_4, PI};

    fn planar2r() -> ManipulatorModel {
        builtin_model("planar2r").unwrap()
    }

    #[test]
    fn planar2r_extended() {
        let p = planar2r().forward_kinematics(&JointState::new([0.0, 0.0])).unwrap();
        assert_relative_eq!(*p.position(), Vector3::new(2.0, 0.0, 0.0), epsilon = 1e-15);
        assert_eq!(p.angle(), 0.0);
    }

    #[test]
    fn planar2r_matches_closed_form() {
        let (q1, q2) = (-FRAC_PI_4, FRAC_PI_4);
        let p = planar2r().forward_kinematics(&JointState::new([q1, q2])).unwrap();
        let x = q1.cos() + (q1 + q2).cos();
        let y = q1.sin() + (q1 + q2).sin();
        assert_relative_eq!(p.position().x, x, epsilon = 1e-14);
        assert_relative_eq!(p.position().y, y, epsilon = 1e-14);
        assert_relative_eq!(x, 1.0 + 1.0 / 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn revolute_periodicity() {
        let m = builtin_model("synthetic7").unwrap();
        let q = JointState::new([0.1, 0.2, -0.3, 1.0, 0.4, -0.5, 0.6]);
        let a = m.end_effector_isometry(&q).unwrap();
        for i in 0..7 {
            let mut q2 = q.clone();
            q2.0[i] += 2.0 * PI;
            let b = m.end_effector_isometry(&q2).unwrap();
            assert_relative_eq!(a.to_homogeneous(), b.to_homogeneous(), epsilon = 1e-12);
        }
    }

    #[test]
    fn planar2r_jacobian_at_zero() {
        let j = planar2r().geometric_jacobian(&JointState::zeros(2)).unwrap();
        assert_relative_eq!(j, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 1.0]), epsilon = 1e-15);
    }

    #[test]
    fn planar2r_rank_one_when_straight() {
        for &q1 in &[0.0, 0.7, -2.1] {
            let j = planar2r().geometric_jacobian(&JointState::new([q1, 0.0])).unwrap();
            assert!(j.determinant().abs() < 1e-14);
            assert!(j.norm() > 1.0);
        }
    }

    #[test]
    fn prismatic_chain_jacobian_is_constant() {
        let joints = vec![
            Joint::prismatic(Vector3::x(), Isometry3::identity()),
            Joint::prismatic(Vector3::y(), Isometry3::translation(0.0, 0.0, 0.3)),
            Joint::prismatic(Vector3::new(1.0, 1.0, 1.0), Isometry3::identity()),
        ];
        let m = ManipulatorModel::new("cart", TaskSpace::Spatial6, joints, Isometry3::identity()).unwrap();
        let j0 = m.geometric_jacobian(&JointState::zeros(3)).unwrap();
        let j1 = m.geometric_jacobian(&JointState::new([0.5, -2.0, 1.3])).unwrap();
        assert_relative_eq!(j0.rows(0, 3), j1.rows(0, 3), epsilon = 1e-15);
        assert_eq!(j0.rows(3, 3).norm(), 0.0);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let err = planar2r().forward_kinematics(&JointState::zeros(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, actual: 3, .. }));
    }

    #[test]
    fn wrist6r_home_pose() {
        let m = builtin_model("wrist6r").unwrap();
        let p = m.forward_kinematics(&JointState::zeros(6)).unwrap();
        assert_relative_eq!(*p.position(), Vector3::new(0.432, 0.0, 1.105), epsilon = 1e-12);
        assert_eq!(p.angle(), 0.0);
    }

    #[test]
    fn dh_rows_match_joint_list() {
        // Planar 2R written as DH rows.
        let rows = [
            DhRow { kind: JointKind::Revolute, a: 1.0, alpha: 0.0, d: 0.0, theta: 0.0 },
            DhRow { kind: JointKind::Revolute, a: 1.0, alpha: 0.0, d: 0.0, theta: 0.0 },
        ];
        let dh = ManipulatorModel::from_dh("dh2r", TaskSpace::Planar2, &rows, Isometry3::identity()).unwrap();
        let q = JointState::new([0.3, -1.1]);
        assert_relative_eq!(
            dh.end_effector_isometry(&q).unwrap().to_homogeneous(),
            planar2r().end_effector_isometry(&q).unwrap().to_homogeneous(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn json_round_trip() {
        for name in BUILTIN_MODELS {
            let m = builtin_model(name).unwrap();
            let s = m.to_json_string().unwrap();
            let back = ManipulatorModel::from_json_str(&s).unwrap();
            let q = JointState(nalgebra::DVector::from_fn(m.dof(), |i, _| 0.3 * i as f64 - 0.5));
            assert_relative_eq!(
                m.end_effector_isometry(&q).unwrap().to_homogeneous(),
                back.end_effector_isometry(&q).unwrap().to_homogeneous(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn loader_rejects_non_unit_axis() {
        let s = r#"{"name":"bad","task_dim":2,"joints":[{"kind":"revolute","axis":[0,0,1.001]}]}"#;
        assert!(matches!(ManipulatorModel::from_json_str(s), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn loader_rejects_bad_task_dim() {
        let s = r#"{"name":"bad","task_dim":4,"joints":[{"kind":"revolute","axis":[0,0,1]}]}"#;
        assert!(ManipulatorModel::from_json_str(s).is_err());
    }

    #[test]
    fn over_constrained_flag() {
        let m = planar("one", &[1.0], TaskSpace::Planar2).unwrap();
        assert!(m.is_over_constrained());
        assert!(!planar2r().is_over_constrained());
    }

    #[test]
    fn sigma_max_floor_values() {
        assert_relative_eq!(planar2r().sigma_max_floor().unwrap(), 1.0, epsilon = 1e-15);
        let m = builtin_model("synthetic7").unwrap();
        assert!(m.sigma_max_floor().unwrap() >= 1.0);
    }

    #[test]
    fn unknown_builtin() {
        assert!(matches!(builtin_model("nope"), Err(Error::UnknownBuiltin(_))));
    }

    fn fd_jacobian(m: &ManipulatorModel, q: &[f64]) -> DMatrix<f64> {
        let h = 1e-6;
        let mut full = DMatrix::zeros(6, q.len());
        for i in 0..q.len() {
            let (mut qp, mut qm) = (q.to_vec(), q.to_vec());
            qp[i] += h;
            qm[i] -= h;
            let tp = m.end_effector_isometry(&JointState::new(qp)).unwrap();
            let tm = m.end_effector_isometry(&JointState::new(qm)).unwrap();
            let v = (tp.translation.vector - tm.translation.vector) / (2.0 * h);
            let dr = tp.rotation.to_rotation_matrix() * tm.rotation.to_rotation_matrix().transpose();
            let w = so3::log_vec(&dr) / (2.0 * h);
            full.fixed_view_mut::<3, 1>(0, i).copy_from(&v);
            full.fixed_view_mut::<3, 1>(3, i).copy_from(&w);
        }
        full.select_rows(m.task_space.rows())
    }

    proptest::proptest! {
        #[test]
        fn jacobian_matches_finite_differences(
            which in 0..BUILTIN_MODELS.len(),
            q in proptest::collection::vec(-PI..PI, 7),
        ) {
            let m = builtin_model(BUILTIN_MODELS[which]).unwrap();
            let q = &q[..m.dof()];
            let j = m.geometric_jacobian(&JointState::new(q.to_vec())).unwrap();
            let err = (j - fd_jacobian(&m, q)).amax();
            proptest::prop_assert!(err < 1e-6, "{} err {err}", m.name);
        }
    }
}
