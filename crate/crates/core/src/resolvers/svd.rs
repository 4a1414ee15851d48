use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Full SVD `J = U diag(sigma) V^T` with square orthogonal factors.
///
/// `sigma` has one entry per task row (length m), sorted descending. When
/// `m > n` the trailing `m - n` entries are zero and pair with the extra
/// columns of `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn task_dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn dof(&self) -> usize {
        self.v.nrows()
    }

    /// Number of singular pairs that couple task and joint space.
    pub fn rank_slots(&self) -> usize {
        self.task_dim().min(self.dof())
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.get(0).copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma.iter().copied().last().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let (m, n) = (self.task_dim(), self.dof());
        let mut j = DMatrix::zeros(m, n);
        for i in 0..self.rank_slots() {
            j += self.u.column(i) * self.v.column(i).transpose() * self.sigma[i];
        }
        j
    }

    /// `sum_i V_i g_i (U_i^T t)` over the coupled slots.
    pub fn apply_profile(&self, gains: &[f64], t: &DVector<f64>) -> DVector<f64> {
        let mut qd = DVector::zeros(self.dof());
        for (i, &g) in gains.iter().enumerate().take(self.rank_slots()) {
            if g != 0.0 {
                let c = self.u.column(i).dot(t) * g;
                qd.axpy(c, &self.v.column(i), 1.0);
            }
        }
        qd
    }

    /// `sum_i V_i g_i U_i^T` as an explicit n x m matrix.
    pub fn profile_matrix(&self, gains: &[f64]) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.dof(), self.task_dim());
        for (i, &g) in gains.iter().enumerate().take(self.rank_slots()) {
            if g != 0.0 {
                a += self.v.column(i) * self.u.column(i).transpose() * g;
            }
        }
        a
    }
}

pub fn svd(j: &DMatrix<f64>) -> Result<SvdFactors> {
    if j.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Jacobian"));
    }
    let (m, n) = j.shape();
    if m == 0 || n == 0 {
        return Err(Error::DimensionMismatch {
            context: "Jacobian must be non-empty",
            expected: 1,
            actual: 0,
        });
    }
    let (b, w) = one_sided_jacobi(j);
    let norms: Vec<f64> = b.column_iter().map(|c| c.norm()).collect();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &c| norms[c].total_cmp(&norms[a]).then(a.cmp(&c)));

    let mut sigma = DVector::zeros(m);
    let mut u_cols = Vec::with_capacity(m);
    let mut v_cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    // Once a column has no usable right vector every later (smaller) one is
    // zero to working precision; those pairs come from basis completion.
    let mut exhausted = false;
    for (slot, &src) in order.iter().enumerate() {
        u_cols.push(w.column(src).into_owned());
        if exhausted || v_cols.len() == n || norms[src] == 0.0 {
            exhausted = true;
            continue;
        }
        let mut v = b.column(src) / norms[src];
        for _ in 0..2 {
            for c in v_cols.iter() {
                let d = c.dot(&v);
                v.axpy(-d, c, 1.0);
            }
        }
        let nv = v.norm();
        if nv > 0.5 {
            v_cols.push(v / nv);
            sigma[slot] = norms[src];
        } else {
            exhausted = true;
        }
    }
    complete_basis(&mut u_cols, m);
    complete_basis(&mut v_cols, n);

    Ok(SvdFactors {
        u: DMatrix::from_columns(&u_cols),
        sigma,
        v: DMatrix::from_columns(&v_cols),
    })
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// One-sided Jacobi on the columns of `J^T`. Returns `B = J^T W` with
/// mutually orthogonal columns and the accumulated rotation `W`, so that
/// `J = W B^T`. Relative accuracy holds for every singular value, including
/// clustered ones.
fn one_sided_jacobi(j: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = j.nrows();
    let mut b = j.transpose();
    let mut w = DMatrix::<f64>::identity(m, m);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let alpha = b.column(p).norm_squared();
                let beta = b.column(q).norm_squared();
                let gamma = b.column(p).dot(&b.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate_columns(&mut b, p, q, c, s);
                rotate_columns(&mut w, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    (b, w)
}

fn rotate_columns(a: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..a.nrows() {
        let (x, y) = (a[(r, p)], a[(r, q)]);
        a[(r, p)] = c * x - s * y;
        a[(r, q)] = s * x + c * y;
    }
}

/// Extends an orthonormal set to a basis of R^dim by Gram-Schmidt against
/// the standard basis, picking at each step the candidate with the largest
/// residual.
fn complete_basis(cols: &mut Vec<DVector<f64>>, dim: usize) {
    while cols.len() < dim {
        let mut best: Option<DVector<f64>> = None;
        let mut best_norm = 0.0;
        for e in 0..dim {
            let mut r = DVector::zeros(dim);
            r[e] = 1.0;
            // Two passes for numerical orthogonality.
            for _ in 0..2 {
                for c in cols.iter() {
                    let d = c.dot(&r);
                    r.axpy(-d, c, 1.0);
                }
            }
            let nr = r.norm();
            if nr > best_norm {
                best_norm = nr;
                best = Some(r);
            }
        }
        let r = best.expect("standard basis spans the space");
        cols.push(r / best_norm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn orthogonality_error(m: &DMatrix<f64>) -> f64 {
        (m.transpose() * m - DMatrix::identity(m.ncols(), m.ncols())).norm()
    }

    #[test]
    fn identity() {
        let f = svd(&DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(f.sigma, DVector::from_vec(vec![1.0, 1.0]), epsilon = 1e-15);
    }

    #[test]
    fn planar2r_straight() {
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 1.0]);
        let f = svd(&j).unwrap();
        // Characteristic polynomial of J J^T = [[0,0],[0,5]]: l^2 - 5 l = 0.
        let jjt = &j * j.transpose();
        let (tr, det) = (jjt.trace(), jjt.determinant());
        let disc = (tr * tr - 4.0 * det).sqrt();
        let l1 = 0.5 * (tr + disc);
        let l2 = (0.5 * (tr - disc)).max(0.0);
        assert_relative_eq!(f.sigma[0], l1.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(f.sigma[0], 5f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(f.sigma[1], l2.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn shuffled_diagonal() {
        let j = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 0.0, 0.0, 0.0, 1.0, 3.0, 0.0, 0.0]);
        let f = svd(&j).unwrap();
        assert_relative_eq!(f.sigma, DVector::from_vec(vec![3.0, 2.0, 1.0]), epsilon = 1e-14);
    }

    #[test]
    fn zero_matrix_factors_are_orthogonal() {
        let f = svd(&DMatrix::zeros(3, 2)).unwrap();
        assert_eq!(f.sigma_max(), 0.0);
        assert!(orthogonality_error(&f.u) < 1e-14);
        assert!(orthogonality_error(&f.v) < 1e-14);
    }

    #[test]
    fn clustered_singular_values_keep_full_accuracy() {
        // U diag(1, 1 - 1e-4, 0.4) V^T built from exact rotations.
        let c = |a: f64| nalgebra::Rotation3::from_euler_angles(a, 2.0 * a, -a).matrix().clone();
        let u = DMatrix::from_column_slice(3, 3, c(0.3).as_slice());
        let v = DMatrix::from_column_slice(3, 3, c(-1.1).as_slice());
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0 - 1e-4, 0.4]));
        let j = &u * s * v.transpose();
        let f = svd(&j).unwrap();
        assert_relative_eq!(f.sigma, DVector::from_vec(vec![1.0, 1.0 - 1e-4, 0.4]), epsilon = 1e-14);
        let oracle = j.transpose() * (&j * j.transpose()).try_inverse().unwrap();
        let gains: Vec<f64> = f.sigma.iter().map(|s| 1.0 / s).collect();
        assert!((f.profile_matrix(&gains) - &oracle).norm() / oracle.norm() < 1e-13);
    }

    #[test]
    fn non_finite_rejected() {
        let j = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert_eq!(svd(&j), Err(Error::NonFinite("Jacobian")));
    }

    fn matrix(max_dim: usize) -> impl Strategy<Value = DMatrix<f64>> {
        (1..=max_dim, 1..=max_dim).prop_flat_map(|(m, n)| {
            prop::collection::vec(-3.0..3.0f64, m * n)
                .prop_map(move |d| DMatrix::from_vec(m, n, d))
        })
    }

    proptest! {
        #[test]
        fn factors_satisfy_invariants(j in matrix(7)) {
            let f = svd(&j).unwrap();
            let (m, n) = j.shape();
            prop_assert_eq!(f.u.shape(), (m, m));
            prop_assert_eq!(f.v.shape(), (n, n));
            prop_assert_eq!(f.sigma.len(), m);
            prop_assert!(orthogonality_error(&f.u) < 1e-10);
            prop_assert!(orthogonality_error(&f.v) < 1e-10);
            for w in f.sigma.as_slice().windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            prop_assert!(f.sigma.iter().all(|&s| s >= 0.0));
            let rel = (f.reconstruct() - &j).norm() / j.norm().max(1e-300);
            prop_assert!(rel <= 1e-10, "reconstruction error {rel}");
        }

        #[test]
        fn deterministic(j in matrix(6)) {
            prop_assert_eq!(svd(&j).unwrap(), svd(&j).unwrap());
        }
    }
}
