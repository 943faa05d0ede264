//! Small dense helpers shared across modules.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

/// `m ⊗ I_k`: lifts a 3×3 per-dimension operator onto block coordinates.
pub fn kron_identity(m: &Matrix3<f64>, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(3 * k, 3 * k);
    for r in 0..3 {
        for c in 0..3 {
            let v = m[(r, c)];
            if v != 0.0 {
                for i in 0..k {
                    out[(r * k + i, c * k + i)] = v;
                }
            }
        }
    }
    out
}

/// `v ⊗ 1_k`: every coordinate of block `i` receives `v[i]`.
pub fn lift_vector(v: &Vector3<f64>, k: usize) -> DVector<f64> {
    DVector::from_fn(3 * k, |i, _| v[i / k])
}

/// `‖m − mᵀ‖∞` (max absolute entry).
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in (r + 1)..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    worst
}

pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `vᵀ m v` over raw slices; `m` is column-major `n×n`.
pub(crate) fn quad_form(m: &[f64], v: &[f64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for c in 0..n {
        let col = &m[c * n..(c + 1) * n];
        let mut s = 0.0;
        for r in 0..n {
            s += col[r] * v[r];
        }
        acc += v[c] * s;
    }
    acc
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_lift_places_blocks() {
        let m = Matrix3::new(1.0, 2.0, 0.0, 2.0, 3.0, 0.0, 0.0, 0.0, 4.0);
        let l = kron_identity(&m, 2);
        assert_eq!(l[(0, 0)], 1.0);
        assert_eq!(l[(1, 1)], 1.0);
        assert_eq!(l[(0, 2)], 2.0);
        assert_eq!(l[(1, 3)], 2.0);
        assert_eq!(l[(0, 3)], 0.0);
        assert_eq!(l[(5, 5)], 4.0);
    }

    #[test]
    fn quad_form_matches_nalgebra() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let v = DVector::from_vec(vec![1.0, -2.0]);
        let expect = (v.transpose() * &m * &v)[(0, 0)];
        assert_eq!(quad_form(m.as_slice(), v.as_slice()), expect);
    }
}
