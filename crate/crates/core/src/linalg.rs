//! Dense symmetric solves for the small normal-equation systems used by the
//! ensemble and ARX fits. Matrices are row-major `n x n` slices.

use crate::scalar::Scalar;

/// Cholesky factor `L` (lower, row-major) of a symmetric positive definite matrix.
/// Returns `None` when a pivot is not comfortably positive.
pub fn cholesky<T: Scalar>(a: &[T], n: usize) -> Option<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    let scale = (0..n).fold(T::zero(), |m, i| m.max(a[i * n + i].abs()));
    let floor = scale * T::epsilon() * T::from_usize_lossy(n.max(1)) * T::lit(16.0);
    let mut l = vec![T::zero(); n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d = d - l[j * n + k] * l[j * n + k];
        }
        if !(d > floor) {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the factor from [`cholesky`].
pub fn cholesky_solve<T: Scalar>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s = s - l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Solves the SPD system `a x = b`, or `None` if `a` is numerically singular.
pub fn solve_spd<T: Scalar>(a: &[T], n: usize, b: &[T]) -> Option<Vec<T>> {
    cholesky(a, n).map(|l| cholesky_solve(&l, n, b))
}

/// Gram matrix `XᵀX` and moment vector `Xᵀy` for row-major `x` with `p` columns.
pub fn normal_equations<T: Scalar>(x: &[T], p: usize, y: &[T]) -> (Vec<T>, Vec<T>) {
    let mut g = vec![T::zero(); p * p];
    let mut c = vec![T::zero(); p];
    for (row, &target) in x.chunks_exact(p).zip(y) {
        for i in 0..p {
            let ri = row[i];
            if ri == T::zero() {
                continue;
            }
            c[i] = c[i] + ri * target;
            for j in i..p {
                g[i * p + j] = g[i * p + j] + ri * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            g[i * p + j] = g[j * p + i];
        }
    }
    (g, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd() {
        let a = [4.0f64, 2.0, 2.0, 3.0];
        let x = solve_spd(&a, 2, &[2.0, 1.0]).unwrap();
        // 4x + 2y = 2, 2x + 3y = 1 -> x = 0.5, y = 0
        assert!((x[0] - 0.5).abs() < 1e-14 && x[1].abs() < 1e-14);
    }

    #[test]
    fn rejects_singular() {
        let a = [1.0, 1.0, 1.0, 1.0];
        assert!(solve_spd(&a, 2, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn gram_matches_direct_product() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let (g, c) = normal_equations(&x, 2, &[1.0, 0.0, -1.0]);
        assert_eq!(g, vec![35.0, 44.0, 44.0, 56.0]);
        assert_eq!(c, vec![-4.0, -4.0]);
    }
}
