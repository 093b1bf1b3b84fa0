//! Non-negative least squares, Lawson-Hanson active set method.
//!
//! Works on the normal equations `G = AᵀA`, `c = Aᵀb`, so each iteration costs
//! `O(n³)` in the number of columns regardless of how many rows were folded
//! into `G`. The ensemble fits have ten columns and tens of thousands of rows.

use crate::linalg::{normal_equations, solve_spd};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution<T> {
    pub x: Vec<T>,
    /// Outer iterations (columns moved into the passive set).
    pub iterations: usize,
    /// Columns dropped because they were linearly dependent on the passive set.
    pub rank_deficient: usize,
}

/// Minimizes `‖A x − b‖²` subject to `x ≥ 0` for row-major `a` with `n` columns.
pub fn nnls<T: Scalar>(a: &[T], n: usize, b: &[T]) -> NnlsSolution<T> {
    let (g, c) = normal_equations(a, n, b);
    nnls_gram(&g, &c, n)
}

/// Minimizes `½ xᵀ G x − cᵀ x` subject to `x ≥ 0`.
pub fn nnls_gram<T: Scalar>(g: &[T], c: &[T], n: usize) -> NnlsSolution<T> {
    let gmax = g.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let cmax = c.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tol = T::lit(10.0) * T::epsilon() * T::from_usize_lossy(n.max(1)) * gmax.max(cmax);

    let mut x = vec![T::zero(); n];
    let mut passive = vec![false; n];
    let mut excluded = vec![false; n];
    let mut iterations = 0;
    let max_outer = 3 * n + 10;

    while iterations < max_outer {
        // dual vector w = c - G x
        let w: Vec<T> = (0..n)
            .map(|i| {
                let gx = (0..n).fold(T::zero(), |s, j| s + g[i * n + j] * x[j]);
                c[i] - gx
            })
            .collect();
        let candidate = (0..n)
            .filter(|&j| !passive[j] && !excluded[j])
            .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap_or(std::cmp::Ordering::Equal));
        let j = match candidate {
            Some(j) if w[j] > tol => j,
            _ => break,
        };
        iterations += 1;
        passive[j] = true;

        let mut first_pass = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let z = match solve_passive(g, c, n, &idx) {
                Some(z) => z,
                None => {
                    passive[j] = false;
                    excluded[j] = true;
                    break;
                }
            };
            if first_pass {
                first_pass = false;
                let zj = idx.iter().position(|&i| i == j).map(|p| z[p]);
                if zj.is_some_and(|v| !(v > T::zero())) {
                    passive[j] = false;
                    excluded[j] = true;
                    break;
                }
            }
            if z.iter().all(|&v| v > T::zero()) {
                for (p, &i) in idx.iter().enumerate() {
                    x[i] = z[p];
                }
                break;
            }
            // step toward z until the first passive coordinate hits zero
            let mut alpha = T::one();
            for (p, &i) in idx.iter().enumerate() {
                if !(z[p] > T::zero()) {
                    let denom = x[i] - z[p];
                    if denom > T::zero() {
                        alpha = alpha.min(x[i] / denom);
                    }
                }
            }
            for (p, &i) in idx.iter().enumerate() {
                x[i] = x[i] + alpha * (z[p] - x[i]);
            }
            let mut removed = false;
            for (p, &i) in idx.iter().enumerate() {
                if !(z[p] > T::zero()) && x[i] <= tol.max(T::epsilon()) {
                    x[i] = T::zero();
                    passive[i] = false;
                    removed = true;
                }
            }
            if !removed || !passive.iter().any(|&p| p) {
                break;
            }
        }
    }

    for v in x.iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    NnlsSolution {
        x,
        iterations,
        rank_deficient: excluded.iter().filter(|&&e| e).count(),
    }
}

fn solve_passive<T: Scalar>(g: &[T], c: &[T], n: usize, idx: &[usize]) -> Option<Vec<T>> {
    let m = idx.len();
    let mut sub = vec![T::zero(); m * m];
    for (r, &i) in idx.iter().enumerate() {
        for (s, &j) in idx.iter().enumerate() {
            sub[r * m + s] = g[i * n + j];
        }
    }
    let rhs: Vec<T> = idx.iter().map(|&i| c[i]).collect();
    solve_spd(&sub, m, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residual(a: &[f64], n: usize, b: &[f64], x: &[f64]) -> f64 {
        a.chunks(n)
            .zip(b)
            .map(|(row, bi)| {
                let r: f64 = row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() - bi;
                r * r
            })
            .sum()
    }

    #[test]
    fn unconstrained_optimum_inside() {
        // b = 2*a0 + 1*a1 exactly
        let a = [1.0f64, 0.0, 0.0, 1.0, 1.0, 1.0];
        let b = [2.0, 1.0, 3.0];
        let s = nnls(&a, 2, &b);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn active_bound() {
        // unconstrained solution has x1 < 0
        let a = [1.0, 0.0, 0.0, 1.0];
        let b = [1.0, -1.0];
        let s = nnls(&a, 2, &b);
        assert_eq!(s.x, vec![1.0, 0.0]);
    }

    #[test]
    fn all_negative_target_gives_zero() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let s = nnls(&a, 2, &[-1.0, -1.0]);
        assert_eq!(s.x, vec![0.0, 0.0]);
    }

    #[test]
    fn duplicate_columns_do_not_stall() {
        let a = [1.0f64, 1.0, 2.0, 2.0, 3.0, 3.0];
        let s = nnls(&a, 2, &[1.0, 2.0, 3.0]);
        assert!((s.x[0] + s.x[1] - 1.0).abs() < 1e-10);
    }

    proptest! {
        // KKT: x >= 0, gradient >= 0 where x = 0, gradient ~ 0 where x > 0
        #[test]
        fn kkt_conditions(vals in prop::collection::vec(-1.0f64..1.0, 40), b in prop::collection::vec(-1.0f64..1.0, 10)) {
            let n = 4;
            let a = &vals[..n * 10];
            let s = nnls(a, n, &b);
            let (g, c) = normal_equations(a, n, &b);
            for i in 0..n {
                prop_assert!(s.x[i] >= 0.0);
                let grad: f64 = (0..n).map(|j| g[i * n + j] * s.x[j]).sum::<f64>() - c[i];
                if s.x[i] > 0.0 {
                    prop_assert!(grad.abs() < 1e-8);
                } else {
                    prop_assert!(grad > -1e-8);
                }
            }
            // never worse than any random non-negative point
            let probe: Vec<f64> = (0..n).map(|i| (vals[i] + 1.0) / 2.0).collect();
            prop_assert!(residual(a, n, &b, &s.x) <= residual(a, n, &b, &probe) + 1e-12);
        }
    }
}
