//! Local outlier factor in the standardized (wind speed, normalized power) plane.
//!
//! Neighborhoods hold exactly `k` points; equidistant candidates are ordered by
//! index. Local reachability density follows the common `1 / (mean reach + 1e-10)`
//! form so duplicated points do not produce infinities.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_K: usize = 20;
pub const DEFAULT_THRESHOLD: f64 = 1.5;

const LRD_EPS: f64 = 1e-10;

/// Static 2-d tree over a point set; nodes are implicit in the index permutation.
#[derive(Debug, Clone)]
struct KdTree<T> {
    points: Vec<[T; 2]>,
    perm: Vec<usize>,
}

#[derive(Clone, Copy)]
struct Candidate<T> {
    d2: T,
    idx: usize,
}

impl<T: Scalar> Candidate<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .partial_cmp(&other.d2)
            .unwrap_or(Ordering::Equal)
            .then(self.idx.cmp(&other.idx))
    }
}

impl<T: Scalar> KdTree<T> {
    fn build(points: Vec<[T; 2]>) -> Self {
        let mut perm: Vec<usize> = (0..points.len()).collect();
        Self::build_rec(&points, &mut perm, 0);
        Self { points, perm }
    }

    fn build_rec(points: &[[T; 2]], perm: &mut [usize], depth: usize) {
        if perm.len() <= 1 {
            return;
        }
        let axis = depth % 2;
        let mid = perm.len() / 2;
        perm.select_nth_unstable_by(mid, |&a, &b| {
            points[a][axis]
                .partial_cmp(&points[b][axis])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let (left, right) = perm.split_at_mut(mid);
        Self::build_rec(points, left, depth + 1);
        Self::build_rec(points, &mut right[1..], depth + 1);
    }

    /// The `k` nearest points to `q`, sorted by (distance, index); `skip` is
    /// left out of the result.
    fn knn(&self, q: [T; 2], k: usize, skip: Option<usize>) -> Vec<Candidate<T>> {
        let mut best: Vec<Candidate<T>> = Vec::with_capacity(k + 1);
        self.search(0, self.perm.len(), 0, q, k, skip, &mut best);
        best
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        lo: usize,
        hi: usize,
        depth: usize,
        q: [T; 2],
        k: usize,
        skip: Option<usize>,
        best: &mut Vec<Candidate<T>>,
    ) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let idx = self.perm[mid];
        let p = self.points[idx];
        if Some(idx) != skip {
            let dx = p[0] - q[0];
            let dy = p[1] - q[1];
            let cand = Candidate {
                d2: dx * dx + dy * dy,
                idx,
            };
            if best.len() < k || cand.cmp(&best[best.len() - 1]) == Ordering::Less {
                let pos = best.partition_point(|b| b.cmp(&cand) == Ordering::Less);
                best.insert(pos, cand);
                if best.len() > k {
                    best.pop();
                }
            }
        }
        let axis = depth % 2;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < T::zero() {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(near.0, near.1, depth + 1, q, k, skip, best);
        if best.len() < k || diff * diff <= best[best.len() - 1].d2 {
            self.search(far.0, far.1, depth + 1, q, k, skip, best);
        }
    }
}

/// Per-axis standardization constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardizer<T> {
    pub mean: [T; 2],
    pub std: [T; 2],
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(points: &[[T; 2]]) -> Self {
        let n = T::from_usize_lossy(points.len().max(1));
        let mut mean = [T::zero(); 2];
        let mut std = [T::zero(); 2];
        for a in 0..2 {
            mean[a] = points.iter().map(|p| p[a]).sum::<T>() / n;
            let var = points.iter().map(|p| (p[a] - mean[a]).powi(2)).sum::<T>() / n;
            std[a] = if var > T::zero() { var.sqrt() } else { T::one() };
        }
        Self { mean, std }
    }

    pub fn apply(&self, p: [T; 2]) -> [T; 2] {
        [
            (p[0] - self.mean[0]) / self.std[0],
            (p[1] - self.mean[1]) / self.std[1],
        ]
    }
}

/// LOF neighborhood model fitted on a reference set (the training rows).
#[derive(Debug, Clone)]
pub struct LofModel<T> {
    k: usize,
    scaler: Standardizer<T>,
    tree: KdTree<T>,
    k_distance: Vec<T>,
    lrd: Vec<T>,
    scores: Vec<T>,
}

impl<T: Scalar> LofModel<T> {
    /// Requires `points.len() > k >= 1`.
    pub fn fit(points: &[[T; 2]], k: usize) -> Result<Self> {
        let n = points.len();
        if k == 0 || k >= n {
            return Err(Error::Parameter(format!(
                "LOF needs 1 <= k < n (k = {k}, n = {n})"
            )));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Parameter("LOF input contains non-finite values".into()));
        }
        let scaler = Standardizer::fit(points);
        let scaled: Vec<[T; 2]> = points.iter().map(|&p| scaler.apply(p)).collect();
        let tree = KdTree::build(scaled);

        let neighbors: Vec<Vec<Candidate<T>>> =
            (0..n).map(|i| tree.knn(tree.points[i], k, Some(i))).collect();
        let k_distance: Vec<T> = neighbors.iter().map(|nb| nb[k - 1].d2.sqrt()).collect();
        let lrd: Vec<T> = neighbors
            .iter()
            .map(|nb| Self::lrd_of(nb, &k_distance))
            .collect();
        let scores = neighbors
            .iter()
            .zip(&lrd)
            .map(|(nb, &own)| Self::ratio(nb, &lrd, own))
            .collect();
        Ok(Self {
            k,
            scaler,
            tree,
            k_distance,
            lrd,
            scores,
        })
    }

    fn lrd_of(nb: &[Candidate<T>], k_distance: &[T]) -> T {
        let reach: T = nb.iter().map(|c| k_distance[c.idx].max(c.d2.sqrt())).sum();
        let mean = reach / T::from_usize_lossy(nb.len());
        T::one() / (mean + T::lit(LRD_EPS))
    }

    fn ratio(nb: &[Candidate<T>], lrd: &[T], own: T) -> T {
        let mean: T = nb.iter().map(|c| lrd[c.idx]).sum::<T>() / T::from_usize_lossy(nb.len());
        mean / own
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// LOF of each reference point relative to the rest of the set.
    pub fn training_scores(&self) -> &[T] {
        &self.scores
    }

    /// LOF of a new point against the reference neighborhoods.
    pub fn score(&self, p: [T; 2]) -> T {
        let q = self.scaler.apply(p);
        let nb = self.tree.knn(q, self.k, None);
        let own = Self::lrd_of(&nb, &self.k_distance);
        Self::ratio(&nb, &self.lrd, own)
    }
}

/// LOF score of every point within the set.
pub fn lof_scores<T: Scalar>(points: &[[T; 2]], k: usize) -> Result<Vec<T>> {
    Ok(LofModel::fit(points, k)?.training_scores().to_vec())
}
