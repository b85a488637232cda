//! Exact brute-force nearest-neighbour search shared by KNN, SMOTE and the
//! density estimator.

use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub sq_dist: f64,
}

impl Neighbor {
    pub fn dist(&self) -> f64 {
        self.sq_dist.sqrt()
    }
}

/// The `k` rows of `reference` closest to `query`, ordered by distance with
/// ties going to the lower row index. `exclude` skips one row (self).
pub fn k_nearest(reference: &Matrix, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
    let mut best: Vec<Neighbor> = Vec::with_capacity(k + 1);
    if k == 0 {
        return best;
    }
    for (i, row) in reference.rows().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        let full = best.len() == k;
        let bound = if full { best[k - 1].sq_dist } else { f64::INFINITY };
        let Some(d) = bounded_sq_dist(row, query, bound) else {
            continue;
        };
        // strict: an equal distance at a higher index never displaces
        if full && d >= bound {
            continue;
        }
        let pos = best.partition_point(|n| n.sq_dist <= d);
        best.insert(pos, Neighbor { index: i, sq_dist: d });
        best.truncate(k);
    }
    best
}

/// Squared distance, or `None` once the partial sum exceeds `bound`.
#[inline]
fn bounded_sq_dist(a: &[f64], b: &[f64], bound: f64) -> Option<f64> {
    let mut acc = 0.0;
    for (chunk_a, chunk_b) in a.chunks(4).zip(b.chunks(4)) {
        for (x, y) in chunk_a.iter().zip(chunk_b) {
            acc += (x - y) * (x - y);
        }
        if acc > bound {
            return None;
        }
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::squared_euclidean;
    use proptest::prelude::*;

    fn brute(reference: &Matrix, q: &[f64], k: usize, exclude: Option<usize>) -> Vec<usize> {
        let mut all: Vec<(f64, usize)> = reference
            .rows()
            .enumerate()
            .filter(|(i, _)| Some(*i) != exclude)
            .map(|(i, r)| (squared_euclidean(r, q), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.into_iter().take(k).map(|(_, i)| i).collect()
    }

    #[test]
    fn ties_go_to_lower_index() {
        let m = Matrix::from_rows(&[vec![1.0], vec![-1.0], vec![1.0], vec![0.0]]);
        let nn = k_nearest(&m, &[0.0], 3, Some(3));
        let idx: Vec<usize> = nn.iter().map(|n| n.index).collect();
        assert_eq!(idx, vec![0, 1, 2]);
        let nn = k_nearest(&m, &[0.0], 2, Some(3));
        assert_eq!(nn.iter().map(|n| n.index).collect::<Vec<_>>(), vec![0, 1]);
    }

    proptest! {
        #[test]
        fn matches_full_sort(
            pts in prop::collection::vec(prop::collection::vec(-3i32..3, 3), 1..40),
            q in prop::collection::vec(-3i32..3, 3),
            k in 1usize..8,
        ) {
            let rows: Vec<Vec<f64>> = pts.iter().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect();
            let m = Matrix::from_rows(&rows);
            let q: Vec<f64> = q.iter().map(|&v| f64::from(v)).collect();
            let got: Vec<usize> = k_nearest(&m, &q, k, None).iter().map(|n| n.index).collect();
            prop_assert_eq!(got, brute(&m, &q, k, None));
            let got: Vec<usize> = k_nearest(&m, &q, k, Some(0)).iter().map(|n| n.index).collect();
            prop_assert_eq!(got, brute(&m, &q, k, Some(0)));
        }
    }
}
