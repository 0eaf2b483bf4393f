use rayon::prelude::*;

use super::dot;
use crate::error::{Error, Result};

/// L2-normalizes a vector; the zero vector stays zero.
pub fn normalize(v: &[f64]) -> Vec<f64> {
    let norm = dot(v, v).sqrt();
    if norm == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / norm).collect()
    }
}

/// Mean cosine similarity over all unordered pairs `i < j`.
///
/// Zero vectors have similarity 0 with everything. Row partial sums are
/// reduced in index order, so the result does not depend on thread count.
pub fn mean_pairwise_cosine(vectors: &[Vec<f64>]) -> Result<f64> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::undefined("cos_embed", "fewer than two vectors"));
    }
    let unit: Vec<Vec<f64>> = vectors.par_iter().map(|v| normalize(v)).collect();
    let row_sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| dot(&unit[i], &unit[j])).sum())
        .collect();
    Ok(row_sums.iter().sum::<f64>() / (n * (n - 1) / 2) as f64)
}

/// Cosine of each vector with the mean of the normalized vectors.
pub fn centroid_cosines(vectors: &[Vec<f64>]) -> Vec<f64> {
    let unit: Vec<Vec<f64>> = vectors.iter().map(|v| normalize(v)).collect();
    let dim = unit.first().map_or(0, Vec::len);
    let mut centroid = vec![0.0; dim];
    for u in &unit {
        for (c, x) in centroid.iter_mut().zip(u) {
            *c += x;
        }
    }
    let centroid = normalize(&centroid);
    unit.iter().map(|u| dot(u, &centroid)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors() {
        let v = vec![vec![0.3, 0.4]; 5];
        assert!((mean_pairwise_cosine(&v).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_pair() {
        let v = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(mean_pairwise_cosine(&v).unwrap(), 0.0);
    }

    #[test]
    fn three_vector_hand_value() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![h, h]];
        let expected = (0.0 + h + h) / 3.0;
        assert!((mean_pairwise_cosine(&v).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_vectors_contribute_zero() {
        let v = vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![2.0, 0.0]];
        assert!((mean_pairwise_cosine(&v).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(mean_pairwise_cosine(&v[..1]).is_err());
    }

    #[test]
    fn centroid_direction_scores_one() {
        let v = vec![vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!((centroid_cosines(&v)[0] - 1.0).abs() < 1e-15);
    }
}
