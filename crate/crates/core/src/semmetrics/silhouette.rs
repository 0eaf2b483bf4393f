use rayon::prelude::*;

use super::sq_dist;
use crate::error::{Error, Result};

/// Per-point silhouette coefficients with Euclidean distance.
///
/// Points in singleton clusters score 0, as do points whose `a` and `b` are
/// both zero.
pub fn silhouette_samples(points: &[Vec<f64>], assignments: &[usize]) -> Result<Vec<f64>> {
    let n = points.len();
    if assignments.len() != n {
        return Err(Error::Config(
            "silhouette needs one assignment per point".into(),
        ));
    }
    if n < 3 {
        return Err(Error::undefined("silhouette", "fewer than three points"));
    }
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &c in assignments {
        sizes[c] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::undefined(
            "silhouette",
            "fewer than two non-empty clusters",
        ));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let own = assignments[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, p) in points.iter().enumerate() {
                if j != i {
                    sums[assignments[j]] += sq_dist(&points[i], p).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        })
        .collect())
}

/// Mean silhouette coefficient.
pub fn silhouette(points: &[Vec<f64>], assignments: &[usize]) -> Result<f64> {
    let s = silhouette_samples(points, assignments)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}
