//! Seeded k-means++ with Lloyd iterations and best-of-restarts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sq_dist;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: 8,
            restarts: 10,
            max_iters: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Restart that produced this result.
    pub restart: usize,
    pub iterations: usize,
    /// Number of empty-cluster refills performed.
    pub refills: usize,
    /// Inertia after each assignment step, measured against the centroids
    /// used for that assignment.
    pub inertia_trace: Vec<f64>,
}

/// Clusters `points` into `cfg.k` groups.
///
/// Each restart `r` seeds k-means++ from `derive_seed(cfg.seed, "kmeans", r)`
/// and runs Lloyd iterations until the assignment is unchanged or
/// `max_iters` is reached. The lowest final inertia wins, ties going to the
/// earlier restart. A cluster left empty after an update is re-seeded at the
/// point farthest from its own centroid.
pub fn kmeans(points: &[Vec<f64>], cfg: &ClusterConfig) -> Result<KMeansResult> {
    let n = points.len();
    if cfg.k < 2 || n < 3 || cfg.k > n - 1 {
        return Err(Error::Config(format!(
            "k-means needs 2 <= k <= N - 1, got k = {} with N = {n}",
            cfg.k
        )));
    }
    if cfg.restarts == 0 || cfg.max_iters == 0 {
        return Err(Error::Config(
            "k-means restarts and max_iters must be positive".into(),
        ));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Config("k-means points differ in dimension".into()));
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Config("k-means points must be finite".into()));
    }
    let runs: Vec<KMeansResult> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_once(points, cfg, r))
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.inertia < runs[best].inertia {
            best = r;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one restart"))
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, sq_dist(p, &centroids[0]));
    for (c, centroid) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.below(n as u64) as usize].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            let mut last_positive = 0;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    last_positive = i;
                    acc += d;
                    if acc > target {
                        chosen = Some(i);
                        break;
                    }
                }
            }
            chosen.unwrap_or(last_positive)
        } else {
            rng.below(n as u64) as usize
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn run_once(points: &[Vec<f64>], cfg: &ClusterConfig, restart: usize) -> KMeansResult {
    let mut rng = SplitMix64::new(derive_seed(cfg.seed, "kmeans", restart as u64));
    let mut centroids = plus_plus_init(points, cfg.k, &mut rng);
    let dim = points[0].len();
    let mut assignments: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut refills = 0;
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        let step: Vec<(usize, f64)> = points.iter().map(|p| nearest(p, &centroids)).collect();
        trace.push(step.iter().map(|&(_, d)| d).sum());
        let next: Vec<usize> = step.into_iter().map(|(c, _)| c).collect();
        let changed = next != assignments;
        assignments = next;

        let mut sums = vec![vec![0.0; dim]; cfg.k];
        let mut sizes = vec![0usize; cfg.k];
        for (p, &c) in points.iter().zip(&assignments) {
            sizes[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..cfg.k {
            if sizes[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
            }
        }
        let empty: Vec<usize> = (0..cfg.k).filter(|&c| sizes[c] == 0).collect();
        if !empty.is_empty() {
            let mut far: Vec<(usize, f64)> = points
                .iter()
                .zip(&assignments)
                .enumerate()
                .map(|(i, (p, &c))| (i, sq_dist(p, &centroids[c])))
                .collect();
            far.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));
            for (c, (i, _)) in empty.into_iter().zip(far) {
                centroids[c] = points[i].clone();
                refills += 1;
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&assignments)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum();
    KMeansResult {
        assignments,
        centroids,
        inertia,
        restart,
        iterations,
        refills,
        inertia_trace: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn two_obvious_groups() {
        let pts = line(&[0.0, 0.1, 10.0, 10.1]);
        let cfg = ClusterConfig {
            k: 2,
            seed: 5,
            ..Default::default()
        };
        let r = kmeans(&pts, &cfg).unwrap();
        assert_eq!(r.assignments[0], r.assignments[1]);
        assert_eq!(r.assignments[2], r.assignments[3]);
        assert_ne!(r.assignments[0], r.assignments[2]);
        let mut cs: Vec<f64> = r.centroids.iter().map(|c| c[0]).collect();
        cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((cs[0] - 0.05).abs() < 1e-12 && (cs[1] - 10.05).abs() < 1e-12);
        assert!((r.inertia - 4.0 * 0.05 * 0.05).abs() < 1e-12);
    }

    #[test]
    fn identical_points_exercise_refill() {
        let pts = vec![vec![1.0, 2.0]; 6];
        let cfg = ClusterConfig {
            k: 2,
            restarts: 1,
            ..Default::default()
        };
        let r = kmeans(&pts, &cfg).unwrap();
        assert!(r.refills >= 1);
        assert_eq!(r.inertia, 0.0);
    }

    #[test]
    fn deterministic() {
        let pts: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i * 7 % 13) as f64, (i * 3 % 5) as f64])
            .collect();
        let cfg = ClusterConfig {
            k: 4,
            seed: 99,
            ..Default::default()
        };
        assert_eq!(kmeans(&pts, &cfg).unwrap(), kmeans(&pts, &cfg).unwrap());
    }

    #[test]
    fn k_out_of_range() {
        let pts = line(&[0.0, 1.0, 2.0]);
        for k in [0, 1, 3, 4] {
            let cfg = ClusterConfig {
                k,
                ..Default::default()
            };
            assert!(matches!(kmeans(&pts, &cfg), Err(Error::Config(_))), "k={k}");
        }
    }
}
