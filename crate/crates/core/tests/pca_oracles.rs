mod common;

use proptest::prelude::*;

use common::{full, profile, Gen};
use corposcope::pca::{category_contributions, fit_language, fit_pca, fit_scaler, PcaModel};
use corposcope::profile::{DatasetProfile, Metric};

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix; returns
/// (eigenvalues, eigenvectors as rows), sorted by decreasing eigenvalue.
#[allow(clippy::needless_range_loop)]
fn jacobi(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].partial_cmp(&a[x][x]).unwrap());
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (values, vectors)
}

fn random_matrix(g: &mut Gen, d: usize, w: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|_| (0..w).map(|_| g.unit() * 4.0 - 2.0).collect())
        .collect()
}

fn standardize(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    fit_scaler(m).unwrap().transform(m)
}

fn covariance(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (d, w) = (m.len(), m[0].len());
    let means: Vec<f64> = (0..w)
        .map(|j| m.iter().map(|r| r[j]).sum::<f64>() / d as f64)
        .collect();
    (0..w)
        .map(|a| {
            (0..w)
                .map(|b| {
                    m.iter()
                        .map(|r| (r[a] - means[a]) * (r[b] - means[b]))
                        .sum::<f64>()
                        / d as f64
                })
                .collect()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn assert_orthonormal(rows: &[Vec<f64>]) {
    for i in 0..rows.len() {
        for j in 0..rows.len() {
            let want = if i == j { 1.0 } else { 0.0 };
            let got = dot(&rows[i], &rows[j]);
            assert!((got - want).abs() <= 1e-8, "L L^T [{i},{j}] = {got}");
        }
    }
}

#[test]
fn matches_jacobi_eigendecomposition() {
    let mut g = Gen(0xC0FFEE);
    for _ in 0..30 {
        let d = g.range(11, 20);
        let z = standardize(&random_matrix(&mut g, d, 10));
        let fit = fit_pca(&z, 3).unwrap();
        let (values, vectors) = jacobi(covariance(&z));
        let total: f64 = values.iter().sum();
        for i in 0..3 {
            let evr = values[i] / total;
            assert!((fit.explained_variance_ratio[i] - evr).abs() <= 1e-9);
            let gap = (values[i] - values[i + 1]).min(if i > 0 {
                values[i - 1] - values[i]
            } else {
                f64::INFINITY
            });
            if gap > 1e-3 {
                let align = dot(&fit.loadings[i], &vectors[i]).abs();
                assert!((align - 1.0).abs() <= 1e-8, "pc{} alignment {align}", i + 1);
            }
        }
    }
}

#[test]
fn loadings_orthonormal_and_evr_ordered() {
    let mut g = Gen(1);
    for _ in 0..100 {
        let d = g.range(2, 16);
        let z = standardize(&random_matrix(&mut g, d, 10));
        let fit = fit_pca(&z, 3).unwrap();
        assert_eq!(fit.loadings.len(), 3.min(d - 1));
        assert_orthonormal(&fit.loadings);
        let evr = &fit.explained_variance_ratio;
        assert!(evr.windows(2).all(|w| w[1] <= w[0]));
        assert!(evr.iter().sum::<f64>() <= 1.0 + 1e-9);
        for row in &fit.loadings {
            let top = row
                .iter()
                .cloned()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(top > 0.0);
        }
        assert_eq!(fit.warnings.is_empty(), d >= 4);
    }
}

#[test]
fn scaler_closed_form() {
    let m = vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]];
    let s = fit_scaler(&m).unwrap();
    assert_eq!(s.means, [2.0, 5.0]);
    assert!((s.stds[0] - (2.0f64 / 3.0).sqrt()).abs() <= 1e-15);
    let t = s.transform(&m);
    let want = [-1.224744871391589, 0.0, 1.224744871391589];
    for (r, w) in t.iter().zip(want) {
        assert!((r[0] - w).abs() <= 1e-12);
        assert_eq!(r[1], 0.0);
    }
}

#[test]
fn standardized_training_matrix_has_unit_variance() {
    let mut g = Gen(5);
    let z = standardize(&random_matrix(&mut g, 9, 10));
    for j in 0..10 {
        let mean = z.iter().map(|r| r[j]).sum::<f64>() / 9.0;
        let var = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / 9.0;
        assert!(mean.abs() <= 1e-12 && (var - 1.0).abs() <= 1e-12);
    }
}

fn planted(values: impl Fn(usize) -> [f64; 10], d: usize) -> Vec<DatasetProfile> {
    (0..d)
        .map(|i| profile(&format!("ds{i:02}"), "ar", full(values(i))))
        .collect()
}

#[test]
fn planted_rank_one_matrix() {
    let profiles = planted(
        |i| {
            let mut v = [0.5; 10];
            v[Metric::Mtld.index()] = 10.0 + 3.0 * i as f64;
            v
        },
        12,
    );
    let (model, _) = fit_language(&profiles, 3).unwrap();
    assert!((model.explained_variance_ratio[0] - 1.0).abs() <= 1e-9);
    for evr in &model.explained_variance_ratio[1..] {
        assert!(evr.abs() <= 1e-9);
    }
    let (metric, loading) = model.top_loading_metric(1).unwrap();
    assert_eq!(metric, Metric::Mtld);
    assert!((loading - 1.0).abs() <= 1e-12);
    let c = &model.category_contributions[0];
    assert!((c.lexical - 1.0).abs() <= 1e-12 && c.diversity.abs() <= 1e-12);
}

#[test]
fn planted_correlated_pair() {
    let profiles = planted(
        |i| {
            let x = (i as f64 * 0.37).sin() + i as f64 * 0.1;
            let mut v = [0.25; 10];
            v[Metric::Ttr.index()] = x;
            v[Metric::Hdd.index()] = 2.0 * x + 1.0;
            v
        },
        11,
    );
    let (model, _) = fit_language(&profiles, 3).unwrap();
    assert!((model.explained_variance_ratio[0] - 1.0).abs() <= 1e-9);
    let row = model.loading_row(1).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((row[Metric::Ttr.index()] - h).abs() <= 1e-9);
    assert!((row[Metric::Hdd.index()] - h).abs() <= 1e-9);
}

#[test]
fn category_contribution_examples() {
    let uniform = vec![vec![1.0 / 10f64.sqrt(); 10]];
    let c = category_contributions(&uniform, &Metric::names()).unwrap()[0];
    for (got, want) in [
        (c.diversity, 0.3),
        (c.lexical, 0.4),
        (c.semantic, 0.2),
        (c.clustering, 0.1),
    ] {
        assert!((got - want).abs() <= 1e-12);
    }
    let mut names = Metric::names();
    names[0] = "perplexity".into();
    assert!(category_contributions(&uniform, &names).is_err());
}

fn random_profiles(g: &mut Gen, d: usize) -> Vec<DatasetProfile> {
    (0..d)
        .map(|i| {
            let mut v = [0.0; 10];
            v.iter_mut().for_each(|x| *x = g.unit());
            profile(&format!("d{i}"), "ja", full(v))
        })
        .collect()
}

#[test]
fn fitted_model_invariants() {
    let mut g = Gen(77);
    for _ in 0..40 {
        let d = g.range(4, 14);
        let profiles = random_profiles(&mut g, d);
        let (model, _) = fit_language(&profiles, 3).unwrap();
        assert_orthonormal(&model.loadings);
        for c in &model.category_contributions {
            assert!((c.sum() - 1.0).abs() <= 1e-9);
        }
        // Projection of the training profiles reproduces the stored scores.
        for p in &profiles {
            let proj = model.project(&p.metrics);
            assert_eq!(proj, model.dataset_scores[&p.dataset_id]);
        }
        // Variance of the scores equals the explained share of total variance.
        let total: f64 = model.scaler.constant_flags.iter().filter(|&&c| !c).count() as f64;
        for (k, evr) in model.explained_variance_ratio.iter().enumerate() {
            let s: Vec<f64> = model.dataset_scores.values().map(|v| v[k]).collect();
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / s.len() as f64;
            assert!(
                (var - evr * total).abs() <= 1e-8,
                "d={d} pc{} {var} vs {}",
                k + 1,
                evr * total
            );
        }
    }
}

#[test]
fn refit_is_bit_identical_and_json_round_trips() {
    let mut g = Gen(123);
    let profiles = random_profiles(&mut g, 9);
    let (a, _) = fit_language(&profiles, 3).unwrap();
    let (b, _) = fit_language(&profiles, 3).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let back = PcaModel::from_json(&a.to_json()).unwrap();
    assert_eq!(back, a);
    assert_eq!(back.to_json(), a.to_json());
}

#[test]
fn missing_values_are_mean_imputed() {
    let mut g = Gen(8);
    let mut profiles = random_profiles(&mut g, 8);
    let mut v = *profiles[3].metrics.values();
    v[Metric::Silhouette.index()] = None;
    profiles[3] = profile("d3", "ja", v);
    let (model, _) = fit_language(&profiles, 3).unwrap();
    let present: Vec<f64> = profiles
        .iter()
        .filter_map(|p| p.metrics.get(Metric::Silhouette))
        .collect();
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    assert!((model.scaler.means[Metric::Silhouette.index()] - mean).abs() <= 1e-15);
    let proj = model.project(&profiles[3].metrics);
    for (a, b) in proj.iter().zip(&model.dataset_scores["d3"]) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn small_fits_warn_and_reduce_components() {
    let mut g = Gen(3);
    let (model, warnings) = fit_language(&random_profiles(&mut g, 3), 3).unwrap();
    assert_eq!(model.n_components(), 2);
    assert_eq!(warnings.len(), 2);
    assert!(model.loading_row(3).is_err());
}

#[test]
fn mixed_inputs_are_rejected() {
    let mut g = Gen(4);
    let mut profiles = random_profiles(&mut g, 5);
    profiles[1].language = corposcope::corpus::Language::new("ar");
    assert!(fit_language(&profiles, 3)
        .unwrap_err()
        .to_string()
        .contains("mixed-language"));
    let mut profiles = random_profiles(&mut g, 5);
    profiles[2].config_fingerprint = "ffffffffffffffff".into();
    assert!(fit_language(&profiles, 3).is_err());
}

proptest! {
    #[test]
    fn positive_rescaling_of_a_metric_changes_nothing(
        seed in any::<u64>(),
        metric in 0usize..10,
        scale in 0.01f64..100.0,
        shift in -5.0f64..5.0,
    ) {
        let mut g = Gen(seed | 1);
        let profiles = random_profiles(&mut g, 12);
        let changed: Vec<DatasetProfile> = profiles
            .iter()
            .map(|p| {
                let mut v = *p.metrics.values();
                v[metric] = v[metric].map(|x| x * scale + shift);
                profile(&p.dataset_id, "ja", v)
            })
            .collect();
        let (a, _) = fit_language(&profiles, 3).unwrap();
        let (b, _) = fit_language(&changed, 3).unwrap();
        for (x, y) in a.explained_variance_ratio.iter().zip(&b.explained_variance_ratio) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        for (id, s) in &a.dataset_scores {
            for (x, y) in s.iter().zip(&b.dataset_scores[id]) {
                prop_assert!((x.abs() - y.abs()).abs() <= 1e-7);
            }
        }
    }

    #[test]
    fn dataset_order_does_not_matter(seed in any::<u64>(), rot in 1usize..11) {
        let mut g = Gen(seed | 1);
        let profiles = random_profiles(&mut g, 11);
        let mut rotated = profiles.clone();
        rotated.rotate_left(rot);
        let (a, _) = fit_language(&profiles, 3).unwrap();
        let (b, _) = fit_language(&rotated, 3).unwrap();
        for (x, y) in a.explained_variance_ratio.iter().zip(&b.explained_variance_ratio) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        for (ra, rb) in a.loadings.iter().zip(&b.loadings) {
            prop_assert!((dot(ra, rb).abs() - 1.0).abs() <= 1e-6);
        }
    }
}
