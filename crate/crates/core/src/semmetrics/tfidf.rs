use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Sparse vector with strictly increasing column indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&c, &v)| v * dense[c])
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }
}

/// TF-IDF over a document set: raw term counts times
/// `idf = ln((1 + N) / (1 + df)) + 1`, rows L2-normalized.
#[derive(Debug, Clone)]
pub struct TfidfModel<T> {
    /// Terms in order of first occurrence; the position is the column.
    pub vocabulary: Vec<T>,
    pub idf: Vec<f64>,
    pub documents: Vec<SparseVector>,
}

pub fn tfidf_fit_transform<T, S>(samples: &[S]) -> Result<TfidfModel<T>>
where
    T: Hash + Eq + Clone + Sync,
    S: AsRef<[T]> + Sync,
{
    if samples.iter().all(|s| s.as_ref().is_empty()) {
        return Err(Error::undefined("cos_tfidf", "every document is empty"));
    }
    let mut columns: HashMap<&T, usize> = HashMap::new();
    let mut vocabulary = Vec::new();
    for s in samples {
        for t in s.as_ref() {
            columns.entry(t).or_insert_with(|| {
                vocabulary.push(t.clone());
                vocabulary.len() - 1
            });
        }
    }
    let counts: Vec<Vec<(usize, f64)>> = samples
        .par_iter()
        .map(|s| {
            let mut tf: HashMap<usize, f64> = HashMap::new();
            for t in s.as_ref() {
                *tf.entry(columns[t]).or_insert(0.0) += 1.0;
            }
            let mut row: Vec<(usize, f64)> = tf.into_iter().collect();
            row.sort_unstable_by_key(|&(c, _)| c);
            row
        })
        .collect();
    let mut df = vec![0usize; vocabulary.len()];
    for row in &counts {
        for &(c, _) in row {
            df[c] += 1;
        }
    }
    let n = samples.len() as f64;
    let idf: Vec<f64> = df
        .iter()
        .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
        .collect();
    let documents = counts
        .into_par_iter()
        .map(|row| {
            let weighted: Vec<(usize, f64)> =
                row.into_iter().map(|(c, tf)| (c, tf * idf[c])).collect();
            let norm = weighted.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            SparseVector {
                indices: weighted.iter().map(|&(c, _)| c).collect(),
                values: weighted
                    .iter()
                    .map(|&(_, w)| if norm > 0.0 { w / norm } else { 0.0 })
                    .collect(),
            }
        })
        .collect();
    Ok(TfidfModel {
        vocabulary,
        idf,
        documents,
    })
}

impl<T> TfidfModel<T> {
    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// Mean cosine over unordered document pairs.
    pub fn mean_pairwise_cosine(&self) -> Result<f64> {
        let docs = &self.documents;
        let n = docs.len();
        if n < 2 {
            return Err(Error::undefined("cos_tfidf", "fewer than two documents"));
        }
        let row_sums: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).map(|j| docs[i].dot(&docs[j])).sum())
            .collect();
        let pairs = (n * (n - 1) / 2) as f64;
        Ok(row_sums.iter().sum::<f64>() / pairs)
    }

    /// Cosine of each document with the mean document vector.
    pub fn centroid_cosines(&self) -> Vec<f64> {
        let mut centroid = vec![0.0; self.vocabulary.len()];
        for d in &self.documents {
            for (&c, &v) in d.indices.iter().zip(&d.values) {
                centroid[c] += v;
            }
        }
        let n = self.documents.len() as f64;
        centroid.iter_mut().for_each(|x| *x /= n);
        let norm = centroid.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.documents
            .iter()
            .map(|d| {
                if norm == 0.0 || d.is_zero() {
                    0.0
                } else {
                    d.dot_dense(&centroid) / norm
                }
            })
            .collect()
    }
}
