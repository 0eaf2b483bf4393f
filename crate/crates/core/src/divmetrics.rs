//! Cross-sample diversity: Distinct-n and Self-BLEU.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, select_positions, SplitMix64};

/// Sentence-BLEU settings for Self-BLEU. N-gram weights are uniform over
/// `1..=max_ngram`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_ngram: usize,
    pub smoothing_epsilon: f64,
    pub reference_cap: usize,
    pub reference_seed: u64,
}

impl Default for BleuConfig {
    fn default() -> Self {
        Self {
            max_ngram: 4,
            smoothing_epsilon: 1e-9,
            reference_cap: 200,
            reference_seed: 0,
        }
    }
}

impl BleuConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_ngram == 0 {
            return Err(Error::Config("bleu max n-gram must be at least 1".into()));
        }
        if self.reference_cap == 0 {
            return Err(Error::Config(
                "bleu reference cap must be at least 1".into(),
            ));
        }
        if !(self.smoothing_epsilon > 0.0 && self.smoothing_epsilon < 1.0) {
            return Err(Error::Config(
                "bleu smoothing epsilon must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn weights(&self) -> Vec<f64> {
        vec![1.0 / self.max_ngram as f64; self.max_ngram]
    }
}

/// Unique n-grams over total n-grams, pooled across samples. N-grams never
/// span sample boundaries.
pub fn distinct_n<T: Hash + Eq, S: AsRef<[T]>>(samples: &[S], n: usize) -> Result<f64> {
    let name = match n {
        1 => "distinct1",
        2 => "distinct2",
        _ => "distinct_n",
    };
    if n == 0 {
        return Err(Error::Config("distinct-n needs n >= 1".into()));
    }
    let mut unique: HashSet<&[T]> = HashSet::new();
    let mut total = 0usize;
    for s in samples {
        for gram in s.as_ref().windows(n) {
            unique.insert(gram);
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::undefined(name, format!("no sample has {n} tokens")));
    }
    Ok(unique.len() as f64 / total as f64)
}

type NgramCounts<'a, T> = Vec<HashMap<&'a [T], u32>>;

fn ngram_counts<T: Hash + Eq>(tokens: &[T], max_n: usize) -> NgramCounts<'_, T> {
    (1..=max_n)
        .map(|n| {
            let mut m = HashMap::new();
            for g in tokens.windows(n) {
                *m.entry(g).or_insert(0) += 1;
            }
            m
        })
        .collect()
}

fn bleu_from_counts<T: Hash + Eq>(
    hyp_len: usize,
    hyp: &NgramCounts<'_, T>,
    refs: &[(usize, &NgramCounts<'_, T>)],
    cfg: &BleuConfig,
) -> f64 {
    if hyp_len == 0 || refs.is_empty() {
        return 0.0;
    }
    let order = cfg.max_ngram.min(hyp_len);
    let mut log_sum = 0.0;
    for n in 1..=order {
        let total = (hyp_len - n + 1) as f64;
        let clipped: u64 = hyp[n - 1]
            .iter()
            .map(|(gram, &count)| {
                let best = refs
                    .iter()
                    .map(|(_, r)| r[n - 1].get(gram).copied().unwrap_or(0))
                    .max()
                    .unwrap_or(0);
                count.min(best) as u64
            })
            .sum();
        let p = if clipped == 0 {
            cfg.smoothing_epsilon
        } else {
            clipped as f64 / total
        };
        log_sum += p.ln() / order as f64;
    }
    let closest = refs
        .iter()
        .map(|(len, _)| *len)
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .expect("refs is non-empty");
    let bp = if hyp_len > closest {
        1.0
    } else {
        (1.0 - closest as f64 / hyp_len as f64).exp()
    };
    bp * log_sum.exp()
}

/// Sentence-BLEU of one hypothesis against a reference set.
///
/// Modified precisions are clipped by the per-reference maximum count, zero
/// precisions become `smoothing_epsilon`, and the brevity penalty uses the
/// reference length closest to the hypothesis (shorter wins ties).
/// Hypotheses shorter than `max_ngram` use their own length as the order.
/// An empty hypothesis scores 0.
pub fn sentence_bleu<T: Hash + Eq, S: AsRef<[T]>>(
    hypothesis: &[T],
    references: &[S],
    cfg: &BleuConfig,
) -> f64 {
    let hyp = ngram_counts(hypothesis, cfg.max_ngram);
    let ref_counts: Vec<_> = references
        .iter()
        .map(|r| (r.as_ref().len(), ngram_counts(r.as_ref(), cfg.max_ngram)))
        .collect();
    let refs: Vec<_> = ref_counts.iter().map(|(l, c)| (*l, c)).collect();
    bleu_from_counts(hypothesis.len(), &hyp, &refs, cfg)
}

/// Indices of the references used for hypothesis `i` among `n` samples.
///
/// All other samples when there are at most `reference_cap` of them,
/// otherwise a seeded draw of `reference_cap` seeded by
/// `derive_seed(reference_seed, "self-bleu", i)`.
pub fn reference_indices(i: usize, n: usize, cfg: &BleuConfig) -> Vec<usize> {
    let others = n.saturating_sub(1);
    let to_sample = |k: usize| if k < i { k } else { k + 1 };
    if others <= cfg.reference_cap {
        return (0..others).map(to_sample).collect();
    }
    let mut rng = SplitMix64::new(derive_seed(cfg.reference_seed, "self-bleu", i as u64));
    select_positions(others, cfg.reference_cap, &mut rng)
        .into_iter()
        .map(to_sample)
        .collect()
}

/// Sentence-BLEU of every sample against the others, in sample order.
pub fn self_bleu_per_sample<T, S>(samples: &[S], cfg: &BleuConfig) -> Result<Vec<f64>>
where
    T: Hash + Eq + Sync,
    S: AsRef<[T]> + Sync,
{
    cfg.validate()?;
    if samples.len() < 2 {
        return Err(Error::undefined("self_bleu", "fewer than two samples"));
    }
    let counts: Vec<NgramCounts<'_, T>> = samples
        .par_iter()
        .map(|s| ngram_counts(s.as_ref(), cfg.max_ngram))
        .collect();
    let n = samples.len();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let refs: Vec<_> = reference_indices(i, n, cfg)
                .into_iter()
                .map(|j| (samples[j].as_ref().len(), &counts[j]))
                .collect();
            bleu_from_counts(samples[i].as_ref().len(), &counts[i], &refs, cfg)
        })
        .collect())
}

/// Mean sentence-BLEU of each sample against the rest.
pub fn self_bleu<T, S>(samples: &[S], cfg: &BleuConfig) -> Result<f64>
where
    T: Hash + Eq + Sync,
    S: AsRef<[T]> + Sync,
{
    let scores = self_bleu_per_sample(samples, cfg)?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}
