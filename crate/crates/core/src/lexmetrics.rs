//! Lexical richness: TTR, MATTR, HD-D and MTLD.
//!
//! All functions are generic over the token type so callers can pass interned
//! ids or strings alike.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LexicalConfig {
    pub mattr_window: usize,
    pub hdd_draw: usize,
    pub mtld_threshold: f64,
}

impl Default for LexicalConfig {
    fn default() -> Self {
        Self {
            mattr_window: 100,
            hdd_draw: 42,
            mtld_threshold: 0.72,
        }
    }
}

impl LexicalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mattr_window < 2 {
            return Err(Error::Config("mattr window must be at least 2".into()));
        }
        if self.hdd_draw < 1 {
            return Err(Error::Config("hd-d draw must be at least 1".into()));
        }
        if !(self.mtld_threshold > 0.0 && self.mtld_threshold < 1.0) {
            return Err(Error::Config(
                "mtld threshold must lie strictly between 0 and 1".into(),
            ));
        }
        Ok(())
    }
}

fn type_counts<T: Hash + Eq>(tokens: &[T]) -> HashMap<&T, usize> {
    let mut counts = HashMap::new();
    for t in tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    counts
}

pub fn ttr<T: Hash + Eq>(tokens: &[T]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::undefined("ttr", "empty token sequence"));
    }
    Ok(type_counts(tokens).len() as f64 / tokens.len() as f64)
}

/// Moving-average TTR over every contiguous window of `window` tokens.
/// Sequences no longer than the window fall back to plain TTR.
pub fn mattr<T: Hash + Eq>(tokens: &[T], window: usize) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::undefined("mattr", "empty token sequence"));
    }
    if window == 0 {
        return Err(Error::Config("mattr window must be positive".into()));
    }
    if tokens.len() <= window {
        return ttr(tokens);
    }
    let mut counts: HashMap<&T, usize> = HashMap::new();
    for t in &tokens[..window] {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut distinct_sum = counts.len();
    for i in window..tokens.len() {
        let outgoing = &tokens[i - window];
        let c = counts.get_mut(outgoing).expect("outgoing token is counted");
        *c -= 1;
        if *c == 0 {
            counts.remove(outgoing);
        }
        *counts.entry(&tokens[i]).or_insert(0) += 1;
        distinct_sum += counts.len();
    }
    let windows = tokens.len() - window + 1;
    Ok(distinct_sum as f64 / (windows * window) as f64)
}

/// HD-D: the expected TTR of a uniform draw of `draw` tokens without
/// replacement.
pub fn hdd<T: Hash + Eq>(tokens: &[T], draw: usize) -> Result<f64> {
    let n = tokens.len();
    if draw == 0 {
        return Err(Error::Config("hd-d draw must be positive".into()));
    }
    if n < draw {
        return Err(Error::undefined(
            "hdd",
            format!("{n} tokens is fewer than the draw size {draw}"),
        ));
    }
    let mut freqs: Vec<usize> = type_counts(tokens).into_values().collect();
    // Fixed summation order regardless of hash iteration order.
    freqs.sort_unstable();
    let sum: f64 = freqs.iter().map(|&f| 1.0 - prob_absent(n, f, draw)).sum();
    Ok(sum / draw as f64)
}

/// C(n - f, d) / C(n, d) as a product of `d` ratios, each below one.
fn prob_absent(n: usize, f: usize, d: usize) -> f64 {
    if n - f < d {
        return 0.0;
    }
    (0..d).fold(1.0, |p, k| p * (n - f - k) as f64 / (n - k) as f64)
}

/// Bidirectional MTLD with a strict `<` factor boundary.
///
/// A pass whose factor count is zero scores the sequence length.
pub fn mtld<T: Hash + Eq>(tokens: &[T], threshold: f64) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::undefined("mtld", "empty token sequence"));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(
            "mtld threshold must lie strictly between 0 and 1".into(),
        ));
    }
    let forward = mtld_pass(tokens.iter(), tokens.len(), threshold);
    let backward = mtld_pass(tokens.iter().rev(), tokens.len(), threshold);
    Ok((forward + backward) / 2.0)
}

fn mtld_pass<'a, T: Hash + Eq + 'a>(
    tokens: impl Iterator<Item = &'a T>,
    len: usize,
    threshold: f64,
) -> f64 {
    let mut factors = 0.0;
    let mut seen: HashMap<&T, ()> = HashMap::new();
    let mut count = 0usize;
    let mut current_ttr = 1.0;
    for t in tokens {
        seen.insert(t, ());
        count += 1;
        current_ttr = seen.len() as f64 / count as f64;
        if current_ttr < threshold {
            factors += 1.0;
            seen.clear();
            count = 0;
            current_ttr = 1.0;
        }
    }
    if count > 0 {
        factors += (1.0 - current_ttr) / (1.0 - threshold);
    }
    if factors == 0.0 {
        len as f64
    } else {
        len as f64 / factors
    }
}
