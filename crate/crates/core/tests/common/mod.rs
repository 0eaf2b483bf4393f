#![allow(dead_code)]

use std::collections::HashMap;

/// Written from the published SplitMix64 description, separately from the
/// library generator.
pub struct RefSplitMix {
    pub state: u64,
}

impl RefSplitMix {
    pub fn next(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        finalize(self.state)
    }

    pub fn bounded(&mut self, bound: u64) -> u64 {
        let reject_below = (u64::MAX - bound + 1) % bound;
        loop {
            let x = self.next();
            if x >= reject_below {
                return x % bound;
            }
        }
    }
}

pub fn finalize(x: u64) -> u64 {
    let x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    let x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

pub fn fnv(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf29ce484222325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x100000001b3)
    })
}

pub fn ref_derive(root: u64, tag: &str, index: u64) -> u64 {
    finalize(finalize(root ^ fnv(tag)) ^ finalize(index + 1))
}

/// Partial Fisher-Yates over a virtual array, keeping only displaced slots
/// in a map.
pub fn ref_select(len: usize, n: usize, seed: u64) -> Vec<usize> {
    if n >= len {
        return (0..len).collect();
    }
    let mut rng = RefSplitMix { state: seed };
    let mut moved: HashMap<usize, usize> = HashMap::new();
    let mut picked = Vec::with_capacity(n);
    for i in 0..n {
        let j = i + rng.bounded((len - i) as u64) as usize;
        let at_j = *moved.get(&j).unwrap_or(&j);
        let at_i = *moved.get(&i).unwrap_or(&i);
        moved.insert(j, at_i);
        picked.push(at_j);
    }
    picked.sort();
    picked
}

/// Small xorshift generator for building test inputs.
pub struct Gen(pub u64);

impl Gen {
    pub fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next() % (hi - lo + 1) as u64) as usize
    }

    pub fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn tokens(&mut self, vocab: usize, len: usize) -> Vec<u32> {
        (0..len).map(|_| self.range(0, vocab - 1) as u32).collect()
    }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn profile(
    id: &str,
    lang: &str,
    values: [Option<f64>; 10],
) -> corposcope::profile::DatasetProfile {
    corposcope::profile::DatasetProfile {
        schema_version: corposcope::profile::SCHEMA_VERSION,
        dataset_id: id.to_string(),
        language: corposcope::corpus::Language::new(lang),
        n_samples: 100,
        sample_seed: Some(1),
        config_fingerprint: "0123456789abcdef".to_string(),
        metrics: corposcope::profile::MetricVector::new(values),
        per_sample: None,
    }
}

pub fn full(values: [f64; 10]) -> [Option<f64>; 10] {
    values.map(Some)
}
