mod common;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

use common::Gen;
use corposcope::lexmetrics::{hdd, mattr, mtld, ttr};

fn ttr_ref(t: &[u32]) -> f64 {
    t.iter().collect::<BTreeSet<_>>().len() as f64 / t.len() as f64
}

fn mattr_ref(t: &[u32], w: usize) -> f64 {
    if t.len() <= w {
        return ttr_ref(t);
    }
    let windows = t.len() - w + 1;
    (0..windows).map(|s| ttr_ref(&t[s..s + w])).sum::<f64>() / windows as f64
}

fn choose(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..k {
        num *= BigUint::from(n - i);
        den *= BigUint::from(i + 1);
    }
    num / den
}

fn hdd_exact(t: &[u32], draw: usize) -> BigRational {
    let n = t.len();
    let mut freq: BTreeMap<u32, usize> = BTreeMap::new();
    for &x in t {
        *freq.entry(x).or_default() += 1;
    }
    let total = choose(n, draw);
    let mut sum = BigRational::zero();
    for &f in freq.values() {
        let miss = BigRational::new(choose(n - f, draw).into(), total.clone().into());
        sum += BigRational::one() - miss;
    }
    sum / BigRational::from_integer(draw.into())
}

fn mtld_pass(seq: &[u32], threshold: f64) -> f64 {
    let mut factors = 0.0;
    let mut seen = BTreeSet::new();
    let mut count = 0usize;
    for &tok in seq {
        count += 1;
        seen.insert(tok);
        if (seen.len() as f64 / count as f64) < threshold {
            factors += 1.0;
            seen.clear();
            count = 0;
        }
    }
    if count > 0 {
        let final_ttr = seen.len() as f64 / count as f64;
        factors += (1.0 - final_ttr) / (1.0 - threshold);
    }
    if factors == 0.0 {
        seq.len() as f64
    } else {
        seq.len() as f64 / factors
    }
}

fn mtld_ref(t: &[u32], threshold: f64) -> f64 {
    let rev: Vec<u32> = t.iter().rev().copied().collect();
    (mtld_pass(t, threshold) + mtld_pass(&rev, threshold)) / 2.0
}

fn sequences() -> Vec<Vec<u32>> {
    let mut g = Gen(0x5eed_1234_abcd_0001);
    (0..100)
        .map(|_| {
            let vocab = g.range(1, 50);
            let len = g.range(1, 500);
            g.tokens(vocab, len)
        })
        .collect()
}

#[test]
fn hundred_random_sequences_match_brute_force() {
    for (i, t) in sequences().iter().enumerate() {
        assert!((ttr(t).unwrap() - ttr_ref(t)).abs() <= 1e-12, "ttr #{i}");
        for w in [2, 7, 100] {
            let (got, want) = (mattr(t, w).unwrap(), mattr_ref(t, w));
            assert!(
                (got - want).abs() <= 1e-9,
                "mattr #{i} w={w}: {got} vs {want}"
            );
        }
        let (got, want) = (mtld(t, 0.72).unwrap(), mtld_ref(t, 0.72));
        assert!((got - want).abs() <= 1e-9, "mtld #{i}: {got} vs {want}");
        if t.len() >= 42 {
            let want = hdd_exact(t, 42).to_f64().unwrap();
            let got = hdd(t, 42).unwrap();
            assert!((got - want).abs() <= 1e-9, "hdd #{i}: {got} vs {want}");
        } else {
            assert!(hdd(t, 42).is_err());
        }
    }
}

#[test]
fn hand_cases() {
    assert_eq!(hdd(&["a", "a", "b", "b"], 2).unwrap(), 5.0 / 6.0);
    assert_eq!(
        hdd_exact(&[0, 0, 1, 1], 2),
        BigRational::new(5.into(), 6.into())
    );
    assert_eq!(hdd(&["a", "a", "a"], 2).unwrap(), 0.5);
    assert!(hdd(&["a", "a"], 3).is_err());
    assert_eq!(mtld(&["a", "a", "a", "a"], 0.72).unwrap(), 2.0);
    assert_eq!(mtld(&["a", "b", "c", "d", "e"], 0.72).unwrap(), 5.0);
    assert_eq!(mattr(&["a", "b", "a", "b"], 2).unwrap(), 1.0);
    assert_eq!(mattr(&["a", "a", "a"], 2).unwrap(), 0.5);
    assert_eq!(mattr(&["a", "b"], 100).unwrap(), 1.0);
    assert_eq!(ttr(&["a", "b", "a", "c"]).unwrap(), 0.75);
    assert_eq!(ttr(&["a", "a", "a", "a"]).unwrap(), 0.25);
}

#[test]
fn constant_sequences() {
    for n in 1..60usize {
        let t = vec![9u32; n];
        for draw in 1..=n.min(42) {
            assert_eq!(
                hdd(&t, draw).unwrap(),
                1.0 / draw as f64,
                "n={n} draw={draw}"
            );
        }
        let want = if n == 1 {
            1.0
        } else {
            n as f64 / (n / 2) as f64
        };
        assert_eq!(mtld(&t, 0.72).unwrap(), want, "n={n}");
    }
}

#[test]
fn empty_sequences_are_undefined() {
    let e: [u32; 0] = [];
    assert!(ttr(&e).is_err());
    assert!(mattr(&e, 5).is_err());
    assert!(mtld(&e, 0.72).is_err());
    assert!(hdd(&e, 1).is_err());
}

fn seq() -> impl Strategy<Value = Vec<u32>> {
    (1usize..30).prop_flat_map(|v| prop::collection::vec(0..v as u32, 1..200))
}

proptest! {
    #[test]
    fn relabeling_leaves_metrics_unchanged(t in seq(), mult in 1u32..1000, shift in 0u32..1000) {
        let relabeled: Vec<String> = t.iter().map(|x| format!("w{}", x * (2 * mult + 1) + shift)).collect();
        prop_assert_eq!(ttr(&t).unwrap().to_bits(), ttr(&relabeled).unwrap().to_bits());
        prop_assert_eq!(mattr(&t, 10).unwrap().to_bits(), mattr(&relabeled, 10).unwrap().to_bits());
        prop_assert_eq!(mtld(&t, 0.72).unwrap().to_bits(), mtld(&relabeled, 0.72).unwrap().to_bits());
        if t.len() >= 5 {
            prop_assert_eq!(hdd(&t, 5).unwrap().to_bits(), hdd(&relabeled, 5).unwrap().to_bits());
        }
    }

    #[test]
    fn mattr_with_full_window_is_ttr(t in seq()) {
        prop_assert_eq!(mattr(&t, t.len().max(2)).unwrap(), ttr(&t).unwrap());
    }

    #[test]
    fn novel_type_raises_hdd(t in seq(), pick in any::<prop::sample::Index>(), draw in 2usize..10) {
        prop_assume!(t.len() >= draw);
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for &x in &t {
            *counts.entry(x).or_default() += 1;
        }
        let duplicated: Vec<usize> = (0..t.len()).filter(|&i| counts[&t[i]] > 1).collect();
        prop_assume!(!duplicated.is_empty());
        let mut changed = t.clone();
        changed[duplicated[pick.index(duplicated.len())]] = u32::MAX;
        let exact_before = hdd_exact(&t, draw);
        let exact_after = hdd_exact(&changed, draw);
        prop_assert!(exact_after > exact_before);
        prop_assert!(hdd(&changed, draw).unwrap() > hdd(&t, draw).unwrap());
    }

    #[test]
    fn metrics_stay_in_range(t in seq()) {
        for v in [ttr(&t).unwrap(), mattr(&t, 10).unwrap()] {
            prop_assert!(v > 0.0 && v <= 1.0);
        }
        prop_assert!(mtld(&t, 0.72).unwrap() > 0.0);
        if t.len() >= 3 {
            let v = hdd(&t, 3).unwrap();
            prop_assert!(v > 0.0 && v <= 1.0 + 1e-12);
        }
    }
}
