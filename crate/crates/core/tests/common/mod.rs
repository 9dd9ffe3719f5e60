#![allow(dead_code)]

use modalms::{Dataset, Sample};
use proptest::prelude::*;

/// One-dimensional samples with `x` in `[0, 1]` and `y` in `[-4, 4]`;
/// roughly a quarter of responses missing when `with_missing` is set, but
/// always at least two observed.
pub fn dataset(n: std::ops::Range<usize>, with_missing: bool) -> impl Strategy<Value = Dataset> {
    prop::collection::vec((0.0f64..1.0, -4.0f64..4.0, 0u8..4), n).prop_map(move |rows| {
        let samples = rows
            .iter()
            .enumerate()
            .map(|(i, &(x, y, tag))| {
                if with_missing && tag == 0 && i >= 2 {
                    Sample::missing(vec![x])
                } else {
                    Sample::observed(vec![x], y)
                }
            })
            .collect();
        Dataset::new(samples).unwrap()
    })
}

pub fn brute_point_set(b: f64, a: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for &v in a {
        let d = (b - v).abs();
        if d < best {
            best = d;
        }
    }
    best
}

/// `max(sup_a d(a, B), sup_b d(b, A))` by scanning every pair.
pub fn brute_hausdorff(a: &[f64], b: &[f64]) -> f64 {
    let mut h: f64 = 0.0;
    for &x in a {
        h = h.max(brute_point_set(x, b));
    }
    for &y in b {
        h = h.max(brute_point_set(y, a));
    }
    h
}

/// Composite trapezoid rule on `[lo, hi]` with `n` intervals.
pub fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = 0.5 * (f(lo) + f(hi));
    for k in 1..n {
        s += f(lo + h * k as f64);
    }
    s * h
}

/// Grid argmax of a function over `[lo, hi]`.
pub fn grid_argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let mut best = (lo, f64::NEG_INFINITY);
    for k in 0..=n {
        let y = lo + (hi - lo) * k as f64 / n as f64;
        let v = f(y);
        if v > best.1 {
            best = (y, v);
        }
    }
    best.0
}
