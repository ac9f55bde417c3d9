//! Shared fixtures for the benchmarks.

use relaxvol::BoundPair;

/// `n` bound pairs spread deterministically over `l in (0, 20)`, `u - l in [10, 11]`,
/// the same ranges the experiment generator draws from.
pub fn bound_grid(n: usize) -> Vec<BoundPair> {
    (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            let l = 20.0 * t;
            let w = 10.0 + (7.0 * t).fract();
            BoundPair::new(l, l + w).expect("grid bounds are ordered")
        })
        .collect()
}
