//! Ranking indicator variables by how much the perspective relaxation would
//! shrink their naive relaxation, plus rank-correlation diagnostics.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::function::BoundPair;
use crate::volume::{vol_diff, vol_power_family, Cap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableProfile {
    pub index: usize,
    pub bounds: BoundPair,
    pub p: f64,
    /// `vol(naive) - vol(perspective)`, both with the secant cap.
    pub vol_gap: f64,
    /// Difference of cube roots of the same two volumes.
    pub root_gap: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingStrategy {
    DescendingVolDiff,
    AscendingVolDiff,
    Random { seed: u64 },
    DescendingRootDiff,
}

impl RankingStrategy {
    /// Short label used in CSV output and on the command line.
    pub fn label(&self) -> &'static str {
        match self {
            RankingStrategy::DescendingVolDiff => "desc",
            RankingStrategy::AscendingVolDiff => "asc",
            RankingStrategy::Random { .. } => "random",
            RankingStrategy::DescendingRootDiff => "root",
        }
    }
}

pub fn profile(bounds: BoundPair, p: f64) -> Result<VariableProfile> {
    profile_at(0, bounds, p)
}

fn profile_at(index: usize, bounds: BoundPair, p: f64) -> Result<VariableProfile> {
    let vol_gap = vol_diff(p, 0.0, p - 1.0, &bounds)?;
    let naive = vol_power_family(p, 0.0, &bounds, Cap::Secant)?.value;
    let hull = vol_power_family(p, p - 1.0, &bounds, Cap::Secant)?.value;
    Ok(VariableProfile {
        index,
        bounds,
        p,
        vol_gap,
        root_gap: naive.cbrt() - hull.cbrt(),
        width: bounds.width(),
    })
}

/// Profiles for a whole instance, indexed by position.
pub fn profiles(bounds: &[BoundPair], p: f64) -> Result<Vec<VariableProfile>> {
    bounds
        .par_iter()
        .enumerate()
        .map(|(i, b)| profile_at(i, *b, p))
        .collect()
}

/// Number of variables selected for a budget fraction of `n`.
pub fn budget_count(n: usize, budget_fraction: f64) -> usize {
    ((n as f64 * budget_fraction + 1e-9).floor() as usize).min(n)
}

/// Indices of the `floor(n * budget_fraction)` variables chosen by `strategy`.
pub fn rank(
    profiles: &[VariableProfile],
    strategy: RankingStrategy,
    budget_fraction: f64,
) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&budget_fraction) {
        return domain(format!("budget fraction must lie in [0, 1], got {budget_fraction}"));
    }
    let count = budget_count(profiles.len(), budget_fraction);
    Ok(ordering(profiles, strategy)
        .into_iter()
        .take(count)
        .map(|pos| profiles[pos].index)
        .collect())
}

/// Full priority order of positions in `profiles` under `strategy`.
pub fn ordering(profiles: &[VariableProfile], strategy: RankingStrategy) -> Vec<usize> {
    let mut order: Vec<usize> = (0..profiles.len()).collect();
    let by_index = |a: &usize, b: &usize| profiles[*a].index.cmp(&profiles[*b].index);
    match strategy {
        RankingStrategy::DescendingVolDiff => order.sort_by(|a, b| {
            profiles[*b]
                .vol_gap
                .total_cmp(&profiles[*a].vol_gap)
                .then_with(|| by_index(a, b))
        }),
        RankingStrategy::AscendingVolDiff => order.sort_by(|a, b| {
            profiles[*a]
                .vol_gap
                .total_cmp(&profiles[*b].vol_gap)
                .then_with(|| by_index(a, b))
        }),
        RankingStrategy::DescendingRootDiff => order.sort_by(|a, b| {
            profiles[*b]
                .root_gap
                .total_cmp(&profiles[*a].root_gap)
                .then_with(|| by_index(a, b))
        }),
        RankingStrategy::Random { seed } => {
            order.sort_by(by_index);
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
    }
    order
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Input(format!(
            "sequences differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Input("need at least two observations".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Input("sequences contain NaN".into()));
    }
    Ok(())
}

/// Sum of `t (t - 1) / 2` over runs of equal values in a sorted slice.
fn tie_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` and returns the number of inversions, i.e. discordant pairs.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    let k = k + mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Kendall's tau-b, by merge-sort inversion counting.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(b[i].total_cmp(&b[j])));
    let pairs: Vec<(f64, f64)> = idx.iter().map(|&i| (a[i], b[i])).collect();
    let a_sorted: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ties_a = tie_pairs(&a_sorted);
    let ties_ab = tie_pairs(&pairs);
    let mut bs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let discordant = merge_count(&mut bs, &mut buf);
    let ties_b = tie_pairs(&bs);
    let total = (n as u64) * (n as u64 - 1) / 2;
    let numer = total as f64 - ties_a as f64 - ties_b as f64 + ties_ab as f64 - 2.0 * discordant as f64;
    let denom = ((total - ties_a) as f64 * (total - ties_b) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::Input("a constant sequence has no rank correlation".into()));
    }
    Ok((numer / denom).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, with ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho as the Pearson correlation of average ranks.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let mean = (a.len() + 1) as f64 / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - mean, y - mean);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Input("a constant sequence has no rank correlation".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}
