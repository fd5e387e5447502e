//! Rank statistics for comparing algorithms.

use crate::error::{Error, Result};
use statrs::distribution::{ContinuousCDF, Normal};

/// Largest combined sample size for which p-values are exact.
pub const EXACT_LIMIT: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
}

fn check(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::contract("rank statistics need two non-empty samples"));
    }
    Ok(())
}

/// Probability that a value from `xs` exceeds one from `ys`, ties counting half.
pub fn vargha_delaney_a12(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check(xs, ys)?;
    let mut score = 0.0;
    for x in xs {
        for y in ys {
            if x > y {
                score += 1.0;
            } else if x == y {
                score += 0.5;
            }
        }
    }
    Ok(score / (xs.len() * ys.len()) as f64)
}

/// Midranks of the pooled sample.
fn ranks(pooled: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut out = vec![0.0; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = rank;
        }
        i = j + 1;
    }
    out
}

fn u_from_ranks(ranks: &[f64], first: impl Iterator<Item = usize>, n1: usize) -> f64 {
    let r1: f64 = first.map(|i| ranks[i]).sum();
    r1 - (n1 * (n1 + 1)) as f64 / 2.0
}

pub fn mann_whitney_u(xs: &[f64], ys: &[f64]) -> Result<MannWhitney> {
    check(xs, ys)?;
    let (n1, n2) = (xs.len(), ys.len());
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let r = ranks(&pooled);
    let u = u_from_ranks(&r, 0..n1, n1);
    let mean = (n1 * n2) as f64 / 2.0;
    let p = if n1 + n2 <= EXACT_LIMIT { exact_p(&r, n1, u, mean) } else { normal_p(&r, n1, n2, u, mean) };
    Ok(MannWhitney { u, p: p.min(1.0) })
}

/// Share of all assignments of the pooled ranks to the first sample whose
/// U lies at least as far from the mean as the observed one.
fn exact_p(ranks: &[f64], n1: usize, u: f64, mean: f64) -> f64 {
    let n = ranks.len();
    let observed = (u - mean).abs() - 1e-9;
    let (mut extreme, mut total) = (0u64, 0u64);
    let mut chosen: Vec<usize> = (0..n1).collect();
    loop {
        total += 1;
        if (u_from_ranks(ranks, chosen.iter().copied(), n1) - mean).abs() >= observed {
            extreme += 1;
        }
        // Next combination in lexicographic order.
        let Some(i) = (0..n1).rev().find(|&i| chosen[i] < n - n1 + i) else { break };
        chosen[i] += 1;
        for j in i + 1..n1 {
            chosen[j] = chosen[j - 1] + 1;
        }
    }
    extreme as f64 / total as f64
}

fn normal_p(ranks: &[f64], n1: usize, n2: usize, u: f64, mean: f64) -> f64 {
    let n = (n1 + n2) as f64;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
        let t = j as f64;
        ties += t * t * t - t;
        i += j;
    }
    let variance = (n1 * n2) as f64 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if variance <= 0.0 {
        return 1.0;
    }
    // Continuity correction towards the mean.
    let z = ((u - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    2.0 * (1.0 - normal.cdf(z))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a12_examples() {
        assert_eq!(vargha_delaney_a12(&[1.0, 2.0, 3.0], &[2.0]).unwrap(), 0.5);
        assert_eq!(vargha_delaney_a12(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 0.0);
        assert_eq!(vargha_delaney_a12(&[5.0, 1.0], &[5.0, 1.0]).unwrap(), 0.5);
        assert!(vargha_delaney_a12(&[], &[1.0]).is_err());
    }

    #[test]
    fn midranks() {
        assert_eq!(ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn exact_small_cases() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert!((r.p - 2.0 / 6.0).abs() < 1e-12);
        assert_eq!(mann_whitney_u(&[1.0], &[1.0]).unwrap().p, 1.0);
        assert!(mann_whitney_u(&[1.0], &[]).is_err());
    }

    #[test]
    fn swapping_samples_keeps_p() {
        let xs = [0.1, 0.5, 0.7, 0.2, 0.9, 0.3, 0.8];
        let ys = [0.4, 0.6, 1.0, 1.1, 0.55, 0.65, 0.75, 1.2];
        let a = mann_whitney_u(&xs, &ys).unwrap();
        let b = mann_whitney_u(&ys, &xs).unwrap();
        assert!((a.p - b.p).abs() < 1e-12);
        assert_eq!(a.u + b.u, 56.0);
    }

    #[test]
    fn normal_approximation_agrees_with_reference() {
        // scipy.stats.mannwhitneyu(range(1, 11), range(6, 16), method="asymptotic")
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let ys: Vec<f64> = (6..=15).map(f64::from).collect();
        let r = mann_whitney_u(&xs, &ys).unwrap();
        assert_eq!(r.u, 12.5);
        assert!((r.p - 0.005075392315273923).abs() < 1e-9, "{}", r.p);
        let same = mann_whitney_u(&xs, &xs).unwrap();
        assert!((same.p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_values_give_p_one() {
        let xs = [3.0; 10];
        assert_eq!(mann_whitney_u(&xs, &xs).unwrap().p, 1.0);
    }

    #[test]
    fn location_summaries() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(mean(&[1.0, 2.0, 6.0]), 3.0);
    }
}
