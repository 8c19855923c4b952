//! Empirical measure of `2^N` independent draws from `lambda_N`, binned and
//! put on the large-deviation scale.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{Source, StreamKey, CHUNK, TAG_LDP};
use crate::error::{invalid, Result};
use crate::rates::{DrivingDistribution, RateFunction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalHistogram {
    pub n: usize,
    /// Bin `j` is `[lo[j], hi[j])`; the first and last bins are unbounded.
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<u64>,
    pub mass: Vec<f64>,
    /// `-(1/N) log mass`, infinite for empty bins.
    pub rate_stat: Vec<f64>,
    /// Infimum of the rate function over each bin.
    pub rate_inf: Vec<f64>,
}

impl EmpiricalHistogram {
    pub fn bin_of(&self, x: f64) -> usize {
        self.hi.partition_point(|&h| h <= x)
    }
}

/// Draws `2^n` values, bins them on `edges` (plus two unbounded bins) and
/// compares with the rate function.
pub fn empirical_ldp(rate: &RateFunction, n: usize, edges: &[f64], seed: u64) -> Result<EmpiricalHistogram> {
    if n == 0 || n > 30 {
        return Err(invalid("N", "particle number must lie in 1..=30"));
    }
    if edges.is_empty() || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("hist", "bin edges must be strictly increasing"));
    }
    let source = Source::plain(DrivingDistribution::new(rate.clone(), n as u32)?);
    let key = StreamKey::new(seed, 0, TAG_LDP);
    let total = 1u64 << n;
    let nf = n as f64;
    let bins = edges.len() + 1;
    let counts = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let len = (total - c * CHUNK).min(CHUNK) as usize;
            let mut h = vec![0u64; bins];
            for v in source.chunk(key, c, len) {
                h[edges.partition_point(|&e| e <= v / nf)] += 1;
            }
            h
        })
        .reduce(|| vec![0u64; bins], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    let mut lo = vec![f64::NEG_INFINITY];
    lo.extend_from_slice(edges);
    let mut hi = edges.to_vec();
    hi.push(f64::INFINITY);
    let mass: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let rate_stat = mass.iter().map(|&m| if m > 0.0 { -m.ln() / nf } else { f64::INFINITY }).collect();
    let rate_inf = lo.iter().zip(&hi).map(|(&l, &h)| rate.inf_on(l, h)).collect();
    Ok(EmpiricalHistogram { n, lo, hi, counts, mass, rate_stat, rate_inf })
}

/// Evenly spaced edges from `lo` to `hi`.
pub fn uniform_edges(lo: f64, hi: f64, width: f64) -> Vec<f64> {
    let k = ((hi - lo) / width).round() as usize;
    (0..=k).map(|i| lo + i as f64 * width).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masses_sum_to_one() {
        let h = empirical_ldp(&RateFunction::Gaussian, 12, &uniform_edges(-1.0, 1.0, 0.1), 4).unwrap();
        assert!((h.mass.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(h.counts.iter().sum::<u64>(), 1 << 12);
        assert_eq!(h.bin_of(-5.0), 0);
        assert_eq!(h.bin_of(0.05), 11);
    }
}
