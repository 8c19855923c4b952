//! Bolthausen-Kistler GREM: variables indexed by subsets of the levels.
//! Free energy as the minimum over the hidden per-permutation tree GREMs,
//! the chain construction, and the block-tree maximum.

use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic_grem::{grem_energy, GremSpec};
use crate::error::{invalid, Error, Result};
use crate::numeric::LN2;

pub const MAX_SYMBOLS: usize = 8;

/// Subset-weighted model. Subsets are bitmasks over `0..n`; bit `i` is
/// symbol `i + 1` in the JSON form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BkJson", into = "BkJson")]
pub struct BkSpec {
    pub n: usize,
    pub p: Vec<f64>,
    pub weights: BTreeMap<u32, f64>,
    /// Exponent of the driving family: 2 is Gaussian, 1 the two-sided
    /// exponential.
    pub gamma: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BkJson {
    n: usize,
    p: Vec<f64>,
    weights: BTreeMap<String, f64>,
    #[serde(default = "two")]
    gamma: f64,
}

fn two() -> f64 {
    2.0
}

/// Parses `"1,3"` into a bitmask; indices must be strictly increasing.
pub fn parse_subset(key: &str, n: usize) -> Result<u32> {
    let mut mask = 0u32;
    let mut prev = 0usize;
    for part in key.split(',') {
        let i: usize = part
            .trim()
            .parse()
            .map_err(|_| invalid("weights", format!("bad subset key {key:?}")))?;
        if i == 0 || i > n || i <= prev {
            return Err(invalid("weights", format!("subset key {key:?} must list increasing symbols in 1..={n}")));
        }
        prev = i;
        mask |= 1 << (i - 1);
    }
    Ok(mask)
}

pub fn format_subset(mask: u32) -> String {
    (0..32).filter(|i| mask >> i & 1 == 1).map(|i| (i + 1).to_string()).join(",")
}

impl TryFrom<BkJson> for BkSpec {
    type Error = Error;
    fn try_from(j: BkJson) -> Result<Self> {
        if j.n == 0 || j.n > MAX_SYMBOLS {
            return Err(invalid("n", format!("symbol count must lie in 1..={MAX_SYMBOLS}")));
        }
        let mut weights = BTreeMap::new();
        for (k, v) in j.weights {
            if weights.insert(parse_subset(&k, j.n)?, v).is_some() {
                return Err(invalid("weights", format!("duplicate subset {k:?}")));
            }
        }
        BkSpec::new(j.n, j.p, weights, j.gamma)
    }
}

impl From<BkSpec> for BkJson {
    fn from(s: BkSpec) -> Self {
        BkJson {
            n: s.n,
            p: s.p,
            weights: s.weights.iter().map(|(m, v)| (format_subset(*m), *v)).collect(),
            gamma: s.gamma,
        }
    }
}

impl BkSpec {
    pub fn new(n: usize, p: Vec<f64>, weights: BTreeMap<u32, f64>, gamma: f64) -> Result<Self> {
        let s = BkSpec { n, p, weights, gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn gaussian(n: usize, p: Vec<f64>, weights: BTreeMap<u32, f64>) -> Result<Self> {
        BkSpec::new(n, p, weights, 2.0)
    }

    pub fn full(&self) -> u32 {
        (1u32 << self.n) - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_SYMBOLS {
            return Err(invalid("n", format!("symbol count must lie in 1..={MAX_SYMBOLS}")));
        }
        if self.p.len() != self.n {
            return Err(invalid("p", format!("expected {} proportions", self.n)));
        }
        if self.p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(invalid("p", "proportions must be > 0"));
        }
        let total: f64 = self.p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("p", format!("proportions must sum to 1 (got {total})")));
        }
        for (&m, &a) in &self.weights {
            if m == 0 || m & !self.full() != 0 {
                return Err(invalid("weights", format!("subset mask {m:#b} is not a non-empty subset")));
            }
            if !(a >= 0.0) || !a.is_finite() {
                return Err(invalid("weights", "weights must be finite and >= 0"));
            }
        }
        if !self.weights.values().any(|&a| a > 0.0) {
            return Err(invalid("weights", "at least one weight must be > 0"));
        }
        if !(self.gamma >= 1.0) || !self.gamma.is_finite() {
            return Err(invalid("gamma", "the subset model supports exponents >= 1"));
        }
        Ok(())
    }

    /// `sum of a_s^2` over subsets `s` of `inside` that are not subsets of `outside`.
    pub fn w2_between(&self, outside: u32, inside: u32) -> f64 {
        self.weights
            .iter()
            .filter(|(&s, _)| s & !inside == 0 && s & !outside != 0)
            .map(|(_, a)| a * a)
            .sum()
    }

    pub fn w2(&self, set: u32) -> f64 {
        self.w2_between(0, set)
    }

    fn mass(&self, set: u32) -> f64 {
        (0..self.n).filter(|i| set >> i & 1 == 1).map(|i| self.p[i]).sum()
    }

    // Combined weight of the independent variables in one tree level.
    fn level_weight(&self, outside: u32, inside: u32) -> f64 {
        let parts = self
            .weights
            .iter()
            .filter(|(&s, _)| s & !inside == 0 && s & !outside != 0)
            .map(|(_, &a)| a);
        if self.gamma == 2.0 {
            parts.map(|a| a * a).sum::<f64>().sqrt()
        } else if self.gamma == 1.0 {
            parts.fold(0.0, f64::max)
        } else {
            let q = self.gamma / (self.gamma - 1.0);
            parts.map(|a| a.powf(q)).sum::<f64>().powf(1.0 / q)
        }
    }
}

fn check_perm(n: usize, perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(invalid("perm", format!("expected a permutation of {n} symbols")));
    }
    for &i in perm {
        if i >= n || seen[i] {
            return Err(invalid("perm", "not a permutation"));
        }
        seen[i] = true;
    }
    Ok(())
}

/// The tree GREM seen along the symbol order `perm` (0-based symbols).
pub fn pi_grem(spec: &BkSpec, perm: &[usize]) -> Result<GremSpec> {
    spec.validate()?;
    check_perm(spec.n, perm)?;
    let mut prefix = 0u32;
    let mut a = Vec::with_capacity(spec.n);
    for &i in perm {
        let next = prefix | 1 << i;
        a.push(spec.level_weight(prefix, next));
        prefix = next;
    }
    let p = perm.iter().map(|&i| spec.p[i]).collect();
    GremSpec::uniform(p, a, spec.gamma)
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    (0..n).permutations(n).collect()
}

/// Energy of every hidden GREM, in lexicographic permutation order.
pub fn bk_permutation_energies(spec: &BkSpec, beta: f64) -> Result<Vec<(Vec<usize>, f64)>> {
    spec.validate()?;
    permutations(spec.n)
        .into_par_iter()
        .map(|perm| {
            let e = grem_energy(&pi_grem(spec, &perm)?, beta)?;
            Ok((perm, e))
        })
        .collect()
}

/// Minimum over all hidden GREMs.
pub fn bk_energy_min(spec: &BkSpec, beta: f64) -> Result<f64> {
    Ok(bk_permutation_energies(spec, beta)?
        .into_iter()
        .map(|(_, e)| e)
        .fold(f64::INFINITY, f64::min))
}

/// Increasing chain of symbol sets with their freezing temperatures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub sets: Vec<u32>,
    pub betas: Vec<f64>,
    /// Symbols (0-based) added at each step; surviving orders list each
    /// block in any internal order.
    pub blocks: Vec<Vec<usize>>,
    pub surviving_count: u64,
}

impl ChainResult {
    pub fn k(&self) -> usize {
        self.sets.len()
    }
}

const TIE: f64 = 1e-12;

/// Chain construction for the Gaussian model. Trailing symbols that carry
/// no weight are absorbed in a final rung at `+inf`.
pub fn bk_chain(spec: &BkSpec) -> Result<ChainResult> {
    spec.validate()?;
    if spec.gamma != 2.0 {
        return Err(Error::Unsupported("the chain construction is implemented for the Gaussian family".into()));
    }
    let full = spec.full();
    let threshold = |from: u32, to: u32| {
        let den = spec.w2_between(from, to);
        if den > 0.0 {
            (2.0 * spec.mass(to & !from) * LN2 / den).sqrt()
        } else {
            f64::INFINITY
        }
    };
    let (mut sets, mut betas, mut blocks) = (vec![], vec![], vec![]);
    let mut g = 0u32;
    while g != full {
        let cands: Vec<(u32, f64)> =
            (0..=full).filter(|&h| h & g == g && h != g).map(|h| (h, threshold(g, h))).collect();
        let m = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let next = if m.is_finite() {
            let u = cands.iter().filter(|c| c.1 <= m * (1.0 + TIE)).fold(g, |acc, c| acc | c.0);
            let at_union = threshold(g, u);
            if at_union > m * (1.0 + 1e-9) {
                return Err(Error::Unsupported(format!(
                    "union of minimizing sets has threshold {at_union}, expected {m}"
                )));
            }
            u
        } else {
            full
        };
        betas.push(m);
        blocks.push((0..spec.n).filter(|i| (next & !g) >> i & 1 == 1).collect::<Vec<_>>());
        sets.push(next);
        g = next;
    }
    let surviving_count = blocks.iter().map(|b| (1..=b.len() as u64).product::<u64>()).product();
    Ok(ChainResult { sets, betas, blocks, surviving_count })
}

/// Closed form read off the chain.
pub fn bk_energy_chain(spec: &BkSpec, beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(invalid("beta", "must be >= 0"));
    }
    let ch = bk_chain(spec)?;
    let j = ch.betas.partition_point(|&b| b <= beta);
    let gj = if j == 0 { 0 } else { ch.sets[j - 1] };
    let mut e = spec.mass(spec.full() & !gj) * LN2;
    let mut prev = 0u32;
    for l in 0..j {
        e += beta * ch.betas[l] * spec.w2_between(prev, ch.sets[l]);
        prev = ch.sets[l];
    }
    e += 0.5 * beta * beta * spec.w2_between(gj, spec.full());
    Ok(e)
}

fn check_block(p: &[f64], beta: f64) -> Result<()> {
    if p.is_empty() || p.len() > MAX_SYMBOLS {
        return Err(invalid("p", format!("symbol count must lie in 1..={MAX_SYMBOLS}")));
    }
    if !(beta >= 0.0) {
        return Err(invalid("beta", "must be >= 0"));
    }
    Ok(())
}

/// Block tree: maximum over orders of the Gaussian GREM whose level `i`
/// weight is `weight(prefix)`, `prefix` being the first `i` symbols of
/// the order.
pub fn block_tree_energy_with<W>(p: &[f64], weight: W, beta: f64) -> Result<f64>
where
    W: Fn(&[usize]) -> f64 + Sync,
{
    check_block(p, beta)?;
    let n = p.len();
    let vals = permutations(n)
        .into_par_iter()
        .map(|perm| {
            let a = (1..=n).map(|i| weight(&perm[..i])).collect();
            let pp = perm.iter().map(|&i| p[i]).collect();
            grem_energy(&GremSpec::uniform(pp, a, 2.0)?, beta)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Block tree with one weight per symbol.
pub fn block_tree_energy(p: &[f64], a: &[f64], beta: f64) -> Result<f64> {
    if a.len() != p.len() {
        return Err(invalid("a", format!("expected {} weights", p.len())));
    }
    block_tree_energy_with(p, |prefix| a[*prefix.last().unwrap()], beta)
}
