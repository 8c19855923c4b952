//! Level partitions and the random tree variants.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::Poisson;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{StreamKey, CHUNK, TAG_DIE, TAG_TREE};
use crate::error::{invalid, Error, Result};

const TIE: f64 = 1e-12;

/// Per-replica node cap for trees with independent per-node furcations.
pub const NODE_CAP: u64 = 1 << 27;
const MAX_ATTEMPTS: u64 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TreeKind {
    #[default]
    Fixed,
    RegularPoisson,
    Poisson,
    Multinomial1,
    Multinomial2,
}

impl TreeKind {
    pub fn is_random(self) -> bool {
        self != TreeKind::Fixed
    }

    /// Every furcation count is a power of two, so configurations are bit strings.
    pub fn has_bit_layout(self) -> bool {
        matches!(self, TreeKind::Fixed | TreeKind::Multinomial1 | TreeKind::Multinomial2)
    }
}

/// Largest-remainder apportionment of `n` particles over the levels, with at
/// least one particle per level.
pub fn partition(n: usize, p: &[f64]) -> Result<Vec<u32>> {
    if p.is_empty() || p.iter().any(|&x| !(x > 0.0)) {
        return Err(invalid("p", "proportions must be > 0"));
    }
    if n < p.len() {
        return Err(invalid("N", format!("need at least {} particles for {} levels", p.len(), p.len())));
    }
    let total: f64 = p.iter().sum();
    let quota: Vec<f64> = p.iter().map(|x| n as f64 * x / total).collect();
    let mut k: Vec<i64> = quota.iter().map(|q| (q.floor() as i64).max(1)).collect();
    let rem = |k: &[i64], i: usize| quota[i] - k[i] as f64;
    let pick = |k: &[i64], ok: &dyn Fn(usize) -> bool, larger: bool| {
        let mut best: Option<usize> = None;
        for i in (0..k.len()).filter(|&i| ok(i)) {
            best = match best {
                None => Some(i),
                Some(b) => {
                    let (ri, rb) = (rem(k, i), rem(k, b));
                    let better = if larger { ri > rb + TIE } else { ri < rb - TIE };
                    Some(if better { i } else { b })
                }
            };
        }
        best
    };
    loop {
        let s: i64 = k.iter().sum();
        if s < n as i64 {
            let i = pick(&k, &|_| true, true).unwrap();
            k[i] += 1;
        } else if s > n as i64 {
            let kk = k.clone();
            let i = pick(&k, &|i| kk[i] > 1, false).unwrap();
            k[i] -= 1;
        } else {
            break;
        }
    }
    Ok(k.into_iter().map(|x| x as u32).collect())
}

/// Counts of each face in the first `n` throws of a die with face
/// probabilities `p`.
pub fn die_counts(n: usize, p: &[f64], key: StreamKey) -> Result<Vec<u32>> {
    let die = WeightedIndex::new(p).map_err(|e| invalid("p", e.to_string()))?;
    let mut rng = key.rng(0);
    let mut k = vec![0u32; p.len()];
    for _ in 0..n {
        k[die.sample(&mut rng)] += 1;
    }
    Ok(k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeStats {
    /// Nodes per level.
    pub level_counts: Vec<u64>,
    /// Sum over the nodes of a level of their squared leaf counts.
    pub leaf_sq: Vec<f64>,
    pub leaves: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tree {
    /// Every node of level `i - 1` has `fanout[i]` children.
    Regular { fanout: Vec<u64> },
    /// `parents[i][j]` is the parent (in level `i - 1`) of node `j` of level `i`.
    Irregular { parents: Vec<Vec<u32>> },
}

impl Tree {
    pub fn fixed(k: &[u32]) -> Tree {
        Tree::Regular { fanout: k.iter().map(|&x| 1u64 << x).collect() }
    }

    pub fn levels(&self) -> usize {
        match self {
            Tree::Regular { fanout } => fanout.len(),
            Tree::Irregular { parents } => parents.len(),
        }
    }

    pub fn leaves(&self) -> u64 {
        self.level_counts().last().copied().unwrap_or(1)
    }

    pub fn level_counts(&self) -> Vec<u64> {
        match self {
            Tree::Regular { fanout } => fanout
                .iter()
                .scan(1u64, |acc, f| {
                    *acc = acc.saturating_mul(*f);
                    Some(*acc)
                })
                .collect(),
            Tree::Irregular { parents } => parents.iter().map(|v| v.len() as u64).collect(),
        }
    }

    pub fn stats(&self) -> TreeStats {
        let counts = self.level_counts();
        let leaves = *counts.last().unwrap();
        let leaf_sq = match self {
            Tree::Regular { fanout } => (0..fanout.len())
                .map(|i| {
                    let below: f64 = fanout[i + 1..].iter().map(|&f| f as f64).product();
                    counts[i] as f64 * below * below
                })
                .collect(),
            Tree::Irregular { parents } => {
                let n = parents.len();
                let mut sq = vec![0.0; n];
                let mut below: Vec<f64> = vec![1.0; parents[n - 1].len()];
                for i in (0..n).rev() {
                    sq[i] = below.iter().map(|e| e * e).sum();
                    if i > 0 {
                        let mut up = vec![0.0; parents[i - 1].len()];
                        for (j, &par) in parents[i].iter().enumerate() {
                            up[par as usize] += below[j];
                        }
                        below = up;
                    }
                }
                sq
            }
        };
        TreeStats { level_counts: counts, leaf_sq, leaves }
    }
}

/// One realization of the tree together with the particle split behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeDraw {
    pub k: Vec<u32>,
    pub tree: Tree,
}

fn poisson_draw(mean: f64, rng: &mut impl rand::Rng) -> u64 {
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// Builds one tree for particle number `n`. `key` carries seed and replica.
pub fn build_tree(kind: TreeKind, p: &[f64], n: usize, key: StreamKey) -> Result<TreeDraw> {
    match kind {
        TreeKind::Fixed => {
            let k = partition(n, p)?;
            Ok(TreeDraw { tree: Tree::fixed(&k), k })
        }
        TreeKind::Multinomial1 => {
            // the throw sequence is shared by every particle number
            let k = die_counts(n, p, key.with_tag(TAG_DIE))?;
            Ok(TreeDraw { tree: Tree::fixed(&k), k })
        }
        TreeKind::Multinomial2 => {
            let k = die_counts(n, p, key.with_tag(TAG_DIE + 1 + ((n as u64) << 8)))?;
            Ok(TreeDraw { tree: Tree::fixed(&k), k })
        }
        TreeKind::RegularPoisson => {
            let k = partition(n, p)?;
            let mut rng = key.with_tag(TAG_TREE).rng(n as u64);
            let fanout = k.iter().map(|&ki| 1 + poisson_draw((ki as f64).exp2(), &mut rng)).collect();
            Ok(TreeDraw { k, tree: Tree::Regular { fanout } })
        }
        TreeKind::Poisson => {
            let k = partition(n, p)?;
            for attempt in 0..MAX_ATTEMPTS {
                let tag = TAG_TREE + 1 + (attempt << 8) + ((n as u64) << 16);
                if let Some(parents) = per_node_tree(&k, key.with_tag(tag)) {
                    return Ok(TreeDraw { k, tree: Tree::Irregular { parents } });
                }
                log::warn!("poisson tree exceeded {NODE_CAP} nodes (attempt {attempt}); redrawing");
            }
            Err(Error::Budget { required: NODE_CAP as u128 + 1, limit: NODE_CAP as u128 })
        }
    }
}

fn per_node_tree(k: &[u32], key: StreamKey) -> Option<Vec<Vec<u32>>> {
    let mut parents: Vec<Vec<u32>> = Vec::with_capacity(k.len());
    let mut width = 1u64;
    let mut total = 0u64;
    for (i, &ki) in k.iter().enumerate() {
        let mean = (ki as f64).exp2();
        let chunks = width.div_ceil(CHUNK);
        let counts: Vec<u64> = (0..chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = key.rng(((i as u64) << 40) | c);
                let len = (width - c * CHUNK).min(CHUNK);
                (0..len).map(move |_| 1 + poisson_draw(mean, &mut rng)).collect::<Vec<_>>()
            })
            .collect();
        let next: u64 = counts.iter().sum();
        total += next;
        if total > NODE_CAP {
            return None;
        }
        let mut level = Vec::with_capacity(next as usize);
        for (par, &c) in counts.iter().enumerate() {
            level.extend(std::iter::repeat_n(par as u32, c as usize));
        }
        parents.push(level);
        width = next;
    }
    Some(parents)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_examples() {
        assert_eq!(partition(10, &[0.5, 0.5]).unwrap(), vec![5, 5]);
        let t = 1.0 / 3.0;
        assert_eq!(partition(10, &[t, t, t]).unwrap(), vec![4, 3, 3]);
        assert_eq!(partition(5, &[0.9, 0.1]).unwrap(), vec![4, 1]);
        assert_eq!(partition(3, &[0.98, 0.01, 0.01]).unwrap(), vec![1, 1, 1]);
        assert!(partition(1, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn fixed_stats() {
        let s = Tree::fixed(&[2, 3]).stats();
        assert_eq!(s.level_counts, vec![4, 32]);
        assert_eq!(s.leaf_sq, vec![256.0, 32.0]);
        assert_eq!(s.leaves, 32);
    }

    #[test]
    fn irregular_stats_are_consistent() {
        let d = build_tree(TreeKind::Poisson, &[0.5, 0.5], 8, StreamKey::new(3, 0, 0)).unwrap();
        let s = d.tree.stats();
        assert_eq!(s.leaf_sq[1], s.leaves as f64);
        assert_eq!(*s.level_counts.last().unwrap(), s.leaves);
    }

    #[test]
    fn multinomial_first_kind_is_nested() {
        let key = StreamKey::new(5, 1, 0);
        let a = build_tree(TreeKind::Multinomial1, &[0.3, 0.7], 20, key).unwrap().k;
        let b = build_tree(TreeKind::Multinomial1, &[0.3, 0.7], 21, key).unwrap().k;
        assert_eq!(a.iter().sum::<u32>(), 20);
        assert!(a.iter().zip(&b).all(|(x, y)| y >= x));
    }
}
