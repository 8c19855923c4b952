//! Streaming evaluation of `(1/N) log Z_N` by exhaustive enumeration or by
//! uniform configuration sampling.

use itertools::Itertools;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{Source, StreamKey, CHUNK, TAG_BLOCK, TAG_LEVEL, TAG_SAMPLE, TAG_SUBSET, TAG_WORD};
use super::tree::{build_tree, Tree, TreeDraw, TreeKind, TreeStats};
use crate::analytic_grem::GremSpec;
use crate::error::{invalid, Error, Result};
use crate::model::ModelSpec;
use crate::numeric::LN2;
use crate::rates::{DrivingDistribution, RateFunction};

/// Largest number of configurations enumerated per replica.
pub const ENUMERATION_CAP: u64 = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    Enumeration,
    Sampling { samples: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub betas: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    #[serde(default)]
    pub tree: TreeKind,
    /// Uniformly sampled configurations per replica instead of enumeration.
    #[serde(default)]
    pub samples: Option<u64>,
}

impl SimConfig {
    pub fn new(n: usize, betas: Vec<f64>, replicas: usize, seed: u64) -> Self {
        SimConfig { n, betas, replicas, seed, tree: TreeKind::Fixed, samples: None }
    }

    pub fn with_tree(mut self, tree: TreeKind) -> Self {
        self.tree = tree;
        self
    }

    pub fn with_samples(mut self, samples: u64) -> Self {
        self.samples = Some(samples);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub model: String,
    pub n: usize,
    pub seed: u64,
    pub replicas: usize,
    pub tree: TreeKind,
    pub mode: SimMode,
    pub betas: Vec<f64>,
    /// `values[replica][beta]` is `(1/N) log Z_N`.
    pub values: Vec<Vec<f64>>,
    pub tree_stats: Vec<TreeStats>,
}

impl SimResult {
    pub fn mean(&self) -> Vec<f64> {
        (0..self.betas.len())
            .map(|b| self.values.iter().map(|r| r[b]).sum::<f64>() / self.values.len() as f64)
            .collect()
    }

    /// Sample standard deviation across replicas (0 for a single replica).
    pub fn std(&self) -> Vec<f64> {
        let m = self.mean();
        let r = self.values.len();
        (0..self.betas.len())
            .map(|b| {
                if r < 2 {
                    return 0.0;
                }
                let ss: f64 = self.values.iter().map(|v| (v[b] - m[b]).powi(2)).sum();
                (ss / (r - 1) as f64).sqrt()
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
enum Index {
    Leaf,
    Div(u64),
    /// `(lowest bit, width)` runs, most significant first.
    Bits(Vec<(u32, u32)>),
}

impl Index {
    fn of(&self, leaf: u64) -> u64 {
        match self {
            Index::Leaf => leaf,
            Index::Div(d) => leaf / d,
            Index::Bits(runs) => runs
                .iter()
                .fold(0u64, |acc, &(lo, w)| (acc << w) | ((leaf >> lo) & ((1u64 << w) - 1))),
        }
    }
}

#[derive(Clone, Debug)]
struct Component {
    weight: f64,
    index: Index,
    size: u64,
    source: Source,
    key: StreamKey,
}

/// A configuration space with an additive energy.
struct Space {
    leaves: u64,
    comps: Vec<Component>,
    /// `h` in `h * sum_i sigma_i`, with the particle number.
    field: Option<(f64, u32)>,
}

struct BitLayout {
    n: u32,
    // (lowest bit, width) of each block
    blocks: Vec<(u32, u32)>,
}

impl BitLayout {
    fn new(k: &[u32]) -> Self {
        let n: u32 = k.iter().sum();
        let mut used = 0;
        let blocks = k
            .iter()
            .map(|&ki| {
                used += ki;
                (n - used, ki)
            })
            .collect();
        BitLayout { n, blocks }
    }

    fn index(&self, mask: u32) -> (Index, u64) {
        let runs: Vec<(u32, u32)> = self
            .blocks
            .iter()
            .enumerate()
            .filter(|(i, b)| mask >> i & 1 == 1 && b.1 > 0)
            .map(|(_, &b)| b)
            .collect();
        let bits: u32 = runs.iter().map(|r| r.1).sum();
        if bits == self.n {
            (Index::Leaf, 1u64 << self.n)
        } else {
            (Index::Bits(runs), 1u64 << bits)
        }
    }
}

fn gaussian(n: usize) -> Result<Source> {
    Ok(Source::plain(DrivingDistribution::new(RateFunction::Gaussian, n as u32)?))
}

fn power_rate(gamma: f64) -> RateFunction {
    if gamma == 2.0 {
        RateFunction::Gaussian
    } else if gamma == 1.0 {
        RateFunction::TwoSidedExponential
    } else {
        RateFunction::PowerGamma { gamma }
    }
}

fn prefix_code(prefix: &[usize], n: usize) -> u64 {
    prefix.iter().fold(0u64, |acc, &s| acc * (n as u64 + 1) + s as u64 + 1)
}

fn grem_space(grem: &GremSpec, tree: &Tree, n: usize, key: StreamKey) -> Result<Space> {
    let Tree::Regular { fanout } = tree else { unreachable!("irregular trees use the level sweep") };
    let counts = tree.level_counts();
    let leaves = *counts.last().unwrap();
    let mut comps = Vec::new();
    for i in 0..grem.n() {
        if grem.a[i] == 0.0 {
            continue;
        }
        let below: u64 = fanout[i + 1..].iter().product();
        let index = if i + 1 == grem.n() { Index::Leaf } else { Index::Div(below) };
        comps.push(Component {
            weight: grem.a[i],
            index,
            size: counts[i],
            source: Source::plain(DrivingDistribution::new(grem.rate(i), n as u32)?),
            key: key.with_tag(TAG_LEVEL + i as u64),
        });
    }
    Ok(Space { leaves, comps, field: None })
}

/// Configuration spaces whose energies are summed into one partition function.
fn spaces(model: &ModelSpec, draw: &TreeDraw, n: usize, key: StreamKey) -> Result<Vec<Space>> {
    let bits = || BitLayout::new(&draw.k);
    let full = |comps, field| Space { leaves: 1u64 << n, comps, field };
    Ok(match model {
        ModelSpec::Rem { rem } => {
            let (rate, objective) = rem
                .rate_and_objective()
                .ok_or_else(|| Error::Unsupported("this model has no driving law to sample".into()))?;
            let source = Source { dist: DrivingDistribution::new(rate, n as u32)?, objective };
            let leaves = draw.tree.leaves();
            let comp = Component { weight: 1.0, index: Index::Leaf, size: leaves, source, key: key.with_tag(TAG_LEVEL) };
            vec![Space { leaves, comps: vec![comp], field: None }]
        }
        ModelSpec::RemField { a, h } => {
            let comp = Component {
                weight: *a,
                index: Index::Leaf,
                size: 1 << n,
                source: gaussian(n)?,
                key: key.with_tag(TAG_LEVEL),
            };
            vec![full(vec![comp], Some((*h, n as u32)))]
        }
        ModelSpec::Grem { grem } => vec![grem_space(grem, &draw.tree, n, key)?],
        ModelSpec::Bk { bk } => {
            let layout = bits();
            let source = Source::plain(DrivingDistribution::new(power_rate(bk.gamma), n as u32)?);
            let comps = bk
                .weights
                .iter()
                .filter(|(_, &a)| a > 0.0)
                .map(|(&mask, &a)| {
                    let (index, size) = layout.index(mask);
                    Component { weight: a, index, size, source: source.clone(), key: key.with_tag(TAG_SUBSET + mask as u64) }
                })
                .collect();
            vec![full(comps, None)]
        }
        ModelSpec::Word { word } => {
            let layout = bits();
            let source = gaussian(n)?;
            let comps = word
                .words
                .iter()
                .enumerate()
                .filter(|(_, w)| w.a > 0.0)
                .map(|(j, w)| {
                    let (index, size) = layout.index(w.mask());
                    Component { weight: w.a, index, size, source: source.clone(), key: key.with_tag(TAG_WORD + j as u64) }
                })
                .collect();
            let field = (word.h != 0.0).then_some((word.h, n as u32));
            vec![full(comps, field)]
        }
        ModelSpec::BlockTree { p, a } => {
            let layout = bits();
            let source = gaussian(n)?;
            let m = p.len();
            (0..m)
                .permutations(m)
                .map(|perm| {
                    let comps = (1..=m)
                        .filter(|&i| a[perm[i - 1]] > 0.0)
                        .map(|i| {
                            let mask = perm[..i].iter().fold(0u32, |acc, &s| acc | 1 << s);
                            let (index, size) = layout.index(mask);
                            Component {
                                weight: a[perm[i - 1]],
                                index,
                                size,
                                source: source.clone(),
                                key: key.with_tag(TAG_BLOCK + prefix_code(&perm[..i], m)),
                            }
                        })
                        .collect();
                    full(comps, None)
                })
                .collect()
        }
    })
}

fn field_term(field: Option<(f64, u32)>, leaf: u64) -> f64 {
    match field {
        Some((h, n)) => h * (2.0 * leaf.count_ones() as f64 - n as f64),
        None => 0.0,
    }
}

/// `(max, scaled sum)` of `exp(-beta H)` over a block of energies, per beta.
fn block_stats(energies: &[f64], betas: &[f64]) -> Vec<(f64, f64)> {
    let hmin = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    betas
        .iter()
        .map(|&b| {
            if b == 0.0 {
                return (0.0, energies.len() as f64);
            }
            let s: f64 = energies.iter().map(|&e| (-b * (e - hmin)).exp()).sum();
            (-b * hmin, s)
        })
        .collect()
}

fn merge_stats(blocks: &[Vec<(f64, f64)>], nb: usize) -> Vec<f64> {
    (0..nb)
        .map(|j| {
            let m = blocks.iter().map(|b| b[j].0).fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = blocks.iter().map(|b| b[j].1 * (b[j].0 - m).exp()).sum();
            m + s.ln()
        })
        .collect()
}

fn enumerate_space(space: &Space, betas: &[f64]) -> Vec<Vec<(f64, f64)>> {
    let tables: Vec<Option<Vec<f64>>> = space
        .comps
        .iter()
        .map(|c| match c.index {
            Index::Leaf => None,
            _ => Some(c.source.table(c.key, c.size)),
        })
        .collect();
    let chunks = space.leaves.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let len = (space.leaves - start).min(CHUNK) as usize;
            let mut e: Vec<f64> = (0..len as u64).map(|j| field_term(space.field, start + j)).collect();
            for (comp, table) in space.comps.iter().zip(&tables) {
                match table {
                    None => {
                        for (x, v) in e.iter_mut().zip(comp.source.chunk(comp.key, c, len)) {
                            *x += comp.weight * v;
                        }
                    }
                    Some(t) => {
                        for (j, x) in e.iter_mut().enumerate() {
                            *x += comp.weight * t[comp.index.of(start + j as u64) as usize];
                        }
                    }
                }
            }
            block_stats(&e, betas)
        })
        .collect()
}

fn sample_spaces(spaces: &[Space], n: usize, samples: u64, betas: &[f64], key: StreamKey) -> Vec<Vec<(f64, f64)>> {
    let chunks = samples.div_ceil(CHUNK);
    let sampler = key.with_tag(TAG_SAMPLE);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = sampler.rng(c);
            let len = (samples - c * CHUNK).min(CHUNK) as usize;
            let e: Vec<f64> = (0..len)
                .map(|_| {
                    let s = &spaces[rng.random_range(0..spaces.len())];
                    let leaf = rng.random::<u64>() >> (64 - n);
                    let mut h = field_term(s.field, leaf);
                    for comp in &s.comps {
                        h += comp.weight * comp.source.node(comp.key, comp.index.of(leaf));
                    }
                    h
                })
                .collect();
            block_stats(&e, betas)
        })
        .collect()
}

/// Level-by-level energy sweep for trees without a regular layout.
fn sweep_irregular(grem: &GremSpec, parents: &[Vec<u32>], n: usize, betas: &[f64], key: StreamKey) -> Result<Vec<Vec<(f64, f64)>>> {
    let mut acc: Vec<f64> = vec![0.0];
    for (i, par) in parents.iter().enumerate() {
        let source = Source::plain(DrivingDistribution::new(grem.rate(i), n as u32)?);
        let vals = source.table(key.with_tag(TAG_LEVEL + i as u64), par.len() as u64);
        let a = grem.a[i];
        acc = par.par_iter().zip(vals.par_iter()).map(|(&p, v)| acc[p as usize] + a * v).collect();
    }
    Ok(acc.par_chunks(CHUNK as usize).map(|e| block_stats(e, betas)).collect())
}

fn check_config(model: &ModelSpec, cfg: &SimConfig) -> Result<()> {
    model.validate()?;
    if cfg.n == 0 || cfg.n > 62 {
        return Err(invalid("N", "particle number must lie in 1..=62"));
    }
    if cfg.replicas == 0 {
        return Err(invalid("replicas", "must be >= 1"));
    }
    if cfg.betas.is_empty() || cfg.betas.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
        return Err(invalid("beta", "need at least one finite beta >= 0"));
    }
    if let Some(0) = cfg.samples {
        return Err(invalid("samples", "must be >= 1"));
    }
    let bit_model = !matches!(model, ModelSpec::Rem { .. } | ModelSpec::Grem { .. });
    if bit_model && !cfg.tree.has_bit_layout() {
        return Err(Error::Unsupported(format!("{} runs on bit-string configuration spaces only", model.label())));
    }
    if let (ModelSpec::Rem { .. } | ModelSpec::Grem { .. }, Some(_)) = (model, cfg.samples) {
        if cfg.tree.is_random() && !cfg.tree.has_bit_layout() {
            return Err(Error::Unsupported("sampling mode needs a bit-string configuration space".into()));
        }
    }
    Ok(())
}

fn replica(model: &ModelSpec, cfg: &SimConfig, r: usize) -> Result<(Vec<f64>, TreeStats)> {
    let n = cfg.n;
    let key = StreamKey::new(cfg.seed, r as u64, 0);
    let draw = build_tree(cfg.tree, &model.proportions(), n, key)?;
    let stats = draw.tree.stats();
    let perms: u64 = match model {
        ModelSpec::BlockTree { p, .. } => (1..=p.len() as u64).product(),
        _ => 1,
    };
    let total = stats.leaves as u128 * perms as u128;
    let nf = n as f64;
    let at_zero = if total == 1u128 << n { LN2 } else { (total as f64).ln() / nf };
    let logz: Vec<f64> = match (model, &draw.tree, cfg.samples) {
        (ModelSpec::Grem { grem }, Tree::Irregular { parents }, _) => {
            if total > ENUMERATION_CAP as u128 {
                return Err(Error::Budget { required: total, limit: ENUMERATION_CAP as u128 });
            }
            merge_stats(&sweep_irregular(grem, parents, n, &cfg.betas, key)?, cfg.betas.len())
        }
        (_, _, None) => {
            if total > ENUMERATION_CAP as u128 {
                return Err(Error::Budget { required: total, limit: ENUMERATION_CAP as u128 });
            }
            let sp = spaces(model, &draw, n, key)?;
            let blocks: Vec<Vec<(f64, f64)>> = sp.iter().flat_map(|s| enumerate_space(s, &cfg.betas)).collect();
            merge_stats(&blocks, cfg.betas.len())
        }
        (_, _, Some(m)) => {
            let sp = spaces(model, &draw, n, key)?;
            let shift = (total as f64).ln() - (m as f64).ln();
            merge_stats(&sample_spaces(&sp, n, m, &cfg.betas, key), cfg.betas.len())
                .into_iter()
                .map(|v| v + shift)
                .collect()
        }
    };
    let values = cfg
        .betas
        .iter()
        .zip(logz)
        .map(|(&b, lz)| if b == 0.0 { at_zero } else { lz / nf })
        .collect();
    Ok((values, stats))
}

/// Runs `cfg.replicas` independent realizations of the model at particle
/// number `cfg.n`. Results depend only on the model, the configuration and
/// the seed.
pub fn simulate(model: &ModelSpec, cfg: &SimConfig) -> Result<SimResult> {
    check_config(model, cfg)?;
    let runs = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| replica(model, cfg, r))
        .collect::<Result<Vec<_>>>()?;
    let (values, tree_stats) = runs.into_iter().unzip();
    Ok(SimResult {
        model: model.label(),
        n: cfg.n,
        seed: cfg.seed,
        replicas: cfg.replicas,
        tree: cfg.tree,
        mode: match cfg.samples {
            Some(samples) => SimMode::Sampling { samples },
            None => SimMode::Enumeration,
        },
        betas: cfg.betas.clone(),
        values,
        tree_stats,
    })
}

/// All configuration energies of one replica, in enumeration order (test aid
/// for small systems).
pub fn energies(model: &ModelSpec, n: usize, seed: u64, replica: usize, tree: TreeKind) -> Result<Vec<f64>> {
    let cfg = SimConfig::new(n, vec![1.0], 1, seed).with_tree(tree);
    check_config(model, &cfg)?;
    let key = StreamKey::new(seed, replica as u64, 0);
    let draw = build_tree(tree, &model.proportions(), n, key)?;
    if let (ModelSpec::Grem { grem }, Tree::Irregular { parents }) = (model, &draw.tree) {
        let mut acc = vec![0.0];
        for (i, par) in parents.iter().enumerate() {
            let source = Source::plain(DrivingDistribution::new(grem.rate(i), n as u32)?);
            let vals = source.table(key.with_tag(TAG_LEVEL + i as u64), par.len() as u64);
            acc = par.iter().zip(&vals).map(|(&p, v)| acc[p as usize] + grem.a[i] * v).collect();
        }
        return Ok(acc);
    }
    let mut out = Vec::new();
    for s in spaces(model, &draw, n, key)? {
        if s.leaves > 1 << 22 {
            return Err(Error::Budget { required: s.leaves as u128, limit: 1 << 22 });
        }
        let tables: Vec<Vec<f64>> = s.comps.iter().map(|c| c.source.table(c.key, c.size)).collect();
        for leaf in 0..s.leaves {
            let mut h = field_term(s.field, leaf);
            for (c, t) in s.comps.iter().zip(&tables) {
                h += c.weight * t[c.index.of(leaf) as usize];
            }
            out.push(h);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_index_extracts_blocks() {
        let l = BitLayout::new(&[2, 3, 1]);
        assert_eq!(l.blocks, vec![(4, 2), (1, 3), (0, 1)]);
        let (idx, size) = l.index(0b101);
        assert_eq!(size, 8);
        assert_eq!(idx.of(0b10_011_1), 0b10_1);
        assert!(matches!(l.index(0b111).0, Index::Leaf));
    }

    #[test]
    fn merge_matches_direct_sum() {
        let e: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 10.0).collect();
        let betas = [0.5, 3.0];
        let parts: Vec<_> = e.chunks(7).map(|c| block_stats(c, &betas)).collect();
        let got = merge_stats(&parts, 2);
        for (j, b) in betas.iter().enumerate() {
            let direct = e.iter().map(|x| (-b * x).exp()).sum::<f64>().ln();
            assert!((got[j] - direct).abs() < 1e-12);
        }
    }
}
