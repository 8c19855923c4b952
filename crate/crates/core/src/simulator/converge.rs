//! Finite-N results joined with the limiting free energy.

use serde::{Deserialize, Serialize};

use super::engine::{simulate, SimConfig};
use super::tree::TreeKind;
use crate::error::Result;
use crate::model::ModelSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergeRow {
    pub n: usize,
    pub beta: f64,
    pub mean: f64,
    pub std: f64,
    pub analytic: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergeTable {
    pub rows: Vec<ConvergeRow>,
    /// `(N, median error over the beta grid)`.
    pub median_error: Vec<(usize, f64)>,
    /// Whether the median errors are nonincreasing in N (reported only).
    pub decreasing: bool,
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn converge(
    model: &ModelSpec,
    ns: &[usize],
    betas: &[f64],
    replicas: usize,
    seed: u64,
    tree: TreeKind,
) -> Result<ConvergeTable> {
    let analytic = betas.iter().map(|&b| model.analytic_energy(b)).collect::<Result<Vec<f64>>>()?;
    let mut rows = Vec::new();
    let mut median_error = Vec::new();
    for &n in ns {
        let cfg = SimConfig::new(n, betas.to_vec(), replicas, seed).with_tree(tree);
        let res = simulate(model, &cfg)?;
        let (mean, std) = (res.mean(), res.std());
        let errs: Vec<f64> = (0..betas.len()).map(|j| (mean[j] - analytic[j]).abs()).collect();
        for j in 0..betas.len() {
            rows.push(ConvergeRow { n, beta: betas[j], mean: mean[j], std: std[j], analytic: analytic[j], error: errs[j] });
        }
        median_error.push((n, median(&errs)));
    }
    let decreasing = median_error.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(ConvergeTable { rows, median_error, decreasing })
}
