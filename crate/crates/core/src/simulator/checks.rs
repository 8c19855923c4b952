//! Monte Carlo check of the two moment bounds for independent Poisson
//! pairs used in the per-node Poisson tree analysis.

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::rng::{StreamKey, TAG_CHECK};
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub mean: f64,
    pub std_err: f64,
    pub bound: f64,
}

impl MomentCheck {
    /// Mean does not exceed the bound by more than `sigmas` standard errors.
    pub fn holds(&self, sigmas: f64) -> bool {
        self.mean <= self.bound + sigmas * self.std_err
    }
}

fn summarize(xs: &[f64], bound: f64) -> MomentCheck {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    MomentCheck { mean, std_err: (var / n).sqrt(), bound }
}

/// For `X ~ P(a lambda)`, `Y ~ P(b lambda)` independent, estimates
/// `E[((X+a)/(X+Y+a+b))^2]` against `2 (a/(a+b))^2` and
/// `E[(X+a)/(X+Y+a+b)^2]` against `a / ((a+b)^2 lambda)`.
pub fn poisson_ratio_checks(a: f64, b: f64, lambda: f64, draws: usize, seed: u64) -> Result<(MomentCheck, MomentCheck)> {
    if !(a >= 1.0 && b >= 1.0 && lambda > 0.0) {
        return Err(invalid("a", "need a >= 1, b >= 1 and lambda > 0"));
    }
    if draws < 2 {
        return Err(invalid("draws", "need at least 2 draws"));
    }
    let px = Poisson::new(a * lambda).map_err(|e| invalid("lambda", e.to_string()))?;
    let py = Poisson::new(b * lambda).map_err(|e| invalid("lambda", e.to_string()))?;
    let mut rng = StreamKey::new(seed, 0, TAG_CHECK).rng(lambda.to_bits());
    let mut first = Vec::with_capacity(draws);
    let mut second = Vec::with_capacity(draws);
    for _ in 0..draws {
        let x: f64 = px.sample(&mut rng);
        let y: f64 = py.sample(&mut rng);
        let d = x + y + a + b;
        first.push(((x + a) / d).powi(2));
        second.push((x + a) / (d * d));
    }
    let r = a / (a + b);
    Ok((summarize(&first, 2.0 * r * r), summarize(&second, a / ((a + b).powi(2) * lambda))))
}
