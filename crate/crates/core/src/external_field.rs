//! Models with an external field `h * sum_i sigma_i`: the magnetization
//! rate, the Gaussian REM with field, and the Gaussian word GREM with field.

use serde::{Deserialize, Serialize};

use crate::analytic_rem::rem_gaussian;
use crate::error::{invalid, Result};
use crate::numeric::{bisect, ln_cosh, scan_min, LN2};

fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Rate of the mean spin: `y atanh(y) - log cosh(atanh(y))`.
pub fn binary_entropy_rate(y: f64) -> f64 {
    if !(y.abs() <= 1.0) {
        return f64::INFINITY;
    }
    0.5 * (xlnx(1.0 + y) + xlnx(1.0 - y))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    pub a: f64,
    pub h: f64,
}

impl FieldParams {
    pub fn new(a: f64, h: f64) -> Result<Self> {
        let fp = FieldParams { a, h };
        fp.validate()?;
        Ok(fp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(invalid("a", "must be a finite number > 0"));
        }
        if !(self.h >= 0.0) || !self.h.is_finite() {
            return Err(invalid("h", "must be a finite number >= 0"));
        }
        Ok(())
    }
}

/// Solution of the single-level field model at one temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSolution {
    pub energy: f64,
    /// Magnetization of the frozen state.
    pub y0: f64,
    /// Magnetization edge of the high-temperature phase, when it exists.
    pub c_beta: Option<f64>,
    pub x0: f64,
    pub high_temperature: bool,
}

/// Frozen-state magnetization: root of `a atanh(y) = h sqrt(2 (log 2 - I0(y)))`.
pub fn frozen_magnetization(fp: FieldParams) -> f64 {
    if fp.h == 0.0 {
        return 0.0;
    }
    let g = |y: f64| fp.a * y.atanh() - fp.h * (2.0 * (LN2 - binary_entropy_rate(y))).max(0.0).sqrt();
    bisect(g, 0.0, 1.0 - 1e-12, 0.0)
}

/// `c` in `[0, 1]` with `I0(c) = log 2 - (beta a)^2 / 2`.
pub fn magnetization_edge(a: f64, beta: f64) -> Option<f64> {
    let level = LN2 - 0.5 * (beta * a).powi(2);
    if level < 0.0 {
        return None;
    }
    Some(bisect(|c| binary_entropy_rate(c) - level, 0.0, 1.0, 1e-14))
}

pub fn rem_field_solution(fp: FieldParams, beta: f64) -> Result<FieldSolution> {
    fp.validate()?;
    if !(beta >= 0.0) {
        return Err(invalid("beta", "must be >= 0"));
    }
    let crit = (2.0 * LN2).sqrt() / fp.a;
    let c_beta = if beta <= crit { magnetization_edge(fp.a, beta) } else { None };
    if fp.h == 0.0 {
        return Ok(FieldSolution {
            energy: rem_gaussian(fp.a * beta),
            y0: 0.0,
            c_beta,
            x0: (2.0 * LN2).sqrt(),
            high_temperature: beta <= crit,
        });
    }
    let y0 = frozen_magnetization(fp);
    // equals a atanh(y0) / h at the root, without the cancellation for small h
    let x0 = (2.0 * (LN2 - binary_entropy_rate(y0))).max(0.0).sqrt();
    let high = matches!(c_beta, Some(c) if y0 <= c);
    let energy = if high {
        LN2 + 0.5 * (beta * fp.a).powi(2) + ln_cosh(beta * fp.h)
    } else {
        beta * (fp.a * x0 + fp.h * y0)
    };
    Ok(FieldSolution { energy, y0, c_beta, x0, high_temperature: high })
}

/// Gaussian REM with external field.
pub fn rem_field_energy(fp: FieldParams, beta: f64) -> Result<f64> {
    Ok(rem_field_solution(fp, beta)?.energy)
}

/// Direct maximization of `beta (a x + h y) - x^2/2 - I0(y)` over the set
/// `x^2/2 + I0(y) <= log 2`, plus `log 2`.
pub fn field_variational(fp: FieldParams, beta: f64) -> Result<f64> {
    fp.validate()?;
    let cost = |y: f64| {
        let room = (2.0 * (LN2 - binary_entropy_rate(y))).max(0.0).sqrt();
        let x = (beta * fp.a).min(room);
        0.5 * x * x + binary_entropy_rate(y) - beta * (fp.a * x + fp.h * y)
    };
    let (_, v) = scan_min(cost, 0.0, 1.0, 400, 3);
    Ok(LN2 - v.min(cost(0.0)).min(cost(1.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Word {
    /// Symbols, 1-based; repetitions allowed.
    pub sym: Vec<usize>,
    pub a: f64,
}

impl Word {
    pub fn mask(&self) -> u32 {
        self.sym.iter().fold(0, |m, &s| m | 1 << (s - 1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordSpec {
    pub n: usize,
    pub words: Vec<Word>,
    pub p: Vec<f64>,
    #[serde(default)]
    pub h: f64,
}

pub const WORD_ORACLE_SYMBOLS: usize = 3;
pub const WORD_ORACLE_WORDS: usize = 7;

impl WordSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > 16 {
            return Err(invalid("n", "symbol count must lie in 1..=16"));
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
        if self.words.is_empty() {
            return Err(invalid("words", "at least one word is required"));
        }
        let mut cover = 0u32;
        for w in &self.words {
            if w.sym.is_empty() || w.sym.iter().any(|&s| s == 0 || s > self.n) {
                return Err(invalid("words", format!("word symbols must lie in 1..={}", self.n)));
            }
            if !(w.a >= 0.0) || !w.a.is_finite() {
                return Err(invalid("words", "word weights must be finite and >= 0"));
            }
            cover |= w.mask();
        }
        if cover != (1u32 << self.n) - 1 {
            return Err(invalid("words", "every symbol must appear in some word"));
        }
        if !(self.h >= 0.0) || !self.h.is_finite() {
            return Err(invalid("h", "must be a finite number >= 0"));
        }
        Ok(())
    }
}

/// Two-sided bound on the word-model free energy.
#[derive(Clone, Debug, PartialEq)]
pub struct WordSolution {
    pub energy: f64,
    pub lower: f64,
    pub upper: f64,
    pub multipliers: Vec<f64>,
}

struct Dual<'a> {
    ws: &'a WordSpec,
    beta: f64,
    masks: Vec<u32>,
    budget: Vec<f64>,
}

impl Dual<'_> {
    fn mu(&self, lam: &[f64], word: u32) -> f64 {
        self.masks.iter().zip(lam).filter(|(&m, _)| word & !m == 0).map(|(_, l)| l).sum()
    }

    fn nu(&self, lam: &[f64], i: usize) -> f64 {
        self.masks.iter().zip(lam).filter(|(&m, _)| m >> i & 1 == 1).map(|(_, l)| l).sum()
    }

    fn primal(&self, lam: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let x = self.ws.words.iter().map(|w| self.beta * w.a / (1.0 + self.mu(lam, w.mask()))).collect();
        let t = (0..self.ws.n).map(|i| (self.beta * self.ws.h / (1.0 + self.nu(lam, i))).tanh()).collect();
        (x, t)
    }

    fn value(&self, lam: &[f64]) -> f64 {
        let mut v: f64 = self
            .ws
            .words
            .iter()
            .map(|w| (self.beta * w.a).powi(2) / (2.0 * (1.0 + self.mu(lam, w.mask()))))
            .sum();
        for i in 0..self.ws.n {
            let s = 1.0 + self.nu(lam, i);
            v += self.ws.p[i] * s * ln_cosh(self.beta * self.ws.h / s);
        }
        v + lam.iter().zip(&self.budget).map(|(l, b)| l * b).sum::<f64>()
    }

    // Budget use of the constraint indexed by `m`.
    fn usage(&self, m: u32, x: &[f64], t: &[f64]) -> f64 {
        let words: f64 =
            self.ws.words.iter().zip(x).filter(|(w, _)| w.mask() & !m == 0).map(|(_, x)| 0.5 * x * x).sum();
        let spins: f64 =
            (0..self.ws.n).filter(|i| m >> i & 1 == 1).map(|i| self.ws.p[i] * binary_entropy_rate(t[i])).sum();
        words + spins
    }

    fn slope(&self, lam: &[f64], k: usize) -> f64 {
        let (x, t) = self.primal(lam);
        self.budget[k] - self.usage(self.masks[k], &x, &t)
    }

    fn primal_cost(&self, x: &[f64], t: &[f64]) -> f64 {
        let mut c = 0.0;
        for (w, x) in self.ws.words.iter().zip(x) {
            c += 0.5 * x * x - self.beta * w.a * x;
        }
        for (p, &t) in self.ws.p.iter().zip(t) {
            c += p * (binary_entropy_rate(t) - self.beta * self.ws.h * t);
        }
        c
    }
}

/// Gaussian word GREM with field, by coordinate descent on the convex dual
/// of the constrained variational problem. Dual values bound the energy
/// from above; the rescaled primal point bounds it from below.
pub fn word_grem_solve(ws: &WordSpec, beta: f64) -> Result<WordSolution> {
    ws.validate()?;
    if !(beta >= 0.0) {
        return Err(invalid("beta", "must be >= 0"));
    }
    if ws.n > WORD_ORACLE_SYMBOLS || ws.words.len() > WORD_ORACLE_WORDS {
        return Err(invalid(
            "words",
            format!("the numeric solver handles at most {WORD_ORACLE_SYMBOLS} symbols and {WORD_ORACLE_WORDS} words"),
        ));
    }
    let masks: Vec<u32> = (1..1u32 << ws.n).collect();
    let budget = masks
        .iter()
        .map(|&m| {
            if m == (1 << ws.n) - 1 {
                LN2
            } else {
                (0..ws.n).filter(|i| m >> i & 1 == 1).map(|i| ws.p[i]).sum::<f64>() * LN2
            }
        })
        .collect();
    let d = Dual { ws, beta, masks, budget };
    let k = d.masks.len();
    let mut lam = vec![0.0; k];
    let mut prev = d.value(&lam);
    for _sweep in 0..5000 {
        for j in 0..k {
            let at = |v: f64| {
                let mut w = lam.clone();
                w[j] = v;
                d.slope(&w, j)
            };
            if at(0.0) >= 0.0 {
                lam[j] = 0.0;
                continue;
            }
            let mut hi = 1.0;
            while at(hi) < 0.0 {
                hi *= 2.0;
            }
            lam[j] = bisect(at, 0.0, hi, 1e-15);
        }
        let v = d.value(&lam);
        if (prev - v).abs() <= 1e-15 * v.abs().max(1.0) {
            prev = v;
            break;
        }
        prev = v;
    }
    let (x, t) = d.primal(&lam);
    let scale = d
        .masks
        .iter()
        .zip(&d.budget)
        .map(|(&m, b)| {
            let u = d.usage(m, &x, &t);
            if u > *b {
                b / u
            } else {
                1.0
            }
        })
        .fold(1.0, f64::min);
    let xs: Vec<f64> = x.iter().map(|v| v * scale).collect();
    let ts: Vec<f64> = t.iter().map(|v| v * scale).collect();
    let lower = LN2 - d.primal_cost(&xs, &ts);
    let upper = LN2 + prev;
    Ok(WordSolution { energy: upper, lower: lower.min(upper), upper, multipliers: lam })
}

pub fn word_grem_energy(ws: &WordSpec, beta: f64) -> Result<f64> {
    Ok(word_grem_solve(ws, beta)?.energy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_rate_examples() {
        assert_eq!(binary_entropy_rate(0.0), 0.0);
        assert!((binary_entropy_rate(1.0) - LN2).abs() < 1e-15);
        assert!((binary_entropy_rate(-1.0) - LN2).abs() < 1e-15);
        assert!((binary_entropy_rate(0.5) - 0.130812).abs() < 1e-6);
        assert_eq!(binary_entropy_rate(1.5), f64::INFINITY);
    }

    #[test]
    fn field_examples() {
        let e = rem_field_energy(FieldParams::new(1.0, 0.0).unwrap(), 1.0).unwrap();
        assert!((e - 1.193147).abs() < 1e-6);
        let s = rem_field_solution(FieldParams::new(1.0, 0.5).unwrap(), 0.3).unwrap();
        assert!((s.energy - 0.749355).abs() < 1e-5);
        assert!(s.high_temperature);
        assert!((s.y0 - 0.489).abs() < 2e-3, "{}", s.y0);
        assert!((s.c_beta.unwrap() - 0.985).abs() < 2e-3);
    }

    #[test]
    fn field_matches_variational() {
        for &(a, h) in &[(1.0, 0.5), (0.7, 1.3), (2.0, 0.1), (1.0, 3.0)] {
            let fp = FieldParams::new(a, h).unwrap();
            for i in 0..40 {
                let b = i as f64 * 0.1;
                let e = rem_field_energy(fp, b).unwrap();
                let v = field_variational(fp, b).unwrap();
                assert!((e - v).abs() < 1e-6, "a={a} h={h} beta={b}: {e} vs {v}");
            }
        }
    }

    #[test]
    fn single_full_word_is_gaussian_rem() {
        let ws = WordSpec { n: 2, words: vec![Word { sym: vec![1, 2], a: 0.8 }], p: vec![0.4, 0.6], h: 0.0 };
        for i in 0..30 {
            let b = i as f64 * 0.1;
            let s = word_grem_solve(&ws, b).unwrap();
            assert!((s.energy - rem_gaussian(0.8 * b)).abs() < 1e-8, "{b} {s:?}");
            assert!(s.upper - s.lower < 1e-6);
        }
    }
}
