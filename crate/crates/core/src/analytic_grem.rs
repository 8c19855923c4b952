//! Multi-level (tree) GREM: the beta ladder, closed-form free energies,
//! a constrained variational reference solver and parameter recovery.

use serde::{Deserialize, Serialize};

use crate::analytic_rem::rem_gaussian;
use crate::curve::{FreeEnergyCurve, Segment, SegmentKind};
use crate::error::{invalid, Error, Result};
use crate::numeric::{scan_min, LN2};
use crate::rates::RateFunction;

const TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelKind {
    Exp,
    Gauss,
}

impl LevelKind {
    pub fn gamma(self) -> f64 {
        match self {
            LevelKind::Exp => 1.0,
            LevelKind::Gauss => 2.0,
        }
    }
}

/// Per-level driving families, all from the power family `|x|^g / g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Levels {
    UniformGamma(f64),
    PerLevel(Vec<f64>),
    Mixed(Vec<LevelKind>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GremSpec {
    pub p: Vec<f64>,
    pub a: Vec<f64>,
    pub levels: Levels,
}

impl GremSpec {
    pub fn new(p: Vec<f64>, a: Vec<f64>, levels: Levels) -> Result<Self> {
        let s = GremSpec { p, a, levels };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(p: Vec<f64>, a: Vec<f64>, gamma: f64) -> Result<Self> {
        GremSpec::new(p, a, Levels::UniformGamma(gamma))
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.p.len();
        if n == 0 {
            return Err(invalid("p", "at least one level is required"));
        }
        if self.a.len() != n {
            return Err(invalid("a", format!("expected {n} weights, got {}", self.a.len())));
        }
        if self.p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(invalid("p", "proportions must be > 0"));
        }
        let total: f64 = self.p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("p", format!("proportions must sum to 1 (got {total})")));
        }
        if self.a.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(invalid("a", "weights must be finite and >= 0"));
        }
        if !self.a.iter().any(|&x| x > 0.0) {
            return Err(invalid("a", "at least one weight must be > 0"));
        }
        match &self.levels {
            Levels::UniformGamma(g) => check_gamma(*g)?,
            Levels::PerLevel(gs) => {
                if gs.len() != n {
                    return Err(invalid("levels", format!("expected {n} per-level exponents")));
                }
                for g in gs {
                    check_gamma(*g)?;
                }
            }
            Levels::Mixed(ks) => {
                if ks.len() != n {
                    return Err(invalid("levels", format!("expected {n} level kinds")));
                }
            }
        }
        Ok(())
    }

    pub fn gamma(&self, i: usize) -> f64 {
        match &self.levels {
            Levels::UniformGamma(g) => *g,
            Levels::PerLevel(gs) => gs[i],
            Levels::Mixed(ks) => ks[i].gamma(),
        }
    }

    /// The common exponent when every level uses the same family.
    pub fn uniform_gamma(&self) -> Option<f64> {
        let g0 = self.gamma(0);
        (1..self.n()).all(|i| self.gamma(i) == g0).then_some(g0)
    }

    pub fn rate(&self, i: usize) -> RateFunction {
        match self.gamma(i) {
            2.0 => RateFunction::Gaussian,
            1.0 => RateFunction::TwoSidedExponential,
            g => RateFunction::PowerGamma { gamma: g },
        }
    }

    /// Cumulative budgets `b_k = log 2 * (p_1 + ... + p_k)`; the last one is
    /// exactly `log 2`.
    pub fn budgets(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut b: Vec<f64> = self
            .p
            .iter()
            .map(|x| {
                acc += x;
                acc * LN2
            })
            .collect();
        *b.last_mut().unwrap() = LN2;
        b
    }
}

fn check_gamma(g: f64) -> Result<()> {
    if g > 0.0 && g.is_finite() {
        Ok(())
    } else {
        Err(invalid("gamma", "must be a finite number > 0"))
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 {
        Ok(())
    } else {
        Err(invalid("beta", "must be >= 0"))
    }
}

/// Freezing temperatures and the level counts frozen at each of them.
/// A final rung at `+inf` collects trailing levels that carry no weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaLadder {
    pub betas: Vec<f64>,
    pub ranks: Vec<usize>,
}

impl BetaLadder {
    /// Number of rungs at or below `beta`.
    pub fn frozen(&self, beta: f64) -> usize {
        self.betas.partition_point(|&b| b <= beta)
    }

    pub fn finite_betas(&self) -> Vec<f64> {
        self.betas.iter().copied().filter(|b| b.is_finite()).collect()
    }

    fn group(&self, l: usize) -> std::ops::Range<usize> {
        let start = if l == 0 { 0 } else { self.ranks[l - 1] };
        start..self.ranks[l]
    }
}

fn build_ladder<B: Fn(usize, usize) -> f64>(n: usize, b: B) -> BetaLadder {
    let mut betas = Vec::new();
    let mut ranks = Vec::new();
    let mut r = 0;
    while r < n {
        let vals: Vec<f64> = (r + 1..=n).map(|k| b(r + 1, k)).collect();
        let m = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if !m.is_finite() {
            betas.push(f64::INFINITY);
            ranks.push(n);
            break;
        }
        let k = (0..vals.len()).rev().find(|&i| vals[i] <= m * (1.0 + TIE)).unwrap();
        r = r + 1 + k;
        betas.push(m);
        ranks.push(r);
    }
    BetaLadder { betas, ranks }
}

fn ladder_for(p: &[f64], a: &[f64], gamma: f64) -> BetaLadder {
    let n = p.len();
    if gamma == 1.0 {
        // each rung freezes up to the last position of the largest remaining weight
        let mut betas = Vec::new();
        let mut ranks = Vec::new();
        let mut r = 0;
        while r < n {
            let m = a[r..].iter().cloned().fold(0.0, f64::max);
            if m == 0.0 {
                betas.push(f64::INFINITY);
                ranks.push(n);
                break;
            }
            r = (r..n).rev().find(|&i| a[i] == m).unwrap() + 1;
            betas.push(1.0 / m);
            ranks.push(r);
        }
        BetaLadder { betas, ranks }
    } else {
        let q = gamma / (gamma - 1.0);
        build_ladder(n, |j, k| {
            let num: f64 = p[j - 1..k].iter().sum::<f64>() * gamma * LN2;
            let den: f64 = a[j - 1..k].iter().map(|x| x.powf(q)).sum();
            if den > 0.0 {
                (num / den).powf(1.0 / q)
            } else {
                f64::INFINITY
            }
        })
    }
}

/// Ladder of a uniform-exponent GREM with exponent > 1.
pub fn beta_ladder(spec: &GremSpec) -> Result<BetaLadder> {
    spec.validate()?;
    match spec.uniform_gamma() {
        Some(g) if g > 1.0 => Ok(ladder_for(&spec.p, &spec.a, g)),
        _ => Err(invalid("levels", "the beta ladder needs one common exponent > 1")),
    }
}

/// Ladder of the two-sided exponential GREM (exponent 1).
pub fn exp_ladder(spec: &GremSpec) -> Result<BetaLadder> {
    spec.validate()?;
    match spec.uniform_gamma() {
        Some(1.0) => Ok(ladder_for(&spec.p, &spec.a, 1.0)),
        _ => Err(invalid("levels", "expected the exponential family on every level")),
    }
}

fn gamma_segment(spec: &GremSpec, lad: &BetaLadder, g: f64, j: usize) -> Segment {
    let q = g / (g - 1.0);
    let s = 1.0 / (g - 1.0);
    let r = if j == 0 { 0 } else { lad.ranks[j - 1] };
    let c0: f64 = spec.p[r..].iter().sum::<f64>() * LN2;
    let c0 = if r == spec.n() { 0.0 } else { c0 };
    let c1: f64 = (0..j)
        .map(|l| lad.betas[l].powf(s) * lad.group(l).map(|i| spec.a[i].powf(q)).sum::<f64>())
        .sum();
    let w: f64 = spec.a[r..].iter().map(|x| x.powf(q)).sum();
    if w == 0.0 {
        Segment::linear(c0, c1)
    } else if g == 2.0 {
        Segment::quadratic(c0, c1, 0.5 * w)
    } else {
        Segment::power(c0, c1, (g - 1.0) / g * w, q)
    }
}

/// Closed form for a common exponent `gamma > 1`.
pub fn grem_energy_gamma(spec: &GremSpec, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let lad = beta_ladder(spec)?;
    let g = spec.uniform_gamma().unwrap();
    Ok(gamma_segment(spec, &lad, g, lad.frozen(beta)).eval(beta))
}

/// Closed form for the two-sided exponential GREM.
pub fn grem_energy_exp(spec: &GremSpec, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let lad = exp_ladder(spec)?;
    let j = lad.frozen(beta);
    let mut e = LN2;
    for l in 0..j {
        let top = spec.a[lad.ranks[l] - 1];
        let mass: f64 = lad.group(l).map(|i| spec.p[i]).sum();
        e += (beta * top - 1.0) * mass * LN2;
    }
    Ok(e)
}

fn exp_segment(spec: &GremSpec, lad: &BetaLadder, j: usize) -> Segment {
    if j == 0 {
        return Segment::constant(LN2);
    }
    let (mut c0, mut c1) = (LN2, 0.0);
    for l in 0..j {
        let top = spec.a[lad.ranks[l] - 1];
        let mass: f64 = lad.group(l).map(|i| spec.p[i]).sum::<f64>() * LN2;
        c0 -= mass;
        c1 += top * mass;
    }
    Segment::linear(c0, c1)
}

/// Builds a curve from `(segment, right end)` pairs, dropping empty pieces.
fn pieces(list: Vec<(Segment, f64)>) -> FreeEnergyCurve {
    let mut breakpoints = Vec::new();
    let mut segments = Vec::new();
    let mut start = 0.0;
    for (seg, until) in list {
        if until <= start {
            continue;
        }
        segments.push(seg);
        if !until.is_finite() {
            break;
        }
        breakpoints.push(until);
        start = until;
    }
    if breakpoints.len() == segments.len() {
        breakpoints.pop();
    }
    FreeEnergyCurve { breakpoints, segments }
}

/// Corner-point scenario of the two-level GREM with a common exponent below 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcaveTwoLevel {
    pub scenario: u8,
    pub curve: FreeEnergyCurve,
}

pub fn concave_two_level(p: [f64; 2], a: [f64; 2], gamma: f64) -> Result<ConcaveTwoLevel> {
    GremSpec::uniform(p.to_vec(), a.to_vec(), gamma)?;
    if !(gamma < 1.0) {
        return Err(invalid("gamma", "the two-level corner formula needs 0 < gamma < 1"));
    }
    let al = 1.0 / gamma;
    let (wa, wb) = (a[0] * gamma.powf(al), a[1] * gamma.powf(al));
    let (c, d) = (p[0] * LN2, LN2 - p[0] * LN2);
    let first = wa * c.powf(al);
    let both = first + wb * d.powf(al);
    let whole = wb * LN2.powf(al);
    let inv = |x: f64| if x > 0.0 { 1.0 / x } else { f64::INFINITY };
    let (scenario, list) = if whole <= both {
        (
            1,
            vec![
                (Segment::constant(LN2), inv(wa * c.powf(al - 1.0))),
                (Segment::linear(d, first), inv(wb * d.powf(al - 1.0))),
                (Segment::linear(0.0, both), f64::INFINITY),
            ],
        )
    } else if wb * LN2.powf(al - 1.0) <= wa * c.powf(al - 1.0) {
        (
            2,
            vec![
                (Segment::constant(LN2), inv(wa * c.powf(al - 1.0))),
                (Segment::linear(d, first), d / (whole - first)),
                (Segment::linear(0.0, whole), f64::INFINITY),
            ],
        )
    } else {
        (
            3,
            vec![
                (Segment::constant(LN2), inv(wb * LN2.powf(al - 1.0))),
                (Segment::linear(0.0, whole), f64::INFINITY),
            ],
        )
    };
    Ok(ConcaveTwoLevel { scenario, curve: pieces(list) })
}

/// Two-level GREM with a common exponent in (0, 1).
pub fn grem2_sub1(p: [f64; 2], a: [f64; 2], gamma: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(concave_two_level(p, a, gamma)?.curve.eval(beta))
}

/// Exponential first level, Gaussian second level. Returns the subcase
/// label ("A1", "A2", "A3") and the curve.
pub fn exp_gauss_curve(p: [f64; 2], a: [f64; 2]) -> Result<(&'static str, FreeEnergyCurve)> {
    GremSpec::new(p.to_vec(), a.to_vec(), Levels::Mixed(vec![LevelKind::Exp, LevelKind::Gauss]))?;
    let (a1, a2) = (a[0], a[1]);
    let (p1, p2) = (p[0], p[1]);
    let s2 = (2.0 * p2 * LN2).sqrt();
    let s = (2.0 * LN2).sqrt();
    let ratio = if a1 > 0.0 { a2 / a1 } else { f64::INFINITY };
    let inv_a1 = if a1 > 0.0 { 1.0 / a1 } else { f64::INFINITY };
    Ok(if ratio < s2 {
        let t2 = if a2 > 0.0 { s2 / a2 } else { f64::INFINITY };
        let curve = pieces(vec![
            (Segment::quadratic(LN2, 0.0, 0.5 * a2 * a2), inv_a1),
            (Segment::quadratic(p2 * LN2, p1 * a1 * LN2, 0.5 * a2 * a2), t2),
            (Segment::linear(0.0, a2 * s2 + a1 * p1 * LN2), f64::INFINITY),
        ]);
        ("A1", curve)
    } else if ratio < s {
        let curve = pieces(vec![
            (Segment::quadratic(LN2, 0.0, 0.5 * a2 * a2), inv_a1),
            (Segment::linear(0.0, a2 * a2 / (2.0 * a1) + a1 * LN2), f64::INFINITY),
        ]);
        ("A2", curve)
    } else {
        let curve = pieces(vec![
            (Segment::quadratic(LN2, 0.0, 0.5 * a2 * a2), s / a2),
            (Segment::linear(0.0, a2 * s), f64::INFINITY),
        ]);
        ("A3", curve)
    })
}

/// Gaussian first level, exponential second level ("B1" / "B2").
pub fn gauss_exp_curve(p: [f64; 2], a: [f64; 2]) -> Result<(&'static str, FreeEnergyCurve)> {
    GremSpec::new(p.to_vec(), a.to_vec(), Levels::Mixed(vec![LevelKind::Gauss, LevelKind::Exp]))?;
    let (a1, a2) = (a[0], a[1]);
    let (p1, p2) = (p[0], p[1]);
    let s1 = (2.0 * p1 * LN2).sqrt();
    let ratio = if a2 > 0.0 { a1 / a2 } else { f64::INFINITY };
    let inv_a2 = if a2 > 0.0 { 1.0 / a2 } else { f64::INFINITY };
    Ok(if ratio <= s1 {
        let curve = pieces(vec![
            (Segment::quadratic(LN2, 0.0, 0.5 * a1 * a1), inv_a2),
            (Segment::linear(0.0, a1 * a1 / (2.0 * a2) + a2 * LN2), f64::INFINITY),
        ]);
        ("B1", curve)
    } else {
        let curve = pieces(vec![
            (Segment::quadratic(LN2, 0.0, 0.5 * a1 * a1), s1 / a1),
            (Segment::linear(p2 * LN2, a1 * s1), inv_a2),
            (Segment::linear(0.0, a1 * s1 + a2 * p2 * LN2), f64::INFINITY),
        ]);
        ("B2", curve)
    })
}

pub fn grem2_exp_gauss(p: [f64; 2], a: [f64; 2], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(exp_gauss_curve(p, a)?.1.eval(beta))
}

pub fn grem2_gauss_exp(p: [f64; 2], a: [f64; 2], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(gauss_exp_curve(p, a)?.1.eval(beta))
}

/// Closed-form curve when one is available for the spec.
pub fn grem_curve(spec: &GremSpec) -> Result<FreeEnergyCurve> {
    spec.validate()?;
    if let Some(g) = spec.uniform_gamma() {
        if g > 1.0 {
            let lad = ladder_for(&spec.p, &spec.a, g);
            let k = lad.finite_betas().len();
            let segs = (0..=k).map(|j| gamma_segment(spec, &lad, g, j)).collect();
            return FreeEnergyCurve::new(lad.finite_betas(), segs);
        }
        if g == 1.0 {
            let lad = ladder_for(&spec.p, &spec.a, 1.0);
            let k = lad.finite_betas().len();
            let segs = (0..=k).map(|j| exp_segment(spec, &lad, j)).collect();
            return FreeEnergyCurve::new(lad.finite_betas(), segs);
        }
        if spec.n() == 2 {
            return Ok(concave_two_level([spec.p[0], spec.p[1]], [spec.a[0], spec.a[1]], g)?.curve);
        }
    }
    if spec.n() == 2 {
        let (p, a) = ([spec.p[0], spec.p[1]], [spec.a[0], spec.a[1]]);
        match (spec.gamma(0), spec.gamma(1)) {
            (g1, g2) if g1 == 1.0 && g2 == 2.0 => return Ok(exp_gauss_curve(p, a)?.1),
            (g1, g2) if g1 == 2.0 && g2 == 1.0 => return Ok(gauss_exp_curve(p, a)?.1),
            _ => {}
        }
    }
    if spec.n() == 1 {
        let g = spec.gamma(0);
        let base = crate::analytic_rem::RemModel::Weibull { gamma: g }.curve()?.unwrap();
        return Ok(scale_weight(&base, spec.a[0]));
    }
    Err(Error::Unsupported("no closed form for this level configuration; use the variational solver".into()))
}

// A single-level curve with weight `a` is the unit-weight curve at `a * beta`.
fn scale_weight(c: &FreeEnergyCurve, a: f64) -> FreeEnergyCurve {
    let breakpoints = c.breakpoints.iter().map(|b| b / a).collect();
    let segments = c
        .segments
        .iter()
        .map(|s| {
            let mut k = s.coeffs.clone();
            match s.kind {
                SegmentKind::Constant => {}
                SegmentKind::Linear => k[1] *= a,
                SegmentKind::PowerGamma => {
                    k[1] *= a;
                    k[2] *= a.powf(k[3]);
                }
                _ => unreachable!("power-family single-level curves only"),
            }
            Segment { kind: s.kind, coeffs: k }
        })
        .collect();
    FreeEnergyCurve { breakpoints, segments }
}

/// Closed form when available, otherwise the variational solver.
pub fn grem_energy(spec: &GremSpec, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    match grem_curve(spec) {
        Ok(c) => Ok(c.eval(beta)),
        Err(Error::Unsupported(_)) => grem_variational(spec, beta),
        Err(e) => Err(e),
    }
}

/// `log 2 - inf { sum_i I_i(x_i) - beta a_i x_i : x >= 0, cumulative budgets }`
/// evaluated numerically. Works in budget coordinates `u_i = I_i(x_i)`, where
/// the feasible set is a polytope; combines nested line searches (exact for
/// exponents >= 1), the polytope vertices (exact for exponents <= 1) and the
/// clipped stationary point.
pub fn grem_variational(spec: &GremSpec, beta: f64) -> Result<f64> {
    spec.validate()?;
    check_beta(beta)?;
    let n = spec.n();
    if n > 4 {
        return Err(invalid("p", "the variational solver handles at most 4 levels"));
    }
    let prob = BudgetProblem::new(spec, beta);
    let mut best = prob.nested(0, 0.0);
    best = best.min(prob.vertices());
    best = best.min(prob.greedy());
    Ok(LN2 - best)
}

struct BudgetProblem {
    gamma: Vec<f64>,
    wt: Vec<f64>,
    b: Vec<f64>,
}

impl BudgetProblem {
    fn new(spec: &GremSpec, beta: f64) -> Self {
        BudgetProblem {
            gamma: (0..spec.n()).map(|i| spec.gamma(i)).collect(),
            wt: spec.a.iter().map(|a| beta * a).collect(),
            b: spec.budgets(),
        }
    }

    // cost of spending budget u on level i
    fn h(&self, i: usize, u: f64) -> f64 {
        let g = self.gamma[i];
        u - self.wt[i] * (g * u).powf(1.0 / g)
    }

    fn stationary(&self, i: usize) -> f64 {
        let g = self.gamma[i];
        if g > 1.0 && self.wt[i] > 0.0 {
            self.wt[i].powf(g / (g - 1.0)) / g
        } else {
            0.0
        }
    }

    fn last_level(&self, i: usize, cap: f64) -> f64 {
        let cap = cap.max(0.0);
        let mut v = self.h(i, 0.0).min(self.h(i, cap));
        if self.gamma[i] > 1.0 {
            v = v.min(self.h(i, self.stationary(i).min(cap)));
        }
        v
    }

    fn nested(&self, i: usize, used: f64) -> f64 {
        let n = self.gamma.len();
        let cap = (self.b[i] - used).max(0.0);
        if i + 1 == n {
            return self.last_level(i, cap);
        }
        let f = |u: f64| self.h(i, u) + self.nested(i + 1, used + u);
        scan_min(f, 0.0, cap, 24, 2).1
    }

    fn vertices(&self) -> f64 {
        let n = self.gamma.len();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            let mut used = 0.0;
            let mut total = 0.0;
            for i in 0..n {
                let u = if mask >> i & 1 == 1 { (self.b[i] - used).max(0.0) } else { 0.0 };
                used += u;
                total += self.h(i, u);
            }
            best = best.min(total);
        }
        best
    }

    fn greedy(&self) -> f64 {
        let mut used = 0.0;
        let mut total = 0.0;
        for i in 0..self.gamma.len() {
            let u = self.stationary(i).min((self.b[i] - used).max(0.0));
            used += u;
            total += self.h(i, u);
        }
        total
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaLimitReport {
    pub gaps: Vec<f64>,
    pub monotone: bool,
}

/// Distance between the exponent-(1+eps) closed form and the exponential
/// closed form, for each eps.
pub fn gamma_limit_check(p: &[f64], a: &[f64], beta: f64, eps: &[f64]) -> Result<GammaLimitReport> {
    let exp = grem_energy_exp(&GremSpec::uniform(p.to_vec(), a.to_vec(), 1.0)?, beta)?;
    let gaps = eps
        .iter()
        .map(|e| Ok((grem_energy_gamma(&GremSpec::uniform(p.to_vec(), a.to_vec(), 1.0 + e)?, beta)? - exp).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    Ok(GammaLimitReport { gaps, monotone })
}

/// Collapses an exponential GREM to the equivalent GREM whose weights are
/// strictly decreasing.
pub fn reduce_exp_grem(spec: &GremSpec) -> Result<GremSpec> {
    let lad = exp_ladder(spec)?;
    let mut p = Vec::new();
    let mut a = Vec::new();
    for l in 0..lad.ranks.len() {
        let g = lad.group(l);
        p.push(g.clone().map(|i| spec.p[i]).sum());
        a.push(if lad.betas[l].is_finite() { spec.a[lad.ranks[l] - 1] } else { 0.0 });
    }
    let total: f64 = p.iter().sum();
    let last = p.len() - 1;
    p[last] += 1.0 - total;
    GremSpec::uniform(p, a, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RecoveryFamily {
    Exp,
    Gamma(f64),
}

/// Reads level proportions and weights back from a reduced-form curve.
pub fn recover_params(curve: &FreeEnergyCurve, family: RecoveryFamily) -> Result<GremSpec> {
    curve.validate()?;
    let bad = |m: String| Error::NotReducedCurve(m);
    if curve.max_jump() > 1e-8 {
        return Err(bad("curve is discontinuous".into()));
    }
    if (curve.eval(0.0) - LN2).abs() > 1e-8 {
        return Err(bad("value at beta = 0 is not log 2".into()));
    }
    let x = &curve.breakpoints;
    let n = x.len();
    if n == 0 {
        return Err(bad("a reduced-form curve has at least one breakpoint".into()));
    }
    let last = &curve.segments[n];
    if last.kind != SegmentKind::Linear || last.coeffs[0].abs() > 1e-8 {
        return Err(bad("final segment must be linear through the origin".into()));
    }
    match family {
        RecoveryFamily::Exp => {
            let mut c = vec![0.0];
            for (j, s) in curve.segments.iter().enumerate() {
                let slope = match s.kind {
                    SegmentKind::Constant => 0.0,
                    SegmentKind::Linear => s.coeffs[1],
                    _ => return Err(bad(format!("segment {j} is not piecewise linear"))),
                };
                if j == 0 {
                    if slope != 0.0 {
                        return Err(bad("first segment must be flat".into()));
                    }
                } else {
                    if !(slope > c[j - 1]) {
                        return Err(bad("slopes must increase strictly".into()));
                    }
                    c.push(slope);
                }
            }
            let ident: f64 = (0..n).map(|i| x[i] * (c[i + 1] - c[i])).sum();
            if (ident - LN2).abs() > 1e-8 {
                return Err(bad(format!("sum x_i (c_i - c_(i-1)) = {ident}, expected log 2")));
            }
            let a = x.iter().map(|xi| 1.0 / xi).collect();
            let p = (0..n).map(|i| x[i] * (c[i + 1] - c[i]) / LN2).collect();
            GremSpec::uniform(p, a, 1.0)
        }
        RecoveryFamily::Gamma(g) => {
            if !(g > 1.0) {
                return Err(invalid("gamma", "recovery with the power family needs gamma > 1"));
            }
            let q = g / (g - 1.0);
            let mut c = Vec::with_capacity(n + 1);
            for (j, s) in curve.segments[..n].iter().enumerate() {
                let curv = match s.kind {
                    SegmentKind::Quadratic if g == 2.0 => 2.0 * s.coeffs[2],
                    SegmentKind::PowerGamma if (s.coeffs[3] - q).abs() < 1e-12 => s.coeffs[2] * q,
                    _ => return Err(bad(format!("segment {j} does not have the power-{q} form"))),
                };
                c.push(curv);
            }
            c.push(0.0);
            if c.windows(2).any(|w| !(w[0] > w[1])) {
                return Err(bad("curvature coefficients must decrease strictly".into()));
            }
            let ident: f64 = (0..n).map(|i| x[i].powf(q) * (c[i] - c[i + 1])).sum();
            if (ident - g * LN2).abs() > 1e-8 {
                return Err(bad(format!("sum x_i^q (c_i - c_(i+1)) = {ident}, expected {}", g * LN2)));
            }
            let a = (0..n).map(|i| (c[i] - c[i + 1]).powf(1.0 / q)).collect();
            let p = (0..n).map(|i| x[i].powf(q) * (c[i] - c[i + 1]) / (g * LN2)).collect();
            GremSpec::uniform(p, a, g)
        }
    }
}

/// Gaussian REM with weight `a`.
pub fn weighted_gaussian_rem(a: f64, beta: f64) -> f64 {
    rem_gaussian(a * beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn gs(p: &[f64], a: &[f64], g: f64) -> GremSpec {
        GremSpec::uniform(p.to_vec(), a.to_vec(), g).unwrap()
    }

    #[test]
    fn ladder_examples() {
        let l = beta_ladder(&gs(&[0.5, 0.5], &[1.0, 0.5], 2.0)).unwrap();
        assert_eq!(l.ranks, vec![1, 2]);
        assert!(close(l.betas[0], 0.832555, 1e-6) && close(l.betas[1], 1.665109, 1e-6));
        let l = beta_ladder(&gs(&[0.5, 0.5], &[1.0, 1.0], 2.0)).unwrap();
        assert_eq!(l.ranks, vec![2]);
        assert!(close(l.betas[0], 0.832555, 1e-6));
        let l = beta_ladder(&gs(&[1.0], &[1.0], 2.0)).unwrap();
        assert_eq!(l.ranks, vec![1]);
        assert!(close(l.betas[0], 1.177410, 1e-6));
        assert!(beta_ladder(&gs(&[1.0], &[1.0], 1.0)).is_err());
    }

    #[test]
    fn ladder_with_trailing_zero_weight() {
        let l = beta_ladder(&gs(&[0.5, 0.5], &[1.0, 0.0], 2.0)).unwrap();
        assert_eq!(l.ranks, vec![1, 2]);
        assert!(l.betas[1].is_infinite());
        let e = grem_energy_gamma(&gs(&[0.5, 0.5], &[1.0, 0.0], 2.0), 3.0).unwrap();
        assert!(close(e, 0.5 * LN2 + 3.0 * LN2.sqrt(), 1e-12));
    }

    #[test]
    fn gamma_energy_examples() {
        assert!(close(grem_energy_gamma(&gs(&[0.5, 0.5], &[1.0, 1.0], 2.0), 0.5).unwrap(), 0.943147, 1e-6));
        assert!(close(grem_energy_gamma(&gs(&[0.3, 0.7], &[2.0, 1.0], 3.0), 0.0).unwrap(), LN2, 1e-15));
        assert!(close(grem_energy_gamma(&gs(&[0.5, 0.5], &[1.0, 0.5], 2.0), 2.0).unwrap(), 2.497664, 1e-6));
    }

    #[test]
    fn exp_energy_examples() {
        assert!(close(grem_energy_exp(&gs(&[0.5, 0.5], &[2.0, 1.0], 1.0), 0.75).unwrap(), 0.866434, 1e-6));
        assert!(close(grem_energy_exp(&gs(&[0.5, 0.5], &[1.0, 2.0], 1.0), 0.4).unwrap(), 0.693147, 1e-6));
        assert!(close(grem_energy_exp(&gs(&[0.2, 0.8], &[1.0, 2.0], 1.0), 0.0).unwrap(), LN2, 1e-15));
    }

    #[test]
    fn reduce_examples() {
        let r = reduce_exp_grem(&gs(&[0.5, 0.5], &[1.0, 2.0], 1.0)).unwrap();
        assert_eq!((r.p.clone(), r.a.clone()), (vec![1.0], vec![2.0]));
        let r = reduce_exp_grem(&gs(&[0.5, 0.5], &[2.0, 1.0], 1.0)).unwrap();
        assert_eq!((r.p.clone(), r.a.clone()), (vec![0.5, 0.5], vec![2.0, 1.0]));
        let third = 1.0 / 3.0;
        let s = gs(&[third, third, 1.0 - 2.0 * third], &[3.0, 3.0, 1.0], 1.0);
        let r = reduce_exp_grem(&s).unwrap();
        assert_eq!(r.a, vec![3.0, 1.0]);
        assert!(close(r.p[0], 2.0 / 3.0, 1e-15) && close(r.p[1], 1.0 / 3.0, 1e-15));
        for i in 0..400 {
            let b = i as f64 * 0.01;
            assert!(close(grem_energy_exp(&s, b).unwrap(), grem_energy_exp(&r, b).unwrap(), 1e-12));
        }
    }

    #[test]
    fn concave_two_level_structure() {
        assert!(close(grem2_sub1([0.5, 0.5], [1.0, 1.0], 0.5, 0.0).unwrap(), LN2, 1e-15));
        let c = concave_two_level([0.5, 0.5], [1.0, 1.0], 0.5).unwrap();
        assert!(c.curve.max_jump() < 1e-10);
        assert!(concave_two_level([0.5, 0.5], [1.0, 1.0], 1.5).is_err());
    }

    #[test]
    fn single_level_curve_is_weighted_rem() {
        let c = grem_curve(&gs(&[1.0], &[0.7], 0.5)).unwrap();
        let base = crate::analytic_rem::rem_weibull(0.5, 0.7 * 2.0).unwrap();
        assert!(close(c.eval(2.0), base, 1e-12));
    }

    #[test]
    fn recovery_rejects_bad_identity() {
        let c = FreeEnergyCurve::new(vec![1.0], vec![Segment::constant(LN2), Segment::linear(0.0, LN2 * 1.1)]).unwrap();
        assert!(matches!(recover_params(&c, RecoveryFamily::Exp), Err(Error::NotReducedCurve(_))));
    }

    #[test]
    fn recovery_round_trip_examples() {
        let s = gs(&[0.5, 0.5], &[2.0, 1.0], 1.0);
        let r = recover_params(&grem_curve(&s).unwrap(), RecoveryFamily::Exp).unwrap();
        for i in 0..2 {
            assert!(close(r.p[i], s.p[i], 1e-12) && close(r.a[i], s.a[i], 1e-12));
        }
        let s = gs(&[0.5, 0.5], &[1.0, 0.5], 2.0);
        let r = recover_params(&grem_curve(&s).unwrap(), RecoveryFamily::Gamma(2.0)).unwrap();
        for i in 0..2 {
            assert!(close(r.p[i], s.p[i], 1e-12) && close(r.a[i], s.a[i], 1e-12));
        }
    }

    #[test]
    fn spec_json_shapes() {
        let s: GremSpec = serde_json::from_str(r#"{"p":[0.5,0.5],"a":[1,0.5],"levels":{"uniform_gamma":2.0}}"#).unwrap();
        assert_eq!(s.levels, Levels::UniformGamma(2.0));
        let s: GremSpec = serde_json::from_str(r#"{"p":[0.5,0.5],"a":[1,0.5],"levels":{"mixed":["exp","gauss"]}}"#).unwrap();
        assert_eq!(s.gamma(1), 2.0);
        let s: GremSpec = serde_json::from_str(r#"{"p":[0.5,0.5],"a":[1,0.5],"levels":{"per_level":[1.5,3]}}"#).unwrap();
        assert_eq!(s.gamma(0), 1.5);
        assert!(GremSpec::uniform(vec![0.5, 0.6], vec![1.0, 1.0], 2.0).is_err());
        assert!(GremSpec::uniform(vec![0.5, 0.5], vec![0.0, 0.0], 2.0).is_err());
    }
}
