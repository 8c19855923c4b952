//! Piecewise closed-form free-energy curves `beta -> E(beta)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numeric::ln_cosh;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    /// `c0`
    Constant,
    /// `c0 + c1 b`
    Linear,
    /// `c0 + c1 b + c2 b^2`
    Quadratic,
    /// `c0 + c1 b + c2 b^q`, coeffs `[c0, c1, c2, q]`
    PowerGamma,
    /// `c0 + c1 exp(k b)`, coeffs `[c0, c1, k]`
    ExpDecay,
    /// `c0 + c1 b + ln(u + v exp(k b))`, coeffs `[c0, c1, u, v, k]`
    Logistic,
    /// `c0 + c2 b^2 + ln cosh(h b)`, coeffs `[c0, c2, h]`
    CoshField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub coeffs: Vec<f64>,
}

/// `ln(u + v e^t)` without overflow for large `t`.
pub(crate) fn log_mix(u: f64, v: f64, t: f64) -> f64 {
    if t > 0.0 {
        t + (u * (-t).exp() + v).ln()
    } else {
        (u + v * t.exp()).ln()
    }
}

fn lin(c0: f64, c1: f64, b: f64) -> f64 {
    // keeps E(0) finite when a slope is infinite
    if b == 0.0 {
        c0
    } else {
        c0 + c1 * b
    }
}

impl Segment {
    pub fn constant(c0: f64) -> Self {
        Segment { kind: SegmentKind::Constant, coeffs: vec![c0] }
    }
    pub fn linear(c0: f64, c1: f64) -> Self {
        Segment { kind: SegmentKind::Linear, coeffs: vec![c0, c1] }
    }
    pub fn quadratic(c0: f64, c1: f64, c2: f64) -> Self {
        Segment { kind: SegmentKind::Quadratic, coeffs: vec![c0, c1, c2] }
    }
    pub fn power(c0: f64, c1: f64, c2: f64, q: f64) -> Self {
        Segment { kind: SegmentKind::PowerGamma, coeffs: vec![c0, c1, c2, q] }
    }
    pub fn exp_decay(c0: f64, c1: f64, k: f64) -> Self {
        Segment { kind: SegmentKind::ExpDecay, coeffs: vec![c0, c1, k] }
    }
    pub fn logistic(c0: f64, c1: f64, u: f64, v: f64, k: f64) -> Self {
        Segment { kind: SegmentKind::Logistic, coeffs: vec![c0, c1, u, v, k] }
    }
    pub fn cosh_field(c0: f64, c2: f64, h: f64) -> Self {
        Segment { kind: SegmentKind::CoshField, coeffs: vec![c0, c2, h] }
    }

    fn arity(kind: SegmentKind) -> usize {
        match kind {
            SegmentKind::Constant => 1,
            SegmentKind::Linear => 2,
            SegmentKind::Quadratic | SegmentKind::ExpDecay | SegmentKind::CoshField => 3,
            SegmentKind::PowerGamma => 4,
            SegmentKind::Logistic => 5,
        }
    }

    pub fn eval(&self, b: f64) -> f64 {
        let c = &self.coeffs;
        match self.kind {
            SegmentKind::Constant => c[0],
            SegmentKind::Linear => lin(c[0], c[1], b),
            SegmentKind::Quadratic => lin(c[0], c[1], b) + c[2] * b * b,
            SegmentKind::PowerGamma => {
                let p = if c[2] == 0.0 { 0.0 } else { c[2] * b.powf(c[3]) };
                lin(c[0], c[1], b) + p
            }
            SegmentKind::ExpDecay => c[0] + c[1] * (c[2] * b).exp(),
            SegmentKind::Logistic => lin(c[0], c[1], b) + log_mix(c[2], c[3], c[4] * b),
            SegmentKind::CoshField => c[0] + c[1] * b * b + ln_cosh(c[2] * b),
        }
    }

    /// Derivative in beta.
    pub fn slope(&self, b: f64) -> f64 {
        let c = &self.coeffs;
        match self.kind {
            SegmentKind::Constant => 0.0,
            SegmentKind::Linear => c[1],
            SegmentKind::Quadratic => c[1] + 2.0 * c[2] * b,
            SegmentKind::PowerGamma => {
                let p = if c[2] == 0.0 { 0.0 } else { c[2] * c[3] * b.powf(c[3] - 1.0) };
                c[1] + p
            }
            SegmentKind::ExpDecay => c[1] * c[2] * (c[2] * b).exp(),
            SegmentKind::Logistic => {
                let t = c[4] * b;
                let w = if t > 0.0 { c[3] / (c[2] * (-t).exp() + c[3]) } else { c[3] * t.exp() / (c[2] + c[3] * t.exp()) };
                c[1] + c[4] * w
            }
            SegmentKind::CoshField => 2.0 * c[1] * b + c[2] * (c[2] * b).tanh(),
        }
    }
}

/// Breakpoints `beta_1 < ... < beta_K` (the origin is implicit) and one
/// segment per interval; interval `j` is `[beta_j, beta_{j+1})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyCurve {
    pub breakpoints: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl FreeEnergyCurve {
    pub fn new(breakpoints: Vec<f64>, segments: Vec<Segment>) -> Result<Self> {
        let c = FreeEnergyCurve { breakpoints, segments };
        c.validate()?;
        Ok(c)
    }

    pub fn single(seg: Segment) -> Self {
        FreeEnergyCurve { breakpoints: vec![], segments: vec![seg] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.len() != self.breakpoints.len() + 1 {
            return Err(invalid("segments", "need exactly one more segment than breakpoints"));
        }
        let mut prev = 0.0;
        for &b in &self.breakpoints {
            if !(b > prev) || !b.is_finite() {
                return Err(invalid("breakpoints", "must be finite and strictly increasing from 0"));
            }
            prev = b;
        }
        for s in &self.segments {
            if s.coeffs.len() != Segment::arity(s.kind) {
                return Err(invalid("coeffs", format!("{:?} segment needs {} coefficients", s.kind, Segment::arity(s.kind))));
            }
        }
        Ok(())
    }

    pub fn segment_index(&self, b: f64) -> usize {
        self.breakpoints.partition_point(|&x| x <= b)
    }

    pub fn eval(&self, b: f64) -> f64 {
        self.segments[self.segment_index(b)].eval(b)
    }

    pub fn kinds(&self) -> Vec<SegmentKind> {
        self.segments.iter().map(|s| s.kind).collect()
    }

    /// Largest jump `|left limit - right value|` over the breakpoints.
    pub fn max_jump(&self) -> f64 {
        self.breakpoints
            .iter()
            .enumerate()
            .map(|(j, &b)| (self.segments[j].eval(b) - self.segments[j + 1].eval(b)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest derivative mismatch across breakpoints.
    pub fn max_slope_jump(&self) -> f64 {
        self.breakpoints
            .iter()
            .enumerate()
            .map(|(j, &b)| (self.segments[j].slope(b) - self.segments[j + 1].slope(b)).abs())
            .fold(0.0, f64::max)
    }
}

/// Evenly spaced grid `lo, lo+step, ...` up to `hi` inclusive (within a
/// relative slack of 1e-9 steps).
pub fn beta_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

/// Smallest second difference of `f` on an `n`-point grid over `[lo, hi]`.
pub fn min_second_difference<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / (n - 1) as f64;
    let v: Vec<f64> = (0..n).map(|i| f(lo + h * i as f64)).collect();
    v.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_is_left_closed() {
        let c = FreeEnergyCurve::new(vec![1.0], vec![Segment::constant(2.0), Segment::linear(0.0, 3.0)]).unwrap();
        assert_eq!(c.eval(0.999), 2.0);
        assert_eq!(c.eval(1.0), 3.0);
        assert_eq!(c.segment_index(0.0), 0);
    }

    #[test]
    fn json_shape() {
        let c = FreeEnergyCurve::new(vec![1.5], vec![Segment::quadratic(0.5, 0.0, 0.5), Segment::linear(0.0, 1.0)]).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(
            s,
            r#"{"breakpoints":[1.5],"segments":[{"kind":"quadratic","coeffs":[0.5,0.0,0.5]},{"kind":"linear","coeffs":[0.0,1.0]}]}"#
        );
        let back: FreeEnergyCurve = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_malformed() {
        assert!(FreeEnergyCurve::new(vec![1.0, 0.5], vec![Segment::constant(0.0); 3]).is_err());
        assert!(FreeEnergyCurve::new(vec![], vec![Segment { kind: SegmentKind::Linear, coeffs: vec![1.0] }]).is_err());
    }

    #[test]
    fn slopes_match_difference_quotients() {
        let segs = [
            Segment::power(0.1, 0.2, 0.3, 1.7),
            Segment::exp_decay(0.0, 0.5, -1.0),
            Segment::logistic(0.7, -1.0, 0.3, 0.7, 1.0),
            Segment::cosh_field(0.7, 0.5, 0.4),
        ];
        for s in segs {
            let b = 0.8;
            let d = (s.eval(b + 1e-6) - s.eval(b - 1e-6)) / 2e-6;
            assert!((d - s.slope(b)).abs() < 1e-7, "{:?}", s.kind);
        }
    }

    #[test]
    fn grid_has_expected_length() {
        assert_eq!(beta_grid(0.0, 3.0, 0.01).len(), 301);
        assert_eq!(beta_grid(0.0, 1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
