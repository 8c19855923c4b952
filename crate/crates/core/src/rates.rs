//! Driving-distribution families, their large-deviation rate functions and
//! exact samplers at particle number N.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::bisect;

/// A large-deviation rate function `I : R -> [0, inf]`.
///
/// Values outside the effective domain are `f64::INFINITY`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateDescriptor", into = "RateDescriptor")]
pub enum RateFunction {
    /// `x^2 / 2`
    Gaussian,
    /// `|x|`
    TwoSidedExponential,
    /// `|x|^gamma / gamma`
    PowerGamma { gamma: f64 },
    /// `theta - x + x log(x / theta)` on `x >= 0`
    Poisson { theta: f64 },
    /// relative entropy of Bernoulli(x) w.r.t. Bernoulli(p) on `[0, 1]`
    Binomial { p: f64 },
    /// `x -> inner(-x)`
    Negated(Box<RateFunction>),
    /// `inner` on `[-half_width, half_width]`, infinite outside
    Truncated {
        inner: Box<RateFunction>,
        half_width: f64,
    },
    /// `left` on `x < 0`, `right` on `x >= 0`
    PiecewiseHalf {
        left: Box<RateFunction>,
        right: Box<RateFunction>,
    },
}

/// JSON form of a rate function: `{"family": .., "params": [..]}`, with
/// nested descriptors under `inner` for the composite families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateDescriptor {
    pub family: String,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inner: Vec<RateDescriptor>,
}

fn xlogx_over(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / q).ln()
    }
}

impl RateFunction {
    pub fn power_gamma(gamma: f64) -> Result<Self> {
        let r = RateFunction::PowerGamma { gamma };
        r.validate()?;
        Ok(r)
    }

    pub fn poisson(theta: f64) -> Result<Self> {
        let r = RateFunction::Poisson { theta };
        r.validate()?;
        Ok(r)
    }

    pub fn binomial(p: f64) -> Result<Self> {
        let r = RateFunction::Binomial { p };
        r.validate()?;
        Ok(r)
    }

    pub fn negated(inner: RateFunction) -> Self {
        RateFunction::Negated(Box::new(inner))
    }

    pub fn truncated(inner: RateFunction, half_width: f64) -> Result<Self> {
        let r = RateFunction::Truncated {
            inner: Box::new(inner),
            half_width,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn piecewise(left: RateFunction, right: RateFunction) -> Result<Self> {
        let r = RateFunction::PiecewiseHalf {
            left: Box::new(left),
            right: Box::new(right),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RateFunction::Gaussian | RateFunction::TwoSidedExponential => Ok(()),
            RateFunction::PowerGamma { gamma } => {
                if gamma.is_finite() && *gamma > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("gamma", "must be a finite number > 0"))
                }
            }
            RateFunction::Poisson { theta } => {
                if theta.is_finite() && *theta > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("theta", "must be a finite number > 0"))
                }
            }
            RateFunction::Binomial { p } => {
                if *p > 0.0 && *p < 1.0 {
                    Ok(())
                } else {
                    Err(invalid("prob", "must lie in (0, 1)"))
                }
            }
            RateFunction::Negated(inner) => inner.validate(),
            RateFunction::Truncated { inner, half_width } => {
                inner.validate()?;
                if !(*half_width > 0.0) {
                    return Err(invalid("alpha", "truncation half-width must be > 0"));
                }
                if inner.argmin().abs() > *half_width {
                    return Err(invalid("alpha", "truncation window excludes the zero of the rate"));
                }
                Ok(())
            }
            RateFunction::PiecewiseHalf { left, right } => {
                left.validate()?;
                right.validate()?;
                if left.argmin() != 0.0 || right.argmin() != 0.0 {
                    return Err(invalid("family", "piecewise halves must both vanish at 0"));
                }
                Ok(())
            }
        }
    }

    /// `I(x)`, `+inf` outside the effective domain.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            RateFunction::Gaussian => 0.5 * x * x,
            RateFunction::TwoSidedExponential => x.abs(),
            RateFunction::PowerGamma { gamma } => x.abs().powf(*gamma) / gamma,
            RateFunction::Poisson { theta } => {
                if x < 0.0 {
                    f64::INFINITY
                } else {
                    theta - x + xlogx_over(x, *theta)
                }
            }
            RateFunction::Binomial { p } => {
                if !(0.0..=1.0).contains(&x) {
                    f64::INFINITY
                } else {
                    xlogx_over(x, *p) + xlogx_over(1.0 - x, 1.0 - p)
                }
            }
            RateFunction::Negated(inner) => inner.eval(-x),
            RateFunction::Truncated { inner, half_width } => {
                if x.abs() <= *half_width {
                    inner.eval(x)
                } else {
                    f64::INFINITY
                }
            }
            RateFunction::PiecewiseHalf { left, right } => {
                if x < 0.0 {
                    left.eval(x)
                } else {
                    right.eval(x)
                }
            }
        }
    }

    /// The (unique) zero of the rate, which is also the mean of the law.
    pub fn argmin(&self) -> f64 {
        match self {
            RateFunction::Gaussian
            | RateFunction::TwoSidedExponential
            | RateFunction::PowerGamma { .. }
            | RateFunction::PiecewiseHalf { .. } => 0.0,
            RateFunction::Poisson { theta } => *theta,
            RateFunction::Binomial { p } => *p,
            RateFunction::Negated(inner) => -inner.argmin(),
            RateFunction::Truncated { inner, .. } => inner.argmin(),
        }
    }

    /// Closed hull of the effective domain.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            RateFunction::Gaussian
            | RateFunction::TwoSidedExponential
            | RateFunction::PowerGamma { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            RateFunction::Poisson { .. } => (0.0, f64::INFINITY),
            RateFunction::Binomial { .. } => (0.0, 1.0),
            RateFunction::Negated(inner) => {
                let (lo, hi) = inner.domain();
                (-hi, -lo)
            }
            RateFunction::Truncated { inner, half_width } => {
                let (lo, hi) = inner.domain();
                (lo.max(-half_width), hi.min(*half_width))
            }
            RateFunction::PiecewiseHalf { left, right } => (left.domain().0, right.domain().1),
        }
    }

    /// The sublevel set `{x : I(x) <= c}` as a closed interval, or `None`
    /// when `c < 0` (the set is empty).
    pub fn level_set(&self, c: f64) -> Option<(f64, f64)> {
        if c.is_nan() || c < 0.0 {
            return None;
        }
        let out = match self {
            RateFunction::Gaussian => {
                let r = (2.0 * c).sqrt();
                (-r, r)
            }
            RateFunction::TwoSidedExponential => (-c, c),
            RateFunction::PowerGamma { gamma } => {
                let r = (gamma * c).powf(1.0 / gamma);
                (-r, r)
            }
            RateFunction::Negated(inner) => {
                let (lo, hi) = inner.level_set(c)?;
                (-hi, -lo)
            }
            RateFunction::Truncated { inner, half_width } => {
                let (lo, hi) = inner.level_set(c)?;
                (lo.max(-half_width), hi.min(*half_width))
            }
            RateFunction::PiecewiseHalf { left, right } => {
                (left.level_set(c)?.0.min(0.0), right.level_set(c)?.1.max(0.0))
            }
            RateFunction::Poisson { .. } | RateFunction::Binomial { .. } => {
                (self.side_root(c, -1.0), self.side_root(c, 1.0))
            }
        };
        Some(out)
    }

    // Edge of the sublevel set on one side of the zero, by bisection on the
    // monotone branch.
    fn side_root(&self, c: f64, dir: f64) -> f64 {
        let m = self.argmin();
        let (dlo, dhi) = self.domain();
        let edge = if dir < 0.0 { dlo } else { dhi };
        if edge.is_finite() {
            if self.eval(edge) <= c {
                return edge;
            }
            return bisect(|x| self.eval(x) - c, m, edge, 1e-14);
        }
        let mut step = 1.0f64.max(m.abs());
        let mut far = m + dir * step;
        while self.eval(far) <= c {
            step *= 2.0;
            far = m + dir * step;
        }
        bisect(|x| self.eval(x) - c, m, far, 1e-14)
    }

    /// `inf { I(x) : lo <= x <= hi }` using the U shape of the rate.
    pub fn inf_on(&self, lo: f64, hi: f64) -> f64 {
        let (dlo, dhi) = self.domain();
        let (lo, hi) = (lo.max(dlo), hi.min(dhi));
        if lo > hi {
            return f64::INFINITY;
        }
        let m = self.argmin();
        if lo <= m && m <= hi {
            0.0
        } else {
            self.eval(lo).min(self.eval(hi))
        }
    }

    pub fn descriptor(&self) -> RateDescriptor {
        let leaf = |family: &str, params: Vec<f64>| RateDescriptor {
            family: family.to_string(),
            params,
            inner: vec![],
        };
        match self {
            RateFunction::Gaussian => leaf("gaussian", vec![]),
            RateFunction::TwoSidedExponential => leaf("two-sided-exponential", vec![]),
            RateFunction::PowerGamma { gamma } => leaf("power-gamma", vec![*gamma]),
            RateFunction::Poisson { theta } => leaf("poisson", vec![*theta]),
            RateFunction::Binomial { p } => leaf("binomial", vec![*p]),
            RateFunction::Negated(inner) => RateDescriptor {
                family: "negated".into(),
                params: vec![],
                inner: vec![inner.descriptor()],
            },
            RateFunction::Truncated { inner, half_width } => RateDescriptor {
                family: "truncated".into(),
                params: vec![*half_width],
                inner: vec![inner.descriptor()],
            },
            RateFunction::PiecewiseHalf { left, right } => RateDescriptor {
                family: "piecewise-half".into(),
                params: vec![],
                inner: vec![left.descriptor(), right.descriptor()],
            },
        }
    }

    pub fn from_descriptor(d: &RateDescriptor) -> Result<Self> {
        let param = |i: usize| -> Result<f64> {
            d.params
                .get(i)
                .copied()
                .ok_or_else(|| invalid("params", format!("family `{}` needs parameter {}", d.family, i + 1)))
        };
        let child = |i: usize| -> Result<RateFunction> {
            let c = d
                .inner
                .get(i)
                .ok_or_else(|| invalid("inner", format!("family `{}` needs an inner descriptor", d.family)))?;
            RateFunction::from_descriptor(c)
        };
        let r = match d.family.as_str() {
            "gaussian" => RateFunction::Gaussian,
            "two-sided-exponential" | "exponential" => RateFunction::TwoSidedExponential,
            "power-gamma" => RateFunction::PowerGamma { gamma: param(0)? },
            "poisson" => RateFunction::Poisson { theta: param(0)? },
            "binomial" => RateFunction::Binomial { p: param(0)? },
            "negated" => RateFunction::Negated(Box::new(child(0)?)),
            "truncated" => RateFunction::Truncated {
                inner: Box::new(child(0)?),
                half_width: param(0)?,
            },
            "piecewise-half" => RateFunction::PiecewiseHalf {
                left: Box::new(child(0)?),
                right: Box::new(child(1)?),
            },
            other => return Err(invalid("family", format!("unknown rate family `{other}`"))),
        };
        r.validate()?;
        Ok(r)
    }
}

impl TryFrom<RateDescriptor> for RateFunction {
    type Error = Error;
    fn try_from(d: RateDescriptor) -> Result<Self> {
        RateFunction::from_descriptor(&d)
    }
}

impl From<RateFunction> for RateDescriptor {
    fn from(r: RateFunction) -> Self {
        r.descriptor()
    }
}

/// The law of one node variable at particle number `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DrivingDistribution {
    rate: RateFunction,
    n: u32,
}

impl DrivingDistribution {
    pub fn new(rate: RateFunction, n: u32) -> Result<Self> {
        rate.validate()?;
        if n == 0 {
            return Err(invalid("N", "particle number must be >= 1"));
        }
        check_samplable(&rate)?;
        Ok(DrivingDistribution { rate, n })
    }

    pub fn rate_of(&self) -> &RateFunction {
        &self.rate
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// One draw of the node variable at its natural (extensive) scale, i.e.
    /// the value entering the Hamiltonian. For the power family this has
    /// density proportional to `exp(-|x|^g / (g N^(g-1)))`.
    pub fn sample_node<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        node_draw(&self.rate, self.n as f64, rng)
    }

    /// One draw from `lambda_N`, the law whose large deviations are governed
    /// by the rate function (node value divided by N).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_node(rng) / self.n as f64
    }
}

fn check_samplable(rate: &RateFunction) -> Result<()> {
    match rate {
        RateFunction::Negated(inner) => check_samplable(inner),
        RateFunction::Truncated { inner, .. } => match **inner {
            RateFunction::Gaussian | RateFunction::TwoSidedExponential | RateFunction::PowerGamma { .. } => Ok(()),
            _ => Err(Error::Unsupported(
                "truncation is samplable only for symmetric gaussian/exponential/power families".into(),
            )),
        },
        RateFunction::PiecewiseHalf { left, right } => {
            check_samplable(left)?;
            check_samplable(right)
        }
        _ => Ok(()),
    }
}

fn sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn power_magnitude<R: Rng + ?Sized>(gamma: f64, n: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(1.0 / gamma, gamma * n.powf(gamma - 1.0)).expect("validated shape/scale");
    let v: f64 = g.sample(rng);
    v.powf(1.0 / gamma)
}

fn node_draw<R: Rng + ?Sized>(rate: &RateFunction, n: f64, rng: &mut R) -> f64 {
    match rate {
        RateFunction::Gaussian => {
            let z: f64 = StandardNormal.sample(rng);
            z * n.sqrt()
        }
        RateFunction::TwoSidedExponential => {
            let e: f64 = Exp1.sample(rng);
            sign(rng) * e
        }
        RateFunction::PowerGamma { gamma } => {
            let m = power_magnitude(*gamma, n, rng);
            sign(rng) * m
        }
        RateFunction::Poisson { theta } => Poisson::new(n * theta).expect("validated").sample(rng),
        RateFunction::Binomial { p } => Binomial::new(n as u64, *p).expect("validated").sample(rng) as f64,
        RateFunction::Negated(inner) => -node_draw(inner, n, rng),
        RateFunction::Truncated { inner, half_width } => {
            let edge = half_width * n;
            match **inner {
                RateFunction::TwoSidedExponential => {
                    let u: f64 = rng.random();
                    let m = -(u * (-edge).exp_m1()).ln_1p();
                    sign(rng) * m.min(edge)
                }
                RateFunction::Gaussian if half_width * n.sqrt() <= 1.0 => loop {
                    let x = edge * (2.0 * rng.random::<f64>() - 1.0);
                    if rng.random::<f64>() < (-0.5 * x * x / n).exp() {
                        break x;
                    }
                },
                _ => loop {
                    let x = node_draw(inner, n, rng);
                    if x.abs() <= edge {
                        break x;
                    }
                },
            }
        }
        RateFunction::PiecewiseHalf { left, right } => {
            if rng.random::<bool>() {
                node_draw(right, n, rng).abs()
            } else {
                -node_draw(left, n, rng).abs()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::LN2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eval_examples() {
        assert_eq!(RateFunction::Gaussian.eval(1.0), 0.5);
        assert_eq!(RateFunction::TwoSidedExponential.eval(0.0), 0.0);
        assert_eq!(RateFunction::Poisson { theta: 0.5 }.eval(0.5), 0.0);
        assert_eq!(RateFunction::Poisson { theta: 0.5 }.eval(0.0), 0.5);
        assert_eq!(RateFunction::Poisson { theta: 0.5 }.eval(-0.1), f64::INFINITY);
        assert_eq!(RateFunction::Binomial { p: 0.3 }.eval(1.2), f64::INFINITY);
    }

    #[test]
    fn level_set_examples() {
        let (lo, hi) = RateFunction::Gaussian.level_set(LN2).unwrap();
        assert!(close(lo, -1.177410, 1e-6) && close(hi, 1.177410, 1e-6));
        let (lo, hi) = RateFunction::TwoSidedExponential.level_set(LN2).unwrap();
        assert!(close(lo, -0.693147, 1e-6) && close(hi, 0.693147, 1e-6));
        let (lo, hi) = RateFunction::Binomial { p: 0.5 }.level_set(LN2).unwrap();
        assert!(close(lo, 0.0, 1e-9) && close(hi, 1.0, 1e-9), "{lo} {hi}");
        assert!(RateFunction::Gaussian.level_set(-1.0).is_none());
    }

    #[test]
    fn poisson_level_set_edges_solve_the_equation() {
        let r = RateFunction::Poisson { theta: 2.0 };
        let (lo, hi) = r.level_set(LN2).unwrap();
        assert!(lo > 0.0 && hi > 2.0);
        assert!(close(r.eval(lo), LN2, 1e-12));
        assert!(close(r.eval(hi), LN2, 1e-12));
        let small = RateFunction::Poisson { theta: 0.5 };
        assert_eq!(small.level_set(LN2).unwrap().0, 0.0);
    }

    #[test]
    fn composite_families() {
        let neg = RateFunction::negated(RateFunction::Poisson { theta: 1.0 });
        assert_eq!(neg.eval(-2.0), RateFunction::Poisson { theta: 1.0 }.eval(2.0));
        let t = RateFunction::truncated(RateFunction::TwoSidedExponential, 0.4).unwrap();
        assert_eq!(t.eval(0.3), 0.3);
        assert_eq!(t.eval(0.41), f64::INFINITY);
        assert_eq!(t.level_set(LN2).unwrap(), (-0.4, 0.4));
        let hyb = RateFunction::piecewise(RateFunction::TwoSidedExponential, RateFunction::Gaussian).unwrap();
        let (lo, hi) = hyb.level_set(LN2).unwrap();
        assert!(close(lo, -LN2, 1e-15) && close(hi, (2.0 * LN2).sqrt(), 1e-15));
        assert!(RateFunction::truncated(RateFunction::Poisson { theta: 2.0 }, 1.0).is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        let r = RateFunction::piecewise(
            RateFunction::Gaussian,
            RateFunction::truncated(RateFunction::TwoSidedExponential, 2.0).unwrap(),
        )
        .unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: RateFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(r, back);
        let p: RateFunction = serde_json::from_str(r#"{"family":"poisson","params":[0.5]}"#).unwrap();
        assert_eq!(p, RateFunction::Poisson { theta: 0.5 });
        assert!(serde_json::from_str::<RateFunction>(r#"{"family":"cauchy","params":[]}"#).is_err());
        assert!(serde_json::from_str::<RateFunction>(r#"{"family":"binomial","params":[1.5]}"#).is_err());
    }

    #[test]
    fn gaussian_sample_variance_at_rate_scale() {
        let d = DrivingDistribution::new(RateFunction::Gaussian, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..m {
            let x = d.sample(&mut rng);
            s += x;
            s2 += x * x;
        }
        let mean = s / m as f64;
        let var = s2 / m as f64 - mean * mean;
        assert!((var / 0.25 - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn truncated_samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for inner in [RateFunction::TwoSidedExponential, RateFunction::Gaussian] {
            for w in [0.05, 0.3, 2.0] {
                let d = DrivingDistribution::new(RateFunction::truncated(inner.clone(), w).unwrap(), 10).unwrap();
                for _ in 0..2000 {
                    assert!(d.sample(&mut rng).abs() <= w + 1e-12);
                }
            }
        }
    }
}
