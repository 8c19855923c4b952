//! Single-level random energy models: closed forms and the one-dimensional
//! variational solver used as their reference.

use serde::{Deserialize, Serialize};

use crate::curve::{log_mix, FreeEnergyCurve, Segment};
use crate::error::{invalid, Result};
use crate::numeric::{scan_min, LN2};
use crate::rates::RateFunction;

pub use crate::curve::SegmentKind;

/// The map `f` in `H_N = N f(xi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    Identity,
    Negation,
    Scale(f64),
    Square,
}

impl Objective {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Objective::Identity => x,
            Objective::Negation => -x,
            Objective::Scale(c) => c * x,
            Objective::Square => x * x,
        }
    }
}

/// Orientation of the Hamiltonian relative to the driving variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_int(s: i64) -> Result<Sign> {
        match s {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(invalid("sign", "must be +1 or -1")),
        }
    }
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
    pub fn objective(self) -> Objective {
        match self {
            Sign::Plus => Objective::Identity,
            Sign::Minus => Objective::Negation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncKind {
    Exp,
    Gauss,
}

/// `log 2 - inf { beta f(x) + I(x) : I(x) <= log 2 }`.
pub fn rem_variational(rf: &RateFunction, f: Objective, beta: f64) -> f64 {
    let (lo, hi) = rf.level_set(LN2).expect("level set of a rate at log 2 is never empty");
    let g = |x: f64| beta * f.apply(x) + rf.eval(x);
    let (_, mut v) = scan_min(g, lo, hi, 1000, 3);
    let m = rf.argmin();
    if m >= lo && m <= hi {
        v = v.min(g(m));
    }
    LN2 - v
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && !beta.is_nan() {
        Ok(())
    } else {
        Err(invalid("beta", "must be >= 0"))
    }
}

pub fn rem_gaussian(beta: f64) -> f64 {
    let bc = (2.0 * LN2).sqrt();
    if beta < bc {
        LN2 + 0.5 * beta * beta
    } else {
        beta * bc
    }
}

pub fn rem_exponential(beta: f64) -> f64 {
    if beta < 1.0 {
        LN2
    } else {
        beta * LN2
    }
}

/// Freezing point of the power family with exponent `gamma`.
pub fn weibull_threshold(gamma: f64) -> f64 {
    if gamma > 1.0 {
        (gamma * LN2).powf((gamma - 1.0) / gamma)
    } else {
        gamma.powf(-1.0 / gamma) * LN2.powf(-(1.0 - gamma) / gamma)
    }
}

pub fn rem_weibull(gamma: f64, beta: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(invalid("gamma", "must be a finite number > 0"));
    }
    check_beta(beta)?;
    let edge = (gamma * LN2).powf(1.0 / gamma);
    let t = weibull_threshold(gamma);
    Ok(if beta >= t {
        beta * edge
    } else if gamma > 1.0 {
        LN2 + (gamma - 1.0) / gamma * beta.powf(gamma / (gamma - 1.0))
    } else {
        LN2
    })
}

pub fn rem_poisson(theta: f64, sign: Sign, beta: f64) -> Result<f64> {
    Ok(RemModel::Poisson { theta, sign }.curve()?.unwrap().eval(check_beta(beta).map(|_| beta)?))
}

pub fn rem_binomial(p: f64, sign: Sign, beta: f64) -> Result<f64> {
    Ok(RemModel::Binomial { p, sign }.curve()?.unwrap().eval(check_beta(beta).map(|_| beta)?))
}

/// Compactly supported driving laws whose support reaches `alpha`.
pub fn annealed_compact(alpha: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        LN2
    } else {
        LN2 + alpha * beta
    }
}

pub fn rem_truncated(kind: TruncKind, alpha: f64, beta: f64) -> Result<f64> {
    Ok(RemModel::truncated(kind, alpha).curve()?.unwrap().eval(check_beta(beta).map(|_| beta)?))
}

/// A single-level model with one of the supported driving families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum RemModel {
    Gaussian,
    Exponential,
    Weibull { gamma: f64 },
    Poisson { theta: f64, sign: Sign },
    Binomial { p: f64, sign: Sign },
    Compact { alpha: f64 },
    TruncatedExp { alpha: f64 },
    TruncatedGauss { alpha: f64 },
    Rate { rate: RateFunction, objective: Objective },
}

impl RemModel {
    pub fn truncated(kind: TruncKind, alpha: f64) -> RemModel {
        match kind {
            TruncKind::Exp => RemModel::TruncatedExp { alpha },
            TruncKind::Gauss => RemModel::TruncatedGauss { alpha },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RemModel::Weibull { gamma } => RateFunction::power_gamma(*gamma).map(|_| ()),
            RemModel::Poisson { theta, .. } => RateFunction::poisson(*theta).map(|_| ()),
            RemModel::Binomial { p, .. } => RateFunction::binomial(*p).map(|_| ()),
            RemModel::Compact { alpha } => {
                if *alpha >= 0.0 {
                    Ok(())
                } else {
                    Err(invalid("alpha", "must be >= 0"))
                }
            }
            RemModel::TruncatedExp { alpha } | RemModel::TruncatedGauss { alpha } => {
                if *alpha > 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("alpha", "must be a finite number > 0"))
                }
            }
            RemModel::Rate { rate, .. } => rate.validate(),
            _ => Ok(()),
        }
    }

    /// Rate function and Hamiltonian map, when the model has one.
    pub fn rate_and_objective(&self) -> Option<(RateFunction, Objective)> {
        let id = Objective::Identity;
        Some(match self {
            RemModel::Gaussian => (RateFunction::Gaussian, id),
            RemModel::Exponential => (RateFunction::TwoSidedExponential, id),
            RemModel::Weibull { gamma } => (RateFunction::PowerGamma { gamma: *gamma }, id),
            RemModel::Poisson { theta, sign } => (RateFunction::Poisson { theta: *theta }, sign.objective()),
            RemModel::Binomial { p, sign } => (RateFunction::Binomial { p: *p }, sign.objective()),
            RemModel::Compact { .. } => return None,
            RemModel::TruncatedExp { alpha } => (
                RateFunction::Truncated { inner: Box::new(RateFunction::TwoSidedExponential), half_width: *alpha },
                id,
            ),
            RemModel::TruncatedGauss { alpha } => (
                RateFunction::Truncated { inner: Box::new(RateFunction::Gaussian), half_width: (2.0 * alpha).sqrt() },
                id,
            ),
            RemModel::Rate { rate, objective } => (rate.clone(), *objective),
        })
    }

    /// Closed-form curve; `None` for the generic rate model.
    pub fn curve(&self) -> Result<Option<FreeEnergyCurve>> {
        self.validate()?;
        let curve = match self {
            RemModel::Gaussian => {
                let bc = (2.0 * LN2).sqrt();
                FreeEnergyCurve::new(vec![bc], vec![Segment::quadratic(LN2, 0.0, 0.5), Segment::linear(0.0, bc)])?
            }
            RemModel::Exponential => {
                FreeEnergyCurve::new(vec![1.0], vec![Segment::constant(LN2), Segment::linear(0.0, LN2)])?
            }
            RemModel::Weibull { gamma } => {
                let g = *gamma;
                let t = weibull_threshold(g);
                let edge = (g * LN2).powf(1.0 / g);
                let first = if g > 1.0 {
                    Segment::power(LN2, 0.0, (g - 1.0) / g, g / (g - 1.0))
                } else {
                    Segment::constant(LN2)
                };
                FreeEnergyCurve::new(vec![t], vec![first, Segment::linear(0.0, edge)])?
            }
            RemModel::Poisson { theta, sign } => {
                let th = *theta;
                let rf = RateFunction::Poisson { theta: th };
                let (x1, x2) = rf.level_set(LN2).unwrap();
                match sign {
                    Sign::Plus if th <= LN2 => FreeEnergyCurve::single(Segment::exp_decay(LN2 - th, th, -1.0)),
                    Sign::Plus => FreeEnergyCurve::new(
                        vec![(th / x1).ln()],
                        vec![Segment::exp_decay(LN2 - th, th, -1.0), Segment::linear(0.0, -x1)],
                    )?,
                    Sign::Minus => FreeEnergyCurve::new(
                        vec![(x2 / th).ln()],
                        vec![Segment::exp_decay(LN2 - th, th, 1.0), Segment::linear(0.0, x2)],
                    )?,
                }
            }
            RemModel::Binomial { p, sign } => {
                let p = *p;
                let (x1, x2) = RateFunction::Binomial { p }.level_set(LN2).unwrap();
                match sign {
                    Sign::Plus => {
                        let first = Segment::logistic(LN2, 0.0, 1.0 - p, p, -1.0);
                        if p <= 0.5 || x1 <= 0.0 {
                            FreeEnergyCurve::single(first)
                        } else {
                            let b0 = (p * (1.0 - x1) / ((1.0 - p) * x1)).ln();
                            FreeEnergyCurve::new(vec![b0], vec![first, Segment::linear(0.0, -x1)])?
                        }
                    }
                    Sign::Minus => {
                        let first = Segment::logistic(LN2, 0.0, 1.0 - p, p, 1.0);
                        if p >= 0.5 || x2 >= 1.0 {
                            FreeEnergyCurve::single(first)
                        } else {
                            let b1 = (x2 * (1.0 - p) / (p * (1.0 - x2))).ln();
                            FreeEnergyCurve::new(vec![b1], vec![first, Segment::linear(0.0, x2)])?
                        }
                    }
                }
            }
            RemModel::Compact { alpha } => FreeEnergyCurve::single(Segment::linear(LN2, *alpha)),
            RemModel::TruncatedExp { alpha } => {
                if *alpha >= LN2 {
                    return RemModel::Exponential.curve();
                }
                FreeEnergyCurve::new(vec![1.0], vec![Segment::constant(LN2), Segment::linear(LN2 - alpha, *alpha)])?
            }
            RemModel::TruncatedGauss { alpha } => {
                if *alpha >= LN2 {
                    return RemModel::Gaussian.curve();
                }
                let w = (2.0 * alpha).sqrt();
                FreeEnergyCurve::new(vec![w], vec![Segment::quadratic(LN2, 0.0, 0.5), Segment::linear(LN2 - alpha, w)])?
            }
            RemModel::Rate { .. } => return Ok(None),
        };
        Ok(Some(curve))
    }

    /// Limiting free energy at `beta`.
    pub fn energy(&self, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        self.validate()?;
        Ok(match self {
            RemModel::Gaussian => rem_gaussian(beta),
            RemModel::Exponential => rem_exponential(beta),
            RemModel::Weibull { gamma } => rem_weibull(*gamma, beta)?,
            RemModel::Poisson { theta, sign } => poisson_direct(*theta, *sign, beta),
            RemModel::Binomial { p, sign } => binomial_direct(*p, *sign, beta),
            RemModel::Compact { alpha } => annealed_compact(*alpha, beta),
            RemModel::TruncatedExp { alpha } => {
                if *alpha >= LN2 {
                    rem_exponential(beta)
                } else if beta <= 1.0 {
                    LN2
                } else {
                    LN2 - alpha + beta * alpha
                }
            }
            RemModel::TruncatedGauss { alpha } => {
                let w = (2.0 * alpha).sqrt();
                if *alpha >= LN2 {
                    rem_gaussian(beta)
                } else if beta <= w {
                    LN2 + 0.5 * beta * beta
                } else {
                    LN2 - alpha + beta * w
                }
            }
            RemModel::Rate { rate, objective } => rem_variational(rate, *objective, beta),
        })
    }
}

fn poisson_direct(theta: f64, sign: Sign, beta: f64) -> f64 {
    let (x1, x2) = RateFunction::Poisson { theta }.level_set(LN2).unwrap();
    match sign {
        Sign::Plus => {
            if theta <= LN2 || theta * (-beta).exp() >= x1 {
                LN2 - theta + theta * (-beta).exp()
            } else {
                -beta * x1
            }
        }
        Sign::Minus => {
            if theta * beta.exp() <= x2 {
                LN2 - theta + theta * beta.exp()
            } else {
                beta * x2
            }
        }
    }
}

fn binomial_direct(p: f64, sign: Sign, beta: f64) -> f64 {
    let (x1, x2) = RateFunction::Binomial { p }.level_set(LN2).unwrap();
    match sign {
        Sign::Plus => {
            let xbar = p / (p + (1.0 - p) * beta.exp());
            if p <= 0.5 || xbar >= x1 {
                LN2 + log_mix(1.0 - p, p, -beta)
            } else {
                -beta * x1
            }
        }
        Sign::Minus => {
            let xlow = p / (p + (1.0 - p) * (-beta).exp());
            if p >= 0.5 || xlow <= x2 {
                LN2 + log_mix(1.0 - p, p, beta)
            } else {
                beta * x2
            }
        }
    }
}

/// Curve for a model; the generic rate model has none.
pub fn build_rem_curve(model: &RemModel) -> Result<Option<FreeEnergyCurve>> {
    model.curve()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn variational_examples() {
        assert!(close(rem_variational(&RateFunction::Gaussian, Objective::Identity, 0.0), 0.693147, 1e-6));
        assert!(close(rem_variational(&RateFunction::Gaussian, Objective::Identity, 1.0), 1.193147, 1e-6));
        assert!(close(rem_variational(&RateFunction::TwoSidedExponential, Objective::Identity, 2.0), 1.386294, 1e-6));
    }

    #[test]
    fn gaussian_examples() {
        assert!(close(rem_gaussian(0.0), 0.693147, 1e-6));
        assert!(close(rem_gaussian(1.0), 1.193147, 1e-6));
        assert!(close(rem_gaussian(2.0), 2.354821, 1e-6));
    }

    #[test]
    fn weibull_examples() {
        assert!(close(rem_weibull(3.0, 1.0).unwrap(), 1.359814, 1e-6));
        assert!(close(rem_weibull(1.0, 0.5).unwrap(), 0.693147, 1e-6));
        assert!(rem_weibull(0.0, 1.0).is_err());
        assert!(rem_weibull(-1.0, 1.0).is_err());
        for b in [0.0, 0.3, 1.0, 1.5, 4.0] {
            assert!(close(rem_weibull(2.0, b).unwrap(), rem_gaussian(b), 1e-14));
            assert!(close(rem_weibull(1.0, b).unwrap(), rem_exponential(b), 1e-14));
        }
        let t = weibull_threshold(0.5);
        assert!(close(t, 0.5f64.powf(-2.0) * LN2.powf(-1.0), 1e-12));
        assert_eq!(rem_weibull(0.5, 0.99 * t).unwrap(), LN2);
        let v = rem_variational(&RateFunction::PowerGamma { gamma: 0.5 }, Objective::Identity, 0.99 * t);
        assert!(close(v, LN2, 1e-8));
        let v = rem_variational(&RateFunction::PowerGamma { gamma: 0.5 }, Objective::Identity, 1.01 * t);
        assert!(v > LN2 + 1e-4);
    }

    #[test]
    fn poisson_examples() {
        assert!(close(rem_poisson(0.5, Sign::Plus, 1.0).unwrap(), 0.377087, 1e-6));
        assert!(close(rem_poisson(0.5, Sign::Plus, 0.0).unwrap(), LN2, 1e-15));
        let oracle = rem_variational(&RateFunction::Poisson { theta: 1.0 }, Objective::Identity, 3.0);
        assert!(close(rem_poisson(1.0, Sign::Plus, 3.0).unwrap(), oracle, 1e-8));
        assert!(rem_poisson(0.0, Sign::Plus, 1.0).is_err());
    }

    #[test]
    fn binomial_examples() {
        assert!(close(rem_binomial(0.5, Sign::Plus, 1.0).unwrap(), 0.313262, 1e-6));
        assert!(close(rem_binomial(0.3, Sign::Minus, 0.0).unwrap(), LN2, 1e-15));
        let x1 = RateFunction::Binomial { p: 0.7 }.level_set(LN2).unwrap().0;
        let d = rem_binomial(0.7, Sign::Plus, 41.0).unwrap() - rem_binomial(0.7, Sign::Plus, 40.0).unwrap();
        assert!(close(d, -x1, 1e-12));
        let oracle = rem_variational(&RateFunction::Binomial { p: 0.7 }, Objective::Identity, 40.0);
        assert!(close(rem_binomial(0.7, Sign::Plus, 40.0).unwrap(), oracle, 1e-7));
        assert!(rem_binomial(1.0, Sign::Plus, 1.0).is_err());
    }

    #[test]
    fn compact_and_truncated_examples() {
        assert!(close(annealed_compact(0.0, 5.0), 0.693147, 1e-6));
        assert!(close(annealed_compact(1.0, 1.0), 1.693147, 1e-6));
        assert_eq!(annealed_compact(f64::INFINITY, 1.0), f64::INFINITY);
        assert_eq!(annealed_compact(f64::INFINITY, 0.0), LN2);
        assert!(close(rem_truncated(TruncKind::Exp, 1.0, 0.5).unwrap(), 0.693147, 1e-6));
        assert!(close(rem_truncated(TruncKind::Exp, 0.5, 2.0).unwrap(), 1.193147, 1e-6));
        assert!(close(rem_truncated(TruncKind::Gauss, 0.5, 2.0).unwrap(), 2.193147, 1e-6));
    }

    #[test]
    fn curve_shapes() {
        let g = build_rem_curve(&RemModel::Gaussian).unwrap().unwrap();
        assert_eq!(g.breakpoints.len(), 1);
        assert!(close(g.breakpoints[0], 1.177410, 1e-6));
        assert_eq!(g.kinds(), vec![SegmentKind::Quadratic, SegmentKind::Linear]);
        let e = build_rem_curve(&RemModel::Exponential).unwrap().unwrap();
        assert_eq!(e.breakpoints, vec![1.0]);
        assert_eq!(e.kinds(), vec![SegmentKind::Constant, SegmentKind::Linear]);
        let p = build_rem_curve(&RemModel::Poisson { theta: 0.5, sign: Sign::Plus }).unwrap().unwrap();
        assert!(p.breakpoints.is_empty());
        assert_eq!(p.kinds(), vec![SegmentKind::ExpDecay]);
        assert!(build_rem_curve(&RemModel::Rate { rate: RateFunction::Gaussian, objective: Objective::Identity })
            .unwrap()
            .is_none());
    }

    #[test]
    fn curve_agrees_with_scalar_forms() {
        let models = vec![
            RemModel::Gaussian,
            RemModel::Exponential,
            RemModel::Weibull { gamma: 0.6 },
            RemModel::Weibull { gamma: 2.7 },
            RemModel::Poisson { theta: 2.0, sign: Sign::Plus },
            RemModel::Poisson { theta: 0.4, sign: Sign::Minus },
            RemModel::Binomial { p: 0.8, sign: Sign::Plus },
            RemModel::Binomial { p: 0.2, sign: Sign::Minus },
            RemModel::Binomial { p: 0.2, sign: Sign::Plus },
            RemModel::TruncatedExp { alpha: 0.3 },
            RemModel::TruncatedGauss { alpha: 0.3 },
        ];
        for m in models {
            let c = m.curve().unwrap().unwrap();
            for i in 0..=5000 {
                let b = i as f64 * 1e-3;
                assert!(close(c.eval(b), m.energy(b).unwrap(), 1e-12), "{m:?} {b}");
            }
            assert!(c.max_jump() < 1e-12, "{m:?}");
        }
    }
}
