//! Small scalar solvers shared by the analytic modules.

pub const LN2: f64 = std::f64::consts::LN_2;

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Returns the midpoint of the final bracket. The caller guarantees that
/// `f(lo)` and `f(hi)` have opposite signs (or one of them is zero).
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for the minimum of a unimodal function.
/// Returns `(argmin, min)`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if b - a <= 1e-15 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let (mut x, mut v) = if fc <= fd { (c, fc) } else { (d, fd) };
    for e in [a, b] {
        let fe = f(e);
        if fe < v {
            x = e;
            v = fe;
        }
    }
    (x, v)
}

/// Minimum over `[a, b]`: a coarse scan picks the best cell, successive
/// scans shrink around it, and a golden-section pass finishes the job.
/// Robust to kinks and to a few local minima at the scale of the first scan.
pub fn scan_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, points: usize, stages: usize) -> (f64, f64) {
    let mut best = (a, f(a));
    let fb = f(b);
    if fb < best.1 {
        best = (b, fb);
    }
    let (mut lo, mut hi) = (a, b);
    for _ in 0..stages {
        if hi <= lo {
            break;
        }
        let h = (hi - lo) / points as f64;
        let mut idx = 0usize;
        let mut local = f64::INFINITY;
        for i in 0..=points {
            let x = if i == points { hi } else { lo + h * i as f64 };
            let v = f(x);
            if v < local {
                local = v;
                idx = i;
            }
            if v < best.1 {
                best = (x, v);
            }
        }
        let c = lo + h * idx as f64;
        lo = (c - h).max(a);
        hi = (c + h).min(b);
    }
    if hi > lo {
        let (x, v) = golden_min(&f, lo, hi, 200);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// `log(sum(exp(xs)))`, ignoring `-inf` entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub(crate) fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, v) = golden_min(|x| (x - 0.3).powi(2) + 1.0, -2.0, 5.0, 200);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scan_handles_kinks() {
        let (x, v) = scan_min(|x: f64| (x - 0.7).abs().sqrt(), -1.0, 3.0, 1000, 3);
        assert!(v < 1e-6, "{x} {v}");
    }

    #[test]
    fn lse_is_stable() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + LN2)).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn ln_cosh_matches_direct() {
        for x in [-3.0, -0.2, 0.0, 0.15, 2.0] {
            assert!((ln_cosh(x) - f64::cosh(x).ln()).abs() < 1e-14);
        }
        assert!((ln_cosh(800.0) - (800.0 - LN2)).abs() < 1e-9);
    }
}
