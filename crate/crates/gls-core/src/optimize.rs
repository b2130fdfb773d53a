//! One-dimensional search primitives: golden-section maximization and
//! bracketed bisection.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization on [a, b]. Returns (argmax, max).
///
/// The function need not be unimodal; on multimodal input this homes in on
/// one local maximum, so callers seed it from a grid scan.
pub fn golden_max(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, iters: usize) -> (f64, f64) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo < 1e-14 * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
    }
    let xm = 0.5 * (lo + hi);
    let fm = f(xm);
    if fm >= f1 && fm >= f2 {
        (xm, fm)
    } else if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Bisection root of f on [lo, hi]; the endpoints must straddle zero.
pub fn bisect_root(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Precondition(format!(
            "bisection bracket [{lo}, {hi}] does not straddle a root"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid.clamp(lo, hi));
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * (1.0 + lo.abs() + hi.abs()) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solve f(x) = target for strictly decreasing f, expanding the upper end of
/// the bracket geometrically from `hi0` until it straddles.
pub fn invert_decreasing(
    f: &mut dyn FnMut(f64) -> f64,
    target: f64,
    lo: f64,
    hi0: f64,
) -> Result<f64> {
    let mut hi = hi0;
    let mut tries = 0;
    while f(hi) > target {
        hi = lo + (hi - lo) * 4.0;
        tries += 1;
        if tries > 600 {
            return Err(Error::NonConvergence(format!(
                "bracket expansion for inverse at target {target} ran away (reached {hi})"
            )));
        }
    }
    bisect_root(&mut |x| f(x) - target, lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_sine_peak() {
        // near a smooth peak the argmax is only sqrt(eps)-determined
        let (x, v) = golden_max(&mut |x: f64| x.sin(), 0.0, std::f64::consts::PI, 80);
        assert!((x - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn golden_quadratic() {
        let (x, v) = golden_max(&mut |x: f64| -(x - 1.3) * (x - 1.3) + 2.0, -10.0, 10.0, 100);
        assert!((x - 1.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn bisect_cosine_root() {
        let r = bisect_root(&mut |x: f64| x.cos(), 0.0, 2.0).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn bisect_rejects_bad_bracket() {
        assert!(bisect_root(&mut |x: f64| x * x + 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn inverse_of_decreasing() {
        // f(x) = exp(-x), f^(-1)(0.01) = ln 100, bracket must expand
        let x = invert_decreasing(&mut |x: f64| (-x).exp(), 0.01, 0.0, 1.0).unwrap();
        assert!((x - 100.0f64.ln()).abs() < 1e-10);
    }
}
