//! Classification of value ladders: sequences sampled along a parameter
//! marching toward an endpoint or toward infinity, which must be judged
//! convergent, divergent, or unresolved.

use serde::Serialize;

/// Aitken delta-squared extrapolation of three consecutive terms.
/// None when the second difference vanishes (sequence already flat or linear).
pub fn aitken(s0: f64, s1: f64, s2: f64) -> Option<f64> {
    let d1 = s1 - s0;
    let d2 = s2 - s1;
    let dd = d2 - d1;
    if dd == 0.0 || !dd.is_finite() {
        return None;
    }
    let out = s2 - d2 * d2 / dd;
    out.is_finite().then_some(out)
}

/// Verdict for a ladder of nonnegative values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LadderVerdict {
    /// Values settle; `limit` is the extrapolated or final value.
    Converged { limit: f64 },
    /// Values grow without sign of settling.
    Diverging,
    /// Values neither settle to extrapolation accuracy nor grow; `last` is
    /// the deepest rung.
    Flat { last: f64 },
    /// Too little data to say anything.
    Inconclusive,
}

/// Classify a ladder of nonnegative values ordered from shallow to deep rungs.
pub fn classify_ladder(vals: &[f64]) -> LadderVerdict {
    let n = vals.len();
    if n < 3 {
        return LadderVerdict::Inconclusive;
    }
    let scale = vals.iter().copied().fold(0.0f64, f64::max).max(1e-300);

    // sustained growth on the deepest rungs
    let tail = &vals[n.saturating_sub(4)..];
    let growing = tail.windows(2).all(|w| w[1] > w[0] * 1.02 + 1e-300);
    if growing {
        let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0].max(1e-300)).collect();
        let min_r = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        // ratios bounded away from 1 and not collapsing toward 1
        if min_r > 1.2 || (min_r > 1.02 && ratios.last().unwrap() >= &(0.9 * ratios[0])) {
            return LadderVerdict::Diverging;
        }
    }

    // flat to machine-level resolution
    let d_last = (vals[n - 1] - vals[n - 2]).abs();
    if d_last <= 1e-9 * scale {
        return LadderVerdict::Converged { limit: vals[n - 1] };
    }

    // Aitken chain agreement
    if n >= 4 {
        let a1 = aitken(vals[n - 4], vals[n - 3], vals[n - 2]);
        let a2 = aitken(vals[n - 3], vals[n - 2], vals[n - 1]);
        if let (Some(a1), Some(a2)) = (a1, a2) {
            if (a1 - a2).abs() <= 1e-5 * (1.0 + a2.abs()) && a2 >= -1e-12 * scale {
                return LadderVerdict::Converged { limit: a2.max(0.0) };
            }
        }
    }

    LadderVerdict::Flat { last: vals[n - 1] }
}
