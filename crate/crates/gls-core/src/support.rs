//! Exponent intervals (a, b) with b possibly infinite, and the standard probe
//! grids and endpoint ladders used by every supremum engine in the crate.

use crate::error::{Error, Result};
use serde::ser::{Serialize, Serializer};

/// Upper exponent bound: a finite real or the distinguished infinity.
/// Serializes as a number, or as the string "inf"; never as a float infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extent {
    Finite(f64),
    Infinite,
}

impl Extent {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extent::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Extent::Finite(v) => Some(*v),
            Extent::Infinite => None,
        }
    }
}

impl Serialize for Extent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extent::Finite(v) => s.serialize_f64(*v),
            Extent::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Open exponent interval (a, b), a >= 1, b > a (possibly infinite).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExponentInterval {
    pub a: f64,
    pub b: Extent,
}

/// Offsets for endpoint ladders, shallow to deep, as fractions of the scale.
pub const LADDER_OFFSETS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Cap for base grids on intervals with infinite upper end.
pub const P_CAP: f64 = 128.0;

impl ExponentInterval {
    pub fn new(a: f64, b: Extent) -> Result<Self> {
        if !a.is_finite() || a < 1.0 {
            return Err(Error::Params(format!("lower exponent bound must be >= 1, got {a}")));
        }
        if let Extent::Finite(bv) = b {
            if !bv.is_finite() || bv <= a {
                return Err(Error::Params(format!(
                    "upper exponent bound must exceed {a}, got {bv}"
                )));
            }
        }
        Ok(ExponentInterval { a, b })
    }

    pub fn finite(a: f64, b: f64) -> Result<Self> {
        Self::new(a, Extent::Finite(b))
    }

    pub fn half_line(a: f64) -> Result<Self> {
        Self::new(a, Extent::Infinite)
    }

    /// Strict interior membership.
    pub fn contains(&self, p: f64) -> bool {
        p.is_finite()
            && p > self.a
            && match self.b {
                Extent::Finite(b) => p < b,
                Extent::Infinite => true,
            }
    }

    pub fn width(&self) -> Option<f64> {
        self.b.finite().map(|b| b - self.a)
    }

    /// Scale used for endpoint offsets: the width when finite, 1 otherwise.
    pub fn offset_scale(&self) -> f64 {
        self.width().map_or(1.0, |w| w.min(1e6))
    }

    /// Same interval bounds as another, to relative slack 1e-12.
    pub fn same_as(&self, other: &ExponentInterval) -> bool {
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs()));
        close(self.a, other.a)
            && match (self.b, other.b) {
                (Extent::Finite(x), Extent::Finite(y)) => close(x, y),
                (Extent::Infinite, Extent::Infinite) => true,
                _ => false,
            }
    }

    /// Interior probe grid with points accumulating geometrically at both
    /// singular ends (or toward a and upward through a log range when b is
    /// infinite). Sorted, strictly interior, deduplicated.
    pub fn probe_grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(8);
        let mut pts: Vec<f64> = Vec::with_capacity(n + 2);
        match self.b {
            Extent::Finite(b) => {
                let w = b - self.a;
                // geometric offsets from each endpoint meeting at the middle
                let half = n / 2;
                let deep: f64 = 1e-7;
                for i in 0..half {
                    let t = i as f64 / (half - 1) as f64;
                    // offset from deep*w up to w/2
                    let off = w * deep * (0.5 / deep).powf(t);
                    pts.push(self.a + off);
                    pts.push(b - off);
                }
            }
            Extent::Infinite => {
                let half = n / 2;
                let deep: f64 = 1e-7;
                for i in 0..half {
                    let t = i as f64 / (half - 1) as f64;
                    let off = deep * ((self.a.max(1.0)) / deep).powf(t);
                    pts.push(self.a + off);
                }
                // log-spaced sweep from 2a up to the cap
                let lo = 2.0 * self.a;
                let hi = P_CAP.max(4.0 * self.a);
                for i in 0..half {
                    let t = i as f64 / (half - 1) as f64;
                    pts.push(lo * (hi / lo).powf(t));
                }
            }
        }
        pts.retain(|p| self.contains(*p));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Ladder approaching the lower endpoint, shallow to deep.
    pub fn lower_ladder(&self) -> Vec<f64> {
        let s = self.offset_scale();
        LADDER_OFFSETS.iter().map(|o| self.a + o * s).filter(|p| self.contains(*p)).collect()
    }

    /// Ladder approaching the upper endpoint (finite b) or marching to large p
    /// by factor-4 steps (infinite b), shallow to deep.
    pub fn upper_ladder(&self) -> Vec<f64> {
        match self.b {
            Extent::Finite(b) => {
                let s = self.offset_scale();
                LADDER_OFFSETS.iter().map(|o| b - o * s).filter(|p| self.contains(*p)).collect()
            }
            Extent::Infinite => {
                let base = (2.0 * self.a).max(P_CAP);
                (0..6).map(|k| base * 4f64.powi(k)).collect()
            }
        }
    }
}
