//! Two-sided bridges between the scaled-moment norm and tail decay: the
//! Chebyshev tail bound, conversion of a two-branch weight membership into
//! an explicit tail envelope and back (log-powers pay a +1 toll on the
//! return trip), and two discrete constructions that saturate the tail
//! envelope at a sequence of doubly exponential thresholds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gnorm::{g_norm, GNormResult, Moments};
use crate::optimize::golden_max;
use crate::psi::{zeta_make, PsiFunction};
use crate::special::log_sum_exp;
use crate::support::Extent;
use crate::tail::{NormValue, TailFunction};

/// ln of inf over the exponent range of (N psi(p) / u)^p, for ln N and ln u.
///
/// Grid scan plus golden refinement; for a weight whose right branch is a
/// pure power an analytic stationary point joins the candidates, so the
/// infimum stays honest far past the probe cap.
pub(crate) fn log_chebyshev(psi: &PsiFunction, log_norm: f64, log_u: f64) -> f64 {
    let obj = |p: f64| match psi.log_value(p) {
        Ok(lw) => p * (log_norm + lw - log_u),
        Err(_) => f64::INFINITY,
    };
    let mut grid = psi.support().probe_grid(65);
    if let Some(z) = psi.zeta_params() {
        if !z.b.is_finite() {
            let growth = -z.beta;
            let p_star = ((log_u - log_norm) / growth - 1.0).exp();
            if p_star.is_finite() && p_star > z.h {
                for c in [0.5 * p_star, p_star, 2.0 * p_star] {
                    if psi.support().contains(c) {
                        grid.push(c);
                    }
                }
            }
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut best = f64::INFINITY;
    let mut bi = 0usize;
    for (i, &p) in grid.iter().enumerate() {
        let v = obj(p);
        if v < best {
            best = v;
            bi = i;
        }
    }
    if bi > 0 && bi + 1 < grid.len() {
        let (_, neg) = golden_max(&mut |p| -obj(p), grid[bi - 1], grid[bi + 1], 90);
        best = best.min(-neg);
    }
    best
}

/// Upper bound on T(f, u) from a finite norm: inf over p of (||f|| psi(p)/u)^p.
pub fn chebyshev_tail_bound(norm: &GNormResult, psi: &PsiFunction, u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Params(format!("tail threshold must be positive and finite, got {u}")));
    }
    let n = match norm.value {
        NormValue::Finite(v) => v,
        NormValue::Infinite => {
            return Err(Error::Precondition(
                "an infinite norm carries no Chebyshev tail information".into(),
            ))
        }
    };
    if n == 0.0 {
        return Ok(0.0);
    }
    Ok(log_chebyshev(psi, n.ln(), u.ln()).exp())
}

/// Decay claim for thresholds u >= 2.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum LargeTail {
    /// T(u) <= c2 (ln u)^{log_power} u^{-exponent}.
    PowerLog { exponent: f64, log_power: f64 },
    /// T(u) <= c2 exp(-rate u^{power}).
    StretchedExp { rate: f64, power: f64 },
}

/// Tail envelope: a power-log cap for u in (0, 1/2),
/// a faster power-log or stretched-exponential cap for u >= 2,
/// and monotonicity filling the middle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailBoundSpec {
    pub small_exponent: f64,
    pub small_log_power: f64,
    pub c1: f64,
    pub large: LargeTail,
    pub c2: f64,
}

fn check_constant(c: f64, name: &str) -> Result<()> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::Params(format!("{name} must be a finite nonnegative constant, got {c}")));
    }
    Ok(())
}

impl TailBoundSpec {
    pub fn power_log(
        small_exponent: f64,
        small_log_power: f64,
        c1: f64,
        large_exponent: f64,
        large_log_power: f64,
        c2: f64,
    ) -> Result<TailBoundSpec> {
        if !(small_exponent >= 1.0) || !small_exponent.is_finite() {
            return Err(Error::Params(format!(
                "small-threshold exponent must satisfy a >= 1, got {small_exponent}"
            )));
        }
        if !(large_exponent > small_exponent) || !large_exponent.is_finite() {
            return Err(Error::Params(format!(
                "large-threshold exponent must exceed {small_exponent}, got {large_exponent}"
            )));
        }
        if !(small_log_power >= 0.0) || !(large_log_power >= 0.0) {
            return Err(Error::Params("log-powers must be nonnegative".into()));
        }
        check_constant(c1, "c1")?;
        check_constant(c2, "c2")?;
        Ok(TailBoundSpec {
            small_exponent,
            small_log_power,
            c1,
            large: LargeTail::PowerLog { exponent: large_exponent, log_power: large_log_power },
            c2,
        })
    }

    pub fn stretched(
        small_exponent: f64,
        small_log_power: f64,
        c1: f64,
        c2: f64,
        rate: f64,
        power: f64,
    ) -> Result<TailBoundSpec> {
        if !(small_exponent >= 1.0) || !small_exponent.is_finite() {
            return Err(Error::Params(format!(
                "small-threshold exponent must satisfy a >= 1, got {small_exponent}"
            )));
        }
        if !(small_log_power >= 0.0) {
            return Err(Error::Params("log-powers must be nonnegative".into()));
        }
        if !(rate > 0.0) || !rate.is_finite() || !(power > 0.0) || !power.is_finite() {
            return Err(Error::Params(format!(
                "stretched decay needs positive rate and power, got ({rate}, {power})"
            )));
        }
        check_constant(c1, "c1")?;
        check_constant(c2, "c2")?;
        Ok(TailBoundSpec {
            small_exponent,
            small_log_power,
            c1,
            large: LargeTail::StretchedExp { rate, power },
            c2,
        })
    }

    /// ln of the small-threshold cap c1 |ln u|^gamma u^{-a}; meaningful for ln u < -ln 2.
    pub fn log_bound_small(&self, log_u: f64) -> f64 {
        self.c1.ln() + self.small_log_power * (-log_u).ln() - self.small_exponent * log_u
    }

    /// ln of the large-threshold cap; meaningful for ln u >= ln 2.
    pub fn log_bound_large(&self, log_u: f64) -> f64 {
        match self.large {
            LargeTail::PowerLog { exponent, log_power } => {
                self.c2.ln() + log_power * log_u.ln() - exponent * log_u
            }
            LargeTail::StretchedExp { rate, power } => self.c2.ln() - rate * (power * log_u).exp(),
        }
    }

    /// ln of the full envelope; the gap (1/2, 2) is bridged by the value at
    /// 1/2, which dominates there because tails never increase.
    pub fn log_bound(&self, log_u: f64) -> f64 {
        let cut = std::f64::consts::LN_2;
        if log_u < -cut {
            self.log_bound_small(log_u)
        } else if log_u < cut {
            self.log_bound_small(-cut)
        } else {
            self.log_bound_large(log_u)
        }
    }
}

/// Tail envelope implied by a finite norm against a two-branch weight.
/// Constants are calibrated from the Chebyshev bound over a threshold
/// ladder, so the envelope dominates the bound at every probed threshold.
pub fn membership_to_tail(psi: &PsiFunction, norm_value: f64) -> Result<TailBoundSpec> {
    let z = psi.zeta_params().ok_or_else(|| {
        Error::Params(format!("{} is not from the two-branch family", psi.name()))
    })?;
    if !(norm_value >= 0.0) || !norm_value.is_finite() {
        return Err(Error::Precondition(format!(
            "need a finite nonnegative norm, got {norm_value}"
        )));
    }
    let a = z.a;
    let gamma = a * z.alpha;
    match z.b {
        Extent::Finite(b) => {
            let tau = b * z.beta;
            if norm_value == 0.0 {
                return TailBoundSpec::power_log(a, gamma, 0.0, b, tau, 0.0);
            }
            let ln_n = norm_value.ln();
            let mut lc1 = f64::NEG_INFINITY;
            for j in 0..=160 {
                let lu = -(2.0f64.ln() + 1e-6) - 0.25 * j as f64;
                let lb = log_chebyshev(psi, ln_n, lu);
                lc1 = lc1.max(lb + a * lu - gamma * (-lu).ln());
            }
            let mut lc2 = f64::NEG_INFINITY;
            for j in 0..=160 {
                let lu = 2.0f64.ln() + 0.25 * j as f64;
                let lb = log_chebyshev(psi, ln_n, lu);
                lc2 = lc2.max(lb + b * lu - tau * lu.ln());
            }
            TailBoundSpec::power_log(a, gamma, lc1.exp(), b, tau, lc2.exp())
        }
        Extent::Infinite => {
            let growth = -z.beta;
            let power = 1.0 / growth;
            if norm_value == 0.0 {
                return TailBoundSpec::stretched(a, gamma, 0.0, 0.0, 1.0, power);
            }
            let ln_n = norm_value.ln();
            // on the power branch the optimal exponent gives
            // ln bound = -(growth/e) (u/N)^{1/growth} exactly
            let rate = growth / std::f64::consts::E * (-ln_n * power).exp();
            let mut lc1 = f64::NEG_INFINITY;
            for j in 0..=160 {
                let lu = -(2.0f64.ln() + 1e-6) - 0.25 * j as f64;
                let lb = log_chebyshev(psi, ln_n, lu);
                lc1 = lc1.max(lb + a * lu - gamma * (-lu).ln());
            }
            let mut lc2 = f64::NEG_INFINITY;
            let mut lu = 2.0f64.ln();
            while (power * lu).exp() < 1e12 {
                let lb = log_chebyshev(psi, ln_n, lu);
                lc2 = lc2.max(lb + rate * (power * lu).exp());
                lu += 0.25;
            }
            TailBoundSpec::stretched(a, gamma, lc1.exp(), lc2.exp(), rate, power)
        }
    }
}

/// Moment-space coordinates recovered from a tail envelope, with the
/// numerically certified norm of the envelope against that weight.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipTarget {
    pub a: f64,
    pub b: Extent,
    pub alpha: f64,
    pub beta: f64,
    pub norm_bound: NormValue,
    pub p_star: f64,
}

/// Moment-space membership implied by a tail envelope. The log-powers come
/// back one higher than the envelope's, and the norm bound is evaluated by
/// integrating the envelope's moments directly.
pub fn tail_to_membership(spec: &TailBoundSpec) -> Result<MembershipTarget> {
    let a = spec.small_exponent;
    let alpha = spec.small_log_power + 1.0;
    let (b, beta) = match spec.large {
        LargeTail::PowerLog { exponent, log_power } => (Extent::Finite(exponent), log_power + 1.0),
        LargeTail::StretchedExp { power, .. } => (Extent::Infinite, -1.0 / power),
    };
    if spec.c1 == 0.0 && spec.c2 == 0.0 {
        return Ok(MembershipTarget { a, b, alpha, beta, norm_bound: NormValue::Finite(0.0), p_star: a });
    }
    let psi = zeta_make(a, b, alpha, beta)?;
    let env = *spec;
    let tail = TailFunction::closed("tail-envelope", Extent::Infinite, None, move |t| env.log_bound(t));
    let gn = g_norm(&tail, &psi)?;
    Ok(MembershipTarget { a, b, alpha, beta, norm_bound: gn.value, p_star: gn.p_star })
}

/// Purely atomic distribution kept in log coordinates: the value exp(lv)
/// carries mass exp(lm). Moments are exact log-sum-exp sums, so atoms may
/// sit far beyond linear float range.
#[derive(Debug, Clone, Serialize)]
pub struct AtomicFunction {
    label: String,
    log_values: Vec<f64>,
    log_masses: Vec<f64>,
}

impl AtomicFunction {
    /// Atoms as (log value, log mass) pairs, any order, values distinct.
    pub fn new(label: impl Into<String>, atoms: &[(f64, f64)]) -> Result<AtomicFunction> {
        if atoms.is_empty() {
            return Err(Error::Params("need at least one atom".into()));
        }
        for &(lv, lm) in atoms {
            if !lv.is_finite() || lm.is_nan() || lm == f64::INFINITY {
                return Err(Error::Params(format!("bad atom (ln value {lv}, ln mass {lm})")));
            }
        }
        let mut sorted: Vec<(f64, f64)> = atoms.to_vec();
        sorted.sort_by(|x, y| y.0.total_cmp(&x.0));
        if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Params("atom values must be distinct".into()));
        }
        Ok(AtomicFunction {
            label: label.into(),
            log_values: sorted.iter().map(|t| t.0).collect(),
            log_masses: sorted.iter().map(|t| t.1).collect(),
        })
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn log_masses(&self) -> &[f64] {
        &self.log_masses
    }

    pub fn log_total_mass(&self) -> f64 {
        log_sum_exp(&self.log_masses)
    }

    /// ln of the p-th moment sum (that is, ln |f|_p^p).
    pub fn log_moment(&self, p: f64) -> f64 {
        let terms: Vec<f64> =
            self.log_values.iter().zip(&self.log_masses).map(|(lv, lm)| lm + p * lv).collect();
        log_sum_exp(&terms)
    }

    /// ln mu{|f| > u} at u = exp(log_u).
    pub fn log_tail_above(&self, log_u: f64) -> f64 {
        let n = self.log_values.iter().take_while(|lv| **lv > log_u).count();
        log_sum_exp(&self.log_masses[..n])
    }

    /// ln mu{|f| >= u} at u = exp(log_u).
    pub fn log_tail_from(&self, log_u: f64) -> f64 {
        let n = self.log_values.iter().take_while(|lv| **lv >= log_u).count();
        log_sum_exp(&self.log_masses[..n])
    }
}

impl Moments for AtomicFunction {
    fn lp_norm(&self, p: f64) -> Result<NormValue> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::Support(format!("exponent must satisfy p >= 1, got {p}")));
        }
        let ln = self.log_moment(p) / p;
        Ok(if ln > 709.0 { NormValue::Infinite } else { NormValue::Finite(ln.exp()) })
    }

    fn label(&self) -> &str {
        &self.label
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BandPoint {
    pub p: f64,
    /// Moment norm times the claimed endpoint power of the gap.
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailHit {
    pub k: u32,
    pub log_threshold: f64,
    /// ln of the mass at or above the threshold.
    pub log_tail: f64,
    /// ln of the claimed power-log envelope shape at the threshold.
    pub log_comparator: f64,
    pub margin: f64,
}

/// Evidence that a discrete construction saturates its tail envelope: a
/// bounded moment band along an exponent ladder, tail weight meeting the
/// envelope shape at every probed threshold, and strictly positive margins
/// against the same shape with half the log-power.
#[derive(Debug, Clone, Serialize)]
pub struct SharpnessReport {
    pub function: AtomicFunction,
    pub log_normalizer: f64,
    pub band: Vec<BandPoint>,
    pub band_lower: f64,
    pub band_upper: f64,
    pub hits: Vec<TailHit>,
    pub reduced_power_margins: Vec<f64>,
}

fn band_bounds(band: &[BandPoint]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for bp in band {
        lo = lo.min(bp.ratio);
        hi = hi.max(bp.ratio);
    }
    (lo, hi)
}

/// Probability-space atom chain with values exp(exp k): mass
/// C exp(gamma k - b exp k) at the k-th atom, gamma = beta b. Its moments
/// blow up like (b-p)^{-beta} while the tail meets the power-log envelope
/// with log-power gamma at every atom.
pub fn sharpness_atoms(b: f64, beta: f64, k_terms: usize) -> Result<SharpnessReport> {
    if !(b > 1.0) || !b.is_finite() || !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Params(format!("need b > 1 and beta > 0, got ({b}, {beta})")));
    }
    if k_terms < 20 {
        return Err(Error::Params(format!("need at least 20 atoms, got {k_terms}")));
    }
    let kk = k_terms as f64;
    if b * kk.exp() > 1e300 {
        return Err(Error::Params(format!(
            "atom positions overflow log coordinates at k = {k_terms}"
        )));
    }
    let gamma = beta * b;
    let raw: Vec<f64> = (1..=k_terms).map(|k| gamma * k as f64 - b * (k as f64).exp()).collect();
    if k_terms >= 2 && raw[k_terms - 1] - raw[k_terms - 2] > (1e-6f64).ln() {
        return Err(Error::NonConvergence(format!(
            "normalization series has not settled after {k_terms} terms"
        )));
    }
    let log_c = -log_sum_exp(&raw);
    let atoms: Vec<(f64, f64)> =
        (1..=k_terms).map(|k| ((k as f64).exp(), log_c + raw[k - 1])).collect();
    let function = AtomicFunction::new(format!("atoms(b={b},beta={beta},k={k_terms})"), &atoms)?;

    let mut band = Vec::new();
    for j in 1..=8 {
        let eps = 10f64.powi(-j);
        let p = b - eps;
        if p <= 1.0 + 1e-9 || (gamma / eps).ln() > kk - 8.0 {
            continue;
        }
        let ratio = (function.log_moment(p) / p + beta * eps.ln()).exp();
        band.push(BandPoint { p, ratio });
    }
    let (band_lower, band_upper) = band_bounds(&band);

    let mut hits = Vec::new();
    let mut reduced = Vec::new();
    for k in 1..=k_terms {
        let lx = (k as f64).exp();
        let log_tail = function.log_tail_from(lx);
        // same association order as the mass, so the margin is free of
        // big-number cancellation
        let log_comparator = log_c + raw[k - 1];
        let margin = log_tail - log_comparator;
        hits.push(TailHit { k: k as u32, log_threshold: lx, log_tail, log_comparator, margin });
        reduced.push(margin + 0.5 * gamma * k as f64);
    }

    Ok(SharpnessReport {
        function,
        log_normalizer: log_c,
        band,
        band_lower,
        band_upper,
        hits,
        reduced_power_margins: reduced,
    })
}

/// Half-line step chain with values exp(-exp k) on blocks of length
/// exp(a alpha k + a exp k). Moments blow up like (p-a)^{-alpha} as p
/// drops to a, and the tail meets the power-log envelope with log-power
/// a alpha at every step value.
pub fn sharpness_steps(a: f64, alpha: f64, k_terms: usize) -> Result<SharpnessReport> {
    if !(a >= 1.0) || !a.is_finite() || !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Params(format!("need a >= 1 and alpha > 0, got ({a}, {alpha})")));
    }
    if k_terms < 1 {
        return Err(Error::Params("need at least one step".into()));
    }
    let kk = k_terms as f64;
    if a * kk.exp() + a * alpha * kk > 1e300 {
        return Err(Error::Params(format!(
            "block lengths overflow log coordinates at k = {k_terms}"
        )));
    }
    let gamma = a * alpha;
    let log_q: Vec<f64> = (1..=k_terms).map(|k| gamma * k as f64 + a * (k as f64).exp()).collect();
    let atoms: Vec<(f64, f64)> =
        (1..=k_terms).map(|k| (-(k as f64).exp(), log_q[k - 1])).collect();
    let function = AtomicFunction::new(format!("steps(a={a},alpha={alpha},k={k_terms})"), &atoms)?;

    let mut band = Vec::new();
    for j in 0..=12 {
        let eps = gamma * (-(j as f64)).exp();
        if (j as f64) > kk - 1.0 {
            break;
        }
        let p = a + eps;
        let ratio = (function.log_moment(p) / p + alpha * eps.ln()).exp();
        band.push(BandPoint { p, ratio });
    }
    let (band_lower, band_upper) = band_bounds(&band);

    let mut prefix = f64::NEG_INFINITY;
    let mut hits = Vec::new();
    let mut reduced = Vec::new();
    for k in 1..=k_terms {
        prefix = crate::special::log_add_exp(prefix, log_q[k - 1]);
        let lu = -(k as f64).exp();
        let log_tail = function.log_tail_from(lu);
        let log_comparator = log_q[k - 1];
        let margin = log_tail - log_comparator;
        hits.push(TailHit { k: k as u32, log_threshold: lu, log_tail, log_comparator, margin });
        reduced.push(margin + 0.5 * gamma * k as f64);
        debug_assert!((log_tail - prefix).abs() < 1e-9 * prefix.abs().max(1.0));
    }

    Ok(SharpnessReport {
        function,
        log_normalizer: 0.0,
        band,
        band_lower,
        band_upper,
        hits,
        reduced_power_margins: reduced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::make;
    use crate::psi::PsiFunction;
    use crate::support::ExponentInterval;

    fn flat_psi() -> PsiFunction {
        PsiFunction::from_log_fn("flat", ExponentInterval::finite(1.0, 3.0).unwrap(), |_| 0.0)
    }

    fn norm_of(f: &dyn Moments, psi: &PsiFunction) -> GNormResult {
        g_norm(f, psi).unwrap()
    }

    #[test]
    fn flat_weight_bound_decays_with_the_exponent_range() {
        let psi = flat_psi();
        let ind = make("indicator", &[("delta", 1.0)]).unwrap();
        let gn = norm_of(&ind, &psi);
        assert!((gn.value.expect_finite("norm") - 1.0).abs() < 1e-12);
        let bound = chebyshev_tail_bound(&gn, &psi, std::f64::consts::E.powi(2)).unwrap();
        assert!((bound / (-6.0f64).exp() - 1.0).abs() < 1e-5, "bound {bound}");
        let at_one = chebyshev_tail_bound(&gn, &psi, 1.0).unwrap();
        assert!((at_one - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_thresholds_and_infinite_norms_are_refused() {
        let psi = flat_psi();
        let ind = make("indicator", &[("delta", 1.0)]).unwrap();
        let mut gn = norm_of(&ind, &psi);
        assert!(chebyshev_tail_bound(&gn, &psi, 0.0).unwrap_err().is_input_error());
        assert!(chebyshev_tail_bound(&gn, &psi, -2.0).unwrap_err().is_input_error());
        gn.value = NormValue::Infinite;
        assert!(chebyshev_tail_bound(&gn, &psi, 1.0).unwrap_err().is_input_error());
    }

    #[test]
    fn bound_dominates_every_known_catalog_tail() {
        let cases: Vec<(crate::catalog::CatalogFunction, PsiFunction)> = vec![
            (make("indicator", &[("delta", 1.0)]).unwrap(), flat_psi()),
            (make("indicator", &[("delta", 0.25)]).unwrap(), flat_psi()),
            (
                make("h_m", &[("m", 1.0)]).unwrap(),
                zeta_make(1.5, Extent::Infinite, 1.0, -1.0).unwrap(),
            ),
            (
                make("h_m", &[("m", 2.0)]).unwrap(),
                zeta_make(1.5, Extent::Infinite, 1.0, -0.5).unwrap(),
            ),
            (
                make("h_m", &[("m", 4.0)]).unwrap(),
                zeta_make(1.5, Extent::Infinite, 1.0, -0.25).unwrap(),
            ),
            (
                make("f_ab_gamma_nu", &[("a", 2.0), ("b", 4.0), ("gamma", 0.5), ("nu", 0.75)])
                    .unwrap(),
                zeta_make(2.0, Extent::Finite(4.0), 1.0, 1.0).unwrap(),
            ),
        ];
        for (f, psi) in &cases {
            let gn = norm_of(f, psi);
            let ln_n = gn.value.expect_finite("norm").ln();
            let tail = f.tail().unwrap();
            for i in 0..50 {
                let lu = -3.0 * 10f64.ln() + 6.0 * 10f64.ln() * i as f64 / 49.0;
                let lb = log_chebyshev(psi, ln_n, lu);
                let lt = tail.log_value_at_log(lu);
                assert!(
                    lb + 1e-12 >= lt,
                    "{} at ln u = {lu}: bound {lb} < tail {lt}",
                    f.name()
                );
            }
        }
    }

    #[test]
    fn optimized_constant_reproduces_the_grid_infimum() {
        let psi = zeta_make(2.0, Extent::Finite(4.0), 1.0, 1.0).unwrap();
        let spec = membership_to_tail(&psi, 1.0).unwrap();
        assert_eq!(spec.small_exponent, 2.0);
        assert_eq!(spec.small_log_power, 2.0);
        let lu = (1e-3f64).ln();
        // blunt scan oracle, no refinement
        let mut oracle = f64::INFINITY;
        for i in 1..40_000 {
            let p = 2.0 + 2.0 * i as f64 / 40_000.0;
            oracle = oracle.min(p * (psi.log_value(p).unwrap() - lu));
        }
        let claimed = spec.log_bound_small(lu);
        assert!(claimed >= oracle - 1e-9, "claimed {claimed} under oracle {oracle}");
        assert!(claimed <= oracle + 2.0, "claimed {claimed} far above oracle {oracle}");
    }

    #[test]
    fn zero_norm_maps_to_the_zero_envelope() {
        let psi = zeta_make(2.0, Extent::Finite(4.0), 1.0, 1.0).unwrap();
        let spec = membership_to_tail(&psi, 0.0).unwrap();
        assert_eq!(spec.c1, 0.0);
        assert_eq!(spec.c2, 0.0);
        assert_eq!(spec.log_bound(-3.0), f64::NEG_INFINITY);
        let target = tail_to_membership(&spec).unwrap();
        assert_eq!(target.norm_bound, NormValue::Finite(0.0));
    }

    #[test]
    fn weight_with_power_branch_maps_to_stretched_decay() {
        let psi = zeta_make(1.0, Extent::Infinite, 1.0, -1.0).unwrap();
        let spec = membership_to_tail(&psi, 1.0).unwrap();
        match spec.large {
            LargeTail::StretchedExp { rate, power } => {
                assert!((rate - (-1.0f64).exp()).abs() < 1e-12);
                assert_eq!(power, 1.0);
            }
            LargeTail::PowerLog { .. } => panic!("expected stretched decay"),
        }
        let lu = 10.0;
        let mut oracle = f64::INFINITY;
        for i in 0..40_000 {
            let p = (1.0 + 1e-6) * (1e5f64).powf(i as f64 / 39_999.0);
            oracle = oracle.min(p * (psi.log_value(p).unwrap() - lu));
        }
        let claimed = spec.log_bound_large(lu);
        assert!(claimed >= oracle - 1e-9, "claimed {claimed} under oracle {oracle}");
        assert!(claimed <= oracle + 1.0, "claimed {claimed} far above oracle {oracle}");
    }

    #[test]
    fn envelope_requires_the_two_branch_family() {
        let err = membership_to_tail(&flat_psi(), 1.0).unwrap_err();
        assert!(matches!(err, Error::Params(_)));
    }

    #[test]
    fn roundtrip_raises_log_powers_by_one() {
        let psi = zeta_make(2.0, Extent::Finite(4.0), 1.0, 1.0).unwrap();
        let spec = membership_to_tail(&psi, 1.0).unwrap();
        let target = tail_to_membership(&spec).unwrap();
        assert_eq!(target.a, 2.0);
        assert_eq!(target.b, Extent::Finite(4.0));
        assert_eq!(target.alpha, spec.small_log_power + 1.0);
        match spec.large {
            LargeTail::PowerLog { log_power, .. } => assert_eq!(target.beta, log_power + 1.0),
            LargeTail::StretchedExp { .. } => panic!("finite range expected"),
        }
        assert!(target.norm_bound.is_finite());

        let psi2 = zeta_make(1.0, Extent::Infinite, 1.0, -1.0).unwrap();
        let spec2 = membership_to_tail(&psi2, 1.0).unwrap();
        let target2 = tail_to_membership(&spec2).unwrap();
        assert_eq!(target2.b, Extent::Infinite);
        assert_eq!(target2.alpha, spec2.small_log_power + 1.0);
        assert_eq!(target2.beta, -1.0);
        assert!(target2.norm_bound.is_finite());
    }

    #[test]
    fn plain_power_envelopes_map_to_unit_log_powers() {
        let spec = TailBoundSpec::power_log(1.0, 0.0, 1.0, 2.0, 0.0, 1.0).unwrap();
        let target = tail_to_membership(&spec).unwrap();
        assert_eq!((target.a, target.alpha, target.beta), (1.0, 1.0, 1.0));
        assert_eq!(target.b, Extent::Finite(2.0));
        assert!(target.norm_bound.is_finite());
        assert!(target.p_star > 1.0);

        let spec2 = TailBoundSpec::stretched(1.5, 0.5, 1.0, 1.0, 0.3, 0.5).unwrap();
        let target2 = tail_to_membership(&spec2).unwrap();
        assert_eq!((target2.a, target2.alpha, target2.beta), (1.5, 1.5, -2.0));
        assert_eq!(target2.b, Extent::Infinite);
        assert!(target2.norm_bound.is_finite());
    }

    #[test]
    fn malformed_envelopes_are_refused() {
        assert!(TailBoundSpec::power_log(0.5, 0.0, 1.0, 2.0, 0.0, 1.0).is_err());
        assert!(TailBoundSpec::power_log(2.0, 0.0, 1.0, 2.0, 0.0, 1.0).is_err());
        assert!(TailBoundSpec::power_log(1.0, -0.1, 1.0, 2.0, 0.0, 1.0).is_err());
        assert!(TailBoundSpec::power_log(1.0, 0.0, -1.0, 2.0, 0.0, 1.0).is_err());
        assert!(TailBoundSpec::stretched(1.0, 0.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(TailBoundSpec::stretched(1.0, 0.0, 1.0, 1.0, 1.0, -2.0).is_err());
    }

    #[test]
    fn saddle_sum_concentrates_on_one_term() {
        let (b, beta, k_terms) = (2.0, 1.0, 60usize);
        let gamma = beta * b;
        for k0 in 2..=8 {
            let eps = gamma * (-(k0 as f64)).exp();
            let terms: Vec<f64> =
                (1..=k_terms).map(|k| gamma * k as f64 - eps * (k as f64).exp()).collect();
            let total = log_sum_exp(&terms);
            let peak = gamma * k0 as f64 - gamma;
            assert!(total >= peak);
            assert!(total - peak <= 3.0f64.ln(), "k0 = {k0}: excess {}", total - peak);
        }
    }

    #[test]
    fn atom_masses_sum_to_one() {
        let report = sharpness_atoms(2.0, 1.0, 60).unwrap();
        assert!(report.function.log_total_mass().abs() < 1e-12);
    }

    #[test]
    fn atom_moment_band_stays_within_a_decade() {
        let report = sharpness_atoms(2.0, 1.0, 60).unwrap();
        assert!(report.band.len() >= 4);
        assert!(report.band_lower > 0.0);
        assert!(
            report.band_upper / report.band_lower <= 10.0,
            "band [{}, {}]",
            report.band_lower,
            report.band_upper
        );
    }

    #[test]
    fn tail_meets_the_envelope_shape_at_every_atom() {
        let report = sharpness_atoms(2.0, 1.0, 60).unwrap();
        assert_eq!(report.hits.len(), 60);
        for hit in &report.hits {
            assert!(hit.margin >= 0.0, "atom {}: margin {}", hit.k, hit.margin);
        }
        // third atom, checked against a direct mass sum
        let hit = &report.hits[2];
        let lm = report.function.log_masses();
        let direct = log_sum_exp(&lm[..lm.len() - 2]);
        assert!((hit.log_tail - direct).abs() < 1e-12);
        assert!(hit.log_tail >= hit.log_comparator);
    }

    #[test]
    fn halved_log_power_is_beaten_with_growing_margin() {
        let report = sharpness_atoms(2.0, 1.0, 60).unwrap();
        for (i, m) in report.reduced_power_margins.iter().enumerate() {
            assert!(*m > 0.0, "atom {}: reduced margin {m}", i + 1);
        }
        for w in report.reduced_power_margins.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn atom_chain_lies_in_the_single_singularity_space() {
        let report = sharpness_atoms(2.0, 1.0, 60).unwrap();
        let psi = PsiFunction::from_log_fn(
            "upper-gap",
            ExponentInterval::finite(1.0, 2.0).unwrap(),
            |p| -(2.0 - p).ln(),
        );
        let gn = g_norm(&report.function, &psi).unwrap();
        let v = gn.value.expect_finite("norm");
        assert!(v > 0.0 && v < 1e3, "norm {v}");
    }

    #[test]
    fn atom_preconditions_are_enforced() {
        assert!(sharpness_atoms(2.0, 1.0, 10).unwrap_err().is_input_error());
        assert!(sharpness_atoms(1.0, 1.0, 60).unwrap_err().is_input_error());
        assert!(sharpness_atoms(2.0, -1.0, 60).unwrap_err().is_input_error());
        assert!(sharpness_atoms(2.0, 1.0, 800).unwrap_err().is_input_error());
        assert!(matches!(sharpness_atoms(2.0, 1e9, 20).unwrap_err(), Error::NonConvergence(_)));
    }

    #[test]
    fn steps_band_matches_the_inverse_power_shape() {
        let report = sharpness_steps(1.0, 1.0, 5).unwrap();
        let f = &report.function;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in [1.01, 1.05, 1.1, 1.2, 1.35, 1.5] {
            let r = (f.log_moment(p) + (p - 1.0).ln()).exp();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        assert!(hi / lo <= 10.0, "moment-sum band [{lo}, {hi}]");
        assert!(report.band_upper / report.band_lower <= 10.0);
    }

    #[test]
    fn step_tail_at_the_second_level_is_the_first_two_lengths() {
        let report = sharpness_steps(1.0, 1.0, 5).unwrap();
        let lq: Vec<f64> = (1..=2).map(|k| k as f64 + (k as f64).exp()).collect();
        let expected = log_sum_exp(&lq);
        let got = report.function.log_tail_from(-(2.0f64).exp());
        assert!((got - expected).abs() < 1e-12);
        let above = report.function.log_tail_above(-(2.0f64).exp());
        assert!((above - lq[0]).abs() < 1e-12);
        for hit in &report.hits {
            assert!(hit.margin >= 0.0);
        }
    }

    #[test]
    fn single_step_degenerates_to_an_indicator_block() {
        let report = sharpness_steps(1.0, 1.0, 1).unwrap();
        let f = &report.function;
        let lq = 1.0 + 1.0f64.exp();
        for p in [1.0, 2.0, 4.0] {
            let expected = (-(1.0f64).exp() + lq / p).exp();
            let got = f.lp_norm(p).unwrap().expect_finite("moment");
            assert!((got / expected - 1.0).abs() < 1e-12);
        }
        assert_eq!(f.log_tail_above(-(1.0f64).exp()), f64::NEG_INFINITY);
        assert!((f.log_tail_from(-(1.0f64).exp()) - lq).abs() < 1e-15);
    }

    #[test]
    fn step_preconditions_are_enforced() {
        assert!(sharpness_steps(0.5, 1.0, 5).unwrap_err().is_input_error());
        assert!(sharpness_steps(1.0, 0.0, 5).unwrap_err().is_input_error());
        assert!(sharpness_steps(1.0, 1.0, 0).unwrap_err().is_input_error());
        assert!(sharpness_steps(1.0, 1.0, 800).unwrap_err().is_input_error());
    }

    #[test]
    fn reports_serialize_with_their_evidence() {
        let report = sharpness_atoms(2.0, 1.0, 20).unwrap();
        let s = serde_json::to_string(&report).unwrap();
        for key in ["band", "hits", "log_normalizer", "reduced_power_margins", "log_masses"] {
            assert!(s.contains(key), "missing {key}");
        }
        let psi = zeta_make(2.0, Extent::Finite(4.0), 1.0, 1.0).unwrap();
        let spec = membership_to_tail(&psi, 1.0).unwrap();
        let s2 = serde_json::to_string(&spec).unwrap();
        assert!(s2.contains("small_exponent") && s2.contains("PowerLog"));
        let target = tail_to_membership(&spec).unwrap();
        let s3 = serde_json::to_string(&target).unwrap();
        assert!(s3.contains("norm_bound") && s3.contains("p_star"));
    }
}
