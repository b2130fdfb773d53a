//! Tail (distribution) functions and the L_p engine built on them.
//!
//! A tail function T(u) = mu{ |f| > u } is non-increasing with
//! |f|_p^p = p * integral of u^{p-1} T(u) du over u > 0. Moments are
//! evaluated in t = ln u: the integrand becomes p e^{pt} T(e^t), smooth in
//! log-space for every family handled here. Piecewise-step tails are summed
//! exactly instead.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::{decade_integral_log_below, decade_integral_log_from, DecadeOutcome};
use crate::special::{log1m_exp, log_add_exp, log_sum_exp};
use crate::support::Extent;

/// A norm-like quantity that may be infinite. Kept as a tagged value so the
/// infinity case never leaks into serialized output as a float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormValue {
    Finite(f64),
    Infinite,
}

impl NormValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, NormValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            NormValue::Finite(v) => Some(*v),
            NormValue::Infinite => None,
        }
    }

    /// Finite payload or a panic; for callers that have already checked.
    pub fn expect_finite(&self, what: &str) -> f64 {
        match self {
            NormValue::Finite(v) => *v,
            NormValue::Infinite => panic!("{what} is infinite"),
        }
    }
}

impl serde::Serialize for NormValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NormValue::Finite(v) => s.serialize_f64(*v),
            NormValue::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum TailKind {
    ClosedForm,
    PiecewiseStep,
    TruncatedNumeric,
}

/// Distribution-level representation of a measurable function.
///
/// The evaluator works on t = ln u and returns ln T(u); steps, when present,
/// are the exact representation [(u_i, value on [u_i, u_{i+1}))] with
/// u_0 = 0 and the last value extending to infinity.
#[derive(Clone)]
pub struct TailFunction {
    name: String,
    kind: TailKind,
    total_mass: Extent,
    sup_value: Option<f64>,
    truncation: Option<f64>,
    log_tail: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    steps: Option<Arc<Vec<(f64, f64)>>>,
}

impl std::fmt::Debug for TailFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TailFunction")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("total_mass", &self.total_mass)
            .field("sup_value", &self.sup_value)
            .field("truncation", &self.truncation)
            .finish()
    }
}

fn step_lookup(steps: &[(f64, f64)], u: f64) -> f64 {
    // right-continuous: value of the last segment whose threshold is <= u
    let mut val = steps[0].1;
    for (thr, v) in steps {
        if *thr <= u {
            val = *v;
        } else {
            break;
        }
    }
    val
}

impl TailFunction {
    /// Closed-form tail from a log-space evaluator: `log_tail(t)` returns
    /// ln T(e^t). Pass the essential sup of |f| when the function is bounded;
    /// it anchors the moment quadrature at the right end of the support.
    pub fn closed(
        name: impl Into<String>,
        total_mass: Extent,
        sup_value: Option<f64>,
        log_tail: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> TailFunction {
        TailFunction {
            name: name.into(),
            kind: TailKind::ClosedForm,
            total_mass,
            sup_value,
            truncation: None,
            log_tail: Arc::new(log_tail),
            steps: None,
        }
    }

    /// Exact piecewise-constant tail. `steps` lists (threshold, value) with
    /// thresholds strictly increasing from 0 and values non-increasing;
    /// trailing segments after the value first hits zero are dropped.
    pub fn from_steps(name: impl Into<String>, steps: Vec<(f64, f64)>) -> Result<TailFunction> {
        if steps.is_empty() {
            return Err(Error::Params("step tail needs at least one segment".into()));
        }
        if steps[0].0 != 0.0 {
            return Err(Error::Params(format!(
                "step tail must start at threshold 0, got {}",
                steps[0].0
            )));
        }
        for w in steps.windows(2) {
            if !(w[1].0 > w[0].0) || !w[1].0.is_finite() {
                return Err(Error::Params("step thresholds must increase strictly".into()));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::Params("step tail values must be non-increasing".into()));
            }
        }
        for (_, v) in &steps {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::Params(format!("tail values must be finite and >= 0, got {v}")));
            }
        }
        let mut trimmed = steps;
        if let Some(z) = trimmed.iter().position(|(_, v)| *v == 0.0) {
            trimmed.truncate(z + 1);
        }
        let sup_value = match trimmed.last() {
            Some((thr, v)) if *v == 0.0 => Some(*thr),
            _ => None,
        };
        let total_mass = Extent::Finite(trimmed[0].1);
        let shared = Arc::new(trimmed);
        let for_eval = shared.clone();
        Ok(TailFunction {
            name: name.into(),
            kind: TailKind::PiecewiseStep,
            total_mass,
            sup_value,
            truncation: None,
            log_tail: Arc::new(move |t: f64| step_lookup(&for_eval, t.exp()).ln()),
            steps: Some(shared),
        })
    }

    /// Indicator of a set of measure delta: T(u) = delta for u < 1, 0 beyond.
    pub fn indicator(delta: f64) -> Result<TailFunction> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Params(format!("indicator needs finite delta > 0, got {delta}")));
        }
        Self::from_steps(format!("indicator(delta={delta})"), vec![(0.0, delta), (1.0, 0.0)])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> TailKind {
        self.kind
    }

    pub fn total_mass(&self) -> Extent {
        self.total_mass
    }

    /// Essential sup of |f| when known to be bounded.
    pub fn sup_value(&self) -> Option<f64> {
        self.sup_value
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn steps(&self) -> Option<&[(f64, f64)]> {
        self.steps.as_deref().map(|v| v.as_slice())
    }

    /// ln T(u) for u > 0.
    pub fn log_value(&self, u: f64) -> f64 {
        assert!(u > 0.0, "tail evaluated at u = {u}");
        (self.log_tail)(u.ln())
    }

    /// ln T(e^t). Safe at t where e^t would under- or overflow.
    pub fn log_value_at_log(&self, t: f64) -> f64 {
        (self.log_tail)(t)
    }

    /// T(u) for u > 0.
    pub fn value(&self, u: f64) -> f64 {
        self.log_value(u).exp()
    }

    /// |f|_p from the tail, p >= 1. Exact summation for step tails,
    /// log-space decade quadrature otherwise; divergent integrals come back
    /// as the infinity marker rather than an error.
    pub fn lp_norm(&self, p: f64) -> Result<NormValue> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::Params(format!("lp_norm needs finite p >= 1, got {p}")));
        }
        if let Some(steps) = &self.steps {
            return Ok(step_lp(steps, p));
        }
        let lt = self.log_tail.clone();
        let mut log_integrand = move |t: f64| p.ln() + p * t + lt(t);
        let t_hi = self.sup_value.map(f64::ln);
        let t_lo = self.truncation.map(f64::ln);
        // mass of the constant plateau below a truncation level:
        // p * integral_0^N u^{p-1} T(N) du = T(N) N^p
        let plateau = self
            .truncation
            .map(|n| (self.log_tail)(n.ln()) + p * n.ln())
            .unwrap_or(f64::NEG_INFINITY);
        let outcome = match (t_hi, t_lo) {
            (Some(hi), lo) => {
                if let Some(l) = lo {
                    if l >= hi {
                        return Ok(NormValue::Finite(if plateau == f64::NEG_INFINITY {
                            0.0
                        } else {
                            (plateau / p).exp()
                        }));
                    }
                }
                decade_integral_log_below(&mut log_integrand, hi, lo, 1e-10)?
            }
            (None, Some(l)) => decade_integral_log_from(&mut log_integrand, l, 1e-10, false)?,
            (None, None) => {
                decade_integral_log_from(&mut log_integrand, 0.0, 1e-10, true)?
            }
        };
        match outcome {
            DecadeOutcome::Divergent { .. } => Ok(NormValue::Infinite),
            DecadeOutcome::Finite { log_value, .. } => {
                Ok(NormValue::Finite(((log_add_exp(log_value, plateau)) / p).exp()))
            }
        }
    }

    /// Tail of f * 1{|f| > N}: T'(u) = T(max(u, N)).
    pub fn tail_truncate(&self, n: f64) -> Result<TailFunction> {
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Params(format!("truncation level must be finite > 0, got {n}")));
        }
        let name = format!("{}|>{}", self.name, n);
        if let Some(steps) = &self.steps {
            let tn = step_lookup(steps, n);
            let mut out = vec![(0.0, tn)];
            out.extend(steps.iter().copied().filter(|(thr, _)| *thr > n));
            return Self::from_steps(name, out);
        }
        let inner = self.log_tail.clone();
        let cut = n.ln();
        let eff = self.truncation.map_or(n, |old| old.max(n));
        Ok(TailFunction {
            name,
            kind: TailKind::TruncatedNumeric,
            total_mass: Extent::Finite((self.log_tail)(cut).exp()),
            sup_value: self.sup_value,
            truncation: Some(eff),
            log_tail: Arc::new(move |t: f64| inner(t.max(cut))),
            steps: None,
        })
    }

    /// Tail of c*f for a scalar c != 0: T'(u) = T(u/|c|).
    pub fn scale(&self, c: f64) -> Result<TailFunction> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::Params(format!("scale factor must be finite nonzero, got {c}")));
        }
        let m = c.abs();
        let name = format!("{}*{}", m, self.name);
        if let Some(steps) = &self.steps {
            let scaled = steps.iter().map(|(thr, v)| (thr * m, *v)).collect();
            return Self::from_steps(name, scaled);
        }
        let inner = self.log_tail.clone();
        let shift = m.ln();
        Ok(TailFunction {
            name,
            kind: self.kind,
            total_mass: self.total_mass,
            sup_value: self.sup_value.map(|s| s * m),
            truncation: self.truncation.map(|n| n * m),
            log_tail: Arc::new(move |t: f64| inner(t - shift)),
            steps: None,
        })
    }

    /// Tail of f + g when f and g live on disjoint pieces of the space:
    /// there the level sets do not interact and T_{f+g} = T_f + T_g.
    pub fn sum_disjoint(&self, other: &TailFunction) -> TailFunction {
        let name = format!("{}+{}", self.name, other.name);
        if let (Some(a), Some(b)) = (&self.steps, &other.steps) {
            let mut thresholds: Vec<f64> =
                a.iter().map(|(t, _)| *t).chain(b.iter().map(|(t, _)| *t)).collect();
            thresholds.sort_by(f64::total_cmp);
            thresholds.dedup();
            let merged: Vec<(f64, f64)> = thresholds
                .into_iter()
                .map(|t| (t, step_lookup(a, t) + step_lookup(b, t)))
                .collect();
            return Self::from_steps(name, merged).expect("merged step tails stay valid");
        }
        let la = self.log_tail.clone();
        let lb = other.log_tail.clone();
        let mass = match (self.total_mass, other.total_mass) {
            (Extent::Finite(x), Extent::Finite(y)) => Extent::Finite(x + y),
            _ => Extent::Infinite,
        };
        let sup = match (self.sup_value, other.sup_value) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        };
        TailFunction {
            name,
            kind: TailKind::ClosedForm,
            total_mass: mass,
            sup_value: sup,
            truncation: match (self.truncation, other.truncation) {
                (Some(x), Some(y)) => Some(x.min(y)),
                _ => None,
            },
            log_tail: Arc::new(move |t: f64| log_add_exp(la(t), lb(t))),
            steps: None,
        }
    }
}

fn step_lp(steps: &[(f64, f64)], p: f64) -> NormValue {
    let n = steps.len();
    if steps[n - 1].1 > 0.0 {
        return NormValue::Infinite;
    }
    let mut terms = Vec::with_capacity(n);
    for i in 0..n - 1 {
        let (u_lo, v) = steps[i];
        let u_hi = steps[i + 1].0;
        if v == 0.0 {
            continue;
        }
        // v * (u_hi^p - u_lo^p), assembled in logs
        let mut l = v.ln() + p * u_hi.ln();
        if u_lo > 0.0 {
            l += log1m_exp(p * (u_lo.ln() - u_hi.ln()));
        }
        terms.push(l);
    }
    if terms.is_empty() {
        return NormValue::Finite(0.0);
    }
    NormValue::Finite((log_sum_exp(&terms) / p).exp())
}

/// Interpolation bound on |f|_p from two flanking norms, p1 <= p <= p2.
/// Convexity of ln |f|_p^p in p gives
/// |f|_p <= |f|_{p1}^{theta p1 / p} |f|_{p2}^{(1-theta) p2 / p} with
/// theta = (p2 - p)/(p2 - p1); equality for indicator-shaped functions.
pub fn lyapunov_interpolate(
    norm_p1: f64,
    norm_p2: f64,
    p1: f64,
    p2: f64,
    p: f64,
) -> Result<f64> {
    if !(1.0 <= p1 && p1 <= p && p <= p2) || !p2.is_finite() {
        return Err(Error::Params(format!(
            "interpolation needs 1 <= p1 <= p <= p2 finite, got ({p1}, {p}, {p2})"
        )));
    }
    if !(norm_p1 >= 0.0 && norm_p1.is_finite() && norm_p2 >= 0.0 && norm_p2.is_finite()) {
        return Err(Error::Params("interpolation needs finite input norms".into()));
    }
    if p1 == p2 {
        return Ok(norm_p1);
    }
    let theta = (p2 - p) / (p2 - p1);
    let w1 = theta * p1 / p;
    let w2 = (1.0 - theta) * p2 / p;
    let mut log_z = 0.0;
    for (w, v) in [(w1, norm_p1), (w2, norm_p2)] {
        if w > 0.0 {
            if v == 0.0 {
                return Ok(0.0);
            }
            log_z += w * v.ln();
        }
    }
    Ok(log_z.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ln_gamma;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn fin(v: NormValue) -> f64 {
        v.expect_finite("test norm")
    }

    #[test]
    fn indicator_norm_is_root_of_measure() {
        let t = TailFunction::indicator(4.0).unwrap();
        assert!(rel(fin(t.lp_norm(2.0).unwrap()), 2.0) < 1e-14);
        assert!(rel(fin(t.lp_norm(1.0).unwrap()), 4.0) < 1e-14);
        assert!(rel(fin(t.lp_norm(4.0).unwrap()), 4.0f64.powf(0.25)) < 1e-14);
        assert_eq!(t.sup_value(), Some(1.0));
    }

    #[test]
    fn step_norm_by_hand() {
        // |f| = 3 on mass 0.25, |f| = 1 on further mass 0.75:
        // |f|_2^2 = 9/4 + 3/4 = 3
        let t = TailFunction::from_steps("two-level", vec![(0.0, 1.0), (1.0, 0.25), (3.0, 0.0)])
            .unwrap();
        assert!(rel(fin(t.lp_norm(2.0).unwrap()), 3.0f64.sqrt()) < 1e-14);
        // p = 1: 0.75 * 1 + 0.25 * 3 = 1.5
        assert!(rel(fin(t.lp_norm(1.0).unwrap()), 1.5) < 1e-14);
    }

    #[test]
    fn step_with_mass_at_infinity_diverges() {
        let t = TailFunction::from_steps("flat", vec![(0.0, 2.0), (1.0, 0.5)]).unwrap();
        assert_eq!(t.lp_norm(2.0).unwrap(), NormValue::Infinite);
        assert_eq!(t.sup_value(), None);
    }

    #[test]
    fn step_validation() {
        assert!(TailFunction::from_steps("x", vec![(0.5, 1.0)]).is_err());
        assert!(TailFunction::from_steps("x", vec![(0.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(TailFunction::from_steps("x", vec![(0.0, 1.0), (1.0, -0.5)]).is_err());
        assert!(TailFunction::from_steps("x", vec![(0.0, 1.0), (0.5, 0.8), (0.5, 0.2)]).is_err());
        let t = TailFunction::indicator(2.0).unwrap();
        assert!(t.lp_norm(0.5).is_err());
        assert!(t.tail_truncate(-1.0).is_err());
        assert!(t.scale(0.0).is_err());
    }

    // T(u) = 2 e^{-u} has |f|_p^p = 2 p integral u^{p-1} e^{-u} = 2 Gamma(p+1)
    fn exp_tail() -> TailFunction {
        TailFunction::closed("exp-tail", Extent::Finite(2.0), None, |t: f64| {
            std::f64::consts::LN_2 - t.exp()
        })
    }

    #[test]
    fn closed_tail_matches_gamma_moments() {
        let t = exp_tail();
        for p in [1.0, 1.5, 2.0, 3.7, 8.0, 21.0, 60.0] {
            let truth = ((std::f64::consts::LN_2 + ln_gamma(p + 1.0)) / p).exp();
            let got = fin(t.lp_norm(p).unwrap());
            assert!(rel(got, truth) < 1e-8, "p = {p}: {got} vs {truth}");
        }
    }

    #[test]
    fn closed_tail_huge_p_stays_accurate() {
        let t = exp_tail();
        for p in [1000.0, 131072.0] {
            let truth = ((std::f64::consts::LN_2 + ln_gamma(p + 1.0)) / p).exp();
            let got = fin(t.lp_norm(p).unwrap());
            assert!(rel(got, truth) < 1e-7, "p = {p}: {got} vs {truth}");
        }
    }

    // T(u) = 2 (u^{-2} - 1) on (0, 1), zero beyond: |x|^{-1/2} on |x| >= 1.
    // p integral u^{p-1} T du = 2 (p/(p-2) - 1) ... = 4/(p-2) - wait, kept
    // as the Gamma-form oracle below instead.
    fn sqrt_decay_tail() -> TailFunction {
        TailFunction::closed("inv-sqrt", Extent::Infinite, Some(1.0), |t: f64| {
            if t >= 0.0 {
                f64::NEG_INFINITY
            } else {
                std::f64::consts::LN_2 - 2.0 * t + log1m_exp(2.0 * t)
            }
        })
    }

    #[test]
    fn bounded_tail_with_infinite_mass() {
        let t = sqrt_decay_tail();
        // exact: |f|_p^p = 2 integral_1^inf x^{-p/2} dx = 2/(p/2 - 1) for p > 2
        for p in [2.5, 3.0, 5.0, 40.0] {
            let truth = (((2.0 / (p / 2.0 - 1.0)) as f64).ln() / p).exp();
            let got = fin(t.lp_norm(p).unwrap());
            assert!(rel(got, truth) < 1e-8, "p = {p}: {got} vs {truth}");
        }
        // at and below p = 2 the integral diverges
        assert_eq!(t.lp_norm(2.0).unwrap(), NormValue::Infinite);
        assert_eq!(t.lp_norm(1.0).unwrap(), NormValue::Infinite);
        // close to the divergence boundary from above
        let p = 2.0 + 1e-5;
        let truth = (((2.0 / (p / 2.0 - 1.0)) as f64).ln() / p).exp();
        assert!(rel(fin(t.lp_norm(p).unwrap()), truth) < 1e-6);
    }

    #[test]
    fn truncation_examples() {
        // indicator truncated above its sup vanishes
        let t = TailFunction::indicator(3.0).unwrap().tail_truncate(2.0).unwrap();
        assert_eq!(fin(t.lp_norm(2.0).unwrap()), 0.0);

        // exp tail truncated at 1: plateau 2/e below u=1, then the old tail
        let t = exp_tail().tail_truncate(1.0).unwrap();
        let one = 1.0f64;
        assert!(rel(t.value(0.5), 2.0 * (-one).exp()) < 1e-14);
        assert!(rel(t.value(1.5), 2.0 * (-1.5f64).exp()) < 1e-14);
        // |f'|_p^p = T(1)*1 + 2 p integral_1^inf u^{p-1} e^{-u} du (upper Gamma)
        let p: f64 = 3.0;
        let truth_log = log_add_exp(
            (2.0 * (-one).exp()).ln(),
            (2.0 * p).ln() + crate::special::ln_gamma_upper(p, 1.0),
        );
        let got = fin(t.lp_norm(p).unwrap());
        assert!(rel(got, (truth_log / p).exp()) < 1e-8);

        // sqrt-decay tail truncated at 1/2: T(0.5) = 2 (4 - 1) = 6
        let t = sqrt_decay_tail().tail_truncate(0.5).unwrap();
        assert!(rel(t.value(0.25), 6.0) < 1e-12);
        assert!(rel(t.value(0.75), 2.0 * (0.75f64.powi(-2) - 1.0)) < 1e-12);
        assert_eq!(t.total_mass().finite(), Some(t.value(0.5)));
    }

    #[test]
    fn truncation_never_increases_norms() {
        let t = exp_tail();
        for n in [0.25, 1.0, 4.0] {
            let tt = t.tail_truncate(n).unwrap();
            for p in [1.0, 2.0, 5.5] {
                let full = fin(t.lp_norm(p).unwrap());
                let cut = fin(tt.lp_norm(p).unwrap());
                assert!(cut <= full * (1.0 + 1e-12), "n = {n}, p = {p}");
            }
        }
        // and truncating a truncation keeps the outermost level
        let t2 = t.tail_truncate(1.0).unwrap().tail_truncate(0.25).unwrap();
        assert_eq!(t2.truncation(), Some(1.0));
    }

    #[test]
    fn scaling_is_exactly_homogeneous() {
        let t = TailFunction::from_steps("s", vec![(0.0, 2.0), (0.7, 1.1), (2.0, 0.0)]).unwrap();
        let c = 3.5;
        let tc = t.scale(c).unwrap();
        for p in [1.0, 2.0, 3.3] {
            let a = fin(tc.lp_norm(p).unwrap());
            let b = c * fin(t.lp_norm(p).unwrap());
            assert!(rel(a, b) < 1e-13, "p = {p}");
        }
        let e = exp_tail().scale(-2.0).unwrap();
        assert!(rel(fin(e.lp_norm(2.0).unwrap()), 2.0 * fin(exp_tail().lp_norm(2.0).unwrap())) < 1e-9);
    }

    #[test]
    fn disjoint_sum_adds_tails() {
        let a = TailFunction::indicator(1.0).unwrap();
        let b = TailFunction::from_steps("b", vec![(0.0, 3.0), (2.0, 0.0)]).unwrap();
        let s = a.sum_disjoint(&b);
        assert!(rel(s.value(0.5), 4.0) < 1e-14);
        assert!(rel(s.value(1.5), 3.0) < 1e-14);
        // |f+g|_1 = 1 + 6 when supports are disjoint
        assert!(rel(fin(s.lp_norm(1.0).unwrap()), 7.0) < 1e-14);
        // closed + step mix falls back to the evaluator form
        let m = exp_tail().sum_disjoint(&a);
        assert!(rel(m.value(0.5), 2.0 * (-0.5f64).exp() + 1.0) < 1e-14);
    }

    #[test]
    fn interpolation_examples() {
        assert!(rel(lyapunov_interpolate(1.0, 1.0, 1.0, 3.0, 2.0).unwrap(), 1.0) < 1e-15);
        // weights theta*p1/p = 1/4 and (1-theta)*p2/p = 3/4 on (2, 8)
        let z = lyapunov_interpolate(2.0, 8.0, 1.0, 3.0, 2.0).unwrap();
        assert!(rel(z, 2.0f64.powf(2.5)) < 1e-14);
        // indicator of measure 16: the bound is attained
        let t = TailFunction::indicator(16.0).unwrap();
        let n1 = fin(t.lp_norm(1.0).unwrap());
        let n2 = fin(t.lp_norm(2.0).unwrap());
        let p = 4.0 / 3.0;
        let z = lyapunov_interpolate(n1, n2, 1.0, 2.0, p).unwrap();
        let truth = fin(t.lp_norm(p).unwrap());
        assert!(rel(z, truth) < 1e-13);
        assert!(rel(z, 16.0f64.powf(0.75)) < 1e-13);
        // and for small measure too, where norms sit below 1
        let t = TailFunction::indicator(1.0 / 16.0).unwrap();
        let n1 = fin(t.lp_norm(1.0).unwrap());
        let n2 = fin(t.lp_norm(2.0).unwrap());
        let z = lyapunov_interpolate(n1, n2, 1.0, 2.0, p).unwrap();
        assert!(rel(z, fin(t.lp_norm(p).unwrap())) < 1e-13);
        assert!(lyapunov_interpolate(1.0, 1.0, 2.0, 1.0, 1.5).is_err());
        assert!(lyapunov_interpolate(1.0, f64::INFINITY, 1.0, 3.0, 2.0).is_err());
    }

    #[test]
    fn interpolation_dominates_on_gamma_moments() {
        let t = exp_tail();
        let cases = [(1.0, 2.0, 4.0), (2.0, 3.0, 6.0), (1.5, 4.0, 9.0)];
        for (p1, p, p2) in cases {
            let n1 = fin(t.lp_norm(p1).unwrap());
            let n2 = fin(t.lp_norm(p2).unwrap());
            let z = lyapunov_interpolate(n1, n2, p1, p2, p).unwrap();
            let v = fin(t.lp_norm(p).unwrap());
            assert!(v <= z + 1e-9, "({p1},{p},{p2}): {v} vs bound {z}");
        }
    }

    #[test]
    fn monotone_domination_in_distribution() {
        // T1 <= T2 pointwise forces |f1|_p <= |f2|_p
        let t1 = TailFunction::from_steps("lo", vec![(0.0, 1.0), (1.0, 0.2), (2.0, 0.0)]).unwrap();
        let t2 = TailFunction::from_steps("hi", vec![(0.0, 1.5), (1.0, 0.7), (3.0, 0.0)]).unwrap();
        for p in [1.0, 2.0, 4.0] {
            assert!(fin(t1.lp_norm(p).unwrap()) <= fin(t2.lp_norm(p).unwrap()));
        }
    }
}
