//! Closed-form catalog of example functions: power-log decay families on
//! the line and the unit interval, their exact tails, and closed moment
//! formulas where one exists.
//!
//! Tails are derived by inverting the defining function on each monotone
//! branch, in log-coordinates, so quadrature moments and the closed
//! formulas can be compared as genuinely independent computations.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::optimize::bisect_root;
use crate::psi::PsiFunction;
use crate::special::{ln_gamma, log1m_exp, log_add_exp};
use crate::support::{Extent, ExponentInterval};
use crate::tail::{NormValue, TailFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Interval,
    RealLine,
    HalfLine,
    ProbabilitySpace,
}

/// Coefficient rule for a sine-series representation on [-pi, pi].
#[derive(Clone)]
pub struct SeriesSpec {
    n_start: u64,
    coeff: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
}

impl SeriesSpec {
    pub fn n_start(&self) -> u64 {
        self.n_start
    }

    pub fn coeff(&self, n: u64) -> f64 {
        if n < self.n_start {
            0.0
        } else {
            (self.coeff)(n)
        }
    }
}

#[derive(Clone)]
pub enum Representation {
    Tail(TailFunction),
    SineSeries(SeriesSpec),
}

#[derive(Clone)]
struct MomentRule {
    support: ExponentInterval,
    // log of |f|_p^p when finite, None when the moment diverges
    log_moment: Arc<dyn Fn(f64) -> Option<f64> + Send + Sync>,
}

#[derive(Clone)]
pub struct CatalogFunction {
    name: String,
    family: String,
    params: Vec<(String, f64)>,
    domain: Domain,
    repr: Representation,
    moments: Option<MomentRule>,
}

impl std::fmt::Debug for CatalogFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogFunction")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

impl CatalogFunction {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    /// Exact tail, for families carrying one.
    pub fn tail(&self) -> Result<&TailFunction> {
        match &self.repr {
            Representation::Tail(t) => Ok(t),
            Representation::SineSeries(_) => Err(Error::Params(format!(
                "{} is series-represented and has no closed tail",
                self.name
            ))),
        }
    }

    pub fn series(&self) -> Option<&SeriesSpec> {
        match &self.repr {
            Representation::SineSeries(s) => Some(s),
            Representation::Tail(_) => None,
        }
    }

    /// Closed-form |f|_p, when the family has one. None means no formula;
    /// the Infinite marker means the formula says the moment diverges.
    pub fn closed_moment(&self, p: f64) -> Option<NormValue> {
        let rule = self.moments.as_ref()?;
        Some(match (rule.log_moment)(p) {
            Some(lm) => NormValue::Finite((lm / p).exp()),
            None => NormValue::Infinite,
        })
    }

    /// The open p-interval on which closed moments are finite.
    pub fn moment_support(&self) -> Option<ExponentInterval> {
        self.moments.as_ref().map(|r| r.support)
    }

    /// |f|_p as a weight function of p, built from the closed moments.
    pub fn moment_envelope(&self) -> Result<PsiFunction> {
        let rule = self.moments.as_ref().ok_or_else(|| {
            Error::Params(format!("{} has no closed moment formula", self.name))
        })?;
        let lm = rule.log_moment.clone();
        Ok(PsiFunction::from_log_fn(
            format!("moments of {}", self.name),
            rule.support,
            move |p: f64| match lm(p) {
                Some(v) => v / p,
                None => f64::INFINITY,
            },
        ))
    }
}

fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

struct Params {
    family: String,
    map: BTreeMap<String, f64>,
    used: std::cell::RefCell<Vec<String>>,
}

impl Params {
    fn get(&self, key: &str) -> Result<f64> {
        self.used.borrow_mut().push(key.to_string());
        self.map.get(key).copied().ok_or_else(|| {
            Error::Params(format!("{} needs parameter `{key}`", self.family))
        })
    }

    fn get_or(&self, key: &str, default: f64) -> f64 {
        self.used.borrow_mut().push(key.to_string());
        self.map.get(key).copied().unwrap_or(default)
    }

    fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        for k in self.map.keys() {
            if !used.iter().any(|u| u == k) {
                return Err(Error::Params(format!(
                    "unknown parameter `{k}` for {}",
                    self.family
                )));
            }
        }
        Ok(())
    }
}

// Monotone root located in log-coordinates, iterated to ulp resolution.
// Roots spanning hundreds of orders of magnitude keep full relative
// accuracy this way, where a linear bisection would leave jitter that the
// moment quadrature cannot smooth over.
fn log_root(g: impl Fn(f64) -> f64, ylo: f64, yhi: f64) -> f64 {
    let (mut lo, mut hi) = (ylo, yhi);
    let flo = g(lo.exp());
    if flo == 0.0 {
        return lo.exp();
    }
    let down = flo > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = g(mid.exp());
        if (fm > 0.0) == down && fm != 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

// tail of x^{-1/a} ln^gamma(x) on {|x| >= 1} as a log-space closure
fn f_line_tail(a: f64, gamma: f64) -> TailFunction {
    let name = format!("f(a={},gamma={})", fmt_num(a), fmt_num(gamma));
    let ln2 = std::f64::consts::LN_2;
    if gamma == 0.0 {
        return TailFunction::closed(name, Extent::Infinite, Some(1.0), move |t: f64| {
            if t >= 0.0 {
                f64::NEG_INFINITY
            } else {
                ln2 - a * t + log1m_exp(a * t)
            }
        });
    }
    let profile = move |t: f64| -t / a + gamma * t.ln();
    if gamma > 0.0 {
        let t_peak = a * gamma;
        let log_sup = profile(t_peak);
        let sup = log_sup.exp();
        return TailFunction::closed(name, Extent::Infinite, Some(sup), move |lu: f64| {
            if lu >= log_sup {
                return f64::NEG_INFINITY;
            }
            let mut g = |t: f64| profile(t) - lu;
            // the rising root collapses to x = 1 once the level drops below
            // the deepest representable point of the profile
            let t1 = if g(1e-300) >= 0.0 {
                0.0
            } else {
                bisect_root(&mut g, 1e-300, t_peak).expect("rising branch root")
            };
            let mut hi = t_peak.max(1.0) * 2.0;
            while g(hi) > 0.0 {
                hi *= 2.0;
            }
            let t2 = bisect_root(&mut g, t_peak, hi).expect("decaying branch root");
            ln2 + t2 + log1m_exp((t1 - t2).min(-1e-18))
        });
    }
    TailFunction::closed(name, Extent::Infinite, None, move |lu: f64| {
        // single decreasing branch, unbounded as x falls to 1
        let g = |t: f64| profile(t) - lu;
        if g(1e-300) <= 0.0 {
            return ln2 + lu / gamma;
        }
        let mut hi = 2.0;
        while g(hi) > 0.0 {
            hi *= 2.0;
        }
        let t = log_root(g, 1e-300f64.ln(), hi.ln());
        // measure 2 (e^t - 1)
        ln2 + t + log1m_exp(-t)
    })
}

// tail of x^{-1/b} |ln x|^nu on {0 < |x| <= 1}, total mass 2
fn g_unit_interval_tail(b: f64, nu: f64) -> TailFunction {
    let name = format!("g(b={},nu={})", fmt_num(b), fmt_num(nu));
    let ln2 = std::f64::consts::LN_2;
    if nu == 0.0 {
        return TailFunction::closed(name, Extent::Finite(2.0), None, move |t: f64| {
            if t <= 0.0 {
                ln2
            } else {
                ln2 - b * t
            }
        });
    }
    let profile = move |w: f64| w / b + nu * w.ln();
    if nu > 0.0 {
        return TailFunction::closed(name, Extent::Finite(2.0), None, move |lu: f64| {
            let mut g = |w: f64| profile(w) - lu;
            if g(1e-300) >= 0.0 {
                return ln2;
            }
            let mut hi = 2.0;
            while g(hi) < 0.0 {
                hi *= 2.0;
            }
            let w = bisect_root(&mut g, 1e-300, hi).expect("increasing profile root");
            ln2 - w
        });
    }
    let w_min = -b * nu;
    let log_min = profile(w_min);
    TailFunction::closed(name, Extent::Finite(2.0), None, move |lu: f64| {
        if lu <= log_min {
            return ln2;
        }
        // the level set splits around the interior minimum of the profile;
        // both roots live in log coordinates so neither branch underflows
        let gl = |lw: f64| lw.exp() / b + nu * lw - lu;
        let (mut lo, mut hi) = ((lu + 1.0) / nu, w_min.ln());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if gl(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lw1 = 0.5 * (lo + hi);
        let ln_near_one =
            if lw1 < -37.0 { lw1 } else { (-(-lw1.exp()).exp_m1()).ln() };
        let mut g = |w: f64| profile(w) - lu;
        let mut hi = w_min.max(1.0) * 2.0;
        while g(hi) < 0.0 {
            hi *= 2.0;
        }
        let w2 = bisect_root(&mut g, w_min, hi).expect("right branch root");
        ln2 + log_add_exp(ln_near_one, -w2)
    })
}

fn h_interval_tail(m: f64) -> TailFunction {
    let name = format!("h(m={})", fmt_num(m));
    TailFunction::closed(name, Extent::Finite(2.0), None, move |t: f64| {
        std::f64::consts::LN_2 - (m * t).exp()
    })
}

// tail of the two-regime generator: |x|^{-1/b} e^{c1 |ln x|^{1-alpha}} inside
// the unit interval, |x|^{-1/a} e^{c2 (ln x)^{1-beta}} outside
fn two_regime_tail(a: f64, b: f64, alpha: f64, beta: f64, c1: f64, c2: f64) -> TailFunction {
    let name = format!(
        "f(a={},b={},alpha={},beta={})",
        fmt_num(a),
        fmt_num(b),
        fmt_num(alpha),
        fmt_num(beta)
    );
    let t_peak = (a * c2 * (1.0 - beta)).powf(1.0 / beta);
    let outer_profile = move |t: f64| -t / a + c2 * t.powf(1.0 - beta);
    let log_sup_outer = outer_profile(t_peak);
    TailFunction::closed(name, Extent::Infinite, None, move |lu: f64| {
        let ln2 = std::f64::consts::LN_2;
        // inner piece: rises to infinity toward x = 0, equals 1 at |x| = 1
        let inner = if lu <= 0.0 {
            ln2
        } else {
            let mut g = |w: f64| w / b + c1 * w.powf(1.0 - alpha) - lu;
            if g(1e-300) >= 0.0 {
                ln2
            } else {
                let mut hi = 2.0;
                while g(hi) < 0.0 {
                    hi *= 2.0;
                }
                let w = bisect_root(&mut g, 1e-300, hi).expect("inner regime root");
                ln2 - w
            }
        };
        // outer piece: 1 at |x| = 1, peaks at t_peak, then decays
        let outer = if lu >= log_sup_outer {
            f64::NEG_INFINITY
        } else {
            let mut g = |t: f64| outer_profile(t) - lu;
            let mut hi = t_peak.max(1.0) * 2.0;
            while g(hi) > 0.0 {
                hi *= 2.0;
            }
            let t2 = bisect_root(&mut g, t_peak, hi).expect("outer decaying root");
            if lu <= 0.0 {
                // measure 2 (e^{t2} - 1)
                ln2 + t2 + log1m_exp(-t2)
            } else {
                let t1 = if g(1e-300) >= 0.0 {
                    0.0
                } else {
                    bisect_root(&mut g, 1e-300, t_peak).expect("outer rising root")
                };
                ln2 + t2 + log1m_exp((t1 - t2).min(-1e-18))
            }
        };
        log_add_exp(inner, outer)
    })
}

// log of 2 Gamma(p g + 1) (p/a - 1)^{-(p g + 1)}, the line-piece moment
fn line_log_moment(a: f64, g: f64, p: f64) -> Option<f64> {
    if p <= a || p * g <= -1.0 {
        return None;
    }
    let e = p * g + 1.0;
    Some(std::f64::consts::LN_2 + ln_gamma(e) - e * (p / a - 1.0).ln())
}

// log of 2 Gamma(p n + 1) (1 - p/b)^{-(p n + 1)}, the unit-interval moment
fn unit_log_moment(b: f64, n: f64, p: f64) -> Option<f64> {
    if p >= b || p * n <= -1.0 {
        return None;
    }
    let e = p * n + 1.0;
    Some(std::f64::consts::LN_2 + ln_gamma(e) - e * (1.0 - p / b).ln())
}

fn line_upper_cut(gamma: f64) -> Extent {
    if gamma < 0.0 {
        Extent::Finite(-1.0 / gamma)
    } else {
        Extent::Infinite
    }
}

/// Build a catalog entry by family name. Parameter keys are checked: a
/// missing or extraneous key is an error, as is a value outside the
/// family's validity range.
pub fn catalog_make(family: &str, params: &BTreeMap<String, f64>) -> Result<CatalogFunction> {
    let px = Params {
        family: family.to_string(),
        map: params.clone(),
        used: std::cell::RefCell::new(Vec::new()),
    };
    let mut entry = match family {
        "f_a_gamma" => {
            let a = px.get("a")?;
            let gamma = px.get("gamma")?;
            if !(a >= 1.0) || !a.is_finite() {
                return Err(Error::Params(format!("f_a_gamma needs a >= 1, got {a}")));
            }
            if !(gamma > -1.0 / a) || !gamma.is_finite() {
                return Err(Error::Params(format!(
                    "f_a_gamma needs gamma > -1/a = {}, got {gamma}",
                    -1.0 / a
                )));
            }
            let support = ExponentInterval::new(a.max(1.0), line_upper_cut(gamma))?;
            CatalogFunction {
                name: String::new(),
                family: family.into(),
                params: vec![("a".into(), a), ("gamma".into(), gamma)],
                domain: Domain::RealLine,
                repr: Representation::Tail(f_line_tail(a, gamma)),
                moments: Some(MomentRule {
                    support,
                    log_moment: Arc::new(move |p| line_log_moment(a, gamma, p)),
                }),
            }
        }
        "g_b_nu" => {
            let b = px.get("b")?;
            let nu = px.get("nu")?;
            if !(b > 1.0) || !b.is_finite() {
                return Err(Error::Params(format!("g_b_nu needs b > 1, got {b}")));
            }
            if !(nu > -1.0 / b) || !nu.is_finite() {
                return Err(Error::Params(format!(
                    "g_b_nu needs nu > -1/b = {}, got {nu}",
                    -1.0 / b
                )));
            }
            let support = ExponentInterval::finite(1.0, b)?;
            CatalogFunction {
                name: String::new(),
                family: family.into(),
                params: vec![("b".into(), b), ("nu".into(), nu)],
                domain: Domain::ProbabilitySpace,
                repr: Representation::Tail(g_unit_interval_tail(b, nu)),
                moments: Some(MomentRule {
                    support,
                    log_moment: Arc::new(move |p| unit_log_moment(b, nu, p)),
                }),
            }
        }
        "h_m" => {
            let m = px.get("m")?;
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::Params(format!("h_m needs m > 0, got {m}")));
            }
            let support = ExponentInterval::half_line(1.0)?;
            CatalogFunction {
                name: String::new(),
                family: family.into(),
                params: vec![("m".into(), m)],
                domain: Domain::ProbabilitySpace,
                repr: Representation::Tail(h_interval_tail(m)),
                moments: Some(MomentRule {
                    support,
                    log_moment: Arc::new(move |p| {
                        Some(std::f64::consts::LN_2 + ln_gamma(p / m + 1.0))
                    }),
                }),
            }
        }
        "f_ab_gamma_nu" => {
            let a = px.get("a")?;
            let b = px.get("b")?;
            let gamma = px.get("gamma")?;
            let nu = px.get("nu")?;
            if !(a >= 1.0 && b > a) || !b.is_finite() {
                return Err(Error::Params(format!(
                    "f_ab_gamma_nu needs 1 <= a < b, got ({a}, {b})"
                )));
            }
            if !(gamma > -1.0 / a) || !(nu > -1.0 / b) {
                return Err(Error::Params(
                    "f_ab_gamma_nu needs gamma > -1/a and nu > -1/b".into(),
                ));
            }
            let hi = match line_upper_cut(gamma) {
                Extent::Finite(c) => c.min(b),
                Extent::Infinite => b,
            };
            let support = ExponentInterval::finite(a.max(1.0), hi)?;
            let t = f_line_tail(a, gamma).sum_disjoint(&g_unit_interval_tail(b, nu));
            CatalogFunction {
                name: String::new(),
                family: family.into(),
                params: vec![
                    ("a".into(), a),
                    ("b".into(), b),
                    ("gamma".into(), gamma),
                    ("nu".into(), nu),
                ],
                domain: Domain::RealLine,
                repr: Representation::Tail(t),
                moments: Some(MomentRule {
                    support,
                    log_moment: Arc::new(move |p| {
                        match (line_log_moment(a, gamma, p), unit_log_moment(b, nu, p)) {
                            (Some(x), Some(y)) => Some(log_add_exp(x, y)),
                            _ => None,
                        }
                    }),
                }),
            }
        }
        "g_a_gamma_m" => {
            let a = px.get("a")?;
            let gamma = px.get("gamma")?;
            let m = px.get("m")?;
            if !(a >= 1.0) || !(gamma > -1.0 / a) || !(m > 0.0) {
                return Err(Error::Params(
                    "g_a_gamma_m needs a >= 1, gamma > -1/a, m > 0".into(),
                ));
            }
            let support = ExponentInterval::new(a.max(1.0), line_upper_cut(gamma))?;
            let t = f_line_tail(a, gamma).sum_disjoint(&h_interval_tail(m));
            CatalogFunction {
                name: String::new(),
                family: family.into(),
                params: vec![("a".into(), a), ("gamma".into(), gamma), ("m".into(), m)],
                domain: Domain::RealLine,
                repr: Representation::Tail(t),
                moments: Some(MomentRule {
                    support,
                    log_moment: Arc::new(move |p| {
                        line_log_moment(a, gamma, p).map(|x| {
                            log_add_exp(x, std::f64::consts::LN_2 + ln_gamma(p / m + 1.0))
                        })
                    }),
                }),
            }
        }
        "f_ab_alpha_beta" => {
            let a = px.get("a")?;
            let b = px.get("b")?;
            let alpha = px.get("alpha")?;
            let beta = px.get("beta")?;
            let c1 = px.get_or("c1", 1.0);
            let c2 = px.get_or("c2", 1.0);
            if !(a >= 1.0 && b > a && b.is_finite()) {
                return Err(Error::Params(format!(
                    "f_ab_alpha_beta needs 1 <= a < b, got ({a}, {b})"
                )));
            }
            if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) {
                return Err(Error::Params(
                    "f_ab_alpha_beta needs alpha, beta in (0, 1)".into(),
                ));
            }
            if !(c1 > 0.0 && c2 > 0.0) {
                return Err(Error::Params("f_ab_alpha_beta needs c1, c2 > 0".into()));
            }
            CatalogFunction {
                name: String::new(),
                family: family.into(),
                params: vec![
                    ("a".into(), a),
                    ("b".into(), b),
                    ("alpha".into(), alpha),
                    ("beta".into(), beta),
                    ("c1".into(), c1),
                    ("c2".into(), c2),
                ],
                domain: Domain::RealLine,
                repr: Representation::Tail(two_regime_tail(a, b, alpha, beta, c1, c2)),
                moments: None,
            }
        }
        "power_pair" => {
            let a = px.get("a")?;
            let b = px.get("b")?;
            if !(a >= 0.0 && b > a && b.is_finite()) {
                return Err(Error::Params(format!(
                    "power_pair needs 0 <= a < b, got ({a}, {b})"
                )));
            }
            let mass = if a == 0.0 { Extent::Finite(2.0) } else { Extent::Infinite };
            let t = TailFunction::closed(
                format!("power_pair(a={},b={})", fmt_num(a), fmt_num(b)),
                mass,
                None,
                move |t: f64| {
                    if t < 0.0 {
                        std::f64::consts::LN_2 - a * t
                    } else {
                        std::f64::consts::LN_2 - b * t
                    }
                },
            );
            let support = ExponentInterval::finite(a.max(1.0), b)?;
            CatalogFunction {
                name: String::new(),
                family: family.into(),
                params: vec![("a".into(), a), ("b".into(), b)],
                domain: Domain::HalfLine,
                repr: Representation::Tail(t),
                moments: Some(MomentRule {
                    support,
                    log_moment: Arc::new(move |p| {
                        if p <= a || p >= b {
                            None
                        } else {
                            Some((2.0 * p * (1.0 / (p - a) + 1.0 / (b - p))).ln())
                        }
                    }),
                }),
            }
        }
        "g_unit" => {
            let b = px.get("b")?;
            if !(b > 1.0) || !b.is_finite() {
                return Err(Error::Params(format!("g_unit needs b > 1, got {b}")));
            }
            let t = TailFunction::closed(
                format!("g_unit(b={})", fmt_num(b)),
                Extent::Finite(1.0),
                None,
                move |t: f64| if t <= 0.0 { 0.0 } else { -b * t },
            );
            let support = ExponentInterval::finite(1.0, b)?;
            CatalogFunction {
                name: String::new(),
                family: family.into(),
                params: vec![("b".into(), b)],
                domain: Domain::ProbabilitySpace,
                repr: Representation::Tail(t),
                moments: Some(MomentRule {
                    support,
                    log_moment: Arc::new(move |p| {
                        if p >= b {
                            None
                        } else {
                            Some(-(1.0 - p / b).ln())
                        }
                    }),
                }),
            }
        }
        "indicator" => {
            let delta = px.get("delta")?;
            let t = TailFunction::indicator(delta)?;
            let support = ExponentInterval::half_line(1.0)?;
            CatalogFunction {
                name: String::new(),
                family: family.into(),
                params: vec![("delta".into(), delta)],
                domain: Domain::ProbabilitySpace,
                repr: Representation::Tail(t),
                moments: Some(MomentRule {
                    support,
                    log_moment: Arc::new(move |_p| Some(delta.ln())),
                }),
            }
        }
        "f_d" => {
            let d = px.get("d")?;
            if !(d >= 0.0) || !d.is_finite() {
                return Err(Error::Params(format!("f_d needs d >= 0, got {d}")));
            }
            CatalogFunction {
                name: String::new(),
                family: family.into(),
                params: vec![("d".into(), d)],
                domain: Domain::Interval,
                repr: Representation::SineSeries(SeriesSpec {
                    n_start: 2,
                    coeff: Arc::new(move |n: u64| {
                        let x = n as f64;
                        x.ln().powf(d) / x
                    }),
                }),
                moments: None,
            }
        }
        "g_d" => {
            let d = px.get("d")?;
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Params(format!("g_d needs d in (0, 1), got {d}")));
            }
            CatalogFunction {
                name: String::new(),
                family: family.into(),
                params: vec![("d".into(), d)],
                domain: Domain::Interval,
                repr: Representation::SineSeries(SeriesSpec {
                    n_start: 1,
                    coeff: Arc::new(move |n: u64| (n as f64).powf(d - 1.0)),
                }),
                moments: None,
            }
        }
        other => {
            return Err(Error::Params(format!("unknown catalog family `{other}`")));
        }
    };
    px.finish()?;
    let args = entry
        .params
        .iter()
        .map(|(k, v)| format!("{k}={}", fmt_num(*v)))
        .collect::<Vec<_>>()
        .join(",");
    entry.name = format!("{}({})", entry.family, args);
    Ok(entry)
}

/// Slice-of-pairs convenience over [`catalog_make`].
pub fn make(family: &str, params: &[(&str, f64)]) -> Result<CatalogFunction> {
    let map: BTreeMap<String, f64> =
        params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    catalog_make(family, &map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn agree(f: &CatalogFunction, p: f64, tol: f64) {
        let quad = f.tail().unwrap().lp_norm(p).unwrap();
        let closed = f.closed_moment(p).unwrap();
        match (quad, closed) {
            (NormValue::Finite(x), NormValue::Finite(y)) => {
                assert!(rel(x, y) < tol, "{} p={p}: quad {x} vs closed {y}", f.name());
            }
            (a, b) => panic!("{} p={p}: {a:?} vs {b:?}", f.name()),
        }
    }

    #[test]
    fn plain_power_tail_and_cube_moment() {
        let f = make("f_a_gamma", &[("a", 2.0), ("gamma", 0.0)]).unwrap();
        let t = f.tail().unwrap();
        assert!(rel(t.value(0.5), 6.0) < 1e-12);
        assert_eq!(t.value(2.0), 0.0);
        assert_eq!(t.sup_value(), Some(1.0));
        // closed cube moment at (a=2, gamma=1): 2 Gamma(4) / (1/2)^4 = 192
        let f = make("f_a_gamma", &[("a", 2.0), ("gamma", 1.0)]).unwrap();
        let m3 = f.closed_moment(3.0).unwrap().expect_finite("m3").powi(3);
        assert!(rel(m3, 192.0) < 1e-12);
        agree(&f, 3.0, 1e-7);
    }

    #[test]
    fn rising_profile_needs_both_branches() {
        let f = make("f_a_gamma", &[("a", 2.0), ("gamma", 1.0)]).unwrap();
        let t = f.tail().unwrap();
        let sup = (2.0f64 / std::f64::consts::E).powi(1);
        assert!(rel(t.sup_value().unwrap(), sup) < 1e-12);
        assert_eq!(t.value(sup * 1.0001), 0.0);
        assert!(t.value(sup * 0.9999) > 0.0);
        // level set at u just under the left edge value: x^{-1/2} ln x = u has
        // its lower root near 1 and upper root far out; tail is their gap
        for p in [2.3, 3.0, 4.0, 7.0] {
            agree(&f, p, 1e-7);
        }
    }

    #[test]
    fn falling_log_factor_single_branch() {
        let f = make("f_a_gamma", &[("a", 2.0), ("gamma", -0.2)]).unwrap();
        for p in [2.4, 3.0, 4.4] {
            agree(&f, p, 1e-7);
        }
        // moments die at p = -1/gamma = 5
        assert_eq!(f.closed_moment(5.0).unwrap(), NormValue::Infinite);
        assert_eq!(f.moment_support().unwrap().b, Extent::Finite(5.0));
    }

    #[test]
    fn unit_interval_family_all_signs() {
        let f = make("g_b_nu", &[("b", 3.0), ("nu", 0.0)]).unwrap();
        let t = f.tail().unwrap();
        assert!(rel(t.value(0.5), 2.0) < 1e-14);
        assert!(rel(t.value(2.0), 2.0 * 2.0f64.powi(-3)) < 1e-12);
        for p in [1.0, 2.0, 2.9] {
            agree(&f, p, 1e-7);
        }
        let f = make("g_b_nu", &[("b", 3.0), ("nu", 0.7)]).unwrap();
        for p in [1.0, 2.0, 2.8] {
            agree(&f, p, 1e-7);
        }
        let f = make("g_b_nu", &[("b", 3.0), ("nu", -0.25)]).unwrap();
        let t = f.tail().unwrap();
        // profile minimum (b nu / e)^nu caps the full-mass region
        let m = (0.75f64 / std::f64::consts::E).powf(-0.25);
        assert!(rel(t.value(m * 0.999), 2.0) < 1e-12);
        assert!(t.value(m * 1.001) < 2.0);
        for p in [1.0, 2.0, 2.9] {
            agree(&f, p, 1e-7);
        }
    }

    #[test]
    fn log_power_interval_moments() {
        for m in [1.0, 2.0, 4.0] {
            let f = make("h_m", &[("m", m)]).unwrap();
            assert!(rel(f.tail().unwrap().value(1.3), 2.0 * (-(1.3f64.powf(m))).exp()) < 1e-12);
            for p in [1.0, 2.5, 6.0, 17.0] {
                agree(&f, p, 1e-7);
            }
        }
        // |h_1|_2 = (2 Gamma(3))^{1/2} = 2
        let f = make("h_m", &[("m", 1.0)]).unwrap();
        assert!(rel(f.closed_moment(2.0).unwrap().expect_finite("h"), 2.0) < 1e-14);
    }

    #[test]
    fn combined_families_sum_their_pieces() {
        let f = make(
            "f_ab_gamma_nu",
            &[("a", 1.5), ("b", 4.0), ("gamma", 0.5), ("nu", 0.25)],
        )
        .unwrap();
        for p in [1.8, 2.5, 3.6] {
            agree(&f, p, 1e-7);
        }
        assert_eq!(f.closed_moment(1.4).unwrap(), NormValue::Infinite);
        assert_eq!(f.closed_moment(4.2).unwrap(), NormValue::Infinite);

        let g = make("g_a_gamma_m", &[("a", 2.0), ("gamma", 0.0), ("m", 2.0)]).unwrap();
        for p in [2.2, 3.0, 8.0] {
            agree(&g, p, 1e-7);
        }
    }

    #[test]
    fn half_line_pair_and_unit_power() {
        let f = make("power_pair", &[("a", 1.0), ("b", 2.0)]).unwrap();
        for p in [1.2, 1.5, 1.9] {
            agree(&f, p, 1e-7);
        }
        let g = make("g_unit", &[("b", 2.0)]).unwrap();
        // |g|_p = (1 - p/2)^{-1/p}
        for p in [1.0, 1.5, 1.9] {
            let v = g.closed_moment(p).unwrap().expect_finite("g_unit");
            assert!(rel(v, (1.0 - p / 2.0).powf(-1.0 / p)) < 1e-13);
            agree(&g, p, 1e-7);
        }
    }

    #[test]
    fn two_regime_tail_shape() {
        let f = make(
            "f_ab_alpha_beta",
            &[("a", 1.5), ("b", 3.0), ("alpha", 0.5), ("beta", 0.5)],
        )
        .unwrap();
        let t = f.tail().unwrap();
        // T(1) = 2 e^{t2} with t2 = (a c2)^{1/beta}: both pieces contribute
        let t2 = (1.5f64).powf(2.0);
        assert!(rel(t.value(1.0), 2.0 * t2.exp()) < 1e-9);
        // non-increasing along a grid
        let mut prev = f64::INFINITY;
        for k in 0..60 {
            let u = 0.05 * 1.3f64.powi(k);
            let v = t.value(u);
            assert!(v <= prev * (1.0 + 1e-12), "u = {u}");
            prev = v;
        }
        // finite moments strictly inside (a, b)
        let n = t.lp_norm(2.0).unwrap();
        assert!(n.is_finite());
        assert_eq!(t.lp_norm(1.2).unwrap(), NormValue::Infinite);
    }

    #[test]
    fn series_families_expose_coefficients() {
        let f = make("f_d", &[("d", 1.0)]).unwrap();
        let s = f.series().unwrap();
        assert_eq!(s.n_start(), 2);
        assert_eq!(s.coeff(1), 0.0);
        assert!(rel(s.coeff(2), 2.0f64.ln() / 2.0) < 1e-15);
        assert!(f.tail().is_err());
        let g = make("g_d", &[("d", 0.5)]).unwrap();
        assert!(rel(g.series().unwrap().coeff(4), 0.5) < 1e-15);
        assert!(g.moment_envelope().is_err());
    }

    #[test]
    fn envelope_tracks_closed_moments() {
        let f = make("f_a_gamma", &[("a", 2.0), ("gamma", 1.0)]).unwrap();
        let psi = f.moment_envelope().unwrap();
        for p in [2.5, 3.0, 6.0] {
            let a = psi.value(p).unwrap();
            let b = f.closed_moment(p).unwrap().expect_finite("moment");
            assert!(rel(a, b) < 1e-13);
        }
        assert!(psi.value(1.5).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(make("no_such_family", &[]).is_err());
        assert!(make("f_a_gamma", &[("a", 2.0)]).is_err());
        assert!(make("f_a_gamma", &[("a", 2.0), ("gamma", 0.0), ("zz", 1.0)]).is_err());
        assert!(make("f_a_gamma", &[("a", 0.5), ("gamma", 0.0)]).is_err());
        assert!(make("f_a_gamma", &[("a", 2.0), ("gamma", -0.6)]).is_err());
        assert!(make("g_b_nu", &[("b", 1.0), ("nu", 0.0)]).is_err());
        assert!(make("h_m", &[("m", 0.0)]).is_err());
        assert!(make("f_ab_gamma_nu", &[("a", 3.0), ("b", 2.0), ("gamma", 0.0), ("nu", 0.0)])
            .is_err());
        assert!(make("f_ab_alpha_beta", &[("a", 1.0), ("b", 2.0), ("alpha", 1.0), ("beta", 0.5)])
            .is_err());
        assert!(make("g_d", &[("d", 1.5)]).is_err());
        let f = make("indicator", &[("delta", 4.0)]).unwrap();
        assert_eq!(f.name(), "indicator(delta=4)");
    }
}
