//! Weight functions psi(p) on an exponent interval: the two-branch power
//! family with crossover root h, moment-derived weights, tabulated weights,
//! index transforms, the domination relation, and the convexity check on
//! p * log psi.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ladder::{classify_ladder, LadderVerdict};
use crate::optimize::bisect_root;
use crate::support::{Extent, ExponentInterval};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum PsiKind {
    ZetaFamily,
    CatalogMoment,
    TabulatedGrid,
    Transformed,
}

/// Parameters of the two-branch weight: zeta(p) = (p-a)^alpha left of h and
/// (b-p)^beta (finite b) or p^beta (infinite b) right of h, with h the root
/// gluing the branches continuously.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ZetaParams {
    pub a: f64,
    pub b: Extent,
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
}

impl ZetaParams {
    pub fn support(&self) -> ExponentInterval {
        ExponentInterval { a: self.a, b: self.b }
    }

    /// Log of the left branch (p-a)^alpha.
    pub fn log_branch_low(&self, p: f64) -> f64 {
        self.alpha * (p - self.a).ln()
    }

    /// Log of the right branch: (b-p)^beta for finite b, p^beta otherwise.
    pub fn log_branch_high(&self, p: f64) -> f64 {
        match self.b {
            Extent::Finite(b) => self.beta * (b - p).ln(),
            Extent::Infinite => self.beta * p.ln(),
        }
    }

    /// Log of zeta(p) on the open support.
    pub fn log_raw(&self, p: f64) -> Result<f64> {
        if !self.support().contains(p) {
            return Err(Error::Support(format!("p = {p} outside ({}, {:?})", self.a, self.b)));
        }
        Ok(if p < self.h { self.log_branch_low(p) } else { self.log_branch_high(p) })
    }

    pub fn raw(&self, p: f64) -> Result<f64> {
        self.log_raw(p).map(f64::exp)
    }
}

/// Positive weight on an open exponent interval, carried as log psi.
#[derive(Clone)]
pub struct PsiFunction {
    name: String,
    support: ExponentInterval,
    kind: PsiKind,
    log_eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    zeta: Option<ZetaParams>,
}

impl std::fmt::Debug for PsiFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PsiFunction")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("kind", &self.kind)
            .finish()
    }
}

fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

impl PsiFunction {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> ExponentInterval {
        self.support
    }

    pub fn kind(&self) -> PsiKind {
        self.kind
    }

    /// Present exactly when this weight was built by [`zeta_make`].
    pub fn zeta_params(&self) -> Option<ZetaParams> {
        self.zeta
    }

    pub fn log_value(&self, p: f64) -> Result<f64> {
        if !self.support.contains(p) {
            return Err(Error::Support(format!(
                "p = {p} outside the support of {}",
                self.name
            )));
        }
        Ok((self.log_eval)(p))
    }

    pub fn value(&self, p: f64) -> Result<f64> {
        self.log_value(p).map(f64::exp)
    }

    /// Weight from an explicit log-evaluator.
    pub fn from_log_fn(
        name: impl Into<String>,
        support: ExponentInterval,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> PsiFunction {
        PsiFunction {
            name: name.into(),
            support,
            kind: PsiKind::CatalogMoment,
            log_eval: Arc::new(f),
            zeta: None,
        }
    }

    /// Monotone piecewise-cubic interpolation of tabulated (p, psi) pairs,
    /// carried out on log psi so the interpolant stays positive.
    pub fn tabulated(name: impl Into<String>, points: &[(f64, f64)]) -> Result<PsiFunction> {
        if points.len() < 3 {
            return Err(Error::Params("tabulated weight needs at least 3 points".into()));
        }
        let xs: Vec<f64> = points.iter().map(|q| q.0).collect();
        if !xs.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Params("tabulated p values must be strictly increasing".into()));
        }
        if points.iter().any(|q| !(q.1 > 0.0) || !q.1.is_finite()) {
            return Err(Error::Params("tabulated psi values must be positive finite".into()));
        }
        let ys: Vec<f64> = points.iter().map(|q| q.1.ln()).collect();
        let ds = pchip_slopes(&xs, &ys);
        let support = ExponentInterval::new(xs[0], Extent::Finite(xs[xs.len() - 1]))?;
        let (xs, ys, ds) = (Arc::new(xs), Arc::new(ys), Arc::new(ds));
        Ok(PsiFunction {
            name: name.into(),
            support,
            kind: PsiKind::TabulatedGrid,
            log_eval: Arc::new(move |p| pchip_eval(&xs, &ys, &ds, p)),
            zeta: None,
        })
    }

    /// Apply an index transform, recomputing the support interval.
    pub fn transform(&self, rule: TransformRule) -> Result<PsiFunction> {
        let src = self.log_eval.clone();
        let (name, support, log_eval): (String, ExponentInterval, Arc<dyn Fn(f64) -> f64 + Send + Sync>) =
            match rule {
                TransformRule::ConjugateIndex => {
                    if (self.support.a - 1.0).abs() > 1e-12 {
                        return Err(Error::Precondition(format!(
                            "conjugate-index needs support down to 1, got a = {}",
                            self.support.a
                        )));
                    }
                    if let Extent::Finite(b) = self.support.b {
                        if b < 2.0 {
                            return Err(Error::Precondition(format!(
                                "conjugate-index needs support through 2, got b = {b}"
                            )));
                        }
                    }
                    let a_img = match self.support.b {
                        Extent::Finite(b) => b / (b - 1.0),
                        Extent::Infinite => 1.0,
                    };
                    (
                        format!("conjugate-index({})", self.name),
                        ExponentInterval::new(a_img.max(1.0), Extent::Infinite)?,
                        Arc::new(move |p: f64| src(p / (p - 1.0))),
                    )
                }
                TransformRule::Mult { s } => {
                    if !(s > 1.0) {
                        return Err(Error::Params(format!("mult-s needs s > 1, got {s}")));
                    }
                    // index map q = p s / (s - p), inverse p = q s / (s + q)
                    let a = self.support.a;
                    let a_img = (a * s / (s + a)).max(1.0);
                    let b_img = match self.support.b {
                        Extent::Finite(b) => b * s / (s + b),
                        Extent::Infinite => s,
                    };
                    if b_img <= a_img {
                        return Err(Error::Precondition(format!(
                            "mult-s image support ({a_img}, {b_img}) is empty"
                        )));
                    }
                    (
                        format!("mult({},s={})", self.name, fmt_num(s)),
                        ExponentInterval::new(a_img, Extent::Finite(b_img))?,
                        Arc::new(move |p: f64| src(p * s / (s - p))),
                    )
                }
                TransformRule::Conv { s } => {
                    if !(s > 1.0) {
                        return Err(Error::Params(format!("conv-s needs s > 1, got {s}")));
                    }
                    let t = s / (s - 1.0);
                    let a = self.support.a;
                    if a >= t {
                        return Err(Error::Precondition(format!(
                            "conv-s image support empty: lower bound {a} >= conjugate exponent {t}"
                        )));
                    }
                    let a_img = (a * t / (t - a)).max(1.0);
                    let b_img = match self.support.b {
                        Extent::Finite(b) if b < t => Extent::Finite(b * t / (t - b)),
                        _ => Extent::Infinite,
                    };
                    if let Extent::Finite(bi) = b_img {
                        if bi <= a_img {
                            return Err(Error::Precondition(format!(
                                "conv-s image support ({a_img}, {bi}) is empty"
                            )));
                        }
                    }
                    (
                        format!("conv({},s={})", self.name, fmt_num(s)),
                        ExponentInterval::new(a_img, b_img)?,
                        Arc::new(move |p: f64| src(p * t / (p + t))),
                    )
                }
                TransformRule::LambdaGamma { lambda, gamma } => {
                    if lambda < 0.0 || gamma < 0.0 {
                        return Err(Error::Params(format!(
                            "lambda-gamma needs nonnegative parameters, got ({lambda}, {gamma})"
                        )));
                    }
                    (
                        format!("lambda-gamma({},{},{})", self.name, fmt_num(lambda), fmt_num(gamma)),
                        self.support,
                        Arc::new(move |p: f64| {
                            (lambda + gamma) * p.ln() + src(p) - gamma * (p - 1.0).ln()
                        }),
                    )
                }
            };
        Ok(PsiFunction { name, support, kind: PsiKind::Transformed, log_eval, zeta: None })
    }
}

/// Index transforms on weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformRule {
    /// psi1(p) = psi(p/(p-1))
    ConjugateIndex,
    /// psi_(s)(p) = psi(ps/(s-p))
    Mult { s: f64 },
    /// psi^(s)(p) = psi(pt/(p+t)), t = s/(s-1)
    Conv { s: f64 },
    /// psi_{lambda,gamma}(p) = p^(lambda+gamma) psi(p) (p-1)^(-gamma)
    LambdaGamma { lambda: f64, gamma: f64 },
}

/// Build the two-branch weight. The returned PsiFunction evaluates
/// psi = 1/zeta, which is singular where a branch exponent is positive;
/// the raw zeta is available through [`PsiFunction::zeta_params`].
pub fn zeta_make(a: f64, b: Extent, alpha: f64, beta: f64) -> Result<PsiFunction> {
    if !a.is_finite() || a < 1.0 {
        return Err(Error::Regime(format!("lower bound must satisfy a >= 1, got {a}")));
    }
    let h = match b {
        Extent::Finite(bv) => {
            if !(bv > a) || !bv.is_finite() {
                return Err(Error::Regime(format!("need b > a, got ({a}, {bv})")));
            }
            if !(alpha > 0.0) || !(beta > 0.0) {
                return Err(Error::Regime(format!(
                    "finite upper bound needs both exponents positive, got ({alpha}, {beta})"
                )));
            }
            // (h-a)^alpha = (b-h)^beta; the log residual is monotone increasing
            bisect_root(&mut |h: f64| alpha * (h - a).ln() - beta * (bv - h).ln(), a, bv)?
        }
        Extent::Infinite => {
            if !(beta < 0.0) {
                return Err(Error::Regime(format!(
                    "infinite upper bound needs a negative second exponent, got {beta}"
                )));
            }
            if alpha < 0.0 {
                return Err(Error::Regime(format!(
                    "infinite upper bound needs a nonnegative first exponent, got {alpha}"
                )));
            }
            if alpha == 0.0 {
                // single-branch case: zeta(p) = p^beta throughout, no crossover
                a
            } else {
                // (h-a)^alpha = h^beta, residual increasing in h
                let mut hi = a + a.max(1.0);
                let mut res = |h: f64| alpha * (h - a).ln() - beta * h.ln();
                while res(hi) < 0.0 {
                    hi = a + (hi - a) * 4.0;
                    if hi > 1e100 {
                        return Err(Error::NonConvergence("crossover bracket ran away".into()));
                    }
                }
                bisect_root(&mut res, a, hi)?
            }
        }
    };
    let params = ZetaParams { a, b, alpha, beta, h };
    let name = format!(
        "zeta(a={},b={},alpha={},beta={})",
        fmt_num(a),
        match b {
            Extent::Finite(bv) => fmt_num(bv),
            Extent::Infinite => "inf".into(),
        },
        fmt_num(alpha),
        fmt_num(beta)
    );
    Ok(PsiFunction {
        name,
        support: ExponentInterval { a, b },
        kind: PsiKind::ZetaFamily,
        log_eval: Arc::new(move |p| {
            -(if p < params.h { params.log_branch_low(p) } else { params.log_branch_high(p) })
        }),
        zeta: Some(params),
    })
}

/// Ratio of zeta to the smaller of its two branch values over a grid.
/// Returns (inf, sup) of the ratio; both must be positive and finite.
pub fn zeta_envelope_check(params: &ZetaParams, grid: &[f64]) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(Error::Params("empty grid".into()));
    }
    let sup = params.support();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &p in grid {
        if !sup.contains(p) {
            return Err(Error::Support(format!("grid point {p} outside the support")));
        }
        let lz = params.log_raw(p)?;
        let env = params.log_branch_low(p).min(params.log_branch_high(p));
        let r = (lz - env).exp();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

/// Per-endpoint outcome of the domination probe.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EndpointDomination {
    /// Whether this endpoint gates the verdict (the infinite upper end does not).
    pub assessed: bool,
    /// The second weight blows up approaching this endpoint.
    pub nu2_singular: bool,
    /// nu1/nu2 along the probe ladder, shallow to deep.
    pub ratios: Vec<f64>,
    pub last_ratio: f64,
    /// Ratio ladder extrapolates to (essentially) zero.
    pub vanishes: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DominationReport {
    pub lower: EndpointDomination,
    pub upper: EndpointDomination,
    pub holds: bool,
}

fn probe_endpoint(nu1: &PsiFunction, nu2: &PsiFunction, probes: &[f64], assessed: bool) -> EndpointDomination {
    let mut ratios = Vec::with_capacity(probes.len());
    let mut v2 = Vec::with_capacity(probes.len());
    for &p in probes {
        let l1 = (nu1.log_eval)(p);
        let l2 = (nu2.log_eval)(p);
        ratios.push((l1 - l2).exp());
        v2.push(l2.exp());
    }
    let nu2_singular = matches!(classify_ladder(&v2), LadderVerdict::Diverging);
    let first = ratios.first().copied().unwrap_or(0.0);
    let last_ratio = ratios.last().copied().unwrap_or(0.0);
    // clear decay to zero: strictly decreasing, deep rung tiny against the
    // shallow one, and still shrinking geometrically at the deep end
    let vanishes = ratios.len() >= 3
        && ratios.windows(2).all(|w| w[1] < w[0])
        && last_ratio <= 0.02 * first
        && last_ratio <= 0.6 * ratios[ratios.len() - 2];
    EndpointDomination { assessed, nu2_singular, ratios, last_ratio, vanishes }
}

/// Domination nu1 << nu2: nu1/nu2 vanishes at every assessed endpoint where
/// nu2 blows up. False when nu2 blows up at no assessed endpoint. `eps` sets
/// the deepest probe offset (as a fraction of the interval scale).
pub fn psi_dominates(nu1: &PsiFunction, nu2: &PsiFunction, eps: f64) -> Result<DominationReport> {
    if !nu1.support().same_as(&nu2.support()) {
        return Err(Error::Precondition(format!(
            "mismatched supports: {:?} vs {:?}",
            nu1.support(),
            nu2.support()
        )));
    }
    if !(eps > 0.0) || eps >= 0.1 {
        return Err(Error::Params(format!("probe depth eps must lie in (0, 0.1), got {eps}")));
    }
    let sup = nu1.support();
    let scale = sup.offset_scale();
    let mut offs = Vec::new();
    let mut o = 1e-1;
    while o > eps * 1.0000001 {
        offs.push(o);
        o /= 10.0;
    }
    offs.push(eps);

    let lower_probes: Vec<f64> =
        offs.iter().map(|o| sup.a + o * scale).filter(|p| sup.contains(*p)).collect();
    let lower = probe_endpoint(nu1, nu2, &lower_probes, true);

    let upper = match sup.b {
        Extent::Finite(b) => {
            let probes: Vec<f64> =
                offs.iter().map(|o| b - o * scale).filter(|p| sup.contains(*p)).collect();
            probe_endpoint(nu1, nu2, &probes, true)
        }
        Extent::Infinite => {
            // growth at p -> infinity is universal for moment weights and does
            // not witness endpoint singularity; probe for diagnostics only
            let probes = sup.upper_ladder();
            probe_endpoint(nu1, nu2, &probes, false)
        }
    };

    let mut gated = false;
    let mut holds = true;
    for e in [&lower, &upper] {
        if e.assessed && e.nu2_singular {
            gated = true;
            holds &= e.vanishes;
        }
    }
    Ok(DominationReport { lower, upper, holds: gated && holds })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvexityReport {
    pub ok: bool,
    pub max_violation: f64,
    pub points: usize,
}

/// Necessary condition for a moment weight: p * log psi(p) convex. Checks
/// midpoint violations against the linear interpolant of the neighbors on a
/// strictly increasing interior grid of at least 5 points.
pub fn plog_convexity_check(psi: &PsiFunction, grid: &[f64]) -> Result<ConvexityReport> {
    if grid.len() < 5 {
        return Err(Error::Params("convexity grid needs at least 5 points".into()));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Params("convexity grid must be strictly increasing".into()));
    }
    let mut phi = Vec::with_capacity(grid.len());
    for &p in grid {
        phi.push(p * psi.log_value(p)?);
    }
    let scale = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * (1.0 + scale);
    let mut max_violation = 0.0f64;
    for i in 1..grid.len() - 1 {
        let h0 = grid[i] - grid[i - 1];
        let h1 = grid[i + 1] - grid[i];
        let lin = (phi[i - 1] * h1 + phi[i + 1] * h0) / (h0 + h1);
        max_violation = max_violation.max(phi[i] - lin);
    }
    Ok(ConvexityReport { ok: max_violation <= tol, max_violation, points: grid.len() })
}

pub(crate) fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if del[i - 1] * del[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
        }
    }
    let edge = |h0: f64, h1: f64, d0: f64, d1: f64| -> f64 {
        let mut d_end = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if d_end * d0 <= 0.0 {
            d_end = 0.0;
        } else if d0 * d1 <= 0.0 && d_end.abs() > 3.0 * d0.abs() {
            d_end = 3.0 * d0;
        }
        d_end
    };
    d[0] = edge(h[0], h[1], del[0], del[1]);
    d[n - 1] = edge(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

pub(crate) fn pchip_eval(xs: &[f64], ys: &[f64], ds: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let i = match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    };
    let h = xs[i + 1] - xs[i];
    let t = (x - xs[i]) / h;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * ys[i] + h10 * h * ds[i] + h01 * ys[i + 1] + h11 * h * ds[i + 1]
}
