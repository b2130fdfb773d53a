//! Orlicz-side comparisons. A weight with a finite exponent range induces a
//! convex envelope N(u) = sup_p (|u|/psi(p))^p and a Young conjugate; the
//! witnesses below probe whether the sup-of-moments space can be traded for
//! an Orlicz or Marcinkiewicz norm, and the ratio audit tests a candidate
//! member of the dual space against the necessary tail-integral bound.

use serde::Serialize;

use crate::catalog::CatalogFunction;
use crate::error::{Error, Result};
use crate::gnorm::{fundamental_phi, g_norm, Moments};
use crate::ladder::LadderVerdict;
use crate::optimize::golden_max;
use crate::psi::{pchip_eval, pchip_slopes, PsiFunction};
use crate::quad::{adaptive_log, decade_integral_log_from, DecadeOutcome};
use crate::support::Extent;
use crate::tail::{NormValue, TailFunction};

/// One node of the tabulated envelope.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnvelopeSample {
    pub u: f64,
    pub n_psi: f64,
    pub conjugate: f64,
}

/// Convex envelope of a weight with finite upper exponent, with its Young
/// conjugate. Evaluators are exact; the sample grid is a convenience view.
pub struct OrliczEnvelope {
    psi: PsiFunction,
    samples: Vec<EnvelopeSample>,
}

/// Maximize p (lu - ln psi(p)) over the weight's exponent range. Returns the
/// log of the envelope value and the exponent carrying it. The grid mirrors
/// the norm engine: interior probes plus geometric endpoint offsets, refined
/// by golden section around the grid best.
fn envelope_max(psi: &PsiFunction, lu: f64) -> (f64, f64) {
    let iv = psi.support();
    let mut grid = iv.probe_grid(65);
    if let Extent::Finite(b) = iv.b {
        let w = b - iv.a;
        for k in 8..=13 {
            let off = w * 10f64.powi(-k);
            grid.push(iv.a + off);
            grid.push(b - off);
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }
    let mut m = |p: f64| match psi.log_value(p) {
        Ok(lw) => p * (lu - lw),
        Err(_) => f64::NEG_INFINITY,
    };
    let (mut bi, mut bv) = (0usize, f64::NEG_INFINITY);
    for (i, &p) in grid.iter().enumerate() {
        let v = m(p);
        if v > bv {
            bv = v;
            bi = i;
        }
    }
    let mut best_p = grid[bi];
    if bi > 0 && bi + 1 < grid.len() {
        let (p, v) = golden_max(&mut m, grid[bi - 1], grid[bi + 1], 90);
        if v > bv {
            bv = v;
            best_p = p;
        }
    }
    (bv, best_p)
}

/// sup over z > 0 of (u z - F(z)) for a convex F given as ln F(e^lz),
/// by unit-step bracket expansion and golden section in lz. Returns
/// infinity when the sup escapes the representable range.
fn concave_sup(log_f: &mut dyn FnMut(f64) -> f64, u: f64) -> f64 {
    let lnu = u.ln();
    let mut h = |lz: f64| {
        let lf = log_f(lz);
        let lg = lnu + lz;
        if lg > 705.0 || lf > 705.0 {
            return if lf >= lg { f64::NEG_INFINITY } else { f64::INFINITY };
        }
        lg.exp() - if lf == f64::NEG_INFINITY { 0.0 } else { lf.exp() }
    };
    let mut hi = 1.0f64;
    let mut last = h(0.0);
    loop {
        let cur = h(hi);
        if cur == f64::INFINITY {
            return f64::INFINITY;
        }
        if !(cur > last) {
            break;
        }
        last = cur;
        hi += 1.0;
        if hi > 1420.0 {
            return f64::INFINITY;
        }
    }
    let (_, v) = golden_max(&mut h, hi - 702.0, hi, 130);
    v.max(0.0)
}

impl OrliczEnvelope {
    pub fn source(&self) -> &PsiFunction {
        &self.psi
    }

    pub fn samples(&self) -> &[EnvelopeSample] {
        &self.samples
    }

    /// ln N at ln|u|.
    pub fn log_n_psi(&self, ln_u: f64) -> f64 {
        envelope_max(&self.psi, ln_u).0
    }

    /// Exponent carrying the supremum at ln|u|; also the logarithmic
    /// derivative d ln N / d ln u there.
    pub fn maximizer(&self, ln_u: f64) -> f64 {
        envelope_max(&self.psi, ln_u).1
    }

    pub fn n_psi(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        self.log_n_psi(u.abs().ln()).exp()
    }

    /// Young conjugate sup_z (|u| z - N(z)).
    pub fn conjugate(&self, u: f64) -> f64 {
        let u = u.abs();
        if u == 0.0 {
            return 0.0;
        }
        concave_sup(&mut |lz| self.log_n_psi(lz), u)
    }
}

/// Build the envelope and its conjugate for a weight whose exponent range
/// has a finite upper end; an unbounded range leaves the envelope infinite
/// past u = 1 and has no usable conjugate.
pub fn orlicz_envelope(psi: &PsiFunction) -> Result<OrliczEnvelope> {
    if !psi.support().b.is_finite() {
        return Err(Error::Regime(format!(
            "{}: envelope construction needs a finite upper exponent end",
            psi.name()
        )));
    }
    let env = OrliczEnvelope { psi: psi.clone(), samples: Vec::new() };
    let mut samples = Vec::with_capacity(49);
    for k in -24..=24 {
        let u = (0.5 * k as f64).exp();
        samples.push(EnvelopeSample {
            u,
            n_psi: env.n_psi(u),
            conjugate: env.conjugate(u),
        });
    }
    Ok(OrliczEnvelope { psi: psi.clone(), samples })
}

/// Evidence classification for a truncation ladder. Numerical integrals
/// cannot prove divergence; they can only exhibit growth that refuses to
/// stabilize, so every witness carries its ladder for audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVerdict {
    Diverges,
    Converges,
    Inconclusive,
}

/// Truncated integrals of one scaling of the witness integrand.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonLadder {
    pub epsilon: f64,
    /// Window bounds R; each integral runs over rearranged measure in [1/R, R].
    pub windows: Vec<f64>,
    /// Cumulative integrals, one per window.
    pub integrals: Vec<f64>,
    pub verdict: GrowthVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrliczWitness {
    pub psi: String,
    pub g: String,
    pub ladders: Vec<EpsilonLadder>,
    pub verdict: GrowthVerdict,
}

/// Cumulative windowed integrals: diverging evidence is geometric growth or
/// increments that keep their weight across the last three windows;
/// converging evidence is a final increment that no longer moves the total.
fn growth_verdict(integrals: &[f64]) -> GrowthVerdict {
    let n = integrals.len();
    if n < 4 {
        return GrowthVerdict::Inconclusive;
    }
    let last = integrals[n - 1];
    if !last.is_finite() {
        return GrowthVerdict::Diverges;
    }
    let scale = last.abs().max(1e-300);
    if (n - 3..n).all(|k| integrals[k - 1] > 0.0 && integrals[k] >= 1.5 * integrals[k - 1]) {
        return GrowthVerdict::Diverges;
    }
    let d: Vec<f64> = (1..n).map(|k| (integrals[k] - integrals[k - 1]).max(0.0)).collect();
    let tail3 = &d[d.len() - 3..];
    let sustained = tail3.iter().all(|&x| x > 1e-4 * scale)
        && tail3.windows(2).all(|w| w[1] >= 0.7 * w[0]);
    if sustained {
        return GrowthVerdict::Diverges;
    }
    if d[d.len() - 1] <= 1e-5 * scale {
        return GrowthVerdict::Converges;
    }
    GrowthVerdict::Inconclusive
}

fn combine_verdicts(vs: &[GrowthVerdict]) -> GrowthVerdict {
    let first = vs[0];
    if vs.iter().all(|v| *v == first) {
        first
    } else {
        GrowthVerdict::Inconclusive
    }
}

/// Monotone log-log table of the indicator-norm function delta -> phi(delta),
/// supporting inversion. Inversion bisects the monotone cubic interpolant;
/// beyond the tabulated range both maps continue linearly with the edge
/// slopes (the underlying function is power-like at both extremes).
#[derive(Debug, Clone)]
struct PhiTable {
    lds: Vec<f64>,
    lphis: Vec<f64>,
    slopes: Vec<f64>,
}

const PHI_TABLE_LO: f64 = -82.0;
const PHI_TABLE_HI: f64 = 82.0;
const PHI_TABLE_STEP: f64 = 0.25;

impl PhiTable {
    fn build(psi: &PsiFunction) -> Result<PhiTable> {
        let n = ((PHI_TABLE_HI - PHI_TABLE_LO) / PHI_TABLE_STEP).round() as usize + 1;
        let mut lds = Vec::with_capacity(n);
        let mut lphis = Vec::with_capacity(n);
        for i in 0..n {
            let ld = PHI_TABLE_LO + PHI_TABLE_STEP * i as f64;
            let lphi = fundamental_phi(psi, ld.exp())?.phi.ln();
            if !lphi.is_finite() {
                return Err(Error::NonConvergence(format!(
                    "{}: indicator norm at log size {ld} is not finite",
                    psi.name()
                )));
            }
            if lphis.last().is_some_and(|&prev| lphi <= prev) {
                return Err(Error::NonConvergence(format!(
                    "{}: indicator-norm table loses strict monotonicity at log size {ld}; \
                     inversion is undefined there",
                    psi.name()
                )));
            }
            lds.push(ld);
            lphis.push(lphi);
        }
        let slopes = pchip_slopes(&lds, &lphis);
        Ok(PhiTable { lds, lphis, slopes })
    }

    fn log_phi(&self, ld: f64) -> f64 {
        let (lo, hi) = (self.lds[0], *self.lds.last().unwrap());
        if ld <= lo {
            return self.lphis[0] + self.slopes[0] * (ld - lo);
        }
        if ld >= hi {
            return self.lphis.last().unwrap() + self.slopes.last().unwrap() * (ld - hi);
        }
        pchip_eval(&self.lds, &self.lphis, &self.slopes, ld)
    }

    /// ld with log_phi(ld) = target.
    fn inv_log_phi(&self, target: f64) -> f64 {
        let (first, last) = (self.lphis[0], *self.lphis.last().unwrap());
        if target <= first {
            return self.lds[0] + (target - first) / self.slopes[0];
        }
        if target >= last {
            return self.lds.last().unwrap() + (target - last) / self.slopes.last().unwrap();
        }
        let (mut lo, mut hi) = (self.lds[0], *self.lds.last().unwrap());
        for _ in 0..70 {
            let mid = 0.5 * (lo + hi);
            if self.log_phi(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Level of the decreasing rearrangement at measure e^ls, as a log value.
/// None when the measure meets or exceeds the total mass (level zero).
fn log_quantile(tail: &TailFunction, ls: f64) -> Option<f64> {
    if let Extent::Finite(m) = tail.total_mass() {
        if ls >= m.ln() {
            return None;
        }
    }
    let mut step = 1.0f64;
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    if tail.log_value_at_log(0.0) > ls {
        hi = step;
        while tail.log_value_at_log(hi) > ls {
            lo = hi;
            step *= 2.0;
            hi += step;
            if hi > 6000.0 {
                return Some(hi);
            }
        }
    } else {
        lo = -step;
        while tail.log_value_at_log(lo) <= ls {
            hi = lo;
            step *= 2.0;
            lo -= step;
            if lo < -6000.0 {
                return None;
            }
        }
    }
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if tail.log_value_at_log(mid) > ls {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Windowed integrals of N(eps |g|) where N is rebuilt from the indicator
/// norms of the weight by inversion. Each window covers rearranged measure
/// [1/R, R], so the two possible sources of escape (large values on small
/// sets, small values on large sets) both widen with R. Growth that never
/// stabilizes is the non-equivalence evidence; a bounded compactly supported
/// g stabilizes instead.
pub fn orlicz_nonequiv_witness(
    psi: &PsiFunction,
    g: &CatalogFunction,
    eps_ladder: &[f64],
    r_ladder: &[f64],
) -> Result<OrliczWitness> {
    if eps_ladder.is_empty() || eps_ladder.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::Params("scaling ladder must be non-empty and positive".into()));
    }
    if r_ladder.is_empty() || r_ladder.iter().any(|r| !(r.is_finite() && *r > 1.0)) {
        return Err(Error::Params("window ladder entries must be finite and exceed 1".into()));
    }
    if r_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Params("window ladder must increase strictly".into()));
    }
    let tail = g.tail()?;
    for p in psi.support().probe_grid(33) {
        if !g.lp_norm(p)?.is_finite() {
            return Err(Error::Precondition(format!(
                "{} has a divergent moment at p = {p}, inside the range of {}",
                g.name(),
                psi.name()
            )));
        }
    }
    let table = PhiTable::build(psi)?;
    let mut ladders = Vec::with_capacity(eps_ladder.len());
    for &eps in eps_ladder {
        let leps = eps.ln();
        let mut integrand = |ls: f64| match log_quantile(tail, ls) {
            Some(lu) => -table.inv_log_phi(-(leps + lu)) + ls,
            None => f64::NEG_INFINITY,
        };
        let mut integrals = Vec::with_capacity(r_ladder.len());
        let mut acc = 0.0f64;
        let mut prev = 0.0f64;
        for &r in r_ladder {
            let lr = r.ln();
            acc += adaptive_log(&mut integrand, prev, lr, 1e-8, 4096)?.exp();
            acc += adaptive_log(&mut integrand, -lr, -prev, 1e-8, 4096)?.exp();
            integrals.push(acc);
            prev = lr;
        }
        let verdict = growth_verdict(&integrals);
        ladders.push(EpsilonLadder {
            epsilon: eps,
            windows: r_ladder.to_vec(),
            integrals,
            verdict,
        });
    }
    let verdict = combine_verdicts(&ladders.iter().map(|l| l.verdict).collect::<Vec<_>>());
    Ok(OrliczWitness {
        psi: psi.name().to_string(),
        g: g.name().to_string(),
        ladders,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MarcinkiewiczWitness {
    pub psi: String,
    pub p_ladder: Vec<f64>,
    /// Moment norm of the comparison tail over the weight, per rung.
    pub normalized: Vec<NormValue>,
    pub sup: NormValue,
    pub unbounded: bool,
    pub verdict: GrowthVerdict,
}

/// Compare the weight against the one Marcinkiewicz space it could possibly
/// match: the tail T with T(x) inverse to delta -> 1/phi(delta). If even
/// that tail's moments outrun the weight toward an endpoint, no space of
/// that scale reproduces the norm.
pub fn marcinkiewicz_nonequiv_witness(psi: &PsiFunction) -> Result<MarcinkiewiczWitness> {
    if psi.zeta_params().is_none() {
        return Err(Error::Params(format!(
            "{}: witness needs a weight from the two-branch family",
            psi.name()
        )));
    }
    let table = PhiTable::build(psi)?;
    let t2 = table.clone();
    let tail = TailFunction::closed(
        format!("comparison tail of {}", psi.name()),
        Extent::Infinite,
        None,
        move |lx: f64| t2.inv_log_phi(-lx),
    );
    let iv = psi.support();
    let mut p_ladder = iv.probe_grid(17);
    p_ladder.extend(iv.lower_ladder());
    p_ladder.extend(iv.upper_ladder());
    p_ladder.sort_by(f64::total_cmp);
    p_ladder.dedup();
    let mut normalized = Vec::with_capacity(p_ladder.len());
    for &p in &p_ladder {
        let w = psi.value(p)?;
        normalized.push(match tail.lp_norm(p)? {
            NormValue::Finite(v) => NormValue::Finite(v / w),
            NormValue::Infinite => NormValue::Infinite,
        });
    }
    let gn = g_norm(&tail, psi)?;
    let unbounded = !gn.value.is_finite();
    let settled = !matches!(gn.lower_limit, LadderVerdict::Inconclusive)
        || !matches!(gn.upper_limit, LadderVerdict::Inconclusive);
    let verdict = if unbounded {
        GrowthVerdict::Diverges
    } else if settled {
        GrowthVerdict::Converges
    } else {
        GrowthVerdict::Inconclusive
    };
    Ok(MarcinkiewiczWitness {
        psi: psi.name().to_string(),
        p_ladder,
        normalized,
        sup: gn.value,
        unbounded,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdjointSample {
    pub z: f64,
    pub tail_at_z: f64,
    /// Integral of the tail above z.
    pub upper_integral: NormValue,
    /// Indicator norm at measure T(z); zero marks an emptied tail.
    pub indicator_norm: f64,
    pub ratio: NormValue,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdjointReport {
    pub g: String,
    pub psi: String,
    pub samples: Vec<AdjointSample>,
    pub max_ratio: NormValue,
    pub verdict: GrowthVerdict,
}

/// Necessary condition for membership in the dual space: the mass of g above
/// level z, integrated, must be controlled by the indicator norm at measure
/// T(g,z) uniformly in z. A finite max over the grid is consistent with
/// membership; any level whose upper integral escapes the bound entirely
/// (a divergent tail integral) certifies failure.
pub fn adjoint_condition_ratio(
    g: &TailFunction,
    psi: &PsiFunction,
    z_grid: &[f64],
) -> Result<AdjointReport> {
    if z_grid.is_empty() || z_grid.iter().any(|z| !(z.is_finite() && *z > 0.0)) {
        return Err(Error::Params("level grid must be non-empty, positive, finite".into()));
    }
    let mut zs = z_grid.to_vec();
    zs.sort_by(f64::total_cmp);
    zs.dedup();
    let mut samples: Vec<AdjointSample> = Vec::with_capacity(zs.len());
    for &z in &zs {
        let tz = g.value(z);
        if !tz.is_finite() {
            continue;
        }
        if tz <= 0.0 {
            samples.push(AdjointSample {
                z,
                tail_at_z: 0.0,
                upper_integral: NormValue::Finite(0.0),
                indicator_norm: 0.0,
                ratio: NormValue::Finite(0.0),
            });
            continue;
        }
        let mut li = |t: f64| t + g.log_value_at_log(t);
        let upper = match decade_integral_log_from(&mut li, z.ln(), 1e-9, false)? {
            DecadeOutcome::Finite { log_value, .. } => NormValue::Finite(log_value.exp()),
            DecadeOutcome::Divergent { .. } => NormValue::Infinite,
        };
        let phi = fundamental_phi(psi, tz)?.phi;
        let ratio = match upper {
            NormValue::Finite(v) => NormValue::Finite(v / phi),
            NormValue::Infinite => NormValue::Infinite,
        };
        samples.push(AdjointSample { z, tail_at_z: tz, upper_integral: upper, indicator_norm: phi, ratio });
    }
    if samples.is_empty() {
        return Err(Error::Params(
            "no level in the grid gave a representable tail measure".into(),
        ));
    }
    let any_inf = samples.iter().any(|s| !s.ratio.is_finite());
    let max_ratio = if any_inf {
        NormValue::Infinite
    } else {
        NormValue::Finite(
            samples.iter().filter_map(|s| s.ratio.finite()).fold(0.0f64, f64::max),
        )
    };
    let verdict = if any_inf { GrowthVerdict::Diverges } else { GrowthVerdict::Converges };
    Ok(AdjointReport {
        g: g.name().to_string(),
        psi: psi.name().to_string(),
        samples,
        max_ratio,
        verdict,
    })
}
