//! Adaptive Gauss-Kronrod quadrature, in plain and log-of-integrand form,
//! plus a decade-marching integrator for moment integrals over (0, inf).

use crate::error::{Error, Result};
use crate::special::{log_add_exp, log_sum_exp};

// 7-15 Gauss-Kronrod pair on [-1, 1]. Kronrod nodes, positive half.
const XK: [f64; 8] = [
    0.0,
    0.207_784_955_007_898_47,
    0.405_845_151_377_397_17,
    0.586_087_235_467_691_13,
    0.741_531_185_599_394_44,
    0.864_864_423_359_769_07,
    0.949_107_912_342_758_5,
    0.991_455_371_120_812_64,
];
const WK: [f64; 8] = [
    0.209_482_141_084_727_83,
    0.204_432_940_075_298_9,
    0.190_350_578_064_785_4,
    0.169_004_726_639_267_9,
    0.140_653_259_715_525_92,
    0.104_790_010_322_250_18,
    0.063_092_092_629_978_55,
    0.022_935_322_010_529_224,
];
// Gauss weights for the embedded 7-point rule, matched to XK[0], XK[2], XK[4], XK[6].
const WG: [f64; 4] = [
    0.417_959_183_673_469_4,
    0.381_830_050_505_118_94,
    0.279_705_391_489_276_7,
    0.129_484_966_168_869_7,
];

fn kronrod_nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [0.0; 15];
    out[7] = c;
    for i in 1..8 {
        out[7 - i] = c - h * XK[i];
        out[7 + i] = c + h * XK[i];
    }
    out
}

/// One Gauss-Kronrod panel over exp(f). Returns (log integral, log error estimate).
fn panel_log(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let nodes = kronrod_nodes(a, b);
    let mut lv = [0.0f64; 15];
    let mut m = f64::NEG_INFINITY;
    for (i, x) in nodes.iter().enumerate() {
        lv[i] = f(*x);
        if lv[i] > m {
            m = lv[i];
        }
    }
    if m == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, f64::NEG_INFINITY);
    }
    let mut sk = 0.0;
    let mut sg = 0.0;
    for i in 0..15 {
        let e = (lv[i] - m).exp();
        let d = (i as i64 - 7).unsigned_abs() as usize;
        sk += WK[d] * e;
        if d % 2 == 0 {
            // even distances from the center form the Gauss-7 subset
            sg += WG[d / 2] * e;
        }
    }
    let log_val = m + (h * sk).ln();
    let diff = (sk - sg).abs();
    let log_err = if diff == 0.0 { f64::NEG_INFINITY } else { m + (h * diff).ln() };
    (log_val, log_err)
}

/// One Gauss-Kronrod panel over a signed integrand. Returns (integral, error estimate).
fn panel_signed(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let nodes = kronrod_nodes(a, b);
    let mut sk = 0.0;
    let mut sg = 0.0;
    for (i, x) in nodes.iter().enumerate() {
        let v = f(*x);
        let d = (i as i64 - 7).unsigned_abs() as usize;
        sk += WK[d] * v;
        if d % 2 == 0 {
            sg += WG[d / 2] * v;
        }
    }
    (h * sk, h * (sk - sg).abs())
}

/// Adaptive integration of a signed integrand over a bounded interval.
pub fn adaptive(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64, max_panels: usize) -> Result<f64> {
    struct Seg {
        a: f64,
        b: f64,
        val: f64,
        err: f64,
    }
    let (val, err) = panel_signed(f, a, b);
    let mut segs = vec![Seg { a, b, val, err }];
    let mut best_err = f64::INFINITY;
    let mut stagnant = 0usize;
    for _ in 0..max_panels {
        let total: f64 = segs.iter().map(|s| s.val).sum();
        let toterr: f64 = segs.iter().map(|s| s.err).sum();
        if toterr <= rel_tol * total.abs().max(1e-300) || toterr < 1e-305 {
            return Ok(total);
        }
        // splitting stopped paying; the estimate is noise-limited
        if toterr < 0.98 * best_err {
            best_err = toterr;
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= 64 && toterr <= 1e-3 * total.abs().max(1e-300) {
                return Ok(total);
            }
        }
        let (wi, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("nonempty");
        let s = segs.swap_remove(wi);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // interval at floating-point resolution, keep its estimate
            segs.push(s);
            let total: f64 = segs.iter().map(|v| v.val).sum();
            return Ok(total);
        }
        let (v1, e1) = panel_signed(f, s.a, mid);
        let (v2, e2) = panel_signed(f, mid, s.b);
        segs.push(Seg { a: s.a, b: mid, val: v1, err: e1 });
        segs.push(Seg { a: mid, b: s.b, val: v2, err: e2 });
    }
    Err(Error::NonConvergence(format!(
        "adaptive quadrature on [{a}, {b}] exhausted {max_panels} panels"
    )))
}

/// Adaptive integration of exp(log_f) over a bounded interval, carried in logs.
/// Returns the log of the integral (NEG_INFINITY for an identically -inf integrand).
pub fn adaptive_log(log_f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64, max_panels: usize) -> Result<f64> {
    struct Seg {
        a: f64,
        b: f64,
        lv: f64,
        le: f64,
    }
    let (lv, le) = panel_log(log_f, a, b);
    let mut segs = vec![Seg { a, b, lv, le }];
    let log_tol = rel_tol.ln();
    let mut best_err = f64::INFINITY;
    let mut stagnant = 0usize;
    for _ in 0..max_panels {
        let ltotal = log_sum_exp(&segs.iter().map(|s| s.lv).collect::<Vec<_>>());
        let lerr = log_sum_exp(&segs.iter().map(|s| s.le).collect::<Vec<_>>());
        // log values of magnitude L carry absolute noise ~ eps*L, so relative
        // accuracy below that is unreachable no matter how finely we split
        let eff_tol = log_tol.max((f64::EPSILON * 32.0 * ltotal.abs().max(1.0)).ln());
        if lerr == f64::NEG_INFINITY || ltotal == f64::NEG_INFINITY || lerr <= ltotal + eff_tol {
            return Ok(ltotal);
        }
        // error pinned by rounding noise inside the integrand: splitting no
        // longer helps, the estimate is as good as the data allows
        if lerr < best_err - 0.02 {
            best_err = lerr;
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= 64 && lerr <= ltotal + (1e-3f64).ln() {
                return Ok(ltotal);
            }
        }
        let (wi, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.le.total_cmp(&y.1.le))
            .expect("nonempty");
        let s = segs.swap_remove(wi);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            segs.push(s);
            let ltotal = log_sum_exp(&segs.iter().map(|v| v.lv).collect::<Vec<_>>());
            return Ok(ltotal);
        }
        let (v1, e1) = panel_log(log_f, s.a, mid);
        let (v2, e2) = panel_log(log_f, mid, s.b);
        segs.push(Seg { a: s.a, b: mid, lv: v1, le: e1 });
        segs.push(Seg { a: mid, b: s.b, lv: v2, le: e2 });
    }
    Err(Error::NonConvergence(format!(
        "log-domain quadrature on [{a}, {b}] exhausted {max_panels} panels"
    )))
}

/// Which end of the axis an unbounded contribution came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Side {
    Lower,
    Upper,
}

/// Outcome of a decade-marching improper integral.
#[derive(Debug, Clone, Copy)]
pub enum DecadeOutcome {
    Finite { log_value: f64, decades: usize, completed: bool },
    Divergent { side: Side },
}

const DECADE: f64 = std::f64::consts::LN_10;
// negligible-tail cutoff: three consecutive decades below running total by this log gap
const NEGLIGIBLE: f64 = -39.0;
const MAX_DECADES: usize = 360;
const PANELS_PER_DECADE: usize = 8192;

struct March {
    decades: usize,
    log_total: f64,
    completed: bool,
}

// Once the decades are decaying, the rest of the axis is integrated in one
// sweep of the true integrand under y = ln(1 + distance), which compresses
// an exponential tail of any rate into a few dozen unit panels. Returns the
// log remainder, or None when the sweep hit its range cap with the
// integrand still contributing.
fn stretched_remainder(
    log_f: &mut dyn FnMut(f64) -> f64,
    t_edge: f64,
    dir: f64,
    y_cap: f64,
    capped_by_floor: bool,
    deciding: bool,
    log_total: f64,
    rel_tol: f64,
) -> Result<Option<f64>> {
    let mut rem = f64::NEG_INFINITY;
    let mut quiet = 0usize;
    let mut ylo = 0.0f64;
    while ylo < y_cap {
        let yhi = (ylo + 1.0).min(y_cap);
        let tot = log_add_exp(log_total, rem);
        // cheap three-point cap on the panel before paying for quadrature
        let mut cap = f64::NEG_INFINITY;
        for y in [ylo, 0.5 * (ylo + yhi), yhi] {
            cap = cap.max(log_f(t_edge + dir * (y.exp() - 1.0)) + y);
        }
        if deciding && cap > tot + 50.0 {
            // towering growth past everything integrated so far; settling the
            // verdict does not require resolving a panel this steep
            return Ok(None);
        }
        let bound = cap + 3.0;
        let dj = if bound < tot + NEGLIGIBLE {
            bound
        } else {
            // deep in the tail the integrand's own rounding noise dwarfs the
            // nominal tolerance; spend accuracy in proportion to contribution
            let slack = (tot - bound).max(0.0);
            let tol = (rel_tol * slack.exp()).min(0.3);
            adaptive_log(
                &mut |y: f64| log_f(t_edge + dir * (y.exp() - 1.0)) + y,
                ylo,
                yhi,
                tol,
                PANELS_PER_DECADE,
            )?
        };
        rem = log_add_exp(rem, dj);
        let tot = log_add_exp(log_total, rem);
        if dj == f64::NEG_INFINITY || dj < tot + NEGLIGIBLE {
            quiet += 1;
            if quiet >= 2 {
                return Ok(Some(rem));
            }
        } else {
            quiet = 0;
        }
        ylo = yhi;
    }
    if capped_by_floor {
        return Ok(Some(rem));
    }
    Ok(None)
}

/// March fixed-width decades away from the anchor in direction `dir` (+1 or -1),
/// summing log-contributions until the tail is negligible, certified by
/// power-log completion, classified divergent, or (downward only) cut off at
/// `floor`.
fn march(
    log_f: &mut dyn FnMut(f64) -> f64,
    anchor: f64,
    dir: f64,
    rel_tol: f64,
    floor: Option<f64>,
) -> Result<std::result::Result<March, Side>> {
    let side = if dir > 0.0 { Side::Upper } else { Side::Lower };
    let mut log_decades: Vec<f64> = Vec::new();
    let mut log_total = f64::NEG_INFINITY;
    let mut neg_streak = 0usize;
    let mut flat_streak = 0usize;
    for k in 0..MAX_DECADES {
        let (mut lo, mut hi) =
            (anchor + k as f64 * DECADE * dir, anchor + (k + 1) as f64 * DECADE * dir);
        if dir < 0.0 {
            std::mem::swap(&mut lo, &mut hi);
        }
        let mut clipped = false;
        if let Some(fl) = floor {
            if hi <= fl {
                break;
            }
            if lo < fl {
                lo = fl;
                clipped = true;
            }
        }
        let d = adaptive_log(log_f, lo, hi, rel_tol, PANELS_PER_DECADE)?;
        log_decades.push(d);
        log_total = log_add_exp(log_total, d);
        if clipped {
            return Ok(Ok(March { decades: log_decades.len(), log_total, completed: true }));
        }
        if d == f64::NEG_INFINITY || (log_total > f64::NEG_INFINITY && d < log_total + NEGLIGIBLE) {
            neg_streak += 1;
            if neg_streak >= 3 && k >= 2 {
                return Ok(Ok(March { decades: log_decades.len(), log_total, completed: false }));
            }
            continue;
        }
        neg_streak = 0;
        let n = log_decades.len();
        if n < 3 {
            continue;
        }
        let (d0, d1, d2) = (log_decades[n - 3], log_decades[n - 2], log_decades[n - 1]);
        if !(d0.is_finite() && d1.is_finite() && d2.is_finite()) {
            flat_streak = 0;
            continue;
        }
        let delta1 = d1 - d0;
        let delta2 = d2 - d1;
        // a strong rise means the integrand peak is still ahead; a monotone
        // tail cannot rise this fast for this long unless it is non-summable
        if delta2 >= 0.5 * DECADE {
            if k > 40 {
                return Ok(Err(side));
            }
            flat_streak = 0;
            continue;
        }
        // midpoint positions in decade units measured from coordinate zero
        let x2 = anchor * dir / DECADE + k as f64 + 0.5;
        if x2 - 2.0 < 3.0 {
            continue;
        }
        let l2 = (x2 / (x2 - 1.0)).ln();
        let l1 = ((x2 - 1.0) / (x2 - 2.0)).ln();
        let q = (delta2 - delta1) / (l2 - l1);
        let s = delta2 - q * l2;
        if s >= -1e-9 && (delta1 - delta2) < 2e-3 * delta2.abs().max(1.0) {
            flat_streak += 1;
        } else {
            flat_streak = 0;
        }
        // a three-decade flat streak looks divergent but the local fit cannot
        // tell a non-summable power tail from one with an exponential factor
        // still too weak to see; the sweep integrates the tail as it actually
        // is and settles the question either way
        let deciding = flat_streak >= 3;
        if deciding || s <= -1e-8 {
            let t_edge = anchor + (k + 1) as f64 * DECADE * dir;
            // a power-law tail decays only linearly in y, so the deciding
            // sweep gets a far longer leash than the completion sweep
            let reach = if deciding { 690.0 } else { 60.0 };
            let (y_cap, by_floor) = match floor {
                Some(fl) if dir < 0.0 => ((1.0 + (t_edge - fl)).ln(), true),
                _ => (reach, false),
            };
            if !deciding && !by_floor {
                // t span the tail needs before it goes negligible, from the fit
                let mut span = 44.0 * DECADE / -s;
                if q > 0.0 {
                    span *= 1.0 + q * span.max(2.0).ln() / 44.0;
                }
                if (1.0 + span).ln() > y_cap - 1.0 {
                    continue;
                }
            }
            if let Some(rem) = stretched_remainder(
                log_f, t_edge, dir, y_cap, by_floor, deciding, log_total, rel_tol,
            )? {
                return Ok(Ok(March {
                    decades: log_decades.len(),
                    log_total: log_add_exp(log_total, rem),
                    completed: true,
                }));
            }
            if deciding {
                return Ok(Err(side));
            }
            // remainder refused to die out within the sweep; resume marching
        }
    }
    Err(Error::NonConvergence(format!(
        "decade march ({side:?}) exhausted {MAX_DECADES} decades"
    )))
}

/// Integrate exp(log_f(y)) dy over the whole axis by marching decades away
/// from `anchor` in both directions.
pub fn decade_integral_log(
    log_f: &mut dyn FnMut(f64) -> f64,
    anchor: f64,
    rel_tol: f64,
) -> Result<DecadeOutcome> {
    decade_integral_log_from(log_f, anchor, rel_tol, true)
}

/// As [`decade_integral_log`], optionally dropping the downward march
/// (for integrands supported on [anchor, inf)).
pub fn decade_integral_log_from(
    log_f: &mut dyn FnMut(f64) -> f64,
    anchor: f64,
    rel_tol: f64,
    include_lower: bool,
) -> Result<DecadeOutcome> {
    let up = match march(log_f, anchor, 1.0, rel_tol, None)? {
        Ok(m) => m,
        Err(side) => return Ok(DecadeOutcome::Divergent { side }),
    };
    let down = if include_lower {
        match march(log_f, anchor, -1.0, rel_tol, None)? {
            Ok(m) => m,
            Err(side) => return Ok(DecadeOutcome::Divergent { side }),
        }
    } else {
        March { decades: 0, log_total: f64::NEG_INFINITY, completed: false }
    };
    Ok(DecadeOutcome::Finite {
        log_value: log_add_exp(up.log_total, down.log_total),
        decades: up.decades + down.decades,
        completed: up.completed || down.completed,
    })
}

/// Integrate exp(log_f(y)) dy over (floor, anchor], marching downward only;
/// `floor = None` means the march runs to -infinity.
pub fn decade_integral_log_below(
    log_f: &mut dyn FnMut(f64) -> f64,
    anchor: f64,
    floor: Option<f64>,
    rel_tol: f64,
) -> Result<DecadeOutcome> {
    match march(log_f, anchor, -1.0, rel_tol, floor)? {
        Ok(m) => Ok(DecadeOutcome::Finite {
            log_value: m.log_total,
            decades: m.decades,
            completed: m.completed,
        }),
        Err(side) => Ok(DecadeOutcome::Divergent { side }),
    }
}
