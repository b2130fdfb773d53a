//! Truncated sine and cosine expansions on [-pi, pi]. Values come from one
//! large FFT of the coefficient table; L_p integration runs in log space
//! over three zones: a coarse circle grid, the full FFT resolution on a
//! band around the origin, and a log-spaced Simpson zone underneath it.

use std::f64::consts::{LN_2, PI};
use std::sync::{Arc, Mutex};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::catalog::CatalogFunction;
use crate::error::{Error, Result};
use crate::gnorm::Moments;
use crate::special::log_sum_exp;
use crate::tail::NormValue;

/// Which trigonometric system carries the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Wave {
    Sine,
    Cosine,
}

/// Default truncation depth for catalog series.
pub const SERIES_TRUNCATION: u64 = 1 << 18;

/// Default circle-grid panel count for [`series_lp_norm`].
pub const SERIES_NORM_GRID: usize = 1 << 12;

const TRUNCATION_CAP: u64 = 1 << 19;
// points of the log-spaced zone; odd, so the Simpson panel count is even
const DEEP_POINTS: usize = 513;
const DEEP_FLOOR: f64 = 1e-12;

/// A trigonometric series cut at a fixed depth, coefficients baked into a
/// table. Norms refer to plain Lebesgue measure on [-pi, pi].
pub struct FourierSeriesFunction {
    label: String,
    wave: Wave,
    n_start: u64,
    coeffs: Vec<f64>,
    master: Mutex<Option<Arc<MasterGrid>>>,
}

struct MasterGrid {
    size: usize,
    // ln |f| at x_j = -pi + 2 pi j / size
    log_abs: Vec<f64>,
    deep_lt: Vec<f64>,
    deep_log_abs: Vec<f64>,
    sup: f64,
}

impl std::fmt::Debug for FourierSeriesFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierSeriesFunction")
            .field("label", &self.label)
            .field("wave", &self.wave)
            .field("n_start", &self.n_start)
            .field("n_max", &self.n_max())
            .finish()
    }
}

impl FourierSeriesFunction {
    pub fn new(
        label: impl Into<String>,
        wave: Wave,
        n_start: u64,
        n_max: u64,
        rule: impl Fn(u64) -> f64,
    ) -> Result<FourierSeriesFunction> {
        if n_start == 0 {
            return Err(Error::Params("harmonic indices start at 1".into()));
        }
        if n_max < n_start {
            return Err(Error::Params(format!(
                "truncation depth {n_max} lies below the first harmonic {n_start}"
            )));
        }
        if n_max > TRUNCATION_CAP {
            return Err(Error::Params(format!(
                "truncation depth {n_max} above the cap {TRUNCATION_CAP}"
            )));
        }
        let mut coeffs = Vec::with_capacity((n_max - n_start + 1) as usize);
        for n in n_start..=n_max {
            let w = rule(n);
            if !w.is_finite() {
                return Err(Error::Params(format!("coefficient rule returned {w} at n = {n}")));
            }
            coeffs.push(w);
        }
        Ok(FourierSeriesFunction {
            label: label.into(),
            wave,
            n_start,
            coeffs,
            master: Mutex::new(None),
        })
    }

    /// Realize a series-represented catalog entry at the given depth.
    pub fn from_catalog(f: &CatalogFunction, n_max: u64) -> Result<FourierSeriesFunction> {
        let Some(spec) = f.series() else {
            return Err(Error::Params(format!("{} has no series representation", f.name())));
        };
        FourierSeriesFunction::new(f.name(), Wave::Sine, spec.n_start(), n_max, |n| spec.coeff(n))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn wave(&self) -> Wave {
        self.wave
    }

    pub fn n_start(&self) -> u64 {
        self.n_start
    }

    pub fn n_max(&self) -> u64 {
        self.n_start + self.coeffs.len() as u64 - 1
    }

    pub fn coefficient(&self, n: u64) -> f64 {
        if n < self.n_start {
            return 0.0;
        }
        self.coeffs.get((n - self.n_start) as usize).copied().unwrap_or(0.0)
    }

    /// Keep harmonics up to m.
    pub fn partial_sum(&self, m: u64) -> FourierSeriesFunction {
        let keep = if m < self.n_start {
            0
        } else {
            ((m - self.n_start + 1) as usize).min(self.coeffs.len())
        };
        let coeffs = if keep == 0 { vec![0.0] } else { self.coeffs[..keep].to_vec() };
        FourierSeriesFunction {
            label: format!("partial-sum({},m={m})", self.label),
            wave: self.wave,
            n_start: self.n_start,
            coeffs,
            master: Mutex::new(None),
        }
    }

    /// Drop harmonics up to m; the difference f - s_m.
    pub fn tail_from(&self, m: u64) -> FourierSeriesFunction {
        let mut coeffs = self.coeffs.clone();
        for (i, w) in coeffs.iter_mut().enumerate() {
            if self.n_start + i as u64 <= m {
                *w = 0.0;
            }
        }
        FourierSeriesFunction {
            label: format!("harmonic-tail({},m={m})", self.label),
            wave: self.wave,
            n_start: self.n_start,
            coeffs,
            master: Mutex::new(None),
        }
    }

    /// The conjugate series: sine coefficients move to cosines unchanged,
    /// cosine coefficients move to sines negated.
    pub fn conjugate(&self) -> FourierSeriesFunction {
        let (wave, coeffs) = match self.wave {
            Wave::Sine => (Wave::Cosine, self.coeffs.clone()),
            Wave::Cosine => (Wave::Sine, self.coeffs.iter().map(|w| -w).collect()),
        };
        FourierSeriesFunction {
            label: format!("conjugate({})", self.label),
            wave,
            n_start: self.n_start,
            coeffs,
            master: Mutex::new(None),
        }
    }

    /// Direct summation at one point.
    pub fn eval(&self, x: f64) -> f64 {
        self.direct_sum_from(x, self.n_start)
    }

    /// Largest |f| seen on the evaluation grids.
    pub fn grid_sup(&self) -> f64 {
        self.master().sup
    }

    /// Largest movement of the partial sums between half and full depth,
    /// sampled away from the origin.
    pub fn truncation_settle(&self) -> f64 {
        let half = (self.n_max() / 2).max(self.n_start);
        let mut worst = 0.0f64;
        for i in 0..48 {
            let x = 0.05 * (PI / 0.05).powf(i as f64 / 47.0);
            worst = worst.max(self.direct_sum_from(x, half + 1).abs());
        }
        worst
    }

    fn direct_sum_from(&self, x: f64, from: u64) -> f64 {
        let lo = from.max(self.n_start);
        let i0 = (lo - self.n_start) as usize;
        if i0 >= self.coeffs.len() {
            return 0.0;
        }
        let (sx, cx) = x.sin_cos();
        let (mut s, mut c) = (lo as f64 * x).sin_cos();
        let mut acc = 0.0;
        for &w in &self.coeffs[i0..] {
            if w != 0.0 {
                acc += w * match self.wave {
                    Wave::Sine => s,
                    Wave::Cosine => c,
                };
            }
            let ns = s * cx + c * sx;
            c = c * cx - s * sx;
            s = ns;
        }
        acc
    }

    fn master(&self) -> Arc<MasterGrid> {
        let mut slot = self.master.lock().unwrap();
        if slot.is_none() {
            *slot = Some(Arc::new(self.build_master()));
        }
        slot.as_ref().unwrap().clone()
    }

    fn build_master(&self) -> MasterGrid {
        let m = ((self.n_max().next_power_of_two() as usize) * 8).max(1 << 16);
        let mut buf = vec![Complex::new(0.0f64, 0.0); m];
        for (i, &w) in self.coeffs.iter().enumerate() {
            let n = self.n_start + i as u64;
            // shifting the grid origin to -pi flips the odd harmonics
            let folded = if n % 2 == 1 { -w } else { w };
            buf[n as usize] = Complex::new(folded, 0.0);
        }
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let mut sup = 0.0f64;
        let mut log_abs = Vec::with_capacity(m);
        for v in &buf {
            let val = match self.wave {
                Wave::Sine => -v.im,
                Wave::Cosine => v.re,
            };
            sup = sup.max(val.abs());
            log_abs.push(val.abs().ln());
        }
        drop(buf);
        // under four master steps the top harmonic has phase at most pi;
        // direct sums on a log grid resolve the origin zone
        let hi = (8.0 * PI / m as f64).ln();
        let lo = DEEP_FLOOR.ln();
        let mut deep_lt = Vec::with_capacity(DEEP_POINTS);
        let mut deep_log_abs = Vec::with_capacity(DEEP_POINTS);
        for i in 0..DEEP_POINTS {
            let lt = lo + (hi - lo) * i as f64 / (DEEP_POINTS - 1) as f64;
            let v = self.direct_sum_from(lt.exp(), self.n_start);
            sup = sup.max(v.abs());
            deep_lt.push(lt);
            deep_log_abs.push(v.abs().ln());
        }
        MasterGrid { size: m, log_abs, deep_lt, deep_log_abs, sup }
    }
}

impl Moments for FourierSeriesFunction {
    fn lp_norm(&self, p: f64) -> Result<NormValue> {
        series_lp_norm(self, p, SERIES_NORM_GRID).map(NormValue::Finite)
    }

    fn label(&self) -> &str {
        &self.label
    }
}

// ln of the integral of |f|^p over the circle at the given coarse panel
// count. The band |x| < 2 pi / 256 is always integrated at full master
// resolution and below four master steps on the log grid, so refining the
// coarse count leaves those parts fixed.
fn log_integral(g: &MasterGrid, p: f64, panels: usize) -> f64 {
    let m = g.size;
    let half = m / 2;
    let r_off = m / 256;
    let step = m / panels;
    let mut terms: Vec<f64> = Vec::with_capacity(panels + r_off + DEEP_POINTS + 8);

    let lh = (2.0 * PI / panels as f64).ln();
    for (seg_lo, seg_hi) in [(0usize, half - r_off), (half + r_off, m)] {
        let mut j = seg_lo;
        while j <= seg_hi {
            let w = if j == seg_lo || j == seg_hi { lh + 0.5f64.ln() } else { lh };
            terms.push(p * g.log_abs[j % m] + w);
            j += step;
        }
    }

    // origin band, Simpson at master resolution, doubled for the mirror side
    let lh2 = (2.0 * PI / m as f64).ln();
    for k in 4..=r_off {
        let wmul: f64 = if k == 4 || k == r_off {
            1.0
        } else if (k - 4) % 2 == 1 {
            4.0
        } else {
            2.0
        };
        terms.push(p * g.log_abs[half + k] + lh2 + (wmul / 3.0).ln() + LN_2);
    }

    // log-spaced zone, Simpson in t = ln x, and the rectangle down to zero
    let dt = g.deep_lt[1] - g.deep_lt[0];
    let n = g.deep_lt.len();
    for i in 0..n {
        let wmul = if i == 0 || i == n - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        terms.push(p * g.deep_log_abs[i] + g.deep_lt[i] + (dt * wmul / 3.0).ln() + LN_2);
    }
    terms.push(p * g.deep_log_abs[0] + g.deep_lt[0] + LN_2);

    log_sum_exp(&terms)
}

/// L_p norm over [-pi, pi]. The request is rounded up to a power of two
/// and checked against the doubled grid; disagreement past 1e-4 relative
/// is a non-convergence error.
pub fn series_lp_norm(f: &FourierSeriesFunction, p: f64, grid_size: usize) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Support(format!("moment order must be at least 1, got {p}")));
    }
    if grid_size < SERIES_NORM_GRID {
        return Err(Error::Params(format!(
            "circle grid needs at least {SERIES_NORM_GRID} panels, got {grid_size}"
        )));
    }
    let g = f.master();
    let panels = grid_size.next_power_of_two();
    if panels * 16 > g.size {
        return Err(Error::Params(format!(
            "{panels} panels is too fine for this series; max {}",
            g.size / 16
        )));
    }
    let n1 = (log_integral(&g, p, panels) / p).exp();
    let n2 = (log_integral(&g, p, panels * 2) / p).exp();
    if (n1 - n2).abs() > 1e-4 * n2.max(1e-300) {
        return Err(Error::NonConvergence(format!(
            "circle quadrature for |{}|_{p} has not settled: {n1} vs {n2}",
            f.label
        )));
    }
    Ok(n2)
}
