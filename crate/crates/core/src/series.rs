//! The convolution series `k_{a,b}`, `hₙ`, `H_{a,b}(t; γ)` and the growth
//! rates that bound it.
//!
//! `k_{a,b}(t) = a k_{1,0}(t) + b t` with
//! `k_{1,0}(t) = (2π)^{-d} ∫ f̂(ξ) e^{-t|ξ|²/2} dξ`, `h₀ ≡ 1`,
//! `hₙ(t) = ∫₀ᵗ h_{n-1}(s) k_{a,b}(t-s) ds` and `H = Σ γⁿ hₙ(t)`.
//!
//! The recursion is discretized by product integration: `h_{n-1}` is
//! interpolated linearly on a uniform grid while the kernel is integrated
//! exactly against each linear ramp. For `k_{1,0}` those ramp integrals are
//! themselves spectral integrals, which keeps the weak singularity at lag 0
//! exact. Convolutions run through the FFT.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::dalang::upsilon;
use crate::error::{invalid, Error, Result};
use crate::kernel::CorrelationKernel;
use crate::spectral::{diverges, spectral_integral, RadialTolerance, Weight};

/// Parameters `(a, b, γ)` and the kernel driving the series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesParams {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub kernel: CorrelationKernel,
}

impl SeriesParams {
    pub fn new(a: f64, b: f64, gamma: f64, kernel: CorrelationKernel) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("gamma", gamma)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(format!(
                    "{name} must be a nonnegative finite number, got {v}"
                )));
            }
        }
        Ok(SeriesParams {
            a,
            b,
            gamma,
            kernel,
        })
    }
}

/// `k_{1,0}(t)`.
pub fn k10(kernel: &CorrelationKernel, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("time must be positive, got {t}")));
    }
    let e = spectral_integral(kernel, Weight::Heat { t }, RadialTolerance::default())
        .finite()
        .ok_or_else(|| Error::Divergent(format!("k_(1,0)({t}) is infinite for {kernel}")))?;
    Ok(e.value)
}

/// `k_{a,b}(t) = a k_{1,0}(t) + b t`.
pub fn k_ab(params: &SeriesParams, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("time must be positive, got {t}")));
    }
    let spectral = if params.a > 0.0 {
        params.a * k10(&params.kernel, t)?
    } else {
        0.0
    };
    Ok(spectral + params.b * t)
}

/// Product-integration weights on a uniform grid of step `dt` with `m` cells.
///
/// `down[j]` (`j = 1..=m+1`) integrates `k` against the falling ramp of lag cell `j`,
/// `up[j]` against the rising ramp. The discrete recursion is
/// `hₙ[i] = Σ_{j=1}^{i} down[j] h[i-j+1] + up[j] h[i-j]`.
struct Ramps {
    down: Vec<f64>,
    up: Vec<f64>,
}

fn ramps(params: &SeriesParams, dt: f64, m: usize) -> Result<Ramps> {
    if params.a > 0.0 && diverges(&params.kernel, &Weight::Resolvent { beta: 1.0 }) {
        return Err(Error::Divergent(format!(
            "{} violates Dalang's condition; k_(1,0) is not integrable at 0",
            params.kernel
        )));
    }
    let mut down = vec![0.0; m + 2];
    let mut up = vec![0.0; m + 2];
    for j in 1..=m + 1 {
        let start = (j - 1) as f64 * dt;
        let mut d = params.b * (0.5 * start * dt + dt * dt / 6.0);
        let mut u = params.b * (0.5 * start * dt + dt * dt / 3.0);
        if params.a > 0.0 {
            let tol = RadialTolerance {
                rel: 1e-11,
                remainder: 1e-15 * dt,
            };
            let cell = |rising| {
                spectral_integral(
                    &params.kernel,
                    Weight::CellRamp {
                        start,
                        width: dt,
                        rising,
                    },
                    tol,
                )
                .finite()
                .map(|e| e.value)
                .ok_or_else(|| Error::Divergent("ramp integral".into()))
            };
            d += params.a * cell(false)?;
            u += params.a * cell(true)?;
        }
        down[j] = d;
        up[j] = u;
    }
    Ok(Ramps { down, up })
}

/// Linear convolution `out[i] = Σ_{j≤i} w[j] h[i-j]` for `i ≤ m`, via FFT.
struct Convolver {
    len: usize,
    w_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Convolver {
    fn new(w: &[f64]) -> Self {
        let len = (2 * w.len()).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut w_hat: Vec<Complex64> = w.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        w_hat.resize(len, Complex64::new(0.0, 0.0));
        forward.process(&mut w_hat);
        Convolver {
            len,
            w_hat,
            forward,
            inverse,
        }
    }

    fn apply(&self, h: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = h.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        buf.resize(self.len, Complex64::new(0.0, 0.0));
        self.forward.process(&mut buf);
        for (b, w) in buf.iter_mut().zip(&self.w_hat) {
            *b *= w;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        buf[..h.len()].iter().map(|c| c.re * scale).collect()
    }
}

/// One step of the discrete recursion on `m + 1` grid values, each weight scaled by `factor`.
struct Recursion {
    conv: Convolver,
    down: Vec<f64>,
    factor: f64,
}

impl Recursion {
    fn new(r: &Ramps, m: usize, factor: f64) -> Self {
        // Combined lag weights: w[j] = down[j+1] + up[j].
        let w: Vec<f64> = (0..=m).map(|j| r.down[j + 1] + r.up[j]).collect();
        Recursion {
            conv: Convolver::new(&w),
            down: r.down.clone(),
            factor,
        }
    }

    fn next(&self, h: &[f64]) -> Vec<f64> {
        let full = self.conv.apply(h);
        let h0 = h[0];
        full.iter()
            .enumerate()
            .map(|(i, v)| {
                if i == 0 {
                    0.0
                } else {
                    // The falling ramp of cell i+1 lies beyond the window.
                    (self.factor * (v - self.down[i + 1] * h0)).max(0.0)
                }
            })
            .collect()
    }
}

fn uniform_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 || grid[0] != 0.0 {
        return Err(invalid(
            "time grid must start at 0 and contain at least two points",
        ));
    }
    let dt = grid[1] - grid[0];
    if !(dt > 0.0) {
        return Err(invalid("time grid must be increasing"));
    }
    for (i, w) in grid.windows(2).enumerate() {
        let expected = (i + 1) as f64 * dt;
        if (w[1] - expected).abs() > 1e-9 * expected.max(dt) {
            return Err(invalid(format!(
                "time grid is not uniform at index {}",
                i + 1
            )));
        }
    }
    Ok(dt)
}

/// `hₙ` sampled on a uniform grid starting at 0.
pub fn h_n(params: &SeriesParams, n: usize, grid: &[f64]) -> Result<Vec<f64>> {
    let dt = uniform_step(grid)?;
    let m = grid.len() - 1;
    let mut h = vec![1.0; m + 1];
    if n == 0 {
        return Ok(h);
    }
    let rec = Recursion::new(&ramps(params, dt, m)?, m, 1.0);
    for _ in 0..n {
        h = rec.next(&h);
    }
    Ok(h)
}

/// Result of summing `H_{a,b}(t; γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Number of terms `γⁿ hₙ(t)` summed, including `h₀`.
    pub terms_used: usize,
    /// Geometric estimate of the omitted tail.
    pub tail_estimate: f64,
    /// Whether the tail estimate met the tolerance.
    pub converged: bool,
}

pub const MAX_TERMS: usize = 200;
const COARSE_CELLS: usize = 1024;

/// `H_{a,b}(t; γ) = Σ_{n≥0} γⁿ hₙ(t)`.
///
/// Each term is computed on grids of 1024 and 2048 cells and combined by
/// Richardson extrapolation. Summation stops once the ratio of consecutive
/// terms is below one and the implied geometric tail is below `tol`.
pub fn h_series(params: &SeriesParams, t: f64, tol: f64) -> Result<SeriesValue> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("time must be positive, got {t}")));
    }
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    if params.gamma == 0.0 || (params.a == 0.0 && params.b == 0.0) {
        return Ok(SeriesValue {
            value: 1.0,
            terms_used: 1,
            tail_estimate: 0.0,
            converged: true,
        });
    }
    let fine_m = 2 * COARSE_CELLS;
    let fine_ramps = ramps(params, t / fine_m as f64, fine_m)?;
    let coarse_ramps = ramps(params, t / COARSE_CELLS as f64, COARSE_CELLS)?;
    let fine = Recursion::new(&fine_ramps, fine_m, params.gamma);
    let coarse = Recursion::new(&coarse_ramps, COARSE_CELLS, params.gamma);

    let mut hf = vec![1.0; fine_m + 1];
    let mut hc = vec![1.0; COARSE_CELLS + 1];
    let mut sum = 1.0;
    let mut prev = 1.0;
    let mut ratio_below_one = false;
    for n in 1..MAX_TERMS {
        hf = fine.next(&hf);
        hc = coarse.next(&hc);
        let (f, c) = (hf[fine_m], hc[COARSE_CELLS]);
        let term = ((4.0 * f - c) / 3.0).max(0.0);
        sum += term;
        let ratio = if prev > 0.0 { term / prev } else { 0.0 };
        prev = term;
        if ratio < 1.0 {
            ratio_below_one = true;
            let tail = term * ratio / (1.0 - ratio);
            if tail < tol.max(8.0 * f64::EPSILON * sum) {
                return Ok(SeriesValue {
                    value: sum,
                    terms_used: n + 1,
                    tail_estimate: tail,
                    converged: true,
                });
            }
        }
        if !sum.is_finite() {
            break;
        }
    }
    if !ratio_below_one {
        return Err(Error::NonConvergent { terms: MAX_TERMS });
    }
    let ratio = 1.0_f64.min(prev / sum.max(f64::MIN_POSITIVE));
    Ok(SeriesValue {
        value: sum,
        terms_used: MAX_TERMS,
        tail_estimate: prev * ratio,
        converged: false,
    })
}

/// `inf{β > 0 : 2a Υ(2β) + b/β² < 1/γ}`.
pub fn growth_rate_laplace(params: &SeriesParams) -> Result<f64> {
    if !(params.gamma > 0.0) {
        return Err(invalid("growth_rate_laplace needs gamma > 0"));
    }
    const LIMIT: f64 = 1e12;
    let target = 1.0 / params.gamma;
    let lhs = |beta: f64| -> Result<f64> {
        let mut v = params.b / (beta * beta);
        if params.a > 0.0 {
            let u = upsilon(&params.kernel, 2.0 * beta)?
                .value
                .finite()
                .ok_or_else(|| Error::Divergent(format!("Υ is infinite for {}", params.kernel)))?;
            v += 2.0 * params.a * u;
        }
        Ok(v)
    };
    let holds = |beta: f64| lhs(beta).map(|v| v < target);
    let mut hi = 1.0;
    while !holds(hi)? {
        hi *= 2.0;
        if hi > LIMIT {
            return Err(Error::Unbounded { limit: LIMIT });
        }
    }
    let mut lo = hi;
    loop {
        lo *= 0.5;
        if lo < 1e-300 {
            return Ok(0.0);
        }
        if !holds(lo)? {
            break;
        }
    }
    // Invariant: predicate fails at lo and holds at hi.
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `max(2^{3/α} (a C γ)^{1/α}, √(2bγ))`.
pub fn growth_rate_closed(a: f64, b: f64, gamma: f64, c: f64, alpha: f64) -> f64 {
    let first = 2f64.powf(3.0 / alpha) * (a * c * gamma).powf(1.0 / alpha);
    let second = (2.0 * b * gamma).sqrt();
    first.max(second)
}
