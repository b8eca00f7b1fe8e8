//! Radially reduced spectral integrals `(2π)^{-d} ∫ f̂(ξ) w(|ξ|) dξ`.
//!
//! Every kernel in the catalog is isotropic, so the integral collapses to
//! `(2π)^{-d} S_{d-1} ∫₀^∞ f̂(r) w(r) r^{d-1} dr` with `S_{d-1}` the area of the
//! unit sphere. The radial integral is computed in the variable `y = ln r`,
//! split at `r = 1`, with analytic remainders below a small cutoff `ε` and above
//! a large cutoff `R`. Convergence is decided from the power-law exponents of
//! the integrand at both ends before any quadrature runs.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::kernel::{CorrelationKernel, SpectralTail};
use crate::quadrature::{integrate_pieces, Estimate, Tolerance};

/// Radial weight `w(r)` multiplying the spectral density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    /// `1 / (β + r²)`.
    Resolvent { beta: f64 },
    /// `(1 + r²)^{α-1}`.
    Bessel { alpha: f64 },
    /// `exp(-t r² / 2)`.
    Heat { t: f64 },
    /// `∫_{start}^{start+width} exp(-s r²/2) λ(s) ds` with the linear ramp
    /// `λ = (s - start)/width` when `rising`, and `1 - λ` otherwise.
    CellRamp {
        start: f64,
        width: f64,
        rising: bool,
    },
    /// `r^{-2(1-α)}` restricted to `r > 1`.
    Outer { alpha: f64 },
    /// `1` restricted to `r ≤ 1`.
    Inner,
}

/// Outcome of a spectral integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radial {
    Finite(Estimate),
    Divergent,
}

impl Radial {
    pub fn finite(self) -> Option<Estimate> {
        match self {
            Radial::Finite(e) => Some(e),
            Radial::Divergent => None,
        }
    }
}

/// Accuracy targets: relative tolerance for the adaptive part and an absolute
/// budget for each analytic remainder.
#[derive(Debug, Clone, Copy)]
pub struct RadialTolerance {
    pub rel: f64,
    pub remainder: f64,
}

impl Default for RadialTolerance {
    fn default() -> Self {
        RadialTolerance {
            rel: 1e-10,
            remainder: 1e-11,
        }
    }
}

// Upper envelope of an integrand on r ≥ 1.
#[derive(Debug, Clone, Copy)]
enum Envelope {
    // coef r^exponent
    Power { coef: f64, exponent: f64 },
    // coef r^power exp(-rate r²/2)
    Gaussian { coef: f64, rate: f64, power: f64 },
}

impl Envelope {
    fn eval(&self, r: f64) -> f64 {
        match *self {
            Envelope::Power { coef, exponent } => coef * r.powf(exponent),
            Envelope::Gaussian { coef, rate, power } => {
                coef * r.powf(power) * (-0.5 * rate * r * r).exp()
            }
        }
    }

    // ∫_R^∞ of the envelope, or None if it diverges.
    fn tail(&self, r: f64) -> Option<f64> {
        match *self {
            Envelope::Power { coef, exponent } => {
                if exponent >= -1.0 {
                    None
                } else {
                    Some(coef * r.powf(exponent + 1.0) / (-exponent - 1.0))
                }
            }
            Envelope::Gaussian { coef, rate, power } => {
                // Integration by parts; the second term is at most half the
                // total once rate R² ≥ 2(power - 1).
                let lead = coef * r.powf(power - 1.0) * (-0.5 * rate * r * r).exp() / rate;
                if power <= 1.0 {
                    Some(lead)
                } else if rate * r * r >= 2.0 * (power - 1.0) {
                    Some(2.0 * lead)
                } else {
                    Some(f64::INFINITY)
                }
            }
        }
    }

    fn times_power(self, c: f64, e: f64) -> Envelope {
        match self {
            Envelope::Power { coef, exponent } => Envelope::Power {
                coef: coef * c,
                exponent: exponent + e,
            },
            Envelope::Gaussian { coef, rate, power } => Envelope::Gaussian {
                coef: coef * c,
                rate,
                power: power + e,
            },
        }
    }
}

impl Weight {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Weight::Resolvent { beta } => 1.0 / (beta + r * r),
            Weight::Bessel { alpha } => (1.0 + r * r).powf(alpha - 1.0),
            Weight::Heat { t } => (-0.5 * t * r * r).exp(),
            Weight::CellRamp {
                start,
                width,
                rising,
            } => {
                let x = 0.5 * width * r * r;
                let shape = if rising { phi2(x) } else { psi(x) };
                (-0.5 * start * r * r).exp() * width * shape
            }
            Weight::Outer { alpha } => {
                if r > 1.0 {
                    r.powf(-2.0 * (1.0 - alpha))
                } else {
                    0.0
                }
            }
            Weight::Inner => {
                if r <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    // sup of w on (0, 1].
    fn near_zero_sup(&self) -> f64 {
        match *self {
            Weight::Resolvent { beta } => 1.0 / beta,
            Weight::Bessel { .. } | Weight::Heat { .. } | Weight::Inner => 1.0,
            Weight::CellRamp { width, .. } => 0.5 * width,
            Weight::Outer { .. } => 0.0,
        }
    }

    // w(r) ≤ envelope for r ≥ 1; None when the weight vanishes there.
    fn tail_envelope(&self) -> Option<Envelope> {
        Some(match *self {
            Weight::Resolvent { .. } => Envelope::Power {
                coef: 1.0,
                exponent: -2.0,
            },
            Weight::Bessel { alpha } | Weight::Outer { alpha } => Envelope::Power {
                coef: 1.0,
                exponent: -2.0 * (1.0 - alpha),
            },
            Weight::Heat { t } => Envelope::Gaussian {
                coef: 1.0,
                rate: t,
                power: 0.0,
            },
            Weight::CellRamp {
                start,
                width,
                rising,
            } => {
                if start > 0.0 {
                    Envelope::Gaussian {
                        coef: 0.5 * width,
                        rate: start,
                        power: 0.0,
                    }
                } else if rising {
                    // φ₂(x) ≤ 1/x²
                    Envelope::Power {
                        coef: 4.0 / width,
                        exponent: -4.0,
                    }
                } else {
                    // ψ(x) ≤ 1/x
                    Envelope::Power {
                        coef: 2.0,
                        exponent: -2.0,
                    }
                }
            }
            Weight::Inner => return None,
        })
    }
}

// (1 - e^{-x}) / x
#[cfg(test)]
fn phi1(x: f64) -> f64 {
    if x < 1e-5 {
        1.0 - 0.5 * x + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

// (e^{-x} - 1 + x) / x² = φ₁(x) - φ₂(x)
fn psi(x: f64) -> f64 {
    if x < 0.1 {
        // Σ_{k≥0} (-x)^k / (k+2)!
        let mut sum = 0.0;
        let mut term = 0.5;
        for k in 0..12 {
            sum += term;
            term *= -x / (k as f64 + 3.0);
        }
        sum
    } else {
        ((-x).exp_m1() + x) / (x * x)
    }
}

// (1 - e^{-x}(1 + x)) / x²
fn phi2(x: f64) -> f64 {
    if x < 0.1 {
        // Σ_{k≥0} (-x)^k (k+1) / (k+2)!
        let mut sum = 0.0;
        let mut pow = 1.0;
        let mut fact = 2.0;
        for k in 0..12 {
            sum += pow * (k as f64 + 1.0) / fact;
            pow *= -x;
            fact *= k as f64 + 3.0;
        }
        sum
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    }
}

/// Area of the unit sphere in `ℝᵈ`.
pub fn sphere_area(d: usize) -> f64 {
    let d = d as f64;
    2.0 * PI.powf(d / 2.0) / gamma(d / 2.0)
}

/// Power-law exponent of `f̂(r) w(r)` as `r → ∞`, `None` for Gaussian decay.
fn tail_exponent(kernel: &CorrelationKernel, weight: &Weight) -> Option<f64> {
    let we = match weight.tail_envelope()? {
        Envelope::Power { exponent, .. } => exponent,
        Envelope::Gaussian { .. } => return None,
    };
    kernel.spectral_tail_exponent().map(|e| e + we)
}

/// Whether `∫ f̂(ξ) w(|ξ|) dξ` is infinite, decided from exponents alone.
pub fn diverges(kernel: &CorrelationKernel, weight: &Weight) -> bool {
    let d = kernel.dim() as f64;
    let near = kernel.spectral_near_zero();
    if weight.near_zero_sup() > 0.0 && near.exponent + d <= 0.0 {
        return true;
    }
    matches!(tail_exponent(kernel, weight), Some(q) if q + d >= 0.0)
}

/// `(2π)^{-d} ∫_{ℝᵈ} f̂(ξ) w(|ξ|) dξ`.
pub fn spectral_integral(
    kernel: &CorrelationKernel,
    weight: Weight,
    tol: RadialTolerance,
) -> Radial {
    if diverges(kernel, &weight) {
        return Radial::Divergent;
    }
    let d = kernel.dim();
    let df = d as f64;
    let prefactor = sphere_area(d) / (2.0 * PI).powf(df);
    let integrand = |r: f64| kernel.spectral_radial(r) * weight.eval(r) * r.powi(d as i32 - 1);
    let quad = Tolerance {
        abs: 0.0,
        rel: tol.rel,
        max_intervals: 2000,
    };
    let in_log = |y: f64| {
        let r = y.exp();
        integrand(r) * r
    };

    let mut total = Estimate::zero();

    // Inner piece (0, 1].
    let w0 = weight.near_zero_sup();
    if w0 > 0.0 {
        let near = kernel.spectral_near_zero();
        let q0 = near.exponent + df - 1.0; // > -1
        let c0 = near.coef * w0;
        let budget = tol.remainder / prefactor;
        // c0 ε^{q0+1}/(q0+1) ≤ budget
        let eps = ((budget * (q0 + 1.0) / c0).ln() / (q0 + 1.0)).clamp(-700.0, -1.0);
        let remainder = c0 * (eps * (q0 + 1.0)).exp() / (q0 + 1.0);
        let est = integrate_pieces(in_log, &split_points(eps, 0.0), quad);
        total = total
            + Estimate {
                value: est.value,
                error: est.error + remainder,
            };
    }

    // Outer piece (1, ∞).
    if let Some(wenv) = weight.tail_envelope() {
        let env = match kernel.spectral_tail() {
            SpectralTail::Power { coef, exponent } => wenv.times_power(coef, exponent + df - 1.0),
            SpectralTail::Gaussian { coef, rate } => {
                let base = match wenv {
                    Envelope::Power { coef: c, exponent } => Envelope::Gaussian {
                        coef: c,
                        rate,
                        power: exponent,
                    },
                    Envelope::Gaussian {
                        coef: c,
                        rate: r2,
                        power,
                    } => Envelope::Gaussian {
                        coef: c,
                        rate: rate + r2,
                        power,
                    },
                };
                base.times_power(coef, df - 1.0)
            }
        };
        let budget = tol.remainder / prefactor;
        let (log_r, tail) = upper_cutoff(&env, budget);
        let est = integrate_pieces(in_log, &split_points(0.0, log_r), quad);
        let r_max = log_r.exp();
        let (value, error) = match env {
            // Power envelopes are asymptotically exact for every family, so the
            // envelope tail is added and only the mismatch at R is charged.
            Envelope::Power { .. } => {
                let ratio = integrand(r_max) / env.eval(r_max);
                (est.value + tail, est.error + tail * (1.0 - ratio).abs())
            }
            Envelope::Gaussian { .. } => (est.value, est.error + tail),
        };
        total = total + Estimate { value, error };
    }

    Radial::Finite(Estimate {
        value: prefactor * total.value,
        error: prefactor * total.error,
    })
}

const MAX_LOG_CUTOFF: f64 = 230.0; // R ≈ 1e100

// Smallest ln R (on a coarse ladder) with envelope tail below budget.
fn upper_cutoff(env: &Envelope, budget: f64) -> (f64, f64) {
    match *env {
        Envelope::Power { coef, exponent } => {
            let q1 = exponent + 1.0; // < 0
            let log_r = ((budget * (-q1) / coef).ln() / q1).clamp(1.0, MAX_LOG_CUTOFF);
            (log_r, env.tail(log_r.exp()).unwrap_or(f64::INFINITY))
        }
        Envelope::Gaussian { .. } => {
            let mut log_r: f64 = 0.5;
            loop {
                let t = env.tail(log_r.exp()).unwrap_or(f64::INFINITY);
                if t <= budget || log_r >= MAX_LOG_CUTOFF {
                    return (log_r, t);
                }
                log_r += 0.25;
            }
        }
    }
}

// Break points every 2 units of ln r so narrow features are not stepped over.
fn split_points(a: f64, b: f64) -> Vec<f64> {
    let n = ((b - a) / 2.0).ceil().max(1.0) as usize;
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelKind;
    use crate::quadrature::integrate;

    fn value(k: &CorrelationKernel, w: Weight) -> f64 {
        spectral_integral(k, w, RadialTolerance::default())
            .finite()
            .unwrap()
            .value
    }

    #[test]
    fn phi_series_branches_agree() {
        for x in [1e-6f64, 1e-3, 0.05, 0.0999, 0.1, 0.2] {
            let direct1 = (1.0 - (-x).exp()) / x;
            assert!((phi1(x) - direct1).abs() < 1e-9, "{x}");
        }
        let a = phi2(0.0999999);
        let b = (1.0 - (-0.1f64).exp() * 1.1) / 0.01;
        assert!((a - b).abs() < 1e-7);
        for x in [1e-4f64, 0.05, 0.0999999, 0.1, 0.7] {
            assert!((psi(x) - (phi1(x) - phi2(x))).abs() < 1e-9, "{x}");
        }
    }

    #[test]
    fn white_resolvent_closed_form() {
        let k = CorrelationKernel::white(1);
        for beta in [0.1f64, 1.0, 7.0] {
            let exact = 1.0 / (2.0 * beta.sqrt());
            assert!((value(&k, Weight::Resolvent { beta }) - exact).abs() < 1e-10 * exact);
        }
    }

    #[test]
    fn heat_weight_white_gives_heat_kernel_at_origin() {
        for d in [1usize, 2] {
            let k = CorrelationKernel::white(d);
            for t in [1e-4, 0.3, 5.0] {
                let exact = (2.0 * PI * t).powf(-(d as f64) / 2.0);
                let v = value(&k, Weight::Heat { t });
                assert!((v - exact).abs() < 1e-9 * exact, "d={d} t={t} {v} {exact}");
            }
        }
    }

    #[test]
    fn heat_weight_gaussian_kernel_matches_convolution() {
        // (2π)^{-1}∫ f̂ e^{-tr²/2} = ∫ f(x) p_t(x) dx = ℓ/√(ℓ²+t) for d=1.
        let k = CorrelationKernel::new(KernelKind::Gaussian { scale: 0.7 }, 1).unwrap();
        let t = 0.4;
        let exact = 0.7 / (0.49f64 + t).sqrt();
        assert!((value(&k, Weight::Heat { t }) - exact).abs() < 1e-10);
    }

    #[test]
    fn cell_ramps_integrate_heat_weight() {
        let k = CorrelationKernel::new(KernelKind::Riesz { exponent: 0.5 }, 1).unwrap();
        let heat = |s: f64| value(&k, Weight::Heat { t: s });
        let tol = Tolerance {
            rel: 1e-9,
            ..Tolerance::default()
        };
        for (start, width) in [(0.0, 0.3), (0.2, 0.05), (1.0, 1e-3)] {
            let lam = |s: f64| (s - start) / width;
            let up = integrate(|s| heat(s) * lam(s), start, start + width, tol).value;
            let down = integrate(|s| heat(s) * (1.0 - lam(s)), start, start + width, tol).value;
            let w_up = value(
                &k,
                Weight::CellRamp {
                    start,
                    width,
                    rising: true,
                },
            );
            let w_down = value(
                &k,
                Weight::CellRamp {
                    start,
                    width,
                    rising: false,
                },
            );
            assert!(
                (w_up - up).abs() < 1e-7 * up,
                "{start} {width}: {w_up} {up}"
            );
            assert!(
                (w_down - down).abs() < 1e-7 * down,
                "{start} {width}: {w_down} {down}"
            );
        }
    }

    #[test]
    fn divergence_by_exponent() {
        assert!(diverges(
            &CorrelationKernel::white(2),
            &Weight::Resolvent { beta: 1.0 }
        ));
        assert!(diverges(
            &CorrelationKernel::white(1),
            &Weight::Bessel { alpha: 0.5 }
        ));
        assert!(!diverges(
            &CorrelationKernel::white(1),
            &Weight::Bessel { alpha: 0.49 }
        ));
        let g = CorrelationKernel::new(KernelKind::Gaussian { scale: 1.0 }, 2).unwrap();
        assert!(!diverges(&g, &Weight::Bessel { alpha: 0.999 }));
    }

    #[test]
    fn slowly_decaying_tail_is_accurate() {
        // (2π)^{-1} ∫ (1+ξ²)^{α-1} dξ = Γ(1/2-α) / (2√π Γ(1-α)).
        let k = CorrelationKernel::white(1);
        for alpha in [0.4, 0.45, 0.49] {
            let exact = gamma(0.5 - alpha) / (2.0 * PI.sqrt() * gamma(1.0 - alpha));
            let e = spectral_integral(&k, Weight::Bessel { alpha }, RadialTolerance::default())
                .finite()
                .unwrap();
            assert!(
                (e.value - exact).abs() < 1e-8 * exact,
                "{alpha}: {} vs {exact}",
                e.value
            );
            assert!(e.error < 1e-6 * exact);
        }
    }
}
