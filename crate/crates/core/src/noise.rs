//! Spectral synthesis of noise increments that are white in time and carry
//! the spatial covariance `f`, periodized on the lattice box.
//!
//! Mode `k` of the dual lattice gets amplitude `√(f̂(2πk/ℓ) / |box|)`, i.e.
//! `(2π)^{-d}` times the dual cell volume. A field is built from Hermitian
//! symmetric complex Gaussians and one unnormalized inverse DFT, so it is real
//! by construction. For white noise every amplitude equals `|box|^{-1/2}`,
//! which gives each cell the variance `dt / Δx^d` of a cell average.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{CorrelationKernel, KernelKind};
use crate::lattice::{FftPlan, Lattice, LatticeField};
use crate::quadrature::{integrate_pieces, Tolerance};
use crate::rng::RandomStream;

/// Precomputed mode amplitudes for one kernel on one lattice.
#[derive(Debug, Clone)]
pub struct SpectralSynthesizer {
    kernel: CorrelationKernel,
    plan: FftPlan,
    amplitudes: Vec<f64>,
    conjugates: Vec<usize>,
    clipped_mass: f64,
}

/// A cell-averaged increment of the noise over a time step `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    pub dt: f64,
    pub field: LatticeField,
}

/// Reusable buffers for sampling without allocation.
#[derive(Debug, Default, Clone)]
pub struct NoiseWorkspace {
    normals: Vec<f64>,
    modes: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// Average of the Riesz spectrum `c|ξ|^{β-d}` over the dual cell around 0.
fn riesz_zero_mode(c: f64, beta: f64, lattice: &Lattice) -> f64 {
    let h0 = PI / lattice.extent(0);
    if lattice.dim() == 1 {
        return c * h0.powf(beta - 1.0) / beta;
    }
    let h1 = PI / lattice.extent(1);
    // ∫_cell c|ξ|^{β-2} dξ = (c/β) ∫ R(θ)^β dθ with R the distance to the cell edge.
    let corner = (h1 / h0).atan();
    let radius = |th: f64| (h0 / th.cos()).min(h1 / th.sin());
    let quarter = integrate_pieces(
        |th| radius(th).powf(beta),
        &[0.0, corner, PI / 2.0],
        Tolerance {
            abs: 0.0,
            rel: 1e-12,
            max_intervals: 500,
        },
    )
    .value;
    4.0 * c / beta * quarter / (4.0 * h0 * h1)
}

impl SpectralSynthesizer {
    pub fn plan(kernel: &CorrelationKernel, lattice: Lattice) -> Result<Self> {
        if kernel.dim() != lattice.dim() {
            return Err(Error::DimensionMismatch {
                expected: lattice.dim(),
                got: kernel.dim(),
            });
        }
        let volume = lattice.volume();
        let mut amplitudes = Vec::with_capacity(lattice.sites());
        let mut clipped = 0.0;
        let mut total = 0.0;
        for idx in 0..lattice.sites() {
            let xi = lattice.frequency(idx);
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            let mut s = kernel.spectral_radial(r);
            if idx == 0 {
                if let KernelKind::Riesz { exponent } = kernel.kind() {
                    let c = kernel.riesz_spectral_constant().unwrap_or(f64::NAN);
                    s = riesz_zero_mode(c, exponent, &lattice);
                }
            }
            if !s.is_finite() {
                return Err(Error::Divergent(format!(
                    "spectral density of {kernel} is not finite at mode {idx}"
                )));
            }
            if s < 0.0 {
                clipped += -s;
                s = 0.0;
            }
            total += s;
            amplitudes.push((s / volume).sqrt());
        }
        if clipped > 1e-6 * total {
            return Err(Error::InvalidParameter(format!(
                "discretized spectrum has clipped mass {clipped:e} of {total:e}"
            )));
        }
        let conjugates = (0..lattice.sites()).map(|i| lattice.conjugate(i)).collect();
        Ok(SpectralSynthesizer {
            kernel: kernel.clone(),
            plan: FftPlan::new(lattice),
            amplitudes,
            conjugates,
            clipped_mass: clipped,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        self.plan.lattice()
    }

    pub fn kernel(&self) -> &CorrelationKernel {
        &self.kernel
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    /// Exact covariance per unit time of the synthesized field at a lag in cells.
    pub fn lattice_covariance(&self, lag: [isize; 2]) -> f64 {
        let l = self.lattice();
        let x = [lag[0] as f64 * l.spacing(0), lag[1] as f64 * l.spacing(1)];
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(idx, a)| {
                let xi = l.frequency(idx);
                a * a * (xi[0] * x[0] + xi[1] * x[1]).cos()
            })
            .sum()
    }

    // Hermitian-symmetric modes scaled by `scale`, inverse transformed in place.
    fn synthesize(&self, scale: f64, stream: &RandomStream, step: u64, ws: &mut NoiseWorkspace) {
        let n = self.amplitudes.len();
        ws.normals.resize(n, 0.0);
        stream.normals(step, &mut ws.normals);
        ws.modes.resize(n, Complex64::new(0.0, 0.0));
        let mut next = 0;
        for idx in 0..n {
            let partner = self.conjugates[idx];
            let a = scale * self.amplitudes[idx];
            if partner == idx {
                ws.modes[idx] = Complex64::new(a * ws.normals[next], 0.0);
                next += 1;
            } else if idx < partner {
                let z =
                    Complex64::new(ws.normals[next], ws.normals[next + 1]) * (a * FRAC_1_SQRT_2);
                ws.modes[idx] = z;
                ws.modes[partner] = z.conj();
                next += 2;
            }
        }
        self.plan.inverse(&mut ws.modes, &mut ws.scratch);
    }

    /// Writes the increment for time step `step` of `stream` into `out`.
    pub fn sample_into(
        &self,
        dt: f64,
        stream: &RandomStream,
        step: u64,
        ws: &mut NoiseWorkspace,
        out: &mut [f64],
    ) {
        self.synthesize(dt.sqrt(), stream, step, ws);
        for (o, m) in out.iter_mut().zip(&ws.modes) {
            *o = m.re;
        }
    }

    pub fn sample_increment(&self, dt: f64, stream: &RandomStream, step: u64) -> NoiseIncrement {
        let mut ws = NoiseWorkspace::default();
        let mut field = LatticeField::zeros(*self.lattice());
        self.sample_into(dt, stream, step, &mut ws, &mut field.values);
        NoiseIncrement { dt, field }
    }
}

/// `Σ_m f(x + mℓ)` over lattice periods, for kernels with summable tails.
pub fn periodized_correlation(
    kernel: &CorrelationKernel,
    lattice: &Lattice,
    lag: [isize; 2],
) -> Option<f64> {
    if matches!(
        kernel.kind(),
        KernelKind::WhiteNoise | KernelKind::Riesz { .. }
    ) {
        return None;
    }
    let x = [
        lag[0] as f64 * lattice.spacing(0),
        lag[1] as f64 * lattice.spacing(1),
    ];
    let reach: isize = 64;
    let r1 = if lattice.dim() == 2 { reach } else { 0 };
    let mut sum = 0.0;
    for m0 in -reach..=reach {
        for m1 in -r1..=r1 {
            let y0 = x[0] + m0 as f64 * lattice.extent(0);
            let y1 = x[1] + m1 as f64 * lattice.extent(1);
            sum += kernel.correlation_radial((y0 * y0 + y1 * y1).sqrt());
        }
    }
    Some(sum)
}

/// Covariance estimate at one lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceEstimate {
    pub lag: [isize; 2],
    pub value: f64,
    pub stderr: f64,
}

/// Translation-averaged unbiased covariance at each lag, with jackknife
/// standard errors over samples.
pub fn empirical_covariance(
    samples: &[NoiseIncrement],
    lags: &[[isize; 2]],
) -> Result<Vec<CovarianceEstimate>> {
    const MIN_SAMPLES: usize = 100;
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let lattice = samples[0].field.lattice;
    if samples.iter().any(|s| s.field.lattice != lattice) {
        return Err(Error::InvalidParameter(
            "samples live on different lattices".into(),
        ));
    }
    let n_sites = lattice.sites();
    let s_count = samples.len();
    let sf = s_count as f64;
    let nf = n_sites as f64;
    let mut total = vec![0.0; n_sites];
    for s in samples {
        for (t, v) in total.iter_mut().zip(&s.field.values) {
            *t += v;
        }
    }
    let mut out = Vec::with_capacity(lags.len());
    let mut a = vec![0.0; s_count];
    let mut x = vec![0.0; s_count];
    let mut y = vec![0.0; s_count];
    for &lag in lags {
        let shifted: Vec<usize> = (0..n_sites).map(|i| lattice.shift(i, lag)).collect();
        let q: f64 = (0..n_sites)
            .map(|i| total[i] * total[shifted[i]])
            .sum::<f64>()
            / nf;
        for (k, s) in samples.iter().enumerate() {
            let u = &s.field.values;
            let (mut sa, mut sx, mut sy) = (0.0, 0.0, 0.0);
            for i in 0..n_sites {
                let j = shifted[i];
                sa += u[i] * u[j];
                sx += u[i] * total[j];
                sy += total[i] * u[j];
            }
            a[k] = sa / nf;
            x[k] = sx / nf;
            y[k] = sy / nf;
        }
        let p: f64 = a.iter().sum();
        let value = (p - q / sf) / (sf - 1.0);
        let s1 = sf - 1.0;
        let loo: Vec<f64> = (0..s_count)
            .map(|k| {
                let p_k = p - a[k];
                let q_k = q - x[k] - y[k] + a[k];
                (p_k - q_k / s1) / (s1 - 1.0)
            })
            .collect();
        let mean = loo.iter().sum::<f64>() / sf;
        let var = loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (sf - 1.0) / sf;
        out.push(CovarianceEstimate {
            lag,
            value,
            stderr: var.sqrt(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(synth: &SpectralSynthesizer, dt: f64, n: usize, seed: u64) -> Vec<NoiseIncrement> {
        let stream = RandomStream::new(seed, 0);
        (0..n as u64)
            .map(|m| synth.sample_increment(dt, &stream, m))
            .collect()
    }

    #[test]
    fn white_amplitudes_are_flat() {
        let lat = Lattice::cube(1, 32.0, 256).unwrap();
        let s = SpectralSynthesizer::plan(&CorrelationKernel::white(1), lat).unwrap();
        assert!(s.amplitudes().iter().all(|&a| a == s.amplitudes()[0]));
        let dx = lat.spacing(0);
        assert!((s.lattice_covariance([0, 0]) - 1.0 / dx).abs() < 1e-10);
        assert!(s.lattice_covariance([3, 0]).abs() < 1e-10);
    }

    #[test]
    fn output_is_real_before_discarding_imaginary_part() {
        for lat in [
            Lattice::cube(1, 16.0, 64).unwrap(),
            Lattice::new(&[8.0, 4.0], &[16, 8]).unwrap(),
        ] {
            let k = CorrelationKernel::new(KernelKind::Gaussian { scale: 1.0 }, lat.dim()).unwrap();
            let s = SpectralSynthesizer::plan(&k, lat).unwrap();
            let mut ws = NoiseWorkspace::default();
            s.synthesize(1.0, &RandomStream::new(3, 1), 0, &mut ws);
            let norm = ws.modes.iter().map(|c| c.re * c.re).sum::<f64>().sqrt();
            let imag = ws.modes.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
            assert!(imag < 1e-12 * norm, "{imag} vs {norm}");
        }
    }

    #[test]
    fn riesz_zero_mode_is_cell_average() {
        let lat = Lattice::cube(1, 8.0, 32).unwrap();
        let k = CorrelationKernel::new(KernelKind::Riesz { exponent: 0.5 }, 1).unwrap();
        let s = SpectralSynthesizer::plan(&k, lat).unwrap();
        let h = PI / 8.0;
        let c = k.riesz_spectral_constant().unwrap();
        let tol = Tolerance {
            abs: 0.0,
            rel: 1e-10,
            max_intervals: 200,
        };
        let avg = integrate_pieces(|x: f64| c * x.abs().powf(-0.5), &[0.0, h], tol).value / h;
        let a0 = s.amplitudes()[0];
        assert!((a0 * a0 * 8.0 - avg).abs() < 1e-6 * avg);
        assert!(s.amplitudes().iter().all(|a| a.is_finite()));

        // d = 2: compare the polar formula against a direct 2D midpoint sum.
        let lat2 = Lattice::new(&[8.0, 4.0], &[8, 8]).unwrap();
        let k2 = CorrelationKernel::new(KernelKind::Riesz { exponent: 1.0 }, 2).unwrap();
        let c2 = k2.riesz_spectral_constant().unwrap();
        let v = riesz_zero_mode(c2, 1.0, &lat2);
        let (h0, h1) = (PI / 8.0, PI / 4.0);
        let m = 2000;
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let x = (i as f64 + 0.5) / m as f64 * h0;
                let y = (j as f64 + 0.5) / m as f64 * h1;
                acc += c2 / (x * x + y * y).sqrt();
            }
        }
        let direct = acc / (m * m) as f64;
        assert!((v - direct).abs() < 2e-3 * direct, "{v} {direct}");
    }

    #[test]
    fn deterministic_given_stream() {
        let lat = Lattice::cube(1, 16.0, 64).unwrap();
        let s = SpectralSynthesizer::plan(&CorrelationKernel::white(1), lat).unwrap();
        let st = RandomStream::new(9, 4);
        assert_eq!(
            s.sample_increment(0.1, &st, 5),
            s.sample_increment(0.1, &st, 5)
        );
        assert_ne!(
            s.sample_increment(0.1, &st, 5),
            s.sample_increment(0.1, &st, 6)
        );
    }

    #[test]
    fn zero_samples_give_zero_covariance() {
        let lat = Lattice::cube(1, 4.0, 8).unwrap();
        let zero = NoiseIncrement {
            dt: 1.0,
            field: LatticeField::zeros(lat),
        };
        let est = empirical_covariance(&vec![zero.clone(); 100], &[[0, 0], [1, 0]]).unwrap();
        assert!(est.iter().all(|e| e.value == 0.0 && e.stderr == 0.0));
        assert!(matches!(
            empirical_covariance(&vec![zero; 99], &[[0, 0]]),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn gaussian_covariance_within_error_bars() {
        let lat = Lattice::cube(1, 16.0, 64).unwrap();
        let k = CorrelationKernel::new(KernelKind::Gaussian { scale: 1.0 }, 1).unwrap();
        let s = SpectralSynthesizer::plan(&k, lat).unwrap();
        let dt = 0.01;
        let samples = draws(&s, dt, 2000, 11);
        let lags: Vec<[isize; 2]> = (0..8).map(|l| [l, 0]).collect();
        let est = empirical_covariance(&samples, &lags).unwrap();
        for e in est {
            let expected = periodized_correlation(&k, &lat, e.lag).unwrap();
            assert!((s.lattice_covariance(e.lag) - expected).abs() < 1e-9);
            let z = (e.value / dt - expected) / (e.stderr / dt);
            assert!(z.abs() < 4.0, "lag {:?}: z = {z}", e.lag);
        }
    }
}
