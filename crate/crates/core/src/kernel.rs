//! Spatial correlation kernels, their spectral densities, and the heat kernel.
//!
//! Fourier convention throughout the crate: `f̂(ξ) = ∫ f(x) e^{-i x·ξ} dx`,
//! with the inverse transform carrying `(2π)^{-d}`.
//!
//! All kernels are isotropic and normalized so that `f(0) = 1` where a
//! pointwise value exists. The Riesz kernel `|x|^{-β}` is the exception: it is
//! singular at the origin and reported as `+∞` there.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, Tolerance};

/// Kernel families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// `f = δ₀`; flat spectrum.
    WhiteNoise,
    /// `f(x) = |x|^{-exponent}` with `0 < exponent < d`.
    Riesz { exponent: f64 },
    /// `f(x) = exp(-|x|²/(2 scale²))`.
    Gaussian { scale: f64 },
    /// `f(x) = exp(-|x|/scale)`.
    Exponential { scale: f64 },
    /// Matérn covariance with unit variance.
    Matern { smoothness: f64, scale: f64 },
}

/// Pointwise value of a correlation function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pointwise {
    Value(f64),
    /// The kernel is a measure (white noise) without pointwise values.
    NotPointwise,
}

/// Upper bound `f̂(r) ≤ coef · g(r)` valid for every `r > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralTail {
    /// `g(r) = r^exponent`.
    Power { coef: f64, exponent: f64 },
    /// `g(r) = exp(-rate r² / 2)`.
    Gaussian { coef: f64, rate: f64 },
}

/// Bound `f̂(r) ≤ coef · r^exponent` for `0 < r ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralNearZero {
    pub coef: f64,
    pub exponent: f64,
}

/// An isotropic spatial covariance on `ℝᵈ`. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationKernel {
    kind: KernelKind,
    dim: usize,
    // Riesz: c_{d,β} in f̂(ξ) = c |ξ|^{β-d}. Other families: closed-form prefactor of f̂.
    spectral_const: f64,
}

impl CorrelationKernel {
    pub fn new(kind: KernelKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("kernel dimension must be positive"));
        }
        let d = dim as f64;
        let positive = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!(
                    "{name} must be a positive finite number, got {v}"
                )))
            }
        };
        let spectral_const = match kind {
            KernelKind::WhiteNoise => 1.0,
            KernelKind::Riesz { exponent } => {
                positive("riesz exponent", exponent)?;
                if exponent >= d {
                    return Err(invalid(format!(
                        "riesz exponent must lie in (0, d={dim}), got {exponent}"
                    )));
                }
                riesz_constant(dim, exponent)
            }
            KernelKind::Gaussian { scale } => {
                positive("gaussian scale", scale)?;
                (2.0 * PI * scale * scale).powf(d / 2.0)
            }
            KernelKind::Exponential { scale } => {
                positive("exponential scale", scale)?;
                2f64.powf(d) * PI.powf((d - 1.0) / 2.0) * gamma((d + 1.0) / 2.0) * scale.powf(d)
            }
            KernelKind::Matern { smoothness, scale } => {
                positive("matern smoothness", smoothness)?;
                positive("matern scale", scale)?;
                let nu = smoothness;
                2f64.powf(d) * PI.powf(d / 2.0) * gamma(nu + d / 2.0) * (2.0 * nu).powf(nu)
                    / (gamma(nu) * scale.powf(2.0 * nu))
            }
        };
        Ok(CorrelationKernel {
            kind,
            dim,
            spectral_const,
        })
    }

    pub fn white(dim: usize) -> Self {
        Self::new(KernelKind::WhiteNoise, dim).expect("white noise kernel is always valid")
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_white(&self) -> bool {
        matches!(self.kind, KernelKind::WhiteNoise)
    }

    /// The cached constant `c_{d,β}` for Riesz kernels.
    pub fn riesz_spectral_constant(&self) -> Option<f64> {
        match self.kind {
            KernelKind::Riesz { .. } => Some(self.spectral_const),
            _ => None,
        }
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `f(x)`.
    pub fn eval_correlation(&self, x: &[f64]) -> Result<Pointwise> {
        self.check_dim(x)?;
        let r = norm(x);
        Ok(match self.kind {
            KernelKind::WhiteNoise => Pointwise::NotPointwise,
            _ => Pointwise::Value(self.correlation_radial(r)),
        })
    }

    /// `f` as a function of `|x|`; NaN for white noise.
    pub fn correlation_radial(&self, r: f64) -> f64 {
        match self.kind {
            KernelKind::WhiteNoise => f64::NAN,
            KernelKind::Riesz { exponent } => {
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    r.powf(-exponent)
                }
            }
            KernelKind::Gaussian { scale } => (-(r * r) / (2.0 * scale * scale)).exp(),
            KernelKind::Exponential { scale } => (-r / scale).exp(),
            KernelKind::Matern { smoothness, scale } => matern_correlation(smoothness, scale, r),
        }
    }

    /// `f̂(ξ)`, always nonnegative; `+∞` for Riesz at `ξ = 0`.
    pub fn eval_spectral_density(&self, xi: &[f64]) -> Result<f64> {
        self.check_dim(xi)?;
        Ok(self.spectral_radial(norm(xi)))
    }

    /// `f̂` as a function of `|ξ|`.
    pub fn spectral_radial(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        let c = self.spectral_const;
        match self.kind {
            KernelKind::WhiteNoise => 1.0,
            KernelKind::Riesz { exponent } => {
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    c * r.powf(exponent - d)
                }
            }
            KernelKind::Gaussian { scale } => c * (-0.5 * scale * scale * r * r).exp(),
            KernelKind::Exponential { scale } => {
                c * (1.0 + scale * scale * r * r).powf(-(d + 1.0) / 2.0)
            }
            KernelKind::Matern { smoothness, scale } => {
                c * (2.0 * smoothness / (scale * scale) + r * r).powf(-(smoothness + d / 2.0))
            }
        }
    }

    /// Power-law exponent of `f̂(r)` as `r → ∞`; `None` for super-polynomial decay.
    pub fn spectral_tail_exponent(&self) -> Option<f64> {
        let d = self.dim as f64;
        match self.kind {
            KernelKind::WhiteNoise => Some(0.0),
            KernelKind::Riesz { exponent } => Some(exponent - d),
            KernelKind::Gaussian { .. } => None,
            KernelKind::Exponential { .. } => Some(-(d + 1.0)),
            KernelKind::Matern { smoothness, .. } => Some(-(2.0 * smoothness + d)),
        }
    }

    pub fn spectral_tail(&self) -> SpectralTail {
        let d = self.dim as f64;
        let c = self.spectral_const;
        match self.kind {
            KernelKind::Gaussian { scale } => SpectralTail::Gaussian {
                coef: c,
                rate: scale * scale,
            },
            KernelKind::WhiteNoise => SpectralTail::Power {
                coef: 1.0,
                exponent: 0.0,
            },
            KernelKind::Riesz { exponent } => SpectralTail::Power {
                coef: c,
                exponent: exponent - d,
            },
            KernelKind::Exponential { scale } => SpectralTail::Power {
                coef: c * scale.powf(-(d + 1.0)),
                exponent: -(d + 1.0),
            },
            KernelKind::Matern { smoothness, .. } => SpectralTail::Power {
                coef: c,
                exponent: -(2.0 * smoothness + d),
            },
        }
    }

    pub fn spectral_near_zero(&self) -> SpectralNearZero {
        match self.kind {
            KernelKind::Riesz { exponent } => SpectralNearZero {
                coef: self.spectral_const,
                exponent: exponent - self.dim as f64,
            },
            // The remaining spectra are radially nonincreasing.
            _ => SpectralNearZero {
                coef: self.spectral_radial(0.0),
                exponent: 0.0,
            },
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `c_{d,β}` from the subordination identity
/// `|x|^{-β} = Γ(β/2)^{-1} ∫₀^∞ s^{β/2-1} e^{-s|x|²} ds`, which turns the
/// Fourier transform into the non-oscillatory integral
/// `c = π^{d/2} Γ(β/2)^{-1} ∫₀^∞ s^{(β-d)/2-1} e^{-1/(4s)} ds`.
fn riesz_constant(dim: usize, beta: f64) -> f64 {
    let d = dim as f64;
    let q = (beta - d) / 2.0; // < 0
                              // s = e^y; integrand e^{q y} exp(-e^{-y}/4).
    let g = |y: f64| (q * y - 0.25 * (-y).exp()).exp();
    let lo = -6.0; // exp(-e^6/4) ≈ 1e-44
                   // Tail beyond `hi` is below e^{q hi}/|q|.
    let hi = (1e-18 * q.abs()).ln() / q;
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-13,
        max_intervals: 4000,
    };
    let body = integrate(g, lo, hi, tol).value;
    let tail = (q * hi).exp() / (-q);
    PI.powf(d / 2.0) / gamma(beta / 2.0) * (body + tail)
}

/// Matérn correlation via `K_ν(z) = ∫₀^∞ e^{-z cosh t} cosh(νt) dt`.
fn matern_correlation(nu: f64, scale: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let z = (2.0 * nu).sqrt() * r / scale;
    let kz = bessel_k(nu, z);
    2f64.powf(1.0 - nu) / gamma(nu) * z.powf(nu) * kz
}

pub(crate) fn bessel_k(nu: f64, z: f64) -> f64 {
    // Work with the scaled integrand e^{-z(cosh t - 1)} to keep magnitudes sane.
    let f = |t: f64| (-z * (t.cosh() - 1.0) + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp());
    // cosh(t) - 1 ≥ e^t / 4 for t ≥ 1.5; choose t where z e^t / 4 exceeds 750 + ν t.
    let mut t_max = 1.5f64;
    while z * (t_max.cosh() - 1.0) - nu * t_max < 750.0 {
        t_max += 0.5;
    }
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-12,
        max_intervals: 4000,
    };
    integrate(f, 0.0, t_max, tol).value * (-z).exp()
}

/// A heat-kernel evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernelQuery {
    pub t: f64,
    pub x: Vec<f64>,
}

/// `p_t(x) = (2πt)^{-d/2} exp(-|x|²/(2t))`.
pub fn heat_kernel(q: &HeatKernelQuery) -> Result<f64> {
    if !(q.t > 0.0) || !q.t.is_finite() {
        return Err(invalid(format!(
            "heat kernel time must be positive, got {}",
            q.t
        )));
    }
    if q.x.is_empty() {
        return Err(invalid("heat kernel needs a point of dimension ≥ 1"));
    }
    let d = q.x.len() as f64;
    let r2: f64 = q.x.iter().map(|v| v * v).sum();
    Ok((2.0 * PI * q.t).powf(-d / 2.0) * (-r2 / (2.0 * q.t)).exp())
}

// ---------------------------------------------------------------------------
// spec strings: `white`, `riesz:beta=<r>`, `gaussian:scale=<r>`, `exp:scale=<r>`,
// `matern:nu=<r>,scale=<r>`, each followed by `dim=<d>`.

/// A parsed `name[:k=v,...][,k=v,...]` spec.
pub(crate) struct SpecParts<'a> {
    pub name: &'a str,
    pub params: Vec<(&'a str, &'a str, usize)>,
}

pub(crate) fn split_spec(input: &str) -> Result<SpecParts<'_>> {
    let trimmed = input.trim();
    let offset = input.len() - input.trim_start().len();
    if trimmed.is_empty() {
        return Err(parse_error(input, 0, "empty spec"));
    }
    let name_end = trimmed.find([':', ',']).unwrap_or(trimmed.len());
    let name = &trimmed[..name_end];
    if name.is_empty() {
        return Err(parse_error(input, offset, "missing family name"));
    }
    let mut params = Vec::new();
    if name_end < trimmed.len() {
        let mut pos = name_end + 1;
        for item in trimmed[name_end + 1..].split(',') {
            let at = offset + pos;
            let (k, v) = item.split_once('=').ok_or_else(|| {
                parse_error(input, at, format!("expected key=value, found `{item}`"))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(parse_error(
                    input,
                    at,
                    format!("empty key or value in `{item}`"),
                ));
            }
            params.push((k, v, at + item.find('=').unwrap_or(0) + 1));
            pos += item.len() + 1;
        }
    }
    Ok(SpecParts { name, params })
}

pub(crate) fn parse_error(input: &str, position: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        input: input.to_string(),
        position,
        message: message.into(),
    }
}

/// Pulls a required-or-optional numeric key out of a spec, rejecting unknown keys.
pub(crate) struct ParamReader<'a> {
    input: &'a str,
    params: Vec<(&'a str, &'a str, usize)>,
    used: Vec<bool>,
}

impl<'a> ParamReader<'a> {
    pub fn new(input: &'a str, params: Vec<(&'a str, &'a str, usize)>) -> Self {
        let used = vec![false; params.len()];
        ParamReader {
            input,
            params,
            used,
        }
    }

    pub fn raw(&mut self, key: &str) -> Result<Option<(&'a str, usize)>> {
        let mut found = None;
        for (i, (k, v, pos)) in self.params.iter().enumerate() {
            if *k == key {
                if found.is_some() {
                    return Err(parse_error(
                        self.input,
                        *pos,
                        format!("duplicate key `{key}`"),
                    ));
                }
                self.used[i] = true;
                found = Some((*v, *pos));
            }
        }
        Ok(found)
    }

    pub fn opt_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.raw(key)? {
            None => Ok(None),
            Some((v, pos)) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| parse_error(self.input, pos, format!("`{v}` is not a number"))),
        }
    }

    pub fn f64(&mut self, key: &str) -> Result<f64> {
        self.opt_f64(key)?.ok_or_else(|| {
            parse_error(
                self.input,
                self.input.len(),
                format!("missing required key `{key}`"),
            )
        })
    }

    pub fn finish(self) -> Result<()> {
        for (i, (k, _, pos)) in self.params.iter().enumerate() {
            if !self.used[i] {
                return Err(parse_error(self.input, *pos, format!("unknown key `{k}`")));
            }
        }
        Ok(())
    }
}

impl FromStr for CorrelationKernel {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let parts = split_spec(input)?;
        if !["white", "riesz", "gaussian", "exp", "matern"].contains(&parts.name) {
            return Err(parse_error(
                input,
                0,
                format!("unknown kernel family `{}`", parts.name),
            ));
        }
        let mut rd = ParamReader::new(input, parts.params);
        let dim = match rd.raw("dim")? {
            None => {
                return Err(parse_error(
                    input,
                    input.len(),
                    "missing required key `dim`",
                ));
            }
            Some((v, pos)) => v
                .parse::<usize>()
                .map_err(|_| parse_error(input, pos, format!("`{v}` is not a dimension")))?,
        };
        let kind = match parts.name {
            "white" => KernelKind::WhiteNoise,
            "riesz" => KernelKind::Riesz {
                exponent: rd.f64("beta")?,
            },
            "gaussian" => KernelKind::Gaussian {
                scale: rd.f64("scale")?,
            },
            "exp" => KernelKind::Exponential {
                scale: rd.f64("scale")?,
            },
            "matern" => KernelKind::Matern {
                smoothness: rd.f64("nu")?,
                scale: rd.f64("scale")?,
            },
            _ => unreachable!("family checked above"),
        };
        rd.finish()?;
        CorrelationKernel::new(kind, dim)
    }
}

impl fmt::Display for CorrelationKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            KernelKind::WhiteNoise => write!(f, "white,dim={}", self.dim),
            KernelKind::Riesz { exponent } => write!(f, "riesz:beta={exponent},dim={}", self.dim),
            KernelKind::Gaussian { scale } => write!(f, "gaussian:scale={scale},dim={}", self.dim),
            KernelKind::Exponential { scale } => write!(f, "exp:scale={scale},dim={}", self.dim),
            KernelKind::Matern { smoothness, scale } => {
                write!(f, "matern:nu={smoothness},scale={scale},dim={}", self.dim)
            }
        }
    }
}

impl serde::Serialize for CorrelationKernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
