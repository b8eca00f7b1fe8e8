//! Dalang-type integrals: `Υ(β)`, the strengthened `Υ_α`, the constant `C`
//! entering the closed-form growth rate, and the admissible range of `α`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernel::CorrelationKernel;
use crate::spectral::{diverges, spectral_integral, Radial, RadialTolerance, Weight};

/// A finite value or a certified divergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DalangValue {
    Finite(f64),
    Divergent,
}

impl DalangValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            DalangValue::Finite(v) => Some(v),
            DalangValue::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, DalangValue::Divergent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DalangReport {
    pub kernel: CorrelationKernel,
    /// `α` for `Υ_α`; zero for `Υ(β)`.
    pub alpha: f64,
    /// `β` for `Υ(β)`; `None` for `Υ_α`.
    pub beta: Option<f64>,
    pub value: DalangValue,
    pub quadrature_error: f64,
}

fn report(
    kernel: &CorrelationKernel,
    alpha: f64,
    beta: Option<f64>,
    weight: Weight,
) -> DalangReport {
    let (value, quadrature_error) =
        match spectral_integral(kernel, weight, RadialTolerance::default()) {
            Radial::Finite(e) => (DalangValue::Finite(e.value), e.error),
            Radial::Divergent => (DalangValue::Divergent, 0.0),
        };
    DalangReport {
        kernel: kernel.clone(),
        alpha,
        beta,
        value,
        quadrature_error,
    }
}

/// `Υ(β) = (2π)^{-d} ∫ f̂(ξ) / (β + |ξ|²) dξ`.
pub fn upsilon(kernel: &CorrelationKernel, beta: f64) -> Result<DalangReport> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    Ok(report(kernel, 0.0, Some(beta), Weight::Resolvent { beta }))
}

/// `Υ_α = (2π)^{-d} ∫ f̂(ξ) / (1 + |ξ|²)^{1-α} dξ`.
pub fn upsilon_alpha(kernel: &CorrelationKernel, alpha: f64) -> Result<DalangReport> {
    check_alpha(alpha)?;
    Ok(report(kernel, alpha, None, Weight::Bessel { alpha }))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `sup{α ∈ (0,1) : Υ_α < ∞}`, or 0 if the set is empty.
pub fn admissible_alpha_sup(kernel: &CorrelationKernel) -> f64 {
    let finite = |alpha: f64| !diverges(kernel, &Weight::Bessel { alpha });
    if finite(1.0 - 1e-9) {
        return 1.0;
    }
    if !finite(1e-9) {
        return 0.0;
    }
    let (mut lo, mut hi) = (1e-9, 1.0 - 1e-9);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if finite(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `C = (2π)^{-d} 2^{-α} max(∫_{|ξ|≤1} f̂, ∫_{|ξ|>1} f̂ |ξ|^{-2(1-α)})`.
pub fn constant_c(kernel: &CorrelationKernel, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if diverges(kernel, &Weight::Bessel { alpha }) {
        return Err(Error::Divergent(format!(
            "Υ_α is infinite for {kernel} at alpha = {alpha}"
        )));
    }
    let tol = RadialTolerance::default();
    let piece = |w| {
        spectral_integral(kernel, w, tol)
            .finite()
            .map(|e| e.value)
            .ok_or_else(|| Error::Divergent(format!("{kernel}: spectral piece diverges")))
    };
    let inner = piece(Weight::Inner)?;
    let outer = piece(Weight::Outer { alpha })?;
    Ok(2f64.powf(-alpha) * inner.max(outer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelKind;
    use statrs::function::gamma::gamma;
    use std::f64::consts::PI;

    fn riesz(beta: f64) -> CorrelationKernel {
        CorrelationKernel::new(KernelKind::Riesz { exponent: beta }, 1).unwrap()
    }

    #[test]
    fn white_upsilon_closed_form() {
        let k = CorrelationKernel::white(1);
        let v = upsilon(&k, 1.0).unwrap().value.finite().unwrap();
        assert!((v - 0.5).abs() < 1e-10);
        assert!(upsilon(&CorrelationKernel::white(2), 3.0)
            .unwrap()
            .value
            .is_divergent());
        assert!(upsilon(&k, 0.0).is_err());
    }

    #[test]
    fn white_upsilon_alpha() {
        let k = CorrelationKernel::white(1);
        let r = upsilon_alpha(&k, 0.25).unwrap();
        let exact = PI.sqrt() * gamma(0.25) / gamma(0.75) / (2.0 * PI);
        assert!((r.value.finite().unwrap() - exact).abs() < 1e-9);
        assert!((exact - 0.8346).abs() < 1e-4);
        assert!(r.quadrature_error < 1e-6);
        assert!(upsilon_alpha(&k, 0.5).unwrap().value.is_divergent());
        assert!(upsilon_alpha(&k, 1.0).is_err());
    }

    #[test]
    fn riesz_alpha_threshold() {
        let k = riesz(0.5);
        assert!(upsilon_alpha(&k, 0.74).unwrap().value.finite().is_some());
        assert!(upsilon_alpha(&k, 0.75).unwrap().value.is_divergent());
        assert!((admissible_alpha_sup(&k) - 0.75).abs() < 1e-4);
        assert!(upsilon(&k, 1.0).unwrap().value.finite().unwrap() > 0.0);
    }

    #[test]
    fn admissible_sup_examples() {
        assert!((admissible_alpha_sup(&CorrelationKernel::white(1)) - 0.5).abs() < 1e-4);
        assert_eq!(admissible_alpha_sup(&CorrelationKernel::white(2)), 0.0);
        let g = CorrelationKernel::new(KernelKind::Gaussian { scale: 1.0 }, 1).unwrap();
        assert_eq!(admissible_alpha_sup(&g), 1.0);
    }

    #[test]
    fn constant_c_white() {
        let c = constant_c(&CorrelationKernel::white(1), 0.25).unwrap();
        let exact = 2f64.powf(-0.25) * 4.0 / (2.0 * PI);
        assert!((c - exact).abs() < 1e-9, "{c} {exact}");
        assert!(constant_c(&CorrelationKernel::white(1), 0.6).is_err());
    }
}
