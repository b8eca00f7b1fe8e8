//! Evaluators for the three `Lᵖ(Ω)` moment bounds.
//!
//! All three share the exponential factor `exp(C t max(p^{1/α} L_σ^{2/α}, L_b))`.
//! Part (a) uses the explicit constant `C = max(4, 2^{6/α-1} Υ_α^{1/α})`; parts
//! (b) and (c) take `C` as a parameter that defaults to the same value. Bounds
//! are assembled in log space, so a bound too large for `f64` comes back as
//! `+∞` together with a finite `ln_value`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Inputs shared by the moment-bound evaluators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentBoundInputs {
    pub l_b: f64,
    pub l_sigma: f64,
    pub b0_abs: f64,
    pub sigma0_abs: f64,
    /// Leave unset to derive it from `|b(0)|/L_b` and `|σ(0)|/L_σ`; when set it
    /// must agree with that rule.
    #[serde(default)]
    pub tau: Option<f64>,
    pub p: f64,
    pub alpha: f64,
    pub upsilon_alpha: f64,
    pub u0_sup: f64,
    pub u0_lp: f64,
    pub j_plus: f64,
    pub t: f64,
    /// Spatial dimension `d`; enters the threshold of part (c).
    #[serde(default = "one")]
    pub dimension: usize,
    /// Constant `C` for parts (b) and (c); defaults to the part (a) constant.
    #[serde(default)]
    pub constant: Option<f64>,
}

fn one() -> usize {
    1
}

/// Which of the three bounds to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundPart {
    A,
    B,
    C,
}

impl std::str::FromStr for BoundPart {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(BoundPart::A),
            "b" => Ok(BoundPart::B),
            "c" => Ok(BoundPart::C),
            other => Err(invalid(format!(
                "unknown bound part `{other}` (expected a, b or c)"
            ))),
        }
    }
}

/// An evaluated bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub value: f64,
    pub ln_value: f64,
    pub constant: f64,
    pub tau: f64,
}

/// `max` of the defined ratios `|b(0)|/L_b`, `|σ(0)|/L_σ`; a `0/0` ratio is dropped.
pub fn tau_rule(b0_abs: f64, l_b: f64, sigma0_abs: f64, l_sigma: f64) -> Result<f64> {
    let ratio = |num: f64, den: f64, name: &str| -> Result<f64> {
        if den > 0.0 {
            Ok(num / den)
        } else if num == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::HypothesisViolation(format!(
                "|{name}(0)| = {num} > 0 with zero growth rate; tau is undefined"
            )))
        }
    };
    Ok(ratio(b0_abs, l_b, "b")?.max(ratio(sigma0_abs, l_sigma, "sigma")?))
}

/// Upper bound `z_p ≤ 2√p` for the Burkholder–Davis–Gundy constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BdgConstant {
    pub p: f64,
    pub z_p_bound: f64,
}

impl BdgConstant {
    pub fn new(p: f64) -> Result<Self> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(invalid(format!("p must be at least 2, got {p}")));
        }
        Ok(BdgConstant {
            p,
            z_p_bound: 2.0 * p.sqrt(),
        })
    }
}

impl MomentBoundInputs {
    fn validate(&self) -> Result<f64> {
        let nonneg = [
            ("l_b", self.l_b),
            ("l_sigma", self.l_sigma),
            ("b0_abs", self.b0_abs),
            ("sigma0_abs", self.sigma0_abs),
            ("u0_sup", self.u0_sup),
            ("u0_lp", self.u0_lp),
            ("j_plus", self.j_plus),
            ("t", self.t),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(format!(
                    "{name} must be nonnegative and finite, got {v}"
                )));
            }
        }
        if !(self.p >= 2.0) || !self.p.is_finite() {
            return Err(Error::HypothesisViolation(format!(
                "p must be at least 2, got {}",
                self.p
            )));
        }
        crate::dalang::check_alpha(self.alpha)?;
        if !(self.upsilon_alpha > 0.0) || !self.upsilon_alpha.is_finite() {
            return Err(invalid(format!(
                "upsilon_alpha must be positive and finite, got {}",
                self.upsilon_alpha
            )));
        }
        if self.dimension == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if let Some(c) = self.constant {
            if !(c > 0.0) || !c.is_finite() {
                return Err(invalid(format!("constant must be positive, got {c}")));
            }
        }
        let tau = tau_rule(self.b0_abs, self.l_b, self.sigma0_abs, self.l_sigma)?;
        if let Some(given) = self.tau {
            if (given - tau).abs() > 1e-12 * tau.max(1.0) {
                return Err(invalid(format!(
                    "tau = {given} disagrees with max(|b(0)|/L_b, |σ(0)|/L_σ) = {tau}"
                )));
            }
        }
        Ok(tau)
    }

    /// `max(4, 2^{6/α-1} Υ_α^{1/α})`.
    pub fn part_a_constant(&self) -> f64 {
        4f64.max(2f64.powf(6.0 / self.alpha - 1.0) * self.upsilon_alpha.powf(1.0 / self.alpha))
    }

    /// `max(p^{1/α} L_σ^{2/α}, L_b)`.
    pub fn rate(&self) -> f64 {
        let a = self.alpha;
        (self.p.powf(1.0 / a) * self.l_sigma.powf(2.0 / a)).max(self.l_b)
    }

    /// Smallest `p` allowed by part (a).
    pub fn part_a_threshold(&self) -> f64 {
        if self.l_b > 0.0 {
            2f64.max(2f64.powi(-6) / (self.l_b * self.l_b * self.upsilon_alpha))
        } else {
            2.0
        }
    }

    /// Smallest `p` allowed by part (c).
    pub fn part_c_threshold(&self) -> f64 {
        (2.0 + self.dimension as f64) / self.alpha
    }

    pub fn evaluate(&self, part: BoundPart) -> Result<BoundValue> {
        match part {
            BoundPart::A => moment_bound_a(self),
            BoundPart::B => moment_bound_b(self),
            BoundPart::C => moment_bound_c(self),
        }
    }
}

fn assemble(prefix: f64, constant: f64, exponent: f64, tau: f64) -> BoundValue {
    let ln_value = prefix.ln() + exponent;
    BoundValue {
        value: ln_value.exp(),
        ln_value,
        constant,
        tau,
    }
}

/// `(τ/2 + 2‖u₀‖_∞) exp(C t max(p^{1/α} L_σ^{2/α}, L_b))`.
pub fn moment_bound_a(inp: &MomentBoundInputs) -> Result<BoundValue> {
    let tau = inp.validate()?;
    let threshold = inp.part_a_threshold();
    if inp.p < threshold {
        return Err(Error::HypothesisViolation(format!(
            "part (a) needs p >= {threshold}, got p = {}",
            inp.p
        )));
    }
    let c = inp.part_a_constant();
    Ok(assemble(
        0.5 * tau + 2.0 * inp.u0_sup,
        c,
        c * inp.t * inp.rate(),
        tau,
    ))
}

/// `√3 (τ + J₊) exp(C t max(p^{1/α} L_σ^{2/α}, L_b))`.
pub fn moment_bound_b(inp: &MomentBoundInputs) -> Result<BoundValue> {
    let tau = inp.validate()?;
    let c = inp.constant.unwrap_or_else(|| inp.part_a_constant());
    Ok(assemble(
        3f64.sqrt() * (tau + inp.j_plus),
        c,
        c * inp.t * inp.rate(),
        tau,
    ))
}

/// `‖u₀‖_∞ + C ‖u₀‖_p (L_b + L_σ) exp(C t max(p^{1/α} L_σ^{2/α}, L_b))`.
pub fn moment_bound_c(inp: &MomentBoundInputs) -> Result<BoundValue> {
    let tau = inp.validate()?;
    let threshold = inp.part_c_threshold();
    if inp.p < threshold {
        return Err(Error::HypothesisViolation(format!(
            "part (c) needs p >= (2+d)/alpha = {threshold}, got p = {}",
            inp.p
        )));
    }
    let c = inp.constant.unwrap_or_else(|| inp.part_a_constant());
    let second = c * inp.u0_lp * (inp.l_b + inp.l_sigma);
    let exponent = c * inp.t * inp.rate();
    let ln_value = if second > 0.0 {
        // ln(x + y e^E) without overflow.
        let ln_second = second.ln() + exponent;
        if inp.u0_sup > 0.0 {
            let (hi, lo) = if ln_second > inp.u0_sup.ln() {
                (ln_second, inp.u0_sup.ln())
            } else {
                (inp.u0_sup.ln(), ln_second)
            };
            hi + (lo - hi).exp().ln_1p()
        } else {
            ln_second
        }
    } else {
        inp.u0_sup.ln()
    };
    Ok(BoundValue {
        value: ln_value.exp(),
        ln_value,
        constant: c,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> MomentBoundInputs {
        MomentBoundInputs {
            l_b: 1.0,
            l_sigma: 1.0,
            b0_abs: 0.0,
            sigma0_abs: 0.0,
            tau: None,
            p: 4.0,
            alpha: 0.25,
            upsilon_alpha: 0.8346,
            u0_sup: 1.0,
            u0_lp: 1.0,
            j_plus: 1.0,
            t: 0.1,
            dimension: 1,
            constant: None,
        }
    }

    #[test]
    fn tau_conventions() {
        assert_eq!(tau_rule(0.0, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(tau_rule(2.0, 4.0, 3.0, 1.0).unwrap(), 3.0);
        assert_eq!(tau_rule(0.0, 0.0, 3.0, 2.0).unwrap(), 1.5);
        assert!(matches!(
            tau_rule(1.0, 0.0, 0.0, 1.0),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn part_a_plug_in() {
        let inp = base();
        let v = moment_bound_a(&inp).unwrap();
        let c = 4f64.max(2f64.powf(23.0) * 0.8346f64.powf(4.0));
        let rate = 4f64.powf(4.0);
        let expected_ln = 2f64.ln() + c * 0.1 * rate;
        assert_eq!(v.constant, c);
        assert!((v.ln_value - expected_ln).abs() < 1e-12 * expected_ln);
        assert!(v.value.is_infinite());
    }

    #[test]
    fn time_zero_limits() {
        let mut inp = base();
        inp.t = 0.0;
        inp.b0_abs = 0.5;
        inp.tau = Some(0.5);
        assert!((moment_bound_a(&inp).unwrap().value - (0.25 + 2.0)).abs() < 1e-14);
        assert!((moment_bound_b(&inp).unwrap().value - 3f64.sqrt() * 1.5).abs() < 1e-14);
    }

    #[test]
    fn part_c_threshold_and_zero_coefficients() {
        let mut inp = base();
        assert!(matches!(
            moment_bound_c(&inp),
            Err(Error::HypothesisViolation(_))
        ));
        inp.p = 12.0;
        inp.l_b = 0.0;
        inp.l_sigma = 0.0;
        assert_eq!(moment_bound_c(&inp).unwrap().value, 1.0);
    }

    #[test]
    fn tau_must_match_rule() {
        let mut inp = base();
        inp.tau = Some(1.0);
        assert!(moment_bound_b(&inp).is_err());
    }

    #[test]
    fn part_a_hypothesis_on_p() {
        let mut inp = base();
        inp.l_b = 0.01;
        inp.p = 2.0;
        // 2^{-6} / (1e-4 · 0.8346) ≈ 187
        assert!(matches!(
            moment_bound_a(&inp),
            Err(Error::HypothesisViolation(_))
        ));
        inp.p = 200.0;
        assert!(moment_bound_a(&inp).is_ok());
    }

    #[test]
    fn bdg() {
        assert_eq!(BdgConstant::new(4.0).unwrap().z_p_bound, 4.0);
        assert!(BdgConstant::new(1.5).is_err());
    }

    #[test]
    fn deserializes_with_defaults() {
        let json = r#"{"l_b":1,"l_sigma":0.5,"b0_abs":0,"sigma0_abs":0,"p":4,"alpha":0.4,
            "upsilon_alpha":1.2,"u0_sup":1,"u0_lp":1,"j_plus":1,"t":0.5}"#;
        let inp: MomentBoundInputs = serde_json::from_str(json).unwrap();
        assert_eq!(inp.dimension, 1);
        assert!(inp.tau.is_none());
        let bad = json.replace("\"t\":0.5", "\"t\":0.5,\"extra\":1");
        assert!(serde_json::from_str::<MomentBoundInputs>(&bad).is_err());
    }
}
