//! Evaluators for the iteration-complexity ceilings of the adaptive bundle
//! methods. Every function is pure; ceilings are returned as integers so they
//! can be compared directly with measured counts.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("t̄ needs a finite domain diameter D (or a measured cycle-start gap)")]
    InfiniteDiameter,
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

/// Symbols entering the bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundInputs {
    pub epsilon: f64,
    pub tau: f64,
    pub beta0: f64,
    pub lambda1: f64,
    pub m_const: f64,
    pub l_const: f64,
    /// Diameter `D` of `dom h`; may be infinite.
    pub diameter: f64,
    /// Distance bound `d₀ ≥ dist(x̂₀, X*)`.
    pub d0: f64,
    /// Measured `max_k t_{i_k}`, used in place of `t̄` when `D` is infinite.
    pub t_start: Option<f64>,
    /// `φ(x̂₀) − n̂₀` for the general (unknown `φ*`) bound.
    pub phi_x0_minus_n0: Option<f64>,
}

impl BoundInputs {
    fn validate(&self) -> Result<(), TheoryError> {
        if !(self.epsilon > 0.0) {
            return Err(TheoryError::InvalidInput("epsilon must be positive"));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(TheoryError::InvalidInput("tau must lie in (0, 1)"));
        }
        if !(self.lambda1 > 0.0) {
            return Err(TheoryError::InvalidInput("lambda1 must be positive"));
        }
        Ok(())
    }

    /// `t̄` if `D` is finite, otherwise the measured cycle-start gap.
    fn t_bar_or_measured(&self) -> Result<f64, TheoryError> {
        match t_bar(self.m_const, self.l_const, self.diameter) {
            Ok(t) => Ok(t),
            Err(e) => self.t_start.ok_or(e),
        }
    }
}

/// `log⁺(x) = max{ln x, 0}` (0 for nonpositive arguments).
pub fn log_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

/// `log₂⁺(x) = max{log₂ x, 0}`.
pub fn log2_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.log2()
    } else {
        0.0
    }
}

// Values within a few ulps of an integer are treated as that integer so that
// exact inputs do not pick up a spurious +1 from roundoff.
fn snap(x: f64) -> Option<f64> {
    let r = x.round();
    ((x - r).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0)).then_some(r)
}

pub fn ceil_guarded(x: f64) -> u64 {
    snap(x).unwrap_or_else(|| x.ceil()).max(0.0) as u64
}

pub fn floor_guarded(x: f64) -> u64 {
    snap(x).unwrap_or_else(|| x.floor()).max(0.0) as u64
}

/// `λ̲ = min{τε / (128(1−τ)M²), τ / (8(1−τ)L)}`; terms with a zero denominator are `+∞`.
pub fn lambda_lower(tau: f64, epsilon: f64, m_const: f64, l_const: f64) -> f64 {
    let first = if m_const > 0.0 { tau * epsilon / (128.0 * (1.0 - tau) * m_const * m_const) } else { f64::INFINITY };
    let second = if l_const > 0.0 { tau / (8.0 * (1.0 - tau) * l_const) } else { f64::INFINITY };
    first.min(second)
}

/// `Q̄ = 128(1 − τ)/τ`.
pub fn q_bar(tau: f64) -> f64 {
    128.0 * (1.0 - tau) / tau
}

/// `t̄ = 2MD + (L/2)D²`.
pub fn t_bar(m_const: f64, l_const: f64, diameter: f64) -> Result<f64, TheoryError> {
    if !diameter.is_finite() {
        return Err(TheoryError::InfiniteDiameter);
    }
    Ok(2.0 * m_const * diameter + 0.5 * l_const * diameter * diameter)
}

/// `(M²/ε + L/16)` shared by several bounds.
fn curvature_term(inp: &BoundInputs) -> f64 {
    inp.m_const * inp.m_const / inp.epsilon + inp.l_const / 16.0
}

/// Per-cycle iteration factor `((1+τ)/(1−τ))·log⁺(8t̄/ε) + 2`.
fn cycle_factor(inp: &BoundInputs, t: f64) -> f64 {
    (1.0 + inp.tau) / (1.0 - inp.tau) * log_plus(8.0 * t / inp.epsilon) + 2.0
}

/// `K̄(ε) = 2⌈(2D²Q̄/ε)(M²/ε + L/16 + 1/(λ₁Q̄)) + log⁺{β₀(φ(x̂₀) − n̂₀)/ε} + 1⌉`.
pub fn k_bar(inp: &BoundInputs) -> Result<u64, TheoryError> {
    inp.validate()?;
    if !inp.diameter.is_finite() {
        return Err(TheoryError::InfiniteDiameter);
    }
    let gap0 = inp.phi_x0_minus_n0.ok_or(TheoryError::InvalidInput("phi_x0_minus_n0 is required"))?;
    let q = q_bar(inp.tau);
    let d2 = inp.diameter * inp.diameter;
    let inner = 2.0 * d2 * q / inp.epsilon * (curvature_term(inp) + 1.0 / (inp.lambda1 * q))
        + log_plus(inp.beta0 * gap0 / inp.epsilon)
        + 1.0;
    Ok(2 * ceil_guarded(inner))
}

/// Total iterations of the general method: `4K̄·(cycle factor) + log₂⁺(Q̄λ₁(M²/ε + L/16))`.
pub fn total_iter_bound_general(inp: &BoundInputs) -> Result<u64, TheoryError> {
    let kb = k_bar(inp)? as f64;
    let t = t_bar(inp.m_const, inp.l_const, inp.diameter)?;
    let q = q_bar(inp.tau);
    let total = 4.0 * kb * cycle_factor(inp, t) + log2_plus(q * inp.lambda1 * curvature_term(inp));
    Ok(floor_guarded(total))
}

/// `K̂(ε) = ⌈(2d₀²Q̄/ε)(M²/ε + L/16 + 1/(λ₁Q̄))⌉`.
pub fn k_hat(inp: &BoundInputs) -> Result<u64, TheoryError> {
    inp.validate()?;
    if !inp.d0.is_finite() || inp.d0 < 0.0 {
        return Err(TheoryError::InvalidInput("d0 must be finite and nonnegative"));
    }
    let q = q_bar(inp.tau);
    let x = 2.0 * inp.d0 * inp.d0 * q / inp.epsilon * (curvature_term(inp) + 1.0 / (inp.lambda1 * q));
    Ok(ceil_guarded(x))
}

/// Total iterations of the known-optimum method:
/// `log₂⁺(Q̄λ₁(M²/ε + L/16)) + (cycle factor)·K̂(ε)`.
pub fn total_iter_bound_known(inp: &BoundInputs) -> Result<u64, TheoryError> {
    let kh = k_hat(inp)? as f64;
    let t = inp.t_bar_or_measured()?;
    let q = q_bar(inp.tau);
    let total = log2_plus(q * inp.lambda1 * curvature_term(inp)) + cycle_factor(inp, t) * kh;
    Ok(floor_guarded(total))
}

/// `N̄_k(ε) = ⌈((1+τ)/(1−τ))·log⁺(8t_{i_k}/ε)⌉`.
pub fn n_bar(t_ik: f64, epsilon: f64, tau: f64) -> u64 {
    ceil_guarded((1.0 + tau) / (1.0 - tau) * log_plus(8.0 * t_ik / epsilon))
}

/// Cycle length ceiling `s_k + N̄_k(ε) + 1`.
pub fn cycle_len_bound(t_ik: f64, epsilon: f64, tau: f64, s_k: u64) -> u64 {
    s_k + n_bar(t_ik, epsilon, tau) + 1
}

/// `⌈log₂⁺(λ₁/λ̲)⌉`, zero when `λ̲ = +∞`.
pub fn bad_iter_bound(lambda1: f64, lambda_lower: f64) -> u64 {
    if lambda_lower.is_infinite() {
        return 0;
    }
    ceil_guarded(log2_plus(lambda1 / lambda_lower))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> BoundInputs {
        BoundInputs {
            epsilon: 1.0,
            tau: 0.5,
            beta0: 0.5,
            lambda1: 1.0,
            m_const: 1.0,
            l_const: 0.0,
            diameter: 1.0,
            d0: 1.0,
            t_start: None,
            phi_x0_minus_n0: Some(1.0),
        }
    }

    #[test]
    fn lambda_lower_examples() {
        assert_eq!(lambda_lower(0.5, 1.0, 1.0, 1.0), 0.0078125);
        assert_eq!(lambda_lower(0.5, 1.0, 1.0, 0.0), 1.0 / 128.0);
        let v = lambda_lower(0.95, 1e-2, 1.0, 0.0);
        assert!((v - 0.95 * 0.01 / (128.0 * 0.05)).abs() < 1e-15);
        assert!((v - 1.484375e-3).abs() < 1e-9);
        assert!(lambda_lower(0.5, 1.0, 0.0, 0.0).is_infinite());
    }

    #[test]
    fn q_and_t_bar() {
        assert!((q_bar(0.95) - 6.4 / 0.95).abs() < 1e-12);
        assert_eq!(t_bar(1.0, 0.0, 2.0).unwrap(), 4.0);
        assert_eq!(t_bar(0.0, 2.0, 1.0).unwrap(), 1.0);
        assert_eq!(t_bar(1.0, 0.0, f64::INFINITY), Err(TheoryError::InfiniteDiameter));
    }

    #[test]
    fn k_bar_hand_value() {
        // Q̄ = 128, inner = 256·(1 + 1/128) + log⁺(0.5) + 1 = 259
        assert_eq!(k_bar(&inputs()).unwrap(), 518);
        // 4·518·(3·ln 16 + 2) + log₂(128) = 21385.4…
        assert_eq!(total_iter_bound_general(&inputs()).unwrap(), 21385);
    }

    #[test]
    fn k_bar_monotone_in_epsilon() {
        let mut a = inputs();
        a.epsilon = 0.1;
        let mut b = a.clone();
        b.epsilon = 0.2;
        assert!(k_bar(&a).unwrap() >= k_bar(&b).unwrap());
    }

    #[test]
    fn k_hat_hand_value() {
        let inp = BoundInputs { epsilon: 0.1, tau: 0.95, d0: 1.0, ..inputs() };
        // 20·Q̄·10 + 20 with Q̄ = 6.4/0.95
        assert_eq!(k_hat(&inp).unwrap(), 1368);
    }

    #[test]
    fn k_hat_zero_distance() {
        let inp = BoundInputs { d0: 0.0, ..inputs() };
        assert_eq!(k_hat(&inp).unwrap(), 0);
        let total = total_iter_bound_known(&inp).unwrap();
        assert_eq!(total, floor_guarded(log2_plus(q_bar(0.5) * 1.0 * 1.0)));
    }

    #[test]
    fn k_hat_quadratic_in_inverse_epsilon() {
        let a = BoundInputs { epsilon: 1e-3, ..inputs() };
        let b = BoundInputs { epsilon: 5e-4, ..inputs() };
        let r = k_hat(&b).unwrap() as f64 / k_hat(&a).unwrap() as f64;
        assert!((r - 4.0).abs() < 0.01, "ratio {r}");
    }

    #[test]
    fn known_total_uses_measured_gap_without_diameter() {
        let inp = BoundInputs { diameter: f64::INFINITY, ..inputs() };
        assert!(total_iter_bound_known(&inp).is_err());
        let inp = BoundInputs { t_start: Some(2.0), ..inp };
        let with_d = total_iter_bound_known(&inputs()).unwrap();
        // t̄ = 2MD = 2 in the finite case, so both agree
        assert_eq!(total_iter_bound_known(&inp).unwrap(), with_d);
    }

    #[test]
    fn cycle_len_examples() {
        assert_eq!(cycle_len_bound(0.01, 0.1, 0.5, 2), 3);
        // 3·ln(80) = 13.146… → 14
        assert_eq!(cycle_len_bound(1.0, 0.1, 0.5, 2), 2 + 14 + 1);
        assert!(cycle_len_bound(1.0, 0.1, 0.9, 0) >= cycle_len_bound(1.0, 0.1, 0.5, 0));
    }

    #[test]
    fn bad_iter_examples() {
        assert_eq!(bad_iter_bound(1.0, 1.0), 0);
        assert_eq!(bad_iter_bound(8.0, 1.0), 3);
        assert_eq!(bad_iter_bound(1.0, f64::INFINITY), 0);
        assert_eq!(bad_iter_bound(0.5, 1.0), 0);
    }

    #[test]
    fn log_plus_vanishes_below_one() {
        assert_eq!(log_plus(0.5), 0.0);
        assert_eq!(log_plus(1.0), 0.0);
        assert_eq!(log2_plus(0.0), 0.0);
    }
}
