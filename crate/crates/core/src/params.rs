//! The exponent bundle `(s, α, p, q, t, ε, ε′, δ)` and its admissible windows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessParams {
    pub s: f64,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub t: f64,
    pub eps: f64,
    pub eps_prime: f64,
    pub delta: f64,
}

/// Relative slack on the lower bounds for `t`, so that defaults computed by
/// the same formula are accepted.
const T_SLACK: f64 = 1e-12;

fn ratio(q: f64, x: f64) -> f64 {
    if q > 0.0 {
        q / (q + x)
    } else {
        // Q = 0 only on one-point spaces; any positive t is admissible there.
        1.0
    }
}

impl SmoothnessParams {
    /// Defaults for the gradient transfer of the non-fractional spaces:
    /// `t = Q/(Q+s)`.
    pub fn hajlasz_defaults(s: f64, alpha: f64, p: f64, q_dim: f64) -> Self {
        Self {
            s,
            alpha,
            p,
            q: p,
            t: ratio(q_dim, s),
            eps: 0.5 * s,
            eps_prime: 0.75 * s,
            delta: 0.5 * (1.0 - (s + alpha)),
        }
    }

    /// The choices `δ = ½(1-(s+α))`, `ε = ½ max{s, s + (Q - Qr)/r}`,
    /// `ε′ = ½(ε+s)`, `t = Q/(Q+ε)` with `r = min{p, q}`.
    pub fn triebel_lizorkin_defaults(s: f64, alpha: f64, p: f64, q: f64, q_dim: f64) -> Self {
        Self::with_r(s, alpha, p, q, q_dim, p.min(q))
    }

    /// As [`triebel_lizorkin_defaults`](Self::triebel_lizorkin_defaults) with `r = p`.
    pub fn besov_defaults(s: f64, alpha: f64, p: f64, q: f64, q_dim: f64) -> Self {
        Self::with_r(s, alpha, p, q, q_dim, p)
    }

    fn with_r(s: f64, alpha: f64, p: f64, q: f64, q_dim: f64, r: f64) -> Self {
        let eps = 0.5 * f64::max(s, s + (q_dim - q_dim * r) / r);
        Self {
            s,
            alpha,
            p,
            q,
            t: ratio(q_dim, eps),
            eps,
            eps_prime: 0.5 * (eps + s),
            delta: 0.5 * (1.0 - (s + alpha)),
        }
    }

    /// Window of the `M*_α` gradient transfer for `s`-Hajłasz gradients:
    /// `s >= 0`, `α >= 0`, `s + α > 0`, `t >= Q/(Q+s)`.
    pub fn validate_hajlasz_transfer(&self, q_dim: f64) -> Result<()> {
        if !(self.s >= 0.0 && self.alpha >= 0.0 && self.s + self.alpha > 0.0) {
            return Err(Error::param(format!(
                "need s >= 0, alpha >= 0 and s + alpha > 0 (s = {}, alpha = {})",
                self.s, self.alpha
            )));
        }
        let lower = ratio(q_dim, self.s);
        if !(self.t >= lower * (1.0 - T_SLACK)) {
            return Err(Error::param(format!("t = {} must be >= Q/(Q+s) = {lower}", self.t)));
        }
        Ok(())
    }

    /// Window of the sequence transfer: `0 < s+α < 1`, `0 < δ < 1-s-α`,
    /// `0 < ε < ε′ < s`, `t >= Q/(Q+ε)`.
    pub fn validate_sequence_transfer(&self, q_dim: f64) -> Result<()> {
        let sa = self.s + self.alpha;
        if !(self.alpha >= 0.0 && sa > 0.0 && sa < 1.0) {
            return Err(Error::param(format!("need 0 < s + alpha < 1, got {sa}")));
        }
        if !(self.delta > 0.0 && self.delta < 1.0 - sa) {
            return Err(Error::param(format!(
                "need 0 < delta < 1 - s - alpha = {}, got delta = {}",
                1.0 - sa,
                self.delta
            )));
        }
        if !(0.0 < self.eps && self.eps < self.eps_prime && self.eps_prime < self.s) {
            return Err(Error::param(format!(
                "need 0 < eps < eps' < s, got eps = {}, eps' = {}, s = {}",
                self.eps, self.eps_prime, self.s
            )));
        }
        let lower = ratio(q_dim, self.eps);
        if !(self.t >= lower * (1.0 - T_SLACK)) {
            return Err(Error::param(format!("t = {} must be >= Q/(Q+eps) = {lower}", self.t)));
        }
        Ok(())
    }
}

/// `Qp/(Q - βp)`, the Sobolev exponent for smoothness `β`; `None` when
/// `Q <= βp`.
pub fn sobolev_exponent(q_dim: f64, p: f64, beta: f64) -> Option<f64> {
    let den = q_dim - beta * p;
    (den > 0.0).then(|| q_dim * p / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tl_defaults_are_admissible() {
        for &(s, a, p, q, qd) in &[
            (0.5, 0.3, 2.0, 2.0, 1.0),
            (0.3, 0.2, 1.5, 3.0, 2.0),
            (0.5, 0.0, 0.9, 2.0, 1.585),
            (0.8, 0.1, 1.0, 1.0, 3.0),
        ] {
            let prm = SmoothnessParams::triebel_lizorkin_defaults(s, a, p, q, qd);
            prm.validate_sequence_transfer(qd).unwrap();
            assert!(prm.eps < prm.eps_prime && prm.eps_prime < s);
            assert!(prm.t > qd / (qd + s) && prm.t < p.min(q).max(1.0));
        }
        let prm = SmoothnessParams::triebel_lizorkin_defaults(0.5, 0.3, 2.0, 2.0, 1.0);
        assert_eq!(prm.delta, 0.5 * (1.0 - 0.8));
        assert_eq!(prm.eps, 0.25);
        assert_eq!(prm.eps_prime, 0.375);
        assert_eq!(prm.t, 1.0 / 1.25);
    }

    #[test]
    fn rejects_wide_delta() {
        let mut prm = SmoothnessParams::triebel_lizorkin_defaults(0.25, 0.25, 2.0, 2.0, 1.0);
        prm.delta = 1.0;
        let err = prm.validate_sequence_transfer(1.0).unwrap_err();
        assert!(err.to_string().contains("delta"));
    }

    #[test]
    fn sobolev_exponents() {
        assert_eq!(sobolev_exponent(2.0, 1.0, 1.0), Some(2.0));
        assert_eq!(sobolev_exponent(1.0, 2.0, 0.5), None);
    }
}
