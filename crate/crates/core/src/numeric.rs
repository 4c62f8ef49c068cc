//! Log-domain scalar helpers shared by the fidelity and echo kernels.
//!
//! At β = 100 and Λ ≈ 3 the hyperbolic terms entering the per-mode formulas
//! already overflow `f64`, so every product in this crate is accumulated as a
//! sum of logarithms and every large intermediate is carried as a
//! [`LogScaled`] mantissa/exponent pair.

/// ln(1 + e^x), safe for any finite `x`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// ln(e^a + e^b) with the usual max shift.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln Σ_i e^{x_i}, max-shifted. Returns -inf for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// A nonnegative scalar stored as `mantissa * exp(scale)`.
///
/// The scale is anchored at the largest exponent carrying nonzero weight, so
/// the mantissa stays in a representable range even when individual terms
/// are e^{±10^6}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogScaled {
    mantissa: f64,
    scale: f64,
}

impl LogScaled {
    /// Σ_i w_i e^{x_i} for nonnegative weights `(w_i, x_i)`.
    pub fn from_weighted_exponentials(terms: &[(f64, f64)]) -> Self {
        let scale = terms
            .iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|&(_, x)| x)
            .fold(f64::NEG_INFINITY, f64::max);
        if scale == f64::NEG_INFINITY {
            return Self {
                mantissa: 0.0,
                scale: 0.0,
            };
        }
        let mantissa = terms
            .iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|&(w, x)| w * (x - scale).exp())
            .sum();
        Self { mantissa, scale }
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Natural log of the represented value; -inf for zero.
    pub fn ln(&self) -> f64 {
        if self.mantissa == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.scale + self.mantissa.ln()
        }
    }

    /// Linear-space value. Overflows to +inf when the scale is large; callers
    /// needing the extreme regime must stay with [`LogScaled::ln`].
    pub fn value(&self) -> f64 {
        self.mantissa * self.scale.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for &x in &[-30.0, -2.5, -1e-9, 0.0, 1e-9, 2.5, 30.0] {
            let naive = (1.0 + f64::exp(x)).ln();
            assert!((softplus(x) - naive).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn softplus_large_arguments() {
        assert_eq!(softplus(1e6), 1e6);
        assert_eq!(softplus(-1e6), 0.0);
        assert!(softplus(750.0).is_finite());
    }

    #[test]
    fn log_add_exp_shifted() {
        // ln(e^1234 + e^1232) = 1232 + ln(e^2 + 1)
        let expected = 1232.0 + (1.0 + f64::exp(2.0)).ln();
        assert!((log_add_exp(1234.0, 1232.0) - expected).abs() < 1e-12);
        assert!((log_add_exp(1232.0, 1234.0) - expected).abs() < 1e-12);
        assert_eq!(
            log_add_exp(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
        assert!((log_add_exp(f64::NEG_INFINITY, 2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_matches_pairwise() {
        let xs = [0.3f64, -4.0, 2.2, 1.1];
        let direct = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
    }

    #[test]
    fn log_scaled_huge_terms() {
        // 0.5 e^{2e6} + 0.5 e^{-2e6}: value overflows, ln does not.
        let t = LogScaled::from_weighted_exponentials(&[(0.5, 2e6), (0.5, -2e6)]);
        assert!((t.ln() - (2e6 + 0.5f64.ln())).abs() < 1e-9);
        assert!(t.value().is_infinite());
    }

    #[test]
    fn log_scaled_skips_zero_weights() {
        // A zero weight on the largest exponent must not poison the anchor.
        let t = LogScaled::from_weighted_exponentials(&[(0.0, 500.0), (1.0, -700.0)]);
        assert!((t.ln() - (-700.0)).abs() < 1e-12);
        let zero = LogScaled::from_weighted_exponentials(&[(0.0, 1.0)]);
        assert_eq!(zero.ln(), f64::NEG_INFINITY);
        assert_eq!(zero.value(), 0.0);
    }

    #[test]
    fn log_scaled_moderate_value_round_trip() {
        let t = LogScaled::from_weighted_exponentials(&[(1.5, 2.0), (0.25, -1.0)]);
        let direct = 1.5 * f64::exp(2.0) + 0.25 * f64::exp(-1.0);
        assert!((t.value() - direct).abs() < 1e-12 * direct);
        assert!((t.ln() - direct.ln()).abs() < 1e-14);
    }
}
