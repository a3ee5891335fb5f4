//! Scalar quantities of the mountain-pass geometry.
//!
//! Along a ray `v = r w`, `‖w‖_{W₀} = 1`, the energy is bounded below by
//! `r F(r)` with
//!
//! ```text
//! F(r) = Λ⁻² r^{p-1} / p - λ C₅ r^{q-1} / q - C₄^{1/p} ‖f‖_{p'}
//! ```
//!
//! `F'` vanishes at `r* = (q(p-1) Λ⁻² / (p(q-1) λ C₅))^{1/(q-p)}`. The
//! closed-form radius omits the outer exponent `1/(q-p)` and coincides with
//! `r*` only when `q - p = 1`; [`r0_maximizer`] reports both.

use crate::error::{Error, Result};

fn check_domain(p: f64, q: f64, lambda_cap: f64) -> Result<()> {
    if !(p > 1.0 && q > p && p.is_finite() && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 1 < p < q, got p = {p}, q = {q}")));
    }
    if !(lambda_cap >= 1.0 && lambda_cap.is_finite()) {
        return Err(Error::InvalidParameter(format!("need Λ ≥ 1, got {lambda_cap}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// `λ₁ = Λ⁻² q(p-1) / (C₅ p(q-1)) · ((q-p) / (p(q-1)) · 1/(C₄^{1/p} ‖f‖_{p'}))^{(q-p)/(p-1)}`,
/// in its reference form.
///
/// For `Λ = 1` this is the exact threshold below which `F(r*) > 0`. For
/// `Λ > 1` the exact threshold carries an extra `Λ^{-2(q-p)/(p-1)}`.
pub fn lambda1_threshold(p: f64, q: f64, lambda_cap: f64, c4: f64, c5: f64, f_norm: f64) -> Result<f64> {
    check_domain(p, q, lambda_cap)?;
    check_positive("C4", c4)?;
    check_positive("C5", c5)?;
    check_positive("‖f‖", f_norm)?;
    let pre = lambda_cap.powi(-2) * q * (p - 1.0) / (c5 * p * (q - 1.0));
    let inner = (q - p) / (p * (q - 1.0)) / (c4.powf(1.0 / p) * f_norm);
    Ok(pre * inner.powf((q - p) / (p - 1.0)))
}

/// Exact `F(r*) > 0` threshold, for comparison with [`lambda1_threshold`].
pub fn lambda1_exact(p: f64, q: f64, lambda_cap: f64, c4: f64, c5: f64, f_norm: f64) -> Result<f64> {
    let printed = lambda1_threshold(p, q, lambda_cap, c4, c5, f_norm)?;
    Ok(printed * lambda_cap.powf(-2.0 * (q - p) / (p - 1.0)))
}

/// Parameters of `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FParams {
    pub p: f64,
    pub q: f64,
    pub lambda_cap: f64,
    pub lambda: f64,
    pub c4: f64,
    pub c5: f64,
    pub f_norm: f64,
}

pub fn f_value(r: f64, fp: &FParams) -> f64 {
    fp.lambda_cap.powi(-2) * r.powf(fp.p - 1.0) / fp.p
        - fp.lambda * fp.c5 * r.powf(fp.q - 1.0) / fp.q
        - fp.c4.powf(1.0 / fp.p) * fp.f_norm
}

/// `F` on `count` log-spaced radii in `[lo, hi]`.
pub fn f_profile(fp: &FParams, lo: f64, hi: f64, count: usize) -> Vec<(f64, f64)> {
    (0..count)
        .map(|i| {
            let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            let r = lo * (hi / lo).powf(t);
            (r, f_value(r, fp))
        })
        .collect()
}

/// `q(p-1) / (p(q-1)) · Λ⁻² / (λ C₅)`, in its reference form.
pub fn r0_printed(p: f64, q: f64, lambda_cap: f64, lambda: f64, c5: f64) -> Result<f64> {
    check_domain(p, q, lambda_cap)?;
    check_positive("λ", lambda)?;
    check_positive("C5", c5)?;
    Ok(q * (p - 1.0) / (p * (q - 1.0)) * lambda_cap.powi(-2) / (lambda * c5))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R0Report {
    /// The closed-form radius.
    pub printed: f64,
    /// The root of `F'`.
    pub stationary: f64,
    /// `F` decreases on both sides of the closed-form radius by 1%.
    pub printed_is_maximizer: bool,
    /// `F'` changes sign from + to - across `stationary`.
    pub stationary_is_maximizer: bool,
}

/// `F'(r)`; independent of `C₄` and `‖f‖`.
fn f_prime(r: f64, p: f64, q: f64, lambda_cap: f64, lambda: f64, c5: f64) -> f64 {
    lambda_cap.powi(-2) * (p - 1.0) / p * r.powf(p - 2.0) - lambda * c5 * (q - 1.0) / q * r.powf(q - 2.0)
}

/// The closed-form `r₀` together with the true maximizer of `F`.
pub fn r0_maximizer(p: f64, q: f64, lambda_cap: f64, lambda: f64, c5: f64) -> Result<R0Report> {
    let printed = r0_printed(p, q, lambda_cap, lambda, c5)?;
    let stationary = printed.powf(1.0 / (q - p));
    let fp = |r: f64| f_prime(r, p, q, lambda_cap, lambda, c5);
    // F(r) - F(r') = ∫ F', so the 1% comparison only needs F' and is
    // independent of the constant term
    let rise_left = crate::quad::adaptive(&fp, 0.99 * printed, printed, 1e-12);
    let rise_right = crate::quad::adaptive(&fp, printed, 1.01 * printed, 1e-12);
    Ok(R0Report {
        printed,
        stationary,
        printed_is_maximizer: rise_left > 0.0 && rise_right < 0.0,
        stationary_is_maximizer: fp(0.99 * stationary) > 0.0 && fp(1.01 * stationary) < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let l1 = lambda1_threshold(2.0, 4.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((l1 - 2.0 / 27.0).abs() < 1e-15);
        let r = r0_maximizer(2.0, 4.0, 1.0, 1.0, 1.0).unwrap();
        assert!((r.printed - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.stationary - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(!r.printed_is_maximizer);
        assert!(r.stationary_is_maximizer);
        let half = r0_printed(2.0, 4.0, 1.0, 2.0, 1.0).unwrap();
        assert!((half - 1.0 / 3.0).abs() < 1e-15);
        let quarter = lambda1_threshold(2.0, 4.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert!((quarter - l1 / 4.0).abs() < 1e-16);
    }

    #[test]
    fn printed_radius_is_stationary_when_q_minus_p_is_one() {
        let r = r0_maximizer(2.0, 3.0, 1.3, 0.7, 2.0).unwrap();
        assert!((r.printed - r.stationary).abs() < 1e-15);
        assert!(r.printed_is_maximizer);
    }

    #[test]
    fn threshold_decreases_in_source_norm() {
        let mut prev = f64::INFINITY;
        for f in [0.1, 1.0, 10.0, 100.0] {
            let l = lambda1_threshold(2.5, 3.5, 1.0, 0.3, 0.2, f).unwrap();
            assert!(l < prev);
            prev = l;
        }
    }

    #[test]
    fn exact_threshold_separates_sign_of_f_at_stationary_point() {
        for lam_cap in [1.0, 1.1] {
            let (p, q, c4, c5, fnorm) = (2.0, 3.5, 0.4, 0.2, 0.3);
            let l = lambda1_exact(p, q, lam_cap, c4, c5, fnorm).unwrap();
            for (scale, positive) in [(0.99, true), (1.01, false)] {
                let lambda = scale * l;
                let r = r0_maximizer(p, q, lam_cap, lambda, c5).unwrap().stationary;
                let fp = FParams { p, q, lambda_cap: lam_cap, lambda, c4, c5, f_norm: fnorm };
                assert_eq!(f_value(r, &fp) > 0.0, positive, "Λ={lam_cap} scale={scale}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(lambda1_threshold(2.0, 1.5, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(lambda1_threshold(2.0, 3.0, 0.5, 1.0, 1.0, 1.0).is_err());
        assert!(lambda1_threshold(2.0, 3.0, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(r0_printed(2.0, 3.0, 1.0, -1.0, 1.0).is_err());
    }
}
