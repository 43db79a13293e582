//! Hermite polynomials and oscillator eigenfunctions.
//!
//! φ_n(ξ) = (2ⁿ n!)^(−1/2) (s²/π)^(1/4) e^(−ξ²/2) H_n(ξ), with s = √(mω/ħ)
//! the oscillator scale. Physicists' convention: H_{n+1} = 2ξH_n − 2nH_{n−1}.
//! φ_n is normalized against the physical coordinate, ∫ φ_n(s·u)² du = 1.
//!
//! The eigenfunction evaluation never forms a raw H_n: the Gaussian is folded
//! into the recurrence from the start (h_{k+1} = √(2/(k+1)) ξ h_k −
//! √(k/(k+1)) h_{k−1}), which keeps every intermediate bounded by the
//! prefactor and sidesteps the 0·∞ cancellation that kills the naive product
//! for n ≳ 30.

use crate::error::{Error, Result};

/// Highest level accepted by the evaluation routines.
pub const N_MAX_EVAL: usize = 64;
/// Highest level exercised by the Fourier pair checks.
pub const N_MAX_FOURIER: usize = 12;

fn check_level(n: usize) -> Result<()> {
    if n > N_MAX_EVAL {
        return Err(Error::LevelRange { n, max: N_MAX_EVAL });
    }
    Ok(())
}

/// H_n(x) by upward three-term recurrence. Grows like (2x)ⁿ for large |x|;
/// callers needing the bounded object want `hermite_function`.
pub fn hermite_poly(n: usize, x: f64) -> Result<f64> {
    check_level(n)?;
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("hermite_poly argument {x}")));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * (k as f64) * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// φ_n(ξ) with prefactor (scale²/π)^(1/4); `scale` is s = √(mω/ħ).
pub fn hermite_function(n: usize, xi: f64, scale: f64) -> Result<f64> {
    check_level(n)?;
    if !xi.is_finite() {
        return Err(Error::NonFinite(format!("hermite_function argument {xi}")));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidParams(format!(
            "oscillator scale must be finite and > 0, got {scale}"
        )));
    }
    Ok(hermite_function_unchecked(n, xi, scale))
}

/// Hot-path variant: callers have validated n, ξ, and scale up front.
pub(crate) fn hermite_function_unchecked(n: usize, xi: f64, scale: f64) -> f64 {
    let h0 = (scale * scale / std::f64::consts::PI).powf(0.25) * (-0.5 * xi * xi).exp();
    if n == 0 {
        return h0;
    }
    let mut prev = h0;
    let mut cur = std::f64::consts::SQRT_2 * xi * h0;
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * xi * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// dφ_n/dξ from the ladder identity φ_n' = √(n/2) φ_{n−1} − √((n+1)/2) φ_{n+1}.
pub fn hermite_function_deriv(n: usize, xi: f64, scale: f64) -> Result<f64> {
    let up = if n + 1 <= N_MAX_EVAL {
        hermite_function(n + 1, xi, scale)?
    } else {
        // One-past-the-top slot: fall back to the defining relation
        // φ' = (√(2n) φ_{n−1} − ξ φ_n) ... not needed below N_MAX_EVAL.
        return Err(Error::LevelRange { n: n + 1, max: N_MAX_EVAL });
    };
    let down = if n == 0 { 0.0 } else { hermite_function(n - 1, xi, scale)? };
    Ok((0.5 * n as f64).sqrt() * down - (0.5 * (n as f64 + 1.0)).sqrt() * up)
}
