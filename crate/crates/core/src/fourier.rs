//! Momentum-space consistency of the envelope functions.
//!
//! With the transform convention F{f}(k) = (2π)^(−1/2) ∫ e^{+ikξ} f(ξ) dξ,
//! the Hermite functions are eigenvectors: F{φ_n} = iⁿ φ_n, and a drift
//! phase shifts the image, F{e^{iaξ} φ_n(ξ)}(k) = iⁿ φ_n(k + a). This is the
//! momentum-space face of the drifting families: position envelope displaced
//! by the drift offset ⇔ momentum envelope displaced the opposite way.
//!
//! The check samples the left side on a uniform ξ grid, takes the continuous
//! transform through an FFT (an unnormalized inverse FFT supplies the
//! e^{+ikξ} kernel; the ξ_min phase ramp and Δξ/√2π weight restore the
//! integral), and compares against the closed-form right side on the FFT's
//! own wavenumber ladder.

use crate::deriv::wavenumbers;
use crate::error::{Error, Result};
use crate::hermite::{hermite_function, N_MAX_FOURIER};
use num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Debug, Clone, Copy)]
pub struct FourierCheck {
    /// ‖F − iⁿφ_n(·+a)‖₂ / ‖φ_n‖₂ on the wavenumber ladder.
    pub residual_l2: f64,
    /// max_j |F(k_j) − iⁿφ_n(k_j+a)|, unnormalized.
    pub residual_max: f64,
    pub grid_points: usize,
}

/// Verify F{e^{iaξ}φ_n} = iⁿφ_n(·+a) on `num_points` samples of |ξ| ≤
/// `half_width`. The window must swallow both the position envelope and the
/// displaced momentum envelope; √(2n+1)+8 puts the edge below 1e−14 of peak.
pub fn fourier_pair_check(
    n: usize,
    a: f64,
    num_points: usize,
    half_width: f64,
) -> Result<FourierCheck> {
    if n > N_MAX_FOURIER {
        return Err(Error::LevelRange { n, max: N_MAX_FOURIER });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite(format!("drift offset {a}")));
    }
    if num_points < 64 {
        return Err(Error::InvalidParams(format!(
            "fourier check needs at least 64 samples, got {num_points}"
        )));
    }
    let needed = (2.0 * n as f64 + 1.0).sqrt() + 8.0 + a.abs();
    if half_width < needed {
        return Err(Error::InvalidParams(format!(
            "window half-width {half_width} too small for n={n}, a={a}; need ≥ {needed:.1}"
        )));
    }

    let n_pts = num_points;
    let dxi = 2.0 * half_width / n_pts as f64;
    let xi_min = -half_width;
    let mut buf: Vec<Complex64> = (0..n_pts)
        .map(|m| {
            let xi = xi_min + m as f64 * dxi;
            Complex64::from_polar(hermite_function(n, xi, 1.0).expect("level checked"), a * xi)
        })
        .collect();

    // Unnormalized inverse FFT: G_j = Σ_m e^{+2πi jm/N} f_m, so that
    // F(k_j) = (Δξ/√2π) e^{ik_j ξ_min} G_j with k_j = 2πf_j/(NΔξ).
    FftPlanner::new().plan_fft_inverse(n_pts).process(&mut buf);

    let ks = wavenumbers(n_pts, 2.0 * half_width);
    let weight = dxi / (2.0 * std::f64::consts::PI).sqrt();
    let i_pow_n = Complex64::i().powu(n as u32);

    let mut diff_sq = 0.0;
    let mut ref_sq = 0.0;
    let mut worst = 0.0f64;
    for (j, g) in buf.iter().enumerate() {
        let k = ks[j];
        let f_num = weight * Complex64::from_polar(1.0, k * xi_min) * g;
        let target = if (k + a).abs() < 40.0 {
            i_pow_n * hermite_function(n, k + a, 1.0).expect("level checked")
        } else {
            Complex64::new(0.0, 0.0) // beyond double-precision support
        };
        let d = (f_num - target).norm_sqr();
        diff_sq += d;
        ref_sq += target.norm_sqr();
        worst = worst.max(d.sqrt());
    }
    if ref_sq == 0.0 {
        return Err(Error::InvalidParams(
            "momentum-space reference vanished on the entire ladder".into(),
        ));
    }
    Ok(FourierCheck {
        residual_l2: (diff_sq / ref_sq).sqrt(),
        residual_max: worst,
        grid_points: n_pts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_hold_through_n3_with_drift() {
        for n in 0..=3 {
            for a in [0.0, 0.25, 1.0] {
                let c = fourier_pair_check(n, a, 4096, 14.0).unwrap();
                assert!(
                    c.residual_l2 < 1e-12,
                    "n={n} a={a}: residual {}",
                    c.residual_l2
                );
                assert!(c.residual_max < 1e-12, "n={n} a={a}: max {}", c.residual_max);
            }
        }
    }

    #[test]
    fn phase_factor_is_not_optional() {
        // Dropping iⁿ (i.e. comparing n=2's transform against +φ₂) must fail
        // loudly; guards against regressing to the unphased identity.
        let c = fourier_pair_check(2, 0.0, 2048, 14.0).unwrap();
        assert!(c.residual_l2 < 1e-12);
        // Reconstruct the naive comparison: F = −φ₂ for n=2, so the distance
        // between F and +φ₂ is 2‖φ₂‖ in L2, residual 2.
        let dxi = 28.0 / 2048.0;
        let mut buf: Vec<Complex64> = (0..2048)
            .map(|m| {
                let xi = -14.0 + m as f64 * dxi;
                Complex64::new(hermite_function(2, xi, 1.0).unwrap(), 0.0)
            })
            .collect();
        rustfft::FftPlanner::new().plan_fft_inverse(2048).process(&mut buf);
        let ks = wavenumbers(2048, 28.0);
        let w = dxi / (2.0 * std::f64::consts::PI).sqrt();
        let mut diff_sq = 0.0;
        let mut ref_sq = 0.0;
        for (j, g) in buf.iter().enumerate() {
            let f = w * Complex64::from_polar(1.0, ks[j] * -14.0) * g;
            let naive = Complex64::new(hermite_function(2, ks[j], 1.0).unwrap(), 0.0);
            diff_sq += (f - naive).norm_sqr();
            ref_sq += naive.norm_sqr();
        }
        let naive_residual = (diff_sq / ref_sq).sqrt();
        assert!(
            (naive_residual - 2.0).abs() < 1e-6,
            "unphased comparison should miss by the full diameter, got {naive_residual}"
        );
    }

    #[test]
    fn matches_direct_quadrature() {
        // Independent O(N²) evaluation of the same Riemann sum at a few
        // wavenumbers, compared to the closed form.
        let (n, a) = (3, 0.7);
        let n_pts = 1024;
        let dxi = 28.0 / n_pts as f64;
        for k in [0.0, 0.45, -1.3, 2.0] {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..n_pts {
                let xi = -14.0 + m as f64 * dxi;
                acc += Complex64::from_polar(hermite_function(n, xi, 1.0).unwrap(), a * xi)
                    * Complex64::from_polar(1.0, k * xi);
            }
            let f = acc * dxi / (2.0 * std::f64::consts::PI).sqrt();
            let target = Complex64::i().powu(n as u32)
                * hermite_function(n, k + a, 1.0).unwrap();
            assert!(
                (f - target).norm() < 1e-10,
                "direct sum at k={k}: {} vs {}",
                f,
                target
            );
        }
    }

    #[test]
    fn rejects_undersized_windows() {
        assert!(matches!(
            fourier_pair_check(13, 0.0, 4096, 20.0),
            Err(Error::LevelRange { .. })
        ));
        assert!(fourier_pair_check(3, 0.0, 4096, 5.0).is_err());
        assert!(fourier_pair_check(3, 0.0, 32, 14.0).is_err());
    }
}
