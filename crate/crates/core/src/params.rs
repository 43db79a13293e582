//! Physical parameters for a charge in crossed constant fields.
//!
//! Geometry is fixed throughout the crate: magnetic field B ẑ, electric field
//! ℰ ŷ, Landau gauge A = B(−y, 0, 0). Everything downstream is phrased in
//! terms of the cyclotron frequency ω_c = qB/(mc) and the drift constants
//!
//!   v_d = qℰ/(mω_c) = cℰ/B      drift velocity along x̂
//!   y_0 = qℰ/(mω_c²)            envelope displacement along ŷ
//!   a   = y_0·√(mω_c/ħ)         dimensionless Fourier shift
//!
//! All three vanish with ℰ. Gaussian units; the shipped configs use the
//! natural system m = q = c = ħ = 1.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub mass: f64,
    pub charge: f64,
    pub light_speed: f64,
    pub hbar: f64,
    pub field_b: f64,
    pub field_e: f64,
}

impl PhysicalParams {
    /// Natural units m = q = c = ħ = 1 with the given field strengths.
    pub fn natural(field_b: f64, field_e: f64) -> Self {
        Self {
            mass: 1.0,
            charge: 1.0,
            light_speed: 1.0,
            hbar: 1.0,
            field_b,
            field_e,
        }
    }

    /// m > 0, ħ > 0, c > 0, B ≠ 0; ℰ ≥ 0 (ℰ = 0 is the pure-magnetic limit).
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.mass,
            self.charge,
            self.light_speed,
            self.hbar,
            self.field_b,
            self.field_e,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("physical parameter".into()));
        }
        if self.mass <= 0.0 {
            return Err(Error::InvalidParams(format!("mass must be > 0, got {}", self.mass)));
        }
        if self.hbar <= 0.0 {
            return Err(Error::InvalidParams(format!("hbar must be > 0, got {}", self.hbar)));
        }
        if self.light_speed <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "light_speed must be > 0, got {}",
                self.light_speed
            )));
        }
        if self.field_b == 0.0 {
            return Err(Error::DegenerateField(
                "field_b = 0 leaves no cyclotron frequency".into(),
            ));
        }
        if self.field_e < 0.0 {
            return Err(Error::InvalidParams(format!(
                "field_e must be >= 0, got {}",
                self.field_e
            )));
        }
        Ok(())
    }

    /// Signed cyclotron frequency ω_c = qB/(mc).
    pub fn omega_c(&self) -> f64 {
        self.charge * self.field_b / (self.mass * self.light_speed)
    }

    /// ω_c, guaranteed positive. The analytic families are built on the
    /// oscillator scale √(mω_c/ħ), which only exists for qB > 0.
    pub fn omega_c_positive(&self) -> Result<f64> {
        let w = self.omega_c();
        if w <= 0.0 {
            return Err(Error::DegenerateField(format!(
                "state evaluation needs q·B > 0 (omega_c = {w:.3e})"
            )));
        }
        Ok(w)
    }

    /// Magnetic length ℓ = √(ħ/(m|ω_c|)).
    pub fn magnetic_length(&self) -> Result<f64> {
        let w = self.omega_c();
        if w == 0.0 {
            return Err(Error::DegenerateField("omega_c = 0 has no magnetic length".into()));
        }
        Ok((self.hbar / (self.mass * w.abs())).sqrt())
    }

    /// Oscillator scale s = √(mω_c/ħ) = 1/ℓ; errors when ω_c ≤ 0.
    pub fn oscillator_scale(&self) -> Result<f64> {
        let w = self.omega_c_positive()?;
        Ok((self.mass * w / self.hbar).sqrt())
    }

    /// Cyclotron period T = 2π/|ω_c|.
    pub fn cyclotron_period(&self) -> Result<f64> {
        let w = self.omega_c();
        if w == 0.0 {
            return Err(Error::DegenerateField("omega_c = 0 has no cyclotron period".into()));
        }
        Ok(std::f64::consts::TAU / w.abs())
    }
}

/// The three ℰ-induced constants. `derive` is the only constructor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftConstants {
    pub v_d: f64,
    pub y_0: f64,
    pub a: f64,
}

impl DriftConstants {
    pub fn derive(params: &PhysicalParams) -> Result<Self> {
        params.validate()?;
        let w = params.omega_c();
        let v_d = params.charge * params.field_e / (params.mass * w);
        let y_0 = params.charge * params.field_e / (params.mass * w * w);
        // a needs the oscillator scale; at ℰ = 0 it is exactly 0 for either
        // field sign, so only the ℰ > 0, ω_c < 0 corner is rejected.
        let a = if params.field_e == 0.0 {
            0.0
        } else {
            y_0 * params.oscillator_scale()?
        };
        Ok(Self { v_d, y_0, a })
    }
}
