//! Closed-form solutions for a charged particle in crossed constant fields.
//!
//! Gauge: vector potential (−B·y, 0, 0), scalar potential −ℰ·y, so
//! Ĥ = (1/2m)[(p̂ₓ + mω_c y)² + p̂_y²] − qℰy with ω_c = qB/(mc).
//! Five families, all exact solutions of iħ∂ₜψ = Ĥψ for ω_c > 0:
//!
//! * `psi` — Hermite envelope in y centered at y₀ + δy, plane wave in x.
//!   Energy eigenstate: E = ħω_c(n+½) − ½mv_d² − qℰδy.
//! * `psi-bar` — envelope in x drifting at v_d, y enters only through a
//!   position-dependent phase. Phase frequency E' = ħω_c(n+½) − ½mv_d².
//! * `zeta` — `psi` at δy = 0: y-envelope at y₀, constant along x. The only
//!   family that is exactly periodic on any rectangle.
//! * `zeta-bar` — `psi-bar` at δx = 0.
//! * `ground` — `zeta-bar` at n = 0 translated by (δx, δt); the family whose
//!   translations feed the Hall-response quantization checks.
//!
//! The drifting families are not Ĥ eigenstates: their window-averaged energy
//! (y-window centered on 0) exceeds the phase frequency by m·v_d².

use crate::error::{Error, Result};
use crate::grid::{Axis2, GridSpec, SampledState};
use crate::hermite::{hermite_function_unchecked as phi_n, N_MAX_EVAL};
use crate::params::{DriftConstants, PhysicalParams};
use num_complex::Complex64;

/// Envelope support margin in oscillator units beyond the classical turning
/// point √(2n+1); amplitude there is below e^{−32} of peak.
pub const CONTAINMENT_XI: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// y-envelope, x plane wave; offsets: δy.
    Psi,
    /// x-envelope drifting at v_d; offsets: δx.
    PsiBar,
    /// y-envelope at y₀, constant in x; no offsets.
    Zeta,
    /// x-envelope through the origin; no offsets.
    ZetaBar,
    /// n = 0 `zeta-bar` translated by (δx, δt).
    Ground,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::Psi => "psi",
            Family::PsiBar => "psi-bar",
            Family::Zeta => "zeta",
            Family::ZetaBar => "zeta-bar",
            Family::Ground => "ground",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s {
            "psi" => Ok(Family::Psi),
            "psi-bar" => Ok(Family::PsiBar),
            "zeta" => Ok(Family::Zeta),
            "zeta-bar" => Ok(Family::ZetaBar),
            "ground" => Ok(Family::Ground),
            other => Err(Error::InvalidParams(format!(
                "unknown state family `{other}` (expected psi, psi-bar, zeta, zeta-bar, ground)"
            ))),
        }
    }

    /// Axis along which the Hermite envelope decays.
    pub fn compact_axis(self) -> Axis2 {
        match self {
            Family::Psi | Family::Zeta => Axis2::Y,
            Family::PsiBar | Family::ZetaBar | Family::Ground => Axis2::X,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One member of a closed-form family: level, family, and the offsets the
/// family admits. Construct through the named constructors; `validate`
/// rejects offsets a family does not carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticState {
    pub family: Family,
    pub n: usize,
    pub offset_x: f64,
    pub offset_y: f64,
    pub offset_t: f64,
}

impl AnalyticState {
    pub fn psi(n: usize, offset_y: f64) -> Self {
        Self { family: Family::Psi, n, offset_x: 0.0, offset_y, offset_t: 0.0 }
    }

    pub fn psi_bar(n: usize, offset_x: f64) -> Self {
        Self { family: Family::PsiBar, n, offset_x, offset_y: 0.0, offset_t: 0.0 }
    }

    pub fn zeta(n: usize) -> Self {
        Self { family: Family::Zeta, n, offset_x: 0.0, offset_y: 0.0, offset_t: 0.0 }
    }

    pub fn zeta_bar(n: usize) -> Self {
        Self { family: Family::ZetaBar, n, offset_x: 0.0, offset_y: 0.0, offset_t: 0.0 }
    }

    pub fn ground(offset_x: f64, offset_t: f64) -> Self {
        Self { family: Family::Ground, n: 0, offset_x, offset_y: 0.0, offset_t }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n > N_MAX_EVAL {
            return Err(Error::LevelRange { n: self.n, max: N_MAX_EVAL });
        }
        let reject = |name: &str, v: f64| -> Result<()> {
            if v != 0.0 {
                Err(Error::UnsupportedOffset {
                    family: self.family.label().to_string(),
                    offset: format!("{name} = {v}"),
                })
            } else {
                Ok(())
            }
        };
        for v in [self.offset_x, self.offset_y, self.offset_t] {
            if !v.is_finite() {
                return Err(Error::NonFinite("state offset".into()));
            }
        }
        match self.family {
            Family::Psi => {
                reject("offset_x", self.offset_x)?;
                reject("offset_t", self.offset_t)
            }
            Family::PsiBar => {
                reject("offset_y", self.offset_y)?;
                reject("offset_t", self.offset_t)
            }
            Family::Zeta | Family::ZetaBar => {
                reject("offset_x", self.offset_x)?;
                reject("offset_y", self.offset_y)?;
                reject("offset_t", self.offset_t)
            }
            Family::Ground => {
                if self.n != 0 {
                    return Err(Error::LevelRange { n: self.n, max: 0 });
                }
                reject("offset_y", self.offset_y)
            }
        }
    }

    /// Frequency of the global phase: the energy eigenvalue for `psi`/`zeta`,
    /// and the phase-rotation rate E' for the drifting families.
    pub fn phase_energy(&self, p: &PhysicalParams) -> Result<f64> {
        self.validate()?;
        let wc = p.omega_c_positive()?;
        let drift = DriftConstants::derive(p)?;
        let base = p.hbar * wc * (self.n as f64 + 0.5) - 0.5 * p.mass * drift.v_d * drift.v_d;
        Ok(match self.family {
            Family::Psi => base - p.charge * p.field_e * self.offset_y,
            _ => base,
        })
    }

    /// Window-averaged ⟨Ĥ⟩. Equals `phase_energy` for the stationary
    /// families; the drifting families add the full m·v_d² (computed with the
    /// y-window centered on 0, where the −qℰy term averages out).
    pub fn mean_energy(&self, p: &PhysicalParams) -> Result<f64> {
        let e = self.phase_energy(p)?;
        let drift = DriftConstants::derive(p)?;
        Ok(match self.family {
            Family::Psi | Family::Zeta => e,
            Family::PsiBar | Family::ZetaBar | Family::Ground => {
                e + p.mass * drift.v_d * drift.v_d
            }
        })
    }

    /// Center of the Hermite envelope along the compact axis at time `t`.
    pub fn envelope_center(&self, p: &PhysicalParams, t: f64) -> Result<(Axis2, f64)> {
        self.validate()?;
        let drift = DriftConstants::derive(p)?;
        Ok(match self.family {
            Family::Psi => (Axis2::Y, self.offset_y + drift.y_0),
            Family::Zeta => (Axis2::Y, drift.y_0),
            Family::PsiBar => (Axis2::X, self.offset_x + drift.v_d * t),
            Family::ZetaBar => (Axis2::X, drift.v_d * t),
            Family::Ground => (Axis2::X, self.offset_x + drift.v_d * (t - self.offset_t)),
        })
    }

    /// Half-width of envelope support: classical turning point plus the
    /// containment margin, in physical units.
    pub fn support_half_width(&self, p: &PhysicalParams) -> Result<f64> {
        let s = p.oscillator_scale()?;
        Ok(((2.0 * self.n as f64 + 1.0).sqrt() + CONTAINMENT_XI) / s)
    }

    pub fn evaluator(&self, p: &PhysicalParams) -> Result<StateEvaluator> {
        self.validate()?;
        p.validate()?;
        let wc = p.omega_c_positive()?;
        let drift = DriftConstants::derive(p)?;
        Ok(StateEvaluator {
            state: *self,
            scale: p.oscillator_scale()?,
            omega_m_over_h: p.mass * wc / p.hbar,
            qe_over_h: p.charge * p.field_e / p.hbar,
            boost: p.mass * drift.v_d / p.hbar,
            phase_energy_over_h: self.phase_energy(p)? / p.hbar,
            v_d: drift.v_d,
            y_0: drift.y_0,
        })
    }

    /// Pointwise amplitude; convenience wrapper over [`Self::evaluator`].
    pub fn amplitude(&self, p: &PhysicalParams, x: f64, y: f64, t: f64) -> Result<Complex64> {
        Ok(self.evaluator(p)?.eval(x, y, t))
    }

    /// Sample onto a grid at time `t`. The compact-axis envelope must sit
    /// inside the window with its containment margin; extended axes carry no
    /// such requirement.
    pub fn sample(&self, p: &PhysicalParams, grid: &GridSpec, t: f64) -> Result<SampledState> {
        let ev = self.evaluator(p)?;
        let (axis, center) = self.envelope_center(p, t)?;
        let half = self.support_half_width(p)?;
        if !grid.contains_with_margin(axis, center, half) {
            return Err(Error::InvalidGrid(format!(
                "{} envelope needs {} ∈ [{:.4}, {:.4}] inside the grid window; \
                 recenter the {} axis",
                self.family,
                axis.label(),
                center - half,
                center + half,
                axis.label(),
            )));
        }
        SampledState::from_fn(*grid, *p, t, |x, y| ev.eval(x, y, t))
    }
}

/// Precomputed per-state constants for the pointwise formulas; the hot path
/// of grid sampling.
#[derive(Debug, Clone, Copy)]
pub struct StateEvaluator {
    state: AnalyticState,
    scale: f64,
    /// mω_c/ħ — wavenumber per unit transverse offset.
    omega_m_over_h: f64,
    /// qℰ/ħ.
    qe_over_h: f64,
    /// mv_d/ħ — drift momentum boost.
    boost: f64,
    phase_energy_over_h: f64,
    v_d: f64,
    y_0: f64,
}

impl StateEvaluator {
    pub fn eval(&self, x: f64, y: f64, t: f64) -> Complex64 {
        let st = &self.state;
        match st.family {
            Family::Psi => {
                let phase = -self.phase_energy_over_h * t - self.omega_m_over_h * st.offset_y * x;
                let env = phi_n(
                    st.n,
                    self.scale * (y - st.offset_y - self.y_0),
                    self.scale,
                );
                Complex64::from_polar(env, phase)
            }
            Family::Zeta => {
                let env = phi_n(st.n, self.scale * (y - self.y_0), self.scale);
                Complex64::from_polar(env, -self.phase_energy_over_h * t)
            }
            Family::PsiBar | Family::ZetaBar => self.eval_drifting(st.n, x - st.offset_x, y, t),
            Family::Ground => self.eval_drifting(0, x - st.offset_x, y, t - st.offset_t),
        }
    }

    /// Shared body of the x-envelope families in shifted coordinates:
    /// phase −E't/ħ − (mω_c/ħ)uy + (qℰ/ħ)ty + (mv_d/ħ)w, envelope φ_n(s·w)
    /// with w = u − v_d t.
    fn eval_drifting(&self, n: usize, u: f64, y: f64, t: f64) -> Complex64 {
        let w = u - self.v_d * t;
        let phase = -self.phase_energy_over_h * t - self.omega_m_over_h * u * y
            + self.qe_over_h * t * y
            + self.boost * w;
        Complex64::from_polar(phi_n(n, self.scale * w, self.scale), phase)
    }

    /// Drift-frame factor of the x-envelope families with the y-dependent
    /// phase stripped: the exact 1-D reduction used by the tracking
    /// propagator. Only meaningful for `psi-bar`/`zeta-bar`/`ground`.
    pub fn eval_reduced(&self, x: f64, t: f64) -> Complex64 {
        let st = &self.state;
        let (u, tt) = match st.family {
            Family::Ground => (x - st.offset_x, t - st.offset_t),
            _ => (x - st.offset_x, t),
        };
        let w = u - self.v_d * tt;
        let phase = -self.phase_energy_over_h * tt + self.boost * w;
        Complex64::from_polar(phi_n(st.n, self.scale * w, self.scale), phase)
    }
}
