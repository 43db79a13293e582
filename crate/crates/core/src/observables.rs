//! Gauge-aware probability current and the transport ratios built on it.
//!
//! * J = (qħ/m)·Im(Ψ*∇Ψ) − (q²/mc)·A·|Ψ|² with A = B(−y, 0), so the gauge
//!   piece feeds only the x-component, as +q·ω_c·y·|Ψ|².
//! * Every drifting family member carries the same closed-form current:
//!   j_x = q·v_d·|Ψ|² and j_y = −q·ω_c·(x − x_c(t))·|Ψ|², with x_c the
//!   envelope center. The paramagnetic −q·ω_c·y·|Ψ|² in j_x cancels the
//!   gauge term pointwise; dropping the gauge term is the classic sign of a
//!   broken current implementation and is kept reachable as a negative
//!   control through `current_density(…, false)`.
//! * A rectangular cell of size δx × δy, translated onto itself, fixes the
//!   transverse ratio ρ_H = m·ω_c·δx·δy/q². Its ratio to 2πħ/q² is the
//!   winding number of the translation phase, so integer cells return the
//!   state to itself up to no phase at all — `translation_invariance`
//!   measures that return, `quantization_scan` walks a ladder of cells.
//! * The longitudinal ratio ℰ/(q·ω_c·z·|φ_n(s·z)|²) diverges on the
//!   envelope-center worldline z = 0; that pole is reported as
//!   `Error::Singular`, never clamped.

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::deriv::{fd_derivative, fornberg_weights, spectral_derivative};
use crate::error::{Error, Result};
use crate::grid::{Axis2, GridSpec, Mask, SampledState};
use crate::hermite::hermite_function;
use crate::ops::{
    detect_method, extract_global_phase, methods_mask, roll_overlap_mask, unitary_translate,
    DerivativeMethod, TimeIndexedState,
};
use crate::params::{DriftConstants, PhysicalParams};
use crate::states::AnalyticState;

/// Density cut for `support_mask`, relative to the peak: comparisons stay on
/// points where the state actually lives, so stencil tails at κh ≈ 1 near the
/// window edge cannot dominate a max-norm defect.
pub const SUPPORT_REL_THRESHOLD: f64 = 1e-8;

/// Half-width of the time stencil in `continuity_residual`, as a fraction of
/// the cyclotronron period.
const CONTINUITY_DT_FRACTION: f64 = 1e-4;

/// Step of the pointwise ∂ₓΨ stencil in `hall_resistivity_quadrature`, in
/// units of the magnetic length.
const QUADRATURE_FD_STEP_LENGTHS: f64 = 1e-2;
const QUADRATURE_FD_RADIUS: usize = 4;

/// Probability current sampled on the grid, with the seam mask under which
/// the components are trustworthy and the derivative methods that made them.
#[derive(Debug, Clone)]
pub struct CurrentField {
    pub j_x: Array2<f64>,
    pub j_y: Array2<f64>,
    pub mask: Mask,
    pub method_x: DerivativeMethod,
    pub method_y: DerivativeMethod,
}

fn derivative_of(
    arr: &Array2<Complex64>,
    axis: Axis2,
    grid: &GridSpec,
    method: DerivativeMethod,
) -> Result<Array2<Complex64>> {
    Ok(match method {
        DerivativeMethod::Spectral => spectral_derivative(arr, axis, grid.extent(axis), 1),
        DerivativeMethod::Stencil { radius } => {
            fd_derivative(arr, axis, grid.step(axis), 1, radius, true)?
        }
    })
}

/// J on the grid. `include_gauge_term = false` drops the −(q²/mc)·A·|Ψ|²
/// piece and is only useful as a negative control: the result is not gauge
/// covariant and misses the entire diamagnetic circulation.
pub fn current_density(s: &SampledState, include_gauge_term: bool) -> Result<CurrentField> {
    let p = &s.params;
    let method_x = detect_method(s, Axis2::X)?;
    let method_y = detect_method(s, Axis2::Y)?;
    let grad_x = derivative_of(&s.amplitudes, Axis2::X, &s.grid, method_x)?;
    let grad_y = derivative_of(&s.amplitudes, Axis2::Y, &s.grid, method_y)?;

    let coef = p.charge * p.hbar / p.mass;
    let mut j_x = Array2::<f64>::zeros(s.amplitudes.dim());
    let mut j_y = Array2::<f64>::zeros(s.amplitudes.dim());
    Zip::from(&mut j_x)
        .and(&s.amplitudes)
        .and(&grad_x)
        .for_each(|j, a, d| *j = coef * (a.conj() * d).im);
    Zip::from(&mut j_y)
        .and(&s.amplitudes)
        .and(&grad_y)
        .for_each(|j, a, d| *j = coef * (a.conj() * d).im);

    if include_gauge_term {
        let q_wc = p.charge * p.omega_c();
        let ys = s.grid.ys();
        Zip::indexed(&mut j_x).and(&s.amplitudes).for_each(|(_, iy), j, a| {
            *j += q_wc * ys[iy] * a.norm_sqr();
        });
    }

    Ok(CurrentField { j_x, j_y, mask: methods_mask(method_x, method_y), method_x, method_y })
}

/// The exact current of an x-localized drifting member on the same grid:
/// j_x = q·v_d·|Ψ|², j_y = −q·ω_c·(x − x_c(t))·|Ψ|².
pub fn drift_current_closed_form(
    state: &AnalyticState,
    p: &PhysicalParams,
    grid: &GridSpec,
    t: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (axis, center) = state.envelope_center(p, t)?;
    if axis != Axis2::X {
        return Err(Error::InvalidParams(
            "closed-form current needs an x-localized drifting state".into(),
        ));
    }
    let drift = DriftConstants::derive(p)?;
    let sampled = state.sample(p, grid, t)?;
    let q_vd = p.charge * drift.v_d;
    let q_wc = p.charge * p.omega_c();
    let xs = grid.xs();

    let mut j_x = Array2::<f64>::zeros(sampled.amplitudes.dim());
    let mut j_y = Array2::<f64>::zeros(sampled.amplitudes.dim());
    Zip::indexed(&mut j_x).and(&mut j_y).and(&sampled.amplitudes).for_each(
        |(ix, _), jx, jy, a| {
            let dens = a.norm_sqr();
            *jx = q_vd * dens;
            *jy = -q_wc * (xs[ix] - center) * dens;
        },
    );
    Ok((j_x, j_y))
}

/// Points carrying at least `rel_threshold` of the peak density.
pub fn support_mask(s: &SampledState, rel_threshold: f64) -> Array2<bool> {
    let peak = s.amplitudes.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    let cut = rel_threshold * peak;
    s.amplitudes.mapv(|a| a.norm_sqr() > cut)
}

/// Max-norm defect between two real fields, confined to the support and to
/// the seam-free interior, normalized by the reference's scale there.
pub fn max_component_defect(
    numeric: &Array2<f64>,
    reference: &Array2<f64>,
    support: &Array2<bool>,
    mask: Mask,
) -> Result<f64> {
    if numeric.dim() != reference.dim() || numeric.dim() != support.dim() {
        return Err(Error::InvalidGrid(format!(
            "field comparison needs matching shapes, got {:?}, {:?}, {:?}",
            numeric.dim(),
            reference.dim(),
            support.dim()
        )));
    }
    let (n_x, n_y) = numeric.dim();
    if 2 * mask.x >= n_x || 2 * mask.y >= n_y {
        return Err(Error::EmptyMask(format!(
            "seam mask ({}, {}) swallows the {n_x}×{n_y} window",
            mask.x, mask.y
        )));
    }
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    let mut kept = 0_usize;
    for ix in mask.x..n_x - mask.x {
        for iy in mask.y..n_y - mask.y {
            if !support[(ix, iy)] {
                continue;
            }
            kept += 1;
            scale = scale.max(reference[(ix, iy)].abs());
            worst = worst.max((numeric[(ix, iy)] - reference[(ix, iy)]).abs());
        }
    }
    if kept == 0 {
        return Err(Error::EmptyMask("no grid points survive the support and seam masks".into()));
    }
    if scale == 0.0 {
        return Err(Error::Singular("reference field vanishes on the comparison region".into()));
    }
    Ok(worst / scale)
}

/// Current-weighted mean velocity (∫J dA)/(q ∫|Ψ|² dA) over the seam-free
/// interior. Every drifting family member returns (v_d, 0) regardless of
/// level or offsets.
pub fn mean_velocity(current: &CurrentField, s: &SampledState) -> Result<(f64, f64)> {
    let (n_x, n_y) = s.amplitudes.dim();
    if current.j_x.dim() != (n_x, n_y) {
        return Err(Error::InvalidGrid("current field does not match the state's grid".into()));
    }
    let mask = current.mask;
    if 2 * mask.x >= n_x || 2 * mask.y >= n_y {
        return Err(Error::EmptyMask(format!(
            "seam mask ({}, {}) swallows the {n_x}×{n_y} window",
            mask.x, mask.y
        )));
    }
    let (mut sum_x, mut sum_y, mut sum_rho) = (0.0, 0.0, 0.0);
    for ix in mask.x..n_x - mask.x {
        for iy in mask.y..n_y - mask.y {
            sum_x += current.j_x[(ix, iy)];
            sum_y += current.j_y[(ix, iy)];
            sum_rho += s.amplitudes[(ix, iy)].norm_sqr();
        }
    }
    let charge_mass = s.params.charge * sum_rho;
    if charge_mass.abs() < f64::EPSILON {
        return Err(Error::Singular("no probability mass inside the comparison window".into()));
    }
    Ok((sum_x / charge_mass, sum_y / charge_mass))
}

/// 2πħ/q², the natural unit of the transverse ratio.
pub fn klitzing_scale(p: &PhysicalParams) -> f64 {
    TAU * p.hbar / (p.charge * p.charge)
}

/// Cell-averaged transverse ratio ρ_H = m·ω_c·δx·δy/q² for a δx × δy cell.
pub fn hall_resistivity(p: &PhysicalParams, delta_x: f64, delta_y: f64) -> Result<f64> {
    if !delta_x.is_finite() || !delta_y.is_finite() {
        return Err(Error::NonFinite(format!("cell ({delta_x}, {delta_y})")));
    }
    Ok(p.mass * p.omega_c() * delta_x * delta_y / (p.charge * p.charge))
}

/// Winding numbers of a translation cell: the x-offset winds
/// l = m·ω_c·δx·δy/2πħ, the time offset winds k = q·ℰ·δt·δy/2πħ.
pub fn cell_windings(p: &PhysicalParams, delta_x: f64, delta_t: f64, delta_y: f64) -> (f64, f64) {
    let l = p.mass * p.omega_c() * delta_x * delta_y / (TAU * p.hbar);
    let k = p.charge * p.field_e * delta_t * delta_y / (TAU * p.hbar);
    (l, k)
}

/// The (δx, δt) offsets that wind a δy-cell exactly (l, k) times, i.e. pin
/// ρ_H/(2πħ/q²) = l. A nonzero k needs a drive field to wind against.
pub fn hall_cell_offsets(
    p: &PhysicalParams,
    l: u32,
    k: u32,
    delta_y: f64,
) -> Result<(f64, f64)> {
    let wc = p.omega_c();
    if wc == 0.0 || delta_y == 0.0 || !delta_y.is_finite() {
        return Err(Error::DegenerateField(format!(
            "cell offsets need omega_c != 0 and a finite nonzero delta_y (got {wc:.3e}, {delta_y})"
        )));
    }
    let delta_x = TAU * p.hbar * f64::from(l) / (p.mass * wc * delta_y);
    let delta_t = if k == 0 {
        0.0
    } else {
        if p.field_e == 0.0 {
            return Err(Error::DegenerateField(
                "a nonzero time winding needs a nonzero electric field".into(),
            ));
        }
        TAU * p.hbar * f64::from(k) / (p.charge * p.field_e * delta_y)
    };
    Ok((delta_x, delta_t))
}

/// Independent midpoint-quadrature estimate of the cell-averaged transverse
/// ratio, ℰ·δx·δy·∫ρ/∫j_x over the cell centered on the envelope at time t.
/// j_x is rebuilt pointwise from a finite-difference ∂ₓΨ of the analytic
/// state plus the gauge term — no grid, no closed-form current.
pub fn hall_resistivity_quadrature(
    state: &AnalyticState,
    p: &PhysicalParams,
    delta_x: f64,
    delta_y: f64,
    t: f64,
    n_sub: usize,
) -> Result<f64> {
    if p.field_e == 0.0 {
        return Err(Error::Singular(
            "the cell average needs a drive field: with E = 0 the cell carries no x-current"
                .into(),
        ));
    }
    if n_sub < 2 || delta_x <= 0.0 || delta_y <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "quadrature needs n_sub >= 2 and a positive cell, got {n_sub}, ({delta_x}, {delta_y})"
        )));
    }
    let (axis, center) = state.envelope_center(p, t)?;
    if axis != Axis2::X {
        return Err(Error::InvalidParams(
            "the cell average needs an x-localized drifting state".into(),
        ));
    }
    let ev = state.evaluator(p)?;
    let h_fd = QUADRATURE_FD_STEP_LENGTHS * p.magnetic_length()?;
    let r = QUADRATURE_FD_RADIUS as i64;
    let nodes: Vec<f64> = (-r..=r).map(|i| i as f64 * h_fd).collect();
    let weights = fornberg_weights(1, 0.0, &nodes);

    let q_wc = p.charge * p.omega_c();
    let coef = p.charge * p.hbar / p.mass;
    let (hx, hy) = (delta_x / n_sub as f64, delta_y / n_sub as f64);
    let (mut sum_rho, mut sum_j) = (0.0, 0.0);
    for ix in 0..n_sub {
        let x = center - 0.5 * delta_x + (ix as f64 + 0.5) * hx;
        for iy in 0..n_sub {
            let y = -0.5 * delta_y + (iy as f64 + 0.5) * hy;
            let psi = ev.eval(x, y, t);
            let dpsi: Complex64 = nodes
                .iter()
                .zip(&weights)
                .map(|(dx, w)| ev.eval(x + dx, y, t) * *w)
                .sum();
            let dens = psi.norm_sqr();
            sum_rho += dens;
            sum_j += coef * (psi.conj() * dpsi).im + q_wc * y * dens;
        }
    }
    if sum_j.abs() < f64::EPSILON * sum_rho.abs().max(1.0) {
        return Err(Error::Singular("cell carries no net x-current".into()));
    }
    Ok(p.field_e * delta_x * delta_y * sum_rho / sum_j)
}

/// Map an angle to (−π, π].
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w > PI { w - TAU } else { w }
}

/// What a y-translation by one cell height did to a drifting state.
#[derive(Debug, Clone, Copy)]
pub struct InvarianceReport {
    /// m·ω_c·δx·δy/2πħ from the state's x-offset.
    pub winding_x: f64,
    /// q·ℰ·δt·δy/2πħ from the state's time offset.
    pub winding_t: f64,
    /// 2π·(winding_t − winding_x), unwrapped.
    pub expected_phase: f64,
    pub measured_phase: f64,
    /// |wrap(measured)|: distance from a strict return to the same state.
    /// Zero exactly when both windings are integers.
    pub invariance_defect: f64,
    /// |wrap(measured − expected)|: the measurement against the closed form.
    pub prediction_defect: f64,
    /// Pointwise residual after the best global phase; small means the
    /// translated state really is the original times a constant.
    pub proportionality_defect: f64,
}

/// Translate an x-localized drifting state up one cell height δy (through
/// the magnetic-translation unitary) and extract the global phase it came
/// back with. δy must sit on the grid, since the y-axis carries full
/// amplitude at the window seam and admits no spectral shift.
pub fn translation_invariance(
    state: &AnalyticState,
    p: &PhysicalParams,
    grid: &GridSpec,
    t: f64,
    delta_y: f64,
) -> Result<InvarianceReport> {
    if state.family.compact_axis() != Axis2::X {
        return Err(Error::InvalidParams(
            "the translation return is defined for x-localized drifting states".into(),
        ));
    }
    let h_y = grid.step(Axis2::Y);
    let steps = delta_y / h_y;
    if (steps - steps.round()).abs() > 1e-9 {
        return Err(Error::IncommensurateShift {
            axis: Axis2::Y.label(),
            amount: delta_y,
            step: h_y,
        });
    }
    let sampled = state.sample(p, grid, t)?;
    let shifted = unitary_translate(&sampled, Axis2::Y, delta_y)?;
    let mask = roll_overlap_mask(Axis2::Y, steps.round() as i64);
    let (measured, proportionality_defect) = extract_global_phase(&sampled, &shifted, mask)?;

    let (winding_x, winding_t) = cell_windings(p, state.offset_x, state.offset_t, delta_y);
    let expected_phase = TAU * (winding_t - winding_x);
    Ok(InvarianceReport {
        winding_x,
        winding_t,
        expected_phase,
        measured_phase: measured,
        invariance_defect: wrap_phase(measured).abs(),
        prediction_defect: wrap_phase(measured - expected_phase).abs(),
        proportionality_defect,
    })
}

/// One rung of the cell ladder: the cell, its transverse ratio in units of
/// 2πħ/q², the quadrature cross-check, and the translation-return defect.
#[derive(Debug, Clone, Copy)]
pub struct HallScanRow {
    pub l: u32,
    pub k: u32,
    pub delta_x: f64,
    pub delta_t: f64,
    pub delta_y: f64,
    pub rho_over_klitzing: f64,
    pub quadrature_rel_defect: f64,
    pub invariance_defect: f64,
}

/// Walk cells of winding l ∈ `l_values` at fixed k and δy. Each rung builds
/// the drifting ground state pinned to that cell, recenters the template
/// window on its envelope, and measures all three cell diagnostics at the
/// state's own time offset.
pub fn quantization_scan(
    p: &PhysicalParams,
    grid_template: &GridSpec,
    delta_y: f64,
    k: u32,
    l_values: &[u32],
    n_sub: usize,
) -> Result<Vec<HallScanRow>> {
    let half_x = 0.5 * grid_template.extent(Axis2::X);
    let mut rows = Vec::with_capacity(l_values.len());
    for &l in l_values {
        let (delta_x, delta_t) = hall_cell_offsets(p, l, k, delta_y)?;
        let state = AnalyticState::ground(delta_x, delta_t);
        let rho_over_klitzing = hall_resistivity(p, delta_x, delta_y)? / klitzing_scale(p);
        let quad = hall_resistivity_quadrature(&state, p, delta_x, delta_y, delta_t, n_sub)?;
        let closed = hall_resistivity(p, delta_x, delta_y)?;
        let quadrature_rel_defect = ((quad - closed) / closed).abs();
        let grid = grid_template.recentered(Axis2::X, delta_x, half_x);
        let report = translation_invariance(&state, p, &grid, delta_t, delta_y)?;
        rows.push(HallScanRow {
            l,
            k,
            delta_x,
            delta_t,
            delta_y,
            rho_over_klitzing,
            quadrature_rel_defect,
            invariance_defect: report.invariance_defect,
        });
    }
    Ok(rows)
}

/// Drive field over the transverse current it cannot cancel, on the lab
/// line x at time t: ℰ/(q·ω_c·z·|φ_n(s·z)|²) with z = x − x_c(t). Finite
/// everywhere off the envelope-center worldline, 0 exactly when ℰ = 0, and
/// singular (never clamped) as z → 0 or at an envelope node.
pub fn longitudinal_resistivity(
    state: &AnalyticState,
    p: &PhysicalParams,
    x: f64,
    t: f64,
) -> Result<f64> {
    let (axis, center) = state.envelope_center(p, t)?;
    if axis != Axis2::X {
        return Err(Error::InvalidParams(
            "the longitudinal ratio needs an x-localized drifting state".into(),
        ));
    }
    if p.field_e == 0.0 {
        return Ok(0.0);
    }
    let z = x - center;
    if z.abs() < 1e-9 * p.magnetic_length()? {
        return Err(Error::Singular(format!(
            "line x = {x} crosses the envelope-center worldline at t = {t}"
        )));
    }
    let s = p.oscillator_scale()?;
    let phi = hermite_function(state.n, s * z, s)?;
    let value = p.field_e / (p.charge * p.omega_c() * z * phi * phi);
    if !value.is_finite() {
        return Err(Error::Singular(format!(
            "transverse current vanishes at x = {x}, t = {t} (envelope node)"
        )));
    }
    Ok(value)
}

/// Max-norm residual of ∂_t(q|Ψ|²) + ∇·J at time t, normalized by
/// q·ρ_max·|ω_c|. The time derivative is a centered stencil of half-width
/// `dt_fraction` cyclotron periods (default 1e-4). A propagator or a state
/// evaluator with a broken current leaves a residual of order one.
pub fn continuity_residual(
    traj: &dyn TimeIndexedState,
    t: f64,
    dt_fraction: Option<f64>,
) -> Result<f64> {
    let frac = dt_fraction.unwrap_or(CONTINUITY_DT_FRACTION);
    if !(frac > 0.0 && frac < 0.1) {
        return Err(Error::InvalidParams(format!(
            "time-stencil fraction must sit in (0, 0.1), got {frac}"
        )));
    }
    let now = traj.state_at(t)?;
    let p = now.params;
    let dt = frac * p.cyclotron_period()?;
    let before = traj.state_at(t - dt)?;
    let after = traj.state_at(t + dt)?;
    if before.grid != now.grid || after.grid != now.grid {
        return Err(Error::InvalidGrid("trajectory changed grids under the time stencil".into()));
    }

    let current = current_density(&now, true)?;
    let div_x = derivative_of(
        &current.j_x.mapv(|v| Complex64::new(v, 0.0)),
        Axis2::X,
        &now.grid,
        current.method_x,
    )?;
    let div_y = derivative_of(
        &current.j_y.mapv(|v| Complex64::new(v, 0.0)),
        Axis2::Y,
        &now.grid,
        current.method_y,
    )?;

    let rho_max = now.amplitudes.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    let scale = p.charge.abs() * rho_max * p.omega_c().abs();
    if scale == 0.0 {
        return Err(Error::Singular("continuity residual has no scale: empty state".into()));
    }

    let (n_x, n_y) = now.amplitudes.dim();
    let mask = current.mask;
    let mut worst = 0.0_f64;
    for ix in mask.x..n_x - mask.x {
        for iy in mask.y..n_y - mask.y {
            let rho_dot = p.charge
                * (after.amplitudes[(ix, iy)].norm_sqr() - before.amplitudes[(ix, iy)].norm_sqr())
                / (2.0 * dt);
            let div = div_x[(ix, iy)].re + div_y[(ix, iy)].re;
            worst = worst.max((rho_dot + div).abs());
        }
    }
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{AnalyticOnGrid, LinearCombination};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn p11() -> PhysicalParams {
        PhysicalParams::natural(1.0, 1.0)
    }

    fn grid256() -> GridSpec {
        GridSpec::centered_square(12.8, 256)
    }

    #[test]
    fn grid_current_matches_the_closed_form_only_with_the_gauge_term() {
        let p = p11();
        let g = grid256();
        let st = AnalyticState::zeta_bar(0);
        let t = 0.4;
        let s = st.sample(&p, &g, t).unwrap();
        let current = current_density(&s, true).unwrap();
        let (jx_ref, jy_ref) = drift_current_closed_form(&st, &p, &g, t).unwrap();
        let support = support_mask(&s, SUPPORT_REL_THRESHOLD);

        let dx = max_component_defect(&current.j_x, &jx_ref, &support, current.mask).unwrap();
        let dy = max_component_defect(&current.j_y, &jy_ref, &support, current.mask).unwrap();
        assert!(dx < 1e-5, "x-component defect {dx:.3e}");
        assert!(dy < 1e-5, "y-component defect {dy:.3e}");

        // Without the gauge term the full diamagnetic profile −q·ω_c·y·ρ
        // survives in j_x; on a window reaching |y| ≈ 12 that is an order-10
        // error relative to q·v_d·ρ.
        let bare = current_density(&s, false).unwrap();
        let dx_bare = max_component_defect(&bare.j_x, &jx_ref, &support, bare.mask).unwrap();
        assert!(dx_bare > 1e-2, "gauge-free control unexpectedly small: {dx_bare:.3e}");
    }

    #[test]
    fn every_family_member_drifts_at_the_drift_velocity() {
        let p = p11();
        let drift = DriftConstants::derive(&p).unwrap();

        // Level-2 y-localized state: both axes spectral, so the ratio is
        // clean to roundoff.
        let s = AnalyticState::zeta(2).sample(&p, &grid256(), 0.0).unwrap();
        let current = current_density(&s, true).unwrap();
        let (vx, vy) = mean_velocity(&current, &s).unwrap();
        assert!((vx - drift.v_d).abs() < 1e-10, "zeta(2) vx {vx} vs {}", drift.v_d);
        assert!(vy.abs() < 1e-10, "zeta(2) vy {vy}");

        // Level-1 x-localized state at finite offset and time: the y-axis
        // goes through wrap-around stencils, which caps the j_y accuracy.
        let st = AnalyticState::psi_bar(1, 0.8);
        let s = st.sample(&p, &grid256(), 0.7).unwrap();
        let current = current_density(&s, true).unwrap();
        let (vx, vy) = mean_velocity(&current, &s).unwrap();
        assert!((vx - drift.v_d).abs() < 1e-10, "psi_bar vx {vx} vs {}", drift.v_d);
        assert!(vy.abs() < 1e-3, "psi_bar vy {vy}");
    }

    #[test]
    fn cell_offsets_and_windings_round_trip() {
        let p = p11();
        let (dx, dt) = hall_cell_offsets(&p, 2, 1, 2.5).unwrap();
        let (l, k) = cell_windings(&p, dx, dt, 2.5);
        assert!((l - 2.0).abs() < 1e-12, "winding l {l}");
        assert!((k - 1.0).abs() < 1e-12, "winding k {k}");
        let ratio = hall_resistivity(&p, dx, 2.5).unwrap() / klitzing_scale(&p);
        assert!((ratio - 2.0).abs() < 1e-12, "ratio {ratio}");

        let (_, dt0) = hall_cell_offsets(&p, 3, 0, 2.5).unwrap();
        assert_eq!(dt0, 0.0, "k = 0 needs no time offset");

        let no_drive = PhysicalParams::natural(1.0, 0.0);
        assert!(matches!(
            hall_cell_offsets(&no_drive, 1, 1, 2.5),
            Err(Error::DegenerateField(_))
        ));
        assert!(matches!(hall_cell_offsets(&p, 1, 1, 0.0), Err(Error::DegenerateField(_))));
    }

    #[test]
    fn quadrature_cell_average_matches_the_closed_ratio() {
        let p = p11();
        let (dx, dt) = hall_cell_offsets(&p, 3, 1, 2.5).unwrap();
        let state = AnalyticState::ground(dx, dt);
        let quad = hall_resistivity_quadrature(&state, &p, dx, 2.5, dt, 64).unwrap();
        let closed = hall_resistivity(&p, dx, 2.5).unwrap();
        let rel = ((quad - closed) / closed).abs();
        assert!(rel < 1e-9, "quadrature {quad} vs closed {closed}, rel {rel:.3e}");
    }

    #[test]
    fn integer_cell_translation_returns_the_state_to_itself() {
        let p = p11();
        let (dx, dt) = hall_cell_offsets(&p, 3, 1, 2.5).unwrap();
        let g = grid256().recentered(Axis2::X, dx, 12.8);
        let state = AnalyticState::ground(dx, dt);
        let report = translation_invariance(&state, &p, &g, dt, 2.5).unwrap();
        assert!((report.winding_x - 3.0).abs() < 1e-12, "winding {}", report.winding_x);
        assert!(report.invariance_defect < 1e-8, "return phase {:.3e}", report.invariance_defect);
        assert!(report.prediction_defect < 1e-8, "prediction {:.3e}", report.prediction_defect);
        assert!(
            report.proportionality_defect < 1e-8,
            "not a global phase: {:.3e}",
            report.proportionality_defect
        );

        // A 1% error in δx de-quantizes the cell: the return phase moves by
        // 2π·l·0.01, far above the defect floor.
        let detuned = AnalyticState::ground(1.01 * dx, dt);
        let report = translation_invariance(&detuned, &p, &g, dt, 2.5).unwrap();
        assert!(report.invariance_defect > 0.1, "detuned cell still closes: {report:?}");
        // The measurement still matches the closed-form phase — the state is
        // wrong for the cell, not the measurement for the state.
        assert!(report.prediction_defect < 1e-8, "prediction {:.3e}", report.prediction_defect);

        let bad = translation_invariance(&state, &p, &g, dt, 2.5 + 0.03);
        assert!(matches!(bad, Err(Error::IncommensurateShift { .. })));
    }

    #[test]
    fn quantization_ladder_is_integer_valued() {
        let p = p11();
        let rows = quantization_scan(&p, &grid256(), 2.5, 1, &[1, 2, 3], 64).unwrap();
        assert_eq!(rows.len(), 3);
        for row in rows {
            let want = f64::from(row.l);
            assert!(
                (row.rho_over_klitzing - want).abs() < 1e-12,
                "rung {}: ratio {}",
                row.l,
                row.rho_over_klitzing
            );
            assert!(
                row.quadrature_rel_defect < 1e-9,
                "rung {}: quadrature defect {:.3e}",
                row.l,
                row.quadrature_rel_defect
            );
            assert!(
                row.invariance_defect < 1e-8,
                "rung {}: return phase {:.3e}",
                row.l,
                row.invariance_defect
            );
        }
    }

    #[test]
    fn longitudinal_ratio_grows_toward_the_center_worldline() {
        let p = p11();
        let state = AnalyticState::zeta_bar(0);
        let x = 0.5;

        // v_d = 1, so the line x = 0.5 meets the envelope center at t = 0.5.
        let mut last = 0.0;
        for i in 0..10 {
            let t = 0.05 * i as f64;
            let rho = longitudinal_resistivity(&state, &p, x, t).unwrap();
            assert!(rho.is_finite() && rho > 0.0, "t = {t}: {rho}");
            assert!(rho > last, "not monotone at t = {t}: {rho} after {last}");
            last = rho;
        }
        assert!(matches!(
            longitudinal_resistivity(&state, &p, x, 0.5),
            Err(Error::Singular(_))
        ));

        // Odd in the signed distance from the center.
        let ahead = longitudinal_resistivity(&state, &p, 0.5, 0.0).unwrap();
        let behind = longitudinal_resistivity(&state, &p, -0.5, 0.0).unwrap();
        assert!((ahead + behind).abs() < 1e-12 * ahead.abs(), "{ahead} vs {behind}");

        let no_drive = PhysicalParams::natural(1.0, 0.0);
        let rho = longitudinal_resistivity(&state, &no_drive, 0.5, 0.3).unwrap();
        assert_eq!(rho, 0.0, "no drive, no ratio");
    }

    #[test]
    fn continuity_holds_for_a_beating_superposition() {
        let p = p11();
        let g = grid256();
        let comb = LinearCombination {
            terms: vec![
                (
                    Complex64::new(0.6, 0.0),
                    Arc::new(AnalyticOnGrid { state: AnalyticState::zeta(0), params: p, grid: g })
                        as Arc<dyn TimeIndexedState>,
                ),
                (
                    Complex64::new(0.0, -0.8),
                    Arc::new(AnalyticOnGrid { state: AnalyticState::zeta(3), params: p, grid: g }),
                ),
            ],
        };
        // The beat between levels 0 and 3 oscillates at 3ω_c; the centered
        // time stencil must stay well under that scale.
        let residual = continuity_residual(&comb, 0.3, Some(3e-5)).unwrap();
        assert!(residual < 1e-6, "beating residual {residual:.3e}");

        let single = AnalyticOnGrid { state: AnalyticState::zeta(1), params: p, grid: g };
        let residual = continuity_residual(&single, 0.3, None).unwrap();
        assert!(residual < 1e-9, "stationary residual {residual:.3e}");
    }

    proptest! {
        #[test]
        fn wrapped_phase_stays_in_range_and_preserves_the_angle(theta in -50.0..50.0f64) {
            let w = wrap_phase(theta);
            prop_assert!(w > -PI - 1e-12 && w <= PI + 1e-12, "out of range: {w}");
            let turns = (theta - w) / TAU;
            prop_assert!((turns - turns.round()).abs() < 1e-9, "not a whole turn off: {turns}");
        }
    }
}
