//! Time-dependent Schrödinger propagators: the independent dynamics oracle
//! the analytic families are tested against.
//!
//! Primary scheme — palindromic split-step on the doubly periodic grid. The
//! Hamiltonian splits into W = (p̂ₓ + mω_c ŷ)²/2m − qℰŷ, diagonal in the
//! mixed (kₓ, y) representation (p̂ₓ commutes with ŷ, so the potential rides
//! along), and B = p̂_y²/2m, diagonal in k_y. One step is the Strang
//! palindrome e^{−iWΔ/2ħ} e^{−iBΔ/ħ} e^{−iWΔ/2ħ}: strictly unitary, second
//! order in Δ, four FFT passes per step.
//!
//! Drift-frame reduction — the x-envelope families factor as
//! ψ = e^{i(−mω_c x + qℰt)y/ħ}·w(x,t) with w obeying the 1-D equation
//! iħ∂ₜw = [p̂ₓ²/2m + (mω_c x − qℰt)²/2m]w. The potential commutes with
//! itself across times, so its half-step uses the exact interval integral;
//! only the kinetic/potential commutator limits accuracy (second order).
//! This propagates the y-extended families without putting the y axis on a
//! grid at all — their linear-in-x wavenumber along y is incompatible with
//! any periodic window (commensurability pins the x-Nyquist below the
//! state's own bandwidth), and the factored phase is unitary, so overlaps
//! computed on w equal overlaps on ψ.
//!
//! Secondary scheme — Crank–Nicolson via conjugate gradients on the normal
//! equations (I + α²Ĥ²)ψ⁺ = (I − iαĤ)²ψ... more precisely A†Aψ⁺ = A†b with
//! A = I + iαĤ, b = (I − iαĤ)ψ, α = Δ/2ħ; A†A = I + α²Ĥ² is Hermitian
//! positive definite. Kept for small grids as an independent discretization.

use crate::deriv::{fft_axis, wavenumbers};
use crate::error::{Error, Result};
use crate::grid::{Axis2, GridSpec, Mask, SampledState};
use crate::ops::{apply_hamiltonian_with, DerivativeMethod};
use crate::params::PhysicalParams;
use crate::states::AnalyticState;
use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Default hard cap on Δ as a fraction of the cyclotron period.
pub const MAX_DT_FRACTION: f64 = 0.01;
/// Width of the y-boundary absorption watch band, in magnetic lengths.
pub const BOUNDARY_MARGIN_LENGTHS: f64 = 4.0;
/// Relative probability in the watch band that aborts a run. Splitting
/// error deposits high-k_y noise that the kinetic phase transports across
/// the periodic window, giving a floor near 1e-10 at coarse steps; genuine
/// arrival of the packet at the edge crosses this value erfc-fast, so the
/// limit separates the two regimes cleanly.
pub const BOUNDARY_LEAK_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct EvolveSettings {
    pub dt: f64,
    pub steps: usize,
    /// Record a trajectory point every this many steps (0: ends only).
    pub record_every: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    /// ⟨p̂ₓ⟩ — the conserved x-generator.
    pub pi_x_prime: f64,
    /// ⟨p̂_y + mω_c x̂ − qℰt⟩ — the conserved y-generator.
    pub pi_y_prime: f64,
    pub norm: f64,
    pub energy: f64,
}

#[derive(Debug)]
pub struct EvolveOutcome {
    pub final_state: SampledState,
    pub trajectory: Vec<TrajectoryPoint>,
}

struct SplitTables {
    /// exp(−i(Δ/2ħ)·W) on the (kₓ, y) lattice.
    w_half: Array2<Complex64>,
    /// exp(−iΔħk_y²/2m) per k_y.
    b_full: Vec<Complex64>,
}

impl SplitTables {
    fn build(grid: &GridSpec, p: &PhysicalParams, dt: f64) -> Self {
        let kxs = wavenumbers(grid.n_x, grid.extent(Axis2::X));
        let kys = wavenumbers(grid.n_y, grid.extent(Axis2::Y));
        let ys = grid.ys();
        let wc = p.omega_c();
        let w_half = Array2::from_shape_fn((grid.n_x, grid.n_y), |(i, j)| {
            let pi_x = p.hbar * kxs[i] + p.mass * wc * ys[j];
            let w = pi_x * pi_x / (2.0 * p.mass) - p.charge * p.field_e * ys[j];
            Complex64::from_polar(1.0, -0.5 * dt * w / p.hbar)
        });
        let b_full = kys
            .iter()
            .map(|ky| Complex64::from_polar(1.0, -dt * p.hbar * ky * ky / (2.0 * p.mass)))
            .collect();
        Self { w_half, b_full }
    }
}

fn mean_wavenumber(arr: &Array2<Complex64>, axis: Axis2, ks: &[f64]) -> f64 {
    let mut spec = arr.clone();
    fft_axis(&mut spec, axis, false);
    let mut num = 0.0;
    let mut den = 0.0;
    for ((i, j), v) in spec.indexed_iter() {
        let k = match axis {
            Axis2::X => ks[i],
            Axis2::Y => ks[j],
        };
        let p = v.norm_sqr();
        num += k * p;
        den += p;
    }
    num / den
}

fn record_point(s: &SampledState, kxs: &[f64], kys: &[f64]) -> Result<TrajectoryPoint> {
    let p = &s.params;
    let (mean_x, mean_y) = s.position_mean();
    let px = p.hbar * mean_wavenumber(&s.amplitudes, Axis2::X, kxs);
    let py = p.hbar * mean_wavenumber(&s.amplitudes, Axis2::Y, kys);
    // Evolved states are exactly periodic on the torus, so the spectral
    // Hamiltonian is the right energy here regardless of leakage heuristics.
    let h_applied = apply_hamiltonian_with(s, DerivativeMethod::Spectral, DerivativeMethod::Spectral)?;
    let nsq = s.norm_sq_masked(Mask::default())?;
    let energy = s.inner(&h_applied).re / nsq;
    Ok(TrajectoryPoint {
        t: s.t,
        mean_x,
        mean_y,
        pi_x_prime: px,
        pi_y_prime: py + p.mass * p.omega_c() * mean_x - p.charge * p.field_e * s.t,
        norm: nsq.sqrt(),
        energy,
    })
}

/// Evolve on the doubly periodic grid. Aborts with [`Error::BoundaryLeak`]
/// if probability reaches the y-window edge: the x direction is the drift
/// direction and wraps physically, but nothing in this geometry confines y
/// except the state's own envelope, so y-boundary contact means the window
/// no longer represents the plane.
pub fn split_step_evolve(initial: &SampledState, settings: &EvolveSettings) -> Result<EvolveOutcome> {
    let grid = initial.grid;
    if !grid.is_periodic(Axis2::X) || !grid.is_periodic(Axis2::Y) {
        return Err(Error::InvalidGrid("split-step needs a doubly periodic grid".into()));
    }
    initial.check_finite()?;
    let p = initial.params;
    let period = p.cyclotron_period()?;
    if settings.dt > MAX_DT_FRACTION * period {
        return Err(Error::TimeStep { dt: settings.dt, max: MAX_DT_FRACTION * period });
    }
    if settings.dt <= 0.0 || !settings.dt.is_finite() {
        return Err(Error::InvalidParams(format!("time step {}", settings.dt)));
    }
    // Watch band: four magnetic lengths, capped at a sixteenth of the window
    // so weak-field runs (huge ℓ) keep a usable interior.
    let margin = (BOUNDARY_MARGIN_LENGTHS * p.magnetic_length()?)
        .min(grid.extent(Axis2::Y) / 16.0);
    let tables = SplitTables::build(&grid, &p, settings.dt);
    let kxs = wavenumbers(grid.n_x, grid.extent(Axis2::X));
    let kys = wavenumbers(grid.n_y, grid.extent(Axis2::Y));

    let mut state = initial.clone();
    let leak_check = |s: &SampledState| -> Result<()> {
        let mass = s.boundary_mass(Axis2::Y, margin);
        if mass > BOUNDARY_LEAK_LIMIT {
            return Err(Error::BoundaryLeak { axis: 'y', mass, margin, limit: BOUNDARY_LEAK_LIMIT });
        }
        Ok(())
    };
    leak_check(&state)?;

    let mut trajectory = vec![record_point(&state, &kxs, &kys)?];
    for step in 0..settings.steps {
        // W/2 in (kₓ, y) — forward x-FFT, table, stay in mixed space.
        fft_axis(&mut state.amplitudes, Axis2::X, false);
        Zip::from(&mut state.amplitudes)
            .and(&tables.w_half)
            .par_for_each(|v, w| *v *= w);
        // B in (kₓ, k_y).
        fft_axis(&mut state.amplitudes, Axis2::Y, false);
        Zip::indexed(&mut state.amplitudes).par_for_each(|(_, j), v| *v *= tables.b_full[j]);
        fft_axis(&mut state.amplitudes, Axis2::Y, true);
        // W/2 again, then back to real space.
        Zip::from(&mut state.amplitudes)
            .and(&tables.w_half)
            .par_for_each(|v, w| *v *= w);
        fft_axis(&mut state.amplitudes, Axis2::X, true);

        state.t += settings.dt;
        leak_check(&state)?;
        let due = settings.record_every > 0 && (step + 1) % settings.record_every == 0;
        if due || step + 1 == settings.steps {
            trajectory.push(record_point(&state, &kxs, &kys)?);
        }
    }
    Ok(EvolveOutcome { final_state: state, trajectory })
}

/// Magnetic coherent packet at rest at `center`, optionally kicked: the
/// joint eigenstate of the cyclotron and guiding-center lowering operators,
/// which rides the classical cycloid as a rigid Gaussian. In this gauge
/// that state is
///   e^{−mω_c((x−x₀)²+(y−y₀)²)/4ħ} · e^{−i(mω_c/2ħ)(xy + y₀x − x₀y)},
/// and the trailing phase is load-bearing: without it the packet is a
/// squeezed, guiding-center-spread state that breathes, shedding tails
/// orders of magnitude above the coherent envelope. A kick multiplies by a
/// plane wave (displacing both ladder eigenvalues — still coherent).
pub fn gaussian_packet(
    p: &PhysicalParams,
    grid: &GridSpec,
    center: (f64, f64),
    kick: (f64, f64),
) -> Result<SampledState> {
    let wc = p.omega_c();
    if wc == 0.0 || !wc.is_finite() {
        return Err(Error::DegenerateField("coherent packet needs omega_c != 0".into()));
    }
    let half_inv_l2 = 0.5 * p.mass * wc / p.hbar; // signed ω_c/2ℓ²-type factor
    let quarter = 0.25 * (p.mass * wc / p.hbar).abs();
    let norm = (2.0 * quarter / std::f64::consts::PI).sqrt();
    let (x0, y0) = center;
    SampledState::from_fn(*grid, *p, 0.0, |x, y| {
        let (dx, dy) = (x - x0, y - y0);
        Complex64::from_polar(
            norm * (-quarter * (dx * dx + dy * dy)).exp(),
            -half_inv_l2 * (x * y + y0 * x - x0 * y) + kick.0 * x + kick.1 * y,
        )
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LorentzReport {
    /// max over interior record points of |m·D²⟨r⟩ − F(D¹⟨r⟩)|/F_scale.
    pub max_defect: f64,
    /// Normalization: the cyclotron force at the drift speed plus qℰ.
    pub force_scale: f64,
    /// max_k |⟨p̂ₓ⟩_k − ⟨p̂ₓ⟩_0|.
    pub pi_x_drift: f64,
    /// max_k |⟨π̂'_y⟩_k − ⟨π̂'_y⟩_0|.
    pub pi_y_drift: f64,
}

/// Ehrenfest check on a recorded trajectory: second differences of the mean
/// position must track the Lorentz force,
/// m⟨ẍ⟩ = mω_c⟨ẏ⟩ and m⟨ÿ⟩ = qℰ − mω_c⟨ẋ⟩,
/// and both conserved generators must stay put. Records must be uniformly
/// spaced in time.
pub fn lorentz_check(traj: &[TrajectoryPoint], p: &PhysicalParams) -> Result<LorentzReport> {
    if traj.len() < 5 {
        return Err(Error::InvalidParams(format!(
            "need at least 5 uniformly spaced records, got {}",
            traj.len()
        )));
    }
    let dt = traj[1].t - traj[0].t;
    for w in traj.windows(2) {
        if ((w[1].t - w[0].t) - dt).abs() > 1e-9 * dt {
            return Err(Error::InvalidParams("trajectory records unevenly spaced".into()));
        }
    }
    let wc = p.omega_c();
    // Speed scale from the data itself; force scale from it.
    let mut vmax = 0.0f64;
    for w in traj.windows(2) {
        let vx = (w[1].mean_x - w[0].mean_x) / dt;
        let vy = (w[1].mean_y - w[0].mean_y) / dt;
        vmax = vmax.max(vx.hypot(vy));
    }
    let force_scale = p.mass * wc.abs() * vmax + p.charge.abs() * p.field_e;
    if force_scale == 0.0 {
        return Err(Error::DegenerateField("no force scale: fields and motion vanish".into()));
    }
    let mut max_defect = 0.0f64;
    for k in 1..traj.len() - 1 {
        let ax = (traj[k + 1].mean_x - 2.0 * traj[k].mean_x + traj[k - 1].mean_x) / (dt * dt);
        let ay = (traj[k + 1].mean_y - 2.0 * traj[k].mean_y + traj[k - 1].mean_y) / (dt * dt);
        let vx = (traj[k + 1].mean_x - traj[k - 1].mean_x) / (2.0 * dt);
        let vy = (traj[k + 1].mean_y - traj[k - 1].mean_y) / (2.0 * dt);
        let fx = p.mass * wc * vy;
        let fy = p.charge * p.field_e - p.mass * wc * vx;
        max_defect = max_defect
            .max((p.mass * ax - fx).abs() / force_scale)
            .max((p.mass * ay - fy).abs() / force_scale);
    }
    let pi_x_drift = traj
        .iter()
        .map(|r| (r.pi_x_prime - traj[0].pi_x_prime).abs())
        .fold(0.0, f64::max);
    let pi_y_drift = traj
        .iter()
        .map(|r| (r.pi_y_prime - traj[0].pi_y_prime).abs())
        .fold(0.0, f64::max);
    Ok(LorentzReport { max_defect, force_scale, pi_x_drift, pi_y_drift })
}

// ---------------------------------------------------------------------------
// Drift-frame 1-D propagation for the y-extended families.

#[derive(Debug, Clone, Copy)]
pub struct ReducedSettings {
    pub n_points: usize,
    pub half_width: f64,
    pub dt: f64,
    pub t_final: f64,
}

#[derive(Debug)]
pub struct ReducedOutcome {
    /// |⟨w_num, w_ref⟩| / (‖w_num‖‖w_ref‖) at t_final.
    pub overlap: f64,
    /// ‖w_num − w_ref‖ / ‖w_ref‖ at t_final.
    pub rel_error: f64,
    pub norm_drift: f64,
}

/// Exact interval integral of the drift-frame potential over [t, t+δ]:
/// (1/2m)∫(mω_c x − qℰτ)²dτ, evaluated in closed form so the potential
/// half-steps commit no time-discretization error of their own.
fn potential_phase_integral(p: &PhysicalParams, x: f64, t: f64, delta: f64) -> f64 {
    let a = p.mass * p.omega_c() * x;
    let qe = p.charge * p.field_e;
    if qe == 0.0 {
        return a * a * delta / (2.0 * p.mass);
    }
    let u0 = a - qe * t;
    let u1 = a - qe * (t + delta);
    (u0 * u0 * u0 - u1 * u1 * u1) / (6.0 * p.mass * qe)
}

/// Propagate the reduced factor w of an x-envelope family from t = 0 to
/// `t_final` and compare with the family's own reduced factor. The overlap
/// equals the full-state overlap because the stripped y-phase is unitary
/// and shared.
pub fn reduced_drift_frame_run(
    p: &PhysicalParams,
    state: &AnalyticState,
    settings: &ReducedSettings,
) -> Result<ReducedOutcome> {
    let ev = state.evaluator(p)?;
    if state.family.compact_axis() != Axis2::X {
        return Err(Error::InvalidParams(format!(
            "drift-frame reduction applies to the x-envelope families, not {}",
            state.family
        )));
    }
    let n = settings.n_points;
    if n < 64 || settings.dt <= 0.0 || settings.t_final <= 0.0 {
        return Err(Error::InvalidParams("reduced run needs n ≥ 64 and positive dt, t".into()));
    }
    let period = p.cyclotron_period()?;
    if settings.dt > MAX_DT_FRACTION * period {
        return Err(Error::TimeStep { dt: settings.dt, max: MAX_DT_FRACTION * period });
    }
    // Window must hold the envelope at both ends of the run.
    let half_support = state.support_half_width(p)?;
    let (_, c0) = state.envelope_center(p, 0.0)?;
    let (_, c1) = state.envelope_center(p, settings.t_final)?;
    let lo = c0.min(c1) - half_support;
    let hi = c0.max(c1) + half_support;
    if lo < -settings.half_width || hi > settings.half_width {
        return Err(Error::InvalidGrid(format!(
            "reduced window ±{} cannot hold the drifting envelope ([{lo:.2}, {hi:.2}])",
            settings.half_width
        )));
    }

    let l = 2.0 * settings.half_width;
    let h = l / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| -settings.half_width + i as f64 * h).collect();
    let mut w: Vec<Complex64> = xs.iter().map(|&x| ev.eval_reduced(x, 0.0)).collect();
    let norm0: f64 = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let ks = wavenumbers(n, l);
    let kinetic: Vec<Complex64> = ks
        .iter()
        .map(|k| Complex64::from_polar(1.0, -settings.dt * p.hbar * k * k / (2.0 * p.mass)))
        .collect();
    let inv_n = 1.0 / n as f64;

    let steps = (settings.t_final / settings.dt).round() as usize;
    if ((steps as f64) * settings.dt - settings.t_final).abs() > 1e-9 * settings.t_final {
        return Err(Error::InvalidParams(format!(
            "t_final {} is not an integer number of steps of dt {}",
            settings.t_final, settings.dt
        )));
    }
    let mut t = 0.0;
    for _ in 0..steps {
        for (v, &x) in w.iter_mut().zip(&xs) {
            let phase = -potential_phase_integral(p, x, t, 0.5 * settings.dt) / p.hbar;
            *v *= Complex64::from_polar(1.0, phase);
        }
        fwd.process(&mut w);
        for (v, kin) in w.iter_mut().zip(&kinetic) {
            *v *= kin;
        }
        inv.process(&mut w);
        for v in w.iter_mut() {
            *v *= inv_n;
        }
        for (v, &x) in w.iter_mut().zip(&xs) {
            let phase = -potential_phase_integral(p, x, t + 0.5 * settings.dt, 0.5 * settings.dt)
                / p.hbar;
            *v *= Complex64::from_polar(1.0, phase);
        }
        t += settings.dt;
    }

    let reference: Vec<Complex64> = xs.iter().map(|&x| ev.eval_reduced(x, t)).collect();
    let mut inner = Complex64::new(0.0, 0.0);
    let mut nw = 0.0;
    let mut nr = 0.0;
    let mut diff = 0.0;
    for (a, b) in w.iter().zip(&reference) {
        inner += b.conj() * a;
        nw += a.norm_sqr();
        nr += b.norm_sqr();
        diff += (a - b).norm_sqr();
    }
    Ok(ReducedOutcome {
        overlap: inner.norm() / (nw.sqrt() * nr.sqrt()),
        rel_error: (diff / nr).sqrt(),
        norm_drift: (nw.sqrt() - norm0).abs() / norm0,
    })
}

// ---------------------------------------------------------------------------
// Crank–Nicolson (secondary discretization, small grids).

#[derive(Debug, Clone, Copy)]
pub struct CrankNicolson {
    pub dt: f64,
    pub method_x: DerivativeMethod,
    pub method_y: DerivativeMethod,
    pub tol: f64,
    pub max_iters: usize,
}

impl CrankNicolson {
    pub fn spectral(dt: f64) -> Self {
        Self {
            dt,
            method_x: DerivativeMethod::Spectral,
            method_y: DerivativeMethod::Spectral,
            tol: 1e-12,
            max_iters: 400,
        }
    }
}

fn cn_apply_h(s: &SampledState, arr: &Array2<Complex64>, cn: &CrankNicolson) -> Result<Array2<Complex64>> {
    let tmp = SampledState { grid: s.grid, params: s.params, t: s.t, amplitudes: arr.clone() };
    Ok(apply_hamiltonian_with(&tmp, cn.method_x, cn.method_y)?.amplitudes)
}

fn dot(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// One Crank–Nicolson step: solve (I + α²Ĥ²)ψ⁺ = (I − iαĤ)²ψ + ... i.e. the
/// normal equations of (I + iαĤ)ψ⁺ = (I − iαĤ)ψ by conjugate gradients.
pub fn crank_nicolson_step(s: &SampledState, cn: &CrankNicolson) -> Result<SampledState> {
    let alpha = 0.5 * cn.dt / s.params.hbar;
    let b0 = {
        // b = (I − iαĤ)ψ.
        let h = cn_apply_h(s, &s.amplitudes, cn)?;
        let mut b = s.amplitudes.clone();
        Zip::from(&mut b).and(&h).par_for_each(|v, hv| *v -= Complex64::i() * alpha * hv);
        b
    };
    // Normal equations: A†A x = A†b, A = I + iαĤ ⇒ A† = I − iαĤ.
    let rhs = {
        let h = cn_apply_h(s, &b0, cn)?;
        let mut r = b0.clone();
        Zip::from(&mut r).and(&h).par_for_each(|v, hv| *v -= Complex64::i() * alpha * hv);
        r
    };
    let apply_ata = |x: &Array2<Complex64>| -> Result<Array2<Complex64>> {
        let hx = cn_apply_h(s, x, cn)?;
        let hhx = cn_apply_h(s, &hx, cn)?;
        let mut out = x.clone();
        Zip::from(&mut out).and(&hhx).par_for_each(|v, h2| *v += alpha * alpha * h2);
        Ok(out)
    };

    let mut x = s.amplitudes.clone(); // warm start from the current state
    let mut r = rhs.clone();
    let ax = apply_ata(&x)?;
    Zip::from(&mut r).and(&ax).par_for_each(|v, a| *v -= a);
    let mut p_dir = r.clone();
    let mut rs_old = dot(&r, &r).re;
    let bnorm = dot(&rhs, &rhs).re.sqrt().max(f64::MIN_POSITIVE);
    let mut converged = rs_old.sqrt() / bnorm < cn.tol;
    let mut iters = 0usize;
    while !converged {
        if iters >= cn.max_iters {
            return Err(Error::SolverStall { iters, residual: rs_old.sqrt() / bnorm });
        }
        let ap = apply_ata(&p_dir)?;
        let denom = dot(&p_dir, &ap).re;
        if denom <= 0.0 {
            return Err(Error::SolverStall { iters, residual: rs_old.sqrt() / bnorm });
        }
        let alpha_cg = rs_old / denom;
        Zip::from(&mut x).and(&p_dir).par_for_each(|v, pv| *v += alpha_cg * pv);
        Zip::from(&mut r).and(&ap).par_for_each(|v, av| *v -= alpha_cg * av);
        let rs_new = dot(&r, &r).re;
        converged = rs_new.sqrt() / bnorm < cn.tol;
        let beta = rs_new / rs_old;
        Zip::from(&mut p_dir).and(&r).par_for_each(|v, rv| *v = rv + beta * *v);
        rs_old = rs_new;
        iters += 1;
    }
    let mut out = s.clone();
    out.amplitudes = x;
    out.t += cn.dt;
    Ok(out)
}
