//! Acceptance gate: one test per shipped guarantee, each at its contractual
//! tolerance on desk-scale grids. A `--nocapture` run prints one `[PASS]`
//! line per criterion with the measured headline numbers; a failure carries
//! the same numbers in its panic message.
//!
//! The criteria, in order:
//!
//!  1. Schrödinger residuals of the four closed-form families, with a
//!     mis-centered negative control that must fail loudly.
//!  2. Eigenvalue recovery on the grid and the offset energy gap qℰδy.
//!  3. Force balance (second differences of ⟨x⟩, ⟨y⟩) and conserved
//!     generators over one period of a coherent packet.
//!  4. Numerical tracking of the drifting ground state, with second-order
//!     convergence under dt halving.
//!  5. Position/momentum envelope exchange on a line grid.
//!  6. Grid probability current against the drift closed form.
//!  7. Hall quantization: integer plateaus, quadrature cross-check,
//!     translation-return invariance, and the 1% detuning counterexample.
//!  8. Longitudinal response: finite, monotone in time, zero at zero drive.
//!  9. Norm preservation of the three unitaries and their commutation with
//!     Ĥ − Ê.
//! 10. CLI end-to-end with the shipped configs, including manifest-re-run
//!     reproducibility.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use crossfield::evolve::{
    gaussian_packet, lorentz_check, reduced_drift_frame_run, split_step_evolve, EvolveSettings,
    ReducedSettings,
};
use crossfield::fourier::fourier_pair_check;
use crossfield::grid::{Axis2, GridSpec, Mask, SampledState};
use crossfield::observables::{
    current_density, drift_current_closed_form, hall_cell_offsets, hall_resistivity,
    klitzing_scale, longitudinal_resistivity, max_component_defect, quantization_scan,
    support_mask, translation_invariance, SUPPORT_REL_THRESHOLD,
};
use crossfield::ops::{
    apply_energy_op, apply_hamiltonian, mean_energy_grid, schrodinger_residual, unitary_translate,
    AnalyticOnGrid, FnState, SpaceShifted, TimeIndexedState, TimeShifted,
};
use crossfield::params::{DriftConstants, PhysicalParams};
use crossfield::states::{AnalyticState, Family};
use num_complex::Complex64;

fn residual_of(p: &PhysicalParams, base: &GridSpec, state: AnalyticState, t: f64) -> f64 {
    // Keep the drifting envelope centered; the window is not under test.
    let (axis, center) = state.envelope_center(p, t).expect("envelope center");
    let grid = base.recentered(axis, center, 0.5 * base.extent(axis));
    let traj = AnalyticOnGrid { state, params: *p, grid };
    schrodinger_residual(&traj, t).expect("residual evaluates").residual
}

#[test]
fn criterion_01_family_residuals_with_negative_control() {
    let base = GridSpec::centered_square(12.8, 512);
    let mut worst: f64 = 0.0;
    for field_e in [0.0, 1.0] {
        let p = PhysicalParams::natural(1.0, field_e);
        let period = p.cyclotron_period().unwrap();
        for family in [Family::Psi, Family::PsiBar, Family::Zeta, Family::ZetaBar] {
            for n in [0usize, 1, 2, 4] {
                let state = match family {
                    Family::Psi => AnalyticState::psi(n, 0.5),
                    Family::PsiBar => AnalyticState::psi_bar(n, 0.5),
                    Family::Zeta => AnalyticState::zeta(n),
                    Family::ZetaBar => AnalyticState::zeta_bar(n),
                    Family::Ground => unreachable!("not part of the four-family sweep"),
                };
                for tf in [0.0, 0.3, 0.7] {
                    let r = residual_of(&p, &base, state, tf * period);
                    assert!(
                        r < 1e-5,
                        "{family} n={n} t={tf}T at E={field_e}: residual {r:.3e} exceeds 1e-5"
                    );
                    worst = worst.max(r);
                }
            }
        }
    }

    // Negative control: the right envelope displaced 0.3 off its center
    // line is no longer a solution, and the residual must say so loudly.
    let p = PhysicalParams::natural(1.0, 1.0);
    let ev = AnalyticState::zeta(0).evaluator(&p).unwrap();
    let control =
        FnState { f: move |t| SampledState::from_fn(base, p, t, |x, y| ev.eval(x, y - 0.3, t)) };
    let bad = schrodinger_residual(&control, 0.0).unwrap().residual;
    assert!(bad > 1e-2, "mis-centered envelope still passes as a solution: residual {bad:.3e}");
    println!(
        "[PASS] 1. family residuals on 512x512: worst {worst:.3e} < 1e-5; \
         mis-centered control {bad:.3e} > 1e-2"
    );
}

#[test]
fn criterion_02_eigenvalue_recovery_and_offset_gap() {
    // E = 0.5 keeps every level's energy away from zero (at B = E = 1 the
    // n = 0 value is exactly 0 and a relative comparison is ill-posed).
    let p = PhysicalParams::natural(1.0, 0.5);
    let grid = GridSpec::centered_square(12.8, 512);
    let delta_y = 0.5;
    let gap_expected = p.charge * p.field_e * delta_y;
    let mut worst_rel: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for n in [0usize, 1, 2, 4] {
        let zeta = AnalyticState::zeta(n);
        let e_closed = zeta.mean_energy(&p).unwrap();
        let e_grid = mean_energy_grid(&zeta.sample(&p, &grid, 0.0).unwrap()).unwrap();
        let rel = ((e_grid - e_closed) / e_closed).abs();
        assert!(
            rel < 1e-6,
            "zeta n={n}: grid <H> {e_grid:.12} vs closed form {e_closed:.12} (rel {rel:.2e})"
        );
        worst_rel = worst_rel.max(rel);

        // The y-offset family sits qEδy lower; in closed form the
        // subtraction must land on that product at double precision.
        let psi = AnalyticState::psi(n, delta_y);
        let gap_closed = zeta.phase_energy(&p).unwrap() - psi.phase_energy(&p).unwrap();
        assert!(
            (gap_closed - gap_expected).abs() < 1e-13,
            "closed-form gap {gap_closed:.17} differs from qE*dy {gap_expected:.17}"
        );

        // Same gap from two independent grid quadratures.
        let (axis, center) = psi.envelope_center(&p, 0.0).unwrap();
        let pgrid = grid.recentered(axis, center, 0.5 * grid.extent(axis));
        let e_psi = mean_energy_grid(&psi.sample(&p, &pgrid, 0.0).unwrap()).unwrap();
        let rel_gap = ((e_grid - e_psi - gap_expected) / gap_expected).abs();
        assert!(
            rel_gap < 1e-6,
            "grid gap n={n}: {:.12} vs qE*dy {gap_expected} (rel {rel_gap:.2e})",
            e_grid - e_psi
        );
        worst_gap = worst_gap.max(rel_gap);
    }
    println!(
        "[PASS] 2. eigenvalues: worst grid/closed defect {worst_rel:.3e} < 1e-6; \
         offset gap exact in closed form, worst grid defect {worst_gap:.3e} < 1e-6"
    );
}

#[test]
fn criterion_03_force_balance_and_conserved_generators() {
    let p = PhysicalParams::natural(1.0, 1.0);
    let grid = GridSpec::centered_square(12.8, 256);
    let period = p.cyclotron_period().unwrap();
    let dt = period / 20_000.0;

    let packet = gaussian_packet(&p, &grid, (0.0, 1.0), (0.0, 0.0)).unwrap();
    let settings = EvolveSettings { dt, steps: 20_000, record_every: 200 };
    let outcome = split_step_evolve(&packet, &settings).unwrap();
    let report = lorentz_check(&outcome.trajectory, &p).unwrap();
    // One oscillator momentum quantum sets the generator-drift scale.
    let momentum_scale = p.mass * p.omega_c().abs() * p.magnetic_length().unwrap();

    assert!(
        report.max_defect < 1e-3,
        "force-balance relative defect {:.3e} exceeds 1e-3 over one period",
        report.max_defect
    );
    assert!(
        report.pi_x_drift < 1e-6 * momentum_scale,
        "x-generator drifted {:.3e} (limit {:.1e})",
        report.pi_x_drift,
        1e-6 * momentum_scale
    );
    assert!(
        report.pi_y_drift < 1e-6 * momentum_scale,
        "y-generator drifted {:.3e} (limit {:.1e})",
        report.pi_y_drift,
        1e-6 * momentum_scale
    );
    println!(
        "[PASS] 3. force balance over one period: defect {:.3e} < 1e-3; \
         generator drifts {:.1e}, {:.1e} < 1e-6 quanta",
        report.max_defect, report.pi_x_drift, report.pi_y_drift
    );
}

#[test]
fn criterion_04_ground_tracking_and_dt_convergence() {
    let p = PhysicalParams::natural(1.0, 1.0);
    let period = p.cyclotron_period().unwrap();
    let state = AnalyticState::ground(0.0, 0.0);
    let dt = period / 2000.0;
    let settings =
        |t_final: f64, dt: f64| ReducedSettings { n_points: 1024, half_width: 18.0, dt, t_final };

    // Quarter-period checkpoints land on whole steps (500 dt each).
    let mut min_overlap = f64::INFINITY;
    for quarter in 1..=4u32 {
        let t = f64::from(quarter) * period / 4.0;
        let out = reduced_drift_frame_run(&p, &state, &settings(t, dt)).unwrap();
        assert!(
            out.overlap > 0.999,
            "tracking overlap {:.12} at t = {quarter}T/4 fell below 0.999",
            out.overlap
        );
        min_overlap = min_overlap.min(out.overlap);
    }

    let full = reduced_drift_frame_run(&p, &state, &settings(period, dt)).unwrap();
    let half = reduced_drift_frame_run(&p, &state, &settings(period, 0.5 * dt)).unwrap();
    let ratio = full.rel_error / half.rel_error;
    assert!(
        (3.0..=5.0).contains(&ratio),
        "terminal error ratio under dt/2 is {ratio:.3}, outside the second-order band [3, 5] \
         ({:.3e} vs {:.3e})",
        full.rel_error,
        half.rel_error
    );
    println!(
        "[PASS] 4. ground tracking at dt = T/2000: overlap floor {min_overlap:.12} > 0.999; \
         dt/2 error ratio {ratio:.4} in [3, 5]"
    );
}

#[test]
fn criterion_05_envelope_exchange_on_the_line() {
    let mut worst: f64 = 0.0;
    for n in 0..=3usize {
        for a in [0.0, 0.25, 1.0] {
            let check = fourier_pair_check(n, a, 4096, 14.0).unwrap();
            assert!(
                check.residual_l2 < 1e-6 && check.residual_max < 1e-6,
                "n={n} shift={a}: exchange residuals l2 {:.3e} / max {:.3e} exceed 1e-6",
                check.residual_l2,
                check.residual_max
            );
            worst = worst.max(check.residual_l2).max(check.residual_max);
        }
    }
    println!("[PASS] 5. envelope exchange, n <= 3, shifts {{0, 0.25, 1}}: worst {worst:.3e} < 1e-6");
}

#[test]
fn criterion_06_grid_current_matches_the_closed_form() {
    let p = PhysicalParams::natural(1.0, 1.0);
    let grid = GridSpec::centered_square(12.8, 512);
    let state = AnalyticState::zeta_bar(0);
    let sampled = state.sample(&p, &grid, 0.0).unwrap();
    let field = current_density(&sampled, true).unwrap();
    let (jx_ref, jy_ref) = drift_current_closed_form(&state, &p, &grid, 0.0).unwrap();
    let support = support_mask(&sampled, SUPPORT_REL_THRESHOLD);
    let dx = max_component_defect(&field.j_x, &jx_ref, &support, field.mask).unwrap();
    let dy = max_component_defect(&field.j_y, &jy_ref, &support, field.mask).unwrap();
    assert!(dx < 1e-5, "j_x relative defect {dx:.3e} on the envelope support exceeds 1e-5");
    assert!(dy < 1e-5, "j_y relative defect {dy:.3e} on the envelope support exceeds 1e-5");
    println!("[PASS] 6. grid current vs closed form: j_x defect {dx:.3e}, j_y defect {dy:.3e} < 1e-5");
}

#[test]
fn criterion_07_hall_quantization_and_detuning_counterexample() {
    let p = PhysicalParams::natural(1.0, 1.0);
    let grid = GridSpec::centered_square(12.8, 256);
    let delta_y = 2.5;
    let rows = quantization_scan(&p, &grid, delta_y, 1, &[1, 2, 3, 4, 5], 64).unwrap();
    assert_eq!(rows.len(), 5, "one rung per winding");
    for row in &rows {
        let off = (row.rho_over_klitzing - f64::from(row.l)).abs();
        assert!(
            off <= 1e-12,
            "l={}: closed-form plateau ratio {:.17} missed the integer by {off:.3e}",
            row.l,
            row.rho_over_klitzing
        );
        assert!(
            row.quadrature_rel_defect < 1e-9,
            "l={}: quadrature disagrees with the closed form by {:.3e}",
            row.l,
            row.quadrature_rel_defect
        );
        assert!(
            row.invariance_defect < 1e-8,
            "l={}: translation return missed identity by {:.3e}",
            row.l,
            row.invariance_defect
        );
    }

    // Detune the same cell by 1% in δx: the plateau ratio leaves the
    // integer and the translation return breaks, together.
    let (dx, dt_off) = hall_cell_offsets(&p, 1, 1, delta_y).unwrap();
    let detuned_ratio = hall_resistivity(&p, 1.01 * dx, delta_y).unwrap() / klitzing_scale(&p);
    let off_integer = (detuned_ratio - detuned_ratio.round()).abs();
    assert!(
        off_integer > 5e-3,
        "1% cell detuning left the plateau ratio near-integer: {detuned_ratio:.12}"
    );
    let detuned = AnalyticState::ground(1.01 * dx, dt_off);
    let dgrid = grid.recentered(Axis2::X, 1.01 * dx, 0.5 * grid.extent(Axis2::X));
    let report = translation_invariance(&detuned, &p, &dgrid, dt_off, delta_y).unwrap();
    assert!(
        report.invariance_defect > 1e-3,
        "1% cell detuning failed to break the translation return (defect {:.3e})",
        report.invariance_defect
    );
    // The measurement itself still matches its closed-form prediction: only
    // the quantization condition failed, not the apparatus.
    assert!(
        report.prediction_defect < 1e-8,
        "detuned-cell phase measurement drifted from its prediction by {:.3e}",
        report.prediction_defect
    );
    let worst_inv =
        rows.iter().map(|r| r.invariance_defect).fold(0.0f64, f64::max);
    println!(
        "[PASS] 7. plateaus l=1..5 integer to 1e-12, quadrature < 1e-9, return defect \
         {worst_inv:.1e} < 1e-8; 1% detuning moves ratio to {detuned_ratio:.4} and breaks the \
         return (defect {:.2e})",
        report.invariance_defect
    );
}

#[test]
fn criterion_08_longitudinal_finite_monotone_and_zero_at_zero_drive() {
    let p = PhysicalParams::natural(1.0, 1.0);
    let state = AnalyticState::zeta_bar(0);
    let drift = DriftConstants::derive(&p).unwrap();
    let delta_x = 0.5;
    // Stop at 0.9 of the envelope-arrival time: the probe line must stay
    // ahead of the drifting center where the response is finite.
    let t_max = 0.9 * delta_x / drift.v_d;
    let mut values = Vec::with_capacity(10);
    for i in 0..10 {
        let t = t_max * f64::from(i) / 9.0;
        let rho = longitudinal_resistivity(&state, &p, delta_x, t).unwrap();
        assert!(rho.is_finite(), "longitudinal response diverged at t={t:.4}");
        values.push(rho);
    }
    for w in values.windows(2) {
        assert!(
            w[1] > w[0],
            "longitudinal response must grow toward envelope arrival: {:.6e} then {:.6e}",
            w[0],
            w[1]
        );
    }

    let p0 = PhysicalParams::natural(1.0, 0.0);
    let rho0 = longitudinal_resistivity(&state, &p0, delta_x, 0.3).unwrap();
    assert_eq!(rho0, 0.0, "zero drive must read exactly zero, got {rho0:.3e}");
    println!(
        "[PASS] 8. longitudinal response finite and monotone over [0, 0.9 t_arrival] \
         ({:.4e} -> {:.4e}); exactly 0 at zero drive",
        values[0],
        values[values.len() - 1]
    );
}

#[test]
fn criterion_09_unitaries_preserve_norm_and_commute_with_h_minus_e() {
    let p = PhysicalParams::natural(1.0, 1.0);
    let grid = GridSpec::centered_square(12.8, 256);
    let zeta0 = AnalyticState::zeta(0);
    let t = 0.2;
    let h_y = grid.step(Axis2::Y);
    let dy = 20.0 * h_y; // y-shifts ride the grid ladder

    // Norm preservation of all three unitaries.
    let s = zeta0.sample(&p, &grid, t).unwrap();
    let n0 = s.norm();
    let nx = unitary_translate(&s, Axis2::X, 0.37).unwrap().norm();
    let ny = unitary_translate(&s, Axis2::Y, dy).unwrap().norm();
    let base: Arc<dyn TimeIndexedState> =
        Arc::new(AnalyticOnGrid { state: zeta0, params: p, grid });
    let nt = TimeShifted { base, delta_t: 0.3 }.state_at(t).unwrap().norm();
    for (label, n) in [("x-shift", nx), ("y-shift", ny), ("time-shift", nt)] {
        assert!(
            ((n - n0) / n0).abs() < 1e-10,
            "{label} changed the window norm: {n0:.15} -> {n:.15}"
        );
    }

    // Commutation with Ĥ − Ê, on a unit-norm trajectory that is NOT a
    // solution: two plane-wave modes riding the zeta envelope, detuned by an
    // extra phase rate so Ĥ − Ê has a finite state to act on. Both modes and
    // the y-shift's gauge phase sit on the grid's x-mode lattice, so every
    // derivative stays spectral — the 1e-8 bar is far below the truncation
    // of any stencil fallback and would be meaningless there. Ê runs with a
    // 1e-6-period half-step: its curvature error scales as (rate·Δt)², and
    // the y-shift raises the phase rate to ~2.3ħ, which the default step
    // would resolve only to ~4e-6.
    let energy_dt = Some(1e-6);
    let detune = 0.3;
    let dk = 2.0 * std::f64::consts::PI / grid.extent(Axis2::X);
    let (k1, k2) = (5.0 * dk, -3.0 * dk);
    // Gauge phase exp(−i δy mω_c x/ħ) lands on the lattice: δy = 8·dk·ħ/mω_c.
    let dy_gauge = 8.0 * dk * p.hbar / (p.mass * p.omega_c());
    let unit = (2.0 * grid.extent(Axis2::X)).sqrt().recip();
    let ev = zeta0.evaluator(&p).unwrap();
    let make_traj = move || -> Arc<dyn TimeIndexedState> {
        Arc::new(FnState {
            f: move |tt: f64| {
                SampledState::from_fn(grid, p, tt, |x, y| {
                    let modes = Complex64::from_polar(1.0, k1 * x)
                        + Complex64::from_polar(1.0, k2 * x);
                    ev.eval(x, y, tt) * modes * Complex64::from_polar(unit, detune * tt)
                })
            },
        })
    };
    let mangled = make_traj();
    // Defect state and the interior mask its Ĥ application declares valid;
    // norms on both sides of each comparison use the union of the two masks.
    let defect_state = |traj: &dyn TimeIndexedState, tt: f64| -> (SampledState, Mask) {
        let s = traj.state_at(tt).unwrap();
        let applied = apply_hamiltonian(&s).unwrap();
        let e = apply_energy_op(traj, tt, energy_dt).unwrap();
        let mut d = applied.state;
        d.amplitudes.zip_mut_with(&e.amplitudes, |a, b| *a -= *b);
        (d, applied.mask)
    };
    let masked_pair = |a: &SampledState, ma: Mask, b: &SampledState, mb: Mask| -> (f64, f64) {
        let m = Mask::new(ma.x.max(mb.x), ma.y.max(mb.y));
        (a.norm_masked(m).unwrap(), b.norm_masked(m).unwrap())
    };
    let (d_ref, m_ref) = defect_state(mangled.as_ref(), t);
    assert!(
        d_ref.norm() > 0.1,
        "the detuned trajectory should defect at O(detune + mode energies), got {:.3e}",
        d_ref.norm()
    );

    let x_shift = SpaceShifted { base: mangled.clone(), axis: Axis2::X, delta: 0.37 };
    let (d_l, m_l) = defect_state(&x_shift, t);
    let u_ref = unitary_translate(&d_ref, Axis2::X, 0.37).unwrap();
    let (lhs, rhs) = masked_pair(&d_l, m_l, &u_ref, m_ref);
    assert!(
        (lhs - rhs).abs() < 1e-8,
        "x-shift does not commute with H - E: {lhs:.12} vs {rhs:.12}"
    );
    let dx_comm = (lhs - rhs).abs();

    let y_shift = SpaceShifted { base: mangled.clone(), axis: Axis2::Y, delta: dy_gauge };
    let (d_l, m_l) = defect_state(&y_shift, t);
    let u_ref = unitary_translate(&d_ref, Axis2::Y, dy_gauge).unwrap();
    let (lhs, rhs) = masked_pair(&d_l, m_l, &u_ref, m_ref);
    assert!(
        (lhs - rhs).abs() < 1e-8,
        "magnetic y-shift does not commute with H - E: {lhs:.12} vs {rhs:.12}"
    );
    let dy_comm = (lhs - rhs).abs();

    let t_shift = TimeShifted { base: mangled, delta_t: 0.3 };
    let (d_l, m_l) = defect_state(&t_shift, t);
    let shifted_ref = make_traj();
    let (d_r, m_r) = defect_state(shifted_ref.as_ref(), t + 0.3);
    let (lhs, rhs) = masked_pair(&d_l, m_l, &d_r, m_r);
    assert!(
        (lhs - rhs).abs() < 1e-8,
        "time shift does not commute with H - E: {lhs:.12} vs {rhs:.12}"
    );
    println!(
        "[PASS] 9. unitaries norm-preserving < 1e-10; H - E commutation defects \
         {dx_comm:.1e}, {dy_comm:.1e}, {:.1e} < 1e-8",
        (lhs - rhs).abs()
    );
}

#[test]
fn criterion_10_cli_end_to_end_with_shipped_configs() {
    let bin = env!("CARGO_BIN_EXE_crossfield");
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");

    let run = |config: &Path, out: &Path| {
        Command::new(bin)
            .arg("verify")
            .arg("--config")
            .arg(config)
            .arg("--out")
            .arg(out)
            .arg("--quiet")
            .status()
            .expect("binary spawns")
    };

    let first = tempfile::tempdir().unwrap();
    let status = run(&configs.join("verify.toml"), first.path());
    assert!(status.success(), "verify scenario exited with {status}");

    let raw = fs::read_to_string(first.path().join("summary.json")).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&raw).expect("summary parses as JSON");
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["scenario"], "verify-solutions");
    assert_eq!(summary["passed"], true, "shipped verify config should pass every check");
    let checks = summary["assertions"].as_array().unwrap();
    assert!(!checks.is_empty(), "summary carries per-check entries");
    for entry in checks {
        for key in ["name", "passed", "value", "threshold", "comparison"] {
            assert!(entry.get(key).is_some(), "assertion entry missing `{key}`: {entry}");
        }
    }

    // Re-running the emitted manifest must reproduce the verdict bytes.
    let second = tempfile::tempdir().unwrap();
    let status = run(&first.path().join("manifest.toml"), second.path());
    assert!(status.success(), "manifest re-run exited with {status}");
    assert_eq!(
        fs::read(first.path().join("summary.json")).unwrap(),
        fs::read(second.path().join("summary.json")).unwrap(),
        "manifest re-run must reproduce summary.json byte for byte"
    );

    let resist_out = tempfile::tempdir().unwrap();
    let status = Command::new(bin)
        .arg("resistivity")
        .arg("--config")
        .arg(configs.join("resistivity.toml"))
        .arg("--out")
        .arg(resist_out.path())
        .arg("--quiet")
        .status()
        .expect("binary spawns");
    assert!(status.success(), "resistivity scenario exited with {status}");
    let raw = fs::read_to_string(resist_out.path().join("summary.json")).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&raw).unwrap();
    assert_eq!(summary["scenario"], "resistivity-scan");
    assert_eq!(summary["passed"], true, "shipped resistivity config should pass every check");
    println!(
        "[PASS] 10. CLI verify + resistivity exit 0 on shipped configs; summaries validate; \
         manifest re-run reproduces the verdict bytes"
    );
}
