//! Differentiation and translation on uniform grids.
//!
//! Two engines, chosen per axis:
//!
//! * spectral — FFT, multiply by (ik)^order, inverse FFT. Exact for content
//!   that is band-limited and periodic on the axis; the default everywhere a
//!   state decays before the boundary.
//! * stencil — central finite differences of selectable radius (Fornberg
//!   weights). Wavenumber-local, so it also serves states that fill the axis
//!   with a non-commensurate plane wave, at the cost of a boundary seam one
//!   stencil-radius wide; callers mask that band out of any norm they take.
//!   Non-periodic axes switch to one-sided stencils at the edges instead.
//!
//! Wavenumber layout follows the usual FFT order: j ∈ [0, n) maps to
//! frequency j for j < ⌈n/2⌉ and j − n above, k = 2π·freq/extent.

use crate::error::{Error, Result};
use crate::grid::Axis2;
use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::{Arc, Mutex, OnceLock};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static P: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    P.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().expect("fft planner poisoned");
    if inverse {
        p.plan_fft_inverse(len)
    } else {
        p.plan_fft_forward(len)
    }
}

/// In-place FFT along one axis. Inverse includes the 1/n normalization, so
/// forward∘inverse is the identity.
pub fn fft_axis(arr: &mut Array2<Complex64>, axis: Axis2, inverse: bool) {
    let (nx, ny) = (arr.nrows(), arr.ncols());
    let n = match axis {
        Axis2::X => nx,
        Axis2::Y => ny,
    };
    let fft = plan(n, inverse);
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    match axis {
        Axis2::Y => {
            // Rows are contiguous in standard layout.
            arr.axis_iter_mut(Axis(0))
                .into_par_iter()
                .for_each_init(
                    || vec![Complex64::default(); fft.get_inplace_scratch_len()],
                    |scratch, mut row| {
                        let slice = row.as_slice_mut().expect("row not contiguous");
                        fft.process_with_scratch(slice, scratch);
                        if inverse {
                            for v in slice.iter_mut() {
                                *v *= scale;
                            }
                        }
                    },
                );
        }
        Axis2::X => {
            // Columns are strided: gather, transform, scatter.
            arr.axis_iter_mut(Axis(1))
                .into_par_iter()
                .for_each_init(
                    || {
                        (
                            vec![Complex64::default(); n],
                            vec![Complex64::default(); fft.get_inplace_scratch_len()],
                        )
                    },
                    |(buf, scratch), mut col| {
                        for (b, v) in buf.iter_mut().zip(col.iter()) {
                            *b = *v;
                        }
                        fft.process_with_scratch(buf, scratch);
                        for (v, b) in col.iter_mut().zip(buf.iter()) {
                            *v = if inverse { *b * scale } else { *b };
                        }
                    },
                );
        }
    }
}

/// Angular wavenumbers for an n-point axis of physical extent L.
pub fn wavenumbers(n: usize, extent: f64) -> Vec<f64> {
    let base = std::f64::consts::TAU / extent;
    (0..n)
        .map(|j| {
            let f = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
            base * f
        })
        .collect()
}

/// Multiply each mode along `axis` by `factor(k)`; the caller supplies the
/// spectral-space array.
fn apply_mode_factor<F>(spec: &mut Array2<Complex64>, axis: Axis2, ks: &[f64], factor: F)
where
    F: Fn(f64) -> Complex64 + Sync,
{
    match axis {
        Axis2::X => {
            Zip::indexed(spec).par_for_each(|(i, _), v| *v *= factor(ks[i]));
        }
        Axis2::Y => {
            Zip::indexed(spec).par_for_each(|(_, j), v| *v *= factor(ks[j]));
        }
    }
}

/// d^order/d(axis)^order by FFT. `extent` is the axis length in physical units.
pub fn spectral_derivative(
    arr: &Array2<Complex64>,
    axis: Axis2,
    extent: f64,
    order: u32,
) -> Array2<Complex64> {
    let mut spec = arr.clone();
    fft_axis(&mut spec, axis, false);
    let n = match axis {
        Axis2::X => arr.nrows(),
        Axis2::Y => arr.ncols(),
    };
    let ks = wavenumbers(n, extent);
    apply_mode_factor(&mut spec, axis, &ks, |k| Complex64::new(0.0, k).powu(order));
    fft_axis(&mut spec, axis, true);
    spec
}

/// ψ(x) → ψ(x − amount) along `axis`, exact for band-limited periodic content.
pub fn spectral_shift(
    arr: &Array2<Complex64>,
    axis: Axis2,
    extent: f64,
    amount: f64,
) -> Array2<Complex64> {
    let mut spec = arr.clone();
    fft_axis(&mut spec, axis, false);
    let n = match axis {
        Axis2::X => arr.nrows(),
        Axis2::Y => arr.ncols(),
    };
    let ks = wavenumbers(n, extent);
    apply_mode_factor(&mut spec, axis, &ks, |k| {
        Complex64::from_polar(1.0, -k * amount)
    });
    fft_axis(&mut spec, axis, true);
    spec
}

/// Integer-step cyclic roll: out[i] = in[i − steps mod n], i.e. a translation
/// by +steps·h. Exact (a permutation), periodic axes only make sense here.
pub fn roll(arr: &Array2<Complex64>, axis: Axis2, steps: i64) -> Array2<Complex64> {
    let n = match axis {
        Axis2::X => arr.nrows(),
        Axis2::Y => arr.ncols(),
    } as i64;
    let mut out = arr.clone();
    let shift = steps.rem_euclid(n) as usize;
    if shift == 0 {
        return out;
    }
    match axis {
        Axis2::X => {
            for i in 0..arr.nrows() {
                let src = (i as i64 - steps).rem_euclid(n) as usize;
                out.row_mut(i).assign(&arr.row(src));
            }
        }
        Axis2::Y => {
            for j in 0..arr.ncols() {
                let src = (j as i64 - steps).rem_euclid(n) as usize;
                out.column_mut(j).assign(&arr.column(src));
            }
        }
    }
    out
}

/// Fornberg weights: coefficients w_i such that f^(m)(z) ≈ Σ w_i f(nodes_i).
/// Nodes must be distinct; any spacing works.
pub fn fornberg_weights(order: usize, z: f64, nodes: &[f64]) -> Vec<f64> {
    assert!(
        nodes.len() > order,
        "need more than {order} nodes, got {}",
        nodes.len()
    );
    let n = nodes.len();
    let m = order;
    let mut c = vec![vec![0.0f64; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Central-stencil weights for d^order/dx^order with the given radius, unit
/// step. Scale by h^(−order) at use.
fn central_weights(order: usize, radius: usize) -> Vec<f64> {
    let nodes: Vec<f64> = (-(radius as i64)..=radius as i64).map(|k| k as f64).collect();
    fornberg_weights(order, 0.0, &nodes)
}

/// Finite-difference derivative along `axis`. Periodic axes wrap (the seam
/// band of width `radius` is where wrap error lives for non-periodic content);
/// non-periodic axes use one-sided stencils of the same node count at edges.
pub fn fd_derivative(
    arr: &Array2<Complex64>,
    axis: Axis2,
    step: f64,
    order: usize,
    radius: usize,
    periodic: bool,
) -> Result<Array2<Complex64>> {
    let n = match axis {
        Axis2::X => arr.nrows(),
        Axis2::Y => arr.ncols(),
    };
    let width = 2 * radius + 1;
    if width > n {
        return Err(Error::InvalidGrid(format!(
            "stencil width {width} exceeds axis length {n}"
        )));
    }
    let inv_h = 1.0 / step.powi(order as i32);
    let central: Vec<f64> = central_weights(order, radius).iter().map(|w| w * inv_h).collect();
    // One-sided stencils for the first/last `radius` points (non-periodic).
    let edge: Vec<Vec<f64>> = if periodic {
        Vec::new()
    } else {
        (0..radius)
            .map(|i| {
                let nodes: Vec<f64> = (0..width).map(|k| (k as i64 - i as i64) as f64).collect();
                fornberg_weights(order, 0.0, &nodes)
                    .iter()
                    .map(|w| w * inv_h)
                    .collect()
            })
            .collect()
    };

    let other = match axis {
        Axis2::X => arr.ncols(),
        Axis2::Y => arr.nrows(),
    };
    let mut out = Array2::<Complex64>::zeros(arr.dim());

    let line = |idx_other: usize, out_line: &mut [Complex64]| {
        let get = |i: usize| -> Complex64 {
            match axis {
                Axis2::X => arr[(i, idx_other)],
                Axis2::Y => arr[(idx_other, i)],
            }
        };
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            if periodic {
                for (kk, w) in central.iter().enumerate() {
                    let off = kk as i64 - radius as i64;
                    let src = (i as i64 + off).rem_euclid(n as i64) as usize;
                    acc += get(src) * *w;
                }
            } else if i < radius {
                for (kk, w) in edge[i].iter().enumerate() {
                    acc += get(kk) * *w;
                }
            } else if i >= n - radius {
                // Mirror of the leading edge: stencil anchored at the tail.
                let j = n - 1 - i;
                for (kk, w) in edge[j].iter().enumerate() {
                    acc += get(n - 1 - kk) * *w * if order % 2 == 1 { -1.0 } else { 1.0 };
                }
            } else {
                for (kk, w) in central.iter().enumerate() {
                    let off = kk as i64 - radius as i64;
                    acc += get((i as i64 + off) as usize) * *w;
                }
            }
            out_line[i] = acc;
        }
    };

    match axis {
        Axis2::X => {
            let mut cols: Vec<Vec<Complex64>> = (0..other)
                .into_par_iter()
                .map(|j| {
                    let mut buf = vec![Complex64::default(); n];
                    line(j, &mut buf);
                    buf
                })
                .collect();
            for (j, col) in cols.drain(..).enumerate() {
                for (i, v) in col.into_iter().enumerate() {
                    out[(i, j)] = v;
                }
            }
        }
        Axis2::Y => {
            let rows: Vec<Vec<Complex64>> = (0..other)
                .into_par_iter()
                .map(|i| {
                    let mut buf = vec![Complex64::default(); n];
                    line(i, &mut buf);
                    buf
                })
                .collect();
            for (i, row) in rows.into_iter().enumerate() {
                for (j, v) in row.into_iter().enumerate() {
                    out[(i, j)] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Fraction of spectral power in the outer 10% wavenumber band of `axis`.
/// A healthy band-limited state leaves this at round-off level; content
/// pressing against Nyquist means the grid under-resolves the state.
pub fn top_band_fraction(arr: &Array2<Complex64>, axis: Axis2) -> f64 {
    let mut spec = arr.clone();
    fft_axis(&mut spec, axis, false);
    let n = match axis {
        Axis2::X => arr.nrows(),
        Axis2::Y => arr.ncols(),
    };
    let half = n / 2;
    let cut = (0.9 * half as f64) as usize;
    let mut total = 0.0;
    let mut top = 0.0;
    for ((i, j), v) in spec.indexed_iter() {
        let idx = match axis {
            Axis2::X => i,
            Axis2::Y => j,
        };
        let f = if idx < n.div_ceil(2) { idx } else { n - idx };
        let p = v.norm_sqr();
        total += p;
        if f >= cut {
            top += p;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        top / total
    }
}
