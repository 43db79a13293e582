//! Uniform 2-D grids and sampled wavefunctions.
//!
//! Points are half-open: x_i = x_min + i·h_x with h_x = (x_max − x_min)/n_x,
//! so x_max itself is excluded — on periodic axes it aliases x_min. All
//! integrals are plain cell sums weighted by h_x·h_y (the window norm).
//!
//! `SampledState` doubles as the on-disk container: a fixed little-endian
//! layout (magic, version, params, grid, timestamp, row-major re/im pairs)
//! chosen so that write→read round-trips bit for bit.

use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis2 {
    X,
    Y,
}

impl Axis2 {
    pub fn label(self) -> char {
        match self {
            Axis2::X => 'x',
            Axis2::Y => 'y',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub periodic_x: bool,
    pub periodic_y: bool,
}

impl GridSpec {
    /// Doubly periodic square [−half, half)² with n points per side.
    pub fn centered_square(half: f64, n: usize) -> Self {
        Self {
            x_min: -half,
            x_max: half,
            y_min: -half,
            y_max: half,
            n_x: n,
            n_y: n,
            periodic_x: true,
            periodic_y: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.x_min, self.x_max, self.y_min, self.y_max] {
            if !v.is_finite() {
                return Err(Error::InvalidGrid("non-finite extent".into()));
            }
        }
        if self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(Error::InvalidGrid(format!(
                "empty extent: x [{}, {}), y [{}, {})",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.n_x < 8 || self.n_y < 8 {
            return Err(Error::InvalidGrid(format!(
                "need at least 8 points per axis, got {}x{}",
                self.n_x, self.n_y
            )));
        }
        if self.n_x.checked_mul(self.n_y).is_none_or(|t| t > 1 << 28) {
            return Err(Error::InvalidGrid(format!(
                "grid {}x{} exceeds the supported size",
                self.n_x, self.n_y
            )));
        }
        Ok(())
    }

    pub fn step_x(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }

    pub fn step_y(&self) -> f64 {
        (self.y_max - self.y_min) / self.n_y as f64
    }

    pub fn step(&self, axis: Axis2) -> f64 {
        match axis {
            Axis2::X => self.step_x(),
            Axis2::Y => self.step_y(),
        }
    }

    pub fn len(&self, axis: Axis2) -> usize {
        match axis {
            Axis2::X => self.n_x,
            Axis2::Y => self.n_y,
        }
    }

    pub fn extent(&self, axis: Axis2) -> f64 {
        match axis {
            Axis2::X => self.x_max - self.x_min,
            Axis2::Y => self.y_max - self.y_min,
        }
    }

    pub fn axis_min(&self, axis: Axis2) -> f64 {
        match axis {
            Axis2::X => self.x_min,
            Axis2::Y => self.y_min,
        }
    }

    pub fn is_periodic(&self, axis: Axis2) -> bool {
        match axis {
            Axis2::X => self.periodic_x,
            Axis2::Y => self.periodic_y,
        }
    }

    pub fn cell_area(&self) -> f64 {
        self.step_x() * self.step_y()
    }

    pub fn xs(&self) -> Vec<f64> {
        let h = self.step_x();
        (0..self.n_x).map(|i| self.x_min + i as f64 * h).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        let h = self.step_y();
        (0..self.n_y).map(|i| self.y_min + i as f64 * h).collect()
    }

    pub fn axis_points(&self, axis: Axis2) -> Vec<f64> {
        match axis {
            Axis2::X => self.xs(),
            Axis2::Y => self.ys(),
        }
    }

    /// Whether `coord` sits at least `margin` inside both extents of `axis`.
    pub fn contains_with_margin(&self, axis: Axis2, coord: f64, margin: f64) -> bool {
        let (lo, hi) = match axis {
            Axis2::X => (self.x_min, self.x_max),
            Axis2::Y => (self.y_min, self.y_max),
        };
        coord - margin >= lo && coord + margin <= hi
    }

    /// Re-center one axis on `center` with half-width `half`, keeping the
    /// point count. Used by the containment auto-expansion.
    pub fn recentered(&self, axis: Axis2, center: f64, half: f64) -> Self {
        let mut g = *self;
        match axis {
            Axis2::X => {
                g.x_min = center - half;
                g.x_max = center + half;
            }
            Axis2::Y => {
                g.y_min = center - half;
                g.y_max = center + half;
            }
        }
        g
    }
}

#[derive(Debug, Clone)]
pub struct SampledState {
    pub grid: GridSpec,
    pub params: PhysicalParams,
    pub t: f64,
    /// Shape (n_x, n_y): first index walks x, second walks y.
    pub amplitudes: Array2<Complex64>,
}

/// Interior mask in grid points per axis; `0` keeps the full window.
/// Comparisons on axes differentiated by wrap-around stencils exclude the
/// seam bands on both sides.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Mask {
    pub x: usize,
    pub y: usize,
}

impl Mask {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

impl SampledState {
    pub fn zeros(grid: GridSpec, params: PhysicalParams, t: f64) -> Result<Self> {
        grid.validate()?;
        Ok(Self {
            grid,
            params,
            t,
            amplitudes: Array2::zeros((grid.n_x, grid.n_y)),
        })
    }

    /// Sample `f(x, y)` over the grid, parallel over rows.
    pub fn from_fn<F>(grid: GridSpec, params: PhysicalParams, t: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        grid.validate()?;
        let mut amplitudes = Array2::zeros((grid.n_x, grid.n_y));
        let (hy, y_min) = (grid.step(Axis2::Y), grid.y_min);
        amplitudes
            .axis_iter_mut(ndarray::Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(ix, mut row)| {
                let x = grid.x_min + ix as f64 * grid.step(Axis2::X);
                for (iy, v) in row.iter_mut().enumerate() {
                    *v = f(x, y_min + iy as f64 * hy);
                }
            });
        let s = Self { grid, params, t, amplitudes };
        s.check_finite()?;
        Ok(s)
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.amplitudes.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("sampled amplitudes".into()))
        }
    }

    fn mask_ranges(&self, mask: Mask) -> Result<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        let (nx, ny) = (self.grid.n_x, self.grid.n_y);
        if 2 * mask.x >= nx || 2 * mask.y >= ny {
            return Err(Error::EmptyMask(format!(
                "margins {}x{} swallow the {}x{} grid",
                mask.x, mask.y, nx, ny
            )));
        }
        Ok((mask.x..nx - mask.x, mask.y..ny - mask.y))
    }

    /// ⟨a|b⟩ over the masked window, conjugating `self`.
    pub fn inner_masked(&self, other: &Self, mask: Mask) -> Result<Complex64> {
        let (rx, ry) = self.mask_ranges(mask)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for ix in rx {
            for iy in ry.clone() {
                acc += self.amplitudes[(ix, iy)].conj() * other.amplitudes[(ix, iy)];
            }
        }
        Ok(acc * self.grid.cell_area())
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.inner_masked(other, Mask::default()).expect("zero mask cannot fail")
    }

    pub fn norm_sq_masked(&self, mask: Mask) -> Result<f64> {
        let (rx, ry) = self.mask_ranges(mask)?;
        let mut acc = 0.0;
        for ix in rx {
            for iy in ry.clone() {
                acc += self.amplitudes[(ix, iy)].norm_sqr();
            }
        }
        Ok(acc * self.grid.cell_area())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq_masked(Mask::default()).expect("zero mask cannot fail").sqrt()
    }

    pub fn norm_masked(&self, mask: Mask) -> Result<f64> {
        Ok(self.norm_sq_masked(mask)?.sqrt())
    }

    pub fn max_abs(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// ‖self − other‖ / ‖other‖ over the masked window.
    pub fn rel_l2_distance(&self, other: &Self, mask: Mask) -> Result<f64> {
        let (rx, ry) = self.mask_ranges(mask)?;
        let mut diff = 0.0;
        let mut refn = 0.0;
        for ix in rx {
            for iy in ry.clone() {
                diff += (self.amplitudes[(ix, iy)] - other.amplitudes[(ix, iy)]).norm_sqr();
                refn += other.amplitudes[(ix, iy)].norm_sqr();
            }
        }
        if refn == 0.0 {
            return Err(Error::EmptyMask("reference state vanishes on the mask".into()));
        }
        Ok((diff / refn).sqrt())
    }

    /// Probability mass within `depth` of either boundary of `axis`.
    pub fn boundary_mass(&self, axis: Axis2, depth: f64) -> f64 {
        let h = self.grid.step(axis);
        let n = self.grid.len(axis);
        let band = ((depth / h).ceil() as usize).min(n / 2);
        let total: f64 = self.amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let mut edge = 0.0;
        match axis {
            Axis2::X => {
                for ix in (0..band).chain(n - band..n) {
                    for iy in 0..self.grid.n_y {
                        edge += self.amplitudes[(ix, iy)].norm_sqr();
                    }
                }
            }
            Axis2::Y => {
                for iy in (0..band).chain(n - band..n) {
                    for ix in 0..self.grid.n_x {
                        edge += self.amplitudes[(ix, iy)].norm_sqr();
                    }
                }
            }
        }
        edge / total
    }

    /// Position expectation values (⟨x⟩, ⟨y⟩) over the full window.
    pub fn position_mean(&self) -> (f64, f64) {
        let xs = self.grid.xs();
        let ys = self.grid.ys();
        let mut w = 0.0;
        let mut mx = 0.0;
        let mut my = 0.0;
        for (ix, &x) in xs.iter().enumerate() {
            for (iy, &y) in ys.iter().enumerate() {
                let p = self.amplitudes[(ix, iy)].norm_sqr();
                w += p;
                mx += p * x;
                my += p * y;
            }
        }
        (mx / w, my / w)
    }
}

// --- on-disk container ---

const MAGIC: &[u8; 4] = b"CFS1";
const FORMAT_VERSION: u32 = 1;

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::FileFormat(format!(
                "truncated at byte {} (wanted {n} more)",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
}

impl SampledState {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(96 + 16 * self.amplitudes.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        for v in [
            self.params.mass,
            self.params.charge,
            self.params.light_speed,
            self.params.hbar,
            self.params.field_b,
            self.params.field_e,
        ] {
            put_f64(&mut buf, v);
        }
        for v in [self.grid.x_min, self.grid.x_max, self.grid.y_min, self.grid.y_max] {
            put_f64(&mut buf, v);
        }
        buf.extend_from_slice(&(self.grid.n_x as u64).to_le_bytes());
        buf.extend_from_slice(&(self.grid.n_y as u64).to_le_bytes());
        buf.push(self.grid.periodic_x as u8);
        buf.push(self.grid.periodic_y as u8);
        put_f64(&mut buf, self.t);
        for ix in 0..self.grid.n_x {
            for iy in 0..self.grid.n_y {
                let c = self.amplitudes[(ix, iy)];
                put_f64(&mut buf, c.re);
                put_f64(&mut buf, c.im);
            }
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::FileFormat("bad magic; not a state file".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::FileFormat(format!(
                "unsupported format version {version}"
            )));
        }
        let params = PhysicalParams {
            mass: r.f64()?,
            charge: r.f64()?,
            light_speed: r.f64()?,
            hbar: r.f64()?,
            field_b: r.f64()?,
            field_e: r.f64()?,
        };
        let grid = GridSpec {
            x_min: r.f64()?,
            x_max: r.f64()?,
            y_min: r.f64()?,
            y_max: r.f64()?,
            n_x: r.u64()? as usize,
            n_y: r.u64()? as usize,
            periodic_x: r.u8()? != 0,
            periodic_y: r.u8()? != 0,
        };
        grid.validate()?;
        let t = r.f64()?;
        let mut amplitudes = Array2::zeros((grid.n_x, grid.n_y));
        for ix in 0..grid.n_x {
            for iy in 0..grid.n_y {
                let re = r.f64()?;
                let im = r.f64()?;
                amplitudes[(ix, iy)] = Complex64::new(re, im);
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::FileFormat(format!(
                "{} trailing bytes after amplitudes",
                bytes.len() - r.pos
            )));
        }
        let state = SampledState { grid, params, t, amplitudes };
        state.check_finite()?;
        Ok(state)
    }

    /// Atomic write: temp file in the target directory, then rename.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        self.check_finite()?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        std::fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(
            ".{}.tmp",
            path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
        ));
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
