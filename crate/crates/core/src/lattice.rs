//! Periodic lattices in one or two dimensions and their FFT plans.
//!
//! Sites sit at `x_i = (i - n/2) Δx` along each axis, so the origin is the site
//! with index `n/2`. Fields are stored row-major: site `(i0, i1)` lives at
//! `i0 * n1 + i1`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Largest number of sites accepted.
pub const MAX_SITES: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lattice {
    dim: usize,
    extent: [f64; 2],
    points: [usize; 2],
}

impl Lattice {
    /// A lattice with per-axis box sides `extent` and point counts `points`.
    pub fn new(extent: &[f64], points: &[usize]) -> Result<Self> {
        let dim = extent.len();
        if !(dim == 1 || dim == 2) {
            return Err(invalid(format!(
                "lattices support d = 1 or 2, got d = {dim}"
            )));
        }
        if points.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: points.len(),
            });
        }
        let mut e = [1.0; 2];
        let mut n = [1usize; 2];
        for axis in 0..dim {
            if !(extent[axis] > 0.0) || !extent[axis].is_finite() {
                return Err(invalid(format!(
                    "extent must be positive, got {}",
                    extent[axis]
                )));
            }
            if points[axis] < 2 || !points[axis].is_power_of_two() {
                return Err(invalid(format!(
                    "points per axis must be a power of two >= 2, got {}",
                    points[axis]
                )));
            }
            e[axis] = extent[axis];
            n[axis] = points[axis];
        }
        if n[0].saturating_mul(n[1]) > MAX_SITES {
            return Err(invalid(format!("lattice exceeds {MAX_SITES} sites")));
        }
        Ok(Lattice {
            dim,
            extent: e,
            points: n,
        })
    }

    /// The same side and point count on every axis.
    pub fn cube(dim: usize, extent: f64, points: usize) -> Result<Self> {
        Self::new(&vec![extent; dim], &vec![points; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    pub fn points(&self, axis: usize) -> usize {
        self.points[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.points[axis] as f64
    }

    pub fn sites(&self) -> usize {
        self.points[0] * self.points[1]
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.extent[a]).product()
    }

    /// Smallest box side.
    pub fn min_extent(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.extent[a])
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest spacing.
    pub fn min_spacing(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn index(&self, i0: usize, i1: usize) -> usize {
        i0 * self.points[1] + i1
    }

    /// Per-axis site indices of a flat index.
    pub fn split(&self, idx: usize) -> [usize; 2] {
        [idx / self.points[1], idx % self.points[1]]
    }

    /// Index of the site at the origin.
    pub fn origin(&self) -> usize {
        let c1 = if self.dim == 2 { self.points[1] / 2 } else { 0 };
        self.index(self.points[0] / 2, c1)
    }

    /// Flat index of the site displaced from `idx` by `lag` cells (periodically).
    pub fn shift(&self, idx: usize, lag: [isize; 2]) -> usize {
        let [i0, i1] = self.split(idx);
        let wrap = |i: usize, l: isize, n: usize| (i as isize + l).rem_euclid(n as isize) as usize;
        self.index(
            wrap(i0, lag[0], self.points[0]),
            wrap(i1, lag[1], self.points[1]),
        )
    }

    /// Coordinates of a site; the second entry is 0 when `d = 1`.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let s = self.split(idx);
        let mut x = [0.0; 2];
        for axis in 0..self.dim {
            x[axis] = (s[axis] as f64 - (self.points[axis] / 2) as f64) * self.spacing(axis);
        }
        x
    }

    /// Signed mode number along an axis in DFT order.
    fn mode(&self, k: usize, axis: usize) -> isize {
        let n = self.points[axis];
        if k < n / 2 {
            k as isize
        } else {
            k as isize - n as isize
        }
    }

    /// Dual frequency `2π k / ℓ` of the DFT bin at flat index `idx`.
    pub fn frequency(&self, idx: usize) -> [f64; 2] {
        let s = self.split(idx);
        let mut xi = [0.0; 2];
        for axis in 0..self.dim {
            xi[axis] = 2.0 * PI * self.mode(s[axis], axis) as f64 / self.extent[axis];
        }
        xi
    }

    /// Flat index of the bin holding `-ξ`.
    pub fn conjugate(&self, idx: usize) -> usize {
        let s = self.split(idx);
        let neg = |k: usize, n: usize| (n - k) % n;
        self.index(neg(s[0], self.points[0]), neg(s[1], self.points[1]))
    }
}

/// A real field on a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    pub lattice: Lattice,
    pub values: Vec<f64>,
}

impl LatticeField {
    pub fn zeros(lattice: Lattice) -> Self {
        LatticeField {
            lattice,
            values: vec![0.0; lattice.sites()],
        }
    }

    pub fn from_fn(lattice: Lattice, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..lattice.sites()).map(|i| f(lattice.coords(i))).collect();
        LatticeField { lattice, values }
    }

    pub fn sup_norm(&self) -> f64 {
        sup_abs(&self.values)
    }
}

/// `max |v_i|`, or NaN if any entry is NaN.
pub fn sup_abs(values: &[f64]) -> f64 {
    let mut m: f64 = 0.0;
    for &v in values {
        if v.is_nan() {
            return f64::NAN;
        }
        m = m.max(v.abs());
    }
    m
}

/// Unnormalized forward and inverse DFTs over a lattice.
#[derive(Clone)]
pub struct FftPlan {
    lattice: Lattice,
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
}

impl std::fmt::Debug for FftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPlan")
            .field("lattice", &self.lattice)
            .finish()
    }
}

impl FftPlan {
    pub fn new(lattice: Lattice) -> Self {
        let mut planner = FftPlanner::new();
        let n0 = lattice.points(0);
        let n1 = lattice.points(1);
        FftPlan {
            lattice,
            fwd: [planner.plan_fft_forward(n0), planner.plan_fft_forward(n1)],
            inv: [planner.plan_fft_inverse(n0), planner.plan_fft_inverse(n1)],
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn forward(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.run(buf, scratch, &self.fwd);
    }

    pub fn inverse(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.run(buf, scratch, &self.inv);
    }

    fn run(
        &self,
        buf: &mut [Complex64],
        scratch: &mut Vec<Complex64>,
        plans: &[Arc<dyn Fft<f64>>; 2],
    ) {
        let (n0, n1) = (self.lattice.points(0), self.lattice.points(1));
        debug_assert_eq!(buf.len(), n0 * n1);
        if self.lattice.dim() == 1 {
            plans[0].process(buf);
            return;
        }
        // Rows are contiguous; columns go through a transpose.
        plans[1].process(buf);
        scratch.resize(buf.len(), Complex64::new(0.0, 0.0));
        transpose(buf, scratch, n0, n1);
        plans[0].process(scratch);
        transpose(scratch, buf, n1, n0);
    }
}

// dst (cols × rows) = srcᵀ where src is rows × cols.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const BLOCK: usize = 32;
    for r0 in (0..rows).step_by(BLOCK) {
        for c0 in (0..cols).step_by(BLOCK) {
            for r in r0..(r0 + BLOCK).min(rows) {
                for c in c0..(c0 + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_guards() {
        assert!(Lattice::cube(1, 32.0, 256).is_ok());
        assert!(Lattice::cube(1, 32.0, 100).is_err());
        assert!(Lattice::cube(3, 1.0, 8).is_err());
        assert!(Lattice::cube(2, 1.0, 8192).is_err());
        assert!(Lattice::new(&[1.0, 2.0], &[8]).is_err());
        assert!(Lattice::cube(1, -1.0, 8).is_err());
    }

    #[test]
    fn geometry() {
        let l = Lattice::new(&[4.0, 8.0], &[4, 8]).unwrap();
        assert_eq!(l.sites(), 32);
        assert_eq!(l.coords(l.origin()), [0.0, 0.0]);
        assert_eq!(l.coords(0), [-2.0, -4.0]);
        assert_eq!(l.shift(l.index(3, 7), [1, 1]), l.index(0, 0));
        assert_eq!(l.shift(0, [-1, 0]), l.index(3, 0));
        let idx = l.index(1, 5);
        assert_eq!(l.conjugate(idx), l.index(3, 3));
        let xi = l.frequency(idx);
        let xc = l.frequency(l.conjugate(idx));
        assert_eq!(xi[0], -xc[0]);
        assert_eq!(xi[1], -xc[1]);
    }

    #[test]
    fn fft_round_trip_and_naive_dft() {
        let l = Lattice::new(&[1.0, 1.0], &[8, 4]).unwrap();
        let plan = FftPlan::new(l);
        let data: Vec<Complex64> = (0..32)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut buf = data.clone();
        let mut scratch = Vec::new();
        plan.forward(&mut buf, &mut scratch);
        // Naive 2D DFT for comparison.
        for k0 in 0..8 {
            for k1 in 0..4 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j0 in 0..8 {
                    for j1 in 0..4 {
                        let ph =
                            -2.0 * PI * (k0 * j0) as f64 / 8.0 - 2.0 * PI * (k1 * j1) as f64 / 4.0;
                        acc += data[j0 * 4 + j1] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((acc - buf[k0 * 4 + k1]).norm() < 1e-12);
            }
        }
        plan.inverse(&mut buf, &mut scratch);
        for (a, b) in buf.iter().zip(&data) {
            assert!((a / 32.0 - b).norm() < 1e-14);
        }
    }
}
