//! Truncated periodic discretization of `R^N`.
//!
//! Samples sit at `x_i = -L + i * h` with `h = 2L / n`; the origin is the
//! sample with index `n / 2`. Fourier transforms use the natural FFT order
//! for frequencies: `0, 1, .., n/2 - 1, -n/2, .., -1` times `pi / L`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// A periodic box `[-L, L)^N` sampled with `n` points per axis.
pub struct Grid {
    dim: usize,
    half_width: f64,
    points: usize,
    spacing: f64,
    coords: Vec<f64>,
    freqs: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("half_width", &self.half_width)
            .field("points_per_axis", &self.points)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points && self.half_width == other.half_width
    }
}

/// Builds a shared grid; see [`Grid::new`].
pub fn make_grid(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Arc<Grid>> {
    Grid::new(dim, half_width, points_per_axis).map(Arc::new)
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Grid> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if points_per_axis < 16 || !points_per_axis.is_power_of_two() {
            return Err(Error::BadResolution(points_per_axis));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::BadHalfWidth(half_width));
        }
        let n = points_per_axis;
        let spacing = 2.0 * half_width / n as f64;
        let coords = (0..n).map(|i| -half_width + i as f64 * spacing).collect();
        let dk = PI / half_width;
        let freqs = (0..n)
            .map(|i| {
                let m = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
                m as f64 * dk
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Grid {
            dim,
            half_width,
            points: n,
            spacing,
            coords,
            freqs,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Sample coordinates along one axis (identical for every axis).
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Angular frequencies along one axis, in FFT order.
    pub fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    pub fn frequency_step(&self) -> f64 {
        PI / self.half_width
    }

    /// Largest representable angular frequency, `pi / h`.
    pub fn nyquist(&self) -> f64 {
        PI / self.spacing
    }

    /// Total number of samples, `n^N`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Splits a flat row-major index into per-axis indices (axis 0 slowest).
    pub fn unravel(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.points, flat % self.points],
        }
    }

    /// Physical position of a flat sample index.
    pub fn position(&self, flat: usize) -> [f64; 2] {
        let [i, j] = self.unravel(flat);
        match self.dim {
            1 => [self.coords[i], 0.0],
            _ => [self.coords[i], self.coords[j]],
        }
    }

    /// Frequency vector of a flat spectral index.
    pub fn wavevector(&self, flat: usize) -> [f64; 2] {
        let [i, j] = self.unravel(flat);
        match self.dim {
            1 => [self.freqs[i], 0.0],
            _ => [self.freqs[i], self.freqs[j]],
        }
    }

    /// `|xi|^2` for every spectral index.
    pub fn wavenumber_sq(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let w = self.wavevector(k);
                w[0] * w[0] + w[1] * w[1]
            })
            .collect()
    }

    pub(crate) fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim {
            return Err(Error::BadAxis { axis, dim: self.dim });
        }
        Ok(())
    }

    /// Unnormalized forward DFT over all axes, in place.
    pub(crate) fn fft(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse DFT over all axes, including the `1 / n^N` factor.
    pub(crate) fn ifft(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    /// Inverse DFT over all axes without the `1 / n^N` factor.
    pub(crate) fn ifft_unscaled(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        // rows are contiguous along the last axis
        plan.process(data);
        if self.dim == 2 {
            let n = self.points;
            let mut column = vec![Complex64::default(); n];
            for j in 0..n {
                for i in 0..n {
                    column[i] = data[i * n + j];
                }
                plan.process(&mut column);
                for i in 0..n {
                    data[i * n + j] = column[i];
                }
            }
        }
    }
}
