//! Sampled fields on a [`Grid`].

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// A complex field `psi` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("wave function"));
        }
        Ok(WaveFunction { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![Complex64::default(); grid.len()];
        WaveFunction { grid, values }
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> Complex64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.position(k))).collect();
        Self::new(grid, values)
    }

    pub fn from_real(field: &RealField) -> Self {
        let values = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        WaveFunction { grid: field.grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Mutable access for operations that own the buffer.
    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<Grid>, values: Vec<Complex64>) -> Self {
        WaveFunction { grid, values }
    }

    pub fn same_grid(&self, other: &WaveFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `self - other`, pointwise.
    pub fn sub(&self, other: &WaveFunction) -> Result<WaveFunction> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(WaveFunction { grid: self.grid.clone(), values })
    }

    /// `self + scale * other`, pointwise.
    pub fn axpy(&self, scale: Complex64, other: &WaveFunction) -> Result<WaveFunction> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + scale * b).collect();
        Ok(WaveFunction { grid: self.grid.clone(), values })
    }

    pub fn scale(&self, factor: Complex64) -> WaveFunction {
        let values = self.values.iter().map(|z| z * factor).collect();
        WaveFunction { grid: self.grid.clone(), values }
    }

    pub fn conj(&self) -> WaveFunction {
        let values = self.values.iter().map(|z| z.conj()).collect();
        WaveFunction { grid: self.grid.clone(), values }
    }

    /// Mass outside the inner 90% of the box along any axis.
    pub fn boundary_mass(&self) -> f64 {
        let cut = 0.9 * self.grid.half_width();
        let dim = self.grid.dim();
        let mass: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let x = self.grid.position(*k);
                x[..dim].iter().any(|c| c.abs() > cut)
            })
            .map(|(_, z)| z.norm_sqr())
            .sum();
        mass * self.grid.cell_volume()
    }
}

/// A real field sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("real field"));
        }
        Ok(RealField { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        RealField { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.position(k))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        RealField { grid, values }
    }

    pub fn scale(&self, factor: f64) -> RealField {
        let values = self.values.iter().map(|v| v * factor).collect();
        RealField { grid: self.grid.clone(), values }
    }

    pub fn sub(&self, other: &RealField) -> Result<RealField> {
        if *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(RealField { grid: self.grid.clone(), values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Indicator of a region `S` on the grid together with its measure.
#[derive(Debug, Clone)]
pub struct RegionMask {
    grid: Arc<Grid>,
    indicator: Vec<bool>,
    measure: f64,
}

impl RegionMask {
    pub fn new(grid: Arc<Grid>, indicator: Vec<bool>) -> Result<Self> {
        if indicator.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: indicator.len() });
        }
        let count = indicator.iter().filter(|b| **b).count();
        if count == 0 {
            return Err(Error::EmptyRegion);
        }
        let measure = count as f64 * grid.cell_volume();
        Ok(RegionMask { grid, indicator, measure })
    }

    /// Axis-aligned closed box `[lo_j, hi_j]` per axis.
    pub fn boxed(grid: Arc<Grid>, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let dim = grid.dim();
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::ShapeMismatch { expected: dim, got: lo.len().min(hi.len()) });
        }
        let indicator = (0..grid.len())
            .map(|k| {
                let x = grid.position(k);
                (0..dim).all(|j| x[j] >= lo[j] && x[j] <= hi[j])
            })
            .collect();
        Self::new(grid, indicator)
    }

    /// The whole box.
    pub fn full(grid: Arc<Grid>) -> Self {
        let indicator = vec![true; grid.len()];
        let measure = grid.len() as f64 * grid.cell_volume();
        RegionMask { grid, indicator, measure }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn indicator(&self) -> &[bool] {
        &self.indicator
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn rejects_non_finite_samples() {
        let g = make_grid(1, 4.0, 16).unwrap();
        let mut v = vec![Complex64::default(); 16];
        v[3] = Complex64::new(f64::NAN, 0.0);
        assert_eq!(WaveFunction::new(g.clone(), v).unwrap_err(), Error::NonFinite("wave function"));
        assert!(WaveFunction::new(g, vec![Complex64::default(); 15]).is_err());
    }

    #[test]
    fn region_measure_counts_cells() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let s = RegionMask::boxed(g.clone(), &[-2.0], &[2.0]).unwrap();
        let count = s.indicator().iter().filter(|b| **b).count();
        assert_eq!(count, 65);
        assert_eq!(s.measure(), count as f64 * g.spacing());
        assert_eq!(RegionMask::boxed(g, &[0.01], &[0.02]).unwrap_err(), Error::EmptyRegion);
    }
}
