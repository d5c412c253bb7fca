//! Hermite functions in one dimension and their tensor products.
//!
//! `h_n` is evaluated with the normalized three-term recurrence
//! `h_{n+1} = x sqrt(2/(n+1)) h_n - sqrt(n/(n+1)) h_{n-1}`, which never
//! forms factorials or Hermite polynomials explicitly.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RealField;
use crate::grid::Grid;

/// Values of `h_n` at the given points.
pub fn hermite_1d(n: usize, xs: &[f64]) -> Vec<f64> {
    hermite_table(n, xs).pop().unwrap_or_default()
}

/// Values of `h_0 .. h_max` at the given points, one row per degree.
pub fn hermite_table(max: usize, xs: &[f64]) -> Vec<Vec<f64>> {
    let norm = PI.powf(-0.25);
    let mut rows = Vec::with_capacity(max + 1);
    rows.push(xs.iter().map(|x| norm * (-x * x / 2.0).exp()).collect::<Vec<_>>());
    if max >= 1 {
        rows.push(xs.iter().zip(&rows[0]).map(|(x, h)| 2f64.sqrt() * x * h).collect());
    }
    for n in 1..max {
        let a = (2.0 / (n + 1) as f64).sqrt();
        let b = (n as f64 / (n + 1) as f64).sqrt();
        let next = xs
            .iter()
            .zip(rows[n].iter().zip(&rows[n - 1]))
            .map(|(x, (hn, hm))| x * a * hn - b * hm)
            .collect();
        rows.push(next);
    }
    rows
}

/// `h_{n_1}(x_1) ... h_{n_N}(x_N)` sampled on the grid.
pub fn hermite_tensor(index: &[usize], grid: &Arc<Grid>) -> Result<RealField> {
    if index.len() != grid.dim() {
        return Err(Error::ShapeMismatch { expected: grid.dim(), got: index.len() });
    }
    let per_axis: Vec<Vec<f64>> = index.iter().map(|&n| hermite_1d(n, grid.coords())).collect();
    let values = (0..grid.len())
        .map(|k| {
            let idx = grid.unravel(k);
            (0..grid.dim()).map(|j| per_axis[j][idx[j]]).product()
        })
        .collect();
    RealField::new(grid.clone(), values)
}

/// Checks that the grid resolves Hermite functions up to degree `max_degree`:
/// spacing at most a quarter of the shortest local wavelength of `h_M` and
/// a box reaching at least six units beyond its turning point.
pub fn check_resolution(grid: &Grid, max_degree: usize) -> Result<()> {
    let turning = (2.0 * max_degree as f64 + 1.0).sqrt();
    let max_spacing = PI / turning / 2.0;
    if grid.spacing() > max_spacing {
        return Err(Error::Unresolvable {
            degree: max_degree,
            reason: format!("spacing {} exceeds {}", grid.spacing(), max_spacing),
        });
    }
    if grid.half_width() < turning + 6.0 {
        return Err(Error::Unresolvable {
            degree: max_degree,
            reason: format!("half width {} below {}", grid.half_width(), turning + 6.0),
        });
    }
    Ok(())
}

/// Whether a coefficient tensor stands for `sum c_n h_n` or `i sum c_n h_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Real,
    Imaginary,
}

/// Real coefficient tensor over multi-indices with every component
/// `<= max_degree`, stored row-major (axis 0 slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteCoeffs {
    dim: usize,
    max_degree: usize,
    coeffs: Vec<f64>,
    parity: Parity,
}

impl HermiteCoeffs {
    pub fn zeros(dim: usize, max_degree: usize, parity: Parity) -> Self {
        let len = (max_degree + 1).pow(dim as u32);
        HermiteCoeffs { dim, max_degree, coeffs: vec![0.0; len], parity }
    }

    /// Builds a tensor from `(multi-index, value)` terms; repeated indices add.
    pub fn from_terms(dim: usize, parity: Parity, terms: &[(Vec<usize>, f64)]) -> Result<Self> {
        let max_degree = terms.iter().flat_map(|(i, _)| i.iter().copied()).max().unwrap_or(0);
        let mut c = Self::zeros(dim, max_degree, parity);
        for (index, value) in terms {
            if index.len() != dim {
                return Err(Error::ShapeMismatch { expected: dim, got: index.len() });
            }
            if !value.is_finite() {
                return Err(Error::NonFinite("Hermite coefficient"));
            }
            let flat = c.flat(index);
            c.coeffs[flat] += value;
        }
        Ok(c)
    }

    /// One-dimensional tensor from a dense coefficient vector.
    pub fn from_vec(coeffs: Vec<f64>, parity: Parity) -> Self {
        let max_degree = coeffs.len().saturating_sub(1);
        let coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs };
        HermiteCoeffs { dim: 1, max_degree, coeffs, parity }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    fn flat(&self, index: &[usize]) -> usize {
        index.iter().fold(0, |acc, &n| acc * (self.max_degree + 1) + n)
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let side = self.max_degree + 1;
        let mut idx = vec![0; self.dim];
        for j in (0..self.dim).rev() {
            idx[j] = flat % side;
            flat /= side;
        }
        idx
    }

    /// Coefficient at a multi-index; zero beyond `max_degree`.
    pub fn get(&self, index: &[usize]) -> f64 {
        if index.len() != self.dim || index.iter().any(|&n| n > self.max_degree) {
            return 0.0;
        }
        self.coeffs[self.flat(index)]
    }

    /// Sets a coefficient, growing the tensor if needed.
    pub fn set(&mut self, index: &[usize], value: f64) {
        let needed = index.iter().copied().max().unwrap_or(0);
        if needed > self.max_degree {
            *self = self.resized(needed);
        }
        let flat = self.flat(index);
        self.coeffs[flat] = value;
    }

    fn add_at(&mut self, index: &[usize], value: f64) {
        let flat = self.flat(index);
        self.coeffs[flat] += value;
    }

    /// Copy with a different per-axis bound; entries beyond it are dropped.
    pub fn resized(&self, max_degree: usize) -> Self {
        let mut out = Self::zeros(self.dim, max_degree, self.parity);
        for (index, value) in self.terms() {
            if index.iter().all(|&n| n <= max_degree) {
                out.add_at(&index, value);
            }
        }
        out
    }

    /// Non-zero entries in storage order.
    pub fn terms(&self) -> Vec<(Vec<usize>, f64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, v)| (self.multi_index(k), *v))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|v| *v == 0.0)
    }

    /// Largest total degree `n_1 + .. + n_N` carrying a non-zero coefficient.
    pub fn total_degree(&self) -> Option<usize> {
        self.terms().iter().map(|(i, _)| i.iter().sum()).max()
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// `self + factor * other`; parities must agree.
    pub fn add_scaled(&self, factor: f64, other: &HermiteCoeffs) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::ShapeMismatch { expected: self.dim, got: other.dim });
        }
        let mut out = self.resized(self.max_degree.max(other.max_degree));
        for (index, value) in other.terms() {
            out.add_at(&index, factor * value);
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `c_n = <f, h_n>` for every multi-index with components `<= max_degree`.
pub fn project_to_hermite(f: &RealField, max_degree: usize) -> Result<HermiteCoeffs> {
    let grid = f.grid();
    check_resolution(grid, max_degree)?;
    let table = hermite_table(max_degree, grid.coords());
    let h = grid.spacing();
    let mut out = HermiteCoeffs::zeros(grid.dim(), max_degree, Parity::Real);
    match grid.dim() {
        1 => {
            for (n, row) in table.iter().enumerate() {
                let c: f64 = row.iter().zip(f.values()).map(|(a, b)| a * b).sum();
                out.coeffs[n] = c * h;
            }
        }
        _ => {
            let side = grid.points_per_axis();
            // contract the fast axis first: g[i][m] = sum_j f[i][j] h_m(y_j)
            let partial: Vec<Vec<f64>> = (0..side)
                .map(|i| {
                    let row = &f.values()[i * side..(i + 1) * side];
                    table.iter().map(|hm| hm.iter().zip(row).map(|(a, b)| a * b).sum()).collect()
                })
                .collect();
            for n in 0..=max_degree {
                for m in 0..=max_degree {
                    let c: f64 = (0..side).map(|i| table[n][i] * partial[i][m]).sum();
                    let flat = out.flat(&[n, m]);
                    out.coeffs[flat] = c * h * h;
                }
            }
        }
    }
    Ok(out)
}

/// `sum c_n h_n` sampled on the grid (the parity flag is not applied).
pub fn eval_coeffs(c: &HermiteCoeffs, grid: &Arc<Grid>) -> Result<RealField> {
    if c.dim != grid.dim() {
        return Err(Error::ShapeMismatch { expected: grid.dim(), got: c.dim });
    }
    check_resolution(grid, c.max_degree)?;
    let table = hermite_table(c.max_degree, grid.coords());
    let side = grid.points_per_axis();
    let values = match grid.dim() {
        1 => (0..side).map(|i| (0..=c.max_degree).map(|n| c.coeffs[n] * table[n][i]).sum()).collect(),
        _ => {
            let mut values = vec![0.0; grid.len()];
            for n in 0..=c.max_degree {
                // inner[j] = sum_m c[n][m] h_m(y_j)
                let inner: Vec<f64> = (0..side)
                    .map(|j| (0..=c.max_degree).map(|m| c.get(&[n, m]) * table[m][j]).sum())
                    .collect();
                if inner.iter().all(|v| *v == 0.0) {
                    continue;
                }
                for i in 0..side {
                    let hx = table[n][i];
                    for j in 0..side {
                        values[i * side + j] += hx * inner[j];
                    }
                }
            }
            values
        }
    };
    RealField::new(grid.clone(), values)
}

/// Coefficients of `i P_j` applied to the represented function.
///
/// With `P h_n = i (sqrt(n/2) h_{n-1} - sqrt((n+1)/2) h_{n+1})`, the operator
/// `i P_j` sends `c h_n` to `c (sqrt((n+1)/2) h_{n+1} - sqrt(n/2) h_{n-1})`
/// along axis `j`, for either parity; the flag is carried over unchanged.
/// The per-axis bound grows by exactly one.
pub fn apply_p_coeffs(c: &HermiteCoeffs, axis: usize) -> Result<HermiteCoeffs> {
    if axis >= c.dim {
        return Err(Error::BadAxis { axis, dim: c.dim });
    }
    let mut out = HermiteCoeffs::zeros(c.dim, c.max_degree + 1, c.parity);
    for (mut index, value) in c.terms() {
        let m = index[axis];
        index[axis] = m + 1;
        out.add_at(&index, ((m + 1) as f64 / 2.0).sqrt() * value);
        if m >= 1 {
            index[axis] = m - 1;
            out.add_at(&index, -(m as f64 / 2.0).sqrt() * value);
        }
    }
    Ok(out)
}
