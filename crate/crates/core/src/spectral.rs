//! Fourier-side exact propagators and Sobolev functionals.
//!
//! Conventions: `P_j = i d/dx_j`, so `F[P_j psi] = -xi_j F[psi]`, and
//! `exp(-i gamma P_j)` is the translation `psi(x) -> psi(x + gamma e_j)`.
//! The discrete transform `psi_hat(xi_k) = h^N sum_x psi(x) e^{-i xi_k x}`
//! approximates the continuous one; norms use the box frequencies as the
//! quadrature of the `R^N` Fourier integral.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{RealField, RegionMask, WaveFunction};
use crate::grid::Grid;

/// Applies a Fourier multiplier `m(k)` indexed by flat spectral index.
pub fn apply_multiplier(psi: &WaveFunction, m: impl Fn(usize) -> Complex64) -> WaveFunction {
    let grid = psi.grid().clone();
    let mut buf = psi.values().to_vec();
    grid.fft(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        *z *= m(k);
    }
    grid.ifft(&mut buf);
    WaveFunction::from_parts_unchecked(grid, buf)
}

/// Squared spectral magnitudes `|F_k|^2` scaled so that their plain sum is
/// the squared L2 norm.
fn spectral_density(psi: &WaveFunction) -> Vec<f64> {
    let grid = psi.grid();
    let mut buf = psi.values().to_vec();
    grid.fft(&mut buf);
    let w = grid.cell_volume() / grid.len() as f64;
    buf.iter().map(|z| z.norm_sqr() * w).collect()
}

/// `||psi||_{H^s}` with the multiplier `(1 + |xi|^2)^{s/2}`.
pub fn sobolev_norm(psi: &WaveFunction, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::NegativeSobolev(s));
    }
    let grid = psi.grid();
    let density = spectral_density(psi);
    let total: f64 = density
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let w = grid.wavevector(k);
            (1.0 + w[0] * w[0] + w[1] * w[1]).powf(s) * d
        })
        .sum();
    Ok(total.sqrt())
}

/// `||a - b||_{H^s}`.
pub fn sobolev_distance(a: &WaveFunction, b: &WaveFunction, s: f64) -> Result<f64> {
    sobolev_norm(&a.sub(b)?, s)
}

pub fn l2_norm(psi: &WaveFunction) -> f64 {
    let sum: f64 = psi.values().iter().map(|z| z.norm_sqr()).sum();
    (sum * psi.grid().cell_volume()).sqrt()
}

/// `<psi, chi> = sum psi conj(chi) h^N`.
pub fn l2_inner(psi: &WaveFunction, chi: &WaveFunction) -> Result<Complex64> {
    psi.same_grid(chi)?;
    let sum: Complex64 = psi.values().iter().zip(chi.values()).map(|(a, b)| a * b.conj()).sum();
    Ok(sum * psi.grid().cell_volume())
}

/// Pointwise `exp(i scale phi(x)) psi(x)`.
pub fn apply_phase(psi: &WaveFunction, phi: &RealField, scale: f64) -> Result<WaveFunction> {
    if **psi.grid() != **phi.grid() {
        return Err(Error::GridMismatch);
    }
    if !scale.is_finite() || phi.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("phase"));
    }
    let values = psi
        .values()
        .iter()
        .zip(phi.values())
        .map(|(z, p)| z * Complex64::cis(scale * p))
        .collect();
    Ok(WaveFunction::from_parts_unchecked(psi.grid().clone(), values))
}

/// `exp(-i gamma P_j) psi`, i.e. `psi(x + gamma e_j)`, as an exact
/// Fourier shift. `gamma` need not be a multiple of the spacing.
pub fn translate(psi: &WaveFunction, gamma: f64, axis: usize) -> Result<WaveFunction> {
    let grid = psi.grid().clone();
    grid.check_axis(axis)?;
    if !gamma.is_finite() {
        return Err(Error::NonFinite("translation"));
    }
    Ok(apply_multiplier(psi, |k| Complex64::cis(gamma * grid.wavevector(k)[axis])))
}

/// `exp(i t Delta - i t <u, P>) psi` for a constant drift `u`: the linear
/// flow of one control segment with `u0 = 0`.
pub fn free_propagate(psi: &WaveFunction, t: f64, drift: &[f64]) -> Result<WaveFunction> {
    let grid = psi.grid().clone();
    if drift.len() != grid.dim() {
        return Err(Error::ShapeMismatch { expected: grid.dim(), got: drift.len() });
    }
    if !t.is_finite() || drift.iter().any(|u| !u.is_finite()) {
        return Err(Error::NonFinite("free propagation"));
    }
    Ok(apply_multiplier(psi, |k| Complex64::cis(free_phase(&grid, k, t, drift))))
}

/// Phase of the free-flight multiplier `-t (|xi|^2 - <u, xi>)`.
pub(crate) fn free_phase(grid: &Grid, k: usize, t: f64, drift: &[f64]) -> f64 {
    let w = grid.wavevector(k);
    let mut phase = -t * (w[0] * w[0] + w[1] * w[1]);
    for (j, u) in drift.iter().enumerate() {
        phase += t * u * w[j];
    }
    phase
}

/// Spectral Laplacian.
pub fn laplacian(psi: &WaveFunction) -> WaveFunction {
    let grid = psi.grid().clone();
    apply_multiplier(psi, |k| {
        let w = grid.wavevector(k);
        Complex64::new(-(w[0] * w[0] + w[1] * w[1]), 0.0)
    })
}

/// Spectral partial derivative along `axis`; the Nyquist mode is dropped
/// so that real fields stay real.
pub fn derivative(psi: &WaveFunction, axis: usize) -> Result<WaveFunction> {
    let grid = psi.grid().clone();
    grid.check_axis(axis)?;
    let n = grid.points_per_axis();
    Ok(apply_multiplier(psi, |k| {
        let idx = grid.unravel(k);
        let i = if grid.dim() == 1 { idx[0] } else { idx[axis] };
        if i == n / 2 {
            Complex64::default()
        } else {
            Complex64::new(0.0, grid.wavevector(k)[axis])
        }
    }))
}

/// Spectral derivative of a real field along `axis`.
pub fn derivative_real(f: &RealField, axis: usize) -> Result<RealField> {
    let d = derivative(&WaveFunction::from_real(f), axis)?;
    let values = d.values().iter().map(|z| z.re).collect();
    Ok(RealField::from_parts_unchecked(f.grid().clone(), values))
}

/// `-<Delta psi, psi>_{L^2(S)}`, real part.
pub fn local_energy(psi: &WaveFunction, region: &RegionMask) -> Result<f64> {
    if **psi.grid() != **region.grid() {
        return Err(Error::GridMismatch);
    }
    let lap = laplacian(psi);
    let sum: f64 = lap
        .values()
        .iter()
        .zip(psi.values())
        .zip(region.indicator())
        .filter(|(_, inside)| **inside)
        .map(|((l, z), _)| -(l * z.conj()).re)
        .sum();
    Ok(sum * psi.grid().cell_volume())
}

/// `H^s(S)` norm for integer `s`: `sum_k C(s, k) ||D^k psi||^2_{L^2(S)}`,
/// where `D^k` stands for `(-Delta)^{k/2}` (k even) or `grad (-Delta)^{(k-1)/2}`
/// (k odd). Over the whole box this equals [`sobolev_norm`].
pub fn sobolev_norm_on(psi: &WaveFunction, s: f64, region: &RegionMask) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::NegativeSobolev(s));
    }
    if s.fract() != 0.0 {
        return Err(Error::NonIntegerSobolev(s));
    }
    if **psi.grid() != **region.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = psi.grid().clone();
    let order = s as u32;
    let masked_sq = |f: &WaveFunction| -> f64 {
        f.values()
            .iter()
            .zip(region.indicator())
            .filter(|(_, inside)| **inside)
            .map(|(z, _)| z.norm_sqr())
            .sum::<f64>()
            * grid.cell_volume()
    };
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 0..=order {
        let half = k / 2;
        let base = apply_multiplier(psi, |m| {
            let w = grid.wavevector(m);
            Complex64::new((w[0] * w[0] + w[1] * w[1]).powi(half as i32), 0.0)
        });
        let term = if k % 2 == 0 {
            masked_sq(&base)
        } else {
            (0..grid.dim()).map(|j| derivative(&base, j).map(|d| masked_sq(&d))).sum::<Result<f64>>()?
        };
        total += binom * term;
        binom = binom * (order - k) as f64 / (k + 1) as f64;
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn gaussian(grid: &Arc<Grid>) -> WaveFunction {
        WaveFunction::from_fn(grid.clone(), |x| {
            Complex64::new(PI.powf(-0.25 * grid.dim() as f64) * (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn gaussian_norms() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let h0 = gaussian(&g);
        assert_abs_diff_eq!(sobolev_norm(&h0, 0.0).unwrap(), 1.0, epsilon = 1e-8);
        // frozen from 1-D quadrature of (1 + xi^2) |F h0|^2: 3/2
        assert_abs_diff_eq!(sobolev_norm(&h0, 1.0).unwrap(), 1.5f64.sqrt(), epsilon = 1e-8);
        assert_eq!(sobolev_norm(&WaveFunction::zeros(g.clone()), 2.0).unwrap(), 0.0);
        assert!(matches!(sobolev_norm(&h0, -0.5), Err(Error::NegativeSobolev(_))));
    }

    #[test]
    fn inner_product_edge_cases() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let h0 = gaussian(&g);
        let h1 = WaveFunction::from_fn(g.clone(), |x| {
            Complex64::new(2f64.sqrt() * x[0] * PI.powf(-0.25) * (-x[0] * x[0] / 2.0).exp(), 0.0)
        })
        .unwrap();
        assert_abs_diff_eq!(l2_inner(&h0, &h0).unwrap().re, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(l2_inner(&h0, &h1).unwrap().norm(), 0.0, epsilon = 1e-8);
        assert_eq!(l2_inner(&h0, &WaveFunction::zeros(g)).unwrap(), Complex64::default());
        let other = make_grid(1, 8.0, 512).unwrap();
        assert_eq!(l2_inner(&h0, &gaussian(&other)).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn phase_identities() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let h0 = gaussian(&g);
        let phi = RealField::from_fn(g.clone(), |x| x[0].sin()).unwrap();
        let same = apply_phase(&h0, &phi, 0.0).unwrap();
        assert_eq!(same.values(), h0.values());
        let c = RealField::from_fn(g.clone(), |_| 0.7).unwrap();
        let rotated = apply_phase(&h0, &c, 1.0).unwrap();
        let expected = h0.scale(Complex64::cis(0.7));
        assert_abs_diff_eq!(sobolev_distance(&rotated, &expected, 1.0).unwrap(), 0.0, epsilon = 1e-14);
        let bad = RealField::from_parts_unchecked(g, vec![f64::INFINITY; 512]);
        assert!(apply_phase(&h0, &bad, 1.0).is_err());
    }

    #[test]
    fn translation_of_a_gaussian() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let h0 = gaussian(&g);
        let shifted = translate(&h0, 1.0, 0).unwrap();
        for (k, z) in shifted.values().iter().enumerate() {
            let x = g.coords()[k];
            let exact = PI.powf(-0.25) * (-(x + 1.0) * (x + 1.0) / 2.0).exp();
            assert_abs_diff_eq!(z.re, exact, epsilon = 1e-10);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-10);
        }
        let back = translate(&shifted, -1.0, 0).unwrap();
        assert!(back.sub(&h0).unwrap().sup_norm() < 1e-12);
        let id = translate(&h0, 0.0, 0).unwrap();
        assert!(id.sub(&h0).unwrap().sup_norm() < 1e-15);
        assert!(matches!(translate(&h0, 1.0, 1), Err(Error::BadAxis { .. })));
    }

    #[test]
    fn free_gaussian_spreading() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let h0 = gaussian(&g);
        let t = 1.0f64;
        let out = free_propagate(&h0, t, &[0.0]).unwrap();
        let width = 1.0 + 4.0 * t * t;
        for (k, z) in out.values().iter().enumerate() {
            let x = g.coords()[k];
            let exact = PI.powf(-0.25) * width.powf(-0.25) * (-x * x / (2.0 * width)).exp();
            assert_abs_diff_eq!(z.norm(), exact, epsilon = 1e-8);
        }
        let id = free_propagate(&h0, 0.0, &[0.0]).unwrap();
        assert!(id.sub(&h0).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn energy_of_plane_wave_patch() {
        let g = make_grid(1, 16.0, 1024).unwrap();
        let s = RegionMask::boxed(g.clone(), &[-2.0], &[2.0]).unwrap();
        // smooth envelope equal to one well beyond S
        let patch = |xi: f64| {
            WaveFunction::from_fn(g.clone(), move |x| {
                let env = (-(x[0] / 8.0).powi(16)).exp();
                Complex64::from_polar(env / 4.0, xi * x[0])
            })
            .unwrap()
        };
        let e0 = local_energy(&patch(0.0), &s).unwrap();
        assert_abs_diff_eq!(e0, 0.0, epsilon = 1e-6);
        let e2 = local_energy(&patch(2.0), &s).unwrap();
        assert_abs_diff_eq!(e2, 4.0 * s.measure() / 16.0, epsilon = 1e-4);
        assert_eq!(local_energy(&WaveFunction::zeros(g), &s).unwrap(), 0.0);
    }

    #[test]
    fn restricted_norm_matches_global_norm_on_full_box() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let psi = WaveFunction::from_fn(g.clone(), |x| {
            Complex64::from_polar((-(x[0] - 0.5).powi(2)).exp(), 1.3 * x[0])
        })
        .unwrap();
        let full = RegionMask::full(g);
        for s in [0.0, 1.0, 2.0, 3.0] {
            assert_abs_diff_eq!(
                sobolev_norm_on(&psi, s, &full).unwrap(),
                sobolev_norm(&psi, s).unwrap(),
                epsilon = 1e-10
            );
        }
        assert!(matches!(sobolev_norm_on(&psi, 0.5, &full), Err(Error::NonIntegerSobolev(_))));
    }

    #[test]
    fn two_dimensional_translation_commutes_with_axes() {
        let g = make_grid(2, 8.0, 64).unwrap();
        let h0 = gaussian(&g);
        let a = translate(&translate(&h0, 0.3, 0).unwrap(), -0.7, 1).unwrap();
        let b = translate(&translate(&h0, -0.7, 1).unwrap(), 0.3, 0).unwrap();
        assert!(a.sub(&b).unwrap().sup_norm() < 1e-13);
        let k = 32 * 64 + 32;
        let exact = PI.powf(-0.5) * (-(0.09 + 0.49) / 2.0f64).exp();
        assert_abs_diff_eq!(a.values()[k].re, exact, epsilon = 1e-10);
    }
}
