//! Builders for the phases, states and cut-offs named in configs.

use std::sync::{Arc, OnceLock};

use nlsctl_core::hermite::{eval_coeffs, hermite_tensor};
use nlsctl_core::saturation::lift_target;
use nlsctl_core::spectral::l2_norm;
use nlsctl_core::{Grid, HermiteCoeffs, Parity, PhaseElement, RealField, WaveFunction};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{PhaseSpec, StateSpec};
use crate::error::CliError;

/// Projected Hermite coefficients below this are dropped before compilation.
pub const COEFF_CUTOFF: f64 = 1e-12;

fn check_dim(name: &str, v: &[f64], dim: usize) -> Result<(), CliError> {
    if v.len() != dim {
        return Err(CliError::Invalid(format!("{name} has {} entries, grid has dimension {dim}", v.len())));
    }
    Ok(())
}

fn hermite_coeffs(dim: usize, terms: &[crate::config::HermiteTerm]) -> Result<HermiteCoeffs, CliError> {
    let terms: Vec<(Vec<usize>, f64)> = terms.iter().map(|t| (t.index.clone(), t.coeff)).collect();
    Ok(HermiteCoeffs::from_terms(dim, Parity::Real, &terms)?)
}

pub fn phase_field(spec: &PhaseSpec, grid: &Arc<Grid>) -> Result<RealField, CliError> {
    let dim = grid.dim();
    match spec {
        PhaseSpec::Zero => Ok(RealField::zeros(grid.clone())),
        PhaseSpec::Hermite { terms } => Ok(eval_coeffs(&hermite_coeffs(dim, terms)?, grid)?),
        PhaseSpec::Gaussian { amplitude, center, width } => {
            check_dim("center", center, dim)?;
            let (a, w) = (*amplitude, *width);
            Ok(RealField::from_fn(grid.clone(), |x| {
                let r2: f64 = (0..dim).map(|j| (x[j] - center[j]).powi(2)).sum();
                a * (-r2 / (2.0 * w * w)).exp()
            })?)
        }
    }
}

/// The element to compile for `phi`, and the `H^s` error of truncating `phi` to it.
///
/// Hermite phases whose degrees fit are taken verbatim; anything else is
/// projected onto axis degrees `<= max_degree`.
pub fn phase_element(
    spec: &PhaseSpec,
    grid: &Arc<Grid>,
    max_degree: usize,
    s: f64,
) -> Result<(PhaseElement, f64), CliError> {
    let dim = grid.dim();
    if let PhaseSpec::Zero = spec {
        return Ok((PhaseElement::zero(dim), 0.0));
    }
    if let PhaseSpec::Hermite { terms } = spec {
        if terms.iter().all(|t| t.index.iter().all(|&m| m <= max_degree)) {
            let c = hermite_coeffs(dim, terms)?;
            return Ok((PhaseElement::from_coeffs(c)?, 0.0));
        }
    }
    lifted_element(&phase_field(spec, grid)?, max_degree, s)
}

/// Projects an arbitrary phase field, dropping negligible coefficients.
pub fn lifted_element(phi: &RealField, max_degree: usize, s: f64) -> Result<(PhaseElement, f64), CliError> {
    let lifted = lift_target(phi, max_degree, s)?;
    let c = lifted.element.coeffs();
    let kept: Vec<(Vec<usize>, f64)> = c.terms().into_iter().filter(|(_, v)| v.abs() > COEFF_CUTOFF).collect();
    let element = if kept.is_empty() {
        PhaseElement::zero(c.dim())
    } else {
        PhaseElement::from_coeffs(HermiteCoeffs::from_terms(c.dim(), Parity::Imaginary, &kept)?)?
    };
    Ok((element, lifted.truncation_error))
}

fn normalized(psi: WaveFunction) -> Result<WaveFunction, CliError> {
    let n = l2_norm(&psi);
    if !(n > 0.0) {
        return Err(CliError::Invalid("initial state vanishes on the grid".into()));
    }
    Ok(psi.scale(Complex64::new(1.0 / n, 0.0)))
}

pub fn initial_state(spec: &StateSpec, grid: &Arc<Grid>, seed: u64) -> Result<WaveFunction, CliError> {
    let dim = grid.dim();
    match spec {
        StateSpec::Hermite { index } => {
            if index.len() != dim {
                return Err(CliError::Invalid(format!("state index needs {dim} entries")));
            }
            Ok(WaveFunction::from_real(&hermite_tensor(index, grid)?))
        }
        StateSpec::Packet { center, width, momentum } => {
            check_dim("center", center, dim)?;
            check_dim("momentum", momentum, dim)?;
            let w = *width;
            let psi = WaveFunction::from_fn(grid.clone(), |x| {
                let r2: f64 = (0..dim).map(|j| (x[j] - center[j]).powi(2)).sum();
                let k: f64 = (0..dim).map(|j| momentum[j] * x[j]).sum();
                Complex64::from_polar((-r2 / (2.0 * w * w)).exp(), k)
            })?;
            normalized(psi)
        }
        StateSpec::RandomHermite { max_degree } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut re = HermiteCoeffs::zeros(dim, *max_degree, Parity::Real);
            let mut im = HermiteCoeffs::zeros(dim, *max_degree, Parity::Real);
            let side = max_degree + 1;
            for flat in 0..side.pow(dim as u32) {
                let index: Vec<usize> = (0..dim).map(|j| (flat / side.pow((dim - 1 - j) as u32)) % side).collect();
                re.set(&index, rng.random_range(-1.0..1.0));
                im.set(&index, rng.random_range(-1.0..1.0));
            }
            let (a, b) = (eval_coeffs(&re, grid)?, eval_coeffs(&im, grid)?);
            let values = a.values().iter().zip(b.values()).map(|(x, y)| Complex64::new(*x, *y)).collect();
            normalized(WaveFunction::new(grid.clone(), values)?)
        }
    }
}

/// `exp(-1 / (1 - t^2))` on `(-1, 1)`, zero outside.
fn mollifier(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Composite Simpson rule for the mollifier over `[a, b]`, with panels of
/// a fixed width so that neighbouring calls agree to roundoff.
fn mollifier_integral(a: f64, b: f64) -> f64 {
    const PANELS_PER_UNIT: f64 = 4096.0;
    let panels = (((b - a) * PANELS_PER_UNIT).ceil() as usize).max(1) * 2;
    let h = (b - a) / panels as f64;
    let mut sum = mollifier(a) + mollifier(b);
    for k in 1..panels {
        sum += mollifier(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// Smooth step: 1 for `d <= 0`, 0 for `d >= 1`.
///
/// Only the short tail of the mollifier is integrated, so the step meets
/// its constant values without a quadrature-sized jump.
fn smooth_step(d: f64) -> f64 {
    static HALF: OnceLock<f64> = OnceLock::new();
    let half = *HALF.get_or_init(|| mollifier_integral(-1.0, 0.0));
    let t = 2.0 * d - 1.0;
    if d <= 0.0 {
        1.0
    } else if d >= 1.0 {
        0.0
    } else if t <= 0.0 {
        1.0 - mollifier_integral(-1.0, t) / (2.0 * half)
    } else {
        mollifier_integral(t, 1.0) / (2.0 * half)
    }
}

/// Smooth cut-off equal to 1 on the box `[lo, hi]`, vanishing outside the box widened by `margin`.
pub fn region_bump(grid: &Arc<Grid>, lo: &[f64], hi: &[f64], margin: f64) -> Result<RealField, CliError> {
    let dim = grid.dim();
    check_dim("region_lo", lo, dim)?;
    check_dim("region_hi", hi, dim)?;
    Ok(RealField::from_fn(grid.clone(), |x| {
        (0..dim)
            .map(|j| {
                let outside = (lo[j] - x[j]).max(x[j] - hi[j]).max(0.0);
                smooth_step(outside / margin)
            })
            .product()
    })?)
}

/// `rho / |S| * exp(i xi x)`.
pub fn plane_patch(rho: &RealField, xi: &[f64], measure: f64) -> Result<WaveFunction, CliError> {
    let grid = rho.grid().clone();
    check_dim("frequency", xi, grid.dim())?;
    let values = rho
        .values()
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let x = grid.position(k);
            let phase: f64 = xi.iter().enumerate().map(|(j, f)| f * x[j]).sum();
            Complex64::from_polar(r / measure, phase)
        })
        .collect();
    Ok(WaveFunction::new(grid, values)?)
}

/// `sum_j (nu_j - xi_j) x_j rho(x)`.
pub fn shift_phase(rho: &RealField, xi: &[f64], nu: &[f64]) -> Result<RealField, CliError> {
    let grid = rho.grid().clone();
    check_dim("xi", xi, grid.dim())?;
    check_dim("nu", nu, grid.dim())?;
    let values = rho
        .values()
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let x = grid.position(k);
            let lin: f64 = (0..grid.dim()).map(|j| (nu[j] - xi[j]) * x[j]).sum();
            lin * r
        })
        .collect();
    Ok(RealField::new(grid, values)?)
}

/// Volume of the box `[lo, hi]`.
pub fn box_measure(lo: &[f64], hi: &[f64]) -> f64 {
    lo.iter().zip(hi).map(|(a, b)| b - a).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nlsctl_core::make_grid;
    use nlsctl_core::spectral::local_energy;
    use nlsctl_core::RegionMask;

    #[test]
    fn bump_shape() {
        assert_eq!(smooth_step(0.0), 1.0);
        assert_eq!(smooth_step(1.0), 0.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-12);
        assert!(smooth_step(0.2) > smooth_step(0.3));
    }

    #[test]
    fn patch_energy_is_frequency_squared_over_measure() {
        // the steep edge of the bump needs a fine grid for spectral accuracy
        let g = make_grid(1, 16.0, 8192).unwrap();
        let rho = region_bump(&g, &[-2.0], &[2.0], 1.0).unwrap();
        let psi = plane_patch(&rho, &[1.0], 4.0).unwrap();
        let s = RegionMask::boxed(g.clone(), &[-2.0], &[2.0]).unwrap();
        let e = local_energy(&psi, &s).unwrap();
        assert!((e - s.measure() / 16.0).abs() < 1e-9, "{e}");
        let zero = plane_patch(&rho, &[0.0], 4.0).unwrap();
        assert!(local_energy(&zero, &s).unwrap().abs() < 1e-9);
    }

    #[test]
    fn random_state_is_seeded_and_normalized() {
        let g = make_grid(1, 16.0, 256).unwrap();
        let spec = StateSpec::RandomHermite { max_degree: 4 };
        let a = initial_state(&spec, &g, 7).unwrap();
        assert_eq!(a, initial_state(&spec, &g, 7).unwrap());
        assert_ne!(a, initial_state(&spec, &g, 8).unwrap());
        assert!((l2_norm(&a) - 1.0).abs() < 1e-12);
    }
}
