//! Strang split-step integration of the controlled equation
//! `i psi_t = [-Delta + u0 h0 + <u, P> + kappa |psi|^{2p}] psi`
//! under piecewise-constant controls, and the map from controls to the
//! physical fields `(A, E)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{RealField, WaveFunction};
use crate::grid::Grid;
use crate::saturation::{ControlSchedule, ControlSegment};
use crate::spectral::{free_phase, l2_norm, sobolev_distance, sobolev_norm};

fn default_sobolev_s() -> f64 {
    1.0
}

fn default_blowup_threshold() -> f64 {
    1e6
}

fn default_max_substep_phase() -> f64 {
    0.5
}

/// Integrator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    /// Cap on the internal step.
    pub dt_max: f64,
    pub kappa: f64,
    /// Exponent `p` of the nonlinearity `|psi|^{2p}`.
    pub power: u32,
    /// Sobolev index used for error reporting.
    #[serde(default = "default_sobolev_s")]
    pub sobolev_s: f64,
    /// Abort when `sup |psi|` exceeds this.
    #[serde(default = "default_blowup_threshold")]
    pub blowup_threshold: f64,
    /// Largest phase `|u0| dt max h0` one substep may imprint, in radians.
    #[serde(default = "default_max_substep_phase")]
    pub max_substep_phase: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            dt_max: 1e-3,
            kappa: 0.0,
            power: 1,
            sobolev_s: default_sobolev_s(),
            blowup_threshold: default_blowup_threshold(),
            max_substep_phase: default_max_substep_phase(),
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadSolverParams(m));
        if !(self.dt_max.is_finite() && self.dt_max > 0.0) {
            return bad(format!("dt_max {} must be positive", self.dt_max));
        }
        if self.power < 1 {
            return bad("power must be at least 1".into());
        }
        if !self.kappa.is_finite() {
            return bad("kappa must be finite".into());
        }
        if !(self.sobolev_s.is_finite() && self.sobolev_s >= 0.0) {
            return bad(format!("sobolev_s {} must be non-negative", self.sobolev_s));
        }
        if !(self.blowup_threshold > 0.0) {
            return bad(format!("blowup_threshold {} must be positive", self.blowup_threshold));
        }
        if !(self.max_substep_phase.is_finite() && self.max_substep_phase > 0.0) {
            return bad(format!("max_substep_phase {} must be positive", self.max_substep_phase));
        }
        Ok(())
    }
}

/// `h0 = pi^{-N/4} exp(-|x|^2 / 2)` sampled on the grid.
pub fn ground_state(grid: &Arc<Grid>) -> RealField {
    let norm = PI.powf(-(grid.dim() as f64) / 4.0);
    let values = (0..grid.len())
        .map(|k| {
            let x = grid.position(k);
            norm * (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()
        })
        .collect();
    RealField::from_parts_unchecked(grid.clone(), values)
}

fn h0_max(dim: usize) -> f64 {
    PI.powf(-(dim as f64) / 4.0)
}

fn h0_max_gradient(dim: usize) -> f64 {
    h0_max(dim) * (-0.5f64).exp()
}

fn check_segment(grid: &Grid, seg: &ControlSegment) -> Result<()> {
    seg.validate()?;
    if seg.u.len() != grid.dim() {
        return Err(Error::ShapeMismatch { expected: grid.dim(), got: seg.u.len() });
    }
    Ok(())
}

/// Number of substeps used for a segment: enough to respect `dt_max` and
/// to keep the imprinted `h0` phase per substep below `max_substep_phase`.
pub fn substep_count(seg: &ControlSegment, dim: usize, params: &SolverParams) -> usize {
    let by_dt = (seg.duration / params.dt_max).ceil();
    let by_phase = (seg.u0.abs() * seg.duration * h0_max(dim) / params.max_substep_phase).ceil();
    by_dt.max(by_phase).max(1.0) as usize
}

/// Reusable buffers for one trajectory.
struct Stepper {
    grid: Arc<Grid>,
    h0: Vec<f64>,
    kinetic: Vec<Complex64>,
    phase: Vec<Complex64>,
}

impl Stepper {
    fn new(grid: &Arc<Grid>) -> Self {
        Stepper {
            grid: grid.clone(),
            h0: ground_state(grid).values().to_vec(),
            kinetic: vec![Complex64::default(); grid.len()],
            phase: vec![Complex64::default(); grid.len()],
        }
    }

    /// Fourier factor of a step, with the inverse transform scale folded in.
    fn prepare_kinetic(&mut self, dt: f64, u: &[f64]) {
        let scale = 1.0 / self.grid.len() as f64;
        for (k, z) in self.kinetic.iter_mut().enumerate() {
            *z = Complex64::cis(free_phase(&self.grid, k, dt, u)) * scale;
        }
    }

    fn prepare_potential(&mut self, tau: f64, u0: f64) {
        for (z, h) in self.phase.iter_mut().zip(&self.h0) {
            *z = Complex64::cis(-tau * u0 * h);
        }
    }

    fn kinetic_step(&self, psi: &mut [Complex64]) {
        self.grid.fft(psi);
        for (z, m) in psi.iter_mut().zip(&self.kinetic) {
            *z *= m;
        }
        self.grid.ifft_unscaled(psi);
    }

    fn multiplicative_step(&self, psi: &mut [Complex64], tau: f64, u0: f64, params: &SolverParams) {
        let (kappa, p) = (params.kappa, params.power as i32);
        for (z, h) in psi.iter_mut().zip(&self.h0) {
            let v = u0 * h + kappa * z.norm_sqr().powi(p);
            *z *= Complex64::cis(-tau * v);
        }
    }

    /// Runs `steps` Strang steps of size `dt`, merging adjacent half steps.
    /// Expects `prepare_kinetic(dt, u)` to have been called. When the
    /// equation is linear, `phase` must hold `exp(-i dt u0 h0)` on entry.
    fn run(
        &mut self,
        psi: &mut [Complex64],
        steps: usize,
        dt: f64,
        u0: f64,
        params: &SolverParams,
        guard: &mut dyn FnMut(usize, &[Complex64]) -> Result<()>,
    ) -> Result<()> {
        let linear = params.kappa == 0.0;
        if linear && u0 == 0.0 {
            for s in 0..steps {
                self.kinetic_step(psi);
                guard(s, psi)?;
            }
            return Ok(());
        }
        let half = if linear {
            let half: Vec<Complex64> = self.h0.iter().map(|h| Complex64::cis(-0.5 * dt * u0 * h)).collect();
            Some(half)
        } else {
            None
        };
        let apply = |psi: &mut [Complex64], tau: f64, table: Option<&[Complex64]>| match table {
            Some(t) => psi.iter_mut().zip(t).for_each(|(z, m)| *z *= m),
            None => self.multiplicative_step(psi, tau, u0, params),
        };
        apply(psi, 0.5 * dt, half.as_deref());
        for s in 0..steps {
            self.kinetic_step(psi);
            if s + 1 < steps {
                guard(s, psi)?;
                apply(psi, dt, if linear { Some(&self.phase) } else { None });
            } else {
                apply(psi, 0.5 * dt, half.as_deref());
                guard(s, psi)?;
            }
        }
        Ok(())
    }
}

fn blowup_guard(
    params: &SolverParams,
    segment: usize,
    t0: f64,
    dt: f64,
) -> impl FnMut(usize, &[Complex64]) -> Result<()> + '_ {
    let check_each = params.kappa != 0.0;
    move |s, psi| {
        if !check_each && s % 64 != 63 {
            return Ok(());
        }
        let sup = psi.iter().fold(0.0f64, |m, z| if z.is_finite() { m.max(z.norm()) } else { f64::INFINITY });
        if sup > params.blowup_threshold {
            return Err(Error::BlowUp { segment, time: t0 + (s + 1) as f64 * dt, sup });
        }
        Ok(())
    }
}

/// One Strang step of size `dt` with the controls of `seg`: half multiplicative
/// step, full Fourier step, half multiplicative step.
pub fn step_strang(psi: &WaveFunction, dt: f64, seg: &ControlSegment, params: &SolverParams) -> Result<WaveFunction> {
    params.validate()?;
    let grid = psi.grid().clone();
    check_segment(&grid, seg)?;
    if !(dt.is_finite() && dt > 0.0 && dt <= params.dt_max) {
        return Err(Error::BadSolverParams(format!("step {dt} must lie in (0, dt_max]")));
    }
    if !psi.is_finite() {
        return Err(Error::NonFinite("wave function"));
    }
    let mut stepper = Stepper::new(&grid);
    stepper.prepare_kinetic(dt, &seg.u);
    stepper.prepare_potential(dt, seg.u0);
    let mut values = psi.values().to_vec();
    let mut guard = blowup_guard(params, 0, 0.0, dt);
    stepper.run(&mut values, 1, dt, seg.u0, params, &mut guard)?;
    Ok(WaveFunction::from_parts_unchecked(grid, values))
}

/// State diagnostics at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub l2: f64,
    pub hs: f64,
    pub boundary_mass: f64,
}

fn snapshot(t: f64, psi: &WaveFunction, params: &SolverParams) -> Result<Snapshot> {
    Ok(Snapshot { t, l2: l2_norm(psi), hs: sobolev_norm(psi, params.sobolev_s)?, boundary_mass: psi.boundary_mass() })
}

fn integrate(
    psi0: &WaveFunction,
    schedule: &ControlSchedule,
    params: &SolverParams,
    mut on_segment_end: impl FnMut(f64, &WaveFunction) -> Result<()>,
) -> Result<WaveFunction> {
    params.validate()?;
    if !psi0.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    let grid = psi0.grid().clone();
    let dim = grid.dim();
    let mut psi = psi0.clone();
    let mut stepper = Stepper::new(&grid);
    let mut t = 0.0;
    for (index, seg) in schedule.segments().iter().enumerate() {
        check_segment(&grid, seg)?;
        let momentum = seg.u0.abs() * seg.duration * h0_max_gradient(dim);
        if momentum > grid.nyquist() {
            return Err(Error::ControlUnresolved { segment: index, momentum, cutoff: grid.nyquist() });
        }
        let linear_free = params.kappa == 0.0 && seg.u0 == 0.0;
        // the free flow is exact in one Fourier step
        let steps = if linear_free { 1 } else { substep_count(seg, dim, params) };
        let dt = seg.duration / steps as f64;
        stepper.prepare_kinetic(dt, &seg.u);
        if params.kappa == 0.0 {
            stepper.prepare_potential(dt, seg.u0);
        }
        let mut guard = blowup_guard(params, index, t, dt);
        stepper.run(psi.values_mut(), steps, dt, seg.u0, params, &mut guard)?;
        t += seg.duration;
        on_segment_end(t, &psi)?;
    }
    Ok(psi)
}

/// Propagates `psi0` through every segment of `schedule`.
pub fn evolve(psi0: &WaveFunction, schedule: &ControlSchedule, params: &SolverParams) -> Result<WaveFunction> {
    integrate(psi0, schedule, params, |_, _| Ok(()))
}

/// Like [`evolve`], also recording a snapshot at `t = 0` and at the end of every segment.
pub fn evolve_with_snapshots(
    psi0: &WaveFunction,
    schedule: &ControlSchedule,
    params: &SolverParams,
) -> Result<(WaveFunction, Vec<Snapshot>)> {
    params.validate()?;
    let mut snaps = vec![snapshot(0.0, psi0, params)?];
    let psi = integrate(psi0, schedule, params, |t, psi| {
        snaps.push(snapshot(t, psi, params)?);
        Ok(())
    })?;
    Ok((psi, snaps))
}

/// `H^s` distance of two initial states and of their evolutions under the same schedule.
pub fn continuity_probe(
    psi0: &WaveFunction,
    psi1: &WaveFunction,
    schedule: &ControlSchedule,
    params: &SolverParams,
) -> Result<(f64, f64)> {
    psi0.same_grid(psi1)?;
    let s = params.sobolev_s;
    let input = sobolev_distance(psi0, psi1, s)?;
    let out0 = evolve(psi0, schedule, params)?;
    let out1 = evolve(psi1, schedule, params)?;
    Ok((input, sobolev_distance(&out0, &out1, s)?))
}

/// Magnetic and electric fields generating the same dynamics as a control segment.
///
/// `E` is kept as its spatial profile `u0 h0` and a spatially constant shift
/// `|u|^2 / 4`, so that `|A|^2 + E - u0 h0` is evaluated without rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    /// `A = -u / 2`.
    pub a: Vec<f64>,
    profile: RealField,
    shift: f64,
}

impl FieldPair {
    /// `u0 h0` part of `E`.
    pub fn profile(&self) -> &RealField {
        &self.profile
    }

    /// `|u|^2 / 4`, subtracted from the profile in `E`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `E = u0 h0 - |u|^2 / 4` on the grid.
    pub fn electric(&self) -> RealField {
        let values = self.profile.values().iter().map(|p| p - self.shift).collect();
        RealField::from_parts_unchecked(self.profile.grid().clone(), values)
    }

    pub fn a_norm_sq(&self) -> f64 {
        self.a.iter().map(|a| a * a).sum()
    }

    /// Pointwise `|A|^2 + E - u0 h0`.
    pub fn gauge_residual(&self, seg: &ControlSegment) -> Vec<f64> {
        let h0 = ground_state(self.profile.grid());
        let a2 = self.a_norm_sq();
        self.profile
            .values()
            .iter()
            .zip(h0.values())
            .map(|(p, h)| (a2 - self.shift) + (p - seg.u0 * h))
            .collect()
    }

    /// Recovers `(u0, u)`.
    pub fn controls(&self) -> (f64, Vec<f64>) {
        let h0 = ground_state(self.profile.grid());
        let (k, peak) = h0.values().iter().enumerate().fold((0, 0.0), |b, (k, &v)| if v > b.1 { (k, v) } else { b });
        (self.profile.values()[k] / peak, self.a.iter().map(|a| -2.0 * a).collect())
    }
}

/// `A = -u / 2`, `E = u0 h0 - |u|^2 / 4`.
pub fn fields_from_controls(seg: &ControlSegment, grid: &Arc<Grid>) -> Result<FieldPair> {
    check_segment(grid, seg)?;
    let a: Vec<f64> = seg.u.iter().map(|u| -u / 2.0).collect();
    let shift = a.iter().map(|a| a * a).sum();
    let profile = ground_state(grid).scale(seg.u0);
    Ok(FieldPair { a, profile, shift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::spectral::free_propagate;

    fn h0_state(grid: &Arc<Grid>) -> WaveFunction {
        WaveFunction::from_real(&ground_state(grid))
    }

    fn seg(d: f64, u0: f64, u: f64) -> ControlSegment {
        ControlSegment::new(d, u0, vec![u]).unwrap()
    }

    fn params(kappa: f64, dt_max: f64) -> SolverParams {
        SolverParams { dt_max, kappa, ..SolverParams::default() }
    }

    #[test]
    fn free_step_is_exact() {
        let g = make_grid(1, 16.0, 256).unwrap();
        let psi = h0_state(&g);
        let out = step_strang(&psi, 1e-3, &seg(1.0, 0.0, 0.7), &params(0.0, 1e-3)).unwrap();
        let exact = free_propagate(&psi, 1e-3, &[0.7]).unwrap();
        assert!(out.sub(&exact).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn step_preserves_mass() {
        let g = make_grid(1, 16.0, 256).unwrap();
        let psi = h0_state(&g).scale(Complex64::new(1.3, 0.0));
        let out = step_strang(&psi, 1e-2, &seg(1.0, 40.0, -3.0), &params(2.0, 1e-2)).unwrap();
        assert!((l2_norm(&out) - l2_norm(&psi)).abs() < 1e-12);
    }

    #[test]
    fn step_rejects_oversized_dt() {
        let g = make_grid(1, 16.0, 64).unwrap();
        assert!(step_strang(&h0_state(&g), 0.1, &seg(1.0, 0.0, 0.0), &params(0.0, 1e-2)).is_err());
    }

    #[test]
    fn strang_is_second_order() {
        let g = make_grid(1, 16.0, 256).unwrap();
        let psi = h0_state(&g);
        let p = params(1.0, 1e-3);
        let s = seg(1.0, 0.0, 0.0);
        let one = |dt: f64| step_strang(&psi, dt, &s, &p).unwrap();
        let two = |dt: f64| {
            let mid = step_strang(&psi, dt / 2.0, &s, &p).unwrap();
            step_strang(&mid, dt / 2.0, &s, &p).unwrap()
        };
        let e1 = l2_norm(&one(1e-3).sub(&two(1e-3)).unwrap());
        let e2 = l2_norm(&one(5e-4).sub(&two(5e-4)).unwrap());
        // local error O(dt^3): ratio 8; accept anything clearly above first order
        let ratio = e1 / e2;
        assert!(ratio > 6.0 && ratio < 10.0, "ratio {ratio}");
    }

    #[test]
    fn empty_schedule_is_identity() {
        let g = make_grid(1, 16.0, 64).unwrap();
        let psi = h0_state(&g);
        assert_eq!(evolve(&psi, &ControlSchedule::empty(), &params(1.0, 1e-3)).unwrap(), psi);
    }

    #[test]
    fn linear_segment_matches_closed_form() {
        let g = make_grid(1, 16.0, 256).unwrap();
        let psi = h0_state(&g);
        let sched = ControlSchedule::new(vec![seg(0.37, 0.0, 2.5)]).unwrap();
        let out = evolve(&psi, &sched, &params(0.0, 1e-2)).unwrap();
        let exact = free_propagate(&psi, 0.37, &[2.5]).unwrap();
        assert!(sobolev_distance(&out, &exact, 1.0).unwrap() < 1e-10);
    }

    #[test]
    fn substeps_are_derated_for_strong_pulses() {
        let p = params(0.0, 1e-2);
        assert_eq!(substep_count(&seg(0.05, 0.0, 0.0), 1, &p), 5);
        let strong = seg(1e-3, -1e4, 0.0);
        let n = substep_count(&strong, 1, &p);
        assert!(1e4 * (1e-3 / n as f64) * h0_max(1) <= 0.5);
        assert!(n > 1);
    }

    #[test]
    fn time_reversal() {
        let g = make_grid(1, 16.0, 256).unwrap();
        let psi0 = h0_state(&g);
        let p = params(1.0, 1e-3);
        let sched = ControlSchedule::new(vec![seg(0.05, 3.0, 1.0), seg(0.03, -2.0, -0.5)]).unwrap();
        let forward = evolve(&psi0, &sched, &p).unwrap();
        let back = evolve(&forward.conj(), &sched.time_reversed(), &p).unwrap().conj();
        assert!(sobolev_distance(&back, &psi0, 1.0).unwrap() < 5e-8);
    }

    #[test]
    fn blowup_guard_fires() {
        let g = make_grid(1, 16.0, 64).unwrap();
        let psi = h0_state(&g);
        let mut p = params(1.0, 1e-2);
        p.blowup_threshold = 0.1;
        let sched = ControlSchedule::new(vec![seg(0.02, 0.0, 0.0)]).unwrap();
        assert!(matches!(evolve(&psi, &sched, &p), Err(Error::BlowUp { segment: 0, .. })));
    }

    #[test]
    fn unresolved_pulse_is_reported() {
        let g = make_grid(1, 16.0, 64).unwrap();
        let sched = ControlSchedule::new(vec![seg(1e-3, 1e6, 0.0)]).unwrap();
        let err = evolve(&h0_state(&g), &sched, &params(0.0, 1e-2)).unwrap_err();
        assert!(matches!(err, Error::ControlUnresolved { segment: 0, .. }));
    }

    #[test]
    fn snapshots_at_segment_ends() {
        let g = make_grid(1, 16.0, 128).unwrap();
        let sched = ControlSchedule::new(vec![seg(0.1, 1.0, 0.0), seg(0.2, 0.0, 1.0)]).unwrap();
        let (_, snaps) = evolve_with_snapshots(&h0_state(&g), &sched, &params(1.0, 1e-2)).unwrap();
        assert_eq!(snaps.len(), 3);
        assert_eq!(snaps[0].t, 0.0);
        assert!((snaps[2].t - 0.3).abs() < 1e-15);
        for s in &snaps {
            assert!((s.l2 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn impulse_limit_improves() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let psi0 = h0_state(&g);
        let h0 = ground_state(&g);
        let target = crate::spectral::apply_phase(&psi0, &h0, 1.0).unwrap();
        let p = params(1.0, 1e-3);
        let errs: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&d| {
                let sched = ControlSchedule::new(vec![seg(d, -1.0 / d, 0.0)]).unwrap();
                sobolev_distance(&evolve(&psi0, &sched, &p).unwrap(), &target, 1.0).unwrap()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn fields_of_simple_controls() {
        let g = make_grid(1, 16.0, 64).unwrap();
        let f = fields_from_controls(&seg(1.0, 1.0, 0.0), &g).unwrap();
        assert_eq!(f.a, vec![-0.0]);
        assert_eq!(f.electric(), ground_state(&g));
        let f = fields_from_controls(&seg(1.0, 0.0, 2.0), &g).unwrap();
        assert_eq!(f.a, vec![-1.0]);
        assert!(f.electric().values().iter().all(|&e| e == -1.0));
        assert!(f.gauge_residual(&seg(1.0, 0.0, 2.0)).iter().all(|&r| r == 0.0));
        let (u0, u) = fields_from_controls(&seg(1.0, 2.5, -3.0), &g).unwrap().controls();
        assert!((u0 - 2.5).abs() < 1e-14);
        assert_eq!(u, vec![-3.0]);
    }

    #[test]
    fn continuity_of_identical_states() {
        let g = make_grid(1, 16.0, 128).unwrap();
        let psi = h0_state(&g);
        let sched = ControlSchedule::new(vec![seg(0.1, 2.0, 1.0)]).unwrap();
        let (i, o) = continuity_probe(&psi, &psi, &sched, &params(1.0, 1e-2)).unwrap();
        assert_eq!(i, 0.0);
        assert!(o <= 1e-10);
    }
}
