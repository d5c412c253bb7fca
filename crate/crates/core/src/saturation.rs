//! Nested phase spaces and the compiler from target phases to control
//! schedules.
//!
//! A [`PhaseElement`] of level `n` stands for `i phi` with `phi` a real
//! Hermite expansion of total degree `<= n`. Level-0 elements `i alpha h_0`
//! are produced directly by one short, strong `h_0` pulse; higher levels are
//! split as `e = a + i sum_j P_j b_j` with `a`, `b_j` one level lower, and
//! each `exp(i P_j b_j)` is produced by conjugating a translation pulse
//! with `exp(-+ b_j / gamma)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{RealField, WaveFunction};
use crate::grid::Grid;
use crate::hermite::{apply_p_coeffs, eval_coeffs, project_to_hermite, HermiteCoeffs, Parity};
use crate::spectral::sobolev_norm;

/// Element of the level-`n` phase space: `i sum c_n h_n` with total degree `<= level`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseElement {
    level: usize,
    coeffs: HermiteCoeffs,
}

impl PhaseElement {
    pub fn new(level: usize, coeffs: HermiteCoeffs) -> Result<Self> {
        if coeffs.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("phase element"));
        }
        if let Some(d) = coeffs.total_degree() {
            if d > level {
                return Err(Error::BadSynthesisParams(format!(
                    "coefficients of total degree {d} exceed level {level}"
                )));
            }
        }
        let coeffs = match coeffs.parity() {
            Parity::Imaginary => coeffs,
            Parity::Real => HermiteCoeffs::from_terms(coeffs.dim(), Parity::Imaginary, &coeffs.terms())?
                .resized(coeffs.max_degree()),
        };
        Ok(PhaseElement { level, coeffs: coeffs.resized(level) })
    }

    /// Element whose level is the total degree of its coefficients.
    pub fn from_coeffs(coeffs: HermiteCoeffs) -> Result<Self> {
        let level = coeffs.total_degree().unwrap_or(0);
        Self::new(level, coeffs)
    }

    /// `i alpha h_{0..0}`.
    pub fn constant(dim: usize, alpha: f64) -> Result<Self> {
        let coeffs = HermiteCoeffs::from_terms(dim, Parity::Imaginary, &[(vec![0; dim], alpha)])?;
        Self::new(0, coeffs)
    }

    /// One-dimensional element from dense coefficients, level = `len - 1`.
    pub fn from_vec(coeffs: Vec<f64>) -> Result<Self> {
        let level = coeffs.len().saturating_sub(1);
        Self::new(level, HermiteCoeffs::from_vec(coeffs, Parity::Imaginary))
    }

    pub fn zero(dim: usize) -> Self {
        PhaseElement { level: 0, coeffs: HermiteCoeffs::zeros(dim, 0, Parity::Imaginary) }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    pub fn coeffs(&self) -> &HermiteCoeffs {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_zero()
    }

    pub fn scale(&self, factor: f64) -> Self {
        PhaseElement { level: self.level, coeffs: self.coeffs.scale(factor) }
    }

    /// Same coefficients viewed at a higher level.
    pub fn embed(&self, level: usize) -> Self {
        let level = level.max(self.level);
        PhaseElement { level, coeffs: self.coeffs.resized(level) }
    }
}

/// Splits a level-`n` element as `e = a + i sum_j P_j b_j` with `a`, `b_j`
/// of level `n - 1`.
///
/// Only the top total degree is peeled: a coefficient `c` at multi-index
/// `m` (total degree `n`) is cancelled by `c sqrt(2 / m_j)` on `m - e_j`
/// in `b_j`, where `j` is the first axis with `m_j > 0`. Whatever `i P_j b_j`
/// leaves two degrees lower is absorbed into `a`.
pub fn decompose_step(e: &PhaseElement) -> Result<(PhaseElement, Vec<PhaseElement>)> {
    let n = e.level;
    if n == 0 {
        return Err(Error::LevelZero);
    }
    let dim = e.dim();
    let mut bs = vec![HermiteCoeffs::zeros(dim, n - 1, Parity::Imaginary); dim];
    for (index, c) in e.coeffs.terms() {
        if index.iter().sum::<usize>() != n {
            continue;
        }
        let j = index.iter().position(|&m| m > 0).expect("top degree is positive");
        let m = index[j];
        let mut lower = index.clone();
        lower[j] -= 1;
        let prev = bs[j].get(&lower);
        bs[j].set(&lower, prev + c * (2.0 / m as f64).sqrt());
    }
    let mut a = e.coeffs.resized(n);
    for (j, b) in bs.iter().enumerate() {
        a = a.add_scaled(-1.0, &apply_p_coeffs(b, j)?)?;
    }
    // the top degree cancels exactly; drop rounding residue
    let mut residual = HermiteCoeffs::zeros(dim, n - 1, Parity::Imaginary);
    for (index, v) in a.terms() {
        if index.iter().sum::<usize>() < n {
            residual.set(&index, v);
        }
    }
    let a = PhaseElement { level: n - 1, coeffs: residual };
    let bs = bs.into_iter().map(|coeffs| PhaseElement { level: n - 1, coeffs }).collect();
    Ok((a, bs))
}

/// One constant-control interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSegment {
    #[serde(rename = "dt")]
    pub duration: f64,
    pub u0: f64,
    pub u: Vec<f64>,
}

impl ControlSegment {
    pub fn new(duration: f64, u0: f64, u: Vec<f64>) -> Result<Self> {
        let seg = ControlSegment { duration, u0, u };
        seg.validate()?;
        Ok(seg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::BadSegment(format!("duration {} must be positive", self.duration)));
        }
        if !self.u0.is_finite() || self.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadSegment("non-finite amplitude".into()));
        }
        Ok(())
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Ordered control segments, earliest first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlSchedule {
    segments: Vec<ControlSegment>,
    #[serde(rename = "total")]
    total_duration: f64,
}

#[derive(Deserialize)]
struct RawSchedule {
    segments: Vec<ControlSegment>,
    total: f64,
}

impl ControlSchedule {
    pub fn new(segments: Vec<ControlSegment>) -> Result<Self> {
        for s in &segments {
            s.validate()?;
        }
        let total_duration = segments.iter().map(|s| s.duration).sum();
        Ok(ControlSchedule { segments, total_duration })
    }

    pub fn empty() -> Self {
        ControlSchedule { segments: Vec::new(), total_duration: 0.0 }
    }

    pub fn segments(&self) -> &[ControlSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }

    pub fn max_abs_u0(&self) -> f64 {
        self.segments.iter().fold(0.0, |m, s| m.max(s.u0.abs()))
    }

    pub fn max_abs_u(&self) -> f64 {
        self.segments.iter().fold(0.0, |m, s| m.max(s.max_abs_u()))
    }

    /// Same segments run backwards in time with the momentum amplitudes
    /// negated; together with complex conjugation this inverts the flow.
    pub fn time_reversed(&self) -> Self {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| ControlSegment { duration: s.duration, u0: s.u0, u: s.u.iter().map(|v| -v).collect() })
            .collect();
        ControlSchedule::new(segments).expect("segments already validated")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schedule serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    /// Parses `{"segments":[{"dt":..,"u0":..,"u":[..]},..],"total":..}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSchedule =
            serde_json::from_str(text).map_err(|e| Error::BadSegment(format!("schedule JSON: {e}")))?;
        let schedule = ControlSchedule::new(raw.segments)?;
        let tol = 1e-12 * schedule.total_duration.max(1e-300);
        if (schedule.total_duration - raw.total).abs() > tol {
            return Err(Error::BadSegment(format!(
                "total {} does not match segment durations {}",
                raw.total, schedule.total_duration
            )));
        }
        Ok(schedule)
    }
}

/// `later * earlier`: runs `earlier` first, then `later`.
pub fn schedule_concat(later: &ControlSchedule, earlier: &ControlSchedule) -> ControlSchedule {
    let segments: Vec<_> = earlier.segments.iter().chain(&later.segments).cloned().collect();
    let total_duration = segments.iter().map(|s| s.duration).sum();
    ControlSchedule { segments, total_duration }
}

/// How the conjugation strength varies with recursion depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaPolicy {
    /// The same `gamma` at every depth.
    Uniform,
    /// `gamma^(d + 1)` at conjugation depth `d`; requires `gamma < 1`.
    #[default]
    Nested,
}

/// Knobs of the schedule compiler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisParams {
    pub time_budget: f64,
    pub gamma: f64,
    pub delta: f64,
    pub refine_ratio: f64,
    pub max_degree: usize,
    #[serde(default)]
    pub gamma_policy: GammaPolicy,
}

impl SynthesisParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadSynthesisParams(m));
        if !(self.time_budget.is_finite() && self.time_budget > 0.0) {
            return bad(format!("time_budget {} must be positive", self.time_budget));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad(format!("gamma {} must be positive", self.gamma));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return bad(format!("delta {} must be positive", self.delta));
        }
        if !(self.refine_ratio > 0.0 && self.refine_ratio < 1.0) {
            return bad(format!("refine_ratio {} must lie in (0, 1)", self.refine_ratio));
        }
        if self.gamma_policy == GammaPolicy::Nested && self.gamma >= 1.0 {
            return bad(format!("nested gamma policy needs gamma < 1, got {}", self.gamma));
        }
        Ok(())
    }

    /// Conjugation strength at a given depth.
    pub fn gamma_at(&self, depth: usize) -> f64 {
        match self.gamma_policy {
            GammaPolicy::Uniform => self.gamma,
            GammaPolicy::Nested => self.gamma.powi(depth as i32 + 1),
        }
    }

    /// The next rung of a refinement ladder: `delta` and `gamma` scaled by `refine_ratio`.
    pub fn refined(&self) -> Self {
        SynthesisParams {
            gamma: self.gamma * self.refine_ratio,
            delta: self.delta * self.refine_ratio,
            ..self.clone()
        }
    }
}

/// Compiles `e` into a schedule whose ideal action is `psi -> exp(e) psi`.
///
/// Level 0 (`i alpha h_0`): one segment `(delta, -alpha / delta, 0)`.
/// Level `n`: with `e = a + i sum_j P_j b_j`, emit for every non-zero `b_j`
/// `synth(-b_j / g) ++ (delta, 0, e_j g / delta) ++ synth(b_j / g)`, then
/// `synth(a)`, where `g` is the conjugation strength of the current depth.
pub fn synthesize(e: &PhaseElement, params: &SynthesisParams) -> Result<ControlSchedule> {
    params.validate()?;
    let mut segments = Vec::new();
    compile(e, params, 0, &mut segments)?;
    let schedule = ControlSchedule::new(segments)?;
    if schedule.total_duration >= params.time_budget {
        return Err(Error::BudgetExceeded { total: schedule.total_duration, budget: params.time_budget });
    }
    Ok(schedule)
}

fn compile(e: &PhaseElement, params: &SynthesisParams, depth: usize, out: &mut Vec<ControlSegment>) -> Result<()> {
    if e.is_zero() {
        return Ok(());
    }
    let dim = e.dim();
    if e.level == 0 {
        let alpha = e.coeffs.get(&vec![0; dim]);
        out.push(ControlSegment::new(params.delta, -alpha / params.delta, vec![0.0; dim])?);
        return Ok(());
    }
    let (a, bs) = decompose_step(e)?;
    if bs.iter().all(PhaseElement::is_zero) {
        return compile(&a, params, depth, out);
    }
    let g = params.gamma_at(depth);
    for (j, b) in bs.iter().enumerate() {
        if b.is_zero() {
            continue;
        }
        compile(&b.scale(-1.0 / g), params, depth + 1, out)?;
        let mut u = vec![0.0; dim];
        u[j] = g / params.delta;
        out.push(ControlSegment::new(params.delta, 0.0, u)?);
        compile(&b.scale(1.0 / g), params, depth + 1, out)?;
    }
    compile(&a, params, depth + 1, out)
}

/// Retries [`synthesize`], shrinking `delta` and `gamma` by `refine_ratio`
/// while the time budget is exceeded.
pub fn synthesize_within_budget(
    e: &PhaseElement,
    params: &SynthesisParams,
    max_attempts: usize,
) -> Result<(ControlSchedule, SynthesisParams)> {
    let mut current = params.clone();
    let mut last = None;
    for _ in 0..max_attempts.max(1) {
        match synthesize(e, &current) {
            Ok(s) => return Ok((s, current)),
            Err(err @ Error::BudgetExceeded { .. }) => {
                last = Some(err);
                current = current.refined();
            }
            Err(err) => return Err(err),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// The real field `phi` such that the ideal action of `e` is `psi -> exp(i phi) psi`.
pub fn expected_unitary_action(e: &PhaseElement, grid: &Arc<Grid>) -> Result<RealField> {
    eval_coeffs(&e.coeffs, grid)
}

/// A target phase lifted into the phase spaces.
#[derive(Debug, Clone)]
pub struct LiftedTarget {
    pub element: PhaseElement,
    /// `||phi - phi_M||_{H^s}` of the truncated expansion.
    pub truncation_error: f64,
}

/// Projects `phi` onto Hermite functions with every axis degree `<= max_degree`.
/// The element's level is the largest total degree this allows, `N * max_degree`.
pub fn lift_target(phi: &RealField, max_degree: usize, s: f64) -> Result<LiftedTarget> {
    let coeffs = project_to_hermite(phi, max_degree)?;
    let approx = eval_coeffs(&coeffs, phi.grid())?;
    let diff = WaveFunction::from_real(&phi.sub(&approx)?);
    let truncation_error = sobolev_norm(&diff, s)?;
    let element = PhaseElement::new(phi.grid().dim() * max_degree, coeffs)?;
    Ok(LiftedTarget { element, truncation_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::hermite::hermite_tensor;
    use approx::assert_abs_diff_eq;

    fn params(gamma: f64, delta: f64) -> SynthesisParams {
        SynthesisParams {
            time_budget: 1.0,
            gamma,
            delta,
            refine_ratio: 0.5,
            max_degree: 8,
            gamma_policy: GammaPolicy::Nested,
        }
    }

    #[test]
    fn decompose_first_hermite() {
        let e = PhaseElement::from_vec(vec![0.0, 1.0]).unwrap();
        let (a, b) = decompose_step(&e).unwrap();
        assert!(a.is_zero());
        assert_eq!(b.len(), 1);
        assert_abs_diff_eq!(b[0].coeffs().get(&[0]), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn decompose_second_hermite() {
        let e = PhaseElement::from_vec(vec![0.0, 0.0, 1.0]).unwrap();
        let (a, b) = decompose_step(&e).unwrap();
        assert_abs_diff_eq!(b[0].coeffs().get(&[1]), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.coeffs().get(&[0]), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(a.level(), 1);
    }

    #[test]
    fn decompose_embedded_constant() {
        let e = PhaseElement::constant(1, 0.4).unwrap().embed(1);
        let (a, b) = decompose_step(&e).unwrap();
        assert_eq!(a.coeffs().get(&[0]), 0.4);
        assert!(b[0].is_zero());
        assert_eq!(decompose_step(&PhaseElement::constant(1, 1.0).unwrap()).unwrap_err(), Error::LevelZero);
    }

    #[test]
    fn base_case_pulse() {
        let e = PhaseElement::constant(1, 2.0).unwrap();
        let s = synthesize(&e, &params(0.05, 0.01)).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.segments()[0], ControlSegment { duration: 0.01, u0: -200.0, u: vec![0.0] });
        assert_eq!(s.total_duration(), 0.01);
    }

    #[test]
    fn first_hermite_unrolled_by_hand() {
        // b = sqrt(2) i h0: synth(-b/g) = (d, +sqrt2/(g d), 0), then (d, 0, g/d), then (d, -sqrt2/(g d), 0)
        let (g, d) = (0.05, 0.01);
        let e = PhaseElement::from_vec(vec![0.0, 1.0]).unwrap();
        let s = synthesize(&e, &params(g, d)).unwrap();
        assert_eq!(s.len(), 3);
        let amp = 2f64.sqrt() / g / d;
        assert_abs_diff_eq!(s.segments()[0].u0, amp, epsilon = 1e-9);
        assert_eq!(s.segments()[0].u, vec![0.0]);
        assert_eq!(s.segments()[1].u0, 0.0);
        assert_abs_diff_eq!(s.segments()[1].u[0], g / d, epsilon = 1e-12);
        assert_abs_diff_eq!(s.segments()[2].u0, -amp, epsilon = 1e-9);
        assert_abs_diff_eq!(s.total_duration(), 0.03, epsilon = 1e-15);
    }

    #[test]
    fn zero_element_compiles_to_nothing() {
        let s = synthesize(&PhaseElement::zero(1), &params(0.1, 0.01)).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.total_duration(), 0.0);
    }

    #[test]
    fn budget_is_enforced() {
        let e = PhaseElement::from_vec(vec![0.0, 0.3, 0.2]).unwrap();
        let mut p = params(0.1, 0.05);
        p.time_budget = 0.1;
        assert!(matches!(synthesize(&e, &p), Err(Error::BudgetExceeded { .. })));
        let (s, used) = synthesize_within_budget(&e, &p, 10).unwrap();
        assert!(s.total_duration() < 0.1);
        assert!(used.delta < p.delta);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let e = PhaseElement::constant(1, 1.0).unwrap();
        let mut p = params(0.1, 0.0);
        assert!(matches!(synthesize(&e, &p), Err(Error::BadSynthesisParams(_))));
        p.delta = 0.01;
        p.gamma = 1.5;
        assert!(synthesize(&e, &p).is_err());
        p.gamma_policy = GammaPolicy::Uniform;
        assert!(synthesize(&e, &p).is_ok());
    }

    #[test]
    fn nested_gamma_policy() {
        let p = params(0.1, 0.01);
        assert_eq!(p.gamma_at(0), 0.1);
        assert_abs_diff_eq!(p.gamma_at(2), 1e-3, epsilon = 1e-18);
        let u = SynthesisParams { gamma_policy: GammaPolicy::Uniform, ..p };
        assert_eq!(u.gamma_at(3), 0.1);
    }

    #[test]
    fn concat_semantics() {
        let a = ControlSchedule::new(vec![ControlSegment::new(0.01, 1.0, vec![0.0]).unwrap()]).unwrap();
        let b = ControlSchedule::new(vec![ControlSegment::new(0.02, 0.0, vec![3.0]).unwrap()]).unwrap();
        let c = ControlSchedule::new(vec![ControlSegment::new(0.005, -2.0, vec![1.0]).unwrap()]).unwrap();
        assert_eq!(schedule_concat(&a, &ControlSchedule::empty()), a);
        assert_eq!(schedule_concat(&ControlSchedule::empty(), &a), a);
        let ab = schedule_concat(&b, &a);
        assert_abs_diff_eq!(ab.total_duration(), 0.03, epsilon = 1e-16);
        assert_eq!(ab.segments()[0], a.segments()[0]);
        let left = schedule_concat(&c, &schedule_concat(&b, &a));
        let right = schedule_concat(&schedule_concat(&c, &b), &a);
        assert_eq!(left, right);
    }

    #[test]
    fn schedule_json_layout() {
        let s = ControlSchedule::new(vec![ControlSegment::new(0.5, -2.0, vec![1.5]).unwrap()]).unwrap();
        assert_eq!(s.to_json(), r#"{"segments":[{"dt":0.5,"u0":-2.0,"u":[1.5]}],"total":0.5}"#);
        assert_eq!(ControlSchedule::from_json(&s.to_json()).unwrap(), s);
        assert!(ControlSchedule::from_json(r#"{"segments":[{"dt":0.5,"u0":0,"u":[0]}],"total":0.7}"#).is_err());
        assert!(ControlSchedule::from_json(r#"{"segments":[{"dt":-1,"u0":0,"u":[0]}],"total":-1}"#).is_err());
    }

    #[test]
    fn lift_of_simple_targets() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let h0 = hermite_tensor(&[0], &g).unwrap().scale(0.7);
        let lifted = lift_target(&h0, 0, 1.0).unwrap();
        assert_eq!(lifted.element.level(), 0);
        assert_abs_diff_eq!(lifted.element.coeffs().get(&[0]), 0.7, epsilon = 1e-10);
        let h3 = hermite_tensor(&[3], &g).unwrap();
        let lifted = lift_target(&h3, 3, 1.0).unwrap();
        assert_eq!(lifted.element.level(), 3);
        assert_abs_diff_eq!(lifted.element.coeffs().get(&[3]), 1.0, epsilon = 1e-8);
        assert!(lifted.truncation_error < 1e-8);
        let phi = expected_unitary_action(&lifted.element, &g).unwrap();
        assert!(phi.sub(&h3).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn two_dimensional_synthesis_peels_axes_in_order() {
        let c = HermiteCoeffs::from_terms(2, Parity::Imaginary, &[(vec![1, 1], 1.0)]).unwrap();
        let e = PhaseElement::from_coeffs(c).unwrap();
        assert_eq!(e.level(), 2);
        let (a, b) = decompose_step(&e).unwrap();
        assert!(a.is_zero());
        assert_abs_diff_eq!(b[0].coeffs().get(&[0, 1]), 2f64.sqrt(), epsilon = 1e-15);
        assert!(b[1].is_zero());
        let s = synthesize(&e, &params(0.1, 1e-3)).unwrap();
        // outer x-conjugation around two y-conjugations of h0 pulses
        let axes: Vec<usize> = s
            .segments()
            .iter()
            .filter(|seg| seg.u0 == 0.0)
            .map(|seg| seg.u.iter().position(|v| *v != 0.0).unwrap())
            .collect();
        assert_eq!(axes, vec![1, 0, 1]);
    }
}
