//! The four experiments: each turns a config into a CSV table plus the
//! convergence checks that table must satisfy.

use std::sync::Arc;

use nlsctl_core::dynamics::ground_state;
use nlsctl_core::spectral::{apply_phase, derivative_real, local_energy, sobolev_distance, sobolev_norm_on, translate};
use nlsctl_core::{
    evolve, evolve_with_snapshots, make_grid, synthesize, ControlSchedule, ControlSegment, Grid, PhaseElement,
    RegionMask, Snapshot, SolverParams, SynthesisParams, WaveFunction,
};
use rayon::prelude::*;

use crate::checks::{check_decreasing, CheckOutcome, Strictness};
use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::fields::{box_measure, initial_state, lifted_element, phase_element, phase_field, plane_patch, region_bump, shift_phase};
use crate::table::{Cell, Sentinel, Table};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub snapshots: bool,
    pub strictness: Strictness,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub table: Table,
    pub checks: Vec<CheckOutcome>,
    pub snapshots: Option<Table>,
    /// Best schedule of a steering ladder.
    pub schedule: Option<ControlSchedule>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub const CONJUGATION_HEADER: [&str; 2] = ["tau", "error"];
pub const IMPULSE_HEADER: [&str; 4] = ["delta", "error_linear", "error_nonlinear", "sup_error_linear"];
pub const STEER_HEADER: [&str; 8] =
    ["rung", "delta", "gamma", "total_duration", "error", "max_abs_u0", "max_abs_u", "segments"];
pub const ENERGY_HEADER: [&str; 11] = [
    "rung",
    "delta",
    "gamma",
    "total_duration",
    "error_region",
    "energy_before",
    "energy_after",
    "energy_ratio",
    "reference_xi_sq",
    "reference_nu_sq",
    "truncation_floor",
];
pub const SNAPSHOT_HEADER: [&str; 5] = ["run", "t", "l2", "hs", "boundary_mass"];

pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<Report, CliError> {
    config.validate()?;
    match config.experiment {
        Experiment::ConjugationLimit { .. } => cmd_conjugation_limit(config, opts),
        Experiment::ImpulseLimit { .. } => cmd_impulse_limit(config, opts),
        Experiment::Steer { .. } => cmd_steer(config, opts),
        Experiment::EnergyShift { .. } => cmd_energy_shift(config, opts),
    }
}

fn grid_of(config: &ExperimentConfig) -> Result<Arc<Grid>, CliError> {
    Ok(make_grid(config.grid.dim, config.grid.half_width, config.grid.points)?)
}

/// A finished trajectory or the sentinel describing why it stopped.
type Trajectory = Result<(WaveFunction, Vec<Snapshot>), Sentinel>;

fn trajectory(
    psi0: &WaveFunction,
    schedule: &ControlSchedule,
    params: &SolverParams,
    snapshots: bool,
) -> Result<Trajectory, CliError> {
    let result = if snapshots {
        evolve_with_snapshots(psi0, schedule, params)
    } else {
        evolve(psi0, schedule, params).map(|psi| (psi, Vec::new()))
    };
    match result {
        Ok(v) => Ok(Ok(v)),
        Err(e) => match Sentinel::from_error(&e) {
            Some(s) => Ok(Err(s)),
            None => Err(e.into()),
        },
    }
}

fn snapshot_rows(table: &mut Table, label: &str, snaps: &[Snapshot]) {
    for s in snaps {
        table.push(vec![
            Cell::Text(label.to_string()),
            s.t.into(),
            s.l2.into(),
            s.hs.into(),
            s.boundary_mass.into(),
        ]);
    }
}

fn num_or(r: &Result<f64, Sentinel>) -> Cell {
    match r {
        Ok(v) => Cell::Num(*v),
        Err(s) => Cell::Missing(*s),
    }
}

/// `|| e^{i phi/tau} e^{-i tau P_j} e^{-i phi/tau} psi0 - e^{-i d_j phi} psi0 ||_{H^s}` over the `tau` sweep,
/// with exact propagators only.
pub fn cmd_conjugation_limit(config: &ExperimentConfig, opts: &RunOptions) -> Result<Report, CliError> {
    let Experiment::ConjugationLimit { phase, state, axis, taus } = &config.experiment else {
        return Err(CliError::Invalid("not a conjugation-limit config".into()));
    };
    let grid = grid_of(config)?;
    let axis = axis - 1;
    let psi0 = initial_state(state, &grid, config.seed)?;
    let phi = phase_field(phase, &grid)?;
    let limit = apply_phase(&psi0, &derivative_real(&phi, axis)?, -1.0)?;
    let s = config.solver.sobolev_s;
    let errors: Vec<f64> = taus
        .par_iter()
        .map(|&tau| -> Result<f64, CliError> {
            let inner = apply_phase(&psi0, &phi, -1.0 / tau)?;
            let shifted = translate(&inner, tau, axis)?;
            let outer = apply_phase(&shifted, &phi, 1.0 / tau)?;
            Ok(sobolev_distance(&outer, &limit, s)?)
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(CONJUGATION_HEADER.to_vec());
    for (tau, err) in taus.iter().zip(&errors) {
        table.push(vec![(*tau).into(), (*err).into()]);
    }
    let checks = vec![check_decreasing("error", &table.column("error"), opts.strictness)];
    Ok(Report { table, checks, snapshots: None, schedule: None })
}

/// One segment `(duration, e_j u / delta)`.
fn impulse_segment(dim: usize, direction: usize, amplitude: f64, delta: f64, duration: f64) -> Result<ControlSegment, CliError> {
    let mut u = vec![0.0; dim];
    let mut u0 = 0.0;
    if direction == 0 {
        u0 = amplitude / delta;
    } else {
        u[direction - 1] = amplitude / delta;
    }
    Ok(ControlSegment::new(duration, u0, u)?)
}

/// `R(delta, psi0, e_j u / delta)` against `exp(-i u Q_j) psi0` for `kappa = 0` and the
/// configured `kappa`, plus for `j = 0` the sup over a `t`-grid of `(0, 1)` of the linear error at time `t delta`.
pub fn cmd_impulse_limit(config: &ExperimentConfig, opts: &RunOptions) -> Result<Report, CliError> {
    let Experiment::ImpulseLimit { state, direction, amplitude, deltas, t_points } = &config.experiment else {
        return Err(CliError::Invalid("not an impulse-limit config".into()));
    };
    let (direction, u, t_points) = (*direction, *amplitude, *t_points);
    let grid = grid_of(config)?;
    let dim = grid.dim();
    let psi0 = initial_state(state, &grid, config.seed)?;
    let h0 = ground_state(&grid);
    let s = config.solver.sobolev_s;
    let target = |t: f64| -> Result<WaveFunction, CliError> {
        Ok(if direction == 0 { apply_phase(&psi0, &h0, -t * u)? } else { translate(&psi0, t * u, direction - 1)? })
    };
    let nonlinear = config.solver.clone();
    let linear = SolverParams { kappa: 0.0, ..nonlinear.clone() };
    let full_target = target(1.0)?;

    struct Row {
        cells: Vec<Cell>,
        snaps: Vec<(String, Vec<Snapshot>)>,
    }
    let rows: Vec<Row> = deltas
        .par_iter()
        .map(|&delta| -> Result<Row, CliError> {
            let sched = ControlSchedule::new(vec![impulse_segment(dim, direction, u, delta, delta)?])?;
            let mut snaps = Vec::new();
            let mut errors = Vec::new();
            for (params, label) in [(&linear, "0"), (&nonlinear, "configured")] {
                let err = match trajectory(&psi0, &sched, params, opts.snapshots)? {
                    Ok((psi, sn)) => {
                        snaps.push((format!("delta={delta:e};kappa={}", if label == "0" { 0.0 } else { params.kappa }), sn));
                        Ok(sobolev_distance(&psi, &full_target, s)?)
                    }
                    Err(sentinel) => Err(sentinel),
                };
                errors.push(err);
            }
            let sup = if direction == 0 {
                let mut worst: Result<f64, Sentinel> = Ok(0.0);
                for k in 1..=t_points {
                    let t = k as f64 / (t_points + 1) as f64;
                    let seg = impulse_segment(dim, 0, u, delta, t * delta)?;
                    let sched = ControlSchedule::new(vec![seg])?;
                    match trajectory(&psi0, &sched, &linear, false)? {
                        Ok((psi, _)) => {
                            let e = sobolev_distance(&psi, &target(t)?, s)?;
                            worst = worst.map(|w| w.max(e));
                        }
                        Err(sentinel) => {
                            worst = Err(sentinel);
                            break;
                        }
                    }
                }
                num_or(&worst)
            } else {
                Cell::Empty
            };
            Ok(Row { cells: vec![delta.into(), num_or(&errors[0]), num_or(&errors[1]), sup], snaps })
        })
        .collect::<Result<_, _>>()?;

    let mut table = Table::new(IMPULSE_HEADER.to_vec());
    let mut snapshots = Table::new(SNAPSHOT_HEADER.to_vec());
    for row in rows {
        table.push(row.cells);
        for (label, sn) in &row.snaps {
            snapshot_rows(&mut snapshots, label, sn);
        }
    }
    let mut checks = vec![
        check_decreasing("error_linear", &table.column("error_linear"), opts.strictness),
        check_decreasing("error_nonlinear", &table.column("error_nonlinear"), opts.strictness),
    ];
    if direction == 0 {
        checks.push(check_decreasing("sup_error_linear", &table.column("sup_error_linear"), opts.strictness));
    }
    Ok(Report { table, checks, snapshots: opts.snapshots.then_some(snapshots), schedule: None })
}

fn ladder(base: &SynthesisParams, rungs: usize) -> Vec<SynthesisParams> {
    let mut out = Vec::with_capacity(rungs);
    let mut p = base.clone();
    for _ in 0..rungs {
        out.push(p.clone());
        p = p.refined();
    }
    out
}

/// One compiled and simulated rung.
struct Rung {
    params: SynthesisParams,
    schedule: Result<ControlSchedule, Sentinel>,
    outcome: Result<(WaveFunction, Vec<Snapshot>), Sentinel>,
}

fn run_ladder(
    element: &PhaseElement,
    psi0: &WaveFunction,
    synthesis: &SynthesisParams,
    rungs: usize,
    solver: &SolverParams,
    snapshots: bool,
) -> Result<Vec<Rung>, CliError> {
    ladder(synthesis, rungs)
        .into_par_iter()
        .map(|params| -> Result<Rung, CliError> {
            let schedule = match synthesize(element, &params) {
                Ok(s) => Ok(s),
                Err(e) => Err(Sentinel::from_error(&e).ok_or(CliError::Core(e))?),
            };
            let outcome = match &schedule {
                Ok(s) => trajectory(psi0, s, solver, snapshots)?,
                Err(sentinel) => Err(*sentinel),
            };
            Ok(Rung { params, schedule, outcome })
        })
        .collect()
}

fn schedule_cells(rung: &Rung) -> [Cell; 3] {
    match &rung.schedule {
        Ok(s) => [s.total_duration().into(), s.max_abs_u0().into(), s.max_abs_u().into()],
        Err(_) => [Cell::Empty, Cell::Empty, Cell::Empty],
    }
}

/// Lifts the target phase, compiles it along the `(delta, gamma)` ladder and
/// measures `|| psi(tau) - e^{i phi} psi0 ||_{H^s}` for every rung.
pub fn cmd_steer(config: &ExperimentConfig, opts: &RunOptions) -> Result<Report, CliError> {
    let Experiment::Steer { phase, state, rungs } = &config.experiment else {
        return Err(CliError::Invalid("not a steer config".into()));
    };
    let synthesis = config.require_synthesis()?;
    let grid = grid_of(config)?;
    let s = config.solver.sobolev_s;
    let psi0 = initial_state(state, &grid, config.seed)?;
    let phi = phase_field(phase, &grid)?;
    let target = apply_phase(&psi0, &phi, 1.0)?;
    let (element, _) = phase_element(phase, &grid, synthesis.max_degree, s)?;
    let results = run_ladder(&element, &psi0, synthesis, *rungs, &config.solver, opts.snapshots)?;

    let mut table = Table::new(STEER_HEADER.to_vec());
    let mut snapshots = Table::new(SNAPSHOT_HEADER.to_vec());
    let mut best: Option<(f64, ControlSchedule)> = None;
    for (k, rung) in results.iter().enumerate() {
        let error = match &rung.outcome {
            Ok((psi, snaps)) => {
                snapshot_rows(&mut snapshots, &format!("rung={k}"), snaps);
                Ok(sobolev_distance(psi, &target, s)?)
            }
            Err(sentinel) => Err(*sentinel),
        };
        if let (Ok(e), Ok(sched)) = (&error, &rung.schedule) {
            if best.as_ref().is_none_or(|(b, _)| e < b) {
                best = Some((*e, sched.clone()));
            }
        }
        let [total, u0, u] = schedule_cells(rung);
        let segments = rung.schedule.as_ref().map_or(Cell::Empty, |s| s.len().into());
        table.push(vec![
            k.into(),
            rung.params.delta.into(),
            rung.params.gamma.into(),
            total,
            num_or(&error),
            u0,
            u,
            segments,
        ]);
    }
    let checks = vec![
        check_decreasing("error", &table.column("error"), opts.strictness),
        check_decreasing("total_duration", &table.column("total_duration"), opts.strictness),
    ];
    Ok(Report {
        table,
        checks,
        snapshots: opts.snapshots.then_some(snapshots),
        schedule: best.map(|(_, s)| s),
    })
}

/// Steers `phi_{xi,S}` towards `phi_{nu,S}` with the phase `(nu - xi) x rho_S` and
/// reports the `H^s(S)` error and local energies per rung.
pub fn cmd_energy_shift(config: &ExperimentConfig, opts: &RunOptions) -> Result<Report, CliError> {
    let Experiment::EnergyShift { region_lo, region_hi, xi, nu, margin, rungs } = &config.experiment else {
        return Err(CliError::Invalid("not an energy-shift config".into()));
    };
    let synthesis = config.require_synthesis()?;
    let grid = grid_of(config)?;
    let s = config.solver.sobolev_s;
    let region = RegionMask::boxed(grid.clone(), region_lo, region_hi)?;
    let rho = region_bump(&grid, region_lo, region_hi, *margin)?;
    let measure = box_measure(region_lo, region_hi);
    let psi0 = plane_patch(&rho, xi, measure)?;
    let target = plane_patch(&rho, nu, measure)?;
    let phi = shift_phase(&rho, xi, nu)?;
    let (element, _) = lifted_element(&phi, synthesis.max_degree, s)?;
    let ideal = apply_phase(&psi0, &nlsctl_core::expected_unitary_action(&element, &grid)?, 1.0)?;
    let floor = sobolev_norm_on(&ideal.sub(&target)?, s, &region)?;
    let before = local_energy(&psi0, &region)?;
    let xi_sq: f64 = xi.iter().map(|v| v * v).sum();
    let nu_sq: f64 = nu.iter().map(|v| v * v).sum();
    let results = run_ladder(&element, &psi0, synthesis, *rungs, &config.solver, opts.snapshots)?;

    let mut table = Table::new(ENERGY_HEADER.to_vec());
    let mut snapshots = Table::new(SNAPSHOT_HEADER.to_vec());
    for (k, rung) in results.iter().enumerate() {
        let measured = match &rung.outcome {
            Ok((psi, snaps)) => {
                snapshot_rows(&mut snapshots, &format!("rung={k}"), snaps);
                Ok((sobolev_norm_on(&psi.sub(&target)?, s, &region)?, local_energy(psi, &region)?))
            }
            Err(sentinel) => Err(*sentinel),
        };
        let [total, _, _] = schedule_cells(rung);
        let (error, after, ratio) = match measured {
            Ok((e, a)) => (Cell::Num(e), Cell::Num(a), Cell::Num(a / before)),
            Err(sn) => (Cell::Missing(sn), Cell::Missing(sn), Cell::Missing(sn)),
        };
        table.push(vec![
            k.into(),
            rung.params.delta.into(),
            rung.params.gamma.into(),
            total,
            error,
            before.into(),
            after,
            ratio,
            xi_sq.into(),
            nu_sq.into(),
            floor.into(),
        ]);
    }
    let checks = vec![check_decreasing("error_region", &table.column("error_region"), opts.strictness)];
    Ok(Report { table, checks, snapshots: opts.snapshots.then_some(snapshots), schedule: None })
}
