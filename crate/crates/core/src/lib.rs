//! Numerical core for small-time control of the bilinear nonlinear
//! Schrödinger equation
//!
//! ```text
//! i d/dt psi = [-Delta + u0(t) h_0(x) + <u(t), P> + kappa |psi|^{2p}] psi,   P = i grad,
//! ```
//!
//! on a periodic box standing in for `R^N` (`N` = 1 or 2).
//!
//! * [`grid`], [`field`], [`spectral`]: discretization, exact Fourier
//!   propagators, Sobolev norms and local energies.
//! * [`hermite`]: Hermite functions and coefficient-level momentum action.
//! * [`saturation`]: nested phase spaces, decomposition and the compiler from
//!   target phases to piecewise-constant control schedules.
//! * [`dynamics`]: Strang split-step integration under a schedule, and the
//!   gauge map between controls and electromagnetic fields.

pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod hermite;
pub mod saturation;
pub mod spectral;

pub use dynamics::{
    continuity_probe, evolve, evolve_with_snapshots, fields_from_controls, step_strang, FieldPair,
    Snapshot, SolverParams,
};
pub use error::{Error, Result};
pub use field::{RealField, RegionMask, WaveFunction};
pub use grid::{make_grid, Grid};
pub use hermite::{HermiteCoeffs, Parity};
pub use saturation::{
    decompose_step, expected_unitary_action, lift_target, schedule_concat, synthesize,
    ControlSchedule, ControlSegment, GammaPolicy, LiftedTarget, PhaseElement, SynthesisParams,
};
