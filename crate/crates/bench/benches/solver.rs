use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use nlsctl_core::dynamics::ground_state;
use nlsctl_core::{
    evolve, make_grid, step_strang, synthesize, ControlSchedule, ControlSegment, GammaPolicy, PhaseElement,
    SolverParams, SynthesisParams, WaveFunction,
};

fn strang(c: &mut Criterion) {
    let grid = make_grid(1, 16.0, 512).unwrap();
    let psi = WaveFunction::from_real(&ground_state(&grid));
    let seg = ControlSegment::new(1e-3, 5.0, vec![1.0]).unwrap();
    let params = SolverParams { dt_max: 1e-3, kappa: 1.0, ..SolverParams::default() };
    c.bench_function("strang_step_n512", |b| b.iter(|| step_strang(black_box(&psi), 1e-3, &seg, &params).unwrap()));

    let sched = ControlSchedule::new(vec![ControlSegment::new(1e-2, -100.0, vec![0.0]).unwrap()]).unwrap();
    c.bench_function("impulse_pulse_n512", |b| b.iter(|| evolve(black_box(&psi), &sched, &params).unwrap()));
}

fn compile(c: &mut Criterion) {
    let e = PhaseElement::from_vec(vec![0.1, -0.2, 0.3, 0.05, -0.1, 0.2, 0.1]).unwrap();
    let params = SynthesisParams {
        time_budget: 10.0,
        gamma: 0.2,
        delta: 1e-6,
        refine_ratio: 0.5,
        max_degree: 6,
        gamma_policy: GammaPolicy::Nested,
    };
    c.bench_function("synthesize_level6", |b| b.iter(|| synthesize(black_box(&e), &params).unwrap()));
}

criterion_group!(benches, strang, compile);
criterion_main!(benches);
