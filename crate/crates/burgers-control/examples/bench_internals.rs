//! Rough timing breakdown of one forward solve's per-step components.
//! Run: cargo run --release --example bench_internals

use burgers_control::assembly::{assemble, convection_apply};
use burgers_control::control::ControlFunction;
use burgers_control::forward::solve_forward;
use burgers_control::kernels::KernelSpec;
use burgers_control::particles::{seed_uniform, SeedLayout};
use burgers_control::time::TimeGrid;
use std::time::Instant;

fn main() {
    let layout = SeedLayout {
        domain_lo: -5.0,
        domain_hi: 5.0,
        spacing_h: 0.1,
        margin: 0.2,
    };
    let kernel = KernelSpec::gaussian(0.3).unwrap();
    let init = seed_uniform(&layout, kernel).unwrap();
    let grid = TimeGrid::new(1.0, 500).unwrap();
    let u = ControlFunction::constant(grid, 30.0, (0.0, 100.0)).unwrap();
    let chi = |x: f64| (-5.0 * x * x).exp();

    let t0 = Instant::now();
    let traj = solve_forward(&init, &u, chi, 1.0).unwrap();
    println!("full forward solve (500 steps): {:?}", t0.elapsed());

    let field = traj.terminal();
    let reps = 500;

    let t = Instant::now();
    for _ in 0..reps {
        let c = convection_apply(field, field).unwrap();
        std::hint::black_box(c);
    }
    println!("convection x{reps}: {:?}", t.elapsed());

    let t = Instant::now();
    for _ in 0..reps {
        let m = assemble(field, chi).unwrap();
        std::hint::black_box(m);
    }
    println!("assemble (gram+load+spd check) x{reps}: {:?}", t.elapsed());
}
