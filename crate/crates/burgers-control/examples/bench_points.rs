use burgers_control::control::ControlFunction;
use burgers_control::forward::solve_forward;
use burgers_control::kernels::KernelSpec;
use burgers_control::particles::{seed_uniform, SeedLayout};
use burgers_control::time::TimeGrid;
use std::time::Instant;

fn main() {
    let chi = |x: f64| (-5.0 * x * x).exp();
    for (h, eps) in [(0.05f64, 0.05f64.sqrt()), (0.025, 0.025f64.sqrt()), (0.02, 0.12), (0.01, 0.1)] {
        let layout = SeedLayout { domain_lo: -5.0, domain_hi: 5.0, spacing_h: h, margin: 0.2 };
        let init = seed_uniform(&layout, KernelSpec::gaussian(eps).unwrap()).unwrap();
        let grid = TimeGrid::new(1.0, 500).unwrap();
        let u = ControlFunction::constant(grid, 30.0, (0.0, 100.0)).unwrap();
        let t0 = Instant::now();
        let traj = solve_forward(&init, &u, chi, 1.0).unwrap();
        println!("h={h} eps={eps:.4}: N={} solve {:?}", traj.snapshots[0].len(), t0.elapsed());
    }
}
