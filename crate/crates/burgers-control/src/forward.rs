//! Time integration of the discrete state system: particles ride the flow,
//! weights follow the Jacobian ODE, amplitudes obey the Galerkin weak form
//! with implicit diffusion and explicit convection.
//!
//! Per step: (1) move particles with the field velocity (explicit Euler);
//! (2) transport weights; (3) reassemble matrices at the new positions;
//! (4) solve (M + dt ν S) α⁺ = T α + dt (u_k b_χ − C(α)), where T transfers
//! the old expansion onto the moved test set via the closed-form Gram
//! overlap. The transfer term carries the convective motion of the kernels;
//! reusing the same-position mass matrix there would count convection twice.

use crate::assembly;
use crate::control::ControlFunction;
use crate::error::{Error, Result};
use crate::particles::{
    transport_weights, ParticleField,
};
use crate::quadrature;
use crate::time::TimeGrid;

/// Default L∞ cap triggering [`Error::BlowUp`].
pub const DEFAULT_BLOWUP_CAP: f64 = 1e6;

/// Full forward solution: one particle field per time node plus the χ-load
/// vector assembled at each node's positions (reused by the adjoint and the
/// control pairing).
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub grid: TimeGrid,
    pub snapshots: Vec<ParticleField>,
    pub load_vectors: Vec<Vec<f64>>,
    pub controls_used: ControlFunction,
}

impl StateTrajectory {
    pub fn terminal(&self) -> &ParticleField {
        self.snapshots.last().expect("non-empty trajectory")
    }
}

/// Forward solve with the default blow-up cap.
pub fn solve_forward<C>(
    init: &ParticleField,
    u: &ControlFunction,
    chi: C,
    nu: f64,
) -> Result<StateTrajectory>
where
    C: Fn(f64) -> f64 + Sync,
{
    solve_forward_with(init, u, chi, nu, DEFAULT_BLOWUP_CAP)
}

/// Forward solve with an explicit blow-up cap on max_i |y_h(Φ_i)|.
pub fn solve_forward_with<C>(
    init: &ParticleField,
    u: &ControlFunction,
    chi: C,
    nu: f64,
    blowup_cap: f64,
) -> Result<StateTrajectory>
where
    C: Fn(f64) -> f64 + Sync,
{
    if !(nu > 0.0) {
        return Err(Error::Config(format!("viscosity must be positive, got {nu}")));
    }
    let grid = u.grid;
    let dt = grid.dt();
    let eps = init.kernel().epsilon;
    let n = init.len();

    let mut snapshots = Vec::with_capacity(grid.n_nodes());
    let mut load_vectors = Vec::with_capacity(grid.n_nodes());
    load_vectors.push(assembly::assemble_load(
        init.positions(),
        init.kernel(),
        &chi,
    )?);
    snapshots.push(init.clone());

    let rad = crate::particles::numeric_radius(eps);
    for k in 0..grid.n_steps {
        let old = &snapshots[k];

        // velocity and its gradient at the particles
        let (velocity, vgrad): (Vec<f64>, Vec<f64>) = old
            .positions()
            .iter()
            .map(|&p| crate::particles::evaluate_value_and_dx(old, p, rad))
            .unzip();
        let vmax = velocity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(vmax <= blowup_cap) {
            return Err(Error::BlowUp {
                step: k,
                value: vmax,
                cap: blowup_cap,
            });
        }

        let new_weights = transport_weights(old, &vgrad, dt)?;
        let new_positions: Vec<f64> = old
            .positions()
            .iter()
            .zip(&velocity)
            .map(|(&p, &v)| p + dt * v)
            .collect();
        for i in 1..n {
            if new_positions[i] <= new_positions[i - 1] {
                return Err(Error::ParticleCrossing(i - 1, i));
            }
        }

        let kernel = *old.kernel();
        let (mass, stiff) = assembly::assemble_gram(&new_positions, &kernel);
        let load = assembly::assemble_load(&new_positions, &kernel, &chi)?;
        let convection = assembly::convection_on_tests(old, old, &new_positions);
        let transfer =
            assembly::mixed_mass_apply(eps, old.positions(), old.amplitudes(), &new_positions);

        let u_k = u.values[k];
        let rhs: Vec<f64> = (0..n)
            .map(|j| transfer[j] + dt * (u_k * load[j] - convection[j]))
            .collect();

        let nb = assembly::numeric_band(&new_positions, eps);
        let system = mass.add_scaled(&stiff, dt * nu).truncated(nb);
        let factor = system.cholesky_ridged()?;
        let amplitudes = factor.solve(&rhs);
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::BlowUp {
                step: k,
                value: f64::INFINITY,
                cap: blowup_cap,
            });
        }

        snapshots.push(ParticleField::new(
            new_positions,
            new_weights,
            amplitudes,
            kernel,
        )?);
        load_vectors.push(load);
    }

    Ok(StateTrajectory {
        grid,
        snapshots,
        load_vectors,
        controls_used: u.clone(),
    })
}

/// |∫y_h(T) − ∫y_h(0) − ∫₀ᵀ u dt · ∫χ dx|: the convective and viscous terms
/// vanish on ℝ, so total mass must track the injected source.
pub fn mass_balance_defect<C>(traj: &StateTrajectory, u: &ControlFunction, chi: C) -> Result<f64>
where
    C: Fn(f64) -> f64 + Sync,
{
    let first = &traj.snapshots[0];
    let r = first.kernel().support_radius();
    let chi_mass = quadrature::integrate(
        &chi,
        first.positions()[0] - r,
        first.positions()[first.len() - 1] + r,
        1e-12,
    )?;
    let u_int = crate::control::l2_inner_time(&u.grid, &u.values, &vec![1.0; u.grid.n_nodes()]);
    Ok((traj.terminal().total_mass() - first.total_mass() - u_int * chi_mass).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::particles::{evaluate_field, seed_uniform, SeedLayout};

    fn paper_layout(h: f64) -> SeedLayout {
        SeedLayout {
            domain_lo: -5.0,
            domain_hi: 5.0,
            spacing_h: h,
            margin: 0.2,
        }
    }

    fn chi(x: f64) -> f64 {
        (-5.0 * x * x).exp()
    }

    #[test]
    fn zero_input_is_exact_fixed_point() {
        let init = seed_uniform(&paper_layout(0.2), KernelSpec::gaussian(0.4).unwrap()).unwrap();
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let u = ControlFunction::constant(grid, 0.0, (0.0, 100.0)).unwrap();
        let traj = solve_forward(&init, &u, chi, 1.0).unwrap();
        for snap in &traj.snapshots {
            assert!(snap.amplitudes().iter().all(|&a| a == 0.0));
            assert_eq!(snap.positions(), init.positions());
        }
    }

    #[test]
    fn constant_control_mass_matches_conservation_identity() {
        // d/dt ∫y = u ∫χ; with u ≡ 1: ∫y(T) = √(π/5)
        let init = seed_uniform(&paper_layout(0.1), KernelSpec::gaussian(0.25).unwrap()).unwrap();
        let grid = TimeGrid::new(1.0, 150).unwrap();
        let u = ControlFunction::constant(grid, 1.0, (0.0, 100.0)).unwrap();
        let traj = solve_forward(&init, &u, chi, 1.0).unwrap();
        let expected = (std::f64::consts::PI / 5.0).sqrt();
        let got = traj.terminal().total_mass();
        assert!(
            (got - expected).abs() < 0.02 * expected,
            "mass {got} vs {expected}"
        );
    }

    #[test]
    fn mass_defect_small_and_first_order_in_dt() {
        let init = seed_uniform(&paper_layout(0.05), KernelSpec::gaussian(0.15).unwrap()).unwrap();
        let defect_at = |nt: usize| {
            let grid = TimeGrid::new(1.0, nt).unwrap();
            let u = ControlFunction::constant(grid, 1.0, (0.0, 100.0)).unwrap();
            let traj = solve_forward(&init, &u, chi, 1.0).unwrap();
            mass_balance_defect(&traj, &u, chi).unwrap()
        };
        let d1 = defect_at(50);
        let d2 = defect_at(100);
        let expected = (std::f64::consts::PI / 5.0).sqrt();
        assert!(d1 < 0.02 * expected, "defect {d1}");
        // first-order integrator: halving dt should roughly halve the defect
        assert!(d2 < 0.8 * d1, "d1={d1} d2={d2}");
    }

    #[test]
    fn zero_control_zero_defect() {
        let init = seed_uniform(&paper_layout(0.2), KernelSpec::gaussian(0.4).unwrap()).unwrap();
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let u = ControlFunction::constant(grid, 0.0, (0.0, 100.0)).unwrap();
        let traj = solve_forward(&init, &u, chi, 1.0).unwrap();
        assert_eq!(mass_balance_defect(&traj, &u, chi).unwrap(), 0.0);
    }

    #[test]
    fn blowup_cap_triggers() {
        let init = crate::particles::project_function(
            |x: f64| 5.0 * (-x * x).exp(),
            &paper_layout(0.2),
            KernelSpec::gaussian(0.4).unwrap(),
        )
        .unwrap();
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let u = ControlFunction::constant(grid, 0.0, (0.0, 100.0)).unwrap();
        let r = solve_forward_with(&init, &u, chi, 1.0, 1e-3);
        assert!(matches!(r, Err(Error::BlowUp { .. })));
    }

    #[test]
    fn paper_configuration_stays_bounded() {
        // no blow-up for a strong admissible control at the paper's settings
        let init = seed_uniform(&paper_layout(0.1), KernelSpec::gaussian(0.3).unwrap()).unwrap();
        let grid = TimeGrid::new(1.0, 200).unwrap();
        let u = ControlFunction::constant(grid, 40.0, (0.0, 100.0)).unwrap();
        let traj = solve_forward(&init, &u, chi, 1.0).unwrap();
        let vmax = traj
            .terminal()
            .positions()
            .iter()
            .map(|&p| evaluate_field(traj.terminal(), p).abs())
            .fold(0.0, f64::max);
        assert!(vmax.is_finite() && vmax < 100.0);
    }
}
