//! Projected steepest descent with Armijo backtracking, generic over the PDE
//! backend so the particle and reference solvers share one driver.

use crate::adjoint::solve_adjoint;
use crate::control::{
    cost as particle_cost, h1_inner_time, h1_norm_time, project_admissible,
    reduced_gradient_with_loads, ControlFunction,
};
use crate::error::Result;
use crate::forward::{solve_forward_with, StateTrajectory};
use crate::particles::ParticleField;
use crate::reference::{
    reference_cost, reference_reduced_gradient, solve_reference_adjoint,
    solve_reference_forward, ReferenceConfig, ReferenceSolution,
};

/// What the descent driver needs from a PDE solver.
pub trait CostGradientBackend {
    type State;
    fn forward(&self, u: &ControlFunction) -> Result<Self::State>;
    fn cost(&self, state: &Self::State, u: &ControlFunction) -> Result<f64>;
    fn gradient(&self, state: &Self::State, u: &ControlFunction) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions {
    pub initial_step: f64,
    pub contraction: f64,
    pub sufficient_decrease: f64,
    pub grad_tol_rel: f64,
    pub max_iters: usize,
    pub max_backtracks: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            contraction: 0.5,
            sufficient_decrease: 1e-4,
            grad_tol_rel: 2e-3,
            max_iters: 200,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult<S> {
    pub control: ControlFunction,
    pub cost_history: Vec<f64>,
    pub grad_norm_history: Vec<f64>,
    pub armijo_backtracks: Vec<usize>,
    pub steps: Vec<f64>,
    pub converged: bool,
    pub final_state: S,
}

impl<S> OptimizationResult<S> {
    pub fn iterations(&self) -> usize {
        self.cost_history.len()
    }
}

/// Iterate u ← P_ad(u − s g) with backtracking on Ĵ until the relative
/// gradient norm falls below tolerance or the iteration cap is reached. Each
/// iterate costs one forward and one adjoint solve; line-search candidates
/// cost one forward each (the accepted candidate's state is reused).
pub fn optimize<B: CostGradientBackend>(
    backend: &B,
    u0: &ControlFunction,
    opts: &OptimizeOptions,
) -> Result<OptimizationResult<B::State>> {
    let mut u = project_admissible(u0);
    let mut state = backend.forward(&u)?;
    let mut cost = backend.cost(&state, &u)?;
    let mut grad = backend.gradient(&state, &u)?;
    let mut grad_norm = h1_norm_time(&u.grid, &grad);
    let grad_floor = 1e-14 * (1.0 + h1_norm_time(&u.grid, &u.values));
    let grad_ref = grad_norm.max(grad_floor);

    let mut cost_history = vec![cost];
    let mut grad_norm_history = vec![grad_norm];
    let mut armijo_backtracks = vec![0usize];
    let mut steps = vec![0.0f64];
    let mut converged = grad_norm <= grad_floor;

    while !converged && cost_history.len() <= opts.max_iters {
        if grad_norm <= opts.grad_tol_rel * grad_ref {
            converged = true;
            break;
        }
        let gg = h1_inner_time(&u.grid, &grad, &grad);
        let mut step = opts.initial_step;
        let mut backtracks = 0usize;
        let accepted = loop {
            let candidate_values: Vec<f64> = u
                .values
                .iter()
                .zip(&grad)
                .map(|(uv, gv)| uv - step * gv)
                .collect();
            let candidate = project_admissible(&ControlFunction {
                grid: u.grid,
                values: candidate_values,
                bounds: u.bounds,
            });
            let cand_state = backend.forward(&candidate)?;
            let cand_cost = backend.cost(&cand_state, &candidate)?;
            if cand_cost <= cost - opts.sufficient_decrease * step * gg {
                break Some((candidate, cand_state, cand_cost));
            }
            backtracks += 1;
            if backtracks > opts.max_backtracks {
                break None;
            }
            step *= opts.contraction;
        };
        let Some((new_u, new_state, new_cost)) = accepted else {
            // line search stalled: keep the current iterate, report not converged
            break;
        };
        *armijo_backtracks.last_mut().unwrap() = backtracks;
        *steps.last_mut().unwrap() = step;

        u = new_u;
        state = new_state;
        cost = new_cost;
        grad = backend.gradient(&state, &u)?;
        grad_norm = h1_norm_time(&u.grid, &grad);

        cost_history.push(cost);
        grad_norm_history.push(grad_norm);
        armijo_backtracks.push(0);
        steps.push(0.0);
    }

    Ok(OptimizationResult {
        control: u,
        cost_history,
        grad_norm_history,
        armijo_backtracks,
        steps,
        converged,
        final_state: state,
    })
}

/// Moving-particle Galerkin backend.
pub struct ParticleBackend<C, Y> {
    pub init: ParticleField,
    pub chi: C,
    pub y_d: Y,
    pub nu: f64,
    pub sigma: f64,
    pub blowup_cap: f64,
}

impl<C, Y> CostGradientBackend for ParticleBackend<C, Y>
where
    C: Fn(f64) -> f64 + Sync,
    Y: Fn(f64) -> f64 + Sync,
{
    type State = StateTrajectory;

    fn forward(&self, u: &ControlFunction) -> Result<StateTrajectory> {
        solve_forward_with(&self.init, u, &self.chi, self.nu, self.blowup_cap)
    }

    fn cost(&self, state: &StateTrajectory, u: &ControlFunction) -> Result<f64> {
        particle_cost(state, u, &self.y_d, self.sigma)
    }

    fn gradient(&self, state: &StateTrajectory, u: &ControlFunction) -> Result<Vec<f64>> {
        let adj = solve_adjoint(state, &self.y_d, self.nu)?;
        reduced_gradient_with_loads(u, &adj, self.sigma, &state.load_vectors)
    }
}

/// Fine fixed-grid finite-difference backend.
pub struct ReferenceBackend<C, Y, Y0> {
    pub config: ReferenceConfig,
    pub chi: C,
    pub y_d: Y,
    pub y0: Y0,
    pub sigma: f64,
}

impl<C, Y, Y0> CostGradientBackend for ReferenceBackend<C, Y, Y0>
where
    C: Fn(f64) -> f64 + Sync,
    Y: Fn(f64) -> f64 + Sync,
    Y0: Fn(f64) -> f64 + Sync,
{
    type State = ReferenceSolution;

    fn forward(&self, u: &ControlFunction) -> Result<ReferenceSolution> {
        solve_reference_forward(u, &self.config, &self.chi, &self.y0)
    }

    fn cost(&self, state: &ReferenceSolution, u: &ControlFunction) -> Result<f64> {
        Ok(reference_cost(state, u, &self.y_d, self.sigma))
    }

    fn gradient(&self, state: &ReferenceSolution, u: &ControlFunction) -> Result<Vec<f64>> {
        let adj = solve_reference_adjoint(state, &self.y_d);
        reference_reduced_gradient(u, state, &adj, self.sigma, &self.chi)
    }
}
