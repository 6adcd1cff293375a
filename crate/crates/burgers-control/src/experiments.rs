//! Experiment orchestration: backend construction from a [`ProblemConfig`],
//! the reference-solution cache, and the three convergence sweeps.

use crate::analysis::{error_h1_time, error_l2v, fit_slope, ConvergenceReport, ErrorRecord};
use crate::config::ProblemConfig;
use crate::control::ControlFunction;
use crate::csvio;
use crate::error::Result;
use crate::forward::StateTrajectory;
use crate::optimize::{
    optimize, OptimizationResult, ParticleBackend, ReferenceBackend,
};
use crate::particles::seed_uniform;
use crate::reference::{solve_reference_adjoint, ReferenceSolution};
use std::path::Path;
use std::time::Instant;

/// Closure type bundling a Gaussian bump config field.
pub type BumpFn = Box<dyn Fn(f64) -> f64 + Sync + Send>;

/// Particle backend for the configured problem, optionally overriding the
/// particle resolution.
pub fn particle_backend(
    cfg: &ProblemConfig,
    spacing_h: f64,
    epsilon: f64,
) -> Result<ParticleBackend<impl Fn(f64) -> f64 + Sync + Copy, impl Fn(f64) -> f64 + Sync + Copy>>
{
    let mut layout = cfg.layout();
    layout.spacing_h = spacing_h;
    let kernel = crate::kernels::KernelSpec::gaussian(epsilon)?;
    let y0 = cfg.y0;
    let init = if y0.amplitude == 0.0 {
        seed_uniform(&layout, kernel)?
    } else {
        crate::particles::project_function(y0.as_fn(), &layout, kernel)?
    };
    Ok(ParticleBackend {
        init,
        chi: cfg.chi.as_fn(),
        y_d: cfg.y_d.as_fn(),
        nu: cfg.nu,
        sigma: cfg.sigma,
        blowup_cap: cfg.blowup_cap,
    })
}

pub fn reference_backend(
    cfg: &ProblemConfig,
) -> ReferenceBackend<
    impl Fn(f64) -> f64 + Sync + Copy,
    impl Fn(f64) -> f64 + Sync + Copy,
    impl Fn(f64) -> f64 + Sync + Copy,
> {
    ReferenceBackend {
        config: cfg.reference_config(),
        chi: cfg.chi.as_fn(),
        y_d: cfg.y_d.as_fn(),
        y0: cfg.y0.as_fn(),
        sigma: cfg.sigma,
    }
}

/// Cold-start control u⁰ ≡ max(u_lower, 0) clipped into the admissible box.
pub fn initial_control(cfg: &ProblemConfig) -> Result<ControlFunction> {
    let grid = cfg.time_grid()?;
    let start = 0.0f64.clamp(cfg.u_lower, cfg.u_upper);
    ControlFunction::constant(grid, start, cfg.bounds())
}

/// Run the particle optimization at the configured resolution.
pub fn run_particle_optimize(cfg: &ProblemConfig) -> Result<OptimizationResult<StateTrajectory>> {
    let backend = particle_backend(cfg, cfg.spacing_h, cfg.epsilon)?;
    optimize(&backend, &initial_control(cfg)?, &cfg.optimize_options())
}

/// Run the reference optimization; the returned solution embeds the optimal
/// control and the adjoint of the optimal state.
pub fn run_reference_optimize(cfg: &ProblemConfig) -> Result<OptimizationResult<ReferenceSolution>> {
    let backend = reference_backend(cfg);
    let mut result = optimize(&backend, &initial_control(cfg)?, &cfg.optimize_options())?;
    let adj = solve_reference_adjoint(&result.final_state, cfg.y_d.as_fn());
    result.final_state.adjoint = Some(adj);
    result.final_state.control = Some(result.control.clone());
    Ok(result)
}

/// Load the cached reference solution for this config, or compute and cache
/// it. The cache key hashes the reference-relevant config subset.
pub fn cached_reference(cfg: &ProblemConfig, out_dir: &Path) -> Result<ReferenceSolution> {
    let path = out_dir.join(format!("reference-{:016x}.bin", cfg.reference_key()));
    if path.exists() {
        if let Ok(sol) = csvio::read_reference_cache(&path) {
            return Ok(sol);
        }
    }
    let result = run_reference_optimize(cfg)?;
    let mut sol = result.final_state;
    sol.adjoint = None; // not needed by the error metrics; keeps the cache lean
    csvio::write_reference_cache(&path, &sol)?;
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Vary ε at fixed h.
    EpsFixedH,
    /// Vary h at fixed ε.
    HFixedEps,
    /// Couple ε = √h.
    Coupled,
}

/// The (h, ε) pairs of a sweep under the given config.
pub fn sweep_points(cfg: &ProblemConfig, kind: SweepKind) -> Vec<(f64, f64)> {
    match kind {
        SweepKind::EpsFixedH => cfg
            .sweep_eps
            .iter()
            .map(|&eps| (cfg.spacing_h, eps))
            .collect(),
        SweepKind::HFixedEps => cfg
            .sweep_inv_h
            .iter()
            .map(|&inv| (1.0 / inv, cfg.epsilon))
            .collect(),
        SweepKind::Coupled => cfg
            .sweep_coupled_h
            .iter()
            .map(|&h| (h, h.sqrt()))
            .collect(),
    }
}

/// Run a full convergence sweep against the (cached) reference optimum. Per
/// sweep point: particle optimization, then errors of the optimal state and
/// control against the reference. Failures become NaN rows and the sweep
/// continues. Slopes are fitted against h for h-based sweeps and against ε
/// for the ε sweep, using only the finite rows.
pub fn run_convergence(
    cfg: &ProblemConfig,
    kind: SweepKind,
    reference: &ReferenceSolution,
) -> ConvergenceReport {
    let ref_u = reference
        .control
        .as_ref()
        .expect("reference must carry its optimal control");
    let mut records = Vec::new();
    for (h, eps) in sweep_points(cfg, kind) {
        let start = Instant::now();
        let outcome = (|| -> Result<(f64, f64)> {
            let backend = particle_backend(cfg, h, eps)?;
            let result = optimize(&backend, &initial_control(cfg)?, &cfg.optimize_options())?;
            let err_y = error_l2v(&result.final_state, reference)?;
            let err_u = error_h1_time(&result.control, ref_u)?;
            Ok((err_y, err_u))
        })();
        let runtime_s = start.elapsed().as_secs_f64();
        let (err_y, err_u) = outcome.unwrap_or((f64::NAN, f64::NAN));
        records.push(ErrorRecord {
            h,
            epsilon: eps,
            err_y_l2v: err_y,
            err_u_h1: err_u,
            runtime_s,
        });
    }

    let scale = |r: &ErrorRecord| match kind {
        SweepKind::EpsFixedH => r.epsilon,
        _ => r.h,
    };
    let pts_y: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.err_y_l2v.is_finite())
        .map(|r| (scale(r), r.err_y_l2v))
        .collect();
    let pts_u: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.err_u_h1.is_finite())
        .map(|r| (scale(r), r.err_u_h1))
        .collect();
    let slope_y = fit_slope(&pts_y).unwrap_or(f64::NAN);
    let slope_u = fit_slope(&pts_u).unwrap_or(f64::NAN);
    ConvergenceReport {
        records,
        slope_y,
        slope_u,
    }
}
