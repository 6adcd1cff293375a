//! Discrete norms, particle-vs-grid error evaluation, and log-log slope
//! fitting.

use crate::control::{h1_norm_time, ControlFunction};
use crate::error::{Error, Result};
use crate::forward::StateTrajectory;
use crate::reference::ReferenceSolution;
use rayon::prelude::*;

/// Trapezoid L² norm of nodal values on a uniform grid with spacing `h`.
pub fn norm_h(h: f64, values: &[f64]) -> f64 {
    let n = values.len();
    let mut acc = 0.5 * (values[0] * values[0] + values[n - 1] * values[n - 1]);
    for v in &values[1..n - 1] {
        acc += v * v;
    }
    (acc * h).sqrt()
}

/// Central-difference derivative of nodal values (one-sided at the ends).
fn central_diff(h: f64, values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    d[0] = (values[1] - values[0]) / h;
    d[n - 1] = (values[n - 1] - values[n - 2]) / h;
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d
}

/// H¹ norm on a uniform grid: sqrt(‖v‖²_H + ‖∂x v‖²_H) with central
/// differences for the derivative.
pub fn norm_v(h: f64, values: &[f64]) -> f64 {
    let d = central_diff(h, values);
    (norm_h(h, values).powi(2) + norm_h(h, &d).powi(2)).sqrt()
}

/// ‖y_h − y_ref‖_{L²(0,T;V)}: the particle field is sampled on the reference
/// grid at every node; its spatial derivative comes from the kernel gradient
/// while the grid function is differenced centrally.
pub fn error_l2v(traj: &StateTrajectory, reference: &ReferenceSolution) -> Result<f64> {
    if traj.grid != reference.grid {
        return Err(Error::GridMismatch(format!(
            "trajectory grid {:?} vs reference grid {:?}",
            traj.grid, reference.grid
        )));
    }
    // reference grid restricted to the seeded particle window; both solutions
    // are below machine noise outside it
    let seed = &traj.snapshots[0];
    let window = (
        seed.positions()[0],
        seed.positions()[seed.len() - 1],
    );
    let i_lo = reference.x.partition_point(|&x| x < window.0 - 1e-12);
    let i_hi = reference.x.partition_point(|&x| x <= window.1 + 1e-12);
    if i_hi - i_lo < 3 {
        return Err(Error::GridMismatch(
            "reference grid does not cover the particle window".into(),
        ));
    }
    let x = &reference.x[i_lo..i_hi];
    let hx = reference.spacing();
    let dt = traj.grid.dt();
    let n_nodes = traj.grid.n_nodes();

    let per_node: Vec<f64> = (0..n_nodes)
        .into_par_iter()
        .map(|k| {
            let field = &traj.snapshots[k];
            let rad = crate::particles::numeric_radius(field.kernel().epsilon);
            let yref = &reference.states[k][i_lo..i_hi];
            let dref = central_diff(hx, yref);
            let mut val_sq = vec![0.0; x.len()];
            for (i, &xi) in x.iter().enumerate() {
                let (v, s) = crate::particles::evaluate_value_and_dx(field, xi, rad);
                let dv = v - yref[i];
                let dd = s - dref[i];
                val_sq[i] = dv * dv + dd * dd;
            }
            // trapezoid in space
            let mut acc = 0.5 * (val_sq[0] + val_sq[x.len() - 1]);
            for v in &val_sq[1..x.len() - 1] {
                acc += v;
            }
            acc * hx
        })
        .collect();

    let mut total = 0.5 * (per_node[0] + per_node[n_nodes - 1]);
    for v in &per_node[1..n_nodes - 1] {
        total += v;
    }
    Ok((total * dt).sqrt())
}

/// H¹(0,T) norm of the difference of two controls on the same grid.
pub fn error_h1_time(u1: &ControlFunction, u2: &ControlFunction) -> Result<f64> {
    if u1.grid != u2.grid {
        return Err(Error::GridMismatch(format!(
            "control grids differ: {:?} vs {:?}",
            u1.grid, u2.grid
        )));
    }
    let d: Vec<f64> = u1
        .values
        .iter()
        .zip(&u2.values)
        .map(|(a, b)| a - b)
        .collect();
    Ok(h1_norm_time(&u1.grid, &d))
}

/// One sweep point of a convergence study.
#[derive(Debug, Clone, Copy)]
pub struct ErrorRecord {
    pub h: f64,
    pub epsilon: f64,
    pub err_y_l2v: f64,
    pub err_u_h1: f64,
    pub runtime_s: f64,
}

/// Sweep rows plus fitted log-log slopes against h.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub records: Vec<ErrorRecord>,
    pub slope_y: f64,
    pub slope_u: f64,
}

/// Least-squares slope of log(error) against log(scale).
pub fn fit_slope(records: &[(f64, f64)]) -> Result<f64> {
    if records.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 records, got {}",
            records.len()
        )));
    }
    if records.iter().any(|&(s, e)| !(s > 0.0 && e > 0.0)) {
        return Err(Error::DegenerateFit("scales and errors must be positive".into()));
    }
    let xs: Vec<f64> = records.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.1.ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx < 1e-14 {
        return Err(Error::DegenerateFit("scales are not distinct".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    Ok(sxy / sxx)
}
