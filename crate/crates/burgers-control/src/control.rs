//! Control representation on the time grid, the H¹(0,T) inner product and
//! Riesz inverse, box projection, and the reduced gradient.
//!
//! One discrete H¹(0,T) product is used everywhere: trapezoid (lumped) mass
//! plus exact piecewise-linear stiffness from forward-difference slopes. The
//! Riesz solve, the cost regularization and every gradient norm agree on it.

use crate::adjoint::AdjointTrajectory;
use crate::error::{Error, Result};
use crate::forward::StateTrajectory;
use crate::linalg::solve_tridiag;
use crate::particles::evaluate_field;
use crate::quadrature;
use crate::time::TimeGrid;

/// Nodal control values on a [`TimeGrid`] with box bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlFunction {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub bounds: (f64, f64),
}

impl ControlFunction {
    pub fn new(grid: TimeGrid, values: Vec<f64>, bounds: (f64, f64)) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::GridMismatch(format!(
                "{} values on a grid with {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        if !(bounds.0 <= bounds.1 && bounds.0.is_finite() && bounds.1.is_finite()) {
            return Err(Error::Config(format!(
                "invalid control bounds [{}, {}]",
                bounds.0, bounds.1
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite control value".into()));
        }
        Ok(Self {
            grid,
            values,
            bounds,
        })
    }

    pub fn constant(grid: TimeGrid, c: f64, bounds: (f64, f64)) -> Result<Self> {
        Self::new(grid, vec![c; grid.n_nodes()], bounds)
    }
}

/// Trapezoid L²(0,T) inner product of nodal functions.
pub fn l2_inner_time(grid: &TimeGrid, a: &[f64], b: &[f64]) -> f64 {
    let dt = grid.dt();
    let n = grid.n_nodes();
    assert!(a.len() == n && b.len() == n);
    let mut acc = 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
    for k in 1..n - 1 {
        acc += a[k] * b[k];
    }
    acc * dt
}

/// Discrete H¹(0,T) inner product: trapezoid mass + forward-difference
/// slope product (exact for the piecewise-linear interpolants).
pub fn h1_inner_time(grid: &TimeGrid, a: &[f64], b: &[f64]) -> f64 {
    let dt = grid.dt();
    let mut acc = l2_inner_time(grid, a, b);
    for k in 0..grid.n_steps {
        acc += (a[k + 1] - a[k]) * (b[k + 1] - b[k]) / dt;
    }
    acc
}

pub fn h1_norm_time(grid: &TimeGrid, a: &[f64]) -> f64 {
    h1_inner_time(grid, a, a).sqrt()
}

/// Solve (M_lump + K) g = r for a raw linear-functional coefficient vector r
/// (the Galerkin system of -g'' + g = f with natural boundary conditions).
pub(crate) fn riesz_solve_functional(grid: &TimeGrid, r: &[f64]) -> Result<Vec<f64>> {
    let n = grid.n_nodes();
    assert_eq!(r.len(), n);
    let dt = grid.dt();
    let inv = 1.0 / dt;
    let mut diag = vec![dt + 2.0 * inv; n];
    diag[0] = 0.5 * dt + inv;
    diag[n - 1] = 0.5 * dt + inv;
    let off = vec![-inv; n - 1];
    solve_tridiag(&off, &diag, &off, r).ok_or(Error::SingularSystem)
}

/// Riesz inverse of the H¹(0,T) product applied to an L²(0,T) function given
/// by nodal values: returns g with ⟨g, v⟩_{H¹} = ⟨f, v⟩_{L²} for all v.
pub fn riesz_inverse_h1(grid: &TimeGrid, f: &[f64]) -> Result<Vec<f64>> {
    let n = grid.n_nodes();
    if f.len() != n {
        return Err(Error::GridMismatch(format!(
            "{} values on a grid with {} nodes",
            f.len(),
            n
        )));
    }
    let dt = grid.dt();
    let mut r = vec![0.0; n];
    for k in 0..n {
        let w = if k == 0 || k == n - 1 { 0.5 * dt } else { dt };
        r[k] = w * f[k];
    }
    riesz_solve_functional(grid, &r)
}

/// Pointwise clipping onto the admissible box; idempotent.
pub fn project_admissible(u: &ControlFunction) -> ControlFunction {
    let (lo, hi) = u.bounds;
    ControlFunction {
        grid: u.grid,
        values: u.values.iter().map(|&v| v.clamp(lo, hi)).collect(),
        bounds: u.bounds,
    }
}

/// Adjoint-to-control map w(t_k) = ∫ χ_c p_h(·, t_k) dx evaluated as
/// Σ_i β_i(t_k) ⟨χ_c, δ_ε(·-Φ_i(t_k))⟩ by adaptive quadrature.
pub fn apply_b_star<C>(adj: &AdjointTrajectory, chi: C) -> Result<Vec<f64>>
where
    C: Fn(f64) -> f64 + Sync,
{
    adj.snapshots
        .iter()
        .map(|field| {
            let loads =
                crate::assembly::assemble_load(field.positions(), field.kernel(), &chi)?;
            Ok(loads
                .iter()
                .zip(field.amplitudes())
                .map(|(b, beta)| b * beta)
                .sum())
        })
        .collect()
}

/// Cost functional J = ½‖y_h(T) - y_d‖²_H + (σ/2)‖u‖²_{H¹(0,T)}; the misfit
/// integral runs over the padded particle domain.
pub fn cost<Y>(traj: &StateTrajectory, u: &ControlFunction, y_d: Y, sigma: f64) -> Result<f64>
where
    Y: Fn(f64) -> f64 + Sync,
{
    let terminal = traj.snapshots.last().expect("non-empty trajectory");
    let r = terminal.kernel().support_radius();
    let lo = terminal.positions()[0] - r;
    let hi = terminal.positions()[terminal.len() - 1] + r;
    let misfit = quadrature::integrate(
        &|x| {
            let d = evaluate_field(terminal, x) - y_d(x);
            d * d
        },
        lo,
        hi,
        1e-11,
    )?;
    Ok(0.5 * misfit + 0.5 * sigma * h1_inner_time(&u.grid, &u.values, &u.values))
}

/// Reduced gradient ∇Ĵ(u) = σ u − R⁻¹_{H¹} B* p, with the B* pairing matched
/// to the forward solver's source coupling (u_k drives step k against the
/// step-(k+1) load vector; the final node carries no misfit sensitivity).
pub fn reduced_gradient<C>(
    u: &ControlFunction,
    adj: &AdjointTrajectory,
    sigma: f64,
    chi: C,
) -> Result<Vec<f64>>
where
    C: Fn(f64) -> f64 + Sync,
{
    let loads: Vec<Vec<f64>> = adj
        .snapshots
        .iter()
        .map(|f| crate::assembly::assemble_load(f.positions(), f.kernel(), &chi))
        .collect::<Result<_>>()?;
    reduced_gradient_with_loads(u, adj, sigma, &loads)
}

pub(crate) fn reduced_gradient_with_loads(
    u: &ControlFunction,
    adj: &AdjointTrajectory,
    sigma: f64,
    loads: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let grid = &adj.grid;
    if u.grid != *grid || loads.len() != grid.n_nodes() {
        return Err(Error::GridMismatch(
            "control, adjoint and load grids must agree".into(),
        ));
    }
    let dt = grid.dt();
    let mut r = vec![0.0; grid.n_nodes()];
    for k in 0..grid.n_steps {
        let w: f64 = loads[k + 1]
            .iter()
            .zip(adj.snapshots[k + 1].amplitudes())
            .map(|(b, beta)| b * beta)
            .sum();
        r[k] = dt * w;
    }
    let lift = riesz_solve_functional(grid, &r)?;
    Ok(u.values
        .iter()
        .zip(&lift)
        .map(|(uv, lv)| sigma * uv - lv)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    #[test]
    fn riesz_constant_is_identity() {
        let g = grid(64);
        let f = vec![3.7; g.n_nodes()];
        let out = riesz_inverse_h1(&g, &f).unwrap();
        for v in out {
            assert_relative_eq!(v, 3.7, max_relative = 1e-12);
        }
    }

    #[test]
    fn riesz_scales_cosine_eigenfunctions() {
        // cos(kπt/T) are exact eigenvectors of the lumped pencil; the discrete
        // eigenvalue approaches (kπ/T)² at O(dt²)
        for n in [100usize, 200, 400] {
            let g = grid(n);
            for k in [1usize, 3] {
                let f: Vec<f64> = (0..=n)
                    .map(|j| (k as f64 * std::f64::consts::PI * g.node(j)).cos())
                    .collect();
                let out = riesz_inverse_h1(&g, &f).unwrap();
                let lam = (k as f64 * std::f64::consts::PI).powi(2);
                let expect = 1.0 / (1.0 + lam);
                // compare against the analytic eigenvalue scaling
                let mid = n / 2;
                if f[mid].abs() > 0.1 {
                    let got = out[mid] / f[mid];
                    let err = (got - expect).abs() / expect;
                    let dt2 = g.dt() * g.dt() * lam;
                    assert!(err < dt2, "n={n} k={k}: err {err} vs O(dt²) {dt2}");
                }
            }
        }
    }

    #[test]
    fn riesz_positive_operator() {
        let g = grid(80);
        let f: Vec<f64> = (0..=80).map(|j| ((j * 7) % 13) as f64 - 6.0).collect();
        let out = riesz_inverse_h1(&g, &f).unwrap();
        assert!(l2_inner_time(&g, &out, &f) >= 0.0);
    }

    #[test]
    fn projection_basics() {
        let g = grid(10);
        let u = ControlFunction::new(
            g,
            (0..11).map(|k| k as f64 - 3.0).collect(),
            (0.0, 100.0),
        )
        .unwrap();
        let p = project_admissible(&u);
        assert!(p.values.iter().all(|&v| (0.0..=100.0).contains(&v)));
        let pp = project_admissible(&p);
        assert_eq!(p.values, pp.values);

        let inside = ControlFunction::constant(g, 5.0, (0.0, 100.0)).unwrap();
        assert_eq!(project_admissible(&inside).values, inside.values);

        let below = ControlFunction::constant(g, -3.0, (0.0, 100.0)).unwrap();
        assert!(project_admissible(&below).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn h1_norm_of_cosine_matches_analytic() {
        // u = cos(πt) on (0,1): ‖u‖²_{H¹} = 1/2 + π²/2
        for n in [200usize, 400] {
            let g = grid(n);
            let u: Vec<f64> = (0..=n)
                .map(|j| (std::f64::consts::PI * g.node(j)).cos())
                .collect();
            let want = (0.5 + std::f64::consts::PI.powi(2) / 2.0).sqrt();
            let got = h1_norm_time(&g, &u);
            let err = (got - want).abs() / want;
            assert!(err < 10.0 * g.dt() * g.dt(), "n={n}: {err}");
        }
    }

    #[test]
    fn constant_regularization_exact() {
        // u ≡ c: ‖u‖²_{H¹} = c²T
        let g = grid(50);
        let u = vec![4.0; 51];
        assert_relative_eq!(h1_inner_time(&g, &u, &u), 16.0, max_relative = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn projection_nonexpansive(
            a in proptest::collection::vec(-50.0f64..150.0, 11),
            b in proptest::collection::vec(-50.0f64..150.0, 11),
        ) {
            let g = grid(10);
            let ua = ControlFunction::new(g, a, (0.0, 100.0)).unwrap();
            let ub = ControlFunction::new(g, b, (0.0, 100.0)).unwrap();
            let pa = project_admissible(&ua);
            let pb = project_admissible(&ub);
            let linf_before = ua.values.iter().zip(&ub.values)
                .map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let linf_after = pa.values.iter().zip(&pb.values)
                .map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            prop_assert!(linf_after <= linf_before + 1e-12);
            let dl2_before = l2_inner_time(
                &g,
                &ua.values.iter().zip(&ub.values).map(|(x, y)| x - y).collect::<Vec<_>>(),
                &ua.values.iter().zip(&ub.values).map(|(x, y)| x - y).collect::<Vec<_>>(),
            );
            let dl2_after = l2_inner_time(
                &g,
                &pa.values.iter().zip(&pb.values).map(|(x, y)| x - y).collect::<Vec<_>>(),
                &pa.values.iter().zip(&pb.values).map(|(x, y)| x - y).collect::<Vec<_>>(),
            );
            prop_assert!(dl2_after <= dl2_before + 1e-12);
        }
    }
}
