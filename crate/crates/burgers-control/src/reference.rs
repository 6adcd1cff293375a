//! Fine fixed-grid finite-difference solver for state, adjoint and
//! optimization: the oracle defining "continuous" errors in the convergence
//! studies.
//!
//! Space: second-order central differences on [-L, L] with homogeneous
//! Dirichlet ends, conservative convection ½∂ₓ(y²). Time: semi-implicit
//! Euler (implicit diffusion, explicit convection), matching the particle
//! solver. The adjoint recursion and the control pairing are the exact
//! transposes of the forward step, so the reduced gradient here is the true
//! gradient of the discrete cost up to roundoff.

use crate::control::{h1_inner_time, riesz_solve_functional, ControlFunction};
use crate::error::{Error, Result};
use crate::linalg::solve_tridiag;
use crate::time::TimeGrid;

/// Spatial setup for the reference solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConfig {
    pub domain_l: f64,
    pub h_ref: f64,
    pub nu: f64,
}

impl ReferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.domain_l > 0.0 && self.h_ref > 0.0 && self.nu > 0.0) {
            return Err(Error::Config(format!(
                "reference config must be positive: L={}, h={}, nu={}",
                self.domain_l, self.h_ref, self.nu
            )));
        }
        if self.h_ref > 2e-3 {
            return Err(Error::Config(format!(
                "reference grid too coarse: h_ref = {} > 2e-3",
                self.h_ref
            )));
        }
        Ok(())
    }

    /// Uniform grid nodes on [-L, L].
    pub fn x_grid(&self) -> Vec<f64> {
        let n = (2.0 * self.domain_l / self.h_ref).round() as usize + 1;
        let h = 2.0 * self.domain_l / (n - 1) as f64;
        (0..n).map(|i| -self.domain_l + i as f64 * h).collect()
    }
}

/// Space-time arrays of the reference solve.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub config: ReferenceConfig,
    pub x: Vec<f64>,
    pub grid: TimeGrid,
    /// states[k][i] = y(x_i, t_k)
    pub states: Vec<Vec<f64>>,
    pub adjoint: Option<Vec<Vec<f64>>>,
    pub control: Option<ControlFunction>,
}

impl ReferenceSolution {
    pub fn terminal(&self) -> &[f64] {
        self.states.last().expect("non-empty")
    }

    pub fn spacing(&self) -> f64 {
        self.x[1] - self.x[0]
    }
}

/// One implicit-diffusion solve: (I + dt ν A) out = rhs on interior nodes.
fn diffusion_solve(rhs: &[f64], dt_nu: f64, h: f64) -> Vec<f64> {
    let n = rhs.len();
    let m = n - 2;
    let r = dt_nu / (h * h);
    let diag = vec![1.0 + 2.0 * r; m];
    let off = vec![-r; m - 1];
    let interior =
        solve_tridiag(&off, &diag, &off, &rhs[1..n - 1]).expect("SPD tridiagonal cannot fail");
    let mut out = vec![0.0; n];
    out[1..n - 1].copy_from_slice(&interior);
    out
}

/// Forward solve: full space-time array. `y0` and `chi` are sampled on the
/// grid. Fails with [`Error::BoundaryContamination`] if the solution does not
/// stay below 1e-8 next to the truncated boundary.
pub fn solve_reference_forward<C, Y0>(
    u: &ControlFunction,
    cfg: &ReferenceConfig,
    chi: C,
    y0: Y0,
) -> Result<ReferenceSolution>
where
    C: Fn(f64) -> f64,
    Y0: Fn(f64) -> f64,
{
    cfg.validate()?;
    let x = cfg.x_grid();
    let n = x.len();
    let h = x[1] - x[0];
    let grid = u.grid;
    let dt = grid.dt();
    let chi_v: Vec<f64> = x.iter().map(|&xi| chi(xi)).collect();
    let mut y: Vec<f64> = x.iter().map(|&xi| y0(xi)).collect();
    y[0] = 0.0;
    y[n - 1] = 0.0;

    let mut states = Vec::with_capacity(grid.n_nodes());
    states.push(y.clone());
    let mut boundary_max = 0.0f64;

    for k in 0..grid.n_steps {
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let conv = (y[i + 1] * y[i + 1] - y[i - 1] * y[i - 1]) / (4.0 * h);
            rhs[i] = y[i] + dt * (u.values[k] * chi_v[i] - conv);
        }
        y = diffusion_solve(&rhs, dt * cfg.nu, h);
        boundary_max = boundary_max.max(y[1].abs()).max(y[n - 2].abs());
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                step: k,
                value: f64::INFINITY,
                cap: f64::INFINITY,
            });
        }
        states.push(y.clone());
    }
    if boundary_max > 1e-8 {
        return Err(Error::BoundaryContamination {
            value: boundary_max,
        });
    }

    Ok(ReferenceSolution {
        config: *cfg,
        x,
        grid,
        states,
        adjoint: None,
        control: None,
    })
}

/// Adjoint arrays on the frozen reference state: backward march with implicit
/// diffusion and explicit transport, built as the transpose of the forward
/// step. The terminal field solves (I + dt ν A) p(T) = y_d − y(T).
pub fn solve_reference_adjoint<Y>(sol: &ReferenceSolution, y_d: Y) -> Vec<Vec<f64>>
where
    Y: Fn(f64) -> f64,
{
    let n = sol.x.len();
    let h = sol.spacing();
    let dt = sol.grid.dt();
    let nu = sol.config.nu;
    let nt = sol.grid.n_steps;

    let mut terminal_gap = vec![0.0; n];
    for i in 1..n - 1 {
        terminal_gap[i] = y_d(sol.x[i]) - sol.states[nt][i];
    }
    let mut p = diffusion_solve(&terminal_gap, dt * nu, h);

    let mut out = vec![vec![0.0; n]; nt + 1];
    out[nt] = p.clone();
    for k in (0..nt).rev() {
        let yk = &sol.states[k];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let dp = (p[i + 1] - p[i - 1]) / (2.0 * h);
            rhs[i] = p[i] + dt * yk[i] * dp;
        }
        p = diffusion_solve(&rhs, dt * nu, h);
        out[k] = p.clone();
    }
    out
}

/// Reduced gradient σu − R⁻¹ B*p with the exact discrete pairing
/// r_k = dt h Σ_i χ(x_i) p(x_i, t_{k+1}); the final node carries no misfit
/// sensitivity because u(t_N) never enters the forward march.
pub fn reference_reduced_gradient<C>(
    u: &ControlFunction,
    sol: &ReferenceSolution,
    adjoint: &[Vec<f64>],
    sigma: f64,
    chi: C,
) -> Result<Vec<f64>>
where
    C: Fn(f64) -> f64,
{
    let grid = u.grid;
    let dt = grid.dt();
    let h = sol.spacing();
    let chi_v: Vec<f64> = sol.x.iter().map(|&xi| chi(xi)).collect();
    let mut r = vec![0.0; grid.n_nodes()];
    for k in 0..grid.n_steps {
        let pk: f64 = chi_v
            .iter()
            .zip(&adjoint[k + 1])
            .map(|(c, p)| c * p)
            .sum();
        r[k] = dt * h * pk;
    }
    let lift = riesz_solve_functional(&grid, &r)?;
    Ok(u.values
        .iter()
        .zip(&lift)
        .map(|(uv, lv)| sigma * uv - lv)
        .collect())
}

/// Cost on the reference backend: rectangle-rule misfit (boundary values
/// vanish) plus the H¹(0,T) regularization.
pub fn reference_cost<Y>(sol: &ReferenceSolution, u: &ControlFunction, y_d: Y, sigma: f64) -> f64
where
    Y: Fn(f64) -> f64,
{
    let h = sol.spacing();
    let yt = sol.terminal();
    let misfit: f64 = sol
        .x
        .iter()
        .zip(yt)
        .map(|(&xi, &yi)| {
            let d = yi - y_d(xi);
            d * d
        })
        .sum::<f64>()
        * h;
    0.5 * misfit + 0.5 * sigma * h1_inner_time(&u.grid, &u.values, &u.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(h: f64) -> ReferenceConfig {
        ReferenceConfig {
            domain_l: 7.0,
            h_ref: h,
            nu: 1.0,
        }
    }

    fn chi(x: f64) -> f64 {
        (-5.0 * x * x).exp()
    }

    #[test]
    fn zero_everything_stays_zero() {
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let u = ControlFunction::constant(grid, 0.0, (0.0, 100.0)).unwrap();
        let sol = solve_reference_forward(&u, &cfg(2e-3), chi, |_| 0.0).unwrap();
        assert!(sol.states.iter().all(|s| s.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn heat_limit_matches_analytic_kernel() {
        // with convection negligible (tiny amplitude), a Gaussian spreads as
        // variance s² = s0² + 2νt with amplitude scaled by s0/s
        let grid = TimeGrid::new(0.5, 400).unwrap();
        let u = ControlFunction::constant(grid, 0.0, (0.0, 100.0)).unwrap();
        let a0 = 1e-4; // keeps y ∂x y ~ a0² far below diffusion
        let s0sq = 0.25;
        let sol = solve_reference_forward(&u, &cfg(2e-3), chi, |x: f64| {
            a0 * (-x * x / (2.0 * s0sq)).exp()
        })
        .unwrap();
        let ssq = s0sq + 2.0 * 0.5;
        let amp = a0 * (s0sq / ssq).sqrt();
        for (i, &xi) in sol.x.iter().enumerate() {
            if xi.abs() < 2.0 {
                let want = amp * (-xi * xi / (2.0 * ssq)).exp();
                let got = sol.terminal()[i];
                assert!(
                    (got - want).abs() < 0.01 * amp,
                    "x={xi}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn mass_balance_within_stated_tolerance() {
        let grid = TimeGrid::new(1.0, 500).unwrap();
        let u = ControlFunction::constant(grid, 1.0, (0.0, 100.0)).unwrap();
        let sol = solve_reference_forward(&u, &cfg(1e-3), chi, |_| 0.0).unwrap();
        let h = sol.spacing();
        let mass: f64 = sol.terminal().iter().sum::<f64>() * h;
        let expected = (std::f64::consts::PI / 5.0).sqrt();
        assert_relative_eq!(mass, expected, max_relative = 1e-3);
    }

    #[test]
    fn adjoint_zero_when_target_reached() {
        let grid = TimeGrid::new(0.2, 20).unwrap();
        let u = ControlFunction::constant(grid, 0.0, (0.0, 100.0)).unwrap();
        let sol = solve_reference_forward(&u, &cfg(2e-3), chi, |_| 0.0).unwrap();
        let p = solve_reference_adjoint(&sol, |_| 0.0);
        assert!(p.iter().all(|row| row.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn adjoint_linear_in_terminal_data() {
        let grid = TimeGrid::new(0.2, 20).unwrap();
        let u = ControlFunction::constant(grid, 0.0, (0.0, 100.0)).unwrap();
        let sol = solve_reference_forward(&u, &cfg(2e-3), chi, |_| 0.0).unwrap();
        let y_d = |x: f64| 10.0 * (-2.0 * x * x).exp();
        let p1 = solve_reference_adjoint(&sol, y_d);
        let p3 = solve_reference_adjoint(&sol, |x| 3.0 * y_d(x));
        for (r1, r3) in p1.iter().zip(&p3) {
            for (a, b) in r1.iter().zip(r3) {
                assert!((3.0 * a - b).abs() <= 1e-12 * b.abs().max(1e-15));
            }
        }
    }

    #[test]
    fn frozen_zero_state_conserves_adjoint_mass() {
        // y ≡ 0: backward heat equation conserves ∫p to boundary-flux accuracy
        let grid = TimeGrid::new(1.0, 500).unwrap();
        let u = ControlFunction::constant(grid, 0.0, (0.0, 100.0)).unwrap();
        let sol = solve_reference_forward(&u, &cfg(1e-3), chi, |_| 0.0).unwrap();
        let p = solve_reference_adjoint(&sol, |x: f64| 10.0 * (-2.0 * x * x).exp());
        let h = sol.spacing();
        let m_t: f64 = p[sol.grid.n_steps].iter().sum::<f64>() * h;
        let m_0: f64 = p[0].iter().sum::<f64>() * h;
        assert!((m_t - m_0).abs() < 1e-3 * m_t.abs(), "{m_0} vs {m_t}");
    }

    #[test]
    fn forward_is_second_order_in_space() {
        // manufactured smooth run compared across resolutions: halving h
        // shrinks the deviation from the finest run by ~4
        let grid = TimeGrid::new(0.25, 2000).unwrap();
        let u = ControlFunction::constant(grid, 10.0, (0.0, 100.0)).unwrap();
        let run = |h: f64| {
            solve_reference_forward(
                &u,
                &ReferenceConfig {
                    domain_l: 7.0,
                    h_ref: h,
                    nu: 1.0,
                },
                chi,
                |_| 0.0,
            )
            .unwrap()
        };
        let coarse = run(2e-3);
        let mid = run(1e-3);
        let fine = run(5e-4);
        // compare at x = 0 (node exists on all three grids)
        let at0 = |s: &ReferenceSolution| s.terminal()[s.x.len() / 2];
        let e_coarse = (at0(&coarse) - at0(&fine)).abs();
        let e_mid = (at0(&mid) - at0(&fine)).abs();
        // Richardson: e_coarse/e_mid ≈ (4 - 1)/(1 - 1/4) … just require ≥ 3
        assert!(
            e_coarse > 3.0 * e_mid,
            "coarse {e_coarse} vs mid {e_mid}"
        );
    }

    #[test]
    fn coarse_grid_rejected() {
        let c = ReferenceConfig {
            domain_l: 7.0,
            h_ref: 0.01,
            nu: 1.0,
        };
        assert!(c.validate().is_err());
    }
}
