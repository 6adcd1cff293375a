//! Galerkin matrices on the particle test/trial space: closed-form
//! Gaussian–Gaussian mass and stiffness entries, quadrature for the load
//! vector and the cubic convection term.

use crate::error::{Error, Result};
use crate::kernels::{kernel_eval, KernelSpec, SUPPORT_RADII};
use crate::linalg::SymBanded;
use crate::particles::ParticleField;
use crate::quadrature;
use rayon::prelude::*;

/// Mass entry ⟨δ_ε(·-a), δ_ε(·-b)⟩ for gap d = a - b:
/// exp(-d²/(2ε²)) / (√(2π) ε).
pub fn gram_mass_entry(eps: f64, d: f64) -> f64 {
    (-d * d / (2.0 * eps * eps)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * eps)
}

/// Stiffness entry ⟨δ_ε'(·-a), δ_ε'(·-b)⟩ for gap d:
/// (ε² - d²)/ε⁴ · mass entry.
pub fn gram_stiffness_entry(eps: f64, d: f64) -> f64 {
    gram_mass_entry(eps, d) * (eps * eps - d * d) / (eps * eps * eps * eps)
}

/// Mass, stiffness and χ-load for one particle configuration.
#[derive(Debug, Clone)]
pub struct GalerkinMatrices {
    pub mass: SymBanded,
    pub stiffness: SymBanded,
    pub load_chi: Vec<f64>,
}

/// Largest index offset whose position gap stays within `radius`.
fn band_for_radius(positions: &[f64], radius: f64) -> usize {
    let n = positions.len();
    let mut band = 0usize;
    let mut j = 0usize;
    for i in 0..n {
        while positions[i] - positions[j] > radius {
            j += 1;
        }
        band = band.max(i - j);
    }
    band
}

/// Entries with gaps beyond this many ε are below f64 resolution relative to
/// the diagonal; factorizations ignore them.
const NUMERIC_BAND_RADII: f64 = 9.3;

pub(crate) fn numeric_band(positions: &[f64], eps: f64) -> usize {
    band_for_radius(positions, NUMERIC_BAND_RADII * eps)
}

/// Assemble mass/stiffness (closed forms, band 2×20ε) and the χ-load vector
/// (adaptive quadrature of χ against each kernel).
pub fn assemble<C>(field: &ParticleField, chi: C) -> Result<GalerkinMatrices>
where
    C: Fn(f64) -> f64 + Sync,
{
    let (mass, stiffness) = assemble_gram(field.positions(), field.kernel());
    let load_chi = assemble_load(field.positions(), field.kernel(), &chi)?;
    // SPD check via factorization on the numerically relevant band
    let nb = numeric_band(field.positions(), field.kernel().epsilon);
    mass.truncated(nb).cholesky_ridged()?;
    Ok(GalerkinMatrices {
        mass,
        stiffness,
        load_chi,
    })
}

/// Closed-form mass and stiffness at the given positions. Entries beyond
/// 2×20ε (sum of the two kernel supports) are exactly zero.
pub(crate) fn assemble_gram(positions: &[f64], kernel: &KernelSpec) -> (SymBanded, SymBanded) {
    let eps = kernel.epsilon;
    let n = positions.len();
    let band = band_for_radius(positions, 2.0 * SUPPORT_RADII * eps);
    let mut mass = SymBanded::zeros(n, band);
    let mut stiff = SymBanded::zeros(n, band);
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * eps);
    let e2 = eps * eps;
    for i in 0..n {
        for j in i.saturating_sub(band)..=i {
            let d = positions[i] - positions[j];
            if d <= 2.0 * SUPPORT_RADII * eps {
                let g = norm * (-d * d / (2.0 * e2)).exp();
                mass.set(i, j, g);
                stiff.set(i, j, g * (e2 - d * d) / (e2 * e2));
            }
        }
    }
    (mass, stiff)
}

/// Load vector b_j = ⟨χ, δ_ε(·-Φ_j)⟩ by adaptive quadrature over each
/// kernel's support.
pub(crate) fn assemble_load<C>(positions: &[f64], kernel: &KernelSpec, chi: &C) -> Result<Vec<f64>>
where
    C: Fn(f64) -> f64 + Sync,
{
    let r = kernel.support_radius();
    positions
        .par_iter()
        .map(|&p| {
            quadrature::integrate(&|x| chi(x) * kernel_eval(kernel, x - p), p - r, p + r, 1e-12)
        })
        .collect()
}

/// Transfer of a particle expansion onto another test set: returns
/// v_j = Σ_i coeffs_i ⟨δ_ε(·-from_i), δ_ε(·-to_j)⟩ using the closed form.
pub(crate) fn mixed_mass_apply(
    eps: f64,
    from_positions: &[f64],
    coeffs: &[f64],
    to_positions: &[f64],
) -> Vec<f64> {
    // overlap integrals beyond this gap are below f64 resolution
    let cutoff = std::f64::consts::SQRT_2 * crate::particles::numeric_radius(eps);
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * eps);
    let inv_two_eps_sq = 1.0 / (2.0 * eps * eps);
    to_positions
        .par_iter()
        .map(|&t| {
            let lo = from_positions.partition_point(|&p| p < t - cutoff);
            let hi = from_positions.partition_point(|&p| p <= t + cutoff);
            let mut acc = 0.0;
            for i in lo..hi {
                let d = from_positions[i] - t;
                acc += coeffs[i] * norm * (-d * d * inv_two_eps_sq).exp();
            }
            acc
        })
        .collect()
}

/// Global composite Gauss–Legendre(8) grid spanning the union of kernel
/// supports, with cells of length min(h, ε)/2. The nominal point distance h
/// is taken as the median gap: the integrand's smoothness scale is set by ε
/// and the seeding density, not by transient local compression.
fn convection_grid(field: &ParticleField) -> quadrature::Gl8Grid {
    let pos = field.positions();
    let eps = field.kernel().epsilon;
    let mut gaps: Vec<f64> = pos.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nominal_h = gaps[gaps.len() / 2];
    // floor at ε/4: the integrand varies on the kernel scale, so finer cells
    // only add cost (checked against refined quadrature in the tests)
    let cell = (0.5 * nominal_h.min(eps)).max(0.25 * eps);
    let r = field.kernel().support_radius();
    quadrature::composite_gl8_grid(pos[0] - r, pos[pos.len() - 1] + r, cell)
}

/// Field value and derivative at every grid point. Each particle's Gaussian
/// is scattered along the eight GL node series using the exact recurrence
///   k(d + δ) = k(d) · r(d),  r(d + δ) = r(d) · e^{-2δ²/ε²},
/// which costs two multiplies per point instead of an exponential. The
/// accumulated roundoff over a window stays below ~1e-13 relative.
pub(crate) fn evaluate_on_gl_grid(
    field: &ParticleField,
    grid: &quadrature::Gl8Grid,
) -> (Vec<f64>, Vec<f64>) {
    let eps = field.kernel().epsilon;
    let rad = crate::particles::numeric_radius(eps);
    let norm = 1.0 / (std::f64::consts::PI.sqrt() * eps);
    let inv_eps_sq = 1.0 / (eps * eps);
    let pts = &grid.points;
    let n_pts = pts.len();
    let positions = field.positions();
    let amplitudes = field.amplitudes();

    // contiguous chunks of grid points in parallel; each chunk scans the
    // particles overlapping it, so writes never conflict and the result is
    // deterministic
    const CHUNK: usize = 4096;
    let n_chunks = n_pts.div_ceil(CHUNK);
    let pieces: Vec<(Vec<f64>, Vec<f64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let q_lo = c * CHUNK;
            let q_hi = (q_lo + CHUNK).min(n_pts);
            let x_lo = pts[q_lo].0;
            let x_hi = pts[q_hi - 1].0;
            let mut value = vec![0.0; q_hi - q_lo];
            let mut slope = vec![0.0; q_hi - q_lo];
            let i_lo = positions.partition_point(|&p| p < x_lo - rad);
            let i_hi = positions.partition_point(|&p| p <= x_hi + rad);
            for i in i_lo..i_hi {
                let phi = positions[i];
                let a = amplitudes[i] * norm;
                if a == 0.0 {
                    continue;
                }
                let w_lo = pts[q_lo..q_hi].partition_point(|&(x, _)| x < phi - rad) + q_lo;
                let w_hi = pts[q_lo..q_hi].partition_point(|&(x, _)| x <= phi + rad) + q_lo;
                // eight strided series, each with uniform spacing = cell width
                for series in 0..8.min(w_hi.saturating_sub(w_lo)) {
                    let q0 = w_lo + series;
                    let delta = grid.cell_width;
                    let growth = (-2.0 * delta * delta * inv_eps_sq).exp();
                    let mut d = pts[q0].0 - phi;
                    let mut k = a * (-d * d * inv_eps_sq).exp();
                    let mut r = (-(2.0 * d * delta + delta * delta) * inv_eps_sq).exp();
                    let mut q = q0;
                    while q < w_hi {
                        value[q - q_lo] += k;
                        slope[q - q_lo] += -2.0 * d * inv_eps_sq * k;
                        k *= r;
                        r *= growth;
                        d += delta;
                        q += 8;
                    }
                }
            }
            (value, slope)
        })
        .collect();

    let mut value = Vec::with_capacity(n_pts);
    let mut slope = Vec::with_capacity(n_pts);
    for (v, s) in pieces {
        value.extend(v);
        slope.extend(s);
    }
    (value, slope)
}

/// Σ_q w̃_q δ_ε(x_q - t) over the window of `t`, by the same recurrence.
fn gauss_gather(
    xs: &[f64],
    weighted: &[f64],
    grid_cell: f64,
    t: f64,
    eps: f64,
    rad: f64,
) -> f64 {
    let norm = 1.0 / (std::f64::consts::PI.sqrt() * eps);
    let inv_eps_sq = 1.0 / (eps * eps);
    let lo = xs.partition_point(|&x| x < t - rad);
    let hi = xs.partition_point(|&x| x <= t + rad);
    let mut acc = 0.0;
    for series in 0..8.min(hi.saturating_sub(lo)) {
        let q0 = lo + series;
        let delta = grid_cell;
        let growth = (-2.0 * delta * delta * inv_eps_sq).exp();
        let mut d = xs[q0] - t;
        let mut k = norm * (-d * d * inv_eps_sq).exp();
        let mut r = (-(2.0 * d * delta + delta * delta) * inv_eps_sq).exp();
        let mut q = q0;
        while q < hi {
            acc += weighted[q] * k;
            k *= r;
            r *= growth;
            q += 8;
        }
    }
    acc
}

/// Convection vector against arbitrary test kernels:
/// c_j = ⟨ y_h ∂_x v_h, δ_ε(·-test_j) ⟩, composite Gauss–Legendre(8).
pub(crate) fn convection_on_tests(
    field_y: &ParticleField,
    field_v: &ParticleField,
    test_positions: &[f64],
) -> Vec<f64> {
    let eps = field_y.kernel().epsilon;
    let grid = convection_grid(field_y);
    let rad = crate::particles::numeric_radius(eps);
    let (y_vals, y_slopes) = evaluate_on_gl_grid(field_y, &grid);
    let v_slopes = if std::ptr::eq(field_y, field_v) {
        y_slopes
    } else {
        evaluate_on_gl_grid(field_v, &grid).1
    };
    let xs: Vec<f64> = grid.points.iter().map(|p| p.0).collect();
    // integrand with quadrature weights folded in
    let weighted: Vec<f64> = grid
        .points
        .iter()
        .zip(y_vals.iter().zip(&v_slopes))
        .map(|(&(_, w), (y, dv))| w * y * dv)
        .collect();
    test_positions
        .par_iter()
        .with_min_len(16)
        .map(|&t| gauss_gather(&xs, &weighted, grid.cell_width, t, eps, rad))
        .collect()
}

/// Convection vector c_j = ⟨ y_h ∂_x v_h, δ_ε(·-Φ_j) ⟩ on the shared particle
/// positions. Used for the state nonlinearity (v = y) and the adjoint
/// transport term.
pub fn convection_apply(field_y: &ParticleField, field_v: &ParticleField) -> Result<Vec<f64>> {
    if field_y.positions() != field_v.positions()
        || field_y.kernel().epsilon != field_v.kernel().epsilon
    {
        return Err(Error::InvalidField(
            "convection requires fields sharing positions and ε".into(),
        ));
    }
    Ok(convection_on_tests(field_y, field_v, field_y.positions()))
}

/// ‖y_h‖²_H = αᵀ M α via the closed-form Gram.
pub fn field_l2_norm_sq(field: &ParticleField) -> f64 {
    let (mass, _) = assemble_gram(field.positions(), field.kernel());
    let ma = mass.matvec(field.amplitudes());
    field
        .amplitudes()
        .iter()
        .zip(&ma)
        .map(|(a, m)| a * m)
        .sum()
}

/// Residual of the skew-symmetry identity ⟨y ∂_x y, y⟩ = 0 on the particle
/// space: |αᵀ C(α)| / max(1, ‖y‖²_H). Diagnostic only.
pub fn skew_symmetry_defect(field: &ParticleField) -> Result<f64> {
    let c = convection_apply(field, field)?;
    let num: f64 = field
        .amplitudes()
        .iter()
        .zip(&c)
        .map(|(a, ci)| a * ci)
        .sum::<f64>()
        .abs();
    Ok(num / field_l2_norm_sq(field).max(1.0))
}
