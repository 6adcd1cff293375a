//! Dirac-sequence smoothing kernels and verification of their moment
//! conditions.
//!
//! The Gaussian kernel `δ_ε(x) = exp(-x²/ε²) / (√π ε)` integrates to one, has
//! a vanishing first moment and a finite second absolute moment, which gives
//! approximation order r = 2.

use crate::error::{Error, Result};
use crate::quadrature;

/// Kernel families. Only the Gaussian is implemented; the enumeration leaves
/// room for higher-order kernels without committing to them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Gaussian,
}

/// A smoothing kernel `δ_ε` together with its claimed moment order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub epsilon: f64,
    pub order_r: u32,
}

/// Support truncation: contributions beyond this radius are below ~1e-170 of
/// the peak and are dropped everywhere (field evaluation, assembly bands).
pub const SUPPORT_RADII: f64 = 20.0;

impl KernelSpec {
    /// Gaussian kernel of smoothing length `epsilon` (moment order 2).
    pub fn gaussian(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        Ok(Self {
            kind: KernelKind::Gaussian,
            epsilon,
            order_r: 2,
        })
    }

    /// Radius beyond which the kernel is treated as zero.
    pub fn support_radius(&self) -> f64 {
        SUPPORT_RADII * self.epsilon
    }
}

/// Evaluate `δ_ε` at offset `x`. Even in `x`, strictly positive, maximal at 0.
pub fn kernel_eval(spec: &KernelSpec, x: f64) -> f64 {
    let s = x / spec.epsilon;
    (-s * s).exp() / (std::f64::consts::PI.sqrt() * spec.epsilon)
}

/// Evaluate `d/dx δ_ε` at offset `x`. Odd in `x`, zero at 0.
pub fn kernel_grad(spec: &KernelSpec, x: f64) -> f64 {
    -2.0 * x / (spec.epsilon * spec.epsilon) * kernel_eval(spec, x)
}

/// Outcome of a moment-condition check.
#[derive(Debug, Clone, Copy)]
pub struct MomentReport {
    /// ∫ δ_ε dx (should be 1).
    pub zeroth: f64,
    /// ∫ x δ_ε dx (should vanish).
    pub first: f64,
    /// ∫ |x|^r |δ_ε| dx (must be finite).
    pub r_th_abs: f64,
    pub pass: bool,
}

/// Check the moment conditions of `spec` by adaptive quadrature over
/// [-20ε, 20ε]: ∫δ_ε = 1 and ∫x δ_ε = 0 within `quad_tol`, finite r-th
/// absolute moment.
pub fn verify_moments(spec: &KernelSpec, quad_tol: f64) -> Result<MomentReport> {
    verify_moments_scaled(spec, 1.0, quad_tol)
}

/// Like [`verify_moments`] but with the kernel amplitude scaled by
/// `amplitude`; a scale ≠ 1 breaks normalization and must be reported as a
/// failure. Exposed for the CLI's corrupted-kernel check.
pub fn verify_moments_scaled(
    spec: &KernelSpec,
    amplitude: f64,
    quad_tol: f64,
) -> Result<MomentReport> {
    if !(quad_tol > 0.0) {
        return Err(Error::Config(format!(
            "quad_tol must be positive, got {quad_tol}"
        )));
    }
    let a = spec.support_radius();
    let f = |x: f64| amplitude * kernel_eval(spec, x);
    let inner_tol = (quad_tol * 1e-3).max(1e-15);
    let zeroth = quadrature::integrate(&|x| f(x), -a, a, inner_tol)?;
    let first = quadrature::integrate(&|x| x * f(x), -a, a, inner_tol)?;
    let r = spec.order_r as i32;
    let r_th_abs = quadrature::integrate(&|x| x.abs().powi(r) * f(x).abs(), -a, a, inner_tol)?;
    let pass = (zeroth - 1.0).abs() < quad_tol && first.abs() < quad_tol && r_th_abs.is_finite();
    Ok(MomentReport {
        zeroth,
        first,
        r_th_abs,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_epsilon() {
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::gaussian(-1.0).is_err());
        assert!(KernelSpec::gaussian(f64::NAN).is_err());
        assert!(KernelSpec::gaussian(f64::INFINITY).is_err());
    }

    #[test]
    fn gaussian_order_is_two() {
        assert_eq!(KernelSpec::gaussian(0.3).unwrap().order_r, 2);
    }

    #[test]
    fn peak_value_unit_epsilon() {
        let spec = KernelSpec::gaussian(1.0).unwrap();
        assert_relative_eq!(
            kernel_eval(&spec, 0.0),
            0.5641895835477563, // 1/sqrt(pi)
            max_relative = 1e-15
        );
    }

    #[test]
    fn far_tail_underflows() {
        let spec = KernelSpec::gaussian(1.0).unwrap();
        assert!(kernel_eval(&spec, 100.0) < 1e-300);
    }

    #[test]
    fn value_matches_extended_precision_oracle() {
        // exp(-1)/(sqrt(pi)*0.3) evaluated at 40 decimal digits
        let spec = KernelSpec::gaussian(0.3).unwrap();
        assert_relative_eq!(
            kernel_eval(&spec, 0.3),
            0.6918458290343245,
            max_relative = 1e-14
        );
    }

    #[test]
    fn grad_zero_at_origin() {
        let spec = KernelSpec::gaussian(1.0).unwrap();
        assert_eq!(kernel_grad(&spec, 0.0), 0.0);
    }

    #[test]
    fn grad_matches_central_difference() {
        let spec = KernelSpec::gaussian(1.0).unwrap();
        let step = 1e-6;
        let x = 0.5;
        let fd = (kernel_eval(&spec, x + step) - kernel_eval(&spec, x - step)) / (2.0 * step);
        assert_relative_eq!(kernel_grad(&spec, x), fd, max_relative = 1e-6);
    }

    #[test]
    fn grad_matches_central_difference_log_grid() {
        for &eps in &[0.1, 0.3, 1.0] {
            let spec = KernelSpec::gaussian(eps).unwrap();
            let lo: f64 = 1e-3;
            let hi: f64 = 10.0 * eps;
            // step balances truncation against cancellation over the grid
            let step = 1e-6 * hi;
            for k in 0..40 {
                let x = lo * (hi / lo).powf(k as f64 / 39.0);
                let fd =
                    (kernel_eval(&spec, x + step) - kernel_eval(&spec, x - step)) / (2.0 * step);
                if fd.abs() > 1e-250 {
                    assert_relative_eq!(kernel_grad(&spec, x), fd, max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn grad_oddness() {
        let spec = KernelSpec::gaussian(0.3).unwrap();
        assert_eq!(kernel_grad(&spec, -0.1), -kernel_grad(&spec, 0.1));
    }

    #[test]
    fn moments_pass_for_paper_epsilons() {
        for &eps in &[0.05, 0.1, 0.3, 1.0] {
            let spec = KernelSpec::gaussian(eps).unwrap();
            let rep = verify_moments(&spec, 1e-10).unwrap();
            assert!(rep.pass, "eps={eps}: {rep:?}");
            assert!((rep.zeroth - 1.0).abs() < 1e-10);
            assert!(rep.first.abs() < 1e-12);
        }
    }

    #[test]
    fn second_raw_moment_is_half_eps_squared() {
        // for the Gaussian, ∫ x² δ_ε dx = ε²/2
        let spec = KernelSpec::gaussian(1.0).unwrap();
        let rep = verify_moments(&spec, 1e-10).unwrap();
        assert_relative_eq!(rep.r_th_abs, 0.5, max_relative = 1e-8);
        let spec = KernelSpec::gaussian(0.5).unwrap();
        let rep = verify_moments(&spec, 1e-10).unwrap();
        assert_relative_eq!(rep.r_th_abs, 0.125, max_relative = 1e-8);
    }

    #[test]
    fn corrupted_amplitude_fails() {
        let spec = KernelSpec::gaussian(0.3).unwrap();
        let rep = verify_moments_scaled(&spec, 1.1, 1e-10).unwrap();
        assert!(!rep.pass);
    }

    proptest! {
        #[test]
        fn even_symmetry(x in -15.0f64..15.0, eps in 0.05f64..2.0) {
            let spec = KernelSpec::gaussian(eps).unwrap();
            prop_assert_eq!(kernel_eval(&spec, x), kernel_eval(&spec, -x));
        }

        #[test]
        fn scaling_law(x in -5.0f64..5.0, eps in 0.05f64..2.0) {
            // δ_ε(x) = (1/ε) δ_1(x/ε)
            let spec = KernelSpec::gaussian(eps).unwrap();
            let unit = KernelSpec::gaussian(1.0).unwrap();
            let lhs = kernel_eval(&spec, x);
            let rhs = kernel_eval(&unit, x / eps) / eps;
            if lhs > 1e-290 {
                prop_assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs());
            }
        }
    }
}
