//! Problem configuration: flat `key = value` text files with `#` comments.
//! Defaults reproduce the benchmark setting: ν = 1, T = 1, σ = 0.05, bounds
//! [0, 100], y₀ ≡ 0, y_d = 10 exp(−2x²), χ_c = exp(−5x²), N_t = 500,
//! h = 0.1, ε = 0.3 on [−5, 5].

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::optimize::OptimizeOptions;
use crate::particles::SeedLayout;
use crate::reference::ReferenceConfig;
use crate::time::TimeGrid;

/// Gaussian bump `amplitude · exp(−width x²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    pub amplitude: f64,
    pub width: f64,
}

impl GaussianBump {
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * (-self.width * x * x).exp()
    }

    /// Closure form for passing into solvers.
    pub fn as_fn(self) -> impl Fn(f64) -> f64 + Sync + Copy {
        move |x| self.eval(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub nu: f64,
    pub t_final: f64,
    pub sigma: f64,
    pub u_lower: f64,
    pub u_upper: f64,
    pub y0: GaussianBump,
    pub y_d: GaussianBump,
    pub chi: GaussianBump,
    pub n_steps: usize,
    pub spacing_h: f64,
    pub epsilon: f64,
    pub domain_lo: f64,
    pub domain_hi: f64,
    pub seed_margin: f64,
    pub ref_h: f64,
    pub grad_tol_rel: f64,
    pub max_iters: usize,
    pub armijo_initial_step: f64,
    pub armijo_contraction: f64,
    pub armijo_c1: f64,
    pub blowup_cap: f64,
    pub out_dir: String,
    pub sweep_eps: Vec<f64>,
    pub sweep_inv_h: Vec<f64>,
    pub sweep_coupled_h: Vec<f64>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            t_final: 1.0,
            sigma: 0.05,
            u_lower: 0.0,
            u_upper: 100.0,
            y0: GaussianBump {
                amplitude: 0.0,
                width: 1.0,
            },
            y_d: GaussianBump {
                amplitude: 10.0,
                width: 2.0,
            },
            chi: GaussianBump {
                amplitude: 1.0,
                width: 5.0,
            },
            n_steps: 500,
            spacing_h: 0.1,
            epsilon: 0.3,
            domain_lo: -5.0,
            domain_hi: 5.0,
            seed_margin: 0.2,
            ref_h: 1e-3,
            grad_tol_rel: 2e-3,
            max_iters: 200,
            armijo_initial_step: 1.0,
            armijo_contraction: 0.5,
            armijo_c1: 1e-4,
            blowup_cap: 1e6,
            out_dir: "out".into(),
            sweep_eps: vec![0.5, 0.4, 0.3, 0.2, 0.15, 0.1],
            sweep_inv_h: vec![10.0, 20.0, 50.0, 100.0],
            sweep_coupled_h: vec![0.2, 0.1, 0.05, 0.025],
        }
    }
}

impl ProblemConfig {
    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_final, self.n_steps)
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        KernelSpec::gaussian(self.epsilon)
    }

    pub fn layout(&self) -> SeedLayout {
        SeedLayout {
            domain_lo: self.domain_lo,
            domain_hi: self.domain_hi,
            spacing_h: self.spacing_h,
            margin: self.seed_margin,
        }
    }

    /// Reference solver setup. The grid extends two units beyond the particle
    /// window: the backward adjoint diffuses past it over the full horizon,
    /// and the truncated boundary must stay flux-free. Errors are still
    /// evaluated on the particle window only.
    pub fn reference_config(&self) -> ReferenceConfig {
        ReferenceConfig {
            domain_l: self.domain_hi.abs().max(self.domain_lo.abs()) + 2.0,
            h_ref: self.ref_h,
            nu: self.nu,
        }
    }

    pub fn optimize_options(&self) -> OptimizeOptions {
        OptimizeOptions {
            initial_step: self.armijo_initial_step,
            contraction: self.armijo_contraction,
            sufficient_decrease: self.armijo_c1,
            grad_tol_rel: self.grad_tol_rel,
            max_iters: self.max_iters,
            max_backtracks: 40,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.u_lower, self.u_upper)
    }

    /// Parse a `key = value` config; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.apply(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn f(v: &str) -> std::result::Result<f64, String> {
            v.parse::<f64>().map_err(|e| format!("bad float {v:?}: {e}"))
        }
        fn us(v: &str) -> std::result::Result<usize, String> {
            v.parse::<usize>().map_err(|e| format!("bad integer {v:?}: {e}"))
        }
        fn list(v: &str) -> std::result::Result<Vec<f64>, String> {
            v.split(',')
                .map(|s| f(s.trim()))
                .collect::<std::result::Result<Vec<_>, _>>()
        }
        match key {
            "nu" => self.nu = f(value)?,
            "t_final" => self.t_final = f(value)?,
            "sigma" => self.sigma = f(value)?,
            "u_lower" => self.u_lower = f(value)?,
            "u_upper" => self.u_upper = f(value)?,
            "y0_amplitude" => self.y0.amplitude = f(value)?,
            "y0_width" => self.y0.width = f(value)?,
            "yd_amplitude" => self.y_d.amplitude = f(value)?,
            "yd_width" => self.y_d.width = f(value)?,
            "chi_amplitude" => self.chi.amplitude = f(value)?,
            "chi_width" => self.chi.width = f(value)?,
            "n_steps" => self.n_steps = us(value)?,
            "spacing_h" => self.spacing_h = f(value)?,
            "epsilon" => self.epsilon = f(value)?,
            "domain_lo" => self.domain_lo = f(value)?,
            "domain_hi" => self.domain_hi = f(value)?,
            "seed_margin" => self.seed_margin = f(value)?,
            "ref_h" => self.ref_h = f(value)?,
            "grad_tol_rel" => self.grad_tol_rel = f(value)?,
            "max_iters" => self.max_iters = us(value)?,
            "armijo_initial_step" => self.armijo_initial_step = f(value)?,
            "armijo_contraction" => self.armijo_contraction = f(value)?,
            "armijo_c1" => self.armijo_c1 = f(value)?,
            "blowup_cap" => self.blowup_cap = f(value)?,
            "out_dir" => self.out_dir = value.to_string(),
            "sweep_eps" => self.sweep_eps = list(value)?,
            "sweep_inv_h" => self.sweep_inv_h = list(value)?,
            "sweep_coupled_h" => self.sweep_coupled_h = list(value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Serialize to the same flat format `parse` accepts.
    pub fn serialize(&self) -> String {
        fn join(v: &[f64]) -> String {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("nu", self.nu.to_string());
        kv("t_final", self.t_final.to_string());
        kv("sigma", self.sigma.to_string());
        kv("u_lower", self.u_lower.to_string());
        kv("u_upper", self.u_upper.to_string());
        kv("y0_amplitude", self.y0.amplitude.to_string());
        kv("y0_width", self.y0.width.to_string());
        kv("yd_amplitude", self.y_d.amplitude.to_string());
        kv("yd_width", self.y_d.width.to_string());
        kv("chi_amplitude", self.chi.amplitude.to_string());
        kv("chi_width", self.chi.width.to_string());
        kv("n_steps", self.n_steps.to_string());
        kv("spacing_h", self.spacing_h.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("domain_lo", self.domain_lo.to_string());
        kv("domain_hi", self.domain_hi.to_string());
        kv("seed_margin", self.seed_margin.to_string());
        kv("ref_h", self.ref_h.to_string());
        kv("grad_tol_rel", self.grad_tol_rel.to_string());
        kv("max_iters", self.max_iters.to_string());
        kv("armijo_initial_step", self.armijo_initial_step.to_string());
        kv("armijo_contraction", self.armijo_contraction.to_string());
        kv("armijo_c1", self.armijo_c1.to_string());
        kv("blowup_cap", self.blowup_cap.to_string());
        kv("out_dir", self.out_dir.clone());
        kv("sweep_eps", join(&self.sweep_eps));
        kv("sweep_inv_h", join(&self.sweep_inv_h));
        kv("sweep_coupled_h", join(&self.sweep_coupled_h));
        s
    }

    /// Stable FNV-1a hash of the reference-relevant subset; keys the on-disk
    /// reference cache so sweeps never repeat the expensive optimization.
    pub fn reference_key(&self) -> u64 {
        let canon = format!(
            "nu={};T={};sigma={};ul={};uu={};y0={},{};yd={},{};chi={},{};nt={};refh={};L={},{};tol={};iters={};armijo={},{},{}",
            self.nu,
            self.t_final,
            self.sigma,
            self.u_lower,
            self.u_upper,
            self.y0.amplitude,
            self.y0.width,
            self.y_d.amplitude,
            self.y_d.width,
            self.chi.amplitude,
            self.chi.width,
            self.n_steps,
            self.ref_h,
            self.domain_lo,
            self.domain_hi,
            self.grad_tol_rel,
            self.max_iters,
            self.armijo_initial_step,
            self.armijo_contraction,
            self.armijo_c1,
        );
        let mut hash: u64 = 0xcbf29ce484222325;
        for b in canon.as_bytes() {
            hash ^= *b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
        hash
    }
}
