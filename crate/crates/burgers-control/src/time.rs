//! Uniform time grid shared by the PDE solvers and the control space.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::Config(format!(
                "final time must be positive and finite, got {t_final}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::Config("need at least one time step".into()));
        }
        Ok(Self { t_final, n_steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    /// Number of grid nodes (steps + 1).
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    /// Time of node k, exact at both endpoints.
    pub fn node(&self, k: usize) -> f64 {
        self.t_final * k as f64 / self.n_steps as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basics() {
        let g = TimeGrid::new(1.0, 500).unwrap();
        assert_eq!(g.n_nodes(), 501);
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(500), 1.0);
        assert!((g.dt() - 0.002).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(f64::NAN, 10).is_err());
    }
}
