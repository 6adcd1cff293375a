//! Small dense-banded linear algebra: symmetric banded Cholesky and a
//! tridiagonal (Thomas) solver. Sized for desk-scale particle counts.

use crate::error::{Error, Result};

/// Symmetric banded matrix, lower triangle stored row-major: entry (i, j)
/// with `0 <= i - j <= bandwidth` lives at `data[i * (bandwidth+1) + (i-j)]`.
#[derive(Debug, Clone)]
pub struct SymBanded {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bandwidth = bandwidth.min(n.saturating_sub(1));
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.bandwidth {
            0.0
        } else {
            self.data[hi * (self.bandwidth + 1) + (hi - lo)]
        }
    }

    /// Set entry (i, j); panics if outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        assert!(hi - lo <= self.bandwidth, "entry outside band");
        self.data[hi * (self.bandwidth + 1) + (hi - lo)] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let kb = self.bandwidth;
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (kb + 1)..(i + 1) * (kb + 1)];
            let mut acc = row[0] * x[i];
            let lo = i.saturating_sub(kb);
            for j in lo..i {
                let v = row[i - j];
                acc += v * x[j];
                y[j] += v * x[i];
            }
            y[i] += acc;
        }
        y
    }

    /// self + scale * other, band widened as needed.
    pub fn add_scaled(&self, other: &SymBanded, scale: f64) -> SymBanded {
        assert_eq!(self.n, other.n);
        let kb = self.bandwidth.max(other.bandwidth);
        let mut out = SymBanded::zeros(self.n, kb);
        for i in 0..self.n {
            let lo = i.saturating_sub(kb);
            for j in lo..=i {
                let v = self.get(i, j) + scale * other.get(i, j);
                out.set(i, j, v);
            }
        }
        out
    }

    /// Copy with the band truncated to `bandwidth` (entries beyond dropped).
    pub fn truncated(&self, bandwidth: usize) -> SymBanded {
        let kb = bandwidth.min(self.bandwidth);
        let mut out = SymBanded::zeros(self.n, kb);
        for i in 0..self.n {
            for off in 0..=kb.min(i) {
                out.data[i * (kb + 1) + off] = self.data[i * (self.bandwidth + 1) + off];
            }
        }
        out
    }

    /// Max |diagonal| entry.
    pub fn max_diag(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[i * (self.bandwidth + 1)].abs())
            .fold(0.0, f64::max)
    }

    /// Banded Cholesky with a diagonal shift `ridge` added up front.
    /// Returns None if a pivot is not strictly positive.
    pub fn cholesky_shifted(&self, ridge: f64) -> Option<BandedCholesky> {
        let n = self.n;
        let kb = self.bandwidth;
        let mut l = vec![0.0; n * (kb + 1)];
        for i in 0..n {
            let lo = i.saturating_sub(kb);
            for j in lo..=i {
                let mut sum = self.data[i * (kb + 1) + (i - j)];
                if i == j {
                    sum += ridge;
                }
                let kmin = lo.max(j.saturating_sub(kb));
                for k in kmin..j {
                    sum -= l[i * (kb + 1) + (i - k)] * l[j * (kb + 1) + (j - k)];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return None;
                    }
                    l[i * (kb + 1)] = sum.sqrt();
                } else {
                    l[i * (kb + 1) + (i - j)] = sum / l[j * (kb + 1)];
                }
            }
        }
        Some(BandedCholesky { n, bandwidth: kb, l })
    }

    /// Factor, escalating a relative diagonal ridge until the factorization
    /// succeeds. The Gaussian kernel Gram matrix is numerically rank-deficient
    /// once ε ≫ h, so a tiny shift (well below every tolerance in use) keeps
    /// the solve defined; genuinely broken inputs still fail.
    pub fn cholesky_ridged(&self) -> Result<BandedCholesky> {
        let scale = self.max_diag();
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::SingularMass(format!("max diagonal {scale}")));
        }
        for rel in [0.0, 1e-14, 1e-12, 1e-10] {
            if let Some(f) = self.cholesky_shifted(rel * scale) {
                return Ok(f);
            }
        }
        Err(Error::SingularMass(
            "no positive pivot up to relative ridge 1e-10".into(),
        ))
    }
}

/// Lower Cholesky factor of a symmetric banded matrix.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let kb = self.bandwidth;
        let mut x = rhs.to_vec();
        // forward: L y = rhs
        for i in 0..self.n {
            let lo = i.saturating_sub(kb);
            let mut sum = x[i];
            for k in lo..i {
                sum -= self.l[i * (kb + 1) + (i - k)] * x[k];
            }
            x[i] = sum / self.l[i * (kb + 1)];
        }
        // backward: L^T x = y
        for i in (0..self.n).rev() {
            let hi = (i + kb).min(self.n - 1);
            let mut sum = x[i];
            for k in (i + 1)..=hi {
                sum -= self.l[k * (kb + 1) + (k - i)] * x[k];
            }
            x[i] = sum / self.l[i * (kb + 1)];
        }
        x
    }
}

/// Thomas algorithm for a tridiagonal system. `lower` and `upper` have length
/// n-1. Returns None on a zero pivot.
pub fn solve_tridiag(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    assert!(lower.len() == n - 1 && upper.len() == n - 1 && rhs.len() == n);
    let mut c = vec![0.0; n - 1];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 {
        return None;
    }
    c[0] = upper[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i - 1] * c[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return None;
        }
        if i < n - 1 {
            c[i] = upper[i] / piv;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}
