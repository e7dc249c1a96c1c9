//! Symmetric tridiagonal kernels: Sturm counts, bisection, twisted
//! factorization eigenvectors and a pivoted LU solver.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix with diagonal `diag` and off-diagonal `off`
/// (`off.len() == diag.len() - 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// An eigenvector stored as signs and natural-log moduli, normalized so the
/// Euclidean norm is one. Entries far below the f64 range keep their logs.
#[derive(Clone, Debug, PartialEq)]
pub struct LogVector {
    pub sign: Vec<i8>,
    pub log_abs: Vec<f64>,
}

impl LogVector {
    pub fn to_dense(&self) -> Vec<f64> {
        self.sign
            .iter()
            .zip(&self.log_abs)
            .map(|(&s, &l)| s as f64 * l.exp())
            .collect()
    }
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(off.len() + 1, diag.len());
        SymTridiagonal { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// ‖(T − shift) x‖₂.
    pub fn residual(&self, x: &[f64], shift: f64) -> f64 {
        self.matvec(x)
            .iter()
            .zip(x)
            .map(|(y, xi)| (y - shift * xi).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    fn pivmin(&self) -> f64 {
        let m = self.off.iter().fold(1.0f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * m
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            q = (self.diag[i] - x) - self.off[i - 1] * self.off[i - 1] / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        if index >= self.len() {
            return Err(Error::InvalidInput(format!(
                "eigenvalue index {index} out of range for size {}",
                self.len()
            )));
        }
        let (glo, ghi) = self.gershgorin();
        let pad = f64::EPSILON * (glo.abs().max(ghi.abs()) + 1.0) * self.len() as f64;
        let (mut lo, mut hi) = (glo - pad, ghi + pad);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.sturm_count(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if hi - lo > 1e-10 * (1.0 + lo.abs()) {
            return Err(Error::Convergence(index));
        }
        Ok(0.5 * (lo + hi))
    }

    /// Eigenvalues for a set of indices, computed in parallel.
    pub fn eigenvalues(&self, indices: &[usize]) -> Result<Vec<f64>> {
        indices.par_iter().map(|&i| self.eigenvalue(i)).collect()
    }

    /// Eigenvector for an accurate eigenvalue approximation `lambda` via the
    /// twisted factorization `T − λ = N_r Δ N_rᵀ`.
    pub fn eigenvector(&self, lambda: f64) -> LogVector {
        let n = self.len();
        if n == 1 {
            return LogVector {
                sign: vec![1],
                log_abs: vec![0.0],
            };
        }
        let tiny = self.pivmin().max(f64::MIN_POSITIVE) * 4.0;
        let guard = |v: f64| if v.abs() < tiny { -tiny } else { v };
        let mut dp = vec![0.0; n];
        dp[0] = guard(self.diag[0] - lambda);
        for i in 1..n {
            dp[i] = guard((self.diag[i] - lambda) - self.off[i - 1] * self.off[i - 1] / dp[i - 1]);
        }
        let mut dm = vec![0.0; n];
        dm[n - 1] = guard(self.diag[n - 1] - lambda);
        for i in (0..n - 1).rev() {
            dm[i] = guard((self.diag[i] - lambda) - self.off[i] * self.off[i] / dm[i + 1]);
        }
        let r = (0..n)
            .min_by(|&a, &b| {
                let ga = (dp[a] + dm[a] - (self.diag[a] - lambda)).abs();
                let gb = (dp[b] + dm[b] - (self.diag[b] - lambda)).abs();
                ga.total_cmp(&gb)
            })
            .unwrap_or(0);

        let mut sign = vec![1i8; n];
        let mut log_abs = vec![0.0f64; n];
        for i in (0..r).rev() {
            let ratio = -self.off[i] / dp[i];
            log_abs[i] = log_abs[i + 1] + ratio.abs().ln();
            sign[i] = sign[i + 1] * ratio_sign(ratio);
        }
        for i in r + 1..n {
            let ratio = -self.off[i - 1] / dm[i];
            log_abs[i] = log_abs[i - 1] + ratio.abs().ln();
            sign[i] = sign[i - 1] * ratio_sign(ratio);
        }
        let peak = log_abs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let norm = log_abs.iter().map(|l| (2.0 * (l - peak)).exp()).sum::<f64>().ln() / 2.0 + peak;
        for l in log_abs.iter_mut() {
            *l -= norm;
        }
        for (s, l) in sign.iter_mut().zip(&log_abs) {
            if *l == f64::NEG_INFINITY {
                *s = 0;
            }
        }
        LogVector { sign, log_abs }
    }

    /// LU factorization of `T − shift` with partial pivoting.
    pub fn factor(&self, shift: f64) -> TridiagLu {
        TridiagLu::new(self, shift)
    }
}

fn ratio_sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Pivoted LU of a general tridiagonal matrix, stored in the layout of
/// LAPACK's `gttrf`.
#[derive(Clone, Debug)]
pub struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn new(t: &SymTridiagonal, shift: f64) -> Self {
        let n = t.len();
        let mut dl = t.off.clone();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let f = dl[i] / d[i];
                    dl[i] = f;
                    d[i + 1] -= f * du[i];
                }
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                swapped[i] = true;
            }
        }
        TridiagLu {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.d.contains(&0.0)
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
                b[i + 1] -= self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}
