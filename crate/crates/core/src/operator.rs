//! Finite boxes of the almost Mathieu operator and their determinants.

use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::{FrequencySpec, Rotation};
use crate::tridiag::SymTridiagonal;

/// Largest box accepted by [`box_hamiltonian`].
pub const MAX_BOX: usize = 100_000;

/// Coupling, frequency, phase and energy of `H_{λ,α,θ} − E`.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub lambda: f64,
    pub theta: f64,
    pub energy: f64,
    pub alpha: Arc<FrequencySpec>,
    pub rotation: Rotation,
}

impl ModelParams {
    /// A negative coupling is folded into the phase: H_{λ,θ} = H_{−λ,θ+1/2}.
    pub fn new(lambda: f64, alpha: impl Into<Arc<FrequencySpec>>, theta: f64, energy: f64) -> Result<Self> {
        if !lambda.is_finite() || !theta.is_finite() || !energy.is_finite() {
            return Err(Error::InvalidInput("model parameters must be finite".into()));
        }
        let alpha = alpha.into();
        let rotation = Rotation::new(&alpha)?;
        let (lambda, theta) = if lambda < 0.0 {
            (-lambda, theta + 0.5)
        } else {
            (lambda, theta)
        };
        Ok(ModelParams {
            lambda,
            theta: theta.rem_euclid(1.0),
            energy,
            alpha,
            rotation,
        })
    }

    pub fn with_energy(&self, energy: f64) -> Self {
        ModelParams {
            energy,
            ..self.clone()
        }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        ModelParams {
            theta: theta.rem_euclid(1.0),
            ..self.clone()
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        ModelParams::new(lambda, self.alpha.clone(), self.theta, self.energy)
    }

    /// 2λ cos 2π(θ + nα).
    pub fn potential(&self, n: i64) -> f64 {
        self.potential_shifted(0.0, n)
    }

    /// 2λ cos 2π(θ + shift + nα).
    pub fn potential_shifted(&self, shift: f64, n: i64) -> f64 {
        let phase = self.theta + shift + self.rotation.frac(n);
        2.0 * self.lambda * (2.0 * PI * phase).cos()
    }
}

/// Integer interval [x1, x2].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub x1: i64,
    pub x2: i64,
}

impl Interval {
    pub fn new(x1: i64, x2: i64) -> Result<Self> {
        if x2 < x1 {
            return Err(Error::InvalidInput(format!("empty interval [{x1}, {x2}]")));
        }
        Ok(Interval { x1, x2 })
    }

    /// [start, start + len − 1].
    pub fn sized(start: i64, len: usize) -> Self {
        Interval {
            x1: start,
            x2: start + len as i64 - 1,
        }
    }

    pub fn len(&self) -> usize {
        (self.x2 - self.x1 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, y: i64) -> bool {
        self.x1 <= y && y <= self.x2
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.x1 <= other.x1 && other.x2 <= self.x2
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<i64> {
        self.x1..=self.x2
    }
}

pub fn box_hamiltonian(params: &ModelParams, interval: Interval) -> Result<SymTridiagonal> {
    box_hamiltonian_capped(params, interval, MAX_BOX)
}

pub fn box_hamiltonian_capped(
    params: &ModelParams,
    interval: Interval,
    max: usize,
) -> Result<SymTridiagonal> {
    let size = interval.len();
    if size > max {
        return Err(Error::BoxTooLarge { size, max });
    }
    let diag = interval.sites().map(|n| params.potential(n)).collect();
    Ok(SymTridiagonal::new(diag, vec![1.0; size - 1]))
}

/// A determinant stored as sign and natural-log magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogDet {
    pub sign: i8,
    pub log_magnitude: f64,
    pub k: usize,
}

impl LogDet {
    /// Plain value; overflows for large k.
    pub fn value(&self) -> f64 {
        self.sign as f64 * self.log_magnitude.exp()
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }
}

/// Runs D_j = (v_j − E) D_{j−1} − D_{j−2} one entry at a time, rescaling
/// the pair by exact powers of two.
#[derive(Clone, Copy, Debug)]
pub(crate) struct DetStepper {
    prev: f64,
    cur: f64,
    exponent: i64,
    k: usize,
}

impl DetStepper {
    pub(crate) fn new() -> Self {
        DetStepper {
            prev: 0.0,
            cur: 1.0,
            exponent: 0,
            k: 0,
        }
    }

    pub(crate) fn push(&mut self, a: f64) {
        let next = a * self.cur - self.prev;
        self.prev = self.cur;
        self.cur = next;
        self.k += 1;
        let m = self.cur.abs().max(self.prev.abs());
        if m != 0.0 && !(2f64.powi(-64)..=2f64.powi(64)).contains(&m) {
            let e = m.log2().floor() as i32;
            let scale = 2f64.powi(-e);
            self.cur *= scale;
            self.prev *= scale;
            self.exponent += e as i64;
        }
    }

    /// Sign and ln|D| of the current determinant.
    pub(crate) fn value(&self) -> (i8, f64) {
        if self.cur == 0.0 {
            (0, f64::NEG_INFINITY)
        } else {
            let sign = if self.cur > 0.0 { 1 } else { -1 };
            (sign, self.cur.abs().ln() + self.exponent as f64 * LN_2)
        }
    }
}

pub(crate) fn det_recurrence(entries: impl Iterator<Item = f64>) -> (i8, f64, usize) {
    let mut d = DetStepper::new();
    entries.for_each(|a| d.push(a));
    let (s, l) = d.value();
    (s, l, d.k)
}

/// Sign and ln|det| of every leading block a[..j], j = 0..=len.
pub(crate) fn det_prefixes(a: &[f64]) -> Vec<(i8, f64)> {
    let mut d = DetStepper::new();
    let mut out = Vec::with_capacity(a.len() + 1);
    out.push(d.value());
    for &v in a {
        d.push(v);
        out.push(d.value());
    }
    out
}

/// P_k(θ + shift): determinant of (H − E) restricted to [0, k−1].
pub fn det_p(params: &ModelParams, theta_shift: f64, k: usize) -> LogDet {
    let (sign, log_magnitude, k) = det_recurrence(
        (0..k as i64).map(|n| params.potential_shifted(theta_shift, n) - params.energy),
    );
    LogDet {
        sign,
        log_magnitude,
        k,
    }
}

/// P_k(θ + start·α): determinant of (H − E) restricted to [start, start+k−1].
/// The shift is applied in exact integer arithmetic.
pub fn det_p_sites(params: &ModelParams, start: i64, k: usize) -> LogDet {
    let (sign, log_magnitude, k) =
        det_recurrence((start..start + k as i64).map(|n| params.potential(n) - params.energy));
    LogDet {
        sign,
        log_magnitude,
        k,
    }
}

/// Sup over sampled phases of (1/k) ln |P_k(θ)|. Sign-zero samples are
/// skipped; returns −∞ if every sample vanishes.
pub fn growth_rate(params: &ModelParams, k: usize, phase_samples: usize) -> Result<f64> {
    if k < 1 || phase_samples < 1 {
        return Err(Error::InvalidInput("k and phase_samples must be positive".into()));
    }
    let mid = params.rotation.half_frac(k as i64 - 1);
    let mut phases: Vec<f64> = (0..phase_samples)
        .map(|s| s as f64 / phase_samples as f64)
        .collect();
    for u in [0.0, 0.5] {
        for d in [0.0, 1e-3, -1e-3, 1e-2, -1e-2] {
            phases.push((u + d - mid).rem_euclid(1.0));
        }
    }
    let best = phases
        .par_iter()
        .map(|&phase| det_p(params, phase - params.theta, k))
        .filter(|d| d.sign != 0)
        .map(|d| d.log_magnitude / k as f64)
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(best)
}

/// Result of the A_{k,r} membership test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AMembership {
    pub member: bool,
    /// (k+1) r − ln |Q_k|; nonnegative exactly for members.
    pub margin: f64,
    pub log_q: f64,
}

/// Whether |Q_k(cos 2π θ_test)| ≤ e^{(k+1) r}. The phase of `params` is
/// ignored; P_k is evaluated at θ with θ + (k−1)α/2 = θ_test.
pub fn in_a(params: &ModelParams, theta_test: f64, k: usize, r: f64) -> Result<AMembership> {
    if k < 1 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    let theta = theta_test - params.rotation.half_frac(k as i64 - 1);
    let d = det_p(params, theta - params.theta, k);
    let margin = if d.sign == 0 {
        f64::INFINITY
    } else {
        (k as f64 + 1.0) * r - d.log_magnitude
    };
    Ok(AMembership {
        member: margin >= 0.0,
        margin,
        log_q: d.log_magnitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden(lambda: f64, theta: f64, energy: f64) -> ModelParams {
        ModelParams::new(lambda, FrequencySpec::golden(), theta, energy).unwrap()
    }

    #[test]
    fn potential_basics() {
        assert!((golden(1.5, 0.0, 0.0).potential(0) - 3.0).abs() < 1e-15);
        assert!(golden(1.5, 0.25, 0.0).potential(0).abs() < 1e-15);
    }

    #[test]
    fn negative_coupling_folds_into_phase() {
        let p = golden(-2.0, 0.1, 0.0);
        assert_eq!(p.lambda, 2.0);
        assert!((p.theta - 0.6).abs() < 1e-15);
        let q = golden(2.0, 0.1, 0.0);
        assert!((p.potential(5) + q.potential(5)).abs() < 1e-14);
    }

    #[test]
    fn free_determinant_cycles() {
        let p = golden(0.0, 0.3, 0.0);
        let expect = [1i8, 0, -1, 0];
        for k in 0..16 {
            let d = det_p(&p, 0.0, k);
            assert_eq!(d.sign, expect[k % 4], "k={k}");
            if d.sign != 0 {
                assert!(d.log_magnitude.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_site_determinant() {
        let p = golden(3.0, 0.31, 0.5);
        let d = det_p(&p, 0.05, 1);
        let direct = 6.0 * (2.0 * PI * 0.36).cos() - 0.5;
        assert!((d.value() - direct).abs() < 1e-13);
    }

    #[test]
    fn large_k_does_not_overflow() {
        let d = det_p(&golden(3.0, 0.31, 0.5), 0.0, 5000);
        assert!(d.log_magnitude.is_finite());
        assert!(d.log_magnitude / 5000.0 <= 3f64.ln() + 0.05);
    }

    #[test]
    fn in_a_with_huge_r_is_member() {
        let p = golden(3.0, 0.0, 0.2);
        let m = in_a(&p, 0.37, 200, 10.0 * 3f64.ln()).unwrap();
        assert!(m.member && m.margin > 0.0);
        let m = in_a(&p, 0.37, 200, -10.0).unwrap();
        assert!(!m.member);
    }

    #[test]
    fn box_cap_enforced() {
        let p = golden(1.0, 0.0, 0.0);
        let err = box_hamiltonian_capped(&p, Interval::sized(0, 11), 10).unwrap_err();
        assert!(matches!(err, Error::BoxTooLarge { .. }));
    }
}
