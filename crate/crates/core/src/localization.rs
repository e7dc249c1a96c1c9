//! Eigenpairs of finite boxes, decay fits and Lyapunov exponents.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::log_add_exp;
use crate::operator::{box_hamiltonian, Interval, ModelParams};
use crate::tridiag::SymTridiagonal;

/// Largest box accepted by [`eigensolve`].
pub const MAX_EIGEN_BOX: usize = 10_000;

const RESIDUAL_LIMIT: f64 = 1e-8;

/// Eigenvalue and unit eigenvector of H_I.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenpair {
    pub energy: f64,
    /// Entries below the f64 range are stored as 0; see `log_abs`.
    pub vector: Vec<f64>,
    /// ln |v| per site, finite far below the f64 range.
    pub log_abs: Vec<f64>,
    pub interval: Interval,
    pub residual: f64,
    pub index: usize,
}

impl Eigenpair {
    /// Site of max |v|.
    pub fn center(&self) -> i64 {
        let i = self
            .log_abs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.interval.x1 + i as i64
    }

    /// 1 / Σ v⁴.
    pub fn participation_ratio(&self) -> f64 {
        1.0 / self.vector.iter().map(|v| v.powi(4)).sum::<f64>()
    }

    pub fn value_at(&self, site: i64) -> f64 {
        self.vector[(site - self.interval.x1) as usize]
    }

    pub fn log_abs_at(&self, site: i64) -> f64 {
        self.log_abs[(site - self.interval.x1) as usize]
    }
}

/// Which eigenpairs [`eigensolve`] returns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Selector {
    /// The `count` eigenvalues nearest the energy.
    NearestEnergy(f64),
    /// Smallest participation ratios over the whole spectrum.
    MostLocalized,
    /// Localized pairs centred away from the edges, nearest `target`
    /// (default: the median eigenvalue).
    Central {
        target: Option<f64>,
        /// Fraction of the box excluded at each end for the centre.
        margin: f64,
        /// Participation-ratio ceiling (default |I|/4).
        max_participation: Option<f64>,
    },
    /// Explicit ascending-order indices.
    Indices(Vec<usize>),
}

impl Selector {
    pub fn central() -> Self {
        Selector::Central {
            target: None,
            margin: 0.25,
            max_participation: None,
        }
    }
}

fn pair_for(h: &SymTridiagonal, interval: Interval, index: usize) -> Result<Eigenpair> {
    let mut energy = h.eigenvalue(index)?;
    for _ in 0..3 {
        let lv = h.eigenvector(energy);
        let vector = lv.to_dense();
        let residual = h.residual(&vector, energy);
        let pair = Eigenpair {
            energy,
            vector,
            log_abs: lv.log_abs,
            interval,
            residual,
            index,
        };
        if residual <= RESIDUAL_LIMIT {
            return Ok(pair);
        }
        let hv = h.matvec(&pair.vector);
        energy = hv.iter().zip(&pair.vector).map(|(a, b)| a * b).sum();
    }
    Err(Error::Convergence(index))
}

/// Eigenpairs of H_I chosen by `selector`. The energy of `params` is ignored.
pub fn eigensolve(
    params: &ModelParams,
    interval: Interval,
    count: usize,
    selector: &Selector,
) -> Result<Vec<Eigenpair>> {
    let n = interval.len();
    if n > MAX_EIGEN_BOX {
        return Err(Error::BoxTooLarge {
            size: n,
            max: MAX_EIGEN_BOX,
        });
    }
    let h = box_hamiltonian(params, interval)?;
    let count = count.min(n);
    match selector {
        Selector::Indices(idx) => idx.par_iter().map(|&i| pair_for(&h, interval, i)).collect(),
        Selector::NearestEnergy(e) => {
            let below = h.sturm_count(*e);
            let lo = below.saturating_sub(count);
            let hi = (below + count).min(n);
            let idx: Vec<usize> = (lo..hi).collect();
            let mut pairs: Vec<Eigenpair> = idx
                .par_iter()
                .map(|&i| pair_for(&h, interval, i))
                .collect::<Result<_>>()?;
            pairs.sort_by(|a, b| (a.energy - e).abs().total_cmp(&(b.energy - e).abs()));
            pairs.truncate(count);
            pairs.sort_by_key(|p| p.index);
            Ok(pairs)
        }
        Selector::MostLocalized => {
            let idx: Vec<usize> = (0..n).collect();
            let mut pairs: Vec<Eigenpair> = idx
                .par_iter()
                .filter_map(|&i| pair_for(&h, interval, i).ok())
                .collect();
            pairs.sort_by(|a, b| {
                a.participation_ratio()
                    .total_cmp(&b.participation_ratio())
                    .then(a.index.cmp(&b.index))
            });
            pairs.truncate(count);
            Ok(pairs)
        }
        Selector::Central {
            target,
            margin,
            max_participation,
        } => {
            let start = match target {
                Some(e) => h.sturm_count(*e).min(n - 1),
                None => n / 2,
            };
            let pr_cap = max_participation.unwrap_or(n as f64 / 4.0);
            let edge = (margin * n as f64).ceil() as i64;
            let (lo_c, hi_c) = (interval.x1 + edge, interval.x2 - edge);
            let order = outward(start, n);
            let mut accepted: Vec<Eigenpair> = Vec::new();
            for batch in order.chunks((4 * count).max(8)) {
                let pairs: Vec<Result<Eigenpair>> =
                    batch.par_iter().map(|&i| pair_for(&h, interval, i)).collect();
                for p in pairs.into_iter().flatten() {
                    let c = p.center();
                    if c < lo_c || c > hi_c || p.participation_ratio() > pr_cap {
                        continue;
                    }
                    let duplicate = accepted
                        .iter()
                        .any(|q| q.center() == c && (q.energy - p.energy).abs() < 1e-8);
                    if !duplicate && accepted.len() < count {
                        accepted.push(p);
                    }
                }
                if accepted.len() >= count {
                    break;
                }
            }
            accepted.sort_by_key(|p| p.index);
            Ok(accepted)
        }
    }
}

/// Indices start, start−1, start+1, start−2, ... within 0..n.
fn outward(start: usize, n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    out.push(start);
    for d in 1..n {
        if start + d < n {
            out.push(start + d);
        }
        if d <= start {
            out.push(start - d);
        }
        if out.len() == n {
            break;
        }
    }
    out
}

/// Settings for [`fit_decay`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub lambda: f64,
    pub beta_proxy: f64,
    /// Fraction of the box excluded at each end.
    pub boundary_margin: f64,
    /// Sites within this distance of the centre are excluded (q_1).
    pub center_exclusion: usize,
    /// Width of the windows used for the max/min slope.
    pub window: usize,
}

impl DecayConfig {
    pub fn new(lambda: f64, beta_proxy: f64) -> Self {
        DecayConfig {
            lambda,
            beta_proxy,
            boundary_margin: 0.1,
            center_exclusion: 1,
            window: 50,
        }
    }
}

/// Exponential decay fit of an eigenvector around its peak.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub center: i64,
    pub energy: f64,
    pub fitted_rate: f64,
    /// Outer site range of the fit; sites within `center_exclusion` of the
    /// centre are left out.
    pub fit_window: Interval,
    pub center_exclusion: usize,
    pub r_squared: f64,
    pub points: usize,
    pub max_window_rate: f64,
    pub min_window_rate: f64,
    pub beta_proxy: f64,
    /// ln λ − (3/2) β.
    pub predicted_rate_floor: f64,
    /// ln λ.
    pub predicted_rate_exact_beta0: f64,
    pub box_size: usize,
}

/// Fits ln(v²(k) + v²(k+1))/2 ≈ c_± − rate·|k − centre| with separate
/// intercepts on each side of the centre.
pub fn fit_decay(pair: &Eigenpair, config: &DecayConfig) -> Result<DecayReport> {
    let n = pair.interval.len();
    let pr = pair.participation_ratio();
    if pr > n as f64 / 4.0 {
        return Err(Error::NotLocalized {
            participation: pr,
            limit: n as f64 / 4.0,
        });
    }
    let center = pair.center();
    let ci = (center - pair.interval.x1) as usize;
    if ci < 10 || n - 1 - ci < 10 {
        return Err(Error::InvalidInput(format!(
            "eigenvector peak at {center} lies within 10 sites of the boundary"
        )));
    }
    let edge = (config.boundary_margin * n as f64).ceil() as usize;
    let lo = edge;
    let hi = n.saturating_sub(edge + 1);
    let mut pts: Vec<(f64, f64, bool)> = Vec::new();
    for i in lo..hi {
        let d = i.abs_diff(ci);
        if d < config.center_exclusion.max(1) {
            continue;
        }
        let w = log_add_exp(2.0 * pair.log_abs[i], 2.0 * pair.log_abs[i + 1]) / 2.0;
        if w.is_finite() {
            pts.push((d as f64, w, i < ci));
        }
    }
    if pts.len() < 3 {
        return Err(Error::InvalidInput("too few sites in the fit window".into()));
    }
    let (rate, r_squared) = two_intercept_fit(&pts);

    let mut window_rates = Vec::new();
    for side in [true, false] {
        let mut s: Vec<(f64, f64)> = pts
            .iter()
            .filter(|p| p.2 == side)
            .map(|p| (p.0, p.1))
            .collect();
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        for chunk in s.chunks(config.window.max(2)) {
            if chunk.len() == config.window.max(2) {
                window_rates.push(-slope(chunk));
            }
        }
    }
    let (max_window_rate, min_window_rate) = if window_rates.is_empty() {
        (rate, rate)
    } else {
        (
            window_rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            window_rates.iter().cloned().fold(f64::INFINITY, f64::min),
        )
    };
    let ln_lambda = config.lambda.ln();
    Ok(DecayReport {
        center,
        energy: pair.energy,
        fitted_rate: rate,
        fit_window: Interval {
            x1: pair.interval.x1 + lo as i64,
            x2: pair.interval.x1 + hi as i64 - 1,
        },
        center_exclusion: config.center_exclusion,
        r_squared,
        points: pts.len(),
        max_window_rate,
        min_window_rate,
        beta_proxy: config.beta_proxy,
        predicted_rate_floor: ln_lambda - 1.5 * config.beta_proxy,
        predicted_rate_exact_beta0: ln_lambda,
        box_size: n,
    })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Common slope, one intercept per side. Returns (−slope, r²).
fn two_intercept_fit(pts: &[(f64, f64, bool)]) -> (f64, f64) {
    let mut sums = [[0.0f64; 3]; 2];
    for &(x, y, left) in pts {
        let s = &mut sums[left as usize];
        s[0] += 1.0;
        s[1] += x;
        s[2] += y;
    }
    let means: Vec<(f64, f64)> = sums
        .iter()
        .map(|s| if s[0] > 0.0 { (s[1] / s[0], s[2] / s[0]) } else { (0.0, 0.0) })
        .collect();
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y, left) in pts {
        let (mx, my) = means[left as usize];
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
    }
    let b = sxy / sxx;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for &(x, y, left) in pts {
        let (mx, my) = means[left as usize];
        let fit = my + b * (x - mx);
        ss_res += (y - fit).powi(2);
        ss_tot += (y - ybar).powi(2);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (-b, r2)
}

/// Steps between renormalizations of the transfer-matrix product.
pub const RENORM_CADENCE: usize = 32;

/// (1/N) ln ‖A_{N−1} ⋯ A_0‖ with A_n = [[E − v(n), −1], [1, 0]], averaged
/// over the phases θ + j/samples.
pub fn lyapunov(params: &ModelParams, steps: usize, theta_samples: usize) -> Result<f64> {
    if steps < 1 || theta_samples < 1 {
        return Err(Error::InvalidInput("steps and theta_samples must be positive".into()));
    }
    // Collect before summing so the result does not depend on the pool size.
    let values: Vec<f64> = (0..theta_samples)
        .into_par_iter()
        .map(|j| {
            let shift = j as f64 / theta_samples as f64;
            lyapunov_single(params, shift, steps)
        })
        .collect();
    let total: f64 = values.iter().sum();
    Ok(total / theta_samples as f64)
}

fn lyapunov_single(params: &ModelParams, shift: f64, steps: usize) -> f64 {
    let mut m = [[1.0f64, 0.0], [0.0, 1.0]];
    let mut log_acc = 0.0;
    for n in 0..steps {
        let a = params.energy - params.potential_shifted(shift, n as i64);
        m = [
            [a * m[0][0] - m[1][0], a * m[0][1] - m[1][1]],
            [m[0][0], m[0][1]],
        ];
        if (n + 1) % RENORM_CADENCE == 0 {
            let s = op_norm(&m);
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v /= s;
                }
            }
            log_acc += s.ln();
        }
    }
    (log_acc + op_norm(&m).ln()) / steps as f64
}

/// Largest singular value of a 2×2 matrix.
fn op_norm(m: &[[f64; 2]; 2]) -> f64 {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let f = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (f * f - 4.0 * det * det).max(0.0).sqrt();
    ((f + disc) / 2.0).sqrt()
}

/// Free-Laplacian Dirichlet eigenvalues 2 cos(πj/(N+1)), ascending.
pub fn free_spectrum(n: usize) -> Vec<f64> {
    (1..=n)
        .rev()
        .map(|j| 2.0 * (PI * j as f64 / (n as f64 + 1.0)).cos())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::FrequencySpec;

    fn synthetic(rate: f64, n: usize, m: usize) -> Eigenpair {
        let log_abs: Vec<f64> = (0..n).map(|i| -rate * i.abs_diff(m) as f64).collect();
        let norm = log_abs.iter().map(|l| (2.0 * l).exp()).sum::<f64>().ln() / 2.0;
        let log_abs: Vec<f64> = log_abs.iter().map(|l| l - norm).collect();
        Eigenpair {
            energy: 0.0,
            vector: log_abs.iter().map(|l| l.exp()).collect(),
            log_abs,
            interval: Interval::sized(0, n),
            residual: 0.0,
            index: 0,
        }
    }

    #[test]
    fn planted_exponential() {
        let r = fit_decay(&synthetic(0.9, 400, 200), &DecayConfig::new(3.0, 0.0)).unwrap();
        assert!((r.fitted_rate - 0.9).abs() < 1e-3);
        assert!(r.r_squared > 0.999);
    }

    #[test]
    fn free_box_spectrum() {
        let p = ModelParams::new(0.0, FrequencySpec::golden(), 0.0, 0.0).unwrap();
        let b = Interval::sized(0, 30);
        let pairs = eigensolve(&p, b, 30, &Selector::Indices((0..30).collect())).unwrap();
        for (pair, exact) in pairs.iter().zip(free_spectrum(30)) {
            assert!((pair.energy - exact).abs() < 1e-12);
            assert!(pair.residual <= 1e-8);
        }
    }

    #[test]
    fn free_lyapunov_vanishes() {
        let p = ModelParams::new(0.0, FrequencySpec::golden(), 0.0, 0.7).unwrap();
        let l = lyapunov(&p, 10_000, 4).unwrap();
        assert!(l.abs() < 1e-3);
    }

    #[test]
    fn delocalized_vector_rejected() {
        let n = 100;
        let v = vec![(1.0 / n as f64).sqrt(); n];
        let pair = Eigenpair {
            energy: 0.0,
            log_abs: v.iter().map(|x: &f64| x.ln()).collect(),
            vector: v,
            interval: Interval::sized(0, n),
            residual: 0.0,
            index: 0,
        };
        assert!(matches!(
            fit_decay(&pair, &DecayConfig::new(3.0, 0.0)),
            Err(Error::NotLocalized { .. })
        ));
    }

    #[test]
    fn outward_order_covers_all() {
        let mut o = outward(3, 7);
        assert_eq!(&o[..3], &[3, 4, 2]);
        o.sort();
        assert_eq!(o, (0..7).collect::<Vec<_>>());
    }
}
