//! Resonant sites, uniformity of phase sets and sine-sum estimates.

use std::f64::consts::{LN_2, PI};

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::{estimate_beta, FrequencySpec, Rotation};
use crate::numeric::ln_big;
use crate::operator::{det_p_sites, Interval, ModelParams};

/// Node pairs closer than this in cos 2πθ are treated as coincident.
pub const DEGENERATE_NODE_GAP: f64 = 1e-14;

/// Resonance scale b = q^{8/9}.
pub fn resonance_scale(q: f64) -> f64 {
    (q.ln() * 8.0 / 9.0).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub y: i64,
    /// Scale with b_n ≤ y < b_{n+1}.
    pub n: usize,
    pub q_n: u64,
    pub b_n: f64,
    pub resonant: bool,
    /// Nearest multiple index ℓ ≥ 1 with |y − ℓ q_n| ≤ b_n.
    pub ell: Option<u64>,
    /// dist(y, {ℓ q_n : ℓ ≥ 0}).
    pub distance: u64,
}

/// Locates the scale of `y ≥ 1` and tests |y − ℓ q_n| ≤ b_n over ℓ ≥ 1.
pub fn classify_site(alpha: &FrequencySpec, y: i64) -> Result<ResonanceReport> {
    if y < 1 {
        return Err(Error::InvalidInput(format!("site {y} must be positive")));
    }
    let qs = alpha.denominators(alpha.generated_depth());
    let bs: Vec<f64> = qs.iter().map(|q| (ln_big(q) * 8.0 / 9.0).exp()).collect();
    let yf = y as f64;
    if bs.first().is_none_or(|&b1| yf < b1) {
        return Err(Error::InvalidInput(format!("site {y} lies below b_1")));
    }
    let Some(i) = (0..bs.len().saturating_sub(1)).find(|&i| bs[i] <= yf && yf < bs[i + 1]) else {
        return Err(Error::InsufficientDepth {
            requested: bs.len() + 1,
            available: alpha.generated_depth(),
        });
    };
    let q = qs[i].to_u64().expect("q_n below y^{9/8} fits u64");
    let b = bs[i];
    let yu = y as u64;
    let below = yu / q;
    let distance = (yu - below * q).min((below + 1) * q - yu);
    let mut ell = None;
    for l in [below, below + 1] {
        if l >= 1 && (yu.abs_diff(l * q) as f64) <= b {
            ell = Some(l);
            break;
        }
    }
    Ok(ResonanceReport {
        y,
        n: i + 1,
        q_n: q,
        b_n: b,
        resonant: ell.is_some(),
        ell,
        distance,
    })
}

/// Box size used for a site at distance `d` from the localization centre:
/// 2q_n − 1 for resonant sites, 2 s q_{n−1} − 1 otherwise, with s the
/// largest integer such that s q_{n−1} ≤ dist(d, q_n ℤ₊).
///
/// When that s is zero (possible when q_{n−1} exceeds the distance), the
/// deepest q_m ≤ dist(d, q_n ℤ₊) with m < n takes the place of q_{n−1}.
pub fn scale_window(alpha: &FrequencySpec, d: u64) -> Option<usize> {
    if d == 0 {
        return None;
    }
    let r = classify_site(alpha, d as i64).ok()?;
    if r.resonant {
        return usize::try_from(2 * r.q_n - 1).ok().filter(|&k| k >= 5);
    }
    let qs: Vec<u64> = alpha
        .denominators(r.n)
        .iter()
        .map(|q| q.to_u64().unwrap_or(u64::MAX))
        .collect();
    let q_prev = if r.n >= 2 { qs[r.n - 2] } else { 1 };
    let (s, base) = if r.distance >= q_prev {
        (r.distance / q_prev, q_prev)
    } else {
        let base = qs[..r.n - 1]
            .iter()
            .rev()
            .find(|&&q| q <= r.distance)
            .copied()
            .unwrap_or(1);
        (r.distance / base, base)
    };
    usize::try_from(2 * s * base - 1).ok().filter(|&k| k >= 5)
}

/// The index sets I₁ and I₂ for scale q and multiple ℓ.
pub fn index_sets(q: u64, ell: u64) -> (Interval, Interval) {
    let q = q as i64;
    let l = ell as i64;
    let f = 2 * q / 3;
    (
        Interval { x1: -f, x2: f - 2 },
        Interval {
            x1: (l - 1) * q + f - 1,
            x2: (l + 1) * q - f - 1,
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub n: usize,
    pub q_n: u64,
    pub ell: u64,
    pub i1: Interval,
    pub i2: Interval,
    /// ln of the maximal Lagrange product.
    pub log_max: f64,
    /// log_max / (2q_n − 1).
    pub epsilon_achieved: f64,
    pub beta_proxy: f64,
    /// β_proxy/2 + ε.
    pub bound: f64,
    pub uniform: bool,
    pub grid_size: usize,
    /// Maximizing point x and node index j.
    pub argmax_x: f64,
    pub argmax_j: i64,
}

/// Max over x ∈ [−1,1] and i of Σ_{j≠i} ln|x − c_j| − D_i, where
/// `d[i] = Σ_{j≠i} ln|c_i − c_j|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangeMax {
    pub log_max: f64,
    pub x: f64,
    pub i: usize,
}

fn log_product(nodes: &[f64], skip: usize, x: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .map(|(_, c)| (x - c).abs().ln())
        .sum()
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Grid search on a Chebyshev grid plus endpoints, followed by golden-section
/// refinement of the best cells. Each refinement runs on an interval between
/// consecutive nodes other than c_i, where the objective is concave.
pub fn lagrange_log_max(nodes: &[f64], d: &[f64], grid_size: usize) -> LagrangeMax {
    let m = nodes.len();
    let mut grid: Vec<f64> = (0..grid_size)
        .map(|k| (PI * (k as f64 + 0.5) / grid_size as f64).cos())
        .collect();
    grid.push(1.0);
    grid.push(-1.0);

    let per_point: Vec<(f64, f64, usize)> = grid
        .par_iter()
        .map(|&x| {
            let logs: Vec<f64> = nodes.iter().map(|c| (x - c).abs().ln()).collect();
            let s: f64 = logs.iter().sum();
            let (mut best, mut bi) = (f64::NEG_INFINITY, 0);
            for i in 0..m {
                let v = if logs[i] == f64::NEG_INFINITY {
                    log_product(nodes, i, x) - d[i]
                } else {
                    s - logs[i] - d[i]
                };
                if v > best {
                    best = v;
                    bi = i;
                }
            }
            (best, x, bi)
        })
        .collect();

    let mut order: Vec<usize> = (0..per_point.len()).collect();
    order.sort_by(|&a, &b| per_point[b].0.total_cmp(&per_point[a].0).then(a.cmp(&b)));
    let mut sorted_nodes = nodes.to_vec();
    sorted_nodes.sort_by(f64::total_cmp);

    let mut best = LagrangeMax {
        log_max: per_point[order[0]].0,
        x: per_point[order[0]].1,
        i: per_point[order[0]].2,
    };
    let mut seen: Vec<(usize, f64, f64)> = Vec::new();
    for &idx in order.iter().take(8) {
        let (_, x, i) = per_point[idx];
        let ci = nodes[i];
        let lo = sorted_nodes
            .iter()
            .rev()
            .find(|&&c| c < x && c != ci)
            .copied()
            .unwrap_or(-1.0)
            .max(-1.0);
        let hi = sorted_nodes
            .iter()
            .find(|&&c| c > x && c != ci)
            .copied()
            .unwrap_or(1.0)
            .min(1.0);
        if seen.iter().any(|&(j, a, b)| j == i && a == lo && b == hi) {
            continue;
        }
        seen.push((i, lo, hi));
        let f = |t: f64| log_product(nodes, i, t) - d[i];
        let (xr, vr) = golden_section_max(f, lo, hi);
        if vr > best.log_max {
            best = LagrangeMax {
                log_max: vr,
                x: xr,
                i,
            };
        }
    }
    best
}

/// [`lagrange_log_max`] with node differences taken directly from `nodes`.
pub fn max_log_lagrange(nodes: &[f64], grid_size: usize) -> Result<LagrangeMax> {
    let m = nodes.len();
    let mut d = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let gap = (nodes[i] - nodes[j]).abs();
            if gap < DEGENERATE_NODE_GAP {
                return Err(Error::DegenerateNodePair {
                    i: i as i64,
                    j: j as i64,
                });
            }
            d[i] += gap.ln();
        }
    }
    Ok(lagrange_log_max(nodes, &d, grid_size))
}

/// |sin π u| with u given as an integer multiple of α plus a real offset.
fn ln_sin(rot: &Rotation, offset: f64, n: i64) -> f64 {
    let u = offset + rot.centered(n);
    let t = u - u.round();
    (PI * t).sin().abs().ln()
}

/// ε-uniformity of {θ + jα : j ∈ I₁ ∪ I₂} at scale n and multiple ℓ.
pub fn uniformity_product(
    params: &ModelParams,
    n: usize,
    ell: u64,
    epsilon: f64,
    grid_size: usize,
) -> Result<UniformityReport> {
    uniformity_product_with(params, n, ell, epsilon, grid_size, DEGENERATE_NODE_GAP)
}

pub fn uniformity_product_with(
    params: &ModelParams,
    n: usize,
    ell: u64,
    epsilon: f64,
    grid_size: usize,
    degenerate_gap: f64,
) -> Result<UniformityReport> {
    let alpha = &params.alpha;
    let depth = alpha.generated_depth();
    if n == 0 || n + 1 > depth {
        return Err(Error::InsufficientDepth {
            requested: n + 1,
            available: depth,
        });
    }
    let qs = alpha.denominators(n + 1);
    let q = qs[n - 1]
        .to_u64()
        .ok_or_else(|| Error::InvalidInput("q_n too large for a uniformity scan".into()))?;
    if q < 8 {
        return Err(Error::InvalidInput(format!("q_n = {q} below 8")));
    }
    let ell_max = ((ln_big(&qs[n]) * 8.0 / 9.0).exp() / q as f64).max(1.0);
    if ell < 1 || ell as f64 > ell_max {
        return Err(Error::InvalidInput(format!(
            "multiple {ell} outside [1, {ell_max:.1}]"
        )));
    }
    if grid_size < 16 * q as usize {
        return Err(Error::InvalidInput(format!(
            "grid size {grid_size} below 8 * 2q_n = {}",
            16 * q
        )));
    }
    let (i1, i2) = index_sets(q, ell);
    let js: Vec<i64> = i1.sites().chain(i2.sites()).collect();
    let rot = &params.rotation;
    let theta = params.theta;
    let nodes: Vec<f64> = js
        .iter()
        .map(|&j| (2.0 * PI * (theta + rot.frac(j))).cos())
        .collect();

    // |c_i − c_j| = 2 |sin π(2θ + (i+j)α)| |sin π((i−j)α)|
    let d: Vec<f64> = js
        .par_iter()
        .map(|&ji| {
            let mut s = 0.0;
            for &jj in &js {
                if jj == ji {
                    continue;
                }
                let v = LN_2 + ln_sin(rot, 2.0 * theta, ji + jj) + ln_sin(rot, 0.0, ji - jj);
                if v < degenerate_gap.ln() {
                    return Err(Error::DegenerateNodePair { i: ji, j: jj });
                }
                s += v;
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;

    let best = lagrange_log_max(&nodes, &d, grid_size);
    let beta = estimate_beta(alpha, depth - 1)?;
    let beta_proxy = beta.proxy_at(n);
    let k = (2 * q - 1) as f64;
    let bound = beta_proxy / 2.0 + epsilon;
    Ok(UniformityReport {
        n,
        q_n: q,
        ell,
        i1,
        i2,
        log_max: best.log_max,
        epsilon_achieved: best.log_max / k,
        beta_proxy,
        bound,
        uniform: best.log_max < k * bound,
        grid_size,
        argmax_x: best.x,
        argmax_j: js[best.i],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineSumReport {
    pub q_n: u64,
    /// Σ_{k≠k₀} ln|sin π(x + (k + m_k q_r)α)|.
    pub sum: f64,
    /// sum + (q_n − 1) ln 2.
    pub deviation: f64,
    /// |deviation| / ln q_n (0 when q_n = 1).
    pub c_estimate: f64,
    pub k0: u64,
}

/// Evaluates the sine sum over k = 1..q_n with the minimizing term removed.
/// `shifts` holds m_1..m_{q_n}; an empty slice means all zero.
pub fn sine_sum_check(
    alpha: &FrequencySpec,
    x: f64,
    n: usize,
    r: usize,
    shifts: &[i64],
) -> Result<SineSumReport> {
    if r < n || n == 0 {
        return Err(Error::InvalidInput(format!("need 1 <= n <= r, got n={n}, r={r}")));
    }
    if alpha.generated_depth() < r + 1 {
        return Err(Error::InsufficientDepth {
            requested: r + 1,
            available: alpha.generated_depth(),
        });
    }
    let qs = alpha.denominators(r + 1);
    let to_u = |i: usize| {
        qs[i]
            .to_u64()
            .filter(|&v| v < 1 << 40)
            .ok_or_else(|| Error::PrecisionUnavailable(format!("q_{} exceeds 2^40", i + 1)))
    };
    let qn = to_u(n - 1)?;
    let qr = to_u(r - 1)?;
    if !shifts.is_empty() && shifts.len() as u64 != qn {
        return Err(Error::InvalidInput(format!(
            "expected {qn} shifts, got {}",
            shifts.len()
        )));
    }
    let m = shifts.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) + 1;
    let q_next = qs[r].to_f64().unwrap_or(f64::INFINITY);
    if m as f64 >= q_next / (10.0 * qn as f64) {
        return Err(Error::InvalidInput(format!(
            "m = {m} violates m < q_(r+1) / (10 q_n)"
        )));
    }
    let rot = Rotation::new(alpha)?;
    let idx: Vec<i64> = (1..=qn as i64)
        .map(|k| k + shifts.get(k as usize - 1).copied().unwrap_or(0) * qr as i64)
        .collect();
    let far = idx.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as i64;
    if rot.error_bound(far) > 1e-9 {
        return Err(Error::PrecisionUnavailable(format!(
            "rotation error {:.1e} at index {far}",
            rot.error_bound(far)
        )));
    }
    let terms: Vec<f64> = idx.iter().map(|&j| ln_sin(&rot, x, j)).collect();
    let (k0, _) = terms
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("q_n >= 1");
    let sum: f64 = terms
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != k0)
        .map(|(_, v)| v)
        .sum();
    let deviation = sum + (qn as f64 - 1.0) * LN_2;
    let c_estimate = if qn > 1 {
        deviation.abs() / (qn as f64).ln()
    } else {
        0.0
    };
    Ok(SineSumReport {
        q_n: qn,
        sum,
        deviation,
        c_estimate,
        k0: k0 as u64 + 1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalReport {
    pub theta: f64,
    pub k_max: u64,
    /// k with 2 ≤ |k| ≤ K and |sin π(2θ + kα)| ≤ k⁻².
    pub small_sine: Vec<i64>,
    /// s with |s| ≤ K and 2θ + sα within 1e-12 of an integer.
    pub rational_relations: Vec<i64>,
}

impl ExceptionalReport {
    pub fn possibly_exceptional(&self) -> bool {
        !self.small_sine.is_empty() || !self.rational_relations.is_empty()
    }
}

/// Finite screen for the exceptional phase sets. |k| = 1 is left out of the
/// small-sine scan since k⁻² = 1 bounds every sine.
pub fn is_exceptional_phase(theta: f64, alpha: &FrequencySpec, k_max: u64) -> Result<ExceptionalReport> {
    if k_max < 1 {
        return Err(Error::InvalidInput("K must be >= 1".into()));
    }
    let rot = Rotation::new(alpha)?;
    let kk = k_max as i64;
    let dist = |s: i64| {
        let u = 2.0 * theta + rot.centered(s);
        (u - u.round()).abs()
    };
    let small_sine = (-kk..=kk)
        .filter(|k| k.abs() >= 2)
        .filter(|&k| (PI * dist(k)).sin() <= 1.0 / (k * k) as f64)
        .collect();
    let rational_relations = (-kk..=kk).filter(|&s| dist(s) <= 1e-12).collect();
    Ok(ExceptionalReport {
        theta,
        k_max,
        small_sine,
        rational_relations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AMembershipScan {
    pub q_n: u64,
    pub r: f64,
    /// (j, (2q_n)·r − ln|Q_{2q_n−1}(cos 2π θ_j)|) for j ∈ I₁.
    pub margins: Vec<(i64, f64)>,
    pub all_members: bool,
    pub min_margin: f64,
}

/// Tests θ_j ∈ A_{2q_n−1, r} for every j ∈ I₁, using
/// |Q_{2q−1}(cos 2π θ_j)| = |P_{2q−1}(θ + (j − q + 1)α)|.
pub fn a_membership_scan(params: &ModelParams, q: u64, r: f64) -> Result<AMembershipScan> {
    if q < 2 {
        return Err(Error::InvalidInput("q must be >= 2".into()));
    }
    let (i1, _) = index_sets(q, 1);
    let k = (2 * q - 1) as usize;
    let margins: Vec<(i64, f64)> = i1
        .sites()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&j| {
            let d = det_p_sites(params, j - q as i64 + 1, k);
            let m = if d.sign == 0 {
                f64::INFINITY
            } else {
                (k as f64 + 1.0) * r - d.log_magnitude
            };
            (j, m)
        })
        .collect();
    let min_margin = margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    Ok(AMembershipScan {
        q_n: q,
        r,
        margins,
        all_members: min_margin >= 0.0,
        min_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_multiple_is_resonant() {
        // silver: 70 < 169^{8/9}, so y = 70 sits at its own scale
        let s = FrequencySpec::silver();
        let r = classify_site(&s, 70).unwrap();
        assert!(r.resonant);
        assert_eq!((r.q_n, r.ell, r.distance), (70, Some(1), 0));
    }

    #[test]
    fn half_scale_is_not_resonant() {
        let g = FrequencySpec::golden();
        // q = 610 > 2^9; b = 610^{8/9} ≈ 299.6 ≤ 305 < b_{n+1}
        let r = classify_site(&g, 305).unwrap();
        assert_eq!(r.q_n, 610);
        assert!(!r.resonant);
        assert_eq!(r.distance, 305);
    }

    #[test]
    fn boundary_distance_counts_as_resonant() {
        let g = FrequencySpec::golden();
        let r0 = classify_site(&g, 987).unwrap();
        let b = r0.b_n.floor() as i64;
        let r = classify_site(&g, 987 + b).unwrap();
        if r.q_n == 987 {
            assert!(r.resonant);
        }
    }

    #[test]
    fn index_sets_have_2q_sites() {
        for q in [8u64, 13, 40, 233, 299] {
            for ell in [1u64, 2, 5] {
                let (a, b) = index_sets(q, ell);
                assert_eq!(a.len() + b.len(), 2 * q as usize);
            }
        }
    }

    #[test]
    fn two_nodes_max_at_endpoint() {
        let nodes = [0.3, -0.2];
        let m = max_log_lagrange(&nodes, 64).unwrap();
        // i = 1 at x = −1: |−1 − 0.3| / |−0.2 − 0.3|
        let expect = (1.3f64 / 0.5).ln();
        assert!((m.log_max - expect).abs() < 1e-12);
        assert!((m.x.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_sine_sum_for_unit_denominator() {
        let g = FrequencySpec::golden();
        let r = sine_sum_check(&g, 0.123, 1, 5, &[]).unwrap();
        assert_eq!(r.q_n, 1);
        assert_eq!((r.sum, r.deviation), (0.0, 0.0));
    }

    #[test]
    fn zero_phase_is_flagged() {
        let g = FrequencySpec::golden();
        let r = is_exceptional_phase(0.0, &g, 10).unwrap();
        assert!(r.rational_relations.contains(&0));
    }

    #[test]
    fn generic_phase_is_clean() {
        let g = FrequencySpec::golden();
        let r = is_exceptional_phase(0.31, &g, 10_000).unwrap();
        assert!(!r.possibly_exceptional(), "{:?}", r);
    }
}
