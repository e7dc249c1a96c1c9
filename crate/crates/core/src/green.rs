//! Box Green functions G_I = (H_I − E)^{-1}, regularity of sites and the
//! block resolvent expansion.

use std::collections::HashMap;
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{det_p_sites, det_prefixes, det_recurrence, box_hamiltonian, Interval, ModelParams};
use crate::precise::RefinedEigenpair;
use crate::resonance::scale_window;

/// Largest box accepted by [`green_direct`].
pub const MAX_DIRECT: usize = 2000;

/// Condition number above which [`green_direct`] refuses to invert.
pub const CONDITION_LIMIT: f64 = 1e12;

/// A real number as sign and natural-log modulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub sign: i8,
    pub log_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: 0,
        log_abs: f64::NEG_INFINITY,
    };

    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * self.log_abs.exp()
        }
    }
}

/// Boundary entries G_I(x1, y) and G_I(y, x2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxGreen {
    pub interval: Interval,
    pub energy: f64,
    pub y: i64,
    pub left: LogValue,
    pub right: LogValue,
    /// ln |P_k| of the whole box.
    pub log_den: f64,
    /// Estimated ln of the relative rounding error in P_k, from
    /// u·Σ_j |a_j| |G(j, j)|. Values near zero mean the entries are noise.
    pub log_rel_error: f64,
}

fn parity(n: i64) -> i8 {
    if n.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

fn ratio(num: (i8, f64), den: (i8, f64), parity_sign: i8) -> LogValue {
    if num.0 == 0 {
        LogValue::ZERO
    } else {
        LogValue {
            sign: num.0 * den.0 * parity_sign,
            log_abs: num.1 - den.1,
        }
    }
}

/// Diagonal entries v(n) − E on the closed interval.
fn shifted_diagonal(params: &ModelParams, interval: Interval) -> Vec<f64> {
    interval
        .sites()
        .map(|n| params.potential(n) - params.energy)
        .collect()
}

fn logdet(entries: &[f64]) -> (i8, f64) {
    let (s, l, _) = det_recurrence(entries.iter().copied());
    (s, l)
}

/// G_I(x1, y) and G_I(y, x2) from ratios of box determinants.
pub fn green_cramer(params: &ModelParams, interval: Interval, y: i64) -> Result<BoxGreen> {
    if !interval.contains(y) {
        return Err(Error::InvalidInput(format!(
            "site {y} outside [{}, {}]",
            interval.x1, interval.x2
        )));
    }
    let a = shifted_diagonal(params, interval);
    green_from_diagonal(&a, interval, y, params.energy)
}

fn green_from_diagonal(a: &[f64], interval: Interval, y: i64, energy: f64) -> Result<BoxGreen> {
    let Interval { x1, x2 } = interval;
    let k = a.len();
    let pre = det_prefixes(a);
    let rev: Vec<f64> = a.iter().rev().copied().collect();
    let suf = det_prefixes(&rev);
    let den = pre[k];
    if den.0 == 0 {
        return Err(Error::SingularBox { x1, x2 });
    }
    let off = (y - x1) as usize;
    let left = ratio(suf[k - off - 1], den, parity(y - x1));
    let right = ratio(pre[off], den, parity(x2 - y));
    // Perturbing a_j by δ moves P_k by δ·P[..j]·P[j+1..].
    let mut acc = f64::NEG_INFINITY;
    for (j, &aj) in a.iter().enumerate() {
        let (l, r) = (pre[j], suf[k - j - 1]);
        if l.0 != 0 && r.0 != 0 {
            let term = (aj.abs() + 2.0).ln() + l.1 + r.1;
            acc = crate::numeric::log_add_exp(acc, term);
        }
    }
    Ok(BoxGreen {
        interval,
        energy,
        y,
        left,
        right,
        log_den: den.1,
        log_rel_error: acc - den.1 + f64::EPSILON.ln(),
    })
}

/// General entry G_I(i, j).
pub fn green_entry(params: &ModelParams, interval: Interval, i: i64, j: i64) -> Result<LogValue> {
    if !interval.contains(i) || !interval.contains(j) {
        return Err(Error::InvalidInput("entry outside the box".into()));
    }
    let (i, j) = (i.min(j), i.max(j));
    let Interval { x1, x2 } = interval;
    let den = det_p_sites(params, x1, interval.len());
    if den.sign == 0 {
        return Err(Error::SingularBox { x1, x2 });
    }
    let lhs = det_p_sites(params, x1, (i - x1) as usize);
    let rhs = det_p_sites(params, j + 1, (x2 - j) as usize);
    if lhs.sign == 0 || rhs.sign == 0 {
        return Ok(LogValue::ZERO);
    }
    Ok(LogValue {
        sign: lhs.sign * rhs.sign * den.sign * parity(i + j),
        log_abs: lhs.log_magnitude + rhs.log_magnitude - den.log_magnitude,
    })
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Full inverse of H_I − E by pivoted tridiagonal solves.
pub fn green_direct(params: &ModelParams, interval: Interval) -> Result<DenseMatrix> {
    let n = interval.len();
    if n > MAX_DIRECT {
        return Err(Error::BoxTooLarge {
            size: n,
            max: MAX_DIRECT,
        });
    }
    let h = box_hamiltonian(params, interval)?;
    let lu = h.factor(params.energy);
    if lu.is_singular() {
        return Err(Error::NearSingular {
            condition: f64::INFINITY,
            limit: CONDITION_LIMIT,
        });
    }
    let mut data = vec![0.0; n * n];
    let mut inv_norm1: f64 = 0.0;
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        lu.solve(&mut e);
        inv_norm1 = inv_norm1.max(e.iter().map(|v| v.abs()).sum());
        for (row, v) in e.into_iter().enumerate() {
            data[row * n + col] = v;
        }
    }
    let a_norm1 = (0..n)
        .map(|i| {
            let mut s = (h.diag[i] - params.energy).abs();
            if i > 0 {
                s += 1.0;
            }
            if i + 1 < n {
                s += 1.0;
            }
            s
        })
        .fold(0.0, f64::max);
    let condition = a_norm1 * inv_norm1;
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(Error::NearSingular {
            condition,
            limit: CONDITION_LIMIT,
        });
    }
    Ok(DenseMatrix { n, data })
}

/// Exponential decay rate of |G_I(x1, y)| in y, from a least-squares fit
/// over the middle 80% of the box.
pub fn green_decay_rate(params: &ModelParams, interval: Interval) -> Result<f64> {
    let a = shifted_diagonal(params, interval);
    let n = a.len();
    if n < 20 {
        return Err(Error::InvalidInput("box too small for a decay fit".into()));
    }
    let den = logdet(&a);
    if den.0 == 0 {
        return Err(Error::SingularBox {
            x1: interval.x1,
            x2: interval.x2,
        });
    }
    // suffix[j] = ln |det of a[j..]|, built by the backward recurrence.
    let mut suffix = vec![(0i8, 0.0f64); n + 1];
    {
        let (mut prev, mut cur) = (0.0f64, 1.0f64);
        let mut log_scale = 0.0;
        suffix[n] = (1, 0.0);
        for j in (0..n).rev() {
            let next = a[j] * cur - prev;
            prev = cur;
            cur = next;
            let m = cur.abs().max(prev.abs());
            if m != 0.0 && !(1e-30..=1e30).contains(&m) {
                cur /= m;
                prev /= m;
                log_scale += m.ln();
            }
            suffix[j] = if cur == 0.0 {
                (0, f64::NEG_INFINITY)
            } else {
                (cur.signum() as i8, cur.abs().ln() + log_scale)
            };
        }
    }
    let lo = n / 10;
    let hi = n - n / 10;
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for off in lo..hi {
        let (s, l) = suffix[off + 1];
        if s == 0 {
            continue;
        }
        let x = off as f64;
        let v = l - den.1;
        sx += x;
        sy += v;
        sxx += x * x;
        sxy += x * v;
        m += 1.0;
    }
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    Ok(-slope)
}

/// Settings for [`classify_regular_with`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityConfig {
    /// Windows below this size are labelled pre-asymptotic.
    pub min_k: usize,
    /// Skip a box when ln|P_k| falls this far below the larger numerator.
    pub skip_log_gap: f64,
    /// Skip a box whose estimated relative determinant error exceeds this.
    pub max_rel_error: f64,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        RegularityConfig {
            min_k: 50,
            skip_log_gap: 30.0,
            max_rel_error: 1e-6,
        }
    }
}

/// Outcome of the (t, k)-regularity scan for one site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityVerdict {
    pub y: i64,
    pub t: f64,
    pub k: usize,
    pub regular: bool,
    pub witness_box: Option<Interval>,
    /// −(t|y − x_i| + ln|G(y, x_i)|) for the witness, or for the best
    /// candidate when no box qualifies. Positive means the bound holds.
    pub margins: [f64; 2],
    pub pre_asymptotic: bool,
    pub skipped: Vec<Interval>,
    pub scanned: usize,
}

/// Smallest admissible distance from y to either end of a size-k window.
pub fn min_edge_distance(k: usize) -> usize {
    k.div_ceil(5)
}

pub fn classify_regular(params: &ModelParams, y: i64, t: f64, k: usize) -> Result<RegularityVerdict> {
    classify_regular_with(params, y, t, k, None, &RegularityConfig::default())
}

/// Scans size-k boxes [x1, x1+k−1] containing y with both ends at least
/// ⌈k/5⌉ away, smallest x1 first. `search` restricts the x1 values.
pub fn classify_regular_with(
    params: &ModelParams,
    y: i64,
    t: f64,
    k: usize,
    search: Option<RangeInclusive<i64>>,
    config: &RegularityConfig,
) -> Result<RegularityVerdict> {
    if k < 5 {
        return Err(Error::InvalidInput(format!("window size {k} below 5")));
    }
    let c = min_edge_distance(k) as i64;
    let kk = k as i64;
    let mut first = y - (kk - 1 - c);
    let mut last = y - c;
    if let Some(r) = search {
        first = first.max(*r.start());
        last = last.min(*r.end());
    }
    let span = Interval {
        x1: y - kk + 1,
        x2: y + kk - 1,
    };
    let a = shifted_diagonal(params, span);
    let mut verdict = RegularityVerdict {
        y,
        t,
        k,
        regular: false,
        witness_box: None,
        margins: [f64::NEG_INFINITY; 2],
        pre_asymptotic: k < config.min_k,
        skipped: Vec::new(),
        scanned: 0,
    };
    let mut best = f64::NEG_INFINITY;
    for x1 in first..=last {
        let b = Interval::sized(x1, k);
        let off = (x1 - span.x1) as usize;
        verdict.scanned += 1;
        let g = match green_from_diagonal(&a[off..off + k], b, y, params.energy) {
            Ok(g) => g,
            Err(_) => {
                verdict.skipped.push(b);
                continue;
            }
        };
        let num_max = (g.left.log_abs + g.log_den).max(g.right.log_abs + g.log_den);
        if g.log_den < num_max - config.skip_log_gap
            || g.log_rel_error > config.max_rel_error.ln()
        {
            verdict.skipped.push(b);
            continue;
        }
        let m = [
            -(t * (y - b.x1) as f64 + g.left.log_abs),
            -(t * (b.x2 - y) as f64 + g.right.log_abs),
        ];
        if m[0] > 0.0 && m[1] > 0.0 {
            verdict.regular = true;
            verdict.witness_box = Some(b);
            verdict.margins = m;
            return Ok(verdict);
        }
        if m[0].min(m[1]) > best {
            best = m[0].min(m[1]);
            verdict.margins = m;
        }
    }
    Ok(verdict)
}

/// |φ(x) + G(x1, x) φ(x1 − 1) + G(x, x2) φ(x2 + 1)| for a function φ given on
/// `superbox`. For an eigenvector of the superbox at `params.energy` this
/// vanishes up to rounding.
pub fn block_expand(
    params: &ModelParams,
    superbox: Interval,
    phi: &[f64],
    x: i64,
    interval: Interval,
) -> Result<f64> {
    if phi.len() != superbox.len() {
        return Err(Error::InvalidInput("phi table does not match the superbox".into()));
    }
    if !interval.contains(x) {
        return Err(Error::InvalidInput(format!("site {x} outside the box")));
    }
    if interval.x1 - 1 < superbox.x1 || interval.x2 + 1 > superbox.x2 {
        return Err(Error::InvalidInput(
            "box and its outer neighbours must lie in the superbox".into(),
        ));
    }
    let at = |s: i64| phi[(s - superbox.x1) as usize];
    let g = green_cramer(params, interval, x)?;
    let term = |gv: LogValue, p: f64| {
        if gv.sign == 0 || p == 0.0 {
            0.0
        } else {
            gv.sign as f64 * p.signum() * (gv.log_abs + p.abs().ln()).exp()
        }
    };
    let s = at(x) + term(g.left, at(interval.x1 - 1)) + term(g.right, at(interval.x2 + 1));
    Ok(s.abs())
}

/// [`block_expand`] for a fixed-point eigenpair, evaluated in the pair's
/// precision. Returns the residual relative to ‖φ‖∞.
pub fn block_expand_refined(pair: &RefinedEigenpair, x: i64, interval: Interval) -> Result<f64> {
    let superbox = pair.interval;
    if !interval.contains(x) {
        return Err(Error::InvalidInput(format!("site {x} outside the box")));
    }
    if interval.x1 - 1 < superbox.x1 || interval.x2 + 1 > superbox.x2 {
        return Err(Error::InvalidInput(
            "box and its outer neighbours must lie in the superbox".into(),
        ));
    }
    let f = pair.fixed();
    let idx = |s: i64| (s - superbox.x1) as usize;
    let det = |lo: i64, hi: i64| {
        let (mut prev, mut cur) = (BigInt::zero(), f.one());
        for s in lo..=hi {
            let next = f.mul(&(&pair.potential[idx(s)] - &pair.energy), &cur) - &prev;
            prev = std::mem::replace(&mut cur, next);
        }
        cur
    };
    let den = det(interval.x1, interval.x2);
    if den.is_zero() {
        return Err(Error::SingularBox {
            x1: interval.x1,
            x2: interval.x2,
        });
    }
    let signed = |v: BigInt, n: i64| if n.rem_euclid(2) == 0 { v } else { -v };
    let left = signed(
        f.mul(&det(x + 1, interval.x2), &pair.vector[idx(interval.x1 - 1)]),
        x - interval.x1,
    );
    let right = signed(
        f.mul(&det(interval.x1, x - 1), &pair.vector[idx(interval.x2 + 1)]),
        interval.x2 - x,
    );
    let s = &pair.vector[idx(x)] + f.div(&(left + right), &den);
    let norm = pair.vector.iter().map(|v| v.abs()).max().unwrap_or_default();
    Ok(f.decode(&s.abs()) / f.decode(&norm))
}

/// How [`iterate_expansion`] picks box sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Window {
    Fixed(usize),
    /// Sizes from the resonance structure of the distance to `center`.
    Scaled { center: i64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRule {
    pub t: f64,
    pub window: Window,
    /// Sites that may be expanded; anything outside is a terminal.
    pub region: Interval,
    /// Expansions allowed after the first box along any chain.
    pub max_steps: usize,
}

/// One box used in the expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionStep {
    pub site: i64,
    #[serde(rename = "box")]
    pub interval: Interval,
    pub log_g_left: f64,
    pub log_g_right: f64,
    pub step_log_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTrace {
    pub target: i64,
    pub steps: Vec<ExpansionStep>,
    /// Bound on ln|φ(target)| with terminals bounded by ln‖φ‖∞.
    pub certified_log_bound: f64,
    /// Same chain with terminals replaced by their actual |φ|.
    pub achieved_log_bound: f64,
    pub actual_log_abs: f64,
    pub blocked_site: Option<i64>,
    /// Largest ln|G(z, x_i)| / |z − x_i| over all boxes used.
    pub per_step_rate: f64,
}

impl ExpansionTrace {
    pub fn is_blocked(&self) -> bool {
        self.blocked_site.is_some()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }
}

struct Expander<'a> {
    params: &'a ModelParams,
    superbox: Interval,
    log_phi: &'a [f64],
    log_phi_max: f64,
    rule: &'a ExpansionRule,
    boxes: HashMap<i64, Option<ExpansionStep>>,
    memo: HashMap<(i64, usize), (f64, f64)>,
    order: Vec<i64>,
    blocked: Option<i64>,
}

impl Expander<'_> {
    fn log_phi_at(&self, z: i64) -> f64 {
        if self.superbox.contains(z) {
            self.log_phi[(z - self.superbox.x1) as usize]
        } else {
            f64::NEG_INFINITY
        }
    }

    fn terminal(&self, z: i64) -> (f64, f64) {
        if !self.superbox.contains(z) {
            // Dirichlet truncation: φ vanishes outside the superbox.
            return (f64::NEG_INFINITY, f64::NEG_INFINITY);
        }
        (self.log_phi_max, self.log_phi_at(z))
    }

    fn window(&self, z: i64) -> Option<usize> {
        match &self.rule.window {
            Window::Fixed(k) => Some(*k),
            Window::Scaled { center } => scale_window(&self.params.alpha, (z - center).unsigned_abs()),
        }
    }

    fn step_for(&mut self, z: i64) -> Result<Option<ExpansionStep>> {
        if let Some(s) = self.boxes.get(&z) {
            return Ok(s.clone());
        }
        let step = match self.window(z) {
            None => None,
            Some(k) => {
                let c = min_edge_distance(k) as i64;
                let kk = k as i64;
                let lo = (self.superbox.x1 + 1).max(z - (kk - 1 - c));
                let hi = (self.superbox.x2 - kk).min(z - c);
                if lo > hi {
                    None
                } else {
                    let v = classify_regular_with(
                        self.params,
                        z,
                        self.rule.t,
                        k,
                        Some(lo..=hi),
                        &RegularityConfig::default(),
                    )?;
                    match v.witness_box {
                        Some(b) if v.regular => {
                            let g = green_cramer(self.params, b, z)?;
                            Some(ExpansionStep {
                                site: z,
                                interval: b,
                                log_g_left: g.left.log_abs,
                                log_g_right: g.right.log_abs,
                                step_log_bound: g.left.log_abs.max(g.right.log_abs),
                            })
                        }
                        _ => None,
                    }
                }
            }
        };
        if step.is_some() {
            self.order.push(z);
        } else if self.blocked.is_none() {
            self.blocked = Some(z);
        }
        self.boxes.insert(z, step.clone());
        Ok(step)
    }

    fn bound(&mut self, z: i64, remaining: Option<usize>) -> Result<(f64, f64)> {
        let Some(depth) = remaining else {
            return Ok(self.terminal(z));
        };
        if !self.rule.region.contains(z) {
            return Ok(self.terminal(z));
        }
        if let Some(v) = self.memo.get(&(z, depth)) {
            return Ok(*v);
        }
        let Some(step) = self.step_for(z)? else {
            return Ok(self.terminal(z));
        };
        let next = depth.checked_sub(1);
        let l = self.bound(step.interval.x1 - 1, next)?;
        let r = self.bound(step.interval.x2 + 1, next)?;
        let v = (
            crate::numeric::log_add_exp(step.log_g_left + l.0, step.log_g_right + r.0),
            crate::numeric::log_add_exp(step.log_g_left + l.1, step.log_g_right + r.1),
        );
        self.memo.insert((z, depth), v);
        Ok(v)
    }
}

/// Chains the block expansion from `target` through regular boxes until the
/// chain leaves `rule.region` or exhausts `rule.max_steps`.
///
/// `params.energy` must be the eigenvalue of `phi` on `superbox`;
/// `log_phi` holds ln|φ| per superbox site.
pub fn iterate_expansion(
    params: &ModelParams,
    superbox: Interval,
    log_phi: &[f64],
    target: i64,
    rule: &ExpansionRule,
) -> Result<ExpansionTrace> {
    if log_phi.len() != superbox.len() {
        return Err(Error::InvalidInput("phi table does not match the superbox".into()));
    }
    if !superbox.contains(target) {
        return Err(Error::InvalidInput(format!("target {target} outside the superbox")));
    }
    let log_phi_max = log_phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut ex = Expander {
        params,
        superbox,
        log_phi,
        log_phi_max,
        rule,
        boxes: HashMap::new(),
        memo: HashMap::new(),
        order: Vec::new(),
        blocked: None,
    };
    let (certified, achieved) = ex.bound(target, Some(rule.max_steps))?;
    let steps: Vec<ExpansionStep> = ex
        .order
        .iter()
        .filter_map(|z| ex.boxes.get(z).cloned().flatten())
        .collect();
    let per_step_rate = steps
        .iter()
        .map(|s| {
            let dl = (s.site - s.interval.x1).max(1) as f64;
            let dr = (s.interval.x2 - s.site).max(1) as f64;
            (s.log_g_left / dl).max(s.log_g_right / dr)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ExpansionTrace {
        target,
        steps,
        certified_log_bound: certified,
        achieved_log_bound: achieved,
        actual_log_abs: ex.log_phi_at(target),
        blocked_site: ex.blocked,
        per_step_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::FrequencySpec;

    fn params(lambda: f64, energy: f64) -> ModelParams {
        ModelParams::new(lambda, FrequencySpec::golden(), 0.31, energy).unwrap()
    }

    #[test]
    fn free_two_site_box() {
        let p = params(0.0, 0.0);
        let g = green_cramer(&p, Interval::new(0, 1).unwrap(), 0).unwrap();
        assert!((g.left.value() - 0.0).abs() < 1e-15 || g.left.sign == 0);
        assert!((g.right.value().abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_site() {
        let p = params(3.0, 0.5);
        let g = green_cramer(&p, Interval::new(4, 4).unwrap(), 4).unwrap();
        let expect = 1.0 / (p.potential(4) - 0.5);
        assert!((g.left.value() - expect).abs() < 1e-14 * expect.abs());
        assert!((g.right.value() - expect).abs() < 1e-14 * expect.abs());
    }

    #[test]
    fn cramer_matches_direct_on_ten_sites() {
        let p = params(3.0, 0.5);
        let b = Interval::new(0, 9).unwrap();
        let g = green_cramer(&p, b, 4).unwrap();
        let d = green_direct(&p, b).unwrap();
        assert!((g.left.value() - d.get(0, 4)).abs() <= 1e-8 * d.get(0, 4).abs());
        assert!((g.right.value() - d.get(4, 9)).abs() <= 1e-8 * d.get(4, 9).abs());
        let e = green_entry(&p, b, 3, 6).unwrap();
        assert!((e.value() - d.get(3, 6)).abs() <= 1e-8 * d.get(3, 6).abs());
    }

    #[test]
    fn regular_with_negative_rate() {
        let p = params(3.0, 0.5);
        let v = classify_regular(&p, 100, -1.0, 60).unwrap();
        assert!(v.regular);
        let b = v.witness_box.unwrap();
        assert!(b.contains(100) && b.len() == 60);
    }

    #[test]
    fn not_regular_at_excessive_rate() {
        let p = params(3.0, 0.5);
        let v = classify_regular(&p, 100, 10.0 * 3f64.ln(), 60).unwrap();
        assert!(!v.regular);
        assert!(v.margins[0].min(v.margins[1]) < 0.0);
    }

    #[test]
    fn zero_phi_has_zero_residual() {
        let p = params(3.0, 0.5);
        let sb = Interval::new(0, 49).unwrap();
        let r = block_expand(&p, sb, &[0.0; 50], 20, Interval::new(10, 30).unwrap()).unwrap();
        assert_eq!(r, 0.0);
    }
}
