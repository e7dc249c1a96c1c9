//! Continued-fraction arithmetic for the frequency α.
//!
//! α ∈ (0, 1) is stored as its coefficient list `[0; a1, a2, ...]`. Every
//! quantity downstream (p_n, q_n, Δ_n, nα mod 1) is computed exactly from a
//! materialized prefix; floating point only appears at the last step.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{ln_big, unit_ratio_to_f64};

/// Extra coefficients beyond the requested depth used to enclose Δ_n.
pub const GUARD: usize = 2;

/// Default cap on the bit size of a single generated coefficient.
pub const DEFAULT_BIT_CAP: u64 = 1_000_000;

/// Default certification factor for [`reduce_mod_1`].
pub const DEFAULT_CERT_FACTOR: f64 = 1e6;

const QUADRATIC_DEPTH: usize = 96;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyKind {
    Explicit,
    Golden,
    Silver,
    Liouville,
}

/// Generator for Liouville-type coefficients.
///
/// Spike coefficients follow `a_{n+1} = max(1, ceil(e^{β q_n} / q_n))`. With
/// `gap = 0` every coefficient after `a1` is a spike. A positive gap inserts
/// that many unit coefficients between spikes, which keeps the sequence
/// materializable for more than a handful of steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleRule {
    pub target_beta: f64,
    pub seed: u64,
    pub gap: usize,
    pub bit_cap: u64,
}

impl LiouvilleRule {
    pub fn new(target_beta: f64) -> Self {
        LiouvilleRule {
            target_beta,
            seed: 1,
            gap: 0,
            bit_cap: DEFAULT_BIT_CAP,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_gap(mut self, gap: usize) -> Self {
        self.gap = gap;
        self
    }

    /// Whether `a_{n+1}` is a spike (n is 1-based).
    pub fn is_spike(&self, n: usize) -> bool {
        n >= 1 && (n - 1).is_multiple_of(self.gap + 1)
    }

    /// Approximate bit length of the spike coefficient following `q`.
    pub fn spike_bits(&self, q: &BigUint) -> f64 {
        let qf = q.to_f64().unwrap_or(f64::INFINITY);
        (self.target_beta * qf - ln_big(q)) / std::f64::consts::LN_2
    }

    /// `max(1, ceil(e^{β q} / q))` evaluated exactly up to the 53-bit
    /// mantissa of `e^{β q}`.
    fn spike(&self, q: &BigUint) -> BigUint {
        let qf = q.to_f64().unwrap_or(f64::INFINITY);
        let t = self.target_beta * qf / std::f64::consts::LN_2;
        let int_part = t.floor();
        let frac = t - int_part;
        let mantissa = BigUint::from((frac.exp2() * 4_503_599_627_370_496.0).round() as u64);
        let int_part = int_part as i64;
        let a = if int_part >= 52 {
            let num = mantissa << (int_part - 52) as u64;
            num.div_ceil(q)
        } else {
            let den = q << (52 - int_part) as u64;
            mantissa.div_ceil(&den)
        };
        if a.is_zero() {
            BigUint::one()
        } else {
            a
        }
    }
}

/// An irrational α ∈ (0,1) given by continued-fraction coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencySpec {
    pub kind: FrequencyKind,
    #[serde(
        serialize_with = "serialize_coefficients",
        deserialize_with = "deserialize_coefficients"
    )]
    coefficients: Vec<BigUint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<LiouvilleRule>,
}

impl FrequencySpec {
    /// Fixed coefficient list. Every entry must be at least 1.
    pub fn explicit<I, T>(coefficients: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<BigUint>,
    {
        let coefficients: Vec<BigUint> = coefficients.into_iter().map(Into::into).collect();
        if coefficients.is_empty() {
            return Err(Error::InvalidInput("empty coefficient list".into()));
        }
        if coefficients.iter().any(|a| a.is_zero()) {
            return Err(Error::InvalidInput("coefficients must be >= 1".into()));
        }
        Ok(FrequencySpec {
            kind: FrequencyKind::Explicit,
            coefficients,
            target_beta: None,
            rule: None,
        })
    }

    /// (√5 − 1)/2 = [0; 1, 1, 1, ...].
    pub fn golden() -> Self {
        FrequencySpec {
            kind: FrequencyKind::Golden,
            coefficients: vec![BigUint::one(); QUADRATIC_DEPTH],
            target_beta: None,
            rule: None,
        }
    }

    /// √2 − 1 = [0; 2, 2, 2, ...].
    pub fn silver() -> Self {
        FrequencySpec {
            kind: FrequencyKind::Silver,
            coefficients: vec![BigUint::from(2u32); QUADRATIC_DEPTH],
            target_beta: None,
            rule: None,
        }
    }

    /// Liouville frequency with no coefficients materialized beyond `a1`.
    pub fn liouville(rule: LiouvilleRule) -> Result<Self> {
        if rule.target_beta.is_nan() || rule.target_beta <= 0.0 || rule.target_beta.is_infinite() {
            return Err(Error::InvalidInput(format!(
                "target beta must be positive, got {}",
                rule.target_beta
            )));
        }
        if rule.seed == 0 {
            return Err(Error::InvalidInput("liouville seed must be >= 1".into()));
        }
        Ok(FrequencySpec {
            kind: FrequencyKind::Liouville,
            coefficients: vec![BigUint::from(rule.seed)],
            target_beta: Some(rule.target_beta),
            rule: Some(rule),
        })
    }

    pub fn coefficients(&self) -> &[BigUint] {
        &self.coefficients
    }

    pub fn generated_depth(&self) -> usize {
        self.coefficients.len()
    }

    /// Whether more coefficients can be produced on demand.
    pub fn is_generative(&self) -> bool {
        self.kind != FrequencyKind::Explicit
    }

    /// Extends the materialized prefix to at least `depth` coefficients.
    /// Existing coefficients are never changed.
    pub fn materialize(&mut self, depth: usize) -> Result<()> {
        while self.coefficients.len() < depth {
            let next = match self.kind {
                FrequencyKind::Explicit => {
                    return Err(Error::InsufficientDepth {
                        requested: depth,
                        available: self.coefficients.len(),
                    })
                }
                FrequencyKind::Golden => BigUint::one(),
                FrequencyKind::Silver => BigUint::from(2u32),
                FrequencyKind::Liouville => self.next_liouville(depth)?,
            };
            self.coefficients.push(next);
        }
        Ok(())
    }

    fn next_liouville(&self, requested: usize) -> Result<BigUint> {
        let rule = self.rule.as_ref().expect("liouville spec carries its rule");
        let n = self.coefficients.len();
        if !rule.is_spike(n) {
            return Ok(BigUint::one());
        }
        let q = self.denominators(n).pop().unwrap_or_else(BigUint::one);
        if rule.spike_bits(&q) > rule.bit_cap as f64 {
            return Err(Error::DepthCapExceeded {
                requested,
                achievable: n,
                bit_cap: rule.bit_cap,
            });
        }
        Ok(rule.spike(&q))
    }

    /// Largest depth reachable under the coefficient bit cap, probing up to
    /// `limit`. Explicit and quadratic specs report their own bound.
    pub fn achievable_depth(&self, limit: usize) -> usize {
        let mut probe = self.clone();
        match probe.materialize(limit) {
            Ok(()) => limit,
            Err(_) => probe.generated_depth(),
        }
    }

    /// Denominators q_1..q_n.
    pub fn denominators(&self, n: usize) -> Vec<BigUint> {
        let mut out = Vec::with_capacity(n);
        let (mut prev, mut cur) = (BigUint::zero(), BigUint::one());
        for a in self.coefficients.iter().take(n) {
            let next = a * &cur + &prev;
            prev = std::mem::replace(&mut cur, next);
            out.push(cur.clone());
        }
        out
    }

    /// (p_n, q_n) for n = 0..=depth, with p_0 = 0, q_0 = 1.
    pub(crate) fn pq_table(&self, depth: usize) -> Vec<(BigUint, BigUint)> {
        let mut out = Vec::with_capacity(depth + 1);
        let (mut pm, mut qm) = (BigUint::one(), BigUint::zero());
        let (mut p, mut q) = (BigUint::zero(), BigUint::one());
        out.push((p.clone(), q.clone()));
        for a in self.coefficients.iter().take(depth) {
            let pn = a * &p + &pm;
            let qn = a * &q + &qm;
            pm = std::mem::replace(&mut p, pn);
            qm = std::mem::replace(&mut q, qn);
            out.push((p.clone(), q.clone()));
        }
        out
    }

    /// Natural-log upper bound on Δ_n = |q_n α − p_n|.
    ///
    /// Uses q_{n+1} when materialized, the Liouville rule when the next
    /// coefficient is a spike, and 1/(q_n + q_{n−1}) otherwise.
    pub fn ln_delta_upper(&self, n: usize) -> f64 {
        let qs = self.denominators((n + 1).min(self.coefficients.len()));
        if qs.len() > n {
            return -ln_big(&qs[n]);
        }
        let qn = qs.get(n.wrapping_sub(1)).cloned().unwrap_or_else(BigUint::one);
        if let Some(rule) = &self.rule {
            if rule.is_spike(n) {
                let qf = qn.to_f64().unwrap_or(f64::INFINITY);
                return -(rule.target_beta * qf).max(ln_big(&qn));
            }
        }
        let qprev = if n >= 2 { qs[n - 2].clone() } else { BigUint::one() };
        -ln_big(&(qn + qprev))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoefficientRepr {
    Small(u64),
    Big(String),
}

fn serialize_coefficients<S: Serializer>(
    coefficients: &[BigUint],
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    let reprs: Vec<CoefficientRepr> = coefficients
        .iter()
        .map(|a| match a.to_u64() {
            Some(v) => CoefficientRepr::Small(v),
            None => CoefficientRepr::Big(a.to_string()),
        })
        .collect();
    reprs.serialize(serializer)
}

fn deserialize_coefficients<'de, D: Deserializer<'de>>(
    deserializer: D,
) -> std::result::Result<Vec<BigUint>, D::Error> {
    let reprs = Vec::<CoefficientRepr>::deserialize(deserializer)?;
    reprs
        .into_iter()
        .map(|r| match r {
            CoefficientRepr::Small(v) if v >= 1 => Ok(BigUint::from(v)),
            CoefficientRepr::Small(_) => Err(serde::de::Error::custom("coefficient must be >= 1")),
            CoefficientRepr::Big(s) => s
                .parse::<BigUint>()
                .map_err(serde::de::Error::custom)
                .and_then(|v| {
                    if v.is_zero() {
                        Err(serde::de::Error::custom("coefficient must be >= 1"))
                    } else {
                        Ok(v)
                    }
                }),
        })
        .collect()
}

/// Builds a Liouville frequency with the plain spike rule (seed 1, no gap)
/// and materializes `depth` coefficients.
pub fn construct_liouville(target_beta: f64, depth: usize) -> Result<FrequencySpec> {
    construct_liouville_with(LiouvilleRule::new(target_beta), depth)
}

pub fn construct_liouville_with(rule: LiouvilleRule, depth: usize) -> Result<FrequencySpec> {
    if depth < 3 {
        return Err(Error::InvalidInput(format!("depth must be >= 3, got {depth}")));
    }
    let mut spec = FrequencySpec::liouville(rule)?;
    spec.materialize(depth)?;
    Ok(spec)
}

/// The n-th convergent p_n/q_n with Δ_n evaluated against the deepest
/// materialized convergent.
#[derive(Clone, Debug, PartialEq)]
pub struct Convergent {
    pub n: usize,
    pub p: BigUint,
    pub q: BigUint,
    /// |q_n α_N − p_n| for the deepest convergent α_N.
    pub delta: BigRational,
    /// Certified enclosure of Δ_n for the true α.
    pub delta_lo: BigRational,
    pub delta_hi: BigRational,
}

impl Convergent {
    pub fn delta_f64(&self) -> f64 {
        rational_to_f64(&self.delta)
    }

    pub fn delta_lo_f64(&self) -> f64 {
        rational_to_f64(&self.delta_lo)
    }

    pub fn delta_hi_f64(&self) -> f64 {
        rational_to_f64(&self.delta_hi)
    }

    pub fn q_f64(&self) -> f64 {
        self.q.to_f64().unwrap_or(f64::INFINITY)
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    if num.is_zero() {
        return 0.0;
    }
    if num < den {
        let v = unit_ratio_to_f64(num, den);
        if v > 0.0 {
            return v;
        }
        return (ln_big(num) - ln_big(den)).exp();
    }
    r.to_f64().unwrap_or(f64::INFINITY)
}

/// Convergents 1..=depth. Needs `depth + GUARD` materialized coefficients.
pub fn convergents(alpha: &FrequencySpec, depth: usize) -> Result<Vec<Convergent>> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be >= 1".into()));
    }
    let available = alpha.generated_depth();
    if depth + GUARD > available {
        return Err(Error::InsufficientDepth {
            requested: depth + GUARD,
            available,
        });
    }
    let table = alpha.pq_table(available);
    let (pn, qn) = &table[available];
    let (pm, qm) = &table[available - 1];
    let deep = |p: &BigUint, q: &BigUint, pn: &BigUint, qn: &BigUint| {
        let num = BigInt::from(q * pn) - BigInt::from(p * qn);
        BigRational::new_raw(num.magnitude().clone().into(), BigInt::from(qn.clone()))
    };
    Ok((1..=depth)
        .map(|n| {
            let (p, q) = &table[n];
            let delta = deep(p, q, pn, qn);
            let other = deep(p, q, pm, qm);
            let (delta_lo, delta_hi) = if other < delta {
                (other, delta.clone())
            } else {
                (delta.clone(), other)
            };
            Convergent {
                n,
                p: p.clone(),
                q: q.clone(),
                delta,
                delta_lo,
                delta_hi,
            }
        })
        .collect())
}

/// Per-scale values ln(q_{n+1})/q_n and their running sup over tails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    /// Entry `i` is ln(q_{i+2})/q_{i+1}, i.e. scale n = i + 1.
    pub per_n_values: Vec<f64>,
    /// Entry `i` is the max of `per_n_values[i..]`.
    pub running_sup_tail: Vec<f64>,
    pub depth: usize,
}

impl BetaEstimate {
    /// Sup of ln(q_{m+1})/q_m over n ≤ m ≤ depth.
    pub fn proxy_at(&self, n: usize) -> f64 {
        let i = n.clamp(1, self.depth) - 1;
        self.running_sup_tail[i]
    }

    /// Tail sup starting halfway through the computed range.
    pub fn proxy(&self) -> f64 {
        self.running_sup_tail[self.depth.div_ceil(2).min(self.depth - 1)]
    }
}

/// Needs `depth + 1` materialized coefficients.
pub fn estimate_beta(alpha: &FrequencySpec, depth: usize) -> Result<BetaEstimate> {
    if depth < 3 {
        return Err(Error::InvalidInput(format!("depth must be >= 3, got {depth}")));
    }
    if alpha.generated_depth() < depth + 1 {
        return Err(Error::InsufficientDepth {
            requested: depth + 1,
            available: alpha.generated_depth(),
        });
    }
    let qs = alpha.denominators(depth + 1);
    let per_n_values: Vec<f64> = (0..depth)
        .map(|i| ln_big(&qs[i + 1]) / qs[i].to_f64().unwrap_or(f64::INFINITY))
        .collect();
    let mut running_sup_tail = per_n_values.clone();
    for i in (0..depth.saturating_sub(1)).rev() {
        running_sup_tail[i] = running_sup_tail[i].max(running_sup_tail[i + 1]);
    }
    Ok(BetaEstimate {
        per_n_values,
        running_sup_tail,
        depth,
    })
}

/// Index of the largest convergent with q_n ≤ `bound` (0 when q_1 > bound).
pub fn scale_below(alpha: &FrequencySpec, bound: f64) -> usize {
    alpha
        .denominators(alpha.generated_depth())
        .iter()
        .take_while(|q| q.to_f64().unwrap_or(f64::INFINITY) <= bound)
        .count()
}

/// nα mod 1 with a certified error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reduced {
    pub value: f64,
    pub error_bound: f64,
    pub depth: usize,
}

pub fn reduce_mod_1(alpha: &FrequencySpec, n: i64, precision_depth: usize) -> Result<Reduced> {
    reduce_mod_1_with(alpha, n, precision_depth, DEFAULT_CERT_FACTOR)
}

/// As [`reduce_mod_1`] with an explicit certification factor: requires
/// `q_N > factor · |n|`.
pub fn reduce_mod_1_with(
    alpha: &FrequencySpec,
    n: i64,
    precision_depth: usize,
    factor: f64,
) -> Result<Reduced> {
    if n.unsigned_abs() > 1_000_000_000_000 {
        return Err(Error::InvalidInput(format!("|n| = {} exceeds 1e12", n.unsigned_abs())));
    }
    if precision_depth == 0 || precision_depth > alpha.generated_depth() {
        return Err(Error::InsufficientDepth {
            requested: precision_depth.max(1),
            available: alpha.generated_depth(),
        });
    }
    if n == 0 {
        return Ok(Reduced {
            value: 0.0,
            error_bound: 0.0,
            depth: precision_depth,
        });
    }
    let table = alpha.pq_table(precision_depth);
    let (p, q) = &table[precision_depth];
    let qf = q.to_f64().unwrap_or(f64::INFINITY);
    if qf <= factor * n.unsigned_abs() as f64 {
        return Err(Error::PrecisionUnavailable(format!(
            "q_{precision_depth} = {q} does not exceed {factor:e} * |{n}|"
        )));
    }
    let r = (BigUint::from(n.unsigned_abs()) * p) % q;
    let r = if n < 0 && !r.is_zero() { q - r } else { r };
    let value = unit_ratio_to_f64(&r, q);
    let error_bound =
        n.unsigned_abs() as f64 * alpha.ln_delta_upper(precision_depth).exp() + f64::EPSILON;
    Ok(Reduced {
        value: if value >= 1.0 { 0.0 } else { value },
        error_bound,
        depth: precision_depth,
    })
}

/// Fast evaluation of nα mod 1 through a single convergent that fits
/// machine integers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub n: usize,
    pub p: i128,
    pub q: i128,
    ln_delta: f64,
}

const ROTATION_Q_MAX: u64 = 1 << 62;

impl Rotation {
    /// Uses the deepest materialized convergent with q ≤ 2^62.
    pub fn new(alpha: &FrequencySpec) -> Result<Self> {
        let table = alpha.pq_table(alpha.generated_depth());
        let n = table
            .iter()
            .rposition(|(_, q)| q.to_u64().is_some_and(|v| v <= ROTATION_Q_MAX))
            .unwrap_or(0);
        if n == 0 {
            return Err(Error::InsufficientDepth {
                requested: 1,
                available: alpha.generated_depth(),
            });
        }
        let (p, q) = &table[n];
        Ok(Rotation {
            n,
            p: p.to_i128().unwrap_or_default(),
            q: q.to_i128().unwrap_or_default(),
            ln_delta: alpha.ln_delta_upper(n),
        })
    }

    fn residue(&self, n: i64, modulus: i128) -> i128 {
        (n as i128 * self.p).rem_euclid(modulus)
    }

    /// nα mod 1 in [0, 1).
    pub fn frac(&self, n: i64) -> f64 {
        self.residue(n, self.q) as f64 / self.q as f64
    }

    /// Signed distance from nα to the nearest integer, in [−1/2, 1/2].
    pub fn centered(&self, n: i64) -> f64 {
        let r = self.residue(n, self.q);
        let r = if 2 * r > self.q { r - self.q } else { r };
        r as f64 / self.q as f64
    }

    /// nα/2 mod 1 in [0, 1).
    pub fn half_frac(&self, n: i64) -> f64 {
        self.residue(n, 2 * self.q) as f64 / (2 * self.q) as f64
    }

    /// Bound on |frac(n) − (nα mod 1)| from the convergent error.
    pub fn error_bound(&self, n: i64) -> f64 {
        n.unsigned_abs() as f64 * self.ln_delta.exp()
    }

    pub fn ln_delta_upper(&self) -> f64 {
        self.ln_delta
    }
}
