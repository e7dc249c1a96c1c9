//! Independent reference computations used by the test suites. Nothing here
//! shares code with the kernels it checks.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational value of a finite f64.
pub fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

/// Determinant of a dense matrix of f64 entries, evaluated exactly with
/// fraction-free (Bareiss) elimination after scaling to integers.
pub fn exact_det(matrix: &[Vec<f64>]) -> BigRational {
    let n = matrix.len();
    if n == 0 {
        return BigRational::one();
    }
    let entries: Vec<Vec<BigRational>> = matrix
        .iter()
        .map(|row| row.iter().map(|&v| exact(v)).collect())
        .collect();
    let mut den = BigInt::one();
    for row in &entries {
        for v in row {
            den = num_integer::lcm(den, v.denom().clone());
        }
    }
    let mut a: Vec<Vec<BigInt>> = entries
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| (v * BigRational::from_integer(den.clone())).to_integer())
                .collect()
        })
        .collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&r| !a[r][k].is_zero()) else {
                return BigRational::zero();
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let det = &a[n - 1][n - 1] * sign;
    BigRational::new(det, num_traits::pow(den, n))
}

/// Dense matrix of (H − E) on sites given by their potential values.
pub fn dense_shifted(potential: &[f64], energy: f64) -> Vec<Vec<f64>> {
    let n = potential.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        potential[i] - energy
                    } else if i.abs_diff(j) == 1 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Exact ordered product A_{k−1} ⋯ A_0 with A_n = [[E − v_n, −1], [1, 0]].
pub fn exact_transfer(potential: &[f64], energy: f64) -> [[BigRational; 2]; 2] {
    let e = exact(energy);
    let one = BigRational::one;
    let zero = BigRational::zero;
    let mut m = [[one(), zero()], [zero(), one()]];
    for &v in potential {
        let a = &e - exact(v);
        let top = [
            &a * &m[0][0] - &m[1][0],
            &a * &m[0][1] - &m[1][1],
        ];
        m = [top, [m[0][0].clone(), m[0][1].clone()]];
    }
    m
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let num = r.numer().abs().to_biguint().unwrap_or_default();
    let den = r.denom().to_biguint().unwrap_or_default();
    let shift = num.bits() as i64 - den.bits() as i64 - 60;
    let q: BigUint = if shift >= 0 {
        &num / (&den << shift as u64)
    } else {
        (&num << (-shift) as u64) / &den
    };
    let v = q.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(shift as i32);
    if r.is_negative() {
        -v
    } else {
        v
    }
}

/// ln |r| for a nonzero rational, valid far outside the f64 range.
pub fn rational_ln_abs(r: &BigRational) -> f64 {
    let num = r.numer().abs().to_biguint().unwrap_or_default();
    let den = r.denom().to_biguint().unwrap_or_default();
    big_ln(&num) - big_ln(&den)
}

fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 900 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 60;
    (x >> shift).to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Convergent denominators and numerators from the plain recurrence.
pub fn convergent_table(coefficients: &[BigUint]) -> Vec<(BigUint, BigUint)> {
    let (mut pm, mut qm) = (BigUint::one(), BigUint::zero());
    let (mut p, mut q) = (BigUint::zero(), BigUint::one());
    let mut out = vec![(p.clone(), q.clone())];
    for a in coefficients {
        let (pn, qn) = (&p * a + &pm, &q * a + &qm);
        pm = std::mem::replace(&mut p, pn);
        qm = std::mem::replace(&mut q, qn);
        out.push((p.clone(), q.clone()));
    }
    out
}

/// Checks ‖kα_N‖ ≥ |q_n α_N − p_n| for all 1 ≤ k < q_{n+1}, with
/// α_N = p_deep / q_deep, using integer comparisons only.
pub fn best_approximation_holds(
    p_n: &BigUint,
    q_n: &BigUint,
    q_next: u64,
    p_deep: &BigUint,
    q_deep: &BigUint,
) -> bool {
    let delta = (BigInt::from(q_n * p_deep) - BigInt::from(p_n * q_deep))
        .abs()
        .to_biguint()
        .unwrap_or_default();
    let step = p_deep % q_deep;
    let mut r = BigUint::zero();
    for _ in 1..q_next {
        r += &step;
        if &r >= q_deep {
            r -= q_deep;
        }
        let other = q_deep - &r;
        let dist = if r < other { &r } else { &other };
        if *dist < delta {
            return false;
        }
    }
    true
}

/// max over x ∈ [−1,1] and i of Π_{j≠i} |x − c_j| / |c_i − c_j|, by dense
/// sampling with a final ternary polish around the best sample. Returns the
/// natural log of the maximum.
pub fn brute_force_lagrange(nodes: &[f64], samples: usize) -> f64 {
    let product = |i: usize, x: f64| -> f64 {
        let mut p = 1.0f64;
        for (j, c) in nodes.iter().enumerate() {
            if j != i {
                p *= (x - c).abs() / (nodes[i] - c).abs();
            }
        }
        p
    };
    let mut best = (0.0f64, 0.0f64, 0usize);
    for s in 0..=samples {
        let x = -1.0 + 2.0 * s as f64 / samples as f64;
        for i in 0..nodes.len() {
            let v = product(i, x);
            if v > best.0 {
                best = (v, x, i);
            }
        }
    }
    let h = 2.0 / samples as f64;
    let (mut a, mut b) = ((best.1 - h).max(-1.0), (best.1 + h).min(1.0));
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if product(best.2, m1) < product(best.2, m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let polished = product(best.2, 0.5 * (a + b));
    best.0.max(polished).ln()
}
