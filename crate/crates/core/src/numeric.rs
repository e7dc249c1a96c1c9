use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

const LN_2: f64 = std::f64::consts::LN_2;

/// Natural log of a positive big integer, accurate to a few ulps.
pub(crate) fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).ln() + shift as f64 * LN_2
}

/// `num / den` as f64 for `0 <= num < den`.
pub(crate) fn unit_ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let scaled: BigUint = (num << 64u32) / den;
    let hi = scaled.to_u128().unwrap_or(u128::MAX);
    hi as f64 / 18_446_744_073_709_551_616.0
}

/// `log(exp(a) + exp(b))` without overflow.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}
