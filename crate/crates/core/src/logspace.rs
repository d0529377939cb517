//! Log-domain arithmetic.
//!
//! Every reduction here sorts its operands first, so two inputs holding the
//! same multiset of values produce bit-identical results regardless of the
//! order the caller supplied them in. The decoders rely on this to see exact
//! ties where the underlying likelihoods are mathematically equal.

/// `ln(e^a + e^b)`, symmetric in its arguments.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum_i e^{x_i})`. Reorders `xs`.
pub fn log_sum_exp(xs: &mut [f64]) -> f64 {
    match xs.len() {
        0 => return f64::NEG_INFINITY,
        1 => return xs[0],
        2 => return log_add(xs[0], xs[1]),
        _ => {}
    }
    xs.sort_unstable_by(|a, b| b.total_cmp(a));
    let max = xs[0];
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + s.ln()
}

/// Order-independent sum. Reorders `xs`.
pub fn canonical_sum(xs: &mut [f64]) -> f64 {
    xs.sort_unstable_by(|a, b| a.total_cmp(b));
    xs.iter().sum()
}
