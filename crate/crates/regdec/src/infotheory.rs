//! Scalar information-theoretic kernel.
//!
//! Everything here works in nats and is a pure function of its arguments.
//! Divergences return `f64::INFINITY` for degenerate argument pairs instead
//! of erroring: an infinite code length simply loses every comparison.
//! The convention `0 * ln 0 = 0` applies throughout.

use crate::Error;
use statrs::function::gamma::ln_gamma;

/// `x * ln x` with the continuity convention at zero.
#[inline]
pub(crate) fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Binary (Bernoulli) entropy `H(p)` in nats.
pub fn binary_entropy(p: f64) -> Result<f64, Error> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0,1]")));
    }
    Ok(binary_entropy_unchecked(p))
}

#[inline]
pub(crate) fn binary_entropy_unchecked(p: f64) -> f64 {
    -xlnx(p) - xlnx(1.0 - p)
}

/// Entropy of a partition with the given block sizes:
/// `-sum (s_i/n) ln(s_i/n)`.
pub fn partition_entropy(block_sizes: &[usize]) -> Result<f64, Error> {
    if block_sizes.is_empty() {
        return Err(Error::domain("partition entropy of an empty sequence"));
    }
    if block_sizes.iter().any(|&s| s == 0) {
        return Err(Error::domain("partition entropy with an empty block"));
    }
    let n: usize = block_sizes.iter().sum();
    let n = n as f64;
    Ok(-block_sizes.iter().map(|&s| xlnx(s as f64 / n)).sum::<f64>())
}

/// Kullback-Leibler divergence `I(q:p)` of Bernoulli(q) from Bernoulli(p).
///
/// Returns `+inf` when `q > 0, p = 0` or `q < 1, p = 1`.
pub fn bernoulli_kl(q: f64, p: f64) -> Result<f64, Error> {
    if !(0.0..=1.0).contains(&q) || !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probabilities ({q}, {p}) outside [0,1]")));
    }
    Ok(bernoulli_kl_unchecked(q, p))
}

#[inline]
pub(crate) fn bernoulli_kl_unchecked(q: f64, p: f64) -> f64 {
    let mut d = 0.0;
    if q > 0.0 {
        if p == 0.0 {
            return f64::INFINITY;
        }
        d += q * (q / p).ln();
    }
    if q < 1.0 {
        if p == 1.0 {
            return f64::INFINITY;
        }
        d += (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln();
    }
    // Rounding can produce tiny negative values when q is very close to p.
    d.max(0.0)
}

/// Entropy of the Poisson(a) distribution,
/// `H_P(a) = a - a ln a + e^{-a} sum_k (a^k/k!) ln k!`.
///
/// The series is summed until the additive term falls below
/// `1e-15 * (partial + 1)` and `k > a + 10 sqrt(a+1)`; the Poisson tail
/// bound makes the remainder negligible at that point. Weights are kept in
/// log domain so large rates do not underflow.
pub fn poisson_entropy(a: f64) -> Result<f64, Error> {
    if a < 0.0 || !a.is_finite() {
        return Err(Error::domain(format!("negative or non-finite rate {a}")));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let ln_a = a.ln();
    let cutoff = a + 10.0 * (a + 1.0).sqrt();
    let mut series = 0.0;
    let mut k = 2usize; // ln 0! = ln 1! = 0
    loop {
        let kf = k as f64;
        let ln_fact = ln_gamma(kf + 1.0);
        let ln_weight = kf * ln_a - ln_fact - a;
        let term = ln_weight.exp() * ln_fact;
        series += term;
        if kf > cutoff && term < 1e-15 * (series + 1.0) {
            break;
        }
        k += 1;
    }
    Ok(a - a * ln_a + series)
}

/// Kullback-Leibler divergence `I_P(b:a)` of Poisson(b) from Poisson(a):
/// `a - b + b ln b - b ln a`. Returns `+inf` when `a = 0, b > 0`.
pub fn poisson_kl(b: f64, a: f64) -> Result<f64, Error> {
    if b < 0.0 || a < 0.0 {
        return Err(Error::domain(format!("negative rate in ({b}, {a})")));
    }
    Ok(poisson_kl_unchecked(b, a))
}

#[inline]
pub(crate) fn poisson_kl_unchecked(b: f64, a: f64) -> f64 {
    if b == 0.0 {
        return a;
    }
    if a == 0.0 {
        return f64::INFINITY;
    }
    (a - b + b * b.ln() - b * a.ln()).max(0.0)
}

/// Rissanen's universal code length for a positive integer, in nats:
/// the sum of the iterated positive natural logarithms of `m`.
pub fn log_star(m: u64) -> Result<f64, Error> {
    if m < 1 {
        return Err(Error::domain("log_star argument must be >= 1"));
    }
    Ok(log_star_from_ln((m as f64).ln()))
}

/// Log-domain variant of [`log_star`]: starts the iteration from
/// `y = ln m`, for integers far beyond `f64` range.
pub fn log_star_ln(y: f64) -> Result<f64, Error> {
    if y < 0.0 || !y.is_finite() {
        return Err(Error::domain(format!("ln m = {y} must be finite and >= 0")));
    }
    Ok(log_star_from_ln(y))
}

fn log_star_from_ln(mut t: f64) -> f64 {
    let mut sum = 0.0;
    while t > 0.0 {
        sum += t;
        t = t.ln();
    }
    sum
}

/// Rate function of the Hypergeometric(n, m, z) distribution at `x`:
/// `m I(x/m : z/n) + (n-m) I((z-x)/(n-m) : z/n)`.
pub fn hypergeometric_rate(n: u64, m: u64, z: u64, x: f64) -> Result<f64, Error> {
    if m == 0 || m >= n {
        return Err(Error::domain(format!("need 0 < m < n, got m={m}, n={n}")));
    }
    if z > n {
        return Err(Error::domain(format!("need z <= n, got z={z}, n={n}")));
    }
    let (nf, mf, zf) = (n as f64, m as f64, z as f64);
    if x < 0.0 || x > mf.min(zf) || zf - x > nf - mf {
        return Err(Error::domain(format!(
            "x={x} infeasible for (n={n}, m={m}, z={z})"
        )));
    }
    let p = zf / nf;
    Ok(mf * bernoulli_kl_unchecked(x / mf, p)
        + (nf - mf) * bernoulli_kl_unchecked((zf - x) / (nf - mf), p))
}

/// The three algebraically equal forms of the binomial information split
/// for independent Bin(n1, p) and Bin(n2, p) observations (x1, x2).
///
/// Returned in the order: the p-referenced form, the conditional
/// (hypergeometric) form in `n1/n`, and the pooled-mean form. Their
/// equality is a direct test target.
pub fn binomial_information_split(
    n1: u64,
    n2: u64,
    x1: u64,
    x2: u64,
    p: f64,
) -> Result<(f64, f64, f64), Error> {
    if n1 == 0 || n2 == 0 || x1 > n1 || x2 > n2 {
        return Err(Error::domain(format!(
            "infeasible counts (n1={n1}, n2={n2}, x1={x1}, x2={x2})"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p={p} must lie in (0,1)")));
    }
    let n = n1 + n2;
    let x12 = x1 + x2;
    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let (x1f, x12f) = (x1 as f64, x12 as f64);

    let form0 = n1f * bernoulli_kl_unchecked(x1f / n1f, p)
        + n2f * bernoulli_kl_unchecked(x2 as f64 / n2f, p)
        - nf * bernoulli_kl_unchecked(x12f / nf, p);

    let q = n1f / nf;
    let first = if x12 == 0 {
        0.0
    } else {
        x12f * bernoulli_kl_unchecked(x1f / x12f, q)
    };
    let second = if x12 == n {
        0.0
    } else {
        (nf - x12f) * bernoulli_kl_unchecked((n1f - x1f) / (nf - x12f), q)
    };
    let form1 = first + second;

    let pooled = x12f / nf;
    let form2 = n1f * bernoulli_kl_unchecked(x1f / n1f, pooled)
        + n2f * bernoulli_kl_unchecked((x12f - x1f) / n2f, pooled);

    Ok((form0, form1, form2))
}

/// Concavity gap of the binary entropy: how far the tangent of `H` at
/// `p` overshoots `H(q)`. Equals `I(q:p)` by the first-order identity
/// (integrating `H'' = -I''` twice from `p`).
pub fn entropy_gap(q: f64, p: f64) -> Result<f64, Error> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("q={q} outside [0,1]")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p={p} must lie in (0,1): H' undefined")));
    }
    let h_prime = ((1.0 - p) / p).ln();
    Ok(binary_entropy_unchecked(p) + h_prime * (q - p) - binary_entropy_unchecked(q))
}
