// SPDX-License-Identifier: Apache-2.0

// Independent reference computations for the integration tests. Nothing
// here calls into the library's analytic code.

#![allow(dead_code)]

/// Exact collision probability among `x` uniform draws from `r` values:
/// `1 - prod_{i=1}^{x-1} (1 - i/r)`, accumulated in log space.
pub fn exact_birthday(r: f64, x: u64) -> f64 {
    let mut log_none = 0.0f64;
    for i in 1..x {
        log_none += (-(i as f64) / r).ln_1p();
    }
    -log_none.exp_m1()
}

/// Expected fill of a filter holding `n` uniformly placed `k`-bit
/// identifiers, by summing the per-bit miss probability directly.
pub fn fill_by_counting(m: usize, k: usize, n: usize) -> f64 {
    let miss_one = 1.0 - k as f64 / m as f64;
    1.0 - miss_one.powi(n as i32)
}

/// Binomial standard deviation of a rate estimated over `n` trials.
pub fn rate_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// `|observed - expected|` in units of the binomial sigma.
pub fn z_score(successes: u64, n: u64, p: f64) -> f64 {
    (successes as f64 / n as f64 - p).abs() / rate_sigma(p, n)
}

/// `C(n, j)` as a float.
pub fn choose(n: u64, j: u64) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
