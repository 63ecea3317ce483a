// SPDX-License-Identifier: Apache-2.0

//! Closed-form attack model.
//!
//! * forwarding check: `p_fw = rho_m^(k*l)`
//! * security check: attempts for a target collision probability,
//!   `x = sqrt(2 r ln(1 / (1 - p_sc)))`, and its inverse
//!   `p_sc = 1 - exp(-x^2 / 2r)`
//! * composite: `p_a = p_sc * p_fw`

use std::ops::RangeInclusive;

use statrs::distribution::{Binomial, DiscreteCDF};

use crate::attack::AnalysisError;
use crate::bloom::{expected_fill, false_positive_prob};

fn check_range(r: f64) -> Result<(), AnalysisError> {
    if r.is_finite() && r >= 2.0 {
        Ok(())
    } else {
        Err(AnalysisError::Domain(format!(
            "hash range r = {r} must be >= 2"
        )))
    }
}

fn check_probability(p: f64, name: &str) -> Result<(), AnalysisError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(AnalysisError::Domain(format!(
            "{name} = {p} must lie in (0, 1)"
        )))
    }
}

/// Unrounded attempt count for collision probability `p_sc` over `r` hashes.
pub fn birthday_attempts_real(r: f64, p_sc: f64) -> Result<f64, AnalysisError> {
    check_range(r)?;
    check_probability(p_sc, "p_sc")?;
    // ln(1 / (1 - p)) = -ln(1 - p)
    Ok((2.0 * r * -(-p_sc).ln_1p()).sqrt())
}

/// Attempts needed for collision probability `p_sc`, rounded up.
pub fn birthday_attempts(r: f64, p_sc: f64) -> Result<u64, AnalysisError> {
    Ok(birthday_attempts_real(r, p_sc)?.ceil() as u64)
}

/// Inverse of the attempt estimate: `1 - exp(-x^2 / 2r)`.
pub fn collision_probability(r: f64, x: f64) -> Result<f64, AnalysisError> {
    check_range(r)?;
    if x.is_nan() || x < 0.0 {
        return Err(AnalysisError::Domain(format!(
            "attempts x = {x} must be >= 0"
        )));
    }
    Ok(-(-(x * x) / (2.0 * r)).exp_m1())
}

/// `p_sc * rho_m^(k*l)`.
pub fn attack_probability(p_sc: f64, rho_m: f64, k: u32, l: u32) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&p_sc) {
        return Err(AnalysisError::Domain(format!(
            "p_sc = {p_sc} must lie in [0, 1]"
        )));
    }
    Ok(p_sc * false_positive_prob(rho_m, k, l)?)
}

/// Probability that a filter whose bits are set independently with
/// probability `rho` covers `required` fixed positions and, when a fill cap
/// is enforced, has at most `cap * m` bits set in total.
pub fn guess_pass_probability(rho: f64, required: usize, m: usize, cap: Option<f64>) -> f64 {
    let covered = rho.powf(required as f64);
    let Some(cap) = cap else {
        return covered;
    };
    let allowed = (cap * m as f64 + 1e-9).floor() as i64 - required as i64;
    if allowed < 0 {
        return 0.0;
    }
    let rest = (m - required) as u64;
    let within = if rho >= 1.0 {
        if allowed as u64 >= rest {
            1.0
        } else {
            0.0
        }
    } else if rho <= 0.0 {
        1.0
    } else {
        Binomial::new(rho, rest)
            .expect("valid binomial")
            .cdf(allowed as u64)
    };
    covered * within
}

/// Filter geometry of one curve of the attack-probability figure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeGeometry {
    pub m: usize,
    pub k: usize,
    pub n_lids: usize,
    /// Explicit maximum fill; defaults to the expected fill of `n_lids`.
    pub rho_override: Option<f64>,
}

impl SchemeGeometry {
    /// Secured scheme: 256-bit identifiers, 23 five-bit link identifiers.
    pub const EFID: SchemeGeometry = SchemeGeometry {
        m: 256,
        k: 5,
        n_lids: 23,
        rho_override: None,
    };

    /// Plain LIPSIN: 320-bit identifiers, 23 five-bit link identifiers.
    pub const LIPSIN: SchemeGeometry = SchemeGeometry {
        m: 320,
        k: 5,
        n_lids: 23,
        rho_override: None,
    };

    pub fn rho_m(&self) -> f64 {
        self.rho_override
            .unwrap_or_else(|| expected_fill(self.m, self.k, self.n_lids))
    }
}

/// One `(l, scheme)` cell of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub l: u32,
    pub scheme: &'static str,
    pub m: usize,
    pub k: usize,
    pub n_lids: usize,
    pub rho_m: f64,
    pub p_sc: f64,
    pub p_fw: f64,
    pub p_a: f64,
    pub empirical: Option<Empirical>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Empirical {
    pub rate: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Analytic attack probability per hop count for both schemes. The plain
/// scheme has no security check, so its `p_sc` is 1.
pub fn figure1_sweep(
    efid: &SchemeGeometry,
    lipsin: &SchemeGeometry,
    p_sc: f64,
    ls: RangeInclusive<u32>,
) -> Result<Vec<SweepRow>, AnalysisError> {
    if ls.is_empty() || *ls.start() == 0 {
        return Err(AnalysisError::Domain(format!(
            "hop range {}..{} must be non-empty and start at 1 or more",
            ls.start(),
            ls.end()
        )));
    }
    let mut rows = Vec::new();
    for l in ls {
        for (scheme, g, p) in [("efid", efid, p_sc), ("lipsin", lipsin, 1.0)] {
            let rho_m = g.rho_m();
            let p_fw = false_positive_prob(rho_m, g.k as u32, l)?;
            rows.push(SweepRow {
                l,
                scheme,
                m: g.m,
                k: g.k,
                n_lids: g.n_lids,
                rho_m,
                p_sc: p,
                p_fw,
                p_a: attack_probability(p, rho_m, g.k as u32, l)?,
                empirical: None,
            });
        }
    }
    Ok(rows)
}
