// SPDX-License-Identifier: Apache-2.0

//! Computational-attack probe.
//!
//! An observer collects many identifiers for paths that share most of their
//! links and looks for structure in the bit patterns. Two statistics are
//! computed against the ideal of independent fair bits:
//!
//! * per-bit bias: `z_i = (ones_i - n/2) / sqrt(n/4)`, reported as the
//!   maximum `|z_i|` over all bit positions;
//! * sample-pair correlation: for disjoint consecutive pairs of samples,
//!   `r = 1 - 2 * hamming / m`, averaged over the `n/2` pairs, with
//!   `z = mean(r) * sqrt(m * n/2)`.
//!
//! Raw identifiers fail both by construction, which serves as the positive
//! control; their ciphertexts should not.

use std::collections::HashSet;

use crate::attachment::{encrypt_fid, MasterKeys};
use crate::attack::AnalysisError;
use crate::bloom::{build_fid, FilterParams, LinkId};
use crate::seed::{stream, Component};

/// Significance threshold, in binomial standard deviations.
pub const THRESHOLD_Z: f64 = 4.0;

/// Fewest samples the probe accepts.
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct UniformityStats {
    pub samples: usize,
    pub width: usize,
    /// Largest `|ones/n - 1/2|` over bit positions.
    pub max_bit_bias: f64,
    pub max_bit_bias_z: f64,
    pub pairs: usize,
    pub pair_correlation: f64,
    pub pair_correlation_z: f64,
}

impl UniformityStats {
    pub fn from_samples(samples: &[Vec<u8>]) -> Self {
        let n = samples.len();
        let width = samples.first().map_or(0, |s| s.len() * 8);
        let mut ones = vec![0u64; width];
        for s in samples {
            for (i, slot) in ones.iter_mut().enumerate() {
                *slot += u64::from(s[i / 8] >> (i % 8) & 1);
            }
        }
        let half = n as f64 / 2.0;
        let sd = (n as f64 / 4.0).sqrt();
        let max_dev = ones
            .iter()
            .map(|&c| (c as f64 - half).abs())
            .fold(0.0, f64::max);

        let pairs = n / 2;
        let sum_r: f64 = samples
            .chunks_exact(2)
            .map(|p| {
                let d: u32 = p[0]
                    .iter()
                    .zip(&p[1])
                    .map(|(a, b)| (a ^ b).count_ones())
                    .sum();
                1.0 - 2.0 * f64::from(d) / width as f64
            })
            .sum();
        let mean_r = if pairs == 0 {
            0.0
        } else {
            sum_r / pairs as f64
        };

        Self {
            samples: n,
            width,
            max_bit_bias: max_dev / n as f64,
            max_bit_bias_z: max_dev / sd,
            pairs,
            pair_correlation: mean_r,
            pair_correlation_z: mean_r * ((width * pairs) as f64).sqrt(),
        }
    }

    /// Bias threshold as a fraction: `z * 0.5 / sqrt(n)`.
    pub fn bias_threshold(&self, z: f64) -> f64 {
        z * 0.5 / (self.samples as f64).sqrt()
    }

    /// Threshold on the mean pair correlation: `z / sqrt(m * pairs)`.
    pub fn correlation_threshold(&self, z: f64) -> f64 {
        z / ((self.width * self.pairs) as f64).sqrt()
    }

    pub fn bias_detected(&self, z: f64) -> bool {
        self.max_bit_bias_z > z
    }

    pub fn correlation_detected(&self, z: f64) -> bool {
        self.pair_correlation_z.abs() > z
    }

    pub fn any_detected(&self, z: f64) -> bool {
        self.bias_detected(z) || self.correlation_detected(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub n_lids: usize,
    pub raw: UniformityStats,
    pub encrypted: UniformityStats,
    pub seed: u64,
}

/// Issues credentials for `samples` distinct identifiers that share
/// `n_lids - 1` link identifiers and differ in one fresh one, then measures
/// uniformity of both the plaintexts and the ciphertexts.
pub fn run_correlation_probe(
    keys: &MasterKeys,
    params: &FilterParams,
    n_lids: usize,
    samples: usize,
    seed: u64,
) -> Result<CorrelationReport, AnalysisError> {
    if samples < MIN_SAMPLES {
        return Err(AnalysisError::Domain(format!(
            "correlation probe needs at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if n_lids < 2 {
        return Err(AnalysisError::Domain(format!(
            "need at least 2 link identifiers per path, got {n_lids}"
        )));
    }
    let mut rng = stream(seed, Component::Correlation, 0);
    let mut lids: Vec<LinkId> = (0..n_lids - 1)
        .map(|_| LinkId::random(params, &mut rng))
        .collect();
    lids.push(LinkId::random(params, &mut rng));

    let mut seen = HashSet::with_capacity(samples);
    let mut raw = Vec::with_capacity(samples);
    let mut enc = Vec::with_capacity(samples);
    let mut attempts = 0usize;
    while raw.len() < samples {
        attempts += 1;
        if attempts > 100 * samples {
            return Err(AnalysisError::Domain(
                "could not draw enough distinct identifiers under the fill cap".into(),
            ));
        }
        *lids.last_mut().unwrap() = LinkId::random(params, &mut rng);
        let Ok(fid) = build_fid(&lids, params) else {
            continue;
        };
        if !seen.insert(fid.clone()) {
            continue;
        }
        enc.push(encrypt_fid(&fid, keys.enc_key())?.as_bytes().to_vec());
        raw.push(fid.as_bytes().to_vec());
    }
    Ok(CorrelationReport {
        n_lids,
        raw: UniformityStats::from_samples(&raw),
        encrypted: UniformityStats::from_samples(&enc),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_samples_are_maximally_biased() {
        let s = vec![vec![0u8; 4]; 100];
        let st = UniformityStats::from_samples(&s);
        assert_eq!(st.max_bit_bias, 0.5);
        assert_eq!(st.max_bit_bias_z, 10.0);
        assert_eq!(st.pair_correlation, 1.0);
        assert!(st.any_detected(THRESHOLD_Z));
    }

    #[test]
    fn fair_coins_stay_under_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s: Vec<Vec<u8>> = (0..4000)
            .map(|_| (0..32).map(|_| rng.gen()).collect())
            .collect();
        let st = UniformityStats::from_samples(&s);
        assert!(!st.any_detected(THRESHOLD_Z), "{st:?}");
    }

    #[test]
    fn thresholds_scale_with_inverse_root_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mk = |n: usize, rng: &mut ChaCha8Rng| -> UniformityStats {
            let s: Vec<Vec<u8>> = (0..n)
                .map(|_| (0..32).map(|_| rng.gen()).collect())
                .collect();
            UniformityStats::from_samples(&s)
        };
        let small = mk(1000, &mut rng);
        let large = mk(10_000, &mut rng);
        let ratio = small.bias_threshold(4.0) / large.bias_threshold(4.0);
        assert!((ratio - 10f64.sqrt()).abs() < 1e-12);
        let ratio = small.correlation_threshold(4.0) / large.correlation_threshold(4.0);
        assert!((ratio - 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples_rejected() {
        let k = MasterKeys::random(&mut ChaCha8Rng::seed_from_u64(3));
        let p = FilterParams::new(256, 5, 0.5).unwrap();
        assert!(run_correlation_probe(&k, &p, 23, 999, 0).is_err());
    }
}
