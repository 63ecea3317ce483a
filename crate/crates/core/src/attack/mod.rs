// SPDX-License-Identifier: Apache-2.0

//! Adversaries against plain and secured forwarding, and the analytic model
//! they are checked against.

mod adversary;
pub mod analytic;
mod correlation;

pub use adversary::*;
pub use analytic::{
    attack_probability, birthday_attempts, birthday_attempts_real, collision_probability,
    figure1_sweep, guess_pass_probability, Empirical, SchemeGeometry, SweepRow,
};
pub use correlation::*;

use std::io;

use thiserror::Error;

use crate::attachment::AttachmentError;
use crate::bloom::BloomError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error(transparent)]
    Bloom(#[from] BloomError),

    #[error(transparent)]
    Attachment(#[from] AttachmentError),
}

/// Probabilities in CSV output: shortest round-trip scientific notation.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

pub const SWEEP_CSV_HEADER: [&str; 12] = [
    "l",
    "scheme",
    "m",
    "k",
    "n_lids",
    "rho_m",
    "p_sc",
    "p_fw",
    "p_a",
    "empirical_rate",
    "trials",
    "seed",
];

/// `l,scheme,m,k,n_lids,rho_m,p_sc,p_fw,p_a,empirical_rate,trials,seed`;
/// the last three are empty for rows without an empirical estimate.
pub fn write_sweep_csv<W: io::Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER)?;
    for r in rows {
        let (rate, trials, seed) = match r.empirical {
            Some(e) => (fmt_f64(e.rate), e.trials.to_string(), e.seed.to_string()),
            None => Default::default(),
        };
        w.write_record([
            r.l.to_string(),
            r.scheme.to_string(),
            r.m.to_string(),
            r.k.to_string(),
            r.n_lids.to_string(),
            fmt_f64(r.rho_m),
            fmt_f64(r.p_sc),
            fmt_f64(r.p_fw),
            fmt_f64(r.p_a),
            rate,
            trials,
            seed,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const ATTACK_CSV_HEADER: [&str; 17] = [
    "mode",
    "scheme",
    "l",
    "m",
    "k",
    "tag_bits",
    "rho_m",
    "trials",
    "successes",
    "security_passes",
    "empirical_rate",
    "zero_success_bound",
    "p_sc",
    "p_sc_birthday",
    "p_fw",
    "p_a",
    "seed",
];

/// One row per report. `empirical_rate` is left empty when fewer than one
/// success is expected; `zero_success_bound` is filled only when nothing
/// succeeded.
pub fn write_attack_csv<W: io::Write>(reports: &[AttackReport], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ATTACK_CSV_HEADER)?;
    for r in reports {
        let rate = if r.feasible() {
            fmt_f64(r.empirical_rate)
        } else {
            String::new()
        };
        w.write_record([
            r.mode.name().to_string(),
            r.scheme.name().to_string(),
            r.path_len.to_string(),
            r.m.to_string(),
            r.k.to_string(),
            r.tag_bits.to_string(),
            fmt_f64(r.rho_m),
            r.trials.to_string(),
            r.successes.to_string(),
            r.security_passes.to_string(),
            rate,
            r.zero_success_bound().map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.p_sc),
            fmt_f64(r.p_sc_birthday),
            fmt_f64(r.p_fw),
            fmt_f64(r.p_a),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const CORRELATION_CSV_HEADER: [&str; 12] = [
    "dataset",
    "samples",
    "m",
    "n_lids",
    "max_bit_bias",
    "max_bit_bias_z",
    "pair_correlation",
    "pair_correlation_z",
    "threshold_z",
    "bias_detected",
    "correlation_detected",
    "seed",
];

pub fn write_correlation_csv<W: io::Write>(
    r: &CorrelationReport,
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CORRELATION_CSV_HEADER)?;
    for (name, s) in [("raw", &r.raw), ("encrypted", &r.encrypted)] {
        w.write_record([
            name.to_string(),
            s.samples.to_string(),
            s.width.to_string(),
            r.n_lids.to_string(),
            fmt_f64(s.max_bit_bias),
            fmt_f64(s.max_bit_bias_z),
            fmt_f64(s.pair_correlation),
            fmt_f64(s.pair_correlation_z),
            fmt_f64(THRESHOLD_Z),
            s.bias_detected(THRESHOLD_Z).to_string(),
            s.correlation_detected(THRESHOLD_Z).to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
