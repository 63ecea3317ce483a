// SPDX-License-Identifier: Apache-2.0

//! Executable brute-force and replay adversaries.
//!
//! Trials are split into fixed-size chunks, each with its own counter
//! derived random stream, and counted in parallel. Counts are summed, so
//! the report is identical to a sequential run.

use rayon::prelude::*;

use crate::attachment::{issue_credential, rotate_key, Credential, EncryptedFid, MasterKeys, Tag};
use crate::attack::analytic::{collision_probability, guess_pass_probability};
use crate::bloom::ForwardingId;
use crate::seed::{stream, Component};
use crate::sim::{
    build_path_fid, shortest_path, NapPolicy, NodeId, Packet, Scheme, SimError, Simulator, Topology,
};

const CHUNK: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackMode {
    BruteForce,
    Replay,
    Computational,
}

impl AttackMode {
    pub fn name(self) -> &'static str {
        match self {
            AttackMode::BruteForce => "brute",
            AttackMode::Replay => "replay",
            AttackMode::Computational => "corr",
        }
    }
}

/// How a brute-force attacker picks identifiers in the plain scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuessStrategy {
    /// Every bit set independently with this probability.
    Conditioned(f64),
    /// All bits set.
    Saturated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryConfig {
    pub mode: AttackMode,
    pub scheme: Scheme,
    pub trials: u64,
    pub target: NodeId,
    /// A user node; the attack enters at its NAP.
    pub attacker: NodeId,
    pub seed: u64,
    pub guess: GuessStrategy,
    /// Key rotations between capture and replay.
    pub rotations: u32,
    /// Optional NAP-side drop of over-filled identifiers.
    pub nap_fill_cap: Option<f64>,
}

impl AdversaryConfig {
    pub fn brute_force(
        scheme: Scheme,
        attacker: NodeId,
        target: NodeId,
        trials: u64,
        seed: u64,
    ) -> Self {
        Self {
            mode: AttackMode::BruteForce,
            scheme,
            trials,
            target,
            attacker,
            seed,
            guess: GuessStrategy::Conditioned(0.5),
            rotations: 0,
            nap_fill_cap: None,
        }
    }

    pub fn replay(
        scheme: Scheme,
        attacker: NodeId,
        target: NodeId,
        trials: u64,
        rotations: u32,
    ) -> Self {
        Self {
            mode: AttackMode::Replay,
            rotations,
            ..Self::brute_force(scheme, attacker, target, trials, 0)
        }
    }

    fn policy(&self) -> NapPolicy {
        NapPolicy {
            scheme: self.scheme,
            max_fill: self.nap_fill_cap,
        }
    }
}

/// Empirical counts plus the matching analytic prediction.
///
/// `p_sc` is the per-attempt probability of passing the security check
/// (`2^-|h|`); `p_sc_birthday` is the collision probability the birthday
/// estimate assigns to `trials` attempts. `p_a = p_sc * p_fw` is the
/// per-trial success probability that `empirical_rate` estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport {
    pub mode: AttackMode,
    pub scheme: Scheme,
    pub path_len: u32,
    pub m: usize,
    pub k: usize,
    pub tag_bits: u32,
    pub rho_m: f64,
    pub trials: u64,
    pub successes: u64,
    pub security_passes: u64,
    pub empirical_rate: f64,
    pub p_sc: f64,
    pub p_sc_birthday: f64,
    pub p_fw: f64,
    pub p_a: f64,
    pub seed: u64,
}

impl AttackReport {
    /// Whether at least one success is expected, i.e. the empirical rate
    /// says something about `p_a`.
    pub fn feasible(&self) -> bool {
        self.trials as f64 * self.p_a >= 1.0
    }

    /// One-sided 95% upper bound on the success rate when nothing succeeded.
    pub fn zero_success_bound(&self) -> Option<f64> {
        (self.successes == 0).then(|| 3.0 / self.trials as f64)
    }

    /// Standard deviation of the empirical rate under the analytic model.
    pub fn sigma(&self) -> f64 {
        (self.p_a * (1.0 - self.p_a) / self.trials as f64).sqrt()
    }

    pub fn security_pass_rate(&self) -> f64 {
        self.security_passes as f64 / self.trials as f64
    }
}

/// Forwarding checks between the attacker's NAP and the target.
fn hops_past_nap(topo: &Topology, attacker: NodeId, target: NodeId) -> Result<u32, SimError> {
    let nap = topo
        .attachment(attacker)
        .ok_or(SimError::NotPublisher(attacker))?;
    if target == nap {
        return Err(SimError::Unreachable {
            from: attacker,
            to: target,
        });
    }
    Ok(shortest_path(topo, attacker, target)?.len() as u32 - 1)
}

#[derive(Default)]
struct Tally {
    successes: u64,
    passes: u64,
}

fn parallel_tally<F>(
    trials: u64,
    seed: u64,
    component: Component,
    run: F,
) -> Result<Tally, SimError>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut Tally) -> Result<(), SimError> + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let partial: Result<Vec<Tally>, SimError> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, component, c);
            let n = CHUNK.min(trials - c * CHUNK);
            let mut t = Tally::default();
            for _ in 0..n {
                run(&mut rng, &mut t)?;
            }
            Ok(t)
        })
        .collect();
    Ok(partial?.into_iter().fold(Tally::default(), |a, b| Tally {
        successes: a.successes + b.successes,
        passes: a.passes + b.passes,
    }))
}

/// Injects random identifiers at the attacker's NAP.
///
/// Secured scheme: uniformly random `{eFId, h}` pairs at the current epoch.
/// A forged pair that passes decrypts to a uniformly random identifier,
/// so the forwarding-check model uses a fill of 1/2.
/// Plain scheme: identifiers drawn per [`GuessStrategy`].
pub fn run_brute_force(
    topo: &Topology,
    cfg: &AdversaryConfig,
    keys: &MasterKeys,
) -> Result<AttackReport, SimError> {
    let l = hops_past_nap(topo, cfg.attacker, cfg.target)?;
    let params = *topo.params();
    let m = params.m();
    let width = keys.tag_width();
    let sim = Simulator::new(topo, keys.clone(), cfg.policy());

    let tally = parallel_tally(cfg.trials, cfg.seed, Component::BruteForce, |rng, t| {
        let pkt = match (cfg.scheme, cfg.guess) {
            (Scheme::EfidSecured, guess) => {
                let efid = match guess {
                    GuessStrategy::Saturated => EncryptedFid::from_bytes(vec![0xff; m / 8]),
                    GuessStrategy::Conditioned(_) => EncryptedFid::random(m / 8, rng),
                };
                let cred = Credential {
                    efid,
                    tag: Tag::random(width, rng),
                    epoch_hint: keys.epoch(),
                };
                Packet::with_credential(cred, Vec::new())
            }
            (Scheme::LipsinPlain, GuessStrategy::Conditioned(rho)) => {
                Packet::with_fid(ForwardingId::random_with_fill(m, rho, rng), Vec::new())
            }
            (Scheme::LipsinPlain, GuessStrategy::Saturated) => {
                Packet::with_fid(ForwardingId::ones(m), Vec::new())
            }
        };
        let prop = sim.clone().inject(cfg.attacker, pkt)?;
        if prop.rejected.is_none() {
            t.passes += 1;
            if prop.visited.contains(&cfg.target) {
                t.successes += 1;
            }
        }
        Ok(())
    })?;

    let (rho_m, p_sc, p_sc_birthday) = match cfg.scheme {
        Scheme::EfidSecured => (
            0.5,
            1.0 / width.range(),
            collision_probability(width.range(), cfg.trials as f64).unwrap_or(1.0),
        ),
        Scheme::LipsinPlain => {
            let rho = match cfg.guess {
                GuessStrategy::Conditioned(rho) => rho,
                GuessStrategy::Saturated => 1.0,
            };
            (rho, 1.0, 1.0)
        }
    };
    let p_fw = guess_pass_probability(rho_m, params.k() * l as usize, m, cfg.nap_fill_cap);
    Ok(AttackReport {
        mode: AttackMode::BruteForce,
        scheme: cfg.scheme,
        path_len: l,
        m,
        k: params.k(),
        tag_bits: width.bits(),
        rho_m,
        trials: cfg.trials,
        successes: tally.successes,
        security_passes: tally.passes,
        empirical_rate: tally.successes as f64 / cfg.trials as f64,
        p_sc,
        p_sc_birthday,
        p_fw,
        p_a: p_sc * p_fw,
        seed: cfg.seed,
    })
}

/// Replays a header captured from a legitimate flow towards the target,
/// after `cfg.rotations` key rotations.
///
/// In the secured scheme a same-epoch replay always succeeds; after any
/// rotation it needs the old tag to verify under the new key. In the plain
/// scheme there is nothing to expire.
pub fn run_replay(
    topo: &Topology,
    cfg: &AdversaryConfig,
    keys: &MasterKeys,
) -> Result<AttackReport, SimError> {
    let l = hops_past_nap(topo, cfg.attacker, cfg.target)?;
    let params = *topo.params();
    let width = keys.tag_width();

    let path = shortest_path(topo, cfg.attacker, cfg.target)?;
    let fid = build_path_fid(topo, &path)?;
    let captured = match cfg.scheme {
        Scheme::EfidSecured => Packet::with_credential(issue_credential(&fid, keys)?, Vec::new()),
        Scheme::LipsinPlain => Packet::with_fid(fid.clone(), Vec::new()),
    };
    let mut now = keys.clone();
    for _ in 0..cfg.rotations {
        now = rotate_key(&now);
    }
    let sim = Simulator::new(topo, now, cfg.policy());

    let tally = parallel_tally(cfg.trials, cfg.seed, Component::Replay, |_, t| {
        let prop = sim.clone().inject(cfg.attacker, captured.clone())?;
        if prop.rejected.is_none() {
            t.passes += 1;
            if prop.visited.contains(&cfg.target) {
                t.successes += 1;
            }
        }
        Ok(())
    })?;

    let p_sc = match (cfg.scheme, cfg.rotations) {
        (Scheme::LipsinPlain, _) | (Scheme::EfidSecured, 0) => 1.0,
        (Scheme::EfidSecured, _) => 1.0 / width.range(),
    };
    let p_fw = match cfg.nap_fill_cap {
        Some(cap) if fid.fill_factor() > cap => 0.0,
        _ => 1.0,
    };
    Ok(AttackReport {
        mode: AttackMode::Replay,
        scheme: cfg.scheme,
        path_len: l,
        m: params.m(),
        k: params.k(),
        tag_bits: width.bits(),
        rho_m: fid.fill_factor(),
        trials: cfg.trials,
        successes: tally.successes,
        security_passes: tally.passes,
        empirical_rate: tally.successes as f64 / cfg.trials as f64,
        p_sc,
        p_sc_birthday: p_sc,
        p_fw,
        p_a: p_sc * p_fw,
        seed: cfg.seed,
    })
}
