// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: `analyze`, `simulate`, `attack`, `sweep`.
//!
//! Every command writes CSV. Diagnostics are returned separately so the
//! binary can send them to stderr. All randomness comes from `--seed`.

use std::fs;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use thiserror::Error;

use crate::attachment::{MasterKeys, TagWidth};
use crate::attack::{
    self, attack_probability, birthday_attempts, figure1_sweep, fmt_f64, run_brute_force,
    run_correlation_probe, run_replay, AdversaryConfig, AnalysisError, AttackReport, Empirical,
    GuessStrategy, SchemeGeometry,
};
use crate::bloom::{expected_fill, false_positive_prob, BloomError, FilterParams};
use crate::seed::{stream, Component};
use crate::sim::{
    load_topology, write_delivery_csv, FlowOptions, NapPolicy, NodeId, Role, Scheme, SimError,
    Simulator, Topology, TopologyError,
};

#[derive(Debug, Parser)]
#[command(
    name = "secure-lipsin",
    version,
    about = "Secured Bloom-filter forwarding: analysis, simulation and attacks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic attack-probability table, no simulation.
    Analyze(RunArgs),
    /// Run publish flows through a topology file.
    Simulate(RunArgs),
    /// Run an adversary campaign.
    Attack(RunArgs),
    /// Two-curve attack probability table for both schemes.
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Lipsin,
    Efid,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Lipsin => Scheme::LipsinPlain,
            SchemeArg::Efid => Scheme::EfidSecured,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Brute,
    Replay,
    Corr,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Topology document (TOML).
    #[arg(long, value_name = "PATH")]
    pub topology: Option<PathBuf>,
    /// Filter width in bits; defaults to 256 (efid) or 320 (lipsin).
    #[arg(long)]
    pub m: Option<usize>,
    /// Bits per link identifier.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Link identifiers per forwarding identifier, for expected fill.
    #[arg(long, default_value_t = 23)]
    pub n_lids: usize,
    /// Maximum fill factor; defaults to the expected fill of `n_lids`.
    #[arg(long)]
    pub rho_m: Option<f64>,
    /// Tag width in bits.
    #[arg(long, default_value_t = 64, value_parser = parse_hash_bits)]
    pub hash_bits: u32,
    /// Probability of passing the security check.
    #[arg(long)]
    pub p_sc: Option<f64>,
    /// Trials, flows or samples, depending on the command. Accepts 1e6.
    #[arg(long, value_parser = parse_count)]
    pub trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Key rotations before a replay.
    #[arg(long)]
    pub epochs: Option<u32>,
    /// Hop range `A..B` (inclusive) or a single hop count.
    #[arg(long = "l", value_parser = parse_hops, default_value = "1..8")]
    pub hops: HopRange,
    #[arg(long, value_enum, default_value_t = SchemeArg::Efid)]
    pub scheme: SchemeArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Brute)]
    pub mode: ModeArg,
    /// Rotate the tag key once between capture and replay.
    #[arg(long)]
    pub rotate: bool,
    /// Flip one credential bit before sending.
    #[arg(long)]
    pub tamper: bool,
    /// Attacker node when attacking a topology file.
    #[arg(long)]
    pub attacker: Option<u32>,
    /// Target node when attacking a topology file.
    #[arg(long)]
    pub target: Option<u32>,
    /// NAP drops ingress identifiers filled above this fraction.
    #[arg(long)]
    pub nap_fill_cap: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopRange(pub u32, pub u32);

impl HopRange {
    pub fn range(self) -> RangeInclusive<u32> {
        self.0..=self.1
    }
}

fn parse_hops(s: &str) -> Result<HopRange, String> {
    let parse = |x: &str| {
        x.trim()
            .parse::<u32>()
            .map_err(|e| format!("bad hop count {x:?}: {e}"))
    };
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if a == 0 || b < a {
        return Err(format!("hop range {s:?} must satisfy 1 <= A <= B"));
    }
    Ok(HopRange(a, b))
}

fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return if v >= 1 {
            Ok(v)
        } else {
            Err("count must be at least 1".into())
        };
    }
    let f: f64 = s.parse().map_err(|_| format!("{s:?} is not a count"))?;
    if f >= 1.0 && f.fract() == 0.0 && f <= u64::MAX as f64 {
        Ok(f as u64)
    } else {
        Err(format!("{s:?} is not a positive whole number"))
    }
}

fn parse_hash_bits(s: &str) -> Result<u32, String> {
    let v: u32 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    TagWidth::new(v)
        .map(TagWidth::bits)
        .map_err(|e| e.to_string())
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Topology(#[from] TopologyError),

    #[error(transparent)]
    Sim(#[from] SimError),

    #[error(transparent)]
    Analysis(#[from] AnalysisError),

    #[error(transparent)]
    Bloom(#[from] BloomError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for invalid invocations, 1 for failures while doing the work.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::Bloom(_)
            | CliError::Analysis(AnalysisError::Domain(_)) => 2,
            _ => 1,
        }
    }
}

/// CSV document plus diagnostics destined for stderr.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Output {
    pub csv: String,
    pub warnings: Vec<String>,
}

pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let (args, out) = match &cli.command {
        Command::Analyze(a) => (a, cmd_analyze(a)?),
        Command::Simulate(a) => (a, cmd_simulate(a)?),
        Command::Attack(a) => (a, cmd_attack(a)?),
        Command::Sweep(a) => (a, cmd_sweep(a)?),
    };
    if let Some(path) = &args.out {
        fs::write(path, &out.csv).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(out)
}

fn scheme_m(args: &RunArgs) -> usize {
    args.m.unwrap_or(match args.scheme {
        SchemeArg::Efid => SchemeGeometry::EFID.m,
        SchemeArg::Lipsin => SchemeGeometry::LIPSIN.m,
    })
}

fn rho_for(args: &RunArgs, m: usize) -> Result<f64, CliError> {
    let rho = args
        .rho_m
        .unwrap_or_else(|| expected_fill(m, args.k, args.n_lids));
    if rho > 0.0 && rho <= 1.0 {
        Ok(rho)
    } else {
        Err(CliError::Usage(format!("--rho-m {rho} must lie in (0, 1]")))
    }
}

fn keys_for(args: &RunArgs) -> MasterKeys {
    let width = TagWidth::new(args.hash_bits).expect("validated by the parser");
    MasterKeys::random(&mut stream(args.seed, Component::Keys, 0)).with_tag_width(width)
}

fn csv_string(
    write: impl FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>,
) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

pub const ANALYZE_CSV_HEADER: [&str; 11] = [
    "l",
    "scheme",
    "m",
    "k",
    "n_lids",
    "rho_m",
    "tag_bits",
    "p_sc",
    "p_fw",
    "p_a",
    "birthday_attempts",
];

/// Pure closed-form table over the hop range for one scheme.
pub fn cmd_analyze(args: &RunArgs) -> Result<Output, CliError> {
    let m = scheme_m(args);
    FilterParams::new(m, args.k, 1.0)?;
    let rho = rho_for(args, m)?;
    let mut warnings = Vec::new();
    let range = 2f64.powi(args.hash_bits as i32);
    let p_sc = match (args.scheme, args.p_sc) {
        (SchemeArg::Lipsin, Some(_)) => {
            warnings.push("--p-sc ignored: plain LIPSIN has no security check".into());
            1.0
        }
        (SchemeArg::Lipsin, None) => 1.0,
        (SchemeArg::Efid, Some(p)) => p,
        (SchemeArg::Efid, None) => 1.0 / range,
    };
    if !(p_sc > 0.0 && p_sc <= 1.0) {
        return Err(CliError::Usage(format!("--p-sc {p_sc} must lie in (0, 1]")));
    }
    let attempts = if args.scheme == SchemeArg::Efid && p_sc < 1.0 {
        birthday_attempts(range, p_sc)?.to_string()
    } else {
        String::new()
    };
    let csv = csv_string(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(ANALYZE_CSV_HEADER)?;
        for l in args.hops.range() {
            let p_fw = false_positive_prob(rho, args.k as u32, l).expect("validated");
            let p_a = attack_probability(p_sc, rho, args.k as u32, l).expect("validated");
            w.write_record([
                l.to_string(),
                Scheme::from(args.scheme).name().to_string(),
                m.to_string(),
                args.k.to_string(),
                args.n_lids.to_string(),
                fmt_f64(rho),
                args.hash_bits.to_string(),
                fmt_f64(p_sc),
                fmt_f64(p_fw),
                fmt_f64(p_a),
                attempts.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(Output { csv, warnings })
}

/// Runs the document's flows, or `--trials` random publisher/subscriber
/// pairs drawn from `--seed` when the document lists none.
pub fn cmd_simulate(args: &RunArgs) -> Result<Output, CliError> {
    let path = args
        .topology
        .as_ref()
        .ok_or_else(|| CliError::Usage("simulate requires --topology PATH".into()))?;
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let topo = load_topology(&text)?;
    let flows = if topo.flows().is_empty() {
        random_flows(&topo, args.trials.unwrap_or(1), args.seed)?
    } else {
        topo.flows().to_vec()
    };
    let policy = NapPolicy {
        scheme: args.scheme.into(),
        max_fill: args.nap_fill_cap,
    };
    let mut sim = Simulator::new(&topo, keys_for(args), policy);
    let opts = FlowOptions {
        tamper: args.tamper,
        payload: Vec::new(),
    };
    let reports = flows
        .iter()
        .map(|&(p, s)| sim.run_flow(p, s, opts.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let csv = csv_string(|buf| write_delivery_csv(&reports, buf))?;
    Ok(Output {
        csv,
        warnings: Vec::new(),
    })
}

fn random_flows(topo: &Topology, n: u64, seed: u64) -> Result<Vec<(NodeId, NodeId)>, CliError> {
    let pubs = topo.nodes_with_role(Role::Pub);
    let subs = topo.nodes_with_role(Role::Sub);
    if pubs.is_empty() || subs.is_empty() {
        return Err(CliError::Usage(
            "topology needs at least one PUB and one SUB node to generate flows".into(),
        ));
    }
    let mut rng = stream(seed, Component::Flows, 0);
    Ok((0..n)
        .map(|_| {
            (
                pubs[rng.gen_range(0..pubs.len())],
                subs[rng.gen_range(0..subs.len())],
            )
        })
        .collect())
}

/// Brute-force, replay or correlation campaign.
///
/// Without `--topology`, each hop count in `--l` gets its own chain with
/// the target exactly that many forwarding checks past the attacker's NAP.
pub fn cmd_attack(args: &RunArgs) -> Result<Output, CliError> {
    let keys = keys_for(args);
    let m = scheme_m(args);
    let trials = args.trials.unwrap_or(10_000);
    if args.mode == ModeArg::Corr {
        let params = FilterParams::new(m, args.k, 1.0)?;
        let report =
            run_correlation_probe(&keys, &params, args.n_lids, trials as usize, args.seed)?;
        let csv = csv_string(|buf| attack::write_correlation_csv(&report, buf))?;
        return Ok(Output {
            csv,
            warnings: Vec::new(),
        });
    }

    let rho = rho_for(args, m)?;
    let rotations = args.epochs.unwrap_or(u32::from(args.rotate));
    let cfg_for = |attacker: NodeId, target: NodeId| {
        let mut cfg = match args.mode {
            ModeArg::Replay => {
                AdversaryConfig::replay(args.scheme.into(), attacker, target, trials, rotations)
            }
            _ => AdversaryConfig::brute_force(
                args.scheme.into(),
                attacker,
                target,
                trials,
                args.seed,
            ),
        };
        cfg.seed = args.seed;
        cfg.guess = GuessStrategy::Conditioned(rho);
        cfg.nap_fill_cap = args.nap_fill_cap;
        cfg
    };
    let run = |topo: &Topology, cfg: &AdversaryConfig| match args.mode {
        ModeArg::Replay => run_replay(topo, cfg, &keys),
        _ => run_brute_force(topo, cfg, &keys),
    };

    let mut reports = Vec::new();
    if let Some(path) = &args.topology {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let topo = load_topology(&text)?;
        let (Some(a), Some(t)) = (args.attacker, args.target) else {
            return Err(CliError::Usage(
                "attacking a topology file requires --attacker and --target".into(),
            ));
        };
        reports.push(run(&topo, &cfg_for(NodeId(a), NodeId(t)))?);
    } else {
        let params = FilterParams::new(m, args.k, 1.0)?;
        for l in args.hops.range() {
            let topo = Topology::chain(params, args.seed, l);
            reports.push(run(&topo, &cfg_for(NodeId(0), NodeId(l + 1)))?);
        }
    }
    let warnings = reports
        .iter()
        .filter(|r| !r.feasible())
        .map(|r| infeasible_warning(r.path_len, r.scheme.name(), r.trials as f64 * r.p_a))
        .collect();
    let csv = csv_string(|buf| attack::write_attack_csv(&reports, buf))?;
    Ok(Output { csv, warnings })
}

fn infeasible_warning(l: u32, scheme: &str, expected: f64) -> String {
    format!(
        "l={l} {scheme}: {:e} expected successes, empirical cell left empty",
        expected
    )
}

/// Both curves over the hop range. `--m` forces one width on both schemes;
/// `--rho-m` forces one fill. A positive `--trials` adds empirical rates
/// wherever at least one success is expected.
pub fn cmd_sweep(args: &RunArgs) -> Result<Output, CliError> {
    let geometry = |base: SchemeGeometry| SchemeGeometry {
        m: args.m.unwrap_or(base.m),
        k: args.k,
        n_lids: args.n_lids,
        rho_override: args.rho_m,
    };
    let efid = geometry(SchemeGeometry::EFID);
    let lipsin = geometry(SchemeGeometry::LIPSIN);
    for g in [&efid, &lipsin] {
        FilterParams::new(g.m, g.k, 1.0)?;
        if !(g.rho_m() > 0.0 && g.rho_m() <= 1.0) {
            return Err(CliError::Usage(format!(
                "--rho-m {} must lie in (0, 1]",
                g.rho_m()
            )));
        }
    }
    let p_sc = args.p_sc.unwrap_or(1e-6);
    let mut rows = figure1_sweep(&efid, &lipsin, p_sc, args.hops.range())?;
    let mut warnings = Vec::new();
    if let Some(trials) = args.trials {
        let keys = keys_for(args);
        for row in &mut rows {
            let expected = trials as f64 * row.p_a;
            if row.scheme != "lipsin" || expected < 1.0 {
                warnings.push(infeasible_warning(row.l, row.scheme, expected));
                continue;
            }
            let params = FilterParams::new(row.m, row.k, 1.0)?;
            let topo = Topology::chain(params, args.seed, row.l);
            let mut cfg = AdversaryConfig::brute_force(
                Scheme::LipsinPlain,
                NodeId(0),
                NodeId(row.l + 1),
                trials,
                args.seed,
            );
            cfg.guess = GuessStrategy::Conditioned(row.rho_m);
            let r: AttackReport = run_brute_force(&topo, &cfg, &keys)?;
            row.empirical = Some(Empirical {
                rate: r.empirical_rate,
                trials,
                seed: args.seed,
            });
        }
    }
    let csv = csv_string(|buf| attack::write_sweep_csv(&rows, buf))?;
    Ok(Output { csv, warnings })
}
