// SPDX-License-Identifier: Apache-2.0

//! m-bit Bloom filters used as link and forwarding identifiers.
//!
//! A [`LinkId`] names one unidirectional edge and has exactly `k` bits set.
//! A [`ForwardingId`] is the bitwise OR of the link identifiers along a
//! delivery path; a forwarding node passes a packet over an edge iff every
//! bit of that edge's link identifier is present in the packet's forwarding
//! identifier.
//!
//! Bit `i` of a filter lives in bit `i % 8` of byte `i / 8`. Filters are
//! serialized as lowercase hex of those bytes in index order.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

/// Errors raised by filter construction and the analytic model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BloomError {
    #[error("filter width must be a positive multiple of 8, got {0}")]
    BadWidth(usize),

    #[error("bits per link identifier must satisfy 0 < k <= m (k = {k}, m = {m})")]
    BadHashCount { k: usize, m: usize },

    #[error("maximum fill factor must lie in (0, 1], got {0}")]
    BadFillCap(f64),

    #[error("filter width mismatch: expected {expected} bits, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("link identifier must have exactly {expected} bits set, found {got}")]
    WrongPopulation { expected: usize, got: usize },

    #[error("cannot build a forwarding identifier from an empty path")]
    EmptyPath,

    #[error("fill factor {actual:.4} exceeds the maximum {rho_max:.4}")]
    FillFactorExceeded { actual: f64, rho_max: f64 },

    #[error("invalid hex filter: {0}")]
    BadHex(String),

    #[error("argument out of domain: {0}")]
    Domain(String),
}

/// Filter geometry shared by every identifier in a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    m: usize,
    k: usize,
    rho_max: f64,
}

impl FilterParams {
    pub fn new(m: usize, k: usize, rho_max: f64) -> Result<Self, BloomError> {
        if m == 0 || !m.is_multiple_of(8) {
            return Err(BloomError::BadWidth(m));
        }
        if k == 0 || k > m {
            return Err(BloomError::BadHashCount { k, m });
        }
        if !(rho_max > 0.0 && rho_max <= 1.0) {
            return Err(BloomError::BadFillCap(rho_max));
        }
        Ok(Self { m, k, rho_max })
    }

    /// Filter width in bits.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Bits set in every link identifier.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Maximum fill factor a forwarding identifier may reach.
    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn bytes(&self) -> usize {
        self.m / 8
    }

    /// Same geometry with a different fill cap.
    pub fn with_rho_max(self, rho_max: f64) -> Result<Self, BloomError> {
        Self::new(self.m, self.k, rho_max)
    }
}

/// Fixed-width bit set backing both identifier kinds.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Bits(Vec<u8>);

impl Bits {
    fn zeros(m: usize) -> Self {
        Bits(vec![0; m / 8])
    }

    fn width(&self) -> usize {
        self.0.len() * 8
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 8] >> (i % 8) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.0[i / 8] |= 1 << (i % 8);
    }

    fn count_ones(&self) -> usize {
        self.0.iter().map(|b| b.count_ones() as usize).sum()
    }

    fn is_subset_of(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == *a)
    }

    fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    fn from_hex(s: &str, m: usize) -> Result<Self, BloomError> {
        let bytes = hex::decode(s).map_err(|e| BloomError::BadHex(e.to_string()))?;
        if bytes.len() * 8 != m {
            return Err(BloomError::WidthMismatch {
                expected: m,
                got: bytes.len() * 8,
            });
        }
        Ok(Bits(bytes))
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Identifier of one unidirectional link: exactly `k` of `m` bits set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId(Bits);

impl LinkId {
    /// Draws `k` distinct positions uniformly without replacement.
    pub fn random<R: Rng + ?Sized>(params: &FilterParams, rng: &mut R) -> Self {
        let mut bits = Bits::zeros(params.m);
        for i in index::sample(rng, params.m, params.k) {
            bits.set(i);
        }
        LinkId(bits)
    }

    /// Builds a link identifier from explicit bit positions.
    pub fn from_positions(params: &FilterParams, positions: &[usize]) -> Result<Self, BloomError> {
        let mut bits = Bits::zeros(params.m);
        for &p in positions {
            if p >= params.m {
                return Err(BloomError::Domain(format!(
                    "bit position {p} outside {}-bit filter",
                    params.m
                )));
            }
            bits.set(p);
        }
        Self::checked(params, bits)
    }

    pub fn from_hex(params: &FilterParams, s: &str) -> Result<Self, BloomError> {
        Self::checked(params, Bits::from_hex(s, params.m)?)
    }

    fn checked(params: &FilterParams, bits: Bits) -> Result<Self, BloomError> {
        let got = bits.count_ones();
        if got != params.k {
            return Err(BloomError::WrongPopulation {
                expected: params.k,
                got,
            });
        }
        Ok(LinkId(bits))
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn count_ones(&self) -> usize {
        self.0.count_ones()
    }

    pub fn is_set(&self, bit: usize) -> bool {
        self.0.get(bit)
    }

    pub fn positions(&self) -> Vec<usize> {
        (0..self.width()).filter(|&i| self.0.get(i)).collect()
    }

    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0 .0
    }
}

/// OR of the link identifiers of a delivery path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ForwardingId(Bits);

impl ForwardingId {
    pub fn zeros(m: usize) -> Self {
        ForwardingId(Bits::zeros(m))
    }

    pub fn ones(m: usize) -> Self {
        ForwardingId(Bits(vec![0xff; m / 8]))
    }

    /// Raw filter bytes. The width must be a positive multiple of 8.
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, BloomError> {
        if bytes.is_empty() {
            return Err(BloomError::BadWidth(0));
        }
        Ok(ForwardingId(Bits(bytes)))
    }

    pub fn from_hex(m: usize, s: &str) -> Result<Self, BloomError> {
        Ok(ForwardingId(Bits::from_hex(s, m)?))
    }

    /// Filter whose bits are set independently with probability `rho`, so
    /// that any fixed `k` positions are all present with probability
    /// exactly `rho^k`.
    pub fn random_with_fill<R: Rng + ?Sized>(m: usize, rho: f64, rng: &mut R) -> Self {
        let mut bits = Bits::zeros(m);
        if rho >= 1.0 {
            return Self::ones(m);
        }
        if rho == 0.5 {
            rng.fill(&mut bits.0[..]);
            return ForwardingId(bits);
        }
        for i in 0..m {
            if rng.gen_bool(rho.max(0.0)) {
                bits.set(i);
            }
        }
        ForwardingId(bits)
    }

    /// Uniformly random filter, i.e. every bit set with probability 1/2.
    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        Self::random_with_fill(m, 0.5, rng)
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn count_ones(&self) -> usize {
        self.0.count_ones()
    }

    pub fn is_set(&self, bit: usize) -> bool {
        self.0.get(bit)
    }

    pub fn set(&mut self, bit: usize) {
        self.0.set(bit)
    }

    pub fn flip(&mut self, bit: usize) {
        self.0 .0[bit / 8] ^= 1 << (bit % 8);
    }

    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0 .0
    }

    /// Fraction of set bits.
    pub fn fill_factor(&self) -> f64 {
        fill_factor(self)
    }

    pub fn contains(&self, lid: &LinkId) -> bool {
        membership_check(self, lid)
    }
}

impl From<&LinkId> for ForwardingId {
    fn from(lid: &LinkId) -> Self {
        ForwardingId(lid.0.clone())
    }
}

/// ORs the link identifiers of a path into a forwarding identifier,
/// refusing paths that would push the fill factor past `rho_max`.
pub fn build_fid(lids: &[LinkId], params: &FilterParams) -> Result<ForwardingId, BloomError> {
    if lids.is_empty() {
        return Err(BloomError::EmptyPath);
    }
    let mut bits = Bits::zeros(params.m);
    for lid in lids {
        if lid.width() != params.m {
            return Err(BloomError::WidthMismatch {
                expected: params.m,
                got: lid.width(),
            });
        }
        for (acc, b) in bits.0.iter_mut().zip(&lid.0 .0) {
            *acc |= b;
        }
    }
    let fid = ForwardingId(bits);
    let actual = fid.fill_factor();
    if actual > params.rho_max {
        return Err(BloomError::FillFactorExceeded {
            actual,
            rho_max: params.rho_max,
        });
    }
    Ok(fid)
}

/// True iff every bit of `lid` is set in `fid`.
///
/// # Panics
///
/// If the two filters have different widths. Widths are validated when a
/// topology is loaded, so a mismatch here is a bug in the caller.
pub fn membership_check(fid: &ForwardingId, lid: &LinkId) -> bool {
    assert_eq!(
        fid.width(),
        lid.width(),
        "membership check across filters of different width"
    );
    lid.0.is_subset_of(&fid.0)
}

pub fn fill_factor(fid: &ForwardingId) -> f64 {
    fid.count_ones() as f64 / fid.width() as f64
}

/// Probability that a guessed forwarding identifier passes `l` consecutive
/// forwarding checks: `rho_m^(k*l)`.
pub fn false_positive_prob(rho_m: f64, k: u32, l: u32) -> Result<f64, BloomError> {
    if !(rho_m > 0.0 && rho_m <= 1.0) {
        return Err(BloomError::Domain(format!("rho_m = {rho_m} not in (0, 1]")));
    }
    if k == 0 || l == 0 {
        return Err(BloomError::Domain(format!(
            "k and l must be at least 1 (k = {k}, l = {l})"
        )));
    }
    Ok(rho_m.powf(f64::from(k) * f64::from(l)))
}

/// Expected fill of a filter after OR-ing `n_lids` independent `k`-bit
/// link identifiers: `1 - (1 - 1/m)^(k * n_lids)`.
pub fn expected_fill(m: usize, k: usize, n_lids: usize) -> f64 {
    1.0 - (1.0 - 1.0 / m as f64).powf((k * n_lids) as f64)
}
