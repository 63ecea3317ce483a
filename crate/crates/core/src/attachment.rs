// SPDX-License-Identifier: Apache-2.0

//! Credential issuance and stateless verification at the network
//! attachment point (NAP).
//!
//! The NAP encrypts a forwarding identifier under `k1` and binds a truncated
//! CMAC tag under the per-epoch key `k2` to the ciphertext. A publisher only
//! ever holds `{eFId, h}`; on ingress the NAP recomputes the tag, and if it
//! matches, swaps the ciphertext for the plaintext identifier.
//!
//! * Encryption is AES-128 in CBC mode with an all-zero IV, applied twice
//!   with the block order reversed in between, over the whole identifier.
//!   The width must be a multiple of 128 bits.
//! * The tag is the most significant 64 bits of AES-CMAC over the
//!   ciphertext bytes, optionally truncated further to 16/32/48 bits.
//! * `k2` for epoch `e` is `CMAC(root, e as big-endian u32)`.

use aes::Aes128;
use cbc::cipher::block_padding::NoPadding;
use cbc::cipher::{BlockDecryptMut, BlockEncryptMut, KeyIvInit};
use cmac::{Cmac, Mac};
use rand::Rng;
use subtle::ConstantTimeEq;
use thiserror::Error;

use crate::bloom::ForwardingId;

/// Cipher block width in bits.
pub const BLOCK_BITS: usize = 128;

/// Bytes appended to the ciphertext on the wire: tag (8) then epoch hint (4).
pub const CREDENTIAL_TRAILER_BYTES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttachmentError {
    #[error("forwarding identifier of {0} bits is not a whole number of 128-bit cipher blocks")]
    BlockMisaligned(usize),

    #[error("ciphertext length {got} bytes does not match the expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("tag width must be one of 16, 32, 48 or 64 bits, got {0}")]
    BadTagWidth(u32),
}

/// A 128-bit symmetric key.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Key128(pub [u8; 16]);

impl Key128 {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Key128(rng.gen())
    }

    /// Copy of the key with one bit inverted.
    pub fn with_bit_flipped(mut self, bit: usize) -> Self {
        self.0[bit / 8] ^= 1 << (bit % 8);
        self
    }
}

impl std::fmt::Debug for Key128 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // never print key material
        f.write_str("Key128(..)")
    }
}

/// Width of the truncated tag carried in credentials.
///
/// 64 bits is the deployed value; narrower widths exist so that forging
/// statistics become observable in desk-scale experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TagWidth(u32);

impl TagWidth {
    pub const FULL: TagWidth = TagWidth(64);

    pub fn new(bits: u32) -> Result<Self, AttachmentError> {
        match bits {
            16 | 32 | 48 | 64 => Ok(TagWidth(bits)),
            other => Err(AttachmentError::BadTagWidth(other)),
        }
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Size of the tag space, `2^bits`.
    pub fn range(self) -> f64 {
        2f64.powi(self.0 as i32)
    }

    fn mask(self) -> u64 {
        if self.0 == 64 {
            u64::MAX
        } else {
            (1u64 << self.0) - 1
        }
    }
}

impl Default for TagWidth {
    fn default() -> Self {
        Self::FULL
    }
}

/// Key snapshot held by a NAP for one epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MasterKeys {
    enc_key: Key128,
    root_tag_key: Key128,
    tag_key: Key128,
    epoch: u32,
    tag_width: TagWidth,
}

impl MasterKeys {
    pub fn new(enc_key: Key128, root_tag_key: Key128, epoch: u32) -> Self {
        Self {
            enc_key,
            root_tag_key,
            tag_key: derive_tag_key(&root_tag_key, epoch),
            epoch,
            tag_width: TagWidth::FULL,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let enc = Key128::random(rng);
        let root = Key128::random(rng);
        Self::new(enc, root, 0)
    }

    pub fn with_tag_width(mut self, width: TagWidth) -> Self {
        self.tag_width = width;
        self
    }

    /// Encryption key `k1`.
    pub fn enc_key(&self) -> &Key128 {
        &self.enc_key
    }

    /// Tag key `k2` for the current epoch.
    pub fn tag_key(&self) -> &Key128 {
        &self.tag_key
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn tag_width(&self) -> TagWidth {
        self.tag_width
    }

    /// Tag key that was or will be current at `epoch`.
    pub fn tag_key_at(&self, epoch: u32) -> Key128 {
        derive_tag_key(&self.root_tag_key, epoch)
    }
}

fn new_cmac(key: &Key128) -> Cmac<Aes128> {
    <Cmac<Aes128> as Mac>::new_from_slice(&key.0).expect("CMAC accepts 16-byte keys")
}

fn derive_tag_key(root: &Key128, epoch: u32) -> Key128 {
    let mut mac = new_cmac(root);
    mac.update(&epoch.to_be_bytes());
    Key128(mac.finalize().into_bytes().into())
}

/// AES-CBC ciphertext of a forwarding identifier; same length as the input.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncryptedFid(Vec<u8>);

impl EncryptedFid {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        EncryptedFid(bytes)
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut bytes = vec![0u8; len];
        rng.fill(&mut bytes[..]);
        EncryptedFid(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn flip(&mut self, bit: usize) {
        self.0[bit / 8] ^= 1 << (bit % 8);
    }
}

/// Truncated keyed tag. Narrow tags occupy the low bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tag(pub u64);

impl Tag {
    /// Keeps the `width` most significant bits.
    pub fn truncated(self, width: TagWidth) -> Tag {
        Tag(self.0 >> (64 - width.bits()))
    }

    pub fn random<R: Rng + ?Sized>(width: TagWidth, rng: &mut R) -> Tag {
        Tag(rng.gen::<u64>() & width.mask())
    }

    fn ct_eq(self, other: Tag) -> bool {
        self.0.to_be_bytes().ct_eq(&other.0.to_be_bytes()).into()
    }
}

/// What the NAP hands to a publisher and what the publisher puts in every
/// packet header.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Credential {
    pub efid: EncryptedFid,
    pub tag: Tag,
    pub epoch_hint: u32,
}

impl Credential {
    /// `efid || tag (8 bytes BE) || epoch_hint (4 bytes BE)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.efid.len() + CREDENTIAL_TRAILER_BYTES);
        out.extend_from_slice(self.efid.as_bytes());
        out.extend_from_slice(&self.tag.0.to_be_bytes());
        out.extend_from_slice(&self.epoch_hint.to_be_bytes());
        out
    }

    /// Parses a header for an `m`-bit identifier.
    pub fn from_bytes(bytes: &[u8], m: usize) -> Result<Self, AttachmentError> {
        let efid_len = m / 8;
        let expected = efid_len + CREDENTIAL_TRAILER_BYTES;
        if bytes.len() != expected {
            return Err(AttachmentError::LengthMismatch {
                expected,
                got: bytes.len(),
            });
        }
        let (efid, rest) = bytes.split_at(efid_len);
        let (tag, epoch) = rest.split_at(8);
        Ok(Credential {
            efid: EncryptedFid(efid.to_vec()),
            tag: Tag(u64::from_be_bytes(tag.try_into().unwrap())),
            epoch_hint: u32::from_be_bytes(epoch.try_into().unwrap()),
        })
    }

    /// Total number of bits covered by single-bit tamper tests:
    /// ciphertext bits followed by the 64 tag bits.
    pub fn tamperable_bits(&self) -> usize {
        self.efid.len() * 8 + 64
    }

    /// Copy with bit `i` flipped, indexing ciphertext bits first and then
    /// tag bits from least significant.
    pub fn with_bit_flipped(&self, i: usize) -> Credential {
        let mut out = self.clone();
        let efid_bits = self.efid.len() * 8;
        if i < efid_bits {
            out.efid.flip(i);
        } else {
            out.tag.0 ^= 1 << (i - efid_bits);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// Tag does not verify under the current `k2`.
    BadTag,
    /// Tag verifies only under an expired epoch key.
    StaleEpoch,
    /// Ciphertext has the wrong length for this domain.
    Malformed,
    /// Ingress packet carried no credential.
    MissingCredential,
    /// Decrypted identifier exceeds the NAP's optional fill cap.
    OverFilled,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RejectReason::BadTag => "bad tag",
            RejectReason::StaleEpoch => "stale epoch",
            RejectReason::Malformed => "malformed credential",
            RejectReason::MissingCredential => "missing credential",
            RejectReason::OverFilled => "forwarding identifier over fill cap",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    Accept(ForwardingId),
    Reject(RejectReason),
}

impl CheckOutcome {
    pub fn is_accept(&self) -> bool {
        matches!(self, CheckOutcome::Accept(_))
    }
}

type CbcEnc = cbc::Encryptor<Aes128>;
type CbcDec = cbc::Decryptor<Aes128>;

const ZERO_IV: [u8; 16] = [0; 16];

fn cbc_encrypt(buf: &mut [u8], k1: &Key128) {
    let len = buf.len();
    CbcEnc::new(&k1.0.into(), &ZERO_IV.into())
        .encrypt_padded_mut::<NoPadding>(buf, len)
        .expect("block-aligned buffer");
}

fn cbc_decrypt(buf: &mut [u8], k1: &Key128) {
    CbcDec::new(&k1.0.into(), &ZERO_IV.into())
        .decrypt_padded_mut::<NoPadding>(buf)
        .expect("block-aligned buffer");
}

fn reverse_blocks(buf: &mut [u8]) {
    let n = buf.len() / 16;
    for i in 0..n / 2 {
        let (head, tail) = buf.split_at_mut((n - 1 - i) * 16);
        head[i * 16..(i + 1) * 16].swap_with_slice(&mut tail[..16]);
    }
}

/// CBC, reverse the block order, CBC again. Each pass alone leaves the
/// first ciphertext block a function of the first plaintext block only, so
/// identifiers sharing a prefix block would share ciphertext blocks.
pub fn encrypt_fid(fid: &ForwardingId, k1: &Key128) -> Result<EncryptedFid, AttachmentError> {
    let m = fid.width();
    if !m.is_multiple_of(BLOCK_BITS) {
        return Err(AttachmentError::BlockMisaligned(m));
    }
    let mut buf = fid.as_bytes().to_vec();
    cbc_encrypt(&mut buf, k1);
    reverse_blocks(&mut buf);
    cbc_encrypt(&mut buf, k1);
    Ok(EncryptedFid(buf))
}

/// Inverts [`encrypt_fid`]. `m` is the identifier width of the domain.
pub fn decrypt_fid(
    efid: &EncryptedFid,
    k1: &Key128,
    m: usize,
) -> Result<ForwardingId, AttachmentError> {
    if !m.is_multiple_of(BLOCK_BITS) {
        return Err(AttachmentError::BlockMisaligned(m));
    }
    if efid.len() != m / 8 {
        return Err(AttachmentError::LengthMismatch {
            expected: m / 8,
            got: efid.len(),
        });
    }
    let mut buf = efid.0.clone();
    cbc_decrypt(&mut buf, k1);
    reverse_blocks(&mut buf);
    cbc_decrypt(&mut buf, k1);
    Ok(ForwardingId::from_bytes(buf).expect("non-empty"))
}

/// Most significant 64 bits of AES-CMAC(k2, ciphertext).
pub fn compute_tag(efid: &EncryptedFid, k2: &Key128) -> Tag {
    let mut mac = new_cmac(k2);
    mac.update(efid.as_bytes());
    let full = mac.finalize().into_bytes();
    Tag(u64::from_be_bytes(full[..8].try_into().unwrap()))
}

pub fn issue_credential(
    fid: &ForwardingId,
    keys: &MasterKeys,
) -> Result<Credential, AttachmentError> {
    let efid = encrypt_fid(fid, &keys.enc_key)?;
    let tag = compute_tag(&efid, &keys.tag_key).truncated(keys.tag_width);
    Ok(Credential {
        efid,
        tag,
        epoch_hint: keys.epoch,
    })
}

/// Tag verification only; decides acceptance without decrypting.
pub fn verify_tag(cred: &Credential, keys: &MasterKeys) -> Result<(), RejectReason> {
    let expected = compute_tag(&cred.efid, &keys.tag_key).truncated(keys.tag_width);
    if expected.ct_eq(cred.tag) {
        return Ok(());
    }
    if cred.epoch_hint < keys.epoch {
        let old =
            compute_tag(&cred.efid, &keys.tag_key_at(cred.epoch_hint)).truncated(keys.tag_width);
        if old.ct_eq(cred.tag) {
            return Err(RejectReason::StaleEpoch);
        }
    }
    Err(RejectReason::BadTag)
}

/// Verifies the credential against the current epoch and, on success,
/// returns the plaintext forwarding identifier.
///
/// Acceptance depends only on the tag under the current `k2`. The epoch
/// hint is consulted solely to classify a rejection.
pub fn security_check(cred: &Credential, keys: &MasterKeys, m: usize) -> CheckOutcome {
    if cred.efid.len() * 8 != m {
        return CheckOutcome::Reject(RejectReason::Malformed);
    }
    if let Err(reason) = verify_tag(cred, keys) {
        return CheckOutcome::Reject(reason);
    }
    match decrypt_fid(&cred.efid, &keys.enc_key, m) {
        Ok(fid) => CheckOutcome::Accept(fid),
        Err(_) => CheckOutcome::Reject(RejectReason::Malformed),
    }
}

/// Advances to the next epoch. `k1` is kept; `k2` is re-derived.
pub fn rotate_key(keys: &MasterKeys) -> MasterKeys {
    let epoch = keys.epoch + 1;
    MasterKeys {
        tag_key: derive_tag_key(&keys.root_tag_key, epoch),
        epoch,
        ..keys.clone()
    }
}
