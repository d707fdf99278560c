//! Wire format for ciphertexts and on-disk format for key material.
//!
//! Ciphertext layout: a fixed header (client id, round index, chunk
//! dimension, pre-padding length, chunk count) followed by the chunks, each
//! of which is 2n length-prefixed compressed group elements. Key files carry
//! the suite identifier so a toy-field key can never be loaded into a curve
//! run.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::scheme::{AggregationKey, CipherChunk, CipherVector, ClientKey, MasterSecret};
use super::ClientId;
use crate::error::{Error, Result};
use crate::matrix::{read_u32, read_u64, slice, FieldMatrix};
use crate::suite::{GroupElem, PairingSuite};

const CIPHER_MAGIC: &[u8; 4] = b"FMC1";
const MASTER_MAGIC: &[u8; 4] = b"FMS1";
const CLIENT_KEY_MAGIC: &[u8; 4] = b"FMK1";
const AGG_KEY_MAGIC: &[u8; 4] = b"FMA1";

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn get_str(bytes: &[u8], pos: &mut usize) -> Result<String> {
    let len = read_u32(bytes, pos)? as usize;
    let raw = slice(bytes, pos, len)?;
    String::from_utf8(raw.to_vec()).map_err(|_| Error::Decode("string is not utf-8".into()))
}

fn check_magic(bytes: &[u8], pos: &mut usize, magic: &[u8; 4], what: &str) -> Result<()> {
    let raw = slice(bytes, pos, 4)?;
    if raw != magic {
        return Err(Error::Decode(format!("{what}: bad magic")));
    }
    Ok(())
}

fn check_suite<P: PairingSuite>(bytes: &[u8], pos: &mut usize, what: &str) -> Result<()> {
    let suite = get_str(bytes, pos)?;
    if suite != P::NAME {
        return Err(Error::Decode(format!(
            "{what} was produced for suite {suite:?}, not {:?}",
            P::NAME
        )));
    }
    Ok(())
}

fn put_element<G: GroupElem>(out: &mut Vec<u8>, e: &G) {
    let bytes = e.to_bytes();
    out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(&bytes);
}

fn get_element<G: GroupElem>(bytes: &[u8], pos: &mut usize) -> Result<G> {
    let len = read_u32(bytes, pos)? as usize;
    G::from_bytes(slice(bytes, pos, len)?)
}

impl<P: PairingSuite> CipherVector<P> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(cipher_wire_size::<P>(
            self.chunk_dim(),
            self.len,
            self.client_id.as_str().len(),
        ));
        out.extend_from_slice(CIPHER_MAGIC);
        put_str(&mut out, P::NAME);
        put_str(&mut out, self.client_id.as_str());
        out.extend_from_slice(&self.round_index.to_le_bytes());
        out.extend_from_slice(&(self.chunk_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(self.len as u64).to_le_bytes());
        out.extend_from_slice(&(self.chunks.len() as u32).to_le_bytes());
        for chunk in &self.chunks {
            for e in &chunk.half1 {
                put_element(&mut out, e);
            }
            for e in &chunk.half2 {
                put_element(&mut out, e);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        check_magic(bytes, &mut pos, CIPHER_MAGIC, "ciphertext")?;
        check_suite::<P>(bytes, &mut pos, "ciphertext")?;
        let client_id = ClientId::new(get_str(bytes, &mut pos)?);
        let round_index = read_u64(bytes, &mut pos)?;
        let n = read_u32(bytes, &mut pos)? as usize;
        let len = read_u64(bytes, &mut pos)? as usize;
        let chunk_count = read_u32(bytes, &mut pos)? as usize;
        if n == 0 || len == 0 || chunk_count != len.div_ceil(n) {
            return Err(Error::Decode(format!(
                "ciphertext header inconsistent: n={n}, len={len}, chunks={chunk_count}"
            )));
        }
        let mut chunks = Vec::with_capacity(chunk_count);
        for _ in 0..chunk_count {
            let mut half1 = Vec::with_capacity(n);
            for _ in 0..n {
                half1.push(get_element::<P::G2>(bytes, &mut pos)?);
            }
            let mut half2 = Vec::with_capacity(n);
            for _ in 0..n {
                half2.push(get_element::<P::G2>(bytes, &mut pos)?);
            }
            chunks.push(CipherChunk { half1, half2 });
        }
        if pos != bytes.len() {
            return Err(Error::Decode("trailing bytes after ciphertext".into()));
        }
        Ok(CipherVector {
            client_id,
            round_index,
            len,
            chunks,
        })
    }
}

/// Exact serialized size of a ciphertext, mirroring [`CipherVector::to_bytes`].
/// The measured-bytes accounting uses this mirror so metrics can be derived
/// without materializing every ciphertext twice.
pub fn cipher_wire_size<P: PairingSuite>(
    chunk_dim: usize,
    vec_len: usize,
    client_id_bytes: usize,
) -> usize {
    let chunks = vec_len.div_ceil(chunk_dim);
    let header = 4                       // magic
        + 4 + P::NAME.len()              // suite
        + 4 + client_id_bytes            // client id
        + 8 + 4 + 8 + 4; // round, n, len, chunk count
    header + chunks * 2 * chunk_dim * (4 + P::G2::ENCODED_LEN)
}

/// Short hex digest used to identify key files in logs and run manifests
/// without exposing key material.
pub fn fingerprint(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

impl<P: PairingSuite> MasterSecret<P> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MASTER_MAGIC);
        put_str(&mut out, P::NAME);
        out.extend_from_slice(&(self.chunk_dim as u32).to_le_bytes());
        out.extend_from_slice(&self.round_mask_seed);
        out.extend_from_slice(&self.issue_seed);
        out.extend_from_slice(&self.b.to_bytes(P::NAME));
        out.extend_from_slice(&self.a1.to_bytes(P::NAME));
        out.extend_from_slice(&self.a2.to_bytes(P::NAME));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        check_magic(bytes, &mut pos, MASTER_MAGIC, "master secret")?;
        check_suite::<P>(bytes, &mut pos, "master secret")?;
        let chunk_dim = read_u32(bytes, &mut pos)? as usize;
        let round_mask_seed: [u8; 32] = slice(bytes, &mut pos, 32)?.try_into().unwrap();
        let issue_seed: [u8; 32] = slice(bytes, &mut pos, 32)?.try_into().unwrap();
        let (b, used) = FieldMatrix::from_bytes(&bytes[pos..], P::NAME)?;
        pos += used;
        let (a1, used) = FieldMatrix::from_bytes(&bytes[pos..], P::NAME)?;
        pos += used;
        let (a2, used) = FieldMatrix::from_bytes(&bytes[pos..], P::NAME)?;
        pos += used;
        if pos != bytes.len() {
            return Err(Error::Decode("trailing bytes after master secret".into()));
        }
        let ms = MasterSecret::from_matrices(b, a1, a2, round_mask_seed, issue_seed)?;
        if ms.chunk_dim() != chunk_dim {
            return Err(Error::Decode("master secret dimension header mismatch".into()));
        }
        Ok(ms)
    }
}

impl<P: PairingSuite> ClientKey<P> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CLIENT_KEY_MAGIC);
        put_str(&mut out, P::NAME);
        put_str(&mut out, self.client_id.as_str());
        out.extend_from_slice(&self.mask_seed);
        out.extend_from_slice(&self.half1.to_bytes(P::NAME));
        out.extend_from_slice(&self.half2.to_bytes(P::NAME));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        check_magic(bytes, &mut pos, CLIENT_KEY_MAGIC, "client key")?;
        check_suite::<P>(bytes, &mut pos, "client key")?;
        let client_id = ClientId::new(get_str(bytes, &mut pos)?);
        let mask_seed: [u8; 32] = slice(bytes, &mut pos, 32)?.try_into().unwrap();
        let (half1, used) = FieldMatrix::from_bytes(&bytes[pos..], P::NAME)?;
        pos += used;
        let (half2, used) = FieldMatrix::from_bytes(&bytes[pos..], P::NAME)?;
        pos += used;
        if pos != bytes.len() {
            return Err(Error::Decode("trailing bytes after client key".into()));
        }
        Ok(ClientKey {
            client_id,
            half1,
            half2,
            mask_seed,
        })
    }
}

impl<P: PairingSuite> AggregationKey<P> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(AGG_KEY_MAGIC);
        put_str(&mut out, P::NAME);
        out.extend_from_slice(&self.half1.to_bytes(P::NAME));
        out.extend_from_slice(&self.half2.to_bytes(P::NAME));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        check_magic(bytes, &mut pos, AGG_KEY_MAGIC, "aggregation key")?;
        check_suite::<P>(bytes, &mut pos, "aggregation key")?;
        let (half1, used) = FieldMatrix::from_bytes(&bytes[pos..], P::NAME)?;
        pos += used;
        let (half2, used) = FieldMatrix::from_bytes(&bytes[pos..], P::NAME)?;
        pos += used;
        if pos != bytes.len() {
            return Err(Error::Decode("trailing bytes after aggregation key".into()));
        }
        Ok(AggregationKey { half1, half2 })
    }
}

/// Write the master secret KDC-local with owner-only permissions.
pub fn save_master_secret<P: PairingSuite>(ms: &MasterSecret<P>, path: &Path) -> Result<String> {
    let bytes = ms.to_bytes();
    fs::write(path, &bytes)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(path, fs::Permissions::from_mode(0o600))?;
    }
    Ok(fingerprint(&bytes))
}

pub fn load_master_secret<P: PairingSuite>(path: &Path) -> Result<MasterSecret<P>> {
    MasterSecret::from_bytes(&fs::read(path)?)
}

pub fn save_client_key<P: PairingSuite>(key: &ClientKey<P>, path: &Path) -> Result<String> {
    let bytes = key.to_bytes();
    fs::write(path, &bytes)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(path, fs::Permissions::from_mode(0o600))?;
    }
    Ok(fingerprint(&bytes))
}

pub fn load_client_key<P: PairingSuite>(path: &Path) -> Result<ClientKey<P>> {
    ClientKey::from_bytes(&fs::read(path)?)
}

pub fn save_aggregation_key<P: PairingSuite>(
    key: &AggregationKey<P>,
    path: &Path,
) -> Result<String> {
    let bytes = key.to_bytes();
    fs::write(path, &bytes)?;
    Ok(fingerprint(&bytes))
}

pub fn load_aggregation_key<P: PairingSuite>(path: &Path) -> Result<AggregationKey<P>> {
    AggregationKey::from_bytes(&fs::read(path)?)
}
