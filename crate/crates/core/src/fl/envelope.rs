//! Self-describing binary envelope for the three role-boundary message
//! schemas (broadcast, ciphertext upload, KDC unmask query/response).
//!
//! The simulator is in-process, but every message crosses role boundaries
//! through these encoders so the roles could be split across processes
//! without touching their APIs.

use std::collections::BTreeSet;

use super::weights::{RoundMetadata, WeightingMode};
use super::{GlobalModel, RoundBroadcast};
use crate::dfe::{CipherVector, ClientId, RoundUnmask};
use crate::error::{Error, Result};
use crate::matrix::{read_u32, read_u64, slice};
use crate::suite::{FieldElem, PairingSuite};

const ENVELOPE_MAGIC: &[u8; 4] = b"FME1";

const TAG_BROADCAST: u8 = 1;
const TAG_UPLOAD: u8 = 2;
const TAG_UNMASK_REQUEST: u8 = 3;
const TAG_UNMASK_RESPONSE: u8 = 4;

/// Every message that crosses a role boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum Message<P: PairingSuite> {
    /// Aggregator to clients (stage 1).
    Broadcast(RoundBroadcast),
    /// Client to aggregator (stage 3).
    Upload(CipherVector<P>),
    /// Aggregator to KDC: the declared participant set.
    UnmaskRequest {
        round_index: u64,
        participants: BTreeSet<ClientId>,
        vec_len: u64,
    },
    /// KDC to aggregator.
    UnmaskResponse(RoundUnmask<P>),
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn get_str(bytes: &[u8], pos: &mut usize) -> Result<String> {
    let len = read_u32(bytes, pos)? as usize;
    let raw = slice(bytes, pos, len)?;
    String::from_utf8(raw.to_vec()).map_err(|_| Error::Decode("string is not utf-8".into()))
}

fn put_ids<'a>(out: &mut Vec<u8>, ids: impl ExactSizeIterator<Item = &'a ClientId>) {
    out.extend_from_slice(&(ids.len() as u32).to_le_bytes());
    for id in ids {
        put_str(out, id.as_str());
    }
}

fn get_ids(bytes: &[u8], pos: &mut usize) -> Result<Vec<ClientId>> {
    let count = read_u32(bytes, pos)? as usize;
    (0..count)
        .map(|_| Ok(ClientId::new(get_str(bytes, pos)?)))
        .collect()
}

impl<P: PairingSuite> Message<P> {
    pub fn encode(&self) -> Vec<u8> {
        let (tag, payload) = match self {
            Message::Broadcast(b) => (TAG_BROADCAST, encode_broadcast(b)),
            Message::Upload(c) => (TAG_UPLOAD, c.to_bytes()),
            Message::UnmaskRequest {
                round_index,
                participants,
                vec_len,
            } => {
                let mut out = Vec::new();
                out.extend_from_slice(&round_index.to_le_bytes());
                put_ids(&mut out, participants.iter());
                out.extend_from_slice(&vec_len.to_le_bytes());
                (TAG_UNMASK_REQUEST, out)
            }
            Message::UnmaskResponse(u) => {
                let mut out = Vec::new();
                out.extend_from_slice(&u.round_index.to_le_bytes());
                put_ids(&mut out, u.participants.iter());
                out.extend_from_slice(&(u.lambda_sum.len() as u64).to_le_bytes());
                for s in &u.lambda_sum {
                    out.extend_from_slice(&s.to_bytes());
                }
                (TAG_UNMASK_RESPONSE, out)
            }
        };
        let mut out = Vec::with_capacity(4 + 1 + 8 + payload.len());
        out.extend_from_slice(ENVELOPE_MAGIC);
        out.push(tag);
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let magic = slice(bytes, &mut pos, 4)?;
        if magic != ENVELOPE_MAGIC {
            return Err(Error::Decode("envelope: bad magic".into()));
        }
        let tag = slice(bytes, &mut pos, 1)?[0];
        let len = read_u64(bytes, &mut pos)? as usize;
        let payload = slice(bytes, &mut pos, len)?;
        if pos != bytes.len() {
            return Err(Error::Decode("trailing bytes after envelope".into()));
        }
        match tag {
            TAG_BROADCAST => Ok(Message::Broadcast(decode_broadcast(payload)?)),
            TAG_UPLOAD => Ok(Message::Upload(CipherVector::from_bytes(payload)?)),
            TAG_UNMASK_REQUEST => {
                let mut p = 0usize;
                let round_index = read_u64(payload, &mut p)?;
                let participants = get_ids(payload, &mut p)?.into_iter().collect();
                let vec_len = read_u64(payload, &mut p)?;
                if p != payload.len() {
                    return Err(Error::Decode("trailing bytes in unmask request".into()));
                }
                Ok(Message::UnmaskRequest {
                    round_index,
                    participants,
                    vec_len,
                })
            }
            TAG_UNMASK_RESPONSE => {
                let mut p = 0usize;
                let round_index = read_u64(payload, &mut p)?;
                let participants: BTreeSet<ClientId> =
                    get_ids(payload, &mut p)?.into_iter().collect();
                let count = read_u64(payload, &mut p)? as usize;
                let mut lambda_sum = Vec::with_capacity(count);
                for _ in 0..count {
                    let raw = slice(payload, &mut p, P::Scalar::ENCODED_LEN)?;
                    lambda_sum.push(P::Scalar::from_bytes(raw)?);
                }
                if p != payload.len() {
                    return Err(Error::Decode("trailing bytes in unmask response".into()));
                }
                Ok(Message::UnmaskResponse(RoundUnmask {
                    round_index,
                    participants,
                    lambda_sum,
                }))
            }
            other => Err(Error::Decode(format!("unknown envelope tag {other}"))),
        }
    }
}

fn encode_broadcast(b: &RoundBroadcast) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&b.global.round_index.to_le_bytes());
    out.extend_from_slice(&(b.global.weights.len() as u64).to_le_bytes());
    for w in &b.global.weights {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out.extend_from_slice(&b.meta.round_index.to_le_bytes());
    put_ids(&mut out, b.meta.participants.iter());
    for s in &b.meta.data_sizes {
        out.extend_from_slice(&s.to_le_bytes());
    }
    for f in &b.meta.frequencies {
        out.extend_from_slice(&f.to_le_bytes());
    }
    out.extend_from_slice(&b.meta.gamma.to_le_bytes());
    out.push(match b.weighting {
        WeightingMode::Balanced => 0,
        WeightingMode::SizeOnly => 1,
    });
    out
}

fn decode_broadcast(payload: &[u8]) -> Result<RoundBroadcast> {
    let mut p = 0usize;
    let model_round = read_u64(payload, &mut p)?;
    let dim = read_u64(payload, &mut p)? as usize;
    let mut weights = Vec::with_capacity(dim);
    for _ in 0..dim {
        let raw = slice(payload, &mut p, 8)?;
        weights.push(f64::from_le_bytes(raw.try_into().unwrap()));
    }
    let round_index = read_u64(payload, &mut p)?;
    let participants = get_ids(payload, &mut p)?;
    let mut data_sizes = Vec::with_capacity(participants.len());
    for _ in 0..participants.len() {
        data_sizes.push(read_u64(payload, &mut p)?);
    }
    let mut frequencies = Vec::with_capacity(participants.len());
    for _ in 0..participants.len() {
        frequencies.push(read_u64(payload, &mut p)?);
    }
    let gamma = read_u64(payload, &mut p)?;
    let weighting = match slice(payload, &mut p, 1)?[0] {
        0 => WeightingMode::Balanced,
        1 => WeightingMode::SizeOnly,
        other => {
            return Err(Error::Decode(format!("unknown weighting mode {other}")));
        }
    };
    if p != payload.len() {
        return Err(Error::Decode("trailing bytes in broadcast".into()));
    }
    Ok(RoundBroadcast {
        global: GlobalModel {
            round_index: model_round,
            weights,
        },
        meta: RoundMetadata {
            round_index,
            participants,
            data_sizes,
            frequencies,
            gamma,
        },
        weighting,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfe::{encrypt, setup, Kdc};
    use crate::quant::{quantize, QuantScheme};
    use crate::toy::Toy61;

    fn broadcast() -> RoundBroadcast {
        RoundBroadcast {
            global: GlobalModel {
                round_index: 3,
                weights: vec![0.25, -1.5, 3.75],
            },
            meta: RoundMetadata {
                round_index: 4,
                participants: vec![ClientId::from("msms-0"), ClientId::from("msms-1")],
                data_sizes: vec![120, 240],
                frequencies: vec![3, 2],
                gamma: 4,
            },
            weighting: WeightingMode::Balanced,
        }
    }

    #[test]
    fn broadcast_round_trips() {
        let msg: Message<Toy61> = Message::Broadcast(broadcast());
        let bytes = msg.encode();
        assert_eq!(Message::<Toy61>::decode(&bytes).unwrap(), msg);
    }

    #[test]
    fn upload_and_unmask_round_trip() {
        let (_, ms) = setup::<Toy61>(0, 2, 9).unwrap();
        let mut kdc = Kdc::new(ms);
        let ck = kdc.keygen_client("msms-0").unwrap();
        let scheme = QuantScheme::default();
        let cipher = encrypt(&ck, &quantize(&[0.5, -0.5, 1.0], &scheme), 4).unwrap();

        let upload: Message<Toy61> = Message::Upload(cipher);
        assert_eq!(Message::<Toy61>::decode(&upload.encode()).unwrap(), upload);

        let participants: BTreeSet<ClientId> = [ClientId::from("msms-0")].into_iter().collect();
        let req: Message<Toy61> = Message::UnmaskRequest {
            round_index: 4,
            participants: participants.clone(),
            vec_len: 3,
        };
        assert_eq!(Message::<Toy61>::decode(&req.encode()).unwrap(), req);

        let unmask = kdc.round_unmask(4, &participants, 3).unwrap();
        let resp: Message<Toy61> = Message::UnmaskResponse(unmask);
        assert_eq!(Message::<Toy61>::decode(&resp.encode()).unwrap(), resp);
    }

    #[test]
    fn malformed_envelopes_are_rejected() {
        let msg: Message<Toy61> = Message::Broadcast(broadcast());
        let bytes = msg.encode();
        assert!(Message::<Toy61>::decode(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong_tag = bytes.clone();
        wrong_tag[4] = 99;
        assert!(Message::<Toy61>::decode(&wrong_tag).is_err());
    }
}
