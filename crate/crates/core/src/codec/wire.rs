//! SIB8 segment framing (big-endian):
//!
//! ```text
//! [message_identifier:2][serial_number:2][flags:1][dcs:1 iff flags.bit1]
//! [segment_number:2][payload_len:2][reserved:2][payload:payload_len]
//! ```
//!
//! `flags` bit 0 is `is_last`, bit 1 is `dcs_present`.

use serde::{Deserialize, Serialize};

use super::{CodecError, MAX_SI_OCTETS};

const FLAG_LAST: u8 = 0x01;
const FLAG_DCS: u8 = 0x02;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sib8Segment {
    pub message_identifier: u16,
    pub serial_number: u16,
    /// Present on segment 0 only.
    pub dcs: Option<u8>,
    pub segment_number: u16,
    pub is_last: bool,
    #[serde(with = "hex_vec")]
    pub segment_bytes: Vec<u8>,
}

impl Sib8Segment {
    pub fn key(&self) -> (u16, u16) {
        (self.message_identifier, self.serial_number)
    }

    pub fn framed_len(&self) -> usize {
        11 + usize::from(self.dcs.is_some()) + self.segment_bytes.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.framed_len());
        out.extend_from_slice(&self.message_identifier.to_be_bytes());
        out.extend_from_slice(&self.serial_number.to_be_bytes());
        let mut flags = 0;
        if self.is_last {
            flags |= FLAG_LAST;
        }
        if self.dcs.is_some() {
            flags |= FLAG_DCS;
        }
        out.push(flags);
        if let Some(dcs) = self.dcs {
            out.push(dcs);
        }
        out.extend_from_slice(&self.segment_number.to_be_bytes());
        out.extend_from_slice(&(self.segment_bytes.len() as u16).to_be_bytes());
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&self.segment_bytes);
        out
    }

    pub fn decode(body: &[u8]) -> Result<Self, CodecError> {
        let short = || CodecError::Malformed(format!("segment frame of {} octets", body.len()));
        let u16_at = |at: usize| -> Result<u16, CodecError> {
            body.get(at..at + 2)
                .map(|b| u16::from_be_bytes([b[0], b[1]]))
                .ok_or_else(short)
        };
        let flags = *body.get(4).ok_or_else(short)?;
        if flags & !(FLAG_LAST | FLAG_DCS) != 0 {
            return Err(CodecError::Malformed(format!("unknown flag bits 0x{flags:02x}")));
        }
        let (dcs, at) = if flags & FLAG_DCS != 0 {
            (Some(*body.get(5).ok_or_else(short)?), 6)
        } else {
            (None, 5)
        };
        let segment_number = u16_at(at)?;
        let payload_len = usize::from(u16_at(at + 2)?);
        let payload = &body[(at + 6).min(body.len())..];
        if payload.len() != payload_len {
            return Err(CodecError::Malformed(format!(
                "payload_len {payload_len} but {} octets follow",
                payload.len()
            )));
        }
        Ok(Self {
            message_identifier: u16_at(0)?,
            serial_number: u16_at(2)?,
            dcs,
            segment_number,
            is_last: flags & FLAG_LAST != 0,
            segment_bytes: payload.to_vec(),
        })
    }
}

/// One SI message carrying exactly one framed SIB8 segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiMessage {
    pub si_index: u8,
    pub body: Vec<u8>,
}

impl SiMessage {
    pub fn new(si_index: u8, segment: &Sib8Segment) -> Result<Self, CodecError> {
        let body = segment.encode();
        if body.len() > MAX_SI_OCTETS {
            return Err(CodecError::SiOverflow { len: body.len() });
        }
        Ok(Self { si_index, body })
    }

    pub fn segment(&self) -> Result<Sib8Segment, CodecError> {
        Sib8Segment::decode(&self.body)
    }
}

/// Lowercase hex, space-separated octets.
pub fn hex_dump(bytes: &[u8]) -> String {
    bytes
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_hex_dump(text: &str) -> Result<Vec<u8>, CodecError> {
    text.split_whitespace()
        .map(|tok| {
            if tok.len() != 2 {
                return Err(CodecError::Malformed(format!("hex token {tok:?}")));
            }
            u8::from_str_radix(tok, 16).map_err(|_| CodecError::Malformed(format!("hex token {tok:?}")))
        })
        .collect()
}

mod hex_vec {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(data: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(data))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        hex::decode(String::deserialize(d)?).map_err(D::Error::custom)
    }
}
