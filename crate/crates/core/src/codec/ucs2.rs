//! UCS2: big-endian 16-bit code units, Basic Multilingual Plane only.

use super::CodecError;

pub fn encode_ucs2(text: &str) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::with_capacity(text.len() * 2);
    for (index, ch) in text.chars().enumerate() {
        let unit = u16::try_from(u32::from(ch)).map_err(|_| CodecError::OutOfPlane { index, ch })?;
        out.extend_from_slice(&unit.to_be_bytes());
    }
    Ok(out)
}

/// Decode big-endian units. Surrogate code units (which cannot come out of
/// [`encode_ucs2`]) decode to U+FFFD.
pub fn decode_ucs2(octets: &[u8]) -> String {
    octets
        .chunks_exact(2)
        .map(|u| char::from_u32(u32::from(u16::from_be_bytes([u[0], u[1]]))).unwrap_or('\u{FFFD}'))
        .collect()
}
