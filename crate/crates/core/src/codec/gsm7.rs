//! GSM 7-bit default alphabet and septet packing.
//!
//! Septets are packed LSB-first: septet `i` occupies bits `7*i .. 7*i+7` of the
//! little-endian bit stream formed by the output octets.

use super::CodecError;

/// The 128 code points of the GSM 7-bit default alphabet, indexed by septet value.
///
/// 0x1B is the escape to the extension table; on its own it is mapped to a
/// no-break space, which is the conventional display for an unhandled escape.
pub const DEFAULT_ALPHABET: [char; 128] = [
    '@', '£', '$', '¥', 'è', 'é', 'ù', 'ì', 'ò', 'Ç', '\n', 'Ø', 'ø', '\r', 'Å', 'å', //
    'Δ', '_', 'Φ', 'Γ', 'Λ', 'Ω', 'Π', 'Ψ', 'Σ', 'Θ', 'Ξ', '\u{00A0}', 'Æ', 'æ', 'ß', 'É', //
    ' ', '!', '"', '#', '¤', '%', '&', '\'', '(', ')', '*', '+', ',', '-', '.', '/', //
    '0', '1', '2', '3', '4', '5', '6', '7', '8', '9', ':', ';', '<', '=', '>', '?', //
    '¡', 'A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J', 'K', 'L', 'M', 'N', 'O', //
    'P', 'Q', 'R', 'S', 'T', 'U', 'V', 'W', 'X', 'Y', 'Z', 'Ä', 'Ö', 'Ñ', 'Ü', '§', //
    '¿', 'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', //
    'p', 'q', 'r', 's', 't', 'u', 'v', 'w', 'x', 'y', 'z', 'ä', 'ö', 'ñ', 'ü', 'à', //
];

/// Carriage return septet, used as page padding.
pub const CR: u8 = 0x0D;

/// Septet value for `ch`, if it is in the default alphabet.
pub fn septet_for(ch: char) -> Option<u8> {
    // ASCII letters and digits map to themselves; everything else goes through the table.
    if ch.is_ascii_alphanumeric() {
        return Some(ch as u8);
    }
    DEFAULT_ALPHABET
        .iter()
        .position(|&c| c == ch)
        .map(|p| p as u8)
}

pub fn is_gsm7(text: &str) -> bool {
    text.chars().all(|c| septet_for(c).is_some())
}

/// Map every character of `text` to its septet value.
pub fn to_septets(text: &str) -> Result<Vec<u8>, CodecError> {
    text.chars()
        .enumerate()
        .map(|(index, ch)| septet_for(ch).ok_or(CodecError::UnencodableCharacter { index, ch }))
        .collect()
}

/// Pack septets LSB-first. Output length is `ceil(7 * n / 8)`.
pub fn pack_septets(septets: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; (septets.len() * 7).div_ceil(8)];
    for (i, &s) in septets.iter().enumerate() {
        let bit = i * 7;
        let (byte, shift) = (bit / 8, bit % 8);
        let s = u16::from(s & 0x7F) << shift;
        out[byte] |= s as u8;
        if shift > 1 {
            out[byte + 1] |= (s >> 8) as u8;
        }
    }
    out
}

/// Unpack `count` septets from LSB-first packed octets.
pub fn unpack_septets(octets: &[u8], count: usize) -> Vec<u8> {
    (0..count)
        .map(|i| {
            let bit = i * 7;
            let (byte, shift) = (bit / 8, bit % 8);
            let lo = u16::from(octets.get(byte).copied().unwrap_or(0));
            let hi = u16::from(octets.get(byte + 1).copied().unwrap_or(0));
            (((hi << 8 | lo) >> shift) & 0x7F) as u8
        })
        .collect()
}

/// Encode `text` as packed GSM 7-bit septets.
pub fn encode_gsm7(text: &str) -> Result<Vec<u8>, CodecError> {
    Ok(pack_septets(&to_septets(text)?))
}

/// Decode `count` packed septets back into text.
pub fn decode_gsm7(octets: &[u8], count: usize) -> String {
    unpack_septets(octets, count)
        .into_iter()
        .map(|s| DEFAULT_ALPHABET[usize::from(s)])
        .collect()
}
