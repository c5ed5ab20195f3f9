//! Cell broadcast warning codec.
//!
//! A [`WarningPayload`] is encoded into up to 15 CBS pages of 82 octets
//! ([`paginate`]), the pages are serialized as 83-octet page blocks
//! (`used_length` octet followed by the 82 data octets) and sliced into SIB8
//! segments ([`segment`]) whose framed form fits one SI message. The UE side
//! runs the inverse: [`reassemble`] then [`decode_text`].
//!
//! GSM 7-bit pages hold 93 characters, UCS2 pages 41. Final pages are padded
//! with carriage returns (the CR septet, or the 0x000D unit). For GSM 7-bit a
//! page ending on a character count that is a multiple of 8 is ambiguous with
//! one character less plus a CR pad septet; when the genuine last character is
//! a CR in that position, the top spare bit of the page (bit 7 of octet 81,
//! past the 93rd septet and always outside `used_length`) is set.

pub mod gsm7;
pub mod ucs2;
pub mod wire;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use gsm7::{decode_gsm7, encode_gsm7};
pub use ucs2::{decode_ucs2, encode_ucs2};
pub use wire::{hex_dump, parse_hex_dump, SiMessage, Sib8Segment};

/// User data octets per CBS page.
pub const PAGE_DATA_LEN: usize = 82;
/// Serialized page block: one `used_length` octet plus the page data.
pub const PAGE_BLOCK_LEN: usize = PAGE_DATA_LEN + 1;
pub const MAX_PAGES: usize = 15;
/// Maximum SI message size in octets (2976 bits).
pub const MAX_SI_OCTETS: usize = 372;
/// Framing budget reserved per segment.
pub const FRAMING_OVERHEAD: usize = 12;
pub const GSM7_CHARS_PER_PAGE: usize = 93;
pub const UCS2_CHARS_PER_PAGE: usize = 41;

pub const DCS_GSM7: u8 = 0x01;
pub const DCS_UCS2: u8 = 0x48;

const GSM7_MARKER_OCTET: usize = PAGE_DATA_LEN - 1;
const GSM7_MARKER_BIT: u8 = 0x80;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("character {ch:?} at index {index} has no GSM 7-bit mapping")]
    UnencodableCharacter { index: usize, ch: char },
    #[error("character {ch:?} at index {index} is outside the Basic Multilingual Plane")]
    OutOfPlane { index: usize, ch: char },
    #[error("warning text is empty")]
    EmptyText,
    #[error("message needs {pages} pages, at most {MAX_PAGES} allowed")]
    MessageTooLong { pages: usize },
    #[error("SI budget of {budget} octets cannot carry one page block plus framing")]
    BudgetTooSmall { budget: usize },
    #[error("incomplete warning, missing segments {missing:?}")]
    Incomplete { missing: Vec<u16> },
    #[error("two different segments claim number {segment_number}")]
    ConflictingSegments { segment_number: u16 },
    #[error("segments belong to different warnings")]
    MismatchedSegments,
    #[error("unknown data coding scheme 0x{0:02x}")]
    UnknownDcs(u8),
    #[error("reassembled warning has {pages} pages, at most {MAX_PAGES} allowed")]
    TooManyPages { pages: usize },
    #[error("SI message body of {len} octets exceeds {MAX_SI_OCTETS}")]
    SiOverflow { len: usize },
    #[error("malformed data: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coding {
    Gsm7,
    Ucs2,
}

impl Coding {
    pub fn dcs(self) -> u8 {
        match self {
            Coding::Gsm7 => DCS_GSM7,
            Coding::Ucs2 => DCS_UCS2,
        }
    }

    pub fn from_dcs(dcs: u8) -> Result<Self, CodecError> {
        match dcs {
            DCS_GSM7 => Ok(Coding::Gsm7),
            DCS_UCS2 => Ok(Coding::Ucs2),
            other => Err(CodecError::UnknownDcs(other)),
        }
    }

    pub fn chars_per_page(self) -> usize {
        match self {
            Coding::Gsm7 => GSM7_CHARS_PER_PAGE,
            Coding::Ucs2 => UCS2_CHARS_PER_PAGE,
        }
    }

    /// GSM 7-bit when every character is in the default alphabet, UCS2 otherwise.
    pub fn detect(text: &str) -> Self {
        if gsm7::is_gsm7(text) {
            Coding::Gsm7
        } else {
            Coding::Ucs2
        }
    }
}

/// The logical warning an operator composes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarningPayload {
    pub message_identifier: u16,
    pub serial_number: u16,
    pub coding: Coding,
    pub text: String,
}

impl WarningPayload {
    pub fn new(message_identifier: u16, serial_number: u16, coding: Coding, text: impl Into<String>) -> Self {
        Self {
            message_identifier,
            serial_number,
            coding,
            text: text.into(),
        }
    }

    /// Pick the coding from the text.
    pub fn auto(message_identifier: u16, serial_number: u16, text: impl Into<String>) -> Self {
        let text = text.into();
        Self::new(message_identifier, serial_number, Coding::detect(&text), text)
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        if self.text.is_empty() {
            return Err(CodecError::EmptyText);
        }
        match self.coding {
            Coding::Gsm7 => gsm7::to_septets(&self.text).map(drop)?,
            Coding::Ucs2 => ucs2::encode_ucs2(&self.text).map(drop)?,
        }
        match self.page_count() {
            pages if pages > MAX_PAGES => Err(CodecError::MessageTooLong { pages }),
            _ => Ok(()),
        }
    }

    pub fn page_count(&self) -> usize {
        self.text.chars().count().div_ceil(self.coding.chars_per_page())
    }
}

/// One 82-octet CBS page. Octets past `used_length` are padding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedPage {
    #[serde(with = "hex_array")]
    pub data: [u8; PAGE_DATA_LEN],
    pub used_length: u8,
}

impl EncodedPage {
    pub fn used(&self) -> &[u8] {
        &self.data[..usize::from(self.used_length)]
    }

    fn to_block(&self, out: &mut Vec<u8>) {
        out.push(self.used_length);
        out.extend_from_slice(&self.data);
    }

    fn from_block(block: &[u8]) -> Result<Self, CodecError> {
        let used_length = block[0];
        if used_length == 0 || usize::from(used_length) > PAGE_DATA_LEN {
            return Err(CodecError::Malformed(format!("page used_length {used_length}")));
        }
        let mut data = [0u8; PAGE_DATA_LEN];
        data.copy_from_slice(&block[1..PAGE_BLOCK_LEN]);
        Ok(Self { data, used_length })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedWarning {
    pub message_identifier: u16,
    pub serial_number: u16,
    pub dcs: u8,
    pub pages: Vec<EncodedPage>,
}

impl EncodedWarning {
    /// Serialized page blocks, 83 octets per page.
    pub fn page_blocks(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pages.len() * PAGE_BLOCK_LEN);
        for page in &self.pages {
            page.to_block(&mut out);
        }
        out
    }

    /// `identifier ‖ serial ‖ dcs ‖ page data truncated to used_length`.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + self.pages.len() * PAGE_DATA_LEN);
        out.extend_from_slice(&self.message_identifier.to_be_bytes());
        out.extend_from_slice(&self.serial_number.to_be_bytes());
        out.push(self.dcs);
        for page in &self.pages {
            out.extend_from_slice(page.used());
        }
        out
    }
}

fn gsm7_page(chars: &[char]) -> Result<EncodedPage, CodecError> {
    let mut septets = Vec::with_capacity(GSM7_CHARS_PER_PAGE);
    for (index, &ch) in chars.iter().enumerate() {
        septets.push(gsm7::septet_for(ch).ok_or(CodecError::UnencodableCharacter { index, ch })?);
    }
    let n = septets.len();
    let genuine_trailing_cr = n % 8 == 0 && n < GSM7_CHARS_PER_PAGE && septets.last() == Some(&gsm7::CR);
    septets.resize(GSM7_CHARS_PER_PAGE, gsm7::CR);

    let mut data = [0u8; PAGE_DATA_LEN];
    data.copy_from_slice(&gsm7::pack_septets(&septets));
    if genuine_trailing_cr {
        data[GSM7_MARKER_OCTET] |= GSM7_MARKER_BIT;
    }
    Ok(EncodedPage {
        data,
        used_length: (n * 7).div_ceil(8) as u8,
    })
}

fn ucs2_page(chars: &[char]) -> Result<EncodedPage, CodecError> {
    let text: String = chars.iter().collect();
    let units = ucs2::encode_ucs2(&text)?;
    let mut data = [0u8; PAGE_DATA_LEN];
    data[..units.len()].copy_from_slice(&units);
    for pad in data[units.len()..].chunks_exact_mut(2) {
        pad.copy_from_slice(&[0x00, 0x0D]);
    }
    Ok(EncodedPage {
        data,
        used_length: units.len() as u8,
    })
}

/// Encode the payload text and split it greedily into 82-octet pages.
pub fn paginate(payload: &WarningPayload) -> Result<EncodedWarning, CodecError> {
    payload.validate()?;
    let chars: Vec<char> = payload.text.chars().collect();
    let pages = chars
        .chunks(payload.coding.chars_per_page())
        .map(|chunk| match payload.coding {
            Coding::Gsm7 => gsm7_page(chunk),
            Coding::Ucs2 => ucs2_page(chunk),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EncodedWarning {
        message_identifier: payload.message_identifier,
        serial_number: payload.serial_number,
        dcs: payload.coding.dcs(),
        pages,
    })
}

/// Whole page blocks that fit one segment under `si_budget`.
pub fn pages_per_segment(si_budget: usize) -> Result<usize, CodecError> {
    match si_budget.checked_sub(FRAMING_OVERHEAD).map(|usable| usable / PAGE_BLOCK_LEN) {
        Some(n) if n > 0 => Ok(n),
        _ => Err(CodecError::BudgetTooSmall { budget: si_budget }),
    }
}

/// Slice the serialized page blocks into SIB8 segments, each fitting `si_budget`
/// once framed. Slices fall on page-block boundaries.
pub fn segment(warning: &EncodedWarning, si_budget: usize) -> Result<Vec<Sib8Segment>, CodecError> {
    let per_segment = pages_per_segment(si_budget)?;
    if warning.pages.is_empty() {
        return Err(CodecError::Malformed("warning without pages".into()));
    }
    let blocks = warning.page_blocks();
    let chunks: Vec<&[u8]> = blocks.chunks(per_segment * PAGE_BLOCK_LEN).collect();
    let last = chunks.len() - 1;
    Ok(chunks
        .into_iter()
        .enumerate()
        .map(|(i, bytes)| Sib8Segment {
            message_identifier: warning.message_identifier,
            serial_number: warning.serial_number,
            dcs: (i == 0).then_some(warning.dcs),
            segment_number: i as u16,
            is_last: i == last,
            segment_bytes: bytes.to_vec(),
        })
        .collect())
}

/// Rebuild the encoded warning from a set of its segments, in any order.
pub fn reassemble(segments: &[Sib8Segment]) -> Result<EncodedWarning, CodecError> {
    use std::collections::BTreeMap;

    let Some(first) = segments.first() else {
        return Err(CodecError::Incomplete { missing: vec![0] });
    };
    let key = (first.message_identifier, first.serial_number);
    let mut by_number: BTreeMap<u16, &Sib8Segment> = BTreeMap::new();
    for seg in segments {
        if (seg.message_identifier, seg.serial_number) != key {
            return Err(CodecError::MismatchedSegments);
        }
        if let Some(prev) = by_number.insert(seg.segment_number, seg) {
            if prev != seg {
                return Err(CodecError::ConflictingSegments {
                    segment_number: seg.segment_number,
                });
            }
        }
    }

    let max = *by_number.keys().next_back().expect("non-empty");
    let last = by_number.values().find(|s| s.is_last).map(|s| s.segment_number);
    if let Some(last) = last {
        if last != max {
            return Err(CodecError::Malformed(format!(
                "segment {max} follows last segment {last}"
            )));
        }
    }
    let mut missing: Vec<u16> = (0..=max).filter(|n| !by_number.contains_key(n)).collect();
    if last.is_none() {
        missing.push(max + 1);
    }
    if !missing.is_empty() {
        return Err(CodecError::Incomplete { missing });
    }

    let dcs = by_number[&0]
        .dcs
        .ok_or_else(|| CodecError::Malformed("segment 0 carries no dcs".into()))?;
    let blocks: Vec<u8> = by_number
        .values()
        .flat_map(|s| s.segment_bytes.iter().copied())
        .collect();
    if blocks.is_empty() || !blocks.len().is_multiple_of(PAGE_BLOCK_LEN) {
        return Err(CodecError::Malformed(format!(
            "{} octets of page blocks",
            blocks.len()
        )));
    }
    let pages = blocks
        .chunks_exact(PAGE_BLOCK_LEN)
        .map(EncodedPage::from_block)
        .collect::<Result<Vec<_>, _>>()?;
    if pages.len() > MAX_PAGES {
        return Err(CodecError::TooManyPages { pages: pages.len() });
    }
    Ok(EncodedWarning {
        message_identifier: key.0,
        serial_number: key.1,
        dcs,
        pages,
    })
}

fn gsm7_page_text(page: &EncodedPage) -> String {
    let used = usize::from(page.used_length);
    let mut count = (used * 8 / 7).min(GSM7_CHARS_PER_PAGE);
    if count % 8 == 0 && count > 0 && count < GSM7_CHARS_PER_PAGE {
        // Either `count` characters or `count - 1` plus a CR pad septet.
        let last = gsm7::unpack_septets(&page.data, count)[count - 1];
        if last == gsm7::CR && page.data[GSM7_MARKER_OCTET] & GSM7_MARKER_BIT == 0 {
            count -= 1;
        }
    }
    gsm7::decode_gsm7(&page.data, count)
}

/// Decode the warning text, stripping page padding.
pub fn decode_text(warning: &EncodedWarning) -> Result<String, CodecError> {
    let coding = Coding::from_dcs(warning.dcs)?;
    Ok(warning
        .pages
        .iter()
        .map(|page| match coding {
            Coding::Gsm7 => gsm7_page_text(page),
            Coding::Ucs2 => ucs2::decode_ucs2(page.used()),
        })
        .collect())
}

/// SHA-256 of a warning's canonical content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentDigest(pub [u8; 32]);

impl ContentDigest {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl std::fmt::Display for ContentDigest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for ContentDigest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ContentDigest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let bytes = hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)?;
        bytes
            .try_into()
            .map(Self)
            .map_err(|_| serde::de::Error::custom("digest must be 32 octets"))
    }
}

pub fn content_hash(warning: &EncodedWarning) -> ContentDigest {
    ContentDigest(Sha256::digest(warning.canonical_bytes()).into())
}

mod hex_array {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(data: &[u8; super::PAGE_DATA_LEN], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(data))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; super::PAGE_DATA_LEN], D::Error> {
        let text = String::deserialize(d)?;
        let bytes = hex::decode(text).map_err(D::Error::custom)?;
        bytes
            .try_into()
            .map_err(|b: Vec<u8>| D::Error::custom(format!("page data is {} octets, expected 82", b.len())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gsm(text: &str) -> WarningPayload {
        WarningPayload::new(4370, 1, Coding::Gsm7, text)
    }

    fn ucs(text: &str) -> WarningPayload {
        WarningPayload::new(4370, 1, Coding::Ucs2, text)
    }

    fn pages_of(n: usize) -> EncodedWarning {
        paginate(&gsm(&"x".repeat(93 * n))).unwrap()
    }

    #[test]
    fn full_gsm7_page() {
        let w = paginate(&gsm(&"a".repeat(93))).unwrap();
        assert_eq!(w.pages.len(), 1);
        assert_eq!(w.pages[0].used_length, 82);
        assert_eq!(w.dcs, DCS_GSM7);
    }

    #[test]
    fn ucs2_page_split() {
        let w = paginate(&ucs(&"م".repeat(42))).unwrap();
        assert_eq!(w.pages.len(), 2);
        assert_eq!(w.pages[0].used_length, 82);
        assert_eq!(w.pages[1].used_length, 2);
        assert_eq!(&w.pages[1].data[2..4], &[0x00, 0x0D]);
        assert_eq!(w.dcs, DCS_UCS2);
    }

    #[test]
    fn page_limit() {
        assert_eq!(paginate(&gsm(&"a".repeat(1395))).unwrap().pages.len(), 15);
        assert_eq!(
            paginate(&gsm(&"a".repeat(1396))).unwrap_err(),
            CodecError::MessageTooLong { pages: 16 }
        );
    }

    #[test]
    fn invalid_payloads() {
        assert_eq!(paginate(&gsm("")).unwrap_err(), CodecError::EmptyText);
        assert!(matches!(
            paginate(&gsm("سلام")),
            Err(CodecError::UnencodableCharacter { .. })
        ));
    }

    #[test]
    fn gsm7_padding_is_cr() {
        let w = paginate(&gsm("a")).unwrap();
        assert_eq!(w.pages[0].used_length, 1);
        // septet 1 is CR: bits 7.. of octet 0 hold its low bit.
        assert_eq!(w.pages[0].data[0], 0x61 | 0x80);
        assert_eq!(gsm7::unpack_septets(&w.pages[0].data, 93)[1..], [gsm7::CR; 92]);
    }

    #[test]
    fn segment_arithmetic() {
        let four = segment(&pages_of(4), MAX_SI_OCTETS).unwrap();
        assert_eq!(four.len(), 1);
        assert!(four[0].is_last);
        assert_eq!(four[0].encode().len(), 4 * 83 + 12);

        let six = segment(&pages_of(6), MAX_SI_OCTETS).unwrap();
        assert_eq!(six.len(), 2);
        assert_eq!(six[0].segment_bytes.len(), 4 * 83);
        assert_eq!(six[1].segment_bytes.len(), 2 * 83);
        assert_eq!(six[0].dcs, Some(DCS_GSM7));
        assert_eq!(six[1].dcs, None);
        assert!(!six[0].is_last && six[1].is_last);

        let one = segment(&pages_of(1), MAX_SI_OCTETS).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].segment_number, 0);
        assert!(one[0].is_last);
    }

    #[test]
    fn budget_too_small() {
        assert_eq!(
            segment(&pages_of(1), 94).unwrap_err(),
            CodecError::BudgetTooSmall { budget: 94 }
        );
        assert_eq!(segment(&pages_of(2), 95).unwrap().len(), 2);
        assert!(segment(&pages_of(1), 5).is_err());
    }

    #[test]
    fn reassemble_reverse_order_and_missing() {
        let w = pages_of(9);
        let mut segs = segment(&w, MAX_SI_OCTETS).unwrap();
        assert_eq!(segs.len(), 3);
        segs.reverse();
        assert_eq!(reassemble(&segs).unwrap(), w);

        let two = segment(&pages_of(6), MAX_SI_OCTETS).unwrap();
        assert_eq!(
            reassemble(&two[..1]).unwrap_err(),
            CodecError::Incomplete { missing: vec![1] }
        );
        assert_eq!(
            reassemble(&two[1..]).unwrap_err(),
            CodecError::Incomplete { missing: vec![0] }
        );
    }

    #[test]
    fn reassemble_conflicts() {
        let mut segs = segment(&pages_of(6), MAX_SI_OCTETS).unwrap();
        let mut evil = segs[1].clone();
        evil.segment_bytes[1] ^= 0xFF;
        segs.push(evil);
        assert_eq!(
            reassemble(&segs).unwrap_err(),
            CodecError::ConflictingSegments { segment_number: 1 }
        );

        let mut dup = segment(&pages_of(6), MAX_SI_OCTETS).unwrap();
        dup.push(dup[0].clone());
        assert!(reassemble(&dup).is_ok());

        let mut mixed = segment(&pages_of(6), MAX_SI_OCTETS).unwrap();
        mixed[1].serial_number += 1;
        assert_eq!(reassemble(&mixed).unwrap_err(), CodecError::MismatchedSegments);
    }

    #[test]
    fn reassemble_rejects_oversize() {
        let mut w = pages_of(15);
        w.pages.push(w.pages[0].clone());
        let segs = segment(&w, MAX_SI_OCTETS).unwrap();
        assert_eq!(reassemble(&segs).unwrap_err(), CodecError::TooManyPages { pages: 16 });
    }

    #[test]
    fn decode_round_trips() {
        let w = paginate(&gsm("hello")).unwrap();
        assert_eq!(decode_text(&w).unwrap(), "hello");

        let bilingual = "تنبيه تجريبي: هذه رسالة اختبار. Test alert: this is a test message. https://tinyurl.com/x9k";
        let w = paginate(&ucs(bilingual)).unwrap();
        assert_eq!(w.pages.len(), 3);
        assert_eq!(decode_text(&w).unwrap(), bilingual);

        let mut bad = paginate(&gsm("hello")).unwrap();
        bad.dcs = 0xFF;
        assert_eq!(decode_text(&bad).unwrap_err(), CodecError::UnknownDcs(0xFF));
    }

    #[test]
    fn trailing_cr_is_lossless() {
        for n in 1..=93 {
            let padded: String = "a".repeat(n - 1) + "\r";
            let w = paginate(&gsm(&padded)).unwrap();
            assert_eq!(decode_text(&w).unwrap(), padded, "n = {n}");
            let plain = "a".repeat(n);
            assert_eq!(decode_text(&paginate(&gsm(&plain)).unwrap()).unwrap(), plain);
        }
        let crs = "\r".repeat(16);
        assert_eq!(decode_text(&paginate(&gsm(&crs)).unwrap()).unwrap(), crs);
    }

    #[test]
    fn hash_ignores_segmentation_and_tracks_serial() {
        let w = pages_of(6);
        let a = reassemble(&segment(&w, 372).unwrap()).unwrap();
        let b = reassemble(&segment(&w, 200).unwrap()).unwrap();
        assert_eq!(content_hash(&a), content_hash(&b));

        let mut bumped = w.clone();
        bumped.serial_number += 1;
        assert_ne!(content_hash(&w), content_hash(&bumped));
    }

    #[test]
    fn auto_coding() {
        assert_eq!(WarningPayload::auto(1, 1, "Test alert").coding, Coding::Gsm7);
        assert_eq!(WarningPayload::auto(1, 1, "تنبيه Test").coding, Coding::Ucs2);
    }
}
