//! Clickable-content detection in warning text, mirroring what handset alert
//! viewers linkify: web URLs, email addresses, phone numbers and US-style
//! street addresses. Text is never rewritten; spans are character offsets into
//! the original string.

pub mod conformance;
pub mod homoglyph;
pub mod tld;

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use tld::TldList;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpanKind {
    WebUrl,
    Email,
    Phone,
    MapAddress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSpan {
    pub kind: SpanKind,
    /// Character offset, inclusive.
    pub start: usize,
    /// Character offset, exclusive.
    pub end: usize,
    pub contains_cyrillic: bool,
    /// Lowercase scheme for URLs that carried one.
    pub scheme: Option<String>,
}

impl ParsedSpan {
    /// The span's characters within the text it was parsed from.
    pub fn slice(&self, text: &str) -> String {
        text.chars().skip(self.start).take(self.end - self.start).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParserProfileFlags {
    pub cyrillic_url_clickable: bool,
}

const SCHEMES: [&str; 4] = ["http://", "https://", "rtsp://", "ftp://"];
const TRAILING_PUNCT: [char; 4] = ['.', ',', '!', '?'];

fn is_token_break(c: char) -> bool {
    c.is_whitespace() || matches!(c, '<' | '>' | '"')
}

fn tokens(chars: &[char]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &c) in chars.iter().enumerate() {
        match (is_token_break(c), start) {
            (true, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, chars.len()));
    }
    out
}

fn trim_trailing(chars: &[char], start: usize, mut end: usize) -> usize {
    while end > start && TRAILING_PUNCT.contains(&chars[end - 1]) {
        end -= 1;
    }
    end
}

fn scheme_of(token: &[char]) -> Option<&'static str> {
    SCHEMES.into_iter().find(|scheme| {
        token.len() >= scheme.len()
            && token
                .iter()
                .zip(scheme.chars())
                .all(|(a, b)| a.to_ascii_lowercase() == b)
    })
}

fn is_host_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '-' | '_' | '.')
}

/// Schemeless host: ends in `.<tld>` with at least one non-dot character
/// immediately before that final dot.
fn is_schemeless_url(token: &[char], tlds: &TldList) -> bool {
    if !token.iter().all(|&c| is_host_char(c)) {
        return false;
    }
    let Some(dot) = token.iter().rposition(|&c| c == '.') else {
        return false;
    };
    let label: String = token[dot + 1..].iter().collect();
    dot > 0 && token[dot - 1] != '.' && !label.is_empty() && tlds.contains(&label)
}

fn is_email(token: &[char]) -> bool {
    let Some(at) = token.iter().position(|&c| c == '@') else {
        return false;
    };
    let (local, domain) = (&token[..at], &token[at + 1..]);
    if local.is_empty()
        || !local
            .iter()
            .all(|&c| c.is_alphanumeric() || matches!(c, '.' | '_' | '%' | '+' | '-'))
    {
        return false;
    }
    let domain: String = domain.iter().collect();
    let labels: Vec<&str> = domain.split('.').collect();
    labels.len() >= 2
        && labels
            .iter()
            .all(|l| !l.is_empty() && l.chars().all(|c| c.is_alphanumeric() || c == '-'))
        && labels
            .last()
            .is_some_and(|tld| tld.chars().count() >= 2 && tld.chars().all(char::is_alphabetic))
}

fn address_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"\b[0-9]{1,6}(?: [A-Z0-9][A-Za-z0-9'\-]*){1,4} (?:St|Ave|Blvd|Rd|Dr|Ln|Way)\b(?:, [A-Z][A-Za-z]*(?: [A-Z][A-Za-z]*)*, [A-Z]{2} [0-9]{5}(?:-[0-9]{4})?\b)?",
        )
        .expect("address pattern")
    })
}

fn overlaps(spans: &[ParsedSpan], start: usize, end: usize) -> bool {
    spans.iter().any(|s| s.start < end && start < s.end)
}

fn push(spans: &mut Vec<ParsedSpan>, chars: &[char], kind: SpanKind, start: usize, end: usize, scheme: Option<&str>) {
    spans.push(ParsedSpan {
        kind,
        start,
        end,
        contains_cyrillic: chars[start..end].iter().any(|&c| homoglyph::is_cyrillic(c)),
        scheme: scheme.map(|s| s.trim_end_matches("://").to_string()),
    });
}

fn token_spans(chars: &[char], tlds: &TldList, spans: &mut Vec<ParsedSpan>) {
    for (start, raw_end) in tokens(chars) {
        let token = &chars[start..raw_end];
        if let Some(scheme) = scheme_of(token) {
            let end = trim_trailing(chars, start + scheme.chars().count(), raw_end);
            if end > start + scheme.len() {
                push(spans, chars, SpanKind::WebUrl, start, end, Some(scheme));
            }
            continue;
        }
        let end = trim_trailing(chars, start, raw_end);
        let token = &chars[start..end];
        if token.is_empty() {
            continue;
        }
        if is_email(token) {
            push(spans, chars, SpanKind::Email, start, end, None);
        } else if is_schemeless_url(token, tlds) {
            push(spans, chars, SpanKind::WebUrl, start, end, None);
        }
    }
}

fn address_spans(text: &str, chars: &[char], spans: &mut Vec<ParsedSpan>) {
    let byte_to_char: Vec<usize> = {
        let mut map = vec![0; text.len() + 1];
        for (ci, (bi, _)) in text.char_indices().enumerate() {
            map[bi] = ci;
        }
        map[text.len()] = chars.len();
        map
    };
    for m in address_regex().find_iter(text) {
        let (start, end) = (byte_to_char[m.start()], byte_to_char[m.end()]);
        if !overlaps(spans, start, end) {
            push(spans, chars, SpanKind::MapAddress, start, end, None);
        }
    }
}

/// `+`? then 7-15 digits, groups separated by a single space or hyphen. The
/// number must stand alone: whitespace or `(` before it, whitespace or
/// sentence punctuation after it.
fn phone_spans(chars: &[char], spans: &mut Vec<ParsedSpan>) {
    let mut i = 0;
    while i < chars.len() {
        let left_ok = i == 0 || chars[i - 1].is_whitespace() || chars[i - 1] == '(';
        let first_digit = if chars[i] == '+' { i + 1 } else { i };
        if !left_ok || !chars.get(first_digit).is_some_and(char::is_ascii_digit) {
            i += 1;
            continue;
        }
        let mut j = first_digit;
        let mut digits = 0;
        loop {
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
                digits += 1;
            }
            let joins = j + 1 < chars.len()
                && matches!(chars[j], ' ' | '-')
                && chars[j + 1].is_ascii_digit();
            if !joins {
                break;
            }
            j += 1;
        }
        let mut k = j;
        while k < chars.len() && matches!(chars[k], '.' | ',' | '!' | '?' | ';' | ':' | ')') {
            k += 1;
        }
        let right_ok = k == chars.len() || chars[k].is_whitespace();
        if right_ok && (7..=15).contains(&digits) && !overlaps(spans, i, j) {
            push(spans, chars, SpanKind::Phone, i, j, None);
        }
        i = j.max(i + 1);
    }
}

/// Detect clickable spans. Spans never overlap and come back sorted by start.
pub fn parse_content(text: &str, flags: ParserProfileFlags, tlds: &TldList) -> Vec<ParsedSpan> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::new();
    token_spans(&chars, tlds, &mut spans);
    address_spans(text, &chars, &mut spans);
    phone_spans(&chars, &mut spans);
    if !flags.cyrillic_url_clickable {
        spans.retain(|s| !s.contains_cyrillic);
    }
    spans.sort_by_key(|s| s.start);
    spans
}
