//! Table-driven parser checks: each row pairs an input with the exact spans
//! a profile must see.

use serde::{Deserialize, Serialize};

use super::{parse_content, ParsedSpan, ParserProfileFlags, TldList};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConformanceRow {
    pub name: String,
    pub input: String,
    pub cyrillic_url_clickable: bool,
    pub spans: Vec<ParsedSpan>,
}

impl ConformanceRow {
    /// Parse the row's input and return the actual spans when they differ.
    pub fn check(&self, tlds: &TldList) -> Result<(), Vec<ParsedSpan>> {
        let flags = ParserProfileFlags {
            cyrillic_url_clickable: self.cyrillic_url_clickable,
        };
        let actual = parse_content(&self.input, flags, tlds);
        if actual == self.spans {
            Ok(())
        } else {
            Err(actual)
        }
    }
}

pub fn parse_table(json: &str) -> Result<Vec<ConformanceRow>, serde_json::Error> {
    serde_json::from_str(json)
}

/// The table shipped with the crate.
pub fn bundled() -> Vec<ConformanceRow> {
    parse_table(include_str!("../../data/parser_conformance.json")).expect("bundled conformance table is valid")
}
