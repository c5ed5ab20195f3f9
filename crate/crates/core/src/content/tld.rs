use std::collections::BTreeSet;

use super::homoglyph::skeleton;

const BUNDLED: &str = include_str!("../../data/tlds.txt");

/// Top-level domains a schemeless URL may end with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TldList(BTreeSet<String>);

impl TldList {
    /// Parse the TLD list format: one TLD per line, `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|line| line.split('#').next().unwrap_or("").trim())
                .filter(|tld| !tld.is_empty())
                .map(|tld| tld.trim_start_matches('.').to_lowercase())
                .collect(),
        )
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED)
    }

    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(tlds: I) -> Self {
        Self(tlds.into_iter().map(|t| t.as_ref().to_lowercase()).collect())
    }

    /// Matches after folding look-alike characters, so `соm` written with
    /// Cyrillic letters counts as `com`.
    pub fn contains(&self, label: &str) -> bool {
        self.0.contains(&skeleton(label))
    }

    pub fn remove(&mut self, tld: &str) -> bool {
        self.0.remove(tld)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl Default for TldList {
    fn default() -> Self {
        Self::bundled()
    }
}
