use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

/// One token transformation applied before alignment comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationRule {
    /// Full Unicode case folding.
    Lowercase,
    /// Canonical decomposition, then removal of combining marks.
    StripDiacritics,
    /// Removal of characters in the Unicode punctuation categories.
    StripPunctuation,
}

impl NormalizationRule {
    pub fn apply(self, token: &str) -> String {
        match self {
            NormalizationRule::Lowercase => caseless::default_case_fold_str(token),
            NormalizationRule::StripDiacritics => {
                token.nfd().filter(|&c| !is_combining_mark(c)).collect()
            }
            NormalizationRule::StripPunctuation => token
                .chars()
                .filter(|c| c.general_category_group() != GeneralCategoryGroup::Punctuation)
                .collect(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormalizationRule::Lowercase => "lowercase",
            NormalizationRule::StripDiacritics => "strip-diacritics",
            NormalizationRule::StripPunctuation => "strip-punctuation",
        }
    }
}

impl fmt::Display for NormalizationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormalizationRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lowercase" => Ok(NormalizationRule::Lowercase),
            "strip-diacritics" => Ok(NormalizationRule::StripDiacritics),
            "strip-punctuation" => Ok(NormalizationRule::StripPunctuation),
            other => Err(format!(
                "unknown normalization rule {other:?} (expected lowercase, strip-diacritics or strip-punctuation)"
            )),
        }
    }
}

/// Apply `rules` left to right; an empty pipeline is the identity.
pub fn normalize_token(token: &str, rules: &[NormalizationRule]) -> String {
    rules
        .iter()
        .fold(token.to_string(), |acc, rule| rule.apply(&acc))
}
