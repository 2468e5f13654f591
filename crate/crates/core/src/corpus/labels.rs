//! Label taxonomies: 3-way sentiment and the 15 retained dialog acts, plus the
//! merge map from the 27-code annotation alphabet.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SentimentLabel {
    Positive,
    Negative,
    Neutral,
}

impl SentimentLabel {
    pub const COUNT: usize = 3;
    pub const ALL: [SentimentLabel; 3] = [Self::Positive, Self::Negative, Self::Neutral];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Corpus code: `+`, `-` or `*`.
    pub fn code(self) -> char {
        match self {
            Self::Positive => '+',
            Self::Negative => '-',
            Self::Neutral => '*',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            '+' => Some(Self::Positive),
            '-' => Some(Self::Negative),
            '*' => Some(Self::Neutral),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
            Self::Neutral => "neutral",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The 15 dialog acts kept after merging rare annotation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DialogActLabel {
    /// Yes/no question
    Q,
    /// Open question
    O,
    /// Statement
    I,
    /// Agreement
    A,
    /// Disagreement
    D,
    /// Open or choice answer
    W,
    /// Offer
    E,
    /// Request
    R,
    /// Suggest
    S,
    /// Acknowledgement
    F,
    /// Greeting
    H,
    /// Thanking
    T,
    /// Exclamation
    J,
    /// Explicit performative
    V,
    /// Sympathy
    M,
}

impl DialogActLabel {
    pub const COUNT: usize = 15;
    pub const ALL: [DialogActLabel; 15] = [
        Self::Q,
        Self::O,
        Self::I,
        Self::A,
        Self::D,
        Self::W,
        Self::E,
        Self::R,
        Self::S,
        Self::F,
        Self::H,
        Self::T,
        Self::J,
        Self::V,
        Self::M,
    ];

    /// Corpus share of each retained label in percent, in [`Self::ALL`] order.
    /// The published figures sum to 100.3 because of rounding.
    pub const CORPUS_PERCENT: [f64; 15] = [
        8.3, 7.4, 49.3, 7.9, 1.9, 9.9, 1.4, 3.3, 3.0, 0.2, 2.0, 2.0, 1.5, 1.6, 0.6,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn code(self) -> char {
        ['Q', 'O', 'I', 'A', 'D', 'W', 'E', 'R', 'S', 'F', 'H', 'T', 'J', 'V', 'M'][self.index()]
    }

    pub fn from_code(c: char) -> Option<Self> {
        Self::ALL.iter().copied().find(|l| l.code() == c)
    }

    /// Corpus distribution renormalized to sum to one.
    pub fn corpus_distribution() -> [f64; 15] {
        let total: f64 = Self::CORPUS_PERCENT.iter().sum();
        Self::CORPUS_PERCENT.map(|p| p / total)
    }
}

impl fmt::Display for DialogActLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// A code from the 27-letter annotation alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RawDialogActCode(char);

impl RawDialogActCode {
    pub const ALPHABET: [char; 27] = [
        'Q', 'O', 'I', 'A', 'D', 'W', 'Y', 'N', 'E', 'R', 'S', 'P', 'L', 'F', 'B', 'H', 'G', 'X',
        'C', 'T', 'K', 'J', 'V', 'M', '*', 'U', 'Z',
    ];

    pub fn new(c: char) -> Result<Self> {
        if Self::ALPHABET.contains(&c) {
            Ok(Self(c))
        } else {
            Err(Error::Validation(format!("unknown dialog act code {c:?}")))
        }
    }

    pub fn as_char(self) -> char {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormalizedDialogAct {
    Label(DialogActLabel),
    Removed,
}

/// Maps an annotation code onto the retained label set.
pub fn normalize_da_code(raw: RawDialogActCode) -> NormalizedDialogAct {
    use DialogActLabel as L;
    use NormalizedDialogAct::{Label, Removed};
    match raw.0 {
        'Y' | 'P' | 'C' | 'K' => Label(L::A),
        'N' | 'L' => Label(L::D),
        'B' => Label(L::F),
        'G' => Label(L::H),
        'X' => Label(L::M),
        // '*' never occurs in the released annotations; U and Z were discarded.
        '*' | 'U' | 'Z' => Removed,
        c => Label(L::from_code(c).expect("alphabet checked at construction")),
    }
}

/// Dialog-act column of the corpus after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaAnnotation {
    Label(DialogActLabel),
    Removed,
    Withheld,
}

pub(crate) fn parse_da_field(field: &str) -> Result<DaAnnotation> {
    let mut chars = field.chars();
    let (Some(c), None) = (chars.next(), chars.next()) else {
        return Err(Error::Validation(format!(
            "dialog act must be a single character, got {field:?}"
        )));
    };
    if c == '?' {
        return Ok(DaAnnotation::Withheld);
    }
    Ok(match normalize_da_code(RawDialogActCode::new(c)?) {
        NormalizedDialogAct::Label(l) => DaAnnotation::Label(l),
        NormalizedDialogAct::Removed => DaAnnotation::Removed,
    })
}

pub(crate) fn parse_sentiment_field(field: &str) -> Result<Option<SentimentLabel>> {
    let mut chars = field.chars();
    match (chars.next(), chars.next()) {
        (Some('?'), None) => Ok(None),
        (Some(c), None) => SentimentLabel::from_code(c)
            .map(Some)
            .ok_or_else(|| Error::Validation(format!("unknown sentiment code {c:?}"))),
        _ => Err(Error::Validation(format!(
            "sentiment must be a single character, got {field:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    fn norm(c: char) -> NormalizedDialogAct {
        normalize_da_code(RawDialogActCode::new(c).unwrap())
    }

    #[test]
    fn merges_follow_taxonomy() {
        use DialogActLabel as L;
        use NormalizedDialogAct::*;
        assert_eq!(norm('Y'), Label(L::A));
        assert_eq!(norm('I'), Label(L::I));
        assert_eq!(norm('Z'), Removed);
        assert_eq!(norm('U'), Removed);
        assert_eq!(norm('*'), Removed);
        for (raw, merged) in [
            ('N', L::D),
            ('P', L::A),
            ('L', L::D),
            ('B', L::F),
            ('G', L::H),
            ('X', L::M),
            ('C', L::A),
            ('K', L::A),
        ] {
            assert_eq!(norm(raw), Label(merged), "{raw}");
        }
    }

    #[test]
    fn normalization_is_total_and_onto_retained_labels() {
        let mut image = BTreeSet::new();
        let mut removed = 0;
        for c in RawDialogActCode::ALPHABET {
            match norm(c) {
                NormalizedDialogAct::Label(l) => {
                    image.insert(l);
                }
                NormalizedDialogAct::Removed => removed += 1,
            }
        }
        assert_eq!(image.len(), 15);
        assert_eq!(removed, 3);
        for l in DialogActLabel::ALL {
            assert_eq!(norm(l.code()), NormalizedDialogAct::Label(l));
        }
    }

    #[test]
    fn unknown_code_rejected() {
        assert!(RawDialogActCode::new('x').is_err());
        assert!(parse_da_field("QQ").is_err());
        assert_eq!(parse_da_field("?").unwrap(), DaAnnotation::Withheld);
    }

    #[test]
    fn sentiment_codes_are_bijective() {
        for s in SentimentLabel::ALL {
            assert_eq!(SentimentLabel::from_code(s.code()), Some(s));
            assert_eq!(SentimentLabel::from_index(s.index()), Some(s));
        }
        assert_eq!(parse_sentiment_field("?").unwrap(), None);
        assert!(parse_sentiment_field("x").is_err());
    }

    #[test]
    fn corpus_distribution_sums_to_one() {
        let d = DialogActLabel::corpus_distribution();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((d[DialogActLabel::I.index()] - 49.3 / 100.3).abs() < 1e-12);
    }
}
