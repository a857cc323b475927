//! The closed label sets every rule in the crate operates on.

use core::fmt;
use core::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// A label string that is not part of its closed enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} label `{value}`")]
pub struct UnknownLabel {
    pub kind: &'static str,
    pub value: alloc::string::String,
}

impl UnknownLabel {
    fn new(kind: &'static str, value: &str) -> Self {
        Self {
            kind,
            value: value.into(),
        }
    }
}

/// A discourse participant's belief towards an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BeliefLabel {
    /// Certainly true.
    CertainlyTrue,
    /// Possibly true.
    PossiblyTrue,
    /// Certainly not true.
    CertainlyNotTrue,
    /// No belief expressed.
    NoBelief,
}

impl BeliefLabel {
    pub const ALL: [BeliefLabel; 4] = [
        BeliefLabel::CertainlyTrue,
        BeliefLabel::PossiblyTrue,
        BeliefLabel::CertainlyNotTrue,
        BeliefLabel::NoBelief,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BeliefLabel::CertainlyTrue => "CT+",
            BeliefLabel::PossiblyTrue => "PS",
            BeliefLabel::CertainlyNotTrue => "CT-",
            BeliefLabel::NoBelief => "NB",
        }
    }
}

impl FromStr for BeliefLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "CT+" => Ok(BeliefLabel::CertainlyTrue),
            "PS" => Ok(BeliefLabel::PossiblyTrue),
            "CT-" => Ok(BeliefLabel::CertainlyNotTrue),
            "NB" => Ok(BeliefLabel::NoBelief),
            other => Err(UnknownLabel::new("belief", other)),
        }
    }
}

impl fmt::Display for BeliefLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A participant's view of whether an event is in the common ground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CgLabel {
    /// Just added at this utterance.
    JustAdded,
    /// Already in the common ground.
    AlreadyIn,
    /// Entertained but rejected.
    Rejected,
    /// No annotation; the event has not been introduced.
    NotAnnotated,
}

impl CgLabel {
    pub const ALL: [CgLabel; 4] = [
        CgLabel::JustAdded,
        CgLabel::AlreadyIn,
        CgLabel::Rejected,
        CgLabel::NotAnnotated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CgLabel::JustAdded => "JA",
            CgLabel::AlreadyIn => "IN",
            CgLabel::Rejected => "RT",
            CgLabel::NotAnnotated => "NA",
        }
    }

    /// `JA` or `IN`.
    pub fn is_in_common_ground(self) -> bool {
        matches!(self, CgLabel::JustAdded | CgLabel::AlreadyIn)
    }
}

impl FromStr for CgLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "JA" => Ok(CgLabel::JustAdded),
            "IN" => Ok(CgLabel::AlreadyIn),
            "RT" => Ok(CgLabel::Rejected),
            "NA" => Ok(CgLabel::NotAnnotated),
            other => Err(UnknownLabel::new("common ground", other)),
        }
    }
}

impl fmt::Display for CgLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The certainty a question asks about. Questions never probe for `NB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Certainty {
    Certainly,
    Possibly,
    CertainlyNot,
}

impl Certainty {
    pub const ALL: [Certainty; 3] = [
        Certainty::Certainly,
        Certainty::Possibly,
        Certainty::CertainlyNot,
    ];

    /// The word(s) used in rendered questions and query ids.
    pub fn as_str(self) -> &'static str {
        match self {
            Certainty::Certainly => "certainly",
            Certainty::Possibly => "possibly",
            Certainty::CertainlyNot => "certainly not",
        }
    }

    pub fn as_belief(self) -> BeliefLabel {
        match self {
            Certainty::Certainly => BeliefLabel::CertainlyTrue,
            Certainty::Possibly => BeliefLabel::PossiblyTrue,
            Certainty::CertainlyNot => BeliefLabel::CertainlyNotTrue,
        }
    }

    /// Inverse of [`Certainty::as_belief`]; `NB` has no certainty.
    pub fn from_belief(bel: BeliefLabel) -> Option<Self> {
        match bel {
            BeliefLabel::CertainlyTrue => Some(Certainty::Certainly),
            BeliefLabel::PossiblyTrue => Some(Certainty::Possibly),
            BeliefLabel::CertainlyNotTrue => Some(Certainty::CertainlyNot),
            BeliefLabel::NoBelief => None,
        }
    }

    pub fn is_positive(self) -> bool {
        !matches!(self, Certainty::CertainlyNot)
    }
}

impl FromStr for Certainty {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "certainly" => Ok(Certainty::Certainly),
            "possibly" => Ok(Certainty::Possibly),
            "certainly not" => Ok(Certainty::CertainlyNot),
            other => Err(UnknownLabel::new("certainty", other)),
        }
    }
}

impl fmt::Display for Certainty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One of the two discourse participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Speaker {
    A,
    B,
}

impl Speaker {
    pub const BOTH: [Speaker; 2] = [Speaker::A, Speaker::B];

    pub fn other(self) -> Speaker {
        match self {
            Speaker::A => Speaker::B,
            Speaker::B => Speaker::A,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::A => "A",
            Speaker::B => "B",
        }
    }
}

impl FromStr for Speaker {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" => Ok(Speaker::A),
            "B" => Ok(Speaker::B),
            other => Err(UnknownLabel::new("speaker", other)),
        }
    }
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

// Labels are (de)serialized through their canonical strings so that an
// unknown label reports the offending string rather than a variant list.
macro_rules! label_serde {
    ($ty:ty, $expecting:literal) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                struct LabelVisitor;

                impl<'de> Visitor<'de> for LabelVisitor {
                    type Value = $ty;

                    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                        f.write_str($expecting)
                    }

                    fn visit_str<E: de::Error>(self, v: &str) -> Result<$ty, E> {
                        v.parse().map_err(E::custom)
                    }
                }

                deserializer.deserialize_str(LabelVisitor)
            }
        }
    };
}

label_serde!(BeliefLabel, "a belief label (CT+, PS, CT-, NB)");
label_serde!(CgLabel, "a common ground label (JA, IN, RT, NA)");
label_serde!(
    Certainty,
    "a certainty (certainly, possibly, certainly not)"
);
label_serde!(Speaker, "a speaker (A or B)");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip_through_strings() {
        for b in BeliefLabel::ALL {
            assert_eq!(b.as_str().parse::<BeliefLabel>().unwrap(), b);
        }
        for c in CgLabel::ALL {
            assert_eq!(c.as_str().parse::<CgLabel>().unwrap(), c);
        }
        for c in Certainty::ALL {
            assert_eq!(c.as_str().parse::<Certainty>().unwrap(), c);
        }
    }

    #[test]
    fn unknown_strings_are_rejected() {
        assert!("CT".parse::<BeliefLabel>().is_err());
        assert!("ct+".parse::<BeliefLabel>().is_err());
        assert!("NULL".parse::<CgLabel>().is_err());
        assert!("C".parse::<Speaker>().is_err());
    }

    #[test]
    fn certainty_is_a_bijection_onto_non_nb_beliefs() {
        for c in Certainty::ALL {
            assert_eq!(Certainty::from_belief(c.as_belief()), Some(c));
        }
        assert_eq!(Certainty::from_belief(BeliefLabel::NoBelief), None);
    }

    #[test]
    fn other_is_an_involution() {
        for s in Speaker::BOTH {
            assert_ne!(s.other(), s);
            assert_eq!(s.other().other(), s);
        }
    }
}
