use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The eleven extraction categories.
///
/// Declaration order is the ordering used when sorting mentions that start
/// at the same position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptType {
    DevStage,
    PubTime,
    IssueNo,
    Region,
    Damage,
    Crop,
    Pest,
    Disease,
    Auxiliary,
    Chemical,
    Climate,
}

impl ConceptType {
    pub const ALL: [ConceptType; 11] = [
        ConceptType::DevStage,
        ConceptType::PubTime,
        ConceptType::IssueNo,
        ConceptType::Region,
        ConceptType::Damage,
        ConceptType::Crop,
        ConceptType::Pest,
        ConceptType::Disease,
        ConceptType::Auxiliary,
        ConceptType::Chemical,
        ConceptType::Climate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConceptType::DevStage => "dev_stage",
            ConceptType::PubTime => "pub_time",
            ConceptType::IssueNo => "issue_no",
            ConceptType::Region => "region",
            ConceptType::Damage => "damage",
            ConceptType::Crop => "crop",
            ConceptType::Pest => "pest",
            ConceptType::Disease => "disease",
            ConceptType::Auxiliary => "auxiliary",
            ConceptType::Chemical => "chemical",
            ConceptType::Climate => "climate",
        }
    }
}

impl fmt::Display for ConceptType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown concept type {0:?}")]
pub struct UnknownConcept(pub String);

impl FromStr for ConceptType {
    type Err = UnknownConcept;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConceptType::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownConcept(s.to_string()))
    }
}
