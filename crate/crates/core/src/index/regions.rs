use serde::{Deserialize, Serialize};

use crate::lexicon::fold;

/// Histogram key for documents whose region is missing or not in the list.
pub const UNKNOWN_REGION: &str = "unknown";

/// The 22 metropolitan French regions in force from 1982 to 2015.
pub const FRENCH_REGIONS_PRE_2016: [&str; 22] = [
    "Alsace",
    "Aquitaine",
    "Auvergne",
    "Basse-Normandie",
    "Bourgogne",
    "Bretagne",
    "Centre",
    "Champagne-Ardenne",
    "Corse",
    "Franche-Comté",
    "Haute-Normandie",
    "Île-de-France",
    "Languedoc-Roussillon",
    "Limousin",
    "Lorraine",
    "Midi-Pyrénées",
    "Nord-Pas-de-Calais",
    "Pays de la Loire",
    "Picardie",
    "Poitou-Charentes",
    "Provence-Alpes-Côte d'Azur",
    "Rhône-Alpes",
];

/// Closed list of region names. Lookups compare folded forms, so
/// `"midi-pyrenees"` resolves to `"Midi-Pyrénées"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionList(Vec<String>);

impl Default for RegionList {
    fn default() -> Self {
        Self(
            FRENCH_REGIONS_PRE_2016
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )
    }
}

impl RegionList {
    pub fn new(names: impl IntoIterator<Item = impl Into<String>>) -> Self {
        let mut out: Vec<String> = Vec::new();
        for n in names {
            let n: String = n.into();
            let n = n.trim().to_string();
            if !n.is_empty() && !out.iter().any(|o| fold(o) == fold(&n)) {
                out.push(n);
            }
        }
        Self(out)
    }

    /// One region per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn resolve(&self, name: &str) -> Option<&str> {
        let f = fold(name);
        self.0.iter().find(|r| fold(r) == f).map(String::as_str)
    }
}
