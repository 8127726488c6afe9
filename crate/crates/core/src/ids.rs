//! Identifier newtypes shared by every stage of the pipeline.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// A STITCH/PubChem compound identifier such as `CID000002173`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DrugId(String);

impl DrugId {
    pub fn new(value: impl Into<String>) -> Option<Self> {
        let value = value.into();
        let trimmed = value.trim();
        if trimmed.is_empty() {
            None
        } else if trimmed.len() == value.len() {
            Some(DrugId(value))
        } else {
            Some(DrugId(trimmed.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Numeric PubChem compound id, if the identifier carries one
    /// (`CID000002173` and `2173` both yield `2173`).
    pub fn pubchem_number(&self) -> Option<u64> {
        let digits = self
            .0
            .strip_prefix("CID")
            .or_else(|| self.0.strip_prefix("cid"))
            .unwrap_or(&self.0);
        digits.parse().ok()
    }
}

impl fmt::Display for DrugId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A side effect concept. Identity is the code alone; the name is carried for
/// reporting only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SideEffectId {
    pub code: String,
    pub name: String,
}

impl SideEffectId {
    pub fn new(code: impl Into<String>, name: impl Into<String>) -> Option<Self> {
        let code = code.into().trim().to_string();
        if code.is_empty() {
            return None;
        }
        Some(SideEffectId {
            code,
            name: name.into(),
        })
    }

    /// A side effect known only by its code.
    pub fn from_code(code: impl Into<String>) -> Option<Self> {
        Self::new(code, String::new())
    }
}

impl PartialEq for SideEffectId {
    fn eq(&self, other: &Self) -> bool {
        self.code == other.code
    }
}

impl Eq for SideEffectId {}

impl Hash for SideEffectId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.code.hash(state);
    }
}

impl PartialOrd for SideEffectId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SideEffectId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.code.cmp(&other.code)
    }
}

impl fmt::Display for SideEffectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

/// Unordered drug pair stored with the lexicographically smaller id first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DrugPair {
    a: DrugId,
    b: DrugId,
}

impl DrugPair {
    /// Returns `None` for a self-pair.
    pub fn new(x: DrugId, y: DrugId) -> Option<Self> {
        match x.cmp(&y) {
            Ordering::Less => Some(DrugPair { a: x, b: y }),
            Ordering::Greater => Some(DrugPair { a: y, b: x }),
            Ordering::Equal => None,
        }
    }

    pub fn first(&self) -> &DrugId {
        &self.a
    }

    pub fn second(&self) -> &DrugId {
        &self.b
    }

    pub fn contains(&self, drug: &DrugId) -> bool {
        &self.a == drug || &self.b == drug
    }
}

/// One drug-drug interaction record: a canonical pair and the side effect it causes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DdiTriple {
    pub pair: DrugPair,
    pub side_effect: SideEffectId,
}

impl DdiTriple {
    pub fn new(x: DrugId, y: DrugId, side_effect: SideEffectId) -> Option<Self> {
        DrugPair::new(x, y).map(|pair| DdiTriple { pair, side_effect })
    }

    pub fn drug_a(&self) -> &DrugId {
        self.pair.first()
    }

    pub fn drug_b(&self) -> &DrugId {
        self.pair.second()
    }
}
