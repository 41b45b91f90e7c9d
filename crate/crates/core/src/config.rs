use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ansatz::{box_width, param_count, AnsatzFamily, Family, ParamKey, ParamSchema, Sharing, Slot};
use crate::data::{TokenId, Vocabulary};
use crate::diagram::{build_ctn, build_ptn, BoxRole, DiagramBox, DiagramError, SchemeDiagram};

pub use crate::diagram::Topology;

/// How eliminated wires are removed from the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Project onto `⟨0|` without renormalizing (pure states).
    Postselect,
    /// Partial trace (density matrices).
    Discard,
}

/// Order in which the engine executes boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Diagram order: all words first for trees, then layer by layer.
    /// Paths are always executed as a running fold.
    #[default]
    Layered,
    /// Depth-first from the classifier, introducing words as late as possible.
    Lazy,
}

macro_rules! text_enum {
    ($ty:ty, $what:literal, $($s:literal => $v:expr),+) => {
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.to_ascii_lowercase().as_str() {
                    $($s => Ok($v),)+
                    _ => Err(format!(
                        concat!("invalid ", $what, " `{}` (valid: {})"),
                        s,
                        [$($s),+].join(", ")
                    )),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $v { return f.write_str($s); })+
                unreachable!()
            }
        }
    };
}

text_enum!(Mode, "mode", "postselect" => Mode::Postselect, "discard" => Mode::Discard);
text_enum!(Topology, "topology", "ptn" => Topology::Path, "ctn" => Topology::Convolutional);
text_enum!(Sharing, "sharing", "uniform" => Sharing::Uniform, "hierarchical" => Sharing::Hierarchical);
text_enum!(Schedule, "schedule", "layered" => Schedule::Layered, "lazy" => Schedule::Lazy);

/// Per-role ansatz choice. All roles share one family and depth unless overridden.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxAnsatz {
    pub word: AnsatzFamily,
    pub filter: AnsatzFamily,
    pub merge: AnsatzFamily,
    pub classifier: AnsatzFamily,
}

impl BoxAnsatz {
    pub fn uniform(ansatz: AnsatzFamily) -> Self {
        Self { word: ansatz, filter: ansatz, merge: ansatz, classifier: ansatz }
    }

    pub fn for_role(&self, role: &BoxRole) -> AnsatzFamily {
        match role {
            BoxRole::Word(_) => self.word,
            BoxRole::Filter => self.filter,
            BoxRole::Merge => self.merge,
            BoxRole::Classifier => self.classifier,
        }
    }
}

/// Everything needed to turn a token sequence into an executable circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub topology: Topology,
    pub sharing: Sharing,
    pub mode: Mode,
    /// Qubits per internal wire.
    pub q: usize,
    pub ansatz: BoxAnsatz,
    #[serde(default)]
    pub schedule: Schedule,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            topology: Topology::Path,
            sharing: Sharing::Hierarchical,
            mode: Mode::Discard,
            q: 1,
            ansatz: BoxAnsatz::uniform(AnsatzFamily::new(Family::Sim14, 1)),
            schedule: Schedule::Layered,
        }
    }
}

impl ModelConfig {
    pub fn new(topology: Topology, sharing: Sharing, mode: Mode, q: usize, ansatz: AnsatzFamily) -> Self {
        Self { topology, sharing, mode, q, ansatz: BoxAnsatz::uniform(ansatz), schedule: Schedule::Layered }
    }

    pub fn build_diagram(&self, tokens: &[TokenId]) -> Result<SchemeDiagram, DiagramError> {
        match self.topology {
            Topology::Path => build_ptn(tokens),
            Topology::Convolutional => build_ctn(tokens),
        }
    }

    /// Store key selected for a box by the sharing policy.
    ///
    /// Hierarchical merges and filters key by `position.layer`, which is the
    /// sequence position for paths and the tree layer for trees.
    pub fn key_for(&self, b: &DiagramBox) -> ParamKey {
        let slot = || match self.sharing {
            Sharing::Uniform => Slot::Shared,
            Sharing::Hierarchical => Slot::Index(b.position.layer),
        };
        match b.role {
            BoxRole::Word(t) => ParamKey::Word(t),
            BoxRole::Merge => ParamKey::Merge(slot()),
            BoxRole::Filter => ParamKey::Filter(slot()),
            BoxRole::Classifier => ParamKey::Classifier,
        }
    }

    fn entry_len(&self, role: &BoxRole) -> usize {
        param_count(self.ansatz.for_role(role), box_width(role, self.q))
    }

    /// Schema covering every vocabulary word plus all keys used by `diagrams`.
    pub fn schema(&self, diagrams: &[&SchemeDiagram]) -> ParamSchema {
        let mut entries = BTreeMap::new();
        for t in 0..Vocabulary::SIZE {
            let role = BoxRole::Word(TokenId(t as u8));
            entries.insert(ParamKey::Word(TokenId(t as u8)), self.entry_len(&role));
        }
        entries.insert(ParamKey::Classifier, self.entry_len(&BoxRole::Classifier));
        for d in diagrams {
            for b in &d.boxes {
                entries.insert(self.key_for(b), self.entry_len(&b.role));
            }
        }
        ParamSchema { sharing: Some(self.sharing), entries }
    }

    /// Schema able to serve any sequence of length up to `max_len`.
    pub fn schema_for_max_len(&self, max_len: usize) -> Result<ParamSchema, DiagramError> {
        let d = self.build_diagram(&vec![TokenId(0); max_len])?;
        Ok(self.schema(&[&d]))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.q == 0 {
            return Err("q must be at least 1".into());
        }
        for a in [self.ansatz.word, self.ansatz.filter, self.ansatz.merge, self.ansatz.classifier] {
            if a.depth == 0 {
                return Err("ansatz depth must be at least 1".into());
            }
        }
        Ok(())
    }
}
