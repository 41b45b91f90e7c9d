//! Typed string diagrams for path (PTN) and convolutional (CTN) schemes.
//!
//! Boxes are processes with typed input and output ports. Every wire runs
//! from a box output port to a box input port, except the single sentence
//! wire leaving the classifier, which is the diagram output.
//!
//! | role       | inputs | outputs |
//! |------------|--------|---------|
//! | word       | 0      | 1 (τ)   |
//! | filter     | 2 (τ)  | 2 (τ)   |
//! | merge      | 2 (τ)  | 1 (τ)   |
//! | classifier | 1 (τ)  | 1 (σ)   |

use std::collections::{BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{TokenId, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("cannot build a diagram from an empty token sequence")]
    EmptySequence,
    #[error("token id {0} is outside the vocabulary")]
    InvalidToken(TokenId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WireType {
    /// τ: carries `q` qubits.
    Internal,
    /// σ: carries `q'` qubits.
    Sentence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoxId(pub usize);

impl fmt::Display for BoxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoxRole {
    Word(TokenId),
    Filter,
    Merge,
    Classifier,
}

impl BoxRole {
    /// `(inputs, outputs)` required by the role.
    pub fn arity(&self) -> (usize, usize) {
        match self {
            BoxRole::Word(_) => (0, 1),
            BoxRole::Filter => (2, 2),
            BoxRole::Merge => (2, 1),
            BoxRole::Classifier => (1, 1),
        }
    }

    pub fn output_type(&self) -> WireType {
        match self {
            BoxRole::Classifier => WireType::Sentence,
            _ => WireType::Internal,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoxRole::Word(_) => "word",
            BoxRole::Filter => "filter",
            BoxRole::Merge => "merge",
            BoxRole::Classifier => "classifier",
        }
    }
}

/// Layer index and index within the layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub layer: usize,
    pub index: usize,
}

impl Position {
    pub fn new(layer: usize, index: usize) -> Self {
        Self { layer, index }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramBox {
    pub id: BoxId,
    pub role: BoxRole,
    pub position: Position,
    pub in_arity: usize,
    pub out_arity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Port {
    pub node: BoxId,
    pub port: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Endpoint {
    Box(Port),
    /// The diagram's output boundary.
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Wire {
    pub source: Port,
    pub target: Endpoint,
    pub kind: WireType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    Path,
    Convolutional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeDiagram {
    /// Boxes in a topological order.
    pub boxes: Vec<DiagramBox>,
    pub wires: Vec<Wire>,
    pub topology: Topology,
    /// Number of tokens before padding.
    pub sequence_length: usize,
    /// Number of word boxes (equals `sequence_length` for paths).
    pub padded_length: usize,
}

impl SchemeDiagram {
    pub fn get(&self, id: BoxId) -> Option<&DiagramBox> {
        self.boxes.get(id.0).filter(|b| b.id == id)
    }

    pub fn count(&self, pred: impl Fn(&BoxRole) -> bool) -> usize {
        self.boxes.iter().filter(|b| pred(&b.role)).count()
    }

    /// Word tokens in leaf order, padding included.
    pub fn tokens(&self) -> Vec<TokenId> {
        self.boxes
            .iter()
            .filter_map(|b| match b.role {
                BoxRole::Word(t) => Some(t),
                _ => None,
            })
            .collect()
    }

    /// Tree depth of a convolutional diagram (`log2(padded_length)`); zero for paths.
    pub fn tree_depth(&self) -> usize {
        match self.topology {
            Topology::Path => 0,
            Topology::Convolutional => self.padded_length.trailing_zeros() as usize,
        }
    }

    /// Wire feeding input `port` of `node`.
    pub fn incoming(&self, node: BoxId, port: usize) -> Option<&Wire> {
        self.wires
            .iter()
            .find(|w| w.target == Endpoint::Box(Port { node, port }))
    }

    /// Line-oriented listing: one box per line as
    /// `id<TAB>role<TAB>layer,index<TAB>inputs<TAB>outputs`.
    ///
    /// Inputs list the feeding `box.port` per input port, outputs the consuming
    /// `box.port` (or `out` for the diagram output). `-` marks an empty list.
    pub fn to_text(&self) -> String {
        let vocab = Vocabulary::standard();
        let mut out = String::new();
        let topo = match self.topology {
            Topology::Path => "path",
            Topology::Convolutional => "convolutional",
        };
        let _ = writeln!(out, "# protqtn-diagram v1");
        let _ = writeln!(
            out,
            "# topology={topo} sequence_length={} padded_length={}",
            self.sequence_length, self.padded_length
        );
        for b in &self.boxes {
            let role = match b.role {
                BoxRole::Word(t) => format!("word:{}:{}", t.0, vocab.symbol(t)),
                other => other.name().to_string(),
            };
            let inputs: Vec<String> = (0..b.in_arity)
                .map(|p| match self.incoming(b.id, p) {
                    Some(w) => format!("{}.{}", w.source.node, w.source.port),
                    None => "?".to_string(),
                })
                .collect();
            let outputs: Vec<String> = (0..b.out_arity)
                .map(|p| {
                    let src = Port { node: b.id, port: p };
                    match self.wires.iter().find(|w| w.source == src).map(|w| w.target) {
                        Some(Endpoint::Box(t)) => format!("{}.{}", t.node, t.port),
                        Some(Endpoint::Output) => "out".to_string(),
                        None => "?".to_string(),
                    }
                })
                .collect();
            let join = |v: Vec<String>| if v.is_empty() { "-".to_string() } else { v.join(",") };
            let _ = writeln!(
                out,
                "{}\t{}\t{},{}\t{}\t{}",
                b.id,
                role,
                b.position.layer,
                b.position.index,
                join(inputs),
                join(outputs)
            );
        }
        out
    }
}

struct Builder {
    boxes: Vec<DiagramBox>,
    wires: Vec<Wire>,
}

impl Builder {
    fn new() -> Self {
        Self { boxes: Vec::new(), wires: Vec::new() }
    }

    fn add(&mut self, role: BoxRole, position: Position) -> BoxId {
        let id = BoxId(self.boxes.len());
        let (in_arity, out_arity) = role.arity();
        self.boxes.push(DiagramBox { id, role, position, in_arity, out_arity });
        id
    }

    fn connect(&mut self, source: Port, node: BoxId, port: usize) {
        self.wires.push(Wire {
            source,
            target: Endpoint::Box(Port { node, port }),
            kind: WireType::Internal,
        });
    }

    fn finish(mut self, root: Port, classifier_layer: usize) -> (Vec<DiagramBox>, Vec<Wire>) {
        let c = self.add(BoxRole::Classifier, Position::new(classifier_layer, 0));
        self.connect(root, c, 0);
        self.wires.push(Wire {
            source: Port { node: c, port: 0 },
            target: Endpoint::Output,
            kind: WireType::Sentence,
        });
        (self.boxes, self.wires)
    }
}

fn check_tokens(tokens: &[TokenId]) -> Result<(), DiagramError> {
    if tokens.is_empty() {
        return Err(DiagramError::EmptySequence);
    }
    let vocab = Vocabulary::standard();
    match tokens.iter().find(|t| !vocab.contains(**t)) {
        Some(&t) => Err(DiagramError::InvalidToken(t)),
        None => Ok(()),
    }
}

/// Left-to-right chain: merge `i` folds the running carry with word `i + 1`.
pub fn build_ptn(tokens: &[TokenId]) -> Result<SchemeDiagram, DiagramError> {
    check_tokens(tokens)?;
    let n = tokens.len();
    let mut b = Builder::new();
    let words: Vec<BoxId> = tokens
        .iter()
        .enumerate()
        .map(|(i, &t)| b.add(BoxRole::Word(t), Position::new(0, i)))
        .collect();
    let mut carry = Port { node: words[0], port: 0 };
    for (i, &word) in words.iter().enumerate().skip(1) {
        let m = b.add(BoxRole::Merge, Position::new(i - 1, 0));
        b.connect(carry, m, 0);
        b.connect(Port { node: word, port: 0 }, m, 1);
        carry = Port { node: m, port: 0 };
    }
    let (boxes, wires) = b.finish(carry, n - 1);
    Ok(SchemeDiagram {
        boxes,
        wires,
        topology: Topology::Path,
        sequence_length: n,
        padded_length: n,
    })
}

/// Balanced binary tree over the right-padded sequence with a filter layer
/// ahead of every merge layer. Filters sit on the adjacent wire pairs that
/// straddle two merges: `(1,2), (3,4), ...` (0-indexed).
pub fn build_ctn(tokens: &[TokenId]) -> Result<SchemeDiagram, DiagramError> {
    check_tokens(tokens)?;
    let n = tokens.len();
    let padded = n.next_power_of_two();
    let depth = padded.trailing_zeros() as usize;
    let mut b = Builder::new();
    let mut live: Vec<Port> = tokens
        .iter()
        .copied()
        .chain(std::iter::repeat(TokenId::PAD))
        .take(padded)
        .enumerate()
        .map(|(i, t)| Port { node: b.add(BoxRole::Word(t), Position::new(0, i)), port: 0 })
        .collect();

    for layer in 1..=depth {
        let width = live.len();
        for j in 0..(width / 2).saturating_sub(1) {
            let f = b.add(BoxRole::Filter, Position::new(layer, j));
            let (l, r) = (2 * j + 1, 2 * j + 2);
            b.connect(live[l], f, 0);
            b.connect(live[r], f, 1);
            live[l] = Port { node: f, port: 0 };
            live[r] = Port { node: f, port: 1 };
        }
        let mut next = Vec::with_capacity(width / 2);
        for j in 0..width / 2 {
            let m = b.add(BoxRole::Merge, Position::new(layer, j));
            b.connect(live[2 * j], m, 0);
            b.connect(live[2 * j + 1], m, 1);
            next.push(Port { node: m, port: 0 });
        }
        live = next;
    }
    let (boxes, wires) = b.finish(live[0], depth + 1);
    Ok(SchemeDiagram {
        boxes,
        wires,
        topology: Topology::Convolutional,
        sequence_length: n,
        padded_length: padded,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Violation {
    /// Declared arity disagrees with the role, or the wiring disagrees with the arity.
    ArityViolation(BoxId),
    /// A wire's type does not match its source port.
    TypeViolation { source: Port },
    /// A wire refers to a box that does not exist.
    UnknownBox(BoxId),
    /// Two wires share an endpoint port.
    PortReused(Port),
    /// Box ids do not match their index in the box list.
    IdMismatch(BoxId),
    Cycle(Vec<BoxId>),
    MultipleOutputs,
    MissingOutput,
}

/// Every invariant violation in the diagram. An empty list means the diagram is valid.
pub fn validate(diagram: &SchemeDiagram) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = diagram.boxes.len();
    for (i, b) in diagram.boxes.iter().enumerate() {
        if b.id.0 != i {
            out.push(Violation::IdMismatch(b.id));
        }
    }
    if !out.is_empty() {
        return out;
    }

    let mut ins = vec![0usize; n];
    let mut outs = vec![0usize; n];
    let mut seen_sources = BTreeSet::new();
    let mut seen_targets = BTreeSet::new();
    let mut output_wires = 0;
    let mut arity_bad = BTreeSet::new();
    for w in &diagram.wires {
        let src = w.source;
        let Some(sb) = diagram.boxes.get(src.node.0) else {
            out.push(Violation::UnknownBox(src.node));
            continue;
        };
        outs[src.node.0] += 1;
        if src.port >= sb.out_arity {
            arity_bad.insert(sb.id);
        }
        if !seen_sources.insert(src) {
            out.push(Violation::PortReused(src));
        }
        if w.kind != sb.role.output_type() {
            out.push(Violation::TypeViolation { source: src });
        }
        match w.target {
            Endpoint::Output => output_wires += 1,
            Endpoint::Box(t) => {
                let Some(tb) = diagram.boxes.get(t.node.0) else {
                    out.push(Violation::UnknownBox(t.node));
                    continue;
                };
                ins[t.node.0] += 1;
                if t.port >= tb.in_arity {
                    arity_bad.insert(tb.id);
                }
                if !seen_targets.insert(t) {
                    out.push(Violation::PortReused(t));
                }
                if w.kind != WireType::Internal {
                    out.push(Violation::TypeViolation { source: src });
                }
            }
        }
    }
    for b in &diagram.boxes {
        let declared = (b.in_arity, b.out_arity);
        if declared != b.role.arity() || ins[b.id.0] != b.in_arity || outs[b.id.0] != b.out_arity {
            arity_bad.insert(b.id);
        }
    }
    out.extend(arity_bad.into_iter().map(Violation::ArityViolation));

    let classifiers = diagram.count(|r| matches!(r, BoxRole::Classifier));
    if classifiers > 1 || output_wires > 1 {
        out.push(Violation::MultipleOutputs);
    } else if classifiers == 0 || output_wires == 0 {
        out.push(Violation::MissingOutput);
    }

    // Kahn's algorithm over box-to-box wires.
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for w in &diagram.wires {
        if let Endpoint::Box(t) = w.target {
            if w.source.node.0 < n && t.node.0 < n {
                indeg[t.node.0] += 1;
                succ[w.source.node.0].push(t.node.0);
            }
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut visited = 0;
    while let Some(i) = queue.pop_front() {
        visited += 1;
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                queue.push_back(j);
            }
        }
    }
    if visited < n {
        let stuck = (0..n).filter(|&i| indeg[i] > 0).map(BoxId).collect();
        out.push(Violation::Cycle(stuck));
    }
    out
}
