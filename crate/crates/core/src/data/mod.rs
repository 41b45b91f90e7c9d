//! Sequence ingestion: FASTA and label parsing, length filtering,
//! tokenization, seeded splits, synthetic datasets and the on-disk formats.

mod fasta;
mod io;
mod split;
mod synth;
mod vocab;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fasta::{filter_and_label, parse_fasta, parse_labels, FilterSummary, LabelTable, LengthBounds};
pub use io::{read_dataset, write_dataset, DatasetManifest, SplitCounts};
pub use split::{split, stratified_subset, DatasetSplits, DEFAULT_SPLIT_RATIOS};
pub use synth::{motif_label, synth_motif_dataset, synth_uniprot, SyntheticUniprot};
pub use vocab::{TokenId, Vocabulary, CANONICAL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("malformed FASTA at line {line}: sequence data before any header")]
    MalformedFasta { line: usize },
    #[error("malformed label file at line {line}: expected `accession<TAB>location`")]
    MalformedLabels { line: usize },
    #[error("malformed dataset file at line {line}: {reason}")]
    MalformedDataset { line: usize, reason: String },
    #[error("need at least 3 records to split, got {got}")]
    TooFewRecords { got: usize },
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),
    #[error("motif ({0}, {1}) is outside the vocabulary")]
    InvalidMotif(TokenId, TokenId),
    #[error("vocabulary size must be in 2..=22, got {0}")]
    InvalidVocabSize(usize),
    #[error("sequence length must be at least 2, got {0}")]
    InvalidSequenceLength(usize),
    #[error("{0}")]
    Io(String),
}

/// A labelled sequence. Label 1 is the membrane class, 0 the cytosolic one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub id: String,
    pub sequence: String,
    pub label: u8,
}

impl SequenceRecord {
    pub fn new(id: impl Into<String>, sequence: impl Into<String>, label: u8) -> Self {
        Self { id: id.into(), sequence: sequence.into(), label }
    }

    pub fn len(&self) -> usize {
        self.sequence.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }
}

/// One token id per residue, in order.
pub fn tokenize(record: &SequenceRecord) -> Vec<TokenId> {
    Vocabulary::standard().encode(&record.sequence)
}

pub fn detokenize(tokens: &[TokenId]) -> String {
    Vocabulary::standard().decode(tokens)
}

/// Number of records per class, indexed by label.
pub fn class_counts(records: &[SequenceRecord]) -> [usize; 2] {
    let mut c = [0; 2];
    for r in records {
        c[(r.label & 1) as usize] += 1;
    }
    c
}
