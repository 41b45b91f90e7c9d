use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{DataError, SequenceRecord, Vocabulary};

/// Parse FASTA text into `(accession, sequence)` pairs in file order.
///
/// UniProt headers (`>db|ACCESSION|ENTRY ...`) yield the accession field;
/// other headers yield their first whitespace-delimited token.
pub fn parse_fasta(text: &str) -> Result<Vec<(String, String)>, DataError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            out.push((accession(header), String::new()));
        } else {
            match out.last_mut() {
                Some((_, seq)) => seq.extend(line.chars().filter(|c| !c.is_whitespace())),
                None => return Err(DataError::MalformedFasta { line: i + 1 }),
            }
        }
    }
    Ok(out)
}

fn accession(header: &str) -> String {
    let token = header.split_whitespace().next().unwrap_or("");
    let fields: Vec<&str> = token.split('|').collect();
    match fields.as_slice() {
        [_, acc, ..] if !acc.is_empty() => acc.to_string(),
        _ => token.to_string(),
    }
}

/// Labels read from a two-column TSV of accession and location text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelTable {
    pub labels: HashMap<String, u8>,
    /// Rows mentioning both a membrane and a cytosolic location.
    pub ambiguous: usize,
    /// Rows mentioning neither.
    pub unrecognized: usize,
}

impl LabelTable {
    pub fn get(&self, id: &str) -> Option<u8> {
        self.labels.get(id).copied()
    }
}

fn location_label(location: &str) -> Option<Option<u8>> {
    let l = location.to_ascii_lowercase();
    let membrane = l.contains("membrane");
    let cytosol = l.contains("cytosol") || l.contains("cytoplasm");
    match (membrane, cytosol) {
        (true, false) => Some(Some(1)),
        (false, true) => Some(Some(0)),
        (true, true) => Some(None),
        (false, false) => None,
    }
}

pub fn parse_labels(text: &str) -> Result<LabelTable, DataError> {
    let mut table = LabelTable::default();
    let mut conflicting = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, location) = line.split_once('\t').ok_or(DataError::MalformedLabels { line: i + 1 })?;
        let id = id.trim();
        if id.is_empty() {
            return Err(DataError::MalformedLabels { line: i + 1 });
        }
        match location_label(location) {
            Some(Some(label)) => {
                if let Some(prev) = table.labels.insert(id.to_string(), label) {
                    if prev != label {
                        conflicting.push(id.to_string());
                    }
                }
            }
            Some(None) => table.ambiguous += 1,
            None => table.unrecognized += 1,
        }
    }
    for id in conflicting {
        if table.labels.remove(&id).is_some() {
            table.ambiguous += 1;
        }
    }
    Ok(table)
}

/// Inclusive residue-count bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBounds {
    pub min: usize,
    pub max: usize,
}

impl Default for LengthBounds {
    fn default() -> Self {
        Self { min: 80, max: 200 }
    }
}

/// What [`filter_and_label`] dropped or rewrote.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub input: usize,
    pub kept: usize,
    pub too_short: usize,
    pub too_long: usize,
    pub unlabeled: usize,
    /// Residues outside the canonical 20 rewritten to the `UNK` symbol.
    pub substituted_residues: usize,
    pub records_with_substitutions: usize,
}

pub fn filter_and_label(
    records: &[(String, String)],
    labels: &LabelTable,
    bounds: LengthBounds,
) -> (Vec<SequenceRecord>, FilterSummary) {
    let vocab = Vocabulary::standard();
    let unk = vocab.symbol(super::TokenId::UNK);
    let mut summary = FilterSummary { input: records.len(), ..Default::default() };
    let mut kept = Vec::new();
    for (id, seq) in records {
        let len = seq.chars().count();
        if len < bounds.min {
            summary.too_short += 1;
            continue;
        }
        if len > bounds.max {
            summary.too_long += 1;
            continue;
        }
        let Some(label) = labels.get(id) else {
            summary.unlabeled += 1;
            continue;
        };
        let mut substituted = 0;
        let cleaned: String = seq
            .chars()
            .map(|c| {
                if vocab.is_canonical(c) {
                    c.to_ascii_uppercase()
                } else {
                    substituted += 1;
                    unk
                }
            })
            .collect();
        if substituted > 0 {
            summary.substituted_residues += substituted;
            summary.records_with_substitutions += 1;
        }
        kept.push(SequenceRecord::new(id.clone(), cleaned, label));
    }
    summary.kept = kept.len();
    (kept, summary)
}
