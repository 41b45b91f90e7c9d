use serde::{Deserialize, Serialize};

use super::{class_counts, DataError, DatasetSplits, FilterSummary, LengthBounds, SequenceRecord};

/// Canonical dataset text: one `id<TAB>label<TAB>sequence` line per record.
pub fn write_dataset(records: &[SequenceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.id);
        out.push('\t');
        out.push(if r.label == 1 { '1' } else { '0' });
        out.push('\t');
        out.push_str(&r.sequence);
        out.push('\n');
    }
    out
}

pub fn read_dataset(text: &str) -> Result<Vec<SequenceRecord>, DataError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| DataError::MalformedDataset { line: i + 1, reason: reason.to_string() };
        let mut cols = line.split('\t');
        let (Some(id), Some(label), Some(seq), None) = (cols.next(), cols.next(), cols.next(), cols.next()) else {
            return Err(bad("expected three tab-separated columns"));
        };
        let label = match label {
            "0" => 0,
            "1" => 1,
            _ => return Err(bad("label must be 0 or 1")),
        };
        if id.is_empty() {
            return Err(bad("empty id"));
        }
        if seq.is_empty() {
            return Err(bad("empty sequence"));
        }
        out.push(SequenceRecord::new(id, seq, label));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub total: usize,
    pub class_0: usize,
    pub class_1: usize,
}

impl SplitCounts {
    pub fn of(records: &[SequenceRecord]) -> Self {
        let [class_0, class_1] = class_counts(records);
        Self { total: records.len(), class_0, class_1 }
    }
}

/// Summary written next to a prepared dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub bounds: LengthBounds,
    pub filter: FilterSummary,
    pub labels_ambiguous: usize,
    pub labels_unrecognized: usize,
    pub classes: SplitCounts,
    pub split_seed: u64,
    pub split_ratios: [f64; 3],
    pub train: SplitCounts,
    pub validation: SplitCounts,
    pub test: SplitCounts,
}

impl DatasetManifest {
    pub const VERSION: u32 = 1;

    pub fn new(
        bounds: LengthBounds,
        filter: FilterSummary,
        labels: &super::LabelTable,
        records: &[SequenceRecord],
        splits: &DatasetSplits,
        ratios: [f64; 3],
    ) -> Self {
        Self {
            version: Self::VERSION,
            bounds,
            filter,
            labels_ambiguous: labels.ambiguous,
            labels_unrecognized: labels.unrecognized,
            classes: SplitCounts::of(records),
            split_seed: splits.seed,
            split_ratios: ratios,
            train: SplitCounts::of(&splits.train),
            validation: SplitCounts::of(&splits.validation),
            test: SplitCounts::of(&splits.test),
        }
    }
}
