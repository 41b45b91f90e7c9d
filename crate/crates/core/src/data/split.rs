use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, SequenceRecord};

/// Train/validation/test ratios of 980/123/123 out of 1226 records.
pub const DEFAULT_SPLIT_RATIOS: [f64; 3] = [980.0 / 1226.0, 123.0 / 1226.0, 123.0 / 1226.0];

// Absorbs rounding in products like 1226 * (123 / 1226).
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplits {
    pub train: Vec<SequenceRecord>,
    pub validation: Vec<SequenceRecord>,
    pub test: Vec<SequenceRecord>,
    pub seed: u64,
}

impl DatasetSplits {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }
}

fn check_ratios(ratios: [f64; 3]) -> Result<(), DataError> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !(*r >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(DataError::InvalidRatios(ratios));
    }
    Ok(())
}

/// Seeded shuffle followed by contiguous slicing. Validation and test get
/// `floor(n * ratio)` records each and train takes the remainder.
pub fn split(records: &[SequenceRecord], ratios: [f64; 3], seed: u64) -> Result<DatasetSplits, DataError> {
    check_ratios(ratios)?;
    let n = records.len();
    if n < 3 {
        return Err(DataError::TooFewRecords { got: n });
    }
    let n_val = (n as f64 * ratios[1] + FLOOR_SLACK).floor() as usize;
    let n_test = (n as f64 * ratios[2] + FLOOR_SLACK).floor() as usize;
    let mut shuffled = records.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = shuffled.split_off(n - n_test);
    let validation = shuffled.split_off(n - n_test - n_val);
    Ok(DatasetSplits { train: shuffled, validation, test, seed })
}

/// Class-proportional sample of `n` records, returned in input order.
pub fn stratified_subset(records: &[SequenceRecord], n: usize, seed: u64) -> Vec<SequenceRecord> {
    if n >= records.len() {
        return records.to_vec();
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, r) in records.iter().enumerate() {
        by_class[(r.label & 1) as usize].push(i);
    }
    let total = records.len() as f64;
    let exact = [by_class[0].len() as f64 * n as f64 / total, by_class[1].len() as f64 * n as f64 / total];
    let mut take = [exact[0].floor() as usize, exact[1].floor() as usize];
    if take[0] + take[1] < n {
        // The class with the larger fractional part gets the leftover slot.
        let c = if exact[0].fract() >= exact[1].fract() { 0 } else { 1 };
        take[c] += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(n);
    for c in 0..2 {
        let mut idx = by_class[c].clone();
        idx.shuffle(&mut rng);
        chosen.extend_from_slice(&idx[..take[c]]);
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| records[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn records(n: usize) -> Vec<SequenceRecord> {
        (0..n).map(|i| SequenceRecord::new(format!("R{i}"), "ACD", (i % 3 == 0) as u8)).collect()
    }

    #[test]
    fn paper_counts() {
        let s = split(&records(1226), DEFAULT_SPLIT_RATIOS, 11).unwrap();
        assert_eq!(s.sizes(), (980, 123, 123));
    }

    #[test]
    fn errors() {
        assert_eq!(split(&records(2), DEFAULT_SPLIT_RATIOS, 0), Err(DataError::TooFewRecords { got: 2 }));
        assert!(matches!(split(&records(10), [0.5, 0.3, 0.3], 0), Err(DataError::InvalidRatios(_))));
    }

    #[test]
    fn stratified_keeps_proportions() {
        let recs = records(900);
        let sub = stratified_subset(&recs, 300, 4);
        assert_eq!(sub.len(), 300);
        assert_eq!(super::super::class_counts(&sub), [200, 100]);
        assert_eq!(sub, stratified_subset(&recs, 300, 4));
    }

    proptest! {
        #[test]
        fn split_partitions(n in 3usize..400, seed in any::<u64>(), a in 0.05f64..0.9) {
            let rest = (1.0 - a) / 2.0;
            let recs = records(n);
            let s = split(&recs, [a, rest, 1.0 - a - rest], seed).unwrap();
            let (tr, va, te) = s.sizes();
            prop_assert_eq!(tr + va + te, n);
            let mut seen = HashSet::new();
            for r in s.train.iter().chain(&s.validation).chain(&s.test) {
                prop_assert!(seen.insert(r.id.clone()));
            }
            prop_assert_eq!(s, split(&recs, [a, rest, 1.0 - a - rest], seed).unwrap());
        }
    }
}
