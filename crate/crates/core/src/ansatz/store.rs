use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::TokenId;

use super::AnsatzError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sharing {
    /// One parameter set per role.
    Uniform,
    /// One set per sequence position (paths) or per tree layer (trees).
    Hierarchical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Shared,
    Index(usize),
}

/// Identity of a trainable parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKey {
    Word(TokenId),
    Merge(Slot),
    Filter(Slot),
    Classifier,
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let slot = |s: &Slot| match s {
            Slot::Shared => "shared".to_string(),
            Slot::Index(i) => i.to_string(),
        };
        match self {
            ParamKey::Word(t) => write!(f, "word:{}", t.0),
            ParamKey::Merge(s) => write!(f, "merge:{}", slot(s)),
            ParamKey::Filter(s) => write!(f, "filter:{}", slot(s)),
            ParamKey::Classifier => write!(f, "classifier"),
        }
    }
}

impl FromStr for ParamKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let slot = |v: &str| -> Result<Slot, String> {
            if v == "shared" {
                Ok(Slot::Shared)
            } else {
                v.parse().map(Slot::Index).map_err(|_| format!("bad slot `{v}`"))
            }
        };
        match s.split_once(':') {
            None if s == "classifier" => Ok(ParamKey::Classifier),
            Some(("word", v)) => v
                .parse()
                .map(|t| ParamKey::Word(TokenId(t)))
                .map_err(|_| format!("bad token `{v}`")),
            Some(("merge", v)) => slot(v).map(ParamKey::Merge),
            Some(("filter", v)) => slot(v).map(ParamKey::Filter),
            _ => Err(format!("unknown parameter key `{s}`")),
        }
    }
}

impl Serialize for ParamKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParamKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Key set and vector length of every parameter entry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParamSchema {
    pub sharing: Option<Sharing>,
    pub entries: BTreeMap<ParamKey, usize>,
}

impl ParamSchema {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_params(&self) -> usize {
        self.entries.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// Angles uniform on `[-π, π)`.
    UniformAngle,
    /// Angles drawn from `N(0, σ²)`.
    SmallNormal { sigma: f64 },
}

impl Default for InitScheme {
    fn default() -> Self {
        InitScheme::UniformAngle
    }
}

/// Trainable parameters, keyed by box identity under a sharing policy.
/// Iteration and flattening follow key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    pub sharing: Sharing,
    pub entries: BTreeMap<ParamKey, Vec<f64>>,
}

impl ParamStore {
    pub fn new(sharing: Sharing) -> Self {
        Self { sharing, entries: BTreeMap::new() }
    }

    pub fn get(&self, key: &ParamKey) -> Result<&[f64], AnsatzError> {
        self.entries
            .get(key)
            .map(Vec::as_slice)
            .ok_or(AnsatzError::UnboundParameters(*key))
    }

    pub fn insert(&mut self, key: ParamKey, values: Vec<f64>) {
        self.entries.insert(key, values);
    }

    pub fn total_params(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    /// Start offset of each key in [`ParamStore::flatten`].
    pub fn offsets(&self) -> BTreeMap<ParamKey, usize> {
        let mut off = 0;
        self.entries
            .iter()
            .map(|(k, v)| {
                let o = off;
                off += v.len();
                (*k, o)
            })
            .collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.entries.values().flatten().copied().collect()
    }

    /// Overwrite all values from a flat vector in key order.
    pub fn assign(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.total_params(), "flat parameter length mismatch");
        let mut it = flat.iter();
        for v in self.entries.values_mut() {
            for x in v.iter_mut() {
                *x = *it.next().unwrap();
            }
        }
    }

    pub fn with_flat(&self, flat: &[f64]) -> Self {
        let mut s = self.clone();
        s.assign(flat);
        s
    }

    pub fn schema(&self) -> ParamSchema {
        ParamSchema {
            sharing: Some(self.sharing),
            entries: self.entries.iter().map(|(k, v)| (*k, v.len())).collect(),
        }
    }
}

/// Seeded initialization of every schema entry, in key order.
pub fn init_params(schema: &ParamSchema, seed: u64, scheme: InitScheme) -> ParamStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new(schema.sharing.unwrap_or(Sharing::Hierarchical));
    for (key, &len) in &schema.entries {
        let values = match scheme {
            InitScheme::UniformAngle => {
                let dist = Uniform::new(-std::f64::consts::PI, std::f64::consts::PI);
                (0..len).map(|_| dist.sample(&mut rng)).collect()
            }
            InitScheme::SmallNormal { sigma } => {
                let dist = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
                (0..len).map(|_| dist.sample(&mut rng)).collect()
            }
        };
        store.insert(*key, values);
    }
    store
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_text_round_trip() {
        for k in [
            ParamKey::Word(TokenId(21)),
            ParamKey::Merge(Slot::Shared),
            ParamKey::Merge(Slot::Index(198)),
            ParamKey::Filter(Slot::Index(2)),
            ParamKey::Classifier,
        ] {
            assert_eq!(k.to_string().parse::<ParamKey>().unwrap(), k);
        }
        assert!("merge:x".parse::<ParamKey>().is_err());
    }

    #[test]
    fn init_is_seeded() {
        let mut schema = ParamSchema::default();
        schema.entries.insert(ParamKey::Classifier, 3);
        schema.entries.insert(ParamKey::Merge(Slot::Shared), 8);
        let a = init_params(&schema, 11, InitScheme::UniformAngle);
        let b = init_params(&schema, 11, InitScheme::UniformAngle);
        let c = init_params(&schema, 12, InitScheme::UniformAngle);
        assert_eq!(a.flatten().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                   b.flatten().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        assert_ne!(a, c);
        assert!(a.flatten().iter().all(|x| x.abs() <= std::f64::consts::PI));
        let n = init_params(&schema, 11, InitScheme::SmallNormal { sigma: 0.01 });
        assert!(n.flatten().iter().all(|x| x.abs() < 0.1));
    }

    #[test]
    fn flatten_assign_round_trip() {
        let mut s = ParamStore::new(Sharing::Uniform);
        s.insert(ParamKey::Classifier, vec![1.0, 2.0]);
        s.insert(ParamKey::Word(TokenId(0)), vec![3.0]);
        let flat = s.flatten();
        // Word(0) sorts before Classifier.
        assert_eq!(flat, vec![3.0, 1.0, 2.0]);
        let t = s.with_flat(&[4.0, 5.0, 6.0]);
        assert_eq!(t.get(&ParamKey::Classifier).unwrap(), &[5.0, 6.0]);
        assert_eq!(s.offsets()[&ParamKey::Classifier], 1);
    }
}
