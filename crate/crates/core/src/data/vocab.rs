use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense token identifier in `0..Vocabulary::SIZE`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u8);

impl TokenId {
    pub const PAD: TokenId = TokenId(20);
    pub const UNK: TokenId = TokenId(21);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The 20 canonical amino acids in id order.
pub const CANONICAL: &str = "ACDEFGHIKLMNPQRSTVWY";

/// Amino-acid vocabulary: the 20 canonical residues at ids 0..=19, then
/// `PAD` (20) and `UNK` (21).
#[derive(Debug, Clone, Copy, Default)]
pub struct Vocabulary;

impl Vocabulary {
    pub const SIZE: usize = 22;

    pub fn standard() -> Self {
        Vocabulary
    }

    pub fn size(&self) -> usize {
        Self::SIZE
    }

    /// Id of a residue letter; `_` is `PAD` and anything else outside the
    /// canonical 20 is `UNK`.
    pub fn id(&self, residue: char) -> TokenId {
        if residue == '_' {
            return TokenId::PAD;
        }
        let upper = residue.to_ascii_uppercase();
        match CANONICAL.find(upper) {
            Some(i) => TokenId(i as u8),
            None => TokenId::UNK,
        }
    }

    pub fn is_canonical(&self, residue: char) -> bool {
        CANONICAL.contains(residue.to_ascii_uppercase())
    }

    /// Printable symbol for a token. `PAD` renders as `_` and `UNK` as `X`.
    pub fn symbol(&self, token: TokenId) -> char {
        match token {
            TokenId::PAD => '_',
            TokenId::UNK => 'X',
            TokenId(i) => CANONICAL.as_bytes()[i as usize] as char,
        }
    }

    pub fn encode(&self, sequence: &str) -> Vec<TokenId> {
        sequence.chars().map(|c| self.id(c)).collect()
    }

    pub fn decode(&self, tokens: &[TokenId]) -> String {
        tokens.iter().map(|&t| self.symbol(t)).collect()
    }

    pub fn contains(&self, token: TokenId) -> bool {
        token.index() < Self::SIZE
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_dense() {
        let v = Vocabulary::standard();
        let ids: Vec<usize> = CANONICAL.chars().map(|c| v.id(c).index()).collect();
        assert_eq!(ids, (0..20).collect::<Vec<_>>());
        assert_eq!(TokenId::PAD.index(), 20);
        assert_eq!(TokenId::UNK.index(), 21);
    }

    #[test]
    fn noncanonical_maps_to_unk() {
        let v = Vocabulary::standard();
        for c in ['X', 'B', 'Z', 'J', 'U', 'O', '*'] {
            assert_eq!(v.id(c), TokenId::UNK);
        }
        assert_eq!(v.id('a'), TokenId(0));
    }
}
