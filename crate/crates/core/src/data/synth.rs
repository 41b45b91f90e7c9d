use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DataError, SequenceRecord, TokenId, Vocabulary};

/// 1 if `motif` occurs as an adjacent pair in `tokens`.
pub fn motif_label(tokens: &[TokenId], motif: (TokenId, TokenId)) -> u8 {
    tokens.windows(2).any(|w| w[0] == motif.0 && w[1] == motif.1) as u8
}

/// Uniform random sequences over the first `vocab_size` tokens, labelled by
/// motif presence and balanced by rejection: `n / 2` positives, the rest negative.
pub fn synth_motif_dataset(
    n_samples: usize,
    seq_len: usize,
    vocab_size: usize,
    motif: (TokenId, TokenId),
    seed: u64,
) -> Result<Vec<SequenceRecord>, DataError> {
    if !(2..=Vocabulary::SIZE).contains(&vocab_size) {
        return Err(DataError::InvalidVocabSize(vocab_size));
    }
    if motif.0.index() >= vocab_size || motif.1.index() >= vocab_size {
        return Err(DataError::InvalidMotif(motif.0, motif.1));
    }
    if seq_len < 2 {
        return Err(DataError::InvalidSequenceLength(seq_len));
    }
    let vocab = Vocabulary::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut need = [n_samples - n_samples / 2, n_samples / 2];
    let mut out = Vec::with_capacity(n_samples);
    while need[0] + need[1] > 0 {
        let tokens: Vec<TokenId> = (0..seq_len).map(|_| TokenId(rng.gen_range(0..vocab_size) as u8)).collect();
        let label = motif_label(&tokens, motif);
        if need[label as usize] == 0 {
            continue;
        }
        need[label as usize] -= 1;
        out.push(SequenceRecord::new(format!("motif-{:05}", out.len()), vocab.decode(&tokens), label));
    }
    Ok(out)
}

/// UniProt-style FASTA and label TSV text.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticUniprot {
    pub fasta: String,
    pub labels: String,
}

const HYDROPHOBIC: &[u8] = b"LIVFAMW";
const POLAR: &[u8] = b"DEKRNQSTGH";

/// Protein-like records for exercising the ingestion pipeline. Lengths span
/// 60..=230 so some fall outside the default bounds; membrane sequences are
/// enriched in hydrophobic residues, cytosolic ones in polar residues; a few
/// records carry nonstandard residues, conflicting locations or no label row.
pub fn synth_uniprot(n: usize, seed: u64) -> SyntheticUniprot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let canonical = super::CANONICAL.as_bytes();
    let mut fasta = String::new();
    let mut labels = String::new();
    for i in 0..n {
        let acc = format!("S{:05}", i + 1);
        let membrane = rng.gen_bool(0.5);
        let len = rng.gen_range(60..=230);
        let bias = if membrane { HYDROPHOBIC } else { POLAR };
        let seq: String = (0..len)
            .map(|_| {
                let u: f64 = rng.gen();
                if u < 0.004 {
                    b"XBZU"[rng.gen_range(0..4)] as char
                } else if u < 0.45 {
                    bias[rng.gen_range(0..bias.len())] as char
                } else {
                    canonical[rng.gen_range(0..canonical.len())] as char
                }
            })
            .collect();
        writeln!(fasta, ">sp|{acc}|SYN{}_HUMAN Synthetic protein {} OS=Homo sapiens", i + 1, i + 1).unwrap();
        for chunk in seq.as_bytes().chunks(60) {
            fasta.push_str(std::str::from_utf8(chunk).unwrap());
            fasta.push('\n');
        }
        let u: f64 = rng.gen();
        let location = if u < 0.03 {
            continue;
        } else if u < 0.05 {
            "Cell membrane; Cytoplasm"
        } else if membrane {
            "Cell membrane"
        } else if rng.gen_bool(0.5) {
            "Cytoplasm"
        } else {
            "Cytosol"
        };
        writeln!(labels, "{acc}\t{location}").unwrap();
    }
    SyntheticUniprot { fasta, labels }
}
