//! Synthetic data where the label is the XOR of two indicator features.
//! A linear model cannot fit it; pairwise interactions can.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::sparse::SparseVector;
use crate::trainer::LabeledInstance;

/// The four XOR patterns over two binary features, as `(f1, f2, positive)`.
pub const XOR_PATTERNS: [(bool, bool, bool); 4] = [
    (false, false, false),
    (true, false, true),
    (false, true, true),
    (true, true, false),
];

/// `copies` noisy copies of each pattern; in each pattern
/// `round(noise * copies)` randomly chosen copies have their label flipped.
/// Returned in shuffled order.
fn noisy_patterns(copies: usize, noise: f64, rng: &mut ChaCha8Rng) -> Vec<(bool, bool, bool)> {
    let flips = (noise * copies as f64).round() as usize;
    let mut out = Vec::with_capacity(4 * copies);
    for &(a, b, y) in &XOR_PATTERNS {
        let mut flip = vec![false; copies];
        flip[..flips.min(copies)].iter_mut().for_each(|f| *f = true);
        flip.shuffle(rng);
        out.extend(flip.into_iter().map(|f| (a, b, y ^ f)));
    }
    out.shuffle(rng);
    out
}

#[derive(Debug, Clone)]
pub struct XorSplit {
    pub train: Vec<LabeledInstance>,
    pub test: Vec<LabeledInstance>,
}

/// Indicator-XOR instances over features 0 and 1, split into a training
/// part holding `train_fraction` of the data and a test part.
pub fn xor_instances(copies: usize, noise: f64, train_fraction: f64, seed: u64) -> XorSplit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<LabeledInstance> = noisy_patterns(copies, noise, &mut rng)
        .into_iter()
        .map(|(a, b, y)| {
            let idx = [(a, 0), (b, 1)]
                .into_iter()
                .filter(|(on, _)| *on)
                .map(|(_, i)| i);
            LabeledInstance::new(SparseVector::indicators(idx).expect("distinct"), y)
        })
        .collect();
    let cut = (train_fraction * rows.len() as f64).round() as usize;
    let test = rows[cut..].to_vec();
    let mut train = rows;
    train.truncate(cut);
    XorSplit { train, test }
}

/// The XOR task as a four-column NE corpus (`token POS chunk tag`). Every
/// sentence holds one capitalized, globally unique name; its context holds
/// `alpha` and/or `beta` per the pattern, and the name is tagged `PER` when
/// exactly one of them is present, else left as a non-entity (`O`).
#[derive(Debug, Clone)]
pub struct XorCorpus {
    pub train: String,
    pub dev: String,
    pub test: String,
}

pub fn xor_corpus(copies: usize, noise: f64, seed: u64) -> XorCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = noisy_patterns(copies, noise, &mut rng);
    let n = rows.len();
    let (train_end, dev_end) = ((n * 8) / 10, (n * 9) / 10);
    let mut texts = [String::new(), String::new(), String::new()];
    for (id, (a, b, positive)) in rows.into_iter().enumerate() {
        let part = if id < train_end {
            0
        } else if id < dev_end {
            1
        } else {
            2
        };
        let text = &mut texts[part];
        if text.is_empty() {
            text.push_str("-DOCSTART- -X- -X- O\n\n");
        }
        let tag = if positive { "B-PER" } else { "O" };
        let _ = writeln!(text, "Name{id:05} NNP B-NP {tag}");
        if a {
            text.push_str("alpha NN I-NP O\n");
        }
        text.push_str("reported VBD B-VP O\n");
        if b {
            text.push_str("beta NN B-NP O\n");
        }
        text.push_str(". . O O\n\n");
    }
    let [train, dev, test] = texts;
    XorCorpus { train, dev, test }
}
