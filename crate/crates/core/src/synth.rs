//! Seeded synthetic corpora for benchmarks and property tests: an
//! inflection-style language with lexeme+exponent additive semantics, a
//! Zipfian memorization corpus, and bulk random corpora for scaling runs.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{EmbeddingTable, WordEntry};

const CONSONANTS: &[u8] = b"kltnspmvrj";
const VOWELS: &[u8] = b"aeiouy";

#[derive(Debug, Clone)]
pub struct InflectionSpec {
    pub n_lexemes: usize,
    pub n_exponents: usize,
    pub dim: usize,
    /// Standard deviation of the iid Gaussian noise added per word.
    pub noise: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct InflectionCorpus {
    /// One entry per lexeme x exponent, tagged `lexeme` and `exponent`.
    pub entries: Vec<WordEntry>,
    pub table: EmbeddingTable,
    /// Exponent tag -> the word-final 4-gram unique to that exponent.
    pub final_cues: BTreeMap<String, String>,
}

fn random_stems(count: usize, rng: &mut ChaCha12Rng) -> Vec<String> {
    // Distinct random CVCV stems; systematic enumeration is avoided because
    // it makes stem endings constant, which would give boundary-spanning
    // cues the same incidence as the suffix cues.
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut s = String::with_capacity(4);
        s.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char);
        s.push(VOWELS[rng.gen_range(0..VOWELS.len())] as char);
        s.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char);
        s.push(VOWELS[rng.gen_range(0..VOWELS.len())] as char);
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

fn suffix(j: usize) -> String {
    // VCV, distinct for j < 360.
    let c = CONSONANTS.len();
    let v = VOWELS.len();
    let mut s = String::with_capacity(3);
    s.push(VOWELS[j % v] as char);
    s.push(CONSONANTS[(j / v) % c] as char);
    s.push(VOWELS[(j / (v * c)) % v] as char);
    s
}

/// Each word is stem+suffix; its embedding is lexeme vector + exponent
/// vector + noise. Every exponent ends in a suffix whose final trigram is
/// unique to it, so the word-final 4-gram identifies the exponent.
pub fn inflection_corpus(spec: &InflectionSpec) -> InflectionCorpus {
    assert!(spec.n_lexemes <= 3600, "at most 3600 distinct stems");
    assert!(spec.n_exponents <= 360, "at most 360 distinct suffixes");
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let normal = StandardNormal;
    let gauss = |rng: &mut ChaCha12Rng| -> f64 { normal.sample(rng) };

    let stems = random_stems(spec.n_lexemes, &mut rng);
    let lexeme_vecs: Vec<Vec<f64>> = (0..spec.n_lexemes)
        .map(|_| (0..spec.dim).map(|_| gauss(&mut rng)).collect())
        .collect();
    let exponent_vecs: Vec<Vec<f64>> = (0..spec.n_exponents)
        .map(|_| (0..spec.dim).map(|_| gauss(&mut rng)).collect())
        .collect();

    let mut entries = Vec::with_capacity(spec.n_lexemes * spec.n_exponents);
    let mut table = EmbeddingTable::new(spec.dim).expect("positive dim");
    let mut final_cues = BTreeMap::new();
    for (j, exponent_vec) in exponent_vecs.iter().enumerate() {
        let sfx = suffix(j);
        let tag = format!("e{j:02}");
        final_cues.insert(tag.clone(), format!("{sfx}#"));
        for (i, lexeme_vec) in lexeme_vecs.iter().enumerate() {
            let word = format!("{}{}", stems[i], sfx);
            let vec: Vec<f64> = (0..spec.dim)
                .map(|d| lexeme_vec[d] + exponent_vec[d] + spec.noise * gauss(&mut rng))
                .collect();
            table.insert(word.clone(), &vec).expect("distinct synthetic words");
            entries.push(
                WordEntry::new(word, 1)
                    .with_tag("lexeme", &format!("l{i:03}"))
                    .with_tag("exponent", &tag),
            );
        }
    }
    InflectionCorpus { entries, table, final_cues }
}

#[derive(Debug, Clone)]
pub struct ZipfSpec {
    pub n_types: usize,
    pub dim: usize,
    pub seed: u64,
}

/// Random distinct words with frequencies proportional to 1/rank and
/// unrelated random embeddings: pure memorization, no generalization signal.
/// Words are short strings over a four-letter alphabet so that the corpus
/// has more types than cues and the cues are heavily shared, as in natural
/// orthographies; an incremental learner then has to ration its capacity by
/// token frequency.
pub fn zipf_corpus(spec: &ZipfSpec) -> (Vec<WordEntry>, EmbeddingTable) {
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let words = random_words_varied(spec.n_types, 3, 6, 4, &mut rng);
    let normal = StandardNormal;
    let mut table = EmbeddingTable::new(spec.dim).expect("positive dim");
    let mut entries = Vec::with_capacity(spec.n_types);
    for (rank, word) in words.into_iter().enumerate() {
        let freq = ((spec.n_types as f64) / ((rank + 1) as f64)).round().max(1.0) as u64;
        let vec: Vec<f64> = (0..spec.dim).map(|_| normal.sample(&mut rng)).collect();
        table.insert(word.clone(), &vec).expect("distinct words");
        entries.push(WordEntry::new(word, freq));
    }
    (entries, table)
}

/// Distinct random words over the first `alphabet` lowercase letters.
pub fn random_words(
    count: usize,
    len: usize,
    alphabet: usize,
    rng: &mut ChaCha12Rng,
) -> Vec<String> {
    random_words_varied(count, len, len, alphabet, rng)
}

pub fn random_words_varied(
    count: usize,
    len_min: usize,
    len_max: usize,
    alphabet: usize,
    rng: &mut ChaCha12Rng,
) -> Vec<String> {
    assert!(alphabet <= 26 && len_min >= 1 && len_min <= len_max);
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let len = rng.gen_range(len_min..=len_max);
        let w: String =
            (0..len).map(|_| (b'a' + rng.gen_range(0..alphabet) as u8) as char).collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Bulk corpus for scaling runs: `count` distinct words of length `len` over
/// a restricted alphabet (controls the cue count), random embeddings.
pub fn random_corpus(
    count: usize,
    len: usize,
    alphabet: usize,
    dim: usize,
    seed: u64,
) -> (Vec<WordEntry>, EmbeddingTable) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let words = random_words(count, len, alphabet, &mut rng);
    let normal = StandardNormal;
    let mut table = EmbeddingTable::new(dim).expect("positive dim");
    let mut entries = Vec::with_capacity(count);
    for word in words {
        let vec: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
        table.insert(word.clone(), &vec).expect("distinct words");
        entries.push(WordEntry::new(word, 1));
    }
    (entries, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assemble_dataset, JoinKey};
    use crate::form::extract_ngrams;

    #[test]
    fn inflection_corpus_shape_and_unique_final_cues() {
        let c = inflection_corpus(&InflectionSpec {
            n_lexemes: 5,
            n_exponents: 4,
            dim: 8,
            noise: 0.05,
            seed: 1,
        });
        assert_eq!(c.entries.len(), 20);
        assert_eq!(c.final_cues.len(), 4);
        let cues: HashSet<&String> = c.final_cues.values().collect();
        assert_eq!(cues.len(), 4);
        for e in &c.entries {
            let grams = extract_ngrams(&e.form, 4, '#').unwrap();
            let expected = &c.final_cues[e.tag("exponent").unwrap()];
            assert_eq!(grams.last().unwrap(), expected);
        }
        // Joins cleanly.
        let ds = assemble_dataset(&c.entries, &c.table, JoinKey::Form).unwrap();
        assert!(ds.dropped.is_empty());
    }

    #[test]
    fn corpora_are_seed_deterministic() {
        let spec = InflectionSpec { n_lexemes: 3, n_exponents: 3, dim: 4, noise: 0.1, seed: 5 };
        let a = inflection_corpus(&spec);
        let b = inflection_corpus(&spec);
        assert_eq!(a.entries, b.entries);
        assert_eq!(a.table.vectors(), b.table.vectors());
    }

    #[test]
    fn zipf_frequencies_follow_inverse_rank() {
        let (entries, _) = zipf_corpus(&ZipfSpec { n_types: 100, dim: 4, seed: 3 });
        assert_eq!(entries[0].frequency, 100);
        assert_eq!(entries[49].frequency, 2);
        assert_eq!(entries[99].frequency, 1);
        assert!(entries.windows(2).all(|w| w[0].frequency >= w[1].frequency));
    }
}
