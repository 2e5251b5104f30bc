//! Positional inverted index in CSR layout, and the hard half of matching:
//! relaxing posting lists with a soft pattern and intersecting them with shifts.

use crate::embeddings::SoftPattern;
use crate::error::IndexFormatError;
use crate::text::{self, TokenizedCorpus, WordId};

/// Flat position storage. Positions are narrowed to `u32` whenever `N < 2^32`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Positions {
    Narrow(Vec<u32>),
    Wide(Vec<u64>),
}

impl Positions {
    fn len(&self) -> usize {
        match self {
            Positions::Narrow(p) => p.len(),
            Positions::Wide(p) => p.len(),
        }
    }
}

/// Borrowed posting list `I_v`, sorted ascending and duplicate-free.
#[derive(Debug, Clone, Copy)]
pub enum PostingSlice<'a> {
    Narrow(&'a [u32]),
    Wide(&'a [u64]),
}

impl<'a> PostingSlice<'a> {
    pub fn len(&self) -> usize {
        match self {
            PostingSlice::Narrow(p) => p.len(),
            PostingSlice::Wide(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> u64 {
        match self {
            PostingSlice::Narrow(p) => p[i] as u64,
            PostingSlice::Wide(p) => p[i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + 'a {
        let (narrow, wide): (&'a [u32], &'a [u64]) = match *self {
            PostingSlice::Narrow(p) => (p, &[]),
            PostingSlice::Wide(p) => (&[], p),
        };
        narrow.iter().map(|&x| x as u64).chain(wide.iter().copied())
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }

    fn extend_into(&self, out: &mut Vec<u64>) {
        match self {
            PostingSlice::Narrow(p) => out.extend(p.iter().map(|&x| x as u64)),
            PostingSlice::Wide(p) => out.extend_from_slice(p),
        }
    }
}

/// A word's posting list.
#[derive(Debug, Clone, Copy)]
pub struct PostingList<'a> {
    pub word: WordId,
    pub positions: PostingSlice<'a>,
}

/// `offsets[v]..offsets[v+1]` delimits the sorted positions of word `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvertedIndex {
    offsets: Vec<u64>,
    positions: Positions,
}

impl InvertedIndex {
    /// Builds the index with a counting pass followed by a fill pass.
    pub fn build(corpus: &TokenizedCorpus, vocab_len: usize) -> Self {
        let mut offsets = vec![0u64; vocab_len + 1];
        for &t in &corpus.tokens {
            offsets[t as usize + 1] += 1;
        }
        for v in 0..vocab_len {
            offsets[v + 1] += offsets[v];
        }
        let mut cursor: Vec<u64> = offsets[..vocab_len].to_vec();
        let n = corpus.tokens.len();
        let positions = if fits_u32(n as u64) {
            let mut p = vec![0u32; n];
            for (i, &t) in corpus.tokens.iter().enumerate() {
                let c = &mut cursor[t as usize];
                p[*c as usize] = i as u32;
                *c += 1;
            }
            Positions::Narrow(p)
        } else {
            let mut p = vec![0u64; n];
            for (i, &t) in corpus.tokens.iter().enumerate() {
                let c = &mut cursor[t as usize];
                p[*c as usize] = i as u64;
                *c += 1;
            }
            Positions::Wide(p)
        };
        InvertedIndex { offsets, positions }
    }

    /// Assembles an index from raw CSR arrays, validating every invariant.
    pub fn from_parts(offsets: Vec<u64>, positions: Vec<u64>) -> Result<Self, IndexFormatError> {
        let positions = if fits_u32(positions.len() as u64) {
            // Out-of-range values are caught by validate() before narrowing.
            validate_csr(&offsets, &PostingSlice::Wide(&positions))?;
            Positions::Narrow(positions.iter().map(|&p| p as u32).collect())
        } else {
            Positions::Wide(positions)
        };
        let idx = InvertedIndex { offsets, positions };
        idx.validate()?;
        Ok(idx)
    }

    /// Vocabulary size `L`.
    pub fn vocab_len(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Corpus length `N`.
    pub fn corpus_len(&self) -> usize {
        self.positions.len()
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn all_positions(&self) -> PostingSlice<'_> {
        match &self.positions {
            Positions::Narrow(p) => PostingSlice::Narrow(p),
            Positions::Wide(p) => PostingSlice::Wide(p),
        }
    }

    pub fn postings(&self, word: WordId) -> PostingList<'_> {
        let v = word as usize;
        let (s, e) = (self.offsets[v] as usize, self.offsets[v + 1] as usize);
        let positions = match &self.positions {
            Positions::Narrow(p) => PostingSlice::Narrow(&p[s..e]),
            Positions::Wide(p) => PostingSlice::Wide(&p[s..e]),
        };
        PostingList { word, positions }
    }

    /// Checks the CSR invariants, including that every position occurs exactly once.
    pub fn validate(&self) -> Result<(), IndexFormatError> {
        validate_csr(&self.offsets, &self.all_positions())
    }

    /// Rebuilds the token stream: `tokens[p] = v` for every `p` in `I_v`.
    pub fn reconstruct_tokens(&self) -> Vec<WordId> {
        let mut tokens = vec![0 as WordId; self.corpus_len()];
        for v in 0..self.vocab_len() {
            for p in self.postings(v as WordId).positions.iter() {
                tokens[p as usize] = v as WordId;
            }
        }
        tokens
    }
}

fn fits_u32(n: u64) -> bool {
    n <= u32::MAX as u64
}

fn validate_csr(offsets: &[u64], positions: &PostingSlice<'_>) -> Result<(), IndexFormatError> {
    let inv = |m: String| Err(IndexFormatError::Invariant(m));
    let n = positions.len() as u64;
    if offsets.is_empty() {
        return inv("offsets array is empty".into());
    }
    if offsets[0] != 0 {
        return inv(format!("offsets[0] = {}, expected 0", offsets[0]));
    }
    let last = *offsets.last().unwrap();
    if last != n {
        return inv(format!("offsets[L] = {last}, expected N = {n}"));
    }
    if let Some(v) = offsets.windows(2).position(|w| w[0] > w[1]) {
        return inv(format!("offsets decrease at word {v}"));
    }
    let mut seen = vec![false; n as usize];
    for v in 0..offsets.len() - 1 {
        let (s, e) = (offsets[v] as usize, offsets[v + 1] as usize);
        let mut prev: Option<u64> = None;
        for j in s..e {
            let p = positions.get(j);
            if p >= n {
                return inv(format!("position {p} of word {v} is out of range"));
            }
            if prev.is_some_and(|q| q >= p) {
                return inv(format!("posting list of word {v} is not strictly increasing"));
            }
            if std::mem::replace(&mut seen[p as usize], true) {
                return inv(format!("position {p} occurs more than once"));
            }
            prev = Some(p);
        }
    }
    Ok(())
}

/// Lists shorter than `N / DENSE_RATIO` are merged by sorting; longer ones via a bitmap.
const DENSE_RATIO: usize = 64;

/// Step 2-1: `Ĩ_k = ∪_{v ∈ S_k} I_v` for every pattern slot.
///
/// Each result is sorted and duplicate-free; posting lists of distinct words
/// are disjoint, so the union is a pure merge.
pub fn soft_postings(pattern: &SoftPattern, index: &InvertedIndex) -> Vec<Vec<u64>> {
    let n = index.corpus_len();
    pattern
        .entries
        .iter()
        .map(|slot| {
            let lists: Vec<PostingSlice<'_>> = slot
                .iter()
                .map(|e| index.postings(e.word).positions)
                .filter(|p| !p.is_empty())
                .collect();
            union_disjoint(&lists, n)
        })
        .collect()
}

fn union_disjoint(lists: &[PostingSlice<'_>], n: usize) -> Vec<u64> {
    let total: usize = lists.iter().map(PostingSlice::len).sum();
    match lists {
        [] => Vec::new(),
        [one] => one.to_vec(),
        _ if total.saturating_mul(DENSE_RATIO) >= n => {
            let mut bits = vec![0u64; n.div_ceil(64)];
            for list in lists {
                for p in list.iter() {
                    bits[(p / 64) as usize] |= 1 << (p % 64);
                }
            }
            let mut out = Vec::with_capacity(total);
            for (w, &word) in bits.iter().enumerate() {
                let mut word = word;
                while word != 0 {
                    out.push(w as u64 * 64 + word.trailing_zeros() as u64);
                    word &= word - 1;
                }
            }
            out
        }
        _ => {
            let mut out = Vec::with_capacity(total);
            for list in lists {
                list.extend_into(&mut out);
            }
            out.sort_unstable();
            out
        }
    }
}

/// Exact match set `M` of window start positions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchSet {
    /// Sorted 0-based start positions.
    pub starts: Vec<u64>,
    /// Pattern length `n`.
    pub pattern_len: usize,
    /// `K = Σ_k |Ĩ_k|`.
    pub candidates: u64,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }
}

/// Step 2-2: `M = ∩_k { i − k : i ∈ Ĩ_k }` (0-based `k`), restricted to windows
/// that lie inside a single document.
///
/// The smallest list drives; the others are probed with galloping cursors, so
/// each list is traversed at most once.
pub fn shift_intersect(postings: &[Vec<u64>], doc_offsets: &[u64]) -> MatchSet {
    let n = postings.len();
    let candidates = postings.iter().map(|p| p.len() as u64).sum();
    let mut result = MatchSet {
        starts: Vec::new(),
        pattern_len: n,
        candidates,
    };
    if n == 0 || postings.iter().any(Vec::is_empty) {
        return result;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&k| (postings[k].len(), k));
    let driver = order[0];
    let others = &order[1..];
    let mut cursors = vec![0usize; n];
    // Document boundary cursor: starts are visited in increasing order.
    let mut doc = 0usize;
    let span = (n - 1) as u64;

    'next: for &p in &postings[driver] {
        let Some(start) = p.checked_sub(driver as u64) else {
            continue;
        };
        for &k in others {
            let target = start + k as u64;
            let list = &postings[k];
            let c = gallop(list, cursors[k], target);
            cursors[k] = c;
            if c == list.len() {
                break 'next;
            }
            if list[c] != target {
                continue 'next;
            }
        }
        while doc + 1 < doc_offsets.len() && doc_offsets[doc + 1] <= start {
            doc += 1;
        }
        let doc_end = doc_offsets.get(doc + 1).copied().unwrap_or(u64::MAX);
        if start + span < doc_end {
            result.starts.push(start);
        }
    }
    result
}

/// First index `>= from` whose value is `>= target`.
fn gallop(list: &[u64], from: usize, target: u64) -> usize {
    if from >= list.len() || list[from] >= target {
        return from;
    }
    let mut lo = from;
    let mut step = 1;
    let mut hi = from + 1;
    while hi < list.len() && list[hi] < target {
        lo = hi;
        step *= 2;
        hi = from + step;
    }
    let hi = hi.min(list.len());
    lo + 1 + list[lo + 1..hi].partition_point(|&x| x < target)
}

/// Runs Steps 2-1 and 2-2 for an already softened pattern.
pub fn match_soft_pattern(
    pattern: &SoftPattern,
    index: &InvertedIndex,
    doc_offsets: &[u64],
) -> MatchSet {
    let postings = soft_postings(pattern, index);
    shift_intersect(&postings, doc_offsets)
}

/// Document id of `pos`, clamped for empty documents.
pub fn document_of(doc_offsets: &[u64], pos: u64) -> usize {
    text::doc_of(doc_offsets, pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{SoftEntry, Threshold};
    use crate::text::{tokenize_documents, Normalizer};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    const FIG2: &str = "when a jazz pianist plays funk with a blues singer";

    fn fig2() -> (TokenizedCorpus, crate::text::Vocabulary, InvertedIndex) {
        let (c, v) = tokenize_documents(&[FIG2], &Normalizer::default());
        let idx = InvertedIndex::build(&c, v.len());
        (c, v, idx)
    }

    fn one_based(p: PostingSlice<'_>) -> Vec<u64> {
        p.iter().map(|x| x + 1).collect()
    }

    #[test]
    fn toy_postings() {
        let (_, v, idx) = fig2();
        let get = |w: &str| one_based(idx.postings(v.id(w).unwrap()).positions);
        assert_eq!(get("a"), [2, 8]);
        assert_eq!(get("jazz"), [3]);
        assert_eq!(get("blues"), [9]);
        idx.validate().unwrap();
    }

    #[test]
    fn empty_and_single_type() {
        let idx = InvertedIndex::build(&TokenizedCorpus::default(), 0);
        assert_eq!(idx.offsets(), [0]);
        assert_eq!(idx.corpus_len(), 0);
        idx.validate().unwrap();

        let (c, v) = tokenize_documents(&["x x x"], &Normalizer::default());
        let idx = InvertedIndex::build(&c, v.len());
        assert_eq!(idx.postings(0).positions.to_vec(), [0, 1, 2]);
        assert_eq!(idx.offsets(), [0, 3]);
    }

    #[test]
    fn from_parts_rejects_bad_csr() {
        assert!(InvertedIndex::from_parts(vec![0, 2], vec![0, 1]).is_ok());
        assert!(InvertedIndex::from_parts(vec![0, 1], vec![0, 1]).is_err());
        assert!(InvertedIndex::from_parts(vec![0, 2], vec![1, 0]).is_err());
        assert!(InvertedIndex::from_parts(vec![0, 1, 2], vec![0, 0]).is_err());
        assert!(InvertedIndex::from_parts(vec![0, 2], vec![0, 5]).is_err());
        assert!(InvertedIndex::from_parts(vec![1, 2], vec![0, 1]).is_err());
    }

    fn pattern(slots: Vec<Vec<WordId>>) -> SoftPattern {
        SoftPattern {
            pattern_words: slots.iter().map(|_| String::new()).collect(),
            alpha: Threshold::new(0.5).unwrap(),
            entries: slots
                .into_iter()
                .map(|s| s.into_iter().map(|word| SoftEntry { word, score: 1.0 }).collect())
                .collect(),
            oov_words: Vec::new(),
        }
    }

    #[test]
    fn union_of_one_and_disjoint_merge() {
        // word 0 at {1,5}, word 1 at {3}
        let c = TokenizedCorpus {
            tokens: vec![2, 0, 2, 1, 2, 0],
            doc_offsets: vec![0],
            source_name: String::new(),
        };
        let idx = InvertedIndex::build(&c, 3);
        let sp = pattern(vec![vec![0], vec![0, 1], vec![]]);
        let p = soft_postings(&sp, &idx);
        assert_eq!(p[0], [1, 5]);
        assert_eq!(p[1], [1, 3, 5]);
        assert!(p[2].is_empty());
    }

    #[test]
    fn dense_union_path() {
        let tokens: Vec<u32> = (0..1000).map(|i| (i % 7) as u32).collect();
        let c = TokenizedCorpus {
            tokens,
            doc_offsets: vec![0],
            source_name: String::new(),
        };
        let idx = InvertedIndex::build(&c, 7);
        let p = soft_postings(&pattern(vec![vec![1, 3, 6]]), &idx);
        let expected: Vec<u64> = (0..1000).filter(|i| [1, 3, 6].contains(&(i % 7))).collect();
        assert_eq!(p[0], expected);
    }

    #[test]
    fn toy_shift_intersection() {
        // 1-based: Ĩ_the = {2,8,11}, Ĩ_jazz = {3,6,9,12}, Ĩ_musician = {4,10}
        let to0 = |v: &[u64]| v.iter().map(|x| x - 1).collect::<Vec<_>>();
        let postings = vec![to0(&[2, 8, 11]), to0(&[3, 6, 9, 12]), to0(&[4, 10])];
        let m = shift_intersect(&postings, &[0]);
        assert_eq!(m.starts.iter().map(|x| x + 1).collect::<Vec<_>>(), [2, 8]);
        assert_eq!(m.candidates, 9);
        assert_eq!(m.pattern_len, 3);
    }

    #[test]
    fn single_word_and_boundaries() {
        let m = shift_intersect(&[vec![1, 4, 9]], &[0]);
        assert_eq!(m.starts, [1, 4, 9]);
        // window 5..=6 straddles a document starting at 6
        let m = shift_intersect(&[vec![5], vec![6]], &[0, 6]);
        assert!(m.is_empty());
        let m = shift_intersect(&[vec![5], vec![6]], &[0, 5]);
        assert_eq!(m.starts, [5]);
        let m = shift_intersect(&[vec![1], vec![]], &[0]);
        assert!(m.is_empty());
        assert_eq!(m.candidates, 1);
        assert!(shift_intersect(&[], &[0]).is_empty());
    }

    #[test]
    fn gallop_finds_lower_bound() {
        let list: Vec<u64> = (0..100).map(|x| x * 3).collect();
        for from in [0, 5, 50, 99, 100] {
            for target in 0..310 {
                let expected = from + list[from.min(100)..].partition_point(|&x| x < target);
                assert_eq!(gallop(&list, from, target), expected, "from {from} target {target}");
            }
        }
    }

    fn naive_shift(postings: &[Vec<u64>], doc_offsets: &[u64]) -> Vec<u64> {
        let sets: Vec<BTreeSet<u64>> = postings.iter().map(|p| p.iter().copied().collect()).collect();
        let Some(first) = sets.first() else { return vec![] };
        first
            .iter()
            .copied()
            .filter(|&i| (0..sets.len()).all(|k| sets[k].contains(&(i + k as u64))))
            .filter(|&i| document_of(doc_offsets, i) == document_of(doc_offsets, i + sets.len() as u64 - 1))
            .collect()
    }

    proptest! {
        #[test]
        fn build_conserves_positions(tokens in proptest::collection::vec(0u32..20, 0..300)) {
            let c = TokenizedCorpus { doc_offsets: if tokens.is_empty() { vec![] } else { vec![0] }, tokens, source_name: String::new() };
            let idx = InvertedIndex::build(&c, 20);
            idx.validate().unwrap();
            prop_assert_eq!(idx.offsets()[20] as usize, c.len());
            prop_assert_eq!(idx.reconstruct_tokens(), c.tokens);
        }

        #[test]
        fn shift_intersect_matches_set_definition(
            raw in proptest::collection::vec(proptest::collection::btree_set(0u64..120, 0..60), 1..5),
            cuts in proptest::collection::btree_set(1u64..120, 0..6),
        ) {
            let postings: Vec<Vec<u64>> = raw.into_iter().map(|s| s.into_iter().collect()).collect();
            let doc_offsets: Vec<u64> = std::iter::once(0).chain(cuts).collect();
            let m = shift_intersect(&postings, &doc_offsets);
            prop_assert_eq!(m.starts, naive_shift(&postings, &doc_offsets));
        }
    }
}
