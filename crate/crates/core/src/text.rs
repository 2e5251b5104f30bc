//! Text normalization, tokenization and the corpus/vocabulary types built from it.

use std::collections::HashMap;
use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization as _;

use crate::error::CorpusError;

/// Word-id into a [`Vocabulary`].
pub type WordId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnicodeNormalization {
    None,
    Nfkc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenRule {
    /// Split on any Unicode whitespace after normalization.
    UnicodeWhitespaceSplit,
    /// Input is already tokenized; tokens are taken verbatim.
    PretokenizedLines,
}

/// How an input stream is cut into documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DocumentMode {
    /// One document per line.
    #[default]
    Line,
    /// Documents are separated by one or more blank lines.
    BlankLine,
}

/// Deterministic text normalization applied to both corpora and queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Normalizer {
    pub lowercase: bool,
    pub unicode_normalization: UnicodeNormalization,
    pub token_rule: TokenRule,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer {
            lowercase: true,
            unicode_normalization: UnicodeNormalization::Nfkc,
            token_rule: TokenRule::UnicodeWhitespaceSplit,
        }
    }
}

impl Normalizer {
    /// Normalizer for pretokenized input: no case folding, no Unicode rewriting.
    pub fn pretokenized() -> Self {
        Normalizer {
            lowercase: false,
            unicode_normalization: UnicodeNormalization::None,
            token_rule: TokenRule::PretokenizedLines,
        }
    }

    pub fn normalize(&self, text: &str) -> String {
        if self.token_rule == TokenRule::PretokenizedLines {
            return text.to_owned();
        }
        let mut out = self.normalize_once(text);
        // Case mapping can leave a string that is no longer in NFKC (and vice versa);
        // iterate to the fixed point so normalization is idempotent.
        for _ in 0..4 {
            let next = self.normalize_once(&out);
            if next == out {
                break;
            }
            out = next;
        }
        out
    }

    fn normalize_once(&self, text: &str) -> String {
        let s: String = match self.unicode_normalization {
            UnicodeNormalization::None => text.to_owned(),
            UnicodeNormalization::Nfkc => text.nfkc().collect(),
        };
        if self.lowercase {
            s.to_lowercase()
        } else {
            s
        }
    }

    /// Normalizes `text` and splits it into tokens.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.normalize(text)
            .split(char::is_whitespace)
            .filter(|t| !t.is_empty())
            .map(str::to_owned)
            .collect()
    }
}

/// Bijection between token strings and dense word-ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, WordId>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vocabulary from distinct words; ids follow the given order.
    pub fn from_words<I, S>(words: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary::new();
        for w in words {
            let w = w.into();
            if vocab.index.contains_key(&w) {
                return Err(CorpusError::DuplicateWord(w));
            }
            vocab.insert(w);
        }
        Ok(vocab)
    }

    /// Returns the id of `word`, assigning the next free id on first sight.
    pub fn insert(&mut self, word: impl Into<String>) -> WordId {
        let word = word.into();
        if let Some(&id) = self.index.get(&word) {
            return id;
        }
        let id = WordId::try_from(self.words.len()).expect("vocabulary exceeds u32 word-ids");
        self.index.insert(word.clone(), id);
        self.words.push(word);
        id
    }

    pub fn id(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: WordId) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// A corpus as a flat word-id stream plus document start offsets.
///
/// `doc_offsets` is non-decreasing: empty documents are kept so that document ids
/// stay aligned with input lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenizedCorpus {
    pub tokens: Vec<WordId>,
    pub doc_offsets: Vec<u64>,
    pub source_name: String,
}

impl TokenizedCorpus {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn doc_count(&self) -> usize {
        self.doc_offsets.len()
    }

    /// Token range `[start, end)` of document `doc`.
    pub fn doc_range(&self, doc: usize) -> std::ops::Range<usize> {
        doc_range(&self.doc_offsets, self.tokens.len() as u64, doc)
    }

    /// Document containing corpus position `pos`.
    pub fn doc_of(&self, pos: u64) -> usize {
        doc_of(&self.doc_offsets, pos)
    }

    pub fn doc_lengths(&self) -> Vec<usize> {
        (0..self.doc_count()).map(|d| self.doc_range(d).len()).collect()
    }

    pub fn validate(&self, vocab_len: usize) -> Result<(), CorpusError> {
        if let Some((i, &t)) = self.tokens.iter().enumerate().find(|(_, &t)| t as usize >= vocab_len) {
            return Err(CorpusError::Invalid(format!(
                "token {t} at position {i} is outside the vocabulary of size {vocab_len}"
            )));
        }
        validate_doc_offsets(&self.doc_offsets, self.tokens.len() as u64)
    }
}

pub(crate) fn doc_range(doc_offsets: &[u64], n: u64, doc: usize) -> std::ops::Range<usize> {
    let start = doc_offsets[doc];
    let end = doc_offsets.get(doc + 1).copied().unwrap_or(n);
    start as usize..end as usize
}

pub(crate) fn doc_of(doc_offsets: &[u64], pos: u64) -> usize {
    // Last document whose start is <= pos; with empty documents several share a start.
    doc_offsets.partition_point(|&s| s <= pos).saturating_sub(1)
}

pub(crate) fn validate_doc_offsets(doc_offsets: &[u64], n: u64) -> Result<(), CorpusError> {
    match doc_offsets.first() {
        None if n == 0 => return Ok(()),
        None => return Err(CorpusError::Invalid("tokens present but no documents".into())),
        Some(&0) => {}
        Some(&first) => {
            return Err(CorpusError::Invalid(format!("first document starts at {first}, not 0")))
        }
    }
    if let Some(w) = doc_offsets.windows(2).find(|w| w[0] > w[1]) {
        return Err(CorpusError::Invalid(format!(
            "document offsets decrease ({} > {})",
            w[0], w[1]
        )));
    }
    if let Some(&last) = doc_offsets.last() {
        if last > n {
            return Err(CorpusError::Invalid(format!(
                "last document starts at {last}, past corpus end {n}"
            )));
        }
    }
    Ok(())
}

/// Reads documents from `reader` and builds the corpus and its vocabulary.
///
/// Word-ids are assigned in first-occurrence order. Invalid UTF-8 is replaced
/// rather than rejected.
pub fn tokenize_corpus<R: BufRead>(
    mut reader: R,
    norm: &Normalizer,
    mode: DocumentMode,
) -> io::Result<(TokenizedCorpus, Vocabulary)> {
    let mut vocab = Vocabulary::new();
    let mut corpus = TokenizedCorpus::default();
    let mut buf = Vec::new();
    // BlankLine mode: whether the current document has been opened.
    let mut open = false;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let line = String::from_utf8_lossy(&buf);
        let line = line.trim_end_matches(['\n', '\r']);
        match mode {
            DocumentMode::Line => {
                corpus.doc_offsets.push(corpus.tokens.len() as u64);
            }
            DocumentMode::BlankLine => {
                if line.trim().is_empty() {
                    open = false;
                    continue;
                }
                if !open {
                    corpus.doc_offsets.push(corpus.tokens.len() as u64);
                    open = true;
                }
            }
        }
        for tok in norm.tokenize(line) {
            let id = vocab.insert(tok);
            corpus.tokens.push(id);
        }
    }
    Ok((corpus, vocab))
}

/// Convenience wrapper over [`tokenize_corpus`] for in-memory documents.
pub fn tokenize_documents<S: AsRef<str>>(
    docs: &[S],
    norm: &Normalizer,
) -> (TokenizedCorpus, Vocabulary) {
    let mut vocab = Vocabulary::new();
    let mut corpus = TokenizedCorpus::default();
    for doc in docs {
        corpus.doc_offsets.push(corpus.tokens.len() as u64);
        for tok in norm.tokenize(doc.as_ref()) {
            corpus.tokens.push(vocab.insert(tok));
        }
    }
    (corpus, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        Normalizer::default().tokenize(s)
    }

    #[test]
    fn case_fold_and_split() {
        assert_eq!(toks("Jazz  Pianist"), ["jazz", "pianist"]);
        assert_eq!(Normalizer::default().normalize(""), "");
        assert_eq!(toks("a\tb\nc"), ["a", "b", "c"]);
        assert_eq!(toks("a\u{3000}b\u{2003}c"), ["a", "b", "c"]);
    }

    #[test]
    fn nfkc_folds_compatibility_forms() {
        assert_eq!(toks("ｊａｚｚ ﬁne"), ["jazz", "fine"]);
    }

    #[test]
    fn pretokenized_is_verbatim() {
        let n = Normalizer::pretokenized();
        assert_eq!(n.tokenize("東京 に 行く ABC"), ["東京", "に", "行く", "ABC"]);
    }

    #[test]
    fn toy_corpus_positions() {
        let (c, v) = tokenize_documents(
            &["When a jazz pianist plays funk with a blues singer"],
            &Normalizer::default(),
        );
        assert_eq!(c.len(), 10);
        let a = v.id("a").unwrap();
        let pos: Vec<usize> = (0..c.len()).filter(|&i| c.tokens[i] == a).map(|i| i + 1).collect();
        assert_eq!(pos, [2, 8]);
    }

    #[test]
    fn empty_inputs() {
        let (c, v) = tokenize_corpus(&b""[..], &Normalizer::default(), DocumentMode::Line).unwrap();
        assert_eq!((c.len(), v.len(), c.doc_count()), (0, 0, 0));
        c.validate(0).unwrap();

        let (c, v) = tokenize_corpus(&b"\n"[..], &Normalizer::default(), DocumentMode::Line).unwrap();
        assert_eq!((c.len(), v.len(), c.doc_count()), (0, 0, 1));
        c.validate(0).unwrap();
    }

    #[test]
    fn single_type_corpus() {
        let (c, v) = tokenize_documents(&["x x x"], &Normalizer::default());
        assert_eq!((v.len(), c.len()), (1, 3));
    }

    #[test]
    fn empty_lines_keep_document_ids() {
        let input = b"a b\n\nc\n";
        let (c, _) = tokenize_corpus(&input[..], &Normalizer::default(), DocumentMode::Line).unwrap();
        assert_eq!(c.doc_offsets, [0, 2, 2]);
        assert_eq!(c.doc_range(1), 2..2);
        assert_eq!(c.doc_of(2), 2);
        c.validate(3).unwrap();
    }

    #[test]
    fn blank_line_documents() {
        let input = b"a b\nc\n\n\nd e\r\n";
        let (c, v) =
            tokenize_corpus(&input[..], &Normalizer::default(), DocumentMode::BlankLine).unwrap();
        assert_eq!(c.doc_offsets, [0, 3]);
        assert_eq!(v.words(), ["a", "b", "c", "d", "e"]);
    }

    #[test]
    fn invalid_utf8_is_replaced() {
        let input = b"ok \xff\xfe bad\n";
        let (c, v) = tokenize_corpus(&input[..], &Normalizer::default(), DocumentMode::Line).unwrap();
        assert_eq!(c.len(), 3);
        assert!(v.words()[1].contains('\u{fffd}'));
    }

    #[test]
    fn duplicate_vocab_rejected() {
        assert!(Vocabulary::from_words(["a", "b", "a"]).is_err());
    }

    #[test]
    fn bad_doc_offsets() {
        assert!(validate_doc_offsets(&[1], 3).is_err());
        assert!(validate_doc_offsets(&[0, 2, 1], 3).is_err());
        assert!(validate_doc_offsets(&[0, 4], 3).is_err());
        assert!(validate_doc_offsets(&[], 1).is_err());
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,40}") {
            let n = Normalizer::default();
            let once = n.normalize(&s);
            prop_assert_eq!(n.normalize(&once), once);
        }

        #[test]
        fn corpus_round_trip(lines in proptest::collection::vec("[a-cA-C ]{0,12}", 0..8)) {
            let norm = Normalizer::default();
            let text = lines.iter().map(|l| format!("{l}\n")).collect::<String>();
            let (c, v) = tokenize_corpus(text.as_bytes(), &norm, DocumentMode::Line).unwrap();
            c.validate(v.len()).unwrap();
            let expected: Vec<String> = lines.iter().flat_map(|l| norm.tokenize(l)).collect();
            let got: Vec<&str> = c.tokens.iter().map(|&t| v.word(t).unwrap()).collect();
            prop_assert_eq!(got, expected);
            prop_assert_eq!(c.doc_lengths().iter().sum::<usize>(), c.len());
            prop_assert_eq!(c.doc_count(), lines.len());
            for (i, w) in v.words().iter().enumerate() {
                prop_assert_eq!(v.id(w), Some(i as WordId));
            }
        }
    }
}
