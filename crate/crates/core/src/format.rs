//! On-disk index format.
//!
//! All integers are little-endian:
//!
//! ```text
//! "SMIX"  u32 version=1  u64 N  u64 L  u64 doc_count
//! L × (u32 byte_len, UTF-8 bytes)          vocabulary
//! (L+1) × u64                              CSR offsets
//! N × u64                                  positions
//! doc_count × u64                          document start offsets
//! u8 lowercase  u8 unicode_norm  u8 token_rule  u32 len + UTF-8 source name
//! ```
//!
//! The trailing block records the normalizer so queries are normalized the
//! same way as the corpus was.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::IndexFormatError;
use crate::index::{InvertedIndex, PostingSlice};
use crate::text::{self, Normalizer, TokenRule, TokenizedCorpus, UnicodeNormalization, Vocabulary};

pub const MAGIC: &[u8; 4] = b"SMIX";
pub const VERSION: u32 = 1;

const CHUNK: usize = 64 * 1024;

/// Everything persisted in an index file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexFile {
    pub index: InvertedIndex,
    pub vocab: Vocabulary,
    pub doc_offsets: Vec<u64>,
    pub normalizer: Normalizer,
    pub source_name: String,
}

impl IndexFile {
    pub fn build(corpus: &TokenizedCorpus, vocab: Vocabulary, normalizer: Normalizer) -> Self {
        IndexFile {
            index: InvertedIndex::build(corpus, vocab.len()),
            vocab,
            doc_offsets: corpus.doc_offsets.clone(),
            normalizer,
            source_name: corpus.source_name.clone(),
        }
    }

    pub fn corpus_len(&self) -> usize {
        self.index.corpus_len()
    }

    pub fn doc_count(&self) -> usize {
        self.doc_offsets.len()
    }

    /// Rebuilds the corpus token stream from the posting lists.
    pub fn corpus(&self) -> TokenizedCorpus {
        TokenizedCorpus {
            tokens: self.index.reconstruct_tokens(),
            doc_offsets: self.doc_offsets.clone(),
            source_name: self.source_name.clone(),
        }
    }

    pub fn save<W: Write>(&self, w: W) -> io::Result<()> {
        let mut w = BufWriter::new(w);
        let idx = &self.index;
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u64::<LittleEndian>(idx.corpus_len() as u64)?;
        w.write_u64::<LittleEndian>(idx.vocab_len() as u64)?;
        w.write_u64::<LittleEndian>(self.doc_offsets.len() as u64)?;
        for word in self.vocab.words() {
            write_str(&mut w, word)?;
        }
        write_u64s(&mut w, idx.offsets().iter().copied())?;
        match idx.all_positions() {
            PostingSlice::Narrow(p) => write_u64s(&mut w, p.iter().map(|&x| x as u64))?,
            PostingSlice::Wide(p) => write_u64s(&mut w, p.iter().copied())?,
        }
        write_u64s(&mut w, self.doc_offsets.iter().copied())?;
        let n = &self.normalizer;
        w.write_u8(n.lowercase as u8)?;
        w.write_u8(match n.unicode_normalization {
            UnicodeNormalization::None => 0,
            UnicodeNormalization::Nfkc => 1,
        })?;
        w.write_u8(match n.token_rule {
            TokenRule::UnicodeWhitespaceSplit => 0,
            TokenRule::PretokenizedLines => 1,
        })?;
        write_str(&mut w, &self.source_name)?;
        w.flush()
    }

    pub fn save_path(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let f = File::create(path)?;
        self.save(&f)?;
        f.sync_all()
    }

    /// Reads and fully validates an index file.
    pub fn load<R: Read>(r: R) -> Result<Self, IndexFormatError> {
        let mut r = BufReader::new(r);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(IndexFormatError::BadMagic);
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(IndexFormatError::UnsupportedVersion(version));
        }
        let n = r.read_u64::<LittleEndian>()?;
        let l = r.read_u64::<LittleEndian>()?;
        let doc_count = r.read_u64::<LittleEndian>()?;
        if l >= u32::MAX as u64 {
            return Err(IndexFormatError::Invariant(format!("vocabulary size {l} too large")));
        }

        let mut vocab = Vocabulary::new();
        for i in 0..l {
            let word = read_str(&mut r)?;
            if vocab.id(&word).is_some() {
                return Err(IndexFormatError::Invariant(format!(
                    "duplicate vocabulary word {word:?} at id {i}"
                )));
            }
            vocab.insert(word);
        }
        let offsets = read_u64s(&mut r, l + 1)?;
        let positions = read_u64s(&mut r, n)?;
        let doc_offsets = read_u64s(&mut r, doc_count)?;
        let lowercase = match r.read_u8()? {
            0 => false,
            1 => true,
            b => return Err(bad_field("lowercase flag", b)),
        };
        let unicode_normalization = match r.read_u8()? {
            0 => UnicodeNormalization::None,
            1 => UnicodeNormalization::Nfkc,
            b => return Err(bad_field("unicode normalization", b)),
        };
        let token_rule = match r.read_u8()? {
            0 => TokenRule::UnicodeWhitespaceSplit,
            1 => TokenRule::PretokenizedLines,
            b => return Err(bad_field("token rule", b)),
        };
        let source_name = read_str(&mut r)?;
        if r.read(&mut [0u8; 1])? != 0 {
            return Err(IndexFormatError::Invariant("trailing bytes after index".into()));
        }

        let index = InvertedIndex::from_parts(offsets, positions)?;
        text::validate_doc_offsets(&doc_offsets, n)
            .map_err(|e| IndexFormatError::Invariant(e.to_string()))?;
        Ok(IndexFile {
            index,
            vocab,
            doc_offsets,
            normalizer: Normalizer {
                lowercase,
                unicode_normalization,
                token_rule,
            },
            source_name,
        })
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<Self, IndexFormatError> {
        Self::load(File::open(path).map_err(IndexFormatError::Io)?)
    }
}

fn bad_field(name: &str, value: u8) -> IndexFormatError {
    IndexFormatError::Invariant(format!("invalid {name} byte {value}"))
}

fn write_str<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    let len = u32::try_from(s.len())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "string longer than 4 GiB"))?;
    w.write_u32::<LittleEndian>(len)?;
    w.write_all(s.as_bytes())
}

fn read_str<R: Read>(r: &mut R) -> Result<String, IndexFormatError> {
    let len = r.read_u32::<LittleEndian>()? as u64;
    let mut bytes = Vec::new();
    let got = r.take(len).read_to_end(&mut bytes)?;
    if got as u64 != len {
        return Err(IndexFormatError::Truncated);
    }
    String::from_utf8(bytes).map_err(|_| IndexFormatError::Invariant("string is not UTF-8".into()))
}

fn write_u64s<W: Write>(w: &mut W, values: impl Iterator<Item = u64>) -> io::Result<()> {
    let mut buf = Vec::with_capacity(CHUNK * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
        if buf.len() == buf.capacity() {
            w.write_all(&buf)?;
            buf.clear();
        }
    }
    w.write_all(&buf)
}

/// Reads `count` values in bounded chunks, so a corrupt count fails with
/// `Truncated` instead of a huge allocation.
fn read_u64s<R: Read>(r: &mut R, count: u64) -> Result<Vec<u64>, IndexFormatError> {
    let mut out = Vec::with_capacity(count.min(CHUNK as u64) as usize);
    let mut buf = vec![0u8; CHUNK * 8];
    let mut left = count;
    while left > 0 {
        let take = left.min(CHUNK as u64) as usize;
        let bytes = &mut buf[..take * 8];
        r.read_exact(bytes)?;
        out.extend(bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())));
        left -= take as u64;
    }
    Ok(out)
}
