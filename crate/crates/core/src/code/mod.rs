//! Time-varying block (TVB) codes.
//!
//! A TVB code is a length-`N` sequence of constituent encodings, each an
//! injective map from `q`-ary symbols to `n`-bit codewords. Encodings that
//! produce the same set of codewords are considered equal; the code stores
//! only its `M` unique encodings (the books) and a schedule naming which
//! book encodes each symbol position.

mod anneal;
mod construct;
mod distance;
mod io;

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::channel::Bit;

pub use anneal::{anneal_design, AnnealSchedule, BookScore, ObjectiveWeights};
pub use construct::{from_marker_code, from_sparse_marker, sparse_codebook};
pub use distance::{levenshtein, spectrum, DistanceSpectrum};
pub use io::{parse_codebooks, parse_schedule, write_codebooks, write_schedule, DESIGNED_6_8_12, REFERENCE_7_8_4};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("codebook must contain at least one word")]
    EmptyCodebook,
    #[error("code must contain at least one codebook")]
    NoCodebooks,
    #[error("codeword {index} has length {len}, expected {n}")]
    WordLength { index: usize, len: usize, n: usize },
    #[error("codeword {index} contains a value other than 0 or 1")]
    NotBinary { index: usize },
    #[error("codewords {first} and {second} are identical")]
    DuplicateWord { first: usize, second: usize },
    #[error("codebook shapes differ: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("codebooks {first} and {second} contain the same codewords")]
    DuplicateBook { first: usize, second: usize },
    #[error("schedule entry {position} refers to book {book}, but only {books} exist")]
    ScheduleOutOfRange { position: usize, book: usize, books: usize },
    #[error("message has {got} symbols, code block length is {expected}")]
    MessageLength { got: usize, expected: usize },
    #[error("symbol {symbol} at position {position} is not below q = {q}")]
    SymbolOutOfRange { position: usize, symbol: usize, q: usize },
    #[error("{k} data bits exceed the supported maximum of 16")]
    TooManyDataBits { k: usize },
    #[error("cannot fit {q} distinct words of {n} bits")]
    Infeasible { n: usize, q: usize },
    #[error("could not find {wanted} distinct codebooks")]
    NotEnoughBooks { wanted: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One constituent encoding: `q` distinct `n`-bit codewords indexed by symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Codebook {
    n: usize,
    words: Vec<Vec<Bit>>,
}

impl Codebook {
    pub fn new(n: usize, words: Vec<Vec<Bit>>) -> Result<Self, CodeError> {
        if words.is_empty() {
            return Err(CodeError::EmptyCodebook);
        }
        for (index, w) in words.iter().enumerate() {
            if w.len() != n {
                return Err(CodeError::WordLength { index, len: w.len(), n });
            }
            if w.iter().any(|&b| b > 1) {
                return Err(CodeError::NotBinary { index });
            }
        }
        let mut seen: HashMap<&[Bit], usize> = HashMap::with_capacity(words.len());
        for (index, w) in words.iter().enumerate() {
            if let Some(&first) = seen.get(w.as_slice()) {
                return Err(CodeError::DuplicateWord { first, second: index });
            }
            seen.insert(w, index);
        }
        Ok(Self { n, words })
    }

    /// Build from strings of `'0'`/`'1'` characters.
    pub fn from_strs(words: &[&str]) -> Result<Self, CodeError> {
        let n = words.first().map_or(0, |w| w.len());
        let parsed = words
            .iter()
            .enumerate()
            .map(|(index, w)| {
                w.bytes()
                    .map(|c| match c {
                        b'0' => Ok(0),
                        b'1' => Ok(1),
                        _ => Err(CodeError::NotBinary { index }),
                    })
                    .collect::<Result<Vec<Bit>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(n, parsed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.words.len()
    }

    pub fn word(&self, symbol: usize) -> &[Bit] {
        &self.words[symbol]
    }

    pub fn words(&self) -> &[Vec<Bit>] {
        &self.words
    }

    /// Codeword set in sorted order; equal for equal codebooks.
    pub fn canonical(&self) -> Vec<Vec<Bit>> {
        let mut w = self.words.clone();
        w.sort_unstable();
        w
    }

    /// Every codeword XOR-ed with `offset`.
    pub fn xor(&self, offset: &[Bit]) -> Result<Self, CodeError> {
        if offset.len() != self.n {
            return Err(CodeError::WordLength { index: 0, len: offset.len(), n: self.n });
        }
        let words = self
            .words
            .iter()
            .map(|w| w.iter().zip(offset).map(|(a, b)| a ^ b).collect())
            .collect();
        Ok(Self { n: self.n, words })
    }
}

/// True when both books contain the same set of codewords.
pub fn codebook_equal(a: &Codebook, b: &Codebook) -> Result<bool, CodeError> {
    if a.n != b.n || a.q() != b.q() {
        return Err(CodeError::ShapeMismatch(a.n, a.q(), b.n, b.q()));
    }
    // Equal cardinality and injectivity make one-way containment sufficient.
    let set: std::collections::HashSet<&[Bit]> = b.words.iter().map(|w| w.as_slice()).collect();
    Ok(a.words.iter().all(|w| set.contains(w.as_slice())))
}

/// Number of distinct encodings in a list, under [`codebook_equal`].
pub fn order_of(books: &[Codebook]) -> usize {
    let mut keys: Vec<Vec<Vec<Bit>>> = books.iter().map(Codebook::canonical).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// A TVB code: unique books plus the per-position schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TvbCode {
    books: Vec<Codebook>,
    schedule: Vec<usize>,
}

impl TvbCode {
    pub fn new(books: Vec<Codebook>, schedule: Vec<usize>) -> Result<Self, CodeError> {
        let first = books.first().ok_or(CodeError::NoCodebooks)?;
        let (n, q) = (first.n, first.q());
        let mut seen: HashMap<Vec<Vec<Bit>>, usize> = HashMap::new();
        for (i, b) in books.iter().enumerate() {
            if b.n != n || b.q() != q {
                return Err(CodeError::ShapeMismatch(n, q, b.n, b.q()));
            }
            if let Some(&first) = seen.get(&b.canonical()) {
                return Err(CodeError::DuplicateBook { first, second: i });
            }
            seen.insert(b.canonical(), i);
        }
        for (position, &book) in schedule.iter().enumerate() {
            if book >= books.len() {
                return Err(CodeError::ScheduleOutOfRange { position, book, books: books.len() });
            }
        }
        Ok(Self { books, schedule })
    }

    /// Collapse a per-position sequence of encodings into unique books and a schedule.
    pub fn from_encodings(encodings: Vec<Codebook>) -> Result<Self, CodeError> {
        let mut index: HashMap<Vec<Vec<Bit>>, usize> = HashMap::new();
        let mut books = Vec::new();
        let mut schedule = Vec::with_capacity(encodings.len());
        for enc in encodings {
            let key = enc.canonical();
            let id = *index.entry(key).or_insert_with(|| {
                books.push(enc.clone());
                books.len() - 1
            });
            schedule.push(id);
        }
        Self::new(books, schedule)
    }

    /// Books sampled uniformly with replacement for each of `block_len` positions.
    pub fn with_random_schedule<R: Rng + ?Sized>(
        books: Vec<Codebook>,
        block_len: usize,
        rng: &mut R,
    ) -> Result<Self, CodeError> {
        let m = books.len().max(1);
        let schedule = (0..block_len).map(|_| rng.gen_range(0..m)).collect();
        Self::new(books, schedule)
    }

    pub fn with_schedule(&self, schedule: Vec<usize>) -> Result<Self, CodeError> {
        Self::new(self.books.clone(), schedule)
    }

    /// The same books with the schedule repeated cyclically to `len` positions.
    pub fn cyclic_extension(&self, len: usize) -> Self {
        let schedule = if self.schedule.is_empty() {
            Vec::new()
        } else {
            (0..len).map(|i| self.schedule[i % self.schedule.len()]).collect()
        };
        Self { books: self.books.clone(), schedule }
    }

    pub fn n(&self) -> usize {
        self.books[0].n
    }

    pub fn q(&self) -> usize {
        self.books[0].q()
    }

    /// Block length `N`.
    pub fn block_len(&self) -> usize {
        self.schedule.len()
    }

    /// Frame length `tau = n N`.
    pub fn frame_bits(&self) -> usize {
        self.n() * self.block_len()
    }

    /// Number of unique constituent encodings `M`.
    pub fn order(&self) -> usize {
        self.books.len()
    }

    pub fn books(&self) -> &[Codebook] {
        &self.books
    }

    pub fn schedule(&self) -> &[usize] {
        &self.schedule
    }

    /// The encoding used at symbol position `i`.
    pub fn encoding(&self, i: usize) -> &Codebook {
        &self.books[self.schedule[i]]
    }

    /// Concatenate the codewords of every message symbol.
    pub fn encode(&self, message: &[usize]) -> Result<Vec<Bit>, CodeError> {
        if message.len() != self.block_len() {
            return Err(CodeError::MessageLength { got: message.len(), expected: self.block_len() });
        }
        let q = self.q();
        let mut out = Vec::with_capacity(self.frame_bits());
        for (position, &symbol) in message.iter().enumerate() {
            if symbol >= q {
                return Err(CodeError::SymbolOutOfRange { position, symbol, q });
            }
            out.extend_from_slice(self.encoding(position).word(symbol));
        }
        Ok(out)
    }
}

/// Order of a code, counted from its books.
pub fn order(code: &TvbCode) -> usize {
    order_of(code.books())
}
