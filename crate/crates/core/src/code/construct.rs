//! Earlier synchronisation codes expressed as TVB codes.

use super::{CodeError, Codebook, TvbCode};
use crate::channel::Bit;

/// The `q` lowest-weight `n`-bit words, ties broken by numeric value.
pub fn sparse_codebook(n: usize, q: usize) -> Result<Codebook, CodeError> {
    if n >= usize::BITS as usize - 1 || q > (1usize << n) || n > 24 {
        return Err(CodeError::Infeasible { n, q });
    }
    let mut values: Vec<usize> = (0..1usize << n).collect();
    values.sort_by_key(|&v| (v.count_ones(), v));
    let words = values[..q].iter().map(|&v| to_bits(v, n)).collect();
    Codebook::new(n, words)
}

/// Sparse base code with a per-position additive marker: `C_i(D) = C'(D) + w_i`.
pub fn from_sparse_marker(base: &Codebook, markers: &[Vec<Bit>]) -> Result<TvbCode, CodeError> {
    let encodings = markers
        .iter()
        .map(|w| base.xor(w))
        .collect::<Result<Vec<_>, _>>()?;
    if encodings.is_empty() {
        return TvbCode::new(vec![base.clone()], Vec::new());
    }
    TvbCode::from_encodings(encodings)
}

/// Marker code: each book holds every `k`-bit data word followed by one marker.
///
/// The returned schedule uses each book once, in marker order; callers
/// normally replace it with a random schedule.
pub fn from_marker_code(k: usize, markers: &[Vec<Bit>]) -> Result<TvbCode, CodeError> {
    if k > 16 {
        return Err(CodeError::TooManyDataBits { k });
    }
    let first = markers.first().ok_or(CodeError::NoCodebooks)?;
    let n = k + first.len();
    let mut books: Vec<Codebook> = Vec::new();
    for marker in markers {
        let words = (0..1usize << k)
            .map(|v| {
                let mut w = to_bits(v, k);
                w.extend_from_slice(marker);
                w
            })
            .collect();
        let book = Codebook::new(n, words)?;
        if !books.iter().any(|b| b == &book) {
            books.push(book);
        }
    }
    let schedule = (0..books.len()).collect();
    TvbCode::new(books, schedule)
}

/// Most significant bit first.
fn to_bits(v: usize, n: usize) -> Vec<Bit> {
    (0..n).rev().map(|k| ((v >> k) & 1) as Bit).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::spectrum;
    use std::collections::BTreeMap;

    fn hamming_multiset(book: &Codebook) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        let w = book.words();
        for i in 0..w.len() {
            for j in i + 1..w.len() {
                let d = w[i].iter().zip(&w[j]).filter(|(a, b)| a != b).count();
                *m.entry(d).or_insert(0) += 1;
            }
        }
        m
    }

    #[test]
    fn sparse_book_is_low_weight() {
        let b = sparse_codebook(7, 8).unwrap();
        assert_eq!(b.word(0), &[0; 7]);
        assert!(b.words()[1..].iter().all(|w| w.iter().map(|&x| x as u32).sum::<u32>() == 1));
        assert!(sparse_codebook(2, 5).is_err());
    }

    #[test]
    fn zero_markers_give_one_book() {
        let base = sparse_codebook(5, 16).unwrap();
        let code = from_sparse_marker(&base, &vec![vec![0; 5]; 6]).unwrap();
        assert_eq!(code.order(), 1);
        assert_eq!(code.block_len(), 6);
    }

    #[test]
    fn alternating_markers_give_two_books() {
        let base = sparse_codebook(5, 16).unwrap();
        let w0 = vec![1, 0, 1, 1, 0];
        let w1 = vec![0, 1, 1, 0, 0];
        let markers: Vec<_> = (0..8).map(|i| if i % 2 == 0 { w0.clone() } else { w1.clone() }).collect();
        let code = from_sparse_marker(&base, &markers).unwrap();
        assert_eq!(code.order(), 2);
        assert_eq!(code.schedule(), &[0, 1, 0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn marker_offset_is_involutive_and_keeps_hamming_profile() {
        let base = sparse_codebook(7, 8).unwrap();
        let w = vec![1, 1, 0, 1, 0, 0, 1];
        let shifted = base.xor(&w).unwrap();
        assert_eq!(shifted.xor(&w).unwrap(), base);
        assert_eq!(hamming_multiset(&shifted), hamming_multiset(&base));
    }

    #[test]
    fn ratzer_style_marker_code() {
        let code = from_marker_code(9, &[vec![0, 0, 1], vec![1, 1, 0]]).unwrap();
        assert_eq!((code.n(), code.q(), code.order()), (12, 512, 2));
        let tiny = from_marker_code(1, &[vec![0]]).unwrap();
        assert_eq!((tiny.n(), tiny.q(), tiny.order()), (2, 2, 1));
        assert!(matches!(from_marker_code(17, &[vec![0]]), Err(CodeError::TooManyDataBits { k: 17 })));
    }

    #[test]
    fn marker_books_have_unit_minimum_distance() {
        let code = from_marker_code(3, &[vec![0, 0, 1, 1], vec![1, 1, 0, 0]]).unwrap();
        for b in code.books() {
            assert_eq!(spectrum(b).d_lmin(), Some(1));
        }
    }
}
