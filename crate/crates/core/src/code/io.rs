//! Plain-text codebook and schedule files.
//!
//! A codebook file starts with a header line `n q M`, followed by `M`
//! blocks separated by blank lines. Each block lists `q` codewords, one
//! per line, written as `n` characters from `{0, 1}`; line `d` of a block
//! is the codeword for symbol `d`. A schedule file holds whitespace
//! separated book indices.

use super::{CodeError, Codebook};
use crate::channel::Bit;

/// The (n=7, q=8, M=4) code used throughout the examples.
pub const REFERENCE_7_8_4: &str = include_str!("../../fixtures/tvb-7-8-4.txt");

/// A (6, 8, 12) code from `tvb design --n 6 --q 8 --books 12 --seed 1`.
pub const DESIGNED_6_8_12: &str = include_str!("../../fixtures/tvb-6-8-12.txt");

pub fn parse_codebooks(text: &str) -> Result<Vec<Codebook>, CodeError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (hline, header) = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or(CodeError::Parse { line: 1, msg: "missing header".into() })?;
    let fields: Vec<usize> = header
        .split_whitespace()
        .map(|f| f.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| CodeError::Parse { line: hline, msg: format!("bad header: {e}") })?;
    let [n, q, m] = fields[..] else {
        return Err(CodeError::Parse { line: hline, msg: "header must be `n q M`".into() });
    };

    let mut books = Vec::with_capacity(m);
    let mut current: Vec<Vec<Bit>> = Vec::new();
    for (line, text) in lines {
        if text.is_empty() {
            if !current.is_empty() {
                return Err(CodeError::Parse {
                    line,
                    msg: format!("block has {} codewords, expected {q}", current.len()),
                });
            }
            continue;
        }
        if books.len() == m {
            return Err(CodeError::Parse { line, msg: format!("more than {m} blocks") });
        }
        if text.len() != n {
            return Err(CodeError::Parse { line, msg: format!("codeword length {} != {n}", text.len()) });
        }
        let word = text
            .bytes()
            .map(|c| match c {
                b'0' => Ok(0),
                b'1' => Ok(1),
                _ => Err(CodeError::Parse { line, msg: format!("invalid character `{}`", c as char) }),
            })
            .collect::<Result<Vec<Bit>, _>>()?;
        current.push(word);
        if current.len() == q {
            let book = Codebook::new(n, std::mem::take(&mut current))
                .map_err(|e| CodeError::Parse { line, msg: e.to_string() })?;
            books.push(book);
        }
    }
    if !current.is_empty() || books.len() != m {
        let line = text.lines().count();
        return Err(CodeError::Parse { line, msg: format!("found {} complete blocks, expected {m}", books.len()) });
    }
    Ok(books)
}

pub fn write_codebooks(books: &[Codebook]) -> String {
    let (n, q) = books.first().map_or((0, 0), |b| (b.n(), b.q()));
    let mut out = format!("{n} {q} {}\n", books.len());
    for (i, book) in books.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for w in book.words() {
            out.extend(w.iter().map(|&b| char::from(b'0' + b)));
            out.push('\n');
        }
    }
    out
}

pub fn parse_schedule(text: &str) -> Result<Vec<usize>, CodeError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            let v = tok
                .parse()
                .map_err(|_| CodeError::Parse { line: i + 1, msg: format!("invalid book index `{tok}`") })?;
            out.push(v);
        }
    }
    Ok(out)
}

pub fn write_schedule(schedule: &[usize]) -> String {
    let mut s = schedule.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{order_of, spectrum};

    #[test]
    fn reference_round_trips_byte_exact() {
        let books = parse_codebooks(REFERENCE_7_8_4).unwrap();
        assert_eq!(books.len(), 4);
        assert_eq!(order_of(&books), 4);
        assert_eq!(write_codebooks(&books), REFERENCE_7_8_4);
    }

    #[test]
    fn reference_books_have_distance_three() {
        for b in parse_codebooks(REFERENCE_7_8_4).unwrap() {
            assert_eq!(spectrum(&b).d_lmin(), Some(3));
        }
    }

    #[test]
    fn schedule_round_trip() {
        let s = vec![3, 0, 2, 2, 1];
        assert_eq!(parse_schedule(&write_schedule(&s)).unwrap(), s);
        assert!(parse_schedule("1 x").is_err());
    }

    #[test]
    fn malformed_files() {
        assert!(parse_codebooks("").is_err());
        assert!(parse_codebooks("2 2 1\n00\n").is_err());
        assert!(parse_codebooks("2 2 1\n00\n0a\n").is_err());
        assert!(parse_codebooks("2 2 1\n00\n00\n").is_err());
        assert!(parse_codebooks("2 2 1\n00\n011\n").is_err());
        assert!(parse_codebooks("2 2 1\n00\n11\n\n01\n10\n").is_err());
        assert!(parse_codebooks("2 2\n00\n11\n").is_err());
    }
}
