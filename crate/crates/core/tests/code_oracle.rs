use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use tvb::channel::{Bit, ChannelParams};
use tvb::code::{
    anneal_design, from_marker_code, from_sparse_marker, parse_codebooks, sparse_codebook, spectrum, AnnealSchedule,
    BookScore, Codebook, ObjectiveWeights, TvbCode, REFERENCE_7_8_4,
};
use tvb::decoder::{decode_known, DecoderConfig, MetricMode};
use tvb::rng::SimRng;

/// Edit distance by plain recursion with a full memo table.
fn edit_distance(a: &[Bit], b: &[Bit]) -> usize {
    fn go(a: &[Bit], b: &[Bit], memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        let (i, j) = (a.len(), b.len());
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if i == 0 {
            j
        } else if j == 0 {
            i
        } else {
            let sub = go(&a[..i - 1], &b[..j - 1], memo) + usize::from(a[i - 1] != b[j - 1]);
            let del = go(&a[..i - 1], b, memo) + 1;
            let ins = go(a, &b[..j - 1], memo) + 1;
            sub.min(del).min(ins)
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    go(a, b, &mut memo)
}

fn all_pairs(book: &Codebook) -> BTreeMap<usize, usize> {
    let w = book.words();
    let mut out = BTreeMap::new();
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            *out.entry(edit_distance(&w[i], &w[j])).or_insert(0) += 1;
        }
    }
    out
}

#[test]
fn spectrum_matches_all_pairs() {
    let mut rng = SimRng::seed_from_u64(3);
    let mut books = parse_codebooks(REFERENCE_7_8_4).unwrap();
    for _ in 0..20 {
        let n = rng.gen_range(2..=9);
        let q = rng.gen_range(2..=(1usize << n).min(12));
        let mut values: Vec<u32> = (0..1u32 << n).collect();
        for k in 0..q {
            let r = rng.gen_range(k..values.len());
            values.swap(k, r);
        }
        let words = values[..q].iter().map(|v| (0..n).map(|b| ((v >> (n - 1 - b)) & 1) as Bit).collect()).collect();
        books.push(Codebook::new(n, words).unwrap());
    }
    for b in &books {
        let s = spectrum(b);
        assert_eq!(s.counts(), &all_pairs(b));
        assert_eq!(s.pairs(), b.q() * (b.q() - 1) / 2);
    }
}

fn words_of(n: usize) -> Vec<Vec<Bit>> {
    (0..1u32 << n).map(|v| (0..n).map(|b| ((v >> (n - 1 - b)) & 1) as Bit).collect()).collect()
}

/// Best score over every q-subset of `{0,1}^n`.
fn brute_best(n: usize, q: usize) -> BookScore {
    let words = words_of(n);
    let mut best: Option<BookScore> = None;
    let mut idx: Vec<usize> = (0..q).collect();
    loop {
        let book = Codebook::new(n, idx.iter().map(|&i| words[i].clone()).collect()).unwrap();
        let s = BookScore::of(&book);
        if best.map_or(true, |b| s > b) {
            best = Some(s);
        }
        // Next combination in lexicographic order.
        let mut k = q;
        loop {
            if k == 0 {
                return best.unwrap();
            }
            k -= 1;
            if idx[k] < words.len() - q + k {
                break;
            }
        }
        idx[k] += 1;
        for t in k + 1..q {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

#[test]
fn annealing_reaches_brute_force_optimum() {
    let schedule = AnnealSchedule { steps: 4000, ..Default::default() };
    for (n, q) in [(3, 2), (4, 3), (4, 4), (5, 3), (5, 4)] {
        let mut rng = SimRng::seed_from_u64(1);
        let books = anneal_design(n, q, 1, &ObjectiveWeights::default(), &schedule, &mut rng).unwrap();
        assert_eq!(BookScore::of(&books[0]), brute_best(n, q), "(n, q) = ({n}, {q})");
    }
}

fn assert_noiseless_round_trip(code: &TvbCode, rng: &mut SimRng) {
    let msg: Vec<usize> = (0..code.block_len()).map(|_| rng.gen_range(0..code.q())).collect();
    let bits = code.encode(&msg).unwrap();
    for mode in MetricMode::ALL {
        let cfg = DecoderConfig::for_code(code, ChannelParams::noiseless(), 1e-10, mode);
        let post = decode_known(code, &bits, &cfg).unwrap();
        assert_eq!(post.hard_decisions(), msg, "{mode:?}");
    }
}

#[test]
fn every_construction_decodes_noiseless_frames() {
    let mut rng = SimRng::seed_from_u64(12);
    let reference = TvbCode::with_random_schedule(parse_codebooks(REFERENCE_7_8_4).unwrap(), 10, &mut rng).unwrap();
    assert_noiseless_round_trip(&reference, &mut rng);

    let marker = from_marker_code(3, &[vec![0, 0, 1, 1], vec![1, 1, 0, 0]]).unwrap();
    let marker = marker.cyclic_extension(10);
    assert_noiseless_round_trip(&marker, &mut rng);

    let base = sparse_codebook(7, 8).unwrap();
    let markers: Vec<Vec<Bit>> = (0..10).map(|_| (0..7).map(|_| rng.gen_range(0..2)).collect()).collect();
    let sparse = from_sparse_marker(&base, &markers).unwrap();
    assert_noiseless_round_trip(&sparse, &mut rng);

    let sched = AnnealSchedule { steps: 2000, chains: 2, ..Default::default() };
    let books = anneal_design(6, 8, 3, &ObjectiveWeights::default(), &sched, &mut rng).unwrap();
    let designed = TvbCode::with_random_schedule(books, 10, &mut rng).unwrap();
    assert_noiseless_round_trip(&designed, &mut rng);
}

#[test]
fn designed_books_are_distinct() {
    let mut rng = SimRng::seed_from_u64(9);
    let sched = AnnealSchedule { steps: 2000, chains: 2, ..Default::default() };
    let books = anneal_design(6, 8, 12, &ObjectiveWeights::default(), &sched, &mut rng).unwrap();
    let code = TvbCode::new(books, (0..12).collect()).unwrap();
    assert_eq!(code.order(), 12);
}
