//! Simulated-annealing search for sets of distinct codebooks.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use super::distance::levenshtein;
use super::{CodeError, Codebook};
use crate::channel::Bit;
use crate::rng::SimRng;

/// Weights of the annealing energy
/// `dmin * (n - d_lmin) + first * A(d_lmin) + second * A(d_lmin + 1)`,
/// where `A(d)` is the number of codeword pairs at distance `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    pub dmin: f64,
    pub first: f64,
    pub second: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self { dmin: 1e4, first: 1e2, second: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub initial_temp: f64,
    pub final_temp: f64,
    pub steps: usize,
    /// Independent chains per book; the best result is kept.
    pub chains: usize,
    /// Extra rounds allowed when a search reproduces an earlier book.
    pub retries: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { initial_temp: 2e3, final_temp: 0.05, steps: 20_000, chains: 4, retries: 8 }
    }
}

/// Quality of a codebook; larger minimum distance first, then fewer pairs at
/// `d_lmin`, then fewer at `d_lmin + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BookScore {
    pub d_lmin: usize,
    pub at_min: usize,
    pub at_next: usize,
}

impl BookScore {
    fn from_hist(hist: &[usize], n: usize) -> Self {
        match hist.iter().position(|&c| c > 0) {
            Some(d) => Self { d_lmin: d, at_min: hist[d], at_next: hist.get(d + 1).copied().unwrap_or(0) },
            None => Self { d_lmin: n + 1, at_min: 0, at_next: 0 },
        }
    }

    pub fn of(book: &Codebook) -> Self {
        let words = book.words();
        let mut hist = vec![0; book.n() + 1];
        for i in 0..words.len() {
            for j in i + 1..words.len() {
                hist[levenshtein(&words[i], &words[j])] += 1;
            }
        }
        Self::from_hist(&hist, book.n())
    }

    fn energy(&self, n: usize, w: &ObjectiveWeights) -> f64 {
        w.dmin * (n as f64 - self.d_lmin as f64) + w.first * self.at_min as f64 + w.second * self.at_next as f64
    }
}

impl Ord for BookScore {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d_lmin
            .cmp(&other.d_lmin)
            .then(other.at_min.cmp(&self.at_min))
            .then(other.at_next.cmp(&self.at_next))
    }
}

impl PartialOrd for BookScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Design `m` distinct `(n, q)` codebooks.
///
/// Chains are seeded from `rng` before running, so the result depends only on
/// the generator state and not on how rayon schedules the chains.
pub fn anneal_design<R: Rng + ?Sized>(
    n: usize,
    q: usize,
    m: usize,
    weights: &ObjectiveWeights,
    schedule: &AnnealSchedule,
    rng: &mut R,
) -> Result<Vec<Codebook>, CodeError> {
    if q == 0 {
        return Err(CodeError::EmptyCodebook);
    }
    if n >= 63 || q as u128 > 1u128 << n {
        return Err(CodeError::Infeasible { n, q });
    }
    let mut books: Vec<Codebook> = Vec::with_capacity(m);
    let mut seen: HashSet<Vec<Vec<Bit>>> = HashSet::new();
    for _ in 0..m {
        let mut found = None;
        for _ in 0..=schedule.retries {
            let seeds: Vec<u64> = (0..schedule.chains.max(1)).map(|_| rng.gen()).collect();
            let mut results: Vec<(BookScore, Codebook)> = seeds
                .par_iter()
                .map(|&s| run_chain(n, q, weights, schedule, &mut SimRng::seed_from_u64(s)))
                .collect();
            // Stable sort keeps the lowest chain index among equal scores.
            results.sort_by(|a, b| b.0.cmp(&a.0));
            if let Some((_, book)) = results.into_iter().find(|(_, b)| !seen.contains(&b.canonical())) {
                found = Some(book);
                break;
            }
        }
        let book = found.ok_or(CodeError::NotEnoughBooks { wanted: m })?;
        seen.insert(book.canonical());
        books.push(book);
    }
    Ok(books)
}

fn run_chain(
    n: usize,
    q: usize,
    weights: &ObjectiveWeights,
    sched: &AnnealSchedule,
    rng: &mut SimRng,
) -> (BookScore, Codebook) {
    let mut words: Vec<u64> = Vec::with_capacity(q);
    let mut used: HashSet<u64> = HashSet::with_capacity(q);
    while words.len() < q {
        let w = random_word(n, rng);
        if used.insert(w) {
            words.push(w);
        }
    }
    let bits = |w: u64| -> Vec<Bit> { (0..n).rev().map(|k| ((w >> k) & 1) as Bit).collect() };
    let mut expanded: Vec<Vec<Bit>> = words.iter().map(|&w| bits(w)).collect();
    let mut dist = vec![vec![0usize; q]; q];
    let mut hist = vec![0usize; n + 1];
    for i in 0..q {
        for j in i + 1..q {
            let d = levenshtein(&expanded[i], &expanded[j]);
            dist[i][j] = d;
            dist[j][i] = d;
            hist[d] += 1;
        }
    }
    let mut score = BookScore::from_hist(&hist, n);
    let mut energy = score.energy(n, weights);
    let mut best = (score, words.clone());
    if q < 2 || n == 0 || q as u128 == 1u128 << n {
        return (best.0, to_book(n, &best.1));
    }

    let steps = sched.steps.max(1);
    let cool = (sched.final_temp / sched.initial_temp).powf(1.0 / steps as f64);
    let mut temp = sched.initial_temp;
    let mut row = vec![0usize; q];
    for _ in 0..steps {
        let i = rng.gen_range(0..q);
        let old = words[i];
        // Flip a random bit; if the result collides with another codeword keep
        // flipping further random bits until the book is injective again.
        let mut cand = old ^ (1 << rng.gen_range(0..n));
        while cand == old || used.contains(&cand) {
            cand ^= 1 << rng.gen_range(0..n);
        }
        let cand_bits = bits(cand);
        let mut new_hist = hist.clone();
        for j in 0..q {
            if j == i {
                continue;
            }
            new_hist[dist[i][j]] -= 1;
            row[j] = levenshtein(&cand_bits, &expanded[j]);
            new_hist[row[j]] += 1;
        }
        let new_score = BookScore::from_hist(&new_hist, n);
        let new_energy = new_score.energy(n, weights);
        let delta = new_energy - energy;
        if delta <= 0.0 || rng.gen::<f64>() < (-delta / temp).exp() {
            used.remove(&old);
            used.insert(cand);
            words[i] = cand;
            expanded[i] = cand_bits;
            for j in 0..q {
                if j != i {
                    dist[i][j] = row[j];
                    dist[j][i] = row[j];
                }
            }
            hist = new_hist;
            score = new_score;
            energy = new_energy;
            if score > best.0 {
                best = (score, words.clone());
            }
        }
        temp *= cool;
    }
    (best.0, to_book(n, &best.1))
}

fn random_word(n: usize, rng: &mut SimRng) -> u64 {
    if n == 0 {
        0
    } else {
        rng.gen::<u64>() & ((1u64 << n) - 1)
    }
}

fn to_book(n: usize, words: &[u64]) -> Codebook {
    let mut sorted = words.to_vec();
    sorted.sort_unstable();
    let words = sorted.iter().map(|&w| (0..n).rev().map(|k| ((w >> k) & 1) as Bit).collect()).collect();
    Codebook::new(n, words).expect("annealer keeps words distinct")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{order_of, spectrum};

    fn quick() -> AnnealSchedule {
        AnnealSchedule { steps: 4000, chains: 2, ..Default::default() }
    }

    #[test]
    fn score_ordering() {
        let a = BookScore { d_lmin: 3, at_min: 10, at_next: 0 };
        let b = BookScore { d_lmin: 2, at_min: 0, at_next: 0 };
        let c = BookScore { d_lmin: 3, at_min: 9, at_next: 50 };
        assert!(a > b);
        assert!(c > a);
    }

    #[test]
    fn designs_distinct_books_deterministically() {
        let w = ObjectiveWeights::default();
        let books = anneal_design(7, 8, 4, &w, &quick(), &mut SimRng::seed_from_u64(1)).unwrap();
        let again = anneal_design(7, 8, 4, &w, &quick(), &mut SimRng::seed_from_u64(1)).unwrap();
        assert_eq!(books, again);
        assert_eq!(order_of(&books), 4);
        for b in &books {
            assert_eq!((b.n(), b.q()), (7, 8));
            assert!(spectrum(b).d_lmin().unwrap() >= 3);
        }
    }

    #[test]
    fn full_space_admits_a_single_book() {
        let w = ObjectiveWeights::default();
        let s = AnnealSchedule { steps: 10, chains: 1, retries: 1, ..Default::default() };
        assert_eq!(anneal_design(2, 4, 1, &w, &s, &mut SimRng::seed_from_u64(0)).unwrap().len(), 1);
        assert!(anneal_design(2, 4, 2, &w, &s, &mut SimRng::seed_from_u64(0)).is_err());
        assert!(anneal_design(2, 5, 1, &w, &s, &mut SimRng::seed_from_u64(0)).is_err());
    }
}
