use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use tvb::channel::{transmit, Bit, ChannelParams};
use tvb::code::{Codebook, TvbCode};
use tvb::decoder::{corridor_node_count, receiver_lattice, receiver_trellis, MetricEngine, MetricShape};
use tvb::decoder::{decode_known, DecoderConfig, MetricMode};
use tvb::drift::StateSpaceLimits;
use tvb::rng::SimRng;

/// `P(y | x)` by walking every channel event path that produces exactly `y`.
fn path_sum(x: &[Bit], y: &[Bit], p: &ChannelParams) -> f64 {
    fn go(x: &[Bit], y: &[Bit], p: &ChannelParams) -> f64 {
        let Some((&xb, xs)) = x.split_first() else {
            return if y.is_empty() { 1.0 } else { 0.0 };
        };
        // Insert `k` random bits, then delete or transmit `xb`.
        let mut total = 0.0;
        let mut w = 1.0;
        for k in 0..=y.len() {
            let rest = &y[k..];
            total += w * p.p_d() * go(xs, rest, p);
            if let Some((&yb, ys)) = rest.split_first() {
                let emit = if yb == xb { 1.0 - p.p_s() } else { p.p_s() };
                total += w * p.p_t() * emit * go(xs, ys, p);
            }
            w *= p.p_i() / 2.0;
        }
        total
    }
    go(x, y, p)
}

/// Symbol posteriors by enumerating every message.
fn bayes_app(code: &TvbCode, y: &[Bit], p: &ChannelParams) -> Vec<Vec<f64>> {
    let (nb, q) = (code.block_len(), code.q());
    let mut app = vec![vec![0.0; q]; nb];
    let mut msg = vec![0usize; nb];
    for idx in 0..q.pow(nb as u32) {
        let mut r = idx;
        for s in msg.iter_mut() {
            *s = r % q;
            r /= q;
        }
        let lik = path_sum(&code.encode(&msg).unwrap(), y, p);
        for (i, &d) in msg.iter().enumerate() {
            app[i][d] += lik;
        }
    }
    for row in &mut app {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    app
}

fn random_bits(len: usize, rng: &mut SimRng) -> Vec<Bit> {
    (0..len).map(|_| rng.gen_range(0..2)).collect()
}

fn random_code(nb: usize, rng: &mut SimRng) -> TvbCode {
    let encodings = (0..nb)
        .map(|_| loop {
            let a = random_bits(2, rng);
            let b = random_bits(2, rng);
            if a != b {
                break Codebook::new(2, vec![a, b]).unwrap();
            }
        })
        .collect();
    TvbCode::from_encodings(encodings).unwrap()
}

#[test]
fn posteriors_match_exhaustive_bayes() {
    let mut rng = SimRng::seed_from_u64(404);
    let mut checked = 0;
    for case in 0..64 {
        let nb = 2 + case % 2;
        let pv = [0.05, 0.1][(case / 2) % 2];
        let ps = [0.0, 0.1][(case / 4) % 2];
        let p = ChannelParams::new(pv, pv, ps).unwrap();
        let code = random_code(nb, &mut rng);
        let msg: Vec<usize> = (0..nb).map(|_| rng.gen_range(0..2)).collect();
        let y = transmit(&code.encode(&msg).unwrap(), &p, &mut rng);
        let want = bayes_app(&code, &y, &p);
        for mode in MetricMode::ALL {
            let cfg = DecoderConfig::for_code(&code, p, 1e-14, mode);
            let got = decode_known(&code, &y, &cfg).unwrap();
            for (gr, wr) in got.app().iter().zip(&want) {
                for (g, w) in gr.iter().zip(wr) {
                    assert!((g - w).abs() <= 1e-6 * w.max(1e-300), "case {case} {mode:?}: {g} vs {w}");
                }
            }
        }
        checked += 1;
    }
    assert!(checked >= 50);
}

#[test]
fn trellis_and_lattice_match_path_enumeration() {
    let mut rng = SimRng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.gen_range(1..=5);
        let len = rng.gen_range(0..=n + 3);
        let x = random_bits(n, &mut rng);
        let y = random_bits(len, &mut rng);
        let p = ChannelParams::new(rng.gen_range(0.01..0.3), rng.gen_range(0.01..0.3), rng.gen_range(0.0..0.2)).unwrap();
        let want = path_sum(&x, &y, &p);
        let wide_cw = StateSpaceLimits::new(-(n as i64), len as i64, n, 1e-10);
        let wide_bit = StateSpaceLimits::new(-1, len as i64 + 1, 1, 1e-10);
        let trellis = receiver_trellis(&x, &y, &p, &wide_cw, &wide_bit);
        let lattice = receiver_lattice(&x, &y, &p, None);
        assert!((trellis - want).abs() <= 1e-10 * want, "trellis {trellis} vs {want}");
        assert!((lattice - want).abs() <= 1e-10 * want, "lattice {lattice} vs {want}");
    }
}

#[test]
fn lattice_node_count_matches_brute_force() {
    let mut rng = SimRng::seed_from_u64(19);
    for _ in 0..100 {
        let n = rng.gen_range(1..=12);
        let lo = rng.gen_range(-(n as i64)..=2);
        let hi = rng.gen_range(lo..=lo + 8);
        let mu = rng.gen_range(0..=(n as i64 + hi + 2).max(0)) as usize;
        let mut brute = 0u64;
        for i in 1..=n as i64 {
            for j in 1..=mu as i64 {
                if (lo..=hi).contains(&(j - i)) {
                    brute += 1;
                }
            }
        }
        assert_eq!(corridor_node_count(n, mu, lo, hi), brute, "n={n} mu={mu} [{lo},{hi}]");

        let shape = MetricShape::new(
            n,
            &StateSpaceLimits::new(lo, hi, n, 1e-10),
            &StateSpaceLimits::new(-1, 3, 1, 1e-10),
        );
        let p = ChannelParams::symmetric(0.1).unwrap();
        let mut engine = MetricEngine::<f64>::new(&p, shape);
        let x = random_bits(n, &mut rng);
        let y = random_bits(mu, &mut rng);
        let mut out = vec![0.0; mu + 1];
        engine.lattice_pass(&x, &y, Some((lo, hi)), &mut out);
        assert_eq!(engine.counters.lattice_nodes, brute);
    }
}

#[test]
fn corridor_restricts_to_drift_window() {
    let mut rng = SimRng::seed_from_u64(5);
    let p = ChannelParams::new(0.05, 0.05, 0.01).unwrap();
    for _ in 0..50 {
        let n = 6;
        let x = random_bits(n, &mut rng);
        let y = transmit(&x, &p, &mut rng);
        let full = receiver_lattice(&x, &y, &p, None);
        let l = StateSpaceLimits::new(-(n as i64), y.len() as i64, n, 1e-10);
        let corr = receiver_lattice(&x, &y, &p, Some(&l));
        assert!((full - corr).abs() <= 1e-12 * full);
    }
}

proptest! {
    #[test]
    fn app_rows_are_distributions(seed in 0u64..1000, pv in 0.001f64..0.08) {
        let mut rng = SimRng::seed_from_u64(seed);
        let books = tvb::code::parse_codebooks(tvb::code::REFERENCE_7_8_4).unwrap();
        let code = TvbCode::with_random_schedule(books, 6, &mut rng).unwrap();
        let p = ChannelParams::symmetric(pv).unwrap();
        let msg: Vec<usize> = (0..6).map(|_| rng.gen_range(0..8)).collect();
        let y = transmit(&code.encode(&msg).unwrap(), &p, &mut rng);
        let cfg = DecoderConfig::for_code(&code, p, 1e-10, MetricMode::LatticeCorridor);
        if let Ok(post) = decode_known(&code, &y, &cfg) {
            for row in post.app() {
                prop_assert!(row.iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            prop_assert!((post.log_normalizer() - post.log_normalizer_backward()).abs() < 1e-8);
        }
    }
}
