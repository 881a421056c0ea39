//! Receiver metric `R(y | x)`: the probability that codeword `x` is received
//! as the bit window `y`.

use num_traits::Float;

use crate::channel::{Bit, ChannelParams};
use crate::drift::StateSpaceLimits;

/// Drift bounds used inside one receiver metric evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricShape {
    /// Codeword length.
    pub n: usize,
    /// Drift window over `n` bits, also bounding intermediate trellis states.
    pub mn: (i64, i64),
    /// Drift window over one bit; bounds the per-bit drift increment.
    pub m1: (i64, i64),
}

impl MetricShape {
    pub fn new(n: usize, codeword: &StateSpaceLimits, bit: &StateSpaceLimits) -> Self {
        Self { n, mn: (codeword.m_minus, codeword.m_plus), m1: (bit.m_minus, bit.m_plus) }
    }

    pub fn mn_size(&self) -> usize {
        (self.mn.1 - self.mn.0 + 1) as usize
    }

    pub fn m1_size(&self) -> usize {
        (self.m1.1 - self.m1.0 + 1) as usize
    }

    /// Shortest received window considered, `n + m_n^-`, never below zero.
    pub fn min_len(&self) -> usize {
        (self.n as i64 + self.mn.0).max(0) as usize
    }

    /// Longest received window considered, `n + m_n^+`.
    pub fn max_len(&self) -> usize {
        (self.n as i64 + self.mn.1).max(0) as usize
    }
}

/// Inner-loop work performed by the metric engines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpCounters {
    /// `(t, m, d)` cells of the trellis grid visited, over all passes.
    pub trellis_cells: u64,
    pub trellis_passes: u64,
    /// Lattice nodes with `i >= 1` and `j >= 1` evaluated through the full recursion.
    pub lattice_nodes: u64,
    pub lattice_passes: u64,
    /// Number of lattice passes per received window length.
    pub lattice_lengths: Vec<u64>,
}

impl OpCounters {
    pub fn merge(&mut self, other: &OpCounters) {
        self.trellis_cells += other.trellis_cells;
        self.trellis_passes += other.trellis_passes;
        self.lattice_nodes += other.lattice_nodes;
        self.lattice_passes += other.lattice_passes;
        if self.lattice_lengths.len() < other.lattice_lengths.len() {
            self.lattice_lengths.resize(other.lattice_lengths.len(), 0);
        }
        for (a, b) in self.lattice_lengths.iter_mut().zip(&other.lattice_lengths) {
            *a += b;
        }
    }

    fn record_length(&mut self, len: usize) {
        if self.lattice_lengths.len() <= len {
            self.lattice_lengths.resize(len + 1, 0);
        }
        self.lattice_lengths[len] += 1;
    }
}

/// Reusable scratch space and precomputed channel terms for one precision.
#[derive(Debug, Clone)]
pub struct MetricEngine<F: Float> {
    shape: MetricShape,
    // Q(y | x) for a window of length mu: index mu, split by whether the
    // last received bit matches x.
    q_match: Vec<F>,
    q_mismatch: Vec<F>,
    half_pi: F,
    pd: F,
    qdot_match: F,
    qdot_mismatch: F,
    prev: Vec<F>,
    next: Vec<F>,
    pub counters: OpCounters,
}

impl<F: Float> MetricEngine<F> {
    pub fn new(params: &ChannelParams, shape: MetricShape) -> Self {
        let cast = |v: f64| F::from(v).expect("probability fits the float type");
        let max_mu = (shape.m1.1 + 1).max(1) as usize;
        let mut q_match = vec![F::zero(); max_mu + 1];
        let mut q_mismatch = vec![F::zero(); max_mu + 1];
        let (pi, pd, pt, ps) = (params.p_i(), params.p_d(), params.p_t(), params.p_s());
        for mu in 1..=max_mu {
            let lead = (pi / 2.0).powi(mu as i32 - 1);
            q_match[mu] = cast(lead * (pt * (1.0 - ps) + 0.5 * pi * pd));
            q_mismatch[mu] = cast(lead * (pt * ps + 0.5 * pi * pd));
        }
        q_match[0] = cast(pd);
        q_mismatch[0] = cast(pd);
        let width = shape.mn_size().max(shape.max_len() + 1);
        Self {
            shape,
            q_match,
            q_mismatch,
            half_pi: cast(pi / 2.0),
            pd: cast(pd),
            qdot_match: cast(pt * (1.0 - ps)),
            qdot_mismatch: cast(pt * ps),
            prev: vec![F::zero(); width],
            next: vec![F::zero(); width],
            counters: OpCounters::default(),
        }
    }

    pub fn shape(&self) -> &MetricShape {
        &self.shape
    }

    /// One trellis forward pass over all of `y`.
    ///
    /// On return `out[k]` holds `R(y[..n + m_n^- + k] | x)` for each end
    /// state `k` of the codeword window; prefixes longer than `y` are zero.
    pub fn trellis_pass(&mut self, x: &[Bit], y: &[Bit], out: &mut [f64]) {
        let n = x.len();
        let (lo, hi) = self.shape.mn;
        let (d_lo, d_hi) = self.shape.m1;
        let size = self.shape.mn_size();
        let len = y.len() as i64;
        self.counters.trellis_passes += 1;
        let prev = &mut self.prev;
        let next = &mut self.next;
        prev[..size].fill(F::zero());
        if lo <= 0 && 0 <= hi {
            prev[(-lo) as usize] = F::one();
        }
        let mut scale = 1.0f64;
        for t in 1..=n as i64 {
            let xb = x[t as usize - 1];
            let mut peak = F::zero();
            self.counters.trellis_cells += (size as u64) * (d_hi - d_lo + 1) as u64;
            for m in lo..=hi {
                let end = t + m;
                // Increments d keep the previous state in the window, the
                // window start at or after bit 0, and the window length d + 1
                // non-negative.
                let d_min = d_lo.max(m - hi).max(-1);
                let d_max = d_hi.min(m - lo).min(m + t - 1);
                let mut sum = F::zero();
                if end >= 0 && end <= len && d_min <= d_max {
                    let table = if end > 0 && y[end as usize - 1] == xb { &self.q_match } else { &self.q_mismatch };
                    for d in d_min..=d_max {
                        sum = sum + prev[(m - d - lo) as usize] * table[(d + 1) as usize];
                    }
                }
                next[(m - lo) as usize] = sum;
                if sum > peak {
                    peak = sum;
                }
            }
            std::mem::swap(prev, next);
            if peak > F::zero() {
                let inv = peak.recip();
                for v in prev[..size].iter_mut() {
                    *v = *v * inv;
                }
                scale *= peak.to_f64().unwrap();
            }
        }
        for (k, o) in out[..size].iter_mut().enumerate() {
            *o = prev[k].to_f64().unwrap() * scale;
        }
    }

    /// Lattice pass over all of `y`; `out[L]` receives `R(y[..L] | x)` for
    /// every `L` in `0..=y.len()`.
    ///
    /// With `corridor = Some((lo, hi))`, nodes whose column minus row falls
    /// outside `[lo, hi]` are held at zero.
    pub fn lattice_pass(&mut self, x: &[Bit], y: &[Bit], corridor: Option<(i64, i64)>, out: &mut [f64]) {
        let n = x.len();
        let cols = y.len();
        let (c_lo, c_hi) = corridor.unwrap_or((i64::MIN / 4, i64::MAX / 4));
        self.counters.lattice_passes += 1;
        self.counters.record_length(cols);
        if self.prev.len() <= cols {
            self.prev.resize(cols + 1, F::zero());
            self.next.resize(cols + 1, F::zero());
        }
        let prev = &mut self.prev;
        let cur = &mut self.next;
        let col_range = |i: i64| -> (usize, usize) {
            let a = (i + c_lo).max(0);
            let b = (i + c_hi).min(cols as i64);
            if a > b {
                (1, 0)
            } else {
                (a as usize, b as usize)
            }
        };

        prev[..=cols].fill(F::zero());
        let (a0, b0) = col_range(0);
        if a0 == 0 && b0 >= a0 {
            prev[0] = F::one();
            for j in 1..=b0 {
                prev[j] = self.half_pi * prev[j - 1];
            }
        }
        let mut scale = 1.0f64;
        let mut nodes = 0u64;
        for i in 1..=n as i64 {
            let xb = x[i as usize - 1];
            let last = i as usize == n;
            let (a, b) = col_range(i);
            cur[..=cols].fill(F::zero());
            let mut peak = F::zero();
            if a <= b {
                let mut j = a;
                if j == 0 {
                    cur[0] = self.pd * prev[0];
                    peak = cur[0];
                    j = 1;
                }
                // Index 0 when the received bit differs from x, 1 when it matches.
                let diag = [self.qdot_mismatch, self.qdot_match];
                let ins = if last { F::zero() } else { self.half_pi };
                let mut left = cur[j - 1];
                for j in j..=b {
                    let v = self.pd * prev[j] + diag[(y[j - 1] == xb) as usize] * prev[j - 1] + ins * left;
                    cur[j] = v;
                    left = v;
                    if v > peak {
                        peak = v;
                    }
                }
                nodes += (b + 1 - j.max(1)) as u64;
            }
            std::mem::swap(prev, cur);
            if peak > F::zero() {
                let inv = peak.recip();
                for v in prev[a..=b].iter_mut() {
                    *v = *v * inv;
                }
                scale *= peak.to_f64().unwrap();
            }
        }
        self.counters.lattice_nodes += nodes;
        for (l, o) in out[..=cols].iter_mut().enumerate() {
            *o = prev[l].to_f64().unwrap() * scale;
        }
    }
}

fn default_shape(n: usize, y_len: usize) -> MetricShape {
    let hi = y_len as i64 - n as i64;
    MetricShape { n, mn: (-(n as i64), hi.max(0)), m1: (-1, hi.max(0) + n as i64) }
}

/// Trellis receiver metric for a single window.
pub fn receiver_trellis(
    x: &[Bit],
    y: &[Bit],
    params: &ChannelParams,
    codeword: &StateSpaceLimits,
    bit: &StateSpaceLimits,
) -> f64 {
    let shape = MetricShape::new(x.len(), codeword, bit);
    let end = y.len() as i64 - x.len() as i64;
    if end < shape.mn.0 || end > shape.mn.1 {
        return 0.0;
    }
    let mut engine = MetricEngine::<f64>::new(params, shape);
    let mut out = vec![0.0; shape.mn_size()];
    engine.trellis_pass(x, y, &mut out);
    out[(end - shape.mn.0) as usize]
}

/// Trellis receiver metric for every prefix of `y` whose drift lies in the
/// codeword window, from one forward pass. Entry `k` is for drift `m_n^- + k`.
pub fn receiver_trellis_batch(
    x: &[Bit],
    y: &[Bit],
    params: &ChannelParams,
    codeword: &StateSpaceLimits,
    bit: &StateSpaceLimits,
) -> Vec<f64> {
    let shape = MetricShape::new(x.len(), codeword, bit);
    let mut engine = MetricEngine::<f64>::new(params, shape);
    let mut out = vec![0.0; shape.mn_size()];
    engine.trellis_pass(x, y, &mut out);
    out
}

/// Lattice receiver metric for the whole of `y`.
pub fn receiver_lattice(x: &[Bit], y: &[Bit], params: &ChannelParams, corridor: Option<&StateSpaceLimits>) -> f64 {
    receiver_lattice_batch(x, y, params, corridor)[y.len()]
}

/// Lattice receiver metric for every prefix length `0..=y.len()`.
pub fn receiver_lattice_batch(
    x: &[Bit],
    y: &[Bit],
    params: &ChannelParams,
    corridor: Option<&StateSpaceLimits>,
) -> Vec<f64> {
    let mut engine = MetricEngine::<f64>::new(params, default_shape(x.len(), y.len()));
    let mut out = vec![0.0; y.len() + 1];
    engine.lattice_pass(x, y, corridor.map(|c| (c.m_minus, c.m_plus)), &mut out);
    out
}

/// Number of interior lattice nodes (`1 <= i <= n`, `1 <= j <= mu_dot`) inside
/// the corridor `m_n^- <= j - i <= m_n^+`.
///
/// When no row is cut away entirely (`m_n^+ >= 0` and `n + m_n^- <= mu_dot`)
/// this is `n M_n` less the two corner triangles; otherwise rows are summed.
pub fn corridor_node_count(n: usize, mu_dot: usize, m_minus: i64, m_plus: i64) -> u64 {
    let n_i = n as i64;
    let mu = mu_dot as i64;
    if m_plus >= 0 && n_i + m_minus <= mu {
        let tri = |k: i64| if k > 0 { ((k * k + k) / 2) as u64 } else { 0 };
        let width = (m_plus - m_minus + 1) as u64;
        let upper_left = tri(-m_minus) - tri(-m_minus - n_i);
        let lower_right = tri(n_i + m_plus - mu) - tri(m_plus - mu);
        return n as u64 * width - upper_left - lower_right;
    }
    (1..=n_i).map(|i| ((i + m_plus).min(mu) - (i + m_minus).max(1) + 1).max(0) as u64).sum()
}
