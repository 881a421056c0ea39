//! Symbol-level MAP decoder over the drift state space.
//!
//! The decoder runs a forward-backward recursion whose state is the drift at
//! each codeword boundary. Transition metrics combine the symbol prior with a
//! receiver metric computed by one of four interchangeable engines.

mod complexity;
mod metric;

use thiserror::Error;

use crate::channel::{Bit, ChannelParams};
use crate::code::TvbCode;
use crate::drift::{allocate_budgets, select_limits, DriftDist, LimitPolicy, StateSpaceLimits};

pub use complexity::{complexity_estimate, ComplexityEstimate};
pub use metric::{
    corridor_node_count, receiver_lattice, receiver_lattice_batch, receiver_trellis, receiver_trellis_batch,
    MetricEngine, MetricShape, OpCounters,
};

/// Receiver metric implementation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MetricMode {
    /// One trellis pass per transition metric.
    TrellisNaive,
    /// One trellis pass per start state and symbol, shared by all end states.
    TrellisBatch,
    /// Batch lattice recursion.
    Lattice,
    /// Batch lattice restricted to a corridor around the diagonal.
    #[default]
    LatticeCorridor,
}

impl MetricMode {
    pub const ALL: [MetricMode; 4] =
        [MetricMode::TrellisNaive, MetricMode::TrellisBatch, MetricMode::Lattice, MetricMode::LatticeCorridor];

    pub fn name(self) -> &'static str {
        match self {
            MetricMode::TrellisNaive => "naive",
            MetricMode::TrellisBatch => "batch",
            MetricMode::Lattice => "lattice",
            MetricMode::LatticeCorridor => "corridor",
        }
    }
}

impl std::str::FromStr for MetricMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric mode `{s}` (expected naive, batch, lattice or corridor)"))
    }
}

/// Floating-point width of the receiver metric recursion. The outer
/// forward-backward recursion always runs in `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Double,
    Single,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("boundary drift {drift} lies outside the frame limits [{lo}, {hi}]")]
    BoundaryOutsideLimits { drift: i64, lo: i64, hi: i64 },
    #[error("boundary condition has no mass")]
    EmptyBoundary,
    #[error("received sequence has zero probability within the decoder limits")]
    ImpossibleObservation,
    #[error("prior matrix must be {rows}x{cols} with rows summing to one")]
    BadPriors { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub params: ChannelParams,
    pub limits_frame: StateSpaceLimits,
    pub limits_codeword: StateSpaceLimits,
    pub limits_bit: StateSpaceLimits,
    pub mode: MetricMode,
    pub priors: Option<Vec<Vec<f64>>>,
    pub precision: Precision,
}

impl DecoderConfig {
    /// Limits for a frame of `block_len` codewords of `n` bits, with total
    /// miss probability `p_e` split across the frame, codeword and bit scopes.
    pub fn new(params: ChannelParams, n: usize, block_len: usize, p_e: f64, mode: MetricMode) -> Self {
        let tau = n * block_len;
        let budgets = allocate_budgets(&LimitPolicy { p_e, block_len, frame_bits: tau });
        // Boundary drifts move from zero towards the end-of-frame window, so
        // on a skewed channel the window is widened to keep the start inside.
        let end = select_limits(tau, &params, budgets.frame);
        let limits_frame = StateSpaceLimits::new(end.m_minus.min(0), end.m_plus.max(0), tau, budgets.frame);
        Self {
            params,
            limits_frame,
            limits_codeword: select_limits(n, &params, budgets.codeword),
            limits_bit: select_limits(1, &params, budgets.bit),
            mode,
            priors: None,
            precision: Precision::Double,
        }
    }

    pub fn for_code(code: &TvbCode, params: ChannelParams, p_e: f64, mode: MetricMode) -> Self {
        Self::new(params, code.n(), code.block_len(), p_e, mode)
    }

    pub fn with_mode(mut self, mode: MetricMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn with_frame_limits(mut self, limits: StateSpaceLimits) -> Self {
        self.limits_frame = limits;
        self
    }

    /// Per-symbol prior probabilities, one row of `q` entries per block position.
    pub fn with_priors(mut self, priors: Vec<Vec<f64>>, block_len: usize, q: usize) -> Result<Self, DecodeError> {
        let ok = priors.len() == block_len
            && priors.iter().all(|r| {
                r.len() == q && r.iter().all(|&p| p >= 0.0) && (r.iter().sum::<f64>() - 1.0).abs() <= 1e-9
            });
        if !ok {
            return Err(DecodeError::BadPriors { rows: block_len, cols: q });
        }
        self.priors = Some(priors);
        Ok(self)
    }

    pub fn shape(&self, n: usize) -> MetricShape {
        MetricShape::new(n, &self.limits_codeword, &self.limits_bit)
    }
}

/// Drift distributions at the start and end of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    pub alpha0: DriftDist,
    pub beta_n: DriftDist,
}

impl BoundaryConditions {
    /// Known frame start and known end drift.
    pub fn known(end_drift: i64) -> Self {
        Self { alpha0: DriftDist::point(0), beta_n: DriftDist::point(end_drift) }
    }
}

/// Decoder output for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorBlock {
    app: Vec<Vec<f64>>,
    boundary: Vec<DriftDist>,
    log_evidence_forward: f64,
    log_evidence_backward: f64,
    counters: OpCounters,
}

impl PosteriorBlock {
    /// A-posteriori symbol probabilities, one row per block position.
    pub fn app(&self) -> &[Vec<f64>] {
        &self.app
    }

    /// Per-symbol argmax of the APPs; the lowest symbol wins ties.
    pub fn hard_decisions(&self) -> Vec<usize> {
        self.app
            .iter()
            .map(|row| {
                let mut best = 0;
                for (d, &p) in row.iter().enumerate() {
                    if p > row[best] {
                        best = d;
                    }
                }
                best
            })
            .collect()
    }

    /// Normalized drift posterior at codeword boundary `i`, for `i` in `0..=N`.
    pub fn boundary_posterior(&self, i: usize) -> &DriftDist {
        &self.boundary[i]
    }

    pub fn boundary_posteriors(&self) -> &[DriftDist] {
        &self.boundary
    }

    /// Normalized end-of-frame drift posterior.
    pub fn drift_posterior(&self) -> &DriftDist {
        self.boundary.last().expect("at least one boundary")
    }

    /// Natural log of the sum of the unnormalized end-of-frame posterior,
    /// that is, of the probability of the received window under the boundary
    /// conditions.
    pub fn log_normalizer(&self) -> f64 {
        self.log_evidence_forward
    }

    /// The same quantity, accumulated through the backward recursion.
    pub fn log_normalizer_backward(&self) -> f64 {
        self.log_evidence_backward
    }

    pub fn counters(&self) -> &OpCounters {
        &self.counters
    }
}

/// Decode a frame received as exactly `y`, with known start and end.
pub fn decode_known(code: &TvbCode, y: &[Bit], config: &DecoderConfig) -> Result<PosteriorBlock, DecodeError> {
    let end = y.len() as i64 - code.frame_bits() as i64;
    decode(code, y, &BoundaryConditions::known(end), config)
}

/// Decode a frame starting at position zero of `y`.
pub fn decode(
    code: &TvbCode,
    y: &[Bit],
    boundary: &BoundaryConditions,
    config: &DecoderConfig,
) -> Result<PosteriorBlock, DecodeError> {
    decode_at(code, y, 0, boundary, config)
}

/// Decode a frame whose nominal start is position `origin` of `buffer`.
///
/// Drift `m` at boundary `i` refers to position `origin + n i + m`. Bits of
/// `buffer` outside the frame are used only when a drift hypothesis reaches
/// them; hypotheses needing bits beyond the buffer get zero probability.
pub fn decode_at(
    code: &TvbCode,
    buffer: &[Bit],
    origin: usize,
    boundary: &BoundaryConditions,
    config: &DecoderConfig,
) -> Result<PosteriorBlock, DecodeError> {
    match config.precision {
        Precision::Double => Decoder::<f64>::new(code, config).run(buffer, origin, boundary),
        Precision::Single => Decoder::<f32>::new(code, config).run(buffer, origin, boundary),
    }
}

struct Decoder<'a, F: num_traits::Float> {
    code: &'a TvbCode,
    config: &'a DecoderConfig,
    engine: MetricEngine<F>,
    shape: MetricShape,
}

/// Transition metrics for one block position, over the active start states.
struct GammaBlock {
    /// Index into the frame window of the first active start state.
    first: usize,
    active: usize,
    /// `[start][symbol][end offset]`, flattened.
    values: Vec<f64>,
}

impl<'a, F: num_traits::Float> Decoder<'a, F> {
    fn new(code: &'a TvbCode, config: &'a DecoderConfig) -> Self {
        let shape = config.shape(code.n());
        Self { code, config, engine: MetricEngine::new(&config.params, shape), shape }
    }

    fn prior(&self, i: usize, d: usize) -> f64 {
        match &self.config.priors {
            Some(p) => p[i][d],
            None => 1.0 / self.code.q() as f64,
        }
    }

    /// Fill `out[k]` with `R(window of drift m_n^- + k | x)` for start position `start`.
    fn metrics(&mut self, x: &[Bit], buffer: &[Bit], start: usize, out: &mut [f64], scratch: &mut Vec<f64>) {
        let shape = self.shape;
        let avail = buffer.len() - start;
        let max_len = shape.max_len().min(avail);
        let y = &buffer[start..start + max_len];
        let min_len = shape.n as i64 + shape.mn.0;
        out.fill(0.0);
        match self.config.mode {
            MetricMode::TrellisNaive => {
                let mut single = vec![0.0; shape.mn_size()];
                for (k, o) in out.iter_mut().enumerate() {
                    let len = min_len + k as i64;
                    if len < 0 || len as usize > max_len {
                        continue;
                    }
                    self.engine.trellis_pass(x, &y[..len as usize], &mut single);
                    *o = single[k];
                }
            }
            MetricMode::TrellisBatch => self.engine.trellis_pass(x, y, out),
            MetricMode::Lattice | MetricMode::LatticeCorridor => {
                let corridor = (self.config.mode == MetricMode::LatticeCorridor).then_some(shape.mn);
                scratch.resize(max_len + 1, 0.0);
                self.engine.lattice_pass(x, y, corridor, scratch);
                for (k, o) in out.iter_mut().enumerate() {
                    let len = min_len + k as i64;
                    if len >= 0 && len as usize <= max_len {
                        *o = scratch[len as usize];
                    }
                }
            }
        }
    }

    fn run(mut self, buffer: &[Bit], origin: usize, boundary: &BoundaryConditions) -> Result<PosteriorBlock, DecodeError> {
        let code = self.code;
        let (n, q, nb) = (code.n(), code.q(), code.block_len());
        let lim = self.config.limits_frame;
        let (w_lo, w_hi) = (lim.m_minus, lim.m_plus);
        let width = lim.size();
        for dist in [&boundary.alpha0, &boundary.beta_n] {
            let (s_lo, s_hi) = dist.support().ok_or(DecodeError::EmptyBoundary)?;
            for drift in [s_lo, s_hi] {
                if drift < w_lo || drift > w_hi {
                    return Err(DecodeError::BoundaryOutsideLimits { drift, lo: w_lo, hi: w_hi });
                }
            }
        }
        let mn = self.shape.mn_size();
        let (mn_lo, _) = self.shape.mn;

        // Forward recursion, computing transition metrics as start states become reachable.
        let mut alpha = vec![vec![0.0; width]; nb + 1];
        let mut log_alpha = 0.0f64;
        {
            let a0 = boundary.alpha0.restricted(w_lo, w_hi);
            let s: f64 = a0.total();
            for (k, v) in alpha[0].iter_mut().enumerate() {
                *v = a0.probs()[k] / s;
            }
            log_alpha += s.ln();
        }
        let mut gammas: Vec<GammaBlock> = Vec::with_capacity(nb);
        let mut out = vec![0.0; mn];
        let mut scratch = Vec::new();
        for i in 0..nb {
            let first = alpha[i].iter().position(|&a| a > 0.0);
            let last = alpha[i].iter().rposition(|&a| a > 0.0);
            let (first, last) = match (first, last) {
                (Some(f), Some(l)) => (f, l),
                _ => return Err(DecodeError::ImpossibleObservation),
            };
            let active = last - first + 1;
            let mut values = vec![0.0; active * q * mn];
            let (cur, rest) = alpha.split_at_mut(i + 1);
            let (cur, next) = (&cur[i], &mut rest[0]);
            for s in 0..active {
                let k_prev = first + s;
                let m_prev = w_lo + k_prev as i64;
                let start = origin as i64 + (n * i) as i64 + m_prev;
                if start < 0 || start as usize > buffer.len() {
                    continue;
                }
                for d in 0..q {
                    let x = code.encoding(i).word(d);
                    self.metrics(x, buffer, start as usize, &mut out, &mut scratch);
                    let prior = self.prior(i, d);
                    let base = (s * q + d) * mn;
                    let a = cur[k_prev];
                    for k in 0..mn {
                        let g = prior * out[k];
                        values[base + k] = g;
                        let m = m_prev + mn_lo + k as i64;
                        if g > 0.0 && m >= w_lo && m <= w_hi {
                            next[(m - w_lo) as usize] += a * g;
                        }
                    }
                }
            }
            let s: f64 = next.iter().sum();
            if !(s > 0.0) {
                return Err(DecodeError::ImpossibleObservation);
            }
            next.iter_mut().for_each(|v| *v /= s);
            log_alpha += s.ln();
            gammas.push(GammaBlock { first, active, values });
        }

        let beta_end = boundary.beta_n.restricted(w_lo, w_hi);
        let end_mass: f64 = alpha[nb].iter().zip(beta_end.probs()).map(|(a, b)| a * b).sum();
        if !(end_mass > 0.0) {
            return Err(DecodeError::ImpossibleObservation);
        }
        let log_evidence_forward = log_alpha + end_mass.ln();

        // Backward recursion and symbol posteriors.
        let mut beta = vec![vec![0.0; width]; nb + 1];
        let mut log_beta;
        {
            let s = beta_end.total();
            for (k, v) in beta[nb].iter_mut().enumerate() {
                *v = beta_end.probs()[k] / s;
            }
            log_beta = s.ln();
        }
        let mut app = vec![vec![0.0; q]; nb];
        for i in (0..nb).rev() {
            let g = &gammas[i];
            let (lower, upper) = beta.split_at_mut(i + 1);
            let (cur, next) = (&mut lower[i], &upper[0]);
            let row = &mut app[i];
            for s in 0..g.active {
                let k_prev = g.first + s;
                let m_prev = w_lo + k_prev as i64;
                let a = alpha[i][k_prev];
                let mut b_acc = 0.0;
                for (d, slot) in row.iter_mut().enumerate() {
                    let base = (s * q + d) * mn;
                    let mut acc = 0.0;
                    for k in 0..mn {
                        let m = m_prev + mn_lo + k as i64;
                        if m < w_lo || m > w_hi {
                            continue;
                        }
                        acc += g.values[base + k] * next[(m - w_lo) as usize];
                    }
                    b_acc += acc;
                    *slot += a * acc;
                }
                cur[k_prev] = b_acc;
            }
            let s: f64 = cur.iter().sum();
            if !(s > 0.0) {
                return Err(DecodeError::ImpossibleObservation);
            }
            cur.iter_mut().for_each(|v| *v /= s);
            log_beta += s.ln();
            let total: f64 = row.iter().sum();
            if !(total > 0.0) {
                return Err(DecodeError::ImpossibleObservation);
            }
            row.iter_mut().for_each(|v| *v /= total);
        }
        let start_mass: f64 = alpha[0].iter().zip(&beta[0]).map(|(a, b)| a * b).sum();
        let log_evidence_backward = log_beta + start_mass.ln() + (boundary.alpha0.restricted(w_lo, w_hi).total()).ln();

        let boundary_post = (0..=nb)
            .map(|i| {
                let probs: Vec<f64> = alpha[i].iter().zip(&beta[i]).map(|(a, b)| a * b).collect();
                DriftDist::new(w_lo, probs).normalized().expect("posterior has mass")
            })
            .collect();

        Ok(PosteriorBlock {
            app,
            boundary: boundary_post,
            log_evidence_forward,
            log_evidence_backward,
            counters: self.engine.counters.clone(),
        })
    }
}
