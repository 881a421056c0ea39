//! Frame-by-frame decoding of a continuous received stream.
//!
//! Frame boundaries in the received stream are not known. Each frame is
//! decoded with a start-of-frame drift prior carried over from the previous
//! frame and an end-of-frame prior obtained by spreading that start prior
//! with the channel drift distribution. Optionally the frame is augmented
//! with the first `nu` symbols of the next frame to sharpen the drift
//! estimate at the true frame end.

use thiserror::Error;

use crate::channel::Bit;
use crate::code::TvbCode;
use crate::decoder::{decode_at, BoundaryConditions, DecodeError, DecoderConfig, PosteriorBlock};
use crate::drift::{DriftDist, DriftPmf, StateSpaceLimits};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StreamError {
    #[error("stream ended: frame needs bits up to {needed}, only {available} received")]
    Exhausted { needed: i64, available: i64 },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Pull interface for received bits.
pub trait BitSource {
    /// Append up to `k` bits to `out` and return how many were appended.
    /// Returning fewer than `k` means the stream has ended.
    fn read(&mut self, k: usize, out: &mut Vec<Bit>) -> usize;
}

/// A stream held entirely in memory.
#[derive(Debug, Clone)]
pub struct SliceSource<'a> {
    bits: &'a [Bit],
    pos: usize,
}

impl<'a> SliceSource<'a> {
    pub fn new(bits: &'a [Bit]) -> Self {
        Self { bits, pos: 0 }
    }
}

impl BitSource for SliceSource<'_> {
    fn read(&mut self, k: usize, out: &mut Vec<Bit>) -> usize {
        let take = k.min(self.bits.len() - self.pos);
        out.extend_from_slice(&self.bits[self.pos..self.pos + take]);
        self.pos += take;
        take
    }
}

/// End-of-frame drift prior: the start prior convolved with the drift
/// distribution over one frame, normalized.
pub fn eof_prior(alpha0: &DriftDist, phi_tau: &DriftPmf) -> DriftDist {
    let phi = phi_tau.to_dist();
    let lo = alpha0.lo() + phi.lo();
    let mut probs = vec![0.0; alpha0.len() + phi.len() - 1];
    for (a, pa) in alpha0.probs().iter().enumerate() {
        if *pa == 0.0 {
            continue;
        }
        for (b, pb) in phi.probs().iter().enumerate() {
            probs[a + b] += pa * pb;
        }
    }
    let conv = DriftDist::new(lo, probs);
    conv.normalized().unwrap_or(conv)
}

/// Reweight a drift prior by `2^(sign * m)`, normalized.
///
/// Start and end hypotheses of a frame cover different spans of the received
/// window. Scoring the bits outside a hypothesis' span as equiprobable makes
/// their likelihoods comparable: an end drift one larger explains one more
/// bit, so without this weight shorter spans would be favored by about a
/// factor of two per bit.
pub fn span_weighted(dist: &DriftDist, sign: i64) -> DriftDist {
    let ln2 = std::f64::consts::LN_2;
    let logs: Vec<f64> = dist
        .iter()
        .map(|(m, p)| if p > 0.0 { p.ln() + (sign * m) as f64 * ln2 } else { f64::NEG_INFINITY })
        .collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return dist.clone();
    }
    let probs = logs.iter().map(|l| (l - peak).exp()).collect();
    let out = DriftDist::new(dist.lo(), probs);
    out.normalized().unwrap_or(out)
}

/// Equiprobable start and end drift over a window, for decoding without any
/// knowledge of the frame position.
pub fn initial_sync(limits: &StateSpaceLimits) -> BoundaryConditions {
    let u = DriftDist::uniform(limits.m_minus, limits.m_plus);
    BoundaryConditions { alpha0: u.clone(), beta_n: u }
}

/// Receiver state carried from one frame to the next.
#[derive(Debug, Clone)]
pub struct StreamState {
    /// Absolute received position of the nominal start of the next frame.
    cursor: i64,
    alpha0: DriftDist,
    lookahead: usize,
    frame_limits: StateSpaceLimits,
    cold: bool,
    buffer: Vec<Bit>,
    /// Absolute position of `buffer[0]`.
    buffer_start: i64,
    ended: bool,
}

/// Result of decoding one frame of the stream.
#[derive(Debug, Clone)]
pub struct StreamFrame {
    /// Posteriors of the augmented frame; only the first `N` rows and
    /// `N + 1` boundaries belong to this frame.
    pub posterior: PosteriorBlock,
    pub block_len: usize,
    /// Absolute received position of this frame's nominal start.
    pub cursor: i64,
    /// Most likely drift at the end of the frame, relative to `cursor + tau`.
    pub end_drift: i64,
    /// True when the frame end was taken from the end of the stream.
    pub final_frame: bool,
}

impl StreamFrame {
    pub fn app(&self) -> &[Vec<f64>] {
        &self.posterior.app()[..self.block_len]
    }

    pub fn hard_decisions(&self) -> Vec<usize> {
        let mut d = self.posterior.hard_decisions();
        d.truncate(self.block_len);
        d
    }

    /// Estimated absolute received position of codeword boundary `i`,
    /// for `i` in `0..=N`.
    pub fn boundary_position(&self, n: usize, i: usize) -> i64 {
        self.cursor + (n * i) as i64 + self.posterior.boundary_posterior(i).argmax()
    }
}

impl StreamState {
    /// Decoder state for a stream whose first frame starts at position zero.
    pub fn new(config: &DecoderConfig, lookahead: usize) -> Self {
        Self::with_prior(DriftDist::point(0), config, lookahead, false)
    }

    /// Decoder state with no knowledge of where the first frame starts.
    pub fn cold_start(config: &DecoderConfig, lookahead: usize) -> Self {
        let l = config.limits_frame;
        Self::with_prior(DriftDist::uniform(l.m_minus, l.m_plus), config, lookahead, true)
    }

    fn with_prior(alpha0: DriftDist, config: &DecoderConfig, lookahead: usize, cold: bool) -> Self {
        Self {
            cursor: 0,
            alpha0,
            lookahead,
            frame_limits: config.limits_frame,
            cold,
            buffer: Vec::new(),
            buffer_start: 0,
            ended: false,
        }
    }

    pub fn cursor(&self) -> i64 {
        self.cursor
    }

    pub fn alpha0(&self) -> &DriftDist {
        &self.alpha0
    }

    pub fn lookahead(&self) -> usize {
        self.lookahead
    }

    pub fn frame_limits(&self) -> &StateSpaceLimits {
        &self.frame_limits
    }

    fn buffer_end(&self) -> i64 {
        self.buffer_start + self.buffer.len() as i64
    }

    fn fill_to<S: BitSource + ?Sized>(&mut self, source: &mut S, upto: i64) {
        let want = upto - self.buffer_end();
        if want > 0 && !self.ended {
            let got = source.read(want as usize, &mut self.buffer);
            if got < want as usize {
                self.ended = true;
            }
        }
    }

    /// Decode the next frame and advance past it.
    pub fn decode_next_frame<S: BitSource + ?Sized>(
        &mut self,
        source: &mut S,
        code: &TvbCode,
        config: &DecoderConfig,
    ) -> Result<StreamFrame, StreamError> {
        let n = code.n();
        let nb = code.block_len();
        let tau = code.frame_bits() as i64;
        let aug_len = nb + self.lookahead;
        let aug_bits = n * aug_len;
        let p_e = config.limits_frame.p_r;

        let a_support = self.alpha0.support().expect("start prior has mass");
        let (boundary, limits, aug) = if self.cold {
            let l = config.limits_frame;
            let sync = initial_sync(&l);
            let b = BoundaryConditions { alpha0: span_weighted(&sync.alpha0, -1), beta_n: span_weighted(&sync.beta_n, 1) };
            (b, l, aug_len)
        } else {
            let phi = DriftPmf::cached(aug_bits, &config.params, p_e);
            let beta = eof_prior(&self.alpha0, &phi);
            let (b_lo, b_hi) = beta.limits(p_e);
            let lo = b_lo.min(a_support.0);
            let hi = b_hi.max(a_support.1);
            let beta = beta.restricted(lo, hi);
            let beta = beta.normalized().unwrap_or(beta);
            let limits = StateSpaceLimits::new(lo, hi, aug_bits, p_e);
            let b = BoundaryConditions { alpha0: span_weighted(&self.alpha0, -1), beta_n: span_weighted(&beta, 1) };
            (b, limits, aug_len)
        };

        let needed = self.cursor + (n * aug) as i64 + limits.m_plus;
        self.fill_to(source, needed);

        let (boundary, limits, aug, final_frame) = if self.buffer_end() >= needed {
            (boundary, limits, aug, false)
        } else {
            // The stream ends inside this frame's window: its end is known.
            let end = self.buffer_end() - self.cursor - tau;
            let lo = config.limits_frame.m_minus.min(a_support.0);
            let hi = config.limits_frame.m_plus.max(a_support.1);
            if end < lo || end > hi {
                return Err(StreamError::Exhausted { needed, available: self.buffer_end() });
            }
            let limits = StateSpaceLimits::new(lo, hi, tau as usize, p_e);
            let b = BoundaryConditions { alpha0: span_weighted(&self.alpha0, -1), beta_n: DriftDist::point(end) };
            (b, limits, nb, true)
        };

        let augmented = code.cyclic_extension(aug);
        let frame_config = config.clone().with_frame_limits(limits);
        let origin = self.cursor - self.buffer_start;
        debug_assert!(origin >= 0);
        let posterior = decode_at(&augmented, &self.buffer, origin as usize, &boundary, &frame_config)?;

        let lambda = posterior.boundary_posterior(nb);
        let s_hat = lambda.argmax();
        let frame = StreamFrame { posterior, block_len: nb, cursor: self.cursor, end_drift: s_hat, final_frame };

        self.cursor += tau + s_hat;
        let next = frame.posterior.boundary_posterior(nb).shifted(s_hat);
        let (t_lo, t_hi) = next.limits(p_e);
        let trimmed = next.restricted(t_lo, t_hi);
        self.alpha0 = trimmed.normalized().unwrap_or(trimmed);
        self.frame_limits = limits;
        self.cold = false;

        // Keep enough history for the most negative start drift of the next frame.
        let keep_from = self.cursor - aug_bits as i64 - n as i64;
        if keep_from > self.buffer_start {
            let drop = (keep_from - self.buffer_start) as usize;
            self.buffer.drain(..drop.min(self.buffer.len()));
            self.buffer_start += drop as i64;
        }
        Ok(frame)
    }
}
