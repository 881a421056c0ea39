//! Monte Carlo experiments over a sweep of channel conditions.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use tvb::channel::{transmit, transmit_traced, Bit, ChannelParams};
use tvb::code::TvbCode;
use tvb::decoder::{complexity_estimate, decode_known, DecoderConfig, MetricMode, Precision};
use tvb::rng::{stream_rng, trial_stream, SimRng};
use tvb::stream::{SliceSource, StreamState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Every frame decoded with known start and end.
    Frame,
    /// Frames decoded in sequence from a continuous stream.
    Stream,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub code: TvbCode,
    /// Free-form description of where the code came from, echoed in output.
    pub code_label: String,
    pub sweep: Vec<ChannelParams>,
    /// Frames per sweep point.
    pub frames: usize,
    pub seed: u64,
    pub mode: RunMode,
    pub lookahead: usize,
    pub p_e: f64,
    pub metric: MetricMode,
    pub precision: Precision,
    /// Frames per simulated stream in stream mode.
    pub stream_frames: usize,
    /// Start stream decoding without knowing where the first frame starts.
    pub cold_start: bool,
    /// In stream mode, also decode each frame with known boundaries.
    pub baseline: bool,
    /// Record wall-clock decode time (makes output non-reproducible).
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(code: TvbCode, sweep: Vec<ChannelParams>, frames: usize, seed: u64) -> Self {
        Self {
            code,
            code_label: String::from("inline"),
            sweep,
            frames,
            seed,
            mode: RunMode::Frame,
            lookahead: 0,
            p_e: 1e-10,
            metric: MetricMode::LatticeCorridor,
            precision: Precision::Double,
            stream_frames: 10,
            cold_start: false,
            baseline: false,
            timing: false,
        }
    }
}

/// Error counts of one decoding method.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub frames: u64,
    pub symbols: u64,
    pub symbol_errors: u64,
    pub frame_errors: u64,
    /// Frames the decoder could not process (drift outside limits).
    pub failures: u64,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.frames += o.frames;
        self.symbols += o.symbols;
        self.symbol_errors += o.symbol_errors;
        self.frame_errors += o.frame_errors;
        self.failures += o.failures;
    }

    fn record(&mut self, sent: &[usize], decided: Option<&[usize]>) {
        let errors = match decided {
            Some(d) => sent.iter().zip(d).filter(|(a, b)| a != b).count() as u64,
            None => {
                self.failures += 1;
                sent.len() as u64
            }
        };
        self.frames += 1;
        self.symbols += sent.len() as u64;
        self.symbol_errors += errors;
        self.frame_errors += (errors > 0) as u64;
    }

    pub fn ser(&self) -> f64 {
        ratio(self.symbol_errors, self.symbols)
    }

    pub fn fer(&self) -> f64 {
        ratio(self.frame_errors, self.frames)
    }

    pub fn failure_rate(&self) -> f64 {
        ratio(self.failures, self.frames)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Outcome at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub params: ChannelParams,
    pub seed: u64,
    pub tally: Tally,
    /// Known-boundary decoding of the same stream realizations.
    pub baseline: Option<Tally>,
    /// Codeword boundaries scored, and how many had the correct drift estimate.
    pub fidelity: Option<(u64, u64)>,
    /// Fidelity counts by frame index within the stream.
    pub fidelity_by_frame: Vec<(u64, u64)>,
    pub ops_estimate: f64,
    pub mean_decode_seconds: Option<f64>,
}

impl ResultRow {
    pub fn fidelity_ratio(&self) -> Option<f64> {
        self.fidelity.map(|(n, ok)| ratio(ok, n))
    }
}

#[derive(Default)]
struct TrialOutcome {
    tally: Tally,
    baseline: Tally,
    fidelity: Vec<(u64, u64)>,
    seconds: f64,
}

impl TrialOutcome {
    fn merge(mut self, o: TrialOutcome) -> TrialOutcome {
        self.tally.add(&o.tally);
        self.baseline.add(&o.baseline);
        if self.fidelity.len() < o.fidelity.len() {
            self.fidelity.resize(o.fidelity.len(), (0, 0));
        }
        for (a, b) in self.fidelity.iter_mut().zip(&o.fidelity) {
            a.0 += b.0;
            a.1 += b.1;
        }
        self.seconds += o.seconds;
        self
    }
}

fn random_message(code: &TvbCode, rng: &mut SimRng) -> Vec<usize> {
    (0..code.block_len()).map(|_| rng.gen_range(0..code.q())).collect()
}

fn decoder_config(cfg: &ExperimentConfig, params: ChannelParams) -> DecoderConfig {
    DecoderConfig::for_code(&cfg.code, params, cfg.p_e, cfg.metric).with_precision(cfg.precision)
}

fn ops_estimate(cfg: &ExperimentConfig, dc: &DecoderConfig) -> f64 {
    let e = complexity_estimate(&cfg.code, dc);
    match cfg.metric {
        MetricMode::TrellisNaive => e.naive,
        MetricMode::TrellisBatch => e.batch,
        MetricMode::Lattice => e.lattice,
        MetricMode::LatticeCorridor => e.corridor,
    }
}

/// Run every sweep point. Results depend only on the configuration, never on
/// the number of worker threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Vec<ResultRow> {
    match cfg.mode {
        RunMode::Frame => run_frame_experiment(cfg),
        RunMode::Stream => run_stream_experiment(cfg),
    }
}

/// Known-boundary decoding of independent frames.
pub fn run_frame_experiment(cfg: &ExperimentConfig) -> Vec<ResultRow> {
    cfg.sweep
        .iter()
        .enumerate()
        .map(|(point, &params)| {
            let dc = decoder_config(cfg, params);
            let outcome = (0..cfg.frames)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = stream_rng(cfg.seed, trial_stream(point, trial));
                    let msg = random_message(&cfg.code, &mut rng);
                    let x = cfg.code.encode(&msg).expect("message matches code");
                    let y = transmit(&x, &params, &mut rng);
                    let t0 = cfg.timing.then(Instant::now);
                    let post = decode_known(&cfg.code, &y, &dc);
                    let mut out = TrialOutcome::default();
                    out.seconds = t0.map_or(0.0, |t| t.elapsed().as_secs_f64());
                    let decided = post.ok().map(|p| p.hard_decisions());
                    out.tally.record(&msg, decided.as_deref());
                    out
                })
                .reduce(TrialOutcome::default, TrialOutcome::merge);
            ResultRow {
                params,
                seed: cfg.seed,
                tally: outcome.tally,
                baseline: None,
                fidelity: None,
                fidelity_by_frame: Vec::new(),
                ops_estimate: ops_estimate(cfg, &dc),
                mean_decode_seconds: cfg.timing.then(|| outcome.seconds / cfg.frames.max(1) as f64),
            }
        })
        .collect()
}

/// Sequential decoding of simulated streams of `stream_frames` frames each.
pub fn run_stream_experiment(cfg: &ExperimentConfig) -> Vec<ResultRow> {
    let per_stream = cfg.stream_frames.max(1);
    let streams = cfg.frames.div_ceil(per_stream);
    cfg.sweep
        .iter()
        .enumerate()
        .map(|(point, &params)| {
            let dc = decoder_config(cfg, params);
            let outcome = (0..streams)
                .into_par_iter()
                .map(|trial| {
                    let frames = per_stream.min(cfg.frames - trial * per_stream);
                    let mut rng = stream_rng(cfg.seed, trial_stream(point, trial));
                    stream_trial(cfg, &dc, frames, &mut rng)
                })
                .reduce(TrialOutcome::default, TrialOutcome::merge);
            let fid = outcome.fidelity.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            ResultRow {
                params,
                seed: cfg.seed,
                tally: outcome.tally,
                baseline: cfg.baseline.then_some(outcome.baseline),
                fidelity: Some(fid),
                fidelity_by_frame: outcome.fidelity,
                ops_estimate: ops_estimate(cfg, &dc),
                mean_decode_seconds: cfg.timing.then(|| outcome.seconds / cfg.frames.max(1) as f64),
            }
        })
        .collect()
}

fn stream_trial(cfg: &ExperimentConfig, dc: &DecoderConfig, frames: usize, rng: &mut SimRng) -> TrialOutcome {
    let code = &cfg.code;
    let (n, nb, tau) = (code.n(), code.block_len(), code.frame_bits());
    // Trailing frames supply the look-ahead and drift margin of the last decoded frame.
    let extra = cfg.lookahead.div_ceil(nb.max(1)) + 1;
    let messages: Vec<Vec<usize>> = (0..frames + extra).map(|_| random_message(code, rng)).collect();
    let bits: Vec<Bit> = messages.iter().flat_map(|m| code.encode(m).expect("message matches code")).collect();
    let (received, trace) = transmit_traced(&bits, &dc.params, rng);
    let positions = trace.received_positions();

    let mut out = TrialOutcome { fidelity: vec![(0, 0); frames], ..Default::default() };
    let mut state = if cfg.cold_start {
        StreamState::cold_start(dc, cfg.lookahead)
    } else {
        StreamState::new(dc, cfg.lookahead)
    };
    let mut source = SliceSource::new(&received);
    let t0 = cfg.timing.then(Instant::now);
    for (f, msg) in messages.iter().take(frames).enumerate() {
        match state.decode_next_frame(&mut source, code, dc) {
            Ok(frame) => {
                out.tally.record(msg, Some(&frame.hard_decisions()));
                let slot = &mut out.fidelity[f];
                for i in 1..=nb {
                    let truth = positions[f * tau + n * i] as i64;
                    slot.0 += 1;
                    slot.1 += (frame.boundary_position(n, i) == truth) as u64;
                }
            }
            Err(_) => {
                // The receiver has lost its state; every remaining frame fails.
                for (g, m) in messages.iter().enumerate().take(frames).skip(f) {
                    out.tally.record(m, None);
                    out.fidelity[g].0 += nb as u64;
                }
                break;
            }
        }
    }
    out.seconds = t0.map_or(0.0, |t| t.elapsed().as_secs_f64());
    if cfg.baseline {
        for (f, msg) in messages.iter().take(frames).enumerate() {
            let y = &received[positions[f * tau]..positions[(f + 1) * tau]];
            let decided = decode_known(code, y, dc).ok().map(|p| p.hard_decisions());
            out.baseline.record(msg, decided.as_deref());
        }
    }
    out
}
