//! Binary substitution, insertion and deletion (BSID) channel.
//!
//! At each time step one input bit is presented to the channel. With
//! probability `p_i` a uniformly random bit is emitted and the channel stays at
//! the same time step; with probability `p_d` the input bit is dropped; with
//! probability `p_t = 1 - p_i - p_d` the input bit is emitted, flipped with
//! probability `p_s`.
//!
//! The drift `S_t` is the number of received bits minus the number of
//! transmitted bits before the events of time `t` are considered.

use rand::Rng;
use thiserror::Error;

/// A single binary symbol, always `0` or `1`.
pub type Bit = u8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} = {value} is outside its valid range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("p_i + p_d = {0} must be strictly below 1")]
    NoTransmission(f64),
}

/// BSID channel parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    p_i: f64,
    p_d: f64,
    p_s: f64,
}

impl ChannelParams {
    pub fn new(p_i: f64, p_d: f64, p_s: f64) -> Result<Self, ParamError> {
        let check = |name, value: f64, upper_inclusive: bool| {
            let ok = value >= 0.0 && if upper_inclusive { value <= 1.0 } else { value < 1.0 };
            if ok {
                Ok(())
            } else {
                Err(ParamError::OutOfRange { name, value })
            }
        };
        check("p_i", p_i, false)?;
        check("p_d", p_d, false)?;
        check("p_s", p_s, true)?;
        if p_i + p_d >= 1.0 {
            return Err(ParamError::NoTransmission(p_i + p_d));
        }
        Ok(Self { p_i, p_d, p_s })
    }

    /// Channel with equal insertion and deletion probability `p` and no substitutions.
    pub fn symmetric(p: f64) -> Result<Self, ParamError> {
        Self::new(p, p, 0.0)
    }

    pub fn noiseless() -> Self {
        Self { p_i: 0.0, p_d: 0.0, p_s: 0.0 }
    }

    pub fn p_i(&self) -> f64 {
        self.p_i
    }

    pub fn p_d(&self) -> f64 {
        self.p_d
    }

    pub fn p_s(&self) -> f64 {
        self.p_s
    }

    pub fn p_t(&self) -> f64 {
        1.0 - self.p_i - self.p_d
    }

    /// True when neither insertions nor deletions can occur.
    pub fn is_synchronous(&self) -> bool {
        self.p_i == 0.0 && self.p_d == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelEvent {
    /// A random bit was emitted; the channel stays on the same input bit.
    Insert(Bit),
    /// The current input bit was dropped.
    Delete,
    /// The current input bit was emitted, possibly flipped.
    Transmit { substituted: bool },
}

/// Every event drawn while passing one input sequence through the channel.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChannelEventTrace {
    events: Vec<ChannelEvent>,
}

impl ChannelEventTrace {
    pub fn events(&self) -> &[ChannelEvent] {
        &self.events
    }

    /// Number of input bits covered by the trace.
    pub fn input_len(&self) -> usize {
        self.events
            .iter()
            .filter(|e| !matches!(e, ChannelEvent::Insert(_)))
            .count()
    }

    /// Number of output bits emitted before the events of each input bit.
    ///
    /// Entry `t` is the received position at which input bit `t` starts, for
    /// `t` in `0..=T`; the last entry is the total output length.
    pub fn received_positions(&self) -> Vec<usize> {
        let mut positions = Vec::with_capacity(self.events.len() + 1);
        let mut emitted = 0usize;
        // Insertions are charged to the following input bit.
        let mut pending = 0usize;
        positions.push(0);
        for event in &self.events {
            match event {
                ChannelEvent::Insert(_) => pending += 1,
                ChannelEvent::Delete => {
                    emitted += pending;
                    pending = 0;
                    positions.push(emitted);
                }
                ChannelEvent::Transmit { .. } => {
                    emitted += pending + 1;
                    pending = 0;
                    positions.push(emitted);
                }
            }
        }
        positions
    }

    /// Drift `S_t` for `t` in `0..=T`.
    pub fn drift_trajectory(&self) -> Vec<i64> {
        self.received_positions()
            .into_iter()
            .enumerate()
            .map(|(t, pos)| pos as i64 - t as i64)
            .collect()
    }
}

fn run_channel<R: Rng + ?Sized>(
    input: &[Bit],
    params: &ChannelParams,
    rng: &mut R,
    mut trace: Option<&mut Vec<ChannelEvent>>,
) -> Vec<Bit> {
    let mut output = Vec::with_capacity(input.len() + input.len() / 8 + 4);
    let insert_cut = params.p_i;
    let delete_cut = params.p_i + params.p_d;
    let mut t = 0;
    while t < input.len() {
        let u: f64 = rng.gen();
        if u < insert_cut {
            let bit = rng.gen::<bool>() as Bit;
            output.push(bit);
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(ChannelEvent::Insert(bit));
            }
        } else if u < delete_cut {
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(ChannelEvent::Delete);
            }
            t += 1;
        } else {
            let substituted = params.p_s > 0.0 && rng.gen::<f64>() < params.p_s;
            output.push(input[t] ^ substituted as Bit);
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(ChannelEvent::Transmit { substituted });
            }
            t += 1;
        }
    }
    output
}

/// Pass `input` through the channel.
pub fn transmit<R: Rng + ?Sized>(input: &[Bit], params: &ChannelParams, rng: &mut R) -> Vec<Bit> {
    run_channel(input, params, rng, None)
}

/// Like [`transmit`], also recording every channel event.
///
/// For the same RNG state the output is identical to [`transmit`].
pub fn transmit_traced<R: Rng + ?Sized>(
    input: &[Bit],
    params: &ChannelParams,
    rng: &mut R,
) -> (Vec<Bit>, ChannelEventTrace) {
    let mut events = Vec::with_capacity(input.len() + input.len() / 8 + 4);
    let output = run_channel(input, params, rng, Some(&mut events));
    (output, ChannelEventTrace { events })
}

/// Probability that input bit `x` produces exactly the received bits `y`.
///
/// `y` may be empty (deletion); otherwise all but the last received bit are
/// insertions and the last is either the transmitted bit or a final insertion
/// followed by a deletion.
pub fn q_bit(y: &[Bit], x: Bit, params: &ChannelParams) -> f64 {
    match y.last() {
        None => params.p_d,
        Some(&last) => {
            let mu = y.len() as i32;
            let tx = if last == x { 1.0 - params.p_s } else { params.p_s };
            (0.5 * params.p_i).powi(mu - 1) * (params.p_t() * tx + 0.5 * params.p_i * params.p_d)
        }
    }
}

/// Probability of a single transmission event producing `y` from `x`.
pub fn q_dot(y: Bit, x: Bit, params: &ChannelParams) -> f64 {
    if y == x {
        params.p_t() * (1.0 - params.p_s)
    } else {
        params.p_t() * params.p_s
    }
}
