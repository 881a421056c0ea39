//! Exact distribution of channel drift and selection of state-space limits.
//!
//! After `T` input bits the drift `S_T` has distribution
//!
//! ```text
//! Phi_T(m) = sum_{j=j0}^{T} delta_j,   j0 = max(-m, 0)
//! delta_j  = p_t^T p_i^m C(T, j) C(T+m+j-1, m+j) (p_i p_d / p_t)^j
//! ```
//!
//! where `j` counts deletions. For realistic frame sizes the individual terms
//! overflow and underflow double precision by thousands of decades, so every
//! quantity here is carried in the natural-log domain and accumulated with a
//! log-sum-exp step.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::gamma::ln_gamma;

use crate::channel::ChannelParams;

/// `ln(exp(a) + exp(b))` without leaving the log domain.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a >= b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// `ln C(a, k)` by the multiplicative formula.
fn ln_binomial_product(a: u64, k: u64) -> f64 {
    debug_assert!(k <= a);
    let k = k.min(a - k);
    let base = (a - k) as f64;
    (1..=k).map(|i| ((base + i as f64) / i as f64).ln()).sum()
}

/// `ln C(a, k)` through log-gamma.
fn ln_binomial_gamma(a: u64, k: u64) -> f64 {
    debug_assert!(k <= a);
    ln_gamma(a as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((a - k) as f64 + 1.0)
}

/// Bookkeeping from one evaluation of the `delta_j` sum.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftTerms {
    pub log_phi: f64,
    /// First summation index `j0`.
    pub first_j: usize,
    pub log_first_delta: f64,
    /// Smallest `ln(delta_j / delta_{j-1})` and the `j` where it occurs.
    pub min_log_multiplier: Option<(usize, f64)>,
    /// Smallest `ln delta_j` and the `j` where it occurs.
    pub min_log_delta: (usize, f64),
}

/// Evaluate the general (`p_i > 0`, `p_d > 0`) drift sum term by term.
///
/// Returns `None` for degenerate parameters or drifts outside the support.
pub fn drift_terms(t: usize, m: i64, params: &ChannelParams) -> Option<DriftTerms> {
    let (p_i, p_d, p_t) = (params.p_i(), params.p_d(), params.p_t());
    if p_i == 0.0 || p_d == 0.0 || t == 0 || m < -(t as i64) {
        return None;
    }
    let tt = t as i64;
    let j0 = (-m).max(0);
    let log_ratio = (p_i * p_d / p_t).ln();

    let first = t as f64 * p_t.ln()
        + m as f64 * p_i.ln()
        + ln_binomial_product(t as u64, j0 as u64)
        + ln_binomial_product((tt + m + j0 - 1) as u64, (m + j0) as u64)
        + j0 as f64 * log_ratio;

    let mut log_delta = first;
    let mut acc = first;
    let mut min_mult: Option<(usize, f64)> = None;
    let mut min_delta = (j0 as usize, first);
    for j in (j0 + 1)..=tt {
        let mult = log_ratio + ((tt + m + j - 1) as f64).ln() - ((m + j) as f64).ln()
            + ((tt - j + 1) as f64).ln()
            - (j as f64).ln();
        log_delta += mult;
        acc = log_add(acc, log_delta);
        if min_mult.map_or(true, |(_, v)| mult < v) {
            min_mult = Some((j as usize, mult));
        }
        if log_delta < min_delta.1 {
            min_delta = (j as usize, log_delta);
        }
    }
    Some(DriftTerms {
        log_phi: acc,
        first_j: j0 as usize,
        log_first_delta: first,
        min_log_multiplier: min_mult,
        min_log_delta: min_delta,
    })
}

/// `ln Phi_T(m)` when `p_i` or `p_d` is zero.
///
/// # Panics
///
/// Panics if both `p_i` and `p_d` are positive.
pub fn log_drift_pmf_degenerate(t: usize, m: i64, params: &ChannelParams) -> f64 {
    let (p_i, p_d, p_t) = (params.p_i(), params.p_d(), params.p_t());
    assert!(
        p_i == 0.0 || p_d == 0.0,
        "degenerate drift formula needs p_i = 0 or p_d = 0"
    );
    let tt = t as i64;
    if p_i == 0.0 && p_d == 0.0 {
        return if m == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p_i == 0.0 {
        // Only deletions: choose which -m of the T bits were dropped.
        if m > 0 || m < -tt {
            return f64::NEG_INFINITY;
        }
        let k = (-m) as u64;
        let mut v = ln_binomial_gamma(t as u64, k) + (tt + m) as f64 * p_t.ln();
        if k > 0 {
            v += k as f64 * p_d.ln();
        }
        return v;
    }
    // Only insertions: distribute m insertions over T slots.
    if m < 0 {
        return f64::NEG_INFINITY;
    }
    if t == 0 {
        return if m == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let mut v = ln_binomial_gamma((tt + m - 1) as u64, m as u64) + t as f64 * p_t.ln();
    if m > 0 {
        v += m as f64 * p_i.ln();
    }
    v
}

pub fn drift_pmf_degenerate(t: usize, m: i64, params: &ChannelParams) -> f64 {
    log_drift_pmf_degenerate(t, m, params).exp()
}

/// `ln Phi_T(m)`; negative infinity outside the support.
pub fn log_drift_pmf_at(t: usize, m: i64, params: &ChannelParams) -> f64 {
    if params.p_i() == 0.0 || params.p_d() == 0.0 {
        return log_drift_pmf_degenerate(t, m, params);
    }
    if t == 0 {
        return if m == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    drift_terms(t, m, params).map_or(f64::NEG_INFINITY, |d| d.log_phi)
}

/// Probability that the drift after `t` bits equals `m`.
pub fn drift_pmf_at(t: usize, m: i64, params: &ChannelParams) -> f64 {
    log_drift_pmf_at(t, m, params).exp()
}

/// A unimodal probability mass function over integer drifts, as seen by the
/// limit-selection rule.
trait DriftMass {
    fn prob(&mut self, m: i64) -> f64;
    /// Smallest drift with possibly nonzero mass.
    fn floor(&self) -> i64;
    fn mode(&mut self) -> i64;
    /// Mass outside `[lo, hi]`.
    fn exceedance(&mut self, lo: i64, hi: i64) -> f64;
}

/// Memoised evaluator of `Phi_T`.
struct PhiEval<'a> {
    t: usize,
    params: &'a ChannelParams,
    memo: HashMap<i64, f64>,
}

impl<'a> PhiEval<'a> {
    fn new(t: usize, params: &'a ChannelParams) -> Self {
        Self { t, params, memo: HashMap::new() }
    }
}

// Relative size below which a tail remainder is ignored.
const TAIL_EPS: f64 = 1e-17;

impl DriftMass for PhiEval<'_> {
    fn prob(&mut self, m: i64) -> f64 {
        if m < self.floor() {
            return 0.0;
        }
        let (t, params) = (self.t, self.params);
        *self.memo.entry(m).or_insert_with(|| drift_pmf_at(t, m, params))
    }

    fn floor(&self) -> i64 {
        -(self.t as i64)
    }

    fn mode(&mut self) -> i64 {
        let p = self.params;
        let mean = self.t as f64 * (p.p_i() - p.p_d()) / (1.0 - p.p_i());
        let mut m = (mean.round() as i64).max(self.floor());
        while self.prob(m + 1) > self.prob(m) {
            m += 1;
        }
        while m > self.floor() && self.prob(m - 1) > self.prob(m) {
            m -= 1;
        }
        m
    }

    fn exceedance(&mut self, lo: i64, hi: i64) -> f64 {
        let floor = self.floor();
        // Below the window: terms shrink monotonically, so the remainder is at
        // most (remaining count) x (current term).
        let mut lower = 0.0;
        let mut m = lo - 1;
        while m >= floor {
            let term = self.prob(m);
            lower += term;
            let remaining = (m - floor) as f64;
            if term == 0.0 || term * remaining <= TAIL_EPS * lower {
                break;
            }
            m -= 1;
        }
        // Above the window the ratio of successive terms falls towards p_i, so
        // a geometric bound on the remainder is used once it drops below 1.
        let mut upper = 0.0;
        let mut prev = 0.0;
        let mut m = hi + 1;
        loop {
            let term = self.prob(m);
            upper += term;
            if term == 0.0 {
                break;
            }
            if prev > 0.0 {
                let r = term / prev;
                if r < 1.0 && term * r / (1.0 - r) <= TAIL_EPS * upper {
                    break;
                }
            }
            prev = term;
            m += 1;
        }
        lower + upper
    }
}

/// Greedy window: first estimate from the `p_r / 2` cut on each side of the
/// mode, then widen by one towards the larger neighbouring mass until the
/// excluded mass drops below `p_r`. Ties widen the lower side.
fn greedy_window<D: DriftMass>(mass: &mut D, p_r: f64) -> (i64, i64) {
    let mode = mass.mode();
    let floor = mass.floor();
    let half = p_r / 2.0;
    let mut lo = mode;
    while lo > floor && mass.prob(lo - 1) >= half {
        lo -= 1;
    }
    let mut hi = mode;
    while mass.prob(hi + 1) >= half {
        hi += 1;
    }
    while mass.exceedance(lo, hi) >= p_r {
        let below = if lo > floor { mass.prob(lo - 1) } else { 0.0 };
        let above = mass.prob(hi + 1);
        if above == 0.0 && below == 0.0 {
            // Nothing left to add; the remaining excess is rounding.
            break;
        }
        if above > below {
            hi += 1;
        } else {
            lo -= 1;
        }
    }
    (lo, hi)
}

/// Drift window `[m_minus, m_plus]` over `t` bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpaceLimits {
    pub m_minus: i64,
    pub m_plus: i64,
    pub t: usize,
    pub p_r: f64,
}

impl StateSpaceLimits {
    pub fn new(m_minus: i64, m_plus: i64, t: usize, p_r: f64) -> Self {
        assert!(m_minus <= m_plus, "empty drift window");
        Self { m_minus, m_plus, t, p_r }
    }

    /// Number of states `M_T`.
    pub fn size(&self) -> usize {
        (self.m_plus - self.m_minus + 1) as usize
    }

    pub fn contains(&self, m: i64) -> bool {
        (self.m_minus..=self.m_plus).contains(&m)
    }

    pub fn range(&self) -> std::ops::RangeInclusive<i64> {
        self.m_minus..=self.m_plus
    }
}

/// Smallest greedy window whose excluded drift mass after `t` bits is below `p_r`.
pub fn select_limits(t: usize, params: &ChannelParams, p_r: f64) -> StateSpaceLimits {
    assert!(p_r > 0.0 && p_r < 1.0, "residual probability must be in (0, 1)");
    let mut eval = PhiEval::new(t, params);
    let (lo, hi) = greedy_window(&mut eval, p_r);
    StateSpaceLimits::new(lo, hi, t, p_r)
}

/// Probability that the drift after `t` bits falls outside `[lo, hi]`.
///
/// Computed by summing both tails, which keeps full relative precision even
/// when the result is far below machine epsilon.
pub fn exceedance(t: usize, params: &ChannelParams, lo: i64, hi: i64) -> f64 {
    PhiEval::new(t, params).exceedance(lo, hi)
}

/// Event-miss budget for a whole decoder run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitPolicy {
    pub p_e: f64,
    /// Block length `N` in symbols.
    pub block_len: usize,
    /// Frame length `tau` in bits.
    pub frame_bits: usize,
}

/// Residual probabilities for the frame, codeword and single-bit windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budgets {
    pub frame: f64,
    pub codeword: f64,
    pub bit: f64,
}

/// Split the frame budget so that `N` codeword windows (or `tau` bit windows)
/// together miss an event with probability at most `p_e`.
pub fn allocate_budgets(policy: &LimitPolicy) -> Budgets {
    assert!(policy.p_e > 0.0 && policy.p_e < 1.0, "p_e must be in (0, 1)");
    // 1 - (1 - p_e)^(1/k), evaluated without cancellation.
    let share = |k: usize| -((-policy.p_e).ln_1p() / k.max(1) as f64).exp_m1();
    Budgets {
        frame: policy.p_e,
        codeword: share(policy.block_len),
        bit: share(policy.frame_bits),
    }
}

/// Dense probability distribution over a contiguous range of drifts.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDist {
    lo: i64,
    probs: Vec<f64>,
}

impl DriftDist {
    pub fn new(lo: i64, probs: Vec<f64>) -> Self {
        assert!(!probs.is_empty(), "drift distribution needs at least one state");
        Self { lo, probs }
    }

    pub fn point(m: i64) -> Self {
        Self { lo: m, probs: vec![1.0] }
    }

    pub fn uniform(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi);
        let k = (hi - lo + 1) as usize;
        Self { lo, probs: vec![1.0 / k as f64; k] }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.probs.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, m: i64) -> f64 {
        if m < self.lo {
            return 0.0;
        }
        self.probs.get((m - self.lo) as usize).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(k, &p)| (self.lo + k as i64, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Rescaled to unit mass; `None` if the mass is zero.
    pub fn normalized(&self) -> Option<Self> {
        let s = self.total();
        (s > 0.0 && s.is_finite()).then(|| Self {
            lo: self.lo,
            probs: self.probs.iter().map(|p| p / s).collect(),
        })
    }

    /// Most likely drift; the smallest one on ties.
    pub fn argmax(&self) -> i64 {
        let mut best = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = k;
            }
        }
        self.lo + best as i64
    }

    pub fn mean(&self) -> f64 {
        let s = self.total();
        self.iter().map(|(m, p)| m as f64 * p).sum::<f64>() / s
    }

    pub fn variance(&self) -> f64 {
        let s = self.total();
        let mu = self.mean();
        self.iter().map(|(m, p)| (m as f64 - mu).powi(2) * p).sum::<f64>() / s
    }

    /// Distribution of `m - by`.
    pub fn shifted(&self, by: i64) -> Self {
        Self { lo: self.lo - by, probs: self.probs.clone() }
    }

    /// Restriction to `[lo, hi]`, with zeros where the window extends past the support.
    pub fn restricted(&self, lo: i64, hi: i64) -> Self {
        let probs = (lo..=hi).map(|m| self.get(m)).collect();
        Self { lo, probs }
    }

    /// Greedy window of this distribution with excluded mass below `p_r`.
    pub fn limits(&self, p_r: f64) -> (i64, i64) {
        let mut view = DistView { dist: self };
        greedy_window(&mut view, p_r)
    }

    /// Smallest contiguous range holding all nonzero mass.
    pub fn support(&self) -> Option<(i64, i64)> {
        let first = self.probs.iter().position(|&p| p > 0.0)?;
        let last = self.probs.iter().rposition(|&p| p > 0.0)?;
        Some((self.lo + first as i64, self.lo + last as i64))
    }
}

struct DistView<'a> {
    dist: &'a DriftDist,
}

impl DriftMass for DistView<'_> {
    fn prob(&mut self, m: i64) -> f64 {
        self.dist.get(m) / self.dist.total()
    }

    fn floor(&self) -> i64 {
        self.dist.lo
    }

    fn mode(&mut self) -> i64 {
        self.dist.argmax()
    }

    fn exceedance(&mut self, lo: i64, hi: i64) -> f64 {
        let s = self.dist.total();
        self.dist.iter().filter(|(m, _)| *m < lo || *m > hi).map(|(_, p)| p).sum::<f64>() / s
    }
}

/// `Phi_T` materialised over a window that leaves out less than `residual`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftPmf {
    t: usize,
    params: ChannelParams,
    limits: StateSpaceLimits,
    log_values: Vec<f64>,
}

type CacheKey = (usize, u64, u64, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<DriftPmf>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<DriftPmf>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

impl DriftPmf {
    pub fn compute(t: usize, params: &ChannelParams, residual: f64) -> Self {
        let limits = select_limits(t, params, residual);
        let log_values = limits.range().map(|m| log_drift_pmf_at(t, m, params)).collect();
        Self { t, params: *params, limits, log_values }
    }

    /// Shared copy keyed by the exact parameter bits.
    ///
    /// Substitution probability does not affect drift and is not part of the key.
    pub fn cached(t: usize, params: &ChannelParams, residual: f64) -> Arc<Self> {
        let key = (t, params.p_i().to_bits(), params.p_d().to_bits(), residual.to_bits());
        if let Some(hit) = cache().lock().unwrap().get(&key) {
            return Arc::clone(hit);
        }
        // Computed outside the lock; concurrent misses produce identical values.
        let pmf = Arc::new(Self::compute(t, params, residual));
        Arc::clone(cache().lock().unwrap().entry(key).or_insert(pmf))
    }

    pub fn bits(&self) -> usize {
        self.t
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn limits(&self) -> &StateSpaceLimits {
        &self.limits
    }

    pub fn get(&self, m: i64) -> f64 {
        self.log_get(m).exp()
    }

    pub fn log_get(&self, m: i64) -> f64 {
        if self.limits.contains(m) {
            self.log_values[(m - self.limits.m_minus) as usize]
        } else {
            log_drift_pmf_at(self.t, m, &self.params)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64, f64)> + '_ {
        self.limits
            .range()
            .zip(&self.log_values)
            .map(|(m, &l)| (m, l.exp(), l))
    }

    /// The materialised window as a dense distribution (not renormalised).
    pub fn to_dist(&self) -> DriftDist {
        DriftDist::new(self.limits.m_minus, self.log_values.iter().map(|l| l.exp()).collect())
    }
}
