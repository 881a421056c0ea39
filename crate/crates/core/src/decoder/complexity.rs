use super::DecoderConfig;
use crate::code::TvbCode;

/// Asymptotic operation counts of the decoder for each receiver metric mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityEstimate {
    /// `N n q M_tau M_n^2 M_1`
    pub naive: f64,
    /// `N n q M_tau M_n M_1`
    pub batch: f64,
    /// `N n q M_tau (n + m_n^+)`
    pub lattice: f64,
    /// `N q M_tau (n M_n - ((m_n^-)^2 - m_n^-) / 2)`
    pub corridor: f64,
}

pub fn complexity_estimate(code: &TvbCode, config: &DecoderConfig) -> ComplexityEstimate {
    let nb = code.block_len() as f64;
    let n = code.n() as f64;
    let q = code.q() as f64;
    let m_tau = config.limits_frame.size() as f64;
    let m_n = config.limits_codeword.size() as f64;
    let m_1 = config.limits_bit.size() as f64;
    let lo = config.limits_codeword.m_minus as f64;
    let hi = config.limits_codeword.m_plus as f64;
    let common = nb * q * m_tau;
    ComplexityEstimate {
        naive: common * n * m_n * m_n * m_1,
        batch: common * n * m_n * m_1,
        lattice: common * n * (n + hi),
        corridor: common * (n * m_n - 0.5 * (lo * lo - lo)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::code::{parse_codebooks, REFERENCE_7_8_4};
    use crate::decoder::MetricMode;

    #[test]
    fn ratios() {
        let code = TvbCode::new(parse_codebooks(REFERENCE_7_8_4).unwrap(), vec![0; 50]).unwrap();
        let cfg = DecoderConfig::for_code(&code, ChannelParams::symmetric(0.01).unwrap(), 1e-10, MetricMode::Lattice);
        let e = complexity_estimate(&code, &cfg);
        assert!((e.naive / e.batch - cfg.limits_codeword.size() as f64).abs() < 1e-9);
        let (n, mn) = (7.0, cfg.limits_codeword.size() as f64);
        let (lo, hi) = (cfg.limits_codeword.m_minus as f64, cfg.limits_codeword.m_plus as f64);
        let want = (n * mn - 0.5 * (lo * lo - lo)) / (n * (n + hi));
        assert!((e.corridor / e.lattice - want).abs() < 1e-12);
    }

    #[test]
    fn degenerate_windows() {
        let code = TvbCode::new(parse_codebooks(REFERENCE_7_8_4).unwrap(), vec![1; 5]).unwrap();
        let cfg = DecoderConfig::for_code(&code, ChannelParams::noiseless(), 1e-10, MetricMode::Lattice);
        let e = complexity_estimate(&code, &cfg);
        let base = 5.0 * 7.0 * 8.0;
        assert_eq!((e.naive, e.batch, e.lattice, e.corridor), (base, base, base * 7.0, base));
    }
}
