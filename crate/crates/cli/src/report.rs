//! CSV emission. Each file opens with `#` comment lines recording the
//! configuration, followed by a header row and data rows.

use std::io::{self, Write};

use tvb::channel::ChannelParams;
use tvb::code::{spectrum, Codebook};
use tvb::drift::{allocate_budgets, exceedance, select_limits, DriftPmf, LimitPolicy};

use crate::experiment::{ExperimentConfig, ResultRow, RunMode};

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Write `# key: value` lines.
pub fn write_comments<W: Write>(out: &mut W, entries: &[(&str, String)]) -> io::Result<()> {
    for (k, v) in entries {
        writeln!(out, "# {k}: {v}")?;
    }
    Ok(())
}

fn fmt_f(v: f64) -> String {
    format!("{v:e}")
}

pub fn experiment_comments(cfg: &ExperimentConfig) -> Vec<(&'static str, String)> {
    let code = &cfg.code;
    let schedule: Vec<String> = code.schedule().iter().map(|s| s.to_string()).collect();
    let mut v = vec![
        ("tool", format!("tvb {}", env!("CARGO_PKG_VERSION"))),
        ("code", cfg.code_label.clone()),
        ("n q M N", format!("{} {} {} {}", code.n(), code.q(), code.order(), code.block_len())),
        ("schedule", schedule.join(" ")),
        ("mode", match cfg.mode {
            RunMode::Frame => "frame".to_string(),
            RunMode::Stream => "stream".to_string(),
        }),
        ("frames", cfg.frames.to_string()),
        ("seed", cfg.seed.to_string()),
        ("metric", cfg.metric.name().to_string()),
        ("precision", format!("{:?}", cfg.precision).to_lowercase()),
        ("pe", fmt_f(cfg.p_e)),
    ];
    if cfg.mode == RunMode::Stream {
        v.push(("lookahead", cfg.lookahead.to_string()));
        v.push(("stream frames", cfg.stream_frames.to_string()));
        v.push(("start", if cfg.cold_start { "unknown" } else { "known" }.to_string()));
    }
    v
}

/// Results CSV, one row per sweep point.
pub fn write_results<W: Write>(out: &mut W, cfg: &ExperimentConfig, rows: &[ResultRow]) -> io::Result<()> {
    write_comments(out, &experiment_comments(cfg))?;
    let mut header = vec![
        "p_i", "p_d", "p_s", "seed", "frames", "symbols", "symbol_errors", "ser", "frame_errors", "fer", "failures",
        "ops_estimate",
    ];
    if cfg.mode == RunMode::Stream {
        header.extend(["boundaries", "boundaries_correct", "fidelity"]);
        if cfg.baseline {
            header.extend(["frame_mode_symbol_errors", "frame_mode_ser", "frame_mode_frame_errors", "frame_mode_fer"]);
        }
    }
    if cfg.timing {
        header.push("mean_decode_seconds");
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let t = &r.tally;
        let mut rec = vec![
            fmt_f(r.params.p_i()),
            fmt_f(r.params.p_d()),
            fmt_f(r.params.p_s()),
            r.seed.to_string(),
            t.frames.to_string(),
            t.symbols.to_string(),
            t.symbol_errors.to_string(),
            fmt_f(t.ser()),
            t.frame_errors.to_string(),
            fmt_f(t.fer()),
            t.failures.to_string(),
            fmt_f(r.ops_estimate),
        ];
        if cfg.mode == RunMode::Stream {
            let (n, ok) = r.fidelity.unwrap_or((0, 0));
            rec.extend([n.to_string(), ok.to_string(), fmt_f(r.fidelity_ratio().unwrap_or(0.0))]);
            if let Some(b) = r.baseline {
                rec.extend([b.symbol_errors.to_string(), fmt_f(b.ser()), b.frame_errors.to_string(), fmt_f(b.fer())]);
            }
        }
        if cfg.timing {
            rec.push(fmt_f(r.mean_decode_seconds.unwrap_or(0.0)));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()
}

/// Per-frame fidelity series of a stream experiment.
pub fn write_fidelity<W: Write>(out: &mut W, cfg: &ExperimentConfig, rows: &[ResultRow]) -> io::Result<()> {
    write_comments(out, &experiment_comments(cfg))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p_i", "p_d", "p_s", "frame", "boundaries", "correct", "fidelity"]).map_err(csv_err)?;
    for r in rows {
        for (f, &(n, ok)) in r.fidelity_by_frame.iter().enumerate() {
            let fid = if n == 0 { 0.0 } else { ok as f64 / n as f64 };
            w.write_record([
                fmt_f(r.params.p_i()),
                fmt_f(r.params.p_d()),
                fmt_f(r.params.p_s()),
                f.to_string(),
                n.to_string(),
                ok.to_string(),
                fmt_f(fid),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()
}

/// Drift distribution over `t` bits, within the limits for residual `p_r`.
pub fn write_drift_pmf<W: Write>(out: &mut W, t: usize, params: &ChannelParams, p_r: f64) -> io::Result<()> {
    let pmf = DriftPmf::compute(t, params, p_r);
    let l = pmf.limits();
    write_comments(
        out,
        &[
            ("bits", t.to_string()),
            ("p_i p_d", format!("{} {}", fmt_f(params.p_i()), fmt_f(params.p_d()))),
            ("p_r", fmt_f(p_r)),
            ("limits", format!("{} {}", l.m_minus, l.m_plus)),
            ("states", l.size().to_string()),
            ("excluded probability", fmt_f(exceedance(t, params, l.m_minus, l.m_plus))),
        ],
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "probability", "log_probability"]).map_err(csv_err)?;
    for (m, p, lp) in pmf.iter() {
        w.write_record([m.to_string(), fmt_f(p), fmt_f(lp)]).map_err(csv_err)?;
    }
    w.flush()
}

/// One audited summation window.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub params: ChannelParams,
    pub scope: &'static str,
    pub bits: usize,
    pub p_r: f64,
    pub m_minus: i64,
    pub m_plus: i64,
    pub exceedance: f64,
}

impl AuditRow {
    pub fn ok(&self) -> bool {
        self.exceedance < self.p_r
    }
}

/// State-space limits at frame, codeword and bit scope for each sweep point.
pub fn audit_limits(n: usize, block_len: usize, sweep: &[ChannelParams], p_e: f64) -> Vec<AuditRow> {
    let tau = n * block_len;
    let budgets = allocate_budgets(&LimitPolicy { p_e, block_len, frame_bits: tau });
    let mut rows = Vec::new();
    for params in sweep {
        for (scope, bits, p_r) in [("frame", tau, budgets.frame), ("codeword", n, budgets.codeword), ("bit", 1, budgets.bit)]
        {
            let l = select_limits(bits, params, p_r);
            rows.push(AuditRow {
                params: *params,
                scope,
                bits,
                p_r,
                m_minus: l.m_minus,
                m_plus: l.m_plus,
                exceedance: exceedance(bits, params, l.m_minus, l.m_plus),
            });
        }
    }
    rows
}

pub fn write_audit<W: Write>(out: &mut W, n: usize, block_len: usize, p_e: f64, rows: &[AuditRow]) -> io::Result<()> {
    write_comments(out, &[("n", n.to_string()), ("N", block_len.to_string()), ("pe", fmt_f(p_e))])?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p_i", "p_d", "scope", "bits", "p_r", "m_minus", "m_plus", "states", "exceedance", "ok"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            fmt_f(r.params.p_i()),
            fmt_f(r.params.p_d()),
            r.scope.to_string(),
            r.bits.to_string(),
            fmt_f(r.p_r),
            r.m_minus.to_string(),
            r.m_plus.to_string(),
            (r.m_plus - r.m_minus + 1).to_string(),
            fmt_f(r.exceedance),
            r.ok().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

/// Levenshtein distance spectrum of each book.
pub fn write_spectrum<W: Write>(out: &mut W, books: &[Codebook]) -> io::Result<()> {
    let spectra: Vec<_> = books.iter().map(spectrum).collect();
    let summary: Vec<String> = spectra
        .iter()
        .map(|s| s.d_lmin().map_or("-".to_string(), |d| d.to_string()))
        .collect();
    write_comments(out, &[("books", books.len().to_string()), ("d_lmin", summary.join(" "))])?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["book", "distance", "multiplicity"]).map_err(csv_err)?;
    for (b, s) in spectra.iter().enumerate() {
        for (d, c) in s.counts() {
            w.write_record([b.to_string(), d.to_string(), c.to_string()]).map_err(csv_err)?;
        }
    }
    w.flush()
}
