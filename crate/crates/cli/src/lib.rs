//! Command-line harness for TVB code experiments.

pub mod experiment;
pub mod report;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use tvb::channel::{Bit, ChannelParams};
use tvb::code::{
    anneal_design, from_marker_code, from_sparse_marker, parse_codebooks, parse_schedule, sparse_codebook, spectrum,
    write_codebooks, AnnealSchedule, Codebook, ObjectiveWeights, TvbCode,
};
use tvb::decoder::{MetricMode, Precision};
use tvb::rng::{stream_rng, SimRng};

pub use experiment::{run_experiment, run_frame_experiment, run_stream_experiment, ExperimentConfig, ResultRow, RunMode};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success = 0,
    ConfigError = 1,
    ThresholdExceeded = 2,
}

#[derive(Debug, Parser)]
#[command(name = "tvb", version, about = "Time-varying block codes for insertion/deletion channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo symbol and frame error rates.
    Simulate(SimulateArgs),
    /// Shorthand for `simulate --mode stream`.
    Stream(SimulateArgs),
    /// Dump the drift distribution over a number of bits.
    Driftpdf(DriftArgs),
    /// Report summation limits and their excluded probability.
    AuditLimits(AuditArgs),
    /// Construct a codebook file.
    Design(DesignArgs),
    /// Levenshtein distance spectrum of each book in a codebook file.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Frame,
    Stream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Naive,
    Batch,
    Lattice,
    Corridor,
}

impl From<MetricArg> for MetricMode {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Naive => MetricMode::TrellisNaive,
            MetricArg::Batch => MetricMode::TrellisBatch,
            MetricArg::Lattice => MetricMode::Lattice,
            MetricArg::Corridor => MetricMode::LatticeCorridor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Double,
    Single,
}

/// Channel sweep; each flag may be repeated. A flag given once applies to
/// every point; `--pd` defaults to `--pi` and `--ps` to zero.
#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long = "pi", required = true)]
    pub p_i: Vec<f64>,
    #[arg(long = "pd")]
    pub p_d: Vec<f64>,
    #[arg(long = "ps")]
    pub p_s: Vec<f64>,
}

impl SweepArgs {
    pub fn points(&self) -> Result<Vec<ChannelParams>> {
        let len = self.p_i.len().max(self.p_d.len()).max(self.p_s.len());
        let pick = |v: &[f64], i: usize, name: &str, default: Option<f64>| -> Result<f64> {
            match v.len() {
                0 => default.context(format!("missing --{name}")),
                1 => Ok(v[0]),
                l if l == len => Ok(v[i]),
                l => bail!("--{name} given {l} times; expected 1 or {len}"),
            }
        };
        (0..len)
            .map(|i| {
                let pi = pick(&self.p_i, i, "pi", None)?;
                let pd = pick(&self.p_d, i, "pd", Some(pi))?;
                let ps = pick(&self.p_s, i, "ps", Some(0.0))?;
                ChannelParams::new(pi, pd, ps).map_err(Into::into)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Codebook file.
    #[arg(long)]
    pub code: PathBuf,
    /// Schedule file; without it a schedule of `--block` entries is drawn at random.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Block length `N` for a random schedule.
    #[arg(long)]
    pub block: Option<usize>,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, default_value_t = 1000)]
    pub frames: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Frame)]
    pub mode: ModeArg,
    /// Look-ahead in symbols for stream decoding.
    #[arg(long, default_value_t = 0)]
    pub lookahead: usize,
    /// Frames per simulated stream.
    #[arg(long, default_value_t = 10)]
    pub stream_frames: usize,
    /// Decode streams without knowing where the first frame starts.
    #[arg(long)]
    pub cold_start: bool,
    /// In stream mode, also decode each frame with known boundaries.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long, default_value_t = 1e-10)]
    pub pe: f64,
    #[arg(long, value_enum, default_value_t = MetricArg::Corridor)]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
    /// Results CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-frame boundary fidelity CSV (stream mode).
    #[arg(long)]
    pub fidelity: Option<PathBuf>,
    /// Add a mean decode time column.
    #[arg(long)]
    pub timing: bool,
    /// Exit with status 2 when the fraction of undecodable frames exceeds this.
    #[arg(long, default_value_t = 0.01)]
    pub max_failure_rate: f64,
}

#[derive(Debug, Clone, Args)]
pub struct DriftArgs {
    /// Sequence length in bits.
    #[arg(long)]
    pub bits: usize,
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Residual probability outside the dumped window.
    #[arg(long, default_value_t = 1e-10)]
    pub pe: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    /// Codeword length.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Block length.
    #[arg(long, default_value_t = 500)]
    pub block: usize,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, default_value_t = 1e-10)]
    pub pe: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DesignKind {
    /// Simulated annealing over codeword sets.
    Anneal,
    /// Every `n - marker` bit data word followed by one of the markers.
    Marker,
    /// Lowest-weight words offset by a random marker per position.
    SparseMarker,
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    #[arg(long, value_enum, default_value_t = DesignKind::Anneal)]
    pub kind: DesignKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub q: Option<usize>,
    /// Number of books (anneal) or marker positions (sparse-marker).
    #[arg(long, default_value_t = 1)]
    pub books: usize,
    /// Comma-separated markers for `--kind marker`, e.g. `001,110`.
    #[arg(long, value_delimiter = ',')]
    pub markers: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 20_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    /// Codebook file to write; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the schedule produced by the construction.
    #[arg(long)]
    pub schedule_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub code: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Read a codebook file and build a code from it.
pub fn load_code(code: &Path, schedule: Option<&Path>, block: Option<usize>, seed: u64) -> Result<TvbCode> {
    let text = fs::read_to_string(code).with_context(|| format!("reading {}", code.display()))?;
    let books = parse_codebooks(&text).with_context(|| format!("parsing {}", code.display()))?;
    match (schedule, block) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let sched = parse_schedule(&text).with_context(|| format!("parsing {}", path.display()))?;
            if let Some(b) = block {
                if b != sched.len() {
                    bail!("--block {b} disagrees with schedule length {}", sched.len());
                }
            }
            Ok(TvbCode::new(books, sched)?)
        }
        (None, Some(b)) => {
            // Stream u64::MAX is never used by a trial.
            let mut rng = stream_rng(seed, u64::MAX);
            Ok(TvbCode::with_random_schedule(books, b, &mut rng)?)
        }
        (None, None) => bail!("either --schedule or --block is required"),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Worker pool honoring the `TVB_THREADS` cap.
fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("TVB_THREADS") {
        let n: usize = v.parse().with_context(|| format!("TVB_THREADS={v} is not a number"))?;
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

pub fn experiment_config(args: &SimulateArgs, mode: ModeArg) -> Result<ExperimentConfig> {
    if args.frames == 0 {
        bail!("--frames must be at least 1");
    }
    if !(args.pe > 0.0 && args.pe < 1.0) {
        bail!("--pe must lie in (0, 1)");
    }
    let code = load_code(&args.code, args.schedule.as_deref(), args.block, args.seed)?;
    let mut cfg = ExperimentConfig::new(code, args.sweep.points()?, args.frames, args.seed);
    cfg.code_label = args.code.display().to_string();
    cfg.mode = match mode {
        ModeArg::Frame => RunMode::Frame,
        ModeArg::Stream => RunMode::Stream,
    };
    cfg.lookahead = args.lookahead;
    cfg.p_e = args.pe;
    cfg.metric = args.metric.into();
    cfg.precision = match args.precision {
        PrecisionArg::Double => Precision::Double,
        PrecisionArg::Single => Precision::Single,
    };
    cfg.stream_frames = args.stream_frames;
    cfg.cold_start = args.cold_start;
    cfg.baseline = args.baseline;
    cfg.timing = args.timing;
    Ok(cfg)
}

fn simulate(args: &SimulateArgs, mode: ModeArg) -> Result<Outcome> {
    let cfg = experiment_config(args, mode)?;
    let rows = pool()?.install(|| run_experiment(&cfg));
    let mut out = output(args.out.as_deref())?;
    report::write_results(&mut out, &cfg, &rows)?;
    out.flush()?;
    if let Some(path) = &args.fidelity {
        let mut f = output(Some(path))?;
        report::write_fidelity(&mut f, &cfg, &rows)?;
        f.flush()?;
    }
    let worst = rows.iter().map(|r| r.tally.failure_rate()).fold(0.0, f64::max);
    Ok(if worst > args.max_failure_rate { Outcome::ThresholdExceeded } else { Outcome::Success })
}

fn parse_bits(s: &str) -> Result<Vec<Bit>> {
    s.bytes()
        .map(|c| match c {
            b'0' => Ok(0),
            b'1' => Ok(1),
            _ => bail!("marker `{s}` must contain only 0 and 1"),
        })
        .collect()
}

/// Build the code requested by `design`.
pub fn design(args: &DesignArgs) -> Result<TvbCode> {
    let mut rng: SimRng = stream_rng(args.seed, 0);
    match args.kind {
        DesignKind::Anneal => {
            let q = args.q.context("--q is required")?;
            let sched = AnnealSchedule { steps: args.steps, chains: args.chains, ..Default::default() };
            let books = anneal_design(args.n, q, args.books, &ObjectiveWeights::default(), &sched, &mut rng)?;
            let schedule = (0..books.len()).collect();
            Ok(TvbCode::new(books, schedule)?)
        }
        DesignKind::Marker => {
            let markers = args.markers.iter().map(|m| parse_bits(m)).collect::<Result<Vec<_>>>()?;
            let len = markers.first().context("--markers is required")?.len();
            if len > args.n {
                bail!("markers are longer than n");
            }
            Ok(from_marker_code(args.n - len, &markers)?)
        }
        DesignKind::SparseMarker => {
            let q = args.q.context("--q is required")?;
            let base = sparse_codebook(args.n, q)?;
            let markers: Vec<Vec<Bit>> =
                (0..args.books).map(|_| (0..args.n).map(|_| rng.gen_range(0..2)).collect()).collect();
            Ok(from_sparse_marker(&base, &markers)?)
        }
    }
}

fn run_design(args: &DesignArgs) -> Result<Outcome> {
    let code = design(args)?;
    let mut out = output(args.out.as_deref())?;
    out.write_all(write_codebooks(code.books()).as_bytes())?;
    out.flush()?;
    if let Some(path) = &args.schedule_out {
        fs::write(path, tvb::code::write_schedule(code.schedule()))?;
    }
    for (i, b) in code.books().iter().enumerate() {
        let s = spectrum(b);
        eprintln!(
            "book {i}: d_lmin {} at multiplicity {}",
            s.d_lmin().map_or("-".into(), |d| d.to_string()),
            s.d_lmin().map_or(0, |d| s.multiplicity(d))
        );
    }
    Ok(Outcome::Success)
}

fn load_books(path: &Path) -> Result<Vec<Codebook>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_codebooks(&text).with_context(|| format!("parsing {}", path.display()))?)
}

/// Execute a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, a.mode),
        Command::Stream(a) => simulate(a, ModeArg::Stream),
        Command::Driftpdf(a) => {
            let points = a.sweep.points()?;
            let mut out = output(a.out.as_deref())?;
            for p in &points {
                report::write_drift_pmf(&mut out, a.bits, p, a.pe)?;
            }
            out.flush()?;
            Ok(Outcome::Success)
        }
        Command::AuditLimits(a) => {
            let rows = report::audit_limits(a.n, a.block, &a.sweep.points()?, a.pe);
            let mut out = output(a.out.as_deref())?;
            report::write_audit(&mut out, a.n, a.block, a.pe, &rows)?;
            out.flush()?;
            Ok(if rows.iter().all(report::AuditRow::ok) { Outcome::Success } else { Outcome::ThresholdExceeded })
        }
        Command::Design(a) => run_design(a),
        Command::Spectrum(a) => {
            let books = load_books(&a.code)?;
            let mut out = output(a.out.as_deref())?;
            report::write_spectrum(&mut out, &books)?;
            out.flush()?;
            Ok(Outcome::Success)
        }
    }
}
