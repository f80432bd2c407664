//! Command-line front end. Exit codes: 0 success, 2 invalid arguments,
//! 3 I/O failure, 4 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use overiva_core::{Method, RunConfig, WzUpdate};

use crate::bench::{parse_grid, run_bench, write_csv, BenchConfig, BenchError};
use crate::io::{read_wav, write_wav, AudioBuffer, IoError, SampleFormat};
use crate::pipeline::{separate_signal, PipelineError, Threads};
use crate::report::{ReportConfig, RunReport};
use crate::simulate::{synthesize, write_scene, SceneError, SceneSpec};
use crate::stft::StftConfig;

pub const EXIT_ARGS: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn args(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_ARGS,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::InvalidBuffer(_) => CliError::args(e.to_string()),
            _ => CliError::io(e.to_string()),
        }
    }
}

impl From<overiva_core::Error> for CliError {
    fn from(e: overiva_core::Error) -> Self {
        use overiva_core::Error as E;
        match e {
            E::Numerical { .. } | E::Linalg(_) => CliError {
                code: EXIT_NUMERICAL,
                message: e.to_string(),
            },
            _ => CliError::args(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Separation(inner) => inner.into(),
            PipelineError::Stft(_) | PipelineError::ThreadPool(_) => CliError::args(e.to_string()),
        }
    }
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::InvalidSpec(_) => CliError::args(e.to_string()),
            SceneError::Io(inner) => inner.into(),
            _ => CliError::io(e.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Scene(inner) => inner.into(),
            BenchError::Pipeline(inner) => inner.into(),
            BenchError::Csv(_) => CliError::io(e.to_string()),
            BenchError::Metric(_) | BenchError::Invalid(_) => CliError::args(e.to_string()),
        }
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
        .map_err(|e: overiva_core::optimizer::UnknownMethod| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "overiva", version, about = "Overdetermined IVA source separation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Separate K target sources from a multichannel WAV file.
    Separate(SeparateArgs),
    /// Render a synthetic scene directory.
    MakeMix(MakeMixArgs),
    /// Run methods over a grid of synthetic conditions and write a CSV table.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct StftArgs {
    #[arg(long, default_value_t = 4096)]
    frame_len: usize,
    /// Hop is frame_len / hop_div.
    #[arg(long, default_value_t = 4)]
    hop_div: usize,
}

impl StftArgs {
    fn config(&self) -> Result<StftConfig, CliError> {
        let cfg = StftConfig::new(self.frame_len, self.hop_div);
        cfg.validate().map_err(|e| CliError::args(e.to_string()))?;
        if !self.frame_len.is_multiple_of(self.hop_div) {
            return Err(CliError::args(format!(
                "hop divisor {} must divide {}",
                self.hop_div, self.frame_len
            )));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct SeparateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "sources", short = 'k')]
    sources: usize,
    #[arg(long, default_value = "ip1", value_parser = parse_method)]
    method: Method,
    /// Defaults to 50, or 3 for ip2.
    #[arg(long)]
    iters: Option<usize>,
    #[command(flatten)]
    stft: StftArgs,
    #[arg(long, default_value_t = 1e-5)]
    eps1: f64,
    #[arg(long, default_value_t = 1e-1)]
    eps2: f64,
    /// Scale eps2 by the average covariance diagonal.
    #[arg(long)]
    relative_ridge: bool,
    /// Use the exact noise-block update, so the cost trace can be checked for monotonicity.
    #[arg(long)]
    verify_monotone: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, env = "OVERIVA_THREADS", default_value = "1")]
    threads: Threads,
    /// Leave rtf and wall time out of the report.
    #[arg(long)]
    no_timing: bool,
    /// Write 16-bit PCM instead of 32-bit float.
    #[arg(long)]
    pcm16: bool,
}

#[derive(Debug, Args)]
struct MakeMixArgs {
    #[arg(long)]
    speakers: usize,
    #[arg(long, default_value_t = 0)]
    noises: usize,
    #[arg(long)]
    mics: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    sinr: f64,
    #[arg(long, default_value_t = 300.0)]
    rt60: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10.0)]
    dur: f64,
    #[arg(long, default_value_t = 16000)]
    rate: u32,
    /// Speaker signals (first channel of each) replacing the built-in source.
    #[arg(long, num_args = 1..)]
    speech: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// JSON file, or inline JSON, listing {K, L, M, sinr} cells.
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_method,
          default_value = "auxiva,ip1,ip2,ip3")]
    methods: Vec<Method>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10.0)]
    dur: f64,
    #[arg(long, default_value_t = 300.0)]
    rt60: f64,
    #[arg(long, default_value_t = 16000)]
    rate: u32,
    #[command(flatten)]
    stft: StftArgs,
    /// Overrides every method's default iteration count.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 1e-5)]
    eps1: f64,
    #[arg(long, default_value_t = 1e-1)]
    eps2: f64,
    #[arg(long, env = "OVERIVA_THREADS", default_value = "1")]
    threads: Threads,
    /// Leave mean_rtf empty so repeated runs give identical tables.
    #[arg(long)]
    no_timing: bool,
}

fn cmd_separate(a: SeparateArgs) -> Result<(), CliError> {
    if a.sources == 0 {
        return Err(CliError::args("--sources must be at least 1"));
    }
    if a.method == Method::Ip2 && a.sources != 1 {
        return Err(overiva_core::Error::Ip2RequiresSingleSource { k: a.sources }.into());
    }
    let stft_cfg = a.stft.config()?;
    let mut run_cfg = RunConfig::new(a.method);
    if let Some(n) = a.iters {
        run_cfg.iterations = n;
    }
    run_cfg.eps1 = a.eps1;
    run_cfg.eps2 = a.eps2;
    run_cfg.relative_ridge = a.relative_ridge;
    if a.verify_monotone {
        run_cfg.wz_update = WzUpdate::Full;
    }

    let input = read_wav(&a.input)?;
    let sep = a.threads.install(|parallel| {
        let cfg = RunConfig {
            parallel,
            ..run_cfg.clone()
        };
        separate_signal(
            &input.channels,
            input.sample_rate,
            a.sources,
            &stft_cfg,
            &cfg,
            !a.no_timing,
        )
    })??;

    std::fs::create_dir_all(&a.out).map_err(|e| CliError::io(format!("{}: {e}", a.out.display())))?;
    let format = if a.pcm16 {
        SampleFormat::Pcm16
    } else {
        SampleFormat::Float32
    };
    for (k, img) in sep.images.iter().enumerate() {
        let buf = AudioBuffer::new(input.sample_rate, img.clone())?;
        write_wav(a.out.join(format!("source_{}.wav", k + 1)), &buf, format)?;
    }

    if let Some(path) = &a.json {
        let report = RunReport {
            method: a.method.name().into(),
            iters: run_cfg.iterations,
            iterations_run: sep.result.iterations_run,
            cost_trace: sep.result.cost_trace.clone(),
            rtf: sep.rtf,
            wall_time_s: sep.result.wall_time,
            selected: sep.result.selected.clone(),
            config: ReportConfig {
                input: a.input.display().to_string(),
                sources: a.sources,
                channels: input.num_channels(),
                sample_rate: input.sample_rate,
                frame_len: stft_cfg.frame_len,
                hop: stft_cfg.hop,
                eps1: a.eps1,
                eps2: a.eps2,
                relative_ridge: a.relative_ridge,
                wz_update: match run_cfg.wz_update {
                    WzUpdate::Fast => "fast".into(),
                    WzUpdate::Full => "full".into(),
                },
                threads: a.threads.to_string(),
            },
        };
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(path, text + "\n").map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_make_mix(a: MakeMixArgs) -> Result<(), CliError> {
    let spec = SceneSpec {
        k: a.speakers,
        l: a.noises,
        m: a.mics,
        sinr_db: a.sinr,
        rt60_ms: a.rt60,
        sample_rate: a.rate,
        duration_s: a.dur,
        seed: a.seed,
    };
    spec.validate()?;
    let speech = if a.speech.is_empty() {
        None
    } else {
        let mut signals = Vec::new();
        for path in &a.speech {
            let buf = read_wav(path)?;
            if buf.sample_rate != a.rate {
                return Err(CliError::args(format!(
                    "{} is sampled at {} Hz, expected {} Hz",
                    path.display(),
                    buf.sample_rate,
                    a.rate
                )));
            }
            signals.push(buf.channels.into_iter().next().unwrap_or_default());
        }
        Some(signals)
    };
    let scene = synthesize(&spec, speech.as_deref())?;
    write_scene(&a.out, &scene)?;
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), CliError> {
    let text = if a.grid.trim_start().starts_with('[') {
        a.grid.clone()
    } else {
        std::fs::read_to_string(&a.grid).map_err(|e| CliError::io(format!("{}: {e}", a.grid)))?
    };
    let grid = parse_grid(&text).map_err(|e| CliError::args(format!("grid: {e}")))?;
    if a.trials == 0 {
        return Err(CliError::args("--trials must be at least 1"));
    }
    for cell in &grid {
        SceneSpec {
            k: cell.k,
            l: cell.l,
            m: cell.m,
            sinr_db: cell.sinr,
            rt60_ms: a.rt60,
            sample_rate: a.rate,
            duration_s: a.dur,
            seed: a.seed,
        }
        .validate()?;
    }
    let cfg = BenchConfig {
        trials: a.trials,
        methods: a.methods,
        seed: a.seed,
        duration_s: a.dur,
        rt60_ms: a.rt60,
        sample_rate: a.rate,
        stft: a.stft.config()?,
        iterations: a.iters,
        eps1: a.eps1,
        eps2: a.eps2,
        timed: !a.no_timing,
        threads: a.threads,
    };
    let rows = run_bench(&grid, &cfg)?;
    match &a.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            write_csv(BufWriter::new(file), &rows)?;
        }
        None => write_csv(std::io::stdout().lock(), &rows)?,
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ARGS } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Separate(a) => cmd_separate(a),
        Command::MakeMix(a) => cmd_make_mix(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
