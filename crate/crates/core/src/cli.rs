//! Command-line front end: argument parsing, CSV I/O and plot scripts.
//!
//! Exit codes: 0 on success, [`EXIT_RUNTIME`] for failures while running a
//! valid command, [`EXIT_USAGE`] for rejected arguments.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::analysis::{min_coding_gain, optimize_angles, optimize_angles_joint, rate_delay_table, DEFAULT_GRID_DEG};
use crate::channel::{sample_channel, transmit};
use crate::codes::{PairAngles, Scheme, SchemeDescriptor};
use crate::constellation::{Constellation, Modulation};
use crate::decoders::{decode, DecoderKind};
use crate::montecarlo::{snr_grid, sweep_with_threads, SerRecord, SimConfig};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Worker-count override for simulations.
pub const THREADS_ENV: &str = "STBCLAB_THREADS";

/// Column order of emitted CSV files.
pub const CSV_HEADER: [&str; 9] = [
    "code",
    "modulation",
    "rotation_deg",
    "snr_db",
    "trials",
    "ser",
    "eta",
    "erasures",
    "seed",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn runtime(msg: impl std::fmt::Display) -> CliError {
    CliError::Runtime(msg.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "stbclab", version, about = "Space-time block code laboratory")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Monte Carlo SER / spectral-efficiency sweep, written as CSV.
    Simulate(SimulateArgs),
    /// Minimum determinant and rank report for a rate-2 code.
    Diversity(DiversityArgs),
    /// Grid search for the pair angles maximizing the minimum determinant.
    Angles(AnglesArgs),
    /// Rate and delay comparison table.
    Table,
    /// Gram-matrix orthogonality and noiseless round-trip check.
    Verify(VerifyArgs),
    /// Emit a gnuplot script for one or more simulation CSVs.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct ModulationArgs {
    /// bpsk | qam4 | qam16
    #[arg(long = "mod", default_value = "qam4")]
    modulation: Modulation,
    /// Constellation rotation in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    rotate_deg: f64,
}

#[derive(Debug, Args)]
struct AngleArgs {
    /// Override α1 in degrees (rate-2 codes only).
    #[arg(long)]
    alpha1_deg: Option<f64>,
    /// Override α2 in degrees (rate-2 codes only).
    #[arg(long)]
    alpha2_deg: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// alamouti | jafarkhani | ozbek4x3 | ciod4x4 | aciod4x3 | jag4x3 | jag4x4
    #[arg(long)]
    scheme: Scheme,
    #[command(flatten)]
    modulation: ModulationArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    snr_db_start: f64,
    #[arg(long, default_value_t = 24.0, allow_negative_numbers = true)]
    snr_db_stop: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    snr_db_step: f64,
    /// Blocks per SNR point.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Receive antennas; defaults to the transmit antenna count.
    #[arg(long)]
    rx_antennas: Option<usize>,
    /// conditional | exhaustive
    #[arg(long, default_value = "conditional")]
    decoder: DecoderKind,
    #[command(flatten)]
    angles: AngleArgs,
    /// Noise variance N0.
    #[arg(long, default_value_t = 1.0)]
    noise_power: f64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiversityArgs {
    #[arg(long)]
    scheme: Scheme,
    #[command(flatten)]
    modulation: ModulationArgs,
    #[command(flatten)]
    angles: AngleArgs,
}

#[derive(Debug, Args)]
struct AnglesArgs {
    #[arg(long)]
    scheme: Scheme,
    /// One or more of bpsk, qam4, qam16 (comma separated).
    #[arg(long = "mod", default_value = "qam4", value_delimiter = ',')]
    modulation: Vec<Modulation>,
    /// One or more rotations in degrees (comma separated).
    #[arg(long, default_value = "0", value_delimiter = ',', allow_negative_numbers = true)]
    rotate_deg: Vec<f64>,
    /// Grid resolution in degrees.
    #[arg(long, default_value_t = DEFAULT_GRID_DEG)]
    grid_deg: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    scheme: Scheme,
    #[command(flatten)]
    modulation: ModulationArgs,
    #[command(flatten)]
    angles: AngleArgs,
    /// Random blocks to check.
    #[arg(long, default_value_t = 1000)]
    blocks: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// η versus SNR with the 4 bits/s/Hz reference.
    #[value(name = "spectral_efficiency")]
    SpectralEfficiency,
    /// SER versus SNR on a log axis.
    #[value(name = "ser_vs_snr")]
    SerVsSnr,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// spectral_efficiency | ser_vs_snr
    #[arg(long)]
    figure: Figure,
    /// Script path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Input CSVs, one series each.
    #[arg(required = true)]
    csv: Vec<PathBuf>,
}

/// A parsed and validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Simulate {
        config: SimConfig,
        out: Option<PathBuf>,
    },
    Diversity {
        descriptor: SchemeDescriptor,
        constellation: Constellation,
    },
    /// A single constellation runs the plain search; several run the joint one.
    Angles {
        scheme: Scheme,
        constellations: Vec<Constellation>,
        grid_deg: f64,
    },
    Table,
    Verify {
        descriptor: SchemeDescriptor,
        constellation: Constellation,
        blocks: u64,
        seed: u64,
    },
    Plot {
        figure: Figure,
        csv: Vec<PathBuf>,
        out: Option<PathBuf>,
    },
}

fn constellation(args: &ModulationArgs) -> Result<Constellation, CliError> {
    if !args.rotate_deg.is_finite() {
        return Err(usage("--rotate-deg must be finite"));
    }
    let c = args.modulation.constellation();
    Ok(if args.rotate_deg == 0.0 { c } else { c.rotate_deg(args.rotate_deg) })
}

fn descriptor(scheme: Scheme, args: &AngleArgs) -> Result<SchemeDescriptor, CliError> {
    if args.alpha1_deg.is_none() && args.alpha2_deg.is_none() {
        return Ok(SchemeDescriptor::new(scheme));
    }
    if !scheme.is_jagannath() {
        return Err(usage(format!(
            "--alpha1-deg/--alpha2-deg only apply to jag4x3 and jag4x4, not {scheme}"
        )));
    }
    let shipped = PairAngles::shipped();
    let a1 = args.alpha1_deg.unwrap_or(shipped.alpha1().to_degrees());
    let a2 = args.alpha2_deg.unwrap_or(shipped.alpha2().to_degrees());
    let angles = PairAngles::from_degrees(a1, a2)
        .map_err(|_| usage(format!("pair angles must lie strictly between 0 and 90 degrees, got ({a1}, {a2})")))?;
    SchemeDescriptor::with_angles(scheme, angles).map_err(usage)
}

fn simulate_config(a: &SimulateArgs) -> Result<SimConfig, CliError> {
    if !(a.snr_db_step > 0.0 && a.snr_db_step.is_finite()) {
        return Err(usage(format!("--snr-db-step must be positive, got {}", a.snr_db_step)));
    }
    if !(a.snr_db_start.is_finite() && a.snr_db_stop.is_finite()) {
        return Err(usage("--snr-db-start and --snr-db-stop must be finite"));
    }
    if a.snr_db_stop < a.snr_db_start {
        return Err(usage(format!(
            "--snr-db-stop ({}) is below --snr-db-start ({})",
            a.snr_db_stop, a.snr_db_start
        )));
    }
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    if a.rx_antennas == Some(0) {
        return Err(usage("--rx-antennas must be at least 1"));
    }
    if !(a.noise_power >= 0.0 && a.noise_power.is_finite()) {
        return Err(usage(format!("--noise-power must be non-negative, got {}", a.noise_power)));
    }
    let desc = descriptor(a.scheme, &a.angles)?;
    let c = constellation(&a.modulation)?;
    let mut config = SimConfig::new(desc, c, snr_grid(a.snr_db_start, a.snr_db_stop, a.snr_db_step));
    config.trials = a.trials;
    config.seed = a.seed;
    config.rx_antennas = a.rx_antennas.unwrap_or(desc.tx_antennas());
    config.decoder = a.decoder;
    config.noise_power = a.noise_power;
    config.validate().map_err(|e| match a.decoder {
        DecoderKind::Exhaustive => usage(format!("{e}; use --decoder conditional or a smaller constellation")),
        DecoderKind::Conditional => usage(e),
    })?;
    Ok(config)
}

/// Parses `argv` (including the program name) into a validated command.
pub fn parse_args<I, T>(argv: I) -> Result<Command, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    Ok(match cli.verb {
        Verb::Simulate(a) => Command::Simulate {
            config: simulate_config(&a)?,
            out: a.out,
        },
        Verb::Diversity(a) => {
            if !a.scheme.is_jagannath() {
                return Err(usage(format!("diversity needs jag4x3 or jag4x4, got {}", a.scheme)));
            }
            Command::Diversity {
                descriptor: descriptor(a.scheme, &a.angles)?,
                constellation: constellation(&a.modulation)?,
            }
        }
        Verb::Angles(a) => {
            if !a.scheme.is_jagannath() {
                return Err(usage(format!("angles needs jag4x3 or jag4x4, got {}", a.scheme)));
            }
            if !(a.grid_deg > 0.0 && a.grid_deg < 90.0) {
                return Err(usage(format!("--grid-deg must lie in (0, 90), got {}", a.grid_deg)));
            }
            let mut constellations = Vec::new();
            for m in &a.modulation {
                for r in &a.rotate_deg {
                    constellations.push(constellation(&ModulationArgs {
                        modulation: *m,
                        rotate_deg: *r,
                    })?);
                }
            }
            Command::Angles {
                scheme: a.scheme,
                constellations,
                grid_deg: a.grid_deg,
            }
        }
        Verb::Table => Command::Table,
        Verb::Verify(a) => {
            if a.blocks == 0 {
                return Err(usage("--blocks must be at least 1"));
            }
            Command::Verify {
                descriptor: descriptor(a.scheme, &a.angles)?,
                constellation: constellation(&a.modulation)?,
                blocks: a.blocks,
                seed: a.seed,
            }
        }
        Verb::Plot(a) => Command::Plot {
            figure: a.figure,
            csv: a.csv,
            out: a.out,
        },
    })
}

/// Worker count from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(usage(format!("{THREADS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes records as CSV (header row, LF endings, 17 significant digits).
pub fn write_csv_to<W: Write>(records: &[SerRecord], w: W) -> Result<(), csv::Error> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for r in records {
        wtr.write_record([
            r.scheme.clone(),
            r.modulation.clone(),
            fmt_f64(r.rotation_deg),
            fmt_f64(r.snr_db),
            r.trials.to_string(),
            fmt_f64(r.ser),
            fmt_f64(r.eta),
            r.erasures.to_string(),
            r.seed.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv(records: &[SerRecord], path: &Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
    write_csv_to(records, io::BufWriter::new(file)).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

/// Parses CSV produced by [`write_csv_to`]. The symbol-error count is
/// recovered from `ser` and the scheme's symbols per block.
pub fn read_csv_from<R: io::Read>(r: R) -> Result<Vec<SerRecord>, CliError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(runtime)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(runtime(format!("unexpected CSV header: {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(runtime)?;
        let bad = |col: &str| runtime(format!("row {}: invalid {col}", line + 1));
        let f = |i: usize| row[i].parse::<f64>().map_err(|_| bad(CSV_HEADER[i]));
        let u = |i: usize| row[i].parse::<u64>().map_err(|_| bad(CSV_HEADER[i]));
        let scheme: Scheme = row[0].parse().map_err(|_| bad("code"))?;
        let (trials, ser, erasures) = (u(4)?, f(5)?, u(7)?);
        let decided = trials.saturating_sub(erasures) * scheme.symbols() as u64;
        out.push(SerRecord {
            scheme: row[0].to_string(),
            modulation: row[1].to_string(),
            rotation_deg: f(2)?,
            snr_db: f(3)?,
            trials,
            symbol_errors: if decided == 0 { 0 } else { (ser * decided as f64).round() as u64 },
            erasures,
            ser,
            eta: f(6)?,
            seed: u(8)?,
        });
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<SerRecord>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| runtime(format!("cannot read {}: {e}", path.display())))?;
    read_csv_from(io::BufReader::new(file))
}

/// Legend label: code and modulation, with rotation state for the
/// coordinate-interleaved codes.
pub fn series_label(r: &SerRecord) -> String {
    let mut label = r.scheme.clone();
    if r.scheme == Scheme::Aciod4x3.token() || r.scheme == Scheme::Ciod4x4.token() {
        label.push_str(if r.rotation_deg != 0.0 { "-rotated" } else { "-unrotated" });
    }
    format!("{label} ({})", r.modulation)
}

fn gp_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

/// Gnuplot script with one series per CSV.
pub fn plot_script(csv_paths: &[PathBuf], figure: Figure) -> Result<String, CliError> {
    if csv_paths.is_empty() {
        return Err(usage("plot needs at least one CSV"));
    }
    let mut series = Vec::new();
    for p in csv_paths {
        if !p.is_file() {
            return Err(runtime(format!("missing input CSV {}", p.display())));
        }
        let recs = read_csv(p)?;
        let label = recs.first().map(series_label).unwrap_or_else(|| p.display().to_string());
        series.push((p.display().to_string(), label));
    }
    let (ycol, out) = match figure {
        Figure::SpectralEfficiency => (7, "spectral_efficiency.png"),
        Figure::SerVsSnr => (6, "ser_vs_snr.png"),
    };
    let mut s = String::new();
    s.push_str("set terminal pngcairo size 800,600\n");
    let _ = writeln!(s, "set output {}", gp_quote(out));
    s.push_str("set datafile separator ','\n");
    s.push_str("set grid\nset key bottom left\n");
    s.push_str("set xlabel 'SNR (dB)'\n");
    match figure {
        Figure::SpectralEfficiency => {
            s.push_str("set ylabel 'Effective spectral efficiency (bits/s/Hz)'\n");
            s.push_str("set key bottom right\n");
            s.push_str("set yrange [0:*]\n");
        }
        Figure::SerVsSnr => {
            s.push_str("set ylabel 'Symbol error rate'\n");
            s.push_str("set logscale y\n");
            s.push_str("set format y '10^{%L}'\n");
        }
    }
    let mut plots: Vec<String> = series
        .iter()
        .map(|(path, label)| {
            format!(
                "{} every ::1 using 4:{ycol} with linespoints title {}",
                gp_quote(path),
                gp_quote(label)
            )
        })
        .collect();
    if figure == Figure::SpectralEfficiency {
        plots.push("4 with lines dashtype 2 lc rgb 'black' title '4 bits/s/Hz'".to_string());
    }
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    Ok(s)
}

/// Writes [`plot_script`] to `out`.
pub fn emit_plot_script(csv_paths: &[PathBuf], figure: Figure, out: &Path) -> Result<(), CliError> {
    let script = plot_script(csv_paths, figure)?;
    std::fs::write(out, script).map_err(|e| runtime(format!("cannot write {}: {e}", out.display())))
}

fn write_out(out: &mut dyn Write, s: &str) -> Result<(), CliError> {
    out.write_all(s.as_bytes()).map_err(runtime)
}

fn run_verify(
    desc: &SchemeDescriptor,
    c: &Constellation,
    blocks: u64,
    seed: u64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let orthogonal = !matches!(desc.scheme(), Scheme::Jafarkhani | Scheme::Ozbek4x3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_ratio = 0.0f64;
    let mut errors = 0usize;
    for _ in 0..blocks {
        let x = c.sample_symbols(desc.symbols(), &mut rng);
        let cw = desc.encode(&x).map_err(runtime)?;
        let g = cw.gram();
        let norm = cw.matrix().frobenius_sq();
        if norm > 0.0 {
            worst_ratio = worst_ratio.max(g.max_off_diagonal() / norm);
        }
        let h = sample_channel(desc.tx_antennas(), desc.tx_antennas(), &mut rng).map_err(runtime)?;
        let rx = transmit(&cw, &h, 10.0, 0.0, &mut rng).map_err(runtime)?;
        let d = decode(DecoderKind::Conditional, &rx, &h, desc, c).map_err(runtime)?;
        errors += d.symbols.iter().zip(&x).filter(|(a, b)| (*a - *b).norm() > 1e-9).count();
    }
    let ortho_ok = !orthogonal || worst_ratio < 1e-10;
    let mut s = String::new();
    let _ = writeln!(s, "scheme: {}", desc.name());
    let _ = writeln!(s, "modulation: {} (rotation {} deg)", c.name(), c.rotation_deg());
    let _ = writeln!(s, "blocks: {blocks}");
    let _ = writeln!(s, "class: {}", if orthogonal { "orthogonal" } else { "quasi-orthogonal" });
    let _ = writeln!(s, "max off-diagonal / |C|^2: {worst_ratio:.3e}");
    let _ = writeln!(s, "noiseless round-trip symbol errors: {errors}");
    let ok = ortho_ok && errors == 0;
    let _ = writeln!(s, "result: {}", if ok { "PASS" } else { "FAIL" });
    write_out(out, &s)?;
    if ok {
        Ok(())
    } else {
        Err(runtime("verification failed"))
    }
}

/// Executes a command, writing human-readable output to `out`.
pub fn run(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Simulate { config, out: path } => {
            let threads = threads_from_env()?;
            let records = sweep_with_threads(config, threads).map_err(runtime)?;
            match path {
                Some(p) => write_csv(&records, p),
                None => write_csv_to(&records, out).map_err(runtime),
            }
        }
        Command::Diversity { descriptor, constellation } => {
            let angles = descriptor.angles().expect("rate-2 code");
            let r = min_coding_gain(descriptor.scheme(), constellation, angles).map_err(runtime)?;
            let mut s = String::new();
            let _ = writeln!(s, "scheme: {}", r.scheme);
            let _ = writeln!(s, "modulation: {} (rotation {} deg)", r.constellation, constellation.rotation_deg());
            let _ = writeln!(
                s,
                "alpha1_deg: {}\nalpha2_deg: {}",
                angles.alpha1().to_degrees(),
                angles.alpha2().to_degrees()
            );
            let _ = writeln!(s, "block_floor: {:.12e}", r.block_floor);
            let _ = writeln!(s, "min_det (both blocks differ): {:.12e}", r.min_det);
            let _ = writeln!(s, "full_diversity: {}", r.full_diversity);
            let _ = writeln!(s, "min_rank over all differences: {} of {}", r.min_rank, r.full_rank);
            let w: Vec<String> = r.witness.iter().map(|z| format!("{:.4}{:+.4}i", z.re, z.im)).collect();
            let _ = writeln!(s, "witness: [{}]", w.join(", "));
            write_out(out, &s)
        }
        Command::Angles { scheme, constellations, grid_deg } => {
            let step = grid_deg.to_radians();
            let mut s = format!("scheme: {scheme}\ngrid_deg: {grid_deg}\n");
            if let [c] = constellations.as_slice() {
                let r = optimize_angles(*scheme, c, step).map_err(runtime)?;
                let _ = writeln!(s, "modulation: {} (rotation {} deg)", c.name(), c.rotation_deg());
                let _ = writeln!(s, "grid_points: {}", r.grid_points);
                let _ = writeln!(s, "alpha1_deg = {}", r.angles.alpha1().to_degrees());
                let _ = writeln!(s, "alpha2_deg = {}", r.angles.alpha2().to_degrees());
                let _ = writeln!(s, "min_det: {:.12e}", r.min_det);
            } else {
                let r = optimize_angles_joint(*scheme, constellations, step).map_err(runtime)?;
                let _ = writeln!(s, "grid_points: {}", r.grid_points);
                let _ = writeln!(s, "alpha1_deg = {}", r.angles.alpha1().to_degrees());
                let _ = writeln!(s, "alpha2_deg = {}", r.angles.alpha2().to_degrees());
                let _ = writeln!(s, "worst_ratio: {:.6}", r.worst_ratio);
                for ((c, got), best) in constellations.iter().zip(&r.min_dets).zip(&r.best_min_dets) {
                    let _ = writeln!(
                        s,
                        "  {} rot {} deg: min_det {got:.6e} (grid best {best:.6e})",
                        c.name(),
                        c.rotation_deg()
                    );
                }
            }
            write_out(out, &s)
        }
        Command::Table => {
            let mut s = format!("{:<16} {:>3} {:>6} {:>6}\n", "design", "N", "rate", "delay");
            for row in rate_delay_table() {
                let _ = writeln!(s, "{:<16} {:>3} {:>6} {:>6}", row.design, row.tx_antennas, row.rate.to_string(), row.delay);
            }
            write_out(out, &s)
        }
        Command::Verify { descriptor, constellation, blocks, seed } => {
            run_verify(descriptor, constellation, *blocks, *seed, out)
        }
        Command::Plot { figure, csv, out: path } => match path {
            Some(p) => emit_plot_script(csv, *figure, p),
            None => {
                let s = plot_script(csv, *figure)?;
                write_out(out, &s)
            }
        },
    }
}

/// Parses and runs `argv`; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let result = parse_args(argv).and_then(|cmd| {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        run(&cmd, &mut lock)
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
