//! The `afe-sim` command-line front-end.
//!
//! Exit codes: 0 on success, 2 for command-line or configuration problems
//! (every config violation is printed, not just the first), 3 for input
//! files that cannot be read or processed.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::aer::{arbitrate, handshake_run, HandshakeDelays};
use crate::adm::AdmEncoder;
use crate::config::{validate_config_set, ChannelConfig, EncoderMode, Violation};
use crate::decode::{adm_reconstruct, pfm_rate_decode};
use crate::event::{Event, EventSource};
use crate::io::{
    bank_to_csv, format_config, load_config, load_events_csv, load_signal_csv, load_wav,
    report_to_csv, save_events_csv, save_wav, signal_to_csv, Globals,
};
use crate::measure::{
    analyze_sweep, frequency_sweep, octave_bank, psd_report, rate_vs_amplitude,
    sndr_vs_amplitude, RateDrive,
};
use crate::pfm::PfmEncoder;
use crate::pipeline::{bpf_params, choose_sim_rate, Pipeline};
use crate::rng::{derive_seed, Purpose};
use crate::signal::{resample, SampledSignal};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "afe-sim",
    version,
    about = "Behavioral simulator for an event-based 16-channel analog front-end"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analog chain and spike encoders over a recorded signal.
    Encode(EncodeArgs),
    /// Reconstruct a signal or rate estimate from an event stream.
    Decode(DecodeArgs),
    /// Characterization measurements.
    #[command(subcommand)]
    Measure(MeasureCommand),
}

#[derive(clap::Args)]
struct EncodeArgs {
    /// Channel configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Input signal, .wav or .csv.
    #[arg(long)]
    input: PathBuf,
    /// Output event CSV.
    #[arg(long)]
    output: PathBuf,
    /// Simulation rate in Hz; defaults to the config [global] fs, else an
    /// automatic rate that oversamples every filter and the input.
    #[arg(long)]
    fs: Option<f64>,
    /// Master seed. Required when noise, threshold mismatch or link jitter
    /// is enabled; defaults to 0 on fully deterministic runs.
    #[arg(long)]
    seed: Option<u64>,
    /// Volts represented by WAV digital full scale.
    #[arg(long, default_value_t = 1.0)]
    input_scale: f64,
    /// Truncate the input to this many seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Per-phase handshake jitter bound in ns.
    #[arg(long, default_value_t = 0)]
    link_jitter_ns: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Adm,
    Pfm,
}

#[derive(clap::Args)]
struct DecodeArgs {
    /// Input event CSV.
    #[arg(long)]
    input: PathBuf,
    /// Output signal, .csv or .wav.
    #[arg(long)]
    output: PathBuf,
    /// Which encoder's events to decode.
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Channel to decode.
    #[arg(long)]
    channel: u8,
    /// Output sample rate in Hz.
    #[arg(long, default_value_t = 48_000.0)]
    fs_out: f64,
    /// Output duration in seconds; defaults to just past the last event.
    #[arg(long)]
    duration: Option<f64>,
    /// ADM UP step in volts.
    #[arg(long, default_value_t = 10e-3)]
    delta_up: f64,
    /// ADM DN step in volts.
    #[arg(long, default_value_t = 10e-3)]
    delta_dn: f64,
    /// ADM initial level in volts.
    #[arg(long, default_value_t = 0.0)]
    v0: f64,
    /// Optional one-pole smoothing corner in Hz (ADM only).
    #[arg(long)]
    smooth_hz: Option<f64>,
    /// Rate estimation window in seconds (PFM only).
    #[arg(long, default_value_t = 50e-3)]
    window: f64,
}

#[derive(Subcommand)]
enum MeasureCommand {
    /// Small-signal frequency response of one configured channel.
    Sweep(SweepArgs),
    /// Build an octave-spaced filter bank and sweep every channel.
    Bank(BankArgs),
    /// Welch power spectral density of a recorded signal.
    Psd(PsdArgs),
    /// SNDR versus input amplitude for one configured channel.
    Sndr(SndrArgs),
    /// PFM event rate versus drive amplitude.
    Rate(RateArgs),
}

#[derive(clap::Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Channel to sweep.
    #[arg(long)]
    channel: u8,
    /// Lowest probe frequency in Hz.
    #[arg(long)]
    f_lo: f64,
    /// Highest probe frequency in Hz.
    #[arg(long)]
    f_hi: f64,
    /// Number of log-spaced probe points.
    #[arg(long, default_value_t = 61)]
    points: usize,
    /// Probe amplitude in volts.
    #[arg(long, default_value_t = 1e-3)]
    amplitude: f64,
    /// Master seed; required when the channel is stochastic.
    #[arg(long)]
    seed: Option<u64>,
    /// Output report CSV.
    #[arg(long)]
    output: PathBuf,
}

#[derive(clap::Args)]
struct BankArgs {
    /// Center frequency of channel 0 in Hz.
    #[arg(long, default_value_t = 100.0)]
    f_lo: f64,
    /// Number of octave-spaced channels.
    #[arg(long, default_value_t = 11)]
    channels: usize,
    /// Per-section quality factor.
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Probe points per channel (log-spaced over f0/4 .. 4*f0).
    #[arg(long, default_value_t = 41)]
    points: usize,
    /// Output report CSV (long format with a channel column).
    #[arg(long)]
    output: PathBuf,
    /// Also write the generated bank as a config file.
    #[arg(long)]
    emit_config: Option<PathBuf>,
}

#[derive(clap::Args)]
struct PsdArgs {
    /// Input signal, .wav or .csv.
    #[arg(long)]
    input: PathBuf,
    /// Volts represented by WAV digital full scale.
    #[arg(long, default_value_t = 1.0)]
    input_scale: f64,
    /// Welch segment length in samples.
    #[arg(long, default_value_t = 4096)]
    seg_len: usize,
    /// Segment overlap fraction in [0, 1).
    #[arg(long, default_value_t = 0.5)]
    overlap: f64,
    /// Output report CSV.
    #[arg(long)]
    output: PathBuf,
}

#[derive(clap::Args)]
struct SndrArgs {
    #[arg(long)]
    config: PathBuf,
    /// Channel to measure.
    #[arg(long)]
    channel: u8,
    /// Test tone frequency in Hz.
    #[arg(long)]
    f0: f64,
    /// Amplitude grid "lo:hi:n" (volts, linear) or "lo:hi:n:log".
    #[arg(long)]
    amps: String,
    /// Master seed; required when the channel is stochastic.
    #[arg(long)]
    seed: Option<u64>,
    /// Output report CSV.
    #[arg(long)]
    output: PathBuf,
}

#[derive(clap::Args)]
struct RateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Channel whose PFM encoder is characterized.
    #[arg(long)]
    channel: u8,
    /// Amplitude grid "lo:hi:n" (volts, linear) or "lo:hi:n:log".
    #[arg(long)]
    amps: String,
    /// Drive shape: "dc" or "tone:FREQ_HZ".
    #[arg(long, default_value = "dc")]
    drive: String,
    /// Output report CSV.
    #[arg(long)]
    output: PathBuf,
}

/// A CLI failure: an exit code plus the lines to print on stderr.
#[derive(Debug)]
struct Failure {
    code: i32,
    lines: Vec<String>,
}

impl Failure {
    fn usage(e: Error) -> Failure {
        Failure { code: 2, lines: vec![e.to_string()] }
    }

    fn usage_msg(msg: impl Into<String>) -> Failure {
        Failure { code: 2, lines: vec![msg.into()] }
    }

    fn input(e: Error) -> Failure {
        Failure { code: 3, lines: vec![e.to_string()] }
    }

    fn violations(vs: Vec<Violation>) -> Failure {
        Failure {
            code: 2,
            lines: vs.iter().map(|v| format!("config: {v}")).collect(),
        }
    }

    /// For errors raised while processing already-validated arguments:
    /// measurement/config complaints still point at the request (2),
    /// anything else at the data (3).
    fn processing(e: Error) -> Failure {
        let code = match &e {
            Error::Measure(_) | Error::Config { .. } | Error::Design(_) => 2,
            _ => 3,
        };
        Failure { code, lines: vec![e.to_string()] }
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parses arguments from the process environment and runs the tool,
/// returning the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            for line in &f.lines {
                eprintln!("error: {line}");
            }
            f.code
        }
    }
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Encode(a) => run_encode(a),
        Command::Decode(a) => run_decode(a),
        Command::Measure(MeasureCommand::Sweep(a)) => run_sweep(a),
        Command::Measure(MeasureCommand::Bank(a)) => run_bank(a),
        Command::Measure(MeasureCommand::Psd(a)) => run_psd(a),
        Command::Measure(MeasureCommand::Sndr(a)) => run_sndr(a),
        Command::Measure(MeasureCommand::Rate(a)) => run_rate(a),
    }
}

/// Loads a `.wav` or `.csv` signal by extension.
fn load_input(path: &Path, input_scale: f64) -> std::result::Result<SampledSignal, Failure> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("wav") => load_wav(path, input_scale).map_err(Failure::input),
        Some("csv") => load_signal_csv(path).map_err(Failure::input),
        _ => Err(Failure::usage_msg(format!(
            "unsupported input extension on {}; expected .wav or .csv",
            path.display()
        ))),
    }
}

fn load_validated_config(
    path: &Path,
) -> std::result::Result<(Globals, Vec<ChannelConfig>), Failure> {
    let (globals, cfgs) = load_config(path).map_err(Failure::usage)?;
    if cfgs.is_empty() {
        return Err(Failure::usage_msg(format!(
            "{} declares no [channel.N] sections",
            path.display()
        )));
    }
    let violations = validate_config_set(&cfgs);
    if !violations.is_empty() {
        return Err(Failure::violations(violations));
    }
    Ok((globals, cfgs))
}

fn find_channel(cfgs: &[ChannelConfig], channel: u8) -> std::result::Result<&ChannelConfig, Failure> {
    cfgs.iter()
        .find(|c| c.channel == channel)
        .ok_or_else(|| Failure::usage_msg(format!("channel {channel} is not in the config file")))
}

/// Resolves the master seed: required when anything stochastic is enabled,
/// defaulted to 0 otherwise.
fn resolve_seed(seed: Option<u64>, stochastic: bool, why: &str) -> std::result::Result<u64, Failure> {
    match (seed, stochastic) {
        (Some(s), _) => Ok(s),
        (None, false) => Ok(0),
        (None, true) => Err(Failure::usage_msg(format!("--seed is required when {why}"))),
    }
}

/// Parses "lo:hi:n" (linear) or "lo:hi:n:log" (geometric) into a strictly
/// increasing grid.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| Error::config("--amps", format!("{msg}, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let (lo, hi, n, log) = match parts.as_slice() {
        [lo, hi, n] => (lo, hi, n, false),
        [lo, hi, n, "log"] => (lo, hi, n, true),
        _ => return Err(bad("expected lo:hi:n or lo:hi:n:log")),
    };
    let lo: f64 = lo.parse().map_err(|_| bad("bad lower bound"))?;
    let hi: f64 = hi.parse().map_err(|_| bad("bad upper bound"))?;
    let n: usize = n.parse().map_err(|_| bad("bad point count"))?;
    if !(lo.is_finite() && lo > 0.0 && hi.is_finite()) {
        return Err(bad("bounds must be positive and finite"));
    }
    if n == 0 {
        return Err(bad("need at least one point"));
    }
    if n == 1 {
        if lo != hi {
            return Err(bad("a single point needs lo == hi"));
        }
        return Ok(vec![lo]);
    }
    if hi <= lo {
        return Err(bad("upper bound must exceed lower bound"));
    }
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if log {
                lo * (hi / lo).powf(t)
            } else {
                lo + t * (hi - lo)
            }
        })
        .collect())
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && lo > 0.0 && hi.is_finite() && hi > lo) {
        return Err(Error::Measure(format!("bad frequency span {lo}..{hi}")));
    }
    if n < 5 {
        return Err(Error::Measure(format!("need at least 5 points, got {n}")));
    }
    Ok((0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect())
}

fn write_text(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text)
        .map_err(|e| Failure::input(Error::config(path.display().to_string(), e.to_string())))
}

fn run_encode(a: EncodeArgs) -> CliResult {
    let (globals, cfgs) = load_validated_config(&a.config)?;
    let stochastic = cfgs.iter().any(ChannelConfig::is_stochastic) || a.link_jitter_ns > 0;
    let seed = resolve_seed(
        a.seed,
        stochastic,
        "noise, threshold mismatch or link jitter is enabled",
    )?;

    let x = load_input(&a.input, a.input_scale)?;
    let x = match a.duration {
        None => x,
        Some(d) => {
            if !(d.is_finite() && d > 0.0) {
                return Err(Failure::usage_msg(format!("--duration must be positive, got {d}")));
            }
            let n = ((d * x.fs).round() as usize).min(x.samples.len());
            if n < 2 {
                return Err(Failure::usage_msg(format!(
                    "--duration {d} leaves fewer than 2 samples at {} Hz",
                    x.fs
                )));
            }
            SampledSignal::new(x.fs, x.t0, x.samples[..n].to_vec()).map_err(Failure::processing)?
        }
    };

    let fs = match a.fs.or(globals.fs) {
        Some(fs) => {
            if !(fs.is_finite() && fs > 0.0) {
                return Err(Failure::usage_msg(format!("fs must be positive, got {fs}")));
            }
            fs
        }
        None => choose_sim_rate(&cfgs).max(x.fs),
    };
    let x = if ((fs - x.fs) / fs).abs() > 1e-12 {
        resample(&x, fs).map_err(Failure::processing)?
    } else {
        x
    };

    let mut by_channel: Vec<&ChannelConfig> = cfgs.iter().collect();
    by_channel.sort_by_key(|c| c.channel);
    let mut adm_seqs: Vec<Vec<Event>> = Vec::new();
    let mut pfm_seqs: Vec<Vec<Event>> = Vec::new();
    for cfg in by_channel {
        let mut pipe = Pipeline::new(cfg, fs, seed).map_err(Failure::processing)?;
        let y = pipe.process_block(&x).map_err(Failure::processing)?;
        match cfg.mode {
            EncoderMode::Adm => {
                let mut enc =
                    AdmEncoder::new(&cfg.adm, cfg.channel, seed).map_err(Failure::processing)?;
                adm_seqs.push(enc.encode_block(&y).map_err(Failure::processing)?);
            }
            EncoderMode::Pfm => {
                let mut enc = PfmEncoder::new(&cfg.pfm, cfg.channel).map_err(Failure::processing)?;
                let (events, _) = enc.encode_block(&y).map_err(Failure::processing)?;
                pfm_seqs.push(events);
            }
        }
    }

    let delays = HandshakeDelays {
        jitter_ns: a.link_jitter_ns,
        ..HandshakeDelays::default()
    };
    let mut delivered: Vec<Event> = Vec::new();
    for (lane, seqs) in [(0u8, &adm_seqs), (1u8, &pfm_seqs)] {
        if seqs.is_empty() {
            continue;
        }
        let merged = arbitrate(seqs).map_err(Failure::processing)?;
        let link_seed = derive_seed(seed, Purpose::LinkJitter, lane);
        let (deliveries, _) =
            handshake_run(&merged, &delays, link_seed).map_err(Failure::processing)?;
        delivered.extend(deliveries.into_iter().map(|d| Event {
            t_ns: d.delivered_at_ns,
            ..d.event
        }));
    }
    delivered.sort_by_key(|e| (e.t_ns, e.source, e.channel));

    save_events_csv(&a.output, &delivered).map_err(Failure::input)?;
    println!(
        "channels={} fs_hz={} samples={} events={} output={}",
        cfgs.len(),
        fs,
        x.samples.len(),
        delivered.len(),
        a.output.display()
    );
    Ok(())
}

fn run_decode(a: DecodeArgs) -> CliResult {
    if !(a.fs_out.is_finite() && a.fs_out > 0.0) {
        return Err(Failure::usage_msg(format!("--fs-out must be positive, got {}", a.fs_out)));
    }
    if let Some(d) = a.duration {
        if !(d.is_finite() && d > 0.0) {
            return Err(Failure::usage_msg(format!("--duration must be positive, got {d}")));
        }
    }
    let events = load_events_csv(&a.input).map_err(Failure::input)?;
    let want = match a.mode {
        ModeArg::Adm => EventSource::Adm,
        ModeArg::Pfm => EventSource::Pfm,
    };
    let selected: Vec<Event> = events
        .iter()
        .filter(|e| e.source == want && e.channel == a.channel)
        .copied()
        .collect();
    if selected.is_empty() && a.duration.is_none() {
        return Err(Failure::input(Error::Decode(format!(
            "no {} events for channel {} in {}; pass --duration to decode silence",
            want,
            a.channel,
            a.input.display()
        ))));
    }

    let y = match a.mode {
        ModeArg::Adm => adm_reconstruct(
            &selected,
            a.delta_up,
            a.delta_dn,
            a.v0,
            a.fs_out,
            a.duration,
            a.smooth_hz,
        )
        .map_err(Failure::processing)?,
        ModeArg::Pfm => pfm_rate_decode(&selected, a.window, a.fs_out, a.duration)
            .map_err(Failure::processing)?,
    };

    match a.output.extension().and_then(|e| e.to_str()) {
        Some("csv") => write_text(&a.output, &signal_to_csv(&y))?,
        Some("wav") => save_wav(&a.output, &y).map_err(Failure::processing)?,
        _ => {
            return Err(Failure::usage_msg(format!(
                "unsupported output extension on {}; expected .csv or .wav",
                a.output.display()
            )))
        }
    }
    println!(
        "events={} fs_out_hz={} samples={} output={}",
        selected.len(),
        y.fs,
        y.samples.len(),
        a.output.display()
    );
    Ok(())
}

fn run_sweep(a: SweepArgs) -> CliResult {
    let (_, cfgs) = load_validated_config(&a.config)?;
    let cfg = find_channel(&cfgs, a.channel)?;
    let seed = resolve_seed(a.seed, cfg.is_stochastic(), "the channel is stochastic")?;
    let freqs = log_grid(a.f_lo, a.f_hi, a.points).map_err(Failure::usage)?;
    let mut rep = frequency_sweep(cfg, &freqs, a.amplitude, seed).map_err(Failure::processing)?;
    if cfg.is_stochastic() {
        rep = rep.with_seed(seed);
    }
    write_text(&a.output, &report_to_csv(&rep))?;
    let (f0, q_design) = bpf_params(&cfg.bpf);
    match analyze_sweep(&rep.x, &rep.y) {
        Ok(an) => println!(
            "channel={} f0_design_hz={f0} q_design={q_design} f_peak_hz={:.6} peak_db={:.4} q={:.4} output={}",
            a.channel, an.f_peak, an.peak_db, an.q, a.output.display()
        ),
        Err(_) => println!(
            "channel={} f0_design_hz={f0} q_design={q_design} (span does not bracket the peak) output={}",
            a.channel,
            a.output.display()
        ),
    }
    Ok(())
}

fn run_bank(a: BankArgs) -> CliResult {
    let bank = octave_bank(a.f_lo, a.channels, a.q).map_err(Failure::usage)?;
    let mut entries = Vec::with_capacity(bank.len());
    for cfg in &bank {
        let (f0, _) = bpf_params(&cfg.bpf);
        let freqs = log_grid(f0 / 4.0, 4.0 * f0, a.points).map_err(Failure::usage)?;
        let rep = frequency_sweep(cfg, &freqs, 1e-3, 0).map_err(Failure::processing)?;
        let an = analyze_sweep(&rep.x, &rep.y).map_err(Failure::processing)?;
        println!(
            "channel={} f0_hz={f0} f_peak_hz={:.6} q={:.4} peak_db={:.4}",
            cfg.channel, an.f_peak, an.q, an.peak_db
        );
        entries.push((cfg.channel, rep));
    }
    let text = bank_to_csv(&entries).map_err(Failure::processing)?;
    write_text(&a.output, &text)?;
    if let Some(path) = &a.emit_config {
        write_text(path, &format_config(&Globals::default(), &bank))?;
    }
    println!("channels={} output={}", bank.len(), a.output.display());
    Ok(())
}

fn run_psd(a: PsdArgs) -> CliResult {
    let x = load_input(&a.input, a.input_scale)?;
    let rep = psd_report(&x, a.seg_len, a.overlap).map_err(Failure::processing)?;
    write_text(&a.output, &report_to_csv(&rep))?;
    println!(
        "bins={} df_hz={} output={}",
        rep.x.len(),
        rep.x.get(1).copied().unwrap_or(0.0) - rep.x[0],
        a.output.display()
    );
    Ok(())
}

fn run_sndr(a: SndrArgs) -> CliResult {
    let (_, cfgs) = load_validated_config(&a.config)?;
    let cfg = find_channel(&cfgs, a.channel)?;
    let seed = resolve_seed(a.seed, cfg.is_stochastic(), "the channel is stochastic")?;
    let amps = parse_grid(&a.amps).map_err(Failure::usage)?;
    let rep = sndr_vs_amplitude(cfg, a.f0, &amps, seed).map_err(Failure::processing)?;
    write_text(&a.output, &report_to_csv(&rep))?;
    let (i_best, best) = rep
        .y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite SNDR"))
        .expect("non-empty report");
    println!(
        "points={} sndr_peak_db={:.3} at_amp_dbv={:.3} output={}",
        rep.y.len(),
        best,
        rep.x[i_best],
        a.output.display()
    );
    Ok(())
}

fn run_rate(a: RateArgs) -> CliResult {
    let (_, cfgs) = load_validated_config(&a.config)?;
    let cfg = find_channel(&cfgs, a.channel)?;
    let amps = parse_grid(&a.amps).map_err(Failure::usage)?;
    let drive = if a.drive == "dc" {
        RateDrive::Dc
    } else if let Some(f) = a.drive.strip_prefix("tone:") {
        let f: f64 = f.parse().map_err(|_| {
            Failure::usage_msg(format!("bad tone frequency in --drive {:?}", a.drive))
        })?;
        RateDrive::Tone(f)
    } else {
        return Err(Failure::usage_msg(format!(
            "--drive must be \"dc\" or \"tone:FREQ_HZ\", got {:?}",
            a.drive
        )));
    };
    let (rep, fit) = rate_vs_amplitude(&cfg.pfm, &amps, drive).map_err(Failure::processing)?;
    write_text(&a.output, &report_to_csv(&rep))?;
    match fit {
        Some(fit) => println!(
            "points={} slope_hz_per_v={:.4} intercept_hz={:.4} r2={:.6} output={}",
            rep.y.len(),
            fit.slope,
            fit.intercept,
            fit.r_squared,
            a.output.display()
        ),
        None => println!(
            "points={} fit=none (fewer than two spiking points) output={}",
            rep.y.len(),
            a.output.display()
        ),
    }
    Ok(())
}
