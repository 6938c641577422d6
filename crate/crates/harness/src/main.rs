use std::net::{IpAddr, SocketAddr, ToSocketAddrs};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use matrix_core::exec::Exec;
use matrix_core::mapping::SynthMode;
use matrix_core::protocol::{measure_latency, ProbeOptions, DEFAULT_OSC_PORT};
use matrix_core::surface::Axis;
use matrix_harness::capture::{decode_capture, CaptureFormat};
use matrix_harness::scriptgen::{generate_script, ScriptKind, ScriptParams};
use matrix_harness::serve::{ServeOptions, Server};
use matrix_harness::{run_render, SessionConfig};
use tracing_subscriber::EnvFilter;

/// Remote-operation bound on round-trip latency.
const LATENCY_LIMIT_MS: f64 = 500.0;
/// Exit status when the probe succeeds but breaks the latency bound.
const EXIT_TOO_SLOW: u8 = 3;

#[derive(Parser)]
#[command(name = "matrix", version, about = "12x12 rod controller: simulate, transport, map, render")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scripted session to a WAV file and a JSON report.
    Render {
        #[arg(long)]
        config: PathBuf,
        /// Disable data-parallel rendering.
        #[arg(long)]
        sequential: bool,
    },
    /// Serve a live session over WebSocket, forwarding frames over OSC.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// host:port that receives /matrix/frame packets.
        #[arg(long)]
        osc_dest: Option<String>,
        /// UDP port answering /matrix/ping.
        #[arg(long, default_value_t = DEFAULT_OSC_PORT)]
        osc_port: u16,
        /// Live session config; flags given here override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Source WAV; enables granular mode.
        #[arg(long)]
        source: Option<PathBuf>,
    },
    /// Probe round-trip latency to a peer answering /matrix/ping.
    Latency {
        #[arg(long)]
        dest: String,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
        probes: u32,
        #[arg(long, default_value_t = 5)]
        interval_ms: u64,
        #[arg(long, default_value_t = 1000)]
        timeout_ms: u64,
        /// Also write the stats here as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a gesture script of a canned kind.
    GenScript {
        #[arg(long, value_enum)]
        kind: ScriptKind,
        #[arg(long, default_value_t = 10_000)]
        duration_ms: u64,
        #[arg(long, default_value_t = 0.5)]
        freq: f64,
        #[arg(long, default_value_t = 127.0)]
        amplitude: f64,
        #[arg(long, value_enum, default_value = "col")]
        axis: AxisArg,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phase: f64,
        /// Rod pressed by `press`.
        #[arg(long, default_value_t = 0)]
        rod: usize,
        #[arg(long, default_value_t = 127)]
        value: u8,
        #[arg(long, default_value_t = 0)]
        start_ms: u64,
        #[arg(long, default_value_t = 500)]
        hold_ms: u64,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode a captured byte stream.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "frames")]
        format: CaptureFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Additive,
    Granular,
    Drums,
}

impl From<ModeArg> for SynthMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Additive => SynthMode::Additive,
            ModeArg::Granular => SynthMode::Granular,
            ModeArg::Drums => SynthMode::Drums,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Row,
    Col,
}

fn resolve(addr: &str) -> Result<SocketAddr> {
    addr.to_socket_addrs()
        .with_context(|| format!("resolving {addr}"))?
        .next()
        .with_context(|| format!("{addr} resolves to nothing"))
}

fn render(config: PathBuf, sequential: bool) -> Result<ExitCode> {
    let cfg = SessionConfig::load(&config)?;
    let exec = if sequential { Exec::Sequential } else { Exec::default() };
    let report = run_render(&cfg, exec)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn serve(
    port: u16,
    bind: IpAddr,
    osc_dest: Option<String>,
    osc_port: u16,
    config: Option<PathBuf>,
    mode: Option<ModeArg>,
    source: Option<PathBuf>,
) -> Result<ExitCode> {
    let mut opts = ServeOptions {
        bind,
        port,
        osc_port,
        ..Default::default()
    };
    let mut dest = osc_dest;
    let mut source = source;
    if let Some(path) = config {
        let cfg = SessionConfig::load(&path)?;
        if !cfg.live {
            bail!("{} is not a live session config", path.display());
        }
        opts.mode = cfg.mapping.mode;
        opts.port = cfg.serve_port.unwrap_or(port);
        dest = dest.or(cfg.osc_destination);
        source = source.or(cfg.source);
    }
    if let Some(m) = mode {
        opts.mode = m.into();
    }
    if let Some(p) = &source {
        matrix_core::synth::read_wav(p).with_context(|| format!("loading {}", p.display()))?;
        opts.granular_source = true;
    }
    if opts.mode == SynthMode::Granular && !opts.granular_source {
        bail!("granular mode needs --source");
    }
    opts.osc_dest = dest.as_deref().map(resolve).transpose()?;

    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let server = Server::start(opts).await?;
        eprintln!(
            "ws://{}/ws  ping udp {}  (ctrl-c to stop)",
            server.http_addr(),
            server.osc_addr()
        );
        tokio::signal::ctrl_c().await?;
        server.shutdown().await;
        Ok(ExitCode::SUCCESS)
    })
}

fn latency(dest: String, probes: u32, interval_ms: u64, timeout_ms: u64, report: Option<PathBuf>) -> Result<ExitCode> {
    let addr = resolve(&dest)?;
    let opts = ProbeOptions {
        interval: Duration::from_millis(interval_ms),
        timeout: Duration::from_millis(timeout_ms),
    };
    let stats = measure_latency(addr, probes as usize, opts)?;
    let json = serde_json::to_string_pretty(&stats)?;
    println!("{json}");
    if let Some(path) = report {
        std::fs::write(&path, &json).with_context(|| format!("writing {}", path.display()))?;
    }
    if stats.median_ms >= LATENCY_LIMIT_MS {
        eprintln!(
            "error: median round trip {:.1} ms is not under {LATENCY_LIMIT_MS} ms",
            stats.median_ms
        );
        return Ok(ExitCode::from(EXIT_TOO_SLOW));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Render { config, sequential } => render(config, sequential),
        Command::Serve {
            port,
            bind,
            osc_dest,
            osc_port,
            config,
            mode,
            source,
        } => serve(port, bind, osc_dest, osc_port, config, mode, source),
        Command::Latency {
            dest,
            probes,
            interval_ms,
            timeout_ms,
            report,
        } => latency(dest, probes, interval_ms, timeout_ms, report),
        Command::GenScript {
            kind,
            duration_ms,
            freq,
            amplitude,
            axis,
            phase,
            rod,
            value,
            start_ms,
            hold_ms,
            out,
        } => {
            let params = ScriptParams {
                duration_ms,
                freq_hz: freq,
                amplitude,
                axis: match axis {
                    AxisArg::Row => Axis::Row,
                    AxisArg::Col => Axis::Col,
                },
                phase,
                rod,
                value,
                start_ms,
                hold_ms,
            };
            let json = generate_script(kind, &params)?.to_json_pretty();
            match out {
                Some(path) => std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?,
                None => println!("{json}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Decode { input, format } => {
            let bytes = std::fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            println!("{}", serde_json::to_string_pretty(&decode_capture(&bytes, format))?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("MATRIX_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
