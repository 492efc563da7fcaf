use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gloveforce_core::dataset::{self, PseudolabelOptions, Session};
use gloveforce_core::synth::{SceneScript, SessionScript};
use gloveforce_core::{Config, Error, Execution, Hand, Result};

/// Force-glove contact annotation: filtering, contact labels, clock sync and
/// contacted-object pseudolabels.
#[derive(Debug, Parser)]
#[command(name = "gloveforce", version)]
struct Cli {
    /// Config file (TOML keys). Falls back to $GLOVEFORCE_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Run every kernel on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Condition the raw glove logs into consolidated force signals.
    Filter { session: PathBuf },
    /// Derive per-sample contact states and segments.
    Label { session: PathBuf },
    /// Fit the glove-to-video clock.
    Sync(SyncArgs),
    /// Resample contact states onto video frames.
    Frames { session: PathBuf },
    /// Select the contacted object mask per hand and frame.
    Pseudolabel {
        session: PathBuf,
        /// Treat every observed hand as in contact on every frame.
        #[arg(long)]
        ignore_contact: bool,
        /// Frames whose rasters are held in memory at once.
        #[arg(long, default_value_t = 16)]
        batch: usize,
    },
    /// Frame statistics over a session or a corpus directory.
    Stats {
        corpus: PathBuf,
        /// Machine-readable output; defaults to corpus_stats.txt in the corpus directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic fixtures with ground truth.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Write per-sample traces for plotting.
    Plotdata { session: PathBuf },
    /// Audit a session or corpus.
    Validate { path: PathBuf },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
struct SyncSource {
    /// Two-column file of matched device/video event times.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Per-frame proxy signal (single-channel f32 raster, one value per frame).
    #[arg(long)]
    xcorr: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SyncArgs {
    session: PathBuf,
    #[command(flatten)]
    source: SyncSource,
    /// Hand whose force is correlated with the proxy.
    #[arg(long, requires = "xcorr")]
    hand: Option<Hand>,
}

#[derive(Debug, Subcommand)]
enum SynthCommand {
    /// Synthetic glove session (one hand per script).
    Session(SynthArgs),
    /// Synthetic scene rasters, poses and hand centroids.
    Scene(SynthArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    script: PathBuf,
    /// Session directory to write into.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Replace the script's seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn read_script(args: &SynthArgs) -> Result<String> {
    let text = std::fs::read_to_string(&args.script).map_err(|e| Error::io(&args.script, e))?;
    let Some(seed) = args.seed else {
        return Ok(text);
    };
    let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{}: {e}", args.script.display())))?;
    let seed = i64::try_from(seed).map_err(|_| Error::Config(format!("seed {seed} is out of range")))?;
    table.insert("seed".into(), toml::Value::Integer(seed));
    Ok(table.to_string())
}

fn corpus_dir(path: &Path) -> PathBuf {
    if path.is_file() {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    } else {
        path.to_path_buf()
    }
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    let config = || Config::load(Config::resolve_path(cli.config.as_deref()).as_deref(), &cli.set);
    match &cli.command {
        Command::Filter { session } => {
            let cfg = config()?;
            for s in dataset::filter(&mut Session::open(session)?, &cfg, exec)? {
                let quiet = if s.quiet { " (quiet session)" } else { "" };
                println!(
                    "{}: {} samples, {} excluded, dead channels {:?}{quiet}",
                    s.hand, s.samples, s.excluded, s.dead_channels
                );
            }
        }
        Command::Label { session } => {
            let cfg = config()?;
            for s in dataset::label(&mut Session::open(session)?, &cfg)? {
                println!("{}: {} segments, states {:?}", s.hand, s.segments, s.counts);
            }
        }
        Command::Sync(args) => {
            let cfg = config()?;
            let mut session = Session::open(&args.session)?;
            let m = match (&args.source.events, &args.source.xcorr) {
                (Some(ev), _) => dataset::sync_events(&mut session, &cfg, Some(ev))?,
                (None, Some(proxy)) => dataset::sync_xcorr(&mut session, &cfg, proxy, args.hand, exec)?,
                (None, None) => unreachable!("clap requires one source"),
            };
            println!(
                "clock: offset {} s, drift {}, residual rms {} s, method {}, quality {}",
                m.offset, m.drift, m.fit_residual_rms, m.method, m.quality
            );
        }
        Command::Frames { session } => {
            let cfg = config()?;
            for s in dataset::frames(&mut Session::open(session)?, &cfg)? {
                println!("{}: {} frames, states {:?}", s.hand, s.frames, s.counts);
            }
        }
        Command::Pseudolabel { session, ignore_contact, batch } => {
            let cfg = config()?;
            let opts = PseudolabelOptions { ignore_contact: *ignore_contact, batch_frames: *batch };
            let s = dataset::pseudolabel(&mut Session::open(session)?, &cfg, opts, exec)?;
            println!(
                "{} frames, {} in contact, {} accepted, status {:?}",
                s.frames, s.contact_pairs, s.accepted, s.by_status
            );
        }
        Command::Stats { corpus, out } => {
            let stats = dataset::stats(corpus)?;
            let out = out.clone().unwrap_or_else(|| corpus_dir(corpus).join("corpus_stats.txt"));
            stats.write(&out)?;
            println!("{stats}");
        }
        Command::Synth(SynthCommand::Session(args)) => {
            let script = SessionScript::from_toml_str(&read_script(args)?)?;
            let f = dataset::synth_session(&args.out, &script)?;
            println!(
                "{}: {} samples, {} frames, ground-truth frame contact fraction {:.4}",
                f.hand, f.samples, f.frames, f.frame_contact_fraction
            );
        }
        Command::Synth(SynthCommand::Scene(args)) => {
            let script = SceneScript::from_toml_str(&read_script(args)?)?;
            let f = dataset::synth_scene(&args.out, &script, exec)?;
            println!("{}: {} frames, {} with a contacted object", f.hand, f.frames, f.contacted_frames);
        }
        Command::Plotdata { session } => {
            let cfg = config()?;
            for p in dataset::plotdata(&mut Session::open(session)?, &cfg, exec)? {
                println!("{}", p.display());
            }
        }
        Command::Validate { path } => {
            let r = dataset::validate(path)?;
            println!(
                "ok: {} session(s), {} files, {} rasters, fingerprint {}",
                r.sessions,
                r.files_checked,
                r.rasters_checked,
                r.fingerprint.as_deref().unwrap_or("none")
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
