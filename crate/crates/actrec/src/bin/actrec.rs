use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use actrec::dataset::ingest;
use actrec::model_file::ModelFile;
use actrec::pipeline::{cmd_classify, cmd_evaluate, cmd_train, TrainOptions};
use actrec::report;
use actrec::synth::{generate, SynthOptions};
use actrec_core::{Protocol, SegmentationParams};
use anyhow::Context;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "actrec", version, about = "Appearance-based activity recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        actors: usize,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        /// Frames per clip.
        #[arg(long, default_value_t = 40)]
        frames: usize,
    },
    /// Fit the eigenspace and gallery from a dataset directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Number of eigenspace features.
        #[arg(long)]
        d: usize,
        /// Comma-separated actor names; all actors when omitted.
        #[arg(long, value_delimiter = ',')]
        train_actors: Vec<String>,
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Background subtraction threshold in robust deviations.
        #[arg(long, default_value_t = 3.0)]
        k: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Label each window of a directory of frames.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a model on held-out actors.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated actor names; every actor not used for training when omitted.
        #[arg(long, value_delimiter = ',')]
        test_actors: Vec<String>,
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Writes `<out>.tsv` and `<out>.txt`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct ProtocolArgs {
    #[arg(long, default_value_t = 10.0)]
    fps: f64,
    #[arg(long, default_value_t = 1.0)]
    window_sec: f64,
}

impl From<ProtocolArgs> for Protocol {
    fn from(a: ProtocolArgs) -> Self {
        Protocol { fps: a.fps, window_sec: a.window_sec }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth { out, seed, actors, classes, frames } => {
            let opts = SynthOptions { seed, actors, classes, frames_per_clip: frames, ..SynthOptions::default() };
            generate(&out, &opts)?;
        }
        Command::Train { data, out, d, train_actors, protocol, k, seed } => {
            let protocol = Protocol::from(protocol);
            let manifest = ingest(&data, protocol.fps)?;
            let segmentation = SegmentationParams { k, ..SegmentationParams::default() };
            let model = cmd_train(&manifest, &TrainOptions { d, train_actors, protocol, segmentation, seed })?;
            model.save(&out)?;
            println!("d\t{}", model.subspace.d());
            println!("templates\t{}", model.subspace.gallery().len());
        }
        Command::Classify { model, frames, protocol, out } => {
            let model = ModelFile::load(&model)?;
            let lines: String =
                cmd_classify(&model, &frames, &protocol.into())?.iter().map(|w| w.to_line() + "\n").collect();
            match out {
                Some(path) => fs::write(&path, lines).with_context(|| path.display().to_string())?,
                None => print!("{lines}"),
            }
        }
        Command::Evaluate { model, data, test_actors, protocol, out, seed } => {
            let protocol = Protocol::from(protocol);
            let model = ModelFile::load(&model)?;
            let manifest = ingest(&data, protocol.fps)?;
            let rep = cmd_evaluate(&model, &manifest, &test_actors, &protocol, seed)?;
            let tsv = out.with_extension("tsv");
            let txt = out.with_extension("txt");
            fs::write(&tsv, report::to_tsv(&rep)).with_context(|| tsv.display().to_string())?;
            let table = report::to_table(&rep);
            fs::write(&txt, &table).with_context(|| txt.display().to_string())?;
            print!("{table}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("actrec: {e:#}");
            ExitCode::FAILURE
        }
    }
}
