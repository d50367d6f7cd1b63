//! Command-line surface. Every duration flag takes milliseconds and is
//! converted to microseconds exactly once, here, before any work runs.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use evocular::{OcularConfig, SegmentLabel};

use crate::error::CliError;
use crate::files::{ms_to_us, ParamsFile};

#[derive(Parser)]
#[command(
    name = "evocular",
    about = "Event-camera ocular dynamics: conversion, detection, liveness, evaluation, synthesis",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Convert between the CSV and binary event formats and print a
    /// validation report (event count, time span, geometry) as JSON.
    Convert(ConvertArgs),
    /// Windowed statistics and per-clip features over a cropped region,
    /// with optional time-surface export.
    Features(FeaturesArgs),
    /// Blink and saccade segmentation; writes a segment JSON file and an
    /// activity CSV for plotting.
    Detect(DetectArgs),
    /// Classify one clip's features as genuine or replay, optionally
    /// combined with a challenge-response check over detected segments.
    Liveness(LivenessArgs),
    /// Train the liveness classifier from a labeled clip manifest.
    Train(TrainArgs),
    /// Score predictions: segmentation against ground truth, or labeled
    /// liveness decisions.
    Eval(EvalArgs),
    /// Generate a synthetic genuine clip (and optionally its replay) from
    /// a clip spec JSON.
    Synth(SynthArgs),
}

#[derive(Args)]
pub struct ConvertArgs {
    /// Input stream (binary sniffed by magic, anything else parsed as CSV).
    #[arg(long)]
    pub input: PathBuf,
    /// Output stream; `.csv` writes text, any other extension binary.
    #[arg(long)]
    pub output: PathBuf,
    /// Sensor width, required for CSV input [binary input carries its own].
    #[arg(long)]
    pub width: Option<u16>,
    /// Sensor height, required for CSV input.
    #[arg(long)]
    pub height: Option<u16>,
}

#[derive(Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Region-of-interest JSON ({"x0","y0","w","h","label"}).
    #[arg(long)]
    pub roi: PathBuf,
    /// Statistics window length in ms [default: 33].
    #[arg(long)]
    pub window_ms: Option<f64>,
    /// Clip-features JSON output.
    #[arg(long)]
    pub output: PathBuf,
    /// Optional per-window statistics JSON output.
    #[arg(long)]
    pub windows_out: Option<PathBuf>,
    /// Optional time-surface export prefix; writes <prefix>_on.csv,
    /// <prefix>_off.csv and <prefix>_meta.json.
    #[arg(long)]
    pub sae_prefix: Option<PathBuf>,
    /// Time-surface reference time [default: last event].
    #[arg(long)]
    pub sae_t_ref_us: Option<u64>,
    /// Time-surface decay constant in ms [default: 66].
    #[arg(long)]
    pub sae_tau_ms: Option<f64>,
    /// Sensor width for CSV input.
    #[arg(long)]
    pub width: Option<u16>,
    /// Sensor height for CSV input.
    #[arg(long)]
    pub height: Option<u16>,
}

#[derive(Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Region-of-interest JSON; detection runs on the cropped stream.
    #[arg(long)]
    pub roi: PathBuf,
    /// Segment JSON output (blinks and saccades, sorted by onset).
    #[arg(long)]
    pub segments_out: PathBuf,
    /// Optional activity CSV output (t_us,a_on,a_off,a_all).
    #[arg(long)]
    pub activity_csv: Option<PathBuf>,
    /// Sensor width for CSV input.
    #[arg(long)]
    pub width: Option<u16>,
    /// Sensor height for CSV input.
    #[arg(long)]
    pub height: Option<u16>,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

/// Detector knobs. Resolution order: library defaults, then `--params`
/// file, then explicit flags.
#[derive(Args)]
pub struct DetectorArgs {
    /// Activity decay constant in ms [default: 10].
    #[arg(long)]
    pub tau_ms: Option<f64>,
    /// Uniform resampling step in ms [default: 2].
    #[arg(long)]
    pub dt_ms: Option<f64>,
    /// Detector parameter JSON ({"blink":{..},"saccade":{..}}, _ms or _us
    /// spellings).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Blink smoothing sigma in ms [default: 12].
    #[arg(long)]
    pub blink_sigma_ms: Option<f64>,
    /// Closing-peak prominence threshold [default: 0.5].
    #[arg(long)]
    pub pos_prominence: Option<f64>,
    /// Reopening-peak prominence threshold [default: 0.3].
    #[arg(long)]
    pub neg_prominence: Option<f64>,
    /// Blink gate search window in ms [default: 300].
    #[arg(long)]
    pub search_window_ms: Option<f64>,
    /// Saccade peak prominence threshold [default: 0.6].
    #[arg(long)]
    pub saccade_threshold: Option<f64>,
    /// Minimum saccade peak width in ms [default: 20].
    #[arg(long)]
    pub saccade_min_width_ms: Option<f64>,
    /// Maximum saccade peak width in ms [default: 150].
    #[arg(long)]
    pub saccade_max_width_ms: Option<f64>,
    /// Minimum emitted segment length in ms [default: 20].
    #[arg(long)]
    pub min_segment_ms: Option<f64>,
}

impl DetectorArgs {
    pub fn resolve(&self) -> Result<OcularConfig, CliError> {
        let mut config = OcularConfig::default();
        if let Some(path) = &self.params {
            let file: ParamsFile = crate::files::load_json(path)?;
            if let Some(blink) = file.blink {
                config.blink = blink.apply(config.blink)?;
            }
            if let Some(saccade) = file.saccade {
                config.saccade = saccade.apply(config.saccade)?;
            }
        }
        if let Some(ms) = self.tau_ms {
            config.tau_us = ms_to_us("--tau-ms", ms)? as f64;
        }
        if let Some(ms) = self.dt_ms {
            config.dt_us = ms_to_us("--dt-ms", ms)?;
        }
        if let Some(ms) = self.blink_sigma_ms {
            config.blink.gaussian_sigma_us = ms_to_us("--blink-sigma-ms", ms)? as f64;
        }
        if let Some(v) = self.pos_prominence {
            config.blink.pos_prominence = v;
        }
        if let Some(v) = self.neg_prominence {
            config.blink.neg_prominence = v;
        }
        if let Some(ms) = self.search_window_ms {
            config.blink.search_window_us = ms_to_us("--search-window-ms", ms)?;
        }
        if let Some(v) = self.saccade_threshold {
            config.saccade.peak_threshold = v;
        }
        if let Some(ms) = self.saccade_min_width_ms {
            config.saccade.min_width_us = ms_to_us("--saccade-min-width-ms", ms)?;
        }
        if let Some(ms) = self.saccade_max_width_ms {
            config.saccade.max_width_us = ms_to_us("--saccade-max-width-ms", ms)?;
        }
        if let Some(ms) = self.min_segment_ms {
            config.saccade.min_segment_us = ms_to_us("--min-segment-ms", ms)?;
        }
        Ok(config)
    }
}

#[derive(Args)]
pub struct LivenessArgs {
    /// Clip-features JSON (as written by `features`).
    #[arg(long)]
    pub features: PathBuf,
    /// Trained classifier JSON.
    #[arg(long)]
    pub classifier: PathBuf,
    /// Decision JSON output ({"verdict","score","reason"}).
    #[arg(long)]
    pub output: PathBuf,
    /// Segment JSON (as written by `detect`); required for challenges.
    #[arg(long, requires = "challenge")]
    pub segments: Option<PathBuf>,
    /// Challenge movement the subject must perform.
    #[arg(long, value_enum, requires_all = ["segments", "issued_at_us"])]
    pub challenge: Option<ChallengeKind>,
    /// Challenge issue time within the clip.
    #[arg(long, requires = "challenge")]
    pub issued_at_us: Option<u64>,
    /// Challenge response deadline [default: issue time + 3s].
    #[arg(long, requires = "challenge")]
    pub deadline_us: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ChallengeKind {
    Blink,
    Saccade,
}

impl ChallengeKind {
    pub fn label(self) -> SegmentLabel {
        match self {
            ChallengeKind::Blink => SegmentLabel::Blink,
            ChallengeKind::Saccade => SegmentLabel::Saccade,
        }
    }
}

#[derive(Args)]
pub struct TrainArgs {
    /// Manifest JSON: {"roi":{..},"clips":[{"path","subject","label"},..]}.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Trained classifier JSON output.
    #[arg(long)]
    pub model_out: PathBuf,
    /// Optional held-out evaluation report JSON output.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    /// Training fraction of the split [default: 0.8].
    #[arg(long)]
    pub split: Option<f64>,
    /// Split shuffle seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Statistics window length in ms [default: 33].
    #[arg(long)]
    pub window_ms: Option<f64>,
    /// Sensor width for CSV clips.
    #[arg(long)]
    pub width: Option<u16>,
    /// Sensor height for CSV clips.
    #[arg(long)]
    pub height: Option<u16>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[command(subcommand)]
    pub mode: EvalMode,
}

#[derive(Subcommand)]
pub enum EvalMode {
    /// Match predicted segments against ground truth and report per-class
    /// precision/recall/F1.
    Segments {
        /// Predicted segment JSON.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth segment JSON.
        #[arg(long)]
        gt: PathBuf,
        /// IoU threshold in (0, 1] [default: 0.5].
        #[arg(long)]
        iou: Option<f64>,
        /// Report JSON output [default: standard output].
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute top-1 accuracy and APCER/BPCER/ACER from labeled decisions.
    Liveness {
        /// Decision JSON: [{"verdict","score","label"},..].
        #[arg(long)]
        decisions: PathBuf,
        /// Report JSON output [default: standard output].
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
pub struct SynthArgs {
    /// Clip spec JSON (geometry, movements, noise rate, seed).
    #[arg(long)]
    pub spec: PathBuf,
    /// Genuine stream output; `.csv` writes text, else binary.
    #[arg(long)]
    pub output: PathBuf,
    /// Ground-truth segment JSON output.
    #[arg(long)]
    pub gt_out: Option<PathBuf>,
    /// Also write a frame-quantized replay of the generated clip here.
    #[arg(long)]
    pub replay_out: Option<PathBuf>,
    /// Replay frame rate [default: 50].
    #[arg(long, requires = "replay_out")]
    pub fps: Option<u32>,
    /// Replay event survival probability in (0, 1] [default: 0.6].
    #[arg(long, requires = "replay_out")]
    pub brightness: Option<f64>,
    /// Uniform replay timing jitter bound [default: 0].
    #[arg(long, requires = "replay_out")]
    pub jitter_us: Option<u64>,
    /// Seed for replay jitter and thinning [default: 0].
    #[arg(long, requires = "replay_out")]
    pub replay_seed: Option<u64>,
}
