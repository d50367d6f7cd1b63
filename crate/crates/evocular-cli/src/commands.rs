//! The subcommand implementations. Data goes to files (or standard output
//! for reports); diagnostics go to standard error; every file is written
//! atomically.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use evocular::{
    biometric_metrics, classify, detect_ocular, match_segments, sae_frame, segmentation_metrics,
    synth_genuine, synth_replay, train_classifier, window_stats, BiometricReport, ChallengeSession,
    ClassLabel, ClipFeatures, ClipSpec, EventStream, FeatureClassifier, LivenessDecision, Polarity,
    ReplaySpec, TemporalSegment,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{
    ConvertArgs, DetectArgs, EvalMode, FeaturesArgs, LivenessArgs, SynthArgs, TrainArgs,
};
use crate::error::{invalid, CliError};
use crate::files::{
    load_json, load_roi, load_stream, save_json, save_stream, write_atomic, DecisionRow, Manifest,
};

const DEFAULT_WINDOW_MS: f64 = 33.0;
const DEFAULT_SAE_TAU_MS: f64 = 66.0;
const DEFAULT_SPLIT: f64 = 0.8;

fn window_us(window_ms: Option<f64>) -> Result<u64, CliError> {
    crate::files::ms_to_us("--window-ms", window_ms.unwrap_or(DEFAULT_WINDOW_MS))
}

#[derive(Serialize)]
struct StreamReport {
    events: usize,
    width: u16,
    height: u16,
    first_t_us: Option<u64>,
    last_t_us: Option<u64>,
    span_us: Option<u64>,
}

impl StreamReport {
    fn of(stream: &EventStream) -> StreamReport {
        StreamReport {
            events: stream.len(),
            width: stream.width(),
            height: stream.height(),
            first_t_us: stream.first_t(),
            last_t_us: stream.last_t(),
            span_us: stream.first_t().zip(stream.last_t()).map(|(a, b)| b - a),
        }
    }
}

pub fn cmd_convert(args: &ConvertArgs) -> Result<(), CliError> {
    let stream = load_stream(&args.input, args.width.zip(args.height))?;
    save_stream(&args.output, &stream)?;
    let report = serde_json::to_string(&StreamReport::of(&stream)).expect("report serializes");
    println!("{report}");
    Ok(())
}

#[derive(Serialize)]
struct SaeMeta {
    width: u16,
    height: u16,
    t_ref_us: u64,
    tau_us: f64,
}

pub fn cmd_features(args: &FeaturesArgs) -> Result<(), CliError> {
    let stream = load_stream(&args.input, args.width.zip(args.height))?;
    let roi = load_roi(&args.roi, &stream)?;
    let cropped = stream.crop(&roi)?;
    let windows = window_stats(&cropped, window_us(args.window_ms)?)?;
    let features = evocular::clip_features(&windows, roi.label)?;
    save_json(&args.output, &features)?;
    if let Some(path) = &args.windows_out {
        save_json(path, &windows)?;
    }
    if let Some(prefix) = &args.sae_prefix {
        let t_ref = match args.sae_t_ref_us.or_else(|| cropped.last_t()) {
            Some(t) => t,
            None => return Err(invalid("empty region: pass --sae-t-ref-us explicitly")),
        };
        let tau_us = crate::files::ms_to_us("--sae-tau-ms", args.sae_tau_ms.unwrap_or(DEFAULT_SAE_TAU_MS))? as f64;
        let frame = sae_frame(&cropped, t_ref, tau_us);
        let base = prefix.display();
        write_atomic(
            Path::new(&format!("{base}_on.csv")),
            frame.channel_csv(Polarity::On).as_bytes(),
        )?;
        write_atomic(
            Path::new(&format!("{base}_off.csv")),
            frame.channel_csv(Polarity::Off).as_bytes(),
        )?;
        let meta = SaeMeta {
            width: frame.width(),
            height: frame.height(),
            t_ref_us: frame.t_ref_us(),
            tau_us: frame.tau_us(),
        };
        save_json(Path::new(&format!("{base}_meta.json")), &meta)?;
    }
    Ok(())
}

pub fn cmd_detect(args: &DetectArgs) -> Result<(), CliError> {
    let config = args.detector.resolve()?;
    let stream = load_stream(&args.input, args.width.zip(args.height))?;
    let roi = load_roi(&args.roi, &stream)?;
    let cropped = stream.crop(&roi)?;

    if cropped.is_empty() {
        save_json(&args.segments_out, &Vec::<TemporalSegment>::new())?;
        if let Some(path) = &args.activity_csv {
            write_atomic(path, b"t_us,a_on,a_off,a_all\n")?;
        }
        return Ok(());
    }

    let det = detect_ocular(&cropped, &config)?;
    save_json(&args.segments_out, &det.segments)?;
    if let Some(path) = &args.activity_csv {
        let mut csv = String::from("t_us,a_on,a_off,a_all\n");
        let (on, off, all) = (det.a_on.values(), det.a_off.values(), det.a_all.values());
        for (i, &t) in det.a_on.times().iter().enumerate() {
            writeln!(csv, "{t},{},{},{}", on[i], off[i], all[i]).expect("string write");
        }
        write_atomic(path, csv.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DecisionOut {
    verdict: ClassLabel,
    score: f64,
    reason: String,
}

pub fn cmd_liveness(args: &LivenessArgs) -> Result<(), CliError> {
    let features: ClipFeatures = load_json(&args.features)?;
    let classifier: FeatureClassifier = load_json(&args.classifier)?;
    let decision = classify(&classifier, &features)?;

    let out = match args.challenge {
        None => DecisionOut {
            verdict: decision.verdict,
            score: decision.score,
            reason: "classifier".to_string(),
        },
        Some(kind) => {
            let segments: Vec<TemporalSegment> =
                load_json(args.segments.as_ref().expect("clap enforces --segments"))?;
            let issued_at = args.issued_at_us.expect("clap enforces --issued-at-us");
            let mut session = match args.deadline_us {
                Some(deadline) if deadline <= issued_at => {
                    return Err(invalid("--deadline-us: must come after --issued-at-us"));
                }
                Some(deadline) => ChallengeSession::new(kind.label(), issued_at, deadline),
                None => ChallengeSession::with_default_deadline(kind.label(), issued_at),
            };
            let outcome = evocular::run_challenge(&mut session, &segments, &decision);
            let reason = serde_json::to_value(outcome.reason)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .expect("reason serializes to a string");
            DecisionOut {
                verdict: if outcome.passed { ClassLabel::Genuine } else { ClassLabel::Replay },
                score: decision.score,
                reason,
            }
        }
    };
    save_json(&args.output, &out)
}

#[derive(Serialize)]
struct TrainReport {
    train_clips: usize,
    test_clips: usize,
    train_subjects: Option<Vec<String>>,
    test_subjects: Option<Vec<String>>,
    dropped_features: Vec<String>,
    metrics: BiometricReport,
}

/// Extracts features for every manifest clip, fanning the clips out over
/// the available cores; results come back in manifest order.
fn manifest_features(
    manifest: &Manifest,
    manifest_path: &Path,
    geometry: Option<(u16, u16)>,
    window: u64,
) -> Result<Vec<ClipFeatures>, CliError> {
    let n = manifest.clips.len();
    let workers = std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1).min(n).max(1);
    let mut slots: Vec<Option<Result<ClipFeatures, CliError>>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut out = Vec::new();
                    for i in (w..n).step_by(workers) {
                        let clip = &manifest.clips[i];
                        let path = manifest.resolve_path(manifest_path, clip);
                        let result = load_stream(&path, geometry)
                            .and_then(|stream| {
                                if !manifest.roi.fits(stream.width(), stream.height()) {
                                    return Err(invalid(format!(
                                        "{}: manifest roi does not fit the {}x{} sensor",
                                        path.display(),
                                        stream.width(),
                                        stream.height()
                                    )));
                                }
                                Ok(stream.crop(&manifest.roi)?)
                            })
                            .and_then(|cropped| Ok(window_stats(&cropped, window)?))
                            .and_then(|ws| Ok(evocular::clip_features(&ws, manifest.roi.label)?));
                        out.push((i, result));
                    }
                    out
                })
            })
            .collect();
        for handle in handles {
            for (i, result) in handle.join().expect("feature worker never panics") {
                slots[i] = Some(result);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every clip visited")).collect()
}

/// Clip indices for the train side. With subject keys the shuffle and the
/// ratio apply to unique subjects, keeping each subject wholly on one side.
fn split_train_indices(
    manifest: &Manifest,
    split: f64,
    seed: u64,
) -> Result<Vec<bool>, CliError> {
    if !(0.0..=1.0).contains(&split) || !split.is_finite() {
        return Err(invalid("--split: must lie in (0, 1)"));
    }
    let keyed = manifest.clips.iter().filter(|c| c.subject.is_some()).count();
    if keyed != 0 && keyed != manifest.clips.len() {
        return Err(invalid("manifest mixes clips with and without subject keys"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = |n: usize| -> Result<usize, CliError> {
        let k = (n as f64 * split).round() as usize;
        if k == 0 || k >= n {
            return Err(invalid(format!(
                "--split {split} leaves an empty side over {n} units"
            )));
        }
        Ok(k)
    };
    let mut is_train = vec![false; manifest.clips.len()];
    if keyed == 0 {
        let mut order: Vec<usize> = (0..manifest.clips.len()).collect();
        order.shuffle(&mut rng);
        for &i in order.iter().take(take(order.len())?) {
            is_train[i] = true;
        }
    } else {
        let subjects: BTreeSet<&str> =
            manifest.clips.iter().map(|c| c.subject.as_deref().expect("keyed")).collect();
        let mut order: Vec<&str> = subjects.into_iter().collect();
        order.shuffle(&mut rng);
        let chosen: BTreeSet<&str> = order.iter().copied().take(take(order.len())?).collect();
        for (i, clip) in manifest.clips.iter().enumerate() {
            is_train[i] = chosen.contains(clip.subject.as_deref().expect("keyed"));
        }
    }
    Ok(is_train)
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let manifest: Manifest = load_json(&args.manifest)?;
    if manifest.clips.is_empty() {
        return Err(invalid("manifest lists no clips"));
    }
    let window = window_us(args.window_ms)?;
    let features =
        manifest_features(&manifest, &args.manifest, args.width.zip(args.height), window)?;
    let is_train =
        split_train_indices(&manifest, args.split.unwrap_or(DEFAULT_SPLIT), args.seed.unwrap_or(0))?;

    let train_samples: Vec<(ClipFeatures, ClassLabel)> = features
        .iter()
        .zip(&manifest.clips)
        .zip(&is_train)
        .filter(|(_, train)| **train)
        .map(|((f, c), _)| (f.clone(), c.label))
        .collect();
    let trained = train_classifier(&train_samples)?;

    if let Some(report_path) = &args.report_out {
        let decisions: Vec<(LivenessDecision, ClassLabel)> = features
            .iter()
            .zip(&manifest.clips)
            .zip(&is_train)
            .filter(|(_, train)| !**train)
            .map(|((f, c), _)| Ok((classify(&trained.classifier, f)?, c.label)))
            .collect::<Result<_, CliError>>()?;
        let metrics = biometric_metrics(&decisions)?;
        let side = |train: bool| -> Option<Vec<String>> {
            let mut subjects: Vec<String> = manifest
                .clips
                .iter()
                .zip(&is_train)
                .filter(|(c, t)| **t == train && c.subject.is_some())
                .map(|(c, _)| c.subject.clone().expect("filtered on presence"))
                .collect();
            subjects.sort();
            subjects.dedup();
            if subjects.is_empty() { None } else { Some(subjects) }
        };
        let report = TrainReport {
            train_clips: is_train.iter().filter(|t| **t).count(),
            test_clips: is_train.iter().filter(|t| !**t).count(),
            train_subjects: side(true),
            test_subjects: side(false),
            dropped_features: trained.dropped_features.clone(),
            metrics,
        };
        save_json(report_path, &report)?;
    }
    save_json(&args.model_out, &trained.classifier)
}

fn emit_report<T: Serialize>(output: Option<&Path>, report: &T) -> Result<(), CliError> {
    match output {
        Some(path) => save_json(path, report),
        None => {
            println!("{}", serde_json::to_string(report).expect("report serializes"));
            Ok(())
        }
    }
}

pub fn cmd_eval(mode: &EvalMode) -> Result<(), CliError> {
    match mode {
        EvalMode::Segments { pred, gt, iou, output } => {
            let threshold = iou.unwrap_or(0.5);
            if !(threshold > 0.0 && threshold <= 1.0) {
                return Err(invalid("--iou: must lie in (0, 1]"));
            }
            let pred: Vec<TemporalSegment> = load_json(pred)?;
            let gt: Vec<TemporalSegment> = load_json(gt)?;
            let report = segmentation_metrics(&match_segments(&pred, &gt, threshold));
            emit_report(output.as_deref(), &report)
        }
        EvalMode::Liveness { decisions, output } => {
            let rows: Vec<DecisionRow> = load_json(decisions)?;
            let decisions: Vec<(LivenessDecision, ClassLabel)> = rows
                .iter()
                .map(|r| (LivenessDecision { verdict: r.verdict, score: r.score }, r.label))
                .collect();
            let report = biometric_metrics(&decisions)?;
            emit_report(output.as_deref(), &report)
        }
    }
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec: ClipSpec = load_json(&args.spec)?;
    let (stream, gt) = synth_genuine(&spec)?;
    save_stream(&args.output, &stream)?;
    if let Some(path) = &args.gt_out {
        save_json(path, &gt)?;
    }
    if let Some(path) = &args.replay_out {
        let replay_spec = ReplaySpec {
            fps: args.fps.unwrap_or_else(|| ReplaySpec::default().fps),
            brightness_factor: args.brightness.unwrap_or_else(|| ReplaySpec::default().brightness_factor),
            jitter_us: args.jitter_us.unwrap_or_else(|| ReplaySpec::default().jitter_us),
        };
        if replay_spec.fps == 0 {
            return Err(invalid("--fps: must be at least 1"));
        }
        if !(replay_spec.brightness_factor > 0.0 && replay_spec.brightness_factor <= 1.0) {
            return Err(invalid("--brightness: must lie in (0, 1]"));
        }
        let replay = synth_replay(&stream, &replay_spec, args.replay_seed.unwrap_or(0));
        save_stream(path, &replay)?;
    }
    Ok(())
}
