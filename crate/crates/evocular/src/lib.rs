//! Event-camera ocular dynamics for replay-attack liveness checks.
//!
//! The crate covers the full chain from raw sensor events to a pass/fail
//! challenge decision:
//!
//! 1. [`event`] / [`format`] — bounded event streams, region cropping, time
//!    slicing, and the binary/CSV wire formats.
//! 2. [`activity`], [`surface`], [`voxel`], [`stats`] — temporal activity
//!    profiles, time-surface frames, voxel grids, and windowed statistics
//!    aggregated into per-clip features.
//! 3. [`detect`] — blink and saccade segmentation on activity profiles, plus
//!    blink suppression so saccade peaks are not masked by eyelid motion.
//! 4. [`liveness`] — a small deterministic linear classifier over clip
//!    features and the challenge–response decision logic.
//! 5. [`eval`] — temporal-IoU segment matching and biometric error rates.
//! 6. [`synth`] — seeded synthetic genuine clips and their frame-quantized
//!    replay counterparts, used as the test oracle for everything above.
//!
//! [`pipeline`] wires steps 2–3 together the way the CLI consumes them.

pub mod activity;
pub mod detect;
pub mod eval;
pub mod event;
pub mod format;
pub mod liveness;
pub mod pipeline;
pub mod signal;
pub mod stats;
pub mod surface;
pub mod synth;
pub mod voxel;

pub use activity::{
    activity_profile, resample_activity, resample_activity_over, ActivityError, ActivitySeries,
    Channel,
};
pub use detect::{
    detect_blinks, detect_saccades, fit_blink_window, gaussian_smooth, suppress_blinks,
    BlinkParams, DetectError, SaccadeParams, SegmentLabel, TemporalSegment,
};
pub use eval::{
    biometric_metrics, harmonic_f1, match_segments, segmentation_metrics, temporal_iou,
    BiometricReport, EvalError, MatchResult, SegmentationReport,
};
pub use event::{Event, EventError, EventStream, Polarity, RegionOfInterest, RoiLabel};
pub use format::{
    parse_binary, parse_binary_lenient, parse_csv, parse_csv_lenient, serialize_binary,
    serialize_csv,
};
pub use liveness::{
    classify, run_challenge, train_classifier, ChallengeOutcome, ChallengeReason,
    ChallengeSession, ChallengeState, ClassLabel, FeatureClassifier, LivenessDecision,
    LivenessError, TrainResult,
};
pub use pipeline::{detect_ocular, OcularConfig, OcularDetection};
pub use stats::{clip_features, window_stats, ClipFeatures, StatsError, WindowStats};
pub use surface::{sae_frame, SaeFrame};
pub use synth::{synth_genuine, synth_replay, ClipSpec, ReplaySpec, ScriptedMovement, SynthError};
pub use voxel::{voxel_grid, VoxelError, VoxelGrid};
