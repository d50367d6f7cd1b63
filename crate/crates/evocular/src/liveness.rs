//! Genuine-vs-replay classification and challenge–response decisions.
//!
//! The classifier is a deterministic linear-logistic model over the six
//! per-clip feature aggregates, trained by fixed-schedule full-batch
//! gradient descent from zero initialization so identical inputs always
//! yield bit-identical models. Features that are missing from any training
//! clip or carry zero variance are dropped up front and reported.
//!
//! A challenge session asks for one movement kind inside a response window;
//! the final decision is the strict conjunction "requested movement seen in
//! time AND clip classified genuine".

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{SegmentLabel, TemporalSegment};
use crate::stats::ClipFeatures;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LivenessError {
    #[error("training set must contain both classes")]
    OneClassOnly,
    #[error("clip lacks feature used in training: {0}")]
    MissingFeature(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Genuine,
    Replay,
}

/// Classifier output; higher score means more genuine-looking.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LivenessDecision {
    pub verdict: ClassLabel,
    pub score: f64,
}

/// The aggregate features the classifier can draw on, in canonical order.
pub const CANONICAL_FEATURES: [&str; 6] = [
    "event_rate_mean",
    "event_rate_std",
    "polarity_balance_mean",
    "polarity_balance_std",
    "median_pixel_iei_mean",
    "median_pixel_iei_std",
];

fn feature_value(features: &ClipFeatures, name: &str) -> Option<f64> {
    match name {
        "event_rate_mean" => Some(features.event_rate_mean),
        "event_rate_std" => Some(features.event_rate_std),
        "polarity_balance_mean" => features.polarity_balance_mean,
        "polarity_balance_std" => features.polarity_balance_std,
        "median_pixel_iei_mean" => features.median_pixel_iei_mean,
        "median_pixel_iei_std" => features.median_pixel_iei_std,
        _ => None,
    }
}

/// Linear-logistic model over z-scored clip features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureClassifier {
    feature_names: Vec<String>,
    means: Vec<f64>,
    stds: Vec<f64>,
    weights: Vec<f64>,
    bias: f64,
    threshold: f64,
}

impl FeatureClassifier {
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: f64) {
        assert!((0.0..=1.0).contains(&threshold), "threshold must lie in [0, 1]");
        self.threshold = threshold;
    }
}

/// A trained classifier plus the names of features excluded from it.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainResult {
    pub classifier: FeatureClassifier,
    /// Features dropped for zero variance or absence in some training clip.
    pub dropped_features: Vec<String>,
}

const GD_ITERATIONS: usize = 1_000;
const GD_STEP: f64 = 0.1;

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Trains the liveness classifier. Label convention: genuine = 1, replay = 0.
pub fn train_classifier(
    samples: &[(ClipFeatures, ClassLabel)],
) -> Result<TrainResult, LivenessError> {
    let has_genuine = samples.iter().any(|(_, l)| *l == ClassLabel::Genuine);
    let has_replay = samples.iter().any(|(_, l)| *l == ClassLabel::Replay);
    if !has_genuine || !has_replay {
        return Err(LivenessError::OneClassOnly);
    }
    let n = samples.len() as f64;

    // Select usable features: present in every clip, non-degenerate.
    let mut feature_names: Vec<String> = Vec::new();
    let mut dropped_features: Vec<String> = Vec::new();
    let mut means: Vec<f64> = Vec::new();
    let mut stds: Vec<f64> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for name in CANONICAL_FEATURES {
        let values: Vec<f64> =
            samples.iter().filter_map(|(f, _)| feature_value(f, name)).collect();
        if values.len() < samples.len() {
            dropped_features.push(name.to_string());
            continue;
        }
        // An identical-everywhere column has zero variance by definition;
        // testing constancy directly avoids the float dust a computed mean
        // would introduce. The std check below catches underflow cases that
        // cannot be standardized either way.
        if values.iter().all(|v| *v == values[0]) {
            dropped_features.push(name.to_string());
            continue;
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        if std == 0.0 {
            dropped_features.push(name.to_string());
            continue;
        }
        columns.push(values.iter().map(|v| (v - mean) / std).collect());
        feature_names.push(name.to_string());
        means.push(mean);
        stds.push(std);
    }

    let targets: Vec<f64> = samples
        .iter()
        .map(|(_, l)| if *l == ClassLabel::Genuine { 1.0 } else { 0.0 })
        .collect();

    let k = feature_names.len();
    let mut weights = vec![0.0f64; k];
    let mut bias = 0.0f64;
    for _ in 0..GD_ITERATIONS {
        let mut grad_w = vec![0.0f64; k];
        let mut grad_b = 0.0f64;
        for (i, &y) in targets.iter().enumerate() {
            let mut activation = bias;
            for (j, column) in columns.iter().enumerate() {
                activation += weights[j] * column[i];
            }
            let residual = logistic(activation) - y;
            for (j, column) in columns.iter().enumerate() {
                grad_w[j] += residual * column[i];
            }
            grad_b += residual;
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= GD_STEP * g / n;
        }
        bias -= GD_STEP * grad_b / n;
    }

    Ok(TrainResult {
        classifier: FeatureClassifier { feature_names, means, stds, weights, bias, threshold: 0.5 },
        dropped_features,
    })
}

/// Scores one clip; genuine iff score reaches the classifier's threshold.
pub fn classify(
    clf: &FeatureClassifier,
    features: &ClipFeatures,
) -> Result<LivenessDecision, LivenessError> {
    let mut activation = clf.bias;
    for (j, name) in clf.feature_names.iter().enumerate() {
        let raw = feature_value(features, name)
            .ok_or_else(|| LivenessError::MissingFeature(name.clone()))?;
        activation += clf.weights[j] * (raw - clf.means[j]) / clf.stds[j];
    }
    let score = logistic(activation);
    let verdict = if score >= clf.threshold { ClassLabel::Genuine } else { ClassLabel::Replay };
    Ok(LivenessDecision { verdict, score })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChallengeState {
    Awaiting,
    MovementOk,
    Passed,
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChallengeReason {
    Ok,
    NoMovement,
    LateMovement,
    WrongMovement,
    LivenessFailed,
}

/// One challenge–response round: the requested movement must begin inside
/// `[issued_at_us, deadline_us]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeSession {
    pub challenge: SegmentLabel,
    pub issued_at_us: u64,
    pub deadline_us: u64,
    pub state: ChallengeState,
}

impl ChallengeSession {
    pub const DEFAULT_DEADLINE_US: u64 = 3_000_000;

    pub fn new(challenge: SegmentLabel, issued_at_us: u64, deadline_us: u64) -> ChallengeSession {
        assert!(deadline_us > issued_at_us, "deadline must come after issue time");
        ChallengeSession { challenge, issued_at_us, deadline_us, state: ChallengeState::Awaiting }
    }

    /// Session with the stock 3 s response window.
    pub fn with_default_deadline(challenge: SegmentLabel, issued_at_us: u64) -> ChallengeSession {
        ChallengeSession::new(challenge, issued_at_us, issued_at_us + Self::DEFAULT_DEADLINE_US)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeOutcome {
    pub passed: bool,
    pub reason: ChallengeReason,
}

/// Resolves a session: pass iff a segment with the requested label begins
/// inside the response window AND the clip was classified genuine. The
/// session state walks awaiting → movement_ok → passed/failed.
pub fn run_challenge(
    session: &mut ChallengeSession,
    movements: &[TemporalSegment],
    liveness: &LivenessDecision,
) -> ChallengeOutcome {
    session.state = ChallengeState::Awaiting;
    let timely = movements.iter().any(|m| {
        m.label == session.challenge
            && m.onset_us >= session.issued_at_us
            && m.onset_us <= session.deadline_us
    });
    if timely {
        session.state = ChallengeState::MovementOk;
        return if liveness.verdict == ClassLabel::Genuine {
            session.state = ChallengeState::Passed;
            ChallengeOutcome { passed: true, reason: ChallengeReason::Ok }
        } else {
            session.state = ChallengeState::Failed;
            ChallengeOutcome { passed: false, reason: ChallengeReason::LivenessFailed }
        };
    }
    session.state = ChallengeState::Failed;
    let reason = if movements.is_empty() {
        ChallengeReason::NoMovement
    } else if movements.iter().all(|m| m.label != session.challenge) {
        ChallengeReason::WrongMovement
    } else {
        ChallengeReason::LateMovement
    };
    ChallengeOutcome { passed: false, reason }
}
