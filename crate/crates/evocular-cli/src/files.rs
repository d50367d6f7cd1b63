//! File I/O: atomic writes, event-stream loading with format sniffing, and
//! the JSON document types the subcommands exchange.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use evocular::{
    parse_binary, parse_csv, serialize_binary, serialize_csv, BlinkParams, ClassLabel, EventStream,
    RegionOfInterest, SaccadeParams,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CliError};

/// Magic prefix of the binary event format.
const BINARY_MAGIC: &[u8; 4] = b"EVT0";

fn file_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::File { path: path.display().to_string(), source }
}

/// Writes via a temp file in the target directory plus rename, so readers
/// never observe a partially written file. The temp name carries the pid
/// and a process-wide counter to stay unique under parallel writers.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| invalid(format!("{}: not a file path", path.display())))?;
    let tmp: PathBuf = dir.join(format!(
        ".{}.tmp.{}.{}",
        name.to_string_lossy(),
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, bytes).map_err(file_error(&tmp))?;
    fs::rename(&tmp, path).map_err(file_error(path))
}

/// Loads an event stream, sniffing the binary magic; anything else is
/// parsed as CSV, which needs the sensor geometry supplied by the caller.
pub fn load_stream(path: &Path, csv_geometry: Option<(u16, u16)>) -> Result<EventStream, CliError> {
    let bytes = fs::read(path).map_err(file_error(path))?;
    if bytes.starts_with(BINARY_MAGIC) {
        return Ok(parse_binary(&bytes)?);
    }
    let (width, height) = csv_geometry.ok_or_else(|| {
        invalid(format!(
            "{}: CSV input carries no geometry; pass --width and --height",
            path.display()
        ))
    })?;
    let text = String::from_utf8(bytes)
        .map_err(|e| invalid(format!("{}: not valid UTF-8 ({e})", path.display())))?;
    Ok(parse_csv(&text, width, height)?)
}

/// Encodes by output extension: `.csv` (case-insensitive) for text, binary
/// for everything else.
pub fn save_stream(path: &Path, stream: &EventStream) -> Result<(), CliError> {
    let csv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    let bytes = if csv { serialize_csv(stream).into_bytes() } else { serialize_binary(stream) };
    write_atomic(path, &bytes)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path).map_err(file_error(path))?;
    serde_json::from_slice(&bytes)
        .map_err(|source| CliError::Json { path: path.display().to_string(), source })
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|source| CliError::Json { path: path.display().to_string(), source })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Region file with a `fits` check against the stream it will crop.
pub fn load_roi(path: &Path, stream: &EventStream) -> Result<RegionOfInterest, CliError> {
    let roi: RegionOfInterest = load_json(path)?;
    if !roi.fits(stream.width(), stream.height()) {
        return Err(invalid(format!(
            "{}: roi ({},{}) {}x{} empty or outside the {}x{} sensor",
            path.display(),
            roi.x0,
            roi.y0,
            roi.w,
            roi.h,
            stream.width(),
            stream.height()
        )));
    }
    Ok(roi)
}

/// Batch input: one region applied to every clip, plus per-clip class
/// labels and optional subject keys for disjoint splitting.
#[derive(Clone, Debug, Deserialize)]
pub struct Manifest {
    pub roi: RegionOfInterest,
    pub clips: Vec<ManifestClip>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ManifestClip {
    /// Relative paths resolve against the manifest's directory.
    pub path: String,
    pub subject: Option<String>,
    pub label: ClassLabel,
}

impl Manifest {
    pub fn resolve_path(&self, manifest_path: &Path, clip: &ManifestClip) -> PathBuf {
        let p = Path::new(&clip.path);
        if p.is_absolute() {
            return p.to_path_buf();
        }
        match manifest_path.parent() {
            Some(dir) if !dir.as_os_str().is_empty() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }
}

/// One labeled classifier decision, as consumed by `eval liveness`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DecisionRow {
    pub verdict: ClassLabel,
    pub score: f64,
    /// The true class of the sample.
    pub label: ClassLabel,
}

/// Detector parameter file mirroring `BlinkParams`/`SaccadeParams`; every
/// knob also accepts an `_ms` convenience spelling, converted on load.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub blink: Option<BlinkParamsFile>,
    pub saccade: Option<SaccadeParamsFile>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlinkParamsFile {
    pub gaussian_sigma_us: Option<f64>,
    pub gaussian_sigma_ms: Option<f64>,
    pub pos_prominence: Option<f64>,
    pub neg_prominence: Option<f64>,
    pub search_window_us: Option<u64>,
    pub search_window_ms: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaccadeParamsFile {
    pub peak_threshold: Option<f64>,
    pub min_width_us: Option<u64>,
    pub min_width_ms: Option<f64>,
    pub max_width_us: Option<u64>,
    pub max_width_ms: Option<f64>,
    pub min_segment_us: Option<u64>,
    pub min_segment_ms: Option<f64>,
}

/// Milliseconds to integer microseconds, rejecting anything that does not
/// round to a positive count.
pub fn ms_to_us(name: &str, ms: f64) -> Result<u64, CliError> {
    if !ms.is_finite() || ms <= 0.0 {
        return Err(invalid(format!("{name}: must be a positive, finite millisecond value")));
    }
    let us = (ms * 1_000.0).round() as u64;
    if us == 0 {
        return Err(invalid(format!("{name}: {ms} ms rounds below 1 µs")));
    }
    Ok(us)
}

fn pick_us(
    name: &str,
    us: Option<u64>,
    ms: Option<f64>,
    default: u64,
) -> Result<u64, CliError> {
    match (us, ms) {
        (Some(_), Some(_)) => {
            Err(invalid(format!("{name}: give either the _us or the _ms field, not both")))
        }
        (Some(v), None) => Ok(v),
        (None, Some(v)) => ms_to_us(name, v),
        (None, None) => Ok(default),
    }
}

impl BlinkParamsFile {
    pub fn apply(&self, base: BlinkParams) -> Result<BlinkParams, CliError> {
        let sigma = match (self.gaussian_sigma_us, self.gaussian_sigma_ms) {
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "gaussian_sigma: give either the _us or the _ms field, not both",
                ))
            }
            (Some(v), None) => v,
            (None, Some(v)) => ms_to_us("gaussian_sigma_ms", v)? as f64,
            (None, None) => base.gaussian_sigma_us,
        };
        Ok(BlinkParams {
            gaussian_sigma_us: sigma,
            pos_prominence: self.pos_prominence.unwrap_or(base.pos_prominence),
            neg_prominence: self.neg_prominence.unwrap_or(base.neg_prominence),
            search_window_us: pick_us(
                "search_window",
                self.search_window_us,
                self.search_window_ms,
                base.search_window_us,
            )?,
        })
    }
}

impl SaccadeParamsFile {
    pub fn apply(&self, base: SaccadeParams) -> Result<SaccadeParams, CliError> {
        Ok(SaccadeParams {
            peak_threshold: self.peak_threshold.unwrap_or(base.peak_threshold),
            min_width_us: pick_us("min_width", self.min_width_us, self.min_width_ms, base.min_width_us)?,
            max_width_us: pick_us("max_width", self.max_width_us, self.max_width_ms, base.max_width_us)?,
            min_segment_us: pick_us(
                "min_segment",
                self.min_segment_us,
                self.min_segment_ms,
                base.min_segment_us,
            )?,
        })
    }
}
