//! Timestamp synchronization: heterogeneous sensor streams are interpolated
//! onto one uniform timeline inside their common window. No extrapolation —
//! samples outside the overlap are discarded.

use thiserror::Error;

use crate::transform::{slerp_shortest, RigidTransform};

#[derive(Debug, Error)]
pub enum SyncError {
    #[error("streams share no usable window (start {start}, end {end}, need >= {min_span} s)")]
    EmptyOverlap { start: f64, end: f64, min_span: f64 },
    #[error("stream `{stream}` timestamps not strictly increasing at index {index}")]
    NonMonotonicTimestamps { stream: String, index: usize },
    #[error("stream `{stream}` has {timestamps} timestamps but {samples} samples")]
    SampleCountMismatch {
        stream: String,
        timestamps: usize,
        samples: usize,
    },
    #[error("resampling rate must be positive, got {0}")]
    BadRate(f64),
    #[error("stream `{0}` is empty")]
    EmptyStream(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Pose,
    Joint,
    Tactile,
    Scalar,
}

impl StreamKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamKind::Pose => "pose",
            StreamKind::Joint => "joint",
            StreamKind::Tactile => "tactile",
            StreamKind::Scalar => "scalar",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pose" => Some(StreamKind::Pose),
            "joint" => Some(StreamKind::Joint),
            "tactile" => Some(StreamKind::Tactile),
            "scalar" => Some(StreamKind::Scalar),
            _ => None,
        }
    }
}

/// Per-kind sample storage.
#[derive(Debug, Clone)]
pub enum StreamPayload {
    Pose(Vec<RigidTransform>),
    /// One vector per sample (joint values, rad or m).
    Joint(Vec<Vec<f64>>),
    /// One vector per sample, every entry in [0, 1].
    Tactile(Vec<Vec<f64>>),
    Scalar(Vec<f64>),
}

impl StreamPayload {
    pub fn len(&self) -> usize {
        match self {
            StreamPayload::Pose(v) => v.len(),
            StreamPayload::Joint(v) => v.len(),
            StreamPayload::Tactile(v) => v.len(),
            StreamPayload::Scalar(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> StreamKind {
        match self {
            StreamPayload::Pose(_) => StreamKind::Pose,
            StreamPayload::Joint(_) => StreamKind::Joint,
            StreamPayload::Tactile(_) => StreamKind::Tactile,
            StreamPayload::Scalar(_) => StreamKind::Scalar,
        }
    }
}

/// A named, timestamped sample sequence.
#[derive(Debug, Clone)]
pub struct TimedStream {
    pub name: String,
    /// Strictly increasing, seconds.
    pub timestamps: Vec<f64>,
    pub payload: StreamPayload,
}

impl TimedStream {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn kind(&self) -> StreamKind {
        self.payload.kind()
    }

    pub fn validate(&self) -> Result<(), SyncError> {
        if self.timestamps.is_empty() {
            return Err(SyncError::EmptyStream(self.name.clone()));
        }
        if self.timestamps.len() != self.payload.len() {
            return Err(SyncError::SampleCountMismatch {
                stream: self.name.clone(),
                timestamps: self.timestamps.len(),
                samples: self.payload.len(),
            });
        }
        for (i, pair) in self.timestamps.windows(2).enumerate() {
            if pair[1] <= pair[0] {
                return Err(SyncError::NonMonotonicTimestamps {
                    stream: self.name.clone(),
                    index: i + 1,
                });
            }
        }
        Ok(())
    }
}

/// Translation lerp + shortest-arc rotation slerp; endpoints exact.
pub fn interpolate_pose(a: &RigidTransform, b: &RigidTransform, u: f64) -> RigidTransform {
    if u == 0.0 {
        return *a;
    }
    if u == 1.0 {
        return *b;
    }
    let t = a.translation() * (1.0 - u) + b.translation() * u;
    RigidTransform::new(slerp_shortest(a.rotation(), b.rotation(), u), t)
}

fn lerp_vec(a: &[f64], b: &[f64], u: f64) -> Vec<f64> {
    if u == 0.0 {
        return a.to_vec();
    }
    if u == 1.0 {
        return b.to_vec();
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| x * (1.0 - u) + y * u)
        .collect()
}

/// Locate `t` in the stream's timeline and return (segment index, fraction).
fn locate(timestamps: &[f64], t: f64) -> (usize, f64) {
    // partition_point gives the first index with ts > t.
    let hi = timestamps.partition_point(|&ts| ts <= t);
    if hi == 0 {
        return (0, 0.0); // t below range: clamp (callers stay inside the window)
    }
    if hi >= timestamps.len() {
        return (timestamps.len() - 2, 1.0);
    }
    let lo = hi - 1;
    if timestamps[lo] == t {
        return (lo, 0.0);
    }
    let u = (t - timestamps[lo]) / (timestamps[hi] - timestamps[lo]);
    (lo, u)
}

fn sample_stream(stream: &TimedStream, times: &[f64]) -> StreamPayload {
    match &stream.payload {
        StreamPayload::Pose(samples) => StreamPayload::Pose(
            times
                .iter()
                .map(|&t| {
                    let (i, u) = locate(&stream.timestamps, t);
                    if samples.len() == 1 {
                        samples[0]
                    } else {
                        interpolate_pose(&samples[i], &samples[i + 1], u)
                    }
                })
                .collect(),
        ),
        StreamPayload::Joint(samples) => StreamPayload::Joint(
            times
                .iter()
                .map(|&t| {
                    let (i, u) = locate(&stream.timestamps, t);
                    if samples.len() == 1 {
                        samples[0].clone()
                    } else {
                        lerp_vec(&samples[i], &samples[i + 1], u)
                    }
                })
                .collect(),
        ),
        StreamPayload::Tactile(samples) => StreamPayload::Tactile(
            times
                .iter()
                .map(|&t| {
                    let (i, u) = locate(&stream.timestamps, t);
                    let mut v = if samples.len() == 1 {
                        samples[0].clone()
                    } else {
                        lerp_vec(&samples[i], &samples[i + 1], u)
                    };
                    for x in &mut v {
                        *x = x.clamp(0.0, 1.0);
                    }
                    v
                })
                .collect(),
        ),
        StreamPayload::Scalar(samples) => StreamPayload::Scalar(
            times
                .iter()
                .map(|&t| {
                    let (i, u) = locate(&stream.timestamps, t);
                    if samples.len() == 1 {
                        samples[0]
                    } else if u == 0.0 {
                        samples[i]
                    } else if u == 1.0 {
                        samples[i + 1]
                    } else {
                        samples[i] * (1.0 - u) + samples[i + 1] * u
                    }
                })
                .collect(),
        ),
    }
}

/// Resample all streams onto the uniform timeline `t_k = t0 + k/rate` inside
/// the common window `[max of starts, min of ends]`. The output streams share
/// identical timestamps and length.
pub fn resample(streams: &[TimedStream], rate_hz: f64) -> Result<Vec<TimedStream>, SyncError> {
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(SyncError::BadRate(rate_hz));
    }
    for s in streams {
        s.validate()?;
    }
    let start = streams
        .iter()
        .map(|s| s.timestamps[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let end = streams
        .iter()
        .map(|s| *s.timestamps.last().unwrap())
        .fold(f64::INFINITY, f64::min);
    let min_span = 2.0 / rate_hz;
    if !(end - start >= min_span) {
        return Err(SyncError::EmptyOverlap {
            start,
            end,
            min_span,
        });
    }
    // Tiny slack so a window that is an exact multiple of the step keeps its
    // final sample despite rounding.
    let count = ((end - start) * rate_hz + 1e-9).floor() as usize + 1;
    let times: Vec<f64> = (0..count).map(|k| start + k as f64 / rate_hz).collect();

    Ok(streams
        .iter()
        .map(|s| TimedStream {
            name: s.name.clone(),
            timestamps: times.clone(),
            payload: sample_stream(s, &times),
        })
        .collect())
}
