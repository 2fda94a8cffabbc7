//! IQ recordings: a short text header followed by little-endian `f32` I/Q pairs.
//!
//! ```text
//! SPECSENSE-IQ 1
//! format cf32le
//! sample_rate_hz 1000000
//! count 65536
//! end_header
//! <count × (I: f32 LE, Q: f32 LE)>
//! ```

use num_complex::Complex64;

use crate::signals::SampleBuffer;

pub const MAGIC: &str = "SPECSENSE-IQ 1";
pub const FORMAT_CF32LE: &str = "cf32le";
const END: &str = "end_header\n";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum IqError {
    #[error("missing or unknown magic line")]
    BadMagic,
    #[error("header is not terminated by `end_header`")]
    UnterminatedHeader,
    #[error("malformed header line `{0}`")]
    BadHeaderLine(String),
    #[error("header field `{0}` is missing")]
    MissingField(&'static str),
    #[error("unsupported sample format `{0}`")]
    UnsupportedFormat(String),
    #[error("payload holds {values} scalar values, expected an even count")]
    OddValueCount { values: usize },
    #[error("payload length {actual} bytes does not match declared count ({expected} bytes)")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("recording is not a valid sample buffer: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IqRecording {
    /// Interleaved I, Q values.
    pub values: Vec<f32>,
    pub sample_rate_hz: f64,
    pub format: String,
}

impl IqRecording {
    pub fn from_buffer(buffer: &SampleBuffer) -> Self {
        let values = buffer
            .samples()
            .iter()
            .flat_map(|s| [s.re as f32, s.im as f32])
            .collect();
        Self {
            values,
            sample_rate_hz: buffer.sample_rate_hz(),
            format: FORMAT_CF32LE.to_string(),
        }
    }

    pub fn sample_count(&self) -> usize {
        self.values.len() / 2
    }

    pub fn to_buffer(&self) -> Result<SampleBuffer, IqError> {
        if !self.values.len().is_multiple_of(2) {
            return Err(IqError::OddValueCount {
                values: self.values.len(),
            });
        }
        let samples = self
            .values
            .chunks_exact(2)
            .map(|p| Complex64::new(f64::from(p[0]), f64::from(p[1])))
            .collect();
        SampleBuffer::new(samples, self.sample_rate_hz).map_err(|e| IqError::Invalid(e.to_string()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = format!(
            "{MAGIC}\nformat {}\nsample_rate_hz {}\ncount {}\n{END}",
            self.format,
            self.sample_rate_hz,
            self.sample_count()
        );
        let mut out = header.into_bytes();
        out.reserve(self.values.len() * 4);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IqError> {
        let end = find(bytes, END.as_bytes()).ok_or(IqError::UnterminatedHeader)?;
        let header = std::str::from_utf8(&bytes[..end]).map_err(|_| IqError::BadMagic)?;
        let payload = &bytes[end + END.len()..];
        let mut lines = header.lines();
        if lines.next() != Some(MAGIC) {
            return Err(IqError::BadMagic);
        }
        let (mut format, mut rate, mut count) = (None, None, None);
        for line in lines {
            let (k, v) = line
                .split_once(' ')
                .ok_or_else(|| IqError::BadHeaderLine(line.to_string()))?;
            let bad = || IqError::BadHeaderLine(line.to_string());
            match k {
                "format" => format = Some(v.to_string()),
                "sample_rate_hz" => rate = Some(v.parse::<f64>().map_err(|_| bad())?),
                "count" => count = Some(v.parse::<usize>().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        let format = format.ok_or(IqError::MissingField("format"))?;
        let sample_rate_hz = rate.ok_or(IqError::MissingField("sample_rate_hz"))?;
        let count = count.ok_or(IqError::MissingField("count"))?;
        if format != FORMAT_CF32LE {
            return Err(IqError::UnsupportedFormat(format));
        }
        if payload.len().is_multiple_of(4) && !(payload.len() / 4).is_multiple_of(2) {
            return Err(IqError::OddValueCount {
                values: payload.len() / 4,
            });
        }
        let expected = count * 8;
        if payload.len() != expected {
            return Err(IqError::LengthMismatch {
                expected,
                actual: payload.len(),
            });
        }
        let values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self {
            values,
            sample_rate_hz,
            format,
        })
    }
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}
