//! Multichannel WAV files.

use std::path::Path;

use hound::{SampleFormat as HoundFormat, WavReader, WavSpec, WavWriter};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unsupported format ({detail})")]
    UnsupportedFormat { path: String, detail: String },
    #[error("{path}: corrupt file ({detail})")]
    CorruptFile { path: String, detail: String },
    #[error("invalid audio buffer: {0}")]
    InvalidBuffer(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Pcm16,
    Float32,
}

/// Planar audio: one sample vector per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub sample_rate: u32,
    pub channels: Vec<Vec<f64>>,
}

impl AudioBuffer {
    pub fn new(sample_rate: u32, channels: Vec<Vec<f64>>) -> Result<Self, IoError> {
        let buf = Self { sample_rate, channels };
        buf.validate()?;
        Ok(buf)
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    fn validate(&self) -> Result<(), IoError> {
        if self.channels.is_empty() || self.channels.len() > u16::MAX as usize {
            return Err(IoError::InvalidBuffer(format!("{} channels", self.channels.len())));
        }
        if self.sample_rate == 0 {
            return Err(IoError::InvalidBuffer("sample rate 0".into()));
        }
        let len = self.len();
        if self.channels.iter().any(|c| c.len() != len) {
            return Err(IoError::InvalidBuffer("channels differ in length".into()));
        }
        if self.channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(IoError::InvalidBuffer("non-finite sample".into()));
        }
        Ok(())
    }
}

/// `x · 32768`, rounded half away from zero and clamped to the 16-bit range.
pub fn to_pcm16(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

fn classify(path: &Path, err: hound::Error) -> IoError {
    let path = path.display().to_string();
    match err {
        hound::Error::IoError(source) => IoError::Io { path, source },
        hound::Error::Unsupported => IoError::UnsupportedFormat {
            path,
            detail: "unsupported WAV variant".into(),
        },
        hound::Error::FormatError(detail) => IoError::CorruptFile {
            path,
            detail: detail.into(),
        },
        other => IoError::CorruptFile {
            path,
            detail: other.to_string(),
        },
    }
}

/// Reads a PCM16 or IEEE float32 file; PCM samples are divided by 32768.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, IoError> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(|e| classify(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (HoundFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>(),
        (HoundFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>(),
        (fmt, bits) => {
            return Err(IoError::UnsupportedFormat {
                path: path.display().to_string(),
                detail: format!("{bits}-bit {fmt:?}; only 16-bit PCM and 32-bit float are read"),
            })
        }
    }
    .map_err(|e| classify(path, e))?;
    if channels == 0 || !interleaved.len().is_multiple_of(channels) {
        return Err(IoError::CorruptFile {
            path: path.display().to_string(),
            detail: "sample count is not a multiple of the channel count".into(),
        });
    }
    let mut planar = vec![Vec::with_capacity(interleaved.len() / channels); channels];
    for frame in interleaved.chunks_exact(channels) {
        for (c, v) in planar.iter_mut().zip(frame) {
            c.push(*v);
        }
    }
    Ok(AudioBuffer {
        sample_rate: spec.sample_rate,
        channels: planar,
    })
}

pub fn write_wav(path: impl AsRef<Path>, buf: &AudioBuffer, format: SampleFormat) -> Result<(), IoError> {
    let path = path.as_ref();
    buf.validate()?;
    let spec = WavSpec {
        channels: buf.num_channels() as u16,
        sample_rate: buf.sample_rate,
        bits_per_sample: match format {
            SampleFormat::Pcm16 => 16,
            SampleFormat::Float32 => 32,
        },
        sample_format: match format {
            SampleFormat::Pcm16 => HoundFormat::Int,
            SampleFormat::Float32 => HoundFormat::Float,
        },
    };
    let err = |e| classify(path, e);
    let mut writer = WavWriter::create(path, spec).map_err(err)?;
    for i in 0..buf.len() {
        for c in &buf.channels {
            match format {
                SampleFormat::Pcm16 => writer.write_sample(to_pcm16(c[i])),
                SampleFormat::Float32 => writer.write_sample(c[i] as f32),
            }
            .map_err(err)?;
        }
    }
    writer.finalize().map_err(err)
}
