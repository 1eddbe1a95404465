//! WAV decoding into normalized mono sample buffers, WAV writing for
//! generated corpora, and the pre-analysis dithering step.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decoded mono audio: amplitudes nominally in [-1, 1] plus the sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
    pub source_id: String,
}

impl AudioBuffer {
    /// Validate and wrap a sample buffer.
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32, source_id: impl Into<String>) -> Result<Self> {
        let source_id = source_id.into();
        if samples.is_empty() {
            return Err(Error::EmptyAudio(source_id));
        }
        if sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample { source_id, index });
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            source_id,
        })
    }

    /// Peak absolute amplitude.
    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, &s| m.max(s.abs()))
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// Dither noise parameters: standard deviation is peak amplitude / divisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DitherConfig {
    pub divisor: f64,
    pub seed: u64,
}

impl Default for DitherConfig {
    fn default() -> Self {
        Self {
            divisor: 1000.0,
            seed: 0,
        }
    }
}

impl DitherConfig {
    pub fn validate(&self) -> Result<()> {
        if self.divisor <= 0.0 || !self.divisor.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "dither divisor must be positive, got {}",
                self.divisor
            )));
        }
        Ok(())
    }
}

/// Result of [`dither`]: `applied` is false when the input was all zeros
/// (noise scale would be zero) and the buffer passed through unchanged.
#[derive(Debug, Clone)]
pub struct Dithered {
    pub audio: AudioBuffer,
    pub applied: bool,
}

/// Add zero-mean Gaussian noise with standard deviation peak/divisor.
///
/// Randomizes quantization residue before digit statistics. The generator is
/// ChaCha8 seeded from `cfg.seed`, so output is bit-identical across runs and
/// platforms. Samples are intentionally not re-clipped: overshoot beyond ±1
/// is at most a few parts per thousand and the analysis is amplitude-scale
/// free, so clipping would only distort the noise distribution.
pub fn dither(audio: &AudioBuffer, cfg: &DitherConfig) -> Result<Dithered> {
    cfg.validate()?;
    let sigma = audio.peak() / cfg.divisor;
    if sigma == 0.0 {
        return Ok(Dithered {
            audio: audio.clone(),
            applied: false,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::Internal(format!("normal distribution: {e}")))?;
    let samples = audio
        .samples
        .iter()
        .map(|&s| s + normal.sample(&mut rng))
        .collect();
    Ok(Dithered {
        audio: AudioBuffer {
            samples,
            sample_rate_hz: audio.sample_rate_hz,
            source_id: audio.source_id.clone(),
        },
        applied: true,
    })
}

/// Collapse interleaved multichannel samples to mono by per-sample channel mean.
pub fn downmix_interleaved(interleaved: &[f64], channels: usize) -> Vec<f64> {
    assert!(channels > 0, "channel count must be positive");
    interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect()
}

/// Decode a PCM WAV file (integer 8/16/24/32-bit or 32-bit float) into a
/// mono buffer scaled to [-1, 1]. Multichannel input is downmixed by channel
/// mean. Missing files, malformed RIFF containers, and compressed codecs are
/// reported as distinct errors.
pub fn read_wav(path: &Path) -> Result<AudioBuffer> {
    let reader = hound::WavReader::open(path).map_err(|e| map_hound_error(e, path))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::MalformedWav {
            path: path.to_path_buf(),
            detail: "zero channels".into(),
        });
    }

    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(Error::UnsupportedCodec {
                    path: path.to_path_buf(),
                    detail: format!("{}-bit float PCM", spec.bits_per_sample),
                });
            }
            let mut reader = reader;
            reader
                .samples::<f32>()
                .map(|s| s.map(|v| v as f64))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| map_hound_error(e, path))?
        }
        hound::SampleFormat::Int => {
            let bits = spec.bits_per_sample;
            if !(1..=32).contains(&bits) {
                return Err(Error::UnsupportedCodec {
                    path: path.to_path_buf(),
                    detail: format!("{bits}-bit integer PCM"),
                });
            }
            let full_scale = (1u64 << (bits - 1)) as f64;
            let mut reader = reader;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / full_scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| map_hound_error(e, path))?
        }
    };

    let mono = downmix_interleaved(&interleaved, channels);
    AudioBuffer::new(mono, spec.sample_rate, path.display().to_string())
}

fn map_hound_error(err: hound::Error, path: &Path) -> Error {
    let path = path.to_path_buf();
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Error::FileNotFound(path)
        }
        hound::Error::IoError(e) => Error::Io { path, source: e },
        hound::Error::FormatError(detail) => Error::MalformedWav {
            path,
            detail: detail.to_string(),
        },
        hound::Error::Unsupported => Error::UnsupportedCodec {
            path,
            detail: "compressed or non-PCM encoding".into(),
        },
        other => Error::MalformedWav {
            path,
            detail: other.to_string(),
        },
    }
}

/// Write a mono buffer as 16-bit integer PCM. Samples are rounded to the
/// nearest code and clamped to the representable range.
pub fn write_wav_pcm16(path: &Path, audio: &AudioBuffer) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer =
        hound::WavWriter::create(path, spec).map_err(|e| map_hound_error(e, path))?;
    for &s in &audio.samples {
        let code = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(code).map_err(|e| map_hound_error(e, path))?;
    }
    writer.finalize().map_err(|e| map_hound_error(e, path))?;
    Ok(())
}
