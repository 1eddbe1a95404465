//! Short-time analysis: framing, per-frame mean removal, and one-sided DFT
//! magnitude spectra.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio_io::AudioBuffer;
use crate::error::{Error, Result};

/// Analysis window applied before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    /// No tapering; the transform sees the raw frame.
    #[default]
    Rectangular,
    /// Periodic Hann taper, available for sensitivity studies.
    Hann,
}

/// Framing parameters. Defaults: 25 ms frames advanced by a 10 ms hop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub window: Window,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_ms: 25.0,
            hop_ms: 10.0,
            window: Window::Rectangular,
        }
    }
}

impl FrameConfig {
    /// Frame length in samples at the given rate.
    pub fn frame_len(&self, sample_rate_hz: u32) -> usize {
        (self.frame_ms * sample_rate_hz as f64 / 1000.0).round() as usize
    }

    /// Hop in samples at the given rate.
    pub fn hop(&self, sample_rate_hz: u32) -> usize {
        (self.hop_ms * sample_rate_hz as f64 / 1000.0).round() as usize
    }

    pub fn validate(&self, sample_rate_hz: u32) -> Result<()> {
        if self.frame_ms <= 0.0 || self.hop_ms <= 0.0 || !self.frame_ms.is_finite() || !self.hop_ms.is_finite() {
            return Err(Error::InvalidConfig(
                "frame and hop durations must be positive".into(),
            ));
        }
        if self.hop_ms > self.frame_ms {
            return Err(Error::InvalidConfig(format!(
                "hop ({} ms) must not exceed frame length ({} ms)",
                self.hop_ms, self.frame_ms
            )));
        }
        if self.frame_len(sample_rate_hz) < 2 {
            return Err(Error::InvalidConfig(format!(
                "frame of {} ms at {} Hz is shorter than 2 samples",
                self.frame_ms, sample_rate_hz
            )));
        }
        if self.hop(sample_rate_hz) < 1 {
            return Err(Error::InvalidConfig(format!(
                "hop of {} ms at {} Hz rounds to 0 samples",
                self.hop_ms, sample_rate_hz
            )));
        }
        Ok(())
    }
}

/// One-sided spectrum: |X[k]| for k = 1..=floor(N/2). The DC bin is excluded
/// (it is zero after de-meaning) and the conjugate upper half is dropped; it
/// duplicates every magnitude and therefore every leading digit.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSpectrum {
    pub bins: Vec<f64>,
    pub frame_index: usize,
}

/// Split a signal into frames of `frame_ms` advanced by `hop_ms`.
///
/// Frame k covers samples [k·hop, k·hop + frame_len); a trailing partial
/// frame is discarded rather than zero-padded so digit statistics never see
/// artificial zeros.
pub fn frame_signal<'a>(audio: &'a AudioBuffer, cfg: &FrameConfig) -> Result<Vec<&'a [f64]>> {
    cfg.validate(audio.sample_rate_hz)?;
    let frame_len = cfg.frame_len(audio.sample_rate_hz);
    let hop = cfg.hop(audio.sample_rate_hz);
    let n = audio.samples.len();
    if n < frame_len {
        return Err(Error::SignalTooShort {
            samples: n,
            frame_len,
        });
    }
    let count = (n - frame_len) / hop + 1;
    Ok((0..count)
        .map(|k| &audio.samples[k * hop..k * hop + frame_len])
        .collect())
}

/// Subtract the frame mean, removing the DC component.
pub fn demean(frame: &[f64]) -> Vec<f64> {
    assert!(!frame.is_empty(), "cannot de-mean an empty frame");
    let mean = frame.iter().sum::<f64>() / frame.len() as f64;
    frame.iter().map(|&s| s - mean).collect()
}

/// Reusable transform for frames of one fixed length.
///
/// Plans the FFT once; `magnitude_spectrum` below is a convenience wrapper
/// for one-shot use.
pub struct SpectrumAnalyzer {
    frame_len: usize,
    taper: Option<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl SpectrumAnalyzer {
    pub fn new(frame_len: usize, window: Window) -> Self {
        assert!(frame_len >= 2, "frame length must be at least 2");
        let taper = match window {
            Window::Rectangular => None,
            Window::Hann => Some(
                (0..frame_len)
                    .map(|n| {
                        0.5 * (1.0
                            - (2.0 * std::f64::consts::PI * n as f64 / frame_len as f64).cos())
                    })
                    .collect(),
            ),
        };
        let fft = FftPlanner::new().plan_fft_forward(frame_len);
        Self {
            frame_len,
            taper,
            fft,
        }
    }

    /// |DFT| of the frame at its exact length (no zero-padding), bins
    /// 1..=floor(N/2).
    pub fn magnitude_spectrum(&self, frame: &[f64], frame_index: usize) -> MagnitudeSpectrum {
        assert_eq!(
            frame.len(),
            self.frame_len,
            "frame length does not match analyzer"
        );
        let mut buf: Vec<Complex<f64>> = match &self.taper {
            None => frame.iter().map(|&s| Complex::new(s, 0.0)).collect(),
            Some(w) => frame
                .iter()
                .zip(w.iter())
                .map(|(&s, &c)| Complex::new(s * c, 0.0))
                .collect(),
        };
        self.fft.process(&mut buf);
        let bins = (1..=self.frame_len / 2).map(|k| buf[k].norm()).collect();
        MagnitudeSpectrum { bins, frame_index }
    }
}

/// One-shot magnitude spectrum with the window from `cfg`.
pub fn magnitude_spectrum(
    frame: &[f64],
    cfg: &FrameConfig,
    frame_index: usize,
) -> MagnitudeSpectrum {
    SpectrumAnalyzer::new(frame.len(), cfg.window).magnitude_spectrum(frame, frame_index)
}
