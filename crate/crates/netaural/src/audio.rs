//! Audible rendering of node waveforms: 16-bit PCM WAV output, spectra,
//! and spectrograms.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::auralize::WaveformMatrix;
use crate::error::{Error, Result};

/// Default playback rate; 10K samples per node then last ~0.9 s.
pub const DEFAULT_SAMPLE_RATE: u32 = 11_025;

/// Default per-node peak level for audibility.
pub const DEFAULT_PEAK: f64 = 0.9;

pub const DEFAULT_STFT_WINDOW: usize = 256;
pub const DEFAULT_STFT_HOP: usize = 128;

/// Mono 16-bit PCM audio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioClip {
    samples: Vec<i16>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<i16>, sample_rate: u32) -> Result<AudioClip> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("audio clip must be non-empty".into()));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidParameter("sample rate must be non-zero".into()));
        }
        Ok(AudioClip { samples, sample_rate })
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Scales a node's time series to 16-bit integers with peak level `peak`.
/// An all-zero column stays silent.
pub fn waveform_to_clip(column: &[f64], sample_rate: u32, peak: f64) -> Result<AudioClip> {
    if !(peak > 0.0 && peak <= 1.0) {
        return Err(Error::InvalidParameter(format!("peak {peak} outside (0,1]")));
    }
    let max_abs = column.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let scale = if max_abs > 0.0 { peak / max_abs } else { 0.0 };
    let samples = column
        .iter()
        .map(|&x| (scale * x * 32767.0).round() as i16)
        .collect();
    AudioClip::new(samples, sample_rate)
}

/// Canonical RIFF/WAVE bytes: PCM format 1, mono, 16-bit little-endian.
pub fn write_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = 2 * clip.samples.len() as u32;
    let rate = clip.sample_rate;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes()); // PCM fmt chunk size
    out.extend_from_slice(&1u16.to_le_bytes()); // format 1 = PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in &clip.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Strict reader for the exact WAV layout produced by [`write_wav`].
pub fn read_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 44 {
        return Err(Error::Truncated { needed: 44, had: bytes.len() });
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" || &bytes[12..16] != b"fmt " {
        return Err(Error::BadMagic { expected: "RIFF/WAVE" });
    }
    let u16_at = |i: usize| u16::from_le_bytes(bytes[i..i + 2].try_into().unwrap());
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    if u32_at(16) != 16 || u16_at(20) != 1 || u16_at(22) != 1 || u16_at(34) != 16 {
        return Err(Error::InvalidParameter(
            "expected 16-bit mono PCM with a 16-byte fmt chunk".into(),
        ));
    }
    if &bytes[36..40] != b"data" {
        return Err(Error::BadMagic { expected: "data" });
    }
    let data_len = u32_at(40) as usize;
    if bytes.len() < 44 + data_len {
        return Err(Error::Truncated { needed: 44 + data_len, had: bytes.len() });
    }
    let samples = bytes[44..44 + data_len]
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes(c.try_into().unwrap()))
        .collect();
    AudioClip::new(samples, u32_at(24))
}

/// All nodes back to back in id order, each normalized independently,
/// with `gap_secs` of silence between consecutive nodes.
pub fn concat_all_nodes(
    waves: &WaveformMatrix,
    sample_rate: u32,
    gap_secs: f64,
) -> Result<AudioClip> {
    if gap_secs < 0.0 {
        return Err(Error::InvalidParameter("gap must be non-negative".into()));
    }
    let gap_len = (gap_secs * sample_rate as f64).round() as usize;
    let mut samples = Vec::with_capacity(waves.nodes() * (waves.steps() + gap_len));
    for v in 0..waves.nodes() {
        if v > 0 {
            samples.extend(std::iter::repeat(0i16).take(gap_len));
        }
        let clip = waveform_to_clip(&waves.column(v), sample_rate, DEFAULT_PEAK)?;
        samples.extend_from_slice(clip.samples());
    }
    AudioClip::new(samples, sample_rate)
}

/// DFT magnitudes of a node's time series, bins `0..=l/2`.
pub fn spectrum(column: &[f64]) -> Vec<f64> {
    let l = column.len();
    if l == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = column.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(l).process(&mut buf);
    buf[..=l / 2].iter().map(|c| c.norm()).collect()
}

fn hann(window: usize) -> Vec<f64> {
    (0..window)
        .map(|i| {
            0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (window - 1) as f64).cos())
        })
        .collect()
}

/// Hann-windowed short-time Fourier magnitudes. Returns
/// `1 + (l - window) / hop` frames, each with bins `0..=window/2`.
pub fn spectrogram(column: &[f64], window: usize, hop: usize) -> Result<Vec<Vec<f64>>> {
    if window < 2 || hop == 0 {
        return Err(Error::InvalidParameter("need window >= 2 and hop >= 1".into()));
    }
    if column.len() < window {
        return Err(Error::InvalidParameter(format!(
            "column length {} shorter than window {window}",
            column.len()
        )));
    }
    let win = hann(window);
    let frames = 1 + (column.len() - window) / hop;
    let fft = FftPlanner::new().plan_fft_forward(window);
    let mut out = Vec::with_capacity(frames);
    for f in 0..frames {
        let start = f * hop;
        let mut buf: Vec<Complex<f64>> = column[start..start + window]
            .iter()
            .zip(&win)
            .map(|(&x, &w)| Complex::new(x * w, 0.0))
            .collect();
        fft.process(&mut buf);
        out.push(buf[..=window / 2].iter().map(|c| c.norm()).collect());
    }
    Ok(out)
}
