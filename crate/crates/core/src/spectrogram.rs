use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::C64;

/// Complex STFT-domain tensor of `bins × frames × channels`.
///
/// Stored bin-major so that the observation vector `x(f, t)` of one
/// time-frequency point is a contiguous `channels`-long slice.
#[derive(Clone, PartialEq, Debug)]
pub struct Spectrogram {
    bins: usize,
    frames: usize,
    channels: usize,
    data: Vec<C64>,
}

impl Spectrogram {
    pub fn zeros(bins: usize, frames: usize, channels: usize) -> Self {
        assert!(
            bins >= 1 && frames >= 1 && channels >= 1,
            "spectrogram dimensions must be positive"
        );
        Self {
            bins,
            frames,
            channels,
            data: vec![C64::new(0.0, 0.0); bins * frames * channels],
        }
    }

    pub fn from_fn(bins: usize, frames: usize, channels: usize, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut s = Self::zeros(bins, frames, channels);
        for b in 0..bins {
            for t in 0..frames {
                for (m, x) in s.frame_mut(b, t).iter_mut().enumerate() {
                    *x = f(b, t, m);
                }
            }
        }
        s
    }

    #[inline]
    pub fn bins(&self) -> usize {
        self.bins
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn get(&self, bin: usize, frame: usize, channel: usize) -> C64 {
        self.data[(bin * self.frames + frame) * self.channels + channel]
    }

    #[inline]
    pub fn set(&mut self, bin: usize, frame: usize, channel: usize, value: C64) {
        self.data[(bin * self.frames + frame) * self.channels + channel] = value;
    }

    /// Observation vector `x(bin, frame)`.
    #[inline]
    pub fn frame(&self, bin: usize, frame: usize) -> &[C64] {
        let start = (bin * self.frames + frame) * self.channels;
        &self.data[start..start + self.channels]
    }

    #[inline]
    pub fn frame_mut(&mut self, bin: usize, frame: usize) -> &mut [C64] {
        let start = (bin * self.frames + frame) * self.channels;
        &mut self.data[start..start + self.channels]
    }

    /// All frames of one bin, `frames × channels`.
    pub fn bin(&self, bin: usize) -> &[C64] {
        let len = self.frames * self.channels;
        &self.data[bin * len..(bin + 1) * len]
    }

    pub fn bin_mut(&mut self, bin: usize) -> &mut [C64] {
        let len = self.frames * self.channels;
        &mut self.data[bin * len..(bin + 1) * len]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// `Σ |x|²` over every entry.
    pub fn power(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }
}
