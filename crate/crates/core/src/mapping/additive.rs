use serde::{Deserialize, Serialize};

use crate::frame::{SurfaceFrame, GRID_SIDE, MAX_COUNT, ROD_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HarmonicLayout {
    /// Harmonic `k+1` follows the mean depth of column `k`.
    #[default]
    Columns,
    /// Harmonic `i+1` follows rod `i`.
    Full,
}

impl HarmonicLayout {
    pub fn harmonics(self) -> usize {
        match self {
            HarmonicLayout::Columns => GRID_SIDE,
            HarmonicLayout::Full => ROD_COUNT,
        }
    }
}

/// Normalized harmonic amplitudes over a fundamental. `amplitudes[k]` drives
/// harmonic `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSpectrum {
    pub amplitudes: Vec<f64>,
    pub f0: f64,
}

impl HarmonicSpectrum {
    pub fn silent(harmonics: usize, f0: f64) -> Self {
        Self {
            amplitudes: vec![0.0; harmonics],
            f0,
        }
    }

    /// Only harmonic `k` (1-based) at amplitude `amp`.
    pub fn single(harmonics: usize, k: usize, amp: f64, f0: f64) -> Self {
        let mut s = Self::silent(harmonics, f0);
        s.amplitudes[k - 1] = amp;
        s
    }

    pub fn harmonics(&self) -> usize {
        self.amplitudes.len()
    }
}

pub fn additive_spectrum(frame: &SurfaceFrame, layout: HarmonicLayout, f0: f64) -> HarmonicSpectrum {
    let max = MAX_COUNT as f64;
    let amplitudes = match layout {
        HarmonicLayout::Columns => (0..GRID_SIDE)
            .map(|k| {
                let sum: u32 = frame.column(k).iter().map(|&c| c as u32).sum();
                sum as f64 / GRID_SIDE as f64 / max
            })
            .collect(),
        HarmonicLayout::Full => frame.positions().iter().map(|&c| c as f64 / max).collect(),
    };
    HarmonicSpectrum { amplitudes, f0 }
}
