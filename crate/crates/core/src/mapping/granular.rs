use serde::{Deserialize, Serialize};

use crate::frame::{SurfaceFrame, MAX_COUNT, ROD_COUNT};

/// Which grain parameter the surface heights drive. The others stay at their
/// defaults: gain 1, length 50 ms, pitch ratio 1, natural order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrainMode {
    #[default]
    Level,
    Length,
    Pitch,
    Order,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrainBounds {
    pub l_min_ms: f64,
    pub l_max_ms: f64,
}

impl Default for GrainBounds {
    fn default() -> Self {
        Self {
            l_min_ms: 20.0,
            l_max_ms: 200.0,
        }
    }
}

pub const DEFAULT_GRAIN_MS: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrainParams {
    pub gain: f64,
    pub length_ms: f64,
    pub pitch_ratio: f64,
    /// Playback position within one pass over the grains.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrainControls {
    pub mode: GrainMode,
    /// Indexed by grain, which is also the rod index.
    pub grains: Vec<GrainParams>,
}

impl GrainControls {
    /// Gain 1, 50 ms, ratio 1, natural order.
    pub fn identity(mode: GrainMode) -> Self {
        Self {
            mode,
            grains: (0..ROD_COUNT)
                .map(|rank| GrainParams {
                    gain: 1.0,
                    length_ms: DEFAULT_GRAIN_MS,
                    pitch_ratio: 1.0,
                    rank,
                })
                .collect(),
        }
    }

    /// Grain index at each rank.
    pub fn playback_order(&self) -> Vec<usize> {
        let mut order = vec![usize::MAX; self.grains.len()];
        for (i, g) in self.grains.iter().enumerate() {
            order[g.rank] = i;
        }
        order
    }

    /// True when the ranks are a bijection onto `0..n`.
    pub fn ranks_are_permutation(&self) -> bool {
        let mut seen = vec![false; self.grains.len()];
        self.grains.iter().all(|g| {
            g.rank < seen.len() && !std::mem::replace(&mut seen[g.rank], true)
        })
    }
}

/// Binds grain `i` to rod `i` and maps heights onto the active parameter.
pub fn granular_controls(frame: &SurfaceFrame, mode: GrainMode, bounds: GrainBounds) -> GrainControls {
    let mut controls = GrainControls::identity(mode);
    let h = |i: usize| frame.positions()[i] as f64 / MAX_COUNT as f64;
    match mode {
        GrainMode::Level => {
            for (i, g) in controls.grains.iter_mut().enumerate() {
                g.gain = h(i);
            }
        }
        GrainMode::Length => {
            for (i, g) in controls.grains.iter_mut().enumerate() {
                g.length_ms = bounds.l_min_ms + h(i) * (bounds.l_max_ms - bounds.l_min_ms);
            }
        }
        GrainMode::Pitch => {
            for (i, g) in controls.grains.iter_mut().enumerate() {
                g.pitch_ratio = (2.0 * h(i) - 1.0).exp2();
            }
        }
        GrainMode::Order => {
            let mut by_height: Vec<usize> = (0..ROD_COUNT).collect();
            // Stable sort keeps ascending index among equal heights.
            by_height.sort_by_key(|&i| std::cmp::Reverse(frame.positions()[i]));
            for (rank, &i) in by_height.iter().enumerate() {
                controls.grains[i].rank = rank;
            }
        }
    }
    controls
}
