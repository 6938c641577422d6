//! The surface frame: one snapshot of all rod counters.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Rods per row and per column.
pub const GRID_SIDE: usize = 12;
/// Total number of rods.
pub const ROD_COUNT: usize = GRID_SIDE * GRID_SIDE;
/// Largest 7-bit value.
pub const MAX_COUNT: u8 = 127;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("sequence number {0} has the high bit set")]
    SeqOutOfRange(u8),
    #[error("rod {index} has count {value}, above 127")]
    PositionOutOfRange { index: usize, value: u8 },
    #[error("expected 144 positions, got {0}")]
    WrongLength(usize),
}

/// Row-major index of the rod at (`row`, `col`).
pub fn rod_index(row: usize, col: usize) -> usize {
    debug_assert!(row < GRID_SIDE && col < GRID_SIDE);
    row * GRID_SIDE + col
}

/// (row, col) of a row-major rod index.
pub fn rod_coords(index: usize) -> (usize, usize) {
    debug_assert!(index < ROD_COUNT);
    (index / GRID_SIDE, index % GRID_SIDE)
}

/// A validated snapshot: sequence number and 144 counts, all 7-bit.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SurfaceFrame {
    seq: u8,
    positions: [u8; ROD_COUNT],
}

impl SurfaceFrame {
    pub fn new(seq: u8, positions: [u8; ROD_COUNT]) -> Result<Self, FrameError> {
        if seq > MAX_COUNT {
            return Err(FrameError::SeqOutOfRange(seq));
        }
        if let Some((index, &value)) = positions.iter().enumerate().find(|(_, &v)| v > MAX_COUNT) {
            return Err(FrameError::PositionOutOfRange { index, value });
        }
        Ok(Self { seq, positions })
    }

    pub fn from_slice(seq: u8, positions: &[u8]) -> Result<Self, FrameError> {
        let arr: [u8; ROD_COUNT] = positions
            .try_into()
            .map_err(|_| FrameError::WrongLength(positions.len()))?;
        Self::new(seq, arr)
    }

    /// All rods at rest.
    pub fn zeroed(seq: u8) -> Self {
        Self {
            seq: seq & MAX_COUNT,
            positions: [0; ROD_COUNT],
        }
    }

    /// Every rod at `value` (clamped to 127).
    pub fn uniform(seq: u8, value: u8) -> Self {
        Self {
            seq: seq & MAX_COUNT,
            positions: [value.min(MAX_COUNT); ROD_COUNT],
        }
    }

    pub fn seq(&self) -> u8 {
        self.seq
    }

    pub fn positions(&self) -> &[u8; ROD_COUNT] {
        &self.positions
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.positions[rod_index(row, col)]
    }

    /// The 12 counts of column `col`, top row first.
    pub fn column(&self, col: usize) -> [u8; GRID_SIDE] {
        std::array::from_fn(|row| self.get(row, col))
    }
}

impl std::fmt::Debug for SurfaceFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SurfaceFrame")
            .field("seq", &self.seq)
            .field("positions", &&self.positions[..])
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct FrameRepr {
    seq: u8,
    positions: Vec<u8>,
}

impl Serialize for SurfaceFrame {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FrameRepr {
            seq: self.seq,
            positions: self.positions.to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SurfaceFrame {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = FrameRepr::deserialize(d)?;
        SurfaceFrame::from_slice(r.seq, &r.positions).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_high_bit() {
        assert_eq!(SurfaceFrame::new(128, [0; ROD_COUNT]), Err(FrameError::SeqOutOfRange(128)));
        let mut p = [0; ROD_COUNT];
        p[7] = 200;
        assert_eq!(
            SurfaceFrame::new(0, p),
            Err(FrameError::PositionOutOfRange { index: 7, value: 200 })
        );
        assert_eq!(SurfaceFrame::from_slice(0, &[0; 10]), Err(FrameError::WrongLength(10)));
    }

    #[test]
    fn indices_are_row_major_and_unique() {
        let mut seen = [false; ROD_COUNT];
        for r in 0..GRID_SIDE {
            for c in 0..GRID_SIDE {
                let i = rod_index(r, c);
                assert!(!seen[i]);
                seen[i] = true;
                assert_eq!(rod_coords(i), (r, c));
            }
        }
        assert_eq!(rod_index(3, 0), 36);
    }

    #[test]
    fn json_shape() {
        let mut p = [0; ROD_COUNT];
        p[0] = 127;
        let f = SurfaceFrame::new(5, p).unwrap();
        let v = serde_json::to_value(f).unwrap();
        assert_eq!(v["seq"], 5);
        assert_eq!(v["positions"].as_array().unwrap().len(), 144);
        let back: SurfaceFrame = serde_json::from_value(v).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<SurfaceFrame>(r#"{"seq":0,"positions":[1,2]}"#).is_err());
    }
}
