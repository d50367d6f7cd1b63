//! Voxel grids: event counts binned over time, polarity, and pixel.
//!
//! Shape is `[t_bins][2][height][width]` with polarity channel 0 = On and
//! 1 = Off. The bin of an event is `(t - t_start) * t_bins / (t_end - t_start + 1)`
//! in integer arithmetic, so every event lands in a valid bin and the total
//! count equals the stream length.

use thiserror::Error;

use crate::event::{EventStream, Polarity};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VoxelError {
    #[error("cannot build a voxel grid from an empty stream")]
    EmptyStream,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoxelGrid {
    t_bins: usize,
    width: u16,
    height: u16,
    t_start: u64,
    t_end: u64,
    counts: Vec<u32>,
}

impl VoxelGrid {
    pub fn t_bins(&self) -> usize {
        self.t_bins
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn t_start(&self) -> u64 {
        self.t_start
    }

    pub fn t_end(&self) -> u64 {
        self.t_end
    }

    pub fn count(&self, bin: usize, polarity: Polarity, x: u16, y: u16) -> u32 {
        self.counts[self.index(bin, polarity, x, y)]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// Sum over polarity and pixels for one temporal bin.
    pub fn bin_total(&self, bin: usize) -> u64 {
        let cell = 2 * usize::from(self.width) * usize::from(self.height);
        self.counts[bin * cell..(bin + 1) * cell].iter().map(|&c| u64::from(c)).sum()
    }

    fn index(&self, bin: usize, polarity: Polarity, x: u16, y: u16) -> usize {
        let ch = match polarity {
            Polarity::On => 0,
            Polarity::Off => 1,
        };
        ((bin * 2 + ch) * usize::from(self.height) + usize::from(y)) * usize::from(self.width)
            + usize::from(x)
    }
}

pub fn voxel_grid(stream: &EventStream, t_bins: usize) -> Result<VoxelGrid, VoxelError> {
    assert!(t_bins > 0, "need at least one temporal bin");
    let (t_start, t_end) = match (stream.first_t(), stream.last_t()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(VoxelError::EmptyStream),
    };
    let span_plus_one = u128::from(t_end - t_start) + 1;
    let mut grid = VoxelGrid {
        t_bins,
        width: stream.width(),
        height: stream.height(),
        t_start,
        t_end,
        counts: vec![0u32; t_bins * 2 * usize::from(stream.width()) * usize::from(stream.height())],
    };
    for e in stream.events() {
        let bin = (u128::from(e.t - t_start) * t_bins as u128 / span_plus_one) as usize;
        let idx = grid.index(bin, e.polarity, e.x, e.y);
        grid.counts[idx] += 1;
    }
    Ok(grid)
}
