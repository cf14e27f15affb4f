//! Shared inputs for the pipeline benchmarks.

use phasemotion::synthetic::motion_sequence;
use phasemotion::{build_filter_bank, FilterBank, GrayImage, PyramidSpec};

/// Square frame sides the benchmarks run at.
pub const SIZES: [usize; 2] = [48, 224];

/// Two consecutive frames of the synthetic motion sequence plus a matching
/// default filter bank.
pub struct Fixture {
    pub f0: GrayImage,
    pub f1: GrayImage,
    pub bank: FilterBank,
}

impl Fixture {
    pub fn new(side: usize) -> Self {
        let mut frames = motion_sequence(side, side, 2, 0).into_frames();
        let f1 = frames.pop().expect("two frames");
        let f0 = frames.pop().expect("two frames");
        let bank = build_filter_bank(side, side, &PyramidSpec::default()).expect("valid size");
        Self { f0, f1, bank }
    }
}
