//! Exact sparse simulation of the three-register search state.

mod prepare;
mod state;

pub use prepare::HouseholderPrep;
pub use state::{Sampler, SparseState, NORM_TOLERANCE, PRUNE_THRESHOLD};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixedpoint::{width_mask, BitString, MAX_WIDTH};

/// Complex amplitude type used throughout the simulator.
pub type Amplitude = num_complex::Complex64;

/// A unitary acting in place on a [`SparseState`].
pub trait Operator {
    fn apply(&self, state: &mut SparseState) -> Result<()>;
    fn apply_inverse(&self, state: &mut SparseState) -> Result<()>;
}

/// Bit layout `point | value | comparison`, point register most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RegisterLayout {
    point_bits: u32,
    value_bits: u32,
    comparison_bits: u32,
}

impl RegisterLayout {
    pub fn new(point_bits: u32, value_bits: u32, comparison_bits: u32) -> Result<Self> {
        if point_bits == 0 || value_bits == 0 || comparison_bits == 0 {
            return Err(Error::InvalidLayout("register widths must be positive".into()));
        }
        let total = point_bits + value_bits + comparison_bits;
        if total > MAX_WIDTH {
            return Err(Error::InvalidLayout(format!(
                "total width {total} exceeds {MAX_WIDTH} bits"
            )));
        }
        Ok(Self {
            point_bits,
            value_bits,
            comparison_bits,
        })
    }

    /// The layout used by the search step: `n*d` point bits, `d` value bits, `d` comparison bits.
    pub fn for_search(dimension: usize, scalar_bits: u32) -> Result<Self> {
        Self::new(dimension as u32 * scalar_bits, scalar_bits, scalar_bits)
    }

    pub fn point_bits(&self) -> u32 {
        self.point_bits
    }

    pub fn value_bits(&self) -> u32 {
        self.value_bits
    }

    pub fn comparison_bits(&self) -> u32 {
        self.comparison_bits
    }

    pub fn total_bits(&self) -> u32 {
        self.point_bits + self.value_bits + self.comparison_bits
    }

    /// Number of bits below the point register.
    pub fn point_shift(&self) -> u32 {
        self.value_bits + self.comparison_bits
    }

    pub fn point_of(&self, key: u128) -> u128 {
        key >> self.point_shift()
    }

    pub fn value_of(&self, key: u128) -> u128 {
        (key >> self.comparison_bits) & width_mask(self.value_bits)
    }

    pub fn comparison_of(&self, key: u128) -> u128 {
        key & width_mask(self.comparison_bits)
    }

    pub fn join(&self, point: u128, value: u128, comparison: u128) -> u128 {
        (point << self.point_shift()) | (value << self.comparison_bits) | comparison
    }

    /// Splits a full-width string into its three registers.
    pub fn split(&self, key: &BitString) -> (BitString, BitString, BitString) {
        let k = key.bits();
        (
            BitString::from_raw(self.point_of(k), self.point_bits),
            BitString::from_raw(self.value_of(k), self.value_bits),
            BitString::from_raw(self.comparison_of(k), self.comparison_bits),
        )
    }

    /// Whether the comparison register's most significant bit is set.
    pub fn comparison_negative(&self, key: u128) -> bool {
        (key >> (self.comparison_bits - 1)) & 1 == 1
    }
}
