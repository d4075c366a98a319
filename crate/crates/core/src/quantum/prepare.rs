use rustc_hash::{FxHashMap, FxHashSet};

use super::{Amplitude, Operator, SparseState};
use crate::error::{Error, Result};
use crate::fixedpoint::{width_mask, BitString};

/// Reflection `I - 2|w><w|` on the point register that swaps `|0...0>` with
/// the uniform superposition over a target set.
///
/// With `|psi> = N^-1/2 sum_{x in T} |x>` and `|w>` proportional to
/// `|psi> - |0...0>`, the reflection maps `|0...0>` to `|psi>` and is its own
/// inverse. Bits below the point register are spectators.
#[derive(Debug, Clone)]
pub struct HouseholderPrep {
    point_bits: u32,
    spectator_bits: u32,
    /// Normalized `|w>` over point-register strings; empty when `|psi> = |0...0>`.
    w: Vec<(u128, f64)>,
}

impl HouseholderPrep {
    /// `targets` are point-register strings; `spectator_bits` is the number of
    /// state bits below the point register.
    pub fn new(targets: &[BitString], spectator_bits: u32) -> Result<Self> {
        let first = targets.first().ok_or(Error::EmptyTargets)?;
        let point_bits = first.width();
        let mut seen = FxHashSet::default();
        for t in targets {
            if t.width() != point_bits {
                return Err(Error::WidthMismatch {
                    expected: point_bits,
                    actual: t.width(),
                });
            }
            if !seen.insert(t.bits()) {
                return Err(Error::DuplicatePoint(t.to_string()));
            }
        }

        let weight = (targets.len() as f64).sqrt().recip();
        let mut w: FxHashMap<u128, f64> = targets.iter().map(|t| (t.bits(), weight)).collect();
        *w.entry(0).or_insert(0.0) -= 1.0;
        w.retain(|_, v| *v != 0.0);
        let norm = w.values().map(|v| v * v).sum::<f64>().sqrt();
        let mut w: Vec<(u128, f64)> = if norm < 1e-15 {
            Vec::new()
        } else {
            w.into_iter().map(|(k, v)| (k, v / norm)).collect()
        };
        w.sort_unstable_by_key(|&(k, _)| k);

        Ok(Self {
            point_bits,
            spectator_bits,
            w,
        })
    }

    pub fn point_bits(&self) -> u32 {
        self.point_bits
    }

    pub fn is_identity(&self) -> bool {
        self.w.is_empty()
    }

    fn reflect(&self, state: &mut SparseState) -> Result<()> {
        if state.width() != self.point_bits + self.spectator_bits {
            return Err(Error::WidthMismatch {
                expected: self.point_bits + self.spectator_bits,
                actual: state.width(),
            });
        }
        if self.w.is_empty() {
            return Ok(());
        }
        let shift = self.spectator_bits;
        let spectator_mask = width_mask(shift);
        let w_lookup: FxHashMap<u128, f64> = self.w.iter().copied().collect();

        // <w|phi_s> for every spectator pattern s present in the support
        let mut overlaps: FxHashMap<u128, Amplitude> = FxHashMap::default();
        for (&key, &a) in state.raw_iter() {
            let point = if shift >= 128 { 0 } else { key >> shift };
            if let Some(&wv) = w_lookup.get(&point) {
                *overlaps.entry(key & spectator_mask).or_default() += a * wv;
            }
        }
        let mut overlaps: Vec<(u128, Amplitude)> = overlaps.into_iter().collect();
        overlaps.sort_unstable_by_key(|&(k, _)| k);

        for (spectator, overlap) in overlaps {
            if overlap.norm() == 0.0 {
                continue;
            }
            for &(point, wv) in &self.w {
                *state.raw_entry((point << shift) | spectator) -= overlap * (2.0 * wv);
            }
        }
        state.prune();
        Ok(())
    }
}

impl Operator for HouseholderPrep {
    fn apply(&self, state: &mut SparseState) -> Result<()> {
        self.reflect(state)
    }

    fn apply_inverse(&self, state: &mut SparseState) -> Result<()> {
        self.reflect(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn c(re: f64) -> Amplitude {
        Amplitude::new(re, 0.0)
    }

    #[test]
    fn empty_targets_rejected() {
        assert!(matches!(HouseholderPrep::new(&[], 0), Err(Error::EmptyTargets)));
    }

    #[test]
    fn duplicate_targets_rejected() {
        assert!(matches!(
            HouseholderPrep::new(&[bs("01"), bs("01")], 0),
            Err(Error::DuplicatePoint(_))
        ));
    }

    #[test]
    fn single_zero_target_is_identity() {
        let h = HouseholderPrep::new(&[bs("00")], 0).unwrap();
        assert!(h.is_identity());
        let mut s = SparseState::zero(2).unwrap();
        h.apply(&mut s).unwrap();
        assert_eq!(s.entries(), vec![(0, c(1.0))]);
    }

    #[test]
    fn prepares_uniform_superposition() {
        let h = HouseholderPrep::new(&[bs("01"), bs("10")], 0).unwrap();
        let mut s = SparseState::zero(2).unwrap();
        h.apply(&mut s).unwrap();
        let e = s.entries();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].0, 0b01);
        assert_eq!(e[1].0, 0b10);
        assert_relative_eq!(e[0].1.re, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(e[1].1.re, FRAC_1_SQRT_2, epsilon = 1e-12);
        h.apply(&mut s).unwrap();
        assert_eq!(s.support_len(), 1);
        assert_relative_eq!(s.amplitude(0).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn matches_explicit_matrix_and_is_self_inverse() {
        // Explicit 4x4 Householder matrix for targets {01, 10}.
        let r = FRAC_1_SQRT_2;
        let w = nalgebra::DVector::from_vec(vec![-1.0, r, r, 0.0]).normalize();
        let m = DMatrix::<f64>::identity(4, 4) - (&w * w.transpose()) * 2.0;
        let m2 = &m * &m;
        assert!((m2 - DMatrix::<f64>::identity(4, 4)).abs().max() < 1e-12);

        let h = HouseholderPrep::new(&[bs("01"), bs("10")], 0).unwrap();
        for col in 0..4u128 {
            let mut s = SparseState::basis(BitString::new(col, 2).unwrap()).unwrap();
            h.apply(&mut s).unwrap();
            for row in 0..4u128 {
                assert_relative_eq!(s.amplitude(row).re, m[(row as usize, col as usize)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn spectator_bits_are_untouched() {
        let h = HouseholderPrep::new(&[bs("01"), bs("11")], 2).unwrap();
        let mut s = SparseState::basis(bs("0010")).unwrap();
        h.apply(&mut s).unwrap();
        let e = s.entries();
        assert_eq!(e.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0b0110, 0b1110]);
        for (k, _) in e {
            assert_eq!(k & 0b11, 0b10);
        }
    }

    #[test]
    fn self_inverse_on_every_basis_state() {
        // exhaustive over point registers up to 8 bits, with a few target sets each
        for bits in 1..=8u32 {
            let size = 1u128 << bits;
            let target_sets: Vec<Vec<u128>> = vec![
                vec![0],
                vec![size - 1],
                (0..size).step_by(3).collect(),
                (1..size).step_by(2).collect(),
            ];
            for targets in target_sets {
                let targets: Vec<BitString> = targets.iter().map(|&t| BitString::new(t, bits).unwrap()).collect();
                let h = HouseholderPrep::new(&targets, 1).unwrap();
                for point in 0..size {
                    let b = BitString::new((point << 1) | 1, bits + 1).unwrap();
                    let mut s = SparseState::basis(b).unwrap();
                    h.apply(&mut s).unwrap();
                    assert_relative_eq!(s.norm_sqr(), 1.0, epsilon = 1e-9);
                    h.apply_inverse(&mut s).unwrap();
                    assert_relative_eq!(s.amplitude(b.bits()).re, 1.0, epsilon = 1e-9);
                    assert_relative_eq!(s.norm_sqr(), 1.0, epsilon = 1e-9);
                }
            }
        }
    }
}
