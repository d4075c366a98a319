use rand::Rng;
use rustc_hash::FxHashMap;

use super::Amplitude;
use crate::error::{Error, Result};
use crate::fixedpoint::{width_mask, BitString, MAX_WIDTH};

/// Amplitudes with magnitude below this are dropped after every operator.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Largest norm deviation tolerated by [`SparseState::measure`].
pub const NORM_TOLERANCE: f64 = 1e-6;

/// A pure state stored as a map from basis strings to amplitudes.
///
/// Basis strings are `width`-bit integers whose most significant bit is bit 0
/// of the rendered string.
#[derive(Debug, Clone)]
pub struct SparseState {
    width: u32,
    amplitudes: FxHashMap<u128, Amplitude>,
}

impl SparseState {
    /// `|0...0>` on `width` qubits.
    pub fn zero(width: u32) -> Result<Self> {
        Self::basis(BitString::zeros(width))
    }

    pub fn basis(b: BitString) -> Result<Self> {
        if b.width() == 0 || b.width() > MAX_WIDTH {
            return Err(Error::InvalidLayout(format!("unsupported state width {}", b.width())));
        }
        let mut amplitudes = FxHashMap::default();
        amplitudes.insert(b.bits(), Amplitude::new(1.0, 0.0));
        Ok(Self {
            width: b.width(),
            amplitudes,
        })
    }

    /// Builds a state from explicit amplitudes. Strings must share one width
    /// and the result must be normalized within [`NORM_TOLERANCE`].
    pub fn from_amplitudes<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BitString, Amplitude)>,
    {
        let mut width = None;
        let mut amplitudes = FxHashMap::default();
        for (b, a) in entries {
            match width {
                None => width = Some(b.width()),
                Some(w) if w != b.width() => {
                    return Err(Error::WidthMismatch {
                        expected: w,
                        actual: b.width(),
                    })
                }
                _ => {}
            }
            *amplitudes.entry(b.bits()).or_insert(Amplitude::new(0.0, 0.0)) += a;
        }
        let width = width.ok_or_else(|| Error::InvalidLayout("empty state".into()))?;
        let mut state = Self { width, amplitudes };
        state.amplitudes.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        let norm = state.norm_sqr().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Normalization { norm });
        }
        Ok(state)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn support_len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitude(&self, b: u128) -> Amplitude {
        self.amplitudes.get(&b).copied().unwrap_or_default()
    }

    pub fn amplitude_of(&self, b: &BitString) -> Amplitude {
        self.amplitude(b.bits())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Support entries in increasing basis order.
    pub fn entries(&self) -> Vec<(u128, Amplitude)> {
        let mut v: Vec<_> = self.amplitudes.iter().map(|(&k, &a)| (k, a)).collect();
        v.sort_unstable_by_key(|&(k, _)| k);
        v
    }

    pub(crate) fn raw_iter(&self) -> impl Iterator<Item = (&u128, &Amplitude)> {
        self.amplitudes.iter()
    }

    pub(crate) fn raw_entry(&mut self, key: u128) -> &mut Amplitude {
        self.amplitudes.entry(key).or_default()
    }

    /// Total probability of basis strings satisfying `pred`.
    pub fn probability(&self, pred: impl Fn(u128) -> bool) -> f64 {
        self.amplitudes
            .iter()
            .filter(|(&k, _)| pred(k))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &SparseState) -> Amplitude {
        self.amplitudes
            .iter()
            .filter_map(|(k, a)| other.amplitudes.get(k).map(|b| a.conj() * b))
            .sum()
    }

    /// Moves the amplitude of every basis string `b` to `map(b)`.
    ///
    /// `map` must be injective on the current support; a collision means the
    /// underlying classical map is not reversible.
    pub fn apply_basis_map(&mut self, map: impl Fn(u128) -> u128) -> Result<()> {
        let mask = width_mask(self.width);
        let mut out: FxHashMap<u128, Amplitude> =
            FxHashMap::with_capacity_and_hasher(self.amplitudes.len(), Default::default());
        for (&k, &a) in &self.amplitudes {
            let image = map(k);
            if image & !mask != 0 {
                return Err(Error::InvalidLayout(format!(
                    "basis map sent {k:#x} outside the {}-bit register",
                    self.width
                )));
            }
            if out.insert(image, a).is_some() {
                let first = self
                    .amplitudes
                    .keys()
                    .copied()
                    .find(|&o| o != k && map(o) == image)
                    .unwrap_or(k);
                return Err(Error::Collision {
                    first,
                    second: k,
                    image,
                });
            }
        }
        self.amplitudes = out;
        Ok(())
    }

    /// Multiplies the amplitude of every marked basis string by `phase`.
    pub fn apply_phase(&mut self, marked: impl Fn(u128) -> bool, phase: Amplitude) -> Result<()> {
        if (phase.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("phase {phase} is not a unit complex number")));
        }
        for (&k, a) in self.amplitudes.iter_mut() {
            if marked(k) {
                *a *= phase;
            }
        }
        Ok(())
    }

    /// Drops negligible amplitudes, renormalizing if anything was removed.
    pub fn prune(&mut self) {
        let before = self.amplitudes.len();
        self.amplitudes.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        if self.amplitudes.len() != before {
            let norm = self.norm_sqr().sqrt();
            if norm > 0.0 {
                for a in self.amplitudes.values_mut() {
                    *a /= norm;
                }
            }
        }
    }

    fn check_normalized(&self) -> Result<()> {
        let norm = self.norm_sqr().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Normalization { norm });
        }
        Ok(())
    }

    /// Born-rule measurement of every qubit.
    pub fn measure<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BitString> {
        Ok(self.sampler()?.sample(rng))
    }

    /// Precomputed cumulative distribution for repeated measurement.
    pub fn sampler(&self) -> Result<Sampler> {
        self.check_normalized()?;
        let mut keys = Vec::with_capacity(self.amplitudes.len());
        let mut cumulative = Vec::with_capacity(self.amplitudes.len());
        let mut acc = 0.0;
        for (k, a) in self.entries() {
            acc += a.norm_sqr();
            keys.push(k);
            cumulative.push(acc);
        }
        Ok(Sampler {
            width: self.width,
            keys,
            cumulative,
        })
    }
}

/// Draws basis strings with probability `|amplitude|^2`.
#[derive(Debug, Clone)]
pub struct Sampler {
    width: u32,
    keys: Vec<u128>,
    cumulative: Vec<f64>,
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BitString {
        let total = *self.cumulative.last().expect("sampler over empty support");
        let r = rng.gen::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= r).min(self.keys.len() - 1);
        BitString::from_raw(self.keys[idx], self.width)
    }
}
