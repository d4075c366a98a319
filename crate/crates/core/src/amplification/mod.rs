//! Amplitude amplification over the three-register search state.
//!
//! The preparation `A` maps `|0>|0>|0>` to
//! `N^-1/2 sum_j |x_j>|f_j>|f_j - f_k>`, and a basis state is *desired* when
//! the sign bit of its comparison register is set, i.e. `f_j < f_k`.

mod qsearch;

pub use qsearch::{
    analytic_success_probability, modified_qsearch, modified_qsearch_with_events, modified_round_bound, qsearch,
    qsearch_with_events, QSearchOutcome, QSearchParams, SearchResult,
};

use std::fmt;
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::fixedpoint::{negate_bits, sign_bit, width_mask, BitString};
use crate::ledger::OracleLedger;
use crate::quantum::{Amplitude, HouseholderPrep, Operator, RegisterLayout, SparseState};

type OracleFn = Arc<dyn Fn(&BitString) -> BitString + Send + Sync>;

/// `N` candidate points, the encoded incumbent value, and a classical oracle
/// from point bits to value bits.
#[derive(Clone)]
pub struct SearchProblem {
    layout: RegisterLayout,
    points: Vec<BitString>,
    incumbent_value: BitString,
    table: FxHashMap<u128, u128>,
    fallback: Option<OracleFn>,
    householder: HouseholderPrep,
}

impl fmt::Debug for SearchProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SearchProblem")
            .field("layout", &self.layout)
            .field("points", &self.points.len())
            .field("incumbent_value", &self.incumbent_value.to_string())
            .finish()
    }
}

impl SearchProblem {
    /// Builds a problem whose oracle is `oracle`, evaluated once per point of
    /// `points` to tabulate `F` and on demand for any other point string.
    pub fn new<F>(layout: RegisterLayout, points: Vec<BitString>, incumbent_value: BitString, oracle: F) -> Result<Self>
    where
        F: Fn(&BitString) -> BitString + Send + Sync + 'static,
    {
        let values = points.iter().map(&oracle).collect::<Vec<_>>();
        Self::build(layout, points, values, incumbent_value, Some(Arc::new(oracle)))
    }

    /// Builds a problem from tabulated oracle values. Point strings outside the
    /// table evaluate to zero, which keeps `F` a bijection.
    pub fn from_values(
        layout: RegisterLayout,
        points: Vec<BitString>,
        values: Vec<BitString>,
        incumbent_value: BitString,
    ) -> Result<Self> {
        Self::build(layout, points, values, incumbent_value, None)
    }

    fn build(
        layout: RegisterLayout,
        points: Vec<BitString>,
        values: Vec<BitString>,
        incumbent_value: BitString,
        fallback: Option<OracleFn>,
    ) -> Result<Self> {
        if layout.value_bits() != layout.comparison_bits() {
            return Err(Error::InvalidLayout(format!(
                "value ({}) and comparison ({}) registers must have equal width",
                layout.value_bits(),
                layout.comparison_bits()
            )));
        }
        if points.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} points but {} oracle values",
                points.len(),
                values.len()
            )));
        }
        check_width(&incumbent_value, layout.value_bits())?;
        let mut seen = FxHashSet::default();
        let mut table = FxHashMap::default();
        for (p, v) in points.iter().zip(&values) {
            check_width(p, layout.point_bits())?;
            check_width(v, layout.value_bits())?;
            if !seen.insert(p.bits()) {
                return Err(Error::DuplicatePoint(p.to_string()));
            }
            table.insert(p.bits(), v.bits());
        }
        let householder = HouseholderPrep::new(&points, layout.point_shift())?;
        Ok(Self {
            layout,
            points,
            incumbent_value,
            table,
            fallback,
            householder,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn points(&self) -> &[BitString] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn incumbent_value(&self) -> &BitString {
        &self.incumbent_value
    }

    /// Oracle value for a point string.
    pub fn value_of(&self, point: u128) -> u128 {
        if let Some(&v) = self.table.get(&point) {
            return v;
        }
        match &self.fallback {
            Some(f) => f(&BitString::from_raw(point, self.layout.point_bits())).bits(),
            None => 0,
        }
    }

    /// `f_j - f_k` in two's complement on the comparison register.
    pub fn comparison_of(&self, point: u128) -> BitString {
        let d = self.layout.comparison_bits();
        let diff = self.value_of(point).wrapping_sub(self.incumbent_value.bits()) & width_mask(d);
        BitString::from_raw(diff, d)
    }

    /// Number of points whose comparison register is negative (`t`).
    pub fn marked_count(&self) -> usize {
        self.points
            .iter()
            .filter(|p| sign_bit(&self.comparison_of(p.bits())) == 1)
            .count()
    }

    /// A full-width string is desired iff its comparison sign bit is set.
    pub fn is_desired(&self, measured: &BitString) -> bool {
        self.layout.comparison_negative(measured.bits())
    }

    pub fn build_a(&self) -> Preparation<'_> {
        let d = self.layout.comparison_bits();
        let minus_fk = negate_bits(&self.incumbent_value);
        debug_assert_eq!(minus_fk.width(), d);
        Preparation {
            problem: self,
            load: minus_fk.bits(),
        }
    }

    /// `A|0>|0>|0>`, counting one quantum oracle call.
    pub fn prepare(&self, ledger: &mut OracleLedger) -> Result<SparseState> {
        let mut state = SparseState::zero(self.layout.total_bits())?;
        self.build_a().apply(&mut state)?;
        ledger.record_preparation();
        Ok(state)
    }
}

fn check_width(b: &BitString, width: u32) -> Result<()> {
    if b.width() != width {
        return Err(Error::WidthMismatch {
            expected: width,
            actual: b.width(),
        });
    }
    Ok(())
}

/// The state preparation `A` as four stages: load `|-f_k>` into the
/// comparison register, spread the point register over `X`, apply the
/// XOR-lifted oracle, and add the value register into the comparison register.
pub struct Preparation<'a> {
    problem: &'a SearchProblem,
    load: u128,
}

impl Preparation<'_> {
    pub fn load_comparison(&self, state: &mut SparseState) -> Result<()> {
        let load = self.load;
        state.apply_basis_map(|k| k ^ load)
    }

    pub fn spread(&self, state: &mut SparseState) -> Result<()> {
        self.problem.householder.apply(state)
    }

    /// `|x>|v>|c> -> |x>|v xor f(x)>|c>`.
    pub fn oracle(&self, state: &mut SparseState) -> Result<()> {
        let layout = self.problem.layout;
        let p = self.problem;
        state.apply_basis_map(|k| k ^ layout.join(0, p.value_of(layout.point_of(k)), 0))
    }

    /// `|x>|v>|c> -> |x>|v>|c + v mod 2^d>`, or `c - v` when `inverse`.
    pub fn add(&self, state: &mut SparseState, inverse: bool) -> Result<()> {
        let layout = self.problem.layout;
        let mask = width_mask(layout.comparison_bits());
        state.apply_basis_map(|k| {
            let v = layout.value_of(k);
            let c = layout.comparison_of(k);
            let c = if inverse { c.wrapping_sub(v) } else { c.wrapping_add(v) } & mask;
            (k & !mask) | c
        })
    }
}

impl Operator for Preparation<'_> {
    fn apply(&self, state: &mut SparseState) -> Result<()> {
        self.load_comparison(state)?;
        self.spread(state)?;
        self.oracle(state)?;
        self.add(state, false)
    }

    fn apply_inverse(&self, state: &mut SparseState) -> Result<()> {
        self.add(state, true)?;
        self.oracle(state)?;
        self.spread(state)?;
        self.load_comparison(state)
    }
}

const MINUS_ONE: Amplitude = Amplitude::new(-1.0, 0.0);

/// Flips the sign of `|0...0>` only.
pub fn apply_s0(state: &mut SparseState) -> Result<()> {
    state.apply_phase(|k| k == 0, MINUS_ONE)
}

/// Flips the sign of every basis state whose comparison register is negative.
pub fn apply_schi(state: &mut SparseState, layout: &RegisterLayout) -> Result<()> {
    state.apply_phase(|k| layout.comparison_negative(k), MINUS_ONE)
}

/// `Q = -A S0 A^-1 S_chi`, counting two quantum oracle calls.
///
/// The state is expected to lie in the span reachable from `A|0>`.
pub fn apply_q(state: &mut SparseState, problem: &SearchProblem, ledger: &mut OracleLedger) -> Result<()> {
    let a = problem.build_a();
    apply_schi(state, problem.layout())?;
    a.apply_inverse(state)?;
    apply_s0(state)?;
    a.apply(state)?;
    state.apply_phase(|_| true, MINUS_ONE)?;
    ledger.record_q();
    Ok(())
}

/// Probability that measuring `state` yields a desired string.
pub fn desired_probability(state: &SparseState, layout: &RegisterLayout) -> f64 {
    state.probability(|k| layout.comparison_negative(k))
}
