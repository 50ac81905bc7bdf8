//! Row sets over a hypothesis table, as bitsets.
//!
//! `R(x, y)` is the set of rows equal to `y` on all of `U(x)`; a row is
//! robustly correct on `(x, y)` exactly when it belongs to `R(x, y)`.

use fixedbitset::FixedBitSet;

use crate::instance::{Example, HypothesisTable, Perturbation};

#[derive(Debug, Clone)]
pub struct RobustIndex {
    n_rows: usize,
    // sets[2 * x + y]
    sets: Vec<FixedBitSet>,
}

impl RobustIndex {
    pub fn new(h: &HypothesisTable, u: &Perturbation) -> Self {
        let n_rows = h.n_rows();
        let mut sets = Vec::with_capacity(2 * u.len());
        for x in 0..u.len() {
            let region = u.set(x);
            let mut zero = FixedBitSet::with_capacity(n_rows);
            let mut one = FixedBitSet::with_capacity(n_rows);
            for r in 0..n_rows {
                let row = h.row(r);
                let first = row[region[0]];
                if region.iter().all(|&z| row[z] == first) {
                    if first {
                        one.insert(r);
                    } else {
                        zero.insert(r);
                    }
                }
            }
            sets.push(zero);
            sets.push(one);
        }
        Self { n_rows, sets }
    }

    /// Index for the zero-one loss: `R(x, y) = {h : h(x) = y}`.
    pub fn pointwise(h: &HypothesisTable) -> Self {
        Self::new(h, &Perturbation::identity(h.n_instances()))
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn correct(&self, x: usize, y: bool) -> &FixedBitSet {
        &self.sets[2 * x + y as usize]
    }

    pub fn full(&self) -> FixedBitSet {
        let mut all = FixedBitSet::with_capacity(self.n_rows);
        all.insert_range(..);
        all
    }

    /// Rows robustly correct on every example.
    pub fn consistent_rows<'a>(&self, examples: impl IntoIterator<Item = &'a Example>) -> FixedBitSet {
        let mut acc = self.full();
        for e in examples {
            acc.intersect_with(self.correct(e.x, e.y));
        }
        acc
    }

    /// Robust mistakes per row over weighted distinct examples.
    pub fn mistake_counts(&self, weighted: &[(Example, usize)]) -> Vec<usize> {
        let total: usize = weighted.iter().map(|(_, c)| c).sum();
        let mut correct = vec![0usize; self.n_rows];
        for (e, c) in weighted {
            for r in self.correct(e.x, e.y).ones() {
                correct[r] += c;
            }
        }
        correct.into_iter().map(|c| total - c).collect()
    }
}
