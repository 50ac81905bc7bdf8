//! Finite instance spaces, perturbation maps, explicit hypothesis tables,
//! distributions, samples and predictors.
//!
//! Instances are dense indices `0..size`. Every hypothesis class is an
//! explicit boolean table, so every dimension, risk and learner output in
//! this crate is exactly computable.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance on the total mass of a [`Distribution`].
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpace {
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    names: Option<Vec<String>>,
}

impl InstanceSpace {
    pub fn new(size: usize, names: Option<Vec<String>>) -> Result<Self> {
        if size == 0 {
            return invalid("instance space must contain at least one instance");
        }
        if let Some(names) = &names {
            if names.len() != size {
                return invalid(format!(
                    "{} names given for {} instances",
                    names.len(),
                    size
                ));
            }
        }
        Ok(Self { size, names })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Display name of instance `x`, falling back to its index.
    pub fn name(&self, x: usize) -> String {
        match &self.names {
            Some(names) => names[x].clone(),
            None => x.to_string(),
        }
    }
}

/// The perturbation map `x -> U(x)`. Each set is sorted, deduplicated and
/// contains `x` itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Perturbation {
    sets: Vec<Vec<usize>>,
}

impl Perturbation {
    pub fn new(space_size: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if sets.len() != space_size {
            return invalid(format!(
                "perturbation covers {} instances, space has {}",
                sets.len(),
                space_size
            ));
        }
        let mut out = Vec::with_capacity(sets.len());
        for (x, mut set) in sets.into_iter().enumerate() {
            if let Some(&bad) = set.iter().find(|&&z| z >= space_size) {
                return invalid(format!("U({x}) contains out-of-range instance {bad}"));
            }
            set.sort_unstable();
            set.dedup();
            if set.binary_search(&x).is_err() {
                return invalid(format!("U({x}) must contain {x}"));
            }
            out.push(set);
        }
        Ok(Self { sets: out })
    }

    /// `U(x) = {x}` for every instance.
    pub fn identity(space_size: usize) -> Self {
        Self {
            sets: (0..space_size).map(|x| vec![x]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn set(&self, x: usize) -> &[usize] {
        &self.sets[x]
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn is_identity(&self) -> bool {
        self.sets.iter().all(|s| s.len() == 1)
    }
}

/// Explicit hypothesis class: rows are hypotheses, columns are instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisTable {
    n_instances: usize,
    rows: Vec<Vec<bool>>,
}

impl HypothesisTable {
    /// Rejects empty tables, ragged rows and duplicate rows.
    pub fn new(n_instances: usize, rows: Vec<Vec<bool>>) -> Result<Self> {
        if rows.is_empty() {
            return invalid("hypothesis table must have at least one row");
        }
        let mut seen = HashSet::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_instances {
                return invalid(format!(
                    "row {i} has {} entries, expected {n_instances}",
                    row.len()
                ));
            }
            if !seen.insert(row.as_slice()) {
                return invalid(format!("row {i} duplicates an earlier row"));
            }
        }
        Ok(Self { n_instances, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    pub fn row(&self, h: usize) -> &[bool] {
        &self.rows[h]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn get(&self, h: usize, x: usize) -> bool {
        self.rows[h][x]
    }

    /// Index of the row equal to `labels`, if any.
    pub fn find_row(&self, labels: &[bool]) -> Option<usize> {
        self.rows.iter().position(|r| r.as_slice() == labels)
    }

    /// Keeps only the listed rows (in the given order).
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        Self::new(
            self.n_instances,
            rows.iter().map(|&h| self.rows[h].clone()).collect(),
        )
    }

    /// Keeps only the listed columns; duplicate rows of the projection are
    /// merged (first occurrence wins).
    pub fn project(&self, columns: &[usize]) -> Self {
        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        for row in &self.rows {
            let p: Vec<bool> = columns.iter().map(|&x| row[x]).collect();
            if seen.insert(p.clone()) {
                rows.push(p);
            }
        }
        Self {
            n_instances: columns.len(),
            rows,
        }
    }

    /// The dual class: transpose, then drop duplicate rows.
    pub fn dual(&self) -> Self {
        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        for x in 0..self.n_instances {
            let col: Vec<bool> = self.rows.iter().map(|r| r[x]).collect();
            if seen.insert(col.clone()) {
                rows.push(col);
            }
        }
        Self {
            n_instances: self.rows.len(),
            rows,
        }
    }
}

/// One labeled point `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "(usize, u8)", try_from = "(usize, u8)")]
pub struct Example {
    pub x: usize,
    pub y: bool,
}

impl Example {
    pub fn new(x: usize, y: bool) -> Self {
        Self { x, y }
    }
}

impl From<Example> for (usize, u8) {
    fn from(e: Example) -> Self {
        (e.x, e.y as u8)
    }
}

impl TryFrom<(usize, u8)> for Example {
    type Error = String;

    fn try_from((x, y): (usize, u8)) -> std::result::Result<Self, String> {
        match y {
            0 | 1 => Ok(Example { x, y: y == 1 }),
            _ => Err(format!("label {y} is not 0 or 1")),
        }
    }
}

/// Ordered labeled sample; repeats are allowed.
pub type LabeledSample = Vec<Example>;
/// Ordered unlabeled sample; repeats are allowed.
pub type UnlabeledSample = Vec<usize>;

pub fn check_sample(sample: &[Example], space_size: usize) -> Result<()> {
    match sample.iter().find(|e| e.x >= space_size) {
        Some(e) => invalid(format!("sample instance {} out of range", e.x)),
        None => Ok(()),
    }
}

/// Distinct examples of a sample in first-occurrence order, with counts.
pub fn distinct_examples(sample: &[Example]) -> Vec<(Example, usize)> {
    let mut index: BTreeMap<Example, usize> = BTreeMap::new();
    let mut out: Vec<(Example, usize)> = Vec::new();
    for e in sample {
        match index.get(e) {
            Some(&i) => out[i].1 += 1,
            None => {
                index.insert(*e, out.len());
                out.push((*e, 1));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: usize,
    pub y: bool,
    pub p: f64,
}

/// Finite distribution over instance/label pairs, stored as an explicit
/// atom list. Risks against it are exact sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    atoms: Vec<Atom>,
}

impl Distribution {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return invalid("distribution has no atoms");
        }
        let mut seen = HashSet::new();
        let mut total = 0.0;
        for a in &atoms {
            if !(a.p > 0.0) || !a.p.is_finite() {
                return invalid(format!("atom ({}, {}) has non-positive mass {}", a.x, a.y as u8, a.p));
            }
            if !seen.insert((a.x, a.y)) {
                return invalid(format!("atom ({}, {}) listed twice", a.x, a.y as u8));
            }
            total += a.p;
        }
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return invalid(format!("atom masses sum to {total}, not 1"));
        }
        Ok(Self { atoms })
    }

    /// Uniform over the given examples (which must be distinct).
    pub fn uniform(examples: &[Example]) -> Result<Self> {
        let p = 1.0 / examples.len().max(1) as f64;
        Self::new(
            examples
                .iter()
                .map(|e| Atom { x: e.x, y: e.y, p })
                .collect(),
        )
    }

    pub fn point_mass(x: usize, y: bool) -> Self {
        Self {
            atoms: vec![Atom { x, y, p: 1.0 }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Instances carrying positive marginal mass, sorted.
    pub fn support(&self) -> Vec<usize> {
        let mut xs: Vec<usize> = self.atoms.iter().map(|a| a.x).collect();
        xs.sort_unstable();
        xs.dedup();
        xs
    }

    pub fn check_space(&self, space_size: usize) -> Result<()> {
        match self.atoms.iter().find(|a| a.x >= space_size) {
            Some(a) => invalid(format!("distribution atom on out-of-range instance {}", a.x)),
            None => Ok(()),
        }
    }
}

/// Free-form record of how a predictor was produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub learner: String,
    /// Rows of the hypothesis table behind each voter, when voters are rows.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub voter_rows: Vec<usize>,
    /// Ordered compression set, one labeled subset per voter.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compression: Vec<Vec<Example>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
}

impl Provenance {
    pub fn new(learner: impl Into<String>) -> Self {
        Self {
            learner: learner.into(),
            ..Self::default()
        }
    }

    pub fn detail(mut self, key: &str, value: impl Serialize) -> Self {
        self.details.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
        self
    }

    pub fn flag(&mut self, flag: impl Into<String>) {
        self.flags.push(flag.into());
    }
}

/// A materialized total labeling of the instance space, possibly outside
/// the hypothesis table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    #[serde(with = "bits01")]
    pub outputs: Vec<bool>,
    pub provenance: Provenance,
}

impl Predictor {
    pub fn new(outputs: Vec<bool>, provenance: Provenance) -> Self {
        Self { outputs, provenance }
    }

    pub fn constant(n: usize, value: bool, learner: &str) -> Self {
        Self::new(vec![value; n], Provenance::new(learner))
    }

    pub fn from_row(h: &HypothesisTable, row: usize, learner: &str) -> Self {
        let mut prov = Provenance::new(learner);
        prov.voter_rows.push(row);
        Self::new(h.row(row).to_vec(), prov)
    }

    pub fn labels(&self) -> &[bool] {
        &self.outputs
    }
}

/// Accuracy, confidence and approximation multiplier of a PAC target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacParams {
    pub epsilon: f64,
    pub delta: f64,
    pub alpha_factor: f64,
}

impl PacParams {
    pub fn new(epsilon: f64, delta: f64, alpha_factor: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return invalid(format!("epsilon {epsilon} not in (0,1)"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return invalid(format!("delta {delta} not in (0,1)"));
        }
        if !(alpha_factor >= 1.0) {
            return invalid(format!("alpha factor {alpha_factor} below 1"));
        }
        Ok(Self {
            epsilon,
            delta,
            alpha_factor,
        })
    }

    pub fn realizable(epsilon: f64, delta: f64) -> Result<Self> {
        Self::new(epsilon, delta, 1.0)
    }

    /// The `(epsilon / 3, delta / 2)` budget handed to each GRASS phase.
    pub fn split_for_phase(&self) -> Self {
        Self {
            epsilon: self.epsilon / 3.0,
            delta: self.delta / 2.0,
            alpha_factor: self.alpha_factor,
        }
    }
}

/// The universal input bundle: space, perturbation, class and distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub space: InstanceSpace,
    pub perturbation: Perturbation,
    pub hypotheses: HypothesisTable,
    pub distribution: Distribution,
}

impl ProblemInstance {
    pub fn new(
        space: InstanceSpace,
        perturbation: Perturbation,
        hypotheses: HypothesisTable,
        distribution: Distribution,
    ) -> Result<Self> {
        let n = space.size();
        if perturbation.len() != n {
            return invalid("perturbation does not match the instance space");
        }
        if hypotheses.n_instances() != n {
            return invalid(format!(
                "hypothesis table has {} columns, space has {n} instances",
                hypotheses.n_instances()
            ));
        }
        distribution.check_space(n)?;
        Ok(Self {
            space,
            perturbation,
            hypotheses,
            distribution,
        })
    }

    pub fn size(&self) -> usize {
        self.space.size()
    }

    pub fn with_distribution(&self, distribution: Distribution) -> Result<Self> {
        Self::new(
            self.space.clone(),
            self.perturbation.clone(),
            self.hypotheses.clone(),
            distribution,
        )
    }
}

pub(crate) mod bits01 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &[bool], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(bits.iter().map(|&b| b as u8))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let raw = Vec::<u8>::deserialize(d)?;
        raw.into_iter()
            .map(|v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(D::Error::custom(format!("expected 0 or 1, got {other}"))),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbation_requires_self_membership() {
        assert!(Perturbation::new(2, vec![vec![1], vec![1]]).is_err());
        assert!(Perturbation::new(2, vec![vec![0, 5], vec![1]]).is_err());
        let u = Perturbation::new(2, vec![vec![1, 0, 1], vec![1]]).unwrap();
        assert_eq!(u.set(0), &[0, 1]);
    }

    #[test]
    fn duplicate_rows_rejected() {
        let err = HypothesisTable::new(2, vec![vec![true, false], vec![true, false]]);
        assert!(err.is_err());
        assert!(HypothesisTable::new(2, vec![]).is_err());
        assert!(HypothesisTable::new(2, vec![vec![true]]).is_err());
    }

    #[test]
    fn distribution_validation() {
        let a = |x, y, p| Atom { x, y, p };
        assert!(Distribution::new(vec![a(0, true, 0.5), a(1, false, 0.5)]).is_ok());
        assert!(Distribution::new(vec![a(0, true, 0.5), a(0, true, 0.5)]).is_err());
        assert!(Distribution::new(vec![a(0, true, 0.6), a(1, false, 0.5)]).is_err());
        assert!(Distribution::new(vec![a(0, true, 1.0), a(1, false, 0.0)]).is_err());
        assert!(Distribution::new(vec![a(0, true, 0.5 + 5e-10), a(1, false, 0.5)]).is_ok());
    }

    #[test]
    fn dual_transposes_and_dedups() {
        let h = HypothesisTable::new(3, vec![vec![true, true, false], vec![false, false, true]]).unwrap();
        let d = h.dual();
        assert_eq!(d.n_instances(), 2);
        assert_eq!(d.rows(), &[vec![true, false], vec![false, true]]);
    }

    #[test]
    fn pac_params_ranges() {
        assert!(PacParams::new(0.0, 0.1, 1.0).is_err());
        assert!(PacParams::new(0.1, 1.0, 1.0).is_err());
        assert!(PacParams::new(0.1, 0.1, 0.5).is_err());
        let p = PacParams::new(0.3, 0.2, 3.0).unwrap().split_for_phase();
        assert!((p.epsilon - 0.1).abs() < 1e-12 && (p.delta - 0.1).abs() < 1e-12);
    }

    #[test]
    fn distinct_examples_counts_multiplicity() {
        let s = vec![Example::new(1, true), Example::new(0, false), Example::new(1, true)];
        assert_eq!(
            distinct_examples(&s),
            vec![(Example::new(1, true), 2), (Example::new(0, false), 1)]
        );
    }
}
