//! Robust ERM, the supervised robust learner (inflation, finite subclass,
//! discretization, modified α-Boost, sparsification), its agnostic
//! reduction, the known-support learner, the robustly realizable 0-1
//! learner, and the two-phase semi-supervised learner GRASS.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use rand::distributions::{Distribution as _, WeightedIndex};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::Serialize;

use crate::compress::{
    alpha_boost_until, majority_vote, sparsify_until, BoostOptions, CompressionSet, LossKind, Reconstruct, Voter,
    WEAK_ERROR,
};
use crate::dims::{self, SearchLimits};
use crate::error::{invalid, Error, Result};
use crate::instance::{
    check_sample, distinct_examples, Example, HypothesisTable, PacParams, Perturbation, Predictor, Provenance,
};
use crate::loss::{is_self_consistent_on, restrict_consistent, robust_loss_unchecked};
use crate::partial::{
    partial_agnostic_learn_with_dim, partial_realizable_learn_with_dim, to_partial, PartialTable,
};
use crate::rowset::RobustIndex;
use crate::sample::{derive_seed, rng_from_seed};

/// Default cap on generating subsets of the finite subclass.
pub const SUBSET_CAP: usize = 200_000;
/// Sparsified voter count is this multiple of the dual VC dimension.
pub const SPARSIFY_FACTOR: usize = 8;
const WEAK_RESAMPLES: usize = 8;

/// Row with the fewest robust mistakes on `s`, lowest index on ties; row 0
/// for an empty sample.
pub fn rerm(h: &HypothesisTable, u: &Perturbation, s: &[Example]) -> Result<usize> {
    check_sample(s, h.n_instances())?;
    if u.len() != h.n_instances() {
        return invalid("perturbation does not match the hypothesis table");
    }
    Ok(rerm_indexed(&RobustIndex::new(h, u), s))
}

pub fn rerm_indexed(index: &RobustIndex, s: &[Example]) -> usize {
    if s.is_empty() {
        return 0;
    }
    if let Some(r) = index.consistent_rows(s).ones().next() {
        return r;
    }
    let mistakes = index.mistake_counts(&distinct_examples(s));
    (0..mistakes.len()).min_by_key(|&r| (mistakes[r], r)).unwrap_or(0)
}

/// Checks that `(h, u)` is the all-functions overlap construction: the last
/// instance `w` has `U(w) = {w}`, every other `x` has `U(x) = {x, w}`, and
/// the table holds all `2^n` labelings.
pub fn is_allfns_overlap(h: &HypothesisTable, u: &Perturbation) -> bool {
    let n = h.n_instances();
    if n < 2 || n > 20 || h.n_rows() != 1 << n || u.len() != n {
        return false;
    }
    let w = n - 1;
    u.set(w) == [w] && (0..w).all(|x| u.set(x) == [x, w])
}

/// The ERM that labels every sampled point and the shared point 1 and
/// every other point by a fair coin.
///
/// Refuses other instances unless `override_check` is set. An empty sample
/// gets every label from the coin.
pub fn bad_rerm(h: &HypothesisTable, u: &Perturbation, s: &[Example], seed: u64, override_check: bool) -> Result<Predictor> {
    check_sample(s, h.n_instances())?;
    if !override_check && !is_allfns_overlap(h, u) {
        return Err(Error::StructuralCheck(
            "adversarial ERM is defined for the all-functions overlap construction".into(),
        ));
    }
    let n = h.n_instances();
    let mut rng = rng_from_seed(seed);
    let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    for e in s {
        for &z in u.set(e.x) {
            labels[z] = true;
        }
    }
    let mut prov = Provenance::new("bad-rerm");
    if let Some(r) = h.find_row(&labels) {
        prov.voter_rows.push(r);
    }
    Ok(Predictor::new(labels, prov))
}

/// Every `z` in some `U(x_i)`, labeled `y_i` for the smallest such `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InflatedSample {
    pub pairs: Vec<Example>,
    /// Index into the original sample of the point each pair came from.
    pub origin: Vec<usize>,
}

impl InflatedSample {
    pub fn new(s: &[Example], u: &Perturbation) -> Self {
        let mut seen = vec![false; u.len()];
        let mut pairs = Vec::new();
        let mut origin = Vec::new();
        for (i, e) in s.iter().enumerate() {
            for &z in u.set(e.x) {
                if !seen[z] {
                    seen[z] = true;
                    pairs.push(Example::new(z, e.y));
                    origin.push(i);
                }
            }
        }
        Self { pairs, origin }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// RERM outputs over small subsets of the distinct sample points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteSubclass {
    pub d: usize,
    /// Distinct rows, in order of first generation.
    pub rows: Vec<usize>,
    /// The subset that first produced each row.
    pub generators: Vec<Vec<Example>>,
    pub subsets_considered: usize,
    /// More subsets than the cap existed and a random selection was used.
    pub subsampled: bool,
}

impl FiniteSubclass {
    /// RERM of every subset of `points` with 1 to `d` elements, plus RERM of
    /// all of `points`. `points` must be robustly realizable.
    pub fn build(index: &RobustIndex, points: &[Example], d: usize, cap: usize, seed: u64) -> Self {
        let n = points.len();
        let d = d.min(n);
        let mut total: usize = 0;
        let mut sizes: Vec<f64> = Vec::with_capacity(d);
        for k in 1..=d {
            let c = binomial(n, k);
            sizes.push(c as f64);
            total = total.saturating_add(c);
        }
        let mut out = Self {
            d,
            rows: Vec::new(),
            generators: Vec::new(),
            subsets_considered: 0,
            subsampled: total > cap,
        };
        let mut seen: HashMap<usize, ()> = HashMap::new();
        let mut add = |subset: Vec<Example>, out: &mut Self| {
            out.subsets_considered += 1;
            let mut acc = index.full();
            for e in &subset {
                acc.intersect_with(index.correct(e.x, e.y));
            }
            let row = acc.ones().next().unwrap_or_else(|| rerm_indexed(index, &subset));
            if seen.insert(row, ()).is_none() {
                out.rows.push(row);
                out.generators.push(subset);
            }
        };
        if total <= cap {
            for k in 1..=d {
                for_each_combination(n, k, |idx| add(idx.iter().map(|&i| points[i]).collect(), &mut out));
            }
        } else {
            let mut rng = rng_from_seed(seed);
            let pick = WeightedIndex::new(&sizes).expect("binomials are positive");
            for _ in 0..cap {
                let k = pick.sample(&mut rng) + 1;
                let mut idx = sample_indices(&mut rng, n, k).into_vec();
                idx.sort_unstable();
                add(idx.iter().map(|&i| points[i]).collect(), &mut out);
            }
        }
        add(points.to_vec(), &mut out);
        out
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let mut c: usize = 1;
    for i in 0..k {
        c = match c.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return usize::MAX,
        };
    }
    c
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 || k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// One inflated pair per distinct loss column over the finite subclass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscretizedSample {
    /// Indices into the inflated pairs.
    pub representatives: Vec<usize>,
    pub distinct_columns: usize,
}

impl DiscretizedSample {
    pub fn build(h: &HypothesisTable, inflated: &InflatedSample, subclass: &FiniteSubclass) -> Self {
        let mut index: HashMap<Vec<bool>, usize> = HashMap::new();
        let mut representatives = Vec::new();
        for (j, e) in inflated.pairs.iter().enumerate() {
            let column: Vec<bool> = subclass.rows.iter().map(|&r| h.get(r, e.x) != e.y).collect();
            if !index.contains_key(&column) {
                index.insert(column, j);
                representatives.push(j);
            }
        }
        Self {
            distinct_columns: index.len(),
            representatives,
        }
    }
}

/// A learned majority vote with its compression set.
#[derive(Debug, Clone)]
pub struct Learned {
    pub predictor: Predictor,
    pub compression: CompressionSet,
}

/// Rebuilds a robust majority vote: each part is mapped to its RERM row.
pub struct RobustReconstructor<'a> {
    pub index: &'a RobustIndex,
    pub table: &'a HypothesisTable,
}

impl Reconstruct for RobustReconstructor<'_> {
    fn reconstruct(&self, set: &CompressionSet) -> Result<Vec<bool>> {
        let rows: Vec<usize> = set.parts.iter().map(|p| rerm_indexed(self.index, p)).collect();
        Ok(majority_vote(
            rows.iter().map(|&r| self.table.row(r)),
            self.table.n_instances(),
        ))
    }
}

/// Supervised robust learner over a fixed class, with the class-level
/// quantities (row-set index, VC and dual VC) computed once.
pub struct RobustLearner<'a> {
    h: &'a HypothesisTable,
    u: &'a Perturbation,
    index: RobustIndex,
    vc: usize,
    dual_vc: usize,
    pub subset_cap: usize,
    pub sparsify_factor: usize,
}

impl<'a> RobustLearner<'a> {
    pub fn new(h: &'a HypothesisTable, u: &'a Perturbation) -> Result<Self> {
        let vc = dims::vc(h, SearchLimits::unguarded())?.size;
        let dual_vc = dims::dual_vc(h, SearchLimits::unguarded())?.size;
        Self::with_dims(h, u, vc, dual_vc)
    }

    pub fn with_dims(h: &'a HypothesisTable, u: &'a Perturbation, vc: usize, dual_vc: usize) -> Result<Self> {
        if u.len() != h.n_instances() {
            return invalid("perturbation does not match the hypothesis table");
        }
        Ok(Self {
            h,
            u,
            index: RobustIndex::new(h, u),
            vc,
            dual_vc,
            subset_cap: SUBSET_CAP,
            sparsify_factor: SPARSIFY_FACTOR,
        })
    }

    pub fn index(&self) -> &RobustIndex {
        &self.index
    }

    pub fn vc(&self) -> usize {
        self.vc
    }

    pub fn dual_vc(&self) -> usize {
        self.dual_vc
    }

    pub fn reconstructor(&self) -> RobustReconstructor<'_> {
        RobustReconstructor {
            index: &self.index,
            table: self.h,
        }
    }

    /// Majority vote with zero empirical robust risk on a robustly
    /// realizable sample.
    pub fn learn_realizable(&self, s: &[Example], seed: u64) -> Result<Learned> {
        check_sample(s, self.h.n_instances())?;
        if s.is_empty() {
            let mut pred = Predictor::from_row(self.h, 0, "robust-realizable");
            pred.provenance.flag("empty sample: row 0");
            return Ok(Learned {
                predictor: pred,
                compression: CompressionSet::new(Vec::new(), 0),
            });
        }
        if self.index.consistent_rows(s).is_clear() {
            return Err(Error::RealizabilityViolation(
                "no row has zero empirical robust risk on the sample".into(),
            ));
        }
        let u = self.u;
        let points: Vec<Example> = distinct_examples(s).into_iter().map(|(e, _)| e).collect();
        let inflated = InflatedSample::new(s, u);
        let subclass = FiniteSubclass::build(&self.index, &points, self.vc, self.subset_cap, derive_seed(seed, 11));
        let discretized = DiscretizedSample::build(self.h, &inflated, &subclass);
        let reps: Vec<Example> = discretized.representatives.iter().map(|&j| inflated.pairs[j]).collect();
        let rep_origin: Vec<usize> = discretized.representatives.iter().map(|&j| inflated.origin[j]).collect();

        // errs[m] = reps on which subclass member m is wrong
        let errs: Vec<FixedBitSet> = subclass
            .rows
            .iter()
            .map(|&r| {
                let mut b = FixedBitSet::with_capacity(reps.len());
                for (j, e) in reps.iter().enumerate() {
                    if self.h.get(r, e.x) != e.y {
                        b.insert(j);
                    }
                }
                b
            })
            .collect();
        let weighted = |bits: &FixedBitSet, w: &[f64]| -> f64 { bits.ones().map(|j| w[j]).sum() };

        let start = self.vc.max(1).min(reps.len());
        let mut size = start;
        let mut max_size = 0usize;
        let mut substituted = 0usize;
        let h = self.h;
        let index = &self.index;
        let weak = |w: &[f64], rng: &mut rand_chacha::ChaCha8Rng| -> Result<Voter> {
            loop {
                let full = size >= reps.len();
                let dist = WeightedIndex::new(w)
                    .map_err(|e| Error::BudgetExhausted(format!("boosting weights unusable: {e}")))?;
                let attempts = if full { 1 } else { WEAK_RESAMPLES };
                for _ in 0..attempts {
                    let drawn: Vec<usize> = if full {
                        (0..reps.len()).collect()
                    } else {
                        (0..size).map(|_| dist.sample(rng)).collect()
                    };
                    let mut mask = FixedBitSet::with_capacity(reps.len());
                    drawn.iter().for_each(|&j| mask.insert(j));
                    let consistent: Vec<usize> = (0..errs.len()).filter(|&m| errs[m].is_disjoint(&mask)).collect();
                    if consistent.is_empty() {
                        continue;
                    }
                    if consistent.iter().any(|&m| weighted(&errs[m], w) > WEAK_ERROR + 1e-12) {
                        continue;
                    }
                    let mut origins: Vec<usize> = drawn.iter().map(|&j| rep_origin[j]).collect();
                    origins.sort_unstable();
                    origins.dedup();
                    let support: Vec<Example> = origins.iter().map(|&i| s[i]).collect();
                    let row = rerm_indexed(index, &support);
                    let own_error: f64 = reps
                        .iter()
                        .zip(w)
                        .filter(|(e, _)| h.get(row, e.x) != e.y)
                        .map(|(_, p)| p)
                        .sum();
                    max_size = max_size.max(drawn.len());
                    if own_error <= WEAK_ERROR + 1e-12 {
                        return Ok(Voter::new(h.row(row).to_vec(), support).with_row(row));
                    }
                    substituted += 1;
                    let m = consistent[0];
                    let r = subclass.rows[m];
                    return Ok(Voter::new(h.row(r).to_vec(), subclass.generators[m].clone()).with_row(r));
                }
                if full {
                    return Err(Error::BudgetExhausted(
                        "no subclass member fits the full discretized sample".into(),
                    ));
                }
                size = (size * 2).min(reps.len());
            }
        };
        let robust_ok = |labels: &[bool]| points.iter().all(|e| !robust_loss_unchecked(labels, u, e.x, e.y));
        let state = alpha_boost_until(weak, &reps, LossKind::ZeroOne, &BoostOptions::default(), derive_seed(seed, 12), robust_ok)?;
        let k_target = (self.sparsify_factor * self.dual_vc).max(1);
        let sparse = sparsify_until(&state, k_target, derive_seed(seed, 13), robust_ok);
        let kept: Vec<&Voter> = sparse.voters.iter().map(|&i| &state.voters[i]).collect();
        let labels = majority_vote(kept.iter().map(|v| v.outputs.as_slice()), self.h.n_instances());
        if !robust_ok(&labels) {
            return Err(Error::StructuralCheck(
                "robust majority vote errs on its training sample".into(),
            ));
        }
        let parts: Vec<Vec<Example>> = kept.iter().map(|v| v.support.clone()).collect();
        let bound = max_size.max(1) * (state.round_cap << crate::compress::CAP_DOUBLINGS);
        let compression = CompressionSet::new(parts.clone(), bound);

        let mut prov = Provenance::new("robust-realizable")
            .detail("vc", self.vc)
            .detail("dual_vc", self.dual_vc)
            .detail("inflated", inflated.len())
            .detail("subsets_considered", subclass.subsets_considered)
            .detail("subclass_size", subclass.len())
            .detail("representatives", reps.len())
            .detail("rounds", state.round)
            .detail("round_cap", state.round_cap)
            .detail("weak_size_start", start)
            .detail("weak_size_max", max_size)
            .detail("k_target", k_target)
            .detail("kept_voters", kept.len())
            .detail("sparsify_attempts", sparse.attempts)
            .detail("compression_size", compression.size());
        if subclass.subsampled {
            prov.flag(format!("subclass subsets subsampled to {}", self.subset_cap));
        }
        if substituted > 0 {
            prov.flag(format!("{substituted} rounds used a subclass member in place of the RERM voter"));
        }
        if sparse.fallback {
            prov.flag("sparsification retry cap reached: full voter set kept");
        }
        prov.voter_rows = kept.iter().filter_map(|v| v.row).collect();
        prov.compression = parts;
        Ok(Learned {
            predictor: Predictor::new(labels, prov),
            compression,
        })
    }

    /// Agnostic reduction: learn realizably on the points where the row with
    /// the most robustly correct points is correct.
    pub fn learn_agnostic(&self, s: &[Example], seed: u64) -> Result<Learned> {
        if s.is_empty() {
            return invalid("agnostic learning needs a non-empty sample");
        }
        check_sample(s, self.h.n_instances())?;
        let mistakes = self.index.mistake_counts(&distinct_examples(s));
        let best = (0..mistakes.len()).min_by_key(|&r| (mistakes[r], r)).unwrap_or(0);
        let kept: Vec<Example> = s
            .iter()
            .copied()
            .filter(|e| self.index.correct(e.x, e.y).contains(best))
            .collect();
        let mut learned = if kept.is_empty() {
            let mut pred = Predictor::from_row(self.h, 0, "robust-realizable");
            pred.provenance.flag("empty realizable subset: row 0");
            Learned {
                predictor: pred,
                compression: CompressionSet::new(Vec::new(), 0),
            }
        } else {
            self.learn_realizable(&kept, seed)?
        };
        let prov = &mut learned.predictor.provenance;
        prov.learner = "robust-agnostic".into();
        *prov = std::mem::take(prov)
            .detail("best_row", best)
            .detail("best_row_mistakes", mistakes[best])
            .detail("kept", kept.len());
        Ok(learned)
    }
}

pub fn robust_realizable_learn(
    h: &HypothesisTable,
    u: &Perturbation,
    s: &[Example],
    _params: &PacParams,
    seed: u64,
) -> Result<Learned> {
    RobustLearner::new(h, u)?.learn_realizable(s, seed)
}

pub fn robust_agnostic_learn(
    h: &HypothesisTable,
    u: &Perturbation,
    s: &[Example],
    _params: &PacParams,
    seed: u64,
) -> Result<Learned> {
    RobustLearner::new(h, u)?.learn_agnostic(s, seed)
}

/// 0-1 ERM over the rows robustly self-consistent on `support`; the output
/// is a row of `h`.
pub fn learn_known_support(h: &HypothesisTable, u: &Perturbation, support: &[usize], s: &[Example]) -> Result<Predictor> {
    check_sample(s, h.n_instances())?;
    if let Some(e) = s.iter().find(|e| !support.contains(&e.x)) {
        return invalid(format!("sampled instance {} lies outside the support", e.x));
    }
    let restricted = restrict_consistent(h, u, support)?;
    if restricted.is_empty() {
        return Err(Error::RealizabilityViolation(
            "no hypothesis is robustly self-consistent on the support".into(),
        ));
    }
    let best = restricted
        .rows
        .iter()
        .copied()
        .min_by_key(|&r| (s.iter().filter(|e| h.get(r, e.x) != e.y).count(), r))
        .expect("restricted class is non-empty");
    let mut pred = Predictor::from_row(h, best, "known-support");
    pred.provenance = std::mem::take(&mut pred.provenance).detail("consistent_rows", restricted.rows.len());
    debug_assert!(support.iter().all(|&x| is_self_consistent_on(h.row(best), u, x)));
    Ok(pred)
}

/// Zero-one learning under robust realizability: convert to the partial
/// class and learn it realizably.
pub fn learn_01_robustly_realizable(
    h: &HypothesisTable,
    u: &Perturbation,
    s: &[Example],
    params: &PacParams,
    seed: u64,
) -> Result<Predictor> {
    let p = to_partial(h, u)?;
    if !p.is_consistent(s) {
        return Err(Error::RealizabilityViolation(
            "sample is not consistent with any robustly self-consistent hypothesis".into(),
        ));
    }
    let d = dims::partial_vc(&p, SearchLimits::unguarded())?.size;
    let mut pred = partial_realizable_learn_with_dim(&p, d, s, params, seed)?;
    pred.provenance.learner = "robust-01".into();
    Ok(pred)
}

/// Learner for the first phase of GRASS.
pub trait PartialLearner: Send + Sync {
    fn name(&self) -> &str;

    /// `realizable` tells whether `s` is consistent with the class.
    fn learn(
        &self,
        p: &PartialTable,
        partial_vc: usize,
        s: &[Example],
        realizable: bool,
        params: &PacParams,
        seed: u64,
    ) -> Result<Predictor>;
}

/// Boosted one-inclusion learner, with the agnostic reduction when the
/// sample is not realizable.
#[derive(Debug, Clone, Copy, Default)]
pub struct BoostedOneInclusion;

impl PartialLearner for BoostedOneInclusion {
    fn name(&self) -> &str {
        "boosted-one-inclusion"
    }

    fn learn(
        &self,
        p: &PartialTable,
        partial_vc: usize,
        s: &[Example],
        realizable: bool,
        params: &PacParams,
        seed: u64,
    ) -> Result<Predictor> {
        if realizable {
            partial_realizable_learn_with_dim(p, partial_vc, s, params, seed)
        } else {
            partial_agnostic_learn_with_dim(p, partial_vc, s, params, seed)
        }
    }
}

/// Everything GRASS produced on one run.
#[derive(Debug, Clone)]
pub struct GrassRun {
    pub predictor: Predictor,
    pub first_phase: Predictor,
    pub pseudo_labeled: Vec<Example>,
}

/// GRASS over a fixed class: converted partial class, its partial VC, and
/// the supervised robust learner are built once.
pub struct Grass<'a> {
    partial: PartialTable,
    partial_vc: usize,
    robust: RobustLearner<'a>,
    learner: Box<dyn PartialLearner + 'a>,
    n: usize,
}

impl<'a> Grass<'a> {
    pub fn new(h: &'a HypothesisTable, u: &'a Perturbation) -> Result<Self> {
        Self::with_learner(h, u, Box::new(BoostedOneInclusion))
    }

    pub fn with_learner(h: &'a HypothesisTable, u: &'a Perturbation, learner: Box<dyn PartialLearner + 'a>) -> Result<Self> {
        let partial = to_partial(h, u)?;
        let partial_vc = dims::partial_vc(&partial, SearchLimits::unguarded())?.size;
        Ok(Self {
            partial,
            partial_vc,
            robust: RobustLearner::new(h, u)?,
            learner,
            n: h.n_instances(),
        })
    }

    pub fn from_parts(robust: RobustLearner<'a>, partial: PartialTable, partial_vc: usize) -> Self {
        let n = partial.n_instances();
        Self {
            partial,
            partial_vc,
            robust,
            learner: Box::new(BoostedOneInclusion),
            n,
        }
    }

    pub fn partial(&self) -> &PartialTable {
        &self.partial
    }

    pub fn partial_vc(&self) -> usize {
        self.partial_vc
    }

    pub fn robust(&self) -> &RobustLearner<'a> {
        &self.robust
    }

    pub fn learn(&self, s_l: &[Example], s_u: &[usize], params: &PacParams, seed: u64) -> Result<Predictor> {
        Ok(self.run(s_l, s_u, params, seed)?.predictor)
    }

    pub fn run(&self, s_l: &[Example], s_u: &[usize], params: &PacParams, seed: u64) -> Result<GrassRun> {
        check_sample(s_l, self.n)?;
        if let Some(&x) = s_u.iter().find(|&&x| x >= self.n) {
            return invalid(format!("unlabeled instance {x} out of range"));
        }
        let phase = params.split_for_phase();
        let realizable = self.partial.is_consistent(s_l);
        let h1 = self
            .learner
            .learn(&self.partial, self.partial_vc, s_l, realizable, &phase, derive_seed(seed, 1))?;
        let pseudo: Vec<Example> = s_u.iter().map(|&x| Example::new(x, h1.outputs[x])).collect();
        let mut h2 = if pseudo.is_empty() {
            let mut pred = Predictor::from_row(self.robust.h, 0, "robust-agnostic");
            pred.provenance.flag("empty unlabeled sample: row 0");
            pred
        } else {
            self.robust.learn_agnostic(&pseudo, derive_seed(seed, 2))?.predictor
        };
        let second = std::mem::take(&mut h2.provenance);
        let mut prov = Provenance::new("grass")
            .detail("first_phase_learner", self.learner.name())
            .detail("first_phase_realizable", realizable)
            .detail("first_phase", &h1)
            .detail("second_phase", &second)
            .detail("labeled", s_l)
            .detail("pseudo_labeled", &pseudo);
        prov.voter_rows = second.voter_rows.clone();
        prov.compression = second.compression.clone();
        prov.flags = second.flags.clone();
        h2.provenance = prov;
        Ok(GrassRun {
            predictor: h2,
            first_phase: h1,
            pseudo_labeled: pseudo,
        })
    }
}

pub fn grass(
    h: &HypothesisTable,
    u: &Perturbation,
    s_l: &[Example],
    s_u: &[usize],
    params: &PacParams,
    seed: u64,
) -> Result<Predictor> {
    Grass::new(h, u)?.learn(s_l, s_u, params, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::empirical_robust_risk;

    fn small() -> (HypothesisTable, Perturbation) {
        // 0 -> {0,1}, 1 -> {1}, 2 -> {1,2}, 3 -> {3}
        let u = Perturbation::new(4, vec![vec![0, 1], vec![1], vec![1, 2], vec![3]]).unwrap();
        let rows = (0..16u32)
            .map(|b| (0..4).map(|i| b >> i & 1 == 1).collect())
            .collect();
        (HypothesisTable::new(4, rows).unwrap(), u)
    }

    #[test]
    fn rerm_conventions() {
        let (h, u) = small();
        assert_eq!(rerm(&h, &u, &[]).unwrap(), 0);
        let s = vec![Example::new(0, true), Example::new(3, false)];
        let r = rerm(&h, &u, &s).unwrap();
        assert_eq!(empirical_robust_risk(h.row(r), &u, &s).unwrap(), 0.0);
        // rows 0b0011 = 3 is the first with 1 on {0,1} and 0 on 3
        assert_eq!(r, 3);
    }

    #[test]
    fn inflation_uses_first_index() {
        let (_, u) = small();
        let s = vec![Example::new(0, true), Example::new(3, false), Example::new(2, false)];
        let inf = InflatedSample::new(&s, &u);
        assert_eq!(
            inf.pairs,
            vec![Example::new(0, true), Example::new(1, true), Example::new(3, false), Example::new(2, false)]
        );
        assert_eq!(inf.origin, vec![0, 0, 1, 2]);
    }

    #[test]
    fn combinations_and_binomials() {
        let mut count = 0;
        for_each_combination(5, 2, |_| count += 1);
        assert_eq!(count, 10);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(40, 6), 3_838_380);
    }

    #[test]
    fn single_point_realizable() {
        let (h, u) = small();
        let learner = RobustLearner::new(&h, &u).unwrap();
        let s = vec![Example::new(2, true)];
        let out = learner.learn_realizable(&s, 0).unwrap();
        assert_eq!(empirical_robust_risk(&out.predictor.outputs, &u, &s).unwrap(), 0.0);
        assert_eq!(out.predictor.provenance.voter_rows.len(), 1);
    }

    #[test]
    fn non_realizable_is_rejected() {
        let (h, u) = small();
        let learner = RobustLearner::new(&h, &u).unwrap();
        let s = vec![Example::new(0, true), Example::new(2, false)];
        assert!(matches!(learner.learn_realizable(&s, 0), Err(Error::RealizabilityViolation(_))));
        let out = learner.learn_agnostic(&s, 0).unwrap();
        assert!(empirical_robust_risk(&out.predictor.outputs, &u, &s).unwrap() <= 0.5);
    }

    #[test]
    fn known_support_is_proper() {
        let (h, u) = small();
        let s = vec![Example::new(0, true), Example::new(3, false)];
        let pred = learn_known_support(&h, &u, &[0, 3], &s).unwrap();
        assert!(h.find_row(&pred.outputs).is_some());
        assert!(learn_known_support(&h, &u, &[3], &s).is_err());
    }

    #[test]
    fn bad_rerm_requires_the_construction() {
        let (h, u) = small();
        assert!(matches!(bad_rerm(&h, &u, &[], 0, false), Err(Error::StructuralCheck(_))));
        assert!(bad_rerm(&h, &u, &[], 0, true).is_ok());
    }
}
