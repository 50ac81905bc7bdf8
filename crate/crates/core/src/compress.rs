//! α-Boost with a pluggable weak learner, majority votes, sparsification,
//! sample compression sets, and two compression generalization bounds.

use rand::distributions::{Distribution as _, Uniform};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::instance::{Example, Perturbation};
use crate::loss::robust_loss_unchecked;
use crate::sample::rng_from_seed;

/// Multiplicative step of the weight update.
pub const ALPHA: f64 = 1.0 / 3.0;
/// Largest weighted error a weak hypothesis may have.
pub const WEAK_ERROR: f64 = 1.0 / 3.0;
/// The round cap is multiplied by 2 this many times before giving up.
pub const CAP_DOUBLINGS: u32 = 3;
/// Sparsification draws before falling back to the full voter set.
pub const SPARSIFY_RETRIES: usize = 64;

#[derive(Debug, Clone, Copy)]
pub enum LossKind<'a> {
    ZeroOne,
    Robust(&'a Perturbation),
}

impl LossKind<'_> {
    /// `true` when `labels` errs on `e`.
    pub fn errs(&self, labels: &[bool], e: &Example) -> bool {
        match self {
            LossKind::ZeroOne => labels[e.x] != e.y,
            LossKind::Robust(u) => robust_loss_unchecked(labels, u, e.x, e.y),
        }
    }

    pub fn zero_on(&self, labels: &[bool], points: &[Example]) -> bool {
        points.iter().all(|e| !self.errs(labels, e))
    }
}

/// One weak hypothesis with the training points it was built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Voter {
    #[serde(with = "crate::instance::bits01")]
    pub outputs: Vec<bool>,
    pub support: Vec<Example>,
    /// Row of the hypothesis table, when the voter is one.
    pub row: Option<usize>,
}

impl Voter {
    pub fn new(outputs: Vec<bool>, support: Vec<Example>) -> Self {
        Self {
            outputs,
            support,
            row: None,
        }
    }

    pub fn with_row(mut self, row: usize) -> Self {
        self.row = Some(row);
        self
    }
}

#[derive(Debug, Clone)]
pub struct BoostOptions {
    pub alpha: f64,
    /// Base round cap; `None` means `ceil(12 ln |S|)`, at least 1.
    pub round_cap: Option<usize>,
    /// Starting weights over the working points; uniform when `None`.
    pub initial_weights: Option<Vec<f64>>,
}

impl Default for BoostOptions {
    fn default() -> Self {
        Self {
            alpha: ALPHA,
            round_cap: None,
            initial_weights: None,
        }
    }
}

pub fn default_round_cap(m: usize) -> usize {
    ((12.0 * (m.max(1) as f64).ln()).ceil() as usize).max(1)
}

#[derive(Debug, Clone)]
pub struct BoostState {
    /// Current weights over the working points.
    pub weights: Vec<f64>,
    pub round: usize,
    pub voters: Vec<Voter>,
    /// Base cap the run was configured with.
    pub round_cap: usize,
}

impl BoostState {
    pub fn majority(&self, n_instances: usize) -> Vec<bool> {
        majority_vote(self.voters.iter().map(|v| v.outputs.as_slice()), n_instances)
    }

    pub fn supports(&self) -> Vec<Vec<Example>> {
        self.voters.iter().map(|v| v.support.clone()).collect()
    }
}

/// Unweighted majority; ties and the empty vote give 0.
pub fn majority_vote<'a>(voters: impl IntoIterator<Item = &'a [bool]>, n_instances: usize) -> Vec<bool> {
    let mut ones = vec![0usize; n_instances];
    let mut count = 0usize;
    for v in voters {
        count += 1;
        for (o, &b) in ones.iter_mut().zip(v) {
            *o += b as usize;
        }
    }
    ones.into_iter().map(|k| 2 * k > count).collect()
}

pub fn weighted_error(labels: &[bool], points: &[Example], weights: &[f64], loss: LossKind) -> f64 {
    points
        .iter()
        .zip(weights)
        .filter(|(e, _)| loss.errs(labels, e))
        .map(|(_, w)| w)
        .sum()
}

/// Runs α-Boost until the majority vote has zero loss on `points`.
///
/// `weak` receives the current weights and a generator and must return a
/// voter; its error budget is the callback's responsibility.
pub fn alpha_boost<W>(weak: W, points: &[Example], loss: LossKind, options: &BoostOptions, seed: u64) -> Result<BoostState>
where
    W: FnMut(&[f64], &mut ChaCha8Rng) -> Result<Voter>,
{
    alpha_boost_until(weak, points, loss, options, seed, |labels| loss.zero_on(labels, points))
}

/// [`alpha_boost`] with a caller-supplied stopping test on the majority
/// labeling of the whole instance space.
pub fn alpha_boost_until<W, D>(
    mut weak: W,
    points: &[Example],
    loss: LossKind,
    options: &BoostOptions,
    seed: u64,
    done: D,
) -> Result<BoostState>
where
    W: FnMut(&[f64], &mut ChaCha8Rng) -> Result<Voter>,
    D: Fn(&[bool]) -> bool,
{
    if points.is_empty() {
        return invalid("boosting needs at least one working point");
    }
    let mut weights = match &options.initial_weights {
        Some(w) if w.len() == points.len() => normalize(w.clone())?,
        Some(w) => return invalid(format!("{} initial weights for {} points", w.len(), points.len())),
        None => vec![1.0 / points.len() as f64; points.len()],
    };
    let round_cap = options.round_cap.unwrap_or_else(|| default_round_cap(points.len()));
    let max_rounds = round_cap << CAP_DOUBLINGS;
    let mut rng = rng_from_seed(seed);
    let mut voters: Vec<Voter> = Vec::new();
    let mut ones: Vec<usize> = Vec::new();
    let mut correct_votes = vec![0usize; points.len()];
    for round in 1..=max_rounds {
        let voter = weak(&weights, &mut rng)?;
        if ones.is_empty() {
            ones = vec![0; voter.outputs.len()];
        }
        if voter.outputs.len() != ones.len() {
            return invalid("weak hypotheses disagree on the instance count");
        }
        for (o, &b) in ones.iter_mut().zip(&voter.outputs) {
            *o += b as usize;
        }
        for (i, e) in points.iter().enumerate() {
            if !loss.errs(&voter.outputs, e) {
                weights[i] *= (-options.alpha).exp();
                correct_votes[i] += 1;
            }
        }
        weights = normalize(weights)?;
        voters.push(voter);
        let labels: Vec<bool> = ones.iter().map(|&k| 2 * k > round).collect();
        if done(&labels) {
            return Ok(BoostState {
                weights,
                round,
                voters,
                round_cap,
            });
        }
    }
    let margins: Vec<f64> = correct_votes
        .iter()
        .map(|&c| (2.0 * c as f64 - max_rounds as f64) / max_rounds as f64)
        .collect();
    let worst_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Err(Error::BoostingFailure {
        rounds: max_rounds,
        worst_margin,
        margins,
    })
}

fn normalize(mut w: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() || w.iter().any(|&v| v < 0.0) {
        return invalid("weights must be non-negative with positive total");
    }
    w.iter_mut().for_each(|v| *v /= total);
    Ok(w)
}

/// Indices into the voter sequence, possibly repeated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sparsified {
    pub voters: Vec<usize>,
    pub attempts: usize,
    /// The retry cap was hit and the full voter set was kept.
    pub fallback: bool,
}

/// Draws `k_target` voters uniformly with replacement until their majority
/// has zero loss on `points`.
pub fn sparsify(state: &BoostState, points: &[Example], loss: LossKind, k_target: usize, seed: u64) -> Sparsified {
    sparsify_until(state, k_target, seed, |labels| loss.zero_on(labels, points))
}

pub fn sparsify_until<D: Fn(&[bool]) -> bool>(state: &BoostState, k_target: usize, seed: u64, done: D) -> Sparsified {
    let t = state.voters.len();
    let full = || (0..t).collect::<Vec<_>>();
    if t <= 1 || k_target >= t || k_target == 0 {
        return Sparsified {
            voters: full(),
            attempts: 0,
            fallback: false,
        };
    }
    let n = state.voters[0].outputs.len();
    let mut rng = rng_from_seed(seed);
    let pick = Uniform::new(0, t);
    for attempt in 1..=SPARSIFY_RETRIES {
        let chosen: Vec<usize> = (0..k_target).map(|_| pick.sample(&mut rng)).collect();
        let labels = majority_vote(chosen.iter().map(|&i| state.voters[i].outputs.as_slice()), n);
        if done(&labels) {
            return Sparsified {
                voters: chosen,
                attempts: attempt,
                fallback: false,
            };
        }
    }
    Sparsified {
        voters: full(),
        attempts: SPARSIFY_RETRIES,
        fallback: true,
    }
}

/// Ordered compression set: one labeled subset per voter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompressionSet {
    pub parts: Vec<Vec<Example>>,
    /// Declared bound on the total number of stored examples.
    pub size_bound: usize,
}

impl CompressionSet {
    pub fn new(parts: Vec<Vec<Example>>, size_bound: usize) -> Self {
        Self { parts, size_bound }
    }

    pub fn size(&self) -> usize {
        self.parts.iter().map(|p| p.len()).sum()
    }
}

/// The reconstruction map of a compression scheme.
pub trait Reconstruct {
    fn reconstruct(&self, set: &CompressionSet) -> Result<Vec<bool>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RoundTrip {
    pub subset_of_sample: bool,
    pub within_bound: bool,
    pub consistent: bool,
}

impl RoundTrip {
    pub fn ok(&self) -> bool {
        self.subset_of_sample && self.within_bound && self.consistent
    }
}

/// Checks `κ(S) ⊆ S`, the size bound, and that the reconstruction has zero
/// loss on `sample`.
pub fn round_trip<R: Reconstruct + ?Sized>(
    reconstructor: &R,
    set: &CompressionSet,
    sample: &[Example],
    loss: LossKind,
) -> Result<RoundTrip> {
    let subset_of_sample = set.parts.iter().flatten().all(|e| sample.contains(e));
    let labels = reconstructor.reconstruct(set)?;
    Ok(RoundTrip {
        subset_of_sample,
        within_bound: set.size() <= set.size_bound,
        consistent: loss.zero_on(&labels, sample),
    })
}

fn check_bound_args(kappa: usize, m: usize, delta: f64) -> Result<f64> {
    if kappa == 0 || kappa > m {
        return invalid(format!("compression size {kappa} must lie in 1..={m}"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta {delta} not in (0,1)"));
    }
    Ok(kappa as f64 * (m as f64).ln() + (1.0 / delta).ln())
}

/// `sqrt((ℓ ln m + ln 1/δ) / m)`, all constants 1.
pub fn graepel_bound(kappa: usize, m: usize, delta: f64) -> Result<f64> {
    let c = check_bound_args(kappa, m, delta)?;
    Ok((c / m as f64).sqrt())
}

/// `sqrt(R̂ (ℓ ln m + ln 1/δ) / m) + (ℓ ln m + ln 1/δ) / m`, all constants 1.
pub fn bernstein_bound(kappa: usize, m: usize, delta: f64, empirical_risk: f64) -> Result<f64> {
    let c = check_bound_args(kappa, m, delta)?;
    if !(0.0..=1.0).contains(&empirical_risk) {
        return invalid(format!("empirical risk {empirical_risk} not in [0,1]"));
    }
    let m = m as f64;
    Ok((empirical_risk * c / m).sqrt() + c / m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(usize, bool)]) -> Vec<Example> {
        v.iter().map(|&(x, y)| Example::new(x, y)).collect()
    }

    #[test]
    fn single_point_single_round() {
        let s = pts(&[(0, true)]);
        let state = alpha_boost(
            |_: &[f64], _: &mut ChaCha8Rng| Ok(Voter::new(vec![true], s.clone())),
            &s,
            LossKind::ZeroOne,
            &BoostOptions::default(),
            0,
        )
        .unwrap();
        assert_eq!(state.round, 1);
        assert_eq!(state.voters.len(), 1);
    }

    #[test]
    fn correct_points_are_down_weighted() {
        let s = pts(&[(0, true), (1, true)]);
        let mut first = true;
        let weak = |_: &[f64], _: &mut ChaCha8Rng| {
            let out = if first { vec![true, false] } else { vec![true, true] };
            first = false;
            Ok(Voter::new(out, vec![]))
        };
        let opts = BoostOptions {
            round_cap: Some(1),
            ..BoostOptions::default()
        };
        // rounds 1 and 2 leave point 1 at or below a tie, round 3 clears it
        let state = alpha_boost(weak, &s, LossKind::ZeroOne, &opts, 0).unwrap();
        assert_eq!(state.round, 3);
        let r = (-ALPHA).exp();
        // weights ∝ (r^3, r^2) after three rounds
        let want0 = r / (r + 1.0);
        assert!((state.weights[0] - want0).abs() < 1e-12);
        assert!((state.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn failure_reports_margins() {
        let s = pts(&[(0, true)]);
        let opts = BoostOptions {
            round_cap: Some(1),
            ..BoostOptions::default()
        };
        let err = alpha_boost(
            |_: &[f64], _: &mut ChaCha8Rng| Ok(Voter::new(vec![false], vec![])),
            &s,
            LossKind::ZeroOne,
            &opts,
            0,
        )
        .unwrap_err();
        match err {
            Error::BoostingFailure { rounds, margins, .. } => {
                assert_eq!(rounds, 8);
                assert_eq!(margins, vec![-1.0]);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn majority_ties_are_zero() {
        let a = [true, false];
        let b = [false, false];
        assert_eq!(majority_vote([&a[..], &b[..]], 2), vec![false, false]);
        assert_eq!(majority_vote(std::iter::empty::<&[bool]>(), 3), vec![false; 3]);
    }

    fn state_of(outputs: Vec<Vec<bool>>) -> BoostState {
        BoostState {
            weights: vec![1.0],
            round: outputs.len(),
            voters: outputs.into_iter().map(|o| Voter::new(o, vec![])).collect(),
            round_cap: 1,
        }
    }

    #[test]
    fn sparsify_trivial_cases() {
        let s = pts(&[(0, true)]);
        let one = state_of(vec![vec![true]]);
        assert_eq!(sparsify(&one, &s, LossKind::ZeroOne, 1, 0).voters, vec![0]);
        let three = state_of(vec![vec![true], vec![true], vec![false]]);
        assert_eq!(sparsify(&three, &s, LossKind::ZeroOne, 5, 0).voters, vec![0, 1, 2]);
        let r = sparsify(&three, &s, LossKind::ZeroOne, 1, 0);
        assert!(!r.fallback);
        assert!(r.voters.iter().all(|&i| i < 2));
    }

    #[test]
    fn bounds_basic_shape() {
        let c = 4.0 * (100f64).ln() + (1.0f64 / 0.05).ln();
        assert!((bernstein_bound(4, 100, 0.05, 0.0).unwrap() - c / 100.0).abs() < 1e-12);
        assert!(graepel_bound(0, 10, 0.1).is_err());
        assert!(graepel_bound(11, 10, 0.1).is_err());
        assert!(bernstein_bound(1, 10, 0.1, 1.5).is_err());
        for m in [10usize, 100, 1000] {
            assert!(graepel_bound(2, 2 * m, 0.1).unwrap() < graepel_bound(2, m, 0.1).unwrap());
            assert!(bernstein_bound(2, 2 * m, 0.1, 0.2).unwrap() < bernstein_bound(2, m, 0.1, 0.2).unwrap());
        }
    }
}
