//! Experiment harness: seeded episodes (sample, learn, exact risk), success
//! rates with Wilson intervals, minimal-budget search, the labeled-budget
//! separation experiment on the gap family, agnostic multiplier
//! measurement, and an exhaustive lower bound for proper rules.
//!
//! A budget passes when the lower end of the 95% Wilson interval of the
//! success rate is at least `1 - delta`. Trial `t` always uses the seed
//! `derive_seed(seed, t)`, so samples at a larger budget extend the samples
//! at a smaller one.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::{
    gen_agnostic_sigma, gen_allfns_overlap, gen_gap, gen_gap_with_target, gen_improper, gen_three_halves, Construction,
};
use crate::dims::{self, SearchLimits};
use crate::error::{invalid, Error, Result};
use crate::instance::{Example, PacParams, Predictor, ProblemInstance};
use crate::loss::{risk, robust_risk};
use crate::partial::{partial_realizable_learn_with_dim, to_partial, PartialTable};
use crate::robust::{learn_01_robustly_realizable, learn_known_support, Grass, RobustLearner};
use crate::sample::{derive_seed, rng_from_seed, sample, sample_marginal};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959964;
const RISK_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerId {
    Grass,
    RobustSupervised,
    KnownSupport,
    #[serde(rename = "robust-01")]
    Robust01,
    PartialRealizable,
}

impl LearnerId {
    pub const ALL: [LearnerId; 5] = [
        LearnerId::Grass,
        LearnerId::RobustSupervised,
        LearnerId::KnownSupport,
        LearnerId::Robust01,
        LearnerId::PartialRealizable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerId::Grass => "grass",
            LearnerId::RobustSupervised => "robust-supervised",
            LearnerId::KnownSupport => "known-support",
            LearnerId::Robust01 => "robust-01",
            LearnerId::PartialRealizable => "partial-realizable",
        }
    }

    /// Whether the learner is judged by robust risk (otherwise 0-1 risk).
    pub fn robust_loss(self) -> bool {
        matches!(self, LearnerId::Grass | LearnerId::RobustSupervised | LearnerId::KnownSupport)
    }

    pub fn uses_unlabeled(self) -> bool {
        self == LearnerId::Grass
    }
}

impl fmt::Display for LearnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerId::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown learner {s:?}")))
    }
}

enum Kind<'a> {
    Grass(Grass<'a>),
    Robust(RobustLearner<'a>),
    KnownSupport(Vec<usize>),
    Robust01,
    Partial(PartialTable, usize),
}

/// A learner bound to one instance, with its class-level work done once.
pub struct Prepared<'a> {
    pub learner: LearnerId,
    pub instance: &'a ProblemInstance,
    kind: Kind<'a>,
}

impl<'a> Prepared<'a> {
    pub fn new(learner: LearnerId, instance: &'a ProblemInstance) -> Result<Self> {
        let (h, u) = (&instance.hypotheses, &instance.perturbation);
        let kind = match learner {
            LearnerId::Grass => Kind::Grass(Grass::new(h, u)?),
            LearnerId::RobustSupervised => Kind::Robust(RobustLearner::new(h, u)?),
            LearnerId::KnownSupport => Kind::KnownSupport(instance.distribution.support()),
            LearnerId::Robust01 => Kind::Robust01,
            LearnerId::PartialRealizable => {
                let p = to_partial(h, u)?;
                let d = dims::partial_vc(&p, SearchLimits::unguarded())?.size;
                Kind::Partial(p, d)
            }
        };
        Ok(Self { learner, instance, kind })
    }

    pub fn learn(&self, s_l: &[Example], s_u: &[usize], params: &PacParams, seed: u64) -> Result<Predictor> {
        let inst = self.instance;
        let (h, u) = (&inst.hypotheses, &inst.perturbation);
        match &self.kind {
            Kind::Grass(g) => g.learn(s_l, s_u, params, seed),
            Kind::Robust(r) if s_l.is_empty() => Ok(r.learn_realizable(s_l, seed)?.predictor),
            Kind::Robust(r) => Ok(r.learn_agnostic(s_l, seed)?.predictor),
            Kind::KnownSupport(support) => learn_known_support(h, u, support, s_l),
            Kind::Robust01 => learn_01_robustly_realizable(h, u, s_l, params, seed),
            Kind::Partial(p, d) => partial_realizable_learn_with_dim(p, *d, s_l, params, seed),
        }
    }

    /// Exact risk of `labels` under the learner's loss.
    pub fn risk(&self, labels: &[bool]) -> f64 {
        let inst = self.instance;
        if self.learner.robust_loss() {
            robust_risk(labels, &inst.perturbation, &inst.distribution)
        } else {
            risk(labels, &inst.distribution)
        }
    }

    /// Best risk over the rows of the class under the learner's loss.
    pub fn optimal_risk(&self) -> f64 {
        self.instance
            .hypotheses
            .rows()
            .iter()
            .map(|r| self.risk(r))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleBudget {
    pub m_l: usize,
    pub m_u: usize,
}

impl SampleBudget {
    pub fn new(m_l: usize, m_u: usize) -> Self {
        Self { m_l, m_u }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Episode {
    pub risk: Option<f64>,
    pub success: bool,
    pub error: Option<String>,
}

/// One seeded trial. Learner errors give a failed episode.
pub fn run_episode(
    prepared: &Prepared<'_>,
    budget: SampleBudget,
    params: &PacParams,
    threshold: f64,
    trial_seed: u64,
) -> Episode {
    let d = &prepared.instance.distribution;
    let s_l = sample(d, budget.m_l, derive_seed(trial_seed, 0));
    let s_u = if prepared.learner.uses_unlabeled() {
        sample_marginal(d, budget.m_u, derive_seed(trial_seed, 1))
    } else {
        Vec::new()
    };
    match prepared.learn(&s_l, &s_u, params, derive_seed(trial_seed, 2)) {
        Ok(pred) => {
            let r = prepared.risk(&pred.outputs);
            Episode {
                risk: Some(r),
                success: r <= threshold + RISK_SLACK,
                error: None,
            }
        }
        Err(e) => Episode {
            risk: None,
            success: false,
            error: Some(e.to_string()),
        },
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetResult {
    pub budget: SampleBudget,
    pub trials: usize,
    pub successes: usize,
    pub errors: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Median over completed episodes.
    pub median_risk: f64,
    pub risks: Vec<Option<f64>>,
}

impl BudgetResult {
    pub fn from_episodes(budget: SampleBudget, episodes: &[Episode]) -> Self {
        let successes = episodes.iter().filter(|e| e.success).count();
        let errors = episodes.iter().filter(|e| e.error.is_some()).count();
        let risks: Vec<Option<f64>> = episodes.iter().map(|e| e.risk).collect();
        let done: Vec<f64> = risks.iter().flatten().copied().collect();
        let (ci_low, ci_high) = wilson_interval(successes, episodes.len(), Z95);
        Self {
            budget,
            trials: episodes.len(),
            successes,
            errors,
            ci_low,
            ci_high,
            median_risk: median(&done),
            risks,
        }
    }

    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials.max(1) as f64
    }

    pub fn passes(&self, delta: f64) -> bool {
        self.ci_low >= 1.0 - delta
    }
}

/// Runs `trials` episodes at one budget, in parallel, in trial order.
pub fn evaluate_budget(
    prepared: &Prepared<'_>,
    budget: SampleBudget,
    params: &PacParams,
    threshold: f64,
    trials: usize,
    seed: u64,
) -> BudgetResult {
    let episodes: Vec<Episode> = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_episode(prepared, budget, params, threshold, derive_seed(seed, t)))
        .collect();
    BudgetResult::from_episodes(budget, &episodes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Labeled,
    Unlabeled,
}

fn default_start() -> usize {
    1
}

fn default_max() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchSpec {
    /// Evaluate exactly these budgets.
    Grid { budgets: Vec<SampleBudget> },
    /// Double along `axis` from `start` until a budget passes (at most
    /// `max`), then bisect down to the smallest passing budget. The other
    /// axis is held at `fixed`.
    Doubling {
        axis: Axis,
        #[serde(default)]
        fixed: usize,
        #[serde(default = "default_start")]
        start: usize,
        #[serde(default = "default_max")]
        max: usize,
    },
}

impl SearchSpec {
    pub fn labeled(fixed_unlabeled: usize, max: usize) -> Self {
        SearchSpec::Doubling {
            axis: Axis::Labeled,
            fixed: fixed_unlabeled,
            start: 1,
            max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SearchSpec::Grid { budgets } if budgets.is_empty() => invalid("search grid is empty"),
            SearchSpec::Doubling { start, max, .. } if *start == 0 || start > max => {
                invalid(format!("doubling search needs 1 <= start <= max, got {start}..{max}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalComplexity {
    pub family: String,
    pub n: usize,
    pub learner: LearnerId,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    /// Optimal risk of the class under the learner's loss.
    pub eta: f64,
    pub threshold: f64,
    /// Every evaluated budget, sorted.
    pub tested: Vec<BudgetResult>,
    /// Smallest passing budget found, if any.
    pub minimal: Option<SampleBudget>,
}

impl EmpiricalComplexity {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.tested
            .iter()
            .map(|b| CsvRow {
                family: self.family.clone(),
                n: self.n,
                learner: self.learner.as_str().to_string(),
                m_l: b.budget.m_l,
                m_u: b.budget.m_u,
                trials: b.trials,
                successes: b.successes,
                ci_low: b.ci_low,
                ci_high: b.ci_high,
                median_risk: b.median_risk,
                seed: self.seed,
            })
            .collect()
    }
}

/// A labeled instance to run experiments on.
#[derive(Debug, Clone)]
pub struct Target {
    pub family: String,
    pub n: usize,
    pub instance: ProblemInstance,
}

/// Searches for the smallest budget whose success rate passes.
pub fn estimate_complexity(
    target: &Target,
    learner: LearnerId,
    params: &PacParams,
    search: &SearchSpec,
    trials: usize,
    seed: u64,
) -> Result<EmpiricalComplexity> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    search.validate()?;
    let prepared = Prepared::new(learner, &target.instance)?;
    let eta = prepared.optimal_risk();
    let threshold = params.alpha_factor * eta + params.epsilon;
    let mut tested: Vec<BudgetResult> = Vec::new();
    let eval = |b: SampleBudget, tested: &mut Vec<BudgetResult>| -> bool {
        if let Some(r) = tested.iter().find(|r| r.budget == b) {
            return r.passes(params.delta);
        }
        let r = evaluate_budget(&prepared, b, params, threshold, trials, seed);
        let ok = r.passes(params.delta);
        tested.push(r);
        ok
    };
    let minimal = match search {
        SearchSpec::Grid { budgets } => {
            let mut best: Option<SampleBudget> = None;
            for &b in budgets {
                if eval(b, &mut tested) && best.map_or(true, |x| (b.m_l + b.m_u) < (x.m_l + x.m_u)) {
                    best = Some(b);
                }
            }
            best
        }
        &SearchSpec::Doubling { axis, fixed, start, max } => {
            let at = |m: usize| match axis {
                Axis::Labeled => SampleBudget::new(m, fixed),
                Axis::Unlabeled => SampleBudget::new(fixed, m),
            };
            let mut lo = start - 1;
            let mut hi = None;
            let mut m = start;
            loop {
                if eval(at(m), &mut tested) {
                    hi = Some(m);
                    break;
                }
                lo = m;
                if m >= max {
                    break;
                }
                m = (m * 2).min(max);
            }
            hi.map(|mut hi| {
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if eval(at(mid), &mut tested) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                at(hi)
            })
        }
    };
    tested.sort_by_key(|r| r.budget);
    Ok(EmpiricalComplexity {
        family: target.family.clone(),
        n: target.n,
        learner,
        epsilon: params.epsilon,
        delta: params.delta,
        seed,
        eta,
        threshold,
        tested,
        minimal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub family: String,
    pub n: usize,
    pub learner: String,
    pub m_l: usize,
    pub m_u: usize,
    pub trials: usize,
    pub successes: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    pub median_risk: f64,
    pub seed: u64,
}

pub fn write_csv<W: Write>(out: W, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: impl AsRef<Path>, rows: &[CsvRow]) -> Result<()> {
    write_csv(std::fs::File::create(path)?, rows)
}

pub fn csv_string(rows: &[CsvRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    String::from_utf8(buf).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Label pattern of a gap target, bit `i` for block `i`.
pub fn sigma_string(sigma: &[bool]) -> String {
    sigma.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn parse_sigma(s: &str, n: usize) -> Result<Vec<bool>> {
    if s.len() != n {
        return invalid(format!("sigma {s:?} must have {n} characters"));
    }
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => invalid(format!("sigma {s:?} must be a 0/1 string")),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ConstructionSpec {
    Gap {
        n: usize,
        #[serde(default)]
        sigma: Option<String>,
    },
    Allfns {
        m: usize,
    },
    Improper {
        m: usize,
    },
    AgnosticSigma {
        k: usize,
        alpha: f64,
    },
    ThreeHalves {
        n: usize,
    },
}

impl ConstructionSpec {
    pub fn targets(&self) -> Result<Vec<Target>> {
        let one = |family: String, n: usize, c: Construction| vec![Target { family, n, instance: c.instance }];
        Ok(match self {
            &ConstructionSpec::Gap { n, ref sigma } => {
                let c = match sigma {
                    Some(s) => gen_gap_with_target(n, &parse_sigma(s, n)?)?,
                    None => gen_gap(n)?,
                };
                let sigma: Vec<bool> = (0..n).map(|i| i % 2 == 1).collect();
                let label = format!("gap:sigma={}", self.sigma_label().unwrap_or_else(|| sigma_string(&sigma)));
                one(label, n, c)
            }
            &ConstructionSpec::Allfns { m } => one(format!("allfns:m={m}"), m, gen_allfns_overlap(m)?),
            &ConstructionSpec::ThreeHalves { n } => one(format!("three-halves:n={n}"), n, gen_three_halves(n)?),
            &ConstructionSpec::Improper { m } => gen_improper(m)?
                .members
                .into_iter()
                .enumerate()
                .map(|(j, c)| Target {
                    family: format!("improper:m={m},member={j}"),
                    n: m,
                    instance: c.instance,
                })
                .collect(),
            &ConstructionSpec::AgnosticSigma { k, alpha } => gen_agnostic_sigma(k, alpha)?
                .into_iter()
                .enumerate()
                .map(|(s, c)| Target {
                    family: agnostic_label(k, alpha, s),
                    n: k,
                    instance: c.instance,
                })
                .collect(),
        })
    }

    fn sigma_label(&self) -> Option<String> {
        match self {
            ConstructionSpec::Gap { sigma, .. } => sigma.clone(),
            _ => None,
        }
    }
}

fn agnostic_label(k: usize, alpha: f64, s: usize) -> String {
    let bits: String = (0..k).map(|j| if s >> j & 1 == 1 { '1' } else { '0' }).collect();
    format!("agnostic-sigma:k={k},alpha={alpha},sigma={bits}")
}

fn default_alpha_factor() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Instance file; relative paths resolve against the config's directory.
    #[serde(default)]
    pub instance: Option<PathBuf>,
    #[serde(default)]
    pub construction: Option<ConstructionSpec>,
    pub learner: LearnerId,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default = "default_alpha_factor")]
    pub alpha_factor: f64,
    pub trials: usize,
    pub seed: u64,
    pub search: SearchSpec,
    /// CSV output path.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.instance.is_some() == self.construction.is_some() {
            return invalid("give exactly one of \"instance\" and \"construction\"");
        }
        self.params()?;
        self.search.validate()
    }

    pub fn params(&self) -> Result<PacParams> {
        PacParams::new(self.epsilon, self.delta, self.alpha_factor)
    }

    pub fn targets(&self, base_dir: Option<&Path>) -> Result<Vec<Target>> {
        if let Some(spec) = &self.construction {
            return spec.targets();
        }
        let path = self.instance.as_ref().expect("validated");
        let path = match base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.clone(),
        };
        let instance = crate::io::read_instance(&path)?;
        let family = path.file_stem().map_or("instance".into(), |s| s.to_string_lossy().into_owned());
        Ok(vec![Target {
            family,
            n: instance.size(),
            instance,
        }])
    }

    /// Runs the search on every target, in order.
    pub fn run(&self, base_dir: Option<&Path>) -> Result<Vec<EmpiricalComplexity>> {
        self.validate()?;
        let params = self.params()?;
        self.targets(base_dir)?
            .iter()
            .map(|t| estimate_complexity(t, self.learner, &params, &self.search, self.trials, self.seed))
            .collect()
    }
}

/// Gap target patterns probed by the separation experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetPattern {
    Zeros,
    Alternating,
    Ones,
}

impl TargetPattern {
    pub const ALL: [TargetPattern; 3] = [TargetPattern::Zeros, TargetPattern::Alternating, TargetPattern::Ones];

    pub fn sigma(self, n: usize) -> Vec<bool> {
        (0..n)
            .map(|i| match self {
                TargetPattern::Zeros => false,
                TargetPattern::Alternating => i % 2 == 1,
                TargetPattern::Ones => true,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationConfig {
    pub n_values: Vec<usize>,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    /// Unlabeled budget for the semi-supervised learner; `None` gives
    /// `50 * n * ceil(1 / epsilon)`.
    pub unlabeled: Option<usize>,
    pub max_labeled: usize,
    pub patterns: Vec<TargetPattern>,
}

impl SeparationConfig {
    pub fn new(n_values: Vec<usize>, epsilon: f64, delta: f64, trials: usize, seed: u64) -> Self {
        Self {
            n_values,
            epsilon,
            delta,
            trials,
            seed,
            unlabeled: None,
            max_labeled: 4096,
            patterns: TargetPattern::ALL.to_vec(),
        }
    }

    pub fn unlabeled_for(&self, n: usize) -> usize {
        self.unlabeled.unwrap_or_else(|| 50 * n * (1.0 / self.epsilon).ceil() as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationPoint {
    pub n: usize,
    pub learner: LearnerId,
    /// Worst case over the probed targets; `None` if some target found no
    /// passing budget up to the cap.
    pub m_l_star: Option<usize>,
    pub worst_family: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub config: SeparationConfig,
    pub curves: Vec<SeparationPoint>,
    pub runs: Vec<EmpiricalComplexity>,
}

impl SeparationReport {
    pub fn m_l_star(&self, learner: LearnerId, n: usize) -> Option<usize> {
        self.curves
            .iter()
            .find(|p| p.learner == learner && p.n == n)
            .and_then(|p| p.m_l_star)
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.runs.iter().flat_map(|r| r.csv_rows()).collect()
    }
}

/// Minimal labeled budgets of GRASS (generous unlabeled budget) and of the
/// supervised robust learner on the gap family, per `n` and target pattern.
pub fn separation_experiment(config: &SeparationConfig) -> Result<SeparationReport> {
    if config.n_values.is_empty() || config.patterns.is_empty() {
        return invalid("separation experiment needs n values and target patterns");
    }
    let params = PacParams::realizable(config.epsilon, config.delta)?;
    let mut runs = Vec::new();
    let mut curves = Vec::new();
    for &n in &config.n_values {
        let targets = config
            .patterns
            .iter()
            .map(|p| {
                let sigma = p.sigma(n);
                Ok(Target {
                    family: format!("gap:sigma={}", sigma_string(&sigma)),
                    n,
                    instance: gen_gap_with_target(n, &sigma)?.instance,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for (learner, m_u) in [
            (LearnerId::Grass, config.unlabeled_for(n)),
            (LearnerId::RobustSupervised, 0),
        ] {
            let search = SearchSpec::labeled(m_u, config.max_labeled);
            let mut worst: Option<(Option<usize>, String)> = None;
            for t in &targets {
                let run = estimate_complexity(t, learner, &params, &search, config.trials, config.seed)?;
                let m = run.minimal.map(|b| b.m_l);
                let worse = match &worst {
                    None => true,
                    Some((w, _)) => match (m, w) {
                        (None, Some(_)) => true,
                        (Some(a), Some(b)) => a > *b,
                        _ => false,
                    },
                };
                if worse {
                    worst = Some((m, t.family.clone()));
                }
                runs.push(run);
            }
            let (m_l_star, worst_family) = worst.expect("patterns are non-empty");
            curves.push(SeparationPoint {
                n,
                learner,
                m_l_star,
                worst_family,
            });
        }
    }
    Ok(SeparationReport {
        config: config.clone(),
        curves,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgnosticMember {
    pub family: String,
    pub eta: f64,
    pub threshold: f64,
    pub trials: usize,
    pub successes: usize,
    pub errors: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    pub median_risk: f64,
    pub mean_risk: f64,
    pub max_risk: f64,
    /// `(median - epsilon) / eta`, only when `eta > 0`.
    pub multiplier: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelBlind {
    pub trials: usize,
    pub mean_risk: f64,
    pub min_risk: f64,
    /// Exact expectation over a uniformly random labeling.
    pub expected_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgnosticReport {
    pub epsilon: f64,
    pub alpha_factor: f64,
    pub budget: SampleBudget,
    pub seed: u64,
    pub members: Vec<AgnosticMember>,
    pub worst_multiplier: Option<f64>,
    pub worst_success_rate: f64,
    /// Filled for noisy-pair families (optimal risk 1/2 on every atom pair).
    pub label_blind: Option<LabelBlind>,
}

/// Achieved robust risk of GRASS on every family member at one budget.
pub fn agnostic_multiplier_experiment(
    family: &[Construction],
    params: &PacParams,
    budget: SampleBudget,
    trials: usize,
    seed: u64,
) -> Result<AgnosticReport> {
    if family.is_empty() || trials == 0 {
        return invalid("agnostic experiment needs members and at least one trial");
    }
    let mut members = Vec::with_capacity(family.len());
    let mut label_blind = None;
    for (j, c) in family.iter().enumerate() {
        let prepared = Prepared::new(LearnerId::Grass, &c.instance)?;
        let eta = prepared.optimal_risk();
        let threshold = params.alpha_factor * eta + params.epsilon;
        let r = evaluate_budget(&prepared, budget, params, threshold, trials, derive_seed(seed, j as u64));
        let done: Vec<f64> = r.risks.iter().flatten().copied().collect();
        let mean = if done.is_empty() { f64::NAN } else { done.iter().sum::<f64>() / done.len() as f64 };
        let max = done.iter().copied().fold(f64::NAN, f64::max);
        let (multiplier, note) = if eta > 0.0 {
            (Some((r.median_risk - params.epsilon) / eta), None)
        } else {
            (None, Some("realizable member: multiplier undefined".to_string()))
        };
        members.push(AgnosticMember {
            family: member_label(c, j),
            eta,
            threshold,
            trials: r.trials,
            successes: r.successes,
            errors: r.errors,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            median_risk: r.median_risk,
            mean_risk: mean,
            max_risk: max,
            multiplier,
            note,
        });
        if c.meta.family == "three-halves" && label_blind.is_none() {
            label_blind = Some(label_blind_risk(&c.instance, trials, derive_seed(seed, u64::MAX)));
        }
    }
    let worst_multiplier = members.iter().filter_map(|m| m.multiplier).fold(None, |acc: Option<f64>, v| {
        Some(acc.map_or(v, |a| a.max(v)))
    });
    let worst_success_rate = members
        .iter()
        .map(|m| m.successes as f64 / m.trials as f64)
        .fold(1.0, f64::min);
    Ok(AgnosticReport {
        epsilon: params.epsilon,
        alpha_factor: params.alpha_factor,
        budget,
        seed,
        members,
        worst_multiplier,
        worst_success_rate,
        label_blind,
    })
}

fn member_label(c: &Construction, j: usize) -> String {
    let params: Vec<String> = c.meta.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{}:{},member={j}", c.meta.family, params.join(","))
}

/// Robust risk of labelings drawn uniformly at random, independently of
/// any sample.
pub fn label_blind_risk(inst: &ProblemInstance, trials: usize, seed: u64) -> LabelBlind {
    use rand::Rng;
    let n = inst.size();
    let risks: Vec<f64> = (0..trials as u64)
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, t));
            let labels: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            robust_risk(&labels, &inst.perturbation, &inst.distribution)
        })
        .collect();
    let expected = inst
        .distribution
        .atoms()
        .iter()
        .map(|a| a.p * (1.0 - 0.5f64.powi(inst.perturbation.set(a.x).len() as i32)))
        .sum();
    LabelBlind {
        trials,
        mean_risk: risks.iter().sum::<f64>() / trials.max(1) as f64,
        min_risk: risks.iter().copied().fold(f64::INFINITY, f64::min),
        expected_risk: expected,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProperRuleBound {
    pub m: usize,
    pub members: usize,
    pub sequences: usize,
    pub risk_threshold: f64,
    /// Largest achievable average (over members) probability that a proper
    /// rule's output has risk at most the threshold.
    pub best_average_success: f64,
    /// `1 - best_average_success`: every proper rule fails with at least
    /// this probability on some member.
    pub failure_lower_bound: f64,
}

/// Exhaustive bound over all deterministic proper rules trained on `m`
/// labeled points. For each sample sequence the best rule picks the row
/// maximizing the summed probability of low risk across members, so the
/// bound covers every rule, including randomized ones.
pub fn proper_rule_lower_bound(family: &[Construction], m: usize, risk_threshold: f64) -> Result<ProperRuleBound> {
    let Some(first) = family.first() else {
        return invalid("empty family");
    };
    let h = &first.instance.hypotheses;
    if family.iter().any(|c| c.instance.hypotheses != *h || c.instance.perturbation != first.instance.perturbation) {
        return invalid("family members must share the class and perturbation");
    }
    let mut atoms: Vec<Example> = family
        .iter()
        .flat_map(|c| c.instance.distribution.atoms().iter().map(|a| Example::new(a.x, a.y)))
        .collect();
    atoms.sort_by_key(|e| (e.x, e.y));
    atoms.dedup();
    let seqs = atoms
        .len()
        .checked_pow(m as u32)
        .filter(|&s| s <= 10_000_000)
        .ok_or_else(|| Error::SizeGuard(format!("{} atoms to the power {m} sample sequences", atoms.len())))?;
    // mass[d][a]: probability of atom a under member d.
    let mass: Vec<Vec<f64>> = family
        .iter()
        .map(|c| {
            atoms
                .iter()
                .map(|e| {
                    c.instance
                        .distribution
                        .atoms()
                        .iter()
                        .filter(|a| a.x == e.x && a.y == e.y)
                        .map(|a| a.p)
                        .sum()
                })
                .collect()
        })
        .collect();
    // good[d][r]: row r has risk at most the threshold under member d.
    let good: Vec<Vec<bool>> = family
        .iter()
        .map(|c| {
            h.rows()
                .iter()
                .map(|row| robust_risk(row, &c.instance.perturbation, &c.instance.distribution) <= risk_threshold + RISK_SLACK)
                .collect()
        })
        .collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; m];
    for _ in 0..seqs {
        let probs: Vec<f64> = mass.iter().map(|md| idx.iter().map(|&a| md[a]).product()).collect();
        let best = (0..h.n_rows())
            .map(|r| (0..family.len()).filter(|&d| good[d][r]).map(|d| probs[d]).sum::<f64>())
            .fold(0.0, f64::max);
        total += best;
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < atoms.len() {
                break;
            }
            *slot = 0;
        }
    }
    let avg = total / family.len() as f64;
    Ok(ProperRuleBound {
        m,
        members: family.len(),
        sequences: seqs,
        risk_threshold,
        best_average_success: avg,
        failure_lower_bound: 1.0 - avg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Distribution, HypothesisTable, InstanceSpace, Perturbation};

    #[test]
    fn wilson_matches_known_values() {
        let (lo, hi) = wilson_interval(200, 200, Z95);
        assert!((lo - 0.98116).abs() < 1e-4, "{lo}");
        assert!(hi > 1.0 - 1e-12);
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.40383).abs() < 1e-4 && (hi - 0.59617).abs() < 1e-4);
        assert_eq!(wilson_interval(0, 10, Z95).0, 0.0);
    }

    #[test]
    fn learner_ids_round_trip() {
        for l in LearnerId::ALL {
            assert_eq!(l.as_str().parse::<LearnerId>().unwrap(), l);
            assert_eq!(serde_json::to_string(&l).unwrap(), format!("\"{l}\""));
        }
        assert!("nope".parse::<LearnerId>().is_err());
    }

    fn point_mass() -> Target {
        let h = HypothesisTable::new(2, vec![vec![false, false], vec![true, false]]).unwrap();
        let inst = ProblemInstance::new(
            InstanceSpace::new(2, None).unwrap(),
            Perturbation::identity(2),
            h,
            Distribution::point_mass(0, true),
        )
        .unwrap();
        Target {
            family: "point".into(),
            n: 2,
            instance: inst,
        }
    }

    #[test]
    fn point_mass_needs_one_example() {
        let params = PacParams::realizable(0.1, 0.1).unwrap();
        for learner in LearnerId::ALL {
            let run = estimate_complexity(&point_mass(), learner, &params, &SearchSpec::labeled(1, 64), 40, 3).unwrap();
            assert_eq!(run.minimal, Some(SampleBudget::new(1, 1)), "{learner}");
        }
    }

    #[test]
    fn identical_seed_gives_identical_csv() {
        let cfg = ExperimentConfig::from_json(
            r#"{"construction": {"family": "gap", "n": 3}, "learner": "robust-supervised",
                "epsilon": 0.1, "delta": 0.1, "trials": 20, "seed": 5,
                "search": {"doubling": {"axis": "labeled", "max": 64}}}"#,
        )
        .unwrap();
        let a: Vec<CsvRow> = cfg.run(None).unwrap().iter().flat_map(|r| r.csv_rows()).collect();
        let b: Vec<CsvRow> = cfg.run(None).unwrap().iter().flat_map(|r| r.csv_rows()).collect();
        let (a, b) = (csv_string(&a).unwrap(), csv_string(&b).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("family,n,learner,m_l,m_u,trials,successes,ci_low,ci_high,median_risk,seed\n"));
        assert!(a.contains("gap:sigma=010,3,robust-supervised,"));
    }

    #[test]
    fn doubling_then_bisection_finds_first_pass() {
        let cfg = ExperimentConfig::from_json(
            r#"{"construction": {"family": "gap", "n": 4, "sigma": "0000"}, "learner": "robust-supervised",
                "epsilon": 0.1, "delta": 0.1, "trials": 40, "seed": 1,
                "search": {"doubling": {"axis": "labeled", "max": 256}}}"#,
        )
        .unwrap();
        let run = &cfg.run(None).unwrap()[0];
        let m = run.minimal.unwrap().m_l;
        let pass = |k: usize| run.tested.iter().find(|r| r.budget.m_l == k).map(|r| r.passes(0.1));
        assert_eq!(pass(m), Some(true));
        if m > 1 {
            assert_eq!(pass(m - 1), Some(false));
        }
    }

    #[test]
    fn config_validation() {
        let bad = r#"{"construction": {"family": "gap", "n": 3}, "learner": "grass", "epsilon": 0.1,
            "delta": 0.1, "trials": 0, "seed": 1, "search": {"grid": {"budgets": [{"m_l": 1, "m_u": 1}]}}}"#;
        assert!(ExperimentConfig::from_json(bad).is_err());
        let empty = r#"{"construction": {"family": "gap", "n": 3}, "learner": "grass", "epsilon": 0.1,
            "delta": 0.1, "trials": 5, "seed": 1, "search": {"grid": {"budgets": []}}}"#;
        assert!(ExperimentConfig::from_json(empty).is_err());
        let both = r#"{"instance": "x.json", "construction": {"family": "gap", "n": 3}, "learner": "grass",
            "epsilon": 0.1, "delta": 0.1, "trials": 5, "seed": 1,
            "search": {"grid": {"budgets": [{"m_l": 1, "m_u": 1}]}}}"#;
        assert!(ExperimentConfig::from_json(both).is_err());
    }

    #[test]
    fn family_labels() {
        let t = ConstructionSpec::AgnosticSigma { k: 2, alpha: 0.5 }.targets().unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t[1].family, "agnostic-sigma:k=2,alpha=0.5,sigma=10");
        let g = ConstructionSpec::Gap { n: 4, sigma: None }.targets().unwrap();
        assert_eq!(g[0].family, "gap:sigma=0101");
    }

    #[test]
    fn label_blind_on_noisy_pairs() {
        let c = gen_three_halves(4).unwrap();
        let lb = label_blind_risk(&c.instance, 400, 9);
        assert!((lb.expected_risk - 0.75).abs() < 1e-12);
        assert!((lb.mean_risk - 0.75).abs() < 0.05, "{}", lb.mean_risk);
    }

    #[test]
    fn proper_bound_on_smallest_family() {
        // m = 1: three members, each uniform on two of three points; the
        // only low-risk row for a member is its target, so one sample point
        // leaves two candidate members.
        let fam = gen_improper(1).unwrap();
        let b = proper_rule_lower_bound(&fam.members, 1, 0.125).unwrap();
        assert_eq!(b.sequences, 3);
        assert!((b.best_average_success - 0.5).abs() < 1e-12, "{b:?}");
    }
}
