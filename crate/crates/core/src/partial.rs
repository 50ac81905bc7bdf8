//! Partial concepts over `{0, 1, *}`: conversion from a total class under a
//! perturbation map, one-inclusion graph prediction, and the realizable and
//! agnostic partial-concept learners.

use std::collections::HashMap;

use rand::distributions::{Distribution as _, WeightedIndex};
use serde::Serialize;

use crate::compress::{alpha_boost, BoostOptions, CompressionSet, LossKind, Reconstruct, Voter, WEAK_ERROR};
use crate::dims::{self, SearchLimits};
use crate::error::{invalid, Error, Result};
use crate::instance::{
    check_sample, distinct_examples, Example, HypothesisTable, PacParams, Perturbation, Predictor, Provenance,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[repr(u8)]
pub enum Ternary {
    Zero = 0,
    One = 1,
    Star = 2,
}

impl From<bool> for Ternary {
    fn from(b: bool) -> Self {
        if b {
            Ternary::One
        } else {
            Ternary::Zero
        }
    }
}

impl Ternary {
    pub fn value(self) -> Option<bool> {
        match self {
            Ternary::Zero => Some(false),
            Ternary::One => Some(true),
            Ternary::Star => None,
        }
    }

    /// Prediction-time reading: `*` becomes 0.
    pub fn or_zero(self) -> bool {
        self == Ternary::One
    }

    pub fn is_star(self) -> bool {
        self == Ternary::Star
    }

    pub fn symbol(self) -> char {
        match self {
            Ternary::Zero => '0',
            Ternary::One => '1',
            Ternary::Star => '*',
        }
    }
}

/// Ternary label matrix; rows are partial concepts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialTable {
    n_instances: usize,
    rows: Vec<Vec<Ternary>>,
    origin: Option<Vec<Vec<usize>>>,
}

impl PartialTable {
    pub fn new(n_instances: usize, rows: Vec<Vec<Ternary>>) -> Result<Self> {
        if rows.is_empty() {
            return invalid("partial table must have at least one row");
        }
        let mut seen = std::collections::HashSet::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_instances {
                return invalid(format!("row {i} has {} entries, expected {n_instances}", row.len()));
            }
            if !seen.insert(row.as_slice()) {
                return invalid(format!("row {i} duplicates an earlier row"));
            }
        }
        Ok(Self {
            n_instances,
            rows,
            origin: None,
        })
    }

    /// A total table seen as a partial one.
    pub fn from_total(h: &HypothesisTable) -> Self {
        Self {
            n_instances: h.n_instances(),
            rows: h
                .rows()
                .iter()
                .map(|r| r.iter().map(|&b| Ternary::from(b)).collect())
                .collect(),
            origin: Some((0..h.n_rows()).map(|r| vec![r]).collect()),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    pub fn get(&self, r: usize, x: usize) -> Ternary {
        self.rows[r][x]
    }

    pub fn row(&self, r: usize) -> &[Ternary] {
        &self.rows[r]
    }

    pub fn rows(&self) -> &[Vec<Ternary>] {
        &self.rows
    }

    /// Source rows of row `r` in the table it was converted from.
    pub fn origin(&self, r: usize) -> Option<&[usize]> {
        self.origin.as_ref().map(|o| o[r].as_slice())
    }

    pub fn is_total(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|t| !t.is_star()))
    }

    /// Rows defined and correct on every example (`*` is never correct).
    pub fn consistent_rows(&self, sample: &[Example]) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&r| sample.iter().all(|e| self.rows[r][e.x] == Ternary::from(e.y)))
            .collect()
    }

    pub fn is_consistent(&self, sample: &[Example]) -> bool {
        self.rows
            .iter()
            .any(|row| sample.iter().all(|e| row[e.x] == Ternary::from(e.y)))
    }

    /// 0-1 mistakes per row with `*` counted as a mistake.
    pub fn mistake_counts(&self, weighted: &[(Example, usize)]) -> Vec<usize> {
        self.rows
            .iter()
            .map(|row| {
                weighted
                    .iter()
                    .filter(|(e, _)| row[e.x] != Ternary::from(e.y))
                    .map(|(_, c)| c)
                    .sum()
            })
            .collect()
    }

    pub fn render(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|t| t.symbol()).collect())
            .collect()
    }
}

/// `h*(x) = *` when `h` is not constant on `U(x)`, else `h(x)`. Rows that
/// coincide after conversion are merged; `origin` lists all their sources.
pub fn to_partial(h: &HypothesisTable, u: &Perturbation) -> Result<PartialTable> {
    if u.len() != h.n_instances() {
        return invalid("perturbation does not match the hypothesis table");
    }
    let mut index: HashMap<Vec<Ternary>, usize> = HashMap::new();
    let mut rows: Vec<Vec<Ternary>> = Vec::new();
    let mut origin: Vec<Vec<usize>> = Vec::new();
    for (r, row) in h.rows().iter().enumerate() {
        let converted: Vec<Ternary> = (0..h.n_instances())
            .map(|x| {
                let set = u.set(x);
                let first = row[set[0]];
                if set.iter().all(|&z| row[z] == first) {
                    Ternary::from(row[x])
                } else {
                    Ternary::Star
                }
            })
            .collect();
        match index.get(&converted) {
            Some(&i) => origin[i].push(r),
            None => {
                index.insert(converted.clone(), rows.len());
                rows.push(converted);
                origin.push(vec![r]);
            }
        }
    }
    Ok(PartialTable {
        n_instances: h.n_instances(),
        rows,
        origin: Some(origin),
    })
}

/// One-inclusion graph of the total patterns of a partial class over a
/// fixed coordinate set, with a minimum max-out-degree orientation.
///
/// Only fully defined projections are vertices. Hyperedges of size one are
/// implicit (their single vertex is the head); the stored edges are the
/// vertex pairs that differ in exactly one coordinate.
#[derive(Debug, Clone)]
pub struct OneInclusionGraph {
    coords: Vec<usize>,
    vertices: Vec<Vec<bool>>,
    edges: Vec<Edge>,
    heads: Vec<usize>,
    max_out_degree: usize,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    coord: usize,
    zero: usize,
    one: usize,
}

impl OneInclusionGraph {
    /// `coords` is sorted and deduplicated before use.
    pub fn build(p: &PartialTable, coords: &[usize]) -> Result<Self> {
        let mut coords = coords.to_vec();
        coords.sort_unstable();
        coords.dedup();
        if let Some(&x) = coords.iter().find(|&&x| x >= p.n_instances()) {
            return invalid(format!("instance {x} out of range"));
        }
        let mut seen = std::collections::HashSet::new();
        let mut vertices = Vec::new();
        for row in p.rows() {
            let pattern: Option<Vec<bool>> = coords.iter().map(|&x| row[x].value()).collect();
            if let Some(pattern) = pattern {
                if seen.insert(pattern.clone()) {
                    vertices.push(pattern);
                }
            }
        }
        let mut edges = Vec::new();
        let mut buckets: HashMap<Vec<bool>, usize> = HashMap::new();
        for j in 0..coords.len() {
            buckets.clear();
            for (v, pattern) in vertices.iter().enumerate() {
                if !pattern[j] {
                    let mut key = pattern.clone();
                    key[j] = true;
                    buckets.insert(key, v);
                }
            }
            for (v, pattern) in vertices.iter().enumerate() {
                if pattern[j] {
                    if let Some(&zero) = buckets.get(pattern) {
                        edges.push(Edge { coord: j, zero, one: v });
                    }
                }
            }
        }
        let (heads, max_out_degree) = orient(vertices.len(), &edges);
        Ok(Self {
            coords,
            vertices,
            edges,
            heads,
            max_out_degree,
        })
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn max_out_degree(&self) -> usize {
        self.max_out_degree
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.vertices.len()];
        for (e, &head) in self.edges.iter().zip(&self.heads) {
            let tail = if head == e.zero { e.one } else { e.zero };
            out[tail] += 1;
        }
        out
    }

    /// Checks the orientation against the VC dimension of the vertex set.
    pub fn certify(&self) -> Result<()> {
        if self.vertices.is_empty() {
            return Ok(());
        }
        let table = HypothesisTable::new(self.coords.len(), self.vertices.clone())?;
        let d = dims::vc(&table, SearchLimits::unguarded())?.size;
        if self.max_out_degree > d {
            return Err(Error::StructuralCheck(format!(
                "orientation out-degree {} exceeds VC {d} of the projected class",
                self.max_out_degree
            )));
        }
        Ok(())
    }

    /// Value at `x_test` of the head of the hyperedge through the vertex
    /// consistent with `known`, or `None` when no vertex is consistent.
    pub fn predict(&self, known: &[Example], x_test: usize) -> Option<bool> {
        let pos = |x: usize| self.coords.binary_search(&x).ok();
        let j = pos(x_test)?;
        let constraints: Vec<(usize, bool)> = known.iter().filter_map(|e| pos(e.x).map(|i| (i, e.y))).collect();
        let matching: Vec<usize> = (0..self.vertices.len())
            .filter(|&v| constraints.iter().all(|&(i, y)| self.vertices[v][i] == y))
            .collect();
        match matching.as_slice() {
            [] => None,
            // singleton hyperedge: its only vertex is the head
            [v] => Some(self.vertices[*v][j]),
            _ => {
                let zero = matching.iter().copied().find(|&v| !self.vertices[v][j])?;
                let one = matching.iter().copied().find(|&v| self.vertices[v][j])?;
                let e = self
                    .edges
                    .iter()
                    .position(|e| e.coord == j && e.zero == zero && e.one == one)?;
                Some(self.vertices[self.heads[e]][j])
            }
        }
    }
}

/// Minimum max-out-degree orientation: binary search on the bound `k`,
/// each step a max-flow feasibility test (edge -> endpoint -> sink, vertex
/// capacity `k`). The endpoint that receives an edge's unit of flow is its
/// tail; the other endpoint is the head.
fn orient(n_vertices: usize, edges: &[Edge]) -> (Vec<usize>, usize) {
    if edges.is_empty() {
        return (Vec::new(), 0);
    }
    let mut degree = vec![0usize; n_vertices];
    for e in edges {
        degree[e.zero] += 1;
        degree[e.one] += 1;
    }
    let mut lo = edges.len().div_ceil(n_vertices);
    let mut hi = *degree.iter().max().unwrap_or(&0);
    let mut best = assignment(n_vertices, edges, hi).expect("max degree is always feasible");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match assignment(n_vertices, edges, mid) {
            Some(tails) => {
                best = tails;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    let heads = edges
        .iter()
        .zip(&best)
        .map(|(e, &tail)| if tail == e.zero { e.one } else { e.zero })
        .collect();
    (heads, hi)
}

fn assignment(n_vertices: usize, edges: &[Edge], k: usize) -> Option<Vec<usize>> {
    let n_edges = edges.len();
    let source = 0;
    let sink = 1 + n_edges + n_vertices;
    let mut flow = Dinic::new(sink + 1);
    let mut arcs = Vec::with_capacity(n_edges);
    for (i, e) in edges.iter().enumerate() {
        flow.add(source, 1 + i, 1);
        let a = flow.add(1 + i, 1 + n_edges + e.zero, 1);
        let b = flow.add(1 + i, 1 + n_edges + e.one, 1);
        arcs.push((a, b));
    }
    for v in 0..n_vertices {
        flow.add(1 + n_edges + v, sink, k);
    }
    if flow.max_flow(source, sink) < n_edges {
        return None;
    }
    Some(
        edges
            .iter()
            .zip(&arcs)
            .map(|(e, &(a, _))| if flow.used(a) { e.zero } else { e.one })
            .collect(),
    )
}

struct Dinic {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<usize>,
    level: Vec<i64>,
    next: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Self {
            head: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
            level: vec![0; n],
            next: vec![0; n],
        }
    }

    fn add(&mut self, u: usize, v: usize, c: usize) -> usize {
        let id = self.to.len();
        self.head[u].push(id);
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(id + 1);
        self.to.push(u);
        self.cap.push(0);
        id
    }

    fn used(&self, arc: usize) -> bool {
        self.cap[arc] == 0
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.head[u] {
                let v = self.to[a];
                if self.cap[a] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: usize) -> usize {
        if u == t {
            return pushed;
        }
        while self.next[u] < self.head[u].len() {
            let a = self.head[u][self.next[u]];
            let v = self.to[a];
            if self.cap[a] > 0 && self.level[v] == self.level[u] + 1 {
                let got = self.dfs(v, t, pushed.min(self.cap[a]));
                if got > 0 {
                    self.cap[a] -= got;
                    self.cap[a ^ 1] += got;
                    return got;
                }
            }
            self.next[u] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> usize {
        let mut total = 0;
        while self.bfs(s, t) {
            self.next.iter_mut().for_each(|n| *n = 0);
            loop {
                let f = self.dfs(s, t, usize::MAX);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
        total
    }
}

/// One-inclusion prediction at `x_test` from the labeled prefix `known`.
///
/// The graph is built over the distinct instances of `known` plus `x_test`.
/// A test point already labeled in `known` returns that label. When every
/// consistent row is `*` at `x_test` the prediction is 0.
pub fn oig_predict(p: &PartialTable, known: &[Example], x_test: usize) -> Result<bool> {
    Ok(oig_predict_many(p, known, &[x_test])?[0])
}

/// [`oig_predict`] at several test points sharing one prefix.
pub fn oig_predict_many(p: &PartialTable, known: &[Example], tests: &[usize]) -> Result<Vec<bool>> {
    check_sample(known, p.n_instances())?;
    if let Some(&x) = tests.iter().find(|&&x| x >= p.n_instances()) {
        return invalid(format!("test instance {x} out of range"));
    }
    if !p.is_consistent(known) {
        return Err(Error::RealizabilityViolation(
            "no row of the partial class is consistent with the labeled prefix".into(),
        ));
    }
    let mut coords: Vec<usize> = known.iter().map(|e| e.x).collect();
    coords.sort_unstable();
    coords.dedup();
    let mut out = Vec::with_capacity(tests.len());
    for &x in tests {
        if let Some(e) = known.iter().find(|e| e.x == x) {
            out.push(e.y);
            continue;
        }
        let mut c = coords.clone();
        c.push(x);
        let graph = OneInclusionGraph::build(p, &c)?;
        out.push(graph.predict(known, x).unwrap_or(false));
    }
    Ok(out)
}

/// Total labeling of the instance space induced by one-inclusion prediction.
pub fn oig_labeling(p: &PartialTable, known: &[Example]) -> Result<Vec<bool>> {
    let all: Vec<usize> = (0..p.n_instances()).collect();
    oig_predict_many(p, known, &all)
}

/// Rebuilds the boosted partial-concept predictor from its compression set.
pub struct PartialReconstructor<'a> {
    pub table: &'a PartialTable,
}

impl Reconstruct for PartialReconstructor<'_> {
    fn reconstruct(&self, set: &CompressionSet) -> Result<Vec<bool>> {
        let labelings = set
            .parts
            .iter()
            .map(|part| oig_labeling(self.table, part))
            .collect::<Result<Vec<_>>>()?;
        Ok(crate::compress::majority_vote(
            labelings.iter().map(|l| l.as_slice()),
            self.table.n_instances(),
        ))
    }
}

const WEAK_RESAMPLES: usize = 8;

/// Boosted one-inclusion learner for a realizable sample.
///
/// Each round draws a weak sample from the boosting weights, starting at
/// `partial_vc + 1` points; a draw is kept when the one-inclusion labeling
/// it induces has weighted error at most 1/3. After eight rejected draws the
/// size doubles. At `|S|` points the whole sample is used, which is always
/// correct on the sample.
pub fn partial_realizable_learn(p: &PartialTable, s: &[Example], params: &PacParams, seed: u64) -> Result<Predictor> {
    let d = dims::partial_vc(p, SearchLimits::unguarded())?.size;
    partial_realizable_learn_with_dim(p, d, s, params, seed)
}

/// As [`partial_realizable_learn`] with the partial VC supplied by the caller.
pub fn partial_realizable_learn_with_dim(
    p: &PartialTable,
    partial_vc: usize,
    s: &[Example],
    _params: &PacParams,
    seed: u64,
) -> Result<Predictor> {
    check_sample(s, p.n_instances())?;
    let n = p.n_instances();
    if s.is_empty() {
        let mut pred = Predictor::constant(n, false, "partial-realizable");
        pred.provenance.flag("empty sample: majority over zero voters");
        return Ok(pred);
    }
    if !p.is_consistent(s) {
        return Err(Error::RealizabilityViolation(
            "labeled sample is not consistent with any row of the partial class".into(),
        ));
    }
    let weighted = distinct_examples(s);
    let points: Vec<Example> = weighted.iter().map(|(e, _)| *e).collect();
    let total = s.len();
    let initial: Vec<f64> = weighted.iter().map(|(_, c)| *c as f64 / total as f64).collect();
    let xs: Vec<usize> = points.iter().map(|e| e.x).collect();

    let start = (partial_vc + 1).min(total);
    let mut size = start;
    let mut max_size = 0usize;
    let mut full_sample_rounds = 0usize;
    let weak = |weights: &[f64], rng: &mut rand_chacha::ChaCha8Rng| -> Result<Voter> {
        loop {
            if size >= total {
                full_sample_rounds += 1;
                max_size = max_size.max(points.len());
                return Ok(Voter::new(oig_labeling(p, &points)?, points.clone()));
            }
            let dist = WeightedIndex::new(weights)
                .map_err(|e| Error::BudgetExhausted(format!("boosting weights unusable: {e}")))?;
            for _ in 0..WEAK_RESAMPLES {
                let known: Vec<Example> = (0..size).map(|_| points[dist.sample(rng)]).collect();
                let on_sample = oig_predict_many(p, &known, &xs)?;
                let err: f64 = points
                    .iter()
                    .zip(&on_sample)
                    .zip(weights)
                    .filter(|((e, &y), _)| e.y != y)
                    .map(|(_, w)| w)
                    .sum();
                if err <= WEAK_ERROR + 1e-12 {
                    max_size = max_size.max(size);
                    return Ok(Voter::new(oig_labeling(p, &known)?, known));
                }
            }
            size = (size * 2).min(total);
        }
    };
    let options = BoostOptions {
        initial_weights: Some(initial),
        ..BoostOptions::default()
    };
    let state = alpha_boost(weak, &points, LossKind::ZeroOne, &options, seed)?;
    let labels = state.majority(n);
    if points.iter().any(|e| labels[e.x] != e.y) {
        return Err(Error::StructuralCheck("boosted majority errs on its sample".into()));
    }
    let compression: Vec<Vec<Example>> = state.voters.iter().map(|v| v.support.clone()).collect();
    let kappa: usize = compression.iter().map(|c| c.len()).sum();
    let mut prov = Provenance::new("partial-realizable")
        .detail("partial_vc", partial_vc)
        .detail("rounds", state.round)
        .detail("round_cap", state.round_cap)
        .detail("weak_size_start", start)
        .detail("weak_size_max", max_size)
        .detail("full_sample_rounds", full_sample_rounds)
        .detail("compression_size", kappa)
        .detail("compression_bound", max_size * state.round);
    prov.compression = compression;
    Ok(Predictor::new(labels, prov))
}

/// Agnostic reduction: keep the sample points on which the best row is
/// correct and learn them realizably. An empty kept set yields constant 0.
pub fn partial_agnostic_learn(p: &PartialTable, s: &[Example], params: &PacParams, seed: u64) -> Result<Predictor> {
    let d = dims::partial_vc(p, SearchLimits::unguarded())?.size;
    partial_agnostic_learn_with_dim(p, d, s, params, seed)
}

pub fn partial_agnostic_learn_with_dim(
    p: &PartialTable,
    partial_vc: usize,
    s: &[Example],
    params: &PacParams,
    seed: u64,
) -> Result<Predictor> {
    if s.is_empty() {
        return invalid("agnostic learning needs a non-empty sample");
    }
    check_sample(s, p.n_instances())?;
    let mistakes = p.mistake_counts(&distinct_examples(s));
    let best = (0..mistakes.len()).min_by_key(|&r| (mistakes[r], r)).unwrap_or(0);
    let kept: Vec<Example> = s
        .iter()
        .copied()
        .filter(|e| p.get(best, e.x) == Ternary::from(e.y))
        .collect();
    let mut pred = if kept.is_empty() {
        let mut pred = Predictor::constant(p.n_instances(), false, "partial-realizable");
        pred.provenance.flag("empty realizable subset: constant 0");
        pred
    } else {
        partial_realizable_learn_with_dim(p, partial_vc, &kept, params, seed)?
    };
    pred.provenance.learner = "partial-agnostic".into();
    pred.provenance = std::mem::take(&mut pred.provenance)
        .detail("best_row", best)
        .detail("best_row_mistakes", mistakes[best])
        .detail("kept", kept.len());
    Ok(pred)
}
