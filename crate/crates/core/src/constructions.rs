//! Generators for the lower-bound instance families. Each returns a problem
//! instance together with the dimensions it is expected to have, its
//! optimal robust error, and the rows that attain it. All generators are
//! deterministic.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dims::{self, SearchLimits};
use crate::error::{invalid, Error, Result};
use crate::instance::{Atom, Distribution, HypothesisTable, InstanceSpace, Perturbation, ProblemInstance};
use crate::loss::robust_risk;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionMeta {
    pub family: String,
    pub params: BTreeMap<String, f64>,
    /// `None` means not asserted.
    pub expected_vc: Option<usize>,
    pub expected_vcu: Option<usize>,
    pub expected_rsu: Option<usize>,
    /// VC counted only over `restricted_columns`, when reported.
    pub expected_restricted_vc: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub restricted_columns: Vec<usize>,
    /// Optimal robust risk of the class on the attached distribution.
    pub eta: f64,
    /// Rows attaining `eta`.
    pub target_rows: Vec<usize>,
    pub notes: Vec<String>,
}

impl ConstructionMeta {
    fn new(family: &str) -> Self {
        Self {
            family: family.to_string(),
            params: BTreeMap::new(),
            expected_vc: None,
            expected_vcu: None,
            expected_rsu: None,
            expected_restricted_vc: None,
            restricted_columns: Vec::new(),
            eta: 0.0,
            target_rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Construction {
    pub instance: ProblemInstance,
    pub meta: ConstructionMeta,
}

impl Construction {
    /// Recomputes the expected dimensions and the optimal robust risk.
    /// Returns a description of every mismatch.
    pub fn check(&self, limits: SearchLimits) -> Result<Vec<String>> {
        let inst = &self.instance;
        let (h, u) = (&inst.hypotheses, &inst.perturbation);
        let mut bad = Vec::new();
        if let Some(want) = self.meta.expected_vc {
            let got = dims::vc(h, limits)?.size;
            if got != want {
                bad.push(format!("vc {got} != expected {want}"));
            }
        }
        if let Some(want) = self.meta.expected_restricted_vc {
            let got = dims::vc_within(h, &self.meta.restricted_columns, limits)?.size;
            if got != want {
                bad.push(format!("restricted vc {got} != expected {want}"));
            }
        }
        if let Some(want) = self.meta.expected_vcu {
            let got = dims::vcu(h, u, limits)?.size;
            if got != want {
                bad.push(format!("vcu {got} != expected {want}"));
            }
        }
        if let Some(want) = self.meta.expected_rsu {
            let got = dims::rsu(h, u, limits)?.size;
            if got != want {
                bad.push(format!("rsu {got} != expected {want}"));
            }
        }
        let eta = optimal_robust_risk(inst);
        if (eta - self.meta.eta).abs() > 1e-9 {
            bad.push(format!("eta {eta} != expected {}", self.meta.eta));
        }
        for &r in &self.meta.target_rows {
            let risk = robust_risk(h.row(r), u, &inst.distribution);
            if (risk - self.meta.eta).abs() > 1e-9 {
                bad.push(format!("target row {r} has robust risk {risk}"));
            }
        }
        Ok(bad)
    }
}

/// Minimum over rows of the exact robust risk.
pub fn optimal_robust_risk(inst: &ProblemInstance) -> f64 {
    inst.hypotheses
        .rows()
        .iter()
        .map(|row| robust_risk(row, &inst.perturbation, &inst.distribution))
        .fold(f64::INFINITY, f64::min)
}

/// Index of `a_i`, `c_i`, `e_i` in the gap construction.
pub fn gap_point(block: usize, which: GapPoint) -> usize {
    3 * block
        + match which {
            GapPoint::A => 0,
            GapPoint::C => 1,
            GapPoint::E => 2,
        }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapPoint {
    A,
    C,
    E,
}

fn gap_class(n: usize) -> Result<(InstanceSpace, Perturbation, HypothesisTable)> {
    if !(1..=12).contains(&n) {
        return invalid(format!("gap construction needs 1 <= n <= 12, got {n}"));
    }
    let names = (0..n)
        .flat_map(|i| [format!("a{i}"), format!("c{i}"), format!("e{i}")])
        .collect();
    let space = InstanceSpace::new(3 * n, Some(names))?;
    let mut sets = Vec::with_capacity(3 * n);
    for i in 0..n {
        let (a, c, e) = (3 * i, 3 * i + 1, 3 * i + 2);
        sets.push(vec![a, c]);
        sets.push(vec![a, c, e]);
        sets.push(vec![c, e]);
    }
    let u = Perturbation::new(3 * n, sets)?;
    let rows = (0..1usize << n)
        .map(|b| {
            (0..n)
                .flat_map(|i| if b >> i & 1 == 0 { [true, true, false] } else { [true, false, false] })
                .collect()
        })
        .collect();
    let h = HypothesisTable::new(3 * n, rows)?;
    Ok((space, u, h))
}

fn gap_notes() -> Vec<String> {
    vec![
        "block i has a_i, c_i, e_i with U(a)={a,c}, U(c)={a,c,e}, U(e)={c,e}".into(),
        "row b: b_i = 0 gives (a,c,e) = (1,1,0), b_i = 1 gives (1,0,0)".into(),
    ]
}

/// Gap construction with the default target `sigma_i = i mod 2`.
pub fn gen_gap(n: usize) -> Result<Construction> {
    let sigma: Vec<bool> = (0..n).map(|i| i % 2 == 1).collect();
    gen_gap_with_target(n, &sigma)
}

/// Gap construction with uniform mass over the blocks: `(a_i, 1)` when
/// `sigma_i` is set, `(e_i, 0)` otherwise. The row with `b_i = 1 - sigma_i`
/// has robust risk 0.
pub fn gen_gap_with_target(n: usize, sigma: &[bool]) -> Result<Construction> {
    let (space, u, h) = gap_class(n)?;
    if sigma.len() != n {
        return invalid(format!("target has {} bits, expected {n}", sigma.len()));
    }
    let p = 1.0 / n as f64;
    let atoms = (0..n)
        .map(|i| {
            if sigma[i] {
                Atom { x: 3 * i, y: true, p }
            } else {
                Atom { x: 3 * i + 2, y: false, p }
            }
        })
        .collect();
    let target: usize = (0..n).filter(|&i| !sigma[i]).map(|i| 1 << i).sum();
    let mut meta = ConstructionMeta::new("gap").param("n", n as f64);
    meta.expected_vc = Some(n);
    meta.expected_vcu = Some(0);
    meta.expected_rsu = Some(n);
    meta.eta = 0.0;
    meta.target_rows = vec![target];
    meta.notes = gap_notes();
    meta.notes.push(format!(
        "mass 1/n on (a_i,1) where sigma_i = 1 and on (e_i,0) where sigma_i = 0; sigma = {}",
        sigma.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>()
    ));
    let instance = ProblemInstance::new(space, u, h, Distribution::new(atoms)?)?;
    Ok(Construction { instance, meta })
}

/// All labelings of `x_1..x_2m` and a shared point `w`, with
/// `U(x_i) = {x_i, w}` and `D` uniform over `(x_i, 1)`.
pub fn gen_allfns_overlap(m: usize) -> Result<Construction> {
    if !(1..=6).contains(&m) {
        return invalid(format!("overlap construction needs 1 <= m <= 6, got {m}"));
    }
    let n = 2 * m + 1;
    let w = 2 * m;
    let mut names: Vec<String> = (1..=2 * m).map(|i| format!("x{i}")).collect();
    names.push("w".into());
    let space = InstanceSpace::new(n, Some(names))?;
    let mut sets: Vec<Vec<usize>> = (0..w).map(|i| vec![i, w]).collect();
    sets.push(vec![w]);
    let u = Perturbation::new(n, sets)?;
    let rows = (0..1usize << n).map(|b| (0..n).map(|j| b >> j & 1 == 1).collect()).collect();
    let h = HypothesisTable::new(n, rows)?;
    let p = 1.0 / w as f64;
    let d = Distribution::new((0..w).map(|x| Atom { x, y: true, p }).collect())?;
    let mut meta = ConstructionMeta::new("allfns").param("m", m as f64);
    meta.expected_vc = Some(n);
    meta.expected_vcu = Some(1);
    meta.expected_rsu = Some(1);
    meta.expected_restricted_vc = Some(2 * m);
    meta.restricted_columns = (0..w).collect();
    meta.target_rows = vec![(1 << n) - 1];
    meta.notes = vec![
        "restricted vc counts shattering inside x_1..x_2m; unrestricted vc includes w".into(),
        format!("{} rows; dimension search needs the guard override when the count exceeds 4096", 1usize << n),
    ];
    let instance = ProblemInstance::new(space, u, h, d)?;
    Ok(Construction { instance, meta })
}

/// The improper-learning family: `3m` base points, rows with exactly `m`
/// robust failures, one private adversarial point per (base point, failing
/// row), and one uniform distribution per `2m`-subset of the base points.
#[derive(Debug, Clone)]
pub struct ImproperFamily {
    pub members: Vec<Construction>,
    /// Failing base points of each row.
    pub row_failures: Vec<Vec<usize>>,
    pub base_points: usize,
}

pub fn gen_improper(m: usize) -> Result<ImproperFamily> {
    if !(1..=3).contains(&m) {
        return invalid(format!("improper construction needs 1 <= m <= 3, got {m}"));
    }
    let base = 3 * m;
    let failures = combinations(base, m);
    let n_rows = failures.len();
    let n = base + n_rows * m;
    let mut names: Vec<String> = (0..base).map(|i| format!("x{i}")).collect();
    let mut sets: Vec<Vec<usize>> = (0..base).map(|i| vec![i]).collect();
    let mut rows = vec![vec![false; n]; n_rows];
    let mut next = base;
    for (r, fails) in failures.iter().enumerate() {
        for &i in fails {
            names.push(format!("p{i}_{r}"));
            sets[i].push(next);
            rows[r][next] = true;
            next += 1;
        }
    }
    for x in base..n {
        sets.push(vec![x]);
    }
    let space = InstanceSpace::new(n, Some(names))?;
    let u = Perturbation::new(n, sets)?;
    let h = HypothesisTable::new(n, rows)?;
    let mut members = Vec::new();
    for support in combinations(base, 2 * m) {
        let p = 1.0 / support.len() as f64;
        let d = Distribution::new(support.iter().map(|&x| Atom { x, y: false, p }).collect())?;
        let complement: Vec<usize> = (0..base).filter(|x| !support.contains(x)).collect();
        let target = failures
            .iter()
            .position(|f| *f == complement)
            .ok_or_else(|| Error::StructuralCheck("missing target row".into()))?;
        let mut meta = ConstructionMeta::new("improper").param("m", m as f64);
        meta.expected_vc = Some(1);
        meta.expected_vcu = Some(1);
        meta.expected_rsu = Some(1);
        meta.target_rows = vec![target];
        meta.notes = vec![
            format!("support {support:?}, labels 0"),
            "each private point is 1 only for its owning row and has a singleton perturbation set".into(),
        ];
        members.push(Construction {
            instance: ProblemInstance::new(space.clone(), u.clone(), h.clone(), d)?,
            meta,
        });
    }
    Ok(ImproperFamily {
        members,
        row_failures: failures,
        base_points: base,
    })
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// One noisy distribution per labeling `sigma` of a robustly shattered set
/// of the host, with masses `(1 ± alpha) / 2k` on the witness pairs.
pub fn gen_agnostic_sigma(k: usize, alpha: f64) -> Result<Vec<Construction>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("alpha {alpha} not in (0,1)"));
    }
    let host = gen_gap(k)?;
    agnostic_sigma_over(&host.instance, k, alpha)
}

/// [`gen_agnostic_sigma`] over an arbitrary host instance.
pub fn agnostic_sigma_over(host: &ProblemInstance, k: usize, alpha: f64) -> Result<Vec<Construction>> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    let shattered = dims::rsu(&host.hypotheses, &host.perturbation, SearchLimits::unguarded())?;
    if shattered.size < k {
        return invalid(format!("host robustly shatters only {} points, need {k}", shattered.size));
    }
    let plus = &shattered.z_plus[..k];
    let minus = &shattered.z_minus[..k];
    let hi = (1.0 + alpha) / (2 * k) as f64;
    let lo = (1.0 - alpha) / (2 * k) as f64;
    let mut out = Vec::with_capacity(1 << k);
    for s in 0..1usize << k {
        let mut atoms = Vec::with_capacity(2 * k);
        for j in 0..k {
            let set = s >> j & 1 == 1;
            atoms.push(Atom { x: plus[j], y: true, p: if set { hi } else { lo } });
            atoms.push(Atom { x: minus[j], y: false, p: if set { lo } else { hi } });
        }
        let d = merge_atoms(atoms)?;
        let instance = host.with_distribution(d)?;
        let eta = optimal_robust_risk(&instance);
        let target_rows = rows_attaining(&instance, eta);
        let mut meta = ConstructionMeta::new("agnostic-sigma").param("k", k as f64).param("alpha", alpha);
        meta.eta = (1.0 - alpha) / 2.0;
        meta.target_rows = target_rows;
        meta.notes = vec![
            format!("sigma = {s:0width$b} (bit j for witness pair j)", width = k),
            format!("witness pairs z+ = {plus:?}, z- = {minus:?}"),
        ];
        if (eta - meta.eta).abs() > 1e-9 {
            meta.notes.push(format!("enumerated optimum {eta} differs from (1 - alpha) / 2"));
        }
        out.push(Construction { instance, meta });
    }
    Ok(out)
}

fn merge_atoms(atoms: Vec<Atom>) -> Result<Distribution> {
    let mut merged: BTreeMap<(usize, bool), f64> = BTreeMap::new();
    for a in atoms {
        *merged.entry((a.x, a.y)).or_insert(0.0) += a.p;
    }
    Distribution::new(merged.into_iter().map(|((x, y), p)| Atom { x, y, p }).collect())
}

fn rows_attaining(inst: &ProblemInstance, eta: f64) -> Vec<usize> {
    (0..inst.hypotheses.n_rows())
        .filter(|&r| (robust_risk(inst.hypotheses.row(r), &inst.perturbation, &inst.distribution) - eta).abs() <= 1e-9)
        .collect()
}

/// Gap construction with mass `1/2n` on both `(a_i, 1)` and `(e_i, 0)` of
/// every block: no row is robustly correct on both atoms of a block, so the
/// optimal robust risk is 1/2, while a label-blind random labeling is
/// robustly correct on each atom with probability 1/4.
pub fn gen_three_halves(n: usize) -> Result<Construction> {
    let (space, u, h) = gap_class(n)?;
    let p = 1.0 / (2 * n) as f64;
    let atoms = (0..n)
        .flat_map(|i| [Atom { x: 3 * i, y: true, p }, Atom { x: 3 * i + 2, y: false, p }])
        .collect();
    let mut meta = ConstructionMeta::new("three-halves").param("n", n as f64);
    meta.expected_vc = Some(n);
    meta.expected_vcu = Some(0);
    meta.expected_rsu = Some(n);
    meta.eta = 0.5;
    meta.target_rows = (0..1usize << n).collect();
    meta.notes = gap_notes();
    meta.notes.push("optimal robust risk 1/2; label-blind expected risk 3/4 on every pair".into());
    meta.notes.push("only eta = 1/2 is generated; other noise levels are not implemented".into());
    let instance = ProblemInstance::new(space, u, h, Distribution::new(atoms)?)?;
    Ok(Construction { instance, meta })
}
