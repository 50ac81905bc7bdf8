//! Exhaustive computation of VC, dual VC, VC_U, RS_U and partial VC, with
//! witness extraction.
//!
//! Two search engines are used. VC, dual VC and partial VC grow candidate
//! sets and count distinct defined projections; a set is kept only while it
//! projects onto all `2^k` patterns. VC_U and RS_U precompute for every
//! `(x, y)` the rows constant `y` on `U(x)` and run a depth-first search
//! that keeps all `2^k` row-set intersections non-empty.
//!
//! Both engines prune with the bound `depth + remaining <= best`, with
//! `floor(log2 |rows|)` as an absolute ceiling, and with a counting bound:
//! to reach size `t` from a shattered set of size `k`, every pattern cell
//! must still hold at least `2^(t-k)` rows.

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{HypothesisTable, Perturbation};
use crate::partial::{PartialTable, Ternary};
use crate::rowset::RobustIndex;

/// Size guard for exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_instances: usize,
    pub max_hypotheses: usize,
    pub override_guard: bool,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            max_instances: 24,
            max_hypotheses: 4096,
            override_guard: false,
        }
    }
}

impl SearchLimits {
    pub fn unguarded() -> Self {
        Self {
            override_guard: true,
            ..Self::default()
        }
    }

    pub fn check(&self, n_instances: usize, n_rows: usize) -> Result<()> {
        if self.override_guard {
            return Ok(());
        }
        if n_instances > self.max_instances {
            return Err(Error::SizeGuard(format!(
                "{n_instances} instances > {}",
                self.max_instances
            )));
        }
        if n_rows > self.max_hypotheses {
            return Err(Error::SizeGuard(format!(
                "{n_rows} hypotheses > {}",
                self.max_hypotheses
            )));
        }
        Ok(())
    }
}

/// A maximum shattered set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Shattered {
    pub size: usize,
    pub witness: Vec<usize>,
}

/// A maximum robustly shattered set with its witness points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RobustShattered {
    pub size: usize,
    pub points: Vec<usize>,
    pub z_plus: Vec<usize>,
    pub z_minus: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DimensionReport {
    pub vc: usize,
    pub dual_vc: usize,
    pub vc_u: usize,
    pub rs_u: usize,
    pub witnesses: DimensionWitnesses,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DimensionWitnesses {
    pub vc: Vec<usize>,
    /// Rows of the hypothesis table shattered by the dual class.
    pub dual_vc: Vec<usize>,
    pub vc_u: Vec<usize>,
    pub rs_u: RobustShattered,
}

pub fn dimension_report(
    h: &HypothesisTable,
    u: &Perturbation,
    limits: SearchLimits,
) -> Result<DimensionReport> {
    let vc = vc(h, limits)?;
    let dual = dual_vc(h, SearchLimits::unguarded())?;
    let vcu = vcu(h, u, limits)?;
    let rsu = rsu(h, u, limits)?;
    Ok(DimensionReport {
        vc: vc.size,
        dual_vc: dual.size,
        vc_u: vcu.size,
        rs_u: rsu.size,
        witnesses: DimensionWitnesses {
            vc: vc.witness,
            dual_vc: dual.witness,
            vc_u: vcu.witness,
            rs_u: rsu,
        },
    })
}

pub fn vc(h: &HypothesisTable, limits: SearchLimits) -> Result<Shattered> {
    limits.check(h.n_instances(), h.n_rows())?;
    let cols: Vec<usize> = (0..h.n_instances()).collect();
    Ok(vc_over(h, &cols))
}

/// VC dimension counting only shattered sets inside `columns`.
pub fn vc_within(h: &HypothesisTable, columns: &[usize], limits: SearchLimits) -> Result<Shattered> {
    limits.check(columns.len(), h.n_rows())?;
    if let Some(&c) = columns.iter().find(|&&c| c >= h.n_instances()) {
        return Err(Error::InvalidInput(format!("column {c} out of range")));
    }
    Ok(vc_over(h, columns))
}

fn vc_over(h: &HypothesisTable, columns: &[usize]) -> Shattered {
    let values: Vec<Vec<u8>> = (0..h.n_instances())
        .map(|x| (0..h.n_rows()).map(|r| h.get(r, x) as u8).collect())
        .collect();
    ProjectionSearch::run(&values, h.n_rows(), columns)
}

/// VC of the transposed, deduplicated table. The witness lists rows of `h`.
pub fn dual_vc(h: &HypothesisTable, limits: SearchLimits) -> Result<Shattered> {
    let dual = h.dual();
    limits.check(dual.n_instances(), dual.n_rows())?;
    let cols: Vec<usize> = (0..dual.n_instances()).collect();
    Ok(vc_over(&dual, &cols))
}

pub fn partial_vc(p: &PartialTable, limits: SearchLimits) -> Result<Shattered> {
    limits.check(p.n_instances(), p.n_rows())?;
    let values: Vec<Vec<u8>> = (0..p.n_instances())
        .map(|x| (0..p.n_rows()).map(|r| p.get(r, x) as u8).collect())
        .collect();
    let cols: Vec<usize> = (0..p.n_instances()).collect();
    Ok(ProjectionSearch::run(&values, p.n_rows(), &cols))
}

pub fn vcu(h: &HypothesisTable, u: &Perturbation, limits: SearchLimits) -> Result<Shattered> {
    limits.check(h.n_instances(), h.n_rows())?;
    let index = RobustIndex::new(h, u);
    let coords: Vec<Coord> = (0..h.n_instances())
        .map(|x| Coord {
            key: x,
            zero: index.correct(x, false).clone(),
            one: index.correct(x, true).clone(),
            z_plus: x,
            z_minus: x,
        })
        .collect();
    let found = IntersectionSearch::run(coords, h.n_rows());
    Ok(Shattered {
        size: found.len(),
        witness: found.iter().map(|c| c.0).collect(),
    })
}

pub fn rsu(h: &HypothesisTable, u: &Perturbation, limits: SearchLimits) -> Result<RobustShattered> {
    limits.check(h.n_instances(), h.n_rows())?;
    let index = RobustIndex::new(h, u);
    let n = h.n_instances();
    // members[x] = all z with x in U(z)
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for z in 0..n {
        for &x in u.set(z) {
            members[x].push(z);
        }
    }
    let mut coords = Vec::new();
    for x in 0..n {
        let plus: Vec<usize> = members[x]
            .iter()
            .copied()
            .filter(|&z| !index.correct(z, true).is_clear())
            .collect();
        let minus: Vec<usize> = members[x]
            .iter()
            .copied()
            .filter(|&z| !index.correct(z, false).is_clear())
            .collect();
        let mut local: Vec<Coord> = Vec::new();
        for &zp in &plus {
            for &zm in &minus {
                let one = index.correct(zp, true);
                let zero = index.correct(zm, false);
                if local.iter().any(|c| &c.one == one && &c.zero == zero) {
                    continue;
                }
                local.push(Coord {
                    key: x,
                    zero: zero.clone(),
                    one: one.clone(),
                    z_plus: zp,
                    z_minus: zm,
                });
            }
        }
        coords.extend(local);
    }
    let found = IntersectionSearch::run(coords, h.n_rows());
    Ok(RobustShattered {
        size: found.len(),
        points: found.iter().map(|c| c.0).collect(),
        z_plus: found.iter().map(|c| c.1).collect(),
        z_minus: found.iter().map(|c| c.2).collect(),
    })
}

fn log2_floor(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        (usize::BITS - 1 - n.leading_zeros()) as usize
    }
}

struct ProjectionSearch<'a> {
    values: &'a [Vec<u8>],
    candidates: Vec<usize>,
    best: Vec<usize>,
    ceiling: usize,
}

impl<'a> ProjectionSearch<'a> {
    fn run(values: &'a [Vec<u8>], n_rows: usize, columns: &[usize]) -> Shattered {
        let candidates: Vec<usize> = columns
            .iter()
            .copied()
            .filter(|&c| {
                let col = &values[c];
                col.contains(&0) && col.contains(&1)
            })
            .collect();
        let mut search = ProjectionSearch {
            values,
            candidates,
            best: Vec::new(),
            ceiling: log2_floor(n_rows),
        };
        let alive: Vec<(usize, u32)> = (0..n_rows).map(|r| (r, 0)).collect();
        let mut chosen = Vec::new();
        search.dfs(&mut chosen, &alive, 0);
        Shattered {
            size: search.best.len(),
            witness: search.best,
        }
    }

    fn done(&self) -> bool {
        self.best.len() >= self.ceiling
    }

    fn dfs(&mut self, chosen: &mut Vec<usize>, alive: &[(usize, u32)], start: usize) {
        let k = chosen.len();
        if k > self.best.len() {
            self.best = chosen.clone();
        }
        let mut buckets = vec![0usize; 1 << (k + 1).min(31)];
        for i in start..self.candidates.len() {
            if self.done() || k + (self.candidates.len() - i) <= self.best.len() {
                return;
            }
            let c = self.candidates[i];
            let col = &self.values[c];
            let next: Vec<(usize, u32)> = alive
                .iter()
                .filter(|(r, _)| col[*r] != Ternary::Star as u8)
                .map(|&(r, code)| (r, (code << 1) | col[r] as u32))
                .collect();
            let cells = 1usize << (k + 1);
            if next.len() < cells {
                continue;
            }
            buckets.iter_mut().for_each(|b| *b = 0);
            for &(_, code) in &next {
                buckets[code as usize] += 1;
            }
            let target = self.best.len() + 1;
            let need = if target > k + 1 { 1usize << (target - k - 1) } else { 1 };
            if buckets.iter().any(|&b| b < need) {
                continue;
            }
            chosen.push(c);
            self.dfs(chosen, &next, i + 1);
            chosen.pop();
        }
    }
}

#[derive(Clone)]
struct Coord {
    key: usize,
    zero: FixedBitSet,
    one: FixedBitSet,
    z_plus: usize,
    z_minus: usize,
}

struct IntersectionSearch {
    coords: Vec<Coord>,
    // number of distinct keys at positions >= i
    keys_from: Vec<usize>,
    best: Vec<usize>,
    ceiling: usize,
}

impl IntersectionSearch {
    /// Returns (key, z_plus, z_minus) for each member of a maximum set.
    fn run(coords: Vec<Coord>, n_rows: usize) -> Vec<(usize, usize, usize)> {
        let mut coords: Vec<Coord> = coords
            .into_iter()
            .filter(|c| !c.zero.is_clear() && !c.one.is_clear())
            .collect();
        coords.sort_by_key(|c| c.key);
        let mut keys_from = vec![0usize; coords.len() + 1];
        for i in (0..coords.len()).rev() {
            let new_key = i + 1 == coords.len() || coords[i + 1].key != coords[i].key;
            keys_from[i] = keys_from[i + 1] + new_key as usize;
        }
        let mut search = IntersectionSearch {
            coords,
            keys_from,
            best: Vec::new(),
            ceiling: log2_floor(n_rows),
        };
        let mut all = FixedBitSet::with_capacity(n_rows);
        all.insert_range(..);
        let mut chosen = Vec::new();
        search.dfs(&mut chosen, &[all], 0, None);
        search
            .best
            .iter()
            .map(|&i| {
                let c = &search.coords[i];
                (c.key, c.z_plus, c.z_minus)
            })
            .collect()
    }

    fn dfs(&mut self, chosen: &mut Vec<usize>, cells: &[FixedBitSet], start: usize, last_key: Option<usize>) {
        let k = chosen.len();
        if k > self.best.len() {
            self.best = chosen.clone();
        }
        for i in start..self.coords.len() {
            if self.best.len() >= self.ceiling || k + self.keys_from[i] <= self.best.len() {
                return;
            }
            if Some(self.coords[i].key) == last_key {
                continue;
            }
            let target = self.best.len() + 1;
            let need = if target > k + 1 { 1usize << (target - k - 1) } else { 1 };
            let coord = &self.coords[i];
            let mut next = Vec::with_capacity(cells.len() * 2);
            let mut ok = true;
            for cell in cells {
                let mut zero = cell.clone();
                zero.intersect_with(&coord.zero);
                let mut one = cell.clone();
                one.intersect_with(&coord.one);
                if zero.count_ones(..) < need || one.count_ones(..) < need {
                    ok = false;
                    break;
                }
                next.push(zero);
                next.push(one);
            }
            if !ok {
                continue;
            }
            let key = coord.key;
            chosen.push(i);
            self.dfs(chosen, &next, i + 1, Some(key));
            chosen.pop();
        }
    }
}

/// Literal checks of the shattering definitions, independent of the search
/// engines above: every labeling of the candidate set is tried against
/// every row.
pub mod verify {
    use crate::instance::{HypothesisTable, Perturbation};
    use crate::partial::{PartialTable, Ternary};

    fn patterns(k: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1u64 << k).map(move |bits| (0..k).map(|i| bits >> i & 1 == 1).collect())
    }

    fn distinct(points: &[usize]) -> bool {
        let mut v = points.to_vec();
        v.sort_unstable();
        v.windows(2).all(|w| w[0] != w[1])
    }

    pub fn is_shattered(h: &HypothesisTable, points: &[usize]) -> bool {
        distinct(points)
            && patterns(points.len()).all(|y| {
                h.rows()
                    .iter()
                    .any(|row| points.iter().zip(&y).all(|(&x, &v)| row[x] == v))
            })
    }

    pub fn is_partial_shattered(p: &PartialTable, points: &[usize]) -> bool {
        distinct(points)
            && patterns(points.len()).all(|y| {
                p.rows()
                    .iter()
                    .any(|row| points.iter().zip(&y).all(|(&x, &v)| row[x] == Ternary::from(v)))
            })
    }

    pub fn is_u_shattered(h: &HypothesisTable, u: &Perturbation, points: &[usize]) -> bool {
        distinct(points)
            && patterns(points.len()).all(|y| {
                h.rows().iter().any(|row| {
                    points
                        .iter()
                        .zip(&y)
                        .all(|(&x, &v)| u.set(x).iter().all(|&z| row[z] == v))
                })
            })
    }

    pub fn is_robustly_shattered(
        h: &HypothesisTable,
        u: &Perturbation,
        points: &[usize],
        z_plus: &[usize],
        z_minus: &[usize],
    ) -> bool {
        if !distinct(points) || z_plus.len() != points.len() || z_minus.len() != points.len() {
            return false;
        }
        let anchored = points.iter().enumerate().all(|(i, &x)| {
            u.set(z_plus[i]).contains(&x) && u.set(z_minus[i]).contains(&x)
        });
        anchored
            && patterns(points.len()).all(|y| {
                h.rows().iter().any(|row| {
                    y.iter().enumerate().all(|(i, &plus)| {
                        let z = if plus { z_plus[i] } else { z_minus[i] };
                        u.set(z).iter().all(|&zeta| row[zeta] == plus)
                    })
                })
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_labelings(k: usize) -> HypothesisTable {
        let rows = (0..1u32 << k)
            .map(|b| (0..k).map(|i| b >> i & 1 == 1).collect())
            .collect();
        HypothesisTable::new(k, rows).unwrap()
    }

    #[test]
    fn single_hypothesis_dimensions() {
        let h = HypothesisTable::new(3, vec![vec![true, true, true]]).unwrap();
        let u = Perturbation::identity(3);
        let r = dimension_report(&h, &u, SearchLimits::default()).unwrap();
        assert_eq!((r.vc, r.dual_vc, r.vc_u, r.rs_u), (0, 0, 0, 0));
        // a non-constant row has two distinct columns, which shatter it
        let h = HypothesisTable::new(3, vec![vec![true, false, true]]).unwrap();
        let r = dimension_report(&h, &u, SearchLimits::default()).unwrap();
        assert_eq!((r.vc, r.dual_vc, r.vc_u, r.rs_u), (0, 1, 0, 0));
    }

    #[test]
    fn full_class_has_full_dimensions() {
        for k in 1..=4 {
            let h = all_labelings(k);
            let u = Perturbation::identity(k);
            let r = dimension_report(&h, &u, SearchLimits::default()).unwrap();
            assert_eq!((r.vc, r.vc_u, r.rs_u), (k, k, k));
            assert_eq!(r.dual_vc, log2_floor(k));
            assert!(verify::is_shattered(&h, &r.witnesses.vc));
        }
    }

    #[test]
    fn dual_of_full_class_by_brute_force() {
        // the dual of the full class on k points has only k rows
        for k in 1..=4 {
            let dual = all_labelings(k).dual();
            let mut best = 0;
            for mask in 0u32..1 << dual.n_instances() {
                let pts: Vec<usize> = (0..dual.n_instances()).filter(|i| mask >> i & 1 == 1).collect();
                if verify::is_shattered(&dual, &pts) {
                    best = best.max(pts.len());
                }
            }
            assert_eq!(best, log2_floor(k));
            assert_eq!(dual_vc(&all_labelings(k), SearchLimits::default()).unwrap().size, best);
        }
    }

    #[test]
    fn guard_refuses_large_instances() {
        let h = HypothesisTable::new(30, vec![vec![false; 30]]).unwrap();
        assert!(matches!(vc(&h, SearchLimits::default()), Err(Error::SizeGuard(_))));
        assert!(vc(&h, SearchLimits::unguarded()).is_ok());
    }

    #[test]
    fn vc_within_restricts_columns() {
        let h = all_labelings(3);
        assert_eq!(vc_within(&h, &[0, 2], SearchLimits::default()).unwrap().size, 2);
    }
}
