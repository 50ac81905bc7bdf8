//! Zero-one and robust losses, exact risks, and the restriction of a class
//! to hypotheses that are robustly self-consistent on a support.

use crate::error::{invalid, Result};
use crate::instance::{Distribution, Example, HypothesisTable, Perturbation};

/// `1` iff some `z` in `U(x)` has `labels[z] != y`.
pub fn robust_loss(labels: &[bool], u: &Perturbation, x: usize, y: bool) -> Result<u8> {
    check_index(labels, u, x)?;
    Ok(robust_loss_unchecked(labels, u, x, y) as u8)
}

pub fn zero_one_loss(labels: &[bool], x: usize, y: bool) -> Result<u8> {
    match labels.get(x) {
        Some(&v) => Ok((v != y) as u8),
        None => invalid(format!("instance {x} out of range")),
    }
}

#[inline]
pub(crate) fn robust_loss_unchecked(labels: &[bool], u: &Perturbation, x: usize, y: bool) -> bool {
    u.set(x).iter().any(|&z| labels[z] != y)
}

fn check_index(labels: &[bool], u: &Perturbation, x: usize) -> Result<()> {
    if x >= labels.len() || x >= u.len() {
        return invalid(format!("instance {x} out of range"));
    }
    if labels.len() != u.len() {
        return invalid(format!(
            "labeling has {} entries, perturbation covers {}",
            labels.len(),
            u.len()
        ));
    }
    Ok(())
}

/// Exact robust risk: sum over atoms of mass times robust loss.
pub fn robust_risk(labels: &[bool], u: &Perturbation, d: &Distribution) -> f64 {
    d.atoms()
        .iter()
        .filter(|a| robust_loss_unchecked(labels, u, a.x, a.y))
        .map(|a| a.p)
        .sum::<f64>()
        + 0.0
}

/// Exact zero-one risk.
pub fn risk(labels: &[bool], d: &Distribution) -> f64 {
    d.atoms()
        .iter()
        .filter(|a| labels[a.x] != a.y)
        .map(|a| a.p)
        .sum::<f64>()
        + 0.0
}

pub fn empirical_robust_risk(labels: &[bool], u: &Perturbation, s: &[Example]) -> Result<f64> {
    if s.is_empty() {
        return invalid("empirical risk of an empty sample");
    }
    let mut wrong = 0usize;
    for e in s {
        wrong += robust_loss(labels, u, e.x, e.y)? as usize;
    }
    Ok(wrong as f64 / s.len() as f64)
}

pub fn empirical_risk(labels: &[bool], s: &[Example]) -> Result<f64> {
    if s.is_empty() {
        return invalid("empirical risk of an empty sample");
    }
    let mut wrong = 0usize;
    for e in s {
        wrong += zero_one_loss(labels, e.x, e.y)? as usize;
    }
    Ok(wrong as f64 / s.len() as f64)
}

/// Hypotheses constant on every perturbation set of the support.
///
/// An empty result is a legitimate value: agnostic callers need to observe
/// it, so `table` is `None` rather than an error.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedClass {
    /// Indices of the surviving rows in the original table.
    pub rows: Vec<usize>,
    pub table: Option<HypothesisTable>,
}

impl RestrictedClass {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn is_self_consistent_on(row: &[bool], u: &Perturbation, x: usize) -> bool {
    let set = u.set(x);
    set.iter().all(|&z| row[z] == row[set[0]])
}

pub fn restrict_consistent(
    h: &HypothesisTable,
    u: &Perturbation,
    support: &[usize],
) -> Result<RestrictedClass> {
    if support.is_empty() {
        return invalid("support must be non-empty");
    }
    if let Some(&x) = support.iter().find(|&&x| x >= u.len()) {
        return invalid(format!("support instance {x} out of range"));
    }
    let rows: Vec<usize> = (0..h.n_rows())
        .filter(|&r| {
            support
                .iter()
                .all(|&x| is_self_consistent_on(h.row(r), u, x))
        })
        .collect();
    let table = if rows.is_empty() {
        None
    } else {
        Some(h.select(&rows)?)
    };
    Ok(RestrictedClass { rows, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Atom;

    fn u3() -> Perturbation {
        // 0 -> {0,1}, 1 -> {1}, 2 -> {1,2}
        Perturbation::new(3, vec![vec![0, 1], vec![1], vec![1, 2]]).unwrap()
    }

    #[test]
    fn identity_perturbation_is_zero_one() {
        let u = Perturbation::identity(3);
        let h = [true, false, true];
        for x in 0..3 {
            for y in [false, true] {
                assert_eq!(robust_loss(&h, &u, x, y).unwrap(), zero_one_loss(&h, x, y).unwrap());
            }
        }
    }

    #[test]
    fn constant_hypothesis_has_no_robust_loss_on_its_label() {
        let h = [true; 3];
        for x in 0..3 {
            assert_eq!(robust_loss(&h, &u3(), x, true).unwrap(), 0);
        }
    }

    #[test]
    fn robust_loss_sees_neighbors() {
        let h = [false, true, false];
        assert_eq!(robust_loss(&h, &u3(), 0, false).unwrap(), 1);
        assert_eq!(robust_loss(&h, &u3(), 1, true).unwrap(), 0);
        assert!(robust_loss(&h, &u3(), 7, true).is_err());
    }

    #[test]
    fn risks_are_linear_in_atoms() {
        let u = u3();
        let h = [false, true, false];
        let d = Distribution::new(vec![
            Atom { x: 0, y: false, p: 0.25 },
            Atom { x: 1, y: true, p: 0.25 },
            Atom { x: 2, y: false, p: 0.25 },
            Atom { x: 2, y: true, p: 0.25 },
        ])
        .unwrap();
        // robustly wrong on (0,0), (2,0), (2,1)
        assert!((robust_risk(&h, &u, &d) - 0.75).abs() < 1e-12);
        assert!((risk(&h, &d) - 0.25).abs() < 1e-12);
        assert_eq!(robust_risk(&h, &u, &Distribution::point_mass(1, true)), 0.0);
    }

    #[test]
    fn empirical_risks_count_multiplicity() {
        let u = u3();
        let h = [false, true, false];
        let s = vec![Example::new(0, false), Example::new(0, false)];
        assert_eq!(empirical_robust_risk(&h, &u, &s).unwrap(), 1.0);
        assert_eq!(empirical_risk(&h, &s).unwrap(), 0.0);
        assert!(empirical_risk(&h, &[]).is_err());
        assert_eq!(
            empirical_robust_risk(&h, &u, &[Example::new(1, true)]).unwrap(),
            0.0
        );
    }

    #[test]
    fn restriction_with_identity_keeps_everything() {
        let h = HypothesisTable::new(2, vec![vec![true, false], vec![false, false]]).unwrap();
        let r = restrict_consistent(&h, &Perturbation::identity(2), &[0, 1]).unwrap();
        assert_eq!(r.rows, vec![0, 1]);
        assert!(restrict_consistent(&h, &Perturbation::identity(2), &[]).is_err());
    }

    #[test]
    fn restriction_may_be_empty() {
        let h = HypothesisTable::new(2, vec![vec![true, false], vec![false, true]]).unwrap();
        let u = Perturbation::new(2, vec![vec![0, 1], vec![1]]).unwrap();
        let r = restrict_consistent(&h, &u, &[0]).unwrap();
        assert!(r.is_empty());
        assert!(r.table.is_none());
    }
}
