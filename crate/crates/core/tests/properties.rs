use std::collections::BTreeSet;

use proptest::prelude::*;

use rssl_core::compress::{round_trip, LossKind};
use rssl_core::dims::{self, verify, SearchLimits};
use rssl_core::loss::{empirical_robust_risk, robust_loss, zero_one_loss};
use rssl_core::partial::{oig_predict, to_partial, PartialTable};
use rssl_core::robust::{learn_known_support, DiscretizedSample, FiniteSubclass, Grass, InflatedSample, RobustLearner};
use rssl_core::rowset::RobustIndex;
use rssl_core::sample::{sample, sample_marginal};
use rssl_core::{Atom, Distribution, Example, HypothesisTable, PacParams, Perturbation};

fn limits() -> SearchLimits {
    SearchLimits::default()
}

/// Random class and perturbation with `x` in `U(x)`.
fn class(max_n: usize, max_rows: usize) -> impl Strategy<Value = (HypothesisTable, Perturbation)> {
    (1..=max_n)
        .prop_flat_map(move |n| {
            (
                Just(n),
                prop::collection::vec(prop::collection::vec(any::<bool>(), n), 1..=max_rows),
                prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.3), n), n),
            )
        })
        .prop_map(|(n, mut rows, mask)| {
            let mut seen = BTreeSet::new();
            rows.retain(|r| seen.insert(r.clone()));
            let sets = (0..n)
                .map(|x| (0..n).filter(|&z| z == x || mask[x][z]).collect())
                .collect();
            (HypothesisTable::new(n, rows).unwrap(), Perturbation::new(n, sets).unwrap())
        })
}

/// Class plus a robustly realizable sample labeled by one of its rows.
fn realizable() -> impl Strategy<Value = (HypothesisTable, Perturbation, Vec<Example>)> {
    (class(6, 12), any::<prop::sample::Index>(), prop::collection::vec(any::<prop::sample::Index>(), 1..12)).prop_filter_map(
        "target row is self-consistent nowhere",
        |((h, u), r, picks)| {
            let r = r.index(h.n_rows());
            let ok: Vec<usize> = (0..h.n_instances())
                .filter(|&x| u.set(x).iter().all(|&z| h.get(r, z) == h.get(r, x)))
                .collect();
            if ok.is_empty() {
                return None;
            }
            let s = picks.iter().map(|i| ok[i.index(ok.len())]).map(|x| Example::new(x, h.get(r, x))).collect();
            Some((h, u, s))
        },
    )
}

fn distribution(n: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::btree_map((0..n, any::<bool>()), 1u32..10, 1..=6).prop_map(|atoms| {
        let total: u32 = atoms.values().sum();
        Distribution::new(
            atoms
                .into_iter()
                .map(|((x, y), w)| Atom { x, y, p: w as f64 / total as f64 })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dimension_chain((h, u) in class(7, 25)) {
        let vcu = dims::vcu(&h, &u, limits()).unwrap().size;
        let rsu = dims::rsu(&h, &u, limits()).unwrap().size;
        let vc = dims::vc(&h, limits()).unwrap().size;
        prop_assert!(vcu <= rsu && rsu <= vc, "vcu {vcu} rsu {rsu} vc {vc}");
    }

    #[test]
    fn partial_class_dimension_is_vcu((h, u) in class(7, 25)) {
        let p = to_partial(&h, &u).unwrap();
        prop_assert_eq!(dims::partial_vc(&p, limits()).unwrap().size, dims::vcu(&h, &u, limits()).unwrap().size);
    }

    #[test]
    fn identity_perturbation_collapses_dimensions((h, _) in class(7, 25)) {
        let id = Perturbation::identity(h.n_instances());
        let vc = dims::vc(&h, limits()).unwrap().size;
        prop_assert_eq!(dims::vcu(&h, &id, limits()).unwrap().size, vc);
        prop_assert_eq!(dims::rsu(&h, &id, limits()).unwrap().size, vc);
        prop_assert_eq!(dims::partial_vc(&PartialTable::from_total(&h), limits()).unwrap().size, vc);
    }

    #[test]
    fn adding_a_row_never_lowers_dimensions((h, u) in class(6, 12), extra in prop::collection::vec(any::<bool>(), 6)) {
        let n = h.n_instances();
        let mut rows = h.rows().to_vec();
        prop_assume!(!rows.contains(&extra[..n].to_vec()));
        rows.push(extra[..n].to_vec());
        let bigger = HypothesisTable::new(n, rows).unwrap();
        prop_assert!(dims::vc(&bigger, limits()).unwrap().size >= dims::vc(&h, limits()).unwrap().size);
        prop_assert!(dims::vcu(&bigger, &u, limits()).unwrap().size >= dims::vcu(&h, &u, limits()).unwrap().size);
        prop_assert!(dims::rsu(&bigger, &u, limits()).unwrap().size >= dims::rsu(&h, &u, limits()).unwrap().size);
    }

    #[test]
    fn witnesses_verify((h, u) in class(7, 25)) {
        let r = dims::dimension_report(&h, &u, limits()).unwrap();
        let w = &r.witnesses;
        prop_assert!(verify::is_shattered(&h, &w.vc));
        prop_assert!(verify::is_u_shattered(&h, &u, &w.vc_u));
        prop_assert!(verify::is_robustly_shattered(&h, &u, &w.rs_u.points, &w.rs_u.z_plus, &w.rs_u.z_minus));
        prop_assert!(verify::is_shattered(&h.dual(), &w.dual_vc));
        prop_assert_eq!(w.vc.len(), r.vc);
        prop_assert_eq!(w.rs_u.points.len(), r.rs_u);
    }

    #[test]
    fn robust_loss_dominates_zero_one((h, u) in class(7, 10), y in any::<bool>()) {
        for row in h.rows() {
            for x in 0..h.n_instances() {
                prop_assert!(robust_loss(row, &u, x, y).unwrap() >= zero_one_loss(row, x, y).unwrap());
            }
        }
    }

    #[test]
    fn pointwise_pseudo_label_inequality((h, u) in class(7, 10), pseudo in prop::collection::vec(any::<bool>(), 7), truth in prop::collection::vec(any::<bool>(), 7)) {
        // l_U(h; x, h1(x)) <= l_U(h; x, y) + l_01(h1; x, y)
        for row in h.rows() {
            for x in 0..h.n_instances() {
                let lhs = robust_loss(row, &u, x, pseudo[x]).unwrap();
                let rhs = robust_loss(row, &u, x, truth[x]).unwrap() + u8::from(pseudo[x] != truth[x]);
                prop_assert!(lhs <= rhs);
            }
        }
    }

    #[test]
    fn one_inclusion_leave_one_out((h, u, s) in realizable()) {
        let p = to_partial(&h, &u).unwrap();
        let d = dims::partial_vc(&p, limits()).unwrap().size;
        let mut points: Vec<Example> = s.clone();
        points.sort_by_key(|e| e.x);
        points.dedup_by_key(|e| e.x);
        let mistakes = (0..points.len())
            .filter(|&i| {
                let known: Vec<Example> = points.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, e)| *e).collect();
                oig_predict(&p, &known, points[i].x).unwrap() != points[i].y
            })
            .count();
        prop_assert!(mistakes <= d, "{mistakes} leave-one-out mistakes, partial vc {d}");
    }

    #[test]
    fn inflation_matches_naive((h, u, s) in realizable()) {
        let inf = InflatedSample::new(&s, &u);
        prop_assert_eq!(&inf, &InflatedSample::new(&s, &u));
        let mut naive = BTreeSet::new();
        for z in 0..h.n_instances() {
            if let Some(i) = (0..s.len()).find(|&i| u.set(s[i].x).contains(&z)) {
                naive.insert((z, s[i].y, i));
            }
        }
        let got: BTreeSet<(usize, bool, usize)> = inf.pairs.iter().zip(&inf.origin).map(|(e, &i)| (e.x, e.y, i)).collect();
        prop_assert_eq!(got, naive);
    }

    #[test]
    fn subclass_and_discretization((h, u, s) in realizable()) {
        let index = RobustIndex::new(&h, &u);
        let mut points = s.clone();
        points.sort_by_key(|e| (e.x, e.y));
        points.dedup();
        let d = dims::vc(&h, limits()).unwrap().size;
        let sub = FiniteSubclass::build(&index, &points, d, 200_000, 1);
        for (row, gen) in sub.rows.iter().zip(&sub.generators) {
            prop_assert_eq!(empirical_robust_risk(h.row(*row), &u, gen).unwrap(), 0.0);
        }
        let inf = InflatedSample::new(&s, &u);
        let disc = DiscretizedSample::build(&h, &inf, &sub);
        let columns: BTreeSet<Vec<bool>> = inf
            .pairs
            .iter()
            .map(|e| sub.rows.iter().map(|&r| h.get(r, e.x) != e.y).collect())
            .collect();
        prop_assert_eq!(disc.representatives.len(), disc.distinct_columns);
        prop_assert_eq!(disc.distinct_columns, columns.len());
    }

    #[test]
    fn realizable_learner_fits_and_compresses((h, u, s) in realizable(), seed in any::<u64>()) {
        let learner = RobustLearner::new(&h, &u).unwrap();
        let out = learner.learn_realizable(&s, seed).unwrap();
        prop_assert_eq!(empirical_robust_risk(&out.predictor.outputs, &u, &s).unwrap(), 0.0);
        let rt = round_trip(&learner.reconstructor(), &out.compression, &s, LossKind::Robust(&u)).unwrap();
        prop_assert!(rt.ok(), "{rt:?}");
        let again = learner.learn_realizable(&s, seed).unwrap();
        prop_assert_eq!(again.predictor, out.predictor);
    }

    #[test]
    fn agnostic_learner_beats_every_row((h, u) in class(6, 12), labels in prop::collection::vec((0usize..6, any::<bool>()), 1..12), seed in any::<u64>()) {
        let n = h.n_instances();
        let s: Vec<Example> = labels.iter().map(|&(x, y)| Example::new(x % n, y)).collect();
        let out = RobustLearner::new(&h, &u).unwrap().learn_agnostic(&s, seed).unwrap();
        let got = empirical_robust_risk(&out.predictor.outputs, &u, &s).unwrap();
        let best = h.rows().iter().map(|r| empirical_robust_risk(r, &u, &s).unwrap()).fold(f64::INFINITY, f64::min);
        prop_assert!(got <= best + 1e-12, "learner {got} > best row {best}");
    }

    #[test]
    fn known_support_is_proper((h, u, s) in realizable()) {
        let support: Vec<usize> = s.iter().map(|e| e.x).collect::<BTreeSet<_>>().into_iter().collect();
        let pred = learn_known_support(&h, &u, &support, &s).unwrap();
        prop_assert!(h.find_row(&pred.outputs).is_some());
    }

    #[test]
    fn grass_sample_chain_inequality((h, u) in class(6, 12), d in distribution(6), seed in any::<u64>()) {
        let n = h.n_instances();
        prop_assume!(d.atoms().iter().all(|a| a.x < n));
        let s_l = sample(&d, 8, seed);
        let truth = sample(&d, 30, seed ^ 1);
        let s_u: Vec<usize> = truth.iter().map(|e| e.x).collect();
        let params = PacParams::realizable(0.1, 0.1).unwrap();
        let run = Grass::new(&h, &u).unwrap().run(&s_l, &s_u, &params, seed).unwrap();
        let h1 = &run.first_phase.outputs;
        let h1_mistakes = truth.iter().filter(|e| h1[e.x] != e.y).count() as u32;
        for row in h.rows() {
            let on_pseudo: u32 = run.pseudo_labeled.iter().map(|e| robust_loss(row, &u, e.x, e.y).unwrap() as u32).sum();
            let on_truth: u32 = truth.iter().map(|e| robust_loss(row, &u, e.x, e.y).unwrap() as u32).sum();
            prop_assert!(on_pseudo <= on_truth + h1_mistakes);
        }
    }

    #[test]
    fn sampling_is_prefix_stable(d in distribution(6), m in 0usize..40, seed in any::<u64>()) {
        let long = sample(&d, m + 5, seed);
        prop_assert_eq!(&sample(&d, m, seed)[..], &long[..m]);
        let xs: Vec<usize> = long.iter().map(|e| e.x).collect();
        prop_assert_eq!(sample_marginal(&d, m + 5, seed), xs);
    }
}
