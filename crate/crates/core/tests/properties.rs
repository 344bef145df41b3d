//! Randomized invariants over words, trees, realizations and projections.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use arbre_subst::core_map::LabeledTower;
use arbre_subst::free_group::{
    abelianize, family_eta, p_star, v_sigma_inverse, Automorphism, GroupWord, SignedLetter,
};
use arbre_subst::par;
use arbre_subst::prefix_suffix::{automatic_writing, word_of_writing};
use arbre_subst::rauzy_viz::{contraction_ratios, family_basis, Coloring};
use arbre_subst::realization::{hausdorff_gap, point_distance, AlgLength, FreePoint, Realization};
use arbre_subst::symbolic::{language, Letter, Substitution};
use arbre_subst::tree_subst::TreeTower;
use proptest::prelude::*;

fn omega(d: usize) -> &'static [Letter] {
    static W: OnceLock<Vec<Vec<Letter>>> = OnceLock::new();
    &W.get_or_init(|| (3..=5).map(|d| Substitution::family(d).unwrap().fixed_point_prefix(6000).unwrap()).collect())
        [d - 3]
}

fn tower(d: usize) -> &'static LabeledTower {
    static T: OnceLock<Vec<LabeledTower>> = OnceLock::new();
    &T.get_or_init(|| (3..=5).map(|d| LabeledTower::family(d, 9).unwrap()).collect())[d - 3]
}

fn realization(d: usize) -> &'static Realization {
    static R: OnceLock<Vec<Realization>> = OnceLock::new();
    &R.get_or_init(|| (3..=4).map(|d| Realization::family(d, 8).unwrap()).collect())[d - 3]
}

fn signed_word(d: usize, max_len: usize) -> impl Strategy<Value = Vec<SignedLetter>> {
    prop::collection::vec((1..=d as Letter, any::<bool>()), 0..=max_len)
        .prop_map(|v| v.into_iter().map(|(base, inverse)| SignedLetter { base, inverse }).collect())
}

fn alg(d: usize) -> impl Strategy<Value = AlgLength> {
    (prop::collection::vec(-4i64..=4, d), -3i32..=3).prop_map(|(c, s)| AlgLength::from_parts(c, s))
}

fn free_point(d: usize) -> impl Strategy<Value = FreePoint> {
    prop::collection::vec((0..d as u8, alg(d)), 0..5).prop_map(move |s| FreePoint::from_syllables(d, s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factor_complexity_is_linear(d in 3usize..=5, n in 1usize..=30) {
        let t = language(&Substitution::family(d).unwrap(), n).unwrap();
        prop_assert_eq!(t.factors.len(), (d - 1) * n + 1);
    }

    #[test]
    fn left_specials_are_prefixes_of_the_fixed_point(d in 3usize..=5, n in 1usize..=25) {
        let t = language(&Substitution::family(d).unwrap(), n).unwrap();
        prop_assert_eq!(t.left_special, vec![omega(d)[..n].to_vec()]);
    }

    #[test]
    fn powers_of_one_are_nested(d in 3usize..=5, n in 0usize..=20) {
        let sub = Substitution::family(d).unwrap();
        prop_assert!(sub.power_of_one(n + 1).starts_with(&sub.power_of_one(n)));
    }

    #[test]
    fn automatic_writing_rebuilds_prefixes(d in 3usize..=5, k in 0usize..=6000) {
        let sub = Substitution::family(d).unwrap();
        let w = automatic_writing(&sub, &omega(d)[..k]).unwrap();
        prop_assert_eq!(word_of_writing(&sub, &w), omega(d)[..k].to_vec());
        prop_assert!(w.windows(2).all(|p| p[1] >= p[0] + d as u32));
    }

    #[test]
    fn automatic_writing_is_injective(d in 3usize..=4, a in 0usize..=500, b in 0usize..=500) {
        prop_assume!(a != b);
        let sub = Substitution::family(d).unwrap();
        let wa = automatic_writing(&sub, &omega(d)[..a]).unwrap();
        let wb = automatic_writing(&sub, &omega(d)[..b]).unwrap();
        prop_assert_ne!(wa, wb);
    }

    #[test]
    fn writings_below_a_power_are_shorter(d in 3usize..=4, m in 0usize..=15, k in 1usize..=3000) {
        let sub = Substitution::family(d).unwrap();
        let w = automatic_writing(&sub, &omega(d)[..k]).unwrap();
        if w.last().is_some_and(|&top| top as usize <= m) {
            prop_assert!(k < sub.power_of_one(m + 1).len());
        }
    }

    #[test]
    fn reduce_is_idempotent_and_shortens(raw in signed_word(4, 20)) {
        let once = GroupWord::reduce(raw.iter().copied());
        prop_assert!(once.len() <= raw.len());
        prop_assert_eq!(GroupWord::reduce(once.letters().iter().copied()), once);
    }

    #[test]
    fn substitution_inverts_its_inverse(d in 3usize..=4, raw in signed_word(4, 8)) {
        let raw: Vec<_> = raw.into_iter().filter(|l| l.base as usize <= d).collect();
        let w = GroupWord::reduce(raw);
        let sigma = Automorphism::family(d).unwrap();
        let inv = Automorphism::family_inverse(d).unwrap();
        let back = sigma.apply(&inv.apply(&w).unwrap().0).unwrap().0;
        prop_assert_eq!(back, w);
    }

    #[test]
    fn abelianization_adds(a in signed_word(3, 10), b in signed_word(3, 10)) {
        let (u, v) = (GroupWord::reduce(a), GroupWord::reduce(b));
        let sum: Vec<i64> = abelianize(&u, 3).unwrap().iter().zip(abelianize(&v, 3).unwrap()).map(|(x, y)| x + y).collect();
        prop_assert_eq!(abelianize(&u.mul(&v), 3).unwrap(), sum);
    }

    #[test]
    fn left_translation_preserves_distance(r in free_point(3), p in free_point(3), q in free_point(3)) {
        let before = point_distance(&p, &q);
        let after = point_distance(&r.mul(&p), &r.mul(&q));
        prop_assert_eq!(&before, &after);
        prop_assert!((before.value() - after.value()).abs() < 1e-12);
    }

    #[test]
    fn free_product_distance_is_a_metric(p in free_point(3), q in free_point(3), s in free_point(3)) {
        prop_assert_eq!(point_distance(&p, &q), point_distance(&q, &p));
        prop_assert!(point_distance(&p, &p).is_zero());
        let lhs = point_distance(&p, &s).value();
        let rhs = point_distance(&p, &q).value() + point_distance(&q, &s).value();
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn exact_arithmetic_matches_floats(a in alg(4), b in alg(4)) {
        prop_assert!(((&a + &b).value() - (a.value() + b.value())).abs() < 1e-9);
        prop_assert!(((&a * &b).value() - a.value() * b.value()).abs() < 1e-7);
        prop_assert_eq!(&(&a - &b) + &b, a.clone());
        prop_assert_eq!(&a * &b, &b * &a);
    }

    #[test]
    fn realized_distance_adds_along_paths(d in 3usize..=4, n in 0usize..=8, i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let r = realization(d);
        let t = TreeTower::family(d, n).unwrap();
        let verts: Vec<u32> = t.stage(n).vertices().iter().copied().collect();
        let (x, y) = (verts[i.index(verts.len())], verts[j.index(verts.len())]);
        let path = t.stage(n).path_vertices(x, y).unwrap();
        let total = path.windows(2).fold(AlgLength::zero(d), |acc, w| &acc + &r.distance(n, w[0], w[1]).unwrap());
        prop_assert_eq!(r.distance(n, x, y).unwrap(), total);
    }

    #[test]
    fn prefix_projection_is_injective_on_vertices(d in 3usize..=5, n in 0usize..=9) {
        let lt = tower(d);
        let t = lt.tree(n);
        let mut seen = BTreeSet::new();
        for &v in t.vertices() {
            let w = p_star(d, &t.path_word(lt.root(), v).unwrap()).unwrap();
            prop_assert!(seen.insert(w), "vertex {}", v);
        }
    }

    #[test]
    fn tree_vertices_nest_and_have_degree_one_or_d(d in 3usize..=5, n in 0usize..=8) {
        let lt = tower(d);
        let (small, big) = (lt.tree(n), lt.tree(n + 1));
        prop_assert!(small.vertices().is_subset(big.vertices()));
        prop_assert!(big.degrees().values().all(|&k| k == 1 || k == d));
        prop_assert!(big.is_discerned());
    }

    #[test]
    fn new_labels_descend_from_older_ones(d in 3usize..=5, n in 0usize..=9) {
        prop_assert!(tower(d).apparition_chain_failures(n).unwrap().is_empty());
        prop_assert!(tower(d).color_one_neighbor_failures(n).unwrap().is_empty());
    }

    #[test]
    fn parallel_and_sequential_maps_agree(v in prop::collection::vec(any::<i32>(), 0..200)) {
        let f = |x: &i32| x.wrapping_mul(31).rotate_left(3);
        let seq: Vec<i32> = v.iter().map(f).collect();
        prop_assert_eq!(par::map(&v, f), seq);
    }

    #[test]
    fn coloring_parses_both_kinds(k in 0usize..50) {
        prop_assert_eq!(format!("cylinder:{k}").parse::<Coloring>().unwrap(), Coloring::Cylinder(k));
        prop_assert_eq!(format!("arc {k}").parse::<Coloring>().unwrap(), Coloring::Arc(k));
    }
}

#[test]
fn inverse_length_vector_is_a_left_eigenvector() {
    for d in 3..=6 {
        let eta = family_eta(d);
        assert!((eta.powi(d as i32) - eta - 1.0).abs() < 1e-12);
        let v = v_sigma_inverse(d);
        let m = Automorphism::family_inverse(d).unwrap().matrix().to_dmatrix();
        for j in 0..d {
            let col: f64 = (0..d).map(|i| v[i] * m[(i, j)]).sum();
            assert!((col - eta * v[j]).abs() < 1e-9, "d={d} column {j}");
        }
    }
}

#[test]
fn hausdorff_gaps_shrink_geometrically() {
    let r = Realization::family(3, 10).unwrap();
    let eta = family_eta(3);
    let gaps: Vec<f64> = (3..=10).map(|n| hausdorff_gap(&r, n).value).collect();
    for w in gaps.windows(2) {
        assert!((w[1] / w[0] - 1.0 / eta).abs() < 0.01, "{gaps:?}");
    }
}

#[test]
fn projected_powers_contract() {
    let ratios = contraction_ratios(&family_basis(3).unwrap(), 30).unwrap();
    assert!(ratios[5..].iter().all(|&r| r < 1.0), "{ratios:?}");
}
