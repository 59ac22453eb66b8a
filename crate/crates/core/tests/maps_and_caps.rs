use std::collections::BTreeSet;

use capset_core::caps::{anchor_point, canonical_cap, is_cap};
use capset_core::partition::{random_affine_map, random_linear_map};
use capset_core::{AffineMap, Dimension, Point, PointSet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn coords(n: usize, index: usize) -> Vec<usize> {
    let mut c = vec![0; n];
    let mut x = index;
    for slot in c.iter_mut().rev() {
        *slot = x % 3;
        x /= 3;
    }
    c
}

fn collinear(n: usize, a: usize, b: usize, c: usize) -> bool {
    let (x, y, z) = (coords(n, a), coords(n, b), coords(n, c));
    a != b && b != c && a != c && (0..n).all(|i| (x[i] + y[i] + z[i]) % 3 == 0)
}

fn map(seed: u64) -> AffineMap {
    random_affine_map(Dimension::FOUR, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn affine_maps_preserve_collinearity(seed in any::<u64>(), a in 0usize..81, b in 0usize..81) {
        prop_assume!(a != b);
        let g = map(seed);
        let space = Dimension::FOUR.space();
        let (p, q) = (Point::new_unchecked(a as u8), Point::new_unchecked(b as u8));
        let r = space.third_unchecked(p, q);
        prop_assert!(collinear(4, a, b, r.index()));
        let (gp, gq, gr) = (g.apply(p), g.apply(q), g.apply(r));
        prop_assert!(collinear(4, gp.index(), gq.index(), gr.index()));
    }

    #[test]
    fn maps_carry_caps_and_anchors(seed in any::<u64>()) {
        let g = map(seed);
        let d4 = Dimension::FOUR;
        let s = canonical_cap();
        let image = g.apply_set(s);
        prop_assert!(is_cap(d4, image));
        prop_assert_eq!(image.len(), 20);
        prop_assert_eq!(anchor_point(d4, image).unwrap(), g.apply(Point::ORIGIN));
    }

    #[test]
    fn inverse_and_composition(s1 in any::<u64>(), s2 in any::<u64>(), x in 0u8..81) {
        let (g, h) = (map(s1), map(s2));
        let p = Point::new_unchecked(x);
        prop_assert_eq!(g.inverse().apply(g.apply(p)), p);
        prop_assert_eq!(g.compose(&h).apply(p), g.apply(h.apply(p)));
        prop_assert_eq!(g.compose(&h).determinant(), (g.determinant() * h.determinant()) % 3);
    }

    #[test]
    fn trit_strings_round_trip(seed in any::<u64>()) {
        let g = map(seed);
        let back = AffineMap::parse_trit_string(Dimension::FOUR, &g.to_trit_string()).unwrap();
        prop_assert_eq!(back, g);
        let l = random_linear_map(Dimension::THREE, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(l.determinant() == 1 || l.determinant() == 2);
    }

    #[test]
    fn pointset_matches_btreeset(xs in proptest::collection::vec(0usize..81, 0..40),
                                 ys in proptest::collection::vec(0usize..81, 0..40)) {
        let (a, b) = (PointSet::from_indices(xs.clone()), PointSet::from_indices(ys.clone()));
        let (sa, sb): (BTreeSet<usize>, BTreeSet<usize>) = (xs.into_iter().collect(), ys.into_iter().collect());
        let idx = |s: PointSet| s.iter().map(Point::index).collect::<Vec<_>>();
        prop_assert_eq!(idx(a | b), sa.union(&sb).copied().collect::<Vec<_>>());
        prop_assert_eq!(idx(a & b), sa.intersection(&sb).copied().collect::<Vec<_>>());
        prop_assert_eq!(idx(a - b), sa.difference(&sb).copied().collect::<Vec<_>>());
        prop_assert_eq!(a.len(), sa.len());
    }

    #[test]
    fn is_cap_matches_triple_scan(xs in proptest::collection::vec(0usize..81, 0..12)) {
        let s = PointSet::from_indices(xs);
        let v: Vec<usize> = s.iter().map(Point::index).collect();
        let mut has_line = false;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                for k in j + 1..v.len() {
                    has_line |= collinear(4, v[i], v[j], v[k]);
                }
            }
        }
        prop_assert_eq!(is_cap(Dimension::FOUR, s), !has_line);
    }
}

#[test]
fn canonical_cap_has_no_line_by_triple_scan() {
    let v: Vec<usize> = canonical_cap().iter().map(Point::index).collect();
    assert_eq!(v.len(), 20);
    for i in 0..20 {
        for j in i + 1..20 {
            for k in j + 1..20 {
                assert!(!collinear(4, v[i], v[j], v[k]));
            }
        }
    }
    // every point pairs with its negative, so the anchor is the origin
    for &p in &v {
        let neg: Vec<usize> = coords(4, p).iter().map(|c| (3 - c) % 3).collect();
        let q = neg.iter().fold(0, |acc, c| acc * 3 + c);
        assert!(v.contains(&q));
    }
}
