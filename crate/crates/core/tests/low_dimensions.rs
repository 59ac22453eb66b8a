use capset_core::affine::{setwise_stabilizer, transporter};
use capset_core::caps::{
    anchor_of, cap_sum, completion_count, enumerate_maximal_caps, is_complete_cap, max_cap_size,
};
use capset_core::partition::low_dim_partitions;
use capset_core::search::find_complete_cap;
use capset_core::{hyperplane_profile, Ambient, Dimension, Point, StabilizerMethod};

fn is_line_by_coords(n: usize, a: usize, b: usize, c: usize) -> bool {
    let digits = |mut x: usize| {
        let mut d = vec![0; n];
        for slot in d.iter_mut() {
            *slot = x % 3;
            x /= 3;
        }
        d
    };
    let (x, y, z) = (digits(a), digits(b), digits(c));
    (0..n).all(|i| (x[i] + y[i] + z[i]) % 3 == 0)
}

#[test]
fn plane_counts_by_brute_force() {
    let mut lines = 0;
    for a in 0..9 {
        for b in a + 1..9 {
            for c in b + 1..9 {
                lines += is_line_by_coords(2, a, b, c) as usize;
            }
        }
    }
    assert_eq!(lines, 12);
    assert_eq!(Dimension::TWO.space().lines().len(), 12);

    let mut four_caps = 0;
    for mask in 0u32..512 {
        if mask.count_ones() != 4 {
            continue;
        }
        let pts: Vec<usize> = (0..9).filter(|i| mask >> i & 1 == 1).collect();
        let mut ok = true;
        for i in 0..4 {
            for j in i + 1..4 {
                for k in j + 1..4 {
                    ok &= !is_line_by_coords(2, pts[i], pts[j], pts[k]);
                }
            }
        }
        four_caps += ok as usize;
    }
    assert_eq!(four_caps, 54);
    assert_eq!(enumerate_maximal_caps(Dimension::TWO).len(), 54);
}

#[test]
fn plane_partitions() {
    let d2 = Dimension::TWO;
    for c in enumerate_maximal_caps(d2) {
        let dec = anchor_of(d2, c).unwrap();
        assert_eq!(dec.pairs.len(), 2);
        assert_eq!(completion_count(d2, c, dec.anchor).unwrap(), 2);
        let rest = d2.universe() - c - capset_core::PointSet::from_points([dec.anchor]);
        assert_eq!(anchor_of(d2, rest).unwrap().anchor, dec.anchor);
    }
    let low = low_dim_partitions(d2).unwrap();
    assert_eq!((low.maximal_caps, low.partitions, low.affine_orbits), (54, 27, 1));
}

#[test]
fn max_cap_sizes_up_to_three() {
    for (n, k) in [(1, 2), (2, 4), (3, 9)] {
        assert_eq!(max_cap_size(Dimension::new(n).unwrap()), k);
    }
}

#[test]
fn three_space_caps() {
    let d3 = Dimension::THREE;
    let caps = enumerate_maximal_caps(d3);
    // orbit-stabilizer: |Aff(3,3)| / |Stab| must equal the enumerated count
    let stab = setwise_stabilizer(d3, caps[0], Ambient::Affine, StabilizerMethod::BasisImage).unwrap();
    let aff_order = 27 * 26 * 24 * 18;
    assert_eq!(aff_order % stab.order(), 0);
    assert_eq!(caps.len(), aff_order / stab.order());

    let families = d3.space().hyperplane_families();
    assert_eq!(families.len(), 13);
    for &c in &caps {
        assert_eq!(cap_sum(d3, c), Point::ORIGIN);
        assert!(anchor_of(d3, c).is_err());
        for f in &families {
            let prof = hyperplane_profile(c, f);
            assert!(prof == [4, 4, 1] || prof == [3, 3, 3], "{prof:?}");
        }
        assert!(transporter(d3, caps[0], c, Ambient::Affine).unwrap().is_some());
    }
    for p in d3.universe() - caps[0] {
        assert_eq!(completion_count(d3, caps[0], p).unwrap(), 2);
    }
    let low = low_dim_partitions(d3).unwrap();
    assert_eq!(low.caps_in_unique_partition, caps.len());
    assert_eq!(low.partitions * 3, caps.len());
    assert_eq!(low.affine_orbits, 1);
}

#[test]
fn complete_eight_cap() {
    let c = find_complete_cap(Dimension::THREE, 8).unwrap();
    assert_eq!(c.len(), 8);
    assert!(is_complete_cap(Dimension::THREE, c).unwrap());
}
