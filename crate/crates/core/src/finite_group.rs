//! Small finite groups as explicit Cayley tables: reference constructions,
//! isomorphism invariants and brute-force isomorphism search.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use crate::affine::{frame_indices, AffineMap, MapKey, MatrixGroup};
use crate::error::{Error, Result};

/// Largest group a Cayley table is built for.
pub const MAX_TABLE_ORDER: usize = 4096;

/// A finite group on elements `0..order`, with 0 the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    name: String,
    order: usize,
    table: Vec<u16>,
    inverse: Vec<u16>,
}

impl FiniteGroup {
    /// Builds a group from a multiplication function on `0..order`, checking
    /// the group axioms.
    pub fn from_fn(name: impl Into<String>, order: usize, mul: impl Fn(usize, usize) -> usize) -> Result<Self> {
        if order == 0 || order > MAX_TABLE_ORDER {
            return Err(Error::Capacity {
                what: "Cayley table",
                needed: order as u64,
                limit: MAX_TABLE_ORDER as u64,
            });
        }
        let mut table = vec![0u16; order * order];
        for a in 0..order {
            for b in 0..order {
                let c = mul(a, b);
                if c >= order {
                    return Err(Error::InvariantViolation("product out of range".into()));
                }
                table[a * order + b] = c as u16;
            }
        }
        let group = Self::from_table(name.into(), order, table)?;
        group.check_associative()?;
        Ok(group)
    }

    fn from_table(name: String, order: usize, table: Vec<u16>) -> Result<Self> {
        for a in 0..order {
            if table[a] as usize != a || table[a * order] as usize != a {
                return Err(Error::InvariantViolation("element 0 is not the identity".into()));
            }
        }
        let mut inverse = vec![0u16; order];
        for a in 0..order {
            let row = &table[a * order..(a + 1) * order];
            let mut seen = vec![false; order];
            for &c in row {
                if std::mem::replace(&mut seen[c as usize], true) {
                    return Err(Error::InvariantViolation("table is not a Latin square".into()));
                }
            }
            inverse[a] = row.iter().position(|&c| c == 0).expect("row is a permutation") as u16;
        }
        Ok(FiniteGroup {
            name,
            order,
            table,
            inverse,
        })
    }

    fn check_associative(&self) -> Result<()> {
        for a in 0..self.order {
            for b in 0..self.order {
                let ab = self.mul(a, b);
                for c in 0..self.order {
                    if self.mul(ab, c) != self.mul(a, self.mul(b, c)) {
                        return Err(Error::InvariantViolation("not associative".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// The Cayley table of an explicit matrix group; element `i` is
    /// `table_elements(group)[i]`.
    pub fn from_matrix_group(name: impl Into<String>, group: &MatrixGroup) -> Result<Self> {
        let order = group.order();
        if order > MAX_TABLE_ORDER {
            return Err(Error::Capacity {
                what: "Cayley table",
                needed: order as u64,
                limit: MAX_TABLE_ORDER as u64,
            });
        }
        let elements = table_elements(group);
        let index: HashMap<MapKey, usize> = elements.iter().enumerate().map(|(i, g)| (g.key(), i)).collect();
        let perms: Vec<Vec<u8>> = elements.iter().map(AffineMap::permutation).collect();
        let frame = frame_indices(group.dim());
        let mut images = vec![0u8; frame.len()];
        let mut table = vec![0u16; order * order];
        for (a, pa) in perms.iter().enumerate() {
            for (b, pb) in perms.iter().enumerate() {
                for (slot, &f) in images.iter_mut().zip(&frame) {
                    *slot = pa[pb[f] as usize];
                }
                let c = *index
                    .get(&MapKey::from_images(&images))
                    .ok_or_else(|| Error::InvariantViolation("matrix group is not closed".into()))?;
                table[a * order + b] = c as u16;
            }
        }
        Self::from_table(name.into(), order, table)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b] as usize
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a] as usize
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..a).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn center(&self) -> Vec<usize> {
        (0..self.order)
            .filter(|&a| (0..self.order).all(|b| self.mul(a, b) == self.mul(b, a)))
            .collect()
    }

    /// The subgroup generated by `gens`, as a sorted element list.
    pub fn generate(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        let mut out = vec![0usize];
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(x, g);
                if !seen[y] {
                    seen[y] = true;
                    out.push(y);
                    queue.push_back(y);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn derived_subgroup(&self) -> Vec<usize> {
        let mut commutators = Vec::new();
        for a in 0..self.order {
            for b in 0..self.order {
                let c = self.mul(self.mul(self.inv(a), self.inv(b)), self.mul(a, b));
                commutators.push(c);
            }
        }
        commutators.sort_unstable();
        commutators.dedup();
        self.generate(&commutators)
    }

    /// Smallest normal subgroup containing `a`.
    pub fn normal_closure(&self, a: usize) -> Vec<usize> {
        let mut class: Vec<usize> = (0..self.order)
            .map(|g| self.mul(self.mul(g, a), self.inv(g)))
            .collect();
        class.sort_unstable();
        class.dedup();
        self.generate(&class)
    }

    /// Simple: every nonidentity element has the whole group as its normal
    /// closure.
    pub fn is_simple(&self) -> bool {
        self.order > 1 && (1..self.order).all(|a| self.normal_closure(a).len() == self.order)
    }

    pub fn order_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for a in 0..self.order {
            *hist.entry(self.element_order(a)).or_insert(0) += 1;
        }
        hist
    }

    /// Number of cyclic subgroups of order `k`.
    pub fn cyclic_subgroup_count(&self, k: usize) -> usize {
        let generators = (0..self.order).filter(|&a| self.element_order(a) == k).count();
        generators / euler_phi(k)
    }

    pub fn fingerprint(&self) -> GroupFingerprint {
        GroupFingerprint {
            order: self.order,
            abelian: self.is_abelian(),
            center_order: self.center().len(),
            element_order_histogram: self.order_histogram(),
            derived_subgroup_order: self.derived_subgroup().len(),
            determinant_split: None,
        }
    }

    /// A generating set chosen greedily, preferring elements of large order.
    pub fn generating_set(&self) -> Vec<usize> {
        let mut candidates: Vec<usize> = (1..self.order).collect();
        candidates.sort_by_key(|&a| (std::cmp::Reverse(self.element_order(a)), a));
        let mut gens = Vec::new();
        let mut span = vec![0usize];
        for a in candidates {
            if span.len() == self.order {
                break;
            }
            if span.binary_search(&a).is_ok() {
                continue;
            }
            gens.push(a);
            span = self.generate(&gens);
        }
        gens
    }
}

/// Elements of `group` in Cayley-table order: the identity, then the rest
/// in the group's own order.
pub fn table_elements(group: &MatrixGroup) -> Vec<AffineMap> {
    let id = AffineMap::identity(group.dim());
    std::iter::once(id)
        .chain(group.iter().copied().filter(|g| *g != id))
        .collect()
}

fn euler_phi(n: usize) -> usize {
    (1..=n).filter(|&k| gcd(k, n) == 1).count()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Isomorphism invariants of a finite group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupFingerprint {
    pub order: usize,
    pub abelian: bool,
    pub center_order: usize,
    pub element_order_histogram: BTreeMap<usize, usize>,
    pub derived_subgroup_order: usize,
    /// Number of elements of determinant 1 and 2, for matrix groups.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub determinant_split: Option<[usize; 2]>,
}

impl GroupFingerprint {
    /// Equality of the abstract invariants, ignoring determinants.
    pub fn same_abstract_invariants(&self, other: &GroupFingerprint) -> bool {
        self.order == other.order
            && self.abelian == other.abelian
            && self.center_order == other.center_order
            && self.element_order_histogram == other.element_order_histogram
            && self.derived_subgroup_order == other.derived_subgroup_order
    }
}

pub fn matrix_group_fingerprint(group: &MatrixGroup) -> Result<GroupFingerprint> {
    let table = FiniteGroup::from_matrix_group("", group)?;
    let mut fp = table.fingerprint();
    fp.determinant_split = Some(group.determinant_split());
    Ok(fp)
}

/// The cyclic group Z_n.
pub fn cyclic(n: usize) -> FiniteGroup {
    FiniteGroup::from_fn(format!("Z{n}"), n, |a, b| (a + b) % n).expect("valid group")
}

pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup) -> FiniteGroup {
    let nb = b.order();
    FiniteGroup::from_fn(format!("{}x{}", a.name(), b.name()), a.order() * nb, |x, y| {
        a.mul(x / nb, y / nb) * nb + b.mul(x % nb, y % nb)
    })
    .expect("valid group")
}

/// `N ⋊ Z_k`, where the generator of Z_k acts on N by the automorphism
/// `phi` (a permutation of N's elements). Element `(n, i)` is `n·t^i`,
/// stored as `n * k + i`, with `t n t^-1 = phi(n)`.
pub fn semidirect_product(name: impl Into<String>, n: &FiniteGroup, phi: &[usize], k: usize) -> Result<FiniteGroup> {
    let size = n.order();
    // powers[i] = phi^i as a table
    let mut powers = vec![(0..size).collect::<Vec<usize>>()];
    for i in 1..=k {
        let prev = &powers[i - 1];
        powers.push((0..size).map(|x| phi[prev[x]]).collect());
    }
    if powers[k] != powers[0] {
        return Err(Error::Precondition("automorphism order does not divide k".into()));
    }
    for a in 0..size {
        for b in 0..size {
            if phi[n.mul(a, b)] != n.mul(phi[a], phi[b]) {
                return Err(Error::Precondition("map is not a homomorphism".into()));
            }
        }
    }
    // (a t^i)(b t^j) = a (t^i b t^-i) t^(i+j) = a phi^i(b) t^(i+j)
    FiniteGroup::from_fn(name, size * k, |x, y| {
        let (a, i) = (x / k, x % k);
        let (b, j) = (y / k, y % k);
        n.mul(a, powers[i][b]) * k + (i + j) % k
    })
}

/// `Z_m ⋊_r Z_k`: the generator of Z_k acts by `x ↦ r·x`.
pub fn metacyclic(m: usize, k: usize, r: usize) -> Result<FiniteGroup> {
    let phi: Vec<usize> = (0..m).map(|x| x * r % m).collect();
    semidirect_product(format!("Z{m}:{r}Z{k}"), &cyclic(m), &phi, k)
}

/// All automorphisms of `n` whose square is the identity, described by the
/// images of the given generators. Brute force over generator images.
pub fn involutory_automorphisms(n: &FiniteGroup, gens: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let orders: Vec<usize> = gens.iter().map(|&g| n.element_order(g)).collect();
    let mut images = vec![0usize; gens.len()];
    fn rec(
        n: &FiniteGroup,
        gens: &[usize],
        orders: &[usize],
        images: &mut Vec<usize>,
        depth: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if depth == gens.len() {
            if let Some(phi) = extend_to_isomorphism(n, gens, n, images) {
                if (0..n.order()).all(|x| phi[phi[x]] == x) {
                    out.push(phi);
                }
            }
            return;
        }
        for cand in 0..n.order() {
            if n.element_order(cand) == orders[depth] {
                images[depth] = cand;
                rec(n, gens, orders, images, depth + 1, out);
            }
        }
    }
    rec(n, gens, &orders, &mut images, 0, &mut out);
    out
}

/// Extends `gens[i] ↦ images[i]` along the Cayley graph of `g`. Returns
/// the element map if it is a well-defined bijective homomorphism.
pub fn extend_to_isomorphism(g: &FiniteGroup, gens: &[usize], h: &FiniteGroup, images: &[usize]) -> Option<Vec<usize>> {
    if g.order() != h.order() {
        return None;
    }
    const UNSET: usize = usize::MAX;
    let mut map = vec![UNSET; g.order()];
    map[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        for (&s, &t) in gens.iter().zip(images) {
            let y = g.mul(x, s);
            let fy = h.mul(map[x], t);
            if map[y] == UNSET {
                map[y] = fy;
                queue.push_back(y);
            } else if map[y] != fy {
                return None;
            }
        }
    }
    if map.contains(&UNSET) {
        return None;
    }
    let mut hit = vec![false; h.order()];
    for &y in &map {
        if std::mem::replace(&mut hit[y], true) {
            return None;
        }
    }
    Some(map)
}

/// An isomorphism `g → h` given by generator images and verified on the
/// full multiplication tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IsomorphismWitness {
    pub source: String,
    pub target: String,
    pub generators: Vec<usize>,
    pub images: Vec<usize>,
}

/// Searches for an isomorphism by trying every assignment of a generating
/// tuple of `g` to elements of `h` with matching orders.
pub fn find_isomorphism(g: &FiniteGroup, h: &FiniteGroup) -> Option<IsomorphismWitness> {
    if g.order() != h.order() || !g.fingerprint().same_abstract_invariants(&h.fingerprint()) {
        return None;
    }
    let gens = g.generating_set();
    let orders: Vec<usize> = gens.iter().map(|&x| g.element_order(x)).collect();
    let by_order: Vec<Vec<usize>> = orders
        .iter()
        .map(|&k| (0..h.order()).filter(|&y| h.element_order(y) == k).collect())
        .collect();
    let mut images = vec![0usize; gens.len()];
    fn rec(
        g: &FiniteGroup,
        h: &FiniteGroup,
        gens: &[usize],
        by_order: &[Vec<usize>],
        images: &mut Vec<usize>,
        depth: usize,
    ) -> Option<Vec<usize>> {
        if depth == gens.len() {
            return extend_to_isomorphism(g, gens, h, images);
        }
        for &cand in &by_order[depth] {
            images[depth] = cand;
            if let Some(map) = rec(g, h, gens, by_order, images, depth + 1) {
                return Some(map);
            }
        }
        None
    }
    let map = rec(g, h, &gens, &by_order, &mut images, 0)?;
    // Full-table verification.
    for a in 0..g.order() {
        for b in 0..g.order() {
            if map[g.mul(a, b)] != h.mul(map[a], map[b]) {
                return None;
            }
        }
    }
    Some(IsomorphismWitness {
        source: g.name().to_string(),
        target: h.name().to_string(),
        images: gens.iter().map(|&x| map[x]).collect(),
        generators: gens,
    })
}

/// The nonabelian groups `(Z8 × Z2) ⋊ Z2` with an involutory automorphism,
/// one per distinct action (as a permutation of the 16 elements).
pub fn z8z2_by_z2_extensions() -> Vec<(String, FiniteGroup)> {
    let n = direct_product(&cyclic(8), &cyclic(2));
    // In Z8 × Z2 stored as a*2 + b, (1,0) is 2 and (0,1) is 1.
    let gens = [2usize, 1];
    let mut out = Vec::new();
    for phi in involutory_automorphisms(&n, &gens) {
        if phi.iter().enumerate().all(|(x, &y)| x == y) {
            continue;
        }
        let describe = |e: usize| format!("({},{})", e / 2, e % 2);
        let label = format!(
            "(Z8xZ2):Z2 [a->{}, b->{}]",
            describe(phi[gens[0]]),
            describe(phi[gens[1]])
        );
        let group = semidirect_product(label.clone(), &n, &phi, 2).expect("involution");
        out.push((label, group));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_groups() {
        let z4z2 = direct_product(&cyclic(4), &cyclic(2));
        assert_eq!(
            z4z2.order_histogram(),
            BTreeMap::from([(1, 1), (2, 3), (4, 4)])
        );
        assert!(z4z2.is_abelian());
        let d10 = metacyclic(5, 2, 4).unwrap();
        assert!(!d10.is_abelian());
        assert_eq!(d10.center().len(), 1);
        assert!(metacyclic(5, 2, 2).is_err(), "2 has order 4 mod 5");
        let trivial = cyclic(1);
        let fp = trivial.fingerprint();
        assert_eq!((fp.order, fp.abelian, fp.center_order), (1, true, 1));
    }

    #[test]
    fn isomorphism_search() {
        let z6 = cyclic(6);
        let z2z3 = direct_product(&cyclic(2), &cyclic(3));
        let w = find_isomorphism(&z6, &z2z3).expect("Z6 = Z2 x Z3");
        assert_eq!(w.generators.len(), w.images.len());
        assert!(find_isomorphism(&direct_product(&cyclic(4), &cyclic(2)), &cyclic(8)).is_none());
        let s3 = metacyclic(3, 2, 2).unwrap();
        assert!(find_isomorphism(&s3, &z6).is_none());
        // Dihedral group of order 8 vs quaternion-free Z4 x Z2.
        let d8 = metacyclic(4, 2, 3).unwrap();
        assert!(find_isomorphism(&d8, &direct_product(&cyclic(4), &cyclic(2))).is_none());
    }

    #[test]
    fn simplicity() {
        assert!(cyclic(5).is_simple());
        assert!(!cyclic(6).is_simple());
        assert!(!metacyclic(3, 2, 2).unwrap().is_simple());
        // A5 as even permutations of 5 points.
        let perms = even_permutations(5);
        let index: HashMap<Vec<usize>, usize> = perms.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let a5 = FiniteGroup::from_fn("A5", perms.len(), |a, b| {
            let c: Vec<usize> = (0..5).map(|i| perms[a][perms[b][i]]).collect();
            index[&c]
        })
        .unwrap();
        assert_eq!(a5.order(), 60);
        assert!(a5.is_simple());
        assert_eq!(a5.derived_subgroup().len(), 60);
    }

    fn even_permutations(n: usize) -> Vec<Vec<usize>> {
        fn permute(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
            if prefix.len() == n {
                out.push(prefix.clone());
                return;
            }
            for i in 0..n {
                if !prefix.contains(&i) {
                    prefix.push(i);
                    permute(prefix, n, out);
                    prefix.pop();
                }
            }
        }
        let mut all = Vec::new();
        permute(&mut Vec::new(), n, &mut all);
        all.retain(|p| {
            let inversions = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count();
            inversions % 2 == 0
        });
        all
    }

    #[test]
    fn semidirect_extensions_of_z8z2() {
        let ext = z8z2_by_z2_extensions();
        assert!(!ext.is_empty());
        for (_, g) in &ext {
            assert_eq!(g.order(), 32);
        }
    }

    #[test]
    fn cyclic_subgroups() {
        let z20 = cyclic(20);
        assert_eq!(z20.cyclic_subgroup_count(20), 1);
        assert_eq!(z20.cyclic_subgroup_count(5), 1);
        let z5z5 = direct_product(&cyclic(5), &cyclic(5));
        assert_eq!(z5z5.cyclic_subgroup_count(5), 6);
    }
}
