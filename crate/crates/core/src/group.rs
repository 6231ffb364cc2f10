//! Finite abelian groups `Z/N1 x ... x Z/Nk`, their elements, and subgroups
//! generated by explicit element lists.
//!
//! Elements are addressed densely in mixed radix with the last coordinate
//! varying fastest; every function table in the crate uses this layout.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of elements a subgroup closure may produce.
pub const DEFAULT_SUBGROUP_CAP: usize = 1 << 20;

/// A finite abelian group given as a product of cyclic factors.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct GroupSpec {
    moduli: Vec<u64>,
    strides: Vec<u64>,
    order: u64,
}

impl GroupSpec {
    pub fn new(moduli: Vec<u64>) -> Result<Self> {
        if moduli.contains(&0) {
            return Err(Error::argument("every modulus must be at least 1"));
        }
        let mut strides = vec![1u64; moduli.len()];
        let mut order: u64 = 1;
        for i in (0..moduli.len()).rev() {
            strides[i] = order;
            order = order
                .checked_mul(moduli[i])
                .ok_or_else(|| Error::argument("group order overflows a 64-bit count"))?;
        }
        Ok(GroupSpec {
            moduli,
            strides,
            order,
        })
    }

    /// `Z/nZ`.
    pub fn cyclic(n: u64) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn rank(&self) -> usize {
        self.moduli.len()
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// Order as a `usize` for table allocation.
    pub fn len(&self) -> usize {
        self.order as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Single cyclic factor (or the trivial group written with one factor).
    pub fn is_cyclic(&self) -> bool {
        self.moduli.len() == 1
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement(vec![0; self.moduli.len()])
    }

    /// Builds an element from arbitrary integers, reducing each coordinate.
    pub fn element(&self, coords: &[i64]) -> Result<GroupElement> {
        self.check_len(coords.len())?;
        Ok(GroupElement(
            coords
                .iter()
                .zip(&self.moduli)
                .map(|(&c, &m)| c.rem_euclid(m as i64) as u64)
                .collect(),
        ))
    }

    /// Every element, in index order.
    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.len()).map(move |i| self.element_of(i))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.moduli.len() {
            return Err(Error::structural(format!(
                "element has {} coordinates, group has {} factors",
                len,
                self.moduli.len()
            )));
        }
        Ok(())
    }

    /// Verifies that `e` has the right shape and reduced residues.
    pub fn check(&self, e: &GroupElement) -> Result<()> {
        self.check_len(e.0.len())?;
        if e.0.iter().zip(&self.moduli).any(|(&r, &m)| r >= m) {
            return Err(Error::structural(format!("{e} is not reduced in {self}")));
        }
        Ok(())
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add_unchecked(a, b))
    }

    pub(crate) fn add_unchecked(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&b.0)
                .zip(&self.moduli)
                .map(|((&x, &y), &m)| ((x as u128 + y as u128) % m as u128) as u64)
                .collect(),
        )
    }

    pub fn neg(&self, a: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        Ok(self.neg_unchecked(a))
    }

    pub(crate) fn neg_unchecked(&self, a: &GroupElement) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&self.moduli)
                .map(|(&x, &m)| if x == 0 { 0 } else { m - x })
                .collect(),
        )
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add_unchecked(a, &self.neg_unchecked(b)))
    }

    /// `n * a` for a signed integer multiplier.
    pub fn scale(&self, a: &GroupElement, n: i64) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&self.moduli)
                .map(|(&x, &m)| {
                    let k = n.rem_euclid(m as i64) as u128;
                    ((x as u128 * k) % m as u128) as u64
                })
                .collect(),
        )
    }

    /// Mixed-radix index, last coordinate fastest.
    pub fn index_of(&self, e: &GroupElement) -> Result<usize> {
        self.check(e)?;
        Ok(self.index_unchecked(e))
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, e: &GroupElement) -> usize {
        e.0.iter()
            .zip(&self.strides)
            .map(|(&r, &s)| r * s)
            .sum::<u64>() as usize
    }

    pub fn element_of(&self, index: usize) -> GroupElement {
        let mut rest = index as u64 % self.order;
        GroupElement(
            self.strides
                .iter()
                .zip(&self.moduli)
                .map(|(&s, &m)| {
                    let r = rest / s;
                    rest -= r * s;
                    r % m
                })
                .collect(),
        )
    }

    /// Index of `x + k` for every `x`, in index order of `x`.
    ///
    /// A table `f` translated by `k` (so that `(T^k f)(x) = f(x - k)`) reads
    /// `f[map[x]]` with `map = translation_map(-k)`.
    pub fn translation_map(&self, k: &GroupElement) -> Vec<usize> {
        let n = self.len();
        if self.is_cyclic() {
            let m = self.moduli[0] as usize;
            let k = k.0[0] as usize;
            return (0..n).map(|x| (x + k) % m).collect();
        }
        // Per-coordinate contribution tables, summed in an odometer walk.
        let tables: Vec<Vec<usize>> = self
            .moduli
            .iter()
            .zip(&self.strides)
            .zip(&k.0)
            .map(|((&m, &s), &kc)| (0..m).map(|r| (((r + kc) % m) * s) as usize).collect())
            .collect();
        let rank = self.moduli.len();
        let mut digits = vec![0usize; rank];
        let mut out = Vec::with_capacity(n);
        let mut partial: Vec<usize> = vec![0; rank + 1];
        for i in 0..rank {
            partial[i + 1] = partial[i] + tables[i][0];
        }
        for _ in 0..n {
            out.push(partial[rank]);
            // advance odometer
            let mut pos = rank;
            while pos > 0 {
                pos -= 1;
                digits[pos] += 1;
                if (digits[pos] as u64) < self.moduli[pos] {
                    break;
                }
                digits[pos] = 0;
            }
            for i in pos..rank {
                partial[i + 1] = partial[i] + tables[i][digits[i]];
            }
        }
        out
    }

    /// Index of `a + b` given indices.
    #[inline]
    pub fn add_indices(&self, a: usize, b: usize) -> usize {
        if self.is_cyclic() {
            return (a + b) % self.order as usize;
        }
        let mut out = 0;
        for (&m, &s) in self.moduli.iter().zip(&self.strides) {
            let (m, s) = (m as usize, s as usize);
            out += ((a / s % m + b / s % m) % m) * s;
        }
        out
    }

    /// Index of `a - b` given indices.
    #[inline]
    pub fn sub_indices(&self, a: usize, b: usize) -> usize {
        if self.is_cyclic() {
            let n = self.order as usize;
            return (a + n - b) % n;
        }
        let mut out = 0;
        for (&m, &s) in self.moduli.iter().zip(&self.strides) {
            let (m, s) = (m as usize, s as usize);
            out += ((a / s % m + m - b / s % m) % m) * s;
        }
        out
    }

    /// Index of `-a` given an index.
    #[inline]
    pub fn neg_index(&self, a: usize) -> usize {
        self.sub_indices(0, a)
    }
}

impl TryFrom<Vec<u64>> for GroupSpec {
    type Error = Error;

    fn try_from(moduli: Vec<u64>) -> Result<Self> {
        GroupSpec::new(moduli)
    }
}

impl From<GroupSpec> for Vec<u64> {
    fn from(g: GroupSpec) -> Self {
        g.moduli
    }
}

impl fmt::Debug for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupSpec{:?}", self.moduli)
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.moduli.iter().map(|m| format!("Z/{m}")).collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" x "))
        }
    }
}

/// Element of a [`GroupSpec`] as a list of reduced residues.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(pub Vec<u64>);

impl GroupElement {
    pub fn residues(&self) -> &[u64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&r| r == 0)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// A subgroup given by generators, materialized as the sorted list of
/// element indices of its closure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgroup {
    group: GroupSpec,
    generators: Vec<GroupElement>,
    elements: Vec<usize>,
}

impl Subgroup {
    pub fn generate(group: &GroupSpec, generators: Vec<GroupElement>) -> Result<Self> {
        Self::generate_capped(group, generators, DEFAULT_SUBGROUP_CAP)
    }

    pub fn generate_capped(
        group: &GroupSpec,
        generators: Vec<GroupElement>,
        cap: usize,
    ) -> Result<Self> {
        let elements = closure_indices(group, &generators, cap)?;
        Ok(Subgroup {
            group: group.clone(),
            generators,
            elements,
        })
    }

    /// `{0}`.
    pub fn trivial(group: &GroupSpec) -> Self {
        Subgroup {
            group: group.clone(),
            generators: Vec::new(),
            elements: vec![0],
        }
    }

    /// The whole group, generated by the unit vectors.
    pub fn whole(group: &GroupSpec) -> Result<Self> {
        let gens = (0..group.rank())
            .map(|i| {
                let mut r = vec![0u64; group.rank()];
                r[i] = 1 % group.moduli()[i];
                GroupElement(r)
            })
            .collect();
        Self::generate(group, gens)
    }

    /// Subgroup generated by the generators of both operands.
    pub fn join(&self, other: &Subgroup) -> Result<Self> {
        self.join_capped(other, DEFAULT_SUBGROUP_CAP)
    }

    pub fn join_capped(&self, other: &Subgroup, cap: usize) -> Result<Self> {
        if self.group != other.group {
            return Err(Error::structural("subgroups of different groups"));
        }
        let mut gens = self.generators.clone();
        gens.extend(other.generators.iter().cloned());
        Subgroup::generate_capped(&self.group, gens, cap)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    /// Sorted element indices.
    pub fn indices(&self) -> &[usize] {
        &self.elements
    }

    pub fn elements(&self) -> Vec<GroupElement> {
        self.elements
            .iter()
            .map(|&i| self.group.element_of(i))
            .collect()
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.elements.binary_search(&index).is_ok()
    }

    pub fn index_in_group(&self) -> u64 {
        self.group.order() / self.elements.len() as u64
    }
}

fn closure_indices(group: &GroupSpec, generators: &[GroupElement], cap: usize) -> Result<Vec<usize>> {
    for g in generators {
        group.check(g)?;
    }
    let gen_idx: Vec<usize> = generators
        .iter()
        .map(|g| group.index_unchecked(g))
        .filter(|&i| i != 0)
        .collect();
    let mut seen: HashSet<usize> = HashSet::new();
    seen.insert(0);
    let mut frontier = vec![0usize];
    while let Some(x) = frontier.pop() {
        for &g in &gen_idx {
            let y = group.add_indices(x, g);
            if seen.insert(y) {
                if seen.len() > cap {
                    return Err(Error::resource(
                        "subgroup closure",
                        seen.len() as u128,
                        cap as u128,
                    ));
                }
                frontier.push(y);
            }
        }
    }
    // Finite order makes closure under addition closed under negation too.
    let mut out: Vec<usize> = seen.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

/// Closure of `generators` under addition and negation, including zero.
pub fn enumerate_subgroup(group: &GroupSpec, generators: &[GroupElement]) -> Result<Vec<GroupElement>> {
    let idx = closure_indices(group, generators, DEFAULT_SUBGROUP_CAP)?;
    Ok(idx.into_iter().map(|i| group.element_of(i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn el(g: &GroupSpec, c: &[i64]) -> GroupElement {
        g.element(c).unwrap()
    }

    #[test]
    fn modular_addition() {
        let g = GroupSpec::cyclic(5).unwrap();
        assert_eq!(g.add(&el(&g, &[3]), &el(&g, &[4])).unwrap(), el(&g, &[2]));
        let a = el(&g, &[3]);
        assert_eq!(g.add(&a, &g.zero()).unwrap(), a);

        let g2 = GroupSpec::new(vec![2, 2]).unwrap();
        assert_eq!(
            g2.add(&el(&g2, &[1, 1]), &el(&g2, &[1, 0])).unwrap(),
            el(&g2, &[0, 1])
        );
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let g = GroupSpec::new(vec![3, 4]).unwrap();
        let bad = GroupElement(vec![1]);
        assert!(matches!(g.add(&bad, &g.zero()), Err(Error::Structural(_))));
        assert!(matches!(g.index_of(&bad), Err(Error::Structural(_))));
        assert!(GroupSpec::new(vec![3, 0]).is_err());
    }

    #[test]
    fn subgroup_examples() {
        let g = GroupSpec::cyclic(6).unwrap();
        let h = enumerate_subgroup(&g, &[el(&g, &[2])]).unwrap();
        assert_eq!(h, vec![el(&g, &[0]), el(&g, &[2]), el(&g, &[4])]);
        assert_eq!(enumerate_subgroup(&g, &[]).unwrap(), vec![g.zero()]);

        let g = GroupSpec::new(vec![4, 4]).unwrap();
        let h = enumerate_subgroup(&g, &[el(&g, &[2, 0]), el(&g, &[0, 2])]).unwrap();
        // brute force: all a*(2,0)+b*(0,2)
        let mut brute: Vec<GroupElement> = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                let e = el(&g, &[2 * a, 2 * b]);
                if !brute.contains(&e) {
                    brute.push(e);
                }
            }
        }
        brute.sort();
        let mut hs = h.clone();
        hs.sort();
        assert_eq!(hs, brute);
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn subgroup_cap_is_a_resource_error() {
        let g = GroupSpec::cyclic(1000).unwrap();
        let err = Subgroup::generate_capped(&g, vec![el(&g, &[1])], 100).unwrap_err();
        assert!(err.is_resource());
    }

    #[test]
    fn subgroup_closed_and_divides_order() {
        let g = GroupSpec::new(vec![6, 4, 3]).unwrap();
        let gens = vec![el(&g, &[2, 1, 0]), el(&g, &[0, 2, 1])];
        let h = Subgroup::generate(&g, gens).unwrap();
        assert_eq!(g.order() % h.order() as u64, 0);
        for &a in h.indices() {
            assert!(h.contains_index(g.neg_index(a)));
            for &b in h.indices() {
                assert!(h.contains_index(g.add_indices(a, b)));
            }
        }
    }

    #[test]
    fn mixed_radix_index() {
        let g = GroupSpec::cyclic(5).unwrap();
        assert_eq!(g.index_of(&el(&g, &[3])).unwrap(), 3);
        let g = GroupSpec::new(vec![3, 4]).unwrap();
        assert_eq!(g.index_of(&el(&g, &[1, 2])).unwrap(), 6);
    }

    #[test]
    fn index_bijection_exhaustive() {
        for moduli in [vec![10_000], vec![10, 10, 10], vec![7, 3, 2, 5, 4], vec![1, 9]] {
            let g = GroupSpec::new(moduli).unwrap();
            for i in 0..g.len() {
                let e = g.element_of(i);
                g.check(&e).unwrap();
                assert_eq!(g.index_of(&e).unwrap(), i);
            }
        }
    }

    #[test]
    fn translation_map_matches_elementwise_addition() {
        let g = GroupSpec::new(vec![3, 4, 5]).unwrap();
        let k = el(&g, &[2, 3, 1]);
        let map = g.translation_map(&k);
        for (x, &y) in map.iter().enumerate() {
            let expect = g.index_of(&g.add(&g.element_of(x), &k).unwrap()).unwrap();
            assert_eq!(y, expect);
        }
    }

    proptest! {
        #[test]
        fn group_axioms(a in proptest::collection::vec(-50i64..50, 3),
                        b in proptest::collection::vec(-50i64..50, 3),
                        c in proptest::collection::vec(-50i64..50, 3)) {
            let g = GroupSpec::new(vec![6, 5, 8]).unwrap();
            let (a, b, c) = (el(&g, &a), el(&g, &b), el(&g, &c));
            let ab_c = g.add(&g.add(&a, &b).unwrap(), &c).unwrap();
            let a_bc = g.add(&a, &g.add(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            prop_assert_eq!(g.add(&a, &b).unwrap(), g.add(&b, &a).unwrap());
            prop_assert_eq!(g.neg(&g.neg(&a).unwrap()).unwrap(), a.clone());
            prop_assert!(g.add(&a, &g.neg(&a).unwrap()).unwrap().is_zero());
        }
    }
}
