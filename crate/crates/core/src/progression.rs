//! Finite multisets, symmetric coset progressions and their index spaces.
//!
//! Averages over a progression are always taken over its index space
//! `H x prod {-floor(N_i), ..., floor(N_i)}`, so sums `n_1 v_1 + ... + n_r v_r`
//! that collide are counted with multiplicity. Each subgroup element
//! carries multiplicity one.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec, Subgroup};

/// Default cap on the number of tuples an index space may enumerate.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// Slack added before flooring a real bound, so that products such as
/// `0.29 * 100` still floor to 29.
const FLOOR_SLACK: f64 = 1e-9;

pub(crate) fn floor_bound(b: f64) -> i64 {
    (b + FLOOR_SLACK).floor() as i64
}

/// A finite non-empty multiset of group elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multiset {
    group: GroupSpec,
    entries: BTreeMap<usize, u64>,
    total: u64,
}

/// One line of the JSON multiset dump.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultisetEntry {
    pub element: GroupElement,
    pub mult: u64,
}

impl Multiset {
    /// Builds a multiset from `(element, multiplicity)` pairs; repeated
    /// elements accumulate.
    pub fn new<I>(group: &GroupSpec, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (GroupElement, u64)>,
    {
        let mut map = BTreeMap::new();
        let mut total: u64 = 0;
        for (e, m) in entries {
            group.check(&e)?;
            if m == 0 {
                return Err(Error::argument("multiplicities must be at least 1"));
            }
            total = total
                .checked_add(m)
                .ok_or_else(|| Error::resource("multiset total", u128::MAX, u64::MAX as u128))?;
            *map.entry(group.index_unchecked(&e)).or_insert(0) += m;
        }
        if total == 0 {
            return Err(Error::argument("multisets must be non-empty"));
        }
        Ok(Multiset {
            group: group.clone(),
            entries: map,
            total,
        })
    }

    /// Each listed element with multiplicity one per occurrence.
    pub fn from_elements(group: &GroupSpec, elements: &[GroupElement]) -> Result<Self> {
        Self::new(group, elements.iter().cloned().map(|e| (e, 1)))
    }

    pub(crate) fn from_index_counts(group: &GroupSpec, entries: BTreeMap<usize, u64>) -> Self {
        let total = entries.values().sum();
        Multiset {
            group: group.clone(),
            entries,
            total,
        }
    }

    /// `{0}`.
    pub fn zero(group: &GroupSpec) -> Self {
        Self::from_index_counts(group, BTreeMap::from([(0, 1)]))
    }

    /// Every element of the group once.
    pub fn whole(group: &GroupSpec) -> Self {
        Self::from_index_counts(group, (0..group.len()).map(|i| (i, 1)).collect())
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    /// Cardinality counting multiplicity.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct elements.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn multiplicity(&self, e: &GroupElement) -> u64 {
        self.group
            .index_of(e)
            .ok()
            .and_then(|i| self.entries.get(&i).copied())
            .unwrap_or(0)
    }

    /// `(index, multiplicity)` in index order.
    pub fn index_entries(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.entries.iter().map(|(&i, &m)| (i, m))
    }

    pub fn entries(&self) -> Vec<MultisetEntry> {
        self.entries
            .iter()
            .map(|(&i, &m)| MultisetEntry {
                element: self.group.element_of(i),
                mult: m,
            })
            .collect()
    }

    /// `A + B` with multiplicity: `mult(x) = sum_{u+v=x} mult_A(u) mult_B(v)`.
    pub fn sumset(&self, other: &Multiset) -> Result<Multiset> {
        self.combine(other, false)
    }

    /// `A - B` with multiplicity.
    pub fn difference(&self, other: &Multiset) -> Result<Multiset> {
        self.combine(other, true)
    }

    fn combine(&self, other: &Multiset, subtract: bool) -> Result<Multiset> {
        if self.group != other.group {
            return Err(Error::structural("multisets live in different groups"));
        }
        let total = self.total.checked_mul(other.total).ok_or_else(|| {
            Error::resource(
                "multiset sumset total",
                self.total as u128 * other.total as u128,
                u64::MAX as u128,
            )
        })?;
        let mut out: BTreeMap<usize, u64> = BTreeMap::new();
        for (&a, &ma) in &self.entries {
            for (&b, &mb) in &other.entries {
                let x = if subtract {
                    self.group.sub_indices(a, b)
                } else {
                    self.group.add_indices(a, b)
                };
                *out.entry(x).or_insert(0) += ma * mb;
            }
        }
        let m = Multiset::from_index_counts(&self.group, out);
        debug_assert_eq!(m.total, total);
        Ok(m)
    }

    /// `E_{a in A} f(a)`, counting multiplicity.
    pub fn average<F: Fn(&GroupElement) -> f64>(&self, f: F) -> f64 {
        let s: f64 = self
            .entries
            .iter()
            .map(|(&i, &m)| m as f64 * f(&self.group.element_of(i)))
            .sum();
        s / self.total as f64
    }

    pub fn sampler(&self) -> MultisetSampler {
        let mut acc = 0u64;
        let mut cumulative = Vec::with_capacity(self.entries.len());
        let mut indices = Vec::with_capacity(self.entries.len());
        for (&i, &m) in &self.entries {
            acc += m;
            cumulative.push(acc);
            indices.push(i);
        }
        MultisetSampler {
            cumulative,
            indices,
        }
    }
}

/// Draws elements with probability proportional to multiplicity.
#[derive(Clone, Debug)]
pub struct MultisetSampler {
    cumulative: Vec<u64>,
    indices: Vec<usize>,
}

impl MultisetSampler {
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty multiset");
        let r = rng.gen_range(0..total);
        let pos = self.cumulative.partition_point(|&c| c <= r);
        self.indices[pos]
    }
}

/// A symmetric coset progression `H + {n_1 v_1 + ... + n_r v_r : |n_i| <= N_i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CosetProgression {
    subgroup: Subgroup,
    generators: Vec<GroupElement>,
    bounds: Vec<f64>,
}

impl CosetProgression {
    pub fn new(subgroup: Subgroup, generators: Vec<GroupElement>, bounds: Vec<f64>) -> Result<Self> {
        if generators.len() != bounds.len() {
            return Err(Error::argument(format!(
                "{} generators but {} bounds",
                generators.len(),
                bounds.len()
            )));
        }
        if bounds.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::argument("progression bounds must be finite and non-negative"));
        }
        for v in &generators {
            subgroup.group().check(v)?;
        }
        Ok(CosetProgression {
            subgroup,
            generators,
            bounds,
        })
    }

    /// Rank-one progression `{n v : |n| <= bound}` with trivial subgroup.
    pub fn arithmetic(group: &GroupSpec, v: GroupElement, bound: f64) -> Result<Self> {
        Self::new(Subgroup::trivial(group), vec![v], vec![bound])
    }

    /// The subgroup itself as a rank-zero progression.
    pub fn from_subgroup(subgroup: Subgroup) -> Self {
        CosetProgression {
            subgroup,
            generators: Vec::new(),
            bounds: Vec::new(),
        }
    }

    /// `{0}` as a rank-zero progression.
    pub fn trivial(group: &GroupSpec) -> Self {
        Self::from_subgroup(Subgroup::trivial(group))
    }

    pub fn group(&self) -> &GroupSpec {
        self.subgroup.group()
    }

    pub fn subgroup(&self) -> &Subgroup {
        &self.subgroup
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// `eps Q`: same subgroup and generators, bounds scaled by `eps`.
    pub fn dilate(&self, eps: f64) -> Result<Self> {
        if eps.is_nan() || eps <= 0.0 || !eps.is_finite() {
            return Err(Error::argument(format!("dilation factor must be positive, got {eps}")));
        }
        Ok(CosetProgression {
            subgroup: self.subgroup.clone(),
            generators: self.generators.clone(),
            bounds: self.bounds.iter().map(|b| b * eps).collect(),
        })
    }

    /// `Q1 + Q2`: joined subgroup, concatenated generators and bounds.
    pub fn sum(&self, other: &CosetProgression) -> Result<Self> {
        if self.group() != other.group() {
            return Err(Error::structural("progressions live in different groups"));
        }
        let subgroup = self.subgroup.join(&other.subgroup)?;
        let mut generators = self.generators.clone();
        generators.extend(other.generators.iter().cloned());
        let mut bounds = self.bounds.clone();
        bounds.extend(other.bounds.iter().copied());
        Ok(CosetProgression {
            subgroup,
            generators,
            bounds,
        })
    }

    /// `n . Q = {n a : a in Q}`, realised by scaling the generators and
    /// the subgroup.
    pub fn scaled(&self, n: i64) -> Result<Self> {
        let g = self.group();
        let sub_gens = self.subgroup.generators().iter().map(|h| g.scale(h, n)).collect();
        let subgroup = Subgroup::generate(g, sub_gens)?;
        Ok(CosetProgression {
            subgroup,
            generators: self.generators.iter().map(|v| g.scale(v, n)).collect(),
            bounds: self.bounds.clone(),
        })
    }

    pub fn index_space(&self) -> IndexSpace<'_> {
        IndexSpace::new(self)
    }

    /// The progression as an explicit multiset.
    pub fn to_multiset(&self) -> Result<Multiset> {
        self.index_space().histogram(DEFAULT_ENUMERATION_CAP)
    }
}

/// The tuple domain `H x prod {-floor(N_i), ..., floor(N_i)}` of a progression.
#[derive(Clone, Debug)]
pub struct IndexSpace<'a> {
    progression: &'a CosetProgression,
    ranges: Vec<i64>,
}

impl<'a> IndexSpace<'a> {
    fn new(progression: &'a CosetProgression) -> Self {
        IndexSpace {
            progression,
            ranges: progression.bounds.iter().map(|&b| floor_bound(b)).collect(),
        }
    }

    /// `floor(N_i)` for each generator.
    pub fn ranges(&self) -> &[i64] {
        &self.ranges
    }

    pub fn size(&self) -> u128 {
        self.ranges
            .iter()
            .fold(self.progression.subgroup.order() as u128, |acc, &r| {
                acc.saturating_mul(2 * r as u128 + 1)
            })
    }

    /// `h + sum n_i v_i` as an index.
    pub fn evaluate(&self, h_index: usize, coeffs: &[i64]) -> usize {
        let g = self.progression.group();
        let mut acc = h_index;
        for (v, &n) in self.progression.generators.iter().zip(coeffs) {
            acc = g.add_indices(acc, g.index_unchecked(&g.scale(v, n)));
        }
        acc
    }

    /// Calls `visit(index)` once per tuple.
    pub fn for_each(&self, cap: u64, mut visit: impl FnMut(usize)) -> Result<()> {
        let size = self.size();
        if size > cap as u128 {
            return Err(Error::resource("index space enumeration", size, cap as u128));
        }
        let g = self.progression.group();
        // offsets[i] = index of n v_i for n in -R_i..=R_i
        let offsets: Vec<Vec<usize>> = self
            .progression
            .generators
            .iter()
            .zip(&self.ranges)
            .map(|(v, &r)| (-r..=r).map(|n| g.index_unchecked(&g.scale(v, n))).collect())
            .collect();
        let mut partial = Vec::with_capacity(offsets.len() + 1);
        for &h in self.progression.subgroup.indices() {
            partial.clear();
            partial.push(h);
            walk(g, &offsets, &mut partial, &mut visit);
        }
        Ok(())
    }

    /// Multiplicity histogram of the enumerated tuples.
    pub fn histogram(&self, cap: u64) -> Result<Multiset> {
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        self.for_each(cap, |x| *counts.entry(x).or_insert(0) += 1)?;
        Ok(Multiset::from_index_counts(self.progression.group(), counts))
    }

    /// Uniform tuple draw, returned as the evaluated element index.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let h = self.progression.subgroup.indices();
        let h_index = h[rng.gen_range(0..h.len())];
        let coeffs: Vec<i64> = self.ranges.iter().map(|&r| rng.gen_range(-r..=r)).collect();
        self.evaluate(h_index, &coeffs)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        self.progression.group().element_of(self.sample_index(rng))
    }

    /// `Q - Q` as a multiset, from triangular coefficient weights rather
    /// than pairwise enumeration.
    pub fn difference_multiset(&self, cap: u64) -> Result<Multiset> {
        let g = self.progression.group();
        let h_order = self.progression.subgroup.order() as u64;
        let size = self
            .ranges
            .iter()
            .fold(h_order as u128, |acc, &r| acc.saturating_mul(4 * r as u128 + 1));
        if size > cap as u128 {
            return Err(Error::resource("difference multiset enumeration", size, cap as u128));
        }
        // coefficient difference d in [-2R, 2R] occurs (2R + 1 - |d|) times
        let tables: Vec<Vec<(usize, u64)>> = self
            .progression
            .generators
            .iter()
            .zip(&self.ranges)
            .map(|(v, &r)| {
                (-2 * r..=2 * r)
                    .map(|d| {
                        (
                            g.index_unchecked(&g.scale(v, d)),
                            (2 * r + 1 - d.abs()) as u64,
                        )
                    })
                    .collect()
            })
            .collect();
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for &h in self.progression.subgroup.indices() {
            weighted_walk(g, &tables, 0, h, h_order, &mut counts);
        }
        Ok(Multiset::from_index_counts(g, counts))
    }
}

fn walk(g: &GroupSpec, offsets: &[Vec<usize>], partial: &mut Vec<usize>, visit: &mut impl FnMut(usize)) {
    let depth = partial.len() - 1;
    let base = *partial.last().unwrap();
    if depth == offsets.len() {
        visit(base);
        return;
    }
    for &o in &offsets[depth] {
        partial.push(g.add_indices(base, o));
        walk(g, offsets, partial, visit);
        partial.pop();
    }
}

fn weighted_walk(
    g: &GroupSpec,
    tables: &[Vec<(usize, u64)>],
    depth: usize,
    base: usize,
    weight: u64,
    counts: &mut BTreeMap<usize, u64>,
) {
    if depth == tables.len() {
        *counts.entry(base).or_insert(0) += weight;
        return;
    }
    for &(o, w) in &tables[depth] {
        weighted_walk(g, tables, depth + 1, g.add_indices(base, o), weight * w, counts);
    }
}

/// A shift family for the norms: either an explicit multiset or a
/// progression averaged over its index space.
#[derive(Clone, Debug)]
pub enum ShiftSet {
    Multiset(Multiset),
    Progression(CosetProgression),
}

impl From<Multiset> for ShiftSet {
    fn from(m: Multiset) -> Self {
        ShiftSet::Multiset(m)
    }
}

impl From<CosetProgression> for ShiftSet {
    fn from(q: CosetProgression) -> Self {
        ShiftSet::Progression(q)
    }
}

impl ShiftSet {
    pub fn group(&self) -> &GroupSpec {
        match self {
            ShiftSet::Multiset(m) => m.group(),
            ShiftSet::Progression(q) => q.group(),
        }
    }

    /// Cardinality counting multiplicity.
    pub fn total(&self) -> u128 {
        match self {
            ShiftSet::Multiset(m) => m.total() as u128,
            ShiftSet::Progression(q) => q.index_space().size(),
        }
    }

    pub fn to_multiset(&self) -> Result<Multiset> {
        match self {
            ShiftSet::Multiset(m) => Ok(m.clone()),
            ShiftSet::Progression(q) => q.to_multiset(),
        }
    }

    /// `Q - Q` with multiplicity.
    pub fn difference_multiset(&self, cap: u64) -> Result<Multiset> {
        match self {
            ShiftSet::Multiset(m) => {
                let pairs = (m.support_len() as u128).pow(2);
                if pairs > cap as u128 {
                    return Err(Error::resource("difference multiset enumeration", pairs, cap as u128));
                }
                m.difference(m)
            }
            ShiftSet::Progression(q) => q.index_space().difference_multiset(cap),
        }
    }

    /// Number of distinct elements of `Q - Q` (an upper bound when the
    /// exact count would need enumeration).
    pub fn difference_support_bound(&self) -> u128 {
        let n = self.group().order() as u128;
        let bound = match self {
            ShiftSet::Multiset(m) => (m.support_len() as u128).pow(2),
            ShiftSet::Progression(q) => {
                let sp = q.index_space();
                sp.ranges().iter().fold(q.subgroup().order() as u128, |acc, &r| {
                    acc.saturating_mul(4 * r as u128 + 1)
                })
            }
        };
        bound.min(n)
    }

    pub fn sampler(&self) -> ShiftSampler<'_> {
        match self {
            ShiftSet::Multiset(m) => ShiftSampler::Multiset(m.sampler()),
            ShiftSet::Progression(q) => ShiftSampler::Progression(q.index_space()),
        }
    }
}

/// Draws shifts from a [`ShiftSet`] with probability proportional to multiplicity.
pub enum ShiftSampler<'a> {
    Multiset(MultisetSampler),
    Progression(IndexSpace<'a>),
}

impl ShiftSampler<'_> {
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            ShiftSampler::Multiset(s) => s.sample_index(rng),
            ShiftSampler::Progression(sp) => sp.sample_index(rng),
        }
    }
}
