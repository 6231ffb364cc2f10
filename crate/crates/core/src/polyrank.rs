//! Polynomial-degree and rank checks for maps `P: G -> K`, and randomized
//! property tests for the two concatenation statements.
//!
//! A map has degree `< d` along `H` when every `d`-fold iterated difference
//! along `H` vanishes, and rank `< (H_1, ..., H_d)` when every mixed
//! difference with one step from each `H_i` vanishes. Both characterizations
//! are checked against the literal recursive definitions in the tests.

use std::fmt::Debug;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec, Subgroup};
use crate::sampling::{derive_seed, draw_rng};

/// Default cap on `|H|^d * |G|` for exhaustive checks.
pub const DEFAULT_POLY_BUDGET: u128 = 100_000_000;

/// Additive codomain `K`.
pub trait Codomain: Clone + Debug + Send + Sync {
    type Value: Copy + Debug + Send + Sync + PartialEq;

    fn zero(&self) -> Self::Value;
    fn add(&self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn neg(&self, a: Self::Value) -> Self::Value;
    fn is_zero(&self, a: Self::Value) -> bool;
    fn validate(&self, a: Self::Value) -> bool;
    fn render(&self, a: Self::Value) -> String;

    fn sub(&self, a: Self::Value, b: Self::Value) -> Self::Value {
        self.add(a, self.neg(b))
    }
}

/// `Z/MZ` with exact arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modular {
    pub modulus: u64,
}

impl Modular {
    pub fn new(modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::argument("codomain modulus must be positive"));
        }
        Ok(Modular { modulus })
    }

    pub fn reduce(&self, v: i128) -> u64 {
        v.rem_euclid(self.modulus as i128) as u64
    }
}

impl Codomain for Modular {
    type Value = u64;

    fn zero(&self) -> u64 {
        0
    }

    fn add(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.modulus as u128) as u64
    }

    fn neg(&self, a: u64) -> u64 {
        if a == 0 { 0 } else { self.modulus - a }
    }

    fn is_zero(&self, a: u64) -> bool {
        a == 0
    }

    fn validate(&self, a: u64) -> bool {
        a < self.modulus
    }

    fn render(&self, a: u64) -> String {
        format!("{a} mod {}", self.modulus)
    }
}

/// `R/Z`, values stored in `[0, 1)`, zero up to `tolerance`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Torus {
    pub tolerance: f64,
}

impl Codomain for Torus {
    type Value = f64;

    fn zero(&self) -> f64 {
        0.0
    }

    fn add(&self, a: f64, b: f64) -> f64 {
        (a + b).rem_euclid(1.0)
    }

    fn neg(&self, a: f64) -> f64 {
        (-a).rem_euclid(1.0)
    }

    fn is_zero(&self, a: f64) -> bool {
        let r = a.rem_euclid(1.0);
        r.min(1.0 - r) <= self.tolerance
    }

    fn validate(&self, a: f64) -> bool {
        a.is_finite()
    }

    fn render(&self, a: f64) -> String {
        format!("{a} mod 1")
    }
}

/// A totally defined map `G -> K` stored as a dense table.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFunction<K: Codomain> {
    domain: GroupSpec,
    codomain: K,
    values: Vec<K::Value>,
}

impl<K: Codomain> PolyFunction<K> {
    pub fn new(domain: GroupSpec, codomain: K, values: Vec<K::Value>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::structural(format!(
                "table has {} values but {domain} has {} elements",
                values.len(),
                domain.order()
            )));
        }
        if let Some(bad) = values.iter().find(|&&v| !codomain.validate(v)) {
            return Err(Error::argument(format!("value {bad:?} is outside the codomain")));
        }
        Ok(PolyFunction { domain, codomain, values })
    }

    pub fn from_fn(domain: &GroupSpec, codomain: K, f: impl Fn(&GroupElement) -> K::Value) -> Result<Self> {
        let values = domain.elements().map(|x| f(&x)).collect();
        Self::new(domain.clone(), codomain, values)
    }

    pub fn domain(&self) -> &GroupSpec {
        &self.domain
    }

    pub fn codomain(&self) -> &K {
        &self.codomain
    }

    pub fn values(&self) -> &[K::Value] {
        &self.values
    }

    pub fn at(&self, x: &GroupElement) -> Result<K::Value> {
        Ok(self.values[self.domain.index_of(x)?])
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| self.codomain.is_zero(v))
    }

    fn difference_index(&self, h: usize) -> Self {
        let k = &self.codomain;
        let values = (0..self.values.len())
            .map(|x| k.sub(self.values[self.domain.add_indices(x, h)], self.values[x]))
            .collect();
        PolyFunction {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            values,
        }
    }

    /// `P_h(x) = P(x + h) - P(x)`.
    pub fn additive_difference(&self, h: &GroupElement) -> Result<Self> {
        Ok(self.difference_index(self.domain.index_of(h)?))
    }

    /// `Delta_{h_1} ... Delta_{h_k} P (x)` as an alternating sum.
    fn iterated_difference_index(&self, hs: &[usize], x: usize) -> K::Value {
        let k = &self.codomain;
        let d = hs.len();
        let mut acc = k.zero();
        for mask in 0u32..(1u32 << d) {
            let shift = (0..d)
                .filter(|i| mask >> i & 1 == 1)
                .fold(x, |s, i| self.domain.add_indices(s, hs[i]));
            let v = self.values[shift];
            acc = if (d as u32 - mask.count_ones()).is_multiple_of(2) { k.add(acc, v) } else { k.sub(acc, v) };
        }
        acc
    }

    pub fn iterated_difference(&self, hs: &[GroupElement], x: &GroupElement) -> Result<K::Value> {
        let idx: Vec<usize> = hs.iter().map(|h| self.domain.index_of(h)).collect::<Result<_>>()?;
        Ok(self.iterated_difference_index(&idx, self.domain.index_of(x)?))
    }
}

impl PolyFunction<Modular> {
    /// `sum_t c_t prod_i x_i^{e_{t,i}}` with coordinates read as integers
    /// in `0..n_i` and arithmetic mod `modulus`.
    pub fn from_monomials(domain: &GroupSpec, modulus: u64, terms: &[(i64, Vec<u32>)]) -> Result<Self> {
        let k = Modular::new(modulus)?;
        for (_, exps) in terms {
            if exps.len() != domain.rank() {
                return Err(Error::structural(format!(
                    "monomial has {} exponents but the domain has rank {}",
                    exps.len(),
                    domain.rank()
                )));
            }
        }
        Self::from_fn(domain, k, |x| {
            terms.iter().fold(0u64, |acc, (c, exps)| {
                let term = x
                    .residues()
                    .iter()
                    .zip(exps)
                    .fold(k.reduce(*c as i128), |t, (&r, &e)| mul_mod(t, pow_mod(r, e, modulus), modulus));
                k.add(acc, term)
            })
        })
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(base: u64, e: u32, m: u64) -> u64 {
    (0..e).fold(1 % m, |acc, _| mul_mod(acc, base % m, m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// Literal recursion on the definition.
    Recursive,
    /// Vanishing of all iterated differences.
    Difference,
}

/// A point where an iterated difference does not vanish.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyWitness {
    pub shifts: Vec<GroupElement>,
    pub x: GroupElement,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyCertificate {
    pub verdict: bool,
    pub witness: Option<PolyWitness>,
    /// `(shift tuple, x)` pairs evaluated. A failing recursive-mode check
    /// stops early on several threads and reports 0 rather than a
    /// schedule-dependent count.
    pub checked_pairs: u64,
    /// True when the verdict comes from random subsampling and only means
    /// that no counterexample was found.
    pub statistical: bool,
}

impl PolyCertificate {
    /// Re-evaluates the witness, if any: the iterated difference there
    /// must be nonzero.
    pub fn witness_verifies<K: Codomain>(&self, p: &PolyFunction<K>) -> bool {
        match &self.witness {
            None => self.verdict,
            Some(w) => p
                .iterated_difference(&w.shifts, &w.x)
                .map(|v| !p.codomain().is_zero(v))
                .unwrap_or(false),
        }
    }
}

fn certificate<K: Codomain>(
    p: &PolyFunction<K>,
    found: Option<(Vec<usize>, usize)>,
    checked: u64,
    statistical: bool,
) -> PolyCertificate {
    let group = p.domain();
    let witness = found.map(|(hs, x)| PolyWitness {
        value: p.codomain().render(p.iterated_difference_index(&hs, x)),
        shifts: hs.iter().map(|&h| group.element_of(h)).collect(),
        x: group.element_of(x),
    });
    PolyCertificate {
        verdict: witness.is_none(),
        witness,
        checked_pairs: checked,
        statistical,
    }
}

fn check_subgroup<K: Codomain>(p: &PolyFunction<K>, h: &Subgroup) -> Result<()> {
    if h.group() != p.domain() {
        return Err(Error::structural(format!(
            "subgroup of {} but map defined on {}",
            h.group(),
            p.domain()
        )));
    }
    Ok(())
}

fn check_budget(cost: u128, budget: u128, what: &str) -> Result<()> {
    if cost > budget {
        Err(Error::resource(what, cost, budget))
    } else {
        Ok(())
    }
}

/// First `x` where `P` is nonzero.
fn first_nonzero<K: Codomain>(p: &PolyFunction<K>) -> Option<usize> {
    p.values.iter().position(|&v| !p.codomain.is_zero(v))
}

/// Scans tuples `0..count` in order and returns the first `(tuple, x)` with
/// a nonvanishing iterated difference, plus the number of pairs examined.
fn scan_tuples<K: Codomain>(
    p: &PolyFunction<K>,
    count: u64,
    tuple: impl Fn(u64) -> Vec<usize> + Sync,
) -> (Option<(Vec<usize>, usize)>, u64) {
    let n = p.values.len();
    let hit = (0..count).into_par_iter().find_map_first(|t| {
        let hs = tuple(t);
        let q = hs.iter().fold(None::<PolyFunction<K>>, |q, &h| {
            Some(q.as_ref().unwrap_or(p).difference_index(h))
        });
        first_nonzero(q.as_ref().unwrap_or(p)).map(|x| (t, hs, x))
    });
    match hit {
        None => (None, count * n as u64),
        Some((t, hs, x)) => (Some((hs, x)), t * n as u64 + x as u64 + 1),
    }
}

/// Nondecreasing `d`-tuples from `0..m`, in lexicographic order.
fn multisets_of_size(m: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; d];
    if m == 0 {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] + 1 < m {
                let v = cur[i] + 1;
                for c in cur.iter_mut().skip(i) {
                    *c = v;
                }
                break;
            }
        }
    }
}

/// Is `P` of degree `< d` along `H`?
pub fn degree_check<K: Codomain>(
    p: &PolyFunction<K>,
    h: &Subgroup,
    d: i64,
    mode: CheckMode,
    budget: u128,
) -> Result<PolyCertificate> {
    check_subgroup(p, h)?;
    let n = p.values.len() as u64;
    if d <= 0 {
        return Ok(certificate(p, first_nonzero(p).map(|x| (Vec::new(), x)), n, false));
    }
    let d = d as usize;
    let cost = (h.order() as u128)
        .checked_pow(d as u32)
        .unwrap_or(u128::MAX)
        .saturating_mul(n as u128);
    check_budget(cost, budget, "exhaustive degree check")?;
    let hs = h.indices();
    match mode {
        CheckMode::Difference => {
            // differences commute, so nondecreasing tuples suffice
            let tuples = multisets_of_size(hs.len(), d);
            let (found, checked) = scan_tuples(p, tuples.len() as u64, |t| {
                tuples[t as usize].iter().map(|&i| hs[i]).collect()
            });
            Ok(certificate(p, found, checked, false))
        }
        CheckMode::Recursive => {
            let found = hs.par_iter().find_map_first(|&first| {
                let mut path = vec![first];
                degree_recursive(&p.difference_index(first), hs, d - 1, &mut path)
            });
            let checked = if found.is_none() { cost as u64 } else { 0 };
            Ok(certificate(p, found, checked, false))
        }
    }
}

fn degree_recursive<K: Codomain>(
    q: &PolyFunction<K>,
    hs: &[usize],
    d: usize,
    path: &mut Vec<usize>,
) -> Option<(Vec<usize>, usize)> {
    if d == 0 {
        return first_nonzero(q).map(|x| (path.clone(), x));
    }
    for &h in hs {
        path.push(h);
        if let Some(w) = degree_recursive(&q.difference_index(h), hs, d - 1, path) {
            return Some(w);
        }
        path.pop();
    }
    None
}

/// Is `P` of rank `< (H_1, ..., H_d)`?
pub fn rank_check<K: Codomain>(
    p: &PolyFunction<K>,
    hs: &[Subgroup],
    mode: CheckMode,
    budget: u128,
) -> Result<PolyCertificate> {
    for h in hs {
        check_subgroup(p, h)?;
    }
    let n = p.values.len() as u64;
    if hs.is_empty() {
        return Ok(certificate(p, first_nonzero(p).map(|x| (Vec::new(), x)), n, false));
    }
    let selections = hs
        .iter()
        .fold(1u128, |acc, h| acc.saturating_mul(h.order() as u128));
    match mode {
        CheckMode::Difference => {
            check_budget(selections.saturating_mul(n as u128), budget, "exhaustive rank check")?;
            let lists: Vec<&[usize]> = hs.iter().map(|h| h.indices()).collect();
            let (found, checked) = scan_tuples(p, selections as u64, |mut t| {
                // mixed radix, last subgroup fastest
                let mut out = vec![0; lists.len()];
                for (slot, list) in out.iter_mut().zip(&lists).rev() {
                    *slot = list[(t % list.len() as u64) as usize];
                    t /= list.len() as u64;
                }
                out
            });
            Ok(certificate(p, found, checked, false))
        }
        CheckMode::Recursive => {
            let orderings = (1..=hs.len() as u128).product::<u128>();
            let cost = orderings.saturating_mul(selections).saturating_mul(n as u128);
            check_budget(cost, budget, "recursive rank check")?;
            let remaining: Vec<usize> = (0..hs.len()).collect();
            let mut path = Vec::new();
            let found = rank_recursive(p, hs, &remaining, &mut path).map(|(mut steps, x)| {
                steps.sort_by_key(|&(i, _)| i);
                (steps.into_iter().map(|(_, h)| h).collect::<Vec<_>>(), x)
            });
            let checked = if found.is_none() { cost as u64 } else { 0 };
            Ok(certificate(p, found, checked, false))
        }
    }
}

type RankPath = Vec<(usize, usize)>;

fn rank_recursive<K: Codomain>(
    q: &PolyFunction<K>,
    hs: &[Subgroup],
    remaining: &[usize],
    path: &mut RankPath,
) -> Option<(RankPath, usize)> {
    if remaining.is_empty() {
        return first_nonzero(q).map(|x| (path.clone(), x));
    }
    for (pos, &i) in remaining.iter().enumerate() {
        let rest: Vec<usize> = remaining
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != pos)
            .map(|(_, &v)| v)
            .collect();
        for &h in hs[i].indices() {
            path.push((i, h));
            if let Some(w) = rank_recursive(&q.difference_index(h), hs, &rest, path) {
                return Some(w);
            }
            path.pop();
        }
    }
    None
}

/// Random-subsampling degree check: `samples` draws of `(h_1..h_d, x)`.
pub fn degree_check_sampled<K: Codomain>(
    p: &PolyFunction<K>,
    h: &Subgroup,
    d: i64,
    samples: u64,
    seed: u64,
) -> Result<PolyCertificate> {
    check_subgroup(p, h)?;
    let d = d.max(0) as usize;
    let hs = h.indices();
    let n = p.values.len();
    let hit = (0..samples).into_par_iter().find_map_first(|i| {
        let mut rng = draw_rng(seed, i);
        let tuple: Vec<usize> = (0..d).map(|_| hs[rng.gen_range(0..hs.len())]).collect();
        let x = rng.gen_range(0..n);
        (!p.codomain.is_zero(p.iterated_difference_index(&tuple, x))).then_some((i, tuple, x))
    });
    let (found, checked) = match hit {
        None => (None, samples),
        Some((i, t, x)) => (Some((t, x)), i + 1),
    };
    Ok(certificate(p, found, checked, true))
}

/// Random-subsampling rank check.
pub fn rank_check_sampled<K: Codomain>(
    p: &PolyFunction<K>,
    hs: &[Subgroup],
    samples: u64,
    seed: u64,
) -> Result<PolyCertificate> {
    for h in hs {
        check_subgroup(p, h)?;
    }
    let n = p.values.len();
    let hit = (0..samples).into_par_iter().find_map_first(|i| {
        let mut rng = draw_rng(seed, i);
        let tuple: Vec<usize> = hs
            .iter()
            .map(|h| h.indices()[rng.gen_range(0..h.order())])
            .collect();
        let x = rng.gen_range(0..n);
        (!p.codomain.is_zero(p.iterated_difference_index(&tuple, x))).then_some((i, tuple, x))
    });
    let (found, checked) = match hit {
        None => (None, samples),
        Some((i, t, x)) => (Some((t, x)), i + 1),
    };
    Ok(certificate(p, found, checked, true))
}

/// Random instances satisfying the hypotheses of a concatenation statement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConcatFamily {
    /// `G = (Z/p)^2`, `H_1 = <v_1>`, `H_2 = <v_2>` for independent `v_i`
    /// (the coordinate axes unless `mix`), and
    /// `P(a v_1 + b v_2) = sum_t A_t(a) B_t(b)` with `deg A_t < d1`,
    /// `deg B_t < d2`. Conclusion: degree `< d1 + d2 - 1` along `G`.
    Polynomial { p: u64, d1: usize, d2: usize, mix: bool },
    /// `G = (Z/p)^{d1} x (Z/p)^{d2}` with coordinate subgroups `H_{1,i}`
    /// and `H_{2,j}`, and `P = sum_{i,j} F_{ij}` where `F_{ij}` ignores
    /// coordinates `(1,i)` and `(2,j)`. Conclusion: rank
    /// `< (H_{1,i} + H_{2,j})_{i,j}`.
    LowRank { p: u64, d1: usize, d2: usize },
}

/// One generated instance with its hypothesis and conclusion subgroups.
#[derive(Clone, Debug)]
pub struct ConcatInstance {
    pub p: PolyFunction<Modular>,
    pub first: Vec<Subgroup>,
    pub second: Vec<Subgroup>,
    pub conclusion: Vec<Subgroup>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcatViolation {
    pub trial: u64,
    pub table: Vec<u64>,
    pub certificate: PolyCertificate,
    /// Which statement failed: "hypothesis" or "conclusion".
    pub stage: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcatReport {
    pub family: ConcatFamily,
    pub trials: u64,
    pub seed: u64,
    pub violations: u64,
    pub checked_pairs: u64,
    pub counterexample: Option<ConcatViolation>,
}

const MAX_TERMS: usize = 5;

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|q| q * q <= p).all(|q| !p.is_multiple_of(q))
}

impl ConcatFamily {
    fn validate(&self) -> Result<()> {
        let (p, d1, d2) = match *self {
            ConcatFamily::Polynomial { p, d1, d2, .. } | ConcatFamily::LowRank { p, d1, d2 } => (p, d1, d2),
        };
        if d1 == 0 || d2 == 0 {
            return Err(Error::argument("d1 and d2 must be at least 1"));
        }
        if !is_prime(p) {
            return Err(Error::argument(format!("p = {p} must be prime")));
        }
        if matches!(self, ConcatFamily::Polynomial { .. }) && (p as usize) < d1 + d2 {
            return Err(Error::argument(format!("p = {p} must be at least d1 + d2 = {}", d1 + d2)));
        }
        Ok(())
    }

    /// Draws instance number `trial`; all-zero draws are redrawn.
    pub fn generate(&self, seed: u64, trial: u64) -> Result<ConcatInstance> {
        self.validate()?;
        for attempt in 0.. {
            let mut rng = draw_rng(derive_seed(seed, &[trial]), attempt);
            let inst = match *self {
                ConcatFamily::Polynomial { p, d1, d2, mix } => polynomial_instance(&mut rng, p, d1, d2, mix)?,
                ConcatFamily::LowRank { p, d1, d2 } => low_rank_instance(&mut rng, p, d1, d2)?,
            };
            if !inst.p.is_zero() {
                return Ok(inst);
            }
        }
        unreachable!()
    }

    fn budget_cost(&self) -> u128 {
        match *self {
            ConcatFamily::Polynomial { p, d1, d2, .. } => {
                (p as u128 * p as u128).saturating_pow((d1 + d2 - 1) as u32) * (p as u128 * p as u128)
            }
            ConcatFamily::LowRank { p, d1, d2 } => {
                (p as u128 * p as u128).saturating_pow((d1 * d2) as u32) * (p as u128).pow((d1 + d2) as u32)
            }
        }
    }
}

fn random_poly<R: Rng>(rng: &mut R, p: u64, degree_below: usize) -> Vec<u64> {
    (0..degree_below).map(|_| rng.gen_range(0..p)).collect()
}

fn eval_poly(coeffs: &[u64], a: u64, p: u64) -> u64 {
    coeffs.iter().rev().fold(0, |acc, &c| (mul_mod(acc, a, p) + c) % p)
}

fn polynomial_instance<R: Rng>(rng: &mut R, p: u64, d1: usize, d2: usize, mix: bool) -> Result<ConcatInstance> {
    let group = GroupSpec::new(vec![p, p])?;
    let k = Modular::new(p)?;
    // columns v1 = (m00, m10), v2 = (m01, m11)
    let m = if mix {
        loop {
            let m: [u64; 4] = std::array::from_fn(|_| rng.gen_range(0..p));
            if !(mul_mod(m[0], m[3], p) + p - mul_mod(m[1], m[2], p)).is_multiple_of(p) {
                break m;
            }
        }
    } else {
        [1, 0, 0, 1]
    };
    let det = (mul_mod(m[0], m[3], p) + p - mul_mod(m[1], m[2], p)) % p;
    let det_inv = pow_mod(det, (p - 2) as u32, p);
    let inv = [
        mul_mod(m[3], det_inv, p),
        mul_mod(p - m[1], det_inv, p) % p,
        mul_mod(p - m[2], det_inv, p) % p,
        mul_mod(m[0], det_inv, p),
    ];
    let terms = rng.gen_range(1..=MAX_TERMS);
    let pieces: Vec<(Vec<u64>, Vec<u64>)> = (0..terms)
        .map(|_| (random_poly(rng, p, d1), random_poly(rng, p, d2)))
        .collect();
    let table = PolyFunction::from_fn(&group, k, |x| {
        let (u, v) = (x.residues()[0], x.residues()[1]);
        let a = (mul_mod(inv[0], u, p) + mul_mod(inv[1], v, p)) % p;
        let b = (mul_mod(inv[2], u, p) + mul_mod(inv[3], v, p)) % p;
        pieces
            .iter()
            .fold(0, |acc, (fa, fb)| k.add(acc, mul_mod(eval_poly(fa, a, p), eval_poly(fb, b, p), p)))
    })?;
    let v1 = group.element(&[m[0] as i64, m[2] as i64])?;
    let v2 = group.element(&[m[1] as i64, m[3] as i64])?;
    let h1 = Subgroup::generate(&group, vec![v1])?;
    let h2 = Subgroup::generate(&group, vec![v2])?;
    let conclusion = vec![h1.join(&h2)?];
    Ok(ConcatInstance {
        p: table,
        first: vec![h1],
        second: vec![h2],
        conclusion,
    })
}

fn low_rank_instance<R: Rng>(rng: &mut R, p: u64, d1: usize, d2: usize) -> Result<ConcatInstance> {
    let rank = d1 + d2;
    let group = GroupSpec::new(vec![p; rank])?;
    let k = Modular::new(p)?;
    let axis = |c: usize| -> Result<Subgroup> {
        let mut coords = vec![0i64; rank];
        coords[c] = 1;
        Subgroup::generate(&group, vec![group.element(&coords)?])
    };
    let first: Vec<Subgroup> = (0..d1).map(axis).collect::<Result<_>>()?;
    let second: Vec<Subgroup> = (d1..rank).map(axis).collect::<Result<_>>()?;
    // F_ij: random table on the coordinates other than i and d1 + j
    let free = (p as usize).pow((rank - 2) as u32);
    let tables: Vec<Vec<u64>> = (0..d1 * d2)
        .map(|_| (0..free).map(|_| rng.gen_range(0..p)).collect())
        .collect();
    let table = PolyFunction::from_fn(&group, k, |x| {
        let r = x.residues();
        let mut acc = 0;
        for i in 0..d1 {
            for j in 0..d2 {
                let skip = [i, d1 + j];
                let pos = (0..rank)
                    .filter(|c| !skip.contains(c))
                    .fold(0usize, |pos, c| pos * p as usize + r[c] as usize);
                acc = k.add(acc, tables[i * d2 + j][pos]);
            }
        }
        acc
    })?;
    let mut conclusion = Vec::with_capacity(d1 * d2);
    for a in &first {
        for b in &second {
            conclusion.push(a.join(b)?);
        }
    }
    Ok(ConcatInstance {
        p: table,
        first,
        second,
        conclusion,
    })
}

/// Checks hypotheses and conclusion on `trials` random instances and stops
/// at the first violation.
pub fn concat_property_test(family: &ConcatFamily, trials: u64, seed: u64, budget: u128) -> Result<ConcatReport> {
    family.validate()?;
    check_budget(family.budget_cost(), budget, "concatenation property test")?;
    let mut report = ConcatReport {
        family: family.clone(),
        trials: 0,
        seed,
        violations: 0,
        checked_pairs: 0,
        counterexample: None,
    };
    for trial in 0..trials {
        let inst = family.generate(seed, trial)?;
        let checks: Vec<(&str, PolyCertificate)> = match family {
            ConcatFamily::Polynomial { d1, d2, .. } => vec![
                ("hypothesis", degree_check(&inst.p, &inst.first[0], *d1 as i64, CheckMode::Difference, budget)?),
                ("hypothesis", degree_check(&inst.p, &inst.second[0], *d2 as i64, CheckMode::Difference, budget)?),
                (
                    "conclusion",
                    degree_check(&inst.p, &inst.conclusion[0], (d1 + d2 - 1) as i64, CheckMode::Difference, budget)?,
                ),
            ],
            ConcatFamily::LowRank { .. } => vec![
                ("hypothesis", rank_check(&inst.p, &inst.first, CheckMode::Difference, budget)?),
                ("hypothesis", rank_check(&inst.p, &inst.second, CheckMode::Difference, budget)?),
                ("conclusion", rank_check(&inst.p, &inst.conclusion, CheckMode::Difference, budget)?),
            ],
        };
        report.trials += 1;
        for (stage, cert) in checks {
            report.checked_pairs += cert.checked_pairs;
            if !cert.verdict {
                report.violations += 1;
                report.counterexample = Some(ConcatViolation {
                    trial,
                    table: inst.p.values().to_vec(),
                    certificate: cert,
                    stage: stage.into(),
                });
                return Ok(report);
            }
        }
    }
    Ok(report)
}
