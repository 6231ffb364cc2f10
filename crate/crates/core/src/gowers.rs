//! Gowers uniformity and box norms over multisets, Gowers inner products,
//! dual functions, and lower bounds for the eps-perturbed dual norm.
//!
//! # Exact evaluation
//!
//! The `2^d`-th power of the box norm is evaluated by the recursion
//!
//! ```text
//! P_d(f) = E_{h,h' in Q_d} P_{d-1}(Delta_{h,h'} f),      P_0(f) = E_x f(x).
//! ```
//!
//! Because every later step commutes with translation and the final mean is
//! translation invariant, `P_{d-1}(Delta_{h,h'} f)` only depends on
//! `k = h' - h`, so each level averages over the difference multiset
//! `Q_d - Q_d` with its multiplicities. The cost is
//! `prod_i |supp(Q_i - Q_i)| * |G|` table operations.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::FunctionTable;
use crate::group::GroupSpec;
use crate::progression::{CosetProgression, ShiftSet};
use crate::sampling::{draw_rng, ordered_moments, ordered_sum};
use crate::scalar::Real;

/// Default cap on the estimated number of table operations of an exact norm.
pub const DEFAULT_NORM_BUDGET: u128 = 1_000_000_000;

/// Cap on tuples enumerated while building a difference multiset.
const DIFFERENCE_CAP: u64 = 1 << 26;

/// Feasibility slack used when re-verifying dual witnesses.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// A norm value together with how it was obtained.
///
/// `base_power_mean` is the raw `2^d`-fold average before the root; it can
/// be slightly negative from rounding or sampling noise, in which case the
/// reported value clamps to zero. `std_error` refers to `base_power_mean`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub method: Method,
    pub samples: u64,
    pub std_error: f64,
    pub base_power_mean: f64,
}

impl NormResult {
    fn from_power(power: f64, d: usize, method: Method, samples: u64, std_error: f64) -> Self {
        NormResult {
            value: power.max(0.0).powf(1.0 / (1u64 << d) as f64),
            method,
            samples,
            std_error,
            base_power_mean: power,
        }
    }
}

/// Normalized weights of `Q - Q`, as `(element index, weight)`.
pub(crate) fn difference_weights<T: Real>(q: &ShiftSet) -> Result<Vec<(usize, T)>> {
    let m = q.difference_multiset(DIFFERENCE_CAP)?;
    let total = m.total() as f64;
    Ok(m.index_entries()
        .map(|(i, c)| (i, T::of(c as f64 / total)))
        .collect())
}

fn check_shift_sets<T: Real>(f: &FunctionTable<T>, qs: &[ShiftSet], d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::argument("the norm order d must be at least 1"));
    }
    if qs.len() != d {
        return Err(Error::argument(format!(
            "box norm of order {d} needs {d} shift sets, got {}",
            qs.len()
        )));
    }
    for q in qs {
        if q.group() != f.group() {
            return Err(Error::structural(format!(
                "shift set in {} but function on {}",
                q.group(),
                f.group()
            )));
        }
    }
    Ok(())
}

/// Estimated table operations of the exact recursion, before building the
/// difference multisets.
pub fn exact_cost_estimate(order: u64, qs: &[ShiftSet]) -> u128 {
    qs.iter()
        .fold(order as u128, |acc, q| acc.saturating_mul(q.difference_support_bound()))
}

fn weights_within_budget<T: Real>(
    order: u64,
    qs: &[ShiftSet],
    budget: u128,
    what: &str,
    per_term: u128,
) -> Result<Vec<Vec<(usize, T)>>> {
    let estimate = exact_cost_estimate(order, qs).saturating_mul(per_term);
    if estimate > budget {
        return Err(Error::resource(what, estimate, budget));
    }
    let weights: Vec<Vec<(usize, T)>> = qs.iter().map(difference_weights).collect::<Result<_>>()?;
    let exact = weights
        .iter()
        .fold(order as u128, |acc, w| acc.saturating_mul(w.len() as u128))
        .saturating_mul(per_term);
    if exact > budget {
        return Err(Error::resource(what, exact, budget));
    }
    Ok(weights)
}

fn power_recursion<T: Real>(g: &FunctionTable<T>, levels: &[Vec<(usize, T)>]) -> Complex<T> {
    match levels.split_last() {
        None => g.mean(),
        Some((last, rest)) => last.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &(k, w)| {
            acc + power_recursion(&g.delta_from_zero(k), rest) * w
        }),
    }
}

/// Top level of the recursion, parallel over the outermost differences.
fn power_parallel<T: Real>(f: &FunctionTable<T>, levels: &[Vec<(usize, T)>]) -> Complex<T> {
    let (last, rest) = levels.split_last().expect("d >= 1");
    ordered_sum(last.len(), |i| {
        let (k, w) = last[i];
        power_recursion(&f.delta_from_zero(k), rest) * w
    })
}

/// `||f||_{Box^d_{Q_1..Q_d}}` by the exact difference recursion.
pub fn box_norm_exact<T: Real>(
    f: &FunctionTable<T>,
    qs: &[ShiftSet],
    d: usize,
    budget: u128,
) -> Result<NormResult> {
    check_shift_sets(f, qs, d)?;
    let levels = weights_within_budget::<T>(f.group().order(), qs, budget, "exact box norm", 1)?;
    let power = power_parallel(f, &levels);
    Ok(NormResult::from_power(power.re.as_f64(), d, Method::Exact, 0, 0.0))
}

/// `||f||_{U^d_Q} = ||f||_{Box^d_{Q,...,Q}}`.
pub fn uniformity_norm<T: Real>(
    f: &FunctionTable<T>,
    q: &ShiftSet,
    d: usize,
    budget: u128,
) -> Result<NormResult> {
    box_norm_exact(f, &vec![q.clone(); d], d, budget)
}

/// Unbiased Monte-Carlo estimate of the `2^d`-th power from `samples`
/// independent draws of `(h_1, h'_1, ..., h_d, h'_d)`.
pub fn box_norm_mc<T: Real>(
    f: &FunctionTable<T>,
    qs: &[ShiftSet],
    d: usize,
    samples: u64,
    seed: u64,
) -> Result<NormResult> {
    check_shift_sets(f, qs, d)?;
    if samples == 0 {
        return Err(Error::argument("Monte-Carlo estimation needs at least one sample"));
    }
    if qs.iter().any(|q| q.total() == 0) {
        return Err(Error::argument("empty index space"));
    }
    let group = f.group();
    let samplers: Vec<_> = qs.iter().map(|q| q.sampler()).collect();
    let moments = ordered_moments(samples, |i| {
        let mut rng = draw_rng(seed, i);
        let mut g = f.clone();
        for s in &samplers {
            let h = s.sample_index(&mut rng);
            let h2 = s.sample_index(&mut rng);
            g = g.delta_from_zero(group.sub_indices(h2, h));
        }
        g.mean().re.as_f64()
    });
    Ok(NormResult::from_power(
        moments.mean(),
        d,
        Method::MonteCarlo,
        samples,
        moments.std_error(),
    ))
}

/// Exact norm when within budget, otherwise a seeded Monte-Carlo estimate.
pub fn box_norm_auto<T: Real>(
    f: &FunctionTable<T>,
    qs: &[ShiftSet],
    d: usize,
    budget: u128,
    samples: u64,
    seed: u64,
) -> Result<NormResult> {
    match box_norm_exact(f, qs, d, budget) {
        Err(e) if e.is_resource() => box_norm_mc(f, qs, d, samples, seed),
        other => other,
    }
}

/// `<(f_omega)>_{Box^d}` for `2^d` tables, `omega` read as a bit mask with
/// bit `i - 1` holding `omega_i`.
pub fn gowers_inner_product<T: Real>(
    fs: &[FunctionTable<T>],
    qs: &[ShiftSet],
    d: usize,
    budget: u128,
) -> Result<Complex<T>> {
    if fs.len() != 1usize << d {
        return Err(Error::argument(format!(
            "inner product of order {d} needs {} tables, got {}",
            1usize << d,
            fs.len()
        )));
    }
    let first = &fs[0];
    check_shift_sets(first, qs, d)?;
    if fs.iter().any(|f| f.group() != first.group()) {
        return Err(Error::structural("tables on different groups"));
    }
    let levels = weights_within_budget::<T>(
        first.group().order(),
        qs,
        budget,
        "Gowers inner product",
        1u128 << (d - 1),
    )?;
    let (last, rest) = levels.split_last().expect("d >= 1");
    Ok(ordered_sum(last.len(), |i| {
        let (k, w) = last[i];
        inner_recursion(&fold_level(fs, k), rest) * w
    }))
}

/// `F'_w = F_w * conj(T^k F_{w + half})` for the lower half of the cube.
fn fold_level<T: Real>(fs: &[FunctionTable<T>], k: usize) -> Vec<FunctionTable<T>> {
    let half = fs.len() / 2;
    let group = fs[0].group();
    let neg = group.neg_unchecked(&group.element_of(k));
    let map = group.translation_map(&neg);
    (0..half)
        .map(|w| {
            let a = fs[w].values();
            let b = fs[w + half].values();
            FunctionTable::from_parts(
                group.clone(),
                (0..a.len()).map(|x| a[x] * b[map[x]].conj()).collect(),
            )
        })
        .collect()
}

fn inner_recursion<T: Real>(fs: &[FunctionTable<T>], levels: &[Vec<(usize, T)>]) -> Complex<T> {
    match levels.split_last() {
        None => fs[0].mean(),
        Some((last, rest)) => last.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &(k, w)| {
            acc + inner_recursion(&fold_level(fs, k), rest) * w
        }),
    }
}

/// Dual function
/// `D(x) = E_{h_i in Q_i - Q_i} prod_{omega != 0} C^{|omega|-1} T^{omega . h} f_omega (x)`.
///
/// `fs[j]` holds `f_omega` for `omega = j + 1` (bit `i - 1` is `omega_i`).
/// For `d = 0` the result is the constant 1.
pub fn dual_function<T: Real>(
    group: &GroupSpec,
    fs: &[FunctionTable<T>],
    qs: &[ShiftSet],
    d: usize,
    budget: u128,
) -> Result<FunctionTable<T>> {
    if fs.len() + 1 != 1usize << d {
        return Err(Error::argument(format!(
            "dual function of order {d} needs {} tables, got {}",
            (1usize << d) - 1,
            fs.len()
        )));
    }
    if qs.len() != d {
        return Err(Error::argument(format!("dual function of order {d} needs {d} shift sets")));
    }
    if d == 0 {
        return Ok(FunctionTable::ones(group));
    }
    if fs.iter().any(|f| f.group() != group) || qs.iter().any(|q| q.group() != group) {
        return Err(Error::structural("dual function inputs on different groups"));
    }
    let levels = weights_within_budget::<T>(
        group.order(),
        qs,
        budget,
        "dual function",
        (1u128 << d) - 1,
    )?;

    // Every tuple (k_1..k_d) with its product weight and the shift
    // omega . k for each nonzero vertex.
    let cube = (1usize << d) - 1;
    let mut tuples: Vec<(T, Vec<usize>)> = vec![(T::one(), Vec::new())];
    for level in &levels {
        let mut next = Vec::with_capacity(tuples.len() * level.len());
        for (w, ks) in &tuples {
            for &(k, wk) in level {
                let mut ks2 = ks.clone();
                ks2.push(k);
                next.push((*w * wk, ks2));
            }
        }
        tuples = next;
    }
    let shifts: Vec<(T, Vec<usize>)> = tuples
        .into_iter()
        .map(|(w, ks)| {
            let per_vertex = (1..=cube)
                .map(|omega| {
                    (0..d)
                        .filter(|i| omega >> i & 1 == 1)
                        .fold(0usize, |acc, i| group.add_indices(acc, ks[i]))
                })
                .collect();
            (w, per_vertex)
        })
        .collect();

    let n = group.len();
    let values: Vec<Complex<T>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (w, per_vertex) in &shifts {
                let mut prod = Complex::new(*w, T::zero());
                for (j, &s) in per_vertex.iter().enumerate() {
                    let omega = j + 1;
                    let v = fs[j].values()[group.sub_indices(x, s)];
                    // C^{|omega| - 1}
                    prod = if omega.count_ones() % 2 == 1 { prod * v } else { prod * v.conj() };
                }
                acc = acc + prod;
            }
            acc
        })
        .collect();
    FunctionTable::new(group.clone(), values)
}

/// Which candidate families the dual-norm search explores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualStrategy {
    RandomSigns,
    Characters,
    ProjectedAscent,
    All,
}

/// Search effort for [`dual_norm_lower_bound`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualSearch {
    pub strategy: DualStrategy,
    /// Random sign tables tried by the `RandomSigns` family.
    pub random_candidates: usize,
    /// Projected-gradient steps per penalty weight.
    pub ascent_steps: usize,
    /// Bisection rounds on the penalty weight.
    pub bisection_rounds: usize,
    pub seed: u64,
    /// Budget for each exact norm and dual-function evaluation.
    pub budget: u128,
}

impl Default for DualSearch {
    fn default() -> Self {
        DualSearch {
            strategy: DualStrategy::All,
            random_candidates: 64,
            ascent_steps: 200,
            bisection_rounds: 24,
            seed: 0,
            budget: DEFAULT_NORM_BUDGET,
        }
    }
}

/// A feasible `g` for the dual-norm supremum and the value it certifies.
#[derive(Clone, Debug)]
pub struct DualWitness<T: Real> {
    pub g: FunctionTable<T>,
    /// `|<f, g>|`, a lower bound for the dual norm.
    pub inner: f64,
    pub sup_norm: f64,
    /// `||g||_{U^d_{eps Q}}`.
    pub u_norm: f64,
    pub eps: f64,
    /// Candidate family that produced the witness.
    pub source: String,
}

impl<T: Real> DualWitness<T> {
    pub fn is_feasible(&self) -> bool {
        self.sup_norm <= 1.0 + FEASIBILITY_SLACK && self.u_norm <= self.eps + FEASIBILITY_SLACK
    }

    fn zero(group: &GroupSpec, eps: f64) -> Self {
        DualWitness {
            g: FunctionTable::zeros(group),
            inner: 0.0,
            sup_norm: 0.0,
            u_norm: 0.0,
            eps,
            source: "zero".into(),
        }
    }
}

/// Shared state of a dual-norm search: `f`, the shrunken progression and
/// the difference weights of `eps Q`.
struct DualProblem<'a, T: Real> {
    f: &'a FunctionTable<T>,
    shrunk: Vec<ShiftSet>,
    levels: Vec<Vec<(usize, T)>>,
    d: usize,
    eps: f64,
    budget: u128,
}

impl<'a, T: Real> DualProblem<'a, T> {
    fn new(f: &'a FunctionTable<T>, q: &CosetProgression, d: usize, eps: f64, budget: u128) -> Result<Self> {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::argument(format!("eps must be positive, got {eps}")));
        }
        if q.group() != f.group() {
            return Err(Error::structural("progression and function on different groups"));
        }
        let shrunk = vec![ShiftSet::Progression(q.dilate(eps)?); d];
        check_shift_sets(f, &shrunk, d)?;
        let levels = weights_within_budget::<T>(f.group().order(), &shrunk, budget, "dual norm search", 1)?;
        Ok(DualProblem {
            f,
            shrunk,
            levels,
            d,
            eps,
            budget,
        })
    }

    fn power(&self, g: &FunctionTable<T>) -> f64 {
        power_recursion(g, &self.levels).re.as_f64()
    }

    fn u_norm(&self, g: &FunctionTable<T>) -> f64 {
        self.power(g).max(0.0).powf(1.0 / (1u64 << self.d) as f64)
    }

    /// Scales `g` into the feasible set and records it.
    fn witness(&self, g: FunctionTable<T>, source: &str) -> DualWitness<T> {
        let sup = g.sup_norm().as_f64();
        let mut scale = if sup > 1.0 { 1.0 / sup } else { 1.0 };
        let u = self.u_norm(&g) * scale;
        if u > self.eps {
            scale *= self.eps / u * (1.0 - 1e-12);
        }
        let g = g.scale(Complex::new(T::of(scale), T::zero()));
        DualWitness {
            inner: self.f.inner(&g).expect("same group").norm().as_f64(),
            sup_norm: g.sup_norm().as_f64(),
            u_norm: self.u_norm(&g),
            eps: self.eps,
            g,
            source: source.into(),
        }
    }

    fn dual(&self, g: &FunctionTable<T>) -> Result<FunctionTable<T>> {
        let copies = vec![g.clone(); (1 << self.d) - 1];
        dual_function(g.group(), &copies, &self.shrunk, self.d, self.budget)
    }

    /// Projected gradient ascent on `Re<f, g> - lambda ||g||^{2^d}` over
    /// the unit polydisc.
    fn ascend(&self, start: &FunctionTable<T>, lambda: f64, steps: usize) -> Result<FunctionTable<T>> {
        let mut g = start.clone();
        let pow = (1u64 << self.d) as f64;
        for t in 0..steps {
            let dual = self.dual(&g)?;
            let eta = 0.5 / ((t + 1) as f64).sqrt();
            let coef = T::of(lambda * pow);
            let values = g
                .values()
                .iter()
                .zip(self.f.values())
                .zip(dual.values())
                .map(|((&v, &fv), &dv)| {
                    let step = v + (fv - dv * coef) * T::of(eta);
                    let r = step.norm();
                    if r > T::one() { step / r } else { step }
                })
                .collect();
            g = FunctionTable::from_parts(g.group().clone(), values);
        }
        Ok(g)
    }
}

fn better<T: Real>(best: DualWitness<T>, candidate: DualWitness<T>) -> DualWitness<T> {
    if candidate.is_feasible() && candidate.inner > best.inner {
        candidate
    } else {
        best
    }
}

/// Certified lower bound for `sup{|<f,g>| : ||g||_inf <= 1, ||g||_{U^d_{eps Q}} <= eps}`.
///
/// Every returned witness has been re-measured after scaling into the
/// feasible set; if no candidate is feasible the zero function is returned.
pub fn dual_norm_lower_bound<T: Real>(
    f: &FunctionTable<T>,
    q: &CosetProgression,
    d: usize,
    eps: f64,
    search: &DualSearch,
) -> Result<DualWitness<T>> {
    let problem = DualProblem::new(f, q, d, eps, search.budget)?;
    let group = f.group();
    let mut best = DualWitness::zero(group, eps);
    let use_family = |s: DualStrategy| search.strategy == DualStrategy::All || search.strategy == s;

    if use_family(DualStrategy::RandomSigns) {
        for i in 0..search.random_candidates {
            let g = FunctionTable::random_signs(group, crate::sampling::derive_seed(search.seed, &[1, i as u64]));
            best = better(best, problem.witness(g, "random_signs"));
        }
    }

    if use_family(DualStrategy::Characters) {
        for xi in group.elements() {
            let chi = FunctionTable::character(group, &xi)?;
            best = better(best, problem.witness(chi, "character"));
        }
    }

    if use_family(DualStrategy::ProjectedAscent) {
        // Unconstrained optimum: the phase of f.
        let phase = f.map(|v| {
            let r = v.norm();
            if r > T::zero() { v / r } else { Complex::new(T::zero(), T::zero()) }
        });
        best = better(best, problem.witness(phase.clone(), "projected_ascent"));
        if problem.u_norm(&phase) > eps {
            // Grow the penalty until the ascent lands inside the U-ball,
            // then bisect on it.
            let mut lo = 0.0f64;
            let mut hi = 1.0f64;
            let mut current = phase.clone();
            let mut rounds = 0;
            loop {
                current = problem.ascend(&current, hi, search.ascent_steps)?;
                best = better(best, problem.witness(current.clone(), "projected_ascent"));
                if problem.u_norm(&current) <= eps || rounds >= 40 {
                    break;
                }
                lo = hi;
                hi *= 4.0;
                rounds += 1;
            }
            for _ in 0..search.bisection_rounds {
                let mid = 0.5 * (lo + hi);
                current = problem.ascend(&current, mid, search.ascent_steps)?;
                let u = problem.u_norm(&current);
                best = better(best, problem.witness(current.clone(), "projected_ascent"));
                if u > eps {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
    }

    Ok(best)
}

/// Exhaustive maximum over `g` taking values in `{0}` and the
/// `phase_levels`-th roots of unity.
pub fn dual_norm_oracle_tiny<T: Real>(
    f: &FunctionTable<T>,
    q: &CosetProgression,
    d: usize,
    eps: f64,
    phase_levels: u32,
    budget: u128,
) -> Result<DualWitness<T>> {
    const ENUMERATION_LIMIT: u128 = 100_000_000;
    if phase_levels == 0 {
        return Err(Error::argument("phase_levels must be at least 1"));
    }
    let problem = DualProblem::new(f, q, d, eps, budget)?;
    let n = f.len();
    let alphabet = phase_levels as u128 + 1;
    let count = (0..n).try_fold(1u128, |acc, _| acc.checked_mul(alphabet).filter(|&c| c <= ENUMERATION_LIMIT));
    let count = count.ok_or_else(|| {
        Error::resource("dual norm oracle enumeration", alphabet.saturating_pow(n as u32), ENUMERATION_LIMIT)
    })? as u64;
    let mut symbols = vec![Complex::new(T::zero(), T::zero())];
    symbols.extend((0..phase_levels).map(|j| crate::scalar::turn::<T>(j as f64 / phase_levels as f64)));
    let group = f.group();

    let decode = |mut code: u64| -> FunctionTable<T> {
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(symbols[(code % alphabet as u64) as usize]);
            code /= alphabet as u64;
        }
        FunctionTable::from_parts(group.clone(), values)
    };

    // (inner, code) maximum with the smallest code on ties
    let (best_inner, best_code) = (0..count)
        .into_par_iter()
        .map(|code| {
            let g = decode(code);
            if problem.u_norm(&g) <= eps + 1e-12 {
                (f.inner(&g).expect("same group").norm().as_f64(), code)
            } else {
                (-1.0, code)
            }
        })
        .reduce(
            || (-1.0, u64::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }
            },
        );
    let g = decode(best_code);
    let _ = best_inner;
    Ok(DualWitness {
        inner: f.inner(&g)?.norm().as_f64(),
        sup_norm: g.sup_norm().as_f64(),
        u_norm: problem.u_norm(&g),
        eps,
        g,
        source: format!("exhaustive_{phase_levels}_phases"),
    })
}

/// Draws `count` uniform shift tuples; used by callers that need raw
/// samples of a shift set.
pub fn sample_shifts(q: &ShiftSet, count: u64, seed: u64) -> Vec<usize> {
    let s = q.sampler();
    (0..count)
        .map(|i| s.sample_index(&mut draw_rng(seed, i)))
        .collect()
}

/// Uniform random index in `0..n` from draw `i`; small helper for tests
/// and harnesses that want the same keyed streams.
pub fn keyed_index(seed: u64, i: u64, n: usize) -> usize {
    draw_rng(seed, i).gen_range(0..n)
}
