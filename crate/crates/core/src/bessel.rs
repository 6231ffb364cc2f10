//! Empirical curves for the Bessel-type inequality between averaged
//! uniformity norms, and the two-subgroup counterexample construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::FunctionTable;
use crate::gowers::{box_norm_exact, box_norm_mc, NormResult, DEFAULT_NORM_BUDGET};
use crate::group::{GroupSpec, Subgroup};
use crate::progression::{CosetProgression, ShiftSet};
use crate::sampling::{derive_seed, draw_rng};
use crate::scalar::Real;

/// A norm evaluation that may have failed; failures annotate reports
/// instead of aborting them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormOutcome {
    pub result: Option<NormResult>,
    pub error: Option<String>,
}

impl NormOutcome {
    pub fn value(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.value)
    }
}

impl From<Result<NormResult>> for NormOutcome {
    fn from(r: Result<NormResult>) -> Self {
        match r {
            Ok(n) => NormOutcome { result: Some(n), error: None },
            Err(e) => NormOutcome { result: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub i: usize,
    pub j: usize,
    pub norm: NormOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub i: usize,
    pub norm: NormOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselReport {
    pub eps: f64,
    /// Average over all ordered pairs, diagonal included, of the pair norms.
    pub lhs: f64,
    /// Average over the family of the single-index norms.
    pub rhs: f64,
    /// Whether `lhs <= eps`, the hypothesis side of the inequality.
    pub hypothesis_holds: bool,
    /// False when some entry failed; the averages then run over the
    /// successful entries only.
    pub complete: bool,
    pub pairs: Vec<PairEntry>,
    pub singles: Vec<IndexEntry>,
}

impl BesselReport {
    /// Recomputes `(lhs, rhs)` from the entry tables.
    pub fn recompute(&self) -> (f64, f64) {
        (
            mean(self.pairs.iter().filter_map(|p| p.norm.value())),
            mean(self.singles.iter().filter_map(|s| s.norm.value())),
        )
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 { f64::NAN } else { sum / count as f64 }
}

/// Progression families scanned by [`bessel_scan`].
#[derive(Clone, Debug)]
pub enum BesselFamily {
    /// One progression per index; pair norms are `U^{2d-1}` over
    /// `eps Q_i + eps Q_j`, single norms `U^d` over `Q_i`.
    Uniform(Vec<CosetProgression>),
    /// `d` progressions per index; pair norms are box norms of order `d^2`
    /// over `(eps Q_{i,k} + eps Q_{j,l})_{k,l}`, single norms are box
    /// norms over `(Q_{i,1}, ..., Q_{i,d})`.
    Box(Vec<Vec<CosetProgression>>),
}

impl BesselFamily {
    fn len(&self) -> usize {
        match self {
            BesselFamily::Uniform(v) => v.len(),
            BesselFamily::Box(v) => v.len(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BesselConfig {
    pub d: usize,
    pub eps_list: Vec<f64>,
    /// Exact-evaluation budget per norm; above it Monte-Carlo runs.
    pub budget: u128,
    /// Zero disables the fallback: over-budget entries keep their resource
    /// error instead.
    pub mc_samples: u64,
    pub seed: u64,
}

impl Default for BesselConfig {
    fn default() -> Self {
        BesselConfig {
            d: 2,
            eps_list: vec![0.25, 0.5, 1.0],
            budget: DEFAULT_NORM_BUDGET,
            mc_samples: 20_000,
            seed: 0,
        }
    }
}

fn evaluate<T: Real>(f: &FunctionTable<T>, qs: Vec<ShiftSet>, cfg: &BesselConfig, label: &[u64]) -> NormOutcome {
    let d = qs.len();
    match box_norm_exact(f, &qs, d, cfg.budget) {
        Err(e) if e.is_resource() && cfg.mc_samples > 0 => box_norm_mc(f, &qs, d, cfg.mc_samples, derive_seed(cfg.seed, label)).into(),
        other => other.into(),
    }
}

/// Builds both sides for every `eps` in the configuration.
pub fn bessel_scan<T: Real>(
    f: &FunctionTable<T>,
    family: &BesselFamily,
    cfg: &BesselConfig,
) -> Result<Vec<BesselReport>> {
    if cfg.d == 0 {
        return Err(Error::argument("d must be at least 1"));
    }
    if family.len() == 0 {
        return Err(Error::argument("the progression family is empty"));
    }
    if let Some(bad) = cfg.eps_list.iter().find(|e| e.is_nan() || **e <= 0.0 || !e.is_finite()) {
        return Err(Error::argument(format!("eps must be positive, got {bad}")));
    }
    let all: Vec<&CosetProgression> = match family {
        BesselFamily::Uniform(v) => v.iter().collect(),
        BesselFamily::Box(v) => {
            if let Some(bad) = v.iter().find(|row| row.len() != cfg.d) {
                return Err(Error::argument(format!(
                    "box family rows need {} progressions, found {}",
                    cfg.d,
                    bad.len()
                )));
            }
            v.iter().flatten().collect()
        }
    };
    if let Some(q) = all.iter().find(|q| q.group() != f.group()) {
        return Err(Error::structural(format!(
            "progression in {} but function on {}",
            q.group(),
            f.group()
        )));
    }

    let n = family.len();
    let d = cfg.d;
    let singles: Vec<IndexEntry> = (0..n)
        .into_par_iter()
        .map(|i| {
            let qs: Vec<ShiftSet> = match family {
                BesselFamily::Uniform(v) => vec![v[i].clone().into(); d],
                BesselFamily::Box(v) => v[i].iter().cloned().map(Into::into).collect(),
            };
            IndexEntry {
                i,
                norm: evaluate(f, qs, cfg, &[0, i as u64]),
            }
        })
        .collect();
    let rhs = mean(singles.iter().filter_map(|s| s.norm.value()));

    let mut reports = Vec::with_capacity(cfg.eps_list.len());
    for (e_idx, &eps) in cfg.eps_list.iter().enumerate() {
        let pairs: Vec<PairEntry> = (0..n * n)
            .into_par_iter()
            .map(|t| {
                let (i, j) = (t / n, t % n);
                let label = [1, e_idx as u64, i as u64, j as u64];
                let qs: Result<Vec<ShiftSet>> = match family {
                    BesselFamily::Uniform(v) => v[i]
                        .dilate(eps)
                        .and_then(|a| a.sum(&v[j].dilate(eps)?))
                        .map(|q| vec![q.into(); 2 * d - 1]),
                    BesselFamily::Box(v) => {
                        let mut qs = Vec::with_capacity(d * d);
                        let mut err = None;
                        for a in &v[i] {
                            for b in &v[j] {
                                match a.dilate(eps).and_then(|a| a.sum(&b.dilate(eps)?)) {
                                    Ok(q) => qs.push(q.into()),
                                    Err(e) => err = Some(e),
                                }
                            }
                        }
                        match err {
                            Some(e) => Err(e),
                            None => Ok(qs),
                        }
                    }
                };
                let norm = match qs {
                    Ok(qs) => evaluate(f, qs, cfg, &label),
                    Err(e) => Err(e).into(),
                };
                PairEntry { i, j, norm }
            })
            .collect();
        let lhs = mean(pairs.iter().filter_map(|p| p.norm.value()));
        let complete = pairs.iter().all(|p| p.norm.error.is_none()) && singles.iter().all(|s| s.norm.error.is_none());
        reports.push(BesselReport {
            eps,
            lhs,
            rhs,
            hypothesis_holds: lhs <= eps,
            complete,
            pairs,
            singles: singles.clone(),
        });
    }
    Ok(reports)
}

/// `f = (f_1 + f_2) / 2` with `f_1` constant on `Q_1`-cosets and random
/// signs across them, `f_2` the same for `Q_2`.
#[derive(Clone, Debug)]
pub struct CounterexamplePair<T: Real> {
    pub f1: FunctionTable<T>,
    pub f2: FunctionTable<T>,
    pub f: FunctionTable<T>,
}

/// Random signs constant on each coset of `h`; the stream is keyed by the
/// subgroup itself so that the construction is symmetric in its inputs.
fn coset_signs<T: Real>(h: &Subgroup, seed: u64) -> FunctionTable<T> {
    let group = h.group();
    let n = group.len();
    let mut label = vec![usize::MAX; n];
    let mut next = 0usize;
    for x in 0..n {
        if label[x] == usize::MAX {
            for &y in h.indices() {
                label[group.add_indices(x, y)] = next;
            }
            next += 1;
        }
    }
    let key: Vec<u64> = h.indices().iter().map(|&i| i as u64).collect();
    let stream = derive_seed(seed, &key);
    let signs: Vec<T> = (0..next)
        .map(|c| {
            use rand::Rng;
            if draw_rng(stream, c as u64).gen::<bool>() { T::one() } else { -T::one() }
        })
        .collect();
    FunctionTable::from_parts(
        group.clone(),
        label.iter().map(|&c| num_complex::Complex::new(signs[c], T::zero())).collect(),
    )
}

pub fn counterexample_pair<T: Real>(
    group: &GroupSpec,
    q1: &Subgroup,
    q2: &Subgroup,
    seed: u64,
) -> Result<CounterexamplePair<T>> {
    for q in [q1, q2] {
        if q.group() != group {
            return Err(Error::structural("subgroup of a different group"));
        }
        if q.index_in_group() < 2 {
            return Err(Error::argument(
                "each subgroup needs index at least 2, otherwise its invariant function is constant",
            ));
        }
    }
    let f1 = coset_signs::<T>(q1, seed);
    let f2 = coset_signs::<T>(q2, seed);
    let half = num_complex::Complex::new(T::of(0.5), T::zero());
    let f = f1.add(&f2)?.scale(half);
    Ok(CounterexamplePair { f1, f2, f })
}

/// Norms measured on a counterexample pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub d1: usize,
    pub d2: usize,
    pub eps: f64,
    /// `||f_1||` over `Q_1` with order `d1`.
    pub f1_own: NormOutcome,
    /// `||f_1||` over `Q_2` with order `d2`.
    pub f1_cross: NormOutcome,
    pub f2_own: NormOutcome,
    pub f2_cross: NormOutcome,
    /// `||f||` over `Q_1` (order `d1`) and `Q_2` (order `d2`).
    pub f_first: NormOutcome,
    pub f_second: NormOutcome,
    /// `||f||_{U^{d1+d2-1}_{eps Q_1 + eps Q_2}}`.
    pub combined: NormOutcome,
}

#[allow(clippy::too_many_arguments)]
pub fn counterexample_report<T: Real>(
    pair: &CounterexamplePair<T>,
    q1: &Subgroup,
    q2: &Subgroup,
    d1: usize,
    d2: usize,
    eps: f64,
    budget: u128,
    mc_samples: u64,
    seed: u64,
) -> Result<CounterexampleReport> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::argument("d1 and d2 must be at least 1"));
    }
    let p1 = CosetProgression::from_subgroup(q1.clone());
    let p2 = CosetProgression::from_subgroup(q2.clone());
    let combined = p1.dilate(eps)?.sum(&p2.dilate(eps)?)?;
    let cfg = BesselConfig {
        d: 1,
        eps_list: vec![eps],
        budget,
        mc_samples,
        seed,
    };
    let u = |f: &FunctionTable<T>, q: &CosetProgression, d: usize, tag: u64| {
        evaluate(f, vec![q.clone().into(); d], &cfg, &[2, tag])
    };
    Ok(CounterexampleReport {
        d1,
        d2,
        eps,
        f1_own: u(&pair.f1, &p1, d1, 0),
        f1_cross: u(&pair.f1, &p2, d2, 1),
        f2_own: u(&pair.f2, &p2, d2, 2),
        f2_cross: u(&pair.f2, &p1, d1, 3),
        f_first: u(&pair.f, &p1, d1, 4),
        f_second: u(&pair.f, &p2, d2, 5),
        combined: u(&pair.f, &combined, d1 + d2 - 1, 6),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::approx_eq;

    type Table = FunctionTable<f64>;

    fn family(g: &GroupSpec, steps: &[i64], bound: f64) -> Vec<CosetProgression> {
        steps
            .iter()
            .map(|&s| CosetProgression::arithmetic(g, g.element(&[s]).unwrap(), bound).unwrap())
            .collect()
    }

    #[test]
    fn zero_function_gives_zero_curves() {
        let g = GroupSpec::cyclic(31).unwrap();
        let fam = BesselFamily::Uniform(family(&g, &[1, 3, 7], 3.0));
        let reports = bessel_scan(&Table::zeros(&g), &fam, &BesselConfig::default()).unwrap();
        for r in reports {
            assert_eq!(r.lhs, 0.0);
            assert_eq!(r.rhs, 0.0);
            assert!(r.hypothesis_holds);
            assert!(r.complete);
        }
    }

    #[test]
    fn constant_one_is_vacuous_below_one() {
        let g = GroupSpec::cyclic(31).unwrap();
        let fam = BesselFamily::Uniform(family(&g, &[1, 3], 3.0));
        let cfg = BesselConfig { eps_list: vec![0.5, 1.0], ..Default::default() };
        let reports = bessel_scan(&Table::ones(&g), &fam, &cfg).unwrap();
        assert!((reports[0].lhs - 1.0).abs() < 1e-12);
        assert!((reports[0].rhs - 1.0).abs() < 1e-12);
        assert!(!reports[0].hypothesis_holds);
        assert!(reports[1].hypothesis_holds);
    }

    #[test]
    fn pairs_are_ordered_with_diagonal_and_aggregates_recompute() {
        let g = GroupSpec::cyclic(61).unwrap();
        let fam = BesselFamily::Uniform(family(&g, &[1, 5, 11], 4.0));
        let f = Table::random_signs(&g, 3);
        let reports = bessel_scan(&f, &fam, &BesselConfig { eps_list: vec![0.5], ..Default::default() }).unwrap();
        let r = &reports[0];
        assert_eq!(r.pairs.len(), 9);
        assert!(r.pairs.iter().any(|p| p.i == p.j));
        let (lhs, rhs) = r.recompute();
        assert_eq!(lhs, r.lhs);
        assert_eq!(rhs, r.rhs);
        let diag_min = r.pairs.iter().filter(|p| p.i == p.j).filter_map(|p| p.norm.value()).fold(f64::INFINITY, f64::min);
        assert!(r.lhs >= diag_min / 3.0);
    }

    #[test]
    fn errors_annotate_rather_than_abort() {
        let g = GroupSpec::cyclic(61).unwrap();
        let fam = BesselFamily::Uniform(family(&g, &[1, 2], 10.0));
        let cfg = BesselConfig { budget: 10, mc_samples: 0, eps_list: vec![1.0], ..Default::default() };
        let r = &bessel_scan(&Table::ones(&g), &fam, &cfg).unwrap()[0];
        assert!(!r.complete);
        assert!(r.pairs.iter().all(|p| p.norm.error.is_some()));
    }

    #[test]
    fn monte_carlo_above_budget() {
        let g = GroupSpec::cyclic(61).unwrap();
        let fam = BesselFamily::Uniform(family(&g, &[1], 10.0));
        let cfg = BesselConfig { budget: 10, mc_samples: 500, eps_list: vec![1.0], ..Default::default() };
        let r = &bessel_scan(&Table::ones(&g), &fam, &cfg).unwrap()[0];
        let n = r.pairs[0].norm.result.as_ref().unwrap();
        assert_eq!(n.samples, 500);
        assert_eq!(n.value, 1.0);
    }

    #[test]
    fn nested_eps_with_equal_floors_agree() {
        let g = GroupSpec::cyclic(61).unwrap();
        let fam = BesselFamily::Uniform(family(&g, &[1, 4], 10.0));
        let f = Table::random_signs(&g, 8);
        // bounds 5.0 and 5.9 floor to the same index space
        let cfg = BesselConfig { eps_list: vec![0.5, 0.59], ..Default::default() };
        let r = bessel_scan(&f, &fam, &cfg).unwrap();
        assert_eq!(r[0].lhs, r[1].lhs);
    }

    #[test]
    fn box_family_reduces_to_uniform_for_repeated_rows() {
        let g = GroupSpec::cyclic(23).unwrap();
        let qs = family(&g, &[1, 3], 2.0);
        let f = Table::random_complex(&g, 4);
        let cfg = BesselConfig { d: 1, eps_list: vec![1.0], ..Default::default() };
        let uni = bessel_scan(&f, &BesselFamily::Uniform(qs.clone()), &cfg).unwrap();
        let boxed = bessel_scan(&f, &BesselFamily::Box(qs.iter().map(|q| vec![q.clone()]).collect()), &cfg).unwrap();
        assert!(approx_eq(uni[0].lhs, boxed[0].lhs, 1e-12, 1e-14));
        assert!(approx_eq(uni[0].rhs, boxed[0].rhs, 1e-12, 1e-14));
    }

    fn rows_cols(p: u64) -> (GroupSpec, Subgroup, Subgroup) {
        let g = GroupSpec::new(vec![p, p]).unwrap();
        let rows = Subgroup::generate(&g, vec![g.element(&[1, 0]).unwrap()]).unwrap();
        let cols = Subgroup::generate(&g, vec![g.element(&[0, 1]).unwrap()]).unwrap();
        (g, rows, cols)
    }

    #[test]
    fn counterexample_structure() {
        let (g, rows, cols) = rows_cols(16);
        let pair = counterexample_pair::<f64>(&g, &rows, &cols, 5).unwrap();
        for x in g.elements() {
            let shifted = g.add(&x, &g.element(&[1, 0]).unwrap()).unwrap();
            assert_eq!(pair.f1.at(&x).unwrap(), pair.f1.at(&shifted).unwrap());
        }
        assert!(pair.f.sup_norm() <= 1.0);
        let swapped = counterexample_pair::<f64>(&g, &cols, &rows, 5).unwrap();
        assert_eq!(swapped.f1, pair.f2);
        assert_eq!(swapped.f2, pair.f1);
    }

    #[test]
    fn counterexample_rejects_whole_group() {
        let (g, rows, _) = rows_cols(8);
        let whole = Subgroup::whole(&g).unwrap();
        assert!(matches!(counterexample_pair::<f64>(&g, &whole, &rows, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn counterexample_norms() {
        let (g, rows, cols) = rows_cols(32);
        let pair = counterexample_pair::<f64>(&g, &rows, &cols, 11).unwrap();
        let r = counterexample_report(&pair, &rows, &cols, 2, 2, 0.5, DEFAULT_NORM_BUDGET, 4000, 1).unwrap();
        assert!((r.f1_own.value().unwrap() - 1.0).abs() < 1e-12);
        assert!(r.f1_cross.value().unwrap() < 0.6);
        assert!((r.f2_own.value().unwrap() - 1.0).abs() < 1e-12);
    }
}
