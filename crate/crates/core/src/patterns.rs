//! The four-point average `A_{N,M}`, local uniformity norms along dilated
//! progressions, multiplicity profiles of `n Q + m Q`, and Möbius runs.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::mobius_sieve;
use crate::error::{Error, Result};
use crate::funcspace::{FunctionTable, Spectrum};
use crate::gowers::{box_norm_exact, box_norm_mc, Method, NormResult};
use crate::group::GroupSpec;
use crate::progression::{floor_bound, CosetProgression, ShiftSet, DEFAULT_ENUMERATION_CAP};
use crate::group::Subgroup;
use crate::sampling::{draw_rng, ordered_complex_moments, ordered_sum};
use crate::scalar::Real;

/// Default cap on `N * M^3` for the exact four-point average.
pub const DEFAULT_PATTERN_BUDGET: u128 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternAverage {
    pub n: u64,
    pub m: u64,
    pub value: Complex<f64>,
    pub method: Method,
    pub samples: u64,
    pub std_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PatternMethod {
    Exact { budget: u128 },
    MonteCarlo { samples: u64, seed: u64 },
}

fn cyclic_order<T: Real>(fs: &[&FunctionTable<T>; 4]) -> Result<u64> {
    let g = fs[0].group();
    if !g.is_cyclic() {
        return Err(Error::structural(format!("the four-point average needs Z/NZ, got {g}")));
    }
    if fs.iter().any(|f| f.group() != g) {
        return Err(Error::structural("the four tables live on different groups"));
    }
    Ok(g.order())
}

/// `E_{x in Z/N} E_{n,m,k in [M]} f1(x) f2(x+nm) f3(x+nk) f4(x+nm+nk)`,
/// with `[M] = {1, ..., M}`.
pub fn pattern_average<T: Real>(fs: [&FunctionTable<T>; 4], m: u64, method: PatternMethod) -> Result<PatternAverage> {
    let n = cyclic_order(&fs)?;
    pattern_average_over(fs, m, method, n)
}

/// Same average with `x` restricted to `1..=x_range` (all of `Z/N` when
/// `x_range = N`) and renormalized by `x_range`.
fn pattern_average_over<T: Real>(
    fs: [&FunctionTable<T>; 4],
    m: u64,
    method: PatternMethod,
    x_range: u64,
) -> Result<PatternAverage> {
    let n = cyclic_order(&fs)?;
    if m == 0 {
        return Err(Error::argument("M must be at least 1"));
    }
    let full = x_range == n;
    let x_of = |i: u64| if full { i } else { (i + 1) % n };
    let vals: [Vec<Complex<f64>>; 4] =
        std::array::from_fn(|i| fs[i].values().iter().map(|v| Complex::new(v.re.as_f64(), v.im.as_f64())).collect());
    let nn = n as usize;
    let term = |x: usize, a: u64, b: u64, c: u64| {
        let nm = (a * b % n) as usize;
        let nk = (a * c % n) as usize;
        vals[0][x] * vals[1][(x + nm) % nn] * vals[2][(x + nk) % nn] * vals[3][(x + nm + nk) % nn]
    };
    match method {
        PatternMethod::Exact { budget } => {
            let cost = (x_range as u128).saturating_mul((m as u128).pow(3));
            if cost > budget {
                return Err(Error::resource("exact four-point average (use monte_carlo)", cost, budget));
            }
            let total = ordered_sum::<f64, _>(x_range as usize, |i| {
                let x = x_of(i as u64) as usize;
                if vals[0][x] == Complex::new(0.0, 0.0) {
                    return Complex::new(0.0, 0.0);
                }
                let mut acc = Complex::new(0.0, 0.0);
                for a in 1..=m {
                    for b in 1..=m {
                        for c in 1..=m {
                            acc += term(x, a, b, c);
                        }
                    }
                }
                acc
            });
            Ok(PatternAverage {
                n,
                m,
                value: total / (x_range as f64 * (m as f64).powi(3)),
                method: Method::Exact,
                samples: 0,
                std_error: 0.0,
            })
        }
        PatternMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::argument("Monte-Carlo estimation needs at least one sample"));
            }
            let mo = ordered_complex_moments(samples, |i| {
                let mut rng = draw_rng(seed, i);
                let x = x_of(rng.gen_range(0..x_range)) as usize;
                let (a, b, c) = (rng.gen_range(1..=m), rng.gen_range(1..=m), rng.gen_range(1..=m));
                let t = term(x, a, b, c);
                (t.re, t.im)
            });
            Ok(PatternAverage {
                n,
                m,
                value: Complex::new(mo.re.mean(), mo.im.mean()),
                method: Method::MonteCarlo,
                samples,
                std_error: mo.std_error(),
            })
        }
    }
}

/// Which arithmetic weight the Möbius experiment correlates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArithmeticWeight {
    Mobius,
    MobiusSquared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusRun {
    pub weight: ArithmeticWeight,
    pub embed_factor: u64,
    /// Average normalized over `x in [N]`.
    pub average: PatternAverage,
    /// Integer sum `sum_{x in [N]} sum_{n,m,k}` of the products, exact mode only.
    pub exact_sum: Option<i64>,
}

/// `E_{x in [N]} E_{n,m,k in [M]} mu(x) mu(x+nm) mu(x+nk) mu(x+nm+nk)` with
/// `mu` supported on `[N]` inside `Z/(embed_factor N)`; `M` defaults to
/// `floor(sqrt N)`.
pub fn mobius_experiment(
    n: u64,
    m: Option<u64>,
    embed_factor: u64,
    weight: ArithmeticWeight,
    method: PatternMethod,
    sieve_cap: u64,
) -> Result<MobiusRun> {
    if n == 0 || embed_factor == 0 {
        return Err(Error::argument("N and the embedding factor must be at least 1"));
    }
    let m = m.unwrap_or_else(|| (n as f64).sqrt().floor() as u64).max(1);
    let mu = mobius_sieve(n, sieve_cap)?;
    let order = n
        .checked_mul(embed_factor)
        .ok_or_else(|| Error::argument("embedded group order overflows"))?;
    let mut w = vec![0i8; order as usize];
    for x in 1..=n as usize {
        let v = mu[x];
        w[x % order as usize] = match weight {
            ArithmeticWeight::Mobius => v,
            ArithmeticWeight::MobiusSquared => v * v,
        };
    }
    match method {
        PatternMethod::Exact { budget } => {
            let cost = (n as u128).saturating_mul((m as u128).pow(3));
            if cost > budget {
                return Err(Error::resource("exact Möbius average (use monte_carlo)", cost, budget));
            }
            let len = order as usize;
            // integer arithmetic keeps the baseline bit-exact
            let sum: i64 = (1..=n as usize)
                .into_par_iter()
                .map(|x| {
                    let w0 = w[x % len] as i64;
                    if w0 == 0 {
                        return 0;
                    }
                    let mut acc = 0i64;
                    for a in 1..=m as usize {
                        for b in 1..=m as usize {
                            let p = (x + a * b) % len;
                            let wp = w[p] as i64;
                            if wp == 0 {
                                continue;
                            }
                            for c in 1..=m as usize {
                                let q = (x + a * c) % len;
                                let r = (x + a * b + a * c) % len;
                                acc += wp * w[q] as i64 * w[r] as i64;
                            }
                        }
                    }
                    w0 * acc
                })
                .sum();
            Ok(MobiusRun {
                weight,
                embed_factor,
                average: PatternAverage {
                    n,
                    m,
                    value: Complex::new(sum as f64 / (n as f64 * (m as f64).powi(3)), 0.0),
                    method: Method::Exact,
                    samples: 0,
                    std_error: 0.0,
                },
                exact_sum: Some(sum),
            })
        }
        PatternMethod::MonteCarlo { .. } => {
            let group = GroupSpec::cyclic(order)?;
            let table = FunctionTable::<f64>::from_real(&group, &w.iter().map(|&v| v as f64).collect::<Vec<_>>())?;
            let mut average = pattern_average_over([&table, &table, &table, &table], m, method, n)?;
            average.n = n;
            Ok(MobiusRun {
                weight,
                embed_factor,
                average,
                exact_sum: None,
            })
        }
    }
}

/// `n . Q` for `Q = {a : |a| <= kappa sqrt N}` as a rank-1 progression.
pub fn dilated_interval(group: &GroupSpec, n: u64, kappa: f64) -> Result<CosetProgression> {
    if !group.is_cyclic() {
        return Err(Error::structural(format!("expected a cyclic group, got {group}")));
    }
    let bound = kappa * (group.order() as f64).sqrt();
    if bound.is_nan() || bound < 1.0 {
        return Err(Error::argument(format!("kappa sqrt(N) = {bound} must be at least 1")));
    }
    CosetProgression::new(
        Subgroup::trivial(group),
        vec![group.element(&[n as i64])?],
        vec![bound],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalNorm {
    pub n: u64,
    pub norm: NormResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalChain {
    pub d: usize,
    pub kappa: f64,
    pub entries: Vec<LocalNorm>,
    pub average: f64,
}

/// `||f||_{U^d_{n Q}}` for each `n` in `n_list` (default `1..=M`), exact
/// within `budget` and Monte-Carlo otherwise (`mc_samples = 0` turns the
/// fallback off and surfaces the resource error).
#[allow(clippy::too_many_arguments)]
pub fn local_norm_chain<T: Real>(
    f: &FunctionTable<T>,
    m: u64,
    kappa: f64,
    n_list: Option<&[u64]>,
    d: usize,
    budget: u128,
    mc_samples: u64,
    seed: u64,
) -> Result<LocalChain> {
    let default: Vec<u64> = (1..=m).collect();
    let ns = n_list.unwrap_or(&default);
    if ns.is_empty() {
        return Err(Error::argument("no dilation factors given"));
    }
    let entries: Vec<LocalNorm> = ns
        .par_iter()
        .map(|&n| {
            let q: ShiftSet = dilated_interval(f.group(), n, kappa)?.into();
            let qs = vec![q; d];
            let norm = match box_norm_exact(f, &qs, d, budget) {
                Err(e) if e.is_resource() && mc_samples > 0 => box_norm_mc(f, &qs, d, mc_samples, crate::sampling::derive_seed(seed, &[n])),
                other => other,
            }?;
            Ok(LocalNorm { n, norm })
        })
        .collect::<Result<_>>()?;
    let average = entries.iter().map(|e| e.norm.value).sum::<f64>() / entries.len() as f64;
    Ok(LocalChain { d, kappa, entries, average })
}

#[derive(Clone, Debug)]
pub struct MultiplicityProfile {
    /// `nu(a)`: number of `(a_1, a_2)` in the index box with `n a_1 + m a_2 = a`.
    pub nu: FunctionTable<f64>,
    /// `nu_2(a) = E_b nu(b) nu(a - b)`.
    pub nu2: FunctionTable<f64>,
    /// Fourier coefficients `c_xi` of `nu_2`.
    pub spectrum: Spectrum<f64>,
    pub l1_spectrum: f64,
    /// `E_a nu(a)^2`.
    pub mean_nu_sq: f64,
    pub total_mass: u64,
    /// `floor(kappa sqrt N)`.
    pub bound: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicitySummary {
    pub n_group: u64,
    pub bound: i64,
    pub l1_spectrum: f64,
    pub mean_nu_sq: f64,
    pub total_mass: u64,
    pub nu_max: f64,
}

impl MultiplicityProfile {
    pub fn summary(&self) -> MultiplicitySummary {
        MultiplicitySummary {
            n_group: self.nu.group().order(),
            bound: self.bound,
            l1_spectrum: self.l1_spectrum,
            mean_nu_sq: self.mean_nu_sq,
            total_mass: self.total_mass,
            nu_max: self.nu.sup_norm(),
        }
    }
}

/// Multiplicities of `n Q + m Q` in `Z/N` for `Q = {|a| <= kappa sqrt N}`.
pub fn multiplicity_profile(big_n: u64, n: u64, m: u64, kappa: f64) -> Result<MultiplicityProfile> {
    let group = GroupSpec::cyclic(big_n)?;
    let q = dilated_interval(&group, n, kappa)?.sum(&dilated_interval(&group, m, kappa)?)?;
    let hist = q.index_space().histogram(DEFAULT_ENUMERATION_CAP)?;
    let mut nu_vals = vec![0.0f64; group.len()];
    for (i, c) in hist.index_entries() {
        nu_vals[i] = c as f64;
    }
    let nu = FunctionTable::from_real(&group, &nu_vals)?;
    let nu_hat = nu.dft();
    let c: Vec<Complex<f64>> = nu_hat.coefficients().iter().map(|z| z * z).collect();
    let spectrum = Spectrum::new(group.clone(), c)?;
    let nu2 = spectrum.idft();
    let mean_nu_sq = nu_vals.iter().map(|v| v * v).sum::<f64>() / big_n as f64;
    Ok(MultiplicityProfile {
        l1_spectrum: spectrum.l1_mass(),
        nu,
        nu2,
        spectrum,
        mean_nu_sq,
        total_mass: hist.total(),
        bound: interval_bound(big_n, kappa),
    })
}

/// Bound `floor(kappa sqrt N)` used for the index box.
pub fn interval_bound(big_n: u64, kappa: f64) -> i64 {
    floor_bound(kappa * (big_n as f64).sqrt())
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::DEFAULT_SIEVE_CAP;
    use crate::gowers::DEFAULT_NORM_BUDGET;
    use crate::scalar::approx_eq;

    type Table = FunctionTable<f64>;

    fn exact() -> PatternMethod {
        PatternMethod::Exact { budget: DEFAULT_PATTERN_BUDGET }
    }

    /// Literal quadruple loop with explicit modular reductions.
    fn brute(fs: [&Table; 4], m: u64) -> Complex<f64> {
        let g = fs[0].group();
        let n = g.order() as i64;
        let at = |f: &Table, x: i64| f.at(&g.element(&[x.rem_euclid(n)]).unwrap()).unwrap();
        let mut acc = Complex::new(0.0, 0.0);
        for x in 0..n {
            for a in 1..=m as i64 {
                for b in 1..=m as i64 {
                    for c in 1..=m as i64 {
                        acc += at(fs[0], x) * at(fs[1], x + a * b) * at(fs[2], x + a * c) * at(fs[3], x + a * b + a * c);
                    }
                }
            }
        }
        acc / (n as f64 * (m as f64).powi(3))
    }

    #[test]
    fn ones_give_one() {
        let g = GroupSpec::cyclic(50).unwrap();
        let one = Table::ones(&g);
        let r = pattern_average([&one; 4], 7, exact()).unwrap();
        assert_eq!(r.value, Complex::new(1.0, 0.0));
    }

    #[test]
    fn character_in_last_slot_vanishes() {
        let g = GroupSpec::cyclic(64).unwrap();
        let one = Table::ones(&g);
        let chi = Table::character(&g, &g.element(&[1]).unwrap()).unwrap();
        let r = pattern_average([&one, &one, &one, &chi], 8, exact()).unwrap();
        assert!(r.value.norm() < 1e-12);
    }

    #[test]
    fn exact_matches_brute_force() {
        let g = GroupSpec::cyclic(37).unwrap();
        let fs: Vec<Table> = (0..4).map(|i| Table::random_complex(&g, i)).collect();
        let r = pattern_average([&fs[0], &fs[1], &fs[2], &fs[3]], 5, exact()).unwrap();
        let b = brute([&fs[0], &fs[1], &fs[2], &fs[3]], 5);
        assert!((r.value - b).norm() < 1e-12);
    }

    #[test]
    fn multilinear_and_real() {
        let g = GroupSpec::cyclic(41).unwrap();
        let f: Vec<Table> = (0..5).map(|i| Table::random_complex(&g, 10 + i)).collect();
        let alpha = Complex::new(0.3, -1.2);
        let comb = f[0].scale(alpha).add(&f[4]).unwrap();
        let lhs = pattern_average([&comb, &f[1], &f[2], &f[3]], 6, exact()).unwrap().value;
        let a = pattern_average([&f[0], &f[1], &f[2], &f[3]], 6, exact()).unwrap().value;
        let b = pattern_average([&f[4], &f[1], &f[2], &f[3]], 6, exact()).unwrap().value;
        assert!((lhs - (alpha * a + b)).norm() < 1e-12);

        let r: Vec<Table> = (0..4).map(|i| Table::random_signs(&g, 20 + i)).collect();
        let v = pattern_average([&r[0], &r[1], &r[2], &r[3]], 6, exact()).unwrap().value;
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn bounded_by_sup_norms() {
        let g = GroupSpec::cyclic(30).unwrap();
        let f: Vec<Table> = (0..4).map(|i| Table::random_complex(&g, 30 + i)).collect();
        let v = pattern_average([&f[0], &f[1], &f[2], &f[3]], 5, exact()).unwrap().value.norm();
        let bound: f64 = f.iter().map(|t| t.sup_norm()).product();
        assert!(v <= bound);
    }

    #[test]
    fn exact_budget_suggests_monte_carlo() {
        let g = GroupSpec::cyclic(1000).unwrap();
        let one = Table::ones(&g);
        let err = pattern_average([&one; 4], 100, PatternMethod::Exact { budget: 1000 }).unwrap_err();
        assert!(err.is_resource());
        assert!(err.to_string().contains("monte_carlo"));
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let g = GroupSpec::cyclic(256).unwrap();
        let mut within = 0;
        for t in 0..20u64 {
            let f: Vec<Table> = (0..4).map(|i| Table::random_signs(&g, 100 * t + i)).collect();
            let fs = [&f[0], &f[1], &f[2], &f[3]];
            let e = pattern_average(fs, 16, exact()).unwrap().value;
            let mc = pattern_average(fs, 16, PatternMethod::MonteCarlo { samples: 20_000, seed: t }).unwrap();
            if (mc.value - e).norm() <= 4.0 * mc.std_error {
                within += 1;
            }
        }
        assert!(within >= 19, "{within}/20");
    }

    #[test]
    fn mobius_exact_matches_generic_path() {
        let run = mobius_experiment(200, None, 5, ArithmeticWeight::Mobius, exact(), DEFAULT_SIEVE_CAP).unwrap();
        assert_eq!(run.average.m, 14);
        let table = Table::mobius(200, 5).unwrap();
        let generic = pattern_average([&table; 4], 14, exact()).unwrap().value.re * 5.0;
        assert!(approx_eq(run.average.value.re, generic, 1e-9, 1e-12));
    }

    #[test]
    fn mobius_monte_carlo_tracks_exact() {
        let e = mobius_experiment(400, None, 5, ArithmeticWeight::Mobius, exact(), DEFAULT_SIEVE_CAP).unwrap();
        let mc = mobius_experiment(
            400,
            None,
            5,
            ArithmeticWeight::Mobius,
            PatternMethod::MonteCarlo { samples: 200_000, seed: 2 },
            DEFAULT_SIEVE_CAP,
        )
        .unwrap();
        assert!((mc.average.value - e.average.value).norm() <= 4.0 * mc.average.std_error);
    }

    #[test]
    fn mobius_squared_is_bounded_away_from_zero() {
        let sq = mobius_experiment(1000, None, 5, ArithmeticWeight::MobiusSquared, exact(), DEFAULT_SIEVE_CAP).unwrap();
        let mu = mobius_experiment(1000, None, 5, ArithmeticWeight::Mobius, exact(), DEFAULT_SIEVE_CAP).unwrap();
        assert!(sq.average.value.re > 0.05);
        assert!(sq.average.value.re > 3.0 * mu.average.value.re.abs());
    }

    #[test]
    fn local_chain_of_constant() {
        let g = GroupSpec::cyclic(101).unwrap();
        let c = local_norm_chain(&Table::ones(&g), 5, 0.5, None, 2, DEFAULT_NORM_BUDGET, 100, 0).unwrap();
        assert_eq!(c.entries.len(), 5);
        for e in &c.entries {
            assert!((e.norm.value - 1.0).abs() < 1e-12);
        }
        assert!(local_norm_chain(&Table::ones(&g), 5, 0.05, None, 2, DEFAULT_NORM_BUDGET, 100, 0).is_err());
    }

    #[test]
    fn small_multiplicity_profile() {
        // kappa sqrt N = 1 exactly for N = 25
        let p = multiplicity_profile(25, 1, 1, 0.2).unwrap();
        let expect = [(0usize, 3.0), (1, 2.0), (24, 2.0), (2, 1.0), (23, 1.0)];
        for (i, v) in expect {
            assert_eq!(p.nu.values()[i].re, v);
        }
        assert_eq!(p.nu.values().iter().map(|v| v.re).sum::<f64>(), 9.0);
        assert_eq!(p.total_mass, 9);
    }

    #[test]
    fn total_mass_is_box_size() {
        let n = 1009;
        let kappa = 0.3;
        let b = interval_bound(n, kappa);
        let p = multiplicity_profile(n, 3, 17, kappa).unwrap();
        assert_eq!(p.total_mass, ((2 * b + 1) * (2 * b + 1)) as u64);
    }

    #[test]
    fn nu2_matches_direct_convolution() {
        let n = 512u64;
        let p = multiplicity_profile(n, 5, 21, 0.7).unwrap();
        let nu: Vec<f64> = p.nu.values().iter().map(|v| v.re).collect();
        for a in 0..n as usize {
            let direct: f64 = (0..n as usize).map(|b| nu[b] * nu[(a + n as usize - b) % n as usize]).sum::<f64>() / n as f64;
            assert!(approx_eq(p.nu2.values()[a].re, direct, 1e-9, 1e-9), "a={a}");
        }
        // symmetric nu: coefficients are nonnegative and sum to nu_2(0)
        assert!(p.spectrum.coefficients().iter().all(|c| c.re >= -1e-9 && c.im.abs() < 1e-9));
        assert!(approx_eq(p.l1_spectrum, p.nu2.values()[0].re, 1e-9, 1e-9));
    }
}
