//! Acceptance suite: one PASS/FAIL line per criterion, run serially so the
//! timing limits measure the criterion alone. Expected values come from
//! independent oracles written here (naive DFT, brute-force sums) or from
//! the committed pilot files under `baselines/`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use gowers_core::gowers::{
    box_norm_exact, box_norm_mc, dual_function, dual_norm_lower_bound, dual_norm_oracle_tiny, gowers_inner_product,
    uniformity_norm,
};
use gowers_core::patterns::{mobius_experiment, pattern_average, PatternMethod, DEFAULT_PATTERN_BUDGET};
use gowers_core::polyrank::{concat_property_test, degree_check, rank_check, ConcatFamily, DEFAULT_POLY_BUDGET};
use gowers_core::{
    CheckMode, Complex, CosetProgression, DualSearch, GroupSpec, Modular, Multiset, PolyFunction, ShiftSet, Subgroup,
    Table, DEFAULT_NORM_BUDGET,
};
use serde_json::Value;

const B: u128 = DEFAULT_NORM_BUDGET;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn whole(g: &GroupSpec) -> ShiftSet {
    Multiset::whole(g).into()
}

/// `hat f(xi) = E_x f(x) e(-x xi / N)` by the defining sum.
fn naive_dft(f: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let n = f.len();
    (0..n)
        .map(|xi| {
            f.iter()
                .enumerate()
                .map(|(x, v)| {
                    let t = -2.0 * std::f64::consts::PI * ((x * xi) % n) as f64 / n as f64;
                    v * Complex::new(t.cos(), t.sin())
                })
                .sum::<Complex<f64>>()
                / n as f64
        })
        .collect()
}

fn fourier_u2(f: &Table) -> f64 {
    naive_dft(f.values()).iter().map(|c| c.norm_sqr().powi(2)).sum::<f64>().powf(0.25)
}

fn c1_fourier_oracle() -> Check {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in [16u64, 64, 256, 101] {
        let g = GroupSpec::cyclic(n).unwrap();
        for t in 0..50 {
            let f = Table::random_complex(&g, 1_000 * n + t);
            let u = uniformity_norm(&f, &whole(&g), 2, B).map_err(|e| e.to_string())?.value;
            let o = fourier_u2(&f);
            let err = (u - o).abs() / u.max(1.0);
            worst = worst.max(err);
            ensure(err <= 1e-9, || format!("N={n} t={t}: {u} vs Fourier {o}"))?;
        }
    }
    let el = start.elapsed();
    ensure(el < Duration::from_secs(30), || format!("took {el:?}"))?;
    Ok(format!("200 tables, worst relative error {worst:.1e}, {:.2} s", el.as_secs_f64()))
}

fn c2_dual_identity() -> Check {
    let g = GroupSpec::cyclic(32).unwrap();
    let mut worst = 0.0f64;
    for t in 0..20 {
        let f = Table::random_complex(&g, 2_000 + t);
        let qs = vec![whole(&g), whole(&g)];
        let dual = dual_function(&g, &vec![f.clone(); 3], &qs, 2, B).map_err(|e| e.to_string())?;
        let lhs = f.inner(&dual).unwrap();
        let rhs = fourier_u2(&f).powi(4);
        let err = (lhs - Complex::new(rhs, 0.0)).norm();
        worst = worst.max(err);
        ensure(err <= 1e-9, || format!("t={t}: <f, D f> = {lhs}, norm^4 = {rhs}"))?;
    }
    Ok(format!("20 tables on Z/32, worst deviation {worst:.1e}"))
}

fn c3_mean_ergodic() -> Check {
    let g = GroupSpec::cyclic(12).unwrap();
    let mut worst = 0.0f64;
    let mut count = 0;
    for k in [1i64, 2, 3, 4, 6, 12] {
        let h = Subgroup::generate(&g, vec![g.element(&[k]).unwrap()]).unwrap();
        let q: ShiftSet = CosetProgression::from_subgroup(h.clone()).into();
        for t in 0..10 {
            let f = Table::random_complex(&g, 3_000 + t);
            let d1 = dual_function(&g, std::slice::from_ref(&f), std::slice::from_ref(&q), 1, B).map_err(|e| e.to_string())?;
            // independent projection: average over the coset x + H
            let proj: Vec<Complex<f64>> = (0..12)
                .map(|x| h.indices().iter().map(|&y| f.values()[(x + y) % 12]).sum::<Complex<f64>>() / h.order() as f64)
                .collect();
            let lib = f.invariant_projection(&h).unwrap();
            for ((a, b), c) in d1.values().iter().zip(lib.values()).zip(&proj) {
                worst = worst.max((a - c).norm().max((b - c).norm()));
            }
            count += 1;
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("6 subgroups x 10 tables ({count} cases), max deviation {worst:.1e}"))
}

fn c4_norm_properties() -> Check {
    let g = GroupSpec::new(vec![4, 6]).unwrap();
    let tol = 1e-9;
    let sets = |t: u64| -> Vec<ShiftSet> {
        let a = g.element(&[1 + (t % 3) as i64, 1 + (t % 5) as i64]).unwrap();
        let b = g.element(&[(t % 4) as i64, 3]).unwrap();
        vec![
            CosetProgression::arithmetic(&g, a, 1.0 + (t % 3) as f64 * 0.5).unwrap().into(),
            Multiset::from_elements(&g, &[g.zero(), b.clone(), b]).unwrap().into(),
            whole(&g),
        ]
    };
    let norm = |f: &Table, qs: &[ShiftSet]| box_norm_exact(f, qs, qs.len(), B).unwrap().value;
    let mut violations = Vec::new();
    for t in 0..200u64 {
        let qs = sets(t);
        let f = Table::random_complex(&g, 4_000 + t);
        let h = Table::random_complex(&g, 5_000 + t);
        // Cauchy-Schwarz-Gowers at d = 2
        let fs: Vec<Table> = (0..4).map(|w| Table::random_complex(&g, 6_000 + 4 * t + w)).collect();
        let ip = gowers_inner_product(&fs, &qs[..2], 2, B).unwrap().norm();
        let bound: f64 = fs.iter().map(|x| norm(x, &qs[..2])).product();
        if ip > bound + tol {
            violations.push(format!("csg t={t}"));
        }
        // monotonicity along prefixes
        let n: Vec<f64> = (1..=3).map(|d| norm(&f, &qs[..d])).collect();
        if n[0] > n[1] + tol || n[1] > n[2] + tol {
            violations.push(format!("monotone t={t}"));
        }
        // shift invariance
        let s = g.element(&[t as i64, 3 * t as i64 + 1]).unwrap();
        if (norm(&f.shift(&s).unwrap(), &qs) - n[2]).abs() > tol {
            violations.push(format!("shift t={t}"));
        }
        // modulation invariance at d = 2
        let chi = Table::character(&g, &g.element(&[(t % 4) as i64, (t % 6) as i64]).unwrap()).unwrap();
        if (norm(&f.mul(&chi).unwrap(), &qs[..2]) - n[1]).abs() > tol {
            violations.push(format!("modulation t={t}"));
        }
        // permutation invariance
        let perm = [qs[(t % 3) as usize].clone(), qs[((t + 2) % 3) as usize].clone(), qs[((t + 1) % 3) as usize].clone()];
        if (norm(&f, &perm) - n[2]).abs() > tol {
            violations.push(format!("permutation t={t}"));
        }
        // triangle inequality
        if norm(&f.add(&h).unwrap(), &qs) > n[2] + norm(&h, &qs) + tol {
            violations.push(format!("triangle t={t}"));
        }
    }
    ensure(violations.is_empty(), || format!("violations: {violations:?}"))?;
    Ok("6 properties x 200 trials, zero violations".into())
}

fn c5_concat_polynomial() -> Check {
    let start = Instant::now();
    let mut total = 0;
    let mut idx = 0u64;
    for (d1, d2) in [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 2), (2, 3), (3, 2)] {
        for (mix, trials) in [(false, 13), (true, 12)] {
            let fam = ConcatFamily::Polynomial { p: 5, d1, d2, mix };
            let r = concat_property_test(&fam, trials, 500 + idx, DEFAULT_POLY_BUDGET).map_err(|e| e.to_string())?;
            idx += 1;
            ensure(r.violations == 0, || format!("d1={d1} d2={d2} mix={mix}: {:?}", r.counterexample))?;
            total += trials;
        }
    }
    // sharpness: n m on (Z/5)^2 is not of degree < 2 along the whole group
    let g = GroupSpec::new(vec![5, 5]).unwrap();
    let p = PolyFunction::from_monomials(&g, 5, &[(1, vec![1, 1])]).unwrap();
    let all = Subgroup::whole(&g).unwrap();
    let three = degree_check(&p, &all, 3, CheckMode::Difference, DEFAULT_POLY_BUDGET).unwrap();
    let two = degree_check(&p, &all, 2, CheckMode::Difference, DEFAULT_POLY_BUDGET).unwrap();
    ensure(three.verdict && !two.verdict && two.witness_verifies(&p), || {
        format!("monomial: <3 {} <2 {}", three.verdict, two.verdict)
    })?;
    let el = start.elapsed();
    ensure(el < Duration::from_secs(60), || format!("took {el:?}"))?;
    Ok(format!("{total} instances, zero violations; monomial sharp; {:.2} s", el.as_secs_f64()))
}

fn lcg(state: &mut u64) -> u64 {
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    *state >> 33
}

fn c6_concat_low_rank() -> Check {
    let mut s = 99u64;
    // f(n) + g(m) on (Z/5)^2
    let g2 = GroupSpec::new(vec![5, 5]).unwrap();
    let axes2: Vec<Subgroup> = [[1, 0], [0, 1]]
        .iter()
        .map(|c| Subgroup::generate(&g2, vec![g2.element(c).unwrap()]).unwrap())
        .collect();
    for t in 0..20 {
        let f: Vec<u64> = (0..5).map(|_| lcg(&mut s) % 5).collect();
        let h: Vec<u64> = (0..5).map(|_| lcg(&mut s) % 5).collect();
        let p = PolyFunction::from_fn(&g2, Modular::new(5).unwrap(), |x| (f[x.residues()[0] as usize] + h[x.residues()[1] as usize]) % 5).unwrap();
        for mode in [CheckMode::Difference, CheckMode::Recursive] {
            let c = rank_check(&p, &axes2, mode, DEFAULT_POLY_BUDGET).unwrap();
            ensure(c.verdict, || format!("f(n)+g(m) t={t} {mode:?}"))?;
        }
    }
    // f(n,m) + g(n,k) + h(m,k) on (Z/5)^3
    let g3 = GroupSpec::new(vec![5, 5, 5]).unwrap();
    let axes3: Vec<Subgroup> = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
        .iter()
        .map(|c| Subgroup::generate(&g3, vec![g3.element(c).unwrap()]).unwrap())
        .collect();
    for t in 0..20 {
        let tabs: Vec<Vec<u64>> = (0..3).map(|_| (0..25).map(|_| lcg(&mut s) % 5).collect()).collect();
        let p = PolyFunction::from_fn(&g3, Modular::new(5).unwrap(), |x| {
            let r: Vec<usize> = x.residues().iter().map(|&v| v as usize).collect();
            (tabs[0][r[0] * 5 + r[1]] + tabs[1][r[0] * 5 + r[2]] + tabs[2][r[1] * 5 + r[2]]) % 5
        })
        .unwrap();
        for mode in [CheckMode::Difference, CheckMode::Recursive] {
            let c = rank_check(&p, &axes3, mode, DEFAULT_POLY_BUDGET).unwrap();
            ensure(c.verdict, || format!("three-way t={t} {mode:?}"))?;
        }
    }
    // generated product-rank instances
    let mut total = 0;
    for (fam, trials, seed) in [
        (ConcatFamily::LowRank { p: 5, d1: 1, d2: 1 }, 34, 61),
        (ConcatFamily::LowRank { p: 5, d1: 1, d2: 2 }, 33, 62),
        (ConcatFamily::LowRank { p: 3, d1: 2, d2: 2 }, 33, 63),
    ] {
        let r = concat_property_test(&fam, trials, seed, DEFAULT_POLY_BUDGET).map_err(|e| e.to_string())?;
        ensure(r.violations == 0, || format!("{fam:?}: {:?}", r.counterexample))?;
        total += trials;
    }
    Ok(format!("example families pass in both modes; {total} generated instances, zero violations"))
}

fn c7_mode_agreement() -> Check {
    let mut s = 7u64;
    let groups = [vec![5, 5], vec![3, 3, 3], vec![25], vec![5, 5, 5], vec![5, 5, 5, 5]];
    let mut agreed = 0;
    for t in 0..100usize {
        let g = GroupSpec::new(groups[t % groups.len()].clone()).unwrap();
        let modulus = g.moduli()[0].min(5);
        let rank = g.rank();
        let terms: Vec<(i64, Vec<u32>)> = (0..1 + lcg(&mut s) % 3)
            .map(|_| ((lcg(&mut s) % 5) as i64 + 1, (0..rank).map(|_| (lcg(&mut s) % 3) as u32).collect()))
            .collect();
        let mut values = PolyFunction::from_monomials(&g, modulus, &terms).unwrap().values().to_vec();
        if t % 3 == 0 {
            let i = lcg(&mut s) as usize % values.len();
            values[i] = (values[i] + 1) % modulus;
        }
        let p = PolyFunction::new(g.clone(), Modular::new(modulus).unwrap(), values).unwrap();
        let gen = |s: &mut u64| {
            let coords: Vec<i64> = (0..rank).map(|_| (lcg(s) % 3) as i64).collect();
            Subgroup::generate(&g, vec![g.element(&coords).unwrap()]).unwrap()
        };
        let (a, b) = if t % 2 == 0 {
            let h = gen(&mut s);
            let d = 1 + (lcg(&mut s) % 3) as i64;
            (
                degree_check(&p, &h, d, CheckMode::Recursive, DEFAULT_POLY_BUDGET),
                degree_check(&p, &h, d, CheckMode::Difference, DEFAULT_POLY_BUDGET),
            )
        } else {
            let hs: Vec<Subgroup> = (0..1 + lcg(&mut s) % 3).map(|_| gen(&mut s)).collect();
            (
                rank_check(&p, &hs, CheckMode::Recursive, DEFAULT_POLY_BUDGET),
                rank_check(&p, &hs, CheckMode::Difference, DEFAULT_POLY_BUDGET),
            )
        };
        let (a, b) = (a.map_err(|e| format!("t={t}: {e}"))?, b.map_err(|e| format!("t={t}: {e}"))?);
        ensure(a.verdict == b.verdict, || format!("t={t}: recursive {} difference {}", a.verdict, b.verdict))?;
        ensure(a.witness_verifies(&p) && b.witness_verifies(&p), || format!("t={t}: witness"))?;
        agreed += 1;
    }
    Ok(format!("{agreed}/100 instances agree, witnesses re-verify"))
}

fn c8_mc_calibration() -> Check {
    let g = GroupSpec::cyclic(64).unwrap();
    let q = vec![whole(&g), whole(&g)];
    let mut inside = 0;
    let mut worst = 0.0f64;
    for t in 0..20 {
        let f = Table::random_complex(&g, 8_000 + t);
        // std_error is reported for the fourth power, so compare there
        let exact = box_norm_exact(&f, &q, 2, B).unwrap().base_power_mean;
        let mc = box_norm_mc(&f, &q, 2, 100_000, 80 + t).unwrap();
        let z = (mc.base_power_mean - exact).abs() / mc.std_error;
        worst = worst.max(z);
        if z <= 4.0 {
            inside += 1;
        }
    }
    ensure(inside >= 19, || format!("only {inside}/20 within 4 sigma"))?;
    Ok(format!("{inside}/20 within 4 std errors (largest {worst:.2})"))
}

fn c9_dual_oracle() -> Check {
    let g = GroupSpec::cyclic(4).unwrap();
    let q = CosetProgression::from_subgroup(Subgroup::whole(&g).unwrap());
    let search = DualSearch {
        seed: 9,
        ..DualSearch::default()
    };
    let mut worst = f64::INFINITY;
    for t in 0..20 {
        let f = Table::random_complex(&g, 9_000 + t);
        let w = dual_norm_lower_bound(&f, &q, 2, 0.5, &search).map_err(|e| e.to_string())?;
        let o = dual_norm_oracle_tiny(&f, &q, 2, 0.5, 8, B).map_err(|e| e.to_string())?;
        // re-verify the witness from scratch
        let u = uniformity_norm(&w.g, &q.clone().into(), 2, B).unwrap().value;
        let inner = f.inner(&w.g).unwrap().norm();
        ensure(w.g.sup_norm() <= 1.0 + 1e-9 && u <= 0.5 + 1e-9, || {
            format!("t={t}: witness infeasible (sup {}, norm {u})", w.g.sup_norm())
        })?;
        ensure((inner - w.inner).abs() <= 1e-9, || format!("t={t}: reported {} but pairing is {inner}", w.inner))?;
        let ratio = if o.inner > 0.0 { w.inner / o.inner } else { 1.0 };
        worst = worst.min(ratio);
        ensure(ratio >= 0.9, || format!("t={t}: search {} < 0.9 x oracle {}", w.inner, o.inner))?;
    }
    Ok(format!("20 tables, worst search/oracle ratio {worst:.3}, all witnesses feasible"))
}

fn c10_pattern_average() -> Check {
    let exact = PatternMethod::Exact {
        budget: DEFAULT_PATTERN_BUDGET,
    };
    let g = GroupSpec::cyclic(48).unwrap();
    let one = Table::ones(&g);
    let a = pattern_average([&one, &one, &one, &one], 5, exact).unwrap();
    ensure(a.value == Complex::new(1.0, 0.0), || format!("A(1,1,1,1) = {}", a.value))?;
    let mut worst = 0.0f64;
    for xi in [1i64, 5, 24] {
        let chi = Table::character(&g, &g.element(&[xi]).unwrap()).unwrap();
        for slot in 0..4 {
            let mut fs = [&one, &one, &one, &one];
            fs[slot] = &chi;
            let v = pattern_average(fs, 6, exact).unwrap().value.norm();
            worst = worst.max(v);
        }
    }
    ensure(worst <= 1e-12, || format!("character case gave {worst:e}"))?;
    let g = GroupSpec::cyclic(256).unwrap();
    let fs: Vec<Table> = (0..4).map(|i| Table::random_complex(&g, 10_000 + i)).collect();
    let refs = [&fs[0], &fs[1], &fs[2], &fs[3]];
    let e = pattern_average(refs, 16, exact).unwrap();
    let m = pattern_average(refs, 16, PatternMethod::MonteCarlo { samples: 200_000, seed: 10 }).unwrap();
    // brute-force oracle for the exact value
    let n = 256usize;
    let mut brute = Complex::new(0.0, 0.0);
    for x in 0..n {
        for a in 1..=16usize {
            for b in 1..=16usize {
                for c in 1..=16usize {
                    brute += fs[0].values()[x]
                        * fs[1].values()[(x + a * b) % n]
                        * fs[2].values()[(x + a * c) % n]
                        * fs[3].values()[(x + a * b + a * c) % n];
                }
            }
        }
    }
    brute /= (n * 16 * 16 * 16) as f64;
    ensure((brute - e.value).norm() <= 1e-12, || format!("exact {} vs brute force {brute}", e.value))?;
    let z = (m.value - e.value).norm() / m.std_error;
    ensure(z <= 4.0, || format!("MC off by {z:.2} std errors"))?;
    Ok(format!("constant case exactly 1, characters <= {worst:.1e}, MC within {z:.2} std errors at N=256 M=16"))
}

fn c11_mobius() -> Check {
    let base: Value = serde_json::from_str(&std::fs::read_to_string(repo_root().join("baselines/mobius_n1000.json")).unwrap()).unwrap();
    let run = mobius_experiment(1000, None, 5, gowers_core::patterns::ArithmeticWeight::Mobius, PatternMethod::Exact { budget: DEFAULT_PATTERN_BUDGET }, 1 << 28)
        .map_err(|e| e.to_string())?;
    let bits = format!("{:016x}", run.average.value.re.to_bits());
    ensure(run.exact_sum == base["exact_sum"].as_i64(), || format!("sum {:?} vs baseline {}", run.exact_sum, base["exact_sum"]))?;
    ensure(bits == base["value_bits"].as_str().unwrap(), || format!("bits {bits} vs baseline {}", base["value_bits"]))?;
    let big = mobius_experiment(
        100_000,
        None,
        5,
        gowers_core::patterns::ArithmeticWeight::Mobius,
        PatternMethod::MonteCarlo { samples: 1_000_000, seed: 2024 },
        1 << 28,
    )
    .map_err(|e| e.to_string())?;
    let est = big.average.value.norm();
    let limit = 0.02f64.max(4.0 * big.average.std_error);
    ensure(est <= limit, || format!("|estimate| {est} > {limit}"))?;
    Ok(format!("N=1000 matches baseline bit for bit; N=1e5 estimate {est:.2e} (limit {limit})"))
}

fn run_cli(config: &Path, out: &Path, extra: &[&str]) -> Result<Value, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_gowers"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("{}: {}", config.display(), String::from_utf8_lossy(&status.stderr)));
    }
    serde_json::from_str(&std::fs::read_to_string(out.join("record.json")).unwrap()).map_err(|e| e.to_string())
}

fn c12_local_norm_trend() -> Check {
    let root = repo_root();
    let pilot: Value = serde_json::from_str(&std::fs::read_to_string(root.join("baselines/cprop_thresholds.json")).unwrap()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let hi = pilot["quadratic_phase"]["threshold_at_least"].as_f64().unwrap();
    let lo = pilot["random_pm1"]["threshold_at_most"].as_f64().unwrap();
    let q = run_cli(&root.join("configs/cprop_quadratic.json"), &tmp.path().join("q"), &[])?;
    let qa = q["results"]["average"].as_f64().unwrap();
    ensure(qa >= hi, || format!("quadratic phase average {qa} < {hi}"))?;
    let mut worst = 0.0f64;
    for seed in pilot["random_pm1"]["seeds"].as_array().unwrap() {
        let s = seed.as_u64().unwrap().to_string();
        let r = run_cli(&root.join("configs/cprop_random.json"), &tmp.path().join(&s), &["--seed", &s])?;
        let ra = r["results"]["average"].as_f64().unwrap();
        worst = worst.max(ra);
        ensure(ra <= lo, || format!("random signs seed {s}: {ra} > {lo}"))?;
    }
    Ok(format!("quadratic phase {qa:.4} >= {hi}; random signs max {worst:.4} <= {lo}"))
}

fn c13_determinism() -> Check {
    let root = repo_root();
    let tmp = tempfile::tempdir().unwrap();
    let configs = [
        "configs/mobius_n100000_mc.json",
        "configs/cprop_random.json",
        "configs/norm_mc.json",
        "configs/bessel_scan.json",
        "configs/dualnorm_z8.json",
        "configs/concat_low_rank.json",
    ];
    for c in configs {
        let mut bytes = Vec::new();
        for threads in ["1", "4"] {
            let out = tmp.path().join(format!("{}-{threads}", c.replace('/', "_")));
            run_cli(&root.join(c), &out, &["--threads", threads])?;
            bytes.push(std::fs::read(out.join("record.json")).unwrap());
        }
        ensure(bytes[0] == bytes[1], || format!("{c}: records differ between 1 and 4 threads"))?;
    }
    Ok(format!("{} configs, record.json identical under --threads 1 and 4", configs.len()))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("01 Fourier oracle for U2", c1_fourier_oracle),
        ("02 dual identity", c2_dual_identity),
        ("03 first-order dual is the invariant projection", c3_mean_ergodic),
        ("04 norm inequalities and invariances", c4_norm_properties),
        ("05 concatenation of polynomials", c5_concat_polynomial),
        ("06 concatenation of low rank", c6_concat_low_rank),
        ("07 recursive vs difference mode", c7_mode_agreement),
        ("08 Monte-Carlo calibration", c8_mc_calibration),
        ("09 dual-norm search vs oracle", c9_dual_oracle),
        ("10 pattern average exactness", c10_pattern_average),
        ("11 Mobius experiment", c11_mobius),
        ("12 local-norm trend", c12_local_norm_trend),
        ("13 determinism across thread counts", c13_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1} s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
