//! Dispatch of prepared tasks to the library.

use gowers_core::bessel::{bessel_scan, counterexample_pair, counterexample_report};
use gowers_core::gowers::{box_norm_exact, box_norm_mc, dual_norm_lower_bound, dual_norm_oracle_tiny};
use gowers_core::patterns::{local_norm_chain, mobius_experiment, multiplicity_profile, pattern_average};
use gowers_core::polyrank::{
    concat_property_test, degree_check, degree_check_sampled, rank_check, rank_check_sampled,
};
use gowers_core::{CheckMode, Table, Witness};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;

use crate::config::{PolyMode, PolyQueryKind, Task};
use crate::error::CliResult;
use crate::record::{Artifact, Series};

/// What a task produced, before it is wrapped into a record.
#[derive(Debug, Default)]
pub struct Outcome {
    pub results: Value,
    pub series: BTreeMap<String, Series>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<Artifact>,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

#[derive(Serialize)]
struct WitnessSummary {
    inner: f64,
    sup_norm: f64,
    u_norm: f64,
    feasible: bool,
    source: String,
}

impl From<&Witness> for WitnessSummary {
    fn from(w: &Witness) -> Self {
        WitnessSummary {
            inner: w.inner,
            sup_norm: w.sup_norm,
            u_norm: w.u_norm,
            feasible: w.is_feasible(),
            source: w.source.clone(),
        }
    }
}

pub fn execute(task: Task) -> CliResult<Outcome> {
    let mut out = Outcome::default();
    match task {
        Task::Norm { f, qs, mc, budget } => {
            let d = qs.len();
            let r = match mc {
                Some((samples, seed)) => box_norm_mc(&f, &qs, d, samples, seed)?,
                None => box_norm_exact(&f, &qs, d, budget)?,
            };
            out.results = json!({ "d": d, "group": f.group().moduli(), "norm": r });
        }
        Task::Dual {
            f,
            q,
            d,
            eps_list,
            search,
            oracle_phase_levels,
            export_witness,
        } => {
            let mut columns = vec!["eps", "lower_bound"];
            if oracle_phase_levels.is_some() {
                columns.push("oracle");
            }
            let mut series = Series::new(&columns);
            let mut entries = Vec::new();
            for (i, &eps) in eps_list.iter().enumerate() {
                let w = dual_norm_lower_bound(&f, &q, d, eps, &search)?;
                let mut entry = json!({ "eps": eps, "witness": WitnessSummary::from(&w) });
                let mut row = vec![eps, w.inner];
                if let Some(levels) = oracle_phase_levels {
                    let o = dual_norm_oracle_tiny(&f, &q, d, eps, levels, search.budget)?;
                    row.push(o.inner);
                    entry["oracle"] = to_value(&WitnessSummary::from(&o));
                }
                if export_witness {
                    let name = format!("witness_{i}.bin");
                    entry["witness_file"] = Value::from(name.clone());
                    out.artifacts.push(Artifact::Table { name, table: w.g });
                }
                if !entry["witness"]["feasible"].as_bool().unwrap_or(false) {
                    out.warnings.push(format!("witness for eps={eps} failed its feasibility re-check"));
                }
                series.rows.push(row);
                entries.push(entry);
            }
            out.results = json!({ "d": d, "search": search, "entries": entries });
            out.series.insert("dual".into(), series);
        }
        Task::Poly {
            p,
            subgroups,
            query,
            d,
            mode,
            samples,
            seed,
            budget,
        } => {
            let exact = |m: CheckMode| match query {
                PolyQueryKind::Degree => degree_check(&p, &subgroups[0], d, m, budget),
                PolyQueryKind::Rank => rank_check(&p, &subgroups, m, budget),
            };
            let cert = match mode {
                PolyMode::Recursive => exact(CheckMode::Recursive)?,
                PolyMode::Difference => exact(CheckMode::Difference)?,
                PolyMode::Sampled => match query {
                    PolyQueryKind::Degree => degree_check_sampled(&p, &subgroups[0], d, samples, seed)?,
                    PolyQueryKind::Rank => rank_check_sampled(&p, &subgroups, samples, seed)?,
                },
            };
            if cert.statistical {
                out.warnings
                    .push("sampled check: a passing verdict only means no counterexample was drawn".into());
            }
            out.results = json!({
                "query": if query == PolyQueryKind::Degree { "degree" } else { "rank" },
                "d": d,
                "mode": mode,
                "certificate": cert,
                "witness_verifies": cert.witness_verifies(&p),
            });
        }
        Task::Concat {
            family,
            trials,
            seed,
            budget,
        } => {
            let report = concat_property_test(&family, trials, seed, budget)?;
            if report.violations > 0 {
                out.warnings
                    .push(format!("{} of {} instances violate the conclusion", report.violations, trials));
            }
            out.results = to_value(&report);
        }
        Task::ConcatInstance { p, h1, h2, d1, d2, budget } => {
            let sum = h1.join(&h2)?;
            let check = |h: &gowers_core::Subgroup, d: i64| -> CliResult<Value> {
                let c = degree_check(&p, h, d, CheckMode::Difference, budget)?;
                Ok(json!({ "d": d, "witness_verifies": c.witness_verifies(&p), "certificate": c }))
            };
            let first = check(&h1, d1)?;
            let second = check(&h2, d2)?;
            let conclusion = check(&sum, d1 + d2 - 1)?;
            let sharpness = check(&sum, d1 + d2 - 2)?;
            let hyp = first["certificate"]["verdict"].as_bool() == Some(true)
                && second["certificate"]["verdict"].as_bool() == Some(true);
            if !hyp {
                out.warnings.push("the map does not satisfy the hypotheses".into());
            }
            out.results = json!({
                "hypotheses_hold": hyp,
                "first": first,
                "second": second,
                "conclusion": conclusion,
                "one_lower": sharpness,
            });
        }
        Task::BesselScan { f, family, cfg } => {
            let reports = bessel_scan(&f, &family, &cfg)?;
            let mut series = Series::new(&["eps", "lhs", "rhs"]);
            for r in &reports {
                series.rows.push(vec![r.eps, r.lhs, r.rhs]);
                if !r.complete {
                    out.warnings
                        .push(format!("eps={}: some norms failed and were left out of the means", r.eps));
                }
            }
            out.results = json!({ "d": cfg.d, "reports": reports });
            out.series.insert("bessel".into(), series);
        }
        Task::Counterexample {
            group,
            q1,
            q2,
            d1,
            d2,
            eps,
            budget,
            samples,
            seed,
        } => {
            let pair = counterexample_pair::<f64>(&group, &q1, &q2, seed)?;
            let report = counterexample_report(&pair, &q1, &q2, d1, d2, eps, budget, samples, seed)?;
            out.results = to_value(&report);
        }
        Task::PatternAverage { fs, m, method } => {
            let [a, b, c, d] = &fs;
            out.results = to_value(&pattern_average([a, b, c, d], m, method)?);
        }
        Task::LocalChain {
            f,
            m,
            kappa,
            n_list,
            d,
            budget,
            samples,
            seed,
        } => {
            let chain = local_norm_chain(&f, m, kappa, n_list.as_deref(), d, budget, samples, seed)?;
            let mut series = Series::new(&["n", "norm"]);
            series.rows = chain.entries.iter().map(|e| vec![e.n as f64, e.norm.value]).collect();
            out.results = to_value(&chain);
            out.series.insert("chain".into(), series);
        }
        Task::Mobius {
            n,
            m,
            embed_factor,
            weight,
            method,
        } => {
            let run = mobius_experiment(n, m, embed_factor, weight, method, gowers_core::arith::DEFAULT_SIEVE_CAP)?;
            out.results = to_value(&run);
        }
        Task::Profile { n_group, n, m, kappa } => {
            let prof = multiplicity_profile(n_group, n, m, kappa)?;
            let mut nu = Series::new(&["a", "nu", "nu2"]);
            nu.rows = prof
                .nu
                .values()
                .iter()
                .zip(prof.nu2.values())
                .enumerate()
                .map(|(a, (x, y))| vec![a as f64, x.re, y.re])
                .collect();
            let mut spec = Series::new(&["xi", "c_re", "c_im"]);
            spec.rows = prof
                .spectrum
                .coefficients()
                .iter()
                .enumerate()
                .map(|(i, c)| vec![i as f64, c.re, c.im])
                .collect();
            out.results = json!({ "n": n, "m": m, "kappa": kappa, "summary": prof.summary() });
            out.series.insert("nu".into(), nu);
            out.series.insert("spectrum".into(), spec);
            out.artifacts.push(csv("nu.csv", &prof.nu));
            out.artifacts.push(csv("nu2.csv", &prof.nu2));
        }
    }
    Ok(out)
}

fn csv(name: &str, t: &Table) -> Artifact {
    Artifact::Text {
        name: name.into(),
        contents: t.to_csv(),
    }
}
