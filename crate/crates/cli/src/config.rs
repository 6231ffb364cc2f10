//! Config schema, validation and preparation.
//!
//! Everything that can fail because of the config (types, ranges, table
//! construction, subgroup generation) happens in [`prepare`], before any
//! computation or output. Errors carry a JSON pointer.

use std::path::{Path, PathBuf};

use gowers_core::bessel::{BesselConfig, BesselFamily};
use gowers_core::funcspace::mobius_table;
use gowers_core::gowers::DualSearch;
use gowers_core::patterns::{ArithmeticWeight, PatternMethod, DEFAULT_PATTERN_BUDGET};
use gowers_core::polyrank::{ConcatFamily, DEFAULT_POLY_BUDGET};
use gowers_core::sampling::derive_seed;
use gowers_core::{
    Complex, CosetProgression, DualStrategy, GroupElement, GroupSpec, ModPoly, Modular, Multiset, PolyFunction,
    ShiftSet, Subgroup, Table, DEFAULT_NORM_BUDGET,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{at, CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Norm,
    Boxnorm,
    Dualnorm,
    Polycheck,
    Concat,
    Bessel,
    Pattern,
    Mobius,
    Profile,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Norm => "norm",
            CommandKind::Boxnorm => "boxnorm",
            CommandKind::Dualnorm => "dualnorm",
            CommandKind::Polycheck => "polycheck",
            CommandKind::Concat => "concat",
            CommandKind::Bessel => "bessel",
            CommandKind::Pattern => "pattern",
            CommandKind::Mobius => "mobius",
            CommandKind::Profile => "profile",
        }
    }

    fn needs_group(self) -> bool {
        !matches!(self, CommandKind::Concat | CommandKind::Mobius | CommandKind::Profile)
    }
}

/// Top level of a config document.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    #[serde(default)]
    pub group: Option<Vec<u64>>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Exact-evaluation budget; each command has its own default.
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub inputs: Vec<InputSpec>,
    #[serde(default)]
    pub params: Value,
}

/// Table sources.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    RandomPm1 {
        #[serde(default)]
        seed: Option<u64>,
    },
    RandomComplex {
        #[serde(default)]
        seed: Option<u64>,
    },
    Character {
        xi: Vec<i64>,
    },
    QuadraticPhase {
        a: i64,
    },
    /// Needs the group `Z/(embed_factor * n)`.
    Mobius {
        n: u64,
        #[serde(default = "default_embed")]
        embed_factor: u64,
    },
    Constant {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Inline {
        values: Vec<InlineValue>,
    },
    /// Binary table with its JSON sidecar; relative paths resolve against
    /// the config file's directory.
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum InlineValue {
    Real(f64),
    Complex([f64; 2]),
}

fn default_embed() -> u64 {
    5
}

/// Shift multisets and progressions.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShiftSpec {
    Whole,
    Zero,
    Subgroup {
        generators: Vec<Vec<i64>>,
    },
    Progression {
        #[serde(default)]
        subgroup: Vec<Vec<i64>>,
        generators: Vec<Vec<i64>>,
        bounds: Vec<f64>,
    },
    Multiset {
        elements: Vec<Vec<i64>>,
        #[serde(default)]
        multiplicities: Option<Vec<u64>>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    #[default]
    Exact,
    MonteCarlo,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormParams {
    d: usize,
    q: ShiftSpec,
    #[serde(default)]
    method: MethodChoice,
    #[serde(default)]
    samples: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxNormParams {
    qs: Vec<ShiftSpec>,
    #[serde(default)]
    method: MethodChoice,
    #[serde(default)]
    samples: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DualNormParams {
    d: usize,
    q: ShiftSpec,
    eps_list: Vec<f64>,
    #[serde(default)]
    strategy: Option<DualStrategy>,
    #[serde(default)]
    random_candidates: Option<usize>,
    #[serde(default)]
    ascent_steps: Option<usize>,
    #[serde(default)]
    bisection_rounds: Option<usize>,
    /// Also run the exhaustive oracle with this many phase levels.
    #[serde(default)]
    oracle_phase_levels: Option<u32>,
    #[serde(default)]
    export_witness: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolyQueryKind {
    Degree,
    Rank,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolyMode {
    Recursive,
    Difference,
    Sampled,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum MapSpec {
    Monomials { modulus: u64, terms: Vec<MonomialTerm> },
    Table { modulus: u64, values: Vec<u64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonomialTerm {
    coef: i64,
    exponents: Vec<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolycheckParams {
    map: MapSpec,
    check: PolyQueryKind,
    /// Generator lists, one per subgroup.
    subgroups: Vec<Vec<Vec<i64>>>,
    #[serde(default)]
    d: Option<i64>,
    #[serde(default = "default_poly_mode")]
    mode: PolyMode,
    #[serde(default)]
    samples: Option<u64>,
}

fn default_poly_mode() -> PolyMode {
    PolyMode::Difference
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConcatParams {
    #[serde(default)]
    family: Option<ConcatFamily>,
    #[serde(default)]
    trials: Option<u64>,
    /// One explicit map instead of a random family.
    #[serde(default)]
    instance: Option<ConcatInstanceSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConcatInstanceSpec {
    map: MapSpec,
    h1: Vec<Vec<i64>>,
    h2: Vec<Vec<i64>>,
    d1: i64,
    d2: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BesselMode {
    Scan,
    Counterexample,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BesselParams {
    #[serde(default = "default_bessel_mode")]
    mode: BesselMode,
    #[serde(default)]
    d: Option<usize>,
    #[serde(default)]
    eps_list: Option<Vec<f64>>,
    #[serde(default)]
    progressions: Option<Vec<ShiftSpec>>,
    #[serde(default)]
    box_rows: Option<Vec<Vec<ShiftSpec>>>,
    /// Monte-Carlo samples for entries over budget; absent means those
    /// entries report the resource error.
    #[serde(default)]
    samples: Option<u64>,
    #[serde(default)]
    q1: Option<Vec<Vec<i64>>>,
    #[serde(default)]
    q2: Option<Vec<Vec<i64>>>,
    #[serde(default)]
    d1: Option<usize>,
    #[serde(default)]
    d2: Option<usize>,
    #[serde(default)]
    eps: Option<f64>,
}

fn default_bessel_mode() -> BesselMode {
    BesselMode::Scan
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PatternMode {
    Average,
    LocalChain,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternParams {
    #[serde(default = "default_pattern_mode")]
    mode: PatternMode,
    m: u64,
    #[serde(default)]
    method: MethodChoice,
    #[serde(default)]
    samples: Option<u64>,
    #[serde(default)]
    kappa: Option<f64>,
    #[serde(default)]
    d: Option<usize>,
    #[serde(default)]
    n_list: Option<Vec<u64>>,
}

fn default_pattern_mode() -> PatternMode {
    PatternMode::Average
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MobiusParams {
    n: u64,
    #[serde(default)]
    m: Option<u64>,
    #[serde(default = "default_embed")]
    embed_factor: u64,
    #[serde(default = "default_weight")]
    weight: ArithmeticWeight,
    #[serde(default)]
    method: MethodChoice,
    #[serde(default)]
    samples: Option<u64>,
}

fn default_weight() -> ArithmeticWeight {
    ArithmeticWeight::Mobius
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileParams {
    n_group: u64,
    n: u64,
    m: u64,
    kappa: f64,
}

/// A validated experiment, ready to run.
#[derive(Debug)]
pub enum Task {
    Norm {
        f: Table,
        qs: Vec<ShiftSet>,
        mc: Option<(u64, u64)>,
        budget: u128,
    },
    Dual {
        f: Table,
        q: CosetProgression,
        d: usize,
        eps_list: Vec<f64>,
        search: DualSearch,
        oracle_phase_levels: Option<u32>,
        export_witness: bool,
    },
    Poly {
        p: ModPoly,
        subgroups: Vec<Subgroup>,
        query: PolyQueryKind,
        d: i64,
        mode: PolyMode,
        samples: u64,
        seed: u64,
        budget: u128,
    },
    Concat {
        family: ConcatFamily,
        trials: u64,
        seed: u64,
        budget: u128,
    },
    ConcatInstance {
        p: ModPoly,
        h1: Subgroup,
        h2: Subgroup,
        d1: i64,
        d2: i64,
        budget: u128,
    },
    BesselScan {
        f: Table,
        family: BesselFamily,
        cfg: BesselConfig,
    },
    Counterexample {
        group: GroupSpec,
        q1: Subgroup,
        q2: Subgroup,
        d1: usize,
        d2: usize,
        eps: f64,
        budget: u128,
        samples: u64,
        seed: u64,
    },
    PatternAverage {
        fs: [Table; 4],
        m: u64,
        method: PatternMethod,
    },
    LocalChain {
        f: Table,
        m: u64,
        kappa: f64,
        n_list: Option<Vec<u64>>,
        d: usize,
        budget: u128,
        samples: u64,
        seed: u64,
    },
    Mobius {
        n: u64,
        m: Option<u64>,
        embed_factor: u64,
        weight: ArithmeticWeight,
        method: PatternMethod,
    },
    Profile {
        n_group: u64,
        n: u64,
        m: u64,
        kappa: f64,
    },
}

#[derive(Debug)]
pub struct Prepared {
    pub command: CommandKind,
    pub seed: Option<u64>,
    /// The config as it will be echoed into the record (overrides applied).
    pub echo: Value,
    pub task: Task,
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<u64>,
}

pub fn read_config(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config("", format!("not valid JSON: {e}")))
}

/// Writes the overrides into the document so the echoed config reproduces
/// the run on its own.
pub fn apply_overrides(doc: &mut Value, o: Overrides) {
    if let Value::Object(map) = doc {
        if let Some(s) = o.seed {
            map.insert("seed".into(), Value::from(s));
        }
        if let Some(b) = o.budget {
            map.insert("budget".into(), Value::from(b));
        }
    }
}

fn escape_token(s: &str) -> String {
    s.replace('~', "~0").replace('/', "~1")
}

/// Typed parse with a JSON pointer on failure; `base` is the pointer of
/// `value` inside the document.
fn parse_at<T: DeserializeOwned>(value: &Value, base: &str) -> CliResult<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let mut pointer = base.to_string();
        for seg in e.path().iter() {
            match seg {
                serde_path_to_error::Segment::Seq { index } => pointer.push_str(&format!("/{index}")),
                serde_path_to_error::Segment::Map { key } => {
                    pointer.push('/');
                    pointer.push_str(&escape_token(key));
                }
                _ => {}
            }
        }
        let message = e.inner().to_string();
        // serde reports a missing field at its parent; point at the field
        if let Some(field) = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next())
        {
            pointer.push('/');
            pointer.push_str(&escape_token(field));
        }
        CliError::config(pointer, message)
    })
}

fn require<T>(v: Option<T>, pointer: &str, what: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::config(pointer, format!("missing field `{what}`")))
}

struct Ctx<'a> {
    group: Option<GroupSpec>,
    seed: Option<u64>,
    budget: Option<u64>,
    base_dir: &'a Path,
}

impl Ctx<'_> {
    fn group(&self) -> &GroupSpec {
        self.group.as_ref().expect("group checked before use")
    }

    fn seed_for(&self, why: &str) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| CliError::config("/seed", format!("missing field `seed` (required for {why})")))
    }

    fn budget_or(&self, default: u128) -> u128 {
        self.budget.map(u128::from).unwrap_or(default)
    }

    fn element(&self, coords: &[i64], pointer: &str) -> CliResult<GroupElement> {
        self.group().element(coords).map_err(at(pointer))
    }

    fn elements(&self, list: &[Vec<i64>], pointer: &str) -> CliResult<Vec<GroupElement>> {
        list.iter()
            .enumerate()
            .map(|(i, c)| self.element(c, &format!("{pointer}/{i}")))
            .collect()
    }

    fn subgroup(&self, gens: &[Vec<i64>], pointer: &str) -> CliResult<Subgroup> {
        let gens = self.elements(gens, pointer)?;
        Subgroup::generate(self.group(), gens).map_err(at(pointer))
    }

    fn progression(&self, spec: &ShiftSpec, pointer: &str) -> CliResult<CosetProgression> {
        let g = self.group();
        match spec {
            ShiftSpec::Whole => Ok(CosetProgression::from_subgroup(Subgroup::whole(g).map_err(at(pointer))?)),
            ShiftSpec::Zero => Ok(CosetProgression::trivial(g)),
            ShiftSpec::Subgroup { generators } => Ok(CosetProgression::from_subgroup(
                self.subgroup(generators, &format!("{pointer}/generators"))?,
            )),
            ShiftSpec::Progression {
                subgroup,
                generators,
                bounds,
            } => {
                let h = self.subgroup(subgroup, &format!("{pointer}/subgroup"))?;
                let v = self.elements(generators, &format!("{pointer}/generators"))?;
                CosetProgression::new(h, v, bounds.clone()).map_err(at(pointer))
            }
            ShiftSpec::Multiset { .. } => Err(CliError::config(
                format!("{pointer}/kind"),
                "a coset progression is required here, not a multiset",
            )),
        }
    }

    fn shift_set(&self, spec: &ShiftSpec, pointer: &str) -> CliResult<ShiftSet> {
        match spec {
            ShiftSpec::Whole => Ok(Multiset::whole(self.group()).into()),
            ShiftSpec::Zero => Ok(Multiset::zero(self.group()).into()),
            ShiftSpec::Multiset {
                elements,
                multiplicities,
            } => {
                let els = self.elements(elements, &format!("{pointer}/elements"))?;
                let ms = match multiplicities {
                    None => vec![1; els.len()],
                    Some(m) if m.len() == els.len() => m.clone(),
                    Some(_) => {
                        return Err(CliError::config(
                            format!("{pointer}/multiplicities"),
                            "one multiplicity per element expected",
                        ))
                    }
                };
                Multiset::new(self.group(), els.into_iter().zip(ms))
                    .map(Into::into)
                    .map_err(at(pointer))
            }
            other => self.progression(other, pointer).map(Into::into),
        }
    }

    fn table(&self, spec: &InputSpec, index: usize) -> CliResult<Table> {
        let pointer = format!("/inputs/{index}");
        let g = self.group();
        let p = pointer.as_str();
        let generated_seed = |own: Option<u64>| -> CliResult<u64> {
            match own {
                Some(s) => Ok(s),
                None => Ok(derive_seed(self.seed_for("random inputs without their own seed")?, &[7, index as u64])),
            }
        };
        match spec {
            InputSpec::RandomPm1 { seed } => Ok(Table::random_signs(g, generated_seed(*seed)?)),
            InputSpec::RandomComplex { seed } => Ok(Table::random_complex(g, generated_seed(*seed)?)),
            InputSpec::Character { xi } => {
                let xi = self.element(xi, &format!("{p}/xi"))?;
                Table::character(g, &xi).map_err(at(p))
            }
            InputSpec::QuadraticPhase { a } => Table::quadratic_phase(g, *a).map_err(at(p)),
            InputSpec::Mobius { n, embed_factor } => {
                let t: Table = mobius_table(*n, *embed_factor, gowers_core::arith::DEFAULT_SIEVE_CAP).map_err(at(p))?;
                if t.group() != g {
                    return Err(CliError::config(
                        p,
                        format!("mobius input lives on {} but the config group is {g}", t.group()),
                    ));
                }
                Ok(t)
            }
            InputSpec::Constant { re, im } => Ok(Table::constant(g, Complex::new(*re, *im))),
            InputSpec::Inline { values } => {
                let vals = values
                    .iter()
                    .map(|v| match *v {
                        InlineValue::Real(r) => Complex::new(r, 0.0),
                        InlineValue::Complex([r, i]) => Complex::new(r, i),
                    })
                    .collect();
                Table::new(g.clone(), vals).map_err(at(&format!("{p}/values")))
            }
            InputSpec::File { path } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    self.base_dir.join(path)
                };
                let t = Table::read_binary(&full).map_err(|e| match e {
                    gowers_core::Error::Io(io) => CliError::io(&full, io),
                    other => at(&format!("{p}/path"))(other),
                })?;
                if t.group() != g {
                    return Err(CliError::config(
                        format!("{p}/path"),
                        format!("table lives on {} but the config group is {g}", t.group()),
                    ));
                }
                Ok(t)
            }
        }
    }
}

fn build_map(ctx: &Ctx, map: &MapSpec, pointer: &str) -> CliResult<ModPoly> {
    let g = ctx.group();
    match map {
        MapSpec::Monomials { modulus, terms } => {
            let terms: Vec<(i64, Vec<u32>)> = terms.iter().map(|t| (t.coef, t.exponents.clone())).collect();
            PolyFunction::from_monomials(g, *modulus, &terms).map_err(at(pointer))
        }
        MapSpec::Table { modulus, values } => {
            let k = Modular::new(*modulus).map_err(at(&format!("{pointer}/modulus")))?;
            if let Some(i) = values.iter().position(|v| v >= modulus) {
                return Err(CliError::config(
                    format!("{pointer}/values/{i}"),
                    "value not reduced modulo the modulus",
                ));
            }
            PolyFunction::new(g.clone(), k, values.clone()).map_err(at(&format!("{pointer}/values")))
        }
    }
}

fn mc_choice(
    ctx: &Ctx,
    method: MethodChoice,
    samples: Option<u64>,
    pointer: &str,
) -> CliResult<Option<(u64, u64)>> {
    match method {
        MethodChoice::Exact => Ok(None),
        MethodChoice::MonteCarlo => {
            let n = require(samples, &format!("{pointer}/samples"), "samples")?;
            if n == 0 {
                return Err(CliError::config(format!("{pointer}/samples"), "samples must be at least 1"));
            }
            Ok(Some((n, ctx.seed_for("monte_carlo")?)))
        }
    }
}

fn single_input(ctx: &Ctx, inputs: &[InputSpec]) -> CliResult<Table> {
    match inputs {
        [one] => ctx.table(one, 0),
        _ => Err(CliError::config(
            "/inputs",
            format!("exactly one input table expected, found {}", inputs.len()),
        )),
    }
}

/// Validates a config document and builds everything the run needs.
pub fn prepare(doc: &Value, base_dir: &Path) -> CliResult<Prepared> {
    let obj = doc
        .as_object()
        .ok_or_else(|| CliError::config("", "the config must be a JSON object"))?;
    if !obj.contains_key("command") {
        return Err(CliError::config("/command", "missing field `command`"));
    }
    let cfg: ExperimentConfig = parse_at(doc, "")?;
    if cfg.command.needs_group() && cfg.group.is_none() {
        return Err(CliError::config("/group", "missing field `group`"));
    }
    let group = match &cfg.group {
        Some(m) => Some(GroupSpec::new(m.clone()).map_err(at("/group"))?),
        None => None,
    };
    let ctx = Ctx {
        group,
        seed: cfg.seed,
        budget: cfg.budget,
        base_dir,
    };
    let params = if cfg.params.is_null() {
        Value::Object(Default::default())
    } else {
        cfg.params.clone()
    };
    let task = build_task(&ctx, &cfg, &params)?;
    Ok(Prepared {
        command: cfg.command,
        seed: cfg.seed,
        echo: doc.clone(),
        task,
    })
}

fn build_task(ctx: &Ctx, cfg: &ExperimentConfig, params: &Value) -> CliResult<Task> {
    match cfg.command {
        CommandKind::Norm => {
            let p: NormParams = parse_at(params, "/params")?;
            let f = single_input(ctx, &cfg.inputs)?;
            let q = ctx.shift_set(&p.q, "/params/q")?;
            Ok(Task::Norm {
                f,
                qs: vec![q; p.d],
                mc: mc_choice(ctx, p.method, p.samples, "/params")?,
                budget: ctx.budget_or(DEFAULT_NORM_BUDGET),
            })
        }
        CommandKind::Boxnorm => {
            let p: BoxNormParams = parse_at(params, "/params")?;
            let f = single_input(ctx, &cfg.inputs)?;
            let qs = p
                .qs
                .iter()
                .enumerate()
                .map(|(i, q)| ctx.shift_set(q, &format!("/params/qs/{i}")))
                .collect::<CliResult<_>>()?;
            Ok(Task::Norm {
                f,
                qs,
                mc: mc_choice(ctx, p.method, p.samples, "/params")?,
                budget: ctx.budget_or(DEFAULT_NORM_BUDGET),
            })
        }
        CommandKind::Dualnorm => {
            let p: DualNormParams = parse_at(params, "/params")?;
            let f = single_input(ctx, &cfg.inputs)?;
            let q = ctx.progression(&p.q, "/params/q")?;
            let defaults = DualSearch::default();
            let strategy = p.strategy.unwrap_or(defaults.strategy);
            // characters are deterministic; everything else draws
            let seed = if strategy == DualStrategy::Characters {
                ctx.seed.unwrap_or(0)
            } else {
                ctx.seed_for("randomized dual search strategies")?
            };
            let search = DualSearch {
                strategy,
                random_candidates: p.random_candidates.unwrap_or(defaults.random_candidates),
                ascent_steps: p.ascent_steps.unwrap_or(defaults.ascent_steps),
                bisection_rounds: p.bisection_rounds.unwrap_or(defaults.bisection_rounds),
                seed,
                budget: ctx.budget_or(defaults.budget),
            };
            Ok(Task::Dual {
                f,
                q,
                d: p.d,
                eps_list: p.eps_list,
                search,
                oracle_phase_levels: p.oracle_phase_levels,
                export_witness: p.export_witness,
            })
        }
        CommandKind::Polycheck => {
            let p: PolycheckParams = parse_at(params, "/params")?;
            let poly = build_map(ctx, &p.map, "/params/map")?;
            if p.subgroups.is_empty() {
                return Err(CliError::config("/params/subgroups", "at least one subgroup is required"));
            }
            let subgroups = p
                .subgroups
                .iter()
                .enumerate()
                .map(|(i, gens)| ctx.subgroup(gens, &format!("/params/subgroups/{i}")))
                .collect::<CliResult<Vec<_>>>()?;
            let d = match p.check {
                PolyQueryKind::Degree => {
                    if subgroups.len() != 1 {
                        return Err(CliError::config("/params/subgroups", "a degree check takes exactly one subgroup"));
                    }
                    require(p.d, "/params/d", "d")?
                }
                PolyQueryKind::Rank => subgroups.len() as i64,
            };
            let (samples, seed) = if p.mode == PolyMode::Sampled {
                let n = require(p.samples, "/params/samples", "samples")?;
                (n, ctx.seed_for("sampled checks")?)
            } else {
                (0, ctx.seed.unwrap_or(0))
            };
            Ok(Task::Poly {
                p: poly,
                subgroups,
                query: p.check,
                d,
                mode: p.mode,
                samples,
                seed,
                budget: ctx.budget_or(DEFAULT_POLY_BUDGET),
            })
        }
        CommandKind::Concat => {
            let p: ConcatParams = parse_at(params, "/params")?;
            match (p.family, p.instance) {
                (Some(family), None) => Ok(Task::Concat {
                    family,
                    trials: require(p.trials, "/params/trials", "trials")?,
                    seed: ctx.seed_for("random instance generation")?,
                    budget: ctx.budget_or(DEFAULT_POLY_BUDGET),
                }),
                (None, Some(inst)) => {
                    if ctx.group.is_none() {
                        return Err(CliError::config("/group", "missing field `group` (required for an explicit instance)"));
                    }
                    Ok(Task::ConcatInstance {
                        p: build_map(ctx, &inst.map, "/params/instance/map")?,
                        h1: ctx.subgroup(&inst.h1, "/params/instance/h1")?,
                        h2: ctx.subgroup(&inst.h2, "/params/instance/h2")?,
                        d1: inst.d1,
                        d2: inst.d2,
                        budget: ctx.budget_or(DEFAULT_POLY_BUDGET),
                    })
                }
                _ => Err(CliError::config("/params/family", "give exactly one of `family` and `instance`")),
            }
        }
        CommandKind::Bessel => {
            let p: BesselParams = parse_at(params, "/params")?;
            let samples = p.samples.unwrap_or(0);
            let seed = if samples > 0 {
                ctx.seed_for("the monte_carlo fallback")?
            } else {
                ctx.seed.unwrap_or(0)
            };
            let budget = ctx.budget_or(DEFAULT_NORM_BUDGET);
            match p.mode {
                BesselMode::Scan => {
                    let f = single_input(ctx, &cfg.inputs)?;
                    let d = require(p.d, "/params/d", "d")?;
                    let family = match (&p.progressions, &p.box_rows) {
                        (Some(list), None) => BesselFamily::Uniform(
                            list.iter()
                                .enumerate()
                                .map(|(i, s)| ctx.progression(s, &format!("/params/progressions/{i}")))
                                .collect::<CliResult<_>>()?,
                        ),
                        (None, Some(rows)) => BesselFamily::Box(
                            rows.iter()
                                .enumerate()
                                .map(|(i, row)| {
                                    row.iter()
                                        .enumerate()
                                        .map(|(k, s)| ctx.progression(s, &format!("/params/box_rows/{i}/{k}")))
                                        .collect::<CliResult<Vec<_>>>()
                                })
                                .collect::<CliResult<_>>()?,
                        ),
                        _ => {
                            return Err(CliError::config(
                                "/params/progressions",
                                "give exactly one of `progressions` and `box_rows`",
                            ))
                        }
                    };
                    Ok(Task::BesselScan {
                        f,
                        family,
                        cfg: BesselConfig {
                            d,
                            eps_list: p.eps_list.unwrap_or_else(|| BesselConfig::default().eps_list),
                            budget,
                            mc_samples: samples,
                            seed,
                        },
                    })
                }
                BesselMode::Counterexample => {
                    let q1 = ctx.subgroup(&require(p.q1, "/params/q1", "q1")?, "/params/q1")?;
                    let q2 = ctx.subgroup(&require(p.q2, "/params/q2", "q2")?, "/params/q2")?;
                    Ok(Task::Counterexample {
                        group: ctx.group().clone(),
                        q1,
                        q2,
                        d1: p.d1.unwrap_or(2),
                        d2: p.d2.unwrap_or(2),
                        eps: p.eps.unwrap_or(0.5),
                        budget,
                        samples,
                        seed,
                    })
                }
            }
        }
        CommandKind::Pattern => {
            let p: PatternParams = parse_at(params, "/params")?;
            match p.mode {
                PatternMode::Average => {
                    let tables = match cfg.inputs.len() {
                        1 => {
                            let t = ctx.table(&cfg.inputs[0], 0)?;
                            [t.clone(), t.clone(), t.clone(), t]
                        }
                        4 => [
                            ctx.table(&cfg.inputs[0], 0)?,
                            ctx.table(&cfg.inputs[1], 1)?,
                            ctx.table(&cfg.inputs[2], 2)?,
                            ctx.table(&cfg.inputs[3], 3)?,
                        ],
                        k => {
                            return Err(CliError::config(
                                "/inputs",
                                format!("one or four input tables expected, found {k}"),
                            ))
                        }
                    };
                    let method = match mc_choice(ctx, p.method, p.samples, "/params")? {
                        None => PatternMethod::Exact {
                            budget: ctx.budget_or(DEFAULT_PATTERN_BUDGET),
                        },
                        Some((samples, seed)) => PatternMethod::MonteCarlo { samples, seed },
                    };
                    Ok(Task::PatternAverage {
                        fs: tables,
                        m: p.m,
                        method,
                    })
                }
                PatternMode::LocalChain => {
                    let f = single_input(ctx, &cfg.inputs)?;
                    let (samples, seed) = match mc_choice(ctx, p.method, p.samples, "/params")? {
                        None => (0, ctx.seed.unwrap_or(0)),
                        Some(x) => x,
                    };
                    Ok(Task::LocalChain {
                        f,
                        m: p.m,
                        kappa: require(p.kappa, "/params/kappa", "kappa")?,
                        n_list: p.n_list,
                        d: p.d.unwrap_or(2),
                        budget: ctx.budget_or(DEFAULT_NORM_BUDGET),
                        samples,
                        seed,
                    })
                }
            }
        }
        CommandKind::Mobius => {
            let p: MobiusParams = parse_at(params, "/params")?;
            let method = match mc_choice(ctx, p.method, p.samples, "/params")? {
                None => PatternMethod::Exact {
                    budget: ctx.budget_or(DEFAULT_PATTERN_BUDGET),
                },
                Some((samples, seed)) => PatternMethod::MonteCarlo { samples, seed },
            };
            Ok(Task::Mobius {
                n: p.n,
                m: p.m,
                embed_factor: p.embed_factor,
                weight: p.weight,
                method,
            })
        }
        CommandKind::Profile => {
            let p: ProfileParams = parse_at(params, "/params")?;
            Ok(Task::Profile {
                n_group: p.n_group,
                n: p.n,
                m: p.m,
                kappa: p.kappa,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn err_pointer(doc: Value) -> String {
        match prepare(&doc, Path::new(".")) {
            Err(CliError::Config { pointer, .. }) => pointer,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn missing_group_points_at_group() {
        let doc = json!({"command": "norm", "inputs": [{"kind": "constant", "re": 1.0}], "params": {"d": 2, "q": {"kind": "whole"}}});
        assert_eq!(err_pointer(doc), "/group");
    }

    #[test]
    fn type_errors_point_inside_params() {
        let doc = json!({"command": "norm", "group": [8], "inputs": [{"kind": "constant", "re": 1.0}], "params": {"d": "two", "q": {"kind": "whole"}}});
        assert_eq!(err_pointer(doc), "/params/d");
        let doc = json!({"command": "norm", "group": [8], "inputs": [{"kind": "constant", "re": 1.0}], "params": {"q": {"kind": "whole"}}});
        assert_eq!(err_pointer(doc), "/params/d");
    }

    #[test]
    fn monte_carlo_needs_a_seed() {
        let doc = json!({"command": "norm", "group": [8], "inputs": [{"kind": "constant", "re": 1.0}],
            "params": {"d": 2, "q": {"kind": "whole"}, "method": "monte_carlo", "samples": 10}});
        assert_eq!(err_pointer(doc), "/seed");
    }

    #[test]
    fn bad_group_and_elements() {
        let doc = json!({"command": "norm", "group": [0], "inputs": [], "params": {}});
        assert_eq!(err_pointer(doc), "/group");
        let doc = json!({"command": "norm", "group": [8], "inputs": [{"kind": "character", "xi": [1, 2]}],
            "params": {"d": 2, "q": {"kind": "whole"}}});
        assert_eq!(err_pointer(doc), "/inputs/0/xi");
    }

    #[test]
    fn overrides_land_in_the_echo() {
        let mut doc = json!({"command": "mobius", "params": {"n": 10}});
        apply_overrides(&mut doc, Overrides { seed: Some(3), budget: Some(100) });
        let p = prepare(&doc, Path::new(".")).unwrap();
        assert_eq!(p.echo["seed"], 3);
        assert_eq!(p.seed, Some(3));
        match p.task {
            Task::Mobius { method: PatternMethod::Exact { budget }, .. } => assert_eq!(budget, 100),
            other => panic!("{other:?}"),
        }
    }
}
