//! Config document parsing and canonical rendering.
//!
//! The format is flat `key = value` pairs under bracketed sections:
//!
//! ```ini
//! [scenario.flat]
//! p = 2
//! q = 1
//! a = 0
//! b = 1
//! v = power 1 0
//! w = power 1 0
//! conditions = b1_eps, b2_eps, a_ps, mazya_rosin
//!
//! [grid]
//! n = 1024
//! spacing = linear
//!
//! [epsilons]
//! values = default
//!
//! [estimator]
//! max_iters = 4000
//!
//! [output]
//! format = csv
//! ```
//!
//! Unknown sections and keys are hard errors; every error carries the
//! 1-based line it came from.  `render_config` writes the canonical form of
//! a config, and `parse_config(render_config(cfg)) == cfg` for every valid
//! config.

use std::collections::BTreeMap;
use std::fmt;

use crate::conditions::Scenario;
use crate::estimator::OptimizerOptions;
use crate::quadrature::{Grid, Spacing};
use crate::weights::{Exponents, Interval, Regime, Weight};

/// A named inequality instance plus the conditions chosen for it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub p: f64,
    pub q: f64,
    pub a: f64,
    pub b: f64,
    pub v: Weight,
    pub w: Weight,
    /// Conditions to evaluate, in canonical order; filled with the
    /// regime-applicable defaults when the key is omitted.
    pub conditions: Vec<ConditionChoice>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConditionChoice {
    AEps,
    B1Eps,
    B2Eps,
    APs,
    Muckenhoupt,
    MazyaRosin,
}

impl ConditionChoice {
    pub fn name(self) -> &'static str {
        match self {
            ConditionChoice::AEps => "a_eps",
            ConditionChoice::B1Eps => "b1_eps",
            ConditionChoice::B2Eps => "b2_eps",
            ConditionChoice::APs => "a_ps",
            ConditionChoice::Muckenhoupt => "muckenhoupt",
            ConditionChoice::MazyaRosin => "mazya_rosin",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "a_eps" => ConditionChoice::AEps,
            "b1_eps" => ConditionChoice::B1Eps,
            "b2_eps" => ConditionChoice::B2Eps,
            "a_ps" => ConditionChoice::APs,
            "muckenhoupt" => ConditionChoice::Muckenhoupt,
            "mazya_rosin" => ConditionChoice::MazyaRosin,
            _ => return None,
        })
    }

    /// Whether this condition is defined for the exponent pair.
    fn applicable(self, p: f64, q: f64) -> bool {
        match self {
            ConditionChoice::AEps | ConditionChoice::Muckenhoupt => p <= q,
            ConditionChoice::B1Eps | ConditionChoice::B2Eps => q < p,
            ConditionChoice::APs => p > 1.0,
            ConditionChoice::MazyaRosin => p > 1.0 && (1.0..p).contains(&q),
        }
    }

    fn defaults(p: f64, q: f64) -> Vec<ConditionChoice> {
        use ConditionChoice::*;
        [AEps, B1Eps, B2Eps, APs, Muckenhoupt, MazyaRosin]
            .into_iter()
            .filter(|c| c.applicable(p, q))
            .collect()
    }
}

/// Grid options; unset fields resolve per scenario at run time.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub spacing: Option<Spacing>,
    pub trunc_lo: Option<f64>,
    pub trunc_hi: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n: 1024,
            spacing: None,
            trunc_lo: None,
            trunc_hi: None,
        }
    }
}

impl GridSpec {
    /// Resolves the scenario-dependent defaults: log spacing when the
    /// interval reaches 0 or infinity, truncation edges at finite endpoints
    /// or at the documented cutoffs `1e-6` / `1e6`.
    pub fn resolve(&self, interval: &Interval) -> (Spacing, f64, f64) {
        let spacing = self.spacing.unwrap_or({
            if interval.a == 0.0 || interval.b.is_infinite() {
                Spacing::Log
            } else {
                Spacing::Linear
            }
        });
        let lo = self.trunc_lo.unwrap_or({
            if interval.a.is_infinite() {
                -1e6
            } else if interval.a == 0.0 && spacing == Spacing::Log {
                1e-6
            } else {
                interval.a
            }
        });
        let hi = self.trunc_hi.unwrap_or({
            if interval.b.is_infinite() {
                1e6
            } else {
                interval.b
            }
        });
        (spacing, lo, hi)
    }

    pub fn build(&self, interval: &Interval) -> Result<Grid, crate::quadrature::GridError> {
        let (spacing, lo, hi) = self.resolve(interval);
        Grid::new(*interval, self.n, spacing, lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EpsilonSpec {
    /// The regime-aware default sweep for each scenario's `p`.
    Default,
    List(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Jsonl,
}

impl ReportFormat {
    pub fn name(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    /// Report destination; `None` writes to standard output.
    pub path: Option<String>,
    pub format: ReportFormat,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            path: None,
            format: ReportFormat::Csv,
        }
    }
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Sorted by name.
    pub scenarios: Vec<ScenarioSpec>,
    pub grid: GridSpec,
    pub epsilons: EpsilonSpec,
    pub estimator: OptimizerOptions,
    pub output: OutputSpec,
}

/// A config error with the 1-based line it was detected on.
#[derive(Debug)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        message: message.into(),
    })
}

/// One parsed `key = value` occurrence.
struct Entry {
    line: usize,
    value: String,
}

type Section = BTreeMap<String, Entry>;

fn parse_f64(s: &str, line: usize, key: &str) -> Result<f64, ConfigError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| ConfigError {
            line,
            message: format!("key '{key}': malformed number '{}'", s.trim()),
        })
        .and_then(|x| {
            if x.is_nan() {
                err(line, format!("key '{key}': NaN is not a valid value"))
            } else {
                Ok(x)
            }
        })
}

fn parse_usize(s: &str, line: usize, key: &str) -> Result<usize, ConfigError> {
    s.trim().parse::<usize>().map_err(|_| ConfigError {
        line,
        message: format!("key '{key}': malformed count '{}'", s.trim()),
    })
}

fn parse_f64_list(s: &str, line: usize, key: &str) -> Result<Vec<f64>, ConfigError> {
    let trimmed = s.trim();
    if trimmed.is_empty() {
        return err(line, format!("key '{key}': empty list"));
    }
    trimmed
        .split(',')
        .map(|tok| parse_f64(tok, line, key))
        .collect()
}

fn parse_weight(s: &str, line: usize, key: &str) -> Result<Weight, ConfigError> {
    let mut parts = s.split_whitespace();
    let kind = parts.next().unwrap_or("");
    let args: Vec<&str> = parts.collect();
    let wrong_shape = |want: &str| ConfigError {
        line,
        message: format!("key '{key}': expected '{want}', got '{s}'"),
    };
    let weight = match kind {
        "power" => {
            if args.len() != 2 {
                return Err(wrong_shape("power <c> <alpha>"));
            }
            let c = parse_f64(args[0], line, key)?;
            let alpha = parse_f64(args[1], line, key)?;
            Weight::power(c, alpha)
        }
        "piecewise" => {
            if args.len() != 2 {
                return Err(wrong_shape("piecewise <b1,..,bk> <v0,..,vk>"));
            }
            let breaks = parse_f64_list(args[0], line, key)?;
            let values = parse_f64_list(args[1], line, key)?;
            Weight::piecewise(breaks, values)
        }
        "tabulated" => {
            if args.len() != 2 {
                return Err(wrong_shape("tabulated <t1,..,tk> <v1,..,vk>"));
            }
            let nodes = parse_f64_list(args[0], line, key)?;
            let values = parse_f64_list(args[1], line, key)?;
            Weight::tabulated(nodes, values)
        }
        _ => {
            return err(
                line,
                format!("key '{key}': unknown weight kind '{kind}' (power | piecewise | tabulated)"),
            )
        }
    };
    weight.map_err(|e| ConfigError {
        line,
        message: format!("key '{key}': {e}"),
    })
}

fn render_weight(w: &Weight) -> String {
    fn join(xs: &[f64]) -> String {
        xs.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
    match w {
        Weight::Power { c, alpha } => format!("power {c} {alpha}"),
        Weight::PiecewiseConstant { breaks, values } => {
            format!("piecewise {} {}", join(breaks), join(values))
        }
        Weight::Tabulated { nodes, values } => {
            format!("tabulated {} {}", join(nodes), join(values))
        }
    }
}

fn take<'a>(sec: &'a Section, key: &str) -> Option<&'a Entry> {
    sec.get(key)
}

fn require<'a>(
    sec: &'a Section,
    key: &str,
    section_line: usize,
    section_name: &str,
) -> Result<&'a Entry, ConfigError> {
    sec.get(key).ok_or_else(|| ConfigError {
        line: section_line,
        message: format!("section [{section_name}] is missing required key '{key}'"),
    })
}

fn check_known(sec: &Section, known: &[&str], section_name: &str) -> Result<(), ConfigError> {
    for (key, entry) in sec {
        if !known.contains(&key.as_str()) {
            return err(
                entry.line,
                format!("unknown key '{key}' in section [{section_name}]"),
            );
        }
    }
    Ok(())
}

/// Parses and fully validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    // pass 1: split into sections of key/value entries
    let mut scenario_secs: Vec<(String, usize, Section)> = Vec::new();
    let mut plain_secs: BTreeMap<String, (usize, Section)> = BTreeMap::new();
    enum Active {
        Scenario(usize),
        Plain(String),
        None,
    }
    let mut active = Active::None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(stripped) = line.strip_prefix('[') {
            let Some(name) = stripped.strip_suffix(']') else {
                return err(line_no, format!("malformed section header '{line}'"));
            };
            let name = name.trim();
            if let Some(scen_name) = name.strip_prefix("scenario.") {
                if scen_name.is_empty()
                    || !scen_name
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                {
                    return err(
                        line_no,
                        format!("invalid scenario name '{scen_name}' (use letters, digits, _ or -)"),
                    );
                }
                if scenario_secs.iter().any(|(n, _, _)| n == scen_name) {
                    return err(line_no, format!("duplicate scenario '{scen_name}'"));
                }
                scenario_secs.push((scen_name.to_string(), line_no, Section::new()));
                active = Active::Scenario(scenario_secs.len() - 1);
            } else {
                match name {
                    "grid" | "epsilons" | "estimator" | "output" => {
                        if plain_secs.contains_key(name) {
                            return err(line_no, format!("duplicate section [{name}]"));
                        }
                        plain_secs.insert(name.to_string(), (line_no, Section::new()));
                        active = Active::Plain(name.to_string());
                    }
                    _ => return err(line_no, format!("unknown section [{name}]")),
                }
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(line_no, format!("expected 'key = value', got '{line}'"));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return err(line_no, "empty key");
        }
        let sec: &mut Section = match &active {
            Active::Scenario(i) => &mut scenario_secs[*i].2,
            Active::Plain(name) => &mut plain_secs.get_mut(name).unwrap().1,
            Active::None => return err(line_no, "key outside of any section"),
        };
        if sec.contains_key(&key) {
            return err(line_no, format!("duplicate key '{key}'"));
        }
        sec.insert(
            key,
            Entry {
                line: line_no,
                value,
            },
        );
    }

    if scenario_secs.is_empty() {
        return err(1, "config must declare at least one [scenario.<name>]");
    }

    // scenarios
    let mut scenarios = Vec::with_capacity(scenario_secs.len());
    for (name, sec_line, sec) in &scenario_secs {
        check_known(
            sec,
            &["p", "q", "a", "b", "v", "w", "conditions"],
            &format!("scenario.{name}"),
        )?;
        let section_name = format!("scenario.{name}");
        let get = |key: &str| require(sec, key, *sec_line, &section_name);
        let p_e = get("p")?;
        let p = parse_f64(&p_e.value, p_e.line, "p")?;
        let q_e = get("q")?;
        let q = parse_f64(&q_e.value, q_e.line, "q")?;
        let a_e = get("a")?;
        let a = parse_f64(&a_e.value, a_e.line, "a")?;
        let b_e = get("b")?;
        let b = parse_f64(&b_e.value, b_e.line, "b")?;
        let v_e = get("v")?;
        let v = parse_weight(&v_e.value, v_e.line, "v")?;
        let w_e = get("w")?;
        let w = parse_weight(&w_e.value, w_e.line, "w")?;

        let exp = Exponents::new(p, q).map_err(|e| ConfigError {
            line: p_e.line,
            message: e.to_string(),
        })?;
        let interval = Interval::new(a, b).map_err(|e| ConfigError {
            line: a_e.line,
            message: e.to_string(),
        })?;
        // full scenario validation (weights on the interval, etc.)
        Scenario::new(interval, v.clone(), w.clone(), exp).map_err(|e| ConfigError {
            line: *sec_line,
            message: e.to_string(),
        })?;

        let conditions = match take(sec, "conditions") {
            None => ConditionChoice::defaults(p, q),
            Some(entry) => {
                let mut chosen = Vec::new();
                for tok in entry.value.split(',') {
                    let tok = tok.trim();
                    if tok.is_empty() {
                        return err(entry.line, "empty condition name in list");
                    }
                    let Some(c) = ConditionChoice::from_name(tok) else {
                        return err(entry.line, format!("unknown condition '{tok}'"));
                    };
                    if !c.applicable(p, q) {
                        let regime = if exp.regime() == Regime::Convex {
                            "convex"
                        } else {
                            "non-convex"
                        };
                        return err(
                            entry.line,
                            format!(
                                "condition '{tok}' is not defined for p={p}, q={q} ({regime} regime)"
                            ),
                        );
                    }
                    chosen.push(c);
                }
                chosen.sort_unstable();
                chosen.dedup();
                if chosen.is_empty() {
                    return err(entry.line, "conditions list is empty");
                }
                chosen
            }
        };

        scenarios.push(ScenarioSpec {
            name: name.clone(),
            p,
            q,
            a,
            b,
            v,
            w,
            conditions,
        });
    }
    scenarios.sort_by(|x, y| x.name.cmp(&y.name));

    // grid
    let mut grid = GridSpec::default();
    if let Some((_, sec)) = plain_secs.get("grid") {
        check_known(sec, &["n", "spacing", "trunc_lo", "trunc_hi"], "grid")?;
        if let Some(e) = take(sec, "n") {
            grid.n = parse_usize(&e.value, e.line, "n")?;
            if grid.n < 16 {
                return err(e.line, format!("grid n must be at least 16, got {}", grid.n));
            }
        }
        if let Some(e) = take(sec, "spacing") {
            grid.spacing = Some(match e.value.as_str() {
                "linear" => Spacing::Linear,
                "log" => Spacing::Log,
                other => return err(e.line, format!("spacing must be linear or log, got '{other}'")),
            });
        }
        if let Some(e) = take(sec, "trunc_lo") {
            grid.trunc_lo = Some(parse_f64(&e.value, e.line, "trunc_lo")?);
        }
        if let Some(e) = take(sec, "trunc_hi") {
            grid.trunc_hi = Some(parse_f64(&e.value, e.line, "trunc_hi")?);
        }
    }

    // epsilons
    let mut epsilons = EpsilonSpec::Default;
    if let Some((sec_line, sec)) = plain_secs.get("epsilons") {
        check_known(sec, &["values"], "epsilons")?;
        let e = require(sec, "values", *sec_line, "epsilons")?;
        if e.value == "default" {
            epsilons = EpsilonSpec::Default;
        } else {
            let list = parse_f64_list(&e.value, e.line, "values")?;
            for x in &list {
                if !x.is_finite() || *x <= 0.0 {
                    return err(e.line, format!("epsilon values must be positive finite, got {x}"));
                }
            }
            epsilons = EpsilonSpec::List(list);
        }
    }

    // estimator
    let mut estimator = OptimizerOptions::default();
    if let Some((_, sec)) = plain_secs.get("estimator") {
        check_known(
            sec,
            &["max_iters", "restarts", "step_init", "tol", "seed"],
            "estimator",
        )?;
        if let Some(e) = take(sec, "max_iters") {
            estimator.max_iters = parse_usize(&e.value, e.line, "max_iters")?;
            if estimator.max_iters == 0 {
                return err(e.line, "max_iters must be positive");
            }
        }
        if let Some(e) = take(sec, "restarts") {
            estimator.restarts = parse_usize(&e.value, e.line, "restarts")?;
        }
        if let Some(e) = take(sec, "step_init") {
            estimator.step_init = parse_f64(&e.value, e.line, "step_init")?;
            if !(estimator.step_init > 0.0) || !estimator.step_init.is_finite() {
                return err(e.line, "step_init must be positive finite");
            }
        }
        if let Some(e) = take(sec, "tol") {
            estimator.tol = parse_f64(&e.value, e.line, "tol")?;
            if !(estimator.tol > 0.0) || !estimator.tol.is_finite() {
                return err(e.line, "tol must be positive finite");
            }
        }
        if let Some(e) = take(sec, "seed") {
            estimator.rng_seed = e.value.parse::<u64>().map_err(|_| ConfigError {
                line: e.line,
                message: format!("key 'seed': malformed integer '{}'", e.value),
            })?;
        }
    }

    // output
    let mut output = OutputSpec::default();
    if let Some((_, sec)) = plain_secs.get("output") {
        check_known(sec, &["path", "format"], "output")?;
        if let Some(e) = take(sec, "path") {
            if e.value.is_empty() {
                return err(e.line, "output path must not be empty");
            }
            output.path = Some(e.value.clone());
        }
        if let Some(e) = take(sec, "format") {
            output.format = match e.value.as_str() {
                "csv" => ReportFormat::Csv,
                "jsonl" => ReportFormat::Jsonl,
                other => return err(e.line, format!("format must be csv or jsonl, got '{other}'")),
            };
        }
    }

    let cfg = RunConfig {
        scenarios,
        grid,
        epsilons,
        estimator,
        output,
    };

    // window validity against every scenario interval is a config-level
    // property: surface it now rather than as a runtime failure
    for spec in &cfg.scenarios {
        let interval = Interval::new(spec.a, spec.b).expect("validated above");
        if let Err(e) = cfg.grid.build(&interval) {
            return err(1, format!("grid does not fit scenario '{}': {e}", spec.name));
        }
    }

    Ok(cfg)
}

/// Writes the canonical form of a config; `parse_config` inverts it.
pub fn render_config(cfg: &RunConfig) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for s in &cfg.scenarios {
        let _ = writeln!(out, "[scenario.{}]", s.name);
        let _ = writeln!(out, "p = {}", s.p);
        let _ = writeln!(out, "q = {}", s.q);
        let _ = writeln!(out, "a = {}", s.a);
        let _ = writeln!(out, "b = {}", s.b);
        let _ = writeln!(out, "v = {}", render_weight(&s.v));
        let _ = writeln!(out, "w = {}", render_weight(&s.w));
        let names: Vec<&str> = s.conditions.iter().map(|c| c.name()).collect();
        let _ = writeln!(out, "conditions = {}", names.join(", "));
        let _ = writeln!(out);
    }
    let _ = writeln!(out, "[grid]");
    let _ = writeln!(out, "n = {}", cfg.grid.n);
    if let Some(sp) = cfg.grid.spacing {
        let _ = writeln!(
            out,
            "spacing = {}",
            match sp {
                Spacing::Linear => "linear",
                Spacing::Log => "log",
            }
        );
    }
    if let Some(lo) = cfg.grid.trunc_lo {
        let _ = writeln!(out, "trunc_lo = {lo}");
    }
    if let Some(hi) = cfg.grid.trunc_hi {
        let _ = writeln!(out, "trunc_hi = {hi}");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[epsilons]");
    match &cfg.epsilons {
        EpsilonSpec::Default => {
            let _ = writeln!(out, "values = default");
        }
        EpsilonSpec::List(xs) => {
            let toks: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "values = {}", toks.join(", "));
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[estimator]");
    let _ = writeln!(out, "max_iters = {}", cfg.estimator.max_iters);
    let _ = writeln!(out, "restarts = {}", cfg.estimator.restarts);
    let _ = writeln!(out, "step_init = {}", cfg.estimator.step_init);
    let _ = writeln!(out, "tol = {}", cfg.estimator.tol);
    let _ = writeln!(out, "seed = {}", cfg.estimator.rng_seed);
    let _ = writeln!(out);
    let _ = writeln!(out, "[output]");
    if let Some(path) = &cfg.output.path {
        let _ = writeln!(out, "path = {path}");
    }
    let _ = writeln!(out, "format = {}", cfg.output.format.name());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[scenario.flat]
p = 2
q = 1
a = 0
b = 1
v = power 1 0
w = power 1 0
";

    #[test]
    fn minimal_document_fills_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.scenarios.len(), 1);
        let s = &cfg.scenarios[0];
        assert_eq!(s.name, "flat");
        assert_eq!(
            s.conditions,
            vec![
                ConditionChoice::B1Eps,
                ConditionChoice::B2Eps,
                ConditionChoice::APs,
                ConditionChoice::MazyaRosin
            ]
        );
        assert_eq!(cfg.grid.n, 1024);
        assert_eq!(cfg.epsilons, EpsilonSpec::Default);
        assert_eq!(cfg.estimator, OptimizerOptions::default());
        assert_eq!(cfg.output.format, ReportFormat::Csv);
    }

    #[test]
    fn defaults_for_convex_scenario() {
        let text = MINIMAL.replace("q = 1", "q = 3");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(
            cfg.scenarios[0].conditions,
            vec![
                ConditionChoice::AEps,
                ConditionChoice::APs,
                ConditionChoice::Muckenhoupt
            ]
        );
    }

    #[test]
    fn unknown_key_is_hard_error() {
        let text = format!("{MINIMAL}gird_n = 12\n");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(e.line, 8);
        assert!(e.message.contains("gird_n"), "{e}");
    }

    #[test]
    fn regime_mismatch_is_config_error() {
        let text = "\
[scenario.bad]
p = 2
q = 3
a = 0
b = 1
v = power 1 0
w = power 1 0
conditions = mazya_rosin
";
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.line, 8);
        assert!(e.message.contains("convex"), "{e}");
    }

    #[test]
    fn empty_epsilons_rejected() {
        let text = format!("{MINIMAL}\n[epsilons]\nvalues = \n");
        let e = parse_config(&text).unwrap_err();
        assert!(e.message.contains("empty"), "{e}");
    }

    #[test]
    fn nonpositive_epsilon_rejected() {
        let text = format!("{MINIMAL}\n[epsilons]\nvalues = 0.5, -1\n");
        let e = parse_config(&text).unwrap_err();
        assert!(e.message.contains("positive"), "{e}");
    }

    #[test]
    fn missing_required_key_points_at_section() {
        let text = "\
[scenario.flat]
p = 2
q = 1
a = 0
b = 1
v = power 1 0
";
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.message.contains("'w'"), "{e}");
    }

    #[test]
    fn malformed_number_reports_line() {
        let text = MINIMAL.replace("p = 2", "p = two");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("malformed"), "{e}");
    }

    #[test]
    fn small_grid_rejected() {
        let text = format!("{MINIMAL}\n[grid]\nn = 8\n");
        let e = parse_config(&text).unwrap_err();
        assert!(e.message.contains("at least 16"), "{e}");
    }

    #[test]
    fn weight_grammar() {
        let text = "\
[scenario.mixed]
p = 2
q = 2
a = 0
b = 1
v = piecewise 0.3,0.7 1.2,0.6,1.8
w = tabulated 0.1,0.5,0.9 1,0.25,0.05
";
        let cfg = parse_config(text).unwrap();
        assert!(matches!(
            cfg.scenarios[0].v,
            Weight::PiecewiseConstant { .. }
        ));
        assert!(matches!(cfg.scenarios[0].w, Weight::Tabulated { .. }));
        let bad = text.replace("piecewise 0.3,0.7 1.2,0.6,1.8", "piecewise 0.3,0.7");
        assert!(parse_config(&bad).is_err());
    }

    #[test]
    fn infinite_endpoint_round_trips() {
        let text = "\
[scenario.hardy]
p = 2
q = 2
a = 0
b = inf
v = power 1 0
w = power 1 -2
";
        let cfg = parse_config(text).unwrap();
        assert!(cfg.scenarios[0].b.is_infinite());
        let rendered = render_config(&cfg);
        let again = parse_config(&rendered).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn round_trip_is_identity() {
        let text = "\
[scenario.one]
p = 2.5
q = 1.5
a = 0.001
b = 4
v = piecewise 1,2 0.5,1.5,2.5
w = power 3 -0.75
conditions = b2_eps, b1_eps

[scenario.two]
p = 1
q = 2
a = 0
b = 1
v = power 1 0
w = power 2 0.5

[grid]
n = 128
spacing = log
trunc_lo = 0.001

[epsilons]
values = 0.25, 1, 4

[estimator]
max_iters = 500
restarts = 3
step_init = 0.125
tol = 0.000000001
seed = 7

[output]
path = out.csv
format = jsonl
";
        let cfg = parse_config(text).unwrap();
        // scenarios are sorted by name
        assert_eq!(cfg.scenarios[0].name, "one");
        assert_eq!(cfg.scenarios[1].name, "two");
        // explicit conditions are canonicalized
        assert_eq!(
            cfg.scenarios[0].conditions,
            vec![ConditionChoice::B1Eps, ConditionChoice::B2Eps]
        );
        let rendered = render_config(&cfg);
        let again = parse_config(&rendered).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn window_must_fit_every_scenario() {
        let text = format!("{MINIMAL}\n[grid]\ntrunc_hi = 2\n");
        let e = parse_config(&text).unwrap_err();
        assert!(e.message.contains("does not fit"), "{e}");
    }

    #[test]
    fn duplicate_scenario_rejected() {
        let text = format!("{MINIMAL}{MINIMAL}");
        let e = parse_config(&text).unwrap_err();
        assert!(e.message.contains("duplicate"), "{e}");
    }

    #[test]
    fn grid_resolution_rules() {
        let spec = GridSpec::default();
        let touching_zero = Interval::new(0.0, 1.0).unwrap();
        let (sp, lo, hi) = spec.resolve(&touching_zero);
        assert_eq!(sp, Spacing::Log);
        assert_eq!((lo, hi), (1e-6, 1.0));

        let unbounded = Interval::new(1.0, f64::INFINITY).unwrap();
        let (sp, lo, hi) = spec.resolve(&unbounded);
        assert_eq!(sp, Spacing::Log);
        assert_eq!((lo, hi), (1.0, 1e6));

        let finite = Interval::new(0.5, 2.0).unwrap();
        let (sp, lo, hi) = spec.resolve(&finite);
        assert_eq!(sp, Spacing::Linear);
        assert_eq!((lo, hi), (0.5, 2.0));

        let linear_zero = GridSpec {
            spacing: Some(Spacing::Linear),
            ..GridSpec::default()
        };
        let (sp, lo, _) = linear_zero.resolve(&touching_zero);
        assert_eq!(sp, Spacing::Linear);
        assert_eq!(lo, 0.0);
    }
}
