//! Run configurations, suite execution and the JSON report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::coherent::{
    build_xi, check_identity_resolution, check_moment_measure, default_support, eigen_residual,
    heisenberg_product, solve_moment_problem, RadialMeasure,
};
use crate::engine::{
    check_intertwining, rebuild_residual, riesz_diagnostic, theorem1_roundtrip, verify_family,
    CheckResult, CheckTolerances, RegularVerdict,
};
use crate::operator::{EpsilonSequence, FockOperator, Tolerances, C64};
use crate::zoo::{EpsSpec, ModelKind, ModelSpec, ZooModel};

pub const REPORT_VERSION: &str = "nlpb-report/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cannot build model: {0}")]
    Model(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Battery,
    Theorem1,
    Riesz,
    Coherent,
    Moments,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Battery, Suite::Theorem1, Suite::Riesz, Suite::Coherent, Suite::Moments];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Battery => "battery",
            Suite::Theorem1 => "theorem1",
            Suite::Riesz => "riesz",
            Suite::Coherent => "coherent",
            Suite::Moments => "moments",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }
}

/// Named tolerances a config may override, with their defaults.
pub const TOLERANCE_NAMES: [(&str, f64); 8] = [
    ("battery", 1e-9),
    ("vacuum", 1e-10),
    ("theorem1", 1e-8),
    ("intertwining", 1e-8),
    ("coherent", 1e-9),
    ("heisenberg", 1e-6),
    ("moments", 1e-6),
    ("resolution", 1e-6),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    /// Highest moment matched; defaults to `min(10, D - 1)`.
    #[serde(default)]
    pub k: Option<usize>,
    /// Support window; defaults to `3 max sqrt(eps_k)`.
    #[serde(default)]
    pub support: Option<f64>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Identity-resolution block; defaults to `min(K + 1, D - margin)`.
    #[serde(default)]
    pub block: Option<usize>,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
}

fn default_nodes() -> usize {
    1600
}

fn default_n_theta() -> usize {
    64
}

impl Default for MomentsConfig {
    fn default() -> Self {
        Self {
            k: None,
            support: None,
            nodes: default_nodes(),
            block: None,
            n_theta: default_n_theta(),
        }
    }
}

fn default_grid() -> Vec<[f64; 2]> {
    vec![[0.5, 0.0]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub dim: usize,
    pub depth: usize,
    pub margin: usize,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub suites: Vec<Suite>,
    /// `[re, im]` pairs.
    #[serde(default = "default_grid")]
    pub coherent_grid: Vec<[f64; 2]>,
    #[serde(default)]
    pub moments: MomentsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.suites.is_empty() {
            return bad("no suites requested".into());
        }
        if self.model.kind() != ModelKind::TwoByTwo {
            if self.depth >= self.dim {
                return bad(format!("depth {} must be below dim {}", self.depth, self.dim));
            }
            if self.depth + self.margin > self.dim {
                return bad(format!(
                    "depth + margin = {} exceeds dim {}",
                    self.depth + self.margin,
                    self.dim
                ));
            }
            if self.margin > self.depth || self.depth == 0 {
                return bad(format!("need 1 <= depth and margin <= depth, got {} / {}", self.depth, self.margin));
            }
        }
        for (name, v) in &self.tolerances {
            if !TOLERANCE_NAMES.iter().any(|(n, _)| n == name) {
                let known: Vec<&str> = TOLERANCE_NAMES.iter().map(|(n, _)| *n).collect();
                return bad(format!("unknown tolerance {name:?}; known: {}", known.join(", ")));
            }
            if !(v.is_finite() && *v > 0.0) {
                return bad(format!("tolerance {name} = {v} must be positive"));
            }
        }
        if self.suites.contains(&Suite::Coherent) && self.coherent_grid.is_empty() {
            return bad("coherent suite needs a non-empty coherent_grid".into());
        }
        if self.coherent_grid.iter().flatten().any(|x| !x.is_finite()) {
            return bad("coherent_grid entries must be finite".into());
        }
        let m = &self.moments;
        if m.support.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
            return bad("moments.support must be positive".into());
        }
        if m.n_theta == 0 || m.block == Some(0) {
            return bad("moments.n_theta and moments.block must be positive".into());
        }
        Ok(())
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances.get(name).copied().unwrap_or_else(|| {
            TOLERANCE_NAMES
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, v)| *v)
                .expect("known tolerance name")
        })
    }

    fn check_tolerances(&self) -> CheckTolerances {
        CheckTolerances {
            battery: self.tolerance("battery"),
            vacuum: self.tolerance("vacuum"),
            theorem1: self.tolerance("theorem1"),
            intertwining: self.tolerance("intertwining"),
        }
    }

    /// Suites in execution order, without repeats.
    pub fn ordered_suites(&self) -> Vec<Suite> {
        let mut s = self.suites.clone();
        s.sort();
        s.dedup();
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteResult {
    pub checks: Vec<CheckResult>,
    pub extras: Map<String, Value>,
}

impl SuiteResult {
    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    fn failed(id: &str, message: String) -> Self {
        let mut s = SuiteResult::default();
        s.checks.push(CheckResult::new(id, f64::NAN, 0.0, (0, 0)));
        s.extras.insert("error".into(), Value::String(message));
        s
    }

    fn to_json(&self) -> Value {
        json!({
            "checks": self.checks,
            "extras": self.extras,
            "pass": self.pass(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Value,
    pub exit_code: i32,
}

impl RunOutcome {
    pub fn to_json_string(&self) -> String {
        to_canonical_json(&self.report)
    }
}

/// Runs every requested suite. Numerical failures become failed checks;
/// only an unusable config is an error.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, ConfigError> {
    cfg.validate()?;
    let model = cfg
        .model
        .build(cfg.dim, cfg.depth, cfg.margin)
        .map_err(|e| ConfigError::Model(e.to_string()));
    let mut suites = Map::new();
    let mut verdicts = Map::new();
    let mut all = true;
    for suite in cfg.ordered_suites() {
        let result = match &model {
            Ok(m) => run_suite(suite, cfg, m),
            Err(e) => SuiteResult::failed("model-build", e.to_string()),
        };
        let pass = result.pass();
        all &= pass;
        verdicts.insert(suite.name().into(), Value::String(verdict_word(pass).into()));
        suites.insert(suite.name().into(), result.to_json());
    }
    verdicts.insert("overall".into(), Value::String(verdict_word(all).into()));
    let mut header = Map::new();
    if let Ok(m) = &model {
        if !m.warnings.is_empty() {
            header.insert("warnings".into(), json!(m.warnings));
        }
    }
    let report = json!({
        "version": REPORT_VERSION,
        "tool_version": TOOL_VERSION,
        "config": cfg,
        "model": header,
        "suites": suites,
        "verdicts": verdicts,
    });
    Ok(RunOutcome {
        report,
        exit_code: if all { 0 } else { 1 },
    })
}

/// Runs and writes the report to `output_path` when one is configured.
pub fn run_to_file(cfg: &RunConfig) -> Result<RunOutcome, ConfigError> {
    let outcome = run(cfg)?;
    if let Some(path) = &cfg.output_path {
        std::fs::write(path, outcome.to_json_string() + "\n").map_err(|e| ConfigError::Io {
            path: path.clone(),
            message: e.to_string(),
        })?;
    }
    Ok(outcome)
}

fn verdict_word(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn run_suite(suite: Suite, cfg: &RunConfig, model: &ZooModel) -> SuiteResult {
    match suite {
        Suite::Battery => battery_suite(cfg, model),
        Suite::Theorem1 => theorem1_suite(cfg, model),
        Suite::Riesz => riesz_suite(model),
        Suite::Coherent => coherent_suite(cfg, model),
        Suite::Moments => moments_suite(cfg, model),
    }
}

fn battery_suite(cfg: &RunConfig, model: &ZooModel) -> SuiteResult {
    let fam = &model.family;
    let tol = cfg.check_tolerances();
    let report = verify_family(fam, &tol);
    let mut out = SuiteResult {
        checks: report.checks,
        ..Default::default()
    };
    if let Some(r) = model.closed_form_residual() {
        out.checks
            .push(CheckResult::new("closed-form-ladder", r, tol.battery, (0, fam.depth())));
    }
    if !model.diagnostics.is_empty() {
        out.extras.insert("diagnostics".into(), json!(model.diagnostics));
    }
    out.extras.insert("eps".into(), json!(fam.eps().values()));
    out
}

fn theorem1_suite(cfg: &RunConfig, model: &ZooModel) -> SuiteResult {
    let fam = &model.family;
    let tol = Tolerances::default();
    let checks = cfg.check_tolerances();
    let rt = match theorem1_roundtrip(fam, &tol, &checks) {
        Ok(rt) => rt,
        Err(e) => return SuiteResult::failed("thm1-metric", e.to_string()),
    };
    let mut out = SuiteResult {
        checks: rt.report.checks.clone(),
        ..Default::default()
    };
    let k = fam.interior();
    match check_intertwining(fam, &tol) {
        Ok(r) => {
            for (id, v) in [
                ("intertwining-M-T", r.m_t),
                ("intertwining-T-Mdual", r.t_mdual),
                ("intertwining-M-S", r.m_s),
            ] {
                out.checks.push(CheckResult::new(id, v, checks.intertwining, (0, k)));
            }
        }
        Err(e) => {
            out.checks
                .push(CheckResult::new("intertwining-M-T", f64::NAN, checks.intertwining, (0, k)));
            out.extras.insert("error".into(), Value::String(e.to_string()));
        }
    }
    let rebuild = rebuild_residual(fam, &rt, &tol).unwrap_or(f64::NAN);
    out.checks.push(CheckResult::new("thm1-rebuild", rebuild, checks.theorem1, (0, k)));
    out.extras.insert("metric_spectrum".into(), json!(rt.metric.spectrum));
    out
}

fn riesz_suite(model: &ZooModel) -> SuiteResult {
    let diag = riesz_diagnostic(&model.family);
    let last = diag.levels.last().map_or((0, 0), |l| (0, l.depth));
    // the ratio between the widest section's frame bounds; regular iff the verdict says so
    let spread = diag.upper / diag.lower;
    let mut check = CheckResult::new("riesz-regular", spread, f64::INFINITY, last);
    check.pass = diag.verdict == RegularVerdict::Regular;
    let mut out = SuiteResult {
        checks: vec![check],
        ..Default::default()
    };
    out.extras.insert("diagnostic".into(), json!(diag));
    out
}

fn coherent_suite(cfg: &RunConfig, model: &ZooModel) -> SuiteResult {
    let fam = &model.family;
    let eps = fam.eps();
    let dim = fam.dim();
    let a = FockOperator::lowering(eps);
    let tol_eig = cfg.tolerance("coherent");
    let tol_h = cfg.tolerance("heisenberg");
    let mut out = SuiteResult::default();
    let mut states = Vec::new();
    for (i, [re, im]) in cfg.coherent_grid.iter().enumerate() {
        let z = C64::new(*re, *im);
        let tag = |s: &str| format!("{s}[{i}]");
        let state = match build_xi(eps, z, dim) {
            Ok(s) => s,
            Err(e) => {
                out.checks.push(CheckResult::new(tag("coherent-build"), f64::NAN, tol_eig, (0, dim - 1)));
                states.push(json!({ "z": [re, im], "error": e.to_string() }));
                continue;
            }
        };
        out.checks.push(CheckResult::new(
            tag("coherent-norm"),
            (state.coeffs.norm() - 1.0).abs(),
            tol_eig,
            (0, dim - 1),
        ));
        out.checks.push(CheckResult::new(
            tag("coherent-eigen"),
            eigen_residual(&state.coeffs, z, &a),
            tol_eig,
            (0, dim - 2),
        ));
        // the same state expanded on the family's own ladder
        let ladder_state = build_xi(eps, z, fam.depth() + 1);
        let fam_res = ladder_state
            .as_ref()
            .map_or(f64::NAN, |s| eigen_residual(&s.in_family(fam.phi()), z, fam.a()));
        out.checks.push(CheckResult::new(
            tag("coherent-eigen-family"),
            fam_res,
            tol_eig,
            (0, fam.depth()),
        ));
        let (lhs, rhs) = heisenberg_product(&state, &a);
        out.checks.push(CheckResult::new(
            tag("eq54-heisenberg"),
            (lhs - rhs).abs() / rhs.max(f64::MIN_POSITIVE).max(lhs),
            tol_h,
            (0, dim - 2),
        ));
        states.push(json!({
            "z": [re, im],
            "norm_n": state.norm_n,
            "tail": state.tail,
            "radius_estimate": state.radius_estimate,
            "heisenberg": [lhs, rhs],
        }));
    }
    out.extras.insert("states".into(), Value::Array(states));
    out
}

fn moments_suite(cfg: &RunConfig, model: &ZooModel) -> SuiteResult {
    let fam = &model.family;
    let eps = fam.eps();
    let dim = fam.dim();
    let m = &cfg.moments;
    let k = m.k.unwrap_or(10.min(dim - 1)).min(dim - 1);
    let support = m.support.unwrap_or_else(|| default_support(eps, k));
    let (measure, feasibility) = match solve_moment_problem(eps, k, support, m.nodes) {
        Ok(x) => x,
        Err(e) => return SuiteResult::failed("eq53-moments", e.to_string()),
    };
    let block = m.block.unwrap_or((k + 1).min(dim - fam.margin())).min(dim);
    let mut out = SuiteResult::default();
    if let Some((name, closed)) = closed_form_measure(&cfg.model, eps) {
        let res = check_moment_measure(eps, &closed, k).into_iter().fold(0.0, f64::max);
        out.checks
            .push(CheckResult::new("eq53-closed-form", res, cfg.tolerance("moments"), (0, k)));
        out.extras.insert("closed_form".into(), json!(name));
    }
    let resolution = check_identity_resolution(eps, &measure, block, m.n_theta);
    out.checks
        .push(CheckResult::new("eq53-moments", feasibility, cfg.tolerance("moments"), (0, k)));
    out.checks.push(CheckResult::new(
        "identity-resolution",
        resolution,
        cfg.tolerance("resolution"),
        (0, block - 1),
    ));
    out.extras.insert("k".into(), json!(k));
    out.extras.insert("support".into(), json!(support));
    out.extras.insert("block".into(), json!(block));
    out.extras.insert("measure".into(), json!(measure));
    out
}

/// The known measure for the bosonic and quon spectra, if the model has one.
fn closed_form_measure(spec: &ModelSpec, eps: &EpsilonSequence) -> Option<(&'static str, RadialMeasure)> {
    let q = match spec {
        ModelSpec::Quon { q, .. } => Some(*q),
        ModelSpec::SimilarityDiagonal {
            eps: EpsSpec::Quon { q },
            ..
        } => Some(*q),
        _ => None,
    };
    if let Some(q) = q.filter(|q| *q > 0.0 && *q < 1.0) {
        return Some(("quon", RadialMeasure::quon(q)));
    }
    let bosonic = eps.values().iter().enumerate().all(|(n, e)| *e == n as f64);
    bosonic.then(|| ("gaussian", RadialMeasure::gaussian(128)))
}

/// One row per model kind.
pub fn list_models() -> Vec<crate::zoo::ModelInfo> {
    ModelKind::ALL.into_iter().map(ModelKind::info).collect()
}

/// Known kinds closest to `name`, best first.
pub fn suggest_kinds(name: &str) -> Vec<&'static str> {
    let mut scored: Vec<(usize, &'static str)> = ModelKind::ALL
        .into_iter()
        .map(|k| (edit_distance(name, k.name()), k.name()))
        .collect();
    scored.sort();
    scored.into_iter().map(|(_, n)| n).collect()
}

fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = vec![i + 1];
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != *cb);
            cur.push(sub.min(prev[j + 1] + 1).min(cur[j] + 1));
        }
        prev = cur;
    }
    prev[b.len()]
}

/// JSON with sorted keys, two-space indent, and floats in shortest
/// round-trip scientific form (`4.5e0`).
pub fn to_canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                let f = n.as_f64().expect("finite number");
                write!(out, "{f:e}").unwrap();
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // short numeric rows stay on one line
            if items.len() <= 4 && items.iter().all(|x| x.is_number() || x.is_null()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, indent);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("key"));
                out.push_str(": ");
                write_value(out, &map[*k], indent + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Plain-text summary: one line per check and the verdicts.
pub fn render_table(report: &Value) -> String {
    let mut out = String::new();
    if let Some(suites) = report["suites"].as_object() {
        for (name, suite) in suites {
            writeln!(out, "[{name}]").unwrap();
            for c in suite["checks"].as_array().into_iter().flatten() {
                let residual = c["residual"].as_f64().map_or("NaN".to_string(), |r| format!("{r:.3e}"));
                let tol = c["tol"].as_f64().map_or("-".to_string(), |t| format!("{t:.0e}"));
                writeln!(
                    out,
                    "  {:<28} {:>11} <= {:<7} {}",
                    c["id"].as_str().unwrap_or("?"),
                    residual,
                    tol,
                    if c["pass"].as_bool() == Some(true) { "ok" } else { "FAIL" }
                )
                .unwrap();
            }
            if let Some(err) = suite["extras"]["error"].as_str() {
                writeln!(out, "  error: {err}").unwrap();
            }
        }
    }
    writeln!(out, "overall: {}", report["verdicts"]["overall"].as_str().unwrap_or("?")).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Polynomial;

    fn quon_config(suites: Vec<Suite>) -> RunConfig {
        RunConfig {
            model: ModelSpec::Quon {
                q: 0.5,
                use_n0_similarity: true,
            },
            dim: 40,
            depth: 30,
            margin: 2,
            tolerances: BTreeMap::new(),
            suites,
            coherent_grid: vec![[0.5, 0.0], [0.3, 0.4]],
            moments: MomentsConfig::default(),
            output_path: None,
        }
    }

    #[test]
    fn quon_all_suites_pass() {
        let out = run(&quon_config(Suite::ALL.to_vec())).unwrap();
        assert_eq!(out.exit_code, 0, "{}", render_table(&out.report));
    }

    #[test]
    fn f_deformed_riesz_is_a_failed_verdict() {
        let mut cfg = quon_config(vec![Suite::Riesz]);
        cfg.model = ModelSpec::FDeformed {
            f: Polynomial::new(vec![0.0, 1.0]),
        };
        cfg.dim = 30;
        cfg.depth = 20;
        let out = run(&cfg).unwrap();
        assert_eq!(out.exit_code, 1);
        assert_eq!(
            out.report["suites"]["riesz"]["extras"]["diagnostic"]["verdict"],
            "non-regular-indicated"
        );
    }

    #[test]
    fn config_errors() {
        let mut cfg = quon_config(vec![Suite::Battery]);
        cfg.depth = 41;
        assert!(matches!(run(&cfg), Err(ConfigError::Invalid(_))));
        let mut cfg = quon_config(vec![]);
        assert!(cfg.validate().is_err());
        cfg.suites = vec![Suite::Battery];
        cfg.tolerances.insert("battery".into(), -1.0);
        assert!(cfg.validate().is_err());
        cfg.tolerances.clear();
        cfg.tolerances.insert("nonsense".into(), 1.0);
        assert!(cfg.validate().is_err());
        assert!(RunConfig::from_json(r#"{"model": {"kind": "quon", "q": 0.5}}"#).is_err());
    }

    #[test]
    fn unbuildable_model_fails_without_crashing() {
        let mut cfg = quon_config(vec![Suite::Battery]);
        cfg.model = ModelSpec::Quon {
            q: 1.5,
            use_n0_similarity: false,
        };
        let out = run(&cfg).unwrap();
        assert_eq!(out.exit_code, 1);
        assert!(out.report["suites"]["battery"]["extras"]["error"].is_string());
    }

    #[test]
    fn report_is_byte_identical_across_runs() {
        let cfg = quon_config(vec![Suite::Battery, Suite::Riesz, Suite::Moments]);
        let a = run(&cfg).unwrap().to_json_string();
        let b = run(&cfg).unwrap().to_json_string();
        assert_eq!(a, b);
        let parsed: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed["version"], REPORT_VERSION);
        assert!(!a.contains("NaN") && !a.contains("inf"));
    }

    #[test]
    fn canonical_floats_round_trip() {
        for x in [4.5, 1e-9, 0.1 + 0.2, -3.0, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = to_canonical_json(&json!(x));
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert!(s.contains('e'));
        }
        assert_eq!(to_canonical_json(&json!(f64::NAN)), "null");
        assert_eq!(to_canonical_json(&json!({"b": 1, "a": [1.5, 2]})), "{\n  \"a\": [1.5e0, 2],\n  \"b\": 1\n}");
    }

    #[test]
    fn model_listing_and_suggestions() {
        let rows = list_models();
        assert_eq!(rows.len(), 5);
        assert_eq!(suggest_kinds("qon")[0], "quon");
        assert_eq!(suggest_kinds("two_by_tw")[0], "two_by_two");
    }
}
