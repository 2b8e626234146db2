use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use nlpb_core::report::{
    list_models, render_table, run_to_file, suggest_kinds, to_canonical_json, ConfigError,
    RunConfig, Suite,
};
use nlpb_core::zoo::ModelKind;

#[derive(Parser)]
#[command(name = "nlpb", version, about = "Verify non-linear pseudo-boson families on truncated Fock spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites from a config file and/or flags
    Verify(VerifyArgs),
    /// Show the available model kinds
    ListModels {
        #[arg(long)]
        json: bool,
        /// Show a single kind
        kind: Option<String>,
    },
    /// Coherent-state checks at the given points
    Coherent(CoherentArgs),
    /// Solve the radial moment problem and check the resolution of the identity
    Moments(MomentsArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model kind, e.g. quon or f_deformed
    #[arg(long)]
    model: Option<String>,
    /// Model parameter as key=value; values are parsed as JSON when possible
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    margin: Option<usize>,
    #[arg(long = "tolerance", value_name = "NAME=VALUE")]
    tolerances: Vec<String>,
    /// Print the JSON report instead of the table
    #[arg(long)]
    json: bool,
    /// Write the JSON report here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Suite to run; repeatable. Replaces the config's list.
    #[arg(long = "suite")]
    suites: Vec<String>,
}

#[derive(Args)]
struct CoherentArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Point as re,im; repeatable
    #[arg(long = "z", value_name = "RE,IM", required = true, allow_hyphen_values = true)]
    points: Vec<String>,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "R")]
    support: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    block: Option<usize>,
    #[arg(long = "n-theta")]
    n_theta: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(args) => verify(args),
        Command::ListModels { json, kind } => return list(json, kind),
        Command::Coherent(args) => coherent(args),
        Command::Moments(args) => moments(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn default_config() -> Value {
    json!({
        "model": ModelKind::Quon.default_spec(),
        "dim": 40,
        "depth": 30,
        "margin": 2,
        "suites": ["battery", "theorem1", "riesz", "coherent", "moments"],
    })
}

fn split_pair<'a>(raw: &'a str, what: &str) -> Result<(&'a str, &'a str), ConfigError> {
    raw.split_once('=')
        .ok_or_else(|| ConfigError::Invalid(format!("{what} {raw:?} is not of the form name=value")))
}

fn parse_kind(name: &str) -> Result<ModelKind, ConfigError> {
    ModelKind::parse(name).ok_or_else(|| {
        ConfigError::Invalid(format!(
            "unknown model kind {name:?}; did you mean: {}",
            suggest_kinds(name).join(", ")
        ))
    })
}

/// Applies flag overrides on top of a config document.
fn apply_overrides(cfg: &mut Map<String, Value>, args: &ModelArgs) -> Result<(), ConfigError> {
    if let Some(kind) = &args.model {
        let same = cfg.get("model").and_then(|m| m.get("kind")).and_then(Value::as_str) == Some(kind.as_str());
        if !same {
            cfg.insert("model".into(), json!(parse_kind(kind)?.default_spec()));
        }
    }
    for raw in &args.params {
        let (k, v) = split_pair(raw, "parameter")?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        match cfg.get_mut("model").and_then(Value::as_object_mut) {
            Some(model) => {
                model.insert(k.to_string(), value);
            }
            None => return Err(ConfigError::Invalid("--param needs a model".into())),
        }
    }
    for (key, v) in [("dim", args.dim), ("depth", args.depth), ("margin", args.margin)] {
        if let Some(v) = v {
            cfg.insert(key.into(), json!(v));
        }
    }
    if !args.tolerances.is_empty() {
        let tol = cfg.entry("tolerances").or_insert_with(|| json!({}));
        for raw in &args.tolerances {
            let (k, v) = split_pair(raw, "tolerance")?;
            let v: f64 = v
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("tolerance {k} = {v:?} is not a number")))?;
            tol[k] = json!(v);
        }
    }
    if let Some(out) = &args.out {
        cfg.insert("output_path".into(), json!(out.display().to_string()));
    }
    Ok(())
}

fn finish(cfg: Map<String, Value>, json_out: bool) -> Result<u8, ConfigError> {
    let cfg: RunConfig = serde_json::from_value(Value::Object(cfg))?;
    cfg.validate()?;
    let outcome = run_to_file(&cfg)?;
    if json_out {
        println!("{}", outcome.to_json_string());
    } else {
        print!("{}", render_table(&outcome.report));
    }
    Ok(outcome.exit_code as u8)
}

fn verify(args: VerifyArgs) -> Result<u8, ConfigError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            match serde_json::from_str::<Value>(&text)? {
                Value::Object(m) => m,
                _ => return Err(ConfigError::Invalid("config must be a JSON object".into())),
            }
        }
        None => default_config().as_object().cloned().expect("object"),
    };
    apply_overrides(&mut cfg, &args.model)?;
    if !args.suites.is_empty() {
        for s in &args.suites {
            if Suite::parse(s).is_none() {
                return Err(ConfigError::Invalid(format!("unknown suite {s:?}")));
            }
        }
        cfg.insert("suites".into(), json!(args.suites));
    }
    finish(cfg, args.model.json)
}

/// Defaults for the single-suite commands: a deep ladder so the coherent
/// series is not cut short.
fn single_suite_config(args: &ModelArgs, suite: &str) -> Result<Map<String, Value>, ConfigError> {
    let mut cfg = default_config().as_object().cloned().expect("object");
    cfg.insert("suites".into(), json!([suite]));
    if args.model.is_none() {
        return Err(ConfigError::Invalid("--model is required".into()));
    }
    apply_overrides(&mut cfg, args)?;
    if args.dim.is_some() && args.depth.is_none() {
        let dim = args.dim.unwrap_or(40);
        cfg.insert("depth".into(), json!(dim.saturating_sub(3).max(1)));
    }
    Ok(cfg)
}

fn coherent(args: CoherentArgs) -> Result<u8, ConfigError> {
    let mut cfg = single_suite_config(&args.model, "coherent")?;
    let mut grid = Vec::new();
    for p in &args.points {
        let parts: Vec<&str> = p.split(',').collect();
        let parsed: Option<Vec<f64>> = match parts.len() {
            1 => parts[0].trim().parse().ok().map(|re| vec![re, 0.0]),
            2 => parts[0]
                .trim()
                .parse()
                .ok()
                .zip(parts[1].trim().parse().ok())
                .map(|(re, im)| vec![re, im]),
            _ => None,
        };
        grid.push(parsed.ok_or_else(|| ConfigError::Invalid(format!("--z {p:?} is not re,im")))?);
    }
    cfg.insert("coherent_grid".into(), json!(grid));
    finish(cfg, args.model.json)
}

fn moments(args: MomentsArgs) -> Result<u8, ConfigError> {
    let mut cfg = single_suite_config(&args.model, "moments")?;
    let mut m = Map::new();
    if let Some(k) = args.k {
        m.insert("k".into(), json!(k));
    }
    if let Some(r) = args.support {
        m.insert("support".into(), json!(r));
    }
    if let Some(n) = args.nodes {
        m.insert("nodes".into(), json!(n));
    }
    if let Some(b) = args.block {
        m.insert("block".into(), json!(b));
    }
    if let Some(t) = args.n_theta {
        m.insert("n_theta".into(), json!(t));
    }
    cfg.insert("moments".into(), Value::Object(m));
    finish(cfg, args.model.json)
}

fn list(json_out: bool, kind: Option<String>) -> ExitCode {
    let mut rows = list_models();
    if let Some(name) = &kind {
        match ModelKind::parse(name) {
            Some(k) => rows.retain(|r| r.kind == k),
            None => {
                eprintln!(
                    "unknown model kind {name:?}; did you mean: {}",
                    suggest_kinds(name).join(", ")
                );
                return ExitCode::from(2);
            }
        }
    }
    if json_out {
        println!("{}", to_canonical_json(&json!(rows)));
        return ExitCode::SUCCESS;
    }
    for row in rows {
        println!("{:<20} {}", row.kind.name(), row.implements);
        for p in &row.params {
            println!("  {:<18} {}", p.name, p.range);
        }
    }
    ExitCode::SUCCESS
}
