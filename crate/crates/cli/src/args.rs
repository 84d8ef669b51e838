//! Command-line flags and their translation into an experiment description.
//!
//! Every flag maps onto a field of the JSON experiment format. A `--spec`
//! file is read first and its fields take precedence; flags only fill in
//! what the file leaves unset.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::error::{schema, CliError};

#[derive(Debug, Parser)]
#[command(name = "finsec", version, about = "Finite sections of band operators on discrete groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate the word ball Ω_n and its growth profile.
    Ball(Common),
    /// Ω-boundary of Ω_n or of an explicit window.
    Boundary(Common),
    /// Check Y_{n-1} ⊆ int Y_n along the section sequence.
    NestingCheck(Common),
    /// Finite section matrix P_Y A P_Y.
    Truncate(Common),
    /// Boundary ideal generator for a single generator ω.
    IdealGen(Common),
    /// Quasicommutator P_Y A P_Y B P_Y − P_Y AB P_Y.
    Quasicomm(Common),
    /// Greedy inflating sequence for the section sequence.
    Inflate(Common),
    /// Block operator built from the finite sections of A.
    Assemble(Common),
    /// Limit operators of A along a sequence.
    LimitOp(Common),
    /// Truncated limit set of an inverse geodesic path.
    LimitSet(Common),
    /// σ_min trajectory of the finite sections of A.
    Scan(Common),
    /// Stability prediction from the limit-operator inventory.
    Predict(Common),
    /// Scan and prediction side by side.
    Compare(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ball(_) => "ball",
            Command::Boundary(_) => "boundary",
            Command::NestingCheck(_) => "nesting-check",
            Command::Truncate(_) => "truncate",
            Command::IdealGen(_) => "ideal-gen",
            Command::Quasicomm(_) => "quasicomm",
            Command::Inflate(_) => "inflate",
            Command::Assemble(_) => "assemble",
            Command::LimitOp(_) => "limit-op",
            Command::LimitSet(_) => "limit-set",
            Command::Scan(_) => "scan",
            Command::Predict(_) => "predict",
            Command::Compare(_) => "compare",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Ball(c)
            | Command::Boundary(c)
            | Command::NestingCheck(c)
            | Command::Truncate(c)
            | Command::IdealGen(c)
            | Command::Quasicomm(c)
            | Command::Inflate(c)
            | Command::Assemble(c)
            | Command::LimitOp(c)
            | Command::LimitSet(c)
            | Command::Scan(c)
            | Command::Predict(c)
            | Command::Compare(c) => c,
        }
    }
}

/// Flags shared by all subcommands. Element lists are either a JSON array or
/// comma-separated integers / free-group words, e.g. `-1,0,1` or `a,B`.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON experiment description; its fields override the flags below.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output directory for reports and the run manifest.
    #[arg(long, default_value = "finsec-out")]
    pub out: PathBuf,
    /// Group: Z, Z<d>, F<r> or H.
    #[arg(long)]
    pub group: Option<String>,
    /// Generating set Ω (the identity is added automatically).
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<String>,
    /// Radius or section index n.
    #[arg(long, visible_alias = "ball")]
    pub n: Option<usize>,
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Explicit window Y.
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    /// The generator ω for `ideal-gen`.
    #[arg(long, allow_hyphen_values = true)]
    pub letter: Option<String>,
    /// Operator A as inline JSON.
    #[arg(long)]
    pub operator: Option<String>,
    /// Second operator B as inline JSON.
    #[arg(long)]
    pub operator_b: Option<String>,
    /// Section sequence: `balls` or `strided:<k>`.
    #[arg(long)]
    pub sections: Option<String>,
    /// Sequence h for `limit-op` as inline JSON.
    #[arg(long)]
    pub sequence: Option<String>,
    /// Letters of a geodesic path (limit sets and probe directions).
    #[arg(long, allow_hyphen_values = true)]
    pub path: Option<String>,
    /// Shifts considered by the candidate inventory.
    #[arg(long, allow_hyphen_values = true)]
    pub shifts: Option<String>,
    /// Compression centre w* as a list of letters.
    #[arg(long, allow_hyphen_values = true)]
    pub w_star: Option<String>,
    /// Number of blocks in the inflating sequence.
    #[arg(long)]
    pub count: Option<usize>,
    /// Candidate pool for the inflating search.
    #[arg(long, allow_hyphen_values = true)]
    pub pool: Option<String>,
    /// Keep the enlarged targets of the strong construction disjoint.
    #[arg(long)]
    pub strong: bool,
    #[arg(long)]
    pub tau_stab: Option<f64>,
    #[arg(long)]
    pub tau_inv: Option<f64>,
    #[arg(long)]
    pub trend: Option<f64>,
    #[arg(long)]
    pub max_radius: Option<usize>,
    #[arg(long)]
    pub dim_cap: Option<usize>,
}

/// Parses a group name such as `Z`, `Z2`, `F3` or `H` into its JSON descriptor.
pub fn group_value(name: &str) -> Result<Value, CliError> {
    let bad = || schema(format!("unknown group `{name}` (expected Z, Z<d>, F<r> or H)"));
    let name = name.trim();
    let number = |rest: &str, default: Option<usize>| -> Result<usize, CliError> {
        match (rest.is_empty(), default) {
            (true, Some(d)) => Ok(d),
            _ => rest.parse::<usize>().ok().filter(|&k| k > 0).ok_or_else(bad),
        }
    };
    match name.chars().next().map(|c| c.to_ascii_uppercase()) {
        Some('Z') => Ok(json!({"kind": "integer_lattice", "dim": number(&name[1..], Some(1))?})),
        Some('F') => Ok(json!({"kind": "free_group", "rank": number(&name[1..], None)?})),
        Some('H') if name.len() == 1 => Ok(json!({"kind": "heisenberg"})),
        _ => Err(bad()),
    }
}

/// Parses an element list literal into JSON values.
pub fn element_list(text: &str) -> Result<Vec<Value>, CliError> {
    let text = text.trim();
    if text.starts_with('[') {
        return match serde_json::from_str(text)? {
            Value::Array(items) => Ok(items),
            _ => Err(schema("expected a JSON array of elements")),
        };
    }
    Ok(text
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<i64>().map(Value::from).unwrap_or_else(|_| Value::String(t.to_string())))
        .collect())
}

fn element_literal(text: &str) -> Result<Value, CliError> {
    let text = text.trim();
    if text.starts_with('[') {
        return Ok(serde_json::from_str(text)?);
    }
    Ok(text.parse::<i64>().map(Value::from).unwrap_or_else(|_| Value::String(text.to_string())))
}

fn inline_json(flag: &str, text: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| schema(format!("--{flag}: {e}")))
}

fn sections_value(text: &str) -> Result<Value, CliError> {
    match text.trim() {
        "balls" => Ok(json!({"type": "balls"})),
        other => match other.strip_prefix("strided:").and_then(|k| k.parse::<usize>().ok()) {
            Some(stride) => Ok(json!({"type": "strided_balls", "stride": stride})),
            None => Err(schema(format!("unknown section sequence `{other}` (expected balls or strided:<k>)"))),
        },
    }
}

impl Common {
    /// The experiment description implied by the flags alone.
    fn flag_fields(&self) -> Result<Map<String, Value>, CliError> {
        let mut m = Map::new();
        if let Some(g) = &self.group {
            m.insert("group".into(), group_value(g)?);
        }
        if let Some(o) = &self.omega {
            m.insert("generators".into(), Value::Array(element_list(o)?));
        }
        if let Some(n) = self.n {
            m.insert("n".into(), n.into());
        }
        match (self.n_min, self.n_max) {
            (Some(lo), Some(hi)) => {
                m.insert("n_range".into(), json!([lo, hi]));
            }
            (None, Some(hi)) => {
                m.insert("n_range".into(), json!([1, hi]));
            }
            (Some(_), None) => return Err(schema("--n-min needs --n-max")),
            (None, None) => {}
        }
        if let Some(w) = &self.window {
            m.insert("window".into(), Value::Array(element_list(w)?));
        }
        if let Some(l) = &self.letter {
            m.insert("omega".into(), element_literal(l)?);
        }
        if let Some(a) = &self.operator {
            m.insert("operator".into(), inline_json("operator", a)?);
        }
        if let Some(b) = &self.operator_b {
            m.insert("operator_b".into(), inline_json("operator-b", b)?);
        }
        if let Some(s) = &self.sections {
            m.insert("sections".into(), sections_value(s)?);
        }
        if let Some(s) = &self.sequence {
            m.insert("sequence".into(), inline_json("sequence", s)?);
        }
        if let Some(p) = &self.path {
            m.insert("directions".into(), json!([element_list(p)?]));
        }
        if let Some(s) = &self.shifts {
            m.insert("shifts".into(), Value::Array(element_list(s)?));
        }
        if let Some(w) = &self.w_star {
            m.insert("w_star".into(), Value::Array(element_list(w)?));
        }
        if self.count.is_some() || self.pool.is_some() || self.strong {
            let mut inf = Map::new();
            inf.insert("count".into(), self.count.ok_or_else(|| schema("--pool/--strong need --count"))?.into());
            if let Some(p) = &self.pool {
                inf.insert("pool".into(), Value::Array(element_list(p)?));
            }
            inf.insert("strong".into(), self.strong.into());
            m.insert("inflating".into(), Value::Object(inf));
        }
        let mut th = Map::new();
        for (key, v) in [("tau_stab", self.tau_stab), ("tau_inv", self.tau_inv), ("trend", self.trend)] {
            if let Some(v) = v {
                th.insert(key.into(), v.into());
            }
        }
        if !th.is_empty() {
            m.insert("thresholds".into(), Value::Object(th));
        }
        let mut probe = Map::new();
        if let Some(r) = self.max_radius {
            probe.insert("max_radius".into(), r.into());
        }
        if let Some(c) = self.dim_cap {
            probe.insert("dim_cap".into(), c.into());
        }
        if !probe.is_empty() {
            m.insert("probe".into(), Value::Object(probe));
        }
        Ok(m)
    }

    /// Merges the spec file over the flags. Nested objects (thresholds,
    /// probe, inflating) merge key by key.
    pub fn effective_spec(&self) -> Result<Value, CliError> {
        let mut merged = self.flag_fields()?;
        if let Some(path) = &self.spec {
            let text = std::fs::read_to_string(path)?;
            let Value::Object(file) = serde_json::from_str::<Value>(&text)? else {
                return Err(schema("the spec file must hold a JSON object"));
            };
            for (key, value) in file {
                match (merged.get_mut(&key), value) {
                    (Some(Value::Object(base)), Value::Object(over)) if key != "group" && key != "operator" => {
                        base.extend(over);
                    }
                    (_, value) => {
                        merged.insert(key, value);
                    }
                }
            }
        }
        if !merged.contains_key("group") {
            return Err(schema("no group given (use --group or a spec file)"));
        }
        Ok(Value::Object(merged))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_names() {
        assert_eq!(group_value("Z").unwrap(), json!({"kind": "integer_lattice", "dim": 1}));
        assert_eq!(group_value("z3").unwrap(), json!({"kind": "integer_lattice", "dim": 3}));
        assert_eq!(group_value("F2").unwrap(), json!({"kind": "free_group", "rank": 2}));
        assert_eq!(group_value("H").unwrap(), json!({"kind": "heisenberg"}));
        for bad in ["F", "Z0", "Q", "H2", ""] {
            assert!(group_value(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn element_lists() {
        assert_eq!(element_list("-1,0,1").unwrap(), vec![json!(-1), json!(0), json!(1)]);
        assert_eq!(element_list("a, B").unwrap(), vec![json!("a"), json!("B")]);
        assert_eq!(element_list("[[1,0],[0,1]]").unwrap(), vec![json!([1, 0]), json!([0, 1])]);
        assert!(element_list("[1,").is_err());
    }

    #[test]
    fn spec_file_wins() {
        let dir = std::env::temp_dir().join(format!("finsec-args-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("spec.json");
        std::fs::write(&path, r#"{"group": {"kind": "free_group", "rank": 2}, "n": 3, "thresholds": {"tau_inv": 0.5}}"#)
            .unwrap();
        let common = Common {
            spec: Some(path),
            group: Some("Z".into()),
            n: Some(7),
            tau_stab: Some(0.25),
            ..Common::default()
        };
        let v = common.effective_spec().unwrap();
        assert_eq!(v["group"]["kind"], "free_group");
        assert_eq!(v["n"], 3);
        assert_eq!(v["thresholds"], json!({"tau_stab": 0.25, "tau_inv": 0.5}));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn missing_group_is_a_schema_error() {
        assert!(Common::default().effective_spec().is_err());
    }
}
