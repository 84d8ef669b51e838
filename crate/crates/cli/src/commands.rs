use finsec_core::descriptor::{operator_to_value, ExperimentSpec};
use finsec_core::sections::{
    assemble_op, ideal_generator, matrix_csv, quasicommutator, truncate, SectionMatrix,
};
use finsec_core::set::{build_inflating, check_nesting, limit_set_chain, CandidatePool, InflatingSequence};
use finsec_core::stability::{compare, predict_stability, stability_scan, Agreement, Prediction};
use finsec_core::{limit_operator, FiniteSet, GroupContext, StabilityReport, Verdict};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::Command;
use crate::error::{schema, CliError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DISAGREE: i32 = 1;
pub const EXIT_UNSTABLE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// What a subcommand produced: the JSON report, an optional CSV companion,
/// a one-line summary for stdout and the exit code.
pub struct Outcome {
    pub report: Value,
    pub csv: Option<String>,
    pub summary: String,
    pub code: i32,
}

impl Outcome {
    fn new(report: impl Serialize, summary: String) -> Result<Self, CliError> {
        Ok(Outcome { report: serde_json::to_value(report)?, csv: None, summary, code: EXIT_OK })
    }

    fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }

    fn with_code(mut self, code: i32) -> Self {
        self.code = code;
        self
    }
}

pub fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Stable => EXIT_OK,
        Verdict::Unstable => EXIT_UNSTABLE,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn require_n(spec: &ExperimentSpec) -> Result<usize, CliError> {
    spec.n.ok_or_else(|| schema("missing `n` (use --n or the spec field)"))
}

fn n_range(spec: &ExperimentSpec) -> Result<(usize, usize), CliError> {
    let (lo, hi) = match (spec.n_range, spec.n) {
        (Some([lo, hi]), _) => (lo, hi),
        (None, Some(n)) => (1, n),
        (None, None) => return Err(schema("missing `n_range` (use --n-min/--n-max or --n)")),
    };
    if lo == 0 || lo > hi {
        return Err(schema(format!("invalid n range [{lo}, {hi}]")));
    }
    Ok((lo, hi))
}

/// The explicit window if given, else Ω_n.
fn window_or_ball(spec: &ExperimentSpec, ctx: &GroupContext) -> Result<FiniteSet, CliError> {
    match spec.window()? {
        Some(w) if w.is_empty() => Err(schema("the window is empty")),
        Some(w) => {
            for g in &w {
                ctx.check(g)?;
            }
            Ok(w)
        }
        None => Ok(ctx.ball(require_n(spec)?)?),
    }
}

fn inflating(spec: &ExperimentSpec, ctx: &GroupContext) -> Result<InflatingSequence, CliError> {
    let inf = spec.inflating.as_ref().ok_or_else(|| schema("missing `inflating` (use --count)"))?;
    if inf.count == 0 {
        return Err(schema("inflating.count must be positive"));
    }
    let seq = spec.section_sequence(ctx)?;
    let pool = inf.pool.as_ref().map(|p| finsec_core::descriptor::parse_elements(spec.group, p)).transpose()?;
    let pool = match &pool {
        Some(list) => CandidatePool::List(list),
        None => CandidatePool::Ball,
    };
    Ok(build_inflating(&seq, inf.count, pool, inf.strong)?)
}

fn braces(set: &FiniteSet) -> String {
    let items: Vec<String> = set.iter().map(ToString::to_string).collect();
    format!("{{{}}}", items.join(", "))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn matrix_outcome(m: SectionMatrix) -> Result<Outcome, CliError> {
    let summary = format!("{}: {}×{} matrix, max |entry| {:.6e}", m.provenance, m.dim(), m.dim(), m.max_abs());
    let csv = m.to_csv();
    Ok(Outcome::new(&m, summary)?.with_csv(csv))
}

fn scan(spec: &ExperimentSpec, ctx: &GroupContext) -> Result<StabilityReport, CliError> {
    let a = spec.operator()?;
    let seq = spec.section_sequence(ctx)?;
    let (lo, hi) = n_range(spec)?;
    Ok(stability_scan(&a, &seq, lo..=hi, &spec.thresholds())?)
}

fn predict(spec: &ExperimentSpec, ctx: &GroupContext) -> Result<Prediction, CliError> {
    let a = spec.operator()?;
    Ok(predict_stability(ctx, &a, &spec.probe_config(ctx)?)?)
}

fn prediction_csv(p: &Prediction) -> String {
    let mut out = String::from("candidate,method,radius,dim,sigma_min\n");
    for e in &p.evidence {
        let tag = csv_field(&e.tag.to_string());
        let method = serde_json::to_value(e.probe.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        if e.probe.curve.is_empty() {
            out.push_str(&format!("{tag},{method},,,{:.16e}\n", e.probe.min));
        }
        for pt in &e.probe.curve {
            out.push_str(&format!("{tag},{method},{},{},{:.16e}\n", pt.radius, pt.dim, pt.sigma_min));
        }
    }
    out
}

pub fn run(command: &Command, spec: &ExperimentSpec, ctx: &GroupContext) -> Result<Outcome, CliError> {
    match command {
        Command::Ball(_) => {
            let n = require_n(spec)?;
            let ball = ctx.ball(n)?;
            let growth = ctx.growth_profile(n)?;
            let mut csv = String::from("n,size\n");
            for (k, s) in growth.iter().enumerate() {
                csv.push_str(&format!("{k},{s}\n"));
            }
            let summary = format!("|Ω_{n}| = {}", ball.len());
            Ok(Outcome::new(json!({"n": n, "size": ball.len(), "growth": growth, "elements": ball}), summary)?
                .with_csv(csv))
        }
        Command::Boundary(_) => {
            let y = window_or_ball(spec, ctx)?;
            let boundary = y.boundary(ctx.generators());
            let interior = y.interior(ctx.generators());
            let summary = braces(&boundary);
            Outcome::new(
                json!({
                    "window_size": y.len(),
                    "interior_size": interior.len(),
                    "boundary_size": boundary.len(),
                    "boundary": boundary,
                }),
                summary,
            )
        }
        Command::NestingCheck(_) => {
            let n = require_n(spec)?;
            let report = check_nesting(&spec.section_sequence(ctx)?, n)?;
            let mut csv = String::from("n,size,previous_in_interior\n");
            for r in &report.records {
                csv.push_str(&format!("{},{},{}\n", r.n, r.size, r.previous_in_interior));
            }
            let summary = match report.first_failure {
                None => format!("nested in interiors up to n = {n}"),
                Some(k) => format!("Y_{} is not inside int Y_{k}", k - 1),
            };
            Ok(Outcome::new(&report, summary)?.with_csv(csv))
        }
        Command::Truncate(_) => {
            let a = spec.operator()?;
            matrix_outcome(truncate(&a, &window_or_ball(spec, ctx)?)?)
        }
        Command::IdealGen(_) => {
            let omega = spec.omega()?.ok_or_else(|| schema("missing `omega` (use --letter)"))?;
            matrix_outcome(ideal_generator(ctx, &omega, &window_or_ball(spec, ctx)?)?)
        }
        Command::Quasicomm(_) => {
            let (a, b) = (spec.operator()?, spec.operator_b()?);
            matrix_outcome(quasicommutator(&a, &b, &window_or_ball(spec, ctx)?)?)
        }
        Command::Inflate(_) => {
            let infl = inflating(spec, ctx)?;
            let summary = format!(
                "shifts: {}",
                infl.shifts.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
            );
            Outcome::new(json!({"sequence": &infl, "blocks": infl.blocks(), "valid": infl.is_valid()}), summary)
        }
        Command::Assemble(_) => {
            let a = spec.operator()?;
            let infl = inflating(spec, ctx)?;
            let sections: Vec<SectionMatrix> =
                infl.sections.iter().map(|y| truncate(&a, y)).collect::<Result<_, _>>()?;
            let op = assemble_op(ctx, &sections, &infl, spec.window()?.as_ref())?;
            let kept = op.blocks.iter().filter(|b| b.included).count();
            let summary = format!("window of {} elements, {kept}/{} blocks included", op.window.len(), op.blocks.len());
            let csv = matrix_csv(&op.matrix);
            Ok(Outcome::new(&op, summary)?.with_csv(csv))
        }
        Command::LimitOp(_) => {
            let a = spec.operator()?;
            let h = spec.sequence(ctx)?.ok_or_else(|| schema("missing `sequence`"))?;
            let limits = limit_operator(ctx, &a, &h)?;
            let summary = format!("{} limit operator(s)", limits.len());
            let values: Vec<Value> = limits.iter().map(operator_to_value).collect();
            Outcome::new(json!({"limits": values}), summary)
        }
        Command::LimitSet(_) => {
            let path = spec.directions(ctx)?.into_iter().next().ok_or_else(|| schema("missing path (use --path)"))?;
            let n = spec.n.unwrap_or(path.len());
            let chain = limit_set_chain(ctx, &path, n)?;
            let sizes: Vec<usize> = chain.iter().map(FiniteSet::len).collect();
            let set = chain.into_iter().fold(FiniteSet::empty(), |acc, s| acc.union(&s));
            let summary = format!("{} elements from {} inverse prefixes", set.len(), n);
            Outcome::new(json!({"path": path.describe(), "n": n, "chain_sizes": sizes, "size": set.len(), "set": set}), summary)
        }
        Command::Scan(_) => {
            let report = scan(spec, ctx)?;
            let summary = format!("scan verdict: {} ({})", report.verdict, report.reason);
            let csv = report.to_csv();
            Ok(Outcome::new(&report, summary)?.with_csv(csv).with_code(verdict_code(report.verdict)))
        }
        Command::Predict(_) => {
            let p = predict(spec, ctx)?;
            let summary = format!("predicted verdict: {} ({})", p.verdict, p.reason);
            let csv = prediction_csv(&p);
            Ok(Outcome::new(&p, summary)?.with_csv(csv).with_code(verdict_code(p.verdict)))
        }
        Command::Compare(_) => {
            let report = scan(spec, ctx)?;
            let p = predict(spec, ctx)?;
            let c = compare(&report, &p);
            let code = match c.agreement {
                Agreement::Agree => verdict_code(c.scan_verdict),
                Agreement::Disagree => EXIT_DISAGREE,
                Agreement::Inconclusive => EXIT_INCONCLUSIVE,
            };
            let agreement = serde_json::to_value(c.agreement)?;
            let summary = format!(
                "{}: scan {}, prediction {}",
                agreement.as_str().unwrap_or_default(),
                c.scan_verdict,
                c.predicted_verdict
            );
            Ok(Outcome::new(&c, summary)?.with_csv(report.to_csv()).with_code(code))
        }
    }
}
