//! JSON descriptors for groups, elements, operators and experiments.
//!
//! Element literals depend on the group: an integer or an integer array on
//! ℤ^d, a word such as `"abA"` on a free group (upper case is the inverse
//! letter, `"e"` the identity) and an `[x, y, z]` triple on the Heisenberg
//! group. Complex numbers are either a real number or a `[re, im]` pair.

use serde::Deserialize;
use serde_json::{json, Value};

use crate::band::{Background, BandOperator, Diagonal, DiagonalRule, SequenceSpec};
use crate::error::DescriptorError;
use crate::group::{parse_free_word, Element, GroupContext, GroupKind};
use crate::set::{FiniteSet, GeodesicPath, SectionSequence};
use crate::stability::{ProbeConfig, Thresholds};
use crate::C64;

fn schema(msg: impl Into<String>) -> DescriptorError {
    DescriptorError::Schema(msg.into())
}

pub fn parse_element(kind: GroupKind, v: &Value) -> Result<Element, DescriptorError> {
    let ints = |arr: &Vec<Value>| -> Result<Vec<i64>, DescriptorError> {
        arr.iter().map(|x| x.as_i64().ok_or_else(|| schema(format!("expected an integer, got {x}")))).collect()
    };
    let g = match (kind, v) {
        (GroupKind::IntegerLattice { dim: 1 }, Value::Number(n)) => {
            Element::Lattice(vec![n.as_i64().ok_or_else(|| schema(format!("expected an integer, got {n}")))?])
        }
        (GroupKind::IntegerLattice { .. }, Value::Array(arr)) => Element::Lattice(ints(arr)?),
        (GroupKind::FreeGroup { .. }, Value::String(s)) => parse_free_word(s)?,
        (GroupKind::Heisenberg, Value::Array(arr)) if arr.len() == 3 => {
            let v = ints(arr)?;
            Element::Heisenberg([v[0], v[1], v[2]])
        }
        _ => return Err(schema(format!("{v} is not an element literal for {kind}"))),
    };
    if !kind.contains(&g) {
        return Err(schema(format!("{v} is not an element of {kind}")));
    }
    Ok(g)
}

pub fn parse_elements(kind: GroupKind, vs: &[Value]) -> Result<Vec<Element>, DescriptorError> {
    vs.iter().map(|v| parse_element(kind, v)).collect()
}

pub fn element_to_value(g: &Element) -> Value {
    serde_json::to_value(g).expect("elements serialize")
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ComplexLit {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexLit> for C64 {
    fn from(c: ComplexLit) -> C64 {
        match c {
            ComplexLit::Real(r) => C64::new(r, 0.0),
            ComplexLit::Pair([re, im]) => C64::new(re, im),
        }
    }
}

fn complex_to_value(c: C64) -> Value {
    json!([c.re, c.im])
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExceptionSpec {
    pub at: Value,
    pub value: ComplexLit,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiagonalSpec {
    Constant { value: ComplexLit },
    PerturbedConstant { value: ComplexLit, exceptions: Vec<ExceptionSpec> },
    LatticePeriodic { period: Vec<i64>, table: Vec<ComplexLit> },
    PeriodicPerturbed { period: Vec<i64>, table: Vec<ComplexLit>, exceptions: Vec<ExceptionSpec> },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub shift: Value,
    pub diagonal: DiagonalSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub terms: Vec<TermSpec>,
}

fn exceptions(kind: GroupKind, list: &[ExceptionSpec]) -> Result<Vec<(Element, C64)>, DescriptorError> {
    list.iter().map(|e| Ok((parse_element(kind, &e.at)?, e.value.into()))).collect()
}

pub fn build_diagonal(kind: GroupKind, spec: &DiagonalSpec) -> Result<Diagonal, DescriptorError> {
    let table = |t: &[ComplexLit]| t.iter().map(|&c| c.into()).collect::<Vec<C64>>();
    let d = match spec {
        DiagonalSpec::Constant { value } => Diagonal::constant((*value).into()),
        DiagonalSpec::PerturbedConstant { value, exceptions: ex } => {
            Diagonal::perturbed((*value).into(), exceptions(kind, ex)?)
        }
        DiagonalSpec::LatticePeriodic { period, table: t } => Diagonal::periodic(period.clone(), table(t))?,
        DiagonalSpec::PeriodicPerturbed { period, table: t, exceptions: ex } => {
            Diagonal::periodic(period.clone(), table(t))?.with_exceptions(exceptions(kind, ex)?)
        }
    };
    d.check_kind(kind)?;
    Ok(d)
}

pub fn build_operator(kind: GroupKind, spec: &OperatorSpec) -> Result<BandOperator, DescriptorError> {
    let terms = spec
        .terms
        .iter()
        .map(|t| Ok((parse_element(kind, &t.shift)?, build_diagonal(kind, &t.diagonal)?)))
        .collect::<Result<Vec<_>, DescriptorError>>()?;
    Ok(BandOperator::from_terms(kind, terms)?)
}

pub fn parse_operator(kind: GroupKind, json: &str) -> Result<BandOperator, DescriptorError> {
    let spec: OperatorSpec = serde_json::from_str(json)?;
    build_operator(kind, &spec)
}

pub fn diagonal_to_value(d: &Diagonal) -> Value {
    let ex: Vec<Value> =
        d.exceptions().iter().map(|(k, &v)| json!({"at": element_to_value(k), "value": complex_to_value(v)})).collect();
    let rule = serde_json::to_value(d.rule()).expect("rule serializes");
    match (d.background(), d.rule()) {
        (Background::Constant(c), DiagonalRule::Constant) => json!({"rule": rule, "value": complex_to_value(*c)}),
        (Background::Constant(c), _) => json!({"rule": rule, "value": complex_to_value(*c), "exceptions": ex}),
        (Background::Periodic { period, table }, r) => {
            let table: Vec<Value> = table.iter().map(|&c| complex_to_value(c)).collect();
            if r == DiagonalRule::LatticePeriodic {
                json!({"rule": rule, "period": period, "table": table})
            } else {
                json!({"rule": rule, "period": period, "table": table, "exceptions": ex})
            }
        }
    }
}

/// The operator descriptor `{"terms": [{"shift": …, "diagonal": …}]}`.
pub fn operator_to_value(a: &BandOperator) -> Value {
    let terms: Vec<Value> = a
        .terms()
        .iter()
        .map(|(t, d)| json!({"shift": element_to_value(t), "diagonal": diagonal_to_value(d)}))
        .collect();
    json!({ "terms": terms })
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SectionsSpec {
    Balls,
    StridedBalls { stride: usize },
    Explicit { sets: Vec<Vec<Value>> },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceDesc {
    Ray { direction: Value },
    InverseGeodesic { letters: Vec<Value> },
    Explicit { elements: Vec<Value> },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflatingSpec {
    pub count: usize,
    #[serde(default)]
    pub pool: Option<Vec<Value>>,
    #[serde(default)]
    pub strong: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSpec {
    pub tau_stab: Option<f64>,
    pub tau_inv: Option<f64>,
    pub trend: Option<f64>,
    pub zero: Option<f64>,
    pub decay: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub max_radius: Option<usize>,
    pub dim_cap: Option<usize>,
    pub default_directions: Option<bool>,
}

/// A complete experiment description; every field besides `group` is optional
/// and only consulted by the commands that need it.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub group: GroupKind,
    #[serde(default)]
    pub generators: Option<Vec<Value>>,
    #[serde(default)]
    pub generator_search_depth: Option<usize>,
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub operator_b: Option<OperatorSpec>,
    #[serde(default)]
    pub sections: Option<SectionsSpec>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_range: Option<[usize; 2]>,
    #[serde(default)]
    pub window: Option<Vec<Value>>,
    #[serde(default)]
    pub omega: Option<Value>,
    #[serde(default)]
    pub sequence: Option<SequenceDesc>,
    #[serde(default)]
    pub directions: Option<Vec<Vec<Value>>>,
    #[serde(default)]
    pub shifts: Option<Vec<Value>>,
    #[serde(default)]
    pub w_star: Option<Vec<Value>>,
    #[serde(default)]
    pub inflating: Option<InflatingSpec>,
    #[serde(default)]
    pub thresholds: Option<ThresholdSpec>,
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
}

pub const DEFAULT_GENERATOR_SEARCH_DEPTH: usize = 32;

impl ExperimentSpec {
    pub fn from_json(json: &str) -> Result<Self, DescriptorError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn minimal(group: GroupKind) -> Self {
        ExperimentSpec {
            group,
            generators: None,
            generator_search_depth: None,
            operator: None,
            operator_b: None,
            sections: None,
            n: None,
            n_range: None,
            window: None,
            omega: None,
            sequence: None,
            directions: None,
            shifts: None,
            w_star: None,
            inflating: None,
            thresholds: None,
            probe: None,
        }
    }

    pub fn context(&self) -> Result<GroupContext, DescriptorError> {
        match &self.generators {
            None => Ok(GroupContext::standard(self.group)),
            Some(list) => {
                let gens = parse_elements(self.group, list)?;
                let depth = self.generator_search_depth.unwrap_or(DEFAULT_GENERATOR_SEARCH_DEPTH);
                Ok(GroupContext::with_generators(self.group, gens, depth)?)
            }
        }
    }

    pub fn operator(&self) -> Result<BandOperator, DescriptorError> {
        let spec = self.operator.as_ref().ok_or_else(|| schema("missing field `operator`"))?;
        build_operator(self.group, spec)
    }

    pub fn operator_b(&self) -> Result<BandOperator, DescriptorError> {
        let spec = self.operator_b.as_ref().ok_or_else(|| schema("missing field `operator_b`"))?;
        build_operator(self.group, spec)
    }

    pub fn section_sequence(&self, ctx: &GroupContext) -> Result<SectionSequence, DescriptorError> {
        Ok(match &self.sections {
            None | Some(SectionsSpec::Balls) => SectionSequence::balls(ctx),
            Some(SectionsSpec::StridedBalls { stride }) => {
                if *stride == 0 {
                    return Err(schema("stride must be positive"));
                }
                SectionSequence::strided_balls(ctx, *stride)
            }
            Some(SectionsSpec::Explicit { sets }) => SectionSequence::explicit(
                ctx,
                sets.iter()
                    .map(|s| parse_elements(self.group, s).map(FiniteSet::from_vec))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    pub fn window(&self) -> Result<Option<FiniteSet>, DescriptorError> {
        self.window.as_ref().map(|w| parse_elements(self.group, w).map(FiniteSet::from_vec)).transpose()
    }

    pub fn omega(&self) -> Result<Option<Element>, DescriptorError> {
        self.omega.as_ref().map(|v| parse_element(self.group, v)).transpose()
    }

    pub fn sequence(&self, ctx: &GroupContext) -> Result<Option<SequenceSpec>, DescriptorError> {
        let Some(desc) = &self.sequence else { return Ok(None) };
        Ok(Some(match desc {
            SequenceDesc::Ray { direction } => SequenceSpec::Ray(parse_element(self.group, direction)?),
            SequenceDesc::InverseGeodesic { letters } => {
                SequenceSpec::InverseGeodesic(GeodesicPath::new(ctx, parse_elements(self.group, letters)?)?)
            }
            SequenceDesc::Explicit { elements } => SequenceSpec::Explicit(parse_elements(self.group, elements)?),
        }))
    }

    pub fn directions(&self, ctx: &GroupContext) -> Result<Vec<GeodesicPath>, DescriptorError> {
        let Some(list) = &self.directions else { return Ok(Vec::new()) };
        list.iter().map(|letters| Ok(GeodesicPath::new(ctx, parse_elements(self.group, letters)?)?)).collect()
    }

    pub fn thresholds(&self) -> Thresholds {
        let mut th = Thresholds::default();
        if let Some(t) = &self.thresholds {
            th.tau_stab = t.tau_stab.unwrap_or(th.tau_stab);
            th.tau_inv = t.tau_inv.unwrap_or(th.tau_inv);
            th.trend = t.trend.unwrap_or(th.trend);
            th.zero = t.zero.unwrap_or(th.zero);
            th.decay = t.decay.unwrap_or(th.decay);
        }
        th
    }

    pub fn probe_config(&self, ctx: &GroupContext) -> Result<ProbeConfig, DescriptorError> {
        let mut cfg = ProbeConfig { thresholds: self.thresholds(), ..ProbeConfig::default() };
        if let Some(p) = &self.probe {
            cfg.max_radius = p.max_radius.unwrap_or(cfg.max_radius);
            cfg.dim_cap = p.dim_cap.unwrap_or(cfg.dim_cap);
            cfg.default_directions = p.default_directions.unwrap_or(cfg.default_directions);
        }
        if cfg.max_radius == 0 {
            return Err(schema("probe.max_radius must be positive"));
        }
        cfg.shifts = self.shifts.as_ref().map(|s| parse_elements(self.group, s)).transpose()?;
        cfg.w_star = self.w_star.as_ref().map(|s| parse_elements(self.group, s)).transpose()?.unwrap_or_default();
        cfg.directions = self.directions(ctx)?;
        Ok(cfg)
    }
}
