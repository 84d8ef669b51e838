//! Stability scans of finite sections and limit-operator based predictions.
//!
//! A scan records σ_min(P_{Y_n} A P_{Y_n}) along a section sequence. A
//! prediction collects candidate operators (the identity, A, shifted copies,
//! limit operators along geodesic directions and compressions of those limit
//! operators to limit sets) and probes each one for invertibility. Both are
//! finite samples of infinite statements and are reported as such.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::band::{limit_operator, residues, BandOperator, SequenceSpec, WindowVector};
use crate::error::{BandError, SectionError};
use crate::group::{Element, GroupContext, GroupKind, GrowthClass};
use crate::sections::{truncate, CMatrix, SectionMatrix};
use crate::set::{limit_set_chain, FiniteSet, GeodesicPath, SectionSequence};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Minimum tail σ_min for a Stable scan.
    pub tau_stab: f64,
    /// Minimum probe value for an invertible candidate.
    pub tau_inv: f64,
    /// Allowed relative drop across the tail of a trajectory.
    pub trend: f64,
    /// Values below this count as numerically zero.
    pub zero: f64,
    /// Monotone decay factor that marks a scan Unstable.
    pub decay: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { tau_stab: 1e-6, tau_inv: 1e-6, trend: 0.1, zero: 1e-10, decay: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

fn has_zero_line(m: &CMatrix) -> bool {
    let zero = C64::new(0.0, 0.0);
    (0..m.nrows()).any(|i| m.row(i).iter().all(|z| *z == zero))
        || (0..m.ncols()).any(|j| m.column(j).iter().all(|z| *z == zero))
}

/// Smallest singular value of the map u ↦ M u, so a matrix with fewer rows
/// than columns gives 0. Structurally singular matrices (a zero row or
/// column in the square case, a zero column otherwise) give exactly 0.
pub fn sigma_min_matrix(m: &CMatrix) -> Result<f64, SectionError> {
    if m.ncols() == 0 {
        return Err(SectionError::Empty);
    }
    if m.nrows() < m.ncols() {
        return Ok(0.0);
    }
    let zero = C64::new(0.0, 0.0);
    let structurally_singular = if m.nrows() == m.ncols() {
        has_zero_line(m)
    } else {
        (0..m.ncols()).any(|j| m.column(j).iter().all(|z| *z == zero))
    };
    if structurally_singular {
        return Ok(0.0);
    }
    let disjoint_columns = (0..m.nrows()).all(|i| m.row(i).iter().filter(|z| **z != zero).count() <= 1);
    if disjoint_columns {
        // orthogonal columns: the singular values are the column norms
        let norms = (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
        return Ok(norms.fold(f64::INFINITY, f64::min));
    }
    let sv = m.clone().singular_values();
    Ok(sv.iter().copied().fold(f64::INFINITY, f64::min).max(0.0))
}

pub fn sigma_min(m: &SectionMatrix) -> Result<f64, SectionError> {
    sigma_min_matrix(&m.matrix)
}

/// σ_max / σ_min, or None for a singular matrix.
pub fn condition_number(m: &CMatrix) -> Option<f64> {
    if m.ncols() == 0 || has_zero_line(m) {
        return None;
    }
    let sv = m.clone().singular_values();
    let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sv.iter().copied().fold(0.0, f64::max);
    (lo > 0.0).then(|| hi / lo)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRecord {
    pub n: usize,
    pub size: usize,
    pub sigma_min: f64,
    pub cond: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub records: Vec<ScanRecord>,
    pub verdict: Verdict,
    pub reason: String,
    pub thresholds: Thresholds,
}

impl StabilityReport {
    /// One `n,size,sigma_min,cond` line per record.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,size,sigma_min,cond\n");
        for r in &self.records {
            let cond = r.cond.map(|c| format!("{c:.16e}")).unwrap_or_default();
            out.push_str(&format!("{},{},{:.16e},{}\n", r.n, r.size, r.sigma_min, cond));
        }
        out
    }
}

fn tail(values: &[f64]) -> &[f64] {
    &values[values.len() / 2..]
}

/// Classifies a σ_min trajectory.
pub fn classify_trajectory(values: &[f64], th: &Thresholds) -> (Verdict, String) {
    let Some(&last) = values.last() else {
        return (Verdict::Inconclusive, "empty trajectory".into());
    };
    let tail = tail(values);
    let tail_min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    if last < th.zero {
        return (Verdict::Unstable, format!("last σ_min = {last:e} is numerically zero"));
    }
    if tail_min < th.zero && last < th.tau_stab {
        return (Verdict::Unstable, format!("tail reaches σ_min = {tail_min:e} without recovering"));
    }
    let monotone = values.windows(2).all(|w| w[1] <= w[0]);
    if values.len() >= 2 && monotone && values[0] >= th.decay * last {
        return (Verdict::Unstable, format!("σ_min decays monotonically by a factor {:.3e}", values[0] / last));
    }
    if tail_min >= th.tau_stab && tail_min >= (1.0 - th.trend) * tail[0] {
        return (Verdict::Stable, format!("tail minimum {tail_min:e} above threshold without decay"));
    }
    (Verdict::Inconclusive, format!("tail minimum {tail_min:e} with first tail value {:e}", tail[0]))
}

/// σ_min of the finite sections P_{Y_n} A P_{Y_n} for n in `ns`.
pub fn stability_scan(
    a: &BandOperator,
    seq: &SectionSequence,
    ns: impl IntoIterator<Item = usize>,
    th: &Thresholds,
) -> Result<StabilityReport, SectionError> {
    let ns: Vec<usize> = ns.into_iter().collect();
    let windows: Vec<FiniteSet> = ns.iter().map(|&n| seq.section(n)).collect::<Result<_, _>>()?;
    let records: Vec<ScanRecord> = ns
        .par_iter()
        .zip(windows.par_iter())
        .map(|(&n, y)| {
            let m = truncate(a, y)?;
            Ok(ScanRecord { n, size: y.len(), sigma_min: sigma_min(&m)?, cond: condition_number(&m.matrix) })
        })
        .collect::<Result<_, SectionError>>()?;
    let values: Vec<f64> = records.iter().map(|r| r.sigma_min).collect();
    let (verdict, reason) = classify_trajectory(&values, th);
    Ok(StabilityReport { records, verdict, reason, thresholds: *th })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateTag {
    Identity,
    OperatorItself,
    Shifted { shift: String },
    LimitOp { direction: String, branch: usize },
    BoundaryCompression { direction: String, w_star: String, branch: usize },
}

impl std::fmt::Display for CandidateTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CandidateTag::Identity => write!(f, "identity"),
            CandidateTag::OperatorItself => write!(f, "operator"),
            CandidateTag::Shifted { shift } => write!(f, "shifted[{shift}]"),
            CandidateTag::LimitOp { direction, branch } => write!(f, "limit[{direction}]#{branch}"),
            CandidateTag::BoundaryCompression { direction, w_star, branch } => {
                write!(f, "compression[{direction}; w*={w_star}]#{branch}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub tag: CandidateTag,
    /// Tags of later candidates that turned out to be the same operator.
    pub aliases: Vec<CandidateTag>,
    pub operator: BandOperator,
    /// For compressions P_R B P_R + (I − P_R): the truncated region R around `center`.
    pub region: Option<FiniteSet>,
    pub center: Element,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub thresholds: Thresholds,
    /// Upper bound on the probe radius M.
    pub max_radius: usize,
    /// Largest ball Ω_{M+b} used by a probe.
    pub dim_cap: usize,
    /// Shift vectors v* for the candidates R_{v*}⁻¹ A R_{v*}; None means the generators.
    pub shifts: Option<Vec<Element>>,
    /// Extra directions besides the default single-letter rays.
    pub directions: Vec<GeodesicPath>,
    pub default_directions: bool,
    /// The w* of the boundary compressions; empty means {e}.
    pub w_star: Vec<Element>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            thresholds: Thresholds::default(),
            max_radius: 24,
            dim_cap: 600,
            shifts: None,
            directions: Vec::new(),
            default_directions: true,
            w_star: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitOperatorInventory {
    pub candidates: Vec<Candidate>,
    pub probe_radius: usize,
    pub path_depth: usize,
    pub directions: Vec<String>,
    pub notes: Vec<String>,
}

impl LimitOperatorInventory {
    pub fn find(&self, tag: &CandidateTag) -> Option<&Candidate> {
        self.candidates.iter().find(|c| &c.tag == tag || c.aliases.contains(tag))
    }
}

fn band_radius(ctx: &GroupContext, a: &BandOperator) -> Result<usize, BandError> {
    let mut b = 0;
    for t in a.terms().keys() {
        b = b.max(ctx.word_length(t)?);
    }
    Ok(b)
}

/// Largest m ≤ max_radius with |Ω_{m+b}| ≤ dim_cap (at least 1).
fn probe_radius(ctx: &GroupContext, b: usize, config: &ProbeConfig) -> Result<usize, BandError> {
    let mut m = 1;
    while m < config.max_radius {
        let sizes = ctx.growth_profile(m + 1 + b)?;
        if sizes[m + 1 + b] > config.dim_cap {
            break;
        }
        m += 1;
    }
    Ok(m)
}

fn push_candidate(list: &mut Vec<Candidate>, cand: Candidate) {
    // without a region the centre only moves the probe windows, and an operator
    // equal to a shifted copy of itself commutes with that shift
    let same = |c: &Candidate| {
        c.region == cand.region
            && (c.region.is_none() || c.center == cand.center)
            && c.operator.approx_eq(&cand.operator, 0.0)
    };
    // later duplicates attach to the first match, preferring A over the identity
    let hit = list.iter().skip(2).position(same).map(|i| i + 2).or_else(|| list.iter().take(2).rposition(same));
    match hit {
        Some(i) => list[i].aliases.push(cand.tag),
        None => list.push(cand),
    }
}

/// Collects the identity, A, its shifted copies, its limit operators along the
/// configured directions and their compressions to the corresponding limit sets.
pub fn enumerate_candidates(
    ctx: &GroupContext,
    a: &BandOperator,
    config: &ProbeConfig,
) -> Result<LimitOperatorInventory, BandError> {
    if ctx.kind() != a.kind() {
        return Err(BandError::KindMismatch(ctx.kind().to_string(), a.kind().to_string()));
    }
    let e = ctx.identity();
    let b = band_radius(ctx, a)?;
    let m = probe_radius(ctx, b, config)?;
    let w_stars = if config.w_star.is_empty() { vec![e.clone()] } else { config.w_star.clone() };
    let mut w_len = 0;
    for w in &w_stars {
        w_len = w_len.max(ctx.word_length(w)?);
    }
    let depth = 2 * (m + b + w_len);
    let mut notes = Vec::new();

    let mut candidates = vec![
        Candidate {
            tag: CandidateTag::Identity,
            aliases: Vec::new(),
            operator: BandOperator::identity(a.kind()),
            region: None,
            center: e.clone(),
        },
        Candidate { tag: CandidateTag::OperatorItself, aliases: Vec::new(), operator: a.clone(), region: None, center: e.clone() },
    ];
    let shifts = match &config.shifts {
        Some(s) => s.clone(),
        None => ctx.generators().iter().filter(|g| !g.is_identity()).cloned().collect(),
    };
    for v in shifts {
        ctx.check(&v)?;
        push_candidate(
            &mut candidates,
            Candidate {
                tag: CandidateTag::Shifted { shift: v.to_string() },
                aliases: Vec::new(),
                operator: a.conjugate_shift(&v),
                region: None,
                center: v.clone(),
            },
        );
    }

    let mut directions = Vec::new();
    if config.default_directions {
        for w in ctx.generators().iter().filter(|g| !g.is_identity()) {
            match GeodesicPath::ray(ctx, w, depth) {
                Ok(p) => directions.push(p),
                Err(err) => notes.push(format!("ray of {w} skipped: {err}")),
            }
        }
    }
    directions.extend(config.directions.iter().cloned());
    let mut names = Vec::new();
    let neighbourhood = ctx.ball(m + b)?;
    for path in &directions {
        let name = path.describe();
        names.push(name.clone());
        let limits = match limit_operator(ctx, a, &SequenceSpec::InverseGeodesic(path.clone())) {
            Ok(l) => l,
            Err(err) => {
                notes.push(format!("direction {name}: {err}"));
                continue;
            }
        };
        let path_depth = depth.min(path.len());
        if path_depth < depth {
            notes.push(format!("direction {name} has {} letters; limit set truncated at depth {path_depth}", path.len()));
        }
        let chain = limit_set_chain(ctx, path, path_depth)?;
        let base: FiniteSet =
            chain.iter().fold(FiniteSet::empty(), |acc, s| acc.union(&s.intersection(&neighbourhood)));
        for (branch, lim) in limits.iter().enumerate() {
            push_candidate(
                &mut candidates,
                Candidate {
                    tag: CandidateTag::LimitOp { direction: name.clone(), branch },
                    aliases: Vec::new(),
                    operator: lim.clone(),
                    region: None,
                    center: e.clone(),
                },
            );
            for w in &w_stars {
                push_candidate(
                    &mut candidates,
                    Candidate {
                        tag: CandidateTag::BoundaryCompression { direction: name.clone(), w_star: w.to_string(), branch },
                        aliases: Vec::new(),
                        operator: lim.conjugate_shift(w),
                        region: Some(base.right_translate(w)),
                        center: w.clone(),
                    },
                );
            }
        }
    }
    Ok(LimitOperatorInventory { candidates, probe_radius: m, path_depth: depth, directions: names, notes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMethod {
    Exact,
    Symbol,
    Restriction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeStatus {
    Pass,
    Fail,
    Unclear,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbePoint {
    pub radius: usize,
    pub dim: usize,
    pub sigma_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub method: ProbeMethod,
    pub curve: Vec<ProbePoint>,
    pub min: f64,
    pub status: ProbeStatus,
}

/// Number of symbol samples per axis of the dual torus.
pub fn symbol_samples(dim: usize) -> usize {
    let per_axis = (2f64.powf(20.0 / dim.max(1) as f64)).floor() as usize;
    per_axis.clamp(1, 1024)
}

fn lattice_dim(kind: GroupKind) -> Option<usize> {
    match kind {
        GroupKind::IntegerLattice { dim } => Some(dim),
        _ => None,
    }
}

/// Floquet matrix of a periodic band operator at quasi-momentum θ: indexed by
/// residues r, with M[r, (r − t) mod p] += b_t(r)·e^{−iθ·t}.
fn floquet(a: &BandOperator, period: &[i64], theta: &[f64]) -> CMatrix {
    let residues = residues(period);
    let index = |x: &[i64]| x.iter().zip(period).fold(0usize, |acc, (v, p)| acc * *p as usize + v.rem_euclid(*p) as usize);
    let n = residues.len();
    let mut m = CMatrix::zeros(n, n);
    for (t, b) in a.terms() {
        let tv = t.as_lattice().expect("lattice operator");
        let phase = -tv.iter().zip(theta).map(|(x, th)| *x as f64 * th).sum::<f64>();
        let factor = C64::new(phase.cos(), phase.sin());
        for (i, r) in residues.iter().enumerate() {
            let col: Vec<i64> = r.iter().zip(tv).map(|(x, y)| x - y).collect();
            m[(i, index(&col))] += b.background_at(&Element::Lattice(r.clone())) * factor;
        }
    }
    m
}

/// Minimum over a grid of quasi-momenta of σ_min of the Floquet symbol: the
/// lower norm of a periodic lattice operator, sampled.
pub fn symbol_probe(a: &BandOperator) -> Option<f64> {
    let d = lattice_dim(a.kind())?;
    if a.has_exceptions() {
        return None;
    }
    let period = a.lattice_period().unwrap_or_else(|| vec![1; d]);
    if let [(_, b)] = a.terms().iter().collect::<Vec<_>>()[..] {
        // a weighted shift b·L_t is bounded below by inf |b|
        let value = residues(&period)
            .into_iter()
            .map(|r| b.background_at(&Element::Lattice(r)).norm())
            .fold(f64::INFINITY, f64::min);
        return Some(value);
    }
    let per_axis = symbol_samples(d);
    let total = per_axis.pow(d as u32);
    let value = (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rest = k;
            let theta: Vec<f64> = period
                .iter()
                .map(|&p| {
                    let j = rest % per_axis;
                    rest /= per_axis;
                    2.0 * PI * j as f64 / (per_axis as f64 * p as f64)
                })
                .collect();
            sigma_min_matrix(&floquet(a, &period, &theta)).expect("non-empty symbol")
        })
        .reduce(|| f64::INFINITY, f64::min);
    Some(value)
}

/// σ_min of u ↦ P_rows B u for u supported in `w`, rows restricted to `region`.
fn restricted_sigma(b: &BandOperator, w: &FiniteSet, region: Option<&FiniteSet>) -> f64 {
    let images: Vec<WindowVector> = w.iter().map(|s| b.apply(&WindowVector::delta(s.clone()))).collect();
    let rows: FiniteSet = images
        .iter()
        .flat_map(|v| v.window.iter().cloned())
        .filter(|t| region.is_none_or(|r| r.contains(t)))
        .collect();
    let mut m = CMatrix::zeros(rows.len(), w.len());
    for (j, v) in images.iter().enumerate() {
        for (t, &x) in v.window.iter().zip(&v.values) {
            if let Some(i) = rows.index_of(t) {
                m[(i, j)] += x;
            }
        }
    }
    sigma_min_matrix(&m).unwrap_or(0.0)
}

fn status_of(curve: &[ProbePoint], th: &Thresholds) -> (f64, ProbeStatus) {
    let values: Vec<f64> = curve.iter().map(|p| p.sigma_min).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < th.tau_inv {
        return (min, ProbeStatus::Fail);
    }
    let t = tail(&values);
    let tail_min = t.iter().copied().fold(f64::INFINITY, f64::min);
    if tail_min >= (1.0 - th.trend) * t[0] {
        (min, ProbeStatus::Pass)
    } else {
        (min, ProbeStatus::Unclear)
    }
}

/// Invertibility probe of one candidate.
///
/// Periodic lattice operators on the whole group use the sampled symbol.
/// Everything else uses windows W_m = Ω_m·center (cut to the region), taking
/// the smaller of the lower norms of B and B* restricted to W_m, for
/// m = 1..=radius. These values can only decrease as the window grows.
pub fn probe_candidate(ctx: &GroupContext, cand: &Candidate, radius: usize, th: &Thresholds) -> Result<ProbeResult, BandError> {
    if cand.tag == CandidateTag::Identity {
        let curve = vec![ProbePoint { radius: 0, dim: 1, sigma_min: 1.0 }];
        let (min, status) = status_of(&curve, th);
        return Ok(ProbeResult { method: ProbeMethod::Exact, curve, min, status });
    }
    if cand.region.is_none() {
        if let Some(v) = symbol_probe(&cand.operator) {
            let dim = cand.operator.lattice_period().map_or(1, |p| p.iter().product::<i64>() as usize);
            let curve = vec![ProbePoint { radius: 0, dim, sigma_min: v }];
            let (min, status) = status_of(&curve, th);
            return Ok(ProbeResult { method: ProbeMethod::Symbol, curve, min, status });
        }
    }
    let adjoint = cand.operator.adjoint();
    let region = cand.region.as_ref();
    let curve: Vec<ProbePoint> = (1..=radius)
        .map(|m| {
            let ball = ctx.ball(m)?.right_translate(&cand.center);
            let w = match region {
                Some(r) => ball.intersection(r),
                None => ball,
            };
            Ok((m, w))
        })
        .collect::<Result<Vec<_>, BandError>>()?
        .into_par_iter()
        .map(|(m, w)| {
            let s = restricted_sigma(&cand.operator, &w, region).min(restricted_sigma(&adjoint, &w, region));
            ProbePoint { radius: m, dim: w.len(), sigma_min: s }
        })
        .collect();
    let (min, status) = status_of(&curve, th);
    Ok(ProbeResult { method: ProbeMethod::Restriction, curve, min, status })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateEvidence {
    pub tag: CandidateTag,
    pub aliases: Vec<CandidateTag>,
    pub band_width: Vec<String>,
    pub region_size: Option<usize>,
    pub probe: ProbeResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub verdict: Verdict,
    pub reason: String,
    pub evidence: Vec<CandidateEvidence>,
    /// max over candidates of 1/σ_min, when sampled.
    pub uniform_bound: Option<f64>,
    pub uniform_bound_skipped: bool,
    pub probe_radius: usize,
    pub path_depth: usize,
    pub directions: Vec<String>,
    pub notes: Vec<String>,
    pub thresholds: Thresholds,
}

/// Probes every candidate of an inventory and combines the results.
pub fn predict_from_inventory(
    ctx: &GroupContext,
    inventory: &LimitOperatorInventory,
    th: &Thresholds,
) -> Result<Prediction, BandError> {
    let probes: Vec<ProbeResult> = inventory
        .candidates
        .par_iter()
        .map(|c| probe_candidate(ctx, c, inventory.probe_radius, th))
        .collect::<Result<_, _>>()?;
    let evidence: Vec<CandidateEvidence> = inventory
        .candidates
        .iter()
        .zip(probes)
        .map(|(c, probe)| CandidateEvidence {
            tag: c.tag.clone(),
            aliases: c.aliases.clone(),
            band_width: c.operator.band_width().iter().map(|g| g.to_string()).collect(),
            region_size: c.region.as_ref().map(FiniteSet::len),
            probe,
        })
        .collect();
    let skipped = ctx.growth_class() == GrowthClass::Polynomial && ctx.kind().has_non_cyclic_element();
    let worst = evidence.iter().map(|e| e.probe.min).fold(f64::INFINITY, f64::min);
    let uniform_bound = (!skipped && worst > 0.0).then(|| 1.0 / worst);
    let failed: Vec<String> =
        evidence.iter().filter(|e| e.probe.status == ProbeStatus::Fail).map(|e| e.tag.to_string()).collect();
    let unclear: Vec<String> =
        evidence.iter().filter(|e| e.probe.status == ProbeStatus::Unclear).map(|e| e.tag.to_string()).collect();
    let (verdict, reason) = if !failed.is_empty() {
        (Verdict::Unstable, format!("not invertible: {}", failed.join(", ")))
    } else if !unclear.is_empty() {
        (Verdict::Inconclusive, format!("probes still decaying: {}", unclear.join(", ")))
    } else if uniform_bound.is_some_and(|u| u > 1.0 / th.tau_inv) {
        (Verdict::Inconclusive, "inverses of the candidates are not uniformly bounded".into())
    } else {
        (Verdict::Stable, format!("all {} candidates pass the invertibility probe", evidence.len()))
    };
    Ok(Prediction {
        verdict,
        reason,
        evidence,
        uniform_bound,
        uniform_bound_skipped: skipped,
        probe_radius: inventory.probe_radius,
        path_depth: inventory.path_depth,
        directions: inventory.directions.clone(),
        notes: inventory.notes.clone(),
        thresholds: *th,
    })
}

pub fn predict_stability(ctx: &GroupContext, a: &BandOperator, config: &ProbeConfig) -> Result<Prediction, BandError> {
    let inventory = enumerate_candidates(ctx, a, config)?;
    predict_from_inventory(ctx, &inventory, &config.thresholds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Agreement {
    Agree,
    Disagree,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub agreement: Agreement,
    pub scan_verdict: Verdict,
    pub predicted_verdict: Verdict,
    pub scan: StabilityReport,
    pub prediction: Prediction,
}

pub fn compare(scan: &StabilityReport, prediction: &Prediction) -> Comparison {
    let agreement = match (scan.verdict, prediction.verdict) {
        (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Agreement::Inconclusive,
        (a, b) if a == b => Agreement::Agree,
        _ => Agreement::Disagree,
    };
    Comparison {
        agreement,
        scan_verdict: scan.verdict,
        predicted_verdict: prediction.verdict,
        scan: scan.clone(),
        prediction: prediction.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::Diagonal;

    const Z: GroupKind = GroupKind::IntegerLattice { dim: 1 };

    fn z(v: i64) -> Element {
        Element::Lattice(vec![v])
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn toeplitz() -> BandOperator {
        BandOperator::from_terms(Z, [(z(0), Diagonal::real(1.0)), (z(1), Diagonal::real(-0.5))]).unwrap()
    }

    #[test]
    fn sigma_min_basics() {
        assert_eq!(sigma_min_matrix(&CMatrix::identity(5, 5)).unwrap(), 1.0);
        let mut j = CMatrix::zeros(5, 5);
        for i in 1..5 {
            j[(i, i - 1)] = c(1.0);
        }
        assert_eq!(sigma_min_matrix(&j).unwrap(), 0.0);
        assert!(matches!(sigma_min_matrix(&CMatrix::zeros(0, 0)), Err(SectionError::Empty)));
        let bidiag = CMatrix::identity(50, 50) - j.resize(50, 50, c(0.0)) * c(0.5);
        let s = sigma_min_matrix(&bidiag).unwrap();
        assert!((0.5..=1.5).contains(&s));
    }

    #[test]
    fn trajectory_rules() {
        let th = Thresholds::default();
        assert_eq!(classify_trajectory(&[1.0, 0.9, 0.8, 0.8], &th).0, Verdict::Stable);
        assert_eq!(classify_trajectory(&[1.0, 0.5, 0.0], &th).0, Verdict::Unstable);
        assert_eq!(classify_trajectory(&[1.0, 0.5, 0.2, 0.05], &th).0, Verdict::Unstable);
        assert_eq!(classify_trajectory(&[1.0, 0.9, 0.7, 0.5, 0.3], &th).0, Verdict::Inconclusive);
    }

    #[test]
    fn scans() {
        let ctx = GroupContext::integer_lattice(1);
        let seq = SectionSequence::balls(&ctx);
        let th = Thresholds::default();
        let r = stability_scan(&toeplitz(), &seq, 1..=20, &th).unwrap();
        assert_eq!(r.verdict, Verdict::Stable);
        assert!(r.records.iter().all(|x| x.sigma_min >= 0.5 - 1e-9));
        let shift = BandOperator::shift(Z, z(1)).unwrap();
        let r = stability_scan(&shift, &seq, 1..=20, &th).unwrap();
        assert_eq!(r.verdict, Verdict::Unstable);
        assert!(r.records.iter().all(|x| x.sigma_min == 0.0 && x.cond.is_none()));
        assert!(r.to_csv().starts_with("n,size,sigma_min,cond\n1,3,0.0000000000000000e0,\n"));
    }

    #[test]
    fn symbols() {
        assert!((symbol_probe(&toeplitz()).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(symbol_probe(&BandOperator::shift(Z, z(1)).unwrap()).unwrap(), 1.0);
        let p = Diagonal::periodic(vec![2], vec![c(2.0), c(0.5)]).unwrap();
        let a = BandOperator::from_terms(Z, [(z(0), p), (z(1), Diagonal::real(0.1))]).unwrap();
        let s = symbol_probe(&a).unwrap();
        assert!((0.4 - 1e-12..=0.5).contains(&s));
        assert_eq!(symbol_samples(1), 1024);
        assert_eq!(symbol_samples(3), 101);
    }

    #[test]
    fn shift_compressions_are_singular() {
        let ctx = GroupContext::integer_lattice(1);
        let shift = BandOperator::shift(Z, z(1)).unwrap();
        let p = predict_stability(&ctx, &shift, &ProbeConfig::default()).unwrap();
        assert_eq!(p.verdict, Verdict::Unstable);
        let own = p.evidence.iter().find(|e| e.tag == CandidateTag::OperatorItself).unwrap();
        assert_eq!(own.probe.min, 1.0);
        let compressions: Vec<_> =
            p.evidence.iter().filter(|e| matches!(e.tag, CandidateTag::BoundaryCompression { .. })).collect();
        assert_eq!(compressions.len(), 2);
        for e in compressions {
            assert!(e.probe.curve.iter().all(|q| q.sigma_min == 0.0));
        }
    }

    #[test]
    fn constant_coefficients_collapse() {
        let ctx = GroupContext::integer_lattice(1);
        let inv = enumerate_candidates(&ctx, &toeplitz(), &ProbeConfig::default()).unwrap();
        let kinds: Vec<_> = inv.candidates.iter().map(|c| &c.tag).collect();
        assert!(matches!(kinds[0], CandidateTag::Identity));
        assert!(matches!(kinds[1], CandidateTag::OperatorItself));
        assert!(kinds[2..].iter().all(|t| matches!(t, CandidateTag::BoundaryCompression { .. })));
        assert_eq!(inv.candidates[1].aliases.len(), 4);
        let p = predict_from_inventory(&ctx, &inv, &Thresholds::default()).unwrap();
        assert_eq!(p.verdict, Verdict::Stable);
        assert!(p.uniform_bound_skipped);
    }

    #[test]
    fn shifted_windows_share_sigma() {
        let ctx = GroupContext::free_group(2);
        let a_letter = crate::group::parse_free_word("a").unwrap();
        let d = Diagonal::perturbed(c(1.0), [(ctx.identity(), c(0.25))]);
        let a = BandOperator::from_terms(ctx.kind(), [(ctx.identity(), d), (a_letter.clone(), Diagonal::real(0.3))])
            .unwrap();
        let v = crate::group::parse_free_word("bA").unwrap();
        let y = ctx.ball(2).unwrap();
        let s1 = sigma_min(&truncate(&a, &y).unwrap()).unwrap();
        let s2 = sigma_min(&truncate(&a.conjugate_shift(&v), &y.right_translate(&v)).unwrap()).unwrap();
        assert!((s1 - s2).abs() < 1e-10);
        assert!(!a.is_constant_coefficient());

        let config = ProbeConfig { shifts: Some(vec![v.clone()]), default_directions: false, ..ProbeConfig::default() };
        let inv = enumerate_candidates(&ctx, &a, &config).unwrap();
        let th = Thresholds::default();
        let own = probe_candidate(&ctx, &inv.candidates[1], 3, &th).unwrap();
        let shifted = inv.find(&CandidateTag::Shifted { shift: v.to_string() }).unwrap();
        let copy = probe_candidate(&ctx, shifted, 3, &th).unwrap();
        for (p, q) in own.curve.iter().zip(&copy.curve) {
            assert_eq!(p.dim, q.dim);
            assert!((p.sigma_min - q.sigma_min).abs() < 1e-10);
        }
    }
}
