//! Finite subsets of a group and the Ω-geometry built on them: interiors,
//! boundaries, translations, nested section sequences, inflating sequences,
//! geodesic paths and the limit sets they generate.

use std::collections::HashSet;

use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::GeometryError;
use crate::group::{Element, GroupContext};

/// A finite set of group elements kept in canonical order without duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FiniteSet {
    elements: Vec<Element>,
}

impl FiniteSet {
    pub fn empty() -> Self {
        FiniteSet::default()
    }

    pub fn singleton(g: Element) -> Self {
        FiniteSet { elements: vec![g] }
    }

    pub fn from_vec(mut elements: Vec<Element>) -> Self {
        elements.sort();
        elements.dedup();
        FiniteSet { elements }
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn into_vec(self) -> Vec<Element> {
        self.elements
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Element> {
        self.elements.iter()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, g: &Element) -> bool {
        self.elements.binary_search(g).is_ok()
    }

    /// Position of `g` in canonical order, i.e. its matrix index.
    pub fn index_of(&self, g: &Element) -> Option<usize> {
        self.elements.binary_search(g).ok()
    }

    pub fn union(&self, other: &FiniteSet) -> FiniteSet {
        FiniteSet::from_vec(self.elements.iter().chain(&other.elements).cloned().collect())
    }

    pub fn intersection(&self, other: &FiniteSet) -> FiniteSet {
        FiniteSet { elements: self.elements.iter().filter(|g| other.contains(g)).cloned().collect() }
    }

    pub fn difference(&self, other: &FiniteSet) -> FiniteSet {
        FiniteSet { elements: self.elements.iter().filter(|g| !other.contains(g)).cloned().collect() }
    }

    pub fn is_subset(&self, other: &FiniteSet) -> bool {
        self.elements.iter().all(|g| other.contains(g))
    }

    pub fn is_disjoint(&self, other: &FiniteSet) -> bool {
        let (small, big) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.elements.iter().all(|g| !big.contains(g))
    }

    /// int_Ω A = {a ∈ A : Ωa ⊆ A}.
    pub fn interior(&self, omega: &[Element]) -> FiniteSet {
        FiniteSet {
            elements: self
                .elements
                .iter()
                .filter(|a| omega.iter().all(|w| self.contains(&w.mul(a))))
                .cloned()
                .collect(),
        }
    }

    /// ∂_Ω A = A \ int_Ω A. The boundary is always part of the set.
    pub fn boundary(&self, omega: &[Element]) -> FiniteSet {
        FiniteSet {
            elements: self
                .elements
                .iter()
                .filter(|a| !omega.iter().all(|w| self.contains(&w.mul(a))))
                .cloned()
                .collect(),
        }
    }

    /// As = {as : a ∈ A}.
    pub fn right_translate(&self, s: &Element) -> FiniteSet {
        FiniteSet::from_vec(self.elements.iter().map(|a| a.mul(s)).collect())
    }

    /// sA = {sa : a ∈ A}.
    pub fn left_translate(&self, s: &Element) -> FiniteSet {
        FiniteSet::from_vec(self.elements.iter().map(|a| s.mul(a)).collect())
    }

    /// A⁻¹.
    pub fn inverse(&self) -> FiniteSet {
        FiniteSet::from_vec(self.elements.iter().map(Element::inv).collect())
    }

    /// AB = {ab : a ∈ A, b ∈ B}.
    pub fn product(&self, other: &FiniteSet) -> FiniteSet {
        let mut out = HashSet::with_capacity(self.len() * other.len());
        for a in &self.elements {
            for b in &other.elements {
                out.insert(a.mul(b));
            }
        }
        FiniteSet::from_vec(out.into_iter().collect())
    }
}

impl FromIterator<Element> for FiniteSet {
    fn from_iter<I: IntoIterator<Item = Element>>(iter: I) -> Self {
        FiniteSet::from_vec(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a FiniteSet {
    type Item = &'a Element;
    type IntoIter = std::slice::Iter<'a, Element>;

    fn into_iter(self) -> Self::IntoIter {
        self.elements.iter()
    }
}

impl Serialize for Element {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Element::Lattice(a) if a.len() == 1 => serializer.serialize_i64(a[0]),
            Element::Lattice(a) => a.serialize(serializer),
            Element::Free(_) => serializer.serialize_str(&self.to_string()),
            Element::Heisenberg(t) => t.serialize(serializer),
        }
    }
}

impl Serialize for FiniteSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.len()))?;
        for g in &self.elements {
            seq.serialize_element(g)?;
        }
        seq.end()
    }
}

/// Where the sets Y_n of a section sequence come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SectionSource {
    /// Y_n = Ω_{stride·n}.
    Balls { stride: usize },
    /// Y_n = `sets[n - 1]`.
    Explicit(Vec<FiniteSet>),
}

/// An increasing sequence (Y_n)_{n ≥ 1} of finite windows.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionSequence {
    ctx: GroupContext,
    source: SectionSource,
}

impl SectionSequence {
    pub fn balls(ctx: &GroupContext) -> Self {
        Self::strided_balls(ctx, 1)
    }

    pub fn strided_balls(ctx: &GroupContext, stride: usize) -> Self {
        SectionSequence { ctx: ctx.clone(), source: SectionSource::Balls { stride: stride.max(1) } }
    }

    pub fn explicit(ctx: &GroupContext, sets: Vec<FiniteSet>) -> Self {
        SectionSequence { ctx: ctx.clone(), source: SectionSource::Explicit(sets) }
    }

    pub fn ctx(&self) -> &GroupContext {
        &self.ctx
    }

    pub fn source(&self) -> &SectionSource {
        &self.source
    }

    /// Largest available index, if the sequence is a finite list.
    pub fn available(&self) -> Option<usize> {
        match &self.source {
            SectionSource::Balls { .. } => None,
            SectionSource::Explicit(sets) => Some(sets.len()),
        }
    }

    /// Y_n for n ≥ 1 (n = 0 yields {e} for ball sequences).
    pub fn section(&self, n: usize) -> Result<FiniteSet, GeometryError> {
        match &self.source {
            SectionSource::Balls { stride } => Ok(self.ctx.ball(stride * n)?),
            SectionSource::Explicit(sets) => {
                if n == 0 || n > sets.len() {
                    Err(GeometryError::MissingSection(n))
                } else {
                    Ok(sets[n - 1].clone())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NestingRecord {
    pub n: usize,
    pub size: usize,
    /// Y_{n-1} ⊆ int_Ω Y_n.
    pub previous_in_interior: bool,
    /// Elements of Y_{n-1} outside int_Ω Y_n (at most a handful, for diagnostics).
    pub offending: Vec<Element>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NestingReport {
    pub records: Vec<NestingRecord>,
    pub first_failure: Option<usize>,
    /// Largest r ≤ the checked radius with Ω_r ⊆ Y_{n_max}.
    pub covered_radius: Option<usize>,
}

impl NestingReport {
    pub fn all_pass(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Flags, for n = 2..=n_max, whether Y_{n-1} ⊆ int_Ω Y_n.
pub fn check_nesting(seq: &SectionSequence, n_max: usize) -> Result<NestingReport, GeometryError> {
    if n_max < 2 {
        return Err(GeometryError::InvalidArgument(format!("nesting check needs n_max >= 2, got {n_max}")));
    }
    let omega = seq.ctx().generators();
    let mut records = Vec::with_capacity(n_max - 1);
    let mut prev = seq.section(1)?;
    let mut first_failure = None;
    for n in 2..=n_max {
        let cur = seq.section(n)?;
        let interior = cur.interior(omega);
        let offending: Vec<Element> = prev.iter().filter(|g| !interior.contains(g)).take(8).cloned().collect();
        let ok = offending.is_empty();
        if !ok && first_failure.is_none() {
            first_failure = Some(n);
        }
        records.push(NestingRecord { n, size: cur.len(), previous_in_interior: ok, offending });
        prev = cur;
    }
    let mut covered_radius = None;
    for r in 0..=n_max {
        let ball = seq.ctx().ball(r)?;
        if ball.is_subset(&prev) {
            covered_radius = Some(r);
        } else {
            break;
        }
    }
    Ok(NestingReport { records, first_failure, covered_radius })
}

/// (Y ∪ Ω_n)(Y ∪ Ω_n)⁻¹(Y ∪ Ω_n), the enlarged target used for the block operator.
pub fn strong_target(ctx: &GroupContext, y: &FiniteSet, n: usize) -> Result<FiniteSet, GeometryError> {
    let base = y.union(&ctx.ball(n)?);
    Ok(base.product(&base.inverse()).product(&base))
}

/// Order in which inflating candidates are scanned.
pub enum CandidatePool<'a> {
    /// Canonical ball order over the whole group.
    Ball,
    /// Canonical ball order restricted to a predicate.
    Filtered(&'a dyn Fn(&Element) -> bool),
    /// A user-supplied list, scanned as given.
    List(&'a [Element]),
}

/// Elements v_1..v_N with pairwise disjoint translates Y_n v_n⁻¹.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct InflatingSequence {
    /// The windows Y_n.
    pub sections: Vec<FiniteSet>,
    /// The sets whose translates are kept disjoint: Y_n, or the enlarged targets in strong mode.
    pub targets: Vec<FiniteSet>,
    pub shifts: Vec<Element>,
    pub strong: bool,
}

impl InflatingSequence {
    /// Wraps user-supplied shifts after an exact disjointness check.
    pub fn new(sections: Vec<FiniteSet>, shifts: Vec<Element>) -> Result<Self, GeometryError> {
        if sections.len() != shifts.len() {
            return Err(GeometryError::InvalidArgument(format!(
                "{} sections but {} shifts",
                sections.len(),
                shifts.len()
            )));
        }
        let seq = InflatingSequence { targets: sections.clone(), sections, shifts, strong: false };
        if let Some((m, n)) = seq.first_overlap() {
            return Err(GeometryError::InvalidArgument(format!("blocks {m} and {n} overlap")));
        }
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    /// The blocks Y_n v_n⁻¹ (index 0 holds n = 1).
    pub fn blocks(&self) -> Vec<FiniteSet> {
        self.sections.iter().zip(&self.shifts).map(|(y, v)| y.right_translate(&v.inv())).collect()
    }

    /// First pair (m, n), 1-based, whose translated targets intersect.
    pub fn first_overlap(&self) -> Option<(usize, usize)> {
        let translated: Vec<FiniteSet> =
            self.targets.iter().zip(&self.shifts).map(|(t, v)| t.right_translate(&v.inv())).collect();
        for m in 0..translated.len() {
            for n in (m + 1)..translated.len() {
                if !translated[m].is_disjoint(&translated[n]) {
                    return Some((m + 1, n + 1));
                }
            }
        }
        None
    }

    pub fn is_valid(&self) -> bool {
        self.first_overlap().is_none()
    }
}

/// Greedy construction of an inflating sequence for Y_1..Y_count: each v_n is
/// the first candidate whose translate avoids all previously accepted ones.
pub fn build_inflating(
    seq: &SectionSequence,
    count: usize,
    pool: CandidatePool<'_>,
    strong: bool,
) -> Result<InflatingSequence, GeometryError> {
    let ctx = seq.ctx();
    let mut sections = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    let mut shifts = Vec::with_capacity(count);
    let mut occupied: HashSet<Element> = HashSet::new();
    for n in 1..=count {
        let y = seq.section(n)?;
        let target = if strong { strong_target(ctx, &y, n)? } else { y.clone() };
        let fits = |v: &Element| target.iter().all(|t| !occupied.contains(&t.mul(&v.inv())));
        let mut scanned = 0usize;
        let found = match pool {
            CandidatePool::List(list) => list.iter().find(|v| {
                scanned += 1;
                fits(v)
            }).cloned(),
            CandidatePool::Ball | CandidatePool::Filtered(_) => {
                let mut found = None;
                let mut r = 0;
                'radius: while let Ok(sphere) = ctx.sphere(r) {
                    if sphere.is_empty() {
                        break;
                    }
                    for v in sphere {
                        if let CandidatePool::Filtered(pred) = pool {
                            if !pred(&v) {
                                continue;
                            }
                        }
                        scanned += 1;
                        if fits(&v) {
                            found = Some(v);
                            break 'radius;
                        }
                    }
                    r += 1;
                }
                found
            }
        };
        let v = found.ok_or(GeometryError::SearchExhausted { block: n, scanned })?;
        ctx.check(&v)?;
        let v_inv = v.inv();
        occupied.extend(target.iter().map(|t| t.mul(&v_inv)));
        sections.push(y);
        targets.push(target);
        shifts.push(v);
    }
    Ok(InflatingSequence { sections, targets, shifts, strong })
}

/// Letters w_n ∈ Ω \ {e} whose prefix products ν_n = w_1⋯w_n have word length exactly n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeodesicPath {
    letters: Vec<Element>,
    prefixes: Vec<Element>,
}

impl GeodesicPath {
    pub fn new(ctx: &GroupContext, letters: Vec<Element>) -> Result<Self, GeometryError> {
        let mut prefixes = Vec::with_capacity(letters.len());
        let mut nu = ctx.identity();
        for (i, w) in letters.iter().enumerate() {
            if w.is_identity() || !ctx.generators().contains(w) {
                return Err(GeometryError::NotGeodesic(format!("letter {w} at position {} is not in Ω \\ {{e}}", i + 1)));
            }
            nu = nu.mul(w);
            let n = i + 1;
            let len = ctx.word_length_within(&nu, n)?;
            if len != n {
                return Err(GeometryError::NotGeodesic(format!("prefix {nu} has word length {len}, expected {n}")));
            }
            prefixes.push(nu.clone());
        }
        Ok(GeodesicPath { letters, prefixes })
    }

    /// The constant path w, w, w, … of the given length.
    pub fn ray(ctx: &GroupContext, letter: &Element, len: usize) -> Result<Self, GeometryError> {
        Self::new(ctx, vec![letter.clone(); len])
    }

    pub fn letters(&self) -> &[Element] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// ν_1, …, ν_len.
    pub fn prefixes(&self) -> &[Element] {
        &self.prefixes
    }

    /// η_n = ν_n⁻¹ = w_n⁻¹⋯w_1⁻¹ for n = 1..=len.
    pub fn inverse_prefixes(&self) -> Vec<Element> {
        self.prefixes.iter().map(Element::inv).collect()
    }

    /// Letters that extend the path by one geodesic step.
    pub fn extensions(&self, ctx: &GroupContext) -> Result<Vec<Element>, GeometryError> {
        let nu = self.prefixes.last().cloned().unwrap_or_else(|| ctx.identity());
        let target = self.len() + 1;
        let mut out = Vec::new();
        for w in ctx.generators().iter().filter(|w| !w.is_identity()) {
            let next = nu.mul(w);
            if ctx.word_length_within(&next, target)? == target {
                out.push(w.clone());
            }
        }
        Ok(out)
    }

    pub fn push(&mut self, ctx: &GroupContext, letter: Element) -> Result<(), GeometryError> {
        let mut letters = self.letters.clone();
        letters.push(letter);
        *self = GeodesicPath::new(ctx, letters)?;
        Ok(())
    }

    /// Space-separated letters with runs written as powers, e.g. `a^3 b (-1)^2`.
    pub fn describe(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        let mut i = 0;
        while i < self.letters.len() {
            let run = self.letters[i..].iter().take_while(|w| **w == self.letters[i]).count();
            let name = self.letters[i].to_string();
            parts.push(match run {
                1 => name,
                _ if name.starts_with('(') || name.chars().all(|c| c.is_ascii_alphanumeric()) => format!("{name}^{run}"),
                _ => format!("({name})^{run}"),
            });
            i += run;
        }
        parts.join(" ")
    }
}

/// The sets Ω_n η_n for n = 0..=n_max (η_0 = e).
pub fn limit_set_chain(ctx: &GroupContext, path: &GeodesicPath, n_max: usize) -> Result<Vec<FiniteSet>, GeometryError> {
    if n_max > path.len() {
        return Err(GeometryError::InvalidArgument(format!("path has {} letters, need {n_max}", path.len())));
    }
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(FiniteSet::singleton(ctx.identity()));
    for (n, eta) in path.inverse_prefixes().iter().take(n_max).enumerate() {
        out.push(ctx.ball(n + 1)?.right_translate(eta));
    }
    Ok(out)
}

/// Truncation ∪_{n ≤ n_max} Ω_n η_n of the limit set generated by an inverse geodesic path.
pub fn limit_set(ctx: &GroupContext, path: &GeodesicPath, n_max: usize) -> Result<FiniteSet, GeometryError> {
    let chain = limit_set_chain(ctx, path, n_max)?;
    Ok(chain.into_iter().fold(FiniteSet::empty(), |acc, s| acc.union(&s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_free_word;

    fn z(v: i64) -> Element {
        Element::Lattice(vec![v])
    }

    fn zset(range: std::ops::RangeInclusive<i64>) -> FiniteSet {
        range.map(z).collect()
    }

    #[test]
    fn interior_and_boundary_on_z() {
        let ctx = GroupContext::integer_lattice(1);
        let a = zset(-3..=3);
        assert_eq!(a.interior(ctx.generators()), zset(-2..=2));
        assert_eq!(a.boundary(ctx.generators()), FiniteSet::from_vec(vec![z(-3), z(3)]));
        assert!(FiniteSet::empty().interior(ctx.generators()).is_empty());
        assert!(FiniteSet::empty().boundary(ctx.generators()).is_empty());
        assert_eq!(FiniteSet::singleton(z(4)).boundary(ctx.generators()), FiniteSet::singleton(z(4)));
    }

    #[test]
    fn free_ball_interior_is_previous_ball() {
        let ctx = GroupContext::free_group(2);
        let b2 = ctx.ball(2).unwrap();
        assert_eq!(b2.interior(ctx.generators()), ctx.ball(1).unwrap());
    }

    #[test]
    fn translation() {
        assert_eq!(zset(0..=2).right_translate(&z(5)), zset(5..=7));
        assert_eq!(zset(0..=2).right_translate(&z(0)), zset(0..=2));
    }

    #[test]
    fn nesting_checks() {
        let ctx = GroupContext::integer_lattice(1);
        let report = check_nesting(&SectionSequence::balls(&ctx), 6).unwrap();
        assert!(report.all_pass());
        assert_eq!(report.covered_radius, Some(6));
        assert!(check_nesting(&SectionSequence::strided_balls(&ctx, 2), 5).unwrap().all_pass());
        // Y_2 = Y_3: Y_2 is not inside the interior of Y_3
        let sets = vec![zset(-1..=1), zset(-3..=3), zset(-3..=3), zset(-5..=5)];
        let report = check_nesting(&SectionSequence::explicit(&ctx, sets), 4).unwrap();
        assert_eq!(report.first_failure, Some(3));
        assert!(report.records[0].previous_in_interior);
        assert!(!report.records[1].previous_in_interior);
        assert!(check_nesting(&SectionSequence::balls(&ctx), 1).is_err());
    }

    #[test]
    fn inflating_on_z() {
        let ctx = GroupContext::integer_lattice(1);
        let seq = SectionSequence::balls(&ctx);
        let infl = build_inflating(&seq, 3, CandidatePool::Ball, false).unwrap();
        assert!(infl.is_valid());
        assert_eq!(infl.len(), 3);
        let one = build_inflating(&seq, 1, CandidatePool::Ball, false).unwrap();
        assert_eq!(one.shifts, vec![z(0)]);
        let strong = build_inflating(&seq, 3, CandidatePool::Ball, true).unwrap();
        assert!(strong.is_valid());
        let blocks = strong.blocks();
        assert!(blocks[0].is_disjoint(&blocks[1]) && blocks[1].is_disjoint(&blocks[2]));
    }

    #[test]
    fn inflating_in_positive_a_words() {
        let ctx = GroupContext::free_group(2);
        let seq = SectionSequence::balls(&ctx);
        let pool: Vec<Element> = (1..40).map(|k| parse_free_word("a").unwrap().pow(k)).collect();
        let infl = build_inflating(&seq, 3, CandidatePool::List(&pool), false).unwrap();
        assert!(infl.is_valid());
        assert!(infl.shifts.iter().all(|v| pool.contains(v)));
        let err = build_inflating(&seq, 3, CandidatePool::List(&pool[..2]), false);
        assert!(matches!(err, Err(GeometryError::SearchExhausted { .. })));
    }

    #[test]
    fn user_shifts_are_checked() {
        let sets = vec![zset(-1..=1), zset(-2..=2)];
        assert!(InflatingSequence::new(sets.clone(), vec![z(0), z(3)]).is_err());
        assert!(InflatingSequence::new(sets, vec![z(0), z(10)]).is_ok());
    }

    #[test]
    fn geodesics_and_limit_sets() {
        let ctx = GroupContext::integer_lattice(1);
        let path = GeodesicPath::ray(&ctx, &z(1), 5).unwrap();
        assert_eq!(limit_set(&ctx, &path, 5).unwrap(), zset(-10..=0));
        assert_eq!(limit_set(&ctx, &path, 0).unwrap(), FiniteSet::singleton(z(0)));
        assert!(GeodesicPath::new(&ctx, vec![z(1), z(-1)]).is_err());
        assert!(GeodesicPath::new(&ctx, vec![z(0)]).is_err());
        assert!(limit_set(&ctx, &path, 6).is_err());

        let f2 = GroupContext::free_group(2);
        let a = parse_free_word("a").unwrap();
        let path = GeodesicPath::ray(&f2, &a, 4).unwrap();
        let chain = limit_set_chain(&f2, &path, 4).unwrap();
        for pair in chain.windows(2) {
            assert!(pair[0].is_subset(&pair[1]));
        }
        let ext = path.extensions(&f2).unwrap();
        assert!(ext.contains(&a) && !ext.contains(&a.inv()));
        let b = parse_free_word("b").unwrap();
        let mut mixed = path.clone();
        mixed.push(&f2, b).unwrap();
        assert_eq!(mixed.describe(), "a^4 b");
        assert_eq!(GeodesicPath::ray(&ctx, &z(-1), 3).unwrap().describe(), "(-1)^3");
    }
}
