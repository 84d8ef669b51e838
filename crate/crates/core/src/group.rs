//! Concrete finitely generated groups: integer lattices, free groups and the
//! discrete Heisenberg group.
//!
//! Elements are plain values in a canonical form. A [`GroupContext`] pairs a
//! group with a finite generating set Ω (containing the identity) and caches
//! the breadth-first enumeration of the word balls Ω_n.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::GroupError;
use crate::set::FiniteSet;

/// Ball enumeration refuses to grow past this many elements.
pub const MAX_BALL_SIZE: usize = 1_000_000;

/// Maximal rank of a free group; letters are spelled `a..z` / `A..Z`.
pub const MAX_FREE_RANK: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupKind {
    /// ℤ^d.
    IntegerLattice { dim: usize },
    /// Free group on `rank` letters.
    FreeGroup { rank: usize },
    /// Integer Heisenberg group, triples with (x,y,z)(x',y',z') = (x+x', y+y', z+z'+xy').
    Heisenberg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Polynomial,
    Exponential,
}

impl GroupKind {
    pub fn growth_class(self) -> GrowthClass {
        match self {
            GroupKind::FreeGroup { rank } if rank >= 2 => GrowthClass::Exponential,
            _ => GrowthClass::Polynomial,
        }
    }

    /// All three families are torsion free, so every non-identity element is non-cyclic.
    pub fn has_non_cyclic_element(self) -> bool {
        match self {
            GroupKind::IntegerLattice { dim } => dim > 0,
            GroupKind::FreeGroup { rank } => rank > 0,
            GroupKind::Heisenberg => true,
        }
    }

    pub fn is_abelian(self) -> bool {
        match self {
            GroupKind::IntegerLattice { .. } => true,
            GroupKind::FreeGroup { rank } => rank <= 1,
            GroupKind::Heisenberg => false,
        }
    }

    pub fn identity(self) -> Element {
        match self {
            GroupKind::IntegerLattice { dim } => Element::Lattice(vec![0; dim]),
            GroupKind::FreeGroup { .. } => Element::Free(Vec::new()),
            GroupKind::Heisenberg => Element::Heisenberg([0, 0, 0]),
        }
    }

    /// The standard symmetric generators, without the identity.
    pub fn standard_generators(self) -> Vec<Element> {
        match self {
            GroupKind::IntegerLattice { dim } => {
                let mut out = Vec::with_capacity(2 * dim);
                for i in 0..dim {
                    for sign in [1, -1] {
                        let mut v = vec![0; dim];
                        v[i] = sign;
                        out.push(Element::Lattice(v));
                    }
                }
                out
            }
            GroupKind::FreeGroup { rank } => (1..=rank as i8)
                .flat_map(|l| [Element::Free(vec![l]), Element::Free(vec![-l])])
                .collect(),
            GroupKind::Heisenberg => vec![
                Element::Heisenberg([1, 0, 0]),
                Element::Heisenberg([-1, 0, 0]),
                Element::Heisenberg([0, 1, 0]),
                Element::Heisenberg([0, -1, 0]),
            ],
        }
    }

    pub fn contains(self, g: &Element) -> bool {
        match (self, g) {
            (GroupKind::IntegerLattice { dim }, Element::Lattice(v)) => v.len() == dim,
            (GroupKind::FreeGroup { rank }, Element::Free(w)) => w
                .iter()
                .all(|&l| l != 0 && (l.unsigned_abs() as usize) <= rank)
                && w.windows(2).all(|p| p[0] != -p[1]),
            (GroupKind::Heisenberg, Element::Heisenberg(_)) => true,
            _ => false,
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::IntegerLattice { dim: 1 } => write!(f, "Z"),
            GroupKind::IntegerLattice { dim } => write!(f, "Z^{dim}"),
            GroupKind::FreeGroup { rank } => write!(f, "F{rank}"),
            GroupKind::Heisenberg => write!(f, "H3(Z)"),
        }
    }
}

/// A group element in canonical form.
///
/// Free group words are stored reduced, with letter `k` meaning `a_k` and
/// `-k` meaning its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Element {
    Lattice(Vec<i64>),
    Free(Vec<i8>),
    Heisenberg([i64; 3]),
}

impl Element {
    /// Multiplies two elements of the same group.
    ///
    /// Panics when the elements come from different group families; callers
    /// that cannot rule that out go through [`GroupContext::mul`].
    pub fn mul(&self, rhs: &Element) -> Element {
        match (self, rhs) {
            (Element::Lattice(a), Element::Lattice(b)) => {
                assert_eq!(a.len(), b.len(), "lattice dimension mismatch");
                Element::Lattice(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (Element::Free(a), Element::Free(b)) => {
                let mut out = a.clone();
                for &l in b {
                    if out.last() == Some(&-l) {
                        out.pop();
                    } else {
                        out.push(l);
                    }
                }
                Element::Free(out)
            }
            (Element::Heisenberg([x, y, z]), Element::Heisenberg([x2, y2, z2])) => {
                Element::Heisenberg([x + x2, y + y2, z + z2 + x * y2])
            }
            _ => panic!("cannot multiply elements of different groups: {self} * {rhs}"),
        }
    }

    pub fn inv(&self) -> Element {
        match self {
            Element::Lattice(a) => Element::Lattice(a.iter().map(|x| -x).collect()),
            Element::Free(w) => Element::Free(w.iter().rev().map(|l| -l).collect()),
            Element::Heisenberg([x, y, z]) => Element::Heisenberg([-x, -y, -z + x * y]),
        }
    }

    /// `self^k` for any integer k.
    pub fn pow(&self, k: i64) -> Element {
        let base = if k < 0 { self.inv() } else { self.clone() };
        match &base {
            Element::Lattice(a) => Element::Lattice(a.iter().map(|x| x * k.abs()).collect()),
            _ => {
                let mut acc = self.identity_like();
                for _ in 0..k.unsigned_abs() {
                    acc = acc.mul(&base);
                }
                acc
            }
        }
    }

    pub fn identity_like(&self) -> Element {
        match self {
            Element::Lattice(a) => Element::Lattice(vec![0; a.len()]),
            Element::Free(_) => Element::Free(Vec::new()),
            Element::Heisenberg(_) => Element::Heisenberg([0, 0, 0]),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Element::Lattice(a) => a.iter().all(|&x| x == 0),
            Element::Free(w) => w.is_empty(),
            Element::Heisenberg(t) => *t == [0, 0, 0],
        }
    }

    /// Context-free size used as the primary ordering key: ℓ¹ norm on
    /// lattices, reduced length for free words, |x|+|y|+|z| for triples.
    pub fn size_key(&self) -> u64 {
        match self {
            Element::Lattice(a) => a.iter().map(|x| x.unsigned_abs()).sum(),
            Element::Free(w) => w.len() as u64,
            Element::Heisenberg(t) => t.iter().map(|x| x.unsigned_abs()).sum(),
        }
    }

    fn variant_rank(&self) -> u8 {
        match self {
            Element::Lattice(_) => 0,
            Element::Free(_) => 1,
            Element::Heisenberg(_) => 2,
        }
    }

    pub fn as_lattice(&self) -> Option<&[i64]> {
        match self {
            Element::Lattice(a) => Some(a),
            _ => None,
        }
    }
}

/// Letter order a < A < b < B < ...
fn letter_key(l: i8) -> (u8, bool) {
    (l.unsigned_abs(), l < 0)
}

impl Ord for Element {
    fn cmp(&self, other: &Self) -> Ordering {
        self.variant_rank()
            .cmp(&other.variant_rank())
            .then_with(|| self.size_key().cmp(&other.size_key()))
            .then_with(|| match (self, other) {
                (Element::Lattice(a), Element::Lattice(b)) => a.cmp(b),
                (Element::Free(a), Element::Free(b)) => a
                    .len()
                    .cmp(&b.len())
                    .then_with(|| a.iter().map(|&l| letter_key(l)).cmp(b.iter().map(|&l| letter_key(l)))),
                (Element::Heisenberg(a), Element::Heisenberg(b)) => a.cmp(b),
                _ => Ordering::Equal,
            })
    }
}

impl PartialOrd for Element {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Lattice(a) if a.len() == 1 => write!(f, "{}", a[0]),
            Element::Lattice(a) => {
                write!(f, "(")?;
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            Element::Free(w) if w.is_empty() => write!(f, "e"),
            Element::Free(w) => {
                for &l in w {
                    write!(f, "{}", letter_char(l))?;
                }
                Ok(())
            }
            Element::Heisenberg([x, y, z]) => write!(f, "({x},{y},{z})"),
        }
    }
}

pub(crate) fn letter_char(l: i8) -> char {
    let base = if l > 0 { b'a' } else { b'A' };
    (base + l.unsigned_abs() - 1) as char
}

/// Parses a free-group word such as `"abA"`; `""` and `"e"` denote the identity.
/// The result is freely reduced.
pub fn parse_free_word(s: &str) -> Result<Element, GroupError> {
    let s = s.trim();
    if s == "e" {
        return Ok(Element::Free(Vec::new()));
    }
    let mut letters = Vec::with_capacity(s.len());
    for c in s.chars() {
        let l = match c {
            'a'..='z' => (c as u8 - b'a' + 1) as i8,
            'A'..='Z' => -((c as u8 - b'A' + 1) as i8),
            _ => return Err(GroupError::Parse(format!("invalid letter '{c}' in word \"{s}\""))),
        };
        letters.push(l);
    }
    Ok(Element::Free(Vec::new()).mul(&Element::Free(letters)))
}

/// Breadth-first layers of the word metric, extended on demand.
#[derive(Debug)]
struct WordMetric {
    /// `spheres[n]` = Ω_n \ Ω_{n-1}, canonically sorted.
    spheres: Vec<Vec<Element>>,
    dist: HashMap<Element, usize>,
    total: usize,
    limit: usize,
}

impl WordMetric {
    fn new(identity: Element, limit: usize) -> Self {
        let mut dist = HashMap::new();
        dist.insert(identity.clone(), 0);
        WordMetric { spheres: vec![vec![identity]], dist, total: 1, limit }
    }

    fn radius(&self) -> usize {
        self.spheres.len() - 1
    }

    fn extend_to(&mut self, n: usize, omega: &[Element]) -> Result<(), GroupError> {
        while self.radius() < n {
            let last = self.spheres.last().expect("sphere 0 always present");
            if last.is_empty() {
                // finite group reached; nothing more to enumerate
                self.spheres.push(Vec::new());
                continue;
            }
            let prev = if self.spheres.len() >= 2 { self.spheres[self.spheres.len() - 2].len() } else { 1 };
            let projected = self.total + last.len() * last.len() / prev.max(1);
            if projected > self.limit {
                return Err(GroupError::CapacityExceeded { radius: self.radius() + 1, limit: self.limit });
            }
            let level = self.spheres.len();
            let mut fresh = HashSet::new();
            for g in last {
                for w in omega {
                    let h = w.mul(g);
                    if !self.dist.contains_key(&h) {
                        fresh.insert(h);
                    }
                }
            }
            if self.total + fresh.len() > self.limit {
                return Err(GroupError::CapacityExceeded { radius: level, limit: self.limit });
            }
            let mut next: Vec<Element> = fresh.into_iter().collect();
            next.sort();
            for h in &next {
                self.dist.insert(h.clone(), level);
            }
            self.total += next.len();
            self.spheres.push(next);
        }
        Ok(())
    }
}

/// A group together with a finite generating set Ω ∋ e.
#[derive(Debug, Clone)]
pub struct GroupContext {
    kind: GroupKind,
    generators: Vec<Element>,
    metric: Arc<Mutex<WordMetric>>,
}

impl PartialEq for GroupContext {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.generators == other.generators
    }
}

impl GroupContext {
    /// ℤ^d with Ω = {0, ±e_1, …, ±e_d}.
    pub fn integer_lattice(dim: usize) -> Self {
        Self::standard(GroupKind::IntegerLattice { dim })
    }

    /// F_N with Ω = {e, a_1^{±1}, …, a_N^{±1}}.
    pub fn free_group(rank: usize) -> Self {
        assert!(rank <= MAX_FREE_RANK, "free group rank above {MAX_FREE_RANK}");
        Self::standard(GroupKind::FreeGroup { rank })
    }

    /// Heisenberg group with Ω = {e, x^{±1}, y^{±1}}; the centre is reached through commutators.
    pub fn heisenberg() -> Self {
        Self::standard(GroupKind::Heisenberg)
    }

    pub fn standard(kind: GroupKind) -> Self {
        let mut gens = kind.standard_generators();
        gens.push(kind.identity());
        Self::unchecked(kind, gens)
    }

    fn unchecked(kind: GroupKind, mut generators: Vec<Element>) -> Self {
        generators.sort();
        generators.dedup();
        let metric = Arc::new(Mutex::new(WordMetric::new(kind.identity(), MAX_BALL_SIZE)));
        GroupContext { kind, generators, metric }
    }

    /// The same group and generators with a different cap on enumerated
    /// ball sizes (the default is [`MAX_BALL_SIZE`]).
    pub fn with_ball_limit(&self, limit: usize) -> Self {
        let metric = Arc::new(Mutex::new(WordMetric::new(self.kind.identity(), limit)));
        GroupContext { kind: self.kind, generators: self.generators.clone(), metric }
    }

    pub fn ball_limit(&self) -> usize {
        self.metric.lock().unwrap_or_else(|p| p.into_inner()).limit
    }

    /// Uses a custom generating set. Ω must contain the identity and generate
    /// the group as a semigroup; the latter is certified by reaching every
    /// standard generator and its inverse within `search_depth` letters.
    pub fn with_generators(kind: GroupKind, generators: Vec<Element>, search_depth: usize) -> Result<Self, GroupError> {
        if let GroupKind::FreeGroup { rank } = kind {
            if rank > MAX_FREE_RANK {
                return Err(GroupError::InvalidGenerators(format!("free group rank above {MAX_FREE_RANK}")));
            }
        }
        for g in &generators {
            if !kind.contains(g) {
                return Err(GroupError::ContextMismatch(format!("generator {g} is not an element of {kind}")));
            }
        }
        if !generators.iter().any(Element::is_identity) {
            return Err(GroupError::InvalidGenerators("generating set must contain the identity".into()));
        }
        let ctx = Self::unchecked(kind, generators);
        for target in kind.standard_generators() {
            match ctx.word_length_within(&target, search_depth) {
                Ok(_) => {}
                Err(GroupError::DepthExceeded { .. }) | Err(GroupError::CapacityExceeded { .. }) => {
                    return Err(GroupError::InvalidGenerators(format!(
                        "{target} not reached within {search_depth} letters; the set does not generate {kind} as a semigroup"
                    )))
                }
                Err(e) => return Err(e),
            }
        }
        Ok(ctx)
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn generators(&self) -> &[Element] {
        &self.generators
    }

    pub fn growth_class(&self) -> GrowthClass {
        self.kind.growth_class()
    }

    pub fn identity(&self) -> Element {
        self.kind.identity()
    }

    pub fn contains(&self, g: &Element) -> bool {
        self.kind.contains(g)
    }

    pub fn check(&self, g: &Element) -> Result<(), GroupError> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(GroupError::ContextMismatch(format!("{g} is not an element of {}", self.kind)))
        }
    }

    pub fn mul(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        self.check(a)?;
        self.check(b)?;
        Ok(a.mul(b))
    }

    pub fn inv(&self, a: &Element) -> Result<Element, GroupError> {
        self.check(a)?;
        Ok(a.inv())
    }

    fn with_metric<T>(&self, n: usize, f: impl FnOnce(&WordMetric) -> T) -> Result<T, GroupError> {
        let mut metric = self.metric.lock().unwrap_or_else(|p| p.into_inner());
        metric.extend_to(n, &self.generators)?;
        Ok(f(&metric))
    }

    /// Ω_n \ Ω_{n-1} for k = 0..=n.
    pub fn spheres(&self, n: usize) -> Result<Vec<Vec<Element>>, GroupError> {
        self.with_metric(n, |m| m.spheres[..=n].to_vec())
    }

    /// Ω_n \ Ω_{n-1}.
    pub fn sphere(&self, n: usize) -> Result<Vec<Element>, GroupError> {
        self.with_metric(n, |m| m.spheres[n].clone())
    }

    /// The word ball Ω_n.
    pub fn ball(&self, n: usize) -> Result<FiniteSet, GroupError> {
        self.with_metric(n, |m| {
            let elems: Vec<Element> = m.spheres[..=n].iter().flatten().cloned().collect();
            FiniteSet::from_vec(elems)
        })
    }

    /// |Ω_0|, …, |Ω_{n_max}|.
    pub fn growth_profile(&self, n_max: usize) -> Result<Vec<usize>, GroupError> {
        self.with_metric(n_max, |m| {
            m.spheres[..=n_max]
                .iter()
                .scan(0, |acc, s| {
                    *acc += s.len();
                    Some(*acc)
                })
                .collect()
        })
    }

    /// Minimal n with g ∈ Ω_n, searching until the ball size cap.
    pub fn word_length(&self, g: &Element) -> Result<usize, GroupError> {
        self.word_length_within(g, usize::MAX)
    }

    /// Minimal n ≤ `depth` with g ∈ Ω_n.
    pub fn word_length_within(&self, g: &Element, depth: usize) -> Result<usize, GroupError> {
        self.check(g)?;
        let mut metric = self.metric.lock().unwrap_or_else(|p| p.into_inner());
        loop {
            if let Some(&d) = metric.dist.get(g) {
                return Ok(d);
            }
            let r = metric.radius();
            if r >= depth {
                return Err(GroupError::DepthExceeded { element: g.to_string(), depth });
            }
            if metric.spheres.last().is_some_and(Vec::is_empty) {
                return Err(GroupError::DepthExceeded { element: g.to_string(), depth: r });
            }
            metric.extend_to(r + 1, &self.generators)?;
        }
    }

    /// Largest word length of a generator (1 unless Ω = {e}).
    pub fn generator_diameter(&self) -> usize {
        usize::from(self.generators.iter().any(|g| !g.is_identity()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(v: i64) -> Element {
        Element::Lattice(vec![v])
    }

    #[test]
    fn lattice_product() {
        let g = GroupContext::integer_lattice(2);
        let p = g.mul(&Element::Lattice(vec![1, 0]), &Element::Lattice(vec![0, 1])).unwrap();
        assert_eq!(p, Element::Lattice(vec![1, 1]));
        assert_eq!(z(3).inv(), z(-3));
    }

    #[test]
    fn free_reduction() {
        let ab = parse_free_word("ab").unwrap();
        let b_a = parse_free_word("Ba").unwrap();
        assert_eq!(ab.mul(&b_a), parse_free_word("aa").unwrap());
        assert_eq!(parse_free_word("abA").unwrap().inv(), parse_free_word("aBA").unwrap());
        assert_eq!(parse_free_word("aA").unwrap(), Element::Free(vec![]));
    }

    #[test]
    fn heisenberg_product_and_inverse() {
        let x = Element::Heisenberg([1, 0, 0]);
        let y = Element::Heisenberg([0, 1, 0]);
        assert_eq!(x.mul(&y), Element::Heisenberg([1, 1, 1]));
        assert_eq!(Element::Heisenberg([1, 1, 1]).inv(), Element::Heisenberg([-1, -1, 0]));
    }

    #[test]
    fn mismatched_context_is_rejected() {
        let g = GroupContext::free_group(2);
        assert!(matches!(g.mul(&z(1), &z(2)), Err(GroupError::ContextMismatch(_))));
        // letter c does not exist in F2
        assert!(g.mul(&parse_free_word("c").unwrap(), &parse_free_word("a").unwrap()).is_err());
    }

    #[test]
    fn balls_and_growth() {
        let z1 = GroupContext::integer_lattice(1);
        let b3 = z1.ball(3).unwrap();
        assert_eq!(b3.len(), 7);
        assert_eq!(b3.elements().first(), Some(&z(0)));
        assert_eq!(z1.growth_profile(3).unwrap(), vec![1, 3, 5, 7]);
        assert_eq!(GroupContext::integer_lattice(2).growth_profile(3).unwrap(), vec![1, 5, 13, 25]);
        assert_eq!(GroupContext::free_group(2).growth_profile(5).unwrap(), vec![1, 5, 17, 53, 161, 485]);
    }

    #[test]
    fn word_lengths() {
        assert_eq!(GroupContext::integer_lattice(1).word_length(&z(5)).unwrap(), 5);
        assert_eq!(GroupContext::free_group(2).word_length(&parse_free_word("aba").unwrap()).unwrap(), 3);
        assert_eq!(GroupContext::heisenberg().word_length(&Element::Heisenberg([0, 0, 1])).unwrap(), 4);
        let err = GroupContext::integer_lattice(1).word_length_within(&z(10), 4);
        assert!(matches!(err, Err(GroupError::DepthExceeded { .. })));
    }

    #[test]
    fn custom_generators() {
        let kind = GroupKind::IntegerLattice { dim: 1 };
        let ctx = GroupContext::with_generators(kind, vec![z(0), z(2), z(-3)], 8).unwrap();
        assert_eq!(ctx.word_length(&z(1)).unwrap(), 3);
        // positive-only generators never reach -1
        assert!(GroupContext::with_generators(kind, vec![z(0), z(1)], 6).is_err());
        assert!(GroupContext::with_generators(kind, vec![z(1), z(-1)], 6).is_err());
    }

    #[test]
    fn growth_classes() {
        assert_eq!(GroupContext::free_group(2).growth_class(), GrowthClass::Exponential);
        assert_eq!(GroupContext::heisenberg().growth_class(), GrowthClass::Polynomial);
        assert_eq!(GroupContext::integer_lattice(3).growth_class(), GrowthClass::Polynomial);
    }

    #[test]
    fn capacity_bound() {
        let f3 = GroupContext::free_group(3);
        assert!(matches!(f3.ball(20), Err(GroupError::CapacityExceeded { .. })));
    }
}
