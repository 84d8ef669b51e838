//! Structured coefficient functions b: Γ → ℂ.
//!
//! A diagonal is a background rule (a constant, or a table periodic with
//! respect to a sublattice of ℤ^d) plus a finite table of exceptional values.
//! The four combinations are closed under pointwise arithmetic and under
//! translation, which keeps products, adjoints and limit operators exact.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::BandError;
use crate::group::{Element, GroupKind};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    Constant(C64),
    /// Values indexed by residues t mod period, row-major with the last axis fastest.
    Periodic { period: Vec<i64>, table: Vec<C64> },
}

/// Which of the four structured rules a diagonal currently is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalRule {
    Constant,
    PerturbedConstant,
    LatticePeriodic,
    PeriodicPerturbed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagonal {
    background: Background,
    exceptions: BTreeMap<Element, C64>,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}

/// Residue box {0..p_1-1} × … × {0..p_d-1} in row-major order.
pub(crate) fn residues(period: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(period.len())];
    for &p in period {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..p).map(move |r| {
                    let mut v = prefix.clone();
                    v.push(r);
                    v
                })
            })
            .collect();
    }
    out
}

fn flat_index(period: &[i64], point: &[i64]) -> usize {
    let mut idx = 0usize;
    for (&p, &x) in period.iter().zip(point) {
        idx = idx * p as usize + x.rem_euclid(p) as usize;
    }
    idx
}

impl Background {
    fn at(&self, t: &Element) -> C64 {
        match self {
            Background::Constant(c) => *c,
            Background::Periodic { period, table } => match t {
                Element::Lattice(x) => table[flat_index(period, x)],
                _ => unreachable!("periodic background evaluated off the lattice"),
            },
        }
    }

    fn at_point(&self, x: &[i64]) -> C64 {
        match self {
            Background::Constant(c) => *c,
            Background::Periodic { period, table } => table[flat_index(period, x)],
        }
    }

    pub fn period(&self) -> Option<&[i64]> {
        match self {
            Background::Constant(_) => None,
            Background::Periodic { period, .. } => Some(period),
        }
    }

    fn map(&self, f: impl Fn(C64) -> C64) -> Background {
        match self {
            Background::Constant(c) => Background::Constant(f(*c)),
            Background::Periodic { period, table } => {
                Background::Periodic { period: period.clone(), table: table.iter().map(|&v| f(v)).collect() }
            }
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Background::Constant(c) => *c == C64::new(0.0, 0.0),
            Background::Periodic { table, .. } => table.iter().all(|v| *v == C64::new(0.0, 0.0)),
        }
    }

    /// new(x) = old(x + shift).
    fn translated(&self, shift: &[i64]) -> Background {
        match self {
            Background::Constant(_) => self.clone(),
            Background::Periodic { period, table } => {
                let table = residues(period)
                    .iter()
                    .map(|r| {
                        let moved: Vec<i64> = r.iter().zip(shift).map(|(a, b)| a + b).collect();
                        table[flat_index(period, &moved)]
                    })
                    .collect();
                Background::Periodic { period: period.clone(), table }
            }
        }
    }

    /// Shrinks each axis to its minimal period; a 1×…×1 table becomes a constant.
    fn normalized(self) -> Background {
        let Background::Periodic { mut period, mut table } = self else {
            return self;
        };
        for axis in 0..period.len() {
            let p = period[axis];
            for q in (1..p).filter(|q| p % q == 0) {
                let invariant = residues(&period).iter().all(|r| {
                    let mut moved = r.clone();
                    moved[axis] += q;
                    table[flat_index(&period, r)] == table[flat_index(&period, &moved)]
                });
                if invariant {
                    let mut reduced = period.clone();
                    reduced[axis] = q;
                    table = residues(&reduced).iter().map(|r| table[flat_index(&period, r)]).collect();
                    period = reduced;
                    break;
                }
            }
        }
        if period.iter().all(|&p| p == 1) {
            Background::Constant(table[0])
        } else {
            Background::Periodic { period, table }
        }
    }
}

fn common_period(a: Option<&[i64]>, b: Option<&[i64]>) -> Option<Vec<i64>> {
    match (a, b) {
        (None, None) => None,
        (Some(p), None) | (None, Some(p)) => Some(p.to_vec()),
        (Some(p), Some(q)) => Some(p.iter().zip(q).map(|(&x, &y)| lcm(x, y)).collect()),
    }
}

impl Diagonal {
    pub fn constant(c: C64) -> Self {
        Diagonal { background: Background::Constant(c), exceptions: BTreeMap::new() }
    }

    pub fn real(c: f64) -> Self {
        Self::constant(C64::new(c, 0.0))
    }

    /// Constant `base` except at finitely many points.
    pub fn perturbed(base: C64, exceptions: impl IntoIterator<Item = (Element, C64)>) -> Self {
        Diagonal { background: Background::Constant(base), exceptions: exceptions.into_iter().collect() }
            .normalized()
    }

    /// A ℤ^d-periodic rule; `table` holds ∏ period entries, row-major.
    pub fn periodic(period: Vec<i64>, table: Vec<C64>) -> Result<Self, BandError> {
        if period.is_empty() || period.iter().any(|&p| p <= 0) {
            return Err(BandError::InvalidDiagonal(format!("period must be a non-empty positive vector, got {period:?}")));
        }
        let expected: i64 = period.iter().product();
        if table.len() as i64 != expected {
            return Err(BandError::InvalidDiagonal(format!(
                "periodic table has {} entries, period {period:?} needs {expected}",
                table.len()
            )));
        }
        Ok(Diagonal { background: Background::Periodic { period, table }, exceptions: BTreeMap::new() }.normalized())
    }

    /// Adds or overrides exceptional values.
    pub fn with_exceptions(mut self, exceptions: impl IntoIterator<Item = (Element, C64)>) -> Self {
        self.exceptions.extend(exceptions);
        self.normalized()
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn exceptions(&self) -> &BTreeMap<Element, C64> {
        &self.exceptions
    }

    pub fn rule(&self) -> DiagonalRule {
        match (&self.background, self.exceptions.is_empty()) {
            (Background::Constant(_), true) => DiagonalRule::Constant,
            (Background::Constant(_), false) => DiagonalRule::PerturbedConstant,
            (Background::Periodic { .. }, true) => DiagonalRule::LatticePeriodic,
            (Background::Periodic { .. }, false) => DiagonalRule::PeriodicPerturbed,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.rule() == DiagonalRule::Constant
    }

    pub fn is_zero(&self) -> bool {
        self.exceptions.is_empty() && self.background.is_zero()
    }

    pub fn eval(&self, t: &Element) -> C64 {
        self.exceptions.get(t).copied().unwrap_or_else(|| self.background.at(t))
    }

    pub fn background_at(&self, t: &Element) -> C64 {
        self.background.at(t)
    }

    /// Checks that the rule makes sense on the given group.
    pub fn check_kind(&self, kind: GroupKind) -> Result<(), BandError> {
        if let Background::Periodic { period, .. } = &self.background {
            match kind {
                GroupKind::IntegerLattice { dim } if dim == period.len() => {}
                _ => return Err(BandError::PeriodicOffLattice(format!("{kind} with period {period:?}"))),
            }
        }
        for k in self.exceptions.keys() {
            if !kind.contains(k) {
                return Err(BandError::InvalidDiagonal(format!("exception point {k} is not in {kind}")));
            }
        }
        Ok(())
    }

    fn normalized(mut self) -> Self {
        self.background = self.background.normalized();
        let bg = &self.background;
        self.exceptions.retain(|k, v| *v != bg.at(k));
        self
    }

    /// The same rule with all exceptions removed.
    pub fn background_only(&self) -> Diagonal {
        Diagonal { background: self.background.clone(), exceptions: BTreeMap::new() }
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Diagonal {
        Diagonal {
            background: self.background.map(&f),
            exceptions: self.exceptions.iter().map(|(k, &v)| (k.clone(), f(v))).collect(),
        }
        .normalized()
    }

    pub fn scale(&self, c: C64) -> Diagonal {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Diagonal {
        self.map(|v| v.conj())
    }

    /// Pointwise combination of two diagonals.
    pub fn zip_with(&self, other: &Diagonal, f: impl Fn(C64, C64) -> C64) -> Diagonal {
        let background = match (&self.background, &other.background) {
            (Background::Constant(a), Background::Constant(b)) => Background::Constant(f(*a, *b)),
            (a, b) => {
                let period = common_period(a.period(), b.period()).expect("at least one side is periodic");
                let table = residues(&period).iter().map(|r| f(a.at_point(r), b.at_point(r))).collect();
                Background::Periodic { period, table }
            }
        };
        let exceptions = self
            .exceptions
            .keys()
            .chain(other.exceptions.keys())
            .map(|k| (k.clone(), f(self.eval(k), other.eval(k))))
            .collect();
        Diagonal { background, exceptions }.normalized()
    }

    pub fn add(&self, other: &Diagonal) -> Diagonal {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &Diagonal) -> Diagonal {
        self.zip_with(other, |a, b| a * b)
    }

    /// t ↦ b(g t).
    pub fn left_translate(&self, g: &Element) -> Diagonal {
        let g_inv = g.inv();
        Diagonal {
            background: self.translated_background(g),
            exceptions: self.exceptions.iter().map(|(k, &v)| (g_inv.mul(k), v)).collect(),
        }
        .normalized()
    }

    /// t ↦ b(t r).
    pub fn right_translate(&self, r: &Element) -> Diagonal {
        let r_inv = r.inv();
        Diagonal {
            background: self.translated_background(r),
            exceptions: self.exceptions.iter().map(|(k, &v)| (k.mul(&r_inv), v)).collect(),
        }
        .normalized()
    }

    fn translated_background(&self, g: &Element) -> Background {
        match (&self.background, g) {
            (Background::Constant(_), _) => self.background.clone(),
            (Background::Periodic { .. }, Element::Lattice(shift)) => self.background.translated(shift),
            _ => unreachable!("periodic background translated by a non-lattice element"),
        }
    }

    /// Semantic equality within `tol`: the backgrounds agree on a full period
    /// box and the values agree at every exceptional point of either side.
    pub fn approx_eq(&self, other: &Diagonal, tol: f64) -> bool {
        let same_bg = match (&self.background, &other.background) {
            (Background::Constant(a), Background::Constant(b)) => (a - b).norm() <= tol,
            (a, b) => {
                let period = common_period(a.period(), b.period()).expect("periodic side present");
                residues(&period).iter().all(|r| (a.at_point(r) - b.at_point(r)).norm() <= tol)
            }
        };
        same_bg
            && self
                .exceptions
                .keys()
                .chain(other.exceptions.keys())
                .all(|k| (self.eval(k) - other.eval(k)).norm() <= tol)
    }
}
