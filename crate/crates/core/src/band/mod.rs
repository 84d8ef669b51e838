//! Band operators A = Σ b_i L_{t_i} on ℓ²(Γ).
//!
//! The left shift acts by (L_r u)(t) = u(r⁻¹t), so the kernel of A is
//! k(t, s) = b_i(t) when t s⁻¹ = t_i and zero otherwise. Right shifts
//! (R_r u)(t) = u(t r) conjugate A into R_r⁻¹ A R_r, whose kernel is
//! k(t r⁻¹, s r⁻¹).

mod diagonal;
mod limit;

use std::collections::BTreeMap;

pub use diagonal::{Background, Diagonal, DiagonalRule};
pub(crate) use diagonal::residues;
pub use limit::{limit_operator, ray_limit, SequenceSpec, PROBE_RADIUS};

use crate::error::BandError;
use crate::group::{Element, GroupKind};
use crate::set::FiniteSet;
use crate::C64;

/// A finitely supported vector on a window of the group.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowVector {
    pub window: FiniteSet,
    pub values: Vec<C64>,
}

impl WindowVector {
    pub fn new(window: FiniteSet, values: Vec<C64>) -> Self {
        assert_eq!(window.len(), values.len(), "one value per window element");
        WindowVector { window, values }
    }

    pub fn delta(g: Element) -> Self {
        WindowVector { window: FiniteSet::singleton(g), values: vec![C64::new(1.0, 0.0)] }
    }

    pub fn get(&self, g: &Element) -> C64 {
        self.window.index_of(g).map_or(C64::new(0.0, 0.0), |i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandOperator {
    kind: GroupKind,
    terms: BTreeMap<Element, Diagonal>,
}

impl BandOperator {
    pub fn zero(kind: GroupKind) -> Self {
        BandOperator { kind, terms: BTreeMap::new() }
    }

    pub fn identity(kind: GroupKind) -> Self {
        Self::multiplication(kind, Diagonal::real(1.0)).expect("constant diagonals fit every group")
    }

    /// The left shift L_g.
    pub fn shift(kind: GroupKind, g: Element) -> Result<Self, BandError> {
        Self::from_terms(kind, [(g, Diagonal::real(1.0))])
    }

    /// Multiplication by a diagonal, aI.
    pub fn multiplication(kind: GroupKind, a: Diagonal) -> Result<Self, BandError> {
        Self::from_terms(kind, [(kind.identity(), a)])
    }

    /// Σ b_i L_{t_i}; repeated shifts are summed and zero diagonals dropped.
    pub fn from_terms(kind: GroupKind, terms: impl IntoIterator<Item = (Element, Diagonal)>) -> Result<Self, BandError> {
        let mut op = BandOperator::zero(kind);
        for (t, b) in terms {
            if !kind.contains(&t) {
                return Err(BandError::Group(crate::error::GroupError::ContextMismatch(format!(
                    "shift {t} is not an element of {kind}"
                ))));
            }
            b.check_kind(kind)?;
            op.accumulate(t, b);
        }
        Ok(op)
    }

    fn accumulate(&mut self, t: Element, b: Diagonal) {
        let merged = match self.terms.remove(&t) {
            Some(existing) => existing.add(&b),
            None => b,
        };
        if !merged.is_zero() {
            self.terms.insert(t, merged);
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn terms(&self) -> &BTreeMap<Element, Diagonal> {
        &self.terms
    }

    /// The band width Γ_0.
    pub fn band_width(&self) -> FiniteSet {
        self.terms.keys().cloned().collect()
    }

    pub fn is_constant_coefficient(&self) -> bool {
        self.terms.values().all(Diagonal::is_constant)
    }

    pub fn has_exceptions(&self) -> bool {
        self.terms.values().any(|d| !d.exceptions().is_empty())
    }

    /// Common period of all periodic backgrounds, if any term is periodic.
    pub fn lattice_period(&self) -> Option<Vec<i64>> {
        let mut out: Option<Vec<i64>> = None;
        for d in self.terms.values() {
            if let Some(p) = d.background().period() {
                out = Some(match out {
                    None => p.to_vec(),
                    Some(q) => q.iter().zip(p).map(|(&a, &b)| diagonal::lcm(a, b)).collect(),
                });
            }
        }
        out
    }

    fn same_group(&self, other: &BandOperator) -> Result<(), BandError> {
        if self.kind == other.kind {
            Ok(())
        } else {
            Err(BandError::KindMismatch(self.kind.to_string(), other.kind.to_string()))
        }
    }

    /// k(t, s).
    pub fn kernel(&self, t: &Element, s: &Element) -> C64 {
        let key = t.mul(&s.inv());
        self.terms.get(&key).map_or(C64::new(0.0, 0.0), |b| b.eval(t))
    }

    /// (Au)(t) = Σ_i b_i(t) u(t_i⁻¹ t), returned on the window Γ_0·W.
    pub fn apply(&self, u: &WindowVector) -> WindowVector {
        let out_window = self.band_width().product(&u.window);
        let values = out_window
            .iter()
            .map(|t| {
                self.terms
                    .iter()
                    .map(|(ti, b)| {
                        let s = ti.inv().mul(t);
                        match u.window.index_of(&s) {
                            Some(j) => b.eval(t) * u.values[j],
                            None => C64::new(0.0, 0.0),
                        }
                    })
                    .sum()
            })
            .collect();
        WindowVector { window: out_window, values }
    }

    pub fn add(&self, other: &BandOperator) -> Result<BandOperator, BandError> {
        self.same_group(other)?;
        let mut out = self.clone();
        for (t, b) in &other.terms {
            out.accumulate(t.clone(), b.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> BandOperator {
        let mut out = BandOperator::zero(self.kind);
        for (t, b) in &self.terms {
            out.accumulate(t.clone(), b.scale(c));
        }
        out
    }

    pub fn sub(&self, other: &BandOperator) -> Result<BandOperator, BandError> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// AB, with term t_i t_j carrying t ↦ b_i(t) b'_j(t_i⁻¹ t).
    pub fn compose(&self, other: &BandOperator) -> Result<BandOperator, BandError> {
        self.same_group(other)?;
        let mut out = BandOperator::zero(self.kind);
        for (ti, bi) in &self.terms {
            let ti_inv = ti.inv();
            for (tj, bj) in &other.terms {
                out.accumulate(ti.mul(tj), bi.mul(&bj.left_translate(&ti_inv)));
            }
        }
        Ok(out)
    }

    /// A*, with term t_i⁻¹ carrying t ↦ conj b_i(t_i t).
    pub fn adjoint(&self) -> BandOperator {
        let mut out = BandOperator::zero(self.kind);
        for (ti, bi) in &self.terms {
            out.accumulate(ti.inv(), bi.left_translate(ti).conj());
        }
        out
    }

    /// R_r⁻¹ A R_r: same band elements, diagonals t ↦ b_i(t r⁻¹).
    pub fn conjugate_shift(&self, r: &Element) -> BandOperator {
        let r_inv = r.inv();
        let mut out = BandOperator::zero(self.kind);
        for (ti, bi) in &self.terms {
            out.accumulate(ti.clone(), bi.right_translate(&r_inv));
        }
        out
    }

    /// The operator with every exception removed from every diagonal.
    pub fn background_part(&self) -> BandOperator {
        let mut out = BandOperator::zero(self.kind);
        for (t, b) in &self.terms {
            out.accumulate(t.clone(), b.background_only());
        }
        out
    }

    /// Term-by-term semantic equality within `tol`.
    pub fn approx_eq(&self, other: &BandOperator, tol: f64) -> bool {
        if self.kind != other.kind {
            return false;
        }
        let zero = Diagonal::real(0.0);
        self.terms
            .keys()
            .chain(other.terms.keys())
            .all(|t| self.terms.get(t).unwrap_or(&zero).approx_eq(other.terms.get(t).unwrap_or(&zero), tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{parse_free_word, GroupContext};

    fn z(v: i64) -> Element {
        Element::Lattice(vec![v])
    }

    const Z: GroupKind = GroupKind::IntegerLattice { dim: 1 };

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn shift_kernel_and_action() {
        let l1 = BandOperator::shift(Z, z(1)).unwrap();
        assert_eq!(l1.kernel(&z(3), &z(2)), c(1.0));
        assert_eq!(l1.kernel(&z(2), &z(3)), c(0.0));
        let out = l1.apply(&WindowVector::delta(z(0)));
        assert_eq!(out.get(&z(1)), c(1.0));
        assert_eq!(out.get(&z(0)), c(0.0));
    }

    #[test]
    fn multiplication_kernel() {
        let a = Diagonal::perturbed(c(2.0), [(z(4), c(-1.0))]);
        let op = BandOperator::multiplication(Z, a).unwrap();
        assert_eq!(op.kernel(&z(4), &z(4)), c(-1.0));
        assert_eq!(op.kernel(&z(1), &z(1)), c(2.0));
        assert_eq!(op.kernel(&z(1), &z(2)), c(0.0));
        assert_eq!(op.apply(&WindowVector::delta(z(4))).get(&z(4)), c(-1.0));
    }

    #[test]
    fn algebra_on_shifts() {
        let f2 = GroupKind::FreeGroup { rank: 2 };
        let g = parse_free_word("ab").unwrap();
        let h = parse_free_word("Ba").unwrap();
        let lg = BandOperator::shift(f2, g.clone()).unwrap();
        let lh = BandOperator::shift(f2, h.clone()).unwrap();
        assert_eq!(lg.compose(&lh).unwrap(), BandOperator::shift(f2, g.mul(&h)).unwrap());
        assert_eq!(lg.adjoint(), BandOperator::shift(f2, g.inv()).unwrap());
        let a = BandOperator::multiplication(Z, Diagonal::real(2.0)).unwrap();
        let b = BandOperator::multiplication(Z, Diagonal::real(3.0)).unwrap();
        assert_eq!(a.compose(&b).unwrap(), BandOperator::multiplication(Z, Diagonal::real(6.0)).unwrap());
        let ai = BandOperator::multiplication(Z, Diagonal::constant(C64::new(1.0, 2.0))).unwrap();
        assert_eq!(ai.adjoint(), BandOperator::multiplication(Z, Diagonal::constant(C64::new(1.0, -2.0))).unwrap());
    }

    #[test]
    fn zero_terms_are_pruned() {
        let l1 = BandOperator::shift(Z, z(1)).unwrap();
        assert!(l1.sub(&l1).unwrap().terms().is_empty());
        assert!(l1.add(&BandOperator::shift(GroupKind::Heisenberg, Element::Heisenberg([1, 0, 0])).unwrap()).is_err());
    }

    #[test]
    fn shift_conjugation_moves_exceptions() {
        let a = BandOperator::multiplication(Z, Diagonal::perturbed(c(1.0), [(z(0), c(3.0))])).unwrap();
        let shifted = a.conjugate_shift(&z(5));
        assert_eq!(shifted.kernel(&z(5), &z(5)), c(3.0));
        assert_eq!(shifted.kernel(&z(0), &z(0)), c(1.0));
        assert_eq!(shifted.conjugate_shift(&z(-5)), a);
        let constant = BandOperator::shift(Z, z(2)).unwrap().add(&BandOperator::identity(Z)).unwrap();
        assert_eq!(constant.conjugate_shift(&z(7)), constant);
    }

    #[test]
    fn periodic_off_lattice_is_rejected() {
        let p = Diagonal::periodic(vec![2], vec![c(1.0), c(2.0)]).unwrap();
        assert!(BandOperator::multiplication(GroupKind::Heisenberg, p.clone()).is_err());
        assert!(BandOperator::multiplication(GroupKind::IntegerLattice { dim: 2 }, p).is_err());
    }

    #[test]
    fn apply_matches_kernel_on_free_group() {
        let ctx = GroupContext::free_group(2);
        let a = parse_free_word("a").unwrap();
        let op = BandOperator::from_terms(
            ctx.kind(),
            [
                (a.clone(), Diagonal::perturbed(c(0.5), [(a.clone(), c(2.0))])),
                (ctx.identity(), Diagonal::real(1.0)),
            ],
        )
        .unwrap();
        let w = ctx.ball(2).unwrap();
        for s in &w {
            let col = op.apply(&WindowVector::delta(s.clone()));
            for t in &col.window {
                assert_eq!(col.get(t), op.kernel(t, s));
            }
        }
    }
}
