//! Finite section matrices P_Y A P_Y and the identities built on them:
//! quasicommutators, the boundary generators P_Y L_{ω⁻¹} Q_Y L_ω P_Y, strong
//! limits of section sequences and the block operator
//! Op(A) + P_{Γ'} = Σ R_{v_n} A_n R_{v_n}⁻¹ + P_{Γ'} restricted to a window.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::band::{BandOperator, WindowVector};
use crate::error::SectionError;
use crate::group::{Element, GroupContext};
use crate::set::{FiniteSet, InflatingSequence};
use crate::C64;

pub type CMatrix = DMatrix<C64>;

pub const DEFAULT_MAX_DIM: usize = 2000;

/// Tolerance for deciding that section entries have stopped changing.
pub const STABILIZATION_TOL: f64 = 1e-12;

/// Dense matrix dimension cap, overridable through `FINSEC_MAX_DIM`.
pub fn max_dimension() -> usize {
    std::env::var("FINSEC_MAX_DIM").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_MAX_DIM)
}

pub fn check_dimension(dim: usize) -> Result<(), SectionError> {
    let cap = max_dimension();
    if dim > cap {
        Err(SectionError::DimensionExceeded { dim, cap })
    } else {
        Ok(())
    }
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// A dense matrix indexed by a window Y in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionMatrix {
    pub window: FiniteSet,
    pub matrix: CMatrix,
    pub provenance: String,
}

impl SectionMatrix {
    pub fn new(window: FiniteSet, matrix: CMatrix, provenance: impl Into<String>) -> Result<Self, SectionError> {
        if matrix.nrows() != window.len() || matrix.ncols() != window.len() {
            return Err(SectionError::WindowMismatch(format!(
                "{}x{} matrix on a window of {} elements",
                matrix.nrows(),
                matrix.ncols(),
                window.len()
            )));
        }
        Ok(SectionMatrix { window, matrix, provenance: provenance.into() })
    }

    pub fn identity(window: FiniteSet) -> Self {
        let n = window.len();
        SectionMatrix { window, matrix: CMatrix::identity(n, n), provenance: "identity".into() }
    }

    pub fn dim(&self) -> usize {
        self.window.len()
    }

    /// M[t, s] by group elements; zero outside the window.
    pub fn entry(&self, t: &Element, s: &Element) -> C64 {
        match (self.window.index_of(t), self.window.index_of(s)) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => zero(),
        }
    }

    fn same_window(&self, other: &SectionMatrix) -> Result<(), SectionError> {
        if self.window == other.window {
            Ok(())
        } else {
            Err(SectionError::WindowMismatch("matrices live on different windows".into()))
        }
    }

    pub fn add(&self, other: &SectionMatrix) -> Result<SectionMatrix, SectionError> {
        self.same_window(other)?;
        Ok(SectionMatrix {
            window: self.window.clone(),
            matrix: &self.matrix + &other.matrix,
            provenance: format!("({}) + ({})", self.provenance, other.provenance),
        })
    }

    pub fn sub(&self, other: &SectionMatrix) -> Result<SectionMatrix, SectionError> {
        self.same_window(other)?;
        Ok(SectionMatrix {
            window: self.window.clone(),
            matrix: &self.matrix - &other.matrix,
            provenance: format!("({}) - ({})", self.provenance, other.provenance),
        })
    }

    pub fn mul(&self, other: &SectionMatrix) -> Result<SectionMatrix, SectionError> {
        self.same_window(other)?;
        Ok(SectionMatrix {
            window: self.window.clone(),
            matrix: &self.matrix * &other.matrix,
            provenance: format!("({}) * ({})", self.provenance, other.provenance),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)] == zero()))
    }

    /// Window elements with a non-zero diagonal entry.
    pub fn diagonal_support(&self) -> FiniteSet {
        self.window
            .iter()
            .enumerate()
            .filter(|(i, _)| self.matrix[(*i, *i)] != zero())
            .map(|(_, g)| g.clone())
            .collect()
    }

    /// P_W M P_W as a matrix on W; W must lie inside the window.
    pub fn compress(&self, w: &FiniteSet) -> Result<CMatrix, SectionError> {
        let idx: Vec<usize> = w
            .iter()
            .map(|g| {
                self.window
                    .index_of(g)
                    .ok_or_else(|| SectionError::WindowMismatch(format!("{g} is outside the section window")))
            })
            .collect::<Result<_, _>>()?;
        Ok(CMatrix::from_fn(idx.len(), idx.len(), |i, j| self.matrix[(idx[i], idx[j])]))
    }

    /// Row-major CSV, one matrix row per line, each entry written as `re,im`
    /// with 17 significant digits.
    pub fn to_csv(&self) -> String {
        matrix_csv(&self.matrix)
    }
}

pub fn matrix_csv(m: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let z = m[(i, j)];
            write!(out, "{:.16e},{:.16e}", z.re, z.im).expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

fn split_parts(m: &CMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let re = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect();
    let im = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect();
    (re, im)
}

impl Serialize for SectionMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let (re, im) = split_parts(&self.matrix);
        let mut st = serializer.serialize_struct("SectionMatrix", 4)?;
        st.serialize_field("provenance", &self.provenance)?;
        st.serialize_field("window", &self.window)?;
        st.serialize_field("re", &re)?;
        st.serialize_field("im", &im)?;
        st.end()
    }
}

/// P_Y A P_Y with M[y, y'] = k_A(y, y').
pub fn truncate(a: &BandOperator, y: &FiniteSet) -> Result<SectionMatrix, SectionError> {
    check_dimension(y.len())?;
    let n = y.len();
    let mut m = CMatrix::zeros(n, n);
    let shifts: Vec<(Element, &crate::band::Diagonal)> = a.terms().iter().map(|(t, b)| (t.inv(), b)).collect();
    for (i, t) in y.iter().enumerate() {
        for (ti_inv, b) in &shifts {
            if let Some(j) = y.index_of(&ti_inv.mul(t)) {
                m[(i, j)] += b.eval(t);
            }
        }
    }
    Ok(SectionMatrix { window: y.clone(), matrix: m, provenance: "truncate".into() })
}

/// P_Y A B P_Y − P_Y A P_Y · P_Y B P_Y.
pub fn quasicommutator(a: &BandOperator, b: &BandOperator, y: &FiniteSet) -> Result<SectionMatrix, SectionError> {
    let ab = truncate(&a.compose(b)?, y)?;
    let prod = truncate(a, y)?.mul(&truncate(b, y)?)?;
    let mut out = ab.sub(&prod)?;
    out.provenance = "quasicommutator".into();
    Ok(out)
}

/// P_Y L_{ω⁻¹} Q_Y L_ω P_Y, evaluated by applying the shifts column by column.
pub fn ideal_generator(ctx: &GroupContext, omega: &Element, y: &FiniteSet) -> Result<SectionMatrix, SectionError> {
    ctx.check(omega)?;
    check_dimension(y.len())?;
    let kind = ctx.kind();
    let forward = BandOperator::shift(kind, omega.clone())?;
    let backward = BandOperator::shift(kind, omega.inv())?;
    let n = y.len();
    let mut m = CMatrix::zeros(n, n);
    for (j, s) in y.iter().enumerate() {
        let moved = forward.apply(&WindowVector::delta(s.clone()));
        let kept: Vec<C64> =
            moved.window.iter().zip(&moved.values).map(|(t, &v)| if y.contains(t) { zero() } else { v }).collect();
        let back = backward.apply(&WindowVector::new(moved.window.clone(), kept));
        for (t, &v) in back.window.iter().zip(&back.values) {
            if let Some(i) = y.index_of(t) {
                m[(i, j)] += v;
            }
        }
    }
    Ok(SectionMatrix { window: y.clone(), matrix: m, provenance: format!("ideal_generator({omega})") })
}

/// Diagonal indicator of ∂_Ω Y.
pub fn boundary_projection(ctx: &GroupContext, y: &FiniteSet) -> Result<SectionMatrix, SectionError> {
    check_dimension(y.len())?;
    let boundary = y.boundary(ctx.generators());
    let n = y.len();
    let m = CMatrix::from_fn(n, n, |i, j| if i == j && boundary.contains(&y.elements()[i]) { one() } else { zero() });
    Ok(SectionMatrix { window: y.clone(), matrix: m, provenance: "boundary_projection".into() })
}

/// Elementwise maximum of the (real 0/1) generator matrices over ω ∈ Ω.
pub fn generator_maximum(ctx: &GroupContext, y: &FiniteSet) -> Result<SectionMatrix, SectionError> {
    let n = y.len();
    let mut m = CMatrix::zeros(n, n);
    for omega in ctx.generators() {
        let g = ideal_generator(ctx, omega, y)?;
        m.zip_apply(&g.matrix, |a, b| {
            if b.re > a.re {
                *a = b;
            }
        });
    }
    Ok(SectionMatrix { window: y.clone(), matrix: m, provenance: "max over generators".into() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongLimit {
    pub window: FiniteSet,
    pub limit: CMatrix,
    /// 1-based position in the input sequence from which P_W A_n P_W no longer changes.
    pub stabilized_from: usize,
}

/// Detects the limit of P_W A_n P_W for a sequence of sections.
pub fn strong_limit_w(sections: &[SectionMatrix], w: &FiniteSet) -> Result<StrongLimit, SectionError> {
    let eligible: Vec<(usize, CMatrix)> = sections
        .iter()
        .enumerate()
        .filter(|(_, s)| w.is_subset(&s.window))
        .map(|(i, s)| s.compress(w).map(|m| (i + 1, m)))
        .collect::<Result<_, _>>()?;
    if eligible.len() < 2 {
        return Err(SectionError::InsufficientData(eligible.len()));
    }
    let (_, last) = eligible.last().expect("at least two");
    let gap = |m: &CMatrix| -> (f64, usize, usize) {
        let mut best = (0.0, 0, 0);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let d = (m[(i, j)] - last[(i, j)]).norm();
                if d > best.0 {
                    best = (d, i, j);
                }
            }
        }
        best
    };
    let (d, i, j) = gap(&eligible[eligible.len() - 2].1);
    if d > STABILIZATION_TOL {
        return Err(SectionError::NotConvergent {
            row: w.elements()[i].to_string(),
            col: w.elements()[j].to_string(),
            gap: d,
        });
    }
    let mut from = eligible[eligible.len() - 1].0;
    for (idx, m) in eligible.iter().rev() {
        if gap(m).0 <= STABILIZATION_TOL {
            from = *idx;
        } else {
            break;
        }
    }
    Ok(StrongLimit { window: w.clone(), limit: last.clone(), stabilized_from: from })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BlockInfo {
    /// 1-based block index n.
    pub index: usize,
    pub shift: Element,
    /// Y_n v_n⁻¹.
    pub block: FiniteSet,
    pub included: bool,
}

/// Σ_{n ≤ N} R_{v_n} A_n R_{v_n}⁻¹ + P_{Γ'} restricted to a block-complete window.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledOp {
    pub window: FiniteSet,
    pub matrix: CMatrix,
    pub blocks: Vec<BlockInfo>,
    pub warnings: Vec<String>,
}

impl AssembledOp {
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        (&self.matrix - other).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Block index of each window element (None for points of Γ').
    pub fn block_of(&self, g: &Element) -> Option<usize> {
        self.blocks.iter().find(|b| b.included && b.block.contains(g)).map(|b| b.index)
    }
}

impl Serialize for AssembledOp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let (re, im) = split_parts(&self.matrix);
        let mut st = serializer.serialize_struct("AssembledOp", 5)?;
        st.serialize_field("window", &self.window)?;
        st.serialize_field("blocks", &self.blocks)?;
        st.serialize_field("warnings", &self.warnings)?;
        st.serialize_field("re", &re)?;
        st.serialize_field("im", &im)?;
        st.end()
    }
}

/// Ω_M with M the smallest radius containing every block, or the union of the
/// blocks with Ω_1 when that ball exceeds the dimension cap.
pub fn default_assembly_window(ctx: &GroupContext, infl: &InflatingSequence) -> Result<FiniteSet, SectionError> {
    let blocks = infl.blocks();
    let mut radius = 0;
    for g in blocks.iter().flat_map(|b| b.iter()) {
        radius = radius.max(ctx.word_length(g)?);
    }
    let fallback = || blocks.iter().fold(FiniteSet::empty(), |acc, b| acc.union(b));
    match ctx.growth_profile(radius) {
        Ok(sizes) if sizes[radius] <= max_dimension() => Ok(ctx.ball(radius)?),
        _ => Ok(fallback().union(&ctx.ball(1)?)),
    }
}

/// Assembles the block operator for the sections A_1..A_N on the window `w`
/// (defaulting to [`default_assembly_window`]). Blocks that only partly meet
/// the window are dropped together with their points, never clipped.
pub fn assemble_op(
    ctx: &GroupContext,
    sections: &[SectionMatrix],
    infl: &InflatingSequence,
    w: Option<&FiniteSet>,
) -> Result<AssembledOp, SectionError> {
    if sections.len() > infl.len() {
        return Err(SectionError::WindowMismatch(format!(
            "{} sections but only {} inflating shifts",
            sections.len(),
            infl.len()
        )));
    }
    for (n, (a, y)) in sections.iter().zip(&infl.sections).enumerate() {
        if a.window != *y {
            return Err(SectionError::WindowMismatch(format!("section {} does not live on Y_{}", n + 1, n + 1)));
        }
    }
    if !infl.is_valid() {
        return Err(SectionError::WindowMismatch("inflating shifts produce overlapping blocks".into()));
    }
    let requested = match w {
        Some(w) => w.clone(),
        None => default_assembly_window(ctx, infl)?,
    };
    let mut warnings = Vec::new();
    let mut blocks = Vec::with_capacity(sections.len());
    let mut dropped = FiniteSet::empty();
    for (n, block) in infl.blocks().into_iter().take(sections.len()).enumerate() {
        let included = block.is_subset(&requested);
        if !included && !block.is_disjoint(&requested) {
            warnings.push(format!("block {} only partly inside the window; dropped", n + 1));
            dropped = dropped.union(&block);
        }
        blocks.push(BlockInfo { index: n + 1, shift: infl.shifts[n].clone(), block, included });
    }
    if !blocks.iter().any(|b| b.included) {
        warnings.push("window contains no complete block".into());
    }
    let window = requested.difference(&dropped);
    check_dimension(window.len())?;
    let dim = window.len();
    let mut m = CMatrix::zeros(dim, dim);
    for (i, t) in window.iter().enumerate() {
        match blocks.iter().find(|b| b.included && b.block.contains(t)) {
            Some(info) => {
                let a = &sections[info.index - 1];
                let tv = t.mul(&info.shift);
                for s in info.block.iter() {
                    let j = window.index_of(s).expect("included blocks lie inside the window");
                    m[(i, j)] = a.entry(&tv, &s.mul(&info.shift));
                }
            }
            None => m[(i, i)] = one(),
        }
    }
    Ok(AssembledOp { window, matrix: m, blocks, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::Diagonal;
    use crate::group::GroupKind;
    use crate::set::{build_inflating, CandidatePool, SectionSequence};

    const Z: GroupKind = GroupKind::IntegerLattice { dim: 1 };

    fn z(v: i64) -> Element {
        Element::Lattice(vec![v])
    }

    fn zset(r: std::ops::RangeInclusive<i64>) -> FiniteSet {
        r.map(z).collect()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn shift_section_is_subdiagonal() {
        let y = zset(0..=3);
        let m = truncate(&BandOperator::shift(Z, z(1)).unwrap(), &y).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j + 1 { c(1.0) } else { c(0.0) };
                assert_eq!(m.matrix[(i, j)], expected);
            }
        }
        assert_eq!(truncate(&BandOperator::identity(Z), &y).unwrap().matrix, CMatrix::identity(4, 4));
    }

    #[test]
    fn quasicommutator_of_shifts_is_rank_one() {
        let y = zset(0..=5);
        let q = quasicommutator(&BandOperator::shift(Z, z(1)).unwrap(), &BandOperator::shift(Z, z(-1)).unwrap(), &y)
            .unwrap();
        let mut expected = CMatrix::zeros(6, 6);
        expected[(0, 0)] = c(1.0);
        assert_eq!(q.matrix, expected);
        let a = BandOperator::multiplication(Z, Diagonal::perturbed(c(2.0), [(z(3), c(-1.0))])).unwrap();
        let l = BandOperator::shift(Z, z(1)).unwrap();
        assert_eq!(quasicommutator(&a, &l, &y).unwrap().max_abs(), 0.0);
        assert_eq!(quasicommutator(&l, &a, &y).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn generators_sit_on_the_boundary() {
        let ctx = GroupContext::integer_lattice(1);
        let y = zset(-4..=4);
        assert_eq!(ideal_generator(&ctx, &z(0), &y).unwrap().max_abs(), 0.0);
        let g = ideal_generator(&ctx, &z(1), &y).unwrap();
        assert!(g.is_diagonal());
        assert_eq!(g.diagonal_support(), FiniteSet::singleton(z(4)));
        assert_eq!(generator_maximum(&ctx, &y).unwrap().matrix, boundary_projection(&ctx, &y).unwrap().matrix);
        let sparse = FiniteSet::from_vec(vec![z(0), z(5)]);
        assert_eq!(boundary_projection(&ctx, &sparse).unwrap().matrix, CMatrix::identity(2, 2));
    }

    #[test]
    fn strong_limits() {
        let ctx = GroupContext::integer_lattice(1);
        let a = BandOperator::from_terms(Z, [(z(1), Diagonal::real(0.3)), (z(0), Diagonal::real(1.0))]).unwrap();
        let secs: Vec<_> = (1..=6).map(|n| truncate(&a, &ctx.ball(n).unwrap()).unwrap()).collect();
        let w = ctx.ball(2).unwrap();
        let lim = strong_limit_w(&secs, &w).unwrap();
        assert_eq!(lim.limit, truncate(&a, &w).unwrap().matrix);
        assert_eq!(lim.stabilized_from, 2);

        let alt: Vec<_> = (1..=6)
            .map(|n| {
                let y = ctx.ball(n).unwrap();
                let mut m = SectionMatrix::identity(y);
                if n % 2 == 0 {
                    m.matrix *= c(-1.0);
                }
                m
            })
            .collect();
        assert!(matches!(strong_limit_w(&alt, &w), Err(SectionError::NotConvergent { .. })));
        assert!(matches!(strong_limit_w(&secs[..1], &w), Err(SectionError::InsufficientData(_))));
    }

    #[test]
    fn single_block_assembly() {
        let ctx = GroupContext::integer_lattice(1);
        let seq = SectionSequence::balls(&ctx);
        let infl = build_inflating(&seq, 1, CandidatePool::List(&[z(7)]), false).unwrap();
        let a = BandOperator::from_terms(Z, [(z(1), Diagonal::real(0.5)), (z(0), Diagonal::real(1.0))]).unwrap();
        let sec = truncate(&a, &ctx.ball(1).unwrap()).unwrap();
        let op = assemble_op(&ctx, std::slice::from_ref(&sec), &infl, None).unwrap();
        assert!(op.warnings.is_empty());
        let block = &op.blocks[0].block;
        assert_eq!(*block, zset(-8..=-6));
        for t in block {
            for s in block {
                assert_eq!(op.matrix[(op.window.index_of(t).unwrap(), op.window.index_of(s).unwrap())], sec.entry(&t.mul(&z(7)), &s.mul(&z(7))));
            }
        }
        // a window cutting the block drops it
        let cut = zset(-7..=0);
        let op = assemble_op(&ctx, &[sec], &infl, Some(&cut)).unwrap();
        assert_eq!(op.warnings.len(), 2);
        assert_eq!(op.window, zset(-5..=0));
        assert_eq!(op.matrix, CMatrix::identity(6, 6));
    }

    #[test]
    fn dimension_cap() {
        let ctx = GroupContext::integer_lattice(1);
        let y = ctx.ball(1100).unwrap();
        assert!(matches!(truncate(&BandOperator::identity(Z), &y), Err(SectionError::DimensionExceeded { .. })));
    }
}
