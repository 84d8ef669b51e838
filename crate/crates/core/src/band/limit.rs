//! Exact limit operators of structured band operators.
//!
//! Along a sequence h tending to infinity the shifted operators
//! R_{h(m)}⁻¹ A R_{h(m)} carry diagonals t ↦ b_i(t h(m)⁻¹). Finite exception
//! tables eventually leave every fixed window, and periodic backgrounds only
//! depend on h(m) modulo the period, so every subsequential limit is again a
//! structured operator.

use crate::band::BandOperator;
use crate::error::{BandError, NotConvergent};
use crate::group::{Element, GroupContext};
use crate::set::{FiniteSet, GeodesicPath};

/// Radius of the ball Ω_r on which explicit sequences are probed.
pub const PROBE_RADIUS: usize = 6;

const PROBE_TOL: f64 = 1e-12;

/// A sequence h: ℕ → Γ tending to infinity.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSpec {
    /// h(m) = g^m.
    Ray(Element),
    /// h(n) = η_n = ν_n⁻¹ for a geodesic path ν.
    InverseGeodesic(GeodesicPath),
    /// A finite sample h(1), …, h(M) of the sequence.
    Explicit(Vec<Element>),
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Number of distinct residues of m·g modulo the period.
fn orbit_length(period: &[i64], g: &[i64]) -> i64 {
    period
        .iter()
        .zip(g)
        .map(|(&p, &x)| p / gcd(p, x.rem_euclid(p)))
        .fold(1, |acc, q| acc / gcd(acc, q) * q)
}

fn residue_of(period: &[i64], g: &Element) -> Vec<i64> {
    match g {
        Element::Lattice(x) => x.iter().zip(period).map(|(a, p)| a.rem_euclid(*p)).collect(),
        _ => unreachable!("periodic operators live on lattices"),
    }
}

/// The operator with diagonals t ↦ background_i(t h⁻¹): the limit along any
/// subsequence of h(m) that is eventually congruent to `h` modulo the period.
fn background_limit(a: &BandOperator, h: &Element) -> BandOperator {
    let h_inv = h.inv();
    BandOperator::from_terms(
        a.kind(),
        a.terms().iter().map(|(t, b)| (t.clone(), b.background_only().right_translate(&h_inv))),
    )
    .expect("terms already validated")
}

/// Limit of A along the subsequence m ≡ ρ of the ray h(m) = g^m (on ℤ^d:
/// m·g), taken modulo any multiple of the orbit length.
pub fn ray_limit(a: &BandOperator, g: &Element, rho: i64) -> BandOperator {
    match a.lattice_period() {
        Some(_) => background_limit(a, &g.pow(rho)),
        None => a.background_part(),
    }
}

/// All subsequential limits of A along `h`.
///
/// Rays and inverse geodesic paths return one operator per residue class of
/// h modulo the common period of A (a single operator when A has no periodic
/// diagonal). Explicit samples are probed on Ω_6 over the second half of the
/// sample and yield one limit or a [`NotConvergent`] witness.
pub fn limit_operator(ctx: &GroupContext, a: &BandOperator, h: &SequenceSpec) -> Result<Vec<BandOperator>, BandError> {
    if ctx.kind() != a.kind() {
        return Err(BandError::KindMismatch(ctx.kind().to_string(), a.kind().to_string()));
    }
    match h {
        SequenceSpec::Ray(g) => {
            ctx.check(g)?;
            if g.is_identity() {
                return Err(BandError::NotEscaping("the ray of the identity is constant".into()));
            }
            match (a.lattice_period(), g) {
                (Some(period), Element::Lattice(x)) => {
                    let q = orbit_length(&period, x);
                    Ok((0..q).map(|rho| ray_limit(a, g, rho)).collect())
                }
                _ => Ok(vec![a.background_part()]),
            }
        }
        SequenceSpec::InverseGeodesic(path) => {
            if path.is_empty() {
                return Err(BandError::NotEscaping("empty geodesic path".into()));
            }
            let etas = path.inverse_prefixes();
            match a.lattice_period() {
                None => Ok(vec![a.background_part()]),
                Some(period) => {
                    let tail = &etas[etas.len() / 2..];
                    let mut seen: Vec<Vec<i64>> = Vec::new();
                    let mut out = Vec::new();
                    for eta in tail {
                        let r = residue_of(&period, eta);
                        if !seen.contains(&r) {
                            seen.push(r);
                            out.push(background_limit(a, eta));
                        }
                    }
                    Ok(out)
                }
            }
        }
        SequenceSpec::Explicit(list) => explicit_limit(ctx, a, list).map(|op| vec![op]),
    }
}

fn explicit_limit(ctx: &GroupContext, a: &BandOperator, list: &[Element]) -> Result<BandOperator, BandError> {
    if list.is_empty() {
        return Err(BandError::NotEscaping("empty sequence".into()));
    }
    for g in list {
        ctx.check(g)?;
    }
    let window = ctx.ball(PROBE_RADIUS)?;
    let tail_start = list.len() / 2;
    let tail = &list[tail_start..];
    if let Some(g) = tail.iter().find(|g| window.contains(g)) {
        return Err(BandError::NotEscaping(format!("tail element {g} lies in the probe ball Ω_{PROBE_RADIUS}")));
    }
    let mut probe: Vec<Element> = window.elements().to_vec();
    if let Some(period) = a.lattice_period() {
        let box_points: FiniteSet = crate::band::diagonal::residues(&period).into_iter().map(Element::Lattice).collect();
        probe = window.union(&box_points).into_vec();
    }
    let last = tail.last().expect("tail is non-empty");
    let last_inv = last.inv();
    let mut terms = Vec::with_capacity(a.terms().len());
    for (t, b) in a.terms() {
        let reference: Vec<_> = probe.iter().map(|p| b.eval(&p.mul(&tail[0].inv()))).collect();
        for (k, h) in tail.iter().enumerate().skip(1) {
            let h_inv = h.inv();
            for (p, &r) in probe.iter().zip(&reference) {
                let v = b.eval(&p.mul(&h_inv));
                if (v - r).norm() > PROBE_TOL {
                    return Err(BandError::NotConvergent(NotConvergent {
                        shift: t.to_string(),
                        point: p.to_string(),
                        indices: (tail_start + 1, tail_start + k + 1),
                        values: ((r.re, r.im), (v.re, v.im)),
                    }));
                }
            }
        }
        let background = b.background_only().right_translate(&last_inv);
        let persisting: Vec<_> = probe
            .iter()
            .zip(&reference)
            .filter(|(p, r)| (**r - background.eval(p)).norm() > PROBE_TOL)
            .map(|(p, r)| (p.clone(), *r))
            .collect();
        terms.push((t.clone(), background.with_exceptions(persisting)));
    }
    BandOperator::from_terms(a.kind(), terms)
}
