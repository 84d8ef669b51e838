//! Seeded random group elements, operators and geodesic paths shared by the
//! integration tests.

#![allow(dead_code)]

use finsec_core::{BandOperator, Diagonal, Element, GeodesicPath, GroupContext, GroupKind, C64};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_element(rng: &mut ChaCha8Rng, ctx: &GroupContext, radius: usize) -> Element {
    ctx.ball(radius).unwrap().elements().choose(rng).unwrap().clone()
}

pub fn random_value(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_diagonal(rng: &mut ChaCha8Rng, ctx: &GroupContext, periodic: bool, exceptions: bool) -> Diagonal {
    let base = if periodic && rng.random_bool(0.5) {
        let GroupKind::IntegerLattice { dim } = ctx.kind() else { unreachable!() };
        let period: Vec<i64> = (0..dim).map(|_| rng.random_range(1..=3)).collect();
        let n = period.iter().product::<i64>() as usize;
        Diagonal::periodic(period, (0..n).map(|_| random_value(rng)).collect()).unwrap()
    } else {
        Diagonal::constant(random_value(rng))
    };
    if exceptions && rng.random_bool(0.5) {
        let ex: Vec<(Element, C64)> = (0..rng.random_range(1..=3)).map(|_| (random_element(rng, ctx, 3), random_value(rng))).collect();
        base.with_exceptions(ex)
    } else {
        base
    }
}

pub fn random_operator(rng: &mut ChaCha8Rng, ctx: &GroupContext, periodic: bool, exceptions: bool) -> BandOperator {
    let terms: Vec<(Element, Diagonal)> = (0..rng.random_range(1..=3))
        .map(|_| (random_element(rng, ctx, 2), random_diagonal(rng, ctx, periodic, exceptions)))
        .collect();
    BandOperator::from_terms(ctx.kind(), terms).unwrap()
}

/// A uniformly random geodesic walk; the Heisenberg group has dead ends, so
/// a walk that cannot be extended starts over.
pub fn random_geodesic(rng: &mut ChaCha8Rng, ctx: &GroupContext, len: usize) -> GeodesicPath {
    'walk: loop {
        let mut path = GeodesicPath::new(ctx, Vec::new()).unwrap();
        while path.len() < len {
            let options = path.extensions(ctx).unwrap();
            let Some(w) = options.choose(rng) else { continue 'walk };
            path.push(ctx, w.clone()).unwrap();
        }
        return path;
    }
}

