mod common;

use common::{random_element, random_operator};
use finsec_core::band::WindowVector;
use finsec_core::sections::{
    assemble_op, ideal_generator, quasicommutator, strong_limit_w, truncate, CMatrix, SectionMatrix,
};
use finsec_core::set::{build_inflating, CandidatePool};
use finsec_core::stability::{classify_trajectory, sigma_min, sigma_min_matrix, Thresholds};
use finsec_core::{BandOperator, Element, FiniteSet, GroupContext, GroupKind, SectionSequence, Verdict, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lattice(dim: usize) -> impl Strategy<Value = Element> {
    prop::collection::vec(-30i64..30, dim).prop_map(Element::Lattice)
}

fn free_word(rank: i8) -> impl Strategy<Value = Element> {
    let letters: Vec<i8> = (1..=rank).flat_map(|k| [k, -k]).collect();
    prop::collection::vec(prop::sample::select(letters), 0..12)
        .prop_map(|ls| ls.into_iter().fold(Element::Free(Vec::new()), |acc, l| acc.mul(&Element::Free(vec![l]))))
}

fn heisenberg() -> impl Strategy<Value = Element> {
    (-40i64..40, -40i64..40, -200i64..200).prop_map(|(x, y, z)| Element::Heisenberg([x, y, z]))
}

fn axioms(a: &Element, b: &Element, c: &Element) -> Result<(), TestCaseError> {
    let e = a.identity_like();
    prop_assert_eq!(a.mul(b).mul(c), a.mul(&b.mul(c)));
    prop_assert_eq!(a.mul(&e), a.clone());
    prop_assert_eq!(e.mul(a), a.clone());
    prop_assert!(a.mul(&a.inv()).is_identity());
    prop_assert!(a.inv().mul(a).is_identity());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn lattice_axioms(a in lattice(3), b in lattice(3), c in lattice(3)) {
        axioms(&a, &b, &c)?;
    }

    #[test]
    fn free_group_axioms(a in free_word(3), b in free_word(3), c in free_word(3)) {
        axioms(&a, &b, &c)?;
        if let Element::Free(w) = a.mul(&b) {
            prop_assert!(w.windows(2).all(|p| p[0] != -p[1]));
        }
    }

    #[test]
    fn heisenberg_axioms(a in heisenberg(), b in heisenberg(), c in heisenberg()) {
        axioms(&a, &b, &c)?;
    }
}

fn random_subset(rng: &mut ChaCha8Rng, ctx: &GroupContext, radius: usize) -> FiniteSet {
    use rand::Rng;
    ctx.ball(radius).unwrap().iter().filter(|_| rng.random_bool(0.6)).cloned().collect()
}

fn all_contexts() -> Vec<GroupContext> {
    vec![GroupContext::integer_lattice(2), GroupContext::free_group(2), GroupContext::heisenberg()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interior_and_boundary_are_right_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for ctx in all_contexts() {
            let a = random_subset(&mut rng, &ctx, 3);
            let s = random_element(&mut rng, &ctx, 4);
            let omega = ctx.generators();
            prop_assert_eq!(a.interior(omega).right_translate(&s), a.right_translate(&s).interior(omega));
            prop_assert_eq!(a.boundary(omega).right_translate(&s), a.right_translate(&s).boundary(omega));
            prop_assert!(a.boundary(omega).is_subset(&a));
        }
    }

    #[test]
    fn kernels_are_band_limited(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for ctx in all_contexts() {
            let a = random_operator(&mut rng, &ctx, false, true);
            let width = a.band_width();
            for _ in 0..20 {
                let t = random_element(&mut rng, &ctx, 3);
                let s = random_element(&mut rng, &ctx, 3);
                if a.kernel(&t, &s) != C64::new(0.0, 0.0) {
                    prop_assert!(width.contains(&t.mul(&s.inv())));
                }
            }
        }
    }

    #[test]
    fn operator_algebra(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for ctx in [GroupContext::integer_lattice(1), GroupContext::free_group(2), GroupContext::heisenberg()] {
            let periodic = ctx.kind() == (GroupKind::IntegerLattice { dim: 1 });
            let a = random_operator(&mut rng, &ctx, periodic, true);
            let b = random_operator(&mut rng, &ctx, periodic, true);
            let c = random_operator(&mut rng, &ctx, periodic, true);
            prop_assert_eq!(a.adjoint().adjoint(), a.clone());
            let left = a.compose(&b).unwrap().compose(&c).unwrap();
            let right = a.compose(&b.compose(&c).unwrap()).unwrap();
            prop_assert!(left.approx_eq(&right, 1e-12));
            let r = random_element(&mut rng, &ctx, 3);
            prop_assert_eq!(a.conjugate_shift(&r).conjugate_shift(&r.inv()), a.clone());

            // composition is the matrix product away from the window edge
            let y = ctx.ball(3).unwrap();
            let inner = ctx.ball(1).unwrap();
            let ab = truncate(&a.compose(&b).unwrap(), &y).unwrap();
            let prod = truncate(&a, &y).unwrap().mul(&truncate(&b, &y).unwrap()).unwrap();
            for t in &inner {
                for s in &inner {
                    prop_assert!((ab.entry(t, s) - prod.entry(t, s)).norm() < 1e-12);
                }
            }

            // linearity of apply and additivity of truncation
            let u = WindowVector::new(inner.clone(), inner.iter().map(|_| common::random_value(&mut rng)).collect());
            let sum = a.add(&b).unwrap();
            let lhs = sum.apply(&u);
            let (ua, ub) = (a.apply(&u), b.apply(&u));
            for t in lhs.window.iter() {
                prop_assert!((lhs.get(t) - ua.get(t) - ub.get(t)).norm() < 1e-12);
            }
            let ts = truncate(&sum, &y).unwrap();
            let ta = truncate(&a, &y).unwrap().add(&truncate(&b, &y).unwrap()).unwrap();
            prop_assert!((&ts.matrix - &ta.matrix).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn multiplication_operators_commute_with_projections(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for ctx in all_contexts() {
            let a = random_operator(&mut rng, &ctx, false, true);
            let d = common::random_diagonal(&mut rng, &ctx, false, true);
            let m = BandOperator::multiplication(ctx.kind(), d).unwrap();
            let y = random_subset(&mut rng, &ctx, 2);
            if y.is_empty() {
                continue;
            }
            prop_assert_eq!(quasicommutator(&a, &m, &y).unwrap().max_abs(), 0.0);
            prop_assert_eq!(quasicommutator(&m, &a, &y).unwrap().max_abs(), 0.0);
        }
    }
}

#[test]
fn free_ball_sizes_follow_the_formula() {
    for rank in 1..=3usize {
        let sizes = GroupContext::free_group(rank).growth_profile(5).unwrap();
        for (n, &s) in sizes.iter().enumerate() {
            let expected = 1 + (1..=n).map(|k| 2 * rank * (2 * rank - 1).pow(k as u32 - 1)).sum::<usize>();
            assert_eq!(s, expected, "F_{rank}, n = {n}");
        }
    }
}

#[test]
fn balls_nest_and_boundaries_escape() {
    for ctx in [GroupContext::integer_lattice(1), GroupContext::integer_lattice(2), GroupContext::free_group(2), GroupContext::heisenberg()] {
        let sizes = ctx.growth_profile(6).unwrap();
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
        for n in 1..=6 {
            let ball = ctx.ball(n).unwrap();
            let prev = ctx.ball(n - 1).unwrap();
            assert!(prev.is_subset(&ball));
            let boundary = ball.boundary(ctx.generators());
            assert!(boundary.is_subset(&ball.difference(&prev)), "{}: ∂Ω_{n}", ctx.kind());
            let closest = boundary.iter().map(|g| ctx.word_length(g).unwrap()).min().unwrap();
            assert!(closest + ctx.generator_diameter() >= n);
        }
    }
}

#[test]
fn assembled_blocks_keep_singular_values_and_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for ctx in [GroupContext::integer_lattice(1), GroupContext::free_group(2)] {
        let seq = SectionSequence::balls(&ctx);
        let infl = build_inflating(&seq, 3, CandidatePool::Ball, false).unwrap();
        let a = random_operator(&mut rng, &ctx, false, true);
        let sections: Vec<SectionMatrix> = infl.sections.iter().map(|y| truncate(&a, y).unwrap()).collect();
        let op = assemble_op(&ctx, &sections, &infl, None).unwrap();
        let width = a.band_width();
        for (i, t) in op.window.iter().enumerate() {
            for (j, s) in op.window.iter().enumerate() {
                let inside = op.block_of(t).is_some() || op.block_of(s).is_some();
                if inside && op.matrix[(i, j)] != C64::new(0.0, 0.0) {
                    assert!(width.contains(&t.mul(&s.inv())));
                }
                if !inside {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(op.matrix[(i, j)], C64::new(expected, 0.0));
                }
            }
        }
        for info in &op.blocks {
            let idx: Vec<usize> = info.block.iter().map(|g| op.window.index_of(g).unwrap()).collect();
            let block = CMatrix::from_fn(idx.len(), idx.len(), |i, j| op.matrix[(idx[i], idx[j])]);
            let mut sv_block: Vec<f64> = block.singular_values().iter().copied().collect();
            let mut sv_section: Vec<f64> =
                sections[info.index - 1].matrix.clone().singular_values().iter().copied().collect();
            sv_block.sort_by(f64::total_cmp);
            sv_section.sort_by(f64::total_cmp);
            for (x, y) in sv_block.iter().zip(&sv_section) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn ideal_type_sequences_vanish_strongly() {
    let ctx = GroupContext::integer_lattice(2);
    let w = ctx.ball(2).unwrap();
    for omega in ctx.generators() {
        let seq: Vec<SectionMatrix> = (3..=8).map(|n| ideal_generator(&ctx, omega, &ctx.ball(n).unwrap()).unwrap()).collect();
        let lim = strong_limit_w(&seq, &w).unwrap();
        assert!(lim.limit.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }
}

#[test]
fn sigma_min_of_truncations_is_shift_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for ctx in [GroupContext::integer_lattice(2), GroupContext::heisenberg()] {
        for _ in 0..5 {
            let a = random_operator(&mut rng, &ctx, false, true);
            let v = random_element(&mut rng, &ctx, 4);
            for m in 1..=3 {
                let y = ctx.ball(m).unwrap();
                let s = sigma_min(&truncate(&a, &y).unwrap()).unwrap();
                let t = sigma_min(&truncate(&a.conjugate_shift(&v), &y.right_translate(&v)).unwrap()).unwrap();
                assert!((s - t).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn unitary_shifts_have_unit_singular_values() {
    let ctx = GroupContext::free_group(2);
    let y = ctx.ball(3).unwrap();
    let shift = BandOperator::shift(ctx.kind(), random_element(&mut ChaCha8Rng::seed_from_u64(1), &ctx, 2)).unwrap();
    let m = truncate(&shift, &y).unwrap();
    // every column with its image inside Y is a unit vector
    let full: Vec<usize> = (0..y.len()).filter(|&j| m.matrix.column(j).iter().any(|z| z.norm() > 0.0)).collect();
    let cols = CMatrix::from_fn(y.len(), full.len(), |i, j| m.matrix[(i, full[j])]);
    assert_eq!(sigma_min_matrix(&cols).unwrap(), 1.0);
}

#[test]
fn verdicts_are_monotone_in_the_range() {
    let th = Thresholds::default();
    let trajectory: Vec<f64> = (0..40).map(|k| 1.0 - 0.5 * 0.5f64.powi(k)).collect();
    for end in 2..=trajectory.len() {
        assert_eq!(classify_trajectory(&trajectory[..end], &th).0, Verdict::Stable);
    }
}
