use acforms::calculus::DegreeMask;
use acforms::cli::RunConfig;
use acforms::exterior::{FormField, PointForm, ValueKind};
use acforms::fixtures;
use acforms::geometry::{make_alpha, make_flat_torus, make_warped_torus, AlphaSpec};
use acforms::integration::l2_inner;
use acforms::oracle::{random_form, random_vectors};
use acforms::variational::{
    functional_value, pointwise_adjoint, Family, Functional, FunctionalVariant, GradedField,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(n) }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn tangent(r: &mut ChaCha8Rng, n: usize, k: usize) -> PointForm {
    random_form(r, n, k, ValueKind::Tangent).unwrap()
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn anticommutation_sign_law(seed in any::<u64>(), n in 2usize..=4, i in 0usize..=3, k in 0usize..=3) {
        let mut r = rng(seed);
        let (g, t) = (tangent(&mut r, n, i), tangent(&mut r, n, k));
        let sign = if (i * k + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let defect = g.wedge_poly(&t).unwrap().sub(&t.wedge_poly(&g).unwrap().scale(sign)).unwrap().max_abs();
        prop_assert!(defect <= 1e-14, "{}", defect);
    }

    #[test]
    fn even_degree_square_vanishes(seed in any::<u64>(), n in 2usize..=6, half in 0usize..=1) {
        let g = tangent(&mut rng(seed), n, 2 * half);
        prop_assert!(g.wedge_poly(&g).unwrap().max_abs() <= 1e-14);
    }

    #[test]
    fn products_are_bilinear(seed in any::<u64>(), n in 1usize..=4, k in 0usize..=2, l in 0usize..=2, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut r = rng(seed);
        let lin = |x: &PointForm, y: &PointForm| x.scale(a).add(&y.scale(b)).unwrap();
        let check = |f: &dyn Fn(&PointForm, &PointForm) -> PointForm, x: &PointForm, y: &PointForm, z: &PointForm| {
            let lhs = f(&lin(x, y), z);
            let rhs = lin(&f(x, z), &f(y, z));
            lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * (1.0 + lhs.max_abs())
        };
        let s = |r: &mut ChaCha8Rng| random_form(r, n, k, ValueKind::Scalar).unwrap();
        let (x, y, z) = (s(&mut r), s(&mut r), tangent(&mut r, n, l));
        prop_assert!(check(&|p, q| p.wedge_scalar(q).unwrap(), &x, &y, &z));
        let e = |r: &mut ChaCha8Rng, d| random_form(r, n, d, ValueKind::Endomorphism).unwrap();
        let (x, y, z) = (e(&mut r, k), e(&mut r, k), tangent(&mut r, n, l));
        prop_assert!(check(&|p, q| p.act_end(q).unwrap(), &x, &y, &z));
        let w = e(&mut r, l);
        prop_assert!(check(&|p, q| p.wedge_end(q).unwrap(), &x, &y, &w));
        if n >= 2 {
            let (x, y, z) = (tangent(&mut r, n, k), tangent(&mut r, n, k), tangent(&mut r, n, l));
            prop_assert!(check(&|p, q| p.wedge_poly(q).unwrap(), &x, &y, &z));
            prop_assert!(check(&|p, q| p.act_poly(q).unwrap(), &tangent(&mut r, n, k + 1), &tangent(&mut r, n, k + 1), &z));
        }
    }

    #[test]
    fn evaluation_is_alternating(seed in any::<u64>(), n in 2usize..=5, k in 2usize..=4, i in 0usize..4, j in 0usize..4) {
        prop_assume!(k <= n && i < k && j < k && i != j);
        let mut r = rng(seed);
        let f = tangent(&mut r, n, k);
        let vs = random_vectors(&mut r, n, k);
        let mut swapped = vs.clone();
        swapped.swap(i, j);
        let (a, b) = (f.evaluate(&vs).unwrap(), f.evaluate(&swapped).unwrap());
        prop_assert!(a.iter().zip(&b).all(|(x, y)| (x + y).abs() <= 1e-12));
    }
}

proptest! {
    #![proptest_config(cases(8))]

    /// `⟨⟨T x, η⟩⟩ = ⟨⟨x, T* η⟩⟩` for the wedge with a fixed scalar form.
    #[test]
    fn pointwise_adjoints_satisfy_the_quadrature_identity(seed in 0u64..1000, k in 0usize..=3, l in 0usize..=1) {
        let g = make_warped_torus(4, 4, 0.25).unwrap();
        let beta = fixtures::smooth_field(&g, l, ValueKind::Scalar, seed).unwrap();
        let x = fixtures::smooth_field(&g, k, ValueKind::Tangent, seed + 1).unwrap();
        prop_assume!(k + l <= 4);
        let eta = fixtures::smooth_field(&g, k + l, ValueKind::Tangent, seed + 2).unwrap();
        let back = pointwise_adjoint(&eta, k, |p, v| beta.point(p).wedge_scalar(v)).unwrap();
        let lhs = l2_inner(&beta.wedge_scalar(&x).unwrap(), &eta).unwrap();
        let rhs = l2_inner(&x, &back).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0), "{} {}", lhs, rhs);
    }

    /// The `[5]` mask only changes the derivative on degree-4 inputs, so with
    /// no degree-4 component both functionals agree exactly.
    #[test]
    fn masked_variant_agrees_without_degree_four(seed in 0u64..1000, n in prop::sample::select(vec![4usize, 6])) {
        let g = make_flat_torus(n, 4).unwrap();
        let alpha = make_alpha(&g, &AlphaSpec::Axis(1)).unwrap();
        let parts: Vec<FormField> = (0..=n)
            .filter(|&k| k != 4)
            .map(|k| fixtures::smooth_field(&g, k, ValueKind::Tangent, seed + k as u64).unwrap().scale(0.5))
            .collect();
        let gamma = GradedField::from_components(&g, parts).unwrap();
        for family in [Family::QuasiAlpha, Family::Alpha] {
            let plain = Functional::new(FunctionalVariant::new(family, DegreeMask::none()).unwrap(), Some(&alpha)).unwrap();
            let masked = Functional::new(FunctionalVariant::new(family, DegreeMask::masked(&[5]).unwrap()).unwrap(), Some(&alpha)).unwrap();
            let (a, b) = (functional_value(&gamma, &plain).unwrap(), functional_value(&gamma, &masked).unwrap());
            prop_assert_eq!(a, b);
        }
    }
}

proptest! {
    #![proptest_config(cases(32))]

    #[test]
    fn config_echo_is_a_fixed_point(
        res in 4usize..12,
        eps in 0.0f64..1.0,
        seed in any::<u32>(),
        family in prop::sample::select(vec!["plain", "alpha", "quasi_alpha"]),
        ts in prop::collection::btree_set(0u32..100, 2..6),
    ) {
        let ts: Vec<String> = ts.iter().map(|t| (*t as f64 / 10.0).to_string()).collect();
        let text = format!(
            "manifold.kind = warped_torus\nmanifold.n = 4\nmanifold.res = {res}\nstructure.kind = perturbed\n\
             structure.epsilon = {eps}\nstructure.seed = {seed}\nalpha.kind = axis\nalpha.axis = 2\n\
             variant.family = {family}\nprobe.t = [{}]\n",
            ts.join(", ")
        );
        let c = RunConfig::parse(&text).unwrap();
        let echo = c.canonical();
        let again = RunConfig::parse(&echo).unwrap();
        prop_assert_eq!(&again, &c);
        prop_assert_eq!(again.canonical(), echo);
    }
}
