use num_complex::Complex64;
use proptest::prelude::*;
use ruelle_core::eigen::{hausdorff, Spectrum, SpectrumSource};
use ruelle_core::manifold::{translate_for_word, word_for_translate};
use ruelle_core::maps::MapSystem;
use ruelle_core::phasespace::{
    apply_word, canonical_step, default_zone, BranchSequence, PhasePoint,
};
use ruelle_core::simulate::{evolve_cloud, PointCloud};

fn source() -> SpectrumSource {
    SpectrumSource {
        nu: 0.0,
        truncation: 1,
        method: "test".into(),
    }
}

fn points() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)),
        1..12,
    )
}

proptest! {
    #[test]
    fn hausdorff_is_a_metric(a in points(), b in points(), c in points()) {
        prop_assert!(hausdorff(&a, &a) == 0.0);
        prop_assert!((hausdorff(&a, &b) - hausdorff(&b, &a)).abs() < 1e-15);
        prop_assert!(hausdorff(&a, &c) <= hausdorff(&a, &b) + hausdorff(&b, &c) + 1e-12);
    }

    #[test]
    fn spectrum_is_sorted_by_modulus(a in points()) {
        let s = Spectrum::from_values(a, source());
        let m: Vec<f64> = s.eigenvalues().iter().map(|z| z.norm()).collect();
        prop_assert!(m.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        prop_assert_eq!(s.spectral_radius(), m[0]);
    }

    #[test]
    fn word_translate_round_trip(n in 1usize..12, seed in any::<u64>()) {
        let p = seed % (1u64 << n);
        let w = word_for_translate(p, 2, n);
        prop_assert_eq!(w.len(), n);
        prop_assert_eq!(translate_for_word(&w, 2), p);
    }

    #[test]
    fn apply_word_matches_steps(x in 0.0f64..1.0, xi in -5.0f64..5.0, word in prop::collection::vec(0u32..2, 1..8)) {
        let sys = MapSystem::doubling_cos();
        let p = PhasePoint::new(x, xi);
        let seq = BranchSequence::new(word.clone(), 2).unwrap();
        let direct = apply_word(&sys, p, &seq).unwrap();
        let stepped = word.iter().try_fold(p, |q, &e| canonical_step(&sys, q, e)).unwrap();
        prop_assert!((direct.x - stepped.x).abs() < 1e-12);
        prop_assert!((direct.xi - stepped.xi).abs() < 1e-9 * (1.0 + stepped.xi.abs()));
    }

    #[test]
    fn outside_zone_escapes(x in 0.0f64..1.0, t in 1.0001f64..10.0, sign in any::<bool>(), eps in 0u32..2) {
        let sys = MapSystem::doubling_cos();
        let zone = default_zone(&sys);
        let xi = if sign { t * zone.radius } else { -t * zone.radius };
        let next = canonical_step(&sys, PhasePoint::new(x, xi), eps).unwrap();
        prop_assert!(next.xi.abs() > zone.kappa * xi.abs());
    }

    #[test]
    fn clouds_stay_on_torus(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..50), steps in 0usize..30) {
        let sys = MapSystem::doubling_cos();
        let out = evolve_cloud(&sys, &PointCloud::new(pts), steps);
        prop_assert!(out.points.iter().all(|&(x, s)| (0.0..1.0).contains(&x) && (0.0..1.0).contains(&s)));
    }
}
