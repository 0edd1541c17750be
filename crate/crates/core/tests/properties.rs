//! Randomised structural properties.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use oneshot_ent::io::StateFile;
use oneshot_ent::measures;
use oneshot_ent::quantum::{self, linalg, random};
use oneshot_ent::separability;
use oneshot_ent::Bipartition;

fn dims() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![Just(vec![2, 2]), Just(vec![2, 3]), Just(vec![3, 3]), Just(vec![2, 2, 2])]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn state_file_round_trip(seed in any::<u64>(), dims in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random::random_density(&mut rng, &dims);
        let text = serde_json::to_string(&StateFile::from_state("s", &rho)).unwrap();
        let back: StateFile = serde_json::from_str(&text).unwrap();
        let back = back.to_state().unwrap();
        prop_assert_eq!(back.dims(), rho.dims());
        prop_assert!(linalg::max_abs_diff(back.matrix(), rho.matrix()) <= 1e-12);
    }

    #[test]
    fn twirl_is_idempotent_and_trace_preserving(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random::random_density(&mut rng, &[d, d]).into_matrix();
        let once = quantum::uu_star_twirl(&x, &[d, d]).unwrap();
        let twice = quantum::uu_star_twirl(&once, &[d, d]).unwrap();
        prop_assert!(linalg::max_abs_diff(&once, &twice) <= 1e-12);
        prop_assert!((linalg::trace(&once).re - 1.0).abs() <= 1e-12);
        prop_assert!(separability::is_isotropic(&once, &[d, d]));
    }

    #[test]
    fn partial_trace_does_not_decrease_fidelity(seed in any::<u64>(), dims in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random::random_density(&mut rng, &dims);
        let sigma = random::random_density(&mut rng, &dims);
        let cut = Bipartition::new(vec![dims.len() - 1], dims.len()).unwrap();
        let before = quantum::fidelity(&rho, &sigma).unwrap();
        let after = quantum::fidelity(
            &quantum::partial_trace(&rho, &cut).unwrap(),
            &quantum::partial_trace(&sigma, &cut).unwrap(),
        ).unwrap();
        prop_assert!(before <= 1.0 + 1e-9);
        prop_assert!(after + 1e-9 >= before);
    }

    #[test]
    fn partial_transpose_preserves_trace_and_spectrum_sum(seed in any::<u64>(), dims in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random::random_density(&mut rng, &dims);
        let cut = Bipartition::new(vec![0], dims.len()).unwrap();
        let pt = quantum::partial_transpose(&rho, &cut).unwrap();
        prop_assert!(linalg::hermiticity_defect(&pt) <= 1e-12);
        let sum: f64 = linalg::eigvalsh(&pt).iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn relative_entropy_bounds_are_ordered(seed in any::<u64>(), dims in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random::random_density(&mut rng, &dims);
        let sigma = random::random_density(&mut rng, &dims);
        let dmax = measures::d_max(&rho, sigma.matrix()).unwrap();
        let dmin = measures::d_min(&rho, sigma.matrix()).unwrap();
        prop_assert!(dmin <= dmax + 1e-9);
        prop_assert!(dmin >= -1e-9);
    }

    #[test]
    fn pure_entanglement_matches_marginal_entropy(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random::random_pure(&mut rng, &[d, d]);
        let marginal = quantum::partial_trace(&psi, &Bipartition::second()).unwrap();
        let e = measures::e_r_pure(&psi).unwrap();
        prop_assert!((e - quantum::von_neumann_entropy(&marginal)).abs() <= 1e-9);
        prop_assert!(e <= (d as f64).log2() + 1e-9);
    }
}

#[test]
fn separable_isotropic_states_pass_ppt() {
    for f in [0.0, 0.25, 0.5] {
        let rho = quantum::isotropic(2, f).unwrap();
        let (ppt, _) = separability::ppt_check(&rho, None).unwrap();
        assert!(ppt, "F = {f}");
    }
    let (ppt, _) = separability::ppt_check(&quantum::isotropic(2, 0.6).unwrap(), None).unwrap();
    assert!(!ppt);
}
