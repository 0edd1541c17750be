use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::quantum::random::random_density;
use crate::quantum::{isotropic, max_entangled};

fn opts() -> Options {
    Options::default()
}

#[test]
fn replacer_ignores_its_input() {
    let tau = isotropic(2, 0.3).unwrap();
    let ch = MeasurePrepareChannel::replacer(vec![2, 2], tau.clone(), Symmetry::None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..3 {
        let out = apply(&ch, &random_density(&mut rng, &[2, 2])).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), tau.matrix()) < 1e-12);
    }
    let report = verify_sepp(&ch, 0.0, &opts()).unwrap();
    assert!(report.is_sepp);
    assert!(report.worst_case_robustness.contains(0.0, 1e-6));
}

#[test]
fn effects_must_sum_to_identity() {
    let half = Effect::new(linalg::identity(4) * real(0.5), vec![2, 2]).unwrap();
    let tau = isotropic(2, 0.3).unwrap();
    let bad = MeasurePrepareChannel::new(
        vec![Branch { effect: half, output: tau }],
        Symmetry::None,
    );
    assert!(matches!(bad, Err(Error::InvalidEffect(_))));
}

#[test]
fn distill_mes() {
    let out = build_distill(&max_entangled(4).unwrap(), 0.0, &opts()).unwrap();
    assert_eq!(out.m, 4);
    assert!((out.log_m - 2.0).abs() < 1e-12);
    assert!((out.achieved_fidelity - 1.0).abs() < 1e-9);
    assert!(out.sepp_report.is_sepp);
    assert!(out.sandwich.holds(out.log_m));
}

#[test]
fn distill_separable_is_trivial() {
    let out = build_distill(&isotropic(2, 0.5).unwrap(), 0.0, &opts()).unwrap();
    assert_eq!(out.m, 1);
    assert_eq!(out.log_m, 0.0);
    assert!(out.sepp_report.is_sepp);
}

#[test]
fn distill_isotropic_respects_sandwich() {
    let rho = isotropic(2, 0.9).unwrap();
    let out = build_distill(&rho, 0.05, &opts()).unwrap();
    let e = measures::e_min_smooth(&rho, 0.05, &opts()).unwrap();
    assert!(e.lower.floor() <= out.log_m && out.log_m <= e.upper + 1e-6);
    assert!(out.achieved_fidelity >= 0.95 - 1e-9);
    if out.m > 1 {
        // Applied to ρ, the output is isotropic with Ψ_M weight ≥ 1 − ε.
        let image = apply(&out.channel, &rho).unwrap();
        assert!(separability::is_isotropic(image.matrix(), image.dims()));
    }
}

#[test]
fn distill_applied_to_its_state_is_isotropic() {
    let rho = isotropic(3, 0.95).unwrap();
    let out = build_distill(&rho, 0.1, &opts()).unwrap();
    assert_eq!(out.m, 2);
    let image = apply(&out.channel, &rho).unwrap();
    assert!(separability::is_isotropic(image.matrix(), image.dims()));
    assert!(image.expectation(&linalg::mes_projector(2)) >= 0.9 - 1e-9);
}

#[test]
fn oversized_distillation_is_rejected() {
    // A = Ψ_2 with M = 3 violates Tr(Aσ) ≤ 1/M on |00⟩-like inputs.
    let a = Effect::new(linalg::mes_projector(2), vec![2, 2]).unwrap();
    let ch = MeasurePrepareChannel::two_branch(a.clone(), max_entangled(3).unwrap(), mes_complement(3).unwrap(), Symmetry::Isotropic).unwrap();
    let report = verify_sepp(&ch, 0.0, &opts()).unwrap();
    assert!(!report.is_sepp, "{report:?}");
    assert!(matches!(require_sepp(&report), Err(Error::NotSepp { .. })));
    let ok = MeasurePrepareChannel::two_branch(a, max_entangled(2).unwrap(), mes_complement(2).unwrap(), Symmetry::Isotropic).unwrap();
    assert!(verify_sepp(&ok, 0.0, &opts()).unwrap().is_sepp);
}

#[test]
fn dilute_bell_is_exact() {
    let bell = max_entangled(2).unwrap();
    let out = build_dilute(&bell, 0.0, &opts()).unwrap();
    assert_eq!(out.m, 2);
    let image = apply(&out.channel, &bell).unwrap();
    assert!(linalg::max_abs_diff(image.matrix(), bell.matrix()) < 1e-6);
    assert!(out.sepp_report.is_sepp);
}

#[test]
fn dilute_separable_is_trivial() {
    let out = build_dilute(&isotropic(2, 0.4).unwrap(), 0.0, &opts()).unwrap();
    assert_eq!(out.m, 1);
    assert_eq!(out.log_m, 0.0);
}

#[test]
fn dilute_random_state_respects_sandwich() {
    let rho = random_density(&mut ChaCha8Rng::seed_from_u64(9), &[2, 2]);
    let out = build_dilute(&rho, 0.01, &opts()).unwrap();
    let lr = measures::lr_smooth(&rho, 0.01, &opts()).unwrap();
    assert!(lr.lower - 1e-6 <= out.log_m && out.log_m <= lr.upper + 1.0 + 1e-6, "{} {lr:?}", out.log_m);
    assert!(out.achieved_fidelity >= 0.99 - 1e-9);
}

#[test]
fn catalyst_rank_formula() {
    assert_eq!(catalyst_rank(1.0).unwrap(), 2);
    assert_eq!(catalyst_rank(0.5).unwrap(), 3);
    assert_eq!(catalyst_rank(0.3).unwrap(), 5);
    assert!(catalyst_rank(0.0).is_err());
}

#[test]
fn catalytic_dilution_returns_the_catalyst() {
    let bell = max_entangled(2).unwrap();
    let out = build_catalytic_dilute(&bell, 0.01, 1.0, &opts()).unwrap();
    assert_eq!(out.catalyst_k, Some(2));
    let image = apply(&out.channel, &catalytic_input(out.m, 2).unwrap()).unwrap();
    let form = CatalystForm::from_state(&image, [2, 2], 2).unwrap();
    assert!(form.x2.iter().all(|z| z.norm() < 1e-9));
    assert!(quantum::fidelity_operators(&form.x1, bell.matrix()) >= 0.99 - 1e-9);
    assert!(out.sepp_report.is_sepp);
    assert!(out.sandwich.holds(out.log_m), "{:?} {}", out.sandwich, out.log_m);
}

#[test]
fn channels_preserve_trace() {
    let rho = random_density(&mut ChaCha8Rng::seed_from_u64(12), &[2, 2]);
    let out = build_distill(&max_entangled(2).unwrap(), 0.1, &opts()).unwrap();
    let image = apply(&out.channel, &rho).unwrap();
    assert!((linalg::trace(image.matrix()).re - 1.0).abs() < 1e-9);
}
