use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::catalyst::{self, CatalystForm};
use super::*;
use crate::quantum::random::random_density;
use crate::quantum::{basis_state, isotropic, max_entangled, schmidt_state};

fn opts() -> Options {
    Options::default()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn d_max_examples() {
    let bell = max_entangled(2).unwrap();
    let mixed = linalg::identity(4) * real(0.25);
    assert!(close(d_max(&bell, &mixed).unwrap(), 2.0, 1e-10));
    let rho = random_density(&mut ChaCha8Rng::seed_from_u64(3), &[2, 2]);
    assert!(close(d_max(&rho, rho.matrix()).unwrap(), 0.0, 1e-8));
    assert!(close(d_max(&rho, &(rho.matrix() * real(2.0))).unwrap(), -1.0, 1e-8));
    let zero = basis_state(vec![2], 0).unwrap();
    let one = basis_state(vec![2], 1).unwrap();
    assert!(matches!(
        d_max(&zero, one.matrix()),
        Err(Error::SupportViolation { .. })
    ));
}

#[test]
fn d_min_examples() {
    let bell = max_entangled(2).unwrap();
    assert!(close(d_min(&bell, bell.matrix()).unwrap(), 0.0, 1e-10));
    let mixed = linalg::identity(4) * real(0.25);
    assert!(close(d_min(&bell, &mixed).unwrap(), 2.0, 1e-10));
    let zero = basis_state(vec![2], 0).unwrap();
    let one = basis_state(vec![2], 1).unwrap();
    assert!(matches!(d_min(&zero, one.matrix()), Err(Error::InfiniteValue(_))));
}

#[test]
fn mes_values_are_log_rank() {
    for m in 2..=4 {
        let psi = max_entangled(m).unwrap();
        let want = (m as f64).log2();
        for (name, v) in [
            ("emax", e_max(&psi, &opts()).unwrap()),
            ("emin", e_min(&psi, &opts()).unwrap()),
            ("lr", lr(&psi, &opts()).unwrap()),
            ("lrg", lr_global(&psi, &opts()).unwrap()),
        ] {
            assert!(v.exact, "{name} M={m} {v:?}");
            assert!(v.contains(want, 1e-6), "{name} M={m} {v:?}");
        }
        let rg = r_global(&psi, Symmetry::None, &opts()).unwrap();
        assert!(rg.contains(m as f64 - 1.0, 1e-6), "{rg:?}");
    }
}

#[test]
fn separable_states_score_zero() {
    let sep = isotropic(2, 0.4).unwrap();
    for v in [
        e_max(&sep, &opts()).unwrap(),
        e_min(&sep, &opts()).unwrap(),
        r_global(&sep, Symmetry::None, &opts()).unwrap(),
        r_sep(&sep, &opts()).unwrap(),
    ] {
        assert!(v.contains(0.0, 1e-6), "{v:?}");
    }
}

#[test]
fn isotropic_robustness_matches_closed_form() {
    // R_G(iso(d, f)) = d·f − 1 above the threshold.
    let rho = isotropic(2, 0.75).unwrap();
    let emax = e_max(&rho, &opts()).unwrap();
    let lrg = lr_global(&rho, &opts()).unwrap();
    assert!(emax.exact && lrg.exact);
    assert!(close(emax.midpoint(), lrg.midpoint(), 1e-6));
    assert!(emax.contains(1.5f64.log2(), 1e-6));
}

#[test]
fn random_states_keep_orderings() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let rho = random_density(&mut rng, &[2, 2]);
        let emax = e_max(&rho, &opts()).unwrap();
        let emin = e_min(&rho, &opts()).unwrap();
        let rg = r_global(&rho, Symmetry::None, &opts()).unwrap();
        let r = r_sep(&rho, &opts()).unwrap();
        let lrg = lr_global(&rho, &opts()).unwrap();
        assert!(emax.exact && emin.exact && rg.exact && r.exact);
        assert!(emin.upper <= emax.upper + 1e-6);
        assert!(r.lower >= rg.lower - 1e-6);
        assert!(close(emax.midpoint(), lrg.midpoint(), 1e-6), "{emax:?} {lrg:?}");
    }
}

#[test]
fn smooth_max_of_bell_state() {
    let bell = max_entangled(2).unwrap();
    let zero = e_max_smooth(&bell, 0.0, &opts()).unwrap();
    assert!(zero.contains(1.0, 1e-6));
    let mut last = f64::INFINITY;
    for eps in [0.01, 0.1, 0.5] {
        let v = e_max_smooth(&bell, eps, &opts()).unwrap();
        // Twirling reduces the ball to isotropic states of overlap ≥ 1 − ε.
        let want = (2.0 * (1.0 - eps)).max(1.0).log2();
        assert!(v.exact && v.contains(want, 1e-6), "ε={eps}: {v:?} vs {want}");
        assert!(v.upper <= last + 1e-9);
        last = v.upper;
    }
}

#[test]
fn smooth_max_of_random_state() {
    let rho = random_density(&mut ChaCha8Rng::seed_from_u64(5), &[2, 2]);
    let sol = e_max_smooth_solution(&rho, 0.05, &opts()).unwrap();
    assert!(sol.value.exact, "{:?}", sol.value);
    let ball = SmoothingBall::new(rho.clone(), 0.05).unwrap();
    assert!(ball.contains(&sol.state, 1e-9));
    let unsmoothed = e_max(&rho, &opts()).unwrap();
    assert!(sol.value.upper <= unsmoothed.upper + 1e-9);
    // The witness certifies the upper end directly.
    let w = sol.witness.unwrap();
    assert!(close(linalg::trace(&w).re.log2(), sol.value.upper, 1e-9));
    assert!(linalg::min_eigenvalue(&(&w - sol.state.matrix())) >= -1e-12);
}

#[test]
fn smooth_robustness_of_bell_state() {
    let bell = max_entangled(2).unwrap();
    let v = lr_smooth(&bell, 0.1, &opts()).unwrap();
    // R(iso(2, f)) = 2f − 1 at the ball's edge f = 0.9.
    assert!(v.exact && v.contains(1.8f64.log2(), 1e-6), "{v:?}");
    assert!(v.upper < 1.0);
    let zero = lr_smooth(&bell, 0.0, &opts()).unwrap();
    assert!(zero.contains(1.0, 1e-6));
}

#[test]
fn smooth_robustness_dominates_smooth_max() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..2 {
        let rho = random_density(&mut rng, &[2, 2]);
        let a = lr_smooth(&rho, 0.05, &opts()).unwrap();
        let b = e_max_smooth(&rho, 0.05, &opts()).unwrap();
        assert!(a.upper >= b.lower - 1e-6);
    }
}

/// `min max(b, a/2 + b/2)` over `a ≥ 1 − ε`, `0 ≤ a, b ≤ 1`, by grid.
fn bell_emin_oracle(eps: f64) -> f64 {
    let steps = 2000;
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        let a = i as f64 / steps as f64;
        if a < 1.0 - eps - 1e-12 {
            continue;
        }
        for j in 0..=steps {
            let b = j as f64 / steps as f64;
            best = best.min(b.max(0.5 * a + 0.5 * b));
        }
    }
    // The grid contains the exact optimiser a = 1 − ε, b = 0 when ε is a
    // multiple of 1/steps.
    -best.log2()
}

#[test]
fn smooth_min_of_bell_state_matches_oracle() {
    let bell = max_entangled(2).unwrap();
    for eps in [0.01, 0.1] {
        let v = e_min_smooth(&bell, eps, &opts()).unwrap();
        let want = bell_emin_oracle(eps);
        assert!(v.exact && v.contains(want, 1e-5), "ε={eps}: {v:?} vs {want}");
    }
    let zero = e_min_smooth(&bell, 0.0, &opts()).unwrap();
    assert!(zero.contains(1.0, 1e-6));
}

#[test]
fn smooth_min_is_monotone_in_eps() {
    let rho = random_density(&mut ChaCha8Rng::seed_from_u64(23), &[2, 2]);
    let mut last = e_min(&rho, &opts()).unwrap();
    for eps in [0.01, 0.05, 0.2] {
        let v = e_min_smooth(&rho, eps, &opts()).unwrap();
        assert!(v.exact, "{v:?}");
        assert!(v.upper >= last.lower - 1e-6);
        last = v;
    }
}

#[test]
fn pure_state_entropy() {
    assert!(close(e_r_pure(&max_entangled(4).unwrap()).unwrap(), 2.0, 1e-10));
    assert!(close(e_r_pure(&basis_state(vec![2, 2], 0).unwrap()).unwrap(), 0.0, 1e-10));
    let h = -(0.9f64 * 0.9f64.log2() + 0.1 * 0.1f64.log2());
    assert!(close(e_r_pure(&schmidt_state(&[0.9, 0.1]).unwrap()).unwrap(), h, 1e-10));
    assert!(close(h, 0.468996, 1e-6));
    assert!(e_r_pure(&isotropic(2, 0.9).unwrap()).is_err());
}

#[test]
fn catalyst_form_round_trip() {
    let rho = random_density(&mut ChaCha8Rng::seed_from_u64(2), &[2, 2]);
    let form = CatalystForm::product(&rho, 3).unwrap();
    let z = form.to_operator();
    // ρ ⊗ Ψ_3 with factors regrouped.
    let direct = rho.tensor(&max_entangled(3).unwrap()).permute(&[0, 2, 1, 3]).unwrap();
    assert!(linalg::max_abs_diff(&z, direct.matrix()) < 1e-12);
    let back = CatalystForm::from_operator(&z, [2, 2], 3);
    assert!(linalg::max_abs_diff(&back.x1, rho.matrix()) < 1e-12);
    assert!(back.x2.iter().all(|v| v.norm() < 1e-12));

    let noise = random_density(&mut ChaCha8Rng::seed_from_u64(4), &[6, 6]);
    let twirled = catalyst::catalyst_twirl(noise.matrix(), [2, 2], 3);
    let projected = CatalystForm::from_operator(noise.matrix(), [2, 2], 3).to_operator();
    assert!(linalg::max_abs_diff(&twirled, &projected) < 1e-12);
}

#[test]
fn reduced_robustness_matches_full_program() {
    let rho = random_density(&mut ChaCha8Rng::seed_from_u64(8), &[2, 2]);
    let form = CatalystForm::product(&rho, 2).unwrap();
    let state = form.to_state().unwrap();
    let hint = Symmetry::Catalyst { rho_dims: [2, 2], k: 2 };
    let reduced = r_global(&state, hint, &opts()).unwrap();
    let full = r_global(&state, Symmetry::None, &opts()).unwrap();
    // The separable family closes the bracket where the generic test cannot.
    assert!(reduced.exact, "{reduced:?}");
    assert!(close(reduced.lower, full.lower, 1e-6), "{reduced:?} {full:?}");
    assert!(full.upper >= reduced.upper - 1e-6);
}

#[test]
fn reduced_smooth_max_of_bell_catalyst() {
    // Ψ_2 ⊗ Ψ_2 regroups to Ψ_4, whose smoothed value is log 4(1−ε).
    let bell = max_entangled(2).unwrap();
    let eps = 0.01;
    let form = CatalystForm::product(&bell, 2).unwrap();
    let sol = catalyst::e_max_smooth_form(&form, eps, &opts()).unwrap();
    let want = (4.0 * (1.0 - eps)).log2();
    assert!(sol.value.exact && sol.value.contains(want, 1e-6), "{:?}", sol.value);
    let direct = e_max_smooth(&max_entangled(4).unwrap(), eps, &opts()).unwrap();
    assert!(direct.contains(want, 1e-6), "{direct:?}");
    let f = quantum::fidelity_operators(&sol.state.x1, bell.matrix());
    assert!(f >= 1.0 - eps - 1e-9);
}

