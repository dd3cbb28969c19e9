//! Frozen oracles exercised through the public API only.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use lawless_core::born::{auxiliary_expansion, check_equidistance, derive_probabilities};
use lawless_core::holonomy::{
    build_group, holonomy, u1_phase_factor, winding_number, ConnectionField, Curve, Factor,
    GroupSpec, Preset,
};
use lawless_core::modular::{make_two_packet, modular_exchange_report};
use lawless_core::phenomenon::{
    analyze_log, classify_time_direction, penrose, penrose_rotated, run_phenomenon,
};
use lawless_core::state::{fs_distance, transition_probability};
use lawless_core::{
    rational_partition, BornInstance, Complex64, PacketSpec, PureState, TimeDirection, TrialLog,
};

#[test]
fn orthogonal_rays_are_half_a_turn_apart() {
    let a = PureState::basis(3, 0);
    let b = PureState::basis(3, 2);
    assert!((fs_distance(&a, &b).unwrap() - PI).abs() < 1e-12);
    let plus = PureState::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
    let up = PureState::basis(2, 0);
    assert!((transition_probability(&plus, &up).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn exact_rationals_split_into_equal_branches() {
    let part = rational_partition(&[0.3, 0.7], 1e-12).unwrap();
    assert_eq!(part.counts, vec![3, 7]);
    assert_eq!(part.denominator, 10);

    let inst = BornInstance::from_probabilities(&[0.3, 0.7]).unwrap();
    let exp = auxiliary_expansion(&inst, &part).unwrap();
    assert_eq!(exp.total_branches(), 10);
    for c in exp.flattened() {
        assert!((c - 0.1f64.sqrt()).abs() < 1e-15);
    }
    let eq = check_equidistance(&exp);
    assert!(eq.spread < 1e-12);
    assert!((10.0 * (eq.theta / 2.0).cos().powi(2) - 1.0).abs() < 1e-10);
}

#[test]
fn derived_probabilities_are_the_squared_coefficients() {
    let inst = BornInstance::new(vec![0.6, 0.8]).unwrap();
    let d = derive_probabilities(&inst, 1e-6).unwrap();
    assert!((d.probabilities[0] - 0.36).abs() < 1e-15);
    assert!((d.probabilities[1] - 0.64).abs() < 1e-15);
    assert_eq!(
        d.partition.counts.iter().sum::<u64>(),
        d.partition.denominator
    );
}

#[test]
fn penrose_logs_point_forward_and_their_reversal_backward() {
    let sc = penrose();
    let log = run_phenomenon(&sc, "alpha1", 20_000, 42).unwrap();
    let a = analyze_log(&log).unwrap();
    assert_eq!(a.backward["beta1"]["alpha1"], 1.0);
    assert!((a.forward["alpha1"]["beta1"] - 0.5).abs() < 0.0106);
    assert_eq!(
        classify_time_direction(&log, &sc).unwrap(),
        TimeDirection::Forward
    );
    assert_eq!(
        classify_time_direction(&log.reversed(), &sc).unwrap(),
        TimeDirection::Backward
    );
    for p in penrose_rotated().born_probabilities("beta1*").unwrap() {
        assert!((p - 0.5).abs() < 1e-12);
    }
}

#[test]
fn trial_logs_survive_csv() {
    let log = run_phenomenon(&penrose(), "alpha1", 300, 7).unwrap();
    let mut buf = Vec::new();
    log.write_csv(&mut buf).unwrap();
    let back = TrialLog::read_csv(buf.as_slice(), "penrose", 7).unwrap();
    assert_eq!(back.trials, log.trials);
    assert_eq!(run_phenomenon(&penrose(), "alpha1", 300, 7).unwrap(), log);
}

#[test]
fn modular_phase_moves_the_translation_but_not_the_moments() {
    let psi = make_two_packet(&PacketSpec::default()).unwrap();
    for alpha in [0.0, PI / 2.0, PI, 2.3] {
        let r = modular_exchange_report(&psi, alpha, 4).unwrap();
        let expected = Complex64::from_polar(0.5, alpha);
        assert!((r.translation_after - expected).norm() <= 1e-6, "{alpha}");
        assert!(r.max_relative_moment_change() < 1e-9, "{alpha}");
    }
}

#[test]
fn abelian_holonomy_matches_the_enclosed_flux() {
    let e = 0.5;
    let b = 2.0;
    let alg = build_group(&GroupSpec::new(vec![Factor::U1 { charge: e }])).unwrap();
    let field = ConnectionField::new(2, Preset::U1Linear { b });
    let square = Curve::square_loop(&[-0.5, -0.5], 0, 1, 1.0).unwrap();
    let g = holonomy(&field, &alg, &square, 8).unwrap();
    let expected = Complex64::from_polar(1.0, -e * b);
    assert!((g.element.matrix[(0, 0)] - expected).norm() < 1e-12);
}

#[test]
fn solenoid_phase_counts_windings() {
    let sol = Preset::Solenoid {
        flux: PI,
        center: [0.0, 0.0],
        core_radius: 0.0,
    };
    let once = Curve::polygon([0.0, 0.0], 1.0, 7, 0.3).unwrap();
    assert_eq!(winding_number([0.0, 0.0], &once).unwrap(), 1);
    let z = u1_phase_factor(&sol, 1.0, &once).unwrap();
    assert!((z - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

    let away = Curve::polygon([5.0, 0.0], 1.0, 5, 0.0).unwrap();
    assert_eq!(winding_number([0.0, 0.0], &away).unwrap(), 0);
    let z = u1_phase_factor(&sol, 1.0, &away).unwrap();
    assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-12);
}
