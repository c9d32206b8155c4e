mod common;

use common::{random_case, random_stable_scalar, unit_gap};
use impulsive_core::config::ScenarioConfig;
use impulsive_core::io::{read_trajectory_csv, write_trajectory_csv};
use impulsive_core::linalg::mat_norm;
use impulsive_core::{
    decay_transfer, delta_to_jumps, empirical_certificate, estimate_decay_rate, fundamental_dominance,
    fundamental_nu, probe_k_estimate, representation_with, scalar_probe, scalar_product_formula,
    sign_sequence, solve_ivp, CertificateKind, CoefficientOperator, DMatrix, DVector,
    DecayingForcingSpec, Forcing, FundamentalSolution, ImpulseSchedule, ImpulsiveSystem,
    JumpSequence, Provenance, StabilityCertificate, Verdict, DEFAULT_H_MAX,
};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn uniform_schedule_gaps(eta in 0.05f64..3.0, spans in 1.0f64..60.0) {
        let horizon = eta * spans;
        let s = ImpulseSchedule::uniform(eta, horizon).unwrap();
        prop_assert_eq!(s.len(), (horizon / eta * (1.0 + 1e-12)).floor() as usize);
        for g in s.gaps() {
            prop_assert!((g - eta).abs() <= 1e-9 * eta.max(1.0));
        }
        prop_assert!(s.times().iter().all(|&t| t > 0.0 && t <= horizon));
    }

    #[test]
    fn evolution_inverse_pairs(seed in any::<u64>(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let case = random_case(seed);
        let f = FundamentalSolution::build(&case.system, DEFAULT_H_MAX).unwrap();
        let (t, s) = (u * common::HORIZON, v * common::HORIZON);
        let c = f.evolution(t, s).unwrap() * f.evolution(s, t).unwrap();
        let n = case.system.dimension();
        prop_assert!(mat_norm(&(c - DMatrix::identity(n, n))) < 1e-8);
        prop_assert!(mat_norm(&(f.evolution(t, t).unwrap() - DMatrix::identity(n, n))) < 1e-12);
    }

    #[test]
    fn representation_matches_trajectory_at_nodes(seed in any::<u64>()) {
        let case = random_case(seed);
        let tr = solve_ivp(&case.system, &case.forcing, &case.x0, DEFAULT_H_MAX).unwrap();
        let f = FundamentalSolution::build(&case.system, DEFAULT_H_MAX).unwrap();
        for (t, x) in tr.samples.iter().step_by(331) {
            let r = representation_with(&f, &case.forcing, &case.x0, *t).unwrap();
            prop_assert!((x - r).amax() < 1e-5, "t = {}", t);
        }
    }

    #[test]
    fn scalar_fundamental_is_flow_times_jump_product(
        a in -1.0f64..1.0,
        bs in prop::collection::vec(prop_oneof![-2.0f64..-0.2, 0.2f64..2.0], 0..6),
        t in 0.0f64..6.0,
    ) {
        let schedule = ImpulseSchedule::new((1..=bs.len()).map(|i| i as f64).collect(), 6.0).unwrap();
        let jumps = JumpSequence::scalars(&bs);
        let sys = ImpulsiveSystem::new(CoefficientOperator::scalar(a), jumps.clone(), schedule.clone()).unwrap();
        let x = FundamentalSolution::build(&sys, DEFAULT_H_MAX).unwrap().at(t).unwrap()[(0, 0)];
        let expected = scalar_product_formula(|t| (-a * t).exp(), &jumps, &schedule, t).unwrap();
        prop_assert!((x - expected).abs() <= 1e-9 * expected.abs().max(1.0));
    }

    #[test]
    fn sign_sequence_matches_fundamental_sign(
        a in -1.0f64..1.0,
        bs in prop::collection::vec(prop_oneof![-2.0f64..-0.2, 0.2f64..2.0], 1..8),
    ) {
        let sys = ImpulsiveSystem::new(
            CoefficientOperator::scalar(a),
            JumpSequence::scalars(&bs),
            ImpulseSchedule::new((1..=bs.len()).map(|i| i as f64).collect(), bs.len() as f64).unwrap(),
        ).unwrap();
        let signs = sign_sequence(&sys).unwrap();
        let f = FundamentalSolution::build(&sys, DEFAULT_H_MAX).unwrap();
        for (i, s) in signs.iter().enumerate() {
            prop_assert_eq!(*s, f.post_jump(i + 1)[(0, 0)].signum());
        }
    }

    #[test]
    fn delta_layer_equals_direct_jump_configuration(
        eta in 0.3f64..2.0,
        a in -0.5f64..1.0,
        weights in prop::collection::vec(-1.0f64..1.0, 30),
        x0 in -1.0f64..1.0,
    ) {
        let horizon = 8.0;
        let count = ImpulseSchedule::uniform(eta, horizon).unwrap().len();
        let alphas: Vec<_> = weights[..count].iter().map(|&w| DVector::from_element(1, w)).collect();
        let layer = delta_to_jumps(eta, &alphas, horizon).unwrap();
        let via_layer = solve_ivp(
            &layer.system(CoefficientOperator::scalar(a)).unwrap(),
            &layer.forcing,
            &DVector::from_element(1, x0),
            DEFAULT_H_MAX,
        ).unwrap();
        let direct_sys = ImpulsiveSystem::new(
            CoefficientOperator::scalar(a),
            JumpSequence::scalars(&vec![1.0; count]),
            ImpulseSchedule::uniform(eta, horizon).unwrap(),
        ).unwrap();
        let direct = solve_ivp(
            &direct_sys,
            &Forcing::new(1, None, alphas, horizon).unwrap(),
            &DVector::from_element(1, x0),
            DEFAULT_H_MAX,
        ).unwrap();
        prop_assert_eq!(via_layer, direct);
    }

    #[test]
    fn probe_terms_add_with_the_same_sign(
        a in 0.0f64..1.0,
        bs in prop::collection::vec(prop_oneof![-1.5f64..-0.1, 0.1f64..1.5], 1..12),
    ) {
        let sys = ImpulsiveSystem::new(
            CoefficientOperator::scalar(a),
            JumpSequence::scalars(&bs),
            ImpulseSchedule::new((1..=bs.len()).map(|i| i as f64).collect(), bs.len() as f64 + 0.5).unwrap(),
        ).unwrap();
        let verdict = scalar_probe(&sys, DEFAULT_H_MAX).unwrap();
        let tr = verdict.trajectory.as_ref().unwrap();
        let mut running = 0.0f64;
        for (j, b) in tr.jumps.iter().zip(&bs) {
            // |x(tau+)| = |B| |x(tau-)| + 1 when the offset has the sign of B x(tau-).
            let expected = b.abs() * j.pre[0].abs() + 1.0;
            prop_assert!((j.post[0].abs() - expected).abs() <= 1e-12 * expected);
            let next = running.max(j.post[0].abs());
            prop_assert!(next >= running);
            running = next;
        }
        prop_assert!(verdict.q_hat >= running);
    }

    #[test]
    fn scalar_k_estimate_equals_probe(seed in any::<u64>(), trials in 1usize..4, pseed in any::<u64>()) {
        let case = random_stable_scalar(seed, 12.0);
        let probe = scalar_probe(&case.system, DEFAULT_H_MAX).unwrap();
        let k = probe_k_estimate(&case.system, trials, pseed).unwrap();
        prop_assert!((k.k_hat - probe.q_hat).abs() <= 1e-12 * probe.q_hat);
    }

    #[test]
    fn bounded_probe_implies_positive_decay_rate(seed in any::<u64>()) {
        let case = random_stable_scalar(seed, 20.0);
        let probe = scalar_probe(&case.system, DEFAULT_H_MAX).unwrap();
        prop_assume!(probe.verdict == Verdict::BoundedUpTo);
        let f = FundamentalSolution::build(&case.system, DEFAULT_H_MAX).unwrap();
        let samples: Vec<_> = f.norm_samples().iter().map(|s| (s.t, s.norm)).collect();
        let (nu_hat, _) = estimate_decay_rate(&samples).unwrap();
        prop_assert!(nu_hat > 0.0);
    }

    #[test]
    fn empirical_certificates_dominate(seed in any::<u64>()) {
        let case = random_stable_scalar(seed, 15.0);
        let f = FundamentalSolution::build(&case.system, DEFAULT_H_MAX).unwrap();
        let samples: Vec<_> = f.norm_samples().iter().map(|s| (s.t, s.norm)).collect();
        let cert = empirical_certificate(&samples).unwrap();
        prop_assert!(fundamental_dominance(&cert, &f).pass);
    }

    #[test]
    fn decay_rate_recovers_synthetic_exponentials(n in 0.5f64..20.0, nu in 0.05f64..3.0) {
        let samples: Vec<_> = (0..=500).map(|i| i as f64 * 0.02).map(|t| (t, n * (-nu * t).exp())).collect();
        let (nu_hat, n_hat) = estimate_decay_rate(&samples).unwrap();
        prop_assert!((nu_hat - nu).abs() <= 0.01 * nu);
        prop_assert!((n_hat - n).abs() <= 0.05 * n);
    }

    #[test]
    fn decay_envelope_rate_is_capped(
        n in 1.0f64..50.0, nu in 0.05f64..2.0, lambda in 0.05f64..3.0,
        rho in 0.2f64..2.0, extra in 0.0f64..1.0,
    ) {
        let sigma = rho + extra;
        let cert = StabilityCertificate::new(CertificateKind::Evolution, n, nu, Provenance::EmpiricalFit, &[]).unwrap();
        let env = decay_transfer(&cert, rho, sigma, &DecayingForcingSpec { n1: 1.0, lambda }).unwrap();
        prop_assert!(env.nu0 <= nu.min(env.lambda / sigma));
        prop_assert!(env.n0 >= n);
    }

    #[test]
    fn trajectory_csv_round_trips(seed in any::<u64>()) {
        let case = random_case(seed);
        let tr = solve_ivp(&case.system, &case.forcing, &case.x0, 0.05).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&tr, &mut buf).unwrap();
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.samples, tr.samples);
        prop_assert_eq!(back.jumps, tr.jumps);
    }
}

#[test]
fn nu_decreases_in_k_and_sigma() {
    let ks = [1.5, 2.0, 4.0, 8.0];
    let sigmas = [0.5, 1.0, 2.0];
    for &s in &sigmas {
        for w in ks.windows(2) {
            assert!(fundamental_nu(w[1], s).unwrap() < fundamental_nu(w[0], s).unwrap());
        }
    }
    for &k in &ks {
        for w in sigmas.windows(2) {
            assert!(fundamental_nu(k, w[1]).unwrap() < fundamental_nu(k, w[0]).unwrap());
        }
    }
}

#[test]
fn probe_on_zero_jumps_is_reset_each_interval() {
    let sys = ImpulsiveSystem::new(
        CoefficientOperator::scalar(0.3),
        JumpSequence::scalars(&[0.0; 6]),
        ImpulseSchedule::uniform(1.0, 6.0).unwrap(),
    )
    .unwrap();
    let k = probe_k_estimate(&sys, 5, 11).unwrap();
    assert!((k.k_hat - 1.0).abs() < 1e-12, "{}", k.k_hat);
    assert!(!k.horizon_sensitive);
}

#[test]
fn growing_system_k_estimate_is_horizon_sensitive() {
    let k = probe_k_estimate(&unit_gap(1.0, std::f64::consts::E, 40.0), 2, 3).unwrap();
    assert!(k.horizon_sensitive);
    assert!((k.k_hat - 40.0).abs() < 1e-6, "{}", k.k_hat);
}

#[test]
fn reference_configs_build() {
    for cfg in [
        impulsive_core::config::reference::halving(10.0),
        impulsive_core::config::reference::decay_with_e_jumps(10.0),
    ] {
        let text = cfg.to_json_pretty();
        let sc = ScenarioConfig::from_json(&text).unwrap().build().unwrap();
        assert_eq!(sc.system.schedule().len(), 10);
    }
}
