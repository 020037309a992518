//! Property tests for invariants that must hold for every valid input.

use proptest::prelude::*;

use switchdiff::classify::{
    ergodicity_radial, ergodicity_signed, stability_at_zero, LyapunovData, LyapunovKind, RhoBehaviour, Verdict,
};
use switchdiff::model::{Coefficient, DiffusionSpec, DriftSpec, HybridModel};
use switchdiff::qmatrix::{BetaVector, QMatrix};
use switchdiff::threshold::{quantize, theta_distance, RadialThresholdQ, Shape, SignedThresholdQ, SmoothQ, SwitchingSpec};

/// Off-diagonal rates with a guaranteed cycle `0 → 1 → … → n−1 → 0`.
fn irreducible(n: usize) -> impl Strategy<Value = QMatrix> {
    proptest::collection::vec(proptest::collection::vec(prop_oneof![Just(0.0), 0.05f64..5.0], n), n).prop_map(move |mut rows| {
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 0.0;
            row[(i + 1) % n] = row[(i + 1) % n].max(0.1);
        }
        QMatrix::from_off_diagonal(&rows).unwrap()
    })
}

fn q_and_beta() -> impl Strategy<Value = (QMatrix, Vec<f64>)> {
    (2usize..=8).prop_flat_map(|n| (irreducible(n), proptest::collection::vec(-3.0f64..3.0, n)))
}

fn two_state() -> impl Strategy<Value = QMatrix> {
    (0.1f64..5.0, 0.1f64..5.0).prop_map(|(a, b)| QMatrix::from_rows(&[vec![-a, a], vec![b, -b]]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn stationary_law_is_a_balanced_distribution((q, _) in q_and_beta()) {
        let pi = q.stationary().unwrap();
        prop_assert!(pi.weights().iter().all(|&p| p > 0.0));
        prop_assert!((pi.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(pi.balance_residual(&q) < 1e-10);
    }

    #[test]
    fn certificates_solve_their_equations((q, beta) in q_and_beta(), p in 0.05f64..2.0) {
        let beta = BetaVector::new(beta);
        let pf = q.pf_exponent(&beta, p).unwrap();
        // ξ is scaled to min 1, so its spread sets the rounding floor
        let scale = pf.xi.iter().fold(0.0f64, |m, &x| m.max(x)) * (1.0 + q.max_exit_rate() + p * 3.0 + pf.eta.abs());
        prop_assert!(pf.residual(&q, &beta) <= 1e-12 * scale, "residual {} at scale {}", pf.residual(&q, &beta), scale);
        prop_assert!(pf.xi.iter().all(|&x| x >= 1.0 - 1e-12));
        let wb = q.weighted_beta(&beta).unwrap();
        match q.fredholm_solve(&beta) {
            Ok(fr) => {
                prop_assert!(wb < 0.0);
                let scale = fr.xi.iter().fold(1.0f64, |m, &x| m.max(x.abs())) * (1.0 + q.max_exit_rate());
                prop_assert!(fr.residual(&q, &beta) <= 1e-12 * scale);
            }
            Err(_) => prop_assert!(wb >= 0.0),
        }
        if let Some(p) = q.find_stabilizing_p(&beta) {
            prop_assert!(q.pf_exponent(&beta, p).unwrap().eta > 0.0);
        }
    }
}

fn ld(kind: LyapunovKind, beta: &[f64], rho: RhoBehaviour) -> LyapunovData {
    LyapunovData::new(kind, beta.to_vec(), rho)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lowering_beta_preserves_a_stable_verdict(
        inner in two_state(), outer in two_state(),
        beta in proptest::collection::vec(-3.0f64..3.0, 2), shift in 0.0f64..3.0,
        kind in prop_oneof![Just(LyapunovKind::L1), Just(LyapunovKind::L2)],
    ) {
        let sw = RadialThresholdQ::new(vec![1.0], vec![inner, outer]).unwrap();
        let lower: Vec<f64> = beta.iter().map(|b| b - shift).collect();
        let a = stability_at_zero(&sw, &ld(kind, &beta, RhoBehaviour::VanishesAtZero)).unwrap();
        let b = stability_at_zero(&sw, &ld(kind, &lower, RhoBehaviour::VanishesAtZero)).unwrap();
        if a.verdict == Verdict::AsymptoticallyStableInProbability {
            prop_assert_eq!(b.verdict, Verdict::AsymptoticallyStableInProbability);
        }
    }

    #[test]
    fn lowering_beta_preserves_an_ergodic_verdict(
        left in two_state(), mid in two_state(), right in two_state(),
        beta in proptest::collection::vec(-3.0f64..3.0, 2), shift in 0.0f64..3.0,
    ) {
        let sw = SignedThresholdQ::new(vec![-1.0, 1.0], vec![left, mid, right]).unwrap();
        let lower: Vec<f64> = beta.iter().map(|b| b - shift).collect();
        let a = ergodicity_signed(&sw, &ld(LyapunovKind::L3, &beta, RhoBehaviour::BlowsUpAtInfinity)).unwrap();
        let b = ergodicity_signed(&sw, &ld(LyapunovKind::L3, &lower, RhoBehaviour::BlowsUpAtInfinity)).unwrap();
        if a.verdict == Verdict::ExponentiallyErgodic {
            prop_assert_eq!(b.verdict, Verdict::ExponentiallyErgodic);
        }
    }

    #[test]
    fn interior_cells_do_not_affect_verdicts(
        cells in proptest::collection::vec(two_state(), 4), other in proptest::collection::vec(two_state(), 2),
        beta in proptest::collection::vec(-3.0f64..3.0, 2),
    ) {
        let base = RadialThresholdQ::new(vec![1.0, 2.0, 3.0], cells.clone()).unwrap();
        let mut changed = cells.clone();
        changed[1] = other[0].clone();
        changed[2] = other[1].clone();
        let changed = RadialThresholdQ::new(vec![1.0, 2.0, 3.0], changed).unwrap();
        for rho in [RhoBehaviour::VanishesAtZero, RhoBehaviour::BlowsUpAtZero] {
            let l = ld(LyapunovKind::L1, &beta, rho);
            prop_assert_eq!(stability_at_zero(&base, &l).unwrap().verdict, stability_at_zero(&changed, &l).unwrap().verdict);
        }
        for rho in [RhoBehaviour::BlowsUpAtInfinity, RhoBehaviour::VanishesAtInfinity] {
            let l = ld(LyapunovKind::L4, &beta, rho);
            prop_assert_eq!(ergodicity_radial(&base, &l).unwrap().verdict, ergodicity_radial(&changed, &l).unwrap().verdict);
        }
    }
}

fn smooth() -> impl Strategy<Value = SmoothQ> {
    (
        proptest::collection::vec(1.0f64..3.0, 2),
        proptest::collection::vec(-0.5f64..0.5, 2),
        prop_oneof![Just(Shape::TanhRadius), Just(Shape::SigmoidRadius), Just(Shape::TanhSigned)],
    )
        .prop_map(|(base, m, shape)| {
            let q = QMatrix::from_rows(&[vec![-base[0], base[0]], vec![base[1], -base[1]]]).unwrap();
            SmoothQ::new(q, vec![vec![0.0, m[0]], vec![m[1], 0.0]], shape).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn refining_the_quantization_never_increases_theta(sq in smooth(), n in 1usize..32) {
        let radius = 4.0;
        let step = radius * 1e-4;
        let spec: SwitchingSpec = sq.clone().into();
        let coarse = theta_distance(&spec, &quantize(&sq, n, radius).unwrap(), radius, step).unwrap();
        let fine = theta_distance(&spec, &quantize(&sq, 2 * n, radius).unwrap(), radius, step).unwrap();
        // grid slack of the scan on either side
        let tol = 2.0 * sq.lipschitz() * step;
        prop_assert!(fine <= coarse + tol, "Θ_{} = {} > Θ_{} = {}", 2 * n, fine, n, coarse);
    }

    #[test]
    fn model_json_round_trips(
        sq in smooth(), cells in proptest::collection::vec(two_state(), 3),
        b in proptest::collection::vec(-3.0f64..3.0, 2), sigma in proptest::collection::vec(0.1f64..2.0, 2),
        family in 0usize..3,
    ) {
        let switching: SwitchingSpec = match family {
            0 => sq.into(),
            1 => SignedThresholdQ::new(vec![-1.0, 1.0], cells).unwrap().into(),
            _ => RadialThresholdQ::new(vec![0.5, 2.0], cells).unwrap().into(),
        };
        let m = HybridModel::new(
            1,
            2,
            DriftSpec::Linear { b: b.iter().map(|&v| Coefficient::Scalar(v)).collect() },
            DiffusionSpec::Constant { sigma: sigma.iter().map(|&v| Coefficient::Scalar(v)).collect() },
            switching,
        ).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: HybridModel = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, m);
    }
}
