use floquet_ratchet::floquet::{floquet_spectrum, fold};
use floquet_ratchet::gpe::{grid_to_momentum, momentum_to_grid};
use floquet_ratchet::model::hamiltonian_matrix;
use floquet_ratchet::observables::current;
use floquet_ratchet::propagation::{one_period_propagator, propagate};
use floquet_ratchet::three_level::{
    analytic_current_w05, analytic_current_w1, analytic_populations_w1, EffectiveCouplings,
};
use floquet_ratchet::{DriveParams, MomentumState, PropagatorConfig, C64};
use proptest::prelude::*;

fn state(m: usize) -> impl Strategy<Value = MomentumState> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2 * m + 1)
        .prop_filter("non-zero", |v| {
            v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3)
        })
        .prop_map(move |v| {
            MomentumState::from_amplitudes(m, v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
                .unwrap()
        })
}

fn coarse() -> PropagatorConfig {
    PropagatorConfig {
        steps_per_period: 32,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjugation_reverses_time(k in 0.0..3.0f64, l in 0.0..3.0f64, w in 0.1..10.0f64, t in -50.0..50.0f64) {
        let p = DriveParams::new(k, l, w).unwrap();
        let (a, b) = (hamiltonian_matrix(&p, t, 5), hamiltonian_matrix(&p, -t, 5));
        for i in 0..11 {
            for j in 0..11 {
                prop_assert!((a[(i, j)].conj() - b[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn hermitian_at_zero_lambda(k in 0.0..3.0f64, w in 0.1..10.0f64, t in -50.0..50.0f64) {
        let h = hamiltonian_matrix(&DriveParams::new(k, 0.0, w).unwrap(), t, 4);
        for i in 0..9 {
            for j in 0..9 {
                prop_assert_eq!(h[(i, j)], h[(j, i)].conj());
            }
        }
    }

    #[test]
    fn reflection_flips_current(s in state(6)) {
        let a = current(&s).unwrap();
        let b = current(&s.reflected()).unwrap();
        prop_assert!((a + b).abs() < 1e-12);
        prop_assert!(a.abs() <= 6.0 + 1e-12);
    }

    #[test]
    fn grid_round_trip(s in state(12), shift in 5u32..8) {
        let n = 1usize << shift;
        let back = grid_to_momentum(&momentum_to_grid(&s, n).unwrap(), 12).unwrap();
        for (a, b) in s.amplitudes.iter().zip(&back.amplitudes) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn fold_lands_in_zone(x in -1e4..1e4f64, w in 0.01..20.0f64) {
        let f = fold(x, w);
        prop_assert!(f >= -w / 2.0 && f < w / 2.0);
        let k = ((x - f) / w).round();
        prop_assert!((x - f - k * w).abs() < 1e-9 * x.abs().max(1.0));
    }

    #[test]
    fn second_order_couplings_are_real(k in 0.0..2.0f64, l in 0.0..5.0f64) {
        let c = EffectiveCouplings::second_order(k, l);
        prop_assert!(c.gamma_plus >= 0.0 && c.gamma_minus >= 0.0);
        prop_assert_eq!(c.rabi.im, 0.0);
        let f = EffectiveCouplings::first_order(k, l);
        if l > 1.0 && k > 0.0 {
            prop_assert!(f.rabi.re.abs() < 1e-15 && f.rabi.im > 0.0);
        } else {
            prop_assert_eq!(f.rabi.im, 0.0);
        }
    }

    #[test]
    fn analytic_currents_are_bounded(k in 0.01..0.5f64, l in 0.0..3.0f64, t in 0.0..1e5f64) {
        let i1 = analytic_current_w1(k, l, t);
        let i05 = analytic_current_w05(k, l, t);
        prop_assert!((-2.0..=0.0).contains(&i1));
        prop_assert!((-1.0..=0.0).contains(&i05));
    }

    #[test]
    fn populations_follow_rabi_weights(k in 0.01..0.5f64, l in 0.0..3.0f64, t in 0.0..1e5f64) {
        let c = EffectiveCouplings::second_order(k, l);
        let (p2, p0, pm2) = analytic_populations_w1(k, l, t);
        let s2 = (c.rabi.re * t).sin().powi(2);
        prop_assert!((p0 + s2 - 1.0).abs() < 1e-12);
        let (x, y) = (pm2 * c.gamma_minus.powi(2), p2 * c.gamma_plus.powi(2));
        prop_assert!((x - y).abs() <= 1e-12 * (x + y));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn unitary_when_hermitian(k in 0.0..2.0f64, w in 0.3..5.0f64) {
        let p = DriveParams::new(k, 0.0, w).unwrap();
        let u = one_period_propagator(&p, 6, &coarse()).unwrap();
        for i in 0..13 {
            for j in 0..13 {
                let d: C64 = (0..13).map(|r| u[(r, i)].conj() * u[(r, j)]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - C64::new(want, 0.0)).norm() < 1e-10);
            }
        }
        let spec = floquet_spectrum(&u, w).unwrap();
        prop_assert!(spec.quasienergies.iter().all(|e| e.im.abs() < 1e-9));
    }

    #[test]
    fn propagation_is_linear(a in state(5), b in state(5), k in 0.0..1.5f64, l in 0.0..2.0f64) {
        let p = DriveParams::new(k, l, 1.0).unwrap();
        let t = p.period();
        let pa = propagate(&a, &p, 0.0, t, &coarse()).unwrap();
        let pb = propagate(&b, &p, 0.0, t, &coarse()).unwrap();
        let sum = MomentumState::from_amplitudes(
            5,
            a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x + y).collect(),
        )
        .unwrap();
        let ps = propagate(&sum, &p, 0.0, t, &coarse()).unwrap();
        let scale = |s: &MomentumState| s.log_norm_offset.exp().sqrt();
        for i in 0..11 {
            let lhs = ps.amplitudes[i] * scale(&ps);
            let rhs = pa.amplitudes[i] * scale(&pa) + pb.amplitudes[i] * scale(&pb);
            prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()));
        }
    }
}
