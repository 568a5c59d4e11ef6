use floquet_ratchet::model::initial_state_zero_momentum;
use floquet_ratchet::observables::{
    current, momentum_cutoff, norm_squared, period_averages, time_averaged_current, trapezoid,
    MIN_AVERAGING_PERIODS,
};
use floquet_ratchet::propagation::propagate;
use floquet_ratchet::{DriveParams, Error, MomentumState, PropagatorConfig, TimeSeries, C64};

fn series(times: Vec<f64>, current: Vec<f64>, period: f64, spp: usize) -> TimeSeries {
    TimeSeries {
        log_norm: vec![0.0; times.len()],
        times,
        current,
        populations: None,
        momenta: vec![],
        period,
        samples_per_period: spp,
        max_boundary_population: 0.0,
        truncation_safe: true,
    }
}

#[test]
fn current_examples() {
    assert_eq!(current(&MomentumState::basis(4, 0).unwrap()).unwrap(), 0.0);
    assert_eq!(
        current(&MomentumState::basis(4, -2).unwrap()).unwrap(),
        -2.0
    );
    let mut s = MomentumState::basis(4, 0).unwrap();
    s.amplitudes[4] = C64::new(0.0, 0.0);
    s.amplitudes[3] = C64::new(0.5, 0.1);
    s.amplitudes[5] = C64::new(-0.1, 0.5);
    assert!(current(&s).unwrap().abs() < 1e-15);
    let zero = MomentumState::from_amplitudes(1, vec![C64::new(0.0, 0.0); 3]).unwrap();
    assert_eq!(current(&zero), Err(Error::ZeroNorm));
}

#[test]
fn norm_includes_renormalized_part() {
    let mut s = MomentumState::basis(3, 1).unwrap();
    s.amplitudes.iter_mut().for_each(|c| *c *= 3.0);
    assert!((norm_squared(&s) - 9.0).abs() < 1e-14);
    s.renormalize().unwrap();
    assert!((norm_squared(&s) - 9.0).abs() < 1e-12);
}

#[test]
fn ep_norm_at_late_time() {
    let k = 0.01;
    let p = DriveParams::new(k, 1.0, 0.5).unwrap();
    let z = initial_state_zero_momentum(6).unwrap();
    let s = propagate(&z, &p, 0.0, 2000.0, &PropagatorConfig::default()).unwrap();
    assert!((norm_squared(&s) / 101.0 - 1.0).abs() < 0.02);
    assert_eq!(momentum_cutoff(&s, 1e-4).unwrap(), -1);
}

#[test]
fn cutoff_grows_with_resonant_frequency() {
    let z = initial_state_zero_momentum(30).unwrap();
    let cuts: Vec<i64> = [0.5, 1.0, 1.5, 2.0]
        .iter()
        .map(|&w| {
            let p = DriveParams::new(0.1, 1.0, w).unwrap();
            let s = propagate(&z, &p, 0.0, 2000.0, &PropagatorConfig::default()).unwrap();
            momentum_cutoff(&s, 1e-4).unwrap()
        })
        .collect();
    assert!(
        cuts.windows(2).all(|c| c[1].abs() >= c[0].abs()),
        "{cuts:?}"
    );
    assert!(cuts[3] < cuts[0]);
    assert_eq!(momentum_cutoff(&z, 1e-4).unwrap(), 0);
}

#[test]
fn trapezoid_is_exact_for_lines() {
    let t: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
    let y: Vec<f64> = t.iter().map(|x| 2.0 * x - 1.0).collect();
    let exact = 3.0f64.powi(2) - 3.0;
    assert!((trapezoid(&t, &y) - exact).abs() < 1e-12);
}

#[test]
fn period_averages_remove_micromotion() {
    let spp = 16;
    let times: Vec<f64> = (0..=spp * 30).map(|i| i as f64 / spp as f64).collect();
    let cur: Vec<f64> = times
        .iter()
        .map(|t| 1.5 + (2.0 * std::f64::consts::PI * t).cos())
        .collect();
    let (ends, avgs) = period_averages(&series(times, cur, 1.0, spp));
    assert_eq!(ends.len(), 30);
    assert!(avgs.iter().all(|a| (a - 1.5).abs() < 1e-12));
}

#[test]
fn tac_statistics() {
    let spp = 8;
    let n = MIN_AVERAGING_PERIODS * 5;
    let times: Vec<f64> = (0..=spp * n).map(|i| i as f64 / spp as f64).collect();

    let ramp: Vec<f64> = times.iter().map(|t| -t / 10.0).collect();
    let st = time_averaged_current(&series(times.clone(), ramp, 1.0, spp), 0.0).unwrap();
    assert!((st.tac + n as f64 / 20.0).abs() < 1e-9);
    assert!(!st.plateau_detected && st.asymptotic.is_none());
    assert!(!st.converged);

    let flat: Vec<f64> = times.iter().map(|t| -2.0 + 0.3 * (-t).exp()).collect();
    let st = time_averaged_current(&series(times.clone(), flat, 1.0, spp), 10.0).unwrap();
    assert!(st.plateau_detected);
    assert!((st.asymptotic.unwrap() + 2.0).abs() < 1e-6);
    assert!(st.converged);

    let zero = vec![0.0; times.len()];
    let st = time_averaged_current(&series(times.clone(), zero, 1.0, spp), 0.0).unwrap();
    assert_eq!(st.tac, 0.0);

    let short = time_averaged_current(
        &series(times, vec![1.0; spp * n + 1], 1.0, spp),
        (n - 10) as f64,
    );
    assert!(matches!(short, Err(Error::TooShort { .. })));
}
