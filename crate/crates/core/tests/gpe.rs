use floquet_ratchet::gpe::{gpe_evolve, grid_to_momentum, momentum_to_grid, GridState};
use floquet_ratchet::model::initial_state_zero_momentum;
use floquet_ratchet::propagation::evolve_observables_only;
use floquet_ratchet::{DriveParams, MomentumState, PropagatorConfig, Scheme, C64};
use std::f64::consts::PI;

fn zero_state(n: usize) -> GridState {
    GridState::new(vec![C64::new(1.0 / (2.0 * PI).sqrt(), 0.0); n]).unwrap()
}

fn lcg_state(m: usize, seed: u64) -> MomentumState {
    let mut x = seed;
    let mut next = || {
        x = x
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let amps = (0..2 * m + 1).map(|_| C64::new(next(), next())).collect();
    MomentumState::from_amplitudes(m, amps).unwrap()
}

#[test]
fn transform_examples() {
    let c = grid_to_momentum(&zero_state(32), 4).unwrap();
    for (i, a) in c.amplitudes.iter().enumerate() {
        let want = if i == 4 { 1.0 } else { 0.0 };
        assert!((a - C64::new(want, 0.0)).norm() < 1e-14);
    }
    let g = GridState::new(
        (0..32)
            .map(|j| C64::from_polar(1.0 / (2.0 * PI).sqrt(), 2.0 * PI * j as f64 / 32.0))
            .collect(),
    )
    .unwrap();
    let c = grid_to_momentum(&g, 4).unwrap();
    for (i, a) in c.amplitudes.iter().enumerate() {
        let want = if i == 5 { 1.0 } else { 0.0 };
        assert!((a - C64::new(want, 0.0)).norm() < 1e-14);
    }
}

#[test]
fn band_limited_round_trip() {
    for (seed, m, n) in [(1, 10, 32), (2, 60, 128), (3, 127, 256)] {
        let s = lcg_state(m, seed);
        let back = grid_to_momentum(&momentum_to_grid(&s, n).unwrap(), m).unwrap();
        for (a, b) in s.amplitudes.iter().zip(&back.amplitudes) {
            assert!((a - b).norm() < 1e-12);
        }
        // Parseval with the chosen normalization.
        let g = momentum_to_grid(&s, n).unwrap();
        assert!((g.norm_squared() / s.stored_norm_squared() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn transform_size_errors() {
    let s = lcg_state(16, 4);
    assert!(momentum_to_grid(&s, 32).is_err());
    assert!(momentum_to_grid(&s, 48).is_err());
    assert!(grid_to_momentum(&zero_state(32), 16).is_err());
    assert!(GridState::new(vec![C64::new(0.0, 0.0); 2]).is_err());
}

#[test]
fn linear_limit_matches_momentum_ladder() {
    let p = DriveParams::new(0.1, 0.5, 1.0).unwrap();
    let t_max = 10.0 * p.period();
    let gp = gpe_evolve(&zero_state(128), &p, t_max, p.period() / 4096.0, 16).unwrap();
    let cfg = PropagatorConfig {
        steps_per_period: 1024,
        scheme: Scheme::CommutatorFree4,
        ..Default::default()
    };
    let ladder = evolve_observables_only(
        &initial_state_zero_momentum(40).unwrap(),
        &p,
        t_max,
        16,
        &cfg,
    )
    .unwrap();
    assert_eq!(gp.len(), ladder.len());
    for i in 0..gp.len() {
        assert!((gp.times[i] - ladder.times[i]).abs() < 1e-9);
        assert!(
            (gp.current[i] - ladder.current[i]).abs() < 1e-6,
            "t = {}",
            gp.times[i]
        );
        assert!((gp.log_norm[i] - ladder.log_norm[i]).abs() < 1e-6);
    }
}

#[test]
fn hermitian_runs_conserve_norm() {
    for g in [0.0, 0.3, -0.2] {
        let p = DriveParams::new(0.5, 0.0, 1.0).unwrap().with_g(g);
        let ts = gpe_evolve(
            &zero_state(128),
            &p,
            100.0 * p.period(),
            p.period() / 512.0,
            1,
        )
        .unwrap();
        assert!(ts.log_norm.iter().all(|l| l.abs() < 1e-8), "g = {g}");
    }
}

#[test]
fn weak_interaction_keeps_resonant_oscillation() {
    // Self-trapping: stronger interaction shrinks the current swing.
    let swing = |g: f64| {
        let p = DriveParams::new(0.1, 1.0, 1.0).unwrap().with_g(g);
        let ts = gpe_evolve(&zero_state(64), &p, 1000.0, p.period() / 512.0, 4).unwrap();
        let (lo, hi) = ts
            .current
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &c| (a.min(c), b.max(c)));
        hi - lo
    };
    let (weak, strong) = (swing(0.01), swing(0.2));
    assert!(weak > 1.0 && strong < 0.5 * weak, "{weak} {strong}");
}

#[test]
fn step_must_resolve_period() {
    let p = DriveParams::new(0.1, 0.5, 1.0).unwrap();
    assert!(gpe_evolve(&zero_state(32), &p, 10.0, p.period() / 100.0, 4).is_err());
    assert!(gpe_evolve(&zero_state(32), &p, 10.0, p.period() / 256.0, 4).is_ok());
}
