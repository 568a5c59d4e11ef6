use floquet_ratchet::{DriveParams, PropagatorConfig};
use ratchet_cli::output::write_records;
use ratchet_cli::{
    evaluate, record_key, resolve_workers, run_sweep, Duration, Job, ResultKind, WORKERS_ENV,
};

fn csv_bytes(records: &[ratchet_cli::ScanRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_records(&mut buf, records).unwrap();
    buf
}

fn tac_job(modes: usize, periods: f64) -> Job {
    Job::Tac {
        truncation: modes,
        duration: Duration::Periods(periods),
        samples_per_period: 8,
        transient: 0.0,
    }
}

/// Ordinary least squares, coded separately from the library fit.
fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

#[test]
fn single_point_sweep_equals_direct_evaluation() {
    floquet_ratchet::use_sequential_kernels();
    let cfg = PropagatorConfig::default();
    let p = DriveParams::new(0.5, 0.3, 1.5).unwrap();
    for job in [tac_job(10, 40.0), Job::Xi { truncation: 10 }] {
        let direct = evaluate(&job, &p, &cfg).unwrap();
        let rec = run_sweep(&[p], &job, &cfg, 3).remove(0);
        assert_eq!(rec.value.to_bits(), direct.value.to_bits());
        assert_eq!(rec.converged, direct.converged);
        assert_eq!(rec.diagnostics, direct.diagnostics);
        assert_eq!(rec.key, record_key(&p, job.kind()));
        assert!(rec.error.is_none());
    }
}

#[test]
fn worker_count_does_not_change_output() {
    floquet_ratchet::use_sequential_kernels();
    let cfg = PropagatorConfig::default();
    let points: Vec<DriveParams> = (0..12)
        .map(|i| DriveParams::new(0.3, 0.05 * i as f64, 0.5 + 0.25 * i as f64).unwrap())
        .collect();
    let job = tac_job(12, 30.0);
    let one = run_sweep(&points, &job, &cfg, 1);
    let eight = run_sweep(&points, &job, &cfg, 8);
    assert_eq!(csv_bytes(&one), csv_bytes(&eight));
    assert_eq!(
        csv_bytes(&one),
        csv_bytes(&run_sweep(&points, &job, &cfg, 1))
    );
    assert!(one
        .iter()
        .enumerate()
        .all(|(i, r)| r.index == i && r.params == points[i]));
}

#[test]
fn failing_points_are_recorded_not_fatal() {
    let cfg = PropagatorConfig::default();
    let good = DriveParams::new(0.2, 0.0, 1.0).unwrap();
    // Too few periods for a time average.
    let job = Job::Tac {
        truncation: 6,
        duration: Duration::Time(200.0),
        samples_per_period: 8,
        transient: 0.0,
    };
    let short = DriveParams::new(0.2, 0.0, 0.1).unwrap();
    let recs = run_sweep(&[good, short, good], &job, &cfg, 2);
    assert_eq!(recs.len(), 3);
    assert!(recs[0].error.is_none() && recs[2].error.is_none());
    assert_eq!(recs[0].value.to_bits(), recs[2].value.to_bits());
    assert_eq!(recs[0].key, recs[2].key);
    assert!(recs[1].value.is_nan() && !recs[1].converged);
    assert!(
        recs[1].error.as_deref().unwrap().contains("period"),
        "{:?}",
        recs[1].error
    );
}

#[test]
fn broken_phase_current_grows_linearly_with_frequency() {
    floquet_ratchet::use_sequential_kernels();
    let cfg = PropagatorConfig::default();
    let omegas = [3.0, 4.0, 5.0, 6.0, 7.0];
    let points: Vec<DriveParams> = omegas
        .iter()
        .map(|&w| DriveParams::new(1.0, 1.5, w).unwrap())
        .collect();
    let job = Job::AsymptoticCurrent {
        truncation: 40,
        duration: Duration::Periods(200.0),
        samples_per_period: 8,
    };
    let recs = run_sweep(&points, &job, &cfg, 4);
    assert!(recs
        .iter()
        .all(|r| r.result_kind == ResultKind::AsymptoticCurrent && r.converged));
    let values: Vec<f64> = recs.iter().map(|r| r.value).collect();
    assert!(values[0] > values[2] && values[2] > values[4], "{values:?}");
    assert!(values.iter().all(|&v| v < 0.0));
    let magnitudes: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let r2 = r_squared(&omegas, &magnitudes);
    assert!(r2 > 0.95, "R^2 = {r2}");
    // The plateau is carried by the dominant Floquet state.
    for r in &recs {
        let dominant = r.diagnostics["dominant_mean_p"];
        assert!(
            (r.value - dominant).abs() < 0.05 * dominant.abs(),
            "{} vs {dominant}",
            r.value
        );
    }
}

#[test]
fn worker_resolution_order() {
    std::env::set_var(WORKERS_ENV, "3");
    assert_eq!(resolve_workers(None), 3);
    assert_eq!(resolve_workers(Some(5)), 5);
    std::env::set_var(WORKERS_ENV, "zero");
    let fallback = std::thread::available_parallelism().map_or(1, |n| n.get());
    assert_eq!(resolve_workers(None), fallback);
    std::env::remove_var(WORKERS_ENV);
    assert_eq!(resolve_workers(None), fallback);
    assert_eq!(resolve_workers(Some(0)), fallback);
}
