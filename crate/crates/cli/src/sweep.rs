//! Deterministic parallel evaluation of one experiment over many drive points.

use std::collections::BTreeMap;

use floquet_ratchet::floquet::{
    dominant_eigenvector, floquet_spectrum, pt_threshold, separation_threshold_omega_c, xi_for,
    OmegaSearch, ThresholdSearch,
};
use floquet_ratchet::model::initial_state_zero_momentum;
use floquet_ratchet::observables::{
    mean_momentum, momentum_cutoff, norm_squared, time_averaged_current,
};
use floquet_ratchet::propagation::{evolve_observables_only, one_period_propagator, propagate};
use floquet_ratchet::{DriveParams, PropagatorConfig, Result};
use rayon::prelude::*;

use crate::record::{record_key, ResultKind, ScanRecord};

/// Environment variable that sets the default worker count.
pub const WORKERS_ENV: &str = "FLOQUET_RATCHET_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Duration {
    Periods(f64),
    Time(f64),
}

impl Duration {
    pub fn t_max(self, period: f64) -> f64 {
        match self {
            Duration::Periods(n) => n * period,
            Duration::Time(t) => t,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Job {
    Tac {
        truncation: usize,
        duration: Duration,
        samples_per_period: usize,
        transient: f64,
    },
    /// Broken-phase plateau of the current, with per-period renormalization.
    AsymptoticCurrent {
        truncation: usize,
        duration: Duration,
        samples_per_period: usize,
    },
    Xi {
        truncation: usize,
    },
    LambdaC {
        search: ThresholdSearch,
    },
    /// Uses `k` and `lambda` of each point; its `omega` is ignored.
    OmegaC {
        search: OmegaSearch,
    },
    Cutoff {
        truncation: usize,
        t_max: f64,
        frac: f64,
    },
}

impl Job {
    pub fn kind(&self) -> ResultKind {
        match self {
            Job::Tac { .. } => ResultKind::Tac,
            Job::AsymptoticCurrent { .. } => ResultKind::AsymptoticCurrent,
            Job::Xi { .. } => ResultKind::Xi,
            Job::LambdaC { .. } => ResultKind::LambdaC,
            Job::OmegaC { .. } => ResultKind::OmegaC,
            Job::Cutoff { .. } => ResultKind::Cutoff,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub value: f64,
    pub converged: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Runs `job` at a single drive point.
pub fn evaluate(job: &Job, params: &DriveParams, cfg: &PropagatorConfig) -> Result<PointResult> {
    let mut diagnostics = BTreeMap::new();
    let (value, converged) = match *job {
        Job::Tac {
            truncation,
            duration,
            samples_per_period,
            transient,
        } => {
            let z = initial_state_zero_momentum(truncation)?;
            let ts = evolve_observables_only(
                &z,
                params,
                duration.t_max(params.period()),
                samples_per_period,
                cfg,
            )?;
            let st = time_averaged_current(&ts, transient)?;
            diagnostics.insert("late_mean".into(), st.late_mean);
            diagnostics.insert("half_window_delta".into(), st.half_window_delta);
            diagnostics.insert("plateau".into(), flag(st.plateau_detected));
            diagnostics.insert("max_boundary_population".into(), ts.max_boundary_population);
            (st.tac, st.converged && ts.truncation_safe)
        }
        Job::AsymptoticCurrent {
            truncation,
            duration,
            samples_per_period,
        } => {
            let cfg = PropagatorConfig {
                renormalize_each_step: true,
                ..*cfg
            };
            let z = initial_state_zero_momentum(truncation)?;
            let ts = evolve_observables_only(
                &z,
                params,
                duration.t_max(params.period()),
                samples_per_period,
                &cfg,
            )?;
            let st = time_averaged_current(&ts, 0.0)?;
            let u = one_period_propagator(params, truncation, &cfg)?;
            let spec = floquet_spectrum(&u, params.omega)?;
            let dominant = mean_momentum(&dominant_eigenvector(&u, &spec)?)?;
            diagnostics.insert("dominant_mean_p".into(), dominant);
            diagnostics.insert("tac".into(), st.tac);
            diagnostics.insert("max_boundary_population".into(), ts.max_boundary_population);
            (
                st.asymptotic.unwrap_or(st.late_mean),
                st.plateau_detected && ts.truncation_safe,
            )
        }
        Job::Xi { truncation } => (xi_for(params, truncation, cfg)?, true),
        Job::LambdaC { search } => (pt_threshold(params, &search, cfg)?, true),
        Job::OmegaC { search } => (
            separation_threshold_omega_c(params.k, params.lambda, &search, cfg)?,
            true,
        ),
        Job::Cutoff {
            truncation,
            t_max,
            frac,
        } => {
            let z = initial_state_zero_momentum(truncation)?;
            let s = propagate(&z, params, 0.0, t_max, cfg)?;
            diagnostics.insert("norm_squared".into(), norm_squared(&s));
            let cut = momentum_cutoff(&s, frac)?;
            (cut as f64, (cut.unsigned_abs() as usize) < truncation)
        }
    };
    Ok(PointResult {
        value,
        converged,
        diagnostics,
    })
}

/// Worker count: an explicit request wins, then `FLOQUET_RATCHET_WORKERS`,
/// then the available parallelism.
pub fn resolve_workers(requested: Option<usize>) -> usize {
    requested
        .or_else(|| std::env::var(WORKERS_ENV).ok()?.trim().parse().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Evaluates every point on a dedicated pool of `workers` threads. Records
/// come back in input order whatever the scheduling, and a failing point is
/// recorded rather than aborting the sweep.
pub fn run_sweep(
    points: &[DriveParams],
    job: &Job,
    cfg: &PropagatorConfig,
    workers: usize,
) -> Vec<ScanRecord> {
    let kind = job.kind();
    let one = |(index, p): (usize, &DriveParams)| {
        let (value, converged, diagnostics, error) = match evaluate(job, p, cfg) {
            Ok(r) => (r.value, r.converged, r.diagnostics, None),
            Err(e) => (f64::NAN, false, BTreeMap::new(), Some(e.to_string())),
        };
        ScanRecord {
            index,
            params: *p,
            key: record_key(p, kind),
            result_kind: kind,
            value,
            converged,
            diagnostics,
            error,
        }
    };
    match rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
    {
        Ok(pool) => pool.install(|| points.par_iter().enumerate().map(one).collect()),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); running sequentially");
            points.iter().enumerate().map(one).collect()
        }
    }
}
