//! Time-ordered propagation on the momentum ladder and the one-period
//! Floquet operator.
//!
//! Each step applies exact exponentials of the tridiagonal generator
//! `-iτ(D + σB)`, where `D = diag(n²/2)` and `B` carries the hopping
//! amplitudes; only the drive value `σ` differs between schemes.

use faer::{Col, Mat};

use crate::banded::{expm_banded, BandMatrix};
use crate::error::{Error, Result};
use crate::model::{boundary_fraction, check_truncation, DriveParams, MomentumState};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// `exp(-i h H(t + h/2))` per step; second order.
    MidpointExponential,
    /// Two-exponential commutator-free scheme with Gauss nodes; fourth order.
    CommutatorFree4,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::MidpointExponential => 2,
            Scheme::CommutatorFree4 => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorConfig {
    pub steps_per_period: usize,
    pub scheme: Scheme,
    pub renormalize_each_step: bool,
    /// Asks callers that support it to also report a step-doubling delta.
    pub convergence_check: bool,
    /// Boundary-guard limit on the population fraction in `|n| ∈ {M-1, M}`.
    pub boundary_tolerance: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            steps_per_period: 256,
            scheme: Scheme::MidpointExponential,
            renormalize_each_step: false,
            convergence_check: false,
            boundary_tolerance: 1e-8,
        }
    }
}

impl PropagatorConfig {
    /// Defaults for runs whose norm grows exponentially.
    pub fn broken_phase() -> Self {
        Self {
            renormalize_each_step: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_period < 8 {
            return Err(Error::InvalidParameter(format!(
                "steps_per_period must be >= 8 (got {})",
                self.steps_per_period
            )));
        }
        if !(self.boundary_tolerance > 0.0) {
            return Err(Error::InvalidParameter(
                "boundary_tolerance must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Sampled observables of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub current: Vec<f64>,
    /// `ln N(t)` accumulated across renormalizations.
    pub log_norm: Vec<f64>,
    /// Normalized populations per sample, columns labelled by `momenta`.
    pub populations: Option<Vec<Vec<f64>>>,
    pub momenta: Vec<i64>,
    pub period: f64,
    pub samples_per_period: usize,
    pub max_boundary_population: f64,
    pub truncation_safe: bool,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn norm_squared(&self) -> Vec<f64> {
        self.log_norm.iter().map(|l| l.exp()).collect()
    }

    /// Population of momentum `n` over time, if recorded.
    pub fn population_of(&self, n: i64) -> Option<Vec<f64>> {
        let col = self.momenta.iter().position(|&m| m == n)?;
        let pops = self.populations.as_ref()?;
        Some(pops.iter().map(|row| row[col]).collect())
    }
}

struct Generator {
    half_n2: Vec<f64>,
    a_plus: f64,
    a_minus: f64,
}

impl Generator {
    fn new(params: &DriveParams, truncation: usize) -> Self {
        let m = truncation as i64;
        let (a_plus, a_minus) = params.hopping();
        Self {
            half_n2: (-m..=m).map(|n| 0.5 * (n * n) as f64).collect(),
            a_plus,
            a_minus,
        }
    }

    /// `exp(-iτ(D + σB))`.
    fn exponential(&self, tau: f64, sigma: f64) -> BandMatrix {
        let d = self.half_n2.len();
        let diag: Vec<C64> = self
            .half_n2
            .iter()
            .map(|&e| C64::new(0.0, -tau * e))
            .collect();
        let up = vec![C64::new(tau * sigma * self.a_plus, 0.0); d.saturating_sub(1)];
        let lo = vec![C64::new(tau * sigma * self.a_minus, 0.0); d.saturating_sub(1)];
        expm_banded(&BandMatrix::tridiagonal(&diag, &up, &lo))
    }

    /// Step factors over `[t, t+h]` in application order.
    fn step(&self, params: &DriveParams, scheme: Scheme, t: f64, h: f64) -> Vec<BandMatrix> {
        match scheme {
            Scheme::MidpointExponential => vec![self.exponential(h, params.drive(t + 0.5 * h))],
            Scheme::CommutatorFree4 => {
                let r = 3f64.sqrt();
                let (a1, a2) = ((3.0 - 2.0 * r) / 12.0, (3.0 + 2.0 * r) / 12.0);
                let s1 = params.drive(t + (0.5 - r / 6.0) * h);
                let s2 = params.drive(t + (0.5 + r / 6.0) * h);
                vec![
                    self.exponential(0.5 * h, 2.0 * (a2 * s1 + a1 * s2)),
                    self.exponential(0.5 * h, 2.0 * (a1 * s1 + a2 * s2)),
                ]
            }
        }
    }
}

fn step_count(params: &DriveParams, span: f64, steps_per_period: usize) -> usize {
    let x = span / params.period() * steps_per_period as f64;
    ((x - 1e-9).ceil() as usize).max(1)
}

/// Advances `state` from `t0` to `t1`; the step count is
/// `ceil((t1-t0)/T · steps_per_period)`.
pub fn propagate(
    state: &MomentumState,
    params: &DriveParams,
    t0: f64,
    t1: f64,
    cfg: &PropagatorConfig,
) -> Result<MomentumState> {
    cfg.validate()?;
    params.validate()?;
    if !(t1 > t0) {
        return Err(Error::InvalidParameter(format!(
            "need t1 > t0 (got {t0}, {t1})"
        )));
    }
    let gen = Generator::new(params, state.truncation);
    let steps = step_count(params, t1 - t0, cfg.steps_per_period);
    let h = (t1 - t0) / steps as f64;

    let mut out = state.clone();
    let mut scratch = vec![C64::new(0.0, 0.0); state.dim()];
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        for f in gen.step(params, cfg.scheme, t, h) {
            f.apply(&out.amplitudes, &mut scratch);
            std::mem::swap(&mut out.amplitudes, &mut scratch);
        }
        out.time = t + h;
        let n2 = out.stored_norm_squared();
        if !n2.is_finite() {
            return Err(Error::NonFinite { time: out.time });
        }
        if cfg.renormalize_each_step {
            out.renormalize()?;
        }
    }
    out.time = t1;
    Ok(out)
}

/// `U(t1, t0)` with an explicit step count.
pub fn interval_propagator(
    params: &DriveParams,
    truncation: usize,
    t0: f64,
    t1: f64,
    steps: usize,
    scheme: Scheme,
) -> Result<Mat<C64>> {
    params.validate()?;
    check_truncation(truncation)?;
    if !(t1 > t0) || steps == 0 {
        return Err(Error::InvalidParameter(
            "need t1 > t0 and steps >= 1".into(),
        ));
    }
    let gen = Generator::new(params, truncation);
    let d = 2 * truncation + 1;
    let h = (t1 - t0) / steps as f64;
    let mut u = Mat::<C64>::identity(d, d);
    for k in 0..steps {
        for f in gen.step(params, scheme, t0 + k as f64 * h, h) {
            f.apply_to_columns(&mut u);
        }
    }
    ensure_finite(&u, t1)?;
    Ok(u)
}

fn ensure_finite(u: &Mat<C64>, time: f64) -> Result<()> {
    let ok = (0..u.ncols()).all(|j| (0..u.nrows()).all(|i| u[(i, j)].is_finite()));
    if ok {
        Ok(())
    } else {
        Err(Error::NonFinite { time })
    }
}

/// Floquet operator `U(T, 0)`.
///
/// `H(t + T/2) = P H(t) P` with `P = diag((-1)^n)`, so for an even step
/// count `U(T, 0) = (P U(T/2, 0))²` holds exactly for the discretized
/// scheme as well.
pub fn one_period_propagator(
    params: &DriveParams,
    truncation: usize,
    cfg: &PropagatorConfig,
) -> Result<Mat<C64>> {
    cfg.validate()?;
    let period = params.period();
    let steps = cfg.steps_per_period;
    if steps % 2 == 1 {
        return interval_propagator(params, truncation, 0.0, period, steps, cfg.scheme);
    }
    let mut half =
        interval_propagator(params, truncation, 0.0, 0.5 * period, steps / 2, cfg.scheme)?;
    for i in (0..half.nrows()).filter(|i| (i + truncation) % 2 == 1) {
        for j in 0..half.ncols() {
            half[(i, j)] = -half[(i, j)];
        }
    }
    let u = &half * &half;
    ensure_finite(&u, period)?;
    Ok(u)
}

/// Max entry change of `U(T,0)` when `steps_per_period` is doubled.
pub fn refinement_delta(
    params: &DriveParams,
    truncation: usize,
    cfg: &PropagatorConfig,
) -> Result<f64> {
    let a = one_period_propagator(params, truncation, cfg)?;
    let fine = PropagatorConfig {
        steps_per_period: 2 * cfg.steps_per_period,
        ..*cfg
    };
    let b = one_period_propagator(params, truncation, &fine)?;
    Ok(max_abs_diff(&a, &b))
}

pub(crate) fn max_abs_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// Runs from `state0` to `t_max`, sampling `samples_per_period` times per
/// drive period, and records normalized populations.
pub fn evolve_with_observables(
    state0: &MomentumState,
    params: &DriveParams,
    t_max: f64,
    samples_per_period: usize,
    cfg: &PropagatorConfig,
) -> Result<TimeSeries> {
    evolve(state0, params, t_max, samples_per_period, cfg, true)
}

/// As [`evolve_with_observables`] without the population matrix.
pub fn evolve_observables_only(
    state0: &MomentumState,
    params: &DriveParams,
    t_max: f64,
    samples_per_period: usize,
    cfg: &PropagatorConfig,
) -> Result<TimeSeries> {
    evolve(state0, params, t_max, samples_per_period, cfg, false)
}

fn evolve(
    state0: &MomentumState,
    params: &DriveParams,
    t_max: f64,
    samples_per_period: usize,
    cfg: &PropagatorConfig,
    record_populations: bool,
) -> Result<TimeSeries> {
    cfg.validate()?;
    params.validate()?;
    if !(t_max > 0.0) || samples_per_period == 0 {
        return Err(Error::InvalidParameter(
            "need t_max > 0 and samples_per_period >= 1".into(),
        ));
    }
    let m = state0.truncation;
    let period = params.period();
    let s = samples_per_period;
    let dt = period / s as f64;
    let t0 = state0.time;
    let n_samples = ((t_max - t0) / dt + 1e-9).floor().max(0.0) as usize;
    let steps_per_sample = cfg.steps_per_period.div_ceil(s).max(1);

    // Cumulative sub-period propagators U(t0 + j dt, t0), j = 1..=s.
    let mut cumulative: Vec<Mat<C64>> = Vec::with_capacity(s);
    for j in 0..s {
        let w = interval_propagator(
            params,
            m,
            t0 + j as f64 * dt,
            t0 + (j + 1) as f64 * dt,
            steps_per_sample,
            cfg.scheme,
        )?;
        cumulative.push(match cumulative.last() {
            Some(prev) => &w * prev,
            None => w,
        });
    }

    let momenta: Vec<i64> = (-(m as i64)..=m as i64).collect();
    let mut rec = Recorder::new(momenta, period, s, record_populations, n_samples + 1);
    let mut psi = Col::<C64>::from_fn(state0.dim(), |i| state0.amplitudes[i]);
    let mut offset = state0.log_norm_offset;
    rec.push(t0, psi.as_ref(), offset)?;

    for k in 1..=n_samples {
        let j = (k - 1) % s;
        let t = t0 + k as f64 * dt;
        let phi = &cumulative[j] * &psi;
        rec.push(t, phi.as_ref(), offset)?;
        if j + 1 == s {
            psi = phi;
            if cfg.renormalize_each_step {
                let n2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
                if n2 == 0.0 {
                    return Err(Error::ZeroNorm);
                }
                psi *= faer::Scale(C64::new(1.0 / n2.sqrt(), 0.0));
                offset += n2.ln();
            }
        }
    }
    let series = rec.finish(cfg.boundary_tolerance);
    if !series.truncation_safe {
        log::warn!(
            "boundary population reached {:.3e} (tolerance {:.1e}); increase M",
            series.max_boundary_population,
            cfg.boundary_tolerance
        );
    }
    Ok(series)
}

pub(crate) struct Recorder {
    series: TimeSeries,
    truncation: usize,
}

impl Recorder {
    pub(crate) fn new(
        momenta: Vec<i64>,
        period: f64,
        samples_per_period: usize,
        record_populations: bool,
        capacity: usize,
    ) -> Self {
        let truncation = momenta
            .iter()
            .map(|n| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        Self {
            series: TimeSeries {
                times: Vec::with_capacity(capacity),
                current: Vec::with_capacity(capacity),
                log_norm: Vec::with_capacity(capacity),
                populations: record_populations.then(|| Vec::with_capacity(capacity)),
                momenta,
                period,
                samples_per_period,
                max_boundary_population: 0.0,
                truncation_safe: true,
            },
            truncation,
        }
    }

    /// Amplitudes must be ordered like `momenta`.
    pub(crate) fn push(
        &mut self,
        t: f64,
        amps: faer::ColRef<'_, C64>,
        log_offset: f64,
    ) -> Result<()> {
        let mut total = 0.0;
        let mut first = 0.0;
        for (i, c) in amps.iter().enumerate() {
            let p = c.norm_sqr();
            total += p;
            first += self.series.momenta[i] as f64 * p;
        }
        if !total.is_finite() {
            return Err(Error::NonFinite { time: t });
        }
        if total == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let s = &mut self.series;
        s.times.push(t);
        s.current.push(first / total);
        s.log_norm.push(total.ln() + log_offset);
        if let Some(pops) = s.populations.as_mut() {
            pops.push(amps.iter().map(|c| c.norm_sqr() / total).collect());
        }
        if self.truncation >= 1 && amps.nrows() == 2 * self.truncation + 1 {
            let v: Vec<C64> = amps.iter().copied().collect();
            let b = boundary_fraction(&v, self.truncation);
            s.max_boundary_population = s.max_boundary_population.max(b);
        }
        Ok(())
    }

    pub(crate) fn finish(mut self, tolerance: f64) -> TimeSeries {
        self.series.truncation_safe = self.series.max_boundary_population < tolerance;
        self.series
    }
}
