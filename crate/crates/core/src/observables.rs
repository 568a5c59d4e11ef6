//! Currents, norms, time averages and momentum statistics.

use crate::error::{Error, Result};
use crate::model::MomentumState;
use crate::propagation::TimeSeries;
use crate::C64;

/// Minimum number of drive periods a time average must span.
pub const MIN_AVERAGING_PERIODS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurrentStats {
    /// Trapezoidal time average of `I(t)` over `[t_transient, t_max]`.
    pub tac: f64,
    /// Late-time plateau, present when one was detected.
    pub asymptotic: Option<f64>,
    pub plateau_detected: bool,
    /// Mean of the period-averaged current over the last 10% of the run.
    pub late_mean: f64,
    /// Relative difference of the two half-window averages.
    pub half_window_delta: f64,
    pub converged: bool,
}

/// `Σ n|c_n|² / Σ|c_n|²`.
pub fn current(state: &MomentumState) -> Result<f64> {
    mean_momentum(&state.amplitudes)
}

/// Physical `N = Σ|c_n|²`, including factors removed by renormalization.
pub fn norm_squared(state: &MomentumState) -> f64 {
    state.stored_norm_squared() * state.log_norm_offset.exp()
}

/// Mean momentum of a vector on the symmetric ladder of length `2M+1`.
pub fn mean_momentum(mode: &[C64]) -> Result<f64> {
    let m = (mode.len() as i64 - 1) / 2;
    let (mut w, mut total) = (0.0, 0.0);
    for (i, c) in mode.iter().enumerate() {
        let p = c.norm_sqr();
        total += p;
        w += (i as i64 - m) as f64 * p;
    }
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(w / total)
}

/// Most negative `n` with `|c_n|² ≥ frac · max_m |c_m|²`, clamped to `≤ 0`.
pub fn momentum_cutoff(state: &MomentumState, frac: f64) -> Result<i64> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "frac must lie in (0, 1), got {frac}"
        )));
    }
    let probs: Vec<f64> = state.amplitudes.iter().map(|c| c.norm_sqr()).collect();
    let peak = probs.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let first = probs
        .iter()
        .position(|&p| p >= frac * peak)
        .expect("peak itself qualifies");
    Ok(state.momentum(first).min(0))
}

pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Period-averaged current on consecutive full periods starting at the
/// first sample; returns `(window end times, averages)`.
pub fn period_averages(series: &TimeSeries) -> (Vec<f64>, Vec<f64>) {
    let s = series.samples_per_period.max(1);
    let mut ends = Vec::new();
    let mut avgs = Vec::new();
    let mut start = 0;
    while start + s < series.len() {
        let end = start + s;
        let t = &series.times[start..=end];
        avgs.push(trapezoid(t, &series.current[start..=end]) / (t[s] - t[0]));
        ends.push(t[s]);
        start = end;
    }
    (ends, avgs)
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Time-averaged current with plateau detection.
///
/// The plateau test looks at the last 10% of the period-averaged current
/// (micromotion within a period is not a plateau violation) and requires a
/// standard deviation below `max(1% of |mean|, 1e-4)`.
pub fn time_averaged_current(series: &TimeSeries, t_transient: f64) -> Result<CurrentStats> {
    let t_end = *series.times.last().ok_or(Error::TooShort {
        periods: 0.0,
        required: MIN_AVERAGING_PERIODS,
    })?;
    let periods = (t_end - t_transient) / series.period;
    if !(periods >= MIN_AVERAGING_PERIODS as f64 - 1e-9) {
        return Err(Error::TooShort {
            periods: periods.max(0.0),
            required: MIN_AVERAGING_PERIODS,
        });
    }
    let first = series.times.partition_point(|&t| t < t_transient - 1e-12);
    let (t, i) = (&series.times[first..], &series.current[first..]);
    let span = t[t.len() - 1] - t[0];
    let tac = trapezoid(t, i) / span;

    let mid = t.len() / 2;
    let a1 = trapezoid(&t[..=mid], &i[..=mid]) / (t[mid] - t[0]);
    let a2 = trapezoid(&t[mid..], &i[mid..]) / (t[t.len() - 1] - t[mid]);
    let scale = a1.abs().max(a2.abs());
    let half_window_delta = if scale < 1e-10 {
        0.0
    } else {
        (a1 - a2).abs() / scale
    };

    let (ends, avgs) = period_averages(series);
    let keep: Vec<f64> = ends
        .iter()
        .zip(&avgs)
        .filter(|(&e, _)| e > t_transient)
        .map(|(_, &a)| a)
        .collect();
    let tail_len = (keep.len() / 10).max(2).min(keep.len());
    let tail = &keep[keep.len() - tail_len..];
    let (late_mean, late_std) = mean_std(tail);
    let plateau_detected = late_std < (0.01 * late_mean.abs()).max(1e-4);

    Ok(CurrentStats {
        tac,
        asymptotic: plateau_detected.then_some(late_mean),
        plateau_detected,
        late_mean,
        half_window_delta,
        converged: half_window_delta < 0.02,
    })
}

/// Least-squares line `y = a x + b`; returns `(a, b, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, my - slope * mx, r2)
}
