//! Split-step Fourier solver for
//! `i∂ψ/∂t = [p²/2 + g|ψ|² + V(x,t)]ψ` on the periodic grid `x_j = 2πj/N`.
//!
//! Grid values and momentum amplitudes are related by
//! `ψ(x_j) = Σ_n c_n e^{inx_j} / √(2π)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{DriveParams, MomentumState};
use crate::propagation::{Recorder, TimeSeries};
use crate::C64;

pub const DEFAULT_GRID_SIZE: usize = 256;
/// Default time step is `T / DEFAULT_STEPS_PER_PERIOD`.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    pub values: Vec<C64>,
    pub grid_size: usize,
    pub time: f64,
}

impl GridState {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        let n = values.len();
        check_grid_size(n)?;
        Ok(Self {
            values,
            grid_size: n,
            time: 0.0,
        })
    }

    pub fn x(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.grid_size as f64
    }

    /// `∫|ψ|² dx` by the (spectrally exact) rectangle rule.
    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum::<f64>() * 2.0 * PI / self.grid_size as f64
    }
}

fn check_grid_size(n: usize) -> Result<()> {
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "grid size must be a power of two >= 4 (got {n})"
        )));
    }
    Ok(())
}

/// FFT index of momentum `n` (requires `|n| < N/2`).
fn slot(n: i64, size: usize) -> usize {
    n.rem_euclid(size as i64) as usize
}

pub fn momentum_to_grid(state: &MomentumState, grid_size: usize) -> Result<GridState> {
    check_grid_size(grid_size)?;
    if 2 * state.truncation + 1 > grid_size - 1 {
        return Err(Error::SizeMismatch {
            expected: grid_size - 1,
            got: state.dim(),
        });
    }
    let mut buf = vec![C64::new(0.0, 0.0); grid_size];
    for (i, c) in state.amplitudes.iter().enumerate() {
        buf[slot(state.momentum(i), grid_size)] = *c;
    }
    FftPlanner::new()
        .plan_fft_inverse(grid_size)
        .process(&mut buf);
    let s = 1.0 / (2.0 * PI).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    Ok(GridState {
        values: buf,
        grid_size,
        time: state.time,
    })
}

/// Amplitudes for `|n| ≤ truncation`; requires `2·truncation + 1 < N`.
pub fn grid_to_momentum(grid: &GridState, truncation: usize) -> Result<MomentumState> {
    check_grid_size(grid.values.len())?;
    let size = grid.values.len();
    if 2 * truncation + 1 > size - 1 {
        return Err(Error::SizeMismatch {
            expected: size - 1,
            got: 2 * truncation + 1,
        });
    }
    let mut buf = grid.values.clone();
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);
    let s = (2.0 * PI).sqrt() / size as f64;
    let m = truncation as i64;
    let amps = (-m..=m).map(|n| buf[slot(n, size)] * s).collect();
    let mut out = MomentumState::from_amplitudes(truncation, amps)?;
    out.time = grid.time;
    Ok(out)
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        let forward = p.plan_fft_forward(n);
        let inverse = p.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![C64::new(0.0, 0.0); len],
        }
    }
}

/// Strang split-step evolution: half kinetic step in momentum space, full
/// step of `V(x, t_mid) + g|ψ|²` in position space, half kinetic step.
///
/// The step is shrunk if needed so that an integer number of steps fits
/// between samples. The nonlinear term uses the raw density; no
/// renormalization is applied.
pub fn gpe_evolve(
    state0: &GridState,
    params: &DriveParams,
    t_max: f64,
    dt: f64,
    samples_per_period: usize,
) -> Result<TimeSeries> {
    params.validate()?;
    let size = state0.values.len();
    check_grid_size(size)?;
    let period = params.period();
    if !(dt > 0.0 && dt <= period / 256.0 * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "dt must lie in (0, T/256] (got {dt}, T = {period})"
        )));
    }
    if samples_per_period == 0 || !(t_max > state0.time) {
        return Err(Error::InvalidParameter(
            "need samples_per_period >= 1 and t_max > start time".into(),
        ));
    }
    let sample_dt = period / samples_per_period as f64;
    let steps_per_sample = (sample_dt / dt - 1e-9).ceil().max(1.0) as usize;
    let h = sample_dt / steps_per_sample as f64;
    let t0 = state0.time;
    let n_samples = ((t_max - t0) / sample_dt + 1e-9).floor() as usize;

    let nyq = size as i64 / 2;
    let kinetic: Vec<C64> = (0..size)
        .map(|k| {
            let n = if (k as i64) < nyq {
                k as i64
            } else {
                k as i64 - size as i64
            };
            C64::from_polar(1.0, -0.25 * h * (n * n) as f64)
        })
        .collect();
    let (sin_x, cos_x): (Vec<f64>, Vec<f64>) = (0..size)
        .map(|j| {
            let x = 2.0 * PI * j as f64 / size as f64;
            (x.sin(), x.cos())
        })
        .unzip();

    let mut plans = Plans::new(size);
    let inv_n = 1.0 / size as f64;
    let mut spec = state0.values.clone();
    plans
        .forward
        .process_with_scratch(&mut spec, &mut plans.scratch);

    let keep = nyq - 1;
    let momenta: Vec<i64> = (-keep..=keep).collect();
    let amp_scale = (2.0 * PI).sqrt() * inv_n;
    let mut amps = faer::Col::<C64>::zeros(momenta.len());
    let mut rec = Recorder::new(
        momenta.clone(),
        period,
        samples_per_period,
        true,
        n_samples + 1,
    );
    let mut record = |rec: &mut Recorder, spec: &[C64], t: f64| -> Result<()> {
        for (i, &n) in momenta.iter().enumerate() {
            amps[i] = spec[slot(n, size)] * amp_scale;
        }
        rec.push(t, amps.as_ref(), 0.0)
    };
    record(&mut rec, &spec, t0)?;

    let mut buf = vec![C64::new(0.0, 0.0); size];
    for k in 1..=n_samples {
        for q in 0..steps_per_sample {
            let t = t0 + (k - 1) as f64 * sample_dt + q as f64 * h;
            let s = params.drive(t + 0.5 * h);
            for (v, ph) in spec.iter_mut().zip(&kinetic) {
                *v *= ph;
            }
            buf.copy_from_slice(&spec);
            plans
                .inverse
                .process_with_scratch(&mut buf, &mut plans.scratch);
            for j in 0..size {
                let psi = buf[j] * inv_n;
                let dens = psi.norm_sqr();
                let arg = C64::new(
                    h * params.k * params.lambda * s * cos_x[j],
                    -h * (params.k * s * sin_x[j] + params.g * dens),
                );
                buf[j] = psi * arg.exp();
            }
            plans
                .forward
                .process_with_scratch(&mut buf, &mut plans.scratch);
            for ((v, b), ph) in spec.iter_mut().zip(&buf).zip(&kinetic) {
                *v = b * ph;
            }
        }
        let t = t0 + k as f64 * sample_dt;
        if spec.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { time: t });
        }
        record(&mut rec, &spec, t)?;
    }
    Ok(rec.finish(1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_zero_momentum() {
        let n = 64;
        let v = vec![C64::new(1.0 / (2.0 * PI).sqrt(), 0.0); n];
        let m = grid_to_momentum(&GridState::new(v).unwrap(), 5).unwrap();
        for (i, c) in m.amplitudes.iter().enumerate() {
            let want = if i == 5 { 1.0 } else { 0.0 };
            assert!((c - C64::new(want, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn plane_wave_is_unit_momentum() {
        let n = 32;
        let v: Vec<C64> = (0..n)
            .map(|j| C64::from_polar(1.0 / (2.0 * PI).sqrt(), 2.0 * PI * j as f64 / n as f64))
            .collect();
        let m = grid_to_momentum(&GridState::new(v).unwrap(), 3).unwrap();
        assert!((m.amplitude(1) - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(m.amplitude(0).norm() < 1e-14);
    }

    #[test]
    fn size_checks() {
        assert!(GridState::new(vec![C64::new(0.0, 0.0); 48]).is_err());
        let g = GridState::new(vec![C64::new(0.0, 0.0); 16]).unwrap();
        assert!(matches!(
            grid_to_momentum(&g, 8),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(grid_to_momentum(&g, 7).is_ok());
    }

    #[test]
    fn norm_matches_momentum_norm() {
        let s = MomentumState::from_amplitudes(
            2,
            vec![
                C64::new(0.1, 0.2),
                C64::new(0.0, -0.5),
                C64::new(0.7, 0.0),
                C64::new(0.3, 0.3),
                C64::new(-0.2, 0.1),
            ],
        )
        .unwrap();
        let g = momentum_to_grid(&s, 16).unwrap();
        assert!((g.norm_squared() - s.stored_norm_squared()).abs() < 1e-14);
    }

    #[test]
    fn step_bound_enforced() {
        let p = DriveParams::new(0.1, 0.0, 1.0).unwrap();
        let g = momentum_to_grid(&MomentumState::basis(2, 0).unwrap(), 16).unwrap();
        assert!(gpe_evolve(&g, &p, 10.0, p.period() / 100.0, 4).is_err());
    }
}
